//! Append-only JSON-lines event log. The first line records the study
//! configuration; every later line is a session creation, a play, or a
//! response. Each append is flushed and synced before it returns.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use anonbench_core::protocol::{Condition, ResponseRecord, Slot, StudyConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Corrupt { path: PathBuf, line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum StoreEvent {
    Study {
        config: StudyConfig,
    },
    SessionCreated {
        session_id: String,
        listener_id: String,
        /// Stimulus id to the opaque audio token minted for this session.
        tokens: BTreeMap<String, String>,
        timestamp_ms: u64,
    },
    Play {
        session_id: String,
        condition: Condition,
        trial: usize,
        slot: Slot,
        timestamp_ms: u64,
    },
    Response {
        session_id: String,
        record: ResponseRecord,
    },
}

#[derive(Debug)]
pub struct EventLog {
    path: PathBuf,
    file: File,
    events: Vec<StoreEvent>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_path_buf(), source }
}

/// Parses a log. A final line without its newline that fails to parse is a
/// torn write and is dropped. Returns the events, the byte length of the
/// valid prefix, and whether that prefix lacks a trailing newline.
fn parse_log(path: &Path, bytes: &[u8]) -> Result<(Vec<StoreEvent>, u64, bool), StoreError> {
    let mut events = Vec::new();
    let mut valid_len = 0usize;
    let mut offset = 0usize;
    let mut number = 0;
    while offset < bytes.len() {
        number += 1;
        let (line, next, terminated) = match bytes[offset..].iter().position(|&b| b == b'\n') {
            Some(i) => (&bytes[offset..offset + i], offset + i + 1, true),
            None => (&bytes[offset..], bytes.len(), false),
        };
        offset = next;
        if line.iter().all(u8::is_ascii_whitespace) {
            if terminated {
                valid_len = offset;
            }
            continue;
        }
        match serde_json::from_slice::<StoreEvent>(line) {
            Ok(event) => {
                events.push(event);
                valid_len = offset;
            }
            Err(e) if !terminated => {
                log::warn!("{}:{number}: dropping torn final line ({e})", path.display());
            }
            Err(e) => {
                return Err(StoreError::Corrupt { path: path.to_path_buf(), line: number, message: e.to_string() });
            }
        }
    }
    let unterminated = valid_len > 0 && bytes[valid_len - 1] != b'\n';
    Ok((events, valid_len as u64, unterminated))
}

/// Reads every event without opening the log for writing.
pub fn read_events(path: impl AsRef<Path>) -> Result<Vec<StoreEvent>, StoreError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    Ok(parse_log(path, &bytes)?.0)
}

impl EventLog {
    /// Opens or creates the log, truncating a torn final line.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref().to_path_buf();
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(&path)
            .map_err(io_err(&path))?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes).map_err(io_err(&path))?;
        let (events, valid_len, unterminated) = parse_log(&path, &bytes)?;
        if valid_len < bytes.len() as u64 {
            file.set_len(valid_len).map_err(io_err(&path))?;
        }
        if unterminated {
            file.write_all(b"\n").map_err(io_err(&path))?;
        }
        file.sync_all().map_err(io_err(&path))?;
        Ok(Self { path, file, events })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn events(&self) -> &[StoreEvent] {
        &self.events
    }

    /// Writes one event and syncs it to disk.
    pub fn append(&mut self, event: StoreEvent) -> Result<(), StoreError> {
        let mut line = serde_json::to_vec(&event).expect("store events always serialize");
        line.push(b'\n');
        self.file.write_all(&line).map_err(io_err(&self.path))?;
        self.file.sync_data().map_err(io_err(&self.path))?;
        self.events.push(event);
        Ok(())
    }
}
