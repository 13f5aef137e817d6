//! Directory-to-directory anonymization with a JSON manifest.

use std::path::{Path, PathBuf};

use anonbench_core::anonymizer::anonymize;
use anonbench_core::signal::{load_audio, save_audio};
use anonbench_core::{McAdamsConfig64, Waveform64};
use serde::{Deserialize, Serialize};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub input: PathBuf,
    pub output: PathBuf,
    pub alpha: f64,
    pub order: usize,
    pub frames: usize,
    pub clipped_frames: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub input: PathBuf,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub alpha: f64,
    pub order: usize,
    pub frame_length: usize,
    pub hop: usize,
    pub angle_clamp_epsilon: f64,
    pub files: Vec<ManifestEntry>,
    pub failures: Vec<Failure>,
}

impl Manifest {
    pub fn succeeded(&self) -> bool {
        self.failures.is_empty()
    }
}

fn is_wav(path: &Path) -> bool {
    path.is_file() && path.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav"))
}

fn process(input: &Path, output: &Path, config: &McAdamsConfig64) -> Result<ManifestEntry, String> {
    let wave: Waveform64 = load_audio(input).map_err(|e| e.to_string())?;
    let out = anonymize(&wave, config).map_err(|e| e.to_string())?;
    save_audio(&out.waveform, output).map_err(|e| e.to_string())?;
    Ok(ManifestEntry {
        input: input.to_path_buf(),
        output: output.to_path_buf(),
        alpha: config.alpha,
        order: config.lpc_order,
        frames: out.stats.frames,
        clipped_frames: out.stats.clipped_frames,
    })
}

/// Anonymizes every `.wav` file in `input_dir` (sorted by name) into
/// `output_dir` under the same file name, then writes the manifest there.
/// Per-file failures are recorded rather than aborting the batch.
pub fn run_batch(input_dir: &Path, output_dir: &Path, config: &McAdamsConfig64) -> std::io::Result<Manifest> {
    std::fs::create_dir_all(output_dir)?;
    if std::fs::canonicalize(input_dir)? == std::fs::canonicalize(output_dir)? {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidInput,
            "output directory must differ from the input directory",
        ));
    }
    let mut inputs: Vec<PathBuf> = std::fs::read_dir(input_dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    inputs.retain(|p| is_wav(p));
    inputs.sort();

    let mut manifest = Manifest {
        alpha: config.alpha,
        order: config.lpc_order,
        frame_length: config.frame_length,
        hop: config.hop,
        angle_clamp_epsilon: config.angle_clamp_epsilon,
        files: Vec::new(),
        failures: Vec::new(),
    };
    for input in inputs {
        let output = output_dir.join(input.file_name().expect("listed file has a name"));
        match process(&input, &output, config) {
            Ok(entry) => {
                log::info!("{} -> {} ({} frames)", input.display(), output.display(), entry.frames);
                manifest.files.push(entry);
            }
            Err(error) => {
                log::error!("{}: {error}", input.display());
                manifest.failures.push(Failure { input, error });
            }
        }
    }
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(output_dir.join(MANIFEST_NAME), text + "\n")?;
    Ok(manifest)
}
