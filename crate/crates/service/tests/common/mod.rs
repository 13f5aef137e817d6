#![allow(dead_code)]

use std::path::Path;
use std::sync::Arc;

use anonbench_core::protocol::{
    generate_session, Expertise, Gender, ListenerProfile, Proficiency, SessionPlan, StimulusPair, StudyConfig,
};
use anonbench_core::signal::synth::{formant_pole, resonator_signal, Excitation};
use anonbench_core::signal::save_audio;
use anonbench_core::Waveform64;
use anonbench_service::{router, AppState, ServiceConfig, STUDY_KEY_HEADER};
use axum::body::{Body, Bytes};
use axum::http::{HeaderMap, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

pub const GROUPS: [&str; 2] = ["Dysphonia", "Control adults"];

pub fn profile(id: &str, native: bool, expert: bool) -> ListenerProfile {
    ListenerProfile {
        listener_id: id.to_string(),
        native_language: if native { "German" } else { "English" }.to_string(),
        german_proficiency: if native { Proficiency::Native } else { Proficiency::B2 },
        expertise: if expert { Expertise::Expert } else { Expertise::NonExpert },
        clinical_years: if expert { 5 } else { 0 },
        speech_processing_years: 0,
        engineering_years: 0,
    }
}

/// Four pairs, two per group, alternating gender.
pub fn study(listeners: Vec<ListenerProfile>) -> StudyConfig {
    let pairs = (0..4)
        .map(|i| StimulusPair {
            orig: format!("spk{i:02}_orig"),
            anon: format!("spk{i:02}_anon"),
            group: GROUPS[i / 2].to_string(),
            gender: Some(if i % 2 == 0 { Gender::Male } else { Gender::Female }),
        })
        .collect();
    let mut config = StudyConfig::new(pairs, GROUPS.iter().map(|g| g.to_string()).collect(), 20240611);
    config.listeners = listeners;
    config
}

pub fn roster() -> Vec<ListenerProfile> {
    vec![profile("P1", true, true), profile("P2", false, false), profile("P3", true, false), profile("P4", false, true)]
}

pub fn clip(seed: u64, len: usize) -> Waveform64 {
    let poles = [formant_pole(500.0, 80.0, 16000), formant_pole(1500.0, 120.0, 16000)];
    resonator_signal(&poles, Excitation::Pulses { f0: 100.0 + seed as f64 * 7.0 }, len, 16000, 0.5).unwrap()
}

/// A mono 16-bit WAV whose LIST/INFO chunk carries `title`, which must not
/// survive re-encoding.
pub fn wav_with_metadata(samples: &[i16], title: &str) -> Vec<u8> {
    let mut info = b"INFOINAM".to_vec();
    let mut name = title.as_bytes().to_vec();
    name.push(0);
    if name.len() % 2 == 1 {
        name.push(0);
    }
    info.extend((name.len() as u32).to_le_bytes());
    info.extend(&name);
    let data: Vec<u8> = samples.iter().flat_map(|s| s.to_le_bytes()).collect();

    let mut body = b"WAVE".to_vec();
    body.extend(b"fmt ");
    body.extend(16u32.to_le_bytes());
    body.extend(1u16.to_le_bytes());
    body.extend(1u16.to_le_bytes());
    body.extend(16000u32.to_le_bytes());
    body.extend(32000u32.to_le_bytes());
    body.extend(2u16.to_le_bytes());
    body.extend(16u16.to_le_bytes());
    body.extend(b"LIST");
    body.extend((info.len() as u32).to_le_bytes());
    body.extend(&info);
    body.extend(b"data");
    body.extend((data.len() as u32).to_le_bytes());
    body.extend(&data);

    let mut out = b"RIFF".to_vec();
    out.extend((body.len() as u32).to_le_bytes());
    out.extend(body);
    out
}

/// Writes one clip per stimulus. The first original carries a metadata chunk
/// naming its own stimulus id; the rest are plain `save_audio` output.
pub fn write_audio(dir: &Path, config: &StudyConfig) {
    for (i, pair) in config.pairs.iter().enumerate() {
        for (j, id) in [&pair.orig, &pair.anon].into_iter().enumerate() {
            let wave = clip((2 * i + j) as u64, 1600);
            if i == 0 && j == 0 {
                let pcm: Vec<i16> = wave.samples().iter().map(|s| (s * 32767.0).round() as i16).collect();
                std::fs::write(dir.join(format!("{id}.wav")), wav_with_metadata(&pcm, id)).unwrap();
            } else {
                save_audio(&wave, dir.join(format!("{id}.wav"))).unwrap();
            }
        }
    }
}

pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub config: StudyConfig,
}

impl Fixture {
    pub fn new(listeners: Vec<ListenerProfile>) -> Self {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir(dir.path().join("audio")).unwrap();
        let config = study(listeners);
        write_audio(&dir.path().join("audio"), &config);
        Fixture { dir, config }
    }

    pub fn store(&self) -> std::path::PathBuf {
        self.dir.path().join("responses.jsonl")
    }

    pub fn open(&self, key: Option<&str>) -> Arc<AppState> {
        AppState::open(ServiceConfig {
            study: self.config.clone(),
            audio_dir: self.dir.path().join("audio"),
            store_path: self.store(),
            study_key: key.map(str::to_string),
        })
        .unwrap()
    }

    pub fn client(&self) -> Client {
        Client::new(self.open(None))
    }

    pub fn plan(&self, listener: &str) -> SessionPlan {
        generate_session(&self.config, listener).unwrap()
    }
}

#[derive(Clone)]
pub struct Client {
    pub router: Router,
    pub key: Option<String>,
}

pub struct Reply {
    pub status: StatusCode,
    pub headers: HeaderMap,
    pub body: Bytes,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.body)
            .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&self.body)))
    }

    pub fn error_code(&self) -> String {
        self.json()["error"].as_str().unwrap().to_string()
    }
}

impl Client {
    pub fn new(app: Arc<AppState>) -> Self {
        Client { router: router(app), key: None }
    }

    pub async fn raw(&self, method: Method, uri: &str, body: Option<&[u8]>) -> Reply {
        let mut req = Request::builder().method(method).uri(uri);
        if let Some(k) = &self.key {
            req = req.header(STUDY_KEY_HEADER, k);
        }
        let req = match body {
            Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_vec())),
            None => req.body(Body::empty()),
        }
        .unwrap();
        let resp = self.router.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let headers = resp.headers().clone();
        let body = resp.into_body().collect().await.unwrap().to_bytes();
        Reply { status, headers, body }
    }

    pub async fn get(&self, uri: &str) -> Reply {
        self.raw(Method::GET, uri, None).await
    }

    pub async fn post(&self, uri: &str, body: Value) -> Reply {
        self.raw(Method::POST, uri, Some(body.to_string().as_bytes())).await
    }

    pub async fn create(&self, listener: &str) -> (String, Value) {
        let r = self.post("/session", serde_json::json!({ "listener_id": listener })).await;
        assert!(r.status.is_success(), "{}: {}", r.status, String::from_utf8_lossy(&r.body));
        let v = r.json();
        (v["session_id"].as_str().unwrap().to_string(), v)
    }

    pub async fn current(&self, session: &str) -> Value {
        let r = self.get(&format!("/session/{session}/current")).await;
        assert_eq!(r.status, StatusCode::OK);
        r.json()
    }

    pub async fn play(&self, session: &str, condition: &str, trial: usize, slot: &str) -> Reply {
        self.post(
            &format!("/session/{session}/play"),
            serde_json::json!({ "condition": condition, "trial": trial, "slot": slot }),
        )
        .await
    }

    pub async fn choose(&self, session: &str, condition: &str, trial: usize, slot: &str) -> Reply {
        self.post(
            &format!("/session/{session}/choice"),
            serde_json::json!({ "condition": condition, "trial": trial, "slot": slot }),
        )
        .await
    }

    pub async fn rate(&self, session: &str, item: usize, rating: u8) -> Reply {
        self.post(&format!("/session/{session}/rating"), serde_json::json!({ "item": item, "rating": rating })).await
    }
}

/// Every payload returned to the client while walking a session.
pub type Transcript = Vec<Value>;

/// Drives a full session: in each discrimination trial both slots are played
/// (three times in few-shot) and the original is picked whenever
/// `correct(condition, trial)` holds. Quality item `i` gets `rating(i)`.
pub async fn run_session(
    client: &Client,
    plan: &SessionPlan,
    correct: impl Fn(&str, usize) -> bool,
    rating: impl Fn(usize) -> u8,
) -> (String, Transcript) {
    let (session, created) = client.create(&plan.listener_id).await;
    let mut seen = vec![created];
    for (label, trials, plays) in [("zero_shot", &plan.zero_shot, 1), ("few_shot", &plan.few_shot, 3)] {
        for t in trials.iter() {
            for _ in 0..plays {
                for slot in ["A", "B"] {
                    let r = client.play(&session, label, t.trial_index, slot).await;
                    assert_eq!(r.status, StatusCode::OK, "{}", String::from_utf8_lossy(&r.body));
                    seen.push(r.json());
                }
            }
            seen.push(client.current(&session).await);
            let truth = format!("{:?}", t.original_slot);
            let other = if truth == "A" { "B" } else { "A" };
            let pick = if correct(label, t.trial_index) { truth.as_str() } else { other };
            let r = client.choose(&session, label, t.trial_index, pick).await;
            assert_eq!(r.status, StatusCode::OK, "{}", String::from_utf8_lossy(&r.body));
            seen.push(r.json());
        }
    }
    for item in &plan.quality {
        let r = client.rate(&session, item.item_index, rating(item.item_index)).await;
        assert_eq!(r.status, StatusCode::OK, "{}", String::from_utf8_lossy(&r.body));
        seen.push(r.json());
    }
    (session, seen)
}

/// Tokens referenced anywhere in a payload.
pub fn tokens_in(value: &Value) -> Vec<String> {
    let mut out = Vec::new();
    let mut stack = vec![value];
    while let Some(v) = stack.pop() {
        match v {
            Value::Object(map) => {
                for (k, child) in map {
                    if k == "token" {
                        out.push(child.as_str().unwrap().to_string());
                    }
                    stack.push(child);
                }
            }
            Value::Array(items) => stack.extend(items),
            _ => {}
        }
    }
    out
}
