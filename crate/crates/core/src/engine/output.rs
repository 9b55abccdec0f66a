//! Run summaries and on-disk artifacts.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::world::{EventRecord, Incident, TrajectoryRecord, World};
use crate::error::{Error, Result};
use crate::mbti::MbtiProfile;
use crate::types::AgentId;

pub const TRAJECTORY_FILE: &str = "trajectory.jsonl";
pub const EVENTS_FILE: &str = "events.jsonl";
pub const INCIDENTS_FILE: &str = "incidents.jsonl";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSummary {
    pub id: AgentId,
    pub mbti: MbtiProfile,
    pub mu: Vec<f64>,
    pub gamma: f64,
    pub psi_norm: f64,
    pub final_emotion: Vec<f64>,
    pub belief_mean: f64,
    pub belief_precision: f64,
    pub activations: u64,
    pub messages_sent: u64,
    pub messages_received: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config_digest: String,
    pub seed: u64,
    pub dt: f64,
    pub horizon: f64,
    pub steps: u64,
    pub policy: String,
    pub vocabulary: Vec<String>,
    pub total_messages: u64,
    pub external_messages: u64,
    pub incidents: u64,
    pub agents: Vec<AgentSummary>,
}

impl RunSummary {
    pub fn agent(&self, id: &str) -> Option<&AgentSummary> {
        self.agents.iter().find(|a| a.id.as_str() == id)
    }
}

pub(crate) fn summarize(
    world: &World,
    digest: &str,
    events: &[EventRecord],
    incidents: u64,
) -> RunSummary {
    let agents = world
        .agents()
        .iter()
        .map(|a| AgentSummary {
            id: a.id.clone(),
            mbti: a.profile,
            mu: a.params.mu.as_slice().to_vec(),
            gamma: a.params.gamma,
            psi_norm: a.params.psi_spectral_norm(),
            final_emotion: a.state.emotion.as_slice().to_vec(),
            belief_mean: a.state.belief.mean,
            belief_precision: a.state.belief.precision,
            activations: a.activations,
            messages_sent: a.messages_sent,
            messages_received: a.messages_received,
        })
        .collect();
    let cfg = world.config();
    RunSummary {
        config_digest: digest.to_string(),
        seed: cfg.seed,
        dt: cfg.dt,
        horizon: cfg.horizon,
        steps: world.steps_done(),
        policy: world.policy_name().to_string(),
        vocabulary: world.vocabulary().labels().to_vec(),
        total_messages: events.iter().filter(|e| !e.external).count() as u64,
        external_messages: events.iter().filter(|e| e.external).count() as u64,
        incidents,
        agents,
    }
}

/// Consumer of a run as it happens.
pub trait RunSink {
    fn record(&mut self, record: &TrajectoryRecord) -> Result<()>;
    fn event(&mut self, event: &EventRecord) -> Result<()>;
    fn incident(&mut self, incident: &Incident) -> Result<()>;
}

/// Collects everything in memory.
#[derive(Debug, Clone, Default)]
pub struct MemorySink {
    pub trajectory: Vec<TrajectoryRecord>,
    pub events: Vec<EventRecord>,
    pub incidents: Vec<Incident>,
}

impl RunSink for MemorySink {
    fn record(&mut self, record: &TrajectoryRecord) -> Result<()> {
        self.trajectory.push(record.clone());
        Ok(())
    }

    fn event(&mut self, event: &EventRecord) -> Result<()> {
        self.events.push(event.clone());
        Ok(())
    }

    fn incident(&mut self, incident: &Incident) -> Result<()> {
        self.incidents.push(incident.clone());
        Ok(())
    }
}

struct JsonlFile {
    path: PathBuf,
    out: BufWriter<tempfile::NamedTempFile>,
}

impl JsonlFile {
    fn create(dir: &Path, name: &str) -> Result<Self> {
        let tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
        Ok(JsonlFile {
            path: dir.join(name),
            out: BufWriter::new(tmp),
        })
    }

    fn write<T: Serialize>(&mut self, value: &T) -> Result<()> {
        let line = serde_json::to_string(value).expect("records serialize");
        writeln!(self.out, "{line}").map_err(|e| Error::io(&self.path, e))
    }

    fn persist(self) -> Result<()> {
        let path = self.path;
        let tmp = self
            .out
            .into_inner()
            .map_err(|e| Error::io(&path, e.into_error()))?;
        tmp.persist(&path).map_err(|e| Error::io(&path, e.error))?;
        Ok(())
    }
}

/// Streams JSONL into temporary files that are renamed into place on success.
pub struct DirectorySink {
    trajectory: JsonlFile,
    events: JsonlFile,
    incidents: JsonlFile,
}

impl DirectorySink {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(DirectorySink {
            trajectory: JsonlFile::create(dir, TRAJECTORY_FILE)?,
            events: JsonlFile::create(dir, EVENTS_FILE)?,
            incidents: JsonlFile::create(dir, INCIDENTS_FILE)?,
        })
    }

    pub fn finish(self, summary: &RunSummary, dir: &Path) -> Result<()> {
        self.trajectory.persist()?;
        self.events.persist()?;
        self.incidents.persist()?;
        write_json_atomic(&dir.join(SUMMARY_FILE), summary)
    }
}

impl RunSink for DirectorySink {
    fn record(&mut self, record: &TrajectoryRecord) -> Result<()> {
        self.trajectory.write(record)
    }

    fn event(&mut self, event: &EventRecord) -> Result<()> {
        self.events.write(event)
    }

    fn incident(&mut self, incident: &Incident) -> Result<()> {
        self.incidents.write(incident)
    }
}

/// Pretty JSON written through a temp file and rename.
pub fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("value serializes");
    write_text_atomic(path, &(text + "\n"))
}

pub fn write_text_atomic(path: &Path, text: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(text.as_bytes())
        .map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| {
                Error::config(format!(
                    "{}:{}: malformed record: {e}",
                    path.display(),
                    i + 1
                ))
            })
        })
        .collect()
}
