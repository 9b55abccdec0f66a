//! Orchestration: initialization, the step loop, injections and run output.

mod config;
mod output;
mod world;

use std::path::Path;

pub use config::{
    Ablation, AgentSpec, Audience, GraphSpec, InjectionSpec, PolicyKind, PolicySettings,
    PriorsSource, SimConfig,
};
pub use output::{
    read_jsonl, write_json_atomic, write_text_atomic, AgentSummary, DirectorySink, MemorySink,
    RunSink, RunSummary, EVENTS_FILE, INCIDENTS_FILE, SUMMARY_FILE, TRAJECTORY_FILE,
};
pub use world::{
    sample_dirichlet, Agent, Delivery, EventRecord, Incident, LoggedMessage, StepReport,
    TrajectoryRecord, World,
};

use crate::error::Result;

/// In-memory result of a complete run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trajectory: Vec<TrajectoryRecord>,
    pub events: Vec<EventRecord>,
    pub incidents: Vec<Incident>,
    pub summary: RunSummary,
}

/// Step `world` to its horizon, streaming everything into `sink`.
pub fn run_world(mut world: World, sink: &mut dyn RunSink) -> Result<RunSummary> {
    let digest = world.config().digest();
    let mut events = Vec::new();
    let mut incidents = 0u64;
    while !world.is_finished() {
        let report = world.step()?;
        for r in &report.records {
            sink.record(r)?;
        }
        for e in &report.events {
            sink.event(e)?;
        }
        for i in &report.incidents {
            sink.incident(i)?;
        }
        incidents += report.incidents.len() as u64;
        events.extend(report.events);
    }
    Ok(output::summarize(&world, &digest, &events, incidents))
}

pub fn run(config: SimConfig) -> Result<RunOutput> {
    let world = World::initialize(config)?;
    let mut sink = MemorySink::default();
    let summary = run_world(world, &mut sink)?;
    Ok(RunOutput {
        trajectory: sink.trajectory,
        events: sink.events,
        incidents: sink.incidents,
        summary,
    })
}

/// Run and write trajectory, events, incidents and summary into `dir`.
/// Files only appear once the whole run has succeeded.
pub fn run_to_dir(config: SimConfig, dir: &Path) -> Result<RunSummary> {
    let world = World::initialize(config)?;
    let mut sink = DirectorySink::create(dir)?;
    let summary = run_world(world, &mut sink)?;
    sink.finish(&summary, dir)?;
    Ok(summary)
}
