//! Simulation config: a single JSON document, unknown keys rejected.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::decision::ActivationWeights;
use crate::error::{Error, Result};
use crate::mbti::{parse_mbti, Axis};
use crate::params::DynamicsDefaults;
use crate::policy::{
    EmotionLexicon, LexiconEntry, RemoteConfig, ScriptedConfig, StochasticConfig,
    DEFAULT_HISTORY_WINDOW,
};
use crate::priors::PriorTable;
use crate::types::{Belief, Vocabulary, EXTERNAL_SPEAKER};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub id: String,
    pub mbti: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GraphSpec {
    /// Everyone hears everyone.
    Complete {
        #[serde(default = "default_one")]
        weight: f64,
    },
    /// Undirected ring.
    Ring {
        #[serde(default = "default_one")]
        weight: f64,
    },
    /// Undirected Erdős–Rényi graph with edge probability `p`.
    Random {
        p: f64,
        #[serde(default = "default_one")]
        weight: f64,
    },
    /// Explicit (from, to, weight) edges. `from`'s messages reach `to`.
    Edges {
        edges: Vec<(String, String, f64)>,
        #[serde(default = "yes")]
        symmetric: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PriorsSource {
    /// The bundled six-emotion table.
    #[default]
    Shipped,
    Uniform,
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    #[default]
    Stochastic,
    Scripted,
    Remote,
}

impl std::str::FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stochastic" => Ok(PolicyKind::Stochastic),
            "scripted" => Ok(PolicyKind::Scripted),
            "remote" => Ok(PolicyKind::Remote),
            other => Err(Error::config(format!(
                "unknown policy {other:?} (expected stochastic, scripted or remote)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PolicySettings {
    #[serde(default)]
    pub stochastic: StochasticConfig,
    #[serde(default)]
    pub scripted: Option<ScriptedConfig>,
    #[serde(default)]
    pub remote: Option<RemoteConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Ablation {
    /// Axes whose multiplier pair is replaced by its geometric mean.
    #[serde(default)]
    pub neutralize: Vec<Axis>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Audience {
    /// The keyword "all".
    Keyword(String),
    Ids(Vec<String>),
}

impl Default for Audience {
    fn default() -> Self {
        Audience::Keyword("all".into())
    }
}

/// Exogenous message delivered at the step starting at `at_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InjectionSpec {
    pub at_t: f64,
    pub text: String,
    /// Filled by the analyzer when absent.
    #[serde(default)]
    pub va: Option<[f64; 2]>,
    #[serde(default)]
    pub y: Option<f64>,
    #[serde(default)]
    pub audience: Audience,
}

impl Default for GraphSpec {
    fn default() -> Self {
        GraphSpec::Complete { weight: 1.0 }
    }
}

fn yes() -> bool {
    true
}

fn default_dt() -> f64 {
    0.1
}

fn default_one() -> f64 {
    1.0
}

fn default_window() -> usize {
    DEFAULT_HISTORY_WINDOW
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub horizon: f64,
    #[serde(default)]
    pub topic: String,
    #[serde(default)]
    pub vocabulary: Option<Vec<String>>,
    #[serde(default)]
    pub lexicon: Option<Vec<LexiconEntry>>,
    pub agents: Vec<AgentSpec>,
    #[serde(default)]
    pub graph: GraphSpec,
    #[serde(default)]
    pub dynamics: DynamicsDefaults,
    #[serde(default)]
    pub priors: PriorsSource,
    #[serde(default)]
    pub activation: ActivationWeights,
    /// σ²_obs for belief updates.
    #[serde(default = "default_one")]
    pub obs_noise_var: f64,
    /// Dirichlet concentration for the initial emotion state.
    #[serde(default = "default_one")]
    pub init_alpha: f64,
    #[serde(default)]
    pub initial_belief: Belief,
    #[serde(default)]
    pub policy: PolicyKind,
    #[serde(default)]
    pub policies: PolicySettings,
    #[serde(default = "default_window")]
    pub history_window: usize,
    #[serde(default)]
    pub ablation: Ablation,
    #[serde(default = "yes")]
    pub projection: bool,
    #[serde(default = "yes")]
    pub jumps: bool,
    #[serde(default)]
    pub injections: Vec<InjectionSpec>,
}

impl SimConfig {
    /// A config with defaults everywhere except the required fields.
    pub fn new(seed: u64, horizon: f64, agents: Vec<AgentSpec>) -> Self {
        SimConfig {
            seed,
            dt: default_dt(),
            horizon,
            topic: String::new(),
            vocabulary: None,
            lexicon: None,
            agents,
            graph: GraphSpec::default(),
            dynamics: DynamicsDefaults::default(),
            priors: PriorsSource::default(),
            activation: ActivationWeights::default(),
            obs_noise_var: 1.0,
            init_alpha: 1.0,
            initial_belief: Belief::default(),
            policy: PolicyKind::default(),
            policies: PolicySettings::default(),
            history_window: DEFAULT_HISTORY_WINDOW,
            ablation: Ablation::default(),
            projection: true,
            jumps: true,
            injections: Vec::new(),
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::config(format!("invalid config: {e}")))
    }

    /// Load from disk; relative prior-table paths resolve against the config's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = SimConfig::from_json(&text)?;
        if let PriorsSource::File(p) = &mut cfg.priors {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn steps(&self) -> u64 {
        (self.horizon / self.dt + 1e-9).floor() as u64
    }

    /// Step index at which an injection at `at_t` is delivered.
    pub fn step_of(&self, at_t: f64) -> u64 {
        (at_t / self.dt).round() as u64
    }

    /// SHA-256 of the canonical JSON serialization.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn vocabulary(&self) -> Result<Vocabulary> {
        match &self.vocabulary {
            Some(labels) => Vocabulary::new(labels.clone()),
            None => Ok(Vocabulary::default()),
        }
    }

    pub fn lexicon(&self, vocab: &Vocabulary) -> Result<EmotionLexicon> {
        match &self.lexicon {
            Some(entries) => EmotionLexicon::new(entries.clone(), vocab),
            None => EmotionLexicon::new(EmotionLexicon::default().entries().to_vec(), vocab),
        }
    }

    /// The prior table, or `None` for uniform baselines.
    pub fn prior_table(&self) -> Result<Option<PriorTable>> {
        match &self.priors {
            PriorsSource::Shipped => Ok(Some(PriorTable::shipped())),
            PriorsSource::Uniform => Ok(None),
            PriorsSource::File(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                PriorTable::from_json(&text).map(Some)
            }
        }
    }

    /// Structural checks that need no I/O.
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::config(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.horizon.is_finite() && self.horizon >= self.dt) {
            return Err(Error::config(format!(
                "horizon {} must be at least dt {}",
                self.horizon, self.dt
            )));
        }
        if self.agents.is_empty() {
            return Err(Error::config("no agents configured"));
        }
        let mut ids = BTreeSet::new();
        for a in &self.agents {
            if a.id.is_empty() || a.id == EXTERNAL_SPEAKER {
                return Err(Error::config(format!("invalid agent id {:?}", a.id)));
            }
            if !ids.insert(a.id.as_str()) {
                return Err(Error::config(format!("duplicate agent id {:?}", a.id)));
            }
            parse_mbti(&a.mbti).map_err(|e| Error::config(format!("agent {}: {e}", a.id)))?;
        }
        let vocab = self.vocabulary()?;
        self.lexicon(&vocab)?;
        self.dynamics.validate()?;
        if let Some(rows) = &self.dynamics.psi_columns {
            if rows.len() != vocab.len() {
                return Err(Error::config(format!(
                    "dynamics.psi_columns has {} rows, vocabulary has {}",
                    rows.len(),
                    vocab.len()
                )));
            }
        }
        if matches!(self.priors, PriorsSource::Shipped) && vocab != Vocabulary::default() {
            return Err(Error::config(
                "the shipped prior table uses the default vocabulary; supply priors as a file or use \"uniform\"",
            ));
        }
        self.activation.validate()?;
        if !(self.obs_noise_var.is_finite() && self.obs_noise_var > 0.0) {
            return Err(Error::config("obs_noise_var must be positive"));
        }
        if !(self.init_alpha.is_finite() && self.init_alpha > 0.0) {
            return Err(Error::config("init_alpha must be positive"));
        }
        if !(self.initial_belief.precision.is_finite() && self.initial_belief.precision > 0.0) {
            return Err(Error::config("initial_belief.precision must be positive"));
        }
        if !self.initial_belief.mean.is_finite() {
            return Err(Error::config("initial_belief.mean must be finite"));
        }
        match self.policy {
            PolicyKind::Remote if self.policies.remote.is_none() => {
                return Err(Error::config(
                    "remote policy selected but policies.remote is not configured",
                ));
            }
            PolicyKind::Remote => {
                let r = self.policies.remote.as_ref().expect("checked above");
                if r.url.trim().is_empty() {
                    return Err(Error::config("policies.remote.url is empty"));
                }
            }
            _ => {}
        }
        let s = &self.policies.stochastic;
        if !(0.0..=1.0).contains(&s.mention_prob) || !s.opinion_gain.is_finite() {
            return Err(Error::config(
                "stochastic.mention_prob must be in [0, 1] and opinion_gain finite",
            ));
        }
        if let Some(scripted) = &self.policies.scripted {
            for (id, entries) in &scripted.scripts {
                if !ids.contains(id.as_str()) {
                    return Err(Error::config(format!("script for unknown agent {id:?}")));
                }
                for e in entries {
                    check_va(e.va, e.y)
                        .map_err(|m| Error::config(format!("script for {id}: {m}")))?;
                }
            }
        }
        match &self.graph {
            GraphSpec::Complete { weight } | GraphSpec::Ring { weight }
                if !(0.0..=1.0).contains(weight) =>
            {
                return Err(Error::config(format!(
                    "graph.weight must be in [0, 1], got {weight}"
                )));
            }
            GraphSpec::Random { p, weight }
                if !(0.0..=1.0).contains(p) || !(0.0..=1.0).contains(weight) =>
            {
                return Err(Error::config(format!(
                    "graph.p and graph.weight must be in [0, 1], got {p} and {weight}"
                )));
            }
            GraphSpec::Edges { edges, .. } => {
                for (from, to, w) in edges {
                    for end in [from, to] {
                        if !ids.contains(end.as_str()) {
                            return Err(Error::config(format!(
                                "graph edge references unknown agent {end:?}"
                            )));
                        }
                    }
                    if from == to {
                        return Err(Error::config(format!(
                            "graph edge is a self-loop on {from:?}"
                        )));
                    }
                    if !(0.0..=1.0).contains(w) {
                        return Err(Error::config(format!(
                            "graph edge weight {w} outside [0, 1]"
                        )));
                    }
                }
            }
            _ => {}
        }
        let steps = self.steps();
        for inj in &self.injections {
            if !(inj.at_t.is_finite() && inj.at_t >= 0.0 && inj.at_t < self.horizon)
                || self.step_of(inj.at_t) >= steps
            {
                return Err(Error::config(format!(
                    "injection at t={} lies outside the horizon [0, {})",
                    inj.at_t, self.horizon
                )));
            }
            if let Some(va) = inj.va {
                check_va(va, inj.y.unwrap_or(0.0))
                    .map_err(|m| Error::config(format!("injection: {m}")))?;
            }
            if let Some(y) = inj.y {
                check_va([0.0, 0.0], y).map_err(|m| Error::config(format!("injection: {m}")))?;
            }
            match &inj.audience {
                Audience::Keyword(k) if k != "all" => {
                    return Err(Error::config(format!(
                        "injection audience {k:?} is not \"all\" or a list of ids"
                    )));
                }
                Audience::Ids(list) => {
                    if let Some(unknown) = list.iter().find(|id| !ids.contains(id.as_str())) {
                        return Err(Error::config(format!(
                            "injection audience has unknown agent {unknown:?}"
                        )));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}

fn check_va(va: [f64; 2], y: f64) -> std::result::Result<(), String> {
    if !(-1.0..=1.0).contains(&va[0]) || !(0.0..=1.0).contains(&va[1]) {
        return Err(format!("va {va:?} outside [-1, 1] x [0, 1]"));
    }
    if !(-1.0..=1.0).contains(&y) {
        return Err(format!("y {y} outside [-1, 1]"));
    }
    Ok(())
}
