//! World state and the per-step phase sequence.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Audience, GraphSpec, PolicyKind, SimConfig};
use crate::decision::{interaction_impulse, should_activate, update_belief, Action};
use crate::dynamics::{apply_impulse, drift_diffusion_step, project_simplex, NoiseIncrement};
use crate::error::{Error, PolicyError, Result};
use crate::mbti::{parse_mbti, MbtiProfile};
use crate::params::{synthesize_params, AgentParams};
use crate::policy::{
    analyze_message, EmotionLexicon, MessagePolicy, PolicyContext, RemotePolicy, ScriptedPolicy,
    StochasticPolicy,
};
use crate::rng::{agent_key, substream, Purpose};
use crate::types::{
    AgentId, AgentState, EmotionVector, Message, RawAffect, SocialGraph, Vocabulary,
    EXTERNAL_SPEAKER,
};

#[derive(Debug, Clone)]
pub struct Agent {
    pub id: AgentId,
    pub key: u64,
    pub profile: MbtiProfile,
    pub params: AgentParams,
    pub state: AgentState,
    /// Steps in which U exceeded Γ.
    pub activations: u64,
    pub messages_sent: u64,
    pub messages_received: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoggedMessage {
    pub text: String,
    pub va: [f64; 2],
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub step: u64,
    pub agent_id: AgentId,
    pub mbti: MbtiProfile,
    pub emotion: Vec<f64>,
    pub belief_mean: f64,
    pub belief_precision: f64,
    /// The agent spoke this step.
    pub activated: bool,
    pub message: Option<LoggedMessage>,
}

/// One delivered message (agent or external).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub t: f64,
    pub step: u64,
    pub speaker_id: AgentId,
    pub external: bool,
    pub text: String,
    pub va: [f64; 2],
    pub y: f64,
    pub listeners: Vec<AgentId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Incident {
    pub t: f64,
    pub step: u64,
    pub agent_id: AgentId,
    pub policy: String,
    pub error: String,
}

/// The affect change one delivery applied to one listener.
#[derive(Debug, Clone, PartialEq)]
pub struct Delivery {
    pub source: AgentId,
    pub listener: usize,
    pub delta: Vec<f64>,
}

/// Everything observable about one step.
#[derive(Debug, Clone)]
pub struct StepReport {
    pub step: u64,
    pub records: Vec<TrajectoryRecord>,
    pub events: Vec<EventRecord>,
    pub incidents: Vec<Incident>,
    pub deliveries: Vec<Delivery>,
    /// Affect after drift and diffusion, before any impulse.
    pub drifted: Vec<RawAffect>,
    /// Affect after impulses, before projection.
    pub raw: Vec<RawAffect>,
}

#[derive(Debug, Clone)]
struct Scheduled {
    message: Message,
    audience: Vec<usize>,
}

pub struct World {
    config: SimConfig,
    vocab: Vocabulary,
    lexicon: EmotionLexicon,
    graph: SocialGraph,
    agents: Vec<Agent>,
    policy: Box<dyn MessagePolicy>,
    step: u64,
    n_steps: u64,
    active_prev: Vec<bool>,
    mentioned_prev: Vec<bool>,
    scheduled: BTreeMap<u64, Vec<Scheduled>>,
}

impl std::fmt::Debug for World {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("World")
            .field("step", &self.step)
            .field("n_steps", &self.n_steps)
            .field("agents", &self.agents.len())
            .field("policy", &self.policy.name())
            .finish()
    }
}

/// e⁰ ~ Dirichlet(α·1), via normalized Gamma(α, 1) draws.
pub fn sample_dirichlet<R: Rng + ?Sized>(rng: &mut R, alpha: f64, k: usize) -> Result<Vec<f64>> {
    let gamma = Gamma::new(alpha, 1.0).map_err(|e| Error::config(format!("init_alpha: {e}")))?;
    let draws: Vec<f64> = (0..k).map(|_| gamma.sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    if total > 0.0 && total.is_finite() {
        Ok(draws.into_iter().map(|x| x / total).collect())
    } else {
        // every draw underflowed (tiny α): the limit is a vertex of the simplex
        let mut out = vec![0.0; k];
        out[rng.random_range(0..k)] = 1.0;
        Ok(out)
    }
}

fn reweighted(graph: SocialGraph, weight: f64) -> Result<SocialGraph> {
    let edges: Vec<(usize, usize, f64)> = (0..graph.len())
        .flat_map(|i| graph.neighbors(i).iter().map(move |&(j, _)| (i, j, weight)))
        .collect();
    SocialGraph::new(graph.nodes().to_vec(), &edges)
}

fn build_graph(config: &SimConfig, ids: &[AgentId]) -> Result<SocialGraph> {
    let index: BTreeMap<&str, usize> = ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    match &config.graph {
        GraphSpec::Complete { weight } => reweighted(SocialGraph::complete(ids.to_vec()), *weight),
        GraphSpec::Ring { weight } => reweighted(SocialGraph::ring(ids.to_vec()), *weight),
        GraphSpec::Random { p, weight } => {
            let mut rng = substream(config.seed, 0, 0, Purpose::Graph);
            let mut edges = Vec::new();
            for i in 0..ids.len() {
                for j in (i + 1)..ids.len() {
                    if rng.random_bool(*p) {
                        edges.push((i, j, *weight));
                        edges.push((j, i, *weight));
                    }
                }
            }
            SocialGraph::new(ids.to_vec(), &edges)
        }
        GraphSpec::Edges { edges, symmetric } => {
            let mut resolved = Vec::new();
            for (from, to, w) in edges {
                let (a, b) = match (index.get(from.as_str()), index.get(to.as_str())) {
                    (Some(&a), Some(&b)) => (a, b),
                    _ => {
                        return Err(Error::config(format!(
                            "edge {from} -> {to} references an unknown agent"
                        )))
                    }
                };
                resolved.push((a, b, *w));
                if *symmetric {
                    resolved.push((b, a, *w));
                }
            }
            SocialGraph::new(ids.to_vec(), &resolved)
        }
    }
}

fn build_policy(
    config: &SimConfig,
    vocab: &Vocabulary,
    lexicon: &EmotionLexicon,
) -> Box<dyn MessagePolicy> {
    match config.policy {
        PolicyKind::Stochastic => Box::new(StochasticPolicy::new(
            lexicon.clone(),
            config.policies.stochastic.clone(),
        )),
        PolicyKind::Scripted => Box::new(ScriptedPolicy::new(
            config.policies.scripted.clone().unwrap_or_default(),
        )),
        PolicyKind::Remote => {
            let remote = config
                .policies
                .remote
                .clone()
                .expect("validated: remote config present");
            Box::new(RemotePolicy::new(remote, vocab.clone(), lexicon.clone()))
        }
    }
}

fn numeric(agent: &AgentId, step: u64, detail: impl Into<String>) -> Error {
    Error::Numeric {
        agent: agent.to_string(),
        step,
        detail: detail.into(),
    }
}

impl World {
    pub fn initialize(config: SimConfig) -> Result<World> {
        World::initialize_with(config, None)
    }

    /// Like [`World::initialize`] but with a caller-supplied policy.
    pub fn initialize_with(
        config: SimConfig,
        policy: Option<Box<dyn MessagePolicy>>,
    ) -> Result<World> {
        config.validate()?;
        let vocab = config.vocabulary()?;
        let lexicon = config.lexicon(&vocab)?;
        let priors = config.prior_table()?;
        let base = config.dynamics.neutralized(&config.ablation.neutralize);
        let column_map = base.column_map(&lexicon)?;
        let k = vocab.len();

        let mut specs = config.agents.clone();
        specs.sort_by(|a, b| a.id.cmp(&b.id));
        let mut agents = Vec::with_capacity(specs.len());
        for spec in &specs {
            let id = AgentId::new(spec.id.clone());
            let profile = parse_mbti(&spec.mbti)?;
            let params = synthesize_params(profile, &base, &column_map, priors.as_ref())?;
            let key = agent_key(id.as_str());
            let mut rng = substream(config.seed, key, 0, Purpose::Init);
            let e0 = sample_dirichlet(&mut rng, config.init_alpha, k)?;
            agents.push(Agent {
                id,
                key,
                profile,
                params,
                state: AgentState {
                    emotion: RawAffect::from_slice(&e0),
                    belief: config.initial_belief,
                    history: Vec::new(),
                },
                activations: 0,
                messages_sent: 0,
                messages_received: 0,
            });
        }
        let ids: Vec<AgentId> = agents.iter().map(|a| a.id.clone()).collect();
        let graph = build_graph(&config, &ids)?;
        let policy = policy.unwrap_or_else(|| build_policy(&config, &vocab, &lexicon));
        let n = agents.len();
        let mut world = World {
            n_steps: config.steps(),
            config,
            vocab,
            lexicon,
            graph,
            agents,
            policy,
            step: 0,
            active_prev: vec![false; n],
            mentioned_prev: vec![false; n],
            scheduled: BTreeMap::new(),
        };
        for inj in world.config.injections.clone() {
            let (va_text, y_text) = analyze_message(&inj.text, &world.lexicon);
            let message = Message {
                speaker_id: AgentId::new(EXTERNAL_SPEAKER),
                text: inj.text.clone(),
                va: inj.va.unwrap_or(va_text),
                y: inj.y.unwrap_or(y_text),
                t: inj.at_t,
            };
            let audience = match &inj.audience {
                Audience::Keyword(_) => None,
                Audience::Ids(list) => Some(list.iter().map(AgentId::new).collect::<Vec<_>>()),
            };
            world.inject(inj.at_t, message, audience.as_deref())?;
        }
        Ok(world)
    }

    /// Schedule an exogenous message for the step starting at `at_t`.
    /// `audience = None` means every agent.
    pub fn inject(
        &mut self,
        at_t: f64,
        mut message: Message,
        audience: Option<&[AgentId]>,
    ) -> Result<()> {
        if !(at_t.is_finite() && at_t >= 0.0 && at_t < self.config.horizon) {
            return Err(Error::config(format!(
                "injection at t={at_t} lies outside the horizon [0, {})",
                self.config.horizon
            )));
        }
        let step = self.config.step_of(at_t);
        if step >= self.n_steps || step < self.step {
            return Err(Error::config(format!(
                "injection at t={at_t} falls on a step that will not run"
            )));
        }
        let audience = match audience {
            None => (0..self.agents.len()).collect(),
            Some(ids) => {
                let mut idx = BTreeSet::new();
                for id in ids {
                    let i = self.index_of(id).ok_or_else(|| {
                        Error::config(format!("injection audience has unknown agent {id}"))
                    })?;
                    idx.insert(i);
                }
                idx.into_iter().collect()
            }
        };
        message.speaker_id = AgentId::new(EXTERNAL_SPEAKER);
        message.t = step as f64 * self.config.dt;
        self.scheduled
            .entry(step)
            .or_default()
            .push(Scheduled { message, audience });
        Ok(())
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn lexicon(&self) -> &EmotionLexicon {
        &self.lexicon
    }

    pub fn graph(&self) -> &SocialGraph {
        &self.graph
    }

    /// Agents in ascending id order.
    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn index_of(&self, id: &AgentId) -> Option<usize> {
        self.agents.binary_search_by(|a| a.id.cmp(id)).ok()
    }

    pub fn policy_name(&self) -> &'static str {
        self.policy.name()
    }

    /// Steps completed so far.
    pub fn steps_done(&self) -> u64 {
        self.step
    }

    pub fn total_steps(&self) -> u64 {
        self.n_steps
    }

    pub fn is_finished(&self) -> bool {
        self.step >= self.n_steps
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.config.dt
    }

    /// Which agents would cross their threshold this step if every Γ were
    /// raised by `gamma_shift`. Reads the current state only.
    pub fn activation_mask(&self, gamma_shift: f64) -> Vec<bool> {
        self.agents
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let u = interaction_impulse(
                    i,
                    a.state.emotion.as_slice(),
                    a.params.mu.as_slice(),
                    &self.graph,
                    &self.active_prev,
                    self.mentioned_prev[i],
                    &self.config.activation,
                );
                should_activate(u, a.params.gamma + gamma_shift) == Action::Reply
            })
            .collect()
    }

    fn context_for(&self, i: usize) -> PolicyContext {
        let a = &self.agents[i];
        let window = self.config.history_window;
        let start = a.state.history.len().saturating_sub(window);
        let emotion = project_simplex(&a.state.emotion)
            .unwrap_or_else(|_| EmotionVector::uniform(a.state.emotion.dim()));
        PolicyContext {
            speaker_id: a.id.clone(),
            profile: a.profile,
            emotion,
            belief_mean: a.state.belief.mean,
            topic: self.config.topic.clone(),
            history: a.state.history[start..].to_vec(),
            neighbors: self
                .graph
                .neighbors(i)
                .iter()
                .map(|&(j, _)| self.agents[j].id.clone())
                .collect(),
            messages_sent: a.messages_sent as usize,
            t: self.time(),
        }
    }

    /// Advance one step.
    pub fn step(&mut self) -> Result<StepReport> {
        if self.is_finished() {
            return Err(Error::domain(format!(
                "horizon reached after {} steps",
                self.n_steps
            )));
        }
        let n = self.step;
        let dt = self.config.dt;
        let t = n as f64 * dt;
        let seed = self.config.seed;

        // (1) drift + diffusion
        let drifted: Vec<RawAffect> = self
            .agents
            .par_iter()
            .map(|a| {
                let dw = NoiseIncrement::for_step(seed, a.key, n, a.state.emotion.dim(), dt);
                drift_diffusion_step(&a.state.emotion, &a.params, dt, &dw)
            })
            .collect::<Result<_>>()?;

        // (2) activation on the start-of-step state against A_prev
        let candidates = self.activation_mask(0.0);
        for (a, &c) in self.agents.iter_mut().zip(&candidates) {
            if c {
                a.activations += 1;
            }
        }

        // (3) generation from a start-of-step snapshot, then delivery
        let speakers: Vec<usize> = (0..self.agents.len()).filter(|&i| candidates[i]).collect();
        let contexts: Vec<PolicyContext> = speakers.iter().map(|&i| self.context_for(i)).collect();
        let policy = &self.policy;
        let agents = &self.agents;
        let generated: Vec<std::result::Result<Message, PolicyError>> = speakers
            .par_iter()
            .zip(contexts.par_iter())
            .map(|(&i, ctx)| {
                let mut rng = substream(seed, agents[i].key, n, Purpose::Policy);
                policy.generate(ctx, &mut rng).and_then(|mut m| {
                    check_message(&m)?;
                    m.speaker_id = agents[i].id.clone();
                    m.t = t;
                    Ok(m)
                })
            })
            .collect();

        let mut incidents = Vec::new();
        let mut outbox: Vec<(Option<usize>, Message, Vec<usize>)> = Vec::new();
        for s in self.scheduled.remove(&n).unwrap_or_default() {
            outbox.push((None, s.message, s.audience));
        }
        for (&i, result) in speakers.iter().zip(generated) {
            match result {
                Ok(m) => {
                    let listeners = self.graph.neighbors(i).iter().map(|&(j, _)| j).collect();
                    outbox.push((Some(i), m, listeners));
                }
                Err(PolicyError::Exhausted { .. }) => {
                    log::debug!(
                        "{} has no scripted message left at step {n}",
                        self.agents[i].id
                    );
                }
                Err(err) => {
                    log::warn!("policy failed for {} at step {n}: {err}", self.agents[i].id);
                    incidents.push(Incident {
                        t,
                        step: n,
                        agent_id: self.agents[i].id.clone(),
                        policy: self.policy.name().to_string(),
                        error: err.to_string(),
                    });
                }
            }
        }

        let mut raw = drifted.clone();
        let mut spoke: Vec<Option<LoggedMessage>> = vec![None; self.agents.len()];
        let mut mentioned = vec![false; self.agents.len()];
        let mut events = Vec::with_capacity(outbox.len());
        let mut deliveries = Vec::new();
        for (source, message, listeners) in outbox {
            for &j in &listeners {
                let before = raw[j].clone();
                if self.config.jumps {
                    raw[j] = apply_impulse(&raw[j], &self.agents[j].params.psi, message.va);
                }
                let agent = &mut self.agents[j];
                agent.state.belief =
                    update_belief(agent.state.belief, message.y, self.config.obs_noise_var)?;
                agent.state.history.push(message.clone());
                agent.messages_received += 1;
                if message.mentions(&agent.id) {
                    mentioned[j] = true;
                }
                deliveries.push(Delivery {
                    source: message.speaker_id.clone(),
                    listener: j,
                    delta: (&raw[j].0 - &before.0).iter().copied().collect(),
                });
            }
            if let Some(i) = source {
                self.agents[i].messages_sent += 1;
                spoke[i] = Some(LoggedMessage {
                    text: message.text.clone(),
                    va: message.va,
                    y: message.y,
                });
            }
            events.push(EventRecord {
                t,
                step: n,
                speaker_id: message.speaker_id.clone(),
                external: source.is_none(),
                text: message.text,
                va: message.va,
                y: message.y,
                listeners: listeners
                    .iter()
                    .map(|&j| self.agents[j].id.clone())
                    .collect(),
            });
        }

        // (4) projection
        for (a, e) in self.agents.iter_mut().zip(&raw) {
            a.state.emotion = if self.config.projection {
                RawAffect::from(
                    &project_simplex(e).map_err(|nf| numeric(&a.id, n, nf.to_string()))?,
                )
            } else {
                if !e.is_finite() {
                    return Err(numeric(&a.id, n, "affect state is not finite"));
                }
                e.clone()
            };
            if !a.state.belief.mean.is_finite() || !a.state.belief.precision.is_finite() {
                return Err(numeric(&a.id, n, "belief is not finite"));
            }
        }

        // (5) records
        let t_next = (n + 1) as f64 * dt;
        let records = self
            .agents
            .iter()
            .zip(spoke.iter_mut())
            .map(|(a, m)| TrajectoryRecord {
                t: t_next,
                step: n + 1,
                agent_id: a.id.clone(),
                mbti: a.profile,
                emotion: a.state.emotion.as_slice().to_vec(),
                belief_mean: a.state.belief.mean,
                belief_precision: a.state.belief.precision,
                activated: m.is_some(),
                message: m.take(),
            })
            .collect::<Vec<_>>();

        // (6) A_prev
        self.active_prev = records.iter().map(|r| r.activated).collect();
        self.mentioned_prev = mentioned;
        self.step += 1;

        Ok(StepReport {
            step: n,
            records,
            events,
            incidents,
            deliveries,
            drifted,
            raw,
        })
    }
}

fn check_message(m: &Message) -> std::result::Result<(), PolicyError> {
    let ok = (-1.0..=1.0).contains(&m.va[0])
        && (0.0..=1.0).contains(&m.va[1])
        && (-1.0..=1.0).contains(&m.y);
    if ok {
        Ok(())
    } else {
        Err(PolicyError::Protocol(format!(
            "message out of range: va {:?}, y {}",
            m.va, m.y
        )))
    }
}
