//! Domain types shared across the simulator.

use std::collections::BTreeSet;
use std::fmt;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for the simplex invariant on projected emotion vectors.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Ordered emotion vocabulary. Its length is the state dimension K.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vocabulary(Vec<String>);

impl Vocabulary {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::config("emotion vocabulary is empty"));
        }
        let mut seen = BTreeSet::new();
        for l in &labels {
            let norm = l.trim().to_lowercase();
            if norm.is_empty() {
                return Err(Error::config("emotion vocabulary contains an empty label"));
            }
            if !seen.insert(norm) {
                return Err(Error::config(format!("duplicate emotion label {l:?}")));
            }
        }
        Ok(Vocabulary(
            labels
                .into_iter()
                .map(|l| l.trim().to_lowercase())
                .collect(),
        ))
    }

    pub fn labels(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        let norm = label.trim().to_lowercase();
        self.0.iter().position(|l| *l == norm)
    }
}

impl Default for Vocabulary {
    /// neutral, happy, consoling, frustration, anger, fear
    fn default() -> Self {
        Vocabulary(
            [
                "neutral",
                "happy",
                "consoling",
                "frustration",
                "anger",
                "fear",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        )
    }
}

/// Unconstrained affect between projections.
#[derive(Debug, Clone, PartialEq)]
pub struct RawAffect(pub DVector<f64>);

impl RawAffect {
    pub fn from_slice(v: &[f64]) -> Self {
        RawAffect(DVector::from_column_slice(v))
    }

    pub fn zeros(k: usize) -> Self {
        RawAffect(DVector::zeros(k))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl From<&EmotionVector> for RawAffect {
    fn from(e: &EmotionVector) -> Self {
        RawAffect(e.0.clone())
    }
}

/// A point on the probability simplex over the vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct EmotionVector(DVector<f64>);

impl EmotionVector {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::domain("emotion vector is empty"));
        }
        if components.iter().any(|&c| !c.is_finite() || c < 0.0) {
            return Err(Error::domain(
                "emotion components must be finite and non-negative",
            ));
        }
        let sum: f64 = components.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::domain(format!(
                "emotion components sum to {sum}, not 1"
            )));
        }
        Ok(EmotionVector(DVector::from_vec(components)))
    }

    /// Callers guarantee the simplex invariant (projection output).
    pub(crate) fn from_projected(v: DVector<f64>) -> Self {
        EmotionVector(v)
    }

    pub fn uniform(k: usize) -> Self {
        EmotionVector(DVector::from_element(k, 1.0 / k as f64))
    }

    pub fn point_mass(k: usize, index: usize) -> Self {
        let mut v = DVector::zeros(k);
        v[index] = 1.0;
        EmotionVector(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub String);

impl AgentId {
    pub fn new(id: impl Into<String>) -> Self {
        AgentId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Speaker id reserved for exogenous scenario messages.
pub const EXTERNAL_SPEAKER: &str = "__external__";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub speaker_id: AgentId,
    pub text: String,
    /// (valence in [-1, 1], arousal in [0, 1])
    pub va: [f64; 2],
    /// Opinion observation in [-1, 1].
    pub y: f64,
    pub t: f64,
}

impl Message {
    /// Whole-word, case-sensitive check for an agent identifier in the text.
    pub fn mentions(&self, id: &AgentId) -> bool {
        let target = id.as_str();
        !target.is_empty()
            && self
                .text
                .split(|c: char| !(c.is_alphanumeric() || c == '_' || c == '-'))
                .any(|tok| tok == target)
    }
}

/// Scalar Gaussian opinion belief.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Belief {
    pub mean: f64,
    pub precision: f64,
}

impl Default for Belief {
    fn default() -> Self {
        Belief {
            mean: 0.0,
            precision: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AgentState {
    /// Affect at the start of the step. On the simplex whenever projection is on.
    pub emotion: RawAffect,
    pub belief: Belief,
    pub history: Vec<Message>,
}

/// Directed weighted graph. `neighbors(i)` lists the agents that hear `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SocialGraph {
    nodes: Vec<AgentId>,
    out: Vec<Vec<(usize, f64)>>,
}

impl SocialGraph {
    pub fn new(nodes: Vec<AgentId>, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let n = nodes.len();
        let mut out = vec![Vec::new(); n];
        for &(from, to, w) in edges {
            if from >= n || to >= n {
                return Err(Error::config(format!(
                    "edge ({from}, {to}) references a missing node"
                )));
            }
            if from == to {
                return Err(Error::config(format!("self-loop on {}", nodes[from])));
            }
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::config(format!(
                    "edge {} -> {} has weight {w} outside [0, 1]",
                    nodes[from], nodes[to]
                )));
            }
            if w > 0.0 {
                match out[from].iter_mut().find(|(j, _)| *j == to) {
                    Some(entry) => entry.1 = w,
                    None => out[from].push((to, w)),
                }
            }
        }
        for adj in &mut out {
            adj.sort_by_key(|&(j, _)| j);
        }
        Ok(SocialGraph { nodes, out })
    }

    pub fn complete(nodes: Vec<AgentId>) -> Self {
        let n = nodes.len();
        let out = (0..n)
            .map(|i| (0..n).filter(|&j| j != i).map(|j| (j, 1.0)).collect())
            .collect();
        SocialGraph { nodes, out }
    }

    /// Undirected ring; each node hears its two neighbours.
    pub fn ring(nodes: Vec<AgentId>) -> Self {
        let n = nodes.len();
        let mut edges = Vec::new();
        if n > 1 {
            for i in 0..n {
                let j = (i + 1) % n;
                if i != j {
                    edges.push((i, j, 1.0));
                    edges.push((j, i, 1.0));
                }
            }
        }
        SocialGraph::new(nodes, &edges).expect("ring edges are valid")
    }

    pub fn nodes(&self) -> &[AgentId] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.out[i]
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.out[i]
            .iter()
            .find(|(k, _)| *k == j)
            .map(|&(_, w)| w)
            .unwrap_or(0.0)
    }
}
