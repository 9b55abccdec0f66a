use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::{EmotionLexicon, MessagePolicy, PolicyContext};
use crate::error::PolicyError;
use crate::types::Message;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StochasticConfig {
    /// y = clamp(belief_mean + opinion_gain · valence).
    pub opinion_gain: f64,
    /// Chance of addressing one random neighbour by id.
    pub mention_prob: f64,
}

impl Default for StochasticConfig {
    fn default() -> Self {
        StochasticConfig {
            opinion_gain: 0.2,
            mention_prob: 0.1,
        }
    }
}

/// Sample a label from the emotion vector, emit one of its templates.
pub fn stochastic_generate(
    ctx: &PolicyContext,
    lexicon: &EmotionLexicon,
    config: &StochasticConfig,
    rng: &mut dyn RngCore,
) -> Message {
    let weights: Vec<f64> = ctx.emotion.as_slice().iter().map(|w| w.max(0.0)).collect();
    let label = match WeightedIndex::new(&weights) {
        Ok(dist) => dist.sample(rng),
        Err(_) => rng.random_range(0..weights.len()),
    };
    let entry = lexicon.entry(label);
    let template = &entry.templates[rng.random_range(0..entry.templates.len())];
    let mut text = template.replace("{topic}", &ctx.topic);
    if !ctx.neighbors.is_empty()
        && config.mention_prob > 0.0
        && rng.random_bool(config.mention_prob.min(1.0))
    {
        let target = &ctx.neighbors[rng.random_range(0..ctx.neighbors.len())];
        text = format!("@{target} {text}");
    }
    let y = (ctx.belief_mean + config.opinion_gain * entry.valence).clamp(-1.0, 1.0);
    Message {
        speaker_id: ctx.speaker_id.clone(),
        text,
        va: [entry.valence, entry.arousal],
        y,
        t: ctx.t,
    }
}

#[derive(Debug, Clone)]
pub struct StochasticPolicy {
    lexicon: EmotionLexicon,
    config: StochasticConfig,
}

impl StochasticPolicy {
    pub fn new(lexicon: EmotionLexicon, config: StochasticConfig) -> Self {
        StochasticPolicy { lexicon, config }
    }
}

impl MessagePolicy for StochasticPolicy {
    fn name(&self) -> &'static str {
        "stochastic"
    }

    fn generate(&self, ctx: &PolicyContext, rng: &mut dyn RngCore) -> Result<Message, PolicyError> {
        Ok(stochastic_generate(ctx, &self.lexicon, &self.config, rng))
    }
}
