use std::collections::BTreeMap;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::{MessagePolicy, PolicyContext};
use crate::error::PolicyError;
use crate::types::Message;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptEntry {
    pub text: String,
    pub va: [f64; 2],
    pub y: f64,
}

/// Per-agent scripts keyed by agent id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedConfig {
    #[serde(default)]
    pub scripts: BTreeMap<String, Vec<ScriptEntry>>,
}

/// The speaker's next scripted entry, chosen by how many messages it has already sent.
pub fn scripted_generate(
    ctx: &PolicyContext,
    script: &[ScriptEntry],
) -> Result<Message, PolicyError> {
    let entry = script
        .get(ctx.messages_sent)
        .ok_or_else(|| PolicyError::Exhausted {
            agent: ctx.speaker_id.to_string(),
        })?;
    Ok(Message {
        speaker_id: ctx.speaker_id.clone(),
        text: entry.text.clone(),
        va: entry.va,
        y: entry.y,
        t: ctx.t,
    })
}

#[derive(Debug, Clone)]
pub struct ScriptedPolicy {
    config: ScriptedConfig,
}

impl ScriptedPolicy {
    pub fn new(config: ScriptedConfig) -> Self {
        ScriptedPolicy { config }
    }
}

impl MessagePolicy for ScriptedPolicy {
    fn name(&self) -> &'static str {
        "scripted"
    }

    fn generate(
        &self,
        ctx: &PolicyContext,
        _rng: &mut dyn RngCore,
    ) -> Result<Message, PolicyError> {
        let script = self
            .config
            .scripts
            .get(ctx.speaker_id.as_str())
            .map(Vec::as_slice)
            .unwrap_or(&[]);
        scripted_generate(ctx, script)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mbti::parse_mbti;
    use crate::types::{AgentId, EmotionVector};

    #[test]
    fn walks_script_then_exhausts() {
        let script = vec![ScriptEntry {
            text: "pumps will fail".into(),
            va: [-0.9, 0.8],
            y: -0.5,
        }];
        let mut ctx = PolicyContext {
            speaker_id: AgentId::new("a1"),
            profile: parse_mbti("ENTP").unwrap(),
            emotion: EmotionVector::uniform(6),
            belief_mean: 0.0,
            topic: String::new(),
            history: vec![],
            neighbors: vec![],
            messages_sent: 0,
            t: 1.5,
        };
        let m = scripted_generate(&ctx, &script).unwrap();
        assert_eq!(m.text, "pumps will fail");
        assert_eq!(m.va, [-0.9, 0.8]);
        assert_eq!(m.y, -0.5);
        assert_eq!(m.t, 1.5);
        ctx.messages_sent = 1;
        assert!(matches!(
            scripted_generate(&ctx, &script),
            Err(PolicyError::Exhausted { .. })
        ));
    }
}
