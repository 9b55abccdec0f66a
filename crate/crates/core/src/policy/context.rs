use std::fmt::Write as _;

use crate::mbti::MbtiProfile;
use crate::types::{AgentId, EmotionVector, Message, Vocabulary};

/// Immutable snapshot handed to a policy when an agent speaks.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyContext {
    pub speaker_id: AgentId,
    pub profile: MbtiProfile,
    pub emotion: EmotionVector,
    pub belief_mean: f64,
    pub topic: String,
    /// Most recent messages, oldest first, already truncated to the window.
    pub history: Vec<Message>,
    /// Agents that will hear this message, ascending id.
    pub neighbors: Vec<AgentId>,
    /// Messages this agent has sent so far in the run.
    pub messages_sent: usize,
    pub t: f64,
}

/// Prompt built from history, rendered emotion and the persona block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptDocument {
    /// Empty when there is no history.
    pub history: String,
    pub emotion: String,
    pub persona: String,
}

impl PromptDocument {
    pub fn render(&self) -> String {
        let mut out = String::new();
        if !self.history.is_empty() {
            out.push_str("## Conversation\n");
            out.push_str(&self.history);
            out.push('\n');
        }
        out.push_str("## Emotional state\n");
        out.push_str(&self.emotion);
        out.push_str("\n\n## Persona\n");
        out.push_str(&self.persona);
        out.push('\n');
        out
    }

    /// System part (persona and emotion) for chat-style endpoints.
    pub fn system_message(&self) -> String {
        format!("{}\n\nYou currently feel: {}", self.persona, self.emotion)
    }

    /// User part: the conversation plus the instruction to post.
    pub fn user_message(&self) -> String {
        if self.history.is_empty() {
            "No one has posted yet. Write the first short post.".to_string()
        } else {
            format!("{}\n\nWrite your next short post.", self.history)
        }
    }
}

/// Top-two emotions with intensities, e.g. "anger (0.62), fear (0.21)".
/// Components that would print as 0.00 are omitted.
pub fn render_emotion(emotion: &EmotionVector, vocab: &Vocabulary) -> String {
    let mut ranked: Vec<(usize, f64)> = emotion.as_slice().iter().copied().enumerate().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let parts: Vec<String> = ranked
        .iter()
        .take(2)
        .filter(|(_, v)| *v >= 0.005)
        .map(|&(k, v)| format!("{} ({v:.2})", vocab.labels()[k]))
        .collect();
    if parts.is_empty() {
        "none".to_string()
    } else {
        parts.join(", ")
    }
}

const STYLES: [(&str, &str); 16] = [
    ("ESTJ", "Executive. Tone: blunt and organized. Verbosity: short, list-like. Assertiveness: high; call out failures and demand accountability."),
    ("ESTP", "Entrepreneur. Tone: casual, quick, a little provocative. Verbosity: very short. Assertiveness: high; react to what is happening right now."),
    ("ESFJ", "Consul. Tone: warm and community-minded. Verbosity: medium. Assertiveness: moderate; check on people and keep the group together."),
    ("ESFP", "Entertainer. Tone: upbeat and expressive. Verbosity: short with exclamations. Assertiveness: moderate; lighten the mood."),
    ("ENTJ", "Commander. Tone: decisive and critical. Verbosity: concise. Assertiveness: very high; push for efficient action and name who is responsible."),
    ("ENTP", "Debater. Tone: skeptical and witty. Verbosity: medium. Assertiveness: high; question assumptions and play devil's advocate."),
    ("ENFJ", "Protagonist. Tone: encouraging and inclusive. Verbosity: medium. Assertiveness: moderate; rally people and console those who are upset."),
    ("ENFP", "Campaigner. Tone: enthusiastic and hopeful. Verbosity: medium, spontaneous. Assertiveness: moderate; offer ideas and reassurance."),
    ("ISTJ", "Logistician. Tone: measured and factual. Verbosity: concise. Assertiveness: firm on procedure; cite concrete facts and avoid emotional language."),
    ("ISTP", "Virtuoso. Tone: detached and practical. Verbosity: minimal. Assertiveness: low; comment only on what works or fails."),
    ("ISFJ", "Defender. Tone: gentle and protective. Verbosity: medium. Assertiveness: low; offer practical help and comfort."),
    ("ISFP", "Adventurer. Tone: soft and personal. Verbosity: short. Assertiveness: low; share feelings and support quietly."),
    ("INTJ", "Architect. Tone: analytical and reserved. Verbosity: concise but dense. Assertiveness: firm; focus on systemic causes and long-term risk."),
    ("INTP", "Logician. Tone: curious and precise. Verbosity: medium, hedged. Assertiveness: low; reason through the evidence out loud."),
    ("INFJ", "Advocate. Tone: thoughtful and compassionate. Verbosity: medium. Assertiveness: moderate; look for meaning and de-escalate conflict."),
    ("INFP", "Mediator. Tone: idealistic and kind. Verbosity: medium. Assertiveness: low; defend the vulnerable and seek harmony."),
];

/// The fixed persona instruction block for a type.
pub fn style_block(profile: MbtiProfile) -> String {
    let code = profile.code();
    let text = STYLES
        .iter()
        .find(|(c, _)| *c == code)
        .map(|(_, t)| *t)
        .expect("style table covers all sixteen types");
    format!("You are a social-media user with personality type {code}, the {text}")
}

/// Deterministic concatenation of history window, rendered emotion and persona.
pub fn assemble_context(ctx: &PolicyContext, vocab: &Vocabulary) -> PromptDocument {
    let mut history = String::new();
    for (i, m) in ctx.history.iter().enumerate() {
        if i > 0 {
            history.push('\n');
        }
        let _ = write!(history, "[t={:.2}] {}: {}", m.t, m.speaker_id, m.text);
    }
    let mut persona = style_block(ctx.profile);
    let _ = write!(
        persona,
        "\nTopic: {}\nYour current stance on the topic is {:+.2} on a scale from -1 (strongly negative) to +1 (strongly positive).",
        ctx.topic, ctx.belief_mean
    );
    PromptDocument {
        history,
        emotion: render_emotion(&ctx.emotion, vocab),
        persona,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mbti::parse_mbti;

    fn ctx(history: Vec<Message>, emotion: EmotionVector, code: &str) -> PolicyContext {
        PolicyContext {
            speaker_id: AgentId::new("a1"),
            profile: parse_mbti(code).unwrap(),
            emotion,
            belief_mean: 0.25,
            topic: "heavy rain".into(),
            history,
            neighbors: vec![],
            messages_sent: 0,
            t: 0.0,
        }
    }

    #[test]
    fn empty_history_omits_conversation() {
        let vocab = Vocabulary::default();
        let doc = assemble_context(&ctx(vec![], EmotionVector::uniform(6), "INFP"), &vocab);
        assert!(doc.history.is_empty());
        let text = doc.render();
        assert!(!text.contains("## Conversation"));
        assert!(text.contains("## Emotional state") && text.contains("## Persona"));
    }

    #[test]
    fn rendering_is_deterministic() {
        let vocab = Vocabulary::default();
        let m = Message {
            speaker_id: AgentId::new("a2"),
            text: "pumps will fail".into(),
            va: [-0.7, 0.8],
            y: -0.7,
            t: 2.0,
        };
        let c = ctx(
            vec![m],
            EmotionVector::new(vec![0.1, 0.1, 0.1, 0.1, 0.5, 0.1]).unwrap(),
            "ENTP",
        );
        assert_eq!(
            assemble_context(&c, &vocab).render(),
            assemble_context(&c, &vocab).render()
        );
        assert!(assemble_context(&c, &vocab)
            .history
            .contains("[t=2.00] a2: pumps will fail"));
    }

    #[test]
    fn pure_neutral_renders_single_label() {
        let vocab = Vocabulary::default();
        let doc = assemble_context(
            &ctx(vec![], EmotionVector::point_mass(6, 0), "ISTJ"),
            &vocab,
        );
        assert_eq!(doc.emotion, "neutral (1.00)");
    }

    #[test]
    fn top_two_ordering() {
        let vocab = Vocabulary::default();
        let e = EmotionVector::new(vec![0.1, 0.05, 0.05, 0.2, 0.45, 0.15]).unwrap();
        assert_eq!(
            render_emotion(&e, &vocab),
            "anger (0.45), frustration (0.20)"
        );
    }

    #[test]
    fn persona_blocks_are_distinct() {
        let blocks: std::collections::BTreeSet<String> =
            MbtiProfile::all().into_iter().map(style_block).collect();
        assert_eq!(blocks.len(), 16);
    }
}
