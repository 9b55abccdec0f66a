use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::Vocabulary;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LexiconEntry {
    pub label: String,
    pub valence: f64,
    pub arousal: f64,
    /// Single words that signal this emotion in free text.
    pub terms: Vec<String>,
    /// Message templates; `{topic}` is substituted.
    pub templates: Vec<String>,
}

/// Valence/arousal grounding for every emotion label, ordered like the vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmotionLexicon {
    entries: Vec<LexiconEntry>,
}

impl EmotionLexicon {
    /// Build a lexicon aligned to `vocab`. Every label must be covered exactly once
    /// and no term may belong to two labels.
    pub fn new(entries: Vec<LexiconEntry>, vocab: &Vocabulary) -> Result<Self> {
        let mut by_label: BTreeMap<String, LexiconEntry> = BTreeMap::new();
        for mut e in entries {
            e.label = e.label.trim().to_lowercase();
            if !(-1.0..=1.0).contains(&e.valence) || !(0.0..=1.0).contains(&e.arousal) {
                return Err(Error::config(format!(
                    "lexicon entry {:?}: valence must be in [-1, 1] and arousal in [0, 1]",
                    e.label
                )));
            }
            if e.templates.is_empty() {
                return Err(Error::config(format!(
                    "lexicon entry {:?} has no templates",
                    e.label
                )));
            }
            e.terms = e.terms.iter().map(|t| t.trim().to_lowercase()).collect();
            let label = e.label.clone();
            if by_label.insert(label.clone(), e).is_some() {
                return Err(Error::config(format!("lexicon lists {label:?} twice")));
            }
        }
        let mut ordered = Vec::with_capacity(vocab.len());
        for label in vocab.labels() {
            match by_label.remove(label) {
                Some(e) => ordered.push(e),
                None => {
                    return Err(Error::config(format!(
                        "lexicon does not cover emotion {label:?}"
                    )))
                }
            }
        }
        if let Some(extra) = by_label.keys().next() {
            return Err(Error::config(format!(
                "lexicon label {extra:?} is not in the vocabulary"
            )));
        }
        let mut owner: BTreeMap<&str, &str> = BTreeMap::new();
        for e in &ordered {
            for t in &e.terms {
                if let Some(prev) = owner.insert(t.as_str(), e.label.as_str()) {
                    if prev != e.label {
                        return Err(Error::config(format!(
                            "lexicon term {t:?} belongs to both {prev:?} and {:?}",
                            e.label
                        )));
                    }
                }
            }
        }
        Ok(EmotionLexicon { entries: ordered })
    }

    pub fn entries(&self) -> &[LexiconEntry] {
        &self.entries
    }

    pub fn entry(&self, k: usize) -> &LexiconEntry {
        &self.entries[k]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn valences(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.valence).collect()
    }

    /// (valence, arousal) of the label owning `term`, if any.
    pub fn lookup_term(&self, term: &str) -> Option<[f64; 2]> {
        self.entries
            .iter()
            .find(|e| e.terms.iter().any(|t| t == term))
            .map(|e| [e.valence, e.arousal])
    }
}

fn entry(
    label: &str,
    valence: f64,
    arousal: f64,
    terms: &[&str],
    templates: &[&str],
) -> LexiconEntry {
    LexiconEntry {
        label: label.to_string(),
        valence,
        arousal,
        terms: terms.iter().map(|s| s.to_string()).collect(),
        templates: templates.iter().map(|s| s.to_string()).collect(),
    }
}

impl Default for EmotionLexicon {
    fn default() -> Self {
        let entries = vec![
            entry(
                "neutral",
                0.0,
                0.1,
                &[
                    "noted",
                    "update",
                    "information",
                    "report",
                    "okay",
                    "details",
                ],
                &[
                    "Noted. Waiting for the official update on {topic}.",
                    "Any verified information on {topic} yet?",
                    "Okay, here is the latest report I have on {topic}.",
                ],
            ),
            entry(
                "happy",
                0.8,
                0.6,
                &["glad", "great", "happy", "relieved", "wonderful", "good"],
                &[
                    "Glad to see people handling {topic} so well, this is great.",
                    "Relieved and happy, the response to {topic} looks good.",
                    "Wonderful news about {topic}!",
                ],
            ),
            entry(
                "consoling",
                0.5,
                0.3,
                &["safe", "together", "support", "hope", "care", "hang"],
                &[
                    "Stay safe everyone, we will get through {topic} together.",
                    "Sending support to anyone affected by {topic}. Take care.",
                    "Hang in there, there is hope with {topic}.",
                ],
            ),
            entry(
                "frustration",
                -0.5,
                0.6,
                &[
                    "again",
                    "annoying",
                    "ridiculous",
                    "frustrating",
                    "useless",
                    "seriously",
                ],
                &[
                    "Seriously, {topic} again? This is frustrating.",
                    "The handling of {topic} is ridiculous and annoying.",
                    "Useless planning for {topic}, as usual.",
                ],
            ),
            entry(
                "anger",
                -0.8,
                0.9,
                &[
                    "outrageous",
                    "furious",
                    "unacceptable",
                    "angry",
                    "disgrace",
                    "incompetent",
                ],
                &[
                    "This is unacceptable. The response to {topic} is a disgrace.",
                    "Furious about {topic}. Incompetent from start to finish.",
                    "Outrageous how {topic} was handled, I am angry.",
                ],
            ),
            entry(
                "fear",
                -0.7,
                0.8,
                &["scared", "afraid", "worried", "dangerous", "fail", "panic"],
                &[
                    "I am scared about {topic}, this looks dangerous.",
                    "Worried the systems will fail because of {topic}.",
                    "Afraid {topic} will cause panic.",
                ],
            ),
        ];
        EmotionLexicon::new(entries, &Vocabulary::default()).expect("default lexicon is valid")
    }
}
