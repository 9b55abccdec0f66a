//! Message generation behind one interface, prompt-context assembly and the
//! text analyzer that maps free text back to (valence, arousal, opinion).

mod analyzer;
mod context;
mod lexicon;
mod remote;
mod scripted;
mod stochastic;

use rand::RngCore;

pub use analyzer::analyze_message;
pub use context::{assemble_context, render_emotion, style_block, PolicyContext, PromptDocument};
pub use lexicon::{EmotionLexicon, LexiconEntry};
pub use remote::{remote_generate, RemoteConfig, RemotePolicy};
pub use scripted::{scripted_generate, ScriptEntry, ScriptedConfig, ScriptedPolicy};
pub use stochastic::{stochastic_generate, StochasticConfig, StochasticPolicy};

use crate::error::PolicyError;
use crate::types::Message;

/// Default number of history messages handed to a policy.
pub const DEFAULT_HISTORY_WINDOW: usize = 20;

/// A policy maps an immutable context to a message, or fails (which the engine
/// treats as Silence). Implementations must be deterministic given `rng`.
pub trait MessagePolicy: Send + Sync {
    fn name(&self) -> &'static str;

    fn generate(&self, ctx: &PolicyContext, rng: &mut dyn RngCore) -> Result<Message, PolicyError>;
}
