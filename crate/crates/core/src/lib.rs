//! Seedable simulator of personality-typed agents whose emotions follow a
//! mean-reverting jump-diffusion on the probability simplex.

pub mod analysis;
pub mod cli;
pub mod decision;
pub mod dynamics;
pub mod engine;
pub mod error;
pub mod mbti;
pub mod params;
pub mod policy;
pub mod priors;
pub mod rng;
pub mod types;
pub mod validation;

pub use error::{Error, PolicyError, Result};
pub use mbti::{parse_mbti, Axis, MbtiProfile};
pub use types::{AgentId, Belief, EmotionVector, Message, RawAffect, SocialGraph, Vocabulary};
