//! The sixteen MBTI profiles as four independently readable dichotomies.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MbtiParseError {
    #[error("MBTI code {code:?} must have exactly 4 letters")]
    Length { code: String },
    #[error("MBTI code {code:?}: invalid letter {found:?} at position {position}")]
    Letter {
        code: String,
        position: usize,
        found: char,
    },
}

/// One of the four dichotomy axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Axis {
    EI,
    SN,
    TF,
    JP,
}

impl Axis {
    pub const ALL: [Axis; 4] = [Axis::EI, Axis::SN, Axis::TF, Axis::JP];

    /// The two pole letters, in the order they appear in the axis name.
    pub fn poles(self) -> (char, char) {
        match self {
            Axis::EI => ('E', 'I'),
            Axis::SN => ('S', 'N'),
            Axis::TF => ('T', 'F'),
            Axis::JP => ('J', 'P'),
        }
    }

    fn position(self) -> usize {
        match self {
            Axis::EI => 0,
            Axis::SN => 1,
            Axis::TF => 2,
            Axis::JP => 3,
        }
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "EI" | "IE" => Ok(Axis::EI),
            "SN" | "NS" => Ok(Axis::SN),
            "TF" | "FT" => Ok(Axis::TF),
            "JP" | "PJ" => Ok(Axis::JP),
            other => Err(format!(
                "unknown axis {other:?} (expected EI, SN, TF or JP)"
            )),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = self.poles();
        write!(f, "{a}{b}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Attitude {
    E,
    I,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Perceiving {
    S,
    N,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Judging {
    T,
    F,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Lifestyle {
    J,
    P,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MbtiProfile {
    pub attitude: Attitude,
    pub perceiving_fn: Perceiving,
    pub judging_fn: Judging,
    pub lifestyle: Lifestyle,
}

impl MbtiProfile {
    pub const fn new(
        attitude: Attitude,
        perceiving_fn: Perceiving,
        judging_fn: Judging,
        lifestyle: Lifestyle,
    ) -> Self {
        Self {
            attitude,
            perceiving_fn,
            judging_fn,
            lifestyle,
        }
    }

    /// All sixteen profiles in a fixed order (E/I outermost, J/P innermost).
    pub fn all() -> Vec<MbtiProfile> {
        let mut out = Vec::with_capacity(16);
        for a in [Attitude::E, Attitude::I] {
            for p in [Perceiving::S, Perceiving::N] {
                for j in [Judging::T, Judging::F] {
                    for l in [Lifestyle::J, Lifestyle::P] {
                        out.push(MbtiProfile::new(a, p, j, l));
                    }
                }
            }
        }
        out
    }

    pub fn code(&self) -> String {
        self.letters().iter().collect()
    }

    pub fn letters(&self) -> [char; 4] {
        [
            match self.attitude {
                Attitude::E => 'E',
                Attitude::I => 'I',
            },
            match self.perceiving_fn {
                Perceiving::S => 'S',
                Perceiving::N => 'N',
            },
            match self.judging_fn {
                Judging::T => 'T',
                Judging::F => 'F',
            },
            match self.lifestyle {
                Lifestyle::J => 'J',
                Lifestyle::P => 'P',
            },
        ]
    }

    /// The pole letter this profile holds on `axis`.
    pub fn letter(&self, axis: Axis) -> char {
        self.letters()[axis.position()]
    }

    /// True when the profile sits on the first pole of `axis` (E, S, T or J).
    pub fn is_first_pole(&self, axis: Axis) -> bool {
        self.letter(axis) == axis.poles().0
    }

    pub fn is_feeling(&self) -> bool {
        self.judging_fn == Judging::F
    }
}

/// Parse a 4-letter code, case-insensitively.
pub fn parse_mbti(code: &str) -> Result<MbtiProfile, MbtiParseError> {
    let chars: Vec<char> = code.chars().collect();
    if chars.len() != 4 {
        return Err(MbtiParseError::Length {
            code: code.to_string(),
        });
    }
    let bad = |position: usize| MbtiParseError::Letter {
        code: code.to_string(),
        position: position + 1,
        found: chars[position],
    };
    let up: Vec<char> = chars.iter().map(|c| c.to_ascii_uppercase()).collect();
    let attitude = match up[0] {
        'E' => Attitude::E,
        'I' => Attitude::I,
        _ => return Err(bad(0)),
    };
    let perceiving_fn = match up[1] {
        'S' => Perceiving::S,
        'N' => Perceiving::N,
        _ => return Err(bad(1)),
    };
    let judging_fn = match up[2] {
        'T' => Judging::T,
        'F' => Judging::F,
        _ => return Err(bad(2)),
    };
    let lifestyle = match up[3] {
        'J' => Lifestyle::J,
        'P' => Lifestyle::P,
        _ => return Err(bad(3)),
    };
    Ok(MbtiProfile::new(
        attitude,
        perceiving_fn,
        judging_fn,
        lifestyle,
    ))
}

impl FromStr for MbtiProfile {
    type Err = MbtiParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_mbti(s)
    }
}

impl fmt::Display for MbtiProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.code())
    }
}

impl Serialize for MbtiProfile {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.code())
    }
}

impl<'de> Deserialize<'de> for MbtiProfile {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        parse_mbti(&s).map_err(serde::de::Error::custom)
    }
}
