//! Decompilation pipeline toolkit.
//!
//! Structure recovery and identifier naming are separated by an
//! intermediate representation: the original source with every
//! user identifier replaced by a category placeholder (`func1`, `type2`,
//! `field3`, `var4`). This crate provides the non-model machinery around
//! that split: IR generation, RL reward functions, evaluation metrics,
//! corpus preparation and the two-phase orchestration.

pub mod c_ast;
pub mod digest;
pub mod lexer;
pub mod limit;
pub mod ir;
pub mod reward;
pub mod sandbox;
pub mod corpus;
pub mod metrics;
pub mod orchestrator;

use serde::{Deserialize, Serialize};

/// Compiler optimization level of a binary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OptLevel {
    O0,
    O1,
    O2,
    O3,
}

impl OptLevel {
    pub const ALL: [OptLevel; 4] = [OptLevel::O0, OptLevel::O1, OptLevel::O2, OptLevel::O3];

    pub fn as_str(self) -> &'static str {
        match self {
            OptLevel::O0 => "O0",
            OptLevel::O1 => "O1",
            OptLevel::O2 => "O2",
            OptLevel::O3 => "O3",
        }
    }

    /// Compiler flag, e.g. `-O2`.
    pub fn flag(self) -> String {
        format!("-{}", self.as_str())
    }
}

impl std::fmt::Display for OptLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for OptLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim_start_matches('-');
        OptLevel::ALL
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(t))
            .ok_or_else(|| format!("unknown optimization level {s:?}"))
    }
}
