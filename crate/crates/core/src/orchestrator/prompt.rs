use serde::{Deserialize, Serialize};

use crate::digest::sha256_hex;

/// Placeholder replaced by the phase input.
pub const INPUT_SLOT: &str = "{{input}}";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub id: String,
    pub text: String,
}

impl PromptTemplate {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self { id: id.into(), text: text.into() }
    }

    /// Pseudocode to placeholder IR.
    pub fn structure() -> Self {
        Self::new("structure-v1", include_str!("../../data/prompts/structure_v1.txt"))
    }

    /// Placeholder IR to named source.
    pub fn naming() -> Self {
        Self::new("naming-v1", include_str!("../../data/prompts/naming_v1.txt"))
    }

    /// Pseudocode straight to named source.
    pub fn direct() -> Self {
        Self::new("direct-v1", include_str!("../../data/prompts/direct_v1.txt"))
    }

    pub fn render(&self, input: &str) -> String {
        self.text.replace(INPUT_SLOT, input)
    }

    pub fn digest(&self) -> String {
        sha256_hex(&self.text)
    }
}
