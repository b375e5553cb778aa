//! Bundled standard-library name list (`data/c_stdlib.txt`).

use std::collections::{BTreeMap, BTreeSet};
use std::sync::LazyLock;

const BUNDLED: &str = include_str!("../../data/c_stdlib.txt");

static DEFAULT: LazyLock<StdWhitelist> =
    LazyLock::new(|| StdWhitelist::parse(BUNDLED).expect("bundled whitelist is well-formed"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NameKind {
    Keyword,
    Type,
    Macro,
    Function,
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
#[error("whitelist line {line}: {message}")]
pub struct WhitelistError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct StdWhitelist {
    kinds: BTreeMap<String, NameKind>,
    headers: BTreeMap<String, String>,
}

impl StdWhitelist {
    /// The list shipped with the crate.
    pub fn bundled() -> &'static StdWhitelist {
        &DEFAULT
    }

    pub fn parse(text: &str) -> Result<Self, WhitelistError> {
        let mut wl = StdWhitelist::default();
        wl.extend_from_str(text)?;
        Ok(wl)
    }

    /// Merge entries in the same `@kind [<header>]` format. Later entries win.
    pub fn extend_from_str(&mut self, text: &str) -> Result<(), WhitelistError> {
        let mut section: Option<(NameKind, Option<String>)> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('@') {
                let mut parts = rest.split_whitespace();
                let kind = match parts.next() {
                    Some("keywords") => NameKind::Keyword,
                    Some("types") => NameKind::Type,
                    Some("macros") => NameKind::Macro,
                    Some("functions") => NameKind::Function,
                    other => {
                        return Err(WhitelistError {
                            line: idx + 1,
                            message: format!("unknown section kind {other:?}"),
                        })
                    }
                };
                section = Some((kind, parts.next().map(str::to_string)));
                continue;
            }
            let Some((kind, header)) = &section else {
                return Err(WhitelistError { line: idx + 1, message: "name before any section".into() });
            };
            for name in line.split_whitespace() {
                self.kinds.insert(name.to_string(), *kind);
                if let Some(h) = header {
                    self.headers.insert(name.to_string(), h.clone());
                }
            }
        }
        Ok(())
    }

    pub fn kind(&self, name: &str) -> Option<NameKind> {
        self.kinds.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.kinds.contains_key(name)
    }

    /// Header that declares `name`, e.g. `<string.h>`.
    pub fn header_for(&self, name: &str) -> Option<&str> {
        self.headers.get(name).map(String::as_str)
    }

    /// Keywords, standard types and standard macros.
    pub fn unconditional(&self) -> impl Iterator<Item = &str> {
        self.kinds
            .iter()
            .filter(|(_, k)| **k != NameKind::Function)
            .map(|(n, _)| n.as_str())
    }

    pub fn names_of(&self, kind: NameKind) -> BTreeSet<&str> {
        self.kinds.iter().filter(|(_, k)| **k == kind).map(|(n, _)| n.as_str()).collect()
    }
}
