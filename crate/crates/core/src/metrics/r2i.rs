//! Structural readability score over syntax-tree features.

use std::collections::BTreeMap;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::c_ast::{self, Category, NodeId, ParseStatus, SyntaxTree};
use crate::ir::parse_placeholder;
use crate::lexer;
use crate::reward::synthesize_header;

const BUNDLED: &str = include_str!("../../data/r2i_weights_v1.toml");

static DEFAULT: LazyLock<R2iWeights> =
    LazyLock::new(|| R2iWeights::from_toml_str(BUNDLED).expect("bundled weights are valid"));

pub const FEATURES: &[&str] = &[
    "goto",
    "cast",
    "pointer_arith_deref",
    "magic_number",
    "opaque_identifier",
    "structured_loop",
    "member_access",
    "user_type",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Reward,
    Penalty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub polarity: Polarity,
    /// Rate per 100 tokens at which the feature saturates.
    pub cap: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct R2iWeights {
    pub id: String,
    #[serde(rename = "feature")]
    pub features: Vec<FeatureSpec>,
}

impl R2iWeights {
    pub fn bundled() -> &'static R2iWeights {
        &DEFAULT
    }

    pub fn from_toml_str(text: &str) -> Result<Self, MetricsError> {
        let w: R2iWeights = toml::from_str(text).map_err(|e| MetricsError::Weights(e.to_string()))?;
        w.validate()?;
        Ok(w)
    }

    fn validate(&self) -> Result<(), MetricsError> {
        let bad = |m: String| Err(MetricsError::Weights(m));
        if self.features.is_empty() {
            return bad("no features".into());
        }
        for f in &self.features {
            if !FEATURES.contains(&f.name.as_str()) {
                return bad(format!("unknown feature {:?}", f.name));
            }
            if f.cap.is_nan() || f.cap <= 0.0 || f.weight.is_nan() || f.weight < 0.0 {
                return bad(format!("feature {:?} needs cap > 0 and weight >= 0", f.name));
            }
        }
        if self.features.iter().map(|f| f.weight).sum::<f64>() <= 0.0 {
            return bad("weights sum to zero".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct R2IScore {
    pub value: f64,
    pub parse_ok: bool,
    /// Normalized per-feature scores in [0, 1].
    pub feature_vector: BTreeMap<String, f64>,
    pub weights_id: String,
}

/// Raw feature counts of the source part of a parsed tree.
pub fn feature_counts(tree: &SyntaxTree) -> BTreeMap<&'static str, usize> {
    let mut counts: BTreeMap<&'static str, usize> = FEATURES.iter().map(|f| (*f, 0)).collect();
    let mut bump = |k: &'static str| *counts.get_mut(k).expect("known feature") += 1;
    for id in tree.preorder() {
        if !tree.in_source(id) {
            continue;
        }
        match tree.node(id).kind {
            "goto_statement" => bump("goto"),
            "cast_expression" => bump("cast"),
            "pointer_expression" if is_arith_deref(tree, id) => bump("pointer_arith_deref"),
            "number_literal" if is_magic(tree.text(id)) => bump("magic_number"),
            "for_statement" | "while_statement" | "do_statement" => bump("structured_loop"),
            "field_expression" => bump("member_access"),
            _ => {}
        }
    }
    for occ in c_ast::enumerate_identifiers(tree) {
        if occ.category == Category::Type && !is_decompiler_type(&occ.name) {
            bump("user_type");
        }
        if is_opaque_name(&occ.name) {
            bump("opaque_identifier");
        }
    }
    counts
}

fn operator(tree: &SyntaxTree, id: NodeId) -> Option<&str> {
    tree.child_by_field(id, "operator").map(|o| tree.text(o))
}

fn is_arith_deref(tree: &SyntaxTree, id: NodeId) -> bool {
    if operator(tree, id) != Some("*") {
        return false;
    }
    let mut arg = match tree.child_by_field(id, "argument") {
        Some(a) => a,
        None => return false,
    };
    loop {
        match tree.node(arg).kind {
            "parenthesized_expression" => match tree.children(arg).iter().copied().find(|&c| tree.node(c).named) {
                Some(inner) => arg = inner,
                None => return false,
            },
            "cast_expression" => match tree.child_by_field(arg, "value") {
                Some(inner) => arg = inner,
                None => return false,
            },
            "binary_expression" => return matches!(operator(tree, arg), Some("+" | "-")),
            _ => return false,
        }
    }
}

fn is_magic(literal: &str) -> bool {
    let t = literal.trim_end_matches(['u', 'U', 'l', 'L', 'f', 'F']).to_ascii_lowercase();
    let value = if let Some(hex) = t.strip_prefix("0x") {
        u128::from_str_radix(hex, 16).ok().map(|v| v as f64)
    } else {
        t.parse::<f64>().ok()
    };
    !matches!(value, Some(v) if v == 0.0 || v == 1.0 || v == 2.0)
}

/// Scalar aliases emitted by decompilers (`__int64`, `_DWORD`, ...).
fn is_decompiler_type(name: &str) -> bool {
    const NAMES: &[&str] = &[
        "__int8", "__int16", "__int32", "__int64", "__int128", "_BYTE", "_WORD", "_DWORD", "_QWORD", "_OWORD",
        "_BOOL1", "_BOOL2", "_BOOL4", "_BOOL8", "_UNKNOWN", "BYTE", "WORD", "DWORD", "QWORD",
    ];
    NAMES.contains(&name)
}

/// IR placeholders, decompiler scalar aliases and decompiler-generated names
/// such as `v12`, `a1` or `sub_401000`. Short human names (`i`, `x`) are not
/// opaque.
pub fn is_opaque_name(name: &str) -> bool {
    if parse_placeholder(name).is_some() || is_decompiler_type(name) {
        return true;
    }
    let digits_after = |p: &str| {
        name.strip_prefix(p).is_some_and(|r| !r.is_empty() && r.bytes().all(|b| b.is_ascii_digit()))
    };
    if digits_after("v") || digits_after("a") {
        return true;
    }
    const AUTO: &[&str] = &["sub_", "loc_", "unk_", "off_", "byte_", "word_", "dword_", "qword_", "stru_", "asc_"];
    AUTO.iter().any(|p| {
        name.strip_prefix(p).is_some_and(|r| !r.is_empty() && r.bytes().all(|b| b.is_ascii_hexdigit()))
    })
}

fn zero(weights: &R2iWeights) -> R2IScore {
    R2IScore { value: 0.0, parse_ok: false, feature_vector: BTreeMap::new(), weights_id: weights.id.clone() }
}

/// Readability of `gen_src` in [0, 1]. Anything that does not parse cleanly,
/// even with a synthesized header, scores exactly 0.
pub fn r2i_score(gen_src: &str, weights: &R2iWeights) -> R2IScore {
    let header = synthesize_header(gen_src, None);
    let outcome = c_ast::parse(gen_src, Some(&header));
    let tree = match (outcome.status, outcome.tree) {
        (ParseStatus::Ok, Some(t)) => t,
        _ => return zero(weights),
    };
    let tokens = lexer::code_tokens(gen_src).count().max(1) as f64;
    let counts = feature_counts(&tree);
    let mut feature_vector = BTreeMap::new();
    let (mut num, mut den) = (0.0, 0.0);
    for spec in &weights.features {
        let rate = counts[spec.name.as_str()] as f64 * 100.0 / tokens;
        let sat = (rate / spec.cap).min(1.0);
        let f = match spec.polarity {
            Polarity::Reward => sat,
            Polarity::Penalty => 1.0 - sat,
        };
        feature_vector.insert(spec.name.clone(), f);
        num += spec.weight * f;
        den += spec.weight;
    }
    R2IScore { value: (num / den).clamp(0.0, 1.0), parse_ok: true, feature_vector, weights_id: weights.id.clone() }
}

/// Mean score over a sample set. Parse failures count as 0; scores computed
/// under different weight tables are not comparable and are rejected.
pub fn mean_r2i(scores: &[R2IScore]) -> Result<f64, MetricsError> {
    let first = scores.first().ok_or(MetricsError::EmptyInput)?;
    if let Some(other) = scores.iter().find(|s| s.weights_id != first.weights_id) {
        return Err(MetricsError::MixedWeights(first.weights_id.clone(), other.weights_id.clone()));
    }
    Ok(scores.iter().map(|s| s.value).sum::<f64>() / scores.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CLEAN: &str = "struct node { int value; struct node *next; };\n\
        int sum_list(struct node *head) {\n    int total = 0;\n\
        while (head) {\n        total += head->value;\n        head = head->next;\n    }\n    return total;\n}";

    #[test]
    fn unparsable_is_zero() {
        let s = r2i_score("@@@@", R2iWeights::bundled());
        assert_eq!(s.value, 0.0);
        assert!(!s.parse_ok);
    }

    #[test]
    fn deterministic_and_bounded() {
        let a = r2i_score(CLEAN, R2iWeights::bundled());
        assert_eq!(a, r2i_score(CLEAN, R2iWeights::bundled()));
        assert!(a.parse_ok && (0.0..=1.0).contains(&a.value));
        assert_eq!(a.weights_id, "r2i-v1");
    }

    #[test]
    fn goto_lowers_score() {
        let with_goto = CLEAN.replace("    return total;", "    goto done;\ndone:\n    return total;");
        let w = R2iWeights::bundled();
        assert!(r2i_score(&with_goto, w).value < r2i_score(CLEAN, w).value);
    }

    #[test]
    fn feature_detection() {
        let src = "int f(char *p, int n) { int v1 = *(int *)(p + 4); v1 += (int)n * 37; return *(p - 1) + v1; }";
        let tree = c_ast::parse(src, None).tree.unwrap();
        let c = feature_counts(&tree);
        assert_eq!(c["pointer_arith_deref"], 2);
        assert_eq!(c["cast"], 2);
        assert_eq!(c["magic_number"], 2);
        assert_eq!(c["goto"], 0);
    }

    #[test]
    fn opaque_names() {
        for n in ["var3", "v12", "a1", "sub_401000", "dword_60C0", "__int64", "_DWORD"] {
            assert!(is_opaque_name(n), "{n}");
        }
        for n in ["i", "x", "count", "value", "sub_total", "area"] {
            assert!(!is_opaque_name(n), "{n}");
        }
    }

    #[test]
    fn aggregation_rejects_mixed_tables() {
        let a = r2i_score(CLEAN, R2iWeights::bundled());
        let mut b = a.clone();
        b.weights_id = "other".into();
        assert!(matches!(mean_r2i(&[a.clone(), b]), Err(MetricsError::MixedWeights(..))));
        assert!(matches!(mean_r2i(&[]), Err(MetricsError::EmptyInput)));
        let z = r2i_score("@@@@", R2iWeights::bundled());
        assert_eq!(mean_r2i(&[a.clone(), z]).unwrap(), a.value / 2.0);
    }

    #[test]
    fn weight_table_validation() {
        assert!(R2iWeights::from_toml_str("id = \"x\"\nfeature = []").is_err());
        let bad = "id = \"x\"\n[[feature]]\nname = \"bogus\"\npolarity = \"reward\"\ncap = 1.0\nweight = 1.0";
        assert!(R2iWeights::from_toml_str(bad).is_err());
    }
}
