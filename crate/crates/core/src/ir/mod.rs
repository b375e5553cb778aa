//! IR generation by identifier obfuscation.
//!
//! Every identifier occurrence whose name is not reserved is replaced by a
//! category placeholder. Placeholders are numbered per category in
//! first-occurrence (pre-order) order, and the replacement list is applied
//! from the highest start offset down so that earlier offsets stay valid.

mod whitelist;

use std::collections::{BTreeSet, HashMap};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::c_ast::{self, Category, ParseStatus};
use crate::digest::sha256_hex;
use crate::lexer;

pub use whitelist::{NameKind, StdWhitelist, WhitelistError};

#[derive(Debug, thiserror::Error)]
pub enum ObfuscateError {
    #[error("source does not parse: {0}")]
    ParseFailed(String),
    #[error("source token `{token}` at byte {offset} has placeholder shape and would alias a generated placeholder")]
    Collision { token: String, offset: usize },
    #[error("rename map is not injective: `{placeholder}` has several originals")]
    InvertFailed { placeholder: String },
    #[error("replacement spans overlap at byte {0}")]
    Overlap(usize),
}

/// Recognize `func|type|field|var` followed by a positive decimal counter
/// without leading zeros.
pub fn parse_placeholder(token: &str) -> Option<(Category, u64)> {
    for cat in Category::ALL {
        if let Some(rest) = token.strip_prefix(cat.prefix()) {
            if rest.is_empty() || rest.starts_with('0') || !rest.bytes().all(|b| b.is_ascii_digit()) {
                continue;
            }
            return rest.parse().ok().map(|n| (cat, n));
        }
    }
    None
}

pub fn placeholder(category: Category, counter: u64) -> String {
    format!("{}{}", category.prefix(), counter)
}

/// The names that must survive obfuscation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReservedSet {
    names: BTreeSet<String>,
}

impl ReservedSet {
    /// Keywords, standard types and standard macros of `whitelist`.
    pub fn base(whitelist: &StdWhitelist) -> Self {
        Self { names: whitelist.unconditional().map(str::to_string).collect() }
    }

    pub fn contains(&self, name: &str) -> bool {
        self.names.contains(name)
    }

    pub fn insert(&mut self, name: impl Into<String>) {
        self.names.insert(name.into());
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }
}

/// Reserved names for a pseudocode text using the bundled whitelist.
pub fn extract_reserved(pseudocode: &str) -> ReservedSet {
    extract_reserved_with(pseudocode, StdWhitelist::bundled())
}

pub fn extract_reserved_with(pseudocode: &str, whitelist: &StdWhitelist) -> ReservedSet {
    let mut set = ReservedSet::base(whitelist);
    for tok in lexer::identifiers(pseudocode) {
        if whitelist.contains(tok.text) {
            set.insert(tok.text);
        }
    }
    set
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenameMap {
    pub func: IndexMap<String, String>,
    #[serde(rename = "type")]
    pub ty: IndexMap<String, String>,
    pub field: IndexMap<String, String>,
    pub var: IndexMap<String, String>,
}

impl RenameMap {
    pub fn get(&self, category: Category) -> &IndexMap<String, String> {
        match category {
            Category::Func => &self.func,
            Category::Type => &self.ty,
            Category::Field => &self.field,
            Category::Var => &self.var,
        }
    }

    fn get_mut(&mut self, category: Category) -> &mut IndexMap<String, String> {
        match category {
            Category::Func => &mut self.func,
            Category::Type => &mut self.ty,
            Category::Field => &mut self.field,
            Category::Var => &mut self.var,
        }
    }

    /// Look up `name`, allocating the next placeholder of `category` when
    /// it is new. Counters start at 1.
    pub fn assign(&mut self, category: Category, name: &str) -> &str {
        let map = self.get_mut(category);
        let next = map.len() as u64 + 1;
        map.entry(name.to_string()).or_insert_with(|| placeholder(category, next))
    }

    /// Next counter value of `category`.
    pub fn counter(&self, category: Category) -> u64 {
        self.get(category).len() as u64 + 1
    }

    pub fn is_empty(&self) -> bool {
        Category::ALL.iter().all(|&c| self.get(c).is_empty())
    }

    pub fn len(&self) -> usize {
        Category::ALL.iter().map(|&c| self.get(c).len()).sum()
    }

    /// Placeholder -> original, across all categories.
    pub fn inverse(&self) -> Result<HashMap<&str, &str>, ObfuscateError> {
        let mut inv = HashMap::with_capacity(self.len());
        for cat in Category::ALL {
            for (orig, ph) in self.get(cat) {
                if inv.insert(ph.as_str(), orig.as_str()).is_some() {
                    return Err(ObfuscateError::InvertFailed { placeholder: ph.clone() });
                }
            }
        }
        Ok(inv)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Replacement {
    pub start: usize,
    pub end: usize,
    pub text: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReplacementList {
    entries: Vec<Replacement>,
}

impl ReplacementList {
    pub fn push(&mut self, start: usize, end: usize, text: impl Into<String>) {
        self.entries.push(Replacement { start, end, text: text.into() });
    }

    pub fn entries(&self) -> &[Replacement] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Apply to a copy of `text`, highest start offset first.
    pub fn apply(&self, text: &str) -> Result<String, ObfuscateError> {
        let mut sorted: Vec<&Replacement> = self.entries.iter().collect();
        sorted.sort_by_key(|r| std::cmp::Reverse(r.start));
        for pair in sorted.windows(2) {
            // pair[0] starts after pair[1]
            if pair[1].end > pair[0].start {
                return Err(ObfuscateError::Overlap(pair[0].start));
            }
        }
        let mut out = text.to_string();
        for r in sorted {
            out.replace_range(r.start..r.end, &r.text);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IrUnit {
    pub source_digest: String,
    pub ir_text: String,
    pub rename_map: RenameMap,
    #[serde(rename = "reserved_names")]
    pub reserved: ReservedSet,
}

/// Replacement list and rename map for `source`, without applying them.
pub fn plan(source: &str, reserved: &ReservedSet) -> Result<(RenameMap, ReplacementList), ObfuscateError> {
    let outcome = c_ast::parse(source, None);
    let tree = match (outcome.status, outcome.tree) {
        (ParseStatus::Failed, _) | (_, None) => {
            let msg = outcome.diagnostics.first().map(|d| d.message.clone()).unwrap_or_default();
            return Err(ObfuscateError::ParseFailed(msg));
        }
        (_, Some(tree)) => tree,
    };

    let mut map = RenameMap::default();
    let mut list = ReplacementList::default();
    for occ in c_ast::enumerate_identifiers(&tree) {
        if reserved.contains(&occ.name) {
            continue;
        }
        let new = map.assign(occ.category, &occ.name).to_string();
        list.push(occ.span.0, occ.span.1, new);
    }

    // Any placeholder-shaped token must be one the plan maps to itself.
    let planned: HashMap<usize, &str> = list.entries().iter().map(|r| (r.start, r.text.as_str())).collect();
    for tok in lexer::identifiers(source) {
        if parse_placeholder(tok.text).is_some() && planned.get(&tok.span.start) != Some(&tok.text) {
            return Err(ObfuscateError::Collision { token: tok.text.to_string(), offset: tok.span.start });
        }
    }
    Ok((map, list))
}

pub fn obfuscate(source: &str, reserved: &ReservedSet) -> Result<IrUnit, ObfuscateError> {
    let (rename_map, list) = plan(source, reserved)?;
    let ir_text = list.apply(source)?;
    Ok(IrUnit {
        source_digest: sha256_hex(source),
        ir_text,
        rename_map,
        reserved: reserved.clone(),
    })
}

/// Map placeholders in `ir.ir_text` back to their original names.
pub fn deobfuscate(ir: &IrUnit) -> Result<String, ObfuscateError> {
    if ir.rename_map.is_empty() {
        return Ok(ir.ir_text.clone());
    }
    let inverse = ir.rename_map.inverse()?;
    let mut list = ReplacementList::default();
    for tok in lexer::identifiers(&ir.ir_text) {
        if let Some(orig) = inverse.get(tok.text) {
            list.push(tok.span.start, tok.span.end, *orig);
        }
    }
    list.apply(&ir.ir_text)
}

/// Distinct placeholder tokens of `ir_text`.
pub fn extract_placeholder_set(ir_text: &str) -> BTreeSet<String> {
    lexer::identifiers(ir_text)
        .filter(|t| parse_placeholder(t.text).is_some())
        .map(|t| t.text.to_string())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ReservedSet {
        extract_reserved("")
    }

    #[test]
    fn placeholder_shape() {
        assert_eq!(parse_placeholder("var3"), Some((Category::Var, 3)));
        assert_eq!(parse_placeholder("field12"), Some((Category::Field, 12)));
        assert_eq!(parse_placeholder("func1"), Some((Category::Func, 1)));
        assert_eq!(parse_placeholder("var0"), None);
        assert_eq!(parse_placeholder("var01"), None);
        assert_eq!(parse_placeholder("var"), None);
        assert_eq!(parse_placeholder("variable1"), None);
        assert_eq!(parse_placeholder("var10x"), None);
        assert_eq!(parse_placeholder("VAR_1"), None);
    }

    #[test]
    fn reserved_from_pseudocode() {
        let r = extract_reserved("void *__fastcall sub_FFB80(uint8_t *a1) { memcpy(a1, a1 + 1, 4LL); }");
        assert!(r.contains("memcpy"));
        assert!(r.contains("uint8_t"));
        assert!(r.contains("int"));
        assert!(!r.contains("sub_FFB80"));
        assert!(!r.contains("a1"));
    }

    #[test]
    fn empty_pseudocode_gives_base_set() {
        let r = extract_reserved("");
        assert_eq!(r, ReservedSet::base(StdWhitelist::bundled()));
        assert!(r.contains("int") && r.contains("size_t") && r.contains("NULL"));
        assert!(!r.contains("memcpy"));
    }

    #[test]
    fn stripped_names_never_reserved() {
        let pseudo = "__int64 __fastcall sub_FFB80(__int64 a1)\n{\n  sub_100390(a1);\n  sub_100630(a1 + 8);\n  return sub_FFAD0(a1);\n}";
        let r = extract_reserved(pseudo);
        assert!(r.iter().all(|n| !n.starts_with("sub_")));
    }

    #[test]
    fn add_example() {
        let ir = obfuscate("int add(int a,int b){return a+b;}", &base()).unwrap();
        assert_eq!(ir.ir_text, "int func1(int var1,int var2){return var1+var2;}");
        assert_eq!(ir.rename_map.func.get("add").map(String::as_str), Some("func1"));
        assert_eq!(deobfuscate(&ir).unwrap(), "int add(int a,int b){return a+b;}");
    }

    #[test]
    fn all_reserved_is_identity() {
        let r = extract_reserved("int main() { return 0; }");
        let ir = obfuscate("int main(){return 0;}", &r).unwrap();
        assert_eq!(ir.ir_text, "int main(){return 0;}");
        assert!(ir.rename_map.is_empty());
        assert_eq!(deobfuscate(&ir).unwrap(), ir.ir_text);
    }

    #[test]
    fn nested_access_shape() {
        let src = "int check(struct Table *table, int hash, struct Entry *entry){ \
                   if (table->size > hash) return entry->key->obj; return 0; }";
        let ir = obfuscate(src, &base()).unwrap();
        assert!(ir.ir_text.contains("return var3->field2->field3;"), "{}", ir.ir_text);
        assert_eq!(deobfuscate(&ir).unwrap(), src);
    }

    #[test]
    fn idempotent_on_ir() {
        let src = "struct S { int f; }; int g(struct S* p){ return p->f + h(p); }";
        let r = base();
        let ir = obfuscate(src, &r).unwrap();
        let again = obfuscate(&ir.ir_text, &r).unwrap();
        assert_eq!(again.ir_text, ir.ir_text);
    }

    #[test]
    fn collision_detected() {
        // `var1` here is a field, so it would be renamed to field1 while a
        // generated var1 appears elsewhere.
        let err = obfuscate("struct S { int var1; }; int x;", &base()).unwrap_err();
        assert!(matches!(err, ObfuscateError::Collision { .. }));
        // A reserved placeholder-shaped name is never rewritten: collision.
        let mut r = base();
        r.insert("var2");
        assert!(matches!(obfuscate("int var2; int y;", &r), Err(ObfuscateError::Collision { .. })));
    }

    #[test]
    fn parse_failure_is_reported() {
        assert!(matches!(obfuscate("", &base()), Err(ObfuscateError::ParseFailed(_))));
    }

    #[test]
    fn literals_and_comments_untouched() {
        let src = "int f(int n){ /* n is var */ char *s = \"n and f\"; return n; }";
        let ir = obfuscate(src, &base()).unwrap();
        assert_eq!(ir.ir_text, "int func1(int var1){ /* n is var */ char *var2 = \"n and f\"; return var1; }");
    }

    #[test]
    fn same_name_in_two_categories() {
        let ir = obfuscate("struct node { int v; }; int node; ", &base()).unwrap();
        assert_eq!(ir.ir_text, "struct type1 { int field1; }; int var1; ");
        assert_eq!(deobfuscate(&ir).unwrap(), "struct node { int v; }; int node; ");
    }

    #[test]
    fn invert_failure() {
        let mut map = RenameMap::default();
        map.var.insert("a".into(), "var1".into());
        map.var.insert("b".into(), "var1".into());
        let ir = IrUnit { source_digest: String::new(), ir_text: "var1".into(), rename_map: map, reserved: base() };
        assert!(matches!(deobfuscate(&ir), Err(ObfuscateError::InvertFailed { .. })));
    }

    #[test]
    fn placeholder_sets() {
        let set = extract_placeholder_set("int func1(int var1,int var2){return var1+var2;}");
        assert_eq!(set, ["func1", "var1", "var2"].into_iter().map(String::from).collect());
        assert!(extract_placeholder_set("int main(){return 0;}").is_empty());
        assert!(extract_placeholder_set("var10x").is_empty());
        assert!(extract_placeholder_set("\"var1\" // var2").is_empty());
    }

    #[test]
    fn overlapping_replacements_rejected() {
        let mut list = ReplacementList::default();
        list.push(0, 3, "x");
        list.push(2, 4, "y");
        assert!(matches!(list.apply("abcdef"), Err(ObfuscateError::Overlap(_))));
    }

    #[test]
    fn descending_order_matters() {
        // Applying ascending with stale offsets corrupts the text.
        let src = "int add(int a,int b){return a+b;}";
        let (_, list) = plan(src, &base()).unwrap();
        let mut naive = src.to_string();
        let mut asc = list.entries().to_vec();
        asc.sort_by_key(|r| r.start);
        for r in &asc {
            if r.end <= naive.len() && naive.is_char_boundary(r.start) && naive.is_char_boundary(r.end) {
                naive.replace_range(r.start..r.end, &r.text);
            }
        }
        let good = list.apply(src).unwrap();
        assert_ne!(naive, good);
        let delta: isize = list.entries().iter().map(|r| r.text.len() as isize - (r.end - r.start) as isize).sum();
        assert_eq!(good.len() as isize, src.len() as isize + delta);
    }
}
