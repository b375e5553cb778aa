//! Header synthesis for compile checks of standalone functions.
//!
//! Given a single function (typically IR with placeholder names), produce
//! declarations for whatever it references but does not define: standard
//! headers for known library names, struct definitions for unresolved types
//! (with members inferred from member accesses), `extern` globals and
//! non-prototype function declarations. The output is best effort; the
//! compiler decides whether it was enough.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write;

use indexmap::IndexMap;

use crate::c_ast::{self, Category, NodeId, SyntaxTree};
use crate::ir::StdWhitelist;
use crate::lexer;

/// How an expression is used by its context. Ordered by strength: when a
/// name is used several ways the strongest usage decides its type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Usage {
    Plain,
    Pointer,
    Callable,
    ValueStruct,
    PtrStruct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TagKind {
    Struct,
    Union,
    Enum,
}

impl TagKind {
    fn keyword(self) -> &'static str {
        match self {
            TagKind::Struct => "struct",
            TagKind::Union => "union",
            TagKind::Enum => "enum",
        }
    }
}

#[derive(Debug)]
struct SynthType {
    kind: TagKind,
    /// Needs `typedef <kind> T T;`.
    typedef: bool,
    fields: IndexMap<String, Usage>,
}

#[derive(Default)]
struct Synth {
    includes: BTreeSet<String>,
    types: BTreeMap<String, SynthType>,
    globals: BTreeMap<String, Usage>,
    functions: BTreeMap<String, Usage>,
}

impl Synth {
    fn ty(&mut self, name: &str, kind: TagKind) -> &mut SynthType {
        self.types
            .entry(name.to_string())
            .or_insert_with(|| SynthType { kind, typedef: false, fields: IndexMap::new() })
    }

    fn add_field(&mut self, tag: &str, field: &str, usage: Usage) {
        let t = self.ty(tag, TagKind::Struct);
        let slot = t.fields.entry(field.to_string()).or_insert(usage);
        *slot = (*slot).max(usage);
        if matches!(usage, Usage::PtrStruct | Usage::ValueStruct) {
            let nested = nested_tag(tag, field);
            self.ty(&nested, TagKind::Struct);
        }
    }
}

fn nested_tag(tag: &str, field: &str) -> String {
    format!("{tag}_{field}")
}

struct Ctx<'a> {
    tree: &'a SyntaxTree,
    wl: &'a StdWhitelist,
    declared: HashSet<String>,
    defined_types: HashSet<String>,
    defined_tags: HashSet<String>,
    /// variable -> unresolved type tag it points to or contains
    var_tags: BTreeMap<String, String>,
}

impl Ctx<'_> {
    fn kind(&self, id: NodeId) -> &'static str {
        self.tree.node(id).kind
    }

    fn text(&self, id: NodeId) -> &str {
        self.tree.text(id)
    }

    fn unresolved_type(&self, name: &str) -> bool {
        !self.defined_types.contains(name) && !self.defined_tags.contains(name) && self.wl.kind(name).is_none()
    }

    fn operator(&self, id: NodeId) -> Option<&str> {
        self.tree.child_by_field(id, "operator").map(|o| self.text(o))
    }

    fn usage_of(&self, id: NodeId) -> Usage {
        let Some(parent) = self.tree.parent(id) else { return Usage::Plain };
        let field = self.tree.node(id).field;
        match (self.kind(parent), field) {
            ("field_expression", Some("argument")) => {
                if self.operator(parent) == Some("->") {
                    Usage::PtrStruct
                } else {
                    Usage::ValueStruct
                }
            }
            ("call_expression", Some("function")) => Usage::Callable,
            ("subscript_expression", Some("argument")) => Usage::Pointer,
            ("pointer_expression", _) if self.operator(parent) == Some("*") => Usage::Pointer,
            ("parenthesized_expression", _) => self.usage_of(parent),
            _ => Usage::Plain,
        }
    }

    /// Unresolved tag named by a type specifier node, if any.
    fn spec_tag(&self, spec: NodeId, synth: &mut Synth) -> Option<String> {
        match self.kind(spec) {
            "type_identifier" => {
                let name = self.text(spec);
                self.unresolved_type(name).then(|| {
                    synth.ty(name, TagKind::Struct).typedef = true;
                    name.to_string()
                })
            }
            "struct_specifier" | "union_specifier" => {
                let name = self.tree.child_by_field(spec, "name")?;
                let name = self.text(name);
                self.unresolved_type(name).then(|| name.to_string())
            }
            _ => None,
        }
    }

    /// Unresolved struct tag of the value an expression denotes.
    fn resolve_base(&self, expr: NodeId, synth: &mut Synth) -> Option<String> {
        match self.kind(expr) {
            "identifier" => {
                let name = self.text(expr);
                if let Some(tag) = self.var_tags.get(name) {
                    return Some(tag.clone());
                }
                // Undeclared global used as a record.
                (!self.declared.contains(name) && self.wl.kind(name).is_none())
                    .then(|| format!("{name}_t"))
            }
            "field_expression" => {
                let arg = self.tree.child_by_field(expr, "argument")?;
                let field = self.tree.child_by_field(expr, "field")?;
                let tag = self.resolve_base(arg, synth)?;
                Some(nested_tag(&tag, self.text(field)))
            }
            "parenthesized_expression" => {
                let inner = self.tree.children(expr).iter().copied().find(|&c| self.tree.node(c).named)?;
                self.resolve_base(inner, synth)
            }
            "pointer_expression" | "subscript_expression" => {
                let arg = self.tree.child_by_field(expr, "argument")?;
                self.resolve_base(arg, synth)
            }
            "cast_expression" => {
                let td = self.tree.child_by_field(expr, "type")?;
                let spec = self.tree.child_by_field(td, "type")?;
                self.spec_tag(spec, synth)
            }
            "call_expression" => {
                let f = self.tree.child_by_field(expr, "function")?;
                let name = self.text(f);
                (self.kind(f) == "identifier" && !self.declared.contains(name) && self.wl.kind(name).is_none())
                    .then(|| format!("{name}_ret"))
            }
            _ => None,
        }
    }
}

fn declarator_name(tree: &SyntaxTree, mut decl: NodeId) -> Option<NodeId> {
    loop {
        let n = tree.node(decl);
        match n.kind {
            "identifier" | "field_identifier" | "type_identifier" => return Some(decl),
            "function_declarator" => return None,
            _ => {
                decl = tree
                    .child_by_field(decl, "declarator")
                    .or_else(|| n.children.iter().copied().find(|&c| tree.node(c).named))?;
            }
        }
    }
}

/// Header text for compiling `ir_text`. A reference header, when given, is
/// returned verbatim.
pub fn synthesize_header(ir_text: &str, reference_header: Option<&str>) -> String {
    if let Some(h) = reference_header {
        return h.to_string();
    }
    synthesize_with(ir_text, StdWhitelist::bundled())
}

pub fn synthesize_with(ir_text: &str, wl: &StdWhitelist) -> String {
    let outcome = c_ast::parse(ir_text, None);
    let mut synth = Synth::default();

    let Some(tree) = outcome.tree else {
        // Unparsable: includes are the only thing we can offer.
        for tok in lexer::identifiers(ir_text) {
            if let Some(h) = wl.header_for(tok.text) {
                synth.includes.insert(h.to_string());
            }
        }
        return render(&synth);
    };

    let occurrences = c_ast::enumerate_identifiers(&tree);
    let mut ctx = Ctx {
        tree: &tree,
        wl,
        declared: occurrences
            .iter()
            .filter(|o| o.decl_site && o.category != Category::Type)
            .map(|o| o.name.clone())
            .collect(),
        defined_types: HashSet::new(),
        defined_tags: HashSet::new(),
        var_tags: BTreeMap::new(),
    };

    // Definitions present in the IR itself.
    for id in tree.preorder() {
        match ctx.kind(id) {
            "type_definition" => {
                for &c in tree.children(id) {
                    if tree.node(c).field == Some("declarator") {
                        if let Some(n) = declarator_name(&tree, c) {
                            ctx.defined_types.insert(tree.text(n).to_string());
                        }
                    }
                }
            }
            "struct_specifier" | "union_specifier" | "enum_specifier" => {
                if let (Some(name), Some(_)) = (tree.child_by_field(id, "name"), tree.child_by_field(id, "body")) {
                    ctx.defined_tags.insert(tree.text(name).to_string());
                }
            }
            _ => {}
        }
    }

    // Variable types and type uses.
    for id in tree.preorder() {
        match ctx.kind(id) {
            "declaration" | "parameter_declaration" | "field_declaration" => {
                let Some(spec) = tree.child_by_field(id, "type") else { continue };
                let tag = ctx.spec_tag(spec, &mut synth);
                if ctx.kind(id) == "field_declaration" {
                    continue;
                }
                if let Some(tag) = tag {
                    for &c in tree.children(id) {
                        if tree.node(c).field == Some("declarator") {
                            if let Some(n) = declarator_name(&tree, c) {
                                ctx.var_tags.insert(tree.text(n).to_string(), tag.clone());
                            }
                        }
                    }
                }
            }
            "type_identifier" => {
                let parent_kind = tree.parent(id).map(|p| ctx.kind(p)).unwrap_or("");
                let name = tree.text(id);
                let is_tag = matches!(parent_kind, "struct_specifier" | "union_specifier" | "enum_specifier");
                if is_tag {
                    if ctx.unresolved_type(name) {
                        let kind = match parent_kind {
                            "union_specifier" => TagKind::Union,
                            "enum_specifier" => TagKind::Enum,
                            _ => TagKind::Struct,
                        };
                        synth.ty(name, kind).kind = kind;
                    }
                } else if ctx.unresolved_type(name) && !ctx.defined_types.contains(name) {
                    synth.ty(name, TagKind::Struct).typedef = true;
                }
            }
            _ => {}
        }
    }

    // Member accesses on unresolved records.
    for id in tree.preorder() {
        if ctx.kind(id) != "field_expression" {
            continue;
        }
        let (Some(arg), Some(field)) = (tree.child_by_field(id, "argument"), tree.child_by_field(id, "field")) else {
            continue;
        };
        if let Some(tag) = ctx.resolve_base(arg, &mut synth) {
            let usage = ctx.usage_of(id);
            synth.add_field(&tag, tree.text(field), usage);
        }
    }

    // Undeclared names: library names get their header, the rest become
    // extern declarations typed by usage.
    for occ in &occurrences {
        let name = occ.name.as_str();
        if ctx.declared.contains(name) {
            continue;
        }
        if let Some(h) = wl.header_for(name) {
            synth.includes.insert(h.to_string());
            continue;
        }
        if wl.kind(name).is_some() {
            continue;
        }
        match occ.category {
            Category::Func => {
                synth.functions.entry(name.to_string()).or_insert(Usage::Plain);
            }
            Category::Var => {
                synth.globals.entry(name.to_string()).or_insert(Usage::Plain);
            }
            _ => {}
        }
    }
    // Refine extern types from how each occurrence is used.
    for id in tree.preorder() {
        match ctx.kind(id) {
            "identifier" => {
                let name = tree.text(id);
                if let Some(u) = synth.globals.get_mut(name) {
                    *u = (*u).max(ctx.usage_of(id));
                }
            }
            "call_expression" => {
                let Some(f) = tree.child_by_field(id, "function") else { continue };
                let name = tree.text(f).to_string();
                let usage = ctx.usage_of(id);
                if let Some(u) = synth.functions.get_mut(&name) {
                    *u = (*u).max(usage);
                }
            }
            _ => {}
        }
    }
    // A global that is only ever called is a function.
    let called: Vec<String> =
        synth.globals.iter().filter(|(_, u)| **u == Usage::Callable).map(|(n, _)| n.clone()).collect();
    for name in called {
        synth.globals.remove(&name);
        synth.functions.entry(name).or_insert(Usage::Plain);
    }
    let records: Vec<(String, String)> = synth
        .globals
        .iter()
        .filter(|(_, u)| matches!(u, Usage::PtrStruct | Usage::ValueStruct))
        .map(|(n, _)| (n.clone(), format!("{n}_t")))
        .chain(
            synth
                .functions
                .iter()
                .filter(|(_, u)| matches!(u, Usage::PtrStruct | Usage::ValueStruct))
                .map(|(n, _)| (n.clone(), format!("{n}_ret"))),
        )
        .collect();
    for (_, tag) in records {
        synth.ty(&tag, TagKind::Struct);
    }

    render(&synth)
}

fn field_decl(tag: &str, name: &str, usage: Usage) -> String {
    match usage {
        Usage::Plain => format!("int {name};"),
        Usage::Pointer => format!("int *{name};"),
        Usage::Callable => format!("int (*{name})();"),
        Usage::PtrStruct => format!("struct {} *{name};", nested_tag(tag, name)),
        Usage::ValueStruct => format!("struct {} {name};", nested_tag(tag, name)),
    }
}

fn render(synth: &Synth) -> String {
    let mut out = String::new();
    for h in &synth.includes {
        let _ = writeln!(out, "#include {h}");
    }
    for (name, t) in &synth.types {
        if t.typedef {
            let _ = writeln!(out, "typedef {kw} {name} {name};", kw = t.kind.keyword());
        } else if t.kind != TagKind::Enum {
            let _ = writeln!(out, "{} {name};", t.kind.keyword());
        }
    }
    // Value-embedded records must be complete before their container.
    let mut emitted = BTreeSet::new();
    for name in synth.types.keys() {
        emit_definition(synth, name, &mut emitted, &mut out, 0);
    }
    for (name, usage) in &synth.globals {
        let decl = match usage {
            Usage::Plain => format!("int {name}"),
            Usage::Pointer => format!("int *{name}"),
            Usage::Callable => format!("int (*{name})()"),
            Usage::PtrStruct => format!("struct {name}_t *{name}"),
            Usage::ValueStruct => format!("struct {name}_t {name}"),
        };
        let _ = writeln!(out, "extern {decl};");
    }
    for (name, usage) in &synth.functions {
        let _ = match usage {
            Usage::PtrStruct => writeln!(out, "struct {name}_ret *{name}();"),
            Usage::ValueStruct => writeln!(out, "struct {name}_ret {name}();"),
            Usage::Pointer => writeln!(out, "int *{name}();"),
            _ => writeln!(out, "int {name}();"),
        };
    }
    out
}

fn emit_definition(synth: &Synth, name: &str, emitted: &mut BTreeSet<String>, out: &mut String, depth: usize) {
    if emitted.contains(name) || depth > 32 {
        return;
    }
    let Some(t) = synth.types.get(name) else { return };
    emitted.insert(name.to_string());
    if t.kind == TagKind::Enum {
        let _ = writeln!(out, "enum {name} {{ {name}_value0 }};");
        return;
    }
    for (field, usage) in &t.fields {
        if *usage == Usage::ValueStruct {
            emit_definition(synth, &nested_tag(name, field), emitted, out, depth + 1);
        }
    }
    let _ = writeln!(out, "{} {name} {{", t.kind.keyword());
    if t.fields.is_empty() {
        let _ = writeln!(out, "    char {name}_opaque;");
    }
    for (field, usage) in &t.fields {
        let _ = writeln!(out, "    {}", field_decl(name, field, *usage));
    }
    let _ = writeln!(out, "}};");
}
