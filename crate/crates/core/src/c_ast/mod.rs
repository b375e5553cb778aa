//! Position-annotated C syntax trees.
//!
//! The grammar is tree-sitter's C grammar, chosen because it is
//! error-tolerant and produces concrete trees with exact byte offsets. The
//! tree-sitter tree is copied into an owned arena ([`SyntaxTree`]) so that the
//! result is immutable, `Send + Sync`, and independent of parser state.

mod classify;

use std::ops::Range;
use std::sync::{LazyLock, OnceLock};

use serde::{Deserialize, Serialize};

pub use classify::{classify, enumerate_identifiers, Classification};

/// Identifier category used throughout the IR.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Func,
    Type,
    Field,
    Var,
}

impl Category {
    pub const ALL: [Category; 4] = [Category::Func, Category::Type, Category::Field, Category::Var];

    /// Placeholder prefix, also the serialized name.
    pub fn prefix(self) -> &'static str {
        match self {
            Category::Func => "func",
            Category::Type => "type",
            Category::Field => "field",
            Category::Var => "var",
        }
    }

    pub fn from_prefix(s: &str) -> Option<Self> {
        Category::ALL.into_iter().find(|c| c.prefix() == s)
    }
}

impl std::fmt::Display for Category {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.prefix())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentifierOccurrence {
    pub name: String,
    pub category: Category,
    /// Byte span relative to the parsed source (header excluded).
    pub span: (usize, usize),
    pub decl_site: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseStatus {
    Ok,
    RecoveredWithErrors,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    /// Byte offset relative to the source; offsets inside a synthesized
    /// header are reported as 0.
    pub offset: usize,
    pub message: String,
}

#[derive(Debug)]
pub struct ParseOutcome {
    pub status: ParseStatus,
    pub tree: Option<SyntaxTree>,
    pub diagnostics: Vec<Diagnostic>,
}

impl ParseOutcome {
    fn failed(message: impl Into<String>) -> Self {
        Self {
            status: ParseStatus::Failed,
            tree: None,
            diagnostics: vec![Diagnostic { offset: 0, message: message.into() }],
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == ParseStatus::Ok
    }
}

pub type NodeId = usize;

static C_LANGUAGE: LazyLock<tree_sitter::Language> = LazyLock::new(|| tree_sitter_c::LANGUAGE.into());

#[derive(Debug, Clone)]
pub struct Node {
    pub kind: &'static str,
    /// Grammar field under which this node hangs off its parent.
    pub field: Option<&'static str>,
    /// Absolute byte range in [`SyntaxTree::full_text`].
    pub start: usize,
    pub end: usize,
    pub named: bool,
    pub is_error: bool,
    pub is_missing: bool,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
}

/// Immutable syntax tree over `header + "\n" + source`.
#[derive(Debug)]
pub struct SyntaxTree {
    text: String,
    source_offset: usize,
    nodes: Vec<Node>,
    names: OnceLock<classify::NameTable>,
}

impl SyntaxTree {
    pub fn root(&self) -> NodeId {
        0
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Header (if any) followed by the source.
    pub fn full_text(&self) -> &str {
        &self.text
    }

    pub fn source(&self) -> &str {
        &self.text[self.source_offset..]
    }

    pub fn source_offset(&self) -> usize {
        self.source_offset
    }

    pub fn text(&self, id: NodeId) -> &str {
        let n = &self.nodes[id];
        &self.text[n.start..n.end]
    }

    /// Node span relative to the source, or `None` for header nodes.
    pub fn source_span(&self, id: NodeId) -> Option<Range<usize>> {
        let n = &self.nodes[id];
        (n.start >= self.source_offset)
            .then(|| n.start - self.source_offset..n.end - self.source_offset)
    }

    pub fn in_source(&self, id: NodeId) -> bool {
        self.nodes[id].start >= self.source_offset
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.nodes[id].parent
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id].children
    }

    pub fn child_by_field(&self, id: NodeId, field: &str) -> Option<NodeId> {
        self.nodes[id]
            .children
            .iter()
            .copied()
            .find(|&c| self.nodes[c].field == Some(field))
    }

    /// Depth-first pre-order over all nodes.
    pub fn preorder(&self) -> Preorder<'_> {
        Preorder { tree: self, stack: if self.nodes.is_empty() { vec![] } else { vec![0] } }
    }

    pub fn is_ancestor(&self, ancestor: NodeId, mut node: NodeId) -> bool {
        while let Some(p) = self.nodes[node].parent {
            if p == ancestor {
                return true;
            }
            node = p;
        }
        false
    }

    /// Top-level `function_definition` nodes located in the source part.
    pub fn top_level_functions(&self) -> Vec<NodeId> {
        self.children(self.root())
            .iter()
            .copied()
            .filter(|&c| self.nodes[c].kind == "function_definition" && self.in_source(c))
            .collect()
    }

    /// Name identifier of a function definition or declarator, if any.
    pub fn function_name(&self, func: NodeId) -> Option<NodeId> {
        let mut decl = self.child_by_field(func, "declarator")?;
        loop {
            let node = &self.nodes[decl];
            match node.kind {
                "function_declarator" => {
                    let inner = self.child_by_field(decl, "declarator")?;
                    return (self.nodes[inner].kind == "identifier").then_some(inner);
                }
                "pointer_declarator" | "parenthesized_declarator" | "attributed_declarator" => {
                    decl = self.child_by_field(decl, "declarator").or_else(|| {
                        node.children.iter().copied().find(|&c| self.nodes[c].named)
                    })?;
                }
                _ => return None,
            }
        }
    }

    pub(crate) fn names(&self) -> &classify::NameTable {
        self.names.get_or_init(|| classify::NameTable::build(self))
    }
}

pub struct Preorder<'a> {
    tree: &'a SyntaxTree,
    stack: Vec<NodeId>,
}

impl Iterator for Preorder<'_> {
    type Item = NodeId;

    fn next(&mut self) -> Option<NodeId> {
        let id = self.stack.pop()?;
        self.stack.extend(self.tree.nodes[id].children.iter().rev());
        Some(id)
    }
}

/// Parse a C translation unit. When `synthesized_header` is given the tree
/// covers `header + "\n" + source`, but every source-facing offset is
/// relative to `source`.
pub fn parse(source: &str, synthesized_header: Option<&str>) -> ParseOutcome {
    if source.trim().is_empty() {
        return ParseOutcome::failed("empty input");
    }

    let mut text = String::with_capacity(source.len() + 64);
    if let Some(h) = synthesized_header {
        text.push_str(h);
        text.push('\n');
    }
    let source_offset = text.len();
    text.push_str(source);

    let mut parser = tree_sitter::Parser::new();
    if let Err(e) = parser.set_language(&C_LANGUAGE) {
        return ParseOutcome::failed(format!("grammar load failed: {e}"));
    }
    let Some(ts_tree) = parser.parse(&text, None) else {
        return ParseOutcome::failed("parser returned no tree");
    };

    let nodes = copy_nodes(ts_tree.root_node());
    let tree = SyntaxTree { text, source_offset, nodes, names: OnceLock::new() };

    let mut diagnostics = Vec::new();
    let mut error_bytes = 0usize;
    let mut parsed_item = false;
    let rel = |abs: usize| abs.saturating_sub(source_offset);

    for &top in tree.children(tree.root()) {
        let n = tree.node(top);
        if n.end > source_offset && n.named && !n.is_error && n.kind != "comment" {
            parsed_item = true;
        }
    }
    let mut stack = vec![tree.root()];
    while let Some(id) = stack.pop() {
        let n = tree.node(id);
        if n.is_error {
            let lo = n.start.max(source_offset);
            error_bytes += n.end.saturating_sub(lo);
            diagnostics.push(Diagnostic {
                offset: rel(n.start),
                message: format!("syntax error near {:?}", snippet(tree.text(id))),
            });
            continue;
        }
        if n.is_missing {
            diagnostics.push(Diagnostic {
                offset: rel(n.start),
                message: format!("missing {}", n.kind),
            });
        }
        stack.extend(n.children.iter().rev());
    }
    diagnostics.sort_by_key(|d| d.offset);

    let significant = source.bytes().filter(|b| !b.is_ascii_whitespace()).count().max(1);
    let status = if !parsed_item || error_bytes * 2 > significant {
        ParseStatus::Failed
    } else if diagnostics.is_empty() {
        ParseStatus::Ok
    } else {
        ParseStatus::RecoveredWithErrors
    };

    if status == ParseStatus::Failed {
        if diagnostics.is_empty() {
            diagnostics.push(Diagnostic { offset: 0, message: "no parsable items".into() });
        }
        return ParseOutcome { status, tree: None, diagnostics };
    }
    ParseOutcome { status, tree: Some(tree), diagnostics }
}

fn snippet(s: &str) -> String {
    let s = s.trim();
    match s.char_indices().nth(24) {
        Some((i, _)) => format!("{}...", &s[..i]),
        None => s.to_string(),
    }
}

fn copy_nodes(root: tree_sitter::Node<'_>) -> Vec<Node> {
    let language: &'static tree_sitter::Language = &C_LANGUAGE;
    let mut nodes: Vec<Node> = Vec::new();
    let mut cursor = root.walk();
    // (parent id) stack mirrors the cursor depth.
    let mut parents: Vec<NodeId> = Vec::new();
    loop {
        let ts = cursor.node();
        let id = nodes.len();
        let parent = parents.last().copied();
        nodes.push(Node {
            kind: language.node_kind_for_id(ts.kind_id()).unwrap_or("ERROR"),
            field: cursor.field_id().and_then(|f| language.field_name_for_id(f.get())),
            start: ts.start_byte(),
            end: ts.end_byte(),
            named: ts.is_named(),
            is_error: ts.is_error(),
            is_missing: ts.is_missing(),
            parent,
            children: Vec::new(),
        });
        if let Some(p) = parent {
            nodes[p].children.push(id);
        }
        if cursor.goto_first_child() {
            parents.push(id);
            continue;
        }
        loop {
            if cursor.goto_next_sibling() {
                break;
            }
            if !cursor.goto_parent() {
                return nodes;
            }
            parents.pop();
        }
    }
}
