//! Identifier classification into the four IR categories.
//!
//! Classification is syntactic. A first pass records which names are
//! declared as variables, declared or called as functions, and which appear
//! in type positions; a second pass assigns each token its category from its
//! own position, consulting those tables only for bare uses inside
//! expressions so that every occurrence of one declaration gets one
//! category.

use std::collections::HashSet;

use super::{Category, IdentifierOccurrence, NodeId, SyntaxTree};

/// Keywords that tree-sitter reports as `primitive_type`. These are never
/// identifiers.
const PRIMITIVE_KEYWORDS: &[&str] = &["void", "char", "short", "int", "long", "float", "double", "bool", "_Bool"];

/// Subtrees whose identifier-shaped tokens are attribute or asm syntax,
/// not program identifiers.
const OPAQUE_KINDS: &[&str] = &[
    "attribute_specifier",
    "attribute_declaration",
    "ms_declspec_modifier",
    "gnu_asm_expression",
];

const DECLARATOR_WRAPPERS: &[&str] = &[
    "pointer_declarator",
    "array_declarator",
    "parenthesized_declarator",
    "attributed_declarator",
    "init_declarator",
];

const DECLARATION_KINDS: &[&str] = &[
    "declaration",
    "parameter_declaration",
    "type_definition",
    "field_declaration",
    "function_definition",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    FuncDecl,
    VarDecl,
    Call,
    TypeTok,
    Field,
    Label,
    Use,
    NotIdentifier,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    pub category: Category,
    pub name: String,
    pub decl_site: bool,
    /// Set when the node is not an identifier token.
    pub diagnostic: Option<String>,
}

#[derive(Debug, Default)]
pub(crate) struct NameTable {
    var_decls: HashSet<String>,
    func_decls: HashSet<String>,
    calls: HashSet<String>,
    types: HashSet<String>,
}

impl NameTable {
    pub(crate) fn build(tree: &SyntaxTree) -> Self {
        let mut table = NameTable::default();
        for id in tree.preorder() {
            if !is_identifier_token(tree, id) || inside_opaque(tree, id) {
                continue;
            }
            let name = tree.text(id).to_string();
            match role(tree, id) {
                Role::VarDecl => {
                    table.var_decls.insert(name);
                }
                Role::FuncDecl => {
                    table.func_decls.insert(name);
                }
                Role::Call => {
                    table.calls.insert(name);
                }
                Role::TypeTok => {
                    table.types.insert(name);
                }
                _ => {}
            }
        }
        table
    }
}

fn is_identifier_token(tree: &SyntaxTree, id: NodeId) -> bool {
    let n = tree.node(id);
    if n.is_missing || n.start == n.end {
        return false;
    }
    match n.kind {
        "identifier" | "type_identifier" | "field_identifier" | "statement_identifier" => true,
        "primitive_type" => !PRIMITIVE_KEYWORDS.contains(&tree.text(id)),
        _ => false,
    }
}

fn inside_opaque(tree: &SyntaxTree, mut id: NodeId) -> bool {
    while let Some(p) = tree.parent(id) {
        if OPAQUE_KINDS.contains(&tree.node(p).kind) {
            return true;
        }
        id = p;
    }
    false
}

/// True when `id` sits in a declarator chain that ends in a declaration.
fn in_declarator_chain(tree: &SyntaxTree, id: NodeId) -> bool {
    let mut cur = id;
    loop {
        let node = tree.node(cur);
        let Some(parent) = node.parent else { return false };
        let pkind = tree.node(parent).kind;
        if DECLARATION_KINDS.contains(&pkind) {
            return node.field == Some("declarator");
        }
        if DECLARATOR_WRAPPERS.contains(&pkind) || pkind == "function_declarator" {
            let unfielded_paren = pkind == "parenthesized_declarator" && node.field.is_none();
            if node.field != Some("declarator") && !unfielded_paren {
                return false;
            }
            cur = parent;
            continue;
        }
        return false;
    }
}

fn role(tree: &SyntaxTree, id: NodeId) -> Role {
    let node = tree.node(id);
    let parent = node.parent.map(|p| tree.node(p));
    let pkind = parent.map(|p| p.kind).unwrap_or("");
    match node.kind {
        "type_identifier" | "primitive_type" => Role::TypeTok,
        "field_identifier" => Role::Field,
        "statement_identifier" => Role::Label,
        "identifier" => {
            if pkind == "function_declarator" && node.field == Some("declarator") {
                // A direct function declarator names a function; the name
                // of a function pointer sits one wrapper deeper.
                return Role::FuncDecl;
            }
            if pkind == "call_expression" && node.field == Some("function") {
                return Role::Call;
            }
            let named_decl = matches!(
                (pkind, node.field),
                ("enumerator", Some("name"))
                    | ("preproc_def", Some("name"))
                    | ("preproc_function_def", Some("name"))
            ) || pkind == "preproc_params";
            if named_decl || in_declarator_chain(tree, id) {
                Role::VarDecl
            } else {
                Role::Use
            }
        }
        _ => Role::NotIdentifier,
    }
}

fn decl_site(tree: &SyntaxTree, id: NodeId, role: Role) -> bool {
    match role {
        Role::FuncDecl | Role::VarDecl => true,
        Role::Label => tree.node(id).field == Some("label")
            && tree.parent(id).is_some_and(|p| tree.node(p).kind == "labeled_statement"),
        Role::TypeTok => {
            let Some(p) = tree.parent(id) else { return false };
            let pk = tree.node(p).kind;
            if matches!(pk, "struct_specifier" | "union_specifier" | "enum_specifier") {
                return tree.child_by_field(p, "body").is_some();
            }
            in_declarator_chain(tree, id)
        }
        Role::Field => in_declarator_chain(tree, id),
        _ => false,
    }
}

fn category_for(tree: &SyntaxTree, name: &str, role: Role) -> Category {
    let names = tree.names();
    match role {
        Role::FuncDecl => Category::Func,
        Role::VarDecl | Role::Label | Role::NotIdentifier => Category::Var,
        Role::TypeTok => Category::Type,
        Role::Field => Category::Field,
        Role::Call => {
            // Calls through a function-pointer variable keep the variable's
            // category.
            if names.var_decls.contains(name) && !names.func_decls.contains(name) {
                Category::Var
            } else {
                Category::Func
            }
        }
        Role::Use => {
            if names.var_decls.contains(name) {
                Category::Var
            } else if names.func_decls.contains(name) || names.calls.contains(name) {
                Category::Func
            } else if names.types.contains(name) {
                Category::Type
            } else {
                Category::Var
            }
        }
    }
}

/// Classify a single node. Nodes that are not identifier tokens map to
/// `var` with a diagnostic.
pub fn classify(tree: &SyntaxTree, id: NodeId) -> Classification {
    let name = tree.text(id).to_string();
    let r = if is_identifier_token(tree, id) { role(tree, id) } else { Role::NotIdentifier };
    let diagnostic = (r == Role::NotIdentifier)
        .then(|| format!("node kind `{}` is not an identifier; classified as var", tree.node(id).kind));
    Classification {
        category: category_for(tree, &name, r),
        decl_site: decl_site(tree, id, r),
        name,
        diagnostic,
    }
}

/// All identifier occurrences of the source part of `tree`, in depth-first
/// pre-order. Keywords, literals and attribute syntax are excluded.
pub fn enumerate_identifiers(tree: &SyntaxTree) -> Vec<IdentifierOccurrence> {
    let mut out = Vec::new();
    // Manual walk so opaque subtrees can be pruned.
    let mut stack = vec![tree.root()];
    while let Some(id) = stack.pop() {
        let node = tree.node(id);
        if OPAQUE_KINDS.contains(&node.kind) {
            continue;
        }
        if is_identifier_token(tree, id) {
            if let Some(span) = tree.source_span(id) {
                let c = classify(tree, id);
                out.push(IdentifierOccurrence {
                    name: c.name,
                    category: c.category,
                    span: (span.start, span.end),
                    decl_site: c.decl_site,
                });
            }
        }
        stack.extend(node.children.iter().rev());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;
    use Category::*;

    fn occ(src: &str) -> Vec<(String, Category, bool)> {
        let tree = parse(src, None).tree.expect("parse");
        enumerate_identifiers(&tree)
            .into_iter()
            .map(|o| (o.name, o.category, o.decl_site))
            .collect()
    }

    fn names_cats(src: &str) -> Vec<(String, Category)> {
        occ(src).into_iter().map(|(n, c, _)| (n, c)).collect()
    }

    fn v(items: &[(&str, Category)]) -> Vec<(String, Category)> {
        items.iter().map(|(n, c)| (n.to_string(), *c)).collect()
    }

    #[test]
    fn single_declaration() {
        assert_eq!(occ("int x;"), vec![("x".to_string(), Var, true)]);
    }

    #[test]
    fn lone_function_name() {
        assert_eq!(occ("int main(){return 0;}"), vec![("main".to_string(), Func, true)]);
    }

    #[test]
    fn struct_and_member_access_preorder() {
        let got = names_cats("struct S { int f; }; int g(struct S* p){ return p->f; }");
        assert_eq!(
            got,
            v(&[("S", Type), ("f", Field), ("g", Func), ("S", Type), ("p", Var), ("p", Var), ("f", Field)])
        );
    }

    #[test]
    fn call_position_is_func() {
        let got = names_cats("void h(char *d, char *s){ memcpy(d, s, 4); }");
        assert!(got.contains(&("memcpy".to_string(), Func)));
    }

    #[test]
    fn member_access_is_field() {
        let src = "int k(struct T *p){ return p->f + p->g.h; }";
        let got = names_cats(src);
        assert!(got.contains(&("f".into(), Field)));
        assert!(got.contains(&("g".into(), Field)));
        assert!(got.contains(&("h".into(), Field)));
    }

    #[test]
    fn unresolved_type_token_is_type() {
        let got = names_cats("Table *t; Entry e;");
        assert_eq!(got, v(&[("Table", Type), ("t", Var), ("Entry", Type), ("e", Var)]));
    }

    #[test]
    fn labels_are_var() {
        let got = occ("void f(void){ L: goto L; }");
        assert_eq!(got[1], ("L".to_string(), Var, true));
        assert_eq!(got[2], ("L".to_string(), Var, false));
    }

    #[test]
    fn function_pointer_variable_stays_var() {
        let got = names_cats("int apply(int (*op)(int), int x){ return op(x); }");
        let ops: Vec<_> = got.iter().filter(|(n, _)| n == "op").collect();
        assert_eq!(ops.len(), 2);
        assert!(ops.iter().all(|(_, c)| *c == Var));
    }

    #[test]
    fn function_used_as_value_is_func() {
        let got = names_cats("int cmp(const void *a, const void *b){ return 0; } void s(int *v){ qsort(v, 3, 4, cmp); }");
        let cmps: Vec<_> = got.iter().filter(|(n, _)| n == "cmp").collect();
        assert_eq!(cmps.len(), 2);
        assert!(cmps.iter().all(|(_, c)| *c == Func));
    }

    #[test]
    fn typedef_and_enum() {
        let got = occ("typedef struct node { int v; } node_t; enum color { RED, GREEN };");
        assert_eq!(got[0], ("node".into(), Type, true));
        assert_eq!(got[1], ("v".into(), Field, true));
        assert_eq!(got[2], ("node_t".into(), Type, true));
        assert_eq!(got[3], ("color".into(), Type, true));
        assert_eq!(got[4], ("RED".into(), Var, true));
    }

    #[test]
    fn std_typedef_names_are_type_tokens() {
        let got = names_cats("uint8_t b; size_t n;");
        assert_eq!(got, v(&[("uint8_t", Type), ("b", Var), ("size_t", Type), ("n", Var)]));
    }

    #[test]
    fn keywords_and_literals_excluded() {
        let got = names_cats(r#"int f(void){ char *s = "hello world"; return sizeof(int) + 'x'; }"#);
        assert_eq!(got, v(&[("f", Func), ("s", Var)]));
    }

    #[test]
    fn attributes_are_not_identifiers() {
        let got = names_cats("__attribute__((noinline)) int f(int a){ return a; }");
        assert!(!got.iter().any(|(n, _)| n == "noinline"));
    }

    #[test]
    fn classify_non_identifier_reports_diagnostic() {
        let tree = parse("int x;", None).tree.unwrap();
        let c = classify(&tree, tree.root());
        assert_eq!(c.category, Var);
        assert!(c.diagnostic.is_some());
    }

    #[test]
    fn placeholder_ir_classifies_by_prefix() {
        let ir = "int func1(struct type1 *var1, int var2){ struct type2 *var3 = var1->field1; \
                  if (var3->field2->field3 > var2) return func2(var3, var4); return var3->field2->field3; }";
        let tree = parse(ir, None).tree.unwrap();
        for o in enumerate_identifiers(&tree) {
            assert!(o.name.starts_with(o.category.prefix()), "{o:?}");
        }
    }

    #[test]
    fn preorder_property_holds() {
        let src = "typedef struct { int a; int *b; } T; static T g; int f(T *t, int n){ for(int i=0;i<n;i++){ g.a += t[i].b[0]; } return g.a; }";
        let occs = occ(src);
        let tree = parse(src, None).tree.unwrap();
        let list = enumerate_identifiers(&tree);
        assert_eq!(occs.len(), list.len());
        for w in list.windows(2) {
            assert!(w[0].span.0 < w[1].span.0);
        }
        for o in &list {
            assert_eq!(&src[o.span.0..o.span.1], o.name);
        }
    }
}
