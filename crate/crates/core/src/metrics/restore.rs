use super::MetricsError;
use crate::c_ast::{self, NodeId, ParseStatus, SyntaxTree};
use crate::ir::ReplacementList;

/// Byte spans (relative to the source) that `restore_function_name` would
/// rewrite: the definition's declarator name, matching top-level prototypes,
/// and direct self-calls.
pub fn target_name_spans(gen_src: &str) -> Result<(String, Vec<(usize, usize)>), MetricsError> {
    let outcome = c_ast::parse(gen_src, None);
    let tree = match (outcome.status, outcome.tree) {
        (ParseStatus::Failed, _) | (_, None) => return Err(MetricsError::AmbiguousTarget { definitions: 0 }),
        (_, Some(t)) => t,
    };
    let defs = tree.top_level_functions();
    if defs.len() != 1 {
        return Err(MetricsError::AmbiguousTarget { definitions: defs.len() });
    }
    let name_id = tree.function_name(defs[0]).ok_or(MetricsError::AmbiguousTarget { definitions: 0 })?;
    let name = tree.text(name_id).to_string();

    let mut spans = Vec::new();
    for id in tree.preorder() {
        if tree.node(id).kind != "identifier" || tree.text(id) != name || !tree.in_source(id) {
            continue;
        }
        if id == name_id || is_self_call(&tree, id) || is_top_level_prototype(&tree, id) {
            let r = tree.source_span(id).expect("in source");
            spans.push((r.start, r.end));
        }
    }
    Ok((name, spans))
}

fn is_self_call(tree: &SyntaxTree, id: NodeId) -> bool {
    let node = tree.node(id);
    node.field == Some("function") && node.parent.is_some_and(|p| tree.node(p).kind == "call_expression")
}

fn is_top_level_prototype(tree: &SyntaxTree, id: NodeId) -> bool {
    let Some(fd) = tree.parent(id) else { return false };
    if tree.node(fd).kind != "function_declarator" || tree.node(id).field != Some("declarator") {
        return false;
    }
    let mut cur = fd;
    while let Some(p) = tree.parent(cur) {
        if tree.node(p).kind == "declaration" {
            return tree.parent(p) == Some(tree.root());
        }
        cur = p;
    }
    false
}

/// Rename the single defined function back to `original_name`.
pub fn restore_function_name(gen_src: &str, original_name: &str) -> Result<String, MetricsError> {
    let (name, spans) = target_name_spans(gen_src)?;
    if name == original_name {
        return Ok(gen_src.to_string());
    }
    let mut list = ReplacementList::default();
    for (s, e) in spans {
        list.push(s, e, original_name);
    }
    Ok(list.apply(gen_src).expect("identifier spans never overlap"))
}
