//! Source rewrites used as negative controls. Purely textual, so they do
//! not depend on the parser under test.

/// Same signature as `name`'s definition, body replaced by a constant.
pub fn constant_body(src: &str, name: &str) -> String {
    let at = src.find(&format!("{name}(")).expect("function name present");
    let open = at + src[at..].find('{').expect("function body");
    let sig = &src[..open];
    let line_start = sig[..at].rfind('\n').map_or(0, |i| i + 1);
    let returns_void = sig[line_start..].starts_with("void ") && !sig[line_start..].starts_with("void *");
    let body = if returns_void { "{ }" } else { "{ return 0; }" };
    format!("{sig}{body}\n")
}

/// A jump to a label right after it, inserted at the top of the last
/// function body (`)` then newline then `{`).
pub fn inject_goto(src: &str) -> String {
    let open = src.rfind(")\n{").expect("K&R-style function body") + 3;
    format!("{}\n    goto skip_ahead;\nskip_ahead:\n    ;{}", &src[..open], &src[open..])
}
