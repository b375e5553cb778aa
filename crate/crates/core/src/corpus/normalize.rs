//! Comment removal and whitespace canonicalization.

use std::process::Command;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::lexer::{self, TokenKind};
use crate::sandbox::{self, Limits};

/// Drop every comment. A block comment between two tokens on one line
/// becomes a single space so the tokens stay separated.
pub fn strip_comments(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for tok in lexer::tokenize(text) {
        if !tok.is_comment() {
            continue;
        }
        out.push_str(&text[last..tok.span.start]);
        if tok.kind == TokenKind::BlockComment && tok.text.contains('\n') {
            out.push('\n');
        } else {
            out.push(' ');
        }
        last = tok.span.end;
    }
    out.push_str(&text[last..]);
    out
}

/// Deterministic layout pass: CRLF to LF, trailing whitespace removed,
/// leading tabs expanded to four spaces, runs of blank lines collapsed to
/// one, no leading or trailing blank lines.
pub fn canonicalize_whitespace(text: &str) -> String {
    let mut lines: Vec<String> = Vec::new();
    let mut blank_run = false;
    for raw in text.split('\n') {
        let line = raw.trim_end();
        if line.is_empty() {
            blank_run = !lines.is_empty();
            continue;
        }
        if blank_run {
            lines.push(String::new());
            blank_run = false;
        }
        let indent_len = line.len() - line.trim_start_matches([' ', '\t']).len();
        let mut s = String::with_capacity(line.len());
        for c in line[..indent_len].chars() {
            s.push_str(if c == '\t' { "    " } else { " " });
        }
        s.push_str(&line[indent_len..]);
        lines.push(s);
    }
    lines.join("\n")
}

/// Optional external formatter (e.g. `clang-format`) reading stdin and
/// writing stdout. The built-in pass always runs afterwards.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormatterHook {
    pub command: Vec<String>,
}

impl FormatterHook {
    fn apply(&self, text: &str) -> Option<String> {
        let (prog, args) = self.command.split_first()?;
        let mut cmd = Command::new(prog);
        cmd.args(args);
        match sandbox::run(cmd, Some(text.as_bytes()), Duration::from_secs(30), &Limits::compiler()) {
            Ok(out) if out.termination.success() => String::from_utf8(out.stdout).ok(),
            Ok(out) => {
                log::warn!("formatter {prog} failed with {:?}; using built-in layout", out.termination);
                None
            }
            Err(e) => {
                log::warn!("formatter {prog} could not run: {e}; using built-in layout");
                None
            }
        }
    }
}

pub fn normalize_source(source: &str) -> String {
    normalize_with(source, None)
}

/// Same treatment as source; kept separate so the two may diverge.
pub fn normalize_pseudo(pseudo: &str) -> String {
    normalize_with(pseudo, None)
}

pub fn normalize_with(text: &str, hook: Option<&FormatterHook>) -> String {
    let text = text.replace("\r\n", "\n");
    let stripped = strip_comments(&text);
    let formatted = hook.and_then(|h| h.apply(&stripped)).unwrap_or(stripped);
    canonicalize_whitespace(&formatted)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_comment() {
        assert_eq!(normalize_source("int x; // note"), "int x;");
    }

    #[test]
    fn literal_protected() {
        let s = "char*s=\"//not a comment\";";
        assert_eq!(normalize_source(s), s);
        assert_eq!(normalize_source("char c = '/'; /* x */ int y;"), "char c = '/';   int y;");
    }

    #[test]
    fn block_comment_between_tokens() {
        assert_eq!(normalize_source("int/*x*/y;"), "int y;");
        assert_eq!(normalize_source("int a; /* multi\nline */ int b;"), "int a;\n int b;");
    }

    #[test]
    fn layout() {
        let s = "\n\n// header\nint f(void)\r\n{\t\n\treturn 0;   \n\n\n}\n\n";
        assert_eq!(normalize_source(s), "int f(void)\n{\n    return 0;\n\n}");
    }

    #[test]
    fn pseudo_mirror() {
        assert_eq!(normalize_pseudo("__int64 sub_1000() // IDA\n{\n  return 0LL;\n}"), "__int64 sub_1000()\n{\n  return 0LL;\n}");
        assert_eq!(normalize_pseudo("v1 = \"/* keep */\";"), "v1 = \"/* keep */\";");
    }

    #[test]
    fn failing_hook_falls_back() {
        let hook = FormatterHook { command: vec!["false".into()] };
        assert_eq!(normalize_with("int x; // c", Some(&hook)), "int x;");
        let cat = FormatterHook { command: vec!["cat".into()] };
        assert_eq!(normalize_with("int x; // c", Some(&cat)), "int x;");
    }
}
