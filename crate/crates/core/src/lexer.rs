//! A tolerant lexical scanner for C-like text.
//!
//! This is not a parser. It splits text into coarse tokens (identifiers,
//! numbers, string/char literals, comments, punctuation) with byte spans and
//! never fails: unknown bytes become single-byte punctuation tokens. The
//! scanner is used wherever a full syntax tree is either unnecessary or
//! unavailable, e.g. for decompiler pseudocode, MinHash shingling, comment
//! stripping and placeholder scanning.

use std::ops::Range;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Ident,
    Number,
    Str,
    Char,
    LineComment,
    BlockComment,
    Punct,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token<'a> {
    pub kind: TokenKind,
    pub text: &'a str,
    pub span: Range<usize>,
}

impl Token<'_> {
    pub fn is_comment(&self) -> bool {
        matches!(self.kind, TokenKind::LineComment | TokenKind::BlockComment)
    }
}

fn is_ident_start(b: u8) -> bool {
    b == b'_' || b.is_ascii_alphabetic()
}

fn is_ident_continue(b: u8) -> bool {
    b == b'_' || b.is_ascii_alphanumeric()
}

/// Iterator over the tokens of `text`, whitespace skipped.
pub struct Lexer<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    pub fn new(text: &'a str) -> Self {
        Self { text, pos: 0 }
    }

    fn bytes(&self) -> &'a [u8] {
        self.text.as_bytes()
    }

    fn peek(&self, off: usize) -> Option<u8> {
        self.bytes().get(self.pos + off).copied()
    }

    // Advance to the next char boundary at or after `idx`.
    fn boundary(&self, mut idx: usize) -> usize {
        let len = self.text.len();
        while idx < len && !self.text.is_char_boundary(idx) {
            idx += 1;
        }
        idx.min(len)
    }

    fn scan_quoted(&mut self, quote: u8) {
        // Opening quote already consumed. Unterminated literals end at the
        // newline so that a stray quote cannot swallow the rest of the file.
        let bytes = self.bytes();
        while self.pos < bytes.len() {
            match bytes[self.pos] {
                b'\\' => self.pos += 2,
                b'\n' => return,
                b if b == quote => {
                    self.pos += 1;
                    return;
                }
                _ => self.pos += 1,
            }
        }
        self.pos = self.pos.min(bytes.len());
    }

    fn scan_line_comment(&mut self) {
        // A backslash-newline continues a line comment onto the next line.
        let bytes = self.bytes();
        while self.pos < bytes.len() {
            match bytes[self.pos] {
                b'\n' => return,
                b'\\' if bytes.get(self.pos + 1) == Some(&b'\n') => self.pos += 2,
                b'\\' if bytes.get(self.pos + 1) == Some(&b'\r')
                    && bytes.get(self.pos + 2) == Some(&b'\n') =>
                {
                    self.pos += 3
                }
                _ => self.pos += 1,
            }
        }
    }

    fn scan_block_comment(&mut self) {
        let bytes = self.bytes();
        while self.pos < bytes.len() {
            if bytes[self.pos] == b'*' && bytes.get(self.pos + 1) == Some(&b'/') {
                self.pos += 2;
                return;
            }
            self.pos += 1;
        }
    }
}

impl<'a> Iterator for Lexer<'a> {
    type Item = Token<'a>;

    fn next(&mut self) -> Option<Token<'a>> {
        let bytes = self.bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if self.pos >= bytes.len() {
            return None;
        }
        let start = self.pos;
        let b = bytes[start];
        let kind = match b {
            b'/' if self.peek(1) == Some(b'/') => {
                self.pos += 2;
                self.scan_line_comment();
                TokenKind::LineComment
            }
            b'/' if self.peek(1) == Some(b'*') => {
                self.pos += 2;
                self.scan_block_comment();
                TokenKind::BlockComment
            }
            b'"' => {
                self.pos += 1;
                self.scan_quoted(b'"');
                TokenKind::Str
            }
            b'\'' => {
                self.pos += 1;
                self.scan_quoted(b'\'');
                TokenKind::Char
            }
            // Encoding prefixes: L"..", u8"..", u'..', U"..".
            b'L' | b'u' | b'U' if self.string_prefix_len().is_some() => {
                let n = self.string_prefix_len().unwrap_or(0);
                let quote = bytes[start + n];
                self.pos += n + 1;
                self.scan_quoted(quote);
                if quote == b'"' {
                    TokenKind::Str
                } else {
                    TokenKind::Char
                }
            }
            b if is_ident_start(b) => {
                while self.pos < bytes.len() && is_ident_continue(bytes[self.pos]) {
                    self.pos += 1;
                }
                TokenKind::Ident
            }
            b if b.is_ascii_digit()
                || (b == b'.' && self.peek(1).is_some_and(|c| c.is_ascii_digit())) =>
            {
                self.pos += 1;
                while self.pos < bytes.len() {
                    let c = bytes[self.pos];
                    let exp_sign = (c == b'+' || c == b'-')
                        && matches!(bytes[self.pos - 1], b'e' | b'E' | b'p' | b'P');
                    if c.is_ascii_alphanumeric() || c == b'.' || c == b'_' || exp_sign {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                TokenKind::Number
            }
            _ => {
                self.pos = self.boundary(start + 1);
                TokenKind::Punct
            }
        };
        let end = self.boundary(self.pos.min(bytes.len()));
        self.pos = end;
        Some(Token {
            kind,
            text: &self.text[start..end],
            span: start..end,
        })
    }
}

impl Lexer<'_> {
    fn string_prefix_len(&self) -> Option<usize> {
        let q = |off: usize| matches!(self.peek(off), Some(b'"') | Some(b'\''));
        match (self.peek(0), self.peek(1)) {
            (Some(b'u'), Some(b'8')) if q(2) => Some(2),
            (Some(b'L' | b'u' | b'U'), _) if q(1) => Some(1),
            _ => None,
        }
    }
}

/// All tokens of `text`, comments included.
pub fn tokenize(text: &str) -> Vec<Token<'_>> {
    Lexer::new(text).collect()
}

/// Tokens with comments dropped.
pub fn code_tokens(text: &str) -> impl Iterator<Item = Token<'_>> {
    Lexer::new(text).filter(|t| !t.is_comment())
}

/// Identifier tokens outside comments and literals.
pub fn identifiers(text: &str) -> impl Iterator<Item = Token<'_>> {
    Lexer::new(text).filter(|t| t.kind == TokenKind::Ident)
}
