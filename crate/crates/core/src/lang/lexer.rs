use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Ident,
    Int,
    Bool,
    Str,
    Keyword,
    Op,
    Punct,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    /// Source spelling. String literals keep their quotes and escapes.
    pub lexeme: String,
    pub line: u32,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.lexeme)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("lex error at line {line}: {message}")]
pub struct LexError {
    pub line: u32,
    pub message: String,
}

pub const KEYWORDS: &[&str] = &[
    "fun", "let", "if", "else", "while", "for", "in", "return", "print",
];

const TWO_CHAR_OPS: &[&str] = &["==", "!=", "<=", ">=", "&&", "||", ".."];

/// Splits MiniLang source into tokens. Whitespace and `//` comments are
/// dropped; every token sits on a single line.
pub fn tokenize(src: &str) -> Result<Vec<Token>, LexError> {
    let mut tokens = Vec::new();
    for (idx, line_text) in src.split('\n').enumerate() {
        let line = idx as u32 + 1;
        lex_line(line_text, line, &mut tokens)?;
    }
    Ok(tokens)
}

fn lex_line(text: &str, line: u32, out: &mut Vec<Token>) -> Result<(), LexError> {
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    let err = |message: String| LexError { line, message };
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            break;
        }
        let start = i;
        let kind = if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            if word == "true" || word == "false" {
                TokenKind::Bool
            } else if KEYWORDS.contains(&word.as_str()) {
                TokenKind::Keyword
            } else {
                TokenKind::Ident
            }
        } else if c.is_ascii_digit() {
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let digits: String = chars[start..i].iter().collect();
            if digits.parse::<i64>().is_err() {
                return Err(err(format!("integer literal {digits} out of range")));
            }
            TokenKind::Int
        } else if c == '"' {
            i += 1;
            loop {
                match chars.get(i) {
                    None => return Err(err("unterminated string literal".into())),
                    Some('"') => {
                        i += 1;
                        break;
                    }
                    Some('\\') => match chars.get(i + 1) {
                        Some('"' | '\\' | 'n' | 't') => i += 2,
                        Some(other) => return Err(err(format!("unknown escape \\{other}"))),
                        None => return Err(err("unterminated string literal".into())),
                    },
                    Some(_) => i += 1,
                }
            }
            TokenKind::Str
        } else {
            let pair: String = chars[i..(i + 2).min(chars.len())].iter().collect();
            if TWO_CHAR_OPS.contains(&pair.as_str()) {
                i += 2;
                TokenKind::Op
            } else if "+-*/%<>=!".contains(c) {
                i += 1;
                TokenKind::Op
            } else if "(){},;".contains(c) {
                i += 1;
                TokenKind::Punct
            } else {
                return Err(err(format!("illegal character '{c}'")));
            }
        };
        out.push(Token {
            kind,
            lexeme: chars[start..i].iter().collect(),
            line,
        });
    }
    Ok(())
}

/// Decodes the body of a string literal lexeme (quotes included).
pub fn unescape(lexeme: &str) -> String {
    let inner = &lexeme[1..lexeme.len() - 1];
    let mut out = String::with_capacity(inner.len());
    let mut chars = inner.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('n') => out.push('\n'),
                Some('t') => out.push('\t'),
                Some(other) => out.push(other),
                None => {}
            }
        } else {
            out.push(c);
        }
    }
    out
}

pub fn escape(value: &str) -> String {
    let mut out = String::with_capacity(value.len() + 2);
    out.push('"');
    for c in value.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            other => out.push(other),
        }
    }
    out.push('"');
    out
}

/// Whitespace- and comment-insensitive form of one line: its lexemes joined
/// by single spaces. Lines that fail to lex are returned trimmed.
pub fn normalize_line(line: &str) -> String {
    let mut toks = Vec::new();
    match lex_line(line, 1, &mut toks) {
        Ok(()) => toks
            .iter()
            .map(|t| t.lexeme.as_str())
            .collect::<Vec<_>>()
            .join(" "),
        Err(_) => line.trim().to_string(),
    }
}
