//! MiniLang: lexer, parser, line-annotated syntax tree and canonical printer.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod printer;

pub use ast::*;
pub use lexer::{tokenize, LexError, Token, TokenKind};
pub use parser::{parse, ParseError};
pub use printer::{pretty_print, printed_lines, LineRole, PrintedLine};
