use std::collections::HashSet;

use thiserror::Error;

use super::ast::*;
use super::lexer::{tokenize, unescape, LexError, Token, TokenKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error("parse error at line {line}: expected {expected}, found {found}")]
    Unexpected {
        line: Line,
        expected: String,
        found: String,
    },
    #[error("duplicate function '{0}'")]
    DuplicateFunction(String),
    #[error("duplicate parameter '{param}' in function '{function}'")]
    DuplicateParam { function: String, param: String },
}

impl ParseError {
    pub fn line(&self) -> Option<Line> {
        match self {
            ParseError::Lex(e) => Some(e.line),
            ParseError::Unexpected { line, .. } => Some(*line),
            _ => None,
        }
    }
}

/// Parses MiniLang source into a line-annotated [`Program`].
pub fn parse(src: &str) -> Result<Program, ParseError> {
    let tokens = tokenize(src)?;
    let last_line = src.split('\n').count() as Line;
    let mut parser = Parser {
        tokens,
        pos: 0,
        last_line,
    };
    let mut functions = Vec::new();
    let mut seen = HashSet::new();
    loop {
        if parser.peek().is_none() {
            break;
        }
        let f = parser.fundef()?;
        if !seen.insert(f.name.clone()) {
            return Err(ParseError::DuplicateFunction(f.name));
        }
        functions.push(f);
    }
    if functions.is_empty() {
        return Err(ParseError::Unexpected {
            line: 1,
            expected: "function definition".into(),
            found: "end of input".into(),
        });
    }
    let source_lines = src.trim_end_matches('\n').split('\n').count() as u32;
    Ok(Program {
        functions,
        source_lines,
    })
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    last_line: Line,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, offset: usize) -> Option<&Token> {
        self.tokens.get(self.pos + offset)
    }

    fn peek_is(&self, lexeme: &str) -> bool {
        self.peek().is_some_and(|t| t.lexeme == lexeme && t.kind != TokenKind::Str)
    }

    fn current_line(&self) -> Line {
        self.peek()
            .or_else(|| self.tokens.last())
            .map_or(self.last_line, |t| t.line)
    }

    fn error<T>(&self, expected: &str) -> PResult<T> {
        let (line, found) = match self.peek() {
            Some(t) => (t.line, format!("'{}'", t.lexeme)),
            None => (self.current_line(), "end of input".to_string()),
        };
        Err(ParseError::Unexpected {
            line,
            expected: expected.to_string(),
            found,
        })
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, lexeme: &str) -> PResult<Token> {
        if self.peek_is(lexeme) {
            Ok(self.next().unwrap())
        } else {
            self.error(&format!("'{lexeme}'"))
        }
    }

    fn ident(&mut self) -> PResult<Token> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Ident => Ok(self.next().unwrap()),
            _ => self.error("identifier"),
        }
    }

    fn fundef(&mut self) -> PResult<FunctionDef> {
        let header = self.expect("fun")?;
        let name = self.ident()?.lexeme;
        self.expect("(")?;
        let mut params = Vec::new();
        if !self.peek_is(")") {
            loop {
                let p = self.ident()?.lexeme;
                if params.contains(&p) {
                    return Err(ParseError::DuplicateParam {
                        function: name,
                        param: p,
                    });
                }
                params.push(p);
                if self.peek_is(",") {
                    self.next();
                } else {
                    break;
                }
            }
        }
        self.expect(")")?;
        self.expect("{")?;
        let first_body_line = self.current_line();
        let (body, end_line) = self.block_rest()?;
        Ok(FunctionDef {
            name,
            params,
            body,
            header_line: header.line,
            first_body_line,
            end_line,
        })
    }

    fn block(&mut self) -> PResult<Block> {
        self.expect("{")?;
        Ok(self.block_rest()?.0)
    }

    /// Statements after an opening brace, up to and including `}`.
    fn block_rest(&mut self) -> PResult<(Block, Line)> {
        let mut stmts = Vec::new();
        loop {
            if self.peek_is("}") {
                let close = self.next().unwrap();
                return Ok((stmts, close.line));
            }
            if self.peek().is_none() {
                return self.error("'}'");
            }
            stmts.push(self.stmt()?);
        }
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let first = self.peek().cloned().expect("caller checked for a token");
        let line = first.line;
        let kind = match (first.kind, first.lexeme.as_str()) {
            (TokenKind::Keyword, "let") => {
                self.next();
                let name = self.ident()?.lexeme;
                self.expect("=")?;
                let e = self.expr()?;
                self.expect(";")?;
                StmtKind::Let(name, e)
            }
            (TokenKind::Keyword, "if") => return self.if_stmt(),
            (TokenKind::Keyword, "while") => {
                self.next();
                self.expect("(")?;
                let cond = self.expr()?;
                self.expect(")")?;
                let body = self.block()?;
                StmtKind::While { cond, body }
            }
            (TokenKind::Keyword, "for") => {
                self.next();
                self.expect("(")?;
                let var = self.ident()?.lexeme;
                self.expect("in")?;
                let from = self.expr()?;
                self.expect("..")?;
                let to = self.expr()?;
                self.expect(")")?;
                let body = self.block()?;
                StmtKind::For {
                    var,
                    from,
                    to,
                    body,
                }
            }
            (TokenKind::Keyword, "return") => {
                self.next();
                let e = self.expr()?;
                self.expect(";")?;
                StmtKind::Return(e)
            }
            (TokenKind::Keyword, "print") => {
                self.next();
                self.expect("(")?;
                let e = self.expr()?;
                self.expect(")")?;
                self.expect(";")?;
                StmtKind::Print(e)
            }
            (TokenKind::Ident, _) if self.peek_at(1).is_some_and(|t| t.lexeme == "=") => {
                let name = self.next().unwrap().lexeme;
                self.next();
                let e = self.expr()?;
                self.expect(";")?;
                StmtKind::Assign(name, e)
            }
            _ => {
                let e = self.expr()?;
                if !matches!(e, Expr::Call(..)) {
                    return Err(ParseError::Unexpected {
                        line,
                        expected: "statement".into(),
                        found: "expression without effect".into(),
                    });
                }
                self.expect(";")?;
                StmtKind::ExprStmt(e)
            }
        };
        Ok(Stmt { line, kind })
    }

    fn if_stmt(&mut self) -> PResult<Stmt> {
        let line = self.expect("if")?.line;
        self.expect("(")?;
        let cond = self.expr()?;
        self.expect(")")?;
        let then_block = self.block()?;
        let else_block = if self.peek_is("else") {
            self.next();
            if self.peek_is("if") {
                Some(vec![self.if_stmt()?])
            } else {
                Some(self.block()?)
            }
        } else {
            None
        };
        // `else {}` carries no statements; canonical form drops it.
        let else_block = else_block.filter(|b| !b.is_empty());
        Ok(Stmt {
            line,
            kind: StmtKind::If {
                cond,
                then_block,
                else_block,
            },
        })
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(t) if t.kind == TokenKind::Op => match BinOp::from_symbol(&t.lexeme) {
                    Some(op) if op.precedence() >= min_prec => op,
                    _ => break,
                },
                _ => break,
            };
            self.next();
            let rhs = self.binary(op.precedence() + 1)?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.peek_is("-") {
            self.next();
            return Ok(Expr::Unary(UnaryOp::Neg, Box::new(self.unary()?)));
        }
        if self.peek_is("!") {
            self.next();
            return Ok(Expr::Unary(UnaryOp::Not, Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> PResult<Expr> {
        let Some(tok) = self.peek().cloned() else {
            return self.error("expression");
        };
        match tok.kind {
            TokenKind::Int => {
                self.next();
                Ok(Expr::Int(tok.lexeme.parse().expect("lexer validated range")))
            }
            TokenKind::Bool => {
                self.next();
                Ok(Expr::Bool(tok.lexeme == "true"))
            }
            TokenKind::Str => {
                self.next();
                Ok(Expr::Str(unescape(&tok.lexeme)))
            }
            TokenKind::Ident => {
                self.next();
                if self.peek_is("(") {
                    self.next();
                    let mut args = Vec::new();
                    if !self.peek_is(")") {
                        loop {
                            args.push(self.expr()?);
                            if self.peek_is(",") {
                                self.next();
                            } else {
                                break;
                            }
                        }
                    }
                    self.expect(")")?;
                    Ok(Expr::Call(tok.lexeme, args))
                } else {
                    Ok(Expr::Var(tok.lexeme))
                }
            }
            TokenKind::Punct if tok.lexeme == "(" => {
                self.next();
                let e = self.expr()?;
                self.expect(")")?;
                Ok(e)
            }
            _ => self.error("expression"),
        }
    }
}
