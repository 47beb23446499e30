use std::fmt;

/// Source line number, counted from 1.
pub type Line = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 3,
            BinOp::Add | BinOp::Sub => 4,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 5,
        }
    }

    pub fn from_symbol(s: &str) -> Option<BinOp> {
        Some(match s {
            "+" => BinOp::Add,
            "-" => BinOp::Sub,
            "*" => BinOp::Mul,
            "/" => BinOp::Div,
            "%" => BinOp::Rem,
            "==" => BinOp::Eq,
            "!=" => BinOp::Ne,
            "<" => BinOp::Lt,
            "<=" => BinOp::Le,
            ">" => BinOp::Gt,
            ">=" => BinOp::Ge,
            "&&" => BinOp::And,
            "||" => BinOp::Or,
            _ => return None,
        })
    }

    pub const ALL: [BinOp; 13] = [
        BinOp::Add,
        BinOp::Sub,
        BinOp::Mul,
        BinOp::Div,
        BinOp::Rem,
        BinOp::Eq,
        BinOp::Ne,
        BinOp::Lt,
        BinOp::Le,
        BinOp::Gt,
        BinOp::Ge,
        BinOp::And,
        BinOp::Or,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Not,
}

impl UnaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Not => "!",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Int(i64),
    Bool(bool),
    Str(String),
    Var(String),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(String, Vec<Expr>),
}

impl Expr {
    /// Variables read by this expression, in first-occurrence order.
    pub fn vars(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Var(name) => {
                if !out.contains(&name.as_str()) {
                    out.push(name);
                }
            }
            Expr::Unary(_, e) => e.collect_vars(out),
            Expr::Binary(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
            Expr::Int(_) | Expr::Bool(_) | Expr::Str(_) => {}
        }
    }

    /// Names of functions called anywhere inside this expression.
    pub fn calls(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let Expr::Call(name, _) = e {
                out.push(name.as_str());
            }
        });
        out
    }

    /// Variables that appear as a direct operand of some binary expression.
    pub fn binary_operand_vars(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        self.visit(&mut |e| {
            if let Expr::Binary(_, l, r) = e {
                for side in [l, r] {
                    if let Expr::Var(v) = side.as_ref() {
                        if !out.contains(&v.as_str()) {
                            out.push(v);
                        }
                    }
                }
            }
        });
        out
    }

    fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Unary(_, e) => e.visit(f),
            Expr::Binary(_, l, r) => {
                l.visit(f);
                r.visit(f);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.visit(f)),
            _ => {}
        }
    }
}

pub type Block = Vec<Stmt>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stmt {
    pub line: Line,
    pub kind: StmtKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    Let(String, Expr),
    Assign(String, Expr),
    If {
        cond: Expr,
        then_block: Block,
        else_block: Option<Block>,
    },
    While {
        cond: Expr,
        body: Block,
    },
    For {
        var: String,
        from: Expr,
        to: Expr,
        body: Block,
    },
    Return(Expr),
    Print(Expr),
    /// A bare call evaluated for its effects.
    ExprStmt(Expr),
}

impl Stmt {
    pub fn is_construct(&self) -> bool {
        matches!(
            self.kind,
            StmtKind::If { .. } | StmtKind::While { .. } | StmtKind::For { .. }
        )
    }

    /// Variable written by this statement, if any.
    pub fn written_var(&self) -> Option<&str> {
        match &self.kind {
            StmtKind::Let(v, _) | StmtKind::Assign(v, _) | StmtKind::For { var: v, .. } => Some(v),
            _ => None,
        }
    }

    /// Expressions evaluated at this statement's own line (not in nested blocks).
    pub fn own_exprs(&self) -> Vec<&Expr> {
        match &self.kind {
            StmtKind::Let(_, e)
            | StmtKind::Assign(_, e)
            | StmtKind::Return(e)
            | StmtKind::Print(e)
            | StmtKind::ExprStmt(e) => vec![e],
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => vec![cond],
            StmtKind::For { from, to, .. } => vec![from, to],
        }
    }

    /// Variables read at this statement's own line.
    pub fn read_vars(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for e in self.own_exprs() {
            for v in e.vars() {
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        }
        out
    }

    /// Nested blocks in source order.
    pub fn blocks(&self) -> Vec<&Block> {
        match &self.kind {
            StmtKind::If {
                then_block,
                else_block,
                ..
            } => {
                let mut v = vec![then_block];
                if let Some(b) = else_block {
                    v.push(b);
                }
                v
            }
            StmtKind::While { body, .. } | StmtKind::For { body, .. } => vec![body],
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionDef {
    pub name: String,
    pub params: Vec<String>,
    pub body: Block,
    pub header_line: Line,
    /// Line of the first token after the opening brace: the first body
    /// statement, or the closing brace of an empty body.
    pub first_body_line: Line,
    /// Line of the closing brace.
    pub end_line: Line,
}

impl FunctionDef {
    /// All statements of the body in pre-order (source order).
    pub fn statements(&self) -> Vec<&Stmt> {
        let mut out = Vec::new();
        walk_block(&self.body, &mut out);
        out
    }

    pub fn first_statement_line(&self) -> Option<Line> {
        self.body.first().map(|s| s.line)
    }

    pub fn contains_line(&self, line: Line) -> bool {
        (self.header_line..=self.end_line).contains(&line)
    }
}

fn walk_block<'a>(block: &'a Block, out: &mut Vec<&'a Stmt>) {
    for s in block {
        out.push(s);
        for b in s.blocks() {
            walk_block(b, out);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub functions: Vec<FunctionDef>,
    pub source_lines: u32,
}

impl Program {
    pub fn function(&self, name: &str) -> Option<&FunctionDef> {
        self.functions.iter().find(|f| f.name == name)
    }

    /// Function whose span contains `line`.
    pub fn function_at(&self, line: Line) -> Option<&FunctionDef> {
        self.functions.iter().find(|f| f.contains_line(line))
    }

    /// Statements in source order across all functions.
    pub fn statements(&self) -> Vec<&Stmt> {
        self.functions.iter().flat_map(|f| f.statements()).collect()
    }

    /// Statements whose line is `line`.
    pub fn statements_at(&self, line: Line) -> Vec<&Stmt> {
        self.statements()
            .into_iter()
            .filter(|s| s.line == line)
            .collect()
    }

    pub fn is_statement_line(&self, line: Line) -> bool {
        self.statements().iter().any(|s| s.line == line)
    }

    /// Line-insensitive structural comparison. An empty `else` block is
    /// treated as absent.
    pub fn same_structure(&self, other: &Program) -> bool {
        self.functions.len() == other.functions.len()
            && self
                .functions
                .iter()
                .zip(&other.functions)
                .all(|(a, b)| {
                    a.name == b.name && a.params == b.params && same_block(&a.body, &b.body)
                })
    }
}

fn same_block(a: &Block, b: &Block) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| same_stmt(x, y))
}

fn same_stmt(a: &Stmt, b: &Stmt) -> bool {
    use StmtKind::*;
    match (&a.kind, &b.kind) {
        (
            If {
                cond: c1,
                then_block: t1,
                else_block: e1,
            },
            If {
                cond: c2,
                then_block: t2,
                else_block: e2,
            },
        ) => {
            let empty = Vec::new();
            c1 == c2
                && same_block(t1, t2)
                && same_block(e1.as_ref().unwrap_or(&empty), e2.as_ref().unwrap_or(&empty))
        }
        (While { cond: c1, body: b1 }, While { cond: c2, body: b2 }) => {
            c1 == c2 && same_block(b1, b2)
        }
        (
            For {
                var: v1,
                from: f1,
                to: t1,
                body: b1,
            },
            For {
                var: v2,
                from: f2,
                to: t2,
                body: b2,
            },
        ) => v1 == v2 && f1 == f2 && t1 == t2 && same_block(b1, b2),
        (x, y) => x == y,
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::printer::pretty_print(self))
    }
}
