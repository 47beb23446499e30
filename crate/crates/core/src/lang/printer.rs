use super::ast::*;
use super::lexer::escape;

const INDENT: &str = "  ";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineRole {
    Header,
    Statement,
    /// `} else {` separating the branches of the `If` at `origin`.
    Else,
    /// Closing brace of the construct at `origin`.
    Close,
    /// Closing brace of the function whose header is at `origin`.
    FunctionClose,
}

/// One line of canonical output, tied back to the program it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrintedLine {
    pub text: String,
    pub role: LineRole,
    /// Line in the printed program's own numbering: the statement line,
    /// the owning construct's line, or the function header line.
    pub origin: Line,
    /// Index of the enclosing function in `Program::functions`.
    pub function: usize,
}

/// Canonical text: one statement per line, two-space indentation.
pub fn pretty_print(p: &Program) -> String {
    let mut out = String::new();
    for l in printed_lines(p) {
        out.push_str(&l.text);
        out.push('\n');
    }
    out
}

pub fn printed_lines(p: &Program) -> Vec<PrintedLine> {
    let mut out = Vec::new();
    for (fi, f) in p.functions.iter().enumerate() {
        let mut pr = Printer {
            out: &mut out,
            function: fi,
        };
        pr.emit(
            0,
            format!("fun {}({}) {{", f.name, f.params.join(", ")),
            LineRole::Header,
            f.header_line,
        );
        pr.block(&f.body, 1);
        pr.emit(0, "}".into(), LineRole::FunctionClose, f.header_line);
    }
    out
}

struct Printer<'a> {
    out: &'a mut Vec<PrintedLine>,
    function: usize,
}

impl Printer<'_> {
    fn emit(&mut self, depth: usize, text: String, role: LineRole, origin: Line) {
        self.out.push(PrintedLine {
            text: format!("{}{}", INDENT.repeat(depth), text),
            role,
            origin,
            function: self.function,
        });
    }

    fn block(&mut self, block: &[Stmt], depth: usize) {
        for s in block {
            self.stmt(s, depth, "");
        }
    }

    fn stmt(&mut self, s: &Stmt, depth: usize, prefix: &str) {
        let line = s.line;
        match &s.kind {
            StmtKind::Let(v, e) => self.emit(
                depth,
                format!("let {v} = {};", expr_to_string(e)),
                LineRole::Statement,
                line,
            ),
            StmtKind::Assign(v, e) => self.emit(
                depth,
                format!("{v} = {};", expr_to_string(e)),
                LineRole::Statement,
                line,
            ),
            StmtKind::Return(e) => self.emit(
                depth,
                format!("return {};", expr_to_string(e)),
                LineRole::Statement,
                line,
            ),
            StmtKind::Print(e) => self.emit(
                depth,
                format!("print({});", expr_to_string(e)),
                LineRole::Statement,
                line,
            ),
            StmtKind::ExprStmt(e) => self.emit(
                depth,
                format!("{};", expr_to_string(e)),
                LineRole::Statement,
                line,
            ),
            StmtKind::While { cond, body } => {
                self.emit(
                    depth,
                    format!("while ({}) {{", expr_to_string(cond)),
                    LineRole::Statement,
                    line,
                );
                self.block(body, depth + 1);
                self.emit(depth, "}".into(), LineRole::Close, line);
            }
            StmtKind::For {
                var,
                from,
                to,
                body,
            } => {
                self.emit(
                    depth,
                    format!(
                        "for ({var} in {}..{}) {{",
                        expr_to_string(from),
                        expr_to_string(to)
                    ),
                    LineRole::Statement,
                    line,
                );
                self.block(body, depth + 1);
                self.emit(depth, "}".into(), LineRole::Close, line);
            }
            StmtKind::If { .. } => self.if_chain(s, depth, prefix),
        }
    }

    /// Prints an `If` and any `else if` continuation. `prefix` is `"} else "`
    /// when this `If` continues an enclosing chain.
    fn if_chain(&mut self, s: &Stmt, depth: usize, prefix: &str) {
        let StmtKind::If {
            cond,
            then_block,
            else_block,
        } = &s.kind
        else {
            unreachable!("if_chain called on a non-if statement");
        };
        self.emit(
            depth,
            format!("{prefix}if ({}) {{", expr_to_string(cond)),
            LineRole::Statement,
            s.line,
        );
        self.block(then_block, depth + 1);
        match else_block.as_deref() {
            None | Some([]) => self.emit(depth, "}".into(), LineRole::Close, s.line),
            Some([nested]) if matches!(nested.kind, StmtKind::If { .. }) => {
                // else-if: the nested chain prints its own closing brace.
                self.if_chain(nested, depth, "} else ");
            }
            Some(stmts) => {
                self.emit(depth, "} else {".into(), LineRole::Else, s.line);
                self.block(stmts, depth + 1);
                self.emit(depth, "}".into(), LineRole::Close, s.line);
            }
        }
    }
}

pub fn expr_to_string(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(e, &mut s);
    s
}

fn write_expr(e: &Expr, out: &mut String) {
    match e {
        Expr::Int(v) => out.push_str(&v.to_string()),
        Expr::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Expr::Str(s) => out.push_str(&escape(s)),
        Expr::Var(v) => out.push_str(v),
        Expr::Unary(op, inner) => {
            out.push_str(op.symbol());
            if matches!(**inner, Expr::Binary(..)) {
                out.push('(');
                write_expr(inner, out);
                out.push(')');
            } else {
                write_expr(inner, out);
            }
        }
        Expr::Binary(op, l, r) => {
            write_operand(l, op.precedence(), false, out);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            write_operand(r, op.precedence(), true, out);
        }
        Expr::Call(name, args) => {
            out.push_str(name);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(a, out);
            }
            out.push(')');
        }
    }
}

fn write_operand(e: &Expr, parent_prec: u8, right: bool, out: &mut String) {
    let needs_parens = match e {
        Expr::Binary(op, ..) => {
            op.precedence() < parent_prec || (right && op.precedence() == parent_prec)
        }
        _ => false,
    };
    if needs_parens {
        out.push('(');
        write_expr(e, out);
        out.push(')');
    } else {
        write_expr(e, out);
    }
}
