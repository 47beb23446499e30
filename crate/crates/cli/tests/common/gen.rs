//! Seeded generator of syntactically valid MiniLang source text with
//! irregular layout: random spacing, line breaks, comments and redundant
//! parentheses.

use rand::rngs::StdRng;
use rand::Rng;

const VARS: &[&str] = &["a", "b", "c", "x", "y", "total", "k_2"];
const BINOPS: &[&str] = &["+", "-", "*", "/", "%", "==", "!=", "<", "<=", ">", ">=", "&&", "||"];
const STRINGS: &[&str] = &["", "hi", "a b", "quote \\\" here", "back\\\\slash", "tab\\tend", "line\\nbreak", "// not a comment"];

pub struct ProgramGen<'r> {
    rng: &'r mut StdRng,
    tokens: Vec<String>,
    functions: Vec<(String, usize)>,
}

impl<'r> ProgramGen<'r> {
    pub fn new(rng: &'r mut StdRng) -> Self {
        ProgramGen {
            rng,
            tokens: Vec::new(),
            functions: Vec::new(),
        }
    }

    /// One program as source text.
    pub fn program(mut self) -> String {
        let n_funs = self.rng.random_range(1..=3);
        self.functions = (0..n_funs)
            .map(|i| (format!("f{i}"), self.rng.random_range(0..=3)))
            .collect();
        for i in 0..n_funs {
            let (name, arity) = self.functions[i].clone();
            self.tok("fun");
            self.tok(&name);
            self.tok("(");
            for (p, v) in VARS.iter().take(arity).enumerate() {
                if p > 0 {
                    self.tok(",");
                }
                self.tok(v);
            }
            self.tok(")");
            self.block(0);
        }
        self.render()
    }

    fn tok(&mut self, t: &str) {
        self.tokens.push(t.to_string());
    }

    fn block(&mut self, depth: usize) {
        self.tok("{");
        let n = self.rng.random_range(0..=if depth == 0 { 5 } else { 3 });
        for _ in 0..n {
            self.stmt(depth);
        }
        self.tok("}");
    }

    fn var(&mut self) -> &'static str {
        VARS[self.rng.random_range(0..VARS.len())]
    }

    fn stmt(&mut self, depth: usize) {
        let nested = depth < 3;
        let choice = self.rng.random_range(0..if nested { 9 } else { 5 });
        match choice {
            0 => {
                self.tok("let");
                let v = self.var();
                self.tok(v);
                self.tok("=");
                self.expr(0);
                self.tok(";");
            }
            1 => {
                let v = self.var();
                self.tok(v);
                self.tok("=");
                self.expr(0);
                self.tok(";");
            }
            2 => {
                self.tok("return");
                self.expr(0);
                self.tok(";");
            }
            3 => {
                self.tok("print");
                self.tok("(");
                self.expr(0);
                self.tok(")");
                self.tok(";");
            }
            4 => {
                self.call(0);
                self.tok(";");
            }
            5 | 6 => self.if_stmt(depth),
            7 => {
                self.tok("while");
                self.tok("(");
                self.expr(0);
                self.tok(")");
                self.block(depth + 1);
            }
            _ => {
                self.tok("for");
                self.tok("(");
                let v = self.var();
                self.tok(v);
                self.tok("in");
                self.expr(1);
                self.tok("..");
                self.expr(1);
                self.tok(")");
                self.block(depth + 1);
            }
        }
    }

    fn if_stmt(&mut self, depth: usize) {
        self.tok("if");
        self.tok("(");
        self.expr(0);
        self.tok(")");
        self.block(depth + 1);
        match self.rng.random_range(0..4) {
            0 => {}
            1 => {
                self.tok("else");
                self.block(depth + 1);
            }
            _ if depth < 3 => {
                self.tok("else");
                self.if_stmt(depth + 1);
            }
            _ => {}
        }
    }

    fn call(&mut self, depth: usize) {
        let (name, arity) = self.functions[self.rng.random_range(0..self.functions.len())].clone();
        self.tok(&name);
        self.tok("(");
        for i in 0..arity {
            if i > 0 {
                self.tok(",");
            }
            self.expr(depth + 1);
        }
        self.tok(")");
    }

    fn expr(&mut self, depth: usize) {
        let leaf = depth >= 3 || self.rng.random_bool(0.35);
        if leaf {
            match self.rng.random_range(0..5) {
                0 | 1 => {
                    let v = self.var();
                    self.tok(v);
                }
                2 => {
                    let n = self.rng.random_range(0..1000).to_string();
                    self.tok(&n);
                }
                3 => {
                    let b = if self.rng.random_bool(0.5) { "true" } else { "false" };
                    self.tok(b);
                }
                _ => {
                    let s = format!("\"{}\"", STRINGS[self.rng.random_range(0..STRINGS.len())]);
                    self.tok(&s);
                }
            }
            return;
        }
        match self.rng.random_range(0..6) {
            0 => {
                let op = if self.rng.random_bool(0.5) { "-" } else { "!" };
                self.tok(op);
                self.expr(depth + 1);
            }
            1 => {
                self.tok("(");
                self.expr(depth + 1);
                self.tok(")");
            }
            2 => self.call(depth),
            _ => {
                self.expr(depth + 1);
                let op = BINOPS[self.rng.random_range(0..BINOPS.len())];
                self.tok(op);
                self.expr(depth + 1);
            }
        }
    }

    /// Joins tokens with random separators. Word-like and operator tokens
    /// always get at least one blank so they cannot fuse.
    fn render(mut self) -> String {
        let tokens = std::mem::take(&mut self.tokens);
        let mut out = String::new();
        for (i, t) in tokens.iter().enumerate() {
            if i > 0 {
                let punct = |s: &str| matches!(s, "(" | ")" | "{" | "}" | "," | ";");
                let may_touch = punct(t) || punct(&tokens[i - 1]);
                let r = self.rng.random_range(0..20);
                let sep = match r {
                    0..=7 if may_touch => "",
                    0..=13 => " ",
                    14 => "   ",
                    15 | 16 => "\n",
                    17 => "\n\n  ",
                    18 => "\t",
                    _ => " // note\n",
                };
                out.push_str(sep);
            }
            out.push_str(t);
        }
        out.push('\n');
        out
    }
}
