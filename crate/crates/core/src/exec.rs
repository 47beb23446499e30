//! Tree-walking interpreter and test runner.
//!
//! Execution is the ground truth for every pass/fail decision in the
//! engine: corpus validation, repair acceptance and store uploads.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::{BinOp, Block, Expr, Line, Program, Stmt, StmtKind, UnaryOp};

pub const DEFAULT_STEP_LIMIT: u64 = 100_000;
/// Nested call depth at which execution is abandoned with a runtime error.
pub const MAX_CALL_DEPTH: usize = 200;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Bool(bool),
    Str(String),
    /// Serialized as JSON `null`.
    Unit,
}

impl Value {
    fn kind_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "int",
            Value::Bool(_) => "bool",
            Value::Str(_) => "string",
            Value::Unit => "unit",
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Str(s) => f.write_str(s),
            Value::Unit => f.write_str("unit"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecError {
    #[error("runtime error at line {line}: {reason}")]
    Runtime { line: Line, reason: String },
    #[error("step limit of {limit} exceeded")]
    Timeout { limit: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunResult {
    pub value: Value,
    pub stdout: String,
    pub steps: u64,
}

/// Calls `entry` with `args`, counting statement executions against
/// `step_limit`. Line 0 in a runtime error means the failure happened
/// before any statement ran (unknown entry or wrong arity).
pub fn run_call(
    p: &Program,
    entry: &str,
    args: &[Value],
    step_limit: u64,
) -> Result<RunResult, ExecError> {
    let mut interp = Interpreter {
        program: p,
        stdout: String::new(),
        steps: 0,
        step_limit,
        depth: 0,
    };
    let value = interp.call(entry, args.to_vec(), 0)?;
    Ok(RunResult {
        value,
        stdout: interp.stdout,
        steps: interp.steps,
    })
}

enum Flow {
    Normal,
    Return(Value),
}

struct Interpreter<'p> {
    program: &'p Program,
    stdout: String,
    steps: u64,
    step_limit: u64,
    depth: usize,
}

type Env = HashMap<String, Value>;

fn runtime(line: Line, reason: impl Into<String>) -> ExecError {
    ExecError::Runtime {
        line,
        reason: reason.into(),
    }
}

impl<'p> Interpreter<'p> {
    fn call(&mut self, name: &str, args: Vec<Value>, line: Line) -> Result<Value, ExecError> {
        let f = self
            .program
            .function(name)
            .ok_or_else(|| runtime(line, format!("unknown function '{name}'")))?;
        if f.params.len() != args.len() {
            return Err(runtime(
                line,
                format!(
                    "function '{name}' takes {} argument(s), got {}",
                    f.params.len(),
                    args.len()
                ),
            ));
        }
        if self.depth >= MAX_CALL_DEPTH {
            return Err(runtime(line, "call depth exceeded"));
        }
        self.depth += 1;
        let mut env: Env = f.params.iter().cloned().zip(args).collect();
        let flow = self.block(&f.body, &mut env);
        self.depth -= 1;
        Ok(match flow? {
            Flow::Return(v) => v,
            Flow::Normal => Value::Unit,
        })
    }

    fn tick(&mut self) -> Result<(), ExecError> {
        self.steps += 1;
        if self.steps > self.step_limit {
            Err(ExecError::Timeout {
                limit: self.step_limit,
            })
        } else {
            Ok(())
        }
    }

    fn block(&mut self, block: &Block, env: &mut Env) -> Result<Flow, ExecError> {
        for s in block {
            if let Flow::Return(v) = self.stmt(s, env)? {
                return Ok(Flow::Return(v));
            }
        }
        Ok(Flow::Normal)
    }

    fn stmt(&mut self, s: &Stmt, env: &mut Env) -> Result<Flow, ExecError> {
        self.tick()?;
        let line = s.line;
        match &s.kind {
            StmtKind::Let(v, e) => {
                let val = self.expr(e, env, line)?;
                env.insert(v.clone(), val);
            }
            StmtKind::Assign(v, e) => {
                let val = self.expr(e, env, line)?;
                match env.get_mut(v) {
                    Some(slot) => *slot = val,
                    None => return Err(runtime(line, format!("unbound variable '{v}'"))),
                }
            }
            StmtKind::If {
                cond,
                then_block,
                else_block,
            } => {
                if self.condition(cond, env, line)? {
                    return self.block(then_block, env);
                } else if let Some(b) = else_block {
                    return self.block(b, env);
                }
            }
            StmtKind::While { cond, body } => {
                let mut first = true;
                loop {
                    // Every re-evaluation of the condition costs a step.
                    if !first {
                        self.tick()?;
                    }
                    first = false;
                    if !self.condition(cond, env, line)? {
                        break;
                    }
                    if let Flow::Return(v) = self.block(body, env)? {
                        return Ok(Flow::Return(v));
                    }
                }
            }
            StmtKind::For {
                var,
                from,
                to,
                body,
            } => {
                let lo = self.int(from, env, line)?;
                let hi = self.int(to, env, line)?;
                let mut k = lo;
                while k <= hi {
                    self.tick()?;
                    env.insert(var.clone(), Value::Int(k));
                    if let Flow::Return(v) = self.block(body, env)? {
                        return Ok(Flow::Return(v));
                    }
                    match k.checked_add(1) {
                        Some(next) => k = next,
                        None => break,
                    }
                }
            }
            StmtKind::Return(e) => return Ok(Flow::Return(self.expr(e, env, line)?)),
            StmtKind::Print(e) => {
                let v = self.expr(e, env, line)?;
                self.stdout.push_str(&v.to_string());
                self.stdout.push('\n');
            }
            StmtKind::ExprStmt(e) => {
                self.expr(e, env, line)?;
            }
        }
        Ok(Flow::Normal)
    }

    fn condition(&mut self, e: &Expr, env: &mut Env, line: Line) -> Result<bool, ExecError> {
        match self.expr(e, env, line)? {
            Value::Bool(b) => Ok(b),
            other => Err(runtime(
                line,
                format!("type mismatch: condition is {}", other.kind_name()),
            )),
        }
    }

    fn int(&mut self, e: &Expr, env: &mut Env, line: Line) -> Result<i64, ExecError> {
        match self.expr(e, env, line)? {
            Value::Int(v) => Ok(v),
            other => Err(runtime(
                line,
                format!("type mismatch: expected int, got {}", other.kind_name()),
            )),
        }
    }

    fn expr(&mut self, e: &Expr, env: &mut Env, line: Line) -> Result<Value, ExecError> {
        Ok(match e {
            Expr::Int(v) => Value::Int(*v),
            Expr::Bool(b) => Value::Bool(*b),
            Expr::Str(s) => Value::Str(s.clone()),
            Expr::Var(v) => env
                .get(v)
                .cloned()
                .ok_or_else(|| runtime(line, format!("unbound variable '{v}'")))?,
            Expr::Unary(op, inner) => match (op, self.expr(inner, env, line)?) {
                (UnaryOp::Neg, Value::Int(v)) => Value::Int(
                    v.checked_neg()
                        .ok_or_else(|| runtime(line, "integer overflow"))?,
                ),
                (UnaryOp::Not, Value::Bool(b)) => Value::Bool(!b),
                (op, v) => {
                    return Err(runtime(
                        line,
                        format!(
                            "type mismatch: '{}' applied to {}",
                            op.symbol(),
                            v.kind_name()
                        ),
                    ))
                }
            },
            Expr::Binary(BinOp::And, l, r) => {
                Value::Bool(self.condition(l, env, line)? && self.condition(r, env, line)?)
            }
            Expr::Binary(BinOp::Or, l, r) => {
                Value::Bool(self.condition(l, env, line)? || self.condition(r, env, line)?)
            }
            Expr::Binary(op, l, r) => {
                let lv = self.expr(l, env, line)?;
                let rv = self.expr(r, env, line)?;
                binary(*op, lv, rv, line)?
            }
            Expr::Call(name, args) => {
                let vals = args
                    .iter()
                    .map(|a| self.expr(a, env, line))
                    .collect::<Result<Vec<_>, _>>()?;
                self.call(name, vals, line)?
            }
        })
    }
}

fn binary(op: BinOp, l: Value, r: Value, line: Line) -> Result<Value, ExecError> {
    use BinOp::*;
    match (op, &l, &r) {
        (Eq, _, _) | (Ne, _, _) => {
            if std::mem::discriminant(&l) != std::mem::discriminant(&r) {
                return Err(runtime(
                    line,
                    format!(
                        "type mismatch: cannot compare {} with {}",
                        l.kind_name(),
                        r.kind_name()
                    ),
                ));
            }
            Ok(Value::Bool((l == r) == (op == Eq)))
        }
        (_, Value::Int(a), Value::Int(b)) => {
            let (a, b) = (*a, *b);
            let overflow = || runtime(line, "integer overflow");
            Ok(match op {
                Add => Value::Int(a.checked_add(b).ok_or_else(overflow)?),
                Sub => Value::Int(a.checked_sub(b).ok_or_else(overflow)?),
                Mul => Value::Int(a.checked_mul(b).ok_or_else(overflow)?),
                Div | Rem => {
                    if b == 0 {
                        return Err(runtime(
                            line,
                            if op == Div {
                                "division by zero"
                            } else {
                                "modulo by zero"
                            },
                        ));
                    }
                    let r = if op == Div {
                        a.checked_div(b)
                    } else {
                        a.checked_rem(b)
                    };
                    Value::Int(r.ok_or_else(overflow)?)
                }
                Lt => Value::Bool(a < b),
                Le => Value::Bool(a <= b),
                Gt => Value::Bool(a > b),
                Ge => Value::Bool(a >= b),
                Eq | Ne | And | Or => unreachable!("handled above"),
            })
        }
        _ => Err(runtime(
            line,
            format!(
                "type mismatch: {} {} {}",
                l.kind_name(),
                op.symbol(),
                r.kind_name()
            ),
        )),
    }
}

/// One test of a task suite. At least one expectation must be present.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCase {
    pub id: String,
    pub entry: String,
    #[serde(default)]
    pub args: Vec<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_value: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_stdout: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestStatus {
    Pass,
    Fail,
    RuntimeError,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TestVerdict {
    pub test_id: String,
    pub status: TestStatus,
    pub actual_value: Option<Value>,
    pub actual_stdout: String,
    pub steps_used: u64,
    /// Runtime error text, for `RuntimeError` and `Timeout` statuses.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl TestVerdict {
    pub fn passed(&self) -> bool {
        self.status == TestStatus::Pass
    }
}

pub fn run_test(p: &Program, t: &TestCase) -> TestVerdict {
    run_test_with_limit(p, t, DEFAULT_STEP_LIMIT)
}

pub fn run_test_with_limit(p: &Program, t: &TestCase, step_limit: u64) -> TestVerdict {
    match run_call(p, &t.entry, &t.args, step_limit) {
        Ok(r) => {
            let value_ok = t.expected_value.as_ref().is_none_or(|v| *v == r.value);
            let stdout_ok = t.expected_stdout.as_ref().is_none_or(|s| *s == r.stdout);
            TestVerdict {
                test_id: t.id.clone(),
                status: if value_ok && stdout_ok {
                    TestStatus::Pass
                } else {
                    TestStatus::Fail
                },
                actual_value: Some(r.value),
                actual_stdout: r.stdout,
                steps_used: r.steps,
                error: None,
            }
        }
        Err(e) => TestVerdict {
            test_id: t.id.clone(),
            status: match e {
                ExecError::Runtime { .. } => TestStatus::RuntimeError,
                ExecError::Timeout { .. } => TestStatus::Timeout,
            },
            actual_value: None,
            actual_stdout: String::new(),
            steps_used: match e {
                ExecError::Timeout { limit } => limit,
                ExecError::Runtime { .. } => 0,
            },
            error: Some(e.to_string()),
        },
    }
}

pub fn run_suite(p: &Program, suite: &[TestCase]) -> Vec<TestVerdict> {
    suite.iter().map(|t| run_test(p, t)).collect()
}

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("cannot read test suite {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed test suite: {0}")]
    Json(#[from] serde_json::Error),
    #[error("duplicate test id '{0}'")]
    DuplicateId(String),
    #[error("test '{0}' has neither expected_value nor expected_stdout")]
    NoExpectation(String),
}

/// A task's test-suite document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestSuite {
    pub task_id: String,
    pub tests: Vec<TestCase>,
}

impl TestSuite {
    pub fn from_json(text: &str) -> Result<Self, SuiteError> {
        let suite: TestSuite = serde_json::from_str(text)?;
        let mut seen = std::collections::HashSet::new();
        for t in &suite.tests {
            if !seen.insert(t.id.as_str()) {
                return Err(SuiteError::DuplicateId(t.id.clone()));
            }
            if t.expected_value.is_none() && t.expected_stdout.is_none() {
                return Err(SuiteError::NoExpectation(t.id.clone()));
            }
        }
        Ok(suite)
    }

    pub fn load(path: &Path) -> Result<Self, SuiteError> {
        let text = std::fs::read_to_string(path).map_err(|source| SuiteError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn test(&self, id: &str) -> Option<&TestCase> {
        self.tests.iter().find(|t| t.id == id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;

    const STU: &str = "fun sum(n) {\n  let s = 0;\n  let i = 1;\n  while (i < n) {\n    s = s + i;\n    i = i + 1;\n  }\n  return s;\n}\n";

    fn fix() -> Program {
        parse(&STU.replace("i < n", "i <= n")).unwrap()
    }

    fn sum_test(id: &str, n: i64, expected: i64) -> TestCase {
        TestCase {
            id: id.into(),
            entry: "sum".into(),
            args: vec![Value::Int(n)],
            expected_value: Some(Value::Int(expected)),
            expected_stdout: None,
        }
    }

    #[test]
    fn fixed_sum_of_three() {
        let r = run_call(&fix(), "sum", &[Value::Int(3)], 10_000).unwrap();
        assert_eq!(r.value, Value::Int(6));
        assert_eq!(r.stdout, "");
        assert!(r.steps <= 20, "steps = {}", r.steps);
    }

    #[test]
    fn student_sum_of_three() {
        let r = run_call(&parse(STU).unwrap(), "sum", &[Value::Int(3)], 10_000).unwrap();
        assert_eq!(r.value, Value::Int(3));
    }

    #[test]
    fn division_by_zero() {
        let p = parse("fun f(){ return 1/0; }").unwrap();
        let e = run_call(&p, "f", &[], 100).unwrap_err();
        assert_eq!(
            e,
            ExecError::Runtime {
                line: 1,
                reason: "division by zero".into()
            }
        );
    }

    #[test]
    fn run_test_statuses() {
        let stu = parse(STU).unwrap();
        let t = sum_test("sum_3", 3, 6);
        let v = run_test(&stu, &t);
        assert_eq!(v.status, TestStatus::Fail);
        assert_eq!(v.actual_value, Some(Value::Int(3)));
        assert_eq!(run_test(&fix(), &t).status, TestStatus::Pass);

        let lp = parse("fun sum(n) { while (true) { n = n + 1; } return n; }").unwrap();
        assert_eq!(
            run_test_with_limit(&lp, &t, 1000).status,
            TestStatus::Timeout
        );
        // Empty loop bodies still consume steps.
        let spin = parse("fun sum(n) { while (true) { } return n; }").unwrap();
        assert_eq!(
            run_test_with_limit(&spin, &t, 1000).status,
            TestStatus::Timeout
        );
    }

    #[test]
    fn suites() {
        // Hand trace of the student program on n = 1: s = 0, i = 1, the
        // guard 1 < 1 is false, so the loop never runs and 0 is returned.
        // The expected value for sum(1) is 1, so that test fails as well.
        let suite = vec![sum_test("sum_3", 3, 6), sum_test("sum_1", 1, 1)];
        let statuses =
            |p: &Program| run_suite(p, &suite).iter().map(|v| v.status).collect::<Vec<_>>();
        assert_eq!(statuses(&fix()), vec![TestStatus::Pass, TestStatus::Pass]);
        let stu = parse(STU).unwrap();
        assert_eq!(statuses(&stu), vec![TestStatus::Fail, TestStatus::Fail]);
        assert_eq!(
            run_test(&stu, &suite[1]).actual_value,
            Some(Value::Int(0))
        );

        let broken = parse("fun sum(n) { return n / 0; }").unwrap();
        assert_eq!(
            statuses(&broken),
            vec![TestStatus::RuntimeError, TestStatus::RuntimeError]
        );
    }

    #[test]
    fn for_is_inclusive_and_evaluates_bounds_once() {
        let p = parse(
            "fun f(n) {\n  let t = 0;\n  for (k in 1..n) {\n    t = t + k;\n    n = 0;\n  }\n  return t;\n}",
        )
        .unwrap();
        assert_eq!(
            run_call(&p, "f", &[Value::Int(4)], 1000).unwrap().value,
            Value::Int(10)
        );
    }

    #[test]
    fn print_and_stdout_expectation() {
        let p = parse("fun g(x) { print(x); print(\"hi\"); print(x > 1); }").unwrap();
        let r = run_call(&p, "g", &[Value::Int(2)], 100).unwrap();
        assert_eq!(r.stdout, "2\nhi\ntrue\n");
        assert_eq!(r.value, Value::Unit);
        let t = TestCase {
            id: "g".into(),
            entry: "g".into(),
            args: vec![Value::Int(2)],
            expected_value: None,
            expected_stdout: Some("2\nhi\ntrue\n".into()),
        };
        assert!(run_test(&p, &t).passed());
    }

    #[test]
    fn runtime_error_kinds() {
        let cases = [
            ("fun f() { return x; }", "unbound variable"),
            ("fun f() { x = 1; return 0; }", "unbound variable"),
            ("fun f() { return 1 % 0; }", "modulo by zero"),
            ("fun f() { return 1 + true; }", "type mismatch"),
            ("fun f() { return 1 == \"a\"; }", "type mismatch"),
            ("fun f() { return g(); }", "unknown function"),
            ("fun f() { return f2(1); } fun f2() { return 0; }", "argument"),
            ("fun f() { return f(); }", "call depth"),
            ("fun f() { if (1) { } return 0; }", "condition"),
        ];
        for (src, needle) in cases {
            let p = parse(src).unwrap();
            match run_call(&p, "f", &[], 10_000) {
                Err(ExecError::Runtime { reason, .. }) => {
                    assert!(reason.contains(needle), "{src}: {reason}")
                }
                other => panic!("{src}: {other:?}"),
            }
        }
    }

    #[test]
    fn step_limit_monotonicity() {
        let p = fix();
        let r = run_call(&p, "sum", &[Value::Int(5)], 10_000).unwrap();
        for limit in [r.steps, r.steps + 1, r.steps * 10] {
            assert_eq!(run_call(&p, "sum", &[Value::Int(5)], limit).unwrap(), r);
        }
        assert!(matches!(
            run_call(&p, "sum", &[Value::Int(5)], r.steps - 1),
            Err(ExecError::Timeout { .. })
        ));
    }

    #[test]
    fn suite_json_format() {
        let suite = TestSuite::from_json(
            r#"{"task_id":"sum","tests":[{"id":"a","entry":"sum","args":[3,true,"x"],"expected_value":6},{"id":"b","entry":"sum","args":[],"expected_stdout":"1\n"}]}"#,
        )
        .unwrap();
        assert_eq!(
            suite.tests[0].args,
            vec![Value::Int(3), Value::Bool(true), Value::Str("x".into())]
        );
        assert!(matches!(
            TestSuite::from_json(r#"{"task_id":"t","tests":[{"id":"a","entry":"f","expected_value":1},{"id":"a","entry":"f","expected_value":1}]}"#),
            Err(SuiteError::DuplicateId(_))
        ));
        assert!(matches!(
            TestSuite::from_json(r#"{"task_id":"t","tests":[{"id":"a","entry":"f"}]}"#),
            Err(SuiteError::NoExpectation(_))
        ));
    }
}
