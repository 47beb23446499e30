//! Per-breakpoint explanation text from templates, optionally replaced by
//! a text provider.

use serde::{Deserialize, Serialize};

use crate::exec::{run_test, TestCase, TestStatus, TestVerdict};
use crate::lang::{pretty_print, Line, Program};
use crate::providers::TextProvider;
use crate::recommend::{Breakpoint, BreakpointKind, BreakpointPlan};

pub const MAX_EXPLANATION_CHARS: usize = 280;
const MAX_NAMED_VARS: usize = 4;

/// Words an affected-line explanation must not use: those lines are watched,
/// not edited.
pub const EDIT_VOCABULARY: &[&str] = &["change", "fix", "edit", "modify", "rewrite", "replace"];
/// Words a bug-site explanation must not use.
pub const HEDGE_VOCABULARY: &[&str] = &["related", "might", "perhaps"];

/// Affected-line tags, most specific first.
const TAG_PRIORITY: &[&str] = &[
    "var-write",
    "var-after-write",
    "branch-entry",
    "after-construct",
    "call-site",
    "function-entry",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplanationContext {
    pub breakpoint: Breakpoint,
    pub failed_test: TestCase,
    /// What the student program produced on the failed test, if known.
    pub actual: Option<String>,
    /// Names read or written at the line, in source order.
    pub variables_in_scope: Vec<String>,
    pub enclosing_function: String,
}

fn quote(s: &str) -> String {
    serde_json::to_string(s).expect("string serializes")
}

fn expected_text(t: &TestCase) -> String {
    match (&t.expected_value, &t.expected_stdout) {
        (Some(v), None) => value_text(v),
        (None, Some(out)) => format!("output {}", quote(out)),
        (Some(v), Some(out)) => format!("{} with output {}", value_text(v), quote(out)),
        (None, None) => "a passing result".to_string(),
    }
}

fn value_text(v: &crate::exec::Value) -> String {
    match v {
        crate::exec::Value::Str(s) => quote(s),
        other => other.to_string(),
    }
}

fn actual_text(t: &TestCase, v: &TestVerdict) -> Option<String> {
    match v.status {
        TestStatus::RuntimeError => Some("a runtime error".into()),
        TestStatus::Timeout => Some("no result within the step limit".into()),
        TestStatus::Pass | TestStatus::Fail => {
            let value = v.actual_value.as_ref().map(value_text);
            match (&t.expected_value, &t.expected_stdout) {
                (None, Some(_)) => Some(format!("output {}", quote(&v.actual_stdout))),
                (Some(_), Some(_)) => {
                    value.map(|x| format!("{x} with output {}", quote(&v.actual_stdout)))
                }
                _ => value,
            }
        }
    }
}

fn variables_at(p: &Program, line: Line) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let mut push = |v: &str| {
        if !out.iter().any(|o| o == v) {
            out.push(v.to_string());
        }
    };
    let stmts = p.statements_at(line);
    if stmts.is_empty() {
        if let Some(f) = p.functions.iter().find(|f| f.header_line == line) {
            f.params.iter().for_each(|v| push(v));
        }
    }
    for s in stmts {
        if let Some(w) = s.written_var() {
            push(w);
        }
        for v in s.read_vars() {
            push(v);
        }
    }
    out
}

/// One context per breakpoint, from the student program and its verdict
/// on the failed test.
pub fn build_contexts(
    plan: &BreakpointPlan,
    student: &Program,
    failed_test: &TestCase,
) -> Vec<ExplanationContext> {
    let verdict = run_test(student, failed_test);
    let actual = actual_text(failed_test, &verdict);
    plan.breakpoints
        .iter()
        .map(|b| ExplanationContext {
            breakpoint: b.clone(),
            failed_test: failed_test.clone(),
            actual: actual.clone(),
            variables_in_scope: variables_at(student, b.line),
            enclosing_function: student
                .function_at(b.line)
                .map(|f| f.name.clone())
                .unwrap_or_default(),
        })
        .collect()
}

fn join_vars(vars: &[String]) -> Option<String> {
    let (shown, rest) = vars.split_at(vars.len().min(MAX_NAMED_VARS));
    let mut items: Vec<&str> = shown.iter().map(String::as_str).collect();
    if !rest.is_empty() {
        items.push("the others");
    }
    match items.as_slice() {
        [] => None,
        [one] => Some(one.to_string()),
        [init @ .., last] => Some(format!("{} and {last}", init.join(", "))),
    }
}

fn dominant_tag(b: &Breakpoint) -> Option<&'static str> {
    TAG_PRIORITY.iter().copied().find(|tag| {
        b.provenance
            .iter()
            .any(|p| p.split_once(':').is_some_and(|(_, r)| r == *tag))
    })
}

fn bug_site_text(ctx: &ExplanationContext, vars: Option<&str>) -> String {
    let id = &ctx.failed_test.id;
    let expected = expected_text(&ctx.failed_test);
    let outcome = match &ctx.actual {
        Some(a) => format!("Test {id} expected {expected} but got {a}."),
        None => format!("Test {id} expected {expected}."),
    };
    let inspect = match vars {
        Some(v) => format!("Inspect {v} here and compare against what the test requires."),
        None => "Compare what this line computes against what the test requires.".to_string(),
    };
    format!("This line needs to change. {outcome} {inspect}")
}

fn affected_text(ctx: &ExplanationContext, vars: Option<&str>) -> String {
    let id = &ctx.failed_test.id;
    let f = &ctx.enclosing_function;
    let watch = |with: &str, without: &str| match vars {
        Some(v) => with.replace("{v}", v),
        None => without.to_string(),
    };
    match dominant_tag(&ctx.breakpoint) {
        Some("var-write") => watch(
            "Watch {v} before and after this line runs: the value written here flows on toward the result of test {id}.",
            "Step over this line and compare the state before and after it: the value written here flows on toward the result of test {id}.",
        ),
        Some("var-after-write") => watch(
            "Check {v} here, right after the value was written, to see what reaches test {id}.",
            "Pause here, right after the earlier write, to see what reaches test {id}.",
        ),
        Some("branch-entry") => watch(
            "Execution enters this block when the condition above holds. Watch {v} to see whether it runs as often as test {id} needs.",
            "Execution enters this block when the condition above holds. Count how often it runs during test {id}.",
        ),
        Some("after-construct") => watch(
            "This line runs once the construct above has finished. Compare {v} here with what test {id} expects.",
            "This line runs once the construct above has finished. Compare the state here with what test {id} expects.",
        ),
        Some("call-site") => watch(
            "This call enters the function holding the bug site. Watch {v} going in and the returned value for test {id}.",
            "This call enters the function holding the bug site. Watch the returned value for test {id}.",
        ),
        Some("function-entry") => watch(
            "Function {f} starts here. Inspect {v} as test {id} calls it.",
            "Function {f} starts here. Check the arguments test {id} passes in.",
        ),
        _ => watch(
            "This line depends on the bug site. Watch {v} during test {id}.",
            "This line depends on the bug site. Pause here during test {id}.",
        ),
    }
    .replace("{id}", id)
    .replace("{f}", f)
}

fn cap(text: String) -> String {
    if text.chars().count() <= MAX_EXPLANATION_CHARS {
        return text;
    }
    let mut t: String = text.chars().take(MAX_EXPLANATION_CHARS - 3).collect();
    t.push_str("...");
    t
}

/// Template explanation: one paragraph of at most 280 characters.
pub fn explain_breakpoint(ctx: &ExplanationContext) -> String {
    let vars = join_vars(&ctx.variables_in_scope);
    let text = match ctx.breakpoint.kind {
        BreakpointKind::BugSite => bug_site_text(ctx, vars.as_deref()),
        BreakpointKind::Affected => affected_text(ctx, vars.as_deref()),
    };
    if text.chars().count() <= MAX_EXPLANATION_CHARS {
        return text;
    }
    // Retry naming only the first variable before truncating.
    let first = ctx.variables_in_scope.first().map(|v| format!("{v} and the others"));
    let shorter = match ctx.breakpoint.kind {
        BreakpointKind::BugSite => bug_site_text(ctx, first.as_deref()),
        BreakpointKind::Affected => affected_text(ctx, first.as_deref()),
    };
    cap(shorter)
}

fn words(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric() && c != '_')
        .map(str::to_lowercase)
        .collect()
}

/// Whether `text` may explain a breakpoint of `kind`: one non-empty line
/// within the length cap, free of the vocabulary the kind forbids.
pub fn admissible(text: &str, kind: BreakpointKind) -> bool {
    let banned = match kind {
        BreakpointKind::BugSite => HEDGE_VOCABULARY,
        BreakpointKind::Affected => EDIT_VOCABULARY,
    };
    let t = text.trim();
    !t.is_empty()
        && !t.contains('\n')
        && t.chars().count() <= MAX_EXPLANATION_CHARS
        && words(t).iter().all(|w| !banned.contains(&w.as_str()))
}

/// Fills every breakpoint's explanation. Provider text replaces the
/// template when it succeeds and is admissible for the breakpoint's kind.
pub fn explain_plan(
    plan: &BreakpointPlan,
    contexts: &[ExplanationContext],
    student: &Program,
    provider: Option<&dyn TextProvider>,
) -> BreakpointPlan {
    let student_text = provider.map(|_| pretty_print(student));
    let mut out = plan.clone();
    for (b, ctx) in out.breakpoints.iter_mut().zip(contexts) {
        let draft = explain_breakpoint(ctx);
        let text = match (provider, &student_text) {
            (Some(p), Some(src)) => match p.explain(src, &ctx.failed_test, b.line, &draft) {
                Ok(t) if admissible(&t, b.kind) => t.trim().to_string(),
                Ok(_) => {
                    log::warn!("text provider answer for line {} rejected; using the template", b.line);
                    draft
                }
                Err(e) => {
                    log::warn!("text provider failed for line {}: {e}", b.line);
                    draft
                }
            },
            _ => draft,
        };
        b.explanation = Some(text);
    }
    out
}
