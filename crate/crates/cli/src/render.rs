use std::fmt::Write as _;

use bpa_core::recommend::{BreakpointKind, BreakpointPlan};

pub const BUG_SITE_MARK: &str = "●";
pub const AFFECTED_MARK: &str = "○";

fn label(kind: BreakpointKind) -> &'static str {
    match kind {
        BreakpointKind::BugSite => "bug site",
        BreakpointKind::Affected => "affected",
    }
}

fn mark(kind: BreakpointKind) -> &'static str {
    match kind {
        BreakpointKind::BugSite => BUG_SITE_MARK,
        BreakpointKind::Affected => AFFECTED_MARK,
    }
}

pub fn pretty(plan: &BreakpointPlan) -> String {
    let mut out = String::new();
    let n = plan.breakpoints.len();
    writeln!(
        out,
        "task {}, failed test {}: {n} breakpoint{}",
        plan.task_id,
        plan.failed_test_id,
        if n == 1 { "" } else { "s" }
    )
    .unwrap();
    for b in &plan.breakpoints {
        writeln!(
            out,
            "{} line {} ({}) [{}]",
            mark(b.kind),
            b.line,
            label(b.kind),
            b.provenance.join(", ")
        )
        .unwrap();
        if let Some(e) = &b.explanation {
            writeln!(out, "    {e}").unwrap();
        }
    }
    out
}

/// The student's source with a mark before each breakpoint line and its
/// explanation as a comment below it.
pub fn annotated_source(source: &str, plan: &BreakpointPlan) -> String {
    let mut out = String::new();
    for (i, text) in source.lines().enumerate() {
        let line = i as u32 + 1;
        let bp = plan.breakpoints.iter().find(|b| b.line == line);
        let prefix = bp.map_or(" ", |b| mark(b.kind));
        writeln!(out, "{prefix} {text}").unwrap();
        if let Some(e) = bp.and_then(|b| b.explanation.as_deref()) {
            let indent: String = text.chars().take_while(|c| c.is_whitespace()).collect();
            writeln!(out, "  {indent}// {e}").unwrap();
        }
    }
    out
}
