//! Student-vs-fixed diff over canonical lines, and classification of each
//! change into the triggers the placement heuristics react to.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Range;

use serde::Serialize;
use thiserror::Error;

use crate::dependence::LineSet;
use crate::lang::lexer::normalize_line;
use crate::lang::{printed_lines, Line, LineRole, PrintedLine, Program, Stmt, StmtKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum HunkKind {
    Replace,
    Delete,
    Insert,
}

/// A maximal run of differing canonical lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffHunk {
    pub kind: HunkKind,
    /// Statement lines of the student program touched by the hunk. Brace
    /// lines count as their construct's line; function headers and
    /// function closing braces contribute nothing.
    pub student_lines: LineSet,
    pub fixed_lines: LineSet,
    /// Range of canonical (printed) line indices on each side.
    pub student_range: Range<usize>,
    pub fixed_range: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EditKind {
    /// A condition or the branch structure of an if/while/for changed.
    ConditionChange,
    /// A change involving this variable.
    VariableModification(String),
    /// A change inside this function's body.
    FunctionScopeChange(String),
}

impl fmt::Display for EditKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EditKind::ConditionChange => f.write_str("condition"),
            EditKind::VariableModification(v) => write!(f, "variable({v})"),
            EditKind::FunctionScopeChange(name) => write!(f, "function({name})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChangeSite {
    /// A statement line of the student program.
    pub anchor_line: Line,
    pub hunk: DiffHunk,
    pub edit_kinds: BTreeSet<EditKind>,
}

impl ChangeSite {
    pub fn has_condition_change(&self) -> bool {
        self.edit_kinds.contains(&EditKind::ConditionChange)
    }

    pub fn modified_vars(&self) -> Vec<&str> {
        self.edit_kinds
            .iter()
            .filter_map(|k| match k {
                EditKind::VariableModification(v) => Some(v.as_str()),
                _ => None,
            })
            .collect()
    }

    pub fn function(&self) -> Option<&str> {
        self.edit_kinds.iter().find_map(|k| match k {
            EditKind::FunctionScopeChange(f) => Some(f.as_str()),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiffError {
    #[error("no differences between the student and fixed programs")]
    EmptyDiff,
}

enum Op {
    Keep,
    Del,
    Ins,
}

/// Longest-common-subsequence edit script between two line sequences.
fn lcs_script(a: &[String], b: &[String]) -> Vec<Op> {
    let (n, m) = (a.len(), b.len());
    // suffix[i][j] = LCS length of a[i..] and b[j..]
    let mut suffix = vec![vec![0usize; m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            suffix[i][j] = if a[i] == b[j] {
                suffix[i + 1][j + 1] + 1
            } else {
                suffix[i + 1][j].max(suffix[i][j + 1])
            };
        }
    }
    let mut ops = Vec::with_capacity(n + m);
    let (mut i, mut j) = (0, 0);
    while i < n || j < m {
        if i < n && j < m && a[i] == b[j] {
            ops.push(Op::Keep);
            i += 1;
            j += 1;
        } else if j == m || (i < n && suffix[i + 1][j] >= suffix[i][j + 1]) {
            ops.push(Op::Del);
            i += 1;
        } else {
            ops.push(Op::Ins);
            j += 1;
        }
    }
    ops
}

fn statement_origins(lines: &[PrintedLine], range: Range<usize>) -> LineSet {
    lines[range]
        .iter()
        .filter(|l| matches!(l.role, LineRole::Statement | LineRole::Else | LineRole::Close))
        .map(|l| l.origin)
        .collect()
}

/// Line diff of the canonical, token-normalized forms of both programs.
pub fn diff_lines(student: &Program, fixed: &Program) -> Vec<DiffHunk> {
    let s_lines = printed_lines(student);
    let f_lines = printed_lines(fixed);
    let norm = |ls: &[PrintedLine]| ls.iter().map(|l| normalize_line(&l.text)).collect::<Vec<_>>();
    let (a, b) = (norm(&s_lines), norm(&f_lines));

    let mut hunks = Vec::new();
    let (mut i, mut j) = (0, 0);
    let mut open: Option<(usize, usize)> = None;
    let mut close = |open: &mut Option<(usize, usize)>, i: usize, j: usize| {
        if let Some((si, fj)) = open.take() {
            let kind = match (si < i, fj < j) {
                (true, true) => HunkKind::Replace,
                (true, false) => HunkKind::Delete,
                _ => HunkKind::Insert,
            };
            hunks.push(DiffHunk {
                kind,
                student_lines: statement_origins(&s_lines, si..i),
                fixed_lines: statement_origins(&f_lines, fj..j),
                student_range: si..i,
                fixed_range: fj..j,
            });
        }
    };
    for op in lcs_script(&a, &b) {
        match op {
            Op::Keep => {
                close(&mut open, i, j);
                i += 1;
                j += 1;
            }
            Op::Del => {
                open.get_or_insert((i, j));
                i += 1;
            }
            Op::Ins => {
                open.get_or_insert((i, j));
                j += 1;
            }
        }
    }
    close(&mut open, i, j);
    hunks
}

/// Anchors every hunk to student statement lines and classifies it.
///
/// Replace and delete hunks yield one site per touched student line. Hunks
/// without student statement lines (pure insertions) anchor to the nearest
/// preceding unchanged student line.
pub fn anchor_and_classify(
    hunks: &[DiffHunk],
    student: &Program,
    fixed: &Program,
) -> Result<Vec<ChangeSite>, DiffError> {
    if hunks.is_empty() {
        return Err(DiffError::EmptyDiff);
    }
    let s_lines = printed_lines(student);
    let f_lines = printed_lines(fixed);

    let mut sites = Vec::new();
    for hunk in hunks {
        let mut fixed_kinds = BTreeSet::new();
        for pl in &f_lines[hunk.fixed_range.clone()] {
            classify_printed(pl, fixed, &mut fixed_kinds);
        }
        if hunk.student_lines.is_empty() {
            let anchor = insertion_anchor(&s_lines, hunk.student_range.start, student);
            sites.push(site(anchor, hunk, fixed_kinds, student));
            continue;
        }
        for &line in &hunk.student_lines {
            let mut kinds = fixed_kinds.clone();
            for pl in s_lines[hunk.student_range.clone()]
                .iter()
                .filter(|pl| pl.origin == line && pl.role != LineRole::Header)
            {
                classify_printed(pl, student, &mut kinds);
            }
            sites.push(site(line, hunk, kinds, student));
        }
    }
    Ok(sites)
}

fn site(anchor: Line, hunk: &DiffHunk, mut kinds: BTreeSet<EditKind>, student: &Program) -> ChangeSite {
    if let Some(f) = student.function_at(anchor) {
        kinds.insert(EditKind::FunctionScopeChange(f.name.clone()));
    }
    ChangeSite {
        anchor_line: anchor,
        hunk: hunk.clone(),
        edit_kinds: kinds,
    }
}

fn insertion_anchor(lines: &[PrintedLine], start: usize, student: &Program) -> Line {
    let first_stmt_or_header = |fi: usize| {
        let f = &student.functions[fi];
        f.first_statement_line().unwrap_or(f.header_line)
    };
    for pl in lines[..start].iter().rev() {
        match pl.role {
            LineRole::Statement | LineRole::Else | LineRole::Close => return pl.origin,
            LineRole::Header => return first_stmt_or_header(pl.function),
            LineRole::FunctionClose => continue,
        }
    }
    first_stmt_or_header(0)
}

fn classify_printed(pl: &PrintedLine, program: &Program, kinds: &mut BTreeSet<EditKind>) {
    match pl.role {
        // A moved brace or `else` changes the extent of its construct, so it
        // classifies like the construct's own line.
        LineRole::Statement | LineRole::Else | LineRole::Close => {
            for s in program.statements_at(pl.origin) {
                classify_stmt(s, kinds);
            }
        }
        LineRole::Header | LineRole::FunctionClose => {}
    }
}

fn classify_stmt(s: &Stmt, kinds: &mut BTreeSet<EditKind>) {
    let var = |v: &str| EditKind::VariableModification(v.to_string());
    match &s.kind {
        StmtKind::If { .. } => {
            kinds.insert(EditKind::ConditionChange);
        }
        StmtKind::While { cond, .. } => {
            kinds.insert(EditKind::ConditionChange);
            kinds.extend(cond.vars().into_iter().map(var));
        }
        StmtKind::For { var: v, .. } => {
            kinds.insert(EditKind::ConditionChange);
            kinds.insert(var(v));
        }
        StmtKind::Let(v, _) | StmtKind::Assign(v, _) => {
            kinds.insert(var(v));
        }
        StmtKind::Return(e) | StmtKind::Print(e) | StmtKind::ExprStmt(e) => {
            kinds.extend(e.binary_operand_vars().into_iter().map(var));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;
    use crate::testutil::{fix_source, STU};

    fn set(xs: &[Line]) -> LineSet {
        xs.iter().copied().collect()
    }

    fn kinds(list: &[EditKind]) -> BTreeSet<EditKind> {
        list.iter().cloned().collect()
    }

    #[test]
    fn reference_pair_single_replace() {
        let (s, f) = (parse(STU).unwrap(), parse(&fix_source()).unwrap());
        let hunks = diff_lines(&s, &f);
        assert_eq!(hunks.len(), 1);
        assert_eq!(hunks[0].kind, HunkKind::Replace);
        assert_eq!(hunks[0].student_lines, set(&[4]));
        assert_eq!(hunks[0].fixed_lines, set(&[4]));
    }

    #[test]
    fn identity_and_reformatting() {
        let s = parse(STU).unwrap();
        assert!(diff_lines(&s, &s).is_empty());
        let squashed = parse("fun sum(n){let s=0; // start\nlet i=1;while(i<n){s=s+i;i=i+1;}return s;}").unwrap();
        assert!(diff_lines(&s, &squashed).is_empty());
        assert_eq!(
            anchor_and_classify(&[], &s, &s),
            Err(DiffError::EmptyDiff)
        );
    }

    #[test]
    fn insertion_anchors_to_preceding_line() {
        let s = parse(STU).unwrap();
        let f = parse(&STU.replace("    s = s + i;\n", "    s = s + i;\n    print(s);\n")).unwrap();
        let hunks = diff_lines(&s, &f);
        assert_eq!(hunks.len(), 1);
        assert_eq!(hunks[0].kind, HunkKind::Insert);
        assert!(hunks[0].student_lines.is_empty());
        let sites = anchor_and_classify(&hunks, &s, &f).unwrap();
        assert_eq!(sites[0].anchor_line, 5);
        assert_eq!(
            sites[0].edit_kinds,
            kinds(&[EditKind::FunctionScopeChange("sum".into())])
        );
    }

    #[test]
    fn insertion_at_function_start_uses_first_body_line() {
        let s = parse("fun f(x) {\n  return x;\n}").unwrap();
        let f = parse("fun f(x) {\n  x = x + 1;\n  return x;\n}").unwrap();
        let sites = anchor_and_classify(&diff_lines(&s, &f), &s, &f).unwrap();
        assert_eq!(sites.len(), 1);
        assert_eq!(sites[0].anchor_line, 2);
        assert!(sites[0]
            .edit_kinds
            .contains(&EditKind::VariableModification("x".into())));
    }

    #[test]
    fn reference_classification() {
        let (s, f) = (parse(STU).unwrap(), parse(&fix_source()).unwrap());
        let sites = anchor_and_classify(&diff_lines(&s, &f), &s, &f).unwrap();
        assert_eq!(sites.len(), 1);
        assert_eq!(sites[0].anchor_line, 4);
        assert_eq!(
            sites[0].edit_kinds,
            kinds(&[
                EditKind::ConditionChange,
                EditKind::VariableModification("i".into()),
                EditKind::VariableModification("n".into()),
                EditKind::FunctionScopeChange("sum".into()),
            ])
        );
    }

    #[test]
    fn assignment_target_rule() {
        let s = parse(STU).unwrap();
        let f = parse(&STU.replace("s = s + i;", "s = s + 2 * i;")).unwrap();
        let sites = anchor_and_classify(&diff_lines(&s, &f), &s, &f).unwrap();
        assert_eq!(sites.len(), 1);
        assert_eq!(sites[0].anchor_line, 5);
        assert_eq!(
            sites[0].edit_kinds,
            kinds(&[
                EditKind::VariableModification("s".into()),
                EditKind::FunctionScopeChange("sum".into()),
            ])
        );
    }

    #[test]
    fn deletion_and_moved_brace() {
        // Student increments outside the loop; the fix moves it inside.
        let s = parse("fun f(n) {\n  let i = 0;\n  while (i < n) {\n    print(i);\n  }\n  i = i + 1;\n  return i;\n}").unwrap();
        let f = parse("fun f(n) {\n  let i = 0;\n  while (i < n) {\n    print(i);\n    i = i + 1;\n  }\n  return i;\n}").unwrap();
        let hunks = diff_lines(&s, &f);
        let sites = anchor_and_classify(&hunks, &s, &f).unwrap();
        let anchors: LineSet = sites.iter().map(|s| s.anchor_line).collect();
        for a in &anchors {
            assert!(s.is_statement_line(*a));
        }
        assert!(sites.iter().any(|s| s.has_condition_change()));
        assert!(sites
            .iter()
            .any(|s| s.modified_vars().contains(&"i")));
    }

    #[test]
    fn return_operands_count_as_variable_involvement() {
        let s = parse("fun f(a, b) {\n  return a;\n}").unwrap();
        let f = parse("fun f(a, b) {\n  return a + b;\n}").unwrap();
        let sites = anchor_and_classify(&diff_lines(&s, &f), &s, &f).unwrap();
        assert_eq!(sites[0].modified_vars(), vec!["a", "b"]);
    }

    #[test]
    fn if_condition_is_condition_change_only() {
        let s = parse("fun f(x) {\n  if (x > 0) {\n    return 1;\n  }\n  return 0;\n}").unwrap();
        let f = parse("fun f(x) {\n  if (x >= 0) {\n    return 1;\n  }\n  return 0;\n}").unwrap();
        let sites = anchor_and_classify(&diff_lines(&s, &f), &s, &f).unwrap();
        assert_eq!(
            sites[0].edit_kinds,
            kinds(&[
                EditKind::ConditionChange,
                EditKind::FunctionScopeChange("f".into())
            ])
        );
    }
}
