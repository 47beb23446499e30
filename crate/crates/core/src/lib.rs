//! Breakpoint recommendation engine for MiniLang programs.
//!
//! Given a student's program that fails a test, the engine obtains a fixed
//! program (from a store of validated solutions or from a generator
//! provider), locates the changed lines by diffing, and recommends
//! breakpoints: the changed lines themselves plus lines that are both in
//! the dependence slice of the change and selected by placement heuristics.

pub mod exec;
pub mod lang;
pub mod dependence;
pub mod diff;
pub mod heuristics;
pub mod recommend;
pub mod providers;
pub mod retrieval;
pub mod repair;
pub mod explain;
pub mod evaluation;
