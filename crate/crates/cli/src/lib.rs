//! `bpa` command-line front end. [`run`] is the whole program minus
//! process setup, so tests drive it with in-memory writers.

pub mod args;
pub mod config;
pub mod error;
pub mod render;

use std::ffi::OsString;
use std::io::Write;
use std::path::Path;

use bpa_core::evaluation::{eval_breakpoints, eval_classifier, VerdictPair};
use bpa_core::exec::{run_suite, TestCase, TestSuite};
use bpa_core::explain::{build_contexts, explain_plan};
use bpa_core::lang::{parse, pretty_print, Program};
use bpa_core::providers::{
    ClassifierProvider, FixtureProvider, GeneratorProvider, HttpProvider, TextProvider,
};
use bpa_core::recommend::{analyze, recommend, RecommendError};
use bpa_core::repair::{repair, validate_and_upload, Providers, RepairError, RepairOutcome, UploadReport};
use bpa_core::retrieval::{DefaultEmbedder, Embedder, HttpEmbedder, LoadMode, Store, StoreEntry};
use clap::Parser;
use serde::Serialize;

use args::{
    AdviseArgs, Cli, Command, EvalCommand, EvalOutput, Format, ProviderArgs, RepairArgs,
    StoreCommand,
};
use config::{EnvVars, FileConfig, Settings};
use error::CliError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NO_DIFF: i32 = 2;
pub const EXIT_ASSERTION: i32 = 3;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, env: &EnvVars, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let rendered = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{rendered}");
                EXIT_ERROR
            } else {
                let _ = write!(out, "{rendered}");
                EXIT_OK
            };
        }
    };
    match dispatch(cli, env, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            EXIT_ERROR
        }
    }
}

fn dispatch(cli: Cli, env: &EnvVars, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let mut settings = Settings::resolve(file, env, cli.store)?;
    match cli.command {
        Command::Advise(a) => {
            settings.apply_recommender_flags(a.max_breakpoints, a.h1_include_exit);
            cmd_advise(&a, &settings, out, err)
        }
        Command::Repair(a) => cmd_repair(&a, &settings, out),
        Command::Eval(EvalCommand::Breakpoints(a)) => {
            settings.apply_recommender_flags(a.max_breakpoints, a.h1_include_exit);
            let corpus = a.corpus.clone().unwrap_or_else(|| settings.corpus_path.clone());
            let report = eval_breakpoints(&corpus, &settings.recommender)
                .map_err(|e| CliError::test(format!("corpus error: {e}")))?;
            emit_report(&report, report.micro.f1, &a.output, out, err)
        }
        Command::Eval(EvalCommand::Classifier(a)) => {
            let text = read_file(&a.verdicts)?;
            let rows: Vec<VerdictPair> = serde_json::from_str(&text)
                .map_err(|e| CliError::parse(format!("{}: {e}", a.verdicts.display())))?;
            let report = eval_classifier(&rows);
            emit_report(&report, report.metrics.f1, &a.output, out, err)
        }
        Command::Store(s) => cmd_store(s, &settings, out),
    }
}

fn io_write(r: std::io::Result<()>) -> Result<(), CliError> {
    r.map_err(|e| CliError::io(format!("cannot write output: {e}")))
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))
}

fn load_program(path: &Path) -> Result<(String, Program), CliError> {
    let text = read_file(path)?;
    let p = parse(&text).map_err(|e| CliError::parse(format!("{}: {e}", path.display())))?;
    Ok((text, p))
}

fn load_suite(path: &Path) -> Result<TestSuite, CliError> {
    TestSuite::load(path).map_err(|e| CliError::test(e.to_string()))
}

fn failed_test(suite: &TestSuite, id: &str) -> Result<TestCase, CliError> {
    suite
        .test(id)
        .cloned()
        .ok_or_else(|| CliError::test(format!("test '{id}' is not in the suite for task {}", suite.task_id)))
}

fn embedder(settings: &Settings) -> Box<dyn Embedder> {
    let dim = settings.repair.retrieval.dimension;
    match &settings.embedder_url {
        Some(url) => Box::new(HttpEmbedder::new(url.clone(), settings.provider_token.clone(), dim)),
        None => Box::new(DefaultEmbedder { dimension: dim }),
    }
}

fn load_store(settings: &Settings, mode: LoadMode) -> Result<Store, CliError> {
    let dim = settings.repair.retrieval.dimension;
    match &settings.store_path {
        Some(p) => Store::load(p, mode, dim).map_err(|e| CliError::store(e.to_string())),
        None if mode == LoadMode::Strict => Err(CliError::store("no store path given")),
        None => Ok(Store::new(dim)),
    }
}

enum ProviderHandle {
    Fixture(FixtureProvider),
    Http(HttpProvider),
}

impl ProviderHandle {
    fn from_settings(a: &ProviderArgs, settings: &Settings) -> Result<Option<Self>, CliError> {
        if let Some(path) = &a.mock {
            let f = FixtureProvider::load(path).map_err(|e| CliError::repair(e.to_string()))?;
            return Ok(Some(ProviderHandle::Fixture(f)));
        }
        Ok(settings
            .provider_url
            .as_ref()
            .map(|u| ProviderHandle::Http(HttpProvider::new(u.clone(), settings.provider_token.clone()))))
    }

    fn generator(&self) -> &dyn GeneratorProvider {
        match self {
            ProviderHandle::Fixture(p) => p,
            ProviderHandle::Http(p) => p,
        }
    }

    fn classifier(&self) -> &dyn ClassifierProvider {
        match self {
            ProviderHandle::Fixture(p) => p,
            ProviderHandle::Http(p) => p,
        }
    }

    fn text(&self) -> &dyn TextProvider {
        match self {
            ProviderHandle::Fixture(p) => p,
            ProviderHandle::Http(p) => p,
        }
    }
}

fn repair_error(e: RepairError) -> CliError {
    match e {
        RepairError::NoProviders => CliError::repair(
            "the store has no matching solution and no provider is configured; pass --mock <fixture> or set BPA_PROVIDER_URL",
        ),
        other => CliError::repair(other.to_string()),
    }
}

fn run_repair(
    student: &Program,
    test: &TestCase,
    task_id: &str,
    providers: Option<&ProviderHandle>,
    store: &Store,
    embedder: &dyn Embedder,
    settings: &Settings,
) -> Result<RepairOutcome, CliError> {
    let p = Providers {
        generator: providers.map(|p| p.generator()),
        classifier: providers.map(|p| p.classifier()),
        embedder,
    };
    repair(student, test, task_id, p, store, &settings.repair).map_err(repair_error)
}

fn cmd_advise(a: &AdviseArgs, settings: &Settings, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let (student_text, student) = load_program(&a.student)?;
    let suite = load_suite(&a.test.tests)?;
    let test = failed_test(&suite, &a.test.failed)?;
    let providers = ProviderHandle::from_settings(&a.providers, settings)?;

    let fixed = match &a.fixed {
        Some(path) => load_program(path)?.1,
        None => {
            let store = load_store(settings, LoadMode::Create)?;
            let emb = embedder(settings);
            let outcome = run_repair(&student, &test, &suite.task_id, providers.as_ref(), &store, emb.as_ref(), settings)?;
            parse(&outcome.fixed_source)
                .map_err(|e| CliError::repair(format!("repaired program does not parse: {e}")))?
        }
    };

    let plan = recommend(&student, &fixed, &test, &suite.task_id, &settings.recommender).map_err(|e| match e {
        RecommendError::FixDoesNotPass { .. } => CliError::test(e.to_string()),
        other => CliError::repair(other.to_string()),
    })?;
    let analysis = analyze(&student, &fixed, &settings.recommender).map_err(|e| CliError::repair(e.to_string()))?;
    if let Some(path) = &a.emit_graph {
        std::fs::write(path, analysis.graph.to_dot())
            .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))?;
    }
    if analysis.is_empty_diff() {
        io_write(writeln!(err, "no differences between the student and fixed programs"))?;
        return Ok(EXIT_NO_DIFF);
    }

    let contexts = build_contexts(&plan, &student, &test);
    let plan = explain_plan(&plan, &contexts, &student, providers.as_ref().map(|p| p.text()));
    let rendered = match a.format.unwrap_or(settings.format) {
        Format::Json => plan.to_json(),
        Format::Pretty => render::pretty(&plan),
        Format::AnnotatedSource => render::annotated_source(&student_text, &plan),
    };
    io_write(out.write_all(rendered.as_bytes()))?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct RepairReport<'a> {
    #[serde(flatten)]
    outcome: &'a RepairOutcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    upload: Option<UploadReport>,
}

fn cmd_repair(a: &RepairArgs, settings: &Settings, out: &mut dyn Write) -> Result<i32, CliError> {
    let (_, student) = load_program(&a.student)?;
    let suite = load_suite(&a.test.tests)?;
    let test = failed_test(&suite, &a.test.failed)?;
    let providers = ProviderHandle::from_settings(&a.providers, settings)?;
    let emb = embedder(settings);
    let mut store = load_store(settings, LoadMode::Create)?;
    let outcome = run_repair(&student, &test, &suite.task_id, providers.as_ref(), &store, emb.as_ref(), settings)?;
    let upload = if a.validate {
        let path = settings.require_store()?;
        let report = validate_and_upload(&outcome, &suite.tests, &mut store, &suite.task_id, emb.as_ref())
            .map_err(|e| CliError::store(e.to_string()))?;
        store.save(path).map_err(|e| CliError::store(e.to_string()))?;
        Some(report)
    } else {
        None
    };
    let doc = RepairReport {
        outcome: &outcome,
        upload,
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
    text.push('\n');
    io_write(out.write_all(text.as_bytes()))?;
    Ok(EXIT_OK)
}

fn emit_report<T: Serialize>(
    report: &T,
    f1: f64,
    o: &EvalOutput,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, CliError> {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    match &o.out {
        Some(path) => std::fs::write(path, &text)
            .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))?,
        None => io_write(out.write_all(text.as_bytes()))?,
    }
    if let Some(min) = o.assert_min_f1 {
        if f1 < min {
            io_write(writeln!(err, "assertion failed: F1 {f1:.4} is below {min:.4}"))?;
            return Ok(EXIT_ASSERTION);
        }
    }
    Ok(EXIT_OK)
}

fn entries(n: usize) -> String {
    format!("{n} {}", if n == 1 { "entry" } else { "entries" })
}

fn cmd_store(cmd: StoreCommand, settings: &Settings, out: &mut dyn Write) -> Result<i32, CliError> {
    let path = settings.require_store()?;
    let dim = settings.repair.retrieval.dimension;
    let store_err = |e: bpa_core::retrieval::StoreError| CliError::store(e.to_string());
    match cmd {
        StoreCommand::Init => {
            if path.exists() {
                let existing = Store::load(path, LoadMode::Strict, dim).map_err(store_err)?;
                if !existing.is_empty() {
                    return Err(CliError::store(format!(
                        "{} already holds {} entries",
                        path.display(),
                        existing.len()
                    )));
                }
            }
            Store::new(dim).save(path).map_err(store_err)?;
            io_write(writeln!(out, "initialized empty store {}", path.display()))?;
        }
        StoreCommand::Add(a) => {
            let mut store = Store::load(path, LoadMode::Strict, dim).map_err(store_err)?;
            let (_, program) = load_program(&a.solution)?;
            let suite = load_suite(&a.tests)?;
            let verdicts = run_suite(&program, &suite.tests);
            let failing: Vec<&str> = verdicts
                .iter()
                .filter(|v| !v.passed())
                .map(|v| v.test_id.as_str())
                .collect();
            if !failing.is_empty() {
                return Err(CliError::store(format!(
                    "solution rejected: it fails {}; store unchanged",
                    failing.join(", ")
                )));
            }
            let text = pretty_print(&program);
            let embedding = embedder(settings)
                .embed(&text)
                .map_err(|e| CliError::store(e.to_string()))?;
            let entry_id = a.id.clone().unwrap_or_else(|| store.fresh_id(&suite.task_id));
            let passing: Vec<String> = verdicts.into_iter().map(|v| v.test_id).collect();
            store
                .put(StoreEntry {
                    entry_id: entry_id.clone(),
                    task_id: suite.task_id.clone(),
                    source_text: text,
                    embedding,
                    passing_test_ids: passing.iter().cloned().collect(),
                    validated: true,
                })
                .map_err(store_err)?;
            store.save(path).map_err(store_err)?;
            io_write(writeln!(
                out,
                "added {entry_id} (task {}, validated, passing {})",
                suite.task_id,
                passing.join(", ")
            ))?;
        }
        StoreCommand::Query(a) => {
            let store = Store::load(path, LoadMode::Strict, dim).map_err(store_err)?;
            let (_, program) = load_program(&a.program)?;
            let suite = load_suite(&a.test.tests)?;
            failed_test(&suite, &a.test.failed)?;
            let q = embedder(settings)
                .embed(&pretty_print(&program))
                .map_err(|e| CliError::store(e.to_string()))?;
            match store.query(&suite.task_id, &a.test.failed, &q, &settings.repair.retrieval) {
                Some(hit) => io_write(writeln!(out, "{} {:.6}", hit.entry.entry_id, hit.similarity))?,
                None => io_write(writeln!(out, "none"))?,
            }
        }
        StoreCommand::Stats => {
            let store = Store::load(path, LoadMode::Strict, dim).map_err(store_err)?;
            io_write(writeln!(out, "{}", entries(store.len())))?;
            for (task, (n, v)) in store.counts_by_task() {
                io_write(writeln!(out, "  {task}: {}, {v} validated", entries(n)))?;
            }
        }
    }
    Ok(EXIT_OK)
}
