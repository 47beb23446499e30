use std::path::PathBuf;

use bpa_core::evaluation::{eval_pairs, load_corpus};
use bpa_core::exec::{run_suite, run_test};
use bpa_core::recommend::RecommenderConfig;

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

#[test]
fn every_pair_is_well_formed() {
    let pairs = load_corpus(&corpus_dir()).unwrap();
    assert!(pairs.len() >= 20);
    for p in &pairs {
        assert!(p.student.source_lines <= 40, "{}", p.id);
        assert!(p.fixed.source_lines <= 40, "{}", p.id);
        assert!(!run_test(&p.student, &p.failed_test).passed(), "{}: student passes", p.id);
        for v in run_suite(&p.fixed, &p.suite.tests) {
            assert!(v.passed(), "{}: fixed fails {}", p.id, v.test_id);
        }
        assert!(!p.gold.is_empty(), "{}", p.id);
    }
}

#[test]
fn evaluation_is_deterministic() {
    let pairs = load_corpus(&corpus_dir()).unwrap();
    let a = eval_pairs(&pairs, &RecommenderConfig::default()).unwrap();
    let b = eval_pairs(&pairs, &RecommenderConfig::default()).unwrap();
    assert_eq!(a, b);
    for r in &a.pairs {
        eprintln!("{} pred={:?} gold={:?} P={:.3} R={:.3}", r.pair_id, r.predicted, r.gold, r.metrics.precision, r.metrics.recall);
    }
    eprintln!("micro {:?}\nmacro {:?}", a.micro, a.macro_);
}
