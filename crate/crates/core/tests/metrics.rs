use decompkit::metrics::{mean_r2i, r2i_score, reexecute, R2iWeights, Stage};
use decompkit::orchestrator::{load_benchmark, BenchSample};
use decompkit::reward::CompilerConfig;
use decompkit_testkit::bench_dir;
use decompkit_testkit::mutants::{constant_body, inject_goto};

fn bench() -> Vec<BenchSample> {
    load_benchmark(&bench_dir()).unwrap().samples
}

#[test]
fn every_reference_passes_its_harness() {
    let samples = bench();
    assert!(samples.len() >= 30);
    let cfg = CompilerConfig::default();
    for s in &samples {
        let r = reexecute(&s.source, &s.suite, &s.meta.original_name, &cfg).unwrap();
        assert!(r.passed, "{}: {r:?}", s.id);
        assert_eq!(r.stage_failed, Stage::None);
    }
}

#[test]
fn constant_mutants_fail_at_run_stage() {
    let cfg = CompilerConfig::default();
    for s in bench() {
        let r = reexecute(&constant_body(&s.source, &s.meta.original_name), &s.suite, &s.meta.original_name, &cfg).unwrap();
        assert!(!r.passed, "{}", s.id);
        assert_eq!(r.stage_failed, Stage::Run, "{}: {r:?}", s.id);
    }
}

#[test]
fn renamed_generated_function_is_restored() {
    let s = bench().into_iter().find(|s| s.meta.original_name == "factorial").unwrap();
    let renamed = s.source.replace("factorial", "func1");
    let r = reexecute(&renamed, &s.suite, "factorial", &CompilerConfig::default()).unwrap();
    assert!(r.passed, "{r:?}");
}

#[test]
fn goto_injection_lowers_r2i() {
    let w = R2iWeights::bundled();
    for s in bench().iter().take(10) {
        let before = r2i_score(&s.source, w);
        let after = r2i_score(&inject_goto(&s.source), w);
        assert!(before.parse_ok && after.parse_ok, "{}", s.id);
        assert!(after.value < before.value, "{}: {} -> {}", s.id, before.value, after.value);
    }
}

#[test]
fn r2i_scores_are_bounded_and_failures_count_as_zero() {
    let w = R2iWeights::bundled();
    let mut scores: Vec<_> = bench().iter().flat_map(|s| [r2i_score(&s.source, w), r2i_score(&s.pseudo, w)]).collect();
    for bad in ["int f( {", "}}}", "", "int f(int a) { return a +; }"] {
        let r = r2i_score(bad, w);
        assert_eq!(r.value, 0.0, "{bad:?}");
        assert!(!r.parse_ok);
        scores.push(r);
    }
    assert!(scores.iter().all(|s| (0.0..=1.0).contains(&s.value)));
    let want = scores.iter().map(|s| s.value).sum::<f64>() / scores.len() as f64;
    assert!((mean_r2i(&scores).unwrap() - want).abs() < 1e-12);
}

#[test]
fn readable_source_beats_pseudocode() {
    let w = R2iWeights::bundled();
    let samples = bench();
    let better = samples.iter().filter(|s| r2i_score(&s.source, w).value > r2i_score(&s.pseudo, w).value).count();
    assert_eq!(better, samples.len());
}
