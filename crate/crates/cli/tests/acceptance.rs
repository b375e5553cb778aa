//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any of them fails.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use decompkit::c_ast;
use decompkit::corpus::{
    candidate_probability, dedup, minhash_with, s_curve_threshold, DedupParams, HashFamily, LshIndex,
};
use decompkit::ir::{deobfuscate, extract_reserved, obfuscate, StdWhitelist};
use decompkit::metrics::{r2i_score, reexecute, R2iWeights, Stage};
use decompkit::orchestrator::{
    load_benchmark, run_benchmark, run_two_phase, validate_benchmark, Benchmark, EvalReport, MetricsConfig,
    PipelineRun, Preset, RecordedBackend, RecordedResponse, RunConfig,
};
use decompkit::reward::{
    identifier_reward, placeholder_jaccard, structure_reward, CompilerConfig, EmbeddingProvider,
    HashedTokenProvider, RewardError,
};
use decompkit_testkit::cgen;
use decompkit_testkit::mutants::{constant_body, inject_goto};
use decompkit_testkit::shingles::{exact_dedup, exact_jaccard, near_duplicate_corpus, pair_with_jaccard};
use decompkit_testkit::{bench_dir, fixtures_dir, Rng};

type Outcome = Result<String, String>;
type Check = Box<dyn Fn() -> Outcome>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_decompkit"));
    for v in ["DECOMPKIT_CONFIG", "DECOMPKIT_EMBEDDING_URL", "DECOMPKIT_JUDGE_URL", "DECOMPKIT_CC"] {
        c.env_remove(v);
    }
    c
}

fn run_cli(args: &[&str]) -> Result<String, String> {
    let out = bin().args(args).output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("decompkit {args:?} failed: {}", String::from_utf8_lossy(&out.stderr).trim()));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn forbidden(name: &str) -> bool {
    StdWhitelist::bundled().contains(name)
}

fn bench() -> Result<Benchmark, String> {
    let b = load_benchmark(&bench_dir()).map_err(|e| e.to_string())?;
    validate_benchmark(b, &CompilerConfig::default()).map_err(|e| e.to_string())
}

fn c_files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "c"))
        .collect();
    v.sort();
    v
}

fn round_trip() -> Outcome {
    let started = Instant::now();
    let mut texts: Vec<(String, String)> = (0..200u64).map(|s| (format!("gen{s}"), cgen::generate(s, &forbidden).text())).collect();
    for entry in std::fs::read_dir(bench_dir()).unwrap() {
        let dir = entry.unwrap().path();
        let src = std::fs::read_to_string(dir.join("source.c")).unwrap();
        let pseudo = std::fs::read_to_string(dir.join("pseudo.txt")).unwrap_or_default();
        texts.push((dir.display().to_string(), src + "\u{0}" + &pseudo));
    }
    for p in c_files(&fixtures_dir().join("corpus/src")) {
        texts.push((p.display().to_string(), std::fs::read_to_string(&p).unwrap()));
    }
    let (mut samples, mut functions) = (0, 0);
    for (name, packed) in &texts {
        let (src, pseudo) = packed.split_once('\u{0}').unwrap_or((packed, ""));
        let unit = obfuscate(src, &extract_reserved(pseudo)).map_err(|e| format!("{name}: {e}"))?;
        let back = deobfuscate(&unit).map_err(|e| format!("{name}: {e}"))?;
        ensure!(back == src, "{name}: round trip differs");
        samples += 1;
        functions += c_ast::parse(src, None).tree.map(|t| t.top_level_functions().len()).unwrap_or(0);
    }
    let secs = started.elapsed().as_secs_f64();
    ensure!(functions >= 200, "only {functions} functions");
    ensure!(secs < 30.0, "took {secs:.1}s");
    Ok(format!("{samples} files, {functions} functions exact, {secs:.2}s"))
}

fn numbering() -> Outcome {
    for seed in 0..50 {
        let prog = cgen::generate(seed, &forbidden);
        let text = prog.text();
        let unit = obfuscate(&text, &extract_reserved(&text)).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure!(unit.ir_text == prog.expected_ir(), "seed {seed}: numbering differs");
    }
    Ok("50/50 programs agree with the generator's numbering".into())
}

fn brute_jaccard(a: &[u8], b: &[u8]) -> f64 {
    let mut union: Vec<u8> = Vec::new();
    for x in a.iter().chain(b) {
        if !union.contains(x) {
            union.push(*x);
        }
    }
    if union.is_empty() {
        return 1.0;
    }
    let inter = union.iter().filter(|x| a.contains(x) && b.contains(x)).count();
    inter as f64 / union.len() as f64
}

fn structure_semantics() -> Outcome {
    let reference = "int func1(int var1, int var2) { return var1 + var2; }";
    let cfg = CompilerConfig::default();
    for (j, f, a, b) in [(1.0, "func1", "var1", "var2"), (0.5, "func1", "var1", "var3"), (0.0, "func2", "var3", "var4")] {
        let cells = [
            ("compilable", format!("int {f}(int {a}, int {b}) {{ return {a} - {b}; }}"), 1.0 + j),
            ("syntax", format!("int {f}(int {a}, int {b}) {{ return {a} - {b};"), 0.0),
            ("type", format!("int {f}(int {a}, int {b}) {{ return *{a} - {b}; }}"), 0.0),
        ];
        for (class, gen, want) in cells {
            let r = structure_reward(&gen, reference, None, &cfg).map_err(|e| e.to_string())?;
            ensure!(r.r_placeholder == j, "{class}/{j}: jaccard {}", r.r_placeholder);
            ensure!(r.r_structure == want, "{class}/{j}: r_structure {} want {want}", r.r_structure);
        }
    }
    let mut rng = Rng::new(42);
    for _ in 0..10_000 {
        let mut draw = || -> Vec<u8> { (0..rng.below(7)).map(|_| rng.below(10) as u8).collect() };
        let (a, b) = (draw(), draw());
        let sa: BTreeSet<String> = a.iter().map(|x| format!("var{}", x + 1)).collect();
        let sb: BTreeSet<String> = b.iter().map(|x| format!("var{}", x + 1)).collect();
        ensure!(placeholder_jaccard(&sa, &sb) == brute_jaccard(&a, &b), "{a:?} vs {b:?}");
    }
    Ok("3x3 grid exact, 10000 jaccard pairs match".into())
}

struct Scaled {
    inner: HashedTokenProvider,
    factor: f64,
}

impl EmbeddingProvider for Scaled {
    fn embed(&self, text: &str) -> Result<Vec<f64>, RewardError> {
        Ok(self.inner.embed(text)?.into_iter().map(|x| x * self.factor).collect())
    }
    fn provider_id(&self) -> String {
        "scaled".into()
    }
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }
}

fn identifier_semantics() -> Outcome {
    let base = HashedTokenProvider::default();
    let bench = bench()?;
    for s in &bench.samples {
        let r = identifier_reward(&s.source, &s.source, &base).map_err(|e| e.to_string())?;
        ensure!((r.r_identifier - 1.0).abs() <= 1e-9, "{}: self score {}", s.id, r.r_identifier);
    }
    let mut rng = Rng::new(8);
    let mut checked = 0;
    for a in &bench.samples {
        let b = &bench.samples[rng.below(bench.samples.len() as u64) as usize];
        for factor in [1e-3, 0.5, 7.0, 1e3] {
            let scaled = Scaled { inner: HashedTokenProvider::default(), factor };
            let r0 = identifier_reward(&a.pseudo, &b.source, &base).map_err(|e| e.to_string())?.r_identifier;
            let r1 = identifier_reward(&a.pseudo, &b.source, &scaled).map_err(|e| e.to_string())?.r_identifier;
            ensure!((r0 - r1).abs() < 1e-9, "scaling by {factor} moved {r0} to {r1}");
            ensure!((-1.0..=1.0).contains(&r0), "out of range {r0}");
            checked += 1;
        }
    }
    Ok(format!("{} self-pairs at 1.0, {checked} scaled pairs invariant", bench.samples.len()))
}

fn reexec_ceiling(tmp: &Path) -> Outcome {
    let out = tmp.join("references");
    run_cli(&["evaluate", "--bench", bench_dir().to_str().unwrap(), "--references", "--out", out.to_str().unwrap()])?;
    let report: EvalReport = read_json(&out.join("report.json"))?;
    ensure!(report.overall.samples >= 30, "only {} samples", report.overall.samples);
    ensure!(report.overall.reexec_rate == 1.0, "reexec rate {}", report.overall.reexec_rate);
    let bench = bench()?;
    let cfg = CompilerConfig::default();
    for s in &bench.samples {
        let r = reexecute(&constant_body(&s.source, &s.meta.original_name), &s.suite, &s.meta.original_name, &cfg)
            .map_err(|e| e.to_string())?;
        ensure!(!r.passed && r.stage_failed == Stage::Run, "{}: mutant {r:?}", s.id);
    }
    Ok(format!("references {}/{} pass, all constant mutants fail at run", report.overall.passed, report.overall.samples))
}

fn r2i_behaviour() -> Outcome {
    let bench = bench()?;
    let w = R2iWeights::bundled();
    // Garbage from every sample: nothing parses, and the mean must include them.
    let cfg = RunConfig::for_preset(Preset::PseudoSrc);
    let garbage = bench
        .pipeline_inputs()
        .iter()
        .enumerate()
        .map(|(i, s)| RecordedResponse {
            prompt: cfg.phase1_template.render(&s.pseudo),
            text: ["int f( {", "}}}", "", "int f(int a) { return a +; }"][i % 4].into(),
        })
        .collect::<Vec<_>>();
    let backend = RecordedBackend::from_responses("recorded:garbage", garbage);
    let (run, _) = run_two_phase(&bench.pipeline_inputs(), &backend, None, &cfg).map_err(|e| e.to_string())?;
    let report = run_benchmark(&bench, &run, &MetricsConfig::new(CompilerConfig::default())).map_err(|e| e.to_string())?;
    ensure!(report.overall.samples == bench.samples.len(), "samples dropped");
    ensure!(report.overall.r2i_parse_failures == bench.samples.len(), "{} parse failures", report.overall.r2i_parse_failures);
    ensure!(report.samples.iter().all(|e| e.r2i == 0.0), "unparsable input scored above 0");
    ensure!(report.overall.r2i_mean == 0.0, "mean {}", report.overall.r2i_mean);

    for s in &bench.samples {
        for text in [&s.source, &s.pseudo] {
            let v = r2i_score(text, w).value;
            ensure!((0.0..=1.0).contains(&v), "{}: {v}", s.id);
        }
    }
    let mut lowered = 0;
    for s in bench.samples.iter().take(10) {
        let before = r2i_score(&s.source, w).value;
        let after = r2i_score(&inject_goto(&s.source), w).value;
        ensure!(after < before, "{}: goto {before} -> {after}", s.id);
        lowered += 1;
    }
    Ok(format!("{} unparsable outputs counted as 0, goto lowers {lowered}/10", report.overall.samples))
}

fn minhash_estimator() -> Outcome {
    let started = Instant::now();
    let k = 5;
    let family = HashFamily::new(256, 7);
    let mut rng = Rng::new(11);
    let mut worst: f64 = 0.0;
    for (num, den, tol) in [(0, 1, 0.05), (1, 2, 0.1), (1, 1, 0.05)] {
        for _ in 0..10 {
            let (a, b) = pair_with_jaccard(num, den, 300, k, &mut rng);
            let exact = exact_jaccard(&a, &b, k);
            let sa = minhash_with(&a, k, &family).map_err(|e| e.to_string())?;
            let sb = minhash_with(&b, k, &family).map_err(|e| e.to_string())?;
            let est = sa.similarity(&sb).map_err(|e| e.to_string())?;
            ensure!((est - exact).abs() <= tol, "exact {exact} estimate {est}");
            worst = worst.max((est - exact).abs());
        }
    }
    let (bands, rows) = (16, 8);
    let floor = s_curve_threshold(bands, rows) + 0.1;
    let mut recalls = Vec::new();
    for (num, den) in [(81, 100), (17, 20), (9, 10), (19, 20)] {
        let s = num as f64 / den as f64;
        ensure!(s >= floor, "{s} below {floor}");
        let trials = 1000;
        let mut hits = 0;
        for t in 0..trials {
            let (a, b) = pair_with_jaccard(num, den, 150, k, &mut rng);
            let fam = HashFamily::new(bands * rows, 1000 + t);
            let mut index = LshIndex::new(bands, rows);
            index.insert(0, &minhash_with(&a, k, &fam).unwrap()).map_err(|e| e.to_string())?;
            index.insert(1, &minhash_with(&b, k, &fam).unwrap()).map_err(|e| e.to_string())?;
            hits += index.candidate_pairs().contains(&(0, 1)) as usize;
        }
        let recall = hits as f64 / trials as f64;
        ensure!(recall >= 0.9, "s={s}: recall {recall} (analytic {:.3})", candidate_probability(s, bands, rows));
        recalls.push(format!("{s}:{recall:.3}"));
    }
    let secs = started.elapsed().as_secs_f64();
    ensure!(secs < 60.0, "took {secs:.1}s");
    Ok(format!("max estimate error {worst:.3}, recall {}, {secs:.1}s", recalls.join(" ")))
}

fn dedup_vs_exhaustive() -> Outcome {
    let params = DedupParams::default();
    let mut rng = Rng::new(2024);
    let samples = near_duplicate_corpus(200, 250, &mut rng);
    let outcome = dedup(&samples, &params).map_err(|e| e.to_string())?;
    let want = exact_dedup(&samples, params.shingle_k, params.threshold);
    let text: BTreeMap<&str, &str> = samples.iter().map(|(i, t)| (i.as_str(), t.as_str())).collect();
    let j = |a: &str, b: &str| exact_jaccard(text[a], text[b], params.shingle_k);
    for m in &outcome.merged_pairs {
        ensure!(j(&m.a, &m.b) >= params.threshold - 0.15, "false removal {} ~ {} at {:.3}", m.a, m.b, j(&m.a, &m.b));
    }
    // Documented band: disagreements must sit next to a borderline pair.
    let band = 0.1;
    let got: BTreeSet<&str> = outcome.kept.iter().map(String::as_str).collect();
    let exp: BTreeSet<&str> = want.iter().map(String::as_str).collect();
    let diff: Vec<&str> = got.symmetric_difference(&exp).copied().collect();
    for id in &diff {
        let explained = samples.iter().any(|(o, _)| o != id && (j(id, o) - params.threshold).abs() < band);
        ensure!(explained, "{id} differs without a borderline partner");
    }
    Ok(format!(
        "kept {} (exhaustive {}), {} disagreements inside the ±{band} band",
        got.len(),
        exp.len(),
        diff.len()
    ))
}

fn write_config(dir: &Path, name: &str, pipeline: &str) -> PathBuf {
    let path = dir.join(name);
    let body = format!("[pipeline]\nbench_dir = {:?}\n{pipeline}", bench_dir());
    std::fs::write(&path, body).unwrap();
    path
}

fn oracle_pipeline(tmp: &Path) -> Outcome {
    let started = Instant::now();
    let cfg = write_config(
        tmp,
        "oracle.toml",
        "preset = \"pseudo-ir-src\"\nout_dir = \"oracle\"\nphase1 = { kind = \"oracle-ir\" }\nphase2 = { kind = \"oracle-deobfuscate\" }\n",
    );
    run_cli(&["--config", cfg.to_str().unwrap(), "pipeline", "run"])?;
    let secs = started.elapsed().as_secs_f64();
    let run: PipelineRun = read_json(&tmp.join("oracle/run.json"))?;
    let report: EvalReport = read_json(&tmp.join("oracle/report.json"))?;
    let bench = load_benchmark(&bench_dir()).map_err(|e| e.to_string())?;
    let source: BTreeMap<&str, &str> = bench.samples.iter().map(|s| (s.id.as_str(), s.source.as_str())).collect();
    ensure!(run.outputs.len() == bench.samples.len(), "{} outputs", run.outputs.len());
    for o in &run.outputs {
        ensure!(o.src_text.as_deref() == source.get(o.id.as_str()).copied(), "{}: source not reproduced", o.id);
    }
    ensure!(report.overall.reexec_rate == 1.0, "reexec rate {}", report.overall.reexec_rate);
    ensure!(secs < 300.0, "took {secs:.1}s");
    Ok(format!("{} sources exact, reexec 1.0, {secs:.1}s", run.outputs.len()))
}

fn determinism(tmp: &Path) -> Outcome {
    // Recorded answers: the reference for even samples, nonsense for odd ones.
    let bench = load_benchmark(&bench_dir()).map_err(|e| e.to_string())?;
    let template = RunConfig::for_preset(Preset::PseudoSrc).phase1_template;
    let lines: Vec<String> = bench
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let text = if i % 2 == 0 { s.source.clone() } else { format!("int {}(", s.meta.original_name) };
            serde_json::to_string(&RecordedResponse { prompt: template.render(&s.pseudo), text }).unwrap()
        })
        .collect();
    std::fs::write(tmp.join("answers.jsonl"), lines.join("\n")).unwrap();

    let setups = [
        ("echo", "preset = \"pseudo-src\"\nphase1 = { kind = \"echo\" }\n"),
        ("recorded", "preset = \"pseudo-src\"\nphase1 = { kind = \"recorded\", path = \"answers.jsonl\" }\n"),
    ];
    let mut compared = 0;
    for (name, body) in setups {
        let mut outputs = Vec::new();
        for round in 0..2 {
            let out = format!("{name}-{round}");
            let cfg = write_config(tmp, &format!("{out}.toml"), &format!("out_dir = {out:?}\n{body}"));
            run_cli(&["--config", cfg.to_str().unwrap(), "pipeline", "run"])?;
            outputs.push(tmp.join(out));
        }
        for file in ["run.json", "report.json", "report.txt"] {
            let a = std::fs::read(outputs[0].join(file)).map_err(|e| e.to_string())?;
            let b = std::fs::read(outputs[1].join(file)).map_err(|e| e.to_string())?;
            ensure!(a == b, "{name}: {file} differs between runs");
            compared += 1;
        }
    }
    Ok(format!("{compared} artifact pairs byte-identical across echo and recorded runs"))
}

fn main() {
    let tmp = tempfile::tempdir().expect("scratch dir");
    let t = tmp.path().to_path_buf();
    let criteria: Vec<(&str, Check)> = vec![
        ("obfuscation round trip", Box::new(round_trip)),
        ("placeholder numbering", Box::new(numbering)),
        ("structure reward", Box::new(structure_semantics)),
        ("identifier reward", Box::new(identifier_semantics)),
        ("re-execution ceiling", Box::new({
            let t = t.clone();
            move || reexec_ceiling(&t)
        })),
        ("readability score", Box::new(r2i_behaviour)),
        ("minhash and lsh", Box::new(minhash_estimator)),
        ("dedup vs exhaustive", Box::new(dedup_vs_exhaustive)),
        ("oracle pipeline", Box::new({
            let t = t.clone();
            move || oracle_pipeline(&t)
        })),
        ("pipeline determinism", Box::new(move || determinism(&t))),
    ];
    let mut failed = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panicked".into()))
        });
        let took = started.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("acceptance {:>2} PASS {name}: {detail} [{took:.1}s]", n + 1),
            Err(why) => {
                failed += 1;
                println!("acceptance {:>2} FAIL {name}: {why} [{took:.1}s]", n + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
