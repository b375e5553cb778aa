use std::collections::BTreeSet;
use std::time::Duration;

use decompkit::reward::{
    batch_rewards, identifier_reward, placeholder_jaccard, structure_reward, BatchConfig, CompilerConfig,
    EmbeddingProvider, HashedTokenProvider, HttpEmbeddingProvider, RewardError, RewardMode, RewardPair,
};
use decompkit_testkit::Rng;
use proptest::prelude::*;

const REFERENCE: &str = "int func1(int var1, int var2) { return var1 + var2; }";

/// Generated IR per (class, Jaccard) cell. Sets against the reference
/// {func1, var1, var2}: {func1, var1, var2} gives 1, {func1, var1, var3}
/// gives 2/4, {func2, var3, var4} gives 0.
fn grid() -> Vec<(&'static str, f64, String)> {
    let bodies = [
        (1.0, "func1", "var1", "var2"),
        (0.5, "func1", "var1", "var3"),
        (0.0, "func2", "var3", "var4"),
    ];
    let mut cells = Vec::new();
    for (j, f, a, b) in bodies {
        cells.push(("compilable", j, format!("int {f}(int {a}, int {b}) {{ return {a} - {b}; }}")));
        cells.push(("syntax", j, format!("int {f}(int {a}, int {b}) {{ return {a} - {b};")));
        cells.push(("type", j, format!("int {f}(int {a}, int {b}) {{ return *{a} - {b}; }}")));
    }
    cells
}

#[test]
fn structure_reward_grid_is_analytic() {
    let cfg = CompilerConfig::default();
    for (class, j, gen) in grid() {
        let r = structure_reward(&gen, REFERENCE, None, &cfg).unwrap();
        assert_eq!(r.r_placeholder, j, "{class} {gen}");
        let want = if class == "compilable" { 1.0 + j } else { 0.0 };
        assert_eq!(r.r_structure, want, "{class} {gen}: {:?}", r.verdict.diagnostic);
    }
}

fn brute_jaccard(a: &[u8], b: &[u8]) -> f64 {
    let mut union: Vec<u8> = Vec::new();
    let mut inter = 0usize;
    for x in a.iter().chain(b) {
        if !union.contains(x) {
            union.push(*x);
        }
    }
    for x in &union {
        if a.contains(x) && b.contains(x) {
            inter += 1;
        }
    }
    if union.is_empty() {
        1.0
    } else {
        inter as f64 / union.len() as f64
    }
}

#[test]
fn jaccard_agrees_with_brute_force() {
    let mut rng = Rng::new(42);
    for _ in 0..10_000 {
        let mut draw = || -> Vec<u8> { (0..rng.below(7)).map(|_| rng.below(10) as u8).collect() };
        let a = draw();
        let b = draw();
        let sa: BTreeSet<String> = a.iter().map(|x| format!("var{}", x + 1)).collect();
        let sb: BTreeSet<String> = b.iter().map(|x| format!("var{}", x + 1)).collect();
        assert_eq!(placeholder_jaccard(&sa, &sb), brute_jaccard(&a, &b), "{a:?} {b:?}");
    }
}

/// Multiplies every embedding by a positive constant.
struct Scaled<P> {
    inner: P,
    factor: f64,
}

impl<P: EmbeddingProvider> EmbeddingProvider for Scaled<P> {
    fn embed(&self, text: &str) -> Result<Vec<f64>, RewardError> {
        Ok(self.inner.embed(text)?.into_iter().map(|x| x * self.factor).collect())
    }
    fn provider_id(&self) -> String {
        format!("scaled:{}", self.inner.provider_id())
    }
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }
}

#[test]
fn identical_texts_score_one() {
    let p = HashedTokenProvider::default();
    for text in ["int f(void) { return 0; }", "x", "long long unsigned int total_bytes;"] {
        let r = identifier_reward(text, text, &p).unwrap();
        assert!((r.r_identifier - 1.0).abs() < 1e-9);
    }
}

proptest! {
    #[test]
    fn cosine_ignores_positive_scaling(
        a in "[a-z_ (){};=+*0-9]{1,80}",
        b in "[a-z_ (){};=+*0-9]{1,80}",
        factor in 1e-3f64..1e3,
    ) {
        let base = HashedTokenProvider::new(64);
        let scaled = Scaled { inner: HashedTokenProvider::new(64), factor };
        let r0 = identifier_reward(&a, &b, &base).unwrap().r_identifier;
        let r1 = identifier_reward(&a, &b, &scaled).unwrap().r_identifier;
        prop_assert!((r0 - r1).abs() < 1e-9);
        prop_assert!((-1.0..=1.0).contains(&r0));
    }
}

fn pair(i: usize, generated: String, reference: &str) -> RewardPair {
    RewardPair { id: format!("p{i:04}"), generated, reference: reference.to_string(), reference_header: None }
}

#[test]
fn identifier_batch_isolates_bad_record() {
    let provider = HashedTokenProvider::default();
    let cfg = BatchConfig { compiler: CompilerConfig::default(), provider: &provider };
    let mut pairs: Vec<RewardPair> =
        (0..1000).map(|i| pair(i, format!("int f{i}(int a) {{ return a * {i}; }}"), "int g(int a)")).collect();
    pairs[617].generated.clear();
    let recs = batch_rewards(&pairs, RewardMode::Identifier, &cfg).unwrap();
    assert_eq!(recs.len(), 1000);
    for (i, (rec, p)) in recs.iter().zip(&pairs).enumerate() {
        assert_eq!(rec.id, p.id);
        assert!(rec.in_range());
        if i == 617 {
            assert!(rec.r_identifier.is_none() && !rec.diagnostics.is_empty());
        } else {
            assert!(rec.r_identifier.is_some());
        }
    }
}

#[test]
fn structure_batch_survives_a_runaway_compile() {
    let provider = HashedTokenProvider::default();
    let compiler = CompilerConfig { timeout_ms: 5_000, ..CompilerConfig::default() };
    let cfg = BatchConfig { compiler, provider: &provider };
    let bomb = "#define A(x) x+x+x+x+x+x+x+x+x+x\n#define B(x) A(A(A(A(x))))\n\
                #define C(x) B(B(B(x)))\nint var1 = C(1);";
    let mut pairs: Vec<RewardPair> = (0..120)
        .map(|i| {
            let g = if i % 2 == 0 { REFERENCE.to_string() } else { REFERENCE.trim_end_matches('}').to_string() };
            pair(i, g, REFERENCE)
        })
        .collect();
    pairs[33].generated = bomb.to_string();
    let recs = batch_rewards(&pairs, RewardMode::Structure, &cfg).unwrap();
    for (i, rec) in recs.iter().enumerate() {
        assert_eq!(rec.id, pairs[i].id);
        assert!(rec.in_range());
        let want = if i == 33 || i % 2 == 1 { 0.0 } else { 2.0 };
        assert_eq!(rec.r_structure, Some(want), "{i}");
    }
    // Depending on the machine the bomb hits the timeout or the memory
    // limit first; either way only its own record is affected.
    assert_eq!(recs[33].compiled, Some(false));
    assert!(!recs[33].diagnostics.is_empty());
}

#[test]
fn missing_compiler_aborts_the_batch() {
    let provider = HashedTokenProvider::default();
    let cfg = BatchConfig { compiler: CompilerConfig::default().with_path("/no/such/cc"), provider: &provider };
    let pairs = [pair(0, REFERENCE.into(), REFERENCE)];
    assert!(matches!(batch_rewards(&pairs, RewardMode::Structure, &cfg), Err(RewardError::ToolchainMissing(_))));
}

#[test]
fn unreachable_provider_aborts_the_batch() {
    let provider = HttpEmbeddingProvider::new("http://127.0.0.1:1/embed", 16, Duration::from_secs(1));
    let cfg = BatchConfig { compiler: CompilerConfig::default(), provider: &provider };
    let pairs = [pair(0, "a".into(), "b")];
    assert!(matches!(
        batch_rewards(&pairs, RewardMode::Identifier, &cfg),
        Err(RewardError::ProviderUnavailable(_))
    ));
}
