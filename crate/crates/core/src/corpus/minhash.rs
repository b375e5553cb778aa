//! MinHash signatures over token shingles, LSH banding and near-duplicate
//! removal.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::CorpusError;
use crate::digest::{fnv1a64, fnv1a64_extend, mix64};
use crate::lexer;

/// Mersenne prime 2^61 - 1, modulus of the universal hash family.
const PRIME: u64 = (1 << 61) - 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinHashSignature {
    pub values: Vec<u64>,
    pub shingle_k: usize,
    pub seed: u64,
}

impl MinHashSignature {
    /// Fraction of positions holding equal minima.
    pub fn similarity(&self, other: &MinHashSignature) -> Result<f64, CorpusError> {
        if self.values.len() != other.values.len() || self.shingle_k != other.shingle_k || self.seed != other.seed {
            return Err(CorpusError::SignatureMismatch);
        }
        let eq = self.values.iter().zip(&other.values).filter(|(a, b)| a == b).count();
        Ok(eq as f64 / self.values.len() as f64)
    }
}

/// `m` functions `x -> (a*x + b) mod p` with coefficients drawn from a
/// ChaCha stream seeded by `seed`.
#[derive(Debug, Clone)]
pub struct HashFamily {
    coeffs: Vec<(u64, u64)>,
    seed: u64,
}

impl HashFamily {
    pub fn new(m: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs = (0..m)
            .map(|_| {
                let a = 1 + rng.next_u64() % (PRIME - 1);
                let b = rng.next_u64() % PRIME;
                (a, b)
            })
            .collect();
        Self { coeffs, seed }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn apply(&self, i: usize, x: u64) -> u64 {
        let (a, b) = self.coeffs[i];
        ((a as u128 * x as u128 + b as u128) % PRIME as u128) as u64
    }

    /// Signature of an already-hashed shingle set.
    pub fn signature<I: IntoIterator<Item = u64>>(&self, shingles: I, k: usize) -> MinHashSignature {
        let mut values = vec![u64::MAX; self.coeffs.len()];
        for x in shingles {
            for (i, v) in values.iter_mut().enumerate() {
                *v = (*v).min(self.apply(i, x));
            }
        }
        MinHashSignature { values, shingle_k: k, seed: self.seed }
    }
}

/// Hashed token k-shingles of `text`, or `None` with fewer than `k` tokens.
pub fn shingle_hashes(text: &str, k: usize) -> Option<HashSet<u64>> {
    let tokens: Vec<&str> = lexer::code_tokens(text).map(|t| t.text).collect();
    if k == 0 || tokens.len() < k {
        return None;
    }
    Some(
        tokens
            .windows(k)
            .map(|w| {
                let h = w.iter().fold(fnv1a64(&[]), |h, t| fnv1a64_extend(fnv1a64_extend(h, t.as_bytes()), &[0]));
                mix64(h) % PRIME
            })
            .collect(),
    )
}

pub fn minhash(text: &str, k: usize, m: usize, seed: u64) -> Result<MinHashSignature, CorpusError> {
    minhash_with(text, k, &HashFamily::new(m, seed))
}

pub fn minhash_with(text: &str, k: usize, family: &HashFamily) -> Result<MinHashSignature, CorpusError> {
    let shingles = shingle_hashes(text, k).ok_or(CorpusError::TextTooShort { k })?;
    Ok(family.signature(shingles, k))
}

/// Banded LSH over signatures of length `bands * rows`.
#[derive(Debug, Clone)]
pub struct LshIndex {
    bands: usize,
    rows: usize,
    tables: Vec<HashMap<u64, Vec<usize>>>,
}

impl LshIndex {
    pub fn new(bands: usize, rows: usize) -> Self {
        assert!(bands > 0 && rows > 0, "bands and rows must be positive");
        Self { bands, rows, tables: vec![HashMap::new(); bands] }
    }

    pub fn signature_len(&self) -> usize {
        self.bands * self.rows
    }

    pub fn insert(&mut self, id: usize, sig: &MinHashSignature) -> Result<(), CorpusError> {
        if sig.values.len() != self.signature_len() {
            return Err(CorpusError::SignatureMismatch);
        }
        for (band, table) in self.tables.iter_mut().enumerate() {
            let chunk = &sig.values[band * self.rows..(band + 1) * self.rows];
            let key = chunk.iter().fold(fnv1a64(&[]), |h, v| fnv1a64_extend(h, &v.to_le_bytes()));
            table.entry(key).or_default().push(id);
        }
        Ok(())
    }

    /// All pairs `(i, j)`, `i < j`, sharing a bucket in some band.
    pub fn candidate_pairs(&self) -> BTreeSet<(usize, usize)> {
        let mut pairs = BTreeSet::new();
        for table in &self.tables {
            for bucket in table.values() {
                for (x, &i) in bucket.iter().enumerate() {
                    for &j in &bucket[x + 1..] {
                        pairs.insert((i.min(j), i.max(j)));
                    }
                }
            }
        }
        pairs
    }
}

/// Probability that a pair with signature similarity `s` becomes a
/// candidate.
pub fn candidate_probability(s: f64, bands: usize, rows: usize) -> f64 {
    1.0 - (1.0 - s.powi(rows as i32)).powi(bands as i32)
}

/// Similarity at which the candidate curve is steepest, `(1/b)^(1/r)`.
pub fn s_curve_threshold(bands: usize, rows: usize) -> f64 {
    (1.0 / bands as f64).powf(1.0 / rows as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DedupParams {
    pub shingle_k: usize,
    pub bands: usize,
    pub rows: usize,
    pub threshold: f64,
    pub seed: u64,
}

impl Default for DedupParams {
    fn default() -> Self {
        Self { shingle_k: 8, bands: 16, rows: 8, threshold: 0.85, seed: 0x5eed }
    }
}

impl DedupParams {
    pub fn num_perm(&self) -> usize {
        self.bands * self.rows
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedEntry {
    pub id: String,
    pub representative: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergedPair {
    pub a: String,
    pub b: String,
    pub signature_similarity: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DedupOutcome {
    /// Kept ids in input order, including exempt ones.
    pub kept: Vec<String>,
    pub dropped: Vec<DroppedEntry>,
    /// Too short to shingle; kept without comparison.
    pub exempt: Vec<String>,
    pub candidate_pairs: usize,
    pub merged_pairs: Vec<MergedPair>,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Remove near-duplicates. Candidates from LSH banding are confirmed when
/// their signature similarity reaches the threshold, confirmed pairs are
/// merged into clusters, and each cluster keeps its lexicographically
/// smallest id.
pub fn dedup(samples: &[(String, String)], params: &DedupParams) -> Result<DedupOutcome, CorpusError> {
    if !(params.threshold > 0.0 && params.threshold < 1.0) {
        return Err(CorpusError::Config(format!("threshold {} outside (0, 1)", params.threshold)));
    }
    let family = HashFamily::new(params.num_perm(), params.seed);
    let sigs: Vec<Option<MinHashSignature>> = {
        use rayon::prelude::*;
        samples.par_iter().map(|(_, text)| minhash_with(text, params.shingle_k, &family).ok()).collect()
    };

    let mut index = LshIndex::new(params.bands, params.rows);
    for (i, sig) in sigs.iter().enumerate() {
        if let Some(sig) = sig {
            index.insert(i, sig)?;
        }
    }
    let candidates = index.candidate_pairs();
    let mut uf = UnionFind::new(samples.len());
    let mut merged_pairs = Vec::new();
    for &(i, j) in &candidates {
        let (Some(a), Some(b)) = (&sigs[i], &sigs[j]) else { continue };
        let s = a.similarity(b)?;
        if s >= params.threshold {
            uf.union(i, j);
            merged_pairs.push(MergedPair { a: samples[i].0.clone(), b: samples[j].0.clone(), signature_similarity: s });
        }
    }

    let mut representative: BTreeMap<usize, usize> = BTreeMap::new();
    for i in 0..samples.len() {
        let root = uf.find(i);
        let rep = representative.entry(root).or_insert(i);
        if samples[i].0 < samples[*rep].0 {
            *rep = i;
        }
    }
    let mut out = DedupOutcome { candidate_pairs: candidates.len(), merged_pairs, ..Default::default() };
    for (i, (id, _)) in samples.iter().enumerate() {
        let rep = representative[&uf.find(i)];
        if sigs[i].is_none() {
            out.exempt.push(id.clone());
        }
        if rep == i {
            out.kept.push(id.clone());
        } else {
            out.dropped.push(DroppedEntry { id: id.clone(), representative: samples[rep].0.clone() });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(range: std::ops::Range<usize>) -> String {
        range.map(|i| format!("t{i}")).collect::<Vec<_>>().join(" ")
    }

    #[test]
    fn identical_texts() {
        let t = words(0..40);
        let a = minhash(&t, 4, 128, 1).unwrap();
        assert_eq!(a, minhash(&t, 4, 128, 1).unwrap());
        assert_eq!(a.similarity(&a).unwrap(), 1.0);
    }

    #[test]
    fn short_text_rejected() {
        assert!(matches!(minhash("a b", 3, 16, 0), Err(CorpusError::TextTooShort { k: 3 })));
    }

    #[test]
    fn mismatched_lengths_rejected() {
        let t = words(0..20);
        let a = minhash(&t, 2, 16, 0).unwrap();
        let b = minhash(&t, 2, 32, 0).unwrap();
        assert!(a.similarity(&b).is_err());
        assert!(LshIndex::new(4, 4).insert(0, &b).is_err());
    }

    #[test]
    fn exact_duplicate_pair() {
        let t = words(0..50);
        let samples = vec![
            ("b".to_string(), t.clone()),
            ("a".to_string(), t),
            ("c".to_string(), words(100..150)),
        ];
        let out = dedup(&samples, &DedupParams::default()).unwrap();
        assert_eq!(out.kept, ["a", "c"]);
        assert_eq!(out.dropped, [DroppedEntry { id: "b".into(), representative: "a".into() }]);
    }

    #[test]
    fn short_samples_are_exempt_and_kept() {
        let samples = vec![("x".to_string(), "int a;".to_string()), ("y".to_string(), "int a;".to_string())];
        let out = dedup(&samples, &DedupParams::default()).unwrap();
        assert_eq!(out.kept, ["x", "y"]);
        assert_eq!(out.exempt, ["x", "y"]);
    }

    #[test]
    fn s_curve() {
        // (1/16)^(1/8) = 2^(-1/2)
        assert!((s_curve_threshold(16, 8) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!(candidate_probability(0.9, 16, 8) > 0.99);
        assert!(candidate_probability(0.3, 16, 8) < 0.01);
    }
}
