//! Whitespace-token texts with exactly known k-shingle Jaccard similarity.
//!
//! All builders emit plain word tokens separated by single spaces, so
//! splitting on whitespace recovers the same tokens a C lexer would see.

use std::collections::BTreeSet;

use crate::Rng;

pub fn shingle_set(text: &str, k: usize) -> BTreeSet<Vec<&str>> {
    let toks: Vec<&str> = text.split_whitespace().collect();
    if k == 0 || toks.len() < k {
        return BTreeSet::new();
    }
    toks.windows(k).map(|w| w.to_vec()).collect()
}

/// Exact Jaccard of the k-shingle sets (two empty sets count as identical).
pub fn exact_jaccard(a: &str, b: &str, k: usize) -> f64 {
    let sa = shingle_set(a, k);
    let sb = shingle_set(b, k);
    let union = sa.union(&sb).count();
    if union == 0 {
        return 1.0;
    }
    sa.intersection(&sb).count() as f64 / union as f64
}

/// Source of never-repeating word tokens.
pub struct Words {
    tag: u64,
    next: u64,
}

impl Words {
    pub fn new(rng: &mut Rng) -> Self {
        Self { tag: rng.next_u64() & 0xffff_ffff, next: 0 }
    }

    pub fn fresh(&mut self) -> String {
        self.next += 1;
        format!("w{:x}_{}", self.tag, self.next)
    }

    pub fn fresh_run(&mut self, n: usize) -> Vec<String> {
        (0..n).map(|_| self.fresh()).collect()
    }
}

/// Two texts with `each` distinct shingles apiece, exactly `shared` of
/// which are common. Their Jaccard is `shared / (2 * each - shared)`.
///
/// Layout: `A = C ++ D`, `B = C ++ E` with pairwise disjoint fresh tokens;
/// only the windows lying inside `C` coincide.
pub fn pair_sharing(shared: usize, each: usize, k: usize, rng: &mut Rng) -> (String, String) {
    assert!(k >= 1 && each >= 1 && shared <= each);
    let mut w = Words::new(rng);
    if shared == each {
        let t = w.fresh_run(each + k - 1).join(" ");
        return (t.clone(), t);
    }
    let common = if shared == 0 { 0 } else { shared + k - 1 };
    let len = each + k - 1;
    let c = w.fresh_run(common);
    let mut a = c.clone();
    a.extend(w.fresh_run(len - common));
    let mut b = c;
    b.extend(w.fresh_run(len - common));
    (a.join(" "), b.join(" "))
}

/// Pair whose exact Jaccard equals `num / den` (`num <= den`), with at
/// least `min_shingles` shingles per text.
pub fn pair_with_jaccard(num: usize, den: usize, min_shingles: usize, k: usize, rng: &mut Rng) -> (String, String) {
    assert!(den > 0 && num <= den);
    // J = s / (2N - s) = num/den  =>  s * (den + num) = 2 N num.
    // Take N = (den + num) * t and s = 2 num t.
    let t = min_shingles.div_ceil(den + num).max(1);
    let each = (den + num) * t;
    let shared = 2 * num * t;
    pair_sharing(shared, each, k, rng)
}

/// Copy of `tokens` with `edits` random positions replaced by fresh words.
pub fn mutate(tokens: &[String], edits: usize, words: &mut Words, rng: &mut Rng) -> Vec<String> {
    let mut out = tokens.to_vec();
    for _ in 0..edits {
        let at = rng.below(out.len() as u64) as usize;
        out[at] = words.fresh();
    }
    out
}

/// `n` samples made of clusters of light edits around random bases plus
/// unrelated singletons. Ids are `s000`, `s001`, ... in shuffled order so
/// cluster members are not adjacent.
pub fn near_duplicate_corpus(n: usize, len: usize, rng: &mut Rng) -> Vec<(String, String)> {
    let mut words = Words::new(rng);
    let mut texts: Vec<Vec<String>> = Vec::new();
    while texts.len() < n {
        let base = words.fresh_run(len);
        let members = if rng.chance(0.6) { 2 + rng.below(3) as usize } else { 1 };
        for m in 0..members.min(n - texts.len()) {
            let edits = if m == 0 { 0 } else { rng.below(5) as usize };
            texts.push(mutate(&base, edits, &mut words, rng));
        }
    }
    rng.shuffle(&mut texts);
    texts.into_iter().enumerate().map(|(i, t)| (format!("s{i:03}"), t.join(" "))).collect()
}

/// Exhaustive clustering: pairs with exact Jaccard at or above `threshold`
/// are linked, and each connected component keeps its smallest id.
/// Returns the kept ids in input order.
pub fn exact_dedup(samples: &[(String, String)], k: usize, threshold: f64) -> Vec<String> {
    let n = samples.len();
    let mut comp: Vec<usize> = (0..n).collect();
    fn root(comp: &mut [usize], mut x: usize) -> usize {
        while comp[x] != x {
            x = comp[x];
        }
        x
    }
    for i in 0..n {
        for j in i + 1..n {
            if exact_jaccard(&samples[i].1, &samples[j].1, k) >= threshold {
                let (a, b) = (root(&mut comp, i), root(&mut comp, j));
                comp[a.max(b)] = a.min(b);
            }
        }
    }
    let mut best: std::collections::HashMap<usize, &str> = std::collections::HashMap::new();
    for (i, (id, _)) in samples.iter().enumerate() {
        let e = best.entry(root(&mut comp, i)).or_insert(id.as_str());
        if id.as_str() < *e {
            *e = id.as_str();
        }
    }
    let kept: BTreeSet<&str> = best.values().copied().collect();
    samples.iter().filter(|(id, _)| kept.contains(id.as_str())).map(|(id, _)| id.clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructed_pairs_hit_their_target() {
        let mut rng = Rng::new(3);
        for k in [1, 3, 8] {
            for (num, den) in [(0, 1), (1, 2), (1, 1), (1, 3), (4, 5)] {
                let (a, b) = pair_with_jaccard(num, den, 100, k, &mut rng);
                let j = exact_jaccard(&a, &b, k);
                assert!((j - num as f64 / den as f64).abs() < 1e-12, "k={k} {num}/{den}: {j}");
            }
        }
    }
}
