//! Tree-like and path-like subsets of `X_k`, the set of pairs
//! `(i, j)` with `1 <= i < j <= k`.
//!
//! Both families are produced by a recursion on segments `[l, r]` that
//! records the pair `(l, r)` at every node. The tree-like recursion picks
//! one interior split point and descends into `[l, m]` and `[m, r]`; the
//! path-like recursion trims one letter from each end and descends into
//! both `[l, r-1]` and `[l+1, r]`, so it is unique and reaches every
//! subsegment.

use crate::{Error, Result};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// A segment recursion tree witnessing a tree-like set: the node covers
/// `[lo, hi]` and either is a leaf (`hi - lo == 1`) or splits at `m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitTree {
    pub lo: usize,
    pub hi: usize,
    pub split: Option<(usize, Box<SplitTree>, Box<SplitTree>)>,
}

impl SplitTree {
    pub fn pairs(&self) -> BTreeSet<(usize, usize)> {
        let mut out = BTreeSet::new();
        self.collect(&mut out);
        out
    }

    fn collect(&self, out: &mut BTreeSet<(usize, usize)>) {
        out.insert((self.lo, self.hi));
        if let Some((_, l, r)) = &self.split {
            l.collect(out);
            r.collect(out);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SetKind {
    TreeLike,
    PathLike,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StratifiedSet {
    pub k: usize,
    pub pairs: BTreeSet<(usize, usize)>,
    pub kind: SetKind,
    /// Present for tree-like sets: one recursion tree that generates them.
    pub witness: Option<SplitTree>,
}

impl fmt::Display for StratifiedSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", render_pairs(&self.pairs))
    }
}

pub fn render_pairs(pairs: &BTreeSet<(usize, usize)>) -> String {
    let parts: Vec<String> = pairs.iter().map(|(i, j)| format!("({i},{j})")).collect();
    format!("{{{}}}", parts.join(","))
}

/// All pairs `(i, j)` with `1 <= i < j <= k`.
pub fn all_pairs(k: usize) -> BTreeSet<(usize, usize)> {
    let mut out = BTreeSet::new();
    for i in 1..=k {
        for j in i + 1..=k {
            out.insert((i, j));
        }
    }
    out
}

/// Every distinct tree-like subset of `X_k`, each with a witnessing
/// recursion tree. Trees that generate the same pair-set are deduplicated;
/// the result is sorted by pair-set.
pub fn enumerate_treelike(k: usize) -> Result<Vec<StratifiedSet>> {
    if k < 2 {
        return Err(Error::KTooSmall { got: k });
    }
    let trees = trees_over(1, k);
    let mut by_pairs: BTreeMap<BTreeSet<(usize, usize)>, SplitTree> = BTreeMap::new();
    for t in trees {
        by_pairs.entry(t.pairs()).or_insert(t);
    }
    Ok(by_pairs
        .into_iter()
        .map(|(pairs, witness)| StratifiedSet {
            k,
            pairs,
            kind: SetKind::TreeLike,
            witness: Some(witness),
        })
        .collect())
}

fn trees_over(lo: usize, hi: usize) -> Vec<SplitTree> {
    if hi - lo == 1 {
        return vec![SplitTree {
            lo,
            hi,
            split: None,
        }];
    }
    let mut out = Vec::new();
    for m in lo + 1..hi {
        for left in trees_over(lo, m) {
            for right in trees_over(m, hi) {
                out.push(SplitTree {
                    lo,
                    hi,
                    split: Some((m, Box::new(left.clone()), Box::new(right))),
                });
            }
        }
    }
    out
}

/// Number of distinct recursion trees over `[1, k]` (before pair-set
/// deduplication); Catalan(k - 2).
pub fn tree_count(k: usize) -> u128 {
    fn count(size: usize, memo: &mut BTreeMap<usize, u128>) -> u128 {
        // size = number of letters in the segment
        if size == 2 {
            return 1;
        }
        if let Some(c) = memo.get(&size) {
            return *c;
        }
        let mut total = 0u128;
        for m in 2..size {
            // split [1, size] at m: left has m letters, right size - m + 1
            total += count(m, memo) * count(size - m + 1, memo);
        }
        memo.insert(size, total);
        total
    }
    count(k, &mut BTreeMap::new())
}

/// The unique path-like set over `[1, k]`. The recursion visits both
/// trimmed subsegments, so every subsegment of `[1, k]` is reached and the
/// result is all of `X_k`.
pub fn pathlike(k: usize) -> Result<StratifiedSet> {
    if k < 2 {
        return Err(Error::KTooSmall { got: k });
    }
    let mut pairs = BTreeSet::new();
    let mut seen = BTreeSet::new();
    fn recurse(
        lo: usize,
        hi: usize,
        pairs: &mut BTreeSet<(usize, usize)>,
        seen: &mut BTreeSet<(usize, usize)>,
    ) {
        if !seen.insert((lo, hi)) {
            return;
        }
        pairs.insert((lo, hi));
        if hi - lo >= 2 {
            recurse(lo, hi - 1, pairs, seen);
            recurse(lo + 1, hi, pairs, seen);
        }
    }
    recurse(1, k, &mut pairs, &mut seen);
    Ok(StratifiedSet {
        k,
        pairs,
        kind: SetKind::PathLike,
        witness: None,
    })
}

/// Whether some recursion tree generates exactly this pair-set. Decided by a
/// memoized search over split choices, tracking which required pairs each
/// subtree can cover.
pub fn is_treelike(pairs: &BTreeSet<(usize, usize)>, k: usize) -> bool {
    if k < 2 {
        return false;
    }
    if !pairs.iter().all(|(i, j)| *i >= 1 && i < j && *j <= k) {
        return false;
    }
    let index: BTreeMap<(usize, usize), usize> = pairs
        .iter()
        .enumerate()
        .map(|(n, p)| (*p, n))
        .collect();
    if pairs.len() > 64 {
        return false; // larger than any tree-like set for supported k
    }
    let full: u64 = if pairs.len() == 64 {
        u64::MAX
    } else {
        (1u64 << pairs.len()) - 1
    };
    let mut memo: BTreeMap<(usize, usize), BTreeSet<u64>> = BTreeMap::new();
    fn achievable(
        lo: usize,
        hi: usize,
        index: &BTreeMap<(usize, usize), usize>,
        memo: &mut BTreeMap<(usize, usize), BTreeSet<u64>>,
    ) -> BTreeSet<u64> {
        if let Some(cached) = memo.get(&(lo, hi)) {
            return cached.clone();
        }
        let mut out = BTreeSet::new();
        if let Some(bit) = index.get(&(lo, hi)) {
            let own = 1u64 << bit;
            if hi - lo == 1 {
                out.insert(own);
            } else {
                for m in lo + 1..hi {
                    let lefts = achievable(lo, m, index, memo);
                    if lefts.is_empty() {
                        continue;
                    }
                    let rights = achievable(m, hi, index, memo);
                    for l in &lefts {
                        for r in &rights {
                            out.insert(own | l | r);
                        }
                    }
                }
            }
        }
        memo.insert((lo, hi), out.clone());
        out
    }
    achievable(1, k, &index, &mut memo).contains(&full)
}

/// Find one tree-like witness over `[1, k]` whose pair-set contains all of
/// `required`; split points are tried in increasing order so the result is
/// deterministic.
pub fn find_treelike_witness(
    k: usize,
    required: &BTreeSet<(usize, usize)>,
) -> Option<SplitTree> {
    if k < 2 {
        return None;
    }
    if !required.iter().all(|(i, j)| *i >= 1 && i < j && *j <= k) {
        return None;
    }
    fn build(
        lo: usize,
        hi: usize,
        required: &BTreeSet<(usize, usize)>,
    ) -> Option<SplitTree> {
        if hi - lo == 1 {
            let ok = required
                .iter()
                .all(|(i, j)| (*i, *j) == (lo, hi) || *j <= lo || *i >= hi);
            return ok.then_some(SplitTree {
                lo,
                hi,
                split: None,
            });
        }
        'split: for m in lo + 1..hi {
            // every required pair inside [lo, hi] other than (lo, hi) itself
            // must fit entirely in one side
            let mut left_req = BTreeSet::new();
            let mut right_req = BTreeSet::new();
            for (i, j) in required {
                let (i, j) = (*i, *j);
                if j <= lo || i >= hi || (i, j) == (lo, hi) {
                    continue;
                }
                if i >= lo && j <= m {
                    left_req.insert((i, j));
                } else if i >= m && j <= hi {
                    right_req.insert((i, j));
                } else {
                    continue 'split; // crosses the split
                }
            }
            if let (Some(l), Some(r)) = (build(lo, m, &left_req), build(m, hi, &right_req))
            {
                return Some(SplitTree {
                    lo,
                    hi,
                    split: Some((m, Box::new(l), Box::new(r))),
                });
            }
        }
        None
    }
    build(1, k, required)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(list: &[(usize, usize)]) -> BTreeSet<(usize, usize)> {
        list.iter().copied().collect()
    }

    #[test]
    fn treelike_k2_and_k3_are_unique() {
        let t2 = enumerate_treelike(2).unwrap();
        assert_eq!(t2.len(), 1);
        assert_eq!(t2[0].pairs, pairs(&[(1, 2)]));

        let t3 = enumerate_treelike(3).unwrap();
        assert_eq!(t3.len(), 1);
        assert_eq!(t3[0].pairs, pairs(&[(1, 2), (1, 3), (2, 3)]));
    }

    #[test]
    fn treelike_k4_has_exactly_the_two_sets() {
        let t4 = enumerate_treelike(4).unwrap();
        let got: BTreeSet<BTreeSet<(usize, usize)>> =
            t4.iter().map(|s| s.pairs.clone()).collect();
        let expected: BTreeSet<BTreeSet<(usize, usize)>> = [
            pairs(&[(1, 2), (1, 3), (2, 3), (3, 4), (1, 4)]),
            pairs(&[(1, 2), (2, 3), (2, 4), (3, 4), (1, 4)]),
        ]
        .into_iter()
        .collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn treelike_k5_has_five_sets() {
        assert_eq!(enumerate_treelike(5).unwrap().len(), 5);
    }

    #[test]
    fn treelike_counts_match_catalan() {
        // independent Catalan numbers via the binomial formula
        fn binom(n: u128, k: u128) -> u128 {
            let mut r = 1u128;
            for i in 0..k {
                r = r * (n - i) / (i + 1);
            }
            r
        }
        for k in 2..=8usize {
            let n = (k - 2) as u128;
            let catalan = binom(2 * n, n) / (n + 1);
            let sets = enumerate_treelike(k).unwrap();
            assert_eq!(sets.len() as u128, catalan, "k = {k}");
            // no pair-set collision among distinct recursion trees
            assert_eq!(tree_count(k), catalan, "k = {k}");
        }
    }

    #[test]
    fn treelike_sets_have_expected_structure() {
        for k in 2..=7usize {
            for s in enumerate_treelike(k).unwrap() {
                assert_eq!(s.pairs.len(), 2 * k - 3, "k = {k}");
                assert!(s.pairs.contains(&(1, k)));
                for i in 1..k {
                    assert!(s.pairs.contains(&(i, i + 1)));
                }
                let w = s.witness.as_ref().unwrap();
                assert_eq!(w.pairs(), s.pairs);
            }
        }
    }

    #[test]
    fn pathlike_is_all_pairs() {
        let p2 = pathlike(2).unwrap();
        assert_eq!(p2.pairs, pairs(&[(1, 2)]));
        let p3 = pathlike(3).unwrap();
        assert_eq!(p3.pairs, pairs(&[(1, 2), (2, 3), (1, 3)]));
        let p4 = pathlike(4).unwrap();
        assert_eq!(p4.pairs.len(), 6);
        for k in 2..=8 {
            let p = pathlike(k).unwrap();
            assert_eq!(p.pairs, all_pairs(k), "k = {k}");
            assert_eq!(p.pairs.len(), k * (k - 1) / 2);
        }
    }

    #[test]
    fn k_below_two_is_rejected() {
        assert!(matches!(enumerate_treelike(1), Err(Error::KTooSmall { .. })));
        assert!(matches!(pathlike(0), Err(Error::KTooSmall { .. })));
    }

    #[test]
    fn is_treelike_accepts_enumerated_and_rejects_others() {
        assert!(is_treelike(&pairs(&[(1, 2), (1, 3), (2, 3)]), 3));
        assert!(!is_treelike(&pairs(&[(1, 2)]), 3));
        for k in 2..=6 {
            for s in enumerate_treelike(k).unwrap() {
                assert!(is_treelike(&s.pairs, k));
            }
        }
        // X_4 itself is not tree-like: 6 pairs, tree-like sets have 5
        assert!(!is_treelike(&all_pairs(4), 4));
        // remove an adjacent pair from a valid set
        assert!(!is_treelike(&pairs(&[(1, 3), (2, 3), (3, 4), (1, 4)]), 4));
    }

    #[test]
    fn is_treelike_rejects_random_non_members() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for k in 4..=6usize {
            let members: BTreeSet<BTreeSet<(usize, usize)>> = enumerate_treelike(k)
                .unwrap()
                .into_iter()
                .map(|s| s.pairs)
                .collect();
            let all: Vec<(usize, usize)> = all_pairs(k).into_iter().collect();
            for _ in 0..50 {
                let subset: BTreeSet<(usize, usize)> = all
                    .iter()
                    .filter(|_| rng.gen_bool(0.6))
                    .copied()
                    .collect();
                assert_eq!(
                    is_treelike(&subset, k),
                    members.contains(&subset),
                    "k = {k}, set {}",
                    render_pairs(&subset)
                );
            }
        }
    }

    #[test]
    fn witness_search_honors_required_pairs() {
        let req = pairs(&[(2, 4)]);
        let w = find_treelike_witness(4, &req).unwrap();
        assert!(w.pairs().contains(&(2, 4)));
        assert!(is_treelike(&w.pairs(), 4));
        // (1,3) and (2,4) cross every split; no tree contains both
        let impossible = pairs(&[(1, 3), (2, 4)]);
        assert!(find_treelike_witness(4, &impossible).is_none());
    }

    #[test]
    fn rendering_is_sorted() {
        let s = pathlike(3).unwrap();
        assert_eq!(s.to_string(), "{(1,2),(1,3),(2,3)}");
    }
}
