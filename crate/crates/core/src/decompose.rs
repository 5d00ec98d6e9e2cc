//! Recursive summand decomposition of linear grammars, and the
//! separation-witness computations of the non-closure argument.
//!
//! `decompose_linear` runs the linear analysis pipeline on a segment
//! `[lo, hi]` of the alphabet: intersect with the three-state automaton,
//! extract the system `A x = f_left + f_right`, solve the start component by
//! the adjugate (the determinant is an invertible polynomial in the outer
//! letters), and recurse into the `[lo, hi-1]` and `[lo+1, hi]` sub-analyses
//! carried by the two tagged summands. Every emitted summand is
//! `numerator * prod 1/p_(i,j)` with invertible bivariate denominators; the
//! summands re-sum to the bounded series of the input.

use crate::exponents::Exponents;
use crate::grammar::{Gf2Grammar, GrammarBuilder, Symbol};
use crate::parity::bounded_series;
use crate::poly::Gf2Polynomial;
use crate::series::TruncatedSeries;
use crate::system::{adjugate_row, det_poly, extract_system, RhsTag, SystemTerm};
use crate::typed::{intersect_linear_3state, TypedGrammar};
use crate::{Error, Result};
use std::collections::BTreeMap;

/// One summand `numerator / prod denominators` of a decomposition.
#[derive(Debug, Clone)]
pub struct Summand {
    /// Segments visited by the recursion that produced this summand,
    /// outermost first.
    pub trace: Vec<(usize, usize)>,
    /// Truncated numerator over the full alphabet.
    pub numerator: TruncatedSeries,
    /// Invertible denominator polynomial per pair `(i, j)`; the polynomial
    /// uses only the letters `a_i` and `a_j`.
    pub denominators: BTreeMap<(usize, usize), Gf2Polynomial>,
}

impl Summand {
    /// `numerator * prod inverse(denominator)` within the numerator's box.
    pub fn value(&self) -> Result<TruncatedSeries> {
        let bounds = self.numerator.bounds().clone();
        let mut acc = self.numerator.clone();
        for p in self.denominators.values() {
            acc = acc.mul(&p.inverse(&bounds)?)?;
        }
        Ok(acc)
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.denominators.keys().copied().collect()
    }
}

#[derive(Debug, Clone)]
pub struct SummandDecomposition {
    pub k: usize,
    pub bounds: Exponents,
    pub summands: Vec<Summand>,
    /// The bounded series of the input grammar.
    pub target: TruncatedSeries,
}

impl SummandDecomposition {
    pub fn resum(&self) -> Result<TruncatedSeries> {
        let mut acc = TruncatedSeries::zero(self.bounds.clone());
        for s in &self.summands {
            acc = acc.add(&s.value()?)?;
        }
        Ok(acc)
    }

    /// Re-summation invariant: the summands reproduce the bounded series.
    pub fn verify(&self) -> Result<bool> {
        Ok(self.resum()? == self.target)
    }
}

/// Decompose a linear grammar over its whole alphabet.
pub fn decompose_linear(g: &Gf2Grammar, bounds: &Exponents) -> Result<SummandDecomposition> {
    let k = g.alphabet_size();
    if k < 2 {
        return Err(Error::KTooSmall { got: k });
    }
    if bounds.len() != k {
        return Err(Error::BoundsMismatch {
            expected: k,
            got: bounds.len(),
        });
    }
    let target = bounded_series(g, bounds)?;
    let summands = decompose_segment(g, 1, k, k, bounds)?;
    let summands = consolidate(summands, bounds)?;
    Ok(SummandDecomposition {
        k,
        bounds: bounds.clone(),
        summands,
        target,
    })
}

fn local_bounds(bounds: &Exponents, lo: usize, hi: usize) -> Exponents {
    Exponents(bounds.as_slice()[lo - 1..=hi - 1].to_vec())
}

fn axis_map(lo: usize, hi: usize) -> Vec<usize> {
    (lo - 1..=hi - 1).collect()
}

/// Recursive worker: `h` is a linear grammar over the letters of the segment
/// `[lo, hi]` (its alphabet axes map to global axes `lo-1 ..= hi-1`).
fn decompose_segment(
    h: &Gf2Grammar,
    lo: usize,
    hi: usize,
    k: usize,
    bounds: &Exponents,
) -> Result<Vec<Summand>> {
    let lb = local_bounds(bounds, lo, hi);
    debug_assert_eq!(h.alphabet_size(), hi - lo + 1);

    if lo == hi {
        // single letter: the series itself is the numerator
        let series = bounded_series(h, &lb)?;
        if series.is_zero() {
            return Ok(Vec::new());
        }
        return Ok(vec![Summand {
            trace: vec![(lo, hi)],
            numerator: series.embed(k, &axis_map(lo, hi), bounds),
            denominators: BTreeMap::new(),
        }]);
    }

    let local_k = hi - lo + 1;
    let tg = intersect_linear_3state(h, local_k)?;
    let sys = extract_system(&tg, &lb)?;
    let mut out: Vec<Summand> = Vec::new();

    if h.epsilon_at_start() {
        out.push(Summand {
            trace: vec![(lo, hi)],
            numerator: TruncatedSeries::one(bounds.clone()),
            denominators: BTreeMap::new(),
        });
    }

    // accepting spans below (1 -> 3) recurse without a denominator
    let mut start_unknown: Option<usize> = None;
    for rule in tg.grammar.rules_of(tg.wrapper) {
        let [Symbol::Nonterminal(b)] = rule.body.as_slice() else {
            continue;
        };
        match tg.state_pair(*b) {
            Some((1, 1)) => {
                let sub = tg.re_root(*b, 0, 0)?;
                for cs in decompose_segment(&sub, lo, lo, k, bounds)? {
                    out.push(prefix_trace((lo, hi), cs));
                }
            }
            Some((1, 2)) => {
                let sub = tg.re_root(*b, 0, local_k - 2)?;
                for cs in decompose_segment(&sub, lo, hi - 1, k, bounds)? {
                    out.push(prefix_trace((lo, hi), cs));
                }
            }
            Some((1, 3)) => start_unknown = Some(*b),
            _ => {}
        }
    }

    let Some(start_nt) = start_unknown else {
        return Ok(out);
    };
    let x_idx = sys
        .unknowns
        .iter()
        .position(|nt| *nt == start_nt)
        .expect("start unknown is part of the system");
    let mp = sys
        .matrix_poly
        .as_ref()
        .expect("three-state systems carry polynomial matrices");
    let det_local = det_poly(mp, local_k)?;
    if !det_local.is_invertible() {
        // cannot happen: invertible diagonal, non-invertible off-diagonal
        return Err(Error::NotInvertible);
    }
    let det_global = det_local.embed(k, &axis_map(lo, hi));
    let adj = adjugate_row(mp, x_idx, local_k)?;

    // left summand: children enter with an outer-letter coefficient
    let mut left_by_child: BTreeMap<usize, Gf2Polynomial> = BTreeMap::new();
    // right summand: rule bodies per row, re-analyzed as one sub-grammar
    let mut right_by_row: BTreeMap<usize, Vec<&SystemTerm>> = BTreeMap::new();
    for term in &sys.terms {
        match term.tag {
            RhsTag::Left => {
                let child = term.child.expect("left terms carry a child");
                let c = adj[term.row].mul(&term.monomial)?;
                let entry = left_by_child
                    .entry(child)
                    .or_insert_with(|| Gf2Polynomial::zero(local_k));
                *entry = entry.add(&c)?;
            }
            RhsTag::Right => right_by_row.entry(term.row).or_default().push(term),
            _ => unreachable!("three-state extraction emits left/right only"),
        }
    }

    for (child, coeff) in left_by_child {
        if coeff.is_zero() {
            continue;
        }
        let coeff_series = coeff
            .embed(k, &axis_map(lo, hi))
            .to_series(bounds);
        let children = match tg.state_pair(child) {
            Some((1, 1)) => {
                let sub = tg.re_root(child, 0, 0)?;
                decompose_segment(&sub, lo, lo, k, bounds)?
            }
            Some((1, 2)) => {
                let sub = tg.re_root(child, 0, local_k - 2)?;
                decompose_segment(&sub, lo, hi - 1, k, bounds)?
            }
            other => unreachable!("left child has a left-block span, got {other:?}"),
        };
        for cs in children {
            out.push(merge_summand(
                (lo, hi),
                &coeff_series,
                &det_global,
                cs,
            )?);
        }
    }

    for (row, terms) in right_by_row {
        let coeff = &adj[row];
        if coeff.is_zero() {
            continue;
        }
        let coeff_series = coeff
            .embed(k, &axis_map(lo, hi))
            .to_series(bounds);
        let sub = right_wrapper_grammar(&tg, &terms, local_k)?;
        for cs in decompose_segment(&sub, lo + 1, hi, k, bounds)? {
            out.push(merge_summand((lo, hi), &coeff_series, &det_global, cs)?);
        }
    }

    Ok(out)
}

fn prefix_trace(seg: (usize, usize), mut s: Summand) -> Summand {
    let mut trace = vec![seg];
    trace.append(&mut s.trace);
    s.trace = trace;
    s
}

fn merge_summand(
    seg: (usize, usize),
    coeff: &TruncatedSeries,
    det: &Gf2Polynomial,
    cs: Summand,
) -> Result<Summand> {
    let mut s = prefix_trace(seg, cs);
    s.numerator = s.numerator.mul(coeff)?;
    // child pairs lie strictly inside the segment, so the slot is free
    let prev = s.denominators.insert(seg, det.clone());
    debug_assert!(prev.is_none());
    Ok(s)
}

/// Build the grammar of one row's right-tagged summand: a fresh start with
/// the collected rule bodies (`a_j B` and completely-final rules), over the
/// letters of `[lo+1, hi]`. Keeping the leading letter inside the grammar
/// preserves the word structure; extracting it as a coefficient would
/// miscount words whose first block is below it.
fn right_wrapper_grammar(
    tg: &TypedGrammar,
    terms: &[&SystemTerm],
    local_k: usize,
) -> Result<Gf2Grammar> {
    let letters: Vec<char> = tg.grammar.terminals()[1..local_k].to_vec();
    let mut builder = GrammarBuilder::new(&letters);
    let start = builder.nonterminal("RhsStart");
    builder.set_start(start);

    // copy the reachable cones of all children, letters shifted down by one
    let mut map: BTreeMap<usize, usize> = BTreeMap::new();
    let mut stack: Vec<usize> = Vec::new();
    for term in terms {
        if let Some(b) = term.child {
            if !map.contains_key(&b) {
                let name = tg.grammar.nonterminal_name(b).to_string();
                map.insert(b, builder.nonterminal(&name));
                stack.push(b);
            }
        }
    }
    let mut visited: Vec<usize> = map.keys().copied().collect();
    while let Some(nt) = stack.pop() {
        for rule in tg.grammar.rules_of(nt) {
            for s in &rule.body {
                if let Symbol::Nonterminal(b) = s {
                    if !map.contains_key(b) {
                        let name = tg.grammar.nonterminal_name(*b).to_string();
                        map.insert(*b, builder.nonterminal(&name));
                        stack.push(*b);
                        visited.push(*b);
                    }
                }
            }
        }
    }
    for nt in visited {
        for rule in tg.grammar.rules_of(nt) {
            let body: Vec<Symbol> = rule
                .body
                .iter()
                .map(|s| match s {
                    Symbol::Terminal(t) => {
                        debug_assert!(*t >= 1, "right cone never uses the first letter");
                        Symbol::Terminal(t - 1)
                    }
                    Symbol::Nonterminal(b) => Symbol::Nonterminal(map[b]),
                })
                .collect();
            builder.toggle_rule(map[&nt], body);
        }
    }

    for term in terms {
        match term.child {
            Some(b) => {
                // monomial is the single leading letter
                let t = term
                    .monomial
                    .support()
                    .next()
                    .expect("term monomial is non-zero");
                let axis = t.iter().position(|e| *e > 0).expect("a single letter");
                builder.toggle_rule(
                    start,
                    vec![Symbol::Terminal(axis - 1), Symbol::Nonterminal(map[&b])],
                );
            }
            None => {
                // completely-final rule: the monomial is the whole word
                let t = term
                    .monomial
                    .support()
                    .next()
                    .expect("term monomial is non-zero");
                let mut body = Vec::new();
                for (axis, count) in t.iter().enumerate() {
                    for _ in 0..*count {
                        body.push(Symbol::Terminal(axis - 1));
                    }
                }
                builder.toggle_rule(start, body);
            }
        }
    }
    builder.finish()
}

/// Merge summands with identical denominator maps; fold denominator-free
/// summands into the first denominated one (multiplying by its denominators)
/// so polynomial-shaped languages come out as a single summand.
fn consolidate(summands: Vec<Summand>, bounds: &Exponents) -> Result<Vec<Summand>> {
    let mut grouped: BTreeMap<Vec<((usize, usize), Gf2Polynomial)>, Summand> = BTreeMap::new();
    for s in summands {
        let key: Vec<((usize, usize), Gf2Polynomial)> = s
            .denominators
            .iter()
            .filter(|(_, p)| !p.is_one())
            .map(|(k, p)| (*k, p.clone()))
            .collect();
        match grouped.get_mut(&key) {
            Some(acc) => acc.numerator = acc.numerator.add(&s.numerator)?,
            None => {
                let mut s = s;
                s.denominators.retain(|_, p| !p.is_one());
                grouped.insert(key, s);
            }
        }
    }
    let mut with_denoms: Vec<Summand> = Vec::new();
    let mut free: Vec<Summand> = Vec::new();
    for (_, s) in grouped {
        if s.numerator.is_zero() {
            continue;
        }
        if s.denominators.is_empty() {
            free.push(s);
        } else {
            with_denoms.push(s);
        }
    }
    if with_denoms.is_empty() {
        return Ok(free);
    }
    // fold the free part into the first denominated summand
    for f in free {
        let mut lifted = f.numerator;
        for p in with_denoms[0].denominators.values() {
            lifted = lifted.mul(&p.to_series(bounds))?;
        }
        with_denoms[0].numerator = with_denoms[0].numerator.add(&lifted)?;
    }
    with_denoms.retain(|s| !s.numerator.is_zero());
    Ok(with_denoms)
}

// ---------------------------------------------------------------------------
// separation witness machinery
// ---------------------------------------------------------------------------

/// `a^d + a^{d-1} c + ... + a c^{d-1} + c^d`: every monomial of total degree
/// `d` in the two variables `a` and `c`.
pub fn homogeneous_sum(degree: usize) -> Gf2Polynomial {
    let monomials: Vec<Vec<usize>> = (0..=degree).map(|i| vec![i, degree - i]).collect();
    Gf2Polynomial::from_monomials(2, &[0, 1], &monomials).expect("valid support")
}

/// The coefficient of `b^d` after multiplying the witness series by an
/// invertible multiplier `1 + a q_a(a, c) + c q_c(a, c)`:
/// `(a^d + a^{d-1} c + ... + c^d) * (1 + a q_a + c q_c)`, exact.
pub fn dk_polynomial(
    degree: usize,
    q_a: &Gf2Polynomial,
    q_c: &Gf2Polynomial,
) -> Result<Gf2Polynomial> {
    if q_a.k() != 2 || q_c.k() != 2 {
        return Err(Error::VariableCountMismatch {
            left: q_a.k(),
            right: 2,
        });
    }
    let a = Gf2Polynomial::monomial(2, &[1, 0]);
    let c = Gf2Polynomial::monomial(2, &[0, 1]);
    let multiplier = Gf2Polynomial::one(2)
        .add(&a.mul(q_a)?)?
        .add(&c.mul(q_c)?)?;
    homogeneous_sum(degree).mul(&multiplier)
}

/// Largest `min(l, m)` over the monomials `a^l b^k c^m` present in the
/// `b^k` slice of a three-variable series, or `None` when the slice is
/// empty. Bounded in `k` for any finite sum of one-sided products, but
/// `floor(k/2)` (unbounded) for the witness `sum a^n b^{n+m} c^m`.
pub fn separation_bound(s: &TruncatedSeries, k: usize) -> Result<Option<usize>> {
    if s.k() != 3 {
        return Err(Error::VariableCountMismatch {
            left: s.k(),
            right: 3,
        });
    }
    if k > s.bounds()[1] {
        return Err(Error::BoundsMismatch {
            expected: s.bounds()[1],
            got: k,
        });
    }
    let mut best: Option<usize> = None;
    for e in s.support() {
        if e[1] != k {
            continue;
        }
        let m = e[0].min(e[2]);
        best = Some(best.map_or(m, |b| b.max(m)));
    }
    Ok(best)
}
