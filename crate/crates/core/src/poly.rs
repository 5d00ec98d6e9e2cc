//! Polynomials over GF(2) with a declared variable subset.
//!
//! A `Gf2Polynomial` is a finite-support series tagged with the axes it is
//! allowed to use (the `F[a_i, a_j]` discipline of the denominator rings).
//! Arithmetic is exact; truncation only happens on conversion to a series.

use crate::exponents::Exponents;
use crate::series::TruncatedSeries;
use crate::{Error, Result};
use std::collections::BTreeSet;

#[derive(Debug, Clone)]
pub struct Gf2Polynomial {
    k: usize,
    vars: Vec<usize>,
    support: BTreeSet<Vec<usize>>,
}

// equality is mathematical: the declared variable subset is a discipline
// annotation, not part of the ring element
impl PartialEq for Gf2Polynomial {
    fn eq(&self, other: &Self) -> bool {
        self.k == other.k && self.support == other.support
    }
}
impl Eq for Gf2Polynomial {}

impl PartialOrd for Gf2Polynomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Gf2Polynomial {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.k, &self.support).cmp(&(other.k, &other.support))
    }
}

impl Gf2Polynomial {
    pub fn zero(k: usize) -> Self {
        Gf2Polynomial {
            k,
            vars: Vec::new(),
            support: BTreeSet::new(),
        }
    }

    pub fn one(k: usize) -> Self {
        let mut support = BTreeSet::new();
        support.insert(vec![0; k]);
        Gf2Polynomial {
            k,
            vars: Vec::new(),
            support,
        }
    }

    /// Single monomial; the variable subset is the set of axes it uses.
    pub fn monomial(k: usize, exps: &[usize]) -> Self {
        assert_eq!(exps.len(), k);
        let vars: Vec<usize> = (0..k).filter(|i| exps[*i] > 0).collect();
        let mut support = BTreeSet::new();
        support.insert(exps.to_vec());
        Gf2Polynomial { k, vars, support }
    }

    /// Build from explicit monomials with a declared variable subset.
    /// Every monomial must keep exponent zero outside `vars`.
    pub fn from_monomials(k: usize, vars: &[usize], monomials: &[Vec<usize>]) -> Result<Self> {
        let mut sorted: Vec<usize> = vars.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let mut support = BTreeSet::new();
        for m in monomials {
            if m.len() != k {
                return Err(Error::BoundsMismatch {
                    expected: k,
                    got: m.len(),
                });
            }
            for (axis, e) in m.iter().enumerate() {
                if *e > 0 && !sorted.contains(&axis) {
                    return Err(Error::VariableOutsideSubset { axis });
                }
            }
            // GF(2): repeated monomials cancel pairwise
            if !support.insert(m.clone()) {
                support.remove(m);
            }
        }
        Ok(Gf2Polynomial {
            k,
            vars: sorted,
            support,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn vars(&self) -> &[usize] {
        &self.vars
    }

    pub fn support(&self) -> impl Iterator<Item = &Vec<usize>> {
        self.support.iter()
    }

    pub fn monomial_count(&self) -> usize {
        self.support.len()
    }

    pub fn is_zero(&self) -> bool {
        self.support.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.support.len() == 1 && self.support.contains(&vec![0; self.k])
    }

    /// A polynomial over GF(2) is a unit of the power-series ring exactly
    /// when its constant term is 1.
    pub fn is_invertible(&self) -> bool {
        self.support.contains(&vec![0; self.k])
    }

    pub fn degree(&self, axis: usize) -> usize {
        self.support.iter().map(|m| m[axis]).max().unwrap_or(0)
    }

    pub fn toggle(&mut self, exps: &[usize]) -> Result<()> {
        assert_eq!(exps.len(), self.k);
        for (axis, e) in exps.iter().enumerate() {
            if *e > 0 && !self.vars.contains(&axis) {
                self.vars.push(axis);
                self.vars.sort_unstable();
            }
        }
        if !self.support.insert(exps.to_vec()) {
            self.support.remove(exps);
        }
        Ok(())
    }

    pub fn add(&self, other: &Gf2Polynomial) -> Result<Gf2Polynomial> {
        if self.k != other.k {
            return Err(Error::VariableCountMismatch {
                left: self.k,
                right: other.k,
            });
        }
        let mut support = self.support.clone();
        for m in &other.support {
            if !support.insert(m.clone()) {
                support.remove(m);
            }
        }
        Ok(Gf2Polynomial {
            k: self.k,
            vars: union_vars(&self.vars, &other.vars),
            support,
        })
    }

    /// Exact product (no truncation).
    pub fn mul(&self, other: &Gf2Polynomial) -> Result<Gf2Polynomial> {
        if self.k != other.k {
            return Err(Error::VariableCountMismatch {
                left: self.k,
                right: other.k,
            });
        }
        let mut support = BTreeSet::new();
        for a in &self.support {
            for b in &other.support {
                let m: Vec<usize> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                if !support.insert(m.clone()) {
                    support.remove(&m);
                }
            }
        }
        Ok(Gf2Polynomial {
            k: self.k,
            vars: union_vars(&self.vars, &other.vars),
            support,
        })
    }

    /// `self + 1`.
    pub fn plus_one(&self) -> Gf2Polynomial {
        let mut out = self.clone();
        let zero = vec![0; self.k];
        if !out.support.insert(zero.clone()) {
            out.support.remove(&zero);
        }
        out
    }

    /// Truncate into a series box; monomials outside the box are dropped
    /// (they cannot influence coefficients inside it).
    pub fn to_series(&self, bounds: &Exponents) -> TruncatedSeries {
        debug_assert_eq!(bounds.len(), self.k);
        let mut s = TruncatedSeries::zero(bounds.clone());
        for m in &self.support {
            let e = Exponents(m.clone());
            if e.le(bounds) {
                s.set(&e, true);
            }
        }
        s
    }

    /// Truncated inverse within `bounds`; requires an invertible polynomial.
    pub fn inverse(&self, bounds: &Exponents) -> Result<TruncatedSeries> {
        if !self.is_invertible() {
            return Err(Error::NotInvertible);
        }
        self.to_series(bounds).inverse()
    }

    /// Re-embed into a different ambient variable count; axis `i` maps to
    /// `axis_map[i]`.
    pub fn embed(&self, k: usize, axis_map: &[usize]) -> Gf2Polynomial {
        debug_assert_eq!(axis_map.len(), self.k);
        let mut support = BTreeSet::new();
        for m in &self.support {
            let mut lifted = vec![0usize; k];
            for (i, axis) in axis_map.iter().enumerate() {
                lifted[*axis] = m[i];
            }
            support.insert(lifted);
        }
        let vars = self
            .vars
            .iter()
            .map(|v| axis_map[*v])
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        Gf2Polynomial {
            k,
            vars,
            support,
        }
    }

    /// Render with the given letter names: `1 + a^1 c^2` style, monomials in
    /// lexicographic exponent order.
    pub fn to_text(&self, letters: &[char]) -> String {
        assert_eq!(letters.len(), self.k);
        if self.support.is_empty() {
            return "0".to_string();
        }
        let terms: Vec<String> = self
            .support
            .iter()
            .map(|m| {
                if m.iter().all(|e| *e == 0) {
                    "1".to_string()
                } else {
                    m.iter()
                        .enumerate()
                        .filter(|(_, e)| **e > 0)
                        .map(|(i, e)| format!("{}^{}", letters[i], e))
                        .collect::<Vec<_>>()
                        .join(" ")
                }
            })
            .collect();
        terms.join(" + ")
    }

    /// Parse a polynomial expression over `+`, `*`, `^` and the given
    /// letters, e.g. `1 + a*c` or `a^2 b`. `allowed` restricts the variable
    /// subset when given.
    pub fn parse(
        text: &str,
        k: usize,
        letters: &[char],
        allowed: Option<&[usize]>,
    ) -> Result<Gf2Polynomial> {
        assert_eq!(letters.len(), k);
        let text = text.trim();
        if text.is_empty() {
            return Err(Error::PolynomialSyntax {
                msg: "empty expression".into(),
            });
        }
        let mut monomials: Vec<Vec<usize>> = Vec::new();
        for term in text.split('+') {
            let term = term.trim();
            if term.is_empty() {
                return Err(Error::PolynomialSyntax {
                    msg: "empty term".into(),
                });
            }
            if term == "0" {
                continue;
            }
            let mut exps = vec![0usize; k];
            for factor in term
                .split(|c: char| c == '*' || c.is_whitespace())
                .filter(|f| !f.is_empty())
            {
                if factor == "1" {
                    continue;
                }
                let (letter, exp) = match factor.split_once('^') {
                    Some((l, e)) => {
                        let e: usize = e.parse().map_err(|_| Error::PolynomialSyntax {
                            msg: format!("bad exponent in `{factor}`"),
                        })?;
                        (l, e)
                    }
                    None => (factor, 1),
                };
                let mut chars = letter.chars();
                let c = match (chars.next(), chars.next()) {
                    (Some(c), None) if c.is_ascii_lowercase() => c,
                    _ => {
                        return Err(Error::PolynomialSyntax {
                            msg: format!("bad factor `{factor}`"),
                        })
                    }
                };
                let axis = letters
                    .iter()
                    .position(|l| *l == c)
                    .ok_or(Error::LetterOutsideAlphabet { letter: c })?;
                exps[axis] += exp;
            }
            monomials.push(exps);
        }
        let inferred: Vec<usize> = match allowed {
            Some(a) => a.to_vec(),
            None => {
                let mut used = BTreeSet::new();
                for m in &monomials {
                    for (axis, e) in m.iter().enumerate() {
                        if *e > 0 {
                            used.insert(axis);
                        }
                    }
                }
                used.into_iter().collect()
            }
        };
        Gf2Polynomial::from_monomials(k, &inferred, &monomials)
    }
}

fn union_vars(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut set: BTreeSet<usize> = a.iter().copied().collect();
    set.extend(b.iter().copied());
    set.into_iter().collect()
}

/// Check a claimed representation `candidate = numerator / prod(denominators)`
/// by multiplying out: true iff `candidate * prod(denominators)` agrees with
/// `numerator` on the common box.
pub fn quotient_check(
    numerator: &TruncatedSeries,
    denominators: &[Gf2Polynomial],
    candidate: &TruncatedSeries,
) -> Result<bool> {
    let mut prod = candidate.clone();
    for d in denominators {
        if d.k() != prod.k() {
            return Err(Error::VariableCountMismatch {
                left: prod.k(),
                right: d.k(),
            });
        }
        prod = prod.mul(&d.to_series(prod.bounds()))?;
    }
    prod.agrees_with(numerator)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(k: usize, monomials: &[&[usize]]) -> Gf2Polynomial {
        let vars: Vec<usize> = (0..k).collect();
        let ms: Vec<Vec<usize>> = monomials.iter().map(|m| m.to_vec()).collect();
        Gf2Polynomial::from_monomials(k, &vars, &ms).unwrap()
    }

    #[test]
    fn invertibility_is_constant_term_one() {
        assert!(poly(2, &[&[0, 0], &[1, 1]]).is_invertible()); // 1 + ab
        assert!(!poly(2, &[&[1, 0], &[0, 1]]).is_invertible()); // a + c
        assert!(!Gf2Polynomial::zero(2).is_invertible()); // 0
    }

    #[test]
    fn invertible_polynomials_closed_under_product() {
        let p = poly(2, &[&[0, 0], &[1, 0]]);
        let q = poly(2, &[&[0, 0], &[1, 1], &[0, 2]]);
        let r = poly(2, &[&[1, 0]]);
        assert!(p.mul(&q).unwrap().is_invertible());
        assert!(!p.mul(&r).unwrap().is_invertible());
        assert!(!r.mul(&r).unwrap().is_invertible());
    }

    #[test]
    fn telescoping_product() {
        // (a + c) * (a^k + a^{k-1} c + ... + c^k) = a^{k+1} + c^{k+1}
        for k in 0..=8usize {
            let a_plus_c = poly(2, &[&[1, 0], &[0, 1]]);
            let block_monomials: Vec<Vec<usize>> =
                (0..=k).map(|i| vec![i, k - i]).collect();
            let block =
                Gf2Polynomial::from_monomials(2, &[0, 1], &block_monomials).unwrap();
            let got = a_plus_c.mul(&block).unwrap();
            let expected = poly(2, &[&[k + 1, 0], &[0, k + 1]]);
            assert_eq!(got, expected, "k = {k}");
        }
    }

    #[test]
    fn variable_subset_is_enforced() {
        let err = Gf2Polynomial::from_monomials(3, &[0, 2], &[vec![0, 1, 0]]);
        assert!(matches!(err, Err(Error::VariableOutsideSubset { axis: 1 })));
    }

    #[test]
    fn inverse_round_trip() {
        let p = poly(2, &[&[0, 0], &[1, 1], &[2, 0]]);
        let bounds = Exponents(vec![6, 6]);
        let inv = p.inverse(&bounds).unwrap();
        let prod = inv.mul(&p.to_series(&bounds)).unwrap();
        assert_eq!(prod, TruncatedSeries::one(bounds));
    }

    #[test]
    fn quotient_check_examples() {
        let bounds = Exponents(vec![4, 4]);
        let one_plus_ab = poly(2, &[&[0, 0], &[1, 1]]);
        // candidate sum (ab)^n, denominator [1+ab], numerator 1 -> true
        let candidate = one_plus_ab.inverse(&bounds).unwrap();
        let num_one = TruncatedSeries::one(bounds.clone());
        assert!(quotient_check(&num_one, &[one_plus_ab.clone()], &candidate).unwrap());
        // numerator 1 + a -> false
        let mut num_bad = TruncatedSeries::one(bounds.clone());
        num_bad.set(&Exponents(vec![1, 0]), true);
        assert!(!quotient_check(&num_bad, &[one_plus_ab], &candidate).unwrap());
        // empty denominator list: candidate must equal numerator
        assert!(quotient_check(&num_one, &[], &num_one).unwrap());
    }

    #[test]
    fn parse_and_render() {
        let letters = ['a', 'b', 'c'];
        let p = Gf2Polynomial::parse("1 + a*c + a^2 b", 3, &letters, None).unwrap();
        assert_eq!(p.monomial_count(), 3);
        assert!(p.is_invertible());
        assert_eq!(p.to_text(&letters), "1 + a^1 c^1 + a^2 b^1");
        let q = Gf2Polynomial::parse(&p.to_text(&letters), 3, &letters, None).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn parse_cancels_duplicate_terms() {
        let letters = ['a', 'c'];
        let p = Gf2Polynomial::parse("a + a + 1", 2, &letters, None).unwrap();
        assert!(p.is_one());
    }

    #[test]
    fn parse_rejects_unknown_letter() {
        let letters = ['a', 'c'];
        assert!(Gf2Polynomial::parse("1 + z", 2, &letters, None).is_err());
    }

    #[test]
    fn embed_remaps_axes() {
        let p = poly(2, &[&[1, 0], &[0, 2]]); // a + c^2 over (a, c)
        let lifted = p.embed(3, &[0, 2]);
        assert_eq!(lifted.k(), 3);
        assert_eq!(lifted.vars(), &[0, 2]);
        assert!(lifted.support().any(|m| m == &vec![0, 0, 2]));
    }
}
