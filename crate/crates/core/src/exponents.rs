//! Exponent vectors indexing monomials of a bounded language.

use std::fmt;
use std::ops::Index;

/// Per-variable exponents `(e_1, ..., e_k)` of a monomial
/// `a_1^{e_1} ... a_k^{e_k}`. Also used as an inclusive per-variable
/// truncation box.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Exponents(pub Vec<usize>);

impl Exponents {
    pub fn zeros(k: usize) -> Self {
        Exponents(vec![0; k])
    }

    /// The exponent vector of the single letter `a_{axis+1}`.
    pub fn unit(k: usize, axis: usize) -> Self {
        let mut v = vec![0; k];
        v[axis] = 1;
        Exponents(v)
    }

    pub fn uniform(k: usize, bound: usize) -> Self {
        Exponents(vec![bound; k])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    /// Componentwise `<=`.
    pub fn le(&self, other: &Exponents) -> bool {
        self.len() == other.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// Componentwise minimum.
    pub fn component_min(&self, other: &Exponents) -> Exponents {
        debug_assert_eq!(self.len(), other.len());
        Exponents(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| *a.min(b))
                .collect(),
        )
    }

    pub fn add(&self, other: &Exponents) -> Exponents {
        debug_assert_eq!(self.len(), other.len());
        Exponents(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// All vectors `e <= self`, in lexicographic order.
    pub fn iter_box(&self) -> BoxIter {
        BoxIter {
            bounds: self.0.clone(),
            next: Some(vec![0; self.0.len()]),
        }
    }

    /// All vectors `e <= self`, sorted by total degree (then lexicographic).
    /// This is the evaluation order of the parity table DP.
    pub fn graded_box(&self) -> Vec<Exponents> {
        let mut all: Vec<Exponents> = self.iter_box().collect();
        all.sort_by_key(|e| (e.total(), e.0.clone()));
        all
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

impl Index<usize> for Exponents {
    type Output = usize;
    fn index(&self, i: usize) -> &usize {
        &self.0[i]
    }
}

impl From<Vec<usize>> for Exponents {
    fn from(v: Vec<usize>) -> Self {
        Exponents(v)
    }
}

impl From<&[usize]> for Exponents {
    fn from(v: &[usize]) -> Self {
        Exponents(v.to_vec())
    }
}

impl fmt::Display for Exponents {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|e| e.to_string()).collect();
        write!(f, "{}", parts.join(" "))
    }
}

pub struct BoxIter {
    bounds: Vec<usize>,
    next: Option<Vec<usize>>,
}

impl Iterator for BoxIter {
    type Item = Exponents;

    fn next(&mut self) -> Option<Exponents> {
        let current = self.next.take()?;
        // odometer increment, last axis fastest
        let mut succ = current.clone();
        let mut i = self.bounds.len();
        loop {
            if i == 0 {
                self.next = None;
                break;
            }
            i -= 1;
            if succ[i] < self.bounds[i] {
                succ[i] += 1;
                self.next = Some(succ);
                break;
            }
            succ[i] = 0;
        }
        Some(Exponents(current))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_iteration_is_lexicographic_and_complete() {
        let b = Exponents(vec![1, 2]);
        let all: Vec<Vec<usize>> = b.iter_box().map(|e| e.0).collect();
        assert_eq!(
            all,
            vec![
                vec![0, 0],
                vec![0, 1],
                vec![0, 2],
                vec![1, 0],
                vec![1, 1],
                vec![1, 2]
            ]
        );
    }

    #[test]
    fn graded_order_sorts_by_total_degree() {
        let b = Exponents(vec![1, 1]);
        let graded: Vec<Vec<usize>> = b.graded_box().into_iter().map(|e| e.0).collect();
        assert_eq!(
            graded,
            vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]
        );
    }

    #[test]
    fn empty_box_has_one_point() {
        let b = Exponents(vec![]);
        let all: Vec<Exponents> = b.iter_box().collect();
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].len(), 0);
    }

    #[test]
    fn componentwise_ops() {
        let a = Exponents(vec![2, 0, 5]);
        let b = Exponents(vec![1, 3, 5]);
        assert!(!a.le(&b));
        assert!(a.component_min(&b).le(&a));
        assert_eq!(a.component_min(&b).0, vec![1, 0, 5]);
        assert_eq!(a.add(&b).0, vec![3, 3, 10]);
        assert_eq!(a.total(), 7);
    }
}
