//! Linear systems over truncated series, extracted from typed grammars.
//!
//! One equation per nonterminal of type `1 -> K` (the full state span). In
//! matrix form `A x = f` with `A = I + M`: `M` collects the coefficients of
//! the `1 -> K` indeterminates, and every remaining rule contributes to a
//! tagged right-hand-side summand. Over the three-state automaton the matrix
//! entries are polynomials in the first and last letters; over the bounded
//! automaton they are truncated series.

use crate::exponents::Exponents;
use crate::grammar::Symbol;
use crate::parity::BoundedTables;
use crate::poly::Gf2Polynomial;
use crate::series::TruncatedSeries;
use crate::typed::{TypedDfa, TypedGrammar};
use crate::{Error, Result};
use std::collections::BTreeMap;
use std::fmt;

/// Which right-hand-side summand a non-matrix rule feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum RhsTag {
    /// General case: a simplifying rule splitting at middle state `m`.
    Split(usize),
    /// Linear case: the summand generating a subset of `a_1^* ... a_{k-1}^*`.
    Left,
    /// Linear case: the summand generating a subset of `a_2^* ... a_k^*`
    /// (completely-final rules are absorbed here).
    Right,
    /// General case: completely-final rules (no middle split).
    Final,
}

impl fmt::Display for RhsTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RhsTag::Split(m) => write!(f, "f_{m}"),
            RhsTag::Left => write!(f, "f_1_to_k-1"),
            RhsTag::Right => write!(f, "f_2_to_k"),
            RhsTag::Final => write!(f, "f_final"),
        }
    }
}

/// One tagged right-hand-side column.
#[derive(Debug, Clone)]
pub struct RhsColumn {
    pub tag: RhsTag,
    pub values: Vec<TruncatedSeries>,
    /// Rules that produced the summand.
    pub provenance: Vec<String>,
}

/// Symbolic form of a linear-case rhs contribution:
/// `monomial * series(child)` added to row `row`.
#[derive(Debug, Clone)]
pub struct SystemTerm {
    pub row: usize,
    pub tag: RhsTag,
    pub monomial: Gf2Polynomial,
    /// Typed nonterminal index in the source grammar; `None` for a
    /// completely-final rule (series 1).
    pub child: Option<usize>,
    pub rule: String,
}

#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub k: usize,
    pub bounds: Exponents,
    pub dfa: TypedDfa,
    /// Typed nonterminal indices of the unknowns, in declaration order.
    pub unknowns: Vec<usize>,
    pub unknown_names: Vec<String>,
    /// `A = I + M`, row-major.
    pub matrix: Vec<Vec<TruncatedSeries>>,
    /// Exact polynomial mirror of the matrix (three-state case only).
    pub matrix_poly: Option<Vec<Vec<Gf2Polynomial>>>,
    pub rhs: Vec<RhsColumn>,
    /// Symbolic rhs terms (three-state case only).
    pub terms: Vec<SystemTerm>,
}

impl LinearSystem {
    pub fn dimension(&self) -> usize {
        self.unknowns.len()
    }

    /// Total rhs: the XOR of all tagged columns.
    pub fn rhs_total(&self) -> Result<Vec<TruncatedSeries>> {
        let n = self.dimension();
        let mut out = vec![TruncatedSeries::zero(self.bounds.clone()); n];
        for col in &self.rhs {
            for (o, v) in out.iter_mut().zip(&col.values) {
                *o = o.add(v)?;
            }
        }
        Ok(out)
    }

    /// `A * x` within the truncation box.
    pub fn apply(&self, x: &[TruncatedSeries]) -> Result<Vec<TruncatedSeries>> {
        let n = self.dimension();
        let mut out = vec![TruncatedSeries::zero(self.bounds.clone()); n];
        for (r, row) in self.matrix.iter().enumerate() {
            for (c, entry) in row.iter().enumerate() {
                out[r] = out[r].add(&entry.mul(&x[c])?)?;
            }
        }
        Ok(out)
    }

    /// Determinant of the polynomial matrix (three-state case).
    pub fn det(&self) -> Option<Result<Gf2Polynomial>> {
        self.matrix_poly.as_ref().map(|m| det_poly(m, self.k))
    }

    /// Shape report of the linear case: invertible diagonal, non-invertible
    /// off-diagonal, invertible determinant.
    pub fn linear_shape(&self) -> Option<LinearShapeReport> {
        let m = self.matrix_poly.as_ref()?;
        let n = m.len();
        let diagonal_invertible = (0..n).all(|i| m[i][i].is_invertible());
        let off_diagonal_non_invertible = (0..n)
            .all(|i| (0..n).all(|j| i == j || !m[i][j].is_invertible()));
        let det = match det_poly(m, self.k) {
            Ok(d) => d,
            Err(_) => return None,
        };
        let det_invertible = det.is_invertible();
        Some(LinearShapeReport {
            diagonal_invertible,
            off_diagonal_non_invertible,
            det,
            det_invertible,
        })
    }
}

#[derive(Debug, Clone)]
pub struct LinearShapeReport {
    pub diagonal_invertible: bool,
    pub off_diagonal_non_invertible: bool,
    pub det: Gf2Polynomial,
    pub det_invertible: bool,
}

/// Extract the linear system of a typed grammar: one equation per
/// `1 -> K` nonterminal, rhs summands tagged by their simplifying split.
pub fn extract_system(tg: &TypedGrammar, bounds: &Exponents) -> Result<LinearSystem> {
    let k = tg.k;
    if k < 2 {
        return Err(Error::KTooSmall { got: k });
    }
    if bounds.len() != k {
        return Err(Error::BoundsMismatch {
            expected: k,
            got: bounds.len(),
        });
    }
    let initial = tg.initial_state();
    let final_state = tg.final_state();
    let tables = BoundedTables::compute(&tg.grammar, bounds)?;
    let series_of = |nt: usize| -> TruncatedSeries {
        tables
            .series_of(tg.grammar.nonterminal_name(nt))
            .expect("typed nonterminal present in its own grammar")
    };

    let unknowns: Vec<usize> = (0..tg.grammar.nonterminals().len())
        .filter(|nt| tg.state_pair(*nt) == Some((initial, final_state)))
        .collect();
    let index_of: BTreeMap<usize, usize> = unknowns
        .iter()
        .enumerate()
        .map(|(i, nt)| (*nt, i))
        .collect();
    let n = unknowns.len();

    let mut matrix = vec![vec![TruncatedSeries::zero(bounds.clone()); n]; n];
    let mut matrix_poly = if tg.dfa == TypedDfa::ThreeState {
        Some(vec![vec![Gf2Polynomial::zero(k); n]; n])
    } else {
        None
    };
    for i in 0..n {
        matrix[i][i] = TruncatedSeries::one(bounds.clone());
        if let Some(mp) = matrix_poly.as_mut() {
            mp[i][i] = Gf2Polynomial::one(k);
        }
    }

    let mut rhs_map: BTreeMap<RhsTag, (Vec<TruncatedSeries>, Vec<String>)> = BTreeMap::new();
    let mut terms: Vec<SystemTerm> = Vec::new();

    let mut add_rhs = |tag: RhsTag, row: usize, value: TruncatedSeries, rule: String| {
        let entry = rhs_map.entry(tag).or_insert_with(|| {
            (vec![TruncatedSeries::zero(bounds.clone()); n], Vec::new())
        });
        entry.0[row] = entry.0[row].add(&value).expect("same bounds");
        entry.1.push(rule);
    };

    // state reached by a body symbol started in state `from`
    let end_state = |s: &Symbol, from: usize| -> usize {
        match s {
            Symbol::Terminal(t) => tg.delta(from, *t).expect("typed rule is consistent"),
            Symbol::Nonterminal(b) => {
                let (i, j) = tg.state_pair(*b).expect("typed nonterminal");
                debug_assert_eq!(i, from);
                j
            }
        }
    };
    // truncated series of a body symbol with known span
    let symbol_series = |s: &Symbol| -> TruncatedSeries {
        match s {
            Symbol::Terminal(t) => {
                TruncatedSeries::monomial(bounds.clone(), &Exponents::unit(k, *t))
            }
            Symbol::Nonterminal(b) => series_of(*b),
        }
    };
    let symbol_monomial = |s: &Symbol| -> Option<Gf2Polynomial> {
        match s {
            Symbol::Terminal(t) => {
                Some(Gf2Polynomial::monomial(k, Exponents::unit(k, *t).as_slice()))
            }
            Symbol::Nonterminal(_) => None,
        }
    };

    for &head_nt in &unknowns {
        let row = index_of[&head_nt];
        for rule in tg.grammar.rules_of(head_nt) {
            let rule_text = tg.grammar.render_rule(rule);
            match rule.body.as_slice() {
                [Symbol::Terminal(t)] => {
                    // completely final
                    let value =
                        TruncatedSeries::monomial(bounds.clone(), &Exponents::unit(k, *t));
                    let tag = match tg.dfa {
                        TypedDfa::ThreeState => RhsTag::Right,
                        TypedDfa::Bounded => RhsTag::Final,
                    };
                    if tg.dfa == TypedDfa::ThreeState {
                        terms.push(SystemTerm {
                            row,
                            tag,
                            monomial: Gf2Polynomial::monomial(
                                k,
                                Exponents::unit(k, *t).as_slice(),
                            ),
                            child: None,
                            rule: rule_text.clone(),
                        });
                    }
                    add_rhs(tag, row, value, rule_text);
                }
                [Symbol::Nonterminal(b)] => {
                    // unit rule: coefficient 1 on another unknown
                    let col = index_of[b];
                    matrix[row][col] =
                        matrix[row][col].add(&TruncatedSeries::one(bounds.clone()))?;
                    if let Some(mp) = matrix_poly.as_mut() {
                        mp[row][col] = mp[row][col].add(&Gf2Polynomial::one(k))?;
                    }
                }
                [x, y] => {
                    let m = end_state(x, initial);
                    let x_unknown = matches!(x, Symbol::Nonterminal(b) if index_of.contains_key(b));
                    let y_unknown = matches!(y, Symbol::Nonterminal(b) if index_of.contains_key(b));
                    debug_assert!(
                        !(x_unknown && y_unknown),
                        "two full-span unknowns need k = 1"
                    );
                    if y_unknown && m == initial {
                        // coeff(X) * Y with X spanning (1 -> 1)
                        let Symbol::Nonterminal(b) = y else { unreachable!() };
                        let col = index_of[b];
                        let coeff = symbol_series(x);
                        matrix[row][col] = matrix[row][col].add(&coeff)?;
                        if let Some(mp) = matrix_poly.as_mut() {
                            let mono = symbol_monomial(x).expect(
                                "three-state matrix coefficients are single letters",
                            );
                            mp[row][col] = mp[row][col].add(&mono)?;
                        }
                    } else if x_unknown && m == final_state {
                        // X * coeff(Y) with Y spanning (K -> K)
                        let Symbol::Nonterminal(b) = x else { unreachable!() };
                        let col = index_of[b];
                        let coeff = symbol_series(y);
                        matrix[row][col] = matrix[row][col].add(&coeff)?;
                        if let Some(mp) = matrix_poly.as_mut() {
                            let mono = symbol_monomial(y).expect(
                                "three-state matrix coefficients are single letters",
                            );
                            mp[row][col] = mp[row][col].add(&mono)?;
                        }
                    } else {
                        // no unknown factor: a simplifying or final rule
                        debug_assert!(!x_unknown && !y_unknown);
                        let value = match (tg.dfa, x) {
                            (TypedDfa::ThreeState, Symbol::Terminal(t)) => {
                                // prepending a middle letter keeps only the
                                // child words whose first block is >= t
                                symbol_series(x)
                                    .mul(&symbol_series(y).supported_from_axis(*t))?
                            }
                            _ => symbol_series(x).mul(&symbol_series(y))?,
                        };
                        let tag = match tg.dfa {
                            TypedDfa::Bounded => {
                                if m > initial && m < final_state {
                                    RhsTag::Split(m)
                                } else {
                                    RhsTag::Final
                                }
                            }
                            TypedDfa::ThreeState => {
                                // cB puts the child in the right block, Bc in
                                // the left one
                                if matches!(x, Symbol::Terminal(_)) {
                                    RhsTag::Right
                                } else {
                                    RhsTag::Left
                                }
                            }
                        };
                        if tg.dfa == TypedDfa::ThreeState {
                            let (mono, child) = match (x, y) {
                                (Symbol::Terminal(t), Symbol::Nonterminal(b)) => (
                                    Gf2Polynomial::monomial(
                                        k,
                                        Exponents::unit(k, *t).as_slice(),
                                    ),
                                    Some(*b),
                                ),
                                (Symbol::Nonterminal(b), Symbol::Terminal(t)) => (
                                    Gf2Polynomial::monomial(
                                        k,
                                        Exponents::unit(k, *t).as_slice(),
                                    ),
                                    Some(*b),
                                ),
                                (Symbol::Terminal(t1), Symbol::Terminal(t2)) => {
                                    let mut e = vec![0usize; k];
                                    e[*t1] += 1;
                                    e[*t2] += 1;
                                    (Gf2Polynomial::monomial(k, &e), None)
                                }
                                _ => unreachable!("normal form has one nonterminal"),
                            };
                            terms.push(SystemTerm {
                                row,
                                tag,
                                monomial: mono,
                                child,
                                rule: rule_text.clone(),
                            });
                        }
                        add_rhs(tag, row, value, rule_text);
                    }
                }
                _ => unreachable!("typed grammars are binary"),
            }
        }
    }

    let unknown_names = unknowns
        .iter()
        .map(|nt| tg.grammar.nonterminal_name(*nt).to_string())
        .collect();
    let rhs = rhs_map
        .into_iter()
        .map(|(tag, (values, provenance))| RhsColumn {
            tag,
            values,
            provenance,
        })
        .collect();

    Ok(LinearSystem {
        k,
        bounds: bounds.clone(),
        dfa: tg.dfa,
        unknowns,
        unknown_names,
        matrix,
        matrix_poly,
        rhs,
        terms,
    })
}

/// Per-tag solutions of `A x = f_tag` within the truncation box, via
/// Gauss-Jordan elimination. Unknowns are eliminated in declaration order;
/// each pivot must be invertible at truncation (constant term 1).
#[derive(Debug, Clone)]
pub struct Solution {
    pub per_tag: Vec<(RhsTag, Vec<TruncatedSeries>)>,
    pub total: Vec<TruncatedSeries>,
    pub elimination_order: Vec<String>,
}

pub fn solve_truncated(sys: &LinearSystem) -> Result<Solution> {
    let n = sys.dimension();
    let mut a = sys.matrix.clone();
    let mut cols: Vec<(RhsTag, Vec<TruncatedSeries>)> = sys
        .rhs
        .iter()
        .map(|c| (c.tag, c.values.clone()))
        .collect();
    let mut order = Vec::with_capacity(n);

    for col in 0..n {
        let pivot_row = (col..n)
            .find(|r| a[*r][col].constant_term())
            .ok_or_else(|| Error::NoInvertiblePivot {
                unknown: sys.unknown_names[col].clone(),
            })?;
        a.swap(col, pivot_row);
        for (_, v) in cols.iter_mut() {
            v.swap(col, pivot_row);
        }
        order.push(sys.unknown_names[col].clone());

        let inv = a[col][col].inverse()?;
        for c in 0..n {
            a[col][c] = a[col][c].mul(&inv)?;
        }
        for (_, v) in cols.iter_mut() {
            v[col] = v[col].mul(&inv)?;
        }
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].clone();
            for c in 0..n {
                let t = factor.mul(&a[col][c])?;
                a[r][c] = a[r][c].add(&t)?;
            }
            for (_, v) in cols.iter_mut() {
                let t = factor.mul(&v[col])?;
                v[r] = v[r].add(&t)?;
            }
        }
    }

    let mut total = vec![TruncatedSeries::zero(sys.bounds.clone()); n];
    for (_, v) in &cols {
        for (t, x) in total.iter_mut().zip(v) {
            *t = t.add(x)?;
        }
    }
    Ok(Solution {
        per_tag: cols,
        total,
        elimination_order: order,
    })
}

/// Determinant of a polynomial matrix over GF(2). In characteristic two the
/// determinant equals the permanent, so a subset DP over columns needs no
/// signs.
pub fn det_poly(m: &[Vec<Gf2Polynomial>], k: usize) -> Result<Gf2Polynomial> {
    let n = m.len();
    if n == 0 {
        return Ok(Gf2Polynomial::one(k));
    }
    debug_assert!(n <= 24, "determinant DP is exponential in the dimension");
    let mut layer: BTreeMap<u32, Gf2Polynomial> = BTreeMap::new();
    layer.insert(0, Gf2Polynomial::one(k));
    for row in m {
        let mut next: BTreeMap<u32, Gf2Polynomial> = BTreeMap::new();
        for (used, acc) in &layer {
            for (c, entry) in row.iter().enumerate() {
                if used >> c & 1 == 1 || entry.is_zero() {
                    continue;
                }
                let prod = acc.mul(entry)?;
                let key = used | (1 << c);
                match next.get_mut(&key) {
                    Some(p) => *p = p.add(&prod)?,
                    None => {
                        next.insert(key, prod);
                    }
                }
            }
        }
        layer = next;
    }
    let full = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    Ok(layer.remove(&full).unwrap_or_else(|| Gf2Polynomial::zero(k)))
}

/// Row `x` of the adjugate: `adj[x][j] = det(minor removing row j, column x)`
/// (no cofactor signs in characteristic two). `x^T = adj_row . f / det` then
/// recovers one solution component.
pub fn adjugate_row(
    m: &[Vec<Gf2Polynomial>],
    x: usize,
    k: usize,
) -> Result<Vec<Gf2Polynomial>> {
    let n = m.len();
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let minor: Vec<Vec<Gf2Polynomial>> = (0..n)
            .filter(|r| *r != j)
            .map(|r| {
                (0..n)
                    .filter(|c| *c != x)
                    .map(|c| m[r][c].clone())
                    .collect()
            })
            .collect();
        out.push(det_poly(&minor, k)?);
    }
    Ok(out)
}
