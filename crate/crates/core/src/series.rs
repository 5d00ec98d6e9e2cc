//! Truncated multivariate formal power series over GF(2).
//!
//! A series is stored as a dense bit table over the truncation box: one bit
//! per exponent vector `e <= bounds`. The last variable's axis is packed into
//! machine words so convolution can XOR whole rows at once. All arithmetic is
//! exact for coefficients inside the box; coefficients outside it are
//! undefined and never consulted.

use crate::exponents::Exponents;
use crate::{Error, Result};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TruncatedSeries {
    bounds: Exponents,
    /// Bits of the last axis, one row per prefix exponent vector.
    words: Vec<u64>,
    row_words: usize,
}

impl TruncatedSeries {
    pub fn zero(bounds: Exponents) -> Self {
        let rows = prefix_rows(&bounds);
        let row_words = last_len(&bounds).div_ceil(64);
        TruncatedSeries {
            bounds,
            words: vec![0; rows * row_words],
            row_words,
        }
    }

    pub fn one(bounds: Exponents) -> Self {
        let mut s = Self::zero(bounds);
        s.set(&Exponents::zeros(s.k()), true);
        s
    }

    /// The single monomial `x^e`, or zero if `e` lies outside the box.
    pub fn monomial(bounds: Exponents, e: &Exponents) -> Self {
        let mut s = Self::zero(bounds);
        if e.le(&s.bounds) {
            s.set(e, true);
        }
        s
    }

    pub fn k(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &Exponents {
        &self.bounds
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    fn row_index(&self, e: &[usize]) -> usize {
        let k = self.k();
        let mut row = 0;
        for i in 0..k.saturating_sub(1) {
            row = row * (self.bounds[i] + 1) + e[i];
        }
        row
    }

    pub fn get(&self, e: &Exponents) -> bool {
        debug_assert_eq!(e.len(), self.k());
        debug_assert!(e.le(&self.bounds));
        let row = self.row_index(e.as_slice());
        let bit = if self.k() == 0 { 0 } else { e[self.k() - 1] };
        self.words[row * self.row_words + bit / 64] >> (bit % 64) & 1 == 1
    }

    pub fn set(&mut self, e: &Exponents, value: bool) {
        debug_assert!(e.le(&self.bounds));
        let row = self.row_index(e.as_slice());
        let bit = if self.k() == 0 { 0 } else { e[self.k() - 1] };
        let w = &mut self.words[row * self.row_words + bit / 64];
        if value {
            *w |= 1 << (bit % 64);
        } else {
            *w &= !(1 << (bit % 64));
        }
    }

    pub fn toggle(&mut self, e: &Exponents) {
        let row = self.row_index(e.as_slice());
        let bit = if self.k() == 0 { 0 } else { e[self.k() - 1] };
        self.words[row * self.row_words + bit / 64] ^= 1 << (bit % 64);
    }

    pub fn constant_term(&self) -> bool {
        self.get(&Exponents::zeros(self.k()))
    }

    /// Restriction to the componentwise minimum of the two boxes.
    pub fn restrict(&self, bounds: &Exponents) -> Result<TruncatedSeries> {
        if bounds.len() != self.k() {
            return Err(Error::VariableCountMismatch {
                left: self.k(),
                right: bounds.len(),
            });
        }
        let target = self.bounds.component_min(bounds);
        if target == self.bounds {
            return Ok(self.clone());
        }
        let mut out = TruncatedSeries::zero(target);
        for e in out.bounds.clone().iter_box() {
            if self.get(&e) {
                out.set(&e, true);
            }
        }
        Ok(out)
    }

    /// Coefficientwise XOR; the result lives on the common (minimum) box.
    pub fn add(&self, other: &TruncatedSeries) -> Result<TruncatedSeries> {
        if self.k() != other.k() {
            return Err(Error::VariableCountMismatch {
                left: self.k(),
                right: other.k(),
            });
        }
        let target = self.bounds.component_min(&other.bounds);
        let mut out = self.restrict(&target)?;
        let rhs = other.restrict(&target)?;
        for (w, v) in out.words.iter_mut().zip(&rhs.words) {
            *w ^= v;
        }
        Ok(out)
    }

    /// Convolution over GF(2), exact within the common (minimum) box.
    pub fn mul(&self, other: &TruncatedSeries) -> Result<TruncatedSeries> {
        if self.k() != other.k() {
            return Err(Error::VariableCountMismatch {
                left: self.k(),
                right: other.k(),
            });
        }
        let target = self.bounds.component_min(&other.bounds);
        let x = self.restrict(&target)?;
        let y = other.restrict(&target)?;
        let mut out = TruncatedSeries::zero(target.clone());
        let k = target.len();
        let llen = last_len(&target);

        if k == 0 {
            if x.constant_term() && y.constant_term() {
                out.set(&Exponents::zeros(0), true);
            }
            return Ok(out);
        }

        // For every set monomial f of x, XOR a shifted copy of y into the
        // accumulator: out[f + g] ^= y[g] for all g with f + g <= bounds.
        for f in SetBitIter::new(&x) {
            let f_last = f[k - 1];
            // walk all prefix rows g of y with prefix(f) + g <= bounds
            let mut g = vec![0usize; k.saturating_sub(1)];
            loop {
                let mut dst_prefix = Vec::with_capacity(k.saturating_sub(1));
                for i in 0..k - 1 {
                    dst_prefix.push(f[i] + g[i]);
                }
                let src_row = y.row_index(&g) * y.row_words;
                let dst_row = out.row_index(&dst_prefix) * out.row_words;
                xor_shifted(
                    &mut out.words[dst_row..dst_row + out.row_words],
                    &y.words[src_row..src_row + y.row_words],
                    f_last,
                    llen,
                );
                // odometer over g constrained by g[i] <= bounds[i] - f[i]
                let mut i = k - 1;
                loop {
                    if i == 0 {
                        break;
                    }
                    i -= 1;
                    if g[i] < target[i] - f[i] {
                        g[i] += 1;
                        break;
                    }
                    g[i] = 0;
                    if i == 0 {
                        break;
                    }
                }
                if k == 1 || g.iter().all(|v| *v == 0) {
                    break;
                }
            }
        }
        Ok(out)
    }

    /// Multiplicative inverse within the box. Requires constant term 1;
    /// iterates `s <- 1 + (t + 1) s`, which reaches the fixed point after at
    /// most `1 + sum(bounds)` rounds because `t + 1` has no constant term.
    pub fn inverse(&self) -> Result<TruncatedSeries> {
        if !self.constant_term() {
            return Err(Error::NotInvertible);
        }
        let one = TruncatedSeries::one(self.bounds.clone());
        let mut t_plus_one = self.clone();
        t_plus_one.toggle(&Exponents::zeros(self.k()));
        let mut s = one.clone();
        for _ in 0..=self.bounds.total() + 1 {
            let next = one.add(&t_plus_one.mul(&s)?)?;
            if next == s {
                break;
            }
            s = next;
        }
        debug_assert!(self.mul(&s).unwrap() == one);
        Ok(s)
    }

    /// Whether the two series agree on the common (minimum) box.
    pub fn agrees_with(&self, other: &TruncatedSeries) -> Result<bool> {
        if self.k() != other.k() {
            return Err(Error::VariableCountMismatch {
                left: self.k(),
                right: other.k(),
            });
        }
        let target = self.bounds.component_min(&other.bounds);
        Ok(self.restrict(&target)? == other.restrict(&target)?)
    }

    /// Zero out every coefficient whose monomial uses a variable before
    /// `axis`: what survives are the words of `a_axis^* ... a_k^*`.
    pub fn supported_from_axis(&self, axis: usize) -> TruncatedSeries {
        let mut out = TruncatedSeries::zero(self.bounds.clone());
        for e in self.support() {
            if (0..axis).all(|i| e[i] == 0) {
                out.set(&e, true);
            }
        }
        out
    }

    /// Set monomials in lexicographic exponent order.
    pub fn support(&self) -> Vec<Exponents> {
        self.bounds
            .clone()
            .iter_box()
            .filter(|e| self.get(e))
            .collect()
    }

    /// Embed into a larger variable set: axis `i` of `self` becomes
    /// `axis_map[i]` of the result; new axes carry exponent zero.
    pub fn embed(&self, k: usize, axis_map: &[usize], bounds: &Exponents) -> TruncatedSeries {
        debug_assert_eq!(axis_map.len(), self.k());
        debug_assert_eq!(bounds.len(), k);
        let mut out = TruncatedSeries::zero(bounds.clone());
        for e in self.support() {
            let mut lifted = vec![0usize; k];
            for (i, axis) in axis_map.iter().enumerate() {
                lifted[*axis] = e[i];
            }
            let lifted = Exponents(lifted);
            if lifted.le(bounds) {
                out.set(&lifted, true);
            }
        }
        out
    }

    /// Render in the series text format (`vars:` / `bounds:` header, one
    /// monomial per line, `0` for the zero series).
    pub fn to_text(&self, vars: &[char]) -> String {
        assert_eq!(vars.len(), self.k(), "variable name count must match k");
        let mut out = String::new();
        let names: Vec<String> = vars.iter().map(|c| c.to_string()).collect();
        out.push_str(&format!("vars: {}\n", names.join(" ")));
        out.push_str(&format!("bounds: {}\n", self.bounds));
        let support = self.support();
        if support.is_empty() {
            out.push_str("0\n");
            return out;
        }
        for e in support {
            let parts: Vec<String> = vars
                .iter()
                .enumerate()
                .map(|(i, v)| format!("{}^{}", v, e[i]))
                .collect();
            out.push_str(&parts.join(" "));
            out.push('\n');
        }
        out
    }

    /// Parse the series text format. Returns the series and its variable names.
    pub fn from_text(text: &str) -> Result<(TruncatedSeries, Vec<char>)> {
        let mut vars: Option<Vec<char>> = None;
        let mut series: Option<TruncatedSeries> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let lineno = idx + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("vars:") {
                let mut vs = Vec::new();
                for tok in rest.split_whitespace() {
                    let mut chars = tok.chars();
                    match (chars.next(), chars.next()) {
                        (Some(c), None) if c.is_ascii_lowercase() => vs.push(c),
                        _ => {
                            return Err(Error::SeriesSyntax {
                                line: lineno,
                                msg: format!("bad variable name `{tok}`"),
                            })
                        }
                    }
                }
                vars = Some(vs);
                continue;
            }
            if let Some(rest) = line.strip_prefix("bounds:") {
                let Some(vars) = &vars else {
                    return Err(Error::SeriesSyntax {
                        line: lineno,
                        msg: "`bounds:` before `vars:`".into(),
                    });
                };
                let mut bs = Vec::new();
                for tok in rest.split_whitespace() {
                    bs.push(tok.parse::<usize>().map_err(|_| Error::SeriesSyntax {
                        line: lineno,
                        msg: format!("bad bound `{tok}`"),
                    })?);
                }
                if bs.len() != vars.len() {
                    return Err(Error::SeriesSyntax {
                        line: lineno,
                        msg: format!("{} bounds for {} vars", bs.len(), vars.len()),
                    });
                }
                series = Some(TruncatedSeries::zero(Exponents(bs)));
                continue;
            }
            let (Some(vars), Some(series)) = (&vars, &mut series) else {
                return Err(Error::SeriesSyntax {
                    line: lineno,
                    msg: "monomial line before header".into(),
                });
            };
            if line == "0" {
                continue;
            }
            let mut e = vec![0usize; vars.len()];
            let mut seen = vec![false; vars.len()];
            for tok in line.split_whitespace() {
                let (v, exp) = tok.split_once('^').ok_or_else(|| Error::SeriesSyntax {
                    line: lineno,
                    msg: format!("bad monomial factor `{tok}`"),
                })?;
                let c = v.chars().next().unwrap_or(' ');
                let axis = vars
                    .iter()
                    .position(|x| x.to_string() == v && *x == c)
                    .ok_or_else(|| Error::SeriesSyntax {
                        line: lineno,
                        msg: format!("unknown variable `{v}`"),
                    })?;
                if seen[axis] {
                    return Err(Error::SeriesSyntax {
                        line: lineno,
                        msg: format!("variable `{v}` repeated"),
                    });
                }
                seen[axis] = true;
                e[axis] = exp.parse().map_err(|_| Error::SeriesSyntax {
                    line: lineno,
                    msg: format!("bad exponent `{exp}`"),
                })?;
            }
            let e = Exponents(e);
            if !e.le(series.bounds()) {
                return Err(Error::SeriesSyntax {
                    line: lineno,
                    msg: "monomial outside the declared bounds".into(),
                });
            }
            if series.get(&e) {
                return Err(Error::SeriesSyntax {
                    line: lineno,
                    msg: "duplicate monomial".into(),
                });
            }
            series.set(&e, true);
        }
        match (vars, series) {
            (Some(v), Some(s)) => Ok((s, v)),
            _ => Err(Error::SeriesSyntax {
                line: 0,
                msg: "missing `vars:`/`bounds:` header".into(),
            }),
        }
    }
}

impl fmt::Display for TruncatedSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let support = self.support();
        if support.is_empty() {
            return write!(f, "0");
        }
        let terms: Vec<String> = support
            .iter()
            .map(|e| {
                if e.total() == 0 {
                    "1".to_string()
                } else {
                    let parts: Vec<String> = e
                        .as_slice()
                        .iter()
                        .enumerate()
                        .filter(|(_, exp)| **exp > 0)
                        .map(|(i, exp)| format!("x{}^{}", i + 1, exp))
                        .collect();
                    parts.join(" ")
                }
            })
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

fn prefix_rows(bounds: &Exponents) -> usize {
    let k = bounds.len();
    (0..k.saturating_sub(1)).map(|i| bounds[i] + 1).product()
}

fn last_len(bounds: &Exponents) -> usize {
    let k = bounds.len();
    if k == 0 {
        1
    } else {
        bounds[k - 1] + 1
    }
}

/// XOR `src << shift` into `dst`, dropping bits at `width` and above.
fn xor_shifted(dst: &mut [u64], src: &[u64], shift: usize, width: usize) {
    let word_shift = shift / 64;
    let bit_shift = shift % 64;
    for (i, s) in src.iter().enumerate() {
        if *s == 0 {
            continue;
        }
        let lo = i + word_shift;
        if lo < dst.len() {
            dst[lo] ^= s << bit_shift;
        }
        if bit_shift > 0 && lo + 1 < dst.len() {
            dst[lo + 1] ^= s >> (64 - bit_shift);
        }
    }
    // clear bits beyond the row width in the touched tail word
    let tail_bits = width % 64;
    if tail_bits > 0 {
        let last = width / 64;
        if last < dst.len() {
            dst[last] &= (1u64 << tail_bits) - 1;
        }
    }
}

struct SetBitIter<'a> {
    series: &'a TruncatedSeries,
    row: usize,
    rows: usize,
    prefix: Vec<usize>,
    word_in_row: usize,
    current: u64,
}

impl<'a> SetBitIter<'a> {
    fn new(series: &'a TruncatedSeries) -> Self {
        let rows = prefix_rows(&series.bounds);
        let current = if series.words.is_empty() {
            0
        } else {
            series.words[0]
        };
        SetBitIter {
            series,
            row: 0,
            rows,
            prefix: vec![0; series.k().saturating_sub(1)],
            word_in_row: 0,
            current,
        }
    }

    fn advance_word(&mut self) -> bool {
        loop {
            self.word_in_row += 1;
            if self.word_in_row == self.series.row_words {
                self.word_in_row = 0;
                self.row += 1;
                if self.row == self.rows {
                    return false;
                }
                // odometer on the prefix exponents, last fastest
                let k = self.series.k();
                for i in (0..k - 1).rev() {
                    if self.prefix[i] < self.series.bounds[i] {
                        self.prefix[i] += 1;
                        break;
                    }
                    self.prefix[i] = 0;
                }
            }
            self.current =
                self.series.words[self.row * self.series.row_words + self.word_in_row];
            if self.current != 0 {
                return true;
            }
        }
    }
}

impl Iterator for SetBitIter<'_> {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        while self.current == 0 {
            if !self.advance_word() {
                return None;
            }
        }
        let bit = self.current.trailing_zeros() as usize;
        self.current &= self.current - 1;
        let mut e = self.prefix.clone();
        if self.series.k() > 0 {
            e.push(self.word_in_row * 64 + bit);
        }
        Some(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series_from(bounds: &[usize], monomials: &[&[usize]]) -> TruncatedSeries {
        let mut s = TruncatedSeries::zero(Exponents(bounds.to_vec()));
        for m in monomials {
            s.set(&Exponents(m.to_vec()), true);
        }
        s
    }

    #[test]
    fn add_is_characteristic_two() {
        // (1 + ab) + (1 + ab) = 0
        let x = series_from(&[3, 3], &[&[0, 0], &[1, 1]]);
        assert!(x.add(&x).unwrap().is_zero());
    }

    #[test]
    fn add_cancels_common_terms() {
        // (1 + a) + (a + b) = 1 + b
        let x = series_from(&[3, 3], &[&[0, 0], &[1, 0]]);
        let y = series_from(&[3, 3], &[&[1, 0], &[0, 1]]);
        let expected = series_from(&[3, 3], &[&[0, 0], &[0, 1]]);
        assert_eq!(x.add(&y).unwrap(), expected);
    }

    #[test]
    fn add_rejects_variable_mismatch() {
        let x = series_from(&[3], &[&[1]]);
        let y = series_from(&[3, 3], &[&[1, 1]]);
        assert!(matches!(
            x.add(&y),
            Err(Error::VariableCountMismatch { .. })
        ));
    }

    #[test]
    fn mul_is_frobenius_on_squares() {
        // (1 + a)^2 = 1 + a^2
        let x = series_from(&[4], &[&[0], &[1]]);
        let expected = series_from(&[4], &[&[0], &[2]]);
        assert_eq!(x.mul(&x).unwrap(), expected);
    }

    #[test]
    fn mul_truncates_to_common_box() {
        let x = series_from(&[2, 5], &[&[1, 0]]);
        let y = series_from(&[5, 2], &[&[1, 1]]);
        let p = x.mul(&y).unwrap();
        assert_eq!(p.bounds(), &Exponents(vec![2, 2]));
        assert!(p.get(&Exponents(vec![2, 1])));
    }

    #[test]
    fn geometric_series_inverse() {
        // 1/(1+a) = 1 + a + a^2 + a^3 + a^4 + a^5 to degree 5
        let p = series_from(&[5], &[&[0], &[1]]);
        let inv = p.inverse().unwrap();
        let expected = series_from(&[5], &[&[0], &[1], &[2], &[3], &[4], &[5]]);
        assert_eq!(inv, expected);
    }

    #[test]
    fn inverse_of_one_plus_ab_is_diagonal() {
        // 1/(1+ab) = sum (ab)^n: the series of {a^n b^n}
        let p = series_from(&[4, 4], &[&[0, 0], &[1, 1]]);
        let inv = p.inverse().unwrap();
        let expected = series_from(&[4, 4], &[&[0, 0], &[1, 1], &[2, 2], &[3, 3], &[4, 4]]);
        assert_eq!(inv, expected);
    }

    #[test]
    fn inverse_requires_constant_term() {
        let p = series_from(&[4], &[&[1]]);
        assert!(matches!(p.inverse(), Err(Error::NotInvertible)));
    }

    #[test]
    fn zero_variable_series() {
        let one = TruncatedSeries::one(Exponents(vec![]));
        assert!(one.constant_term());
        assert_eq!(one.mul(&one).unwrap(), one);
    }

    #[test]
    fn embed_lifts_axes() {
        let s = series_from(&[3], &[&[2]]);
        let lifted = s.embed(3, &[1], &Exponents(vec![4, 4, 4]));
        assert!(lifted.get(&Exponents(vec![0, 2, 0])));
        assert_eq!(lifted.support().len(), 1);
    }

    #[test]
    fn text_round_trip() {
        let s = series_from(&[2, 3], &[&[0, 0], &[1, 2], &[2, 3]]);
        let text = s.to_text(&['a', 'b']);
        let (back, vars) = TruncatedSeries::from_text(&text).unwrap();
        assert_eq!(vars, vec!['a', 'b']);
        assert_eq!(back, s);
    }

    #[test]
    fn text_zero_series() {
        let s = TruncatedSeries::zero(Exponents(vec![1, 1]));
        let text = s.to_text(&['a', 'b']);
        assert!(text.contains("\n0\n"));
        let (back, _) = TruncatedSeries::from_text(&text).unwrap();
        assert!(back.is_zero());
    }

    #[test]
    fn support_enumeration_matches_get() {
        let s = series_from(&[3, 2, 1], &[&[3, 2, 1], &[0, 1, 0], &[1, 0, 1]]);
        let sup = s.support();
        assert_eq!(sup.len(), 3);
        for e in sup {
            assert!(s.get(&e));
        }
    }

    #[test]
    fn wide_rows_use_multiple_words() {
        // last axis wider than 64 bits
        let mut s = TruncatedSeries::zero(Exponents(vec![1, 100]));
        s.set(&Exponents(vec![1, 99]), true);
        s.set(&Exponents(vec![0, 64]), true);
        let shifted = s.mul(&TruncatedSeries::monomial(
            Exponents(vec![1, 100]),
            &Exponents(vec![0, 1]),
        ))
        .unwrap();
        assert!(shifted.get(&Exponents(vec![1, 100])));
        assert!(shifted.get(&Exponents(vec![0, 65])));
        assert_eq!(shifted.support().len(), 2);
    }
}
