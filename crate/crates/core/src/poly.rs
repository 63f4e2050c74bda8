//! Sparse multivariate polynomials over `Z_m`.
//!
//! A [`Polynomial`] stores its coefficients canonically in `{0, .., m-1}` keyed by
//! [`MultiIndex`]. Zero coefficients are never stored, so two polynomials are
//! equal exactly when they define the same element of `Z_m[X_1, .., X_d]`.
//!
//! The module also provides the multi-index combinatorics used throughout the
//! crate: the number `r` of exponent tuples with `1 <= |i| <= k`
//! ([`index_count`]), their total weight `K` ([`weight_sum`]) and an ordered
//! enumeration of them ([`iter_multiindices`]).

use std::collections::BTreeMap;
use std::fmt;

use num_integer::Integer;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("modulus must be at least 3, got {0}")]
    ModulusTooSmall(u64),
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("variable x{index} exceeds declared dimension {dims}")]
    VariableOutOfRange { index: usize, dims: usize },
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("moduli differ: {0} vs {1}")]
    ModulusMismatch(u64, u64),
    #[error("polynomial is constant; no term of positive degree")]
    Constant,
}

/// Exponent tuple `(i_1, .., i_d)` of a monomial `x_1^{i_1} .. x_d^{i_d}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        assert!(!exponents.is_empty(), "multi-index needs at least one coordinate");
        MultiIndex(exponents)
    }

    pub fn zero(dims: usize) -> Self {
        MultiIndex::new(vec![0; dims])
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn dims(&self) -> usize {
        self.0.len()
    }

    /// `|i| = i_1 + .. + i_d`.
    pub fn weight(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `x^i` over the integers. Panics on overflow.
    pub fn monomial_i128(&self, x: &[i64]) -> i128 {
        self.0
            .iter()
            .zip(x)
            .fold(1i128, |acc, (&e, &xi)| {
                acc.checked_mul((xi as i128).checked_pow(e).expect("monomial overflow"))
                    .expect("monomial overflow")
            })
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (n, e) in self.0.iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// `r = C(k+d, d) - 1`, the number of multi-indices with `1 <= |i| <= k`.
pub fn index_count(k: u32, d: usize) -> u64 {
    assert!(k >= 1 && d >= 1, "index_count needs k >= 1 and d >= 1");
    binomial(k as u64 + d as u64, d as u64) - 1
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) at every step.
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    u64::try_from(acc).expect("binomial overflow")
}

/// `K = sum_{1 <= |i| <= k} |i|`.
///
/// Computed twice, by summing over [`iter_multiindices`] and by the closed form
/// `d (r + 1) k / (d + 1)`; the two must agree.
pub fn weight_sum(k: u32, d: usize) -> u64 {
    let direct: u64 = iter_multiindices(k, d).map(|i| i.weight() as u64).sum();
    let r = index_count(k, d);
    let numerator = d as u128 * (r as u128 + 1) * k as u128;
    let (closed, rem) = numerator.div_rem(&(d as u128 + 1));
    assert_eq!(rem, 0, "closed form for K is not integral at k={k}, d={d}");
    assert_eq!(
        direct as u128, closed,
        "direct and closed-form weight sums disagree at k={k}, d={d}"
    );
    direct
}

/// All multi-indices with `1 <= |i| <= k`, ordered by weight and, within one
/// weight, by descending lexicographic order of the exponent tuple
/// (so `(1,0)` precedes `(0,1)`).
pub fn iter_multiindices(k: u32, d: usize) -> impl Iterator<Item = MultiIndex> {
    assert!(d >= 1, "iter_multiindices needs d >= 1");
    (1..=k).flat_map(move |w| {
        let mut out = Vec::new();
        let mut current = vec![0u32; d];
        compositions(w, 0, &mut current, &mut out);
        out.into_iter().map(MultiIndex)
    })
}

fn compositions(remaining: u32, pos: usize, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(current.clone());
        return;
    }
    for e in (0..=remaining).rev() {
        current[pos] = e;
        compositions(remaining - e, pos + 1, current, out);
    }
    current[pos] = 0;
}

#[inline]
pub(crate) fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub(crate) fn pow_mod(mut base: u64, mut exp: u32, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Polynomial `F(x) = sum beta_i x^i` with coefficients in `Z_m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polynomial {
    modulus: u64,
    dims: usize,
    terms: BTreeMap<MultiIndex, u64>,
}

impl Polynomial {
    pub fn zero(modulus: u64, dims: usize) -> Result<Self, PolyError> {
        check_modulus(modulus)?;
        if dims == 0 {
            return Err(PolyError::ZeroDimension);
        }
        Ok(Polynomial { modulus, dims, terms: BTreeMap::new() })
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs. Coefficients are
    /// reduced mod `m` and like terms are combined.
    pub fn from_terms<I>(modulus: u64, dims: usize, terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (Vec<u32>, i128)>,
    {
        let mut poly = Polynomial::zero(modulus, dims)?;
        for (exps, coeff) in terms {
            if exps.len() != dims {
                return Err(PolyError::DimensionMismatch { expected: dims, got: exps.len() });
            }
            poly.add_term(MultiIndex(exps), coeff);
        }
        Ok(poly)
    }

    fn add_term(&mut self, index: MultiIndex, coeff: i128) {
        let m = self.modulus as i128;
        let c = coeff.rem_euclid(m) as u64;
        let entry = self.terms.entry(index.clone()).or_insert(0);
        *entry = (*entry + c) % self.modulus;
        if *entry == 0 {
            self.terms.remove(&index);
        }
    }

    /// Parses `term (("+"|"-") term)*` where a term is `[int] ("*"? var)*` and a
    /// variable is `x<idx>("^"<exp>)?`. The dimension is the largest variable
    /// index that occurs (at least 1).
    pub fn parse(text: &str, modulus: u64) -> Result<Self, PolyError> {
        let parsed = Parser::new(text).parse()?;
        let dims = parsed.iter().flat_map(|(vars, _)| vars.iter().map(|&(v, _)| v)).max().unwrap_or(1);
        build_parsed(parsed, modulus, dims)
    }

    /// Like [`Polynomial::parse`] but with a declared dimension; variables above it
    /// are rejected.
    pub fn parse_with_dims(text: &str, modulus: u64, dims: usize) -> Result<Self, PolyError> {
        if dims == 0 {
            return Err(PolyError::ZeroDimension);
        }
        let parsed = Parser::new(text).parse()?;
        for (vars, _) in &parsed {
            if let Some(&(index, _)) = vars.iter().find(|&&(v, _)| v > dims) {
                return Err(PolyError::VariableOutOfRange { index, dims });
            }
        }
        build_parsed(parsed, modulus, dims)
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    /// Largest weight of a stored term; 0 for constants and for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(MultiIndex::weight).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, u64)> {
        self.terms.iter().map(|(i, &c)| (i, c))
    }

    pub fn coefficient(&self, index: &MultiIndex) -> u64 {
        self.terms.get(index).copied().unwrap_or(0)
    }

    pub fn constant_term(&self) -> u64 {
        self.coefficient(&MultiIndex::zero(self.dims))
    }

    /// `F(x) mod m` for integer coordinates of any sign.
    pub fn evaluate(&self, x: &[i64]) -> Result<u64, PolyError> {
        if x.len() != self.dims {
            return Err(PolyError::DimensionMismatch { expected: self.dims, got: x.len() });
        }
        let m = self.modulus;
        let residues: Vec<u64> = x.iter().map(|&v| (v as i128).rem_euclid(m as i128) as u64).collect();
        Ok(self.evaluate_residues(&residues))
    }

    /// Evaluation at coordinates already reduced into `{0, .., m-1}`.
    pub fn evaluate_residues(&self, x: &[u64]) -> u64 {
        debug_assert_eq!(x.len(), self.dims);
        let m = self.modulus;
        self.terms.iter().fold(0u64, |acc, (index, &c)| {
            let mono = index
                .0
                .iter()
                .zip(x)
                .fold(c, |p, (&e, &xi)| if e == 0 { p } else { mul_mod(p, pow_mod(xi, e, m), m) });
            let s = acc + mono;
            if s >= m { s - m } else { s }
        })
    }

    pub fn add(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        if self.modulus != other.modulus {
            return Err(PolyError::ModulusMismatch(self.modulus, other.modulus));
        }
        if self.dims != other.dims {
            return Err(PolyError::DimensionMismatch { expected: self.dims, got: other.dims });
        }
        let mut out = self.clone();
        for (i, &c) in &other.terms {
            out.add_term(i.clone(), c as i128);
        }
        Ok(out)
    }

    /// `g_F = min_{|i| = k} gcd(m, beta_i)` over the terms of top weight.
    pub fn leading_gcd(&self) -> Result<u64, PolyError> {
        let k = self.degree();
        if k == 0 {
            return Err(PolyError::Constant);
        }
        Ok(self
            .terms
            .iter()
            .filter(|(i, _)| i.weight() == k)
            .map(|(_, &c)| c.gcd(&self.modulus))
            .min()
            .expect("a term of top weight exists"))
    }

    /// Coefficients (mod m) of `t -> F(prefix, t)` as a polynomial in the last
    /// variable, lowest degree first. `prefix` holds the first `d - 1` residues.
    pub fn specialize_last(&self, prefix: &[u64]) -> Vec<u64> {
        debug_assert_eq!(prefix.len() + 1, self.dims);
        let m = self.modulus;
        let top = self.terms.keys().map(|i| i.0[self.dims - 1]).max().unwrap_or(0) as usize;
        let mut coeffs = vec![0u64; top + 1];
        for (index, &c) in &self.terms {
            let (head, last) = index.0.split_at(self.dims - 1);
            let v = head
                .iter()
                .zip(prefix)
                .fold(c, |p, (&e, &xi)| if e == 0 { p } else { mul_mod(p, pow_mod(xi, e, m), m) });
            let slot = &mut coeffs[last[0] as usize];
            *slot = (*slot + v) % m;
        }
        coeffs
    }

    /// Renames variables so that new variable `perm[v]` takes the role of old
    /// variable `v` (0-based).
    pub fn permute_variables(&self, perm: &[usize]) -> Polynomial {
        assert_eq!(perm.len(), self.dims, "permutation length must equal dims");
        let terms = self
            .terms
            .iter()
            .map(|(i, &c)| {
                let mut e = vec![0u32; self.dims];
                for (old, &new) in perm.iter().enumerate() {
                    e[new] = i.0[old];
                }
                (MultiIndex(e), c)
            })
            .collect();
        Polynomial { modulus: self.modulus, dims: self.dims, terms }
    }

    /// True when `F = G(x_1, .., x_{d-1}) - x_d`: the last variable occurs only in
    /// the linear term, with coefficient `-1`.
    pub fn is_graph_form(&self) -> bool {
        if self.dims < 2 {
            return false;
        }
        let mut lin = vec![0u32; self.dims];
        lin[self.dims - 1] = 1;
        let lin = MultiIndex(lin);
        self.coefficient(&lin) == self.modulus - 1
            && self.terms.keys().all(|i| *i == lin || i.0[self.dims - 1] == 0)
    }
}

fn check_modulus(m: u64) -> Result<(), PolyError> {
    if m < 3 {
        Err(PolyError::ModulusTooSmall(m))
    } else {
        Ok(())
    }
}

type ParsedTerm = (Vec<(usize, u32)>, i128);

fn build_parsed(parsed: Vec<ParsedTerm>, modulus: u64, dims: usize) -> Result<Polynomial, PolyError> {
    let mut poly = Polynomial::zero(modulus, dims)?;
    for (vars, coeff) in parsed {
        let mut e = vec![0u32; dims];
        for (v, p) in vars {
            e[v - 1] += p;
        }
        poly.add_term(MultiIndex(e), coeff);
    }
    Ok(poly)
}

impl fmt::Display for Polynomial {
    /// Writes the polynomial in the grammar accepted by [`Polynomial::parse`],
    /// highest weight first.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut ordered: Vec<_> = self.terms.iter().collect();
        ordered.sort_by(|(a, _), (b, _)| b.weight().cmp(&a.weight()).then(b.cmp(a)));
        for (n, (index, &c)) in ordered.into_iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            let vars: Vec<String> = index
                .0
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(v, &e)| if e == 1 { format!("x{}", v + 1) } else { format!("x{}^{}", v + 1, e) })
                .collect();
            match (c, vars.is_empty()) {
                (_, true) => write!(f, "{c}")?,
                (1, false) => write!(f, "{}", vars.join("*"))?,
                _ => write!(f, "{c}*{}", vars.join("*"))?,
            }
        }
        Ok(())
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser { src: text.as_bytes(), pos: 0 }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, PolyError> {
        Err(PolyError::Syntax { pos: self.pos, msg: msg.into() })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn number(&mut self) -> Result<u128, PolyError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected a number");
        }
        let digits = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        match digits.parse::<u128>() {
            Ok(v) => Ok(v),
            Err(_) => self.err("integer literal too large"),
        }
    }

    fn parse(mut self) -> Result<Vec<ParsedTerm>, PolyError> {
        let mut terms = Vec::new();
        let mut sign: i128 = 1;
        if self.peek() == Some(b'-') {
            sign = -1;
            self.pos += 1;
        } else if self.peek() == Some(b'+') {
            self.pos += 1;
        }
        loop {
            let (vars, c) = self.term()?;
            let c = i128::try_from(c).or_else(|_| self.err("integer literal too large"))?;
            terms.push((vars, sign * c));
            match self.peek() {
                None => break,
                Some(b'+') => sign = 1,
                Some(b'-') => sign = -1,
                Some(ch) => return self.err(format!("unexpected character '{}'", ch as char)),
            }
            self.pos += 1;
        }
        Ok(terms)
    }

    fn term(&mut self) -> Result<(Vec<(usize, u32)>, u128), PolyError> {
        let mut coeff = 1u128;
        let mut vars = Vec::new();
        let mut seen_any = false;
        if matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            coeff = self.number()?;
            seen_any = true;
        }
        loop {
            match self.peek() {
                Some(b'*') if seen_any => {
                    self.pos += 1;
                    if self.peek() != Some(b'x') {
                        return self.err("expected a variable after '*'");
                    }
                }
                Some(b'x') => {}
                _ => break,
            }
            self.pos += 1;
            let idx = self.number()?;
            if idx == 0 {
                return self.err("variable indices start at 1");
            }
            let idx = usize::try_from(idx).or_else(|_| self.err("variable index too large"))?;
            let mut exp = 1u32;
            if self.peek() == Some(b'^') {
                self.pos += 1;
                exp = u32::try_from(self.number()?).or_else(|_| self.err("exponent too large"))?;
            }
            vars.push((idx, exp));
            seen_any = true;
        }
        if !seen_any {
            return self.err("expected a term");
        }
        Ok((vars, coeff))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mi(e: &[u32]) -> MultiIndex {
        MultiIndex::new(e.to_vec())
    }

    #[test]
    fn parse_examples() {
        let f = Polynomial::parse("x1^2 + x2", 5).unwrap();
        assert_eq!(f.dims(), 2);
        assert_eq!(f.coefficient(&mi(&[2, 0])), 1);
        assert_eq!(f.coefficient(&mi(&[0, 1])), 1);
        assert_eq!(f.terms().count(), 2);
        assert_eq!(f.degree(), 2);

        let g = Polynomial::parse("6*x1", 6).unwrap();
        assert!(g.is_zero());
        assert_eq!(g.degree(), 0);

        let h = Polynomial::parse("3*x1*x2 - 1", 7).unwrap();
        assert_eq!(h.coefficient(&mi(&[1, 1])), 3);
        assert_eq!(h.coefficient(&mi(&[0, 0])), 6);
        assert_eq!(h.terms().count(), 2);
        assert_eq!(h.degree(), 2);
    }

    #[test]
    fn parse_variants() {
        let f = Polynomial::parse(" -x1 + 2x1x2^3 -  4 * x2 + x1", 11).unwrap();
        assert_eq!(f.coefficient(&mi(&[1, 0])), 0);
        assert_eq!(f.coefficient(&mi(&[1, 3])), 2);
        assert_eq!(f.coefficient(&mi(&[0, 1])), 7);
        let g = Polynomial::parse("x1*x1", 5).unwrap();
        assert_eq!(g.coefficient(&mi(&[2])), 1);
        assert_eq!(Polynomial::parse("5", 7).unwrap().dims(), 1);
    }

    #[test]
    fn parse_errors() {
        assert_eq!(Polynomial::parse("x1", 2), Err(PolyError::ModulusTooSmall(2)));
        assert!(matches!(Polynomial::parse("x1 +", 5), Err(PolyError::Syntax { .. })));
        assert!(matches!(Polynomial::parse("x1 ++ x2", 5), Err(PolyError::Syntax { .. })));
        assert!(matches!(Polynomial::parse("x0", 5), Err(PolyError::Syntax { .. })));
        assert!(matches!(Polynomial::parse("y1", 5), Err(PolyError::Syntax { .. })));
        assert!(matches!(Polynomial::parse("3**x1", 5), Err(PolyError::Syntax { .. })));
        assert_eq!(
            Polynomial::parse_with_dims("x1 + x3", 5, 2),
            Err(PolyError::VariableOutOfRange { index: 3, dims: 2 })
        );
    }

    #[test]
    fn display_round_trips() {
        for text in ["x1^2 + x2", "3*x1*x2 - 1", "x1^2 + x2^2 - x3", "0", "4"] {
            let f = Polynomial::parse(text, 7).unwrap();
            let back = Polynomial::parse_with_dims(&f.to_string(), 7, f.dims()).unwrap();
            assert_eq!(f, back, "{text} -> {f}");
        }
    }

    #[test]
    fn evaluate_examples() {
        let f = Polynomial::parse("x1^2 + x2^2", 5).unwrap();
        assert_eq!(f.evaluate(&[2, 1]).unwrap(), 0);
        let g = Polynomial::parse("3*x1^2 + 2*x1*x2 + 4", 9).unwrap();
        assert_eq!(g.evaluate(&[0, 0]).unwrap(), 4);
        let h = Polynomial::parse("3*x1^2", 6).unwrap();
        assert_eq!(h.evaluate(&[5]).unwrap(), 3);
        assert_eq!(h.evaluate(&[-1]).unwrap(), 3);
        assert_eq!(f.evaluate(&[1]), Err(PolyError::DimensionMismatch { expected: 2, got: 1 }));
    }

    #[test]
    fn evaluate_large_modulus_does_not_overflow() {
        let m = (1u64 << 61) - 1;
        let f = Polynomial::parse("x1^7 + 3*x1*x2^5", m).unwrap();
        let x = [1i64 << 40, -(1i64 << 50)];
        let r: Vec<u128> = x.iter().map(|&v| (v as i128).rem_euclid(m as i128) as u128).collect();
        let mm = m as u128;
        let mut p7 = 1u128;
        for _ in 0..7 {
            p7 = p7 * r[0] % mm;
        }
        let mut p5 = 1u128;
        for _ in 0..5 {
            p5 = p5 * r[1] % mm;
        }
        let expected = (p7 + 3 * r[0] % mm * p5) % mm;
        assert_eq!(f.evaluate(&x).unwrap() as u128, expected);
    }

    #[test]
    fn leading_gcd_examples() {
        let f = Polynomial::parse("3*x1^2 + 2*x1*x2 + x2", 6).unwrap();
        assert_eq!(f.leading_gcd(), Ok(2));
        for m in [3, 4, 10, 17] {
            assert_eq!(Polynomial::parse("x1^3", m).unwrap().leading_gcd(), Ok(1));
        }
        let h = Polynomial::parse("4*x1^2 + 2*x2^2", 8).unwrap();
        assert_eq!(h.leading_gcd(), Ok(2));
        assert_eq!(Polynomial::parse("5", 7).unwrap().leading_gcd(), Err(PolyError::Constant));
    }

    #[test]
    fn index_count_examples() {
        assert_eq!(index_count(2, 2), 5);
        assert_eq!(index_count(1, 1), 1);
        assert_eq!(index_count(3, 2), 9);
    }

    #[test]
    fn weight_sum_examples() {
        assert_eq!(weight_sum(2, 2), 8);
        assert_eq!(weight_sum(1, 1), 1);
        assert_eq!(weight_sum(2, 1), 3);
    }

    #[test]
    fn multiindex_order() {
        let v: Vec<_> = iter_multiindices(1, 2).collect();
        assert_eq!(v, vec![mi(&[1, 0]), mi(&[0, 1])]);
        let v: Vec<_> = iter_multiindices(2, 1).collect();
        assert_eq!(v, vec![mi(&[1]), mi(&[2])]);
        assert_eq!(iter_multiindices(3, 2).count(), 9);
    }

    #[test]
    fn combinatorics_agree_up_to_six() {
        for k in 1..=6 {
            for d in 1..=6 {
                let all: Vec<_> = iter_multiindices(k, d).collect();
                assert_eq!(all.len() as u64, index_count(k, d));
                let mut sorted = all.clone();
                sorted.sort();
                sorted.dedup();
                assert_eq!(sorted.len(), all.len());
                assert!(all.iter().all(|i| (1..=k).contains(&i.weight())));
                weight_sum(k, d);
            }
        }
    }

    #[test]
    fn specialize_last_matches_evaluate() {
        let f = Polynomial::parse("x1^2*x2 + 3*x2^3 + x1 + 2", 13).unwrap();
        for a in 0..13 {
            let c = f.specialize_last(&[a]);
            for t in 0..13u64 {
                let v = c.iter().rev().fold(0u64, |acc, &ci| (acc * t + ci) % 13);
                assert_eq!(v, f.evaluate_residues(&[a, t]));
            }
        }
    }

    #[test]
    fn graph_form_detection() {
        assert!(Polynomial::parse("x1^2 + x2^2 - x3", 11).unwrap().is_graph_form());
        assert!(!Polynomial::parse("x1^2 + x2*x3 - x3", 11).unwrap().is_graph_form());
        assert!(!Polynomial::parse("x1^2 + x2", 11).unwrap().is_graph_form());
    }

    fn arb_poly(m: u64, d: usize) -> impl Strategy<Value = Polynomial> {
        prop::collection::vec((prop::collection::vec(0u32..4, d), -50i128..50), 0..8)
            .prop_map(move |terms| Polynomial::from_terms(m, d, terms).unwrap())
    }

    proptest! {
        #[test]
        fn evaluation_is_additive(
            (f, g) in (arb_poly(12, 3), arb_poly(12, 3)),
            x in prop::collection::vec(-1000i64..1000, 3),
        ) {
            let sum = f.add(&g).unwrap();
            let lhs = sum.evaluate(&x).unwrap();
            let rhs = (f.evaluate(&x).unwrap() + g.evaluate(&x).unwrap()) % 12;
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn stored_form_is_canonical(f in arb_poly(10, 2)) {
            prop_assert!(f.terms().all(|(_, c)| c > 0 && c < 10));
            let recomputed = f.terms().map(|(i, _)| i.weight()).max().unwrap_or(0);
            prop_assert_eq!(recomputed, f.degree());
        }

        #[test]
        fn leading_gcd_divides_m(f in arb_poly(24, 2)) {
            prop_assume!(f.degree() > 0);
            let g = f.leading_gcd().unwrap();
            prop_assert_eq!(24 % g, 0);
            let k = f.degree();
            for (i, c) in f.terms() {
                if i.weight() == k {
                    prop_assert!(c.gcd(&24) >= g);
                }
            }
        }
    }
}
