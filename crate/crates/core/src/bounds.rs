//! Closed-form upper bounds, the dyadic depth choices used to reach them, and
//! comparison against exact counts.
//!
//! The `m^o(1)` factors of the asymptotic statements are replaced by an
//! explicit `slack` multiplier. Exponents are recomputed from `(k, d)` on every
//! call: with `r = C(k+d, d) - 1`, the basic exponent is `e = 1/(2r(k+1))`.
//! Logarithms are natural.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::counting::{CountResult, Domain};
use crate::poly::{index_count, weight_sum};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundError {
    #[error("degree k = {0} < 2")]
    Degree(u32),
    #[error("dimension d = {0} is too small")]
    Dims(usize),
    #[error("mu = {mu} is below 1/m = {floor}")]
    MeasureTooSmall { mu: f64, floor: f64 },
    #[error("{0}")]
    Invalid(String),
    #[error("parameter mismatch: {0}")]
    Mismatch(String),
}

/// `1/(2r(k+1))` for the given `(k, d)`.
pub fn exponent(k: u32, d: usize) -> f64 {
    1.0 / (2.0 * index_count(k, d) as f64 * (k as f64 + 1.0))
}

fn check_k(k: u32) -> Result<(), BoundError> {
    if k < 2 {
        Err(BoundError::Degree(k))
    } else {
        Ok(())
    }
}

fn check_positive(name: &str, v: f64) -> Result<(), BoundError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(BoundError::Invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

fn check_mu(m: f64, mu: f64) -> Result<(), BoundError> {
    check_positive("mu", mu)?;
    if mu > 1.0 {
        return Err(BoundError::Invalid(format!("mu = {mu} exceeds 1")));
    }
    if mu < 1.0 / m {
        return Err(BoundError::MeasureTooSmall { mu, floor: 1.0 / m });
    }
    Ok(())
}

/// `H^d ((R/H^k)^e + (R/m)^e) slack`, the box bound for `M_F(H,R)`.
pub fn bound_thm31(h: f64, r: f64, m: f64, k: u32, d: usize, slack: f64) -> Result<f64, BoundError> {
    check_k(k)?;
    if d == 0 {
        return Err(BoundError::Dims(d));
    }
    for (name, v) in [("H", h), ("R", r), ("m", m), ("slack", slack)] {
        check_positive(name, v)?;
    }
    let e = exponent(k, d);
    Ok(h.powi(d as i32) * ((r / h.powi(k as i32)).powf(e) + (r / m).powf(e)) * slack)
}

/// Bound for `N_F` on a cube of side `1/h`: `(m/h)^(d-ke) + m^(d-e) h^(-d)`.
pub fn bound_cor32(m: f64, h: f64, k: u32, d: usize, slack: f64) -> Result<f64, BoundError> {
    check_k(k)?;
    if d == 0 {
        return Err(BoundError::Dims(d));
    }
    for (name, v) in [("m", m), ("h", h), ("slack", slack)] {
        check_positive(name, v)?;
    }
    let e = exponent(k, d);
    let d = d as f64;
    Ok((m / h).powf(d - k as f64 * e) * slack + m.powf(d - e) * h.powf(-d) * slack)
}

/// Bound for `N_F` on a cube of side `1/h` when `F = G(x_1..x_(d-1)) - x_d`:
/// `(m/h)^(d-1-(k-1)e') + m^(d-1) h^(-(d-1+e'))` with `e'` taken in `d - 1` variables.
pub fn bound_cor33(m: f64, h: f64, k: u32, d: usize, slack: f64) -> Result<f64, BoundError> {
    check_k(k)?;
    if d < 2 {
        return Err(BoundError::Dims(d));
    }
    for (name, v) in [("m", m), ("h", h), ("slack", slack)] {
        check_positive(name, v)?;
    }
    let e = exponent(k, d - 1);
    let d1 = d as f64 - 1.0;
    Ok((m / h).powf(d1 - (k as f64 - 1.0) * e) * slack + m.powf(d1) * h.powf(-(d1 + e)) * slack)
}

/// Bound for `N_F(Omega)`: `m^(d-ke) mu^(1-ke) + m^(d-e) mu`, for `mu >= 1/m`.
pub fn bound_thm34(m: f64, mu: f64, k: u32, d: usize, slack: f64) -> Result<f64, BoundError> {
    check_k(k)?;
    if d == 0 {
        return Err(BoundError::Dims(d));
    }
    check_positive("m", m)?;
    check_positive("slack", slack)?;
    check_mu(m, mu)?;
    let e = exponent(k, d);
    let (d, k) = (d as f64, k as f64);
    Ok(m.powf(d - k * e) * mu.powf(1.0 - k * e) * slack + m.powf(d - e) * mu * slack)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Thm35Case {
    /// `mu >= m^(-1+1/k)`.
    Large,
    /// `1/m <= mu < m^(-1+1/k)`.
    Small,
}

/// Case split point `m^(-1+1/k)`.
pub fn thm35_threshold(m: f64, k: u32) -> f64 {
    m.powf(-1.0 + 1.0 / k as f64)
}

/// The codimension-one formula for an explicit case, `e'` taken in `d - 1` variables.
pub fn thm35_case_value(m: f64, mu: f64, k: u32, d: usize, slack: f64, case: Thm35Case) -> Result<f64, BoundError> {
    check_k(k)?;
    if d < 2 {
        return Err(BoundError::Dims(d));
    }
    check_positive("m", m)?;
    check_positive("slack", slack)?;
    check_mu(m, mu)?;
    let e = exponent(k, d - 1);
    let (d1, k1) = (d as f64 - 1.0, k as f64 - 1.0);
    Ok(match case {
        Thm35Case::Large => m.powf(d1) * mu.powf(e) * slack,
        Thm35Case::Small => m.powf(d1 - k1 * e) * mu.powf(-k1 * e) * slack,
    })
}

/// Bound for `N_F(Omega)` with `F = G - x_d`; ties at the threshold go to the large case.
pub fn bound_thm35(m: f64, mu: f64, k: u32, d: usize, slack: f64) -> Result<(f64, Thm35Case), BoundError> {
    check_k(k)?;
    let case = if mu >= thm35_threshold(m, k) { Thm35Case::Large } else { Thm35Case::Small };
    Ok((thm35_case_value(m, mu, k, d, slack, case)?, case))
}

/// `H^d R / m`.
pub fn heuristic_count(h: f64, r: f64, m: f64, d: usize) -> f64 {
    h.powi(d as i32) * r / m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParamRule {
    Thm34,
    Thm35Large,
    Thm35Small,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamChoice {
    /// Cover depth `M`.
    pub depth: i64,
    /// Split depth `N` used in the bound.
    pub split: i64,
    /// `N` before clamping to at least 1 (differs only for the general rule).
    pub split_raw: i64,
    /// `2 sqrt(d) / 2^M`.
    pub eps: f64,
    pub rule: ParamRule,
}

fn pow2(n: i64) -> f64 {
    2f64.powi(n as i32)
}

/// Smallest integer `n` with `2^-n <= x`, i.e. `ceil(-log2 x)`, corrected so the
/// displayed inequality holds in floating point.
fn ceil_neg_log2(x: f64) -> i64 {
    let mut n = (-x.log2()).ceil() as i64;
    while pow2(-n) > x {
        n += 1;
    }
    while pow2(-(n - 1)) <= x {
        n -= 1;
    }
    n
}

/// Cover and split depths for the general bound: `2^-M <= m^-1 log m <= 2^-M+1` and
/// `2^-N <= mu log m < 2^-N+1` (`N` clamped to at least 1).
pub fn choose_params_thm34(m: u64, mu: f64, d: usize) -> Result<ParamChoice, BoundError> {
    if m < 3 {
        return Err(BoundError::Invalid(format!("m = {m} < 3")));
    }
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(BoundError::Invalid(format!("mu = {mu} outside (0, 1]")));
    }
    let mf = m as f64;
    let target = mf.ln() / mf;
    let depth = ceil_neg_log2(target);
    let split_raw = ceil_neg_log2(mu * mf.ln());
    let split = split_raw.max(1);
    assert!(pow2(-depth) <= target && target <= pow2(-depth + 1), "no integer brackets m^-1 log m");
    Ok(ParamChoice { depth, split, split_raw, eps: 2.0 * (d as f64).sqrt() / pow2(depth), rule: ParamRule::Thm34 })
}

/// Cover and split depths for the graph-form bound. Large case: `2^(M-1) < mu^(1/(k-1)) m <= 2^M`
/// and `2^-N <= 2^(M(k-1)) m^-(k-1) < 2^-N+1`. Small case: `2^-M <= mu < 2^-M+1`, `N = M`.
pub fn choose_params_thm35(m: u64, mu: f64, k: u32, d: usize) -> Result<ParamChoice, BoundError> {
    check_k(k)?;
    if m < 3 {
        return Err(BoundError::Invalid(format!("m = {m} < 3")));
    }
    let mf = m as f64;
    check_mu(mf, mu)?;
    let k1 = k as f64 - 1.0;
    let (depth, split, rule) = if mu >= thm35_threshold(mf, k) {
        let x = mu.powf(1.0 / k1) * mf;
        // smallest M with x <= 2^M
        let mut depth = x.log2().ceil() as i64;
        while pow2(depth) < x {
            depth += 1;
        }
        while pow2(depth - 1) >= x {
            depth -= 1;
        }
        let q = (pow2(depth) / mf).powf(k1);
        (depth, ceil_neg_log2(q), ParamRule::Thm35Large)
    } else {
        let depth = ceil_neg_log2(mu);
        (depth, depth, ParamRule::Thm35Small)
    };
    Ok(ParamChoice { depth, split, split_raw: split, eps: 2.0 * (d as f64).sqrt() / pow2(depth), rule })
}

/// Checks the displayed bracketing inequalities of a choice verbatim.
pub fn brackets_hold(choice: &ParamChoice, m: u64, mu: f64, k: u32) -> bool {
    let mf = m as f64;
    let (dm, n) = (choice.depth, choice.split_raw);
    match choice.rule {
        ParamRule::Thm34 => {
            let t = mf.ln() / mf;
            let v = mu * mf.ln();
            pow2(-dm) <= t && t <= pow2(-dm + 1) && pow2(-n) <= v && v < pow2(-n + 1) && choice.split == n.max(1)
        }
        ParamRule::Thm35Large => {
            let k1 = k as f64 - 1.0;
            let x = mu.powf(1.0 / k1) * mf;
            let q = pow2(dm * (k as i64 - 1)) * mf.powf(-k1);
            pow2(dm - 1) < x && x <= pow2(dm) && pow2(-n) <= q && q < pow2(-n + 1) && n <= dm
        }
        ParamRule::Thm35Small => pow2(-dm) <= mu && mu < pow2(-dm + 1) && n == dm,
    }
}

/// Instances below these sizes are flagged as outside the asymptotic regime.
pub const ASYMPTOTIC_THRESHOLD: f64 = 16.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Asymptotic,
    BelowAsymptotic,
}

impl Regime {
    pub fn from_size(size: f64) -> Regime {
        if size < ASYMPTOTIC_THRESHOLD {
            Regime::BelowAsymptotic
        } else {
            Regime::Asymptotic
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Asymptotic => "asymptotic",
            Regime::BelowAsymptotic => "below-asymptotic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundName {
    Thm31,
    Cor32,
    Cor33,
    Thm34,
    Thm35,
    Heuristic,
}

impl BoundName {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundName::Thm31 => "thm31",
            BoundName::Cor32 => "cor32",
            BoundName::Cor33 => "cor33",
            BoundName::Thm34 => "thm34",
            BoundName::Thm35 => "thm35",
            BoundName::Heuristic => "heuristic",
        }
    }
}

/// One evaluated bound, optionally compared against an exact count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: BoundName,
    pub m: u64,
    pub big_h: Option<f64>,
    pub big_r: Option<f64>,
    pub h: Option<f64>,
    pub mu: Option<f64>,
    pub k: u32,
    pub d: usize,
    pub r: u64,
    pub big_k: u64,
    pub s: Option<u32>,
    pub params: Option<ParamChoice>,
    pub slack: f64,
    pub bound: f64,
    pub observed: Option<u128>,
    pub regime: Regime,
    /// Free text; errors of a partially failed experiment row land here.
    #[serde(default)]
    pub note: String,
}

impl BoundReport {
    fn base(name: BoundName, m: u64, k: u32, d: usize, slack: f64, bound: f64, regime: Regime) -> Self {
        BoundReport {
            name,
            m,
            big_h: None,
            big_r: None,
            h: None,
            mu: None,
            k,
            d,
            r: index_count(k, d),
            big_k: weight_sum(k, d),
            s: None,
            params: None,
            slack,
            bound,
            observed: None,
            regime,
            note: String::new(),
        }
    }

    pub fn thm31(h: f64, r: f64, m: u64, k: u32, d: usize, slack: f64) -> Result<Self, BoundError> {
        let bound = bound_thm31(h, r, m as f64, k, d, slack)?;
        let mut rep = Self::base(BoundName::Thm31, m, k, d, slack, bound, Regime::from_size(h));
        rep.big_h = Some(h);
        rep.big_r = Some(r);
        Ok(rep)
    }

    pub fn heuristic(h: f64, r: f64, m: u64, k: u32, d: usize) -> Result<Self, BoundError> {
        check_k(k)?;
        let mut rep = Self::base(BoundName::Heuristic, m, k, d, 1.0, heuristic_count(h, r, m as f64, d), Regime::from_size(h));
        rep.big_h = Some(h);
        rep.big_r = Some(r);
        Ok(rep)
    }

    pub fn cor32(m: u64, h: f64, k: u32, d: usize, slack: f64) -> Result<Self, BoundError> {
        let bound = bound_cor32(m as f64, h, k, d, slack)?;
        let mut rep = Self::base(BoundName::Cor32, m, k, d, slack, bound, Regime::from_size(m as f64 / h));
        rep.h = Some(h);
        Ok(rep)
    }

    pub fn cor33(m: u64, h: f64, k: u32, d: usize, slack: f64) -> Result<Self, BoundError> {
        let bound = bound_cor33(m as f64, h, k, d, slack)?;
        let mut rep = Self::base(BoundName::Cor33, m, k, d, slack, bound, Regime::from_size(m as f64 / h));
        rep.r = index_count(k, d - 1);
        rep.big_k = weight_sum(k, d - 1);
        rep.h = Some(h);
        Ok(rep)
    }

    pub fn thm34(m: u64, mu: f64, k: u32, d: usize, slack: f64) -> Result<Self, BoundError> {
        let bound = bound_thm34(m as f64, mu, k, d, slack)?;
        let params = choose_params_thm34(m, mu, d)?;
        let mut rep = Self::base(BoundName::Thm34, m, k, d, slack, bound, Regime::from_size(m as f64 / pow2(params.depth)));
        rep.mu = Some(mu);
        rep.params = Some(params);
        Ok(rep)
    }

    pub fn thm35(m: u64, mu: f64, k: u32, d: usize, slack: f64) -> Result<Self, BoundError> {
        let (bound, _) = bound_thm35(m as f64, mu, k, d, slack)?;
        let params = choose_params_thm35(m, mu, k, d)?;
        let mut rep = Self::base(BoundName::Thm35, m, k, d, slack, bound, Regime::from_size(m as f64 / pow2(params.depth)));
        rep.r = index_count(k, d - 1);
        rep.big_k = weight_sum(k, d - 1);
        rep.mu = Some(mu);
        rep.params = Some(params);
        Ok(rep)
    }

    pub fn ratio(&self) -> Option<f64> {
        self.observed.map(|o| o as f64 / self.bound)
    }

    /// False for the heuristic, which estimates a typical count rather than bounding it.
    pub fn is_upper_bound(&self) -> bool {
        self.name != BoundName::Heuristic
    }

    /// `observed <= bound`; vacuous without an observation.
    pub fn passed(&self) -> bool {
        self.observed.is_none_or(|o| o as f64 <= self.bound)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundVerdict {
    pub pass: bool,
    pub ratio: f64,
}

/// Compares an exact count with a bound evaluated for the same parameters.
pub fn verify_bound(observed: &CountResult, bound: &BoundReport) -> Result<BoundVerdict, BoundError> {
    let mismatch = |what: String| Err(BoundError::Mismatch(what));
    match (&observed.domain, bound.name) {
        (Domain::Mf { m, h, r, .. }, BoundName::Thm31 | BoundName::Heuristic) => {
            if *m != bound.m || Some(*h as f64) != bound.big_h || Some(*r as f64) != bound.big_r {
                return mismatch(format!("count m={m} H={h} R={r} vs bound m={} H={:?} R={:?}", bound.m, bound.big_h, bound.big_r));
            }
        }
        (Domain::Nf { m, .. }, BoundName::Cor32 | BoundName::Cor33 | BoundName::Thm34 | BoundName::Thm35) => {
            if *m != bound.m {
                return mismatch(format!("count modulus {m} vs bound modulus {}", bound.m));
            }
        }
        (domain, name) => return mismatch(format!("{} does not bound a {:?} count", name.as_str(), domain)),
    }
    let value = observed.count as f64;
    Ok(BoundVerdict { pass: value <= bound.bound, ratio: value / bound.bound })
}

/// Header of the bound CSV.
pub const CSV_HEADER: &str = "name,m,H,R,h,mu,k,d,r,K,s,M,N,slack,bound,observed,ratio,pass,regime,note";

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn real(v: f64) -> String {
    format!("{v:.12e}")
}

impl BoundReport {
    /// One CSV row matching [`CSV_HEADER`]; reals in `{:.12e}` form.
    pub fn csv_row(&self) -> String {
        let mut row = String::new();
        let p = self.params;
        write!(
            row,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.name.as_str(),
            self.m,
            opt(self.big_h),
            opt(self.big_r),
            opt(self.h),
            self.mu.map(real).unwrap_or_default(),
            self.k,
            self.d,
            self.r,
            self.big_k,
            opt(self.s),
            opt(p.map(|p| p.depth)),
            opt(p.map(|p| p.split)),
            real(self.slack),
            real(self.bound),
            opt(self.observed),
            self.ratio().map(real).unwrap_or_default(),
            if self.observed.is_some() && self.is_upper_bound() { self.passed().to_string() } else { String::new() },
            self.regime.as_str(),
            self.note.replace([',', '\n'], ";"),
        )
        .expect("write to string");
        row
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting::{count_mf, count_nf, Budget};
    use crate::poly::Polynomial;
    use crate::regions::Region;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs())
    }

    #[test]
    fn exponents_follow_r() {
        assert_eq!(exponent(2, 2), 1.0 / 30.0);
        assert_eq!(exponent(2, 1), 1.0 / 12.0);
        assert!(matches!(bound_thm31(2.0, 2.0, 5.0, 1, 2, 1.0), Err(BoundError::Degree(1))));
    }

    #[test]
    fn thm31_examples() {
        assert_eq!(bound_thm31(1.0, 1.0, 1.0, 2, 2, 1.0).unwrap(), 2.0);
        assert_eq!(bound_thm31(1.0, 1.0, 1.0, 3, 1, 2.5).unwrap(), 5.0);
        let (h, m) = (10.0, 101.0);
        let b = bound_thm31(h, m, m, 2, 2, 1.0).unwrap();
        assert!(b >= h * h * (m / (h * h)).powf(1.0 / 30.0));
    }

    #[test]
    fn corollaries_are_substitutions() {
        for (m, h, k, d) in [(1e4, 10.0, 2u32, 2usize), (1e4, 100.0, 2, 3), (997.0, 3.0, 3, 2), (50.0, 1.0, 2, 4)] {
            let c32 = bound_cor32(m, h, k, d, 1.0).unwrap();
            assert!(rel(c32, bound_thm31(m / h, 1.0, m, k, d, 1.0).unwrap()) < 1e-12);
            let c33 = bound_cor33(m, h, k, d, 1.0).unwrap();
            assert!(rel(c33, bound_thm31(m / h, m / h, m, k, d - 1, 1.0).unwrap()) < 1e-12);
        }
        let h1 = bound_cor32(1e4, 1.0, 2, 2, 1.0).unwrap();
        assert!(rel(h1, 1e4f64.powf(2.0 - 2.0 / 30.0) + 1e4f64.powf(2.0 - 1.0 / 30.0)) < 1e-12);
        assert!(matches!(bound_cor33(100.0, 2.0, 2, 1, 1.0), Err(BoundError::Dims(1))));
        assert_eq!(BoundReport::cor33(10_000, 100.0, 2, 3, 1.0).unwrap().r, 5);
    }

    #[test]
    fn thm34_examples() {
        let m = 1e4;
        let full = bound_thm34(m, 1.0, 2, 2, 1.0).unwrap();
        assert!(rel(full, m.powf(2.0 - 2.0 / 30.0) + m.powf(2.0 - 1.0 / 30.0)) < 1e-12);
        let mu = 1.0 / m;
        let first = m.powf(2.0 - 2.0 / 30.0) * mu.powf(1.0 - 2.0 / 30.0);
        let second = m.powf(2.0 - 1.0 / 30.0) * mu;
        assert!(first > second);
        assert!(rel(bound_thm34(m, mu, 2, 2, 1.0).unwrap(), first + second) < 1e-12);
        assert!(matches!(bound_thm34(m, 0.5 / m, 2, 2, 1.0), Err(BoundError::MeasureTooSmall { .. })));
    }

    #[test]
    fn thm35_cases() {
        let m = 1e4;
        assert_eq!(bound_thm35(m, 1.0, 2, 2, 1.0).unwrap(), (m, Thm35Case::Large));
        let t = thm35_threshold(m, 2);
        assert!(rel(t, 1e-2) < 1e-12);
        assert_eq!(bound_thm35(m, t, 2, 2, 1.0).unwrap().1, Thm35Case::Large);
        assert_eq!(bound_thm35(m, t * 0.999, 2, 2, 1.0).unwrap().1, Thm35Case::Small);
        for m in [1e2, 1e3, 1e4, 1e6] {
            for (k, d) in [(2u32, 2usize), (3, 3), (4, 2)] {
                let t = thm35_threshold(m, k);
                let a = thm35_case_value(m, t, k, d, 1.0, Thm35Case::Large).unwrap();
                let b = thm35_case_value(m, t, k, d, 1.0, Thm35Case::Small).unwrap();
                assert!((a / b).ln().abs() / m.ln() < 1e-12, "m={m} k={k} d={d}");
            }
        }
    }

    #[test]
    fn heuristic_examples() {
        assert_eq!(heuristic_count(7.0, 11.0, 11.0, 3), 343.0);
        assert_eq!(heuristic_count(7.0, 4.0, 11.0, 2), 2.0 * heuristic_count(7.0, 2.0, 11.0, 2));
        assert!(rel(heuristic_count(13.0, 1.0, 13.0, 3), 169.0) < 1e-15);
    }

    #[test]
    fn parameter_examples() {
        let p = choose_params_thm34(16, 0.5, 2).unwrap();
        assert_eq!(p.depth, 3);
        for m in [16u64, 101, 997] {
            let p = choose_params_thm34(m, 1.0 / m as f64, 2).unwrap();
            assert_eq!(p.split, p.depth);
        }
        let p = choose_params_thm34(1_000_000, 1.0, 2).unwrap();
        assert_eq!(p.split_raw, -((1_000_000f64.ln()).log2().floor() as i64));
        assert_eq!(p.split, 1);
        for m in [10u64, 100, 1000, 1024] {
            let p = choose_params_thm35(m, 1.0, 2, 2).unwrap();
            assert_eq!(p.depth, (m as f64).log2().ceil() as i64);
        }
        let m = 10_000u64;
        let t = thm35_threshold(m as f64, 2);
        assert_eq!(choose_params_thm35(m, t, 2, 2).unwrap().rule, ParamRule::Thm35Large);
        let small = choose_params_thm35(m, 1e-3, 2, 2).unwrap();
        assert_eq!(small.rule, ParamRule::Thm35Small);
        assert_eq!(small.split, small.depth);
        assert!(choose_params_thm34(2, 0.5, 2).is_err());
    }

    proptest! {
        #[test]
        fn brackets_hold_everywhere(m in 3u64..1_000_000, frac in 0.0f64..1.0, k in 2u32..5) {
            let mu = (1.0 / m as f64).powf(frac);
            let p = choose_params_thm34(m, mu, 2).unwrap();
            prop_assert!(brackets_hold(&p, m, mu, k));
            prop_assert!(p.split_raw <= p.depth);
            let q = choose_params_thm35(m, mu, k, 2).unwrap();
            prop_assert!(brackets_hold(&q, m, mu, k));
            prop_assert!(q.split <= q.depth);
        }

        #[test]
        fn bounds_are_positive(h in 1.0f64..1e3, r in 1.0f64..1e3, m in 3.0f64..1e6, k in 2u32..5, d in 2usize..4) {
            prop_assert!(bound_thm31(h, r, m, k, d, 1.0).unwrap() > 0.0);
            prop_assert!(bound_cor33(m, h.min(m), k, d, 1.0).unwrap() > 0.0);
        }
    }

    #[test]
    fn verification() {
        let b = Budget::default();
        let f = Polynomial::parse("x1^2+x2^2-x3", 101).unwrap();
        let ball = Region::ball(vec![0.5, 0.5, 0.5], 0.3).unwrap();
        let count = count_nf(&f, &ball).unwrap();
        let mu = ball.measure(1, 0).unwrap().value;
        let rep = BoundReport::thm34(101, mu, 2, 3, 1.0).unwrap();
        let v = verify_bound(&count, &rep).unwrap();
        assert!(v.pass && v.ratio > 0.0);
        let other = BoundReport::thm34(103, mu, 2, 3, 1.0).unwrap();
        assert!(matches!(verify_bound(&count, &other), Err(BoundError::Mismatch(_))));
        let g = Polynomial::parse("x1^2+x2", 7).unwrap();
        let mf = count_mf(&g, &[0, 0], 0, 5, 1, &b).unwrap();
        assert!(verify_bound(&mf, &BoundReport::thm31(5.0, 1.0, 7, 2, 2, 1.0).unwrap()).is_ok());
        assert!(verify_bound(&mf, &BoundReport::thm31(6.0, 1.0, 7, 2, 2, 1.0).unwrap()).is_err());
        assert!(verify_bound(&mf, &rep).is_err());
        let mut zero = rep.clone();
        zero.observed = Some(0);
        assert!(zero.passed());
        zero.observed = Some(zero.bound as u128);
        assert!(zero.passed());
    }

    #[test]
    fn csv_rows_have_header_arity() {
        let cols = CSV_HEADER.split(',').count();
        let mut rep = BoundReport::thm34(101, 0.1, 2, 3, 1.0).unwrap();
        assert_eq!(rep.csv_row().split(',').count(), cols);
        rep.observed = Some(12);
        assert!(rep.csv_row().contains(",12,"));
        let rep = BoundReport::thm31(5.0, 1.0, 7, 2, 2, 1.0).unwrap();
        assert_eq!(rep.csv_row().split(',').count(), cols);
        assert!(rep.csv_row().ends_with("below-asymptotic,"));
    }
}
