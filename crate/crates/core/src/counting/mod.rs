//! Exact solution counts.
//!
//! * `N_F(Omega)`: residues `x in {0..m-1}^d` with `F(x) = 0 mod m` and `x/m in Omega`.
//! * `M_F(H,R)`: pairs `(x, y)`, `x` in the box `prod [K_i+1, K_i+H]`, `y in [L+1, L+R]`,
//!   with `F(x) = y mod m`.
//! * `T(u,H)`: `2s`-tuples of points of `[1,H]^d` with
//!   `F(x_1)+...+F(x_s)-F(x_(s+1))-...-F(x_2s) = u mod m`.
//! * `J_{s,k,d}(U,H)`: `2s`-tuples whose lambda vector equals `U`.
//!
//! Every count is exact and does not depend on the rayon thread count.

pub mod chain;

use std::collections::HashMap;

use num_integer::Integer;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poly::{index_count, iter_multiindices, mul_mod, MultiIndex, PolyError, Polynomial};
use crate::regions::{Region, RegionError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CountError {
    #[error("{what} needs {needed} steps, above the budget of {cap}")]
    Budget { what: &'static str, needed: f64, cap: u64 },
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error("{0}")]
    Invalid(String),
}

/// Work caps for exhaustive counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    /// Largest number of tuples or points enumerated directly.
    pub direct: u64,
    /// Largest signature table built by the convolution oracle.
    pub table: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { direct: 100_000_000, table: 10_000_000 }
    }
}

impl Budget {
    fn check(&self, what: &'static str, needed: f64, cap: u64) -> Result<(), CountError> {
        if needed <= cap as f64 {
            Ok(())
        } else {
            Err(CountError::Budget { what, needed, cap })
        }
    }

    fn direct(&self, what: &'static str, needed: f64) -> Result<(), CountError> {
        self.check(what, needed, self.direct)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "count", rename_all = "lowercase")]
pub enum Domain {
    Nf { poly: String, m: u64, region: String },
    Mf { poly: String, m: u64, offsets: Vec<i64>, l: i64, h: u64, r: u64 },
    T { poly: String, m: u64, u: i64, h: u64, s: u32 },
    J { s: u32, k: u32, d: usize, h: u64, target: Vec<i64>, method: JMethod },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JMethod {
    Direct,
    Convolution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountResult {
    pub count: u128,
    pub domain: Domain,
    pub elapsed_secs: f64,
}

/// Wall clock for count records; reads 0 where the platform has no clock.
#[derive(Clone, Copy)]
struct Stopwatch(#[cfg(not(all(target_arch = "wasm32", target_os = "unknown")))] std::time::Instant);

impl Stopwatch {
    fn start() -> Self {
        #[cfg(not(all(target_arch = "wasm32", target_os = "unknown")))]
        return Stopwatch(std::time::Instant::now());
        #[cfg(all(target_arch = "wasm32", target_os = "unknown"))]
        return Stopwatch();
    }

    fn secs(self) -> f64 {
        #[cfg(not(all(target_arch = "wasm32", target_os = "unknown")))]
        return self.0.elapsed().as_secs_f64();
        #[cfg(all(target_arch = "wasm32", target_os = "unknown"))]
        return 0.0;
    }
}

fn timed(start: Stopwatch, count: u128, domain: Domain) -> CountResult {
    CountResult { count, domain, elapsed_secs: start.secs() }
}

fn inverse_mod(a: u64, m: u64) -> Option<u64> {
    let g = (a as i128).extended_gcd(&(m as i128));
    (g.gcd == 1).then(|| g.x.rem_euclid(m as i128) as u64)
}

/// Number of `t in [a, b]` with `t = t0 mod step`.
fn progression_count(a: i64, b: i64, t0: i64, step: i64) -> u64 {
    if a > b {
        return 0;
    }
    let first = a + (t0 - a).rem_euclid(step);
    if first > b {
        0
    } else {
        ((b - first) / step + 1) as u64
    }
}

/// Roots of `g(t) = sum coeffs[e] t^e mod m` with `t in [a, b]`.
fn count_roots(coeffs: &[u64], m: u64, a: i64, b: i64) -> u64 {
    if a > b {
        return 0;
    }
    let mut deg = coeffs.len();
    while deg > 0 && coeffs[deg - 1] == 0 {
        deg -= 1;
    }
    match deg {
        0 => (b - a + 1) as u64,
        1 => 0,
        2 => {
            // c1 t + c0 = 0
            let (c0, c1) = (coeffs[0], coeffs[1]);
            let g = c1.gcd(&m);
            let rhs = (m - c0) % m;
            if !rhs.is_multiple_of(g) {
                return 0;
            }
            let step = m / g;
            let inv = inverse_mod((c1 / g) % step, step).unwrap_or(0);
            let t0 = mul_mod((rhs / g) % step, inv, step) as i64;
            progression_count(a, b, t0, step as i64)
        }
        _ => {
            let e = deg - 1;
            let eval = |t: i64| -> u64 {
                let t = t.rem_euclid(m as i64) as u64;
                coeffs[..deg].iter().rev().fold(0u64, |acc, &c| (mul_mod(acc, t, m) + c) % m)
            };
            // forward difference table at t = a
            let mut diff: Vec<u64> = (0..=e as i64).map(|i| eval(a + i)).collect();
            for level in 1..=e {
                for i in (level..=e).rev() {
                    diff[i] = (diff[i] + m - diff[i - 1]) % m;
                }
            }
            let mut hits = 0u64;
            for _ in a..=b {
                if diff[0] == 0 {
                    hits += 1;
                }
                for i in 0..e {
                    let next = diff[i] + diff[i + 1];
                    diff[i] = if next >= m { next - m } else { next };
                }
            }
            hits
        }
    }
}

/// Integer `t in {0..m-1}` with `(prefix, t)/m` in the region, as an interval.
fn residue_interval(region: &Region, prefix: &[u64], m: u64, point: &mut [f64]) -> Option<(i64, i64)> {
    let d = point.len();
    for (p, &x) in point.iter_mut().zip(prefix) {
        *p = x as f64 / m as f64;
    }
    let mf = m as f64;
    let inside = |t: i64, point: &mut [f64]| {
        point[d - 1] = t as f64 / mf;
        region.contains_unchecked(point)
    };
    let (lo, hi) = region.line_interval(&point[..d - 1]).expect("convex region")?;
    let mut a = ((lo * mf).ceil() as i64).clamp(0, m as i64 - 1);
    let mut b = ((hi * mf).floor() as i64).clamp(0, m as i64 - 1);
    // repair rounding at both ends against the membership test
    while a > 0 && inside(a - 1, point) {
        a -= 1;
    }
    while a <= b && !inside(a, point) {
        a += 1;
    }
    while b + 1 < m as i64 && inside(b + 1, point) {
        b += 1;
    }
    while b >= a && !inside(b, point) {
        b -= 1;
    }
    (a <= b).then_some((a, b))
}

fn prefix_at(mut index: u64, m: u64, len: usize) -> Vec<u64> {
    let mut out = vec![0; len];
    for slot in out.iter_mut().rev() {
        *slot = index % m;
        index /= m;
    }
    out
}

/// `N_F(Omega)`: solutions `x in {0..m-1}^d` of `F(x) = 0 mod m` with `x/m in Omega`.
pub fn count_nf(f: &Polynomial, region: &Region) -> Result<CountResult, CountError> {
    let start = Stopwatch::start();
    let d = f.dims();
    if region.dims() != d {
        return Err(RegionError::DimensionMismatch { expected: d, got: region.dims() }.into());
    }
    let m = f.modulus();
    let prefixes = m.pow(d as u32 - 1);
    let convex = region.line_interval(&vec![0.5; d - 1]).is_some();
    let count: u128 = (0..prefixes)
        .into_par_iter()
        .map_init(
            || vec![0.0; d],
            |point, index| {
                let prefix = prefix_at(index, m, d - 1);
                let coeffs = f.specialize_last(&prefix);
                if convex {
                    residue_interval(region, &prefix, m, point).map_or(0, |(a, b)| count_roots(&coeffs, m, a, b)) as u128
                } else {
                    let mut hits = 0u128;
                    for (p, &x) in point.iter_mut().zip(&prefix) {
                        *p = x as f64 / m as f64;
                    }
                    for t in 0..m {
                        point[d - 1] = t as f64 / m as f64;
                        if region.contains_unchecked(point) && count_roots(&coeffs, m, t as i64, t as i64) == 1 {
                            hits += 1;
                        }
                    }
                    hits
                }
            },
        )
        .sum();
    Ok(timed(start, count, Domain::Nf { poly: f.to_string(), m, region: region.describe() }))
}

/// `hist[v]` = number of `x` in `prod [K_i+1, K_i+H]` with `F(x) = v mod m`.
pub fn residue_histogram(f: &Polynomial, offsets: &[i64], h: u64, budget: &Budget) -> Result<Vec<u64>, CountError> {
    let d = f.dims();
    if offsets.len() != d {
        return Err(CountError::Invalid(format!("expected {d} offsets, got {}", offsets.len())));
    }
    if offsets.iter().any(|&k| k < 0) {
        return Err(CountError::Invalid("offsets must be nonnegative".into()));
    }
    if h == 0 {
        return Err(CountError::Invalid("H must be at least 1".into()));
    }
    budget.direct("box enumeration", (h as f64).powi(d as i32))?;
    let m = f.modulus();
    let prefixes = h.pow(d as u32 - 1);
    let residue = |i: usize, t: u64| ((offsets[i] as u64 % m) + t % m) % m;
    let hist = (0..prefixes)
        .into_par_iter()
        .fold(
            || vec![0u64; m as usize],
            |mut hist, index| {
                let prefix: Vec<u64> = prefix_at(index, h, d - 1).iter().enumerate().map(|(i, &t)| residue(i, t + 1)).collect();
                let coeffs = f.specialize_last(&prefix);
                for t in 1..=h {
                    let x = residue(d - 1, t);
                    let v = coeffs.iter().rev().fold(0u64, |acc, &c| (mul_mod(acc, x, m) + c) % m);
                    hist[v as usize] += 1;
                }
                hist
            },
        )
        .reduce(
            || vec![0u64; m as usize],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(hist)
}

/// Number of `y in [L+1, L+R]` with `y = v mod m`.
pub fn interval_hits(v: u64, m: u64, l: i64, r: u64) -> u64 {
    let (v, m, l, r) = (v as i128, m as i128, l as i128, r as i128);
    ((l + r - v).div_euclid(m) - (l - v).div_euclid(m)) as u64
}

pub(crate) fn mf_from_histogram(hist: &[u64], l: i64, r: u64) -> u128 {
    let m = hist.len() as u64;
    hist.iter().enumerate().map(|(v, &c)| c as u128 * interval_hits(v as u64, m, l, r) as u128).sum()
}

/// `M_F(H,R)` with box offsets `K` and interval offset `L`.
pub fn count_mf(f: &Polynomial, offsets: &[i64], l: i64, h: u64, r: u64, budget: &Budget) -> Result<CountResult, CountError> {
    let start = Stopwatch::start();
    if r == 0 {
        return Err(CountError::Invalid("R must be at least 1".into()));
    }
    if l < 0 {
        return Err(CountError::Invalid("L must be nonnegative".into()));
    }
    let hist = residue_histogram(f, offsets, h, budget)?;
    let count = mf_from_histogram(&hist, l, r);
    Ok(timed(start, count, Domain::Mf { poly: f.to_string(), m: f.modulus(), offsets: offsets.to_vec(), l, h, r }))
}

fn cyclic_convolve(a: &[u128], b: &[u128]) -> Vec<u128> {
    let m = a.len();
    let mut out = vec![0u128; m];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[(i + j) % m] += x * y;
        }
    }
    out
}

/// `T(u,H)` for every residue `u`, indexed by `u`.
pub fn t_distribution(f: &Polynomial, h: u64, s: u32, budget: &Budget) -> Result<Vec<u128>, CountError> {
    let hist = residue_histogram(f, &vec![0; f.dims()], h, budget)?;
    Ok(t_from_histogram(&hist, s))
}

pub(crate) fn t_from_histogram(hist: &[u64], s: u32) -> Vec<u128> {
    let m = hist.len();
    let a: Vec<u128> = hist.iter().map(|&c| c as u128).collect();
    let mut plus = vec![0u128; m];
    plus[0] = 1;
    for _ in 0..s {
        plus = cyclic_convolve(&plus, &a);
    }
    // T(u) = sum_v plus(v) plus(v - u)
    (0..m).map(|u| (0..m).map(|v| plus[v] * plus[(v + m - u) % m]).sum()).collect()
}

/// `T(u,H)`.
pub fn count_t(f: &Polynomial, u: i64, h: u64, s: u32, budget: &Budget) -> Result<CountResult, CountError> {
    let start = Stopwatch::start();
    if s == 0 {
        return Err(CountError::Invalid("s must be at least 1".into()));
    }
    let dist = t_distribution(f, h, s, budget)?;
    let count = dist[u.rem_euclid(f.modulus() as i64) as usize];
    Ok(timed(start, count, Domain::T { poly: f.to_string(), m: f.modulus(), u, h, s }))
}

/// Power-sum differences `lambda_i`, indexed like [`iter_multiindices`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LambdaVector {
    pub k: u32,
    pub d: usize,
    pub entries: Vec<i128>,
}

impl LambdaVector {
    pub fn zero(k: u32, d: usize) -> Self {
        LambdaVector { k, d, entries: vec![0; index_count(k, d) as usize] }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&v| v == 0)
    }

    /// Checks `|lambda_i| <= s H^|i|`.
    pub fn within_range(&self, s: u32, h: u64) -> bool {
        iter_multiindices(self.k, self.d)
            .zip(&self.entries)
            .all(|(i, &v)| v.unsigned_abs() <= s as u128 * (h as u128).pow(i.weight()))
    }
}

/// `lambda_i = x_1^i + ... + x_s^i - x_(s+1)^i - ... - x_2s^i` for `1 <= |i| <= k`.
pub fn lambda_vector(tuple: &[Vec<i64>], k: u32) -> Result<LambdaVector, CountError> {
    if tuple.is_empty() || !tuple.len().is_multiple_of(2) {
        return Err(CountError::Invalid("tuple length must be even and positive".into()));
    }
    let d = tuple[0].len();
    if d == 0 || tuple.iter().any(|x| x.len() != d) {
        return Err(CountError::Invalid("points must share a positive dimension".into()));
    }
    if k == 0 {
        return Err(CountError::Invalid("k must be at least 1".into()));
    }
    let s = tuple.len() / 2;
    let entries = iter_multiindices(k, d)
        .map(|i| {
            let plus: i128 = tuple[..s].iter().map(|x| i.monomial_i128(x)).sum();
            let minus: i128 = tuple[s..].iter().map(|x| i.monomial_i128(x)).sum();
            plus - minus
        })
        .collect();
    Ok(LambdaVector { k, d, entries })
}

fn check_jargs(s: u32, k: u32, d: usize, h: u64, target: &[i64]) -> Result<(), CountError> {
    if s == 0 || k == 0 || d == 0 || h == 0 {
        return Err(CountError::Invalid("s, k, d, H must all be at least 1".into()));
    }
    let r = index_count(k, d) as usize;
    if target.len() != r {
        return Err(CountError::Invalid(format!("target needs {r} entries, got {}", target.len())));
    }
    Ok(())
}

fn grid_points(d: usize, h: u64) -> Vec<Vec<i64>> {
    (0..h.pow(d as u32)).map(|n| prefix_at(n, h, d).into_iter().map(|c| c as i64 + 1).collect()).collect()
}

/// `J_{s,k,d}(U,H)` by enumerating every `2s`-tuple: each pair of `s`-tuple
/// power sums is compared against the target.
pub fn count_j(s: u32, k: u32, d: usize, target: &[i64], h: u64, budget: &Budget) -> Result<CountResult, CountError> {
    let start = Stopwatch::start();
    check_jargs(s, k, d, h, target)?;
    budget.direct("direct J enumeration", (h as f64).powi((2 * s as usize * d) as i32))?;
    let indices: Vec<MultiIndex> = iter_multiindices(k, d).collect();
    let points = grid_points(d, h);
    let n = points.len() as u64;
    let tuples = n.pow(s);
    let sums: Vec<Vec<i128>> = (0..tuples)
        .map(|t| {
            let members = prefix_at(t, n, s as usize);
            indices.iter().map(|i| members.iter().map(|&p| i.monomial_i128(&points[p as usize])).sum()).collect()
        })
        .collect();
    let target: Vec<i128> = target.iter().map(|&v| v as i128).collect();
    let count: u128 = sums
        .par_iter()
        .map(|p| {
            sums.iter().filter(|q| p.iter().zip(q.iter()).zip(&target).all(|((a, b), u)| a - b == *u)).count() as u128
        })
        .sum();
    let domain = Domain::J { s, k, d, h, target: target.iter().map(|&v| v as i64).collect(), method: JMethod::Direct };
    Ok(timed(start, count, domain))
}

/// Multiplicities `c_v` of the power-sum vectors `v_i = x_1^i + ... + x_s^i`
/// over `s`-tuples of points of `[1,H]^d`, sorted by `v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignatureTable {
    pub s: u32,
    pub k: u32,
    pub d: usize,
    pub h: u64,
    entries: Vec<(Vec<i64>, u64)>,
    index: HashMap<Vec<i64>, u64>,
}

impl SignatureTable {
    /// Builds the table one point at a time: `c^(t+1)[v + x^.] += c^(t)[v]`.
    pub fn build(s: u32, k: u32, d: usize, h: u64, budget: &Budget) -> Result<SignatureTable, CountError> {
        check_jargs(s, k, d, h, &vec![0; index_count(k, d) as usize])?;
        let weights: Vec<u32> = iter_multiindices(k, d).map(|i| i.weight()).collect();
        let exps: Vec<Vec<u32>> = iter_multiindices(k, d).map(|i| i.exponents().to_vec()).collect();
        let max_entry = (s as f64) * (h as f64).powi(*weights.iter().max().unwrap_or(&1) as i32);
        if max_entry >= 2f64.powi(62) {
            return Err(CountError::Invalid("power sums overflow 64 bits".into()));
        }
        let monomials: Vec<Vec<i64>> = grid_points(d, h)
            .iter()
            .map(|x| exps.iter().map(|e| e.iter().zip(x).map(|(&p, &c)| c.pow(p)).product()).collect())
            .collect();
        budget.check("signature table", monomials.len() as f64, budget.table)?;
        let mut table: Vec<(Vec<i64>, u64)> = vec![(vec![0; weights.len()], 1)];
        for _ in 0..s {
            let work = table.len() as f64 * monomials.len() as f64;
            budget.direct("signature table step", work)?;
            let merged = table
                .par_chunks(1024)
                .map(|chunk| {
                    let mut local: HashMap<Vec<i64>, u64> = HashMap::new();
                    for (v, c) in chunk {
                        for mono in &monomials {
                            let key: Vec<i64> = v.iter().zip(mono).map(|(a, b)| a + b).collect();
                            *local.entry(key).or_insert(0) += c;
                        }
                    }
                    local
                })
                .reduce(HashMap::new, |mut a, b| {
                    if a.len() < b.len() {
                        return merge_into(b, a);
                    }
                    for (k, v) in b {
                        *a.entry(k).or_insert(0) += v;
                    }
                    a
                });
            budget.check("signature table", merged.len() as f64, budget.table)?;
            table = merged.into_iter().collect();
            table.sort_unstable();
        }
        let index = table.iter().cloned().collect();
        Ok(SignatureTable { s, k, d, h, entries: table, index })
    }

    pub fn entries(&self) -> &[(Vec<i64>, u64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `J(U) = sum_v c_v c_(v - U)`.
    pub fn j(&self, target: &[i64]) -> u128 {
        let mut key = vec![0i64; target.len()];
        self.entries
            .iter()
            .map(|(v, c)| {
                for ((slot, a), u) in key.iter_mut().zip(v).zip(target) {
                    *slot = a - u;
                }
                self.index.get(&key).map_or(0, |&c2| *c as u128 * c2 as u128)
            })
            .sum()
    }

    /// `J(0) = sum_v c_v^2`.
    pub fn j_zero(&self) -> u128 {
        self.entries.iter().map(|(_, c)| (*c as u128).pow(2)).sum()
    }
}

fn merge_into(mut big: HashMap<Vec<i64>, u64>, small: HashMap<Vec<i64>, u64>) -> HashMap<Vec<i64>, u64> {
    for (k, v) in small {
        *big.entry(k).or_insert(0) += v;
    }
    big
}

/// `J_{s,k,d}(U,H)` through the signature table of `s`-tuples.
pub fn count_j_convolution(
    s: u32,
    k: u32,
    d: usize,
    target: &[i64],
    h: u64,
    budget: &Budget,
) -> Result<CountResult, CountError> {
    let start = Stopwatch::start();
    check_jargs(s, k, d, h, target)?;
    let table = SignatureTable::build(s, k, d, h, budget)?;
    let count = table.j(target);
    let domain = Domain::J { s, k, d, h, target: target.to_vec(), method: JMethod::Convolution };
    Ok(timed(start, count, domain))
}

/// Exact size of the target set together with the closed-form bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct USetCount {
    /// Number of integer vectors `U` with `|u_i| <= s H^|i|` and `sum beta_i u_i = u mod m`.
    pub exact: u128,
    /// `(2s+1)^(r-1) H^(K-k) (1 + (2s+1) H^k / m)`.
    pub bound: f64,
    /// Exact comparison `exact * m <= (2s+1)^(r-1) H^(K-k) (m + (2s+1) H^k)`.
    pub within_bound: bool,
}

/// Coefficients `beta_i` for `1 <= |i| <= k`, indexed like [`iter_multiindices`].
pub fn linear_coefficients(f: &Polynomial, k: u32) -> Vec<u64> {
    iter_multiindices(k, f.dims()).map(|i| f.coefficient(&i)).collect()
}

/// Number of targets `U` for every residue `u`, by folding each coordinate's
/// range into residue classes.
pub(crate) fn uset_distribution(betas: &[u64], weights: &[u32], m: u64, s: u32, h: u64) -> Vec<u128> {
    let mu = m as usize;
    let mut dist = vec![0u128; mu];
    dist[0] = 1;
    for (&beta, &w) in betas.iter().zip(weights) {
        let bound = s as i128 * (h as i128).pow(w);
        // classes of u_i in [-bound, bound] modulo m
        let mut classes = vec![0u128; mu];
        let total = 2 * bound + 1;
        let base = (total / m as i128) as u128;
        let extra = (total % m as i128) as i64;
        for t in 0..mu {
            classes[t] = base;
        }
        for e in 0..extra {
            classes[((-bound) as i64 + e).rem_euclid(m as i64) as usize] += 1;
        }
        let mut step = vec![0u128; mu];
        for (t, &c) in classes.iter().enumerate() {
            step[mul_mod(beta, t as u64, m) as usize] += c;
        }
        dist = cyclic_convolve(&dist, &step);
    }
    dist
}

pub(crate) fn uset_bound_parts(s: u32, k: u32, d: usize, h: u64, m: u64) -> (num_bigint::BigUint, num_bigint::BigUint) {
    use num_bigint::BigUint;
    let r = index_count(k, d) as u32;
    let big_k = crate::poly::weight_sum(k, d) as u32;
    let two_s1 = BigUint::from(2 * s as u64 + 1);
    let hb = BigUint::from(h);
    let factor = two_s1.pow(r - 1) * hb.pow(big_k - k);
    let tail = BigUint::from(m) + two_s1 * hb.pow(k);
    (factor, tail)
}

/// `#U` for the congruence `sum beta_i u_i = u mod m`, with the closed-form bound (read with `g = 1`).
pub fn uset_cardinality(f: &Polynomial, u: i64, h: u64, s: u32) -> Result<USetCount, CountError> {
    let k = f.degree();
    if k < 2 {
        return Err(CountError::Invalid(format!("degree {k} < 2")));
    }
    if s == 0 || h == 0 {
        return Err(CountError::Invalid("s and H must be at least 1".into()));
    }
    let g = f.leading_gcd()?;
    if g != 1 {
        return Err(CountError::Invalid(format!("g_F = {g}, expected 1")));
    }
    let m = f.modulus();
    let d = f.dims();
    let weights: Vec<u32> = iter_multiindices(k, d).map(|i| i.weight()).collect();
    let dist = uset_distribution(&linear_coefficients(f, k), &weights, m, s, h);
    let exact = dist[u.rem_euclid(m as i64) as usize];
    let (factor, tail) = uset_bound_parts(s, k, d, h, m);
    let within_bound = num_bigint::BigUint::from(exact) * m <= &factor * &tail;
    let r = index_count(k, d) as i32;
    let big_k = crate::poly::weight_sum(k, d) as i32;
    let bound = (2.0 * s as f64 + 1.0).powi(r - 1)
        * (h as f64).powi(big_k - k as i32)
        * (1.0 + (2.0 * s as f64 + 1.0) * (h as f64).powi(k as i32) / m as f64);
    Ok(USetCount { exact, bound, within_bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn poly(text: &str, m: u64) -> Polynomial {
        Polynomial::parse(text, m).unwrap()
    }

    fn brute_nf(f: &Polynomial, region: &Region) -> u128 {
        let m = f.modulus();
        let d = f.dims();
        let mut n = 0;
        for idx in 0..m.pow(d as u32) {
            let x = prefix_at(idx, m, d);
            let p: Vec<f64> = x.iter().map(|&c| c as f64 / m as f64).collect();
            if f.evaluate_residues(&x) == 0 && region.contains(&p).unwrap() {
                n += 1;
            }
        }
        n
    }

    #[test]
    fn nf_examples() {
        let full = Region::unit_cube(2).unwrap();
        assert_eq!(count_nf(&poly("x1^2+x2^2", 5), &full).unwrap().count, 9);
        let one = Polynomial::parse_with_dims("1", 7, 2).unwrap();
        assert_eq!(count_nf(&one, &full).unwrap().count, 0);
        let zero = Polynomial::zero(7, 3).unwrap();
        assert_eq!(count_nf(&zero, &Region::unit_cube(3).unwrap()).unwrap().count, 343);
        assert!(count_nf(&poly("x1^2+x2^2", 5), &Region::unit_cube(3).unwrap()).is_err());
    }

    #[test]
    fn nf_matches_brute_force() {
        let regions2 = vec![
            Region::unit_cube(2).unwrap(),
            Region::ball(vec![0.5, 0.5], 0.3).unwrap(),
            Region::boxed(vec![0.0, 0.2], vec![0.5, 0.8]).unwrap(),
            Region::random_polytope(2, 10, 4).unwrap(),
            Region::ellipsoid(vec![0.5, 0.5], vec![0.45, 0.2]).unwrap(),
            Region::oracle_wrapping(&Region::ball(vec![0.5, 0.5], 0.3).unwrap(), false).unwrap(),
        ];
        let polys = ["x1^2+x2^2-1", "3*x1*x2+x2+2", "x1^3-x2", "x2", "2*x2^2+x1", "x1^2*x2^2+x2^3"];
        for m in [5u64, 12, 30, 31] {
            for text in polys {
                let f = Polynomial::parse_with_dims(text, m, 2).unwrap();
                for r in &regions2 {
                    assert_eq!(count_nf(&f, r).unwrap().count, brute_nf(&f, r), "{text} mod {m} on {}", r.describe());
                }
            }
        }
        let ball3 = Region::ball(vec![0.5, 0.5, 0.5], 0.3).unwrap();
        let f = poly("x1^2+x2^2-x3", 23);
        assert_eq!(count_nf(&f, &ball3).unwrap().count, brute_nf(&f, &ball3));
        let f = Polynomial::parse_with_dims("x1^2+5", 17, 1).unwrap();
        let seg = Region::boxed(vec![0.1], vec![0.77]).unwrap();
        assert_eq!(count_nf(&f, &seg).unwrap().count, brute_nf(&f, &seg));
    }

    #[test]
    fn nf_is_invariant_under_variable_permutation() {
        let f = poly("x1^2+3*x2^3-x3+x1*x3", 19);
        let lo = [0.1, 0.0, 0.3];
        let hi = [0.9, 0.5, 0.8];
        let base = count_nf(&f, &Region::boxed(lo.to_vec(), hi.to_vec()).unwrap()).unwrap().count;
        for perm in [[1, 0, 2], [2, 1, 0], [1, 2, 0]] {
            let g = f.permute_variables(&perm);
            // variable i of f becomes variable perm[i] of g
            let mut plo = [0.0; 3];
            let mut phi = [0.0; 3];
            for i in 0..3 {
                plo[perm[i]] = lo[i];
                phi[perm[i]] = hi[i];
            }
            let r = Region::boxed(plo.to_vec(), phi.to_vec()).unwrap();
            assert_eq!(count_nf(&g, &r).unwrap().count, base, "{perm:?}");
        }
    }

    #[test]
    fn roots_by_differences_match_evaluation() {
        let m = 29;
        let coeffs = [3u64, 0, 7, 1, 28];
        let eval = |t: i64| coeffs.iter().rev().fold(0u64, |acc, &c| (acc * (t.rem_euclid(m as i64) as u64) + c) % m);
        for (a, b) in [(0, 28), (3, 17), (5, 4), (10, 10)] {
            let direct = (a..=b).filter(|&t| eval(t) == 0).count() as u64;
            assert_eq!(count_roots(&coeffs, m, a, b), direct);
        }
        for c1 in 0..12u64 {
            for c0 in 0..12u64 {
                let direct = (0..12).filter(|&t| (c1 * t + c0) % 12 == 0).count() as u64;
                assert_eq!(count_roots(&[c0, c1], 12, 0, 11), direct, "{c1} t + {c0}");
            }
        }
    }

    #[test]
    fn mf_examples() {
        let b = Budget::default();
        let f = Polynomial::parse_with_dims("x1^2", 7, 1).unwrap();
        assert_eq!(count_mf(&f, &[0], 0, 3, 1, &b).unwrap().count, 1);
        let g = poly("x1^2+3*x1*x2+x2", 11);
        for h in [1u64, 4, 9] {
            assert_eq!(count_mf(&g, &[0, 0], 0, h, 11, &b).unwrap().count, (h * h) as u128);
            assert_eq!(count_mf(&g, &[2, 5], 3, h, 11, &b).unwrap().count, (h * h) as u128);
        }
        for (k, l) in [([0, 0], 0), ([1, 4], 2), ([3, 0], 5)] {
            let a = count_mf(&g, &k, l, 5, 3, &b).unwrap().count;
            let shifted = count_mf(&g, &[k[0] + 11, k[1] + 11], l + 11, 5, 3, &b).unwrap().count;
            assert_eq!(a, shifted);
        }
        assert!(count_mf(&g, &[0], 0, 3, 1, &b).is_err());
    }

    #[test]
    fn mf_matches_brute_force() {
        let f = poly("2*x1^2+x2^3+x1+4", 13);
        let b = Budget::default();
        for (h, r, l, k) in [(4u64, 1u64, 0i64, [0i64, 0]), (6, 20, 3, [2, 1]), (5, 13, 0, [0, 7])] {
            let mut n = 0u128;
            for x1 in k[0] + 1..=k[0] + h as i64 {
                for x2 in k[1] + 1..=k[1] + h as i64 {
                    let v = f.evaluate(&[x1, x2]).unwrap() as i64;
                    n += (l + 1..=l + r as i64).filter(|y| (y - v).rem_euclid(13) == 0).count() as u128;
                }
            }
            assert_eq!(count_mf(&f, &k, l, h, r, &b).unwrap().count, n);
        }
    }

    fn brute_t(f: &Polynomial, h: u64, s: u32) -> Vec<u128> {
        let m = f.modulus();
        let pts = grid_points(f.dims(), h);
        let vals: Vec<u64> = pts.iter().map(|x| f.evaluate(x).unwrap()).collect();
        let n = vals.len() as u64;
        let mut out = vec![0u128; m as usize];
        for t in 0..n.pow(2 * s) {
            let idx = prefix_at(t, n, 2 * s as usize);
            let mut acc = 0i64;
            for (j, &p) in idx.iter().enumerate() {
                let v = vals[p as usize] as i64;
                acc += if j < s as usize { v } else { -v };
            }
            out[acc.rem_euclid(m as i64) as usize] += 1;
        }
        out
    }

    #[test]
    fn t_examples_and_brute_force() {
        let b = Budget::default();
        let zero = Polynomial::zero(7, 2).unwrap();
        assert_eq!(count_t(&zero, 3, 3, 1, &b).unwrap().count, 0);
        assert_eq!(count_t(&zero, 0, 3, 2, &b).unwrap().count, 3u128.pow(8));
        let f = poly("x1^2+2*x1*x2+3", 9);
        for (h, s) in [(3u64, 1u32), (2, 2), (3, 2)] {
            let dist = t_distribution(&f, h, s, &b).unwrap();
            assert_eq!(dist, brute_t(&f, h, s));
            assert_eq!(dist.iter().sum::<u128>(), (h as u128).pow(4 * s));
        }
        assert!(count_t(&f, 0, 3, 0, &b).is_err());
    }

    #[test]
    fn lambda_examples() {
        let lv = lambda_vector(&[vec![3], vec![1]], 2).unwrap();
        assert_eq!(lv.entries, vec![2, 8]);
        let lv = lambda_vector(&[vec![5], vec![2]], 1).unwrap();
        assert_eq!(lv.entries, vec![3]);
        let tuple = vec![vec![1, 2], vec![3, 4], vec![1, 2], vec![3, 4]];
        assert!(lambda_vector(&tuple, 3).unwrap().is_zero());
        assert!(lambda_vector(&[vec![1]], 2).is_err());
    }

    #[test]
    fn j_examples() {
        let b = Budget::default();
        for (s, k, d) in [(1u32, 1u32, 1usize), (2, 2, 1), (1, 2, 2), (2, 1, 2)] {
            let r = index_count(k, d) as usize;
            assert_eq!(count_j(s, k, d, &vec![0; r], 1, &b).unwrap().count, 1);
            let mut u = vec![0; r];
            u[0] = 1;
            assert_eq!(count_j(s, k, d, &u, 1, &b).unwrap().count, 0);
        }
        for h in 1..=9u64 {
            assert_eq!(count_j(1, 1, 1, &[0], h, &b).unwrap().count, h as u128);
            assert_eq!(count_j(1, 2, 1, &[0, 0], h, &b).unwrap().count, h as u128);
        }
        for h in 1..=12u64 {
            let expected = (2 * h.pow(3) + h) as u128 / 3;
            assert_eq!(count_j(2, 1, 1, &[0], h, &b).unwrap().count, expected);
            assert_eq!(count_j_convolution(2, 1, 1, &[0], h, &b).unwrap().count, expected);
        }
    }

    #[test]
    fn convolution_matches_direct() {
        let b = Budget::default();
        for (s, k, d, h) in [(1u32, 2u32, 2usize, 4u64), (2, 2, 1, 6), (2, 3, 1, 5), (2, 2, 2, 3), (3, 2, 1, 4)] {
            let table = SignatureTable::build(s, k, d, h, &b).unwrap();
            let r = index_count(k, d) as usize;
            let mut targets = vec![vec![0i64; r]];
            // realised lambda vectors plus one unreachable target
            for (v, _) in table.entries().iter().take(4) {
                let (w, _) = &table.entries()[table.len() - 1];
                targets.push(v.iter().zip(w).map(|(a, c)| a - c).collect());
            }
            targets.push(vec![1_000_000; r]);
            for u in &targets {
                let direct = count_j(s, k, d, u, h, &b).unwrap().count;
                let conv = count_j_convolution(s, k, d, u, h, &b).unwrap().count;
                assert_eq!(direct, conv, "s={s} k={k} d={d} H={h} U={u:?}");
            }
            assert_eq!(table.j_zero(), table.j(&vec![0; r]));
        }
    }

    #[test]
    fn budgets_are_enforced() {
        let tight = Budget { direct: 1000, table: 50 };
        assert!(matches!(count_j(2, 2, 1, &[0, 0], 10, &tight), Err(CountError::Budget { .. })));
        assert!(matches!(count_j_convolution(2, 2, 2, &[0; 5], 10, &tight), Err(CountError::Budget { .. })));
        let f = poly("x1^2+x2", 7);
        assert!(matches!(count_t(&f, 0, 100, 1, &tight), Err(CountError::Budget { .. })));
    }

    fn brute_uset(betas: &[u64], weights: &[u32], m: u64, s: u32, h: u64, u: i64) -> u128 {
        let bounds: Vec<i64> = weights.iter().map(|&w| s as i64 * (h as i64).pow(w)).collect();
        let mut count = 0u128;
        let mut cur: Vec<i64> = bounds.iter().map(|b| -b).collect();
        loop {
            let sum: i128 = cur.iter().zip(betas).map(|(&x, &b)| x as i128 * b as i128).sum();
            if (sum - u as i128).rem_euclid(m as i128) == 0 {
                count += 1;
            }
            let mut i = 0;
            loop {
                if i == cur.len() {
                    return count;
                }
                if cur[i] < bounds[i] {
                    cur[i] += 1;
                    break;
                }
                cur[i] = -bounds[i];
                i += 1;
            }
        }
    }

    #[test]
    fn uset_examples() {
        let f = Polynomial::parse_with_dims("x1^2", 5, 1).unwrap();
        for u in 0..5 {
            let c = uset_cardinality(&f, u, 2, 1).unwrap();
            // u_1 in [-2,2], u_2 in [-4,4] with u_2 = u mod 5
            let direct = (-2..=2).flat_map(|_| -4..=4i64).filter(|v| (v - u).rem_euclid(5) == 0).count() as u128;
            assert_eq!(c.exact, direct);
            assert!(c.within_bound);
        }
        let linear = Polynomial::parse_with_dims("x1", 5, 1).unwrap();
        assert!(uset_cardinality(&linear, 0, 2, 1).is_err());
        let non_unit = poly("2*x1^2+4*x2^2", 8);
        assert!(uset_cardinality(&non_unit, 0, 2, 1).is_err());
        let f = poly("3*x1^2+x1*x2+2*x2", 7);
        let weights: Vec<u32> = iter_multiindices(2, 2).map(|i| i.weight()).collect();
        for u in 0..7 {
            let c = uset_cardinality(&f, u, 2, 1).unwrap();
            assert_eq!(c.exact, brute_uset(&linear_coefficients(&f, 2), &weights, 7, 1, 2, u));
            assert!(c.within_bound && (c.exact as f64) <= c.bound);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn lambda_entries_stay_in_range(s in 1usize..4, k in 1u32..4, d in 1usize..3, h in 1i64..7, seed in any::<u64>()) {
            let mut state = seed;
            let mut next = || { state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407); (state >> 33) as i64 };
            let tuple: Vec<Vec<i64>> = (0..2 * s).map(|_| (0..d).map(|_| 1 + next().rem_euclid(h)).collect()).collect();
            let lv = lambda_vector(&tuple, k).unwrap();
            prop_assert!(lv.within_range(s as u32, h as u64));
        }

        #[test]
        fn t_sums_to_all_tuples(coeffs in proptest::collection::vec(0u64..20, 3), m in 3u64..20, h in 1u64..5, s in 1u32..3) {
            let f = Polynomial::from_terms(m, 1, [(vec![2], coeffs[0] as i128), (vec![1], coeffs[1] as i128), (vec![0], coeffs[2] as i128)]).unwrap();
            let dist = t_distribution(&f, h, s, &Budget::default()).unwrap();
            prop_assert_eq!(dist.iter().sum::<u128>(), (h as u128).pow(2 * s));
        }

        #[test]
        fn mf_with_full_period_is_box_size(m in 3u64..30, h in 1u64..8, l in 0i64..40, c in 0u64..30) {
            let f = Polynomial::from_terms(m, 2, [(vec![2, 0], 1), (vec![1, 1], c as i128), (vec![0, 1], 1)]).unwrap();
            let n = count_mf(&f, &[0, 0], l, h, m, &Budget::default()).unwrap().count;
            prop_assert_eq!(n, (h * h) as u128);
        }
    }
}
