//! Exact checks of the inequality chain behind the box bound:
//!
//! 1. `M_F(H,R)^(2s) <= (1 + 2sR) T(u,H)` for some integer `|u| <= sR`;
//! 2. `T(u,H) <= sum over U in the target set of J(U,H)`;
//! 3. `J(U,H) <= J(0,H)` for every `U`;
//! 4. `M_F(H,R)^(2s) <= (1+2sR) (2s+1)^(r-1) H^(K-k) (1 + (2s+1) H^k / m) J(0,H)`.
//!
//! `T` is computed from values of `F`; the right side of link 2 from the
//! power-sum signatures of `s`-tuples, folded by the coefficients of `F`.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    linear_coefficients, mf_from_histogram, residue_histogram, t_from_histogram, uset_bound_parts, uset_distribution, Budget,
    CountError, SignatureTable,
};
use crate::poly::{index_count, iter_multiindices, mul_mod, Polynomial};

/// Random polynomial of degree exactly `k` in `d` variables mod `m` with a
/// unit coefficient among the top-weight terms (so `g_F = 1`).
pub fn random_polynomial(m: u64, d: usize, k: u32, seed: u64) -> Polynomial {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut terms: Vec<(Vec<u32>, i128)> = Vec::new();
    terms.push((vec![0; d], rng.random_range(0..m) as i128));
    let mut top = Vec::new();
    for i in iter_multiindices(k, d) {
        let c = rng.random_range(0..m);
        if i.weight() == k {
            top.push(terms.len());
        }
        terms.push((i.exponents().to_vec(), c as i128));
    }
    let unit = |c: i128| num_integer::gcd(c as u64, m) == 1;
    if !top.iter().any(|&t| unit(terms[t].1)) {
        let pick = top[rng.random_range(0..top.len())];
        let units: Vec<u64> = (1..m).filter(|&c| num_integer::gcd(c, m) == 1).collect();
        terms[pick].1 = units[rng.random_range(0..units.len())] as i128;
    }
    Polynomial::from_terms(m, d, terms).expect("valid terms")
}

/// Quantities of `J_{s,k,d}(., H)` shared by every polynomial.
#[derive(Debug)]
pub struct JStats {
    pub s: u32,
    pub k: u32,
    pub d: usize,
    pub h: u64,
    pub table: SignatureTable,
    pub j0: u128,
    /// `max_U J(U,H)` over all targets.
    pub max_j: u128,
    /// Number of targets `U` with `J(U,H) > 0`.
    pub support: usize,
    /// Every realised `U` satisfies `|u_i| <= s H^|i|`.
    pub lambda_range_ok: bool,
}

impl JStats {
    pub fn compute(s: u32, k: u32, d: usize, h: u64, budget: &Budget) -> Result<JStats, CountError> {
        let table = SignatureTable::build(s, k, d, h, budget)?;
        let n = table.len() as f64;
        budget.direct("J autocorrelation", n * n)?;
        let entries = table.entries();
        let r = index_count(k, d) as usize;
        let all: HashMap<Vec<i64>, u128> = entries
            .par_iter()
            .fold(HashMap::new, |mut acc: HashMap<Vec<i64>, u128>, (v, c)| {
                for (w, c2) in entries {
                    let u: Vec<i64> = v.iter().zip(w).map(|(a, b)| a - b).collect();
                    *acc.entry(u).or_insert(0) += *c as u128 * *c2 as u128;
                }
                acc
            })
            .reduce(HashMap::new, |mut a, b| {
                for (key, v) in b {
                    *a.entry(key).or_insert(0) += v;
                }
                a
            });
        let j0 = table.j_zero();
        let max_j = all.values().copied().max().unwrap_or(0);
        let weights: Vec<u32> = iter_multiindices(k, d).map(|i| i.weight()).collect();
        let lambda_range_ok = (0..r).all(|i| {
            let lo = entries.iter().map(|(v, _)| v[i]).min().unwrap_or(0);
            let hi = entries.iter().map(|(v, _)| v[i]).max().unwrap_or(0);
            (hi - lo) as u128 <= s as u128 * (h as u128).pow(weights[i])
        });
        Ok(JStats { s, k, d, h, j0, max_j, support: all.len(), lambda_range_ok, table })
    }

    /// `S(u) = sum over U with sum beta_i u_i = u mod m of J(U,H)`, for every residue `u`.
    pub fn folded(&self, betas: &[u64], m: u64) -> Vec<u128> {
        let mu = m as usize;
        let mut w = vec![0u128; mu];
        for (v, c) in self.table.entries() {
            let rho = v.iter().zip(betas).fold(0u64, |acc, (&x, &b)| (acc + mul_mod(x.rem_euclid(m as i64) as u64, b, m)) % m);
            w[rho as usize] += *c as u128;
        }
        (0..mu).map(|u| (0..mu).map(|rho| w[rho] * w[(rho + mu - u) % mu]).sum()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub poly: String,
    pub m: u64,
    pub d: usize,
    pub k: u32,
    pub s: u32,
    pub h: u64,
    pub big_r: u64,
    /// `M_F(H,R)` with zero offsets.
    pub m_count: u128,
    /// `max T(u,H)` over integers `|u| <= sR`, and the first maximiser.
    pub t_max: u128,
    pub t_argmax: i64,
    pub link1: bool,
    /// `T(u,H) <= S(u)` for every residue `u`.
    pub link2: bool,
    /// `T(u,H) = S(u)` for every residue (the target set captures every tuple).
    pub link2_tight: bool,
    pub monotone: bool,
    pub lambda_range: bool,
    pub j0: u128,
    /// `max_u #U(u)` and whether every residue meets the closed-form bound.
    pub uset_max: u128,
    pub uset_ok: bool,
    pub master: bool,
    /// `m M^(2s)` and `m` times the right side of the master inequality.
    pub master_lhs: String,
    pub master_rhs: String,
}

impl ChainReport {
    pub fn passed(&self) -> bool {
        self.link1 && self.link2 && self.monotone && self.lambda_range && self.uset_ok && self.master
    }

    pub fn instance(&self) -> String {
        format!("F={} m={} d={} k={} s={} H={} R={}", self.poly, self.m, self.d, self.k, self.s, self.h, self.big_r)
    }
}

impl fmt::Display for ChainReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = |b: bool| if b { "ok" } else { "VIOLATED" };
        writeln!(f, "{}", self.instance())?;
        writeln!(f, "  M_F(H,R)          = {}", self.m_count)?;
        writeln!(f, "  max T(u,H)        = {} at u = {}", self.t_max, self.t_argmax)?;
        writeln!(f, "  J(0,H)            = {}", self.j0)?;
        writeln!(f, "  max #U(u)         = {}", self.uset_max)?;
        writeln!(f, "  link 1 (M vs T)   : {}", mark(self.link1))?;
        writeln!(f, "  link 2 (T vs J)   : {}{}", mark(self.link2), if self.link2_tight { " (equality)" } else { "" })?;
        writeln!(f, "  J(U) <= J(0)      : {}", mark(self.monotone))?;
        writeln!(f, "  lambda range      : {}", mark(self.lambda_range))?;
        writeln!(f, "  #U bound          : {}", mark(self.uset_ok))?;
        writeln!(f, "  master inequality : {} ({} <= {})", mark(self.master), self.master_lhs, self.master_rhs)
    }
}

type JKey = (u32, u32, usize, u64);

/// Runs chain checks, caching `J` statistics per `(s, k, d, H)`.
#[derive(Debug, Default)]
pub struct ChainVerifier {
    budget: Budget,
    cache: Mutex<HashMap<JKey, Arc<JStats>>>,
}

impl ChainVerifier {
    pub fn new(budget: Budget) -> Self {
        ChainVerifier { budget, cache: Mutex::new(HashMap::new()) }
    }

    pub fn stats(&self, s: u32, k: u32, d: usize, h: u64) -> Result<Arc<JStats>, CountError> {
        let key = (s, k, d, h);
        if let Some(found) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(found.clone());
        }
        let stats = Arc::new(JStats::compute(s, k, d, h, &self.budget)?);
        Ok(self.cache.lock().expect("cache lock").entry(key).or_insert(stats).clone())
    }

    pub fn verify(&self, f: &Polynomial, h: u64, big_r: u64, s: u32) -> Result<ChainReport, CountError> {
        if s == 0 {
            return Err(CountError::Invalid("s must be at least 1".into()));
        }
        if h == 0 || big_r == 0 {
            return Err(CountError::Invalid("H and R must be at least 1".into()));
        }
        let k = f.degree();
        if k < 2 {
            return Err(CountError::Invalid(format!("degree {k} < 2")));
        }
        let g = f.leading_gcd()?;
        if g != 1 {
            return Err(CountError::Invalid(format!("g_F = {g}, expected 1")));
        }
        let m = f.modulus();
        let d = f.dims();
        let stats = self.stats(s, k, d, h)?;

        let hist = residue_histogram(f, &vec![0; d], h, &self.budget)?;
        let m_count = mf_from_histogram(&hist, 0, big_r);
        let t = t_from_histogram(&hist, s);

        // link 1: integer u in [-sR, sR]
        let span = s as i128 * big_r as i128;
        let (t_max, t_argmax) = if 2 * span + 1 >= m as i128 {
            let (u, &best) = t.iter().enumerate().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0))).expect("m >= 1");
            (best, u as i64)
        } else {
            let mut best = (0u128, 0i64);
            for u in -span..=span {
                let v = t[u.rem_euclid(m as i128) as usize];
                if v > best.0 {
                    best = (v, u as i64);
                }
            }
            best
        };
        let lhs = BigUint::from(m_count).pow(2 * s);
        let factor = BigUint::from(1 + 2 * s as u64 * big_r);
        let link1 = lhs <= &factor * t_max;

        let betas = linear_coefficients(f, k);
        let folded = stats.folded(&betas, m);
        let link2 = stats.lambda_range_ok && t.iter().zip(&folded).all(|(a, b)| a <= b);
        let link2_tight = t == folded;

        let weights: Vec<u32> = iter_multiindices(k, d).map(|i| i.weight()).collect();
        let uset = uset_distribution(&betas, &weights, m, s, h);
        let (bound_factor, bound_tail) = uset_bound_parts(s, k, d, h, m);
        let uset_cap = &bound_factor * &bound_tail;
        let uset_ok = uset.iter().all(|&c| BigUint::from(c) * m <= uset_cap);
        let uset_max = uset.iter().copied().max().unwrap_or(0);

        let master_lhs = &lhs * m;
        let master_rhs = factor * uset_cap * stats.j0;
        let master = master_lhs <= master_rhs;

        Ok(ChainReport {
            poly: f.to_string(),
            m,
            d,
            k,
            s,
            h,
            big_r,
            m_count,
            t_max,
            t_argmax,
            link1,
            link2,
            link2_tight,
            monotone: stats.max_j <= stats.j0,
            lambda_range: stats.lambda_range_ok,
            j0: stats.j0,
            uset_max,
            uset_ok,
            master,
            master_lhs: master_lhs.to_string(),
            master_rhs: master_rhs.to_string(),
        })
    }
}

/// How `R` is chosen in a grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RChoice {
    One,
    H,
    M,
}

impl RChoice {
    pub fn value(self, h: u64, m: u64) -> u64 {
        match self {
            RChoice::One => 1,
            RChoice::H => h,
            RChoice::M => m,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            RChoice::One => "1",
            RChoice::H => "H",
            RChoice::M => "m",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainGrid {
    pub dims: Vec<usize>,
    pub degrees: Vec<u32>,
    pub moduli: Vec<u64>,
    pub heights: Vec<u64>,
    pub r_choices: Vec<RChoice>,
    pub s_values: Vec<u32>,
    pub polys_per_cell: usize,
    pub seed: u64,
}

impl Default for ChainGrid {
    /// `d <= 2`, `k in {2,3}`, `5 <= m <= 30`, `2 <= H <= 6`, `R in {1, H, m}`, `s <= 2`.
    fn default() -> Self {
        ChainGrid {
            dims: vec![1, 2],
            degrees: vec![2, 3],
            moduli: (5..=30).collect(),
            heights: (2..=6).collect(),
            r_choices: vec![RChoice::One, RChoice::H, RChoice::M],
            s_values: vec![1, 2],
            polys_per_cell: 50,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub instances: u64,
    pub link1_violations: u64,
    pub link2_violations: u64,
    pub link2_strict: u64,
    pub monotone_violations: u64,
    pub uset_violations: u64,
    pub master_violations: u64,
    /// Failing instances, in grid order.
    pub failures: Vec<ChainReport>,
}

impl GridSummary {
    pub fn violations(&self) -> u64 {
        self.link1_violations + self.link2_violations + self.monotone_violations + self.uset_violations + self.master_violations
    }
}

fn cell_seed(seed: u64, parts: &[u64]) -> u64 {
    // splitmix64 over the cell coordinates
    parts.iter().fold(seed, |acc, &p| {
        let mut z = acc ^ p.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    })
}

/// Polynomial number `index` of the grid cell `(d, k, m, H, R, s)`.
pub fn cell_polynomial(grid: &ChainGrid, d: usize, k: u32, m: u64, h: u64, r: RChoice, s: u32, index: usize) -> Polynomial {
    let seed = cell_seed(grid.seed, &[d as u64, k as u64, m, h, r as u64, s as u64, index as u64]);
    random_polynomial(m, d, k, seed)
}

pub fn run_grid(grid: &ChainGrid, verifier: &ChainVerifier) -> Result<GridSummary, CountError> {
    if [grid.dims.is_empty(), grid.degrees.is_empty(), grid.moduli.is_empty(), grid.heights.is_empty()]
        .into_iter()
        .chain([grid.r_choices.is_empty(), grid.s_values.is_empty(), grid.polys_per_cell == 0])
        .any(|e| e)
    {
        return Err(CountError::Invalid("empty chain grid".into()));
    }
    if grid.s_values.contains(&0) {
        return Err(CountError::Invalid("s must be at least 1".into()));
    }
    if grid.moduli.iter().any(|&m| m < 3) {
        return Err(CountError::Invalid("moduli must be at least 3".into()));
    }
    let mut cells = Vec::new();
    for &d in &grid.dims {
        for &k in &grid.degrees {
            for &s in &grid.s_values {
                for &h in &grid.heights {
                    verifier.stats(s, k, d, h)?;
                    for &m in &grid.moduli {
                        for &r in &grid.r_choices {
                            cells.push((d, k, m, h, r, s));
                        }
                    }
                }
            }
        }
    }
    let reports: Vec<Vec<ChainReport>> = cells
        .par_iter()
        .map(|&(d, k, m, h, r, s)| {
            (0..grid.polys_per_cell)
                .map(|i| {
                    let f = cell_polynomial(grid, d, k, m, h, r, s, i);
                    verifier.verify(&f, h, r.value(h, m), s)
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;
    let mut summary = GridSummary {
        instances: 0,
        link1_violations: 0,
        link2_violations: 0,
        link2_strict: 0,
        monotone_violations: 0,
        uset_violations: 0,
        master_violations: 0,
        failures: Vec::new(),
    };
    for rep in reports.into_iter().flatten() {
        summary.instances += 1;
        summary.link1_violations += !rep.link1 as u64;
        summary.link2_violations += !rep.link2 as u64;
        summary.link2_strict += !rep.link2_tight as u64;
        summary.monotone_violations += !rep.monotone as u64;
        summary.uset_violations += !rep.uset_ok as u64;
        summary.master_violations += !rep.master as u64;
        if !rep.passed() {
            summary.failures.push(rep);
        }
    }
    Ok(summary)
}
