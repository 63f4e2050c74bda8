//! Anchored dyadic cube covers of a region.
//!
//! For a level `j` the grid `F(j)` consists of the closed cubes
//! `prod [a_i + u_i/j, a_i + (u_i+1)/j]` with integer offsets `u`, where the
//! anchor `a` has irrational coordinates. `C(j)` is the set of grid cubes whose
//! intersection with `[0,1]^d` lies inside `Omega_eps = {u in [0,1]^d :
//! dist(u, Omega) < eps}`, with `eps = 2 sqrt(d) / 2^M`. The cover consists of
//! `B_1 = C(2)` and, for `2 <= i <= M`, the cubes of `C(2^i)` not contained in
//! a cube of `C(2^(i-1))`.
//!
//! Cubes are clipped to `[0,1]^d`: a cube straddling the frontier of the unit
//! cube belongs to `C(j)` when its clipped part lies in `Omega_eps`. Without
//! clipping, points of `Omega` next to the frontier would not be covered.
//!
//! Dyadic levels nest exactly: the cube `u` at level `2j` lies in the cube
//! `floor(u/2)` at level `j`. The construction only classifies children of
//! cubes that are neither inside `Omega_eps` nor certainly disjoint from it.

use std::collections::HashSet;
use std::fmt::Write as _;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::regions::{accepted_points, MeasureEstimate, Region, RegionError, ShellSide};

/// Largest supported depth.
pub const MAX_DEPTH: u32 = 12;
/// Largest supported dimension.
pub const MAX_DIMS: usize = 6;
/// Fractional bits of each anchor coordinate.
pub const ANCHOR_BITS: u32 = 128;
const GUARD_BITS: u32 = 32;
const ANCHOR_PRIMES: [u64; MAX_DIMS] = [2, 3, 5, 7, 11, 13];
/// Face points per edge used for oracle containment tests.
const ORACLE_FACE_POINTS: usize = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoverError {
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error("depth M = {0} outside 1..={MAX_DEPTH}")]
    Depth(u32),
    #[error("dimension {0} outside 1..={MAX_DIMS}")]
    Dims(usize),
    #[error("level j must be at least 1")]
    Level,
    #[error("anchor precision {have} bits is insufficient for level {j} and modulus {m}: need more than {need}")]
    AnchorPrecision { have: u32, need: u32, j: u64, m: u64 },
    #[error("residue point {x}/{m} on axis {axis} lies within 2^-64 of a face at level {j}")]
    AnchorNotGeneric { axis: usize, x: u64, m: u64, j: u64 },
    #[error("cube containment is undecidable for {0}: the region has no signed distance")]
    Undecidable(String),
}

/// Fixed anchor `a_i = sqrt(p_i)/4` for the first primes, truncated to
/// [`ANCHOR_BITS`] fractional bits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Anchor {
    numerators: Vec<u128>,
    pub p_bits: u32,
}

impl Anchor {
    pub fn standard(dims: usize) -> Result<Anchor, CoverError> {
        if dims == 0 || dims > MAX_DIMS {
            return Err(CoverError::Dims(dims));
        }
        let numerators = ANCHOR_PRIMES[..dims]
            .iter()
            .map(|&p| {
                // floor(sqrt(p) / 4 * 2^128) = floor(sqrt(p * 2^256)) >> 2
                let root = (BigUint::from(p) << 256u32).sqrt() >> 2u32;
                u128::try_from(root).expect("sqrt(p)/4 < 1 for the anchor primes")
            })
            .collect();
        Ok(Anchor { numerators, p_bits: ANCHOR_BITS })
    }

    pub fn dims(&self) -> usize {
        self.numerators.len()
    }

    pub fn numerators(&self) -> &[u128] {
        &self.numerators
    }

    pub fn coordinate(&self, axis: usize) -> f64 {
        self.numerators[axis] as f64 * 2f64.powi(-(ANCHOR_BITS as i32))
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.dims()).map(|i| self.coordinate(i)).collect()
    }

    /// `floor(a_axis * j)`, exactly.
    fn floor_scaled(&self, axis: usize, j: u64) -> i64 {
        let a = self.numerators[axis];
        let (hi, lo) = (a >> 64, a & u64::MAX as u128);
        let j = j as u128;
        let low = lo * j;
        let floor = (hi * j + (low >> 64)) >> 64;
        debug_assert!(((hi * j) << 64).wrapping_add(low) != 0, "a * j is not an integer");
        floor as i64
    }

    /// Offsets `u` along `axis` whose interval at level `j` meets `[0,1]`.
    pub fn offset_range(&self, axis: usize, j: u64) -> (i64, i64) {
        let f = self.floor_scaled(axis, j);
        // a j is never an integer, so floor(-a j) = -f - 1 and floor((1-a) j) = j - f - 1
        (-f - 1, j as i64 - f - 1)
    }

    /// Checks `p_bits > log2(j_max * m) + 32`.
    pub fn check_precision(&self, j_max: u64, m: u64) -> Result<(), CoverError> {
        let need = ((j_max as f64) * (m.max(1) as f64)).log2().ceil() as u32 + GUARD_BITS;
        if self.p_bits > need {
            Ok(())
        } else {
            Err(CoverError::AnchorPrecision { have: self.p_bits, need, j: j_max, m })
        }
    }

    /// Exact check that no residue point `x/m`, `x in {0..m-1}`, lies within
    /// `2^(-p_bits/2)` of a cube face at any level `2^i`, `0 <= i <= max_level`.
    /// Returns the smallest distance found, as a multiple of that tolerance.
    pub fn assert_generic(&self, m: u64, max_level: u32) -> Result<f64, CoverError> {
        self.check_precision(1u64 << max_level, m)?;
        let scale = BigInt::from(1u8) << ANCHOR_BITS;
        let modulus = BigInt::from(m) * &scale;
        let half_bits = self.p_bits / 2;
        let mut worst = f64::INFINITY;
        for axis in 0..self.dims() {
            let a = BigInt::from(self.numerators[axis]);
            for level in 0..=max_level {
                let j = 1u64 << level;
                // distance from j (x/m - a) to the nearest integer, in units of 1/(m 2^128)
                let tolerance = (BigInt::from(m) * BigInt::from(j)) << (ANCHOR_BITS - half_bits);
                let step = BigInt::from(j) * &scale;
                let mut r = (-(BigInt::from(j) * BigInt::from(m) * &a)).mod_floor(&modulus);
                for x in 0..m {
                    let dist = std::cmp::min(r.clone(), &modulus - &r);
                    if dist < tolerance {
                        return Err(CoverError::AnchorNotGeneric { axis, x, m, j });
                    }
                    let ratio = f64_ratio(&dist, &tolerance);
                    worst = worst.min(ratio);
                    r = (r + &step).mod_floor(&modulus);
                }
            }
        }
        Ok(worst)
    }

    /// Offset of the level-`j` cube containing `x` along each axis.
    pub fn locate(&self, x: &[f64], j: u64) -> Vec<i64> {
        x.iter().enumerate().map(|(i, &v)| ((v - self.coordinate(i)) * j as f64).floor() as i64).collect()
    }
}

fn f64_ratio(a: &BigInt, b: &BigInt) -> f64 {
    a.to_f64().unwrap_or(f64::INFINITY) / b.to_f64().unwrap_or(f64::INFINITY)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cube {
    pub j: u64,
    pub offset: Vec<i64>,
}

impl Cube {
    /// The cube clipped to `[0,1]^d`, as per-axis intervals.
    pub fn clipped(&self, anchor: &Anchor) -> Vec<(f64, f64)> {
        let j = self.j as f64;
        self.offset
            .iter()
            .enumerate()
            .map(|(i, &u)| {
                let a = anchor.coordinate(i);
                ((a + u as f64 / j).max(0.0), (a + (u + 1) as f64 / j).min(1.0))
            })
            .collect()
    }

    pub fn clipped_volume(&self, anchor: &Anchor) -> f64 {
        self.clipped(anchor).iter().map(|(lo, hi)| (hi - lo).max(0.0)).product()
    }

    pub fn parent(&self) -> Cube {
        Cube { j: self.j / 2, offset: self.offset.iter().map(|u| u.div_euclid(2)).collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Certificate {
    /// Every vertex of the clipped cube lies in `Omega_eps`; exact because
    /// `Omega_eps` is convex for convex `Omega`.
    VertexExact,
    /// Vertices and a grid of face points were tested; a non-convex oracle
    /// region may still leave part of the cube outside `Omega_eps`.
    FaceSampled,
}

impl Certificate {
    pub fn as_str(self) -> &'static str {
        match self {
            Certificate::VertexExact => "vertex-exact",
            Certificate::FaceSampled => "face-sampled",
        }
    }
}

/// All cubes of `F(j)` meeting `[0,1]^d`, ordered by offset.
pub fn grid_cubes(j: u64, anchor: &Anchor) -> Result<Vec<Cube>, CoverError> {
    if j == 0 {
        return Err(CoverError::Level);
    }
    anchor.check_precision(j, 1)?;
    let ranges: Vec<(i64, i64)> = (0..anchor.dims()).map(|i| anchor.offset_range(i, j)).collect();
    let mut out = Vec::new();
    let mut u: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    loop {
        out.push(Cube { j, offset: u.clone() });
        let mut axis = ranges.len();
        loop {
            if axis == 0 {
                return Ok(out);
            }
            axis -= 1;
            if u[axis] < ranges[axis].1 {
                u[axis] += 1;
                break;
            }
            u[axis] = ranges[axis].0;
        }
    }
}

/// Decides whether clipped cubes lie inside `Omega_eps`.
struct Classifier<'a> {
    region: &'a Region,
    anchor: &'a Anchor,
    eps: f64,
    certificate: Certificate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Class {
    Inside,
    Outside,
    Partial,
}

impl<'a> Classifier<'a> {
    fn new(region: &'a Region, anchor: &'a Anchor, eps: f64) -> Result<Self, CoverError> {
        if !region.has_signed_distance() {
            return Err(CoverError::Undecidable(region.describe()));
        }
        if region.dims() != anchor.dims() {
            return Err(RegionError::DimensionMismatch { expected: region.dims(), got: anchor.dims() }.into());
        }
        let certificate = if region.is_convex() { Certificate::VertexExact } else { Certificate::FaceSampled };
        Ok(Classifier { region, anchor, eps, certificate })
    }

    fn near(&self, p: &[f64]) -> bool {
        self.region.signed_distance(p).expect("checked capability") < self.eps
    }

    fn inside(&self, cube: &Cube) -> bool {
        let boxes = cube.clipped(self.anchor);
        let d = boxes.len();
        let mut p = vec![0.0; d];
        let corners_ok = (0..1u32 << d).all(|mask| {
            for (i, (lo, hi)) in boxes.iter().enumerate() {
                p[i] = if mask >> i & 1 == 1 { *hi } else { *lo };
            }
            self.near(&p)
        });
        if !corners_ok || self.certificate == Certificate::VertexExact {
            return corners_ok;
        }
        // faces: fix one axis at an end, sweep a grid over the others
        let n = ORACLE_FACE_POINTS;
        for axis in 0..d {
            for end in [boxes[axis].0, boxes[axis].1] {
                let others = d - 1;
                for idx in 0..n.pow(others as u32) {
                    let mut rest = idx;
                    for (i, (lo, hi)) in boxes.iter().enumerate() {
                        if i == axis {
                            p[i] = end;
                        } else {
                            let t = (rest % n) as f64 / (n - 1) as f64;
                            rest /= n;
                            p[i] = lo + t * (hi - lo);
                        }
                    }
                    if !self.near(&p) {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn classify(&self, cube: &Cube) -> Class {
        if self.inside(cube) {
            return Class::Inside;
        }
        let boxes = cube.clipped(self.anchor);
        let center: Vec<f64> = boxes.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect();
        let half_diag = 0.5 * boxes.iter().map(|(lo, hi)| (hi - lo).powi(2)).sum::<f64>().sqrt();
        let sd = self.region.signed_distance(&center).expect("checked capability");
        if self.certificate == Certificate::VertexExact && sd >= self.eps + half_diag {
            Class::Outside
        } else {
            Class::Partial
        }
    }
}

/// `C(j)` by testing every cube of `F(j)`.
pub fn inner_cubes(j: u64, anchor: &Anchor, region: &Region, eps: f64) -> Result<Vec<Cube>, CoverError> {
    let classifier = Classifier::new(region, anchor, eps)?;
    let mut cubes: Vec<Cube> = grid_cubes(j, anchor)?.into_par_iter().filter(|c| classifier.inside(c)).collect();
    cubes.sort();
    Ok(cubes)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Cover {
    pub dims: usize,
    pub depth: u32,
    pub eps: f64,
    pub anchor: Anchor,
    pub region: String,
    pub certificate: Certificate,
    /// `families[i - 1]` is `B_i`, sorted by offset.
    pub families: Vec<Vec<Cube>>,
    /// `inner_counts[i - 1]` is `#C(2^i)`.
    pub inner_counts: Vec<u64>,
}

/// `eps = 2 sqrt(d) / 2^M`.
pub fn cover_eps(dims: usize, depth: u32) -> f64 {
    2.0 * (dims as f64).sqrt() / 2f64.powi(depth as i32)
}

fn children(cube: &Cube, anchor: &Anchor) -> Vec<Cube> {
    let d = cube.offset.len();
    let j = cube.j * 2;
    let ranges: Vec<(i64, i64)> = (0..d).map(|i| anchor.offset_range(i, j)).collect();
    (0..1u32 << d)
        .filter_map(|mask| {
            let offset: Vec<i64> = cube.offset.iter().enumerate().map(|(i, u)| 2 * u + (mask >> i & 1) as i64).collect();
            offset.iter().zip(&ranges).all(|(u, (lo, hi))| lo <= u && u <= hi).then_some(Cube { j, offset })
        })
        .collect()
}

/// Number of level-`j` cubes inside `cube` that meet `[0,1]^d`.
fn descendant_count(cube: &Cube, j: u64, anchor: &Anchor) -> u64 {
    let t = (j / cube.j) as i64;
    cube.offset
        .iter()
        .enumerate()
        .map(|(i, &u)| {
            let (lo, hi) = anchor.offset_range(i, j);
            let (a, b) = ((u * t).max(lo), ((u + 1) * t - 1).min(hi));
            (b - a + 1).max(0) as u64
        })
        .product()
}

pub fn build_cover(region: &Region, depth: u32, anchor: &Anchor) -> Result<Cover, CoverError> {
    if depth == 0 || depth > MAX_DEPTH {
        return Err(CoverError::Depth(depth));
    }
    let d = region.dims();
    if d == 0 || d > MAX_DIMS {
        return Err(CoverError::Dims(d));
    }
    anchor.check_precision(1 << depth, 1)?;
    let eps = cover_eps(d, depth);
    let classifier = Classifier::new(region, anchor, eps)?;
    let mut families: Vec<Vec<Cube>> = Vec::with_capacity(depth as usize);
    let mut partial: Vec<Cube> = Vec::new();
    for level in 1..=depth {
        let candidates: Vec<Cube> = if level == 1 {
            grid_cubes(2, anchor)?
        } else {
            partial.par_iter().flat_map_iter(|c| children(c, anchor)).collect()
        };
        let classes: Vec<(Cube, Class)> = candidates
            .into_par_iter()
            .map(|c| {
                let class = classifier.classify(&c);
                (c, class)
            })
            .collect();
        let mut inside = Vec::new();
        partial.clear();
        for (c, class) in classes {
            match class {
                Class::Inside => inside.push(c),
                Class::Partial => partial.push(c),
                Class::Outside => {}
            }
        }
        inside.sort();
        partial.sort();
        families.push(inside);
    }
    let inner_counts = (1..=depth)
        .map(|level| {
            let j = 1u64 << level;
            families[..level as usize].iter().flatten().map(|c| descendant_count(c, j, anchor)).sum()
        })
        .collect();
    Ok(Cover {
        dims: d,
        depth,
        eps,
        anchor: anchor.clone(),
        region: region.describe(),
        certificate: classifier.certificate,
        families,
        inner_counts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub level: u32,
    pub j: u64,
    /// `#B_i`.
    pub b_count: u64,
    /// `#C(2^i)`.
    pub c_count: u64,
    /// `#B_i / 2^(i(d-1))`.
    pub b_ratio: f64,
    /// `|#C(j) - j^d mu(Omega)| / j^(d-1)`.
    pub discrepancy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverReport {
    pub sampled_points: u64,
    pub uncovered: u64,
    /// Up to five uncovered sample points.
    pub uncovered_examples: Vec<Vec<f64>>,
    pub levels: Vec<LevelReport>,
    pub b1_equals_c2: bool,
    /// Every `B_i` cube is in `C(2^i)` and its parent is not in `C(2^(i-1))`.
    pub nesting_ok: bool,
    /// Offsets are distinct within each family.
    pub disjoint_ok: bool,
    pub mu: MeasureEstimate,
    pub mu_outer_shell: MeasureEstimate,
    /// `sum_i #B_i 2^(-id)`.
    pub unclipped_volume: f64,
    /// Total clipped volume of the cover cubes.
    pub clipped_volume: f64,
    /// `clipped_volume <= mu(Omega) + mu(Omega_eps^+)` up to estimate error.
    pub volume_ok: bool,
    pub certificate: Certificate,
}

impl CoverReport {
    pub fn coverage(&self) -> f64 {
        if self.sampled_points == 0 {
            1.0
        } else {
            1.0 - self.uncovered as f64 / self.sampled_points as f64
        }
    }

    pub fn max_b_ratio(&self) -> f64 {
        self.levels.iter().map(|l| l.b_ratio).fold(0.0, f64::max)
    }

    pub fn max_discrepancy(&self) -> f64 {
        self.levels.iter().map(|l| l.discrepancy).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.uncovered == 0 && self.b1_equals_c2 && self.nesting_ok && self.disjoint_ok && self.volume_ok
    }
}

/// Face tolerance when locating sample points.
const LOCATE_SLACK: f64 = 1e-12;

fn covered(point: &[f64], cover: &Cover, sets: &[HashSet<Vec<i64>>]) -> bool {
    let d = point.len();
    sets.iter().enumerate().any(|(level, set)| {
        let j = 1u64 << (level + 1);
        let base = cover.anchor.locate(point, j);
        // also try neighbours when the point sits on a face (within rounding)
        let mut shifts: Vec<Vec<i64>> = vec![Vec::new()];
        for i in 0..d {
            let t = (point[i] - cover.anchor.coordinate(i)) * j as f64;
            let frac = t - t.floor();
            let mut options = vec![0i64];
            if frac < LOCATE_SLACK {
                options.push(-1);
            }
            if frac > 1.0 - LOCATE_SLACK {
                options.push(1);
            }
            shifts = shifts.into_iter().flat_map(|s| options.iter().map(move |o| [s.clone(), vec![*o]].concat())).collect();
        }
        shifts.iter().any(|s| {
            let u: Vec<i64> = base.iter().zip(s).map(|(b, o)| b + o).collect();
            set.contains(&u)
        })
    })
}

/// Checks a cover against the region: coverage of `samples` uniform points of
/// `Omega`, family structure, per-level counts and the volume invariant.
pub fn verify_cover(cover: &Cover, region: &Region, samples: u64, seed: u64) -> Result<CoverReport, CoverError> {
    let d = cover.dims;
    if region.dims() != d {
        return Err(RegionError::DimensionMismatch { expected: d, got: region.dims() }.into());
    }
    let classifier = Classifier::new(region, &cover.anchor, cover.eps)?;
    let mc_budget = 4_000_000;
    let mu = region.measure(mc_budget, seed)?;
    let mu_outer_shell = region.shell_measure(cover.eps, ShellSide::Outer, mc_budget, seed.wrapping_add(1))?;

    let sets: Vec<HashSet<Vec<i64>>> = cover.families.iter().map(|f| f.iter().map(|c| c.offset.clone()).collect()).collect();
    let disjoint_ok = sets.iter().zip(&cover.families).all(|(s, f)| s.len() == f.len());
    let points = accepted_points(d, samples as usize, samples.saturating_mul(100_000), seed, |u| region.contains_unchecked(u));
    let misses: Vec<&Vec<f64>> = points.par_iter().filter(|p| !covered(p, cover, &sets)).collect();

    let nesting_ok = cover.families.par_iter().enumerate().all(|(level, fam)| {
        fam.iter().all(|c| classifier.inside(c) && (level == 0 || !classifier.inside(&c.parent())))
    });

    let levels: Vec<LevelReport> = (1..=cover.depth)
        .map(|level| {
            let j = 1u64 << level;
            let b_count = cover.families[level as usize - 1].len() as u64;
            let c_count = cover.inner_counts[level as usize - 1];
            let jd = (j as f64).powi(d as i32);
            let jd1 = (j as f64).powi(d as i32 - 1);
            LevelReport {
                level,
                j,
                b_count,
                c_count,
                b_ratio: b_count as f64 / 2f64.powi((level as usize * (d - 1)) as i32),
                discrepancy: (c_count as f64 - jd * mu.value).abs() / jd1,
            }
        })
        .collect();
    let unclipped_volume: f64 = levels.iter().map(|l| l.b_count as f64 / (l.j as f64).powi(d as i32)).sum();
    let clipped_volume: f64 = cover.families.iter().flatten().map(|c| c.clipped_volume(&cover.anchor)).sum();
    let volume_ok = clipped_volume <= mu.upper() + mu_outer_shell.upper() + 1e-9;
    Ok(CoverReport {
        sampled_points: points.len() as u64,
        uncovered: misses.len() as u64,
        uncovered_examples: misses.iter().take(5).map(|p| p.to_vec()).collect(),
        b1_equals_c2: cover.families[0].len() as u64 == cover.inner_counts[0],
        nesting_ok,
        disjoint_ok,
        mu,
        mu_outer_shell,
        unclipped_volume,
        clipped_volume,
        volume_ok,
        levels,
        certificate: cover.certificate,
    })
}

impl Cover {
    pub fn cube_count(&self) -> usize {
        self.families.iter().map(Vec::len).sum()
    }

    /// Plain-text export.
    ///
    /// ```text
    /// # polycong cover
    /// region <description>
    /// dims <d>
    /// depth <M>
    /// eps <eps>
    /// anchor <a_1> ... <a_d>            (numerators over 2^128)
    /// certificate <vertex-exact|face-sampled>
    /// cube <i> <j> <u_1> ... <u_d> <certificate>     (one line per cube of B_i)
    /// ...
    /// summary <i> <j> <#B_i> <#C(j)> <#B_i / 2^(i(d-1))>   (one line per level)
    /// ```
    pub fn export(&self) -> String {
        let mut out = String::new();
        let cert = self.certificate.as_str();
        writeln!(out, "# polycong cover").unwrap();
        writeln!(out, "region {}", self.region).unwrap();
        writeln!(out, "dims {}", self.dims).unwrap();
        writeln!(out, "depth {}", self.depth).unwrap();
        writeln!(out, "eps {:e}", self.eps).unwrap();
        let anchor: Vec<String> = self.anchor.numerators().iter().map(u128::to_string).collect();
        writeln!(out, "anchor {}", anchor.join(" ")).unwrap();
        writeln!(out, "certificate {cert}").unwrap();
        for (i, fam) in self.families.iter().enumerate() {
            for c in fam {
                let offs: Vec<String> = c.offset.iter().map(i64::to_string).collect();
                writeln!(out, "cube {} {} {} {cert}", i + 1, c.j, offs.join(" ")).unwrap();
            }
        }
        for (i, fam) in self.families.iter().enumerate() {
            let level = i as u32 + 1;
            let ratio = fam.len() as f64 / 2f64.powi((level as usize * (self.dims - 1)) as i32);
            writeln!(out, "summary {level} {} {} {} {ratio:.6}", 1u64 << level, fam.len(), self.inner_counts[i]).unwrap();
        }
        out
    }
}
