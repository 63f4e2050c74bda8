//! Subsets of `[0,1]^d`: membership, Lebesgue measure, and the measure of the
//! boundary shells that make a set well-shaped.
//!
//! Every region is intersected with the unit cube; `contains` is false outside
//! it. Membership is closed (boundary points belong to the region).
//!
//! Shells follow one convention throughout the crate:
//!
//! * outer shell `Omega_eps^+`: points of `[0,1]^d` outside `Omega` at distance
//!   `< eps` from it;
//! * inner shell `Omega_eps^-`: points of `Omega` at distance `< eps` from the
//!   complement of `Omega` in `R^d`. Faces of `Omega` lying on the frontier of the
//!   unit cube therefore count as boundary.

pub mod geometry;
mod montecarlo;
pub mod spec;

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use geometry::{ball_volume, dot, ellipsoid_boundary_distance, norm, quarter_disc_in_rect, Halfspaces};
pub(crate) use montecarlo::accepted_points;
pub use montecarlo::{hoeffding_half_width, samples_for_half_width, CONFIDENCE_DELTA};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegionError {
    #[error("invalid region: {0}")]
    Invalid(String),
    #[error("expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("shell width must be positive, got {0}")]
    NonPositiveEpsilon(f64),
    #[error("sample budget must be at least 1")]
    EmptyBudget,
    #[error(
        "sample budget {budget} cannot certify a shell estimate: 99% half-width {half_width:.3e} exceeds eps/10 = {limit:.3e}"
    )]
    BudgetTooSmall { budget: u64, half_width: f64, limit: f64 },
    #[error("empty epsilon grid")]
    EmptyGrid,
    #[error("region spec: {0}")]
    Spec(String),
}

pub type MembershipFn = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;
/// Signed distance: `dist(u, Omega)` outside, `-dist(u, R^d \ Omega)` inside.
pub type SignedDistanceFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A region known only through a membership test, optionally with a signed
/// distance.
#[derive(Clone)]
pub struct Oracle {
    label: String,
    membership: MembershipFn,
    signed_distance: Option<SignedDistanceFn>,
}

impl fmt::Debug for Oracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Oracle")
            .field("label", &self.label)
            .field("signed_distance", &self.signed_distance.is_some())
            .finish()
    }
}

#[derive(Debug, Clone)]
pub enum Shape {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    Ellipsoid { center: Vec<f64>, semi_axes: Vec<f64> },
    /// `user` holds the caller's halfspaces, `clipped` adds the unit-cube faces.
    Polytope { user: Halfspaces, clipped: Halfspaces },
    Simplex { vertices: Vec<Vec<f64>>, clipped: Halfspaces },
    Oracle(Oracle),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionKind {
    Box,
    Ball,
    Ellipsoid,
    Polytope,
    Simplex,
    Oracle,
}

#[derive(Debug, Clone)]
pub struct Region {
    dims: usize,
    shape: Shape,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShellSide {
    Outer,
    Inner,
}

impl fmt::Display for ShellSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ShellSide::Outer => "outer",
            ShellSide::Inner => "inner",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum EstimateMethod {
    Exact,
    /// Uniform sampling; `probes` is set when shell membership was decided by
    /// probing the `eps`-ball around each sample instead of a distance function.
    MonteCarlo { samples: u64, seed: u64, probes: Option<u32> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureEstimate {
    pub value: f64,
    /// 0 for exact values, otherwise the 99% Hoeffding half-width.
    pub error_bound: f64,
    pub method: EstimateMethod,
}

impl MeasureEstimate {
    fn exact(value: f64) -> Self {
        MeasureEstimate { value, error_bound: 0.0, method: EstimateMethod::Exact }
    }

    fn sampled(hits: u64, samples: u64, seed: u64, probes: Option<u32>) -> Self {
        MeasureEstimate {
            value: hits as f64 / samples as f64,
            error_bound: hoeffding_half_width(samples),
            method: EstimateMethod::MonteCarlo { samples, seed, probes },
        }
    }

    pub fn is_exact(&self) -> bool {
        self.method == EstimateMethod::Exact
    }

    pub fn upper(&self) -> f64 {
        self.value + self.error_bound
    }

    pub fn lower(&self) -> f64 {
        (self.value - self.error_bound).max(0.0)
    }
}

/// Shell measure at one width and side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellSample {
    pub eps: f64,
    pub side: ShellSide,
    pub estimate: MeasureEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WellShapedEstimate {
    /// `max (value + error_bound) / eps` over the grid and both sides.
    pub constant: f64,
    pub samples: Vec<ShellSample>,
}

/// Probe points per sample when shells are estimated from membership alone.
pub const SHELL_PROBES: u32 = 32;

fn check_dims(expected: usize, got: usize) -> Result<(), RegionError> {
    if expected == got {
        Ok(())
    } else {
        Err(RegionError::DimensionMismatch { expected, got })
    }
}

fn finite(values: &[f64], what: &str) -> Result<(), RegionError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(RegionError::Invalid(format!("{what} must be finite")))
    }
}

fn in_unit_cube(u: &[f64]) -> bool {
    u.iter().all(|&v| (0.0..=1.0).contains(&v))
}

fn cube_faces(dims: usize) -> Halfspaces {
    let mut normals = Vec::with_capacity(2 * dims);
    let mut offsets = Vec::with_capacity(2 * dims);
    for i in 0..dims {
        let mut a = vec![0.0; dims];
        a[i] = 1.0;
        normals.push(a.clone());
        offsets.push(1.0);
        a[i] = -1.0;
        normals.push(a);
        offsets.push(0.0);
    }
    Halfspaces { normals, offsets }
}

impl Region {
    pub fn unit_cube(dims: usize) -> Result<Region, RegionError> {
        Region::boxed(vec![0.0; dims], vec![1.0; dims])
    }

    /// Axis-aligned box `prod [lo_i, hi_i]` inside the unit cube.
    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Result<Region, RegionError> {
        let dims = lo.len();
        if dims == 0 || hi.len() != dims {
            return Err(RegionError::Invalid("box needs matching nonempty lo/hi".into()));
        }
        finite(&lo, "box corners")?;
        finite(&hi, "box corners")?;
        if lo.iter().zip(&hi).any(|(l, h)| !(0.0 <= *l && l <= h && *h <= 1.0)) {
            return Err(RegionError::Invalid("box must satisfy 0 <= lo <= hi <= 1".into()));
        }
        Ok(Region { dims, shape: Shape::Box { lo, hi } })
    }

    /// Closed Euclidean ball; it must lie inside the unit cube.
    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Region, RegionError> {
        let dims = center.len();
        if dims == 0 {
            return Err(RegionError::Invalid("ball needs a center".into()));
        }
        finite(&center, "ball center")?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(RegionError::Invalid("ball radius must be positive".into()));
        }
        if center.iter().any(|&c| c - radius < 0.0 || c + radius > 1.0) {
            return Err(RegionError::Invalid("ball must lie inside [0,1]^d".into()));
        }
        Ok(Region { dims, shape: Shape::Ball { center, radius } })
    }

    /// Axis-aligned ellipsoid; it must lie inside the unit cube.
    pub fn ellipsoid(center: Vec<f64>, semi_axes: Vec<f64>) -> Result<Region, RegionError> {
        let dims = center.len();
        if dims == 0 || semi_axes.len() != dims {
            return Err(RegionError::Invalid("ellipsoid needs matching center/semi_axes".into()));
        }
        finite(&center, "ellipsoid center")?;
        finite(&semi_axes, "ellipsoid axes")?;
        if semi_axes.iter().any(|&e| e <= 0.0) {
            return Err(RegionError::Invalid("ellipsoid axes must be positive".into()));
        }
        if center.iter().zip(&semi_axes).any(|(c, e)| c - e < 0.0 || c + e > 1.0) {
            return Err(RegionError::Invalid("ellipsoid must lie inside [0,1]^d".into()));
        }
        Ok(Region { dims, shape: Shape::Ellipsoid { center, semi_axes } })
    }

    /// `{x in [0,1]^d : a_i . x <= b_i}`.
    pub fn polytope(normals: Vec<Vec<f64>>, offsets: Vec<f64>) -> Result<Region, RegionError> {
        let dims = normals.first().map_or(0, Vec::len);
        if dims == 0 || normals.len() != offsets.len() || normals.iter().any(|a| a.len() != dims) {
            return Err(RegionError::Invalid("polytope needs matching normals/offsets".into()));
        }
        finite(&offsets, "polytope offsets")?;
        let mut user = Halfspaces { normals: Vec::new(), offsets: Vec::new() };
        for (a, b) in normals.iter().zip(&offsets) {
            finite(a, "polytope normals")?;
            let n = norm(a);
            if n == 0.0 {
                return Err(RegionError::Invalid("polytope normal is zero".into()));
            }
            user.normals.push(a.iter().map(|v| v / n).collect());
            user.offsets.push(b / n);
        }
        let mut clipped = cube_faces(dims);
        clipped.normals.extend(user.normals.iter().cloned());
        clipped.offsets.extend(user.offsets.iter().copied());
        if clipped.project(&vec![0.5; dims]).is_none() {
            return Err(RegionError::Invalid("polytope is empty".into()));
        }
        Ok(Region { dims, shape: Shape::Polytope { user, clipped } })
    }

    /// Convex hull of `d + 1` affinely independent vertices in the unit cube.
    pub fn simplex(vertices: Vec<Vec<f64>>) -> Result<Region, RegionError> {
        let dims = vertices.len().saturating_sub(1);
        if dims == 0 || vertices.iter().any(|v| v.len() != dims) {
            return Err(RegionError::Invalid("simplex needs d+1 vertices in d dimensions".into()));
        }
        for v in &vertices {
            finite(v, "simplex vertices")?;
            if !in_unit_cube(v) {
                return Err(RegionError::Invalid("simplex vertices must lie in [0,1]^d".into()));
            }
        }
        let volume = simplex_volume(&vertices);
        if volume <= 1e-15 {
            return Err(RegionError::Invalid("simplex is degenerate".into()));
        }
        let mut clipped = cube_faces(dims);
        let centroid: Vec<f64> = (0..dims).map(|i| vertices.iter().map(|v| v[i]).sum::<f64>() / (dims + 1) as f64).collect();
        for skip in 0..=dims {
            let face: Vec<&Vec<f64>> = vertices.iter().enumerate().filter(|(k, _)| *k != skip).map(|(_, v)| v).collect();
            let mut a = facet_normal(&face);
            let n = norm(&a);
            a.iter_mut().for_each(|v| *v /= n);
            let mut b = dot(&a, face[0]);
            if dot(&a, &centroid) > b {
                a.iter_mut().for_each(|v| *v = -*v);
                b = -b;
            }
            clipped.normals.push(a);
            clipped.offsets.push(b);
        }
        Ok(Region { dims, shape: Shape::Simplex { vertices, clipped } })
    }

    pub fn oracle(
        label: impl Into<String>,
        dims: usize,
        membership: MembershipFn,
        signed_distance: Option<SignedDistanceFn>,
    ) -> Result<Region, RegionError> {
        if dims == 0 {
            return Err(RegionError::Invalid("oracle needs d >= 1".into()));
        }
        Ok(Region { dims, shape: Shape::Oracle(Oracle { label: label.into(), membership, signed_distance }) })
    }

    /// Hides the formulas of `inner` behind an oracle. With `with_distance`
    /// the oracle exposes `inner`'s signed distance.
    pub fn oracle_wrapping(inner: &Region, with_distance: bool) -> Result<Region, RegionError> {
        let member = inner.clone();
        let membership: MembershipFn = Arc::new(move |u| member.contains_unchecked(u));
        let signed = if with_distance {
            if !inner.has_signed_distance() {
                return Err(RegionError::Invalid("wrapped region has no signed distance".into()));
            }
            let dist = inner.clone();
            Some(Arc::new(move |u: &[f64]| dist.signed_distance(u).expect("capability checked")) as SignedDistanceFn)
        } else {
            None
        };
        Region::oracle(format!("oracle({})", inner.describe()), inner.dims, membership, signed)
    }

    /// Random polytope with `facets` halfspaces around a random center in
    /// `[0.35, 0.65]^d`, each facet at distance 0.12..0.30 from the center.
    pub fn random_polytope(dims: usize, facets: usize, seed: u64) -> Result<Region, RegionError> {
        if dims == 0 || facets == 0 {
            return Err(RegionError::Invalid("random polytope needs d >= 1 and at least one facet".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let center: Vec<f64> = (0..dims).map(|_| 0.35 + 0.3 * rng.random::<f64>()).collect();
        let mut normals = Vec::with_capacity(facets);
        let mut offsets = Vec::with_capacity(facets);
        while normals.len() < facets {
            let a: Vec<f64> = (0..dims).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let n = norm(&a);
            if !(0.1..=1.0).contains(&n) {
                continue;
            }
            let a: Vec<f64> = a.iter().map(|v| v / n).collect();
            let b = dot(&a, &center) + 0.12 + 0.18 * rng.random::<f64>();
            normals.push(a);
            offsets.push(b);
        }
        Region::polytope(normals, offsets)
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn kind(&self) -> RegionKind {
        match self.shape {
            Shape::Box { .. } => RegionKind::Box,
            Shape::Ball { .. } => RegionKind::Ball,
            Shape::Ellipsoid { .. } => RegionKind::Ellipsoid,
            Shape::Polytope { .. } => RegionKind::Polytope,
            Shape::Simplex { .. } => RegionKind::Simplex,
            Shape::Oracle(_) => RegionKind::Oracle,
        }
    }

    pub fn is_unit_cube(&self) -> bool {
        matches!(&self.shape, Shape::Box { lo, hi } if lo.iter().all(|&v| v == 0.0) && hi.iter().all(|&v| v == 1.0))
    }

    /// True for every kind except the oracle; convexity makes the vertex test
    /// for cube containment exact.
    pub fn is_convex(&self) -> bool {
        !matches!(self.shape, Shape::Oracle(_))
    }

    /// Short human-readable description used in reports.
    pub fn describe(&self) -> String {
        fn list(v: &[f64]) -> String {
            v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
        }
        match &self.shape {
            Shape::Box { .. } if self.is_unit_cube() => format!("cube{}", self.dims),
            Shape::Box { lo, hi } => format!("box[{}|{}]", list(lo), list(hi)),
            Shape::Ball { center, radius } => format!("ball[{}|{}]", list(center), radius),
            Shape::Ellipsoid { center, semi_axes } => format!("ellipsoid[{}|{}]", list(center), list(semi_axes)),
            Shape::Polytope { user, .. } => format!("polytope{}[{} facets]", self.dims, user.offsets.len()),
            Shape::Simplex { .. } => format!("simplex{}", self.dims),
            Shape::Oracle(o) => o.label.clone(),
        }
    }

    pub fn contains(&self, u: &[f64]) -> Result<bool, RegionError> {
        check_dims(self.dims, u.len())?;
        Ok(self.contains_unchecked(u))
    }

    pub(crate) fn contains_unchecked(&self, u: &[f64]) -> bool {
        if !in_unit_cube(u) {
            return false;
        }
        match &self.shape {
            Shape::Box { lo, hi } => u.iter().zip(lo.iter().zip(hi)).all(|(x, (l, h))| l <= x && x <= h),
            Shape::Ball { center, radius } => {
                u.iter().zip(center).map(|(x, c)| (x - c) * (x - c)).sum::<f64>() <= radius * radius
            }
            Shape::Ellipsoid { center, semi_axes } => {
                u.iter().zip(center).zip(semi_axes).map(|((x, c), e)| ((x - c) / e).powi(2)).sum::<f64>() <= 1.0
            }
            Shape::Polytope { clipped, .. } | Shape::Simplex { clipped, .. } => clipped.min_slack(u) >= 0.0,
            Shape::Oracle(o) => (o.membership)(u),
        }
    }

    pub fn has_signed_distance(&self) -> bool {
        match &self.shape {
            Shape::Oracle(o) => o.signed_distance.is_some(),
            _ => true,
        }
    }

    /// `dist(u, Omega)` for `u` outside, `-dist(u, R^d \ Omega)` inside; `None`
    /// for oracles without a distance function.
    pub fn signed_distance(&self, u: &[f64]) -> Option<f64> {
        debug_assert_eq!(u.len(), self.dims);
        Some(match &self.shape {
            Shape::Box { lo, hi } => {
                let outside: f64 = u
                    .iter()
                    .zip(lo.iter().zip(hi))
                    .map(|(x, (l, h))| (l - x).max(x - h).max(0.0).powi(2))
                    .sum();
                if outside > 0.0 {
                    outside.sqrt()
                } else {
                    -u.iter().zip(lo.iter().zip(hi)).map(|(x, (l, h))| (x - l).min(h - x)).fold(f64::INFINITY, f64::min)
                }
            }
            Shape::Ball { center, radius } => {
                u.iter().zip(center).map(|(x, c)| (x - c) * (x - c)).sum::<f64>().sqrt() - radius
            }
            Shape::Ellipsoid { center, semi_axes } => {
                let y: Vec<f64> = u.iter().zip(center).map(|(x, c)| x - c).collect();
                let (dist, inside) = ellipsoid_boundary_distance(semi_axes, &y);
                if inside { -dist } else { dist }
            }
            Shape::Polytope { clipped, .. } | Shape::Simplex { clipped, .. } => {
                let slack = clipped.min_slack(u);
                if slack >= 0.0 { -slack } else { clipped.distance(u) }
            }
            Shape::Oracle(o) => return o.signed_distance.as_ref().map(|f| f(u)),
        })
    }

    /// The closed set of `t in [0,1]` with `(prefix, t)` in the region, for the
    /// convex kinds. `None` when the region cannot answer (oracles).
    pub fn line_interval(&self, prefix: &[f64]) -> Option<Option<(f64, f64)>> {
        debug_assert_eq!(prefix.len() + 1, self.dims);
        if !in_unit_cube(prefix) {
            return Some(None);
        }
        let last = self.dims - 1;
        let clamp = |lo: f64, hi: f64| {
            let (lo, hi) = (lo.max(0.0), hi.min(1.0));
            if lo <= hi { Some((lo, hi)) } else { None }
        };
        Some(match &self.shape {
            Shape::Box { lo, hi } => {
                if prefix.iter().enumerate().all(|(i, x)| lo[i] <= *x && *x <= hi[i]) {
                    Some((lo[last], hi[last]))
                } else {
                    None
                }
            }
            Shape::Ball { center, radius } => {
                let q = radius * radius - prefix.iter().zip(center).map(|(x, c)| (x - c) * (x - c)).sum::<f64>();
                if q < 0.0 {
                    None
                } else {
                    clamp(center[last] - q.sqrt(), center[last] + q.sqrt())
                }
            }
            Shape::Ellipsoid { center, semi_axes } => {
                let q = 1.0 - prefix.iter().zip(center).zip(semi_axes).map(|((x, c), e)| ((x - c) / e).powi(2)).sum::<f64>();
                if q < 0.0 {
                    None
                } else {
                    let half = semi_axes[last] * q.sqrt();
                    clamp(center[last] - half, center[last] + half)
                }
            }
            Shape::Polytope { clipped, .. } | Shape::Simplex { clipped, .. } => {
                let (mut lo, mut hi) = (0.0f64, 1.0f64);
                for (a, b) in clipped.normals.iter().zip(&clipped.offsets) {
                    let rest = b - dot(&a[..last], prefix);
                    let c = a[last];
                    if c > 0.0 {
                        hi = hi.min(rest / c);
                    } else if c < 0.0 {
                        lo = lo.max(rest / c);
                    } else if rest < 0.0 {
                        return Some(None);
                    }
                }
                if lo <= hi { Some((lo, hi)) } else { None }
            }
            Shape::Oracle(_) => return None,
        })
    }

    /// Lebesgue measure. Exact for every analytic kind; oracles are sampled
    /// with `budget` points from `seed`.
    pub fn measure(&self, budget: u64, seed: u64) -> Result<MeasureEstimate, RegionError> {
        let d = self.dims;
        Ok(match &self.shape {
            Shape::Box { lo, hi } => MeasureEstimate::exact(lo.iter().zip(hi).map(|(l, h)| h - l).product()),
            Shape::Ball { radius, .. } => MeasureEstimate::exact(ball_volume(d, *radius)),
            Shape::Ellipsoid { semi_axes, .. } => {
                MeasureEstimate::exact(ball_volume(d, 1.0) * semi_axes.iter().product::<f64>())
            }
            Shape::Polytope { clipped, .. } => MeasureEstimate::exact(clipped.volume()),
            Shape::Simplex { vertices, .. } => MeasureEstimate::exact(simplex_volume(vertices)),
            Shape::Oracle(_) => {
                if budget == 0 {
                    return Err(RegionError::EmptyBudget);
                }
                let hits = montecarlo::count_hits(d, budget, seed, |u, _| self.contains_unchecked(u));
                MeasureEstimate::sampled(hits, budget, seed, None)
            }
        })
    }

    /// Measure of `Omega_eps^+` (outer) or `Omega_eps^-` (inner).
    pub fn shell_measure(&self, eps: f64, side: ShellSide, budget: u64, seed: u64) -> Result<MeasureEstimate, RegionError> {
        if !(eps > 0.0) {
            return Err(RegionError::NonPositiveEpsilon(eps));
        }
        if let Some(exact) = self.exact_shell(eps, side) {
            return Ok(MeasureEstimate::exact(exact));
        }
        if budget == 0 {
            return Err(RegionError::EmptyBudget);
        }
        let d = self.dims;
        if self.has_signed_distance() {
            let hits = montecarlo::count_hits(d, budget, seed, |u, _| {
                let inside = self.contains_unchecked(u);
                let sd = self.signed_distance(u).expect("capability checked");
                match side {
                    ShellSide::Outer => !inside && sd < eps,
                    ShellSide::Inner => inside && -sd < eps,
                }
            });
            return Ok(MeasureEstimate::sampled(hits, budget, seed, None));
        }
        let half_width = hoeffding_half_width(budget);
        if half_width > eps / 10.0 {
            return Err(RegionError::BudgetTooSmall { budget, half_width, limit: eps / 10.0 });
        }
        let hits = montecarlo::count_hits(d, budget, seed, |u, rng| {
            let inside = self.contains_unchecked(u);
            let wanted = match side {
                ShellSide::Outer if inside => return false,
                ShellSide::Inner if !inside => return false,
                ShellSide::Outer => true,
                ShellSide::Inner => false,
            };
            let mut probe = vec![0.0; d];
            (0..SHELL_PROBES).any(|_| {
                montecarlo::point_in_ball(rng, u, eps, &mut probe);
                self.contains_unchecked(&probe) == wanted
            })
        });
        Ok(MeasureEstimate::sampled(hits, budget, seed, Some(SHELL_PROBES)))
    }

    fn exact_shell(&self, eps: f64, side: ShellSide) -> Option<f64> {
        let d = self.dims;
        match (&self.shape, side) {
            (Shape::Box { lo, hi }, ShellSide::Inner) => {
                let full: f64 = lo.iter().zip(hi).map(|(l, h)| h - l).product();
                let core: f64 = lo.iter().zip(hi).map(|(l, h)| (h - l - 2.0 * eps).max(0.0)).product();
                Some(full - core)
            }
            (Shape::Box { lo, hi }, ShellSide::Outer) if d <= 2 => {
                let room = |i: usize| [lo[i], 1.0 - hi[i]];
                let width = |i: usize| hi[i] - lo[i];
                if d == 1 {
                    return Some(room(0).iter().map(|r| r.min(eps)).sum());
                }
                let strips = width(1) * room(0).iter().map(|r| r.min(eps)).sum::<f64>()
                    + width(0) * room(1).iter().map(|r| r.min(eps)).sum::<f64>();
                let corners: f64 = room(0)
                    .iter()
                    .flat_map(|&p| room(1).into_iter().map(move |q| quarter_disc_in_rect(eps, p, q)))
                    .sum();
                Some(strips + corners)
            }
            (Shape::Ball { radius, .. }, ShellSide::Inner) => {
                Some(ball_volume(d, *radius) - ball_volume(d, (radius - eps).max(0.0)))
            }
            (Shape::Ball { center, radius }, ShellSide::Outer) => {
                let grown = radius + eps;
                if center.iter().all(|&c| c - grown >= 0.0 && c + grown <= 1.0) {
                    Some(ball_volume(d, grown) - ball_volume(d, *radius))
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    /// Estimates the well-shaped constant `C` as the largest
    /// `(measure + error_bound) / eps` over `eps_grid` and both shell sides.
    pub fn wellshaped_constant(&self, eps_grid: &[f64], budget: u64, seed: u64) -> Result<WellShapedEstimate, RegionError> {
        if eps_grid.is_empty() {
            return Err(RegionError::EmptyGrid);
        }
        let mut samples = Vec::with_capacity(2 * eps_grid.len());
        let mut constant = 0.0f64;
        for (n, &eps) in eps_grid.iter().enumerate() {
            for (s, side) in [ShellSide::Outer, ShellSide::Inner].into_iter().enumerate() {
                let sub_seed = seed ^ (0x9E37_79B9_7F4A_7C15u64.wrapping_mul((2 * n + s + 1) as u64));
                let estimate = self.shell_measure(eps, side, budget, sub_seed)?;
                constant = constant.max(estimate.upper() / eps);
                samples.push(ShellSample { eps, side, estimate });
            }
        }
        Ok(WellShapedEstimate { constant, samples })
    }
}

fn facet_normal(face: &[&Vec<f64>]) -> Vec<f64> {
    // Generalized cross product of the edge vectors: cofactor expansion.
    let d = face[0].len();
    let edges: Vec<Vec<f64>> = face[1..].iter().map(|v| v.iter().zip(face[0].iter()).map(|(a, b)| a - b).collect()).collect();
    (0..d)
        .map(|i| {
            let minor: Vec<Vec<f64>> = edges.iter().map(|e| e.iter().enumerate().filter(|(c, _)| *c != i).map(|(_, &v)| v).collect()).collect();
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            sign * determinant(minor)
        })
        .collect()
}

fn determinant(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    if n == 0 {
        return 1.0;
    }
    let mut det = 1.0;
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs())).expect("nonempty");
        if m[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            m.swap(piv, col);
            det = -det;
        }
        det *= m[col][col];
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for c in col..n {
                m[row][c] -= f * m[col][c];
            }
        }
    }
    det
}

fn simplex_volume(vertices: &[Vec<f64>]) -> f64 {
    let d = vertices.len() - 1;
    let edges: Vec<Vec<f64>> = vertices[1..].iter().map(|v| v.iter().zip(&vertices[0]).map(|(a, b)| a - b).collect()).collect();
    let fact: f64 = (1..=d).map(|i| i as f64).product();
    determinant(edges).abs() / fact
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn ball2() -> Region {
        Region::ball(vec![0.5, 0.5], 0.25).unwrap()
    }

    #[test]
    fn membership_examples() {
        let b = Region::ball(vec![0.5, 0.5], 0.3).unwrap();
        assert!(b.contains(&[0.5, 0.5]).unwrap());
        let bx = Region::boxed(vec![0.0, 0.0], vec![0.5, 0.5]).unwrap();
        assert!(!bx.contains(&[0.75, 0.1]).unwrap());
        assert!(bx.contains(&[0.5, 0.5]).unwrap(), "closed boundary");
        let cube = Region::unit_cube(3).unwrap();
        assert!(cube.contains(&[0.0, 1.0, 0.3]).unwrap());
        assert!(!cube.contains(&[1.1, 0.5, 0.5]).unwrap());
        assert_eq!(cube.contains(&[0.5]), Err(RegionError::DimensionMismatch { expected: 3, got: 1 }));
    }

    #[test]
    fn construction_errors() {
        assert!(Region::ball(vec![0.1, 0.5], 0.2).is_err());
        assert!(Region::boxed(vec![0.5], vec![0.2]).is_err());
        assert!(Region::polytope(vec![vec![1.0, 0.0]], vec![-0.5]).is_err());
        assert!(Region::simplex(vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![0.5, 0.5]]).is_err());
    }

    #[test]
    fn exact_measures() {
        for h in [1.0, 2.0, 5.0] {
            for d in 1..=3 {
                let side = 1.0 / h;
                let b = Region::boxed(vec![0.0; d], vec![side; d]).unwrap();
                let m = b.measure(1, 0).unwrap();
                assert!(m.is_exact());
                assert!((m.value - h.powi(-(d as i32))).abs() < 1e-15);
            }
        }
        let m = ball2().measure(1, 0).unwrap();
        assert!((m.value - PI / 16.0).abs() < 1e-15);
        assert_eq!(m.error_bound, 0.0);
        let e = Region::ellipsoid(vec![0.5, 0.5, 0.5], vec![0.1, 0.2, 0.3]).unwrap();
        assert!((e.measure(1, 0).unwrap().value - 4.0 / 3.0 * PI * 0.006).abs() < 1e-15);
        let s = Region::simplex(vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        assert!((s.measure(1, 0).unwrap().value - 1.0 / 6.0).abs() < 1e-15);
        let p = Region::polytope(vec![vec![1.0, 1.0]], vec![1.0]).unwrap();
        assert!((p.measure(1, 0).unwrap().value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn oracle_measure_within_error_bound() {
        let o = Region::oracle_wrapping(&ball2(), false).unwrap();
        let m = o.measure(1_000_000, 11).unwrap();
        assert!(!m.is_exact());
        assert!((m.value - PI / 16.0).abs() <= m.error_bound, "{m:?}");
        assert_eq!(o.measure(1_000_000, 11).unwrap(), m);
    }

    #[test]
    fn polytope_and_simplex_volume_agree_with_sampling() {
        for seed in 0..4 {
            for d in 2..=3 {
                let p = Region::random_polytope(d, 10, seed).unwrap();
                let exact = p.measure(1, 0).unwrap().value;
                let o = Region::oracle_wrapping(&p, false).unwrap();
                let mc = o.measure(400_000, seed).unwrap();
                assert!((mc.value - exact).abs() <= mc.error_bound, "d={d} seed={seed}: {exact} vs {mc:?}");
            }
        }
        let s = Region::simplex(vec![vec![0.1, 0.2], vec![0.9, 0.3], vec![0.4, 0.95]]).unwrap();
        let o = Region::oracle_wrapping(&s, false).unwrap();
        let mc = o.measure(400_000, 5).unwrap();
        assert!((mc.value - s.measure(1, 0).unwrap().value).abs() <= mc.error_bound);
    }

    #[test]
    fn shell_examples() {
        let cube = Region::unit_cube(2).unwrap();
        for eps in [0.01, 0.3, 2.0] {
            assert_eq!(cube.shell_measure(eps, ShellSide::Outer, 10, 0).unwrap().value, 0.0);
        }
        let strip = Region::boxed(vec![0.0, 0.0], vec![0.5, 1.0]).unwrap();
        let s = strip.shell_measure(0.1, ShellSide::Outer, 10, 0).unwrap();
        assert!(s.is_exact());
        assert!((s.value - 0.1).abs() < 1e-15);
        let inner = ball2().shell_measure(0.05, ShellSide::Inner, 10, 0).unwrap();
        assert!((inner.value - PI * (0.0625 - 0.04)).abs() < 1e-15);
        assert!(matches!(cube.shell_measure(0.0, ShellSide::Outer, 10, 0), Err(RegionError::NonPositiveEpsilon(_))));
    }

    #[test]
    fn exact_shells_agree_with_sampling() {
        let shapes = vec![
            Region::boxed(vec![0.0, 0.0], vec![0.5, 1.0]).unwrap(),
            Region::boxed(vec![0.2, 0.05], vec![0.6, 0.7]).unwrap(),
            Region::boxed(vec![0.1, 0.2, 0.3], vec![0.5, 0.9, 0.6]).unwrap(),
            Region::unit_cube(2).unwrap(),
            ball2(),
            Region::ball(vec![0.4, 0.5, 0.5], 0.2).unwrap(),
        ];
        for r in &shapes {
            let o = Region::oracle_wrapping(r, true).unwrap();
            for eps in [0.03, 0.1] {
                for side in [ShellSide::Outer, ShellSide::Inner] {
                    let mc = o.shell_measure(eps, side, 300_000, 9).unwrap();
                    let ex = r.shell_measure(eps, side, 300_000, 9).unwrap();
                    assert!((mc.value - ex.value).abs() <= mc.error_bound + ex.error_bound, "{} {side} eps={eps}: {ex:?} vs {mc:?}", r.describe());
                }
            }
        }
    }

    #[test]
    fn probe_shells_track_distance_shells() {
        let b = ball2();
        let o = Region::oracle_wrapping(&b, false).unwrap();
        for side in [ShellSide::Outer, ShellSide::Inner] {
            let exact = b.shell_measure(0.05, side, 1, 0).unwrap().value;
            let probed = o.shell_measure(0.05, side, 200_000, 1).unwrap();
            // probing can only miss shell points, and 32 probes miss few of them
            assert!(probed.value <= exact + probed.error_bound, "{side}: {probed:?} vs {exact}");
            assert!(probed.value >= 0.8 * exact, "{side}: {probed:?} vs {exact}");
        }
        assert!(matches!(o.shell_measure(0.05, ShellSide::Outer, 1000, 1), Err(RegionError::BudgetTooSmall { .. })));
    }

    #[test]
    fn shells_are_monotone_in_eps() {
        let p = Region::random_polytope(2, 10, 3).unwrap();
        for side in [ShellSide::Outer, ShellSide::Inner] {
            let mut last: Option<MeasureEstimate> = None;
            for eps in [0.01, 0.02, 0.05, 0.1, 0.2] {
                let m = p.shell_measure(eps, side, 100_000, 4).unwrap();
                if let Some(prev) = last {
                    assert!(prev.value <= m.value + prev.error_bound + m.error_bound);
                }
                last = Some(m);
            }
        }
    }

    #[test]
    fn wellshaped_constant_examples() {
        let grid = [0.1, 0.05, 0.01];
        let quarter = Region::boxed(vec![0.0, 0.0], vec![0.5, 0.5]).unwrap();
        let c = quarter.wellshaped_constant(&grid, 1, 0).unwrap().constant;
        // inner shell (0.25 - (0.5 - 2 eps)^2) / eps tends to the perimeter 2
        assert!(c > 1.9 && c <= 2.0, "{c}");
        let cube = Region::unit_cube(2).unwrap();
        let w = cube.wellshaped_constant(&grid, 1, 0).unwrap();
        assert!(w.samples.iter().filter(|s| s.side == ShellSide::Outer).all(|s| s.estimate.value == 0.0));
        assert!(w.constant <= 4.0 && w.constant > 3.9, "{}", w.constant);
        let c = ball2().wellshaped_constant(&[0.01, 0.005], 1, 0).unwrap().constant;
        // largest ratio is the outer shell at eps = 0.01: pi (0.26^2 - 0.25^2) / 0.01
        assert!((c - PI * 0.51).abs() < 1e-12, "{c}");
    }

    #[test]
    fn signed_distance_is_consistent_with_membership() {
        let regions = vec![
            Region::random_polytope(3, 10, 8).unwrap(),
            Region::ellipsoid(vec![0.5, 0.4], vec![0.3, 0.2]).unwrap(),
            Region::simplex(vec![vec![0.1, 0.1], vec![0.9, 0.2], vec![0.3, 0.8]]).unwrap(),
            Region::boxed(vec![0.2, 0.2], vec![0.4, 0.9]).unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for r in &regions {
            for _ in 0..2000 {
                let u: Vec<f64> = (0..r.dims()).map(|_| rng.random::<f64>()).collect();
                let sd = r.signed_distance(&u).unwrap();
                assert_eq!(sd <= 0.0, r.contains_unchecked(&u), "{} {u:?} {sd}", r.describe());
            }
        }
    }

    #[test]
    fn line_intervals_match_pointwise_membership() {
        let regions = vec![
            Region::random_polytope(2, 10, 2).unwrap(),
            Region::ball(vec![0.5, 0.5], 0.3).unwrap(),
            Region::ellipsoid(vec![0.5, 0.4], vec![0.3, 0.2]).unwrap(),
            Region::boxed(vec![0.2, 0.1], vec![0.4, 0.9]).unwrap(),
        ];
        for r in &regions {
            for i in 0..=100 {
                let x = i as f64 / 100.0;
                let iv = r.line_interval(&[x]).unwrap();
                for j in 0..=100 {
                    let t = j as f64 / 100.0;
                    let inside = r.contains_unchecked(&[x, t]);
                    let by_interval = iv.is_some_and(|(lo, hi)| lo - 1e-12 <= t && t <= hi + 1e-12);
                    if inside {
                        assert!(by_interval, "{} at ({x},{t})", r.describe());
                    }
                }
            }
        }
    }
}
