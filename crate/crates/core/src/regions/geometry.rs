//! Low-level Euclidean geometry for the analytic region kinds.

/// Volume of the unit ball in `d` dimensions.
pub fn unit_ball_volume(d: usize) -> f64 {
    // V_0 = 1, V_1 = 2, V_n = 2 pi / n * V_{n-2}
    let mut even = 1.0;
    let mut odd = 2.0;
    for n in 2..=d {
        let v = 2.0 * std::f64::consts::PI / n as f64 * if n % 2 == 0 { even } else { odd };
        if n % 2 == 0 {
            even = v;
        } else {
            odd = v;
        }
    }
    if d.is_multiple_of(2) { even } else { odd }
}

pub fn ball_volume(d: usize, radius: f64) -> f64 {
    unit_ball_volume(d) * radius.max(0.0).powi(d as i32)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `g y = rhs` for a small dense system by Gaussian elimination with
/// partial pivoting. Returns `None` when the matrix is numerically singular.
fn solve_small(mut g: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| g[a][col].abs().total_cmp(&g[b][col].abs()))?;
        if g[piv][col].abs() < 1e-13 {
            return None;
        }
        g.swap(col, piv);
        rhs.swap(col, piv);
        for row in col + 1..n {
            let f = g[row][col] / g[col][col];
            if f != 0.0 {
                for c in col..n {
                    g[row][c] -= f * g[col][c];
                }
                rhs[row] -= f * rhs[col];
            }
        }
    }
    let mut y = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| g[row][c] * y[c]).sum();
        y[row] = (rhs[row] - s) / g[row][row];
    }
    Some(y)
}

/// Halfspace description `{x : a_i . x <= b_i}` with unit normals.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspaces {
    pub normals: Vec<Vec<f64>>,
    pub offsets: Vec<f64>,
}

const FEAS_TOL: f64 = 1e-12;

impl Halfspaces {
    pub fn dims(&self) -> usize {
        self.normals.first().map_or(0, Vec::len)
    }

    /// Minimum slack `min_i (b_i - a_i . x)`; with unit normals this is the
    /// distance from an interior point to the nearest bounding hyperplane.
    pub fn min_slack(&self, x: &[f64]) -> f64 {
        self.normals
            .iter()
            .zip(&self.offsets)
            .map(|(a, b)| b - dot(a, x))
            .fold(f64::INFINITY, f64::min)
    }

    /// Euclidean projection of `u` onto the polytope, by a dual active-set
    /// method (Goldfarb-Idnani with identity Hessian). Returns `None` if the
    /// polytope is empty.
    pub fn project(&self, u: &[f64]) -> Option<Vec<f64>> {
        let d = u.len();
        let mut x = u.to_vec();
        let mut active: Vec<usize> = Vec::new();
        let mut lambda: Vec<f64> = Vec::new();
        let max_outer = 50 * (self.offsets.len() + d + 1);
        for _ in 0..max_outer {
            let worst = self
                .normals
                .iter()
                .zip(&self.offsets)
                .enumerate()
                .filter(|(i, _)| !active.contains(i))
                .map(|(i, (a, b))| (i, dot(a, &x) - b))
                .max_by(|a, b| a.1.total_cmp(&b.1));
            let Some((p, _)) = worst.filter(|&(_, v)| v > FEAS_TOL) else {
                return Some(x);
            };
            let mut lambda_p = 0.0;
            for _ in 0..=d + self.offsets.len() {
                let ap = &self.normals[p];
                // r = (N^T N)^{-1} N^T a_p, z = a_p - N r
                let r = if active.is_empty() {
                    Vec::new()
                } else {
                    let gram = active
                        .iter()
                        .map(|&i| active.iter().map(|&j| dot(&self.normals[i], &self.normals[j])).collect())
                        .collect();
                    let rhs = active.iter().map(|&i| dot(&self.normals[i], ap)).collect();
                    solve_small(gram, rhs)?
                };
                let mut z = ap.clone();
                for (&i, &ri) in active.iter().zip(&r) {
                    for (zc, nc) in z.iter_mut().zip(&self.normals[i]) {
                        *zc -= ri * nc;
                    }
                }
                let zz = dot(&z, &z);
                let (t2, drop) = r
                    .iter()
                    .zip(&lambda)
                    .enumerate()
                    .filter(|(_, (&ri, _))| ri > 1e-14)
                    .map(|(k, (&ri, &li))| (li / ri, k))
                    .fold((f64::INFINITY, usize::MAX), |acc, v| if v.0 < acc.0 { v } else { acc });
                let cur = dot(ap, &x) - self.offsets[p];
                let t1 = if zz > 1e-24 { cur / zz } else { f64::INFINITY };
                if !t1.is_finite() && !t2.is_finite() {
                    return None;
                }
                let t = t1.min(t2);
                if t1.is_finite() {
                    for (xc, zc) in x.iter_mut().zip(&z) {
                        *xc -= t * zc;
                    }
                }
                for (l, ri) in lambda.iter_mut().zip(&r) {
                    *l -= t * ri;
                }
                lambda_p += t;
                if t1 <= t2 {
                    active.push(p);
                    lambda.push(lambda_p);
                    break;
                }
                active.remove(drop);
                lambda.remove(drop);
            }
        }
        None
    }

    /// Distance from `u` to the polytope (0 inside).
    pub fn distance(&self, u: &[f64]) -> f64 {
        if self.min_slack(u) >= 0.0 {
            return 0.0;
        }
        let p = self.project(u).expect("polytope projection failed on a nonempty polytope");
        u.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    /// Exact volume by Lasserre's facet recursion.
    pub fn volume(&self) -> f64 {
        lasserre(self.normals.clone(), self.offsets.clone())
    }
}

fn normalize_rows(rows: Vec<Vec<f64>>, offsets: Vec<f64>) -> Option<(Vec<Vec<f64>>, Vec<f64>)> {
    let mut out_a: Vec<Vec<f64>> = Vec::new();
    let mut out_b: Vec<f64> = Vec::new();
    for (a, b) in rows.into_iter().zip(offsets) {
        let n = norm(&a);
        if n < 1e-12 {
            if b < -1e-12 {
                return None;
            }
            continue;
        }
        let a: Vec<f64> = a.iter().map(|v| v / n).collect();
        let b = b / n;
        match out_a.iter().position(|c| c.iter().zip(&a).all(|(x, y)| (x - y).abs() < 1e-12)) {
            Some(k) => out_b[k] = out_b[k].min(b),
            None => {
                out_a.push(a);
                out_b.push(b);
            }
        }
    }
    Some((out_a, out_b))
}

fn lasserre(rows: Vec<Vec<f64>>, offsets: Vec<f64>) -> f64 {
    let Some((a, b)) = normalize_rows(rows, offsets) else {
        return 0.0;
    };
    let d = match a.first() {
        Some(r) => r.len(),
        None => return f64::INFINITY,
    };
    if d == 1 {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for (ai, bi) in a.iter().zip(&b) {
            if ai[0] > 0.0 {
                hi = hi.min(bi / ai[0]);
            } else {
                lo = lo.max(bi / ai[0]);
            }
        }
        return (hi - lo).max(0.0);
    }
    let mut total = 0.0;
    for i in 0..a.len() {
        if b[i].abs() < 1e-300 {
            continue;
        }
        let j = (0..d).max_by(|&p, &q| a[i][p].abs().total_cmp(&a[i][q].abs())).expect("d >= 2");
        let pivot = a[i][j];
        let mut sub_a = Vec::with_capacity(a.len() - 1);
        let mut sub_b = Vec::with_capacity(a.len() - 1);
        for k in 0..a.len() {
            if k == i {
                continue;
            }
            let f = a[k][j] / pivot;
            let row: Vec<f64> = (0..d).filter(|&l| l != j).map(|l| a[k][l] - f * a[i][l]).collect();
            sub_a.push(row);
            sub_b.push(b[k] - f * b[i]);
        }
        let facet = lasserre(sub_a, sub_b);
        if facet > 0.0 && facet.is_finite() {
            total += b[i] / pivot.abs() * facet;
        }
    }
    total / d as f64
}

/// Distance from `y` to the boundary of the axis-aligned ellipsoid
/// `sum (y_i / e_i)^2 <= 1` centered at the origin, and whether `y` is inside.
///
/// The closest boundary point is `x_i = e_i^2 y_i / (t + e_i^2)` where `t` is the
/// root of `sum (e_i y_i / (t + e_i^2))^2 = 1`, found by bisection.
pub fn ellipsoid_boundary_distance(semi_axes: &[f64], y: &[f64]) -> (f64, bool) {
    let y: Vec<f64> = y.iter().map(|v| v.abs()).collect();
    let inside = semi_axes.iter().zip(&y).map(|(e, v)| (v / e) * (v / e)).sum::<f64>() <= 1.0;
    let n = y.len();
    let e_min_all = semi_axes.iter().copied().fold(f64::INFINITY, f64::min);
    let positive: Vec<usize> = (0..n).filter(|&i| y[i] > 0.0).collect();
    if positive.is_empty() {
        return (e_min_all, inside);
    }
    let e_min_pos = positive.iter().map(|&i| semi_axes[i]).fold(f64::INFINITY, f64::min);
    let mut closest = vec![0.0; n];
    let f = |t: f64| -> f64 {
        positive
            .iter()
            .map(|&i| {
                let q = semi_axes[i] * y[i] / (t + semi_axes[i] * semi_axes[i]);
                q * q
            })
            .sum::<f64>()
            - 1.0
    };
    let mut lo;
    if e_min_all < e_min_pos {
        // An axis with zero coordinate is strictly the shortest: the closest point may
        // leave the coordinate hyperplane along that axis.
        let t0 = -e_min_all * e_min_all;
        let s = f(t0) + 1.0;
        if s < 1.0 {
            let j = (0..n)
                .filter(|&i| y[i] == 0.0)
                .min_by(|&a, &b| semi_axes[a].total_cmp(&semi_axes[b]))
                .expect("some zero coordinate");
            for &i in &positive {
                closest[i] = semi_axes[i] * semi_axes[i] * y[i] / (semi_axes[i] * semi_axes[i] + t0);
            }
            closest[j] = e_min_all * (1.0 - s).sqrt();
            return (dist(&closest, &y), inside);
        }
        lo = t0;
    } else {
        lo = -e_min_pos * e_min_pos;
    }
    let mut hi = positive.iter().map(|&i| (semi_axes[i] * y[i]).powi(2)).sum::<f64>().sqrt().max(0.0);
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    for &i in &positive {
        closest[i] = semi_axes[i] * semi_axes[i] * y[i] / (t + semi_axes[i] * semi_axes[i]);
    }
    (dist(&closest, &y), inside)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Area of `{(s, t) : 0 < s <= p, 0 < t <= q, s^2 + t^2 < eps^2}`.
pub fn quarter_disc_in_rect(eps: f64, p: f64, q: f64) -> f64 {
    if eps <= 0.0 || p <= 0.0 || q <= 0.0 {
        return 0.0;
    }
    let p = p.min(eps);
    // sqrt(eps^2 - s^2) >= q exactly for s <= s_star
    let s_star = if q < eps { (eps * eps - q * q).sqrt() } else { 0.0 };
    let flat = s_star.min(p);
    let g = |s: f64| 0.5 * (s * (eps * eps - s * s).max(0.0).sqrt() + eps * eps * (s / eps).clamp(-1.0, 1.0).asin());
    q * flat + (g(p) - g(flat)).max(0.0)
}
