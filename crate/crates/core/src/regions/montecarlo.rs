//! Seeded uniform sampling over `[0,1]^d`.
//!
//! Samples are drawn in fixed-size batches; batch `b` always uses the ChaCha
//! stream `b` of the master seed, so totals do not depend on how rayon splits
//! the batches across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Miss probability of every reported Monte Carlo interval (99% confidence).
pub const CONFIDENCE_DELTA: f64 = 0.01;

pub(crate) const BATCH: u64 = 4096;

/// Hoeffding half-width `sqrt(ln(2/delta) / (2n))` for a mean of `n` samples in `[0,1]`.
pub fn hoeffding_half_width(samples: u64) -> f64 {
    ((2.0 / CONFIDENCE_DELTA).ln() / (2.0 * samples as f64)).sqrt()
}

/// Smallest sample count whose half-width is at most `target`.
pub fn samples_for_half_width(target: f64) -> u64 {
    ((2.0 / CONFIDENCE_DELTA).ln() / (2.0 * target * target)).ceil() as u64
}

pub(crate) fn batch_rng(seed: u64, batch: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch);
    rng
}

pub(crate) fn fill_uniform(rng: &mut ChaCha8Rng, out: &mut [f64]) {
    for v in out.iter_mut() {
        *v = rng.random::<f64>();
    }
}

/// Uniform point of the Euclidean ball of radius `radius` around `center`, by
/// rejection from the enclosing cube.
pub(crate) fn point_in_ball(rng: &mut ChaCha8Rng, center: &[f64], radius: f64, out: &mut [f64]) {
    loop {
        let mut r2 = 0.0;
        for v in out.iter_mut() {
            *v = rng.random::<f64>() * 2.0 - 1.0;
            r2 += *v * *v;
        }
        if r2 <= 1.0 {
            break;
        }
    }
    for (v, c) in out.iter_mut().zip(center) {
        *v = c + radius * *v;
    }
}

/// Counts samples for which `classify` returns true. `classify` receives the
/// sample point and the batch generator (for auxiliary draws such as probes).
pub(crate) fn count_hits<F>(dims: usize, samples: u64, seed: u64, classify: F) -> u64
where
    F: Fn(&[f64], &mut ChaCha8Rng) -> bool + Sync,
{
    let batches = samples.div_ceil(BATCH);
    (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = batch_rng(seed, b);
            let n = BATCH.min(samples - b * BATCH);
            let mut u = vec![0.0; dims];
            let mut hits = 0u64;
            for _ in 0..n {
                fill_uniform(&mut rng, &mut u);
                if classify(&u, &mut rng) {
                    hits += 1;
                }
            }
            hits
        })
        .sum()
}

/// The first `count` uniform samples of `[0,1]^d` accepted by `keep`, in batch
/// order. Gives up after `max_samples` draws and returns what it has.
pub(crate) fn accepted_points<F>(dims: usize, count: usize, max_samples: u64, seed: u64, keep: F) -> Vec<Vec<f64>>
where
    F: Fn(&[f64]) -> bool + Sync,
{
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(count);
    let total_batches = max_samples.div_ceil(BATCH);
    let round = (rayon::current_num_threads() as u64 * 4).max(8);
    let mut next = 0u64;
    while out.len() < count && next < total_batches {
        let end = (next + round).min(total_batches);
        let found: Vec<Vec<Vec<f64>>> = (next..end)
            .into_par_iter()
            .map(|b| {
                let mut rng = batch_rng(seed, b);
                let mut pts = Vec::new();
                for _ in 0..BATCH {
                    let mut u = vec![0.0; dims];
                    fill_uniform(&mut rng, &mut u);
                    if keep(&u) {
                        pts.push(u);
                    }
                }
                pts
            })
            .collect();
        for pts in found {
            for p in pts {
                if out.len() < count {
                    out.push(p);
                }
            }
        }
        next = end;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_width_and_inverse_agree() {
        for t in [0.1, 0.01, 0.003] {
            let n = samples_for_half_width(t);
            assert!(hoeffding_half_width(n) <= t);
            assert!(hoeffding_half_width(n - 1) > t);
        }
    }

    #[test]
    fn hit_counts_do_not_depend_on_thread_count() {
        let classify = |u: &[f64], _: &mut ChaCha8Rng| u[0] * u[0] + u[1] * u[1] <= 1.0;
        let counts: Vec<u64> = [1, 2, 8]
            .iter()
            .map(|&t| {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(t)
                    .build()
                    .unwrap()
                    .install(|| count_hits(2, 100_003, 42, classify))
            })
            .collect();
        assert!(counts.windows(2).all(|w| w[0] == w[1]), "{counts:?}");
        let est = counts[0] as f64 / 100_003.0;
        assert!((est - std::f64::consts::FRAC_PI_4).abs() < hoeffding_half_width(100_003));
    }

    #[test]
    fn accepted_points_are_deterministic() {
        let keep = |u: &[f64]| u[0] < 0.1;
        let a = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| accepted_points(2, 500, 1 << 20, 3, keep));
        let b = rayon::ThreadPoolBuilder::new().num_threads(8).build().unwrap().install(|| accepted_points(2, 500, 1 << 20, 3, keep));
        assert_eq!(a.len(), 500);
        assert_eq!(a, b);
    }
}
