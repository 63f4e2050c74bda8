//! Browser bindings for the demo page in `www/`.
//!
//! Regions use the command-line shorthand (`full`, `ball:R@X,Y`,
//! `box:LO:HI`, `random-polytope:SEED`), always in two dimensions.

use polycong::bounds::BoundReport;
use polycong::counting::count_nf;
use polycong::cover::{build_cover, Anchor};
use polycong::poly::Polynomial;
use polycong::regions::spec::parse_region_arg;
use polycong::regions::Region;
use wasm_bindgen::prelude::*;

const DIMS: usize = 2;
const MEASURE_SAMPLES: u64 = 200_000;

fn region(spec: &str) -> Result<Region, JsError> {
    Ok(parse_region_arg(spec, DIMS)?.build()?)
}

/// Cover cubes as flat `[x0, x1, y0, y1, level]` records, clipped to the unit square.
#[wasm_bindgen]
pub fn cover_cubes(spec: &str, depth: u32) -> Result<Vec<f64>, JsError> {
    let region = region(spec)?;
    let anchor = Anchor::standard(DIMS)?;
    let cover = build_cover(&region, depth, &anchor)?;
    let mut out = Vec::new();
    for (i, family) in cover.families.iter().enumerate() {
        for cube in family {
            let iv = cube.clipped(&anchor);
            out.extend([iv[0].0, iv[0].1, iv[1].0, iv[1].1, (i + 1) as f64]);
        }
    }
    Ok(out)
}

/// Residue pairs `[x, y, ...]` with `F(x, y) = 0 mod m` and `(x, y)/m` in the region.
#[wasm_bindgen]
pub fn solution_points(poly: &str, modulus: u32, spec: &str) -> Result<Vec<u32>, JsError> {
    let m = modulus as u64;
    let f = Polynomial::parse_with_dims(poly, m, DIMS)?;
    let region = region(spec)?;
    let mut out = Vec::new();
    for x in 0..m {
        for y in 0..m {
            if f.evaluate_residues(&[x, y]) == 0 && region.contains(&[x as f64 / m as f64, y as f64 / m as f64])? {
                out.extend([x as u32, y as u32]);
            }
        }
    }
    Ok(out)
}

/// `[count, mu, bound, ratio]` for the general region bound with slack `m^slack_exp`.
#[wasm_bindgen]
pub fn count_vs_bound(poly: &str, modulus: u32, spec: &str, slack_exp: f64) -> Result<Vec<f64>, JsError> {
    let m = modulus as u64;
    let f = Polynomial::parse_with_dims(poly, m, DIMS)?;
    let region = region(spec)?;
    let count = count_nf(&f, &region)?.count as f64;
    let mu = region.measure(MEASURE_SAMPLES, 1)?.value;
    let report = BoundReport::thm34(m, mu, f.degree(), DIMS, (m as f64).powf(slack_exp))?;
    Ok(vec![count, mu, report.bound, count / report.bound])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_square_points() {
        let pts = solution_points("x1^2+x2^2", 5, "full").unwrap();
        assert_eq!(pts.len(), 2 * 9);
    }

    #[test]
    fn cubes_are_records_inside_the_square() {
        let cubes = cover_cubes("ball:0.3@0.5,0.5", 4).unwrap();
        assert_eq!(cubes.len() % 5, 0);
        assert!(cubes.chunks(5).all(|c| (0.0..=1.0).contains(&c[0]) && c[1] <= 1.0 && c[4] >= 1.0));
    }

    #[test]
    fn count_matches_points() {
        let v = count_vs_bound("x1^2+x2^2-1", 31, "ball:0.4@0.5,0.5", 0.0).unwrap();
        let pts = solution_points("x1^2+x2^2-1", 31, "ball:0.4@0.5,0.5").unwrap();
        assert_eq!(v[0] as usize, pts.len() / 2);
        assert!(v[3] > 0.0);
    }
}
