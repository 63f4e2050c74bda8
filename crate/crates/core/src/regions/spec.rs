//! Region spec files.
//!
//! A spec is a TOML table with a `kind` tag. Numbers are written as decimal
//! strings (plain TOML numbers are also accepted):
//!
//! ```toml
//! kind = "ball"
//! center = ["0.5", "0.5"]
//! radius = "0.3"
//! ```
//!
//! | kind              | fields                                                 |
//! |-------------------|--------------------------------------------------------|
//! | `cube`            | `dims`                                                 |
//! | `box`             | `lo`, `hi`                                             |
//! | `ball`            | `center`, `radius`                                     |
//! | `ellipsoid`       | `center`, `semi_axes`                                  |
//! | `polytope`        | `[[halfspaces]]` tables with `normal`, `offset`        |
//! | `simplex`         | `vertices` (list of `d + 1` points)                    |
//! | `random-polytope` | `dims`, `facets`, `seed`                               |
//! | `oracle`          | `of` (a nested spec), `distance` (bool, default false) |
//!
//! A polytope is `{x in [0,1]^d : normal . x <= offset for every halfspace}`.
//! An oracle hides the nested region's formulas and answers membership only
//! (plus signed distance when `distance = true`).
//!
//! The command line also accepts shorthands, see [`parse_region_arg`].

use std::fmt;
use std::path::Path;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{Region, RegionError};

/// A real number written as a decimal string.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decimal(pub f64);

impl Serialize for Decimal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

impl<'de> Deserialize<'de> for Decimal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Decimal;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a decimal string or number")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Decimal, E> {
                let x: f64 = v.trim().parse().map_err(|_| E::custom(format!("not a decimal: {v:?}")))?;
                if x.is_finite() {
                    Ok(Decimal(x))
                } else {
                    Err(E::custom(format!("not finite: {v:?}")))
                }
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Decimal, E> {
                Ok(Decimal(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Decimal, E> {
                Ok(Decimal(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Decimal, E> {
                Ok(Decimal(v as f64))
            }
        }
        d.deserialize_any(V)
    }
}

fn reals(v: &[Decimal]) -> Vec<f64> {
    v.iter().map(|x| x.0).collect()
}

fn decimals(v: &[f64]) -> Vec<Decimal> {
    v.iter().copied().map(Decimal).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HalfspaceSpec {
    pub normal: Vec<Decimal>,
    pub offset: Decimal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RegionSpec {
    Cube { dims: usize },
    Box { lo: Vec<Decimal>, hi: Vec<Decimal> },
    Ball { center: Vec<Decimal>, radius: Decimal },
    Ellipsoid { center: Vec<Decimal>, semi_axes: Vec<Decimal> },
    Polytope { halfspaces: Vec<HalfspaceSpec> },
    Simplex { vertices: Vec<Vec<Decimal>> },
    RandomPolytope { dims: usize, facets: usize, seed: u64 },
    Oracle {
        of: std::boxed::Box<RegionSpec>,
        #[serde(default)]
        distance: bool,
    },
}

impl RegionSpec {
    pub fn build(&self) -> Result<Region, RegionError> {
        match self {
            RegionSpec::Cube { dims } => Region::unit_cube(*dims),
            RegionSpec::Box { lo, hi } => Region::boxed(reals(lo), reals(hi)),
            RegionSpec::Ball { center, radius } => Region::ball(reals(center), radius.0),
            RegionSpec::Ellipsoid { center, semi_axes } => Region::ellipsoid(reals(center), reals(semi_axes)),
            RegionSpec::Polytope { halfspaces } => Region::polytope(
                halfspaces.iter().map(|h| reals(&h.normal)).collect(),
                halfspaces.iter().map(|h| h.offset.0).collect(),
            ),
            RegionSpec::Simplex { vertices } => Region::simplex(vertices.iter().map(|v| reals(v)).collect()),
            RegionSpec::RandomPolytope { dims, facets, seed } => Region::random_polytope(*dims, *facets, *seed),
            RegionSpec::Oracle { of, distance } => Region::oracle_wrapping(&of.build()?, *distance),
        }
    }

    pub fn from_toml(text: &str) -> Result<RegionSpec, RegionError> {
        toml::from_str(text).map_err(|e| RegionError::Spec(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("region specs always serialize")
    }

    pub fn ball(center: &[f64], radius: f64) -> RegionSpec {
        RegionSpec::Ball { center: decimals(center), radius: Decimal(radius) }
    }

    pub fn boxed(lo: &[f64], hi: &[f64]) -> RegionSpec {
        RegionSpec::Box { lo: decimals(lo), hi: decimals(hi) }
    }
}

fn numbers(text: &str) -> Result<Vec<f64>, RegionError> {
    text.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| RegionError::Spec(format!("not a decimal: {t:?}"))))
        .collect()
}

/// Parses a command-line region argument in `dims` dimensions:
///
/// * `full` or `cube`: the unit cube;
/// * `ball:R@C1,C2,...`: ball of radius `R` around `C`;
/// * `box:LO1,LO2,...:HI1,HI2,...`;
/// * `random-polytope:SEED[:FACETS]` (10 facets by default);
/// * anything else is read as a path to a TOML spec file.
pub fn parse_region_arg(arg: &str, dims: usize) -> Result<RegionSpec, RegionError> {
    let spec = if arg == "full" || arg == "cube" {
        RegionSpec::Cube { dims }
    } else if let Some(rest) = arg.strip_prefix("ball:") {
        let (r, c) = rest.split_once('@').ok_or_else(|| RegionError::Spec("ball shorthand is ball:R@C1,C2,...".into()))?;
        RegionSpec::ball(&numbers(c)?, numbers(r)?[0])
    } else if let Some(rest) = arg.strip_prefix("box:") {
        let (lo, hi) = rest.split_once(':').ok_or_else(|| RegionError::Spec("box shorthand is box:LO,..:HI,..".into()))?;
        RegionSpec::boxed(&numbers(lo)?, &numbers(hi)?)
    } else if let Some(rest) = arg.strip_prefix("random-polytope:") {
        let mut parts = rest.split(':');
        let parse = |t: Option<&str>, default: Option<u64>| -> Result<u64, RegionError> {
            match t {
                Some(t) => t.trim().parse().map_err(|_| RegionError::Spec(format!("not an integer: {t:?}"))),
                None => default.ok_or_else(|| RegionError::Spec("random-polytope needs a seed".into())),
            }
        };
        let seed = parse(parts.next(), None)?;
        let facets = parse(parts.next(), Some(10))? as usize;
        RegionSpec::RandomPolytope { dims, facets, seed }
    } else {
        let text = std::fs::read_to_string(Path::new(arg)).map_err(|e| RegionError::Spec(format!("{arg}: {e}")))?;
        RegionSpec::from_toml(&text)?
    };
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_spec_from_strings() {
        let spec = RegionSpec::from_toml("kind = \"ball\"\ncenter = [\"0.5\", \"0.5\"]\nradius = \"0.3\"\n").unwrap();
        let r = spec.build().unwrap();
        assert!(r.contains(&[0.5, 0.7]).unwrap());
        assert!(!r.contains(&[0.5, 0.9]).unwrap());
    }

    #[test]
    fn polytope_and_oracle_specs() {
        let text = r#"
kind = "oracle"
distance = true
[of]
kind = "polytope"
[[of.halfspaces]]
normal = ["1", "1"]
offset = "1"
"#;
        let spec = RegionSpec::from_toml(text).unwrap();
        let r = spec.build().unwrap();
        assert!(r.has_signed_distance());
        assert!(r.contains(&[0.2, 0.2]).unwrap());
        assert!(!r.contains(&[0.7, 0.7]).unwrap());
        assert_eq!(RegionSpec::from_toml(&spec.to_toml()).unwrap(), spec);
    }

    #[test]
    fn bad_specs_are_rejected() {
        assert!(RegionSpec::from_toml("kind = \"ball\"\ncenter = [\"x\"]\nradius = \"1\"").is_err());
        assert!(RegionSpec::from_toml("kind = \"torus\"").is_err());
        assert!(RegionSpec::from_toml("kind = \"cube\"\ndims = 2\nextra = 1").is_err());
    }

    #[test]
    fn shorthands() {
        assert_eq!(parse_region_arg("full", 3).unwrap(), RegionSpec::Cube { dims: 3 });
        assert_eq!(parse_region_arg("ball:0.3@0.5,0.5", 2).unwrap(), RegionSpec::ball(&[0.5, 0.5], 0.3));
        assert_eq!(parse_region_arg("box:0,0:0.5,1", 2).unwrap(), RegionSpec::boxed(&[0.0, 0.0], &[0.5, 1.0]));
        assert_eq!(
            parse_region_arg("random-polytope:7", 3).unwrap(),
            RegionSpec::RandomPolytope { dims: 3, facets: 10, seed: 7 }
        );
        assert!(parse_region_arg("/nonexistent/region.toml", 2).is_err());
    }

    #[test]
    fn spec_file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.toml");
        let spec = RegionSpec::Simplex {
            vertices: vec![decimals(&[0.0, 0.0]), decimals(&[1.0, 0.0]), decimals(&[0.0, 1.0])],
        };
        std::fs::write(&path, spec.to_toml()).unwrap();
        let back = parse_region_arg(path.to_str().unwrap(), 2).unwrap();
        assert_eq!(back, spec);
        assert!((back.build().unwrap().measure(1, 0).unwrap().value - 0.5).abs() < 1e-15);
    }
}
