//! Bound sweeps driven by an [`ExperimentConfig`].

use rayon::prelude::*;

use crate::bounds::{BoundName, BoundReport, CSV_HEADER};
use crate::config::ExperimentConfig;
use crate::counting::{count_mf, count_nf};
use crate::poly::Polynomial;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    /// Header plus rows, newline terminated.
    pub csv: String,
    pub rows: usize,
    /// Rows whose count or bound could not be computed.
    pub errors: usize,
    /// Upper-bound rows where the observed count exceeds the bound.
    pub exceeded: usize,
}

enum Row {
    Report(BoundReport),
    Error { name: &'static str, m: u64, note: String },
}

impl Row {
    fn csv(&self) -> String {
        match self {
            Row::Report(r) => r.csv_row(),
            Row::Error { name, m, note } => {
                let blanks = CSV_HEADER.split(',').count() - 3;
                format!("{name},{m},{}{}", ",".repeat(blanks), note.replace([',', '\n'], ";"))
            }
        }
    }
}

fn observed(mut rep: BoundReport, count: u128) -> Row {
    rep.observed = Some(count);
    Row::Report(rep)
}

fn bound_row<E: std::fmt::Display>(name: BoundName, m: u64, rep: Result<BoundReport, E>, count: u128) -> Row {
    match rep {
        Ok(rep) => observed(rep, count),
        Err(e) => Row::Error { name: name.as_str(), m, note: e.to_string() },
    }
}

fn region_rows(cfg: &ExperimentConfig, text: &str, m: u64, out: &mut Vec<Row>) {
    let slack = (m as f64).powf(cfg.slack_exponent);
    for spec in &cfg.regions {
        let fail = |note: String| Row::Error { name: BoundName::Thm34.as_str(), m, note };
        let region = match spec.build() {
            Ok(r) => r,
            Err(e) => {
                out.push(fail(e.to_string()));
                continue;
            }
        };
        let f = match Polynomial::parse_with_dims(text, m, region.dims()) {
            Ok(f) => f,
            Err(e) => {
                out.push(fail(e.to_string()));
                continue;
            }
        };
        let count = match count_nf(&f, &region) {
            Ok(c) => c.count,
            Err(e) => {
                out.push(fail(e.to_string()));
                continue;
            }
        };
        let mu = match region.measure(cfg.measure_samples, cfg.seed) {
            Ok(mu) => mu.value,
            Err(e) => {
                out.push(fail(e.to_string()));
                continue;
            }
        };
        let (k, d) = (f.degree(), f.dims());
        out.push(bound_row(BoundName::Thm34, m, BoundReport::thm34(m, mu, k, d, slack), count));
        if f.is_graph_form() {
            out.push(bound_row(BoundName::Thm35, m, BoundReport::thm35(m, mu, k, d, slack), count));
        }
    }
}

fn box_rows(cfg: &ExperimentConfig, text: &str, m: u64, out: &mut Vec<Row>) {
    if cfg.heights.is_empty() {
        return;
    }
    let slack = (m as f64).powf(cfg.slack_exponent);
    let f = match Polynomial::parse(text, m) {
        Ok(f) => f,
        Err(e) => {
            out.push(Row::Error { name: BoundName::Thm31.as_str(), m, note: e.to_string() });
            return;
        }
    };
    let (k, d) = (f.degree(), f.dims());
    let origin = vec![0i64; d];
    for &h in &cfg.heights {
        for &r in &cfg.r_values {
            match count_mf(&f, &origin, 0, h, r, &cfg.budget) {
                Ok(c) => {
                    out.push(bound_row(BoundName::Thm31, m, BoundReport::thm31(h as f64, r as f64, m, k, d, slack), c.count));
                    out.push(bound_row(BoundName::Heuristic, m, BoundReport::heuristic(h as f64, r as f64, m, k, d), c.count));
                }
                Err(e) => out.push(Row::Error { name: BoundName::Thm31.as_str(), m, note: e.to_string() }),
            }
        }
    }
}

/// Runs every grid point; rows come out in grid order (polynomial, modulus,
/// then regions, then `(H, R)` pairs) regardless of thread count.
pub fn run_experiment(cfg: &ExperimentConfig) -> ExperimentOutput {
    let points: Vec<(&str, u64)> =
        cfg.polynomials.iter().flat_map(|p| cfg.moduli.iter().map(move |&m| (p.as_str(), m))).collect();
    let blocks: Vec<Vec<Row>> = points
        .par_iter()
        .map(|&(text, m)| {
            let mut rows = Vec::new();
            region_rows(cfg, text, m, &mut rows);
            box_rows(cfg, text, m, &mut rows);
            rows
        })
        .collect();
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    let (mut rows, mut errors, mut exceeded) = (0, 0, 0);
    for row in blocks.iter().flatten() {
        rows += 1;
        match row {
            Row::Error { .. } => errors += 1,
            Row::Report(r) if r.is_upper_bound() && !r.passed() => exceeded += 1,
            Row::Report(_) => {}
        }
        csv.push_str(&row.csv());
        csv.push('\n');
    }
    ExperimentOutput { csv, rows, errors, exceeded }
}
