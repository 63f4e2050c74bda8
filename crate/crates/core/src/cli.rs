//! Command-line front end.
//!
//! Exit codes: 0 success, 1 invariant violation, 2 usage or parse error,
//! 3 budget exceeded. `POLYCONG_THREADS` sets the worker count unless
//! `--threads` is given.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bounds::{BoundReport, CSV_HEADER};
use crate::config::{ConfigError, ExperimentConfig};
use crate::counting::chain::{run_grid, ChainGrid, ChainVerifier};
use crate::counting::{
    count_j, count_j_convolution, count_mf, count_nf, count_t, Budget, CountError, CountResult,
};
use crate::cover::{build_cover, verify_cover, Anchor, CoverError};
use crate::experiment::run_experiment;
use crate::poly::{index_count, Polynomial};
use crate::regions::spec::parse_region_arg;
use crate::regions::RegionError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

pub const THREADS_ENV: &str = "POLYCONG_THREADS";

#[derive(Debug, Parser)]
#[command(name = "polycong", version, about = "Exact counts, covers and bounds for polynomial congruences")]
pub struct Cli {
    /// Worker threads (overrides POLYCONG_THREADS).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact solution counts, one JSON record per line.
    Count {
        #[command(subcommand)]
        what: CountCommand,
    },
    /// Build the dyadic cover of a region and verify it.
    Cover(CoverArgs),
    /// Check the counting inequality chain on a grid or a single instance.
    VerifyChain(ChainArgs),
    /// Run a bound sweep from a TOML config and write CSV.
    Experiment(ExperimentArgs),
    /// Evaluate one closed-form bound and print it as a CSV row.
    Bounds(BoundsArgs),
}

#[derive(Debug, Args)]
pub struct BudgetArgs {
    /// Cap on directly enumerated points or tuples.
    #[arg(long, default_value_t = Budget::default().direct)]
    pub budget_direct: u64,
    /// Cap on signature-table entries.
    #[arg(long, default_value_t = Budget::default().table)]
    pub budget_table: u64,
    /// Report elapsed time as 0 so output is byte-reproducible.
    #[arg(long)]
    pub no_timing: bool,
}

impl BudgetArgs {
    fn budget(&self) -> Budget {
        Budget { direct: self.budget_direct, table: self.budget_table }
    }
}

#[derive(Debug, Subcommand)]
pub enum CountCommand {
    /// Residues x with F(x) = 0 mod m and x/m in the region.
    Nf {
        /// Polynomial, e.g. "x1^2+x2^2-x3".
        #[arg(long)]
        poly: String,
        #[arg(long = "mod")]
        modulus: u64,
        /// full | ball:R@C1,C2.. | box:LO..:HI.. | random-polytope:SEED[:FACETS] | TOML file.
        #[arg(long, default_value = "full")]
        region: String,
        /// Dimension of the region (defaults to the number of variables of F).
        #[arg(long)]
        dims: Option<usize>,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Points x in the box a + [1, H]^d with F(x) mod m in L + [1, R].
    Mf {
        #[arg(long)]
        poly: String,
        #[arg(long = "mod")]
        modulus: u64,
        #[arg(long = "H")]
        h: u64,
        #[arg(long = "R")]
        r: u64,
        #[arg(long = "L", default_value_t = 0, allow_negative_numbers = true)]
        l: i64,
        /// Box offsets a, comma separated (defaults to the origin).
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        offset: Vec<i64>,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// 2s-tuples in [1, H]^d with F(x_1)+..+F(x_s)-F(x_(s+1))-..-F(x_2s) = u mod m.
    T {
        #[arg(long)]
        poly: String,
        #[arg(long = "mod")]
        modulus: u64,
        #[arg(long = "H")]
        h: u64,
        #[arg(long)]
        s: u32,
        #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
        u: i64,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Mean-value count J_{s,k,d}(U, H).
    J {
        #[arg(long)]
        s: u32,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        d: usize,
        #[arg(long = "H")]
        h: u64,
        /// Target U, comma separated in graded order (defaults to 0).
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        target: Vec<i64>,
        #[arg(long, value_enum, default_value_t = JChoice::Auto)]
        method: JChoice,
        #[command(flatten)]
        budget: BudgetArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum JChoice {
    /// Direct when H^(2sd) fits the direct budget, otherwise convolution.
    Auto,
    Direct,
    Convolution,
}

#[derive(Debug, Args)]
pub struct CoverArgs {
    /// Region, in the same forms as `count nf --region`.
    #[arg(long)]
    pub region: String,
    #[arg(long)]
    pub dims: usize,
    /// Depth M.
    #[arg(long)]
    pub depth: u32,
    /// Uniform points of the region used for the coverage check.
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Write the cube list here instead of discarding it.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Print the report as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ChainArgs {
    /// Single instance: polynomial (needs --mod, --H, --R, --s).
    #[arg(long)]
    pub poly: Option<String>,
    #[arg(long = "mod")]
    pub modulus: Option<u64>,
    #[arg(long = "H")]
    pub h: Option<u64>,
    #[arg(long = "R")]
    pub r: Option<u64>,
    /// Tuple length; on the grid, replaces the default s values.
    #[arg(long, value_delimiter = ',')]
    pub s: Vec<u32>,
    /// Polynomials per grid cell.
    #[arg(long)]
    pub polys_per_cell: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub budget: BudgetArgs,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// TOML experiment config.
    #[arg(long)]
    pub config: PathBuf,
    /// Output CSV (overrides the config; stdout when neither is set).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundChoice {
    Thm31,
    Cor32,
    Cor33,
    Thm34,
    Thm35,
    Heuristic,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(value_enum)]
    pub name: BoundChoice,
    #[arg(long = "mod")]
    pub modulus: u64,
    #[arg(long)]
    pub k: u32,
    #[arg(long)]
    pub d: usize,
    #[arg(long = "H")]
    pub big_h: Option<f64>,
    #[arg(long = "R")]
    pub big_r: Option<f64>,
    /// Cube side is 1/h.
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub slack: f64,
    /// Exact count to compare against; exit 1 when it exceeds the bound.
    #[arg(long)]
    pub observed: Option<u128>,
}

/// A failed command, mapped onto an exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Violation(String),
    Budget(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Violation(_) => EXIT_VIOLATION,
            Failure::Budget(_) => EXIT_BUDGET,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Violation(m) | Failure::Budget(m) => m,
        }
    }
}

impl From<CountError> for Failure {
    fn from(e: CountError) -> Self {
        match e {
            CountError::Budget { .. } => Failure::Budget(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<RegionError> for Failure {
    fn from(e: RegionError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<CoverError> for Failure {
    fn from(e: CoverError) -> Self {
        match e {
            CoverError::AnchorNotGeneric { .. } => Failure::Violation(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<crate::bounds::BoundError> for Failure {
    fn from(e: crate::bounds::BoundError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<crate::poly::PolyError> for Failure {
    fn from(e: crate::poly::PolyError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, Failure> {
    if let Some(n) = flag {
        return Ok(Some(n));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| Failure::Usage(format!("{THREADS_ENV}={v:?} is not a thread count"))),
        Err(_) => Ok(None),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let outcome = thread_count(cli.threads).and_then(|threads| {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = threads {
            builder = builder.num_threads(n);
        }
        let pool = builder.build().map_err(|e| Failure::Usage(e.to_string()))?;
        let mut buf = Vec::new();
        let result = pool.install(|| dispatch(&cli.command, &mut buf));
        out.write_all(&buf)?;
        result
    });
    match outcome {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message());
            f.code()
        }
    }
}

fn dispatch(command: &Command, out: &mut dyn Write) -> Outcome {
    match command {
        Command::Count { what } => cmd_count(what, out),
        Command::Cover(args) => cmd_cover(args, out),
        Command::VerifyChain(args) => cmd_verify_chain(args, out),
        Command::Experiment(args) => cmd_experiment(args, out),
        Command::Bounds(args) => cmd_bounds(args, out),
    }
}

fn emit(mut record: CountResult, no_timing: bool, out: &mut dyn Write) -> Outcome {
    if no_timing {
        record.elapsed_secs = 0.0;
    }
    let line = serde_json::to_string(&record).map_err(|e| Failure::Usage(e.to_string()))?;
    writeln!(out, "{line}")?;
    Ok(())
}

pub fn cmd_count(what: &CountCommand, out: &mut dyn Write) -> Outcome {
    match what {
        CountCommand::Nf { poly, modulus, region, dims, budget } => {
            let probe = Polynomial::parse(poly, *modulus)?;
            let dims = dims.unwrap_or(probe.dims());
            let f = Polynomial::parse_with_dims(poly, *modulus, dims)?;
            let region = parse_region_arg(region, dims)?.build()?;
            emit(count_nf(&f, &region)?, budget.no_timing, out)
        }
        CountCommand::Mf { poly, modulus, h, r, l, offset, budget } => {
            let f = Polynomial::parse(poly, *modulus)?;
            let offsets = if offset.is_empty() { vec![0; f.dims()] } else { offset.clone() };
            let f = if offsets.len() > f.dims() { Polynomial::parse_with_dims(poly, *modulus, offsets.len())? } else { f };
            emit(count_mf(&f, &offsets, *l, *h, *r, &budget.budget())?, budget.no_timing, out)
        }
        CountCommand::T { poly, modulus, h, s, u, budget } => {
            let f = Polynomial::parse(poly, *modulus)?;
            emit(count_t(&f, *u, *h, *s, &budget.budget())?, budget.no_timing, out)
        }
        CountCommand::J { s, k, d, h, target, method, budget } => {
            let target = if target.is_empty() { vec![0; index_count(*k, *d) as usize] } else { target.clone() };
            let b = budget.budget();
            let direct = match method {
                JChoice::Direct => true,
                JChoice::Convolution => false,
                JChoice::Auto => (*h as f64).powi((2 * *s as usize * *d) as i32) <= b.direct as f64,
            };
            let record = if direct {
                count_j(*s, *k, *d, &target, *h, &b)?
            } else {
                count_j_convolution(*s, *k, *d, &target, *h, &b)?
            };
            emit(record, budget.no_timing, out)
        }
    }
}

pub fn cmd_cover(args: &CoverArgs, out: &mut dyn Write) -> Outcome {
    let region = parse_region_arg(&args.region, args.dims)?.build()?;
    let anchor = Anchor::standard(args.dims)?;
    let cover = build_cover(&region, args.depth, &anchor)?;
    if let Some(path) = &args.output {
        fs::write(path, cover.export())?;
    }
    let report = verify_cover(&cover, &region, args.samples, args.seed)?;
    if args.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&report).map_err(|e| Failure::Usage(e.to_string()))?)?;
    } else {
        writeln!(out, "region      {}", cover.region)?;
        writeln!(out, "depth       {}", cover.depth)?;
        writeln!(out, "eps         {:.6e}", cover.eps)?;
        writeln!(out, "certificate {}", report.certificate.as_str())?;
        writeln!(out, "coverage    {:.4}% ({} of {} samples)", 100.0 * report.coverage(), report.sampled_points - report.uncovered, report.sampled_points)?;
        writeln!(out, "B_1 = C(2)  {}", report.b1_equals_c2)?;
        writeln!(out, "nesting     {}", report.nesting_ok)?;
        writeln!(out, "disjoint    {}", report.disjoint_ok)?;
        writeln!(out, "volume      {:.6} (clipped) vs mu {:.6} + shell {:.6}: {}", report.clipped_volume, report.mu.value, report.mu_outer_shell.value, report.volume_ok)?;
        writeln!(out, "i,j,B,C,B_ratio,discrepancy")?;
        for l in &report.levels {
            writeln!(out, "{},{},{},{},{:.6},{:.6}", l.level, l.j, l.b_count, l.c_count, l.b_ratio, l.discrepancy)?;
        }
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Violation(format!("cover check failed: {} uncovered samples", report.uncovered)))
    }
}

pub fn cmd_verify_chain(args: &ChainArgs, out: &mut dyn Write) -> Outcome {
    if args.s.contains(&0) {
        return Err(Failure::Usage("s must be at least 1".into()));
    }
    let verifier = ChainVerifier::new(args.budget.budget());
    if let Some(poly) = &args.poly {
        let need = |v: Option<u64>, name: &str| v.ok_or_else(|| Failure::Usage(format!("single-instance mode needs --{name}")));
        let f = Polynomial::parse(poly, need(args.modulus, "mod")?)?;
        let (h, r) = (need(args.h, "H")?, need(args.r, "R")?);
        let s = match args.s.as_slice() {
            [s] => *s,
            _ => return Err(Failure::Usage("single-instance mode needs exactly one --s".into())),
        };
        let report = verifier.verify(&f, h, r, s)?;
        write!(out, "{report}")?;
        return if report.passed() { Ok(()) } else { Err(Failure::Violation(format!("chain violated for {}", report.instance()))) };
    }
    let mut grid = ChainGrid::default();
    if !args.s.is_empty() {
        grid.s_values = args.s.clone();
    }
    if let Some(n) = args.polys_per_cell {
        grid.polys_per_cell = n;
    }
    if let Some(seed) = args.seed {
        grid.seed = seed;
    }
    let summary = run_grid(&grid, &verifier)?;
    writeln!(out, "instances          {}", summary.instances)?;
    writeln!(out, "link 1 violations  {}", summary.link1_violations)?;
    writeln!(out, "link 2 violations  {}", summary.link2_violations)?;
    writeln!(out, "link 2 strict      {}", summary.link2_strict)?;
    writeln!(out, "J(U) <= J(0) viol. {}", summary.monotone_violations)?;
    writeln!(out, "#U bound viol.     {}", summary.uset_violations)?;
    writeln!(out, "master viol.       {}", summary.master_violations)?;
    for f in &summary.failures {
        write!(out, "FAIL {f}")?;
    }
    if summary.violations() == 0 {
        writeln!(out, "all pass")?;
        Ok(())
    } else {
        Err(Failure::Violation(format!("{} violations", summary.violations())))
    }
}

pub fn cmd_experiment(args: &ExperimentArgs, out: &mut dyn Write) -> Outcome {
    let text = fs::read_to_string(&args.config).map_err(|e| Failure::Usage(format!("{}: {e}", args.config.display())))?;
    let cfg = ExperimentConfig::from_toml(&text)?;
    let result = run_experiment(&cfg);
    match args.output.as_ref().or(cfg.output.as_ref()) {
        Some(path) => fs::write(path, &result.csv)?,
        None => out.write_all(result.csv.as_bytes())?,
    }
    Ok(())
}

pub fn cmd_bounds(args: &BoundsArgs, out: &mut dyn Write) -> Outcome {
    let need = |v: Option<f64>, name: &str| v.ok_or_else(|| Failure::Usage(format!("this bound needs --{name}")));
    let (m, k, d, slack) = (args.modulus, args.k, args.d, args.slack);
    let mut report = match args.name {
        BoundChoice::Thm31 => BoundReport::thm31(need(args.big_h, "H")?, need(args.big_r, "R")?, m, k, d, slack)?,
        BoundChoice::Heuristic => BoundReport::heuristic(need(args.big_h, "H")?, need(args.big_r, "R")?, m, k, d)?,
        BoundChoice::Cor32 => BoundReport::cor32(m, need(args.h, "h")?, k, d, slack)?,
        BoundChoice::Cor33 => BoundReport::cor33(m, need(args.h, "h")?, k, d, slack)?,
        BoundChoice::Thm34 => BoundReport::thm34(m, need(args.mu, "mu")?, k, d, slack)?,
        BoundChoice::Thm35 => BoundReport::thm35(m, need(args.mu, "mu")?, k, d, slack)?,
    };
    report.observed = args.observed;
    writeln!(out, "{CSV_HEADER}")?;
    writeln!(out, "{}", report.csv_row())?;
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Violation("observed count exceeds the bound".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(std::iter::once("polycong").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    fn count_of(line: &str) -> u128 {
        let v: serde_json::Value = serde_json::from_str(line.trim()).unwrap();
        v["count"].as_u64().unwrap() as u128
    }

    #[test]
    fn count_examples() {
        let (code, out, _) = run_args(&["count", "nf", "--poly", "x1^2+x2^2", "--mod", "5", "--region", "full"]);
        assert_eq!((code, count_of(&out)), (0, 9));
        let (code, out, _) = run_args(&["count", "mf", "--poly", "x1^2", "--mod", "7", "--H", "3", "--R", "1", "--L", "0"]);
        assert_eq!((code, count_of(&out)), (0, 1));
        let (code, out, _) = run_args(&["count", "j", "--s", "1", "--k", "2", "--d", "1", "--H", "4"]);
        assert_eq!((code, count_of(&out)), (0, 4));
        let (_, conv, _) = run_args(&["count", "j", "--s", "2", "--k", "1", "--d", "1", "--H", "5", "--method", "convolution"]);
        assert_eq!(count_of(&conv), (2 * 125 + 5) / 3);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run_args(&["count", "nf", "--poly", "x1^^2", "--mod", "5"]).0, EXIT_USAGE);
        assert_eq!(run_args(&["count", "bogus"]).0, EXIT_USAGE);
        let (code, _, err) = run_args(&["count", "j", "--s", "3", "--k", "2", "--d", "2", "--H", "20", "--method", "direct"]);
        assert_eq!(code, EXIT_BUDGET, "{err}");
        assert_eq!(run_args(&["verify-chain", "--s", "0"]).0, EXIT_USAGE);
        assert_eq!(run_args(&["--help"]).0, EXIT_OK);
        let (code, out, _) = run_args(&["bounds", "thm34", "--mod", "101", "--k", "2", "--d", "3", "--mu", "0.1", "--observed", "1000000000"]);
        assert_eq!(code, EXIT_VIOLATION);
        assert!(out.starts_with(CSV_HEADER));
    }

    #[test]
    fn single_chain_instance_is_detailed() {
        let (code, out, _) = run_args(&["verify-chain", "--poly", "x1^2+3*x1", "--mod", "11", "--H", "4", "--R", "2", "--s", "2"]);
        assert_eq!(code, 0, "{out}");
        assert!(out.contains("J(0,H)") && out.contains("master inequality"));
    }

    #[test]
    fn cover_report_lists_levels() {
        let (code, out, _) = run_args(&["cover", "--region", "full", "--dims", "2", "--depth", "3", "--samples", "2000"]);
        assert_eq!(code, 0, "{out}");
        assert!(out.contains("coverage    100.0000%"));
        assert_eq!(out.lines().filter(|l| l.starts_with(|c: char| c.is_ascii_digit())).count(), 3);
    }
}
