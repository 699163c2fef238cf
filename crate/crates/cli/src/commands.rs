//! Subcommands of the `topp` binary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use topp_core::constraints::DEFAULT_X_CAP;
use topp_core::discretize::Scheme;
use topp_core::lp::DEFAULT_SEED as LP_SEED;
use topp_core::oracle::{dp_controllable, dp_optimal_cost, mask_extent, DpConfig, AGREEMENT_CONSTANT};
use topp_core::reach::{Interval, Reachability};
use topp_core::solver::{duration, extract_trajectory, topp_ra_seeded, SolveReport, SolveStatus};
use topp_core::study::{self, BenchmarkConfig, GridStudyConfig};

use crate::document::ProblemDocument;

/// Exit status of a solve whose problem is well formed but infeasible.
pub const EXIT_INFEASIBLE: u8 = 2;
/// Exit status of `verify` when the oracle disagrees with the solver.
pub const EXIT_DISAGREE: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "topp", version, about = "Time-optimal path parameterization by reachability analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a problem and write result.json, trajectory.csv and timings.json.
    Solve(SolveArgs),
    /// Print the reachable (or, with --backward, controllable) boundary interval.
    Avp(AvpArgs),
    /// Solve random instances and write per-joint-count statistics.
    Benchmark(BenchmarkArgs),
    /// Solve one problem on several grids and report constraint errors.
    GridStudy(GridStudyArgs),
    /// Compare the solver with the dynamic programming oracle.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SchemeArg {
    Collocation,
    Interpolation,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Collocation => Scheme::Collocation,
            SchemeArg::Interpolation => Scheme::Interpolation,
        }
    }
}

/// Overrides applied on top of the problem document.
#[derive(Debug, Args)]
pub struct ProblemArgs {
    /// Problem document (JSON).
    pub problem: PathBuf,
    #[arg(long)]
    pub scheme: Option<SchemeArg>,
    /// Number of grid segments.
    #[arg(long = "N", id = "segments")]
    pub segments: Option<usize>,
    /// Seed of the randomized LP solver.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Upper bound on the squared path velocity.
    #[arg(long = "x-cap")]
    pub x_cap: Option<f64>,
}

impl ProblemArgs {
    fn load(&self) -> Result<ProblemDocument> {
        let mut doc = ProblemDocument::from_file(&self.problem)?;
        if let Some(s) = self.scheme {
            doc.scheme = s.into();
        }
        if let Some(n) = self.segments {
            doc.segments = n;
        }
        if let Some(seed) = self.seed {
            doc.seed = Some(seed);
        }
        if let Some(cap) = self.x_cap {
            doc.x_cap = Some(cap);
        }
        Ok(doc)
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Trajectory sampling step in seconds.
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
}

#[derive(Debug, Args)]
pub struct AvpArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Propagate the seed interval from the end of the path to its start.
    #[arg(long)]
    pub backward: bool,
    /// Also write avp.json into this directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Joint counts, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "4,8,16,32,64")]
    pub dofs: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long = "N", id = "segments", default_value_t = 100)]
    pub segments: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "collocation")]
    pub scheme: SchemeArg,
    #[arg(long = "x-cap", default_value_t = DEFAULT_X_CAP)]
    pub x_cap: f64,
    /// Worker threads; each solve stays single-threaded.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GridStudyArgs {
    /// Problem document (JSON); its N is ignored.
    pub problem: PathBuf,
    /// Grid sizes, comma separated.
    #[arg(long = "N", id = "segments", value_delimiter = ',', default_value = "25,50,100,200,400")]
    pub segments: Vec<usize>,
    /// Restrict the study to one scheme; both are run by default.
    #[arg(long)]
    pub scheme: Option<SchemeArg>,
    /// Error samples per segment on average.
    #[arg(long, default_value_t = 20)]
    pub samples: usize,
    #[arg(long = "x-cap")]
    pub x_cap: Option<f64>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Number of oracle grid states.
    #[arg(long = "grid-size", default_value_t = 401)]
    pub grid_size: usize,
    /// Largest accepted distance between set endpoints and oracle masks, in cells.
    #[arg(long = "max-gap-cells", default_value_t = 2.0)]
    pub max_gap_cells: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Solve(a) => solve(&a),
        Command::Avp(a) => avp(&a),
        Command::Benchmark(a) => benchmark(&a),
        Command::GridStudy(a) => grid_study(&a),
        Command::Verify(a) => verify(&a),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub duration: Option<f64>,
    pub xs: Vec<f64>,
    pub us: Vec<f64>,
    pub controllable_lower: Vec<Option<f64>>,
    pub controllable_upper: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timings {
    pub set_seconds: f64,
    pub greedy_seconds: f64,
    pub lp_count: usize,
    pub set_lps: usize,
    pub greedy_lps: usize,
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn solve_document(doc: &ProblemDocument) -> Result<(crate::document::Built, SolveReport)> {
    let built = doc.build()?;
    let report = topp_ra_seeded(&built.problem, doc.sdot0, doc.sdot_n, doc.seed.unwrap_or(LP_SEED))?;
    Ok((built, report))
}

fn solve(args: &SolveArgs) -> Result<ExitCode> {
    let doc = args.problem.load()?;
    let (built, report) = solve_document(&doc)?;
    create_dir(&args.out)?;
    let grid = &built.problem.grid;
    let (duration, xs, us) = match &report.parameterization {
        Some(p) => (Some(duration(p, grid)?), p.xs.clone(), p.us.clone()),
        None => (None, vec![], vec![]),
    };
    let result = SolveResult {
        status: report.status,
        duration,
        xs,
        us,
        controllable_lower: report.controllable.iter().map(Interval::lower).collect(),
        controllable_upper: report.controllable.iter().map(Interval::upper).collect(),
    };
    write_json(&args.out.join("result.json"), &result)?;
    let d = &report.diagnostics;
    let timings = Timings {
        set_seconds: d.set_seconds,
        greedy_seconds: d.greedy_seconds,
        lp_count: d.lp_count,
        set_lps: d.set_lps,
        greedy_lps: d.greedy_lps,
    };
    write_json(&args.out.join("timings.json"), &timings)?;
    let Some(param) = &report.parameterization else {
        eprintln!("infeasible: the start state is not controllable");
        return Ok(ExitCode::from(EXIT_INFEASIBLE));
    };
    let traj = extract_trajectory(&built.path, param, grid, args.dt)?;
    fs::write(args.out.join("trajectory.csv"), trajectory_csv(&traj))
        .with_context(|| format!("cannot write trajectory into {}", args.out.display()))?;
    println!("solved: duration {:.9} s over {} segments", traj.duration, grid.segments());
    Ok(ExitCode::SUCCESS)
}

pub fn trajectory_csv(traj: &topp_core::solver::Trajectory) -> String {
    let dof = traj.positions.first().map_or(0, Vec::len);
    let mut out = String::from("t");
    for prefix in ["q", "qd", "qdd"] {
        for j in 0..dof {
            write!(out, ",{prefix}{j}").unwrap();
        }
    }
    out.push_str(",s,sdot\n");
    for k in 0..traj.times.len() {
        write!(out, "{:.16e}", traj.times[k]).unwrap();
        for row in [&traj.positions[k], &traj.velocities[k], &traj.accelerations[k]] {
            for v in row {
                write!(out, ",{v:.16e}").unwrap();
            }
        }
        writeln!(out, ",{:.16e},{:.16e}", traj.s[k], traj.sdot[k]).unwrap();
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AvpResult {
    pub direction: &'static str,
    pub empty: bool,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

fn avp(args: &AvpArgs) -> Result<ExitCode> {
    let doc = args.problem.load()?;
    let built = doc.build()?;
    let reach = Reachability::with_seed(&built.problem, doc.seed.unwrap_or(LP_SEED));
    let seed_set = doc.avp_interval();
    let (direction, set) = if args.backward {
        ("backward", reach.controllable_sets(seed_set)?[0])
    } else {
        ("forward", reach.reachable_sets(seed_set)?[built.problem.segments()])
    };
    let result = AvpResult { direction, empty: set.is_empty(), lower: set.lower(), upper: set.upper() };
    if let Some(dir) = &args.out {
        create_dir(dir)?;
        write_json(&dir.join("avp.json"), &result)?;
    }
    println!("{}", serde_json::to_string(&result)?);
    Ok(ExitCode::SUCCESS)
}

fn benchmark(args: &BenchmarkArgs) -> Result<ExitCode> {
    let config = BenchmarkConfig {
        dofs: args.dofs.clone(),
        trials: args.trials,
        segments: args.segments,
        seed: args.seed,
        scheme: args.scheme.into(),
        x_cap: args.x_cap,
        jobs: args.jobs,
    };
    let (rows, trials) = study::run_benchmark(&config)?;
    create_dir(&args.out)?;
    let mut summary = String::from(
        "dof,m,trials,success_rate,mean_seconds_per_point,median_seconds_per_point,lp_count_total,lp_count_exact\n",
    );
    for r in &rows {
        writeln!(
            summary,
            "{},{},{},{},{:.6e},{:.6e},{},{}",
            r.dof,
            r.m,
            r.trials,
            r.success_rate,
            r.mean_seconds_per_point,
            r.median_seconds_per_point,
            r.lp_count_total,
            r.lp_count_exact
        )
        .unwrap();
    }
    fs::write(args.out.join("benchmark.csv"), &summary).context("cannot write benchmark.csv")?;
    let mut detail = String::from("dof,seed,status,solve_seconds,lp_count,duration,max_stage_violation\n");
    let opt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:.16e}"));
    for t in &trials {
        let status = if t.status == SolveStatus::Solved { "solved" } else { "infeasible" };
        writeln!(
            detail,
            "{},{},{status},{:.6e},{},{},{}",
            t.dof,
            t.seed,
            t.solve_seconds,
            t.lp_count,
            opt(t.duration),
            opt(t.max_stage_violation)
        )
        .unwrap();
    }
    fs::write(args.out.join("trials.csv"), detail).context("cannot write trials.csv")?;
    print!("{summary}");
    let m: Vec<f64> = rows.iter().map(|r| r.m as f64).collect();
    let t: Vec<f64> = rows.iter().map(|r| r.median_seconds_per_point).collect();
    if let Some(fit) = study::linear_fit(&m, &t) {
        println!("median time per point vs m: slope {:.3e} s, r^2 {:.4}", fit.slope, fit.r_squared);
    }
    Ok(ExitCode::SUCCESS)
}

fn grid_study(args: &GridStudyArgs) -> Result<ExitCode> {
    let mut doc = ProblemDocument::from_file(&args.problem)?;
    if doc.uncertainty.is_some() {
        bail!("grid-study does not support uncertainty sets");
    }
    if let Some(cap) = args.x_cap {
        doc.x_cap = Some(cap);
    }
    let built = doc.build()?;
    let schemes = match args.scheme {
        Some(s) => vec![s.into()],
        None => vec![Scheme::Collocation, Scheme::Interpolation],
    };
    let config = GridStudyConfig {
        segments: args.segments.clone(),
        schemes,
        sdot0: doc.sdot0,
        sdot_n: doc.sdot_n,
        x_cap: doc.x_cap(),
        samples_per_segment: args.samples,
    };
    let rows = study::grid_study(&built.path, &built.constraints, &config)?;
    create_dir(&args.out)?;
    let mut csv = String::from("scheme,N,duration,max_abs_error,max_rel_error\n");
    for r in &rows {
        writeln!(
            csv,
            "{},{},{:.16e},{:.16e},{:.16e}",
            scheme_name(r.scheme),
            r.segments,
            r.duration,
            r.max_abs_error,
            r.max_rel_error
        )
        .unwrap();
    }
    fs::write(args.out.join("grid_study.csv"), &csv).context("cannot write grid_study.csv")?;
    print!("{csv}");
    for scheme in &config.schemes {
        let (n, e): (Vec<f64>, Vec<f64>) = rows
            .iter()
            .filter(|r| r.scheme == *scheme && r.max_abs_error > 0.0)
            .map(|r| (r.segments as f64, r.max_abs_error))
            .unzip();
        if let Some(slope) = study::log_log_slope(&n, &e) {
            println!("{}: max_abs_error ~ N^{slope:.3}", scheme_name(*scheme));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn scheme_name(s: Scheme) -> &'static str {
    match s {
        Scheme::Collocation => "collocation",
        Scheme::Interpolation => "interpolation",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyResult {
    pub grid_size: usize,
    pub cell: f64,
    /// Largest distance between a controllable-set endpoint and the oracle mask, in cells.
    pub worst_gap_cells: f64,
    pub duration: Option<f64>,
    pub oracle_duration: Option<f64>,
    /// `|T - T_dp| / (1/G + Δ)`; zero when both are infeasible.
    pub ratio: f64,
    pub constant: f64,
    pub passed: bool,
}

fn verify(args: &VerifyArgs) -> Result<ExitCode> {
    let doc = args.problem.load()?;
    if doc.uncertainty.is_some() {
        bail!("verify does not support uncertainty sets");
    }
    let (built, report) = solve_document(&doc)?;
    let problem = &built.problem;
    let end = Interval::point(doc.sdot_n * doc.sdot_n);
    let x_max = report.controllable.iter().filter_map(|k| k.upper()).fold(0.0, f64::max) * 1.1;
    let x_max = if x_max > 0.0 { x_max } else { 1.0 };
    let config = DpConfig::new(args.grid_size, x_max)?;
    let masks = dp_controllable(problem, end, &config)?;
    let mut worst_gap_cells = 0.0f64;
    for (set, mask) in report.controllable.iter().zip(&masks) {
        match (set.bounds(), mask_extent(mask, &config)) {
            (Some((a, b)), Some((c, d))) => {
                worst_gap_cells = worst_gap_cells.max((a - c).abs().max((b - d).abs()) / config.cell())
            }
            (None, None) => {}
            _ => worst_gap_cells = f64::INFINITY,
        }
    }
    let dur = report.parameterization.as_ref().map(|p| duration(p, &problem.grid)).transpose()?;
    let dp = dp_optimal_cost(problem, doc.sdot0 * doc.sdot0, doc.sdot_n * doc.sdot_n, &config)?;
    let oracle_duration = dp.is_finite().then_some(dp);
    let allowance =
        1.0 / config.grid_size as f64 + (0..problem.segments()).map(|i| problem.delta(i)).fold(0.0, f64::max);
    let ratio = match (dur, oracle_duration) {
        (Some(t), Some(d)) => (t - d).abs() / allowance,
        (None, None) => 0.0,
        _ => f64::INFINITY,
    };
    let passed = worst_gap_cells <= args.max_gap_cells && ratio <= AGREEMENT_CONSTANT;
    let result = VerifyResult {
        grid_size: config.grid_size,
        cell: config.cell(),
        worst_gap_cells,
        duration: dur,
        oracle_duration,
        ratio,
        constant: AGREEMENT_CONSTANT,
        passed,
    };
    if let Some(dir) = &args.out {
        create_dir(dir)?;
        write_json(&dir.join("verify.json"), &result)?;
    }
    println!("{}", serde_json::to_string(&result)?);
    Ok(if passed { ExitCode::SUCCESS } else { ExitCode::from(EXIT_DISAGREE) })
}
