//! Benchmark harness, grid-refinement study and the small regressions used
//! to summarize them.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::constraints::Constraint;
use crate::discretize::{constraint_satisfaction_error, discretize, make_grid, SatisfactionError, Scheme};
use crate::error::{Error, Result};
use crate::instances::RandomInstance;
use crate::path::GeometricPath;
use crate::solver::{duration, topp_ra, SolveStatus};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y = intercept + slope x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Some(LinearFit { slope, intercept, r_squared })
}

/// Slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly).map(|f| f.slope)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFit {
    /// `c0 + c1 x + c2 x^2`.
    pub coefficients: [f64; 3],
    pub standard_errors: [f64; 3],
    pub residual_dof: usize,
}

impl QuadraticFit {
    /// Two-sided test of `c2 = 0` at level `alpha`: true when not rejected.
    pub fn curvature_insignificant(&self, alpha: f64) -> bool {
        let se = self.standard_errors[2];
        if se == 0.0 {
            return self.coefficients[2] == 0.0;
        }
        self.coefficients[2].abs() / se < t_critical(self.residual_dof, alpha)
    }
}

/// Least-squares quadratic with coefficient standard errors.
pub fn quadratic_fit(x: &[f64], y: &[f64]) -> Option<QuadraticFit> {
    let n = x.len();
    if n != y.len() || n < 4 {
        return None;
    }
    let design = DMatrix::from_fn(n, 3, |r, c| x[r].powi(c as i32));
    let yv = DVector::from_column_slice(y);
    let normal = design.transpose() * &design;
    let inv = normal.try_inverse()?;
    let beta = &inv * design.transpose() * &yv;
    let resid = &yv - &design * &beta;
    let dof = n - 3;
    let sigma2 = resid.norm_squared() / dof as f64;
    let se = |k: usize| (sigma2 * inv[(k, k)]).max(0.0).sqrt();
    Some(QuadraticFit {
        coefficients: [beta[0], beta[1], beta[2]],
        standard_errors: [se(0), se(1), se(2)],
        residual_dof: dof,
    })
}

/// Two-sided Student-t critical value with `dof` degrees of freedom.
pub fn t_critical(dof: usize, alpha: f64) -> f64 {
    StudentsT::new(0.0, 1.0, dof.max(1) as f64).map(|t| t.inverse_cdf(1.0 - alpha / 2.0)).unwrap_or(f64::INFINITY)
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len().is_multiple_of(2) {
        0.5 * (v[mid - 1] + v[mid])
    } else {
        v[mid]
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Seed of trial `k` at `dof` joints under `base`.
pub fn trial_seed(base: u64, dof: usize, k: usize) -> u64 {
    base.wrapping_add((dof as u64) << 32).wrapping_add(k as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub dof: usize,
    pub seed: u64,
    pub status: SolveStatus,
    /// Wall-clock time of the solve call alone.
    pub solve_seconds: f64,
    pub lp_count: usize,
    pub duration: Option<f64>,
    /// Largest normalized stage-row residual of the solution.
    pub max_stage_violation: Option<f64>,
}

/// Generates, discretizes and solves one random instance, rest to rest.
pub fn run_trial(dof: usize, n: usize, seed: u64, scheme: Scheme, x_cap: f64) -> Result<TrialResult> {
    let inst = RandomInstance::from_seed(dof, seed).discretize(n, scheme, x_cap)?;
    let started = Instant::now();
    let report = topp_ra(&inst.problem, 0.0, 0.0)?;
    let solve_seconds = started.elapsed().as_secs_f64();
    let (dur, violation) = match &report.parameterization {
        Some(p) => (Some(duration(p, &inst.problem.grid)?), Some(stage_violation(&inst.problem, p))),
        None => (None, None),
    };
    Ok(TrialResult {
        dof,
        seed,
        status: report.status,
        solve_seconds,
        lp_count: report.diagnostics.lp_count,
        duration: dur,
        max_stage_violation: violation,
    })
}

/// Largest row residual, each row scaled by the norm of its `(u, x)` coefficients.
pub fn stage_violation(
    problem: &crate::discretize::DiscretizedProblem,
    param: &crate::discretize::Parameterization,
) -> f64 {
    let mut worst = 0.0f64;
    for (i, stage) in problem.stages.iter().enumerate() {
        let x = param.xs[i];
        // The last stage has no control of its own; any u admissible there will do,
        // so only rows without a u term are checked.
        let u = param.us.get(i).copied();
        for r in &stage.rows {
            let norm = r.a.hypot(r.b).max(1e-300);
            let res = match u {
                Some(u) => r.residual(u, x),
                None if r.a == 0.0 => r.residual(0.0, x),
                None => continue,
            };
            worst = worst.max(res / norm);
        }
    }
    worst
}

/// One timing sample of a scaling study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingSample {
    pub m: usize,
    pub seed: u64,
    pub seconds_per_point: f64,
}

/// Times rest-to-rest solves of random instances for each joint count.
///
/// Joint counts are interleaved within each round so slow drift in machine
/// speed spreads evenly over them. Each instance is solved `repeats` times and
/// the fastest run is kept, which filters out scheduler interruptions.
pub fn scaling_study(
    dofs: &[usize],
    instances: usize,
    n: usize,
    repeats: usize,
    seed: u64,
) -> Result<Vec<ScalingSample>> {
    let mut samples = Vec::with_capacity(dofs.len() * instances);
    for k in 0..instances {
        for &dof in dofs {
            let trial_seed = trial_seed(seed, dof, k);
            let inst = RandomInstance::from_seed(dof, trial_seed).discretize(
                n,
                Scheme::Collocation,
                crate::constraints::DEFAULT_X_CAP,
            )?;
            let mut best = f64::INFINITY;
            for _ in 0..repeats.max(1) {
                let started = Instant::now();
                let report = topp_ra(&inst.problem, 0.0, 0.0)?;
                best = best.min(started.elapsed().as_secs_f64());
                if report.status != SolveStatus::Solved {
                    return Err(Error::InvalidProblem(format!(
                        "scaling instance {trial_seed} with {dof} joints is infeasible"
                    )));
                }
            }
            samples.push(ScalingSample { m: 2 * dof + 2, seed: trial_seed, seconds_per_point: best / (n + 1) as f64 });
        }
    }
    Ok(samples)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub dofs: Vec<usize>,
    pub trials: usize,
    pub segments: usize,
    pub seed: u64,
    pub scheme: Scheme,
    pub x_cap: f64,
    /// Worker threads; each solve stays single-threaded.
    pub jobs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub dof: usize,
    /// Constraint inequalities per stage, `2n + 2`.
    pub m: usize,
    pub trials: usize,
    pub success_rate: f64,
    pub mean_seconds_per_point: f64,
    pub median_seconds_per_point: f64,
    pub lp_count_total: usize,
    /// Whether every solve used exactly `3N + 2` LPs.
    pub lp_count_exact: bool,
}

pub fn run_benchmark(config: &BenchmarkConfig) -> Result<(Vec<BenchmarkRow>, Vec<TrialResult>)> {
    if config.trials == 0 || config.dofs.is_empty() {
        return Err(Error::InvalidProblem("benchmark needs at least one trial and one joint count".into()));
    }
    let jobs: Vec<(usize, usize)> =
        config.dofs.iter().flat_map(|&dof| (0..config.trials).map(move |k| (dof, k))).collect();
    let solve = |&(dof, k): &(usize, usize)| {
        run_trial(dof, config.segments, trial_seed(config.seed, dof, k), config.scheme, config.x_cap)
    };
    let trials: Vec<TrialResult> = if config.jobs <= 1 {
        jobs.iter().map(solve).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build()
            .map_err(|e| Error::InvalidProblem(format!("thread pool: {e}")))?;
        pool.install(|| jobs.par_iter().map(solve).collect::<Result<_>>())?
    };
    let points = (config.segments + 1) as f64;
    let expected = 3 * config.segments + 2;
    let rows = config
        .dofs
        .iter()
        .map(|&dof| {
            let mine: Vec<&TrialResult> = trials.iter().filter(|t| t.dof == dof).collect();
            let per_point: Vec<f64> = mine.iter().map(|t| t.solve_seconds / points).collect();
            let solved = mine.iter().filter(|t| t.status == SolveStatus::Solved).count();
            BenchmarkRow {
                dof,
                m: 2 * dof + 2,
                trials: mine.len(),
                success_rate: solved as f64 / mine.len() as f64,
                mean_seconds_per_point: mean(&per_point),
                median_seconds_per_point: median(&per_point),
                lp_count_total: mine.iter().map(|t| t.lp_count).sum(),
                lp_count_exact: mine.iter().all(|t| t.lp_count == expected),
            }
        })
        .collect();
    Ok((rows, trials))
}

/// Constraint error of the rest-to-rest solution of a random instance,
/// sampled `samples_per_segment` times per segment on average.
pub fn instance_constraint_error(
    instance: &RandomInstance,
    n: usize,
    scheme: Scheme,
    samples_per_segment: usize,
) -> Result<SatisfactionError> {
    let inst = instance.discretize(n, scheme, crate::constraints::DEFAULT_X_CAP)?;
    let report = topp_ra(&inst.problem, 0.0, 0.0)?;
    let Some(param) = report.parameterization else {
        return Err(Error::InvalidProblem(format!("{scheme:?} grid with {n} segments is infeasible")));
    };
    let total = duration(&param, &inst.problem.grid)?;
    let dt = total / (samples_per_segment.max(1) * n) as f64;
    constraint_satisfaction_error(&inst.path, &inst.constraints, &param, &inst.problem.grid, dt)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridStudyRow {
    pub scheme: Scheme,
    pub segments: usize,
    pub duration: f64,
    pub max_abs_error: f64,
    pub max_rel_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridStudyConfig {
    pub segments: Vec<usize>,
    pub schemes: Vec<Scheme>,
    pub sdot0: f64,
    pub sdot_n: f64,
    pub x_cap: f64,
    /// Error samples per segment on average; the sampling step is `T / (k N)`.
    pub samples_per_segment: usize,
}

/// Solves one path at several grid sizes and measures the constraint error of each solution.
pub fn grid_study(
    path: &GeometricPath,
    constraints: &[Constraint],
    config: &GridStudyConfig,
) -> Result<Vec<GridStudyRow>> {
    let mut rows = Vec::new();
    for &scheme in &config.schemes {
        for &n in &config.segments {
            let grid = make_grid(path.s_end(), n)?;
            let problem = discretize(path, constraints, &grid, scheme, config.x_cap)?;
            let report = topp_ra(&problem, config.sdot0, config.sdot_n)?;
            let Some(param) = report.parameterization else {
                return Err(Error::InvalidProblem(format!("{scheme:?} grid with {n} segments is infeasible")));
            };
            let total = duration(&param, &grid)?;
            let dt = total / (config.samples_per_segment.max(1) * n) as f64;
            let err = constraint_satisfaction_error(path, constraints, &param, &grid, dt)?;
            rows.push(GridStudyRow {
                scheme,
                segments: n,
                duration: total,
                max_abs_error: err.max_abs,
                max_rel_error: err.max_rel,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let f = linear_fit(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert!((log_log_slope(&[1.0, 2.0, 4.0], &[1.0, 4.0, 16.0]).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn quadratic_recovery() {
        let x: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let y: Vec<f64> =
            x.iter().map(|v| 1.0 + 2.0 * v + 0.5 * v * v + if (*v as i32) % 2 == 0 { 0.01 } else { -0.01 }).collect();
        let q = quadratic_fit(&x, &y).unwrap();
        assert!((q.coefficients[2] - 0.5).abs() < 1e-2);
        assert!(!q.curvature_insignificant(0.05));
        let y: Vec<f64> = x.iter().map(|v| 1.0 + 2.0 * v + if (*v as i32) % 2 == 0 { 0.3 } else { -0.3 }).collect();
        assert!(quadratic_fit(&x, &y).unwrap().curvature_insignificant(0.05));
    }

    #[test]
    fn t_quantiles() {
        assert!((t_critical(2, 0.05) - 4.303).abs() < 1e-3);
        assert!((t_critical(1000, 0.05) - 1.962).abs() < 1e-3);
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn small_benchmark() {
        let cfg = BenchmarkConfig {
            dofs: vec![2, 3],
            trials: 3,
            segments: 20,
            seed: 5,
            scheme: Scheme::Collocation,
            x_cap: crate::constraints::DEFAULT_X_CAP,
            jobs: 2,
        };
        let (rows, trials) = run_benchmark(&cfg).unwrap();
        assert_eq!(trials.len(), 6);
        assert!(rows.iter().all(|r| r.success_rate == 1.0 && r.lp_count_exact));
        assert_eq!(rows[1].m, 8);
        let serial = run_benchmark(&BenchmarkConfig { jobs: 1, ..cfg }).unwrap().1;
        let durations = |t: &[TrialResult]| t.iter().map(|r| r.duration).collect::<Vec<_>>();
        assert_eq!(durations(&serial), durations(&trials));
    }
}
