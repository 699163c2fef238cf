//! The two-pass reachability solver and its dual, admissible velocity
//! propagation, traversal time, trajectory sampling and slack recovery.

use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::constraints::LinearRow;
use crate::discretize::{locate_time, sample_times, segment_times, DiscretizedProblem, Grid, Parameterization};
use crate::error::{Error, Result};
use crate::lp::{normalize_row, solve_1d_u, solve_simplex, LinearProgram, LpStatus, StageLp, DEFAULT_SEED};
use crate::path::GeometricPath;
use crate::reach::{stage_seed, Interval, Reachability};

/// Tolerance on boundary-state membership in the first (or last) set.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Solved,
    Infeasible,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Total LPs solved, set-computation and greedy steps together.
    pub lp_count: usize,
    /// LPs solved while computing the controllable (or reachable) sets.
    pub set_lps: usize,
    /// LPs solved by the greedy pass, one per stage.
    pub greedy_lps: usize,
    pub set_seconds: f64,
    pub greedy_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub parameterization: Option<Parameterization>,
    /// Controllable sets `K_0..K_N`; empty for the dual solver.
    pub controllable: Vec<Interval>,
    /// Reachable sets `L_0..L_N`; empty for the primal solver.
    pub reachable: Vec<Interval>,
    pub diagnostics: Diagnostics,
}

impl SolveReport {
    pub fn is_solved(&self) -> bool {
        self.status == SolveStatus::Solved
    }
}

fn boundary_state(sdot: f64, cap: f64, name: &str) -> Result<f64> {
    if !(sdot >= 0.0) || !sdot.is_finite() {
        return Err(Error::InvalidProblem(format!("{name} must be a non-negative number, got {sdot}")));
    }
    let x = sdot * sdot;
    if x > cap {
        return Err(Error::InvalidProblem(format!("{name}^2 = {x} exceeds x_cap = {cap}")));
    }
    Ok(x)
}

/// Two-pass solve with the default LP seed.
pub fn topp_ra(problem: &DiscretizedProblem, sdot0: f64, sdot_n: f64) -> Result<SolveReport> {
    topp_ra_seeded(problem, sdot0, sdot_n, DEFAULT_SEED)
}

/// Controllable sets backwards from `{sdot_n^2}`, then the largest admissible
/// control at each stage that keeps the next state controllable.
pub fn topp_ra_seeded(problem: &DiscretizedProblem, sdot0: f64, sdot_n: f64, seed: u64) -> Result<SolveReport> {
    let x0 = boundary_state(sdot0, problem.x_cap, "sdot0")?;
    let x_n = boundary_state(sdot_n, problem.x_cap, "sdot_n")?;
    let reach = Reachability::with_seed(problem, seed);
    let n = problem.segments();

    let started = Instant::now();
    let sets = reach.controllable_sets(Interval::point(x_n))?;
    let mut diagnostics = Diagnostics {
        set_lps: reach.lp_count(),
        set_seconds: started.elapsed().as_secs_f64(),
        ..Diagnostics::default()
    };
    if sets.iter().any(Interval::is_empty) || !sets[0].contains(x0, MEMBERSHIP_TOL) {
        diagnostics.lp_count = reach.lp_count();
        return Ok(SolveReport {
            status: SolveStatus::Infeasible,
            parameterization: None,
            controllable: sets,
            reachable: Vec::new(),
            diagnostics,
        });
    }

    let started = Instant::now();
    let mut xs = Vec::with_capacity(n + 1);
    xs.push(x0);
    for i in 0..n {
        let x = xs[i];
        let (lo, hi) = sets[i + 1].bounds().expect("non-empty controllable set");
        let u = greedy_control(&reach, i, x, (lo, hi))?;
        xs.push(snap(x + 2.0 * problem.delta(i) * u, lo, hi));
    }
    diagnostics.greedy_seconds = started.elapsed().as_secs_f64();
    diagnostics.lp_count = reach.lp_count();
    diagnostics.greedy_lps = diagnostics.lp_count - diagnostics.set_lps;
    Ok(SolveReport {
        status: SolveStatus::Solved,
        parameterization: Some(Parameterization::from_xs(&problem.grid, xs)?),
        controllable: sets,
        reachable: Vec::new(),
        diagnostics,
    })
}

/// Clamps a greedy successor into its target interval and reads tiny negatives as zero.
fn snap(x: f64, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        return hi;
    }
    x.clamp(lo, hi).max(0.0)
}

/// Rows of stage `i` at fixed `x` as `(alpha, gamma)` pairs scaled by their `(u, x)` normals.
fn rows_at_fixed_x(rows: &[LinearRow], x: f64, out: &mut Vec<(f64, f64)>) {
    for r in rows {
        match normalize_row(r) {
            Some(n) => out.push((n.a, n.b * x + n.c)),
            None => out.push((0.0, r.c)),
        }
    }
}

/// Largest `u` admissible at `(stage i, x)` with `x + 2 Δ_i u ∈ [lo, hi]`.
fn greedy_control(reach: &Reachability, i: usize, x: f64, (lo, hi): (f64, f64)) -> Result<f64> {
    let problem = reach.problem();
    let stage = &problem.stages[i];
    let two_delta = 2.0 * problem.delta(i);
    reach.count_lp();
    if stage.blocks.is_empty() {
        let mut rows = Vec::with_capacity(stage.rows.len() + 2);
        rows_at_fixed_x(&stage.rows, x, &mut rows);
        let norm = two_delta.hypot(1.0);
        rows.push((two_delta / norm, (x - hi) / norm));
        rows.push((-two_delta / norm, (lo - x) / norm));
        let out = solve_1d_u(&rows, true);
        return match out.status {
            LpStatus::Optimal => Ok(out.value),
            LpStatus::Infeasible => Err(Error::ForwardPass { stage: i }),
            status => Err(Error::Lp { stage: i, status }),
        };
    }
    let mut rows = stage.rows.clone();
    rows.extend([
        LinearRow::new(0.0, 1.0, -x),
        LinearRow::new(0.0, -1.0, x),
        LinearRow::new(two_delta, 1.0, -hi),
        LinearRow::new(-two_delta, -1.0, lo),
    ]);
    let out = StageLp::new([1.0, 0.0], &rows, &stage.blocks).solve(stage_seed(reach.seed(), i));
    match out.status {
        LpStatus::Optimal => Ok(out.point[0]),
        LpStatus::Infeasible => Err(Error::ForwardPass { stage: i }),
        status => Err(Error::Lp { stage: i, status }),
    }
}

/// Dual solve with the default LP seed.
pub fn topp_ra_dual(problem: &DiscretizedProblem, sdot0: f64, sdot_n: f64) -> Result<SolveReport> {
    topp_ra_dual_seeded(problem, sdot0, sdot_n, DEFAULT_SEED)
}

/// Reachable sets forwards from `{sdot0^2}`, then, from the end, the
/// smallest control whose predecessor state stays reachable.
pub fn topp_ra_dual_seeded(problem: &DiscretizedProblem, sdot0: f64, sdot_n: f64, seed: u64) -> Result<SolveReport> {
    let x0 = boundary_state(sdot0, problem.x_cap, "sdot0")?;
    let x_n = boundary_state(sdot_n, problem.x_cap, "sdot_n")?;
    let reach = Reachability::with_seed(problem, seed);
    let n = problem.segments();

    let started = Instant::now();
    let sets = reach.reachable_sets(Interval::point(x0))?;
    let mut diagnostics = Diagnostics {
        set_lps: reach.lp_count(),
        set_seconds: started.elapsed().as_secs_f64(),
        ..Diagnostics::default()
    };
    if sets.iter().any(Interval::is_empty) || !sets[n].contains(x_n, MEMBERSHIP_TOL) {
        diagnostics.lp_count = reach.lp_count();
        return Ok(SolveReport {
            status: SolveStatus::Infeasible,
            parameterization: None,
            controllable: Vec::new(),
            reachable: sets,
            diagnostics,
        });
    }

    let started = Instant::now();
    let mut xs = vec![0.0; n + 1];
    xs[n] = x_n;
    for i in (0..n).rev() {
        let (lo, hi) = sets[i].bounds().expect("non-empty reachable set");
        let u = least_control(&reach, i, xs[i + 1], (lo, hi))?;
        xs[i] = snap(xs[i + 1] - 2.0 * problem.delta(i) * u, lo, hi);
    }
    diagnostics.greedy_seconds = started.elapsed().as_secs_f64();
    diagnostics.lp_count = reach.lp_count();
    diagnostics.greedy_lps = diagnostics.lp_count - diagnostics.set_lps;
    Ok(SolveReport {
        status: SolveStatus::Solved,
        parameterization: Some(Parameterization::from_xs(&problem.grid, xs)?),
        controllable: Vec::new(),
        reachable: sets,
        diagnostics,
    })
}

/// Smallest `u` admissible at stage `i` from `x = x_next - 2 Δ_i u` with `x ∈ [lo, hi]`.
fn least_control(reach: &Reachability, i: usize, x_next: f64, (lo, hi): (f64, f64)) -> Result<f64> {
    let problem = reach.problem();
    let stage = &problem.stages[i];
    let two_delta = 2.0 * problem.delta(i);
    reach.count_lp();
    if stage.blocks.is_empty() {
        let mut rows = Vec::with_capacity(stage.rows.len() + 2);
        for r in &stage.rows {
            match normalize_row(r) {
                Some(n) => rows.push((n.a - two_delta * n.b, n.b * x_next + n.c)),
                None => rows.push((0.0, r.c)),
            }
        }
        let norm = two_delta.hypot(1.0);
        rows.push((-two_delta / norm, (x_next - hi) / norm));
        rows.push((two_delta / norm, (lo - x_next) / norm));
        let out = solve_1d_u(&rows, false);
        return match out.status {
            LpStatus::Optimal => Ok(out.value),
            LpStatus::Infeasible => Err(Error::ForwardPass { stage: i }),
            status => Err(Error::Lp { stage: i, status }),
        };
    }
    let mut rows = stage.rows.clone();
    rows.extend([
        LinearRow::new(two_delta, 1.0, -x_next),
        LinearRow::new(-two_delta, -1.0, x_next),
        LinearRow::new(0.0, 1.0, -hi),
        LinearRow::new(0.0, -1.0, lo),
    ]);
    let out = StageLp::new([-1.0, 0.0], &rows, &stage.blocks).solve(stage_seed(reach.seed(), i));
    match out.status {
        LpStatus::Optimal => Ok(out.point[0]),
        LpStatus::Infeasible => Err(Error::ForwardPass { stage: i }),
        status => Err(Error::Lp { stage: i, status }),
    }
}

/// End states reachable from `start`: the last reachable set.
pub fn avp(problem: &DiscretizedProblem, start: Interval) -> Result<Interval> {
    let sets = Reachability::new(problem).reachable_sets(start)?;
    Ok(sets[problem.segments()])
}

/// Start states from which `end` is reachable: the first controllable set.
pub fn avp_backward(problem: &DiscretizedProblem, end: Interval) -> Result<Interval> {
    let sets = Reachability::new(problem).controllable_sets(end)?;
    Ok(sets[0])
}

/// Traversal time `Σ 2 Δ_i / (√x_i + √x_{i+1})` under piecewise-constant path acceleration.
pub fn duration(param: &Parameterization, grid: &Grid) -> Result<f64> {
    param.check(grid)?;
    Ok(segment_times(param, grid)?.iter().sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub s: Vec<f64>,
    pub sdot: Vec<f64>,
    pub sddot: Vec<f64>,
    pub positions: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
    pub accelerations: Vec<Vec<f64>>,
    pub duration: f64,
}

/// Samples the joint trajectory every `dt` seconds, always including the final time.
pub fn extract_trajectory(path: &GeometricPath, param: &Parameterization, grid: &Grid, dt: f64) -> Result<Trajectory> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidProblem(format!("dt must be positive, got {dt}")));
    }
    param.check(grid)?;
    let seg_times = segment_times(param, grid)?;
    let mut starts = Vec::with_capacity(seg_times.len() + 1);
    starts.push(0.0);
    for t in &seg_times {
        starts.push(starts.last().unwrap() + t);
    }
    let total = *starts.last().unwrap();
    let times = sample_times(total, dt);
    let dof = path.dof();
    let mut traj = Trajectory {
        times: Vec::with_capacity(times.len()),
        s: Vec::with_capacity(times.len()),
        sdot: Vec::with_capacity(times.len()),
        sddot: Vec::with_capacity(times.len()),
        positions: Vec::with_capacity(times.len()),
        velocities: Vec::with_capacity(times.len()),
        accelerations: Vec::with_capacity(times.len()),
        duration: total,
    };
    let (mut q, mut qp, mut qpp) = (vec![0.0; dof], vec![0.0; dof], vec![0.0; dof]);
    for t in times {
        let (seg, s, sdot) = locate_time(param, grid, &starts, t);
        let s = s.min(path.s_end());
        let u = param.us[seg];
        path.eval_into(s, 0, &mut q)?;
        path.eval_into(s, 1, &mut qp)?;
        path.eval_into(s, 2, &mut qpp)?;
        traj.times.push(t);
        traj.s.push(s);
        traj.sdot.push(sdot);
        traj.sddot.push(u);
        traj.positions.push(q.clone());
        traj.velocities.push(qp.iter().map(|d| d * sdot).collect());
        traj.accelerations.push((0..dof).map(|j| qpp[j] * sdot * sdot + qp[j] * u).collect());
    }
    Ok(traj)
}

/// A feasible slack vector for every block of stage `i` at `(u, x)`.
///
/// Any feasible point is returned; no norm is minimized.
pub fn recover_slack(problem: &DiscretizedProblem, i: usize, u: f64, x: f64) -> Result<Vec<DVector<f64>>> {
    let stage = problem
        .stages
        .get(i)
        .ok_or_else(|| Error::InvalidProblem(format!("stage index {i} exceeds {}", problem.segments())))?;
    if stage.blocks.is_empty() {
        return Err(Error::InvalidProblem(format!("stage {i} has no slack blocks")));
    }
    let violated = stage.rows.iter().any(|r| match normalize_row(r) {
        Some(n) => n.residual(u, x) > crate::lp::FEASIBILITY_TOL * n.c.abs().max(1.0),
        None => r.c > crate::lp::FEASIBILITY_TOL,
    });
    if violated {
        return Err(Error::SlackInfeasible { stage: i });
    }
    stage
        .blocks
        .iter()
        .map(|block| {
            let y = &block.a * u + &block.b * x + &block.c;
            let k = block.aux_dim();
            let mut lp = LinearProgram::new(vec![0.0; k]);
            for r in 0..block.slack_dim() {
                lp.push_eq(block.h.row(r).iter().copied().collect(), y[r]);
            }
            for r in 0..block.f.nrows() {
                lp.push_ub(block.f.row(r).iter().copied().collect(), block.g[r]);
            }
            let out = solve_simplex(&lp);
            match out.status {
                LpStatus::Optimal => Ok(DVector::from_vec(out.point)),
                LpStatus::Infeasible => Err(Error::SlackInfeasible { stage: i }),
                status => Err(Error::Lp { stage: i, status }),
            }
        })
        .collect()
}
