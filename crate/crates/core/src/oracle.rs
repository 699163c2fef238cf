//! Brute-force dynamic programming over a grid of squared velocities.
//!
//! Deliberately independent of the LP code: admissible controls at a grid
//! state are found by intersecting the stage rows directly, and a transition
//! between two grid states is allowed when some admissible control lands
//! within half a cell of the target state.

use crate::constraints::LinearRow;
use crate::discretize::DiscretizedProblem;
use crate::error::{Error, Result};
use crate::reach::Interval;

const ROW_TOL: f64 = 1e-9;

/// Agreement constant `C` in `|T - T_dp| <= C (1/G + Δ)`, fitted once on
/// two-joint random instances with seeds 100..140 (worst ratio 48.3) and frozen.
pub const AGREEMENT_CONSTANT: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpConfig {
    /// Number of grid states `G`, covering `[0, x_max]` uniformly.
    pub grid_size: usize,
    pub x_max: f64,
}

impl DpConfig {
    pub fn new(grid_size: usize, x_max: f64) -> Result<Self> {
        if grid_size < 2 {
            return Err(Error::InvalidProblem(format!("state grid needs at least 2 points, got {grid_size}")));
        }
        if !(x_max > 0.0) || !x_max.is_finite() {
            return Err(Error::InvalidProblem(format!("x_max must be positive, got {x_max}")));
        }
        Ok(Self { grid_size, x_max })
    }

    /// State-grid spacing.
    pub fn cell(&self) -> f64 {
        self.x_max / (self.grid_size - 1) as f64
    }

    pub fn state(&self, k: usize) -> f64 {
        k as f64 * self.cell()
    }

    /// Nearest grid index, clamped to the grid.
    pub fn nearest(&self, x: f64) -> usize {
        ((x / self.cell()).round().max(0.0) as usize).min(self.grid_size - 1)
    }
}

fn check_canonical(problem: &DiscretizedProblem) -> Result<()> {
    if problem.has_slack() {
        return Err(Error::Unsupported("the dynamic programming oracle handles canonical stages only".into()));
    }
    Ok(())
}

/// Admissible controls at state `x`: `[u_lo, u_hi]`, possibly unbounded, or `None`.
fn control_range(rows: &[LinearRow], x: f64) -> Option<(f64, f64)> {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for r in rows {
        let norm = r.a.hypot(r.b);
        if norm == 0.0 {
            if r.c > ROW_TOL {
                return None;
            }
            continue;
        }
        let (a, rest) = (r.a / norm, (r.b * x + r.c) / norm);
        if a.abs() <= 1e-12 {
            if rest > ROW_TOL * (r.c / norm).abs().max(1.0) {
                return None;
            }
        } else if a > 0.0 {
            hi = hi.min((-rest + ROW_TOL) / a);
        } else {
            lo = lo.max((-rest + ROW_TOL) / a);
        }
    }
    (lo <= hi).then_some((lo, hi))
}

/// Grid indices `l` within half a cell of some `x + 2 Δ u`, `u ∈ [u_lo, u_hi]`.
fn landing(config: &DpConfig, x: f64, two_delta: f64, (u_lo, u_hi): (f64, f64)) -> Option<(usize, usize)> {
    let h = config.cell();
    let top = (config.grid_size - 1) as f64;
    let lo = ((x + two_delta * u_lo) / h - 0.5 - 1e-9).ceil().max(0.0);
    let hi = ((x + two_delta * u_hi) / h + 0.5 + 1e-9).floor().min(top);
    (lo <= hi).then_some((lo as usize, hi as usize))
}

/// Per-stage masks: `mask[i][k]` is true when grid state `k` at stage `i`
/// can reach the seed set `end` at stage `N` through grid transitions.
pub fn dp_controllable(problem: &DiscretizedProblem, end: Interval, config: &DpConfig) -> Result<Vec<Vec<bool>>> {
    check_canonical(problem)?;
    let n = problem.segments();
    let g = config.grid_size;
    let h = config.cell();
    let mut masks = vec![vec![false; g]; n + 1];
    let Some((lo, hi)) = end.bounds() else {
        return Ok(masks);
    };
    for k in 0..g {
        let x = config.state(k);
        masks[n][k] = x >= lo - 0.5 * h && x <= hi + 0.5 * h && control_range(&problem.stages[n].rows, x).is_some();
    }
    let mut prefix = vec![0usize; g + 1];
    for i in (0..n).rev() {
        for l in 0..g {
            prefix[l + 1] = prefix[l] + masks[i + 1][l] as usize;
        }
        let two_delta = 2.0 * problem.delta(i);
        for k in 0..g {
            let x = config.state(k);
            masks[i][k] = control_range(&problem.stages[i].rows, x)
                .and_then(|range| landing(config, x, two_delta, range))
                .is_some_and(|(a, b)| prefix[b + 1] > prefix[a]);
        }
    }
    Ok(masks)
}

/// Smallest and largest grid state set in `mask`.
pub fn mask_extent(mask: &[bool], config: &DpConfig) -> Option<(f64, f64)> {
    let first = mask.iter().position(|&m| m)?;
    let last = mask.iter().rposition(|&m| m)?;
    Some((config.state(first), config.state(last)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DpSolution {
    /// Shortest traversal time, infinite when the end state is unreachable.
    pub cost: f64,
    /// Grid states along one optimal path, when one exists.
    pub xs: Option<Vec<f64>>,
}

/// Shortest path over the layered state graph with edge weight `2 Δ_i / (√x_k + √x_l)`.
///
/// `x0` and `x_n` are snapped to their nearest grid states.
pub fn dp_optimal(problem: &DiscretizedProblem, x0: f64, x_n: f64, config: &DpConfig) -> Result<DpSolution> {
    check_canonical(problem)?;
    let n = problem.segments();
    let g = config.grid_size;
    let roots: Vec<f64> = (0..g).map(|k| config.state(k).sqrt()).collect();
    let (k0, k_n) = (config.nearest(x0), config.nearest(x_n));

    let mut cost = vec![f64::INFINITY; g];
    if control_range(&problem.stages[n].rows, config.state(k_n)).is_some() {
        cost[k_n] = 0.0;
    }
    let mut next_choice: Vec<Vec<usize>> = vec![vec![usize::MAX; g]; n];
    for i in (0..n).rev() {
        let two_delta = 2.0 * problem.delta(i);
        let mut here = vec![f64::INFINITY; g];
        for k in 0..g {
            let x = config.state(k);
            let Some((a, b)) = control_range(&problem.stages[i].rows, x).and_then(|r| landing(config, x, two_delta, r))
            else {
                continue;
            };
            for l in a..=b {
                let speed = roots[k] + roots[l];
                if !cost[l].is_finite() || speed == 0.0 {
                    continue;
                }
                let c = cost[l] + two_delta / speed;
                if c < here[k] {
                    here[k] = c;
                    next_choice[i][k] = l;
                }
            }
        }
        cost = here;
    }
    if !cost[k0].is_finite() {
        return Ok(DpSolution { cost: f64::INFINITY, xs: None });
    }
    let mut xs = Vec::with_capacity(n + 1);
    let mut k = k0;
    xs.push(config.state(k));
    for choice in &next_choice {
        k = choice[k];
        xs.push(config.state(k));
    }
    Ok(DpSolution { cost: cost[k0], xs: Some(xs) })
}

pub fn dp_optimal_cost(problem: &DiscretizedProblem, x0: f64, x_n: f64, config: &DpConfig) -> Result<f64> {
    Ok(dp_optimal(problem, x0, x_n, config)?.cost)
}
