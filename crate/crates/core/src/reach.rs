//! Admissible states, reach and one-step sets, and the reachable and
//! controllable set recursions, including robust variants.

use std::cell::{Cell, RefCell};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::constraints::{Constraint, LinearRow};
use crate::discretize::{evaluate_stage, interpolate, DiscretizedProblem, Grid, Scheme, Stage};
use crate::error::{Error, Result};
use crate::lp::{LpStatus, StageLp, DEFAULT_SEED};

/// Bounds crossing by less than this collapse to a point instead of `Empty`.
pub const EMPTY_TOL: f64 = 1e-9;

/// Closed interval of squared path velocities, possibly empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interval {
    Empty,
    Closed { lower: f64, upper: f64 },
}

impl Interval {
    /// Interval `[lower, upper] ∩ [0, ∞)`.
    ///
    /// Bounds crossing by at most [`EMPTY_TOL`] collapse to their midpoint.
    pub fn new(lower: f64, upper: f64) -> Self {
        if lower.is_nan() || upper.is_nan() {
            return Self::Empty;
        }
        let lower = lower.max(0.0);
        if upper < lower - EMPTY_TOL {
            return Self::Empty;
        }
        if upper < lower {
            let mid = (0.5 * (lower + upper)).max(0.0);
            return Self::Closed { lower: mid, upper: mid };
        }
        Self::Closed { lower, upper }
    }

    pub fn point(x: f64) -> Self {
        Self::new(x, x)
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Self::Empty)
    }

    pub fn bounds(&self) -> Option<(f64, f64)> {
        match *self {
            Self::Empty => None,
            Self::Closed { lower, upper } => Some((lower, upper)),
        }
    }

    pub fn lower(&self) -> Option<f64> {
        self.bounds().map(|b| b.0)
    }

    pub fn upper(&self) -> Option<f64> {
        self.bounds().map(|b| b.1)
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        self.bounds().is_some_and(|(lo, hi)| x >= lo - tol && x <= hi + tol)
    }

    pub fn intersect(&self, other: &Self) -> Self {
        match (self.bounds(), other.bounds()) {
            (Some((a, b)), Some((c, d))) => Self::new(a.max(c), b.min(d)),
            _ => Self::Empty,
        }
    }

    /// `self ⊆ other` with both bounds relaxed by `tol`. The empty set is a subset of anything.
    pub fn is_subset_of(&self, other: &Self, tol: f64) -> bool {
        match (self.bounds(), other.bounds()) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some((a, b)), Some((c, d))) => a >= c - tol && b <= d + tol,
        }
    }

    fn clamp_upper(self, cap: f64) -> Self {
        match self {
            Self::Closed { lower, upper } => Self::new(lower, upper.min(cap)),
            Self::Empty => Self::Empty,
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Empty => write!(f, "∅"),
            Self::Closed { lower, upper } => write!(f, "[{lower}, {upper}]"),
        }
    }
}

/// Set computations on one problem, counting every LP solved.
#[derive(Debug)]
pub struct Reachability<'a> {
    problem: &'a DiscretizedProblem,
    seed: u64,
    lp_count: Cell<usize>,
    admissible: RefCell<Vec<Option<Interval>>>,
}

impl<'a> Reachability<'a> {
    pub fn new(problem: &'a DiscretizedProblem) -> Self {
        Self::with_seed(problem, DEFAULT_SEED)
    }

    pub fn with_seed(problem: &'a DiscretizedProblem, seed: u64) -> Self {
        Self { problem, seed, lp_count: Cell::new(0), admissible: RefCell::new(vec![None; problem.stages.len()]) }
    }

    pub fn problem(&self) -> &'a DiscretizedProblem {
        self.problem
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// LPs solved so far, including those of the forward pass when used by the solver.
    pub fn lp_count(&self) -> usize {
        self.lp_count.get()
    }

    pub(crate) fn count_lp(&self) {
        self.lp_count.set(self.lp_count.get() + 1);
    }

    fn check_stage(&self, i: usize, last: usize) -> Result<()> {
        if i > last {
            return Err(Error::InvalidProblem(format!("stage index {i} exceeds {last}")));
        }
        Ok(())
    }

    /// Maximizes `objective · (u, x)` over stage `i` with `extra` rows; `None` when infeasible.
    fn optimize(&self, i: usize, objective: [f64; 2], extra: &[LinearRow]) -> Result<Option<f64>> {
        self.count_lp();
        let stage = &self.problem.stages[i];
        let rows: Vec<LinearRow>;
        let rows = if extra.is_empty() {
            &stage.rows[..]
        } else {
            rows = stage.rows.iter().chain(extra).copied().collect();
            &rows[..]
        };
        let out = StageLp::new(objective, rows, &stage.blocks).solve(stage_seed(self.seed, i));
        match out.status {
            LpStatus::Optimal => Ok(Some(out.value)),
            LpStatus::Infeasible => Ok(None),
            status => Err(Error::Lp { stage: i, status }),
        }
    }

    /// Minimum and maximum of `objective` as an interval; `Empty` when infeasible.
    fn range(&self, i: usize, objective: [f64; 2], extra: &[LinearRow]) -> Result<Interval> {
        let Some(hi) = self.optimize(i, objective, extra)? else {
            return Ok(Interval::Empty);
        };
        let Some(neg_lo) = self.optimize(i, [-objective[0], -objective[1]], extra)? else {
            return Ok(Interval::Empty);
        };
        Ok(Interval::new(-neg_lo, hi).clamp_upper(self.problem.x_cap))
    }

    /// `X_i`, the projection of the stage-`i` admissible pairs onto `x`. Cached.
    pub fn admissible_states(&self, i: usize) -> Result<Interval> {
        self.check_stage(i, self.problem.segments())?;
        if let Some(x) = self.admissible.borrow()[i] {
            return Ok(x);
        }
        let x = self.range(i, [0.0, 1.0], &[])?;
        self.admissible.borrow_mut()[i] = Some(x);
        Ok(x)
    }

    /// States at stage `i + 1` reachable from `seed_set` in one admissible step, within `X_{i+1}`.
    pub fn reach_set(&self, i: usize, seed_set: Interval) -> Result<Interval> {
        self.check_stage(i, self.problem.segments().saturating_sub(1))?;
        let Some((lo, hi)) = seed_set.bounds() else {
            return Ok(Interval::Empty);
        };
        let Some((xlo, xhi)) = self.admissible_states(i + 1)?.bounds() else {
            return Ok(Interval::Empty);
        };
        let two_delta = 2.0 * self.problem.delta(i);
        let extra = [
            LinearRow::new(0.0, 1.0, -hi),
            LinearRow::new(0.0, -1.0, lo),
            LinearRow::new(two_delta, 1.0, -xhi),
            LinearRow::new(-two_delta, -1.0, xlo),
        ];
        self.range(i, [two_delta, 1.0], &extra)
    }

    /// States at stage `i` from which one admissible step lands in `target`.
    pub fn one_step_set(&self, i: usize, target: Interval) -> Result<Interval> {
        self.check_stage(i, self.problem.segments().saturating_sub(1))?;
        let Some((lo, hi)) = target.bounds() else {
            return Ok(Interval::Empty);
        };
        let two_delta = 2.0 * self.problem.delta(i);
        let extra = [LinearRow::new(two_delta, 1.0, -hi), LinearRow::new(-two_delta, -1.0, lo)];
        self.range(i, [0.0, 1.0], &extra)
    }

    /// `K_N = I_N ∩ X_N`, `K_i = Q_i(K_{i+1})`.
    pub fn controllable_sets(&self, end: Interval) -> Result<Vec<Interval>> {
        let n = self.problem.segments();
        let mut sets = vec![Interval::Empty; n + 1];
        if end.is_empty() {
            return Ok(sets);
        }
        sets[n] = end.intersect(&self.admissible_states(n)?);
        for i in (0..n).rev() {
            if sets[i + 1].is_empty() {
                break;
            }
            sets[i] = self.one_step_set(i, sets[i + 1])?;
        }
        Ok(sets)
    }

    /// `L_0 = I_0 ∩ X_0`, `L_{i+1} = R_i(L_i)`.
    pub fn reachable_sets(&self, start: Interval) -> Result<Vec<Interval>> {
        let n = self.problem.segments();
        let mut sets = vec![Interval::Empty; n + 1];
        if start.is_empty() {
            return Ok(sets);
        }
        sets[0] = start.intersect(&self.admissible_states(0)?);
        for i in 0..n {
            if sets[i].is_empty() {
                break;
            }
            sets[i + 1] = self.reach_set(i, sets[i])?;
        }
        Ok(sets)
    }
}

/// Per-stage LP seed. Distinct stages get unrelated row orders, so an unlucky
/// order does not repeat along the whole path.
pub fn stage_seed(seed: u64, i: usize) -> u64 {
    let mut z = seed ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn admissible_states(problem: &DiscretizedProblem, i: usize) -> Result<Interval> {
    Reachability::new(problem).admissible_states(i)
}

pub fn reach_set(problem: &DiscretizedProblem, i: usize, seed_set: Interval) -> Result<Interval> {
    Reachability::new(problem).reach_set(i, seed_set)
}

pub fn one_step_set(problem: &DiscretizedProblem, i: usize, target: Interval) -> Result<Interval> {
    Reachability::new(problem).one_step_set(i, target)
}

pub fn controllable_sets(problem: &DiscretizedProblem, end: Interval) -> Result<Vec<Interval>> {
    Reachability::new(problem).controllable_sets(end)
}

pub fn reachable_sets(problem: &DiscretizedProblem, start: Interval) -> Result<Vec<Interval>> {
    Reachability::new(problem).reachable_sets(start)
}

/// Finite list of constraint realizations per stage.
///
/// Each realization is a full set of rows and slack blocks. A control-state
/// pair is robustly admissible when it satisfies the nominal stage and every
/// realization, which is exact for polytopic uncertainty given by its
/// vertices because the rows are affine in the uncertain parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyVertexSet {
    stages: Vec<Vec<Stage>>,
}

impl UncertaintyVertexSet {
    pub fn new(stages: Vec<Vec<Stage>>) -> Result<Self> {
        for (i, list) in stages.iter().enumerate() {
            let Some(first) = list.first() else {
                return Err(Error::InvalidProblem(format!("stage {i} has no uncertainty realizations")));
            };
            let consistent = list.iter().all(|v| {
                v.rows.len() == first.rows.len()
                    && v.blocks.len() == first.blocks.len()
                    && v.blocks.iter().zip(&first.blocks).all(|(a, b)| {
                        a.a.len() == b.a.len() && a.h.shape() == b.h.shape() && a.f.shape() == b.f.shape()
                    })
            });
            if !consistent {
                return Err(Error::ShapeMismatch(format!("stage {i} realizations differ in shape")));
            }
        }
        Ok(Self { stages })
    }

    /// Discretizes each realization's constraints on `grid` with `scheme`.
    /// No implicit rows are added; the nominal problem already has them.
    pub fn from_constraints(grid: &Grid, scheme: Scheme, realizations: &[Vec<Constraint>]) -> Result<Self> {
        if realizations.is_empty() {
            return Err(Error::InvalidProblem("no uncertainty realizations given".into()));
        }
        let mut stages: Vec<Vec<Stage>> = vec![Vec::with_capacity(realizations.len()); grid.segments() + 1];
        for constraints in realizations {
            let at_points =
                grid.points().iter().map(|&s| evaluate_stage(constraints, s)).collect::<Result<Vec<_>>>()?;
            let per_stage = match scheme {
                Scheme::Collocation => at_points,
                Scheme::Interpolation => interpolate(at_points, grid),
            };
            for (list, stage) in stages.iter_mut().zip(per_stage) {
                list.push(stage);
            }
        }
        Self::new(stages)
    }

    pub fn stage_count(&self) -> usize {
        self.stages.len()
    }

    pub fn realizations(&self, i: usize) -> &[Stage] {
        &self.stages[i]
    }

    /// Largest realization count over all stages.
    pub fn vertex_count(&self) -> usize {
        self.stages.iter().map(Vec::len).max().unwrap_or(0)
    }

    fn check(&self, problem: &DiscretizedProblem) -> Result<()> {
        if self.stages.len() != problem.stages.len() {
            return Err(Error::ShapeMismatch(format!(
                "uncertainty covers {} stages, problem has {}",
                self.stages.len(),
                problem.stages.len()
            )));
        }
        Ok(())
    }

    /// Nominal problem with every realization stacked at every stage.
    pub fn robust_problem(&self, problem: &DiscretizedProblem) -> Result<DiscretizedProblem> {
        self.check(problem)?;
        let extra: Vec<Stage> = self
            .stages
            .iter()
            .map(|list| {
                let mut s = Stage::default();
                list.iter().for_each(|v| s.extend(v));
                s
            })
            .collect();
        problem.stacked(&extra)
    }

    /// Nominal problem with realization `v` appended; stages with fewer
    /// realizations use their last one.
    pub fn realization_problem(&self, problem: &DiscretizedProblem, v: usize) -> Result<DiscretizedProblem> {
        self.check(problem)?;
        let extra: Vec<Stage> = self.stages.iter().map(|list| list[v.min(list.len() - 1)].clone()).collect();
        problem.stacked(&extra)
    }
}

pub fn robust_one_step_set(
    problem: &DiscretizedProblem,
    i: usize,
    target: Interval,
    vertices: &UncertaintyVertexSet,
) -> Result<Interval> {
    let robust = vertices.robust_problem(problem)?;
    Reachability::new(&robust).one_step_set(i, target)
}

pub fn robust_controllable_sets(
    problem: &DiscretizedProblem,
    end: Interval,
    vertices: &UncertaintyVertexSet,
) -> Result<Vec<Interval>> {
    let robust = vertices.robust_problem(problem)?;
    Reachability::new(&robust).controllable_sets(end)
}
