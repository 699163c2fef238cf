//! Small linear programs: a randomized incremental solver for two variables,
//! an interval solver for one variable and a dense two-phase simplex for
//! stages that carry slack variables.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::constraints::{LinearRow, SlackBlock};

/// Absolute tolerance on normalized row residuals.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Rows whose normal is shorter than this are treated as constant rows.
pub const DEGENERATE_NORM: f64 = 1e-12;

/// Shuffle seed used when the caller does not configure one.
pub const DEFAULT_SEED: u64 = 0x5eed_2d1f;

const SIMPLEX_PIVOT_TOL: f64 = 1e-10;
const SIMPLEX_MAX_ITERATIONS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// The simplex iteration cap was hit; treated like a solver failure.
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpOutcome {
    pub status: LpStatus,
    /// Objective value at `point`; NaN unless `status` is `Optimal`.
    pub value: f64,
    /// `(u, x)` for two-variable programs, `[u]` for the interval solver,
    /// the full variable vector for the simplex.
    pub point: Vec<f64>,
}

impl LpOutcome {
    fn optimal(value: f64, point: Vec<f64>) -> Self {
        Self { status: LpStatus::Optimal, value, point }
    }

    fn failed(status: LpStatus) -> Self {
        Self { status, value: f64::NAN, point: Vec::new() }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Tolerance on a normalized residual whose right-hand side is `h`.
///
/// Rows with large offsets (the `x <= x_cap` row) cannot be evaluated to
/// better than their own rounding error, so the tolerance grows with `|h|`.
#[inline]
fn tol_for(h: f64) -> f64 {
    FEASIBILITY_TOL * h.abs().max(1.0)
}

/// Row scaled so that `(a, b)` has unit length, or `None` for a constant row.
pub fn normalize_row(row: &LinearRow) -> Option<LinearRow> {
    let norm = row.a.hypot(row.b);
    if norm <= DEGENERATE_NORM {
        return None;
    }
    Some(LinearRow::new(row.a / norm, row.b / norm, row.c / norm))
}

/// Half-plane `n · p <= h` with unit normal.
#[derive(Debug, Clone, Copy)]
struct HalfPlane {
    nu: f64,
    nx: f64,
    h: f64,
}

impl HalfPlane {
    #[inline]
    fn slack(&self, u: f64, x: f64) -> f64 {
        self.nu * u + self.nx * x - self.h
    }
}

/// Maximizes `objective · (u, x)` subject to `a u + b x + c <= 0` for every row.
///
/// Seidel's randomized incremental algorithm on the normalized rows, seeded by
/// `seed` so repeated calls are bitwise reproducible. A bounding box far
/// outside every row offset is inserted first; an optimum pinned against a
/// box face the objective pushes into is reported as `Unbounded`.
pub fn solve_2d(objective: [f64; 2], rows: &[LinearRow], seed: u64) -> LpOutcome {
    let mut planes = Vec::with_capacity(rows.len() + 4);
    let mut scale = 0.0f64;
    for row in rows {
        match normalize_row(row) {
            Some(r) => {
                scale = scale.max(r.c.abs());
                planes.push(HalfPlane { nu: r.a, nx: r.b, h: -r.c });
            }
            None if row.c <= FEASIBILITY_TOL => {}
            None => return LpOutcome::failed(LpStatus::Infeasible),
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    planes.shuffle(&mut rng);

    let bound = 1e6 * (1.0 + scale);
    let boxes = [
        HalfPlane { nu: 1.0, nx: 0.0, h: bound },
        HalfPlane { nu: -1.0, nx: 0.0, h: bound },
        HalfPlane { nu: 0.0, nx: 1.0, h: bound },
        HalfPlane { nu: 0.0, nx: -1.0, h: bound },
    ];
    planes.splice(0..0, boxes);

    let reach = 4.0 * bound;
    let [cu, cx] = objective;
    let mut u = bound * sign_or_zero(cu);
    let mut x = bound * sign_or_zero(cx);
    let cnorm = cu.hypot(cx);

    for k in 4..planes.len() {
        let pk = planes[k];
        // Far from the origin the slack itself carries rounding error.
        let rounding = 4.0 * f64::EPSILON * (pk.nu * u).abs().max((pk.nx * x).abs());
        if pk.slack(u, x) <= tol_for(pk.h) + rounding {
            continue;
        }
        // Optimize along the boundary line p(t) = h n + t d of row k.
        let (u0, x0) = (pk.h * pk.nu, pk.h * pk.nx);
        let (du, dx) = (-pk.nx, pk.nu);
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        let mut lo_row = (0.0, 0.0, 0.0);
        let mut hi_row = (0.0, 0.0, 0.0);
        let mut redundant = false;
        for pj in &planes[..k] {
            let nd = pj.nu * du + pj.nx * dx;
            let r = pj.h - (pj.nu * u0 + pj.nx * x0);
            // Nearly parallel rows are treated as parallel only when their
            // crossing lies outside the box; inside it the crossing matters.
            if nd.abs() * reach <= r.abs() {
                if r < -tol_for(pj.h) {
                    // A stricter row facing the same way makes row k redundant;
                    // one facing the other way leaves an empty strip.
                    if pj.nu * pk.nu + pj.nx * pk.nx > 0.0 {
                        redundant = true;
                        break;
                    }
                    return LpOutcome::failed(LpStatus::Infeasible);
                }
            } else if nd > 0.0 {
                let t = r / nd;
                if t < hi {
                    hi = t;
                    hi_row = (nd, r, pj.h);
                }
            } else {
                let t = r / nd;
                if t > lo {
                    lo = t;
                    lo_row = (nd, r, pj.h);
                }
            }
        }
        if redundant {
            continue;
        }
        let t = if lo > hi {
            match reconcile(lo_row, hi_row) {
                Some(t) => t,
                None => return LpOutcome::failed(LpStatus::Infeasible),
            }
        } else {
            let cd = cu * du + cx * dx;
            if cd > 1e-12 * cnorm {
                hi
            } else if cd < -1e-12 * cnorm {
                lo
            } else {
                0.0f64.clamp(lo, hi)
            }
        };
        u = u0 + t * du;
        x = x0 + t * dx;
    }

    let on_face = |v: f64| v >= bound * (1.0 - 1e-9);
    let pinned = (on_face(u) && cu > 1e-12 * cnorm)
        || (on_face(-u) && cu < -1e-12 * cnorm)
        || (on_face(x) && cx > 1e-12 * cnorm)
        || (on_face(-x) && cx < -1e-12 * cnorm);
    if pinned {
        return LpOutcome::failed(LpStatus::Unbounded);
    }
    LpOutcome::optimal(cu * u + cx * x, vec![u, x])
}

fn sign_or_zero(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Crossing bounds `t >= r_lo / nd_lo` and `t <= r_hi / nd_hi`: accepts the
/// point minimizing the larger of the two residuals when that residual is
/// within tolerance.
fn reconcile(lo_row: (f64, f64, f64), hi_row: (f64, f64, f64)) -> Option<f64> {
    let (nd_lo, r_lo, h_lo) = lo_row;
    let (nd_hi, r_hi, h_hi) = hi_row;
    // Residuals nd t - r; nd_lo < 0 < nd_hi so they cross exactly once.
    let t = (r_lo - r_hi) / (nd_lo - nd_hi);
    let worst = nd_hi * t - r_hi;
    (worst <= tol_for(h_lo).max(tol_for(h_hi))).then_some(t)
}

/// Maximizes (or minimizes) `u` subject to `alpha u + gamma <= 0` for each `(alpha, gamma)`.
///
/// Rows are expected to be scaled by their two-dimensional normals so that
/// the residual tolerance matches [`solve_2d`].
pub fn solve_1d_u(rows: &[(f64, f64)], maximize: bool) -> LpOutcome {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    let mut lo_row = (0.0, 0.0, 0.0);
    let mut hi_row = (0.0, 0.0, 0.0);
    for &(alpha, gamma) in rows {
        if alpha.abs() <= DEGENERATE_NORM {
            if gamma > tol_for(gamma) {
                return LpOutcome::failed(LpStatus::Infeasible);
            }
        } else {
            let t = -gamma / alpha;
            if alpha > 0.0 && t < hi {
                hi = t;
                hi_row = (alpha, -gamma, gamma);
            } else if alpha < 0.0 && t > lo {
                lo = t;
                lo_row = (alpha, -gamma, gamma);
            }
        }
    }
    if lo > hi {
        return match reconcile(lo_row, hi_row) {
            Some(t) => LpOutcome::optimal(t, vec![t]),
            None => LpOutcome::failed(LpStatus::Infeasible),
        };
    }
    let u = if maximize { hi } else { lo };
    if u.is_infinite() {
        return LpOutcome::failed(LpStatus::Unbounded);
    }
    LpOutcome::optimal(u, vec![u])
}

/// `maximize objective · z` subject to `a_ub z <= b_ub`, `a_eq z = b_eq`, `z` free.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub a_ub: Vec<Vec<f64>>,
    pub b_ub: Vec<f64>,
    pub a_eq: Vec<Vec<f64>>,
    pub b_eq: Vec<f64>,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        Self { objective, ..Self::default() }
    }

    pub fn var_count(&self) -> usize {
        self.objective.len()
    }

    pub fn push_ub(&mut self, coeffs: Vec<f64>, rhs: f64) {
        debug_assert_eq!(coeffs.len(), self.var_count());
        self.a_ub.push(coeffs);
        self.b_ub.push(rhs);
    }

    pub fn push_eq(&mut self, coeffs: Vec<f64>, rhs: f64) {
        debug_assert_eq!(coeffs.len(), self.var_count());
        self.a_eq.push(coeffs);
        self.b_eq.push(rhs);
    }

    /// Largest violation of any row at `z`.
    pub fn max_violation(&self, z: &[f64]) -> f64 {
        let dot = |row: &[f64]| row.iter().zip(z).map(|(a, b)| a * b).sum::<f64>();
        let ub = self.a_ub.iter().zip(&self.b_ub).map(|(r, b)| dot(r) - b);
        let eq = self.a_eq.iter().zip(&self.b_eq).map(|(r, b)| (dot(r) - b).abs());
        ub.chain(eq).fold(0.0, f64::max)
    }
}

/// Dense tableau `T z = rhs` with an explicit basis.
struct Tableau {
    rows: usize,
    cols: usize,
    t: Vec<f64>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    obj: Vec<f64>,
    /// Columns barred from entering the basis.
    blocked: Vec<bool>,
    iterations: usize,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
    IterationLimit,
}

impl Tableau {
    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.t[r * self.cols + c]
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let cols = self.cols;
        let p = self.at(pr, pc);
        for c in 0..cols {
            self.t[pr * cols + c] /= p;
        }
        self.rhs[pr] /= p;
        for r in 0..self.rows {
            if r == pr {
                continue;
            }
            let f = self.at(r, pc);
            if f != 0.0 {
                for c in 0..cols {
                    self.t[r * cols + c] -= f * self.t[pr * cols + c];
                }
                self.rhs[r] -= f * self.rhs[pr];
                self.t[r * cols + pc] = 0.0;
            }
        }
        let f = self.obj[pc];
        if f != 0.0 {
            for c in 0..cols {
                self.obj[c] -= f * self.t[pr * cols + c];
            }
            self.obj[pc] = 0.0;
        }
        self.basis[pr] = pc;
    }

    /// Reduced costs for maximizing `cost · z`.
    fn set_objective(&mut self, cost: &[f64]) {
        self.obj.copy_from_slice(cost);
        for r in 0..self.rows {
            let cb = cost[self.basis[r]];
            if cb != 0.0 {
                for c in 0..self.cols {
                    self.obj[c] -= cb * self.at(r, c);
                }
            }
        }
    }

    /// Primal simplex with Bland's rule.
    fn run(&mut self) -> PhaseEnd {
        loop {
            if self.iterations >= SIMPLEX_MAX_ITERATIONS {
                return PhaseEnd::IterationLimit;
            }
            let Some(pc) = (0..self.cols).find(|&c| !self.blocked[c] && self.obj[c] > SIMPLEX_PIVOT_TOL) else {
                return PhaseEnd::Optimal;
            };
            let mut best: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, pc);
                if a > SIMPLEX_PIVOT_TOL {
                    let ratio = self.rhs[r] / a;
                    best = match best {
                        None => Some((r, ratio)),
                        Some((br, bratio)) => {
                            if ratio < bratio || (ratio == bratio && self.basis[r] < self.basis[br]) {
                                Some((r, ratio))
                            } else {
                                Some((br, bratio))
                            }
                        }
                    };
                }
            }
            let Some((pr, _)) = best else {
                return PhaseEnd::Unbounded;
            };
            self.pivot(pr, pc);
            self.iterations += 1;
        }
    }
}

/// Two-phase dense simplex with Bland's anti-cycling rule.
///
/// Free variables are split into positive and negative parts; phase one
/// minimizes the sum of one artificial variable per row.
pub fn solve_simplex(lp: &LinearProgram) -> LpOutcome {
    let n = lp.var_count();
    let m_ub = lp.a_ub.len();
    let m = m_ub + lp.a_eq.len();
    let slack0 = 2 * n;
    let art0 = slack0 + m_ub;
    let cols = art0 + m;

    let mut tab = Tableau {
        rows: m,
        cols,
        t: vec![0.0; m * cols],
        rhs: vec![0.0; m],
        basis: (art0..art0 + m).collect(),
        obj: vec![0.0; cols],
        blocked: vec![false; cols],
        iterations: 0,
    };
    let mut scale = 1.0f64;
    let all_rows = lp.a_ub.iter().zip(&lp.b_ub).chain(lp.a_eq.iter().zip(&lp.b_eq));
    for (r, (coeffs, &b)) in all_rows.enumerate() {
        let sign = if b < 0.0 { -1.0 } else { 1.0 };
        let base = r * cols;
        for (j, &a) in coeffs.iter().enumerate() {
            tab.t[base + j] = sign * a;
            tab.t[base + n + j] = -sign * a;
        }
        if r < m_ub {
            tab.t[base + slack0 + r] = sign;
        }
        tab.t[base + art0 + r] = 1.0;
        tab.rhs[r] = sign * b;
        scale = scale.max(b.abs());
    }

    // Phase one: maximize minus the sum of artificials.
    let mut cost = vec![0.0; cols];
    cost[art0..].iter_mut().for_each(|c| *c = -1.0);
    tab.set_objective(&cost);
    match tab.run() {
        PhaseEnd::Optimal => {}
        PhaseEnd::IterationLimit => return LpOutcome::failed(LpStatus::IterationLimit),
        // Phase one is bounded by zero.
        PhaseEnd::Unbounded => unreachable!("phase one objective is bounded"),
    }
    let infeasibility: f64 = (0..m).filter(|&r| tab.basis[r] >= art0).map(|r| tab.rhs[r]).sum();
    if infeasibility > FEASIBILITY_TOL * scale {
        return LpOutcome::failed(LpStatus::Infeasible);
    }

    // Pivot remaining artificials out where possible; rows that cannot be are redundant.
    for r in 0..m {
        if tab.basis[r] >= art0 {
            let col = (0..art0)
                .filter(|&c| tab.at(r, c).abs() > SIMPLEX_PIVOT_TOL)
                .max_by(|&a, &b| tab.at(r, a).abs().total_cmp(&tab.at(r, b).abs()));
            if let Some(c) = col {
                tab.pivot(r, c);
            }
        }
    }
    for c in art0..cols {
        tab.blocked[c] = true;
    }

    let mut cost = vec![0.0; cols];
    for j in 0..n {
        cost[j] = lp.objective[j];
        cost[n + j] = -lp.objective[j];
    }
    tab.set_objective(&cost);
    match tab.run() {
        PhaseEnd::Optimal => {}
        PhaseEnd::Unbounded => return LpOutcome::failed(LpStatus::Unbounded),
        PhaseEnd::IterationLimit => return LpOutcome::failed(LpStatus::IterationLimit),
    }

    let mut z = vec![0.0; n];
    for r in 0..m {
        let b = tab.basis[r];
        if b < n {
            z[b] += tab.rhs[r];
        } else if b < 2 * n {
            z[b - n] -= tab.rhs[r];
        }
    }
    let value = lp.objective.iter().zip(&z).map(|(c, v)| c * v).sum();
    LpOutcome::optimal(value, z)
}

/// One stage program over `(u, x)` plus the slack vectors of its blocks.
#[derive(Debug, Clone, Copy)]
pub struct StageLp<'a> {
    /// Coefficients of `(u, x)`; slack variables carry zero cost.
    pub objective: [f64; 2],
    pub rows: &'a [LinearRow],
    pub blocks: &'a [SlackBlock],
}

impl<'a> StageLp<'a> {
    pub fn new(objective: [f64; 2], rows: &'a [LinearRow], blocks: &'a [SlackBlock]) -> Self {
        Self { objective, rows, blocks }
    }

    pub fn variable_count(&self) -> usize {
        2 + self.blocks.iter().map(SlackBlock::aux_dim).sum::<usize>()
    }

    /// Two-variable solver when there are no slack blocks, simplex otherwise.
    pub fn solve(&self, seed: u64) -> LpOutcome {
        if self.blocks.is_empty() {
            solve_2d(self.objective, self.rows, seed)
        } else {
            solve_simplex(&self.to_linear_program())
        }
    }

    /// Variables ordered `(u, x, w_1, w_2, ...)`.
    pub fn to_linear_program(&self) -> LinearProgram {
        let nv = self.variable_count();
        let mut objective = vec![0.0; nv];
        objective[..2].copy_from_slice(&self.objective);
        let mut lp = LinearProgram::new(objective);
        for row in self.rows {
            let mut coeffs = vec![0.0; nv];
            coeffs[0] = row.a;
            coeffs[1] = row.b;
            lp.push_ub(coeffs, -row.c);
        }
        let mut offset = 2;
        for block in self.blocks {
            let k = block.aux_dim();
            for r in 0..block.slack_dim() {
                // a u + b x - H w = -c
                let mut coeffs = vec![0.0; nv];
                coeffs[0] = block.a[r];
                coeffs[1] = block.b[r];
                for j in 0..k {
                    coeffs[offset + j] = -block.h[(r, j)];
                }
                lp.push_eq(coeffs, -block.c[r]);
            }
            for r in 0..block.f.nrows() {
                let mut coeffs = vec![0.0; nv];
                for j in 0..k {
                    coeffs[offset + j] = block.f[(r, j)];
                }
                lp.push_ub(coeffs, block.g[r]);
            }
            offset += k;
        }
        lp
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;
    use rand::RngExt;

    fn row(a: f64, b: f64, c: f64) -> LinearRow {
        LinearRow::new(a, b, c)
    }

    #[test]
    fn box_maximum() {
        let rows = [row(0.0, 1.0, -2.0), row(0.0, -1.0, 0.0), row(1.0, 0.0, -1.0), row(-1.0, 0.0, 0.0)];
        let out = solve_2d([0.0, 1.0], &rows, DEFAULT_SEED);
        assert_eq!(out.status, LpStatus::Optimal);
        assert!((out.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn contradictory_rows() {
        let rows = [row(1.0, 0.0, -1.0), row(-1.0, 0.0, 2.0)];
        assert_eq!(solve_2d([1.0, 0.0], &rows, DEFAULT_SEED).status, LpStatus::Infeasible);
        let rows1 = [(1.0, -1.0), (-1.0, 2.0)];
        assert_eq!(solve_1d_u(&rows1, true).status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_direction() {
        let rows = [row(0.0, -1.0, 0.0), row(1.0, 0.0, -1.0)];
        assert_eq!(solve_2d([0.0, 1.0], &rows, DEFAULT_SEED).status, LpStatus::Unbounded);
        // Bounded in the objective direction although the polygon is unbounded.
        let out = solve_2d([1.0, 0.0], &rows, DEFAULT_SEED);
        assert_eq!(out.status, LpStatus::Optimal);
        assert!((out.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_rows() {
        let rows =
            [row(0.0, 0.0, 1e-10), row(1.0, 0.0, -1.0), row(-1.0, 0.0, -1.0), row(0.0, 1.0, -1.0), row(0.0, -1.0, 0.0)];
        assert!(solve_2d([1.0, 0.0], &rows, DEFAULT_SEED).is_optimal());
        let rows = [row(0.0, 0.0, 1e-3), row(1.0, 0.0, -1.0)];
        assert_eq!(solve_2d([1.0, 0.0], &rows, DEFAULT_SEED).status, LpStatus::Infeasible);
    }

    #[test]
    fn nearly_parallel_rows_under_large_cap() {
        // Two almost vertical rows whose slopes differ by roundoff cross far
        // up the x axis; that crossing must not make the problem infeasible.
        let rows = [
            row(-1.0, -1.5e-15, -0.1315),
            row(-1.0, 0.0, -0.0928),
            row(1.0, 0.0, -0.1),
            row(1.0, -8e-16, -0.12),
            row(0.0, -1.0, 0.0),
            row(0.0, 1.0, -1e8),
        ];
        for seed in 0..200 {
            let out = solve_2d([0.0, -1.0], &rows, seed);
            assert_eq!(out.status, LpStatus::Optimal, "seed {seed}");
            assert!(out.value.abs() < 1e-9);
        }
    }

    #[test]
    fn parallel_rows_far_from_origin() {
        // Stricter and looser copies of the same row, with the optimum search
        // starting at a box corner around 1e14.
        let rows = [
            row(-1.8690319834910503, -32.880575797668975, -1.0476527313048445),
            row(1.8690319834910503, 32.880575797668975, -0.5323372022150613),
            row(3.155292081268956, 12.009995919783169, -0.643425016296266),
            row(-3.155292081268956, -12.009995919783169, -1.3265663621855253),
            row(-1.3504223849680348, -37.014303648056355, -1.2205968425695581),
            row(1.3504223849680348, 37.014303648056355, -1.423886619345483),
            row(0.0, 1.0, -0.20503350001565887),
            row(0.0, -1.0, 0.0),
            row(0.0, 1.0, -1e8),
            row(-1.8690319834910503, -32.880575797668975, -1.1320624546095914),
            row(1.8690319834910503, 32.880575797668975, -0.5752277847536387),
            row(3.155292081268956, 12.009995919783169, -0.6952659803581606),
            row(-3.155292081268956, -12.009995919783169, -1.433448247977968),
            row(-1.3504223849680348, -37.014303648056355, -1.318940729498217),
            row(1.3504223849680348, 37.014303648056355, -1.5386096300959902),
        ];
        for seed in 0..500 {
            for objective in [[0.0, 1.0], [0.0, -1.0], [1.0, 0.0], [-1.0, 0.0]] {
                let out = solve_2d(objective, &rows, seed);
                assert_eq!(out.status, LpStatus::Optimal, "seed {seed} objective {objective:?}");
            }
        }
    }

    #[test]
    fn interval_solver() {
        let rows = [(1.0, -1.0), (-1.0, -1.0)];
        assert_eq!(solve_1d_u(&rows, true).value, 1.0);
        assert_eq!(solve_1d_u(&rows, false).value, -1.0);
        assert_eq!(solve_1d_u(&[(-1.0, 0.0)], true).status, LpStatus::Unbounded);
        // Crossing by less than the tolerance collapses to the minimax point.
        let out = solve_1d_u(&[(1.0, -1.0), (-1.0, 1.0 + 1e-11)], true);
        assert!(out.is_optimal());
        assert!((out.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn simplex_torque_split() {
        // Variables (u, x, w1, w2): u = w1 - w2, x = 0, 0 <= w <= 3.
        let mut lp = LinearProgram::new(vec![1.0, 0.0, 0.0, 0.0]);
        lp.push_eq(vec![1.0, 0.0, -1.0, 1.0], 0.0);
        lp.push_eq(vec![0.0, 1.0, 0.0, 0.0], 0.0);
        for j in 2..4 {
            let mut e = vec![0.0; 4];
            e[j] = 1.0;
            lp.push_ub(e.clone(), 3.0);
            e[j] = -1.0;
            lp.push_ub(e, 0.0);
        }
        let out = solve_simplex(&lp);
        assert_eq!(out.status, LpStatus::Optimal);
        assert!((out.value - 3.0).abs() < 1e-12);
        assert!(lp.max_violation(&out.point) <= 1e-9);
    }

    #[test]
    fn simplex_empty_block() {
        let block = SlackBlock::with_identity(
            DVector::from_element(1, 1.0),
            DVector::from_element(1, 0.0),
            DVector::from_element(1, 0.0),
            DMatrix::zeros(1, 1),
            DVector::from_element(1, -1.0),
        )
        .unwrap();
        let blocks = [block];
        let stage = StageLp::new([1.0, 0.0], &[], &blocks);
        assert_eq!(stage.solve(DEFAULT_SEED).status, LpStatus::Infeasible);
    }

    #[test]
    fn simplex_unbounded() {
        let mut lp = LinearProgram::new(vec![1.0, 1.0]);
        lp.push_ub(vec![-1.0, 0.0], 0.0);
        assert_eq!(solve_simplex(&lp).status, LpStatus::Unbounded);
    }

    /// Random rows all satisfied by `anchor`, inside the box `|u|, |x| <= 10`.
    fn random_feasible_rows(rng: &mut ChaCha8Rng, count: usize) -> Vec<LinearRow> {
        let anchor = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
        let mut rows = vec![row(1.0, 0.0, -10.0), row(-1.0, 0.0, -10.0), row(0.0, 1.0, -10.0), row(0.0, -1.0, -10.0)];
        for _ in 0..count {
            let a: f64 = rng.random_range(-1.0..1.0);
            let b: f64 = rng.random_range(-1.0..1.0);
            let margin: f64 = rng.random_range(0.0..2.0);
            rows.push(row(a, b, -(a * anchor[0] + b * anchor[1]) - margin));
        }
        rows
    }

    /// Best objective over every feasible pairwise intersection.
    fn enumerate_vertices(objective: [f64; 2], rows: &[LinearRow]) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for i in 0..rows.len() {
            for j in i + 1..rows.len() {
                let (p, q) = (rows[i], rows[j]);
                let det = p.a * q.b - p.b * q.a;
                if det.abs() < 1e-12 {
                    continue;
                }
                let u = (-p.c * q.b + q.c * p.b) / det;
                let x = (-p.a * q.c + q.a * p.c) / det;
                let scale = 1.0 + u.abs() + x.abs();
                if rows.iter().all(|r| r.residual(u, x) <= 1e-9 * r.a.hypot(r.b).max(1.0) * scale) {
                    best = best.max(objective[0] * u + objective[1] * x);
                }
            }
        }
        best
    }

    #[test]
    fn matches_vertex_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..200 {
            let rows = random_feasible_rows(&mut rng, 3 + trial % 20);
            let objective = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let out = solve_2d(objective, &rows, trial as u64);
            assert_eq!(out.status, LpStatus::Optimal);
            let best = enumerate_vertices(objective, &rows);
            assert!((out.value - best).abs() <= 1e-8, "trial {trial}: {} vs {best}", out.value);
            for r in &rows {
                let n = r.a.hypot(r.b);
                assert!(r.residual(out.point[0], out.point[1]) / n <= 1e-9);
            }
        }
    }

    /// Pairs of opposite rows through a feasible origin, as joint bounds give,
    /// with shifted parallel copies and the cap rows on `x`.
    fn stage_like_rows(rng: &mut ChaCha8Rng, pairs: usize) -> Vec<LinearRow> {
        let mut rows = vec![row(0.0, -1.0, 0.0), row(0.0, 1.0, -1e8)];
        for _ in 0..pairs {
            let a: f64 = rng.random_range(0.1..10.0) * if rng.random::<bool>() { 1.0 } else { -1.0 };
            let b: f64 = match rng.random_range(0..3) {
                0 => rng.random_range(-1e-14..1e-14),
                _ => rng.random_range(-40.0..40.0),
            };
            let (hi, lo): (f64, f64) = (rng.random_range(0.5..2.0), rng.random_range(0.5..2.0));
            rows.push(row(a, b, -hi));
            rows.push(row(-a, -b, -lo));
            if rng.random::<bool>() {
                rows.push(row(a, b, -hi * rng.random_range(0.8..1.2)));
            }
        }
        rows
    }

    #[test]
    fn stage_like_rows_match_vertex_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for trial in 0..1_000 {
            let rows = stage_like_rows(&mut rng, 2 + trial % 8);
            for objective in [[0.0, 1.0], [0.0, -1.0], [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]] {
                let out = solve_2d(objective, &rows, trial as u64);
                assert_eq!(out.status, LpStatus::Optimal, "trial {trial} objective {objective:?}");
                let best = enumerate_vertices(objective, &rows);
                assert!(
                    (out.value - best).abs() <= 1e-8 * best.abs().max(1.0),
                    "trial {trial}: {} vs {best}",
                    out.value
                );
            }
        }
    }

    #[test]
    fn simplex_matches_2d() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..500 {
            let rows = random_feasible_rows(&mut rng, 2 + trial % 12);
            let objective = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let a = solve_2d(objective, &rows, DEFAULT_SEED);
            let b = StageLp::new(objective, &rows, &[]).to_linear_program();
            let b = solve_simplex(&b);
            assert_eq!(b.status, LpStatus::Optimal);
            assert!((a.value - b.value).abs() <= 1e-8, "trial {trial}");
        }
    }

    #[test]
    fn interval_matches_2d_with_fixed_x() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..200 {
            let rows = random_feasible_rows(&mut rng, 6);
            let x: f64 = rng.random_range(-3.0..3.0);
            let normalized: Vec<LinearRow> = rows.iter().filter_map(normalize_row).collect();
            let one: Vec<(f64, f64)> = normalized.iter().map(|r| (r.a, r.b * x + r.c)).collect();
            let mut fixed = rows.clone();
            fixed.push(row(0.0, 1.0, -x));
            fixed.push(row(0.0, -1.0, x));
            for maximize in [true, false] {
                let a = solve_1d_u(&one, maximize);
                let b = solve_2d([if maximize { 1.0 } else { -1.0 }, 0.0], &fixed, DEFAULT_SEED);
                assert_eq!(a.is_optimal(), b.is_optimal());
                if a.is_optimal() {
                    assert!((a.point[0] - b.point[0]).abs() <= 1e-8);
                }
            }
        }
    }

    #[test]
    fn seed_determinism() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let rows = random_feasible_rows(&mut rng, 40);
        let a = solve_2d([0.3, -0.7], &rows, 99);
        let b = solve_2d([0.3, -0.7], &rows, 99);
        assert_eq!(a.point[0].to_bits(), b.point[0].to_bits());
        assert_eq!(a.point[1].to_bits(), b.point[1].to_bits());
    }

    proptest! {
        #[test]
        fn optimum_dominates_feasible_vertices(seed in 0u64..10_000, count in 1usize..15) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rows = random_feasible_rows(&mut rng, count);
            let objective = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let out = solve_2d(objective, &rows, seed);
            prop_assert!(out.is_optimal());
            prop_assert!(enumerate_vertices(objective, &rows) <= out.value + 1e-8);
            let lp = StageLp::new(objective, &rows, &[]).to_linear_program();
            let sx = solve_simplex(&lp);
            prop_assert!(lp.max_violation(&sx.point) <= 1e-9);
        }
    }
}
