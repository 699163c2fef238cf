//! Grids, per-stage constraint data and the constraint satisfaction error of
//! a computed parameterization.

use serde::{Deserialize, Serialize};

use crate::constraints::{Constraint, LinearRow, SlackBlock, DEFAULT_X_CAP};
use crate::error::{Error, Result};
use crate::lp::{solve_simplex, LinearProgram, LpStatus};
use crate::path::GeometricPath;

/// Tolerance when checking that a grid is uniform.
pub const UNIFORM_TOL: f64 = 1e-12;

/// Denominators below this fall back to absolute error.
pub const RELATIVE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    points: Vec<f64>,
}

impl Grid {
    /// Uniform grid with `n` segments on `[0, s_end]`.
    pub fn uniform(s_end: f64, n: usize) -> Result<Self> {
        if !(s_end > 0.0) || !s_end.is_finite() {
            return Err(Error::InvalidGrid(format!("s_end must be positive, got {s_end}")));
        }
        if n == 0 {
            return Err(Error::InvalidGrid("at least one segment is required".into()));
        }
        let delta = s_end / n as f64;
        let mut points: Vec<f64> = (0..n).map(|i| i as f64 * delta).collect();
        points.push(s_end);
        Ok(Self { points })
    }

    /// Arbitrary strictly increasing grid starting at zero.
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidGrid("a grid needs at least two points".into()));
        }
        if points[0] != 0.0 {
            return Err(Error::InvalidGrid(format!("grid must start at 0, starts at {}", points[0])));
        }
        if points.windows(2).any(|w| !(w[1] > w[0])) || points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidGrid("grid points must be finite and strictly increasing".into()));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Number of segments `N`.
    pub fn segments(&self) -> usize {
        self.points.len() - 1
    }

    pub fn s_end(&self) -> f64 {
        self.points[self.segments()]
    }

    pub fn delta(&self, i: usize) -> f64 {
        self.points[i + 1] - self.points[i]
    }

    pub fn is_uniform(&self) -> bool {
        let d0 = self.delta(0);
        (0..self.segments()).all(|i| (self.delta(i) - d0).abs() <= UNIFORM_TOL)
    }
}

/// Uniform grid with `n` segments on `[0, s_end]`.
pub fn make_grid(s_end: f64, n: usize) -> Result<Grid> {
    Grid::uniform(s_end, n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Constraints enforced at grid points only.
    #[default]
    Collocation,
    /// Constraints enforced at both ends of each segment with the transition substituted.
    Interpolation,
}

/// Constraint data of one grid stage over `(u, x)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Stage {
    pub rows: Vec<LinearRow>,
    pub blocks: Vec<SlackBlock>,
}

impl Stage {
    /// Appends every row and block of `other`.
    pub fn extend(&mut self, other: &Stage) {
        self.rows.extend_from_slice(&other.rows);
        self.blocks.extend(other.blocks.iter().cloned());
    }

    pub fn has_slack(&self) -> bool {
        !self.blocks.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedProblem {
    pub grid: Grid,
    /// `N + 1` stages.
    pub stages: Vec<Stage>,
    pub x_cap: f64,
    pub scheme: Scheme,
}

impl DiscretizedProblem {
    pub fn segments(&self) -> usize {
        self.grid.segments()
    }

    pub fn delta(&self, i: usize) -> f64 {
        self.grid.delta(i)
    }

    pub fn has_slack(&self) -> bool {
        self.stages.iter().any(Stage::has_slack)
    }

    /// Same problem with `extra[i]` appended to stage `i`.
    pub fn stacked(&self, extra: &[Stage]) -> Result<Self> {
        if extra.len() != self.stages.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} extra stages for a problem with {} stages",
                extra.len(),
                self.stages.len()
            )));
        }
        let mut out = self.clone();
        for (stage, more) in out.stages.iter_mut().zip(extra) {
            stage.extend(more);
        }
        Ok(out)
    }
}

/// Collocation scheme with the default cap on `x`.
pub fn collocation(path: &GeometricPath, constraints: &[Constraint], grid: &Grid) -> Result<DiscretizedProblem> {
    discretize(path, constraints, grid, Scheme::Collocation, DEFAULT_X_CAP)
}

/// First-order interpolation scheme with the default cap on `x`.
pub fn interpolation_first_order(
    path: &GeometricPath,
    constraints: &[Constraint],
    grid: &Grid,
) -> Result<DiscretizedProblem> {
    discretize(path, constraints, grid, Scheme::Interpolation, DEFAULT_X_CAP)
}

/// Evaluates every constraint on the grid and appends the implicit rows
/// `x >= 0` and `x <= x_cap` at each grid point.
pub fn discretize(
    path: &GeometricPath,
    constraints: &[Constraint],
    grid: &Grid,
    scheme: Scheme,
    x_cap: f64,
) -> Result<DiscretizedProblem> {
    if constraints.is_empty() {
        return Err(Error::InvalidProblem("no constraints given".into()));
    }
    if !(x_cap > 0.0) || !x_cap.is_finite() {
        return Err(Error::InvalidProblem(format!("x_cap must be positive and finite, got {x_cap}")));
    }
    check_domain(path, grid)?;
    let points = grid.points();
    let at_points = points
        .iter()
        .map(|&s| {
            let mut stage = evaluate_stage(constraints, s)?;
            stage.rows.push(LinearRow::new(0.0, -1.0, 0.0));
            stage.rows.push(LinearRow::new(0.0, 1.0, -x_cap));
            Ok(stage)
        })
        .collect::<Result<Vec<_>>>()?;
    let stages = match scheme {
        Scheme::Collocation => at_points,
        Scheme::Interpolation => interpolate(at_points, grid),
    };
    Ok(DiscretizedProblem { grid: grid.clone(), stages, x_cap, scheme })
}

/// Constraint rows and blocks at one path position, without implicit rows.
pub fn evaluate_stage(constraints: &[Constraint], s: f64) -> Result<Stage> {
    let wrap = |e: Error| Error::Evaluation { s, reason: e.to_string() };
    let mut stage = Stage::default();
    for c in constraints {
        match c {
            Constraint::Canonical(rows) => {
                let before = stage.rows.len();
                rows.rows_at(s, &mut stage.rows).map_err(wrap)?;
                let added = stage.rows.len() - before;
                if added != rows.row_count() {
                    return Err(Error::Evaluation {
                        s,
                        reason: format!("supplier returned {added} rows, declared {}", rows.row_count()),
                    });
                }
            }
            Constraint::Slack(blocks) => {
                let block = blocks.block_at(s).map_err(wrap)?;
                block.validate().map_err(wrap)?;
                stage.blocks.push(block);
            }
            Constraint::Velocity(v) => {
                let xu = v.x_upper(s).map_err(wrap)?;
                if !(xu >= 0.0) {
                    return Err(Error::Evaluation { s, reason: format!("velocity bound gave x_upper = {xu}") });
                }
                stage.rows.push(LinearRow::new(0.0, 1.0, -xu));
            }
        }
    }
    if let Some(r) = stage.rows.iter().find(|r| !r.is_finite()) {
        return Err(Error::Evaluation { s, reason: format!("non-finite row {r:?}") });
    }
    Ok(stage)
}

/// Stage `i < N` stacks its own rows with the rows at `s_{i+1}` rewritten in
/// terms of `(u_i, x_i)`: `(a + 2 Δ b) u + b x + c <= 0`.
pub(crate) fn interpolate(at_points: Vec<Stage>, grid: &Grid) -> Vec<Stage> {
    let n = grid.segments();
    let mut stages = Vec::with_capacity(n + 1);
    for i in 0..n {
        let two_delta = 2.0 * grid.delta(i);
        let mut stage = at_points[i].clone();
        let next = &at_points[i + 1];
        stage.rows.extend(next.rows.iter().map(|r| LinearRow::new(r.a + two_delta * r.b, r.b, r.c)));
        stage.blocks.extend(next.blocks.iter().map(|b| {
            let mut shifted = b.clone();
            shifted.a = &b.a + &b.b * two_delta;
            shifted
        }));
        stages.push(stage);
    }
    stages.push(at_points[n].clone());
    stages
}

fn check_domain(path: &GeometricPath, grid: &Grid) -> Result<()> {
    if grid.s_end() > path.s_end() + crate::path::DOMAIN_TOLERANCE {
        return Err(Error::InvalidGrid(format!("grid ends at {} beyond the path end {}", grid.s_end(), path.s_end())));
    }
    Ok(())
}

/// Squared path velocities `x_0..x_N` and path accelerations `u_0..u_{N-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameterization {
    pub xs: Vec<f64>,
    pub us: Vec<f64>,
}

impl Parameterization {
    /// Builds `us` from consecutive `xs` on `grid`; tiny negative `x` are clamped to zero.
    pub fn from_xs(grid: &Grid, xs: Vec<f64>) -> Result<Self> {
        if xs.len() != grid.segments() + 1 {
            return Err(Error::ShapeMismatch(format!(
                "{} states for a grid with {} points",
                xs.len(),
                grid.segments() + 1
            )));
        }
        let xs: Vec<f64> = xs.into_iter().map(clamp_state).collect();
        let us = (0..grid.segments()).map(|i| (xs[i + 1] - xs[i]) / (2.0 * grid.delta(i))).collect();
        Ok(Self { xs, us })
    }

    /// Largest `|x_{i+1} - x_i - 2 Δ_i u_i|`.
    pub fn reconstruction_error(&self, grid: &Grid) -> f64 {
        (0..self.us.len())
            .map(|i| (self.xs[i + 1] - self.xs[i] - 2.0 * grid.delta(i) * self.us[i]).abs())
            .fold(0.0, f64::max)
    }

    pub fn check(&self, grid: &Grid) -> Result<()> {
        if self.xs.is_empty() {
            return Err(Error::InvalidProblem("empty parameterization".into()));
        }
        if self.xs.len() != grid.segments() + 1 || self.us.len() != grid.segments() {
            return Err(Error::ShapeMismatch(format!(
                "parameterization has {} states and {} controls for {} segments",
                self.xs.len(),
                self.us.len(),
                grid.segments()
            )));
        }
        if let Some(x) = self.xs.iter().find(|x| !(**x >= -1e-12)) {
            return Err(Error::InvalidProblem(format!("negative squared velocity {x}")));
        }
        Ok(())
    }

    /// `x_i` with tiny negatives read as zero.
    pub fn x(&self, i: usize) -> f64 {
        clamp_state(self.xs[i])
    }
}

fn clamp_state(x: f64) -> f64 {
    if (-1e-12..0.0).contains(&x) {
        0.0
    } else {
        x
    }
}

/// Segment traversal times `2 Δ_i / (√x_i + √x_{i+1})`.
pub(crate) fn segment_times(param: &Parameterization, grid: &Grid) -> Result<Vec<f64>> {
    (0..grid.segments())
        .map(|i| {
            let v = param.x(i).max(0.0).sqrt() + param.x(i + 1).max(0.0).sqrt();
            if v == 0.0 {
                Err(Error::InfiniteDuration { segment: i })
            } else {
                Ok(2.0 * grid.delta(i) / v)
            }
        })
        .collect()
}

/// Position `(segment, s, sdot)` at time `t` for a profile with segment start times `starts`.
pub(crate) fn locate_time(param: &Parameterization, grid: &Grid, starts: &[f64], t: f64) -> (usize, f64, f64) {
    let n = grid.segments();
    let seg = starts.partition_point(|&st| st <= t).saturating_sub(1).min(n - 1);
    let tau = (t - starts[seg]).max(0.0);
    let v0 = param.x(seg).max(0.0).sqrt();
    let u = param.us[seg];
    let s_i = grid.points()[seg];
    let s = (s_i + v0 * tau + 0.5 * u * tau * tau).clamp(s_i, grid.points()[seg + 1]);
    let sdot = (param.x(seg) + 2.0 * (s - s_i) * u).max(0.0).sqrt();
    (seg, s, sdot)
}

/// Sample times `0, dt, 2 dt, ...` with the final time always included.
pub(crate) fn sample_times(total: f64, dt: f64) -> Vec<f64> {
    let count = (total / dt).floor() as usize;
    let mut times: Vec<f64> = (0..=count).map(|k| k as f64 * dt).filter(|&t| t < total).collect();
    times.push(total);
    times
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SatisfactionError {
    pub max_abs: f64,
    pub max_rel: f64,
}

impl SatisfactionError {
    fn record(&mut self, violation: f64, bound: f64) {
        if violation <= 0.0 {
            return;
        }
        self.max_abs = self.max_abs.max(violation);
        let rel = if bound.abs() >= RELATIVE_FLOOR { violation / bound.abs() } else { violation };
        self.max_rel = self.max_rel.max(rel);
    }
}

/// Largest positive constraint violation along the continuous-time profile.
///
/// The profile is sampled every `sample_dt` seconds. At each sample the
/// constraints are evaluated at the true `s(t)` with the segment's constant
/// `u` and `x(s) = x_i + 2 (s - s_i) u_i`. The relative error divides by the
/// row's constant term (velocity bound, polytope offset) where it is at least
/// [`RELATIVE_FLOOR`] in magnitude.
pub fn constraint_satisfaction_error(
    path: &GeometricPath,
    constraints: &[Constraint],
    param: &Parameterization,
    grid: &Grid,
    sample_dt: f64,
) -> Result<SatisfactionError> {
    if param.xs.is_empty() {
        return Err(Error::InvalidProblem("empty parameterization".into()));
    }
    param.check(grid)?;
    if !(sample_dt > 0.0) {
        return Err(Error::InvalidProblem(format!("sample_dt must be positive, got {sample_dt}")));
    }
    let times = segment_times(param, grid)?;
    let mut starts = Vec::with_capacity(times.len() + 1);
    starts.push(0.0);
    for dt in &times {
        starts.push(starts.last().unwrap() + dt);
    }
    let total = *starts.last().unwrap();
    let mut err = SatisfactionError::default();
    for t in sample_times(total, sample_dt) {
        let (seg, s, _) = locate_time(param, grid, &starts, t);
        let s = s.min(path.s_end());
        let u = param.us[seg];
        let x = (param.x(seg) + 2.0 * (s - grid.points()[seg]) * u).max(0.0);
        let stage = evaluate_stage(constraints, s)?;
        let mut k = 0;
        for c in constraints {
            match c {
                Constraint::Canonical(rows) => {
                    for r in &stage.rows[k..k + rows.row_count()] {
                        err.record(r.residual(u, x), r.c);
                    }
                    k += rows.row_count();
                }
                Constraint::Velocity(_) => {
                    let r = stage.rows[k];
                    err.record(r.residual(u, x), r.c);
                    k += 1;
                }
                Constraint::Slack(_) => {}
            }
        }
        for block in &stage.blocks {
            let (abs, rel) = block_violation(block, u, x)?;
            err.max_abs = err.max_abs.max(abs);
            err.max_rel = err.max_rel.max(rel);
        }
    }
    Ok(err)
}

/// Violation of a slack block at `(u, x)`.
///
/// With `H = I` the physical quantity `y = a u + b x + c` is checked against
/// each polytope row directly; otherwise the smallest uniform relaxation `t`
/// of `F w <= g + t` admitting a slack vector is returned.
fn block_violation(block: &SlackBlock, u: f64, x: f64) -> Result<(f64, f64)> {
    let y = &block.a * u + &block.b * x + &block.c;
    let d = block.slack_dim();
    if block.h.shape() == (d, d) && block.h == nalgebra::DMatrix::identity(d, d) {
        let fy = &block.f * &y;
        let mut e = SatisfactionError::default();
        for r in 0..fy.len() {
            e.record(fy[r] - block.g[r], block.g[r]);
        }
        return Ok((e.max_abs, e.max_rel));
    }
    let k = block.aux_dim();
    // Variables (w, t): minimize t.
    let mut objective = vec![0.0; k + 1];
    objective[k] = -1.0;
    let mut lp = LinearProgram::new(objective);
    for r in 0..d {
        let mut row: Vec<f64> = (0..k).map(|j| block.h[(r, j)]).collect();
        row.push(0.0);
        lp.push_eq(row, y[r]);
    }
    for r in 0..block.f.nrows() {
        let mut row: Vec<f64> = (0..k).map(|j| block.f[(r, j)]).collect();
        row.push(-1.0);
        lp.push_ub(row, block.g[r]);
    }
    let out = solve_simplex(&lp);
    match out.status {
        LpStatus::Optimal => {
            let t = out.point[k].max(0.0);
            let scale = block.g.amax();
            Ok((t, if scale >= RELATIVE_FLOOR { t / scale } else { t }))
        }
        // H w = y has no solution at all.
        LpStatus::Infeasible => Ok((f64::INFINITY, f64::INFINITY)),
        status => Err(Error::InvalidProblem(format!("slack violation program ended with {status:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::{JointAccelerationBounds, TabulatedRows, VelocityLimit};
    use std::sync::Arc;

    fn unit_line() -> Arc<GeometricPath> {
        Arc::new(GeometricPath::from_pieces(vec![0.0, 1.0], vec![vec![[0.0, 1.0, 0.0, 0.0]]]).unwrap())
    }

    #[test]
    fn grids() {
        assert_eq!(make_grid(1.0, 2).unwrap().points(), &[0.0, 0.5, 1.0]);
        let g = make_grid(2.0, 4).unwrap();
        assert!((0..4).all(|i| g.delta(i) == 0.5));
        let g = make_grid(1.0, 500).unwrap();
        assert_eq!(g.points().len(), 501);
        assert!((g.delta(0) - 0.002).abs() < 1e-15);
        assert!(g.is_uniform());
        assert_eq!(g.s_end(), 1.0);
        assert!(make_grid(0.0, 3).is_err());
        assert!(make_grid(1.0, 0).is_err());
        assert!(Grid::from_points(vec![0.0, 0.5, 0.5]).is_err());
    }

    #[test]
    fn collocation_on_unit_line() {
        let path = unit_line();
        let c = vec![Constraint::joint_acceleration(path.clone(), vec![-1.0], vec![1.0]).unwrap()];
        let p = collocation(&path, &c, &make_grid(1.0, 2).unwrap()).unwrap();
        assert_eq!(p.stages.len(), 3);
        for stage in &p.stages {
            assert_eq!(
                stage.rows,
                vec![
                    LinearRow::new(1.0, 0.0, -1.0),
                    LinearRow::new(-1.0, 0.0, -1.0),
                    LinearRow::new(0.0, -1.0, 0.0),
                    LinearRow::new(0.0, 1.0, -DEFAULT_X_CAP),
                ]
            );
        }
    }

    #[derive(Debug)]
    struct Fixed(f64);

    impl VelocityLimit for Fixed {
        fn x_upper(&self, _s: f64) -> Result<f64> {
            Ok(self.0)
        }
    }

    #[test]
    fn velocity_rows() {
        let path = unit_line();
        let c = vec![Constraint::Velocity(Arc::new(Fixed(2.25)))];
        let p = collocation(&path, &c, &make_grid(1.0, 1).unwrap()).unwrap();
        assert_eq!(p.stages[0].rows[0], LinearRow::new(0.0, 1.0, -2.25));
    }

    #[test]
    fn interpolation_rows() {
        // Rows (2, 0.5, -3) tabulated as constant; Δ = 0.1.
        let path = unit_line();
        let c = vec![Constraint::canonical(TabulatedRows::constant(vec![LinearRow::new(2.0, 0.5, -3.0)]).unwrap())];
        let grid = make_grid(1.0, 10).unwrap();
        let p = interpolation_first_order(&path, &c, &grid).unwrap();
        let col = collocation(&path, &c, &grid).unwrap();
        let m = col.stages[0].rows.len();
        for i in 0..10 {
            assert_eq!(p.stages[i].rows.len(), 2 * m);
            assert_eq!(&p.stages[i].rows[..m], &col.stages[i].rows[..]);
            assert!((p.stages[i].rows[m].a - 2.1).abs() < 1e-15);
        }
        assert_eq!(p.stages[10].rows.len(), m);
    }

    #[test]
    fn interpolation_of_path_independent_rows() {
        let path = unit_line();
        let c = vec![Constraint::joint_acceleration(path.clone(), vec![-1.0], vec![1.0]).unwrap()];
        let grid = make_grid(1.0, 4).unwrap();
        let p = interpolation_first_order(&path, &c, &grid).unwrap();
        let col = collocation(&path, &c, &grid).unwrap();
        // b = 0 on rows from the acceleration bound, so they repeat unchanged.
        assert_eq!(&p.stages[1].rows[4..6], &col.stages[2].rows[..2]);
    }

    #[test]
    fn rejects_bad_inputs() {
        let path = unit_line();
        let grid = make_grid(2.0, 4).unwrap();
        let c = vec![Constraint::joint_acceleration(path.clone(), vec![-1.0], vec![1.0]).unwrap()];
        assert!(matches!(collocation(&path, &c, &grid), Err(Error::InvalidGrid(_))));
        assert!(matches!(collocation(&path, &[], &make_grid(1.0, 2).unwrap()), Err(Error::InvalidProblem(_))));
    }

    #[test]
    fn satisfaction_error_constant_rows() {
        let path = unit_line();
        let c = vec![Constraint::joint_acceleration(path.clone(), vec![-1.0], vec![1.0]).unwrap()];
        let grid = make_grid(1.0, 2).unwrap();
        let p = Parameterization::from_xs(&grid, vec![0.0, 1.0, 0.0]).unwrap();
        let e = constraint_satisfaction_error(&path, &c, &p, &grid, 1e-3).unwrap();
        assert!(e.max_abs <= 1e-9);
        assert!(e.max_rel <= 1e-9);
    }

    #[test]
    fn satisfaction_error_detects_violation() {
        let path = unit_line();
        let c = vec![Constraint::joint_acceleration(path.clone(), vec![-0.5], vec![0.5]).unwrap()];
        let grid = make_grid(1.0, 2).unwrap();
        let p = Parameterization::from_xs(&grid, vec![0.0, 1.0, 0.0]).unwrap();
        let e = constraint_satisfaction_error(&path, &c, &p, &grid, 1e-2).unwrap();
        assert!((e.max_abs - 0.5).abs() < 1e-12);
        assert!((e.max_rel - 1.0).abs() < 1e-12);
        assert!(constraint_satisfaction_error(&path, &c, &Parameterization { xs: vec![], us: vec![] }, &grid, 1e-2)
            .is_err());
    }

    #[test]
    fn parameterization_round_trip() {
        let grid = make_grid(1.0, 3).unwrap();
        let p = Parameterization::from_xs(&grid, vec![0.0, 0.7, 1.3, -1e-13]).unwrap();
        assert_eq!(p.xs[3], 0.0);
        assert!(p.reconstruction_error(&grid) <= 1e-15);
        assert!(p.check(&grid).is_ok());
    }

    #[test]
    fn stacking_requires_matching_stage_count() {
        let path = unit_line();
        let c = vec![Constraint::joint_acceleration(path.clone(), vec![-1.0], vec![1.0]).unwrap()];
        let p = collocation(&path, &c, &make_grid(1.0, 2).unwrap()).unwrap();
        assert!(p.stacked(&[Stage::default()]).is_err());
        let s = p.stacked(&vec![Stage { rows: vec![LinearRow::new(1.0, 0.0, -0.5)], blocks: vec![] }; 3]).unwrap();
        assert_eq!(s.stages[0].rows.len(), 5);
    }

    #[test]
    fn acceleration_row_pass_through() {
        // q(s) = 2 s + 0.25 s^2 so q'(0) = 2 and q''(0) = 0.5.
        let path = Arc::new(GeometricPath::from_pieces(vec![0.0, 1.0], vec![vec![[0.0, 2.0, 0.25, 0.0]]]).unwrap());
        let c = vec![Constraint::canonical(JointAccelerationBounds::new(path.clone(), vec![-3.0], vec![3.0]).unwrap())];
        let p = collocation(&path, &c, &make_grid(1.0, 2).unwrap()).unwrap();
        assert_eq!(p.stages[0].rows[0], LinearRow::new(2.0, 0.5, -3.0));
    }
}
