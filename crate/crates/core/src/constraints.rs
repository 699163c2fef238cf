//! Path constraints and their projection onto the path.
//!
//! Three families are supported:
//!
//! * canonical constraints: rows `a(s) u + b(s) x + c(s) <= 0` in the path
//!   acceleration `u` and squared path velocity `x`;
//! * slack-block constraints: `a(s) u + b(s) x + c(s) = H(s) w` with
//!   `F(s) w <= g(s)` for an auxiliary vector `w` (torques, contact wrenches),
//!   kept in lifted form rather than projected to the `(u, x)` plane;
//! * first-order velocity limits reduced to an upper bound on `x`.
//!
//! Constraints are suppliers evaluated lazily at each grid position.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::path::GeometricPath;

/// Default upper clamp on the squared path velocity.
pub const DEFAULT_X_CAP: f64 = 1e8;

/// Tangent components below this magnitude do not limit the path velocity.
pub const ZERO_TANGENT: f64 = 1e-12;

/// One inequality `a u + b x + c <= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearRow {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl LinearRow {
    pub const fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    pub fn residual(&self, u: f64, x: f64) -> f64 {
        self.a * u + self.b * x + self.c
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite()
    }
}

/// `a u + b x + c = H w`, `F w <= g`, with `w` free.
///
/// `a`, `b`, `c` have the slack dimension `d`; `H` is `d x k`; `F` is `p x k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlackBlock {
    pub a: DVector<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    pub h: DMatrix<f64>,
    pub f: DMatrix<f64>,
    pub g: DVector<f64>,
}

impl SlackBlock {
    /// Block with `H = I`, i.e. `F (a u + b x + c) <= g`.
    pub fn with_identity(
        a: DVector<f64>,
        b: DVector<f64>,
        c: DVector<f64>,
        f: DMatrix<f64>,
        g: DVector<f64>,
    ) -> Result<Self> {
        let d = a.len();
        Self::new(a, b, c, DMatrix::identity(d, d), f, g)
    }

    pub fn new(
        a: DVector<f64>,
        b: DVector<f64>,
        c: DVector<f64>,
        h: DMatrix<f64>,
        f: DMatrix<f64>,
        g: DVector<f64>,
    ) -> Result<Self> {
        let block = Self { a, b, c, h, f, g };
        block.validate()?;
        Ok(block)
    }

    pub fn slack_dim(&self) -> usize {
        self.a.len()
    }

    /// Number of auxiliary variables `w`.
    pub fn aux_dim(&self) -> usize {
        self.h.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.a.len();
        if self.b.len() != d || self.c.len() != d {
            return Err(Error::ShapeMismatch(format!(
                "slack block vectors have lengths {}, {}, {}",
                d,
                self.b.len(),
                self.c.len()
            )));
        }
        if self.h.nrows() != d {
            return Err(Error::ShapeMismatch(format!("H has {} rows, slack dimension is {d}", self.h.nrows())));
        }
        if self.f.ncols() != self.h.ncols() || self.f.nrows() != self.g.len() {
            return Err(Error::ShapeMismatch(format!(
                "F is {}x{}, H has {} columns and g has length {}",
                self.f.nrows(),
                self.f.ncols(),
                self.h.ncols(),
                self.g.len()
            )));
        }
        let finite = self.a.iter().chain(self.b.iter()).chain(self.c.iter()).all(|v| v.is_finite())
            && self.h.iter().chain(self.f.iter()).chain(self.g.iter()).all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidProblem("slack block has non-finite entries".into()));
        }
        Ok(())
    }
}

/// Supplier of canonical rows at a path position. The row count is constant in `s`.
pub trait CanonicalConstraint: Send + Sync + fmt::Debug {
    fn row_count(&self) -> usize;

    /// Appends `row_count()` rows evaluated at `s`.
    fn rows_at(&self, s: f64, out: &mut Vec<LinearRow>) -> Result<()>;
}

/// Supplier of a slack block at a path position; shapes are constant in `s`.
pub trait SlackConstraint: Send + Sync + fmt::Debug {
    fn block_at(&self, s: f64) -> Result<SlackBlock>;
}

/// Upper bound on the squared path velocity, `x <= x_upper(s)`.
pub trait VelocityLimit: Send + Sync + fmt::Debug {
    fn x_upper(&self, s: f64) -> Result<f64>;
}

#[derive(Debug, Clone)]
pub enum Constraint {
    Canonical(Arc<dyn CanonicalConstraint>),
    Slack(Arc<dyn SlackConstraint>),
    Velocity(Arc<dyn VelocityLimit>),
}

impl Constraint {
    pub fn joint_acceleration(path: Arc<GeometricPath>, lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        Ok(Self::Canonical(Arc::new(JointAccelerationBounds::new(path, lo, hi)?)))
    }

    pub fn joint_velocity(path: Arc<GeometricPath>, vmax: Vec<f64>) -> Result<Self> {
        Ok(Self::Velocity(Arc::new(JointVelocityBounds::new(path, vmax)?)))
    }

    pub fn canonical(c: impl CanonicalConstraint + 'static) -> Self {
        Self::Canonical(Arc::new(c))
    }

    pub fn slack(c: impl SlackConstraint + 'static) -> Self {
        Self::Slack(Arc::new(c))
    }
}

/// `lo_j <= q''_j(s) x + q'_j(s) u <= hi_j` for every joint.
#[derive(Debug, Clone)]
pub struct JointAccelerationBounds {
    path: Arc<GeometricPath>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl JointAccelerationBounds {
    pub fn new(path: Arc<GeometricPath>, lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let n = path.dof();
        if lo.len() != n || hi.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "acceleration bounds have lengths {} and {}, path has {n} joints",
                lo.len(),
                hi.len()
            )));
        }
        if let Some(j) = (0..n).find(|&j| !(lo[j] < hi[j]) || !lo[j].is_finite() || !hi[j].is_finite()) {
            return Err(Error::InvalidBounds(format!(
                "joint {j}: acceleration lower bound {} must be below upper bound {}",
                lo[j], hi[j]
            )));
        }
        Ok(Self { path, lo, hi })
    }
}

impl CanonicalConstraint for JointAccelerationBounds {
    fn row_count(&self) -> usize {
        2 * self.path.dof()
    }

    fn rows_at(&self, s: f64, out: &mut Vec<LinearRow>) -> Result<()> {
        let qp = self.path.eval(s, 1)?;
        let qpp = self.path.eval(s, 2)?;
        for j in 0..qp.len() {
            out.push(LinearRow::new(qp[j], qpp[j], -self.hi[j]));
            out.push(LinearRow::new(-qp[j], -qpp[j], self.lo[j]));
        }
        Ok(())
    }
}

/// Symmetric joint velocity limits `|q'_j(s) sdot| <= vmax_j`, reduced to `x <= x_upper(s)`.
#[derive(Debug, Clone)]
pub struct JointVelocityBounds {
    path: Arc<GeometricPath>,
    vmax: Vec<f64>,
    cap: f64,
}

impl JointVelocityBounds {
    pub fn new(path: Arc<GeometricPath>, vmax: Vec<f64>) -> Result<Self> {
        if vmax.len() != path.dof() {
            return Err(Error::ShapeMismatch(format!(
                "velocity bounds have length {}, path has {} joints",
                vmax.len(),
                path.dof()
            )));
        }
        if let Some(j) = vmax.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidBounds(format!("joint {j}: velocity bound {} must be positive", vmax[j])));
        }
        Ok(Self { path, vmax, cap: DEFAULT_X_CAP })
    }

    /// Value reported where every tangent component vanishes.
    pub fn with_cap(mut self, cap: f64) -> Self {
        self.cap = cap;
        self
    }
}

impl VelocityLimit for JointVelocityBounds {
    fn x_upper(&self, s: f64) -> Result<f64> {
        let qp = self.path.eval(s, 1)?;
        Ok(velocity_x_upper(&qp, &self.vmax, self.cap))
    }
}

/// `min_j (vmax_j / |q'_j|)^2` over non-vanishing tangent components, else `cap`.
pub fn velocity_x_upper(qp: &[f64], vmax: &[f64], cap: f64) -> f64 {
    qp.iter().zip(vmax).filter(|(d, _)| d.abs() > ZERO_TANGENT).map(|(d, v)| (v / d.abs()).powi(2)).fold(cap, f64::min)
}

/// Rows tabulated at knots and linearly interpolated in between.
#[derive(Debug, Clone)]
pub struct TabulatedRows {
    knots: Vec<f64>,
    rows: Vec<Vec<LinearRow>>,
}

impl TabulatedRows {
    pub fn constant(rows: Vec<LinearRow>) -> Result<Self> {
        Self::new(vec![0.0], vec![rows])
    }

    pub fn new(knots: Vec<f64>, rows: Vec<Vec<LinearRow>>) -> Result<Self> {
        check_table(&knots, rows.len())?;
        let m = rows[0].len();
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::ShapeMismatch("tabulated row sets differ in length".into()));
        }
        if rows.iter().flatten().any(|r| !r.is_finite()) {
            return Err(Error::InvalidProblem("tabulated rows must be finite".into()));
        }
        Ok(Self { knots, rows })
    }
}

impl CanonicalConstraint for TabulatedRows {
    fn row_count(&self) -> usize {
        self.rows[0].len()
    }

    fn rows_at(&self, s: f64, out: &mut Vec<LinearRow>) -> Result<()> {
        let (k, t) = bracket(&self.knots, s);
        if t == 0.0 {
            out.extend_from_slice(&self.rows[k]);
        } else {
            let lerp = |p: f64, q: f64| p + t * (q - p);
            out.extend(
                self.rows[k]
                    .iter()
                    .zip(&self.rows[k + 1])
                    .map(|(p, q)| LinearRow::new(lerp(p.a, q.a), lerp(p.b, q.b), lerp(p.c, q.c))),
            );
        }
        Ok(())
    }
}

/// Slack blocks tabulated at knots and linearly interpolated entrywise.
#[derive(Debug, Clone)]
pub struct TabulatedSlack {
    knots: Vec<f64>,
    blocks: Vec<SlackBlock>,
}

impl TabulatedSlack {
    pub fn constant(block: SlackBlock) -> Result<Self> {
        Self::new(vec![0.0], vec![block])
    }

    pub fn new(knots: Vec<f64>, blocks: Vec<SlackBlock>) -> Result<Self> {
        check_table(&knots, blocks.len())?;
        for b in &blocks {
            b.validate()?;
        }
        let first = &blocks[0];
        let same_shape = |b: &SlackBlock| {
            b.a.len() == first.a.len() && b.h.shape() == first.h.shape() && b.f.shape() == first.f.shape()
        };
        if !blocks.iter().all(same_shape) {
            return Err(Error::ShapeMismatch("tabulated slack blocks differ in shape".into()));
        }
        Ok(Self { knots, blocks })
    }
}

impl SlackConstraint for TabulatedSlack {
    fn block_at(&self, s: f64) -> Result<SlackBlock> {
        let (k, t) = bracket(&self.knots, s);
        let p = &self.blocks[k];
        if t == 0.0 {
            return Ok(p.clone());
        }
        let q = &self.blocks[k + 1];
        Ok(SlackBlock {
            a: p.a.lerp(&q.a, t),
            b: p.b.lerp(&q.b, t),
            c: p.c.lerp(&q.c, t),
            h: &p.h + (&q.h - &p.h) * t,
            f: &p.f + (&q.f - &p.f) * t,
            g: p.g.lerp(&q.g, t),
        })
    }
}

fn check_table(knots: &[f64], entries: usize) -> Result<()> {
    if knots.is_empty() || knots.len() != entries {
        return Err(Error::ShapeMismatch(format!("table has {} knots and {entries} entries", knots.len())));
    }
    if knots.windows(2).any(|w| !(w[1] > w[0])) || knots.iter().any(|k| !k.is_finite()) {
        return Err(Error::InvalidProblem("table knots must be finite and strictly increasing".into()));
    }
    Ok(())
}

/// Index of the knot interval holding `s` and the interpolation weight; clamps outside.
fn bracket(knots: &[f64], s: f64) -> (usize, f64) {
    if knots.len() == 1 || s <= knots[0] {
        return (0, 0.0);
    }
    let last = knots.len() - 1;
    if s >= knots[last] {
        return (last, 0.0);
    }
    let k = knots.partition_point(|&v| v <= s) - 1;
    (k, (s - knots[k]) / (knots[k + 1] - knots[k]))
}

/// Rigid-body terms of `A(q) q̈ + q̇ᵀ B(q) q̇ + f(q)`.
///
/// `b[k]` is the `n x n` matrix of output component `k`, so that component
/// `k` of the quadratic term is `q̇ᵀ b[k] q̇`.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsTerms {
    pub a: DMatrix<f64>,
    pub b: Vec<DMatrix<f64>>,
    pub f: DVector<f64>,
}

/// Second-order constraint projected onto the path at one position.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedConstraint {
    pub a: DVector<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    /// Polytope `{y : F y <= g}` constraining `a u + b x + c`.
    pub f: DMatrix<f64>,
    pub g: DVector<f64>,
}

impl ProjectedConstraint {
    /// Canonical rows `F a u + F b x + (F c - g) <= 0`.
    pub fn to_rows(&self) -> Vec<LinearRow> {
        let fa = &self.f * &self.a;
        let fb = &self.f * &self.b;
        let fc = &self.f * &self.c - &self.g;
        (0..self.f.nrows()).map(|r| LinearRow::new(fa[r], fb[r], fc[r])).collect()
    }

    pub fn to_slack_block(&self) -> Result<SlackBlock> {
        SlackBlock::with_identity(self.a.clone(), self.b.clone(), self.c.clone(), self.f.clone(), self.g.clone())
    }
}

/// Substitutes `q̇ = q' ṡ`, `q̈ = q'' ṡ² + q' s̈` into the second-order form:
/// `a = A q'`, `b = A q'' + q'ᵀ B q'`, `c = f`. The polytope passes through.
pub fn project_second_order(
    terms: &DynamicsTerms,
    polytope: (&DMatrix<f64>, &DVector<f64>),
    qp: &DVector<f64>,
    qpp: &DVector<f64>,
) -> Result<ProjectedConstraint> {
    let (m, n) = terms.a.shape();
    if qp.len() != n || qpp.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "A is {m}x{n} but path derivatives have lengths {} and {}",
            qp.len(),
            qpp.len()
        )));
    }
    if terms.b.len() != m || terms.b.iter().any(|bk| bk.shape() != (n, n)) {
        return Err(Error::ShapeMismatch(format!("B must hold {m} matrices of shape {n}x{n}")));
    }
    if terms.f.len() != m {
        return Err(Error::ShapeMismatch(format!("f has length {}, expected {m}", terms.f.len())));
    }
    let (f, g) = polytope;
    if f.ncols() != m || f.nrows() != g.len() {
        return Err(Error::ShapeMismatch(format!(
            "polytope F is {}x{} with g of length {}, constraint dimension is {m}",
            f.nrows(),
            f.ncols(),
            g.len()
        )));
    }
    let a = &terms.a * qp;
    let quad = DVector::from_iterator(m, terms.b.iter().map(|bk| qp.dot(&(bk * qp))));
    let b = &terms.a * qpp + quad;
    Ok(ProjectedConstraint { a, b, c: terms.f.clone(), f: f.clone(), g: g.clone() })
}

/// Caller-supplied rigid-body model.
pub trait Dynamics: Send + Sync + fmt::Debug {
    fn terms(&self, q: &[f64]) -> DynamicsTerms;
}

/// Second-order constraint `A(q) q̈ + q̇ᵀ B(q) q̇ + f(q) ∈ {y : F y <= g}` along a path.
///
/// Used as a canonical constraint it yields the rows of
/// [`ProjectedConstraint::to_rows`]; used as a slack constraint it keeps the
/// lifted form with `H = I`.
#[derive(Debug, Clone)]
pub struct SecondOrderConstraint {
    path: Arc<GeometricPath>,
    dynamics: Arc<dyn Dynamics>,
    f: DMatrix<f64>,
    g: DVector<f64>,
}

impl SecondOrderConstraint {
    pub fn new(path: Arc<GeometricPath>, dynamics: Arc<dyn Dynamics>, f: DMatrix<f64>, g: DVector<f64>) -> Self {
        Self { path, dynamics, f, g }
    }

    pub fn project_at(&self, s: f64) -> Result<ProjectedConstraint> {
        let q = self.path.eval(s, 0)?;
        let qp = DVector::from_vec(self.path.eval(s, 1)?);
        let qpp = DVector::from_vec(self.path.eval(s, 2)?);
        let terms = self.dynamics.terms(&q);
        project_second_order(&terms, (&self.f, &self.g), &qp, &qpp)
    }
}

impl CanonicalConstraint for SecondOrderConstraint {
    fn row_count(&self) -> usize {
        self.f.nrows()
    }

    fn rows_at(&self, s: f64, out: &mut Vec<LinearRow>) -> Result<()> {
        out.extend(self.project_at(s)?.to_rows());
        Ok(())
    }
}

impl SlackConstraint for SecondOrderConstraint {
    fn block_at(&self, s: f64) -> Result<SlackBlock> {
        self.project_at(s)?.to_slack_block()
    }
}

/// Box `lo <= y <= hi` as `(F, g)`.
pub fn box_polytope(lo: &[f64], hi: &[f64]) -> (DMatrix<f64>, DVector<f64>) {
    let n = lo.len();
    let mut f = DMatrix::zeros(2 * n, n);
    let mut g = DVector::zeros(2 * n);
    for j in 0..n {
        f[(2 * j, j)] = 1.0;
        g[2 * j] = hi[j];
        f[(2 * j + 1, j)] = -1.0;
        g[2 * j + 1] = -lo[j];
    }
    (f, g)
}
