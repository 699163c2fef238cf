//! Piecewise-cubic geometric paths `q(s)` and their first two derivatives.
//!
//! Each segment stores, per joint, the coefficients of a cubic in the local
//! coordinate `s - s_k`. Evaluation at an interior breakpoint uses the piece
//! on the right; `s_end` uses the last piece.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed outside `[0, s_end]` before evaluation is rejected.
pub const DOMAIN_TOLERANCE: f64 = 1e-12;

/// A waypoint of an interpolated path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub s: f64,
    pub q: Vec<f64>,
}

impl Waypoint {
    pub fn new(s: f64, q: Vec<f64>) -> Self {
        Self { s, q }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometricPath {
    dof: usize,
    breakpoints: Vec<f64>,
    /// `coefficients[k][j]` holds `[c0, c1, c2, c3]` of joint `j` on segment `k`.
    coefficients: Vec<Vec<[f64; 4]>>,
}

impl GeometricPath {
    /// Builds a path from explicit polynomial pieces.
    ///
    /// Breakpoints are shifted so the domain starts at zero. Continuity across
    /// breakpoints is not enforced; a path with C¹ knots is accepted as is.
    pub fn from_pieces(breakpoints: Vec<f64>, coefficients: Vec<Vec<[f64; 4]>>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::InvalidPath("at least two breakpoints are required".into()));
        }
        if coefficients.len() != breakpoints.len() - 1 {
            return Err(Error::InvalidPath(format!(
                "{} breakpoints need {} segments, got {}",
                breakpoints.len(),
                breakpoints.len() - 1,
                coefficients.len()
            )));
        }
        check_increasing(&breakpoints)?;
        let dof = coefficients[0].len();
        if dof == 0 {
            return Err(Error::InvalidPath("path has zero degrees of freedom".into()));
        }
        for (k, seg) in coefficients.iter().enumerate() {
            if seg.len() != dof {
                return Err(Error::InvalidPath(format!("segment {k} has {} joints, expected {dof}", seg.len())));
            }
            if seg.iter().flatten().any(|c| !c.is_finite()) {
                return Err(Error::InvalidPath(format!("segment {k} has non-finite coefficients")));
            }
        }
        let origin = breakpoints[0];
        let breakpoints = breakpoints.into_iter().map(|s| s - origin).collect();
        Ok(Self { dof, breakpoints, coefficients })
    }

    /// Natural cubic spline (zero second derivative at both ends) through the
    /// waypoints, with the domain shifted to start at zero.
    pub fn spline_from_waypoints(waypoints: &[Waypoint]) -> Result<Self> {
        if waypoints.len() < 2 {
            return Err(Error::InvalidPath(format!("at least two waypoints are required, got {}", waypoints.len())));
        }
        let dof = waypoints[0].q.len();
        if dof == 0 {
            return Err(Error::InvalidPath("waypoints have zero dimension".into()));
        }
        if let Some((k, w)) = waypoints.iter().enumerate().find(|(_, w)| w.q.len() != dof) {
            return Err(Error::InvalidPath(format!("waypoint {k} has dimension {}, expected {dof}", w.q.len())));
        }
        let knots: Vec<f64> = waypoints.iter().map(|w| w.s).collect();
        check_increasing(&knots)?;
        if waypoints.iter().flat_map(|w| &w.q).any(|v| !v.is_finite()) {
            return Err(Error::InvalidPath("waypoint coordinates must be finite".into()));
        }

        let segments = knots.len() - 1;
        let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
        let mut coefficients = vec![vec![[0.0; 4]; dof]; segments];
        for j in 0..dof {
            let y: Vec<f64> = waypoints.iter().map(|w| w.q[j]).collect();
            let m = natural_second_derivatives(&h, &y);
            for k in 0..segments {
                let hk = h[k];
                coefficients[k][j] = [
                    y[k],
                    (y[k + 1] - y[k]) / hk - hk * (2.0 * m[k] + m[k + 1]) / 6.0,
                    m[k] / 2.0,
                    (m[k + 1] - m[k]) / (6.0 * hk),
                ];
            }
        }
        Self::from_pieces(knots, coefficients)
    }

    pub fn dof(&self) -> usize {
        self.dof
    }

    pub fn s_end(&self) -> f64 {
        *self.breakpoints.last().expect("at least two breakpoints")
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Value of `q`, `q'` or `q''` (order 0, 1, 2) at `s`.
    pub fn eval(&self, s: f64, order: usize) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dof];
        self.eval_into(s, order, &mut out)?;
        Ok(out)
    }

    /// Allocation-free form of [`GeometricPath::eval`]; `out` must have length `dof`.
    pub fn eval_into(&self, s: f64, order: usize, out: &mut [f64]) -> Result<()> {
        if order > 2 {
            return Err(Error::InvalidOrder(order));
        }
        if out.len() != self.dof {
            return Err(Error::ShapeMismatch(format!(
                "output buffer has length {}, path has {} joints",
                out.len(),
                self.dof
            )));
        }
        let (k, ds) = self.locate(s)?;
        for (o, c) in out.iter_mut().zip(&self.coefficients[k]) {
            *o = match order {
                0 => c[0] + ds * (c[1] + ds * (c[2] + ds * c[3])),
                1 => c[1] + ds * (2.0 * c[2] + 3.0 * ds * c[3]),
                _ => 2.0 * c[2] + 6.0 * ds * c[3],
            };
        }
        Ok(())
    }

    /// Segment index and local coordinate for `s`.
    fn locate(&self, s: f64) -> Result<(usize, f64)> {
        let end = self.s_end();
        if !(s >= -DOMAIN_TOLERANCE && s <= end + DOMAIN_TOLERANCE) {
            return Err(Error::OutOfDomain { s, start: 0.0, end });
        }
        let s = s.clamp(0.0, end);
        let segments = self.coefficients.len();
        let k = self.breakpoints.partition_point(|&b| b <= s).saturating_sub(1).min(segments - 1);
        Ok((k, s - self.breakpoints[k]))
    }
}

fn check_increasing(knots: &[f64]) -> Result<()> {
    if knots.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidPath("path parameters must be finite".into()));
    }
    if let Some(k) = knots.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::InvalidPath(format!(
            "path parameters must be strictly increasing (s[{}] = {} >= s[{}] = {})",
            k,
            knots[k],
            k + 1,
            knots[k + 1]
        )));
    }
    Ok(())
}

/// Second derivatives at the knots of the natural cubic spline through `y`.
fn natural_second_derivatives(h: &[f64], y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    // Tridiagonal system for m[1..n-1], solved with the Thomas algorithm.
    let interior = n - 2;
    let mut diag = vec![0.0; interior];
    let mut rhs = vec![0.0; interior];
    for i in 0..interior {
        let k = i + 1;
        diag[i] = 2.0 * (h[k - 1] + h[k]);
        rhs[i] = 6.0 * ((y[k + 1] - y[k]) / h[k] - (y[k] - y[k - 1]) / h[k - 1]);
    }
    for i in 1..interior {
        let w = h[i] / diag[i - 1];
        diag[i] -= w * h[i];
        rhs[i] -= w * rhs[i - 1];
    }
    m[interior] = rhs[interior - 1] / diag[interior - 1];
    for i in (0..interior - 1).rev() {
        m[i + 1] = (rhs[i] - h[i + 1] * m[i + 2]) / diag[i];
    }
    m
}
