//! Random problem instances: spline paths through random waypoints with
//! random joint acceleration and velocity bounds that contain zero.

use std::sync::Arc;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constraints::Constraint;
use crate::discretize::{discretize, make_grid, DiscretizedProblem, Scheme};
use crate::error::Result;
use crate::path::{GeometricPath, Waypoint};

/// Path positions of the random waypoints.
pub const WAYPOINT_S: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomInstance {
    pub waypoints: Vec<Waypoint>,
    pub acc_lo: Vec<f64>,
    pub acc_hi: Vec<f64>,
    pub vmax: Vec<f64>,
}

impl RandomInstance {
    /// Waypoint coordinates uniform in `[-1, 1]`; `hi_j`, `-lo_j` and `vmax_j`
    /// drawn independently and uniformly from `[0.5, 2]`.
    pub fn generate(dof: usize, rng: &mut impl rand::Rng) -> Self {
        let waypoints = WAYPOINT_S
            .iter()
            .map(|&s| Waypoint::new(s, (0..dof).map(|_| rng.random_range(-1.0..=1.0)).collect()))
            .collect();
        let acc_hi = (0..dof).map(|_| rng.random_range(0.5..=2.0)).collect();
        let acc_lo = (0..dof).map(|_| -rng.random_range(0.5..=2.0)).collect();
        let vmax = (0..dof).map(|_| rng.random_range(0.5..=2.0)).collect();
        Self { waypoints, acc_lo, acc_hi, vmax }
    }

    pub fn from_seed(dof: usize, seed: u64) -> Self {
        Self::generate(dof, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn dof(&self) -> usize {
        self.acc_hi.len()
    }

    pub fn path(&self) -> Result<Arc<GeometricPath>> {
        Ok(Arc::new(GeometricPath::spline_from_waypoints(&self.waypoints)?))
    }

    /// Joint acceleration bounds, then joint velocity bounds. Each stage then
    /// has `2n` acceleration rows and one velocity row, plus the two implicit
    /// rows on `x`.
    pub fn constraints(&self, path: &Arc<GeometricPath>) -> Result<Vec<Constraint>> {
        Ok(vec![
            Constraint::joint_acceleration(path.clone(), self.acc_lo.clone(), self.acc_hi.clone())?,
            Constraint::joint_velocity(path.clone(), self.vmax.clone())?,
        ])
    }

    pub fn discretize(&self, n: usize, scheme: Scheme, x_cap: f64) -> Result<InstanceProblem> {
        let path = self.path()?;
        let constraints = self.constraints(&path)?;
        let grid = make_grid(path.s_end(), n)?;
        let problem = discretize(&path, &constraints, &grid, scheme, x_cap)?;
        Ok(InstanceProblem { path, constraints, problem })
    }

    /// Whether some joint tangent changes sign in the interior, i.e. the path
    /// passes a point where that joint's acceleration row loses its `u` term.
    pub fn has_zero_inertia_point(&self, samples: usize) -> Result<bool> {
        let path = self.path()?;
        let end = path.s_end();
        let mut prev = path.eval(0.0, 1)?;
        for k in 1..=samples {
            let d = path.eval(end * k as f64 / samples as f64, 1)?;
            if d.iter().zip(&prev).any(|(a, b)| a * b < 0.0) {
                return Ok(true);
            }
            prev = d;
        }
        Ok(false)
    }
}

/// A discretized random instance together with its source data.
#[derive(Debug, Clone)]
pub struct InstanceProblem {
    pub path: Arc<GeometricPath>,
    pub constraints: Vec<Constraint>,
    pub problem: DiscretizedProblem,
}
