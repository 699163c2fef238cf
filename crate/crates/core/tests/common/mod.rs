#![allow(dead_code)]

use std::sync::Arc;

use rand::{Rng, RngExt};
use topp_core::constraints::{Constraint, LinearRow, DEFAULT_X_CAP};
use topp_core::discretize::{discretize, make_grid, DiscretizedProblem, Scheme};
use topp_core::lp::solve_2d;
use topp_core::path::GeometricPath;

/// Normalized residual of `row` at `(u, x)`.
pub fn scaled_residual(row: &LinearRow, u: f64, x: f64) -> f64 {
    row.residual(u, x) / row.a.hypot(row.b).max(1e-300)
}

pub fn worst_residual(rows: &[LinearRow], u: f64, x: f64) -> f64 {
    rows.iter().map(|r| scaled_residual(r, u, x)).fold(f64::NEG_INFINITY, f64::max)
}

/// Random points of the polygon `rows`, as convex combinations of LP vertices.
pub fn sample_polygon(rows: &[LinearRow], rng: &mut impl Rng, count: usize) -> Vec<(f64, f64)> {
    let mut vertices = Vec::new();
    for k in 0..12 {
        let angle = k as f64 * std::f64::consts::TAU / 12.0 + rng.random_range(0.0..0.5);
        let out = solve_2d([angle.cos(), angle.sin()], rows, k);
        if out.is_optimal() {
            vertices.push((out.point[0], out.point[1]));
        }
    }
    if vertices.is_empty() {
        return Vec::new();
    }
    (0..count)
        .map(|_| {
            let weights: Vec<f64> = vertices.iter().map(|_| rng.random_range(0.0..1.0)).collect();
            let total: f64 = weights.iter().sum();
            vertices
                .iter()
                .zip(&weights)
                .fold((0.0, 0.0), |(u, x), ((vu, vx), w)| (u + vu * w / total, x + vx * w / total))
        })
        .collect()
}

/// Straight-line path `q(s) = q0 + s d` on `[0, 1]`: every stage has the same rows.
pub fn straight_line(q0: &[f64], d: &[f64]) -> Arc<GeometricPath> {
    let pieces = vec![q0.iter().zip(d).map(|(a, b)| [*a, *b, 0.0, 0.0]).collect()];
    Arc::new(GeometricPath::from_pieces(vec![0.0, 1.0], pieces).unwrap())
}

/// Straight-line instance with random acceleration and velocity bounds.
pub fn straight_line_problem(rng: &mut impl Rng, dof: usize, n: usize) -> DiscretizedProblem {
    let q0: Vec<f64> = (0..dof).map(|_| rng.random_range(-1.0..1.0)).collect();
    let d: Vec<f64> = (0..dof).map(|_| rng.random_range(-1.5..1.5)).collect();
    let path = straight_line(&q0, &d);
    let hi: Vec<f64> = (0..dof).map(|_| rng.random_range(0.5..2.0)).collect();
    let lo: Vec<f64> = (0..dof).map(|_| -rng.random_range(0.5..2.0)).collect();
    let vmax: Vec<f64> = (0..dof).map(|_| rng.random_range(0.5..2.0)).collect();
    let constraints = [
        Constraint::joint_acceleration(path.clone(), lo, hi).unwrap(),
        Constraint::joint_velocity(path.clone(), vmax).unwrap(),
    ];
    let grid = make_grid(1.0, n).unwrap();
    discretize(&path, &constraints, &grid, Scheme::Collocation, DEFAULT_X_CAP).unwrap()
}
