//! Problem documents: JSON input checked against the published schema, then
//! parsed into typed descriptors and built into core objects.

use std::sync::{Arc, OnceLock};

use anyhow::{anyhow, bail, Context, Result};
use nalgebra::{DMatrix, DVector};
use serde::Deserialize;
use serde_json::Value;
use topp_core::constraints::{
    Constraint, JointVelocityBounds, LinearRow, SlackBlock, TabulatedRows, TabulatedSlack, DEFAULT_X_CAP,
};
use topp_core::discretize::{discretize, make_grid, DiscretizedProblem, Scheme};
use topp_core::path::{GeometricPath, Waypoint};
use topp_core::reach::{Interval, UncertaintyVertexSet};

pub const PROBLEM_SCHEMA: &str = include_str!("../schema/problem.schema.json");
pub const RESULT_SCHEMA: &str = include_str!("../schema/result.schema.json");

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDocument {
    pub path: PathInput,
    pub constraints: Vec<ConstraintInput>,
    #[serde(rename = "N")]
    pub segments: usize,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default)]
    pub sdot0: f64,
    #[serde(default)]
    pub sdot_n: f64,
    pub uncertainty: Option<UncertaintyInput>,
    pub avp_seed: Option<Vec<f64>>,
    pub x_cap: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum PathInput {
    Waypoints(Vec<Waypoint>),
    Pieces { breakpoints: Vec<f64>, coefficients: Vec<Vec<[f64; 4]>> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConstraintInput {
    JointAcceleration { lower: Vec<f64>, upper: Vec<f64> },
    JointVelocity { vmax: Vec<f64>, cap: Option<f64> },
    CanonicalRows { knots: Option<Vec<f64>>, table: Vec<Vec<[f64; 3]>> },
    PolytopeSlack { knots: Option<Vec<f64>>, blocks: Vec<BlockInput> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockInput {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub h: Option<Vec<Vec<f64>>>,
    pub f: Vec<Vec<f64>>,
    pub g: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UncertaintyInput {
    pub realizations: Vec<Vec<ConstraintInput>>,
}

fn compile(source: &str) -> jsonschema::Validator {
    let schema: Value = serde_json::from_str(source).expect("bundled schema is valid JSON");
    jsonschema::validator_for(&schema).expect("bundled schema compiles")
}

pub fn problem_validator() -> &'static jsonschema::Validator {
    static CELL: OnceLock<jsonschema::Validator> = OnceLock::new();
    CELL.get_or_init(|| compile(PROBLEM_SCHEMA))
}

pub fn result_validator() -> &'static jsonschema::Validator {
    static CELL: OnceLock<jsonschema::Validator> = OnceLock::new();
    CELL.get_or_init(|| compile(RESULT_SCHEMA))
}

/// Schema violations of `value`, one line each, prefixed by the instance path.
pub fn schema_errors(validator: &jsonschema::Validator, value: &Value) -> Vec<String> {
    validator
        .iter_errors(value)
        .map(|e| {
            let at = e.instance_path().to_string();
            format!("at {}: {e}", if at.is_empty() { "/" } else { &at })
        })
        .collect()
}

impl ProblemDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).context("problem file is not valid JSON")?;
        let errors = schema_errors(problem_validator(), &value);
        if !errors.is_empty() {
            bail!("problem does not match the schema:\n  {}", errors.join("\n  "));
        }
        let doc: Self =
            serde_path_to_error::deserialize(&value).map_err(|e| anyhow!("at {}: {}", e.path(), e.inner()))?;
        Ok(doc)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn x_cap(&self) -> f64 {
        self.x_cap.unwrap_or(DEFAULT_X_CAP)
    }

    /// The `avp_seed` interval; the boundary point `sdot0^2` when absent.
    pub fn avp_interval(&self) -> Interval {
        match self.avp_seed.as_deref() {
            None => Interval::point(self.sdot0 * self.sdot0),
            Some([lo, hi]) => Interval::new(*lo, *hi),
            Some(_) => Interval::Empty,
        }
    }

    pub fn build(&self) -> Result<Built> {
        let path = Arc::new(build_path(&self.path).context("at path")?);
        let constraints = build_constraints(&path, &self.constraints, "constraints")?;
        let grid = make_grid(path.s_end(), self.segments).context("at N")?;
        let mut problem = discretize(&path, &constraints, &grid, self.scheme, self.x_cap())?;
        if let Some(u) = &self.uncertainty {
            let realizations = u
                .realizations
                .iter()
                .enumerate()
                .map(|(v, inputs)| build_constraints(&path, inputs, &format!("uncertainty.realizations[{v}]")))
                .collect::<Result<Vec<_>>>()?;
            let vertices = UncertaintyVertexSet::from_constraints(&grid, self.scheme, &realizations)?;
            problem = vertices.robust_problem(&problem)?;
        }
        Ok(Built { path, constraints, problem })
    }
}

/// A document built into core objects. `problem` already carries the robust
/// rows when the document has an uncertainty set.
#[derive(Debug, Clone)]
pub struct Built {
    pub path: Arc<GeometricPath>,
    pub constraints: Vec<Constraint>,
    pub problem: DiscretizedProblem,
}

fn build_path(input: &PathInput) -> Result<GeometricPath> {
    Ok(match input {
        PathInput::Waypoints(w) => GeometricPath::spline_from_waypoints(w)?,
        PathInput::Pieces { breakpoints, coefficients } => {
            GeometricPath::from_pieces(breakpoints.clone(), coefficients.clone())?
        }
    })
}

fn build_constraints(path: &Arc<GeometricPath>, inputs: &[ConstraintInput], at: &str) -> Result<Vec<Constraint>> {
    inputs
        .iter()
        .enumerate()
        .map(|(k, input)| build_constraint(path, input).with_context(|| format!("at {at}[{k}]")))
        .collect()
}

fn build_constraint(path: &Arc<GeometricPath>, input: &ConstraintInput) -> Result<Constraint> {
    Ok(match input {
        ConstraintInput::JointAcceleration { lower, upper } => {
            Constraint::joint_acceleration(path.clone(), lower.clone(), upper.clone())?
        }
        ConstraintInput::JointVelocity { vmax, cap } => {
            let mut bounds = JointVelocityBounds::new(path.clone(), vmax.clone())?;
            if let Some(cap) = cap {
                bounds = bounds.with_cap(*cap);
            }
            Constraint::Velocity(Arc::new(bounds))
        }
        ConstraintInput::CanonicalRows { knots, table } => {
            let rows: Vec<Vec<LinearRow>> =
                table.iter().map(|set| set.iter().map(|&[a, b, c]| LinearRow::new(a, b, c)).collect()).collect();
            let knots = knots.clone().unwrap_or_else(|| vec![0.0]);
            Constraint::canonical(TabulatedRows::new(knots, rows)?)
        }
        ConstraintInput::PolytopeSlack { knots, blocks } => {
            let blocks = blocks
                .iter()
                .enumerate()
                .map(|(k, b)| build_block(b).with_context(|| format!("at blocks[{k}]")))
                .collect::<Result<Vec<_>>>()?;
            let knots = knots.clone().unwrap_or_else(|| vec![0.0]);
            Constraint::slack(TabulatedSlack::new(knots, blocks)?)
        }
    })
}

fn matrix(rows: &[Vec<f64>], name: &str) -> Result<DMatrix<f64>> {
    let width = rows.first().map_or(0, Vec::len);
    if let Some(k) = rows.iter().position(|r| r.len() != width) {
        bail!("{name} row {k} has {} entries, expected {width}", rows[k].len());
    }
    Ok(DMatrix::from_fn(rows.len(), width, |i, j| rows[i][j]))
}

fn build_block(input: &BlockInput) -> Result<SlackBlock> {
    let (a, b, c) =
        (DVector::from_vec(input.a.clone()), DVector::from_vec(input.b.clone()), DVector::from_vec(input.c.clone()));
    let f = matrix(&input.f, "f")?;
    let g = DVector::from_vec(input.g.clone());
    Ok(match &input.h {
        Some(h) => SlackBlock::new(a, b, c, matrix(h, "h")?, f, g)?,
        None => SlackBlock::with_identity(a, b, c, f, g)?,
    })
}
