//! Sampled verification of φ-convexity inequalities and of the theorems built
//! on them.
//!
//! Every check sweeps a deterministic grid of endpoint pairs `(x, y)` and
//! parameters `t`, records the sample with the largest margin `lhs − rhs`, and
//! reports [`Status::Violated`] with a [`Violation`] as soon as that margin
//! exceeds the tolerance. Theorem checks test their hypotheses first and stop
//! with [`Status::HypothesisFailed`] when one of them fails on the samples.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::expr::{EvalError, Expression};
use crate::manifold::{sample_region, Factor, FactorRegion, GridSpec, ManifoldSpec, Region};

mod basic;
mod engine;
mod falsify;
mod spec;
mod theorems;

pub use basic::{
    audit_mean_value, audit_three_point, check_differential_criterion, check_geodesic_convex,
    check_geodesic_phi_convex, check_phi_convex_interval, check_phi_preinvex, check_slope_inequality,
    verify_restriction_equivalence,
};
pub use falsify::falsify;
pub use spec::{CheckSpec, LimitMode, Revalidation};
pub use theorems::{
    audit_endpoint_derivatives, check_composition, check_g_preinvex_composition, check_lipschitz_bound,
    check_local_min_criterion, check_phi_limit, check_pushforward, check_sup_family, check_weighted_sum,
};

pub(crate) use engine::{Outcome, SweepRules};
pub(crate) use theorems::pointwise_max;
pub use theorems::{probe_plan, probe_subcheck};

/// Absolute tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Closed-form inequalities.
    pub closed: f64,
    /// Comparisons involving finite differences.
    pub fd: f64,
    pub fd_step: f64,
    /// Strict checks require `margin < −strict` at interior `t`, `x ≠ y`.
    pub strict: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { closed: 1e-9, fd: 1e-4, fd_step: 1e-5, strict: 1e-9 }
    }
}

/// Grid sizes and refinement settings shared by all checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    /// Endpoint grid points per line factor (and for 1-D intervals).
    pub line_count: usize,
    /// Endpoint grid points per circle factor.
    pub circle_count: usize,
    /// Per-factor override of the two counts above.
    pub factor_counts: Option<Vec<usize>>,
    /// Uniform grid on `[0, 1]`, endpoints included.
    pub t_count: usize,
    pub jitter_seed: Option<u64>,
    pub rounds: u32,
    pub zoom: f64,
    pub tol: Tolerances,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        SamplingPlan {
            line_count: 33,
            circle_count: 16,
            factor_counts: None,
            t_count: 17,
            jitter_seed: None,
            rounds: 3,
            zoom: 10.0,
            tol: Tolerances::default(),
        }
    }
}

impl SamplingPlan {
    pub fn validate(&self) -> Result<(), Error> {
        let mut counts = vec![self.line_count, self.circle_count, self.t_count];
        counts.extend(self.factor_counts.iter().flatten());
        if counts.iter().any(|&c| c < 2) {
            return Err(Error::invalid("every grid count must be at least 2"));
        }
        if !(self.zoom > 1.0) {
            return Err(Error::invalid("refinement zoom must exceed 1"));
        }
        let t = &self.tol;
        if [t.closed, t.fd, t.fd_step, t.strict].iter().any(|v| !(v.is_finite() && *v >= 0.0)) || t.fd_step == 0.0 {
            return Err(Error::invalid("tolerances must be finite and non-negative, the FD step positive"));
        }
        Ok(())
    }

    pub fn t_grid(&self) -> Vec<f64> {
        uniform(0.0, 1.0, self.t_count)
    }

    pub fn interval_grid(&self, a: f64, b: f64) -> Vec<f64> {
        uniform(a, b, self.line_count)
    }

    pub(crate) fn counts_for(&self, region: &Region) -> Result<Vec<usize>, Error> {
        if let Some(c) = &self.factor_counts {
            if c.len() != region.dim() {
                return Err(Error::invalid(format!(
                    "plan lists {} factor counts for a {}-factor region",
                    c.len(),
                    region.dim()
                )));
            }
            return Ok(c.clone());
        }
        Ok(region
            .factors()
            .iter()
            .map(|f| match f {
                FactorRegion::Interval(..) => self.line_count,
                _ => self.circle_count,
            })
            .collect())
    }

    /// Endpoint samples of `region` as raw coordinate vectors.
    pub(crate) fn points(&self, region: &Region) -> Result<Vec<Vec<f64>>, Error> {
        let grid = GridSpec { counts: self.counts_for(region)?, jitter_seed: self.jitter_seed };
        Ok(sample_region(region, &grid)?.into_iter().map(|p| p.into_coords()).collect())
    }
}

/// `n` evenly spaced values on `[a, b]` with both ends exact.
pub(crate) fn uniform(a: f64, b: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n)
        .map(|k| {
            if k == 0 {
                a
            } else if k + 1 == n {
                b
            } else {
                a + (b - a) * k as f64 / (n - 1) as f64
            }
        })
        .collect()
}

/// A real function on a catalog manifold, written over its coordinate names.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionOnManifold {
    manifold: ManifoldSpec,
    expr: Expression,
}

impl FunctionOnManifold {
    pub fn parse(manifold: &ManifoldSpec, text: &str) -> Result<Self, Error> {
        let names = manifold.coordinate_names();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let expr = Expression::parse_with_vars(text, &refs)?;
        Ok(FunctionOnManifold { manifold: manifold.clone(), expr })
    }

    /// Re-declares `expr` over the coordinate names; fails on a foreign variable.
    pub fn from_expression(manifold: &ManifoldSpec, expr: &Expression) -> Result<Self, Error> {
        let expr = expr
            .with_vars(&manifold.coordinate_names())
            .map_err(|v| Error::invalid(format!("`{v}` is not a coordinate of the manifold")))?;
        Ok(FunctionOnManifold { manifold: manifold.clone(), expr })
    }

    pub fn manifold(&self) -> &ManifoldSpec {
        &self.manifold
    }

    pub fn expression(&self) -> &Expression {
        &self.expr
    }

    #[inline]
    pub fn eval(&self, coords: &[f64]) -> Result<f64, EvalError> {
        self.expr.eval_slice(coords)
    }

    pub(crate) fn check_region(&self, region: &Region) -> Result<(), Error> {
        let fits = region.dim() == self.manifold.dim()
            && self.manifold.factors().iter().zip(region.factors()).all(|(m, r)| match m {
                Factor::Line { .. } => matches!(r, FactorRegion::Interval(..)),
                Factor::Circle => !matches!(r, FactorRegion::Interval(..)),
            });
        if fits {
            Ok(())
        } else {
            Err(Error::invalid("region does not fit the function's manifold"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    PassOnSamples,
    Violated,
    HypothesisFailed,
    Inconclusive,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::PassOnSamples => "pass-on-samples",
            Status::Violated => "violated",
            Status::HypothesisFailed => "hypothesis-failed",
            Status::Inconclusive => "inconclusive",
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A sample where `lhs − rhs` exceeds the tolerance.
///
/// For set checks the last coordinate of `x` and `y` holds the level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub status: Status,
    pub samples: u64,
    pub worst_margin: Option<f64>,
    pub violation: Option<Violation>,
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metrics: BTreeMap<String, f64>,
    /// Largest margin after each refinement round (falsify only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub margin_history: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub subchecks: Vec<CheckReport>,
}

impl CheckReport {
    pub fn new(check: &str, status: Status) -> Self {
        CheckReport {
            check: check.to_string(),
            status,
            samples: 0,
            worst_margin: None,
            violation: None,
            notes: Vec::new(),
            metrics: BTreeMap::new(),
            margin_history: Vec::new(),
            subchecks: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::PassOnSamples
    }

    pub(crate) fn note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub(crate) fn metric(mut self, key: &str, value: f64) -> Self {
        self.metrics.insert(key.to_string(), value);
        self
    }

    /// Gated report: the first failing hypothesis stops the theorem check.
    pub(crate) fn hypothesis_failed(check: &str, hypotheses: Vec<CheckReport>, why: impl Into<String>) -> Self {
        let mut r = CheckReport::new(check, Status::HypothesisFailed).note(why);
        r.samples = hypotheses.iter().map(|h| h.samples).sum();
        r.subchecks = hypotheses;
        r
    }

    /// Theorem report whose verdict is the conclusion's verdict.
    pub(crate) fn concluded(check: &str, hypotheses: Vec<CheckReport>, conclusion: CheckReport) -> Self {
        let mut r = CheckReport::new(check, conclusion.status);
        r.samples = hypotheses.iter().map(|h| h.samples).sum::<u64>() + conclusion.samples;
        r.worst_margin = conclusion.worst_margin;
        r.violation = conclusion.violation.clone();
        r.notes = conclusion.notes.clone();
        r.subchecks = hypotheses;
        r.subchecks.push(conclusion);
        r
    }
}
