//! JSON run configuration and its resolution into checker inputs.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use geoconvex::bifunction::Bifunction;
use geoconvex::checker::{CheckSpec, FunctionOnManifold, LimitMode, SamplingPlan, Status, Tolerances, Violation};
use geoconvex::epigraph::{Bound, Constraint, SetSpec, DEFAULT_LEVEL_SPAN};
use geoconvex::expr::Expression;
use geoconvex::manifold::{Factor, FactorRegion, ManifoldSpec, Region};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_manifold")]
    pub manifold: ManifoldDesc,
    /// Name to expression text.
    #[serde(default)]
    pub functions: BTreeMap<String, String>,
    /// Name to expression text in `u`, `v`; catalog names need no entry.
    #[serde(default)]
    pub bifunctions: BTreeMap<String, String>,
    #[serde(default)]
    pub regions: BTreeMap<String, Vec<FactorDesc>>,
    #[serde(default)]
    pub sets: BTreeMap<String, SetDesc>,
    #[serde(default)]
    pub checks: Vec<CheckDesc>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: TolOverrides,
    #[serde(default)]
    pub plan: PlanOverrides,
    #[serde(default)]
    pub output: Outputs,
}

fn default_manifold() -> ManifoldDesc {
    ManifoldDesc::Named("cylinder".into())
}

/// `"line"`, `"circle"`, `"cylinder"`, `"euclidean<N>"`, or a list of
/// `"line"` / `"circle"` factors.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ManifoldDesc {
    Named(String),
    Factors(Vec<String>),
}

impl ManifoldDesc {
    pub fn resolve(&self) -> Result<ManifoldSpec> {
        let factor = |s: &str| match s {
            "line" => Ok(Factor::line()),
            "circle" => Ok(Factor::Circle),
            other => Err(anyhow!("unknown manifold factor `{other}`")),
        };
        let spec = match self {
            ManifoldDesc::Named(n) => match n.as_str() {
                "line" => ManifoldSpec::line(),
                "cylinder" => ManifoldSpec::cylinder(),
                "circle" => ManifoldSpec::new(vec![Factor::Circle])?,
                other => match other.strip_prefix("euclidean").and_then(|d| d.parse::<usize>().ok()) {
                    Some(d) if d > 0 => ManifoldSpec::euclidean(d),
                    _ => bail!("unknown manifold `{other}`"),
                },
            },
            ManifoldDesc::Factors(fs) => ManifoldSpec::new(fs.iter().map(|s| factor(s)).collect::<Result<_>>()?)?,
        };
        Ok(spec)
    }
}

/// One region factor: `[a, b]`, `"circle"`, or `{"arc": [start, length]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FactorDesc {
    Interval([f64; 2]),
    Whole(String),
    Arc { arc: [f64; 2] },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetDesc {
    pub region: String,
    pub constraints: Vec<ConstraintDesc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level_origins: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level_span: Option<f64>,
}

/// `expr ≤ level` when `bound` is `"level"`, else `expr ≤ bound`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintDesc {
    pub expr: String,
    pub bound: BoundDesc,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoundDesc {
    Constant(f64),
    Level(String),
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closed: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fd: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fd_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strict: Option<f64>,
}

impl TolOverrides {
    pub fn apply(&self, t: &mut Tolerances) {
        t.closed = self.closed.unwrap_or(t.closed);
        t.fd = self.fd.unwrap_or(t.fd);
        t.fd_step = self.fd_step.unwrap_or(t.fd_step);
        t.strict = self.strict.unwrap_or(t.strict);
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub circle_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor_counts: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rounds: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zoom: Option<f64>,
    /// Jitter the endpoint grids with the run seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jitter: Option<bool>,
}

impl PlanOverrides {
    pub fn is_empty(&self) -> bool {
        *self == PlanOverrides::default()
    }

    /// Parses `key=value` pairs separated by commas, e.g. `line=65,t=33,jitter=on`.
    pub fn parse_samples(spec: &str) -> Result<Self> {
        let mut o = PlanOverrides::default();
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = item.split_once('=').ok_or_else(|| anyhow!("expected key=value, got `{item}`"))?;
            let num = || v.parse::<usize>().with_context(|| format!("bad count `{v}` for `{k}`"));
            match k {
                "line" | "line_count" => o.line_count = Some(num()?),
                "circle" | "circle_count" => o.circle_count = Some(num()?),
                "t" | "t_count" => o.t_count = Some(num()?),
                "rounds" => o.rounds = Some(v.parse().with_context(|| format!("bad round count `{v}`"))?),
                "zoom" => o.zoom = Some(v.parse().with_context(|| format!("bad zoom `{v}`"))?),
                "factors" => {
                    o.factor_counts = Some(
                        v.split(':').map(|c| c.parse::<usize>()).collect::<Result<_, _>>().context("bad factor counts")?,
                    )
                }
                "jitter" => {
                    o.jitter = Some(match v {
                        "on" | "true" | "1" => true,
                        "off" | "false" | "0" => false,
                        _ => bail!("jitter takes on/off, got `{v}`"),
                    })
                }
                _ => bail!("unknown sampling key `{k}`"),
            }
        }
        Ok(o)
    }

    pub fn apply(&self, plan: &mut SamplingPlan, seed: u64) {
        plan.line_count = self.line_count.unwrap_or(plan.line_count);
        plan.circle_count = self.circle_count.unwrap_or(plan.circle_count);
        if self.factor_counts.is_some() {
            plan.factor_counts = self.factor_counts.clone();
        }
        plan.t_count = self.t_count.unwrap_or(plan.t_count);
        plan.rounds = self.rounds.unwrap_or(plan.rounds);
        plan.zoom = self.zoom.unwrap_or(plan.zoom);
        if let Some(j) = self.jitter {
            plan.jitter_seed = j.then_some(seed);
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expectation {
    Pass,
    Violated,
    HypothesisFailed,
    Inconclusive,
    #[default]
    Any,
}

impl Expectation {
    pub fn matches(self, status: Status) -> bool {
        match self {
            Expectation::Any => true,
            Expectation::Pass => status == Status::PassOnSamples,
            Expectation::Violated => status == Status::Violated,
            Expectation::HypothesisFailed => status == Status::HypothesisFailed,
            Expectation::Inconclusive => status == Status::Inconclusive,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Expectation::Pass => "pass",
            Expectation::Violated => "violated",
            Expectation::HypothesisFailed => "hypothesis-failed",
            Expectation::Inconclusive => "inconclusive",
            Expectation::Any => "any",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckDesc {
    pub name: String,
    #[serde(flatten)]
    pub kind: KindDesc,
    #[serde(default)]
    pub expect: Expectation,
    #[serde(default, skip_serializing_if = "PlanOverrides::is_empty")]
    pub plan: PlanOverrides,
}

/// Check arguments. Function, bifunction, region and set arguments are names
/// defined in the config; maps (`forward`, `inverse`, `eta`, `family`) are
/// inline expression text.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KindDesc {
    PhiConvexInterval { f: String, phi: String, interval: [f64; 2] },
    SlopeInequality { f: String, phi: String, interval: [f64; 2], #[serde(default)] min_gap: f64 },
    GeodesicPhiConvex { f: String, phi: String, region: String, #[serde(default)] strict: bool },
    GeodesicConvex { f: String, region: String },
    DifferentialCriterion { f: String, phi: String, region: String },
    RestrictionEquivalence { f: String, phi: String, region: String },
    MeanValue { f: String, phi: String, x1: f64, x2: f64 },
    ThreePoint { f: String, phi: String, points: [f64; 3] },
    Composition { f: String, g: String, phi: String, region: String, #[serde(default)] strict: bool },
    WeightedSum { functions: Vec<String>, lambdas: Vec<f64>, phi: String, region: String },
    Pushforward { f: String, phi: String, forward: Vec<String>, inverse: Vec<String>, region: String },
    LipschitzBound { f: String, phi: String, center: Vec<f64>, outer: f64, radius: f64, epsilon: f64 },
    SupFamily { functions: Vec<String>, phi: String, region: String },
    LocalMin { f: String, phi: String, x0: Vec<f64>, region: String },
    PhiLimit { f: String, family: String, mode: LimitMode, terms: usize, limit: String, region: String },
    EndpointDerivatives { f: String, phi: String, region: String },
    PhiPreinvex { f: String, phi: String, eta: Vec<String>, bounds: Vec<[f64; 2]> },
    GPreinvexComposition { f: String, g: String, phi: String, psi: String, region: String },
    GeodesicPhiConvexSet { set: String, phi: String },
    EpigraphCharacterization { f: String, phi: String, region: String },
    IntersectionClosure { sets: Vec<String>, phi: String },
    SupViaEpigraph { functions: Vec<String>, phi: String, region: String },
    /// One bifunction property probe.
    Probe { phi: String, property: String },
    /// Re-evaluates a reported violation of the check `of`.
    Witness { of: Box<KindDesc>, violation: Violation },
}

impl KindDesc {
    pub fn name(&self) -> &'static str {
        match self {
            KindDesc::Probe { .. } => "probe",
            KindDesc::Witness { .. } => "witness",
            KindDesc::PhiConvexInterval { .. } => "phi_convex_interval",
            KindDesc::SlopeInequality { .. } => "slope_inequality",
            KindDesc::GeodesicPhiConvex { .. } => "geodesic_phi_convex",
            KindDesc::GeodesicConvex { .. } => "geodesic_convex",
            KindDesc::DifferentialCriterion { .. } => "differential_criterion",
            KindDesc::RestrictionEquivalence { .. } => "restriction_equivalence",
            KindDesc::MeanValue { .. } => "mean_value",
            KindDesc::ThreePoint { .. } => "three_point",
            KindDesc::Composition { .. } => "composition",
            KindDesc::WeightedSum { .. } => "weighted_sum",
            KindDesc::Pushforward { .. } => "pushforward",
            KindDesc::LipschitzBound { .. } => "lipschitz_bound",
            KindDesc::SupFamily { .. } => "sup_family",
            KindDesc::LocalMin { .. } => "local_min",
            KindDesc::PhiLimit { .. } => "phi_limit",
            KindDesc::EndpointDerivatives { .. } => "endpoint_derivatives",
            KindDesc::PhiPreinvex { .. } => "phi_preinvex",
            KindDesc::GPreinvexComposition { .. } => "g_preinvex_composition",
            KindDesc::GeodesicPhiConvexSet { .. } => "geodesic_phi_convex_set",
            KindDesc::EpigraphCharacterization { .. } => "epigraph_characterization",
            KindDesc::IntersectionClosure { .. } => "intersection_closure",
            KindDesc::SupViaEpigraph { .. } => "sup_via_epigraph",
        }
    }
}

/// A descriptor with every name looked up.
#[derive(Debug, Clone)]
pub enum Resolved {
    Check(CheckSpec),
    Probe { phi: Bifunction, property: geoconvex::bifunction::Property },
    Witness { of: CheckSpec, violation: Violation },
}

/// Config-wide definitions used to resolve descriptors.
pub struct Scope<'a> {
    cfg: &'a RunConfig,
    pub manifold: ManifoldSpec,
}

impl<'a> Scope<'a> {
    pub fn new(cfg: &'a RunConfig) -> Result<Self> {
        Ok(Scope { cfg, manifold: cfg.manifold.resolve()? })
    }

    fn text(&self, name: &str) -> Result<&str> {
        self.cfg.functions.get(name).map(String::as_str).ok_or_else(|| anyhow!("undefined function `{name}`"))
    }

    /// A free-standing expression (interval checks, outer functions).
    pub fn expression(&self, name: &str) -> Result<Expression> {
        Expression::parse(self.text(name)?).with_context(|| format!("function `{name}`"))
    }

    pub fn function(&self, name: &str) -> Result<FunctionOnManifold> {
        FunctionOnManifold::parse(&self.manifold, self.text(name)?).with_context(|| format!("function `{name}`"))
    }

    pub fn bifunction(&self, name: &str) -> Result<Bifunction> {
        match self.cfg.bifunctions.get(name) {
            Some(text) => Bifunction::parse(name, text).with_context(|| format!("bifunction `{name}`")),
            None => Bifunction::builtin(name).ok_or_else(|| anyhow!("undefined bifunction `{name}`")),
        }
    }

    pub fn region(&self, name: &str) -> Result<Region> {
        let factors = self.cfg.regions.get(name).ok_or_else(|| anyhow!("undefined region `{name}`"))?;
        let factors = factors
            .iter()
            .map(|f| match f {
                FactorDesc::Interval([a, b]) => Ok(FactorRegion::Interval(*a, *b)),
                FactorDesc::Whole(s) if s == "circle" => Ok(FactorRegion::WholeCircle),
                FactorDesc::Whole(s) => Err(anyhow!("unknown region factor `{s}`")),
                FactorDesc::Arc { arc: [start, length] } => Ok(FactorRegion::Arc { start: *start, length: *length }),
            })
            .collect::<Result<Vec<_>>>()?;
        Region::new(&self.manifold, factors).with_context(|| format!("region `{name}`"))
    }

    pub fn set(&self, name: &str) -> Result<SetSpec> {
        let d = self.cfg.sets.get(name).ok_or_else(|| anyhow!("undefined set `{name}`"))?;
        let region = self.region(&d.region)?;
        let constraints = d
            .constraints
            .iter()
            .map(|c| {
                let bound = match &c.bound {
                    BoundDesc::Constant(v) => Bound::Constant(*v),
                    BoundDesc::Level(s) if s == "level" => Bound::Level,
                    BoundDesc::Level(s) => bail!("constraint bound must be a number or \"level\", got `{s}`"),
                };
                Constraint::parse(&self.manifold, &c.expr, bound).with_context(|| format!("set `{name}`"))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut set = SetSpec::new(&self.manifold, &region, constraints);
        if let Some(o) = &d.level_origins {
            set.level_origins = o.clone();
        }
        set.level_span = d.level_span.unwrap_or(DEFAULT_LEVEL_SPAN);
        Ok(set)
    }

    fn functions(&self, names: &[String]) -> Result<Vec<FunctionOnManifold>> {
        names.iter().map(|n| self.function(n)).collect()
    }

    pub fn resolve(&self, kind: &KindDesc) -> Result<Resolved> {
        Ok(match kind {
            KindDesc::Probe { phi, property } => Resolved::Probe {
                phi: self.bifunction(phi)?,
                property: geoconvex::bifunction::Property::from_name(property)
                    .ok_or_else(|| anyhow!("unknown bifunction property `{property}`"))?,
            },
            KindDesc::Witness { of, violation } => match self.resolve(of)? {
                Resolved::Check(spec) => Resolved::Witness { of: spec, violation: violation.clone() },
                _ => bail!("a witness must refer to a check, not a probe or another witness"),
            },
            other => Resolved::Check(self.check_spec(other)?),
        })
    }

    fn check_spec(&self, kind: &KindDesc) -> Result<CheckSpec> {
        let pair = |[a, b]: [f64; 2]| (a, b);
        let inline = |texts: &[String]| -> Result<Vec<Expression>> {
            texts.iter().map(|t| Expression::parse(t).with_context(|| format!("expression `{t}`"))).collect()
        };
        Ok(match kind {
            KindDesc::PhiConvexInterval { f, phi, interval } => CheckSpec::PhiConvexInterval {
                f: self.expression(f)?,
                phi: self.bifunction(phi)?,
                interval: pair(*interval),
            },
            KindDesc::SlopeInequality { f, phi, interval, min_gap } => CheckSpec::SlopeInequality {
                f: self.expression(f)?,
                phi: self.bifunction(phi)?,
                interval: pair(*interval),
                min_gap: *min_gap,
            },
            KindDesc::GeodesicPhiConvex { f, phi, region, strict } => CheckSpec::GeodesicPhiConvex {
                f: self.function(f)?,
                phi: self.bifunction(phi)?,
                region: self.region(region)?,
                strict: *strict,
            },
            KindDesc::GeodesicConvex { f, region } => {
                CheckSpec::GeodesicConvex { f: self.function(f)?, region: self.region(region)? }
            }
            KindDesc::DifferentialCriterion { f, phi, region } => CheckSpec::DifferentialCriterion {
                f: self.function(f)?,
                phi: self.bifunction(phi)?,
                region: self.region(region)?,
            },
            KindDesc::RestrictionEquivalence { f, phi, region } => CheckSpec::RestrictionEquivalence {
                f: self.function(f)?,
                phi: self.bifunction(phi)?,
                region: self.region(region)?,
            },
            KindDesc::MeanValue { f, phi, x1, x2 } => {
                CheckSpec::MeanValue { f: self.expression(f)?, phi: self.bifunction(phi)?, x1: *x1, x2: *x2 }
            }
            KindDesc::ThreePoint { f, phi, points: [x, y, z] } => {
                CheckSpec::ThreePoint { f: self.expression(f)?, phi: self.bifunction(phi)?, points: (*x, *y, *z) }
            }
            KindDesc::Composition { f, g, phi, region, strict } => CheckSpec::Composition {
                f: self.function(f)?,
                g: self.expression(g)?,
                phi: self.bifunction(phi)?,
                region: self.region(region)?,
                strict: *strict,
            },
            KindDesc::WeightedSum { functions, lambdas, phi, region } => CheckSpec::WeightedSum {
                fs: self.functions(functions)?,
                lambdas: lambdas.clone(),
                phi: self.bifunction(phi)?,
                region: self.region(region)?,
            },
            KindDesc::Pushforward { f, phi, forward, inverse, region } => CheckSpec::Pushforward {
                f: self.function(f)?,
                phi: self.bifunction(phi)?,
                forward: inline(forward)?,
                inverse: inline(inverse)?,
                region: self.region(region)?,
            },
            KindDesc::LipschitzBound { f, phi, center, outer, radius, epsilon } => CheckSpec::LipschitzBound {
                f: self.expression(f)?,
                phi: self.bifunction(phi)?,
                center: center.clone(),
                outer: *outer,
                radius: *radius,
                epsilon: *epsilon,
            },
            KindDesc::SupFamily { functions, phi, region } => CheckSpec::SupFamily {
                fs: self.functions(functions)?,
                phi: self.bifunction(phi)?,
                region: self.region(region)?,
            },
            KindDesc::LocalMin { f, phi, x0, region } => CheckSpec::LocalMin {
                f: self.function(f)?,
                phi: self.bifunction(phi)?,
                x0: x0.clone(),
                region: self.region(region)?,
            },
            KindDesc::PhiLimit { f, family, mode, terms, limit, region } => CheckSpec::PhiLimit {
                f: self.function(f)?,
                family: Expression::parse_with_vars(family, &["n", "u", "v"])
                    .with_context(|| format!("family `{family}`"))?,
                mode: *mode,
                terms: *terms,
                limit: self.bifunction(limit)?,
                region: self.region(region)?,
            },
            KindDesc::EndpointDerivatives { f, phi, region } => CheckSpec::EndpointDerivatives {
                f: self.function(f)?,
                phi: self.bifunction(phi)?,
                region: self.region(region)?,
            },
            KindDesc::PhiPreinvex { f, phi, eta, bounds } => CheckSpec::PhiPreinvex {
                f: self.expression(f)?,
                phi: self.bifunction(phi)?,
                eta: inline(eta)?,
                bounds: bounds.iter().map(|b| pair(*b)).collect(),
            },
            KindDesc::GPreinvexComposition { f, g, phi, psi, region } => CheckSpec::GPreinvexComposition {
                f: self.function(f)?,
                g: self.expression(g)?,
                phi: self.bifunction(phi)?,
                psi: self.bifunction(psi)?,
                region: self.region(region)?,
            },
            KindDesc::GeodesicPhiConvexSet { set, phi } => {
                CheckSpec::GeodesicPhiConvexSet { set: self.set(set)?, phi: self.bifunction(phi)? }
            }
            KindDesc::EpigraphCharacterization { f, phi, region } => CheckSpec::EpigraphCharacterization {
                f: self.function(f)?,
                phi: self.bifunction(phi)?,
                region: self.region(region)?,
            },
            KindDesc::IntersectionClosure { sets, phi } => CheckSpec::IntersectionClosure {
                sets: sets.iter().map(|s| self.set(s)).collect::<Result<_>>()?,
                phi: self.bifunction(phi)?,
            },
            KindDesc::SupViaEpigraph { functions, phi, region } => CheckSpec::SupViaEpigraph {
                fs: self.functions(functions)?,
                phi: self.bifunction(phi)?,
                region: self.region(region)?,
            },
            KindDesc::Probe { .. } | KindDesc::Witness { .. } => unreachable!("handled by resolve"),
        })
    }
}

/// Command-line overrides applied on top of the config.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub fd_step: Option<f64>,
    pub samples: PlanOverrides,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).context("malformed config")?;
        let mut seen = std::collections::BTreeSet::new();
        for c in &cfg.checks {
            if !seen.insert(c.name.as_str()) {
                bail!("duplicate check name `{}`", c.name);
            }
        }
        Ok(cfg)
    }

    pub fn seed(&self, o: &Overrides) -> u64 {
        o.seed.unwrap_or(self.seed)
    }

    /// Default plan, then config-wide, per-check and command-line overrides.
    pub fn plan_for(&self, check: Option<&PlanOverrides>, o: &Overrides) -> Result<SamplingPlan> {
        let seed = self.seed(o);
        let mut plan = SamplingPlan::default();
        self.tolerances.apply(&mut plan.tol);
        self.plan.apply(&mut plan, seed);
        if let Some(c) = check {
            c.apply(&mut plan, seed);
        }
        o.samples.apply(&mut plan, seed);
        if let Some(t) = o.tol {
            plan.tol.closed = t;
            plan.tol.strict = t;
        }
        if let Some(s) = o.fd_step {
            plan.tol.fd_step = s;
        }
        plan.validate()?;
        Ok(plan)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"{
        "manifold": "cylinder",
        "functions": {"f": "h1^2", "g": "exp(u)"},
        "regions": {"unit": [[0, 1], "circle"]},
        "checks": [
            {"name": "sq", "kind": "geodesic_phi_convex", "f": "f", "phi": "diff", "region": "unit", "expect": "pass"}
        ]
    }"#;

    #[test]
    fn parses_and_resolves() {
        let cfg = RunConfig::from_json(SMALL).unwrap();
        let scope = Scope::new(&cfg).unwrap();
        assert_eq!(cfg.checks[0].expect, Expectation::Pass);
        assert!(matches!(scope.resolve(&cfg.checks[0].kind).unwrap(), Resolved::Check(CheckSpec::GeodesicPhiConvex { .. })));
        assert!(scope.bifunction("prod").is_ok());
        assert!(scope.bifunction("nope").is_err());
        assert!(scope.region("missing").is_err());
    }

    #[test]
    fn config_round_trips() {
        let cfg = RunConfig::from_json(SMALL).unwrap();
        let again = RunConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(serde_json::to_string(&cfg).unwrap(), serde_json::to_string(&again).unwrap());
    }

    #[test]
    fn unknown_kind_is_rejected() {
        let bad = SMALL.replace("geodesic_phi_convex", "geodesic_wobble");
        assert!(RunConfig::from_json(&bad).is_err());
    }

    #[test]
    fn sample_overrides() {
        let o = PlanOverrides::parse_samples("line=9, t=5,jitter=on,factors=9:4").unwrap();
        let mut plan = SamplingPlan::default();
        o.apply(&mut plan, 7);
        assert_eq!((plan.line_count, plan.t_count, plan.jitter_seed), (9, 5, Some(7)));
        assert_eq!(plan.factor_counts, Some(vec![9, 4]));
        assert!(PlanOverrides::parse_samples("lines=3").is_err());
        assert!(PlanOverrides::parse_samples("line").is_err());
    }

    #[test]
    fn command_line_wins() {
        let cfg = RunConfig::from_json(SMALL).unwrap();
        let o = Overrides { tol: Some(1e-3), samples: PlanOverrides::parse_samples("line=5").unwrap(), ..Default::default() };
        let plan = cfg.plan_for(Some(&PlanOverrides { line_count: Some(9), ..Default::default() }), &o).unwrap();
        assert_eq!(plan.line_count, 5);
        assert_eq!(plan.tol.closed, 1e-3);
    }
}
