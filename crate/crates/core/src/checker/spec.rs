// Check descriptors and witness revalidation. Revalidation deliberately avoids
// the sweep code: it binds variables by name, builds validated `Point`s and a
// fresh `Geodesic`, and evaluates through `Expression::evaluate`.

use serde::{Deserialize, Serialize};

use super::basic::{eta_over_pairs, over_coordinates};
use super::theorems::{coordinate_map, pointwise_max};
use super::*;
use crate::bifunction::Bifunction;
use crate::epigraph::{self, set_excess_independent, SetSpec};
use crate::expr::Binding;
use crate::manifold::Geodesic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitMode {
    Pointwise,
    Series,
}

/// Every check the crate can run, with its inputs.
#[derive(Debug, Clone, PartialEq)]
pub enum CheckSpec {
    PhiConvexInterval { f: Expression, phi: Bifunction, interval: (f64, f64) },
    SlopeInequality { f: Expression, phi: Bifunction, interval: (f64, f64), min_gap: f64 },
    GeodesicPhiConvex { f: FunctionOnManifold, phi: Bifunction, region: Region, strict: bool },
    GeodesicConvex { f: FunctionOnManifold, region: Region },
    DifferentialCriterion { f: FunctionOnManifold, phi: Bifunction, region: Region },
    RestrictionEquivalence { f: FunctionOnManifold, phi: Bifunction, region: Region },
    MeanValue { f: Expression, phi: Bifunction, x1: f64, x2: f64 },
    ThreePoint { f: Expression, phi: Bifunction, points: (f64, f64, f64) },
    Composition { f: FunctionOnManifold, g: Expression, phi: Bifunction, region: Region, strict: bool },
    WeightedSum { fs: Vec<FunctionOnManifold>, lambdas: Vec<f64>, phi: Bifunction, region: Region },
    Pushforward { f: FunctionOnManifold, phi: Bifunction, forward: Vec<Expression>, inverse: Vec<Expression>, region: Region },
    LipschitzBound { f: Expression, phi: Bifunction, center: Vec<f64>, outer: f64, radius: f64, epsilon: f64 },
    SupFamily { fs: Vec<FunctionOnManifold>, phi: Bifunction, region: Region },
    LocalMin { f: FunctionOnManifold, phi: Bifunction, x0: Vec<f64>, region: Region },
    PhiLimit {
        f: FunctionOnManifold,
        family: Expression,
        mode: LimitMode,
        terms: usize,
        limit: Bifunction,
        region: Region,
    },
    EndpointDerivatives { f: FunctionOnManifold, phi: Bifunction, region: Region },
    PhiPreinvex { f: Expression, phi: Bifunction, eta: Vec<Expression>, bounds: Vec<(f64, f64)> },
    GPreinvexComposition { f: FunctionOnManifold, g: Expression, phi: Bifunction, psi: Bifunction, region: Region },
    GeodesicPhiConvexSet { set: SetSpec, phi: Bifunction },
    EpigraphCharacterization { f: FunctionOnManifold, phi: Bifunction, region: Region },
    IntersectionClosure { sets: Vec<SetSpec>, phi: Bifunction },
    SupViaEpigraph { fs: Vec<FunctionOnManifold>, phi: Bifunction, region: Region },
}

/// Outcome of re-evaluating a witness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Revalidation {
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub confirmed: bool,
}

impl CheckSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            CheckSpec::PhiConvexInterval { .. } => "phi_convex_interval",
            CheckSpec::SlopeInequality { .. } => "slope_inequality",
            CheckSpec::GeodesicPhiConvex { .. } => "geodesic_phi_convex",
            CheckSpec::GeodesicConvex { .. } => "geodesic_convex",
            CheckSpec::DifferentialCriterion { .. } => "differential_criterion",
            CheckSpec::RestrictionEquivalence { .. } => "restriction_equivalence",
            CheckSpec::MeanValue { .. } => "mean_value",
            CheckSpec::ThreePoint { .. } => "three_point",
            CheckSpec::Composition { .. } => "composition",
            CheckSpec::WeightedSum { .. } => "weighted_sum",
            CheckSpec::Pushforward { .. } => "pushforward",
            CheckSpec::LipschitzBound { .. } => "lipschitz_bound",
            CheckSpec::SupFamily { .. } => "sup_family",
            CheckSpec::LocalMin { .. } => "local_min",
            CheckSpec::PhiLimit { .. } => "phi_limit",
            CheckSpec::EndpointDerivatives { .. } => "endpoint_derivatives",
            CheckSpec::PhiPreinvex { .. } => "phi_preinvex",
            CheckSpec::GPreinvexComposition { .. } => "g_preinvex_composition",
            CheckSpec::GeodesicPhiConvexSet { .. } => "geodesic_phi_convex_set",
            CheckSpec::EpigraphCharacterization { .. } => "epigraph_characterization",
            CheckSpec::IntersectionClosure { .. } => "intersection_closure",
            CheckSpec::SupViaEpigraph { .. } => "sup_via_epigraph",
        }
    }

    pub fn run(&self, plan: &SamplingPlan) -> Result<CheckReport, Error> {
        match self {
            CheckSpec::PhiConvexInterval { f, phi, interval } => check_phi_convex_interval(f, phi, *interval, plan),
            CheckSpec::SlopeInequality { f, phi, interval, min_gap } => {
                check_slope_inequality(f, phi, *interval, *min_gap, plan)
            }
            CheckSpec::GeodesicPhiConvex { f, phi, region, strict } => {
                check_geodesic_phi_convex(f, phi, region, plan, *strict)
            }
            CheckSpec::GeodesicConvex { f, region } => check_geodesic_convex(f, region, plan),
            CheckSpec::DifferentialCriterion { f, phi, region } => check_differential_criterion(f, phi, region, plan),
            CheckSpec::RestrictionEquivalence { f, phi, region } => {
                verify_restriction_equivalence(f, phi, region, plan)
            }
            CheckSpec::MeanValue { f, phi, x1, x2 } => audit_mean_value(f, phi, *x1, *x2, plan),
            CheckSpec::ThreePoint { f, phi, points } => audit_three_point(f, phi, *points, plan),
            CheckSpec::Composition { f, g, phi, region, strict } => check_composition(f, g, phi, region, plan, *strict),
            CheckSpec::WeightedSum { fs, lambdas, phi, region } => check_weighted_sum(fs, lambdas, phi, region, plan),
            CheckSpec::Pushforward { f, phi, forward, inverse, region } => {
                check_pushforward(f, phi, forward, inverse, region, plan)
            }
            CheckSpec::LipschitzBound { f, phi, center, outer, radius, epsilon } => {
                check_lipschitz_bound(f, phi, center, *outer, *radius, *epsilon, plan)
            }
            CheckSpec::SupFamily { fs, phi, region } => check_sup_family(fs, phi, region, plan),
            CheckSpec::LocalMin { f, phi, x0, region } => check_local_min_criterion(f, phi, x0, region, plan),
            CheckSpec::PhiLimit { f, family, mode, terms, limit, region } => {
                check_phi_limit(f, family, *mode, *terms, limit, region, plan)
            }
            CheckSpec::EndpointDerivatives { f, phi, region } => audit_endpoint_derivatives(f, phi, region, plan),
            CheckSpec::PhiPreinvex { f, phi, eta, bounds } => check_phi_preinvex(f, phi, eta, bounds, plan),
            CheckSpec::GPreinvexComposition { f, g, phi, psi, region } => {
                check_g_preinvex_composition(f, g, phi, psi, region, plan)
            }
            CheckSpec::GeodesicPhiConvexSet { set, phi } => epigraph::check_geodesic_phi_convex_set(set, phi, plan),
            CheckSpec::EpigraphCharacterization { f, phi, region } => {
                epigraph::verify_epigraph_characterization(f, phi, region, plan)
            }
            CheckSpec::IntersectionClosure { sets, phi } => epigraph::check_intersection_closure(sets, phi, plan),
            CheckSpec::SupViaEpigraph { fs, phi, region } => epigraph::sup_via_epigraph(fs, phi, region, plan),
        }
    }

    /// Re-evaluates a reported violation through an independent path and
    /// confirms that its margin still exceeds the tolerance.
    pub fn revalidate(&self, v: &Violation, plan: &SamplingPlan) -> Result<Revalidation, Error> {
        let tol = &plan.tol;
        let closed = |lhs: f64, rhs: f64| finish(lhs, rhs, tol.closed);
        match self {
            CheckSpec::PhiConvexInterval { f, phi, .. } => {
                let (a, b, t) = (v.x[0], v.y[0], v.t);
                let (fa, fb) = (scalar(f, a)?, scalar(f, b)?);
                Ok(closed(scalar(f, t * a + (1.0 - t) * b)?, fb + t * phi_at(phi, fa, fb)?))
            }
            CheckSpec::SlopeInequality { f, phi, .. } => {
                let (x1, x2) = (v.x[0], v.y[0]);
                let m = x1 + v.t * (x2 - x1);
                let (f1, f2) = (scalar(f, x1)?, scalar(f, x2)?);
                Ok(closed(phi_at(phi, f1, f2)? / (x1 - x2), (f2 - scalar(f, m)?) / (x2 - m)))
            }
            CheckSpec::GeodesicPhiConvex { f, phi, strict, .. } => {
                let (lhs, rhs) = geodesic_form(f, Some(phi), v)?;
                let mut r = closed(lhs, rhs);
                if *strict && !r.confirmed {
                    r.confirmed = r.margin >= -tol.strict && v.t > 0.0 && v.t < 1.0 && v.x != v.y;
                }
                Ok(r)
            }
            CheckSpec::GeodesicConvex { f, .. } => {
                let (lhs, rhs) = geodesic_form(f, None, v)?;
                Ok(closed(lhs, rhs))
            }
            CheckSpec::RestrictionEquivalence { f, phi, .. } => {
                let (lhs, rhs) = geodesic_form(f, Some(phi), v)?;
                Ok(closed(lhs, rhs))
            }
            CheckSpec::DifferentialCriterion { f, phi, .. } => {
                let (px, py) = points(f, v)?;
                let vel = Geodesic::between(f.manifold(), &px, &py)?.velocity(0.0)?;
                let d = gradient_along(f, px.coords(), &vel, tol.fd_step)?;
                let rhs = phi_at(phi, eval_named(f, py.coords())?, eval_named(f, px.coords())?)?;
                Ok(finish(d, rhs, tol.fd))
            }
            CheckSpec::EndpointDerivatives { f, .. } => {
                let (px, py) = points(f, v)?;
                let vel = Geodesic::between(f.manifold(), &px, &py)?.velocity(0.0)?;
                let d0 = gradient_along(f, px.coords(), &vel, tol.fd_step)?;
                let d1 = gradient_along(f, py.coords(), &vel, tol.fd_step)?;
                Ok(finish(-(d0 - d1).abs(), -tol.fd, 0.0))
            }
            CheckSpec::MeanValue { .. } => Err(Error::invalid("an existence audit has no violations to revalidate")),
            CheckSpec::ThreePoint { f, phi, points } => {
                let (x, y, z) = *points;
                let name = f.vars().first().cloned().unwrap_or_else(|| "x".to_string());
                let at = |p: f64| Binding::new().with(&name, p);
                let d = |p: f64| -> Result<f64, Error> {
                    if f.vars().is_empty() {
                        return Ok(0.0);
                    }
                    Ok(f.derivative_fd(&name, &at(p), tol.fd_step)?)
                };
                let (fx, fy, fz) = (scalar(f, x)?, scalar(f, y)?, scalar(f, z)?);
                let lhs = d(y)? * (x - y) + d(z)? * (y - z);
                Ok(finish(lhs, phi_at(phi, fx, fy)? + phi_at(phi, fy, fz)?, tol.fd))
            }
            CheckSpec::Composition { f, g, phi, .. } => {
                let e = g.compose(f.expression()).map_err(Error::invalid)?;
                let gf = FunctionOnManifold::from_expression(f.manifold(), &e)?;
                let (lhs, rhs) = geodesic_form(&gf, Some(phi), v)?;
                Ok(closed(lhs, rhs))
            }
            CheckSpec::WeightedSum { fs, lambdas, phi, .. } => {
                let names = fs[0].manifold().coordinate_names();
                let terms: Vec<(f64, &Expression)> = lambdas.iter().copied().zip(fs.iter().map(|f| f.expression())).collect();
                let sum = FunctionOnManifold::from_expression(fs[0].manifold(), &Expression::weighted_sum(&terms, &names))?;
                let (lhs, rhs) = geodesic_form(&sum, Some(phi), v)?;
                Ok(closed(lhs, rhs))
            }
            CheckSpec::SupFamily { fs, phi, .. } | CheckSpec::SupViaEpigraph { fs, phi, .. } => {
                let (lhs, rhs) = geodesic_form(&pointwise_max(fs)?, Some(phi), v)?;
                Ok(closed(lhs, rhs))
            }
            CheckSpec::PhiLimit { f, limit, .. } => {
                let (lhs, rhs) = geodesic_form(f, Some(limit), v)?;
                Ok(closed(lhs, rhs))
            }
            CheckSpec::GPreinvexComposition { f, g, psi, .. } => {
                let e = g.compose(f.expression()).map_err(Error::invalid)?;
                let gf = FunctionOnManifold::from_expression(f.manifold(), &e)?;
                let (lhs, rhs) = geodesic_form(&gf, Some(psi), v)?;
                Ok(closed(lhs, rhs))
            }
            CheckSpec::LocalMin { f, phi, .. } => {
                let (px, p0) = points(f, v)?;
                let rhs = phi_at(phi, eval_named(f, px.coords())?, eval_named(f, p0.coords())?)?;
                Ok(closed(0.0, rhs))
            }
            CheckSpec::Pushforward { f, phi, forward, inverse, .. } => {
                let forward = coordinate_map(f, forward)?;
                let inverse = coordinate_map(f, inverse)?;
                let spec = f.manifold();
                let names = spec.coordinate_names();
                let map = |m: &[Expression], p: &[f64]| -> Result<Vec<f64>, Error> {
                    let b = bind(&names, p);
                    Ok(m.iter().map(|e| e.evaluate(&b)).collect::<Result<Vec<_>, _>>()?)
                };
                let pulled = |q: &[f64]| -> Result<f64, Error> {
                    let back = spec.point(&map(&inverse, q)?)?;
                    eval_named(f, back.coords())
                };
                let (px, py) = points(f, v)?;
                let hx = pulled(&map(&forward, px.coords())?)?;
                let hy = pulled(&map(&forward, py.coords())?)?;
                let p = Geodesic::between(spec, &px, &py)?.point(v.t)?;
                let lhs = pulled(&map(&forward, p.coords())?)?;
                Ok(closed(lhs, hx + v.t * phi_at(phi, hy, hx)?))
            }
            CheckSpec::LipschitzBound { f, phi, center, outer, epsilon, .. } => {
                let f = over_coordinates(f, center.len())?;
                let names = f.vars().to_vec();
                let fv = |p: &[f64]| -> Result<f64, Error> { Ok(f.evaluate(&bind(&names, p))?) };
                // M_φ over f(B), recomputed on the same ball grid by name.
                let axis = super::uniform(-outer, *outer, plan.line_count);
                let mut vals = Vec::new();
                let mut idx = vec![0usize; center.len()];
                'grid: loop {
                    let off: Vec<f64> = idx.iter().map(|&k| axis[k]).collect();
                    if off.iter().map(|o| o * o).sum::<f64>().sqrt() <= outer * (1.0 + 1e-12) {
                        let p: Vec<f64> = center.iter().zip(&off).map(|(c, o)| c + o).collect();
                        vals.push(fv(&p)?);
                    }
                    for k in (0..idx.len()).rev() {
                        idx[k] += 1;
                        if idx[k] < axis.len() {
                            continue 'grid;
                        }
                        idx[k] = 0;
                    }
                    break;
                }
                let mut m_phi = f64::NEG_INFINITY;
                for &u in &vals {
                    for &w in &vals {
                        m_phi = m_phi.max(phi_at(phi, u, w)?);
                    }
                }
                let dist = v.x.iter().zip(&v.y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                Ok(closed((fv(&v.x)? - fv(&v.y)?).abs(), m_phi / epsilon * dist))
            }
            CheckSpec::PhiPreinvex { f, phi, eta, bounds } => {
                let n = bounds.len();
                let f = over_coordinates(f, n)?;
                let eta = eta_over_pairs(eta, n)?;
                let fnames = f.vars().to_vec();
                let pair: Binding = (1..=n)
                    .map(|i| (format!("x{i}"), v.x[i - 1]))
                    .chain((1..=n).map(|i| (format!("y{i}"), v.y[i - 1])))
                    .collect();
                let e = eta.iter().map(|c| c.evaluate(&pair)).collect::<Result<Vec<_>, _>>()?;
                let p: Vec<f64> = v.y.iter().zip(&e).map(|(y, d)| y + v.t * d).collect();
                let fx = f.evaluate(&bind(&fnames, &v.x))?;
                let fy = f.evaluate(&bind(&fnames, &v.y))?;
                Ok(closed(f.evaluate(&bind(&fnames, &p))?, fy + v.t * phi_at(phi, fx, fy)?))
            }
            CheckSpec::GeodesicPhiConvexSet { set, phi } => set_form(set, phi, v, tol.closed),
            CheckSpec::IntersectionClosure { sets, phi } => set_form(&SetSpec::intersection(sets)?, phi, v, tol.closed),
            CheckSpec::EpigraphCharacterization { f, phi, region } => {
                if v.x.len() == f.manifold().dim() + 1 {
                    set_form(&SetSpec::epigraph(f, region)?, phi, v, tol.closed)
                } else {
                    let (lhs, rhs) = geodesic_form(f, Some(phi), v)?;
                    Ok(closed(lhs, rhs))
                }
            }
        }
    }
}

fn finish(lhs: f64, rhs: f64, tol: f64) -> Revalidation {
    let margin = lhs - rhs;
    Revalidation { lhs, rhs, margin, confirmed: margin > tol }
}

fn bind(names: &[String], coords: &[f64]) -> Binding {
    names.iter().map(String::as_str).zip(coords.iter().copied()).collect()
}

fn scalar(f: &Expression, x: f64) -> Result<f64, Error> {
    let b: Binding = f.vars().iter().map(|n| (n.as_str(), x)).collect();
    Ok(f.evaluate(&b)?)
}

fn phi_at(phi: &Bifunction, u: f64, v: f64) -> Result<f64, Error> {
    Ok(phi.expression().evaluate(&Binding::new().with("u", u).with("v", v))?)
}

fn eval_named(f: &FunctionOnManifold, coords: &[f64]) -> Result<f64, Error> {
    Ok(f.expression().evaluate(&bind(&f.manifold().coordinate_names(), coords))?)
}

fn points(f: &FunctionOnManifold, v: &Violation) -> Result<(crate::manifold::Point, crate::manifold::Point), Error> {
    Ok((f.manifold().point(&v.x)?, f.manifold().point(&v.y)?))
}

/// `(f(γ(t)), f(x) + tφ(f(y), f(x)))`, or the chord bound when `phi` is `None`.
fn geodesic_form(f: &FunctionOnManifold, phi: Option<&Bifunction>, v: &Violation) -> Result<(f64, f64), Error> {
    let (px, py) = points(f, v)?;
    let g = Geodesic::between(f.manifold(), &px, &py)?;
    let lhs = eval_named(f, g.point(v.t)?.coords())?;
    let fx = eval_named(f, px.coords())?;
    let fy = eval_named(f, py.coords())?;
    let rhs = match phi {
        Some(phi) => fx + v.t * phi_at(phi, fy, fx)?,
        None => (1.0 - v.t) * fx + v.t * fy,
    };
    Ok((lhs, rhs))
}

/// Directional derivative `∇f(p)·vel` from coordinate-wise central differences.
fn gradient_along(f: &FunctionOnManifold, p: &[f64], vel: &[f64], step: f64) -> Result<f64, Error> {
    let names = f.manifold().coordinate_names();
    let b = bind(&names, p);
    let mut d = 0.0;
    for (name, &c) in names.iter().zip(vel) {
        if c != 0.0 {
            d += c * f.expression().derivative_fd(name, &b, step)?;
        }
    }
    Ok(d)
}

fn set_form(set: &SetSpec, phi: &Bifunction, v: &Violation, tol: f64) -> Result<Revalidation, Error> {
    let (at, rhs, ends) = set_excess_independent(set, phi, v)?;
    let mut r = finish(at, rhs, tol);
    // Both endpoints must be members for the displacement to count.
    r.confirmed &= ends <= tol;
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::ManifoldSpec;

    #[test]
    fn reported_witnesses_revalidate() {
        let cyl = ManifoldSpec::cylinder();
        let plan = SamplingPlan { line_count: 13, circle_count: 4, ..SamplingPlan::default() };
        let f = FunctionOnManifold::parse(&cyl, "h1^3").unwrap();
        let region = Region::boxed(&cyl, &[(-3.0, 3.0)]).unwrap();
        let specs = [
            CheckSpec::GeodesicPhiConvex { f: f.clone(), phi: Bifunction::diff(), region: region.clone(), strict: false },
            CheckSpec::GeodesicConvex { f: f.clone(), region: region.clone() },
            CheckSpec::DifferentialCriterion { f: f.clone(), phi: Bifunction::diff(), region: region.clone() },
            CheckSpec::GeodesicPhiConvexSet { set: SetSpec::epigraph(&f, &region).unwrap(), phi: Bifunction::diff() },
        ];
        for spec in &specs {
            let r = spec.run(&plan).unwrap();
            let v = r.violation.as_ref().unwrap_or_else(|| panic!("{} should be violated", spec.kind()));
            let again = spec.revalidate(v, &plan).unwrap();
            assert!(again.confirmed, "{}", spec.kind());
            assert!((again.lhs - v.lhs).abs() <= 1e-9 * v.lhs.abs().max(1.0), "{}", spec.kind());
        }
    }
}
