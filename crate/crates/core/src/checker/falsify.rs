// Grid refinement around the worst sample. Each round re-grids a box of five
// points per coordinate of x, y and t centred on the current best sample; the
// box shrinks by the zoom factor after every round.

use super::basic::{eta_over_pairs, geodesic_problem, interval_problem, invexity_report, over_coordinates, preinvex_problem, Problem};
use super::engine::sweep;
use super::{CheckReport, CheckSpec, SamplingPlan};
use crate::error::Error;
use crate::manifold::Region;

/// Runs the base check, then refines around its worst sample for
/// `plan.rounds` rounds and reports the largest margin found.
///
/// Refinement covers the interval, geodesic, chord and preinvex inequalities;
/// other kinds return their grid report with a note.
pub fn falsify(spec: &CheckSpec, plan: &SamplingPlan) -> Result<CheckReport, Error> {
    match spec {
        CheckSpec::PhiConvexInterval { f, phi, interval } => refine(&interval_problem(f, phi, *interval, plan)?, plan),
        CheckSpec::GeodesicPhiConvex { f, phi, region, strict } => {
            refine(&geodesic_problem(f, Some(phi), region, plan, *strict)?, plan)
        }
        CheckSpec::GeodesicConvex { f, region } => refine(&geodesic_problem(f, None, region, plan, false)?, plan),
        CheckSpec::PhiPreinvex { f, phi, eta, bounds } => {
            let f = over_coordinates(f, bounds.len())?;
            let eta = eta_over_pairs(eta, bounds.len())?;
            let problem = preinvex_problem(&f, phi, &eta, bounds, plan)?;
            let invex = invexity_report(&eta, bounds, &problem.points, &problem.ts, 1e-12)?;
            if !invex.passed() {
                return Ok(CheckReport::hypothesis_failed(problem.id, vec![invex], "K is not invex with respect to η"));
            }
            refine(&problem, plan)
        }
        other => Ok(other.run(plan)?.note("no refinement for this check kind; grid result reported")),
    }
}

fn local_axis(center: f64, half: f64) -> [f64; 5] {
    [center - half, center - half / 2.0, center, center + half / 2.0, center + half]
}

/// Tensor box of five points per coordinate around `center`, clamped to the region.
fn local_points(region: &Region, center: &[f64], half: &[f64]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = vec![Vec::new()];
    for (k, (&c, &h)) in center.iter().zip(half).enumerate() {
        let axis = local_axis(c, h).map(|v| region.clamp_coord(k, v));
        out = out
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    let mut seen: Vec<Vec<f64>> = Vec::with_capacity(out.len());
    for p in out {
        if !seen.contains(&p) {
            seen.push(p);
        }
    }
    seen
}

fn local_ts(center: f64, half: f64) -> Vec<f64> {
    let mut ts: Vec<f64> = Vec::with_capacity(5);
    for t in local_axis(center, half).map(|t| t.clamp(0.0, 1.0)) {
        if !ts.contains(&t) {
            ts.push(t);
        }
    }
    ts
}

fn refine(problem: &Problem<'_>, plan: &SamplingPlan) -> Result<CheckReport, Error> {
    let base = problem.run()?;
    let mut report = base.report(problem.id, &problem.rules);
    let Some(mut best) = base.worst.clone() else {
        return Ok(report);
    };
    let mut history = vec![best.margin];
    let mut half: Vec<f64> =
        (0..problem.region.dim()).map(|k| problem.region.spacing(k, problem.counts[k])).collect();
    let mut half_t = 1.0 / (plan.t_count.max(2) - 1) as f64;
    let mut samples = base.samples;
    for _ in 0..plan.rounds {
        let xs = local_points(&problem.region, &best.x, &half);
        let ys = local_points(&problem.region, &best.y, &half);
        let ts = local_ts(best.t, half_t);
        let out = sweep(&*problem.ineq, &xs, &ys, &ts, &problem.rules)?;
        samples += out.samples;
        if let Some(w) = out.worst.filter(|w| w.margin > best.margin) {
            best = w;
        }
        history.push(best.margin);
        half.iter_mut().for_each(|h| *h /= plan.zoom);
        half_t /= plan.zoom;
    }
    report.samples = samples;
    report.worst_margin = Some(best.margin).filter(|m| m.is_finite());
    if best.margin > problem.rules.threshold {
        report.status = super::Status::Violated;
        report.violation = Some(best.violation());
        report.notes.retain(|n| !n.starts_with("holds on samples"));
    }
    report.margin_history = history;
    report.notes.push(format!("{} refinement rounds with zoom {}", plan.rounds, plan.zoom));
    Ok(report)
}
