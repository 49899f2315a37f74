//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::time::{Duration, Instant};

use geoconvex::bifunction::{probe, sequence_bound, Bifunction, Property, ProbePlan};
use geoconvex::checker::{
    audit_three_point, check_geodesic_convex, check_geodesic_phi_convex, check_lipschitz_bound,
    check_local_min_criterion, falsify, verify_restriction_equivalence, CheckSpec, FunctionOnManifold, SamplingPlan,
    Status,
};
use geoconvex::epigraph::{epigraph_identity_mismatches, verify_epigraph_characterization};
use geoconvex::expr::Expression;
use geoconvex::manifold::{ManifoldSpec, Region};
use geoconvex_cli::commands::{audit_paper, RunOptions, AUDIT_SUITE};
use geoconvex_cli::config::{Overrides, Resolved, RunConfig, Scope};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn cyl(text: &str) -> FunctionOnManifold {
    FunctionOnManifold::parse(&ManifoldSpec::cylinder(), text).unwrap()
}

fn cyl_box(a: f64, b: f64) -> Region {
    Region::boxed(&ManifoldSpec::cylinder(), &[(a, b)]).unwrap()
}

fn bf(name: &str) -> Bifunction {
    Bifunction::builtin(name).unwrap()
}

fn ensure(ok: bool, msg: String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg)
    }
}

/// Helix example: violated on the full cylinder with a refined witness near
/// (−2, −1, 1/2), clean on the upper half.
fn criterion_1() -> Outcome {
    let plan = SamplingPlan::default();
    let start = Instant::now();
    let full = CheckSpec::GeodesicPhiConvex { f: cyl("h1^3"), phi: bf("diff"), region: cyl_box(-3.0, 3.0), strict: false };
    let base = full.run(&plan).map_err(|e| e.to_string())?;
    let refined = falsify(&full, &plan).map_err(|e| e.to_string())?;
    let upper = check_geodesic_phi_convex(&cyl("h1^3"), &bf("diff"), &cyl_box(0.0, 3.0), &plan, false)
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let v = refined.violation.clone().ok_or("falsify found no violation")?;
    // The same geodesic read backwards is (y, x, 1 − t).
    let dist = |x: f64, y: f64, t: f64| (v.x[0] - x).abs().max((v.y[0] - y).abs()).max((v.t - t).abs());
    let near = dist(-2.0, -1.0, 0.5).min(dist(-1.0, -2.0, 0.5));
    let upper_margin = upper.worst_margin.unwrap_or(f64::INFINITY);
    let detail = format!(
        "full: {}, refined margin {:.4} at x={:?} y={:?} t={:.4} (distance {:.3} from (-2,-1,0.5)); upper: {} with worst margin {:.1e}; {:.2} s",
        base.status,
        v.margin,
        v.x,
        v.y,
        v.t,
        near,
        upper.status,
        upper_margin,
        elapsed.as_secs_f64()
    );
    let ok = base.status == Status::Violated
        && v.margin >= 1.125
        && near <= 0.1
        && upper.status == Status::PassOnSamples
        && upper_margin <= 1e-9
        && elapsed < Duration::from_secs(2);
    ensure(ok, detail.clone())?;
    Ok(detail)
}

fn criterion_2() -> Outcome {
    let plan = SamplingPlan::default();
    let catalog = ["h1^2", "h1^3", "h1^4", "exp(h1)", "h1^2 + sin(th1)", "cos(th1)", "abs(h1)"];
    let mut worst: f64 = 0.0;
    for text in catalog {
        let f = cyl(text);
        let r = cyl_box(-2.0, 2.0);
        let a = check_geodesic_phi_convex(&f, &bf("diff"), &r, &plan, false).map_err(|e| e.to_string())?;
        let b = check_geodesic_convex(&f, &r, &plan).map_err(|e| e.to_string())?;
        ensure(a.status == b.status, format!("{text}: {} vs {}", a.status, b.status))?;
        let (ma, mb) = (a.worst_margin.ok_or("no margin")?, b.worst_margin.ok_or("no margin")?);
        worst = worst.max((ma - mb).abs());
    }
    ensure(worst <= 1e-12, format!("largest margin difference {worst:e}"))?;
    Ok(format!("{} functions agree; largest margin difference {worst:e}", catalog.len()))
}

fn criterion_3() -> Outcome {
    let plan = SamplingPlan::default();
    let mut parts = Vec::new();
    for (text, expect_violated) in [("h1^2", false), ("h1^3", true)] {
        let r = verify_restriction_equivalence(&cyl(text), &bf("diff"), &cyl_box(-3.0, 3.0), &plan)
            .map_err(|e| e.to_string())?;
        let pairs = r.metrics["pairs_compared"];
        let dis = r.metrics["disagreements"];
        let both_bad = r.metrics["pairs_both_violated"];
        ensure(
            pairs >= 1000.0 && dis == 0.0 && (both_bad > 0.0) == expect_violated,
            format!("{text}: {pairs} pairs, {dis} disagreements, {both_bad} violated on both sides"),
        )?;
        parts.push(format!("{text}: {pairs} pairs, {dis} disagreements"));
    }
    Ok(parts.join("; "))
}

fn criterion_4() -> Outcome {
    let plan = SamplingPlan::default();
    let two_u_plus_v = Bifunction::parse("2u_plus_v", "2*u + v").unwrap();
    let scenarios: Vec<(&str, Bifunction, Region)> = vec![
        ("h1^2", bf("sum"), cyl_box(-1.0, 1.0)),
        ("h1^3", bf("sum"), cyl_box(-3.0, 3.0)),
        ("exp(h1)", bf("sum"), cyl_box(-1.0, 1.0)),
        ("h1^2 + cos(th1)", two_u_plus_v, cyl_box(-1.0, 1.0)),
    ];
    let mut violated = 0;
    for (text, phi, region) in &scenarios {
        let r = verify_epigraph_characterization(&cyl(text), phi, region, &plan).map_err(|e| e.to_string())?;
        let (fv, sv) = (r.metrics.get("function_violated"), r.metrics.get("set_violated"));
        ensure(
            r.status == Status::PassOnSamples && fv.is_some() && fv == sv,
            format!("{text}: {} (function {fv:?}, set {sv:?})", r.status),
        )?;
        if fv == Some(&1.0) {
            violated += 1;
        }
    }
    ensure(violated >= 1, "no violated scenario".into())?;
    let fs = [cyl("h1^2"), cyl("h1^3"), cyl("cos(th1)")];
    let (checked, mismatched) = epigraph_identity_mismatches(&fs, &cyl_box(-2.0, 2.0), &plan).map_err(|e| e.to_string())?;
    ensure(mismatched == 0 && checked > 0, format!("{mismatched} of {checked} product points differ"))?;
    Ok(format!(
        "{} scenarios agree ({violated} violated); identity holds at {checked} product points",
        scenarios.len()
    ))
}

fn criterion_5() -> Outcome {
    let f = Expression::parse("x^2").unwrap();
    let r = audit_three_point(&f, &bf("diff"), (0.0, 1.0, 2.0), &SamplingPlan::default()).map_err(|e| e.to_string())?;
    let m = &r.metrics;
    let close = |k: &str, v: f64| (m[k] - v).abs() <= 1e-9;
    let ok = close("i_lhs", -6.0)
        && close("i_rhs", -4.0)
        && m["i_lhs"] <= m["i_rhs"]
        && close("ii_lhs", 6.0)
        && close("ii_rhs", 2.0)
        && m["ii_holds"] == 0.0
        && m["iii_holds"] == 1.0;
    let detail = format!(
        "intermediate {:.9} <= {:.9}; displayed {:.9} <= {:.9} reported violated; corrected form holds",
        m["i_lhs"], m["i_rhs"], m["ii_lhs"], m["ii_rhs"]
    );
    ensure(ok, detail.clone())?;
    Ok(detail)
}

fn criterion_6() -> Outcome {
    let f = Expression::parse("x^2").unwrap();
    let r = check_lipschitz_bound(&f, &bf("diff"), &[0.0], 1.0, 0.5, 0.25, &SamplingPlan::default())
        .map_err(|e| e.to_string())?;
    let (k, q, pairs) = (r.metrics["k"], r.metrics["max_quotient"], r.metrics["pairs"]);
    let detail = format!("K = {k}, max quotient {q}, {pairs} pairs, {}", r.status);
    ensure((k - 4.0).abs() <= 1e-12 && q <= 1.0 + 1e-9 && pairs >= 500.0 && r.passed(), detail.clone())?;
    Ok(detail)
}

fn criterion_7() -> Outcome {
    let plan = ProbePlan::default();
    let holds = |phi: &str, p: Property| probe(&bf(phi), p, &plan).map(|r| r.holds()).map_err(|e| e.to_string());
    ensure(holds("diff", Property::NonnegLinear)?, "diff should be nonnegatively linear".into())?;
    ensure(holds("diff", Property::Antisymmetric)?, "diff should be antisymmetric".into())?;
    ensure(!holds("diff", Property::Nondecreasing)?, "diff should not be non-decreasing".into())?;
    ensure(holds("sum", Property::Nondecreasing)?, "sum should be non-decreasing".into())?;
    ensure(holds("sum", Property::SeqUpperBounded)?, "sum should be sequentially upper bounded".into())?;
    let prod = probe(&bf("prod"), Property::SeqUpperBounded, &plan).map_err(|e| e.to_string())?;
    ensure(!prod.holds() && prod.witness.is_some(), "prod probe should report a sequence witness".into())?;
    let mut seq = vec![-1.0; plan.sequence_len];
    seq[0] = -2.0;
    let (sup, bound) = sequence_bound(&bf("prod"), &seq, &seq).map_err(|e| e.to_string())?;
    ensure(sup == 4.0 && bound == 1.0, format!("(-2,-1,-1,...) gives {sup} vs {bound}"))?;
    Ok(format!("probe verdicts as expected; prod on (-2,-1,-1,...): {sup} > {bound}"))
}

fn criterion_8() -> Outcome {
    let plan = SamplingPlan::default();
    let f = cyl("h1^2");
    let region = cyl_box(-1.0, 1.0);
    let mut lowest = f64::INFINITY;
    for phi in ["diff", "sum"] {
        let r = check_local_min_criterion(&f, &bf(phi), &[0.0, 0.0], &region, &plan).map_err(|e| e.to_string())?;
        ensure(r.passed(), format!("{phi}: {}", r.status))?;
        // Independent sweep of φ(f(x), f(x₀)) over the endpoint grid.
        for k in 0..plan.line_count {
            let h = -1.0 + 2.0 * k as f64 / (plan.line_count - 1) as f64;
            for j in 0..plan.circle_count {
                let th = std::f64::consts::TAU * j as f64 / plan.circle_count as f64;
                let v = bf(phi).eval(f.eval(&[h, th]).unwrap(), 0.0).unwrap();
                lowest = lowest.min(v);
            }
        }
    }
    ensure(lowest >= -1e-9, format!("smallest phi(f(x), f(x0)) = {lowest}"))?;
    Ok(format!("diff and sum pass; smallest phi(f(x), f(x0)) = {lowest}"))
}

fn criterion_9() -> Outcome {
    let cfg = RunConfig::from_json(AUDIT_SUITE).map_err(|e| e.to_string())?;
    let scope = Scope::new(&cfg).map_err(|e| e.to_string())?;
    let report = audit_paper(&Overrides::default(), RunOptions::default()).map_err(|e| e.to_string())?;
    let plan = SamplingPlan::default();
    let (mut total, mut confirmed) = (0, 0);
    for (desc, entry) in cfg.checks.iter().zip(&report.checks) {
        let Some(v) = entry.report.as_ref().and_then(|r| r.violation.as_ref()) else { continue };
        total += 1;
        match scope.resolve(&desc.kind).map_err(|e| e.to_string())? {
            Resolved::Check(spec) => {
                let r = spec.revalidate(v, &plan).map_err(|e| e.to_string())?;
                if r.confirmed && r.margin > plan.tol.closed {
                    confirmed += 1;
                }
            }
            Resolved::Probe { phi, .. } => {
                let w = entry.probe.as_ref().and_then(|p| p.witness.as_ref()).ok_or("probe without witness")?;
                if w.recheck(&phi).map_err(|e| e.to_string())? > plan.tol.closed {
                    confirmed += 1;
                }
            }
            Resolved::Witness { .. } => {}
        }
    }
    // Catalog checks outside the suite, one per inequality family.
    let e = |t: &str| Expression::parse(t).unwrap();
    let extra = [
        CheckSpec::PhiConvexInterval { f: e("x^3"), phi: bf("diff"), interval: (-2.0, 0.0) },
        CheckSpec::SlopeInequality { f: e("x^3"), phi: bf("diff"), interval: (-2.0, 0.0), min_gap: 0.0 },
        CheckSpec::GeodesicConvex { f: cyl("h1^3"), region: cyl_box(-3.0, 3.0) },
        CheckSpec::DifferentialCriterion { f: cyl("h1^3"), phi: bf("diff"), region: cyl_box(-3.0, 3.0) },
        CheckSpec::PhiPreinvex { f: e("x^3"), phi: bf("diff"), eta: vec![e("x - y")], bounds: vec![(-2.0, 0.0)] },
    ];
    for spec in &extra {
        for r in [spec.run(&plan), falsify(spec, &plan)] {
            let r = r.map_err(|e| e.to_string())?;
            if let Some(v) = &r.violation {
                total += 1;
                let again = spec.revalidate(v, &plan).map_err(|e| e.to_string())?;
                if again.confirmed && again.margin > plan.tol.closed {
                    confirmed += 1;
                }
            }
        }
    }
    ensure(total > 0 && confirmed == total, format!("{confirmed} of {total} witnesses confirmed"))?;
    Ok(format!("{confirmed} of {total} witnesses re-evaluate above the tolerance"))
}

fn criterion_10() -> Outcome {
    let start = Instant::now();
    let a = audit_paper(&Overrides::default(), RunOptions::default()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let b = audit_paper(&Overrides::default(), RunOptions::default()).map_err(|e| e.to_string())?;
    let (ja, jb) = (a.to_json(), b.to_json());
    ensure(ja == jb, "reports differ between runs".into())?;
    ensure(a.exit_code() == 0, "suite expectations not matched".into())?;
    ensure(elapsed < Duration::from_secs(30), format!("suite took {:.1} s", elapsed.as_secs_f64()))?;
    Ok(format!("{} byte-identical report bytes; suite ran in {:.1} s", ja.len(), elapsed.as_secs_f64()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("helix example on the cylinder", criterion_1),
        ("classical reduction", criterion_2),
        ("restriction equivalence", criterion_3),
        ("epigraph characterization", criterion_4),
        ("three-point audit", criterion_5),
        ("Lipschitz bound", criterion_6),
        ("bifunction probes", criterion_7),
        ("local-minimum criterion", criterion_8),
        ("witness soundness", criterion_9),
        ("determinism and suite runtime", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS criterion {} ({name}): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
