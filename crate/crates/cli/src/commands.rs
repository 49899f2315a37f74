//! Subcommand implementations. Every function here either returns a complete
//! report or fails before any check has run.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};

use geoconvex::bifunction::{probe, probe_all, ProbePlan, PROBE_TOLERANCE};
use geoconvex::checker::{falsify, probe_plan, probe_subcheck, CheckReport, SamplingPlan, Status};
use geoconvex::manifold::Geodesic;

use crate::config::{CheckDesc, Expectation, KindDesc, Overrides, Resolved, RunConfig, Scope};
use crate::report::{CheckEntry, RunReport};

/// Reads and parses a config file.
pub fn load(path: &Path) -> Result<(RunConfig, Vec<u8>)> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    let text = std::str::from_utf8(&bytes).context("config is not UTF-8")?;
    Ok((RunConfig::from_json(text)?, bytes))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub falsify: bool,
    pub timings: bool,
}

/// Runs the named descriptors (all when `only` is `None`) in config order.
pub fn run_checks(
    command: &str,
    cfg: &RunConfig,
    bytes: &[u8],
    only: Option<&str>,
    o: &Overrides,
    opts: RunOptions,
) -> Result<RunReport> {
    let scope = Scope::new(cfg)?;
    let selected: Vec<&CheckDesc> = cfg.checks.iter().filter(|c| only.is_none_or(|n| c.name == n)).collect();
    if let Some(n) = only {
        if selected.is_empty() {
            bail!("no check named `{n}`");
        }
    }
    // Resolve everything up front so that a bad name fails before any check runs.
    let mut jobs = Vec::with_capacity(selected.len());
    for c in selected {
        let resolved = scope.resolve(&c.kind).with_context(|| format!("check `{}`", c.name))?;
        let plan = cfg.plan_for(Some(&c.plan), o).with_context(|| format!("check `{}`", c.name))?;
        jobs.push((c, resolved, plan));
    }
    let entries = jobs.into_iter().map(|(c, r, plan)| run_one(c, &r, &plan, opts)).collect();
    Ok(RunReport::new(command, bytes, cfg.seed(o), entries))
}

fn run_one(desc: &CheckDesc, resolved: &Resolved, plan: &SamplingPlan, opts: RunOptions) -> CheckEntry {
    let start = Instant::now();
    let mut entry = CheckEntry {
        name: desc.name.clone(),
        kind: desc.kind.name().to_string(),
        expect: desc.expect,
        matched: false,
        report: None,
        probe: None,
        revalidation: None,
        error: None,
        elapsed_ms: None,
    };
    let outcome: Result<()> = (|| {
        match resolved {
            Resolved::Check(spec) => {
                entry.report = Some(if opts.falsify { falsify(spec, plan)? } else { spec.run(plan)? });
            }
            Resolved::Probe { phi, property } => {
                let p = probe(phi, *property, &probe_plan(plan))?;
                entry.report = Some(probe_subcheck(&p));
                entry.probe = Some(p);
            }
            Resolved::Witness { of, violation } => {
                let r = of.revalidate(violation, plan)?;
                let status = if r.confirmed { Status::Violated } else { Status::PassOnSamples };
                let mut report = CheckReport::new(&format!("witness_{}", of.kind()), status);
                report.samples = 1;
                report.worst_margin = Some(r.margin);
                if r.confirmed {
                    report.violation = Some(violation.clone());
                } else {
                    report.notes.push("witness does not re-evaluate above the tolerance".into());
                }
                entry.report = Some(report);
                entry.revalidation = Some(r);
            }
        }
        Ok(())
    })();
    match outcome {
        Ok(()) => entry.matched = entry.report.as_ref().is_some_and(|r| desc.expect.matches(r.status)),
        Err(e) => entry.error = Some(format!("{e:#}")),
    }
    if opts.timings {
        entry.elapsed_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    entry
}

/// Writes one single-witness config per violated check into `dir` and returns
/// the paths. Command-line overrides are baked in so that each file
/// reproduces the run's tolerances and plan.
pub fn emit_witnesses(cfg: &RunConfig, report: &RunReport, o: &Overrides, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let mut paths = Vec::new();
    for entry in &report.checks {
        let Some(v) = entry.report.as_ref().and_then(|r| r.violation.as_ref()) else { continue };
        let Some(desc) = cfg.checks.iter().find(|c| c.name == entry.name) else { continue };
        if matches!(desc.kind, KindDesc::Probe { .. } | KindDesc::Witness { .. }) {
            continue;
        }
        let mut single = cfg.clone();
        single.seed = cfg.seed(o);
        single.output = Default::default();
        let mut tol = cfg.tolerances.clone();
        if let Some(t) = o.tol {
            tol.closed = Some(t);
            tol.strict = Some(t);
        }
        if let Some(s) = o.fd_step {
            tol.fd_step = Some(s);
        }
        single.tolerances = tol;
        let mut plan = desc.plan.clone();
        merge(&mut plan, &o.samples);
        single.checks = vec![CheckDesc {
            name: format!("{}_witness", desc.name),
            kind: KindDesc::Witness { of: Box::new(desc.kind.clone()), violation: v.clone() },
            expect: Expectation::Violated,
            plan,
        }];
        let path = dir.join(format!("{}.witness.json", desc.name));
        let mut text = serde_json::to_string_pretty(&single)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        paths.push(path);
    }
    Ok(paths)
}

fn merge(into: &mut crate::config::PlanOverrides, from: &crate::config::PlanOverrides) {
    macro_rules! take {
        ($($f:ident),*) => {$(if from.$f.is_some() { into.$f = from.$f.clone(); })*};
    }
    take!(line_count, circle_count, factor_counts, t_count, rounds, zoom, jitter);
}

/// All six property probes of one bifunction.
pub fn run_probe(cfg: Option<(&RunConfig, &[u8])>, phi_name: &str, o: &Overrides) -> Result<RunReport> {
    let empty = RunConfig::from_json("{}")?;
    let (cfg, bytes) = cfg.unwrap_or((&empty, phi_name.as_bytes()));
    let phi = Scope::new(cfg)?.bifunction(phi_name)?;
    let plan = ProbePlan { tolerance: o.tol.unwrap_or(PROBE_TOLERANCE), ..ProbePlan::default() };
    let entries = probe_all(&phi, &plan)?
        .into_iter()
        .map(|p| CheckEntry {
            name: format!("{phi_name}.{}", p.property),
            kind: "probe".into(),
            expect: Expectation::Any,
            matched: true,
            report: Some(probe_subcheck(&p)),
            probe: Some(p),
            revalidation: None,
            error: None,
            elapsed_ms: None,
        })
        .collect();
    Ok(RunReport::new("probe", bytes, cfg.seed(o), entries))
}

/// Inputs of the curve subcommand.
pub struct CurveArgs<'a> {
    pub function: &'a str,
    pub phi: &'a str,
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub t_count: usize,
    pub region: Option<&'a str>,
}

/// CSV rows `t, f(γ(t)), f(x) + tφ(f(y), f(x)), (1−t)f(x) + tf(y)`.
pub fn curve(cfg: &RunConfig, a: &CurveArgs<'_>) -> Result<String> {
    if a.t_count < 2 {
        bail!("t-count must be at least 2");
    }
    let scope = Scope::new(cfg)?;
    let f = scope.function(a.function)?;
    let phi = scope.bifunction(a.phi)?;
    if let Some(name) = a.region {
        let region = scope.region(name)?;
        for (label, p) in [("x", a.x), ("y", a.y)] {
            if p.len() != region.dim() || !region.contains(p) {
                bail!("endpoint {label} = {p:?} is outside region `{name}`");
            }
        }
    }
    let px = scope.manifold.point(a.x).map_err(|e| anyhow!("endpoint x: {e}"))?;
    let py = scope.manifold.point(a.y).map_err(|e| anyhow!("endpoint y: {e}"))?;
    let g = Geodesic::between(&scope.manifold, &px, &py)?;
    let fx = f.eval(px.coords())?;
    let fy = f.eval(py.coords())?;
    let slope = phi.eval(fy, fx)?;
    let mut out = String::from("t,lhs,rhs_phi,rhs_chord\n");
    let n = a.t_count;
    for k in 0..n {
        let t = if k + 1 == n { 1.0 } else { k as f64 / (n - 1) as f64 };
        let lhs = f.eval(g.point(t)?.coords())?;
        let _ = writeln!(out, "{t:.16e},{lhs:.16e},{:.16e},{:.16e}", fx + t * slope, (1.0 - t) * fx + t * fy);
    }
    Ok(out)
}

/// The bundled scenario suite.
pub const AUDIT_SUITE: &str = include_str!("audit_suite.json");

pub fn audit_paper(o: &Overrides, opts: RunOptions) -> Result<RunReport> {
    let cfg = RunConfig::from_json(AUDIT_SUITE).context("bundled suite")?;
    run_checks("audit-paper", &cfg, AUDIT_SUITE.as_bytes(), None, o, opts)
}

/// Parses `a,b,...` into coordinates.
pub fn parse_point(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().with_context(|| format!("bad coordinate `{s}`")))
        .collect()
}
