// Generic pair sweep shared by every inequality check. Rows are evaluated in
// parallel per `x`; partial outcomes are merged in input order, and the worst
// sample is chosen by margin with a lexicographic tie-break, so the result does
// not depend on scheduling.

use std::cmp::Ordering;

use rayon::prelude::*;

use super::{CheckReport, Status, Violation};
use crate::error::Error;

/// Result of one `(x, y, t)` sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum RowValue {
    Value(f64, f64),
    /// Outside the inequality's domain (e.g. an unordered triple).
    Skip,
    /// The sample could not be evaluated reliably.
    Inconclusive,
}

pub(crate) trait PairInequality: Sync {
    /// Fills `out` with one entry per `t`.
    fn row(&self, x: &[f64], y: &[f64], ts: &[f64], out: &mut Vec<RowValue>) -> Result<(), Error>;
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct SweepRules {
    /// Violation when `margin > threshold`.
    pub threshold: f64,
    /// Strict mode: interior samples with `x ≠ y` need `margin < −strict`.
    pub strict: Option<f64>,
    /// Drop `x = y` pairs entirely instead of applying the pathology rule.
    pub skip_degenerate: bool,
}

impl SweepRules {
    pub fn closed(threshold: f64) -> Self {
        SweepRules { threshold, strict: None, skip_degenerate: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Sample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

impl Sample {
    fn key_cmp(&self, other: &Sample) -> Ordering {
        lex(&self.x, &other.x).then_with(|| lex(&self.y, &other.y)).then_with(|| self.t.total_cmp(&other.t))
    }

    /// Larger margin wins; ties go to the lexicographically smaller sample.
    pub fn beats(&self, other: &Sample) -> bool {
        match self.margin.total_cmp(&other.margin) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => self.key_cmp(other) == Ordering::Less,
        }
    }

    pub fn violation(&self) -> Violation {
        Violation { x: self.x.clone(), y: self.y.clone(), t: self.t, lhs: self.lhs, rhs: self.rhs, margin: self.margin }
    }
}

fn lex(a: &[f64], b: &[f64]) -> Ordering {
    a.iter().zip(b).map(|(p, q)| p.total_cmp(q)).find(|o| o.is_ne()).unwrap_or_else(|| a.len().cmp(&b.len()))
}

fn keep_best(slot: &mut Option<Sample>, cand: Sample) {
    if slot.as_ref().is_none_or(|cur| cand.beats(cur)) {
        *slot = Some(cand);
    }
}

#[derive(Debug, Clone, Default)]
pub(crate) struct Outcome {
    pub samples: u64,
    pub worst: Option<Sample>,
    /// Worst among the samples subject to the strict rule.
    pub worst_strict: Option<Sample>,
    pub violations: u64,
    pub strict_violations: u64,
    pub pathologies: u64,
    pub inconclusive: u64,
}

impl Outcome {
    pub fn merge(&mut self, other: Outcome) {
        self.samples += other.samples;
        self.violations += other.violations;
        self.strict_violations += other.strict_violations;
        self.pathologies += other.pathologies;
        self.inconclusive += other.inconclusive;
        if let Some(s) = other.worst {
            keep_best(&mut self.worst, s);
        }
        if let Some(s) = other.worst_strict {
            keep_best(&mut self.worst_strict, s);
        }
    }

    /// Records one evaluated sample under `rules`.
    #[allow(clippy::too_many_arguments)]
    pub fn observe(&mut self, x: &[f64], y: &[f64], t: f64, lhs: f64, rhs: f64, degenerate: bool, rules: &SweepRules) {
        let margin = lhs - rhs;
        if degenerate && margin > rules.threshold {
            self.pathologies += 1;
            return;
        }
        self.samples += 1;
        if margin > rules.threshold {
            self.violations += 1;
        }
        let strict_eligible = rules.strict.is_some() && !degenerate && t > 0.0 && t < 1.0;
        if strict_eligible && margin >= -rules.strict.unwrap_or(0.0) {
            self.strict_violations += 1;
        }
        let better = |slot: &Option<Sample>| slot.as_ref().is_none_or(|s| margin >= s.margin);
        // Only allocate a sample when it may displace the current best.
        if better(&self.worst) || (strict_eligible && better(&self.worst_strict)) {
            let s = Sample { x: x.to_vec(), y: y.to_vec(), t, lhs, rhs, margin };
            if strict_eligible {
                keep_best(&mut self.worst_strict, s.clone());
            }
            keep_best(&mut self.worst, s);
        }
    }

    pub fn worst_margin(&self) -> Option<f64> {
        self.worst.as_ref().map(|s| s.margin)
    }

    /// Converts the tally into a report under the rules it was swept with.
    pub fn report(&self, check: &str, rules: &SweepRules) -> CheckReport {
        let mut status = Status::PassOnSamples;
        let mut violation = None;
        if let Some(w) = self.worst.as_ref().filter(|w| w.margin > rules.threshold) {
            status = Status::Violated;
            violation = Some(w.violation());
        } else if let (Some(tol), Some(w)) = (rules.strict, self.worst_strict.as_ref()) {
            if w.margin >= -tol {
                status = Status::Violated;
                violation = Some(w.violation());
            }
        }
        if status == Status::PassOnSamples && self.inconclusive > 0 {
            status = Status::Inconclusive;
        }
        let mut r = CheckReport::new(check, status);
        r.samples = self.samples;
        r.worst_margin = self.worst_margin().filter(|m| m.is_finite());
        r.violation = violation;
        if self.pathologies > 0 {
            r.notes.push(format!(
                "phi-pathology: {} degenerate samples (x = y) with phi(c, c) < 0 excluded",
                self.pathologies
            ));
        }
        if self.inconclusive > 0 {
            r.notes.push(format!("{} samples could not be evaluated reliably", self.inconclusive));
        }
        if rules.strict.is_some() {
            r.notes.push(format!("strict mode: {} interior samples not strictly below", self.strict_violations));
        }
        if status == Status::PassOnSamples {
            r.notes.push("holds on samples; this is not a proof".to_string());
        }
        r.metric("violating_samples", self.violations as f64)
    }
}

/// Sweeps every `(x, y, t)` in `xs × ys × ts`.
pub(crate) fn sweep(
    ineq: &dyn PairInequality,
    xs: &[Vec<f64>],
    ys: &[Vec<f64>],
    ts: &[f64],
    rules: &SweepRules,
) -> Result<Outcome, Error> {
    let parts: Vec<Result<Outcome, Error>> = xs
        .par_iter()
        .map(|x| {
            let mut acc = Outcome::default();
            let mut row = Vec::with_capacity(ts.len());
            for y in ys {
                let degenerate = x == y;
                if degenerate && rules.skip_degenerate {
                    continue;
                }
                row.clear();
                ineq.row(x, y, ts, &mut row)?;
                for (&t, v) in ts.iter().zip(&row) {
                    match *v {
                        RowValue::Value(lhs, rhs) => acc.observe(x, y, t, lhs, rhs, degenerate, rules),
                        RowValue::Skip => {}
                        RowValue::Inconclusive => acc.inconclusive += 1,
                    }
                }
            }
            Ok(acc)
        })
        .collect();
    let mut total = Outcome::default();
    for p in parts {
        total.merge(p?);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Linear;

    impl PairInequality for Linear {
        fn row(&self, x: &[f64], y: &[f64], ts: &[f64], out: &mut Vec<RowValue>) -> Result<(), Error> {
            out.extend(ts.iter().map(|&t| RowValue::Value(t * (x[0] - y[0]), 0.0)));
            Ok(())
        }
    }

    #[test]
    fn worst_sample_and_tie_break() {
        let pts: Vec<Vec<f64>> = vec![vec![0.0], vec![1.0], vec![2.0]];
        let out = sweep(&Linear, &pts, &pts, &[0.0, 0.5, 1.0], &SweepRules::closed(1e-9)).unwrap();
        let w = out.worst.unwrap();
        assert_eq!((w.x[0], w.y[0], w.t, w.margin), (2.0, 0.0, 1.0, 2.0));
        assert_eq!(out.samples, 27);
        // Margin 0 is shared by many samples; the smallest key wins.
        let zero = sweep(&Linear, &pts[..1], &pts[..1], &[0.0, 1.0], &SweepRules::closed(1e-9)).unwrap();
        assert_eq!(zero.worst.unwrap().t, 0.0);
    }

    #[test]
    fn order_of_inputs_does_not_matter() {
        let pts: Vec<Vec<f64>> = (0..7).map(|k| vec![k as f64 * 0.5]).collect();
        let mut rev = pts.clone();
        rev.reverse();
        let rules = SweepRules::closed(1e-9);
        let a = sweep(&Linear, &pts, &pts, &[0.0, 0.25, 1.0], &rules).unwrap();
        let b = sweep(&Linear, &rev, &rev, &[1.0, 0.25, 0.0], &rules).unwrap();
        assert_eq!(a.worst, b.worst);
        assert_eq!(a.violations, b.violations);
    }
}
