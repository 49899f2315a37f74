//! Bifunctions `φ: ℝ × ℝ → ℝ` and sampled probes of their algebraic properties.
//!
//! Probes are falsifiers: a `HoldsOnSamples` verdict only means no sample
//! contradicted the property. Every `Violated` verdict carries a witness that
//! re-evaluates to a defect above the tolerance.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::expr::{EvalError, Expression, ParseError};

/// Probe tolerance.
pub const PROBE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    NonnegHomogeneous,
    Additive,
    NonnegLinear,
    Antisymmetric,
    Nondecreasing,
    SeqUpperBounded,
}

impl Property {
    pub const ALL: [Property; 6] = [
        Property::NonnegHomogeneous,
        Property::Additive,
        Property::NonnegLinear,
        Property::Antisymmetric,
        Property::Nondecreasing,
        Property::SeqUpperBounded,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::NonnegHomogeneous => "nonneg_homogeneous",
            Property::Additive => "additive",
            Property::NonnegLinear => "nonneg_linear",
            Property::Antisymmetric => "antisymmetric",
            Property::Nondecreasing => "nondecreasing",
            Property::SeqUpperBounded => "seq_upper_bounded",
        }
    }

    pub fn from_name(name: &str) -> Option<Property> {
        Property::ALL.into_iter().find(|p| p.name() == name)
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A two-variable expression in `u`, `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bifunction {
    name: String,
    expr: Expression,
    declared: Vec<Property>,
}

impl Bifunction {
    pub fn parse(name: &str, text: &str) -> Result<Bifunction, ParseError> {
        let expr = Expression::parse_with_vars(text, &["u", "v"])?;
        Ok(Bifunction { name: name.to_string(), expr, declared: Vec::new() })
    }

    /// Wraps an expression already declared over exactly `[u, v]`.
    pub fn from_expression(name: &str, expr: Expression) -> Option<Bifunction> {
        (expr.vars() == ["u", "v"]).then(|| Bifunction { name: name.to_string(), expr, declared: Vec::new() })
    }

    /// Catalog entries: `diff` (u−v), `sum` (u+v), `prod` (u·v), `cube_diff` (u³−v³).
    pub fn builtin(name: &str) -> Option<Bifunction> {
        let text = match name {
            "diff" => "u - v",
            "sum" => "u + v",
            "prod" => "u * v",
            "cube_diff" => "u^3 - v^3",
            _ => return None,
        };
        Some(Bifunction::parse(name, text).expect("catalog bifunction parses"))
    }

    pub fn diff() -> Bifunction {
        Self::builtin("diff").unwrap()
    }

    pub fn with_declared(mut self, props: Vec<Property>) -> Self {
        self.declared = props;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn expression(&self) -> &Expression {
        &self.expr
    }

    pub fn declared_properties(&self) -> &[Property] {
        &self.declared
    }

    #[inline]
    pub fn eval(&self, u: f64, v: f64) -> Result<f64, EvalError> {
        self.expr.eval_slice(&[u, v])
    }
}

/// Sample ranges for the probes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbePlan {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub lambdas: Vec<f64>,
    /// Values used to build the bounded test sequences.
    pub sequence_values: Vec<f64>,
    /// Truncation length of every test sequence.
    pub sequence_len: usize,
    pub tolerance: f64,
}

impl Default for ProbePlan {
    fn default() -> Self {
        ProbePlan {
            lo: -4.0,
            hi: 4.0,
            count: 17,
            lambdas: vec![0.0, 0.5, 1.0, 2.0, 4.0],
            sequence_values: vec![-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0],
            sequence_len: 8,
            tolerance: PROBE_TOLERANCE,
        }
    }
}

impl ProbePlan {
    fn grid(&self) -> Vec<f64> {
        let n = self.count.max(2);
        (0..n)
            .map(|k| if k + 1 == n { self.hi } else { self.lo + (self.hi - self.lo) * k as f64 / (n - 1) as f64 })
            .collect()
    }

    /// The bounded test-sequence family: constants, eventually-constant,
    /// alternating two-value and monotone sequences over `sequence_values`.
    pub fn sequences(&self) -> Vec<TestSequence> {
        let vals = &self.sequence_values;
        let n = self.sequence_len.max(2);
        let mut out = Vec::new();
        for &c in vals {
            out.push(TestSequence::new(SequenceShape::Constant, vec![c; n]));
        }
        for &a in vals {
            for &c in vals {
                if a != c {
                    let mut s = vec![c; n];
                    s[0] = a;
                    out.push(TestSequence::new(SequenceShape::EventuallyConstant, s));
                }
            }
        }
        for &a in vals {
            for &b in vals {
                if a != b {
                    let s = (0..n).map(|k| if k % 2 == 0 { a } else { b }).collect();
                    out.push(TestSequence::new(SequenceShape::Alternating, s));
                }
            }
        }
        for &a in vals {
            for &b in vals {
                if a != b {
                    let s = (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect();
                    out.push(TestSequence::new(SequenceShape::Monotone, s));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceShape {
    Constant,
    EventuallyConstant,
    Alternating,
    Monotone,
}

/// A finite truncation of a bounded real sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSequence {
    pub shape: SequenceShape,
    pub values: Vec<f64>,
}

impl TestSequence {
    pub fn new(shape: SequenceShape, values: Vec<f64>) -> Self {
        TestSequence { shape, values }
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `(sup_n φ(xₙ, yₙ), φ(sup xₙ, sup yₙ))` for two equal-length sequences.
pub fn sequence_bound(phi: &Bifunction, xs: &[f64], ys: &[f64]) -> Result<(f64, f64), EvalError> {
    let mut sup = f64::NEG_INFINITY;
    for (&x, &y) in xs.iter().zip(ys) {
        sup = sup.max(phi.eval(x, y)?);
    }
    let sx = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sy = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((sup, phi.eval(sx, sy)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    HoldsOnSamples,
    Violated,
}

/// The concrete sample contradicting a property.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum ProbeWitness {
    /// `φ(λu, λv)` vs `λφ(u, v)`.
    Homogeneous { u: f64, v: f64, lambda: f64, lhs: f64, rhs: f64 },
    /// `φ(u₁+u₂, v₁+v₂)` vs `φ(u₁,v₁) + φ(u₂,v₂)`.
    Additive { u1: f64, v1: f64, u2: f64, v2: f64, lhs: f64, rhs: f64 },
    /// `φ(u, v)` vs `−φ(v, u)`.
    Antisymmetric { u: f64, v: f64, lhs: f64, rhs: f64 },
    /// `φ(u₁, v₁)` vs `φ(u₂, v₂)` with `u₁ ≤ u₂`, `v₁ ≤ v₂`.
    Nondecreasing { u1: f64, v1: f64, u2: f64, v2: f64, lhs: f64, rhs: f64 },
    /// `sup φ(xₙ, yₙ)` vs `φ(sup xₙ, sup yₙ)`.
    Sequence { xs: TestSequence, ys: TestSequence, lhs: f64, rhs: f64 },
}

impl ProbeWitness {
    /// Size of the contradiction: `|lhs − rhs|` for identities, `lhs − rhs` for inequalities.
    pub fn defect(&self) -> f64 {
        match self {
            ProbeWitness::Homogeneous { lhs, rhs, .. }
            | ProbeWitness::Additive { lhs, rhs, .. }
            | ProbeWitness::Antisymmetric { lhs, rhs, .. } => (lhs - rhs).abs(),
            ProbeWitness::Nondecreasing { lhs, rhs, .. } | ProbeWitness::Sequence { lhs, rhs, .. } => lhs - rhs,
        }
    }

    /// Recomputes the defect from the witness arguments alone.
    pub fn recheck(&self, phi: &Bifunction) -> Result<f64, EvalError> {
        Ok(match self {
            ProbeWitness::Homogeneous { u, v, lambda, .. } => {
                (phi.eval(lambda * u, lambda * v)? - lambda * phi.eval(*u, *v)?).abs()
            }
            ProbeWitness::Additive { u1, v1, u2, v2, .. } => {
                (phi.eval(u1 + u2, v1 + v2)? - phi.eval(*u1, *v1)? - phi.eval(*u2, *v2)?).abs()
            }
            ProbeWitness::Antisymmetric { u, v, .. } => (phi.eval(*u, *v)? + phi.eval(*v, *u)?).abs(),
            ProbeWitness::Nondecreasing { u1, v1, u2, v2, .. } => phi.eval(*u1, *v1)? - phi.eval(*u2, *v2)?,
            ProbeWitness::Sequence { xs, ys, .. } => {
                let (sup, bound) = sequence_bound(phi, &xs.values, &ys.values)?;
                sup - bound
            }
        })
    }

    fn key(&self) -> Vec<f64> {
        match self {
            ProbeWitness::Homogeneous { u, v, lambda, .. } => vec![*u, *v, *lambda],
            ProbeWitness::Additive { u1, v1, u2, v2, .. } | ProbeWitness::Nondecreasing { u1, v1, u2, v2, .. } => {
                vec![*u1, *v1, *u2, *v2]
            }
            ProbeWitness::Antisymmetric { u, v, .. } => vec![*u, *v],
            ProbeWitness::Sequence { xs, ys, .. } => xs.values.iter().chain(&ys.values).copied().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub property: Property,
    pub verdict: Verdict,
    pub samples: usize,
    /// Largest defect seen over all samples.
    pub worst_defect: f64,
    /// Number of samples whose defect exceeded the tolerance.
    pub violations: usize,
    pub witness: Option<ProbeWitness>,
    pub note: String,
}

impl ProbeReport {
    pub fn holds(&self) -> bool {
        self.verdict == Verdict::HoldsOnSamples
    }
}

#[derive(Default)]
struct Tally {
    samples: usize,
    violations: usize,
    worst: Option<ProbeWitness>,
}

impl Tally {
    fn push(&mut self, w: ProbeWitness, tol: f64) {
        self.samples += 1;
        let d = w.defect();
        if d > tol {
            self.violations += 1;
        }
        if prefer(&w, self.worst.as_ref()) {
            self.worst = Some(w);
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.samples += other.samples;
        self.violations += other.violations;
        if let Some(w) = other.worst {
            if prefer(&w, self.worst.as_ref()) {
                self.worst = Some(w);
            }
        }
        self
    }
}

/// Larger defect wins; ties go to the lexicographically smaller witness.
fn prefer(candidate: &ProbeWitness, current: Option<&ProbeWitness>) -> bool {
    let Some(cur) = current else { return true };
    match candidate.defect().total_cmp(&cur.defect()) {
        std::cmp::Ordering::Greater => true,
        std::cmp::Ordering::Less => false,
        std::cmp::Ordering::Equal => lex_cmp(&candidate.key(), &cur.key()) == std::cmp::Ordering::Less,
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

fn finish(property: Property, tally: Tally) -> ProbeReport {
    let worst_defect = tally.worst.as_ref().map_or(0.0, ProbeWitness::defect);
    let violated = tally.violations > 0;
    ProbeReport {
        property,
        verdict: if violated { Verdict::Violated } else { Verdict::HoldsOnSamples },
        samples: tally.samples,
        worst_defect,
        violations: tally.violations,
        witness: if violated { tally.worst } else { None },
        note: if violated {
            format!("{} of {} samples contradict {property}", tally.violations, tally.samples)
        } else {
            format!("no contradiction on {} samples; this is not a proof", tally.samples)
        },
    }
}

/// Parallel sweep over an outer index with an order-independent reduction.
fn sweep<F>(outer: usize, body: F) -> Result<Tally, EvalError>
where
    F: Fn(usize, &mut Tally) -> Result<(), EvalError> + Sync,
{
    let parts: Vec<Result<Tally, EvalError>> = (0..outer)
        .into_par_iter()
        .map(|i| {
            let mut t = Tally::default();
            body(i, &mut t)?;
            Ok(t)
        })
        .collect();
    let mut acc = Tally::default();
    for p in parts {
        acc = acc.merge(p?);
    }
    Ok(acc)
}

pub fn probe_nonneg_homogeneous(phi: &Bifunction, plan: &ProbePlan) -> Result<ProbeReport, EvalError> {
    let grid = plan.grid();
    let tol = plan.tolerance;
    let tally = sweep(grid.len(), |i, t| {
        let u = grid[i];
        for &v in &grid {
            let base = phi.eval(u, v)?;
            for &lambda in &plan.lambdas {
                let lhs = phi.eval(lambda * u, lambda * v)?;
                t.push(ProbeWitness::Homogeneous { u, v, lambda, lhs, rhs: lambda * base }, tol);
            }
        }
        Ok(())
    })?;
    Ok(finish(Property::NonnegHomogeneous, tally))
}

pub fn probe_additive(phi: &Bifunction, plan: &ProbePlan) -> Result<ProbeReport, EvalError> {
    let grid = plan.grid();
    let tol = plan.tolerance;
    let tally = sweep(grid.len(), |i, t| {
        let u1 = grid[i];
        for &v1 in &grid {
            let a = phi.eval(u1, v1)?;
            for &u2 in &grid {
                for &v2 in &grid {
                    let lhs = phi.eval(u1 + u2, v1 + v2)?;
                    let rhs = a + phi.eval(u2, v2)?;
                    t.push(ProbeWitness::Additive { u1, v1, u2, v2, lhs, rhs }, tol);
                }
            }
        }
        Ok(())
    })?;
    Ok(finish(Property::Additive, tally))
}

/// Conjunction of the homogeneity and additivity probes on the same samples.
/// The witness, if any, comes from the homogeneity probe first.
pub fn probe_nonneg_linear(phi: &Bifunction, plan: &ProbePlan) -> Result<ProbeReport, EvalError> {
    let hom = probe_nonneg_homogeneous(phi, plan)?;
    let add = probe_additive(phi, plan)?;
    let violated = !hom.holds() || !add.holds();
    let witness = hom.witness.clone().or_else(|| add.witness.clone());
    Ok(ProbeReport {
        property: Property::NonnegLinear,
        verdict: if violated { Verdict::Violated } else { Verdict::HoldsOnSamples },
        samples: hom.samples + add.samples,
        worst_defect: hom.worst_defect.max(add.worst_defect),
        violations: hom.violations + add.violations,
        witness,
        note: format!("homogeneous: {:?}; additive: {:?}", hom.verdict, add.verdict),
    })
}

pub fn probe_antisymmetric(phi: &Bifunction, plan: &ProbePlan) -> Result<ProbeReport, EvalError> {
    let grid = plan.grid();
    let tol = plan.tolerance;
    let tally = sweep(grid.len(), |i, t| {
        let u = grid[i];
        for &v in &grid {
            let lhs = phi.eval(u, v)?;
            let rhs = -phi.eval(v, u)?;
            t.push(ProbeWitness::Antisymmetric { u, v, lhs, rhs }, tol);
        }
        Ok(())
    })?;
    Ok(finish(Property::Antisymmetric, tally))
}

pub fn probe_nondecreasing(phi: &Bifunction, plan: &ProbePlan) -> Result<ProbeReport, EvalError> {
    let grid = plan.grid();
    let tol = plan.tolerance;
    let pairs: Vec<(f64, f64)> = grid.iter().flat_map(|&u| grid.iter().map(move |&v| (u, v))).collect();
    let values = pairs.iter().map(|&(u, v)| phi.eval(u, v)).collect::<Result<Vec<_>, _>>()?;
    let tally = sweep(pairs.len(), |i, t| {
        let (u1, v1) = pairs[i];
        for (j, &(u2, v2)) in pairs.iter().enumerate() {
            if u1 <= u2 && v1 <= v2 {
                t.push(ProbeWitness::Nondecreasing { u1, v1, u2, v2, lhs: values[i], rhs: values[j] }, tol);
            }
        }
        Ok(())
    })?;
    Ok(finish(Property::Nondecreasing, tally))
}

pub fn probe_seq_upper_bounded(phi: &Bifunction, plan: &ProbePlan) -> Result<ProbeReport, EvalError> {
    let seqs = plan.sequences();
    let tol = plan.tolerance;
    let tally = sweep(seqs.len(), |i, t| {
        for ys in &seqs {
            let xs = &seqs[i];
            let (lhs, rhs) = sequence_bound(phi, &xs.values, &ys.values)?;
            t.push(ProbeWitness::Sequence { xs: xs.clone(), ys: ys.clone(), lhs, rhs }, tol);
        }
        Ok(())
    })?;
    Ok(finish(Property::SeqUpperBounded, tally))
}

pub fn probe(phi: &Bifunction, property: Property, plan: &ProbePlan) -> Result<ProbeReport, EvalError> {
    match property {
        Property::NonnegHomogeneous => probe_nonneg_homogeneous(phi, plan),
        Property::Additive => probe_additive(phi, plan),
        Property::NonnegLinear => probe_nonneg_linear(phi, plan),
        Property::Antisymmetric => probe_antisymmetric(phi, plan),
        Property::Nondecreasing => probe_nondecreasing(phi, plan),
        Property::SeqUpperBounded => probe_seq_upper_bounded(phi, plan),
    }
}

/// All six probes in declaration order.
pub fn probe_all(phi: &Bifunction, plan: &ProbePlan) -> Result<Vec<ProbeReport>, EvalError> {
    Property::ALL.iter().map(|&p| probe(phi, p, plan)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bf(text: &str) -> Bifunction {
        Bifunction::parse("test", text).unwrap()
    }

    fn holds(r: Result<ProbeReport, EvalError>) -> bool {
        let r = r.unwrap();
        if let Some(w) = &r.witness {
            panic!("unexpected witness {w:?}");
        }
        r.holds()
    }

    fn violated(phi: &Bifunction, r: Result<ProbeReport, EvalError>, tol: f64) -> ProbeWitness {
        let r = r.unwrap();
        assert_eq!(r.verdict, Verdict::Violated);
        let w = r.witness.expect("violated probes carry a witness");
        assert!(w.recheck(phi).unwrap() > tol);
        assert_eq!(w.recheck(phi).unwrap(), w.defect());
        w
    }

    #[test]
    fn homogeneity() {
        let plan = ProbePlan::default();
        assert!(holds(probe_nonneg_homogeneous(&bf("u - v"), &plan)));
        assert!(holds(probe_nonneg_homogeneous(&bf("u + v"), &plan)));
        let cube = bf("u^3 - v^3");
        violated(&cube, probe_nonneg_homogeneous(&cube, &plan), plan.tolerance);
        let w = ProbeWitness::Homogeneous { u: 1.0, v: 0.0, lambda: 2.0, lhs: 8.0, rhs: 2.0 };
        assert_eq!(cube.eval(2.0, 0.0).unwrap(), 8.0);
        assert_eq!(w.recheck(&cube).unwrap(), 6.0);
    }

    #[test]
    fn additivity() {
        let plan = ProbePlan::default();
        assert!(holds(probe_additive(&bf("u - v"), &plan)));
        assert!(holds(probe_additive(&bf("u + v"), &plan)));
        let prod = bf("u * v");
        violated(&prod, probe_additive(&prod, &plan), plan.tolerance);
        let w = ProbeWitness::Additive { u1: 1.0, v1: 1.0, u2: 1.0, v2: 1.0, lhs: 0.0, rhs: 0.0 };
        // φ(2,2) = 4 against φ(1,1) + φ(1,1) = 2
        assert_eq!(w.recheck(&prod).unwrap(), 2.0);
    }

    #[test]
    fn linearity_is_conjunction() {
        let plan = ProbePlan::default();
        assert!(holds(probe_nonneg_linear(&bf("u - v"), &plan)));
        assert!(holds(probe_nonneg_linear(&bf("2*u - 3*v"), &plan)));
        let cube = bf("u^3 - v^3");
        let w = violated(&cube, probe_nonneg_linear(&cube, &plan), plan.tolerance);
        assert!(matches!(w, ProbeWitness::Homogeneous { .. }));
        for text in ["u - v", "u*v", "u^3 - v^3", "u + v + 1", "max(u, v)"] {
            let phi = bf(text);
            let lin = probe_nonneg_linear(&phi, &plan).unwrap().holds();
            let both = probe_nonneg_homogeneous(&phi, &plan).unwrap().holds() && probe_additive(&phi, &plan).unwrap().holds();
            assert_eq!(lin, both, "{text}");
        }
    }

    #[test]
    fn antisymmetry() {
        let plan = ProbePlan::default();
        assert!(holds(probe_antisymmetric(&bf("u - v"), &plan)));
        assert!(holds(probe_antisymmetric(&bf("u^3 - v^3"), &plan)));
        let sum = bf("u + v");
        violated(&sum, probe_antisymmetric(&sum, &plan), plan.tolerance);
        let w = ProbeWitness::Antisymmetric { u: 1.0, v: 1.0, lhs: 2.0, rhs: -2.0 };
        assert_eq!(w.recheck(&sum).unwrap(), 4.0);
    }

    #[test]
    fn monotonicity() {
        let plan = ProbePlan::default();
        assert!(holds(probe_nondecreasing(&bf("u + v"), &plan)));
        for text in ["u - v", "u^3 - v^3"] {
            let phi = bf(text);
            let w = violated(&phi, probe_nondecreasing(&phi, &plan), plan.tolerance);
            let ProbeWitness::Nondecreasing { u1, u2, v1, v2, .. } = w else { panic!() };
            assert!(u1 <= u2 && v1 <= v2);
        }
    }

    #[test]
    fn sequential_bound() {
        let plan = ProbePlan::default();
        assert!(holds(probe_seq_upper_bounded(&bf("u + v"), &plan)));
        let prod = bf("u * v");
        violated(&prod, probe_seq_upper_bounded(&prod, &plan), plan.tolerance);
        // x = y = (−2, −1, −1, …): sup φ = 4 against φ(−1, −1) = 1
        let mut xs = vec![-1.0; plan.sequence_len];
        xs[0] = -2.0;
        assert_eq!(sequence_bound(&prod, &xs, &xs).unwrap(), (4.0, 1.0));
        let family = plan.sequences();
        assert!(family.iter().any(|s| s.values == xs && s.shape == SequenceShape::EventuallyConstant));
        let diff = bf("u - v");
        let c = vec![0.5; plan.sequence_len];
        assert_eq!(sequence_bound(&diff, &c, &c).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn deterministic_reports() {
        let plan = ProbePlan::default();
        let phi = bf("u*v - v^3");
        assert_eq!(probe_all(&phi, &plan).unwrap(), probe_all(&phi, &plan).unwrap());
    }

    #[test]
    fn builtins() {
        for name in ["diff", "sum", "prod", "cube_diff"] {
            assert_eq!(Bifunction::builtin(name).unwrap().name(), name);
        }
        assert!(Bifunction::builtin("nope").is_none());
        assert!(Bifunction::parse("bad", "u + w").is_err());
    }
}
