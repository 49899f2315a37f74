//! Scalar expressions over named real variables.
//!
//! Expressions define the functions, bifunctions, preinvexity maps and
//! coordinate maps used throughout the toolkit. They are parsed once and then
//! evaluated many times, so variables are resolved to slot indices at parse
//! time: [`Expression::eval_slice`] takes values in declared-variable order,
//! while [`Expression::evaluate`] resolves a name-keyed [`Binding`].

mod parser;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

pub use parser::ParseError;

/// Default central-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Integer exponents up to this magnitude are expanded by repeated multiplication.
const MAX_REPEATED_POWER: u32 = 4096;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("domain error in {op} at {value}")]
    Domain { op: &'static str, value: f64 },
    #[error("division by zero")]
    DivisionByZero,
    #[error("evaluation overflowed to a non-finite value")]
    NonFinite,
    #[error("binding has {got} values but the expression declares {expected} variables")]
    Arity { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
    Min,
    Max,
    Pow,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "min" => Func::Min,
            "max" => Func::Max,
            "pow" => Func::Pow,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
            Func::Pow => "pow",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max | Func::Pow => 2,
            _ => 1,
        }
    }
}

/// Syntax tree node. Variables refer to slots of the owning expression's
/// declared variable list.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

impl Node {
    fn collect_slots(&self, out: &mut BTreeSet<usize>) {
        match self {
            Node::Num(_) => {}
            Node::Var(i) => {
                out.insert(*i);
            }
            Node::Neg(a) => a.collect_slots(out),
            Node::Binary(_, a, b) => {
                a.collect_slots(out);
                b.collect_slots(out);
            }
            Node::Call(_, args) => args.iter().for_each(|a| a.collect_slots(out)),
        }
    }

    fn map_slots(&self, f: &dyn Fn(usize) -> Node) -> Node {
        match self {
            Node::Num(v) => Node::Num(*v),
            Node::Var(i) => f(*i),
            Node::Neg(a) => Node::Neg(Box::new(a.map_slots(f))),
            Node::Binary(op, a, b) => {
                Node::Binary(*op, Box::new(a.map_slots(f)), Box::new(b.map_slots(f)))
            }
            Node::Call(func, args) => Node::Call(*func, args.iter().map(|a| a.map_slots(f)).collect()),
        }
    }

    fn eval(&self, vals: &[f64]) -> Result<f64, EvalError> {
        let v = match self {
            Node::Num(v) => *v,
            Node::Var(i) => vals[*i],
            Node::Neg(a) => -a.eval(vals)?,
            Node::Binary(op, a, b) => {
                let a = a.eval(vals)?;
                let b = b.eval(vals)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(EvalError::DivisionByZero);
                        }
                        a / b
                    }
                    BinOp::Pow => power(a, b)?,
                }
            }
            Node::Call(func, args) => {
                let a = args[0].eval(vals)?;
                match func {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Tan => a.tan(),
                    Func::Exp => a.exp(),
                    Func::Log => {
                        if a <= 0.0 {
                            return Err(EvalError::Domain { op: "log", value: a });
                        }
                        a.ln()
                    }
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(EvalError::Domain { op: "sqrt", value: a });
                        }
                        a.sqrt()
                    }
                    Func::Abs => a.abs(),
                    Func::Min => a.min(args[1].eval(vals)?),
                    Func::Max => a.max(args[1].eval(vals)?),
                    Func::Pow => power(a, args[1].eval(vals)?)?,
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }
}

fn power(base: f64, exponent: f64) -> Result<f64, EvalError> {
    if exponent.fract() == 0.0 && exponent.abs() <= MAX_REPEATED_POWER as f64 {
        let n = exponent.abs() as u32;
        let mut acc = 1.0;
        if n > 0 {
            acc = base;
            for _ in 1..n {
                acc *= base;
            }
        }
        if exponent < 0.0 {
            if acc == 0.0 {
                return Err(EvalError::DivisionByZero);
            }
            acc = 1.0 / acc;
        }
        return Ok(acc);
    }
    if base < 0.0 {
        return Err(EvalError::Domain { op: "^", value: base });
    }
    Ok(base.powf(exponent))
}

/// Map from variable name to value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Binding(BTreeMap<String, f64>);

impl Binding {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.0.insert(name.to_string(), value);
        self
    }

    pub fn set(&mut self, name: &str, value: f64) {
        self.0.insert(name.to_string(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }
}

impl<S: Into<String>> FromIterator<(S, f64)> for Binding {
    fn from_iter<I: IntoIterator<Item = (S, f64)>>(iter: I) -> Self {
        Binding(iter.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }
}

/// A parsed expression together with its declared variable list.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Node,
    vars: Vec<String>,
}

impl Expression {
    /// Parses `text`, declaring exactly the variables that occur in it (sorted).
    pub fn parse(text: &str) -> Result<Expression, ParseError> {
        parser::parse(text, None)
    }

    /// Parses `text` against a fixed variable list; any other identifier is an error.
    pub fn parse_with_vars(text: &str, vars: &[&str]) -> Result<Expression, ParseError> {
        let vars: Vec<String> = vars.iter().map(|s| s.to_string()).collect();
        parser::parse(text, Some(&vars))
    }

    pub fn constant(value: f64, vars: &[String]) -> Expression {
        Expression { root: Node::Num(value), vars: vars.to_vec() }
    }

    pub(crate) fn from_parts(root: Node, vars: Vec<String>) -> Expression {
        Expression { root, vars }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    /// Variables that actually occur in the tree.
    pub fn used_vars(&self) -> Vec<&str> {
        let mut slots = BTreeSet::new();
        self.root.collect_slots(&mut slots);
        slots.into_iter().map(|i| self.vars[i].as_str()).collect()
    }

    pub fn slot(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }

    /// Evaluates with values given in declared-variable order.
    pub fn eval_slice(&self, values: &[f64]) -> Result<f64, EvalError> {
        if values.len() != self.vars.len() {
            return Err(EvalError::Arity { expected: self.vars.len(), got: values.len() });
        }
        self.root.eval(values)
    }

    /// Evaluates an expression of at most one variable.
    pub fn eval_scalar(&self, x: f64) -> Result<f64, EvalError> {
        match self.vars.len() {
            0 => self.root.eval(&[]),
            1 => self.root.eval(&[x]),
            n => Err(EvalError::Arity { expected: n, got: 1 }),
        }
    }

    /// Evaluates against a name-keyed binding. Every declared variable must be bound.
    pub fn evaluate(&self, binding: &Binding) -> Result<f64, EvalError> {
        let values = self
            .vars
            .iter()
            .map(|name| binding.get(name).ok_or_else(|| EvalError::Unbound(name.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        self.root.eval(&values)
    }

    /// Central difference along `var` at `binding`.
    pub fn derivative_fd(&self, var: &str, binding: &Binding, step: f64) -> Result<f64, EvalError> {
        let x = binding.get(var).ok_or_else(|| EvalError::Unbound(var.to_string()))?;
        let mut b = binding.clone();
        b.set(var, x + step);
        let up = self.evaluate(&b)?;
        b.set(var, x - step);
        let down = self.evaluate(&b)?;
        Ok((up - down) / (2.0 * step))
    }

    /// Re-declares the variable list, keeping the tree. Fails if a used variable
    /// is missing from `vars`.
    pub fn with_vars(&self, vars: &[String]) -> Result<Expression, String> {
        let mut mapping = Vec::with_capacity(self.vars.len());
        for name in &self.vars {
            mapping.push(vars.iter().position(|v| v == name));
        }
        for used in self.used_vars() {
            if !vars.iter().any(|v| v == used) {
                return Err(used.to_string());
            }
        }
        let root = self.root.map_slots(&|i| Node::Var(mapping[i].expect("used variable is mapped")));
        Ok(Expression { root, vars: vars.to_vec() })
    }

    /// Replaces variable `name` by a constant and drops it from the declared list.
    pub fn bind_constant(&self, name: &str, value: f64) -> Expression {
        let Some(slot) = self.slot(name) else {
            return self.clone();
        };
        let root = self.root.map_slots(&|i| {
            if i == slot {
                Node::Num(value)
            } else if i > slot {
                Node::Var(i - 1)
            } else {
                Node::Var(i)
            }
        });
        let mut vars = self.vars.clone();
        vars.remove(slot);
        Expression { root, vars }
    }

    /// Substitutes `inner` for the single variable of `self` (`self ∘ inner`).
    /// The result declares `inner`'s variables.
    pub fn compose(&self, inner: &Expression) -> Result<Expression, String> {
        if self.vars.len() > 1 {
            return Err(format!("outer expression has {} variables", self.vars.len()));
        }
        let root = self.root.map_slots(&|_| inner.root.clone());
        Ok(Expression { root, vars: inner.vars.clone() })
    }

    /// Substitutes one expression per declared variable (all sharing `vars`).
    pub fn substitute_all(&self, replacements: &[Expression], vars: &[String]) -> Expression {
        assert_eq!(replacements.len(), self.vars.len());
        let root = self.root.map_slots(&|i| replacements[i].root.clone());
        Expression { root, vars: vars.to_vec() }
    }

    /// `Σ wᵢ·eᵢ` over expressions sharing one variable list.
    pub fn weighted_sum(terms: &[(f64, &Expression)], vars: &[String]) -> Expression {
        let mut acc: Option<Node> = None;
        for (w, e) in terms {
            let term = Node::Binary(BinOp::Mul, Box::new(Node::Num(*w)), Box::new(e.root.clone()));
            acc = Some(match acc {
                None => term,
                Some(prev) => Node::Binary(BinOp::Add, Box::new(prev), Box::new(term)),
            });
        }
        Expression { root: acc.unwrap_or(Node::Num(0.0)), vars: vars.to_vec() }
    }

    /// Pointwise maximum of expressions sharing one variable list.
    pub fn pointwise_max(items: &[&Expression], vars: &[String]) -> Option<Expression> {
        let mut iter = items.iter();
        let mut acc = iter.next()?.root.clone();
        for e in iter {
            acc = Node::Call(Func::Max, vec![acc, e.root.clone()]);
        }
        Some(Expression { root: acc, vars: vars.to_vec() })
    }

    /// `a + b` over a shared variable list.
    pub fn add(a: &Expression, b: &Expression, vars: &[String]) -> Expression {
        Expression {
            root: Node::Binary(BinOp::Add, Box::new(a.root.clone()), Box::new(b.root.clone())),
            vars: vars.to_vec(),
        }
    }
}

fn write_node(node: &Node, vars: &[String], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match node {
        Node::Num(v) => write!(f, "{v}"),
        Node::Var(i) => write!(f, "{}", vars[*i]),
        Node::Neg(a) => {
            write!(f, "(-")?;
            write_node(a, vars, f)?;
            write!(f, ")")
        }
        Node::Binary(op, a, b) => {
            write!(f, "(")?;
            write_node(a, vars, f)?;
            write!(f, " {} ", op.symbol())?;
            write_node(b, vars, f)?;
            write!(f, ")")
        }
        Node::Call(func, args) => {
            write!(f, "{}(", func.name())?;
            for (k, a) in args.iter().enumerate() {
                if k > 0 {
                    write!(f, ", ")?;
                }
                write_node(a, vars, f)?;
            }
            write!(f, ")")
        }
    }
}

/// Canonical form: fully parenthesized infix, lowercase function names.
impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(&self.root, &self.vars, f)
    }
}
