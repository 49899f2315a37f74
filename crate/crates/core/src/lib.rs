//! Sampled certification and falsification of φ-convexity.
//!
//! The crate checks the generalized convexity inequality
//! `f(γ(t)) ≤ f(x) + t·φ(f(y), f(x))` for functions on products of lines and
//! circles, where `γ` is the closed-form geodesic from `x` to `y` and `φ` is a
//! user-supplied bifunction. Every universal claim is tested on a grid and a
//! failing sample is reported as a re-checkable [`checker::Violation`].
//! Passing verdicts are "holds on samples", never proofs.
//!
//! Modules:
//! - [`expr`]: expression parsing and evaluation.
//! - [`manifold`]: catalog manifolds, points, geodesics and sampled regions.
//! - [`bifunction`]: bifunctions and sampled probes of their algebraic properties.
//! - [`checker`]: inequality checks, theorem audits and falsification.
//! - [`epigraph`]: φ-epigraphs and geodesic φ-convex subsets of `M × ℝ`.

// `!(a < b)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bifunction;
pub mod checker;
pub mod epigraph;
pub mod expr;
pub mod manifold;

mod error;

pub use error::Error;
