//! Discrete Sobolev-type elastic metrics on spaces of curves in
//! constant-curvature manifolds.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ad;
pub mod analysis;
pub mod bvp;
pub mod curve;
pub mod error;
pub mod holonomy;
pub mod io;
pub mod ivp;
pub mod linalg;
pub mod manifold;
pub mod metric;
pub mod real;
pub mod stats;

pub use curve::{CurveOptions, DerivVariable, DiscreteCurve, Domain, Topology, VectorField};
pub use error::{Error, Result};
pub use manifold::{ManifoldKind, ManifoldSpec, Point, Tangent};
pub use metric::{CurvePath, Family, FieldNorm, MetricSpec};
