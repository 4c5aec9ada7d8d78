//! Fixed-energy charged-particle motion in a static field `(V, B)` on a
//! strictly convex domain: boundary and scattering data, their dictionary,
//! explicit high-energy thresholds, identity checks and reconstruction.

// NaN-rejecting `!(x > 0)` guards and index loops over small matrices are intended
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::too_many_arguments, clippy::type_complexity)]

pub mod boundary;
pub mod config;
pub mod domain;
pub mod dynamics;
pub mod error;
pub mod fields;
pub mod identities;
pub mod inverse;
pub mod io;
pub mod linalg;
pub mod ode;
pub mod real;
pub mod scattering;
pub mod thresholds;

pub use error::{Error, Result};
pub use real::Real;

/// `f64` instantiations of the generic types.
pub type FieldModelF64 = fields::FieldModel<f64>;
pub type ConvexDomainF64 = domain::ConvexDomain<f64>;
pub type PhaseStateF64 = dynamics::PhaseState<f64>;
pub type FlowOptionsF64 = dynamics::FlowOptions<f64>;
pub type FlowResultF64 = dynamics::FlowResult<f64>;
pub type BoundaryDatumF64 = boundary::BoundaryDatum<f64>;
pub type ShootOptionsF64 = boundary::ShootOptions<f64>;
pub type ScatteringDatumF64 = scattering::ScatteringDatum<f64>;
pub type ThresholdInputsF64 = thresholds::ThresholdInputs<f64>;
pub type BumpFamilyF64 = inverse::BumpFamily<f64>;
pub type Vec3F64 = linalg::Vec3<f64>;
