//! Loewner evolution on doubly connected domains.
//!
//! The crate covers the Villat kernel and the Herglotz-type class built on
//! it, canonical domain systems of annuli, weak holomorphic vector fields
//! driven by measure pairs, the associated evolution families, their
//! classification into four types, and Loewner chains.

pub mod chain;
pub mod classify;
pub mod domain_system;
pub mod error;
pub mod evolution;
pub mod export;
pub mod kernel;
pub mod presets;
pub mod quadrature;
pub mod selftest;
pub mod timefn;
pub mod vector_field;

pub use domain_system::{log_deriv, module_of_annulus, r_of_t, CanonicalSystem, SystemKind};
pub use error::{Error, Result};
pub use kernel::{free_term, herglotz_eval, villat_eval, villat_reconstruct, CircleMeasure, KernelTolerance};
pub use quadrature::{IntegralVerdict, QuadConfig};
pub use timefn::{ScalarFn, TimeChange};
pub use vector_field::{eval_g, field_free_term, validate_driving, DrivingData, MeasureSegment, ValidationReport};
