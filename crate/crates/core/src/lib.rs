//! Numerical analysis of eventually cooperative and competitive flows.
//!
//! Cone orders, vector-field parsing, trajectory integration, certification
//! of eventual order preservation, non-oscillation scanning of trajectories,
//! the interval-translation witness construction, and limit-set
//! classification with hyperbolicity diagnostics.

pub mod cli;
pub mod cone;
pub mod field;
pub mod integrate;
pub mod limit_set;
pub mod linalg;
pub mod monotonicity;
pub mod oscillation;
pub mod seed;
pub mod witness;

pub use cone::{Cone, ConeError, ConeSpec, OrderRelation};
pub use field::{FieldError, SystemDef, VectorField};
pub use integrate::{integrate, Direction, IntegrateError, IntegrateOptions, Method, Trajectory};
pub use monotonicity::{CertificateKind, MonotonicityCertificate, MonotonicityError};
