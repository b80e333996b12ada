//! Positivity-preserving semi-discrete integration of superlinear scalar SDEs
//! (Heston 3/2-model family), with tamed Euler, implicit Milstein and Euler-Maruyama
//! baselines, and a coupled-path Monte Carlo harness for measuring strong convergence.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod models;
pub mod montecarlo;
pub mod paths;
pub mod schemes;

pub use error::{Error, Result};
pub use models::{
    inverse_transform, transform_example2, validate_parameters, CoefficientFn, Family, ModelSpec,
    PhiFn, Severity, ValidationReport,
};
pub use paths::{coarsen, generate_lattice, BrownianLattice, GridSpec};
pub use schemes::{
    em_step, hms_step, sd_step, simulate_path, tamed_step, CoefficientMode, PathResult, Scheme,
    SchemeKind, StepInput,
};
