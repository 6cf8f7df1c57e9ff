//! Critical quantum metrology in a three-site chiral quantum Rabi ring.

pub mod ed;
pub mod error;
pub mod meanfield;
pub mod measure;
pub mod model;
pub mod modes;
pub mod qfi;
pub mod scaling;
pub mod state;
pub mod symplectic;

pub use error::{QrtError, Result};
pub use meanfield::{Displacement, SolverOptions};
pub use measure::{inverted_variance, CoherentScale, EvalOptions, MeasurementResult};
pub use model::{classify_phase, critical_g1, critical_theta, ModelParams, PhaseKind, PhaseLabel, Quasimomentum};
pub use qfi::{qfi, qfi_csp, qfi_fsp, qfi_np, DerivativeMode, QfiResult};
pub use scaling::{fit_exponent, heisenberg_verdict, sweep, Column, ExponentFit, SweepSpec, SweepTable};
pub use state::{solve, Branch, GroundState};
