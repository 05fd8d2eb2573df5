//! Measurement-driven holonomic gates on stabilizer codes.
//!
//! The crate simulates Zeno-type protocols that rotate a stabilizer code space
//! around a closed loop by measuring rotated generators. Discrete projective
//! protocols live in [`discrete`], weak continuous measurement in
//! [`continuous`], and the code-level correctability conditions in [`qecc`].

pub mod codes;
pub mod continuous;
pub mod densesim;
pub mod discrete;
pub mod error;
pub mod holonomy;
pub mod pauli;
pub mod qecc;
pub mod quadrature;
pub mod rng;
pub mod stats;

pub use codes::{builtin_code, StabilizerCode, Syndrome};
pub use densesim::{fidelity, StateVector};
pub use error::{Error, Result};
pub use holonomy::{CorrectionPath, HolonomicPath, Target};
pub use pauli::PauliOperator;
