//! High-precision spacelike vacuum entanglement of the free lattice scalar field.
//!
//! The crate is organized bottom-up:
//!
//! * [`corrlat`] evaluates the thermodynamic-limit correlators `2⟨φ₀φₙ⟩` and
//!   `2⟨π₀πₙ⟩` to a requested number of digits;
//! * [`cmkit`] assembles region-pair covariance matrices from them;
//! * [`symplectic`] computes Williamson spectra and the reduced partial
//!   transpose spectrum together with its normal-form basis;
//! * [`entangle`] turns spectra into logarithmic negativity, separability
//!   certificates and consolidated two-mode pairs;
//! * [`profiles`] builds optimal detector profiles and the beamsplitter swap;
//! * [`sweeps`] drives configuration scans and the decay/growth fits.

pub mod cmkit;
pub mod corrlat;
pub mod entangle;
pub mod error;
pub mod exec;
pub mod linalg;
pub mod precision;
pub mod profiles;
pub mod sweeps;
pub mod symplectic;

pub use error::{Error, Result};
pub use precision::{Mass, PrecisionPolicy, Real};
