//! Aperiodic dynamical decoupling (UDD, QDD, QDD(ZY)) of a spin ensemble
//! under static dephasing, with systematic pulse errors.

pub mod checks;
pub mod config;
pub mod ensemble;
pub mod error;
pub mod oracle;
pub mod pulse;
pub mod quadrature;
pub mod report;
pub mod sequence;
pub mod spin;
pub mod stream;

pub use ensemble::{fidelities, sweep, Averaging, EnsembleConfig, FidelityCurve, Fidelities};
pub use error::{DdError, Result};
pub use pulse::{BathParams, ErrorMode, PulseErrorParams, PulseErrorSample, ZOrder};
pub use sequence::{build, Protocol, PulseSequence};
pub use spin::{Axis, Unitary2};
