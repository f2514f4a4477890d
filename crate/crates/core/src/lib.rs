//! Universal quantum estimation: quorum verification, dual bases and
//! unbiased tomographic estimators.
//!
//! The crate is organized bottom-up:
//!
//! * [`oscore`]: dense operators, the oscillator/spin operator zoo and test states.
//! * [`frames`]: Liouville-space checks that a family of operators is a quorum.
//! * [`dualbasis`]: dual sets by Gram-Schmidt and by frame-operator inversion.
//! * [`estimators`]: closed-form tomographic kernels for homodyne, displaced
//!   parity, spin, Kerr-phase and nonunitary resolutions.
//! * [`sampler`]: simulated measurement records from known states.
//! * [`recon`]: averaging of kernels over records into estimates with error bars.

pub mod dualbasis;
pub mod error;
pub mod estimators;
pub mod frames;
pub mod oscore;
mod par;
pub mod quorum;
pub mod recon;
pub mod sampler;
pub mod special;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Version tag written into every JSON document.
pub const FORMAT_VERSION: u32 = 1;
