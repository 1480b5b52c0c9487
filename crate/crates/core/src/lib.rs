//! Location-aware beamforming for a UAV network driven by a delay-tolerant
//! unknown-input observer.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`design`] finds observer gains `(Q, L)` by LMI feasibility, minimising
//!    the certified performance level `gamma`.
//! 2. [`dynamics`] generates ground-truth UAV motion and perturbed position
//!    reports.
//! 3. [`runtime`] predicts the next UAV positions and reconstructs the unknown
//!    velocity inputs from those reports.
//! 4. [`beam`] turns predicted positions into azimuths and a zero-forcing
//!    precoder, then evaluates link quality and beam patterns.
//!
//! [`sim`] ties the stages together into reproducible experiments with CSV
//! output; the `uio-beam` binary exposes them on the command line.

pub mod design;
pub mod dynamics;
pub mod error;
pub mod numkernel;
pub mod beam;
pub mod runtime;
pub mod sim;

pub use error::{Error, Result};
