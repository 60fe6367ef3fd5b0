//! Joint base-station precoding and reconfigurable-intelligent-surface (RIS)
//! configuration by sum-MSE minimization.
//!
//! The crate is organised bottom-up:
//!
//! - [`channel`]: array responses, Rician link sampling, cell geometry and the
//!   composite per-UE matrices `H̄_k`.
//! - [`precoders`]: MRT, ZF and MMSE baselines without RIS.
//! - [`risma`]: SMSE / sum-rate evaluation, the closed-form RIS and precoder
//!   updates and the alternating solver built from them.
//! - [`sdr`]: a small dense complex SDP solver (ADMM) plus Gaussian
//!   randomization.
//! - [`lorisma`]: the low-resolution variant with binary activation and
//!   quantized phases.
//! - [`single_ue`]: the single-user pipeline with MRT precoding.
//! - [`harness`]: Monte-Carlo experiments, presets and CSV output.

pub mod channel;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod lorisma;
pub mod precoders;
pub mod risma;
pub mod sdr;
pub mod single_ue;
pub mod units;

pub use error::{Error, Result};
pub use linalg::{CMat, CVec};
