//! Baseline transmit precoders without RIS optimization: MRT, ZF and MMSE.

use num_complex::Complex64;
use serde::Serialize;

use crate::linalg::{hermitian_condition, solve_hpd, CMat, CVec};
use crate::{Error, Result};

/// Above this condition number of `H_dᴴH_d` the ZF inverse is refused.
pub const ZF_MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Precoder {
    #[serde(skip)]
    pub w: CMat,
    pub power_budget: f64,
}

impl Precoder {
    /// Scales `raw` to `‖W‖_F² = P`.
    pub fn normalized(raw: CMat, power: f64, what: &'static str) -> Result<Self> {
        let norm = raw.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::ZeroChannel(what));
        }
        Ok(Self {
            w: raw * Complex64::from(power.sqrt() / norm),
            power_budget: power,
        })
    }

    pub fn num_users(&self) -> usize {
        self.w.ncols()
    }

    pub fn column(&self, k: usize) -> CVec {
        self.w.column(k).into_owned()
    }
}

/// `w = √P g/‖g‖`.
pub fn mrt(g: &CVec, power: f64) -> Result<Precoder> {
    Precoder::normalized(CMat::from_column_slice(g.len(), 1, g.as_slice()), power, "MRT channel")
}

/// `W ∝ H_d (H_dᴴ H_d)⁻¹`. Refuses rank-deficient channels.
pub fn zf(h_d: &CMat, power: f64) -> Result<Precoder> {
    let (m, k) = h_d.shape();
    let gram = h_d.adjoint() * h_d;
    if k > m {
        return Err(Error::Singular {
            context: "ZF Gram matrix (more users than antennas)",
            condition: f64::INFINITY,
        });
    }
    let condition = hermitian_condition(&gram);
    if !(condition < ZF_MAX_CONDITION) {
        return Err(Error::Singular {
            context: "ZF Gram matrix",
            condition,
        });
    }
    let inv = solve_hpd(&gram, &CMat::identity(k, k), "ZF Gram matrix")?;
    Precoder::normalized(h_d * inv, power, "ZF channel")
}

/// Minimum-norm ZF via `(H_d H_dᴴ)⁺ H_d`, usable when `K > M`; it is the
/// `μ → 0` limit of the regularized precoder.
pub fn zf_pseudo_inverse(h_d: &CMat, power: f64) -> Result<Precoder> {
    let pinv = h_d
        .adjoint()
        .pseudo_inverse(1e-12 * h_d.norm().max(f64::MIN_POSITIVE))
        .map_err(|_| Error::ZeroChannel("ZF channel"))?;
    Precoder::normalized(pinv, power, "ZF channel")
}

/// `W ∝ (H_d H_dᴴ + (M σ²/P) I)⁻¹ H_d`.
pub fn mmse(h_d: &CMat, power: f64, sigma2: f64) -> Result<Precoder> {
    let m = h_d.nrows();
    if h_d.norm() == 0.0 {
        return Err(Error::ZeroChannel("MMSE channel"));
    }
    let reg = m as f64 * sigma2 / power;
    let a = h_d * h_d.adjoint() + CMat::identity(m, m) * Complex64::from(reg);
    let raw = solve_hpd(&a, h_d, "MMSE system")?;
    Precoder::normalized(raw, power, "MMSE channel")
}
