//! Sum-MSE and sum-rate evaluation plus the alternating RIS/precoder optimizer.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::linalg::{complex_normal_mat, solve_hpd, unit_vector, CMat, CVec};
use crate::precoders::Precoder;
use crate::{Error, Result};

/// How the RIS update is scaled after solving its linear system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VNormalization {
    /// Return `v̄/‖v̄‖` as the iterate.
    Paper,
    /// Keep `v̄` with its last entry at 1.
    FixedLast,
}

/// Choice of the power multiplier in the precoder update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MuMode {
    /// `μ = Kσ²/P` followed by Frobenius normalization.
    Heuristic,
    /// `μ` found so that the unnormalized solution meets the budget.
    Bisection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOptions {
    pub epsilon: f64,
    pub max_iter: usize,
    pub v_normalization: VNormalization,
    pub mu_mode: MuMode,
    /// Relative tolerance on `‖W‖_F²/P − 1` in bisection mode.
    pub bisection_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-4,
            max_iter: 100,
            v_normalization: VNormalization::Paper,
            mu_mode: MuMode::Heuristic,
            bisection_tol: 1e-6,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || self.max_iter == 0 || !(self.bisection_tol > 0.0) {
            return Err(Error::InvalidConfig(
                "solver needs epsilon > 0, max_iter >= 1 and bisection_tol > 0".into(),
            ));
        }
        Ok(())
    }
}

/// RIS coefficients `v = [α_1 e^{-jφ_1}, …, α_N e^{-jφ_N}, v_{N+1}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RisProfile {
    pub v: CVec,
}

impl RisProfile {
    pub fn new(v: CVec) -> Self {
        Self { v }
    }

    /// RIS switched off: `e_{N+1}`.
    pub fn off(n: usize) -> Self {
        Self::new(unit_vector(n + 1, n))
    }

    pub fn num_elements(&self) -> usize {
        self.v.len() - 1
    }

    /// Rescales so the last entry is 1, then clips magnitudes to 1.
    pub fn physical(&self) -> Result<Self> {
        Ok(extract_physical(&self.v)?.to_profile())
    }
}

/// Amplitudes in `[0, 1]` and phases in `[0, 2π)` of each RIS element.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhysicalProfile {
    pub alphas: Vec<f64>,
    pub phis: Vec<f64>,
}

impl PhysicalProfile {
    pub fn to_profile(&self) -> RisProfile {
        let n = self.alphas.len();
        let mut v = CVec::zeros(n + 1);
        for i in 0..n {
            v[i] = Complex64::from_polar(self.alphas[i], -self.phis[i]);
        }
        v[n] = Complex64::new(1.0, 0.0);
        RisProfile::new(v)
    }
}

pub fn extract_physical(v: &CVec) -> Result<PhysicalProfile> {
    let n = v.len() - 1;
    let last = v[n];
    if last.norm() == 0.0 || !last.norm().is_finite() {
        return Err(Error::ZeroReference);
    }
    let (mut alphas, mut phis) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for i in 0..n {
        let z = v[i] / last;
        alphas.push(z.norm().min(1.0));
        phis.push(if z.norm() == 0.0 { 0.0 } else { z.conj().arg().rem_euclid(TAU) });
    }
    Ok(PhysicalProfile { alphas, phis })
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub smse_trace: Vec<f64>,
    /// Sum rate on the physical profile with the precoder refreshed for it.
    pub sum_rate: f64,
    /// Sum rate of the last raw iterate pair.
    pub sum_rate_iterate: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Inner relaxations that stopped at their iteration cap.
    pub unconverged_subproblems: usize,
    #[serde(skip)]
    pub v_final: RisProfile,
    pub physical: PhysicalProfile,
    #[serde(skip)]
    pub w_final: Precoder,
}

fn check_dims(v: &CVec, w: &CMat, channels: &ChannelRealization) -> Result<()> {
    let h = &channels.h_bar[0];
    if v.len() != h.nrows() || w.nrows() != h.ncols() || w.ncols() != channels.num_ues() {
        return Err(Error::DimensionMismatch(format!(
            "v has {} entries, W is {}x{}, H̄_k is {}x{} with K = {}",
            v.len(),
            w.nrows(),
            w.ncols(),
            h.nrows(),
            h.ncols(),
            channels.num_ues()
        )));
    }
    Ok(())
}

/// `G[k, j] = vᴴ H̄_k w_j`.
pub fn effective_gains(v: &CVec, w: &CMat, channels: &ChannelRealization) -> Result<CMat> {
    check_dims(v, w, channels)?;
    let k = channels.num_ues();
    let mut gains = CMat::zeros(k, w.ncols());
    for (i, h) in channels.h_bar.iter().enumerate() {
        let row = v.adjoint() * h * w;
        gains.row_mut(i).copy_from(&row);
    }
    Ok(gains)
}

fn smse_from_gains(gains: &CMat, sigma2: f64) -> f64 {
    let k = gains.nrows();
    let mut total = k as f64 * (1.0 + sigma2);
    for i in 0..k {
        total += gains.row(i).norm_squared() - 2.0 * gains[(i, i)].re;
    }
    total
}

fn sum_rate_from_gains(gains: &CMat, sigma2: f64) -> f64 {
    (0..gains.nrows())
        .map(|i| {
            let signal = gains[(i, i)].norm_sqr();
            let interference = gains.row(i).norm_squared() - signal;
            (1.0 + signal / (interference + sigma2)).log2()
        })
        .sum()
}

pub fn smse(v: &RisProfile, w: &Precoder, channels: &ChannelRealization, sigma2: f64) -> Result<f64> {
    Ok(smse_from_gains(&effective_gains(&v.v, &w.w, channels)?, sigma2))
}

pub fn sum_rate(v: &RisProfile, w: &Precoder, channels: &ChannelRealization, sigma2: f64) -> Result<f64> {
    Ok(sum_rate_from_gains(&effective_gains(&v.v, &w.w, channels)?, sigma2))
}

/// Data of the RIS subproblem: `A = Σ_k H̄_k W Wᴴ H̄_kᴴ` and `z = Σ_k H̄_k w_k`,
/// so that the sum-MSE equals `vᴴAv − 2Re(vᴴz) + K(1+σ²)`.
pub fn v_quadratic(w: &CMat, channels: &ChannelRealization) -> Result<(CMat, CVec)> {
    let n1 = channels.h_bar[0].nrows();
    check_dims(&CVec::zeros(n1), w, channels)?;
    let mut a = CMat::zeros(n1, n1);
    let mut z = CVec::zeros(n1);
    for (k, h) in channels.h_bar.iter().enumerate() {
        let t = h * w;
        a.gemm(Complex64::new(1.0, 0.0), &t, &t.adjoint(), Complex64::new(1.0, 0.0));
        z += t.column(k);
    }
    Ok((a, z))
}

/// Solves `(A + σ²I) v̄ = z − ν e_{N+1}` with `ν` chosen so that `v̄_{N+1} = 1`.
/// Returns `(v̄, ν)`.
pub fn solve_v_system(w: &Precoder, channels: &ChannelRealization, sigma2: f64) -> Result<(CVec, Complex64)> {
    if w.w.norm() == 0.0 {
        return Err(Error::ZeroChannel("precoder in RIS update"));
    }
    let (mut a, z) = v_quadratic(&w.w, channels)?;
    let n1 = a.nrows();
    for i in 0..n1 {
        a[(i, i)] += sigma2;
    }
    let mut rhs = CMat::zeros(n1, 2);
    rhs.set_column(0, &z);
    rhs[(n1 - 1, 1)] = Complex64::new(1.0, 0.0);
    let sol = solve_hpd(&a, &rhs, "RIS update system")?;
    let bz = sol.column(0);
    let be = sol.column(1);
    let nu = (bz[n1 - 1] - 1.0) / be[n1 - 1];
    let v_bar: CVec = bz - be * nu;
    Ok((v_bar, nu))
}

pub fn update_v(
    w: &Precoder,
    channels: &ChannelRealization,
    sigma2: f64,
    options: &SolverOptions,
) -> Result<RisProfile> {
    let (v_bar, _) = solve_v_system(w, channels, sigma2)?;
    Ok(match options.v_normalization {
        VNormalization::Paper => {
            let norm = v_bar.norm();
            RisProfile::new(v_bar / Complex64::from(norm))
        }
        VNormalization::FixedLast => RisProfile::new(v_bar),
    })
}

/// `H̄ = [H̄_1ᴴv, …, H̄_Kᴴv]` (M×K).
pub fn effective_channel(v: &RisProfile, channels: &ChannelRealization) -> CMat {
    let cols: Vec<CVec> = channels.h_bar.iter().map(|h| h.adjoint() * &v.v).collect();
    CMat::from_columns(&cols)
}

/// Precoder update with the multiplier it used.
pub fn update_w_with_mu(
    v: &RisProfile,
    channels: &ChannelRealization,
    power: f64,
    sigma2: f64,
    options: &SolverOptions,
) -> Result<(Precoder, f64)> {
    if v.v.len() != channels.h_bar[0].nrows() {
        return Err(Error::DimensionMismatch("RIS profile length".into()));
    }
    let h = effective_channel(v, channels);
    if h.norm() == 0.0 {
        return Err(Error::ZeroChannel("effective channels in precoder update"));
    }
    match options.mu_mode {
        MuMode::Heuristic => {
            let m = h.nrows();
            let mu = channels.num_ues() as f64 * sigma2 / power;
            let a = &h * h.adjoint() + CMat::identity(m, m) * Complex64::from(mu);
            let raw = solve_hpd(&a, &h, "precoder update system")?;
            Ok((Precoder::normalized(raw, power, "precoder update")?, mu))
        }
        MuMode::Bisection => bisection_precoder(&h, power, options.bisection_tol),
    }
}

pub fn update_w(
    v: &RisProfile,
    channels: &ChannelRealization,
    power: f64,
    sigma2: f64,
    options: &SolverOptions,
) -> Result<Precoder> {
    Ok(update_w_with_mu(v, channels, power, sigma2, options)?.0)
}

/// `W(μ) = (H̄H̄ᴴ + μI)⁻¹H̄` evaluated through the SVD `H̄ = U S Vᴴ`, where
/// `‖W(μ)‖² = Σ s²/(s²+μ)²` is decreasing in `μ`.
fn bisection_precoder(h: &CMat, power: f64, tol: f64) -> Result<(Precoder, f64)> {
    let svd = h.clone().svd(true, true);
    let (u, vt) = (svd.u.expect("requested U"), svd.v_t.expect("requested Vᴴ"));
    let s = &svd.singular_values;
    let floor = 1e-13 * s.max();
    let norm2 = |mu: f64| -> f64 {
        s.iter()
            .filter(|&&x| x > floor)
            .map(|&x| x * x / ((x * x + mu) * (x * x + mu)))
            .sum()
    };
    let mu = if norm2(0.0) <= power {
        0.0
    } else {
        let (mut lo, mut hi) = (0.0_f64, (s.norm_squared() / power).sqrt());
        while norm2(hi) > power {
            hi *= 2.0;
        }
        // Bisect to machine precision; the scalar evaluations are cheap.
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if norm2(mid) > power {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    };
    let scale = CVec::from_fn(s.len(), |i, _| {
        let x = s[i];
        Complex64::from(if x > floor { x / (x * x + mu) } else { 0.0 })
    });
    let mut us = u.clone();
    for (j, mut col) in us.column_iter_mut().enumerate() {
        col *= scale[j];
    }
    let w = us * vt;
    let achieved = w.norm_squared();
    if mu > 0.0 && (achieved / power - 1.0).abs() > tol {
        return Err(Error::InvalidConfig(format!(
            "power bisection stalled at ‖W‖²/P = {}",
            achieved / power
        )));
    }
    Ok((
        Precoder {
            w,
            power_budget: power,
        },
        mu,
    ))
}

/// Random Gaussian precoder with `‖W‖_F² = P`.
pub fn random_precoder<R: Rng + ?Sized>(m: usize, k: usize, power: f64, rng: &mut R) -> Result<Precoder> {
    Precoder::normalized(complex_normal_mat(rng, m, k), power, "random precoder")
}

/// Shared alternating loop: RIS step from the current precoder, then the
/// precoder update, until the relative SMSE change drops to `ε`.
pub(crate) fn alternate<R, F>(
    channels: &ChannelRealization,
    power: f64,
    sigma2: f64,
    options: &SolverOptions,
    rng: &mut R,
    mut v_step: F,
) -> Result<SolveReport>
where
    R: Rng + ?Sized,
    F: FnMut(&Precoder, &mut R) -> Result<RisProfile>,
{
    options.validate()?;
    let n = channels.num_ris_elements();
    let mut w = random_precoder(channels.num_antennas(), channels.num_ues(), power, rng)?;
    let mut v = RisProfile::off(n);
    let mut prev = smse(&v, &w, channels, sigma2)?;
    let mut trace = vec![prev];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < options.max_iter {
        iterations += 1;
        v = v_step(&w, rng)?;
        w = update_w(&v, channels, power, sigma2, options)?;
        let current = smse(&v, &w, channels, sigma2)?;
        trace.push(current);
        if (current - prev).abs() <= options.epsilon * current.abs() {
            converged = true;
            break;
        }
        prev = current;
    }

    let sum_rate_iterate = sum_rate(&v, &w, channels, sigma2)?;
    let physical = extract_physical(&v.v)?;
    let v_final = physical.to_profile();
    let w_final = update_w(&v_final, channels, power, sigma2, options)?;
    let sum_rate = sum_rate(&v_final, &w_final, channels, sigma2)?;
    Ok(SolveReport {
        smse_trace: trace,
        sum_rate,
        sum_rate_iterate,
        iterations,
        converged,
        unconverged_subproblems: 0,
        v_final,
        physical,
        w_final,
    })
}

/// Alternating optimization of the RIS profile and the precoder.
pub fn risma_solve<R: Rng + ?Sized>(
    channels: &ChannelRealization,
    power: f64,
    sigma2: f64,
    options: &SolverOptions,
    rng: &mut R,
) -> Result<SolveReport> {
    alternate(channels, power, sigma2, options, rng, |w, _| {
        update_v(w, channels, sigma2, options)
    })
}
