//! Single-user pipeline: MRT precoding with the RIS profile chosen by either
//! the lifted SDP relaxation or a convex-concave iteration on the vector
//! problem.
//!
//! With MRT the receive MSE depends on `v` only through `‖H̄ᴴv‖`, so both
//! solvers minimize `f(v) = ‖H̄ᴴv‖² − (2/√P)‖H̄ᴴv‖`, which is the MSE
//! divided by `P` up to a constant.

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::channel::ChannelRealization;
use crate::linalg::{hermitian_eigen, quadratic_form, unit_vector, CMat, CVec};
use crate::lorisma::{project_to_constellation, QuantizedConstellation};
use crate::risma::RisProfile;
use crate::sdr::{gaussian_randomize, leading_eigenvector, sdp_solve, SdpProblem, SdpSettings};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SingleUeInstance {
    /// `(N+1)×M` composite channel.
    pub h_bar: CMat,
    pub power: f64,
    pub sigma2: f64,
}

impl SingleUeInstance {
    pub fn new(h_bar: CMat, power: f64, sigma2: f64) -> Result<Self> {
        if h_bar.nrows() < 2 || h_bar.ncols() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "single-UE composite channel is {}x{}",
                h_bar.nrows(),
                h_bar.ncols()
            )));
        }
        if !(power > 0.0) || !(sigma2 > 0.0) {
            return Err(Error::InvalidConfig("power and noise must be > 0".into()));
        }
        Ok(Self { h_bar, power, sigma2 })
    }

    pub fn from_realization(channels: &ChannelRealization, power: f64, sigma2: f64) -> Result<Self> {
        if channels.num_ues() != 1 {
            return Err(Error::DimensionMismatch(format!("{} UEs in a single-UE instance", channels.num_ues())));
        }
        Self::new(channels.h_bar[0].clone(), power, sigma2)
    }

    pub fn num_elements(&self) -> usize {
        self.h_bar.nrows() - 1
    }

    /// `R = H̄H̄ᴴ`, so that `‖H̄ᴴv‖² = vᴴRv`.
    pub fn gram(&self) -> CMat {
        &self.h_bar * self.h_bar.adjoint()
    }

    /// Effective channel `H̄ᴴv`; the MRT precoder is aligned with it.
    pub fn effective(&self, v: &CVec) -> CVec {
        self.h_bar.adjoint() * v
    }

    pub fn objective(&self, v: &CVec) -> f64 {
        let g = self.effective(v).norm();
        g * g - 2.0 * g / self.power.sqrt()
    }

    /// `log₂(1 + P‖H̄ᴴv‖²/σ²)`.
    pub fn rate(&self, v: &CVec) -> f64 {
        (1.0 + self.power * self.effective(v).norm_squared() / self.sigma2).log2()
    }
}

pub fn mse_after_mrt(instance: &SingleUeInstance, v: &CVec) -> Result<f64> {
    let g = instance.effective(v).norm();
    if !(g > 0.0) {
        return Err(Error::ZeroChannel("single-UE effective channel"));
    }
    let p = instance.power;
    Ok(p * g * g - 2.0 * p.sqrt() * g + 1.0 + instance.sigma2)
}

/// Disk projection of entries `1..N` with the last entry reset to 1.
fn project_feasible(v: &CVec) -> CVec {
    let n = v.len();
    let mut out = v.clone();
    for z in out.iter_mut().take(n - 1) {
        let r = z.norm();
        if r > 1.0 {
            *z /= r;
        }
    }
    out[n - 1] = Complex64::new(1.0, 0.0);
    out
}

/// Rescales a randomization sample so its last entry is 1, then projects.
fn normalize_sample(xi: &CVec) -> CVec {
    let n = xi.len();
    let last = xi[n - 1];
    if last.norm() > 1e-300 {
        project_feasible(&(xi / last))
    } else {
        let mut phases = xi.map(|z| if z.norm() > 0.0 { z / z.norm() } else { Complex64::new(0.0, 0.0) });
        phases[n - 1] = Complex64::new(1.0, 0.0);
        phases
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct P3Options {
    pub sdp: SdpSettings,
    pub randomizations: usize,
}

impl Default for P3Options {
    fn default() -> Self {
        Self {
            sdp: SdpSettings::default(),
            randomizations: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct P3Solution {
    #[serde(skip)]
    pub profile: RisProfile,
    pub objective: f64,
    /// Objective of the lifted relaxation, a lower bound on `objective`.
    pub relaxed_objective: f64,
    /// Trace `tr(RV)` at the relaxed optimum.
    pub trace: f64,
}

/// Lifted relaxation: with `t = tr(RV)` the objective is `t − (2/√P)√t`,
/// convex in `t` with its minimum at `t = 1/P`. The feasible traces form the
/// interval `[t_min, t_max]` given by two SDPs, so the relaxed optimum is the
/// convex combination of their solutions that hits the clamped target.
pub fn solve_p3<R: Rng + ?Sized>(instance: &SingleUeInstance, options: &P3Options, rng: &mut R) -> Result<P3Solution> {
    let n = instance.h_bar.nrows();
    let gram = instance.gram();
    let pinned = [n - 1];
    let low = sdp_solve(&SdpProblem::unit_box(gram.clone(), &pinned)?, &options.sdp)?;
    let high = sdp_solve(&SdpProblem::unit_box(-gram.clone(), &pinned)?, &options.sdp)?;
    let t_of = |v: &CMat| crate::linalg::trace_product(&gram, v).re.max(0.0);
    let (t_min, t_max) = (t_of(&low.v), t_of(&high.v));
    let target = (1.0 / instance.power).clamp(t_min, t_max);
    let lambda = if t_max > t_min { (target - t_min) / (t_max - t_min) } else { 1.0 };
    let relaxed = &high.v * Complex64::from(lambda) + &low.v * Complex64::from(1.0 - lambda);
    let trace = t_of(&relaxed);
    let relaxed_objective = trace - 2.0 * trace.sqrt() / instance.power.sqrt();

    let mut best = gaussian_randomize(
        &relaxed,
        options.randomizations.max(1),
        normalize_sample,
        |v| instance.objective(v),
        rng,
    )
    .vector;
    let mut best_obj = instance.objective(&best);
    for cand in [unit_vector(n, n - 1), normalize_sample(&leading_eigenvector(&relaxed))] {
        let obj = instance.objective(&cand);
        if obj < best_obj {
            best = cand;
            best_obj = obj;
        }
    }
    Ok(P3Solution {
        profile: RisProfile::new(best),
        objective: best_obj,
        relaxed_objective,
        trace,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DcSolution {
    #[serde(skip)]
    pub profile: RisProfile,
    pub objective: f64,
    /// Objective after every outer iteration, starting with the initial point.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

const INNER_MAX_ITER: usize = 2000;

/// Minimizes `vᴴRv − Re(bᴴv)` over the feasible set by projected gradient
/// with backtracking, starting at `v`.
fn minimize_surrogate(gram: &CMat, b: &CVec, start: &CVec, step0: f64) -> CVec {
    let q = |v: &CVec| quadratic_form(gram, v) - b.dotc(v).re;
    let mut v = start.clone();
    let mut value = q(&v);
    let mut step = step0;
    for _ in 0..INNER_MAX_ITER {
        // dq = 2 Re(gradᴴ dv)
        let grad = gram * &v - b * Complex64::from(0.5);
        let mut accepted = None;
        for _ in 0..60 {
            let cand = project_feasible(&(&v - &grad * Complex64::from(step)));
            let d = &cand - &v;
            let bound = value + 2.0 * grad.dotc(&d).re + d.norm_squared() / step;
            let cand_value = q(&cand);
            if cand_value <= bound + 1e-15 * value.abs() {
                accepted = Some((cand, cand_value, d.norm()));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, cand_value, moved)) = accepted else { break };
        let done = moved <= 1e-12 * (1.0 + v.norm()) || cand_value >= value;
        if cand_value <= value {
            v = cand;
            value = cand_value;
        }
        if done {
            break;
        }
        step *= 2.0;
    }
    v
}

/// Convex-concave iteration from `start`: the concave term `−(2/√P)‖H̄ᴴv‖`
/// is replaced by its tangent at the current point and the resulting convex
/// quadratic is minimized by projected gradient.
pub fn solve_p2_dc_from(instance: &SingleUeInstance, start: &CVec, tol: f64, max_iter: usize) -> Result<DcSolution> {
    let n = instance.h_bar.nrows();
    if start.len() != n {
        return Err(Error::DimensionMismatch(format!("start has {} entries, expected {n}", start.len())));
    }
    let gram = instance.gram();
    let lambda_max = hermitian_eigen(&gram).0[n - 1];
    if !(lambda_max > 0.0) {
        return Err(Error::ZeroChannel("single-UE composite channel"));
    }
    let c = 2.0 / instance.power.sqrt();
    let mut v = project_feasible(start);
    let mut obj = instance.objective(&v);
    let mut trace = vec![obj];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let s = quadratic_form(&gram, &v).max(0.0).sqrt();
        let b = if s > 0.0 { &gram * &v * Complex64::from(c / s) } else { CVec::zeros(n) };
        let next = minimize_surrogate(&gram, &b, &v, 1.0 / lambda_max);
        let next_obj = instance.objective(&next);
        let change = obj - next_obj;
        if next_obj <= obj {
            v = next;
            obj = next_obj;
        }
        trace.push(obj);
        if change.abs() <= tol * obj.abs().max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }
    Ok(DcSolution {
        profile: RisProfile::new(v),
        objective: obj,
        objective_trace: trace,
        iterations,
        converged,
    })
}

/// Runs the iteration from the RIS-off profile and from the profile that
/// co-phases every RIS path with the direct path; keeps the better result.
pub fn solve_p2_dc(instance: &SingleUeInstance, tol: f64, max_iter: usize) -> Result<DcSolution> {
    let n = instance.h_bar.nrows();
    let gram = instance.gram();
    let mut aligned = CVec::from_element(n, Complex64::new(1.0, 0.0));
    for i in 0..n - 1 {
        let r = gram[(i, n - 1)];
        if r.norm() > 0.0 {
            aligned[i] = r / r.norm();
        }
    }
    let a = solve_p2_dc_from(instance, &unit_vector(n, n - 1), tol, max_iter)?;
    let b = solve_p2_dc_from(instance, &aligned, tol, max_iter)?;
    Ok(if b.objective < a.objective { b } else { a })
}

/// Every element switched on. With co-phased elements each added element
/// only increases `‖bᵀH̃‖`, so this is the optimal on/off pattern.
pub fn optimal_binary_activation(n: usize) -> Result<Vec<u8>> {
    if n == 0 {
        return Err(Error::InvalidConfig("binary activation needs N >= 1".into()));
    }
    Ok(vec![1; n + 1])
}

/// Snaps entries `1..N` onto the quantized constellation; the last stays 1.
pub fn quantize_profile(profile: &RisProfile, q: &QuantizedConstellation) -> RisProfile {
    let n = profile.v.len();
    let mut v = profile.v.clone();
    for z in v.iter_mut().take(n - 1) {
        *z = project_to_constellation(*z, q);
    }
    v[n - 1] = Complex64::new(1.0, 0.0);
    RisProfile::new(v)
}
