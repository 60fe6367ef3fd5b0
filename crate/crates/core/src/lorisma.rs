//! Low-resolution RIS: elements are either off or take one of `2^b` phases.
//!
//! The RIS step lifts `[v; 1]` to an SDP over `(N+2)×(N+2)` matrices, solves
//! the relaxation and recovers a feasible profile by Gaussian randomization.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::linalg::{quadratic_form, CMat, CVec};
use crate::precoders::Precoder;
use crate::risma::{alternate, v_quadratic, RisProfile, SolveReport, SolverOptions};
use crate::sdr::{gaussian_randomize, sdp_admm, AdmmState, SdpProblem, SdpSettings};
use crate::{Error, Result};

/// `Q̄ = {0} ∪ {e^{j2πm/2^b}}`, stored with 0 first and then by `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedConstellation {
    pub bits: u32,
    pub points: Vec<Complex64>,
}

impl QuantizedConstellation {
    pub fn new(bits: u32) -> Result<Self> {
        if bits == 0 || bits > 16 {
            return Err(Error::InvalidConfig(format!("phase resolution must be 1..=16 bits, got {bits}")));
        }
        let levels = 1usize << bits;
        let mut points = vec![Complex64::new(0.0, 0.0)];
        points.extend((0..levels).map(|m| Complex64::from_polar(1.0, TAU * m as f64 / levels as f64)));
        Ok(Self { bits, points })
    }

    pub fn levels(&self) -> usize {
        1 << self.bits
    }

    pub fn contains(&self, z: Complex64, tol: f64) -> bool {
        self.points.iter().any(|q| (q - z).norm() <= tol)
    }
}

/// Nearest point of `{2πm/2^b}` in angular distance; ties go to the smaller `m`.
pub fn quantize_phase(phi: f64, bits: u32) -> f64 {
    let levels = 1u64 << bits;
    let step = TAU / levels as f64;
    let x = phi.rem_euclid(TAU) / step;
    let below = x.floor();
    let m = if x - below > 0.5 { below as u64 + 1 } else { below as u64 };
    // A tie between the last level and the wrap-around point prefers m = 0.
    let m = if m >= levels || (x - below == 0.5 && below as u64 == levels - 1) { 0 } else { m };
    step * m as f64
}

fn unit_phase(z: Complex64, bits: u32) -> Complex64 {
    Complex64::from_polar(1.0, quantize_phase(z.arg(), bits))
}

/// Euclidean nearest point of `Q̄`; ties prefer 0, then the smaller `m`.
pub fn project_to_constellation(z: Complex64, q: &QuantizedConstellation) -> Complex64 {
    let mut best = q.points[0];
    let mut best_d = z.norm();
    for p in &q.points[1..] {
        let d = (z - p).norm();
        if d < best_d {
            best = *p;
            best_d = d;
        }
    }
    best
}

/// `H̃_k = [[H̄_k W Wᴴ H̄_kᴴ, −H̄_k w_k], [−w_kᴴ H̄_kᴴ, 0]]`.
pub fn build_augmented(channels: &ChannelRealization, w: &CMat) -> Result<Vec<CMat>> {
    if w.nrows() != channels.num_antennas() || w.ncols() != channels.num_ues() {
        return Err(Error::DimensionMismatch(format!(
            "W is {}x{}, expected {}x{}",
            w.nrows(),
            w.ncols(),
            channels.num_antennas(),
            channels.num_ues()
        )));
    }
    let n1 = channels.num_ris_elements() + 1;
    Ok(channels
        .h_bar
        .iter()
        .enumerate()
        .map(|(k, h)| {
            let t = h * w;
            let mut out = CMat::zeros(n1 + 1, n1 + 1);
            out.view_mut((0, 0), (n1, n1)).copy_from(&(&t * t.adjoint()));
            let col = -t.column(k);
            out.view_mut((0, n1), (n1, 1)).copy_from(&col);
            out.view_mut((n1, 0), (1, n1)).copy_from(&col.adjoint());
            out
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoRismaOptions {
    pub solver: SolverOptions,
    /// Gaussian randomizations per RIS step.
    pub randomizations: usize,
    pub sdp_tol: f64,
    pub sdp_max_iter: usize,
}

impl Default for LoRismaOptions {
    fn default() -> Self {
        Self {
            solver: SolverOptions::default(),
            randomizations: 500,
            sdp_tol: 1e-3,
            sdp_max_iter: 5000,
        }
    }
}

impl LoRismaOptions {
    pub fn sdp_settings(&self) -> SdpSettings {
        SdpSettings {
            tol: self.sdp_tol,
            max_iter: self.sdp_max_iter,
            ..SdpSettings::default()
        }
    }
}

/// Outcome of one quantized RIS step.
#[derive(Debug, Clone)]
pub struct VStep {
    pub v: RisProfile,
    /// `vᴴAv − 2Re(vᴴz)` of the returned profile.
    pub objective: f64,
    /// Optimal value of the relaxation (a lower bound on `objective`).
    pub relaxed_objective: f64,
    pub sdp_converged: bool,
    pub state: AdmmState,
}

/// Turns a randomized `(N+2)`-sample into feasible profiles: `v = c* ŵ`
/// rotated so that its last entry is 1, and the same RIS entries with the
/// last entry simply reset to 1.
fn recover(sample: &CVec, q: &QuantizedConstellation) -> [CVec; 2] {
    let n = sample.len() - 2;
    let c = unit_phase(sample[n + 1], q.bits);
    let mut v = CVec::from_fn(n + 1, |i, _| {
        if i < n {
            c.conj() * project_to_constellation(sample[i], q)
        } else {
            c.conj() * unit_phase(sample[n], q.bits)
        }
    });
    let mut reset = v.clone();
    reset[n] = Complex64::new(1.0, 0.0);
    let rot = v[n].conj();
    for i in 0..n {
        v[i] = project_to_constellation(v[i] * rot, q);
    }
    v[n] = Complex64::new(1.0, 0.0);
    [v, reset]
}

/// Quantized RIS step. `incumbent`, when given, is kept if no recovered
/// candidate improves on it; `warm` seeds the SDP solver.
pub fn lorisma_v_step_with<R: Rng + ?Sized>(
    channels: &ChannelRealization,
    w: &Precoder,
    q: &QuantizedConstellation,
    options: &LoRismaOptions,
    rng: &mut R,
    incumbent: Option<&CVec>,
    warm: Option<&AdmmState>,
) -> Result<VStep> {
    if w.w.norm() == 0.0 {
        return Err(Error::ZeroChannel("precoder in quantized RIS update"));
    }
    let n = channels.num_ris_elements();
    let cost = build_augmented(channels, &w.w)?
        .into_iter()
        .reduce(|a, b| a + b)
        .expect("at least one UE");
    let problem = SdpProblem::unit_box(cost, &[n, n + 1])?;
    // An unconverged relaxation still yields usable samples; the incumbent
    // guards against a poor one.
    let sol = sdp_admm(&problem, &options.sdp_settings(), warm);

    let (a, z) = v_quadratic(&w.w, channels)?;
    let objective = |v: &CVec| quadratic_form(&a, v) - 2.0 * v.dotc(&z).re;

    let mut best_v: Option<CVec> = incumbent.cloned();
    let mut best_obj = best_v.as_ref().map_or(f64::INFINITY, objective);
    let picked = gaussian_randomize(
        &sol.v,
        options.randomizations.max(1),
        |sample| {
            let [rotated, reset] = recover(sample, q);
            let (ro, rs) = (objective(&rotated), objective(&reset));
            let (v, _) = if rs < ro { (reset, rs) } else { (rotated, ro) };
            // Carry the physical profile in the first N+1 slots.
            let mut out = CVec::zeros(n + 2);
            out.rows_mut(0, n + 1).copy_from(&v);
            out
        },
        |cand| objective(&cand.rows(0, n + 1).into_owned()),
        rng,
    );
    if picked.objective < best_obj {
        best_obj = picked.objective;
        best_v = Some(picked.vector.rows(0, n + 1).into_owned());
    }
    Ok(VStep {
        v: RisProfile::new(best_v.expect("randomization yields a candidate")),
        objective: best_obj,
        relaxed_objective: sol.objective,
        sdp_converged: sol.converged,
        state: sol.state,
    })
}

/// Quantized RIS step without incumbent or warm start.
pub fn lorisma_v_step<R: Rng + ?Sized>(
    channels: &ChannelRealization,
    w: &Precoder,
    q: &QuantizedConstellation,
    options: &LoRismaOptions,
    rng: &mut R,
) -> Result<RisProfile> {
    Ok(lorisma_v_step_with(channels, w, q, options, rng, None, None)?.v)
}

/// Alternates the quantized RIS step with the precoder update.
pub fn lorisma_solve<R: Rng + ?Sized>(
    channels: &ChannelRealization,
    power: f64,
    sigma2: f64,
    bits: u32,
    options: &LoRismaOptions,
    rng: &mut R,
) -> Result<SolveReport> {
    let q = QuantizedConstellation::new(bits)?;
    let mut incumbent = RisProfile::off(channels.num_ris_elements()).v;
    let mut warm: Option<AdmmState> = None;
    let mut unconverged = 0;
    let mut report = alternate(channels, power, sigma2, &options.solver, rng, |w, rng| {
        let step = lorisma_v_step_with(channels, w, &q, options, rng, Some(&incumbent), warm.as_ref())?;
        incumbent = step.v.v.clone();
        warm = Some(step.state);
        unconverged += usize::from(!step.sdp_converged);
        Ok(step.v)
    })?;
    report.unconverged_subproblems = unconverged;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{complex_normal_mat, complex_normal_vec, hermitian_defect};
    use crate::risma::{random_precoder, smse, solve_v_system};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn random_channels(rng: &mut ChaCha8Rng, n: usize, m: usize, k: usize) -> ChannelRealization {
        ChannelRealization::from_composite((0..k).map(|_| complex_normal_mat(rng, n + 1, m)).collect())
    }

    fn all_profiles(n: usize, q: &QuantizedConstellation) -> Vec<CVec> {
        let mut out = vec![CVec::from_element(n + 1, Complex64::new(1.0, 0.0))];
        for i in 0..n {
            out = out
                .into_iter()
                .flat_map(|v| {
                    q.points.iter().map(move |p| {
                        let mut v = v.clone();
                        v[i] = *p;
                        v
                    })
                })
                .collect();
        }
        out
    }

    #[test]
    fn quantize_examples() {
        assert_eq!(quantize_phase(0.9 * PI, 1), PI);
        assert_eq!(quantize_phase(FRAC_PI_4, 2), 0.0);
        assert_eq!(quantize_phase(TAU - 0.01, 3), 0.0);
        // Tie across the wrap-around point prefers m = 0.
        assert_eq!(quantize_phase(TAU - FRAC_PI_4, 2), 0.0);
    }

    #[test]
    fn project_examples() {
        let q1 = QuantizedConstellation::new(1).unwrap();
        let q2 = QuantizedConstellation::new(2).unwrap();
        assert_eq!(project_to_constellation(Complex64::new(0.0, 0.0), &q2), Complex64::new(0.0, 0.0));
        let z = Complex64::from_polar(2.0, PI / 8.0);
        assert!((project_to_constellation(z, &q2) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert_eq!(project_to_constellation(Complex64::new(0.4, 0.0), &q1), Complex64::new(0.0, 0.0));
        // |0.5 − 0| = |0.5 − 1|: the tie keeps the element off.
        assert_eq!(project_to_constellation(Complex64::new(0.5, 0.0), &q1), Complex64::new(0.0, 0.0));
        assert_eq!(q2.points.len(), 5);
    }

    #[test]
    fn augmented_matches_smse() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let ch = random_channels(&mut rng, 5, 3, 2);
            let w = random_precoder(3, 2, 1.7, &mut rng).unwrap();
            let mut v = complex_normal_vec(&mut rng, 6);
            v[5] = Complex64::new(1.0, 0.0);
            let mut vb = CVec::zeros(7);
            vb.rows_mut(0, 6).copy_from(&v);
            vb[6] = Complex64::new(1.0, 0.0);
            let blocks = build_augmented(&ch, &w.w).unwrap();
            let s2 = 0.2;
            let total: f64 = blocks.iter().map(|h| quadratic_form(h, &vb)).sum::<f64>() + 2.0 * (1.0 + s2);
            let direct = smse(&RisProfile::new(v), &w, &ch, s2).unwrap();
            assert!((total - direct).abs() <= 1e-9 * direct.max(1.0));
            for h in &blocks {
                assert!(hermitian_defect(h) <= 1e-12);
            }
        }
        let ch = random_channels(&mut rng, 3, 2, 2);
        let zero = build_augmented(&ch, &CMat::zeros(2, 2)).unwrap();
        assert!(zero.iter().all(|h| h.norm() == 0.0));
        assert!(build_augmented(&ch, &CMat::zeros(3, 2)).is_err());
    }

    #[test]
    fn v_step_is_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ch = random_channels(&mut rng, 6, 2, 2);
        let w = random_precoder(2, 2, 1.0, &mut rng).unwrap();
        for bits in 1..=3 {
            let q = QuantizedConstellation::new(bits).unwrap();
            let v = lorisma_v_step(&ch, &w, &q, &LoRismaOptions::default(), &mut rng).unwrap();
            assert_eq!(v.v[6], Complex64::new(1.0, 0.0));
            assert!(v.v.iter().take(6).all(|z| q.contains(*z, 1e-12)));
        }
    }

    #[test]
    fn v_step_near_exhaustive_optimum_and_above_relaxation() {
        let q = QuantizedConstellation::new(1).unwrap();
        let opts = LoRismaOptions { sdp_tol: 1e-7, sdp_max_iter: 50_000, ..LoRismaOptions::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let ch = random_channels(&mut rng, 2, 1, 1);
            let w = random_precoder(1, 1, 1.0, &mut rng).unwrap();
            let s2 = 0.1;
            let brute = all_profiles(2, &q)
                .into_iter()
                .map(|v| smse(&RisProfile::new(v), &w, &ch, s2).unwrap())
                .fold(f64::INFINITY, f64::min);
            let step = lorisma_v_step_with(&ch, &w, &q, &opts, &mut rng, None, None).unwrap();
            let got = smse(&step.v, &w, &ch, s2).unwrap();
            assert!(got <= brute * 1.05, "step {got} vs exhaustive {brute}");
            let relaxed = step.relaxed_objective + 1.0 + s2;
            assert!(relaxed <= brute + 1e-3 * brute.abs().max(1.0));
        }
    }

    #[test]
    fn fine_quantization_approaches_continuous_step() {
        // Average gap to the unconstrained update shrinks as bits grow.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s2 = 1.0;
        let bits = [1, 2, 4, 8];
        let mut gaps = [0.0; 4];
        for _ in 0..20 {
            // Weak RIS rows keep the unconstrained optimum inside the unit disk.
            let mut ch = random_channels(&mut rng, 4, 2, 1);
            ch.h_bar[0].rows_mut(0, 4).scale_mut(0.2);
            let w = random_precoder(2, 1, 1.0, &mut rng).unwrap();
            let (v_bar, _) = solve_v_system(&w, &ch, s2).unwrap();
            let reference = smse(&RisProfile::new(v_bar), &w, &ch, s2).unwrap();
            for (i, &b) in bits.iter().enumerate() {
                let q = QuantizedConstellation::new(b).unwrap();
                let v = lorisma_v_step(&ch, &w, &q, &LoRismaOptions::default(), &mut rng).unwrap();
                gaps[i] += smse(&v, &w, &ch, s2).unwrap() - reference;
            }
        }
        for i in 1..4 {
            assert!(gaps[i] <= gaps[i - 1] + 1e-3, "gaps {gaps:?}");
        }
    }

    #[test]
    fn solve_reports_quantized_profile() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ch = random_channels(&mut rng, 6, 3, 2);
        let q = QuantizedConstellation::new(2).unwrap();
        let rep = lorisma_solve(&ch, 1.0, 0.1, 2, &LoRismaOptions::default(), &mut rng).unwrap();
        assert!(rep.v_final.v.iter().take(6).all(|z| q.contains(*z, 1e-12)));
        assert!(rep.iterations >= 1 && rep.iterations <= 100);
    }

    proptest! {
        #[test]
        fn quantize_is_idempotent_and_periodic(phi in -20.0f64..20.0, bits in 1u32..6) {
            let once = quantize_phase(phi, bits);
            prop_assert_eq!(quantize_phase(once, bits), once);
            let shifted = quantize_phase(phi + TAU, bits);
            let d = (shifted - once).rem_euclid(TAU);
            prop_assert!(d.min(TAU - d) < 1e-9);
            prop_assert!((0.0..TAU).contains(&once));
        }
    }
}
