//! Receive-power scaling with RIS size and the BS-antenna count needed to
//! reach a target rate.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{mean_rates, run_experiment, ExperimentSpec, Method, SweepVariable};
use crate::linalg::complex_normal;
use crate::{Error, Result};

/// Single-antenna BS, one RIS, i.i.d. Rayleigh links with pathloss
/// `d^{-β}` on each hop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerScalingConfig {
    /// Transmit power, linear mW.
    pub tx_power: f64,
    /// BS-UE distance.
    pub d: f64,
    /// BS-RIS distance.
    pub d1: f64,
    /// RIS-UE distance.
    pub d2: f64,
    pub beta_direct: f64,
    pub beta_bs_ris: f64,
    pub beta_ris_ue: f64,
}

impl Default for PowerScalingConfig {
    fn default() -> Self {
        Self {
            tx_power: 1.0,
            d: 90.0,
            d1: 25.0,
            d2: 70.0,
            beta_direct: 4.0,
            beta_bs_ris: 2.0,
            beta_ris_ue: 2.0,
        }
    }
}

impl PowerScalingConfig {
    pub fn validate(&self) -> Result<()> {
        let all = [self.tx_power, self.d, self.d1, self.d2];
        if all.iter().any(|x| !(*x > 0.0)) {
            return Err(Error::InvalidConfig("power scaling distances and power must be > 0".into()));
        }
        if [self.beta_direct, self.beta_bs_ris, self.beta_ris_ue].iter().any(|b| !(*b >= 0.0)) {
            return Err(Error::InvalidConfig("pathloss exponents must be >= 0".into()));
        }
        Ok(())
    }

    /// Variances `(γ_G, γ, γ_d)` of the BS-RIS, RIS-UE and direct gains.
    fn variances(&self) -> (f64, f64, f64) {
        (
            self.d1.powf(-self.beta_bs_ris),
            self.d2.powf(-self.beta_ris_ue),
            self.d.powf(-self.beta_direct),
        )
    }

    /// `P(π²/16 · γγ_G N² + γ_d)`.
    pub fn bound(&self, n: usize) -> f64 {
        let (gg, g, gd) = self.variances();
        self.tx_power * (PI * PI / 16.0 * g * gg * (n * n) as f64 + gd)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerScalingRow {
    pub n: usize,
    pub draws: usize,
    pub mean_power: f64,
    pub std_error: f64,
    pub bound: f64,
    pub ratio: f64,
}

/// Monte-Carlo mean receive power with every RIS element phase-aligned,
/// `φ_i = −arg(h_i) − arg(g_i)`, so each cascaded term is `|h_i||g_i|`.
pub fn power_scaling_study<R: Rng + ?Sized>(
    cfg: &PowerScalingConfig,
    n_values: &[usize],
    draws: usize,
    rng: &mut R,
) -> Result<Vec<PowerScalingRow>> {
    cfg.validate()?;
    if draws < 2 || n_values.iter().any(|&n| n == 0) {
        return Err(Error::InvalidConfig("power scaling needs N >= 1 and at least 2 draws".into()));
    }
    let (gg, g, gd) = cfg.variances();
    let mut rows = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let mut samples = Vec::with_capacity(draws);
        for _ in 0..draws {
            let mut y = complex_normal(rng) * gd.sqrt();
            for _ in 0..n {
                let h = complex_normal(rng) * g.sqrt();
                let gi = complex_normal(rng) * gg.sqrt();
                let phi = -h.arg() - gi.arg();
                y += h * Complex64::from_polar(1.0, phi) * gi;
            }
            samples.push(cfg.tx_power * y.norm_sqr());
        }
        let mean = samples.iter().sum::<f64>() / draws as f64;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
        let bound = cfg.bound(n);
        rows.push(PowerScalingRow {
            n,
            draws,
            mean_power: mean,
            std_error: (var / draws as f64).sqrt(),
            bound,
            ratio: mean / bound,
        });
    }
    Ok(rows)
}

/// Least-squares slope of `log(mean_power)` against `log(n)`.
pub fn log_log_slope(rows: &[PowerScalingRow]) -> f64 {
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| ((r.n as f64).ln(), r.mean_power.ln())).collect();
    let k = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / k, pts.iter().map(|p| p.1).sum::<f64>() / k);
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    sxy / sxx
}

pub fn write_power_scaling_csv<W: Write>(rows: &[PowerScalingRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AntennaRequirement {
    pub target: f64,
    /// Smallest grid `M` whose mean sum rate reaches the target.
    pub required_m: Option<usize>,
}

/// Mean sum rate of `method` over the antenna grid of `spec`, and the
/// smallest `M` reaching each target.
pub fn antenna_equivalence(
    targets: &[f64],
    method: Method,
    spec: &ExperimentSpec,
) -> Result<(Vec<(usize, f64)>, Vec<AntennaRequirement>)> {
    if spec.sweep.name != SweepVariable::NumAntennas {
        return Err(Error::InvalidConfig("antenna equivalence needs a num_antennas sweep".into()));
    }
    let mut spec = spec.clone();
    spec.methods = vec![method];
    let rows = run_experiment(&spec)?;
    let mut curve: Vec<(usize, f64)> =
        mean_rates(&rows).into_iter().map(|(_, m, mean, _)| (m as usize, mean)).collect();
    curve.sort_by_key(|c| c.0);
    let requirements = targets
        .iter()
        .map(|&target| AntennaRequirement {
            target,
            required_m: curve.iter().find(|(_, mean)| *mean >= target).map(|c| c.0),
        })
        .collect();
    Ok((curve, requirements))
}
