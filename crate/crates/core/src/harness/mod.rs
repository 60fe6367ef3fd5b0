//! Monte-Carlo experiment runner: presets, trial loops and CSV output.

mod presets;
mod scaling;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::channel::{generate_scenario, generate_single_ue, ChannelRealization, ScenarioConfig, SingleUeConfig};
use crate::lorisma::{lorisma_solve, LoRismaOptions};
use crate::precoders::{mmse, zf, zf_pseudo_inverse, Precoder};
use crate::risma::{risma_solve, sum_rate, RisProfile, SolverOptions};
use crate::single_ue::{solve_p2_dc, solve_p3, P3Options, SingleUeInstance};
use crate::linalg::unit_vector;
use crate::{Error, Result};

pub use presets::{preset, EXPERIMENTS};
pub use scaling::{
    log_log_slope,
    antenna_equivalence, power_scaling_study, write_power_scaling_csv, AntennaRequirement, PowerScalingConfig,
    PowerScalingRow,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentId {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    PowerScaling,
}

impl ExperimentId {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Fig2 => "fig2",
            Self::Fig3 => "fig3",
            Self::Fig4 => "fig4",
            Self::Fig5 => "fig5",
            Self::Fig6 => "fig6",
            Self::Fig7 => "fig7",
            Self::PowerScaling => "power_scaling",
        }
    }

    pub fn is_single_ue(self) -> bool {
        matches!(self, Self::Fig2 | Self::Fig3)
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::InvalidConfig(format!("unknown experiment '{s}'")))
    }
}

/// Precoding / RIS method. `Lorisma(None)` takes its bit count from a
/// `bits` sweep. `RismaDc` is the single-UE convex-concave variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Risma,
    RismaDc,
    Lorisma(Option<u32>),
    Mmse,
    Zf,
    Mrt,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Risma => f.write_str("risma"),
            Self::RismaDc => f.write_str("risma-dc"),
            Self::Lorisma(None) => f.write_str("lorisma"),
            Self::Lorisma(Some(b)) => write!(f, "lorisma:{b}"),
            Self::Mmse => f.write_str("mmse"),
            Self::Zf => f.write_str("zf"),
            Self::Mrt => f.write_str("mrt"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "risma" => Self::Risma,
            "risma-dc" => Self::RismaDc,
            "lorisma" => Self::Lorisma(None),
            "mmse" => Self::Mmse,
            "zf" => Self::Zf,
            "mrt" => Self::Mrt,
            _ => match s.strip_prefix("lorisma:").map(str::parse::<u32>) {
                Some(Ok(b)) if (1..=16).contains(&b) => Self::Lorisma(Some(b)),
                _ => return Err(Error::InvalidConfig(format!("unknown method '{s}'"))),
            },
        })
    }
}

impl Serialize for Method {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    CellRadius,
    TxPowerDbm,
    NumUes,
    NumAntennas,
    Bits,
    UeDistance,
    /// RIS elements `N`; power-scaling study only.
    NumRisElements,
}

impl SweepVariable {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::CellRadius => "cell_radius",
            Self::TxPowerDbm => "tx_power_dbm",
            Self::NumUes => "num_ues",
            Self::NumAntennas => "num_antennas",
            Self::Bits => "bits",
            Self::UeDistance => "ue_distance",
            Self::NumRisElements => "num_ris_elements",
        }
    }

    fn is_integer(self) -> bool {
        matches!(self, Self::NumUes | Self::NumAntennas | Self::Bits | Self::NumRisElements)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub name: SweepVariable,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub experiment: ExperimentId,
    pub sweep: Sweep,
    pub trials: usize,
    /// Master seed; every trial stream is derived from it.
    pub seed: u64,
    pub methods: Vec<Method>,
    pub scenario: ScenarioConfig,
    pub single_ue: SingleUeConfig,
    pub solver: SolverOptions,
    pub lorisma: LoRismaOptions,
    pub power_scaling: PowerScalingConfig,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.trials == 0 {
            return bad("trials must be >= 1".into());
        }
        if self.sweep.values.is_empty() {
            return bad("sweep grid is empty".into());
        }
        let name = self.sweep.name;
        for &x in &self.sweep.values {
            if !x.is_finite() {
                return bad(format!("non-finite {} value", name.as_str()));
            }
            if name.is_integer() && (x < 1.0 || x.fract() != 0.0) {
                return bad(format!("{} values must be positive integers, got {x}", name.as_str()));
            }
            if matches!(name, SweepVariable::Bits) && x > 16.0 {
                return bad(format!("bits must be <= 16, got {x}"));
            }
            if matches!(name, SweepVariable::CellRadius | SweepVariable::UeDistance) && x <= 0.0 {
                return bad(format!("{} must be > 0", name.as_str()));
            }
        }
        let allowed: &[SweepVariable] = match self.experiment {
            ExperimentId::PowerScaling => &[SweepVariable::NumRisElements],
            id if id.is_single_ue() => &[SweepVariable::TxPowerDbm, SweepVariable::UeDistance],
            _ => &[
                SweepVariable::CellRadius,
                SweepVariable::TxPowerDbm,
                SweepVariable::NumUes,
                SweepVariable::NumAntennas,
                SweepVariable::Bits,
            ],
        };
        if !allowed.contains(&name) {
            return bad(format!("sweep '{}' is not available for {}", name.as_str(), self.experiment));
        }
        if self.experiment == ExperimentId::PowerScaling {
            return self.power_scaling.validate();
        }
        if self.methods.is_empty() {
            return bad("no methods selected".into());
        }
        for m in &self.methods {
            let ok = if self.experiment.is_single_ue() {
                matches!(m, Method::Risma | Method::RismaDc | Method::Mrt)
            } else {
                match m {
                    Method::RismaDc => false,
                    Method::Lorisma(None) => name == SweepVariable::Bits,
                    _ => true,
                }
            };
            if !ok {
                return bad(format!("method '{m}' is not available for {} with sweep {}", self.experiment, name.as_str()));
            }
        }
        if name == SweepVariable::Bits && !self.methods.iter().any(|m| matches!(m, Method::Lorisma(None))) {
            return bad("a bits sweep needs the 'lorisma' method".into());
        }
        self.solver.validate()?;
        self.lorisma.solver.validate()?;
        // Check every grid point's derived configuration up front.
        for &x in &self.sweep.values {
            if self.experiment.is_single_ue() {
                self.single_ue_at(x).validate()?;
            } else {
                self.scenario_at(x).validate()?;
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Applies a partial JSON object on top of this spec. Nested objects
    /// merge key by key; unknown keys are rejected.
    pub fn merged(&self, patch: &serde_json::Value) -> Result<Self> {
        let mut base = serde_json::to_value(self)?;
        merge_json(&mut base, patch);
        let spec: Self = serde_json::from_value(base)?;
        spec.validate()?;
        Ok(spec)
    }

    fn scenario_at(&self, x: f64) -> ScenarioConfig {
        let mut cfg = self.scenario.clone();
        match self.sweep.name {
            SweepVariable::CellRadius => cfg = cfg.with_cell_radius(x),
            SweepVariable::TxPowerDbm => cfg.tx_power_dbm = x,
            SweepVariable::NumUes => cfg.num_ues = x as usize,
            SweepVariable::NumAntennas => cfg.steering.num_bs_antennas = x as usize,
            _ => {}
        }
        cfg
    }

    fn single_ue_at(&self, x: f64) -> SingleUeConfig {
        let mut cfg = self.single_ue;
        if self.sweep.name == SweepVariable::UeDistance {
            cfg.ue_distance = x;
        }
        cfg
    }

    fn powers_at(&self, x: f64) -> (f64, f64) {
        let cfg = self.scenario_at(x);
        (cfg.tx_power(), cfg.noise_power())
    }
}

fn merge_json(base: &mut serde_json::Value, patch: &serde_json::Value) {
    match (base, patch) {
        (serde_json::Value::Object(b), serde_json::Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(k) {
                    Some(slot) => merge_json(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (slot, v) => *slot = v.clone(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: ExperimentId,
    pub method: Method,
    pub sweep_name: String,
    pub sweep_value: f64,
    pub trial: usize,
    pub sum_rate_bps_hz: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Only set for ZF rows: false when the channel was rank deficient and
    /// the pseudo-inverse was used instead.
    pub zf_feasible: Option<bool>,
    pub seed: u64,
}

pub const CSV_HEADER: [&str; 10] = [
    "experiment",
    "method",
    "sweep_name",
    "sweep_value",
    "trial",
    "sum_rate_bps_hz",
    "iterations",
    "converged",
    "zf_feasible",
    "seed",
];

/// RNG for one purpose within one trial. Streams depend only on their
/// coordinates, never on scheduling.
pub fn trial_rng(seed: u64, trial: usize, grid: u64, purpose: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(trial as u64).to_le_bytes());
    key[16..24].copy_from_slice(&grid.to_le_bytes());
    key[24..].copy_from_slice(&purpose.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Channel draws share one stream per trial across the grid so sweeps
/// compare methods on paired realizations.
const CHANNEL_STREAM: u64 = u64::MAX;

fn method_stream(m: Method) -> u64 {
    // FNV-1a of the label.
    m.to_string().bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

struct Outcome {
    sum_rate: f64,
    iterations: usize,
    converged: bool,
    zf_feasible: Option<bool>,
}

impl Outcome {
    fn closed_form(sum_rate: f64) -> Self {
        Self { sum_rate, iterations: 0, converged: true, zf_feasible: None }
    }
}

fn baseline_rate(p: &Precoder, channels: &ChannelRealization, sigma2: f64) -> Result<f64> {
    sum_rate(&RisProfile::off(channels.num_ris_elements()), p, channels, sigma2)
}

/// ZF, falling back to the pseudo-inverse when the Gram matrix is singular.
fn zf_outcome(channels: &ChannelRealization, power: f64, sigma2: f64) -> Result<Outcome> {
    let h_d = channels.direct_matrix();
    let (p, feasible) = match zf(&h_d, power) {
        Ok(p) => (p, true),
        Err(Error::Singular { .. }) => (zf_pseudo_inverse(&h_d, power)?, false),
        Err(e) => return Err(e),
    };
    Ok(Outcome { zf_feasible: Some(feasible), ..Outcome::closed_form(baseline_rate(&p, channels, sigma2)?) })
}

fn run_multi_ue(spec: &ExperimentSpec, gi: usize, trial: usize, methods: &[Method]) -> Result<Vec<(Method, Outcome)>> {
    let x = spec.sweep.values[gi];
    let cfg = spec.scenario_at(x);
    let (power, sigma2) = spec.powers_at(x);
    let (_, channels) = generate_scenario(&cfg, &mut trial_rng(spec.seed, trial, CHANNEL_STREAM, 0))?;
    methods
        .iter()
        .map(|&m| {
            let mut rng = trial_rng(spec.seed, trial, gi as u64, method_stream(m));
            let outcome = match m {
                Method::Risma => {
                    let r = risma_solve(&channels, power, sigma2, &spec.solver, &mut rng)?;
                    Outcome { sum_rate: r.sum_rate, iterations: r.iterations, converged: r.converged, zf_feasible: None }
                }
                Method::Lorisma(bits) => {
                    let b = bits.unwrap_or(x as u32);
                    let r = lorisma_solve(&channels, power, sigma2, b, &spec.lorisma, &mut rng)?;
                    Outcome { sum_rate: r.sum_rate, iterations: r.iterations, converged: r.converged, zf_feasible: None }
                }
                Method::Mmse => Outcome::closed_form(baseline_rate(&mmse(&channels.direct_matrix(), power, sigma2)?, &channels, sigma2)?),
                Method::Zf => zf_outcome(&channels, power, sigma2)?,
                Method::Mrt => {
                    let p = Precoder::normalized(channels.direct_matrix(), power, "MRT channel")?;
                    Outcome::closed_form(baseline_rate(&p, &channels, sigma2)?)
                }
                Method::RismaDc => unreachable!("rejected by validation"),
            };
            Ok((resolve_label(m, x), outcome))
        })
        .collect()
}

fn resolve_label(m: Method, x: f64) -> Method {
    match m {
        Method::Lorisma(None) => Method::Lorisma(Some(x as u32)),
        other => other,
    }
}

const DC_TOL: f64 = 1e-8;
const DC_MAX_ITER: usize = 500;

fn run_single_ue(spec: &ExperimentSpec, gi: usize, trial: usize, methods: &[Method]) -> Result<Vec<(Method, Outcome)>> {
    let x = spec.sweep.values[gi];
    let cfg = spec.single_ue_at(x);
    let (power, sigma2) = spec.powers_at(x);
    let (_, channels) = generate_single_ue(&cfg, &mut trial_rng(spec.seed, trial, CHANNEL_STREAM, 0))?;
    let inst = SingleUeInstance::from_realization(&channels, power, sigma2)?;
    let n = inst.num_elements();
    methods
        .iter()
        .map(|&m| {
            let mut rng = trial_rng(spec.seed, trial, gi as u64, method_stream(m));
            let outcome = match m {
                Method::Risma => {
                    let sol = solve_p3(&inst, &P3Options::default(), &mut rng)?;
                    Outcome { iterations: 1, ..Outcome::closed_form(inst.rate(&sol.profile.v)) }
                }
                Method::RismaDc => {
                    let sol = solve_p2_dc(&inst, DC_TOL, DC_MAX_ITER)?;
                    Outcome {
                        sum_rate: inst.rate(&sol.profile.v),
                        iterations: sol.iterations,
                        converged: sol.converged,
                        zf_feasible: None,
                    }
                }
                // MRT on the direct channel alone.
                Method::Mrt => Outcome::closed_form(inst.rate(&unit_vector(n + 1, n))),
                _ => unreachable!("rejected by validation"),
            };
            Ok((m, outcome))
        })
        .collect()
}

/// Runs every grid point × trial in parallel. Rows come back sorted by
/// grid index, method order in the spec, then trial.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    if spec.experiment == ExperimentId::PowerScaling {
        return Err(Error::InvalidConfig("power_scaling produces its own table; use power_scaling_study".into()));
    }
    let jobs: Vec<(usize, usize)> =
        (0..spec.sweep.values.len()).flat_map(|g| (0..spec.trials).map(move |t| (g, t))).collect();
    let results: Vec<Vec<(usize, usize, usize, ResultRow)>> = jobs
        .par_iter()
        .map(|&(gi, trial)| {
            let outcomes = if spec.experiment.is_single_ue() {
                run_single_ue(spec, gi, trial, &spec.methods)?
            } else {
                run_multi_ue(spec, gi, trial, &spec.methods)?
            };
            Ok(outcomes
                .into_iter()
                .enumerate()
                .map(|(mi, (method, o))| {
                    let row = ResultRow {
                        experiment: spec.experiment,
                        method,
                        sweep_name: spec.sweep.name.as_str().to_string(),
                        sweep_value: spec.sweep.values[gi],
                        trial,
                        sum_rate_bps_hz: o.sum_rate,
                        iterations: o.iterations,
                        converged: o.converged,
                        zf_feasible: o.zf_feasible,
                        seed: spec.seed,
                    };
                    (gi, mi, trial, row)
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut flat: Vec<_> = results.into_iter().flatten().collect();
    flat.sort_by_key(|(g, m, t, _)| (*g, *m, *t));
    Ok(flat.into_iter().map(|(_, _, _, r)| r).collect())
}

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.experiment.to_string(),
            r.method.to_string(),
            r.sweep_name.clone(),
            r.sweep_value.to_string(),
            r.trial.to_string(),
            r.sum_rate_bps_hz.to_string(),
            r.iterations.to_string(),
            r.converged.to_string(),
            r.zf_feasible.map_or(String::new(), |f| f.to_string()),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Mean sum rate per (method, sweep value). ZF rows from rank-deficient
/// trials are left out.
pub fn mean_rates(rows: &[ResultRow]) -> Vec<(Method, f64, f64, usize)> {
    let mut acc: Vec<(Method, f64, f64, usize)> = Vec::new();
    for r in rows.iter().filter(|r| r.zf_feasible != Some(false)) {
        match acc.iter_mut().find(|(m, x, _, _)| *m == r.method && *x == r.sweep_value) {
            Some(slot) => {
                slot.2 += r.sum_rate_bps_hz;
                slot.3 += 1;
            }
            None => acc.push((r.method, r.sweep_value, r.sum_rate_bps_hz, 1)),
        }
    }
    for slot in &mut acc {
        slot.2 /= slot.3 as f64;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_spec(methods: &str) -> ExperimentSpec {
        let mut spec = preset(ExperimentId::Fig4);
        spec.sweep.values = vec![100.0];
        spec.trials = 2;
        spec.methods = methods.split(',').map(|m| m.parse().unwrap()).collect();
        spec.scenario.num_ues = 3;
        spec.scenario.steering.ris_nx = 3;
        spec.scenario.steering.ris_ny = 3;
        spec
    }

    #[test]
    fn method_labels_round_trip() {
        for s in ["risma", "risma-dc", "lorisma", "lorisma:3", "mmse", "zf", "mrt"] {
            assert_eq!(s.parse::<Method>().unwrap().to_string(), s);
        }
        for s in ["lorisma:0", "lorisma:17", "lorisma:x", "foo"] {
            assert!(s.parse::<Method>().is_err());
        }
    }

    #[test]
    fn one_trial_one_method_one_row() {
        let mut spec = tiny_spec("mmse");
        spec.trials = 1;
        let rows = run_experiment(&spec).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].sum_rate_bps_hz >= 0.0);
    }

    #[test]
    fn validation_rejects_bad_specs() {
        let mut spec = tiny_spec("mmse");
        spec.trials = 0;
        assert!(spec.validate().is_err());
        let mut spec = tiny_spec("mmse");
        spec.sweep.values.clear();
        assert!(spec.validate().is_err());
        let spec = tiny_spec("risma-dc");
        assert!(spec.validate().is_err());
        let spec = tiny_spec("lorisma");
        assert!(spec.validate().is_err());
        let mut spec = tiny_spec("mmse");
        spec.sweep.name = SweepVariable::UeDistance;
        assert!(spec.validate().is_err());
        let mut spec = tiny_spec("mmse");
        spec.sweep.values = vec![-5.0];
        assert!(spec.validate().is_err());
    }

    #[test]
    fn merge_rejects_unknown_keys() {
        let base = tiny_spec("mmse");
        let ok = base.merged(&serde_json::json!({"trials": 5, "scenario": {"num_ues": 4}})).unwrap();
        assert_eq!(ok.trials, 5);
        assert_eq!(ok.scenario.num_ues, 4);
        assert_eq!(ok.scenario.steering, base.scenario.steering);
        assert!(base.merged(&serde_json::json!({"trails": 5})).is_err());
        assert!(base.merged(&serde_json::json!({"scenario": {"num_uez": 4}})).is_err());
    }

    #[test]
    fn trial_streams_are_order_independent() {
        let spec = tiny_spec("risma,mmse,zf");
        let rows = run_experiment(&spec).unwrap();
        // Running trial 1 alone gives the same numbers as within the batch.
        let single = run_multi_ue(&spec, 0, 1, &spec.methods).unwrap();
        for (m, o) in single {
            let row = rows.iter().find(|r| r.method == m && r.trial == 1).unwrap();
            assert_eq!(row.sum_rate_bps_hz, o.sum_rate);
        }
    }

    #[test]
    fn zf_rows_carry_feasibility() {
        let spec = tiny_spec("zf,mmse");
        let rows = run_experiment(&spec).unwrap();
        assert!(rows.iter().filter(|r| r.method == Method::Zf).all(|r| r.zf_feasible == Some(true)));
        assert!(rows.iter().filter(|r| r.method == Method::Mmse).all(|r| r.zf_feasible.is_none()));
        let mut crowded = tiny_spec("zf");
        crowded.scenario.num_ues = 12;
        let rows = run_experiment(&crowded).unwrap();
        assert!(rows.iter().all(|r| r.zf_feasible == Some(false)));
        assert!(mean_rates(&rows).is_empty());
    }

    #[test]
    fn csv_has_fixed_header() {
        let rows = run_experiment(&tiny_spec("mmse,zf")).unwrap();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "experiment,method,sweep_name,sweep_value,trial,sum_rate_bps_hz,iterations,converged,zf_feasible,seed"
        );
        assert_eq!(lines.count(), rows.len());
    }
}
