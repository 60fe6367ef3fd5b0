//! Built-in experiment definitions at desk scale (100 trials, thinned grids).

use super::{ExperimentId, ExperimentSpec, Method, PowerScalingConfig, Sweep, SweepVariable};
use crate::channel::{ScenarioConfig, SingleUeConfig};
use crate::lorisma::LoRismaOptions;
use crate::risma::SolverOptions;

pub const EXPERIMENTS: [(ExperimentId, &str); 7] = [
    (ExperimentId::Fig2, "single UE at 90 m: rate vs transmit power, RIS-aided vs MRT without RIS"),
    (ExperimentId::Fig3, "single UE: rate vs BS-UE distance, RIS-aided vs MRT without RIS"),
    (ExperimentId::Fig4, "multi-UE sum rate vs cell radius: RISMA, MMSE, ZF"),
    (ExperimentId::Fig5, "multi-UE sum rate vs number of UEs: RISMA, MMSE, ZF"),
    (ExperimentId::Fig6, "multi-UE sum rate vs number of BS antennas: RISMA, MMSE"),
    (ExperimentId::Fig7, "multi-UE sum rate vs phase resolution: Lo-RISMA, RISMA, MMSE, ZF"),
    (ExperimentId::PowerScaling, "receive power vs RIS size with co-phased elements, against the N² bound"),
];

fn methods(list: &[&str]) -> Vec<Method> {
    list.iter().map(|m| m.parse().expect("preset method")).collect()
}

pub fn preset(id: ExperimentId) -> ExperimentSpec {
    let (name, values, list): (SweepVariable, Vec<f64>, &[&str]) = match id {
        ExperimentId::Fig2 => (SweepVariable::TxPowerDbm, vec![0.0, 10.0, 20.0, 30.0, 40.0], &["risma", "mrt"]),
        ExperimentId::Fig3 => (SweepVariable::UeDistance, vec![30.0, 50.0, 70.0, 90.0], &["risma", "mrt"]),
        ExperimentId::Fig4 => {
            (SweepVariable::CellRadius, vec![50.0, 75.0, 100.0, 125.0, 150.0], &["risma", "mmse", "zf"])
        }
        ExperimentId::Fig5 => (SweepVariable::NumUes, vec![12.0, 48.0, 100.0], &["risma", "mmse", "zf"]),
        ExperimentId::Fig6 => {
            (SweepVariable::NumAntennas, vec![4.0, 8.0, 12.0, 16.0, 24.0, 32.0], &["risma", "mmse"])
        }
        ExperimentId::Fig7 => (SweepVariable::Bits, vec![1.0, 2.0, 3.0, 4.0], &["lorisma", "risma", "mmse", "zf"]),
        ExperimentId::PowerScaling => (SweepVariable::NumRisElements, vec![16.0, 32.0, 64.0, 128.0, 256.0], &[]),
    };
    ExperimentSpec {
        experiment: id,
        sweep: Sweep { name, values },
        trials: if id == ExperimentId::PowerScaling { 2000 } else { 100 },
        seed: 1,
        methods: methods(list),
        scenario: ScenarioConfig::table1(100.0),
        single_ue: SingleUeConfig::reference(90.0),
        solver: SolverOptions::default(),
        lorisma: LoRismaOptions::default(),
        power_scaling: PowerScalingConfig::default(),
    }
}
