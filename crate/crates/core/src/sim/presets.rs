//! The three case-study scenarios, as code.
//!
//! Nine units share a 48 V bus; units 2, 5, 6 and 9 start as the VSC set.
//! The load is a constant-power sink stepping from 720 W to 1440 W at 4.5 s.
//! In the jamming scenarios a jammer switched on at 3 s silences units 5 and 9.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::scenario::{LoadConfig, LoadStep, NetworkConfig, ScenarioConfig, TimingConfig, UnitSpec};
use crate::grid::LoadModel;
use crate::powertalk::PtConfig;
use crate::secondary::PiGains;
use crate::wireless::{JammerSpec, NodeGeometry, Point};
use crate::DerId;

/// Fabricated station layout in meters, indexed by unit.
pub const POSITIONS: [(f64, f64); 9] = [
    (10.0, 555.0),
    (90.0, 420.0),
    (490.0, 430.0),
    (270.0, 590.0),
    (160.0, 330.0),
    (220.0, 460.0),
    (470.0, 290.0),
    (360.0, 525.0),
    (320.0, 330.0),
];

/// Feeder resistances in ohms.
pub const LINE_RESISTANCES: [f64; 9] = [0.08, 0.06, 0.12, 0.10, 0.15, 0.07, 0.09, 0.11, 0.14];

pub const NAMES: [&str; 3] = ["baseline", "jam-no-defense", "jam-with-defense"];

pub fn geometry() -> NodeGeometry {
    NodeGeometry {
        positions: POSITIONS.iter().map(|&(x, y)| Point { x, y }).collect(),
        rho: 175.0,
        pathloss_exponent: 3.0,
        ref_loss_db: 40.05,
        tx_power_dbm: 16.0,
        sensitivity_dbm: -91.34,
    }
}

pub fn jammer() -> JammerSpec {
    JammerSpec { position: Point { x: 250.0, y: 250.0 }, range: 175.0, active_from: 3.0, active_to: 1.0e9 }
}

pub fn pt_config() -> PtConfig {
    PtConfig {
        t_slot: 0.0025,
        gamma: 0.2,
        tau: 0.0005,
        f_pc: 10_000.0,
        s_rep: 1,
        m_blank: 4,
        l_period: 100,
        d_span: 8,
        epsilon_lc: None,
    }
}

pub fn gains() -> PiGains {
    PiGains { kp_v: 0.8, ki_v: 12.0, kp_c: 0.3, ki_c: 6.0, windup_limit: 4.8 }
}

pub fn baseline() -> ScenarioConfig {
    ScenarioConfig {
        name: String::from("baseline"),
        v_star: 48.0,
        v_min: 43.2,
        i_max: 13.0,
        duration: 7.5,
        seed: 1,
        line_seed: 7,
        units: (0..9)
            .map(|u| UnitSpec {
                id: DerId::from_index(u),
                x_ref: 48.0,
                r_virtual: 0.3,
                r_line: Some(LINE_RESISTANCES[u]),
                i_csc: 2.0,
            })
            .collect(),
        initial_vset: vec![DerId(2), DerId(5), DerId(6), DerId(9)],
        load: LoadConfig {
            initial: LoadModel::ConstantPower { d: 720.0 },
            steps: vec![LoadStep { t: 4.5, load: LoadModel::ConstantPower { d: 1440.0 } }],
        },
        timing: TimingConfig { t_sc: 0.025, tau_d: 0.005 },
        adc_sigma: 0.01,
        geometry: geometry(),
        jammers: Vec::new(),
        network: NetworkConfig { p_drop: 0.05, n_det: 8 },
        powertalk: pt_config(),
        secondary: gains(),
        defense: false,
    }
}

pub fn jam_no_defense() -> ScenarioConfig {
    ScenarioConfig { name: String::from("jam-no-defense"), jammers: vec![jammer()], ..baseline() }
}

pub fn jam_with_defense() -> ScenarioConfig {
    ScenarioConfig { name: String::from("jam-with-defense"), defense: true, ..jam_no_defense() }
}

/// Looks up a preset by name.
pub fn by_name(name: &str) -> Option<ScenarioConfig> {
    match name {
        "baseline" => Some(baseline()),
        "jam-no-defense" => Some(jam_no_defense()),
        "jam-with-defense" => Some(jam_with_defense()),
        _ => None,
    }
}
