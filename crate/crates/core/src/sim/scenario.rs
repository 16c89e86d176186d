use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::grid::{ControlMode, DerUnit, LoadModel, LoadSchedule};
use crate::powertalk::PtConfig;
use crate::rng::{self, streams};
use crate::secondary::PiGains;
use crate::wireless::{adjacency, JammerSpec, NodeGeometry};
use crate::{DerId, Micros};

/// Range from which unspecified feeder resistances are drawn, ohms.
pub const LINE_RESISTANCE_RANGE: (f64, f64) = (0.05, 0.15);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitSpec {
    pub id: DerId,
    pub x_ref: f64,
    pub r_virtual: f64,
    /// Feeder resistance; drawn from `line_seed` when absent.
    #[serde(default)]
    pub r_line: Option<f64>,
    pub i_csc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadStep {
    pub t: f64,
    pub load: LoadModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadConfig {
    pub initial: LoadModel,
    #[serde(default)]
    pub steps: Vec<LoadStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingConfig {
    /// Secondary control period `T^sc`, seconds.
    pub t_sc: f64,
    /// Upper bound of the random access delay, seconds.
    pub tau_d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub p_drop: f64,
    /// Consecutive silent periods before a unit declares itself jammed.
    pub n_det: u32,
}

/// Full description of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub v_star: f64,
    pub v_min: f64,
    pub i_max: f64,
    /// Simulated time, seconds.
    pub duration: f64,
    /// Seed of all run-time randomness (packet drops, access delays, ADC noise).
    pub seed: u64,
    /// Seed used to draw unspecified feeder resistances.
    pub line_seed: u64,
    pub units: Vec<UnitSpec>,
    pub initial_vset: Vec<DerId>,
    pub load: LoadConfig,
    pub timing: TimingConfig,
    /// ADC noise standard deviation, volts.
    pub adc_sigma: f64,
    pub geometry: NodeGeometry,
    #[serde(default)]
    pub jammers: Vec<JammerSpec>,
    pub network: NetworkConfig,
    pub powertalk: PtConfig,
    pub secondary: PiGains,
    /// Run the power-talk reconfiguration strategy.
    pub defense: bool,
}

/// One violated scenario invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation(pub String);

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl ScenarioConfig {
    pub fn unit_count(&self) -> usize {
        self.units.len()
    }

    pub fn vset_size(&self) -> usize {
        self.initial_vset.len()
    }

    pub fn initial_vset(&self) -> BTreeSet<DerId> {
        self.initial_vset.iter().copied().collect()
    }

    /// Feeder resistances with unspecified entries drawn uniformly from
    /// [`LINE_RESISTANCE_RANGE`]. One draw is consumed per unit whether or not
    /// it is used, so fixing one unit never changes the others.
    pub fn line_resistances(&self) -> Vec<f64> {
        let mut r = rng::stream(self.line_seed, streams::LINE_RESISTANCE);
        let (lo, hi) = LINE_RESISTANCE_RANGE;
        self.units
            .iter()
            .map(|u| {
                let drawn = lo + (hi - lo) * r.random::<f64>();
                u.r_line.unwrap_or(drawn)
            })
            .collect()
    }

    /// Electrical units in their initial modes.
    pub fn build_units(&self) -> Vec<DerUnit> {
        let vset = self.initial_vset();
        self.units
            .iter()
            .zip(self.line_resistances())
            .map(|(s, r_line)| DerUnit {
                id: s.id,
                mode: if vset.contains(&s.id) { ControlMode::Vsc } else { ControlMode::Csc },
                x_ref: s.x_ref,
                r_virtual: s.r_virtual,
                r_line,
                i_csc: s.i_csc,
                pt_deviation: 0.0,
            })
            .collect()
    }

    /// Load schedule on the microsecond clock. Call after [`validate`].
    pub fn load_schedule(&self) -> LoadSchedule {
        LoadSchedule {
            initial: self.load.initial,
            steps: self
                .load
                .steps
                .iter()
                .map(|s| (Micros::from_secs(s.t).unwrap_or(Micros(u64::MAX)), s.load))
                .collect(),
        }
    }
}

fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

/// Checks every scenario invariant and cross-module precondition. An empty
/// list means the scenario is runnable.
pub fn validate(cfg: &ScenarioConfig) -> Vec<Violation> {
    let mut v: Vec<String> = Vec::new();
    let n = cfg.units.len();

    if n < 2 {
        v.push("at least two units are required".into());
    }
    for (i, u) in cfg.units.iter().enumerate() {
        if u.id != DerId::from_index(i) {
            v.push(format!("units[{i}].id = {} but ids must be 1..U in order", u.id));
        }
        if !positive(u.r_virtual) {
            v.push(format!("unit {}: r_virtual must be > 0", u.id));
        }
        if let Some(r) = u.r_line {
            if !(r.is_finite() && r >= 0.0) {
                v.push(format!("unit {}: r_line must be >= 0", u.id));
            }
        }
        if !(u.i_csc.is_finite() && u.i_csc >= 0.0) {
            v.push(format!("unit {}: i_csc must be >= 0", u.id));
        }
        if !u.x_ref.is_finite() {
            v.push(format!("unit {}: x_ref must be finite", u.id));
        }
    }

    let vset: BTreeSet<DerId> = cfg.initial_vset.iter().copied().collect();
    if vset.is_empty() {
        v.push("initial_vset must contain at least one unit".into());
    }
    if vset.len() != cfg.initial_vset.len() {
        v.push("initial_vset contains duplicates".into());
    }
    for id in &vset {
        if id.0 == 0 || id.0 as usize > n {
            v.push(format!("initial_vset references unknown unit {id}"));
        }
    }

    if !positive(cfg.v_star) {
        v.push("v_star must be > 0".into());
    }
    if (cfg.v_min - 0.9 * cfg.v_star).abs() > 1e-9 * cfg.v_star.abs().max(1.0) {
        v.push(format!("v_min = {} must equal 0.9·v_star = {}", cfg.v_min, 0.9 * cfg.v_star));
    }
    if !positive(cfg.i_max) {
        v.push("i_max must be > 0".into());
    }
    if !(cfg.adc_sigma.is_finite() && cfg.adc_sigma >= 0.0) {
        v.push("adc_sigma must be >= 0".into());
    }

    let t_sc = cfg.timing.t_sc;
    match Micros::from_secs(t_sc) {
        Some(m) if m.0 > 0 => {}
        _ => v.push("timing.t_sc must be a positive whole number of microseconds".into()),
    }
    if !(cfg.timing.tau_d >= 0.0 && cfg.timing.tau_d < t_sc) {
        v.push(format!("timing.tau_d = {} must satisfy 0 <= tau_d < t_sc = {t_sc}", cfg.timing.tau_d));
    }
    match (Micros::from_secs(cfg.duration), Micros::from_secs(t_sc)) {
        (Some(d), Some(p)) if p.0 > 0 && d.0 > 0 && d.0 % p.0 == 0 => {}
        _ => v.push("duration must be a positive multiple of t_sc".into()),
    }

    if !cfg.load.initial.is_well_formed() {
        v.push("load.initial is malformed".into());
    }
    let mut last = 0.0;
    for (i, s) in cfg.load.steps.iter().enumerate() {
        if !s.load.is_well_formed() {
            v.push(format!("load.steps[{i}] is malformed"));
        }
        if Micros::from_secs(s.t).is_none() || s.t < last {
            v.push(format!("load.steps[{i}].t must be on the microsecond grid and non-decreasing"));
        }
        last = s.t;
    }

    let g = &cfg.geometry;
    if g.len() != n {
        v.push(format!("geometry has {} positions for {n} units", g.len()));
    } else if n > 0 && adjacency(g).is_err() {
        v.push("wireless topology is not connected".into());
    }
    if !positive(g.rho) {
        v.push("geometry.rho must be > 0".into());
    } else if g.budget_mismatch_db() > 0.1 {
        v.push(format!("geometry.rho = {} disagrees with the link budget by {:.3} dB", g.rho, g.budget_mismatch_db()));
    }
    for (i, j) in cfg.jammers.iter().enumerate() {
        if j.active_from.partial_cmp(&j.active_to) != Some(core::cmp::Ordering::Less) {
            v.push(format!("jammers[{i}]: active_from must precede active_to"));
        }
        if !(j.range.is_finite() && j.range >= 0.0) {
            v.push(format!("jammers[{i}]: range must be >= 0"));
        }
    }

    if !(0.0..=1.0).contains(&cfg.network.p_drop) {
        v.push("network.p_drop must be in [0, 1]".into());
    }
    if cfg.network.n_det < 1 {
        v.push("network.n_det must be >= 1".into());
    }

    let p = &cfg.secondary;
    if ![p.kp_v, p.ki_v, p.kp_c, p.ki_c].iter().all(|x| x.is_finite() && *x >= 0.0) {
        v.push("secondary gains must be finite and non-negative".into());
    }
    if !positive(p.windup_limit) {
        v.push("secondary.windup_limit must be > 0".into());
    }

    let pt = &cfg.powertalk;
    if !positive(pt.f_pc) {
        v.push("powertalk.f_pc must be > 0".into());
    } else if libm::round(pt.f_pc * t_sc) < 1.0 {
        v.push("powertalk.f_pc·t_sc must give at least one sample per period".into());
    }
    v.extend(pt.violations(cfg.v_star, t_sc, n));

    v.into_iter().map(Violation).collect()
}
