//! Distributed secondary control of one voltage-source agent.
//!
//! Each period the agent fuses neighbor estimates with its own measurement by
//! robust broadcast gossip, then two PI loops turn the fused estimate into
//! reference offsets: the voltage loop restores the average voltage to `v*`,
//! the current loop pulls the unit's own current toward the estimated
//! average.

use serde::{Deserialize, Serialize};

/// Estimate of `[average voltage, average current]` exchanged between agents.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConsensusVector {
    pub voltage: f64,
    pub current: f64,
}

impl ConsensusVector {
    pub fn new(voltage: f64, current: f64) -> Self {
        ConsensusVector { voltage, current }
    }
}

/// Local measurement `[ṽ_u, ĩ_u]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub voltage: f64,
    pub current: f64,
}

impl Measurement {
    pub fn new(voltage: f64, current: f64) -> Self {
        Measurement { voltage, current }
    }

    pub fn as_vector(&self) -> ConsensusVector {
        ConsensusVector::new(self.voltage, self.current)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentState {
    pub a: ConsensusVector,
    /// Consensus weight `β_u = 1/V`.
    pub beta: f64,
    /// Secondary period index.
    pub k: u64,
}

impl AgentState {
    /// Fresh agent whose estimate starts at its own measurement.
    pub fn from_measurement(m: &Measurement, vset_size: usize, k: u64) -> Self {
        AgentState { a: m.as_vector(), beta: 1.0 / vset_size as f64, k }
    }
}

/// Robust broadcast gossip: `β m + (1-β) mean(received)`, or just `m` when
/// nothing arrived this period.
pub fn gossip_update(state: &AgentState, received: &[ConsensusVector], m: &Measurement) -> AgentState {
    let a = if received.is_empty() {
        m.as_vector()
    } else {
        let r = received.len() as f64;
        let (sv, si) = received.iter().fold((0.0, 0.0), |(v, i), x| (v + x.voltage, i + x.current));
        let b = state.beta;
        ConsensusVector::new(b * m.voltage + (1.0 - b) * (sv / r), b * m.current + (1.0 - b) * (si / r))
    };
    AgentState { a, beta: state.beta, k: state.k + 1 }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiGains {
    pub kp_v: f64,
    /// Integral gain of the voltage loop, 1/s.
    pub ki_v: f64,
    pub kp_c: f64,
    pub ki_c: f64,
    /// Bound on `|δx^v + δx^c|` in volts.
    pub windup_limit: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiPair {
    pub gains: PiGains,
    pub integrator_v: f64,
    pub integrator_c: f64,
    /// Voltage-restoration offset `δx^v`.
    pub delta_x_v: f64,
    /// Current-sharing offset `δx^c`.
    pub delta_x_c: f64,
}

impl PiPair {
    pub fn new(gains: PiGains) -> Self {
        PiPair { gains, integrator_v: 0.0, integrator_c: 0.0, delta_x_v: 0.0, delta_x_c: 0.0 }
    }

    pub fn total_offset(&self) -> f64 {
        self.delta_x_v + self.delta_x_c
    }
}

/// One forward-Euler step of both loops.
///
/// `e_v = v* - v̄` and `e_c = ī - ĩ`. When the summed output saturates, a
/// loop whose error pushes further into the limit keeps its previous
/// integrator value.
pub fn pi_step(pi: &PiPair, a: &AgentState, m: &Measurement, v_star: f64, dt: f64) -> PiPair {
    let g = pi.gains;
    let lim = g.windup_limit;
    let e_v = v_star - a.a.voltage;
    let e_c = a.a.current - m.current;

    let mut iv = pi.integrator_v + g.ki_v * e_v * dt;
    let mut ic = pi.integrator_c + g.ki_c * e_c * dt;
    let total = g.kp_v * e_v + iv + g.kp_c * e_c + ic;
    if total > lim {
        if e_v > 0.0 {
            iv = pi.integrator_v;
        }
        if e_c > 0.0 {
            ic = pi.integrator_c;
        }
    } else if total < -lim {
        if e_v < 0.0 {
            iv = pi.integrator_v;
        }
        if e_c < 0.0 {
            ic = pi.integrator_c;
        }
    }
    iv = iv.clamp(-lim, lim);
    ic = ic.clamp(-lim, lim);

    let dxv = (g.kp_v * e_v + iv).clamp(-lim, lim);
    let dxc = (g.kp_c * e_c + ic).clamp(-lim - dxv, lim - dxv);
    PiPair { gains: g, integrator_v: iv, integrator_c: ic, delta_x_v: dxv, delta_x_c: dxc }
}

/// `x_ref + δx^c + δx^v`, the droop reference handed to the converter.
pub fn corrected_reference(x_ref: f64, pi: &PiPair) -> f64 {
    x_ref + pi.delta_x_c + pi.delta_x_v
}
