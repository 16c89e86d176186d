//! Power talk: binary signaling over the DC bus by nudging droop references.
//!
//! During a power-talk channel (PTCh) window secondary control is suspended,
//! every unit runs in VSC mode and the units take turns, one slot at a time,
//! broadcasting their row of the wireless connectivity matrix. A `1` raises
//! the transmitter's reference by `γ`, a `0` lowers it; every other unit
//! averages its post-transient ADC samples and compares against the `γ = 0`
//! bus level. Load changes are caught by tracking slot means; the protocol
//! then pauses, inserts blank slots and re-learns the threshold.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::grid::{solve_bus, BusSolution, ControlMode, DerUnit, GridError, LoadSchedule, VoltageSampler};
use crate::reconfig::{ConnectivityMatrix, MatrixSource};
use crate::{DerId, Micros};

/// Power-talk channel parameters. Durations are in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PtConfig {
    /// Slot duration `T^pt`.
    pub t_slot: f64,
    /// Reference deviation `γ` in volts.
    pub gamma: f64,
    /// Transient guard `τ` discarded at the start of each slot.
    pub tau: f64,
    /// ADC sampling rate in hertz.
    pub f_pc: f64,
    /// Repetitions per bit.
    pub s_rep: u32,
    /// Blank slots inserted after a detected load change.
    pub m_blank: u32,
    /// A PTCh starts every `l_period` secondary periods.
    pub l_period: u32,
    /// Secondary periods reserved for one PTCh.
    pub d_span: u32,
    /// Load-change margin in volts; defaults to `3σ + max|Δv|`.
    #[serde(default)]
    pub epsilon_lc: Option<f64>,
}

impl PtConfig {
    /// Steady-state samples per slot, `f_pc (T^pt - τ)`.
    pub fn samples_per_slot(&self) -> usize {
        libm::round(self.f_pc * (self.t_slot - self.tau)).max(0.0) as usize
    }

    pub fn slots_needed(&self, units: usize) -> usize {
        units * self.s_rep as usize * units.saturating_sub(1)
    }

    /// Wall-clock length of a PTCh without load events.
    pub fn duration(&self, units: usize) -> f64 {
        self.slots_needed(units) as f64 * self.t_slot
    }

    /// Violated invariants, as human-readable strings.
    pub fn violations(&self, v_star: f64, t_sc: f64, units: usize) -> Vec<alloc::string::String> {
        use alloc::format;
        let mut out = Vec::new();
        if !(self.gamma > 0.0 && self.gamma <= 0.02 * v_star) {
            out.push(format!("powertalk.gamma = {} must be in (0, 0.02·v_star]", self.gamma));
        }
        if !(self.t_slot > self.tau && self.tau >= 0.0) {
            out.push(format!("powertalk.t_slot = {} must exceed tau = {}", self.t_slot, self.tau));
        }
        if self.samples_per_slot() < 1 {
            out.push("powertalk: f_pc·(t_slot - tau) must give at least one sample".into());
        }
        if Micros::from_secs(self.t_slot).is_none_or(|m| m.0 == 0) {
            out.push("powertalk.t_slot must be a positive whole number of microseconds".into());
        }
        if self.s_rep < 1 {
            out.push("powertalk.s_rep must be at least 1".into());
        }
        if self.m_blank < 1 {
            out.push("powertalk.m_blank must be at least 1".into());
        }
        if self.l_period <= self.d_span {
            out.push("powertalk.l_period must exceed d_span".into());
        }
        if (self.d_span as f64) * t_sc + 1e-12 < self.duration(units) {
            out.push(format!(
                "powertalk: d_span·T_sc = {:.4} s cannot hold {} slots of {} s",
                self.d_span as f64 * t_sc,
                self.slots_needed(units),
                self.t_slot
            ));
        }
        if let Some(e) = self.epsilon_lc {
            if e.is_nan() || e < 0.0 {
                out.push("powertalk.epsilon_lc must be non-negative".into());
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symbol {
    Zero,
    One,
    Blank,
}

impl From<bool> for Symbol {
    fn from(bit: bool) -> Self {
        if bit {
            Symbol::One
        } else {
            Symbol::Zero
        }
    }
}

/// Reference deviation for one symbol.
pub fn modulate(symbol: Symbol, gamma: f64) -> f64 {
    match symbol {
        Symbol::One => gamma,
        Symbol::Zero => -gamma,
        Symbol::Blank => 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slot {
    pub tx: DerId,
    /// Column of the transmitter's row carried in this slot.
    pub col: DerId,
    pub rep: u32,
}

/// TDMA order: units in id order, each sending its off-diagonal row entries
/// `s_rep` times (whole row, then the next repetition).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PtSchedule {
    pub slots: Vec<Slot>,
    pub units: usize,
    pub s_rep: u32,
}

impl PtSchedule {
    pub fn new(units: usize, s_rep: u32) -> Self {
        let mut slots = Vec::with_capacity(units * s_rep as usize * units.saturating_sub(1));
        for tx in 0..units {
            for rep in 0..s_rep {
                for col in (0..units).filter(|&c| c != tx) {
                    slots.push(Slot { tx: DerId::from_index(tx), col: DerId::from_index(col), rep });
                }
            }
        }
        PtSchedule { slots, units, s_rep }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }
}

/// Per-unit receiver state.
#[derive(Debug, Clone, PartialEq)]
pub struct PtDetectorState {
    /// Decision threshold `v_j`, the `γ = 0` voltage level.
    pub threshold: f64,
    pub last_mean: f64,
    pub load_change_flag: bool,
    pub blank_countdown: u32,
    pub m_blank: u32,
    /// Largest symbol-induced deviation `max |Δv|`.
    pub swing: f64,
    blank_sum: f64,
    blank_count: u32,
}

impl PtDetectorState {
    pub fn new(threshold: f64, swing: f64, m_blank: u32) -> Self {
        PtDetectorState {
            threshold,
            last_mean: threshold,
            load_change_flag: false,
            blank_countdown: 0,
            m_blank,
            swing,
            blank_sum: 0.0,
            blank_count: 0,
        }
    }

    pub fn is_blanking(&self) -> bool {
        self.blank_countdown > 0
    }
}

fn mean(samples: &[f64]) -> f64 {
    samples.iter().sum::<f64>() / samples.len() as f64
}

/// Sample-average threshold decision; equality decides `0`.
pub fn detect_bit(samples: &[f64], det: &PtDetectorState) -> bool {
    mean(samples) > det.threshold
}

/// Updates load-change tracking with one slot mean.
///
/// A jump between consecutive slot means larger than `epsilon_lc` plus the
/// largest symbol swing `2 max|Δv|` raises the flag and starts `m_blank`
/// blank slots; their average becomes the new threshold.
pub fn track_load_change(det: &PtDetectorState, slot_mean: f64, epsilon_lc: f64) -> PtDetectorState {
    let mut d = det.clone();
    d.load_change_flag = false;
    if (slot_mean - det.last_mean).abs() > epsilon_lc + 2.0 * det.swing {
        d.load_change_flag = true;
        d.blank_countdown = d.m_blank;
        d.blank_sum = 0.0;
        d.blank_count = 0;
    } else if d.blank_countdown > 0 {
        d.blank_sum += slot_mean;
        d.blank_count += 1;
        d.blank_countdown -= 1;
        if d.blank_countdown == 0 {
            d.threshold = d.blank_sum / d.blank_count as f64;
        }
    }
    d.last_mean = slot_mean;
    d
}

#[derive(Debug, Clone, PartialEq)]
pub enum PowerTalkError {
    /// The exchange (including blank slots) did not fit in the window.
    PtChOverrun { slots_available: usize, slots_used: usize },
    Grid(GridError),
}

impl fmt::Display for PowerTalkError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PowerTalkError::PtChOverrun { slots_available, slots_used } => write!(
                f,
                "power-talk exchange overran its window ({slots_used} slots used, {slots_available} available)"
            ),
            PowerTalkError::Grid(e) => write!(f, "bus solve failed during power talk: {e}"),
        }
    }
}

impl core::error::Error for PowerTalkError {}

impl From<GridError> for PowerTalkError {
    fn from(e: GridError) -> Self {
        PowerTalkError::Grid(e)
    }
}

/// Electrical context of a PTCh. All units must be in VSC mode; `units[i].x_ref`
/// is the reference used during the window and `offsets` the frozen
/// secondary offsets.
pub struct PtchGrid<'a> {
    pub units: Vec<DerUnit>,
    pub offsets: Vec<f64>,
    pub load: &'a LoadSchedule,
    /// One ADC per unit.
    pub samplers: &'a mut [VoltageSampler],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotRecord {
    pub t: Micros,
    /// Units applying a nonzero deviation in this slot.
    pub transmitters: Vec<DerId>,
    pub solution: BusSolution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PtchOutcome {
    /// Matrix decoded by each unit, indexed like the units.
    pub decoded: Vec<ConnectivityMatrix>,
    pub slots_used: usize,
    pub blank_slots: usize,
    pub load_changes_detected: usize,
    /// Time the last slot ended.
    pub end: Micros,
    /// Largest `|Δv|` over transmitters at the start of the window.
    pub swing: f64,
    pub epsilon_lc: f64,
    pub slot_log: Vec<SlotRecord>,
}

/// `max |Δv|` over all transmitters and both symbols.
pub fn symbol_swing(units: &[DerUnit], offsets: &[f64], load: &crate::grid::LoadModel, gamma: f64) -> Result<f64, GridError> {
    let base = solve_bus(units, offsets, load)?.v_bus;
    let mut swing: f64 = 0.0;
    let mut probe = units.to_vec();
    for u in 0..units.len() {
        for sym in [Symbol::One, Symbol::Zero] {
            probe[u].pt_deviation = modulate(sym, gamma);
            let v = solve_bus(&probe, offsets, load)?.v_bus;
            swing = swing.max((v - base).abs());
        }
        probe[u].pt_deviation = 0.0;
    }
    Ok(swing)
}

/// Runs one PTCh starting at `start` with `window` of wall-clock time
/// available, and returns what every unit decoded.
///
/// `q_rows[u]` is the row unit `u` transmits (all zeros for a jammed unit).
/// Each unit keeps its own slot cursor and detector, so units that disagree
/// about a load change fall out of step exactly as real receivers would.
pub fn run_ptch(
    cfg: &PtConfig,
    schedule: &PtSchedule,
    q_rows: &[Vec<bool>],
    grid: PtchGrid<'_>,
    start: Micros,
    window: Micros,
) -> Result<PtchOutcome, PowerTalkError> {
    let n = schedule.units;
    assert_eq!(grid.units.len(), n);
    assert_eq!(q_rows.len(), n);
    assert!(grid.units.iter().all(|u| u.mode == ControlMode::Vsc), "all units must be VSC during a PTCh");

    let t_slot = Micros::from_secs(cfg.t_slot).expect("validated slot length");
    let slots_available = (window.0 / t_slot.0) as usize;
    let n_samples = cfg.samples_per_slot();
    let sigma = grid.samplers.first().map_or(0.0, |s| s.sigma);
    let mut units = grid.units;
    let offsets = grid.offsets;

    let base_load = grid.load.at(start);
    let swing = symbol_swing(&units, &offsets, &base_load, cfg.gamma)?;
    let epsilon_lc = cfg.epsilon_lc.unwrap_or(3.0 * sigma + swing);

    // Initial thresholds from a guard interval of m_blank blank-slot
    // measurements taken at the γ = 0 operating point.
    let base = solve_bus(&units, &offsets, &base_load)?;
    let guard = n_samples * cfg.m_blank.max(1) as usize;
    let mut dets: Vec<PtDetectorState> = grid
        .samplers
        .iter_mut()
        .map(|s| PtDetectorState::new(mean(&s.sample_voltage(base.v_bus, guard)), swing, cfg.m_blank))
        .collect();

    let mut cursor = vec![0usize; n];
    // votes[receiver][tx][col] = number of ones heard
    let mut votes = vec![vec![vec![0u32; n]; n]; n];
    let mut slot_log = Vec::new();
    let mut blank_slots = 0;
    let mut load_changes = 0;
    let mut t = start;
    let mut used = 0;

    let done = |cursor: &[usize], dets: &[PtDetectorState]| {
        cursor.iter().all(|&c| c >= schedule.len()) && dets.iter().all(|d| !d.is_blanking())
    };

    while !done(&cursor, &dets) {
        if used >= slots_available {
            return Err(PowerTalkError::PtChOverrun { slots_available, slots_used: used + 1 });
        }
        let mut transmitters = Vec::new();
        for (u, unit) in units.iter_mut().enumerate() {
            unit.pt_deviation = 0.0;
            if dets[u].is_blanking() || cursor[u] >= schedule.len() {
                continue;
            }
            let slot = schedule.slots[cursor[u]];
            if slot.tx.index() == u {
                unit.pt_deviation = modulate(q_rows[u][slot.col.index()].into(), cfg.gamma);
                transmitters.push(unit.id);
            }
        }
        let solution = solve_bus(&units, &offsets, &grid.load.at(t))?;

        let mut any_blank = false;
        let mut any_change = false;
        for j in 0..n {
            let samples = grid.samplers[j].sample_voltage(solution.v_bus, n_samples);
            let slot_mean = mean(&samples);
            let was_blanking = dets[j].is_blanking();
            dets[j] = track_load_change(&dets[j], slot_mean, epsilon_lc);
            if dets[j].load_change_flag {
                any_change = true;
                continue;
            }
            if was_blanking {
                any_blank = true;
                continue;
            }
            if cursor[j] >= schedule.len() {
                continue;
            }
            let slot = schedule.slots[cursor[j]];
            if slot.tx.index() != j && detect_bit(&samples, &dets[j]) {
                votes[j][slot.tx.index()][slot.col.index()] += 1;
            }
            cursor[j] += 1;
        }
        if any_change {
            load_changes += 1;
        }
        if any_blank {
            blank_slots += 1;
        }
        slot_log.push(SlotRecord { t, transmitters, solution });
        t += t_slot;
        used += 1;
    }

    let decoded = (0..n)
        .map(|j| {
            let rows = (0..n)
                .map(|u| {
                    if u == j {
                        q_rows[j].clone()
                    } else {
                        (0..n).map(|c| 2 * votes[j][u][c] > schedule.s_rep).collect()
                    }
                })
                .collect();
            ConnectivityMatrix::from_rows(rows, MatrixSource::DecodedPtch)
        })
        .collect();

    Ok(PtchOutcome {
        decoded,
        slots_used: used,
        blank_slots,
        load_changes_detected: load_changes,
        end: t,
        swing,
        epsilon_lc,
        slot_log,
    })
}
