use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use super::scenario::{validate, ScenarioConfig, Violation};
use super::trace::{monitor, AlarmReason, Event, TraceRecord};
use crate::grid::{solve_bus, BusSolution, ControlMode, DerUnit, GridError, LoadSchedule, VoltageSampler};
use crate::powertalk::{run_ptch, PowerTalkError, PtSchedule, PtchGrid, PtchOutcome};
use crate::reconfig::{build_new_vset, ConnectivityMatrix, MatrixSource, MetricMatrix, ReconfigError, VsetPlan};
use crate::rng::{self, streams, SimRng};
use crate::secondary::{gossip_update, pi_step, AgentState, ConsensusVector, Measurement, PiPair};
use crate::wireless::{update_jam_detector, DeliveryReport, JamDetector, JammerSpec, WirelessNetwork};
use crate::{DerId, Micros};

#[derive(Debug, Clone, PartialEq)]
pub enum SimError {
    Config(Vec<Violation>),
    Numerical { t: Micros, source: GridError },
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::Config(v) => {
                write!(f, "invalid scenario ({} violations)", v.len())?;
                for x in v {
                    write!(f, "\n  - {x}")?;
                }
                Ok(())
            }
            SimError::Numerical { t, source } => write!(f, "bus solve failed at t = {t} s: {source}"),
        }
    }
}

impl core::error::Error for SimError {}

/// What happened in one PTCh window.
#[derive(Debug, Clone, PartialEq)]
pub struct PtchReport {
    pub start: Micros,
    pub end: Micros,
    /// Rows as transmitted, i.e. the ground truth every unit should decode.
    pub transmitted: ConnectivityMatrix,
    /// Per-unit decoded matrices; empty when the window overran.
    pub decoded: Vec<ConnectivityMatrix>,
    pub slots_used: usize,
    pub blank_slots: usize,
    pub load_changes_detected: usize,
    pub old_vset: BTreeSet<DerId>,
    pub new_vset: BTreeSet<DerId>,
    pub alarms: Vec<AlarmReason>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub trace: Vec<TraceRecord>,
    pub ptchs: Vec<PtchReport>,
}

#[derive(Debug, Clone)]
struct Agent {
    state: AgentState,
    pi: PiPair,
    /// Estimate not yet seeded from a measurement.
    fresh: bool,
}

struct Engine<'c> {
    cfg: &'c ScenarioConfig,
    t_sc: Micros,
    n_periods: u64,
    samples_per_period: usize,
    units: Vec<DerUnit>,
    base_units: Vec<DerUnit>,
    vset: BTreeSet<DerId>,
    agents: Vec<Option<Agent>>,
    network: WirelessNetwork,
    net_rng: SimRng,
    samplers: Vec<VoltageSampler>,
    detector: JamDetector,
    /// `last_heard[rx][tx]`: last period in which `rx` received from `tx`.
    last_heard: Vec<Vec<Option<u64>>>,
    metric: MetricMatrix,
    load: LoadSchedule,
    load_segment: usize,
    jammer_on: Vec<bool>,
    bus: BusSolution,
    trace: Vec<TraceRecord>,
    ptchs: Vec<PtchReport>,
}

/// Runs a scenario to completion.
pub fn run(cfg: &ScenarioConfig) -> Result<SimOutput, SimError> {
    let violations = validate(cfg);
    if !violations.is_empty() {
        return Err(SimError::Config(violations));
    }
    let mut e = Engine::new(cfg)?;
    e.run()?;
    Ok(SimOutput { trace: e.trace, ptchs: e.ptchs })
}

impl<'c> Engine<'c> {
    fn new(cfg: &'c ScenarioConfig) -> Result<Self, SimError> {
        let n = cfg.unit_count();
        let t_sc = Micros::from_secs(cfg.timing.t_sc).expect("validated");
        let duration = Micros::from_secs(cfg.duration).expect("validated");
        let units = cfg.build_units();
        let vset = cfg.initial_vset();
        let network = WirelessNetwork::new(cfg.geometry.clone(), cfg.network.p_drop, cfg.timing.tau_d)
            .map_err(|_| SimError::Config(vec![Violation("wireless topology is not connected".into())]))?;
        let samplers = (0..n)
            .map(|u| {
                VoltageSampler::new(
                    cfg.adc_sigma,
                    cfg.powertalk.f_pc,
                    rng::stream(cfg.seed, streams::SAMPLER_BASE + u as u64),
                )
            })
            .collect();
        let agents = (0..n)
            .map(|u| {
                vset.contains(&DerId::from_index(u)).then(|| Agent {
                    state: AgentState {
                        a: ConsensusVector::default(),
                        beta: 1.0 / vset.len() as f64,
                        k: 0,
                    },
                    pi: PiPair::new(cfg.secondary),
                    fresh: true,
                })
            })
            .collect();
        let load = cfg.load_schedule();
        let offsets = vec![0.0; n];
        let bus = solve_bus(&units, &offsets, &load.at(Micros::ZERO))
            .map_err(|source| SimError::Numerical { t: Micros::ZERO, source })?;
        Ok(Engine {
            cfg,
            t_sc,
            n_periods: duration.0 / t_sc.0,
            samples_per_period: libm::round(cfg.powertalk.f_pc * cfg.timing.t_sc) as usize,
            base_units: units.clone(),
            units,
            vset,
            agents,
            metric: MetricMatrix::new(network.geometry.distances()),
            net_rng: rng::stream(cfg.seed, streams::WIRELESS),
            network,
            samplers,
            detector: JamDetector::new(cfg.network.n_det, n),
            last_heard: vec![vec![None; n]; n],
            load,
            load_segment: 0,
            jammer_on: vec![false; cfg.jammers.len()],
            bus,
            trace: Vec::new(),
            ptchs: Vec::new(),
        })
    }

    fn n(&self) -> usize {
        self.units.len()
    }

    fn offsets(&self) -> Vec<f64> {
        self.agents.iter().map(|a| a.as_ref().map_or(0.0, |a| a.pi.total_offset())).collect()
    }

    fn solve(&self, units: &[DerUnit], offsets: &[f64], t: Micros) -> Result<BusSolution, SimError> {
        solve_bus(units, offsets, &self.load.at(t)).map_err(|source| SimError::Numerical { t, source })
    }

    fn record(&mut self, t: Micros, modes: Vec<ControlMode>, event: Option<Event>) {
        let (dxv, dxc) = self
            .agents
            .iter()
            .map(|a| a.as_ref().map_or((0.0, 0.0), |a| (a.pi.delta_x_v, a.pi.delta_x_c)))
            .unzip();
        self.trace.push(TraceRecord {
            t,
            v_bus: self.bus.v_bus,
            i_out: self.bus.i_out.clone(),
            modes,
            dxv,
            dxc,
            event,
            safety: monitor(self.bus.v_bus, &self.bus.i_out, self.cfg.v_min, self.cfg.i_max),
        });
    }

    fn modes(&self) -> Vec<ControlMode> {
        self.units.iter().map(|u| u.mode).collect()
    }

    fn event(&mut self, t: Micros, ev: Event) {
        let modes = self.modes();
        self.record(t, modes, Some(ev));
    }

    fn run(&mut self) -> Result<(), SimError> {
        let pt = &self.cfg.powertalk;
        let (l, d) = (pt.l_period as u64, pt.d_span as u64);
        let mut k = 0;
        while k < self.n_periods {
            let t = self.t_sc * k;
            self.external_events(t);
            if self.cfg.defense && k > 0 && k % l == 0 && k + d <= self.n_periods {
                k = self.ptch_window(k)?;
            } else {
                self.secondary_period(k)?;
                k += 1;
            }
        }
        Ok(())
    }

    /// Load steps and jammer switching due by `t`.
    fn external_events(&mut self, t: Micros) {
        let seg = self.load.segment_at(t);
        while self.load_segment < seg {
            let (ts, model) = self.load.steps[self.load_segment];
            self.load_segment += 1;
            self.event(ts, Event::LoadStep(model));
        }
        for j in 0..self.jammer_on.len() {
            let on = self.cfg.jammers[j].is_active(t.as_secs());
            if on != self.jammer_on[j] {
                self.jammer_on[j] = on;
                self.event(t, if on { Event::JammerOn(j + 1) } else { Event::JammerOff(j + 1) });
            }
        }
    }

    /// Every station sends one packet or beacon per period.
    fn wireless_step(&mut self, k: u64, t: Micros) -> DeliveryReport {
        let n = self.n();
        let active: Vec<&JammerSpec> =
            self.cfg.jammers.iter().zip(&self.jammer_on).filter(|(_, on)| **on).map(|(j, _)| j).collect();
        let report = self.network.step_period(k, &vec![true; n], &active, &mut self.net_rng);
        for u in 0..n {
            let was = self.detector.is_flagged(u);
            self.detector = update_jam_detector(&self.detector, u, &report, &self.network.adjacency);
            if !was && self.detector.is_flagged(u) {
                self.event(t, Event::JamDetected(DerId::from_index(u)));
            }
            for tx in 0..n {
                if report.delivered(tx, u) {
                    self.last_heard[u][tx] = Some(k);
                }
            }
        }
        report
    }

    fn secondary_period(&mut self, k: u64) -> Result<(), SimError> {
        let t = self.t_sc * k;
        let n = self.n();
        let report = self.wireless_step(k, t);

        let mut meas = vec![None; n];
        for (u, slot) in self.agents.iter_mut().enumerate() {
            if let Some(agent) = slot.as_mut() {
                let v = self.samplers[u].sample_mean(self.bus.v_bus, self.samples_per_period);
                let m = Measurement::new(v, self.bus.i_out[u]);
                if agent.fresh {
                    agent.state.a = m.as_vector();
                    agent.fresh = false;
                }
                meas[u] = Some(m);
            }
        }
        let sent: Vec<Option<ConsensusVector>> = self.agents.iter().map(|a| a.as_ref().map(|a| a.state.a)).collect();
        for (u, slot) in self.agents.iter_mut().enumerate() {
            let (Some(agent), Some(m)) = (slot.as_mut(), meas[u]) else { continue };
            let received: Vec<ConsensusVector> =
                (0..n).filter(|&j| j != u && report.delivered(j, u)).filter_map(|j| sent[j]).collect();
            agent.state = gossip_update(&agent.state, &received, &m);
            agent.pi = pi_step(&agent.pi, &agent.state, &m, self.cfg.v_star, self.cfg.timing.t_sc);
        }

        let offsets = self.offsets();
        self.bus = self.solve(&self.units, &offsets, t)?;
        let modes = self.modes();
        self.record(t, modes, None);
        Ok(())
    }

    /// Row of `Q` a unit would broadcast at period `k`.
    fn q_rows(&self, k: u64) -> Vec<Vec<bool>> {
        let n = self.n();
        let n_det = self.cfg.network.n_det as u64;
        (0..n)
            .map(|u| {
                if self.detector.is_flagged(u) {
                    let mut row = vec![false; n];
                    row[u] = true;
                    return row;
                }
                (0..n).map(|j| j == u || self.last_heard[u][j].is_some_and(|p| p + n_det >= k)).collect()
            })
            .collect()
    }

    /// One PTCh window starting at period `k`; returns the next period index.
    fn ptch_window(&mut self, k: u64) -> Result<u64, SimError> {
        let start = self.t_sc * k;
        let d = self.cfg.powertalk.d_span as u64;
        let window = self.t_sc * d;
        self.event(start, Event::PtchStart);

        let q_rows = self.q_rows(k);
        let offsets = self.offsets();
        let mut pt_units = self.units.clone();
        for (u, unit) in pt_units.iter_mut().enumerate() {
            if unit.mode == ControlMode::Csc {
                unit.x_ref = unit.bumpless_reference(self.bus.v_bus, self.bus.i_out[u]);
                unit.mode = ControlMode::Vsc;
            }
        }
        let all_vsc = vec![ControlMode::Vsc; self.n()];

        let schedule = PtSchedule::new(self.n(), self.cfg.powertalk.s_rep);
        let grid = PtchGrid {
            units: pt_units.clone(),
            offsets: offsets.clone(),
            load: &self.load,
            samplers: &mut self.samplers,
        };
        let outcome = match run_ptch(&self.cfg.powertalk, &schedule, &q_rows, grid, start, window) {
            Ok(o) => Some(o),
            Err(PowerTalkError::PtChOverrun { .. }) => None,
            Err(PowerTalkError::Grid(source)) => return Err(SimError::Numerical { t: start, source }),
        };
        let end = outcome.as_ref().map_or(start + window, |o| o.end);

        let mut finished = false;
        for p in k..k + d {
            let t = self.t_sc * p;
            let step_first = self.load.steps.get(self.load_segment).is_some_and(|(ts, _)| *ts < end);
            if t >= end && !finished && !step_first {
                self.finish_ptch(start, end, &q_rows, outcome.as_ref(), &pt_units)?;
                finished = true;
            }
            self.external_events(t);
            if t >= end && !finished {
                self.finish_ptch(start, end, &q_rows, outcome.as_ref(), &pt_units)?;
                finished = true;
            }
            self.wireless_step(p, t);
            if finished {
                let offsets = self.offsets();
                self.bus = self.solve(&self.units, &offsets, t)?;
                let modes = self.modes();
                self.record(t, modes, None);
            } else {
                let slot = outcome.as_ref().and_then(|o| o.slot_log.iter().rev().find(|s| s.t <= t));
                self.bus = match slot {
                    Some(s) => s.solution.clone(),
                    None => self.solve(&pt_units, &offsets, t)?,
                };
                self.record(t, all_vsc.clone(), None);
            }
        }
        if !finished {
            self.finish_ptch(start, end, &q_rows, outcome.as_ref(), &pt_units)?;
        }
        Ok(k + d)
    }

    fn finish_ptch(
        &mut self,
        start: Micros,
        end: Micros,
        q_rows: &[Vec<bool>],
        outcome: Option<&PtchOutcome>,
        pt_units: &[DerUnit],
    ) -> Result<(), SimError> {
        let n = self.n();
        let target = self.cfg.vset_size();
        let old_vset = self.vset.clone();
        let mut alarms = Vec::new();

        let new_vset = match outcome {
            None => {
                alarms.push(AlarmReason::PtchOverrun);
                old_vset.clone()
            }
            Some(o) => {
                let plans: Vec<VsetPlan> = o
                    .decoded
                    .iter()
                    .map(|q| match build_new_vset(q, &self.metric, &old_vset, target) {
                        Ok(p) => p,
                        Err(ReconfigError::Infeasible(p)) => {
                            if !alarms.contains(&AlarmReason::Infeasible) {
                                alarms.push(AlarmReason::Infeasible);
                            }
                            p
                        }
                    })
                    .collect();
                // Each unit acts only on its own plan.
                let chosen: BTreeSet<DerId> =
                    (0..n).map(DerId::from_index).filter(|id| plans[id.index()].new_vset.contains(id)).collect();
                if plans.iter().any(|p| p.new_vset != chosen) {
                    alarms.push(AlarmReason::PlanMismatch);
                }
                chosen
            }
        };

        for (u, unit) in self.units.iter_mut().enumerate() {
            let id = DerId::from_index(u);
            match (old_vset.contains(&id), new_vset.contains(&id)) {
                (false, true) => {
                    unit.mode = ControlMode::Vsc;
                    unit.x_ref = pt_units[u].x_ref;
                    self.agents[u] = Some(Agent {
                        state: AgentState { a: ConsensusVector::default(), beta: 1.0, k: 0 },
                        pi: PiPair::new(self.cfg.secondary),
                        fresh: true,
                    });
                }
                (true, false) => {
                    unit.mode = ControlMode::Csc;
                    unit.x_ref = self.base_units[u].x_ref;
                    self.agents[u] = None;
                }
                _ => {}
            }
        }
        let beta = 1.0 / new_vset.len().max(1) as f64;
        for a in self.agents.iter_mut().flatten() {
            a.state.beta = beta;
        }
        self.vset = new_vset.clone();

        let offsets = self.offsets();
        self.bus = self.solve(&self.units, &offsets, end)?;
        self.event(end, Event::PtchEnd);
        for id in old_vset.symmetric_difference(&new_vset) {
            let to = if new_vset.contains(id) { ControlMode::Vsc } else { ControlMode::Csc };
            self.event(end, Event::ModeSwitch { id: *id, to });
        }
        for &r in &alarms {
            self.event(end, Event::Alarm(r));
        }

        self.ptchs.push(PtchReport {
            start,
            end,
            transmitted: ConnectivityMatrix::from_rows(q_rows.to_vec(), MatrixSource::Local),
            decoded: outcome.map(|o| o.decoded.clone()).unwrap_or_default(),
            slots_used: outcome.map_or(0, |o| o.slots_used),
            blank_slots: outcome.map_or(0, |o| o.blank_slots),
            load_changes_detected: outcome.map_or(0, |o| o.load_changes_detected),
            old_vset,
            new_vset,
            alarms,
        });
        Ok(())
    }
}
