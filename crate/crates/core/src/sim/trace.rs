use alloc::vec::Vec;
use core::fmt;

use crate::grid::{ControlMode, LoadModel};
use crate::{DerId, Micros};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlarmReason {
    /// No connected VSC set of the required size could be formed.
    Infeasible,
    /// Units decoded different connectivity and chose different sets.
    PlanMismatch,
    /// The power-talk exchange did not fit in its window.
    PtchOverrun,
}

impl AlarmReason {
    pub fn as_str(self) -> &'static str {
        match self {
            AlarmReason::Infeasible => "Infeasible",
            AlarmReason::PlanMismatch => "PlanMismatch",
            AlarmReason::PtchOverrun => "PtchOverrun",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Event {
    LoadStep(LoadModel),
    /// Jammer index into the scenario's jammer list, 1-based.
    JammerOn(usize),
    JammerOff(usize),
    JamDetected(DerId),
    PtchStart,
    PtchEnd,
    ModeSwitch { id: DerId, to: ControlMode },
    Alarm(AlarmReason),
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::LoadStep(LoadModel::ConstantPower { d }) => write!(f, "LoadStep:P={d}"),
            Event::LoadStep(LoadModel::ConstantResistance { r_load }) => write!(f, "LoadStep:R={r_load}"),
            Event::JammerOn(j) => write!(f, "JammerOn:{j}"),
            Event::JammerOff(j) => write!(f, "JammerOff:{j}"),
            Event::JamDetected(id) => write!(f, "JamDetected:{id}"),
            Event::PtchStart => f.write_str("PtchStart"),
            Event::PtchEnd => f.write_str("PtchEnd"),
            Event::ModeSwitch { id, to } => write!(f, "ModeSwitch:{id}:{}", to.as_str()),
            Event::Alarm(r) => write!(f, "Alarm:{}", r.as_str()),
        }
    }
}

/// Safety monitor output for one record.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Safety {
    /// `v_bus < v_min`.
    pub undervoltage: bool,
    /// Units with `i_u > i_max`.
    pub overcurrent: Vec<DerId>,
}

impl Safety {
    pub fn is_clear(&self) -> bool {
        !self.undervoltage && self.overcurrent.is_empty()
    }
}

impl fmt::Display for Safety {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut sep = "";
        if self.undervoltage {
            f.write_str("undervoltage")?;
            sep = ";";
        }
        for id in &self.overcurrent {
            write!(f, "{sep}overcurrent:{id}")?;
            sep = ";";
        }
        Ok(())
    }
}

/// One row of the trace: a secondary-period sample or an event.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub t: Micros,
    pub v_bus: f64,
    pub i_out: Vec<f64>,
    pub modes: Vec<ControlMode>,
    /// Voltage-restoration offsets; zero for units outside the VSC set.
    pub dxv: Vec<f64>,
    /// Current-sharing offsets; zero for units outside the VSC set.
    pub dxc: Vec<f64>,
    pub event: Option<Event>,
    pub safety: Safety,
}

impl TraceRecord {
    pub fn is_event(&self) -> bool {
        self.event.is_some()
    }

    /// Output currents of the units currently in VSC mode.
    pub fn vsc_currents(&self) -> impl Iterator<Item = f64> + '_ {
        self.i_out.iter().zip(&self.modes).filter(|(_, m)| **m == ControlMode::Vsc).map(|(i, _)| *i)
    }

    /// `max - min` of the VSC currents divided by their mean.
    pub fn vsc_spread_ratio(&self) -> f64 {
        let (mut lo, mut hi, mut sum, mut n) = (f64::INFINITY, f64::NEG_INFINITY, 0.0, 0usize);
        for i in self.vsc_currents() {
            lo = lo.min(i);
            hi = hi.max(i);
            sum += i;
            n += 1;
        }
        if n == 0 {
            return 0.0;
        }
        (hi - lo) / (sum / n as f64)
    }
}

pub(crate) fn monitor(v_bus: f64, i_out: &[f64], v_min: f64, i_max: f64) -> Safety {
    Safety {
        undervoltage: v_bus < v_min,
        overcurrent: i_out
            .iter()
            .enumerate()
            .filter(|(_, &i)| i > i_max)
            .map(|(u, _)| DerId::from_index(u))
            .collect(),
    }
}

/// First-order low-pass of bus voltage and currents with time constant `tau`
/// seconds, for plotting. Event rows share their period's time and pass
/// through unchanged.
pub fn smooth_trace(trace: &[TraceRecord], tau: f64) -> Vec<TraceRecord> {
    let mut out: Vec<TraceRecord> = Vec::with_capacity(trace.len());
    for rec in trace {
        let mut r = rec.clone();
        if let Some(prev) = out.last() {
            let dt = (rec.t.0 - prev.t.0) as f64 * 1e-6;
            let a = if tau > 0.0 { 1.0 - libm::exp(-dt / tau) } else { 1.0 };
            r.v_bus = prev.v_bus + a * (rec.v_bus - prev.v_bus);
            for (y, (x, p)) in r.i_out.iter_mut().zip(rec.i_out.iter().zip(&prev.i_out)) {
                *y = p + a * (x - p);
            }
        }
        out.push(r);
    }
    out
}
