//! Quasi-static electrical model of parallel converters on one DC bus.
//!
//! Voltage-source units follow the droop law `v_u = x_u - r_u i_u` at their
//! terminals and reach the bus through a feeder resistance; current-source
//! units inject a fixed current. Each call to [`solve_bus`] returns the
//! steady state for one set of references, which is all the power-talk
//! detector and the secondary loop need.

use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::rng::SimRng;
use crate::{DerId, Micros};

/// Primary control mode of a dual-mode unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ControlMode {
    #[serde(rename = "VSC")]
    Vsc,
    #[serde(rename = "CSC")]
    Csc,
}

impl ControlMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ControlMode::Vsc => "VSC",
            ControlMode::Csc => "CSC",
        }
    }
}

impl fmt::Display for ControlMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One distributed energy resource as seen by the electrical model.
#[derive(Debug, Clone, PartialEq)]
pub struct DerUnit {
    pub id: DerId,
    pub mode: ControlMode,
    /// Droop reference `x_u` in volts.
    pub x_ref: f64,
    /// Virtual (droop) resistance in ohms.
    pub r_virtual: f64,
    /// Feeder resistance between converter and bus in ohms.
    pub r_line: f64,
    /// Injected current in CSC mode, amperes.
    pub i_csc: f64,
    /// Power-talk deviation currently applied to the reference: `-γ`, `0` or `+γ`.
    pub pt_deviation: f64,
}

impl DerUnit {
    pub fn vsc(id: u16, x_ref: f64, r_virtual: f64, r_line: f64) -> Self {
        DerUnit {
            id: DerId(id),
            mode: ControlMode::Vsc,
            x_ref,
            r_virtual,
            r_line,
            i_csc: 0.0,
            pt_deviation: 0.0,
        }
    }

    pub fn csc(id: u16, i_csc: f64) -> Self {
        DerUnit {
            id: DerId(id),
            mode: ControlMode::Csc,
            x_ref: 0.0,
            r_virtual: 0.3,
            r_line: 0.0,
            i_csc,
            pt_deviation: 0.0,
        }
    }

    /// Total series resistance seen from the droop reference to the bus.
    pub fn r_total(&self) -> f64 {
        self.r_virtual + self.r_line
    }

    /// Effective droop reference for a given secondary offset.
    pub fn x_eff(&self, offset: f64) -> f64 {
        self.x_ref + offset + self.pt_deviation
    }

    /// The reference that keeps this unit's present output unchanged when it
    /// enters VSC mode with zero offsets.
    pub fn bumpless_reference(&self, v_bus: f64, i_out: f64) -> f64 {
        v_bus + self.r_total() * i_out
    }

    fn is_well_formed(&self) -> bool {
        self.r_virtual > 0.0
            && self.r_line >= 0.0
            && self.i_csc >= 0.0
            && self.x_ref.is_finite()
            && self.pt_deviation.is_finite()
    }
}

/// Aggregate bus load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum LoadModel {
    /// Constant power `d` in watts.
    ConstantPower { d: f64 },
    /// Constant resistance in ohms.
    ConstantResistance { r_load: f64 },
}

impl LoadModel {
    pub fn current(&self, v: f64) -> f64 {
        match *self {
            LoadModel::ConstantPower { d } => d / v,
            LoadModel::ConstantResistance { r_load } => v / r_load,
        }
    }

    fn current_slope(&self, v: f64) -> f64 {
        match *self {
            LoadModel::ConstantPower { d } => -d / (v * v),
            LoadModel::ConstantResistance { r_load } => 1.0 / r_load,
        }
    }

    pub fn is_well_formed(&self) -> bool {
        match *self {
            LoadModel::ConstantPower { d } => d.is_finite() && d >= 0.0,
            LoadModel::ConstantResistance { r_load } => r_load.is_finite() && r_load > 0.0,
        }
    }
}

/// Piecewise-constant load over time.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadSchedule {
    pub initial: LoadModel,
    /// `(time, load)` steps in ascending time order.
    pub steps: Vec<(Micros, LoadModel)>,
}

impl LoadSchedule {
    pub fn constant(load: LoadModel) -> Self {
        LoadSchedule { initial: load, steps: Vec::new() }
    }

    /// Index of the active segment: 0 for `initial`, `k + 1` for `steps[k]`.
    pub fn segment_at(&self, t: Micros) -> usize {
        self.steps.iter().take_while(|(ts, _)| *ts <= t).count()
    }

    pub fn at(&self, t: Micros) -> LoadModel {
        match self.segment_at(t) {
            0 => self.initial,
            k => self.steps[k - 1].1,
        }
    }
}

/// Steady state of the bus for one set of references.
#[derive(Debug, Clone, PartialEq)]
pub struct BusSolution {
    pub v_bus: f64,
    /// Output current per unit, indexed like the input units.
    pub i_out: Vec<f64>,
    pub converged: bool,
    /// Kirchhoff residual `Σ i_out - i_load(v_bus)` in amperes.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GridError {
    /// No unit is in VSC mode, so the bus voltage is undefined.
    NoVsc,
    /// Malformed unit or load parameters.
    InvalidInput,
    /// The load cannot be supplied; `v_best` is the voltage where the supply
    /// surplus is largest and `residual` that (negative) surplus.
    NoSolution { v_best: f64, residual: f64 },
}

impl fmt::Display for GridError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridError::NoVsc => f.write_str("no unit in VSC mode, bus voltage undefined"),
            GridError::InvalidInput => f.write_str("malformed unit or load parameters"),
            GridError::NoSolution { v_best, residual } => write!(
                f,
                "load exceeds deliverable power (best v = {v_best:.4} V, residual {residual:.3e} A)"
            ),
        }
    }
}

impl core::error::Error for GridError {}

/// Kirchhoff residual tolerance in amperes.
pub const RESIDUAL_TOL: f64 = 1e-9;
const V_FLOOR: f64 = 1.0;
const MAX_ITER: usize = 200;

/// Residual `f(v) = Σ_VSC (x_eff - v)/R + Σ_CSC i_csc - i_load(v)` and its
/// derivative.
struct BusEquation<'a> {
    units: &'a [DerUnit],
    offsets: &'a [f64],
    load: LoadModel,
    conductance: f64,
}

impl BusEquation<'_> {
    fn eval(&self, v: f64) -> (f64, f64) {
        let mut f = 0.0;
        for (u, &off) in self.units.iter().zip(self.offsets) {
            f += match u.mode {
                ControlMode::Vsc => (u.x_eff(off) - v) / u.r_total(),
                ControlMode::Csc => u.i_csc,
            };
        }
        f -= self.load.current(v);
        (f, -self.conductance - self.load.current_slope(v))
    }
}

/// Solves the bus for the given units, per-unit secondary offsets (ignored
/// for CSC units) and load.
///
/// The residual is strictly decreasing above the peak-power voltage
/// `sqrt(d / G)`, so the stable high-voltage root is bracketed there and
/// refined by Newton steps that fall back to bisection whenever they leave
/// the bracket.
pub fn solve_bus(units: &[DerUnit], offsets: &[f64], load: &LoadModel) -> Result<BusSolution, GridError> {
    if offsets.len() != units.len() || !load.is_well_formed() || units.iter().any(|u| !u.is_well_formed()) {
        return Err(GridError::InvalidInput);
    }
    let vsc = || units.iter().filter(|u| u.mode == ControlMode::Vsc);
    if vsc().next().is_none() {
        return Err(GridError::NoVsc);
    }
    let conductance: f64 = vsc().map(|u| 1.0 / u.r_total()).sum();
    let x_max = units
        .iter()
        .zip(offsets)
        .filter(|(u, _)| u.mode == ControlMode::Vsc)
        .map(|(u, &o)| u.x_eff(o))
        .fold(f64::NEG_INFINITY, f64::max);
    let eq = BusEquation { units, offsets, load: *load, conductance };

    let v_peak = match *load {
        LoadModel::ConstantPower { d } => libm::sqrt(d / conductance),
        LoadModel::ConstantResistance { .. } => 0.0,
    };
    let mut lo = v_peak.max(V_FLOOR);
    let (f_lo, _) = eq.eval(lo);
    if f_lo < 0.0 {
        return Err(GridError::NoSolution { v_best: lo, residual: f_lo });
    }
    let mut hi = (2.0 * x_max).max(lo * 2.0);
    // Large CSC injection can push the root above 2·max x_eff.
    let mut grow = 0;
    while eq.eval(hi).0 > 0.0 {
        hi *= 2.0;
        grow += 1;
        if grow > 60 {
            return Err(GridError::InvalidInput);
        }
    }

    let mut v = 0.5 * (lo + hi);
    let mut converged = false;
    for _ in 0..MAX_ITER {
        let (f, df) = eq.eval(v);
        if f.abs() <= RESIDUAL_TOL * 1e-2 {
            converged = true;
            break;
        }
        if f > 0.0 {
            lo = v;
        } else {
            hi = v;
        }
        let newton = v - f / df;
        v = if df < 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }

    let i_out: Vec<f64> = units
        .iter()
        .zip(offsets)
        .map(|(u, &o)| match u.mode {
            ControlMode::Vsc => (u.x_eff(o) - v) / u.r_total(),
            ControlMode::Csc => u.i_csc,
        })
        .collect();
    let residual = i_out.iter().sum::<f64>() - load.current(v);
    converged |= residual.abs() <= RESIDUAL_TOL;
    if !converged {
        return Err(GridError::NoSolution { v_best: v, residual });
    }
    Ok(BusSolution { v_bus: v, i_out, converged, residual })
}

/// Seeded ADC model: samples are `N(v_true, σ²)`.
#[derive(Debug, Clone)]
pub struct VoltageSampler {
    pub sigma: f64,
    pub f_pc: f64,
    rng: SimRng,
}

impl VoltageSampler {
    pub fn new(sigma: f64, f_pc: f64, rng: SimRng) -> Self {
        assert!(sigma >= 0.0 && f_pc > 0.0);
        VoltageSampler { sigma, f_pc, rng }
    }

    fn draw(&mut self) -> f64 {
        self.rng.sample::<f64, _>(StandardNormal)
    }

    /// `n` independent samples of `v_true` plus noise.
    pub fn sample_voltage(&mut self, v_true: f64, n: usize) -> Vec<f64> {
        assert!(n >= 1);
        if self.sigma == 0.0 {
            return alloc::vec![v_true; n];
        }
        (0..n).map(|_| v_true + self.sigma * self.draw()).collect()
    }

    /// Mean of `n` samples, drawn in one step from its exact distribution
    /// `N(v_true, σ²/n)`.
    pub fn sample_mean(&mut self, v_true: f64, n: usize) -> f64 {
        assert!(n >= 1);
        if self.sigma == 0.0 {
            return v_true;
        }
        v_true + self.sigma / libm::sqrt(n as f64) * self.draw()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use alloc::vec;

    fn cp(d: f64) -> LoadModel {
        LoadModel::ConstantPower { d }
    }

    #[test]
    fn no_load_identity() {
        let units = [DerUnit::vsc(1, 48.0, 0.3, 0.0)];
        let s = solve_bus(&units, &[0.0], &cp(0.0)).unwrap();
        assert!((s.v_bus - 48.0).abs() < 1e-12);
        assert!(s.i_out[0].abs() < 1e-9);
    }

    #[test]
    fn resistive_divider() {
        let units = [DerUnit::vsc(1, 48.0, 0.3, 0.0)];
        let s = solve_bus(&units, &[0.0], &LoadModel::ConstantResistance { r_load: 4.5 }).unwrap();
        assert!((s.v_bus - 45.0).abs() < 1e-9);
        assert!((s.i_out[0] - 10.0).abs() < 1e-9);
    }

    /// Independent oracle: plain bisection on the same scalar balance, high root.
    fn bisect_four_vsc(d: f64) -> f64 {
        let f = |v: f64| 4.0 * (48.0 - v) / 0.3 - d / v;
        let (mut lo, mut hi) = (30.0, 48.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn four_vsc_constant_power_matches_quadratic_root() {
        // 4(48 - v)/0.3 = 480/v  ⇔  v² - 48 v + 36 = 0, high root.
        let closed = (48.0 + libm::sqrt(48.0 * 48.0 - 4.0 * 36.0)) / 2.0;
        let oracle = bisect_four_vsc(480.0);
        assert!((closed - oracle).abs() < 1e-10);
        assert!((closed - 47.237_900_077_244_5).abs() < 1e-9);

        let units: Vec<_> = (1..=4).map(|i| DerUnit::vsc(i, 48.0, 0.3, 0.0)).collect();
        let s = solve_bus(&units, &[0.0; 4], &cp(480.0)).unwrap();
        assert!((s.v_bus - closed).abs() < 1e-9);
        for i in &s.i_out {
            assert!((i - (48.0 - closed) / 0.3).abs() < 1e-9);
            assert!((i - s.i_out[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn csc_currents_are_fixed() {
        let units = [DerUnit::vsc(1, 48.0, 0.3, 0.1), DerUnit::csc(2, 2.5)];
        let s = solve_bus(&units, &[0.5, 0.0], &cp(600.0)).unwrap();
        assert_eq!(s.i_out[1], 2.5);
        assert!((s.v_bus - (48.5 - 0.4 * s.i_out[0])).abs() < 1e-9);
    }

    #[test]
    fn rejects_missing_vsc_and_overload() {
        assert_eq!(solve_bus(&[DerUnit::csc(1, 1.0)], &[0.0], &cp(10.0)), Err(GridError::NoVsc));
        let units = [DerUnit::vsc(1, 48.0, 0.3, 0.0)];
        // Peak deliverable power is 48²/(4·0.3) = 1920 W.
        match solve_bus(&units, &[0.0], &cp(2000.0)) {
            Err(GridError::NoSolution { residual, .. }) => assert!(residual < 0.0),
            other => panic!("expected NoSolution, got {other:?}"),
        }
        assert!(solve_bus(&units, &[0.0], &cp(1900.0)).is_ok());
    }

    #[test]
    fn csc_surplus_raises_bus_above_references() {
        let units = [DerUnit::vsc(1, 48.0, 0.3, 0.0), DerUnit::csc(2, 100.0)];
        let s = solve_bus(&units, &[0.0, 0.0], &cp(0.0)).unwrap();
        assert!((s.v_bus - 78.0).abs() < 1e-9);
    }

    #[test]
    fn zero_noise_sampler_is_exact() {
        let mut s = VoltageSampler::new(0.0, 10_000.0, rng::stream(1, 1));
        assert_eq!(s.sample_voltage(48.0, 5), vec![48.0; 5]);
        assert_eq!(s.sample_mean(48.0, 5), 48.0);
    }

    #[test]
    fn sampler_moments() {
        let mut s = VoltageSampler::new(0.01, 10_000.0, rng::stream(9, 4));
        let n = 100_000;
        let xs = s.sample_voltage(48.0, n);
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - 48.0).abs() < 2e-4, "mean {mean}");
        assert!((libm::sqrt(var) - 0.01).abs() < 0.01 * 0.05);
    }

    #[test]
    fn sampler_is_deterministic() {
        let a = VoltageSampler::new(0.01, 1.0, rng::stream(3, 7)).sample_voltage(48.0, 16);
        let b = VoltageSampler::new(0.01, 1.0, rng::stream(3, 7)).sample_voltage(48.0, 16);
        assert_eq!(a, b);
    }
}
