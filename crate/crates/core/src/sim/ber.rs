//! Monte Carlo bit-error rate of the power-talk detector against the
//! Gaussian-tail prediction.

use alloc::vec::Vec;

use rand::Rng;

use crate::grid::{solve_bus, ControlMode, DerUnit, GridError, LoadModel, VoltageSampler};
use crate::powertalk::{detect_bit, modulate, PtDetectorState, Symbol};
use crate::rng::{self, streams};

/// Standard normal upper tail `Q(x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / core::f64::consts::SQRT_2)
}

/// Error probability of the sample-mean detector for equiprobable bits:
/// `½ [Q(√N Δv₁/σ) + Q(√N Δv₀/σ)]`.
pub fn analytic_ber(dv_one: f64, dv_zero: f64, sigma: f64, n_samples: usize) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    let s = libm::sqrt(n_samples as f64) / sigma;
    0.5 * (q_function(s * dv_one) + q_function(s * dv_zero))
}

/// The grid a single transmitter signals over.
#[derive(Debug, Clone, PartialEq)]
pub struct BerSetup {
    pub units: Vec<DerUnit>,
    pub offsets: Vec<f64>,
    pub load: LoadModel,
    /// Index of the transmitting unit.
    pub tx: usize,
}

/// Bus levels for one transmitter: `γ = 0`, and the distances `Δv₁`, `Δv₀`
/// of the `1` and `0` levels from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolLevels {
    pub base: f64,
    pub dv_one: f64,
    pub dv_zero: f64,
}

impl BerSetup {
    /// Case-study grid during a PTCh: all nine units in VSC mode at the
    /// post-step 1440 W load, unit 1 transmitting.
    pub fn case_study() -> Self {
        let mut units = super::presets::baseline().build_units();
        for u in &mut units {
            u.mode = ControlMode::Vsc;
        }
        let n = units.len();
        BerSetup { units, offsets: alloc::vec![0.0; n], load: LoadModel::ConstantPower { d: 1440.0 }, tx: 0 }
    }

    pub fn levels(&self, gamma: f64) -> Result<SymbolLevels, GridError> {
        let mut probe = self.units.clone();
        let base = solve_bus(&probe, &self.offsets, &self.load)?.v_bus;
        probe[self.tx].pt_deviation = modulate(Symbol::One, gamma);
        let one = solve_bus(&probe, &self.offsets, &self.load)?.v_bus;
        probe[self.tx].pt_deviation = modulate(Symbol::Zero, gamma);
        let zero = solve_bus(&probe, &self.offsets, &self.load)?.v_bus;
        Ok(SymbolLevels { base, dv_one: one - base, dv_zero: base - zero })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerReport {
    pub gamma: f64,
    pub sigma: f64,
    pub n_samples: usize,
    pub trials: u64,
    pub errors: u64,
    pub empirical: f64,
    pub analytic: f64,
    pub levels: SymbolLevels,
    /// Three binomial standard deviations around the analytic value.
    pub tolerance: f64,
    pub agree: bool,
}

/// Runs `trials` random bits through modulate → bus → ADC → detector.
pub fn ber_with(
    setup: &BerSetup,
    gamma: f64,
    sigma: f64,
    n_samples: usize,
    trials: u64,
    seed: u64,
) -> Result<BerReport, GridError> {
    let levels = setup.levels(gamma)?;
    let mut bits = rng::stream(seed, streams::BER);
    let mut adc = VoltageSampler::new(sigma, 1.0, rng::stream(seed, streams::SAMPLER_BASE));
    let det = PtDetectorState::new(levels.base, levels.dv_one.max(levels.dv_zero), 1);
    let mut errors = 0u64;
    for _ in 0..trials {
        let bit: bool = bits.random();
        let v = if bit { levels.base + levels.dv_one } else { levels.base - levels.dv_zero };
        let samples = adc.sample_voltage(v, n_samples);
        if detect_bit(&samples, &det) != bit {
            errors += 1;
        }
    }
    let empirical = errors as f64 / trials as f64;
    let analytic = analytic_ber(levels.dv_one, levels.dv_zero, sigma, n_samples);
    let tolerance = 3.0 * libm::sqrt(analytic * (1.0 - analytic) / trials as f64);
    Ok(BerReport {
        gamma,
        sigma,
        n_samples,
        trials,
        errors,
        empirical,
        analytic,
        levels,
        tolerance,
        agree: (empirical - analytic).abs() <= tolerance,
    })
}

/// [`ber_with`] on [`BerSetup::case_study`].
pub fn ber_tool(gamma: f64, sigma: f64, n_samples: usize, trials: u64, seed: u64) -> BerReport {
    ber_with(&BerSetup::case_study(), gamma, sigma, n_samples, trials, seed).expect("case-study grid is solvable")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_function_known_values() {
        assert!((q_function(0.0) - 0.5).abs() < 1e-15);
        assert!((q_function(1.0) - 0.158_655_253_931_457).abs() < 1e-12);
        assert!((q_function(3.0) - 0.001_349_898_031_630).abs() < 1e-13);
    }

    #[test]
    fn zero_noise_never_errs() {
        let r = ber_tool(0.2, 0.0, 20, 10_000, 1);
        assert_eq!(r.errors, 0);
        assert!(r.agree);
    }

    #[test]
    fn huge_noise_is_a_coin_flip() {
        let r = ber_tool(0.2, 1.0e3, 1, 20_000, 2);
        assert!((r.empirical - 0.5).abs() < 0.02, "{}", r.empirical);
        assert!((r.analytic - 0.5).abs() < 1e-3);
    }
}
