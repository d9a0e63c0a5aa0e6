//! Importance-weighted accumulating traces and step-size schedules.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

/// Accumulating trace `z_i = γλρ_{i-1} z_{i-1} + φ_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceState {
    pub z: DVector<f64>,
    /// `ρ_{i-1}`; 1 before the first step.
    pub last_rho: f64,
}

impl TraceState {
    pub fn new(p: usize) -> Self {
        TraceState {
            z: DVector::zeros(p),
            last_rho: 1.0,
        }
    }

    /// Decay factor `γλρ_{i-1}` for the upcoming step.
    pub fn decay(&self, lambda: f64, gamma: f64) -> f64 {
        gamma * lambda * self.last_rho
    }

    /// Advances the trace with the features of the current state and then
    /// records `rho` as the weight for the next step.
    pub fn advance(&mut self, phi: &DVector<f64>, lambda: f64, gamma: f64, rho: f64) -> &DVector<f64> {
        let rho_prev = self.last_rho;
        update_trace(self, phi, lambda, gamma, rho_prev);
        self.last_rho = rho;
        &self.z
    }
}

/// One trace step with an explicit `ρ_{i-1}`. The state's `last_rho` is left
/// untouched.
pub fn update_trace<'a>(
    state: &'a mut TraceState,
    phi: &DVector<f64>,
    lambda: f64,
    gamma: f64,
    rho_prev: f64,
) -> &'a DVector<f64> {
    state.z *= gamma * lambda * rho_prev;
    state.z += phi;
    &state.z
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RateMode {
    /// `a0 · ac / (ac + i)`
    #[default]
    Linear,
    /// `a0 · ac / (ac + i^{2/3})`
    TwoThirds,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSchedule {
    pub a0: f64,
    pub ac: f64,
    #[serde(default)]
    pub mode: RateMode,
}

impl RateSchedule {
    pub fn linear(a0: f64, ac: f64) -> Self {
        RateSchedule {
            a0,
            ac,
            mode: RateMode::Linear,
        }
    }

    pub fn two_thirds(a0: f64, ac: f64) -> Self {
        RateSchedule {
            a0,
            ac,
            mode: RateMode::TwoThirds,
        }
    }

    /// Step size at step `i` (1-based).
    pub fn rate(&self, i: usize) -> f64 {
        let i = i as f64;
        let t = match self.mode {
            RateMode::Linear => i,
            RateMode::TwoThirds => i.powf(2.0 / 3.0),
        };
        self.a0 * self.ac / (self.ac + t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn lambda_zero_keeps_only_current_features() {
        let mut tr = TraceState::new(2);
        for (k, rho) in [(1.0, 2.0), (3.0, 0.5), (-1.0, 1.0)] {
            let phi = v(&[k, 2.0 * k]);
            assert_eq!(tr.advance(&phi, 0.0, 0.95, rho), &phi);
        }
    }

    #[test]
    fn first_step_is_phi() {
        let mut tr = TraceState::new(3);
        let phi = v(&[0.2, 0.4, 1.0]);
        assert_eq!(tr.advance(&phi, 0.9, 0.95, 3.0), &phi);
    }

    #[test]
    fn three_steps_match_unrolled_sum() {
        let (lambda, gamma) = (0.7, 0.9);
        let phis = [v(&[1.0, 0.3]), v(&[0.5, -0.2]), v(&[0.1, 0.9])];
        let rhos = [1.5, 0.4, 2.0];
        let mut tr = TraceState::new(2);
        for (phi, rho) in phis.iter().zip(rhos) {
            tr.advance(phi, lambda, gamma, rho);
        }
        // z_3 = Σ_k φ_k (γλ)^{3-k} Π_{m=k}^{2} ρ_m
        let mut expect = v(&[0.0, 0.0]);
        for k in 0..3 {
            let prod: f64 = rhos[k..2].iter().product();
            expect += &phis[k] * ((gamma * lambda).powi((2 - k) as i32) * prod);
        }
        assert!((tr.z - expect).amax() < 1e-15);
    }

    #[test]
    fn on_policy_lambda_one_is_discounted_sum() {
        let gamma = 0.95;
        let mut tr = TraceState::new(1);
        let mut expect = 0.0;
        for i in 0..50 {
            let x = (i as f64).sin();
            tr.advance(&v(&[x]), 1.0, gamma, 1.0);
            expect = gamma * expect + x;
        }
        assert!((tr.z[0] - expect).abs() < 1e-12);
    }

    #[test]
    fn rate_values() {
        let a = RateSchedule::linear(0.1, 1e3);
        assert!((a.rate(1000) - 0.05).abs() < 1e-15);
        assert!((a.rate(0) - 0.1).abs() < 1e-15);
        let b = RateSchedule::two_thirds(0.3, 10.0);
        assert!((b.rate(1000) - 0.3 * 10.0 / 110.0).abs() < 1e-12);
    }

    #[test]
    fn alpha_over_beta_vanishes() {
        let a = RateSchedule::linear(1.0, 10.0);
        let b = RateSchedule::two_thirds(0.01, 10.0);
        let r = |i| a.rate(i) / b.rate(i);
        assert!(r(1_000_000) < r(10_000) && r(10_000) < r(100));
        assert!(r(1_000_000_000_000) < 0.05);
    }

    proptest! {
        #[test]
        fn rates_positive_and_non_increasing(a0 in 1e-3..10.0f64, ac in 1.0..1e4f64, i in 1usize..1_000_000, two in any::<bool>()) {
            let s = if two { RateSchedule::two_thirds(a0, ac) } else { RateSchedule::linear(a0, ac) };
            prop_assert!(s.rate(i) > 0.0);
            prop_assert!(s.rate(i + 1) <= s.rate(i));
        }
    }
}
