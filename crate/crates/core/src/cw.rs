//! Closed-form continuous-wave results: steady state, dressed-state
//! transition weights and the Mollow reference values.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::drive::dressed_states;
use crate::error::{Error, Result};
use crate::quantum::Operator2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CwSteadyState {
    /// ⟨σ⁻⟩
    pub sigma_minus: Complex64,
    /// ⟨σ⁺σ⁻⟩
    pub population: f64,
    /// γ_p = (γ + γ′)/2
    pub gamma_p: f64,
}

impl CwSteadyState {
    pub fn density_matrix(&self) -> Operator2 {
        let s = self.sigma_minus;
        Operator2([
            [Complex64::new(1.0 - self.population, 0.0), s.conj()],
            [s, Complex64::new(self.population, 0.0)],
        ])
    }

    /// |⟨σ⁻⟩|²/⟨σ⁺σ⁻⟩, the fraction of coherently scattered light.
    pub fn coherent_fraction(&self) -> f64 {
        if self.population == 0.0 {
            1.0
        } else {
            self.sigma_minus.norm_sqr() / self.population
        }
    }
}

/// Steady state of the driven, damped two-level system with
/// H = Δσ⁺σ⁻ + (Ω/2)(σ⁺ + σ⁻):
///
/// ⟨σ⁻⟩ = −(iΩ/2)(γ_p − iΔ)/(γ_p² + Δ² + Ω²γ_p/γ),
/// ⟨σ⁺σ⁻⟩ = ½[1 + (γ/γ_p)(γ_p² + Δ²)/Ω²]⁻¹.
pub fn cw_steady_state(omega: f64, delta: f64, gamma: f64, gamma_prime: f64) -> Result<CwSteadyState> {
    if !(gamma > 0.0) {
        return Err(Error::SingularParameters(format!(
            "cw steady state needs γ > 0 (got {gamma})"
        )));
    }
    if gamma_prime < 0.0 {
        return Err(Error::SingularParameters(format!("γ′ must be ≥ 0 (got {gamma_prime})")));
    }
    let gamma_p = 0.5 * (gamma + gamma_prime);
    if omega == 0.0 {
        return Ok(CwSteadyState {
            sigma_minus: Complex64::new(0.0, 0.0),
            population: 0.0,
            gamma_p,
        });
    }
    let denom = gamma_p * gamma_p + delta * delta + omega * omega * gamma_p / gamma;
    let sigma_minus = Complex64::new(0.0, -0.5 * omega) * Complex64::new(gamma_p, -delta) / denom;
    let population = 0.5 / (1.0 + (gamma / gamma_p) * (gamma_p * gamma_p + delta * delta) / (omega * omega));
    Ok(CwSteadyState {
        sigma_minus,
        population,
        gamma_p,
    })
}

/// Spectral weights of the two dressed-state sidebands in units of the
/// common transition rate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionWeights {
    /// Γ₊₋ (the line at δ = +Ω_R)
    pub gamma_plus_minus: f64,
    /// Γ₋₊ (the line at δ = −Ω_R)
    pub gamma_minus_plus: f64,
    pub ratio: f64,
}

/// Γ₊₋ = ⟨+|ρ|+⟩ |⟨−|σ⁻|+⟩|², Γ₋₊ = ⟨−|ρ|−⟩ |⟨+|σ⁻|−⟩|².
///
/// Expanding the projector populations in κ± gives
/// Γ₊₋/Γ₋₊ = κ₊²(1+κ₋²)/(κ₋²(1+κ₊²))
///         × [1 + (κ₊²−1)⟨σ⁺σ⁻⟩ + 2κ₊Re⟨σ⁻⟩]/[1 + (κ₋²−1)⟨σ⁺σ⁻⟩ + 2κ₋Re⟨σ⁻⟩];
/// the evaluation here goes through the normalised dressed vectors so that
/// it stays finite when one of the κ diverges.
pub fn transition_weights(omega: f64, delta: f64, ss: &CwSteadyState) -> Result<TransitionWeights> {
    let d = dressed_states(omega, delta)?;
    let rho = ss.density_matrix();
    let population = |v: [Complex64; 2]| -> f64 {
        let rv = rho.apply(v);
        (v[0].conj() * rv[0] + v[1].conj() * rv[1]).re
    };
    let p_plus = population(d.plus_vector());
    let p_minus = population(d.minus_vector());
    let gamma_plus_minus = p_plus * d.plus_to_minus_element();
    let gamma_minus_plus = p_minus * d.minus_to_plus_element();
    if !(gamma_minus_plus > 0.0) || !gamma_plus_minus.is_finite() {
        return Err(Error::DegenerateConfiguration(format!(
            "sideband weight ratio undefined for Ω = {omega}, Δ = {delta} (Γ₋₊ = {gamma_minus_plus})"
        )));
    }
    Ok(TransitionWeights {
        gamma_plus_minus,
        gamma_minus_plus,
        ratio: gamma_plus_minus / gamma_minus_plus,
    })
}

/// Strong-field (Ω ≫ γ, Δ = 0) Mollow triplet reference values. Only valid
/// asymptotically.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MollowReference {
    /// Peak positions δ = −Ω, 0, +Ω.
    pub positions: [f64; 3],
    pub center_to_side_height: f64,
    pub center_to_side_weight: f64,
    pub side_weight_ratio: f64,
    /// Widths (FWHM) of the side and central lines: 3γ/2 and γ.
    pub side_fwhm: f64,
    pub center_fwhm: f64,
}

pub fn mollow_reference(omega: f64, gamma: f64) -> MollowReference {
    MollowReference {
        positions: [-omega, 0.0, omega],
        center_to_side_height: 3.0,
        center_to_side_weight: 2.0,
        side_weight_ratio: 1.0,
        side_fwhm: 1.5 * gamma,
        center_fwhm: gamma,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// The ratio written out in κ± exactly as in the expanded formula.
    fn ratio_from_kappas(omega: f64, delta: f64, ss: &CwSteadyState) -> f64 {
        let d = dressed_states(omega, delta).unwrap();
        let (kp, km) = (d.kappa_plus, d.kappa_minus);
        let n = ss.population;
        let re = ss.sigma_minus.re;
        kp * kp * (1.0 + km * km) / (km * km * (1.0 + kp * kp)) * (1.0 + (kp * kp - 1.0) * n + 2.0 * kp * re)
            / (1.0 + (km * km - 1.0) * n + 2.0 * km * re)
    }

    #[test]
    fn gamma_zero_is_singular() {
        assert!(matches!(cw_steady_state(1.0, 0.0, 0.0, 0.1), Err(Error::SingularParameters(_))));
    }

    #[test]
    fn strong_drive_saturates() {
        let ss = cw_steady_state(1e6, 0.3, 0.1, 0.05).unwrap();
        assert!((ss.population - 0.5).abs() < 1e-9);
    }

    #[test]
    fn resonant_pure_radiative_values() {
        // Δ = 0, γ′ = 0, γ_p = γ/2:
        // n = ½ Ω²/(Ω² + γ²/2), ⟨σ⁻⟩ = −(iΩ/2)(γ/2)/(γ²/4 + Ω²/2)
        let (omega, gamma) = (0.7, 0.2);
        let ss = cw_steady_state(omega, 0.0, gamma, 0.0).unwrap();
        assert!((ss.population - 0.5 * omega * omega / (omega * omega + 0.5 * gamma * gamma)).abs() < 1e-15);
        let s = -0.5 * omega * 0.5 * gamma / (0.25 * gamma * gamma + 0.5 * omega * omega);
        assert!((ss.sigma_minus - Complex64::new(0.0, s)).norm() < 1e-15);
    }

    #[test]
    fn steady_state_is_a_fixed_point_of_the_bloch_equations() {
        // d⟨σ⁻⟩/dt = −(γ_p + iΔ)⟨σ⁻⟩ + i(Ω/2)(2n − 1)
        // dn/dt = −γ n − Ω Im⟨σ⁻⟩
        for &(omega, delta, gamma, gp) in &[(1.0, 1.0, 0.025, 0.1), (0.3, -0.7, 0.2, 0.0), (2.0, 0.1, 0.5, 1.0)] {
            let ss = cw_steady_state(omega, delta, gamma, gp).unwrap();
            let s = ss.sigma_minus;
            let ds = -Complex64::new(ss.gamma_p, delta) * s + Complex64::new(0.0, 0.5 * omega * (2.0 * ss.population - 1.0));
            let dn = -gamma * ss.population - omega * s.im;
            assert!(ds.norm() < 1e-14 && dn.abs() < 1e-14, "{ds} {dn}");
        }
    }

    #[test]
    fn transition_ratio_matches_kappa_expansion() {
        for &(omega, delta, gp) in &[(1.0, 1.0, 0.1), (0.5, -0.8, 0.02), (1.3, 0.4, 0.0)] {
            let ss = cw_steady_state(omega, delta, 0.025, gp).unwrap();
            let w = transition_weights(omega, delta, &ss).unwrap();
            let oracle = ratio_from_kappas(omega, delta, &ss);
            assert!((w.ratio - oracle).abs() <= 1e-10 * oracle, "{} vs {oracle}", w.ratio);
        }
    }

    #[test]
    fn resonant_ratio_is_one() {
        for gp in [0.0, 0.1, 1.0] {
            let ss = cw_steady_state(1.0, 0.0, 0.025, gp).unwrap();
            assert!(ss.sigma_minus.re.abs() < 1e-16);
            let w = transition_weights(1.0, 0.0, &ss).unwrap();
            assert!((w.ratio - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn detailed_balance_without_dephasing() {
        // The exact steady state deviates from dressed-state balance at
        // second order in γ/Ω; the deviation shrinks accordingly.
        for &(omega, delta) in &[(1.0, 1.0), (1.0, 0.3), (0.2, 1.0), (2.0, -1.5)] {
            let mut prev = f64::INFINITY;
            for gamma in [0.025, 0.0025, 0.00025] {
                let ss = cw_steady_state(omega, delta, gamma, 0.0).unwrap();
                let dev = (transition_weights(omega, delta, &ss).unwrap().ratio - 1.0).abs();
                assert!(dev <= 2.0 * (gamma / omega).powi(2), "Ω={omega} Δ={delta} γ={gamma}: {dev}");
                assert!(dev < prev / 50.0);
                prev = dev;
            }
        }
    }

    #[test]
    fn dephasing_enhances_plus_minus_line() {
        let ss = cw_steady_state(1.0, 1.0, 1.0 / 40.0, 0.1).unwrap();
        let w = transition_weights(1.0, 1.0, &ss).unwrap();
        assert!(w.ratio > 1.0);
        // frozen regression constant
        assert!((w.ratio - 14.406_808_780_644).abs() < 1e-9, "{}", w.ratio);
        // mirror: Δ → −Δ inverts the ratio
        let ss_m = cw_steady_state(1.0, -1.0, 1.0 / 40.0, 0.1).unwrap();
        let w_m = transition_weights(1.0, -1.0, &ss_m).unwrap();
        assert!((w_m.ratio * w.ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mollow_reference_values() {
        let m = mollow_reference(2.0, 0.05);
        assert_eq!(m.positions, [-2.0, 0.0, 2.0]);
        assert_eq!(m.center_to_side_height, 3.0);
        assert_eq!(m.center_to_side_weight, 2.0);
        assert_eq!(m.side_weight_ratio, 1.0);
    }

    proptest! {
        #[test]
        fn steady_state_bounds(omega in 1e-3..10.0f64, delta in -5.0..5.0f64, gamma in 1e-3..2.0f64, gp in 0.0..2.0f64) {
            let ss = cw_steady_state(omega, delta, gamma, gp).unwrap();
            prop_assert!(ss.population >= 0.0 && ss.population <= 0.5);
            prop_assert!(ss.sigma_minus.norm_sqr() <= ss.population * (1.0 + 1e-12));
            prop_assert!(ss.coherent_fraction() <= 1.0 + 1e-12);
        }

        #[test]
        fn dephasing_with_positive_detuning_favours_blue_line(
            omega in 0.2..3.0f64, delta in 0.05..3.0f64, gp in 0.01..1.0f64
        ) {
            let gamma = 0.025;
            let ss = cw_steady_state(omega, delta, gamma, gp).unwrap();
            let w = transition_weights(omega, delta, &ss).unwrap();
            prop_assert!(w.gamma_plus_minus >= 0.0 && w.gamma_minus_plus > 0.0);
            prop_assert!(w.ratio > 1.0);
        }
    }
}
