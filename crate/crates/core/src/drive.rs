//! Drive envelopes, the rotating-frame Hamiltonian and dressed-state analytics.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::Operator2;

/// Default tanh rise time of a square pulse, as a fraction of its duration.
pub const DEFAULT_RISE_FRACTION: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PulseShape {
    /// Ω(t) = Ω0 exp[−π(Ω0 t/Θ)²]
    Gaussian,
    /// Flat top of duration Θ/Ω0 with tanh edges of the given rise time.
    Square { rise_time: f64 },
    /// Ω(t) = Ω0 for all t.
    ConstantCw,
}

impl PulseShape {
    pub fn name(&self) -> &'static str {
        match self {
            PulseShape::Gaussian => "gaussian",
            PulseShape::Square { .. } => "square",
            PulseShape::ConstantCw => "cw",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    pub shape: PulseShape,
    /// Peak Rabi frequency Ω0.
    pub omega0: f64,
    /// Pulse area Θ in radians. Unused for cw drives.
    pub area: f64,
    pub t_center: f64,
}

impl PulseSpec {
    pub fn gaussian(omega0: f64, area: f64, t_center: f64) -> Result<Self> {
        Self {
            shape: PulseShape::Gaussian,
            omega0,
            area,
            t_center,
        }
        .validated()
    }

    /// Square pulse with the default rise time (1% of the duration Θ/Ω0).
    pub fn square(omega0: f64, area: f64, t_center: f64) -> Result<Self> {
        let rise_time = DEFAULT_RISE_FRACTION * area / omega0;
        Self::square_with_rise(omega0, area, t_center, rise_time)
    }

    pub fn square_with_rise(omega0: f64, area: f64, t_center: f64, rise_time: f64) -> Result<Self> {
        Self {
            shape: PulseShape::Square { rise_time },
            omega0,
            area,
            t_center,
        }
        .validated()
    }

    /// A constant drive. `omega0 = 0` is accepted and describes an undriven emitter.
    pub fn cw(omega0: f64) -> Result<Self> {
        Self {
            shape: PulseShape::ConstantCw,
            omega0,
            area: 0.0,
            t_center: 0.0,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !self.omega0.is_finite() || !self.area.is_finite() || !self.t_center.is_finite() {
            return Err(Error::Config("pulse parameters must be finite".into()));
        }
        match self.shape {
            PulseShape::ConstantCw => {
                if self.omega0 < 0.0 {
                    return Err(Error::Config(format!("omega0 must be ≥ 0, got {}", self.omega0)));
                }
            }
            PulseShape::Gaussian | PulseShape::Square { .. } => {
                if !(self.omega0 > 0.0) {
                    return Err(Error::Config(format!("omega0 must be > 0, got {}", self.omega0)));
                }
                if !(self.area > 0.0) {
                    return Err(Error::Config(format!("pulse area must be > 0, got {}", self.area)));
                }
            }
        }
        if let PulseShape::Square { rise_time } = self.shape {
            if !(rise_time > 0.0) || rise_time >= self.duration() {
                return Err(Error::Config(format!(
                    "square rise time must lie in (0, {}), got {rise_time}",
                    self.duration()
                )));
            }
        }
        Ok(self)
    }

    pub fn is_cw(&self) -> bool {
        matches!(self.shape, PulseShape::ConstantCw)
    }

    /// Nominal duration Θ/Ω0.
    pub fn duration(&self) -> f64 {
        self.area / self.omega0
    }

    /// 1/e half width τ = Θ/(√π Ω0) of the Gaussian envelope.
    pub fn gaussian_width(&self) -> f64 {
        self.area / (PI.sqrt() * self.omega0)
    }

    /// Half width of the interval outside which the drive is treated as off
    /// when laying out a simulation window.
    pub fn support_half_width(&self) -> f64 {
        match self.shape {
            PulseShape::Gaussian => 5.0 * self.gaussian_width(),
            PulseShape::Square { rise_time } => 0.5 * self.duration() + 15.0 * rise_time,
            PulseShape::ConstantCw => 0.0,
        }
    }

    pub fn envelope(&self, t: f64) -> f64 {
        rabi_envelope(self, t)
    }

    /// ∫_{a}^{b} Ω(t) dt in closed form (pulsed shapes).
    pub fn integrated_area(&self, a: f64, b: f64) -> f64 {
        match self.shape {
            PulseShape::Gaussian => {
                let k = PI.sqrt() * self.omega0 / self.area;
                0.5 * self.area
                    * (libm::erf(k * (b - self.t_center)) - libm::erf(k * (a - self.t_center)))
            }
            PulseShape::Square { rise_time } => {
                let half = 0.5 * self.duration();
                let on = self.t_center - half;
                let off = self.t_center + half;
                // ∫ tanh(x/r) dx = r ln cosh(x/r)
                let lncosh = |x: f64| {
                    let y = (x / rise_time).abs();
                    y + (-2.0 * y).exp().ln_1p() - std::f64::consts::LN_2
                };
                0.5 * self.omega0
                    * rise_time
                    * ((lncosh(b - on) - lncosh(a - on)) - (lncosh(b - off) - lncosh(a - off)))
            }
            PulseShape::ConstantCw => self.omega0 * (b - a),
        }
    }

    /// Full width at half maximum of Ω(t).
    pub fn fwhm(&self) -> Option<f64> {
        match self.shape {
            PulseShape::Gaussian => {
                Some(2.0 * (self.area / self.omega0) * (std::f64::consts::LN_2 / PI).sqrt())
            }
            PulseShape::Square { .. } => Some(self.duration()),
            PulseShape::ConstantCw => None,
        }
    }
}

/// Rabi frequency Ω(t) of the drive.
pub fn rabi_envelope(pulse: &PulseSpec, t: f64) -> f64 {
    let s = t - pulse.t_center;
    match pulse.shape {
        PulseShape::Gaussian => {
            let x = pulse.omega0 * s / pulse.area;
            pulse.omega0 * (-PI * x * x).exp()
        }
        PulseShape::Square { rise_time } => {
            let half = 0.5 * pulse.duration();
            0.5 * pulse.omega0 * (((s + half) / rise_time).tanh() - ((s - half) / rise_time).tanh())
        }
        PulseShape::ConstantCw => pulse.omega0,
    }
}

/// H = Δ σ⁺σ⁻ + (Ω/2)(σ⁺ + σ⁻) for a given instantaneous Rabi frequency.
pub fn hamiltonian_at(omega: f64, delta: f64) -> Operator2 {
    Operator2::from_real([[0.0, 0.5 * omega], [0.5 * omega, delta]])
}

/// Rotating-frame Hamiltonian at time `t`.
pub fn hamiltonian(pulse: &PulseSpec, delta: f64, t: f64) -> Operator2 {
    hamiltonian_at(rabi_envelope(pulse, t), delta)
}

/// Instantaneous eigenstates of the driven Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DressedState {
    pub omega: f64,
    pub delta: f64,
    /// Ω_R = √(Ω² + Δ²)
    pub omega_r: f64,
    pub energy_plus: f64,
    pub energy_minus: f64,
    /// κ± = Ω/(±Ω_R − Δ); infinite when the state is purely |e⟩.
    pub kappa_plus: f64,
    pub kappa_minus: f64,
}

fn normalize(a: f64, b: f64) -> [Complex64; 2] {
    let n = a.hypot(b);
    [Complex64::new(a / n, 0.0), Complex64::new(b / n, 0.0)]
}

impl DressedState {
    /// |+⟩ in the {|g⟩, |e⟩} basis, equal to (|g⟩ + κ₊|e⟩)/√(1+κ₊²).
    ///
    /// Uses the algebraically equivalent forms (Ω_R − Δ, Ω) or (Ω, Ω_R + Δ),
    /// whichever avoids cancellation, so the Ω → 0 limits are exact.
    pub fn plus_vector(&self) -> [Complex64; 2] {
        if self.delta >= 0.0 {
            normalize(self.omega, self.omega_r + self.delta)
        } else {
            normalize(self.omega_r - self.delta, self.omega)
        }
    }

    /// |−⟩, equal to (|g⟩ + κ₋|e⟩)/√(1+κ₋²).
    pub fn minus_vector(&self) -> [Complex64; 2] {
        if self.delta >= 0.0 {
            normalize(self.omega_r + self.delta, -self.omega)
        } else {
            normalize(self.omega, -(self.omega_r - self.delta))
        }
    }

    /// |⟨−|σ⁻|+⟩|², the matrix element of the +→− line.
    pub fn plus_to_minus_element(&self) -> f64 {
        let p = self.plus_vector();
        let m = self.minus_vector();
        // ⟨−|σ⁻|+⟩ = m_g* · p_e
        (m[0].conj() * p[1]).norm_sqr()
    }

    /// |⟨+|σ⁻|−⟩|², the matrix element of the −→+ line.
    pub fn minus_to_plus_element(&self) -> f64 {
        let p = self.plus_vector();
        let m = self.minus_vector();
        (p[0].conj() * m[1]).norm_sqr()
    }
}

pub fn dressed_states(omega: f64, delta: f64) -> Result<DressedState> {
    if omega == 0.0 && delta == 0.0 {
        return Err(Error::DegenerateDrive);
    }
    let omega_r = omega.hypot(delta);
    Ok(DressedState {
        omega,
        delta,
        omega_r,
        energy_plus: 0.5 * delta + 0.5 * omega_r,
        energy_minus: 0.5 * delta - 0.5 * omega_r,
        kappa_plus: omega / (omega_r - delta),
        kappa_minus: omega / (-omega_r - delta),
    })
}

/// Left side of the adiabatic-following criterion,
/// |2Δ Ω(t) t / (τ² (Ω(t)² + Δ²)^{3/2})| with t measured from the pulse center.
pub fn adiabaticity_lhs(pulse: &PulseSpec, delta: f64, t: f64) -> Result<f64> {
    if pulse.shape != PulseShape::Gaussian {
        return Err(Error::UnsupportedShape(pulse.shape.name()));
    }
    if delta == 0.0 {
        return Ok(0.0);
    }
    let s = t - pulse.t_center;
    let omega = rabi_envelope(pulse, t);
    let tau = pulse.gaussian_width();
    let denom = tau * tau * (omega * omega + delta * delta).powf(1.5);
    Ok((2.0 * delta * omega * s / denom).abs())
}

/// Maximum of [`adiabaticity_lhs`] over time, with its location relative to
/// the pulse center.
pub fn adiabaticity_max(pulse: &PulseSpec, delta: f64) -> Result<(f64, f64)> {
    if pulse.shape != PulseShape::Gaussian {
        return Err(Error::UnsupportedShape(pulse.shape.name()));
    }
    if delta == 0.0 {
        return Ok((0.0, 0.0));
    }
    let tau = pulse.gaussian_width();
    let f = |s: f64| adiabaticity_lhs(pulse, delta, pulse.t_center + s).unwrap_or(0.0);
    // the function is even in s; scan s ≥ 0
    let n = 20_000;
    let s_max = 8.0 * tau;
    let ds = s_max / n as f64;
    let (mut best_k, mut best) = (0, f(0.0));
    for k in 1..=n {
        let v = f(k as f64 * ds);
        if v > best {
            best = v;
            best_k = k;
        }
    }
    // golden-section refinement inside the neighbouring cells
    let (mut a, mut b) = ((best_k as f64 - 1.0).max(0.0) * ds, (best_k as f64 + 1.0) * ds);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    while (b - a) > 1e-13 * tau.max(1e-300) {
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    let s = 0.5 * (a + b);
    let v = f(s);
    Ok(if v >= best { (v, s) } else { (best, best_k as f64 * ds) })
}

/// A predicted sidepeak: the n-th solution t_n > 0 (measured from the pulse
/// center) and the Rabi frequency Ω(t_n) at which it appears.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SidepeakTime {
    pub n: usize,
    pub time: f64,
    pub omega: f64,
}

/// ∫_{−t}^{t} Ω − 2Ω(t) t for a Gaussian pulse, t measured from the center.
pub fn sidepeak_lhs(pulse: &PulseSpec, s: f64) -> f64 {
    let c = pulse.t_center;
    pulse.integrated_area(c - s, c + s) - 2.0 * rabi_envelope(pulse, c + s) * s
}

/// Solves ∫_{−t}^{t} Ω dt′ − 2Ω(t) t = (2n + ½)π for n = 0..=n_max.
///
/// The left side rises monotonically from 0 to Θ, so solutions stop once
/// (2n + ½)π ≥ Θ and the returned list may be shorter than `n_max + 1`.
pub fn sidepeak_times(pulse: &PulseSpec, n_max: usize) -> Result<Vec<SidepeakTime>> {
    if pulse.shape != PulseShape::Gaussian {
        return Err(Error::UnsupportedShape(pulse.shape.name()));
    }
    let tau = pulse.gaussian_width();
    let ds = tau / 1000.0;
    let s_end = 12.0 * tau;
    let mut out = Vec::new();
    let mut k_lo = 0usize;
    for n in 0..=n_max {
        let target = (2.0 * n as f64 + 0.5) * PI;
        if target >= pulse.area {
            break;
        }
        let g = |s: f64| sidepeak_lhs(pulse, s) - target;
        // bracket scan, resuming where the previous root was found
        let mut k = k_lo;
        let mut bracket = None;
        while (k as f64) * ds < s_end {
            let (a, b) = (k as f64 * ds, (k + 1) as f64 * ds);
            if g(a) <= 0.0 && g(b) > 0.0 {
                bracket = Some((a, b));
                break;
            }
            k += 1;
        }
        let Some((mut a, mut b)) = bracket else { break };
        k_lo = k;
        while b - a > 1e-12 * tau.max(1e-300) {
            let m = 0.5 * (a + b);
            if g(m) <= 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        let s = 0.5 * (a + b);
        out.push(SidepeakTime {
            n,
            time: s,
            omega: rabi_envelope(pulse, pulse.t_center + s),
        });
    }
    Ok(out)
}

/// Pulse duration against the radiative lifetime: purely dynamical
/// spectral features need Θ ≪ Ω0/γ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LifetimeCheck {
    pub area_over_pi: f64,
    /// Ω0/(πγ)
    pub bound_over_pi: f64,
    /// Θ ≥ Ω0/(2γ)
    pub flagged: bool,
}

pub fn lifetime_check(pulse: &PulseSpec, gamma: f64) -> LifetimeCheck {
    let bound = if gamma > 0.0 { pulse.omega0 / gamma } else { f64::INFINITY };
    LifetimeCheck {
        area_over_pi: pulse.area / PI,
        bound_over_pi: bound / PI,
        flagged: !pulse.is_cw() && pulse.area >= 0.5 * bound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::eig_hermitian_2x2;
    use proptest::prelude::*;

    fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        #[allow(clippy::too_many_arguments)]
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                    + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
            }
        }
        let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
        rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 50)
    }

    #[test]
    fn gaussian_envelope_basics() {
        let p = PulseSpec::gaussian(1.0, 5.0 * PI, 3.0).unwrap();
        assert_eq!(rabi_envelope(&p, 3.0), 1.0);
        let cw = PulseSpec::cw(0.7).unwrap();
        assert_eq!(rabi_envelope(&cw, -100.0), 0.7);
        assert_eq!(rabi_envelope(&cw, 1e6), 0.7);
    }

    #[test]
    fn gaussian_area_by_adaptive_quadrature() {
        for &(omega0, area) in &[(1.0, PI), (1.0, 5.0 * PI), (2.5, 2.0 * PI), (0.3, 0.5)] {
            let p = PulseSpec::gaussian(omega0, area, 0.0).unwrap();
            let w = 12.0 * p.gaussian_width();
            let integral = adaptive_simpson(&|t| rabi_envelope(&p, t), -w, w, 1e-12);
            assert!((integral - area).abs() <= 1e-8 * area, "{integral} vs {area}");
            assert!((p.integrated_area(-w, w) - area).abs() <= 1e-12 * area);
            // simulation window [−5τ, 5τ] holds the area to 1e-6
            let window = p.support_half_width();
            assert!((p.integrated_area(-window, window) - area).abs() <= 1e-6 * area);
        }
    }

    #[test]
    fn square_area_and_edges() {
        let p = PulseSpec::square(1.0, 3.0 * PI, 0.0).unwrap();
        let w = p.support_half_width() * 2.0;
        let q = adaptive_simpson(&|t| rabi_envelope(&p, t), -w, w, 1e-12);
        assert!((q - 3.0 * PI).abs() < 1e-8);
        assert!((p.integrated_area(-w, w) - 3.0 * PI).abs() < 1e-10);
        assert!((p.integrated_area(-1.0, 2.0) - adaptive_simpson(&|t| rabi_envelope(&p, t), -1.0, 2.0, 1e-13)).abs() < 1e-9);
        assert!((rabi_envelope(&p, 0.0) - 1.0).abs() < 1e-12);
        assert!((rabi_envelope(&p, 0.5 * p.duration()) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn invalid_pulses() {
        assert!(PulseSpec::gaussian(0.0, 1.0, 0.0).is_err());
        assert!(PulseSpec::gaussian(1.0, -1.0, 0.0).is_err());
        assert!(PulseSpec::cw(-1.0).is_err());
        assert!(PulseSpec::cw(0.0).is_ok());
        assert!(PulseSpec::square_with_rise(1.0, 1.0, 0.0, 2.0).is_err());
    }

    #[test]
    fn hamiltonian_direct_substitution() {
        let p = PulseSpec::gaussian(1.0, PI, 0.0).unwrap();
        let h = hamiltonian(&p, 0.0, 50.0);
        assert!(h.max_abs() < 1e-300);
        let h = hamiltonian(&p, 1.0, 0.0);
        assert_eq!(h, Operator2::from_real([[0.0, 0.5], [0.5, 1.0]]));
    }

    #[test]
    fn dressed_three_four_five() {
        let d = dressed_states(3.0, 4.0).unwrap();
        assert_eq!(d.omega_r, 5.0);
        assert_eq!(d.energy_plus, 4.5);
        assert_eq!(d.energy_minus, -0.5);
        assert!((d.energy_plus - d.energy_minus - d.omega_r).abs() < 1e-12);
        assert_eq!(d.kappa_plus, 3.0);
        assert_eq!(d.kappa_minus, -1.0 / 3.0);
    }

    #[test]
    fn dressed_resonant_equal_mixture() {
        let d = dressed_states(0.8, 0.0).unwrap();
        assert_eq!(d.kappa_plus, 1.0);
        assert_eq!(d.kappa_minus, -1.0);
        let p = d.plus_vector();
        assert!((p[0].norm_sqr() - 0.5).abs() < 1e-15 && (p[1].norm_sqr() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn dressed_weak_drive_limit() {
        let d = dressed_states(1e-9, 0.5).unwrap();
        assert!(d.kappa_minus.abs() < 1e-8);
        assert!(d.kappa_plus > 1e8);
        let p = d.plus_vector();
        let m = d.minus_vector();
        assert!((p[1].norm() - 1.0).abs() < 1e-15);
        assert!((m[0].norm() - 1.0).abs() < 1e-15);
        let d0 = dressed_states(0.0, 0.5).unwrap();
        assert_eq!(d0.plus_vector()[1].re, 1.0);
        assert_eq!(d0.minus_vector()[0].re, 1.0);
        // negative detuning swaps roles
        let dn = dressed_states(1e-9, -0.5).unwrap();
        assert!((dn.plus_vector()[0].norm() - 1.0).abs() < 1e-15);
        assert!((dn.minus_vector()[1].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dressed_degenerate_input() {
        assert_eq!(dressed_states(0.0, 0.0), Err(Error::DegenerateDrive));
    }

    #[test]
    fn adiabaticity_trivial_cases() {
        let p = PulseSpec::gaussian(1.0, 5.0 * PI, 2.0).unwrap();
        for t in [-10.0, 0.0, 2.0, 7.5] {
            assert_eq!(adiabaticity_lhs(&p, 0.0, t).unwrap(), 0.0);
        }
        assert_eq!(adiabaticity_lhs(&p, 0.33, 2.0).unwrap(), 0.0);
        let sq = PulseSpec::square(1.0, PI, 0.0).unwrap();
        assert!(matches!(adiabaticity_lhs(&sq, 0.3, 1.0), Err(Error::UnsupportedShape(_))));
    }

    #[test]
    fn adiabaticity_max_matches_dense_scan() {
        let p = PulseSpec::gaussian(1.0, 5.0 * PI, 0.0).unwrap();
        let delta = 0.33;
        let mut best = 0.0f64;
        let mut t = -60.0;
        while t <= 60.0 {
            best = best.max(adiabaticity_lhs(&p, delta, t).unwrap());
            t += 1e-4;
        }
        let (max, at) = adiabaticity_max(&p, delta).unwrap();
        assert!(max >= best * (1.0 - 1e-9), "{max} vs scan {best}");
        assert!((max - best).abs() <= 1e-6 * best, "{max} vs scan {best}");
        assert!(at > 0.0);
    }

    #[test]
    fn adiabaticity_vanishes_for_long_pulses() {
        let delta = 0.33;
        let mut prev = f64::INFINITY;
        let mut area = 5.0 * PI;
        for _ in 0..8 {
            let p = PulseSpec::gaussian(1.0, area, 0.0).unwrap();
            // fixed t/τ
            let t = 1.3 * p.gaussian_width();
            let v = adiabaticity_lhs(&p, delta, t).unwrap();
            assert!(v < prev);
            prev = v;
            area *= 2.0;
        }
        assert!(prev < 1e-2);
    }

    #[test]
    fn lifetime_flag() {
        let gamma = 1.0 / 40.0;
        let short = lifetime_check(&PulseSpec::gaussian(1.0, 5.0 * PI, 0.0).unwrap(), gamma);
        assert!(!short.flagged);
        assert!((short.bound_over_pi - 40.0 / PI).abs() < 1e-12);
        let long = lifetime_check(&PulseSpec::gaussian(1.0, 16.0 * PI, 0.0).unwrap(), gamma);
        assert!(long.flagged && (long.area_over_pi - 16.0).abs() < 1e-12);
        assert!(!lifetime_check(&PulseSpec::gaussian(1.0, 16.0 * PI, 0.0).unwrap(), 0.0).flagged);
    }

    #[test]
    fn sidepeak_two_pi_by_bracket_scan() {
        let p = PulseSpec::gaussian(1.0, 2.0 * PI, 0.0).unwrap();
        let roots = sidepeak_times(&p, 5).unwrap();
        // only (2·0 + ½)π < 2π has a solution
        assert_eq!(roots.len(), 1);

        // independent oracle: uniform scan of the left side with sign-change
        // detection and linear interpolation, then a secant polish.
        let target = 0.5 * PI;
        let f = |s: f64| {
            let area = adaptive_simpson(&|t| rabi_envelope(&p, t), -s, s, 1e-14);
            area - 2.0 * rabi_envelope(&p, s) * s - target
        };
        let mut s = 0.0;
        let ds = 1e-3;
        while f(s + ds) < 0.0 {
            s += ds;
        }
        let (mut a, mut b) = (s, s + ds);
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            if f(m) < 0.0 { a = m } else { b = m }
        }
        let t0 = 0.5 * (a + b);
        assert!((roots[0].time - t0).abs() < 1e-9, "{} vs {t0}", roots[0].time);
        assert!((roots[0].omega - rabi_envelope(&p, t0)).abs() < 1e-9);
        assert!((sidepeak_lhs(&p, roots[0].time) - target).abs() < 1e-10);
    }

    #[test]
    fn sidepeak_residuals_and_count() {
        let p = PulseSpec::gaussian(1.0, 9.0 * PI, 0.0).unwrap();
        let roots = sidepeak_times(&p, 10).unwrap();
        // (2n + ½)π < 9π → n ≤ 4
        assert_eq!(roots.len(), 5);
        for r in &roots {
            let lhs = sidepeak_lhs(&p, r.time);
            assert!((lhs - (2.0 * r.n as f64 + 0.5) * PI).abs() < 1e-10);
            assert!(r.time > 0.0);
        }
        assert!(roots.windows(2).all(|w| w[0].time < w[1].time && w[0].omega > w[1].omega));
        assert_eq!(sidepeak_times(&p, 2).unwrap().len(), 3);
    }

    #[test]
    fn sidepeak_lhs_is_monotone() {
        for area in [PI, 2.0 * PI, 5.0 * PI] {
            let p = PulseSpec::gaussian(1.0, area, 0.0).unwrap();
            let tau = p.gaussian_width();
            let mut prev = sidepeak_lhs(&p, 0.0);
            assert!(prev.abs() < 1e-15);
            for k in 1..=5000 {
                let v = sidepeak_lhs(&p, k as f64 * tau * 2e-3);
                assert!(v >= prev - 1e-14);
                prev = v;
            }
            assert!((prev - area).abs() < 1e-6 * area);
        }
    }

    proptest! {
        #[test]
        fn hamiltonian_spectrum_matches_dressed_energies(omega in 0.0..3.0f64, delta in -3.0..3.0f64) {
            prop_assume!(omega.abs() + delta.abs() > 1e-6);
            let d = dressed_states(omega, delta).unwrap();
            let e = eig_hermitian_2x2(&hamiltonian_at(omega, delta)).unwrap();
            prop_assert!((e.values[0] - d.energy_minus).abs() <= 1e-10);
            prop_assert!((e.values[1] - d.energy_plus).abs() <= 1e-10);
            prop_assert!((d.energy_plus - d.energy_minus - d.omega_r).abs() <= 1e-12);
        }

        #[test]
        fn dressed_vectors_are_orthonormal_eigenvectors(omega in 1e-3..3.0f64, delta in -3.0..3.0f64) {
            let d = dressed_states(omega, delta).unwrap();
            prop_assert!((d.kappa_plus * d.kappa_minus + 1.0).abs() <= 1e-10);
            let (p, m) = (d.plus_vector(), d.minus_vector());
            let overlap = p[0].conj() * m[0] + p[1].conj() * m[1];
            prop_assert!(overlap.norm() <= 1e-10);
            // same vector as the (1, κ)/√(1+κ²) form
            let k = d.kappa_plus;
            let n = (1.0 + k * k).sqrt();
            prop_assert!((p[0].re - 1.0 / n).abs() <= 1e-10 && (p[1].re - k / n).abs() <= 1e-10);
            let h = hamiltonian_at(omega, delta);
            let hp = h.apply(p);
            prop_assert!((hp[0] - p[0] * d.energy_plus).norm() <= 1e-10);
            prop_assert!((hp[1] - p[1] * d.energy_plus).norm() <= 1e-10);
        }
    }
}
