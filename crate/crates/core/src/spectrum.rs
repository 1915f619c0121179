//! Total, coherent and incoherent spectra and their post-processing.
//!
//! S(δ) = Re Σ_i Δt w_i Σ_j Δτ w_j g(t_i, τ_j) e^{iδτ_j}, δ = ω − ω_L, with
//! trapezoidal weights on both axes. The t sum is done first (see
//! [`TauProfile`]); the remaining one-sided τ transform is evaluated both by
//! direct summation and by a chirp-z transform, and the two must agree.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lindblad::{
    coherent_profile_from, CorrelationGrid, Propagator, SimConfig, TailDiagnostics, TauProfile, TimeGrid,
    Trajectory, TAU_TAIL_TOLERANCE,
};
use crate::quantum::DensityMatrix;

/// Required agreement between the direct and fast transforms, relative to
/// the largest |S|.
pub const DUAL_PATH_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_DETUNING_SPAN: f64 = 2.5;
pub const DEFAULT_DETUNING_POINTS: usize = 2001;

/// δ ∈ [−2.5 Ω0, 2.5 Ω0] on 2001 points.
pub fn default_detunings(omega0: f64) -> Vec<f64> {
    uniform_axis(-DEFAULT_DETUNING_SPAN * omega0, DEFAULT_DETUNING_SPAN * omega0, DEFAULT_DETUNING_POINTS)
}

pub fn uniform_axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let d = (hi - lo) / (n - 1) as f64;
    (0..n).map(|k| lo + k as f64 * d).collect()
}

/// Start and spacing if `axis` is uniform to 1e-9 of its spacing.
fn uniform_spacing(axis: &[f64]) -> Option<(f64, f64)> {
    if axis.len() < 2 {
        return None;
    }
    let d = (axis[axis.len() - 1] - axis[0]) / (axis.len() - 1) as f64;
    if !(d > 0.0) {
        return None;
    }
    let ok = axis
        .iter()
        .enumerate()
        .all(|(k, &x)| (x - (axis[0] + k as f64 * d)).abs() <= 1e-9 * d);
    ok.then_some((axis[0], d))
}

fn trapezoid_weight(j: usize, n: usize) -> f64 {
    if j == 0 || j + 1 == n {
        0.5
    } else {
        1.0
    }
}

/// Re Σ_j Δτ w_j F(τ_j) e^{iδτ_j} by direct summation.
pub fn transform_direct(profile: &TauProfile, detunings: &[f64]) -> Vec<f64> {
    let n = profile.values.len();
    let weighted: Vec<Complex64> = profile
        .values
        .iter()
        .enumerate()
        .map(|(j, v)| *v * (trapezoid_weight(j, n) * profile.dtau))
        .collect();
    detunings
        .par_iter()
        .map(|&delta| {
            let step = Complex64::from_polar(1.0, delta * profile.dtau);
            let mut phase = Complex64::new(1.0, 0.0);
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, w) in weighted.iter().enumerate() {
                if j % 64 == 0 {
                    phase = Complex64::from_polar(1.0, delta * profile.dtau * j as f64);
                }
                acc += *w * phase;
                phase *= step;
            }
            acc.re
        })
        .collect()
}

/// The same sum on the uniform axis δ_k = `start` + k·`spacing` through a
/// chirp-z (Bluestein) transform.
pub fn transform_fast(profile: &TauProfile, start: f64, spacing: f64, count: usize) -> Vec<f64> {
    let n = profile.values.len();
    if n == 0 || count == 0 {
        return vec![0.0; count];
    }
    let theta = spacing * profile.dtau;
    let chirp = |m: usize| -> Complex64 {
        // W^{m²/2}, W = e^{iθ}
        let m = m as f64;
        Complex64::from_polar(1.0, 0.5 * theta * m * m)
    };
    let len = (n + count - 1).next_power_of_two();
    let mut a = vec![Complex64::new(0.0, 0.0); len];
    for (j, v) in profile.values.iter().enumerate() {
        let pre = Complex64::from_polar(1.0, start * profile.dtau * j as f64);
        a[j] = *v * (trapezoid_weight(j, n) * profile.dtau) * pre * chirp(j);
    }
    let mut b = vec![Complex64::new(0.0, 0.0); len];
    b[0] = Complex64::new(1.0, 0.0);
    for m in 1..n.max(count) {
        let c = chirp(m).conj();
        if m < count {
            b[m] = c;
        }
        if m < n {
            b[len - m] = c;
        }
    }
    let mut planner = FftPlanner::<f64>::new();
    let forward: Arc<dyn Fft<f64>> = planner.plan_fft_forward(len);
    let inverse: Arc<dyn Fft<f64>> = planner.plan_fft_inverse(len);
    forward.process(&mut a);
    forward.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= *y;
    }
    inverse.process(&mut a);
    let norm = 1.0 / len as f64;
    (0..count).map(|k| (a[k] * chirp(k) * norm).re).collect()
}

/// Result of transforming one profile by both routes.
#[derive(Clone, Debug)]
pub struct Transformed {
    pub values: Vec<f64>,
    /// max |direct − fast| / max |direct|; `None` on a non-uniform axis.
    pub dual_path_deviation: Option<f64>,
}

/// Direct transform, cross-checked against the fast path on uniform axes.
pub fn transform(profile: &TauProfile, detunings: &[f64]) -> Result<Transformed> {
    let values = transform_direct(profile, detunings);
    let deviation = uniform_spacing(detunings).map(|(start, d)| {
        let fast = transform_fast(profile, start, d, detunings.len());
        let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let diff = values.iter().zip(&fast).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if scale > 0.0 {
            diff / scale
        } else {
            diff
        }
    });
    if let Some(dev) = deviation {
        if !(dev <= DUAL_PATH_TOLERANCE) {
            return Err(Error::Diverged {
                time: f64::NAN,
                reason: format!("direct and fast spectral transforms disagree by {dev:.3e}"),
            });
        }
    }
    Ok(Transformed {
        values,
        dual_path_deviation: deviation,
    })
}

/// Integrates a stored correlation grid over t.
pub fn integrate_rows(grid: &CorrelationGrid, time_grid: &TimeGrid) -> Result<TauProfile> {
    if grid.g.len() != time_grid.n_t || grid.g.iter().any(|r| r.len() != time_grid.n_tau) {
        return Err(Error::Config(format!(
            "correlation grid is {}×{} but the time grid is {}×{}",
            grid.g.len(),
            grid.g.first().map_or(0, |r| r.len()),
            time_grid.n_t,
            time_grid.n_tau
        )));
    }
    let dt = time_grid.dt();
    let mut values = vec![Complex64::new(0.0, 0.0); time_grid.n_tau];
    for (i, row) in grid.g.iter().enumerate() {
        let w = time_grid.row_weight(i) * dt;
        for (v, g) in values.iter_mut().zip(row) {
            *v += *g * w;
        }
    }
    Ok(TauProfile {
        dtau: time_grid.dtau(),
        values,
    })
}

/// Total spectrum from a stored correlation grid.
pub fn total_spectrum(grid: &CorrelationGrid, time_grid: &TimeGrid, detunings: &[f64]) -> Result<Vec<f64>> {
    Ok(transform(&integrate_rows(grid, time_grid)?, detunings)?.values)
}

/// Coherent spectrum from ⟨σ⁺(t)⟩⟨σ⁻(t+τ)⟩ = conj(s(t)) s(t+τ).
pub fn coherent_spectrum(traj: &Trajectory, time_grid: &TimeGrid, detunings: &[f64]) -> Result<Vec<f64>> {
    if traj.sigma_minus_exp.len() < time_grid.total_steps() + 1 || traj.grid.step != time_grid.step {
        return Err(Error::Config(format!(
            "trajectory ends at {} but the coherent spectrum needs ⟨σ⁻⟩ up to t_end + τ_max = {}",
            traj.times.last().copied().unwrap_or(f64::NAN),
            time_grid.t_end() + time_grid.tau_max()
        )));
    }
    Ok(transform(&coherent_profile_from(traj, time_grid), detunings)?.values)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub detunings: Vec<f64>,
    pub s_total: Vec<f64>,
    pub s_coh: Vec<f64>,
    pub s_inc: Vec<f64>,
    /// Coherently scattered fraction of the total emitted intensity.
    pub coh_fraction: f64,
}

impl SpectrumResult {
    /// Builds the result from total and coherent τ profiles. The fraction
    /// is the ratio of the frequency-integrated spectra, which for the
    /// one-sided transform equals the ratio of the τ = 0 values.
    pub fn from_profiles(total: &TauProfile, coherent: &TauProfile, detunings: &[f64]) -> Result<(Self, f64)> {
        let t = transform(total, detunings)?;
        let c = transform(coherent, detunings)?;
        let s_inc = t.values.iter().zip(&c.values).map(|(a, b)| a - b).collect();
        let f_tot = total.values.first().map_or(0.0, |z| z.re);
        let f_coh = coherent.values.first().map_or(0.0, |z| z.re);
        let coh_fraction = if f_tot > 0.0 { f_coh / f_tot } else { 0.0 };
        let dev = t.dual_path_deviation.unwrap_or(0.0).max(c.dual_path_deviation.unwrap_or(0.0));
        Ok((
            Self {
                detunings: detunings.to_vec(),
                s_total: t.values,
                s_coh: c.values,
                s_inc,
                coh_fraction,
            },
            dev,
        ))
    }

    pub fn max_total(&self) -> f64 {
        self.s_total.iter().fold(0.0, |m: f64, v| m.max(*v))
    }

    /// Smallest s_total relative to its maximum.
    pub fn min_total_relative(&self) -> f64 {
        let max = self.max_total();
        if max == 0.0 {
            return 0.0;
        }
        self.s_total.iter().fold(f64::INFINITY, |m: f64, v| m.min(*v)) / max
    }
}

/// A spectrum together with the diagnostics of the run that produced it.
#[derive(Clone, Debug)]
pub struct SpectrumRun {
    pub spectrum: SpectrumResult,
    pub tail: TailDiagnostics,
    pub dual_path_deviation: f64,
    pub warnings: Vec<String>,
    pub final_population: f64,
}

/// Evolves from the ground state and returns the three spectra on
/// `detunings`.
pub fn compute(config: &SimConfig, detunings: &[f64]) -> Result<SpectrumRun> {
    let prop = Propagator::new(config)?;
    let traj = prop.evolve(&DensityMatrix::ground())?;
    compute_with(&prop, &traj, detunings)
}

pub fn compute_with(prop: &Propagator, traj: &Trajectory, detunings: &[f64]) -> Result<SpectrumRun> {
    let config = prop.config();
    let (total, tail) = prop.correlation_profile(traj)?;
    let coherent = prop.coherent_profile(traj)?;
    let (spectrum, dev) = SpectrumResult::from_profiles(&total, &coherent, detunings)?;
    let mut warnings = Vec::new();
    let residual = tail.relevant(config.pulse.is_cw());
    if residual > TAU_TAIL_TOLERANCE {
        warnings.push(format!(
            "correlation at τ_max = {:.6e} is {residual:.3e} of its peak (limit {TAU_TAIL_TOLERANCE:e}); extend tau_max",
            config.grid.tau_max()
        ));
    }
    let negativity = spectrum.min_total_relative();
    if !config.pulse.is_cw() && negativity < -1e-6 {
        warnings.push(format!("total spectrum dips to {negativity:.3e} of its maximum"));
    }
    Ok(SpectrumRun {
        spectrum,
        tail,
        dual_path_deviation: dev,
        warnings,
        final_population: traj.final_state().population(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub position: f64,
    pub height: f64,
    /// ∫ S over [position − w, position + w].
    pub weight: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PeakSet {
    pub peaks: Vec<Peak>,
    pub window_half_width: f64,
}

impl PeakSet {
    /// Peak closest to `delta`.
    pub fn nearest(&self, delta: f64) -> Option<&Peak> {
        self.peaks
            .iter()
            .min_by(|a, b| (a.position - delta).abs().total_cmp(&(b.position - delta).abs()))
    }

    /// Largest peak within `tolerance` of `delta`.
    pub fn near(&self, delta: f64, tolerance: f64) -> Option<&Peak> {
        self.peaks
            .iter()
            .filter(|p| (p.position - delta).abs() <= tolerance)
            .max_by(|a, b| a.height.total_cmp(&b.height))
    }
}

/// ∫_a^b of the piecewise-linear interpolant of (x, y).
pub fn integrate_window(x: &[f64], y: &[f64], a: f64, b: f64) -> f64 {
    let interp = |k: usize, t: f64| y[k] + (y[k + 1] - y[k]) * (t - x[k]) / (x[k + 1] - x[k]);
    let mut acc = 0.0;
    for k in 0..x.len().saturating_sub(1) {
        let lo = x[k].max(a);
        let hi = x[k + 1].min(b);
        if hi > lo {
            acc += 0.5 * (hi - lo) * (interp(k, lo) + interp(k, hi));
        }
    }
    acc
}

/// Local maxima above `min_height_frac`·max, refined by a three-point
/// parabola; each weight integrates the spectrum over ±`window_half_width`.
pub fn find_peaks(spec: &[f64], detunings: &[f64], min_height_frac: f64, window_half_width: f64) -> Result<PeakSet> {
    if !(min_height_frac > 0.0 && min_height_frac < 1.0) {
        return Err(Error::Config(format!("min_height_frac must lie in (0, 1), got {min_height_frac}")));
    }
    if spec.len() != detunings.len() {
        return Err(Error::Config("spectrum and detuning axis differ in length".into()));
    }
    let max = spec.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
    let mut peaks = Vec::new();
    if spec.len() < 3 || !(max > 0.0) {
        return Ok(PeakSet {
            peaks,
            window_half_width,
        });
    }
    let threshold = min_height_frac * max;
    for k in 1..spec.len() - 1 {
        let (l, c, r) = (spec[k - 1], spec[k], spec[k + 1]);
        if !(c > l && c >= r && c >= threshold) {
            continue;
        }
        let (xl, xc, xr) = (detunings[k - 1], detunings[k], detunings[k + 1]);
        // vertex of the parabola through the three points
        let d1 = (c - l) / (xc - xl);
        let d2 = (r - c) / (xr - xc);
        let curv = (d2 - d1) / (xr - xl);
        let (position, height) = if curv < 0.0 {
            let x = (0.5 * (xl + xc) - 0.5 * d1 / curv).clamp(xl, xr);
            let h = l + d1 * (x - xl) + curv * (x - xl) * (x - xc);
            (x, h)
        } else {
            (xc, c)
        };
        peaks.push(Peak {
            position,
            height,
            weight: integrate_window(detunings, spec, position - window_half_width, position + window_half_width),
        });
    }
    Ok(PeakSet {
        peaks,
        window_half_width,
    })
}

/// W₊/W₋ with W± = ∫ s_inc over [±Ω_R − w, ±Ω_R + w]; `w` defaults to Ω_R/2.
/// The +Ω_R window collects the +→− line.
pub fn sideband_weight_ratio(spec: &SpectrumResult, omega_r: f64, half_width: Option<f64>) -> Result<f64> {
    let (plus, minus) = sideband_weights(spec, omega_r, half_width)?;
    if !(minus > 0.0) {
        return Err(Error::DegenerateConfiguration(format!(
            "lower sideband window carries no weight ({minus:e})"
        )));
    }
    Ok(plus / minus)
}

/// (W₊, W₋) as used by [`sideband_weight_ratio`].
pub fn sideband_weights(spec: &SpectrumResult, omega_r: f64, half_width: Option<f64>) -> Result<(f64, f64)> {
    let w = half_width.unwrap_or(0.5 * omega_r.abs());
    let omega_r = omega_r.abs();
    if !(w > 0.0) || omega_r - w <= 0.0 {
        return Err(Error::Config(format!(
            "sideband windows of half-width {w} around ±{omega_r} overlap δ = 0"
        )));
    }
    let x = &spec.detunings;
    let (lo, hi) = (x[0], x[x.len() - 1]);
    let spacing = (hi - lo) / (x.len() - 1).max(1) as f64;
    if omega_r + w > hi || -omega_r - w < lo || w < 2.0 * spacing {
        return Err(Error::Config(format!(
            "sideband windows ±{omega_r} ± {w} are not resolved by the detuning axis [{lo}, {hi}]"
        )));
    }
    let plus = integrate_window(x, &spec.s_inc, omega_r - w, omega_r + w);
    let minus = integrate_window(x, &spec.s_inc, -omega_r - w, -omega_r + w);
    Ok((plus, minus))
}

/// max_k |S(δ_k) − S(−δ_k)| / max|S| on an axis symmetric about zero.
pub fn mirror_asymmetry(values: &[f64]) -> f64 {
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let n = values.len();
    (0..n).map(|k| (values[k] - values[n - 1 - k]).abs()).fold(0.0, f64::max) / scale
}
