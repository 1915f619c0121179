//! Exciton–acoustic-phonon coupling in the polaron frame.
//!
//! The bath enters through the super-ohmic spectral function
//! J(ω) = α ω³ exp(−ω²/2ω_b²). The kernel forms follow the standard polaron
//! master-equation construction:
//!
//! - φ(τ) = ∫₀^∞ dω J(ω)/ω² [coth(ω/2k_BT) cos ωτ − i sin ωτ]
//! - ⟨B⟩ = exp(−φ(0)/2)
//! - G_g(τ) = ⟨B⟩²(cosh φ(τ) − 1), G_u(τ) = ⟨B⟩² sinh φ(τ)
//! - X_g = (Ω/2)(σ⁺ + σ⁻), X_u = i(Ω/2)(σ⁺ − σ⁻)
//!
//! and the scattering term added to the Lindblad generator is
//! −∫₀^∞ dτ Σ_m G_m(τ)[X_m, e^{−iHτ} X_m e^{iHτ} ρ] + H.c. with the
//! Hamiltonian frozen at the current time. No renormalisation of Ω or Δ by
//! ⟨B⟩ is applied; the drive parameters are taken as already renormalised.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::drive::{hamiltonian, hamiltonian_at};
use crate::error::{Error, Result};
use crate::lindblad::SimConfig;
use crate::quadrature::CompositeRule;
use crate::quantum::{eig_hermitian_2x2, expm_skew, DensityMatrix, LiouvilleMap, Operator2};
use crate::units::{mev_to_rad_per_ps, HBAR_MEV_PS, KB_MEV_PER_K};

/// Upper limit of the ω integral in units of ω_b.
const OMEGA_CUTOFF_FACTOR: f64 = 8.0;
const GL_ORDER: usize = 16;
/// Kernels are truncated once they stay below this fraction of their peak.
pub const KERNEL_DECAY: f64 = 1e-5;
/// Required agreement between the kernel transforms on the τ grid and on a
/// grid with every other node.
pub const KERNEL_CONVERGENCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhononParams {
    /// Coupling strength α (time²).
    pub alpha: f64,
    /// Cutoff frequency ω_b.
    pub omega_b: f64,
    /// Temperature in kelvin.
    pub temperature: f64,
    /// k_B in internal frequency units per kelvin.
    pub boltzmann: f64,
}

impl PhononParams {
    /// Parameters in QD units: α in ps², ω_b in meV, T in K. Internal
    /// frequencies are rad/ps.
    pub fn qd_units(alpha_ps2: f64, omega_b_mev: f64, temperature_k: f64) -> Result<Self> {
        let p = Self {
            alpha: alpha_ps2,
            omega_b: mev_to_rad_per_ps(omega_b_mev),
            temperature: temperature_k,
            boltzmann: KB_MEV_PER_K / HBAR_MEV_PS,
        };
        p.validate()?;
        Ok(p)
    }

    /// Re-expresses the parameters with frequencies measured in units of
    /// `unit` (and times in units of 1/`unit`).
    pub fn rescaled(&self, unit: f64) -> Self {
        Self {
            alpha: self.alpha * unit * unit,
            omega_b: self.omega_b / unit,
            temperature: self.temperature,
            boltzmann: self.boltzmann / unit,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.alpha >= 0.0
            && self.omega_b > 0.0
            && self.temperature >= 0.0
            && self.boltzmann >= 0.0
            && [self.alpha, self.omega_b, self.temperature, self.boltzmann]
                .iter()
                .all(|x| x.is_finite());
        if !ok {
            return Err(Error::Config(format!(
                "phonon parameters need α ≥ 0, ω_b > 0, T ≥ 0; got α = {}, ω_b = {}, T = {}",
                self.alpha, self.omega_b, self.temperature
            )));
        }
        Ok(())
    }

    /// k_B T in internal frequency units.
    pub fn thermal_frequency(&self) -> f64 {
        self.boltzmann * self.temperature
    }
}

/// J(ω) = α ω³ exp(−ω²/2ω_b²)
pub fn spectral_function(params: &PhononParams, omega: f64) -> f64 {
    let x = omega / params.omega_b;
    params.alpha * omega.powi(3) * (-0.5 * x * x).exp()
}

/// ω coth(ω/2k_BT), continuous through ω → 0 where it tends to 2k_BT.
fn omega_coth(omega: f64, kt: f64) -> f64 {
    if kt == 0.0 {
        return omega;
    }
    let x = omega / (2.0 * kt);
    if x.abs() < 1e-4 {
        2.0 * kt * (1.0 + x * x / 3.0)
    } else {
        omega / x.tanh()
    }
}

fn correlation_rule(params: &PhononParams, tau_max: f64, refine: usize) -> CompositeRule {
    let upper = OMEGA_CUTOFF_FACTOR * params.omega_b;
    // keep the phase advance per panel below ~2 rad
    let panels = (16.0 + 0.5 * upper * tau_max.abs()).ceil() as usize * refine;
    CompositeRule::new(0.0, upper, panels, GL_ORDER)
}

struct CorrelationNodes {
    omega: Vec<f64>,
    re_weight: Vec<f64>,
    im_weight: Vec<f64>,
}

impl CorrelationNodes {
    fn new(params: &PhononParams, rule: &CompositeRule) -> Self {
        let kt = params.thermal_frequency();
        let mut omega = Vec::with_capacity(rule.nodes.len());
        let mut re_weight = Vec::with_capacity(rule.nodes.len());
        let mut im_weight = Vec::with_capacity(rule.nodes.len());
        for (&w, &q) in rule.nodes.iter().zip(&rule.weights) {
            let x = w / params.omega_b;
            // J(ω)/ω² = α ω exp(−ω²/2ω_b²)
            let envelope = params.alpha * (-0.5 * x * x).exp();
            omega.push(w);
            re_weight.push(q * envelope * omega_coth(w, kt));
            im_weight.push(q * envelope * w);
        }
        Self {
            omega,
            re_weight,
            im_weight,
        }
    }

    fn eval(&self, tau: f64) -> Complex64 {
        let mut re = 0.0;
        let mut im = 0.0;
        for ((&w, &a), &b) in self.omega.iter().zip(&self.re_weight).zip(&self.im_weight) {
            let (s, c) = (w * tau).sin_cos();
            re += a * c;
            im -= b * s;
        }
        Complex64::new(re, im)
    }
}

/// φ(τ) by composite Gauss–Legendre quadrature over ω ∈ (0, 8ω_b].
pub fn phonon_correlation(params: &PhononParams, tau: f64) -> Complex64 {
    let rule = correlation_rule(params, tau, 1);
    CorrelationNodes::new(params, &rule).eval(tau)
}

/// Same quadrature with twice the panels; used for convergence checks.
pub fn phonon_correlation_refined(params: &PhononParams, tau: f64) -> Complex64 {
    let rule = correlation_rule(params, tau, 2);
    CorrelationNodes::new(params, &rule).eval(tau)
}

/// ⟨B⟩ = exp(−φ(0)/2)
pub fn thermal_average(params: &PhononParams) -> f64 {
    (-0.5 * phonon_correlation(params, 0.0).re).exp()
}

/// Tabulated polaron kernels on a uniform τ grid.
#[derive(Clone, Debug)]
pub struct PhononKernels {
    pub tau_step: f64,
    pub phi: Vec<Complex64>,
    pub b_avg: f64,
    pub g_g: Vec<Complex64>,
    pub g_u: Vec<Complex64>,
    /// Index of the last node used by the memory integral.
    pub cutoff_index: usize,
    pub tau_cutoff: f64,
}

impl PhononKernels {
    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    pub fn tau(&self, k: usize) -> f64 {
        k as f64 * self.tau_step
    }

    pub fn is_trivial(&self) -> bool {
        self.cutoff_index == 0
    }

    /// Quadrature weights over [0, τ_cutoff]: trapezoid with Gregory end
    /// corrections (3/8, 7/6, 23/24, 1, …), falling back to the plain
    /// trapezoid on very short ranges.
    pub fn weights(&self) -> Vec<f64> {
        integration_weights(self.cutoff_index + 1, self.tau_step)
    }
}

fn integration_weights(n: usize, h: f64) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        2..=5 => {
            let mut w = vec![h; n];
            w[0] = 0.5 * h;
            w[n - 1] = 0.5 * h;
            w
        }
        _ => {
            let mut w = vec![h; n];
            let ends = [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0];
            for (k, e) in ends.iter().enumerate() {
                w[k] = e * h;
                w[n - 1 - k] = e * h;
            }
            w
        }
    }
}

/// Tabulates φ, G_g, G_u on τ_k = k·`tau_step`, k = 0..n.
///
/// Fails if the kernels have not decayed below `KERNEL_DECAY` of their peak
/// inside the grid, or if the ω quadrature does not reproduce a refined
/// evaluation to 1e-8 relative.
pub fn build_kernels(params: &PhononParams, tau_step: f64, n: usize) -> Result<PhononKernels> {
    params.validate()?;
    if !(tau_step > 0.0) || n < 2 {
        return Err(Error::Config("kernel grid needs a positive step and at least 2 nodes".into()));
    }
    let tau_end = tau_step * (n - 1) as f64;
    let rule = correlation_rule(params, tau_end, 1);
    let nodes = CorrelationNodes::new(params, &rule);
    let phi: Vec<Complex64> = (0..n).map(|k| nodes.eval(k as f64 * tau_step)).collect();

    let phi0 = phi[0].norm();
    if phi0 > 0.0 {
        let refined_rule = correlation_rule(params, tau_end, 2);
        let refined = CorrelationNodes::new(params, &refined_rule);
        for k in [0, n / 4, n / 2, n - 1] {
            let diff = (refined.eval(k as f64 * tau_step) - phi[k]).norm();
            if diff > 1e-8 * phi0 {
                return Err(Error::Config(format!(
                    "phonon correlation quadrature unconverged at τ = {} (error {diff:.2e})",
                    k as f64 * tau_step
                )));
            }
        }
    }

    let b_avg = (-0.5 * phi[0].re).exp();
    let b2 = b_avg * b_avg;
    // cosh φ − 1 = 2 sinh²(φ/2), free of cancellation for small φ
    let g_g: Vec<Complex64> = phi
        .iter()
        .map(|p| {
            let h = (p * 0.5).sinh();
            h * h * (2.0 * b2)
        })
        .collect();
    let g_u: Vec<Complex64> = phi.iter().map(|p| p.sinh() * b2).collect();

    let peak = |v: &[Complex64]| v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let (pg, pu, pp) = (peak(&g_g), peak(&g_u), peak(&phi));
    let significant = |k: usize| {
        g_g[k].norm() > KERNEL_DECAY * pg || g_u[k].norm() > KERNEL_DECAY * pu || phi[k].norm() > KERNEL_DECAY * pp
    };
    let last_significant = (0..n).rev().find(|&k| pp > 0.0 && significant(k));
    let cutoff_index = match last_significant {
        None => 0,
        Some(k) if k + 1 >= n => {
            return Err(Error::Config(format!(
                "kernel τ grid ending at {tau_end} is too short: the phonon kernels have not decayed \
                 to {KERNEL_DECAY:e} of their peak; extend it beyond {tau_end}"
            )))
        }
        Some(k) => k + 1,
    };
    Ok(PhononKernels {
        tau_step,
        phi,
        b_avg,
        g_g,
        g_u,
        cutoff_index,
        tau_cutoff: cutoff_index as f64 * tau_step,
    })
}

/// Kernels with the default resolution min(0.01/ω_b, h) and an extent that
/// starts at 40/ω_b and doubles until the kernels have decayed.
pub fn build_default_kernels(params: &PhononParams, h: f64) -> Result<PhononKernels> {
    let tau_step = (0.01 / params.omega_b).min(h);
    let mut extent = 40.0 / params.omega_b;
    let mut last_err = None;
    for _ in 0..6 {
        let n = (extent / tau_step).ceil() as usize + 1;
        match build_kernels(params, tau_step, n) {
            Ok(k) => return Ok(k),
            Err(e) => last_err = Some(e),
        }
        extent *= 2.0;
    }
    Err(last_err.expect("at least one attempt"))
}

/// Quadrature transform Σ_k w_k G(τ_k) e^{−iντ_k}.
fn transform(values: &[Complex64], weights: &[f64], tau_step: f64, nu: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    let step = Complex64::from_polar(1.0, -nu * tau_step);
    let mut phase = Complex64::new(1.0, 0.0);
    for (k, (v, w)) in values.iter().zip(weights).enumerate() {
        if k % 256 == 0 {
            phase = Complex64::from_polar(1.0, -nu * tau_step * k as f64);
        }
        acc += *v * phase * *w;
        phase *= step;
    }
    acc
}

fn quadratures(omega: f64) -> [Operator2; 2] {
    let half = Complex64::new(0.5 * omega, 0.0);
    let i_half = Complex64::new(0.0, 0.5 * omega);
    let sp = Operator2::sigma_plus();
    let sm = Operator2::sigma_minus();
    [(sp + sm).scale(half), (sp - sm).scale(i_half)]
}

/// The phonon term as a superoperator on B:
/// −Σ_m (X Y B − Y B X + B Y† X − X B Y†), with Y_m = ∫ G_m(τ) X̃_m(τ) dτ.
/// For Hermitian ρ this is T(ρ) + T(ρ)† with T(ρ) = −Σ_m [X_m, Y_m ρ].
fn superoperator_from(xs: &[Operator2; 2], ys: &[Operator2; 2]) -> LiouvilleMap {
    let mut out = LiouvilleMap::zero();
    for (x, y) in xs.iter().zip(ys) {
        let yd = y.adjoint();
        let term = LiouvilleMap::left(&x.matmul(y)) - LiouvilleMap::sandwich(y, x)
            + LiouvilleMap::right(&yd.matmul(x))
            - LiouvilleMap::sandwich(x, &yd);
        out = out - term;
    }
    out
}

fn apply_term(xs: &[Operator2; 2], ys: &[Operator2; 2], rho: &Operator2) -> Operator2 {
    let mut out = Operator2::zero();
    for (x, y) in xs.iter().zip(ys) {
        // T = −[X, Yρ]
        let t = -(x.matmul(&y.matmul(rho)) - y.matmul(rho).matmul(x));
        out += t + t.adjoint();
    }
    out
}

/// Phonon contribution to dρ/dt at time t, evaluated directly: the memory
/// integral runs over the kernel grid with U(τ) = exp(−iH_S(t)τ) at every node.
pub fn polaron_dissipator(
    config: &SimConfig,
    kernels: &PhononKernels,
    rho: &DensityMatrix,
    t: f64,
) -> Result<Operator2> {
    let omega = crate::drive::rabi_envelope(&config.pulse, t);
    if omega == 0.0 || kernels.is_trivial() {
        return Ok(Operator2::zero());
    }
    let h = hamiltonian(&config.pulse, config.delta, t);
    let xs = quadratures(omega);
    let weights = kernels.weights();
    let mut ys = [Operator2::zero(); 2];
    for (k, w) in weights.iter().enumerate() {
        let u = expm_skew(&h, kernels.tau(k))?;
        let ud = u.adjoint();
        for (m, g) in [kernels.g_g[k], kernels.g_u[k]].iter().enumerate() {
            let xt = u.matmul(&xs[m]).matmul(&ud);
            ys[m] += xt.scale(*g * *w);
        }
    }
    Ok(apply_term(&xs, &ys, rho.op()))
}

/// Phonon term prepared for repeated evaluation during propagation. The
/// memory integral is evaluated through the eigen-decomposition of the
/// frozen Hamiltonian, so only the kernel transforms at the Bohr
/// frequencies 0 and ±Ω_R are needed.
#[derive(Clone, Debug)]
pub struct PolaronModel {
    kernels: PhononKernels,
    weights: Vec<f64>,
    static_transform: [Complex64; 2],
}

impl PolaronModel {
    pub fn new(params: &PhononParams, config: &SimConfig) -> Result<Self> {
        let kernels = build_default_kernels(params, config.grid.step)?;
        let model = Self::from_kernels(kernels);
        model.check_convergence(config.pulse.omega0.hypot(config.delta))?;
        Ok(model)
    }

    pub fn from_kernels(kernels: PhononKernels) -> Self {
        let weights = kernels.weights();
        let static_transform = [
            transform(&kernels.g_g, &weights, kernels.tau_step, 0.0),
            transform(&kernels.g_u, &weights, kernels.tau_step, 0.0),
        ];
        Self {
            kernels,
            weights,
            static_transform,
        }
    }

    pub fn kernels(&self) -> &PhononKernels {
        &self.kernels
    }

    /// Compares the memory-integral transforms against the same rule on a
    /// grid with twice the spacing, at the frequencies the drive can reach.
    pub fn check_convergence(&self, max_frequency: f64) -> Result<()> {
        if self.kernels.is_trivial() {
            return Ok(());
        }
        let k = &self.kernels;
        let coarse_n = k.cutoff_index / 2 + 1;
        let coarse_w = integration_weights(coarse_n, 2.0 * k.tau_step);
        let sub = |v: &[Complex64]| -> Vec<Complex64> { (0..coarse_n).map(|i| v[2 * i]).collect() };
        let (gg, gu) = (sub(&k.g_g), sub(&k.g_u));
        for nu in [0.0, max_frequency, -max_frequency, 0.5 * max_frequency, -0.5 * max_frequency] {
            for (fine_v, coarse_v) in [(&k.g_g, &gg), (&k.g_u, &gu)] {
                let fine = transform(fine_v, &self.weights, k.tau_step, nu);
                let coarse = transform(coarse_v, &coarse_w, 2.0 * k.tau_step, nu);
                let scale = self.static_transform.iter().map(|z| z.norm()).fold(fine.norm(), f64::max);
                if (fine - coarse).norm() > KERNEL_CONVERGENCE * scale {
                    return Err(Error::Config(format!(
                        "phonon kernel grid (step {}) too coarse: memory integral changes by {:.2e} at ν = {nu}",
                        k.tau_step,
                        (fine - coarse).norm() / scale
                    )));
                }
            }
        }
        Ok(())
    }

    /// The phonon scattering term as a superoperator at Rabi frequency
    /// `omega` and detuning `delta`.
    pub fn superoperator(&self, omega: f64, delta: f64) -> LiouvilleMap {
        if omega == 0.0 || self.kernels.is_trivial() {
            return LiouvilleMap::zero();
        }
        let h = hamiltonian_at(omega, delta);
        let eig = eig_hermitian_2x2(&h).expect("drive Hamiltonian is Hermitian by construction");
        let xs = quadratures(omega);
        let projectors = [eig.projector(0), eig.projector(1)];
        let k = &self.kernels;
        let bohr = eig.values[0] - eig.values[1];
        let mut ys = [Operator2::zero(); 2];
        for (m, values) in [&k.g_g, &k.g_u].iter().enumerate() {
            let down = transform(values, &self.weights, k.tau_step, bohr);
            let up = transform(values, &self.weights, k.tau_step, -bohr);
            for (a, pa) in projectors.iter().enumerate() {
                for (b, pb) in projectors.iter().enumerate() {
                    let g = match (a, b) {
                        (0, 1) => down,
                        (1, 0) => up,
                        _ => self.static_transform[m],
                    };
                    ys[m] += pa.matmul(&xs[m]).matmul(pb).scale(g);
                }
            }
        }
        superoperator_from(&xs, &ys)
    }
}
