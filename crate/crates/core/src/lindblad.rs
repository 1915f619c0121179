//! Time-dependent master-equation propagation and two-time correlations.
//!
//! The generator is linear and only depends on absolute time, so the
//! classical RK4 step from `t_k` to `t_k + h` is itself a fixed 4×4 matrix.
//! [`Propagator`] tabulates those matrices once; the one-time trajectory and
//! every regression row are then repeated matrix–vector products through the
//! same table. Once the drive has decayed below [`QUIESCENT_FRACTION`] of its
//! peak, every later step shares a single constant map.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::drive::{rabi_envelope, hamiltonian_at, PulseShape, PulseSpec};
use crate::error::{Error, Result};
use crate::polaron::{PhononParams, PolaronModel};
use crate::quantum::{DensityMatrix, LiouvilleMap, LiouvilleVec, Operator2, StateTolerance};

/// Drive amplitudes below this fraction of Ω0 are treated as zero in the
/// step table.
pub const QUIESCENT_FRACTION: f64 = 1e-15;

/// Fraction of the peak correlation that may remain at τ_max before a
/// truncation warning is raised.
pub const TAU_TAIL_TOLERANCE: f64 = 1e-6;

/// Rows per work unit when integrating regression rows.
const ROW_CHUNK: usize = 16;

/// Uniform time and delay grids laid on integer multiples of the RK4 step.
///
/// All times are `t_initial + k·step`. Row `i` (the `t` axis of the
/// correlation grid) sits at step `first_row + i·row_stride`; delay `j` is
/// `j·tau_stride` steps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_initial: f64,
    pub step: f64,
    pub first_row: usize,
    pub row_stride: usize,
    pub n_t: usize,
    pub tau_stride: usize,
    pub n_tau: usize,
}

impl TimeGrid {
    pub fn new(
        t_initial: f64,
        step: f64,
        first_row: usize,
        row_stride: usize,
        n_t: usize,
        tau_stride: usize,
        n_tau: usize,
    ) -> Result<Self> {
        let g = Self {
            t_initial,
            step,
            first_row,
            row_stride,
            n_t,
            tau_stride,
            n_tau,
        };
        g.validate()?;
        Ok(g)
    }

    /// Builds a grid from the [t_start, t_end] × [0, τ_max] description.
    /// Both spacings must be integer multiples of `step`.
    pub fn from_spans(
        t_start: f64,
        t_end: f64,
        n_t: usize,
        tau_max: f64,
        n_tau: usize,
        step: f64,
    ) -> Result<Self> {
        if n_t < 2 || n_tau < 2 {
            return Err(Error::Config("n_t and n_tau must be at least 2".into()));
        }
        let multiple = |span: f64, what: &str| -> Result<usize> {
            let m = span / step;
            let r = m.round();
            if r < 1.0 || (m - r).abs() > 1e-9 * r.max(1.0) {
                return Err(Error::Config(format!(
                    "{what} spacing {span} is not an integer multiple of the step {step}"
                )));
            }
            Ok(r as usize)
        };
        let row_stride = multiple((t_end - t_start) / (n_t - 1) as f64, "t-grid")?;
        let tau_stride = multiple(tau_max / (n_tau - 1) as f64, "τ-grid")?;
        Self::new(t_start, step, 0, row_stride, n_t, tau_stride, n_tau)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !self.step.is_finite() || !self.t_initial.is_finite() {
            return Err(Error::Config(format!("invalid integration step {}", self.step)));
        }
        if self.n_t < 2 || self.n_tau < 2 {
            return Err(Error::Config("n_t and n_tau must be at least 2".into()));
        }
        if self.row_stride == 0 || self.tau_stride == 0 {
            return Err(Error::Config("grid strides must be at least one step".into()));
        }
        Ok(())
    }

    pub fn time_at(&self, k: usize) -> f64 {
        self.t_initial + k as f64 * self.step
    }

    pub fn row_step(&self, i: usize) -> usize {
        self.first_row + i * self.row_stride
    }

    pub fn row_time(&self, i: usize) -> f64 {
        self.time_at(self.row_step(i))
    }

    pub fn tau(&self, j: usize) -> f64 {
        (j * self.tau_stride) as f64 * self.step
    }

    pub fn t_start(&self) -> f64 {
        self.row_time(0)
    }

    pub fn t_end(&self) -> f64 {
        self.row_time(self.n_t - 1)
    }

    pub fn dt(&self) -> f64 {
        self.row_stride as f64 * self.step
    }

    pub fn dtau(&self) -> f64 {
        self.tau_stride as f64 * self.step
    }

    pub fn tau_max(&self) -> f64 {
        self.tau(self.n_tau - 1)
    }

    /// Number of RK4 steps needed to reach t_end + τ_max.
    pub fn total_steps(&self) -> usize {
        self.row_step(self.n_t - 1) + (self.n_tau - 1) * self.tau_stride
    }

    /// Trapezoidal end weights of the t axis.
    pub fn row_weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.n_t {
            0.5
        } else {
            1.0
        }
    }

    pub fn tau_weight(&self, j: usize) -> f64 {
        if j == 0 || j + 1 == self.n_tau {
            0.5
        } else {
            1.0
        }
    }
}

/// The full problem statement for one simulation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub delta: f64,
    pub gamma: f64,
    pub gamma_prime: f64,
    pub pulse: PulseSpec,
    pub grid: TimeGrid,
    pub phonon: Option<PhononParams>,
}

/// Upper bound on the RK4 step: min(1/(50 Ω0), 1/(50|Δ| + ε)).
pub fn max_step(pulse: &PulseSpec, delta: f64) -> f64 {
    let mut h = (1.0 / (50.0 * pulse.omega0)).min(1.0 / (50.0 * delta.abs() + f64::EPSILON));
    if let PulseShape::Square { rise_time } = pulse.shape {
        h = h.min(rise_time / 20.0);
    }
    h
}

/// Default RK4 step: resolves the generalized Rabi frequency at 50 steps per
/// radian, which also satisfies [`max_step`].
pub fn default_step(pulse: &PulseSpec, delta: f64) -> f64 {
    let omega_r = pulse.omega0.hypot(delta);
    let mut h = max_step(pulse, delta);
    if omega_r > 0.0 {
        h = h.min(1.0 / (50.0 * omega_r));
    }
    h
}

/// Default spacing of the t and τ axes in RK4 steps.
pub const DEFAULT_ROW_STRIDE: usize = 5;
pub const DEFAULT_TAU_STRIDE: usize = 5;

impl SimConfig {
    /// Pulsed configuration with the default window
    /// [t_c − 5τ_g, t_c + 5τ_g + 10/γ] and a delay range long enough for the
    /// correlations to decay by 10⁶ after the pulse has passed.
    pub fn pulsed(pulse: PulseSpec, delta: f64, gamma: f64, gamma_prime: f64) -> Result<Self> {
        if pulse.is_cw() {
            return Err(Error::Config("use SimConfig::cw for constant drives".into()));
        }
        check_rates(gamma, gamma_prime)?;
        let h = default_step(&pulse, delta);
        let support = pulse.support_half_width();
        let t_start = pulse.t_center - support;
        let decay_tail = if gamma > 0.0 { 10.0 / gamma } else { 0.0 };
        let t_end = pulse.t_center + support + decay_tail;
        let n_t = ((t_end - t_start) / (DEFAULT_ROW_STRIDE as f64 * h)).ceil() as usize + 1;
        let gamma_p = 0.5 * (gamma + gamma_prime);
        let tau_span = if gamma_p > 0.0 {
            2.0 * support + (1.0 / TAU_TAIL_TOLERANCE).ln() / gamma_p
        } else {
            2.0 * support
        };
        let n_tau = (tau_span / (DEFAULT_TAU_STRIDE as f64 * h)).ceil() as usize + 1;
        let grid = TimeGrid::new(t_start, h, 0, DEFAULT_ROW_STRIDE, n_t.max(2), DEFAULT_TAU_STRIDE, n_tau.max(2))?;
        let cfg = Self {
            delta,
            gamma,
            gamma_prime,
            pulse,
            grid,
            phonon: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Constant drive Ω from t = 0 in the ground state. Correlation rows
    /// start once transients have decayed by 10¹⁰; a single pair of adjacent
    /// rows (n_t = 2) samples the stationary correlation.
    pub fn cw(omega: f64, delta: f64, gamma: f64, gamma_prime: f64) -> Result<Self> {
        check_rates(gamma, gamma_prime)?;
        if !(gamma > 0.0) {
            return Err(Error::Config("cw configurations need γ > 0 to reach a steady state".into()));
        }
        let pulse = PulseSpec::cw(omega)?;
        let h = default_step(&pulse, delta);
        // slowest Bloch relaxation rate is at least γ/2
        let slow = 0.5 * gamma;
        let settle = (1e10f64).ln() / slow;
        let tau_span = (1.0 / TAU_TAIL_TOLERANCE).ln() / slow;
        let first_row = (settle / h).ceil() as usize;
        let n_tau = (tau_span / (DEFAULT_TAU_STRIDE as f64 * h)).ceil() as usize + 1;
        let grid = TimeGrid::new(0.0, h, first_row, 1, 2, DEFAULT_TAU_STRIDE, n_tau)?;
        let cfg = Self {
            delta,
            gamma,
            gamma_prime,
            pulse,
            grid,
            phonon: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_phonons(mut self, params: PhononParams) -> Result<Self> {
        params.validate()?;
        self.phonon = Some(params);
        Ok(self)
    }

    pub fn with_grid(mut self, grid: TimeGrid) -> Result<Self> {
        self.grid = grid;
        self.validate()?;
        Ok(self)
    }

    /// Same configuration with the RK4 step divided by `factor`; every grid
    /// point keeps its time.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        let g = self.grid;
        let grid = TimeGrid::new(
            g.t_initial,
            g.step / factor as f64,
            g.first_row * factor,
            g.row_stride * factor,
            g.n_t,
            g.tau_stride * factor,
            g.n_tau,
        )?;
        self.with_grid(grid)
    }

    pub fn validate(&self) -> Result<()> {
        check_rates(self.gamma, self.gamma_prime)?;
        if !self.delta.is_finite() {
            return Err(Error::Config("detuning must be finite".into()));
        }
        self.pulse.validated()?;
        self.grid.validate()?;
        let bound = max_step(&self.pulse, self.delta);
        if self.grid.step > bound * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "integration step {} exceeds the bound {bound} set by Ω0 and Δ",
                self.grid.step
            )));
        }
        if let Some(p) = &self.phonon {
            p.validate()?;
        }
        Ok(())
    }

    pub fn gamma_p(&self) -> f64 {
        0.5 * (self.gamma + self.gamma_prime)
    }

    /// Start of the quiescent tail: from this time on the drive amplitude is
    /// below `QUIESCENT_FRACTION · Ω0` (always zero for cw drives, whose
    /// generator is constant throughout).
    pub fn quiescent_time(&self) -> f64 {
        let p = &self.pulse;
        let ln_inv = (1.0 / QUIESCENT_FRACTION).ln();
        match p.shape {
            PulseShape::Gaussian => p.t_center + p.duration() * (ln_inv / std::f64::consts::PI).sqrt(),
            PulseShape::Square { rise_time } => {
                p.t_center + 0.5 * p.duration() + 0.5 * rise_time * (2.0 * ln_inv).max(0.0)
            }
            PulseShape::ConstantCw => f64::NEG_INFINITY,
        }
    }

    pub fn state_tolerance(&self) -> StateTolerance {
        if self.phonon.is_some() {
            StateTolerance {
                min_eigenvalue: -1e-6,
                ..StateTolerance::default()
            }
        } else {
            StateTolerance::default()
        }
    }
}

fn check_rates(gamma: f64, gamma_prime: f64) -> Result<()> {
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::Config(format!("γ must be ≥ 0, got {gamma}")));
    }
    if !(gamma_prime >= 0.0) || !gamma_prime.is_finite() {
        return Err(Error::Config(format!("γ′ must be ≥ 0, got {gamma_prime}")));
    }
    Ok(())
}

/// Lindblad generator at instantaneous Rabi frequency `omega`:
/// −i[H,·] + (γ/2)L[σ⁻] + (γ′/2)L[σ⁺σ⁻] with L[A]ρ = 2AρA† − A†Aρ − ρA†A.
pub fn lindblad_generator(omega: f64, delta: f64, gamma: f64, gamma_prime: f64) -> LiouvilleMap {
    let h = hamiltonian_at(omega, delta);
    LiouvilleMap::commutator_generator(&h)
        + LiouvilleMap::lindblad_term(&Operator2::sigma_minus()).scale_real(0.5 * gamma)
        + LiouvilleMap::lindblad_term(&Operator2::excited_projector()).scale_real(0.5 * gamma_prime)
}

/// The Lindblad generator at time `t` (no phonon term).
pub fn liouvillian(config: &SimConfig, t: f64) -> LiouvilleMap {
    lindblad_generator(rabi_envelope(&config.pulse, t), config.delta, config.gamma, config.gamma_prime)
}

/// One-time expectation values sampled at every RK4 step.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub rho: Vec<DensityMatrix>,
    pub sigma_minus_exp: Vec<Complex64>,
    pub population: Vec<f64>,
    pub grid: TimeGrid,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &DensityMatrix {
        self.rho.last().expect("trajectory holds at least the initial state")
    }

    fn matches(&self, grid: &TimeGrid) -> bool {
        self.grid == *grid && self.times.len() == grid.total_steps() + 1
    }
}

/// ⟨σ⁺(t_i) σ⁻(t_i + τ_j)⟩ on the rectangular grid.
#[derive(Clone, Debug)]
pub struct CorrelationGrid {
    pub t: Vec<f64>,
    pub tau: Vec<f64>,
    pub g: Vec<Vec<Complex64>>,
}

/// Σ_i w_i Δt g(t_i, τ_j): the correlation grid integrated over t with
/// trapezoidal weights, sampled on the τ axis.
#[derive(Clone, Debug, PartialEq)]
pub struct TauProfile {
    pub dtau: f64,
    pub values: Vec<Complex64>,
}

/// Truncation diagnostics for the τ axis.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TailDiagnostics {
    /// max over rows of |g(t_i, τ_max)| / max |g|
    pub full: f64,
    /// same for g − ⟨σ⁺(t_i)⟩⟨σ⁻(t_i + τ_max)⟩
    pub connected: f64,
}

impl TailDiagnostics {
    /// The quantity that must decay: the full correlator for pulses, the
    /// connected one for cw drives (whose coherent part never decays).
    pub fn relevant(&self, cw: bool) -> f64 {
        if cw {
            self.connected
        } else {
            self.full
        }
    }
}

/// Tabulated RK4 step maps plus the optional phonon model.
pub struct Propagator {
    config: SimConfig,
    maps: Vec<LiouvilleMap>,
    tail: LiouvilleMap,
    quiescent_step: usize,
    n_steps: usize,
}

fn rk4_step_map(a: &LiouvilleMap, b: &LiouvilleMap, c: &LiouvilleMap, h: f64) -> LiouvilleMap {
    let id = LiouvilleMap::identity();
    let k1 = *a;
    let k2 = b.matmul(&(id + k1.scale_real(0.5 * h)));
    let k3 = b.matmul(&(id + k2.scale_real(0.5 * h)));
    let k4 = c.matmul(&(id + k3.scale_real(h)));
    id + (k1 + k2.scale_real(2.0) + k3.scale_real(2.0) + k4).scale_real(h / 6.0)
}

impl Propagator {
    pub fn new(config: &SimConfig) -> Result<Self> {
        config.validate()?;
        let polaron = match &config.phonon {
            Some(params) => Some(PolaronModel::new(params, config)?),
            None => None,
        };
        let grid = &config.grid;
        let n_steps = grid.total_steps();
        let h = grid.step;
        let threshold = QUIESCENT_FRACTION * config.pulse.omega0;
        let gen = |t: f64, quiet: bool| -> LiouvilleMap {
            let mut omega = rabi_envelope(&config.pulse, t);
            if quiet && omega <= threshold && !config.pulse.is_cw() {
                omega = 0.0;
            }
            let mut l = lindblad_generator(omega, config.delta, config.gamma, config.gamma_prime);
            if let Some(model) = &polaron {
                l = l + model.superoperator(omega, config.delta);
            }
            l
        };

        let t_q = config.quiescent_time();
        let quiescent_step = if t_q <= grid.t_initial {
            0
        } else {
            (((t_q - grid.t_initial) / h).ceil() as usize).min(n_steps)
        };

        let mut maps = Vec::with_capacity(quiescent_step);
        let mut left = gen(grid.time_at(0), false);
        for k in 0..quiescent_step {
            let t = grid.time_at(k);
            let mid = gen(t + 0.5 * h, false);
            let right = gen(t + h, false);
            maps.push(rk4_step_map(&left, &mid, &right, h));
            left = right;
        }
        let quiet = gen(grid.time_at(quiescent_step.max(1)), true);
        let tail = rk4_step_map(&quiet, &quiet, &quiet, h);
        Ok(Self {
            config: *config,
            maps,
            tail,
            quiescent_step,
            n_steps,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    /// First step index from which the constant tail map applies.
    pub fn quiescent_step(&self) -> usize {
        self.quiescent_step
    }

    #[inline]
    fn step_map(&self, k: usize) -> &LiouvilleMap {
        if k < self.quiescent_step {
            &self.maps[k]
        } else {
            &self.tail
        }
    }

    /// Integrates the master equation from `rho0` at `t_initial` to
    /// t_end + τ_max, storing every step.
    pub fn evolve(&self, rho0: &DensityMatrix) -> Result<Trajectory> {
        let grid = &self.config.grid;
        let tol = self.config.state_tolerance();
        rho0.check(&tol).map_err(|r| Error::Config(format!("initial state: {r}")))?;
        let n = self.n_steps + 1;
        let mut times = Vec::with_capacity(n);
        let mut rho = Vec::with_capacity(n);
        let mut sigma_minus_exp = Vec::with_capacity(n);
        let mut population = Vec::with_capacity(n);

        let mut v = LiouvilleVec::from_operator(rho0.op());
        for k in 0..n {
            let t = grid.time_at(k);
            let state = DensityMatrix::from_operator_unchecked(v.to_operator());
            if let Err(reason) = state.check(&tol) {
                return Err(Error::Diverged { time: t, reason });
            }
            let pop = state.population();
            if !(-1e-8..=1.0 + 1e-8).contains(&pop) || state.purity() > 1.0 + 1e-8 {
                return Err(Error::Diverged {
                    time: t,
                    reason: format!("population {pop:.3e} or purity {:.3e} out of range", state.purity()),
                });
            }
            times.push(t);
            sigma_minus_exp.push(state.sigma_minus());
            population.push(pop);
            rho.push(state);
            if k + 1 < n {
                v = self.step_map(k).apply(&v);
            }
        }
        Ok(Trajectory {
            times,
            rho,
            sigma_minus_exp,
            population,
            grid: *grid,
        })
    }

    fn check_trajectory(&self, traj: &Trajectory) -> Result<()> {
        if !traj.matches(&self.config.grid) {
            return Err(Error::Config(
                "trajectory was not produced on this configuration's grid".into(),
            ));
        }
        Ok(())
    }

    fn row_seed(traj: &Trajectory, k: usize) -> LiouvilleVec {
        LiouvilleVec::from_operator(&traj.rho[k].op().matmul(&Operator2::sigma_plus()))
    }

    /// Propagates B from step `k0` and records tr(σ⁻B) every `tau_stride`
    /// steps into `out` (accumulated with weight `w`).
    fn run_row(&self, mut b: LiouvilleVec, k0: usize, w: f64, out: &mut [Complex64]) {
        let grid = &self.config.grid;
        let wc = Complex64::new(w, 0.0);
        let mut k = k0;
        for (j, slot) in out.iter_mut().enumerate() {
            *slot += b.sigma_minus_expectation() * wc;
            if j + 1 == grid.n_tau {
                break;
            }
            for _ in 0..grid.tau_stride {
                b = self.step_map(k).apply(&b);
                k += 1;
            }
        }
    }

    /// Full correlation grid via the quantum regression theorem: for each
    /// t_i, B(0) = ρ(t_i)σ⁺ is propagated with the generator at absolute
    /// time t_i + τ and g[i][j] = tr[σ⁻ B(τ_j)].
    pub fn regression_grid(&self, traj: &Trajectory) -> Result<CorrelationGrid> {
        self.check_trajectory(traj)?;
        let grid = &self.config.grid;
        let g: Vec<Vec<Complex64>> = (0..grid.n_t)
            .into_par_iter()
            .map(|i| {
                let k0 = grid.row_step(i);
                let mut row = vec![Complex64::new(0.0, 0.0); grid.n_tau];
                self.run_row(Self::row_seed(traj, k0), k0, 1.0, &mut row);
                row
            })
            .collect();
        Ok(CorrelationGrid {
            t: (0..grid.n_t).map(|i| grid.row_time(i)).collect(),
            tau: (0..grid.n_tau).map(|j| grid.tau(j)).collect(),
            g,
        })
    }

    /// The t-integrated correlation Σ_i w_i Δt g(t_i, τ_j) without storing
    /// the grid. Rows starting in the quiescent tail share one step map, so
    /// their seeds are summed and propagated once. Work is split into fixed
    /// row chunks whose partial sums are added in chunk order, so the result
    /// does not depend on the number of worker threads.
    pub fn correlation_profile(&self, traj: &Trajectory) -> Result<(TauProfile, TailDiagnostics)> {
        self.check_trajectory(traj)?;
        let grid = &self.config.grid;
        let dt = grid.dt();
        let n_tau = grid.n_tau;
        let split = (0..grid.n_t)
            .find(|&i| grid.row_step(i) >= self.quiescent_step)
            .unwrap_or(grid.n_t);

        let chunks: Vec<(Vec<Complex64>, f64, f64)> = (0..split)
            .collect::<Vec<_>>()
            .par_chunks(ROW_CHUNK)
            .map(|rows| {
                let mut acc = vec![Complex64::new(0.0, 0.0); n_tau];
                let mut row = vec![Complex64::new(0.0, 0.0); n_tau];
                let (mut tail_full, mut tail_conn) = (0.0f64, 0.0f64);
                for &i in rows {
                    let k0 = grid.row_step(i);
                    row.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
                    self.run_row(Self::row_seed(traj, k0), k0, 1.0, &mut row);
                    let w = Complex64::new(grid.row_weight(i) * dt, 0.0);
                    for (a, r) in acc.iter_mut().zip(&row) {
                        *a += *r * w;
                    }
                    let last = row[n_tau - 1];
                    let k_end = k0 + (n_tau - 1) * grid.tau_stride;
                    let coherent = traj.sigma_minus_exp[k0].conj() * traj.sigma_minus_exp[k_end];
                    let peak = row.iter().map(|z| z.norm()).fold(0.0, f64::max);
                    if peak > 0.0 {
                        tail_full = tail_full.max(last.norm() / peak);
                        tail_conn = tail_conn.max((last - coherent).norm() / peak);
                    }
                }
                (acc, tail_full, tail_conn)
            })
            .collect();

        let mut values = vec![Complex64::new(0.0, 0.0); n_tau];
        let mut diag = TailDiagnostics::default();
        for (acc, tf, tc) in &chunks {
            for (v, a) in values.iter_mut().zip(acc) {
                *v += *a;
            }
            diag.full = diag.full.max(*tf);
            diag.connected = diag.connected.max(*tc);
        }

        if split < grid.n_t {
            // aggregated tail rows
            let mut seed = LiouvilleVec::zero();
            let mut coherent_end = Complex64::new(0.0, 0.0);
            let mut seed_pop = 0.0;
            for i in split..grid.n_t {
                let k0 = grid.row_step(i);
                let w = Complex64::new(grid.row_weight(i) * dt, 0.0);
                seed.add_scaled(&Self::row_seed(traj, k0), w);
                seed_pop += grid.row_weight(i) * dt * traj.population[k0];
                let k_end = k0 + (n_tau - 1) * grid.tau_stride;
                coherent_end += traj.sigma_minus_exp[k0].conj() * traj.sigma_minus_exp[k_end] * w;
            }
            let mut row = vec![Complex64::new(0.0, 0.0); n_tau];
            self.run_row(seed, self.quiescent_step, 1.0, &mut row);
            for (v, r) in values.iter_mut().zip(&row) {
                *v += *r;
            }
            if seed_pop > 0.0 {
                let last = row[n_tau - 1];
                let peak = row.iter().map(|z| z.norm()).fold(0.0, f64::max).max(seed_pop);
                diag.full = diag.full.max(last.norm() / peak);
                diag.connected = diag.connected.max((last - coherent_end).norm() / peak);
            }
        }
        Ok((
            TauProfile {
                dtau: grid.dtau(),
                values,
            },
            diag,
        ))
    }

    /// Σ_i w_i Δt ⟨σ⁺(t_i)⟩⟨σ⁻(t_i + τ_j)⟩ from the stored trajectory.
    pub fn coherent_profile(&self, traj: &Trajectory) -> Result<TauProfile> {
        self.check_trajectory(traj)?;
        Ok(coherent_profile_from(traj, &self.config.grid))
    }
}

pub(crate) fn coherent_profile_from(traj: &Trajectory, grid: &TimeGrid) -> TauProfile {
    let dt = grid.dt();
    let s = &traj.sigma_minus_exp;
    let weights: Vec<Complex64> = (0..grid.n_t)
        .map(|i| s[grid.row_step(i)].conj() * (grid.row_weight(i) * dt))
        .collect();
    let values = (0..grid.n_tau)
        .into_par_iter()
        .map(|j| {
            let off = j * grid.tau_stride;
            let mut acc = Complex64::new(0.0, 0.0);
            for (i, w) in weights.iter().enumerate() {
                acc += *w * s[grid.row_step(i) + off];
            }
            acc
        })
        .collect();
    TauProfile {
        dtau: grid.dtau(),
        values,
    }
}

/// Integrates the master equation from `rho0`.
pub fn evolve(config: &SimConfig, rho0: &DensityMatrix) -> Result<Trajectory> {
    Propagator::new(config)?.evolve(rho0)
}

/// Two-time correlation grid for a trajectory produced by [`evolve`].
pub fn regression_grid(config: &SimConfig, traj: &Trajectory) -> Result<CorrelationGrid> {
    Propagator::new(config)?.regression_grid(traj)
}
