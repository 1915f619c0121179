//! Sweep execution and result persistence.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use pulsed_rf::drive::{adiabaticity_max, lifetime_check, sidepeak_times, LifetimeCheck, SidepeakTime};
use pulsed_rf::lindblad::{TailDiagnostics, QUIESCENT_FRACTION, TAU_TAIL_TOLERANCE};
use pulsed_rf::polaron::{KERNEL_CONVERGENCE, KERNEL_DECAY};
use pulsed_rf::spectrum::{find_peaks, sideband_weight_ratio, Peak, SpectrumResult, DUAL_PATH_TOLERANCE};
use pulsed_rf::{compute, TimeGrid};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{Mode, Normalization, Phonons, Preset, RunConfig, Shape, SCHEMA_VERSION};

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Peaks below this fraction of the incoherent maximum are not tabulated.
pub const PEAK_THRESHOLD: f64 = 1e-3;
/// Peak weights integrate over ± this fraction of Ω0.
pub const PEAK_WINDOW: f64 = 0.05;
const SIDEPEAK_ORDERS: usize = 16;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("thread pool: {0}")]
    Pool(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write(path: &Path, contents: &str) -> Result<(), RunError> {
    fs::write(path, contents).map_err(io_err(path))
}

fn read(path: &Path) -> Result<String, RunError> {
    fs::read_to_string(path).map_err(io_err(path))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Units {
    pub detuning: String,
    pub time: String,
    pub spectrum: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub dual_path: f64,
    pub tau_tail: f64,
    pub quiescent_fraction: f64,
    pub kernel_decay: f64,
    pub kernel_convergence: f64,
}

const TOLERANCES: Tolerances = Tolerances {
    dual_path: DUAL_PATH_TOLERANCE,
    tau_tail: TAU_TAIL_TOLERANCE,
    quiescent_fraction: QUIESCENT_FRACTION,
    kernel_decay: KERNEL_DECAY,
    kernel_convergence: KERNEL_CONVERGENCE,
};

/// Sidecar document written next to every spectrum. Detunings, peak
/// positions and Rabi frequencies are in the configuration's energy unit,
/// times in its time unit and spectra in time squared.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub code_version: String,
    pub schema_version: u32,
    pub config: RunConfig,
    pub units: Units,
    /// Engine grid in internal units (rad/ps and ps for qd-units).
    pub grid: TimeGrid,
    pub tolerances: Tolerances,
    pub coh_fraction: f64,
    pub peaks: Vec<Peak>,
    pub sideband_ratio: Option<f64>,
    pub adiabaticity_max: Option<f64>,
    pub sidepeaks: Vec<SidepeakTime>,
    pub lifetime: Option<LifetimeCheck>,
    pub dual_path_deviation: f64,
    pub tail: TailDiagnostics,
    pub final_population: f64,
    pub warnings: Vec<String>,
}

pub struct PointResult {
    pub metadata: Metadata,
    /// Spectrum on the output detuning axis.
    pub spectrum: SpectrumResult,
}

fn units(config: &RunConfig) -> Units {
    match config.mode {
        Mode::Dimensionless => Units {
            detuning: "omega0".into(),
            time: "1/omega0".into(),
            spectrum: "1/omega0^2".into(),
        },
        Mode::QdUnits => Units {
            detuning: "meV".into(),
            time: "ps".into(),
            spectrum: "ps^2".into(),
        },
    }
}

/// Runs one single-point configuration.
pub fn run_point(config: &RunConfig) -> pulsed_rf::Result<PointResult> {
    let sim = config.sim_config()?;
    let u = config.frequency_unit();
    let detunings = config.detunings();
    let run = compute(&sim, &detunings)?;
    let mut warnings = run.warnings.clone();

    let mut spectrum = run.spectrum;
    spectrum.detunings.iter_mut().for_each(|d| *d /= u);
    let window = PEAK_WINDOW * config.omega0;
    let peaks = find_peaks(&spectrum.s_inc, &spectrum.detunings, PEAK_THRESHOLD, window)?.peaks;
    let omega_r = config.omega0.hypot(config.detuning[0]);
    let sideband_ratio = match sideband_weight_ratio(&spectrum, omega_r, None) {
        Ok(r) => Some(r),
        Err(e) => {
            warnings.push(format!("sideband ratio unavailable: {e}"));
            None
        }
    };

    let pulse = sim.pulse;
    let (adiabaticity, sidepeaks, lifetime) = if config.shape == Shape::Gaussian {
        let a = adiabaticity_max(&pulse, sim.delta)?.0;
        let mut s = sidepeak_times(&pulse, SIDEPEAK_ORDERS)?;
        s.iter_mut().for_each(|p| p.omega /= u);
        let l = lifetime_check(&pulse, sim.gamma);
        if l.flagged {
            warnings.push(format!(
                "pulse area {}π is not small against the lifetime bound {:.2}π",
                l.area_over_pi, l.bound_over_pi
            ));
        }
        (Some(a), s, Some(l))
    } else if config.shape == Shape::Square {
        (None, Vec::new(), Some(lifetime_check(&pulse, sim.gamma)))
    } else {
        (None, Vec::new(), None)
    };

    Ok(PointResult {
        metadata: Metadata {
            code_version: CODE_VERSION.into(),
            schema_version: SCHEMA_VERSION,
            config: config.clone(),
            units: units(config),
            grid: sim.grid,
            tolerances: TOLERANCES,
            coh_fraction: spectrum.coh_fraction,
            peaks,
            sideband_ratio,
            adiabaticity_max: adiabaticity,
            sidepeaks,
            lifetime,
            dual_path_deviation: run.dual_path_deviation,
            tail: run.tail,
            final_population: run.final_population,
            warnings,
        },
        spectrum,
    })
}

pub fn spectrum_csv(s: &SpectrumResult) -> String {
    let mut out = String::from("delta,s_total,s_coh,s_inc\n");
    for k in 0..s.detunings.len() {
        let _ = writeln!(
            out,
            "{:.12e},{:.12e},{:.12e},{:.12e}",
            s.detunings[k], s.s_total[k], s.s_coh[k], s.s_inc[k]
        );
    }
    out
}

pub fn parse_spectrum_csv(text: &str, path: &Path) -> Result<SpectrumResult, RunError> {
    let bad = |message: String| RunError::Format {
        path: path.to_path_buf(),
        message,
    };
    let mut lines = text.lines();
    if lines.next() != Some("delta,s_total,s_coh,s_inc") {
        return Err(bad("unexpected header".into()));
    }
    let mut cols: [Vec<f64>; 4] = Default::default();
    for (n, line) in lines.enumerate() {
        let fields: Vec<_> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(bad(format!("line {}: expected 4 columns", n + 2)));
        }
        for (col, f) in cols.iter_mut().zip(fields) {
            col.push(f.parse().map_err(|e| bad(format!("line {}: {e}", n + 2)))?);
        }
    }
    let [detunings, s_total, s_coh, s_inc] = cols;
    Ok(SpectrumResult {
        detunings,
        s_total,
        s_coh,
        s_inc,
        coh_fraction: f64::NAN,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub index: usize,
    pub dir: String,
    pub status: Status,
    pub error: Option<String>,
    pub theta: Option<f64>,
    pub detuning: f64,
    pub gamma_prime: f64,
    pub phonons: bool,
    pub temperature: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub code_version: String,
    pub schema_version: u32,
    pub preset: Preset,
    pub mode: Mode,
    pub units: Units,
    pub normalization: Normalization,
    pub points: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self, RunError> {
        let path = dir.join("manifest.json");
        serde_json::from_str(&read(&path)?).map_err(|e| RunError::Format {
            path,
            message: e.to_string(),
        })
    }
}

#[derive(Clone, Debug, Serialize)]
struct Timing {
    dir: String,
    wall_seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
struct Timings {
    total_seconds: f64,
    points: Vec<Timing>,
}

pub struct Summary {
    pub points: usize,
    pub failed: usize,
    pub manifest: PathBuf,
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// Runs every point of the sweep on a pool of `threads` workers (all cores
/// if `None`) and writes the results below `out`.
pub fn run_sweep(config: &RunConfig, out: &Path, threads: Option<usize>) -> Result<Summary, RunError> {
    let start = Instant::now();
    let points = config.points();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| RunError::Pool(e.to_string()))?;
    let outcomes: Vec<_> = pool.install(|| {
        points
            .par_iter()
            .map(|p| {
                let t0 = Instant::now();
                let r = run_point(p);
                (r, t0.elapsed().as_secs_f64())
            })
            .collect()
    });

    fs::create_dir_all(out).map_err(io_err(out))?;
    let mut entries = Vec::new();
    let mut timings = Vec::new();
    let mut aggregate = String::from("point,theta,drive_detuning,gamma_prime,phonons,temperature,delta,s_total,s_coh,s_inc\n");
    for (index, (point, (outcome, wall))) in points.iter().zip(outcomes).enumerate() {
        let dir = format!("{index:03}_{}", point.label());
        let phonons = point.phonons == Phonons::On;
        let mut entry = ManifestEntry {
            index,
            dir: dir.clone(),
            status: Status::Ok,
            error: None,
            theta: (point.shape != Shape::Cw).then(|| point.theta[0]),
            detuning: point.detuning[0],
            gamma_prime: point.gamma_prime[0],
            phonons,
            temperature: phonons.then(|| point.temperature[0]),
        };
        match outcome {
            Ok(result) => {
                let path = out.join(&dir);
                fs::create_dir_all(&path).map_err(io_err(&path))?;
                write(&path.join("spectrum.csv"), &spectrum_csv(&result.spectrum))?;
                write(&path.join("metadata.json"), &to_json(&result.metadata))?;
                let s = &result.spectrum;
                for k in 0..s.detunings.len() {
                    let _ = writeln!(
                        aggregate,
                        "{index},{},{},{},{},{},{:.12e},{:.12e},{:.12e},{:.12e}",
                        entry.theta.map_or(String::new(), |t| t.to_string()),
                        entry.detuning,
                        entry.gamma_prime,
                        u8::from(phonons),
                        entry.temperature.map_or(String::new(), |t| t.to_string()),
                        s.detunings[k],
                        s.s_total[k],
                        s.s_coh[k],
                        s.s_inc[k]
                    );
                }
            }
            Err(e) => {
                entry.status = Status::Failed;
                entry.error = Some(format!("point {index} ({}): {e}", point.label()));
            }
        }
        timings.push(Timing { dir, wall_seconds: wall });
        entries.push(entry);
    }
    let failed = entries.iter().filter(|e| e.status == Status::Failed).count();
    let manifest = Manifest {
        code_version: CODE_VERSION.into(),
        schema_version: SCHEMA_VERSION,
        preset: config.preset,
        mode: config.mode,
        units: units(config),
        normalization: config.normalization,
        points: entries,
    };
    write(&out.join("aggregate.csv"), &aggregate)?;
    let manifest_path = out.join("manifest.json");
    write(&manifest_path, &to_json(&manifest))?;
    write(
        &out.join("timings.json"),
        &to_json(&Timings {
            total_seconds: start.elapsed().as_secs_f64(),
            points: timings,
        }),
    )?;
    Ok(Summary {
        points: points.len(),
        failed,
        manifest: manifest_path,
    })
}

/// Re-derives the peak table and sideband ratio of every stored spectrum.
pub fn analyze(dir: &Path) -> Result<String, RunError> {
    let manifest = Manifest::load(dir)?;
    let mut out = String::new();
    for entry in &manifest.points {
        if entry.status == Status::Failed {
            let _ = writeln!(out, "{}: failed: {}", entry.dir, entry.error.as_deref().unwrap_or(""));
            continue;
        }
        let meta_path = dir.join(&entry.dir).join("metadata.json");
        let meta: Metadata = serde_json::from_str(&read(&meta_path)?).map_err(|e| RunError::Format {
            path: meta_path.clone(),
            message: e.to_string(),
        })?;
        let csv_path = dir.join(&entry.dir).join("spectrum.csv");
        let spectrum = parse_spectrum_csv(&read(&csv_path)?, &csv_path)?;
        let c = &meta.config;
        let peaks = find_peaks(&spectrum.s_inc, &spectrum.detunings, PEAK_THRESHOLD, PEAK_WINDOW * c.omega0)
            .map(|p| p.peaks)
            .unwrap_or_default();
        let ratio = sideband_weight_ratio(&spectrum, c.omega0.hypot(c.detuning[0]), None)
            .map_or("n/a".to_string(), |r| format!("{r:.6}"));
        let _ = writeln!(
            out,
            "{}: coherent fraction {:.6}, sideband ratio {ratio}, {} incoherent peaks",
            entry.dir,
            meta.coh_fraction,
            peaks.len()
        );
        for p in peaks {
            let _ = writeln!(
                out,
                "    δ = {:+.6} {}  height {:.6e}  weight {:.6e}",
                p.position, meta.units.detuning, p.height, p.weight
            );
        }
    }
    Ok(out)
}
