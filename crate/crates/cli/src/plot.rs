//! Matplotlib script generation for a results directory.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::config::Normalization;
use crate::run::{Manifest, ManifestEntry, RunError, Status};

pub const SCRIPT_NAME: &str = "plot_spectra.py";

#[derive(Debug, thiserror::Error)]
pub enum PlotError {
    #[error(transparent)]
    Run(#[from] RunError),
    #[error("{0}: no successful spectra to plot")]
    Empty(PathBuf),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layout {
    Single,
    /// Rows of pulse areas by columns of detunings.
    Grid { rows: usize, cols: usize },
    /// Rows of detunings; incoherent and coherent columns with and without phonons.
    Phonon { rows: usize },
}

fn key(v: f64) -> String {
    format!("{v:e}")
}

fn py_str(s: &str) -> String {
    format!("{s:?}")
}

pub fn layout(points: &[&ManifestEntry]) -> Layout {
    if points.len() == 1 {
        return Layout::Single;
    }
    if points.iter().any(|p| p.phonons) {
        let rows: BTreeMap<_, ()> = points.iter().map(|p| (key(p.detuning), ())).collect();
        return Layout::Phonon { rows: rows.len() };
    }
    let rows: BTreeMap<_, ()> = points.iter().map(|p| (key(p.theta.unwrap_or(0.0)), ())).collect();
    let cols: BTreeMap<_, ()> = points.iter().map(|p| (key(p.detuning), ())).collect();
    Layout::Grid {
        rows: rows.len(),
        cols: cols.len(),
    }
}

fn ordered(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Detunings in the order 0, positive, negative, matching the usual
/// resonant, blue, red panel order.
fn detuning_order(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v = ordered(values);
    v.sort_by(|a, b| (a.abs() != 0.0).cmp(&(b.abs() != 0.0)).then((*a < 0.0).cmp(&(*b < 0.0))).then(a.abs().total_cmp(&b.abs())));
    v
}

const PRELUDE: &str = r#"import os

import matplotlib.pyplot as plt
import numpy as np

HERE = os.path.dirname(os.path.abspath(__file__))


def load(name):
    d = np.loadtxt(os.path.join(HERE, name, "spectrum.csv"), delimiter=",", skiprows=1)
    return d[:, 0], d[:, 1], d[:, 2], d[:, 3]

"#;

/// Builds the plotting script for a manifest.
pub fn script(manifest: &Manifest, semilog: bool) -> Option<String> {
    let ok: Vec<&ManifestEntry> = manifest.points.iter().filter(|p| p.status == Status::Ok).collect();
    if ok.is_empty() {
        return None;
    }
    let unit = &manifest.units.detuning;
    let mut s = String::from(PRELUDE);
    let scale = if semilog { "log" } else { "linear" };
    let _ = writeln!(s, "YSCALE = {}", py_str(scale));
    let _ = writeln!(s, "XLABEL = {}\n", py_str(&format!("detuning from laser ({unit})")));
    match layout(&ok) {
        Layout::Single => {
            let p = ok[0];
            let _ = writeln!(s, "x, tot, coh, inc = load({})", py_str(&p.dir));
            s.push_str(
                r#"fig, ax = plt.subplots(figsize=(5, 3.5))
ax.plot(x, tot, color="black", label="total")
ax.plot(x, inc, color="tab:orange", label="incoherent")
ax.plot(x, coh, color="tab:blue", label="coherent")
ax.set_yscale(YSCALE)
ax.set_xlabel(XLABEL)
ax.legend()
"#,
            );
        }
        Layout::Grid { .. } => {
            let thetas = ordered(ok.iter().map(|p| p.theta.unwrap_or(0.0)));
            let deltas = detuning_order(ok.iter().map(|p| p.detuning));
            let gps = ordered(ok.iter().map(|p| p.gamma_prime));
            s.push_str("# rows of pulse areas; each cell lists (gamma_prime, directory)\nGRID = [\n");
            for &t in &thetas {
                s.push_str("    [\n");
                for &d in &deltas {
                    let cell: Vec<String> = gps
                        .iter()
                        .filter_map(|&g| {
                            ok.iter()
                                .find(|p| p.theta.unwrap_or(0.0) == t && p.detuning == d && p.gamma_prime == g)
                                .map(|p| format!("({g:?}, {})", py_str(&p.dir)))
                        })
                        .collect();
                    let _ = writeln!(s, "        [{}],", cell.join(", "));
                }
                s.push_str("    ],\n");
            }
            s.push_str("]\n");
            let _ = writeln!(s, "ROW_LABELS = [{}]", thetas.iter().map(|t| py_str(&format!("Θ = {t}π"))).collect::<Vec<_>>().join(", "));
            let _ = writeln!(s, "COL_LABELS = [{}]", deltas.iter().map(|d| py_str(&format!("Δ = {d} {unit}"))).collect::<Vec<_>>().join(", "));
            let normalize = manifest.normalization == Normalization::RowResonantTotal;
            let _ = writeln!(s, "ROW_NORMALIZE = {}\n", if normalize { "True" } else { "False" });
            s.push_str(
                r#"nrows, ncols = len(GRID), len(GRID[0])
fig, axes = plt.subplots(nrows, ncols, figsize=(4 * ncols, 2.6 * nrows), squeeze=False, sharex=True)
for r, row in enumerate(GRID):
    # every row is scaled by the maximum total spectrum of its first (resonant) panel
    norm = 1.0
    if ROW_NORMALIZE and row[0]:
        norm = load(row[0][0][1])[1].max()
    for c, cell in enumerate(row):
        ax = axes[r][c]
        for k, (gp, name) in enumerate(cell):
            x, tot, coh, inc = load(name)
            style = "-" if k == 0 else "-."
            if k == 0:
                ax.plot(x, tot / norm, color="black", ls=style)
            ax.plot(x, inc / norm, color="tab:orange", ls=style)
            ax.plot(x, coh / norm, color="tab:blue", ls=style)
        ax.set_yscale(YSCALE)
        if r == 0:
            ax.set_title(COL_LABELS[c])
        if c == 0:
            ax.set_ylabel(ROW_LABELS[r])
        if r == nrows - 1:
            ax.set_xlabel(XLABEL)
"#,
            );
        }
        Layout::Phonon { .. } => {
            let deltas = detuning_order(ok.iter().map(|p| p.detuning));
            s.push_str("# rows of detunings: (label, phonon-free directory, phonon directories)\nROWS = [\n");
            for &d in &deltas {
                let free = ok.iter().find(|p| p.detuning == d && !p.phonons).map(|p| py_str(&p.dir));
                let with: Vec<String> = ok.iter().filter(|p| p.detuning == d && p.phonons).map(|p| py_str(&p.dir)).collect();
                let _ = writeln!(
                    s,
                    "    ({}, {}, [{}]),",
                    py_str(&format!("Δ = {d} {unit}")),
                    free.unwrap_or_else(|| "None".into()),
                    with.join(", ")
                );
            }
            s.push_str("]\n");
            let normalize = manifest.normalization == Normalization::PhononFreeMax;
            let _ = writeln!(s, "NORMALIZE = {}\n", if normalize { "True" } else { "False" });
            s.push_str(
                r#"fig, axes = plt.subplots(len(ROWS), 2, figsize=(8, 2.6 * len(ROWS)), squeeze=False, sharex=True)
for r, (label, free, phonon) in enumerate(ROWS):
    # incoherent and coherent spectra are scaled separately by the phonon-free maxima
    norm_inc = norm_coh = 1.0
    if free is not None:
        x, tot, coh, inc = load(free)
        if NORMALIZE:
            norm_inc, norm_coh = inc.max(), coh.max()
        axes[r][0].plot(x, inc / norm_inc, color="tab:red")
        axes[r][1].plot(x, coh / norm_coh, color="tab:orange")
    for name in phonon:
        x, tot, coh, inc = load(name)
        axes[r][0].plot(x, inc / norm_inc, color="navy", ls="-.")
        axes[r][1].plot(x, coh / norm_coh, color="tab:green", ls="-.")
    axes[r][0].set_ylabel(label)
    for ax in axes[r]:
        ax.set_yscale(YSCALE)
axes[0][0].set_title("incoherent")
axes[0][1].set_title("coherent")
for ax in axes[-1]:
    ax.set_xlabel(XLABEL)
"#,
            );
        }
    }
    s.push_str(
        r#"
fig.tight_layout()
fig.savefig(os.path.join(HERE, "spectra.pdf"))
"#,
    );
    Some(s)
}

/// Writes the plotting script into `dir` and returns its path.
pub fn emit_plot_script(dir: &Path, semilog: bool) -> Result<PathBuf, PlotError> {
    let manifest = Manifest::load(dir)?;
    let text = script(&manifest, semilog).ok_or_else(|| PlotError::Empty(dir.to_path_buf()))?;
    let path = dir.join(SCRIPT_NAME);
    std::fs::write(&path, text).map_err(|source| RunError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}
