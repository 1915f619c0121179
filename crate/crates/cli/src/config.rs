//! Run configuration: a flat TOML document with unit-suffixed values,
//! optionally layered over one of the built-in presets.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use pulsed_rf::polaron::PhononParams;
use pulsed_rf::spectrum::{uniform_axis, DEFAULT_DETUNING_POINTS, DEFAULT_DETUNING_SPAN};
use pulsed_rf::units::mev_to_rad_per_ps;
use pulsed_rf::{PulseSpec, SimConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use toml::{Spanned, Value};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{source_name}:{line}: {message}")]
    At {
        source_name: String,
        line: usize,
        message: String,
    },
    #[error("{source_name}: {message}")]
    Invalid { source_name: String, message: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Frequencies in units of Ω0, times in units of 1/Ω0.
    Dimensionless,
    /// Energies in meV, times in ps, temperatures in K.
    QdUnits,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Fig1,
    Fig2,
    Fig3,
    Custom,
}

impl Preset {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "fig1" => Some(Self::Fig1),
            "fig2" => Some(Self::Fig2),
            "fig3" => Some(Self::Fig3),
            "custom" => Some(Self::Custom),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    Gaussian,
    Square,
    Cw,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phonons {
    Off,
    On,
    /// Every point is run both with and without phonons.
    Pair,
}

/// How plots should scale the stored spectra. Stored data is never scaled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    None,
    /// Each Θ row divided by the maximum total spectrum of its Δ = 0 entry.
    RowResonantTotal,
    /// Incoherent and coherent spectra each divided by the maximum of the
    /// phonon-free run at the same detuning.
    PhononFreeMax,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub schema_version: u32,
    pub preset: Preset,
    pub mode: Mode,
    pub shape: Shape,
    /// Peak Rabi frequency, meV in qd-units mode.
    pub omega0: f64,
    pub gamma: f64,
    /// Pulse areas in units of π.
    pub theta: Vec<f64>,
    pub detuning: Vec<f64>,
    pub gamma_prime: Vec<f64>,
    /// Kelvin; used only by phonon runs.
    pub temperature: Vec<f64>,
    pub phonons: Phonons,
    /// ps²
    pub alpha: f64,
    /// meV
    pub omega_b: f64,
    /// Square-pulse rise time; `None` picks 1% of the duration.
    pub rise_time: Option<f64>,
    /// Half-width of the detuning axis in units of Ω0.
    pub detuning_span: f64,
    pub detuning_points: usize,
    pub normalization: Normalization,
    pub output: PathBuf,
}

impl RunConfig {
    pub fn preset(preset: Preset) -> Self {
        let base = Self {
            schema_version: SCHEMA_VERSION,
            preset,
            mode: Mode::Dimensionless,
            shape: Shape::Gaussian,
            omega0: 1.0,
            gamma: 1.0 / 40.0,
            theta: vec![1.0, 2.0, 4.0, 8.0],
            detuning: vec![0.0, 0.5],
            gamma_prime: vec![0.0],
            temperature: vec![4.0],
            phonons: Phonons::Off,
            alpha: 0.06,
            omega_b: 1.0,
            rise_time: None,
            detuning_span: DEFAULT_DETUNING_SPAN,
            detuning_points: DEFAULT_DETUNING_POINTS,
            normalization: Normalization::RowResonantTotal,
            output: PathBuf::from("results"),
        };
        match preset {
            Preset::Fig1 | Preset::Custom => base,
            Preset::Fig2 => Self {
                gamma_prime: vec![0.0, 0.1],
                ..base
            },
            Preset::Fig3 => Self {
                mode: Mode::QdUnits,
                omega0: 1.0,
                gamma: 0.010,
                theta: vec![5.0],
                detuning: vec![0.0, 0.33, -0.33],
                phonons: Phonons::Pair,
                normalization: Normalization::PhononFreeMax,
                ..base
            },
        }
    }

    /// Frequency unit of the configuration in rad/ps (qd-units) or 1.
    pub fn frequency_unit(&self) -> f64 {
        match self.mode {
            Mode::Dimensionless => 1.0,
            Mode::QdUnits => mev_to_rad_per_ps(1.0),
        }
    }

    pub fn energy_unit_name(&self) -> &'static str {
        match self.mode {
            Mode::Dimensionless => "omega0",
            Mode::QdUnits => "meV",
        }
    }

    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        let positive = |key: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err((key, format!("{key} must be positive and finite, got {v}")))
            }
        };
        if self.schema_version != SCHEMA_VERSION {
            return Err((
                "schema_version",
                format!("unsupported schema_version {} (expected {SCHEMA_VERSION})", self.schema_version),
            ));
        }
        positive("omega0", self.omega0)?;
        positive("gamma", self.gamma)?;
        if self.shape != Shape::Cw {
            if self.theta.is_empty() {
                return Err(("theta", "theta needs at least one value".into()));
            }
            for &t in &self.theta {
                positive("theta", t)?;
            }
        }
        for (key, axis) in [("detuning", &self.detuning), ("gamma_prime", &self.gamma_prime)] {
            if axis.is_empty() {
                return Err((key, format!("{key} needs at least one value")));
            }
            if axis.iter().any(|v| !v.is_finite()) {
                return Err((key, format!("{key} values must be finite")));
            }
        }
        if self.gamma_prime.iter().any(|&g| g < 0.0) {
            return Err(("gamma_prime", "gamma_prime must be ≥ 0".into()));
        }
        if self.phonons != Phonons::Off {
            if self.mode != Mode::QdUnits {
                return Err(("phonons", "phonon runs need mode = \"qd-units\"".into()));
            }
            if self.shape == Shape::Cw {
                return Err(("phonons", "phonon runs need a pulsed drive".into()));
            }
            if self.temperature.is_empty() || self.temperature.iter().any(|&t| !(t >= 0.0)) {
                return Err(("temperature", "temperatures must be ≥ 0 K".into()));
            }
            if !(self.alpha >= 0.0) {
                return Err(("alpha", format!("alpha must be ≥ 0, got {}", self.alpha)));
            }
            positive("omega_b", self.omega_b)?;
        }
        if let Some(r) = self.rise_time {
            positive("rise_time", r)?;
        }
        positive("detuning_span", self.detuning_span)?;
        if self.detuning_points < 3 {
            return Err(("detuning_points", "detuning_points must be at least 3".into()));
        }
        for point in self.points() {
            point.sim_config().map_err(|e| ("theta", e.to_string()))?;
        }
        Ok(())
    }

    /// Number of values on the Θ, Δ, γ′ and T axes combined.
    pub fn is_single(&self) -> bool {
        let temps = if self.phonons == Phonons::Off { 1 } else { self.temperature.len() };
        self.theta_axis().len() * self.detuning.len() * self.gamma_prime.len() * temps == 1
    }

    fn theta_axis(&self) -> Vec<f64> {
        if self.shape == Shape::Cw {
            vec![0.0]
        } else {
            self.theta.clone()
        }
    }

    /// Expands the sweep axes into single-point configurations, ordered by
    /// Θ, then Δ, then γ′, then phonon setting and temperature.
    pub fn points(&self) -> Vec<RunConfig> {
        let mut out = Vec::new();
        for &theta in &self.theta_axis() {
            for &delta in &self.detuning {
                for &gp in &self.gamma_prime {
                    let single = |phonons: Phonons, temperature: Vec<f64>| RunConfig {
                        theta: if self.shape == Shape::Cw { self.theta.clone() } else { vec![theta] },
                        detuning: vec![delta],
                        gamma_prime: vec![gp],
                        temperature,
                        phonons,
                        ..self.clone()
                    };
                    if self.phonons != Phonons::On {
                        out.push(single(Phonons::Off, self.temperature.clone()));
                    }
                    if self.phonons != Phonons::Off {
                        for &t in &self.temperature {
                            out.push(single(Phonons::On, vec![t]));
                        }
                    }
                }
            }
        }
        out
    }

    /// Engine configuration of a single point (the first value on each axis).
    pub fn sim_config(&self) -> pulsed_rf::Result<SimConfig> {
        let u = self.frequency_unit();
        let omega0 = self.omega0 * u;
        let delta = self.detuning.first().copied().unwrap_or(0.0) * u;
        let gamma = self.gamma * u;
        let gp = self.gamma_prime.first().copied().unwrap_or(0.0) * u;
        let area = self.theta.first().copied().unwrap_or(0.0) * PI;
        let config = match self.shape {
            Shape::Cw => return SimConfig::cw(omega0, delta, gamma, gp),
            Shape::Gaussian => SimConfig::pulsed(PulseSpec::gaussian(omega0, area, 0.0)?, delta, gamma, gp)?,
            Shape::Square => {
                let pulse = match self.rise_time {
                    Some(r) => PulseSpec::square_with_rise(omega0, area, 0.0, r)?,
                    None => PulseSpec::square(omega0, area, 0.0)?,
                };
                SimConfig::pulsed(pulse, delta, gamma, gp)?
            }
        };
        match self.phonons {
            Phonons::Off => Ok(config),
            _ => config.with_phonons(self.phonon_params()?),
        }
    }

    pub fn phonon_params(&self) -> pulsed_rf::Result<PhononParams> {
        PhononParams::qd_units(self.alpha, self.omega_b, self.temperature.first().copied().unwrap_or(0.0))
    }

    /// Detuning axis in engine units.
    pub fn detunings(&self) -> Vec<f64> {
        let half = self.detuning_span * self.omega0 * self.frequency_unit();
        uniform_axis(-half, half, self.detuning_points)
    }

    /// The same physics expressed in units of Ω0. Phonon runs keep their
    /// physical units and are rejected.
    pub fn to_dimensionless(&self) -> Option<RunConfig> {
        if self.phonons != Phonons::Off {
            return None;
        }
        let w = self.omega0;
        let scale = |v: &Vec<f64>| v.iter().map(|x| x / w).collect();
        let u = self.frequency_unit();
        Some(RunConfig {
            mode: Mode::Dimensionless,
            omega0: 1.0,
            gamma: self.gamma / w,
            detuning: scale(&self.detuning),
            gamma_prime: scale(&self.gamma_prime),
            rise_time: self.rise_time.map(|r| r * self.omega0 * u),
            ..self.clone()
        })
    }

    /// Short label used for output directory names.
    pub fn label(&self) -> String {
        let mut s = String::new();
        if self.shape == Shape::Cw {
            s.push_str("cw");
        } else {
            s.push_str(&format!("theta{}pi", fmt_short(self.theta[0])));
        }
        s.push_str(&format!("_delta{}", fmt_short(self.detuning[0])));
        if self.gamma_prime[0] != 0.0 {
            s.push_str(&format!("_gp{}", fmt_short(self.gamma_prime[0])));
        }
        if self.phonons == Phonons::On {
            s.push_str(&format!("_phonons{}K", fmt_short(self.temperature[0])));
        }
        s
    }
}

fn fmt_short(v: f64) -> String {
    format!("{v}").replace('-', "m")
}

const KEYS: &[&str] = &[
    "schema_version",
    "preset",
    "mode",
    "shape",
    "omega0",
    "gamma",
    "theta",
    "detuning",
    "gamma_prime",
    "temperature",
    "phonons",
    "alpha",
    "omega_b",
    "rise_time",
    "detuning_span",
    "detuning_points",
    "normalization",
    "output",
];

#[derive(Clone, Copy, PartialEq)]
enum Quantity {
    Energy,
    Time,
    Temperature,
    Area,
    Coupling,
}

impl Quantity {
    fn describe(self, mode: Mode) -> &'static str {
        match (self, mode) {
            (Quantity::Area, _) => "a multiple of pi such as \"5pi\"",
            (Quantity::Temperature, _) => "a temperature such as \"4K\"",
            (Quantity::Coupling, _) => "a coupling such as \"0.06ps2\"",
            (Quantity::Energy, Mode::QdUnits) => "an energy such as \"0.33meV\" or \"10ueV\"",
            (Quantity::Time, Mode::QdUnits) => "a time such as \"0.5ps\"",
            (_, Mode::Dimensionless) => "a plain number or fraction in units of omega0",
        }
    }
}

/// Splits "0.33meV" into (0.33, "meV"); the suffix may be empty.
fn split_unit(s: &str) -> Option<(f64, &str)> {
    let s = s.trim();
    let end = s
        .char_indices()
        .find(|&(i, c)| !(c.is_ascii_digit() || c == '.' || c == '/' || c == '+' || c == '-' || ((c == 'e' || c == 'E') && i > 0 && s[i + 1..].starts_with(|d: char| d.is_ascii_digit() || d == '-' || d == '+'))))
        .map_or(s.len(), |(i, _)| i);
    let (num, unit) = s.split_at(end);
    let value = if num.is_empty() {
        1.0
    } else if let Some((a, b)) = num.split_once('/') {
        a.parse::<f64>().ok()? / b.parse::<f64>().ok()?
    } else {
        num.parse().ok()?
    };
    Some((value, unit.trim()))
}

struct Parser<'a> {
    source_name: &'a str,
    text: &'a str,
    table: BTreeMap<String, Spanned<Value>>,
}

impl Parser<'_> {
    fn line_of(&self, key: &str) -> Option<usize> {
        let span = self.table.get(key)?.span();
        Some(self.text[..span.start.min(self.text.len())].matches('\n').count() + 1)
    }

    fn error(&self, key: &str, message: String) -> ConfigError {
        match self.line_of(key) {
            Some(line) => ConfigError::At {
                source_name: self.source_name.to_string(),
                line,
                message,
            },
            None => ConfigError::Invalid {
                source_name: self.source_name.to_string(),
                message,
            },
        }
    }

    fn string(&self, key: &str) -> Result<Option<&str>, ConfigError> {
        match self.table.get(key).map(|v| v.get_ref()) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(other) => Err(self.error(key, format!("{key} must be a string, got {}", other.type_str()))),
        }
    }

    fn number(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.table.get(key).map(|v| v.get_ref()) {
            None => Ok(None),
            Some(Value::Float(f)) => Ok(Some(*f)),
            Some(Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(other) => Err(self.error(key, format!("{key} must be a number, got {}", other.type_str()))),
        }
    }

    fn quantity_value(&self, key: &str, v: &Value, q: Quantity, mode: Mode) -> Result<f64, ConfigError> {
        let mismatch = || self.error(key, format!("{key}: expected {}, got {v}", q.describe(mode)));
        let (value, unit) = match v {
            Value::Float(f) => (*f, ""),
            Value::Integer(i) => (*i as f64, ""),
            Value::String(s) => split_unit(s).ok_or_else(mismatch)?,
            _ => return Err(mismatch()),
        };
        let factor = match (q, mode, unit) {
            (Quantity::Area, _, "pi") => 1.0,
            (Quantity::Temperature, _, "K") => 1.0,
            (Quantity::Coupling, Mode::QdUnits, "ps2" | "ps^2") => 1.0,
            (Quantity::Energy, Mode::QdUnits, "meV") => 1.0,
            (Quantity::Energy, Mode::QdUnits, "ueV" | "µeV" | "μeV") => 1e-3,
            (Quantity::Time, Mode::QdUnits, "ps") => 1.0,
            (Quantity::Energy | Quantity::Time, Mode::Dimensionless, "") => 1.0,
            _ => return Err(mismatch()),
        };
        Ok(value * factor)
    }

    fn quantity(&self, key: &str, q: Quantity, mode: Mode) -> Result<Option<f64>, ConfigError> {
        match self.table.get(key).map(|v| v.get_ref()) {
            None => Ok(None),
            Some(Value::Array(_)) => Err(self.error(key, format!("{key} takes a single value"))),
            Some(v) => self.quantity_value(key, v, q, mode).map(Some),
        }
    }

    fn axis(&self, key: &str, q: Quantity, mode: Mode) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.table.get(key).map(|v| v.get_ref()) {
            None => Ok(None),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| self.quantity_value(key, v, q, mode))
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
            Some(v) => Ok(Some(vec![self.quantity_value(key, v, q, mode)?])),
        }
    }

    fn keyword<T>(&self, key: &str, choices: &[(&str, T)]) -> Result<Option<T>, ConfigError>
    where
        T: Copy,
    {
        let Some(s) = self.string(key)? else {
            return Ok(None);
        };
        choices.iter().find(|(name, _)| *name == s).map(|(_, v)| Some(*v)).ok_or_else(|| {
            let names: Vec<_> = choices.iter().map(|(n, _)| *n).collect();
            self.error(key, format!("{key} must be one of {}, got \"{s}\"", names.join(", ")))
        })
    }
}

/// Parses a configuration document. `preset` (from the command line) is
/// applied first, then the document's own preset, then its keys.
pub fn parse_config(text: &str, source_name: &str, preset: Option<Preset>) -> Result<RunConfig, ConfigError> {
    let table: BTreeMap<String, Spanned<Value>> = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
        let message = e.message().to_string();
        match line {
            Some(line) => ConfigError::At {
                source_name: source_name.to_string(),
                line,
                message,
            },
            None => ConfigError::Invalid {
                source_name: source_name.to_string(),
                message,
            },
        }
    })?;
    let p = Parser {
        source_name,
        text,
        table,
    };
    for key in p.table.keys() {
        if !KEYS.contains(&key.as_str()) {
            return Err(p.error(key, format!("unknown key \"{key}\"")));
        }
    }
    match p.number("schema_version")? {
        None => return Err(p.error("schema_version", "missing required key schema_version".into())),
        Some(v) if v != SCHEMA_VERSION as f64 => {
            return Err(p.error("schema_version", format!("unsupported schema_version {v} (expected {SCHEMA_VERSION})")))
        }
        Some(_) => {}
    }
    let file_preset = match p.string("preset")? {
        None => None,
        Some(s) => Some(Preset::parse(s).ok_or_else(|| {
            p.error("preset", format!("preset must be one of fig1, fig2, fig3, custom, got \"{s}\""))
        })?),
    };
    let chosen = file_preset.or(preset).unwrap_or(Preset::Custom);
    let mut c = RunConfig::preset(chosen);
    if chosen == Preset::Custom {
        for key in ["omega0", "gamma"] {
            if !p.table.contains_key(key) {
                return Err(p.error(key, format!("missing required key {key}")));
            }
        }
    }
    if let Some(m) = p.keyword("mode", &[("dimensionless", Mode::Dimensionless), ("qd-units", Mode::QdUnits)])? {
        c.mode = m;
    }
    if let Some(s) = p.keyword("shape", &[("gaussian", Shape::Gaussian), ("square", Shape::Square), ("cw", Shape::Cw)])? {
        c.shape = s;
    }
    let mode = c.mode;
    if let Some(v) = p.quantity("omega0", Quantity::Energy, mode)? {
        c.omega0 = v;
    }
    if let Some(v) = p.quantity("gamma", Quantity::Energy, mode)? {
        c.gamma = v;
    }
    if let Some(v) = p.axis("theta", Quantity::Area, mode)? {
        c.theta = v;
    }
    if let Some(v) = p.axis("detuning", Quantity::Energy, mode)? {
        c.detuning = v;
    }
    if let Some(v) = p.axis("gamma_prime", Quantity::Energy, mode)? {
        c.gamma_prime = v;
    }
    if let Some(v) = p.axis("temperature", Quantity::Temperature, mode)? {
        c.temperature = v;
    }
    match p.table.get("phonons").map(|v| v.get_ref()) {
        None => {}
        Some(Value::Boolean(b)) => c.phonons = if *b { Phonons::On } else { Phonons::Off },
        Some(Value::String(s)) if s == "pair" => c.phonons = Phonons::Pair,
        Some(other) => return Err(p.error("phonons", format!("phonons must be true, false or \"pair\", got {other}"))),
    }
    if let Some(v) = p.quantity("alpha", Quantity::Coupling, mode)? {
        c.alpha = v;
    }
    if let Some(v) = p.quantity("omega_b", Quantity::Energy, mode)? {
        c.omega_b = v;
    }
    if let Some(v) = p.quantity("rise_time", Quantity::Time, mode)? {
        c.rise_time = Some(v);
    }
    if let Some(v) = p.number("detuning_span")? {
        c.detuning_span = v;
    }
    if let Some(v) = p.number("detuning_points")? {
        if v.fract() != 0.0 || v < 0.0 {
            return Err(p.error("detuning_points", format!("detuning_points must be a positive integer, got {v}")));
        }
        c.detuning_points = v as usize;
    }
    if let Some(n) = p.keyword(
        "normalization",
        &[
            ("none", Normalization::None),
            ("row-resonant-total", Normalization::RowResonantTotal),
            ("phonon-free-max", Normalization::PhononFreeMax),
        ],
    )? {
        c.normalization = n;
    }
    if let Some(o) = p.string("output")? {
        c.output = PathBuf::from(o);
    }
    c.validate().map_err(|(key, message)| p.error(key, message))?;
    Ok(c)
}

pub fn load_config(path: &Path, preset: Option<Preset>) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, &path.display().to_string(), preset)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        parse_config(text, "test.toml", None)
    }

    #[test]
    fn fig3_with_detuning_override() {
        let c = parse("schema_version = 1\npreset = \"fig3\"\ndetuning = \"0.33meV\"\n").unwrap();
        assert_eq!(c.mode, Mode::QdUnits);
        assert_eq!(c.detuning, vec![0.33]);
        assert_eq!(c.omega0, 1.0);
        assert!((c.gamma - 0.010).abs() < 1e-15);
        assert_eq!(c.temperature, vec![4.0]);
        assert_eq!(c.theta, vec![5.0]);
        assert_eq!(c.alpha, 0.06);
        assert_eq!(c.omega_b, 1.0);
    }

    #[test]
    fn fig1_with_theta() {
        let c = parse("schema_version = 1\npreset = \"fig1\"\ntheta = \"4pi\"\n").unwrap();
        assert_eq!(c.mode, Mode::Dimensionless);
        assert_eq!(c.theta, vec![4.0]);
        assert_eq!(c.gamma, 1.0 / 40.0);
        assert_eq!(c.gamma_prime, vec![0.0]);
    }

    #[test]
    fn missing_omega0_is_rejected() {
        let err = parse("schema_version = 1\ngamma = 0.025\ntheta = \"2pi\"\n").unwrap_err();
        assert!(err.to_string().contains("omega0"), "{err}");
    }

    #[test]
    fn unknown_key_reports_its_line() {
        let err = parse("schema_version = 1\npreset = \"fig1\"\n\nthetta = \"4pi\"\n").unwrap_err();
        assert_eq!(err.to_string(), "test.toml:4: unknown key \"thetta\"");
    }

    #[test]
    fn unit_mismatch_reports_its_line() {
        let err = parse("schema_version = 1\npreset = \"fig3\"\ntemperature = \"4meV\"\n").unwrap_err();
        assert!(err.to_string().starts_with("test.toml:3:"), "{err}");
        let err = parse("schema_version = 1\npreset = \"fig1\"\ngamma = \"10ueV\"\n").unwrap_err();
        assert!(err.to_string().starts_with("test.toml:3:"), "{err}");
        let err = parse("schema_version = 1\npreset = \"fig3\"\ndetuning = 0.33\n").unwrap_err();
        assert!(err.to_string().starts_with("test.toml:3:"), "{err}");
    }

    #[test]
    fn invariant_violation_reports_its_line() {
        let err = parse("schema_version = 1\npreset = \"fig1\"\ngamma_prime = [0.0, -0.1]\n").unwrap_err();
        assert!(err.to_string().starts_with("test.toml:3:"), "{err}");
    }

    #[test]
    fn schema_version_is_required() {
        assert!(parse("preset = \"fig1\"\n").is_err());
        assert!(parse("schema_version = 2\npreset = \"fig1\"\n").is_err());
    }

    #[test]
    fn unit_suffixes() {
        assert_eq!(split_unit("0.33meV"), Some((0.33, "meV")));
        assert_eq!(split_unit("10ueV"), Some((10.0, "ueV")));
        assert_eq!(split_unit("pi"), Some((1.0, "pi")));
        assert_eq!(split_unit("1/40"), Some((0.025, "")));
        assert_eq!(split_unit("-0.33meV"), Some((-0.33, "meV")));
        assert_eq!(split_unit("1e-2ps"), Some((0.01, "ps")));
        let c = parse("schema_version = 1\npreset = \"fig1\"\ngamma = \"1/40\"\n").unwrap();
        assert_eq!(c.gamma, 0.025);
        let c = parse("schema_version = 1\npreset = \"fig3\"\ngamma = \"10ueV\"\n").unwrap();
        assert!((c.gamma - 0.01).abs() < 1e-15);
    }

    #[test]
    fn sweep_expansion_order() {
        let c = RunConfig::preset(Preset::Fig3);
        let points = c.points();
        assert_eq!(points.len(), 6);
        assert_eq!(points[0].phonons, Phonons::Off);
        assert_eq!(points[1].phonons, Phonons::On);
        assert_eq!(points[2].detuning, vec![0.33]);
        assert!(points.iter().all(RunConfig::is_single));
        assert_eq!(RunConfig::preset(Preset::Fig1).points().len(), 8);
        assert_eq!(RunConfig::preset(Preset::Fig2).points().len(), 16);
    }

    #[test]
    fn phonons_need_qd_units() {
        let err = parse("schema_version = 1\npreset = \"fig1\"\nphonons = true\n").unwrap_err();
        assert!(err.to_string().contains("qd-units"), "{err}");
    }
}
