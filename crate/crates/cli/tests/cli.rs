use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use pulsed_rf_cli::config::Phonons;
use pulsed_rf_cli::run::parse_spectrum_csv;
use pulsed_rf_cli::{parse_config, run_point, Manifest, Metadata, RunConfig};
use pulsed_rf::units::mev_to_rad_per_ps;
use tempfile::TempDir;

const SMALL: &str = "schema_version = 1
mode = \"dimensionless\"
omega0 = 1.0
gamma = 0.1
theta = \"2pi\"
detuning = 0.3
gamma_prime = 0.05
detuning_points = 201
";

fn cli(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pulsed-rf"))
        .args(args)
        .current_dir(cwd)
        .env_remove("PULSED_RF_OUT")
        .env_remove("PULSED_RF_THREADS")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

fn only_point(out: &Path) -> std::path::PathBuf {
    let manifest = Manifest::load(out).unwrap();
    assert_eq!(manifest.points.len(), 1);
    out.join(&manifest.points[0].dir)
}

#[test]
fn run_writes_spectrum_metadata_and_manifest() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", SMALL);
    let out = cli(&["run", "--config", &cfg, "--out", "res"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let res = tmp.path().join("res");
    for f in ["manifest.json", "aggregate.csv", "timings.json"] {
        assert!(res.join(f).is_file(), "{f}");
    }
    let point = only_point(&res);
    let csv = fs::read_to_string(point.join("spectrum.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("delta,s_total,s_coh,s_inc"));
    assert_eq!(lines.clone().count(), 201);
    let first: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(first[0], "-2.500000000000e0");

    let meta: Metadata = serde_json::from_str(&fs::read_to_string(point.join("metadata.json")).unwrap()).unwrap();
    assert!(meta.coh_fraction > 0.0 && meta.coh_fraction < 1.0);
    assert!(meta.sideband_ratio.is_some());
    assert!(meta.adiabaticity_max.unwrap() > 0.0);
    assert!(!meta.sidepeaks.is_empty());
    assert!(meta.lifetime.is_some());
    assert!(meta.dual_path_deviation <= 1e-9);
}

#[test]
fn outputs_are_byte_deterministic() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", SMALL);
    for dir in ["a", "b"] {
        let out = cli(&["run", "--config", &cfg, "--out", dir, "--threads", "2"], tmp.path());
        assert!(out.status.success());
    }
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for f in ["manifest.json", "aggregate.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let (pa, pb) = (only_point(&a), only_point(&b));
    assert_eq!(fs::read(pa.join("spectrum.csv")).unwrap(), fs::read(pb.join("spectrum.csv")).unwrap());
    // the output directory is part of the recorded configuration
    let strip = |p: &Path| {
        let mut m: Metadata = serde_json::from_str(&fs::read_to_string(p.join("metadata.json")).unwrap()).unwrap();
        m.config.output = "x".into();
        serde_json::to_string(&m).unwrap()
    };
    assert_eq!(strip(&pa), strip(&pb));
}

#[test]
fn metadata_round_trips_to_the_run_configuration() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", SMALL);
    assert!(cli(&["run", "--config", &cfg, "--out", "res"], tmp.path()).status.success());
    let text = fs::read_to_string(only_point(&tmp.path().join("res")).join("metadata.json")).unwrap();
    let meta: Metadata = serde_json::from_str(&text).unwrap();
    let mut expected = parse_config(SMALL, "small.toml", None).unwrap();
    expected.output = "res".into();
    assert_eq!(meta.config, expected);
    assert_eq!(serde_json::to_string_pretty(&meta).unwrap() + "\n", text);
}

#[test]
fn validation_errors_exit_2_with_line_context() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "bad.toml", &format!("{SMALL}gamma_primee = 0.1\n"));
    let out = cli(&["run", "--config", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.toml:9: unknown key \"gamma_primee\""), "{err}");

    let cfg = write_config(tmp.path(), "unit.toml", "schema_version = 1\npreset = \"fig3\"\nomega_b = \"1K\"\n");
    let out = cli(&["run", "--config", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unit.toml:3:"));

    let cfg = write_config(tmp.path(), "missing.toml", "schema_version = 1\ngamma = 0.1\ntheta = \"pi\"\n");
    let out = cli(&["run", "--config", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("omega0"));

    let out = cli(&["run"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_rejects_multi_point_configurations() {
    let tmp = TempDir::new().unwrap();
    let out = cli(&["run", "--preset", "fig1"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sweep"));
}

#[test]
fn theta_sweep_writes_one_result_set_per_area() {
    let tmp = TempDir::new().unwrap();
    let text = SMALL.replace("theta = \"2pi\"", "theta = [\"pi\", \"2pi\", \"4pi\", \"8pi\"]");
    let cfg = write_config(tmp.path(), "sweep.toml", &text);
    let out = Command::new(env!("CARGO_BIN_EXE_pulsed-rf"))
        .args(["sweep", "--config", &cfg])
        .current_dir(tmp.path())
        .env("PULSED_RF_OUT", "from_env")
        .env("PULSED_RF_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let res = tmp.path().join("from_env");
    let manifest = Manifest::load(&res).unwrap();
    let thetas: Vec<_> = manifest.points.iter().map(|p| p.theta.unwrap()).collect();
    assert_eq!(thetas, vec![1.0, 2.0, 4.0, 8.0]);
    for p in &manifest.points {
        assert!(res.join(&p.dir).join("spectrum.csv").is_file());
    }
    let aggregate = fs::read_to_string(res.join("aggregate.csv")).unwrap();
    assert_eq!(aggregate.lines().count(), 1 + 4 * 201);

    let out = cli(&["plot-script", "--out", "from_env", "--semilog"], tmp.path());
    assert!(out.status.success());
    let script = fs::read_to_string(res.join("plot_spectra.py")).unwrap();
    assert!(script.contains("YSCALE = \"log\""));
    for p in &manifest.points {
        assert!(script.contains(&format!("\"{}\"", p.dir)));
    }

    let out = cli(&["analyze", "--out", "from_env"], tmp.path());
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).matches("sideband ratio").count(), 4);
}

#[test]
fn numerical_failures_exit_3_and_keep_partial_results() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "strong.toml",
        "schema_version = 1
preset = \"fig3\"
detuning = \"0meV\"
theta = \"pi\"
alpha = \"1ps2\"
temperature = [\"4K\", \"40K\"]
phonons = true
detuning_points = 201
",
    );
    let out = cli(&["sweep", "--config", &cfg, "--out", "res"], tmp.path());
    assert_eq!(out.status.code(), Some(3));
    let res = tmp.path().join("res");
    let manifest = Manifest::load(&res).unwrap();
    let status: Vec<_> = manifest.points.iter().map(|p| p.error.is_none()).collect();
    assert_eq!(status, vec![true, false]);
    assert!(res.join(&manifest.points[0].dir).join("spectrum.csv").is_file());
    assert!(!res.join(&manifest.points[1].dir).exists());
    assert!(manifest.points[1].error.as_deref().unwrap().contains("point 1"));
}

#[test]
fn plot_script_on_empty_directory_fails() {
    let tmp = TempDir::new().unwrap();
    let out = cli(&["plot-script", "--out", "."], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fig1_resonant_row_is_symmetric() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "row.toml", "schema_version = 1\npreset = \"fig1\"\ntheta = \"5pi\"\ndetuning = 0.0\n");
    let out = cli(&["run", "--config", &cfg, "--out", "res"], tmp.path());
    assert!(out.status.success());
    let point = only_point(&tmp.path().join("res"));
    let path = point.join("spectrum.csv");
    let s = parse_spectrum_csv(&fs::read_to_string(&path).unwrap(), &path).unwrap();
    let max = s.s_inc.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let n = s.s_inc.len();
    for k in 0..n {
        assert!((s.s_inc[k] - s.s_inc[n - 1 - k]).abs() <= 1e-3 * max);
    }
}

#[test]
fn fig3_red_detuning_pair_shows_exciton_contrast() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "red.toml", "schema_version = 1\npreset = \"fig3\"\ndetuning = \"-0.33meV\"\n");
    let out = cli(&["sweep", "--config", &cfg, "--out", "res"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let res = tmp.path().join("res");
    let manifest = Manifest::load(&res).unwrap();
    assert_eq!(manifest.points.len(), 2);
    let exciton = |dir: &str| {
        let meta: Metadata =
            serde_json::from_str(&fs::read_to_string(res.join(dir).join("metadata.json")).unwrap()).unwrap();
        meta.peaks
            .iter()
            .filter(|p| (p.position + 0.33).abs() < 0.01)
            .map(|p| p.height)
            .fold(f64::NAN, f64::max)
    };
    let (free, phonon) = (exciton(&manifest.points[0].dir), exciton(&manifest.points[1].dir));
    assert!(!manifest.points[0].phonons && manifest.points[1].phonons);
    assert!(phonon > free, "{phonon} vs {free}");
}

#[test]
fn no_phonons_flag_drops_phonon_runs() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "pair.toml",
        "schema_version = 1\npreset = \"fig3\"\ndetuning = \"0.33meV\"\ntheta = \"pi\"\ndetuning_points = 101\n",
    );
    let out = cli(&["sweep", "--config", &cfg, "--out", "res", "--no-phonons"], tmp.path());
    assert!(out.status.success());
    let manifest = Manifest::load(&tmp.path().join("res")).unwrap();
    assert_eq!(manifest.points.len(), 1);
    assert!(!manifest.points[0].phonons);
}

#[test]
fn unit_layer_preserves_spectra() {
    let qd = parse_config(
        "schema_version = 1
mode = \"qd-units\"
omega0 = \"0.8meV\"
gamma = \"20ueV\"
theta = \"2pi\"
detuning = \"0.2meV\"
gamma_prime = \"5ueV\"
detuning_points = 301
",
        "qd.toml",
        None,
    )
    .unwrap();
    assert_eq!(qd.phonons, Phonons::Off);
    let dimensionless = qd.to_dimensionless().unwrap();
    let a = run_point(&qd).unwrap().spectrum;
    let b = run_point(&dimensionless).unwrap().spectrum;
    // S = Re ∫dt ∫dτ g e^{iδτ} carries two powers of time
    let omega0 = mev_to_rad_per_ps(0.8);
    let to_qd = 1.0 / (omega0 * omega0);
    let rel = |x: f64, y: f64, scale: f64| (x - y).abs() / scale;
    let scale = a.s_total.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for k in 0..a.detunings.len() {
        assert!(rel(a.detunings[k], b.detunings[k] * 0.8, 0.8) <= 1e-12);
        for (x, y) in [(a.s_total[k], b.s_total[k]), (a.s_coh[k], b.s_coh[k]), (a.s_inc[k], b.s_inc[k])] {
            assert!(rel(x, y * to_qd, scale) <= 1e-9, "{k}: {x} vs {}", y * to_qd);
        }
    }
    assert!((a.coh_fraction - b.coh_fraction).abs() <= 1e-9);
}

#[test]
fn presets_expand_to_the_published_parameters() {
    let fig3 = RunConfig::preset(pulsed_rf_cli::config::Preset::Fig3);
    let sim = fig3.points()[1].sim_config().unwrap();
    assert!((sim.pulse.omega0 - mev_to_rad_per_ps(1.0)).abs() < 1e-12);
    assert!((sim.gamma - mev_to_rad_per_ps(0.010)).abs() < 1e-12);
    assert!((sim.pulse.area - 5.0 * std::f64::consts::PI).abs() < 1e-12);
    let p = sim.phonon.unwrap();
    assert_eq!((p.alpha, p.temperature), (0.06, 4.0));
    assert!((p.omega_b - mev_to_rad_per_ps(1.0)).abs() < 1e-12);
    let fwhm = sim.pulse.fwhm().unwrap();
    assert!((fwhm - 9.7).abs() <= 0.05);

    let fig2 = RunConfig::preset(pulsed_rf_cli::config::Preset::Fig2);
    assert_eq!(fig2.gamma, 1.0 / 40.0);
    assert_eq!(fig2.gamma_prime, vec![0.0, 0.1]);
}
