use std::f64::consts::PI;

use pulsed_rf::polaron::PhononParams;
use pulsed_rf::spectrum::{compute, default_detunings};
use pulsed_rf::units::mev_to_rad_per_ps;
use pulsed_rf::{PulseSpec, SimConfig};

#[test]
fn phonon_spectra_are_unit_invariant() {
    let w = mev_to_rad_per_ps(1.0);
    let phonons = PhononParams::qd_units(0.06, 1.0, 4.0).unwrap();
    let qd = SimConfig::pulsed(PulseSpec::gaussian(w, PI, 0.0).unwrap(), -0.33 * w, 0.01 * w, 0.0)
        .unwrap()
        .with_phonons(phonons)
        .unwrap();
    let scaled = SimConfig::pulsed(PulseSpec::gaussian(1.0, PI, 0.0).unwrap(), -0.33, 0.01, 0.0)
        .unwrap()
        .with_phonons(phonons.rescaled(w))
        .unwrap();
    let a = compute(&qd, &default_detunings(w)).unwrap().spectrum;
    let b = compute(&scaled, &default_detunings(1.0)).unwrap().spectrum;
    let scale = a.s_total.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for k in 0..a.detunings.len() {
        for (x, y) in [(a.s_total[k], b.s_total[k]), (a.s_coh[k], b.s_coh[k]), (a.s_inc[k], b.s_inc[k])] {
            assert!((x - y / (w * w)).abs() <= 1e-9 * scale, "{k}: {x} vs {}", y / (w * w));
        }
    }
    assert!((a.coh_fraction - b.coh_fraction).abs() <= 1e-9);
}
