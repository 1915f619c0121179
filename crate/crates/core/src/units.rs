//! Conversions between laboratory units (meV, ps, K) and the internal
//! convention, in which energies are angular frequencies (rad/ps when working
//! in QD units) and ħ = 1.

/// ħ in meV·ps.
pub const HBAR_MEV_PS: f64 = 0.6582119569;

/// k_B in meV/K.
pub const KB_MEV_PER_K: f64 = 0.08617333;

/// Energy in meV → angular frequency in rad/ps.
pub fn mev_to_rad_per_ps(e: f64) -> f64 {
    e / HBAR_MEV_PS
}

/// Angular frequency in rad/ps → energy in meV.
pub fn rad_per_ps_to_mev(w: f64) -> f64 {
    w * HBAR_MEV_PS
}

/// μeV → rad/ps.
pub fn uev_to_rad_per_ps(e: f64) -> f64 {
    mev_to_rad_per_ps(e * 1e-3)
}

/// Thermal energy k_B T as an angular frequency in rad/ps.
pub fn thermal_frequency(temperature_k: f64) -> f64 {
    mev_to_rad_per_ps(KB_MEV_PER_K * temperature_k)
}
