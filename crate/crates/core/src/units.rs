//! dB conversions and radio constants shared by the link budget code.

use crate::Scalar;

/// Gains reported for zero linear power.
pub const DB_FLOOR: f64 = -200.0;

/// Thermal noise density at room temperature.
pub const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;

pub const SPEED_OF_LIGHT_MPS: f64 = 299_792_458.0;

#[inline]
pub fn db_to_lin<T: Scalar>(db: T) -> T {
    T::lit(10.0).powf(db / T::lit(10.0))
}

/// `10·log10(lin)`, clamped at [`DB_FLOOR`] for zero or negative input.
#[inline]
pub fn lin_to_db<T: Scalar>(lin: T) -> T {
    let floor = T::lit(DB_FLOOR);
    if !(lin > T::zero()) {
        return floor;
    }
    let db = T::lit(10.0) * lin.log10();
    if db < floor {
        floor
    } else {
        db
    }
}

#[inline]
pub fn dbm_to_mw(dbm: f64) -> f64 {
    db_to_lin(dbm)
}

#[inline]
pub fn mw_to_dbm(mw: f64) -> f64 {
    lin_to_db(mw)
}

/// Thermal noise power over `bandwidth_hz` including the receiver noise figure.
pub fn noise_power_dbm(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    THERMAL_NOISE_DBM_PER_HZ + 10.0 * bandwidth_hz.log10() + noise_figure_db
}
