//! Physical constants (CODATA 2018, SI units).

pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
pub const HBAR: f64 = 1.054_571_817e-34;
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// Mass of a singly charged 171Yb ion (atomic mass; the electron is negligible here).
pub const YB171_MASS: f64 = 170.936_325_8 * ATOMIC_MASS_UNIT;

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Converts a frequency in MHz (the "2π × f" convention) to rad/s.
pub fn mhz(f: f64) -> f64 {
    TWO_PI * f * 1e6
}

/// Converts a frequency in kHz to rad/s.
pub fn khz(f: f64) -> f64 {
    TWO_PI * f * 1e3
}
