//! Unit conversions between atomic units and the laboratory units used at
//! the configuration and reporting boundaries.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// cm^-1 per hartree.
pub const WAVENUMBER_PER_HARTREE: f64 = 219_474.631_363_2;
/// V/nm per atomic unit of electric field.
pub const V_PER_NM_PER_AU_FIELD: f64 = 514.220_674_8;
/// Atomic units of dipole per debye.
pub const AU_DIPOLE_PER_DEBYE: f64 = 0.393_430_3;
/// Angstrom per bohr.
pub const ANGSTROM_PER_BOHR: f64 = 0.529_177_210_903;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Unit {
    Wavenumber,
    Hartree,
    VoltPerNm,
    AuField,
    Debye,
    AuDipole,
    Angstrom,
    Bohr,
    CubicNm,
    CubicBohr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dimension {
    Energy,
    Field,
    Dipole,
    Length,
    Volume,
}

impl Unit {
    fn dimension(self) -> Dimension {
        match self {
            Unit::Wavenumber | Unit::Hartree => Dimension::Energy,
            Unit::VoltPerNm | Unit::AuField => Dimension::Field,
            Unit::Debye | Unit::AuDipole => Dimension::Dipole,
            Unit::Angstrom | Unit::Bohr => Dimension::Length,
            Unit::CubicNm | Unit::CubicBohr => Dimension::Volume,
        }
    }

    /// Size of one of this unit expressed in atomic units.
    fn in_atomic_units(self) -> f64 {
        match self {
            Unit::Wavenumber => 1.0 / WAVENUMBER_PER_HARTREE,
            Unit::VoltPerNm => 1.0 / V_PER_NM_PER_AU_FIELD,
            Unit::Debye => AU_DIPOLE_PER_DEBYE,
            Unit::Angstrom => 1.0 / ANGSTROM_PER_BOHR,
            Unit::CubicNm => (10.0 / ANGSTROM_PER_BOHR).powi(3),
            Unit::Hartree | Unit::AuField | Unit::AuDipole | Unit::Bohr | Unit::CubicBohr => 1.0,
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Unit::Wavenumber => "cm-1",
            Unit::Hartree => "hartree",
            Unit::VoltPerNm => "V/nm",
            Unit::AuField => "au-field",
            Unit::Debye => "debye",
            Unit::AuDipole => "au-dipole",
            Unit::Angstrom => "angstrom",
            Unit::Bohr => "bohr",
            Unit::CubicNm => "nm3",
            Unit::CubicBohr => "bohr3",
        };
        f.write_str(s)
    }
}

impl FromStr for Unit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "cm-1" | "cm^-1" | "wavenumber" => Unit::Wavenumber,
            "hartree" | "ha" | "eh" => Unit::Hartree,
            "v/nm" => Unit::VoltPerNm,
            "au-field" => Unit::AuField,
            "debye" | "d" => Unit::Debye,
            "au-dipole" => Unit::AuDipole,
            "angstrom" | "a" => Unit::Angstrom,
            "bohr" => Unit::Bohr,
            "nm3" | "nm^3" => Unit::CubicNm,
            "bohr3" | "bohr^3" => Unit::CubicBohr,
            other => return Err(Error::InvalidInput(format!("unknown unit '{other}'"))),
        })
    }
}

/// Converts `value` from one unit to another of the same physical dimension.
pub fn convert_units(value: f64, from: Unit, to: Unit) -> Result<f64> {
    if from.dimension() != to.dimension() {
        return Err(Error::UnsupportedUnits {
            from: from.to_string(),
            to: to.to_string(),
        });
    }
    if from == to {
        return Ok(value);
    }
    Ok(value * from.in_atomic_units() / to.in_atomic_units())
}

/// Coupling magnitude of a Fabry-Perot mode from its vacuum field strength:
/// `lambda = sqrt(2 / omega) * epsilon` (all atomic units).
pub fn lambda_from_field(epsilon: f64, omega: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::Domain(format!("cavity frequency must be positive, got {omega}")));
    }
    if !(epsilon >= 0.0) {
        return Err(Error::Domain(format!("field strength must be non-negative, got {epsilon}")));
    }
    Ok((2.0 / omega).sqrt() * epsilon)
}

/// Inverse of [`lambda_from_field`].
pub fn field_from_lambda(lambda: f64, omega: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::Domain(format!("cavity frequency must be positive, got {omega}")));
    }
    Ok(lambda * (omega / 2.0).sqrt())
}

/// Effective mode volume `4 pi / lambda^2` in bohr^3.
pub fn mode_volume(lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Domain("mode volume is unbounded for zero coupling".into()));
    }
    Ok(4.0 * std::f64::consts::PI / (lambda * lambda))
}
