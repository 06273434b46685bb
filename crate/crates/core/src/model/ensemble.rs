//! Replicated molecular ensembles in the three fixed orientation patterns.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};

use super::molecule::Molecule;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrientationPattern {
    AllParallel,
    Antiparallel,
    Defective,
}

impl OrientationPattern {
    /// Sign of molecule `index`'s dipole axis relative to the polarization.
    pub fn sign(self, index: usize) -> f64 {
        match self {
            OrientationPattern::AllParallel => 1.0,
            OrientationPattern::Antiparallel => {
                if index % 2 == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
            OrientationPattern::Defective => {
                if index == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }
}

impl fmt::Display for OrientationPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OrientationPattern::AllParallel => "all-parallel",
            OrientationPattern::Antiparallel => "antiparallel",
            OrientationPattern::Defective => "defective",
        })
    }
}

impl FromStr for OrientationPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "all-parallel" | "parallel" | "p" => Ok(OrientationPattern::AllParallel),
            "antiparallel" | "anti-parallel" | "a" => Ok(OrientationPattern::Antiparallel),
            "defective" | "d" => Ok(OrientationPattern::Defective),
            other => Err(Error::InvalidPattern(format!("unknown orientation pattern '{other}'"))),
        }
    }
}

/// Where and how a replica sits in the ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    /// +1 if the molecular dipole axis points along the polarization, -1 otherwise.
    pub sign: f64,
    /// Maps the template frame onto the ensemble frame.
    pub rotation: Rotation3<f64>,
    /// Position of the replica's charge center.
    pub site: Vector3<f64>,
}

impl Placement {
    /// Places a template-frame molecule: rotation about its own charge center,
    /// then translation of that center onto the site.
    pub fn place(&self, molecule: &Molecule) -> Molecule {
        let center = molecule.charge_center();
        molecule
            .rotated(&self.rotation, &center)
            .translated(&(self.site - center))
            .recentered()
    }
}

#[derive(Debug, Clone)]
pub struct EnsembleGeometry {
    pub molecules: Vec<Molecule>,
    pub placements: Vec<Placement>,
    pub pattern: OrientationPattern,
    /// Replica spacing in bohr.
    pub separation: f64,
    /// Zero-based index of the molecule whose geometry is scanned.
    pub scanned_index: usize,
}

impl EnsembleGeometry {
    pub fn len(&self) -> usize {
        self.molecules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.molecules.is_empty()
    }

    /// Replaces molecule `index` by a template-frame variant placed in the same slot.
    pub fn with_replaced(&self, index: usize, variant: &Molecule) -> Result<EnsembleGeometry> {
        if index >= self.molecules.len() {
            return Err(Error::InvalidInput(format!(
                "molecule index {index} out of range for {} molecules",
                self.molecules.len()
            )));
        }
        let mut out = self.clone();
        out.molecules[index] = self.placements[index].place(variant);
        Ok(out)
    }

    /// All nuclei of the ensemble as a single molecule.
    pub fn super_molecule(&self) -> Result<Molecule> {
        Molecule::combine(&self.molecules)
    }
}

/// Rotation taking unit vector `from` onto unit vector `to`, including the
/// antiparallel case.
pub fn rotation_between(from: &Vector3<f64>, to: &Vector3<f64>) -> Rotation3<f64> {
    let a = from.normalize();
    let b = to.normalize();
    if a.dot(&b) < -1.0 + 1e-12 {
        let axis = perpendicular(&a);
        Rotation3::from_axis_angle(&Unit::new_normalize(axis), std::f64::consts::PI)
    } else {
        Rotation3::rotation_between(&a, &b).unwrap_or_else(Rotation3::identity)
    }
}

/// A unit vector perpendicular to `v`.
pub fn perpendicular(v: &Vector3<f64>) -> Vector3<f64> {
    let v = v.normalize();
    let mut best = Vector3::x();
    for axis in [Vector3::x(), Vector3::y(), Vector3::z()] {
        if axis.dot(&v).abs() < best.dot(&v).abs() {
            best = axis;
        }
    }
    v.cross(&best).normalize()
}

/// Replicates `template` `n_mol` times on a line perpendicular to the
/// polarization, each dipole axis along `+e` or `-e` according to `pattern`.
///
/// `dipole_axis` is the direction of the template's dipole in its own frame.
pub fn build_ensemble(
    template: &Molecule,
    dipole_axis: &Vector3<f64>,
    n_mol: usize,
    pattern: OrientationPattern,
    separation: f64,
    polarization: &Vector3<f64>,
) -> Result<EnsembleGeometry> {
    if n_mol < 1 {
        return Err(Error::InvalidInput("ensemble needs at least one molecule".into()));
    }
    if pattern == OrientationPattern::Defective && n_mol < 2 {
        return Err(Error::InvalidPattern("defective pattern needs at least two molecules".into()));
    }
    if !(separation > 0.0) {
        return Err(Error::InvalidInput(format!("separation must be positive, got {separation}")));
    }
    if dipole_axis.norm() < 1e-12 || polarization.norm() < 1e-12 {
        return Err(Error::InvalidInput("dipole axis and polarization must be nonzero".into()));
    }
    let e = polarization.normalize();
    let line = perpendicular(&e);
    let mut molecules = Vec::with_capacity(n_mol);
    let mut placements = Vec::with_capacity(n_mol);
    for k in 0..n_mol {
        let sign = pattern.sign(k);
        let placement = Placement {
            sign,
            rotation: rotation_between(dipole_axis, &(e * sign)),
            site: line * (k as f64 * separation),
        };
        molecules.push(placement.place(template));
        placements.push(placement);
    }
    Ok(EnsembleGeometry {
        molecules,
        placements,
        pattern,
        separation,
        scanned_index: 0,
    })
}
