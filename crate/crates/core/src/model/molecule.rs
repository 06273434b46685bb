use nalgebra::{Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ELEMENTS: [&str; 18] = [
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S", "Cl",
    "Ar",
];

/// Nuclear charge for an element symbol (case-insensitive).
pub fn atomic_number(symbol: &str) -> Option<u32> {
    ELEMENTS
        .iter()
        .position(|e| e.eq_ignore_ascii_case(symbol))
        .map(|i| i as u32 + 1)
}

pub fn element_symbol(z: u32) -> Option<&'static str> {
    ELEMENTS.get((z as usize).checked_sub(1)?).copied()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub symbol: String,
    pub charge: u32,
    /// Position in bohr.
    pub position: Vector3<f64>,
}

impl Atom {
    pub fn new(symbol: &str, position: Vector3<f64>) -> Result<Self> {
        let charge = atomic_number(symbol)
            .ok_or_else(|| Error::InvalidInput(format!("unknown element '{symbol}'")))?;
        let atom = Atom {
            symbol: element_symbol(charge).unwrap().to_string(),
            charge,
            position,
        };
        atom.validate()?;
        Ok(atom)
    }

    fn validate(&self) -> Result<()> {
        if self.charge < 1 {
            return Err(Error::InvalidInput(format!("atom {} has Z < 1", self.symbol)));
        }
        if !self.position.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidInput(format!("atom {} has a non-finite position", self.symbol)));
        }
        Ok(())
    }
}

/// Nuclear charge center `sum Z R / sum Z`.
pub fn charge_center(atoms: &[Atom]) -> Result<Vector3<f64>> {
    if atoms.is_empty() {
        return Err(Error::InvalidInput("charge center of an empty atom list".into()));
    }
    let total: f64 = atoms.iter().map(|a| a.charge as f64).sum();
    if total <= 0.0 {
        return Err(Error::InvalidInput("total nuclear charge must be positive".into()));
    }
    let weighted = atoms
        .iter()
        .fold(Vector3::zeros(), |acc, a| acc + a.position * a.charge as f64);
    Ok(weighted / total)
}

/// Closed-shell molecule with its dipole gauge origin.
///
/// Molecules built with [`Molecule::new`] carry their gauge origin at the
/// nuclear charge center, so the nuclear dipole about that origin vanishes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Molecule {
    atoms: Vec<Atom>,
    charge: i32,
    gauge_origin: Vector3<f64>,
}

impl Molecule {
    pub fn new(atoms: Vec<Atom>, charge: i32) -> Result<Self> {
        let origin = charge_center(&atoms)?;
        Self::with_gauge_origin(atoms, charge, origin)
    }

    pub fn with_gauge_origin(atoms: Vec<Atom>, charge: i32, gauge_origin: Vector3<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidInput("molecule has no atoms".into()));
        }
        for a in &atoms {
            a.validate()?;
        }
        if !gauge_origin.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidInput("gauge origin must be finite".into()));
        }
        let mol = Molecule {
            atoms,
            charge,
            gauge_origin,
        };
        let n = mol.total_nuclear_charge() as i64 - charge as i64;
        if n < 0 || n % 2 != 0 {
            return Err(Error::InvalidInput(format!(
                "closed-shell treatment needs an even, non-negative electron count (got {n})"
            )));
        }
        Ok(mol)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn charge(&self) -> i32 {
        self.charge
    }

    pub fn gauge_origin(&self) -> Vector3<f64> {
        self.gauge_origin
    }

    pub fn total_nuclear_charge(&self) -> u32 {
        self.atoms.iter().map(|a| a.charge).sum()
    }

    pub fn n_electrons(&self) -> usize {
        (self.total_nuclear_charge() as i64 - self.charge as i64) as usize
    }

    pub fn charge_center(&self) -> Vector3<f64> {
        // Non-empty by construction.
        charge_center(&self.atoms).expect("molecule has atoms")
    }

    pub fn nuclear_dipole(&self) -> Vector3<f64> {
        nuclear_dipole(self, &self.gauge_origin)
    }

    pub fn nuclear_repulsion(&self) -> f64 {
        let mut e = 0.0;
        for (i, a) in self.atoms.iter().enumerate() {
            for b in &self.atoms[..i] {
                e += (a.charge * b.charge) as f64 / (a.position - b.position).norm();
            }
        }
        e
    }

    /// Same molecule with the gauge origin moved to the current charge center.
    pub fn recentered(&self) -> Molecule {
        Molecule {
            gauge_origin: self.charge_center(),
            ..self.clone()
        }
    }

    /// Rigid translation of nuclei and gauge origin.
    pub fn translated(&self, shift: &Vector3<f64>) -> Molecule {
        Molecule {
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom {
                    position: a.position + shift,
                    ..a.clone()
                })
                .collect(),
            charge: self.charge,
            gauge_origin: self.gauge_origin + shift,
        }
    }

    /// Rotates nuclei and gauge origin about `pivot`.
    pub fn rotated(&self, rotation: &Rotation3<f64>, pivot: &Vector3<f64>) -> Molecule {
        let map = |p: &Vector3<f64>| rotation * (p - pivot) + pivot;
        Molecule {
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom {
                    position: map(&a.position),
                    ..a.clone()
                })
                .collect(),
            charge: self.charge,
            gauge_origin: map(&self.gauge_origin),
        }
    }

    /// Moves atom `moving` along the `fixed -> moving` direction so the two are
    /// `length` bohr apart, then re-centers the gauge origin.
    pub fn with_bond_length(&self, fixed: usize, moving: usize, length: f64) -> Result<Molecule> {
        let n = self.atoms.len();
        if fixed >= n || moving >= n || fixed == moving {
            return Err(Error::InvalidInput(format!("invalid bond ({fixed}, {moving}) for {n} atoms")));
        }
        if !(length > 0.0) {
            return Err(Error::InvalidInput(format!("bond length must be positive, got {length}")));
        }
        let a = self.atoms[fixed].position;
        let axis = (self.atoms[moving].position - a).normalize();
        let mut atoms = self.atoms.clone();
        atoms[moving].position = a + axis * length;
        Molecule::new(atoms, self.charge)
    }

    pub fn bond_length(&self, i: usize, j: usize) -> f64 {
        (self.atoms[i].position - self.atoms[j].position).norm()
    }

    /// Concatenates molecules into one; gauge origin at the combined charge center.
    pub fn combine(parts: &[Molecule]) -> Result<Molecule> {
        let atoms: Vec<Atom> = parts.iter().flat_map(|m| m.atoms.iter().cloned()).collect();
        let charge = parts.iter().map(|m| m.charge).sum();
        Molecule::new(atoms, charge)
    }
}

/// `sum_A Z_A (R_A - origin)`.
pub fn nuclear_dipole(molecule: &Molecule, origin: &Vector3<f64>) -> Vector3<f64> {
    molecule
        .atoms
        .iter()
        .fold(Vector3::zeros(), |acc, a| acc + (a.position - origin) * a.charge as f64)
}

/// Hydrogen fluoride with F at the origin and H along +z.
pub fn hydrogen_fluoride(bond_length: f64) -> Result<Molecule> {
    Molecule::new(
        vec![
            Atom::new("F", Vector3::zeros())?,
            Atom::new("H", Vector3::new(0.0, 0.0, bond_length))?,
        ],
        0,
    )
}

/// Bond length (bohr) of the built-in HF template.
pub const HF_BOND_LENGTH: f64 = 1.7325;
