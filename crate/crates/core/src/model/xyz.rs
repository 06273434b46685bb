//! Plain XYZ geometry files (coordinates in angstrom).

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;

use super::molecule::{Atom, Molecule};
use super::units::ANGSTROM_PER_BOHR;
use crate::error::{Error, Result};

pub fn parse_xyz(text: &str, charge: i32) -> Result<Molecule> {
    let mut lines = text.lines().enumerate();
    let (_, count_line) = lines
        .next()
        .ok_or(Error::Xyz { line: 1, msg: "empty input".into() })?;
    let count: usize = count_line.trim().parse().map_err(|_| Error::Xyz {
        line: 1,
        msg: format!("expected atom count, found '{}'", count_line.trim()),
    })?;
    // comment line
    lines.next();

    let mut atoms = Vec::with_capacity(count);
    for (idx, line) in lines {
        if atoms.len() == count {
            break;
        }
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 4 {
            return Err(Error::Xyz {
                line: line_no,
                msg: "expected 'symbol x y z'".into(),
            });
        }
        let mut xyz = [0.0; 3];
        for (k, f) in fields[1..4].iter().enumerate() {
            xyz[k] = f.parse::<f64>().map_err(|_| Error::Xyz {
                line: line_no,
                msg: format!("bad coordinate '{f}'"),
            })?;
        }
        let pos = Vector3::from(xyz) / ANGSTROM_PER_BOHR;
        let atom = Atom::new(fields[0], pos).map_err(|e| Error::Xyz {
            line: line_no,
            msg: e.to_string(),
        })?;
        atoms.push(atom);
    }
    if atoms.len() != count {
        return Err(Error::Xyz {
            line: text.lines().count(),
            msg: format!("expected {count} atoms, found {}", atoms.len()),
        });
    }
    Molecule::new(atoms, charge)
}

pub fn read_xyz(path: &Path, charge: i32) -> Result<Molecule> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_xyz(&text, charge)
}

pub fn to_xyz(molecule: &Molecule, comment: &str) -> String {
    let mut out = format!("{}\n{}\n", molecule.atoms().len(), comment);
    for a in molecule.atoms() {
        let p = a.position * ANGSTROM_PER_BOHR;
        let _ = writeln!(out, "{:<2} {:.10} {:.10} {:.10}", a.symbol, p.x, p.y, p.z);
    }
    out
}
