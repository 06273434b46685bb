//! Contracted Cartesian Gaussian shells and the Gaussian94 basis format.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::model::molecule::{atomic_number, element_symbol, Molecule};

const STO_3G: &str = include_str!("../../data/sto-3g.gbs");
const SIX_31G: &str = include_str!("../../data/6-31g.gbs");

/// Names accepted by [`BasisLibrary::builtin`].
pub const BUILTIN_BASIS_SETS: [&str; 2] = ["sto-3g", "6-31g"];

/// Cartesian exponent triples of a shell, `x` fastest-decreasing
/// (`xx, xy, xz, yy, yz, zz` for d).
pub fn cartesian_components(l: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::with_capacity((l + 1) * (l + 2) / 2);
    for lx in (0..=l).rev() {
        for ly in (0..=(l - lx)).rev() {
            out.push([lx, ly, l - lx - ly]);
        }
    }
    out
}

fn double_factorial_odd(n: usize) -> f64 {
    // (2n - 1)!!
    (1..=n).map(|k| (2 * k - 1) as f64).product()
}

/// Shell definition as read from a basis file, before placement on an atom.
#[derive(Debug, Clone, PartialEq)]
pub struct ShellTemplate {
    pub l: usize,
    pub exponents: Vec<f64>,
    pub coefficients: Vec<f64>,
}

/// A contracted shell placed on a center.
///
/// `coefficients` already contain the primitive normalization for the
/// `x^l` component and the contraction renormalization, so that
/// [`BasisShell::component_scale`] is the only remaining per-component factor.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisShell {
    pub center: Vector3<f64>,
    pub l: usize,
    pub exponents: Vec<f64>,
    pub coefficients: Vec<f64>,
    pub atom_index: usize,
}

impl BasisShell {
    pub fn new(center: Vector3<f64>, l: usize, exponents: Vec<f64>, raw_coefficients: Vec<f64>, atom_index: usize) -> Result<Self> {
        if exponents.is_empty() || exponents.len() != raw_coefficients.len() {
            return Err(Error::InvalidInput("shell needs matching, non-empty exponent and coefficient lists".into()));
        }
        if exponents.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
            return Err(Error::InvalidInput("shell exponents must be positive".into()));
        }
        let pi = std::f64::consts::PI;
        let prim_norm = |a: f64| (2.0 * a / pi).powf(0.75) * (4.0 * a).powf(l as f64 / 2.0);
        let mut coefficients: Vec<f64> = exponents
            .iter()
            .zip(&raw_coefficients)
            .map(|(&a, &c)| c * prim_norm(a))
            .collect();
        let mut self_overlap = 0.0;
        for (i, &ai) in exponents.iter().enumerate() {
            for (j, &aj) in exponents.iter().enumerate() {
                let p = ai + aj;
                self_overlap += coefficients[i] * coefficients[j] * (pi / p).powf(1.5) / (2.0 * p).powi(l as i32);
            }
        }
        if !(self_overlap > 0.0) {
            return Err(Error::InvalidInput("shell contraction has zero norm".into()));
        }
        let scale = 1.0 / self_overlap.sqrt();
        coefficients.iter_mut().for_each(|c| *c *= scale);
        Ok(BasisShell {
            center,
            l,
            exponents,
            coefficients,
            atom_index,
        })
    }

    pub fn n_functions(&self) -> usize {
        (self.l + 1) * (self.l + 2) / 2
    }

    /// Per-component normalization relative to the `x^l` component.
    pub fn component_scale(component: &[usize; 3]) -> f64 {
        1.0 / (double_factorial_odd(component[0]) * double_factorial_odd(component[1]) * double_factorial_odd(component[2])).sqrt()
    }
}

/// Element-keyed basis set.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisLibrary {
    pub name: String,
    elements: BTreeMap<u32, Vec<ShellTemplate>>,
}

fn parse_number(s: &str, line: usize) -> Result<f64> {
    s.replace(['D', 'd'], "E").parse::<f64>().map_err(|_| Error::BasisParse {
        line,
        msg: format!("bad number '{s}'"),
    })
}

fn shell_letter(s: &str) -> Option<Vec<usize>> {
    Some(match s.to_ascii_uppercase().as_str() {
        "S" => vec![0],
        "P" => vec![1],
        "D" => vec![2],
        "F" => vec![3],
        "G" => vec![4],
        "SP" | "L" => vec![0, 1],
        _ => return None,
    })
}

impl BasisLibrary {
    /// Parses the Gaussian94 exchange format: `ELEMENT 0` header, shell lines
    /// `TYPE NPRIM SCALE`, primitive rows `exponent coefficient [p-coefficient]`,
    /// and `****` terminators. Lines starting with `!` are comments.
    pub fn parse(name: &str, text: &str) -> Result<Self> {
        let lines: Vec<(usize, &str)> = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('!'))
            .collect();
        if lines.is_empty() {
            return Err(Error::BasisParse {
                line: 0,
                msg: "empty basis stream".into(),
            });
        }
        let mut elements: BTreeMap<u32, Vec<ShellTemplate>> = BTreeMap::new();
        let mut pos = 0;
        while pos < lines.len() {
            let (line_no, header) = lines[pos];
            let fields: Vec<&str> = header.split_whitespace().collect();
            let z = atomic_number(fields[0]).ok_or_else(|| Error::BasisParse {
                line: line_no,
                msg: format!("expected element header, found '{header}'"),
            })?;
            pos += 1;
            let mut shells = Vec::new();
            loop {
                let Some(&(line_no, line)) = lines.get(pos) else {
                    return Err(Error::BasisParse {
                        line: lines.last().map(|l| l.0).unwrap_or(0),
                        msg: "missing '****' terminator".into(),
                    });
                };
                pos += 1;
                if line.starts_with("****") {
                    break;
                }
                let fields: Vec<&str> = line.split_whitespace().collect();
                let ls = shell_letter(fields[0]).ok_or_else(|| Error::BasisParse {
                    line: line_no,
                    msg: format!("unknown shell type '{}'", fields[0]),
                })?;
                let nprim: usize = fields.get(1).and_then(|s| s.parse().ok()).ok_or_else(|| Error::BasisParse {
                    line: line_no,
                    msg: "missing primitive count".into(),
                })?;
                if nprim == 0 {
                    return Err(Error::BasisParse {
                        line: line_no,
                        msg: "shell with zero primitives".into(),
                    });
                }
                let scale = match fields.get(2) {
                    Some(s) => parse_number(s, line_no)?,
                    None => 1.0,
                };
                let mut exps = Vec::with_capacity(nprim);
                let mut coefs = vec![Vec::with_capacity(nprim); ls.len()];
                for _ in 0..nprim {
                    let Some(&(line_no, row)) = lines.get(pos) else {
                        return Err(Error::BasisParse {
                            line: line_no,
                            msg: "truncated primitive list".into(),
                        });
                    };
                    pos += 1;
                    let vals: Vec<&str> = row.split_whitespace().collect();
                    if vals.len() < 1 + ls.len() {
                        return Err(Error::BasisParse {
                            line: line_no,
                            msg: format!("expected {} columns", 1 + ls.len()),
                        });
                    }
                    let a = parse_number(vals[0], line_no)? * scale * scale;
                    if !(a > 0.0) {
                        return Err(Error::BasisParse {
                            line: line_no,
                            msg: "exponents must be positive".into(),
                        });
                    }
                    exps.push(a);
                    for (k, c) in coefs.iter_mut().enumerate() {
                        c.push(parse_number(vals[1 + k], line_no)?);
                    }
                }
                for (l, c) in ls.into_iter().zip(coefs) {
                    shells.push(ShellTemplate {
                        l,
                        exponents: exps.clone(),
                        coefficients: c,
                    });
                }
            }
            elements.insert(z, shells);
        }
        Ok(BasisLibrary {
            name: name.to_string(),
            elements,
        })
    }

    pub fn builtin(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "sto-3g" | "sto3g" => Self::parse("sto-3g", STO_3G),
            "6-31g" | "631g" => Self::parse("6-31g", SIX_31G),
            other => Err(Error::InvalidInput(format!("no built-in basis named '{other}'"))),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("custom");
        Self::parse(name, &text)
    }

    /// Built-in name or path to a Gaussian94 file.
    pub fn load(name_or_path: &str) -> Result<Self> {
        if BUILTIN_BASIS_SETS.iter().any(|b| b.eq_ignore_ascii_case(name_or_path)) {
            Self::builtin(name_or_path)
        } else {
            Self::from_file(Path::new(name_or_path))
        }
    }

    pub fn element(&self, z: u32) -> Option<&[ShellTemplate]> {
        self.elements.get(&z).map(|v| v.as_slice())
    }

    /// Places the shells of every atom of `molecule`.
    pub fn shells_for(&self, molecule: &Molecule) -> Result<Vec<BasisShell>> {
        let mut out = Vec::new();
        for (idx, atom) in molecule.atoms().iter().enumerate() {
            let templates = self.elements.get(&atom.charge).ok_or_else(|| {
                Error::MissingElement(element_symbol(atom.charge).unwrap_or("?").to_string())
            })?;
            for t in templates {
                out.push(BasisShell::new(atom.position, t.l, t.exponents.clone(), t.coefficients.clone(), idx)?);
            }
        }
        Ok(out)
    }
}

/// Parses a Gaussian94 stream and places its shells on `molecule`.
pub fn parse_basis(text: &str, molecule: &Molecule) -> Result<Vec<BasisShell>> {
    BasisLibrary::parse("custom", text)?.shells_for(molecule)
}

pub fn n_basis_functions(shells: &[BasisShell]) -> usize {
    shells.iter().map(BasisShell::n_functions).sum()
}
