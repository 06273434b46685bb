//! Run configuration: a TOML file with `geometry`, `cavity`, `ensemble`,
//! `scan`, `scf` and `output` blocks, all optional.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::cavity::CavitySettings;
use crate::ensemble::EnsembleTemplate;
use crate::error::{Error, Result};
use crate::integrals::{BasisLibrary, MolecularSystem};
use crate::model::units::field_from_lambda;
use crate::model::xyz::{parse_xyz, read_xyz};
use crate::model::{convert_units, hydrogen_fluoride, lambda_from_field, CavityConfig, Molecule, OrientationPattern, Unit, HF_BOND_LENGTH};
use crate::scf::rhf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanKind {
    Qc,
    Angle,
    Bond,
    Size,
    Single,
}

impl ScanKind {
    pub fn name(self) -> &'static str {
        match self {
            ScanKind::Qc => "scan-qc",
            ScanKind::Angle => "scan-angle",
            ScanKind::Bond => "scan-bond",
            ScanKind::Size => "sweep-size",
            ScanKind::Single => "single",
        }
    }

    /// `(start, stop, step)` used when the scan block leaves them out.
    /// Photon displacement in a.u., angles in degrees, bond lengths in bohr.
    pub fn default_range(self) -> Option<(f64, f64, f64)> {
        match self {
            ScanKind::Qc => Some((-2.0, 2.0, 0.1)),
            ScanKind::Angle => Some((0.0, 180.0, 5.0)),
            ScanKind::Bond => Some((1.5, 3.5, 0.25)),
            ScanKind::Size | ScanKind::Single => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        })
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Config(format!("unknown output format '{other}'"))),
        }
    }
}

/// Molecule source: inline XYZ text, an XYZ file, or the built-in HF template.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryBlock {
    pub xyz: Option<String>,
    pub file: Option<PathBuf>,
    pub charge: i32,
    /// Bond length of the built-in HF template, bohr.
    pub bond_length: f64,
    /// Dipole direction in the molecule's frame; the field-free RHF dipole if absent.
    pub dipole_axis: Option<[f64; 3]>,
}

impl Default for GeometryBlock {
    fn default() -> Self {
        GeometryBlock {
            xyz: None,
            file: None,
            charge: 0,
            bond_length: HF_BOND_LENGTH,
            dipole_axis: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CavityBlock {
    /// Mode frequency in cm^-1.
    pub omega_cm: f64,
    /// Field strengths in V/nm. Mutually exclusive with `lambda0`.
    pub field_v_per_nm: Vec<f64>,
    /// Bare couplings in a.u.
    pub lambda0: Vec<f64>,
    pub polarization: [f64; 3],
}

impl Default for CavityBlock {
    fn default() -> Self {
        CavityBlock {
            omega_cm: 4467.0,
            field_v_per_nm: Vec::new(),
            lambda0: Vec::new(),
            polarization: [0.0, 0.0, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleBlock {
    pub n_mol: Vec<usize>,
    pub pattern: OrientationPattern,
    pub separation_angstrom: f64,
    pub rescale: bool,
    pub scanned_index: usize,
}

impl Default for EnsembleBlock {
    fn default() -> Self {
        EnsembleBlock {
            n_mol: vec![1],
            pattern: OrientationPattern::AllParallel,
            separation_angstrom: 800.0,
            rescale: true,
            scanned_index: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanBlock {
    pub kind: Option<ScanKind>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub step: Option<f64>,
    /// `(fixed, moving)` atoms of the scanned bond.
    pub bond_atoms: [usize; 2],
}

impl Default for ScanBlock {
    fn default() -> Self {
        ScanBlock {
            kind: None,
            start: None,
            stop: None,
            step: None,
            bond_atoms: [0, 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputBlock {
    pub directory: PathBuf,
    pub formats: Vec<OutputFormat>,
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock {
            directory: PathBuf::from("out"),
            formats: vec![OutputFormat::Csv, OutputFormat::Json],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Built-in basis name or path to a Gaussian-format basis file.
    pub basis: String,
    pub geometry: GeometryBlock,
    pub cavity: CavityBlock,
    pub ensemble: EnsembleBlock,
    pub scan: ScanBlock,
    pub scf: CavitySettings,
    pub output: OutputBlock,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            basis: "sto-3g".into(),
            geometry: GeometryBlock::default(),
            cavity: CavityBlock::default(),
            ensemble: EnsembleBlock::default(),
            scan: ScanBlock::default(),
            scf: CavitySettings::default(),
            output: OutputBlock::default(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub kind: Option<ScanKind>,
    pub basis: Option<String>,
    pub out: Option<PathBuf>,
    pub formats: Option<Vec<OutputFormat>>,
}

/// One coupling of the cavity block, in both conventions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub field_v_per_nm: f64,
    pub lambda0: f64,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configuration serializes")
    }

    /// Applies overrides, fills every default and validates.
    pub fn resolve(mut self, ov: &Overrides) -> Result<Self> {
        if let Some(k) = ov.kind {
            self.scan.kind = Some(k);
        }
        if let Some(b) = &ov.basis {
            self.basis = b.clone();
        }
        if let Some(o) = &ov.out {
            self.output.directory = o.clone();
        }
        if let Some(f) = &ov.formats {
            self.output.formats = f.clone();
        }
        let kind = self.scan.kind.ok_or_else(|| Error::Config("no scan type given".into()))?;
        if self.cavity.field_v_per_nm.is_empty() && self.cavity.lambda0.is_empty() {
            self.cavity.field_v_per_nm = vec![0.5, 1.0, 1.5, 2.0];
        }
        if let Some((a, b, s)) = kind.default_range() {
            self.scan.start.get_or_insert(a);
            self.scan.stop.get_or_insert(b);
            self.scan.step.get_or_insert(s);
        }
        self.validate()?;
        Ok(self)
    }

    pub fn kind(&self) -> ScanKind {
        self.scan.kind.unwrap_or(ScanKind::Single)
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.cavity;
        if !c.field_v_per_nm.is_empty() && !c.lambda0.is_empty() {
            return Err(Error::Config("give either field_v_per_nm or lambda0, not both".into()));
        }
        if c.field_v_per_nm.iter().chain(&c.lambda0).any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Config("couplings must be finite and non-negative".into()));
        }
        if !(c.omega_cm > 0.0) {
            return Err(Error::Config(format!("omega_cm must be positive, got {}", c.omega_cm)));
        }
        if Vector3::from(c.polarization).norm() < 1e-12 {
            return Err(Error::Config("polarization must be nonzero".into()));
        }
        let e = &self.ensemble;
        if e.n_mol.is_empty() || e.n_mol.contains(&0) {
            return Err(Error::Config("ensemble.n_mol must list positive sizes".into()));
        }
        if e.n_mol.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("ensemble.n_mol must be strictly increasing".into()));
        }
        if !(e.separation_angstrom > 0.0) {
            return Err(Error::Config("ensemble separation must be positive".into()));
        }
        if self.geometry.xyz.is_some() && self.geometry.file.is_some() {
            return Err(Error::Config("give either geometry.xyz or geometry.file, not both".into()));
        }
        if self.output.formats.is_empty() {
            return Err(Error::Config("no output format selected".into()));
        }
        if self.kind().default_range().is_some() {
            self.grid()?;
        }
        self.scf.validate()
    }

    /// Scan coordinate grid `start, start + step, ..., stop`.
    pub fn grid(&self) -> Result<Vec<f64>> {
        let (Some(a), Some(b), Some(s)) = (self.scan.start, self.scan.stop, self.scan.step) else {
            return Err(Error::Config("scan range needs start, stop and step".into()));
        };
        if !(s > 0.0) || !(b >= a) || !a.is_finite() || !b.is_finite() {
            return Err(Error::Config(format!("scan range must be increasing with a positive step (start {a}, stop {b}, step {s})")));
        }
        let n = ((b - a) / s + 1e-9).floor() as usize;
        if n > 100_000 {
            return Err(Error::Config(format!("scan grid has {n} points")));
        }
        Ok((0..=n).map(|k| a + k as f64 * s).collect())
    }

    pub fn omega(&self) -> Result<f64> {
        convert_units(self.cavity.omega_cm, Unit::Wavenumber, Unit::Hartree)
    }

    pub fn polarization(&self) -> Vector3<f64> {
        Vector3::from(self.cavity.polarization).normalize()
    }

    pub fn couplings(&self) -> Result<Vec<Coupling>> {
        let omega = self.omega()?;
        if !self.cavity.lambda0.is_empty() {
            return self
                .cavity
                .lambda0
                .iter()
                .map(|&l| {
                    let f = field_from_lambda(l, omega)?;
                    Ok(Coupling {
                        field_v_per_nm: convert_units(f, Unit::AuField, Unit::VoltPerNm)?,
                        lambda0: l,
                    })
                })
                .collect();
        }
        self.cavity
            .field_v_per_nm
            .iter()
            .map(|&f| {
                Ok(Coupling {
                    field_v_per_nm: f,
                    lambda0: lambda_from_field(convert_units(f, Unit::VoltPerNm, Unit::AuField)?, omega)?,
                })
            })
            .collect()
    }

    pub fn cavity_config(&self, coupling: &Coupling) -> Result<CavityConfig> {
        CavityConfig::new(self.omega()?, coupling.lambda0, self.polarization(), self.ensemble.rescale)
    }

    pub fn basis_library(&self) -> Result<BasisLibrary> {
        BasisLibrary::load(&self.basis)
    }

    pub fn molecule(&self) -> Result<Molecule> {
        let g = &self.geometry;
        match (&g.xyz, &g.file) {
            (Some(text), None) => parse_xyz(text, g.charge),
            (None, Some(path)) => read_xyz(path, g.charge),
            (None, None) => hydrogen_fluoride(g.bond_length),
            _ => Err(Error::Config("give either geometry.xyz or geometry.file, not both".into())),
        }
    }

    /// Template dipole direction: configured, or from a field-free RHF.
    pub fn dipole_axis(&self, molecule: &Molecule, basis: &BasisLibrary) -> Result<Vector3<f64>> {
        if let Some(a) = self.geometry.dipole_axis {
            let v = Vector3::from(a);
            if v.norm() < 1e-12 {
                return Err(Error::Config("geometry.dipole_axis must be nonzero".into()));
            }
            return Ok(v.normalize());
        }
        let sys = MolecularSystem::new(molecule.clone(), basis)?;
        let scf = rhf(&sys.integrals, sys.n_electrons(), &self.scf.scf)?;
        if !scf.converged {
            return Err(Error::ScfNotConverged(scf.iterations));
        }
        let mu = crate::cavity::report::dipole_expectation(&scf.density, &sys.integrals, &sys.molecule);
        if mu.norm() < 1e-6 {
            return Err(Error::Config("molecule has no dipole; set geometry.dipole_axis".into()));
        }
        Ok(mu.normalize())
    }

    pub fn template(&self, molecule: Molecule, dipole_axis: Vector3<f64>) -> Result<EnsembleTemplate> {
        Ok(EnsembleTemplate {
            molecule,
            dipole_axis,
            pattern: self.ensemble.pattern,
            separation: convert_units(self.ensemble.separation_angstrom, Unit::Angstrom, Unit::Bohr)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolved(text: &str, kind: ScanKind) -> Result<RunConfig> {
        RunConfig::parse(text)?.resolve(&Overrides {
            kind: Some(kind),
            ..Overrides::default()
        })
    }

    #[test]
    fn defaults() {
        let c = resolved("", ScanKind::Single).unwrap();
        assert_eq!(c.cavity.field_v_per_nm, vec![0.5, 1.0, 1.5, 2.0]);
        assert_eq!(c.cavity.omega_cm, 4467.0);
        assert_eq!(c.ensemble.separation_angstrom, 800.0);
        assert!(c.ensemble.rescale);
        assert_eq!(c.couplings().unwrap().len(), 4);
    }

    #[test]
    fn grid_and_round_trip() {
        let c = resolved("[scan]\nstart = 0.0\nstop = 90.0\nstep = 30.0\n", ScanKind::Angle).unwrap();
        assert_eq!(c.grid().unwrap(), vec![0.0, 30.0, 60.0, 90.0]);
        let again = RunConfig::parse(&c.to_toml()).unwrap();
        assert_eq!(again, c);
        let c = resolved("", ScanKind::Bond).unwrap();
        assert_eq!(c.grid().unwrap().len(), 9);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(resolved("[cavity]\nfield_v_per_nm = [1.0]\nlambda0 = [0.01]\n", ScanKind::Single).is_err());
        assert!(resolved("[scan]\nstart = 1.0\nstop = 0.0\n", ScanKind::Qc).is_err());
        assert!(resolved("[ensemble]\nn_mol = []\n", ScanKind::Size).is_err());
        assert!(resolved("[ensemble]\nn_mol = [2, 1]\n", ScanKind::Size).is_err());
        assert!(resolved("bogus = 1\n", ScanKind::Single).is_err());
        assert!(RunConfig::parse("").unwrap().resolve(&Overrides::default()).is_err());
    }

    #[test]
    fn lambda_and_field_agree() {
        let by_field = resolved("[cavity]\nfield_v_per_nm = [2.0]\n", ScanKind::Single).unwrap();
        let c = by_field.couplings().unwrap()[0];
        let by_lambda = resolved(&format!("[cavity]\nlambda0 = [{}]\n", c.lambda0), ScanKind::Single).unwrap();
        let d = by_lambda.couplings().unwrap()[0];
        assert!((d.field_v_per_nm - 2.0).abs() < 1e-12);
    }

    #[test]
    fn format_names() {
        assert_eq!("CSV".parse::<OutputFormat>().unwrap(), OutputFormat::Csv);
        assert!("xml".parse::<OutputFormat>().is_err());
    }
}
