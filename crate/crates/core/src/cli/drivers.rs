//! Scan drivers. Grid points run concurrently; rows come out in scan order.
//!
//! Column order of the ensemble-level tables:
//! scan coordinates, `q e_cbo e_el e_lin e_dis e_dse e_dse_1e e_dse_2j e_dse_2k
//! e_dse_en e_dse_nuc mu_x mu_y mu_z`, reference energies, convergence metadata.

use nalgebra::{Rotation3, Unit, Vector3};
use rayon::prelude::*;

use super::config::{Coupling, RunConfig, ScanKind};
use super::table::{report_cells, report_identities, Cell, Identity, Table, CONVERGED, REPORT_COLUMNS};
use crate::cavity::{energy_at_q, optimize_qc_with, CavitySettings, QcSolution};
use crate::ensemble::{dilute_solve, size_sweep, EnsembleSolution, EnsembleTemplate};
use crate::error::Result;
use crate::integrals::{BasisLibrary, MolecularSystem};
use crate::model::ensemble::perpendicular;
use crate::model::Molecule;
use crate::scf::rhf;

/// Everything the drivers share, resolved once from the configuration.
pub struct Setup {
    pub basis: BasisLibrary,
    pub template: EnsembleTemplate,
    pub omega: f64,
    pub polarization: Vector3<f64>,
    pub couplings: Vec<Coupling>,
    pub settings: CavitySettings,
}

impl Setup {
    pub fn new(config: &RunConfig) -> Result<Self> {
        let basis = config.basis_library()?;
        let molecule = config.molecule()?;
        let axis = config.dipole_axis(&molecule, &basis)?;
        Ok(Setup {
            template: config.template(molecule, axis)?,
            basis,
            omega: config.omega()?,
            polarization: config.polarization(),
            couplings: config.couplings()?,
            settings: config.scf.clone(),
        })
    }

    /// The template with its dipole along the polarization, rotated by
    /// `phi` degrees about an axis through its charge center perpendicular
    /// to the polarization.
    pub fn oriented(&self, phi_deg: f64) -> Result<Molecule> {
        let aligned = self.template.build(1, &self.polarization)?.molecules.remove(0);
        if phi_deg == 0.0 {
            return Ok(aligned);
        }
        let axis = Unit::new_normalize(perpendicular(&self.polarization));
        let rot = Rotation3::from_axis_angle(&axis, phi_deg.to_radians());
        Ok(aligned.rotated(&rot, &aligned.charge_center()).recentered())
    }

    fn lambda(&self, c: &Coupling, n_mol: usize, rescale: bool) -> f64 {
        if rescale {
            c.lambda0 / (n_mol as f64).sqrt()
        } else {
            c.lambda0
        }
    }
}

fn status(err: Option<&crate::Error>) -> [Cell; 2] {
    match err {
        None => [Cell::Flag(true), Cell::Text(String::new())],
        Some(e) => [Cell::Flag(false), Cell::Text(e.to_string())],
    }
}

fn columns(head: &[&'static str], tail: &[&'static str]) -> Vec<&'static str> {
    head.iter().chain(REPORT_COLUMNS.iter()).chain(tail).copied().chain([CONVERGED, "error"]).collect()
}

fn nan(n: usize) -> Vec<Cell> {
    vec![Cell::Num(f64::NAN); n]
}

/// `E_CBO(q)` at fixed geometry on the configured `q` grid, one block per coupling.
pub fn run_qc_scan(config: &RunConfig) -> Result<Vec<Table>> {
    let setup = Setup::new(config)?;
    let grid = config.grid()?;
    let sys = MolecularSystem::new(setup.oriented(0.0)?, &setup.basis)?;
    let inner = setup.settings.inner_scf();
    let field_free = rhf(&sys.integrals, sys.n_electrons(), &inner)?;
    let e0 = if field_free.converged { field_free.energy } else { f64::NAN };
    let optima: Vec<Option<QcSolution>> = setup
        .couplings
        .par_iter()
        .map(|c| optimize_qc_with(&sys, setup.polarization * c.lambda0, setup.omega, &setup.settings).ok())
        .collect();
    let jobs: Vec<(usize, f64)> = (0..setup.couplings.len()).flat_map(|c| grid.iter().map(move |&q| (c, q))).collect();
    let results: Vec<_> = jobs
        .par_iter()
        .map(|&(c, q)| energy_at_q(&sys, setup.polarization * setup.couplings[c].lambda0, setup.omega, q, &inner, None))
        .collect();
    let mut t = Table::new("scan", &columns(&["field_v_per_nm", "lambda", "q_opt"], &["e_field_free", "delta_e", "scf_iterations"]));
    t.identities = report_identities();
    for (&(c, _), res) in jobs.iter().zip(results) {
        let cp = &setup.couplings[c];
        let mut row = vec![
            Cell::Num(cp.field_v_per_nm),
            Cell::Num(cp.lambda0),
            Cell::Num(optima[c].as_ref().map_or(f64::NAN, |o| o.q)),
        ];
        match &res {
            Ok((scf, rep)) => {
                row.extend(report_cells(Some(rep)));
                row.extend([Cell::Num(e0), Cell::Num(rep.e_cbo - e0), Cell::Int(scf.iterations as i64)]);
            }
            Err(_) => {
                row.extend(report_cells(None));
                row.extend([Cell::Num(e0), Cell::Num(f64::NAN), Cell::Int(0)]);
            }
        }
        row.extend(status(res.as_ref().err()));
        t.push(row);
    }
    Ok(vec![t])
}

/// Optimized `q` for the single molecule rotated through the configured angles.
pub fn run_angle_scan(config: &RunConfig) -> Result<Vec<Table>> {
    let setup = Setup::new(config)?;
    let grid = config.grid()?;
    let jobs: Vec<(usize, f64)> = (0..setup.couplings.len()).flat_map(|c| grid.iter().map(move |&p| (c, p))).collect();
    let results: Vec<Result<QcSolution>> = jobs
        .par_iter()
        .map(|&(c, phi)| {
            let sys = MolecularSystem::new(setup.oriented(phi)?, &setup.basis)?;
            optimize_qc_with(&sys, setup.polarization * setup.couplings[c].lambda0, setup.omega, &setup.settings)
        })
        .collect();
    let tail = ["e_field_free", "delta_e", "macro_iterations", "field_residual", "used_fallback"];
    let mut t = Table::new("scan", &columns(&["field_v_per_nm", "lambda", "phi_deg"], &tail));
    t.identities = report_identities();
    for (&(c, phi), res) in jobs.iter().zip(&results) {
        let cp = &setup.couplings[c];
        let mut row = vec![Cell::Num(cp.field_v_per_nm), Cell::Num(cp.lambda0), Cell::Num(phi)];
        match res {
            Ok(s) => {
                row.extend(report_cells(Some(&s.report)));
                row.extend([
                    Cell::Num(s.field_free_energy),
                    Cell::Num(s.delta_e()),
                    Cell::Int(s.macro_iterations as i64),
                    Cell::Num(s.trace.last().map_or(f64::NAN, |r| r.field_residual)),
                    Cell::Flag(s.used_fallback),
                ]);
            }
            Err(_) => {
                row.extend(report_cells(None));
                row.extend(nan(4));
                row.push(Cell::Flag(false));
            }
        }
        row.extend(status(res.as_ref().err()));
        t.push(row);
    }
    Ok(vec![t])
}

const MOLECULE_COLUMNS: [&str; 18] = [
    "e_cbo",
    "e_cbo_without_dis",
    "e_el",
    "e_lin",
    "e_dis",
    "e_dse_local",
    "e_dse_inter",
    "e_dse_1e",
    "e_dse_2j",
    "e_dse_2k",
    "e_dse_en",
    "e_dse_nuc",
    "e_field_free",
    "delta_e",
    "projected_dipole",
    "mu_x",
    "mu_y",
    "mu_z",
];

fn molecule_identities() -> Vec<Identity> {
    vec![
        Identity {
            total: "e_cbo",
            parts: vec!["e_el", "e_lin", "e_dse_local", "e_dse_inter", "e_dis"],
        },
        Identity {
            total: "e_dse_local",
            parts: vec!["e_dse_1e", "e_dse_2j", "e_dse_2k", "e_dse_en", "e_dse_nuc"],
        },
    ]
}

fn molecule_table(head: &[&'static str]) -> Table {
    let cols: Vec<&str> = head
        .iter()
        .copied()
        .chain(["molecule", "scanned"])
        .chain(MOLECULE_COLUMNS)
        .chain([CONVERGED, "error"])
        .collect();
    let mut t = Table::new("molecules", &cols);
    t.identities = molecule_identities();
    t
}

/// Appends one row per molecule (or a single failure row).
fn push_molecules(t: &mut Table, head: Vec<Cell>, n_mol: usize, scanned: usize, res: &Result<EnsembleSolution>) {
    match res {
        Ok(sol) => {
            for m in &sol.per_molecule {
                let mut row = head.clone();
                row.extend([Cell::Int(m.index as i64), Cell::Flag(m.index == scanned)]);
                row.extend(
                    [
                        m.e_cbo,
                        m.e_cbo_without_dis,
                        m.e_el,
                        m.e_lin,
                        m.e_dis,
                        m.e_dse_local,
                        m.e_dse_inter,
                        m.e_dse_1e,
                        m.e_dse_2j,
                        m.e_dse_2k,
                        m.e_dse_en,
                        m.e_dse_nuc,
                        m.field_free_energy,
                        m.delta_e,
                        m.projected_dipole,
                        m.dipole.x,
                        m.dipole.y,
                        m.dipole.z,
                    ]
                    .map(Cell::Num),
                );
                row.extend(status(None));
                t.push(row);
            }
        }
        Err(e) => {
            for m in 0..n_mol {
                let mut row = head.clone();
                row.extend([Cell::Int(m as i64), Cell::Flag(m == scanned)]);
                row.extend(nan(MOLECULE_COLUMNS.len()));
                row.extend(status(Some(e)));
                t.push(row);
            }
        }
    }
}

fn ensemble_tail(res: &Result<EnsembleSolution>, scanned: usize) -> Vec<Cell> {
    match res {
        Ok(sol) => {
            let s = &sol.per_molecule[scanned.min(sol.per_molecule.len() - 1)];
            vec![
                Cell::Num(sol.state.ensemble_field_free_energy()),
                Cell::Num(sol.delta_e()),
                Cell::Num(s.field_free_energy),
                Cell::Num(s.delta_e),
                Cell::Int(sol.state.solution.macro_iterations as i64),
                Cell::Num(sol.state.solution.trace.last().map_or(f64::NAN, |r| r.field_residual)),
            ]
        }
        Err(_) => {
            let mut v = nan(4);
            v.extend([Cell::Int(0), Cell::Num(f64::NAN)]);
            v
        }
    }
}

const ENSEMBLE_TAIL: [&str; 6] = [
    "e_field_free",
    "delta_e",
    "scanned_e_field_free",
    "scanned_delta_e",
    "macro_iterations",
    "field_residual",
];

/// Ensemble with one molecule's bond stretched over the grid; `q` optimized per point.
pub fn run_bond_scan(config: &RunConfig) -> Result<Vec<Table>> {
    let setup = Setup::new(config)?;
    let grid = config.grid()?;
    let [fixed, moving] = config.scan.bond_atoms;
    let scanned = config.ensemble.scanned_index;
    let rescale = config.ensemble.rescale;
    let mut jobs = Vec::new();
    for &n in &config.ensemble.n_mol {
        for c in 0..setup.couplings.len() {
            for &r in &grid {
                jobs.push((n, c, r));
            }
        }
    }
    let results: Vec<Result<EnsembleSolution>> = jobs
        .par_iter()
        .map(|&(n, c, r)| {
            let variant = setup.template.molecule.with_bond_length(fixed, moving, r)?;
            let geom = setup.template.build(n, &setup.polarization)?.with_replaced(scanned, &variant)?;
            dilute_solve(&geom, &setup.basis, &config.cavity_config(&setup.couplings[c])?, &setup.settings)
        })
        .collect();
    let head = ["n_mol", "pattern", "field_v_per_nm", "lambda", "bond_length"];
    let mut ens = Table::new("ensemble", &columns(&head, &ENSEMBLE_TAIL));
    ens.identities = report_identities();
    let mut mols = molecule_table(&head);
    for (&(n, c, r), res) in jobs.iter().zip(&results) {
        let cp = &setup.couplings[c];
        let h = vec![
            Cell::Int(n as i64),
            Cell::Text(config.ensemble.pattern.to_string()),
            Cell::Num(cp.field_v_per_nm),
            Cell::Num(setup.lambda(cp, n, rescale)),
            Cell::Num(r),
        ];
        let mut row = h.clone();
        row.extend(report_cells(res.as_ref().ok().map(|s| &s.report)));
        row.extend(ensemble_tail(res, scanned));
        row.extend(status(res.as_ref().err()));
        ens.push(row);
        push_molecules(&mut mols, h, n, scanned, res);
    }
    Ok(vec![ens, mols])
}

fn sweep_tables(config: &RunConfig, setup: &Setup, n_range: &[usize]) -> Result<Vec<Table>> {
    let cavities = setup.couplings.iter().map(|c| config.cavity_config(c)).collect::<Result<Vec<_>>>()?;
    let rows = size_sweep(&setup.template, n_range, &cavities, config.ensemble.rescale, &setup.basis, &setup.settings)?;
    let head = ["n_mol", "pattern", "field_v_per_nm", "lambda0", "lambda"];
    let mut ens = Table::new("ensemble", &columns(&head, &ENSEMBLE_TAIL));
    ens.identities = report_identities();
    let mut mols = molecule_table(&head);
    let scanned = config.ensemble.scanned_index;
    for p in &rows {
        let h = vec![
            Cell::Int(p.n_mol as i64),
            Cell::Text(setup.template.pattern.to_string()),
            Cell::Num(setup.couplings[p.cavity_index].field_v_per_nm),
            Cell::Num(p.lambda0),
            Cell::Num(p.lambda),
        ];
        let mut row = h.clone();
        row.extend(report_cells(p.outcome.as_ref().ok().map(|s| &s.report)));
        row.extend(ensemble_tail(&p.outcome, scanned));
        row.extend(status(p.outcome.as_ref().err()));
        ens.push(row);
        push_molecules(&mut mols, h, p.n_mol, scanned, &p.outcome);
    }
    Ok(vec![ens, mols])
}

/// Ensemble and per-molecule energies for every configured size and coupling.
pub fn run_size_sweep(config: &RunConfig) -> Result<Vec<Table>> {
    let setup = Setup::new(config)?;
    sweep_tables(config, &setup, &config.ensemble.n_mol)
}

/// One ensemble (the first configured size) at every coupling.
pub fn run_single(config: &RunConfig) -> Result<Vec<Table>> {
    let setup = Setup::new(config)?;
    sweep_tables(config, &setup, &config.ensemble.n_mol[..1])
}

pub fn run_scan(config: &RunConfig) -> Result<Vec<Table>> {
    match config.kind() {
        ScanKind::Qc => run_qc_scan(config),
        ScanKind::Angle => run_angle_scan(config),
        ScanKind::Bond => run_bond_scan(config),
        ScanKind::Size => run_size_sweep(config),
        ScanKind::Single => run_single(config),
    }
}

