//! Dilute molecular ensembles in a single cavity mode.
//!
//! Each molecule keeps its own Slater determinant; the molecules only see each
//! other through the shared photon displacement and the cavity-mediated
//! dipole-dipole term.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cavity::{solve_coupled, CavitySettings, CoupledSolution, EnergyReport, MoleculeTerms, Subsystem};
use crate::error::{Error, Result};
use crate::integrals::{BasisLibrary, MolecularSystem};
use crate::model::{build_ensemble, CavityConfig, EnsembleGeometry, Molecule, OrientationPattern};
use crate::scf::ScfResult;

pub use crate::model::rescale_lambda;

/// Coordinate rounding used to recognize replicas, in bohr.
pub const REPLICA_TOLERANCE: f64 = 1e-8;

/// Molecules that are rigid translations of one another.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplicaGroup {
    pub representative: usize,
    pub members: Vec<usize>,
}

type ReplicaKey = (i32, Vec<(u32, [i64; 3])>);

fn replica_key(m: &Molecule) -> ReplicaKey {
    let origin = m.gauge_origin();
    let atoms = m
        .atoms()
        .iter()
        .map(|a| {
            let r = (a.position - origin) / REPLICA_TOLERANCE;
            (a.charge, [r.x.round() as i64, r.y.round() as i64, r.z.round() as i64])
        })
        .collect();
    (m.charge(), atoms)
}

/// Groups molecules whose nuclei coincide relative to their gauge origins.
/// With `exact` every molecule forms its own group.
pub fn group_replicas(molecules: &[Molecule], exact: bool) -> Vec<ReplicaGroup> {
    if exact {
        return (0..molecules.len())
            .map(|i| ReplicaGroup {
                representative: i,
                members: vec![i],
            })
            .collect();
    }
    let mut by_key: BTreeMap<ReplicaKey, usize> = BTreeMap::new();
    let mut groups: Vec<ReplicaGroup> = Vec::new();
    for (i, m) in molecules.iter().enumerate() {
        let g = *by_key.entry(replica_key(m)).or_insert_with(|| {
            groups.push(ReplicaGroup {
                representative: i,
                members: Vec::new(),
            });
            groups.len() - 1
        });
        groups[g].members.push(i);
    }
    groups
}

/// Converged ensemble: one determinant per replica group, shared `q`.
#[derive(Debug, Clone)]
pub struct EnsembleState {
    pub solution: CoupledSolution,
    /// Group index of every molecule.
    pub group_of: Vec<usize>,
}

impl EnsembleState {
    pub fn n_molecules(&self) -> usize {
        self.group_of.len()
    }

    pub fn q(&self) -> f64 {
        self.solution.q
    }

    pub fn scf(&self, m: usize) -> &ScfResult {
        &self.solution.subsystems[self.group_of[m]].scf
    }

    pub fn terms(&self, m: usize) -> &MoleculeTerms {
        &self.solution.subsystems[self.group_of[m]].terms
    }

    /// `<mu^(m)>` about molecule `m`'s own gauge origin.
    pub fn dipole(&self, m: usize) -> Vector3<f64> {
        self.terms(m).dipole
    }

    /// `lambda . <mu^(m)>`.
    pub fn projected_dipole(&self, m: usize) -> f64 {
        self.terms(m).projected_dipole()
    }

    pub fn total_projected_dipole(&self) -> f64 {
        self.solution.total_projected_dipole()
    }

    pub fn field_free_energy(&self, m: usize) -> f64 {
        self.solution.subsystems[self.group_of[m]].field_free_energy
    }

    /// Sum of the field-free energies of all molecules.
    pub fn ensemble_field_free_energy(&self) -> f64 {
        (0..self.n_molecules()).map(|m| self.field_free_energy(m)).sum()
    }

    /// Ensemble density in the direct-sum basis of all molecules.
    pub fn block_density(&self) -> DMatrix<f64> {
        let dims: Vec<usize> = (0..self.n_molecules()).map(|m| self.scf(m).density.nrows()).collect();
        let n: usize = dims.iter().sum();
        let mut p = DMatrix::zeros(n, n);
        let mut off = 0;
        for (m, &k) in dims.iter().enumerate() {
            p.view_mut((off, off), (k, k)).copy_from(&self.scf(m).density);
            off += k;
        }
        p
    }
}

/// Local and inter-molecular DSE of one molecule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DsePartition {
    pub local: f64,
    pub inter: f64,
}

/// Splits the ensemble DSE over molecules.
///
/// `local` holds the molecule's own 1e, 2K, 2J, e-n and nuclear pieces;
/// `inter = p_m (P - p_m) / 2` with `p_m = lambda . <mu^(m)>` and `P` the sum,
/// so that the partition adds up to the ensemble DSE.
pub fn partition_dse(state: &EnsembleState) -> Vec<DsePartition> {
    let total = state.total_projected_dipole();
    (0..state.n_molecules())
        .map(|m| {
            let t = state.terms(m);
            let p = t.projected_dipole();
            DsePartition {
                local: t.local_dse(),
                inter: 0.5 * p * (total - p),
            }
        })
        .collect()
}

/// Energy bookkeeping for one molecule of the ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerMoleculeReport {
    pub index: usize,
    pub e_el: f64,
    /// `-w q (lambda . <mu^(m)>)`.
    pub e_lin: f64,
    pub e_dse_1e: f64,
    pub e_dse_2j: f64,
    pub e_dse_2k: f64,
    pub e_dse_en: f64,
    pub e_dse_nuc: f64,
    pub e_dse_local: f64,
    pub e_dse_inter: f64,
    /// Displacement energy of the whole ensemble.
    pub e_dis: f64,
    pub e_cbo: f64,
    pub e_cbo_without_dis: f64,
    pub field_free_energy: f64,
    pub delta_e: f64,
    pub projected_dipole: f64,
    pub dipole: Vector3<f64>,
}

pub fn per_molecule_reports(state: &EnsembleState, report: &EnergyReport) -> Vec<PerMoleculeReport> {
    let omega = state.solution.omega;
    let q = state.q();
    partition_dse(state)
        .into_iter()
        .enumerate()
        .map(|(m, part)| {
            let t = state.terms(m);
            let p = t.projected_dipole();
            let e_lin = -omega * q * p;
            let without = t.e_el + e_lin + part.local + part.inter;
            let e_cbo = without + report.e_dis;
            let e0 = state.field_free_energy(m);
            PerMoleculeReport {
                index: m,
                e_el: t.e_el,
                e_lin,
                e_dse_1e: t.dse_1e,
                e_dse_2j: 0.5 * t.t * t.t,
                e_dse_2k: t.dse_2k,
                e_dse_en: -t.n * t.t,
                e_dse_nuc: 0.5 * t.n * t.n,
                e_dse_local: part.local,
                e_dse_inter: part.inter,
                e_dis: report.e_dis,
                e_cbo,
                e_cbo_without_dis: without,
                field_free_energy: e0,
                delta_e: e_cbo - e0,
                projected_dipole: p,
                dipole: t.dipole,
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct EnsembleSolution {
    pub state: EnsembleState,
    pub report: EnergyReport,
    pub per_molecule: Vec<PerMoleculeReport>,
}

impl EnsembleSolution {
    /// `E_CBO - sum of field-free energies`.
    pub fn delta_e(&self) -> f64 {
        self.report.e_cbo - self.state.ensemble_field_free_energy()
    }
}

/// Builds one system per replica group.
pub fn group_systems(geometry: &EnsembleGeometry, basis: &BasisLibrary, exact: bool) -> Result<(Vec<ReplicaGroup>, Vec<MolecularSystem>)> {
    if geometry.is_empty() {
        return Err(Error::InvalidInput("ensemble has no molecules".into()));
    }
    let groups = group_replicas(&geometry.molecules, exact);
    let systems = groups
        .par_iter()
        .map(|g| MolecularSystem::new(geometry.molecules[g.representative].clone(), basis))
        .collect::<Result<Vec<_>>>()?;
    Ok((groups, systems))
}

/// Solves the ensemble with coupling vector `lambda` applied to every molecule.
pub fn dilute_solve_with(
    geometry: &EnsembleGeometry,
    basis: &BasisLibrary,
    lambda: Vector3<f64>,
    omega: f64,
    settings: &CavitySettings,
) -> Result<EnsembleSolution> {
    let (groups, systems) = group_systems(geometry, basis, settings.exact)?;
    log::debug!("{} molecules in {} replica groups", geometry.len(), groups.len());
    let subs: Vec<Subsystem> = groups
        .iter()
        .zip(&systems)
        .map(|(g, system)| Subsystem {
            system,
            multiplicity: g.members.len(),
            members: g.members.clone(),
        })
        .collect();
    let solution = solve_coupled(&subs, lambda, omega, settings)?;
    let mut group_of = vec![0; geometry.len()];
    for (gi, g) in groups.iter().enumerate() {
        for &m in &g.members {
            group_of[m] = gi;
        }
    }
    let report = solution.report.clone();
    let state = EnsembleState { solution, group_of };
    let per_molecule = per_molecule_reports(&state, &report);
    Ok(EnsembleSolution {
        state,
        report,
        per_molecule,
    })
}

/// Solves the ensemble under `cavity`, rescaling the coupling by the ensemble size if requested.
pub fn dilute_solve(geometry: &EnsembleGeometry, basis: &BasisLibrary, cavity: &CavityConfig, settings: &CavitySettings) -> Result<EnsembleSolution> {
    cavity.validate()?;
    let lambda = cavity.coupling_vector(geometry.len())?;
    dilute_solve_with(geometry, basis, lambda, cavity.omega, settings)
}

/// Ensemble layout shared by all points of a size sweep.
#[derive(Debug, Clone)]
pub struct EnsembleTemplate {
    pub molecule: Molecule,
    /// Dipole direction in the template frame.
    pub dipole_axis: Vector3<f64>,
    pub pattern: OrientationPattern,
    /// Replica spacing in bohr.
    pub separation: f64,
}

impl EnsembleTemplate {
    pub fn build(&self, n_mol: usize, polarization: &Vector3<f64>) -> Result<EnsembleGeometry> {
        build_ensemble(&self.molecule, &self.dipole_axis, n_mol, self.pattern, self.separation, polarization)
    }
}

/// One `(N, coupling)` point of a size sweep.
#[derive(Debug)]
pub struct SweepPoint {
    pub n_mol: usize,
    pub cavity_index: usize,
    pub lambda0: f64,
    /// Coupling magnitude actually applied to each molecule.
    pub lambda: f64,
    pub outcome: Result<EnsembleSolution>,
}

/// Solves the ensemble for every `N` in `n_range` and every cavity, with
/// `rescale` overriding each cavity's own rescaling flag.
/// Rows are ordered by `N`, then by cavity.
pub fn size_sweep(
    template: &EnsembleTemplate,
    n_range: &[usize],
    cavities: &[CavityConfig],
    rescale: bool,
    basis: &BasisLibrary,
    settings: &CavitySettings,
) -> Result<Vec<SweepPoint>> {
    if n_range.is_empty() || cavities.is_empty() {
        return Err(Error::InvalidInput("size sweep needs at least one ensemble size and one coupling".into()));
    }
    let mut jobs = Vec::new();
    for &n in n_range {
        for (ci, c) in cavities.iter().enumerate() {
            let cavity = CavityConfig {
                rescale_by_sqrt_n: rescale,
                ..c.clone()
            };
            cavity.validate()?;
            jobs.push((n, ci, cavity));
        }
    }
    Ok(jobs
        .into_par_iter()
        .map(|(n, ci, cavity)| {
            let lambda = cavity.coupling_magnitude(n).unwrap_or(f64::NAN);
            let outcome = template
                .build(n, &cavity.polarization)
                .and_then(|geom| dilute_solve(&geom, basis, &cavity, settings));
            if let Err(e) = &outcome {
                log::warn!("size sweep point N = {n}, coupling #{ci}: {e}");
            }
            SweepPoint {
                n_mol: n,
                cavity_index: ci,
                lambda0: cavity.lambda0,
                lambda,
                outcome,
            }
        })
        .collect())
}
