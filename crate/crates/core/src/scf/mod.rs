//! Closed-shell restricted Hartree-Fock with pluggable Fock extensions.

mod diis;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use diis::Diis;

use crate::error::{Error, Result};
use crate::integrals::{EriTensor, IntegralSet, OVERLAP_EIGEN_CUTOFF};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScfSettings {
    /// Energy change tolerance (hartree).
    pub energy_tol: f64,
    /// RMS density change tolerance.
    pub density_tol: f64,
    /// Largest commutator element accepted at convergence.
    pub residual_tol: f64,
    pub max_iterations: usize,
    pub diis_size: usize,
    /// Virtual-orbital level shift (hartree).
    pub level_shift: Option<f64>,
    /// Fraction of the previous density mixed in during the first iterations.
    pub damping: f64,
    pub damping_iterations: usize,
}

impl Default for ScfSettings {
    fn default() -> Self {
        ScfSettings {
            energy_tol: 1e-9,
            density_tol: 1e-7,
            residual_tol: 1e-6,
            max_iterations: 200,
            diis_size: 8,
            level_shift: None,
            damping: 0.3,
            damping_iterations: 3,
        }
    }
}

impl ScfSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.energy_tol > 0.0 && self.density_tol > 0.0 && self.residual_tol > 0.0) {
            return Err(Error::Config("SCF tolerances must be positive".into()));
        }
        if self.max_iterations < 1 {
            return Err(Error::Config("SCF needs at least one iteration".into()));
        }
        if !(0.0..1.0).contains(&self.damping) {
            return Err(Error::Config(format!("damping must lie in [0, 1), got {}", self.damping)));
        }
        Ok(())
    }

    /// Copy with tolerances tightened to at least the given values.
    pub fn tightened(&self, energy_tol: f64, density_tol: f64) -> ScfSettings {
        ScfSettings {
            energy_tol: self.energy_tol.min(energy_tol),
            density_tol: self.density_tol.min(density_tol),
            ..self.clone()
        }
    }
}

/// Additive contribution to the Fock matrix together with the energy
/// functional it derives from, `F_ext = dE_ext/dP`.
pub trait FockExtension: Send + Sync {
    fn name(&self) -> &str;
    fn fock(&self, density: &DMatrix<f64>) -> DMatrix<f64>;
    fn energy(&self, density: &DMatrix<f64>) -> f64;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub energy: f64,
    pub delta_energy: f64,
    pub rms_density_change: f64,
    pub max_residual: f64,
}

#[derive(Debug, Clone)]
pub struct ScfResult {
    pub converged: bool,
    /// Total energy: electronic part, nuclear repulsion and all extensions.
    pub energy: f64,
    /// Energy of the last iteration, before the final rediagonalization.
    pub iteration_energy: f64,
    /// Plain Hartree-Fock energy including nuclear repulsion.
    pub electronic_energy: f64,
    pub extension_energies: Vec<(String, f64)>,
    pub coefficients: DMatrix<f64>,
    pub orbital_energies: Vec<f64>,
    pub density: DMatrix<f64>,
    pub fock: DMatrix<f64>,
    pub n_occupied: usize,
    pub iterations: usize,
    pub max_residual: f64,
    pub trace: Vec<IterationRecord>,
}

impl ScfResult {
    pub fn homo(&self) -> Option<f64> {
        self.n_occupied.checked_sub(1).map(|i| self.orbital_energies[i])
    }

    pub fn lumo(&self) -> Option<f64> {
        self.orbital_energies.get(self.n_occupied).copied()
    }
}

/// Symmetric orthogonalizer `S^{-1/2}`.
pub fn orthogonalizer(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = s.clone().symmetric_eigen();
    let min = eig.eigenvalues.min();
    if min < OVERLAP_EIGEN_CUTOFF {
        return Err(Error::Conditioning(min));
    }
    let inv_sqrt = eig.eigenvalues.map(|v| 1.0 / v.sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&inv_sqrt) * eig.eigenvectors.transpose())
}

/// Eigenpairs of a symmetric matrix sorted by ascending eigenvalue.
pub fn sorted_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Orbitals of `fock` in the AO basis and the closed-shell density from the
/// `n_occ` lowest ones.
fn diagonalize(fock: &DMatrix<f64>, x: &DMatrix<f64>, n_occ: usize) -> (Vec<f64>, DMatrix<f64>, DMatrix<f64>) {
    let fp = x.transpose() * fock * x;
    let (eps, cp) = sorted_eigen(&fp);
    let c = x * cp;
    let occ = c.columns(0, n_occ);
    let p = occ * occ.transpose() * 2.0;
    (eps, c, p)
}

fn check_electrons(n_electrons: usize, n_basis: usize) -> Result<usize> {
    if n_electrons % 2 != 0 {
        return Err(Error::InvalidInput(format!("closed-shell SCF needs an even electron count, got {n_electrons}")));
    }
    let n_occ = n_electrons / 2;
    if n_occ > n_basis {
        return Err(Error::InvalidInput(format!("{n_occ} occupied orbitals exceed {n_basis} basis functions")));
    }
    Ok(n_occ)
}

/// Core-Hamiltonian guess density.
pub fn core_guess(s: &DMatrix<f64>, hcore: &DMatrix<f64>, n_electrons: usize) -> Result<DMatrix<f64>> {
    let n_occ = check_electrons(n_electrons, s.nrows())?;
    let x = orthogonalizer(s)?;
    Ok(diagonalize(hcore, &x, n_occ).2)
}

fn check_dims(p: &DMatrix<f64>, hcore: &DMatrix<f64>, eri: &EriTensor) -> Result<()> {
    let n = hcore.nrows();
    if hcore.ncols() != n || p.nrows() != n || p.ncols() != n || eri.n_basis() != n {
        return Err(Error::Dimension(format!(
            "density {}x{}, core Hamiltonian {}x{}, ERI basis {}",
            p.nrows(),
            p.ncols(),
            hcore.nrows(),
            hcore.ncols(),
            eri.n_basis()
        )));
    }
    Ok(())
}

/// `F = H + J(P) - K(P)/2 + sum of extension Fock terms`.
pub fn build_fock(p: &DMatrix<f64>, hcore: &DMatrix<f64>, eri: &EriTensor, extensions: &[&dyn FockExtension]) -> Result<DMatrix<f64>> {
    check_dims(p, hcore, eri)?;
    let (j, k) = eri.coulomb_exchange(p);
    let mut f = hcore + j - k * 0.5;
    for ext in extensions {
        let fe = ext.fock(p);
        if fe.shape() != f.shape() {
            return Err(Error::Dimension(format!("extension '{}' returned a {:?} matrix", ext.name(), fe.shape())));
        }
        f += fe;
    }
    Ok(f)
}

struct Evaluation {
    fock: DMatrix<f64>,
    total: f64,
    electronic: f64,
    parts: Vec<(String, f64)>,
}

fn evaluate(p: &DMatrix<f64>, hcore: &DMatrix<f64>, eri: &EriTensor, e_nuc: f64, extensions: &[&dyn FockExtension]) -> Evaluation {
    let (j, k) = eri.coulomb_exchange(p);
    let f_hf = hcore + j - k * 0.5;
    let electronic = 0.5 * p.dot(&(hcore + &f_hf)) + e_nuc;
    let mut fock = f_hf;
    let mut parts = Vec::with_capacity(extensions.len());
    let mut total = electronic;
    for ext in extensions {
        fock += ext.fock(p);
        let e = ext.energy(p);
        total += e;
        parts.push((ext.name().to_string(), e));
    }
    Evaluation {
        fock,
        total,
        electronic,
        parts,
    }
}

/// Total energy functional at density `p`, evaluated from scratch.
pub fn energy_functional(p: &DMatrix<f64>, integrals: &IntegralSet, extensions: &[&dyn FockExtension]) -> Result<f64> {
    let hcore = integrals.hcore();
    check_dims(p, &hcore, &integrals.eri)?;
    Ok(evaluate(p, &hcore, &integrals.eri, integrals.nuclear_repulsion, extensions).total)
}

fn rms(m: &DMatrix<f64>) -> f64 {
    (m.norm_squared() / m.len() as f64).sqrt()
}

pub fn scf_solve(
    integrals: &IntegralSet,
    hcore: &DMatrix<f64>,
    n_electrons: usize,
    settings: &ScfSettings,
    extensions: &[&dyn FockExtension],
) -> Result<ScfResult> {
    scf_solve_from(integrals, hcore, n_electrons, settings, extensions, None)
}

/// SCF starting from `guess` (core guess when `None`). Non-convergence is
/// reported through `ScfResult::converged`, not as an error.
pub fn scf_solve_from(
    integrals: &IntegralSet,
    hcore: &DMatrix<f64>,
    n_electrons: usize,
    settings: &ScfSettings,
    extensions: &[&dyn FockExtension],
    guess: Option<&DMatrix<f64>>,
) -> Result<ScfResult> {
    settings.validate()?;
    let s = &integrals.s;
    let eri = &integrals.eri;
    let e_nuc = integrals.nuclear_repulsion;
    let n_occ = check_electrons(n_electrons, s.nrows())?;
    let x = orthogonalizer(s)?;
    let mut p = match guess {
        Some(g) => g.clone(),
        None => diagonalize(hcore, &x, n_occ).2,
    };
    check_dims(&p, hcore, eri)?;

    let mut diis = Diis::new(settings.diis_size);
    let mut trace = Vec::new();
    let mut prev_energy: Option<f64> = None;
    let mut last_rms = f64::INFINITY;
    let mut converged = false;
    let mut iteration_energy = f64::NAN;
    let mut iterations = 0;

    for it in 1..=settings.max_iterations {
        iterations = it;
        let ev = evaluate(&p, hcore, eri, e_nuc, extensions);
        let fps = &ev.fock * &p * s;
        let residual = &fps - fps.transpose();
        let max_residual = residual.amax();
        let delta = prev_energy.map(|e| ev.total - e).unwrap_or(f64::INFINITY);
        trace.push(IterationRecord {
            energy: ev.total,
            delta_energy: delta,
            rms_density_change: last_rms,
            max_residual,
        });
        log::trace!("scf iteration {it}: E = {:.12} dE = {delta:.3e} rms(dP) = {last_rms:.3e} |r| = {max_residual:.3e}", ev.total);
        iteration_energy = ev.total;
        if delta.abs() < settings.energy_tol && last_rms < settings.density_tol && max_residual < settings.residual_tol {
            converged = true;
            break;
        }
        prev_energy = Some(ev.total);

        diis.push(ev.fock.clone(), x.transpose() * &residual * &x);
        let mut f = diis.extrapolate().unwrap_or(ev.fock);
        if let Some(shift) = settings.level_shift {
            f += (s - s * &p * s * 0.5) * shift;
        }
        let (_, _, mut p_new) = diagonalize(&f, &x, n_occ);
        if it <= settings.damping_iterations && settings.damping > 0.0 {
            p_new = p_new * (1.0 - settings.damping) + &p * settings.damping;
        }
        last_rms = rms(&(&p_new - &p));
        p = p_new;
    }

    // Final orbitals from the unmodified Fock matrix of the last density.
    let ev = evaluate(&p, hcore, eri, e_nuc, extensions);
    let (eps, c, p_final) = diagonalize(&ev.fock, &x, n_occ);
    let fin = evaluate(&p_final, hcore, eri, e_nuc, extensions);
    let fps = &fin.fock * &p_final * s;
    let max_residual = (&fps - fps.transpose()).amax();
    if !converged {
        log::warn!("SCF not converged after {iterations} iterations");
    }
    Ok(ScfResult {
        converged,
        energy: fin.total,
        iteration_energy,
        electronic_energy: fin.electronic,
        extension_energies: fin.parts,
        coefficients: c,
        orbital_energies: eps,
        density: p_final,
        fock: fin.fock,
        n_occupied: n_occ,
        iterations,
        max_residual,
        trace,
    })
}

/// Plain RHF on an integral set.
pub fn rhf(integrals: &IntegralSet, n_electrons: usize, settings: &ScfSettings) -> Result<ScfResult> {
    scf_solve(integrals, &integrals.hcore(), n_electrons, settings, &[])
}
