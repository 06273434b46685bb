use nalgebra::{DMatrix, Vector3};
use serde::{Deserialize, Serialize};

use super::operators::CavityOperators;
use crate::error::{Error, Result};
use crate::integrals::IntegralSet;
use crate::model::nuclear_dipole;
use crate::model::Molecule;
use crate::scf::ScfResult;

/// CBO-HF energy decomposition. All values in hartree, `q` in a.u.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub e_el: f64,
    pub e_lin: f64,
    pub e_dis: f64,
    pub e_dse_1e: f64,
    pub e_dse_2j: f64,
    pub e_dse_2k: f64,
    pub e_dse_en: f64,
    pub e_dse_nuc: f64,
    pub e_dse_total: f64,
    pub e_cbo: f64,
    pub q: f64,
    /// Expectation of the (ensemble) dipole operator.
    pub dipole: Vector3<f64>,
}

impl EnergyReport {
    /// Report whose totals are summed from the given parts.
    #[allow(clippy::too_many_arguments)]
    pub fn assemble(e_el: f64, e_lin: f64, e_dis: f64, dse: [f64; 5], q: f64, dipole: Vector3<f64>) -> Self {
        let e_dse_total = dse.iter().sum::<f64>();
        EnergyReport {
            e_el,
            e_lin,
            e_dis,
            e_dse_1e: dse[0],
            e_dse_2j: dse[1],
            e_dse_2k: dse[2],
            e_dse_en: dse[3],
            e_dse_nuc: dse[4],
            e_dse_total,
            e_cbo: e_el + e_lin + e_dse_total + e_dis,
            q,
            dipole,
        }
    }

    /// Largest violation of the two sum rules
    /// `E_CBO = E_el + E_lin + E_dse + E_dis` and `E_dse = sum of parts`,
    /// relative to `max(1, |E_CBO|)`.
    pub fn identity_violation(&self) -> f64 {
        let scale = self.e_cbo.abs().max(1.0);
        let sum = (self.e_cbo - (self.e_el + self.e_lin + self.e_dse_total + self.e_dis)).abs();
        let parts = (self.e_dse_total - (self.e_dse_1e + self.e_dse_2j + self.e_dse_2k + self.e_dse_en + self.e_dse_nuc)).abs();
        sum.max(parts) / scale
    }

    pub fn check_identities(&self, tol: f64) -> Result<()> {
        let v = self.identity_violation();
        if v > tol || !v.is_finite() {
            return Err(Error::InvalidInput(format!("energy report violates its sum rules by {v:e}")));
        }
        if self.e_dis < 0.0 {
            return Err(Error::InvalidInput("negative displacement energy".into()));
        }
        Ok(())
    }

    /// Cavity-induced energy change `E_CBO - reference`.
    pub fn delta(&self, reference: f64) -> f64 {
        self.e_cbo - reference
    }
}

/// `E_dis = w^2 q^2 / 2`.
pub fn displacement_energy(omega: f64, q: f64) -> f64 {
    0.5 * omega * omega * q * q
}

/// `E_dse_nuc = (lambda . mu_nuc)^2 / 2` with `mu_nuc` about the molecule's gauge origin.
pub fn dse_nuclear_scalar(molecule: &Molecule, lambda: &Vector3<f64>) -> f64 {
    0.5 * lambda.dot(&molecule.nuclear_dipole()).powi(2)
}

/// `lambda (w q - lambda . <mu>) / (4 pi)`; vanishes at the optimal `q`.
pub fn transverse_field_residual(q: f64, dipole: &Vector3<f64>, lambda: &Vector3<f64>, omega: f64) -> Vector3<f64> {
    lambda * ((omega * q - lambda.dot(dipole)) / (4.0 * std::f64::consts::PI))
}

/// `<mu_a> = -Tr(P D_a) + mu_nuc,a` about the integral origin.
pub fn dipole_expectation(p: &DMatrix<f64>, integrals: &IntegralSet, molecule: &Molecule) -> Vector3<f64> {
    let nuc = nuclear_dipole(molecule, &integrals.origin);
    Vector3::new(
        -p.dot(&integrals.dipole[0]) + nuc.x,
        -p.dot(&integrals.dipole[1]) + nuc.y,
        -p.dot(&integrals.dipole[2]) + nuc.z,
    )
}

/// Density-derived pieces of one molecule's cavity energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoleculeTerms {
    pub e_el: f64,
    /// `Tr(P d)`.
    pub t: f64,
    /// `lambda . mu_nuc`.
    pub n: f64,
    pub dse_1e: f64,
    pub dse_2k: f64,
    pub dipole: Vector3<f64>,
}

impl MoleculeTerms {
    pub fn from_density(p: &DMatrix<f64>, e_el: f64, ops: &CavityOperators, integrals: &IntegralSet, molecule: &Molecule) -> Self {
        let dp = &ops.d * p;
        MoleculeTerms {
            e_el,
            t: p.dot(&ops.d),
            n: ops.lambda_mu_nuc,
            dse_1e: 0.5 * p.dot(&ops.q2),
            dse_2k: -0.25 * dp.dot(&dp.transpose()),
            dipole: dipole_expectation(p, integrals, molecule),
        }
    }

    /// `lambda . <mu>`.
    pub fn projected_dipole(&self) -> f64 {
        self.n - self.t
    }

    /// Intramolecular DSE: `1e + 2K + t^2/2 - n t + n^2/2`.
    pub fn local_dse(&self) -> f64 {
        self.dse_1e + self.dse_2k + 0.5 * self.t * self.t - self.n * self.t + 0.5 * self.n * self.n
    }
}

/// Ensemble report from per-molecule terms (with multiplicities) at `q`.
pub fn combine_terms(terms: &[(&MoleculeTerms, usize)], omega: f64, q: f64) -> EnergyReport {
    let mut e_el = 0.0;
    let (mut t, mut n, mut one, mut k) = (0.0, 0.0, 0.0, 0.0);
    let mut dipole = Vector3::zeros();
    for (m, mult) in terms {
        let w = *mult as f64;
        e_el += w * m.e_el;
        t += w * m.t;
        n += w * m.n;
        one += w * m.dse_1e;
        k += w * m.dse_2k;
        dipole += m.dipole * w;
    }
    let e_lin = omega * q * (t - n);
    EnergyReport::assemble(
        e_el,
        e_lin,
        displacement_energy(omega, q),
        [one, 0.5 * t * t, k, -n * t, 0.5 * n * n],
        q,
        dipole,
    )
}

/// Every component recomputed from the final density of a converged SCF.
pub fn energy_report(scf: &ScfResult, ops: &CavityOperators, integrals: &IntegralSet, molecule: &Molecule) -> Result<EnergyReport> {
    if !scf.converged {
        return Err(Error::ScfNotConverged(scf.iterations));
    }
    let terms = MoleculeTerms::from_density(&scf.density, scf.electronic_energy, ops, integrals, molecule);
    Ok(combine_terms(&[(&terms, 1)], ops.omega, ops.q))
}
