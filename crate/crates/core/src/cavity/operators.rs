//! Cavity operators and the CBO-HF Fock extensions.
//!
//! With `d = <m|lambda.r|n>`, `q2 = <m|(lambda.r)^2|n>`, `t = Tr(P d)` and
//! `n = lambda.mu_nuc`, the closed-shell energy terms and their Fock matrices are
//!
//! | term      | energy               | Fock            |
//! |-----------|----------------------|-----------------|
//! | linear    | `w q (t - n)`        | `w q d`         |
//! | DSE 1e    | `Tr(P q2) / 2`       | `q2 / 2`        |
//! | DSE 2J    | `t^2 / 2`            | `t d`           |
//! | DSE 2K    | `-Tr(P d P d) / 4`   | `-d P d / 2`    |
//! | DSE e-n   | `-n t`               | `-n d`          |
//! | DSE nuc   | `n^2 / 2`            | none            |

use nalgebra::{DMatrix, Vector3};

use crate::integrals::IntegralSet;
use crate::model::{nuclear_dipole, Molecule};
use crate::scf::FockExtension;

#[derive(Debug, Clone)]
pub struct CavityOperators {
    pub lambda: Vector3<f64>,
    /// `<m| lambda . r |n>` about the integral origin.
    pub d: DMatrix<f64>,
    /// `<m| (lambda . r)^2 |n>`.
    pub q2: DMatrix<f64>,
    /// `lambda . mu_nuc` about the integral origin.
    pub lambda_mu_nuc: f64,
    pub omega: f64,
    pub q: f64,
}

impl CavityOperators {
    pub fn new(integrals: &IntegralSet, molecule: &Molecule, lambda: Vector3<f64>, omega: f64, q: f64) -> Self {
        CavityOperators {
            lambda,
            d: integrals.lambda_dipole(&lambda),
            q2: integrals.lambda_quadrupole(&lambda),
            lambda_mu_nuc: lambda.dot(&nuclear_dipole(molecule, &integrals.origin)),
            omega,
            q,
        }
    }

    pub fn with_q(&self, q: f64) -> Self {
        CavityOperators { q, ..self.clone() }
    }

    /// `Tr(P d)`.
    pub fn electronic_projection(&self, p: &DMatrix<f64>) -> f64 {
        p.dot(&self.d)
    }

    /// `lambda . <mu> = -Tr(P d) + lambda . mu_nuc`.
    pub fn projected_dipole(&self, p: &DMatrix<f64>) -> f64 {
        -self.electronic_projection(p) + self.lambda_mu_nuc
    }

    /// The five DSE extensions plus the linear coupling at the current `q`.
    pub fn extensions(&self) -> Vec<Box<dyn FockExtension>> {
        vec![
            Box::new(LinearCoupling::new(self)),
            Box::new(DseOneElectron::new(self)),
            Box::new(DseCoulomb::new(self)),
            Box::new(DseExchange::new(self)),
            Box::new(DseElectronNuclear::new(self)),
        ]
    }
}

/// `+w q d`, energy `w q Tr(P d) - w q (lambda . mu_nuc)`.
pub struct LinearCoupling {
    d: DMatrix<f64>,
    scale: f64,
    nuclear: f64,
}

impl LinearCoupling {
    pub fn new(ops: &CavityOperators) -> Self {
        LinearCoupling {
            d: ops.d.clone(),
            scale: ops.omega * ops.q,
            nuclear: ops.lambda_mu_nuc,
        }
    }
}

impl FockExtension for LinearCoupling {
    fn name(&self) -> &str {
        "lin"
    }
    fn fock(&self, _p: &DMatrix<f64>) -> DMatrix<f64> {
        &self.d * self.scale
    }
    fn energy(&self, p: &DMatrix<f64>) -> f64 {
        self.scale * (p.dot(&self.d) - self.nuclear)
    }
}

/// `q2 / 2`.
pub struct DseOneElectron {
    q2: DMatrix<f64>,
}

impl DseOneElectron {
    pub fn new(ops: &CavityOperators) -> Self {
        DseOneElectron { q2: ops.q2.clone() }
    }
}

impl FockExtension for DseOneElectron {
    fn name(&self) -> &str {
        "dse_1e"
    }
    fn fock(&self, _p: &DMatrix<f64>) -> DMatrix<f64> {
        &self.q2 * 0.5
    }
    fn energy(&self, p: &DMatrix<f64>) -> f64 {
        0.5 * p.dot(&self.q2)
    }
}

/// `Tr(P d) d`, energy `Tr(P d)^2 / 2`.
pub struct DseCoulomb {
    d: DMatrix<f64>,
}

impl DseCoulomb {
    pub fn new(ops: &CavityOperators) -> Self {
        DseCoulomb { d: ops.d.clone() }
    }
}

impl FockExtension for DseCoulomb {
    fn name(&self) -> &str {
        "dse_2j"
    }
    fn fock(&self, p: &DMatrix<f64>) -> DMatrix<f64> {
        &self.d * p.dot(&self.d)
    }
    fn energy(&self, p: &DMatrix<f64>) -> f64 {
        0.5 * p.dot(&self.d).powi(2)
    }
}

/// `-d P d / 2`, energy `-Tr(P d P d) / 4`.
pub struct DseExchange {
    d: DMatrix<f64>,
}

impl DseExchange {
    pub fn new(ops: &CavityOperators) -> Self {
        DseExchange { d: ops.d.clone() }
    }
}

impl FockExtension for DseExchange {
    fn name(&self) -> &str {
        "dse_2k"
    }
    fn fock(&self, p: &DMatrix<f64>) -> DMatrix<f64> {
        &self.d * p * &self.d * -0.5
    }
    fn energy(&self, p: &DMatrix<f64>) -> f64 {
        let dp = &self.d * p;
        -0.25 * dp.dot(&dp.transpose())
    }
}

/// `-(lambda . mu_nuc) d`, energy `-(lambda . mu_nuc) Tr(P d)`.
pub struct DseElectronNuclear {
    d: DMatrix<f64>,
    nuclear: f64,
}

impl DseElectronNuclear {
    pub fn new(ops: &CavityOperators) -> Self {
        DseElectronNuclear {
            d: ops.d.clone(),
            nuclear: ops.lambda_mu_nuc,
        }
    }
}

impl FockExtension for DseElectronNuclear {
    fn name(&self) -> &str {
        "dse_en"
    }
    fn fock(&self, _p: &DMatrix<f64>) -> DMatrix<f64> {
        &self.d * -self.nuclear
    }
    fn energy(&self, p: &DMatrix<f64>) -> f64 {
        -self.nuclear * p.dot(&self.d)
    }
}

/// Cavity-mediated field of the other molecules of an ensemble,
/// `s = sum_{n != m} lambda . <mu_n>` held fixed:
/// energy `s (lambda . <mu_m>)`, Fock `-s d`.
pub struct MeanField {
    d: DMatrix<f64>,
    nuclear: f64,
    partners: f64,
}

impl MeanField {
    pub fn new(ops: &CavityOperators, partners: f64) -> Self {
        MeanField {
            d: ops.d.clone(),
            nuclear: ops.lambda_mu_nuc,
            partners,
        }
    }
}

impl FockExtension for MeanField {
    fn name(&self) -> &str {
        "mean_field"
    }
    fn fock(&self, _p: &DMatrix<f64>) -> DMatrix<f64> {
        &self.d * -self.partners
    }
    fn energy(&self, p: &DMatrix<f64>) -> f64 {
        self.partners * (self.nuclear - p.dot(&self.d))
    }
}

/// Density-independent energy shift (nuclear DSE, displacement energy).
pub struct ConstantEnergy {
    name: &'static str,
    value: f64,
    n: usize,
}

impl ConstantEnergy {
    pub fn new(name: &'static str, value: f64, n_basis: usize) -> Self {
        ConstantEnergy { name, value, n: n_basis }
    }
}

impl FockExtension for ConstantEnergy {
    fn name(&self) -> &str {
        self.name
    }
    fn fock(&self, _p: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::zeros(self.n, self.n)
    }
    fn energy(&self, _p: &DMatrix<f64>) -> f64 {
        self.value
    }
}
