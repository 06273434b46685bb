//! Damped fixed-point iteration for the photon displacement and the
//! cavity-mediated coupling between subsystems.

use nalgebra::{DMatrix, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::operators::{CavityOperators, ConstantEnergy, MeanField};
use super::report::{combine_terms, displacement_energy, EnergyReport, MoleculeTerms};
use crate::error::{Error, Result};
use crate::integrals::MolecularSystem;
use crate::scf::{scf_solve_from, FockExtension, ScfResult, ScfSettings};

/// How the other molecules' dipoles enter a molecule's SCF.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterMolecularCoupling {
    /// Mean-field term in the Fock matrix.
    SelfConsistent,
    /// Only in the reported energy; the orbitals never see the partners.
    EnergyOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpdateOrder {
    /// All subsystems see the previous iteration's partners.
    Jacobi,
    /// Each subsystem sees partners already updated in this iteration.
    GaussSeidel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CavitySettings {
    pub scf: ScfSettings,
    /// Inner SCF energy tolerance, tighter than the plain default.
    pub inner_energy_tol: f64,
    pub inner_density_tol: f64,
    /// Weight of the previous dipole in each damped update.
    pub dipole_damping: f64,
    pub max_macro_iterations: usize,
    pub dipole_tol: f64,
    pub q_tol: f64,
    /// Tolerance on `|w q - lambda . <mu>|`.
    pub field_tol: f64,
    pub coupling: InterMolecularCoupling,
    pub update_order: UpdateOrder,
    /// Solve every molecule separately instead of once per replica group.
    pub exact: bool,
    pub golden_section_fallback: bool,
}

impl Default for CavitySettings {
    fn default() -> Self {
        CavitySettings {
            scf: ScfSettings::default(),
            inner_energy_tol: 1e-11,
            inner_density_tol: 1e-9,
            dipole_damping: 0.5,
            max_macro_iterations: 100,
            dipole_tol: 1e-8,
            q_tol: 1e-8,
            field_tol: 1e-8,
            coupling: InterMolecularCoupling::SelfConsistent,
            update_order: UpdateOrder::Jacobi,
            exact: false,
            golden_section_fallback: true,
        }
    }
}

impl CavitySettings {
    pub fn inner_scf(&self) -> ScfSettings {
        self.scf.tightened(self.inner_energy_tol, self.inner_density_tol)
    }

    pub fn validate(&self) -> Result<()> {
        self.scf.validate()?;
        if !(0.0..1.0).contains(&self.dipole_damping) {
            return Err(Error::Config(format!("dipole damping must lie in [0, 1), got {}", self.dipole_damping)));
        }
        if self.max_macro_iterations < 1 {
            return Err(Error::Config("need at least one macro-iteration".into()));
        }
        Ok(())
    }
}

/// A set of identical molecules solved once.
#[derive(Debug, Clone)]
pub struct Subsystem<'a> {
    pub system: &'a MolecularSystem,
    pub multiplicity: usize,
    /// Ensemble indices of the molecules represented.
    pub members: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct SubsystemState {
    pub scf: ScfResult,
    pub terms: MoleculeTerms,
    pub multiplicity: usize,
    pub members: Vec<usize>,
    /// Field-free RHF energy of this molecule.
    pub field_free_energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroRecord {
    pub q: f64,
    pub max_dipole_change: f64,
    pub q_change: f64,
    pub field_residual: f64,
}

#[derive(Debug, Clone)]
pub struct CoupledSolution {
    pub q: f64,
    pub lambda: Vector3<f64>,
    pub omega: f64,
    pub subsystems: Vec<SubsystemState>,
    pub report: EnergyReport,
    pub macro_iterations: usize,
    pub trace: Vec<MacroRecord>,
    pub used_fallback: bool,
}

impl CoupledSolution {
    pub fn n_molecules(&self) -> usize {
        self.subsystems.iter().map(|s| s.multiplicity).sum()
    }

    /// `sum_m lambda . <mu_m>`.
    pub fn total_projected_dipole(&self) -> f64 {
        self.subsystems.iter().map(|s| s.multiplicity as f64 * s.terms.projected_dipole()).sum()
    }
}

struct Prepared<'a> {
    sub: &'a Subsystem<'a>,
    ops: CavityOperators,
    hcore: DMatrix<f64>,
}

fn solve_one(prep: &Prepared, q: f64, partners: Option<f64>, settings: &ScfSettings, guess: &DMatrix<f64>) -> Result<ScfResult> {
    let ops = prep.ops.with_q(q);
    let mut exts = ops.extensions();
    if let Some(s) = partners {
        exts.push(Box::new(MeanField::new(&ops, s)));
    }
    let refs: Vec<&dyn FockExtension> = exts.iter().map(|b| b.as_ref()).collect();
    let ints = &prep.sub.system.integrals;
    let scf = scf_solve_from(ints, &prep.hcore, prep.sub.system.n_electrons(), settings, &refs, Some(guess))?;
    if !scf.converged {
        return Err(Error::ScfNotConverged(scf.iterations));
    }
    Ok(scf)
}

fn terms_of(prep: &Prepared, scf: &ScfResult) -> MoleculeTerms {
    let sys = prep.sub.system;
    MoleculeTerms::from_density(&scf.density, scf.electronic_energy, &prep.ops, &sys.integrals, &sys.molecule)
}

/// Full CBO-HF energy of a single subsystem at fixed `q`, orbitals relaxed.
pub fn energy_at_q(
    system: &MolecularSystem,
    lambda: Vector3<f64>,
    omega: f64,
    q: f64,
    settings: &ScfSettings,
    guess: Option<&DMatrix<f64>>,
) -> Result<(ScfResult, EnergyReport)> {
    let ints = &system.integrals;
    let ops = CavityOperators::new(ints, &system.molecule, lambda, omega, q);
    let mut exts = ops.extensions();
    exts.push(Box::new(ConstantEnergy::new("dse_nuc", 0.5 * ops.lambda_mu_nuc.powi(2), ints.n_basis())));
    exts.push(Box::new(ConstantEnergy::new("dis", displacement_energy(omega, q), ints.n_basis())));
    let refs: Vec<&dyn FockExtension> = exts.iter().map(|b| b.as_ref()).collect();
    let scf = scf_solve_from(ints, &ints.hcore(), system.n_electrons(), settings, &refs, guess)?;
    if !scf.converged {
        return Err(Error::ScfNotConverged(scf.iterations));
    }
    let terms = MoleculeTerms::from_density(&scf.density, scf.electronic_energy, &ops, ints, &system.molecule);
    let report = combine_terms(&[(&terms, 1)], omega, q);
    Ok((scf, report))
}

/// Minimizer of a unimodal `f` on `[a, b]` to abscissa tolerance `tol`.
pub fn golden_section<F: FnMut(f64) -> Result<f64>>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    Ok(0.5 * (a + b))
}

/// Solves the coupled subsystems for the optimal photon displacement
/// `q = lambda . <mu_total> / w`.
///
/// The reported `q` is evaluated from the final densities, so
/// `E_lin = -2 E_dis` holds to rounding.
pub fn solve_coupled(subs: &[Subsystem], lambda: Vector3<f64>, omega: f64, settings: &CavitySettings) -> Result<CoupledSolution> {
    settings.validate()?;
    if subs.is_empty() || subs.iter().any(|s| s.multiplicity == 0) {
        return Err(Error::InvalidInput("coupled solve needs at least one molecule".into()));
    }
    if !(omega > 0.0) {
        return Err(Error::Domain(format!("cavity frequency must be positive, got {omega}")));
    }
    let inner = settings.inner_scf();
    let n_total: usize = subs.iter().map(|s| s.multiplicity).sum();
    let mean_field = settings.coupling == InterMolecularCoupling::SelfConsistent && n_total > 1;
    let preps: Vec<Prepared> = subs
        .iter()
        .map(|sub| Prepared {
            sub,
            ops: CavityOperators::new(&sub.system.integrals, &sub.system.molecule, lambda, omega, 0.0),
            hcore: sub.system.integrals.hcore(),
        })
        .collect();

    // Field-free seeds.
    let seeds: Vec<ScfResult> = preps
        .par_iter()
        .map(|prep| {
            let ints = &prep.sub.system.integrals;
            let scf = scf_solve_from(ints, &prep.hcore, prep.sub.system.n_electrons(), &inner, &[], None)?;
            if !scf.converged {
                return Err(Error::ScfNotConverged(scf.iterations));
            }
            Ok(scf)
        })
        .collect::<Result<_>>()?;
    let field_free: Vec<f64> = seeds.iter().map(|s| s.energy).collect();
    let mult: Vec<f64> = subs.iter().map(|s| s.multiplicity as f64).collect();
    let mut densities: Vec<DMatrix<f64>> = seeds.iter().map(|s| s.density.clone()).collect();
    let mut p: Vec<f64> = preps.iter().zip(&densities).map(|(prep, d)| prep.ops.projected_dipole(d)).collect();
    let total = |p: &[f64]| p.iter().zip(&mult).map(|(a, m)| a * m).sum::<f64>();
    let mut q = total(&p) / omega;
    let mut trace = Vec::new();
    let alpha = settings.dipole_damping;

    for it in 1..=settings.max_macro_iterations {
        let p_start = p.clone();
        let q_start = q;
        let results: Vec<ScfResult> = match settings.update_order {
            UpdateOrder::Jacobi => {
                let p_tot = total(&p_start);
                preps
                    .par_iter()
                    .enumerate()
                    .map(|(g, prep)| {
                        let partners = mean_field.then(|| p_tot - p_start[g]);
                        solve_one(prep, q_start, partners, &inner, &densities[g])
                    })
                    .collect::<Result<_>>()?
            }
            UpdateOrder::GaussSeidel => {
                let mut out = Vec::with_capacity(preps.len());
                for (g, prep) in preps.iter().enumerate() {
                    let p_tot = total(&p);
                    let partners = mean_field.then(|| p_tot - p[g]);
                    let scf = solve_one(prep, q, partners, &inner, &densities[g])?;
                    let fresh = prep.ops.projected_dipole(&scf.density);
                    p[g] = alpha * p[g] + (1.0 - alpha) * fresh;
                    q = total(&p) / omega;
                    out.push(scf);
                }
                out
            }
        };
        let p_new: Vec<f64> = preps.iter().zip(&results).map(|(prep, s)| prep.ops.projected_dipole(&s.density)).collect();
        let dp = p_new.iter().zip(&p_start).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let p_tot_new = total(&p_new);
        let dq = (p_tot_new / omega - q_start).abs();
        let field = (omega * q_start - p_tot_new).abs();
        trace.push(MacroRecord {
            q: q_start,
            max_dipole_change: dp,
            q_change: dq,
            field_residual: field,
        });
        log::debug!("macro iteration {it}: q = {q_start:.10} |dp| = {dp:.3e} |dq| = {dq:.3e}");
        densities = results.iter().map(|s| s.density.clone()).collect();
        if dp < settings.dipole_tol && dq < settings.q_tol && field < settings.field_tol {
            let states: Vec<SubsystemState> = preps
                .iter()
                .zip(results)
                .zip(&field_free)
                .map(|((prep, scf), &e0)| SubsystemState {
                    terms: terms_of(prep, &scf),
                    scf,
                    multiplicity: prep.sub.multiplicity,
                    members: prep.sub.members.clone(),
                    field_free_energy: e0,
                })
                .collect();
            return Ok(finish(states, lambda, omega, it, trace, false));
        }
        if settings.update_order == UpdateOrder::Jacobi {
            for (pg, new) in p.iter_mut().zip(&p_new) {
                *pg = alpha * *pg + (1.0 - alpha) * new;
            }
            q = total(&p) / omega;
        }
    }

    let single = subs.len() == 1 && subs[0].multiplicity == 1;
    let iterations = settings.max_macro_iterations;
    let residuals: Vec<f64> = trace.iter().map(|r| r.max_dipole_change).collect();
    if !single {
        return Err(Error::EnsembleNotConverged { iterations, trace: residuals });
    }
    if !settings.golden_section_fallback {
        return Err(Error::QcNotConverged { iterations, trace: residuals });
    }
    log::warn!("q fixed point stalled after {iterations} iterations; falling back to golden-section search");
    let prep = &preps[0];
    let sys = prep.sub.system;
    let width = (q.abs()).max(1e-2) * 2.0;
    let mut guess = densities[0].clone();
    let q_gs = golden_section(
        |qq| {
            let (scf, rep) = energy_at_q(sys, lambda, omega, qq, &inner, Some(&guess))?;
            guess = scf.density;
            Ok(rep.e_cbo)
        },
        q - width,
        q + width,
        1e-7,
    )?;
    // E(q) is too flat near its minimum for the search alone to pin q;
    // polish with secant steps on dE/dq = w (w q - lambda . <mu>).
    let gradient = |qq: f64, guess: &DMatrix<f64>| -> Result<(f64, ScfResult, EnergyReport)> {
        let (scf, rep) = energy_at_q(sys, lambda, omega, qq, &inner, Some(guess))?;
        Ok((omega * qq - lambda.dot(&rep.dipole), scf, rep))
    };
    let (mut q0, mut q1) = (q_gs, q_gs + 1e-4);
    let (mut g0, _, _) = gradient(q0, &guess)?;
    let (mut g1, mut scf, mut rep) = gradient(q1, &guess)?;
    for _ in 0..20 {
        if g1.abs() < settings.field_tol || g1 == g0 {
            break;
        }
        let q2 = q1 - g1 * (q1 - q0) / (g1 - g0);
        let (g2, s2, r2) = gradient(q2, &scf.density)?;
        (q0, g0, q1, g1, scf, rep) = (q1, g1, q2, g2, s2, r2);
    }
    let q_gs = q1;
    let field = (omega * q_gs - lambda.dot(&rep.dipole)).abs();
    trace.push(MacroRecord {
        q: q_gs,
        max_dipole_change: f64::NAN,
        q_change: f64::NAN,
        field_residual: field,
    });
    if field > 1e-6 {
        return Err(Error::QcNotConverged { iterations, trace: residuals });
    }
    let state = SubsystemState {
        terms: terms_of(prep, &scf),
        scf,
        multiplicity: 1,
        members: prep.sub.members.clone(),
        field_free_energy: field_free[0],
    };
    let mut sol = finish(vec![state], lambda, omega, iterations, trace, true);
    // keep the searched q rather than the density-derived one
    let terms = &sol.subsystems[0].terms;
    sol.report = combine_terms(&[(terms, 1)], omega, q_gs);
    sol.q = q_gs;
    Ok(sol)
}

fn finish(states: Vec<SubsystemState>, lambda: Vector3<f64>, omega: f64, iterations: usize, trace: Vec<MacroRecord>, used_fallback: bool) -> CoupledSolution {
    let p_tot: f64 = states.iter().map(|s| s.multiplicity as f64 * s.terms.projected_dipole()).sum();
    let q = p_tot / omega;
    let parts: Vec<(&MoleculeTerms, usize)> = states.iter().map(|s| (&s.terms, s.multiplicity)).collect();
    let report = combine_terms(&parts, omega, q);
    CoupledSolution {
        q,
        lambda,
        omega,
        subsystems: states,
        report,
        macro_iterations: iterations,
        trace,
        used_fallback,
    }
}
