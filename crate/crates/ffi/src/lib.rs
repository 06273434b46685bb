//! C ABI over the cbohf engine.
//!
//! Every function returns a [`CbohfStatus`]; on failure the message is kept
//! per thread and can be read with [`cbohf_last_error_message`]. Handles are
//! opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cbohf::cavity::{optimize_qc_with, CavitySettings, EnergyReport};
use cbohf::ensemble::{dilute_solve, EnsembleSolution, PerMoleculeReport};
use cbohf::integrals::{BasisLibrary, MolecularSystem};
use cbohf::model::xyz::parse_xyz;
use cbohf::model::{build_ensemble, convert_units, lambda_from_field, CavityConfig, OrientationPattern, Unit};
use cbohf::scf::{rhf, ScfSettings};
use cbohf::Error;
use nalgebra::Vector3;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CbohfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Io = 3,
    NotConverged = 4,
    Numerical = 5,
    OutOfRange = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CbohfPattern {
    AllParallel = 0,
    Antiparallel = 1,
    Defective = 2,
}

/// Energy decomposition in hartree; `q` and the dipole in atomic units.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CbohfReport {
    pub e_cbo: f64,
    pub e_el: f64,
    pub e_lin: f64,
    pub e_dis: f64,
    pub e_dse: f64,
    pub e_dse_1e: f64,
    pub e_dse_2j: f64,
    pub e_dse_2k: f64,
    pub e_dse_en: f64,
    pub e_dse_nuc: f64,
    pub q: f64,
    pub dipole: [f64; 3],
    /// Cavity-free reference energy.
    pub e_field_free: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CbohfMoleculeReport {
    pub e_cbo: f64,
    pub e_cbo_without_dis: f64,
    pub e_el: f64,
    pub e_lin: f64,
    pub e_dis: f64,
    pub e_dse_local: f64,
    pub e_dse_inter: f64,
    pub e_field_free: f64,
    pub delta_e: f64,
    pub projected_dipole: f64,
}

/// Molecule with its basis and integrals.
pub struct CbohfSystem {
    inner: MolecularSystem,
}

/// Converged ensemble.
pub struct CbohfEnsemble {
    inner: EnsembleSolution,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> CbohfStatus {
    match err {
        Error::Io { .. } => CbohfStatus::Io,
        Error::ScfNotConverged(_) | Error::QcNotConverged { .. } | Error::EnsembleNotConverged { .. } => CbohfStatus::NotConverged,
        Error::Conditioning(_) | Error::TooLarge { .. } => CbohfStatus::Numerical,
        _ => CbohfStatus::InvalidInput,
    }
}

/// Runs `f`, recording any error or panic.
fn guard<F: FnOnce() -> Result<(), (CbohfStatus, String)>>(f: F) -> CbohfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            CbohfStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            CbohfStatus::Panic
        }
    }
}

fn lift<T>(r: cbohf::Result<T>) -> Result<T, (CbohfStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (CbohfStatus, String) {
    (CbohfStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (CbohfStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (CbohfStatus::InvalidInput, format!("{what} is not valid UTF-8")))
}

unsafe fn vec3_arg(p: *const f64, what: &str) -> Result<Vector3<f64>, (CbohfStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    let s = std::slice::from_raw_parts(p, 3);
    Ok(Vector3::new(s[0], s[1], s[2]))
}

fn report_of(r: &EnergyReport, e0: f64) -> CbohfReport {
    CbohfReport {
        e_cbo: r.e_cbo,
        e_el: r.e_el,
        e_lin: r.e_lin,
        e_dis: r.e_dis,
        e_dse: r.e_dse_total,
        e_dse_1e: r.e_dse_1e,
        e_dse_2j: r.e_dse_2j,
        e_dse_2k: r.e_dse_2k,
        e_dse_en: r.e_dse_en,
        e_dse_nuc: r.e_dse_nuc,
        q: r.q,
        dipole: [r.dipole.x, r.dipole.y, r.dipole.z],
        e_field_free: e0,
    }
}

fn molecule_report_of(m: &PerMoleculeReport) -> CbohfMoleculeReport {
    CbohfMoleculeReport {
        e_cbo: m.e_cbo,
        e_cbo_without_dis: m.e_cbo_without_dis,
        e_el: m.e_el,
        e_lin: m.e_lin,
        e_dis: m.e_dis,
        e_dse_local: m.e_dse_local,
        e_dse_inter: m.e_dse_inter,
        e_field_free: m.field_free_energy,
        delta_e: m.delta_e,
        projected_dipole: m.projected_dipole,
    }
}

/// Message of the last failed call on this thread, copied NUL-terminated
/// into `buf` (truncated to `len - 1` bytes). Returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn cbohf_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Coupling magnitude in a.u. for a field in V/nm and a mode frequency in cm^-1.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cbohf_lambda_from_field(field_v_per_nm: f64, omega_cm: f64, out: *mut f64) -> CbohfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let omega = lift(convert_units(omega_cm, Unit::Wavenumber, Unit::Hartree))?;
        let field = lift(convert_units(field_v_per_nm, Unit::VoltPerNm, Unit::AuField))?;
        *out = lift(lambda_from_field(field, omega))?;
        Ok(())
    })
}

/// Builds a molecule from XYZ text (angstrom) with a built-in basis name or basis file path.
///
/// # Safety
/// `xyz` and `basis` must be NUL-terminated strings; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cbohf_system_new(xyz: *const c_char, charge: i32, basis: *const c_char, out: *mut *mut CbohfSystem) -> CbohfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let xyz = str_arg(xyz, "xyz")?;
        let basis = str_arg(basis, "basis")?;
        let library = lift(BasisLibrary::load(basis))?;
        let molecule = lift(parse_xyz(xyz, charge))?;
        let inner = lift(MolecularSystem::new(molecule, &library))?;
        *out = Box::into_raw(Box::new(CbohfSystem { inner }));
        Ok(())
    })
}

/// # Safety
/// `system` must be null or a handle from [`cbohf_system_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cbohf_system_free(system: *mut CbohfSystem) {
    if !system.is_null() {
        drop(Box::from_raw(system));
    }
}

/// # Safety
/// `system` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cbohf_system_n_basis(system: *const CbohfSystem, out: *mut usize) -> CbohfStatus {
    guard(|| {
        let sys = system.as_ref().ok_or_else(|| null("system"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = sys.inner.integrals.n_basis();
        Ok(())
    })
}

/// Field-free RHF total energy.
///
/// # Safety
/// `system` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cbohf_rhf_energy(system: *const CbohfSystem, out: *mut f64) -> CbohfStatus {
    guard(|| {
        let sys = system.as_ref().ok_or_else(|| null("system"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let scf = lift(rhf(&sys.inner.integrals, sys.inner.n_electrons(), &ScfSettings::default()))?;
        if !scf.converged {
            return lift(Err(Error::ScfNotConverged(scf.iterations)));
        }
        *out = scf.energy;
        Ok(())
    })
}

/// Single-molecule CBO-HF at the optimal photon displacement.
/// `lambda` is the coupling vector (3 doubles, a.u.), `omega` in hartree.
///
/// # Safety
/// `system` must be a live handle, `lambda` point to 3 doubles, `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cbohf_optimize_qc(system: *const CbohfSystem, lambda: *const f64, omega: f64, out: *mut CbohfReport) -> CbohfStatus {
    guard(|| {
        let sys = system.as_ref().ok_or_else(|| null("system"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let lam = vec3_arg(lambda, "lambda")?;
        let sol = lift(optimize_qc_with(&sys.inner, lam, omega, &CavitySettings::default()))?;
        *out = report_of(&sol.report, sol.field_free_energy);
        Ok(())
    })
}

/// Dilute ensemble of `n_mol` replicas of `template`, spaced `separation`
/// bohr apart, with bare coupling `lambda0` along `polarization`.
///
/// # Safety
/// `template` must be a live handle, `dipole_axis` and `polarization` point to
/// 3 doubles, `out` valid for writes.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn cbohf_ensemble_solve(
    template: *const CbohfSystem,
    basis: *const c_char,
    dipole_axis: *const f64,
    n_mol: usize,
    pattern: CbohfPattern,
    separation: f64,
    omega: f64,
    lambda0: f64,
    polarization: *const f64,
    rescale: bool,
    out: *mut *mut CbohfEnsemble,
) -> CbohfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let sys = template.as_ref().ok_or_else(|| null("template"))?;
        let library = lift(BasisLibrary::load(str_arg(basis, "basis")?))?;
        let axis = vec3_arg(dipole_axis, "dipole_axis")?;
        let pol = vec3_arg(polarization, "polarization")?;
        if pol.norm() < 1e-12 {
            return Err((CbohfStatus::InvalidInput, "polarization must be nonzero".into()));
        }
        let pattern = match pattern {
            CbohfPattern::AllParallel => OrientationPattern::AllParallel,
            CbohfPattern::Antiparallel => OrientationPattern::Antiparallel,
            CbohfPattern::Defective => OrientationPattern::Defective,
        };
        let cavity = lift(CavityConfig::new(omega, lambda0, pol.normalize(), rescale))?;
        let geom = lift(build_ensemble(&sys.inner.molecule, &axis, n_mol, pattern, separation, &cavity.polarization))?;
        let inner = lift(dilute_solve(&geom, &library, &cavity, &CavitySettings::default()))?;
        *out = Box::into_raw(Box::new(CbohfEnsemble { inner }));
        Ok(())
    })
}

/// # Safety
/// `ensemble` must be null or a handle from [`cbohf_ensemble_solve`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cbohf_ensemble_free(ensemble: *mut CbohfEnsemble) {
    if !ensemble.is_null() {
        drop(Box::from_raw(ensemble));
    }
}

/// Ensemble-level report; `e_field_free` is the sum over molecules.
///
/// # Safety
/// `ensemble` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cbohf_ensemble_report(ensemble: *const CbohfEnsemble, out: *mut CbohfReport) -> CbohfStatus {
    guard(|| {
        let ens = ensemble.as_ref().ok_or_else(|| null("ensemble"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = report_of(&ens.inner.report, ens.inner.state.ensemble_field_free_energy());
        Ok(())
    })
}

/// # Safety
/// `ensemble` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cbohf_ensemble_n_molecules(ensemble: *const CbohfEnsemble, out: *mut usize) -> CbohfStatus {
    guard(|| {
        let ens = ensemble.as_ref().ok_or_else(|| null("ensemble"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = ens.inner.per_molecule.len();
        Ok(())
    })
}

/// # Safety
/// `ensemble` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cbohf_ensemble_molecule_report(ensemble: *const CbohfEnsemble, index: usize, out: *mut CbohfMoleculeReport) -> CbohfStatus {
    guard(|| {
        let ens = ensemble.as_ref().ok_or_else(|| null("ensemble"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let m = ens.inner.per_molecule.get(index).ok_or_else(|| {
            (
                CbohfStatus::OutOfRange,
                format!("molecule {index} out of range for {} molecules", ens.inner.per_molecule.len()),
            )
        })?;
        *out = molecule_report_of(m);
        Ok(())
    })
}
