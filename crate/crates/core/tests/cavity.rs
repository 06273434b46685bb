use cbohf::cavity::{
    energy_at_q, energy_report, optimize_qc_with, CavityOperators, CavitySettings, DseCoulomb, DseElectronNuclear, DseExchange,
    DseOneElectron, LinearCoupling, MeanField,
};
use cbohf::integrals::{BasisLibrary, MolecularSystem};
use cbohf::model::{convert_units, hydrogen_fluoride, lambda_from_field, Atom, Molecule, Unit};
use cbohf::scf::{rhf, FockExtension, ScfSettings};
use nalgebra::{DMatrix, Rotation3, Vector3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

fn omega() -> f64 {
    convert_units(4467.0, Unit::Wavenumber, Unit::Hartree).unwrap()
}

fn lambda_for(v_per_nm: f64) -> f64 {
    lambda_from_field(convert_units(v_per_nm, Unit::VoltPerNm, Unit::AuField).unwrap(), omega()).unwrap()
}

fn hf(basis: &str) -> MolecularSystem {
    MolecularSystem::new(hydrogen_fluoride(1.7325).unwrap(), &BasisLibrary::builtin(basis).unwrap()).unwrap()
}

fn random_symmetric(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-0.5..0.5));
    (&a + a.transpose()) * 0.5
}

/// Symmetrized central difference of `E` with respect to `P_mn`.
fn fd_fock(ext: &dyn FockExtension, p: &DMatrix<f64>, h: f64) -> DMatrix<f64> {
    let n = p.nrows();
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut e = DMatrix::zeros(n, n);
            e[(i, j)] = 1.0;
            e[(j, i)] = 1.0;
            let d = (ext.energy(&(p + &e * h)) - ext.energy(&(p - &e * h))) / (2.0 * h);
            let v = if i == j { d } else { d / 2.0 };
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

#[test]
fn fock_matches_energy_derivative() {
    let sys = hf("sto-3g");
    // shifted gauge so that the nuclear pieces are exercised
    let lam = Vector3::new(0.02, -0.01, 0.05);
    let mut ops = CavityOperators::new(&sys.integrals, &sys.molecule, lam, omega(), 0.7);
    ops.lambda_mu_nuc = 0.013;
    let exts: Vec<Box<dyn FockExtension>> = vec![
        Box::new(LinearCoupling::new(&ops)),
        Box::new(DseOneElectron::new(&ops)),
        Box::new(DseCoulomb::new(&ops)),
        Box::new(DseExchange::new(&ops)),
        Box::new(DseElectronNuclear::new(&ops)),
        Box::new(MeanField::new(&ops, 0.021)),
    ];
    let mut rng = rand::rngs::StdRng::seed_from_u64(11);
    for _ in 0..20 {
        let p = random_symmetric(sys.integrals.n_basis(), &mut rng);
        for ext in &exts {
            let fd = fd_fock(ext.as_ref(), &p, 1e-4);
            let an = ext.fock(&p);
            assert!((&fd - &an).amax() < 1e-6, "{}: {}", ext.name(), (&fd - &an).amax());
            assert!((&an - an.transpose()).amax() < 1e-14);
        }
    }
}

#[test]
fn zero_coupling_reduces_to_rhf() {
    let sys = hf("sto-3g");
    let plain = rhf(&sys.integrals, 10, &ScfSettings::default()).unwrap();
    let sol = optimize_qc_with(&sys, Vector3::zeros(), omega(), &CavitySettings::default()).unwrap();
    assert_eq!(sol.q, 0.0);
    assert!((sol.report.e_cbo - plain.energy).abs() < 1e-10);
    for v in [sol.report.e_lin, sol.report.e_dis, sol.report.e_dse_total] {
        assert_eq!(v, 0.0);
    }
}

#[test]
fn optimum_is_stationary_and_satisfies_virial_identity() {
    let sys = hf("sto-3g");
    let lam = Vector3::new(0.0, 0.0, lambda_for(2.0));
    let settings = CavitySettings::default();
    let sol = optimize_qc_with(&sys, lam, omega(), &settings).unwrap();
    assert!(!sol.used_fallback);
    let r = &sol.report;
    assert!(((r.e_lin + 2.0 * r.e_dis) / r.e_lin).abs() < 1e-10);
    // E_lin = -(lambda . mu)^2 at the optimum
    assert!((r.e_lin + lam.dot(&r.dipole).powi(2)).abs() < 1e-14);
    let h = 1e-4;
    let inner = settings.inner_scf();
    let (_, plus) = energy_at_q(&sys, lam, omega(), sol.q + h, &inner, Some(&sol.scf.density)).unwrap();
    let (_, minus) = energy_at_q(&sys, lam, omega(), sol.q - h, &inner, Some(&sol.scf.density)).unwrap();
    assert!(((plus.e_cbo - minus.e_cbo) / (2.0 * h)).abs() < 1e-6);
    assert!(plus.e_cbo > r.e_cbo && minus.e_cbo > r.e_cbo);
    r.check_identities(1e-12).unwrap();
}

#[test]
fn golden_section_cross_check() {
    let sys = hf("sto-3g");
    let lam = Vector3::new(0.0, 0.0, lambda_for(2.0));
    let normal = optimize_qc_with(&sys, lam, omega(), &CavitySettings::default()).unwrap();
    let forced = CavitySettings {
        max_macro_iterations: 1,
        ..CavitySettings::default()
    };
    let fallback = optimize_qc_with(&sys, lam, omega(), &forced).unwrap();
    assert!(fallback.used_fallback);
    assert!((fallback.q - normal.q).abs() < 1e-6, "{} vs {}", fallback.q, normal.q);
    assert!((fallback.report.e_cbo - normal.report.e_cbo).abs() < 1e-10);
    let strict = CavitySettings {
        golden_section_fallback: false,
        ..forced
    };
    assert!(matches!(
        optimize_qc_with(&sys, lam, omega(), &strict),
        Err(cbohf::Error::QcNotConverged { .. })
    ));
}

#[test]
fn linear_term_vanishes_at_zero_displacement() {
    let sys = hf("sto-3g");
    let lam = Vector3::new(0.0, 0.0, lambda_for(2.0));
    let (_, r0) = energy_at_q(&sys, lam, omega(), 0.0, &CavitySettings::default().inner_scf(), None).unwrap();
    assert_eq!(r0.e_lin, 0.0);
    assert_eq!(r0.e_dis, 0.0);
    let opt = optimize_qc_with(&sys, lam, omega(), &CavitySettings::default()).unwrap();
    // DSE nearly flat along q
    assert!(((opt.report.e_dse_total - r0.e_dse_total) / opt.report.e_dse_total).abs() < 0.02);
}

#[test]
fn component_signs_and_report_requires_convergence() {
    let sys = hf("sto-3g");
    let lam = Vector3::new(0.01, 0.0, lambda_for(1.5));
    let sol = optimize_qc_with(&sys, lam, omega(), &CavitySettings::default()).unwrap();
    assert!(sol.report.e_dis >= 0.0 && sol.report.e_dse_1e > 0.0 && sol.report.e_dse_2k <= 0.0);
    let ops = CavityOperators::new(&sys.integrals, &sys.molecule, lam, omega(), sol.q);
    let again = energy_report(&sol.scf, &ops, &sys.integrals, &sys.molecule).unwrap();
    assert!((again.e_cbo - sol.report.e_cbo).abs() < 1e-12);
    let mut broken = sol.scf.clone();
    broken.converged = false;
    assert!(energy_report(&broken, &ops, &sys.integrals, &sys.molecule).is_err());
}

#[test]
fn small_coupling_is_quadratic() {
    let sys = hf("sto-3g");
    let e0 = rhf(&sys.integrals, 10, &CavitySettings::default().inner_scf()).unwrap().energy;
    let de = |l: f64| {
        optimize_qc_with(&sys, Vector3::new(0.0, 0.0, l), omega(), &CavitySettings::default())
            .unwrap()
            .report
            .e_cbo
            - e0
    };
    let ratio = de(2e-4) / de(1e-4);
    assert!((ratio - 4.0).abs() < 0.05, "ratio {ratio}");
}

#[test]
fn gauge_origin_does_not_matter_for_neutral_molecule() {
    let basis = BasisLibrary::builtin("sto-3g").unwrap();
    let centered = hydrogen_fluoride(1.7325).unwrap();
    let shifted = Molecule::with_gauge_origin(centered.atoms().to_vec(), 0, Vector3::new(0.4, -0.3, 1.1)).unwrap();
    let lam = Vector3::new(0.01, 0.0, lambda_for(2.0));
    let a = optimize_qc_with(&MolecularSystem::new(centered, &basis).unwrap(), lam, omega(), &CavitySettings::default()).unwrap();
    let b = optimize_qc_with(&MolecularSystem::new(shifted, &basis).unwrap(), lam, omega(), &CavitySettings::default()).unwrap();
    assert!((a.report.e_cbo - b.report.e_cbo).abs() < 1e-8);
    assert!(b.report.e_dse_en.abs() > 1e-6 && b.report.e_dse_nuc > 1e-6);
    assert!(a.report.e_dse_en.abs() < 1e-14);
}

/// Rotation of the bond axis by `phi` degrees away from `e = z`.
fn rotated_hf(phi: f64) -> Molecule {
    let m = hydrogen_fluoride(1.7325).unwrap();
    let rot = Rotation3::from_axis_angle(&Vector3::y_axis(), phi.to_radians());
    m.rotated(&rot, &m.charge_center())
}

#[test]
fn perpendicular_orientation_zeroes_linear_and_coulomb_terms() {
    let basis = BasisLibrary::builtin("sto-3g").unwrap();
    let lam = Vector3::new(0.0, 0.0, lambda_for(2.0));
    let sys = MolecularSystem::new(rotated_hf(90.0), &basis).unwrap();
    let r = optimize_qc_with(&sys, lam, omega(), &CavitySettings::default()).unwrap().report;
    assert!(r.e_lin.abs() < 1e-10 && r.e_dse_2j.abs() < 1e-10 && r.e_dis.abs() < 1e-10);
    assert!(r.e_dse_1e > 0.0 && r.e_dse_2k < 0.0);
}

/// `<x>` and `<x^2>` of an orbital by brute-force grid quadrature, `x = lambda . r`.
fn orbital_moments(sys: &MolecularSystem, c: &[f64], lam: &Vector3<f64>) -> (f64, f64) {
    use cbohf::integrals::cartesian_components;
    use cbohf::integrals::BasisShell;
    let value = |r: &Vector3<f64>| -> f64 {
        let mut k = 0;
        let mut v = 0.0;
        for sh in &sys.shells {
            for comp in cartesian_components(sh.l) {
                let d = r - sh.center;
                let poly = d.x.powi(comp[0] as i32) * d.y.powi(comp[1] as i32) * d.z.powi(comp[2] as i32);
                let rad: f64 = sh.exponents.iter().zip(&sh.coefficients).map(|(a, cc)| cc * (-a * d.norm_squared()).exp()).sum();
                v += c[k] * BasisShell::component_scale(&comp) * poly * rad;
                k += 1;
            }
        }
        v
    };
    const X: [f64; 5] = [0.1488743389816312, 0.4333953941292472, 0.6794095682990244, 0.8650633666889845, 0.9739065285171717];
    const W: [f64; 5] = [0.2955242247147529, 0.2692667193099963, 0.2190863625159820, 0.1494513491505806, 0.0666713443086881];
    let grid = |lo: f64, hi: f64, panels: usize| {
        let h = (hi - lo) / panels as f64;
        let mut out = Vec::new();
        for p in 0..panels {
            let mid = lo + (p as f64 + 0.5) * h;
            for (x, w) in X.iter().zip(W) {
                out.push((mid + 0.5 * h * x, 0.5 * h * w));
                out.push((mid - 0.5 * h * x, 0.5 * h * w));
            }
        }
        out
    };
    let gx = grid(-8.0, 8.0, 10);
    let gz = grid(-8.0, 9.4, 12);
    let origin = sys.integrals.origin;
    let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for &(x, wx) in &gx {
        for &(y, wy) in &gx {
            for &(z, wz) in &gz {
                let r = Vector3::new(x, y, z);
                let rho = value(&r).powi(2) * wx * wy * wz;
                let s = lam.dot(&(r - origin));
                m0 += rho;
                m1 += rho * s;
                m2 += rho * s * s;
            }
        }
    }
    (m1 / m0, m2 / m0)
}

#[test]
fn two_electron_dse_matches_determinant_expectation() {
    let h2 = Molecule::new(
        vec![
            Atom::new("H", Vector3::zeros()).unwrap(),
            Atom::new("H", Vector3::new(0.0, 0.0, 1.4)).unwrap(),
        ],
        0,
    )
    .unwrap();
    let sys = MolecularSystem::new(h2, &BasisLibrary::builtin("6-31g").unwrap()).unwrap();
    let lam = Vector3::new(0.03, 0.01, 0.05);
    let scf = rhf(&sys.integrals, 2, &ScfSettings::default()).unwrap();
    let ops = CavityOperators::new(&sys.integrals, &sys.molecule, lam, omega(), 0.0);
    let p = &scf.density;
    let e = DseOneElectron::new(&ops).energy(p) + DseCoulomb::new(&ops).energy(p) + DseExchange::new(&ops).energy(p);
    let c: Vec<f64> = scf.coefficients.column(0).iter().copied().collect();
    let (x1, x2) = orbital_moments(&sys, &c, &lam);
    // <Psi| (x_1 + x_2)^2 / 2 |Psi> for a doubly occupied orbital
    let want = x2 + x1 * x1;
    assert!((e - want).abs() < 1e-8, "{e} vs {want}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn converged_states_have_expected_signs(lx in -0.05f64..0.05, lz in -0.05f64..0.05, phi in 0.0f64..180.0) {
        let sys = MolecularSystem::new(rotated_hf(phi), &BasisLibrary::builtin("sto-3g").unwrap()).unwrap();
        let lam = Vector3::new(lx, 0.0, lz);
        prop_assume!(lam.norm() > 1e-3);
        let r = optimize_qc_with(&sys, lam, omega(), &CavitySettings::default()).unwrap().report;
        prop_assert!(r.e_dis >= 0.0);
        prop_assert!(r.e_dse_1e >= 0.0);
        prop_assert!(r.e_dse_2k <= 0.0);
        prop_assert!(((r.e_lin + 2.0 * r.e_dis) / r.e_lin.abs().max(1e-300)).abs() < 1e-9 || r.e_lin.abs() < 1e-14);
        prop_assert!(r.check_identities(1e-12).is_ok());
    }
}
