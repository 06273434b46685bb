use cbohf::integrals::basis::{cartesian_components, BasisLibrary, BasisShell};
use cbohf::integrals::boys::boys_single;
use cbohf::integrals::eri::EriTensor;
use cbohf::integrals::one_electron::{multipole_matrices, nuclear_attraction_for, overlap_kinetic};
use cbohf::integrals::{lambda_dipole_matrix, lambda_quadrupole_matrix, IntegralSet};
use cbohf::model::{Atom, Molecule};
use nalgebra::{DMatrix, Vector3};
use proptest::prelude::*;
use std::f64::consts::PI;

fn h2() -> Molecule {
    Molecule::new(
        vec![
            Atom::new("H", Vector3::zeros()).unwrap(),
            Atom::new("H", Vector3::new(0.0, 0.0, 1.4)).unwrap(),
        ],
        0,
    )
    .unwrap()
}

fn sto3g() -> BasisLibrary {
    BasisLibrary::builtin("sto-3g").unwrap()
}

/// Composite 10-point Gauss-Legendre on [lo, hi].
fn quad_1d(lo: f64, hi: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
    const X: [f64; 5] = [0.1488743389816312, 0.4333953941292472, 0.6794095682990244, 0.8650633666889845, 0.9739065285171717];
    const W: [f64; 5] = [0.2955242247147529, 0.2692667193099963, 0.2190863625159820, 0.1494513491505806, 0.0666713443086881];
    let h = (hi - lo) / panels as f64;
    let mut s = 0.0;
    for p in 0..panels {
        let mid = lo + (p as f64 + 0.5) * h;
        for (x, w) in X.iter().zip(W) {
            s += w * (f(mid + 0.5 * h * x) + f(mid - 0.5 * h * x));
        }
    }
    0.5 * h * s
}

/// Gauss-Legendre nodes/weights on [lo, hi] for separable 3-D grids.
fn nodes(lo: f64, hi: f64, panels: usize) -> Vec<(f64, f64)> {
    const X: [f64; 5] = [0.1488743389816312, 0.4333953941292472, 0.6794095682990244, 0.8650633666889845, 0.9739065285171717];
    const W: [f64; 5] = [0.2955242247147529, 0.2692667193099963, 0.2190863625159820, 0.1494513491505806, 0.0666713443086881];
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
}

/// Value of component `comp` of a contracted shell at `r`.
fn basis_value(shell: &BasisShell, comp: &[usize; 3], r: &Vector3<f64>) -> f64 {
    let d = r - shell.center;
    let poly = d.x.powi(comp[0] as i32) * d.y.powi(comp[1] as i32) * d.z.powi(comp[2] as i32);
    let radial: f64 = shell
        .exponents
        .iter()
        .zip(&shell.coefficients)
        .map(|(a, c)| c * (-a * d.norm_squared()).exp())
        .sum();
    BasisShell::component_scale(comp) * poly * radial
}

#[test]
fn h2_overlap_matches_quadrature_and_reference() {
    let shells = sto3g().shells_for(&h2()).unwrap();
    let (s, _) = overlap_kinetic(&shells);
    // separable primitive products: x and y factors are plain Gaussians
    let (a, b) = (&shells[0], &shells[1]);
    let mut q = 0.0;
    for (ea, ca) in a.exponents.iter().zip(&a.coefficients) {
        for (eb, cb) in b.exponents.iter().zip(&b.coefficients) {
            let fx = quad_1d(-12.0, 12.0, 60, |x| (-(ea + eb) * x * x).exp());
            let fz = quad_1d(-12.0, 13.4, 60, |z| (-ea * z * z - eb * (z - 1.4).powi(2)).exp());
            q += ca * cb * fx * fx * fz;
        }
    }
    assert!((s[(0, 1)] - q).abs() < 1e-12, "{} vs {}", s[(0, 1)], q);
    assert!((s[(0, 1)] - 0.6593182058047428).abs() < 1e-12);
    assert!((s[(0, 0)] - 1.0).abs() < 1e-13);
}

/// `(ab|cd)` over s primitives with the closed form
/// `2 pi^{5/2} / (p q sqrt(p+q)) K_ab K_cd F_0(alpha |PQ|^2)`, `F_0` through erf.
fn s_eri_closed_form(shells: &[BasisShell], i: usize, j: usize, k: usize, l: usize) -> f64 {
    let f0 = |t: f64| if t < 1e-14 { 1.0 } else { 0.5 * (PI / t).sqrt() * erf_series(t.sqrt()) };
    let mut total = 0.0;
    let pairs = |a: &BasisShell, b: &BasisShell| {
        let mut v = Vec::new();
        for (ea, ca) in a.exponents.iter().zip(&a.coefficients) {
            for (eb, cb) in b.exponents.iter().zip(&b.coefficients) {
                let p = ea + eb;
                let k = (-(ea * eb / p) * (a.center - b.center).norm_squared()).exp();
                v.push((p, (a.center * *ea + b.center * *eb) / p, ca * cb * k));
            }
        }
        v
    };
    for (p, pc, cp) in pairs(&shells[i], &shells[j]) {
        for (q, qc, cq) in pairs(&shells[k], &shells[l]) {
            let alpha = p * q / (p + q);
            total += 2.0 * PI.powf(2.5) / (p * q * (p + q).sqrt()) * cp * cq * f0(alpha * (pc - qc).norm_squared());
        }
    }
    total
}

// Taylor-series erf, independent of the library erf used by the Boys code;
// adequate for the small arguments seen here.
fn erf_series(x: f64) -> f64 {
    if x > 5.5 {
        return 1.0;
    }
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= -x * x / n;
        let add = term / (2.0 * n + 1.0);
        sum += add;
        if add.abs() < 1e-18 {
            break;
        }
    }
    2.0 / PI.sqrt() * sum
}

#[test]
fn h2_eri_matches_closed_form() {
    let shells = sto3g().shells_for(&h2()).unwrap();
    let eri = EriTensor::compute(&shells).unwrap();
    for (i, j, k, l) in [(0, 0, 0, 0), (0, 0, 1, 1), (1, 0, 0, 0), (1, 0, 1, 0), (1, 1, 1, 0)] {
        let want = s_eri_closed_form(&shells, i, j, k, l);
        assert!((eri.get(i, j, k, l) - want).abs() < 1e-12, "({i}{j}|{k}{l})");
    }
    assert!((eri.get(0, 0, 0, 0) - 0.7746059442114875).abs() < 1e-12);
}

#[test]
fn single_s_self_repulsion() {
    // one normalized s primitive: (11|11) = 2 sqrt(alpha / pi)
    let alpha = 0.8;
    let shell = BasisShell::new(Vector3::new(0.1, 0.2, 0.3), 0, vec![alpha], vec![1.0], 0).unwrap();
    let eri = EriTensor::compute(&[shell]).unwrap();
    assert!((eri.get(0, 0, 0, 0) - 2.0 * (alpha / PI).sqrt()).abs() < 1e-14);
}

#[test]
fn identical_functions_overlap_one() {
    let a = BasisShell::new(Vector3::zeros(), 0, vec![0.5, 1.5], vec![0.4, 0.6], 0).unwrap();
    let (s, _) = overlap_kinetic(&[a.clone(), a]);
    assert!((s[(0, 1)] - 1.0).abs() < 1e-14);
}

#[derive(serde::Deserialize)]
struct Reference {
    r: f64,
    origin: [f64; 3],
    n: usize,
    #[serde(rename = "S")]
    s: Vec<Vec<f64>>,
    #[serde(rename = "T")]
    t: Vec<Vec<f64>>,
    #[serde(rename = "V")]
    v: Vec<Vec<f64>>,
    #[serde(rename = "D")]
    d: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "Q")]
    q: Vec<Vec<Vec<f64>>>,
    eri_index: Vec<[usize; 4]>,
    eri_value: Vec<f64>,
}

fn max_diff(a: &DMatrix<f64>, b: &[Vec<f64>]) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            m = m.max((a[(i, j)] - b[i][j]).abs());
        }
    }
    m
}

#[test]
fn aug_cc_pvdz_matches_frozen_reference() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/hf_aug_cc_pvdz_reference.json")).unwrap();
    let reference: Reference = serde_json::from_str(&text).unwrap();
    let basis = BasisLibrary::load(concat!(env!("CARGO_MANIFEST_DIR"), "/data/aug-cc-pvdz.gbs")).unwrap();
    let mol = cbohf::model::hydrogen_fluoride(reference.r).unwrap();
    let shells = basis.shells_for(&mol).unwrap();
    let (s, t) = overlap_kinetic(&shells);
    assert_eq!(s.nrows(), reference.n);
    assert!(max_diff(&s, &reference.s) < 1e-10);
    assert!(max_diff(&t, &reference.t) < 1e-9);
    let v = nuclear_attraction_for(&shells, &mol);
    assert!(max_diff(&v, &reference.v) < 1e-9);
    let (d, q) = multipole_matrices(&shells, &Vector3::from(reference.origin));
    for a in 0..3 {
        assert!(max_diff(&d[a], &reference.d[a]) < 1e-10, "dipole {a}");
    }
    for k in 0..6 {
        assert!(max_diff(&q[k], &reference.q[k]) < 1e-9, "second moment {k}");
    }
    let eri = EriTensor::compute(&shells).unwrap();
    for (idx, want) in reference.eri_index.iter().zip(&reference.eri_value) {
        let got = eri.get(idx[0], idx[1], idx[2], idx[3]);
        assert!((got - want).abs() < 1e-10, "{idx:?}: {got} vs {want}");
    }
}

#[test]
fn s_function_dipoles() {
    let at_origin = BasisShell::new(Vector3::zeros(), 0, vec![1.1], vec![1.0], 0).unwrap();
    let (d, q) = multipole_matrices(&[at_origin], &Vector3::zeros());
    assert!(d.iter().all(|m| m[(0, 0)].abs() < 1e-15));
    // normalized primitive: <z^2> = 1 / (4 alpha)
    assert!((q[5][(0, 0)] - 1.0 / (4.0 * 1.1)).abs() < 1e-14);
    let shifted = BasisShell::new(Vector3::new(0.0, 0.0, 2.5), 0, vec![0.7, 0.2], vec![0.3, 0.8], 0).unwrap();
    let (d, _) = multipole_matrices(&[shifted], &Vector3::zeros());
    assert!((d[2][(0, 0)] - 2.5).abs() < 1e-13);
}

#[test]
fn lambda_contractions() {
    let mol = cbohf::model::hydrogen_fluoride(1.7325).unwrap();
    let ints = IntegralSet::compute(&mol, &sto3g().shells_for(&mol).unwrap()).unwrap();
    let n = ints.n_basis();
    assert_eq!(lambda_dipole_matrix(&ints.dipole, &Vector3::zeros()), DMatrix::zeros(n, n));
    assert_eq!(lambda_quadrupole_matrix(&ints.second_moment, &Vector3::zeros()), DMatrix::zeros(n, n));
    assert!((ints.lambda_dipole(&Vector3::z()) - &ints.dipole[2]).amax() < 1e-15);
    let lam = Vector3::new(1.0, 1.0, 0.0) / 2f64.sqrt();
    let want = (&ints.dipole[0] + &ints.dipole[1]) / 2f64.sqrt();
    assert!((ints.lambda_dipole(&lam) - want).amax() < 1e-14);
    let lz = 0.05;
    let q2 = ints.lambda_quadrupole(&Vector3::new(0.0, 0.0, lz));
    assert!((q2 - &ints.second_moment[5] * (lz * lz)).amax() < 1e-15);
}

#[test]
fn lambda_quadrupole_matches_grid_quadrature() {
    let p = BasisShell::new(Vector3::new(0.2, -0.1, 0.3), 1, vec![1.3, 0.4], vec![0.5, 0.6], 0).unwrap();
    let s = BasisShell::new(Vector3::new(-0.3, 0.4, -0.2), 0, vec![0.9], vec![1.0], 1).unwrap();
    let shells = vec![p.clone(), s.clone()];
    let origin = Vector3::new(0.05, 0.1, -0.05);
    let lambda = Vector3::new(0.3, -0.5, 0.8);
    let (_, q) = multipole_matrices(&shells, &origin);
    let q2 = lambda_quadrupole_matrix(&q, &lambda);
    let grid = nodes(-9.0, 9.0, 12);
    let pc = cartesian_components(1);
    for (k, comp) in pc.iter().enumerate() {
        let mut sum = 0.0;
        for &(x, wx) in &grid {
            for &(y, wy) in &grid {
                for &(z, wz) in &grid {
                    let r = Vector3::new(x, y, z);
                    let l = lambda.dot(&(r - origin));
                    sum += wx * wy * wz * l * l * basis_value(&p, comp, &r) * basis_value(&s, &[0, 0, 0], &r);
                }
            }
        }
        assert!((q2[(k, 3)] - sum).abs() < 1e-8, "component {k}: {} vs {sum}", q2[(k, 3)]);
    }
}

#[test]
fn boys_used_by_eri_is_consistent() {
    assert!((boys_single(0, 1.0) - 0.5 * PI.sqrt() * erf_series(1.0)).abs() < 1e-14);
}

fn random_system(coords: &[(f64, f64, f64)]) -> Molecule {
    let syms = ["H", "Li", "H", "Li"];
    let atoms = coords
        .iter()
        .enumerate()
        .map(|(i, &(x, y, z))| Atom::new(syms[i % 4], Vector3::new(x, y, z)).unwrap())
        .collect();
    Molecule::new(atoms, 0).unwrap()
}

fn spread(coords: &[(f64, f64, f64)]) -> bool {
    for (i, a) in coords.iter().enumerate() {
        for b in &coords[..i] {
            let d = ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2) + (a.2 - b.2).powi(2)).sqrt();
            if d < 1.0 {
                return false;
            }
        }
    }
    true
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn matrices_symmetric_and_translation_covariant(
        coords in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0), 2..=2),
        t in (-3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0),
    ) {
        prop_assume!(spread(&coords));
        let mol = random_system(&coords);
        let basis = BasisLibrary::builtin("6-31g").unwrap();
        let a = IntegralSet::compute(&mol, &basis.shells_for(&mol).unwrap()).unwrap();
        let shift = Vector3::new(t.0, t.1, t.2);
        let moved = mol.translated(&shift);
        let shells = basis.shells_for(&moved).unwrap();
        let b = IntegralSet::compute(&moved, &shells).unwrap();
        for m in [&a.s, &a.t, &a.v].into_iter().chain(a.dipole.iter()).chain(a.second_moment.iter()) {
            prop_assert!((m - m.transpose()).amax() < 1e-12);
        }
        prop_assert!(a.s.clone().symmetric_eigenvalues().min() > 0.0);
        prop_assert!((&a.s - &b.s).amax() < 1e-10);
        prop_assert!((&a.t - &b.t).amax() < 1e-10);
        prop_assert!((&a.v - &b.v).amax() < 1e-10);
        // both sets use their own (moved) origin: identical dipoles
        prop_assert!((&a.dipole[2] - &b.dipole[2]).amax() < 1e-10);
        // same shells, origin held fixed: D' = D + t S
        let (d_fixed, _) = multipole_matrices(&shells, &mol.gauge_origin());
        for (axis, ta) in [shift.x, shift.y, shift.z].into_iter().enumerate() {
            let want = &a.dipole[axis] + &a.s * ta;
            prop_assert!((&d_fixed[axis] - want).amax() < 1e-10);
        }
        let n = a.n_basis();
        for i in 0..n { for j in 0..n { for k in 0..n { for l in 0..n {
            let v = a.eri.get(i, j, k, l);
            prop_assert!((v - b.eri.get(i, j, k, l)).abs() < 1e-10);
        }}}}
    }

    #[test]
    fn eri_permutation_symmetry(i in 0usize..11, j in 0usize..11, k in 0usize..11, l in 0usize..11) {
        let mol = cbohf::model::hydrogen_fluoride(1.7325).unwrap();
        let shells = BasisLibrary::builtin("6-31g").unwrap().shells_for(&mol).unwrap();
        let eri = EriTensor::compute(&shells).unwrap();
        let v = eri.get(i, j, k, l);
        for w in [eri.get(j, i, k, l), eri.get(i, j, l, k), eri.get(k, l, i, j), eri.get(l, k, j, i)] {
            prop_assert_eq!(v, w);
        }
    }
}
