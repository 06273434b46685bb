//! Overlap, kinetic, nuclear-attraction and multipole matrices.

use nalgebra::{DMatrix, Vector3};

use super::basis::{cartesian_components, BasisShell};
use super::hermite::{hermite_moments, HermiteE, HermiteR};
use crate::model::Molecule;

/// First basis-function index of every shell.
pub fn shell_offsets(shells: &[BasisShell]) -> Vec<usize> {
    let mut out = Vec::with_capacity(shells.len());
    let mut n = 0;
    for s in shells {
        out.push(n);
        n += s.n_functions();
    }
    out
}

/// Runs `f(prefactor, a, b, [Ex, Ey, Ez], p, P)` over all primitive pairs
/// of a shell pair. `extra` raises the `j` range of the E tables.
fn for_primitive_pairs<F>(sa: &BasisShell, sb: &BasisShell, extra: usize, mut f: F)
where
    F: FnMut(f64, f64, f64, &[HermiteE; 3], f64, Vector3<f64>),
{
    let ab = sa.center - sb.center;
    for (&a, &ca) in sa.exponents.iter().zip(&sa.coefficients) {
        for (&b, &cb) in sb.exponents.iter().zip(&sb.coefficients) {
            let p = a + b;
            let pc = (sa.center * a + sb.center * b) / p;
            let e = [
                HermiteE::new(sa.l, sb.l + extra, a, b, ab.x),
                HermiteE::new(sa.l, sb.l + extra, a, b, ab.y),
                HermiteE::new(sa.l, sb.l + extra, a, b, ab.z),
            ];
            f(ca * cb, a, b, &e, p, pc);
        }
    }
}

/// Overlap and kinetic energy matrices.
pub fn overlap_kinetic(shells: &[BasisShell]) -> (DMatrix<f64>, DMatrix<f64>) {
    let offsets = shell_offsets(shells);
    let n = super::basis::n_basis_functions(shells);
    let mut s = DMatrix::zeros(n, n);
    let mut t = DMatrix::zeros(n, n);
    for (ia, sa) in shells.iter().enumerate() {
        let ca = cartesian_components(sa.l);
        for (ib, sb) in shells.iter().enumerate().take(ia + 1) {
            let cb = cartesian_components(sb.l);
            let mut sblock = vec![0.0; ca.len() * cb.len()];
            let mut tblock = vec![0.0; ca.len() * cb.len()];
            for_primitive_pairs(sa, sb, 2, |c, _a, b, e, p, _pc| {
                let sq = (std::f64::consts::PI / p).sqrt();
                for (ka, la) in ca.iter().enumerate() {
                    for (kb, lb) in cb.iter().enumerate() {
                        let mut s1 = [0.0; 3];
                        let mut t1 = [0.0; 3];
                        for d in 0..3 {
                            let (i, j) = (la[d], lb[d]);
                            s1[d] = e[d].at(i, j, 0) * sq;
                            let mut k = -2.0 * b * (2 * j + 1) as f64 * s1[d];
                            k += 4.0 * b * b * e[d].at(i, j + 2, 0) * sq;
                            if j >= 2 {
                                k += (j * (j - 1)) as f64 * e[d].at(i, j - 2, 0) * sq;
                            }
                            t1[d] = -0.5 * k;
                        }
                        let idx = ka * cb.len() + kb;
                        sblock[idx] += c * s1[0] * s1[1] * s1[2];
                        tblock[idx] += c * (t1[0] * s1[1] * s1[2] + s1[0] * t1[1] * s1[2] + s1[0] * s1[1] * t1[2]);
                    }
                }
            });
            for (ka, la) in ca.iter().enumerate() {
                for (kb, lb) in cb.iter().enumerate() {
                    let scale = BasisShell::component_scale(la) * BasisShell::component_scale(lb);
                    let (i, j) = (offsets[ia] + ka, offsets[ib] + kb);
                    let idx = ka * cb.len() + kb;
                    s[(i, j)] = sblock[idx] * scale;
                    s[(j, i)] = s[(i, j)];
                    t[(i, j)] = tblock[idx] * scale;
                    t[(j, i)] = t[(i, j)];
                }
            }
        }
    }
    (s, t)
}

/// Nuclear attraction `-sum_C Z_C <a| 1/|r - C| |b>` for point charges.
pub fn nuclear_attraction(shells: &[BasisShell], charges: &[(f64, Vector3<f64>)]) -> DMatrix<f64> {
    let offsets = shell_offsets(shells);
    let n = super::basis::n_basis_functions(shells);
    let mut v = DMatrix::zeros(n, n);
    for (ia, sa) in shells.iter().enumerate() {
        let ca = cartesian_components(sa.l);
        for (ib, sb) in shells.iter().enumerate().take(ia + 1) {
            let cb = cartesian_components(sb.l);
            let l = sa.l + sb.l;
            let mut block = vec![0.0; ca.len() * cb.len()];
            for_primitive_pairs(sa, sb, 0, |c, _a, _b, e, p, pc| {
                for &(z, center) in charges {
                    let d = pc - center;
                    let r = HermiteR::new(l, p, [d.x, d.y, d.z]);
                    let pref = -z * c * 2.0 * std::f64::consts::PI / p;
                    for (ka, la) in ca.iter().enumerate() {
                        for (kb, lb) in cb.iter().enumerate() {
                            let mut sum = 0.0;
                            for t in 0..=(la[0] + lb[0]) {
                                let ex = e[0].at(la[0], lb[0], t);
                                for u in 0..=(la[1] + lb[1]) {
                                    let exy = ex * e[1].at(la[1], lb[1], u);
                                    for w in 0..=(la[2] + lb[2]) {
                                        sum += exy * e[2].at(la[2], lb[2], w) * r.at(t, u, w);
                                    }
                                }
                            }
                            block[ka * cb.len() + kb] += pref * sum;
                        }
                    }
                }
            });
            for (ka, la) in ca.iter().enumerate() {
                for (kb, lb) in cb.iter().enumerate() {
                    let scale = BasisShell::component_scale(la) * BasisShell::component_scale(lb);
                    let (i, j) = (offsets[ia] + ka, offsets[ib] + kb);
                    v[(i, j)] = block[ka * cb.len() + kb] * scale;
                    v[(j, i)] = v[(i, j)];
                }
            }
        }
    }
    v
}

pub fn nuclear_attraction_for(shells: &[BasisShell], molecule: &Molecule) -> DMatrix<f64> {
    let charges: Vec<(f64, Vector3<f64>)> = molecule.atoms().iter().map(|a| (a.charge as f64, a.position)).collect();
    nuclear_attraction(shells, &charges)
}

/// Cartesian multipole matrices `<a| (x-Ox)^ex (y-Oy)^ey (z-Oz)^ez |b>` for
/// each requested exponent triple.
pub fn cartesian_moments(shells: &[BasisShell], origin: &Vector3<f64>, powers: &[[usize; 3]]) -> Vec<DMatrix<f64>> {
    let offsets = shell_offsets(shells);
    let n = super::basis::n_basis_functions(shells);
    let emax = powers.iter().flat_map(|p| p.iter().copied()).max().unwrap_or(0);
    let mut out = vec![DMatrix::zeros(n, n); powers.len()];
    for (ia, sa) in shells.iter().enumerate() {
        let ca = cartesian_components(sa.l);
        for (ib, sb) in shells.iter().enumerate().take(ia + 1) {
            let cb = cartesian_components(sb.l);
            let mut blocks = vec![vec![0.0; ca.len() * cb.len()]; powers.len()];
            for_primitive_pairs(sa, sb, 0, |c, _a, _b, e, p, pc| {
                let m: Vec<Vec<Vec<f64>>> = (0..3).map(|d| hermite_moments(emax, p, pc[d] - origin[d])).collect();
                for (ka, la) in ca.iter().enumerate() {
                    for (kb, lb) in cb.iter().enumerate() {
                        for (k, pw) in powers.iter().enumerate() {
                            let mut prod = c;
                            for d in 0..3 {
                                let (i, j) = (la[d], lb[d]);
                                let ed = pw[d];
                                let s: f64 = (0..=ed.min(i + j)).map(|t| e[d].at(i, j, t) * m[d][ed][t]).sum();
                                prod *= s;
                            }
                            blocks[k][ka * cb.len() + kb] += prod;
                        }
                    }
                }
            });
            for (ka, la) in ca.iter().enumerate() {
                for (kb, lb) in cb.iter().enumerate() {
                    let scale = BasisShell::component_scale(la) * BasisShell::component_scale(lb);
                    let (i, j) = (offsets[ia] + ka, offsets[ib] + kb);
                    for (k, mat) in out.iter_mut().enumerate() {
                        mat[(i, j)] = blocks[k][ka * cb.len() + kb] * scale;
                        mat[(j, i)] = mat[(i, j)];
                    }
                }
            }
        }
    }
    out
}

/// Order of the six second-moment matrices.
pub const SECOND_MOMENT_POWERS: [[usize; 3]; 6] = [[2, 0, 0], [1, 1, 0], [1, 0, 1], [0, 2, 0], [0, 1, 1], [0, 0, 2]];
const DIPOLE_POWERS: [[usize; 3]; 3] = [[1, 0, 0], [0, 1, 0], [0, 0, 1]];

/// `(D_x, D_y, D_z)` and `(Q_xx, Q_xy, Q_xz, Q_yy, Q_yz, Q_zz)` about `origin`.
pub fn multipole_matrices(shells: &[BasisShell], origin: &Vector3<f64>) -> ([DMatrix<f64>; 3], [DMatrix<f64>; 6]) {
    let mut powers = DIPOLE_POWERS.to_vec();
    powers.extend_from_slice(&SECOND_MOMENT_POWERS);
    let mut m = cartesian_moments(shells, origin, &powers).into_iter();
    let d = [m.next().unwrap(), m.next().unwrap(), m.next().unwrap()];
    let q = [
        m.next().unwrap(),
        m.next().unwrap(),
        m.next().unwrap(),
        m.next().unwrap(),
        m.next().unwrap(),
        m.next().unwrap(),
    ];
    (d, q)
}

/// `sum_a lambda_a D_a`, the matrix of `lambda . r`.
pub fn lambda_dipole_matrix(dipole: &[DMatrix<f64>; 3], lambda: &Vector3<f64>) -> DMatrix<f64> {
    &dipole[0] * lambda.x + &dipole[1] * lambda.y + &dipole[2] * lambda.z
}

/// Matrix of `(lambda . r)^2` from second moments, cross terms doubled.
pub fn lambda_quadrupole_matrix(second: &[DMatrix<f64>; 6], lambda: &Vector3<f64>) -> DMatrix<f64> {
    let (x, y, z) = (lambda.x, lambda.y, lambda.z);
    &second[0] * (x * x)
        + &second[3] * (y * y)
        + &second[5] * (z * z)
        + &second[1] * (2.0 * x * y)
        + &second[2] * (2.0 * x * z)
        + &second[4] * (2.0 * y * z)
}
