//! Two-electron repulsion integrals in compressed 8-fold-unique storage.

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::basis::{cartesian_components, n_basis_functions, BasisShell};
use super::hermite::{HermiteE, HermiteR};
use super::one_electron::shell_offsets;
use crate::error::{Error, Result};

/// Quartets with a Schwarz bound below this are skipped.
pub const SCHWARZ_THRESHOLD: f64 = 1e-12;

/// Default allocation ceiling for the unique-integral list (bytes).
pub const DEFAULT_ERI_LIMIT: usize = 4 << 30;

#[inline]
pub fn pair_index(i: usize, j: usize) -> usize {
    if i >= j {
        i * (i + 1) / 2 + j
    } else {
        j * (j + 1) / 2 + i
    }
}

#[inline]
pub fn quartet_index(i: usize, j: usize, k: usize, l: usize) -> usize {
    pair_index(pair_index(i, j), pair_index(k, l))
}

/// Bytes needed to store all unique integrals for `n` functions.
pub fn eri_storage_bytes(n: usize) -> usize {
    let npair = n * (n + 1) / 2;
    npair * (npair + 1) / 2 * std::mem::size_of::<f64>()
}

/// Unique `(ij|kl)` values with `i >= j`, `k >= l`, `ij >= kl` (chemist notation).
#[derive(Debug, Clone)]
pub struct EriTensor {
    n: usize,
    data: Vec<f64>,
}

struct PrimPair {
    p: f64,
    center: [f64; 3],
    /// Hermite coefficients, `[component pair][hermite index]`.
    e: Vec<f64>,
}

struct ShellPair {
    a: usize,
    b: usize,
    l: usize,
    ncomp: usize,
    herm: Vec<[usize; 3]>,
    prims: Vec<PrimPair>,
}

fn hermite_list(l: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for t in 0..=l {
        for u in 0..=(l - t) {
            for v in 0..=(l - t - u) {
                out.push([t, u, v]);
            }
        }
    }
    out
}

fn shell_pair(shells: &[BasisShell], ia: usize, ib: usize) -> ShellPair {
    let (sa, sb) = (&shells[ia], &shells[ib]);
    let ca = cartesian_components(sa.l);
    let cb = cartesian_components(sb.l);
    let l = sa.l + sb.l;
    let herm = hermite_list(l);
    let ab = sa.center - sb.center;
    let mut prims = Vec::with_capacity(sa.exponents.len() * sb.exponents.len());
    for (&a, &cfa) in sa.exponents.iter().zip(&sa.coefficients) {
        for (&b, &cfb) in sb.exponents.iter().zip(&sb.coefficients) {
            let p = a + b;
            let c = (sa.center * a + sb.center * b) / p;
            let ex = HermiteE::new(sa.l, sb.l, a, b, ab.x);
            let ey = HermiteE::new(sa.l, sb.l, a, b, ab.y);
            let ez = HermiteE::new(sa.l, sb.l, a, b, ab.z);
            let mut e = vec![0.0; ca.len() * cb.len() * herm.len()];
            for (ka, la) in ca.iter().enumerate() {
                for (kb, lb) in cb.iter().enumerate() {
                    let scale = cfa * cfb * BasisShell::component_scale(la) * BasisShell::component_scale(lb);
                    let row = (ka * cb.len() + kb) * herm.len();
                    for (h, tuv) in herm.iter().enumerate() {
                        e[row + h] = scale
                            * ex.at(la[0], lb[0], tuv[0])
                            * ey.at(la[1], lb[1], tuv[1])
                            * ez.at(la[2], lb[2], tuv[2]);
                    }
                }
            }
            prims.push(PrimPair {
                p,
                center: [c.x, c.y, c.z],
                e,
            });
        }
    }
    ShellPair {
        a: ia,
        b: ib,
        l,
        ncomp: ca.len() * cb.len(),
        herm,
        prims,
    }
}

/// `(ab|cd)` for every component combination of a shell quartet,
/// laid out `[ab][cd]`.
fn quartet_block(bra: &ShellPair, ket: &ShellPair) -> Vec<f64> {
    let l = bra.l + ket.l;
    let nh_ket = ket.herm.len();
    let ket_sign: Vec<f64> = ket
        .herm
        .iter()
        .map(|h| if (h[0] + h[1] + h[2]) % 2 == 0 { 1.0 } else { -1.0 })
        .collect();
    let mut out = vec![0.0; bra.ncomp * ket.ncomp];
    let mut x = vec![0.0; ket.ncomp * bra.herm.len()];
    let pi52 = std::f64::consts::PI.powf(2.5);
    for pp in &bra.prims {
        for qq in &ket.prims {
            let (p, q) = (pp.p, qq.p);
            let alpha = p * q / (p + q);
            let pq = [
                pp.center[0] - qq.center[0],
                pp.center[1] - qq.center[1],
                pp.center[2] - qq.center[2],
            ];
            let r = HermiteR::new(l, alpha, pq);
            let pref = 2.0 * pi52 / (p * q * (p + q).sqrt());
            // x[cd][tuv] = sum_{tau nu phi} (-1)^{..} E^{cd} R_{t+tau, u+nu, v+phi}
            for cd in 0..ket.ncomp {
                let ecd = &qq.e[cd * nh_ket..(cd + 1) * nh_ket];
                for (h, tuv) in bra.herm.iter().enumerate() {
                    let mut s = 0.0;
                    for (k, tnp) in ket.herm.iter().enumerate() {
                        let c = ecd[k];
                        if c != 0.0 {
                            s += ket_sign[k] * c * r.at(tuv[0] + tnp[0], tuv[1] + tnp[1], tuv[2] + tnp[2]);
                        }
                    }
                    x[cd * bra.herm.len() + h] = s;
                }
            }
            let nh_bra = bra.herm.len();
            for ab in 0..bra.ncomp {
                let eab = &pp.e[ab * nh_bra..(ab + 1) * nh_bra];
                for cd in 0..ket.ncomp {
                    let xs = &x[cd * nh_bra..(cd + 1) * nh_bra];
                    let s: f64 = eab.iter().zip(xs).map(|(a, b)| a * b).sum();
                    out[ab * ket.ncomp + cd] += pref * s;
                }
            }
        }
    }
    out
}

impl EriTensor {
    pub fn compute(shells: &[BasisShell]) -> Result<Self> {
        Self::compute_with_limit(shells, DEFAULT_ERI_LIMIT)
    }

    /// Fails with [`Error::TooLarge`] before allocating when the unique list
    /// would exceed `limit` bytes.
    pub fn compute_with_limit(shells: &[BasisShell], limit: usize) -> Result<Self> {
        let n = n_basis_functions(shells);
        let bytes = eri_storage_bytes(n);
        if bytes > limit {
            return Err(Error::TooLarge { bytes, limit });
        }
        let offsets = shell_offsets(shells);
        let pairs: Vec<ShellPair> = (0..shells.len())
            .flat_map(|a| (0..=a).map(move |b| (a, b)))
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|(a, b)| shell_pair(shells, a, b))
            .collect();
        let schwarz: Vec<f64> = pairs
            .par_iter()
            .map(|sp| {
                let block = quartet_block(sp, sp);
                (0..sp.ncomp)
                    .map(|k| block[k * sp.ncomp + k].abs())
                    .fold(0.0, f64::max)
                    .sqrt()
            })
            .collect();

        let blocks: Vec<Vec<(usize, f64)>> = (0..pairs.len())
            .into_par_iter()
            .map(|pi| {
                let bra = &pairs[pi];
                let mut vals = Vec::new();
                for (qi, ket) in pairs.iter().enumerate().take(pi + 1) {
                    if schwarz[pi] * schwarz[qi] < SCHWARZ_THRESHOLD {
                        continue;
                    }
                    let block = quartet_block(bra, ket);
                    let (na, nb) = (shells[bra.a].n_functions(), shells[bra.b].n_functions());
                    let (nc, nd) = (shells[ket.a].n_functions(), shells[ket.b].n_functions());
                    for ka in 0..na {
                        for kb in 0..nb {
                            let (i, j) = (offsets[bra.a] + ka, offsets[bra.b] + kb);
                            for kc in 0..nc {
                                for kd in 0..nd {
                                    let (k, l) = (offsets[ket.a] + kc, offsets[ket.b] + kd);
                                    let v = block[(ka * nb + kb) * (nc * nd) + kc * nd + kd];
                                    vals.push((quartet_index(i, j, k, l), v));
                                }
                            }
                        }
                    }
                }
                vals
            })
            .collect();
        let mut data = vec![0.0; bytes / std::mem::size_of::<f64>()];
        for block in blocks {
            for (idx, v) in block {
                data[idx] = v;
            }
        }
        Ok(EriTensor { n, data })
    }

    pub fn n_basis(&self) -> usize {
        self.n
    }

    pub fn n_unique(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.data[quartet_index(i, j, k, l)]
    }

    /// Coulomb `J_{mn} = sum P_{rs} (mn|rs)` and exchange
    /// `K_{mn} = sum P_{rs} (mr|ns)` for a symmetric `P`.
    pub fn coulomb_exchange(&self, p: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let n = self.n;
        let mut j = DMatrix::zeros(n, n);
        let mut k = DMatrix::zeros(n, n);
        let mut idx = 0;
        for ij in 0..(n * (n + 1) / 2) {
            let (a, b) = unpair(ij);
            for kl in 0..=ij {
                let v = self.data[idx];
                idx += 1;
                if v == 0.0 {
                    continue;
                }
                let (c, d) = unpair(kl);
                let mut perms = [(a, b, c, d), (b, a, c, d), (a, b, d, c), (b, a, d, c), (c, d, a, b), (d, c, a, b), (c, d, b, a), (d, c, b, a)];
                perms.sort_unstable();
                let mut last = None;
                for &(p0, q0, r0, s0) in &perms {
                    if last == Some((p0, q0, r0, s0)) {
                        continue;
                    }
                    last = Some((p0, q0, r0, s0));
                    j[(p0, q0)] += p[(r0, s0)] * v;
                    k[(p0, r0)] += p[(q0, s0)] * v;
                }
            }
        }
        (j, k)
    }
}

fn unpair(ij: usize) -> (usize, usize) {
    let i = ((((8 * ij + 1) as f64).sqrt() - 1.0) / 2.0).floor() as usize;
    // guard against rounding at perfect squares
    let i = if (i + 1) * (i + 2) / 2 <= ij { i + 1 } else if i * (i + 1) / 2 > ij { i - 1 } else { i };
    (i, ij - i * (i + 1) / 2)
}
