//! McMurchie-Davidson Hermite expansion coefficients and Coulomb tensors.

use super::boys::boys;

/// 1-D expansion of a Gaussian product in Hermite Gaussians,
/// `G_i(x; a, A) G_j(x; b, B) = sum_t E^{ij}_t Lambda_t(x; p, P)`.
#[derive(Debug, Clone)]
pub struct HermiteE {
    li: usize,
    lj: usize,
    data: Vec<f64>,
}

impl HermiteE {
    /// `xab = A - B` along one axis.
    pub fn new(li: usize, lj: usize, a: f64, b: f64, xab: f64) -> Self {
        let p = a + b;
        let mu = a * b / p;
        let xpa = -b / p * xab;
        let xpb = a / p * xab;
        let inv2p = 0.5 / p;
        let nt = li + lj + 1;
        let mut e = HermiteE {
            li,
            lj,
            data: vec![0.0; (li + 1) * (lj + 1) * nt],
        };
        e.data[0] = (-mu * xab * xab).exp();
        // Build i upward with j = 0, then j upward for every i.
        for i in 0..li {
            for t in 0..=(i + 1) {
                let mut v = xpa * e.at(i, 0, t);
                if t > 0 {
                    v += inv2p * e.at(i, 0, t - 1);
                }
                v += (t + 1) as f64 * e.at(i, 0, t + 1);
                e.set(i + 1, 0, t, v);
            }
        }
        for j in 0..lj {
            for i in 0..=li {
                for t in 0..=(i + j + 1) {
                    let mut v = xpb * e.at(i, j, t);
                    if t > 0 {
                        v += inv2p * e.at(i, j, t - 1);
                    }
                    v += (t + 1) as f64 * e.at(i, j, t + 1);
                    e.set(i, j + 1, t, v);
                }
            }
        }
        e
    }

    #[inline]
    fn index(&self, i: usize, j: usize, t: usize) -> usize {
        (i * (self.lj + 1) + j) * (self.li + self.lj + 1) + t
    }

    /// `E^{ij}_t`, zero outside `0..=i+j`.
    #[inline]
    pub fn at(&self, i: usize, j: usize, t: usize) -> f64 {
        if t > i + j {
            0.0
        } else {
            self.data[self.index(i, j, t)]
        }
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, t: usize, v: f64) {
        let k = self.index(i, j, t);
        self.data[k] = v;
    }
}

/// Hermite Coulomb integrals `R^0_{tuv}(alpha, PC)` for `t + u + v <= l`,
/// stored densely with stride `l + 1`.
#[derive(Debug, Clone)]
pub struct HermiteR {
    dim: usize,
    data: Vec<f64>,
}

impl HermiteR {
    pub fn new(l: usize, alpha: f64, pc: [f64; 3]) -> Self {
        let dim = l + 1;
        let t = alpha * (pc[0] * pc[0] + pc[1] * pc[1] + pc[2] * pc[2]);
        let mut f = vec![0.0; dim];
        boys(t, &mut f);
        // scratch[n][t][u][v]
        let idx = |n: usize, t: usize, u: usize, v: usize| ((n * dim + t) * dim + u) * dim + v;
        let mut s = vec![0.0; dim * dim * dim * dim];
        let mut fac = 1.0;
        for (n, fn_) in f.iter().enumerate() {
            s[idx(n, 0, 0, 0)] = fac * fn_;
            fac *= -2.0 * alpha;
        }
        for k in 1..=l {
            for tt in 0..=k {
                for uu in 0..=(k - tt) {
                    let vv = k - tt - uu;
                    for n in 0..=(l - k) {
                        let val = if tt > 0 {
                            let mut r = pc[0] * s[idx(n + 1, tt - 1, uu, vv)];
                            if tt > 1 {
                                r += (tt - 1) as f64 * s[idx(n + 1, tt - 2, uu, vv)];
                            }
                            r
                        } else if uu > 0 {
                            let mut r = pc[1] * s[idx(n + 1, tt, uu - 1, vv)];
                            if uu > 1 {
                                r += (uu - 1) as f64 * s[idx(n + 1, tt, uu - 2, vv)];
                            }
                            r
                        } else {
                            let mut r = pc[2] * s[idx(n + 1, tt, uu, vv - 1)];
                            if vv > 1 {
                                r += (vv - 1) as f64 * s[idx(n + 1, tt, uu, vv - 2)];
                            }
                            r
                        };
                        s[idx(n, tt, uu, vv)] = val;
                    }
                }
            }
        }
        s.truncate(dim * dim * dim);
        HermiteR { dim, data: s }
    }

    #[inline]
    pub fn at(&self, t: usize, u: usize, v: usize) -> f64 {
        self.data[(t * self.dim + u) * self.dim + v]
    }
}

/// `int (x - C)^e Lambda_t(x; p, P) dx` for `t = 0..=e`, `xpc = P - C`.
pub fn hermite_moments(e: usize, p: f64, xpc: f64) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; e + 2]; e + 1];
    m[0][0] = (std::f64::consts::PI / p).sqrt();
    let inv2p = 0.5 / p;
    for k in 0..e {
        for t in 0..=(k + 1) {
            let mut v = xpc * m[k][t];
            if t > 0 {
                v += t as f64 * m[k][t - 1];
            }
            v += inv2p * m[k][t + 1];
            m[k + 1][t] = v;
        }
    }
    m
}
