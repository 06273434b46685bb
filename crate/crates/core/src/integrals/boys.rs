//! Boys function `F_n(T) = \int_0^1 t^{2n} exp(-T t^2) dt`.

/// Crossover between the power series (with downward recursion) and the
/// closed-form `F_0` with upward recursion.
const SERIES_LIMIT: f64 = 25.0;

/// Fills `out[n] = F_n(t)` for `n = 0..out.len()`.
pub fn boys(t: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    let nmax = out.len() - 1;
    let exp_t = (-t).exp();
    if t < SERIES_LIMIT {
        let denom0 = 2.0 * nmax as f64 + 1.0;
        let mut term = 1.0 / denom0;
        let mut sum = term;
        let mut k = 0.0;
        loop {
            k += 1.0;
            term *= 2.0 * t / (denom0 + 2.0 * k);
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
        }
        out[nmax] = exp_t * sum;
        for n in (0..nmax).rev() {
            out[n] = (2.0 * t * out[n + 1] + exp_t) / (2.0 * n as f64 + 1.0);
        }
    } else {
        let st = t.sqrt();
        out[0] = 0.5 * (std::f64::consts::PI / t).sqrt() * libm::erf(st);
        for n in 0..nmax {
            out[n + 1] = ((2.0 * n as f64 + 1.0) * out[n] - exp_t) / (2.0 * t);
        }
    }
}

/// Single value convenience wrapper.
pub fn boys_single(n: usize, t: f64) -> f64 {
    let mut buf = vec![0.0; n + 1];
    boys(t, &mut buf);
    buf[n]
}
