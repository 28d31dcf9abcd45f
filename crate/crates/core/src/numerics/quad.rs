//! Gauss–Legendre nodes and sixth-order cumulative rules on uniform grids.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = z;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Cached 20-point rule.
pub fn gl20() -> &'static (Vec<f64>, Vec<f64>) {
    static GL: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    GL.get_or_init(|| gauss_legendre(20))
}

/// Integrate `f` over [a, b] with the cached 20-point rule.
pub fn gl_integrate(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (x, w) = gl20();
    let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
    x.iter().zip(w).map(|(xi, wi)| wi * f(c + r * xi)).sum::<f64>() * r
}

/// Weights `W[pos][k]` for integrating the degree-(np-1) interpolant through
/// nodes 0..np over the unit interval [pos, pos+1].
fn interval_weights(np: usize) -> Vec<Vec<f64>> {
    let (x, w) = gauss_legendre(np + 2);
    (0..np - 1)
        .map(|pos| {
            (0..np)
                .map(|k| {
                    x.iter()
                        .zip(&w)
                        .map(|(xi, wi)| {
                            let s = pos as f64 + 0.5 + 0.5 * xi;
                            let l: f64 = (0..np)
                                .filter(|&j| j != k)
                                .map(|j| (s - j as f64) / (k as f64 - j as f64))
                                .product();
                            0.5 * wi * l
                        })
                        .sum()
                })
                .collect()
        })
        .collect()
}

fn weights6() -> &'static Vec<Vec<f64>> {
    static W: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    W.get_or_init(|| interval_weights(6))
}

/// Per-interval integrals of a uniformly sampled function, sixth order.
pub fn interval_integrals(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    assert!(n >= 6, "need at least 6 nodes");
    let w = weights6();
    (0..n - 1)
        .map(|i| {
            let j0 = i.saturating_sub(2).min(n - 6);
            let row = &w[i - j0];
            h * (0..6).map(|k| row[k] * y[j0 + k]).sum::<f64>()
        })
        .collect()
}

/// Running integral from the first node: `out[i] = ∫_{x_0}^{x_i} y`.
pub fn cumulative(y: &[f64], h: f64) -> Vec<f64> {
    let parts = interval_integrals(y, h);
    let mut out = Vec::with_capacity(y.len());
    let mut acc = 0.0;
    out.push(0.0);
    for p in parts {
        acc += p;
        out.push(acc);
    }
    out
}

/// Running integral to the last node: `out[i] = ∫_{x_i}^{x_end} y`.
/// Summed from the tail so small tails keep their relative accuracy.
pub fn reverse_cumulative(y: &[f64], h: f64) -> Vec<f64> {
    let parts = interval_integrals(y, h);
    let n = y.len();
    let mut out = vec![0.0; n];
    for i in (0..n - 1).rev() {
        out[i] = out[i + 1] + parts[i];
    }
    out
}

pub fn integrate(y: &[f64], h: f64) -> f64 {
    interval_integrals(y, h).iter().sum()
}

/// Integral with a Richardson error estimate from the every-other-node rule.
pub fn integrate_with_error(y: &[f64], h: f64) -> (f64, f64) {
    let fine = integrate(y, h);
    if y.len() < 13 || y.len() % 2 == 0 {
        return (fine, 0.0);
    }
    let coarse: Vec<f64> = y.iter().step_by(2).copied().collect();
    let c = integrate(&coarse, 2.0 * h);
    (fine, (fine - c).abs() / 63.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(7);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(12)).sum();
        assert_relative_eq!(s, 2.0 / 13.0, epsilon = 1e-14);
        assert_relative_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn cumulative_is_sixth_order() {
        let err = |n: usize| {
            let h = 2.0 / (n - 1) as f64;
            let y: Vec<f64> = (0..n).map(|i| (i as f64 * h).exp()).collect();
            let c = cumulative(&y, h);
            c.iter()
                .enumerate()
                .map(|(i, v)| (v - ((i as f64 * h).exp() - 1.0)).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(21), err(41));
        assert!((e1 / e2).log2() > 5.5, "{e1} {e2}");
    }

    #[test]
    fn reverse_matches_forward() {
        let h = 0.01;
        let y: Vec<f64> = (0..301).map(|i| (-(i as f64) * h).exp()).collect();
        let f = cumulative(&y, h);
        let r = reverse_cumulative(&y, h);
        for i in 0..y.len() {
            assert_relative_eq!(f[i] + r[i], f[300], epsilon = 1e-13);
        }
    }
}
