//! Shared numerical kernels.

pub mod fd;
pub mod fit;
pub mod ode;
pub mod quad;

/// Lagrange interpolation at `x` through `(xs, ys)`.
pub fn lagrange(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let mut s = 0.0;
    for k in 0..xs.len() {
        let mut l = 1.0;
        for j in 0..xs.len() {
            if j != k {
                l *= (x - xs[j]) / (xs[k] - xs[j]);
            }
        }
        s += l * ys[k];
    }
    s
}

/// Six-point Lagrange interpolation on a uniform grid starting at `x0`.
pub fn uniform_interp(x0: f64, h: f64, ys: &[f64], x: f64) -> f64 {
    let n = ys.len();
    let s = (x - x0) / h;
    let i = (s.floor().max(0.0) as usize).min(n - 2);
    let j0 = i.saturating_sub(2).min(n - 6);
    let xs: Vec<f64> = (j0..j0 + 6).map(|j| j as f64).collect();
    lagrange(&xs, &ys[j0..j0 + 6], s)
}
