//! Linear least squares with standard errors.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct LinearFit {
    pub coef: Vec<f64>,
    pub stderr: Vec<f64>,
    pub rms: f64,
}

/// Fit `y ≈ Σ coef_j basis_j(x)` where `design[i][j] = basis_j(x_i)`.
pub fn least_squares(design: &[Vec<f64>], y: &[f64]) -> LinearFit {
    let n = y.len();
    let k = design[0].len();
    let a = DMatrix::from_fn(n, k, |i, j| design[i][j]);
    let b = DVector::from_column_slice(y);
    let svd = a.clone().svd(true, true);
    let coef = svd.solve(&b, 1e-14).expect("svd solve");
    let resid = &a * &coef - &b;
    let rss = resid.norm_squared();
    let dof = n.saturating_sub(k).max(1) as f64;
    let s2 = rss / dof;
    let cov = (a.transpose() * &a)
        .try_inverse()
        .unwrap_or_else(|| DMatrix::zeros(k, k));
    let stderr = (0..k).map(|j| (s2 * cov[(j, j)]).max(0.0).sqrt()).collect();
    LinearFit {
        coef: coef.iter().copied().collect(),
        stderr,
        rms: (rss / n as f64).sqrt(),
    }
}

/// Slope of `y` against `x` with its standard error.
pub fn slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    let design: Vec<Vec<f64>> = x.iter().map(|&xi| vec![1.0, xi]).collect();
    let f = least_squares(&design, y);
    (f.coef[1], f.stderr[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 3.0 * v).collect();
        let (s, e) = slope(&x, &y);
        assert!((s + 3.0).abs() < 1e-12 && e < 1e-10);
    }
}
