//! Finite-difference weights (Fornberg) and derivative application on
//! uniform samples, periodic or open.

/// Weights for derivatives 0..=m at `x0` from nodes `xs`; `w[d][k]`.
pub fn fornberg(x0: f64, xs: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Derivative of order `d` of uniform samples with spacing `h`, using
/// a `width`-point stencil (odd). Periodic samples wrap; open samples shift
/// the stencil inward near the ends.
pub fn derivative(y: &[f64], h: f64, d: usize, width: usize, periodic: bool) -> Vec<f64> {
    let n = y.len();
    let half = width / 2;
    let offsets: Vec<f64> = (0..width).map(|k| k as f64 - half as f64).collect();
    let central = &fornberg(0.0, &offsets, d)[d];
    let scale = h.powi(d as i32);
    (0..n)
        .map(|i| {
            if periodic {
                (0..width)
                    .map(|k| {
                        let j = (i + n * 2 + k - half) % n;
                        central[k] * y[j]
                    })
                    .sum::<f64>()
                    / scale
            } else {
                let j0 = i.saturating_sub(half).min(n - width);
                if j0 + half == i {
                    (0..width).map(|k| central[k] * y[j0 + k]).sum::<f64>() / scale
                } else {
                    let xs: Vec<f64> = (0..width).map(|k| (j0 + k) as f64 - i as f64).collect();
                    let w = &fornberg(0.0, &xs, d)[d];
                    (0..width).map(|k| w[k] * y[j0 + k]).sum::<f64>() / scale
                }
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn five_point_second_derivative() {
        let w = fornberg(0.0, &[-2.0, -1.0, 0.0, 1.0, 2.0], 2);
        let expect = [-1.0 / 12.0, 4.0 / 3.0, -2.5, 4.0 / 3.0, -1.0 / 12.0];
        for (a, b) in w[2].iter().zip(expect) {
            assert_relative_eq!(*a, b, epsilon = 1e-13);
        }
    }

    #[test]
    fn periodic_and_open_derivatives() {
        let n = 64;
        let h = 2.0 * std::f64::consts::PI / n as f64;
        let y: Vec<f64> = (0..n).map(|i| (i as f64 * h).sin()).collect();
        let d = derivative(&y, h, 1, 9, true);
        for i in 0..n {
            assert!((d[i] - (i as f64 * h).cos()).abs() < 1e-9);
        }
        let d2 = derivative(&y, h, 2, 9, false);
        for i in 0..n {
            assert!((d2[i] + y[i]).abs() < 1e-6);
        }
    }
}
