//! Adaptive Dormand–Prince 5(4) with dense step records.

#[derive(Debug, Clone)]
pub struct Step {
    pub x: f64,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
    pub h0: f64,
    pub hmax: f64,
    pub max_steps: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { rtol: 1e-12, atol: 1e-14, h0: 1e-4, hmax: 0.05, max_steps: 2_000_000 }
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrate `y' = rhs(x, y)` from `x0` toward `x1` (either direction).
/// `stop(x, y)` ends the integration early after an accepted step.
pub fn integrate(
    rhs: impl Fn(f64, &[f64]) -> Vec<f64>,
    x0: f64,
    y0: &[f64],
    x1: f64,
    tol: Tolerance,
    stop: impl Fn(f64, &[f64]) -> bool,
) -> Vec<Step> {
    let dir = if x1 >= x0 { 1.0 } else { -1.0 };
    let n = y0.len();
    let mut x = x0;
    let mut y = y0.to_vec();
    let mut h = tol.h0;
    let mut out = vec![Step { x, y: y.clone() }];
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    for _ in 0..tol.max_steps {
        if (x1 - x) * dir <= 1e-15 {
            break;
        }
        h = h.min((x1 - x).abs()).min(tol.hmax);
        k[0] = rhs(x, &y);
        for s in 1..7 {
            let ys: Vec<f64> = (0..n)
                .map(|i| y[i] + dir * h * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>())
                .collect();
            k[s] = rhs(x + dir * C[s] * h, &ys);
        }
        let ynew: Vec<f64> = (0..n)
            .map(|i| y[i] + dir * h * (0..6).map(|j| A[6][j] * k[j][i]).sum::<f64>())
            .collect();
        let err = (0..n)
            .map(|i| {
                let e = h * (0..7).map(|j| E[j] * k[j][i]).sum::<f64>();
                let sc = tol.atol + tol.rtol * y[i].abs().max(ynew[i].abs());
                (e / sc).powi(2)
            })
            .sum::<f64>()
            / n as f64;
        let err = err.sqrt();
        if !err.is_finite() {
            h *= 0.2;
            continue;
        }
        if err <= 1.0 {
            x += dir * h;
            y = ynew;
            out.push(Step { x, y: y.clone() });
            if stop(x, &y) {
                break;
            }
        }
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= fac;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let s = integrate(
            |_, y| vec![y[1], -y[0]],
            0.0,
            &[0.0, 1.0],
            10.0,
            Tolerance::default(),
            |_, _| false,
        );
        let last = s.last().unwrap();
        assert!((last.x - 10.0).abs() < 1e-12);
        assert!((last.y[0] - 10f64.sin()).abs() < 1e-10);
    }
}
