//! Per-frequency linear theory on the half-line: the mode problem
//! p'' - ξ²p + f'(w)p = -w', p(0) = 0, bounded, its Dirichlet-to-Neumann
//! symbol m(ξ) = p'(0), and the coercivity constant of -d² - f'(w).

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::numerics::{quad, uniform_interp};
use crate::profiles::HeteroclinicProfile;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DtnError {
    #[error("exponential dichotomy not resolved at xi = {xi}: e^(-2 kappa T) = {leak:e}")]
    DichotomyFailure { xi: f64, leak: f64 },
    #[error("symbol m({xi}) = {m:e} is not positive")]
    ZeroSymbol { xi: f64, m: f64 },
    #[error("invalid frequency {0}")]
    InvalidFrequency(f64),
}

#[derive(Debug, Clone)]
pub struct ModeSolution {
    pub xi: f64,
    pub kappa: f64,
    pub h: f64,
    pub p: Vec<f64>,
    pub slope0: f64,
    /// max interior |p'' - (ξ² - f'(w))p + w'|.
    pub residual: f64,
}

impl ModeSolution {
    pub fn t(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    pub fn positive_interior(&self) -> bool {
        let n = self.p.len();
        self.p[1..n - 1].iter().all(|v| *v > 0.0)
    }
}

/// w and w' at arbitrary t from the profile's log variable.
fn profile_at(profile: &HeteroclinicProfile, t: f64) -> (f64, f64) {
    let v = uniform_interp(0.0, profile.h, &profile.v, t);
    let w = -(-v).exp_m1();
    let wp = (2.0 * profile.nonlinearity.upper_antiderivative((-v).exp())).sqrt();
    (w, wp)
}

/// Solve the mode problem with a fourth-order compact (Numerov) scheme and a
/// discrete Robin row selecting the decaying branch.
pub fn solve_mode(profile: &HeteroclinicProfile, xi: f64) -> Result<ModeSolution, DtnError> {
    solve_mode_scaled(profile, xi, 1.0)
}

/// Mode problem with source -scale·w'.
pub fn solve_mode_scaled(
    profile: &HeteroclinicProfile,
    xi: f64,
    scale: f64,
) -> Result<ModeSolution, DtnError> {
    if !(xi >= 0.0) || !xi.is_finite() {
        return Err(DtnError::InvalidFrequency(xi));
    }
    let t_max = profile.t_max();
    let fp1 = profile.nonlinearity.fp(1.0);
    let kappa = (xi * xi - fp1).sqrt();
    let leak = (-2.0 * kappa * t_max).exp();
    if leak > 1e-12 {
        return Err(DtnError::DichotomyFailure { xi, leak });
    }
    let h_target = if xi > 0.0 { (profile.h / 2.0).min(0.05 / xi) } else { profile.h / 2.0 };
    let n = (t_max / h_target).ceil() as usize;
    let h = t_max / n as f64;
    let mut pot = vec![0.0; n + 1];
    let mut src = vec![0.0; n + 1];
    for i in 0..=n {
        let (w, wp) = profile_at(profile, i as f64 * h);
        pot[i] = xi * xi - profile.nonlinearity.fp(w);
        src[i] = -scale * wp;
    }
    // unknowns p_1..p_N; p_0 = 0; Robin row p_N - e^{-κh} p_{N-1} = 0
    let m = n;
    let mut lo = vec![0.0; m];
    let mut di = vec![0.0; m];
    let mut up = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    let c = h * h / 12.0;
    for i in 1..n {
        let r = i - 1;
        if i > 1 {
            lo[r] = 1.0 - c * pot[i - 1];
        }
        di[r] = -2.0 - 10.0 * c * pot[i];
        up[r] = 1.0 - c * pot[i + 1];
        rhs[r] = c * (src[i + 1] + 10.0 * src[i] + src[i - 1]);
    }
    lo[m - 1] = -(-kappa * h).exp();
    di[m - 1] = 1.0;
    let sol = thomas(&lo, &di, &up, &rhs);
    let mut p = Vec::with_capacity(n + 1);
    p.push(0.0);
    p.extend(sol);
    let integrand: Vec<f64> = (0..=n).map(|i| pot[i] * p[i] + src[i]).collect();
    let slope0 = -kappa * p[n] - quad::integrate(&integrand, h);
    let residual = (2..n - 1)
        .map(|i| {
            let d2 = (-p[i - 2] + 16.0 * p[i - 1] - 30.0 * p[i] + 16.0 * p[i + 1] - p[i + 2])
                / (12.0 * h * h);
            (d2 - integrand[i]).abs()
        })
        .fold(0.0, f64::max);
    Ok(ModeSolution { xi, kappa, h, p, slope0, residual })
}

pub(crate) fn thomas(lo: &[f64], di: &[f64], up: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = di.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = up[0] / di[0];
    d[0] = rhs[0] / di[0];
    for i in 1..n {
        let den = di[i] - lo[i] * c[i - 1];
        c[i] = up[i] / den;
        d[i] = (rhs[i] - lo[i] * d[i - 1]) / den;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coercivity {
    pub a: f64,
    pub grid_n: usize,
    pub a_coarse: f64,
    pub coarse_n: usize,
    pub relative_change: f64,
    pub rayleigh_vector_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DtnSymbol {
    pub table: Vec<(f64, f64)>,
    pub coercivity: Coercivity,
}

impl DtnSymbol {
    pub fn decreasing(&self) -> bool {
        self.table.windows(2).all(|w| w[1].1 < w[0].1)
    }

    pub fn positive(&self) -> bool {
        self.table.iter().all(|(_, m)| *m > 0.0)
    }
}

pub fn dtn_symbol(profile: &HeteroclinicProfile, xi_list: &[f64]) -> Result<DtnSymbol, DtnError> {
    let table = xi_list
        .par_iter()
        .map(|&xi| solve_mode(profile, xi).map(|s| (xi, s.slope0)))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(&(xi, m)) = table.iter().find(|(_, m)| *m <= 0.0) {
        return Err(DtnError::ZeroSymbol { xi, m });
    }
    Ok(DtnSymbol { table, coercivity: coercivity(profile, 2048) })
}

/// Bottom of the Dirichlet spectrum of -d² - f'(w) on (0, T_max),
/// at `n` and `2n` interior nodes.
pub fn coercivity(profile: &HeteroclinicProfile, n: usize) -> Coercivity {
    let (a_coarse, _) = bottom_eigen(profile, n);
    let (a, resid) = bottom_eigen(profile, 2 * n);
    Coercivity {
        a,
        grid_n: 2 * n,
        a_coarse,
        coarse_n: n,
        relative_change: ((a - a_coarse) / a).abs(),
        rayleigh_vector_norm: resid,
    }
}

fn bottom_eigen(profile: &HeteroclinicProfile, n: usize) -> (f64, f64) {
    let t_max = profile.t_max();
    let h = t_max / (n + 1) as f64;
    let diag: Vec<f64> = (1..=n)
        .map(|i| {
            let (w, _) = profile_at(profile, i as f64 * h);
            2.0 / (h * h) - profile.nonlinearity.fp(w)
        })
        .collect();
    let off = -1.0 / (h * h);
    let count_below = |x: f64| -> usize {
        let mut d = 1.0;
        let mut c = 0;
        for (i, di) in diag.iter().enumerate() {
            d = di - x - if i == 0 { 0.0 } else { off * off / d };
            if d == 0.0 {
                d = 1e-300;
            }
            if d < 0.0 {
                c += 1;
            }
        }
        c
    };
    let (mut lo, mut hi) = (diag.iter().cloned().fold(f64::INFINITY, f64::min) - 4.0 / (h * h), 0.0);
    hi = diag.iter().cloned().fold(hi, f64::max) + 4.0 / (h * h);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if count_below(mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * hi.abs().max(1.0) {
            break;
        }
    }
    let lam = 0.5 * (lo + hi);
    // inverse iteration for the eigenvector
    let shift = lam - 1e-10;
    let lov = vec![off; n];
    let upv = vec![off; n];
    let dv: Vec<f64> = diag.iter().map(|d| d - shift).collect();
    let mut v = vec![1.0; n];
    for _ in 0..3 {
        let x = thomas(&lov, &dv, &upv, &v);
        let nrm = x.iter().map(|a| a * a).sum::<f64>().sqrt();
        v = x.iter().map(|a| a / nrm).collect();
    }
    let resid = (0..n)
        .map(|i| {
            let mut hv = diag[i] * v[i];
            if i > 0 {
                hv += off * v[i - 1];
            }
            if i + 1 < n {
                hv += off * v[i + 1];
            }
            (hv - lam * v[i]).powi(2)
        })
        .sum::<f64>()
        .sqrt();
    (lam, resid)
}

#[derive(Debug, Clone)]
pub struct ProjectedMode {
    pub alpha_hat: f64,
    pub phi_hat: Vec<f64>,
    pub h: f64,
    pub dirichlet: f64,
    pub neumann: f64,
}

/// Solve φ̂'' - ξ²φ̂ + f'(w)φ̂ = α̂w', φ̂(0) = 0, ∂_tφ̂(0) = β̂.
pub fn solve_projected_mode(
    profile: &HeteroclinicProfile,
    xi: f64,
    beta_hat: f64,
) -> Result<ProjectedMode, DtnError> {
    let mode = solve_mode(profile, xi)?;
    if mode.slope0 <= 1e-12 {
        return Err(DtnError::ZeroSymbol { xi, m: mode.slope0 });
    }
    let alpha_hat = -beta_hat / mode.slope0;
    let phi_hat: Vec<f64> = mode.p.iter().map(|p| -alpha_hat * p).collect();
    Ok(ProjectedMode {
        alpha_hat,
        dirichlet: phi_hat[0],
        neumann: -alpha_hat * mode.slope0,
        phi_hat,
        h: mode.h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{make_nonlinearity, solve_profile, GridSpec, NonlinearityKind};
    use approx::assert_relative_eq;

    fn ac() -> HeteroclinicProfile {
        let f = make_nonlinearity(NonlinearityKind::AllenCahn, None).unwrap();
        solve_profile(&f, GridSpec::default()).unwrap()
    }

    #[test]
    fn zero_frequency_slope() {
        let p = ac();
        let m = solve_mode(&p, 0.0).unwrap();
        assert_relative_eq!(m.slope0, 2.0 / 3.0, epsilon = 1e-8);
        assert!(m.positive_interior());
        assert!(m.residual < 1e-7, "{}", m.residual);
    }

    #[test]
    fn large_frequency_asymptotics() {
        let p = ac();
        let m = solve_mode(&p, 50.0).unwrap();
        assert!((m.slope0 * 50.0 / p.wp0() - 1.0).abs() <= 0.02);
    }

    #[test]
    fn linear_in_source() {
        let p = ac();
        let a = solve_mode_scaled(&p, 1.0, 1.0).unwrap();
        let b = solve_mode_scaled(&p, 1.0, 2.0).unwrap();
        for (x, y) in a.p.iter().zip(&b.p) {
            assert_relative_eq!(2.0 * x, *y, epsilon = 1e-14, max_relative = 1e-12);
        }
    }

    #[test]
    fn projected_mode() {
        let p = ac();
        let z = solve_projected_mode(&p, 0.0, 0.0).unwrap();
        assert_eq!(z.alpha_hat, 0.0);
        assert!(z.phi_hat.iter().all(|v| *v == 0.0));
        let one = solve_projected_mode(&p, 0.0, 1.0).unwrap();
        assert_relative_eq!(one.alpha_hat, -1.5, epsilon = 1e-8);
        assert!((one.neumann - 1.0).abs() < 1e-8);
    }

    #[test]
    fn coercivity_allen_cahn() {
        let p = ac();
        let c = coercivity(&p, 2048);
        assert!(c.a > 0.0 && c.relative_change < 0.01);
        assert!((c.a - 1.5).abs() < 1e-3, "{}", c.a);
    }
}
