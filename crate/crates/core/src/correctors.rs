//! Correctors p'' + f'(w) p = q on the half-line, the projection constants
//! c0..c4 and the leading CMC corrector.
//!
//! With I(τ) the inner integral, p = w' ∫_0^t I/w'^2 and p' = w'' J + I/w'.
//! For bounded correctors the inner integral is taken from the tail,
//! I(τ) = -∫_τ^∞ w'q + P ∫_τ^∞ w'^2 / ∫_0^∞ w'^2 with P = ∫_0^∞ w'q, which is
//! the forward integral of the source with its w'-component removed.

use serde::Serialize;
use thiserror::Error;

use crate::numerics::{fit, quad};
use crate::profiles::HeteroclinicProfile;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorrectorError {
    #[error("source has {got} samples, profile has {expected}")]
    GridMismatch { got: usize, expected: usize },
    #[error("q_{ell} has projection {projection:e} onto w'")]
    OrthogonalityViolation { ell: usize, projection: f64 },
}

pub const BOUNDED_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct CorrectorSolution {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub pp: Vec<f64>,
    pub projection: f64,
    pub bounded: bool,
}

impl CorrectorSolution {
    /// p'' from the equation.
    pub fn ppp(&self, profile: &HeteroclinicProfile) -> Vec<f64> {
        let fp = profile.fp_w();
        (0..self.p.len()).map(|i| self.q[i] - fp[i] * self.p[i]).collect()
    }

    /// max interior |p'' + f'(w)p - q| with p'' from fourth-order differences of p'.
    pub fn residual(&self, profile: &HeteroclinicProfile) -> f64 {
        equation_residual(profile, &self.p, &self.pp, &self.q)
    }
}

pub(crate) fn equation_residual(
    profile: &HeteroclinicProfile,
    p: &[f64],
    pp: &[f64],
    q: &[f64],
) -> f64 {
    let h = profile.h;
    let n = p.len();
    (2..n - 2)
        .map(|i| {
            let d = (pp[i - 2] - 8.0 * pp[i - 1] + 8.0 * pp[i + 1] - pp[i + 2]) / (12.0 * h);
            (d + profile.nonlinearity.fp(profile.w[i]) * p[i] - q[i]).abs()
        })
        .fold(0.0, f64::max)
}

fn check_len(profile: &HeteroclinicProfile, q: &[f64]) -> Result<(), CorrectorError> {
    if q.len() != profile.len() {
        return Err(CorrectorError::GridMismatch { got: q.len(), expected: profile.len() });
    }
    Ok(())
}

/// p and p' from the inner integral I on the grid.
fn from_inner(profile: &HeteroclinicProfile, inner: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let ratio: Vec<f64> = inner.iter().zip(&profile.wp).map(|(i, wp)| i / (wp * wp)).collect();
    let j = quad::cumulative(&ratio, profile.h);
    let p = j.iter().zip(&profile.wp).map(|(j, wp)| wp * j).collect();
    let pp = (0..j.len())
        .map(|k| profile.wpp[k] * j[k] + inner[k] / profile.wp[k])
        .collect();
    (p, pp)
}

/// Solve p'' + f'(w)p = q, p(0) = p'(0) = 0.
pub fn solve_corrector(
    profile: &HeteroclinicProfile,
    q: &[f64],
) -> Result<CorrectorSolution, CorrectorError> {
    check_len(profile, q)?;
    let wq: Vec<f64> = q.iter().zip(&profile.wp).map(|(q, wp)| q * wp).collect();
    let tail = quad::reverse_cumulative(&wq, profile.h);
    let projection = tail[0];
    let bounded = projection.abs() <= BOUNDED_TOL;
    let inner: Vec<f64> = if bounded {
        let w2: Vec<f64> = profile.wp.iter().map(|x| x * x).collect();
        let s_tail = quad::reverse_cumulative(&w2, profile.h);
        let s_total = s_tail[0];
        tail.iter()
            .zip(&s_tail)
            .map(|(t, s)| -t + projection * s / s_total)
            .collect()
    } else {
        quad::cumulative(&wq, profile.h)
    };
    let (p, pp) = from_inner(profile, &inner);
    Ok(CorrectorSolution { q: q.to_vec(), p, pp, projection, bounded })
}

/// Bounded solution of p'' + f'(w)p = q with p(0) = 0 only; its slope is
/// p'(0) = -∫ w'q / w'(0).
pub fn solve_dirichlet_bounded(
    profile: &HeteroclinicProfile,
    q: &[f64],
) -> Result<CorrectorSolution, CorrectorError> {
    check_len(profile, q)?;
    let wq: Vec<f64> = q.iter().zip(&profile.wp).map(|(q, wp)| q * wp).collect();
    let tail = quad::reverse_cumulative(&wq, profile.h);
    let inner: Vec<f64> = tail.iter().map(|t| -t).collect();
    let (p, pp) = from_inner(profile, &inner);
    Ok(CorrectorSolution { q: q.to_vec(), p, pp, projection: tail[0], bounded: true })
}

/// The corrector with source (t + c0)w' and zero Cauchy data.
pub fn p0_graph(profile: &HeteroclinicProfile, c0: f64) -> CorrectorSolution {
    let q: Vec<f64> = profile.t.iter().zip(&profile.wp).map(|(t, wp)| (t + c0) * wp).collect();
    solve_corrector(profile, &q).expect("grid matches")
}

/// The bounded corrector with source -w' and p(0) = 0.
pub fn p0_dtn(profile: &HeteroclinicProfile) -> CorrectorSolution {
    let q: Vec<f64> = profile.wp.iter().map(|x| -x).collect();
    solve_dirichlet_bounded(profile, &q).expect("grid matches")
}

/// Decay rate from a fit of log|p| against [1, ln t, t] on a window.
pub fn tail_rate(profile: &HeteroclinicProfile, p: &[f64], window: (f64, f64)) -> f64 {
    let mut design = Vec::new();
    let mut y = Vec::new();
    for (t, v) in profile.t.iter().zip(p) {
        if *t >= window.0 && *t <= window.1 && v.abs() > 0.0 {
            design.push(vec![1.0, t.ln(), *t]);
            y.push(v.abs().ln());
        }
    }
    -fit::least_squares(&design, &y).coef[2]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProjectionConstants {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub h0_graph: f64,
    pub h0_cmc: Option<f64>,
    pub quadrature_error: f64,
}

/// Moments used by the constants.
fn moment_err(profile: &HeteroclinicProfile, y: &[f64]) -> (f64, f64) {
    quad::integrate_with_error(y, profile.h)
}

pub fn compute_constants(profile: &HeteroclinicProfile) -> ProjectionConstants {
    let w2: Vec<f64> = profile.wp.iter().map(|x| x * x).collect();
    let (m0, e0) = moment_err(profile, &w2);
    let tw2: Vec<f64> = profile.t.iter().zip(&w2).map(|(t, x)| t * x).collect();
    let (m1, e1) = moment_err(profile, &tw2);
    let c0 = -m1 / m0;
    let pw = |k: i32| -> (f64, f64) {
        let y: Vec<f64> = profile.t.iter().zip(&w2).map(|(t, x)| (t + c0).powi(k) * x).collect();
        moment_err(profile, &y)
    };
    let (a2, e2) = pw(2);
    let (a3, e3) = pw(3);
    let p0 = p0_graph(profile, c0);
    let fpp = profile.fpp_w();
    let y3: Vec<f64> = p0.p.iter().zip(&profile.wp).map(|(p, wp)| p * wp).collect();
    let (b3, e4) = moment_err(profile, &y3);
    let y4: Vec<f64> = (0..profile.len())
        .map(|i| {
            (0.5 * fpp[i] * p0.p[i] * p0.p[i] - (profile.t[i] + c0) * p0.pp[i]) * profile.wp[i]
        })
        .collect();
    let (b4, e5) = moment_err(profile, &y4);
    ProjectionConstants {
        c0,
        c1: -a2 / m0,
        c2: -a3 / m0,
        c3: b3 / m0,
        c4: b4 / m0,
        h0_graph: c0,
        h0_cmc: None,
        quadrature_error: [e0, e1, e2, e3, e4, e5].into_iter().fold(0.0, f64::max),
    }
}

/// One member of the corrector family: source q_ℓ, its corrector, and the
/// name of the geometric prefactor ψ_ℓ it multiplies.
#[derive(Debug, Clone)]
pub struct FamilyEntry {
    pub ell: usize,
    pub prefactor: &'static str,
    pub solution: CorrectorSolution,
}

#[derive(Debug, Clone)]
pub struct CorrectorFamily {
    pub entries: Vec<FamilyEntry>,
    pub p0_graph: CorrectorSolution,
}

pub fn build_family(
    profile: &HeteroclinicProfile,
    constants: &ProjectionConstants,
) -> Result<CorrectorFamily, CorrectorError> {
    let h0 = constants.h0_graph;
    let p0 = p0_graph(profile, constants.c0);
    let fpp = profile.fpp_w();
    let n = profile.len();
    let (t, wp) = (&profile.t, &profile.wp);
    let sources: [(&'static str, Vec<f64>); 5] = [
        (
            "-sum_k3",
            (0..n).map(|i| (t[i] + h0).powi(2) * wp[i] + constants.c1 * wp[i]).collect(),
        ),
        ("lap_A2", (0..n).map(|i| p0.p[i] - constants.c3 * wp[i]).collect()),
        (
            "-sum_k4",
            (0..n).map(|i| (t[i] + h0).powi(3) * wp[i] + constants.c2 * wp[i]).collect(),
        ),
        (
            "A4",
            (0..n)
                .map(|i| {
                    0.5 * fpp[i] * p0.p[i] * p0.p[i] - (t[i] + h0) * p0.pp[i] - constants.c4 * wp[i]
                })
                .collect(),
        ),
        ("-2_sum_k3_h1", (0..n).map(|i| (t[i] + h0) * wp[i]).collect()),
    ];
    let mut entries = Vec::with_capacity(5);
    for (k, (prefactor, q)) in sources.into_iter().enumerate() {
        let solution = solve_corrector(profile, &q)?;
        if !solution.bounded {
            return Err(CorrectorError::OrthogonalityViolation {
                ell: k + 1,
                projection: solution.projection,
            });
        }
        entries.push(FamilyEntry { ell: k + 1, prefactor, solution });
    }
    Ok(CorrectorFamily { entries, p0_graph: p0 })
}

/// Leading CMC corrector φ0 = -Tr(A) p0_dtn and the shift h0.
#[derive(Debug, Clone)]
pub struct CmcLeading {
    pub phi0: Vec<f64>,
    pub phi0_prime: Vec<f64>,
    /// h0 from the slope balance Tr(A^2)∫(t+h0)w'^2 = -∫(Tr(A)φ0' - ½f''φ0^2)w'.
    pub h0_cmc: f64,
    /// h0 from the balance with unit Tr(A^2) and +½f''φ0^2, as printed.
    pub h0_literal: f64,
}

pub fn cmc_phi0_h0(profile: &HeteroclinicProfile, trace_a: f64, trace_a2: f64) -> CmcLeading {
    let base = p0_dtn(profile);
    let phi0: Vec<f64> = base.p.iter().map(|p| -trace_a * p).collect();
    let phi0_prime: Vec<f64> = base.pp.iter().map(|p| -trace_a * p).collect();
    let fpp = profile.fpp_w();
    let n = profile.len();
    let w2: Vec<f64> = profile.wp.iter().map(|x| x * x).collect();
    let m0 = quad::integrate(&w2, profile.h);
    let tw2: Vec<f64> = profile.t.iter().zip(&w2).map(|(t, x)| t * x).collect();
    let m1 = quad::integrate(&tw2, profile.h);
    let k = |sign: f64| -> f64 {
        let y: Vec<f64> = (0..n)
            .map(|i| {
                (trace_a * phi0_prime[i] + sign * 0.5 * fpp[i] * phi0[i] * phi0[i]) * profile.wp[i]
            })
            .collect();
        quad::integrate(&y, profile.h)
    };
    let h0_cmc = if trace_a2 == 0.0 { -m1 / m0 } else { (-k(-1.0) / trace_a2 - m1) / m0 };
    let h0_literal = (-k(1.0) - m1) / m0;
    CmcLeading { phi0, phi0_prime, h0_cmc, h0_literal }
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
    fn zero_source_zero_corrector() {
        let p = ac();
        let s = solve_corrector(&p, &vec![0.0; p.len()]).unwrap();
        assert!(s.bounded && s.p.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn w_prime_source_unbounded() {
        let p = ac();
        let s = solve_corrector(&p, &p.wp).unwrap();
        assert!(!s.bounded && s.projection > 0.4);
        assert_eq!(s.p[0], 0.0);
        assert_eq!(s.pp[0], 0.0);
        assert!(s.p.last().unwrap().abs() > 1e6);
    }

    #[test]
    fn grid_mismatch() {
        let p = ac();
        assert!(matches!(
            solve_corrector(&p, &[1.0, 2.0]),
            Err(CorrectorError::GridMismatch { .. })
        ));
    }

    #[test]
    fn p0_graph_is_bounded_with_zero_cauchy_data() {
        let p = ac();
        let c = compute_constants(&p);
        let s = p0_graph(&p, c.c0);
        assert!(s.bounded);
        assert_eq!(s.p[0], 0.0);
        assert!(s.pp[0].abs() < 1e-15);
        assert!(s.residual(&p) < 1e-7);
        let rate = tail_rate(&p, &s.p, (10.0, 18.0));
        assert!((rate / p.gamma - 1.0).abs() < 0.1, "{rate}");
    }

    #[test]
    fn p0_dtn_slope() {
        let p = ac();
        let s = p0_dtn(&p);
        assert_relative_eq!(s.pp[0], 2.0 / 3.0, epsilon = 1e-10);
        assert!(s.residual(&p) < 1e-7);
        assert!(s.p[1..].iter().all(|v| *v > 0.0));
    }

    #[test]
    fn family_orthogonal() {
        let p = ac();
        let c = compute_constants(&p);
        assert!(c.c1 < 0.0);
        let fam = build_family(&p, &c).unwrap();
        for e in &fam.entries {
            assert!(e.solution.projection.abs() <= 1e-9, "{} {}", e.ell, e.solution.projection);
            assert!(e.solution.residual(&p) < 1e-7);
        }
    }

    #[test]
    fn cmc_zero_trace() {
        let p = ac();
        let l = cmc_phi0_h0(&p, 0.0, 0.0);
        assert!(l.phi0.iter().all(|v| *v == 0.0));
        assert_relative_eq!(l.h0_cmc, compute_constants(&p).c0, epsilon = 1e-14);
    }
}
