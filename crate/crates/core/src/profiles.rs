//! Monostable nonlinearities and the half-line heteroclinic profile
//! w'' + f(w) = 0, w(0) = 0, w(+inf) = 1.
//!
//! The profile is obtained by inverting the quadrature
//! t = ∫_0^w ds / sqrt(2 ∫_s^1 f), written in the log variable
//! v = -ln(1 - w) so that the approach to 1 stays resolved.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{quad, uniform_interp};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("nonlinearity is not monostable: {0}")]
    NotMonostable(String),
    #[error("inner integral ∫_s^1 f is {value:e} at s = {s}")]
    QuadratureDivergence { s: f64, value: f64 },
    #[error("tail beyond T_max contributes {tail:e}, above tolerance {tol:e}")]
    TailNotResolved { tail: f64, tol: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonlinearityKind {
    FisherKpp,
    AllenCahn,
    Custom,
}

impl fmt::Display for NonlinearityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::FisherKpp => "fisher_kpp",
            Self::AllenCahn => "allen_cahn",
            Self::Custom => "custom",
        })
    }
}

type DerivFn = Arc<dyn Fn(f64) -> [f64; 5] + Send + Sync>;

#[derive(Clone)]
enum Repr {
    Poly(Vec<f64>),
    Fns(DerivFn),
}

/// f together with four derivatives.
#[derive(Clone)]
pub struct Nonlinearity {
    pub kind: NonlinearityKind,
    repr: Repr,
    pub validated_range: (f64, f64),
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_struct("Nonlinearity");
        d.field("kind", &self.kind);
        if let Repr::Poly(c) = &self.repr {
            d.field("coefficients", c);
        }
        d.finish()
    }
}

const MONOSTABLE_SAMPLES: usize = 10_000;

/// Build and validate a nonlinearity. Custom kinds take polynomial
/// coefficients `c[k]` of `s^k`.
pub fn make_nonlinearity(
    kind: NonlinearityKind,
    custom_coefficients: Option<&[f64]>,
) -> Result<Nonlinearity, ProfileError> {
    let coeffs = match kind {
        NonlinearityKind::AllenCahn => vec![0.0, 1.0, 0.0, -1.0],
        NonlinearityKind::FisherKpp => vec![0.0, 1.0, -1.0],
        NonlinearityKind::Custom => custom_coefficients
            .ok_or_else(|| ProfileError::NotMonostable("custom kind needs coefficients".into()))?
            .to_vec(),
    };
    Nonlinearity { kind, repr: Repr::Poly(coeffs), validated_range: (0.0, 1.0) }.validated()
}

impl Nonlinearity {
    /// Custom nonlinearity from an evaluator returning [f, f', f'', f''', f''''].
    pub fn from_fn(
        derivs: impl Fn(f64) -> [f64; 5] + Send + Sync + 'static,
    ) -> Result<Self, ProfileError> {
        Nonlinearity {
            kind: NonlinearityKind::Custom,
            repr: Repr::Fns(Arc::new(derivs)),
            validated_range: (0.0, 1.0),
        }
        .validated()
    }

    fn validated(self) -> Result<Self, ProfileError> {
        let [f0, ..] = self.derivs(0.0);
        let [f1, fp1, ..] = self.derivs(1.0);
        if f0.abs() > 1e-12 || f1.abs() > 1e-12 {
            return Err(ProfileError::NotMonostable(format!("f(0) = {f0:e}, f(1) = {f1:e}")));
        }
        if fp1 >= 0.0 {
            return Err(ProfileError::NotMonostable(format!("f'(1) = {fp1} is not negative")));
        }
        for i in 1..=MONOSTABLE_SAMPLES {
            let s = i as f64 / (MONOSTABLE_SAMPLES + 1) as f64;
            let v = self.f(s);
            if !(v > 0.0) {
                return Err(ProfileError::NotMonostable(format!("f({s}) = {v:e} is not positive")));
            }
        }
        Ok(self)
    }

    pub fn coefficients(&self) -> Option<&[f64]> {
        match &self.repr {
            Repr::Poly(c) => Some(c),
            Repr::Fns(_) => None,
        }
    }

    /// [f, f', f'', f''', f''''] at `s`.
    pub fn derivs(&self, s: f64) -> [f64; 5] {
        match &self.repr {
            Repr::Fns(g) => g(s),
            Repr::Poly(c) => {
                let mut out = [0.0; 5];
                for (d, o) in out.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for k in (d..c.len()).rev() {
                        let fall: f64 = (0..d).map(|j| (k - j) as f64).product();
                        acc = acc * s + c[k] * fall;
                    }
                    *o = acc;
                }
                out
            }
        }
    }

    pub fn f(&self, s: f64) -> f64 {
        match &self.repr {
            Repr::Poly(c) => c.iter().rev().fold(0.0, |acc, ck| acc * s + ck),
            Repr::Fns(g) => g(s)[0],
        }
    }

    pub fn fp(&self, s: f64) -> f64 {
        self.derivs(s)[1]
    }

    pub fn fpp(&self, s: f64) -> f64 {
        self.derivs(s)[2]
    }

    /// Asymptotic decay rate sqrt(-f'(1)).
    pub fn gamma(&self) -> f64 {
        (-self.fp(1.0)).sqrt()
    }

    /// F(δ) = ∫_{1-δ}^1 f(s) ds.
    pub fn upper_antiderivative(&self, delta: f64) -> f64 {
        if delta < 1e-3 {
            let [_, d1, d2, d3, d4] = self.derivs(1.0);
            let d = delta;
            d * d * (-d1 / 2.0 + d * (d2 / 6.0 + d * (-d3 / 24.0 + d * d4 / 120.0)))
        } else {
            let panels = (delta / 0.1).ceil() as usize;
            let w = delta / panels as f64;
            (0..panels)
                .map(|k| quad::gl_integrate(k as f64 * w, (k + 1) as f64 * w, |u| self.f(1.0 - u)))
                .sum()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub t_max: f64,
    pub nodes: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { t_max: 20.0, nodes: 4001 }
    }
}

/// Cumulative t(v) on panels of the log variable.
#[derive(Debug, Clone)]
struct LogPanels {
    dv: f64,
    t_at: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    pub w: f64,
    pub wp: f64,
    pub wpp: f64,
}

#[derive(Debug, Clone)]
pub struct HeteroclinicProfile {
    pub nonlinearity: Nonlinearity,
    pub t: Vec<f64>,
    pub h: f64,
    pub w: Vec<f64>,
    pub wp: Vec<f64>,
    pub wpp: Vec<f64>,
    /// v = -ln(1 - w) at the nodes.
    pub v: Vec<f64>,
    pub gamma: f64,
    pub closed_form: bool,
    panels: LogPanels,
}

impl HeteroclinicProfile {
    pub fn t_max(&self) -> f64 {
        *self.t.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// w'(0) = sqrt(2 ∫_0^1 f).
    pub fn wp0(&self) -> f64 {
        self.wp[0]
    }

    fn g(&self, v: f64) -> f64 {
        integrand(&self.nonlinearity, v)
    }

    fn t_of_v(&self, v: f64) -> f64 {
        let k = ((v / self.panels.dv).floor() as usize).min(self.panels.t_at.len() - 1);
        let v0 = k as f64 * self.panels.dv;
        self.panels.t_at[k] + quad::gl_integrate(v0, v, |x| self.g(x))
    }

    fn point_from_v(&self, v: f64) -> ProfilePoint {
        let w = -(-v).exp_m1();
        let wp = (2.0 * self.nonlinearity.upper_antiderivative((-v).exp())).sqrt();
        ProfilePoint { w, wp, wpp: -self.nonlinearity.f(w) }
    }

    /// Profile values at an arbitrary t in [0, T_max + 1].
    pub fn eval(&self, t: f64) -> ProfilePoint {
        let t = t.clamp(0.0, self.t_max() + 1.0);
        let mut v = if t <= self.t_max() {
            uniform_interp(0.0, self.h, &self.v, t)
        } else {
            self.v.last().unwrap() + (t - self.t_max()) * self.gamma
        };
        for _ in 0..8 {
            let dv = (self.t_of_v(v) - t) / self.g(v);
            v -= dv;
            if dv.abs() <= 1e-15 * v.max(1.0) {
                break;
            }
        }
        self.point_from_v(v.max(0.0))
    }

    /// f'(w) at the nodes.
    pub fn fp_w(&self) -> Vec<f64> {
        self.w.iter().map(|&w| self.nonlinearity.fp(w)).collect()
    }

    pub fn fpp_w(&self) -> Vec<f64> {
        self.w.iter().map(|&w| self.nonlinearity.fpp(w)).collect()
    }

    /// Closed form for allen_cahn, if attached.
    pub fn closed_form_value(&self, t: f64) -> Option<f64> {
        self.closed_form.then(|| (t / std::f64::consts::SQRT_2).tanh())
    }

    /// max |w'' + f(w)| at interior nodes, with w'' from 4th-order differences.
    pub fn residual(&self) -> f64 {
        let n = self.len();
        let h2 = self.h * self.h;
        (2..n - 2)
            .map(|i| {
                let d2 = (-self.w[i - 2] + 16.0 * self.w[i - 1] - 30.0 * self.w[i]
                    + 16.0 * self.w[i + 1]
                    - self.w[i + 2])
                    / (12.0 * h2);
                (d2 + self.nonlinearity.f(self.w[i])).abs()
            })
            .fold(0.0, f64::max)
    }
}

fn integrand(f: &Nonlinearity, v: f64) -> f64 {
    let d = (-v).exp();
    d / (2.0 * f.upper_antiderivative(d)).sqrt()
}

pub fn solve_profile(f: &Nonlinearity, grid: GridSpec) -> Result<HeteroclinicProfile, ProfileError> {
    if grid.t_max < 20.0 || grid.nodes < 512 {
        return Err(ProfileError::InvalidGrid(format!(
            "need T_max >= 20 and at least 512 nodes, got {} and {}",
            grid.t_max, grid.nodes
        )));
    }
    let dv = 0.05;
    let (gx, _) = quad::gl20();
    let mut t_at = vec![0.0];
    let mut k = 0usize;
    while *t_at.last().unwrap() < grid.t_max + 2.0 {
        let (a, b) = (k as f64 * dv, (k + 1) as f64 * dv);
        for x in gx {
            let v = 0.5 * (a + b) + 0.5 * (b - a) * x;
            let delta = (-v).exp();
            let big_f = f.upper_antiderivative(delta);
            if !(big_f > 0.0) {
                return Err(ProfileError::QuadratureDivergence { s: 1.0 - delta, value: big_f });
            }
        }
        t_at.push(t_at[k] + quad::gl_integrate(a, b, |x| integrand(f, x)));
        k += 1;
        if k > 200_000 {
            return Err(ProfileError::QuadratureDivergence { s: 1.0, value: 0.0 });
        }
    }
    let n = grid.nodes;
    let h = grid.t_max / (n - 1) as f64;
    let mut prof = HeteroclinicProfile {
        nonlinearity: f.clone(),
        t: (0..n).map(|i| i as f64 * h).collect(),
        h,
        w: vec![0.0; n],
        wp: vec![0.0; n],
        wpp: vec![0.0; n],
        v: vec![0.0; n],
        gamma: f.gamma(),
        closed_form: f.kind == NonlinearityKind::AllenCahn,
        panels: LogPanels { dv, t_at },
    };
    let mut v = 0.0;
    for i in 1..n {
        let ti = prof.t[i];
        v += h / prof.g(v);
        for _ in 0..20 {
            let dv = (prof.t_of_v(v) - ti) / prof.g(v);
            v -= dv;
            if dv.abs() <= 1e-15 * v.max(1.0) {
                break;
            }
        }
        prof.v[i] = v;
    }
    for i in 0..n {
        let p = prof.point_from_v(prof.v[i]);
        prof.w[i] = p.w;
        prof.wp[i] = p.wp;
        prof.wpp[i] = p.wpp;
    }
    Ok(prof)
}

/// Moment ∫_0^∞ y dt for integrand samples on the profile grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moment {
    pub value: f64,
    pub error: f64,
}

/// Quadrature on [0, T_max] plus the exponential tail y(T)/decay.
pub fn half_line_moment(
    profile: &HeteroclinicProfile,
    integrand: &[f64],
    decay: f64,
    tol: f64,
) -> Result<Moment, ProfileError> {
    if integrand.len() != profile.len() {
        return Err(ProfileError::InvalidGrid("integrand length differs from profile".into()));
    }
    let (q, rich) = quad::integrate_with_error(integrand, profile.h);
    let tail = integrand.last().unwrap() / decay;
    let error = rich + tail.abs();
    if tail.abs() > tol {
        return Err(ProfileError::TailNotResolved { tail, tol });
    }
    Ok(Moment { value: q + tail, error })
}

/// Moment without tolerance enforcement.
pub fn moment(profile: &HeteroclinicProfile, integrand: &[f64]) -> f64 {
    quad::integrate(integrand, profile.h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ac() -> HeteroclinicProfile {
        let f = make_nonlinearity(NonlinearityKind::AllenCahn, None).unwrap();
        solve_profile(&f, GridSpec::default()).unwrap()
    }

    #[test]
    fn builtin_derivatives() {
        let f = make_nonlinearity(NonlinearityKind::AllenCahn, None).unwrap();
        assert_eq!(f.derivs(1.0), [0.0, -2.0, -6.0, -6.0, 0.0]);
        let g = make_nonlinearity(NonlinearityKind::FisherKpp, None).unwrap();
        assert_eq!(g.fp(1.0), -1.0);
    }

    #[test]
    fn rejects_negative_custom() {
        // s(1-s)(s-2) = -2s + 3s^2 - s^3
        let r = make_nonlinearity(NonlinearityKind::Custom, Some(&[0.0, -2.0, 3.0, -1.0]));
        assert!(matches!(r, Err(ProfileError::NotMonostable(_))));
    }

    #[test]
    fn allen_cahn_closed_form() {
        let p = ac();
        let dev = p
            .t
            .iter()
            .zip(&p.w)
            .map(|(t, w)| (w - p.closed_form_value(*t).unwrap()).abs())
            .fold(0.0, f64::max);
        assert!(dev <= 1e-9, "{dev}");
        assert_relative_eq!(p.wp0(), std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-14);
        let e = p.eval(3.3337);
        assert_relative_eq!(e.w, (3.3337 / std::f64::consts::SQRT_2).tanh(), epsilon = 1e-13);
    }

    #[test]
    fn moments() {
        let p = ac();
        let sq: Vec<f64> = p.wp.iter().map(|x| x * x).collect();
        let m = half_line_moment(&p, &sq, 2.0 * p.gamma, 1e-10).unwrap();
        assert_relative_eq!(m.value, std::f64::consts::SQRT_2 / 3.0, epsilon = 1e-12);
        let m1 = half_line_moment(&p, &p.wp, p.gamma, 1e-10).unwrap();
        assert_relative_eq!(m1.value, 1.0, epsilon = 1e-11);
        let z = vec![0.0; p.len()];
        assert_eq!(half_line_moment(&p, &z, 1.0, 1e-10).unwrap().value, 0.0);
    }
}
