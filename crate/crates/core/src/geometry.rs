//! Surfaces of revolution in R^3 (catenoid, Delaunay unduloids, sphere,
//! cylinder, plane) in conformal meridian coordinates: the metric is
//! ρ(σ)²(dσ² + dθ²). Principal curvatures are eigenvalues of A = -dN, with
//! the normal pointing toward the axis on closed-up CMC surfaces.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{fd, quad};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("Delaunay parameter tau = {0} outside (0, 1/4]")]
    TauOutOfRange(f64),
    #[error("offset |z|·max|k| = {0} reaches a focal point")]
    FocalPointCrossing(f64),
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("Jacobi operator has a kernel in the symmetry class (smallest singular value {0:e})")]
    KernelObstruction(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SurfaceKind {
    Catenoid,
    Delaunay { tau: f64 },
    Sphere { radius: f64 },
    Cylinder { radius: f64 },
    Plane,
}

/// Geometry of the meridian at one value of σ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Meridian {
    /// distance from the axis; the parallel circle has length 2πρ
    pub rho: f64,
    pub rho_s: f64,
    /// meridian speed, dS = λ dσ (equal to ρ in conformal coordinates)
    pub lambda: f64,
    pub lambda_s: f64,
    pub k_mer: f64,
    pub k_mer_s: f64,
    pub k_par: f64,
    pub k_par_s: f64,
    /// embedding of the meridian point (radius, height) and the normal
    pub height: f64,
    pub n_r: f64,
    pub n_z: f64,
}

/// Curvature functionals from the principal curvatures at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureField {
    pub k: Vec<f64>,
    pub a2: f64,
    pub sum_k3: f64,
    pub sum_k4: f64,
    /// Tr(A^j), j = 1..4
    pub trace_powers: [f64; 4],
    pub h: f64,
}

impl CurvatureField {
    pub fn from_principal(k: &[f64]) -> Self {
        let tr = |j: i32| k.iter().map(|x| x.powi(j)).sum::<f64>();
        let trace_powers = [tr(1), tr(2), tr(3), tr(4)];
        CurvatureField {
            k: k.to_vec(),
            a2: trace_powers[1],
            sum_k3: trace_powers[2],
            sum_k4: trace_powers[3],
            trace_powers,
            h: trace_powers[0],
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.k.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DelaunayParams {
    pub tau: f64,
    pub phi_minus: f64,
    pub phi_plus: f64,
    /// period in the arc parameter s
    pub period_s: f64,
    /// period along the axis
    pub period: f64,
}

const TAYLOR_ORDER: usize = 24;
const TAYLOR_STEP: f64 = 0.05;

/// Taylor-series orbit of φ̈ = φ(1 - 2τ) - 2φ³, ψ̇ = φ² + τ from the neck.
#[derive(Debug, Clone)]
pub struct DelaunayOrbit {
    pub params: DelaunayParams,
    starts: Vec<f64>,
    phi: Vec<[f64; TAYLOR_ORDER + 1]>,
    psi: Vec<[f64; TAYLOR_ORDER + 2]>,
    cylinder: bool,
}

fn taylor_coeffs(tau: f64, phi0: f64, dphi0: f64, psi0: f64) -> ([f64; TAYLOR_ORDER + 1], [f64; TAYLOR_ORDER + 2]) {
    let mut a = [0.0; TAYLOR_ORDER + 1];
    let mut c = [0.0; TAYLOR_ORDER + 1];
    let mut d = [0.0; TAYLOR_ORDER + 1];
    let mut b = [0.0; TAYLOR_ORDER + 2];
    a[0] = phi0;
    a[1] = dphi0;
    for n in 0..=TAYLOR_ORDER {
        c[n] = (0..=n).map(|j| a[j] * a[n - j]).sum();
        d[n] = (0..=n).map(|j| c[j] * a[n - j]).sum();
        if n + 2 <= TAYLOR_ORDER {
            a[n + 2] = (a[n] * (1.0 - 2.0 * tau) - 2.0 * d[n]) / ((n + 1) * (n + 2)) as f64;
        }
    }
    b[0] = psi0;
    for n in 0..=TAYLOR_ORDER {
        b[n + 1] = (c[n] + if n == 0 { tau } else { 0.0 }) / (n + 1) as f64;
    }
    (a, b)
}

fn poly(c: &[f64], x: f64, deriv: usize) -> f64 {
    let mut acc = 0.0;
    for k in (deriv..c.len()).rev() {
        let fall: f64 = (0..deriv).map(|j| (k - j) as f64).product();
        acc = acc * x + c[k] * fall;
    }
    acc
}

impl DelaunayOrbit {
    pub fn new(tau: f64) -> Result<Self, GeometryError> {
        if !(tau > 0.0 && tau <= 0.25) {
            return Err(GeometryError::TauOutOfRange(tau));
        }
        let disc = (1.0 - 4.0 * tau).max(0.0).sqrt();
        let phi_minus = 2.0 * tau / (1.0 + disc);
        let phi_plus = 0.5 * (1.0 + disc);
        let cylinder = disc == 0.0;
        let mut orbit = DelaunayOrbit {
            params: DelaunayParams { tau, phi_minus, phi_plus, period_s: 2.0 * PI, period: 0.0 },
            starts: Vec::new(),
            phi: Vec::new(),
            psi: Vec::new(),
            cylinder,
        };
        let (mut p, mut dp, mut q) = (phi_minus, 0.0, 0.0);
        let mut s = 0.0;
        let mut bulge = None;
        let mut horizon = 40.0;
        while s < horizon {
            let (a, b) = taylor_coeffs(tau, p, dp, q);
            if bulge.is_none() && !cylinder {
                let d_end = poly(&a, TAYLOR_STEP, 1);
                if s > 0.0 && d_end <= 0.0 && dp > 0.0 {
                    let mut x = TAYLOR_STEP * dp / (dp - d_end);
                    for _ in 0..50 {
                        let dx = poly(&a, x, 1) / poly(&a, x, 2);
                        x -= dx;
                        if dx.abs() < 1e-16 {
                            break;
                        }
                    }
                    let sb = s + x;
                    bulge = Some(sb);
                    horizon = 4.0 * sb + 2.0 * TAYLOR_STEP;
                }
            }
            orbit.starts.push(s);
            orbit.phi.push(a);
            orbit.psi.push(b);
            p = poly(&a, TAYLOR_STEP, 0);
            dp = poly(&a, TAYLOR_STEP, 1);
            q = poly(&b, TAYLOR_STEP, 0);
            s += TAYLOR_STEP;
            if cylinder && s >= 4.0 * PI + TAYLOR_STEP {
                break;
            }
        }
        if let Some(sb) = bulge {
            orbit.params.period_s = 2.0 * sb;
        }
        orbit.params.period = 2.0 * orbit.raw(orbit.params.period_s / 2.0).3;
        Ok(orbit)
    }

    pub fn is_cylinder(&self) -> bool {
        self.cylinder
    }

    /// (φ, φ̇, φ̈, ψ) on the stored range.
    fn raw(&self, s: f64) -> (f64, f64, f64, f64) {
        let k = ((s / TAYLOR_STEP).floor() as usize).min(self.starts.len() - 1);
        let x = s - self.starts[k];
        let a = &self.phi[k];
        (poly(a, x, 0), poly(a, x, 1), poly(a, x, 2), poly(&self.psi[k], x, 0))
    }

    /// (φ, φ̇, φ̈, ψ) at any s, by evenness about the neck and periodicity.
    pub fn eval(&self, s: f64) -> (f64, f64, f64, f64) {
        let period = self.params.period_s;
        let m = (s / period).floor();
        let r = s - m * period;
        let (p, dp, ddp, q) = self.raw(r);
        (p, dp, ddp, q + m * self.params.period)
    }

    /// Largest stored s (at least two periods).
    pub fn stored_range(&self) -> f64 {
        self.starts.last().unwrap() + TAYLOR_STEP
    }

    /// max |φ̇² + (φ²+τ)² - φ²| over the stored orbit.
    pub fn first_integral_error(&self) -> f64 {
        let tau = self.params.tau;
        let n = (self.stored_range() / 0.01) as usize;
        (0..n)
            .map(|i| {
                let (p, dp, _, _) = self.raw(i as f64 * 0.01);
                (dp * dp + (p * p + tau).powi(2) - p * p).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Mean curvature along the stored orbit from the meridian curve itself.
    pub fn mean_curvature_samples(&self, n: usize) -> Vec<f64> {
        let tau = self.params.tau;
        (0..n)
            .map(|i| {
                let s = i as f64 * self.stored_range() * 0.999 / n as f64;
                let (p, dp, ddp, _) = self.raw(s);
                let dpsi = p * p + tau;
                let ddpsi = 2.0 * p * dp;
                let speed = (dp * dp + dpsi * dpsi).sqrt();
                let k_mer = (dp * ddpsi - dpsi * ddp) / speed.powi(3);
                let k_par = dpsi / (p * speed);
                k_mer + k_par
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct Surface {
    pub kind: SurfaceKind,
    pub orbit: Option<DelaunayOrbit>,
}

pub fn catenoid() -> Surface {
    Surface { kind: SurfaceKind::Catenoid, orbit: None }
}

pub fn delaunay(tau: f64) -> Result<(Surface, DelaunayParams), GeometryError> {
    let orbit = DelaunayOrbit::new(tau)?;
    let params = orbit.params;
    Ok((Surface { kind: SurfaceKind::Delaunay { tau }, orbit: Some(orbit) }, params))
}

pub fn sphere(radius: f64) -> Surface {
    Surface { kind: SurfaceKind::Sphere { radius }, orbit: None }
}

pub fn cylinder(radius: f64) -> Surface {
    Surface { kind: SurfaceKind::Cylinder { radius }, orbit: None }
}

pub fn plane() -> Surface {
    Surface { kind: SurfaceKind::Plane, orbit: None }
}

impl Surface {
    pub fn from_kind(kind: SurfaceKind) -> Result<Self, GeometryError> {
        Ok(match kind {
            SurfaceKind::Catenoid => catenoid(),
            SurfaceKind::Delaunay { tau } => delaunay(tau)?.0,
            SurfaceKind::Sphere { radius } => sphere(radius),
            SurfaceKind::Cylinder { radius } => cylinder(radius),
            SurfaceKind::Plane => plane(),
        })
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            SurfaceKind::Catenoid => "catenoid",
            SurfaceKind::Delaunay { .. } => "delaunay",
            SurfaceKind::Sphere { .. } => "sphere",
            SurfaceKind::Cylinder { .. } => "cylinder",
            SurfaceKind::Plane => "plane",
        }
    }

    pub fn is_minimal(&self) -> bool {
        matches!(self.kind, SurfaceKind::Catenoid | SurfaceKind::Plane)
    }

    /// Period in σ for periodic surfaces.
    pub fn period(&self) -> Option<f64> {
        self.orbit.as_ref().map(|o| o.params.period_s)
    }

    pub fn meridian(&self, s: f64) -> Meridian {
        match self.kind {
            SurfaceKind::Catenoid => {
                let (ch, sh, th) = (s.cosh(), s.sinh(), s.tanh());
                let sech2 = 1.0 / (ch * ch);
                Meridian {
                    rho: ch,
                    rho_s: sh,
                    lambda: ch,
                    lambda_s: sh,
                    k_mer: sech2,
                    k_mer_s: -2.0 * sech2 * th,
                    k_par: -sech2,
                    k_par_s: 2.0 * sech2 * th,
                    height: s,
                    n_r: 1.0 / ch,
                    n_z: -th,
                }
            }
            SurfaceKind::Delaunay { tau } => {
                let (p, dp, _, q) = self.orbit.as_ref().expect("orbit").eval(s);
                let p2 = p * p;
                Meridian {
                    rho: p,
                    rho_s: dp,
                    lambda: p,
                    lambda_s: dp,
                    k_mer: 1.0 - tau / p2,
                    k_mer_s: 2.0 * tau * dp / (p2 * p),
                    k_par: 1.0 + tau / p2,
                    k_par_s: -2.0 * tau * dp / (p2 * p),
                    height: q,
                    n_r: -(p2 + tau) / p,
                    n_z: dp / p,
                }
            }
            SurfaceKind::Sphere { radius } => {
                let (sech, th) = (1.0 / s.cosh(), s.tanh());
                Meridian {
                    rho: radius * sech,
                    rho_s: -radius * sech * th,
                    lambda: radius * sech,
                    lambda_s: -radius * sech * th,
                    k_mer: 1.0 / radius,
                    k_mer_s: 0.0,
                    k_par: 1.0 / radius,
                    k_par_s: 0.0,
                    height: radius * th,
                    n_r: -sech,
                    n_z: -th,
                }
            }
            SurfaceKind::Cylinder { radius } => Meridian {
                rho: radius,
                rho_s: 0.0,
                lambda: radius,
                lambda_s: 0.0,
                k_mer: 0.0,
                k_mer_s: 0.0,
                k_par: 1.0 / radius,
                k_par_s: 0.0,
                height: radius * s,
                n_r: -1.0,
                n_z: 0.0,
            },
            SurfaceKind::Plane => {
                let e = s.exp();
                Meridian {
                    rho: e,
                    rho_s: e,
                    lambda: e,
                    lambda_s: e,
                    k_mer: 0.0,
                    k_mer_s: 0.0,
                    k_par: 0.0,
                    k_par_s: 0.0,
                    height: 0.0,
                    n_r: 0.0,
                    n_z: 1.0,
                }
            }
        }
    }

    /// Principal curvatures (k1 = parallel, k2 = meridian).
    pub fn curvatures(&self, s: f64) -> CurvatureField {
        let m = self.meridian(s);
        CurvatureField::from_principal(&[m.k_par, m.k_mer])
    }

    /// Embedded point for (σ, θ).
    pub fn embed(&self, s: f64, theta: f64) -> [f64; 3] {
        let m = self.meridian(s);
        [m.rho * theta.cos(), m.rho * theta.sin(), m.height]
    }

    pub fn normal(&self, s: f64, theta: f64) -> [f64; 3] {
        let m = self.meridian(s);
        [m.n_r * theta.cos(), m.n_r * theta.sin(), m.n_z]
    }
}

/// Fermi metric coefficients on the parallel surface at offset z:
/// exact (I - zA) form and the quadratic expansion g0 - 2z g0A + z² g0A².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FermiSample {
    pub s: f64,
    pub g_ss: f64,
    pub g_tt: f64,
    pub g_ss_quadratic: f64,
    pub g_tt_quadratic: f64,
}

pub fn fermi_metric(surface: &Surface, s_grid: &[f64], z: f64) -> Result<Vec<FermiSample>, GeometryError> {
    s_grid
        .iter()
        .map(|&s| {
            let m = surface.meridian(s);
            let kmax = m.k_mer.abs().max(m.k_par.abs());
            if z.abs() * kmax >= 1.0 {
                return Err(GeometryError::FocalPointCrossing(z.abs() * kmax));
            }
            let (l2, r2) = (m.lambda * m.lambda, m.rho * m.rho);
            Ok(FermiSample {
                s,
                g_ss: l2 * (1.0 - z * m.k_mer).powi(2),
                g_tt: r2 * (1.0 - z * m.k_par).powi(2),
                g_ss_quadratic: l2 * (1.0 - 2.0 * z * m.k_mer + z * z * m.k_mer * m.k_mer),
                g_tt_quadratic: r2 * (1.0 - 2.0 * z * m.k_par + z * z * m.k_par * m.k_par),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParallelMeanCurvature {
    pub partial_sum: f64,
    pub remainder_bound: f64,
    pub exact: f64,
}

/// H_z = Σ_k Tr(A^{k+1}) z^k truncated after `k_terms` + 1 terms.
pub fn mean_curvature_parallel(
    k: &[f64],
    z: f64,
    k_terms: usize,
) -> Result<ParallelMeanCurvature, GeometryError> {
    let kmax = k.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if z.abs() * kmax >= 1.0 {
        return Err(GeometryError::FocalPointCrossing(z.abs() * kmax));
    }
    let partial_sum = (0..=k_terms)
        .map(|j| k.iter().map(|ki| ki.powi(j as i32 + 1)).sum::<f64>() * z.powi(j as i32))
        .sum();
    let remainder_bound = k
        .iter()
        .map(|ki| ki.abs().powi(k_terms as i32 + 2) * z.abs().powi(k_terms as i32 + 1) / (1.0 - (z * ki).abs()))
        .sum();
    let exact = k.iter().map(|ki| ki / (1.0 - z * ki)).sum();
    Ok(ParallelMeanCurvature { partial_sum, remainder_bound, exact })
}

/// Scalar field on an (σ, θ) tensor grid, row-major in σ.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceField {
    pub s0: f64,
    pub ds: f64,
    pub ns: usize,
    pub nt: usize,
    pub data: Vec<f64>,
}

impl SurfaceField {
    pub fn sample(s0: f64, ds: f64, ns: usize, nt: usize, f: impl Fn(f64, f64) -> f64) -> Self {
        let dt = 2.0 * PI / nt as f64;
        let mut data = Vec::with_capacity(ns * nt);
        for i in 0..ns {
            for j in 0..nt {
                data.push(f(s0 + i as f64 * ds, j as f64 * dt));
            }
        }
        SurfaceField { s0, ds, ns, nt, data }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.nt + j]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Max over rows at least `margin` away from the σ ends.
    pub fn interior_max_abs(&self, margin: usize) -> f64 {
        (margin..self.ns - margin)
            .flat_map(|i| (0..self.nt).map(move |j| (i, j)))
            .map(|(i, j)| self.at(i, j).abs())
            .fold(0.0, f64::max)
    }
}

/// Second derivative along the open σ direction, fourth order: five-point
/// central rows inside and six-point one-sided rows at the ends.
fn d2_open(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let w_end: Vec<Vec<f64>> = (0..2)
        .map(|i| fd::fornberg(i as f64, &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0], 2)[2].clone())
        .collect();
    (0..n)
        .map(|i| {
            if i >= 2 && i + 2 < n {
                (-y[i - 2] + 16.0 * y[i - 1] - 30.0 * y[i] + 16.0 * y[i + 1] - y[i + 2]) / (12.0 * h * h)
            } else if i < 2 {
                (0..6).map(|k| w_end[i][k] * y[k]).sum::<f64>() / (h * h)
            } else {
                let r = n - 1 - i;
                (0..6).map(|k| w_end[r][k] * y[n - 1 - k]).sum::<f64>() / (h * h)
            }
        })
        .collect()
}

/// J f = Δ_Γ f + |A|² f in conformal coordinates, fourth-order differences.
pub fn jacobi_apply(surface: &Surface, field: &SurfaceField) -> Result<SurfaceField, GeometryError> {
    if field.nt < 8 || field.ns < 6 {
        return Err(GeometryError::GridTooCoarse(format!("{} x {} nodes", field.ns, field.nt)));
    }
    let (ns, nt) = (field.ns, field.nt);
    let dt = 2.0 * PI / nt as f64;
    let mut out = vec![0.0; ns * nt];
    for j in 0..nt {
        let col: Vec<f64> = (0..ns).map(|i| field.at(i, j)).collect();
        let d2 = d2_open(&col, field.ds);
        for i in 0..ns {
            out[i * nt + j] = d2[i];
        }
    }
    for i in 0..ns {
        let s = field.s0 + i as f64 * field.ds;
        let m = surface.meridian(s);
        let a2 = m.k_mer * m.k_mer + m.k_par * m.k_par;
        for j in 0..nt {
            let at = |k: isize| field.at(i, ((j as isize + k).rem_euclid(nt as isize)) as usize);
            let ftt = (-at(-2) + 16.0 * at(-1) - 30.0 * at(0) + 16.0 * at(1) - at(2)) / (12.0 * dt * dt);
            out[i * nt + j] = (out[i * nt + j] + ftt) / (m.lambda * m.rho) + a2 * at(0);
        }
    }
    Ok(SurfaceField { data: out, ..field.clone() })
}

/// Known Jacobi fields: Delaunay φ̇/φ, (φ+τ/φ)cosθ, (φ+τ/φ)sinθ; catenoid
/// ν·e₃ and ν·x.
pub fn kernel_field_names(surface: &Surface) -> &'static [&'static str] {
    match surface.kind {
        SurfaceKind::Delaunay { .. } => &["phidot_over_phi", "phi_plus_tau_over_phi_cos", "phi_plus_tau_over_phi_sin"],
        SurfaceKind::Catenoid => &["nu_dot_e3", "nu_dot_x"],
        _ => &[],
    }
}

fn kernel_value(surface: &Surface, name: &str, s: f64, th: f64) -> f64 {
    match (surface.kind, name) {
        (SurfaceKind::Delaunay { tau }, _) => {
            let (p, dp, _, _) = surface.orbit.as_ref().expect("orbit").eval(s);
            match name {
                "phidot_over_phi" => dp / p,
                "phi_plus_tau_over_phi_cos" => (p + tau / p) * th.cos(),
                _ => (p + tau / p) * th.sin(),
            }
        }
        (SurfaceKind::Catenoid, "nu_dot_e3") => -s.tanh(),
        (SurfaceKind::Catenoid, _) => 1.0 - s * s.tanh(),
        _ => 0.0,
    }
}

/// Relative residual max|J f| / max|A|²|f| of a kernel field at each
/// resolution (n σ-nodes on one period or on [-2, 2], about n/4 θ-nodes).
pub fn jacobi_kernel_residuals(surface: &Surface, name: &str, sizes: &[usize]) -> Result<Vec<f64>, GeometryError> {
    let (a, b) = match surface.period() {
        Some(p) => (0.0, p),
        None => (-2.0, 2.0),
    };
    sizes
        .iter()
        .map(|&n| {
            let ds = (b - a) / (n - 1) as f64;
            let nt = (n / 4).max(16) & !1;
            let field = SurfaceField::sample(a, ds, n, nt, |s, th| kernel_value(surface, name, s, th));
            let j = jacobi_apply(surface, &field)?;
            Ok(j.max_abs() / jacobi_scale(surface, &field))
        })
        .collect()
}

/// Scale of the two parts of J f, for relative residuals.
pub fn jacobi_scale(surface: &Surface, field: &SurfaceField) -> f64 {
    let mut a2f = 0.0f64;
    for i in 0..field.ns {
        let m = surface.meridian(field.s0 + i as f64 * field.ds);
        let a2 = m.k_mer * m.k_mer + m.k_par * m.k_par;
        for j in 0..field.nt {
            a2f = a2f.max((a2 * field.at(i, j)).abs());
        }
    }
    a2f
}

/// Fourier second-derivative matrix on `n` equispaced nodes of a period `len`.
pub fn fourier_d2(n: usize, len: f64) -> DMatrix<f64> {
    assert!(n % 2 == 0);
    let h = 2.0 * PI / n as f64;
    let scale = (2.0 * PI / len).powi(2);
    DMatrix::from_fn(n, n, |j, k| {
        let v = if j == k {
            -PI * PI / (3.0 * h * h) - 1.0 / 6.0
        } else {
            let d = j as f64 - k as f64;
            let sgn = if (j + n - k) % 2 == 0 { 1.0 } else { -1.0 };
            -sgn / (2.0 * (0.5 * d * h).sin().powi(2))
        };
        v * scale
    })
}

/// Axisymmetric periodic Jacobi solve on a Delaunay surface, even about the
/// neck: h'' + |A|²ρ² h = ρ² g on one period, bordered against the odd
/// translation field φ̇/φ.
pub fn jacobi_solve_periodic(
    surface: &Surface,
    n: usize,
    rhs: &[f64],
) -> Result<Vec<f64>, GeometryError> {
    let len = surface.period().ok_or_else(|| GeometryError::GridTooCoarse("surface is not periodic".into()))?;
    let len = if surface.orbit.as_ref().is_some_and(|o| o.is_cylinder()) { PI } else { len };
    let ds = len / n as f64;
    let d2 = fourier_d2(n, len);
    let mut a = DMatrix::zeros(n + 1, n + 1);
    let mut b = DVector::zeros(n + 1);
    for i in 0..n {
        let m = surface.meridian(i as f64 * ds);
        let a2 = m.k_mer * m.k_mer + m.k_par * m.k_par;
        let r2 = m.lambda * m.rho;
        for k in 0..n {
            a[(i, k)] = d2[(i, k)];
        }
        a[(i, i)] += a2 * r2;
        b[i] = r2 * rhs[i];
        let kern = m.rho_s / m.rho;
        a[(i, n)] = kern;
        a[(n, i)] = kern;
    }
    let svd = a.clone().svd(false, false);
    let smin = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if smin < 1e-10 * smax {
        return Err(GeometryError::KernelObstruction(smin / smax));
    }
    let x = a.lu().solve(&b).ok_or(GeometryError::KernelObstruction(0.0))?;
    Ok(x.iter().take(n).copied().collect())
}

/// Even, bounded solution of Δĥ + |A|²ĥ = g on the catenoid, by variation of
/// parameters with the kernel fields y1 = tanh z and y2 = 1 - z tanh z:
/// ĥ = y1 ∫_0^z y2 R + y2 ∫_z^∞ y1 R with R = cosh²z · g.
#[derive(Debug, Clone)]
pub struct CatenoidJacobiSolution {
    pub dz: f64,
    pub h: Vec<f64>,
    pub hp: Vec<f64>,
}

impl CatenoidJacobiSolution {
    /// (ĥ, ĥ') at z by evenness.
    pub fn eval(&self, z: f64) -> (f64, f64) {
        let a = z.abs();
        let v = crate::numerics::uniform_interp(0.0, self.dz, &self.h, a);
        let d = crate::numerics::uniform_interp(0.0, self.dz, &self.hp, a);
        (v, d * z.signum())
    }
}

pub fn catenoid_jacobi_even(source: impl Fn(f64) -> f64, z_max: f64, nodes: usize) -> CatenoidJacobiSolution {
    let dz = z_max / (nodes - 1) as f64;
    let z: Vec<f64> = (0..nodes).map(|i| i as f64 * dz).collect();
    let r: Vec<f64> = z.iter().map(|&z| z.cosh().powi(2) * source(z)).collect();
    let y1: Vec<f64> = z.iter().map(|z| z.tanh()).collect();
    let y2: Vec<f64> = z.iter().map(|z| 1.0 - z * z.tanh()).collect();
    let a = quad::cumulative(&(0..nodes).map(|i| y2[i] * r[i]).collect::<Vec<_>>(), dz);
    let b = quad::reverse_cumulative(&(0..nodes).map(|i| y1[i] * r[i]).collect::<Vec<_>>(), dz);
    let h = (0..nodes).map(|i| y1[i] * a[i] + y2[i] * b[i]).collect();
    let hp = (0..nodes)
        .map(|i| {
            let sech2 = 1.0 / z[i].cosh().powi(2);
            sech2 * a[i] + (-y1[i] - z[i] * sech2) * b[i]
        })
        .collect();
    CatenoidJacobiSolution { dz, h, hp }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn catenoid_curvatures() {
        let c = catenoid();
        let k = c.curvatures(0.0);
        assert_relative_eq!(k.a2, 2.0, epsilon = 1e-15);
        assert_eq!(k.h, 0.0);
        assert_eq!(k.sum_k3, 0.0);
        let k = c.curvatures(0.7);
        assert_relative_eq!(k.k[1], 1.0 / 0.7f64.cosh().powi(2), epsilon = 1e-15);
    }

    #[test]
    fn delaunay_roots_and_integral() {
        let (s, p) = delaunay(0.2).unwrap();
        assert_relative_eq!(p.phi_minus, (1.0 - 0.2f64.sqrt()) / 2.0, epsilon = 1e-14);
        assert_relative_eq!(p.phi_plus, (1.0 + 0.2f64.sqrt()) / 2.0, epsilon = 1e-14);
        let o = s.orbit.as_ref().unwrap();
        assert!(o.stored_range() >= 2.0 * p.period_s);
        assert!(o.first_integral_error() < 1e-12, "{}", o.first_integral_error());
        let (pb, dpb, _, _) = o.eval(p.period_s / 2.0);
        assert_relative_eq!(pb, p.phi_plus, epsilon = 1e-12);
        assert!(dpb.abs() < 1e-12);
    }

    #[test]
    fn tau_range() {
        assert!(matches!(delaunay(0.3), Err(GeometryError::TauOutOfRange(_))));
        assert!(matches!(delaunay(0.0), Err(GeometryError::TauOutOfRange(_))));
    }

    #[test]
    fn cylinder_limit() {
        let (s, p) = delaunay(0.25).unwrap();
        assert_eq!(p.phi_minus, 0.5);
        let (phi, dphi, _, _) = s.orbit.as_ref().unwrap().eval(3.0);
        assert_eq!(phi, 0.5);
        assert_eq!(dphi, 0.0);
        let h = mean_curvature_parallel(&s.curvatures(1.0).k, 0.1, 60).unwrap();
        assert_relative_eq!(h.partial_sum, 2.0 / (1.0 - 0.2), epsilon = 1e-12);
    }

    #[test]
    fn sphere_parallel_mean_curvature() {
        let r = 2.0;
        let z = r / 4.0;
        let k = sphere(r).curvatures(0.3).k;
        for terms in [2, 5, 10] {
            let h = mean_curvature_parallel(&k, z, terms).unwrap();
            let err = (h.partial_sum - 2.0 / (r - z)).abs();
            assert!(err <= h.remainder_bound * (1.0 + 1e-12));
            assert_relative_eq!(h.remainder_bound, 2.0 * (z / r).powi(terms as i32 + 1) / (r - z), epsilon = 1e-14);
        }
        let g = fermi_metric(&sphere(r), &[0.3], z).unwrap()[0];
        let g0 = fermi_metric(&sphere(r), &[0.3], 0.0).unwrap()[0];
        assert_relative_eq!(g.g_ss, (1.0 - z / r).powi(2) * g0.g_ss, epsilon = 1e-14);
        assert!(matches!(fermi_metric(&sphere(r), &[0.0], r), Err(GeometryError::FocalPointCrossing(_))));
    }

    #[test]
    fn catenoid_vop_matches_ode() {
        let sol = catenoid_jacobi_even(|z| 4.0 / z.cosh().powi(8), 20.0, 4001);
        for z in [0.0, 0.5, 1.3, 3.0] {
            let dz = 1e-3;
            let (h0, _) = sol.eval(z);
            let (hm, _) = sol.eval(z - dz);
            let (hp, _) = sol.eval(z + dz);
            let d2 = (hp - 2.0 * h0 + hm) / (dz * dz);
            let lhs = (d2 + 2.0 / z.cosh().powi(2) * h0) / z.cosh().powi(2);
            assert!((lhs - 4.0 / z.cosh().powi(8)).abs() < 1e-5, "{z} {lhs}");
        }
        assert!(sol.eval(0.0).1.abs() < 1e-12);
        assert!(sol.hp.last().unwrap().abs() < 1e-12);
    }
}
