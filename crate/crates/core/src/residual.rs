//! Approximate solutions in shifted Fermi coordinates around a surface of
//! revolution, and the residual S[u] = Δu + f(u) of the dilated problem.
//!
//! With Z = ε(t + h(σ)) the normal distance, a = 1 - Z k_mer, b = 1 - Z k_par,
//!
//!   S = U_tt - ε H_Z U_t + ε²/(λa)² [F_σσ + (ρ'/ρ + b'/b - λ'/λ - a'/a) F_σ] + f(U),
//!
//! where F_σ, F_σσ are σ-derivatives at fixed Z (chain rule through h) and
//! H_Z = k_mer/a + k_par/b. Everything is evaluated in complex ε so that
//! Taylor coefficients in ε can be read off by contour sums.

use std::f64::consts::PI;

use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::correctors::{
    build_family, compute_constants, solve_dirichlet_bounded, CorrectorError, ProjectionConstants,
};
use crate::geometry::{
    catenoid_jacobi_even, fermi_metric, jacobi_solve_periodic, GeometryError, Surface, SurfaceKind,
};
use crate::numerics::{fd, fit, quad};
use crate::profiles::{HeteroclinicProfile, Nonlinearity};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResidualError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Corrector(#[from] CorrectorError),
    #[error("normal coordinate reaches a focal point: Z k = {zk} at sigma = {sigma}")]
    FocalPointCrossing { sigma: f64, zk: f64 },
    #[error("unsupported surface: {0}")]
    UnsupportedSurface(String),
    #[error("complex evaluation needs a polynomial nonlinearity")]
    ComplexNonlinearity,
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
}

// ---------------------------------------------------------------------------
// pointwise evaluator

/// Derivatives of a field of (σ, t).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub t: f64,
    pub tt: f64,
    pub s: f64,
    pub ss: f64,
    pub st: f64,
}

/// Value and σ-derivatives of a field on Γ.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SJet {
    pub v: f64,
    pub s: f64,
    pub ss: f64,
}

/// Surface data at one meridian node.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GeomNode {
    pub sigma: f64,
    pub k_mer: f64,
    pub k_par: f64,
    pub k_mer_s: f64,
    pub k_par_s: f64,
    pub lambda: f64,
    /// ρ'/ρ - λ'/λ
    pub drift: f64,
    /// distance to the origin of the embedded point
    pub radius: f64,
}

impl GeomNode {
    pub fn from_surface(surface: &Surface, sigma: f64) -> Self {
        let m = surface.meridian(sigma);
        GeomNode {
            sigma,
            k_mer: m.k_mer,
            k_par: m.k_par,
            k_mer_s: m.k_mer_s,
            k_par_s: m.k_par_s,
            lambda: m.lambda,
            drift: m.rho_s / m.rho - m.lambda_s / m.lambda,
            radius: (m.rho * m.rho + m.height * m.height).sqrt(),
        }
    }

    pub fn a2(&self) -> f64 {
        self.k_mer * self.k_mer + self.k_par * self.k_par
    }

    pub fn max_abs_k(&self) -> f64 {
        self.k_mer.abs().max(self.k_par.abs())
    }
}

/// f evaluated at complex arguments.
#[derive(Debug, Clone)]
pub enum ComplexNonlinearity {
    Poly(Vec<f64>),
    RealOnly(Nonlinearity),
}

impl ComplexNonlinearity {
    pub fn new(f: &Nonlinearity) -> Self {
        match f.coefficients() {
            Some(c) => ComplexNonlinearity::Poly(c.to_vec()),
            None => ComplexNonlinearity::RealOnly(f.clone()),
        }
    }

    pub fn supports_complex(&self) -> bool {
        matches!(self, ComplexNonlinearity::Poly(_))
    }

    fn eval(&self, u: C) -> C {
        match self {
            ComplexNonlinearity::Poly(c) => c.iter().rev().fold(C::new(0.0, 0.0), |acc, ck| acc * u + ck),
            ComplexNonlinearity::RealOnly(f) => {
                if u.im == 0.0 {
                    C::new(f.f(u.re), 0.0)
                } else {
                    C::new(f64::NAN, f64::NAN)
                }
            }
        }
    }
}

/// U = w + Σ ε^m Φ_m and h = Σ ε^m h_m at one node.
#[derive(Debug, Clone, Default)]
pub struct NodeAnsatz {
    pub t: f64,
    pub w: [f64; 3],
    pub u_terms: Vec<(i32, Jet)>,
    pub h_terms: Vec<(i32, SJet)>,
}

#[derive(Debug, Clone, Copy)]
struct CJet {
    v: C,
    t: C,
    tt: C,
    s: C,
    ss: C,
    st: C,
}

impl NodeAnsatz {
    fn u(&self, eps: C) -> CJet {
        let mut j = CJet {
            v: C::new(self.w[0], 0.0),
            t: C::new(self.w[1], 0.0),
            tt: C::new(self.w[2], 0.0),
            s: C::new(0.0, 0.0),
            ss: C::new(0.0, 0.0),
            st: C::new(0.0, 0.0),
        };
        for (m, f) in &self.u_terms {
            let e = eps.powi(*m);
            j.v += e * f.v;
            j.t += e * f.t;
            j.tt += e * f.tt;
            j.s += e * f.s;
            j.ss += e * f.ss;
            j.st += e * f.st;
        }
        j
    }

    fn h(&self, eps: C) -> (C, C, C) {
        let mut h = (C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0));
        for (m, f) in &self.h_terms {
            let e = eps.powi(*m);
            h.0 += e * f.v;
            h.1 += e * f.s;
            h.2 += e * f.ss;
        }
        h
    }
}

/// Laplacian part ε²Δ_X u and the full residual at one node.
fn eval_parts(eps: C, g: &GeomNode, a: &NodeAnsatz, f: &ComplexNonlinearity, u: CJet) -> (C, C) {
    let (h, hs, hss) = a.h(eps);
    let z = eps * (a.t + h);
    let am = 1.0 - z * g.k_mer;
    let bp = 1.0 - z * g.k_par;
    let am_s = -z * g.k_mer_s;
    let bp_s = -z * g.k_par_s;
    let hz = g.k_mer / am + g.k_par / bp;
    let fs = u.s - hs * u.t;
    let fss = u.ss - 2.0 * hs * u.st - hss * u.t + hs * hs * u.tt;
    let coef = g.drift + bp_s / bp - am_s / am;
    let la = g.lambda * am;
    let lap = u.tt - eps * hz * u.t + eps * eps / (la * la) * (fss + coef * fs);
    (lap, lap + f.eval(u.v))
}

pub fn eval_residual_node(eps: C, g: &GeomNode, a: &NodeAnsatz, f: &ComplexNonlinearity) -> C {
    let u = a.u(eps);
    eval_parts(eps, g, a, f, u).1
}

/// ε²Δ_X u at one node (the residual without f).
pub fn eval_laplacian_node(eps: C, g: &GeomNode, a: &NodeAnsatz) -> C {
    let u = a.u(eps);
    eval_parts(eps, g, a, &ComplexNonlinearity::Poly(vec![]), u).0
}

/// Taylor coefficient of ε^order by an N-point contour sum of radius r.
pub fn cauchy_coefficient(order: i32, radius: f64, points: usize, f: impl Fn(C) -> C) -> C {
    let mut acc = C::new(0.0, 0.0);
    for k in 0..points {
        let th = 2.0 * PI * k as f64 / points as f64;
        let e = C::from_polar(radius, th);
        acc += f(e) * C::from_polar(1.0, -(order as f64) * th);
    }
    acc / (points as f64 * radius.powi(order))
}

// ---------------------------------------------------------------------------
// σ grids and fields

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaGrid {
    pub s0: f64,
    pub ds: f64,
    pub n: usize,
    pub periodic: bool,
    /// padding nodes at each end excluded from reports (open grids)
    pub pad: usize,
}

impl SigmaGrid {
    pub fn open(half_width: f64, ds: f64, pad: usize) -> Self {
        let core = (2.0 * half_width / ds).round() as usize + 1;
        SigmaGrid { s0: -half_width - pad as f64 * ds, ds, n: core + 2 * pad, periodic: false, pad }
    }

    pub fn periodic(period: f64, n: usize) -> Self {
        SigmaGrid { s0: 0.0, ds: period / n as f64, n, periodic: true, pad: 0 }
    }

    pub fn s(&self, i: usize) -> f64 {
        self.s0 + i as f64 * self.ds
    }

    pub fn interior(&self) -> std::ops::Range<usize> {
        self.pad..self.n - self.pad
    }

    pub fn deriv(&self, y: &[f64], d: usize) -> Vec<f64> {
        fd::derivative(y, self.ds, d, 9, self.periodic)
    }

    pub fn jets(&self, y: &[f64]) -> Vec<SJet> {
        let d1 = self.deriv(y, 1);
        let d2 = self.deriv(y, 2);
        (0..self.n).map(|i| SJet { v: y[i], s: d1[i], ss: d2[i] }).collect()
    }
}

/// Δ_Γ f = λ⁻²(f'' + (ρ'/ρ - λ'/λ) f') for an axisymmetric f.
pub fn surface_laplacian(geom: &[GeomNode], f: &[SJet]) -> Vec<f64> {
    geom.iter()
        .zip(f)
        .map(|(g, f)| (f.ss + g.drift * f.s) / (g.lambda * g.lambda))
        .collect()
}

// ---------------------------------------------------------------------------
// weighted norms

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedNormSpec {
    pub nu: f64,
    pub gamma: f64,
    pub sigma: f64,
    pub pairs: usize,
    pub seed: u64,
}

impl WeightedNormSpec {
    /// ν = 4.5, γ = 0.9 sqrt(-f'(1)), σ = 1/2, 10⁵ Hölder pairs.
    pub fn for_profile(profile: &HeteroclinicProfile, seed: u64) -> Self {
        WeightedNormSpec { nu: 4.5, gamma: 0.9 * profile.gamma, sigma: 0.5, pairs: 100_000, seed }
    }

    pub fn validate(&self) -> Result<(), ResidualError> {
        if self.nu < 0.0 || self.gamma < 0.0 || !(self.sigma > 0.0 && self.sigma < 1.0) {
            return Err(ResidualError::InvalidSpec(format!("{self:?}")));
        }
        Ok(())
    }
}

/// A field on σ-nodes × t-nodes (row major in σ) in the dilated picture.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub sigma: Vec<f64>,
    pub t: Vec<f64>,
    /// surface arclength scale λ(σ) for dilated distances
    pub lambda: Vec<f64>,
    /// r(σ) = sqrt(1 + |Y|²)
    pub r: Vec<f64>,
    pub epsilon: f64,
    pub data: Vec<f64>,
}

impl GridField {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.t.len() + j]
    }

    pub fn weight(&self, spec: &WeightedNormSpec, i: usize, j: usize) -> f64 {
        self.r[i].powf(spec.nu) * (spec.gamma * self.t[j]).exp()
    }

    /// Rows (σ, t, value, weight) for CSV dumps.
    pub fn rows(&self, spec: &WeightedNormSpec) -> Vec<[f64; 4]> {
        let nt = self.t.len();
        (0..self.sigma.len())
            .flat_map(|i| (0..nt).map(move |j| (i, j)))
            .map(|(i, j)| [self.sigma[i], self.t[j], self.at(i, j), self.weight(spec, i, j)])
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormValue {
    pub sup: f64,
    /// sampled lower bound of the weighted Hölder seminorm
    pub holder: f64,
    pub total: f64,
}

/// ‖r^ν e^{γt} g‖_∞ plus the weighted σ-Hölder quotient over sampled pairs at
/// dilated distance at most one.
pub fn weighted_norm(field: &GridField, spec: &WeightedNormSpec) -> NormValue {
    let (ns, nt) = (field.sigma.len(), field.t.len());
    let mut sup: f64 = 0.0;
    for i in 0..ns {
        for j in 0..nt {
            sup = sup.max(field.weight(spec, i, j) * field.at(i, j).abs());
        }
    }
    let mut holder: f64 = 0.0;
    if ns * nt > 1 && spec.pairs > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let dt = if nt > 1 { field.t[1] - field.t[0] } else { 1.0 };
        let dsig = if ns > 1 { field.sigma[1] - field.sigma[0] } else { 1.0 };
        let jt = ((1.0 / dt).floor() as i64).max(1);
        for _ in 0..spec.pairs {
            let i = rng.random_range(0..ns);
            let j = rng.random_range(0..nt);
            // σ offset covering unit dilated length
            let js = ((field.epsilon / (field.lambda[i] * dsig)).floor() as i64).max(1);
            let di = rng.random_range(-js..=js);
            let dj = rng.random_range(-jt..=jt);
            let (i2, j2) = (i as i64 + di, j as i64 + dj);
            if i2 < 0 || j2 < 0 || i2 >= ns as i64 || j2 >= nt as i64 || (di == 0 && dj == 0) {
                continue;
            }
            let (i2, j2) = (i2 as usize, j2 as usize);
            let ds = field.lambda[i] * (field.sigma[i2] - field.sigma[i]) / field.epsilon;
            let d = (ds * ds + (field.t[j2] - field.t[j]).powi(2)).sqrt();
            if d > 1.0 || d == 0.0 {
                continue;
            }
            let w = field.weight(spec, i, j).min(field.weight(spec, i2, j2));
            holder = holder.max(w * (field.at(i, j) - field.at(i2, j2)).abs() / d.powf(spec.sigma));
        }
    }
    NormValue { sup, holder, total: sup + holder }
}

/// Slope of ln(norm) against ln(ε) with its standard error.
pub fn fit_order(eps: &[f64], norms: &[f64]) -> (f64, f64) {
    let x: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let y: Vec<f64> = norms.iter().map(|n| n.max(1e-300).ln()).collect();
    if x.len() < 2 {
        return (f64::NAN, f64::NAN);
    }
    fit::slope(&x, &y)
}

// ---------------------------------------------------------------------------
// shift components

/// h-components on a σ grid.
#[derive(Debug, Clone)]
pub struct HComponents {
    pub h0: f64,
    pub hhat1: Vec<SJet>,
    pub hhat2: Vec<SJet>,
    pub hhat3: Vec<SJet>,
    /// h1 = c1 ĥ1
    pub h1: Vec<SJet>,
    /// h2 = c2 ĥ2 + c3|A|² + (c4 - c3)ĥ3
    pub h2: Vec<SJet>,
    /// max |J ĥ_i - source_i| on the interior
    pub jacobi_residual: f64,
}

fn catenoid_hhat(source: impl Fn(f64) -> f64 + Copy, grid: &SigmaGrid) -> Vec<SJet> {
    let zmax = 14.0;
    let sol = catenoid_jacobi_even(source, zmax, 14001);
    (0..grid.n)
        .map(|i| {
            let z = grid.s(i);
            let (v, s) = sol.eval(z);
            let ss = z.cosh().powi(2) * source(z) - 2.0 * v / z.cosh().powi(2);
            SJet { v, s, ss }
        })
        .collect()
}

/// Solves J ĥ = Σk³, Σk⁴, |A|⁴ and assembles h1, h2 (minimal surfaces).
pub fn assemble_h(
    surface: &Surface,
    constants: &ProjectionConstants,
    grid: &SigmaGrid,
) -> Result<HComponents, ResidualError> {
    let geom: Vec<GeomNode> = (0..grid.n).map(|i| GeomNode::from_surface(surface, grid.s(i))).collect();
    let zero = vec![SJet::default(); grid.n];
    let (hhat1, hhat2, hhat3) = match surface.kind {
        SurfaceKind::Plane => (zero.clone(), zero.clone(), zero.clone()),
        SurfaceKind::Catenoid => {
            let k = |z: f64| {
                let m = surface.meridian(z);
                (m.k_mer, m.k_par)
            };
            let s3 = move |z: f64| {
                let (a, b) = k(z);
                a.powi(3) + b.powi(3)
            };
            let h1 = if (0..grid.n).all(|i| s3(grid.s(i)) == 0.0) { zero.clone() } else { catenoid_hhat(s3, grid) };
            let h2 = catenoid_hhat(
                move |z| {
                    let (a, b) = k(z);
                    a.powi(4) + b.powi(4)
                },
                grid,
            );
            let h3 = catenoid_hhat(
                move |z| {
                    let (a, b) = k(z);
                    (a * a + b * b).powi(2)
                },
                grid,
            );
            (h1, h2, h3)
        }
        _ => {
            return Err(ResidualError::UnsupportedSurface(format!(
                "{} is not a supported minimal surface",
                surface.name()
            )))
        }
    };
    let a2: Vec<f64> = geom.iter().map(|g| g.a2()).collect();
    let a2j = grid.jets(&a2);
    let h1: Vec<SJet> = hhat1
        .iter()
        .map(|j| SJet { v: constants.c1 * j.v, s: constants.c1 * j.s, ss: constants.c1 * j.ss })
        .collect();
    let (c2, c3, c4) = (constants.c2, constants.c3, constants.c4);
    let h2: Vec<SJet> = (0..grid.n)
        .map(|i| SJet {
            v: c2 * hhat2[i].v + c3 * a2j[i].v + (c4 - c3) * hhat3[i].v,
            s: c2 * hhat2[i].s + c3 * a2j[i].s + (c4 - c3) * hhat3[i].s,
            ss: c2 * hhat2[i].ss + c3 * a2j[i].ss + (c4 - c3) * hhat3[i].ss,
        })
        .collect();
    // J ĥ - source with the σ-derivatives recomputed by differences
    let mut jres: f64 = 0.0;
    for (hh, pow) in [(&hhat1, 3), (&hhat2, 4), (&hhat3, 0)] {
        let vals: Vec<f64> = hh.iter().map(|j| j.v).collect();
        let jets = grid.jets(&vals);
        let lap = surface_laplacian(&geom, &jets);
        for i in grid.interior() {
            let g = &geom[i];
            let src = if pow == 0 { g.a2() * g.a2() } else { g.k_mer.powi(pow) + g.k_par.powi(pow) };
            jres = jres.max((lap[i] + g.a2() * vals[i] - src).abs());
        }
    }
    Ok(HComponents { h0: constants.c0, hhat1, hhat2, hhat3, h1, h2, jacobi_residual: jres })
}

// ---------------------------------------------------------------------------
// minimal case

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualOptions {
    pub epsilons: Vec<f64>,
    /// σ half-width of the open grid (catenoid, plane)
    pub half_width: f64,
    pub ds: f64,
    /// profile-node stride for the t grid
    pub t_stride: usize,
    /// collar t ≤ δ/(ε max|k|)
    pub delta: f64,
    /// nodes per period for periodic surfaces
    pub n_sigma_periodic: usize,
    pub cauchy_points: usize,
    /// fixed t-window for the ε-independent diagnostic
    pub fixed_window: f64,
}

impl Default for ResidualOptions {
    fn default() -> Self {
        ResidualOptions {
            epsilons: vec![0.1, 0.05, 0.025],
            half_width: 3.0,
            ds: 0.02,
            t_stride: 5,
            delta: 0.2,
            n_sigma_periodic: 128,
            cauchy_points: 48,
            fixed_window: 2.0,
        }
    }
}

/// One separable term ± ε^power ψ(σ) p(t).
#[derive(Debug, Clone)]
struct SeparableTerm {
    power: i32,
    sign: f64,
    psi: Vec<SJet>,
    p: [Vec<f64>; 3],
}

/// Stage 0: U = w + ε²|A|²p0, h = c0.
/// Stage 1: U = w + ε²|A|²p0 - ε³ψ1p1 - ε⁴Σψℓpℓ, h = c0 + εh1 + ε²h2.
#[derive(Debug, Clone)]
pub struct MinimalApproximation {
    pub surface: Surface,
    pub profile: HeteroclinicProfile,
    pub constants: ProjectionConstants,
    pub grid: SigmaGrid,
    pub geom: Vec<GeomNode>,
    pub shifts: HComponents,
    terms: Vec<SeparableTerm>,
    pub k_max: f64,
}

impl MinimalApproximation {
    pub fn new(
        surface: &Surface,
        profile: &HeteroclinicProfile,
        opts: &ResidualOptions,
    ) -> Result<Self, ResidualError> {
        if !surface.is_minimal() {
            return Err(ResidualError::UnsupportedSurface(format!(
                "{} is not minimal; use the CMC hierarchy",
                surface.name()
            )));
        }
        let constants = compute_constants(profile);
        let family = build_family(profile, &constants)?;
        let grid = SigmaGrid::open(opts.half_width, opts.ds, 24);
        let geom: Vec<GeomNode> = (0..grid.n).map(|i| GeomNode::from_surface(surface, grid.s(i))).collect();
        let shifts = assemble_h(surface, &constants, &grid)?;
        let a2: Vec<f64> = geom.iter().map(|g| g.a2()).collect();
        let a2j = grid.jets(&a2);
        let lap_a2 = surface_laplacian(&geom, &a2j);
        let sum = |p: i32| -> Vec<f64> { geom.iter().map(|g| g.k_mer.powi(p) + g.k_par.powi(p)).collect() };
        let s3 = sum(3);
        let psi: [Vec<f64>; 5] = [
            s3.iter().map(|x| -x).collect(),
            lap_a2,
            sum(4).iter().map(|x| -x).collect(),
            a2.iter().map(|x| x * x).collect(),
            (0..grid.n).map(|i| -2.0 * s3[i] * shifts.h1[i].v).collect(),
        ];
        let arrays = |sol: &crate::correctors::CorrectorSolution| {
            [sol.p.clone(), sol.pp.clone(), sol.ppp(profile)]
        };
        let mut terms = vec![SeparableTerm { power: 2, sign: 1.0, psi: a2j, p: arrays(&family.p0_graph) }];
        for (k, entry) in family.entries.iter().enumerate() {
            terms.push(SeparableTerm {
                power: if k == 0 { 3 } else { 4 },
                sign: -1.0,
                psi: grid.jets(&psi[k]),
                p: arrays(&entry.solution),
            });
        }
        let k_max = grid.interior().map(|i| geom[i].max_abs_k()).fold(0.0, f64::max);
        Ok(MinimalApproximation {
            surface: surface.clone(),
            profile: profile.clone(),
            constants,
            grid,
            geom,
            shifts,
            terms,
            k_max,
        })
    }

    /// Ansatz at σ-node i and profile node k.
    pub fn ansatz(&self, stage: u8, i: usize, k: usize) -> NodeAnsatz {
        let pr = &self.profile;
        let nterms = if stage == 0 { 1 } else { self.terms.len() };
        let u_terms = self.terms[..nterms]
            .iter()
            .map(|term| {
                let (ps, p) = (&term.psi[i], &term.p);
                let c = term.sign;
                (
                    term.power,
                    Jet {
                        v: c * ps.v * p[0][k],
                        t: c * ps.v * p[1][k],
                        tt: c * ps.v * p[2][k],
                        s: c * ps.s * p[0][k],
                        ss: c * ps.ss * p[0][k],
                        st: c * ps.s * p[1][k],
                    },
                )
            })
            .collect();
        let mut h_terms = vec![(0, SJet { v: self.shifts.h0, s: 0.0, ss: 0.0 })];
        if stage > 0 {
            h_terms.push((1, self.shifts.h1[i]));
            h_terms.push((2, self.shifts.h2[i]));
        }
        NodeAnsatz { t: pr.t[k], w: [pr.w[k], pr.wp[k], pr.wpp[k]], u_terms, h_terms }
    }

    pub fn collar(&self, eps: f64, delta: f64) -> f64 {
        let tc = if self.k_max > 0.0 { delta / (eps * self.k_max) } else { f64::INFINITY };
        tc.min(self.profile.t_max() - 1.0)
    }

    fn check_focal(&self, eps: f64, t_end: f64, stage: u8) -> Result<(), ResidualError> {
        for i in self.grid.interior() {
            let g = &self.geom[i];
            let mut h = self.shifts.h0;
            if stage > 0 {
                h += eps * self.shifts.h1[i].v + eps * eps * self.shifts.h2[i].v;
            }
            let zk = eps * (t_end + h.abs()) * g.max_abs_k();
            if zk >= 1.0 {
                return Err(ResidualError::FocalPointCrossing { sigma: g.sigma, zk });
            }
        }
        Ok(())
    }

    /// Residual on interior σ × {t ≤ t_end} (profile nodes with stride).
    pub fn residual_field(&self, stage: u8, eps: f64, t_end: f64, stride: usize) -> Result<GridField, ResidualError> {
        self.check_focal(eps, t_end, stage)?;
        let f = ComplexNonlinearity::new(&self.profile.nonlinearity);
        let ks: Vec<usize> = (0..self.profile.len()).step_by(stride.max(1)).filter(|&k| self.profile.t[k] <= t_end + 1e-12).collect();
        let rows: Vec<usize> = self.grid.interior().collect();
        let data: Vec<f64> = rows
            .par_iter()
            .flat_map_iter(|&i| {
                let f = &f;
                ks.iter().map(move |&k| {
                    let a = self.ansatz(stage, i, k);
                    eval_residual_node(C::new(eps, 0.0), &self.geom[i], &a, f).re
                })
            })
            .collect();
        Ok(GridField {
            sigma: rows.iter().map(|&i| self.geom[i].sigma).collect(),
            t: ks.iter().map(|&k| self.profile.t[k]).collect(),
            lambda: rows.iter().map(|&i| self.geom[i].lambda).collect(),
            r: rows.iter().map(|&i| (1.0 + self.geom[i].radius.powi(2)).sqrt()).collect(),
            epsilon: eps,
            data,
        })
    }

    /// max |S| of V = 1 + η(t)(U - 1) over t_c < t ≤ t_c + 1, η falling from 1 to 0.
    pub fn zone_max(&self, stage: u8, eps: f64, t_c: f64) -> Result<f64, ResidualError> {
        self.check_focal(eps, t_c + 1.0, stage)?;
        let f = ComplexNonlinearity::new(&self.profile.nonlinearity);
        let ks: Vec<usize> =
            (0..self.profile.len()).filter(|&k| self.profile.t[k] > t_c && self.profile.t[k] <= t_c + 1.0).collect();
        let out = self
            .grid
            .interior()
            .into_par_iter()
            .map(|i| {
                let mut m: f64 = 0.0;
                for &k in &ks {
                    let mut a = self.ansatz(stage, i, k);
                    let (eta, deta, d2eta) = smoothstep_down(a.t - t_c);
                    // V = 1 + η (U - 1) with U - 1 = (w - 1) + Σ terms
                    let w1 = a.w[0] - 1.0;
                    a.w = [1.0 + eta * w1, eta * a.w[1] + deta * w1, eta * a.w[2] + 2.0 * deta * a.w[1] + d2eta * w1];
                    for (_, j) in a.u_terms.iter_mut() {
                        *j = Jet {
                            v: eta * j.v,
                            t: eta * j.t + deta * j.v,
                            tt: eta * j.tt + 2.0 * deta * j.t + d2eta * j.v,
                            s: eta * j.s,
                            ss: eta * j.ss,
                            st: eta * j.st + deta * j.s,
                        };
                    }
                    m = m.max(eval_residual_node(C::new(eps, 0.0), &self.geom[i], &a, &f).re.abs());
                }
                m
            })
            .reduce(|| 0.0, f64::max);
        Ok(out)
    }

    /// Normal derivative at t = 0 against w'(0), and |U| on the boundary.
    pub fn boundary_check(&self, stage: u8, eps: f64) -> BoundaryCheck {
        let wp0 = self.profile.wp0();
        let mut devs = Vec::new();
        let mut dir: f64 = 0.0;
        for i in self.grid.interior() {
            let a = self.ansatz(stage, i, 0);
            let e = C::new(eps, 0.0);
            let u = a.u(e);
            let (h, hs, _) = a.h(e);
            let g = &self.geom[i];
            let la = g.lambda * (1.0 - eps * h.re * g.k_mer);
            let n = u.t.re * (1.0 + (eps * hs.re / la).powi(2)).sqrt();
            devs.push(n - wp0);
            dir = dir.max(u.v.re.abs());
        }
        BoundaryCheck::from_devs(&devs, dir)
    }

    pub fn order_study(
        &self,
        stage: u8,
        opts: &ResidualOptions,
        spec: &WeightedNormSpec,
    ) -> Result<ResidualReport, ResidualError> {
        spec.validate()?;
        let mut rep = ResidualReport::new(self.surface.name(), &self.profile, stage);
        for &eps in &opts.epsilons {
            let t_c = self.collar(eps, opts.delta);
            let field = self.residual_field(stage, eps, t_c, opts.t_stride)?;
            let n = weighted_norm(&field, spec);
            let fixed = self.residual_field(stage, eps, opts.fixed_window.min(t_c), opts.t_stride)?;
            let nf = weighted_norm(&fixed, spec);
            let zone = self.zone_max(stage, eps, t_c)?;
            let b = self.boundary_check(stage, eps);
            rep.push(eps, t_c, n, nf.total, zone, 10.0 * (-spec.gamma * t_c).exp(), b);
        }
        rep.finish(&opts.epsilons);
        Ok(rep)
    }
}

/// Quintic step falling from 1 at s = 0 to 0 at s = 1: (η, η', η'').
pub fn smoothstep_down(s: f64) -> (f64, f64, f64) {
    if s <= 0.0 {
        return (1.0, 0.0, 0.0);
    }
    if s >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let p = s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
    let dp = 30.0 * s * s * (1.0 - s) * (1.0 - s);
    let d2p = 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s);
    (1.0 - p, -dp, -d2p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryCheck {
    pub neumann_max_dev: f64,
    pub neumann_std: f64,
    pub neumann_mean_dev: f64,
    pub dirichlet_max: f64,
}

impl BoundaryCheck {
    fn from_devs(devs: &[f64], dir: f64) -> Self {
        let n = devs.len().max(1) as f64;
        let mean = devs.iter().sum::<f64>() / n;
        let var = devs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n;
        BoundaryCheck {
            neumann_max_dev: devs.iter().fold(0.0, |m: f64, d| m.max(d.abs())),
            neumann_std: var.sqrt(),
            neumann_mean_dev: mean,
            dirichlet_max: dir,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub surface: String,
    pub nonlinearity: String,
    pub stage: String,
    pub epsilons: Vec<f64>,
    /// sup + sampled Hölder part
    pub norms: Vec<f64>,
    pub sup_norms: Vec<f64>,
    pub holder_norms: Vec<f64>,
    pub collars: Vec<f64>,
    pub fitted_order: f64,
    pub order_stderr: f64,
    pub order_ci: [f64; 2],
    pub fixed_window_norms: Vec<f64>,
    pub fixed_window_order: f64,
    pub zone_max: Vec<f64>,
    pub zone_bound: Vec<f64>,
    pub neumann_max_dev: f64,
    pub neumann_std: f64,
    pub neumann_by_eps: Vec<f64>,
    pub dirichlet_max: f64,
}

impl ResidualReport {
    fn new(surface: &str, profile: &HeteroclinicProfile, stage: u8) -> Self {
        ResidualReport {
            surface: surface.into(),
            nonlinearity: format!("{:?}", profile.nonlinearity.kind),
            stage: stage.to_string(),
            epsilons: vec![],
            norms: vec![],
            sup_norms: vec![],
            holder_norms: vec![],
            collars: vec![],
            fitted_order: f64::NAN,
            order_stderr: f64::NAN,
            order_ci: [f64::NAN; 2],
            fixed_window_norms: vec![],
            fixed_window_order: f64::NAN,
            zone_max: vec![],
            zone_bound: vec![],
            neumann_max_dev: 0.0,
            neumann_std: 0.0,
            neumann_by_eps: vec![],
            dirichlet_max: 0.0,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn push(&mut self, eps: f64, t_c: f64, n: NormValue, fixed: f64, zone: f64, bound: f64, b: BoundaryCheck) {
        self.epsilons.push(eps);
        self.collars.push(t_c);
        self.norms.push(n.total);
        self.sup_norms.push(n.sup);
        self.holder_norms.push(n.holder);
        self.fixed_window_norms.push(fixed);
        self.zone_max.push(zone);
        self.zone_bound.push(bound);
        self.neumann_by_eps.push(b.neumann_max_dev);
        self.neumann_max_dev = self.neumann_max_dev.max(b.neumann_max_dev);
        self.neumann_std = self.neumann_std.max(b.neumann_std);
        self.dirichlet_max = self.dirichlet_max.max(b.dirichlet_max);
    }

    fn finish(&mut self, eps: &[f64]) {
        let (o, e) = fit_order(eps, &self.norms);
        self.fitted_order = o;
        self.order_stderr = e;
        self.order_ci = [o - 2.0 * e, o + 2.0 * e];
        self.fixed_window_order = fit_order(eps, &self.fixed_window_norms).0;
    }

    pub fn order_in(&self, lo: f64, hi: f64) -> bool {
        self.fitted_order >= lo && self.fitted_order <= hi
    }

    pub fn zone_ok(&self) -> bool {
        self.zone_max.iter().zip(&self.zone_bound).all(|(z, b)| z <= b)
    }
}

// ---------------------------------------------------------------------------
// CMC hierarchy on periodic surfaces

/// Slope balance at one level: the ε^k coefficient of the Neumann datum
/// should be constant in σ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelBalance {
    pub level: usize,
    pub slope_mean: f64,
    pub slope_std: f64,
    /// std over σ of the full ε^k Neumann coefficient (slope plus metric terms)
    pub neumann_std: f64,
    /// max |S_k| after the level is closed
    pub closed_residual: f64,
}

#[derive(Debug, Clone)]
pub struct CmcHierarchy {
    pub surface: Surface,
    pub profile: HeteroclinicProfile,
    pub grid: SigmaGrid,
    pub geom: Vec<GeomNode>,
    pub h0: f64,
    pub h1: Vec<SJet>,
    pub h2: Vec<SJet>,
    /// φ0..φ3, each σ-major over the full profile grid
    pub phi: Vec<Vec<Jet>>,
    pub levels: Vec<LevelBalance>,
    pub k_max: f64,
    pub cauchy_points: usize,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len().max(1) as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt())
}

impl CmcHierarchy {
    pub fn levels_built(&self) -> usize {
        self.phi.len()
    }

    fn ansatz(&self, i: usize, k: usize, nphi: usize, nh: usize) -> NodeAnsatz {
        let pr = &self.profile;
        let nt = pr.len();
        let u_terms = (0..nphi).map(|j| (j as i32 + 1, self.phi[j][i * nt + k])).collect();
        let hs = [SJet { v: self.h0, s: 0.0, ss: 0.0 }, self.h1.get(i).copied().unwrap_or_default(), self.h2.get(i).copied().unwrap_or_default()];
        let h_terms = (0..nh).map(|m| (m as i32, hs[m])).collect();
        NodeAnsatz { t: pr.t[k], w: [pr.w[k], pr.wp[k], pr.wpp[k]], u_terms, h_terms }
    }

    fn radius(&self, t: f64) -> f64 {
        let hmax = self.h0.abs()
            + self.h1.iter().chain(&self.h2).fold(0.0, |m: f64, j| m.max(j.v.abs()));
        (0.5 / ((t + hmax + 1.0) * self.k_max.max(1e-3))).min(0.3)
    }

    /// S_level on σ-nodes × profile nodes (stride) for the current ansatz.
    fn coefficient_field(&self, level: usize, nphi: usize, nh: usize, stride: usize) -> Vec<f64> {
        let f = ComplexNonlinearity::new(&self.profile.nonlinearity);
        let nt = self.profile.len();
        let ks: Vec<usize> = (0..nt).step_by(stride).collect();
        (0..self.grid.n)
            .into_par_iter()
            .flat_map_iter(|i| {
                let f = f.clone();
                let ks = ks.clone();
                ks.into_iter().map(move |k| {
                    let a = self.ansatz(i, k, nphi, nh);
                    let r = self.radius(a.t);
                    cauchy_coefficient(level as i32, r, self.cauchy_points, |e| {
                        eval_residual_node(e, &self.geom[i], &a, &f)
                    })
                    .re
                })
            })
            .collect()
    }

    /// Solve J h = rhs on the periodic grid.
    fn jacobi(&self, rhs: &[f64]) -> Result<Vec<f64>, ResidualError> {
        let cyl = self.surface.orbit.as_ref().is_some_and(|o| o.is_cylinder());
        let (m, sd) = mean_std(rhs);
        if cyl {
            if sd > 1e-9 * m.abs().max(1.0) {
                return Err(ResidualError::Geometry(GeometryError::KernelObstruction(sd)));
            }
            let a2 = self.geom[0].a2();
            return Ok(vec![m / a2; rhs.len()]);
        }
        // projection onto the odd kernel field φ̇/φ with weight λρ
        let mut proj = 0.0;
        let mut nk = 0.0;
        let mut nr = 0.0;
        for (i, r) in rhs.iter().enumerate() {
            let mer = self.surface.meridian(self.grid.s(i));
            let k = mer.rho_s / mer.rho;
            let wgt = mer.lambda * mer.rho;
            proj += r * k * wgt;
            nk += k * k * wgt;
            nr += r * r * wgt;
        }
        if proj.abs() > 1e-8 * (nk * nr).sqrt().max(1e-300) {
            return Err(ResidualError::Geometry(GeometryError::KernelObstruction(proj)));
        }
        Ok(jacobi_solve_periodic(&self.surface, self.grid.n, rhs)?)
    }

    /// Builds φ0..φ3 and h0, h1, h2 level by level: at level k the ε^k
    /// coefficient G_k is read off with φ_{k-1} = h_{k-2} = 0, then
    /// J h_{k-2} fixes the slope balance and L φ_{k-1} = -(G_k - J(h_{k-2}) w').
    pub fn build(
        surface: &Surface,
        profile: &HeteroclinicProfile,
        opts: &ResidualOptions,
        levels: usize,
    ) -> Result<Self, ResidualError> {
        let period = surface.period().ok_or_else(|| {
            ResidualError::UnsupportedSurface(format!("{} is not periodic", surface.name()))
        })?;
        if !ComplexNonlinearity::new(&profile.nonlinearity).supports_complex() {
            return Err(ResidualError::ComplexNonlinearity);
        }
        let grid = SigmaGrid::periodic(period, opts.n_sigma_periodic);
        let geom: Vec<GeomNode> = (0..grid.n).map(|i| GeomNode::from_surface(surface, grid.s(i))).collect();
        let k_max = geom.iter().map(|g| g.max_abs_k()).fold(0.0, f64::max);
        let mut hier = CmcHierarchy {
            surface: surface.clone(),
            profile: profile.clone(),
            grid,
            geom,
            h0: 0.0,
            h1: vec![],
            h2: vec![],
            phi: vec![],
            levels: vec![],
            k_max,
            cauchy_points: opts.cauchy_points,
        };
        let pr = profile;
        let nt = pr.len();
        let ns = hier.grid.n;
        let w2: Vec<f64> = pr.wp.iter().map(|x| x * x).collect();
        let m0 = quad::integrate(&w2, pr.h);
        let wp0 = pr.wp0();
        let fp = pr.fp_w();
        for level in 1..=levels.min(4) {
            let nphi = level - 1;
            let nh = level.saturating_sub(2);
            let g = hier.coefficient_field(level, nphi, nh, 1);
            let proj: Vec<f64> = (0..ns)
                .map(|i| {
                    let y: Vec<f64> = (0..nt).map(|k| g[i * nt + k] * pr.wp[k]).collect();
                    quad::integrate(&y, pr.h)
                })
                .collect();
            // J h_{level-2} at the nodes
            let jh: Vec<f64> = match level {
                1 => vec![0.0; ns],
                2 => {
                    // ∫G2 w' = α + β|A|²: the constant h0 = β/M0 makes the slope constant
                    let a2: Vec<f64> = hier.geom.iter().map(|g| g.a2()).collect();
                    let (_, sd) = mean_std(&a2);
                    hier.h0 = if sd > 1e-10 {
                        let design: Vec<Vec<f64>> = a2.iter().map(|&a| vec![1.0, a]).collect();
                        fit::least_squares(&design, &proj).coef[1] / m0
                    } else {
                        // constant |A|²: the slope itself can be zeroed
                        mean_std(&proj).0 / (a2[0] * m0)
                    };
                    a2.iter().map(|a| a * hier.h0).collect()
                }
                3 => {
                    let rhs: Vec<f64> = proj.iter().map(|p| p / m0).collect();
                    let h = hier.jacobi(&rhs)?;
                    hier.h1 = hier.grid.jets(&h);
                    rhs
                }
                _ => {
                    let rhs: Vec<f64> = (0..ns)
                        .map(|i| {
                            let dh = hier.h1[i].s / hier.geom[i].lambda;
                            (proj[i] + 0.5 * wp0 * wp0 * dh * dh) / m0
                        })
                        .collect();
                    let h = hier.jacobi(&rhs)?;
                    hier.h2 = hier.grid.jets(&h);
                    rhs
                }
            };
            let sols: Vec<crate::correctors::CorrectorSolution> = (0..ns)
                .into_par_iter()
                .map(|i| {
                    let q: Vec<f64> = (0..nt).map(|k| -(g[i * nt + k] - jh[i] * pr.wp[k])).collect();
                    solve_dirichlet_bounded(pr, &q)
                })
                .collect::<Result<_, _>>()?;
            let mut field = vec![Jet::default(); ns * nt];
            for (i, s) in sols.iter().enumerate() {
                for k in 0..nt {
                    field[i * nt + k] =
                        Jet { v: s.p[k], t: s.pp[k], tt: s.q[k] - fp[k] * s.p[k], ..Default::default() };
                }
            }
            for k in 0..nt {
                let col: Vec<f64> = (0..ns).map(|i| field[i * nt + k].v).collect();
                let colt: Vec<f64> = (0..ns).map(|i| field[i * nt + k].t).collect();
                let (d1, d2, dt1) = (hier.grid.deriv(&col, 1), hier.grid.deriv(&col, 2), hier.grid.deriv(&colt, 1));
                for i in 0..ns {
                    let j = &mut field[i * nt + k];
                    j.s = d1[i];
                    j.ss = d2[i];
                    j.st = dt1[i];
                }
            }
            let slopes: Vec<f64> = sols.iter().map(|s| s.pp[0]).collect();
            let neu: Vec<f64> = (0..ns)
                .map(|i| {
                    if level == 4 {
                        let dh = hier.h1[i].s / hier.geom[i].lambda;
                        slopes[i] + 0.5 * wp0 * dh * dh
                    } else {
                        slopes[i]
                    }
                })
                .collect();
            hier.phi.push(field);
            let (sm, ss) = mean_std(&slopes);
            let closed = hier.coefficient_field(level, nphi + 1, nh + usize::from(level >= 2), 20);
            hier.levels.push(LevelBalance {
                level,
                slope_mean: sm,
                slope_std: ss,
                neumann_std: mean_std(&neu).1,
                closed_residual: closed.iter().fold(0.0, |m: f64, x| m.max(x.abs())),
            });
        }
        Ok(hier)
    }

    pub fn balances_within(&self, tol: f64) -> bool {
        self.levels.iter().all(|l| l.neumann_std <= tol)
    }

    fn full_ansatz(&self, i: usize, k: usize) -> NodeAnsatz {
        let nh = match self.phi.len() {
            0 | 1 => 0,
            n => n - 1,
        };
        self.ansatz(i, k, self.phi.len(), nh)
    }

    pub fn residual_field(&self, eps: f64, t_end: f64, stride: usize) -> Result<GridField, ResidualError> {
        let f = ComplexNonlinearity::new(&self.profile.nonlinearity);
        let ks: Vec<usize> =
            (0..self.profile.len()).step_by(stride.max(1)).filter(|&k| self.profile.t[k] <= t_end + 1e-12).collect();
        for i in 0..self.grid.n {
            let a = self.full_ansatz(i, 0);
            let h = a.h(C::new(eps, 0.0)).0.re;
            let zk = eps * (t_end + h.abs()) * self.geom[i].max_abs_k();
            if zk >= 1.0 {
                return Err(ResidualError::FocalPointCrossing { sigma: self.geom[i].sigma, zk });
            }
        }
        let data: Vec<f64> = (0..self.grid.n)
            .into_par_iter()
            .flat_map_iter(|i| {
                let f = f.clone();
                let ks = ks.clone();
                ks.into_iter().map(move |k| {
                    let a = self.full_ansatz(i, k);
                    eval_residual_node(C::new(eps, 0.0), &self.geom[i], &a, &f).re
                })
            })
            .collect();
        Ok(GridField {
            sigma: self.geom.iter().map(|g| g.sigma).collect(),
            t: ks.iter().map(|&k| self.profile.t[k]).collect(),
            lambda: self.geom.iter().map(|g| g.lambda).collect(),
            r: self.geom.iter().map(|g| (1.0 + g.radius * g.radius).sqrt()).collect(),
            epsilon: eps,
            data,
        })
    }

    pub fn boundary_check(&self, eps: f64) -> BoundaryCheck {
        let target = self.profile.wp0() + eps * self.phi.first().map_or(0.0, |p| p[0].t);
        let mut devs = Vec::new();
        let mut dir: f64 = 0.0;
        for i in 0..self.grid.n {
            let a = self.full_ansatz(i, 0);
            let e = C::new(eps, 0.0);
            let u = a.u(e);
            let (h, hs, _) = a.h(e);
            let g = &self.geom[i];
            let la = g.lambda * (1.0 - eps * h.re * g.k_mer);
            devs.push(u.t.re * (1.0 + (eps * hs.re / la).powi(2)).sqrt() - target);
            dir = dir.max(u.v.re.abs());
        }
        BoundaryCheck::from_devs(&devs, dir)
    }

    pub fn order_study(&self, opts: &ResidualOptions, spec: &WeightedNormSpec) -> Result<ResidualReport, ResidualError> {
        spec.validate()?;
        let mut rep = ResidualReport::new(self.surface.name(), &self.profile, 0);
        rep.stage = format!("cmc{}", self.phi.len());
        for &eps in &opts.epsilons {
            let t_c = (opts.delta / (eps * self.k_max)).min(self.profile.t_max() - 1.0);
            let field = self.residual_field(eps, t_c, opts.t_stride)?;
            let n = weighted_norm(&field, spec);
            let fixed = self.residual_field(eps, opts.fixed_window.min(t_c), opts.t_stride)?;
            let b = self.boundary_check(eps);
            rep.push(eps, t_c, n, weighted_norm(&fixed, spec).total, 0.0, 10.0 * (-spec.gamma * t_c).exp(), b);
        }
        rep.finish(&opts.epsilons);
        Ok(rep)
    }
}

// ---------------------------------------------------------------------------
// independent checks

/// Analytic test field on the catenoid for the oracles:
/// U = tanh t · (1 + 0.3 sech²σ · t e^{-t}), h = 0.2 + 0.1 sech²σ.
pub fn oracle_ansatz(sigma: f64, t: f64) -> NodeAnsatz {
    let (th, sech2) = (t.tanh(), 1.0 / sigma.cosh().powi(2));
    let ds = -2.0 * sech2 * sigma.tanh();
    let dss = sech2 * (4.0 - 6.0 * sech2);
    let (e, te) = ((-t).exp(), t * (-t).exp());
    let (g, gt, gtt) = (te, e - te, -2.0 * e + te);
    let (f, ft, ftt) = (th, 1.0 - th * th, -2.0 * th * (1.0 - th * th));
    let c = 0.3;
    let pg = f * g;
    let pgt = ft * g + f * gt;
    let pgtt = ftt * g + 2.0 * ft * gt + f * gtt;
    NodeAnsatz {
        t,
        w: [f, ft, ftt],
        u_terms: vec![(0, Jet { v: c * sech2 * pg, t: c * sech2 * pgt, tt: c * sech2 * pgtt, s: c * ds * pg, ss: c * dss * pg, st: c * ds * pgt })],
        h_terms: vec![(0, SJet { v: 0.2 + 0.1 * sech2, s: 0.1 * ds, ss: 0.1 * dss })],
    }
}

fn oracle_value(eps: f64, x: [f64; 2]) -> f64 {
    // nearest point on the meridian (cosh σ, σ) by Newton
    let mut s = x[1];
    for _ in 0..60 {
        let (c, sh) = (s.cosh(), s.sinh());
        let f = (x[0] - c) * sh + (x[1] - s);
        let df = -sh * sh + (x[0] - c) * c - 1.0;
        let ds = f / df;
        s -= ds;
        if ds.abs() < 1e-15 {
            break;
        }
    }
    let z = (x[0] - s.cosh()) / s.cosh() - (x[1] - s) * s.tanh();
    let a = oracle_ansatz(s, 0.0);
    let h = a.h_terms[0].1.v;
    let t = z / eps - h;
    let a = oracle_ansatz(s, t);
    a.u(C::new(1.0, 0.0)).v.re
}

/// |Δ_X u (Fermi) - Δ_X u (ambient, 5-point cylindrical FD step δ)| at (σ, t).
pub fn ambient_oracle_error(eps: f64, sigma: f64, t: f64, delta: f64) -> f64 {
    let surf = crate::geometry::catenoid();
    let g = GeomNode::from_surface(&surf, sigma);
    let a = oracle_ansatz(sigma, t);
    let fermi = eval_laplacian_node(C::new(eps, 0.0), &g, &a).re / (eps * eps);
    let h = a.h_terms[0].1.v;
    let z = eps * (t + h);
    let x = [sigma.cosh() + z / sigma.cosh(), sigma - z * sigma.tanh()];
    let u = |dx: f64, dz: f64| oracle_value(eps, [x[0] + dx, x[1] + dz]);
    let u0 = u(0.0, 0.0);
    let urr = (u(delta, 0.0) - 2.0 * u0 + u(-delta, 0.0)) / (delta * delta);
    let ur = (u(delta, 0.0) - u(-delta, 0.0)) / (2.0 * delta);
    let uzz = (u(0.0, delta) - 2.0 * u0 + u(0.0, -delta)) / (delta * delta);
    (fermi - (urr + ur / x[0] + uzz)).abs()
}

/// ε²Δu for u = ψ(σ)p(t), h = 0, from the Fermi metric coefficients
/// (divergence form, differences in σ and Z), against the evaluator.
pub fn lemin0_error(surface: &Surface, eps: f64, sigma: f64, t: f64) -> Result<f64, ResidualError> {
    let psi = |s: f64| 1.0 / s.cosh();
    let (p, pt, ptt) = ((-t).exp() * t, (1.0 - t) * (-t).exp(), (t - 2.0) * (-t).exp());
    let hs = 1e-3;
    let hz = 1e-4;
    let z = eps * t;
    let sq = |s: f64, z: f64| -> Result<(f64, f64), ResidualError> {
        let m = fermi_metric(surface, &[s], z)?[0];
        Ok(((m.g_ss * m.g_tt).sqrt(), m.g_ss))
    };
    let flux = |s: f64| -> Result<f64, ResidualError> {
        let (d, gss) = sq(s, z)?;
        let dpsi = (psi(s + hs) - psi(s - hs)) / (2.0 * hs);
        Ok(d / gss * dpsi)
    };
    let (d0, _) = sq(sigma, z)?;
    let tangential = (flux(sigma + hs)? - flux(sigma - hs)?) / (2.0 * hs) / d0 * p;
    let dlog = ((sq(sigma, z + hz)?.0).ln() - (sq(sigma, z - hz)?.0).ln()) / (2.0 * hz);
    let metric = psi(sigma) * ptt + eps * dlog * psi(sigma) * pt + eps * eps * tangential;
    let g = GeomNode::from_surface(surface, sigma);
    let ds_psi = -psi(sigma) * sigma.tanh();
    let dss_psi = psi(sigma) * (2.0 * sigma.tanh().powi(2) - 1.0);
    let a = NodeAnsatz {
        t,
        w: [0.0; 3],
        u_terms: vec![(0, Jet { v: psi(sigma) * p, t: psi(sigma) * pt, tt: psi(sigma) * ptt, s: ds_psi * p, ss: dss_psi * p, st: ds_psi * pt })],
        h_terms: vec![],
    };
    Ok((eval_laplacian_node(C::new(eps, 0.0), &g, &a).re - metric).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lema8Check {
    pub ratio_eps: f64,
    pub ratio_half: f64,
    pub relative_change: f64,
}

/// ‖L⁻¹g‖ / ‖g‖ for g = r^{-ν} e^{-γt} with the bounded Dirichlet inverse on
/// each σ-line, at ε and ε/2 on the catenoid grid.
pub fn lema8_check(
    profile: &HeteroclinicProfile,
    spec: &WeightedNormSpec,
    eps: f64,
    opts: &ResidualOptions,
) -> Result<Lema8Check, ResidualError> {
    let surf = crate::geometry::catenoid();
    let grid = SigmaGrid::open(opts.half_width, opts.ds, 0);
    let geom: Vec<GeomNode> = (0..grid.n).map(|i| GeomNode::from_surface(&surf, grid.s(i))).collect();
    let q: Vec<f64> = profile.t.iter().map(|t| (-spec.gamma * t).exp()).collect();
    let sol = solve_dirichlet_bounded(profile, &q)?;
    let ratio = |e: f64| {
        let t_end = profile.t_max() - 1.0;
        let ks: Vec<usize> = (0..profile.len()).step_by(opts.t_stride).filter(|&k| profile.t[k] <= t_end).collect();
        let r: Vec<f64> = geom.iter().map(|g| (1.0 + g.radius * g.radius).sqrt()).collect();
        let mk = |col: &[f64]| GridField {
            sigma: geom.iter().map(|g| g.sigma).collect(),
            t: ks.iter().map(|&k| profile.t[k]).collect(),
            lambda: geom.iter().map(|g| g.lambda).collect(),
            r: r.clone(),
            epsilon: e,
            data: r.iter().flat_map(|ri| ks.iter().map(move |&k| ri.powf(-spec.nu) * col[k])).collect(),
        };
        weighted_norm(&mk(&sol.p), spec).total / weighted_norm(&mk(&q), spec).total
    };
    let (a, b) = (ratio(eps), ratio(eps / 2.0));
    Ok(Lema8Check { ratio_eps: a, ratio_half: b, relative_change: (a - b).abs() / a })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{catenoid, delaunay, plane};
    use crate::profiles::{make_nonlinearity, solve_profile, GridSpec, NonlinearityKind};
    use approx::assert_relative_eq;

    fn ac() -> HeteroclinicProfile {
        let f = make_nonlinearity(NonlinearityKind::AllenCahn, None).unwrap();
        solve_profile(&f, GridSpec::default()).unwrap()
    }

    fn spec(p: &HeteroclinicProfile) -> WeightedNormSpec {
        WeightedNormSpec { pairs: 2000, ..WeightedNormSpec::for_profile(p, 7) }
    }

    #[test]
    fn cauchy_extracts_polynomial_coefficients() {
        let c = cauchy_coefficient(3, 0.2, 32, |e| 1.0 + 2.0 * e + 5.0 * e.powi(3) - e.powi(6));
        assert_relative_eq!(c.re, 5.0, epsilon = 1e-12);
    }

    #[test]
    fn plane_residual_vanishes() {
        let p = ac();
        let opts = ResidualOptions { half_width: 1.0, ds: 0.05, ..Default::default() };
        let m = MinimalApproximation::new(&plane(), &p, &opts).unwrap();
        for stage in [0, 1] {
            let f = m.residual_field(stage, 0.1, 5.0, 10).unwrap();
            let sup = f.data.iter().fold(0.0, |a: f64, x| a.max(x.abs()));
            assert!(sup <= 1e-14, "stage {stage}: {sup}");
        }
    }

    #[test]
    fn ambient_oracle_converges_at_second_order() {
        let e1 = ambient_oracle_error(0.1, 0.4, 0.7, 2e-3);
        let e2 = ambient_oracle_error(0.1, 0.4, 0.7, 1e-3);
        let ratio = e1 / e2;
        assert!((3.5..4.5).contains(&ratio), "{e1} {e2}");
    }

    #[test]
    fn lemin0_agrees_with_metric_assembly() {
        for s in [-1.0, 0.0, 0.7] {
            let e = lemin0_error(&catenoid(), 0.1, s, 0.8).unwrap();
            assert!(e < 1e-6, "{s}: {e}");
        }
    }

    #[test]
    fn catenoid_stage0_boundary_and_shift() {
        let p = ac();
        let opts = ResidualOptions::default();
        let m = MinimalApproximation::new(&catenoid(), &p, &opts).unwrap();
        assert!(m.shifts.jacobi_residual < 1e-6, "{}", m.shifts.jacobi_residual);
        let b = m.boundary_check(0, 0.1);
        assert!(b.neumann_max_dev < 1e-12 && b.dirichlet_max < 1e-14);
    }

    #[test]
    fn focal_crossing_is_reported() {
        let p = ac();
        let m = MinimalApproximation::new(&catenoid(), &p, &ResidualOptions::default()).unwrap();
        assert!(matches!(m.residual_field(0, 0.1, 15.0, 20), Err(ResidualError::FocalPointCrossing { .. })));
    }

    #[test]
    fn delaunay_is_not_minimal_case() {
        let p = ac();
        let (s, _) = delaunay(0.2).unwrap();
        assert!(MinimalApproximation::new(&s, &p, &ResidualOptions::default()).is_err());
    }

    #[test]
    fn cylinder_leading_corrector_is_trace_times_dtn() {
        let p = ac();
        let (s, _) = delaunay(0.25).unwrap();
        let opts = ResidualOptions { n_sigma_periodic: 16, ..Default::default() };
        let h = CmcHierarchy::build(&s, &p, &opts, 2).unwrap();
        let dtn = crate::correctors::p0_dtn(&p);
        let nt = p.len();
        let err = (0..nt).map(|k| (h.phi[0][k].v + 2.0 * dtn.p[k]).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
        assert!(h.levels[1..].iter().all(|l| l.slope_std < 1e-10 && l.slope_mean.abs() < 1e-10), "{:?}", h.levels);
        let cmc = crate::correctors::cmc_phi0_h0(&p, 2.0, 4.0);
        assert_relative_eq!(h.h0, cmc.h0_cmc, epsilon = 1e-9);
    }

    #[test]
    fn lema8_ratio_is_stable() {
        let p = ac();
        let c = lema8_check(&p, &spec(&p), 0.1, &ResidualOptions::default()).unwrap();
        assert!(c.relative_change < 0.1, "{c:?}");
    }

    #[test]
    fn smoothstep_matches_ends() {
        assert_eq!(smoothstep_down(0.0), (1.0, 0.0, 0.0));
        let (e, d, _) = smoothstep_down(0.5);
        assert_relative_eq!(e, 0.5, epsilon = 1e-15);
        assert!(d < 0.0);
    }
}
