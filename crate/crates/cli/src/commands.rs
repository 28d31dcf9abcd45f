//! One runner per subcommand. Runners compute, then hand back artifacts;
//! nothing here touches the filesystem.

use overdet::bdg::{
    curvature_source_even, curvature_source_odd, lemahc_construct, log_identity_limit, solve_g, solve_g_axis,
    AngularProfile, LemahcPart,
};
use overdet::correctors::{build_family, compute_constants, CorrectorSolution};
use overdet::geometry::{delaunay, Surface, SurfaceKind};
use overdet::halfspace_dtn::{coercivity, dtn_symbol};
use overdet::profiles::{make_nonlinearity, solve_profile, GridSpec, HeteroclinicProfile};
use overdet::residual::{CmcHierarchy, GridField, MinimalApproximation, WeightedNormSpec};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{PartChoice, RunConfig};
use crate::output::{fmt_f64, to_value, Stamp};
use crate::{acceptance, CliError, Command, GStartArg, Outcome};

/// Stamp over the command name and the effective configuration.
pub fn stamp(command: &str, cfg: &RunConfig) -> Stamp {
    #[derive(Serialize)]
    struct Keyed<'a> {
        command: &'a str,
        config: &'a RunConfig,
    }
    Stamp::new(&Keyed { command, config: cfg })
}

pub fn profile_for(cfg: &RunConfig) -> Result<HeteroclinicProfile, CliError> {
    let f = make_nonlinearity(cfg.nonlinearity.kind, cfg.nonlinearity.coefficients.as_deref())
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(solve_profile(&f, GridSpec { t_max: cfg.grid.t_max, nodes: cfg.grid.nodes })?)
}

pub fn norm_spec(cfg: &RunConfig, profile: &HeteroclinicProfile, seed: u64) -> WeightedNormSpec {
    WeightedNormSpec {
        nu: cfg.norm.nu,
        gamma: cfg.norm.gamma.unwrap_or(0.9 * profile.gamma),
        sigma: cfg.norm.sigma,
        pairs: cfg.norm.pairs,
        seed,
    }
}

pub fn dispatch(cmd: &Command, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let st = stamp(cmd.name(), cfg);
    match cmd {
        Command::Profile { .. } => profile(cfg, &st),
        Command::Constants { .. } => constants(cfg, &st),
        Command::Dtn { .. } => dtn(cfg, &st),
        Command::Delaunay { .. } => delaunay_export(cfg, &st),
        Command::BdgG { start, tol } => bdg_g(*start, *tol, &st),
        Command::BdgLemahc { .. } => bdg_lemahc(cfg, &st),
        Command::Residual { dump, .. } => residual(cfg, *dump, &st),
        Command::Acceptance => {
            let report = acceptance::run(cfg)?;
            let mut out = Outcome { summary: report.lines(), ..Default::default() };
            out.artifacts.add("acceptance.json", st.json(report.to_json()));
            let failed = report.failed();
            if failed > 0 {
                out.failure = Some(CliError::Acceptance { failed });
            }
            Ok(out)
        }
    }
}

fn profile(cfg: &RunConfig, st: &Stamp) -> Result<Outcome, CliError> {
    let p = profile_for(cfg)?;
    let mut out = Outcome::default();
    let rows = (0..p.len()).map(|i| vec![p.t[i], p.w[i], p.wp[i], p.wpp[i]]);
    out.artifacts.add("profile.csv", st.csv(&["t", "w", "w_prime", "w_double_prime"], rows)?);
    let closed = p.closed_form_value(0.0).map(|_| {
        p.t.iter().zip(&p.w).map(|(t, w)| (w - p.closed_form_value(*t).unwrap()).abs()).fold(0.0, f64::max)
    });
    let summary = json!({
        "nonlinearity": p.nonlinearity.kind.to_string(),
        "w_prime_0": p.wp0(),
        "gamma": p.gamma,
        "ode_residual": p.residual(),
        "closed_form_max_dev": closed,
    });
    out.artifacts.add("profile.json", st.json(summary));
    out.summary.push(format!("w'(0) = {}", fmt_f64(p.wp0())));
    match closed {
        Some(d) => out.summary.push(format!("closed-form max deviation = {}", fmt_f64(d))),
        None => out.summary.push(format!("ODE residual = {}", fmt_f64(p.residual()))),
    }
    Ok(out)
}

fn corrector_csv(st: &Stamp, p: &HeteroclinicProfile, s: &CorrectorSolution) -> Result<String, CliError> {
    let rows = (0..p.len()).map(|i| vec![p.t[i], s.q[i], s.p[i], s.pp[i]]);
    st.csv(&["t", "q", "p", "p_prime"], rows)
}

fn constants(cfg: &RunConfig, st: &Stamp) -> Result<Outcome, CliError> {
    let p = profile_for(cfg)?;
    let c = compute_constants(&p);
    let fam = build_family(&p, &c)?;
    let mut out = Outcome::default();
    out.artifacts.add("constants.json", st.json(to_value(&c)));
    out.artifacts.add("corrector_p0.csv", corrector_csv(st, &p, &fam.p0_graph)?);
    for e in &fam.entries {
        out.artifacts.add(format!("corrector_p{}.csv", e.ell), corrector_csv(st, &p, &e.solution)?);
    }
    out.summary.push(format!(
        "c0 = {}  c1 = {}  c2 = {}  c3 = {}  c4 = {}",
        fmt_f64(c.c0),
        fmt_f64(c.c1),
        fmt_f64(c.c2),
        fmt_f64(c.c3),
        fmt_f64(c.c4)
    ));
    Ok(out)
}

fn dtn(cfg: &RunConfig, st: &Stamp) -> Result<Outcome, CliError> {
    let p = profile_for(cfg)?;
    let mut sym = dtn_symbol(&p, &cfg.dtn.xi)?;
    if cfg.dtn.coercivity_n != sym.coercivity.coarse_n {
        sym.coercivity = coercivity(&p, cfg.dtn.coercivity_n);
    }
    let mut out = Outcome::default();
    let rows = sym.table.iter().map(|(xi, m)| vec![*xi, *m, m * xi]);
    out.artifacts.add("dtn.csv", st.csv(&["xi", "m", "m_times_xi"], rows)?);
    let c = &sym.coercivity;
    out.artifacts.add(
        "dtn.json",
        st.json(json!({
            "a": c.a,
            "grid_n": c.grid_n,
            "a_coarse": c.a_coarse,
            "coarse_n": c.coarse_n,
            "relative_change": c.relative_change,
            "rayleigh_vector_norm": c.rayleigh_vector_norm,
            "decreasing": sym.decreasing(),
        })),
    );
    out.summary.push(format!("coercivity a = {} (relative change {})", fmt_f64(c.a), fmt_f64(c.relative_change)));
    Ok(out)
}

fn delaunay_export(cfg: &RunConfig, st: &Stamp) -> Result<Outcome, CliError> {
    let SurfaceKind::Delaunay { tau } = cfg.surface else {
        return Err(CliError::Config("delaunay needs a delaunay surface".into()));
    };
    let (surf, params) = delaunay(tau)?;
    let orbit = surf.orbit.as_ref().expect("delaunay orbit");
    let n = cfg.delaunay_samples.max(2);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let s = params.period_s * i as f64 / n as f64;
            let (phi, _, _, psi) = orbit.eval(s);
            let c = surf.curvatures(s);
            vec![s, phi, psi, c.k[0], c.k[1], c.h]
        })
        .collect();
    let hs: Vec<f64> = rows.iter().map(|r| r[5]).collect();
    let mean = hs.iter().sum::<f64>() / n as f64;
    let std = (hs.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let mut out = Outcome::default();
    out.artifacts.add("surface.csv", st.csv(&["s", "phi", "psi", "k1", "k2", "H"], rows)?);
    out.artifacts.add(
        "delaunay.json",
        st.json(json!({
            "tau": params.tau,
            "phi_minus": params.phi_minus,
            "phi_plus": params.phi_plus,
            "period": params.period,
            "period_s": params.period_s,
            "H_mean": mean,
            "H_std": std,
            "first_integral_error": orbit.first_integral_error(),
        })),
    );
    out.summary.push(format!("period = {}  H = {} ± {}", fmt_f64(params.period), fmt_f64(mean), fmt_f64(std)));
    Ok(out)
}

fn g_csv(st: &Stamp, g: &AngularProfile) -> Result<String, CliError> {
    let rows = (0..g.theta.len()).map(|i| vec![g.theta[i], g.g[i], g.gp[i]]);
    st.csv(&["theta", "g", "g_prime"], rows)
}

fn bdg_g(start: GStartArg, tol: f64, st: &Stamp) -> Result<Outcome, CliError> {
    let g = match start {
        GStartArg::Axis => solve_g_axis()?,
        GStartArg::Diagonal => solve_g(tol)?,
    };
    let (b0, b0_err) = log_identity_limit(&g);
    let mut out = Outcome::default();
    out.artifacts.add("angular_profile.csv", g_csv(st, &g)?);
    out.artifacts.add(
        "bdg_g.json",
        st.json(json!({
            "start": format!("{start:?}").to_lowercase(),
            "g1": g.g1(),
            "g1_raw": g.g1_raw,
            "g_at_diagonal": g.g_at_diagonal,
            "terminal_gp": g.terminal_gp,
            "ode_residual": g.ode_residual(0.01),
            "log_identity_b0": b0,
            "log_identity_b0_stderr": b0_err,
        })),
    );
    out.summary.push(format!("g1 = {}  g(pi/4) = {}", fmt_f64(g.g1()), fmt_f64(g.g_at_diagonal)));
    Ok(out)
}

fn bdg_lemahc(cfg: &RunConfig, st: &Stamp) -> Result<Outcome, CliError> {
    let g = solve_g_axis()?;
    let parts: &[LemahcPart] = match cfg.lemahc.part {
        PartChoice::A => &[LemahcPart::A],
        PartChoice::B => &[LemahcPart::B],
        PartChoice::Both => &[LemahcPart::A, LemahcPart::B],
    };
    let mut out = Outcome::default();
    for &part in parts {
        let src = |t: f64| match part {
            LemahcPart::A => curvature_source_even(&g, t),
            LemahcPart::B => curvature_source_odd(&g, t),
        };
        let rep = lemahc_construct(&g, part, &src, cfg.lemahc.options())?;
        let mut v = to_value(&rep);
        v["fitted_decay_exponent"] = json!(rep.decay_exponent);
        v["passed"] = json!(rep.passed());
        let tag = format!("{part:?}").to_lowercase();
        out.artifacts.add(format!("lemahc_{tag}.json"), st.json(v));
        out.summary.push(format!(
            "part {tag}: decay exponent {} (threshold {})",
            fmt_f64(rep.decay_exponent),
            fmt_f64(rep.threshold)
        ));
    }
    Ok(out)
}

fn dump_csv(st: &Stamp, field: &GridField, spec: &WeightedNormSpec) -> Result<String, CliError> {
    st.csv(&["s", "t", "residual", "weight"], field.rows(spec).into_iter().map(|r| r.to_vec()))
}

fn residual(cfg: &RunConfig, dump: bool, st: &Stamp) -> Result<Outcome, CliError> {
    let seed = cfg.require_seed()?;
    let p = profile_for(cfg)?;
    let spec = norm_spec(cfg, &p, seed);
    let opts = cfg.residual_options();
    let surf = Surface::from_kind(cfg.surface)?;
    let eps0 = cfg.epsilons[0];
    let mut out = Outcome::default();
    let (report, extra, field) = if surf.is_minimal() {
        let m = MinimalApproximation::new(&surf, &p, &opts)?;
        let rep = m.order_study(cfg.stage, &opts, &spec)?;
        let field = if dump {
            Some(m.residual_field(cfg.stage, eps0, m.collar(eps0, opts.delta), opts.t_stride)?)
        } else {
            None
        };
        (rep, Value::Null, field)
    } else {
        let h = CmcHierarchy::build(&surf, &p, &opts, 4)?;
        let rep = h.order_study(&opts, &spec)?;
        let field = if dump {
            let t_c = rep.collars[0];
            Some(h.residual_field(eps0, t_c, opts.t_stride)?)
        } else {
            None
        };
        (rep, to_value(&h.levels), field)
    };
    let mut v = to_value(&report);
    if !extra.is_null() {
        v["levels"] = extra;
    }
    v["seed"] = json!(seed);
    out.artifacts.add("residual.json", st.json(v));
    if let Some(f) = field {
        out.artifacts.add("residual_grid.csv", dump_csv(st, &f, &spec)?);
    }
    out.summary.push(format!(
        "{} stage {}: fitted order {} (CI [{}, {}]), fixed-window order {}",
        report.surface,
        report.stage,
        fmt_f64(report.fitted_order),
        fmt_f64(report.order_ci[0]),
        fmt_f64(report.order_ci[1]),
        fmt_f64(report.fixed_window_order)
    ));
    Ok(out)
}
