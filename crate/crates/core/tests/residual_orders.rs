use overdet::geometry::{catenoid, delaunay, plane};
use overdet::profiles::{make_nonlinearity, solve_profile, GridSpec, HeteroclinicProfile, NonlinearityKind};
use overdet::residual::*;
use proptest::prelude::*;
use std::sync::OnceLock;

fn ac() -> &'static HeteroclinicProfile {
    static P: OnceLock<HeteroclinicProfile> = OnceLock::new();
    P.get_or_init(|| {
        let f = make_nonlinearity(NonlinearityKind::AllenCahn, None).unwrap();
        solve_profile(&f, GridSpec::default()).unwrap()
    })
}

#[test]
fn weighted_norm_cancels_weight() {
    let spec = WeightedNormSpec { nu: 4.5, gamma: 1.2, sigma: 0.5, pairs: 0, seed: 0 };
    let sigma: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
    let t: Vec<f64> = (0..30).map(|j| j as f64 * 0.1).collect();
    let r: Vec<f64> = sigma.iter().map(|s| 1.0 + s).collect();
    let data = r.iter().flat_map(|ri| t.iter().map(move |tj| ri.powf(-4.5) * (-1.2 * tj).exp())).collect();
    let f = GridField { sigma, t, lambda: vec![1.0; 20], r, epsilon: 0.1, data };
    approx::assert_relative_eq!(weighted_norm(&f, &spec).sup, 1.0, epsilon = 1e-12);
}

#[test]
fn constant_field_has_no_holder_part() {
    let spec = WeightedNormSpec { nu: 0.0, gamma: 0.0, sigma: 0.5, pairs: 5000, seed: 3 };
    let f = GridField {
        sigma: vec![0.0, 0.01, 0.02],
        t: vec![0.0, 0.5, 1.0],
        lambda: vec![1.0; 3],
        r: vec![2.0; 3],
        epsilon: 0.05,
        data: vec![1.0; 9],
    };
    let n = weighted_norm(&f, &spec);
    assert!(n.total >= 1.0 && n.holder == 0.0);
}

#[test]
fn catenoid_fixed_window_orders() {
    let opts = ResidualOptions::default();
    let spec = WeightedNormSpec { pairs: 5000, ..WeightedNormSpec::for_profile(ac(), 1) };
    let m = MinimalApproximation::new(&catenoid(), ac(), &opts).unwrap();
    let r0 = m.order_study(0, &opts, &spec).unwrap();
    let r1 = m.order_study(1, &opts, &spec).unwrap();
    // Σk³ = 0 on the catenoid: the ε³ terms vanish
    assert!((r0.fixed_window_order - 4.0).abs() < 0.3, "{}", r0.fixed_window_order);
    assert!((r1.fixed_window_order - 5.0).abs() < 0.3, "{}", r1.fixed_window_order);
    assert_eq!(r0.dirichlet_max, 0.0);
    assert!(r0.neumann_max_dev < 1e-14);
    assert!(r0.zone_ok() && r1.zone_ok());
}

#[test]
fn delaunay_hierarchy_balances() {
    let (s, _) = delaunay(0.2).unwrap();
    let h = CmcHierarchy::build(&s, ac(), &ResidualOptions::default(), 4).unwrap();
    assert!(h.balances_within(1e-8), "{:?}", h.levels);
    assert!(h.levels[2].slope_mean.abs() < 1e-10);
    let dtn = overdet::correctors::p0_dtn(ac());
    let nt = ac().len();
    let err = (0..nt).map(|k| (h.phi[0][k].v + 2.0 * dtn.p[k]).abs()).fold(0.0, f64::max);
    assert!(err < 1e-9);
}

#[test]
fn nonpolynomial_f_rejected_for_hierarchy() {
    let f = overdet::profiles::Nonlinearity::from_fn(|s| {
        let e = (s - 1.0).exp();
        [s * (1.0 - s) * e, 0.0, 0.0, 0.0, 0.0]
    });
    if let Ok(f) = f {
        if let Ok(p) = solve_profile(&f, GridSpec::default()) {
            let (s, _) = delaunay(0.2).unwrap();
            let r = CmcHierarchy::build(&s, &p, &ResidualOptions::default(), 1);
            assert!(matches!(r, Err(ResidualError::ComplexNonlinearity)));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn plane_is_degenerate(eps in 0.01f64..0.2, stage in 0u8..2) {
        let opts = ResidualOptions { half_width: 0.5, ds: 0.05, ..Default::default() };
        let m = MinimalApproximation::new(&plane(), ac(), &opts).unwrap();
        let f = m.residual_field(stage, eps, 10.0, 10).unwrap();
        prop_assert!(f.data.iter().all(|x| x.abs() <= 1e-14));
    }

    #[test]
    fn ambient_oracle_agrees(sigma in -1.5f64..1.5, t in 0.2f64..2.0) {
        let e1 = ambient_oracle_error(0.1, sigma, t, 2e-3);
        let e2 = ambient_oracle_error(0.1, sigma, t, 1e-3);
        prop_assert!(e2 < 1e-2 && e2 < e1, "{e1} {e2}");
    }
}
