use approx::assert_relative_eq;
use overdet::correctors::{build_family, compute_constants, p0_dtn, solve_corrector};
use overdet::numerics::{ode, quad};
use overdet::profiles::{make_nonlinearity, solve_profile, GridSpec, NonlinearityKind};
use proptest::prelude::*;

fn shoot(f: &overdet::profiles::Nonlinearity, wp0: f64, t_end: f64) -> Vec<ode::Step> {
    ode::integrate(
        |_, y| vec![y[1], -f.f(y[0])],
        0.0,
        &[0.0, wp0],
        t_end,
        ode::Tolerance { hmax: 0.01, ..Default::default() },
        |_, _| false,
    )
}

#[test]
fn fisher_kpp_matches_shooting() {
    let f = make_nonlinearity(NonlinearityKind::FisherKpp, None).unwrap();
    let p = solve_profile(&f, GridSpec::default()).unwrap();
    assert_relative_eq!(p.wp0(), (1.0f64 / 3.0).sqrt(), epsilon = 1e-13);
    let steps = shoot(&f, p.wp0(), 6.0);
    let dev = steps.iter().map(|s| (p.eval(s.x).w - s.y[0]).abs()).fold(0.0, f64::max);
    assert!(dev < 1e-8, "{dev}");
}

#[test]
fn allen_cahn_constants_closed_form() {
    let f = make_nonlinearity(NonlinearityKind::AllenCahn, None).unwrap();
    let p = solve_profile(&f, GridSpec::default()).unwrap();
    let c = compute_constants(&p);
    // ∫_0^∞ sech⁴(t/√2)/2 dt = √2/3
    let w2: Vec<f64> = p.wp.iter().map(|x| x * x).collect();
    assert_relative_eq!(quad::integrate(&w2, p.h), 2f64.sqrt() / 3.0, epsilon = 1e-12);
    let y: Vec<f64> = p.t.iter().zip(&w2).map(|(t, x)| (t + c.c0) * x).collect();
    assert!(quad::integrate(&y, p.h).abs() < 1e-12);
    assert_relative_eq!(p0_dtn(&p).pp[0], 2.0 / 3.0, epsilon = 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn custom_polynomial_profiles(a in 0.0f64..2.0) {
        // f = s(1 - s)(1 + a s)
        let c = [0.0, 1.0, a - 1.0, -a];
        let f = make_nonlinearity(NonlinearityKind::Custom, Some(&c)).unwrap();
        let p = solve_profile(&f, GridSpec::default()).unwrap();
        prop_assert!(p.residual() < 1e-7);
        prop_assert!(p.w.windows(2).all(|w| w[1] >= w[0]));
        let k = compute_constants(&p);
        let fam = build_family(&p, &k).unwrap();
        for e in &fam.entries {
            prop_assert!(e.solution.projection.abs() < 1e-9);
        }
    }

    #[test]
    fn corrector_is_linear(s in -3.0f64..3.0) {
        let f = make_nonlinearity(NonlinearityKind::AllenCahn, None).unwrap();
        let p = solve_profile(&f, GridSpec::default()).unwrap();
        let q: Vec<f64> = p.t.iter().map(|t| (-2.0 * t).exp()).collect();
        let qs: Vec<f64> = q.iter().map(|x| s * x).collect();
        let a = solve_corrector(&p, &q).unwrap();
        let b = solve_corrector(&p, &qs).unwrap();
        for (x, y) in a.p.iter().zip(&b.p) {
            prop_assert!((s * x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        }
    }
}
