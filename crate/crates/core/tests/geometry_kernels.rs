use overdet::geometry::{
    catenoid, delaunay, jacobi_kernel_residuals, kernel_field_names, mean_curvature_parallel,
};
use proptest::prelude::*;

#[test]
fn jacobi_kernels_converge_at_stencil_order() {
    let (d, _) = delaunay(0.2).unwrap();
    for s in [d, catenoid()] {
        for name in kernel_field_names(&s) {
            let r = jacobi_kernel_residuals(&s, name, &[81, 161, 321]).unwrap();
            let order = (r[1] / r[2]).log2();
            assert!(r[2] < 1e-5 && order > 3.5, "{} {name}: {r:?}", s.name());
        }
    }
}

#[test]
fn delaunay_neck_and_bulge() {
    let (s, p) = delaunay(0.2).unwrap();
    let o = s.orbit.as_ref().unwrap();
    assert!((o.eval(0.0).0 - p.phi_minus).abs() < 1e-8);
    assert!((o.eval(p.period_s / 2.0).0 - p.phi_plus).abs() < 1e-8);
}

proptest! {
    #[test]
    fn sphere_partial_sums_within_remainder(z in -0.9f64..0.9, r in 1.0f64..3.0, k in 1usize..12) {
        let h = mean_curvature_parallel(&[1.0 / r, 1.0 / r], z * r, k).unwrap();
        prop_assert!((h.exact - 2.0 / (r - z * r)).abs() < 1e-12 * h.exact.abs());
        prop_assert!((h.partial_sum - h.exact).abs() <= h.remainder_bound * (1.0 + 1e-12) + 1e-14);
    }
}
