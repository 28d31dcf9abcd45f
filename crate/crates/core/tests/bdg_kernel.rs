use overdet::bdg::{kernel_identity_convergence, log_identity_limit, solve_g, solve_g_axis, BdgError};

#[test]
fn kernel_identity_converges() {
    let g = solve_g_axis().unwrap();
    let zero = kernel_identity_convergence(&g, 0, &[20, 40]).unwrap();
    assert!(zero.sup.iter().all(|s| *s == 0.0));
    let one = kernel_identity_convergence(&g, 1, &[40, 80, 160]).unwrap();
    assert!(one.sup[2] < one.sup[1] && one.sup[1] < one.sup[0]);
    assert!(one.orders.last().unwrap() > &1.5, "{one:?}");
}

#[test]
fn axis_shot_identities() {
    let g = solve_g_axis().unwrap();
    assert!(g.g_at_diagonal.abs() < 1e-12);
    assert!(g.ode_residual(0.01) < 1e-8);
    let (b0, _) = log_identity_limit(&g);
    assert!(b0.abs() < 1e-6);
}

#[test]
fn diagonal_shot_turns_before_axis() {
    assert!(matches!(solve_g(1e-6), Err(BdgError::TerminalConditionFailed(_))));
}
