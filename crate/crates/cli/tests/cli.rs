use std::path::Path;
use std::process::{Command, Output};

fn overdet(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_overdet"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("OVERDET_THREADS")
        .output()
        .expect("spawn overdet")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn header(csv: &str) -> (String, String) {
    let mut lines = csv.lines();
    (lines.next().unwrap().to_string(), lines.next().unwrap().to_string())
}

fn small_config(dir: &Path) -> std::path::PathBuf {
    let p = dir.join("config.json");
    std::fs::write(&p, r#"{"norm": {"pairs": 2000}, "residual": {"half_width": 1.0, "t_stride": 20}}"#).unwrap();
    p
}

#[test]
fn profile_writes_stamped_csv_and_closed_form_line() {
    let d = tempfile::tempdir().unwrap();
    let o = overdet(&["profile", "--kind", "allen-cahn"], d.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("closed-form max deviation"));
    let (stamp, cols) = header(&read(d.path(), "profile.csv"));
    assert!(stamp.starts_with("# config_hash=") && stamp.contains("version=0.1.0"));
    assert_eq!(cols, "t,w,w_prime,w_double_prime");
    let v: serde_json::Value = serde_json::from_str(&read(d.path(), "profile.json")).unwrap();
    assert!(v["closed_form_max_dev"].as_f64().unwrap() < 1e-9);
    assert_eq!(v["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn constants_and_correctors() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(overdet(&["constants"], d.path()).status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&read(d.path(), "constants.json")).unwrap();
    for k in ["c0", "c1", "c2", "c3", "c4", "h0_cmc", "quadrature_error", "version"] {
        assert!(v.get(k).is_some(), "{k}");
    }
    for l in 0..=5 {
        assert_eq!(header(&read(d.path(), &format!("corrector_p{l}.csv"))).1, "t,q,p,p_prime");
    }
}

#[test]
fn dtn_and_delaunay_columns() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(overdet(&["dtn", "--xi", "0,1,10"], d.path()).status.code(), Some(0));
    assert_eq!(header(&read(d.path(), "dtn.csv")).1, "xi,m,m_times_xi");
    let v: serde_json::Value = serde_json::from_str(&read(d.path(), "dtn.json")).unwrap();
    assert!(v["a"].as_f64().unwrap() > 0.0);
    assert_eq!(overdet(&["delaunay", "--tau", "0.2"], d.path()).status.code(), Some(0));
    assert_eq!(header(&read(d.path(), "surface.csv")).1, "s,phi,psi,k1,k2,H");
    let v: serde_json::Value = serde_json::from_str(&read(d.path(), "delaunay.json")).unwrap();
    assert!(v["H_std"].as_f64().unwrap() < 1e-6);
}

#[test]
fn bdg_axis_start_succeeds_and_diagonal_start_is_numerical_failure() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(overdet(&["bdg-g"], d.path()).status.code(), Some(0));
    assert_eq!(header(&read(d.path(), "angular_profile.csv")).1, "theta,g,g_prime");
    assert_eq!(overdet(&["bdg-g", "--start", "diagonal"], d.path()).status.code(), Some(3));
}

#[test]
fn residual_requires_seed() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(overdet(&["residual"], d.path()).status.code(), Some(2));
}

#[test]
fn config_errors_exit_2() {
    let d = tempfile::tempdir().unwrap();
    let bad = d.path().join("bad.json");
    std::fs::write(&bad, r#"{"unknown_field": 1}"#).unwrap();
    let cfg = bad.to_str().unwrap();
    assert_eq!(overdet(&["profile", "--config", cfg], d.path()).status.code(), Some(2));
    assert_eq!(overdet(&["residual", "--seed", "1", "--eps", "0.7"], d.path()).status.code(), Some(2));
    assert_eq!(overdet(&["residual", "--seed", "1", "--surface", "sphere"], d.path()).status.code(), Some(2));
    assert_eq!(overdet(&["profile", "--threads", "0"], d.path()).status.code(), Some(2));
}

#[test]
fn residual_is_byte_identical_across_runs_and_thread_counts() {
    let d = tempfile::tempdir().unwrap();
    let cfg = small_config(d.path());
    let cfg = cfg.to_str().unwrap();
    let args = ["residual", "--config", cfg, "--seed", "5", "--surface", "catenoid", "--stage", "1", "--dump"];
    let a = d.path().join("a");
    let b = d.path().join("b");
    assert_eq!(overdet(&args, &a).status.code(), Some(0));
    let o = Command::new(env!("CARGO_BIN_EXE_overdet"))
        .args(args)
        .arg("--out")
        .arg(&b)
        .env("OVERDET_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let ja = read(&a, "residual.json");
    assert_eq!(ja, read(&b, "residual.json"));
    let v: serde_json::Value = serde_json::from_str(&ja).unwrap();
    for k in ["surface", "nonlinearity", "stage", "epsilons", "norms", "fitted_order", "order_ci", "neumann_max_dev"] {
        assert!(v.get(k).is_some(), "{k}");
    }
    assert_eq!(header(&read(&a, "residual_grid.csv")).1, "s,t,residual,weight");
    // 17 significant digits in every float
    assert!(ja.lines().any(|l| l.contains("\"fitted_order\": ") && l.contains('e')));
}

#[test]
fn residual_on_delaunay_runs_the_cmc_hierarchy() {
    let d = tempfile::tempdir().unwrap();
    let cfg = small_config(d.path());
    let o = overdet(
        &["residual", "--config", cfg.to_str().unwrap(), "--seed", "2", "--surface", "delaunay", "--tau", "0.2"],
        d.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&read(d.path(), "residual.json")).unwrap();
    assert_eq!(v["stage"], "cmc4");
    assert_eq!(v["levels"].as_array().unwrap().len(), 4);
}
