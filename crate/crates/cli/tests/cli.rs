use std::f64::consts::PI;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_annulus-metrics"));
    cmd.env_remove("ANNULUS_METRICS_TAIL_TOL");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

/// Header row and data rows of a CSV with `#` metadata lines.
fn table(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let i = header
        .iter()
        .position(|h| h == name)
        .unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

fn meta_value(text: &str, key: &str) -> f64 {
    let needle = format!("{key}=");
    text.lines()
        .filter(|l| l.starts_with('#'))
        .flat_map(|l| l.split_whitespace())
        .find_map(|w| w.strip_prefix(&needle))
        .unwrap_or_else(|| panic!("no {key} in metadata"))
        .parse()
        .unwrap()
}

#[test]
fn eval_shows_carath_equals_two_pi_kernel() {
    let out = run(&["eval", "--r", "0.5", "--z", "0.7"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("# annulus-metrics v"));
    assert!(text.lines().next().unwrap().ends_with("schema=1"));
    let (h, rows) = table(&text);
    let s = column(&h, &rows, "S")[0];
    let c = column(&h, &rows, "c")[0];
    assert!((c - 2.0 * PI * s).abs() <= 1e-15 * c);
}

#[test]
fn eval_near_disc_limit() {
    let out = run(&["eval", "--r", "0.01", "--z", "0.5", "--kappa2"]);
    assert!(out.status.success());
    let (h, rows) = table(&stdout(&out));
    let c = column(&h, &rows, "c")[0];
    assert!((c - 4.0 / 3.0).abs() <= 0.05 * 4.0 / 3.0, "{c}");
    assert!(h.contains(&"kappa2_c".to_string()));
}

#[test]
fn eval_several_points_as_json() {
    let out = run(&[
        "eval",
        "--r",
        "0.2",
        "--z",
        "0.5",
        "--z",
        "-0.3+0.4i",
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    // rotation invariance: both points have modulus 1/2
    let c0 = rows[0]["c"].as_f64().unwrap();
    let c1 = rows[1]["c"].as_f64().unwrap();
    assert!((c0 - c1).abs() < 1e-13 * c0);
}

#[test]
fn domain_errors_exit_two() {
    let out = run(&["eval", "--r", "2", "--z", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("(0,1)"), "{}", stderr(&out));
    let out = run(&["eval", "--r", "0.5", "--z", "0.3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("|z|"));
    let out = run(&["eval", "--r", "0.5", "--z", "0.6 + 1i"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["sweep", "--lambda", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["sweep", "--quantities", "curvature"]);
    assert_eq!(out.status.code(), Some(2));
    let out = bin()
        .env("ANNULUS_METRICS_TAIL_TOL", "tight")
        .args(["eval", "--r", "0.5", "--z", "0.7"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("ANNULUS_METRICS_TAIL_TOL"));
}

#[test]
fn env_tail_tolerance_reaches_the_output() {
    let out = bin()
        .env("ANNULUS_METRICS_TAIL_TOL", "1e-9")
        .args(["eval", "--r", "0.5", "--z", "0.7"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(stdout(&out).contains("tail_tol=1.0000000000000001e-9"));
    let out = bin()
        .env("ANNULUS_METRICS_TAIL_TOL", "1e-9")
        .args(["--tail-tol", "1e-12", "eval", "--r", "0.5", "--z", "0.7"])
        .output()
        .unwrap();
    assert!(stdout(&out).contains("tail_tol=9.9999999999999998e-13"));
}

#[test]
fn convergence_failure_exits_three_and_failed_sweep_exits_four() {
    let out = run(&["--n-max", "1", "--n-cap", "1", "eval", "--r", "0.9", "--z", "0.95"]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    let out = run(&[
        "--n-max",
        "1",
        "--n-cap",
        "1",
        "sweep",
        "--r-values",
        "0.9,0.8",
        "--lambda",
        "0.5",
    ]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
    assert!(stderr(&out).contains("every sweep row failed"));
}

#[test]
fn default_sweep_reproduces_szego_curvature_table() {
    let out = run(&["sweep", "--quantities", "kappa_s"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let limits: Vec<(String, Option<f64>)> = text
        .lines()
        .filter(|l| l.starts_with("# limit"))
        .map(|l| {
            let kind = l
                .split_whitespace()
                .find_map(|w| w.strip_prefix("kind="))
                .unwrap()
                .to_string();
            let value = l
                .split_whitespace()
                .find_map(|w| w.strip_prefix("value="))
                .map(|v| v.parse().unwrap());
            (kind, value)
        })
        .collect();
    let expected = [
        -4.0,
        -12.0,
        f64::NEG_INFINITY,
        -4.0,
        4.0,
        -4.0,
        f64::NEG_INFINITY,
        -12.0,
        -4.0,
    ];
    assert_eq!(limits.len(), expected.len());
    for ((kind, value), e) in limits.iter().zip(expected) {
        if e.is_infinite() {
            assert_eq!(kind, "-inf");
        } else {
            assert_eq!(kind, "finite");
            assert!((value.unwrap() - e).abs() <= 0.05 * e.abs(), "{value:?} vs {e}");
        }
    }
    let (h, rows) = table(&text);
    assert_eq!(rows.len(), 9 * 5);
    assert_eq!(h[..3], ["r", "lambda", "kappa_s"]);
}

#[test]
fn sweep_bytes_are_deterministic() {
    let args = ["sweep", "--extended", "--lambda", "0.3,1/6,0.7"];
    let a = bin().args(args).args(["--threads", "1"]).output().unwrap();
    let b = bin().args(args).args(["--threads", "4"]).output().unwrap();
    let c = bin().args(args).output().unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    let j1 = bin().args(args).args(["--format", "json"]).output().unwrap();
    let j2 = bin()
        .args(args)
        .args(["--format", "json", "--threads", "2"])
        .output()
        .unwrap();
    assert_eq!(j1.stdout, j2.stdout);
    let v: serde_json::Value = serde_json::from_slice(&j1.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 3 * 7);
}

#[test]
fn ratio_grows_monotonically() {
    let out = run(&["sweep", "--quantities", "ratio_s_over_c", "--lambda", "0.5"]);
    assert!(out.status.success());
    let (h, rows) = table(&stdout(&out));
    let ratio = column(&h, &rows, "ratio_s_over_c");
    assert!(ratio.windows(2).all(|w| w[1] > 2.0 * w[0]), "{ratio:?}");
    let out = run(&[
        "sweep",
        "--quantities",
        "ratio_s_over_c",
        "--lambda",
        "0.5",
        "--extended",
    ]);
    assert!(stdout(&out).contains("kind=+inf"));
}

#[test]
fn closed_geodesic_at_geometric_mean() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("closed.csv");
    let out = run(&[
        "geodesic",
        "--r",
        "0.1",
        "--metric",
        "s",
        "--closed",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!((meta_value(&text, "rho_star") - 0.1f64.sqrt()).abs() < 1e-6);
    assert!(meta_value(&text, "period_miss") < 1e-6);
    let (h, rows) = table(&text);
    assert_eq!(h, ["t", "re_z", "im_z", "abs_z", "speed", "winding"]);
    let radii = column(&h, &rows, "abs_z");
    assert!(radii.iter().all(|x| (x - 0.1f64.sqrt()).abs() < 1e-6));
}

#[test]
fn spiral_and_free_geodesic_traces() {
    let out = run(&["geodesic", "--r", "0.1", "--metric", "c", "--spiral", "--z0", "0.5"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(meta_value(&text, "winding") >= 20.0);
    assert!(meta_value(&text, "closure_distance") > 1e-3);
    assert!(text.contains("stayed_in_band=true"));
    let out = run(&[
        "geodesic", "--r", "0.1", "--metric", "c", "--z0", "0.5", "--angle", "0", "--t-end", "10",
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("# escape"));
    assert!(stderr(&out).contains("Outer"));
    let out = run(&["geodesic", "--r", "0.1", "--metric", "c"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn elliptic_residual() {
    let out = run(&["elliptic", "--r", "0.4", "--z", "0.3+0.2i"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let residual: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("ode_residual,"))
        .and_then(|v| v.split('+').next())
        .unwrap()
        .parse()
        .unwrap();
    assert!(residual <= 1e-9);
    let out = run(&["elliptic", "--r", "0.4", "--z", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("pole"));
}

#[test]
fn quick_selftest_reports_every_criterion() {
    let out = run(&["selftest", "--quick"]);
    let text = stdout(&out);
    for id in 1..=11 {
        let tag = format!(" {id:>2} ");
        assert!(text.lines().any(|l| l.contains(&tag)), "no line for {id}:\n{text}");
    }
    // only the 2% window at λ = 1/4 is missed (c = 1.0200000302 at r = 1e-4)
    let failing: Vec<&str> = text.lines().filter(|l| l.starts_with("FAIL")).collect();
    assert_eq!(failing.len(), 1, "{text}");
    assert!(failing[0].starts_with("FAIL  1 "));
    assert_eq!(out.status.code(), Some(5));
    let out = run(&["selftest", "--criterion", "6,9", "--quick"]);
    assert!(out.status.success(), "{}", stdout(&out));
    let out = run(&["selftest", "--criterion", "11"]);
    assert_eq!(out.status.code(), Some(2));
}
