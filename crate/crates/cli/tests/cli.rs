use std::fs;
use std::process::{Command, Output};

use necklace::bounds::build_section4;
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_necklace"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exit code")
}

/// Data rows of a CSV with `#` comment lines, as maps keyed by the header.
fn rows(csv: &str) -> Vec<Vec<(String, String)>> {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    lines
        .map(|l| header.iter().cloned().zip(l.split(',').map(String::from)).collect())
        .collect()
}

fn field(row: &[(String, String)], key: &str) -> f64 {
    row.iter().find(|(k, _)| k == key).unwrap().1.parse().unwrap()
}

fn text_field<'a>(row: &'a [(String, String)], key: &str) -> &'a str {
    &row.iter().find(|(k, _)| k == key).unwrap().1
}

fn footer(csv: &str, key: &str) -> f64 {
    let prefix = format!("# {key}=");
    csv.lines()
        .rev()
        .find_map(|l| l.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("no `{key}` footer"))
        .parse()
        .unwrap()
}

#[test]
fn validate_exit_codes() {
    assert_eq!(code(&["validate", "--bead", "simple:0.6"]), 0);
    assert_eq!(code(&["validate", "--bead", "simple:1.5"]), 2);
    assert_eq!(code(&["validate", "--bead", "simple:x"]), 2);
    assert_eq!(code(&["validate", "--bead", r#"{"rows": [[0.5, 0.6]]}"#]), 1);
    assert_eq!(code(&["validate", "--bead", r#"{"rows": [[0, 1]]}"#]), 1);
    assert_eq!(code(&["validate", "--bead", "{not json"]), 2);
    assert_eq!(code(&["validate", "--bead", "/nonexistent/bead.json"]), 2);
}

#[test]
fn validate_reports_moments() {
    let json: Value = serde_json::from_str(&stdout(&["validate", "--bead", "simple:0.5", "--format", "json"])).unwrap();
    assert!((json["mu"].as_f64().unwrap() - 2.0).abs() < 1e-9);
    assert!((json["sigma2"].as_f64().unwrap() - 2.0).abs() < 1e-9);
}

#[test]
fn bead_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bead.json");
    fs::write(&path, r#"{"rows": [[0.2, 0.5, 0.3], [0.4, 0.1, 0.5]]}"#).unwrap();
    assert_eq!(code(&["validate", "--bead", path.to_str().unwrap()]), 0);
}

#[test]
fn time_arguments_are_exclusive() {
    let base = ["evolve", "--bead", "simple:0.5", "--pattern", "alternating", "--n", "6"];
    let both: Vec<&str> = base.iter().copied().chain(["--t", "3", "--c", "0.1"]).collect();
    assert_eq!(code(&both), 2);
    assert_eq!(code(&base), 2);
    let bad_c: Vec<&str> = base.iter().copied().chain(["--c=-1"]).collect();
    assert_eq!(code(&bad_c), 2);
}

#[test]
fn evolve_at_time_zero_is_a_point_mass() {
    let csv = stdout(&["evolve", "--bead", "simple:0.5", "--pattern", "alternating", "--n", "6", "--t", "0"]);
    let rows = rows(&csv);
    let nonzero: Vec<_> = rows.iter().filter(|r| field(r, "probability") != 0.0).collect();
    assert_eq!(nonzero.len(), 1);
    assert_eq!(text_field(nonzero[0], "state_id"), "link:0");
    assert_eq!(field(nonzero[0], "probability"), 1.0);
}

#[test]
fn evolve_preserves_mass() {
    let csv = stdout(&["evolve", "--bead", "simple:0.6666666666666666", "--pattern", "alternating", "--n", "50", "--t", "530"]);
    let rows = rows(&csv);
    let total: f64 = rows.iter().map(|r| field(r, "probability")).sum();
    let stationary: f64 = rows.iter().map(|r| field(r, "stationary")).sum();
    assert!((total - 1.0).abs() < 1e-9);
    assert!((stationary - 1.0).abs() < 1e-9);
    let tv: f64 = rows.iter().map(|r| field(r, "tv_contribution")).sum();
    assert!((tv - footer(&csv, "tv")).abs() < 1e-12);
}

#[test]
fn output_is_deterministic_with_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let args = ["evolve", "--bead", "simple:0.3", "--pattern", "block", "--n", "12", "--c", "0.2", "--out"];
        let mut args: Vec<&str> = args.to_vec();
        args.push(path.to_str().unwrap());
        assert_eq!(code(&args), 0);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let meta: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("a.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["command"], "evolve");
    assert_eq!(meta["tool"], "necklace-cli");
}

#[test]
fn normalized_figure_reports_deviation() {
    let csv = stdout(&["figure", "--bead", "simple:0.6666666666666666", "--pattern", "alternating", "--n", "60", "--c", "0.1"]);
    let dev = footer(&csv, "max_deviation");
    assert!(dev.is_finite() && dev < 0.1, "deviation {dev}");
    let rows = rows(&csv);
    let mut xs: Vec<f64> = rows.iter().map(|r| field(r, "x")).collect();
    xs.sort_by(f64::total_cmp);
    assert!(xs[0] >= -1e-9 && xs[xs.len() - 1] < 1.0 + 1e-9);
}

#[test]
fn rearranged_profile_has_two_scales() {
    // simple bead with hold 2/3 spends three steps per visit
    let csv = stdout(&[
        "figure", "--bead", "simple:0.6666666666666666", "--pattern", "alternating", "--n", "40", "--c", "0.1",
        "--mode", "rearranged",
    ]);
    let rows = rows(&csv);
    let sum = |even: bool| -> f64 {
        rows.iter()
            .filter(|r| (field(r, "position") as usize).is_multiple_of(2) == even)
            .map(|r| field(r, "y"))
            .sum()
    };
    let ratio = sum(true) / sum(false);
    assert!((ratio - 3.0).abs() < 0.15, "ratio {ratio}");
}

#[test]
fn tv_table() {
    let csv = stdout(&["tv", "--bead", "simple:0.5", "--pattern", "alternating", "--n", "10", "--c", "0.1,1,10"]);
    assert!(csv.lines().any(|l| l == "c,t,tv_exact,tv_limit,abs_diff"));
    let rows = rows(&csv);
    assert_eq!(rows.len(), 3);
    let exact: Vec<f64> = rows.iter().map(|r| field(r, "tv_exact")).collect();
    assert!(exact[0] > exact[1] && exact[1] > exact[2]);
    assert!(exact[2] < 0.01);
    for r in &rows {
        let diff = (field(r, "tv_exact") - field(r, "tv_limit")).abs();
        assert!((diff - field(r, "abs_diff")).abs() < 1e-15);
    }
}

#[test]
fn bounds_report() {
    let json: Value = serde_json::from_str(&stdout(&["bounds", "--n", "20", "--p", "0.5"])).unwrap();
    let beta1_tilde = json["beta1_tilde"].as_f64().unwrap();
    let closed = 0.5 + 0.5 * (std::f64::consts::PI / 19.0).cos();
    assert!((beta1_tilde - closed).abs() < 1e-10);
    assert_eq!(json["p_n_disconnected"], true);
    assert!((json["beta1_p_n"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    let s4 = build_section4::<f64>(20, 0.5).unwrap();
    let curve = json["fill_curve"].as_array().unwrap();
    let t_max = curve.last().unwrap()[0].as_u64().unwrap();
    let exact = s4.tv_trajectory(0, t_max).unwrap();
    for point in curve {
        let t = point[0].as_u64().unwrap();
        let bound = point[1].as_f64().unwrap();
        assert!(exact[t as usize] <= bound + 1e-12, "t={t}: {} > {bound}", exact[t as usize]);
    }
    let nash = &json["nash"];
    let t = nash["t"].as_u64().unwrap();
    assert!(s4.worst_tv(t).unwrap() <= nash["bound"].as_f64().unwrap() + 1e-12);
    for step in json["steps"].as_array().unwrap() {
        if step["method"] == "nash" {
            assert!(step["exact_tv"].as_f64().unwrap() < 0.25);
        }
    }
}

#[test]
fn bounds_ratio_grows_as_q_shrinks() {
    let ratio = |p: &str| -> f64 {
        let json: Value = serde_json::from_str(&stdout(&["bounds", "--n", "10", "--p", p])).unwrap();
        let t = |m: &str| {
            json["steps"].as_array().unwrap().iter().find(|s| s["method"] == m).unwrap()["t"].as_f64().unwrap()
        };
        t("nash") / t("llt")
    };
    let r: Vec<f64> = ["0.5", "0.8", "0.9"].iter().map(|p| ratio(p)).collect();
    assert!(r[0] < r[1] && r[1] < r[2], "{r:?}");
}

#[test]
fn bounds_rejects_bad_parameters() {
    assert_eq!(code(&["bounds", "--n", "4", "--p", "0.5"]), 2);
    assert_eq!(code(&["bounds", "--n", "10", "--p", "1.0"]), 2);
    assert_eq!(code(&["bounds", "--n", "10", "--p", "0.5", "--eps", "0"]), 2);
}

#[test]
fn optimal_p() {
    let row = |k: &str| rows(&stdout(&["optimal-p", "--k", k])).remove(0);
    assert!((field(&row("0.5"), "p") - (3f64.sqrt() - 1.0)).abs() < 1e-12);
    assert!((field(&row("1"), "p") - 0.5).abs() < 1e-15);
    assert_eq!(code(&["optimal-p", "--k", "0"]), 2);
    assert_eq!(code(&["optimal-p", "--k", "1.5"]), 2);
}

#[test]
fn hot_agrees_with_evolution() {
    let csv = stdout(&[
        "hot", "--bead", r#"{"rows": [[0.2, 0.5, 0.3], [0.4, 0.1, 0.5]]}"#, "--r", "01101", "--t", "37",
        "--start", "interior:4:1", "--oracle",
    ]);
    assert!(footer(&csv, "max_abs_diff") < 1e-9);
    let total: f64 = rows(&csv).iter().map(|r| field(r, "probability")).sum();
    assert!((total - 1.0).abs() < 1e-9);
}

#[test]
fn bad_starts() {
    let base = ["evolve", "--bead", "simple:0.5", "--pattern", "alternating", "--n", "6", "--t", "3", "--start"];
    let with = |s: &'static str| -> Vec<&str> { base.iter().copied().chain([s]).collect() };
    assert_eq!(code(&with("bogus")), 2);
    assert_eq!(code(&with("link:99")), 2);
    assert_eq!(code(&with("interior:1:1")), 2);
    // a link without a bead at n-1 is not an allowed start for the limit profile
    let fig = ["figure", "--bead", "simple:0.5", "--pattern", "alternating", "--n", "6", "--t", "3", "--start", "link:3"];
    assert_eq!(code(&fig), 1);
}
