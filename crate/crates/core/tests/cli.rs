use std::path::PathBuf;
use std::process::Command;

fn model(name: &str) -> String {
    let mut p = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    p.push("models");
    p.push(format!("{name}.json"));
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_flowcalc")).args(args).output().expect("binary runs");
    (
        out.status.code().expect("exit code"),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn validate_accepts_a_valid_model() {
    let (code, stdout, _) = run(&["validate", &model("cancer")]);
    assert_eq!(code, 0);
    assert!(stdout.contains("status: valid"));
}

#[test]
fn validate_names_the_offending_state() {
    let (code, stdout, _) = run(&["validate", &model("invalid_prob_sum")]);
    assert_eq!(code, 1);
    assert!(stdout.contains("state 0"), "{stdout}");

    let (code, stdout, _) = run(&["validate", &model("bad_row")]);
    assert_eq!(code, 1);
    assert!(stdout.contains("row sick"), "{stdout}");
}

#[test]
fn invalid_models_are_not_solved() {
    let (code, _, stderr) = run(&["reduce", &model("invalid_prob_sum")]);
    assert_eq!(code, 1, "{stderr}");
}

#[test]
fn simulating_non_exponential_waits_is_a_structural_error() {
    let (code, _, stderr) = run(&["simulate", &model("erlang"), "-n", "3"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("non-exponential"), "{stderr}");
}

#[test]
fn missing_file_and_bad_arguments() {
    assert_eq!(run(&["reduce", "/nonexistent/model.json"]).0, 1);
    assert_eq!(run(&["reduce"]).0, 1);
    assert_eq!(run(&["reduce", &model("kidney"), "--from", "nowhere"]).0, 1);
    assert_eq!(run(&["--help"]).0, 0);
}

#[test]
fn kidney_reduce() {
    let (code, stdout, _) = run(&["reduce", &model("kidney")]);
    assert_eq!(code, 0);
    assert!(stdout.contains("numerator: [6]"), "{stdout}");
    assert!(stdout.contains("denominator: [6, -5, 1]"), "{stdout}");
}

#[test]
fn kidney_density_at_one() {
    let (code, stdout, _) = run(&["density", &model("kidney"), "--t-max", "2", "--steps", "2"]);
    assert_eq!(code, 0);
    let mut lines = stdout.lines();
    assert_eq!(lines.next(), Some("t,density,cdf,survival,hazard"));
    let row: Vec<f64> = lines.nth(1).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(row[0], 1.0);
    assert!((row[1] - 6.0 * ((-2.0f64).exp() - (-3.0f64).exp())).abs() < 1e-12);
    assert!((row[1] - 0.51326).abs() < 1e-4);
    assert!((row[2] + row[3] - 1.0).abs() < 1e-12);
}

#[test]
fn simulation_is_reproducible() {
    let args = ["simulate", &model("kidney"), "-n", "1", "--seed", "11"];
    let (code, first, _) = run(&args);
    assert_eq!(code, 0);
    assert_eq!(first.lines().count(), 1);
    assert!(first.trim().parse::<f64>().unwrap() > 0.0);

    let many = ["simulate", &model("birth_death"), "-n", "500", "--seed", "3"];
    assert_eq!(run(&many).1, run(&many).1);
    let (_, other, _) = run(&["simulate", &model("birth_death"), "-n", "500", "--seed", "4"]);
    assert_ne!(run(&many).1, other);
}

#[test]
fn simulation_summary() {
    let (code, stdout, _) = run(&["simulate", &model("cancer_mjp"), "-n", "2000", "--summary"]);
    assert_eq!(code, 0);
    for key in ["replicates: 2000", "reached:", "mean:", "sd:", "q50:"] {
        assert!(stdout.contains(key), "{stdout}");
    }
}

#[test]
fn check_passes_on_the_cancer_model() {
    let (code, stdout, stderr) = run(&["check", &model("cancer"), "-n", "20000"]);
    assert_eq!(code, 0, "{stdout}{stderr}");
    assert!(stdout.contains("result: pass"));
}

#[test]
fn check_fails_with_an_impossible_tolerance() {
    let (code, stdout, _) = run(&["check", &model("kidney"), "-n", "2000", "--ks-tol", "1e-9"]);
    assert_eq!(code, 1);
    assert!(stdout.contains("result: FAIL"), "{stdout}");
}

#[test]
fn repeated_pole_density() {
    let (code, stdout, _) = run(&["density", &model("repeated_pole"), "--t-max", "1", "--steps", "1"]);
    assert_eq!(code, 0);
    let last: Vec<f64> = stdout.lines().last().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert!((last[1] - 4.0 * (-2.0f64).exp()).abs() < 1e-12);
}

#[test]
fn density_columns_are_consistent() {
    let (code, stdout, _) = run(&["density", &model("illness_death"), "--t-max", "8", "--steps", "200"]);
    assert_eq!(code, 0);
    let rows: Vec<Vec<f64>> = stdout
        .lines()
        .skip(1)
        .map(|l| l.split(',').take(4).map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 201);
    assert_eq!((rows[0][2], rows[0][3]), (0.0, 1.0));
    for w in rows.windows(2) {
        assert!(w[1][2] >= w[0][2]);
    }
    for r in &rows {
        assert!((r[2] + r[3] - 1.0).abs() < 1e-12);
    }
    assert_eq!(stdout, run(&["density", &model("illness_death"), "--t-max", "8", "--steps", "200"]).1);
}

#[test]
fn simulated_mean_matches_the_first_moment() {
    let (_, reduce, _) = run(&["reduce", &model("cancer")]);
    let mean: f64 = reduce.lines().find_map(|l| l.strip_prefix("mean: ")).unwrap().parse().unwrap();
    let (code, summary, _) = run(&["simulate", &model("cancer"), "-n", "100000", "--seed", "5", "--summary"]);
    assert_eq!(code, 0);
    let field = |k: &str| -> f64 {
        summary.lines().find_map(|l| l.strip_prefix(k)).unwrap().trim().parse().unwrap()
    };
    let se = field("sd:") / 1e5f64.sqrt();
    assert!((field("mean:") - mean).abs() < 3.0 * se, "{summary} vs {mean}");
}

#[test]
fn check_passes_on_the_illness_death_model() {
    let (code, stdout, stderr) = run(&["check", &model("illness_death"), "-n", "50000"]);
    assert_eq!(code, 0, "{stdout}{stderr}");
}
