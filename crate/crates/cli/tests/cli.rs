use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        Self {
            dir: TempDir::new().unwrap(),
        }
    }

    fn file(&self, name: &str, contents: &str) -> PathBuf {
        let path = self.dir.path().join(name);
        std::fs::write(&path, contents).unwrap();
        path
    }

    fn run(&self, args: &[&str]) -> Output {
        self.run_env(args, &[])
    }

    fn run_env(&self, args: &[&str], env: &[(&str, &str)]) -> Output {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_nonext"));
        cmd.current_dir(self.dir.path())
            .args(args)
            .env_remove("NONEXT_THREADS");
        for (k, v) in env {
            cmd.env(k, v);
        }
        cmd.output().unwrap()
    }

    fn json(&self, args: &[&str]) -> (i32, Value) {
        let out = self.run(args);
        let text = String::from_utf8(out.stdout).unwrap();
        let value = serde_json::from_str(&text)
            .unwrap_or_else(|e| panic!("{e}: {text} / {}", String::from_utf8_lossy(&out.stderr)));
        (out.status.code().unwrap(), value)
    }
}

const MIXED: &str = r#"{"dim": 2, "re": [[0.5, 0], [0, 0.5]]}"#;
const PURE: &str = r#"{"dim": 2, "re": [[1, 0], [0, 0]]}"#;
const TWO_LEVEL: &str = r#"{"dim": 2, "re": [[0, 0], [0, 1]]}"#;
const THREE_LEVEL: &str = r#"{"dim": 3, "re": [[0, 0.3, 0], [0.3, 1, 0], [0, 0, 2.5]]}"#;

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

#[test]
fn validate_accepts_and_rejects() {
    let ws = Workspace::new();
    ws.file("mixed.json", MIXED);
    let (code, v) = ws.json(&["validate", "mixed.json"]);
    assert_eq!(code, 0);
    assert_eq!(v["status"], "ok");
    assert_eq!(v["results"]["rank"], 2);

    ws.file("skew.json", r#"{"dim": 2, "re": [[0.5, 0.2], [0.1, 0.5]]}"#);
    let (code, v) = ws.json(&["validate", "skew.json"]);
    assert_eq!(code, 1);
    assert_eq!(v["status"], "invalid");
    assert!(v["error"].as_str().unwrap().contains("(0, 1)"));
    assert_eq!(
        v["results"]["hermiticity_worst_entry"],
        serde_json::json!([0, 1])
    );

    ws.file(
        "near.json",
        r#"{"dim": 2, "re": [[0.4999995, 0], [0, 0.5]]}"#,
    );
    let (code, v) = ws.json(&["validate", "near.json"]);
    assert_eq!(code, 0);
    assert_eq!(v["warnings"].as_array().unwrap().len(), 1);

    ws.file("short.json", r#"{"dim": 2, "re": [[0.45, 0], [0, 0.45]]}"#);
    assert_eq!(ws.json(&["validate", "short.json"]).0, 1);
    assert_eq!(
        ws.json(&["validate", "short.json", "--kind", "hermitian"])
            .0,
        0
    );

    ws.file(
        "negative.json",
        r#"{"dim": 2, "re": [[1.2, 0], [0, -0.2]]}"#,
    );
    assert_eq!(ws.json(&["validate", "negative.json"]).0, 1);

    ws.file("broken.json", r#"{"dim": 2, "re": [[1, 0]]}"#);
    let (code, v) = ws.json(&["validate", "broken.json"]);
    assert_eq!(code, 1);
    assert!(v["error"].as_str().unwrap().contains("rows"));
}

#[test]
fn usage_errors_exit_one() {
    let ws = Workspace::new();
    assert_eq!(ws.run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        ws.run(&["entropy", "missing.json", "--q", "0.5"])
            .status
            .code(),
        Some(1)
    );
    ws.file("mixed.json", MIXED);
    assert_eq!(ws.run(&["entropy", "mixed.json"]).status.code(), Some(1));
    assert_eq!(
        ws.run(&["entropy", "mixed.json", "--q", "-1"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(ws.run(&["--help"]).status.code(), Some(0));
}

#[test]
fn entropy_of_the_maximally_mixed_qubit() {
    let ws = Workspace::new();
    ws.file("mixed.json", MIXED);
    let (code, v) = ws.json(&["entropy", "mixed.json", "--q", "0.5"]);
    assert_eq!(code, 0);
    let s = num(&v["results"][0]["entropy"]);
    assert!((s - (2.0 - 2f64.sqrt())).abs() < 1e-12, "{s}");

    let (_, v) = ws.json(&["entropy", "mixed.json", "--q-range", "0.5:2:4"]);
    for row in v["results"].as_array().unwrap() {
        let q = num(&row["q"]);
        let expected = if q == 1.0 {
            2f64.ln()
        } else {
            (2f64.powf(q - 1.0) - 1.0) / (q - 1.0)
        };
        assert!((num(&row["entropy"]) - expected).abs() < 1e-12, "q = {q}");
    }
}

#[test]
fn divergence_reports_infinity_losslessly() {
    let ws = Workspace::new();
    ws.file("mixed.json", MIXED);
    ws.file("pure.json", PURE);
    let (code, v) = ws.json(&["divergence", "mixed.json", "mixed.json", "--q", "0.7"]);
    assert_eq!(code, 0);
    assert!(num(&v["results"][0]["forward"]).abs() < 1e-14);

    let (_, v) = ws.json(&["divergence", "mixed.json", "pure.json", "--q", "1"]);
    assert_eq!(
        v["results"][0]["forward"],
        serde_json::json!({"nonfinite": "inf"})
    );
    assert!((num(&v["results"][0]["reverse"]) - 2f64.ln()).abs() < 1e-12);

    let csv = ws.run(&[
        "divergence",
        "mixed.json",
        "pure.json",
        "--q",
        "1",
        "--format",
        "csv",
    ]);
    let text = String::from_utf8(csv.stdout).unwrap();
    assert!(text.lines().last().unwrap().contains(",inf,"), "{text}");
}

#[test]
fn equilibrium_at_infinite_temperature_is_maximally_mixed() {
    let ws = Workspace::new();
    ws.file("h.json", THREE_LEVEL);
    let (code, v) = ws.json(&["equilibrium", "h.json", "--beta", "0", "--q", "0.6"]);
    assert_eq!(code, 0);
    assert!((num(&v["results"]["z_q"]) - 3.0).abs() < 1e-9);
    for p in v["results"]["populations"].as_array().unwrap() {
        assert!((num(p) - 1.0 / 3.0).abs() < 1e-9);
    }
}

/// Independent two-level solution: bisection on p1 for the self-consistent
/// cutoff form with effective inverse temperature beta * c_q and escort
/// energy U_q.
#[test]
fn two_level_equilibrium_matches_direct_root_finding() {
    let ws = Workspace::new();
    ws.file("h.json", TWO_LEVEL);
    let (q, beta) = (0.5, 1.0);
    let (code, v) = ws.json(&["equilibrium", "h.json", "--beta", "1", "--q", "0.5"]);
    assert_eq!(code, 0);
    let p1 = num(&v["results"]["populations"][1]);

    // Fixed point in p1 alone, solved by bisection.
    let residual = |p1: f64| {
        let p0 = 1.0 - p1;
        let c = p0.powf(q) + p1.powf(q);
        let u = p1.powf(q) / c;
        let bq = beta * c;
        let w = |e: f64| {
            (1.0 - (1.0 - q) * bq * (e - u))
                .max(0.0)
                .powf(1.0 / (1.0 - q))
        };
        w(1.0) / (w(0.0) + w(1.0)) - p1
    };
    let (mut lo, mut hi) = (1e-9, 0.5);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if residual(lo) * residual(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    assert!((p1 - lo).abs() < 1e-8, "{p1} vs {lo}");
}

#[test]
fn equilibrium_at_q_one_is_gibbs() {
    let ws = Workspace::new();
    ws.file("h.json", TWO_LEVEL);
    let (_, v) = ws.json(&["equilibrium", "h.json", "--beta", "1.3", "--q", "1"]);
    let expected = (-1.3f64).exp() / (1.0 + (-1.3f64).exp());
    assert!((num(&v["results"]["populations"][1]) - expected).abs() < 1e-12);
    // Z is reported relative to the mean energy
    let u = expected;
    let z = (1.3 * u).exp() * (1.0 + (-1.3f64).exp());
    assert!((num(&v["results"]["z_q"]) - z).abs() < 1e-12);
}

#[test]
fn equilibrium_non_convergence_exits_two() {
    let ws = Workspace::new();
    ws.file("h.json", THREE_LEVEL);
    let (code, v) = ws.json(&[
        "equilibrium",
        "h.json",
        "--beta",
        "3",
        "--q",
        "0.5",
        "--max-iter",
        "1",
        "--tol",
        "1e-15",
    ]);
    assert_eq!(code, 2);
    assert_eq!(v["status"], "non_convergence");
    assert_eq!(
        v["results"]["last_populations"].as_array().unwrap().len(),
        3
    );
}

#[test]
fn scan_agrees_with_single_solves() {
    let ws = Workspace::new();
    ws.file("h.json", THREE_LEVEL);
    let (code, scan) = ws.json(&["scan", "h.json", "--q", "0.7", "--beta", "1.5"]);
    assert_eq!(code, 0);
    let (_, single) = ws.json(&["equilibrium", "h.json", "--beta", "1.5", "--q", "0.7"]);
    for key in ["u_q", "z_q", "c_q"] {
        assert_eq!(scan["results"][0][key], single["results"][key], "{key}");
    }
    assert_eq!(scan["results"][0]["s_q"], single["results"]["entropy"]);
}

#[test]
fn scan_is_continuous_through_q_one_and_nonnegative() {
    let ws = Workspace::new();
    ws.file("h.json", THREE_LEVEL);
    let (_, near) = ws.json(&["scan", "h.json", "--q", "0.9999", "--beta-range", "-2:2:9"]);
    let (_, one) = ws.json(&["scan", "h.json", "--q", "1", "--beta-range", "-2:2:9"]);
    let near = near["results"].as_array().unwrap();
    let one = one["results"].as_array().unwrap();
    for (a, b) in near.iter().zip(one) {
        for key in ["u_q", "z_q", "s_q"] {
            assert!(
                (num(&a[key]) - num(&b[key])).abs() < 1e-3,
                "{key} at beta {}",
                a["beta"]
            );
        }
    }
    let (_, grid) = ws.json(&[
        "scan",
        "h.json",
        "--q-range",
        "0.2:2.5:12",
        "--beta-range",
        "-3:3:13",
    ]);
    for row in grid["results"].as_array().unwrap() {
        if row["status"] == "ok" {
            assert!(num(&row["s_q"]) >= -1e-12, "{row}");
        }
    }
}

#[test]
fn scan_output_does_not_depend_on_threads() {
    let ws = Workspace::new();
    ws.file("h.json", THREE_LEVEL);
    let args = [
        "scan",
        "h.json",
        "--q-range",
        "0.3:1.8:16",
        "--beta-range",
        "-2:2:16",
        "--format",
        "csv",
    ];
    let strip = |out: Output| {
        String::from_utf8(out.stdout)
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with("# threads="))
            .collect::<Vec<_>>()
            .join("\n")
    };
    let sequential = strip(ws.run(&args));
    let parallel = strip(ws.run_env(&args, &[("NONEXT_THREADS", "4")]));
    assert_eq!(sequential, parallel);
    assert_eq!(
        ws.run_env(&args, &[("NONEXT_THREADS", "many")])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn metric_on_known_families() {
    let ws = Workspace::new();
    ws.file(
        "const.json",
        r#"{"family": "constant", "alpha_min": 0, "alpha_max": 1, "n": 11}"#,
    );
    let (code, v) = ws.json(&["metric", "const.json", "--q", "0.8"]);
    assert_eq!(code, 0);
    for row in v["results"].as_array().unwrap() {
        assert_eq!(num(&row["g_total"]), 0.0);
    }

    ws.file(
        "qubit.json",
        r#"{"family": "rotating_qubit", "r": 0.5, "alpha_min": 0, "alpha_max": 1, "n": 201}"#,
    );
    let (_, v) = ws.json(&["metric", "qubit.json", "--q", "1"]);
    let expected = 0.25 * 3f64.ln();
    for row in v["results"].as_array().unwrap() {
        assert!((num(&row["g_qu"]) - expected).abs() < 1e-5, "{row}");
        assert_eq!(num(&row["g_cl"]), 0.0);
    }

    ws.file(
        "diag.json",
        r#"{"family": "diagonal", "alpha_min": 0.3, "alpha_max": 0.7, "n": 41}"#,
    );
    let (_, v) = ws.json(&["metric", "diag.json", "--q", "1"]);
    let mid = v["results"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| (num(&r["alpha"]) - 0.5).abs() < 1e-12)
        .unwrap();
    assert!((num(&mid["g_cl"]) - 4.0).abs() < 1e-9);
    assert!(mid["flags"]
        .as_array()
        .unwrap()
        .iter()
        .any(|f| f == "degenerate"));
}

#[test]
fn metric_on_sampled_curves() {
    let ws = Workspace::new();
    let states: Vec<String> = [0.0, 0.1, 0.2, 0.3, 0.4]
        .iter()
        .map(|a: &f64| {
            let p = 0.3 + a;
            format!(r#"{{"dim": 2, "re": [[{p}, 0.1], [0.1, {}]]}}"#, 1.0 - p)
        })
        .collect();
    ws.file(
        "sampled.json",
        &format!(
            r#"{{"alphas": [0, 0.1, 0.2, 0.3, 0.4], "states": [{}]}}"#,
            states.join(",")
        ),
    );
    let (code, v) = ws.json(&["metric", "sampled.json", "--q", "0.6"]);
    assert_eq!(code, 0, "{v}");
    assert_eq!(v["config"]["family"], "sampled");
    assert_eq!(v["results"].as_array().unwrap().len(), 3);

    ws.file(
        "jumpy.json",
        r#"{"alphas": [0, 0.8, 1.6], "states": [
            {"dim": 2, "re": [[0.8, 0], [0, 0.2]]},
            {"dim": 2, "re": [[0.5, 0.3], [0.3, 0.5]]},
            {"dim": 2, "re": [[0.2, 0], [0, 0.8]]}]}"#,
    );
    let (code, _) = ws.json(&["metric", "jumpy.json", "--q", "0.6"]);
    assert_eq!(code, 0);
    assert_eq!(
        ws.run(&["metric", "jumpy.json", "--q", "0.6", "--strict-degeneracy"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn output_is_byte_identical_and_round_trips() {
    let ws = Workspace::new();
    ws.file("h.json", THREE_LEVEL);
    let args = ["equilibrium", "h.json", "--beta", "0.8", "--q", "1.4"];
    let a = ws.run(&args).stdout;
    let b = ws.run(&args).stdout;
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    let value: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(serde_json::to_string_pretty(&value).unwrap() + "\n", text);

    // the reported state is itself a valid input file
    std::fs::write(
        ws.dir.path().join("rho.json"),
        value["results"]["rho_eq"].to_string(),
    )
    .unwrap();
    assert_eq!(ws.run(&["validate", "rho.json"]).status.code(), Some(0));
}
