use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::process::Command;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn worldline(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_worldline"))
        .args(args)
        .output()
        .expect("binary runs");
    Run {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn key_values(text: &str) -> HashMap<String, String> {
    text.lines()
        .take_while(|l| !l.is_empty())
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn num(map: &HashMap<String, String>, key: &str) -> f64 {
    map[key]
        .parse()
        .unwrap_or_else(|_| panic!("{key}={}", map[key]))
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn assert_input_error(r: &Run, needle: &str) {
    assert_eq!(r.code, 1, "stderr: {}", r.stderr);
    let line = r.stderr.trim_end();
    assert_eq!(line.lines().count(), 1, "{line}");
    assert!(line.starts_with("code=1 reason="), "{line}");
    assert!(line.contains(needle), "{line}");
}

#[test]
fn eval_constant_velocity_closed_forms() {
    let r = worldline(&[
        "eval", "--units", "natural", "--mass", "1", "--expr", "0.6*t", "--t0", "0", "--t1", "10",
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stderr.is_empty());
    let kv = key_values(&r.stdout);
    assert!((num(&kv, "action_S") + 8.0).abs() < 1e-10);
    assert!((num(&kv, "area_A") - 8.0).abs() < 1e-10);
    assert!((num(&kv, "worldline_length_L") - 8.0).abs() < 1e-10);
    assert!((num(&kv, "constant_k") - 1.0).abs() < 1e-15);
    assert!((num(&kv, "area_A_spatial") - 8.0).abs() < 1e-8);

    let table = r.stdout.split("\n\n").nth(1).expect("sample table");
    let rows = csv_rows(table);
    assert_eq!(rows[0], ["t", "x", "v", "lambda_B"]);
    assert_eq!(rows.len(), 12);
    // h / (2 pi gamma m0 v) with gamma = 1.25
    let lambda: f64 = rows[1][3].parse().unwrap();
    assert!((lambda - 1.0 / (2.0 * std::f64::consts::PI * 0.75)).abs() < 1e-15);
}

#[test]
fn eval_sampled_line_matches_analytic() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("line.csv");
    let mut text = String::from("t,x\n");
    for k in 0..=40 {
        let t = k as f64 * 0.25;
        text.push_str(&format!("{t},{}\n", 0.6 * t));
    }
    fs::write(&path, text).unwrap();
    let r = worldline(&["eval", "--csv", path.to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let kv = key_values(&r.stdout);
    assert!((num(&kv, "action_S") + 8.0).abs() < 1e-6);
    assert!((num(&kv, "area_A") - 8.0).abs() < 1e-6);
    assert!((num(&kv, "worldline_length_L") - 8.0).abs() < 1e-6);
}

#[test]
fn eval_rejects_superluminal_and_bad_input() {
    assert_input_error(
        &worldline(&["eval", "--expr", "1.5*c*t"]),
        "speed limit violated",
    );
    assert_input_error(&worldline(&["eval", "--expr", "2t"]), "syntax error at 1");
    assert_input_error(&worldline(&["eval", "--csv", "/nonexistent/path.csv"]), "");
    assert_input_error(
        &worldline(&["eval", "--expr", "0.5*t", "--quad", "simpson:7"]),
        "",
    );
    assert_input_error(&worldline(&["eval", "--expr", "0.5*t", "--mass", "-1"]), "");
    assert_input_error(&worldline(&["frobnicate"]), "");
}

#[test]
fn eval_unconverged_quadrature_is_numerical_failure() {
    let r = worldline(&[
        "eval",
        "--expr",
        "0.05*sin(10*t)",
        "--t1",
        "10",
        "--quad",
        "adaptive:1e-15,1e-15,4",
    ]);
    assert_eq!(r.code, 2, "{}", r.stderr);
    assert!(r.stderr.starts_with("code=2 reason="));
    assert_eq!(key_values(&r.stdout)["converged"], "false");
}

#[test]
fn eval_writes_table_to_out() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("table.csv");
    let r = worldline(&[
        "eval",
        "--expr",
        "0.3*t",
        "--samples",
        "5",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(!r.stdout.contains("lambda_B"));
    let rows = csv_rows(&fs::read_to_string(&path).unwrap());
    assert_eq!(rows.len(), 6);
}

#[test]
fn verify_line_family() {
    let r = worldline(&[
        "verify",
        "--expr",
        "a*t",
        "--param",
        "a=0.1:0.9:9",
        "--t1",
        "10",
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rows = csv_rows(&r.stdout);
    assert_eq!(rows[0].join(","), "id,mass,S,A,k,kA,residual,status");
    assert_eq!(rows.len(), 10);
    for (i, row) in rows[1..].iter().enumerate() {
        assert_eq!(
            row[0],
            format!("a={}", [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9][i])
        );
        let residual: f64 = row[6].parse().unwrap();
        assert!(residual < 1e-9, "{row:?}");
        assert_eq!(row[7], "ok");
    }
    assert!(r
        .stdout
        .lines()
        .last()
        .unwrap()
        .starts_with("# max_residual="));
}

#[test]
fn verify_flags_lightlike_member() {
    let r = worldline(&["verify", "--expr", "a*t", "--param", "a=0.5:1:3"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rows = csv_rows(&r.stdout);
    let last = rows.last().unwrap();
    assert_eq!(last[0], "a=1");
    assert_eq!(last[6], "undefined");
    assert_eq!(last[7], "A=0: residual undefined");
    assert!(r.stdout.contains("undefined=1"));

    let r = worldline(&["verify", "--expr", "a*t", "--param", "a=0.5:1.5:3"]);
    assert_input_error(&r, "speed limit violated");
}

#[test]
fn verify_mass_sweep_scales_k() {
    let r = worldline(&[
        "verify",
        "--expr",
        "0.4*t + 0.1*sin(t)",
        "--t1",
        "5",
        "--mass",
        "0.5,1,2",
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rows = csv_rows(&r.stdout);
    assert_eq!(rows.len(), 4);
    let col = |i: usize, j: usize| -> f64 { rows[i][j].parse().unwrap() };
    for (i, m) in [(1, 0.5), (2, 1.0), (3, 2.0)] {
        assert!((col(i, 4) - m * m).abs() < 1e-15);
        assert!((col(i, 6) - col(2, 6)).abs() < 1e-12);
    }
}

#[test]
fn verify_over_csv_directory() {
    let dir = tempfile::tempdir().unwrap();
    for (name, speed) in [("b_slow", 0.2), ("a_fast", 0.7)] {
        let mut text = String::from("t,x\n");
        for k in 0..=20 {
            let t = k as f64 * 0.5;
            text.push_str(&format!("{t},{}\n", speed * t));
        }
        fs::write(dir.path().join(format!("{name}.csv")), text).unwrap();
    }
    fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
    let r = worldline(&["verify", "--csv", dir.path().to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rows = csv_rows(&r.stdout);
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[1][0], "a_fast");
    assert_eq!(rows[2][0], "b_slow");
}

#[test]
fn verify_numerical_failures() {
    let r = worldline(&["verify", "--expr", "t"]);
    assert_eq!(r.code, 2, "{}", r.stderr);
    assert!(r
        .stderr
        .starts_with("code=2 reason=no member with a defined residual"));

    let r = worldline(&[
        "verify",
        "--expr",
        "0.4*t + 0.05*sin(10*t)",
        "--t1",
        "10",
        "--quad",
        "adaptive:1e-15,1e-15,3",
    ]);
    assert_eq!(r.code, 2, "{}", r.stderr);
    assert!(r
        .stderr
        .starts_with("code=2 reason=quadrature did not converge"));
}

#[test]
fn sweep_table_and_slope() {
    let r = worldline(&["sweep", "--param", "v=0.1:0.9:9"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let mut lines = r.stdout.lines();
    assert_eq!(lines.next(), Some("v,lambda_B,gamma,dA_dt,dS_dt"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 9);
    let at = rows.iter().find(|r| (r[0] - 0.6).abs() < 1e-12).unwrap();
    assert!((at[1] - 0.2122066).abs() < 5e-8);
    for w in rows.windows(2) {
        assert!(w[1][1] < w[0][1]);
        assert!(w[1][2] > w[0][2]);
    }
    // least-squares line through (|dS_dt|, dA_dt)
    let n = rows.len() as f64;
    let xs: Vec<f64> = rows.iter().map(|r| r[4].abs()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r[3]).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    assert!((sxy / sxx - 1.0).abs() < 1e-6);
}

#[test]
fn sweep_rejects_ranges_touching_zero_or_c() {
    assert_input_error(&worldline(&["sweep", "--param", "v=0:0.5:6"]), "outside");
    assert_input_error(&worldline(&["sweep", "--param", "v=0.5:1:6"]), "outside");
    assert_input_error(&worldline(&["sweep", "--param", "u=0.1:0.5:6"]), "");
}

fn optimized_path(objective: &str, dir: &Path) -> Vec<(f64, f64)> {
    let path = dir.join(format!("{objective}.csv"));
    let r = worldline(&[
        "optimize",
        "--t0",
        "0",
        "--t1",
        "10",
        "--x0",
        "0",
        "--x1",
        "6",
        "--nodes",
        "32",
        "--objective",
        objective,
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let kv = key_values(&r.stdout);
    assert_eq!(kv["converged"], "true");
    assert!(num(&kv, "gradient_norm") <= 1e-10);
    let rows = csv_rows(&fs::read_to_string(&path).unwrap());
    assert_eq!(rows[0], ["t", "x"]);
    rows[1..]
        .iter()
        .map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap()))
        .collect()
}

#[test]
fn optimize_action_and_area_agree_on_straight_line() {
    let dir = tempfile::tempdir().unwrap();
    let action = optimized_path("action", dir.path());
    let area = optimized_path("area", dir.path());
    assert_eq!(action.len(), 33);
    for ((t, xs), (_, xa)) in action.iter().zip(&area) {
        assert!((xs - 0.6 * t).abs() <= 6e-4);
        assert!((xs - xa).abs() <= 1e-6);
    }
}

#[test]
fn optimize_input_errors() {
    let r = worldline(&["optimize", "--x1", "12", "--t1", "10"]);
    assert_input_error(&r, "infeasible endpoints");
    assert_input_error(&worldline(&["optimize", "--objective", "energy"]), "energy");
    assert_input_error(&worldline(&["optimize", "--nodes", "2"]), "");
}

#[test]
fn optimize_unconverged_is_numerical_failure() {
    let r = worldline(&["optimize", "--max-iter", "3"]);
    assert_eq!(r.code, 2, "{}", r.stderr);
    assert!(r
        .stderr
        .starts_with("code=2 reason=optimizer did not converge"));
}

#[test]
fn nambu_goto_presets_and_grid() {
    let r = worldline(&[
        "nambu-goto",
        "--preset",
        "static-string",
        "--length",
        "3",
        "--duration",
        "2",
        "--tension",
        "0.5",
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let kv = key_values(&r.stdout);
    assert!((num(&kv, "area") - 6.0).abs() < 1e-9);
    assert!((num(&kv, "action") - 3.0).abs() < 1e-9);

    let r = worldline(&["nambu-goto", "--preset", "collapsed-string"]);
    assert_eq!(num(&key_values(&r.stdout), "area"), 0.0);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sheet.csv");
    let mut text = String::from("tau,sigma,x0,x1,x2,x3\n");
    for i in 0..=8 {
        for j in 0..=6 {
            let (tau, sigma) = (i as f64 * 0.25, j as f64 * 0.5);
            text.push_str(&format!("{tau},{sigma},{tau},{sigma},0,0\n"));
        }
    }
    fs::write(&path, text).unwrap();
    let r = worldline(&["nambu-goto", "--csv", path.to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!((num(&key_values(&r.stdout), "area") - 6.0).abs() < 1e-12);

    assert_input_error(&worldline(&["nambu-goto", "--preset", "loop"]), "loop");
    assert_input_error(
        &worldline(&["nambu-goto", "--preset", "static-string", "--tension", "0"]),
        "",
    );
}

#[test]
fn help_and_version_exit_zero() {
    let r = worldline(&["--help"]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.contains("verify"));
    assert_eq!(worldline(&["--version"]).code, 0);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 5] = [
        &["eval", "--expr", "0.3*t + 0.2*sin(t)", "--t1", "6"],
        &[
            "verify",
            "--expr",
            "a*t + 0.05*sin(t)",
            "--param",
            "a=0.1:0.8:8",
            "--mass",
            "1,2",
        ],
        &[
            "sweep",
            "--param",
            "v=1e7:2e8:20",
            "--units",
            "si",
            "--mass",
            "9.1093837e-31",
        ],
        &["optimize", "--nodes", "16", "--objective", "area"],
        &["nambu-goto", "--preset", "reparam-string", "--length", "2"],
    ];
    for args in cases {
        let a = worldline(args);
        let b = worldline(args);
        assert_eq!(a.code, 0, "{args:?}: {}", a.stderr);
        assert_eq!(a.stdout.as_bytes(), b.stdout.as_bytes(), "{args:?}");
    }
    let p1 = dir.path().join("one.csv");
    let p2 = dir.path().join("two.csv");
    for p in [&p1, &p2] {
        let r = worldline(&["optimize", "--nodes", "16", "--out", p.to_str().unwrap()]);
        assert_eq!(r.code, 0);
    }
    assert_eq!(fs::read(&p1).unwrap(), fs::read(&p2).unwrap());
}
