use robustsell::cli::{run, EXIT_INVALID, EXIT_OK, EXIT_VERIFY};
use serde_json::Value;

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("robustsell").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn num(v: &Value, key: &str) -> f64 {
    v[key].as_f64().unwrap_or_else(|| panic!("missing {key} in {v}"))
}

#[test]
fn solve_full_information() {
    let (code, out, _) = call(&["solve", "--mu", "0.4", "--xi", "0.5", "--s", "0.1"]);
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["kind"], "Full");
    assert!((num(&v, "price") - 0.2).abs() < 1e-9);
    assert!((num(&v, "guarantee") - 0.08).abs() < 1e-9);
    assert_eq!(v["thresholds"]["region"], "FullInfoAll");
}

#[test]
fn solve_mixture() {
    let (code, out, _) = call(&["solve", "--mu", "0.95", "--xi", "0.3", "--s", "0.1"]);
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["kind"], "Mixture");
    assert!((num(&v, "price") - 1.0 / 3.0).abs() < 1e-8);
    assert!((num(&v, "guarantee") - (1.0 / 3.0 - 0.3 * 0.05)).abs() < 1e-8);
}

#[test]
fn solve_certify_passes() {
    let (code, out, err) = call(&["solve", "--mu", "0.6", "--xi", "0.5", "--s", "0.05", "--certify", "--grid-n", "100"]);
    assert_eq!(code, EXIT_OK, "{err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    let cert = &v["certification"];
    assert!(num(cert, "oracle_gap").abs() < 5e-3);
    assert!(num(cert, "saddle_residual").abs() < 1e-9);
}

#[test]
fn invalid_parameters_exit_2() {
    let (code, _, err) = call(&["solve", "--mu", "0.4", "--xi", "0.5", "--s", "0.5"]);
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("s < xi violated"), "{err}");
    let (code, _, _) = call(&["solve", "--mu", "1.2", "--xi", "0.5", "--s", "0.1"]);
    assert_eq!(code, EXIT_INVALID);
    let (code, _, _) = call(&["region-map", "--mu", "0.4", "--grid-n", "1"]);
    assert_eq!(code, EXIT_INVALID);
    let (code, _, _) = call(&["solve", "--bogus"]);
    assert_eq!(code, EXIT_INVALID);
}

#[test]
fn region_map_rows() {
    let (code, out, _) = call(&["region-map", "--mu", "0.4", "--grid-n", "3"]);
    assert_eq!(code, EXIT_OK);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("xi,s,B1,B2,B3,region,policy_kind,price,guarantee"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 9);
    let half = rows.iter().find(|r| r[0] == "0.5").unwrap();
    assert_eq!(&half[2..5], &["0.1", "0.0555555556", "0"]);
    assert!(rows.iter().filter(|r| r[0] == "0.75").all(|r| r[4] == "NA"));
}

#[test]
fn sweep_detects_price_jump() {
    let (code, out, _) = call(&["sweep", "--var", "s", "--mu", "0.6", "--xi", "0.5", "--n", "200"]);
    assert_eq!(code, EXIT_OK);
    let last = out.lines().last().unwrap();
    assert!(last.starts_with("# jump s_hat="), "{last}");
    let fields: Vec<f64> = last
        .trim_start_matches("# jump ")
        .split(',')
        .map(|kv| kv.split('=').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!((fields[0] - 0.1).abs() < 1e-6);
    assert!((fields[1] - 1.0 / 3.0).abs() < 1e-6);
    assert!((fields[2] - 0.2).abs() < 1e-6);
    // Guarantee strictly increasing in s.
    let g: Vec<f64> = out
        .lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(g.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn sweep_detects_kind_switch() {
    let (code, out, _) = call(&["sweep", "--var", "mu", "--xi", "0.3", "--s", "0.1", "--n", "20"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("# switch mu=0.907464919,from=Uniform,to=Mixture"), "{out}");
    let (code, out, _) = call(&["sweep", "--var", "mu", "--xi", "0.3", "--s", "0.1", "--n", "20", "--format", "json"]);
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["switches"][0]["to"], "Mixture");
    assert_eq!(v["rows"].as_array().unwrap().len(), 20);
}

#[test]
fn verify_and_tamper() {
    let (code, out, err) = call(&["verify", "--grid-n", "100"]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.lines().last().unwrap().contains("failures=0"), "{out}");
    let (code, _, _) = call(&["verify", "--grid-n", "100", "--tamper"]);
    assert_eq!(code, EXIT_VERIFY);
}

#[test]
fn simulate_is_reproducible() {
    let args = ["simulate", "--mu", "0.4", "--xi", "0.5", "--s", "0.1", "--trials", "2000", "--seed", "9"];
    let (code, a, _) = call(&args);
    assert_eq!(code, EXIT_OK);
    let (_, b, _) = call(&args);
    assert_eq!(a, b);
    let v: Value = serde_json::from_str(&a).unwrap();
    assert!(num(&v, "z_score").abs() < 4.0);
    let (_, c, _) = call(&["simulate", "--mu", "0.4", "--xi", "0.5", "--s", "0.1", "--trials", "2000", "--seed", "10"]);
    assert_ne!(a, c);
}

#[test]
fn simulate_reads_distribution_files() {
    let dir = tempfile::tempdir().unwrap();
    let h = dir.path().join("h.json");
    let g = dir.path().join("g.json");
    std::fs::write(&h, r#"{"atoms": [[0.0, 0.6], [1.0, 0.4]], "segments": []}"#).unwrap();
    std::fs::write(&g, r#"{"atoms": [], "segments": [[0.0, 1.0, 1.0]]}"#).unwrap();
    let (code, out, err) = call(&[
        "simulate", "--mu", "0.4", "--xi", "0.5", "--s", "0.1", "--price", "0.3",
        "--h", h.to_str().unwrap(), "--g", g.to_str().unwrap(), "--trials", "500",
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!((num(&v, "demand") - 0.4).abs() < 1e-12);
    std::fs::write(&g, r#"{"atoms": [[0.2, 1.0]], "segments": []}"#).unwrap();
    let (code, _, _) = call(&[
        "simulate", "--mu", "0.4", "--xi", "0.5", "--s", "0.1", "--h", h.to_str().unwrap(), "--g", g.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_INVALID);
}

#[test]
fn benchmark_uniform() {
    let (code, out, _) = call(&["benchmark", "--dist", "uniform", "--mu", "0.4", "--xi", "0.5", "--s", "0.1"]);
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!((num(&v, "p_h") - 0.5).abs() < 1e-9);
    assert!((num(&v, "s_hat_g") - 0.03125).abs() < 1e-9);
    assert_eq!(v["dominance"]["violations"], 0);
    let (code, _, _) = call(&["benchmark", "--dist", "cauchy", "--mu", "0.4", "--xi", "0.5", "--s", "0.1"]);
    assert_eq!(code, EXIT_INVALID);
}

#[test]
fn out_file_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let dest = dir.path().join("result.json");
    std::fs::write(&cfg, r#"{"mu": 0.1, "xi": 0.5, "s": 0.1}"#).unwrap();
    let (code, out, _) = call(&["solve", "--config", cfg.to_str().unwrap(), "--mu", "0.4", "--out", dest.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert!(out.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&dest).unwrap()).unwrap();
    assert!((num(&v, "mu") - 0.4).abs() < 1e-12);
    assert!((num(&v, "guarantee") - 0.08).abs() < 1e-9);
}
