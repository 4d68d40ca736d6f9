use std::io::Write;

use rayon::prelude::*;
use serde_json::{json, Value};

use super::{fmt9, Format, RunConfig, SweepVar, EXIT_INVALID, EXIT_OK, EXIT_VERIFY};
use crate::benchmarks::{
    full_info_dominance, known_dist_price, known_dist_threshold, monopoly_price, zero_search_strategy, SmoothDistribution,
    SmoothFamily,
};
use crate::closed_form::{b1, b2, b3, region_of, robust_strategy, optimal_kind, thresholds, Region};
use crate::comparative::price_curve;
use crate::error::Error;
use crate::game::{saddle_check, SADDLE_TOL};
use crate::model::{validate_params, ModelParams, PiecewiseDistribution, PolicyKind};
use crate::oracle::{nature_worst_case_oracle, DEFAULT_GRID};
use crate::search::{demand_and_revenue, simulate_market};

const DEFAULT_TOL: f64 = 5e-3;

enum Failure {
    Invalid(String),
    Verify(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

type Outcome = Result<String, (String, Failure)>;

fn finish(cfg: &RunConfig, result: Outcome, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let (body, failure) = match result {
        Ok(body) => (Some(body), None),
        Err((body, f)) => ((!body.is_empty()).then_some(body), Some(f)),
    };
    if let Some(body) = body {
        let written = match &cfg.out {
            Some(path) => std::fs::write(path, &body),
            None => out.write_all(body.as_bytes()),
        };
        if let Err(e) = written {
            let _ = writeln!(err, "error: cannot write output: {e}");
            return EXIT_INVALID;
        }
    }
    match failure {
        None => EXIT_OK,
        Some(Failure::Invalid(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_INVALID
        }
        Some(Failure::Verify(msg)) => {
            let _ = writeln!(err, "verification failed:\n{msg}");
            EXIT_VERIFY
        }
    }
}

fn invalid(msg: impl Into<String>) -> (String, Failure) {
    (String::new(), Failure::Invalid(msg.into()))
}

fn lib(e: Error) -> (String, Failure) {
    (String::new(), e.into())
}

fn need(x: Option<f64>, name: &str) -> Result<f64, (String, Failure)> {
    x.ok_or_else(|| invalid(format!("--{name} is required")))
}

fn params_of(cfg: &RunConfig) -> Result<ModelParams, (String, Failure)> {
    validate_params(need(cfg.mu, "mu")?, need(cfg.xi, "xi")?, need(cfg.s, "s")?).map_err(lib)
}

/// Rounds every float in a JSON tree to 9 significant digits.
fn round_json(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if let Some(x) = n.as_f64().filter(|_| !n.is_i64() && !n.is_u64()) {
                if let Some(r) = fmt9(x).parse::<f64>().ok().and_then(serde_json::Number::from_f64) {
                    *n = r;
                }
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_json),
        Value::Object(o) => o.values_mut().for_each(round_json),
        _ => {}
    }
}

fn to_json(mut v: Value) -> String {
    round_json(&mut v);
    serde_json::to_string_pretty(&v).expect("json") + "\n"
}

fn csv_line(fields: &[String]) -> String {
    fields.join(",") + "\n"
}

fn opt9(x: Option<f64>) -> String {
    x.map(fmt9).unwrap_or_else(|| "NA".into())
}

pub fn cmd_solve(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    finish(cfg, solve(cfg), out, err)
}

fn solve(cfg: &RunConfig) -> Outcome {
    let params = params_of(cfg)?;
    let (st, rep) = robust_strategy(&params).map_err(lib)?;
    let th = thresholds(&params);
    let mut report = json!({
        "mu": params.mu, "xi": params.xi, "s": params.s,
        "kind": st.kind.as_str(),
        "price": st.price,
        "guarantee": rep.guarantee,
        "posterior": st.posterior,
        "worst_case": rep.worst_case.dist,
        "thresholds": th,
    });
    let mut failure = None;
    if cfg.certify {
        let tol = cfg.tol.unwrap_or(DEFAULT_TOL);
        let n = cfg.grid_n.unwrap_or(DEFAULT_GRID);
        let oracle = nature_worst_case_oracle(st.price, &st.posterior, &params, n).map_err(lib)?;
        let oracle_guarantee = st.price * oracle.demand;
        let saddle = saddle_check(st.price, &st.posterior, &rep.worst_case, &params, SADDLE_TOL).map_err(lib)?;
        let gap = oracle_guarantee - rep.guarantee;
        report["certification"] = json!({
            "grid_n": n,
            "oracle_guarantee": oracle_guarantee,
            "oracle_gap": gap,
            "saddle_residual": saddle.max_residual(),
            "tol": tol,
        });
        if gap.abs() > tol || saddle.max_residual() > tol {
            failure = Some(format!(
                "{params}: oracle gap {}, saddle residual {}",
                fmt9(gap),
                fmt9(saddle.max_residual())
            ));
        }
    }
    let body = match cfg.format.unwrap_or(Format::Json) {
        Format::Json => to_json(report),
        Format::Csv => {
            let mut b = csv_line(&["mu,xi,s,region,kind,price,guarantee".into()]);
            b += &csv_line(&[
                fmt9(params.mu),
                fmt9(params.xi),
                fmt9(params.s),
                th.region.to_string(),
                st.kind.to_string(),
                fmt9(st.price),
                fmt9(rep.guarantee),
            ]);
            b
        }
    };
    match failure {
        None => Ok(body),
        Some(msg) => Err((body, Failure::Verify(msg))),
    }
}

/// Whether a policy kind is allowed in a region.
pub(crate) fn kind_fits_region(region: Region, kind: PolicyKind) -> bool {
    match region {
        Region::FullInfoAll => kind == PolicyKind::Full,
        Region::UniformAll => kind == PolicyKind::Uniform,
        Region::CutoffFull => matches!(kind, PolicyKind::Uniform | PolicyKind::Full),
        Region::CutoffMixture => matches!(kind, PolicyKind::Uniform | PolicyKind::Mixture),
    }
}

pub fn cmd_region_map(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    finish(cfg, region_map(cfg), out, err)
}

fn region_map(cfg: &RunConfig) -> Outcome {
    let mu = need(cfg.mu, "mu")?;
    validate_params(mu, 0.5, 0.0).map_err(lib)?;
    let n = cfg.grid_n.unwrap_or(40);
    if !(2..=2000).contains(&n) {
        return Err(invalid(format!("grid-n must be in [2, 2000], got {n}")));
    }
    let cells: Vec<(f64, f64)> = (0..n)
        .flat_map(|i| {
            let xi = (i + 1) as f64 / (n + 1) as f64;
            (0..n).map(move |j| (xi, xi * j as f64 / n as f64))
        })
        .collect();
    let rows: Vec<Result<(Value, bool), Error>> = cells
        .par_iter()
        .map(|&(xi, s)| {
            let params = validate_params(mu, xi, s)?;
            let (st, rep) = robust_strategy(&params)?;
            let region = region_of(xi, s);
            let b3v = b3(xi);
            let row = json!({
                "xi": xi, "s": s, "B1": b1(xi), "B2": b2(xi),
                "B3": if b3v >= 0.0 { Value::from(b3v) } else { Value::Null },
                "region": region.as_str(),
                "policy_kind": st.kind.as_str(),
                "price": st.price,
                "guarantee": rep.guarantee,
            });
            Ok((row, kind_fits_region(region, st.kind)))
        })
        .collect();
    let mut table = Vec::with_capacity(rows.len());
    let mut bad = Vec::new();
    for r in rows {
        let (row, ok) = r.map_err(lib)?;
        if !ok {
            bad.push(format!("xi={} s={}", row["xi"], row["s"]));
        }
        table.push(row);
    }
    let body = match cfg.format.unwrap_or(Format::Csv) {
        Format::Json => to_json(Value::Array(table)),
        Format::Csv => {
            let mut b = String::from("xi,s,B1,B2,B3,region,policy_kind,price,guarantee\n");
            for r in &table {
                let f = |k: &str| opt9(r[k].as_f64());
                b += &csv_line(&[
                    f("xi"),
                    f("s"),
                    f("B1"),
                    f("B2"),
                    f("B3"),
                    r["region"].as_str().unwrap_or_default().into(),
                    r["policy_kind"].as_str().unwrap_or_default().into(),
                    f("price"),
                    f("guarantee"),
                ]);
            }
            b
        }
    };
    if bad.is_empty() {
        Ok(body)
    } else {
        Err((body, Failure::Verify(format!("policy outside its region at {}", bad.join("; ")))))
    }
}

pub fn cmd_sweep(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    finish(cfg, sweep(cfg), out, err)
}

struct SweepRow {
    x: f64,
    kind: PolicyKind,
    price: f64,
    guarantee: f64,
}

fn sweep(cfg: &RunConfig) -> Outcome {
    let var = cfg.var.unwrap_or(SweepVar::S);
    let n = cfg.n.or(cfg.grid_n).unwrap_or(200);
    if !(2..=100_000).contains(&n) {
        return Err(invalid(format!("n must be in [2, 100000], got {n}")));
    }
    let (name, rows, mut notes) = match var {
        SweepVar::S => {
            let (mu, xi) = (need(cfg.mu, "mu")?, need(cfg.xi, "xi")?);
            let curve = price_curve(mu, xi, n).map_err(lib)?;
            let rows = curve
                .samples
                .iter()
                .map(|c| SweepRow { x: c.s, kind: c.kind, price: c.price, guarantee: c.guarantee })
                .collect();
            let notes: Vec<(String, Value)> = curve
                .jump
                .map(|j| {
                    (
                        format!("jump s_hat={},left={},right={}", fmt9(j.s_hat), fmt9(j.price_left), fmt9(j.price_right)),
                        json!({"s_hat": j.s_hat, "left": j.price_left, "right": j.price_right}),
                    )
                })
                .into_iter()
                .collect();
            ("s", rows, notes)
        }
        SweepVar::Mu => {
            let (xi, s) = (need(cfg.xi, "xi")?, need(cfg.s, "s")?);
            validate_params(0.5, xi, s).map_err(lib)?;
            let make = move |mu: f64| ModelParams { mu, xi, s };
            let xs: Vec<f64> = (0..n).map(|i| (i + 1) as f64 / (n + 1) as f64).collect();
            ("mu", sweep_rows(&xs, make)?, Vec::new())
        }
        SweepVar::Xi => {
            let (mu, s) = (need(cfg.mu, "mu")?, need(cfg.s, "s")?);
            validate_params(mu, 0.999_999, s.min(0.5)).map_err(lib)?;
            if !(s < 1.0) {
                return Err(invalid("s < 1 violated"));
            }
            let make = move |xi: f64| ModelParams { mu, xi, s };
            let xs: Vec<f64> = (0..n).map(|i| s + (1.0 - s) * (i + 1) as f64 / (n + 1) as f64).collect();
            ("xi", sweep_rows(&xs, make)?, Vec::new())
        }
    };
    if var != SweepVar::S {
        let make = |x: f64| match var {
            SweepVar::Mu => ModelParams { mu: x, xi: cfg.xi.unwrap_or_default(), s: cfg.s.unwrap_or_default() },
            _ => ModelParams { mu: cfg.mu.unwrap_or_default(), xi: x, s: cfg.s.unwrap_or_default() },
        };
        for w in rows.windows(2) {
            if w[0].kind != w[1].kind {
                let (mut a, mut b) = (w[0].x, w[1].x);
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    if m <= a || m >= b {
                        break;
                    }
                    if optimal_kind(&make(m)) == w[0].kind {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                notes.push((
                    format!("switch {name}={},from={},to={}", fmt9(b), w[0].kind, w[1].kind),
                    json!({"at": b, "from": w[0].kind.as_str(), "to": w[1].kind.as_str()}),
                ));
            }
        }
    }
    Ok(match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut b = format!("{name},kind,price,guarantee\n");
            for r in &rows {
                b += &csv_line(&[fmt9(r.x), r.kind.to_string(), fmt9(r.price), fmt9(r.guarantee)]);
            }
            for (line, _) in &notes {
                b += &format!("# {line}\n");
            }
            b
        }
        Format::Json => {
            let rows: Vec<Value> = rows
                .iter()
                .map(|r| json!({name: r.x, "kind": r.kind.as_str(), "price": r.price, "guarantee": r.guarantee}))
                .collect();
            let notes: Vec<Value> = notes.into_iter().map(|(_, v)| v).collect();
            let key = if var == SweepVar::S { "jump" } else { "switches" };
            let extra = if var == SweepVar::S { notes.into_iter().next().unwrap_or(Value::Null) } else { Value::Array(notes) };
            to_json(json!({"var": name, "rows": rows, key: extra}))
        }
    })
}

fn sweep_rows(xs: &[f64], make: impl Fn(f64) -> ModelParams + Sync) -> Result<Vec<SweepRow>, (String, Failure)> {
    xs.par_iter()
        .map(|&x| {
            let p = make(x);
            let params = validate_params(p.mu, p.xi, p.s)?;
            let (st, rep) = robust_strategy(&params)?;
            Ok(SweepRow { x, kind: st.kind, price: st.price, guarantee: rep.guarantee })
        })
        .collect::<Result<Vec<_>, Error>>()
        .map_err(lib)
}

/// Default verification grid: 5 values each of `mu`, `xi` and `s/xi`, covering
/// all four regions and all three robust policies.
pub(crate) fn default_verify_grid() -> Vec<ModelParams> {
    let mus = [0.1, 0.3, 0.5, 0.7, 0.95];
    let xis = [0.2, 0.3, 0.5, 0.65, 0.8];
    let fracs = [0.0, 0.2, 0.35, 0.6, 0.8];
    let mut grid = Vec::new();
    for &mu in &mus {
        for &xi in &xis {
            for &f in &fracs {
                grid.push(ModelParams { mu, xi, s: f * xi });
            }
        }
    }
    grid
}

/// Moves the top atom of a deterrence policy down by 0.01.
fn tamper_policy(h: &PiecewiseDistribution) -> Result<PiecewiseDistribution, Error> {
    let mut atoms = h.atoms().to_vec();
    if let Some(top) = atoms.last_mut() {
        top.0 = (top.0 - 0.01).max(0.0);
    }
    PiecewiseDistribution::new(atoms, h.segments().to_vec())
}

pub fn cmd_verify(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    finish(cfg, verify(cfg), out, err)
}

struct VerifyRow {
    params: ModelParams,
    kind: PolicyKind,
    price: f64,
    guarantee: f64,
    saddle: f64,
    oracle: f64,
    zero_search_ok: bool,
}

fn verify(cfg: &RunConfig) -> Outcome {
    let tol = cfg.tol.unwrap_or(DEFAULT_TOL);
    let n = cfg.grid_n.unwrap_or(DEFAULT_GRID);
    if n < 10 {
        return Err(invalid(format!("grid-n must be at least 10, got {n}")));
    }
    let grid = match (cfg.mu, cfg.xi, cfg.s) {
        (None, None, None) => default_verify_grid(),
        _ => vec![params_of(cfg)?],
    };
    for p in &grid {
        validate_params(p.mu, p.xi, p.s).map_err(lib)?;
    }
    let tamper = cfg.tamper;
    let rows: Vec<VerifyRow> = grid
        .iter()
        .map(|&params| -> Result<VerifyRow, Error> {
            let (st, rep) = robust_strategy(&params)?;
            let h = if tamper && st.kind.is_deterrence() { tamper_policy(&st.posterior)? } else { st.posterior.clone() };
            let saddle = saddle_check(st.price, &h, &rep.worst_case, &params, SADDLE_TOL)?;
            let oracle = nature_worst_case_oracle(st.price, &h, &params, n)?;
            let zero_search_ok = params.s != 0.0 || {
                let (z, g) = zero_search_strategy(params.mu, params.xi)?;
                z == st && g == rep.guarantee
            };
            Ok(VerifyRow {
                params,
                kind: st.kind,
                price: st.price,
                guarantee: rep.guarantee,
                saddle: saddle.max_residual(),
                oracle: st.price * oracle.demand,
                zero_search_ok,
            })
        })
        .collect::<Result<_, _>>()
        .map_err(lib)?;

    let mut failing = Vec::new();
    let mut body = String::from("mu,xi,s,kind,price,guarantee,saddle_residual,oracle_guarantee,oracle_gap,pass\n");
    let (mut max_saddle, mut max_gap) = (0.0_f64, 0.0_f64);
    for r in &rows {
        let gap = r.oracle - r.guarantee;
        let pass = r.saddle <= tol && gap.abs() <= tol && r.zero_search_ok;
        max_saddle = max_saddle.max(r.saddle);
        max_gap = max_gap.max(gap.abs());
        if !pass {
            failing.push(format!(
                "{}: saddle residual {}, oracle gap {}",
                r.params,
                fmt9(r.saddle),
                fmt9(gap)
            ));
        }
        body += &csv_line(&[
            fmt9(r.params.mu),
            fmt9(r.params.xi),
            fmt9(r.params.s),
            r.kind.to_string(),
            fmt9(r.price),
            fmt9(r.guarantee),
            fmt9(r.saddle),
            fmt9(r.oracle),
            fmt9(gap),
            pass.to_string(),
        ]);
    }
    if cfg.format == Some(Format::Json) {
        body = to_json(json!({
            "points": rows.len(),
            "failures": failing.len(),
            "max_saddle_residual": max_saddle,
            "max_oracle_gap": max_gap,
            "tol": tol,
            "grid_n": n,
        }));
    } else {
        body += &format!(
            "# points={},failures={},max_saddle_residual={},max_oracle_gap={}\n",
            rows.len(),
            failing.len(),
            fmt9(max_saddle),
            fmt9(max_gap)
        );
    }
    if failing.is_empty() {
        Ok(body)
    } else {
        Err((body, Failure::Verify(failing.join("\n"))))
    }
}

pub fn cmd_simulate(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    finish(cfg, simulate(cfg), out, err)
}

fn read_dist(path: &std::path::Path) -> Result<PiecewiseDistribution, (String, Failure)> {
    let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    PiecewiseDistribution::from_json(&text).map_err(lib)
}

fn simulate(cfg: &RunConfig) -> Outcome {
    let params = params_of(cfg)?;
    let (st, _) = robust_strategy(&params).map_err(lib)?;
    let price = cfg.price.unwrap_or(st.price);
    if !(0.0..=1.0).contains(&price) {
        return Err(invalid(format!("price {price} outside [0, 1]")));
    }
    let h = match &cfg.h {
        Some(path) => read_dist(path)?,
        None => st.posterior,
    };
    let g = match &cfg.g {
        Some(path) => read_dist(path)?,
        None => PiecewiseDistribution::new(vec![(0.0, 1.0 - params.xi), (1.0, params.xi)], vec![]).map_err(lib)?,
    };
    if (g.mean() - params.xi).abs() > 1e-9 {
        return Err(lib(Error::MeanMismatch(g.mean(), params.xi)));
    }
    let trials = cfg.trials.unwrap_or(1_000_000);
    let (demand, revenue) = demand_and_revenue(price, &h, &g, params.s).map_err(lib)?;
    let sim = simulate_market(price, &h, &g, params.s, trials, cfg.seed).map_err(lib)?;
    let z = if sim.stderr > 0.0 { (sim.demand - demand) / sim.stderr } else { 0.0 };
    Ok(match cfg.format.unwrap_or(Format::Json) {
        Format::Json => to_json(json!({
            "price": price,
            "demand": demand,
            "revenue": revenue,
            "simulated_demand": sim.demand,
            "stderr": sim.stderr,
            "z_score": z,
            "trials": sim.trials,
            "seed": cfg.seed,
        })),
        Format::Csv => {
            "price,demand,revenue,simulated_demand,stderr,z_score,trials\n".to_string()
                + &csv_line(&[
                    fmt9(price),
                    fmt9(demand),
                    fmt9(revenue),
                    fmt9(sim.demand),
                    fmt9(sim.stderr),
                    fmt9(z),
                    sim.trials.to_string(),
                ])
        }
    })
}

pub fn cmd_benchmark(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    finish(cfg, benchmark(cfg), out, err)
}

fn benchmark(cfg: &RunConfig) -> Outcome {
    let family = SmoothFamily::parse(cfg.dist.as_deref().unwrap_or("uniform")).map_err(lib)?;
    let g = SmoothDistribution::new(family).map_err(lib)?;
    let p_h = monopoly_price(&g).map_err(lib)?;
    let mut report = json!({
        "dist": family,
        "mean": g.mean(),
        "p_h": p_h,
        "monopoly_profit_per_mu": p_h * g.cdf(1.0 - p_h),
        "s_hat_g": known_dist_threshold(&g).ok(),
    });
    if let Some(s) = cfg.s {
        let k = known_dist_price(&g, s).map_err(lib)?;
        report["known_distribution"] = json!(k);
        if let Some(mu) = cfg.mu {
            validate_params(mu, 0.5, 0.0).map_err(lib)?;
            let dom = full_info_dominance(&g, s, mu, 50, 20, cfg.seed).map_err(lib)?;
            report["dominance"] = json!(dom);
        }
    }
    if let (Some(mu), Some(xi)) = (cfg.mu, cfg.xi) {
        let (st, guarantee) = zero_search_strategy(mu, xi).map_err(lib)?;
        report["zero_search"] = json!({"kind": st.kind.as_str(), "price": st.price, "guarantee": guarantee});
    }
    match cfg.format.unwrap_or(Format::Json) {
        Format::Json => Ok(to_json(report)),
        Format::Csv => Err(invalid("benchmark output is JSON only")),
    }
}
