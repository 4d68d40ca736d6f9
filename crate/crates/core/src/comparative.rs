//! Comparative statics of the robust strategy in the search cost, the outside
//! option mean and the prior.

use rayon::prelude::*;
use serde::Serialize;

use crate::closed_form::{robust_strategy, optimal_kind};
use crate::error::{Error, Result};
use crate::model::{mps_compare, ModelParams, MpsOrdering, PolicyKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveSample {
    pub s: f64,
    pub price: f64,
    pub kind: PolicyKind,
    pub guarantee: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PriceJump {
    pub s_hat: f64,
    pub price_left: f64,
    pub price_right: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriceCurve {
    pub samples: Vec<CurveSample>,
    pub jump: Option<PriceJump>,
}

fn sample_at(mu: f64, xi: f64, s: f64) -> Result<CurveSample> {
    let params = crate::model::validate_params(mu, xi, s)?;
    let (st, rep) = robust_strategy(&params)?;
    Ok(CurveSample {
        s,
        price: st.price,
        kind: st.kind,
        guarantee: rep.guarantee,
    })
}

/// Robust price, policy and guarantee on `grid` search costs in `(0, xi)`, with
/// the location of the switch from uniform to deterrence information.
pub fn price_curve(mu: f64, xi: f64, grid: usize) -> Result<PriceCurve> {
    crate::model::validate_params(mu, xi, 0.0)?;
    let grid = grid.max(2);
    let samples: Vec<CurveSample> = (0..grid)
        .into_par_iter()
        .map(|i| sample_at(mu, xi, xi * (i + 1) as f64 / (grid + 1) as f64))
        .collect::<Result<_>>()?;

    let mut jump = None;
    if let Some(i) = samples
        .windows(2)
        .position(|w| !w[0].kind.is_deterrence() && w[1].kind.is_deterrence())
    {
        let deterrence = |s: f64| optimal_kind(&ModelParams { mu, xi, s }).is_deterrence();
        let (mut a, mut b) = (samples[i].s, samples[i + 1].s);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if deterrence(m) {
                b = m;
            } else {
                a = m;
            }
        }
        let left = sample_at(mu, xi, a)?;
        let right = sample_at(mu, xi, b)?;
        jump = Some(PriceJump {
            s_hat: b,
            price_left: left.price,
            price_right: right.price,
        });
    }
    Ok(PriceCurve { samples, jump })
}

/// MPS comparison of the robust posterior distributions at two search costs.
pub fn informativeness_order(params1: &ModelParams, params2: &ModelParams) -> Result<MpsOrdering> {
    if params1.mu != params2.mu || params1.xi != params2.xi {
        return Err(Error::InvalidRegion(
            "informativeness comparison needs equal mu and xi".into(),
        ));
    }
    let (s1, _) = robust_strategy(params1)?;
    let (s2, _) = robust_strategy(params2)?;
    mps_compare(&s1.posterior, &s2.posterior)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    S,
    Xi,
    Mu,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonotonicityViolation {
    pub params: ModelParams,
    pub direction: Direction,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub checked: usize,
    pub violations: Vec<MonotonicityViolation>,
}

pub const FD_STEP: f64 = 1e-3;
pub const FD_THRESHOLD: f64 = 1e-9;

fn guarantee(mu: f64, xi: f64, s: f64) -> Option<f64> {
    let params = crate::model::validate_params(mu, xi, s).ok()?;
    robust_strategy(&params).ok().map(|(_, r)| r.guarantee)
}

/// Forward-difference sign checks: the guarantee must rise with `s`, fall with
/// `xi` and not fall with `mu`. Steps that leave the parameter space are skipped.
pub fn guarantee_monotonicity(grid: &[ModelParams]) -> MonotonicityReport {
    let results: Vec<(usize, Vec<MonotonicityViolation>)> = grid
        .par_iter()
        .map(|&params| {
            let ModelParams { mu, xi, s } = params;
            let mut checked = 0;
            let mut bad = Vec::new();
            let Some(g0) = guarantee(mu, xi, s) else {
                return (0, bad);
            };
            let h = FD_STEP;
            let steps = [
                (Direction::S, guarantee(mu, xi, s + h), 1.0),
                (Direction::Xi, guarantee(mu, xi + h, s), -1.0),
                (Direction::Mu, guarantee(mu + h, xi, s), 0.0),
            ];
            for (dir, g1, sign) in steps {
                let Some(g1) = g1 else { continue };
                checked += 1;
                let delta = g1 - g0;
                let ok = if sign > 0.0 {
                    delta > FD_THRESHOLD
                } else if sign < 0.0 {
                    delta < -FD_THRESHOLD
                } else {
                    delta >= -FD_THRESHOLD
                };
                if !ok {
                    bad.push(MonotonicityViolation { params, direction: dir, delta });
                }
            }
            (checked, bad)
        })
        .collect();
    let mut report = MonotonicityReport { checked: 0, violations: Vec::new() };
    for (c, v) in results {
        report.checked += c;
        report.violations.extend(v);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_params;

    #[test]
    fn figure_two_jump() {
        let c = price_curve(0.6, 0.5, 200).unwrap();
        let j = c.jump.unwrap();
        assert!((j.s_hat - 0.1).abs() < 1e-6, "{}", j.s_hat);
        assert!((j.price_left - 1.0 / 3.0).abs() < 1e-6);
        assert!((j.price_right - 0.2).abs() < 1e-6);
    }

    #[test]
    fn guarantee_examples() {
        assert!(guarantee(0.6, 0.5, 0.05).unwrap() < guarantee(0.6, 0.5, 0.2).unwrap());
        let g: Vec<f64> = [0.4, 0.5, 0.6].iter().map(|&xi| guarantee(0.6, xi, 0.05).unwrap()).collect();
        assert!(g[0] > g[1] && g[1] > g[2]);
        for &mu in &[0.3, 0.5, 0.7] {
            assert!((guarantee(mu, 0.5, 0.2).unwrap() - 0.4 * mu).abs() < 1e-12);
        }
    }

    #[test]
    fn informativeness_small_costs() {
        let a = validate_params(0.6, 0.5, 0.01).unwrap();
        let b = validate_params(0.6, 0.5, 0.04).unwrap();
        assert_eq!(informativeness_order(&a, &b).unwrap(), MpsOrdering::SecondSpreadsFirst);
        let c = validate_params(0.6, 0.5, 0.2).unwrap();
        assert_eq!(informativeness_order(&a, &c).unwrap(), MpsOrdering::SecondSpreadsFirst);
    }
}
