//! The buyer's search problem: reservation values, the effective outside option
//! and demand.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ModelParams, PiecewiseDistribution, Side, TIE_SNAP};

const BISECTION_ITERS: usize = 200;

/// Reservation value `a`, the root of `S_G(a) = s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReservationValue {
    pub a: f64,
}

/// Distribution of `z = min{v, a}` on `[0, 1 - s/xi]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectiveOutsideOption {
    pub dist: PiecewiseDistribution,
}

impl EffectiveOutsideOption {
    /// Wraps a distribution after checking the mean `xi - s` and the support bound.
    pub fn new(dist: PiecewiseDistribution, params: &ModelParams) -> Result<Self> {
        let m = dist.mean();
        let d = params.effective_mean();
        if (m - d).abs() > 1e-10 {
            return Err(Error::MeanMismatch(m, d));
        }
        if dist.support_max() > params.max_reservation() + 1e-9 {
            return Err(Error::InvalidDistribution(format!(
                "effective outside option reaches {} beyond 1 - s/xi = {}",
                dist.support_max(),
                params.max_reservation()
            )));
        }
        Ok(Self { dist })
    }
}

/// `S_G(t) = E_G[max{t, v}] - t`.
pub fn search_benefit(g: &PiecewiseDistribution, t: f64) -> f64 {
    g.expected_excess(t)
}

/// Smallest `a` in `[xi - s, 1 - s/xi]` with `S_G(a) <= s`, where `xi` is the mean of `g`.
pub fn reservation_value(g: &PiecewiseDistribution, s: f64) -> Result<ReservationValue> {
    let xi = g.mean();
    if !(xi > 0.0) || !(s < xi) || s < 0.0 {
        return Err(Error::NoRoot(format!("need 0 <= s < mean(G), got s={s}, mean={xi}")));
    }
    let mut lo = xi - s;
    let mut hi = (1.0 - s / xi).max(lo);
    if search_benefit(g, lo) < s - 1e-10 {
        return Err(Error::NoRoot(format!(
            "S_G({lo}) = {} < s = {s}",
            search_benefit(g, lo)
        )));
    }
    if search_benefit(g, lo) <= s {
        return Ok(ReservationValue { a: lo });
    }
    for _ in 0..BISECTION_ITERS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if search_benefit(g, mid) <= s {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(ReservationValue { a: hi })
}

/// Pushes `g` through `z = min{v, a}`.
pub fn effective_distribution(g: &PiecewiseDistribution, s: f64) -> Result<EffectiveOutsideOption> {
    let a = reservation_value(g, s)?.a;
    let mut atoms = Vec::new();
    let mut segments = Vec::new();
    let mut below = 0.0;
    for &(loc, mass) in g.atoms() {
        if loc < a - TIE_SNAP {
            atoms.push((loc, mass));
            below += mass;
        }
    }
    for &(lo, hi, mass) in g.segments() {
        if hi <= a {
            segments.push((lo, hi, mass));
            below += mass;
        } else if lo < a {
            let part = mass * (a - lo) / (hi - lo);
            segments.push((lo, a, part));
            below += part;
        }
    }
    atoms.push((a, (1.0 - below).max(0.0)));
    Ok(EffectiveOutsideOption {
        dist: PiecewiseDistribution::new(atoms, segments)?,
    })
}

/// Probability of eventual purchase for a known reservation value `a`.
///
/// Buy now iff `w - p >= a`; otherwise search and come back iff `w - p > v`.
pub fn demand_given_reservation(p: f64, h: &PiecewiseDistribution, g: &PiecewiseDistribution, a: f64) -> f64 {
    let no_search = 1.0 - g.cdf_snapped(a, Side::Left, TIE_SNAP);
    let mut demand = no_search * (1.0 - h.cdf_snapped(p + a, Side::Left, TIE_SNAP));
    for &(loc, mass) in g.atoms() {
        if loc < a - TIE_SNAP {
            demand += mass * (1.0 - h.cdf_snapped(p + loc, Side::Right, TIE_SNAP));
        }
    }
    for &(lo, hi, mass) in g.segments() {
        let top = hi.min(a);
        if top > lo {
            let density = mass / (hi - lo);
            let integral_h = h.integrated_cdf(p + top) - h.integrated_cdf(p + lo);
            demand += density * ((top - lo) - integral_h);
        }
    }
    demand.clamp(0.0, 1.0)
}

/// Returns `(demand, revenue)` for price `p`, posterior distribution `h` and outside option `g`.
pub fn demand_and_revenue(p: f64, h: &PiecewiseDistribution, g: &PiecewiseDistribution, s: f64) -> Result<(f64, f64)> {
    let a = reservation_value(g, s)?.a;
    let d = demand_given_reservation(p, h, g, a);
    Ok((d, p * d))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationResult {
    pub demand: f64,
    pub stderr: f64,
    pub trials: u64,
    /// Share of trials whose drawn match value was high.
    pub high_match_share: f64,
}

const CHUNK: u64 = 1 << 16;

/// Monte Carlo estimate of demand. Trials are split into fixed chunks, each with
/// its own ChaCha stream, so the result depends only on `seed`.
pub fn simulate_market(
    p: f64,
    h: &PiecewiseDistribution,
    g: &PiecewiseDistribution,
    s: f64,
    n_trials: u64,
    seed: u64,
) -> Result<SimulationResult> {
    if n_trials == 0 {
        return Err(Error::InvalidDistribution("n_trials must be at least 1".into()));
    }
    let a = reservation_value(g, s)?.a;
    let chunks = n_trials.div_ceil(CHUNK);
    let (buys, highs) = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk);
            let n = CHUNK.min(n_trials - chunk * CHUNK);
            let mut buys = 0u64;
            let mut highs = 0u64;
            for _ in 0..n {
                let w = h.sample(&mut rng);
                if rng.gen::<f64>() < w {
                    highs += 1;
                }
                let net = w - p;
                let buy = if net >= a - TIE_SNAP {
                    true
                } else {
                    let v = g.sample(&mut rng);
                    net > v + TIE_SNAP
                };
                buys += buy as u64;
            }
            (buys, highs)
        })
        .reduce(|| (0, 0), |x, y| (x.0 + y.0, x.1 + y.1));
    let n = n_trials as f64;
    let demand = buys as f64 / n;
    Ok(SimulationResult {
        demand,
        stderr: (demand * (1.0 - demand) / n).sqrt(),
        trials: n_trials,
        high_match_share: highs as f64 / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bern(xi: f64) -> PiecewiseDistribution {
        PiecewiseDistribution::new(vec![(0.0, 1.0 - xi), (1.0, xi)], vec![]).unwrap()
    }

    #[test]
    fn benefit_examples() {
        let u = PiecewiseDistribution::uniform(0.0, 1.0).unwrap();
        let a = 0.3675;
        assert!((search_benefit(&u, a) - (1.0 - a) * (1.0 - a) / 2.0).abs() < 1e-15);
        assert!((search_benefit(&u, a) - 0.2).abs() < 1e-4);
        let pt = PiecewiseDistribution::point(0.5).unwrap();
        assert!((search_benefit(&pt, 0.2) - 0.3).abs() < 1e-15);
        assert_eq!(search_benefit(&u, 1.0), 0.0);
        assert!((search_benefit(&u, -0.5) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reservation_examples() {
        let pt = PiecewiseDistribution::point(0.5).unwrap();
        assert!((reservation_value(&pt, 0.2).unwrap().a - 0.3).abs() < 1e-10);
        assert!((reservation_value(&bern(0.5), 0.2).unwrap().a - 0.6).abs() < 1e-10);
        let u = PiecewiseDistribution::uniform(0.0, 1.0).unwrap();
        assert!((reservation_value(&u, 0.2).unwrap().a - (1.0 - 0.4_f64.sqrt())).abs() < 1e-10);
    }

    #[test]
    fn effective_examples() {
        let pt = PiecewiseDistribution::point(0.5).unwrap();
        let e = effective_distribution(&pt, 0.2).unwrap();
        assert_eq!(e.dist.atoms().len(), 1);
        assert!((e.dist.atoms()[0].0 - 0.3).abs() < 1e-10);
        let e = effective_distribution(&bern(0.5), 0.2).unwrap();
        assert_eq!(e.dist.atoms().len(), 2);
        assert!((e.dist.atoms()[1].0 - 0.6).abs() < 1e-10);
        assert!((e.dist.mean() - 0.3).abs() < 1e-10);
        let u = PiecewiseDistribution::uniform(0.0, 1.0).unwrap();
        let e = effective_distribution(&u, 0.1).unwrap();
        assert!((e.dist.mean() - 0.4).abs() < 1e-10);
    }

    #[test]
    fn demand_examples() {
        let hb = PiecewiseDistribution::new(vec![(0.0, 0.4), (1.0, 0.6)], vec![]).unwrap();
        for g in [bern(0.5), PiecewiseDistribution::point(0.5).unwrap(), PiecewiseDistribution::uniform(0.0, 1.0).unwrap()] {
            let (d, r) = demand_and_revenue(0.4, &hb, &g, 0.2).unwrap();
            assert!((d - 0.6).abs() < 1e-12, "demand {d}");
            assert!((r - 0.24).abs() < 1e-12);
        }
        let h = PiecewiseDistribution::uniform(0.3, 1.0).unwrap();
        let (d, r) = demand_and_revenue(0.3, &h, &PiecewiseDistribution::point(0.5).unwrap(), 0.2).unwrap();
        assert!((d - 4.0 / 7.0).abs() < 1e-12);
        assert!((r - 0.3 * 4.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn simulation_deterministic() {
        let h = PiecewiseDistribution::uniform(0.3, 1.0).unwrap();
        let g = PiecewiseDistribution::point(0.5).unwrap();
        let a = simulate_market(0.3, &h, &g, 0.2, 200_000, 7).unwrap();
        let b = simulate_market(0.3, &h, &g, 0.2, 200_000, 7).unwrap();
        assert_eq!(a, b);
        assert!((a.demand - 4.0 / 7.0).abs() < 4.0 * a.stderr);
        let one = simulate_market(0.0, &PiecewiseDistribution::point(1.0).unwrap(), &bern(0.5), 0.2, 1000, 1).unwrap();
        assert_eq!(one.demand, 1.0);
    }
}
