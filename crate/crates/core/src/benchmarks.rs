//! Benchmarks: zero search cost, and a seller who knows the outside-option
//! distribution exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::distribution::{Beta, Continuous, ContinuousCDF};

use crate::closed_form::robust_strategy;
use crate::error::{Error, Result};
use crate::model::{random_with_mean, validate_params, PiecewiseDistribution, SellingStrategy, Side, TIE_SNAP};

const QUAD_TOL: f64 = 1e-12;

/// Robust strategy when search is free.
pub fn zero_search_strategy(mu: f64, xi: f64) -> Result<(SellingStrategy, f64)> {
    let params = validate_params(mu, xi, 0.0)?;
    let (strategy, report) = robust_strategy(&params)?;
    Ok((strategy, report.guarantee))
}

/// Built-in outside-option families on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SmoothFamily {
    Uniform,
    /// Density proportional to `exp(-rate x)`.
    TruncatedExponential { rate: f64 },
    Triangular { mode: f64 },
    Beta { alpha: f64, beta: f64 },
}

impl SmoothFamily {
    /// Parses `uniform`, `exp:RATE`, `triangular:MODE` or `beta:A,B`.
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = || Error::InvalidDistribution(format!("unknown distribution '{spec}'"));
        let (name, args) = spec.split_once(':').unwrap_or((spec, ""));
        let nums: Vec<f64> = if args.is_empty() {
            Vec::new()
        } else {
            args.split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|_| bad()))
                .collect::<Result<_>>()?
        };
        match (name, nums.as_slice()) {
            ("uniform", []) => Ok(SmoothFamily::Uniform),
            ("exp", [rate]) => Ok(SmoothFamily::TruncatedExponential { rate: *rate }),
            ("triangular", [mode]) => Ok(SmoothFamily::Triangular { mode: *mode }),
            ("beta", [a, b]) => Ok(SmoothFamily::Beta { alpha: *a, beta: *b }),
            _ => Err(bad()),
        }
    }
}

/// A continuous outside-option distribution with full support on `[0, 1]`
/// and a log-concave density.
#[derive(Debug, Clone)]
pub struct SmoothDistribution {
    family: SmoothFamily,
    beta: Option<Beta>,
    mean: f64,
}

impl SmoothDistribution {
    pub fn new(family: SmoothFamily) -> Result<Self> {
        let beta = match family {
            SmoothFamily::Uniform => None,
            SmoothFamily::TruncatedExponential { rate } => {
                if !rate.is_finite() {
                    return Err(Error::InvalidDistribution(format!("rate {rate}")));
                }
                None
            }
            SmoothFamily::Triangular { mode } => {
                if !(0.0..=1.0).contains(&mode) {
                    return Err(Error::InvalidDistribution(format!("mode {mode} outside [0, 1]")));
                }
                None
            }
            SmoothFamily::Beta { alpha, beta } => Some(
                Beta::new(alpha, beta).map_err(|e| Error::InvalidDistribution(e.to_string()))?,
            ),
        };
        let mut dist = Self { family, beta, mean: 0.0 };
        dist.check_log_concave()?;
        dist.mean = simpson(&|v| 1.0 - dist.cdf(v), 0.0, 1.0, QUAD_TOL);
        Ok(dist)
    }

    pub fn family(&self) -> SmoothFamily {
        self.family
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        match self.family {
            SmoothFamily::Uniform => x,
            SmoothFamily::TruncatedExponential { rate } => {
                if rate.abs() < 1e-12 {
                    x
                } else {
                    (-rate * x).exp_m1() / (-rate).exp_m1()
                }
            }
            SmoothFamily::Triangular { mode } => {
                if x < mode {
                    x * x / mode
                } else {
                    1.0 - (1.0 - x) * (1.0 - x) / (1.0 - mode)
                }
            }
            SmoothFamily::Beta { .. } => self.beta.as_ref().expect("beta").cdf(x),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        match self.family {
            SmoothFamily::Uniform => 1.0,
            SmoothFamily::TruncatedExponential { rate } => {
                if rate.abs() < 1e-12 {
                    1.0
                } else {
                    -rate * (-rate * x).exp() / (-rate).exp_m1()
                }
            }
            SmoothFamily::Triangular { mode } => {
                if x < mode {
                    2.0 * x / mode
                } else {
                    2.0 * (1.0 - x) / (1.0 - mode)
                }
            }
            SmoothFamily::Beta { .. } => self.beta.as_ref().expect("beta").pdf(x),
        }
    }

    /// Midpoint test of `log g` on a 200-point interior grid.
    fn check_log_concave(&self) -> Result<()> {
        let n = 200;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let logs: Vec<f64> = xs.iter().map(|&x| self.pdf(x).ln()).collect();
        if let Some(i) = logs.iter().position(|l| !l.is_finite()) {
            return Err(Error::NotLogConcave(xs[i]));
        }
        for i in 1..n - 1 {
            if logs[i] < 0.5 * (logs[i - 1] + logs[i + 1]) - 1e-12 {
                return Err(Error::NotLogConcave(xs[i]));
            }
        }
        Ok(())
    }

    /// `S_G(t) = ∫_t^1 (1 - G(v)) dv`.
    pub fn search_benefit(&self, t: f64) -> f64 {
        if t >= 1.0 {
            return 0.0;
        }
        let lo = t.max(0.0);
        (lo - t) + simpson(&|v| 1.0 - self.cdf(v), lo, 1.0, QUAD_TOL)
    }

    pub fn reservation_value(&self, s: f64) -> Result<f64> {
        let xi = self.mean;
        if !(s >= 0.0 && s < xi) {
            return Err(Error::NoRoot(format!("need 0 <= s < mean(G) = {xi}, got {s}")));
        }
        let (mut lo, mut hi) = (xi - s, 1.0 - s / xi);
        if self.search_benefit(lo) < s - 1e-10 {
            return Err(Error::NoRoot(format!("S_G({lo}) < s")));
        }
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if m <= lo || m >= hi {
                break;
            }
            if self.search_benefit(m) <= s {
                hi = m;
            } else {
                lo = m;
            }
        }
        Ok(hi)
    }
}

fn simpson_rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature of `f` on `[a, b]`.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    // Two initial panels so that symmetric integrands are not misjudged.
    let m = 0.5 * (a + b);
    let half = |lo: f64, hi: f64| {
        let mid = 0.5 * (lo + hi);
        let (fa, fm, fb) = (f(lo), f(mid), f(hi));
        let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
        simpson_rec(f, lo, hi, fa, fm, fb, whole, tol / 2.0, 40)
    };
    half(a, m) + half(m, b)
}

/// Root of `p g(1-p) = G(1-p)`: the monopoly price against a buyer whose only
/// alternative is `v ~ G`.
pub fn monopoly_price(g: &SmoothDistribution) -> Result<f64> {
    let phi = |p: f64| p * g.pdf(1.0 - p) - g.cdf(1.0 - p);
    let (mut lo, mut hi) = (0.0, 1.0);
    if phi(lo) >= 0.0 || phi(hi) < 0.0 {
        return Err(Error::NoRoot("p g(1-p) - G(1-p) does not change sign on [0, 1]".into()));
    }
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            break;
        }
        if phi(m) < 0.0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    // Return whichever end has the smaller residual.
    Ok(if phi(lo).abs() <= phi(hi).abs() { lo } else { hi })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum KnownBranch {
    /// `p = 1 - a`: every high-value buyer buys without searching.
    Deterrence,
    /// `p = p_h`: the buyer searches and compares.
    Monopoly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KnownDistPrice {
    pub price: f64,
    pub branch: KnownBranch,
    pub a: f64,
    pub p_h: f64,
    /// Optimal profit divided by `mu`.
    pub profit_per_mu: f64,
}

/// Optimal price under full information when `G` is known.
pub fn known_dist_price(g: &SmoothDistribution, s: f64) -> Result<KnownDistPrice> {
    let a = g.reservation_value(s)?;
    let p_h = monopoly_price(g)?;
    let monopoly = p_h * g.cdf(1.0 - p_h);
    let (price, branch, profit) = if 1.0 - a >= monopoly {
        (1.0 - a, KnownBranch::Deterrence, 1.0 - a)
    } else {
        (p_h, KnownBranch::Monopoly, monopoly)
    };
    Ok(KnownDistPrice {
        price,
        branch,
        a,
        p_h,
        profit_per_mu: profit,
    })
}

/// Search cost at which the known-distribution price drops from `p_h` to `1 - a`.
pub fn known_dist_threshold(g: &SmoothDistribution) -> Result<f64> {
    let p_h = monopoly_price(g)?;
    let target = p_h * g.cdf(1.0 - p_h);
    let xi = g.mean();
    let gap = |s: f64| g.reservation_value(s).map(|a| 1.0 - a - target);
    let (mut lo, mut hi) = (0.0, xi * (1.0 - 1e-9));
    if gap(lo)? >= 0.0 || gap(hi)? < 0.0 {
        return Err(Error::NoRoot("1 - a(s) never reaches the monopoly profit".into()));
    }
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            break;
        }
        if gap(m)? < 0.0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    let s_hat = 0.5 * (lo + hi);
    let a = g.reservation_value(s_hat)?;
    if !(p_h > 1.0 - a) {
        return Err(Error::NoRoot(format!("no price drop at s = {s_hat}")));
    }
    Ok(s_hat)
}

/// Probability of eventual purchase when `G` is smooth and known.
pub fn demand_known(p: f64, h: &PiecewiseDistribution, g: &SmoothDistribution, a: f64) -> f64 {
    let mut demand = (1.0 - g.cdf(a)) * (1.0 - h.cdf_snapped(p + a, Side::Left, TIE_SNAP));
    let mut cuts = vec![0.0, a];
    cuts.extend(h.breakpoints().into_iter().map(|b| b - p).filter(|&x| x > 0.0 && x < a));
    if let SmoothFamily::Triangular { mode } = g.family() {
        if mode > 0.0 && mode < a {
            cuts.push(mode);
        }
    }
    cuts.sort_by(|x, y| x.total_cmp(y));
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi - lo < 1e-15 {
            continue;
        }
        // Inside a piece H(p + v) has no jumps, so right limits are exact.
        demand += simpson(&|v| g.pdf(v) * (1.0 - h.cdf(p + v, Side::Right)), lo, hi, 1e-12);
    }
    demand.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceReport {
    pub checked: usize,
    /// Strategies whose revenue exceeded the full-information optimum.
    pub violations: usize,
    pub max_excess: f64,
    /// Strategies that beat full information at the same price (pooling near the
    /// top of the support can do this at prices below `1 - a`).
    pub same_price_wins: usize,
}

/// Samples `(p, H)` pairs and compares their revenue with the optimal
/// full-information profit under the known `G`.
pub fn full_info_dominance(
    g: &SmoothDistribution,
    s: f64,
    mu: f64,
    n_prices: usize,
    n_policies: usize,
    seed: u64,
) -> Result<DominanceReport> {
    let opt = known_dist_price(g, s)?;
    let best = mu * opt.profit_per_mu;
    let a = opt.a;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = DominanceReport {
        checked: 0,
        violations: 0,
        max_excess: f64::NEG_INFINITY,
        same_price_wins: 0,
    };
    let full = PiecewiseDistribution::new(vec![(0.0, 1.0 - mu), (1.0, mu)], vec![])?;
    for _ in 0..n_prices {
        let p: f64 = rng.gen();
        let full_rev = p * demand_known(p, &full, g, a);
        for _ in 0..n_policies {
            let h = random_with_mean(&mut rng, mu)?;
            let rev = p * demand_known(p, &h, g, a);
            report.checked += 1;
            report.max_excess = report.max_excess.max(rev - best);
            if rev > best + 1e-9 {
                report.violations += 1;
            }
            if rev > full_rev + 1e-9 {
                report.same_price_wins += 1;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_benchmark() {
        let g = SmoothDistribution::new(SmoothFamily::Uniform).unwrap();
        assert!((g.mean() - 0.5).abs() < 1e-12);
        assert!((monopoly_price(&g).unwrap() - 0.5).abs() < 1e-12);
        let r = known_dist_price(&g, 0.02).unwrap();
        assert_eq!(r.branch, KnownBranch::Monopoly);
        assert!((r.price - 0.5).abs() < 1e-12);
        let r = known_dist_price(&g, 0.08).unwrap();
        assert_eq!(r.branch, KnownBranch::Deterrence);
        assert!((r.price - 0.4).abs() < 1e-9);
        let s_hat = known_dist_threshold(&g).unwrap();
        assert!((s_hat - 0.03125).abs() < 1e-10);
    }

    #[test]
    fn zero_search() {
        let (st, _) = zero_search_strategy(0.6, 0.5).unwrap();
        assert!((st.price - (1.0 - 0.75_f64.sqrt()) / 0.5).abs() < 1e-12);
        assert_eq!(st.kind, crate::model::PolicyKind::Uniform);
    }

    #[test]
    fn log_concavity() {
        assert!(matches!(
            SmoothDistribution::new(SmoothFamily::Beta { alpha: 0.5, beta: 0.5 }),
            Err(Error::NotLogConcave(_))
        ));
        assert!(SmoothDistribution::new(SmoothFamily::Beta { alpha: 2.0, beta: 3.0 }).is_ok());
        assert!(SmoothDistribution::new(SmoothFamily::Triangular { mode: 0.3 }).is_ok());
        assert!(SmoothDistribution::new(SmoothFamily::TruncatedExponential { rate: -2.0 }).is_ok());
    }

    #[test]
    fn means_by_family() {
        let t = SmoothDistribution::new(SmoothFamily::Triangular { mode: 0.3 }).unwrap();
        assert!((t.mean() - (0.0 + 0.3 + 1.0) / 3.0).abs() < 1e-10);
        let b = SmoothDistribution::new(SmoothFamily::Beta { alpha: 2.0, beta: 3.0 }).unwrap();
        assert!((b.mean() - 0.4).abs() < 1e-9);
    }

    #[test]
    fn parse_family() {
        assert_eq!(SmoothFamily::parse("beta:2,3").unwrap(), SmoothFamily::Beta { alpha: 2.0, beta: 3.0 });
        assert_eq!(SmoothFamily::parse("uniform").unwrap(), SmoothFamily::Uniform);
        assert!(SmoothFamily::parse("cauchy").is_err());
    }

    #[test]
    fn known_demand_matches_piecewise_for_uniform() {
        let g = SmoothDistribution::new(SmoothFamily::Uniform).unwrap();
        let gp = PiecewiseDistribution::uniform(0.0, 1.0).unwrap();
        let h = PiecewiseDistribution::new(vec![(0.0, 0.2), (0.9, 0.3)], vec![(0.4, 0.8, 0.5)]).unwrap();
        let s = 0.05;
        let a = g.reservation_value(s).unwrap();
        let exact = crate::search::demand_and_revenue(0.25, &h, &gp, s).unwrap().0;
        assert!((demand_known(0.25, &h, &g, a) - exact).abs() < 1e-9);
    }
}
