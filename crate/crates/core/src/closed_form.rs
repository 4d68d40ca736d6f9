//! Closed-form thresholds, policies, fixed-price guarantees and the robustly
//! optimal selling strategy.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Field, Result};
use crate::game::{deters, guarantee_of, nature_best_response, GuaranteeReport};
use crate::model::{ModelParams, PiecewiseDistribution, PolicyKind, SellingStrategy};
use crate::search::EffectiveOutsideOption;

/// Guarantee differences below this are ties, resolved in favour of deterrence.
pub const TIE_TOL: f64 = 1e-10;
const SCAN_POINTS: usize = 1000;

pub fn b1(xi: f64) -> f64 {
    xi * (xi - 1.0).powi(2) / (xi * xi + 1.0)
}

pub fn b2(xi: f64) -> f64 {
    xi * (xi - 1.0).powi(2) / (xi + 1.0).powi(2)
}

pub fn b3(xi: f64) -> f64 {
    xi - 2.0 * xi * xi
}

/// `mu` below which the uniform policy keeps a mass point at zero (`d = xi - s`).
pub fn mu_low(d: f64) -> f64 {
    let s_plus = 1.0 - d; // 1 - xi + s
    (1.0 + s_plus - (2.0 * d - d * d).sqrt()) / (2.0 * s_plus)
}

/// `mu` above which the uniform policy is `U[2mu-1, 1]` with a price below `2mu-1`.
pub fn mu_high(d: f64) -> f64 {
    1.0 - d.sqrt() / 2.0
}

/// Price paired with uniform information.
pub fn uniform_price(params: &ModelParams) -> f64 {
    let d = params.effective_mean();
    let mu = params.mu;
    if mu <= mu_low(d) {
        (1.0 - (2.0 * d - d * d).sqrt()) / (1.0 - d)
    } else if mu <= mu_high(d) {
        2.0 * mu - 1.0
    } else {
        1.0 - d.sqrt()
    }
}

/// Revenue guarantee of uniform information at its price.
pub fn uniform_guarantee(params: &ModelParams) -> f64 {
    uniform_guarantee_at(params.mu, params.effective_mean())
}

fn uniform_guarantee_at(mu: f64, d: f64) -> f64 {
    if mu <= mu_low(d) {
        mu * (1.0 - (2.0 * d - d * d).sqrt())
    } else if mu <= mu_high(d) {
        (2.0 * mu - 1.0) * (1.0 - d / (2.0 - 2.0 * mu))
    } else {
        (1.0 - d.sqrt()).powi(2)
    }
}

/// Full information at `p = s/xi`.
pub fn full_guarantee(params: &ModelParams) -> f64 {
    params.mu * params.deterrence_price()
}

/// Mixture information at `p = s/xi`.
pub fn mixture_guarantee(params: &ModelParams) -> f64 {
    let ModelParams { mu, xi, s } = *params;
    s / xi - 2.0 * s * xi * (1.0 - mu) / (xi - s)
}

/// Smallest `mu` for which mixture information is a distribution.
pub fn mixture_min_mu(params: &ModelParams) -> f64 {
    (1.0 + params.deterrence_price()) / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Region {
    /// `s >= B1`: full information at `s/xi` for every `mu`.
    FullInfoAll,
    /// `s < B2`: uniform information for every `mu`.
    UniformAll,
    /// `B3 <= s < B1`: uniform below `mu_hat`, full information above.
    CutoffFull,
    /// `B2 <= s < B3`: uniform below `mu_check`, mixture information above.
    CutoffMixture,
}

impl Region {
    pub fn as_str(&self) -> &'static str {
        match self {
            Region::FullInfoAll => "FullInfoAll",
            Region::UniformAll => "UniformAll",
            Region::CutoffFull => "CutoffFull",
            Region::CutoffMixture => "CutoffMixture",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn region_of(xi: f64, s: f64) -> Region {
    if s >= b1(xi) {
        Region::FullInfoAll
    } else if s < b2(xi) {
        Region::UniformAll
    } else if s >= b3(xi) {
        Region::CutoffFull
    } else {
        Region::CutoffMixture
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionThresholds {
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub mu_low: f64,
    pub mu_high: f64,
    pub region: Region,
    pub mu_hat: Option<f64>,
    pub mu_check: Option<f64>,
    /// Search cost at which the robust price drops, for these `mu` and `xi`.
    pub s_hat: Option<f64>,
    pub cutoff_at_boundary: bool,
    pub single_crossing: bool,
}

pub fn thresholds(params: &ModelParams) -> RegionThresholds {
    let ModelParams { mu, xi, s } = *params;
    let d = xi - s;
    let region = region_of(xi, s);
    let cut = match region {
        Region::CutoffFull | Region::CutoffMixture => cutoff_search(params).ok(),
        _ => None,
    };
    RegionThresholds {
        b1: b1(xi),
        b2: b2(xi),
        b3: b3(xi),
        mu_low: mu_low(d),
        mu_high: mu_high(d),
        region,
        mu_hat: cut.as_ref().and_then(|c| c.mu_hat),
        mu_check: cut.as_ref().and_then(|c| c.mu_check),
        s_hat: price_jump_cost(mu, xi),
        cutoff_at_boundary: cut.as_ref().is_some_and(|c| c.at_boundary),
        single_crossing: cut.as_ref().is_none_or(|c| c.single_crossing),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cutoffs {
    pub mu_hat: Option<f64>,
    pub mu_check: Option<f64>,
    /// The cutoff sits at an end of its search interval.
    pub at_boundary: bool,
    /// The pre-scan saw exactly one entry into the deterrence set.
    pub single_crossing: bool,
}

struct Crossing {
    at: Option<f64>,
    at_boundary: bool,
    single: bool,
}

/// Infimum of `{x in (lo, hi]: diff(x) >= -TIE_TOL}` by pre-scan and bisection.
fn first_crossing(diff: impl Fn(f64) -> f64, lo: f64, hi: f64, include_lo: bool) -> Crossing {
    let pts: Vec<f64> = (0..SCAN_POINTS)
        .map(|i| {
            let k = if include_lo { i } else { i + 1 };
            let n = if include_lo { SCAN_POINTS - 1 } else { SCAN_POINTS };
            lo + (hi - lo) * k as f64 / n as f64
        })
        .collect();
    let inside: Vec<bool> = pts.iter().map(|&x| diff(x) >= -TIE_TOL).collect();
    let entries = inside
        .windows(2)
        .filter(|w| !w[0] && w[1])
        .count()
        + inside[0] as usize;
    let exits = inside.windows(2).filter(|w| w[0] && !w[1]).count();
    let single = entries <= 1 && exits == 0;
    let Some(first) = inside.iter().position(|&b| b) else {
        return Crossing { at: None, at_boundary: false, single };
    };
    if first == 0 {
        return Crossing { at: Some(lo), at_boundary: true, single };
    }
    let (mut a, mut b) = (pts[first - 1], pts[first]);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if diff(m) >= -TIE_TOL {
            b = m;
        } else {
            a = m;
        }
    }
    Crossing {
        at: Some(b),
        at_boundary: b >= hi - 1e-12,
        single,
    }
}

/// Cutoffs in `mu` between uniform information and a deterrence policy.
///
/// For `s < B2` both are absent. In `B3 <= s <= B1` only `mu_hat` is searched,
/// in `B2 <= s < B3` only `mu_check`.
pub fn cutoff_search(params: &ModelParams) -> Result<Cutoffs> {
    let ModelParams { xi, s, .. } = *params;
    let d = xi - s;
    let (c1, c2, c3) = (b1(xi), b2(xi), b3(xi));
    if s > c1 + 1e-15 {
        return Err(Error::RegionMismatch { s, b1: c1, b2: c2 });
    }
    if s < c2 {
        return Ok(Cutoffs {
            mu_hat: None,
            mu_check: None,
            at_boundary: false,
            single_crossing: true,
        });
    }
    if s >= c3 {
        let ratio = s / xi;
        let c = first_crossing(|mu| mu * ratio - uniform_guarantee_at(mu, d), 0.0, 1.0, false);
        Ok(Cutoffs {
            mu_hat: c.at,
            mu_check: None,
            at_boundary: c.at_boundary,
            single_crossing: c.single,
        })
    } else {
        let lo = (1.0 + s / xi) / 2.0;
        let c = first_crossing(
            |mu| s / xi - 2.0 * s * xi * (1.0 - mu) / d - uniform_guarantee_at(mu, d),
            lo,
            1.0,
            true,
        );
        Ok(Cutoffs {
            mu_hat: None,
            mu_check: c.at,
            at_boundary: c.at_boundary,
            single_crossing: c.single,
        })
    }
}

/// Policy kind chosen by the robust strategy, from the guarantee comparison
/// inside each region.
pub fn optimal_kind(params: &ModelParams) -> PolicyKind {
    let uniform = uniform_guarantee(params);
    match region_of(params.xi, params.s) {
        Region::FullInfoAll => PolicyKind::Full,
        Region::UniformAll => PolicyKind::Uniform,
        Region::CutoffFull => {
            if full_guarantee(params) >= uniform - TIE_TOL {
                PolicyKind::Full
            } else {
                PolicyKind::Uniform
            }
        }
        Region::CutoffMixture => {
            if params.mu >= mixture_min_mu(params) - 1e-12 && mixture_guarantee(params) >= uniform - TIE_TOL {
                PolicyKind::Mixture
            } else {
                PolicyKind::Uniform
            }
        }
    }
}

/// Search cost at which the robust policy switches from uniform to a deterrence
/// policy, for fixed `mu` and `xi`.
pub fn price_jump_cost(mu: f64, xi: f64) -> Option<f64> {
    let kind = |s: f64| optimal_kind(&ModelParams { mu, xi, s }).is_deterrence();
    let n = 400;
    let pts: Vec<f64> = (0..=n).map(|i| xi * i as f64 / (n as f64 + 1.0)).collect();
    let first = pts.iter().position(|&s| kind(s))?;
    if first == 0 {
        return Some(0.0);
    }
    let (mut a, mut b) = (pts[first - 1], pts[first]);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if kind(m) {
            b = m;
        } else {
            a = m;
        }
    }
    Some(b)
}

/// A named distribution over posteriors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PolicySpec {
    /// Uniform information at the uniform price.
    Uniform,
    Full,
    Mixture,
    Binary { p: f64 },
    Degenerate,
    WBar { p: f64, w_bar: f64 },
    Hhu { p: f64 },
}

impl PolicySpec {
    pub fn kind(&self) -> PolicyKind {
        match self {
            PolicySpec::Uniform => PolicyKind::Uniform,
            PolicySpec::Full => PolicyKind::Full,
            PolicySpec::Mixture => PolicyKind::Mixture,
            PolicySpec::Binary { .. } => PolicyKind::Binary,
            PolicySpec::Degenerate => PolicyKind::Degenerate,
            PolicySpec::WBar { .. } => PolicyKind::WBarFamily,
            PolicySpec::Hhu { .. } => PolicyKind::HhuFamily,
        }
    }
}

fn invalid(msg: String) -> Error {
    Error::InvalidRegion(msg)
}

pub fn make_policy(spec: PolicySpec, params: &ModelParams) -> Result<PiecewiseDistribution> {
    let ModelParams { mu, xi, s } = *params;
    let d = xi - s;
    let zmax = params.max_reservation();
    match spec {
        PolicySpec::Uniform => {
            let p = uniform_price(params);
            if p >= 2.0 * mu - 1.0 {
                let top = 2.0 * mu / (1.0 + p);
                PiecewiseDistribution::new(vec![(0.0, (1.0 - top).max(0.0))], vec![(p, 1.0, top.min(1.0))])
            } else {
                PiecewiseDistribution::uniform(2.0 * mu - 1.0, 1.0)
            }
        }
        PolicySpec::Full => PiecewiseDistribution::new(vec![(0.0, 1.0 - mu), (1.0, mu)], vec![]),
        PolicySpec::Mixture => {
            let lo = mixture_min_mu(params);
            if mu < lo - 1e-12 {
                return Err(invalid(format!("mixture information needs mu >= {lo}, got {mu}")));
            }
            let c = 2.0 * xi * xi * (1.0 - mu) / (d * d);
            let seg = (c * zmax).min(1.0);
            PiecewiseDistribution::new(vec![(1.0, 1.0 - seg)], vec![(s / xi, 1.0, seg)])
        }
        PolicySpec::Binary { p } => {
            let top = p + zmax;
            if top > 1.0 + 1e-12 {
                return Err(invalid(format!("binary policy needs p <= s/xi, got p={p}")));
            }
            if mu > top + 1e-12 {
                return Err(invalid(format!("binary policy needs mu <= p + 1 - s/xi = {top}")));
            }
            let m = (mu / top).min(1.0);
            PiecewiseDistribution::new(vec![(0.0, 1.0 - m), (top.min(1.0), m)], vec![])
        }
        PolicySpec::Degenerate => PiecewiseDistribution::point(mu),
        PolicySpec::WBar { p, w_bar } => {
            if w_bar < 2.0 * mu - p - 1e-12 || w_bar <= p || w_bar > 1.0 + 1e-12 {
                return Err(invalid(format!(
                    "w_bar={w_bar} outside [max(2mu-p, p), 1] for p={p}"
                )));
            }
            let top = (2.0 * mu / (w_bar + p)).min(1.0);
            PiecewiseDistribution::new(vec![(0.0, 1.0 - top)], vec![(p, w_bar.min(1.0), top)])
        }
        PolicySpec::Hhu { p } => {
            if !deters(p, params) {
                return Err(invalid(format!("H^h_u needs p <= s/xi, got p={p}")));
            }
            if mu < p + zmax / 2.0 - 1e-12 || mu > p + zmax + 1e-12 {
                return Err(invalid(format!(
                    "H^h_u needs p + (1-s/xi)/2 <= mu <= p + 1 - s/xi, got mu={mu}"
                )));
            }
            let c = 2.0 * (xi * xi * (p + 1.0 - mu) - s * xi) / (d * d);
            let seg = (c * zmax).clamp(0.0, 1.0);
            let top = (p + zmax).min(1.0);
            PiecewiseDistribution::new(vec![(top, 1.0 - seg)], vec![(p, top, seg)])
        }
    }
}

/// Which case of the fixed-price optimal policy applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum FixedPriceRegime {
    /// `p > s/xi`, `p < 2mu-1`: `U[2mu-1, 1]`.
    UniformSpread,
    /// `p > s/xi`, `w_bar = 2mu - p`.
    WBarLower,
    /// `p > s/xi`, interior `w_bar`.
    WBarInterior,
    /// `p > s/xi`, `w_bar = 1`.
    WBarUpper,
    Degenerate,
    Binary,
    Hhu,
    /// `p <= s/xi`, `w_bar = 2mu - p`.
    DeterrenceWBarLower,
    DeterrenceWBarInterior,
    /// `p <= s/xi`, `w_bar = p + 1 - s/xi`.
    DeterrenceWBarUpper,
}

impl FixedPriceRegime {
    pub fn as_str(&self) -> &'static str {
        match self {
            FixedPriceRegime::UniformSpread => "p < 2mu-1",
            FixedPriceRegime::WBarLower => "2mu-1 <= p < mu-t",
            FixedPriceRegime::WBarInterior => "mu-t <= p < 1-sqrt(2d)",
            FixedPriceRegime::WBarUpper => "p >= 1-sqrt(2d)",
            FixedPriceRegime::Degenerate => "degenerate",
            FixedPriceRegime::Binary => "binary",
            FixedPriceRegime::Hhu => "hhu",
            FixedPriceRegime::DeterrenceWBarLower => "deterrence w_bar lower",
            FixedPriceRegime::DeterrenceWBarInterior => "deterrence w_bar interior",
            FixedPriceRegime::DeterrenceWBarUpper => "deterrence w_bar upper",
        }
    }
}

impl fmt::Display for FixedPriceRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn check_price(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange {
            field: Field::Price,
            value: p,
            reason: "price must lie in [0, 1]",
        });
    }
    Ok(())
}

/// Bracket for `w_bar`: `[max(2mu - p, p), upper]`.
fn w_bar_bracket(p: f64, params: &ModelParams) -> (f64, f64) {
    let upper = if deters(p, params) {
        (p + params.max_reservation()).min(1.0)
    } else {
        1.0
    };
    ((2.0 * params.mu - p).max(p), upper)
}

fn w_bar_demand(p: f64, w_bar: f64, params: &ModelParams) -> f64 {
    make_policy(PolicySpec::WBar { p, w_bar }, params)
        .and_then(|h| nature_best_response(p, &h, params))
        .map(|r| r.demand)
        .unwrap_or(0.0)
}

/// Free parameter of `H_w̄`: golden-section search of the worst-case demand over
/// the admissible bracket.
pub fn w_bar_solve(p: f64, params: &ModelParams) -> Result<f64> {
    check_price(p)?;
    let (lo, hi) = w_bar_bracket(p, params);
    if hi - lo <= 1e-12 || hi <= p {
        return Ok(hi.max(lo));
    }
    // Demand is zero up to p + d; start the search where it becomes positive.
    let d = params.effective_mean();
    let start = lo.max((p + d).min(hi));
    let mut a = start;
    let mut b = hi;
    let f = |u: f64| w_bar_demand(p, u, params);
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..120 {
        if b - a < 1e-13 {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        }
    }
    let mid = 0.5 * (a + b);
    let candidates = [start, mid, hi];
    let best = candidates
        .into_iter()
        .map(|u| (u, f(u)))
        .fold((mid, f64::NEG_INFINITY), |acc, (u, v)| if v > acc.1 + 1e-15 { (u, v) } else { acc });
    Ok(best.0)
}

/// Optimal distribution over posteriors when the price is fixed at `p`.
pub fn optimal_info_for_price(p: f64, params: &ModelParams) -> Result<(PiecewiseDistribution, FixedPriceRegime)> {
    check_price(p)?;
    let ModelParams { mu, xi, s } = *params;
    let d = xi - s;
    let zmax = params.max_reservation();
    let label = |w_bar: f64, lo: f64, hi: f64, deterrence: bool| {
        let tol = 1e-6;
        match (w_bar <= lo + tol, w_bar >= hi - tol, deterrence) {
            (true, _, false) => FixedPriceRegime::WBarLower,
            (_, true, false) => FixedPriceRegime::WBarUpper,
            (_, _, false) => FixedPriceRegime::WBarInterior,
            (true, _, true) => FixedPriceRegime::DeterrenceWBarLower,
            (_, true, true) => FixedPriceRegime::DeterrenceWBarUpper,
            (_, _, true) => FixedPriceRegime::DeterrenceWBarInterior,
        }
    };
    if !deters(p, params) {
        if mu > (1.0 + p) / 2.0 {
            return Ok((PiecewiseDistribution::uniform(2.0 * mu - 1.0, 1.0)?, FixedPriceRegime::UniformSpread));
        }
        let (lo, hi) = w_bar_bracket(p, params);
        if hi - p <= 1e-9 {
            // No room above the price: nothing sells.
            return Ok((PiecewiseDistribution::point(mu)?, FixedPriceRegime::WBarUpper));
        }
        let w_bar = w_bar_solve(p, params)?;
        let h = make_policy(PolicySpec::WBar { p, w_bar }, params)?;
        return Ok((h, label(w_bar, lo, hi, false)));
    }
    if mu >= p + zmax {
        return Ok((PiecewiseDistribution::point(mu)?, FixedPriceRegime::Degenerate));
    }
    if p >= (1.0 - 2.0 * xi) * d / (2.0 * xi * xi) {
        return Ok((make_policy(PolicySpec::Binary { p }, params)?, FixedPriceRegime::Binary));
    }
    if mu >= p + zmax / 2.0 {
        return Ok((make_policy(PolicySpec::Hhu { p }, params)?, FixedPriceRegime::Hhu));
    }
    let (lo, hi) = w_bar_bracket(p, params);
    let w_bar = w_bar_solve(p, params)?;
    let h = make_policy(PolicySpec::WBar { p, w_bar }, params)?;
    Ok((h, label(w_bar, lo, hi, true)))
}

/// Guarantee of the optimal policy at a price above `s/xi`, in closed form.
fn phi_spread(p: f64, params: &ModelParams) -> f64 {
    let mu = params.mu;
    let d = params.effective_mean();
    if p >= 1.0 {
        return 0.0;
    }
    if p < 2.0 * mu - 1.0 {
        return (p * (1.0 - d / (1.0 - p))).max(0.0);
    }
    let t = (d + (d * (d + 8.0 * mu)).sqrt()) / 4.0;
    if p < mu - t {
        p * (1.0 - d / (2.0 * (mu - p)))
    } else if p < 1.0 - (2.0 * d).sqrt() {
        p * mu / ((d * (d + 2.0 * p)).sqrt() + d + p)
    } else {
        (2.0 * mu * p / (1.0 + p)) * (1.0 - d / (1.0 - p)).max(0.0)
    }
}

/// Guarantee of the optimal policy at a price at or below `s/xi`, in closed form.
fn phi_deterrence(p: f64, params: &ModelParams) -> f64 {
    let ModelParams { mu, xi, s } = *params;
    let d = xi - s;
    let zmax = params.max_reservation();
    if mu >= p + zmax {
        return p;
    }
    if p >= (1.0 - 2.0 * xi) * d / (2.0 * xi * xi) {
        return p * mu * xi / (xi * (1.0 + p) - s);
    }
    if mu >= p + zmax / 2.0 {
        return p * (1.0 - 2.0 * xi * (xi * (p + 1.0 - mu) - s) / d);
    }
    // H_w̄ with w̄ in [max(2mu - p, p), p + zmax].
    if mu > p && d <= 2.0 * (mu - p).powi(2) / (2.0 * mu - p) {
        p * (1.0 - d / (2.0 * (mu - p)))
    } else if 2.0 * p * d < zmax * (zmax - 2.0 * d) {
        p * mu / ((d * (d + 2.0 * p)).sqrt() + d + p)
    } else {
        let u = p + zmax;
        (p * 2.0 * mu * (u - p - d) / ((u + p) * (u - p))).max(0.0)
    }
}

/// Closed-form fixed-price revenue guarantee `Φ(p)`.
pub fn fixed_price_guarantee_formula(p: f64, params: &ModelParams) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    if deters(p, params) {
        phi_deterrence(p, params)
    } else {
        phi_spread(p, params)
    }
}

/// Length of the price interval above `s/xi` on which the guarantee of the
/// optimal policy keeps rising. Positive means the `H_w̄` policy at `s/xi` is
/// beaten by a slightly higher price.
pub fn zeta_check(params: &ModelParams) -> Option<f64> {
    let p0 = params.deterrence_price();
    let h = 1e-5;
    let mut prev = phi_spread(p0, params);
    let mut p = p0;
    while p + h < 1.0 {
        let next = phi_spread(p + h, params);
        if next <= prev {
            break;
        }
        prev = next;
        p += h;
    }
    (p > p0).then_some(p - p0)
}

/// Constructed worst-case effective outside option for the robust strategy.
pub fn saddle_adversary(params: &ModelParams, kind: PolicyKind) -> Result<EffectiveOutsideOption> {
    let ModelParams { mu, xi, s } = *params;
    let d = xi - s;
    let zmax = params.max_reservation();
    let p_det = params.deterrence_price();
    let dist = match kind {
        PolicyKind::Full => {
            if s < b3(xi) - 1e-12 {
                return Err(invalid(format!("full-information saddle needs s >= B3 = {}", b3(xi))));
            }
            let lambda = (zmax - d) / (zmax - zmax * zmax / 2.0);
            PiecewiseDistribution::new(
                vec![(0.0, lambda * p_det), (zmax, 1.0 - lambda)],
                vec![(0.0, zmax, lambda * zmax)],
            )?
        }
        PolicyKind::Mixture => {
            let beta = 2.0 * xi * xi / d;
            if beta > 1.0 + 1e-12 {
                return Err(invalid(format!("mixture saddle needs s <= B3 = {}", b3(xi))));
            }
            PiecewiseDistribution::new(
                vec![(0.0, 1.0 - beta + beta * p_det)],
                vec![(0.0, zmax, beta * zmax)],
            )?
        }
        PolicyKind::Uniform => {
            let p = uniform_price(params);
            let l = 1.0 - p;
            if mu > mu_high(d) {
                PiecewiseDistribution::new(vec![(0.0, 1.0 - d / l), (l, d / l)], vec![])?
            } else {
                let (alpha, beta) = if l * l <= 2.0 * d {
                    (0.0, 2.0 * (l - d) / (l * (2.0 - l)))
                } else {
                    (1.0 - 2.0 * d / (l * l), 2.0 * d / (l * l))
                };
                PiecewiseDistribution::new(
                    vec![(0.0, alpha + beta * p), (l, (1.0 - alpha - beta).max(0.0))],
                    vec![(0.0, l, beta * l)],
                )?
            }
        }
        other => return Err(invalid(format!("no constructed adversary for {other}"))),
    };
    EffectiveOutsideOption::new(dist, params)
}

/// The robustly optimal price and information policy, with its guarantee and
/// the constructed worst case.
pub fn robust_strategy(params: &ModelParams) -> Result<(SellingStrategy, GuaranteeReport)> {
    let kind = optimal_kind(params);
    let (price, spec, guarantee) = match kind {
        PolicyKind::Full => (params.deterrence_price(), PolicySpec::Full, full_guarantee(params)),
        PolicyKind::Mixture => (params.deterrence_price(), PolicySpec::Mixture, mixture_guarantee(params)),
        _ => (uniform_price(params), PolicySpec::Uniform, uniform_guarantee(params)),
    };
    debug_assert!(kind != PolicyKind::Uniform || price > params.deterrence_price());
    let posterior = make_policy(spec, params)?;
    let regime = match kind {
        PolicyKind::Full => FixedPriceRegime::Binary,
        PolicyKind::Mixture => FixedPriceRegime::Hhu,
        _ => {
            if params.mu > mu_high(params.effective_mean()) {
                FixedPriceRegime::UniformSpread
            } else {
                FixedPriceRegime::WBarUpper
            }
        }
    };
    let worst_case = saddle_adversary(params, kind)?;
    let gp = crate::game::seller_objective(price, &worst_case, params)?;
    let seller_value = price * crate::concavify::upper_concave_envelope(&gp).eval(params.mu);
    let contacts = worst_case.dist.breakpoints();
    let strategy = SellingStrategy::new(price, posterior.clone(), kind, params)?;
    Ok((
        strategy,
        GuaranteeReport {
            price,
            guarantee,
            worst_case,
            seller_value,
            regime,
            posterior,
            contacts,
            open_contact: false,
        },
    ))
}

/// Worst-case revenue of an arbitrary strategy, evaluated numerically.
pub fn evaluate_strategy(strategy: &SellingStrategy, params: &ModelParams) -> Result<GuaranteeReport> {
    guarantee_of(strategy.price, strategy.posterior.clone(), FixedPriceRegime::Degenerate, params)
        .map(|mut r| {
            r.regime = match strategy.kind {
                PolicyKind::Full | PolicyKind::Binary => FixedPriceRegime::Binary,
                PolicyKind::Mixture | PolicyKind::HhuFamily => FixedPriceRegime::Hhu,
                PolicyKind::Degenerate => FixedPriceRegime::Degenerate,
                _ => r.regime,
            };
            r
        })
}
