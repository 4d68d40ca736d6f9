//! Primitives and the exact distribution algebra used by every other module.
//!
//! Distributions over posteriors and over outside options are finite mixtures
//! of point masses and uniform segments. All CDF values and CDF integrals are
//! evaluated piece by piece in closed form.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Field, Result};

/// Masses below this are dropped during canonicalisation.
pub const MASS_EPS: f64 = 1e-15;
/// Structural tolerance for total mass and means.
pub const STRUCT_TOL: f64 = 1e-12;
/// Locations closer than this to an evaluation point count as sitting on it.
/// Buyer tie-breaking (buy now when indifferent, do not return when
/// indifferent) is decided with this slack so that round-off in a reservation
/// value never flips a purchase decision.
pub const TIE_SNAP: f64 = 1e-9;

/// Prior mean match value, outside-option mean and search cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub mu: f64,
    pub xi: f64,
    pub s: f64,
}

impl ModelParams {
    /// Mean of the effective outside option, `xi - s`.
    pub fn effective_mean(&self) -> f64 {
        self.xi - self.s
    }

    /// Largest possible reservation value, `1 - s/xi`.
    pub fn max_reservation(&self) -> f64 {
        1.0 - self.s / self.xi
    }

    /// Highest price at which a top atom deters search for every outside option, `s/xi`.
    pub fn deterrence_price(&self) -> f64 {
        self.s / self.xi
    }
}

impl fmt::Display for ModelParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(mu={}, xi={}, s={})", self.mu, self.xi, self.s)
    }
}

pub fn validate_params(mu: f64, xi: f64, s: f64) -> Result<ModelParams> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::OutOfRange {
            field: Field::Mu,
            value: mu,
            reason: "0 < mu < 1 violated",
        });
    }
    if !(xi > 0.0 && xi < 1.0) {
        return Err(Error::OutOfRange {
            field: Field::Xi,
            value: xi,
            reason: "0 < xi < 1 violated",
        });
    }
    if !(s >= 0.0) {
        return Err(Error::OutOfRange {
            field: Field::S,
            value: s,
            reason: "s >= 0 violated",
        });
    }
    if !(s < xi) {
        return Err(Error::OutOfRange {
            field: Field::S,
            value: s,
            reason: "s < xi violated",
        });
    }
    Ok(ModelParams { mu, xi, s })
}

/// Which one-sided limit of a CDF to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `F(w-)`: mass strictly below `w`.
    Left,
    /// `F(w)`: mass at or below `w`.
    Right,
}

#[derive(Debug, Clone, Deserialize)]
struct RawDistribution {
    #[serde(default)]
    atoms: Vec<(f64, f64)>,
    #[serde(default)]
    segments: Vec<(f64, f64, f64)>,
}

/// A probability distribution on `[0, 1]` made of atoms `(location, mass)` and
/// uniform segments `(lo, hi, mass)`. A segment owns `[lo, hi)`.
///
/// Instances are always canonical: atoms sorted and merged, segments sorted,
/// disjoint, zero-mass pieces removed and touching segments of equal density
/// merged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution")]
pub struct PiecewiseDistribution {
    atoms: Vec<(f64, f64)>,
    segments: Vec<(f64, f64, f64)>,
}

impl TryFrom<RawDistribution> for PiecewiseDistribution {
    type Error = Error;

    fn try_from(raw: RawDistribution) -> Result<Self> {
        PiecewiseDistribution::new(raw.atoms, raw.segments)
    }
}

fn clamp_unit(x: f64, what: &str) -> Result<f64> {
    if !x.is_finite() || x < -TIE_SNAP || x > 1.0 + TIE_SNAP {
        return Err(Error::InvalidDistribution(format!(
            "{what} {x} outside [0, 1]"
        )));
    }
    Ok(x.clamp(0.0, 1.0))
}

impl PiecewiseDistribution {
    pub fn new(atoms: Vec<(f64, f64)>, segments: Vec<(f64, f64, f64)>) -> Result<Self> {
        let mut clean_atoms = Vec::with_capacity(atoms.len());
        for (loc, mass) in atoms {
            let loc = clamp_unit(loc, "atom location")?;
            if !mass.is_finite() || mass < -MASS_EPS {
                return Err(Error::InvalidDistribution(format!("negative atom mass {mass}")));
            }
            if mass > MASS_EPS {
                clean_atoms.push((loc, mass));
            }
        }
        let mut clean_segments = Vec::with_capacity(segments.len());
        for (lo, hi, mass) in segments {
            let lo = clamp_unit(lo, "segment start")?;
            let hi = clamp_unit(hi, "segment end")?;
            if !mass.is_finite() || mass < -MASS_EPS {
                return Err(Error::InvalidDistribution(format!("negative segment mass {mass}")));
            }
            if mass <= MASS_EPS {
                continue;
            }
            if !(lo < hi) {
                // A degenerate segment carrying mass is an atom.
                if (hi - lo).abs() <= STRUCT_TOL {
                    clean_atoms.push((lo, mass));
                    continue;
                }
                return Err(Error::InvalidDistribution(format!("segment [{lo}, {hi}) is empty")));
            }
            clean_segments.push((lo, hi, mass));
        }

        clean_atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut atoms: Vec<(f64, f64)> = Vec::with_capacity(clean_atoms.len());
        for (loc, mass) in clean_atoms {
            match atoms.last_mut() {
                Some(last) if (last.0 - loc).abs() <= STRUCT_TOL => last.1 += mass,
                _ => atoms.push((loc, mass)),
            }
        }

        clean_segments.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut segments: Vec<(f64, f64, f64)> = Vec::with_capacity(clean_segments.len());
        for (lo, hi, mass) in clean_segments {
            if let Some(last) = segments.last_mut() {
                if lo < last.1 - STRUCT_TOL {
                    return Err(Error::InvalidDistribution(format!(
                        "segments [{}, {}) and [{lo}, {hi}) overlap",
                        last.0, last.1
                    )));
                }
                let d_last = last.2 / (last.1 - last.0);
                let d_new = mass / (hi - lo);
                if (lo - last.1).abs() <= STRUCT_TOL
                    && (d_last - d_new).abs() <= 1e-12 * d_last.max(d_new)
                {
                    last.1 = hi;
                    last.2 += mass;
                    continue;
                }
            }
            segments.push((lo, hi, mass));
        }

        let total: f64 =
            atoms.iter().map(|a| a.1).sum::<f64>() + segments.iter().map(|s| s.2).sum::<f64>();
        if (total - 1.0).abs() > STRUCT_TOL {
            return Err(Error::InvalidDistribution(format!("total mass {total} != 1")));
        }
        Ok(Self { atoms, segments })
    }

    /// Point mass `δ_c`.
    pub fn point(c: f64) -> Result<Self> {
        Self::new(vec![(c, 1.0)], vec![])
    }

    /// Uniform distribution `U_[a,b]`.
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        Self::new(vec![], vec![(a, b, 1.0)])
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn segments(&self) -> &[(f64, f64, f64)] {
        &self.segments
    }

    /// Re-runs canonicalisation. Instances are already canonical, so this is a clone
    /// in all but pathological round-off cases.
    pub fn canonical(&self) -> Result<Self> {
        Self::new(self.atoms.clone(), self.segments.clone())
    }

    /// One-sided CDF at `w`. Defined on the whole real line.
    pub fn cdf(&self, w: f64, side: Side) -> f64 {
        self.cdf_snapped(w, side, 0.0)
    }

    /// One-sided CDF where atoms within `snap` of `w` are treated as sitting on `w`.
    pub(crate) fn cdf_snapped(&self, w: f64, side: Side, snap: f64) -> f64 {
        let mut acc = 0.0;
        for &(loc, mass) in &self.atoms {
            let counted = match side {
                Side::Right => loc <= w + snap,
                Side::Left => loc < w - snap,
            };
            if counted {
                acc += mass;
            } else {
                break;
            }
        }
        for &(lo, hi, mass) in &self.segments {
            if w >= hi {
                acc += mass;
            } else if w > lo {
                acc += mass * (w - lo) / (hi - lo);
            } else {
                break;
            }
        }
        acc.min(1.0)
    }

    /// Exact mean: atoms plus segment midpoints.
    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|&(l, m)| l * m).sum::<f64>()
            + self
                .segments
                .iter()
                .map(|&(lo, hi, m)| 0.5 * (lo + hi) * m)
                .sum::<f64>()
    }

    /// `∫_{-∞}^x F(t) dt`, piecewise quadratic in `x`.
    pub fn integrated_cdf(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for &(loc, mass) in &self.atoms {
            if x > loc {
                acc += mass * (x - loc);
            }
        }
        for &(lo, hi, mass) in &self.segments {
            if x >= hi {
                acc += mass * (0.5 * (hi - lo) + (x - hi));
            } else if x > lo {
                acc += mass * (x - lo) * (x - lo) / (2.0 * (hi - lo));
            }
        }
        acc
    }

    /// `E[(X - t)^+]`, the expected excess over `t`.
    pub fn expected_excess(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for &(loc, mass) in &self.atoms {
            if loc > t {
                acc += mass * (loc - t);
            }
        }
        for &(lo, hi, mass) in &self.segments {
            if t <= lo {
                acc += mass * (0.5 * (lo + hi) - t);
            } else if t < hi {
                let density = mass / (hi - lo);
                acc += density * (hi - t) * (hi - t) / 2.0;
            }
        }
        acc
    }

    /// Sorted, deduplicated atom locations and segment endpoints.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self.atoms.iter().map(|a| a.0).collect();
        for &(lo, hi, _) in &self.segments {
            pts.push(lo);
            pts.push(hi);
        }
        sort_dedup(&mut pts, 1e-14);
        pts
    }

    /// Mass of the atom at `loc`, if any (within `TIE_SNAP`).
    pub fn atom_mass_at(&self, loc: f64) -> f64 {
        self.atoms
            .iter()
            .filter(|a| (a.0 - loc).abs() <= TIE_SNAP)
            .map(|a| a.1)
            .sum()
    }

    pub fn support_max(&self) -> f64 {
        let a = self.atoms.last().map(|a| a.0).unwrap_or(0.0);
        let s = self.segments.last().map(|s| s.1).unwrap_or(0.0);
        a.max(s)
    }

    /// Inverse-CDF draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut u: f64 = rng.gen();
        for &(loc, mass) in &self.atoms {
            if u < mass {
                return loc;
            }
            u -= mass;
        }
        for &(lo, hi, mass) in &self.segments {
            if u < mass {
                return lo + (hi - lo) * (u / mass);
            }
            u -= mass;
        }
        // Round-off in the masses: fall back to the top of the support.
        self.support_max()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("distribution serialises")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidDistribution(e.to_string()))
    }
}

pub(crate) fn sort_dedup(pts: &mut Vec<f64>, tol: f64) {
    pts.sort_by(|a, b| a.total_cmp(b));
    pts.dedup_by(|b, a| (*b - *a).abs() <= tol);
}

/// Random atom-and-segment distribution on `[0, 1]` with the given mean.
///
/// A random base distribution is mixed with a point mass at 0 or 1 so that
/// the mean comes out exactly.
pub fn random_with_mean<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> Result<PiecewiseDistribution> {
    let n_atoms = rng.gen_range(1..=3);
    let n_segs = rng.gen_range(0..=2);
    let mut weights: Vec<f64> = (0..n_atoms + n_segs).map(|_| rng.gen::<f64>() + 0.05).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let mut atoms: Vec<(f64, f64)> = (0..n_atoms).map(|i| (rng.gen::<f64>(), weights[i])).collect();
    let mut cuts: Vec<f64> = (0..2 * n_segs).map(|_| rng.gen::<f64>()).collect();
    cuts.sort_by(|a, b| a.total_cmp(b));
    let mut segments: Vec<(f64, f64, f64)> = Vec::new();
    for j in 0..n_segs {
        let (lo, hi) = (cuts[2 * j], cuts[2 * j + 1]);
        if hi - lo > 1e-6 {
            segments.push((lo, hi, weights[n_atoms + j]));
        } else {
            atoms.push((lo, weights[n_atoms + j]));
        }
    }
    let base = PiecewiseDistribution::new(atoms, segments)?;
    let m = base.mean();
    let (lambda, anchor) = if m > mean { (mean / m, 0.0) } else { ((1.0 - mean) / (1.0 - m), 1.0) };
    let mut atoms: Vec<(f64, f64)> = base.atoms().iter().map(|&(l, q)| (l, q * lambda)).collect();
    atoms.push((anchor, 1.0 - lambda));
    let segments = base.segments().iter().map(|&(lo, hi, q)| (lo, hi, q * lambda)).collect();
    PiecewiseDistribution::new(atoms, segments)
}

/// Label for the information policies that show up in the analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PolicyKind {
    Uniform,
    Full,
    Mixture,
    Binary,
    Degenerate,
    WBarFamily,
    HhuFamily,
    Custom,
}

impl PolicyKind {
    /// Policies with an atom at the top of the support that buys immediately.
    pub fn is_deterrence(&self) -> bool {
        matches!(self, PolicyKind::Full | PolicyKind::Mixture | PolicyKind::Binary | PolicyKind::HhuFamily)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            PolicyKind::Uniform => "Uniform",
            PolicyKind::Full => "Full",
            PolicyKind::Mixture => "Mixture",
            PolicyKind::Binary => "Binary",
            PolicyKind::Degenerate => "Degenerate",
            PolicyKind::WBarFamily => "WBarFamily",
            PolicyKind::HhuFamily => "HhuFamily",
            PolicyKind::Custom => "Custom",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A price paired with a Bayes-plausible distribution over posteriors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SellingStrategy {
    pub price: f64,
    pub posterior: PiecewiseDistribution,
    pub kind: PolicyKind,
}

impl SellingStrategy {
    pub fn new(
        price: f64,
        posterior: PiecewiseDistribution,
        kind: PolicyKind,
        params: &ModelParams,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&price) {
            return Err(Error::OutOfRange {
                field: Field::Price,
                value: price,
                reason: "price must lie in [0, 1]",
            });
        }
        let m = posterior.mean();
        if (m - params.mu).abs() > STRUCT_TOL {
            return Err(Error::MeanMismatch(m, params.mu));
        }
        Ok(Self { price, posterior, kind })
    }
}

/// Result of a mean-preserving-spread comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MpsOrdering {
    /// The second argument is a mean-preserving spread of the first.
    SecondSpreadsFirst,
    /// The first argument is a mean-preserving spread of the second.
    FirstSpreadsSecond,
    Equal,
    Incomparable,
}

/// Compares integrated CDFs exactly. `F2` spreads `F1` iff
/// `∫_0^x F1 <= ∫_0^x F2` for all `x`, with equal means.
pub fn mps_compare(f1: &PiecewiseDistribution, f2: &PiecewiseDistribution) -> Result<MpsOrdering> {
    let (m1, m2) = (f1.mean(), f2.mean());
    if (m1 - m2).abs() > 1e-9 {
        return Err(Error::MeanMismatch(m1, m2));
    }
    let diff = |x: f64| f1.integrated_cdf(x) - f2.integrated_cdf(x);

    let mut pts = f1.breakpoints();
    pts.extend(f2.breakpoints());
    pts.push(0.0);
    pts.push(1.0);
    sort_dedup(&mut pts, 1e-14);

    // diff is quadratic between consecutive breakpoints: its extremes sit at
    // the endpoints or at the vertex.
    let (mut lo, mut hi) = (0.0_f64, 0.0_f64);
    let mut track = |v: f64| {
        lo = lo.min(v);
        hi = hi.max(v);
    };
    for w in pts.windows(2) {
        let (u, v) = (w[0], w[1]);
        let (q0, qm, q1) = (diff(u), diff(0.5 * (u + v)), diff(v));
        track(q0);
        track(q1);
        let c2 = 2.0 * (q0 - 2.0 * qm + q1);
        let c1 = q1 - q0 - c2;
        if c2.abs() > 0.0 {
            let t = -c1 / (2.0 * c2);
            if t > 0.0 && t < 1.0 {
                track(q0 + c1 * t + c2 * t * t);
            }
        }
    }

    const TOL: f64 = 1e-11;
    Ok(match (lo >= -TOL, hi <= TOL) {
        (true, true) => MpsOrdering::Equal,
        (false, true) => MpsOrdering::SecondSpreadsFirst,
        (true, false) => MpsOrdering::FirstSpreadsSecond,
        (false, false) => MpsOrdering::Incomparable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full_info(mu: f64) -> PiecewiseDistribution {
        PiecewiseDistribution::new(vec![(0.0, 1.0 - mu), (1.0, mu)], vec![]).unwrap()
    }

    #[test]
    fn validate_params_examples() {
        assert!(validate_params(0.6, 0.5, 0.2).is_ok());
        match validate_params(0.6, 0.5, 0.5) {
            Err(Error::OutOfRange { field, .. }) => assert_eq!(field, Field::S),
            other => panic!("unexpected {other:?}"),
        }
        match validate_params(0.0, 0.5, 0.1) {
            Err(Error::OutOfRange { field, .. }) => assert_eq!(field, Field::Mu),
            other => panic!("unexpected {other:?}"),
        }
        assert!(validate_params(0.5, 1.0, 0.1).is_err());
        assert!(validate_params(0.5, 0.5, -0.1).is_err());
        assert!(validate_params(0.5, 0.5, 0.0).is_ok());
    }

    #[test]
    fn cdf_one_sided_limits() {
        let hb = full_info(0.6);
        assert!((hb.cdf(0.5, Side::Right) - 0.4).abs() < 1e-15);
        assert!((hb.cdf(1.0, Side::Left) - 0.4).abs() < 1e-15);
        assert!((hb.cdf(1.0, Side::Right) - 1.0).abs() < 1e-15);
        let u = PiecewiseDistribution::uniform(0.2, 1.0).unwrap();
        assert!((u.cdf(0.6, Side::Right) - 0.5).abs() < 1e-15);
        assert_eq!(u.cdf(0.6, Side::Left), u.cdf(0.6, Side::Right));
    }

    #[test]
    fn means() {
        let mu = 0.75;
        let u = PiecewiseDistribution::uniform(2.0 * mu - 1.0, 1.0).unwrap();
        assert!((u.mean() - 0.75).abs() < 1e-15);
        // density 0.225 on [1/3, 1) plus 0.85 at 1
        let hu = PiecewiseDistribution::new(vec![(1.0, 0.85)], vec![(1.0 / 3.0, 1.0, 0.15)]).unwrap();
        assert!((hu.mean() - 0.95).abs() < 1e-12);
        assert!((PiecewiseDistribution::point(0.6).unwrap().mean() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn mean_matches_quadrature() {
        let hu = PiecewiseDistribution::new(vec![(1.0, 0.85)], vec![(1.0 / 3.0, 1.0, 0.15)]).unwrap();
        // E[X] = ∫_0^1 (1 - F(x)) dx by midpoint rule
        let n = 200_000;
        let h = 1.0 / n as f64;
        let q: f64 = (0..n)
            .map(|i| 1.0 - hu.cdf((i as f64 + 0.5) * h, Side::Right))
            .sum::<f64>()
            * h;
        assert!((q - 0.95).abs() < 1e-8);
    }

    #[test]
    fn canonical_merges_and_drops() {
        let d = PiecewiseDistribution::new(
            vec![(0.5, 0.375), (0.5, 0.375), (0.1, 0.0)],
            vec![(0.0, 0.25, 0.125), (0.25, 0.5, 0.125)],
        )
        .unwrap();
        assert_eq!(d.atoms(), &[(0.5, 0.75)]);
        assert_eq!(d.segments(), &[(0.0, 0.5, 0.25)]);
        assert_eq!(d.canonical().unwrap(), d);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(PiecewiseDistribution::new(vec![(0.5, 0.5)], vec![]).is_err());
        assert!(PiecewiseDistribution::new(vec![(1.5, 1.0)], vec![]).is_err());
        assert!(PiecewiseDistribution::new(vec![], vec![(0.0, 0.6, 0.5), (0.5, 1.0, 0.5)]).is_err());
        assert!(PiecewiseDistribution::new(vec![(0.5, -0.5), (0.2, 1.5)], vec![]).is_err());
    }

    #[test]
    fn mps_examples() {
        let mu = 0.75;
        let hb = full_info(mu);
        let u = PiecewiseDistribution::uniform(0.5, 1.0).unwrap();
        assert_eq!(mps_compare(&u, &hb).unwrap(), MpsOrdering::SecondSpreadsFirst);
        assert_eq!(mps_compare(&hb, &u).unwrap(), MpsOrdering::FirstSpreadsSecond);
        assert_eq!(mps_compare(&hb, &hb).unwrap(), MpsOrdering::Equal);
        let other = PiecewiseDistribution::point(0.7).unwrap();
        assert!(matches!(mps_compare(&hb, &other), Err(Error::MeanMismatch(..))));
    }

    #[test]
    fn mps_incomparable() {
        // Same mean 0.5, integrated CDFs cross.
        let a = PiecewiseDistribution::new(vec![(0.0, 0.1), (0.55, 0.9)], vec![]).unwrap();
        let a_mean = a.mean();
        let b = PiecewiseDistribution::new(vec![(a_mean - 0.2, 0.5), (a_mean + 0.2, 0.5)], vec![]).unwrap();
        assert_eq!(mps_compare(&a, &b).unwrap(), MpsOrdering::Incomparable);
    }

    #[test]
    fn json_format() {
        let d = PiecewiseDistribution::new(vec![(1.0, 0.85)], vec![(1.0 / 3.0, 1.0, 0.15)]).unwrap();
        let s = d.to_json();
        assert!(s.starts_with("{\"atoms\":[[1.0,0.85]],\"segments\":[[0.3333333333333333,1.0,0.15"));
        let back = PiecewiseDistribution::from_json(&s).unwrap();
        assert_eq!(back, d);
        let parsed = PiecewiseDistribution::from_json(r#"{"atoms":[[0,0.4],[1,0.6]],"segments":[]}"#).unwrap();
        assert_eq!(parsed, full_info(0.6));
        assert!(PiecewiseDistribution::from_json(r#"{"atoms":[[0,0.4]]}"#).is_err());
    }
}
