//! Upper concave envelopes of piecewise-linear functions with jumps, and
//! optimisation of `∫ f dF` over distributions `F` with a given mean.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{sort_dedup, PiecewiseDistribution, Side};

/// Contact tolerance between an envelope and the function it majorises.
pub const CONTACT_TOL: f64 = 1e-10;
/// Knots closer than this are the same knot.
const KNOT_TOL: f64 = 1e-12;

/// A breakpoint: the left limit, the value at `x` and the right limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Knot {
    pub x: f64,
    pub left: f64,
    pub value: f64,
    pub right: f64,
}

impl Knot {
    pub fn continuous(x: f64, y: f64) -> Self {
        Self { x, left: y, value: y, right: y }
    }

    /// Upper semicontinuous value at the knot.
    pub fn usc(&self) -> f64 {
        self.left.max(self.value).max(self.right)
    }
}

/// Affine piece `slope * x + intercept` on the open interval `(start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Piece {
    pub start: f64,
    pub end: f64,
    pub slope: f64,
    pub intercept: f64,
}

/// Function on `[lo, hi]` that is affine between consecutive knots and may jump at knots.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiecewiseScalarFunction {
    knots: Vec<Knot>,
}

impl PiecewiseScalarFunction {
    pub fn new(mut knots: Vec<Knot>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidDistribution("a piecewise function needs two knots".into()));
        }
        knots.sort_by(|a, b| a.x.total_cmp(&b.x));
        for k in &knots {
            if !(k.x.is_finite() && k.left.is_finite() && k.value.is_finite() && k.right.is_finite()) {
                return Err(Error::InvalidDistribution(format!("non-finite knot {k:?}")));
            }
        }
        if knots.windows(2).any(|w| w[1].x - w[0].x <= KNOT_TOL) {
            return Err(Error::InvalidDistribution("knots must be distinct".into()));
        }
        let n = knots.len();
        knots[0].left = knots[0].value;
        knots[n - 1].right = knots[n - 1].value;
        Ok(Self { knots })
    }

    /// Continuous interpolant of `(x, y)` pairs.
    pub fn from_points(points: &[(f64, f64)]) -> Result<Self> {
        Self::new(points.iter().map(|&(x, y)| Knot::continuous(x, y)).collect())
    }

    /// `x ↦ F(x - shift)` on `[lo, hi]`, with knots at every breakpoint of `F`
    /// shifted into the interval. `side` selects which one-sided value the
    /// function takes at a jump.
    pub fn from_cdf(dist: &PiecewiseDistribution, shift: f64, lo: f64, hi: f64, side: Side) -> Result<Self> {
        let mut xs = vec![lo, hi];
        xs.extend(
            dist.breakpoints()
                .into_iter()
                .map(|b| b + shift)
                .filter(|&x| x > lo + KNOT_TOL && x < hi - KNOT_TOL),
        );
        sort_dedup(&mut xs, KNOT_TOL);
        let knots = xs
            .into_iter()
            .map(|x| {
                let left = dist.cdf_snapped(x - shift, Side::Left, KNOT_TOL);
                let right = dist.cdf_snapped(x - shift, Side::Right, KNOT_TOL);
                let value = match side {
                    Side::Left => left,
                    Side::Right => right,
                };
                Knot { x, left, value, right }
            })
            .collect();
        Self::new(knots)
    }

    pub fn knots(&self) -> &[Knot] {
        &self.knots
    }

    pub(crate) fn knots_mut(&mut self) -> &mut [Knot] {
        &mut self.knots
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots[0].x, self.knots[self.knots.len() - 1].x)
    }

    pub fn pieces(&self) -> Vec<Piece> {
        self.knots
            .windows(2)
            .map(|w| {
                let slope = (w[1].left - w[0].right) / (w[1].x - w[0].x);
                Piece {
                    start: w[0].x,
                    end: w[1].x,
                    slope,
                    intercept: w[0].right - slope * w[0].x,
                }
            })
            .collect()
    }

    /// Index of the knot at `x` (within tolerance) or `Err(i)` with `x` inside piece `i`.
    fn locate(&self, x: f64) -> std::result::Result<usize, usize> {
        let i = self.knots.partition_point(|k| k.x < x);
        if i < self.knots.len() && (self.knots[i].x - x).abs() <= KNOT_TOL {
            return Ok(i);
        }
        if i > 0 && (self.knots[i - 1].x - x).abs() <= KNOT_TOL {
            return Ok(i - 1);
        }
        if i == 0 {
            return Ok(0);
        }
        if i == self.knots.len() {
            return Ok(i - 1);
        }
        Err(i - 1)
    }

    fn on_piece(&self, i: usize, x: f64) -> f64 {
        let (a, b) = (&self.knots[i], &self.knots[i + 1]);
        let t = (x - a.x) / (b.x - a.x);
        a.right + t * (b.left - a.right)
    }

    /// Value at `x`; outside the domain the nearest endpoint value is used.
    pub fn eval(&self, x: f64) -> f64 {
        match self.locate(x) {
            Ok(k) => self.knots[k].value,
            Err(i) => self.on_piece(i, x),
        }
    }

    /// Upper semicontinuous closure at `x`.
    pub fn usc(&self, x: f64) -> f64 {
        match self.locate(x) {
            Ok(k) => self.knots[k].usc(),
            Err(i) => self.on_piece(i, x),
        }
    }

    /// Exact `∫ f dF`.
    pub fn integrate_against(&self, dist: &PiecewiseDistribution) -> f64 {
        let mut acc = 0.0;
        for &(loc, mass) in dist.atoms() {
            acc += mass * self.eval(loc);
        }
        for &(lo, hi, mass) in dist.segments() {
            let density = mass / (hi - lo);
            let mut cuts = vec![lo, hi];
            cuts.extend(self.knots.iter().map(|k| k.x).filter(|&x| x > lo && x < hi));
            sort_dedup(&mut cuts, 0.0);
            for w in cuts.windows(2) {
                let (u, v) = (w[0], w[1]);
                let mid = 0.5 * (u + v);
                // Affine on (u, v): the midpoint value is the average.
                acc += density * (v - u) * self.eval(mid);
            }
        }
        acc
    }
}

/// Smallest concave upper semicontinuous majorant, via the upper hull of the
/// knots' closure values.
pub fn upper_concave_envelope(f: &PiecewiseScalarFunction) -> PiecewiseScalarFunction {
    let pts: Vec<(f64, f64)> = f.knots.iter().map(|k| (k.x, k.usc())).collect();
    let hull = upper_hull(&pts);
    PiecewiseScalarFunction::from_points(&hull).expect("hull keeps at least the two endpoints")
}

/// Andrew's monotone chain, upper part. Input sorted by `x`.
fn upper_hull(pts: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for &p in pts {
        while hull.len() >= 2 {
            let (o, a) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (a.0 - o.0) * (p.1 - o.1) - (a.1 - o.1) * (p.0 - o.0);
            // Non-negative cross product: `a` is on or below the chord o→p.
            let scale = (p.0 - o.0).abs() * (1.0 + p.1.abs().max(o.1.abs()));
            if cross >= -1e-15 * scale {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentOptimum {
    /// Envelope value at the mean: `sup ∫ f dF` over distributions with that mean.
    pub value: f64,
    /// Distribution with at most two support points attaining `value` (or, with
    /// `open_contact`, approaching it).
    pub witness: PiecewiseDistribution,
    /// `∫ f dF` under the witness.
    pub attained: f64,
    /// The witness sits on a jump whose upper limit is not attained by `f`.
    pub open_contact: bool,
    pub contacts: Vec<f64>,
}

/// Maximises `∫ f dF` over distributions `F` on the domain of `f` with mean `m`.
pub fn moment_optimum(f: &PiecewiseScalarFunction, m: f64) -> Result<MomentOptimum> {
    let (lo, hi) = f.domain();
    if !(m >= lo - KNOT_TOL && m <= hi + KNOT_TOL) {
        return Err(Error::NoContact(m));
    }
    let m = m.clamp(lo, hi);
    let env = upper_concave_envelope(f);
    let value = env.eval(m);

    let point = |x: f64| -> Result<MomentOptimum> {
        let attained = f.eval(x);
        Ok(MomentOptimum {
            value,
            witness: PiecewiseDistribution::point(x)?,
            attained,
            open_contact: value - attained > CONTACT_TOL,
            contacts: vec![x],
        })
    };

    if (f.eval(m) - value).abs() <= CONTACT_TOL {
        return point(m);
    }
    match env.locate(m) {
        Ok(k) => point(env.knots[k].x),
        Err(i) => {
            let (x0, x1) = (env.knots[i].x, env.knots[i + 1].x);
            let w0 = (x1 - m) / (x1 - x0);
            let attained = w0 * f.eval(x0) + (1.0 - w0) * f.eval(x1);
            if !attained.is_finite() {
                return Err(Error::NoContact(m));
            }
            Ok(MomentOptimum {
                value,
                witness: PiecewiseDistribution::new(vec![(x0, w0), (x1, 1.0 - w0)], vec![])?,
                attained,
                open_contact: value - attained > CONTACT_TOL,
                contacts: vec![x0, x1],
            })
        }
    }
}
