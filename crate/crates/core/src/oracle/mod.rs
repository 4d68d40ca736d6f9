//! Brute-force certification on grids.
//!
//! Nature is restricted to effective outside options made of an atom `q_a` at a
//! reservation value `a` plus masses on grid points below `a`, subject to the
//! inducibility condition `q_a (1 - a) >= s`: the mass sent to `a` must be able
//! to produce search benefit `s` using outcomes in `[a, 1]`.

pub mod lp;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{sort_dedup, ModelParams, PiecewiseDistribution, Side, TIE_SNAP};
use crate::search::EffectiveOutsideOption;

pub use lp::{revised_simplex_solve, simplex_solve, LpError, LpSolution};

pub const DEFAULT_GRID: usize = 400;

/// Uniform grid on `domain` plus mandatory points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSpec {
    pub n_points: usize,
    pub domain: (f64, f64),
    pub includes: Vec<f64>,
}

impl GridSpec {
    pub fn new(n_points: usize, domain: (f64, f64)) -> Self {
        Self {
            n_points: n_points.max(10),
            domain,
            includes: Vec::new(),
        }
    }

    pub fn with(mut self, pts: impl IntoIterator<Item = f64>) -> Self {
        self.includes.extend(pts);
        self
    }

    /// `n_points + 1` equally spaced nodes (so halving the spacing nests the
    /// grids) and the mandatory points inside the domain.
    pub fn points(&self) -> Vec<f64> {
        let (lo, hi) = self.domain;
        let n = self.n_points;
        let mut pts: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
        pts.extend(
            self.includes
                .iter()
                .copied()
                .filter(|&x| x >= lo - 1e-12 && x <= hi + 1e-12)
                .map(|x| x.clamp(lo, hi)),
        );
        sort_dedup(&mut pts, 1e-13);
        pts
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleWitness {
    pub a: f64,
    pub q_a: f64,
    /// `(z, mass)` below `a`.
    pub below: Vec<(f64, f64)>,
}

impl OracleWitness {
    pub fn inducible(&self, s: f64) -> bool {
        self.q_a * (1.0 - self.a) >= s - 1e-9
    }

    pub fn to_effective(&self, params: &ModelParams) -> Result<EffectiveOutsideOption> {
        let mut atoms = self.below.clone();
        atoms.push((self.a, self.q_a));
        EffectiveOutsideOption::new(PiecewiseDistribution::new(atoms, vec![])?, params)
    }

    /// An outside-option distribution that induces this witness: the mass at
    /// `a` is moved to `a + s/q_a`, which keeps the mean and makes `a` the
    /// reservation value.
    pub fn inducing_distribution(&self, params: &ModelParams) -> Result<PiecewiseDistribution> {
        let mut atoms = self.below.clone();
        if self.q_a > 0.0 {
            atoms.push(((self.a + params.s / self.q_a).min(1.0), self.q_a));
        }
        PiecewiseDistribution::new(atoms, vec![])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub demand: f64,
    pub witness: OracleWitness,
    pub a_points: usize,
    pub z_points: usize,
}

/// Minimum of the probability of eventual purchase over nature's grid strategies.
pub fn nature_worst_case_oracle(
    p: f64,
    h: &PiecewiseDistribution,
    params: &ModelParams,
    n_points: usize,
) -> Result<OracleResult> {
    let d = params.effective_mean();
    let zmax = params.max_reservation();
    let s = params.s;
    let shifted: Vec<f64> = h.breakpoints().into_iter().map(|b| b - p).collect();
    let a_grid = GridSpec::new(n_points, (d, zmax))
        .with([d, zmax])
        .with(shifted.iter().copied())
        .points();
    let z_grid = GridSpec::new(n_points, (0.0, zmax))
        .with([0.0, d, zmax])
        .with(shifted.iter().copied())
        .points();
    // Purchase probability when the search turns up z < a.
    let buy_after: Vec<f64> = z_grid
        .iter()
        .map(|&z| 1.0 - h.cdf_snapped(p + z, Side::Right, 1e-12))
        .collect();

    let solved: Vec<Option<(f64, OracleWitness)>> = a_grid
        .par_iter()
        .map(|&a| solve_for_a(a, p, h, d, s, &z_grid, &buy_after))
        .collect();
    let mut best: Option<(f64, OracleWitness)> = None;
    for cand in solved.into_iter().flatten() {
        if best.as_ref().is_none_or(|b| cand.0 < b.0) {
            best = Some(cand);
        }
    }
    let (demand, witness) = best.ok_or(Error::Infeasible)?;
    Ok(OracleResult {
        demand: demand.clamp(0.0, 1.0),
        witness,
        a_points: a_grid.len(),
        z_points: z_grid.len(),
    })
}

fn solve_for_a(
    a: f64,
    p: f64,
    h: &PiecewiseDistribution,
    d: f64,
    s: f64,
    z_grid: &[f64],
    buy_after: &[f64],
) -> Option<(f64, OracleWitness)> {
    let below: Vec<usize> = (0..z_grid.len()).filter(|&i| z_grid[i] < a - 1e-12).collect();
    let buy_now = 1.0 - h.cdf_snapped(p + a, Side::Left, TIE_SNAP);
    // Variables: q_i for z_i < a, then q_a.
    let mut c: Vec<f64> = below.iter().map(|&i| buy_after[i]).collect();
    c.push(buy_now);
    let ones = vec![1.0; c.len()];
    let mut means: Vec<f64> = below.iter().map(|&i| z_grid[i]).collect();
    means.push(a);
    let mut induce = vec![0.0; c.len()];
    *induce.last_mut().unwrap() = 1.0 - a;
    let sol = simplex_solve(&c, &[ones, means], &[1.0, d], &[induce], &[s]).ok()?;
    let q_a = sol.x[sol.x.len() - 1];
    let below_mass: Vec<(f64, f64)> = below
        .iter()
        .zip(&sol.x)
        .filter(|(_, &q)| q > 1e-14)
        .map(|(&i, &q)| (z_grid[i], q))
        .collect();
    Some((sol.objective, OracleWitness { a, q_a, below: below_mass }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimaxResult {
    /// Seller's guaranteed purchase probability for the best grid policy.
    pub value: f64,
    /// Master-problem value against the generated nature strategies.
    pub upper: f64,
    pub iterations: usize,
    pub seller: PiecewiseDistribution,
}

/// Purchase probability of a buyer with posterior `w` against a grid strategy.
fn purchase_prob(w: f64, p: f64, nature: &OracleWitness) -> f64 {
    let net = w - p;
    let mut prob = if net >= nature.a - 1e-12 { nature.q_a } else { 0.0 };
    for &(z, q) in &nature.below {
        if net > z + 1e-12 {
            prob += q;
        }
    }
    prob
}

/// Value of the discretised game at price `p`, by constraint generation: a
/// master LP over seller posteriors against the nature strategies found so far,
/// and the grid oracle as nature's best response.
pub fn minimax_oracle(
    p: f64,
    params: &ModelParams,
    posterior_n: usize,
    adversary_n: usize,
) -> Result<MinimaxResult> {
    let mu = params.mu;
    let d = params.effective_mean();
    let zmax = params.max_reservation();
    let w_grid = GridSpec::new(posterior_n, (0.0, 1.0))
        .with([mu, p, (p + d).min(1.0), (p + zmax).min(1.0)])
        .points();
    let k = w_grid.len();
    let mut natures = vec![OracleWitness {
        a: d,
        q_a: 1.0,
        below: vec![],
    }];
    let mut best_value = f64::NEG_INFINITY;
    let mut best_seller = PiecewiseDistribution::point(mu)?;
    let mut upper = 1.0;
    for iter in 1..=200 {
        // Variables h_0..h_{k-1}, t. Minimise -t.
        let mut c = vec![0.0; k + 1];
        c[k] = -1.0;
        let mut ones = vec![1.0; k + 1];
        ones[k] = 0.0;
        let mut means: Vec<f64> = w_grid.clone();
        means.push(0.0);
        let a_ge: Vec<Vec<f64>> = natures
            .iter()
            .map(|n| {
                let mut row: Vec<f64> = w_grid.iter().map(|&w| purchase_prob(w, p, n)).collect();
                row.push(-1.0);
                row
            })
            .collect();
        let b_ge = vec![0.0; a_ge.len()];
        let sol = simplex_solve(&c, &[ones, means], &[1.0, mu], &a_ge, &b_ge)?;
        upper = sol.x[k];
        let atoms: Vec<(f64, f64)> = w_grid
            .iter()
            .zip(&sol.x[..k])
            .filter(|(_, &m)| m > 1e-13)
            .map(|(&w, &m)| (w, m))
            .collect();
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        let atoms = atoms.into_iter().map(|(w, m)| (w, m / total)).collect();
        let seller = PiecewiseDistribution::new(atoms, vec![])?;
        let resp = nature_worst_case_oracle(p, &seller, params, adversary_n)?;
        if resp.demand > best_value {
            best_value = resp.demand;
            best_seller = seller;
        }
        if upper - best_value <= 1e-9 {
            return Ok(MinimaxResult {
                value: best_value,
                upper,
                iterations: iter,
                seller: best_seller,
            });
        }
        if natures.contains(&resp.witness) {
            break;
        }
        natures.push(resp.witness);
    }
    Ok(MinimaxResult {
        value: best_value,
        upper,
        iterations: natures.len(),
        seller: best_seller,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_params;

    #[test]
    fn grid_nests_and_includes() {
        let g = GridSpec::new(10, (0.0, 1.0)).with([0.123]);
        let pts = g.points();
        assert_eq!(pts.len(), 12);
        assert!(pts.contains(&0.123));
        let fine = GridSpec::new(20, (0.0, 1.0)).points();
        for x in GridSpec::new(10, (0.0, 1.0)).points() {
            assert!(fine.iter().any(|&y| (y - x).abs() < 1e-15));
        }
    }

    #[test]
    fn affine_h() {
        let params = validate_params(0.6, 0.5, 0.2).unwrap();
        let p = 0.2;
        let h = PiecewiseDistribution::uniform(p, 1.0).unwrap();
        let r = nature_worst_case_oracle(p, &h, &params, 100).unwrap();
        let expected = 1.0 - h.cdf(p + 0.3, Side::Right);
        assert!((r.demand - expected).abs() < 1e-9);
        assert!(r.witness.inducible(params.s));
    }

    #[test]
    fn full_info_deterrence() {
        let params = validate_params(0.6, 0.5, 0.2).unwrap();
        let hb = PiecewiseDistribution::new(vec![(0.0, 0.4), (1.0, 0.6)], vec![]).unwrap();
        let r = nature_worst_case_oracle(0.4, &hb, &params, 100).unwrap();
        assert!((r.demand - 0.6).abs() < 1e-9);
    }

    #[test]
    fn witness_is_induced() {
        let params = validate_params(0.6, 0.5, 0.05).unwrap();
        let h = PiecewiseDistribution::uniform(0.2, 1.0).unwrap();
        let r = nature_worst_case_oracle(0.35, &h, &params, 50).unwrap();
        let g = r.witness.inducing_distribution(&params).unwrap();
        assert!((g.mean() - params.xi).abs() < 1e-9);
        let a = crate::search::reservation_value(&g, params.s).unwrap().a;
        assert!((a - r.witness.a).abs() < 1e-8, "{a} vs {}", r.witness.a);
    }
}
