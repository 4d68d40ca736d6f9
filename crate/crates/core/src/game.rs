//! The fixed-price zero-sum game between the seller (picks `H` with mean `mu`)
//! and nature (picks an effective outside option with mean `xi - s`).
//!
//! Both best responses reduce to concave envelopes. Nature maximises the
//! no-purchase probability `∫ H(p+z) dĜ(z)`; the seller maximises the purchase
//! probability `∫ G_p(w) dH(w)`.

use serde::Serialize;

use crate::closed_form::{optimal_info_for_price, FixedPriceRegime};
use crate::concavify::{moment_optimum, upper_concave_envelope, PiecewiseScalarFunction};
use crate::error::Result;
use crate::model::{ModelParams, PiecewiseDistribution, Side, TIE_SNAP};
use crate::search::EffectiveOutsideOption;

/// Prices within this of `s/xi` count as deterrence prices.
pub const DETERRENCE_TOL: f64 = 1e-12;
pub const SADDLE_TOL: f64 = 1e-8;

pub(crate) fn deters(p: f64, params: &ModelParams) -> bool {
    p <= params.deterrence_price() + DETERRENCE_TOL
}

/// Nature's objective `z ↦ H(p+z)` on `[0, 1 - s/xi]`.
///
/// At `z = 1 - s/xi` and `p <= s/xi` the left limit is used: an atom of `H` at
/// `p + 1 - s/xi` buys immediately whatever the outside option.
pub fn nature_objective(p: f64, h: &PiecewiseDistribution, params: &ModelParams) -> Result<PiecewiseScalarFunction> {
    let zmax = params.max_reservation();
    let mut f = PiecewiseScalarFunction::from_cdf(h, -p, 0.0, zmax, Side::Right)?;
    if deters(p, params) {
        let last = f.knots_mut().last_mut().expect("two knots");
        last.value = h.cdf_snapped(p + zmax, Side::Left, TIE_SNAP);
        last.right = last.value;
        if last.left < last.value {
            last.left = last.value;
        }
    }
    Ok(f)
}

/// Seller's objective `w ↦ G_p(w)`: the probability that a buyer with posterior
/// `w` ends up buying when the effective outside option is `ĝ`.
pub fn seller_objective(p: f64, ghat: &EffectiveOutsideOption, params: &ModelParams) -> Result<PiecewiseScalarFunction> {
    let mut f = PiecewiseScalarFunction::from_cdf(&ghat.dist, p, 0.0, 1.0, Side::Left)?;
    if deters(p, params) {
        let zmax = params.max_reservation();
        let top = ghat.dist.atom_mass_at(zmax);
        if top > 0.0 {
            let x_top = p + zmax;
            for k in f.knots_mut() {
                if (k.x - x_top).abs() <= TIE_SNAP {
                    k.value = ghat.dist.cdf_snapped(k.x - p, Side::Right, TIE_SNAP);
                    k.right = k.right.max(k.value);
                }
            }
        }
    }
    Ok(f)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NatureResponse {
    /// Highest attainable no-purchase probability.
    pub value: f64,
    /// `1 - value`: the seller's worst-case demand.
    pub demand: f64,
    pub witness: EffectiveOutsideOption,
    pub open_contact: bool,
    pub contacts: Vec<f64>,
}

pub fn nature_best_response(p: f64, h: &PiecewiseDistribution, params: &ModelParams) -> Result<NatureResponse> {
    let f = nature_objective(p, h, params)?;
    let opt = moment_optimum(&f, params.effective_mean())?;
    Ok(NatureResponse {
        value: opt.value,
        demand: (1.0 - opt.value).clamp(0.0, 1.0),
        witness: EffectiveOutsideOption { dist: opt.witness },
        open_contact: opt.open_contact,
        contacts: opt.contacts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SellerResponse {
    /// Supremum of the purchase probability over `H` with mean `mu`.
    pub value: f64,
    pub witness: PiecewiseDistribution,
    pub open_contact: bool,
}

pub fn seller_best_response(gp: &PiecewiseScalarFunction, mu: f64) -> Result<SellerResponse> {
    let opt = moment_optimum(gp, mu)?;
    Ok(SellerResponse {
        value: opt.value,
        witness: opt.witness,
        open_contact: opt.open_contact,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SaddleReport {
    /// Nature's best value against `H`.
    pub nature_value: f64,
    /// `∫ H(p+z) dĜ` for the candidate `Ĝ`.
    pub nature_payoff: f64,
    /// Seller's best value against `Ĝ`.
    pub seller_value: f64,
    /// `∫ G_p dH` for the candidate `H`.
    pub seller_payoff: f64,
    pub residual_nature: f64,
    pub residual_seller: f64,
    /// `|1 - nature_payoff - seller_payoff|`; both sides count the same purchases.
    pub payoff_mismatch: f64,
    pub pass: bool,
}

impl SaddleReport {
    pub fn max_residual(&self) -> f64 {
        self.residual_nature.max(self.residual_seller).max(self.payoff_mismatch)
    }
}

/// Checks that `(H, Ĝ)` are mutual best responses at price `p`.
pub fn saddle_check(
    p: f64,
    h: &PiecewiseDistribution,
    ghat: &EffectiveOutsideOption,
    params: &ModelParams,
    tol: f64,
) -> Result<SaddleReport> {
    let f = nature_objective(p, h, params)?;
    let nature_value = upper_concave_envelope(&f).eval(params.effective_mean());
    let nature_payoff = f.integrate_against(&ghat.dist);
    let gp = seller_objective(p, ghat, params)?;
    let seller_value = upper_concave_envelope(&gp).eval(params.mu);
    let seller_payoff = gp.integrate_against(h);
    let residual_nature = (nature_value - nature_payoff).max(0.0);
    let residual_seller = (seller_value - seller_payoff).max(0.0);
    let payoff_mismatch = (1.0 - nature_payoff - seller_payoff).abs();
    let pass = residual_nature <= tol && residual_seller <= tol && payoff_mismatch <= tol;
    Ok(SaddleReport {
        nature_value,
        nature_payoff,
        seller_value,
        seller_payoff,
        residual_nature,
        residual_seller,
        payoff_mismatch,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GuaranteeReport {
    pub price: f64,
    /// Worst-case revenue.
    pub guarantee: f64,
    pub worst_case: EffectiveOutsideOption,
    /// Seller's best revenue against `worst_case`; equals `guarantee` at a saddle.
    pub seller_value: f64,
    pub regime: FixedPriceRegime,
    pub posterior: PiecewiseDistribution,
    pub contacts: Vec<f64>,
    pub open_contact: bool,
}

/// Worst-case revenue of the optimal fixed-price policy, by concavification.
pub fn fixed_price_guarantee_numeric(p: f64, params: &ModelParams) -> Result<GuaranteeReport> {
    let (h, regime) = optimal_info_for_price(p, params)?;
    guarantee_of(p, h, regime, params)
}

pub(crate) fn guarantee_of(
    p: f64,
    h: PiecewiseDistribution,
    regime: FixedPriceRegime,
    params: &ModelParams,
) -> Result<GuaranteeReport> {
    let nature = nature_best_response(p, &h, params)?;
    let gp = seller_objective(p, &nature.witness, params)?;
    let seller = upper_concave_envelope(&gp).eval(params.mu);
    Ok(GuaranteeReport {
        price: p,
        guarantee: p * nature.demand,
        worst_case: nature.witness,
        seller_value: p * seller,
        regime,
        posterior: h,
        contacts: nature.contacts,
        open_contact: nature.open_contact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_params;

    #[test]
    fn affine_h_worst_case() {
        let params = validate_params(0.6, 0.5, 0.2).unwrap();
        let p = 0.2;
        let h = PiecewiseDistribution::uniform(p, 1.0).unwrap();
        let r = nature_best_response(p, &h, &params).unwrap();
        let expected = 1.0 - h.cdf(p + 0.3, Side::Right);
        assert!((r.demand - expected).abs() < 1e-12);
    }

    #[test]
    fn full_info_at_deterrence_price() {
        let params = validate_params(0.6, 0.5, 0.2).unwrap();
        let hb = PiecewiseDistribution::new(vec![(0.0, 0.4), (1.0, 0.6)], vec![]).unwrap();
        let r = nature_best_response(0.4, &hb, &params).unwrap();
        assert!((r.demand - 0.6).abs() < 1e-12);
        // Above the deterrence price the atom no longer protects the seller.
        let r = nature_best_response(0.45, &hb, &params).unwrap();
        assert!(r.demand < 0.6 - 1e-3);
    }

    #[test]
    fn mixture_worst_case() {
        let params = validate_params(0.95, 0.3, 0.1).unwrap();
        let hu = PiecewiseDistribution::new(vec![(1.0, 0.85)], vec![(1.0 / 3.0, 1.0, 0.15)]).unwrap();
        let r = nature_best_response(1.0 / 3.0, &hu, &params).unwrap();
        assert!((r.demand - 0.955).abs() < 1e-12);
    }

    #[test]
    fn seller_examples() {
        let params = validate_params(0.6, 0.5, 0.2).unwrap();
        let p = 0.45;
        let ghat = EffectiveOutsideOption::new(PiecewiseDistribution::point(0.3).unwrap(), &params).unwrap();
        let gp = seller_objective(p, &ghat, &params).unwrap();
        let r = seller_best_response(&gp, 0.6).unwrap();
        assert!((r.value - (0.6_f64 / 0.75).min(1.0)).abs() < 1e-12);
        assert!(r.open_contact);
        let one = PiecewiseScalarFunction::from_points(&[(0.0, 1.0), (1.0, 1.0)]).unwrap();
        assert!((seller_best_response(&one, 0.3).unwrap().value - 1.0).abs() < 1e-15);
        let concave = PiecewiseScalarFunction::from_points(&[(0.0, 0.0), (0.5, 0.8), (1.0, 1.0)]).unwrap();
        let r = seller_best_response(&concave, 0.3).unwrap();
        assert_eq!(r.witness, PiecewiseDistribution::point(0.3).unwrap());
    }

    #[test]
    fn degenerate_policy_is_frustrated() {
        let params = validate_params(0.6, 0.5, 0.2).unwrap();
        let p = 0.45;
        let h = PiecewiseDistribution::point(0.6).unwrap();
        let ghat = EffectiveOutsideOption::new(PiecewiseDistribution::point(0.3).unwrap(), &params).unwrap();
        let r = saddle_check(p, &h, &ghat, &params, SADDLE_TOL).unwrap();
        assert!(!r.pass);
        // Nature is content with the point mass; the seller would rather spread.
        assert!(r.residual_nature < 1e-12);
        assert!((r.residual_seller - 0.8).abs() < 1e-12);
    }
}
