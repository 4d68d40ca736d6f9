use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use robustsell::closed_form::{fixed_price_guarantee_formula, robust_strategy, saddle_adversary};
use robustsell::concavify::{moment_optimum, upper_concave_envelope, Knot, PiecewiseScalarFunction};
use robustsell::game::{fixed_price_guarantee_numeric, nature_best_response, nature_objective, seller_objective};
use robustsell::model::{mps_compare, random_with_mean, validate_params, ModelParams, MpsOrdering, PiecewiseDistribution, Side};
use robustsell::oracle::{nature_worst_case_oracle, revised_simplex_solve, simplex_solve};
use robustsell::search::{demand_and_revenue, reservation_value, search_benefit, EffectiveOutsideOption};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

prop_compose! {
    fn model_params()(mu in 0.02..0.98f64, xi in 0.05..0.95f64, frac in 0.0..0.95f64) -> ModelParams {
        validate_params(mu, xi, frac * xi).unwrap()
    }
}

/// A random function on `[0, 1]` with jumps in both directions.
fn random_function(seed: u64) -> PiecewiseScalarFunction {
    let mut r = rng(seed);
    let n = r.gen_range(2..8);
    let mut xs: Vec<f64> = (0..n).map(|_| r.gen::<f64>()).collect();
    xs.push(0.0);
    xs.push(1.0);
    xs.sort_by(|a, b| a.total_cmp(b));
    xs.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
    let knots = xs
        .iter()
        .map(|&x| {
            let v: f64 = r.gen();
            let jump = r.gen_bool(0.4);
            let l = if jump { r.gen() } else { v };
            let rt = if jump { r.gen() } else { v };
            Knot { x, left: l, value: v, right: rt }
        })
        .collect();
    PiecewiseScalarFunction::new(knots).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn canonical_is_idempotent_and_mean_exact(seed in any::<u64>(), mean in 0.01..0.99f64) {
        let d = random_with_mean(&mut rng(seed), mean).unwrap();
        prop_assert!((d.mean() - mean).abs() < 1e-12);
        let c = d.canonical().unwrap();
        prop_assert_eq!(c.canonical().unwrap(), c.clone());
        prop_assert_eq!(PiecewiseDistribution::from_json(&c.to_json()).unwrap(), c);
    }

    #[test]
    fn cdf_is_monotone_and_complete(seed in any::<u64>()) {
        let d = random_with_mean(&mut rng(seed), 0.4).unwrap();
        let mut prev = 0.0;
        for i in 0..=200 {
            let w = i as f64 / 200.0;
            let right = d.cdf(w, Side::Right);
            prop_assert!(right >= prev - 1e-15);
            prop_assert!(d.cdf(w, Side::Left) <= right + 1e-15);
            prev = right;
        }
        prop_assert!((d.cdf(1.0, Side::Right) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mps_is_a_partial_order(s1 in any::<u64>(), s2 in any::<u64>(), s3 in any::<u64>()) {
        let mu = 0.45;
        let ds: Vec<_> = [s1, s2, s3].iter().map(|&s| random_with_mean(&mut rng(s), mu).unwrap()).collect();
        let full = PiecewiseDistribution::new(vec![(0.0, 1.0 - mu), (1.0, mu)], vec![]).unwrap();
        let point = PiecewiseDistribution::point(mu).unwrap();
        for d in &ds {
            prop_assert_eq!(mps_compare(d, d).unwrap(), MpsOrdering::Equal);
            prop_assert!(matches!(mps_compare(d, &full).unwrap(), MpsOrdering::SecondSpreadsFirst | MpsOrdering::Equal));
            prop_assert!(matches!(mps_compare(&point, d).unwrap(), MpsOrdering::SecondSpreadsFirst | MpsOrdering::Equal));
        }
        let spreads = |a: &PiecewiseDistribution, b: &PiecewiseDistribution| {
            matches!(mps_compare(a, b).unwrap(), MpsOrdering::SecondSpreadsFirst | MpsOrdering::Equal)
        };
        for a in &ds {
            for b in &ds {
                if spreads(a, b) && spreads(b, a) {
                    prop_assert_eq!(mps_compare(a, b).unwrap(), MpsOrdering::Equal);
                }
                for c in &ds {
                    if spreads(a, b) && spreads(b, c) {
                        prop_assert!(spreads(a, c));
                    }
                }
            }
        }
    }

    #[test]
    fn reservation_value_solves_indifference(seed in any::<u64>(), xi in 0.1..0.9f64, frac in 0.0..0.95f64) {
        let g = random_with_mean(&mut rng(seed), xi).unwrap();
        let s = frac * xi;
        let a = reservation_value(&g, s).unwrap().a;
        prop_assert!(a >= xi - s - 1e-12 && a <= 1.0 - s / xi + 1e-12);
        prop_assert!(search_benefit(&g, a) <= s + 1e-9);
        prop_assert!(search_benefit(&g, a - 1e-7) >= s - 1e-9);
        // Convex and nonincreasing.
        for i in 1..50 {
            let t = i as f64 / 50.0;
            let h = 0.01;
            let (lo, mid, hi) = (search_benefit(&g, t - h), search_benefit(&g, t), search_benefit(&g, t + h));
            prop_assert!(hi <= mid + 1e-12 && mid <= lo + 1e-12);
            prop_assert!(lo + hi - 2.0 * mid >= -1e-12);
        }
    }

    #[test]
    fn affine_posteriors_hedge_every_outside_option(seed in any::<u64>(), params in model_params()) {
        // Above the price, H = U[p, 1] with the rest at 0; every G gives the same demand.
        let p = 0.2;
        let m = 2.0 * params.mu / (1.0 + p);
        prop_assume!(m < 1.0);
        let h = PiecewiseDistribution::new(vec![(0.0, 1.0 - m)], vec![(p, 1.0, m)]).unwrap();
        let expected = 1.0 - h.cdf(p + params.effective_mean(), Side::Right);
        let mut r = rng(seed);
        for _ in 0..10 {
            let g = random_with_mean(&mut r, params.xi).unwrap();
            let a = reservation_value(&g, params.s).unwrap().a;
            prop_assume!(p + a <= 1.0);
            let (demand, _) = demand_and_revenue(p, &h, &g, params.s).unwrap();
            prop_assert!((demand - expected).abs() < 1e-9, "{} vs {}", demand, expected);
        }
    }

    #[test]
    fn top_atom_always_buys_at_deterrence_prices(seed in any::<u64>(), params in model_params(), q in 0.05..0.95f64) {
        let p = params.deterrence_price() * 0.9;
        let top = p + params.max_reservation();
        prop_assume!(top <= 1.0 && q * top <= params.mu && (params.mu - q * top) / (1.0 - q) <= 1.0);
        let rest = (params.mu - q * top) / (1.0 - q);
        let h = PiecewiseDistribution::new(vec![(top, q), (rest, 1.0 - q)], vec![]).unwrap();
        let mut r = rng(seed);
        for _ in 0..10 {
            let g = random_with_mean(&mut r, params.xi).unwrap();
            let (demand, _) = demand_and_revenue(p, &h, &g, params.s).unwrap();
            prop_assert!(demand >= q - 1e-12);
        }
    }

    #[test]
    fn envelope_dominates_and_is_concave(seed in any::<u64>(), m in 0.0..1.0f64) {
        let f = random_function(seed);
        let e = upper_concave_envelope(&f);
        let ee = upper_concave_envelope(&e);
        for i in 0..=200 {
            let x = i as f64 / 200.0;
            prop_assert!(e.eval(x) >= f.usc(x) - 1e-12);
            prop_assert!((ee.eval(x) - e.eval(x)).abs() < 1e-12);
            if i > 0 && i < 200 {
                let h = 1.0 / 200.0;
                prop_assert!(e.eval(x - h) + e.eval(x + h) - 2.0 * e.eval(x) <= 1e-12);
            }
        }
        let opt = moment_optimum(&f, m).unwrap();
        prop_assert!((opt.witness.mean() - m).abs() < 1e-9);
        prop_assert!((opt.value - e.eval(m)).abs() < 1e-12);
        // No two-point distribution with mean m does better.
        let mut r = rng(seed ^ 1);
        for _ in 0..1000 {
            let lo = r.gen::<f64>() * m;
            let hi = m + r.gen::<f64>() * (1.0 - m);
            if hi - lo < 1e-9 {
                continue;
            }
            let w = (hi - m) / (hi - lo);
            prop_assert!(w * f.usc(lo) + (1.0 - w) * f.usc(hi) <= opt.value + 1e-12);
        }
    }

    #[test]
    fn envelope_is_monotone(seed in any::<u64>(), bump in 0.0..0.5f64) {
        let f = random_function(seed);
        let knots: Vec<Knot> = f
            .knots()
            .iter()
            .map(|k| Knot { x: k.x, left: k.left + bump, value: k.value + bump, right: k.right + bump })
            .collect();
        let g = PiecewiseScalarFunction::new(knots).unwrap();
        let (ef, eg) = (upper_concave_envelope(&f), upper_concave_envelope(&g));
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            prop_assert!(ef.eval(x) <= eg.eval(x) + 1e-12);
        }
    }

    #[test]
    fn payoffs_add_to_one(seed in any::<u64>(), params in model_params(), p in 0.01..0.99f64) {
        let mut r = rng(seed);
        let h = random_with_mean(&mut r, params.mu).unwrap();
        let zmax = params.max_reservation();
        let base = random_with_mean(&mut r, params.effective_mean() / zmax).unwrap();
        let atoms = base.atoms().iter().map(|&(l, q)| (l * zmax, q)).collect();
        let segs = base.segments().iter().map(|&(a, b, q)| (a * zmax, b * zmax, q)).collect();
        let ghat = EffectiveOutsideOption::new(PiecewiseDistribution::new(atoms, segs).unwrap(), &params).unwrap();
        let f = nature_objective(p, &h, &params).unwrap();
        let gp = seller_objective(p, &ghat, &params).unwrap();
        let total = f.integrate_against(&ghat.dist) + gp.integrate_against(&h);
        prop_assert!((total - 1.0).abs() < 1e-9, "{}", total);
    }

    #[test]
    fn weak_duality(seed in any::<u64>(), params in model_params()) {
        let (st, rep) = robust_strategy(&params).unwrap();
        prop_assert!((st.posterior.mean() - params.mu).abs() < 1e-12);
        prop_assert!(rep.seller_value >= rep.guarantee - 1e-9);
        let mut r = rng(seed);
        for _ in 0..50 {
            let g = random_with_mean(&mut r, params.xi).unwrap();
            let (_, revenue) = demand_and_revenue(st.price, &st.posterior, &g, params.s).unwrap();
            prop_assert!(revenue >= rep.guarantee - 1e-9, "{} < {}", revenue, rep.guarantee);
        }
        let adv = saddle_adversary(&params, st.kind).unwrap();
        prop_assert!((adv.dist.mean() - params.effective_mean()).abs() < 1e-12);
    }

    #[test]
    fn robust_guarantee_is_the_best_price(params in model_params()) {
        let (st, rep) = robust_strategy(&params).unwrap();
        let mut best = 0.0_f64;
        for i in 1..1000 {
            best = best.max(fixed_price_guarantee_formula(i as f64 / 1000.0, &params));
        }
        best = best.max(fixed_price_guarantee_formula(params.deterrence_price(), &params));
        prop_assert!(rep.guarantee >= best - 1e-9, "{} < {}", rep.guarantee, best);
        prop_assert!(rep.guarantee <= best + 2e-3, "{} vs grid best {}", rep.guarantee, best);
        prop_assert!((fixed_price_guarantee_formula(st.price, &params) - rep.guarantee).abs() < 1e-9);
        // Strictly better than revealing nothing.
        let no_info = (0..1000)
            .map(|i| {
                let p = i as f64 / 1000.0;
                let h = PiecewiseDistribution::point(params.mu).unwrap();
                p * nature_best_response(p, &h, &params).unwrap().demand
            })
            .fold(0.0, f64::max);
        prop_assert!(rep.guarantee > no_info);
    }

    #[test]
    fn optimal_policies_have_no_interior_atoms(params in model_params(), p in 0.01..0.99f64) {
        let h = fixed_price_guarantee_numeric(p, &params).unwrap().posterior;
        let top = p + params.max_reservation();
        for &(loc, _) in h.atoms() {
            if loc >= p && loc <= 1.0 && loc != params.mu {
                prop_assert!(p <= params.deterrence_price() + 1e-12, "atom at {} above p = {}", loc, p);
                prop_assert!((loc - top).abs() < 1e-9 || loc >= 1.0 - 1e-12, "atom at {}", loc);
            }
        }
    }

    #[test]
    fn lp_implementations_agree(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(2..12);
        let m_eq = r.gen_range(0..3);
        let m_ge = r.gen_range(0..4);
        let x0: Vec<f64> = (0..n).map(|_| r.gen::<f64>()).collect();
        let row = |r: &mut ChaCha8Rng| (0..n).map(|_| r.gen_range(-1.0..1.0)).collect::<Vec<f64>>();
        let a_eq: Vec<Vec<f64>> = (0..m_eq).map(|_| row(&mut r)).collect();
        let a_ge: Vec<Vec<f64>> = (0..m_ge).map(|_| row(&mut r)).collect();
        let dot = |a: &Vec<f64>| a.iter().zip(&x0).map(|(u, v)| u * v).sum::<f64>();
        let b_eq: Vec<f64> = a_eq.iter().map(dot).collect();
        let b_ge: Vec<f64> = a_ge.iter().map(|a| dot(a) - r.gen::<f64>()).collect();
        // Nonnegative costs keep the problem bounded.
        let c: Vec<f64> = (0..n).map(|_| r.gen::<f64>()).collect();
        let t = simplex_solve(&c, &a_eq, &b_eq, &a_ge, &b_ge).unwrap();
        let v = revised_simplex_solve(&c, &a_eq, &b_eq, &a_ge, &b_ge).unwrap();
        prop_assert!((t.objective - v.objective).abs() < 1e-8, "{} vs {}", t.objective, v.objective);
        prop_assert!(robustsell::oracle::lp::max_residual(&t.x, &a_eq, &b_eq, &a_ge, &b_ge) < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn oracle_bounds_and_refinement(seed in any::<u64>(), params in model_params(), p in 0.05..0.95f64) {
        let h = random_with_mean(&mut rng(seed), params.mu).unwrap();
        let exact = nature_best_response(p, &h, &params).unwrap().demand;
        let coarse = nature_worst_case_oracle(p, &h, &params, 40).unwrap();
        let fine = nature_worst_case_oracle(p, &h, &params, 80).unwrap();
        prop_assert!(coarse.demand >= exact - 1e-9, "{} < {}", coarse.demand, exact);
        prop_assert!(fine.demand <= coarse.demand + 1e-9);
        prop_assert!(coarse.witness.inducible(params.s));
        let g = coarse.witness.inducing_distribution(&params).unwrap();
        prop_assert!((g.mean() - params.xi).abs() < 1e-9);
    }
}
