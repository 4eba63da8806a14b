//! Randomized validation of the centralized dispatch solver: KKT residuals,
//! optimality against sampled feasible competitors, strong duality, and
//! monotonicity of the balance multiplier in demand.

use nalgebra::DVector;
use ppsgda_core::dispatch::{kkt_residuals, solve_centralized, DispatchInstance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_instance(rng: &mut ChaCha8Rng) -> DispatchInstance {
    let n = rng.gen_range(1..=10);
    let a: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..2.0)).collect();
    let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
    let c: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..20.0)).collect();
    let p_min: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..5.0)).collect();
    let p_max: Vec<f64> = p_min
        .iter()
        .map(|&lo| lo + rng.gen_range(1.0..50.0))
        .collect();
    let lo_total: f64 = p_min.iter().sum();
    let hi_total: f64 = p_max.iter().sum();
    let demand = lo_total + rng.gen_range(0.05..0.95) * (hi_total - lo_total);
    DispatchInstance::new(a, b, c, demand, p_min, p_max).unwrap()
}

/// A point of `{p_min <= q <= p_max, sum(q) = demand}`: draw uniformly in
/// the box, then shift every coordinate by a common offset (clamped back to
/// the box) chosen by bisection so the total meets the demand. The clamped
/// total is continuous and nondecreasing in the offset, so the bisection
/// always lands.
fn random_feasible_point(inst: &DispatchInstance, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let n = inst.n();
    let draw: Vec<f64> = (0..n)
        .map(|i| rng.gen_range(inst.p_min()[i]..=inst.p_max()[i]))
        .collect();
    let total_at = |shift: f64| -> f64 {
        (0..n)
            .map(|i| (draw[i] + shift).clamp(inst.p_min()[i], inst.p_max()[i]))
            .sum()
    };
    let spread = inst.p_max().iter().sum::<f64>() - inst.p_min().iter().sum::<f64>();
    let (mut lo, mut hi) = (-spread - 1.0, spread + 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if total_at(mid) < inst.demand() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    DVector::from_iterator(
        n,
        (0..n).map(|i| (draw[i] + hi).clamp(inst.p_min()[i], inst.p_max()[i])),
    )
}

#[test]
fn solver_meets_kkt_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    for round in 0..300 {
        let inst = random_instance(&mut rng);
        let opt = solve_centralized(&inst);
        let res = kkt_residuals(&inst, &opt.p_star, opt.lambda_star, &opt.mu_star);
        assert!(
            res.max_residual() <= 1e-10,
            "round {round}: residuals {res:?}"
        );
    }
}

#[test]
fn no_sampled_feasible_point_beats_the_solver() {
    let mut rng = ChaCha8Rng::seed_from_u64(2002);
    for _ in 0..60 {
        let inst = random_instance(&mut rng);
        let opt = solve_centralized(&inst);
        let slack = 1e-9 * (1.0 + opt.objective.abs());
        for _ in 0..200 {
            let q = random_feasible_point(&inst, &mut rng);
            assert!((q.sum() - inst.demand()).abs() <= 1e-6 * (1.0 + inst.demand()));
            for i in 0..inst.n() {
                assert!(q[i] >= inst.p_min()[i] - 1e-12);
                assert!(q[i] <= inst.p_max()[i] + 1e-12);
            }
            assert!(
                inst.objective(&q) >= opt.objective - slack,
                "sampled point with objective {} beat {}",
                inst.objective(&q),
                opt.objective
            );
        }
    }
}

#[test]
fn dual_value_at_the_reported_multipliers_matches_the_optimum() {
    // The dual of a strictly convex quadratic over box-plus-balance
    // constraints has zero gap, and the inner minimization is available in
    // closed form; evaluating it at the reported multipliers is an
    // independent consistency check on lambda and mu jointly.
    let mut rng = ChaCha8Rng::seed_from_u64(3003);
    for _ in 0..200 {
        let inst = random_instance(&mut rng);
        let opt = solve_centralized(&inst);
        let mut dual_value = opt.lambda_star * inst.demand();
        for i in 0..inst.n() {
            let beta = inst.b()[i] - opt.lambda_star - opt.mu_star[i].lower
                + opt.mu_star[i].upper;
            dual_value += inst.c()[i] - beta * beta / (4.0 * inst.a()[i]);
            dual_value += opt.mu_star[i].lower * inst.p_min()[i]
                - opt.mu_star[i].upper * inst.p_max()[i];
        }
        assert!(
            (dual_value - opt.objective).abs() <= 1e-9 * (1.0 + opt.objective.abs()),
            "duality gap {} on {inst:?}",
            dual_value - opt.objective
        );
    }
}

#[test]
fn balance_multiplier_is_monotone_in_demand() {
    let mut rng = ChaCha8Rng::seed_from_u64(4004);
    for _ in 0..100 {
        let inst = random_instance(&mut rng);
        let lo_total: f64 = inst.p_min().iter().sum();
        let hi_total: f64 = inst.p_max().iter().sum();
        let d1 = lo_total + 0.25 * (hi_total - lo_total);
        let d2 = lo_total + 0.75 * (hi_total - lo_total);
        let make = |d: f64| {
            DispatchInstance::new(
                inst.a().to_vec(),
                inst.b().to_vec(),
                inst.c().to_vec(),
                d,
                inst.p_min().to_vec(),
                inst.p_max().to_vec(),
            )
            .unwrap()
        };
        let opt1 = solve_centralized(&make(d1));
        let opt2 = solve_centralized(&make(d2));
        assert!(
            opt1.lambda_star <= opt2.lambda_star + 1e-9,
            "lambda decreased when demand rose: {} -> {}",
            opt1.lambda_star,
            opt2.lambda_star
        );
        // The optimal value is convex in demand with the balance multiplier
        // as its derivative, so each optimum's supporting line lies below
        // the other optimum's value.
        let slack = 1e-9 * (1.0 + opt1.objective.abs() + opt2.objective.abs());
        assert!(opt2.objective >= opt1.objective + opt1.lambda_star * (d2 - d1) - slack);
        assert!(opt1.objective >= opt2.objective + opt2.lambda_star * (d1 - d2) - slack);
    }
}

#[test]
fn saturated_demand_extremes_still_satisfy_kkt() {
    let mut rng = ChaCha8Rng::seed_from_u64(5005);
    for _ in 0..50 {
        let template = random_instance(&mut rng);
        for demand in [
            template.p_min().iter().sum::<f64>(),
            template.p_max().iter().sum::<f64>(),
        ] {
            let inst = DispatchInstance::new(
                template.a().to_vec(),
                template.b().to_vec(),
                template.c().to_vec(),
                demand,
                template.p_min().to_vec(),
                template.p_max().to_vec(),
            )
            .unwrap();
            let opt = solve_centralized(&inst);
            let res = kkt_residuals(&inst, &opt.p_star, opt.lambda_star, &opt.mu_star);
            assert!(
                res.max_residual() <= 1e-10,
                "saturated instance residuals {res:?}"
            );
        }
    }
}
