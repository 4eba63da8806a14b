//! Self-contained property checks behind the `verify` subcommand: mixing
//! limits and rates on randomized digraphs, projection-oracle agreement,
//! and finite-difference gradient validation on the built-in fixture.

use nalgebra::DVector;
use ppsgda_core::consensus::{estimate_mixing, q_matrix, verify_lemma1_limits};
use ppsgda_core::dispatch::{fig1_fixture, DEFAULT_MU_UPPER};
use ppsgda_core::graph::DirectedGraph;
use ppsgda_core::projections::{qp_oracle_project, ConvexSet, ScaledSimplex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One named check with a human-readable outcome.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &'static str, pass: bool, detail: String) -> Self {
        CheckOutcome { name, pass, detail }
    }
}

/// Runs every check with its default parameters.
pub fn run_all_checks() -> Vec<CheckOutcome> {
    vec![
        check_backward_product_limits(12, 400, 1e-8),
        check_mixing_rates(600),
        check_projection_equivalence(1000, 1e-9, 42),
        check_gradients(100, 1e-6, 43),
    ]
}

/// Row-stochasticity of the reweighted mixing factors and convergence of
/// their backward products on randomized strongly connected digraphs.
pub fn check_backward_product_limits(graphs: usize, t_max: usize, tol: f64) -> CheckOutcome {
    let mut worst: f64 = 0.0;
    let mut failures = 0usize;
    for seed in 0..graphs as u64 {
        let n = 2 + (seed as usize) % 9;
        let graph = DirectedGraph::random_strongly_connected(n, 0.3, seed);
        let p = graph.perron_matrix().expect("generated graph is connected");
        // Row sums of the reweighted factors.
        let mut y = DVector::from_element(n, 1.0);
        for _ in 0..200 {
            let y_next = p.entries() * &y;
            let q = q_matrix(&y_next, &y, &p).expect("weights follow the same matrix");
            for i in 0..n {
                let dev = (q.row(i).sum() - 1.0).abs();
                if dev > 1e-12 {
                    failures += 1;
                }
            }
            y = y_next;
        }
        for s in [0usize, 5, 17] {
            let report = verify_lemma1_limits(&p, s, t_max, tol);
            worst = worst.max(report.max_deviation);
            if !report.pass {
                failures += 1;
            }
        }
    }
    CheckOutcome::new(
        "backward-product limits",
        failures == 0,
        format!("{graphs} graphs, worst deviation {worst:.2e} (tol {tol:.0e})"),
    )
}

/// Geometric decay of the mixing residual, fitted and compared against the
/// second-largest eigenvalue modulus. Two-vertex digraphs are excluded:
/// the only strongly connected one mixes exactly in a single round, so
/// there is no tail to fit.
pub fn check_mixing_rates(t_max: usize) -> CheckOutcome {
    let mut worst_gap: f64 = 0.0;
    let mut worst_r2: f64 = 1.0;
    let mut failures = 0usize;
    let mut graphs = Vec::new();
    for n in 3..=8 {
        graphs.push(DirectedGraph::ring(n));
    }
    for seed in 0..8u64 {
        let n = 3 + (seed as usize) % 6;
        graphs.push(DirectedGraph::random_strongly_connected(n, 0.3, seed));
    }
    for graph in &graphs {
        let p = graph.perron_matrix().expect("all test graphs are connected");
        let estimate = match estimate_mixing(&p, 0, t_max) {
            Ok(est) => est,
            Err(_) => {
                failures += 1;
                continue;
            }
        };
        if !(estimate.lambda > 0.0 && estimate.lambda < 1.0) {
            failures += 1;
        }
        worst_r2 = worst_r2.min(estimate.r_squared);
        if estimate.r_squared < 0.95 {
            failures += 1;
        }
        let mut moduli: Vec<f64> = p
            .entries()
            .clone()
            .complex_eigenvalues()
            .iter()
            .map(|ev| ev.norm())
            .collect();
        moduli.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let gap = (estimate.lambda - moduli[1]).abs();
        worst_gap = worst_gap.max(gap);
        if gap > 0.05 {
            failures += 1;
        }
    }
    CheckOutcome::new(
        "mixing-rate fit",
        failures == 0,
        format!(
            "{} graphs, worst |fit - eigen| {worst_gap:.3}, worst R^2 {worst_r2:.4}",
            graphs.len()
        ),
    )
}

/// Agreement of the sort-and-threshold simplex projection with the
/// exhaustive active-set solver, plus non-expansiveness.
pub fn check_projection_equivalence(cases: usize, tol: f64, seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut failures = 0usize;
    for _ in 0..cases {
        let dim = rng.gen_range(1..=6);
        let level = rng.gen_range(0.0..40.0);
        let set = ScaledSimplex::new(dim, level).expect("parameters are in range");
        let u = DVector::from_fn(dim, |_, _| rng.gen_range(-50.0..50.0));
        let fast = set.project(&u);
        let oracle = qp_oracle_project(&u, &set).expect("dimension is within oracle range");
        let dev = (fast - oracle).amax();
        worst = worst.max(dev);
        if dev > tol {
            failures += 1;
        }
        let v = DVector::from_fn(dim, |_, _| rng.gen_range(-50.0..50.0));
        let expansion =
            (set.project(&u) - set.project(&v)).norm() - (&u - &v).norm();
        if expansion > 1e-12 {
            failures += 1;
        }
    }
    CheckOutcome::new(
        "projection oracle equivalence",
        failures == 0,
        format!("{cases} cases, worst deviation {worst:.2e} (tol {tol:.0e})"),
    )
}

/// Central finite differences of every fixture agent's Lagrangian against
/// the analytic gradients, in both the decision and multiplier variables.
pub fn check_gradients(points_per_problem: usize, tol: f64, seed: u64) -> CheckOutcome {
    let (inst, _, _) = fig1_fixture();
    let problems = inst.local_problems(DEFAULT_MU_UPPER);
    let x_set = inst.global_set();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut failures = 0usize;
    for problem in &problems {
        for _ in 0..points_per_problem {
            let x = x_set.sample(&mut rng);
            let mu = problem.dual_box().sample(&mut rng);
            let grad_x = problem.grad_x_lagrangian(&x, &mu).expect("dimensions match");
            let fd_x = DVector::from_fn(x.len(), |k, _| {
                let h = 1e-4 * (1.0 + x[k].abs());
                let mut hi = x.clone();
                hi[k] += h;
                let mut lo = x.clone();
                lo[k] -= h;
                let up = problem.lagrangian(&hi, &mu).unwrap();
                let down = problem.lagrangian(&lo, &mu).unwrap();
                (up - down) / (2.0 * h)
            });
            let rel_x = (fd_x - &grad_x).norm() / grad_x.norm().max(1.0);
            let grad_mu = problem.grad_mu_lagrangian(&x);
            let fd_mu = DVector::from_fn(mu.len(), |j, _| {
                let h = 1e-4 * (1.0 + mu[j].abs());
                let mut hi = mu.clone();
                hi[j] += h;
                let mut lo = mu.clone();
                lo[j] -= h;
                let up = problem.lagrangian(&x, &hi).unwrap();
                let down = problem.lagrangian(&x, &lo).unwrap();
                (up - down) / (2.0 * h)
            });
            let rel_mu = (fd_mu - &grad_mu).norm() / grad_mu.norm().max(1.0);
            let rel = rel_x.max(rel_mu);
            worst = worst.max(rel);
            if rel > tol {
                failures += 1;
            }
        }
    }
    CheckOutcome::new(
        "finite-difference gradients",
        failures == 0,
        format!(
            "{} problems x {points_per_problem} points, worst relative error {worst:.2e} (tol {tol:.0e})",
            problems.len()
        ),
    )
}
