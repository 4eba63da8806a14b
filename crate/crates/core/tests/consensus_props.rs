//! Structural properties of the push-sum machinery on randomized digraphs:
//! stochasticity of the mixing matrices, conservation of weight mass,
//! agreement between the closed-form backward product and the explicit
//! factor-by-factor product, and the fitted mixing rate against an
//! eigenvalue oracle.

use approx::assert_abs_diff_eq;
use nalgebra::{DMatrix, DVector};
use ppsgda_core::consensus::{
    estimate_mixing, phi_product, q_matrix, verify_lemma1_limits, weight_vector, ConsensusError,
    PushSumState,
};
use ppsgda_core::graph::{DirectedGraph, PerronMatrix};
use ppsgda_core::ppsgda::{push_sum_mix, AgentState};
use proptest::prelude::*;

fn random_perron(n: usize, extra_edge_prob: f64, seed: u64) -> PerronMatrix {
    DirectedGraph::random_strongly_connected(n, extra_edge_prob, seed)
        .perron_matrix()
        .expect("generator output is strongly connected by construction")
}

/// `Q[t] ... Q[s]` built one factor at a time, the way the backward product
/// is defined rather than the way the library computes it.
fn phi_by_factors(p: &PerronMatrix, s: usize, t: usize) -> DMatrix<f64> {
    let mut y = weight_vector(p, s);
    let mut product = DMatrix::identity(p.n(), p.n());
    for _ in s..=t {
        let y_next = p.entries() * &y;
        let q = q_matrix(&y_next, &y, p).expect("weights evolve under the same matrix");
        product = q * product;
        y = y_next;
    }
    product
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn perron_matrix_is_column_stochastic_with_unit_sum_eigenvector(
        n in 2usize..=10,
        extra in 0.0f64..0.6,
        seed in any::<u64>(),
    ) {
        let p = random_perron(n, extra, seed);
        for j in 0..n {
            let col_sum: f64 = (0..n).map(|i| p.entries()[(i, j)]).sum();
            prop_assert!((col_sum - 1.0).abs() <= 1e-12);
            for i in 0..n {
                prop_assert!(p.entries()[(i, j)] >= 0.0);
            }
        }
        let w = p.perron_vector();
        prop_assert!(w.min() > 0.0);
        prop_assert!((w.sum() - 1.0).abs() <= 1e-12);
        let residual = (p.entries() * w - w).amax();
        prop_assert!(residual <= 1e-10);
    }

    #[test]
    fn q_factors_are_row_stochastic_and_mass_is_conserved(
        n in 2usize..=10,
        seed in any::<u64>(),
        rounds in 1usize..=60,
    ) {
        let p = random_perron(n, 0.3, seed);
        let mut y = DVector::from_element(n, 1.0);
        for _ in 0..rounds {
            let y_next = p.entries() * &y;
            let q = q_matrix(&y_next, &y, &p).unwrap();
            for i in 0..n {
                let row_sum: f64 = q.row(i).sum();
                prop_assert!((row_sum - 1.0).abs() <= 1e-12);
            }
            y = y_next;
            // Column stochasticity preserves total weight exactly in
            // expectation; allow roundoff accumulation.
            prop_assert!((y.sum() - n as f64).abs() <= 1e-10);
        }
    }

    #[test]
    fn closed_form_backward_product_matches_factor_product(
        n in 2usize..=8,
        seed in any::<u64>(),
        s in 0usize..=10,
        span in 0usize..=40,
    ) {
        let p = random_perron(n, 0.3, seed);
        let t = s + span;
        let direct = phi_by_factors(&p, s, t);
        let closed = phi_product(&p, s, t).unwrap();
        prop_assert!((direct - closed).amax() <= 1e-10);
    }
}

#[test]
fn mix_of_agent_states_follows_the_ratio_trajectory() {
    // Running the gossip step with each agent adopting its de-biased ratio
    // must reproduce the x/y ratio of the plain linear recursion.
    let p = random_perron(6, 0.4, 91);
    let x0 = DMatrix::from_fn(6, 3, |i, j| (i * 3 + j) as f64 - 4.5);
    let mut reference = PushSumState::new(x0.clone());
    let mut states: Vec<AgentState> = (0..6)
        .map(|i| AgentState {
            x: x0.row(i).transpose(),
            mu: DVector::zeros(0),
            y: 1.0,
        })
        .collect();
    for _ in 0..30 {
        reference = reference.step(&p);
        let mix = push_sum_mix(&states, &p);
        for (i, state) in states.iter_mut().enumerate() {
            state.x = mix.z[i].clone();
            state.y = mix.y_next[i];
            assert_abs_diff_eq!(state.y, reference.y()[i], epsilon = 1e-12);
            let reference_z = reference.z().row(i).transpose();
            assert!((state.x.clone() - reference_z).amax() <= 1e-12);
        }
    }
}

#[test]
fn backward_product_limits_hold_on_random_graphs() {
    for seed in [3u64, 14, 159, 2653] {
        let n = 3 + (seed as usize % 7);
        let p = random_perron(n, 0.35, seed);
        for s in [0usize, 5, 17] {
            let report = verify_lemma1_limits(&p, s, 500, 1e-8);
            assert!(
                report.pass,
                "limits missed on n={n} seed={seed} s={s}: deviation {}",
                report.max_deviation
            );
        }
    }
}

#[test]
fn fitted_mixing_rate_matches_ring_eigenvalues() {
    // Directed rings have |lambda_2| = cos(pi / n) exactly, which makes them
    // a sharp calibration target for the log-residual fit.
    for n in 3usize..=10 {
        let p = DirectedGraph::ring(n).perron_matrix().unwrap();
        let estimate = estimate_mixing(&p, 0, 600).unwrap();
        let expected = (std::f64::consts::PI / n as f64).cos();
        assert!(
            (estimate.lambda - expected).abs() <= 0.05,
            "ring n={n}: fitted {} vs exact {expected}",
            estimate.lambda
        );
        assert!(estimate.lambda > 0.0 && estimate.lambda < 1.0);
        assert!(estimate.r_squared >= 0.95, "ring n={n}: R^2 {}", estimate.r_squared);
    }
}

#[test]
fn fitted_mixing_rate_matches_second_eigenvalue_modulus() {
    for seed in [7u64, 21, 48, 77, 104] {
        let n = 3 + (seed as usize % 6);
        let p = random_perron(n, 0.3, seed);
        let estimate = estimate_mixing(&p, 0, 600).unwrap();
        let mut moduli: Vec<f64> = p
            .entries()
            .clone()
            .complex_eigenvalues()
            .iter()
            .map(|ev| ev.norm())
            .collect();
        moduli.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let second = moduli[1];
        assert!(
            (estimate.lambda - second).abs() <= 0.05,
            "n={n} seed={seed}: fitted {} vs |lambda_2| {second}",
            estimate.lambda
        );
        assert!(estimate.r_squared >= 0.95);
    }
}

#[test]
fn exactly_mixing_topology_reports_already_mixed() {
    // The complete digraph splits every agent's mass uniformly, so the
    // backward product is exact after a single round and there is no
    // geometric tail to fit.
    let p = DirectedGraph::complete(5).perron_matrix().unwrap();
    match estimate_mixing(&p, 0, 200) {
        Err(ConsensusError::AlreadyMixed) => {}
        other => panic!("expected AlreadyMixed, got {other:?}"),
    }
}
