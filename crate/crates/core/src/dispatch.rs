//! Economic dispatch: quadratic generation costs under a demand-balance
//! constraint and per-generator capacity limits.
//!
//! ```text
//! min sum_i a_i p_i^2 + b_i p_i + c_i
//! s.t. sum_i p_i = D,    p_min_i <= p_i <= p_max_i
//! ```
//!
//! Each generator becomes one agent: its private cost depends only on its
//! own coordinate, its two private constraints are the capacity limits, and
//! the demand balance is the shared coupling handled by the simplex
//! projection. [`solve_centralized`] is the ground-truth oracle: the
//! classical lambda iteration bisects the balance multiplier over the
//! clamped marginal-cost inversions `p_i(lambda) = clamp((lambda - b_i) /
//! (2 a_i))`, whose sum is nondecreasing in `lambda`.

use nalgebra::DVector;
use serde::Serialize;
use thiserror::Error;

use crate::graph::DirectedGraph;
use crate::problem::{GradientBounds, LocalProblem, Smooth, StepSizeSchedule};
use crate::projections::{BoxSet, ScaledSimplex};

/// Default upper bound for the dual multiplier boxes. Optimal multipliers
/// are bounded by the spread of marginal costs over the capacity box, which
/// realistic instances keep far below this.
pub const DEFAULT_MU_UPPER: f64 = 100.0;

/// Errors from dispatch instance validation.
#[derive(Debug, Error, PartialEq)]
pub enum DispatchError {
    /// Coefficient vectors disagree in length.
    #[error("{what} has length {got}, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    /// Some quadratic coefficient is not strictly positive.
    #[error("generator {index} has quadratic coefficient {value}; costs must be strongly convex")]
    NotStronglyConvex { index: usize, value: f64 },
    /// Some capacity interval is empty or negative.
    #[error("generator {index} has invalid limits [{lower}, {upper}]")]
    InvalidLimits {
        index: usize,
        lower: f64,
        upper: f64,
    },
    /// The demand cannot be met within the capacity limits.
    #[error("demand {demand} outside deliverable range [{min_total}, {max_total}]")]
    InfeasibleDemand {
        demand: f64,
        min_total: f64,
        max_total: f64,
    },
}

/// A validated dispatch instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispatchInstance {
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    demand: f64,
    p_min: Vec<f64>,
    p_max: Vec<f64>,
}

impl DispatchInstance {
    /// Validates and builds an instance. Requires equal-length coefficient
    /// vectors, `a_i > 0`, `0 <= p_min_i <= p_max_i`, and a demand inside
    /// the deliverable range `[sum p_min, sum p_max]`.
    pub fn new(
        a: Vec<f64>,
        b: Vec<f64>,
        c: Vec<f64>,
        demand: f64,
        p_min: Vec<f64>,
        p_max: Vec<f64>,
    ) -> Result<Self, DispatchError> {
        let n = a.len();
        assert!(n >= 1, "need at least one generator");
        for (what, len) in [
            ("linear coefficients b", b.len()),
            ("constant coefficients c", c.len()),
            ("lower limits p_min", p_min.len()),
            ("upper limits p_max", p_max.len()),
        ] {
            if len != n {
                return Err(DispatchError::LengthMismatch {
                    what,
                    expected: n,
                    got: len,
                });
            }
        }
        for i in 0..n {
            if !(a[i].is_finite() && a[i] > 0.0) {
                return Err(DispatchError::NotStronglyConvex {
                    index: i,
                    value: a[i],
                });
            }
            if !(p_min[i].is_finite() && p_max[i].is_finite())
                || p_min[i] < 0.0
                || p_min[i] > p_max[i]
            {
                return Err(DispatchError::InvalidLimits {
                    index: i,
                    lower: p_min[i],
                    upper: p_max[i],
                });
            }
            if !(b[i].is_finite() && c[i].is_finite()) {
                return Err(DispatchError::NotStronglyConvex {
                    index: i,
                    value: a[i],
                });
            }
        }
        let min_total: f64 = p_min.iter().sum();
        let max_total: f64 = p_max.iter().sum();
        if !demand.is_finite() || demand < min_total || demand > max_total {
            return Err(DispatchError::InfeasibleDemand {
                demand,
                min_total,
                max_total,
            });
        }
        Ok(Self {
            a,
            b,
            c,
            demand,
            p_min,
            p_max,
        })
    }

    /// Generator count.
    pub fn n(&self) -> usize {
        self.a.len()
    }

    /// Total demand `D`.
    pub fn demand(&self) -> f64 {
        self.demand
    }

    /// Quadratic coefficients.
    pub fn a(&self) -> &[f64] {
        &self.a
    }

    /// Linear coefficients.
    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// Constant coefficients.
    pub fn c(&self) -> &[f64] {
        &self.c
    }

    /// Lower capacity limits.
    pub fn p_min(&self) -> &[f64] {
        &self.p_min
    }

    /// Upper capacity limits.
    pub fn p_max(&self) -> &[f64] {
        &self.p_max
    }

    /// Total generation cost at `p`.
    pub fn objective(&self, p: &DVector<f64>) -> f64 {
        assert_eq!(p.len(), self.n(), "generation vector has wrong dimension");
        (0..self.n())
            .map(|i| self.a[i] * p[i] * p[i] + self.b[i] * p[i] + self.c[i])
            .sum()
    }

    /// One agent per generator: coordinate-local cost, the two capacity
    /// constraints `p_min_i - p_i <= 0` and `p_i - p_max_i <= 0`, and dual
    /// box `[0, mu_upper]^2`.
    pub fn local_problems(&self, mu_upper: f64) -> Vec<LocalProblem> {
        assert!(
            mu_upper.is_finite() && mu_upper > 0.0,
            "dual box upper bound must be positive"
        );
        let n = self.n();
        (0..n)
            .map(|i| {
                LocalProblem::new(
                    Box::new(GeneratorCost {
                        index: i,
                        a: self.a[i],
                        b: self.b[i],
                        c: self.c[i],
                        dim: n,
                    }),
                    vec![
                        Box::new(CapacityLimit {
                            index: i,
                            sign: -1.0,
                            offset: self.p_min[i],
                            dim: n,
                        }),
                        Box::new(CapacityLimit {
                            index: i,
                            sign: 1.0,
                            offset: -self.p_max[i],
                            dim: n,
                        }),
                    ],
                    BoxSet::nonnegative_cube(2, mu_upper).expect("positive bound checked above"),
                )
                .expect("dimensions are consistent by construction")
            })
            .collect()
    }

    /// The shared feasible set: generation vectors with nonnegative entries
    /// summing to the demand.
    pub fn global_set(&self) -> ScaledSimplex {
        ScaledSimplex::new(self.n(), self.demand).expect("validated demand is nonnegative")
    }

    /// Exact gradient bounds by corner enumeration.
    ///
    /// The primal Lagrangian gradient of agent `i` is the single-coordinate
    /// value `2 a_i p_i + b_i - mu_1 + mu_2`, affine in `(p_i, mu)`; over
    /// the simplex each coordinate ranges over `[0, D]`, so the supremum of
    /// the absolute value sits at a corner of `[0, D] x [0, mu_upper]^2`.
    /// The dual gradient norm `||(p_min_i - p_i, p_i - p_max_i)||` is convex
    /// in `p_i`, so its maximum is at `p_i ∈ {0, D}` as well.
    pub fn corner_gradient_bounds(&self, mu_upper: f64) -> GradientBounds {
        let d = self.demand;
        let mut l_x = 0.0f64;
        let mut l_mu = Vec::with_capacity(self.n());
        for i in 0..self.n() {
            for p in [0.0, d] {
                let marginal = 2.0 * self.a[i] * p + self.b[i];
                for mu1 in [0.0, mu_upper] {
                    for mu2 in [0.0, mu_upper] {
                        l_x = l_x.max((marginal - mu1 + mu2).abs());
                    }
                }
            }
            let at_zero = (self.p_min[i].powi(2) + self.p_max[i].powi(2)).sqrt();
            let at_demand = ((self.p_min[i] - d).powi(2) + (d - self.p_max[i]).powi(2)).sqrt();
            l_mu.push(at_zero.max(at_demand));
        }
        GradientBounds { l_x, l_mu }
    }
}

/// `a x_i^2 + b x_i + c` as a function of the full generation vector.
struct GeneratorCost {
    index: usize,
    a: f64,
    b: f64,
    c: f64,
    dim: usize,
}

impl Smooth for GeneratorCost {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        let p = x[self.index];
        self.a * p * p + self.b * p + self.c
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(self.dim);
        g[self.index] = 2.0 * self.a * x[self.index] + self.b;
        g
    }
}

/// `sign * x_i + offset`: covers both `p_min - p_i` and `p_i - p_max`.
struct CapacityLimit {
    index: usize,
    sign: f64,
    offset: f64,
    dim: usize,
}

impl Smooth for CapacityLimit {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        self.sign * x[self.index] + self.offset
    }

    fn gradient(&self, _x: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(self.dim);
        g[self.index] = self.sign;
        g
    }
}

/// Multipliers of one generator's capacity pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeneratorDuals {
    /// Multiplier of `p_min_i - p_i <= 0`.
    pub lower: f64,
    /// Multiplier of `p_i - p_max_i <= 0`.
    pub upper: f64,
}

/// Centralized ground truth: optimal generation, balance multiplier,
/// capacity multipliers, and optimal cost.
#[derive(Debug, Clone, PartialEq)]
pub struct DispatchOptimum {
    /// Optimal generation vector.
    pub p_star: DVector<f64>,
    /// Balance-constraint multiplier.
    pub lambda_star: f64,
    /// Per-generator capacity multipliers.
    pub mu_star: Vec<GeneratorDuals>,
    /// Optimal total cost.
    pub objective: f64,
}

impl DispatchOptimum {
    /// The multipliers as per-agent vectors `(lower, upper)`, the layout
    /// the saddle-point iteration uses.
    pub fn agent_duals(&self) -> Vec<DVector<f64>> {
        self.mu_star
            .iter()
            .map(|d| DVector::from_vec(vec![d.lower, d.upper]))
            .collect()
    }
}

/// Generation at a trial multiplier: marginal-cost inversion clamped to the
/// capacity box. Its sum is nondecreasing in `lambda`, which is what makes
/// the bisection in [`solve_centralized`] valid.
fn generation_at(inst: &DispatchInstance, lambda: f64) -> DVector<f64> {
    DVector::from_fn(inst.n(), |i, _| {
        ((lambda - inst.b[i]) / (2.0 * inst.a[i])).clamp(inst.p_min[i], inst.p_max[i])
    })
}

/// Lambda iteration: bisects the balance multiplier until the bracket
/// collapses to adjacent floats, then polishes it with one exact solve on
/// the interior (unclamped) generator set so the balance holds to machine
/// precision. Instance validation guarantees a solution exists.
pub fn solve_centralized(inst: &DispatchInstance) -> DispatchOptimum {
    let n = inst.n();
    let balance = |lambda: f64| generation_at(inst, lambda).sum();
    let mut lo = inst.b.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0;
    let mut hi = (0..n)
        .map(|i| 2.0 * inst.a[i] * inst.p_max[i] + inst.b[i])
        .fold(f64::NEG_INFINITY, f64::max)
        + 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if balance(mid) < inst.demand {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut lambda = hi;
    // Clamp pattern at the bisection solution: -1 at lower limit, +1 at
    // upper, 0 interior.
    let pattern = |lambda: f64| -> Vec<i8> {
        (0..n)
            .map(|i| {
                let raw = (lambda - inst.b[i]) / (2.0 * inst.a[i]);
                if raw <= inst.p_min[i] {
                    -1
                } else if raw >= inst.p_max[i] {
                    1
                } else {
                    0
                }
            })
            .collect()
    };
    let base_pattern = pattern(lambda);
    let interior_slope: f64 = (0..n)
        .filter(|&i| base_pattern[i] == 0)
        .map(|i| 1.0 / (2.0 * inst.a[i]))
        .sum();
    if interior_slope > 0.0 {
        let clamped_sum: f64 = (0..n)
            .filter(|&i| base_pattern[i] != 0)
            .map(|i| {
                if base_pattern[i] < 0 {
                    inst.p_min[i]
                } else {
                    inst.p_max[i]
                }
            })
            .sum();
        let offset_sum: f64 = (0..n)
            .filter(|&i| base_pattern[i] == 0)
            .map(|i| inst.b[i] / (2.0 * inst.a[i]))
            .sum();
        let polished = (inst.demand - clamped_sum + offset_sum) / interior_slope;
        if pattern(polished) == base_pattern {
            lambda = polished;
        }
    }
    let p_star = generation_at(inst, lambda);
    // Clamping returns the limit values bitwise, so exact comparisons pick
    // out the active constraints; complementary slackness is then exact.
    let mu_star: Vec<GeneratorDuals> = (0..n)
        .map(|i| {
            let marginal = 2.0 * inst.a[i] * p_star[i] + inst.b[i];
            GeneratorDuals {
                lower: if p_star[i] == inst.p_min[i] {
                    (marginal - lambda).max(0.0)
                } else {
                    0.0
                },
                upper: if p_star[i] == inst.p_max[i] {
                    (lambda - marginal).max(0.0)
                } else {
                    0.0
                },
            }
        })
        .collect();
    let objective = inst.objective(&p_star);
    DispatchOptimum {
        p_star,
        lambda_star: lambda,
        mu_star,
        objective,
    }
}

/// First-order optimality residuals of a candidate primal-dual point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KktResiduals {
    /// Max of `|2 a_i p_i + b_i - lambda - mu_lower_i + mu_upper_i|`.
    pub stationarity: f64,
    /// Max of balance violation and capacity violations.
    pub primal: f64,
    /// Max multiplier negativity.
    pub dual: f64,
    /// Max complementary-slackness product magnitude.
    pub complementarity: f64,
}

impl KktResiduals {
    /// Largest of the four residuals.
    pub fn max_residual(&self) -> f64 {
        self.stationarity
            .max(self.primal)
            .max(self.dual)
            .max(self.complementarity)
    }
}

/// Measures how far `(p, lambda, mu)` is from satisfying the optimality
/// system of the dispatch problem.
pub fn kkt_residuals(
    inst: &DispatchInstance,
    p: &DVector<f64>,
    lambda: f64,
    mu: &[GeneratorDuals],
) -> KktResiduals {
    let n = inst.n();
    assert_eq!(p.len(), n, "generation vector has wrong dimension");
    assert_eq!(mu.len(), n, "dual vector has wrong dimension");
    let mut stationarity = 0.0f64;
    let mut primal = (p.sum() - inst.demand).abs();
    let mut dual = 0.0f64;
    let mut complementarity = 0.0f64;
    for i in 0..n {
        let marginal = 2.0 * inst.a[i] * p[i] + inst.b[i];
        stationarity = stationarity.max((marginal - lambda - mu[i].lower + mu[i].upper).abs());
        primal = primal
            .max(inst.p_min[i] - p[i])
            .max(p[i] - inst.p_max[i]);
        dual = dual.max(-mu[i].lower).max(-mu[i].upper);
        complementarity = complementarity
            .max((mu[i].lower * (inst.p_min[i] - p[i])).abs())
            .max((mu[i].upper * (p[i] - inst.p_max[i])).abs());
    }
    KktResiduals {
        stationarity,
        primal: primal.max(0.0),
        dual: dual.max(0.0),
        complementarity,
    }
}

/// The repository's canonical four-generator benchmark: instance, a fixed
/// strongly connected digraph with non-uniform out-degrees, and the step
/// schedule `15 / (t + 1)^0.6`.
///
/// Coefficients are chosen so the optimum has three generators strictly
/// inside their limits and one — generator 3, a small steep must-run unit —
/// pinned at its upper limit of 12 with capacity multiplier 1. The negative
/// linear coefficients (below-zero bids) place the uncoupled cost minimum
/// exactly at the demanded total, so the balance multiplier is zero and
/// every local Lagrangian is stationary at the optimum; gradient steps then
/// die out at the saddle point instead of rattling the consensus at the
/// step-size scale. The binding unit's large quadratic coefficient keeps
/// the primal-dual oscillation on its capacity constraint damped at this
/// schedule's step sizes.
pub fn fig1_fixture() -> (DispatchInstance, DirectedGraph, StepSizeSchedule) {
    let instance = DispatchInstance::new(
        vec![0.03, 0.04, 0.5, 0.035],
        vec![-10.2, -12.8, -13.0, -11.06],
        vec![10.0, 8.0, 6.0, 12.0],
        500.0,
        vec![20.0, 20.0, 2.0, 20.0],
        vec![250.0, 250.0, 12.0, 250.0],
    )
    .expect("fixture coefficients are valid");
    let graph = DirectedGraph::new(4, &[(1, 2), (2, 3), (3, 4), (4, 1), (1, 3), (2, 4)])
        .expect("fixture edges are valid");
    let schedule = StepSizeSchedule::new(15.0, 0.60).expect("fixture schedule is valid");
    (instance, graph, schedule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn two_symmetric() -> DispatchInstance {
        DispatchInstance::new(
            vec![1.0, 1.0],
            vec![0.0, 0.0],
            vec![0.0, 0.0],
            2.0,
            vec![0.0, 0.0],
            vec![2.0, 2.0],
        )
        .unwrap()
    }

    #[test]
    fn validation_accepts_the_symmetric_pair() {
        let inst = two_symmetric();
        assert_eq!(inst.n(), 2);
        assert_eq!(inst.demand(), 2.0);
    }

    #[test]
    fn validation_rejects_undeliverable_demand() {
        let err = DispatchInstance::new(
            vec![1.0, 1.0],
            vec![0.0, 0.0],
            vec![0.0, 0.0],
            10.0,
            vec![0.0, 0.0],
            vec![2.0, 3.0],
        )
        .unwrap_err();
        assert_eq!(
            err,
            DispatchError::InfeasibleDemand {
                demand: 10.0,
                min_total: 0.0,
                max_total: 5.0
            }
        );
    }

    #[test]
    fn validation_rejects_non_convex_costs_and_bad_limits() {
        let err = DispatchInstance::new(
            vec![1.0, -1.0],
            vec![0.0, 0.0],
            vec![0.0, 0.0],
            1.0,
            vec![0.0, 0.0],
            vec![2.0, 2.0],
        )
        .unwrap_err();
        assert_eq!(
            err,
            DispatchError::NotStronglyConvex {
                index: 1,
                value: -1.0
            }
        );
        let err = DispatchInstance::new(
            vec![1.0],
            vec![0.0],
            vec![0.0],
            1.0,
            vec![2.0],
            vec![1.0],
        )
        .unwrap_err();
        assert!(matches!(err, DispatchError::InvalidLimits { index: 0, .. }));
        let err = DispatchInstance::new(
            vec![1.0],
            vec![0.0, 1.0],
            vec![0.0],
            1.0,
            vec![0.0],
            vec![2.0],
        )
        .unwrap_err();
        assert!(matches!(err, DispatchError::LengthMismatch { .. }));
    }

    #[test]
    fn symmetric_pair_splits_the_demand() {
        let opt = solve_centralized(&two_symmetric());
        assert_abs_diff_eq!(opt.p_star[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(opt.p_star[1], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(opt.lambda_star, 2.0, epsilon = 1e-11);
        for d in &opt.mu_star {
            assert_eq!(d.lower, 0.0);
            assert_eq!(d.upper, 0.0);
        }
        assert_abs_diff_eq!(opt.objective, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn clamped_generator_gets_an_upper_multiplier() {
        let inst = DispatchInstance::new(
            vec![1.0, 2.0],
            vec![0.0, 0.0],
            vec![0.0, 0.0],
            3.0,
            vec![0.0, 0.0],
            vec![1.0, 3.0],
        )
        .unwrap();
        let opt = solve_centralized(&inst);
        assert_abs_diff_eq!(opt.p_star[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(opt.p_star[1], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(opt.lambda_star, 8.0, epsilon = 1e-11);
        assert_abs_diff_eq!(opt.mu_star[0].upper, 6.0, epsilon = 1e-11);
        assert_eq!(opt.mu_star[0].lower, 0.0);
        assert_eq!(opt.mu_star[1].upper, 0.0);
        // Brute-force refinement over the only free coordinate p_1.
        let mut best = f64::INFINITY;
        for k in 0..=100_000 {
            let p1 = k as f64 / 100_000.0;
            let p2 = 3.0 - p1;
            if p2 <= 3.0 {
                best = best.min(inst.objective(&DVector::from_vec(vec![p1, p2])));
            }
        }
        assert!(opt.objective <= best + 1e-9);
    }

    #[test]
    fn singleton_is_pinned_by_the_balance() {
        let inst = DispatchInstance::new(
            vec![3.0],
            vec![7.0],
            vec![1.0],
            1.5,
            vec![0.0],
            vec![2.0],
        )
        .unwrap();
        let opt = solve_centralized(&inst);
        assert_abs_diff_eq!(opt.p_star[0], 1.5, epsilon = 1e-12);
    }

    #[test]
    fn oracle_output_satisfies_kkt() {
        let inst = DispatchInstance::new(
            vec![0.5, 1.5, 1.0],
            vec![1.0, 0.5, 2.0],
            vec![4.0, 3.0, 5.0],
            6.0,
            vec![0.5, 0.0, 1.0],
            vec![3.0, 2.5, 4.0],
        )
        .unwrap();
        let opt = solve_centralized(&inst);
        let res = kkt_residuals(&inst, &opt.p_star, opt.lambda_star, &opt.mu_star);
        assert!(
            res.max_residual() <= 1e-10,
            "residuals {res:?} exceed tolerance"
        );
    }

    #[test]
    fn perturbed_point_shows_in_the_residuals() {
        let inst = two_symmetric();
        let opt = solve_centralized(&inst);
        let mut p = opt.p_star.clone();
        p[0] += 0.1;
        let res = kkt_residuals(&inst, &p, opt.lambda_star, &opt.mu_star);
        assert!(res.primal >= 0.1);
        let bad_mu = vec![
            GeneratorDuals {
                lower: -0.5,
                upper: 0.0,
            };
            2
        ];
        let res = kkt_residuals(&inst, &opt.p_star, opt.lambda_star, &bad_mu);
        assert!(res.dual > 0.0);
    }

    #[test]
    fn corner_bounds_dominate_interior_gradients() {
        let (inst, _, _) = fig1_fixture();
        let bounds = inst.corner_gradient_bounds(DEFAULT_MU_UPPER);
        let problems = inst.local_problems(DEFAULT_MU_UPPER);
        let set = inst.global_set();
        use crate::projections::ConvexSet;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let x = set.sample(&mut rng);
            for (i, prob) in problems.iter().enumerate() {
                let mu = prob.dual_box().sample(&mut rng);
                let gx = prob.grad_x_lagrangian(&x, &mu).unwrap();
                assert!(gx.norm() <= bounds.l_x + 1e-9);
                assert!(prob.grad_mu_lagrangian(&x).norm() <= bounds.l_mu[i] + 1e-9);
            }
        }
    }

    #[test]
    fn corner_bounds_match_explicit_enumeration() {
        let (inst, _, _) = fig1_fixture();
        let mu_upper = DEFAULT_MU_UPPER;
        let bounds = inst.corner_gradient_bounds(mu_upper);
        let mut expect_lx = 0.0f64;
        for i in 0..inst.n() {
            for p in [0.0, inst.demand()] {
                for m1 in [0.0, mu_upper] {
                    for m2 in [0.0, mu_upper] {
                        expect_lx = expect_lx
                            .max((2.0 * inst.a()[i] * p + inst.b()[i] - m1 + m2).abs());
                    }
                }
            }
        }
        assert_eq!(bounds.l_x, expect_lx);
        // Fixture numbers: largest marginal is the steep generator 3 at full
        // demand, 2*0.5*500 - 13 = 487, plus the dual spread of 100.
        assert_abs_diff_eq!(bounds.l_x, 587.0, epsilon = 1e-12);
    }

    #[test]
    fn fixture_is_valid_and_has_one_binding_limit() {
        let (inst, graph, schedule) = fig1_fixture();
        assert!(graph.is_strongly_connected());
        assert_abs_diff_eq!(schedule.alpha(0), 15.0, epsilon = 1e-15);
        let opt = solve_centralized(&inst);
        assert!(opt.lambda_star.is_finite());
        let res = kkt_residuals(&inst, &opt.p_star, opt.lambda_star, &opt.mu_star);
        assert!(res.max_residual() <= 1e-10);
        // Generator 3 (index 2) is pinned at its upper limit of 12; the rest
        // sit strictly inside their boxes. The balance multiplier is zero
        // by construction (see the fixture doc comment).
        assert_eq!(opt.p_star[2], 12.0);
        assert_abs_diff_eq!(opt.mu_star[2].upper, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(opt.lambda_star, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(opt.p_star[0], 170.0, epsilon = 1e-9);
        assert_abs_diff_eq!(opt.p_star[1], 160.0, epsilon = 1e-9);
        assert_abs_diff_eq!(opt.p_star[3], 158.0, epsilon = 1e-9);
        for i in [0usize, 1, 3] {
            assert!(opt.p_star[i] > inst.p_min()[i] && opt.p_star[i] < inst.p_max()[i]);
            assert_eq!(opt.mu_star[i].lower, 0.0);
            assert_eq!(opt.mu_star[i].upper, 0.0);
        }
        assert_abs_diff_eq!(opt.p_star.sum(), 500.0, epsilon = 1e-10);
    }
}
