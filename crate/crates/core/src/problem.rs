//! Per-agent optimization problems and step-size schedules.
//!
//! Each agent `i` holds a smooth private cost `f_i`, smooth private
//! inequality constraints `g_im(x) <= 0`, and a compact box for its dual
//! multipliers. The saddle function the algorithm works on is the local
//! Lagrangian
//!
//! ```text
//! L_i(x, mu_i) = f_i(x) + sum_m mu_im * g_im(x),
//! ```
//!
//! convex in `x` and affine in `mu_i`. Gradient bounds over the feasible
//! sets drive the disturbance-term guarantees checked in tests; an exact
//! corner computation exists for dispatch, and a sampled, safety-inflated
//! estimate covers everything else.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::projections::{BoxSet, ConvexSet};

/// Multiplier applied to sampled gradient maxima to compensate for the
/// sampling never quite reaching the supremum.
const SAMPLED_BOUND_INFLATION: f64 = 1.5;

/// Errors from problem assembly and evaluation.
#[derive(Debug, Error, PartialEq)]
pub enum ProblemError {
    /// A vector length does not match the declared dimension.
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionError {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    /// Step-size parameters outside the admissible range.
    #[error("invalid schedule: c = {c}, gamma = {gamma} (need c > 0 and 0.5 < gamma <= 1)")]
    InvalidSchedule { c: f64, gamma: f64 },
}

/// A continuously differentiable function `R^d -> R`.
pub trait Smooth: Send + Sync {
    /// Ambient dimension `d`.
    fn dim(&self) -> usize;

    /// Function value at `x`.
    fn value(&self, x: &DVector<f64>) -> f64;

    /// Gradient at `x`.
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;
}

/// One agent's private data: cost, inequality constraints, and the box its
/// dual multipliers are projected into.
pub struct LocalProblem {
    cost: Box<dyn Smooth>,
    constraints: Vec<Box<dyn Smooth>>,
    dual_box: BoxSet,
}

impl LocalProblem {
    /// Assembles a local problem, checking that all pieces share the primal
    /// dimension and that the dual box has one interval per constraint.
    pub fn new(
        cost: Box<dyn Smooth>,
        constraints: Vec<Box<dyn Smooth>>,
        dual_box: BoxSet,
    ) -> Result<Self, ProblemError> {
        let dim = cost.dim();
        for g in &constraints {
            if g.dim() != dim {
                return Err(ProblemError::DimensionError {
                    context: "constraint domain",
                    expected: dim,
                    got: g.dim(),
                });
            }
        }
        if dual_box.dim() != constraints.len() {
            return Err(ProblemError::DimensionError {
                context: "dual box",
                expected: constraints.len(),
                got: dual_box.dim(),
            });
        }
        Ok(Self {
            cost,
            constraints,
            dual_box,
        })
    }

    /// Primal dimension.
    pub fn dim(&self) -> usize {
        self.cost.dim()
    }

    /// Number of inequality constraints (= dual dimension).
    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// The private cost `f_i`.
    pub fn cost(&self) -> &dyn Smooth {
        self.cost.as_ref()
    }

    /// The multiplier box `M_i`.
    pub fn dual_box(&self) -> &BoxSet {
        &self.dual_box
    }

    /// Local Lagrangian `f_i(x) + mu . g_i(x)`.
    pub fn lagrangian(&self, x: &DVector<f64>, mu: &DVector<f64>) -> Result<f64, ProblemError> {
        self.check_dims(x, mu)?;
        let mut value = self.cost.value(x);
        for (g, &m) in self.constraints.iter().zip(mu.iter()) {
            value += m * g.value(x);
        }
        Ok(value)
    }

    /// Primal gradient `grad f_i(x) + sum_m mu_m grad g_im(x)`.
    pub fn grad_x_lagrangian(
        &self,
        x: &DVector<f64>,
        mu: &DVector<f64>,
    ) -> Result<DVector<f64>, ProblemError> {
        self.check_dims(x, mu)?;
        let mut grad = self.cost.gradient(x);
        for (g, &m) in self.constraints.iter().zip(mu.iter()) {
            grad += g.gradient(x) * m;
        }
        Ok(grad)
    }

    /// Dual gradient: the constraint values `(g_i1(x), ..., g_im(x))`.
    /// Affine dependence on `mu` makes this independent of the multipliers.
    pub fn grad_mu_lagrangian(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.dim(), "primal point has wrong dimension");
        DVector::from_iterator(
            self.constraints.len(),
            self.constraints.iter().map(|g| g.value(x)),
        )
    }

    fn check_dims(&self, x: &DVector<f64>, mu: &DVector<f64>) -> Result<(), ProblemError> {
        if x.len() != self.dim() {
            return Err(ProblemError::DimensionError {
                context: "primal point",
                expected: self.dim(),
                got: x.len(),
            });
        }
        if mu.len() != self.num_constraints() {
            return Err(ProblemError::DimensionError {
                context: "multiplier vector",
                expected: self.num_constraints(),
                got: mu.len(),
            });
        }
        Ok(())
    }
}

/// Diminishing step sizes `alpha_t = c / (t + 1)^gamma` for `t = 0, 1, ...`.
///
/// The exponent range `(1/2, 1]` makes the squares summable while the steps
/// themselves are not, the usual condition for diminishing-step saddle
/// methods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepSizeSchedule {
    c: f64,
    gamma: f64,
}

impl StepSizeSchedule {
    /// Validates `c > 0` and `gamma` in `(1/2, 1]`.
    pub fn new(c: f64, gamma: f64) -> Result<Self, ProblemError> {
        if !(c.is_finite() && c > 0.0) || !(gamma.is_finite() && 0.5 < gamma && gamma <= 1.0) {
            return Err(ProblemError::InvalidSchedule { c, gamma });
        }
        Ok(Self { c, gamma })
    }

    /// Scale `c`.
    pub fn c(&self) -> f64 {
        self.c
    }

    /// Decay exponent `gamma`.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Step size for iteration `t` (0-based): `c / (t + 1)^gamma`.
    pub fn alpha(&self, t: usize) -> f64 {
        self.c / ((t + 1) as f64).powf(self.gamma)
    }
}

/// Bounds on gradient norms over the feasible sets: `l_x` dominates
/// `||grad_x L_i(x, mu)||` for every agent, `l_mu[i]` dominates
/// `||g_i(x)||` for agent `i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradientBounds {
    /// Uniform primal-gradient bound.
    pub l_x: f64,
    /// Per-agent dual-gradient bound.
    pub l_mu: Vec<f64>,
}

/// Sampled gradient bounds: maxima of gradient norms over `samples` points
/// drawn from the primal set and each dual box, inflated by 1.5 as a safety
/// factor. Deterministic in `seed`. Exact corner bounds for dispatch live in
/// [`crate::dispatch::DispatchInstance::corner_gradient_bounds`]; this is
/// the generic fallback.
pub fn estimate_gradient_bounds(
    problems: &[LocalProblem],
    primal_set: &dyn ConvexSet,
    samples: usize,
    seed: u64,
) -> GradientBounds {
    assert!(samples >= 1, "need at least one sample");
    assert!(!problems.is_empty(), "need at least one problem");
    for p in problems {
        assert_eq!(
            p.dim(),
            primal_set.dim(),
            "problem and primal set dimensions must match"
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut l_x = 0.0f64;
    let mut l_mu = vec![0.0f64; problems.len()];
    for _ in 0..samples {
        let x = primal_set.sample(&mut rng);
        for (i, p) in problems.iter().enumerate() {
            let mu = p.dual_box().sample(&mut rng);
            let gx = p
                .grad_x_lagrangian(&x, &mu)
                .expect("dimensions checked above");
            l_x = l_x.max(gx.norm());
            l_mu[i] = l_mu[i].max(p.grad_mu_lagrangian(&x).norm());
        }
    }
    GradientBounds {
        l_x: SAMPLED_BOUND_INFLATION * l_x,
        l_mu: l_mu.iter().map(|m| SAMPLED_BOUND_INFLATION * m).collect(),
    }
}
