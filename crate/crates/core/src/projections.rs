//! Euclidean projections onto the feasible sets used by the algorithm.
//!
//! Two set families cover everything in this crate: the scaled simplex
//! `{ p : p >= 0, sum(p) = D }` (total-demand coupling) and axis-aligned
//! boxes (dual multiplier ranges, generator limits). Both projections are
//! exact and run in `O(d log d)` / `O(d)`. A brute-force KKT oracle over
//! active sets, exponential in the dimension, backs them in tests.

use nalgebra::DVector;
use rand::RngCore;
use thiserror::Error;

/// Largest dimension the brute-force oracle will enumerate (2^d subsets).
const ORACLE_MAX_DIM: usize = 12;

/// Errors from set construction and projection.
#[derive(Debug, Error, PartialEq)]
pub enum ProjectionError {
    /// Set parameters describe an empty or ill-posed set.
    #[error("invalid set: {reason}")]
    InvalidSet { reason: String },
    /// The brute-force oracle refuses dimensions above [`ORACLE_MAX_DIM`].
    #[error("oracle limited to dimension {max}, got {got}")]
    TooLarge { got: usize, max: usize },
    /// Vector length does not match the set dimension.
    #[error("dimension mismatch: set has dimension {expected}, vector has {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// A closed convex set supporting projection, membership tests, and
/// sampling. Object-safe so problems can hold sets behind `dyn`.
pub trait ConvexSet: Send + Sync {
    /// Ambient dimension.
    fn dim(&self) -> usize;

    /// Euclidean projection of `u` onto the set.
    ///
    /// Panics if `u.len() != self.dim()`.
    fn project(&self, u: &DVector<f64>) -> DVector<f64>;

    /// Whether `x` satisfies every defining constraint within `tol`.
    fn contains(&self, x: &DVector<f64>, tol: f64) -> bool;

    /// A point of the set drawn from a fixed interior-covering distribution.
    fn sample(&self, rng: &mut dyn RngCore) -> DVector<f64>;
}

/// The scaled simplex `{ p in R^d : p >= 0, sum(p) = D }` with `D >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledSimplex {
    dim: usize,
    level: f64,
}

impl ScaledSimplex {
    /// Creates the simplex `{ p >= 0, sum(p) = level }` in dimension
    /// `dim >= 1`.
    pub fn new(dim: usize, level: f64) -> Result<Self, ProjectionError> {
        if dim == 0 {
            return Err(ProjectionError::InvalidSet {
                reason: "simplex dimension must be at least 1".into(),
            });
        }
        if !level.is_finite() || level < 0.0 {
            return Err(ProjectionError::InvalidSet {
                reason: format!("simplex level must be finite and nonnegative, got {level}"),
            });
        }
        Ok(Self { dim, level })
    }

    /// The required coordinate sum `D`.
    pub fn level(&self) -> f64 {
        self.level
    }
}

impl ConvexSet for ScaledSimplex {
    fn dim(&self) -> usize {
        self.dim
    }

    /// Sort-and-threshold projection.
    ///
    /// With `u` sorted descending, the support size is the largest `k` such
    /// that `u_(k) - (sum of top k - D) / k > 0`; the threshold for that `k`
    /// is subtracted and negatives clip to zero. For `D > 0` the case `k = 1`
    /// always qualifies, so the support is never empty; `D = 0` short-circuits
    /// to the origin, the only point of the set.
    fn project(&self, u: &DVector<f64>) -> DVector<f64> {
        assert_eq!(u.len(), self.dim, "projection input has wrong dimension");
        if self.level == 0.0 {
            return DVector::zeros(self.dim);
        }
        let mut sorted: Vec<f64> = u.iter().copied().collect();
        sorted.sort_unstable_by(|a, b| b.partial_cmp(a).expect("projection input must not be NaN"));
        let mut running = 0.0;
        let mut theta = 0.0;
        for (k, &value) in sorted.iter().enumerate() {
            running += value;
            let candidate = (running - self.level) / (k + 1) as f64;
            if value - candidate > 0.0 {
                theta = candidate;
            }
        }
        u.map(|v| (v - theta).max(0.0))
    }

    fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        x.len() == self.dim
            && x.iter().all(|&v| v >= -tol)
            && (x.sum() - self.level).abs() <= tol
    }

    /// Uniform (flat Dirichlet) sample: normalized i.i.d. exponentials
    /// scaled by the level.
    fn sample(&self, rng: &mut dyn RngCore) -> DVector<f64> {
        let mut raw = DVector::zeros(self.dim);
        for v in raw.iter_mut() {
            // Inverse-CDF exponential; the argument of ln is in (0, 1].
            let u: f64 = rand::Rng::gen(rng);
            *v = -(1.0 - u).ln();
        }
        let total = raw.sum();
        if total <= 0.0 {
            // All exponentials underflowed to zero; fall back to the center.
            return DVector::from_element(self.dim, self.level / self.dim as f64);
        }
        raw * (self.level / total)
    }
}

/// An axis-aligned box `{ x : lower <= x <= upper }`. Dimension zero is
/// allowed and denotes the trivial set containing only the empty vector.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSet {
    lower: DVector<f64>,
    upper: DVector<f64>,
}

impl BoxSet {
    /// Creates the box `[lower_1, upper_1] x ... x [lower_d, upper_d]`.
    pub fn new(lower: DVector<f64>, upper: DVector<f64>) -> Result<Self, ProjectionError> {
        if lower.len() != upper.len() {
            return Err(ProjectionError::InvalidSet {
                reason: format!(
                    "bound lengths differ: {} lower vs {} upper",
                    lower.len(),
                    upper.len()
                ),
            });
        }
        for i in 0..lower.len() {
            if !(lower[i].is_finite() && upper[i].is_finite()) || lower[i] > upper[i] {
                return Err(ProjectionError::InvalidSet {
                    reason: format!(
                        "coordinate {i} has empty or unbounded range [{}, {}]",
                        lower[i], upper[i]
                    ),
                });
            }
        }
        Ok(Self { lower, upper })
    }

    /// The nonnegative orthant box `[0, upper]^d`.
    pub fn nonnegative_cube(dim: usize, upper: f64) -> Result<Self, ProjectionError> {
        Self::new(DVector::zeros(dim), DVector::from_element(dim, upper))
    }

    /// Lower bounds.
    pub fn lower(&self) -> &DVector<f64> {
        &self.lower
    }

    /// Upper bounds.
    pub fn upper(&self) -> &DVector<f64> {
        &self.upper
    }
}

impl ConvexSet for BoxSet {
    fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Coordinate-wise clamp.
    fn project(&self, u: &DVector<f64>) -> DVector<f64> {
        assert_eq!(u.len(), self.dim(), "projection input has wrong dimension");
        DVector::from_fn(self.dim(), |i, _| u[i].clamp(self.lower[i], self.upper[i]))
    }

    fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        x.len() == self.dim()
            && (0..self.dim()).all(|i| x[i] >= self.lower[i] - tol && x[i] <= self.upper[i] + tol)
    }

    fn sample(&self, rng: &mut dyn RngCore) -> DVector<f64> {
        DVector::from_fn(self.dim(), |i, _| {
            let u: f64 = rand::Rng::gen(rng);
            self.lower[i] + u * (self.upper[i] - self.lower[i])
        })
    }
}

/// Exact simplex projection by KKT enumeration, for cross-checking the
/// sort-and-threshold path. Exponential in `u.len()`.
///
/// For each candidate support `S` the stationarity system gives
/// `theta = (sum_S u - D) / |S|` and `x_i = u_i - theta` on `S`; the
/// candidate is the projection iff `x_S >= 0` and the complementary
/// multipliers `theta - u_i` are nonnegative off `S`.
pub fn qp_oracle_project(
    u: &DVector<f64>,
    set: &ScaledSimplex,
) -> Result<DVector<f64>, ProjectionError> {
    let d = set.dim();
    if u.len() != d {
        return Err(ProjectionError::DimensionMismatch {
            expected: d,
            got: u.len(),
        });
    }
    if d > ORACLE_MAX_DIM {
        return Err(ProjectionError::TooLarge {
            got: d,
            max: ORACLE_MAX_DIM,
        });
    }
    if set.level() == 0.0 {
        return Ok(DVector::zeros(d));
    }
    // Feasibility tolerance for accepting a KKT candidate; ties between
    // supports differing by a boundary coordinate resolve to the same point.
    let tol = 1e-12 * (1.0 + set.level().abs() + u.amax());
    for mask in 1u64..(1 << d) {
        let support: Vec<usize> = (0..d).filter(|i| mask >> i & 1 == 1).collect();
        let sum: f64 = support.iter().map(|&i| u[i]).sum();
        let theta = (sum - set.level()) / support.len() as f64;
        let support_ok = support.iter().all(|&i| u[i] - theta >= -tol);
        let complement_ok = (0..d)
            .filter(|i| mask >> i & 1 == 0)
            .all(|i| theta - u[i] >= -tol);
        if support_ok && complement_ok {
            let mut x = DVector::zeros(d);
            for &i in &support {
                x[i] = (u[i] - theta).max(0.0);
            }
            return Ok(x);
        }
    }
    unreachable!("the projection onto a nonempty simplex always satisfies some KKT system");
}
