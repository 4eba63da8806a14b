//! Push-sum consensus and its row-stochastic reformulation.
//!
//! Plain push-sum iterates `x[t+1] = P x[t]`, `y[t+1] = P y[t]` with
//! column-stochastic `P` and `y[0] = 1`; the ratios `z_i = x_i / y_i`
//! converge to the average of the initial values even though `P` is not
//! doubly stochastic. Dividing through by the weights turns the ratio
//! dynamics into a time-varying row-stochastic product:
//!
//! ```text
//! Q[t] = diag(y[t+1])^-1 P diag(y[t]),      z[t+1] = Q[t] z[t],
//! Phi(t, s) = Q[t] Q[t-1] ... Q[s] = diag(y[t+1])^-1 P^(t+1-s) diag(y[s]).
//! ```
//!
//! The telescoped closed form on the right is what this module computes;
//! tests cross-check it against the explicit factor product. As `t` grows,
//! `Phi(t, 0)` approaches the exact averaging matrix `(1/n) 1 1^T` and
//! `Phi(t, s)` approaches `(1/n) 1 y[s]^T`, geometrically at the rate of the
//! second-largest eigenvalue modulus of `P`; [`estimate_mixing`] recovers
//! that rate from the iterates.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::graph::PerronMatrix;

/// Residuals below this are dominated by floating-point noise and are
/// excluded from rate fits.
pub const RESIDUAL_FLOOR: f64 = 1e-14;

/// Tolerance for checking that a claimed weight vector pair satisfies
/// `y_next = P y`.
const WEIGHT_CONSISTENCY_TOL: f64 = 1e-10;

/// Errors from consensus computations.
#[derive(Debug, Error, PartialEq)]
pub enum ConsensusError {
    /// `y_next` is not the image of `y` under the mixing matrix.
    #[error("weight vectors violate y_next = P y (max deviation {max_dev:e})")]
    InconsistentWeights { max_dev: f64 },
    /// Matrix product requested over an empty index range.
    #[error("invalid product range: s = {s} must not exceed t = {t}")]
    InvalidRange { s: usize, t: usize },
    /// All residuals sit at floating-point noise level; no rate to fit.
    #[error("residuals are already at noise level, nothing to fit")]
    AlreadyMixed,
}

/// Push-sum iterate: per-agent values `x` (one row per agent), weights `y`,
/// and the de-biased ratios `z` with rows `z_i = x_i / y_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PushSumState {
    x: DMatrix<f64>,
    y: DVector<f64>,
    z: DMatrix<f64>,
    t: usize,
}

impl PushSumState {
    /// Starts push-sum from per-agent rows `x0` with unit weights, so
    /// `z[0] = x[0]`.
    pub fn new(x0: DMatrix<f64>) -> Self {
        assert!(x0.nrows() >= 1, "need at least one agent");
        let y = DVector::from_element(x0.nrows(), 1.0);
        let z = x0.clone();
        Self { x: x0, y, z, t: 0 }
    }

    /// One synchronous round: `x <- P x`, `y <- P y`, `z_i <- x_i / y_i`.
    pub fn step(&self, p: &PerronMatrix) -> Self {
        assert_eq!(p.n(), self.n(), "mixing matrix size must match agents");
        let x = p.entries() * &self.x;
        let y = p.entries() * &self.y;
        let mut z = x.clone();
        for i in 0..self.n() {
            let row = z.row(i) / y[i];
            z.set_row(i, &row);
        }
        Self {
            x,
            y,
            z,
            t: self.t + 1,
        }
    }

    /// Number of agents.
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    /// Per-agent dimension.
    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    /// Raw values, one row per agent.
    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    /// Current weights; always sums to `n`.
    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    /// De-biased ratios, one row per agent; these converge to the average
    /// of the initial rows.
    pub fn z(&self) -> &DMatrix<f64> {
        &self.z
    }

    /// Rounds taken so far.
    pub fn t(&self) -> usize {
        self.t
    }
}

/// The row-stochastic one-round matrix `Q = diag(y_next)^-1 P diag(y)`.
///
/// `y` must be strictly positive and `y_next` must equal `P y` within
/// [`WEIGHT_CONSISTENCY_TOL`]; otherwise the pair cannot have come from the
/// same push-sum trajectory and the call fails.
pub fn q_matrix(
    y_next: &DVector<f64>,
    y: &DVector<f64>,
    p: &PerronMatrix,
) -> Result<DMatrix<f64>, ConsensusError> {
    let n = p.n();
    assert_eq!(y.len(), n, "weight vector size must match the matrix");
    assert_eq!(y_next.len(), n, "weight vector size must match the matrix");
    assert!(y.min() > 0.0, "weights must be strictly positive");
    let max_dev = (p.entries() * y - y_next).amax();
    if max_dev > WEIGHT_CONSISTENCY_TOL {
        return Err(ConsensusError::InconsistentWeights { max_dev });
    }
    Ok(DMatrix::from_fn(n, n, |i, j| {
        p.entries()[(i, j)] * y[j] / y_next[i]
    }))
}

/// `m` raised to the `k`-th power by binary exponentiation.
fn matrix_power(m: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let n = m.nrows();
    let mut result = DMatrix::identity(n, n);
    let mut base = m.clone();
    let mut k = k;
    while k > 0 {
        if k & 1 == 1 {
            result = &result * &base;
        }
        base = &base * &base;
        k >>= 1;
    }
    result
}

/// Weight vector after `k` rounds: `y[k] = P^k 1`.
pub fn weight_vector(p: &PerronMatrix, k: usize) -> DVector<f64> {
    let ones = DVector::from_element(p.n(), 1.0);
    matrix_power(p.entries(), k) * ones
}

/// The product `Phi(t, s) = Q[t] ... Q[s]` via its closed form
/// `diag(y[t+1])^-1 P^(t+1-s) diag(y[s])`, for `s <= t`.
pub fn phi_product(
    p: &PerronMatrix,
    s: usize,
    t: usize,
) -> Result<DMatrix<f64>, ConsensusError> {
    if s > t {
        return Err(ConsensusError::InvalidRange { s, t });
    }
    let n = p.n();
    let y_s = weight_vector(p, s);
    let pow = matrix_power(p.entries(), t + 1 - s);
    let y_next = &pow * &y_s;
    Ok(DMatrix::from_fn(n, n, |i, j| {
        pow[(i, j)] * y_s[j] / y_next[i]
    }))
}

/// Outcome of checking the backward-product limits at a fixed horizon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma1Report {
    /// Start index of the general product checked.
    pub s: usize,
    /// Horizon the products were evaluated at.
    pub t_max: usize,
    /// Entrywise tolerance for both limits.
    pub tol: f64,
    /// Largest entrywise deviation over both checks.
    pub max_deviation: f64,
    /// Whether `max_deviation <= tol`.
    pub pass: bool,
}

/// Checks the two product limits at horizon `t_max`:
/// `Phi(t_max, 0)` against the exact averaging matrix `(1/n) 1 1^T` and
/// `Phi(t_max, s)` against `(1/n) 1 y[s]^T`.
pub fn verify_lemma1_limits(p: &PerronMatrix, s: usize, t_max: usize, tol: f64) -> Lemma1Report {
    assert!(s <= t_max, "start index must not exceed the horizon");
    let n = p.n();
    let uniform = 1.0 / n as f64;
    let phi_zero = phi_product(p, 0, t_max).expect("range checked above");
    let mut max_deviation = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            max_deviation = max_deviation.max((phi_zero[(i, j)] - uniform).abs());
        }
    }
    let phi_s = phi_product(p, s, t_max).expect("range checked above");
    let y_s = weight_vector(p, s);
    for i in 0..n {
        for j in 0..n {
            max_deviation = max_deviation.max((phi_s[(i, j)] - uniform * y_s[j]).abs());
        }
    }
    Lemma1Report {
        s,
        t_max,
        tol,
        max_deviation,
        pass: max_deviation <= tol,
    }
}

/// Geometric mixing-rate fit: `r(t) <= c * lambda^(t-s)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixingEstimate {
    /// Fitted prefactor.
    pub c: f64,
    /// Fitted contraction factor per round.
    pub lambda: f64,
    /// Coefficient of determination of the log-linear fit.
    pub r_squared: f64,
    /// Raw residuals `r(t)` for `t = s+1 ..= t_max`.
    pub residuals: Vec<f64>,
}

/// Measures how fast `Phi(t, s)` flattens toward its rank-one limit.
///
/// The residual `r(t) = max_ij |Phi(t,s)_ij - (1/n) sum_k Phi(t,s)_kj|`
/// is recorded for `t = s+1 ..= t_max`; a line is fitted to `log r` over
/// the later half of the residuals that still sit above [`RESIDUAL_FLOOR`]
/// (the early rounds are polluted by transients, the sub-floor ones by
/// rounding noise). Fails with [`ConsensusError::AlreadyMixed`] when fewer
/// than two residuals survive the floor, as happens for exactly averaging
/// matrices.
pub fn estimate_mixing(
    p: &PerronMatrix,
    s: usize,
    t_max: usize,
) -> Result<MixingEstimate, ConsensusError> {
    if t_max <= s {
        return Err(ConsensusError::InvalidRange { s, t: t_max });
    }
    let n = p.n();
    let y_s = weight_vector(p, s);
    // pow tracks P^(t+1-s) across the loop, starting at t = s+1.
    let mut pow = p.entries() * p.entries();
    let mut residuals = Vec::with_capacity(t_max - s);
    for t in (s + 1)..=t_max {
        let y_next = &pow * &y_s;
        let mut r = 0.0f64;
        for j in 0..n {
            let mut mean = 0.0;
            for i in 0..n {
                mean += pow[(i, j)] * y_s[j] / y_next[i];
            }
            mean /= n as f64;
            for i in 0..n {
                r = r.max((pow[(i, j)] * y_s[j] / y_next[i] - mean).abs());
            }
        }
        residuals.push(r);
        if t < t_max {
            pow = &pow * p.entries();
        }
    }
    let points: Vec<(f64, f64)> = residuals
        .iter()
        .enumerate()
        .filter(|&(_, &r)| r >= RESIDUAL_FLOOR)
        .map(|(idx, &r)| ((idx + 1) as f64, r.ln()))
        .collect();
    if points.len() < 2 {
        return Err(ConsensusError::AlreadyMixed);
    }
    let start = (points.len() / 2).min(points.len() - 2);
    let tail = &points[start..];
    let m = tail.len() as f64;
    let k_mean = tail.iter().map(|&(k, _)| k).sum::<f64>() / m;
    let l_mean = tail.iter().map(|&(_, l)| l).sum::<f64>() / m;
    let sxx: f64 = tail.iter().map(|&(k, _)| (k - k_mean) * (k - k_mean)).sum();
    let sxy: f64 = tail
        .iter()
        .map(|&(k, l)| (k - k_mean) * (l - l_mean))
        .sum();
    let slope = sxy / sxx;
    let intercept = l_mean - slope * k_mean;
    let ss_res: f64 = tail
        .iter()
        .map(|&(k, l)| {
            let e = l - (intercept + slope * k);
            e * e
        })
        .sum();
    let ss_tot: f64 = tail.iter().map(|&(_, l)| (l - l_mean) * (l - l_mean)).sum();
    let r_squared = if ss_tot <= f64::EPSILON {
        if ss_res <= 1e-20 {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(MixingEstimate {
        c: intercept.exp(),
        lambda: slope.exp(),
        r_squared,
        residuals,
    })
}
