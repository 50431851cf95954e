//! Finite-state transition kernels and their exact analysis.
//!
//! A [`FiniteKernel`] is a row-stochastic matrix with state labels; a
//! [`ProbVector`] is a distribution over its states. This module computes
//! total variation distances, stationary distributions, detailed-balance
//! checks, the additive reversibilization, and the contraction profiles
//! `d(t)` (worst start vs. stationarity) and `dbar(t)` (worst pair of
//! starts) that drive every mixing-time computation downstream.
//!
//! Everything here is immutable after construction and safe to share across
//! threads.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for "sums to one" checks on distributions.
pub const MASS_TOL: f64 = 1e-12;
/// Rows whose sum is farther than this from one are rejected outright;
/// anything closer is renormalized.
pub const ROW_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("negative entry {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("row {row} sums to {sum}, outside tolerance {tol}")]
    RowSumInvalid { row: usize, sum: f64, tol: f64 },
    #[error("weights sum to {sum}, outside tolerance {tol}")]
    WeightSumInvalid { sum: f64, tol: f64 },
    #[error("stationary distribution is not unique (reducible chain)")]
    NonUniqueStationary,
    #[error("stationary mass of state {state} is zero")]
    ZeroMassState { state: usize },
    #[error("parse error: {0}")]
    Parse(String),
}

pub type KernelResult<T> = Result<T, KernelError>;

/// A probability distribution on a finite state space.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector {
    weights: DVector<f64>,
    labels: Option<Vec<String>>,
}

impl ProbVector {
    /// Validates non-negativity and total mass within [`MASS_TOL`].
    pub fn new(weights: Vec<f64>) -> KernelResult<Self> {
        Self::with_labels(weights, None)
    }

    pub fn with_labels(weights: Vec<f64>, labels: Option<Vec<String>>) -> KernelResult<Self> {
        for (i, &w) in weights.iter().enumerate() {
            if w < 0.0 || !w.is_finite() {
                return Err(KernelError::NegativeEntry {
                    row: 0,
                    col: i,
                    value: w,
                });
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > MASS_TOL {
            return Err(KernelError::WeightSumInvalid { sum, tol: MASS_TOL });
        }
        if let Some(ref l) = labels {
            if l.len() != weights.len() {
                return Err(KernelError::DimensionMismatch {
                    expected: weights.len(),
                    found: l.len(),
                });
            }
        }
        Ok(Self {
            weights: DVector::from_vec(weights),
            labels,
        })
    }

    /// Renormalizes a non-negative weight vector to total mass one.
    pub fn normalized(weights: Vec<f64>) -> KernelResult<Self> {
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 || !sum.is_finite() {
            return Err(KernelError::WeightSumInvalid { sum, tol: MASS_TOL });
        }
        Self::new(weights.iter().map(|w| w / sum).collect())
    }

    /// Point mass at `state`.
    pub fn point_mass(n: usize, state: usize) -> Self {
        let mut w = vec![0.0; n];
        w[state] = 1.0;
        Self {
            weights: DVector::from_vec(w),
            labels: None,
        }
    }

    /// Uniform distribution on `n` states.
    pub fn uniform(n: usize) -> Self {
        Self {
            weights: DVector::from_element(n, 1.0 / n as f64),
            labels: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn as_slice(&self) -> &[f64] {
        self.weights.as_slice()
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Mass of a set of states.
    pub fn mass_of(&self, states: &[usize]) -> f64 {
        states.iter().map(|&i| self.weights[i]).sum()
    }

    pub(crate) fn from_dvector_unchecked(weights: DVector<f64>) -> Self {
        Self {
            weights,
            labels: None,
        }
    }
}

/// Total variation distance: `sup_A |mu(A) - nu(A)|`, computed as half the
/// L1 distance of the weight vectors.
pub fn tv_distance(mu: &ProbVector, nu: &ProbVector) -> KernelResult<f64> {
    if mu.dim() != nu.dim() {
        return Err(KernelError::DimensionMismatch {
            expected: mu.dim(),
            found: nu.dim(),
        });
    }
    Ok(tv_slices(mu.as_slice(), nu.as_slice()))
}

/// Half-L1 distance of two equal-length weight slices. Callers guarantee
/// matching lengths.
pub fn tv_slices(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a
        .iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .sum::<f64>()
}

/// A row-stochastic transition matrix with state labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteKernel {
    matrix: DMatrix<f64>,
    labels: Vec<String>,
    cached_stationary: Option<ProbVector>,
}

#[derive(Serialize, Deserialize)]
struct KernelRepr {
    labels: Vec<String>,
    matrix: Vec<Vec<f64>>,
}

impl FiniteKernel {
    /// Validates shape, non-negativity, and row sums. Rows within
    /// [`ROW_SUM_TOL`] of one are renormalized; anything farther off is
    /// rejected.
    pub fn new(rows: Vec<Vec<f64>>) -> KernelResult<Self> {
        let n = rows.len();
        let labels = (0..n).map(|i| format!("s{i}")).collect();
        Self::with_labels(rows, labels)
    }

    pub fn with_labels(rows: Vec<Vec<f64>>, labels: Vec<String>) -> KernelResult<Self> {
        let n = rows.len();
        if labels.len() != n {
            return Err(KernelError::DimensionMismatch {
                expected: n,
                found: labels.len(),
            });
        }
        let mut matrix = DMatrix::zeros(n, n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(KernelError::NotSquare {
                    rows: n,
                    cols: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if v < 0.0 || !v.is_finite() {
                    return Err(KernelError::NegativeEntry {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(KernelError::RowSumInvalid {
                    row: i,
                    sum,
                    tol: ROW_SUM_TOL,
                });
            }
            for (j, &v) in row.iter().enumerate() {
                matrix[(i, j)] = v / sum;
            }
        }
        Ok(Self {
            matrix,
            labels,
            cached_stationary: None,
        })
    }

    pub(crate) fn from_matrix_unchecked(matrix: DMatrix<f64>, labels: Vec<String>) -> Self {
        Self {
            matrix,
            labels,
            cached_stationary: None,
        }
    }

    pub fn n_states(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// One-step law from state `i`.
    pub fn row_distribution(&self, i: usize) -> ProbVector {
        ProbVector::from_dvector_unchecked(self.matrix.row(i).transpose())
    }

    /// Returns a copy with the stationary distribution computed and stored.
    pub fn with_cached_stationary(mut self) -> KernelResult<Self> {
        let pi = stationary_distribution(&self)?;
        self.cached_stationary = Some(pi);
        Ok(self)
    }

    pub fn cached_stationary(&self) -> Option<&ProbVector> {
        self.cached_stationary.as_ref()
    }

    /// Adjacency on the support pattern: `support[i]` lists the states
    /// reachable from `i` in one step with positive probability.
    pub(crate) fn support_successors(&self) -> Vec<Vec<usize>> {
        let n = self.n_states();
        (0..n)
            .map(|i| (0..n).filter(|&j| self.matrix[(i, j)] > 0.0).collect())
            .collect()
    }

    /// JSON form: `{"labels": [...], "matrix": [[...], ...]}`.
    pub fn to_json(&self) -> String {
        let repr = KernelRepr {
            labels: self.labels.clone(),
            matrix: (0..self.n_states())
                .map(|i| self.matrix.row(i).iter().copied().collect())
                .collect(),
        };
        serde_json::to_string_pretty(&repr).expect("kernel serialization cannot fail")
    }

    pub fn from_json(s: &str) -> KernelResult<Self> {
        let repr: KernelRepr =
            serde_json::from_str(s).map_err(|e| KernelError::Parse(e.to_string()))?;
        Self::with_labels(repr.matrix, repr.labels)
    }

    /// Plain text form: first line `n`, then `n` whitespace-delimited rows.
    pub fn to_text(&self) -> String {
        let n = self.n_states();
        let mut out = format!("{n}\n");
        for i in 0..n {
            let row: Vec<String> = self
                .matrix
                .row(i)
                .iter()
                .map(|v| format!("{v:?}"))
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(s: &str) -> KernelResult<Self> {
        let mut tokens = s.split_whitespace();
        let n: usize = tokens
            .next()
            .ok_or_else(|| KernelError::Parse("empty input".into()))?
            .parse()
            .map_err(|e| KernelError::Parse(format!("bad dimension: {e}")))?;
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let mut row = Vec::with_capacity(n);
            for j in 0..n {
                let tok = tokens
                    .next()
                    .ok_or_else(|| KernelError::Parse(format!("missing entry ({i}, {j})")))?;
                row.push(
                    tok.parse::<f64>()
                        .map_err(|e| KernelError::Parse(format!("entry ({i}, {j}): {e}")))?,
                );
            }
            rows.push(row);
        }
        if tokens.next().is_some() {
            return Err(KernelError::Parse("trailing tokens after matrix".into()));
        }
        Self::new(rows)
    }
}

/// Solves `pi P = pi`, `sum pi = 1` by a dense least-squares solve of
/// `(P^T - I) x = 0` with the normalization row appended. Reducible chains
/// (fixed-point space of dimension > 1) are reported as
/// [`KernelError::NonUniqueStationary`]; the rank test thresholds singular
/// values at `1e-10 * n`.
pub fn stationary_distribution(kernel: &FiniteKernel) -> KernelResult<ProbVector> {
    let n = kernel.n_states();
    let mut b = kernel.matrix.transpose();
    for i in 0..n {
        b[(i, i)] -= 1.0;
    }

    let svd = b.clone().svd(false, false);
    let threshold = 1e-10 * n as f64;
    let nullity = svd
        .singular_values
        .iter()
        .filter(|&&s| s <= threshold)
        .count();
    if nullity > 1 {
        return Err(KernelError::NonUniqueStationary);
    }

    // Append the normalization row and least-squares solve.
    let mut aug = DMatrix::zeros(n + 1, n);
    aug.view_mut((0, 0), (n, n)).copy_from(&b);
    for j in 0..n {
        aug[(n, j)] = 1.0;
    }
    let mut rhs = DVector::zeros(n + 1);
    rhs[n] = 1.0;
    let solution = aug
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| KernelError::Parse(format!("stationary solve failed: {e}")))?;

    let mut weights: Vec<f64> = solution.iter().copied().collect();
    for w in weights.iter_mut() {
        if w.abs() < 1e-14 {
            *w = 0.0;
        }
        if *w < 0.0 {
            // A genuinely negative component means the least-squares
            // solution is not a distribution, i.e. the fixed-point space is
            // degenerate beyond what the rank test caught.
            if *w < -1e-10 {
                return Err(KernelError::NonUniqueStationary);
            }
            *w = 0.0;
        }
    }
    ProbVector::normalized(weights)
}

/// Detailed balance against `pi`: true iff
/// `max_{i,j} |pi_i P_ij - pi_j P_ji| <= tol`.
pub fn check_reversible(kernel: &FiniteKernel, pi: &ProbVector, tol: f64) -> KernelResult<bool> {
    let n = kernel.n_states();
    if pi.dim() != n {
        return Err(KernelError::DimensionMismatch {
            expected: n,
            found: pi.dim(),
        });
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let forward = pi.weight(i) * kernel.matrix[(i, j)];
            let backward = pi.weight(j) * kernel.matrix[(j, i)];
            if (forward - backward).abs() > tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Additive reversibilization `(P + P*) / 2` with `P*_ij = pi_j P_ji / pi_i`.
/// Requires `pi` stationary for the kernel and strictly positive.
pub fn reversibilize(kernel: &FiniteKernel, pi: &ProbVector) -> KernelResult<FiniteKernel> {
    let n = kernel.n_states();
    if pi.dim() != n {
        return Err(KernelError::DimensionMismatch {
            expected: n,
            found: pi.dim(),
        });
    }
    for i in 0..n {
        if pi.weight(i) <= 0.0 {
            return Err(KernelError::ZeroMassState { state: i });
        }
    }
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let adjoint = pi.weight(j) * kernel.matrix[(j, i)] / pi.weight(i);
            out[(i, j)] = 0.5 * (kernel.matrix[(i, j)] + adjoint);
        }
    }
    Ok(FiniteKernel::from_matrix_unchecked(
        out,
        kernel.labels.to_vec(),
    ))
}

/// `start * P^t` by `t` successive vector-matrix products; no matrix power
/// is formed.
pub fn iterate_distribution(
    kernel: &FiniteKernel,
    start: &ProbVector,
    t: u64,
) -> KernelResult<ProbVector> {
    let n = kernel.n_states();
    if start.dim() != n {
        return Err(KernelError::DimensionMismatch {
            expected: n,
            found: start.dim(),
        });
    }
    let pt = kernel.matrix.transpose();
    let mut mu = start.weights().clone();
    for _ in 0..t {
        mu = &pt * mu;
    }
    Ok(ProbVector::from_dvector_unchecked(mu))
}

/// The contraction profile of a kernel over `t = 0..=horizon`:
/// `d(t) = max_x tv(P^t(x, .), pi)` and
/// `dbar(t) = max_{x,y} tv(P^t(x, .), P^t(y, .))`.
#[derive(Debug, Clone)]
pub struct ContractionProfile {
    pub horizon: u64,
    pub d_values: Vec<f64>,
    pub dbar_values: Vec<f64>,
}

impl ContractionProfile {
    pub fn d(&self, t: u64) -> f64 {
        self.d_values[t as usize]
    }

    pub fn dbar(&self, t: u64) -> f64 {
        self.dbar_values[t as usize]
    }
}

/// Computes the profile by iterating one distribution per start state
/// (never powering the matrix), keeping memory at `O(n^2)`.
pub fn contraction_profile(
    kernel: &FiniteKernel,
    pi: &ProbVector,
    horizon: u64,
) -> KernelResult<ContractionProfile> {
    let n = kernel.n_states();
    if pi.dim() != n {
        return Err(KernelError::DimensionMismatch {
            expected: n,
            found: pi.dim(),
        });
    }
    let pt = kernel.matrix.transpose();
    let mut dists: Vec<DVector<f64>> = (0..n)
        .map(|x| {
            let mut v = DVector::zeros(n);
            v[x] = 1.0;
            v
        })
        .collect();
    let mut d_values = Vec::with_capacity(horizon as usize + 1);
    let mut dbar_values = Vec::with_capacity(horizon as usize + 1);
    for t in 0..=horizon {
        d_values.push(profile_d(&dists, pi));
        dbar_values.push(profile_dbar(&dists));
        if t < horizon {
            for mu in dists.iter_mut() {
                *mu = &pt * &*mu;
            }
        }
    }
    Ok(ContractionProfile {
        horizon,
        d_values,
        dbar_values,
    })
}

pub(crate) fn profile_d(dists: &[DVector<f64>], pi: &ProbVector) -> f64 {
    dists
        .iter()
        .map(|mu| tv_slices(mu.as_slice(), pi.as_slice()))
        .fold(0.0, f64::max)
}

pub(crate) fn profile_dbar(dists: &[DVector<f64>]) -> f64 {
    let n = dists.len();
    let mut worst = 0.0f64;
    for x in 0..n {
        for y in (x + 1)..n {
            worst = worst.max(tv_slices(dists[x].as_slice(), dists[y].as_slice()));
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    pub(crate) fn flip() -> FiniteKernel {
        FiniteKernel::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()
    }

    fn lazy_flip() -> FiniteKernel {
        FiniteKernel::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap()
    }

    fn birth_death() -> FiniteKernel {
        FiniteKernel::new(vec![
            vec![0.5, 0.5, 0.0],
            vec![0.25, 0.5, 0.25],
            vec![0.0, 0.5, 0.5],
        ])
        .unwrap()
    }

    /// Independent oracle for birth-death chains: solve detailed balance
    /// `pi_i P_{i,i+1} = pi_{i+1} P_{i+1,i}` along the path, then normalize.
    fn detailed_balance_oracle(kernel: &FiniteKernel) -> Vec<f64> {
        let n = kernel.n_states();
        let mut w = vec![1.0; n];
        for i in 0..n - 1 {
            w[i + 1] = w[i] * kernel.entry(i, i + 1) / kernel.entry(i + 1, i);
        }
        let total: f64 = w.iter().sum();
        w.iter().map(|x| x / total).collect()
    }

    #[test]
    fn tv_disjoint_point_masses() {
        let a = ProbVector::new(vec![1.0, 0.0]).unwrap();
        let b = ProbVector::new(vec![0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(tv_distance(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn tv_identical() {
        let a = ProbVector::new(vec![0.3, 0.7]).unwrap();
        assert_abs_diff_eq!(tv_distance(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn tv_half_l1() {
        let a = ProbVector::new(vec![0.5, 0.5]).unwrap();
        let b = ProbVector::new(vec![0.75, 0.25]).unwrap();
        assert_abs_diff_eq!(tv_distance(&a, &b).unwrap(), 0.25);
    }

    #[test]
    fn tv_dimension_mismatch() {
        let a = ProbVector::new(vec![1.0]).unwrap();
        let b = ProbVector::new(vec![0.5, 0.5]).unwrap();
        assert!(matches!(
            tv_distance(&a, &b),
            Err(KernelError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn stationary_flip() {
        let pi = stationary_distribution(&flip()).unwrap();
        assert_abs_diff_eq!(pi.weight(0), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(pi.weight(1), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn stationary_identity_not_unique() {
        let id = FiniteKernel::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(
            stationary_distribution(&id),
            Err(KernelError::NonUniqueStationary)
        ));
    }

    #[test]
    fn stationary_birth_death_matches_detailed_balance_oracle() {
        let k = birth_death();
        let expected = detailed_balance_oracle(&k);
        assert_abs_diff_eq!(expected[0], 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(expected[1], 0.5, epsilon = 1e-15);
        let pi = stationary_distribution(&k).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(pi.weight(i), expected[i], epsilon = 1e-10);
        }
    }

    #[test]
    fn reversible_symmetric_uniform() {
        let k = lazy_flip();
        let pi = ProbVector::uniform(2);
        assert!(check_reversible(&k, &pi, 1e-12).unwrap());
    }

    #[test]
    fn reversible_rejects_rotation() {
        let rot = FiniteKernel::new(vec![
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![1.0, 0.0, 0.0],
        ])
        .unwrap();
        let pi = ProbVector::uniform(3);
        assert!(!check_reversible(&rot, &pi, 1e-12).unwrap());
    }

    #[test]
    fn reversible_birth_death() {
        let k = birth_death();
        let pi = ProbVector::new(vec![0.25, 0.5, 0.25]).unwrap();
        assert!(check_reversible(&k, &pi, 1e-12).unwrap());
    }

    #[test]
    fn reversibilize_fixes_reversible_kernels() {
        let k = birth_death();
        let pi = ProbVector::new(vec![0.25, 0.5, 0.25]).unwrap();
        let r = reversibilize(&k, &pi).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(r.entry(i, j), k.entry(i, j), epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn reversibilize_rotation_is_symmetrization() {
        // With uniform pi the adjoint is the transpose.
        let rot = FiniteKernel::new(vec![
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![1.0, 0.0, 0.0],
        ])
        .unwrap();
        let pi = ProbVector::uniform(3);
        let r = reversibilize(&rot, &pi).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = 0.5 * (rot.entry(i, j) + rot.entry(j, i));
                assert_abs_diff_eq!(r.entry(i, j), expected, epsilon = 1e-14);
            }
        }
        assert!(check_reversible(&r, &pi, 1e-12).unwrap());
    }

    #[test]
    fn reversibilize_zero_mass_rejected() {
        let k = birth_death();
        let pi = ProbVector::new(vec![0.5, 0.5, 0.0]).unwrap();
        assert!(matches!(
            reversibilize(&k, &pi),
            Err(KernelError::ZeroMassState { state: 2 })
        ));
    }

    #[test]
    fn iterate_flip_period_two() {
        let k = flip();
        let start = ProbVector::point_mass(2, 0);
        let one = iterate_distribution(&k, &start, 1).unwrap();
        assert_abs_diff_eq!(one.weight(1), 1.0);
        let two = iterate_distribution(&k, &start, 2).unwrap();
        assert_abs_diff_eq!(two.weight(0), 1.0);
    }

    #[test]
    fn iterate_lazy_flip_uniform_after_one() {
        let k = lazy_flip();
        let start = ProbVector::point_mass(2, 0);
        let one = iterate_distribution(&k, &start, 1).unwrap();
        assert_abs_diff_eq!(one.weight(0), 0.5);
        assert_abs_diff_eq!(one.weight(1), 0.5);
    }

    #[test]
    fn profile_flip_chain() {
        let k = flip();
        let pi = ProbVector::uniform(2);
        let p = contraction_profile(&k, &pi, 6).unwrap();
        for t in 0..=6 {
            assert_abs_diff_eq!(p.d(t), 0.5, epsilon = 1e-14);
            assert_abs_diff_eq!(p.dbar(t), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn profile_lazy_flip_chain() {
        let k = lazy_flip();
        let pi = ProbVector::uniform(2);
        let p = contraction_profile(&k, &pi, 4).unwrap();
        assert_abs_diff_eq!(p.d(0), 0.5);
        for t in 1..=4 {
            assert_abs_diff_eq!(p.d(t), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn row_sum_rejection_and_renormalization() {
        // 1e-8 off: rejected.
        let bad = FiniteKernel::new(vec![vec![0.5, 0.5 + 1e-8], vec![0.5, 0.5]]);
        assert!(matches!(bad, Err(KernelError::RowSumInvalid { .. })));
        // 1e-10 off: accepted and renormalized.
        let ok = FiniteKernel::new(vec![vec![0.5, 0.5 + 1e-10], vec![0.5, 0.5]]).unwrap();
        let sum: f64 = (0..2).map(|j| ok.entry(0, j)).sum();
        assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn cached_stationary_round_trip() {
        let k = birth_death().with_cached_stationary().unwrap();
        let pi = k.cached_stationary().unwrap();
        assert_abs_diff_eq!(pi.weight(1), 0.5, epsilon = 1e-10);
        assert!(birth_death().cached_stationary().is_none());
    }

    #[test]
    fn json_round_trip() {
        let k = birth_death();
        let parsed = FiniteKernel::from_json(&k.to_json()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(parsed.entry(i, j), k.entry(i, j), epsilon = 1e-15);
            }
        }
        assert_eq!(parsed.labels(), k.labels());
    }

    #[test]
    fn text_round_trip() {
        let k = birth_death();
        let parsed = FiniteKernel::from_text(&k.to_text()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(parsed.entry(i, j), k.entry(i, j), epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn text_parse_errors() {
        assert!(FiniteKernel::from_text("").is_err());
        assert!(FiniteKernel::from_text("2\n0.5 0.5\n0.5").is_err());
        assert!(FiniteKernel::from_text("2\n0.5 0.5\n0.5 0.5\n1.0").is_err());
    }
}
