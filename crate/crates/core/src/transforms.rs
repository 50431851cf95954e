//! Exact kernel transformations: lazy, k-skeleton, trace on a watched set,
//! the composite `G = lazy(skeleton(lazy(P), k))`, maximal couplings, and
//! controlled uniform-mixing perturbations.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::kernel::{FiniteKernel, KernelError, ProbVector};

#[derive(Debug, Error)]
pub enum TransformError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("skeleton order must be at least 1")]
    ZeroSkeleton,
    #[error("watched set is empty")]
    EmptyWatchedSet,
    #[error("watched-set index {index} out of range for {n} states")]
    WatchedSetOutOfRange { index: usize, n: usize },
    #[error("complement cannot reach the watched set from state {state}")]
    AbsorbingComplement { state: usize },
    #[error("perturbation level {0} outside [0, 1]")]
    DeltaOutOfRange(f64),
}

pub type TransformResult<T> = Result<T, TransformError>;

/// The lazy kernel `P/2 + I/2`.
pub fn lazy(kernel: &FiniteKernel) -> FiniteKernel {
    let n = kernel.n_states();
    let mut m = kernel.matrix() * 0.5;
    for i in 0..n {
        m[(i, i)] += 0.5;
    }
    FiniteKernel::from_matrix_unchecked(m, kernel.labels().to_vec())
}

/// The k-skeleton `P^k`, computed by repeated squaring. Rejects `k = 0`.
pub fn skeleton(kernel: &FiniteKernel, k: u64) -> TransformResult<FiniteKernel> {
    if k == 0 {
        return Err(TransformError::ZeroSkeleton);
    }
    let m = matrix_power(kernel.matrix(), k);
    Ok(FiniteKernel::from_matrix_unchecked(
        m,
        kernel.labels().to_vec(),
    ))
}

pub(crate) fn matrix_power(matrix: &DMatrix<f64>, mut k: u64) -> DMatrix<f64> {
    let n = matrix.nrows();
    let mut result = DMatrix::identity(n, n);
    let mut base = matrix.clone();
    while k > 0 {
        if k & 1 == 1 {
            result *= &base;
        }
        k >>= 1;
        if k > 0 {
            base = &base * &base;
        }
    }
    result
}

/// The composite `G = lazy(skeleton(lazy(P), k))`.
///
/// Note that skeleton-then-lazy and lazy-then-skeleton do not generally
/// commute; the order here is fixed to skeleton of the lazy chain, then
/// lazy again.
pub fn build_g(kernel: &FiniteKernel, k: u64) -> TransformResult<FiniteKernel> {
    Ok(lazy(&skeleton(&lazy(kernel), k)?))
}

/// A watched subset for the trace reduction.
#[derive(Debug, Clone)]
pub struct TraceSpec {
    subset: Vec<usize>,
    pub complement_solver_tol: f64,
}

impl TraceSpec {
    /// Validates non-emptiness and index range; sorts and dedups the set.
    pub fn new(mut subset: Vec<usize>, n: usize) -> TransformResult<Self> {
        subset.sort_unstable();
        subset.dedup();
        if subset.is_empty() {
            return Err(TransformError::EmptyWatchedSet);
        }
        if let Some(&bad) = subset.iter().find(|&&i| i >= n) {
            return Err(TransformError::WatchedSetOutOfRange { index: bad, n });
        }
        Ok(Self {
            subset,
            complement_solver_tol: 1e-12,
        })
    }

    pub fn subset(&self) -> &[usize] {
        &self.subset
    }
}

/// States from which `targets` is reachable along the support pattern.
pub(crate) fn can_reach(kernel: &FiniteKernel, targets: &[usize]) -> Vec<bool> {
    let n = kernel.n_states();
    // Predecessor lists of the support digraph.
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, succs) in kernel.support_successors().iter().enumerate() {
        for &j in succs {
            preds[j].push(i);
        }
    }
    let mut reached = vec![false; n];
    let mut queue: Vec<usize> = targets.to_vec();
    for &t in targets {
        reached[t] = true;
    }
    while let Some(j) = queue.pop() {
        for &i in &preds[j] {
            if !reached[i] {
                reached[i] = true;
                queue.push(i);
            }
        }
    }
    reached
}

/// The watched-set reduction
/// `Q = P_SS + P_{S,S^c} (I - P_{S^c,S^c})^{-1} P_{S^c,S}`,
/// equal in law to the chain observed at its visits to `S`.
///
/// Requires every complement state to reach `S`; structurally absorbing
/// complements are rejected before the solve, and numerically singular
/// excursion systems after it.
pub fn trace_exact(kernel: &FiniteKernel, spec: &TraceSpec) -> TransformResult<FiniteKernel> {
    let n = kernel.n_states();
    if let Some(&bad) = spec.subset().iter().find(|&&i| i >= n) {
        return Err(TransformError::WatchedSetOutOfRange { index: bad, n });
    }
    let in_set = {
        let mut mask = vec![false; n];
        for &i in spec.subset() {
            mask[i] = true;
        }
        mask
    };
    let s: Vec<usize> = spec.subset().to_vec();
    let c: Vec<usize> = (0..n).filter(|&i| !in_set[i]).collect();
    let ns = s.len();
    let nc = c.len();

    let reach = can_reach(kernel, &s);
    if let Some(&stuck) = c.iter().find(|&&i| !reach[i]) {
        return Err(TransformError::AbsorbingComplement { state: stuck });
    }
    if nc == 0 {
        return Ok(kernel.clone());
    }

    let m = kernel.matrix();
    let p_ss = DMatrix::from_fn(ns, ns, |a, b| m[(s[a], s[b])]);
    let p_sc = DMatrix::from_fn(ns, nc, |a, b| m[(s[a], c[b])]);
    let p_cs = DMatrix::from_fn(nc, ns, |a, b| m[(c[a], s[b])]);
    let p_cc = DMatrix::from_fn(nc, nc, |a, b| m[(c[a], c[b])]);

    let system = DMatrix::identity(nc, nc) - p_cc;
    let excursions = system
        .lu()
        .solve(&p_cs)
        .ok_or(TransformError::AbsorbingComplement { state: c[0] })?;
    let q = p_ss + p_sc * excursions;

    let labels = s.iter().map(|&i| kernel.labels()[i].clone()).collect();
    Ok(FiniteKernel::from_matrix_unchecked(q, labels))
}

/// A coupling of two distributions given by its joint matrix.
#[derive(Debug, Clone)]
pub struct CouplingMatrix {
    pub joint: DMatrix<f64>,
    pub mu: ProbVector,
    pub nu: ProbVector,
}

impl CouplingMatrix {
    /// Probability mass off the diagonal, i.e. `P[X != Y]`.
    pub fn off_diagonal_mass(&self) -> f64 {
        let n = self.joint.nrows();
        let mut mass = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    mass += self.joint[(i, j)];
                }
            }
        }
        mass
    }

    pub fn row_marginal(&self) -> Vec<f64> {
        (0..self.joint.nrows())
            .map(|i| self.joint.row(i).sum())
            .collect()
    }

    pub fn column_marginal(&self) -> Vec<f64> {
        (0..self.joint.ncols())
            .map(|j| self.joint.column(j).sum())
            .collect()
    }
}

/// The maximal coupling of `mu` and `nu`: overlap mass sits on the
/// diagonal, the mismatch is the product of the normalized residuals, and
/// `P[X != Y]` equals the total variation distance exactly.
pub fn maximal_coupling(mu: &ProbVector, nu: &ProbVector) -> TransformResult<CouplingMatrix> {
    if mu.dim() != nu.dim() {
        return Err(KernelError::DimensionMismatch {
            expected: mu.dim(),
            found: nu.dim(),
        }
        .into());
    }
    let n = mu.dim();
    let overlap: Vec<f64> = (0..n).map(|i| mu.weight(i).min(nu.weight(i))).collect();
    let overlap_mass: f64 = overlap.iter().sum();
    let mut joint = DMatrix::zeros(n, n);
    for i in 0..n {
        joint[(i, i)] = overlap[i];
    }
    let mismatch = 1.0 - overlap_mass;
    if mismatch > 1e-15 {
        for i in 0..n {
            let ri = mu.weight(i) - overlap[i];
            if ri <= 0.0 {
                continue;
            }
            for j in 0..n {
                let cj = nu.weight(j) - overlap[j];
                if cj <= 0.0 {
                    continue;
                }
                joint[(i, j)] += ri * cj / mismatch;
            }
        }
    }
    Ok(CouplingMatrix {
        joint,
        mu: mu.clone(),
        nu: nu.clone(),
    })
}

/// `(1 - delta) P + delta U` with uniform rows `U`; every row of the output
/// is within total variation `delta` of the corresponding row of `P`.
pub fn perturb_within(kernel: &FiniteKernel, delta: f64) -> TransformResult<FiniteKernel> {
    if !(0.0..=1.0).contains(&delta) || delta.is_nan() {
        return Err(TransformError::DeltaOutOfRange(delta));
    }
    let n = kernel.n_states();
    let uniform = delta / n as f64;
    let mut m = kernel.matrix() * (1.0 - delta);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] += uniform;
        }
    }
    Ok(FiniteKernel::from_matrix_unchecked(
        m,
        kernel.labels().to_vec(),
    ))
}
