//! General-state Markov samplers and path-level transformations.
//!
//! A [`MarkovSampler`] produces one transition at a time from an explicit
//! randomness stream, so every trajectory is replayable from its
//! `(seed, stream)` key. Samplers are single-trajectory objects: wrappers
//! like the lazy clock keep internal holding state, and [`MarkovSampler::reset`]
//! clears it when a fresh trajectory is started. Parallelism comes from
//! constructing independent instances on split streams, never from sharing.

mod asf;
mod gibbs;
mod mh;
mod time_change;

pub use asf::{
    asf_decompose_gibbs, asf_decompose_mh, reversal, AsfConditionalGibbs, AsfConditionalMh,
    AsfDecomposition,
};
pub use gibbs::{bivariate_gaussian_gibbs, make_gibbs, GibbsKernel, GibbsSampler};
pub use mh::{
    core_set, estimate_gamma, geometric_holding_pmf, make_mh, mh_skeleton, GammaEstimate, MhKernel,
    MhSampler, MhSkeletonSampler,
};
pub use time_change::{
    apply_time_change, g_sampler, GSampler, LazySampler, SkeletonSampler, TimeChangeMode,
    TimeChangeStream, TimeChangedSampler, TraceSampler,
};

use thiserror::Error;

use crate::kernel::FiniteKernel;
use crate::rng::StreamRng;

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("non-finite log-density at {point:?}")]
    NonFiniteDensity { point: Vec<f64> },
    #[error("trace excursion exceeded the step cap {cap}")]
    TraceStepCapExceeded { cap: u64 },
    #[error("holding run exceeded the cap {cap} without a move")]
    HoldingCapExceeded { cap: u64 },
    #[error("conditional resampling exceeded the attempt cap {cap}")]
    ConditionCapExceeded { cap: u64 },
    #[error("invalid sampler parameter: {0}")]
    InvalidParameter(String),
}

pub type SamplerResult<T> = Result<T, SamplerError>;

/// Dimension/domain metadata for a sampler's state space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateDescriptor {
    Finite { n_states: usize },
    Continuous { dimension: usize },
}

/// One-step sampling interface. Implementations draw all randomness from
/// the supplied stream; identical streams replay identical trajectories.
pub trait MarkovSampler {
    type State: Clone + PartialEq + std::fmt::Debug;

    fn step(&mut self, state: &Self::State, rng: &mut StreamRng) -> SamplerResult<Self::State>;

    fn descriptor(&self) -> StateDescriptor;

    /// Clears internal clocks so the next step begins a fresh trajectory.
    fn reset(&mut self) {}
}

/// Samplers whose steps update one coordinate and expose which.
pub trait IndexedSampler: MarkovSampler {
    /// Coordinate updated by the most recent step, if any step was taken.
    fn last_index(&self) -> Option<usize>;
}

/// Samples a finite-state chain from its exact transition matrix.
#[derive(Debug, Clone)]
pub struct KernelSampler {
    kernel: FiniteKernel,
}

impl KernelSampler {
    pub fn new(kernel: FiniteKernel) -> Self {
        Self { kernel }
    }

    pub fn kernel(&self) -> &FiniteKernel {
        &self.kernel
    }
}

impl MarkovSampler for KernelSampler {
    type State = usize;

    fn step(&mut self, state: &usize, rng: &mut StreamRng) -> SamplerResult<usize> {
        use rand::Rng;
        let n = self.kernel.n_states();
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for j in 0..n {
            acc += self.kernel.entry(*state, j);
            if u < acc {
                return Ok(j);
            }
        }
        // Row sums to one; rounding can leave u just past the accumulated
        // mass, in which case the last positive entry wins.
        Ok((0..n)
            .rev()
            .find(|&j| self.kernel.entry(*state, j) > 0.0)
            .unwrap_or(n - 1))
    }

    fn descriptor(&self) -> StateDescriptor {
        StateDescriptor::Finite {
            n_states: self.kernel.n_states(),
        }
    }
}
