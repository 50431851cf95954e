//! Path-level time changes: the geometric laziness clock, the k-skeleton,
//! the trace on a watched set, and the composite G sampler. Each wrapper is
//! equal in law to the corresponding exact kernel transformation on finite
//! fixtures, which the estimator suite checks directly.

use rand::Rng;

use super::{MarkovSampler, SamplerError, SamplerResult, StateDescriptor};
use crate::rng::StreamRng;

/// Membership test for the watched set of a trace.
pub type StateIndicator<St> = Box<dyn Fn(&St) -> bool + Send + Sync>;

/// The laziness clock: i.i.d. holding times `zeta_i >= 1` with
/// `P(zeta = j) = 2^-j` (mean 2), and the derived count
/// `L(t) = max { i : zeta_1 + ... + zeta_i <= t }` of inner-chain steps
/// taken by output time `t`. Always `L(0) = 0` and `L(t) <= t`.
#[derive(Debug, Clone, Default)]
pub struct TimeChangeStream {
    t: u64,
    l: u64,
    remaining: Option<u64>,
}

impl TimeChangeStream {
    pub fn new() -> Self {
        Self::default()
    }

    /// Advances the output clock by one tick; returns `true` when the
    /// inner chain advances with it.
    pub fn tick(&mut self, rng: &mut StreamRng) -> bool {
        self.t += 1;
        let remaining = self
            .remaining
            .get_or_insert_with(|| draw_geometric_mean2(rng));
        *remaining -= 1;
        if *remaining == 0 {
            self.remaining = None;
            self.l += 1;
            true
        } else {
            false
        }
    }

    /// Output time `t`.
    pub fn t(&self) -> u64 {
        self.t
    }

    /// Inner-chain time `L(t)`.
    pub fn l(&self) -> u64 {
        self.l
    }

    pub fn reset(&mut self) {
        *self = Self::default();
    }
}

/// Geometric on `{1, 2, ...}` with `P(j) = 2^-j`.
pub(crate) fn draw_geometric_mean2(rng: &mut StreamRng) -> u64 {
    let mut j = 1;
    while rng.random::<bool>() {
        j += 1;
    }
    j
}

/// Holds each inner state for a geometric(mean 2) number of output steps;
/// equal in law to the lazy kernel.
#[derive(Debug)]
pub struct LazySampler<S: MarkovSampler> {
    inner: S,
    clock: TimeChangeStream,
}

impl<S: MarkovSampler> LazySampler<S> {
    pub fn new(inner: S) -> Self {
        Self {
            inner,
            clock: TimeChangeStream::new(),
        }
    }

    pub fn clock(&self) -> &TimeChangeStream {
        &self.clock
    }
}

impl<S: MarkovSampler> MarkovSampler for LazySampler<S> {
    type State = S::State;

    fn step(&mut self, state: &S::State, rng: &mut StreamRng) -> SamplerResult<S::State> {
        if self.clock.tick(rng) {
            self.inner.step(state, rng)
        } else {
            Ok(state.clone())
        }
    }

    fn descriptor(&self) -> StateDescriptor {
        self.inner.descriptor()
    }

    fn reset(&mut self) {
        self.clock.reset();
        self.inner.reset();
    }
}

/// Observes the inner chain every `k` steps; equal in law to `P^k`.
#[derive(Debug)]
pub struct SkeletonSampler<S: MarkovSampler> {
    inner: S,
    k: u64,
}

impl<S: MarkovSampler> SkeletonSampler<S> {
    pub fn new(inner: S, k: u64) -> SamplerResult<Self> {
        if k == 0 {
            return Err(SamplerError::InvalidParameter(
                "skeleton order must be at least 1".into(),
            ));
        }
        Ok(Self { inner, k })
    }
}

impl<S: MarkovSampler> MarkovSampler for SkeletonSampler<S> {
    type State = S::State;

    fn step(&mut self, state: &S::State, rng: &mut StreamRng) -> SamplerResult<S::State> {
        let mut current = state.clone();
        for _ in 0..self.k {
            current = self.inner.step(&current, rng)?;
        }
        Ok(current)
    }

    fn descriptor(&self) -> StateDescriptor {
        self.inner.descriptor()
    }

    fn reset(&mut self) {
        self.inner.reset();
    }
}

/// Watches the inner chain only at its visits to the indicated set,
/// realizing the entrance times `eta_{i+1} = min { t > eta_i : X_t in S }`
/// by direct path simulation. A step cap guards against excursions that
/// never return.
pub struct TraceSampler<S: MarkovSampler> {
    inner: S,
    in_set: StateIndicator<S::State>,
    step_cap: u64,
}

impl<S: MarkovSampler> TraceSampler<S> {
    pub fn new(inner: S, in_set: StateIndicator<S::State>, step_cap: u64) -> Self {
        Self {
            inner,
            in_set,
            step_cap,
        }
    }

    /// Projects a start onto its first visit to the watched set
    /// (`eta_0 = min { t >= 0 : X_t in S }`); the identity for starts
    /// already inside.
    pub fn project_start(
        &mut self,
        state: &S::State,
        rng: &mut StreamRng,
    ) -> SamplerResult<S::State> {
        if (self.in_set)(state) {
            return Ok(state.clone());
        }
        let mut current = state.clone();
        for _ in 0..self.step_cap {
            current = self.inner.step(&current, rng)?;
            if (self.in_set)(&current) {
                return Ok(current);
            }
        }
        Err(SamplerError::TraceStepCapExceeded { cap: self.step_cap })
    }
}

impl<S: MarkovSampler> MarkovSampler for TraceSampler<S> {
    type State = S::State;

    fn step(&mut self, state: &S::State, rng: &mut StreamRng) -> SamplerResult<S::State> {
        let mut current = state.clone();
        for _ in 0..self.step_cap {
            current = self.inner.step(&current, rng)?;
            if (self.in_set)(&current) {
                return Ok(current);
            }
        }
        Err(SamplerError::TraceStepCapExceeded { cap: self.step_cap })
    }

    fn descriptor(&self) -> StateDescriptor {
        self.inner.descriptor()
    }

    fn reset(&mut self) {
        self.inner.reset();
    }
}

/// The composite sampler for `G = lazy(skeleton(lazy(P), k))`, assembled in
/// the sampling order: run the chain, repeat each element a geometric(2)
/// number of times, take every k-th element, repeat again.
pub type GSampler<S> = LazySampler<SkeletonSampler<LazySampler<S>>>;

pub fn g_sampler<S: MarkovSampler>(inner: S, k: u64) -> SamplerResult<GSampler<S>> {
    Ok(LazySampler::new(SkeletonSampler::new(
        LazySampler::new(inner),
        k,
    )?))
}

/// Which transformation to apply to a base sampler.
pub enum TimeChangeMode<St> {
    Lazy,
    Skeleton(u64),
    Trace {
        in_set: StateIndicator<St>,
        step_cap: u64,
    },
    G(u64),
}

/// A sampler equal in law to the transformed kernel.
pub enum TimeChangedSampler<S: MarkovSampler> {
    Lazy(LazySampler<S>),
    Skeleton(SkeletonSampler<S>),
    Trace(TraceSampler<S>),
    G(GSampler<S>),
}

pub fn apply_time_change<S: MarkovSampler>(
    inner: S,
    mode: TimeChangeMode<S::State>,
) -> SamplerResult<TimeChangedSampler<S>> {
    Ok(match mode {
        TimeChangeMode::Lazy => TimeChangedSampler::Lazy(LazySampler::new(inner)),
        TimeChangeMode::Skeleton(k) => {
            TimeChangedSampler::Skeleton(SkeletonSampler::new(inner, k)?)
        }
        TimeChangeMode::Trace { in_set, step_cap } => {
            TimeChangedSampler::Trace(TraceSampler::new(inner, in_set, step_cap))
        }
        TimeChangeMode::G(k) => TimeChangedSampler::G(g_sampler(inner, k)?),
    })
}

impl<S: MarkovSampler> MarkovSampler for TimeChangedSampler<S> {
    type State = S::State;

    fn step(&mut self, state: &S::State, rng: &mut StreamRng) -> SamplerResult<S::State> {
        match self {
            TimeChangedSampler::Lazy(s) => s.step(state, rng),
            TimeChangedSampler::Skeleton(s) => s.step(state, rng),
            TimeChangedSampler::Trace(s) => s.step(state, rng),
            TimeChangedSampler::G(s) => s.step(state, rng),
        }
    }

    fn descriptor(&self) -> StateDescriptor {
        match self {
            TimeChangedSampler::Lazy(s) => s.descriptor(),
            TimeChangedSampler::Skeleton(s) => s.descriptor(),
            TimeChangedSampler::Trace(s) => s.descriptor(),
            TimeChangedSampler::G(s) => s.descriptor(),
        }
    }

    fn reset(&mut self) {
        match self {
            TimeChangedSampler::Lazy(s) => s.reset(),
            TimeChangedSampler::Skeleton(s) => s.reset(),
            TimeChangedSampler::Trace(s) => s.reset(),
            TimeChangedSampler::G(s) => s.reset(),
        }
    }
}
