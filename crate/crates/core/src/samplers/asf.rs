//! Almost-strong-Feller decompositions of the lazy k-skeleton
//! `g_L^(k) = (1 - p) G_1 + p G_2`.
//!
//! One trajectory segment runs the base chain through `k` steps of the
//! geometric laziness clock and tags a bad event:
//!
//! * Gibbs flavor: the coordinates drawn at base positions `0..=L(k)` fail
//!   to cover `{0, .., d-1}`. Including position 0 makes the conditional
//!   index law exactly reversal-invariant, which is what the good kernel's
//!   reversibility rests on, and only shrinks the bad event relative to the
//!   `2 d exp(-k / 4d)` bound.
//! * MH flavor: at least one base step was taken and the state never
//!   changed.
//!
//! `p` is the bad-event probability; `G_1`/`G_2` are the endpoint laws
//! conditioned on good/bad, realized by rejection resampling of whole
//! segments.

use rand::Rng;

use super::time_change::TimeChangeStream;
use super::{IndexedSampler, MarkovSampler, SamplerError, SamplerResult, StateDescriptor};
use crate::estimators::{wilson_estimate, McEstimate};
use crate::rng::StreamRng;

/// The index-sequence reversal `w_m(J) = (J[m], J[m-1], ..., J[0])`.
pub fn reversal<T: Clone>(seq: &[T]) -> Vec<T> {
    seq.iter().rev().cloned().collect()
}

/// Outcome of one clocked segment.
pub(crate) struct Segment<St> {
    pub endpoint: St,
    pub bad: bool,
    /// Gibbs flavor only: the coordinate indices at base positions
    /// `0..=L(k)`.
    #[allow(dead_code)]
    pub indices: Vec<usize>,
}

/// Runs `k` clock ticks of the lazy chain over a Gibbs-style sampler,
/// recording the coordinate indices the window carries. The index at the
/// final base position has not been consumed by a move yet, so it is drawn
/// here to complete the window.
pub(crate) fn gibbs_segment<S: IndexedSampler>(
    sampler: &mut S,
    start: &S::State,
    d: usize,
    k: u64,
    rng: &mut StreamRng,
) -> SamplerResult<Segment<S::State>> {
    sampler.reset();
    let mut clock = TimeChangeStream::new();
    let mut current = start.clone();
    let mut indices = Vec::new();
    for _ in 0..k {
        if clock.tick(rng) {
            current = sampler.step(&current, rng)?;
            indices.push(sampler.last_index().ok_or_else(|| {
                SamplerError::InvalidParameter(
                    "gibbs segment requires an index-reporting sampler".into(),
                )
            })?);
        }
    }
    indices.push(rng.random_range(0..d));
    let mut covered = vec![false; d];
    for &i in &indices {
        covered[i] = true;
    }
    let bad = covered.iter().any(|&c| !c);
    Ok(Segment {
        endpoint: current,
        bad,
        indices,
    })
}

/// Runs `k` clock ticks over an arbitrary sampler; bad means the chain took
/// at least one base step and never left its start.
pub(crate) fn mh_segment<S: MarkovSampler>(
    sampler: &mut S,
    start: &S::State,
    k: u64,
    rng: &mut StreamRng,
) -> SamplerResult<Segment<S::State>> {
    sampler.reset();
    let mut clock = TimeChangeStream::new();
    let mut current = start.clone();
    let mut base_steps = 0u64;
    let mut moved = false;
    for _ in 0..k {
        if clock.tick(rng) {
            base_steps += 1;
            current = sampler.step(&current, rng)?;
            if current != *start {
                moved = true;
            }
        }
    }
    Ok(Segment {
        endpoint: current,
        bad: base_steps >= 1 && !moved,
        indices: Vec::new(),
    })
}

/// Conditional endpoint sampler for the Gibbs flavor: resamples whole
/// segments until the event matches.
pub struct AsfConditionalGibbs<S: IndexedSampler> {
    inner: S,
    d: usize,
    k: u64,
    want_bad: bool,
    attempt_cap: u64,
}

impl<S: IndexedSampler> MarkovSampler for AsfConditionalGibbs<S> {
    type State = S::State;

    fn step(&mut self, state: &S::State, rng: &mut StreamRng) -> SamplerResult<S::State> {
        for _ in 0..self.attempt_cap {
            let seg = gibbs_segment(&mut self.inner, state, self.d, self.k, rng)?;
            if seg.bad == self.want_bad {
                return Ok(seg.endpoint);
            }
        }
        Err(SamplerError::ConditionCapExceeded {
            cap: self.attempt_cap,
        })
    }

    fn descriptor(&self) -> StateDescriptor {
        self.inner.descriptor()
    }

    fn reset(&mut self) {
        self.inner.reset();
    }
}

/// Conditional endpoint sampler for the MH flavor.
pub struct AsfConditionalMh<S: MarkovSampler> {
    inner: S,
    k: u64,
    want_bad: bool,
    attempt_cap: u64,
}

impl<S: MarkovSampler> MarkovSampler for AsfConditionalMh<S> {
    type State = S::State;

    fn step(&mut self, state: &S::State, rng: &mut StreamRng) -> SamplerResult<S::State> {
        for _ in 0..self.attempt_cap {
            let seg = mh_segment(&mut self.inner, state, self.k, rng)?;
            if seg.bad == self.want_bad {
                return Ok(seg.endpoint);
            }
        }
        Err(SamplerError::ConditionCapExceeded {
            cap: self.attempt_cap,
        })
    }

    fn descriptor(&self) -> StateDescriptor {
        self.inner.descriptor()
    }

    fn reset(&mut self) {
        self.inner.reset();
    }
}

/// The estimated decomposition: the bad-event frequency with its Wilson
/// interval, and the two conditional samplers. `c_target` is the largest
/// `C` certified by the interval's upper end, i.e. `p <= 1 / c_target`
/// at the stated confidence.
pub struct AsfDecomposition<G> {
    pub k: u64,
    pub event_indicator: Vec<bool>,
    pub p_estimate: McEstimate,
    pub c_target: f64,
    pub g1_sampler: G,
    pub g2_sampler: G,
}

const CONDITIONAL_ATTEMPT_CAP: u64 = 1_000_000;

fn c_target_from(p_estimate: &McEstimate) -> f64 {
    let upper = p_estimate.point + p_estimate.halfwidth;
    if upper <= 0.0 {
        f64::INFINITY
    } else {
        1.0 / upper
    }
}

/// Estimates the decomposition for a random-scan Gibbs sampler. The
/// factory is invoked for the probe trajectories and once per conditional
/// sampler.
pub fn asf_decompose_gibbs<S: IndexedSampler>(
    make_sampler: impl Fn() -> S,
    start: &S::State,
    d: usize,
    k: u64,
    n_mc: u64,
    confidence: f64,
    rng: &mut StreamRng,
) -> SamplerResult<AsfDecomposition<AsfConditionalGibbs<S>>> {
    if k == 0 {
        return Err(SamplerError::InvalidParameter(
            "k must be at least 1".into(),
        ));
    }
    let mut sampler = make_sampler();
    let mut event_indicator = Vec::with_capacity(n_mc as usize);
    let mut bad = 0u64;
    for _ in 0..n_mc {
        let seg = gibbs_segment(&mut sampler, start, d, k, rng)?;
        event_indicator.push(seg.bad);
        if seg.bad {
            bad += 1;
        }
    }
    let p_estimate = wilson_estimate(bad, n_mc, confidence);
    let c_target = c_target_from(&p_estimate);
    Ok(AsfDecomposition {
        k,
        event_indicator,
        p_estimate,
        c_target,
        g1_sampler: AsfConditionalGibbs {
            inner: make_sampler(),
            d,
            k,
            want_bad: false,
            attempt_cap: CONDITIONAL_ATTEMPT_CAP,
        },
        g2_sampler: AsfConditionalGibbs {
            inner: make_sampler(),
            d,
            k,
            want_bad: true,
            attempt_cap: CONDITIONAL_ATTEMPT_CAP,
        },
    })
}

/// Estimates the decomposition for a Metropolis-Hastings-style sampler.
pub fn asf_decompose_mh<S: MarkovSampler>(
    make_sampler: impl Fn() -> S,
    start: &S::State,
    k: u64,
    n_mc: u64,
    confidence: f64,
    rng: &mut StreamRng,
) -> SamplerResult<AsfDecomposition<AsfConditionalMh<S>>> {
    if k == 0 {
        return Err(SamplerError::InvalidParameter(
            "k must be at least 1".into(),
        ));
    }
    let mut sampler = make_sampler();
    let mut event_indicator = Vec::with_capacity(n_mc as usize);
    let mut bad = 0u64;
    for _ in 0..n_mc {
        let seg = mh_segment(&mut sampler, start, k, rng)?;
        event_indicator.push(seg.bad);
        if seg.bad {
            bad += 1;
        }
    }
    let p_estimate = wilson_estimate(bad, n_mc, confidence);
    let c_target = c_target_from(&p_estimate);
    Ok(AsfDecomposition {
        k,
        event_indicator,
        p_estimate,
        c_target,
        g1_sampler: AsfConditionalMh {
            inner: make_sampler(),
            k,
            want_bad: false,
            attempt_cap: CONDITIONAL_ATTEMPT_CAP,
        },
        g2_sampler: AsfConditionalMh {
            inner: make_sampler(),
            k,
            want_bad: true,
            attempt_cap: CONDITIONAL_ATTEMPT_CAP,
        },
    })
}
