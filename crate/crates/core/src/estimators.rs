//! Monte Carlo estimation with explicit confidence bounds: hitting times
//! with censoring flags, large hitting times over supplied set families,
//! one-step total variation against exact references, and the
//! coupon-collector / bad-event probability probes.
//!
//! Interval conventions: Hoeffding/DKW bounds for probabilities and
//! histogram TV (distribution-free), Wilson intervals for Bernoulli
//! frequencies, CLT intervals for hitting-time means. Censored runs are
//! counted at the horizon and reported, never dropped.

use rand::Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::kernel::{tv_slices, ProbVector};
use crate::rng::StreamRng;
use crate::samplers::{MarkovSampler, SamplerError, SamplerResult, TimeChangeStream};

/// A point estimate with an explicit error bar.
#[derive(Debug, Clone, serde::Serialize)]
pub struct McEstimate {
    pub point: f64,
    pub halfwidth: f64,
    pub confidence: f64,
    pub n_samples: u64,
    /// Trajectories that hit the horizon before the event; when nonzero the
    /// point estimate is a lower bound.
    pub n_censored: u64,
}

/// Standard normal quantile at probability `p`.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::new(0.0, 1.0)
        .expect("standard normal")
        .inverse_cdf(p)
}

/// Two-sided z-score for a confidence level.
pub fn z_for_confidence(confidence: f64) -> f64 {
    normal_quantile(0.5 + confidence / 2.0)
}

/// Wilson score interval for a Bernoulli proportion.
pub fn wilson_interval(successes: u64, n: u64, confidence: f64) -> (f64, f64) {
    let z = z_for_confidence(confidence);
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let halfwidth = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - halfwidth).max(0.0), (center + halfwidth).min(1.0))
}

/// Bernoulli frequency as an [`McEstimate`] with the Wilson halfwidth.
pub fn wilson_estimate(successes: u64, n: u64, confidence: f64) -> McEstimate {
    let (lower, upper) = wilson_interval(successes, n, confidence);
    McEstimate {
        point: successes as f64 / n as f64,
        halfwidth: (upper - lower) / 2.0,
        confidence,
        n_samples: n,
        n_censored: 0,
    }
}

/// DKW-style band for an empirical distribution at confidence `1 - delta`:
/// `sqrt(ln(2 / delta) / (2 n))`.
pub fn dkw_band(n: u64, confidence: f64) -> f64 {
    let delta = 1.0 - confidence;
    ((2.0 / delta).ln() / (2.0 * n as f64)).sqrt()
}

/// Expected hitting times by direct simulation, one estimate per start.
/// Inclusive convention: a start inside the target reports zero exactly.
pub fn mc_expected_hitting<S: MarkovSampler>(
    sampler: &mut S,
    target: impl Fn(&S::State) -> bool,
    starts: &[S::State],
    n: u64,
    horizon: u64,
    confidence: f64,
    rng: &mut StreamRng,
) -> SamplerResult<Vec<McEstimate>> {
    let z = z_for_confidence(confidence);
    let mut out = Vec::with_capacity(starts.len());
    for start in starts {
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut censored = 0u64;
        for _ in 0..n {
            sampler.reset();
            let mut tau = horizon;
            if target(start) {
                tau = 0;
            } else {
                let mut state = start.clone();
                for t in 1..=horizon {
                    state = sampler.step(&state, rng)?;
                    if target(&state) {
                        tau = t;
                        break;
                    }
                    if t == horizon {
                        censored += 1;
                    }
                }
            }
            let tau = tau as f64;
            sum += tau;
            sum_sq += tau * tau;
        }
        let mean = sum / n as f64;
        let variance = (sum_sq / n as f64 - mean * mean).max(0.0);
        out.push(McEstimate {
            point: mean,
            halfwidth: z * (variance / n as f64).sqrt(),
            confidence,
            n_samples: n,
            n_censored: censored,
        });
    }
    Ok(out)
}

/// A target set with its stationary mass supplied analytically. The
/// feasibility test never estimates the mass; compounding two estimates
/// would invalidate the confidence accounting.
pub struct MassedSet<St> {
    pub mass: f64,
    pub indicator: Box<dyn Fn(&St) -> bool + Send + Sync>,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct McLargeHitting {
    /// Smallest `t` whose worst-case Wilson lower bound beats the
    /// threshold, or `None` if none within the horizon. Over a sampled
    /// family this is an estimate of the large hitting time restricted to
    /// the probed sets, hence a lower bound on the unrestricted quantity.
    pub time: Option<u64>,
    pub n_feasible_sets: usize,
    pub n_starts: usize,
    pub threshold: f64,
}

/// Empirical large hitting time over a supplied family: smallest `t` by
/// which every feasible member is hit from every start with Wilson-lower
/// probability above the threshold.
#[allow(clippy::too_many_arguments)]
pub fn mc_large_hitting<S: MarkovSampler>(
    sampler: &mut S,
    family: &[MassedSet<S::State>],
    alpha: f64,
    threshold: f64,
    starts: &[S::State],
    n: u64,
    horizon: u64,
    confidence: f64,
    rng: &mut StreamRng,
) -> SamplerResult<McLargeHitting> {
    let feasible: Vec<&MassedSet<S::State>> =
        family.iter().filter(|s| s.mass >= alpha - 1e-12).collect();
    if feasible.is_empty() {
        return Err(SamplerError::InvalidParameter(
            "no family member reaches the mass threshold".into(),
        ));
    }
    // counts[set][start][t] = number of trajectories with tau <= t.
    let steps = horizon as usize + 1;
    let mut counts = vec![vec![vec![0u64; steps]; starts.len()]; feasible.len()];
    for (si, set) in feasible.iter().enumerate() {
        for (xi, start) in starts.iter().enumerate() {
            for _ in 0..n {
                sampler.reset();
                let mut state = start.clone();
                let mut tau: Option<usize> = None;
                if (set.indicator)(&state) {
                    tau = Some(0);
                } else {
                    for t in 1..=horizon {
                        state = sampler.step(&state, rng)?;
                        if (set.indicator)(&state) {
                            tau = Some(t as usize);
                            break;
                        }
                    }
                }
                if let Some(tau) = tau {
                    for slot in counts[si][xi][tau..].iter_mut() {
                        *slot += 1;
                    }
                }
            }
        }
    }
    let mut time = None;
    'outer: for t in 0..steps {
        for per_set in &counts {
            for per_start in per_set {
                let (lower, _) = wilson_interval(per_start[t], n, confidence);
                if lower <= threshold {
                    continue 'outer;
                }
            }
        }
        time = Some(t as u64);
        break;
    }
    Ok(McLargeHitting {
        time,
        n_feasible_sets: feasible.len(),
        n_starts: starts.len(),
        threshold,
    })
}

/// Total variation between the empirical one-step histogram from `start`
/// and an exact reference row, with the DKW-style band as the halfwidth.
/// The sampler is reset before every draw so each sample sees a fresh
/// clock.
pub fn empirical_tv_vs_exact<S: MarkovSampler<State = usize>>(
    sampler: &mut S,
    start: usize,
    exact: &ProbVector,
    n: u64,
    confidence: f64,
    rng: &mut StreamRng,
) -> SamplerResult<McEstimate> {
    let mut histogram = vec![0u64; exact.dim()];
    for _ in 0..n {
        sampler.reset();
        let y = sampler.step(&start, rng)?;
        if y >= exact.dim() {
            return Err(SamplerError::InvalidParameter(format!(
                "sampled state {y} outside the reference support"
            )));
        }
        histogram[y] += 1;
    }
    let empirical: Vec<f64> = histogram.iter().map(|&c| c as f64 / n as f64).collect();
    Ok(McEstimate {
        point: tv_slices(&empirical, exact.as_slice()),
        halfwidth: dkw_band(n, confidence),
        confidence,
        n_samples: n,
        n_censored: 0,
    })
}

/// Which bad-event probability to probe.
#[derive(Debug, Clone, Copy)]
pub enum ProbeFlavor {
    /// `t` uniform draws from `d` coupons; event = some coupon missed.
    /// Analytic comparison bound: `d exp(-t / d)`.
    Plain { t: u64 },
    /// Indices of the lazy chain through `k` clocked steps; event = some
    /// coordinate missed. Bound: `2 d exp(-k / 4d)`.
    LazyGibbs { k: u64 },
    /// A chain that moves with probability `gamma` per base step, run
    /// through `k` clocked steps; event = at least one base step taken and
    /// no move. Bound: `(1 - gamma / 2)^k`.
    Mh { gamma: f64, k: u64 },
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ProbeResult {
    pub estimate: McEstimate,
    /// The analytic bound evaluated at the same parameters.
    pub bound: f64,
    /// `point - 3 halfwidth <= bound`.
    pub pass: bool,
}

/// Empirical bad-event frequency plus the analytic bound at the same
/// parameters.
pub fn coupon_and_p_probe(
    d: usize,
    n: u64,
    flavor: ProbeFlavor,
    confidence: f64,
    rng: &mut StreamRng,
) -> SamplerResult<ProbeResult> {
    if d == 0 {
        return Err(SamplerError::InvalidParameter("d must be positive".into()));
    }
    let mut bad = 0u64;
    let bound = match flavor {
        ProbeFlavor::Plain { t } => {
            for _ in 0..n {
                let mut covered = vec![false; d];
                for _ in 0..t {
                    covered[rng.random_range(0..d)] = true;
                }
                if covered.iter().any(|&c| !c) {
                    bad += 1;
                }
            }
            d as f64 * (-(t as f64) / d as f64).exp()
        }
        ProbeFlavor::LazyGibbs { k } => {
            for _ in 0..n {
                let mut clock = TimeChangeStream::new();
                for _ in 0..k {
                    clock.tick(rng);
                }
                // Indices at base positions 0..=L(k) are i.i.d. uniform.
                let draws = clock.l() + 1;
                let mut covered = vec![false; d];
                for _ in 0..draws {
                    covered[rng.random_range(0..d)] = true;
                }
                if covered.iter().any(|&c| !c) {
                    bad += 1;
                }
            }
            2.0 * d as f64 * (-(k as f64) / (4.0 * d as f64)).exp()
        }
        ProbeFlavor::Mh { gamma, k } => {
            if !(0.0..=1.0).contains(&gamma) {
                return Err(SamplerError::InvalidParameter(format!(
                    "gamma {gamma} outside [0, 1]"
                )));
            }
            for _ in 0..n {
                let mut clock = TimeChangeStream::new();
                let mut base_steps = 0u64;
                let mut moved = false;
                for _ in 0..k {
                    if clock.tick(rng) {
                        base_steps += 1;
                        if rng.random::<f64>() < gamma {
                            moved = true;
                        }
                    }
                }
                if base_steps >= 1 && !moved {
                    bad += 1;
                }
            }
            (1.0 - gamma / 2.0).powi(k as i32)
        }
    };
    let estimate = wilson_estimate(bad, n, confidence);
    let pass = estimate.point - 3.0 * estimate.halfwidth <= bound;
    Ok(ProbeResult {
        estimate,
        bound,
        pass,
    })
}
