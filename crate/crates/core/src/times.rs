//! Exact time quantities on finite chains: mixing times (plain and
//! standardized), hitting moments and tail probabilities, the maximum and
//! large hitting times over all sufficiently heavy target sets, the
//! equivalence report tying them together, and the constructive
//! easy-direction certificate bounding the lazy-chain hitting time by a
//! multiple of the lazy mixing time.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::kernel::{self, tv_slices, ContractionProfile, FiniteKernel, KernelError, ProbVector};
use crate::transforms::{self, matrix_power, TransformError};

/// Subset enumeration is exact up to this many states; larger chains must
/// supply a candidate set family.
pub const ENUMERATION_CAP: usize = 16;

/// Feasibility slack for `pi(A) >= alpha`: masses assembled from rational
/// weights land within float rounding of the threshold, and the boundary
/// set is meant to be feasible.
const MASS_SLACK: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum TimesError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error("epsilon {0} outside (0, 1)")]
    EpsilonOutOfRange(f64),
    #[error("alpha {0} outside (0, 1)")]
    AlphaOutOfRange(f64),
    #[error("pi is not stationary for the kernel (residual {residual})")]
    NonStationaryPi { residual: f64 },
    #[error("{n} states exceeds the enumeration cap {cap} and no candidate family was supplied")]
    TooManyStates { n: usize, cap: usize },
    #[error("target set is empty")]
    EmptyTarget,
    #[error("no finite time found within cap {cap}")]
    NoFiniteTime { cap: u64 },
}

pub type TimesResult<T> = Result<T, TimesError>;

/// Either the first time a contraction drops below the threshold, or a
/// marker that the search horizon was exhausted. Periodic chains are
/// legitimate inputs, so `Unmixed` is a result, not an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixTime {
    Mixed(u64),
    Unmixed,
}

impl MixTime {
    pub fn finite(&self) -> Option<u64> {
        match self {
            MixTime::Mixed(t) => Some(*t),
            MixTime::Unmixed => None,
        }
    }

    pub fn is_mixed(&self) -> bool {
        matches!(self, MixTime::Mixed(_))
    }
}

impl Serialize for MixTime {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            MixTime::Mixed(t) => serializer.serialize_u64(*t),
            MixTime::Unmixed => serializer.serialize_str("unmixed"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MixingResult {
    pub epsilon: f64,
    pub time: MixTime,
    /// Contraction values for `t = 0..=` the found time (or the exhausted
    /// horizon), recorded as computed during the scan.
    #[serde(skip)]
    pub profile_used: ContractionProfile,
    /// `true` when the threshold was applied to `dbar` instead of `d`.
    pub standardized: bool,
}

fn check_stationary(kernel: &FiniteKernel, pi: &ProbVector) -> TimesResult<()> {
    let n = kernel.n_states();
    if pi.dim() != n {
        return Err(KernelError::DimensionMismatch {
            expected: n,
            found: pi.dim(),
        }
        .into());
    }
    let iterated = kernel::iterate_distribution(kernel, pi, 1)?;
    let residual = iterated
        .as_slice()
        .iter()
        .zip(pi.as_slice())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if residual > 1e-9 {
        return Err(TimesError::NonStationaryPi { residual });
    }
    Ok(())
}

/// Smallest `t` with `d(t) <= epsilon` (or `dbar(t) <= epsilon` when
/// `standardized`), scanning outward from `t = 0` and exploiting that both
/// profiles are non-increasing. Returns `Unmixed` past `t_max`.
pub fn mixing_time(
    kernel: &FiniteKernel,
    pi: &ProbVector,
    epsilon: f64,
    standardized: bool,
    t_max: u64,
) -> TimesResult<MixingResult> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(TimesError::EpsilonOutOfRange(epsilon));
    }
    check_stationary(kernel, pi)?;

    let n = kernel.n_states();
    let pt = kernel.matrix().transpose();
    let mut dists: Vec<DVector<f64>> = (0..n)
        .map(|x| {
            let mut v = DVector::zeros(n);
            v[x] = 1.0;
            v
        })
        .collect();
    let mut d_values = Vec::new();
    let mut dbar_values = Vec::new();
    let mut found = MixTime::Unmixed;
    let mut horizon = t_max;
    for t in 0..=t_max {
        let d = kernel::profile_d(&dists, pi);
        let dbar = kernel::profile_dbar(&dists);
        d_values.push(d);
        dbar_values.push(dbar);
        let value = if standardized { dbar } else { d };
        if value <= epsilon {
            found = MixTime::Mixed(t);
            horizon = t;
            break;
        }
        if t < t_max {
            for mu in dists.iter_mut() {
                *mu = &pt * &*mu;
            }
        }
    }
    Ok(MixingResult {
        epsilon,
        time: found,
        profile_used: ContractionProfile {
            horizon,
            d_values,
            dbar_values,
        },
        standardized,
    })
}

/// Worst-start distance to stationarity at a single time, via the matrix
/// power (used by the certificate, where `t` can be far past the profile).
pub fn d_at(kernel: &FiniteKernel, pi: &ProbVector, t: u64) -> f64 {
    let p_t = matrix_power(kernel.matrix(), t);
    (0..kernel.n_states())
        .map(|x| {
            let row: Vec<f64> = p_t.row(x).iter().copied().collect();
            tv_slices(&row, pi.as_slice())
        })
        .fold(0.0, f64::max)
}

/// Hitting-time convention: `Inclusive` counts `tau_A = 0` when the start
/// is already in `A`; `Strict` forces one step first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum HittingConvention {
    Inclusive,
    Strict,
}

#[derive(Debug, Clone)]
pub struct HittingResult {
    pub target: Vec<usize>,
    /// `E_x[tau_A]` per start; `+inf` where the target is unreachable.
    pub expected: Vec<f64>,
    /// `cdf[(x, t)] = P_x(tau_A <= t)` for `t = 0..=horizon`.
    pub cdf: DMatrix<f64>,
    pub convention: HittingConvention,
    pub horizon: u64,
}

/// Expected hitting times and the hitting-time cdf.
///
/// Expectations solve `(I - P_{A^c A^c}) h = 1` on the part of the
/// complement from which `A` is reached almost surely; starts that can
/// drift into a region that never reaches `A` report `+inf`. The cdf uses
/// the one-step recursion `q_{t+1} = 1_A + 1_{A^c} (P q_t)`.
pub fn hitting_moments(
    kernel: &FiniteKernel,
    target: &[usize],
    horizon: u64,
    convention: HittingConvention,
) -> TimesResult<HittingResult> {
    let n = kernel.n_states();
    if target.is_empty() {
        return Err(TimesError::EmptyTarget);
    }
    let mut target: Vec<usize> = target.to_vec();
    target.sort_unstable();
    target.dedup();
    if let Some(&bad) = target.iter().find(|&&i| i >= n) {
        return Err(KernelError::DimensionMismatch {
            expected: n,
            found: bad,
        }
        .into());
    }
    let in_target = {
        let mut mask = vec![false; n];
        for &i in &target {
            mask[i] = true;
        }
        mask
    };

    let inclusive = inclusive_expected(kernel, &target, &in_target);
    let expected = match convention {
        HittingConvention::Inclusive => inclusive,
        HittingConvention::Strict => {
            // One forced step, then the inclusive solution.
            (0..n)
                .map(|x| {
                    let mut e = 1.0;
                    for (y, &value) in inclusive.iter().enumerate() {
                        let p = kernel.entry(x, y);
                        if p > 0.0 {
                            e += p * value;
                        }
                    }
                    e
                })
                .collect()
        }
    };

    // cdf recursion; the strict variant prepends one unconditioned step.
    let steps = horizon as usize;
    let mut cdf = DMatrix::zeros(n, steps + 1);
    let mut q: DVector<f64> = DVector::from_fn(n, |x, _| if in_target[x] { 1.0 } else { 0.0 });
    let advance = |q: &DVector<f64>| -> DVector<f64> {
        let pq = kernel.matrix() * q;
        DVector::from_fn(n, |x, _| if in_target[x] { 1.0 } else { pq[x] })
    };
    match convention {
        HittingConvention::Inclusive => {
            for t in 0..=steps {
                cdf.set_column(t, &q);
                if t < steps {
                    q = advance(&q);
                }
            }
        }
        HittingConvention::Strict => {
            // P_x(tau+ <= 0) = 0; P_x(tau+ <= t+1) = sum_y P_xy P_y(tau <= t)
            // with the inclusive cdf on the right.
            for t in 1..=steps {
                cdf.set_column(t, &(kernel.matrix() * &q));
                if t < steps {
                    q = advance(&q);
                }
            }
        }
    }

    Ok(HittingResult {
        target,
        expected,
        cdf,
        convention,
        horizon,
    })
}

/// Inclusive expectations: 0 on the target, the linear solve on the
/// almost-surely-hitting part of the complement, `+inf` elsewhere.
fn inclusive_expected(kernel: &FiniteKernel, target: &[usize], in_target: &[bool]) -> Vec<f64> {
    let n = kernel.n_states();
    let reach = transforms::can_reach(kernel, target);
    // States that can wander (within the complement) into the no-return
    // region have infinite expectation.
    let mut infinite = vec![false; n];
    let mut queue = Vec::new();
    for x in 0..n {
        if !reach[x] {
            infinite[x] = true;
            queue.push(x);
        }
    }
    // Backward reachability towards the no-return region, restricted to
    // complement states.
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, succs) in kernel.support_successors().iter().enumerate() {
        for &j in succs {
            preds[j].push(i);
        }
    }
    while let Some(y) = queue.pop() {
        for &x in &preds[y] {
            if !in_target[x] && !infinite[x] {
                infinite[x] = true;
                queue.push(x);
            }
        }
    }

    let solve_states: Vec<usize> = (0..n).filter(|&x| !in_target[x] && !infinite[x]).collect();
    let m = solve_states.len();
    let mut expected = vec![0.0; n];
    for x in 0..n {
        if infinite[x] {
            expected[x] = f64::INFINITY;
        }
    }
    if m > 0 {
        let mut system = DMatrix::identity(m, m);
        for (a, &x) in solve_states.iter().enumerate() {
            for (b, &y) in solve_states.iter().enumerate() {
                system[(a, b)] -= kernel.entry(x, y);
            }
        }
        let ones = DVector::from_element(m, 1.0);
        if let Some(h) = system.lu().solve(&ones) {
            for (a, &x) in solve_states.iter().enumerate() {
                expected[x] = h[a];
            }
        } else {
            // Numerically singular despite the reachability screen; report
            // the affected starts as unreachable.
            for &x in &solve_states {
                expected[x] = f64::INFINITY;
            }
        }
    }
    expected
}

/// All inclusion-minimal sets `A` with `pi(A) >= alpha`, as sorted index
/// lists in ascending bitmask order. Because `tau_A >= tau_B` pathwise when
/// `A` is a subset of `B`, suprema over feasible sets are attained on the
/// minimal ones.
pub fn minimal_feasible_sets(pi: &ProbVector, alpha: f64) -> TimesResult<Vec<Vec<usize>>> {
    let n = pi.dim();
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(TimesError::AlphaOutOfRange(alpha));
    }
    if n > ENUMERATION_CAP {
        return Err(TimesError::TooManyStates {
            n,
            cap: ENUMERATION_CAP,
        });
    }
    let feasible = |mass: f64| mass >= alpha - MASS_SLACK;
    let mut sets = Vec::new();
    for mask in 1u32..(1u32 << n) {
        let mut mass = 0.0;
        for i in 0..n {
            if mask & (1 << i) != 0 {
                mass += pi.weight(i);
            }
        }
        if !feasible(mass) {
            continue;
        }
        let minimal = (0..n).all(|i| mask & (1 << i) == 0 || !feasible(mass - pi.weight(i)));
        if minimal {
            sets.push((0..n).filter(|&i| mask & (1 << i) != 0).collect());
        }
    }
    Ok(sets)
}

#[derive(Debug, Clone, Serialize)]
pub struct MaxHitting {
    /// `sup E_x[tau_A]` over feasible sets and starts.
    pub value: f64,
    pub witness_set: Vec<usize>,
    pub witness_start: usize,
}

/// The maximum hitting time `sup { E_x[tau_A] : pi(A) >= alpha }`, exact
/// over the inclusion-minimal feasible sets. Inclusive convention.
pub fn max_hitting_time(
    kernel: &FiniteKernel,
    pi: &ProbVector,
    alpha: f64,
) -> TimesResult<MaxHitting> {
    let sets = minimal_feasible_sets(pi, alpha)?;
    max_hitting_over(kernel, &sets)
}

/// The same supremum over a caller-supplied candidate family (a lower bound
/// on the unrestricted supremum when the family is not exhaustive).
pub fn max_hitting_over(kernel: &FiniteKernel, family: &[Vec<usize>]) -> TimesResult<MaxHitting> {
    if family.is_empty() {
        return Err(TimesError::EmptyTarget);
    }
    let per_set: Vec<Vec<f64>> = family
        .par_iter()
        .map(|set| {
            let in_target = {
                let mut mask = vec![false; kernel.n_states()];
                for &i in set {
                    mask[i] = true;
                }
                mask
            };
            inclusive_expected(kernel, set, &in_target)
        })
        .collect();
    let mut best = MaxHitting {
        value: f64::NEG_INFINITY,
        witness_set: Vec::new(),
        witness_start: 0,
    };
    for (set, expected) in family.iter().zip(per_set.iter()) {
        for (x, &e) in expected.iter().enumerate() {
            if e > best.value {
                best = MaxHitting {
                    value: e,
                    witness_set: set.clone(),
                    witness_start: x,
                };
            }
        }
    }
    Ok(best)
}

/// The large hitting time: smallest `t` such that every feasible set is hit
/// from every start with probability strictly above `threshold` (0.9 in the
/// defining form).
pub fn large_hitting_time(
    kernel: &FiniteKernel,
    pi: &ProbVector,
    alpha: f64,
    threshold: f64,
    t_cap: u64,
) -> TimesResult<u64> {
    let sets = minimal_feasible_sets(pi, alpha)?;
    large_hitting_over(kernel, &sets, threshold, t_cap)
}

/// Large hitting time over an explicit set family.
pub fn large_hitting_over(
    kernel: &FiniteKernel,
    family: &[Vec<usize>],
    threshold: f64,
    t_cap: u64,
) -> TimesResult<u64> {
    if family.is_empty() {
        return Err(TimesError::EmptyTarget);
    }
    let n = kernel.n_states();
    let masks: Vec<Vec<bool>> = family
        .iter()
        .map(|set| {
            let mut mask = vec![false; n];
            for &i in set {
                mask[i] = true;
            }
            mask
        })
        .collect();
    let mut qs: Vec<DVector<f64>> = masks
        .iter()
        .map(|mask| DVector::from_fn(n, |x, _| if mask[x] { 1.0 } else { 0.0 }))
        .collect();
    for t in 0..=t_cap {
        let worst = qs
            .iter()
            .map(|q| q.iter().copied().fold(f64::INFINITY, f64::min))
            .fold(f64::INFINITY, f64::min);
        if worst > threshold {
            return Ok(t);
        }
        qs.par_iter_mut()
            .zip(masks.par_iter())
            .for_each(|(q, mask)| {
                let pq = kernel.matrix() * &*q;
                *q = DVector::from_fn(n, |x, _| if mask[x] { 1.0 } else { pq[x] });
            });
    }
    Err(TimesError::NoFiniteTime { cap: t_cap })
}

/// Tunable horizons for report assembly.
#[derive(Debug, Clone, Copy)]
pub struct TimesConfig {
    /// Mixing searches give up (reporting `Unmixed`) past this time.
    pub t_max: u64,
    /// Large-hitting scans fail past this time.
    pub tau_cap: u64,
}

impl Default for TimesConfig {
    fn default() -> Self {
        Self {
            t_max: 10_000,
            tau_cap: 50_000,
        }
    }
}

/// The constructive easy-direction record: with `C = ceil(-log2(alpha) + 1)`
/// and `k0 = ceil(log 10 / -log(1 - alpha/2))`, the lazy chain's worst-start
/// distance at `C * t_L` is at most `alpha / 2`, and its maximum hitting
/// time is at most `2 * k0 * C * t_L`.
#[derive(Debug, Clone, Serialize)]
pub struct EasyDirectionCertificate {
    pub alpha: f64,
    pub c: u64,
    pub k0: u64,
    /// `None` when the lazy chain did not mix within the search horizon;
    /// the certificate is then vacuous.
    pub t_l: Option<u64>,
    pub lazy_tv_at_c_t_l: Option<f64>,
    pub tv_within_half_alpha: Option<bool>,
    pub lazy_max_hitting: Option<f64>,
    pub bound: Option<f64>,
    pub vacuous: bool,
    pub pass: bool,
}

pub fn certificate_constant_c(alpha: f64) -> u64 {
    (-(alpha.log2()) + 1.0).ceil() as u64
}

pub fn certificate_constant_k0(alpha: f64) -> u64 {
    (10f64.ln() / -(1.0 - alpha / 2.0).ln()).ceil() as u64
}

pub fn easy_direction_certificate(
    kernel: &FiniteKernel,
    pi: &ProbVector,
    alpha: f64,
    config: &TimesConfig,
) -> TimesResult<EasyDirectionCertificate> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(TimesError::AlphaOutOfRange(alpha));
    }
    let c = certificate_constant_c(alpha);
    let k0 = certificate_constant_k0(alpha);
    let lazy_kernel = transforms::lazy(kernel);
    let lazy_mix = mixing_time(&lazy_kernel, pi, 0.25, false, config.t_max)?;
    let Some(t_l) = lazy_mix.time.finite() else {
        return Ok(EasyDirectionCertificate {
            alpha,
            c,
            k0,
            t_l: None,
            lazy_tv_at_c_t_l: None,
            tv_within_half_alpha: None,
            lazy_max_hitting: None,
            bound: None,
            vacuous: true,
            pass: true,
        });
    };
    let tv = d_at(&lazy_kernel, pi, c * t_l);
    let tv_ok = tv <= alpha / 2.0 + 1e-12;
    let lazy_hitting = max_hitting_time(&lazy_kernel, pi, alpha)?;
    let bound = 2.0 * k0 as f64 * c as f64 * t_l as f64;
    let hit_ok = lazy_hitting.value <= bound + 1e-9;
    Ok(EasyDirectionCertificate {
        alpha,
        c,
        k0,
        t_l: Some(t_l),
        lazy_tv_at_c_t_l: Some(tv),
        tv_within_half_alpha: Some(tv_ok),
        lazy_max_hitting: Some(lazy_hitting.value),
        bound: Some(bound),
        vacuous: false,
        pass: tv_ok && hit_ok,
    })
}

/// All time quantities for one chain, plus the certificate and the ratio
/// `t_L / max(t_H, 1)` studied across the zoo.
#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub alpha: f64,
    pub epsilon: f64,
    pub reversible: bool,
    pub t_m: MixingResult,
    pub t_bar_m: MixingResult,
    pub t_l: MixingResult,
    pub t_h: f64,
    pub witness_set: Vec<usize>,
    pub witness_start: usize,
    pub tau_g: u64,
    /// `None` when any mixing quantity is unmixed.
    pub ratio: Option<f64>,
    pub unmixed: bool,
    pub certificate: EasyDirectionCertificate,
}

impl EquivalenceReport {
    /// `0.1 tau_g <= t_H <= 2 tau_g`.
    pub fn maxlarge_ok(&self) -> bool {
        let tau = self.tau_g as f64;
        0.1 * tau <= self.t_h && self.t_h <= 2.0 * tau
    }

    /// `t_m <= t_bar_m <= 2 t_m`, vacuous when either side is unmixed.
    pub fn mixequivalent_ok(&self) -> bool {
        match (self.t_m.time.finite(), self.t_bar_m.time.finite()) {
            (Some(tm), Some(tbar)) => tm <= tbar && tbar <= 2 * tm,
            _ => true,
        }
    }

    pub fn certificate_ok(&self) -> bool {
        self.certificate.pass
    }
}

/// Assembles every quantity for one kernel. Non-reversible kernels are
/// still analyzed; the `reversible` flag records the detailed-balance
/// check so callers can warn.
pub fn equivalence_report(
    kernel: &FiniteKernel,
    alpha: f64,
    epsilon: f64,
    config: &TimesConfig,
) -> TimesResult<EquivalenceReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(TimesError::AlphaOutOfRange(alpha));
    }
    let pi = kernel::stationary_distribution(kernel)?;
    let reversible = kernel::check_reversible(kernel, &pi, 1e-9)?;
    let t_m = mixing_time(kernel, &pi, epsilon, false, config.t_max)?;
    let t_bar_m = mixing_time(kernel, &pi, epsilon, true, config.t_max)?;
    let lazy_kernel = transforms::lazy(kernel);
    let t_l = mixing_time(&lazy_kernel, &pi, epsilon, false, config.t_max)?;
    let hitting = max_hitting_time(kernel, &pi, alpha)?;
    let tau_g = large_hitting_time(kernel, &pi, alpha, 0.9, config.tau_cap)?;
    let certificate = easy_direction_certificate(kernel, &pi, alpha, config)?;
    let unmixed = !(t_m.time.is_mixed() && t_bar_m.time.is_mixed() && t_l.time.is_mixed());
    let ratio = if unmixed {
        None
    } else {
        t_l.time
            .finite()
            .map(|tl| tl as f64 / hitting.value.max(1.0))
    };
    Ok(EquivalenceReport {
        alpha,
        epsilon,
        reversible,
        t_m,
        t_bar_m,
        t_l,
        t_h: hitting.value,
        witness_set: hitting.witness_set,
        witness_start: hitting.witness_start,
        tau_g,
        ratio,
        unmixed,
        certificate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn flip() -> FiniteKernel {
        FiniteKernel::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()
    }

    fn lazy_flip() -> FiniteKernel {
        FiniteKernel::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap()
    }

    fn cycle4() -> FiniteKernel {
        let mut rows = vec![vec![0.0; 4]; 4];
        for i in 0..4 {
            rows[i][(i + 1) % 4] = 0.5;
            rows[i][(i + 3) % 4] = 0.5;
        }
        FiniteKernel::new(rows).unwrap()
    }

    #[test]
    fn mixing_lazy_flip_is_one() {
        let r = mixing_time(&lazy_flip(), &ProbVector::uniform(2), 0.25, false, 100).unwrap();
        assert_eq!(r.time, MixTime::Mixed(1));
        assert_abs_diff_eq!(r.profile_used.d(0), 0.5);
        assert_abs_diff_eq!(r.profile_used.d(1), 0.0);
    }

    #[test]
    fn mixing_flip_unmixed() {
        let r = mixing_time(&flip(), &ProbVector::uniform(2), 0.25, false, 1000).unwrap();
        assert_eq!(r.time, MixTime::Unmixed);
    }

    #[test]
    fn mixing_zero_when_d0_small() {
        // Uniform-rows kernel: d(0) = 0.5 > eps, but with eps above 0.5 the
        // minimum over t >= 0 is 0.
        let r = mixing_time(&lazy_flip(), &ProbVector::uniform(2), 0.6, false, 10).unwrap();
        assert_eq!(r.time, MixTime::Mixed(0));
    }

    #[test]
    fn mixing_rejects_non_stationary() {
        let pi = ProbVector::new(vec![0.9, 0.1]).unwrap();
        assert!(matches!(
            mixing_time(&flip(), &pi, 0.25, false, 10),
            Err(TimesError::NonStationaryPi { .. })
        ));
    }

    #[test]
    fn hitting_flip_deterministic() {
        let r = hitting_moments(&flip(), &[1], 8, HittingConvention::Inclusive).unwrap();
        assert_abs_diff_eq!(r.expected[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.expected[1], 0.0);
    }

    #[test]
    fn hitting_cycle4_matches_series_oracle() {
        // Oracle: E = sum_t P(tau > t), accumulated by stepping the
        // survival mass directly, independent of the linear solve.
        let k = cycle4();
        let r = hitting_moments(&k, &[0], 16, HittingConvention::Inclusive).unwrap();
        let mut survival = vec![0.0, 1.0, 1.0, 1.0]; // P_x(tau > 0)
        let mut oracle = [0.0; 4];
        for _ in 0..10_000 {
            for (acc, &s) in oracle.iter_mut().zip(survival.iter()) {
                *acc += s;
            }
            // survival recursion: P_x(tau > t+1) = sum_{y notin A} P_xy P_y(tau > t)
            survival = (0..4)
                .map(|x| (1..4).map(|y| k.entry(x, y) * survival[y]).sum())
                .collect();
        }
        // k(n-k) with k = 2, n = 4.
        assert_abs_diff_eq!(oracle[2], 4.0, epsilon = 1e-9);
        assert_abs_diff_eq!(r.expected[2], oracle[2], epsilon = 1e-9);
    }

    #[test]
    fn hitting_lazy_flip_cdf_geometric() {
        let r = hitting_moments(&lazy_flip(), &[0], 12, HittingConvention::Inclusive).unwrap();
        for t in 0..=12u64 {
            let expected = 1.0 - 0.5f64.powi(t as i32);
            assert_abs_diff_eq!(r.cdf[(1, t as usize)], expected, epsilon = 1e-12);
        }
        // cdf rows are non-decreasing and within [0, 1].
        for x in 0..2 {
            for t in 1..=12usize {
                assert!(r.cdf[(x, t)] + 1e-15 >= r.cdf[(x, t - 1)]);
                assert!(r.cdf[(x, t)] <= 1.0 + 1e-15);
            }
        }
    }

    #[test]
    fn hitting_strict_convention_forces_a_step() {
        let r = hitting_moments(&lazy_flip(), &[0], 4, HittingConvention::Strict).unwrap();
        // From state 0 the strict return time is geometric-like: one step,
        // landing in {0} with probability 1/2 each step thereafter.
        assert_abs_diff_eq!(r.expected[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.cdf[(0, 0)], 0.0);
        assert_abs_diff_eq!(r.cdf[(0, 1)], 0.5);
    }

    #[test]
    fn hitting_unreachable_reports_infinity() {
        // From state 2 the target {0} is unreachable.
        let k = FiniteKernel::new(vec![
            vec![0.5, 0.5, 0.0],
            vec![0.5, 0.25, 0.25],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let r = hitting_moments(&k, &[0], 4, HittingConvention::Inclusive).unwrap();
        assert!(r.expected[2].is_infinite());
        // State 1 can slip into the absorbing state, so it is infinite too.
        assert!(r.expected[1].is_infinite());
        assert_abs_diff_eq!(r.expected[0], 0.0);
    }

    #[test]
    fn max_hitting_flip() {
        let r = max_hitting_time(&flip(), &ProbVector::uniform(2), 0.4).unwrap();
        assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-12);
        assert_eq!(r.witness_set, vec![0]);
        assert_eq!(r.witness_start, 1);
    }

    #[test]
    fn max_hitting_lazy_flip() {
        let r = max_hitting_time(&lazy_flip(), &ProbVector::uniform(2), 0.4).unwrap();
        assert_abs_diff_eq!(r.value, 2.0, epsilon = 1e-10);
    }

    #[test]
    fn max_hitting_alpha_forces_full_space() {
        let r = max_hitting_time(&flip(), &ProbVector::uniform(2), 0.9).unwrap();
        assert_eq!(r.witness_set, vec![0, 1]);
        assert_abs_diff_eq!(r.value, 0.0);
    }

    #[test]
    fn large_hitting_flip() {
        let tau = large_hitting_time(&flip(), &ProbVector::uniform(2), 0.4, 0.9, 1000).unwrap();
        assert_eq!(tau, 1);
    }

    #[test]
    fn large_hitting_lazy_flip() {
        let tau =
            large_hitting_time(&lazy_flip(), &ProbVector::uniform(2), 0.4, 0.9, 1000).unwrap();
        assert_eq!(tau, 4);
    }

    #[test]
    fn large_hitting_full_space_is_zero() {
        let tau = large_hitting_time(&flip(), &ProbVector::uniform(2), 0.9, 0.9, 1000).unwrap();
        assert_eq!(tau, 0);
    }

    #[test]
    fn certificate_constants() {
        assert_eq!(certificate_constant_c(0.25), 3);
        assert_eq!(certificate_constant_k0(0.25), 18);
    }

    #[test]
    fn certificate_on_lazy_flip() {
        let cert = easy_direction_certificate(
            &flip(),
            &ProbVector::uniform(2),
            0.25,
            &TimesConfig::default(),
        )
        .unwrap();
        assert!(!cert.vacuous);
        assert!(cert.pass);
        assert_eq!(cert.t_l, Some(1));
    }

    #[test]
    fn certificate_vacuous_when_lazy_search_capped() {
        // A tiny t_max starves the lazy-chain search on a slow chain.
        let mut rows = vec![vec![0.0; 8]; 8];
        for i in 0..8 {
            rows[i][(i + 1) % 8] = 0.5;
            rows[i][(i + 7) % 8] = 0.5;
        }
        let k = FiniteKernel::new(rows).unwrap();
        let config = TimesConfig {
            t_max: 1,
            tau_cap: 1000,
        };
        let cert = easy_direction_certificate(&k, &ProbVector::uniform(8), 0.25, &config).unwrap();
        assert!(cert.vacuous);
        assert!(cert.pass);
    }

    #[test]
    fn report_flip_unmixed_with_undefined_ratio() {
        let r = equivalence_report(&flip(), 0.25, 0.25, &TimesConfig::default()).unwrap();
        assert!(r.unmixed);
        assert!(r.ratio.is_none());
        assert!(r.maxlarge_ok());
        assert!(r.reversible);
    }

    #[test]
    fn report_cycle_ratio_defined() {
        let mut rows = vec![vec![0.0; 5]; 5];
        for i in 0..5 {
            rows[i][(i + 1) % 5] = 0.5;
            rows[i][(i + 4) % 5] = 0.5;
        }
        let k = FiniteKernel::new(rows).unwrap();
        let r = equivalence_report(&k, 0.25, 0.25, &TimesConfig::default()).unwrap();
        assert!(!r.unmixed);
        let ratio = r.ratio.unwrap();
        assert!(ratio.is_finite() && ratio > 0.0);
        assert!(r.maxlarge_ok());
        assert!(r.mixequivalent_ok());
        assert!(r.certificate_ok());
    }
}
