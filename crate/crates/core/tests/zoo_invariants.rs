//! Time-quantity and sampler invariants exercised across the chain zoo:
//! monotonicity of the mixing time in epsilon, the explicit-constant
//! skeleton hitting bound, lazy hitting and mixing comparisons, pathwise
//! domination under the trace, holding-time laws of the skeleton chain,
//! and replay determinism of the full sampler stack.

use mixhit_core::estimators::dkw_band;
use mixhit_core::samplers::{g_sampler, mh_skeleton, KernelSampler, MarkovSampler};
use mixhit_core::times::{
    self, certificate_constant_c, certificate_constant_k0, HittingConvention,
};
use mixhit_core::transforms::{lazy, skeleton, trace_exact, TraceSpec};
use mixhit_core::zoo::default_zoo;
use mixhit_core::{mixing_time, stream_rng};

const T_MAX: u64 = 10_000;

#[test]
fn mixing_time_monotone_in_epsilon() {
    for chain in default_zoo().iter().filter(|c| c.aperiodic) {
        let mut previous = 0u64;
        for &eps in &[0.4, 0.25, 0.125, 0.05] {
            let r = mixing_time(&chain.kernel, &chain.pi, eps, false, T_MAX).unwrap();
            let t = r
                .time
                .finite()
                .unwrap_or_else(|| panic!("{} did not mix at eps {eps}", chain.id));
            assert!(
                t >= previous,
                "{}: t_m({eps}) = {t} dropped below {previous}",
                chain.id
            );
            previous = t;
        }
    }
}

#[test]
fn skeleton_hitting_bound_with_explicit_constants() {
    // t_H of the k-skeleton is at most 2 l0 ceil(C tbar_m / k) with
    // C = ceil(-log2 alpha + 1) and l0 = ceil(log 10 / -log(1 - alpha/2)).
    let alpha = 0.25;
    let c = certificate_constant_c(alpha) as f64;
    let l0 = certificate_constant_k0(alpha) as f64;
    for chain in default_zoo().iter().filter(|c| c.aperiodic) {
        let tbar = mixing_time(&chain.kernel, &chain.pi, alpha, true, T_MAX)
            .unwrap()
            .time
            .finite()
            .unwrap();
        for k in 1..=5u64 {
            let skel = skeleton(&chain.kernel, k).unwrap();
            let hit = times::max_hitting_time(&skel, &chain.pi, alpha).unwrap();
            let bound = 2.0 * l0 * (c * tbar as f64 / k as f64).ceil();
            assert!(
                hit.value <= bound + 1e-9,
                "{} k={k}: t_H^(k) = {} exceeds {bound}",
                chain.id,
                hit.value
            );
        }
    }
}

#[test]
fn lazy_hitting_comparison() {
    // t_H <= l_H exactly (laziness only slows hitting), and the loose
    // explicit constant in the other direction: l_H <= 3000 t_H.
    let alpha = 0.25;
    for chain in default_zoo() {
        let base = times::max_hitting_time(&chain.kernel, &chain.pi, alpha).unwrap();
        let lazy_hit = times::max_hitting_time(&lazy(&chain.kernel), &chain.pi, alpha).unwrap();
        assert!(
            base.value <= lazy_hit.value + 1e-9,
            "{}: t_H = {} > l_H = {}",
            chain.id,
            base.value,
            lazy_hit.value
        );
        assert!(
            lazy_hit.value <= 3000.0 * base.value + 1e-9,
            "{}: l_H = {} vs 3000 t_H = {}",
            chain.id,
            lazy_hit.value,
            3000.0 * base.value
        );
    }
}

#[test]
fn lazy_mixing_explicit_bound() {
    // t_L(eps) <= max(2 t_m(eps / 2), ceil(10 / eps)).
    for &eps in &[0.25, 0.125] {
        for chain in default_zoo().iter().filter(|c| c.aperiodic) {
            let t_m_half = mixing_time(&chain.kernel, &chain.pi, eps / 2.0, false, T_MAX)
                .unwrap()
                .time
                .finite()
                .unwrap();
            let t_l = mixing_time(&lazy(&chain.kernel), &chain.pi, eps, false, T_MAX)
                .unwrap()
                .time
                .finite()
                .unwrap();
            let bound = (2 * t_m_half).max((10.0 / eps).ceil() as u64);
            assert!(
                t_l <= bound,
                "{} eps={eps}: t_L = {t_l} exceeds max(2 t_m(eps/2), ceil(10/eps)) = {bound}",
                chain.id
            );
        }
    }
}

#[test]
fn trace_dominates_hitting_pathwise() {
    // For targets inside the watched set, hitting is no slower once the
    // excursions are cut out: E per start under the trace is at most the
    // value under the original chain.
    for chain in default_zoo() {
        let n = chain.kernel.n_states();
        if n < 3 {
            continue;
        }
        // Watch the first two thirds of the states, target the first one.
        let keep = ((2 * n) / 3).max(2);
        let subset: Vec<usize> = (0..keep).collect();
        let spec = TraceSpec::new(subset.clone(), n).unwrap();
        let traced = trace_exact(&chain.kernel, &spec).unwrap();
        let full =
            times::hitting_moments(&chain.kernel, &[0], 4, HittingConvention::Inclusive).unwrap();
        let reduced =
            times::hitting_moments(&traced, &[0], 4, HittingConvention::Inclusive).unwrap();
        for (pos, &state) in subset.iter().enumerate() {
            assert!(
                reduced.expected[pos] <= full.expected[state] + 1e-9,
                "{} state {state}: trace {} > full {}",
                chain.id,
                reduced.expected[pos],
                full.expected[state]
            );
        }
    }
}

#[test]
fn skeleton_holding_times_are_geometric() {
    // Finite-state Metropolis fixture: lambda(x) = 1 - P_xx exactly, and
    // the empirical holding-time law at the stickiest state matches the
    // geometric pmf within a DKW band on the cdf.
    let chain = default_zoo()
        .into_iter()
        .find(|c| c.id == "random_reversible(6,1)")
        .unwrap();
    let sticky = (0..6)
        .max_by(|&a, &b| {
            chain
                .kernel
                .entry(a, a)
                .partial_cmp(&chain.kernel.entry(b, b))
                .unwrap()
        })
        .unwrap();
    let lambda = 1.0 - chain.kernel.entry(sticky, sticky);
    assert!(lambda > 0.0 && lambda < 1.0, "fixture needs holding mass");

    let mut skel = mh_skeleton(KernelSampler::new(chain.kernel.clone()), 1_000_000);
    let mut rng = stream_rng(100, 0);
    let rate = skel
        .estimate_holding_rate(&sticky, 20_000, &mut rng)
        .unwrap();
    assert!(
        (rate - lambda).abs() < 0.02,
        "estimated rate {rate} vs exact {lambda}"
    );

    let n = 20_000u64;
    let max_j = 64usize;
    let mut counts = vec![0u64; max_j + 1];
    for _ in 0..n {
        let (_, eta) = skel.step(&(sticky, 0), &mut rng).unwrap();
        counts[(eta as usize).min(max_j)] += 1;
    }
    let band = dkw_band(n, 0.99);
    let mut empirical_cdf = 0.0;
    let mut exact_cdf = 0.0;
    for (j, &count) in counts.iter().enumerate().take(max_j).skip(1) {
        empirical_cdf += count as f64 / n as f64;
        exact_cdf += mixhit_core::samplers::geometric_holding_pmf(lambda, j as u64);
        assert!(
            (empirical_cdf - exact_cdf).abs() <= band,
            "holding cdf off at {j}: {empirical_cdf} vs {exact_cdf} (band {band})"
        );
    }
}

#[test]
fn mc_hitting_agrees_with_exact_across_zoo() {
    // One property suite: the Monte Carlo hitting estimator matches the
    // linear-solve values within its stated confidence band on every small
    // aperiodic chain.
    use mixhit_core::estimators::mc_expected_hitting;
    for (idx, chain) in default_zoo()
        .iter()
        .filter(|c| c.aperiodic && c.kernel.n_states() <= 7)
        .enumerate()
    {
        let n_states = chain.kernel.n_states();
        let exact = times::hitting_moments(&chain.kernel, &[0], 4, HittingConvention::Inclusive)
            .unwrap()
            .expected;
        let mut sampler = KernelSampler::new(chain.kernel.clone());
        let mut rng = stream_rng(900, idx as u64);
        let starts: Vec<usize> = (0..n_states).collect();
        let estimates = mc_expected_hitting(
            &mut sampler,
            |x| *x == 0,
            &starts,
            4000,
            5000,
            0.99,
            &mut rng,
        )
        .unwrap();
        for (x, estimate) in estimates.iter().enumerate() {
            assert_eq!(estimate.n_censored, 0, "{} start {x} censored", chain.id);
            let slack = 3.0 * estimate.halfwidth + 1e-9;
            assert!(
                (estimate.point - exact[x]).abs() <= slack,
                "{} start {x}: mc {} vs exact {} (slack {slack})",
                chain.id,
                estimate.point,
                exact[x]
            );
        }
    }
}

#[test]
fn sampler_stack_replay_determinism() {
    // The full wrapper stack replays bit-identically from the same
    // (seed, stream) key and diverges across streams.
    let chain = default_zoo()
        .into_iter()
        .find(|c| c.id == "cycle(7)")
        .unwrap();
    let run = |seed: u64, stream: u64| -> Vec<usize> {
        let mut sampler = g_sampler(KernelSampler::new(chain.kernel.clone()), 2).unwrap();
        let mut rng = stream_rng(seed, stream);
        let mut state = 0usize;
        (0..256)
            .map(|_| {
                state = sampler.step(&state, &mut rng).unwrap();
                state
            })
            .collect()
    };
    assert_eq!(run(1, 0), run(1, 0));
    assert_ne!(run(1, 0), run(1, 1));
    assert_ne!(run(1, 0), run(2, 0));
}
