//! Property suites over randomly generated distributions and kernels:
//! metric structure of total variation, contraction inequalities,
//! commutation of the lazy and trace transformations, the binomial-mixture
//! form of lazy powers, coupling maximality, and perturbation contracts.

use proptest::prelude::*;

use mixhit_core::kernel::{
    check_reversible, contraction_profile, iterate_distribution, reversibilize,
    stationary_distribution, tv_distance, FiniteKernel, ProbVector,
};
use mixhit_core::transforms::{
    lazy, maximal_coupling, perturb_within, skeleton, trace_exact, TraceSpec,
};

fn prob_vector_strategy(n: usize) -> impl Strategy<Value = ProbVector> {
    prop::collection::vec(0.01f64..1.0, n).prop_map(|raw| ProbVector::normalized(raw).unwrap())
}

/// Row-normalized positive matrices: irreducible and aperiodic, so every
/// trace/stationarity precondition holds.
fn kernel_strategy(n: usize) -> impl Strategy<Value = FiniteKernel> {
    prop::collection::vec(prop::collection::vec(0.01f64..1.0, n), n).prop_map(|rows| {
        let rows = rows
            .into_iter()
            .map(|row| {
                let sum: f64 = row.iter().sum();
                row.into_iter().map(|v| v / sum).collect()
            })
            .collect();
        FiniteKernel::new(rows).unwrap()
    })
}

/// Metropolized random weights: reversible by construction.
fn reversible_kernel_strategy(n: usize) -> impl Strategy<Value = (FiniteKernel, ProbVector)> {
    prop::collection::vec(0.2f64..1.0, n).prop_map(move |weights| {
        let mut rows = vec![vec![0.0; n]; n];
        let propose = 1.0 / (n as f64 - 1.0);
        for i in 0..n {
            let mut stay = 0.0;
            for j in 0..n {
                if i == j {
                    continue;
                }
                let accept = (weights[j] / weights[i]).min(1.0);
                rows[i][j] = propose * accept;
                stay += propose * (1.0 - accept);
            }
            rows[i][i] = stay;
        }
        (
            FiniteKernel::new(rows).unwrap(),
            ProbVector::normalized(weights).unwrap(),
        )
    })
}

fn binomial_coefficient(n: u64, k: u64) -> f64 {
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tv_is_a_metric(
        a in prob_vector_strategy(5),
        b in prob_vector_strategy(5),
        c in prob_vector_strategy(5),
    ) {
        let ab = tv_distance(&a, &b).unwrap();
        let ba = tv_distance(&b, &a).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-15);
        let ac = tv_distance(&a, &c).unwrap();
        let cb = tv_distance(&c, &b).unwrap();
        prop_assert!(ab <= ac + cb + 1e-12);
        prop_assert!(tv_distance(&a, &a).unwrap() <= 1e-12);
        if ab <= 1e-12 {
            for i in 0..5 {
                prop_assert!((a.weight(i) - b.weight(i)).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn contraction_inequalities_hold(kernel in kernel_strategy(5)) {
        let pi = stationary_distribution(&kernel).unwrap();
        let profile = contraction_profile(&kernel, &pi, 12).unwrap();
        for t in 0..=12u64 {
            let d = profile.d(t);
            let dbar = profile.dbar(t);
            prop_assert!(d <= dbar + 1e-12);
            prop_assert!(dbar <= 2.0 * d + 1e-12);
            prop_assert!(dbar <= 1.0 + 1e-12);
            if t > 0 {
                prop_assert!(profile.d(t) <= profile.d(t - 1) + 1e-12);
                prop_assert!(profile.dbar(t) <= profile.dbar(t - 1) + 1e-12);
            }
        }
        for s in 0..=6u64 {
            for t in 0..=6u64 {
                prop_assert!(
                    profile.dbar(s + t) <= profile.dbar(s) * profile.dbar(t) + 1e-10
                );
            }
        }
    }

    #[test]
    fn stationary_point_is_fixed(kernel in kernel_strategy(6), t in 0u64..20) {
        let pi = stationary_distribution(&kernel).unwrap();
        let iterated = iterate_distribution(&kernel, &pi, t).unwrap();
        for i in 0..6 {
            prop_assert!((iterated.weight(i) - pi.weight(i)).abs() <= 1e-10);
        }
    }

    #[test]
    fn reversibilization_is_reversible_and_fixes_pi(kernel in kernel_strategy(5)) {
        let pi = stationary_distribution(&kernel).unwrap();
        let r = reversibilize(&kernel, &pi).unwrap();
        prop_assert!(check_reversible(&r, &pi, 1e-12).unwrap());
        let iterated = iterate_distribution(&r, &pi, 1).unwrap();
        for i in 0..5 {
            prop_assert!((iterated.weight(i) - pi.weight(i)).abs() <= 1e-10);
        }
    }

    #[test]
    fn lazy_and_trace_commute(
        kernel in kernel_strategy(6),
        mask in 1u32..63,
    ) {
        let subset: Vec<usize> = (0..6).filter(|i| mask & (1 << i) != 0).collect();
        let spec = TraceSpec::new(subset, 6).unwrap();
        let a = lazy(&trace_exact(&kernel, &spec).unwrap());
        let b = trace_exact(&lazy(&kernel), &spec).unwrap();
        for i in 0..a.n_states() {
            for j in 0..a.n_states() {
                prop_assert!((a.entry(i, j) - b.entry(i, j)).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn lazy_power_is_binomial_mixture(kernel in kernel_strategy(4), t in 1u64..=20) {
        let lazy_t = skeleton(&lazy(&kernel), t).unwrap();
        let scale = 0.5f64.powi(t as i32);
        for i in 0..4 {
            for j in 0..4 {
                let mut mix = scale * binomial_coefficient(t, 0) * f64::from(i == j);
                for s in 1..=t {
                    let p_s = skeleton(&kernel, s).unwrap();
                    mix += scale * binomial_coefficient(t, s) * p_s.entry(i, j);
                }
                prop_assert!((lazy_t.entry(i, j) - mix).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn trace_preserves_stationarity_and_reversibility(
        (kernel, pi) in reversible_kernel_strategy(6),
        mask in 1u32..63,
    ) {
        let subset: Vec<usize> = (0..6).filter(|i| mask & (1 << i) != 0).collect();
        let spec = TraceSpec::new(subset.clone(), 6).unwrap();
        let traced = trace_exact(&kernel, &spec).unwrap();
        let restricted =
            ProbVector::normalized(subset.iter().map(|&i| pi.weight(i)).collect()).unwrap();
        let stepped = iterate_distribution(&traced, &restricted, 1).unwrap();
        for i in 0..restricted.dim() {
            prop_assert!((stepped.weight(i) - restricted.weight(i)).abs() <= 1e-10);
        }
        prop_assert!(check_reversible(&traced, &restricted, 1e-10).unwrap());
    }

    #[test]
    fn maximal_coupling_contract(
        mu in prob_vector_strategy(6),
        nu in prob_vector_strategy(6),
    ) {
        let coupling = maximal_coupling(&mu, &nu).unwrap();
        let tv = tv_distance(&mu, &nu).unwrap();
        prop_assert!((coupling.off_diagonal_mass() - tv).abs() <= 1e-10);
        let rows = coupling.row_marginal();
        let cols = coupling.column_marginal();
        let mut total = 0.0;
        for i in 0..6 {
            prop_assert!((rows[i] - mu.weight(i)).abs() <= 1e-10);
            prop_assert!((cols[i] - nu.weight(i)).abs() <= 1e-10);
            for j in 0..6 {
                let v = coupling.joint[(i, j)];
                prop_assert!(v >= -1e-15);
                total += v;
            }
        }
        prop_assert!((total - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn perturbation_moves_rows_at_most_delta(
        kernel in kernel_strategy(5),
        delta in 0.0f64..=1.0,
    ) {
        let perturbed = perturb_within(&kernel, delta).unwrap();
        for x in 0..5 {
            let tv = tv_distance(
                &kernel.row_distribution(x),
                &perturbed.row_distribution(x),
            )
            .unwrap();
            prop_assert!(tv <= delta + 1e-12);
        }
    }

    #[test]
    fn g_composite_stays_reversible(
        (kernel, pi) in reversible_kernel_strategy(5),
        k in 1u64..=3,
    ) {
        let g = mixhit_core::transforms::build_g(&kernel, k).unwrap();
        prop_assert!(check_reversible(&g, &pi, 1e-10).unwrap());
    }
}
