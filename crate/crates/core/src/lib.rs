//! Exact and Monte Carlo analysis of Markov chain mixing and hitting times.
//!
//! The crate has two halves. The exact half works on finite-state kernels:
//! [`kernel`] holds distributions, total variation, stationarity and
//! reversibility checks, and contraction profiles; [`transforms`] the lazy,
//! skeleton, trace, composite-G, coupling, and perturbation constructions;
//! [`times`] every time quantity (mixing, hitting, maximum and large hitting
//! times) plus the equivalence report. The sampling half generalizes to
//! arbitrary state spaces: [`samplers`] provides Metropolis-Hastings,
//! random-scan Gibbs, path-level time changes, and the almost-strong-Feller
//! decomposition, while [`estimators`] wraps Monte Carlo estimates in
//! explicit confidence bounds. [`zoo`] supplies the catalog of small
//! reversible chains the experiment suites run on.

pub mod estimators;
pub mod kernel;
pub mod rng;
pub mod samplers;
pub mod times;
pub mod transforms;
pub mod zoo;

pub use kernel::{
    check_reversible, contraction_profile, iterate_distribution, reversibilize,
    stationary_distribution, tv_distance, ContractionProfile, FiniteKernel, KernelError,
    ProbVector,
};
pub use rng::{stream_rng, StreamRng};
pub use times::{
    easy_direction_certificate, equivalence_report, hitting_moments, large_hitting_time,
    max_hitting_time, mixing_time, EasyDirectionCertificate, EquivalenceReport, HittingConvention,
    HittingResult, MaxHitting, MixTime, MixingResult, TimesConfig, TimesError,
};
pub use transforms::{
    build_g, lazy, maximal_coupling, perturb_within, skeleton, trace_exact, CouplingMatrix,
    TraceSpec, TransformError,
};
pub use zoo::{build_zoo_chain, default_zoo, ZooChain, ZooSpec};
