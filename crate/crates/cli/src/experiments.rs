//! The experiment suites behind `mixhit run`: the equivalence sweep, the
//! inequality audit, the perturbation study, the almost-strong-Feller
//! study, and the sampler-fidelity harness. Experiments run in a work
//! pool, each writing its own output files; the manifest is written once
//! at the end. All randomness derives from the master seed plus a stable
//! per-experiment stream base, so results are independent of scheduling.

use std::path::Path;

use anyhow::{anyhow, Result};
use rayon::prelude::*;
use serde_json::json;

use mixhit_core::estimators::{coupon_and_p_probe, dkw_band, ProbeFlavor};
use mixhit_core::kernel::{contraction_profile, stationary_distribution, tv_slices};
use mixhit_core::samplers::{
    apply_time_change, asf_decompose_gibbs, asf_decompose_mh, bivariate_gaussian_gibbs,
    KernelSampler, MarkovSampler, TimeChangeMode,
};
use mixhit_core::times::{
    self, equivalence_report, hitting_moments, large_hitting_time, max_hitting_time,
    minimal_feasible_sets, mixing_time, HittingConvention, MixTime, TimesConfig, ENUMERATION_CAP,
};
use mixhit_core::transforms::{build_g, lazy, perturb_within, skeleton, trace_exact, TraceSpec};
use mixhit_core::zoo::ZooChain;
use mixhit_core::{stream_rng, FiniteKernel};

use crate::config::Config;
use crate::manifest::{hash_config, ExperimentStatus, RunManifest};
use crate::report::{
    emit_experiment, write_results, ExperimentResult, PlotData, ReportFormat, Table,
};

pub struct RunOutcome {
    pub manifest: RunManifest,
    pub results: Vec<ExperimentResult>,
    /// True when the inequality audit ran and found a violation.
    pub audit_failed: bool,
}

struct Ctx<'a> {
    chains: &'a [ZooChain],
    alpha: f64,
    epsilon: f64,
    mc_samples: u64,
    confidence: f64,
    seed: u64,
    stream_base: u64,
    times: TimesConfig,
    /// When set, the fidelity suite also writes one raw trajectory per
    /// sampler configuration as `(t, state)` CSV under this directory.
    dump_trajectories: Option<&'a Path>,
}

fn mix_cell(time: &MixTime) -> String {
    match time.finite() {
        Some(t) => t.to_string(),
        None => "unmixed".to_string(),
    }
}

fn chain_kind(id: &str) -> String {
    id.split('(').next().unwrap_or(id).to_string()
}

/// Runs the configured suites and writes every output under `out_dir`.
pub fn run_experiments(
    config: &Config,
    config_bytes: &[u8],
    seed: u64,
    out_dir: &Path,
) -> Result<RunOutcome> {
    run_experiments_with(config, config_bytes, seed, out_dir, false)
}

pub fn run_experiments_with(
    config: &Config,
    config_bytes: &[u8],
    seed: u64,
    out_dir: &Path,
    dump_trajectories: bool,
) -> Result<RunOutcome> {
    std::fs::create_dir_all(out_dir)?;
    let chains = config.build_chains()?;
    let times = TimesConfig::default();

    let runs: Vec<(String, Result<ExperimentResult>)> = config
        .experiments
        .run
        .par_iter()
        .enumerate()
        .map(|(index, name)| {
            let ctx = Ctx {
                chains: &chains,
                alpha: config.experiments.alpha,
                epsilon: config.experiments.epsilon,
                mc_samples: config.experiments.mc_samples,
                confidence: config.experiments.confidence,
                seed,
                stream_base: (index as u64 + 1) * 1_000_000,
                times,
                dump_trajectories: dump_trajectories.then_some(out_dir),
            };
            let result = match name.as_str() {
                "equivalence-sweep" => equivalence_sweep(&ctx),
                "inequality-audit" => inequality_audit(&ctx),
                "perturbation-study" => perturbation_study(&ctx),
                "asf-study" => asf_study(&ctx),
                "sampler-fidelity" => sampler_fidelity(&ctx),
                other => Err(anyhow!("unknown experiment `{other}`")),
            };
            (name.clone(), result)
        })
        .collect();

    let mut statuses = Vec::new();
    let mut results = Vec::new();
    let mut audit_failed = false;
    for (name, run) in runs {
        match run {
            Ok(result) => {
                let mut outputs = result.extra_outputs.clone();
                for format in [
                    ReportFormat::Csv,
                    ReportFormat::Json,
                    ReportFormat::Plotdata,
                ] {
                    outputs.extend(emit_experiment(out_dir, &result, format)?);
                }
                if name == "inequality-audit" && !result.ok {
                    audit_failed = true;
                }
                statuses.push(ExperimentStatus {
                    name,
                    status: "ok".to_string(),
                    outputs,
                });
                results.push(result);
            }
            Err(err) => {
                statuses.push(ExperimentStatus {
                    name,
                    status: format!("failed: {err:#}"),
                    outputs: Vec::new(),
                });
            }
        }
    }
    write_results(out_dir, &results)?;

    let manifest = RunManifest {
        config_hash: hash_config(config_bytes),
        seed,
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        experiments: statuses,
    };
    manifest.write(out_dir)?;
    Ok(RunOutcome {
        manifest,
        results,
        audit_failed,
    })
}

/// One row per chain: every time quantity, the ratio, and the two
/// sanity flags. The headline summary is the ratio interval.
fn equivalence_sweep(ctx: &Ctx) -> Result<ExperimentResult> {
    let mut rows = Vec::new();
    let mut plot_points: Vec<(String, usize, f64)> = Vec::new();
    let mut skipped = Vec::new();
    let mut ratios: Vec<f64> = Vec::new();
    for chain in ctx.chains {
        if chain.kernel.n_states() > ENUMERATION_CAP {
            skipped.push(chain.id.clone());
            continue;
        }
        let report = equivalence_report(&chain.kernel, ctx.alpha, ctx.epsilon, &ctx.times)
            .map_err(|e| anyhow!("{}: {e}", chain.id))?;
        // The plotted ratio needs only a finite lazy mixing time, so
        // periodic chains still contribute a point even though their
        // report carries the unmixed marker.
        if let Some(t_l) = report.t_l.time.finite() {
            let ratio = t_l as f64 / report.t_h.max(1.0);
            ratios.push(ratio);
            plot_points.push((chain_kind(&chain.id), chain.kernel.n_states(), ratio));
        }
        let ratio_cell = match report.ratio {
            Some(r) => r.to_string(),
            None => "NA".to_string(),
        };
        rows.push(vec![
            chain.id.clone(),
            chain.kernel.n_states().to_string(),
            ctx.alpha.to_string(),
            mix_cell(&report.t_m.time),
            mix_cell(&report.t_bar_m.time),
            mix_cell(&report.t_l.time),
            report.t_h.to_string(),
            report.tau_g.to_string(),
            ratio_cell,
            report.maxlarge_ok().to_string(),
            report.certificate_ok().to_string(),
        ]);
    }
    let (ratio_min, ratio_max) = (
        ratios.iter().copied().fold(f64::INFINITY, f64::min),
        ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );
    plot_points.sort_by(|a, b| (&a.0, a.1).cmp(&(&b.0, b.1)));
    let plot_rows: Vec<(String, String, String)> = plot_points
        .into_iter()
        .map(|(kind, n, ratio)| (n.to_string(), ratio.to_string(), kind))
        .collect();
    Ok(ExperimentResult {
        name: "equivalence-sweep".to_string(),
        ok: true,
        tables: vec![Table {
            name: "equivalence_sweep".to_string(),
            columns: [
                "chain_id",
                "n",
                "alpha",
                "t_m",
                "t_bar_m",
                "t_L",
                "t_H",
                "tau_g",
                "ratio",
                "maxlarge_ok",
                "certificate_ok",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
            rows,
        }],
        plots: vec![PlotData {
            name: "ratio_vs_n".to_string(),
            rows: plot_rows,
        }],
        summary: json!({
            "ratio_min": ratio_min,
            "ratio_max": ratio_max,
            "skipped": skipped,
        }),
        extra_outputs: Vec::new(),
    })
}

/// Checks every desk-verifiable inequality chain by chain and flags
/// violations; any violation fails the run with exit code 3.
fn inequality_audit(ctx: &Ctx) -> Result<ExperimentResult> {
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut violated = 0usize;
    let mut push = |check: &str, chain: &str, outcome: Result<Option<String>>| {
        // Ok(None) = satisfied, Ok(Some(detail)) = violated, Err = error.
        let (status, detail) = match outcome {
            Ok(None) => ("ok".to_string(), String::new()),
            Ok(Some(detail)) => ("violated".to_string(), detail),
            Err(e) => ("error".to_string(), format!("{e:#}")),
        };
        if status == "violated" {
            violated += 1;
        }
        rows.push(vec![check.to_string(), chain.to_string(), status, detail]);
    };

    for chain in ctx.chains {
        let kernel = &chain.kernel;
        let pi = &chain.pi;
        let n = kernel.n_states();

        push(
            "contraction",
            &chain.id,
            (|| {
                let profile = contraction_profile(kernel, pi, 25)?;
                for t in 0..=25u64 {
                    let (d, dbar) = (profile.d(t), profile.dbar(t));
                    if d > dbar + 1e-10 || dbar > 2.0 * d + 1e-10 {
                        return Ok(Some(format!("t={t}: d={d}, dbar={dbar}")));
                    }
                }
                for s in 0..=25u64 {
                    for t in 0..=(25 - s) {
                        if profile.dbar(s + t) > profile.dbar(s) * profile.dbar(t) + 1e-10 {
                            return Ok(Some(format!("submultiplicativity at s={s}, t={t}")));
                        }
                    }
                }
                Ok(None)
            })(),
        );

        if chain.aperiodic {
            push(
                "skeleton-identity",
                &chain.id,
                (|| {
                    let tbar = mixing_time(kernel, pi, ctx.epsilon, true, ctx.times.t_max)?
                        .time
                        .finite()
                        .ok_or_else(|| anyhow!("standardized mixing time not reached"))?;
                    for k in 1..=6u64 {
                        let got = mixing_time(
                            &skeleton(kernel, k)?,
                            pi,
                            ctx.epsilon,
                            true,
                            ctx.times.t_max,
                        )?
                        .time
                        .finite()
                        .ok_or_else(|| anyhow!("skeleton mixing time not reached"))?;
                        if got != tbar.div_ceil(k) {
                            return Ok(Some(format!(
                                "k={k}: got {got}, expected {}",
                                tbar.div_ceil(k)
                            )));
                        }
                    }
                    Ok(None)
                })(),
            );

            push(
                "lazy-mixing-bound",
                &chain.id,
                (|| {
                    let t_m_half =
                        mixing_time(kernel, pi, ctx.epsilon / 2.0, false, ctx.times.t_max)?
                            .time
                            .finite()
                            .ok_or_else(|| anyhow!("t_m(eps/2) not reached"))?;
                    let t_l = mixing_time(&lazy(kernel), pi, ctx.epsilon, false, ctx.times.t_max)?
                        .time
                        .finite()
                        .ok_or_else(|| anyhow!("t_L not reached"))?;
                    let bound = (2 * t_m_half).max((10.0 / ctx.epsilon).ceil() as u64);
                    Ok((t_l > bound).then(|| format!("t_L={t_l} > {bound}")))
                })(),
            );

            push(
                "epsilon-monotonicity",
                &chain.id,
                (|| {
                    let coarse = mixing_time(kernel, pi, ctx.epsilon, false, ctx.times.t_max)?
                        .time
                        .finite()
                        .ok_or_else(|| anyhow!("t_m not reached"))?;
                    let fine = mixing_time(kernel, pi, ctx.epsilon / 2.0, false, ctx.times.t_max)?
                        .time
                        .finite()
                        .ok_or_else(|| anyhow!("t_m(eps/2) not reached"))?;
                    Ok((fine < coarse).then(|| {
                        format!(
                            "t_m({})={fine} < t_m({})={coarse}",
                            ctx.epsilon / 2.0,
                            ctx.epsilon
                        )
                    }))
                })(),
            );
        }

        push(
            "lazy-trace-commutation",
            &chain.id,
            (|| {
                let subset: Vec<usize> = (0..n).step_by(2).collect();
                let spec = TraceSpec::new(subset, n).map_err(|e| anyhow!("{e}"))?;
                let a = lazy(&trace_exact(kernel, &spec)?);
                let b = trace_exact(&lazy(kernel), &spec)?;
                for i in 0..a.n_states() {
                    for j in 0..a.n_states() {
                        if (a.entry(i, j) - b.entry(i, j)).abs() > 1e-10 {
                            return Ok(Some(format!("entry ({i}, {j})")));
                        }
                    }
                }
                Ok(None)
            })(),
        );

        push(
            "binomial-lazy-identity",
            &chain.id,
            (|| {
                let lazy_kernel = lazy(kernel);
                for t in 1..=12u64 {
                    let lhs = skeleton(&lazy_kernel, t)?;
                    let scale = 0.5f64.powi(t as i32);
                    let mut acc = vec![vec![0.0f64; n]; n];
                    let mut coeff = 1.0f64;
                    for (i, row) in acc.iter_mut().enumerate() {
                        row[i] += scale * coeff;
                    }
                    for s in 1..=t {
                        coeff = coeff * (t as f64 - s as f64 + 1.0) / s as f64;
                        let p_s = skeleton(kernel, s)?;
                        for (i, row) in acc.iter_mut().enumerate() {
                            for (j, slot) in row.iter_mut().enumerate() {
                                *slot += scale * coeff * p_s.entry(i, j);
                            }
                        }
                    }
                    for (i, row) in acc.iter().enumerate() {
                        for (j, &v) in row.iter().enumerate() {
                            if (lhs.entry(i, j) - v).abs() > 1e-10 {
                                return Ok(Some(format!("t={t} entry ({i}, {j})")));
                            }
                        }
                    }
                }
                Ok(None)
            })(),
        );

        if n <= ENUMERATION_CAP {
            push(
                "maxlarge",
                &chain.id,
                (|| {
                    let t_h = max_hitting_time(kernel, pi, ctx.alpha)?.value;
                    let tau_g =
                        large_hitting_time(kernel, pi, ctx.alpha, 0.9, ctx.times.tau_cap)? as f64;
                    Ok((!(0.1 * tau_g <= t_h && t_h <= 2.0 * tau_g))
                        .then(|| format!("t_H={t_h}, tau_g={tau_g}")))
                })(),
            );

            push(
                "submultiplicative-hitting",
                &chain.id,
                (|| {
                    let tau_g = large_hitting_time(kernel, pi, ctx.alpha, 0.9, ctx.times.tau_cap)?;
                    if tau_g == 0 {
                        return Ok(None);
                    }
                    for set in minimal_feasible_sets(pi, ctx.alpha)? {
                        let hit =
                            hitting_moments(kernel, &set, 3 * tau_g, HittingConvention::Inclusive)?;
                        for x in 0..n {
                            for k in 1..=3u64 {
                                let survive = 1.0 - hit.cdf[(x, (k * tau_g) as usize)];
                                if survive > 0.1f64.powi(k as i32) + 1e-12 {
                                    return Ok(Some(format!("set {set:?} start {x} k={k}")));
                                }
                            }
                        }
                    }
                    Ok(None)
                })(),
            );

            push(
                "lazy-hitting-comparison",
                &chain.id,
                (|| {
                    let base = max_hitting_time(kernel, pi, ctx.alpha)?.value;
                    let lazy_hit = max_hitting_time(&lazy(kernel), pi, ctx.alpha)?.value;
                    if base > lazy_hit + 1e-9 {
                        return Ok(Some(format!("t_H={base} > l_H={lazy_hit}")));
                    }
                    Ok((lazy_hit > 3000.0 * base + 1e-9)
                        .then(|| format!("l_H={lazy_hit} > 3000 t_H={}", 3000.0 * base)))
                })(),
            );

            push(
                "mixequivalent",
                &chain.id,
                (|| {
                    let t_m = mixing_time(kernel, pi, ctx.epsilon, false, ctx.times.t_max)?.time;
                    let t_bar = mixing_time(kernel, pi, ctx.epsilon, true, ctx.times.t_max)?.time;
                    match (t_m.finite(), t_bar.finite()) {
                        (Some(a), Some(b)) => {
                            Ok((!(a <= b && b <= 2 * a)).then(|| format!("t_m={a}, t_bar_m={b}")))
                        }
                        _ => Ok(None),
                    }
                })(),
            );
        }
    }

    let ok = violated == 0;
    Ok(ExperimentResult {
        name: "inequality-audit".to_string(),
        ok,
        tables: vec![Table {
            name: "inequality_audit".to_string(),
            columns: ["check", "chain_id", "status", "detail"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            rows,
        }],
        plots: Vec::new(),
        summary: json!({ "violations": violated }),
        extra_outputs: Vec::new(),
    })
}

/// Perturbs each aperiodic chain at the prescribed levels and reports the
/// mixing and hitting stability factors.
fn perturbation_study(ctx: &Ctx) -> Result<ExperimentResult> {
    let mut rows = Vec::new();
    let mut mix_plot = Vec::new();
    let mut hit_plot = Vec::new();
    for chain in ctx.chains.iter().filter(|c| c.aperiodic) {
        if chain.kernel.n_states() > ENUMERATION_CAP {
            continue;
        }
        let t_m = mixing_time(
            &chain.kernel,
            &chain.pi,
            ctx.epsilon,
            false,
            ctx.times.t_max,
        )
        .map_err(|e| anyhow!("{}: {e}", chain.id))?
        .time
        .finite()
        .ok_or_else(|| anyhow!("{}: base chain did not mix", chain.id))?;
        let delta_mix = 1.0 / (256.0 * t_m as f64);
        let perturbed = perturb_within(&chain.kernel, delta_mix)?;
        let pi_perturbed = stationary_distribution(&perturbed)?;
        let t_m_pert = mixing_time(
            &perturbed,
            &pi_perturbed,
            ctx.epsilon,
            false,
            ctx.times.t_max,
        )?
        .time
        .finite()
        .ok_or_else(|| anyhow!("{}: perturbed chain did not mix", chain.id))?;
        let mixing_ok = t_m_pert <= 4 * t_m && t_m <= 4 * t_m_pert;

        let t_h = max_hitting_time(&chain.kernel, &chain.pi, ctx.alpha)?.value;
        let delta_hit = (1.0 / (30.0 * t_h)).min(1.0);
        let perturbed_h = perturb_within(&chain.kernel, delta_hit)?;
        let pi_h = stationary_distribution(&perturbed_h)?;
        let t_h_pert = max_hitting_time(&perturbed_h, &pi_h, ctx.alpha)?.value;
        let hitting_ok = t_h_pert <= 60.0 * t_h;

        mix_plot.push((t_m.to_string(), t_m_pert.to_string(), "mixing".to_string()));
        hit_plot.push((t_h.to_string(), t_h_pert.to_string(), "hitting".to_string()));
        rows.push(vec![
            chain.id.clone(),
            t_m.to_string(),
            delta_mix.to_string(),
            t_m_pert.to_string(),
            mixing_ok.to_string(),
            t_h.to_string(),
            delta_hit.to_string(),
            t_h_pert.to_string(),
            hitting_ok.to_string(),
        ]);
    }
    Ok(ExperimentResult {
        name: "perturbation-study".to_string(),
        ok: true,
        tables: vec![Table {
            name: "perturbation_study".to_string(),
            columns: [
                "chain_id",
                "t_m",
                "delta_mix",
                "t_m_perturbed",
                "mixing_ok",
                "t_H",
                "delta_hit",
                "t_H_perturbed",
                "hitting_ok",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
            rows,
        }],
        plots: vec![
            PlotData {
                name: "perturbed_mixing".to_string(),
                rows: mix_plot,
            },
            PlotData {
                name: "perturbed_hitting".to_string(),
                rows: hit_plot,
            },
        ],
        summary: json!({}),
        extra_outputs: Vec::new(),
    })
}

/// Coupon-collector and bad-event probes against the analytic bounds, for
/// the plain index process, the lazily clocked Gibbs index process, a
/// bivariate Gaussian Gibbs sampler, and a finite Metropolis fixture with
/// exactly known acceptance mass.
fn asf_study(ctx: &Ctx) -> Result<ExperimentResult> {
    let mut rows = Vec::new();
    let mut plot = Vec::new();
    let mut stream = ctx.stream_base;
    let mut next_rng = || {
        stream += 1;
        stream_rng(ctx.seed, stream)
    };
    for d in [2usize, 3, 4] {
        let t = 2 * d as u64;
        let probe = coupon_and_p_probe(
            d,
            ctx.mc_samples,
            ProbeFlavor::Plain { t },
            ctx.confidence,
            &mut next_rng(),
        )
        .map_err(|e| anyhow!("{e}"))?;
        rows.push(vec![
            "plain".to_string(),
            d.to_string(),
            t.to_string(),
            probe.estimate.point.to_string(),
            probe.estimate.halfwidth.to_string(),
            probe.bound.to_string(),
            probe.pass.to_string(),
        ]);
    }
    for d in [2usize, 3, 4] {
        let k = (4.0 * d as f64 * (10.0 * d as f64).ln()).ceil() as u64;
        let probe = coupon_and_p_probe(
            d,
            ctx.mc_samples,
            ProbeFlavor::LazyGibbs { k },
            ctx.confidence,
            &mut next_rng(),
        )
        .map_err(|e| anyhow!("{e}"))?;
        plot.push((
            d.to_string(),
            probe.estimate.point.to_string(),
            "empirical".to_string(),
        ));
        plot.push((d.to_string(), probe.bound.to_string(), "bound".to_string()));
        rows.push(vec![
            "lazy_gibbs".to_string(),
            d.to_string(),
            k.to_string(),
            probe.estimate.point.to_string(),
            probe.estimate.halfwidth.to_string(),
            probe.bound.to_string(),
            probe.pass.to_string(),
        ]);
    }
    // Full Gibbs sampler decomposition on the correlated Gaussian target.
    {
        let d = 2usize;
        let k = (4.0 * d as f64 * (10.0 * d as f64).ln()).ceil() as u64;
        let n = ctx.mc_samples.min(20_000);
        let decomposition = asf_decompose_gibbs(
            || bivariate_gaussian_gibbs(0.5),
            &vec![0.0, 0.0],
            d,
            k,
            n,
            ctx.confidence,
            &mut next_rng(),
        )
        .map_err(|e| anyhow!("{e}"))?;
        let bound = 2.0 * d as f64 * (-(k as f64) / (4.0 * d as f64)).exp();
        let p = &decomposition.p_estimate;
        rows.push(vec![
            "gibbs_sampler".to_string(),
            d.to_string(),
            k.to_string(),
            p.point.to_string(),
            p.halfwidth.to_string(),
            bound.to_string(),
            (p.point - 3.0 * p.halfwidth <= bound).to_string(),
        ]);
    }
    // Finite Metropolis fixture: gamma is exact from the kernel.
    {
        let chain = ctx
            .chains
            .iter()
            .find(|c| c.id.starts_with("random_reversible"))
            .ok_or_else(|| anyhow!("asf-study needs a random_reversible chain in the zoo"))?;
        let n_states = chain.kernel.n_states();
        let gamma = (0..n_states)
            .map(|x| 1.0 - chain.kernel.entry(x, x))
            .fold(f64::INFINITY, f64::min);
        let start = (0..n_states)
            .min_by(|&a, &b| {
                (1.0 - chain.kernel.entry(a, a))
                    .partial_cmp(&(1.0 - chain.kernel.entry(b, b)))
                    .unwrap()
            })
            .unwrap();
        let k = 10u64;
        let kernel = chain.kernel.clone();
        let decomposition = asf_decompose_mh(
            move || KernelSampler::new(kernel.clone()),
            &start,
            k,
            ctx.mc_samples,
            ctx.confidence,
            &mut next_rng(),
        )
        .map_err(|e| anyhow!("{e}"))?;
        let bound = (1.0 - gamma / 2.0).powi(k as i32);
        let p = &decomposition.p_estimate;
        rows.push(vec![
            "mh".to_string(),
            n_states.to_string(),
            k.to_string(),
            p.point.to_string(),
            p.halfwidth.to_string(),
            bound.to_string(),
            (p.point - 3.0 * p.halfwidth <= bound).to_string(),
        ]);
    }
    Ok(ExperimentResult {
        name: "asf-study".to_string(),
        ok: true,
        tables: vec![Table {
            name: "asf_study".to_string(),
            columns: [
                "flavor",
                "d",
                "k_or_t",
                "p_hat",
                "halfwidth",
                "bound",
                "pass",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
            rows,
        }],
        plots: vec![PlotData {
            name: "asf_bad_event".to_string(),
            rows: plot,
        }],
        summary: json!({}),
        extra_outputs: Vec::new(),
    })
}

/// One-step laws of every time-changed sampler against the exact kernel
/// transformations, on three small fixtures, within the DKW band.
fn sampler_fidelity(ctx: &Ctx) -> Result<ExperimentResult> {
    let n_samples = ctx.mc_samples;
    let band = dkw_band(n_samples, ctx.confidence);
    let fixtures: Vec<(&str, FiniteKernel)> = vec![
        (
            "flip",
            FiniteKernel::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]])?,
        ),
        (
            "path3",
            FiniteKernel::new(vec![
                vec![0.0, 1.0, 0.0],
                vec![0.5, 0.0, 0.5],
                vec![0.0, 1.0, 0.0],
            ])?,
        ),
        (
            "bd3",
            FiniteKernel::new(vec![
                vec![0.5, 0.5, 0.0],
                vec![0.25, 0.5, 0.25],
                vec![0.0, 0.5, 0.5],
            ])?,
        ),
    ];
    let mut rows = Vec::new();
    let mut plot = Vec::new();
    let mut dumped: Vec<String> = Vec::new();
    let mut stream = ctx.stream_base;
    for (name, kernel) in &fixtures {
        let n = kernel.n_states();
        let mut configs: Vec<(String, TimeChangeMode<usize>, FiniteKernel, Vec<usize>)> = vec![(
            "lazy".to_string(),
            TimeChangeMode::Lazy,
            lazy(kernel),
            (0..n).collect(),
        )];
        for k in [2u64, 4] {
            configs.push((
                format!("skeleton({k})"),
                TimeChangeMode::Skeleton(k),
                skeleton(kernel, k)?,
                (0..n).collect(),
            ));
        }
        for k in [1u64, 3] {
            configs.push((
                format!("G({k})"),
                TimeChangeMode::G(k),
                build_g(kernel, k)?,
                (0..n).collect(),
            ));
        }
        if n == 3 {
            let spec = TraceSpec::new(vec![0, 2], n).map_err(|e| anyhow!("{e}"))?;
            configs.push((
                "trace".to_string(),
                TimeChangeMode::Trace {
                    in_set: Box::new(|s: &usize| *s == 0 || *s == 2),
                    step_cap: 1_000_000,
                },
                trace_exact(kernel, &spec)?,
                vec![0, 2],
            ));
        }
        for (mode_name, mode, exact, starts) in configs {
            let mut sampler = apply_time_change(KernelSampler::new(kernel.clone()), mode)
                .map_err(|e| anyhow!("{e}"))?;
            if let Some(dir) = ctx.dump_trajectories {
                stream += 1;
                let mut rng = stream_rng(ctx.seed, stream);
                let mut body = String::from("t,state\n");
                let mut state = starts[0];
                body.push_str(&format!("0,{state}\n"));
                sampler.reset();
                for t in 1..=512u64 {
                    state = sampler.step(&state, &mut rng).map_err(|e| anyhow!("{e}"))?;
                    body.push_str(&format!("{t},{state}\n"));
                }
                let file = format!(
                    "trajectory_{name}_{}.csv",
                    mode_name.replace('(', "_").replace(')', "")
                );
                std::fs::write(dir.join(&file), body)?;
                dumped.push(file);
            }
            for (pos, &start) in starts.iter().enumerate() {
                stream += 1;
                let mut rng = stream_rng(ctx.seed, stream);
                let mut histogram = vec![0u64; exact.n_states()];
                for _ in 0..n_samples {
                    sampler.reset();
                    let landed = sampler.step(&start, &mut rng).map_err(|e| anyhow!("{e}"))?;
                    // `starts` doubles as the state list of the transformed
                    // kernel (the watched set for traces, everything else
                    // for the full-space modes).
                    let index = starts
                        .iter()
                        .position(|&s| s == landed)
                        .ok_or_else(|| anyhow!("landed outside the watched set"))?;
                    histogram[index] += 1;
                }
                let empirical: Vec<f64> = histogram
                    .iter()
                    .map(|&c| c as f64 / n_samples as f64)
                    .collect();
                let exact_row: Vec<f64> =
                    (0..exact.n_states()).map(|j| exact.entry(pos, j)).collect();
                let tv = tv_slices(&empirical, &exact_row);
                plot.push((
                    format!("{name}/{mode_name}/{start}"),
                    tv.to_string(),
                    "tv".to_string(),
                ));
                rows.push(vec![
                    name.to_string(),
                    mode_name.clone(),
                    start.to_string(),
                    tv.to_string(),
                    band.to_string(),
                    (tv <= band).to_string(),
                ]);
            }
        }
    }
    Ok(ExperimentResult {
        name: "sampler-fidelity".to_string(),
        ok: true,
        tables: vec![Table {
            name: "sampler_fidelity".to_string(),
            columns: ["fixture", "mode", "start", "tv", "dkw_band", "ok"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            rows,
        }],
        plots: vec![PlotData {
            name: "fidelity_tv".to_string(),
            rows: plot,
        }],
        summary: json!({ "dkw_band": band }),
        extra_outputs: dumped,
    })
}

/// Single-kernel analysis for `mixhit analyze`.
pub fn analyze_kernel(
    kernel: &FiniteKernel,
    alpha: f64,
    epsilon: f64,
) -> Result<times::EquivalenceReport> {
    equivalence_report(kernel, alpha, epsilon, &TimesConfig::default()).map_err(|e| anyhow!("{e}"))
}
