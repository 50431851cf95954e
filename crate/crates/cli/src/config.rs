//! The experiment configuration file: a single TOML document with
//! `[chains]`, `[experiments]`, and `[seeds]` sections. Every field has a
//! default so a minimal config is an empty file.

use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use mixhit_core::zoo::{build_zoo_chain, ZooChain, ZooSpec};
use mixhit_core::FiniteKernel;

pub const ALL_EXPERIMENTS: &[&str] = &[
    "equivalence-sweep",
    "inequality-audit",
    "perturbation-study",
    "asf-study",
    "sampler-fidelity",
];

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub chains: ChainsSection,
    #[serde(default)]
    pub experiments: ExperimentsSection,
    #[serde(default)]
    pub seeds: SeedsSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainsSection {
    /// Include the built-in zoo (flip, lazy uniform, cycles, hypercubes,
    /// Ehrenfest, birth-death, Metropolized random chains).
    #[serde(default = "default_true")]
    pub default_zoo: bool,
    /// Extra chains as zoo spec strings, e.g. `"cycle(14)"`.
    #[serde(default)]
    pub extra: Vec<String>,
    /// External kernels (JSON or whitespace text format).
    #[serde(default)]
    pub kernel_files: Vec<String>,
}

impl Default for ChainsSection {
    fn default() -> Self {
        Self {
            default_zoo: true,
            extra: Vec::new(),
            kernel_files: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentsSection {
    /// Which suites to run, in order. An empty list is a valid run that
    /// produces a manifest with zero outputs.
    #[serde(default = "default_experiments")]
    pub run: Vec<String>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Monte Carlo sample count for the sampling suites.
    #[serde(default = "default_mc_samples")]
    pub mc_samples: u64,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
}

impl Default for ExperimentsSection {
    fn default() -> Self {
        Self {
            run: default_experiments(),
            alpha: default_alpha(),
            epsilon: default_epsilon(),
            mc_samples: default_mc_samples(),
            confidence: default_confidence(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedsSection {
    #[serde(default = "default_seed")]
    pub master: u64,
}

impl Default for SeedsSection {
    fn default() -> Self {
        Self {
            master: default_seed(),
        }
    }
}

fn default_true() -> bool {
    true
}

fn default_experiments() -> Vec<String> {
    ALL_EXPERIMENTS.iter().map(|s| s.to_string()).collect()
}

fn default_alpha() -> f64 {
    0.25
}

fn default_epsilon() -> f64 {
    0.25
}

fn default_mc_samples() -> u64 {
    100_000
}

fn default_confidence() -> f64 {
    0.99
}

fn default_seed() -> u64 {
    42
}

impl Config {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Config = toml::from_str(text).context("parsing config")?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        for name in &self.experiments.run {
            if !ALL_EXPERIMENTS.contains(&name.as_str()) {
                bail!(
                    "unknown experiment `{name}` in [experiments].run; known: {}",
                    ALL_EXPERIMENTS.join(", ")
                );
            }
        }
        if !(self.experiments.alpha > 0.0 && self.experiments.alpha < 0.5) {
            bail!(
                "[experiments].alpha = {} outside (0, 0.5)",
                self.experiments.alpha
            );
        }
        if !(self.experiments.epsilon > 0.0 && self.experiments.epsilon < 1.0) {
            bail!(
                "[experiments].epsilon = {} outside (0, 1)",
                self.experiments.epsilon
            );
        }
        if self.experiments.mc_samples < 1000 {
            bail!(
                "[experiments].mc_samples = {} below the minimum 1000",
                self.experiments.mc_samples
            );
        }
        for spec in &self.chains.extra {
            ZooSpec::from_str(spec).map_err(|e| anyhow::anyhow!("{e}"))?;
        }
        Ok(())
    }

    /// Builds every configured chain in a deterministic order.
    pub fn build_chains(&self) -> Result<Vec<ZooChain>> {
        let mut chains = Vec::new();
        if self.chains.default_zoo {
            chains.extend(mixhit_core::zoo::default_zoo());
        }
        for spec in &self.chains.extra {
            let parsed = ZooSpec::from_str(spec).map_err(|e| anyhow::anyhow!("{e}"))?;
            chains.push(build_zoo_chain(&parsed).map_err(|e| anyhow::anyhow!("{e}"))?);
        }
        for file in &self.chains.kernel_files {
            let kernel = load_kernel(Path::new(file))?;
            let pi = mixhit_core::stationary_distribution(&kernel)
                .map_err(|e| anyhow::anyhow!("{file}: {e}"))?;
            let aperiodic = mixhit_core::zoo::is_aperiodic(&kernel);
            chains.push(ZooChain {
                id: file.clone(),
                kernel,
                pi,
                aperiodic,
            });
        }
        Ok(chains)
    }
}

/// Loads a kernel from either serialization format, sniffing JSON by its
/// leading brace.
pub fn load_kernel(path: &Path) -> Result<FiniteKernel> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading kernel {}", path.display()))?;
    let parsed = if text.trim_start().starts_with('{') {
        FiniteKernel::from_json(&text)
    } else {
        FiniteKernel::from_text(&text)
    };
    parsed.map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gets_defaults() {
        let c = Config::from_toml("").unwrap();
        assert!(c.chains.default_zoo);
        assert_eq!(c.experiments.run.len(), 5);
        assert_eq!(c.seeds.master, 42);
    }

    #[test]
    fn unknown_experiment_rejected() {
        let err = Config::from_toml("[experiments]\nrun = [\"bogus\"]\n").unwrap_err();
        assert!(err.to_string().contains("bogus"));
    }

    #[test]
    fn unknown_field_rejected_with_diagnostic() {
        let err = Config::from_toml("[experiments]\nalhpa = 0.2\n").unwrap_err();
        let shown = format!("{err:#}");
        assert!(shown.contains("alhpa"), "diagnostic was: {shown}");
    }

    #[test]
    fn extra_chain_specs_validated() {
        assert!(Config::from_toml("[chains]\nextra = [\"cycle(9)\"]\n").is_ok());
        assert!(Config::from_toml("[chains]\nextra = [\"wheel(9)\"]\n").is_err());
    }
}
