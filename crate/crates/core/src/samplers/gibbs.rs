//! Random-scan Gibbs sampling through the forward-mapping representation:
//! each step draws a coordinate uniformly and replaces it through the
//! conditional inverse CDF evaluated at an open-uniform variate.

use rand::Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use super::{IndexedSampler, MarkovSampler, SamplerResult, StateDescriptor};
use crate::rng::StreamRng;

/// Conditional inverse CDF `(x, i, u) -> F_{x,i}^{-1}(u)`.
pub type ConditionalInverseCdf = Box<dyn Fn(&[f64], usize, f64) -> f64 + Send + Sync>;

/// A Gibbs kernel given by its conditional inverse CDFs.
pub struct GibbsKernel {
    dimension: usize,
    conditional_inverse_cdf: ConditionalInverseCdf,
}

impl GibbsKernel {
    pub fn new(dimension: usize, conditional_inverse_cdf: ConditionalInverseCdf) -> Self {
        Self {
            dimension,
            conditional_inverse_cdf,
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn conditional_inverse(&self, x: &[f64], i: usize, u: f64) -> f64 {
        (self.conditional_inverse_cdf)(x, i, u)
    }
}

/// The one-step sampler: `X_{t+1}` differs from `X_t` in exactly the drawn
/// coordinate `i_t`, which [`IndexedSampler::last_index`] exposes for
/// event bookkeeping.
pub struct GibbsSampler {
    kernel: GibbsKernel,
    last_index: Option<usize>,
}

pub fn make_gibbs(kernel: GibbsKernel) -> GibbsSampler {
    GibbsSampler {
        kernel,
        last_index: None,
    }
}

impl GibbsSampler {
    pub fn kernel(&self) -> &GibbsKernel {
        &self.kernel
    }
}

/// Uniform on the open interval (0, 1); the closed endpoints would send
/// inverse CDFs to their infinities.
pub(crate) fn open_unit(rng: &mut StreamRng) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

impl MarkovSampler for GibbsSampler {
    type State = Vec<f64>;

    fn step(&mut self, state: &Vec<f64>, rng: &mut StreamRng) -> SamplerResult<Vec<f64>> {
        let i = rng.random_range(0..self.kernel.dimension);
        let u = open_unit(rng);
        let mut next = state.clone();
        next[i] = self.kernel.conditional_inverse(state, i, u);
        self.last_index = Some(i);
        Ok(next)
    }

    fn descriptor(&self) -> StateDescriptor {
        StateDescriptor::Continuous {
            dimension: self.kernel.dimension,
        }
    }

    fn reset(&mut self) {
        self.last_index = None;
    }
}

impl IndexedSampler for GibbsSampler {
    fn last_index(&self) -> Option<usize> {
        self.last_index
    }
}

/// Gibbs sampler for a standard bivariate Gaussian with the given
/// correlation: each conditional is `N(rho * other, 1 - rho^2)`.
pub fn bivariate_gaussian_gibbs(rho: f64) -> GibbsSampler {
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let sd = (1.0 - rho * rho).sqrt();
    make_gibbs(GibbsKernel::new(
        2,
        Box::new(move |x: &[f64], i: usize, u: f64| {
            let other = x[1 - i];
            rho * other + sd * normal.inverse_cdf(u)
        }),
    ))
}
