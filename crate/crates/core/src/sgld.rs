//! Stochastic-gradient Langevin sampling of the posterior and ensemble
//! averaging of the sampled models.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::family::{Context, Dataset, ModelFamily, ParamVector};
use crate::mixture::PredictiveDistribution;
use crate::prior::PriorSpec;
use crate::rng;

/// How iterates leaving the domain are brought back.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Boundary {
    #[default]
    Reflect,
    Clip,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SgldConfig {
    pub step_size: f64,
    pub steps: usize,
    pub burn_in: usize,
    pub thinning: usize,
    /// Minibatch size; `None` for full-batch gradients.
    pub minibatch: Option<usize>,
    pub boundary: Boundary,
    /// Injected noise; off gives plain gradient ascent (diagnostic).
    pub noise: bool,
    /// Starting point; the family's default point when absent.
    pub init: Option<ParamVector>,
}

impl Default for SgldConfig {
    fn default() -> Self {
        Self {
            step_size: 1e-4,
            steps: 100_000,
            burn_in: 5_000,
            thinning: 10,
            minibatch: None,
            boundary: Boundary::Reflect,
            noise: true,
            init: None,
        }
    }
}

impl SgldConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0) || !self.step_size.is_finite() {
            return Err(Error::InvalidArgument("step size must be positive"));
        }
        if self.burn_in >= self.steps || self.thinning == 0 {
            return Err(Error::InvalidArgument("need burn_in < steps and thinning >= 1"));
        }
        if self.minibatch == Some(0) {
            return Err(Error::InvalidArgument("minibatch must be positive"));
        }
        Ok(())
    }
}

/// Kept iterates of a chain.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnsembleSample {
    pub thetas: Vec<ParamVector>,
}

/// Folds `x` into `[lo, hi]` by repeated reflection.
fn reflect(x: f64, lo: f64, hi: f64) -> f64 {
    let w = hi - lo;
    let mut u = (x - lo) % (2.0 * w);
    if u < 0.0 {
        u += 2.0 * w;
    }
    if u > w {
        u = 2.0 * w - u;
    }
    lo + u
}

/// Puts `theta` back into the domain. Probability rows are also reflected
/// across (or clipped onto) the face `Σθ = 1`.
fn enforce(family: &ModelFamily, theta: &mut [f64], rule: Boundary) {
    let bounds = family.bounds();
    let w = family.row_width();
    let fix_box = |t: &mut [f64]| {
        for (v, &(lo, hi)) in t.iter_mut().zip(&bounds) {
            *v = match rule {
                Boundary::Reflect => reflect(*v, lo, hi),
                Boundary::Clip => v.clamp(lo, hi),
            };
        }
    };
    fix_box(theta);
    if w > 1 {
        for _ in 0..8 {
            let mut ok = true;
            for row in theta.chunks_mut(w) {
                let s: f64 = row.iter().sum();
                if s > 1.0 {
                    ok = false;
                    let shift = match rule {
                        Boundary::Reflect => 2.0 * (s - 1.0) / w as f64,
                        Boundary::Clip => (s - 1.0) / w as f64,
                    };
                    row.iter_mut().for_each(|v| *v -= shift);
                }
            }
            if ok {
                break;
            }
            fix_box(theta);
        }
        // last resort: scale rows onto the simplex
        for row in theta.chunks_mut(w) {
            let s: f64 = row.iter().sum();
            if s > 1.0 {
                row.iter_mut().for_each(|v| *v /= s);
            }
        }
    }
    // probability families have infinite scores on the boundary
    if family.alphabet().is_some() {
        const MARGIN: f64 = 1e-12;
        for v in theta.iter_mut() {
            *v = v.clamp(MARGIN, 1.0 - MARGIN);
        }
        if w > 1 {
            for row in theta.chunks_mut(w) {
                let s: f64 = row.iter().sum();
                if s > 1.0 - MARGIN {
                    row.iter_mut().for_each(|v| *v *= (1.0 - MARGIN) / s);
                }
            }
        }
    }
}

/// Langevin chain `θ ← θ + (η/2)∇ log[w(θ) P_θ(data)] + √η ξ`, with
/// minibatch gradients rescaled to the full dataset.
pub fn sgld_chain(
    family: &ModelFamily,
    data: &Dataset,
    prior: &PriorSpec,
    config: &SgldConfig,
    seed: u64,
) -> Result<EnsembleSample> {
    config.validate()?;
    let d = family.dimension();
    let mut theta = match &config.init {
        Some(t) => {
            family.check_param(t)?;
            t.to_vec()
        }
        None => family.default_point().to_vec(),
    };
    enforce(family, &mut theta, config.boundary);
    let limit = 1e3 * PriorSpec::ball_radius(family).max(1.0);
    let n = data.len();
    let mut r = rng::stream(seed, 0);
    let sd = libm::sqrt(config.step_size);
    let mut kept = Vec::with_capacity((config.steps - config.burn_in) / config.thinning + 1);
    let mut idx: Vec<usize> = Vec::new();
    for step in 0..config.steps {
        // Markov data is never subsampled: its terms depend on their neighbours
        let mut grad = match config.minibatch {
            Some(b) if b < n && family.order() == 0 => {
                idx.clear();
                for _ in 0..b {
                    idx.push((rng::uniform(&mut r) * n as f64) as usize % n);
                }
                let g = family.grad_log_likelihood(&theta, &data.select(&idx))?;
                let scale = n as f64 / b as f64;
                g.into_iter().map(|v| v * scale).collect()
            }
            _ => family.grad_log_likelihood(&theta, data)?,
        };
        for (g, p) in grad.iter_mut().zip(prior.log_density_gradient(family, &theta)?) {
            *g += p;
        }
        for (i, t) in theta.iter_mut().enumerate() {
            *t += 0.5 * config.step_size * grad[i];
            if config.noise {
                *t += sd * rng::normal(&mut r);
            }
        }
        let norm = libm::sqrt(theta.iter().map(|v| v * v).sum::<f64>());
        if !(norm <= limit) {
            return Err(Error::Diverged { step });
        }
        enforce(family, &mut theta, config.boundary);
        debug_assert_eq!(theta.len(), d);
        if step >= config.burn_in && (step - config.burn_in).is_multiple_of(config.thinning) {
            kept.push(ParamVector::new(theta.clone()));
        }
    }
    Ok(EnsembleSample { thetas: kept })
}

/// Uniform average of `P_θ(· | context)` over the ensemble.
pub fn ensemble_predict(samples: &EnsembleSample, family: &ModelFamily, context: Context<'_>) -> Result<PredictiveDistribution> {
    if samples.thetas.is_empty() {
        return Err(Error::InvalidArgument("empty ensemble"));
    }
    let m = samples.thetas.len() as f64;
    let mut acc: Option<PredictiveDistribution> = None;
    for t in &samples.thetas {
        let p = family.predictive(t, context)?;
        acc = Some(match (acc, p) {
            (None, PredictiveDistribution::Discrete { probs }) => {
                PredictiveDistribution::Discrete { probs: probs.iter().map(|v| v / m).collect() }
            }
            (Some(PredictiveDistribution::Discrete { mut probs }), PredictiveDistribution::Discrete { probs: p }) => {
                probs.iter_mut().zip(&p).for_each(|(a, b)| *a += b / m);
                PredictiveDistribution::Discrete { probs }
            }
            (None, PredictiveDistribution::GaussianMixture { means, variance, .. }) => {
                PredictiveDistribution::GaussianMixture { weights: alloc::vec![1.0 / m], means, variance }
            }
            (
                Some(PredictiveDistribution::GaussianMixture { mut weights, mut means, variance }),
                PredictiveDistribution::GaussianMixture { means: mu, .. },
            ) => {
                weights.push(1.0 / m);
                means.extend(mu);
                PredictiveDistribution::GaussianMixture { weights, means, variance }
            }
            _ => unreachable!("one family yields one predictive kind"),
        });
    }
    let mut out = acc.expect("nonempty ensemble");
    if let PredictiveDistribution::Discrete { probs } = &mut out {
        let s: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|v| *v /= s);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflection_folds_into_interval() {
        assert_eq!(reflect(1.25, 0.0, 1.0), 0.75);
        assert_eq!(reflect(-0.25, 0.0, 1.0), 0.25);
        assert!((reflect(3.3, 0.0, 1.0) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn simplex_reflection_stays_feasible() {
        let fam = ModelFamily::categorical(3).unwrap();
        let mut t = [0.9, 0.6];
        enforce(&fam, &mut t, Boundary::Reflect);
        assert!(fam.contains(&t), "{t:?}");
        let mut t = [0.9, 0.6];
        enforce(&fam, &mut t, Boundary::Clip);
        assert!(fam.contains(&t), "{t:?}");
    }

    #[test]
    fn noiseless_chain_finds_the_mle() {
        let fam = ModelFamily::linear_gaussian(alloc::vec![1.0], 1.0, 5.0).unwrap();
        let data = fam.sample(&[0.7], 40, 2).unwrap();
        let cfg = SgldConfig { step_size: 1e-2, steps: 2000, burn_in: 1999, thinning: 1, noise: false, ..Default::default() };
        let chain = sgld_chain(&fam, &data, &PriorSpec::uniform(2), &cfg, 0).unwrap();
        let mle = crate::fisher::maximum_likelihood(&fam, &data).unwrap();
        assert!((chain.thetas[0][0] - mle[0]).abs() < 1e-6);
    }

    #[test]
    fn divergence_is_reported() {
        // one proposal lands beyond 1e3·R even though reflection would fold it back
        let fam = ModelFamily::linear_gaussian(alloc::vec![1.0], 1.0, 1.0).unwrap();
        let data = fam.sample(&[0.5], 50, 1).unwrap();
        let cfg = SgldConfig { step_size: 200.0, steps: 200, burn_in: 0, thinning: 1, ..Default::default() };
        let r = sgld_chain(&fam, &data, &PriorSpec::uniform(2), &cfg, 0);
        assert!(matches!(r, Err(Error::Diverged { .. })), "{r:?}");
    }

    #[test]
    fn single_sample_ensemble() {
        let fam = ModelFamily::Bernoulli;
        let s = EnsembleSample { thetas: alloc::vec![ParamVector::new(alloc::vec![0.3])] };
        let p = ensemble_predict(&s, &fam, Context::Symbols(&[])).unwrap();
        assert_eq!(p, fam.predictive(&[0.3], Context::Symbols(&[])).unwrap());
    }
}
