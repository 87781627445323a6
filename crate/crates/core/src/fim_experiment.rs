//! Fisher spectrum of a small softmax network trained on structured versus
//! randomized synthetic data.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::family::{Dataset, ModelFamily, SoftmaxNet};
use crate::fisher::{dataset_fim, eigen_spectrum, example_scores};
use crate::math::{exp, sqrt};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum DatasetKind {
    /// Well-separated Gaussian clusters, one per class.
    Structured,
    /// The structured inputs with their labels shuffled.
    RandomLabels,
    /// Isotropic noise inputs with uniformly random labels.
    RandomInputs,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub max_steps: usize,
    /// Plateau when the mean loss drops by less than this over `window`
    /// steps.
    pub tolerance: f64,
    pub window: usize,
    /// Standard deviation of the initial weights.
    pub init_scale: f64,
    /// Distance between cluster centres and the origin.
    pub separation: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self { learning_rate: 0.5, max_steps: 20_000, tolerance: 1e-5, window: 200, init_scale: 0.1, separation: 3.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FimExperimentReport {
    pub kind: DatasetKind,
    pub dimension: usize,
    pub n_train: usize,
    pub eigenvalues: Vec<f64>,
    /// `Σ_{i>d/2} λ_i / Σ_i λ_i`.
    pub tail_mass_ratio: f64,
    /// Mean per-example score norm at the trained point.
    pub mean_grad_norm: f64,
    pub final_loss: f64,
    pub steps: usize,
    pub converged: bool,
    pub seed: u64,
}

/// Synthetic classification data; the structured and random-label kinds
/// share inputs for a given seed.
pub fn synthetic_dataset(kind: DatasetKind, net: &SoftmaxNet, n_train: usize, seed: u64, separation: f64) -> Dataset {
    let mut r = rng::stream(seed, 1);
    let centres: Vec<Vec<f64>> = (0..net.classes)
        .map(|_| {
            let v: Vec<f64> = (0..net.inputs).map(|_| rng::normal(&mut r)).collect();
            let norm = sqrt(v.iter().map(|x| x * x).sum::<f64>()).max(1e-12);
            v.iter().map(|x| separation * x / norm).collect()
        })
        .collect();
    let mut inputs = Vec::with_capacity(n_train);
    let mut labels = Vec::with_capacity(n_train);
    for i in 0..n_train {
        let c = i % net.classes;
        inputs.push(centres[c].iter().map(|m| m + rng::normal(&mut r)).collect::<Vec<f64>>());
        labels.push(c);
    }
    match kind {
        DatasetKind::Structured => {}
        DatasetKind::RandomLabels => {
            let mut s = rng::stream(seed, 2);
            labels.shuffle(&mut s);
        }
        DatasetKind::RandomInputs => {
            let mut s = rng::stream(seed, 3);
            for x in inputs.iter_mut() {
                x.iter_mut().for_each(|v| *v = sqrt(1.0 + separation * separation / net.inputs as f64) * rng::normal(&mut s));
            }
            for l in labels.iter_mut() {
                *l = (rng::uniform(&mut s) * net.classes as f64) as usize % net.classes;
            }
        }
    }
    Dataset::Classification { inputs, labels }
}

fn mean_loss(family: &ModelFamily, theta: &[f64], data: &Dataset) -> Result<f64> {
    Ok(-family.log_likelihood(theta, data)? / data.len() as f64)
}

/// Initial weights drawn `N(0, init_scale²)` and clipped to the box.
pub fn initial_weights(net: &SoftmaxNet, init_scale: f64, seed: u64) -> Vec<f64> {
    let mut r = rng::stream(seed, 4);
    (0..net.dimension())
        .map(|_| (init_scale * rng::normal(&mut r)).clamp(-net.half_width, net.half_width))
        .collect()
}

/// Full-batch gradient descent on the mean log-loss, projected onto the
/// parameter box. Returns the trained point, final loss, steps taken and
/// whether the loss plateaued.
pub fn train(net: &SoftmaxNet, data: &Dataset, config: &TrainingConfig, seed: u64) -> Result<(Vec<f64>, f64, usize, bool)> {
    let family = ModelFamily::SoftmaxNet(net.clone());
    let mut theta = initial_weights(net, config.init_scale, seed);
    let n = data.len() as f64;
    let mut history = vec![mean_loss(&family, &theta, data)?];
    let mut converged = false;
    let mut steps = 0;
    while steps < config.max_steps {
        let g = family.grad_log_likelihood(&theta, data)?;
        for (t, gi) in theta.iter_mut().zip(&g) {
            *t = (*t + config.learning_rate * gi / n).clamp(-net.half_width, net.half_width);
        }
        steps += 1;
        history.push(mean_loss(&family, &theta, data)?);
        if steps >= config.window {
            let prev = history[steps - config.window];
            if prev - history[steps] < config.tolerance {
                converged = true;
                break;
            }
        }
    }
    let loss = *history.last().expect("nonempty");
    Ok((theta, loss, steps, converged))
}

/// Trains the network on the chosen data, then takes the spectrum of the
/// empirical Fisher built from observed-label scores.
pub fn fim_spectrum_experiment(
    kind: DatasetKind,
    net: &SoftmaxNet,
    n_train: usize,
    seed: u64,
    config: &TrainingConfig,
) -> Result<FimExperimentReport> {
    if net.dimension() > 200 {
        return Err(Error::TooLarge("network has more than 200 parameters"));
    }
    if n_train == 0 {
        return Err(Error::InvalidArgument("training set is empty"));
    }
    let family = ModelFamily::SoftmaxNet(net.clone());
    let data = synthetic_dataset(kind, net, n_train, seed, config.separation);
    let (theta, final_loss, steps, converged) = train(net, &data, config, seed)?;
    let fim = dataset_fim(&family, &theta, &data)?;
    let eigenvalues = eigen_spectrum(&fim)?;
    let d = eigenvalues.len();
    let total: f64 = eigenvalues.iter().map(|l| l.max(0.0)).sum();
    let tail: f64 = eigenvalues[d / 2..].iter().map(|l| l.max(0.0)).sum();
    let scores = example_scores(&family, &theta, &data)?;
    let mean_grad_norm = scores.iter().map(|g| sqrt(g.iter().map(|v| v * v).sum::<f64>())).sum::<f64>() / n_train as f64;
    Ok(FimExperimentReport {
        kind,
        dimension: d,
        n_train,
        eigenvalues,
        tail_mass_ratio: if total > 0.0 { tail / total } else { 0.0 },
        mean_grad_norm,
        final_loss,
        steps,
        converged,
        seed,
    })
}

/// Training accuracy of the network at `theta`.
pub fn accuracy(net: &SoftmaxNet, theta: &[f64], data: &Dataset) -> f64 {
    let Dataset::Classification { inputs, labels } = data else { return f64::NAN };
    let hits = inputs
        .iter()
        .zip(labels)
        .filter(|(x, &y)| {
            let lp = net.forward(theta, x).1;
            let best = (0..lp.len()).max_by(|&a, &b| exp(lp[a]).total_cmp(&exp(lp[b]))).unwrap_or(0);
            best == y
        })
        .count();
    hits as f64 / labels.len().max(1) as f64
}
