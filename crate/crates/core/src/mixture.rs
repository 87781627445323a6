//! Bayesian mixture learners: marginal likelihood, posterior weights and
//! the sequential, batch and supervised predictive distributions, all by
//! quadrature over a discretized prior in log space.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::family::{Context, Dataset, ModelFamily, ParamVector};
use crate::math::{exp, ln, log_sum_exp, log_sum_exp_pair, normalize_log};
use crate::prior::PriorSpec;

/// Normalized distribution over the next outcome.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum PredictiveDistribution {
    /// Probabilities over a finite alphabet or label set.
    Discrete { probs: Vec<f64> },
    /// Mixture of Gaussians sharing one variance (regression labels).
    GaussianMixture { weights: Vec<f64>, means: Vec<f64>, variance: f64 },
}

impl PredictiveDistribution {
    pub fn probs(&self) -> Option<&[f64]> {
        match self {
            PredictiveDistribution::Discrete { probs } => Some(probs),
            _ => None,
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            PredictiveDistribution::Discrete { probs } => {
                probs.iter().enumerate().map(|(i, p)| i as f64 * p).sum()
            }
            PredictiveDistribution::GaussianMixture { weights, means, .. } => {
                weights.iter().zip(means).map(|(w, m)| w * m).sum()
            }
        }
    }

    /// Total mass (1 up to rounding for a valid distribution).
    pub fn total_mass(&self) -> f64 {
        match self {
            PredictiveDistribution::Discrete { probs } => probs.iter().sum(),
            PredictiveDistribution::GaussianMixture { weights, .. } => weights.iter().sum(),
        }
    }

    /// Log-probability (or log-density) of an observed outcome.
    pub fn log_prob_symbol(&self, symbol: usize) -> f64 {
        match self {
            PredictiveDistribution::Discrete { probs } => probs.get(symbol).map_or(f64::NEG_INFINITY, |&p| crate::math::ln(p)),
            _ => f64::NAN,
        }
    }

    pub fn log_density(&self, y: f64) -> f64 {
        match self {
            PredictiveDistribution::GaussianMixture { weights, means, variance } => {
                let terms: Vec<f64> = weights
                    .iter()
                    .zip(means)
                    .map(|(w, m)| crate::math::ln(*w) + crate::family::gaussian_log_density(y - m, *variance))
                    .collect();
                log_sum_exp(&terms)
            }
            _ => f64::NAN,
        }
    }

    /// Total-variation distance between two discrete predictives.
    pub fn total_variation(&self, other: &PredictiveDistribution) -> Option<f64> {
        let (p, q) = (self.probs()?, other.probs()?);
        if p.len() != q.len() {
            return None;
        }
        Some(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
    }
}

/// Weighted support points of a (posterior) mixture; weights are kept
/// normalized in log space and never change after construction.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PosteriorGrid {
    // shared between a prior grid and its posteriors
    nodes: Arc<[ParamVector]>,
    log_weights: Vec<f64>,
    stochastic: bool,
}

impl PosteriorGrid {
    /// Normalizes `log_weights`; fails when every weight is zero.
    pub fn new(nodes: Vec<ParamVector>, mut log_weights: Vec<f64>, stochastic: bool) -> Result<Self> {
        if nodes.len() != log_weights.len() {
            return Err(Error::InvalidArgument("one log-weight per node"));
        }
        let z = normalize_log(&mut log_weights);
        if !z.is_finite() {
            return Err(Error::DegenerateEvidence);
        }
        Ok(Self { nodes: nodes.into(), log_weights, stochastic })
    }

    pub fn nodes(&self) -> &[ParamVector] {
        &self.nodes
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|&l| exp(l)).collect()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Whether the nodes are random draws (importance sampling) rather
    /// than a deterministic grid.
    pub fn is_stochastic(&self) -> bool {
        self.stochastic
    }

    pub fn node_log_likelihoods(&self, family: &ModelFamily, data: &Dataset) -> Result<Vec<f64>> {
        match data {
            Dataset::Symbols(xs) if family.is_sequence() => {
                // transition counts once, then one pass over the rows per node
                family.check_symbols(xs)?;
                let a = family.alphabet().expect("sequence family");
                let m = family.order();
                let mut counts = vec![0usize; a.pow(m as u32) * a];
                for t in m..xs.len() {
                    let ctx = xs[t - m..t].iter().fold(0, |i, &s| i * a + s);
                    counts[ctx * a + xs[t]] += 1;
                }
                let prefix = -(m.min(xs.len()) as f64) * ln(a as f64);
                self.nodes
                    .iter()
                    .map(|t| {
                        family.check_param(t)?;
                        let p = family.rows(t);
                        Ok(prefix + counts.iter().zip(&p).map(|(&c, &q)| if c == 0 { 0.0 } else { c as f64 * ln(q) }).sum::<f64>())
                    })
                    .collect()
            }
            _ => self.nodes.iter().map(|t| family.log_likelihood(t, data)).collect(),
        }
    }

    /// `ln Σ_j w_j P_j(data)`.
    pub fn log_evidence(&self, family: &ModelFamily, data: &Dataset) -> Result<f64> {
        let ll = self.node_log_likelihoods(family, data)?;
        let z = log_sum_exp_pair(&self.log_weights, &ll);
        if z == f64::NEG_INFINITY {
            return Err(Error::DegenerateEvidence);
        }
        Ok(z)
    }

    /// Posterior `w_j P_j(data) / Σ_k w_k P_k(data)` on the same nodes.
    pub fn update(&self, family: &ModelFamily, data: &Dataset) -> Result<PosteriorGrid> {
        let ll = self.node_log_likelihoods(family, data)?;
        let mut lw: Vec<f64> = self.log_weights.iter().zip(&ll).map(|(w, l)| w + l).collect();
        if !normalize_log(&mut lw).is_finite() {
            return Err(Error::DegenerateEvidence);
        }
        Ok(PosteriorGrid { nodes: Arc::clone(&self.nodes), log_weights: lw, stochastic: self.stochastic })
    }

    /// `Σ_j w_j P_j(· | context)`.
    pub fn predictive(&self, family: &ModelFamily, context: Context<'_>) -> Result<PredictiveDistribution> {
        match context {
            Context::Symbols(history) => {
                let a = family.alphabet().ok_or(Error::DataShape("symbol context for a supervised family"))?;
                if let Some(&symbol) = history.iter().find(|&&s| s >= a) {
                    return Err(Error::Symbol { symbol, alphabet: a });
                }
                let mut probs = vec![0.0; a];
                for (node, &lw) in self.nodes.iter().zip(&self.log_weights) {
                    let w = exp(lw);
                    if w == 0.0 {
                        continue;
                    }
                    let rows = family.rows(node);
                    let m = family.order();
                    if history.len() < m {
                        probs.iter_mut().for_each(|acc| *acc += w / a as f64);
                    } else {
                        let ctx = history[history.len() - m..].iter().fold(0, |i, &s| i * a + s);
                        for (acc, &p) in probs.iter_mut().zip(&rows[ctx * a..(ctx + 1) * a]) {
                            *acc += w * p;
                        }
                    }
                }
                let total: f64 = probs.iter().sum();
                probs.iter_mut().for_each(|p| *p /= total);
                Ok(PredictiveDistribution::Discrete { probs })
            }
            Context::Features(x) => match family {
                ModelFamily::LinearGaussian { noise_var, .. } => {
                    if x.len() != family.dimension() {
                        return Err(Error::DataShape("feature vector length"));
                    }
                    let mut weights = Vec::with_capacity(self.len());
                    let mut means = Vec::with_capacity(self.len());
                    for (node, &lw) in self.nodes.iter().zip(&self.log_weights) {
                        weights.push(exp(lw));
                        means.push(crate::family::dot(node, x));
                    }
                    let total: f64 = weights.iter().sum();
                    weights.iter_mut().for_each(|w| *w /= total);
                    Ok(PredictiveDistribution::GaussianMixture { weights, means, variance: *noise_var })
                }
                ModelFamily::SoftmaxNet(net) => {
                    let mut probs = vec![0.0; net.classes];
                    for (node, &lw) in self.nodes.iter().zip(&self.log_weights) {
                        let w = exp(lw);
                        if w == 0.0 {
                            continue;
                        }
                        for (acc, l) in probs.iter_mut().zip(family.label_log_probs(node, x)?) {
                            *acc += w * exp(l);
                        }
                    }
                    let total: f64 = probs.iter().sum();
                    probs.iter_mut().for_each(|p| *p /= total);
                    Ok(PredictiveDistribution::Discrete { probs })
                }
                _ => Err(Error::DataShape("feature context for a sequence family")),
            },
        }
    }
}

/// `ln Q(data) = ln ∫ w(θ) P_θ(data) dθ` in nats.
pub fn marginal_likelihood(prior: &PriorSpec, family: &ModelFamily, data: &Dataset) -> Result<f64> {
    prior.discretize(family)?.log_evidence(family, data)
}

/// Posterior weights `w(θ | data)` on the prior's quadrature nodes.
pub fn posterior_weights(prior: &PriorSpec, family: &ModelFamily, data: &Dataset) -> Result<PosteriorGrid> {
    prior.discretize(family)?.update(family, data)
}

/// Sequential mixture `Q(x_t | x^{t-1})`.
pub fn predict_online(prior: &PriorSpec, family: &ModelFamily, context: &[usize]) -> Result<PredictiveDistribution> {
    let data = Dataset::Symbols(context.to_vec());
    posterior_weights(prior, family, &data)?.predictive(family, Context::Symbols(context))
}

/// Batch mixture `Q(x_n | x^{n-1})` trained on the full sequence.
pub fn predict_batch(prior: &PriorSpec, family: &ModelFamily, training: &[usize]) -> Result<PredictiveDistribution> {
    predict_online(prior, family, training)
}

/// Supervised mixture `Q(y | x; S)`. Only the labelled examples enter; no
/// feature distribution is consulted.
pub fn predict_supervised(
    prior: &PriorSpec,
    family: &ModelFamily,
    training: &Dataset,
    query: &[f64],
) -> Result<PredictiveDistribution> {
    posterior_weights(prior, family, training)?.predictive(family, Context::Features(query))
}
