//! Fisher information, eigen-spectra, effective dimension, the
//! eigenvalue-based regret bound, ellipsoid weights, Laplace posteriors and
//! spectra of products of random matrices.
//!
//! Fisher matrices are in nats; bounds are converted to bits at the end.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::family::{Dataset, ModelFamily, ParamVector};
use crate::linalg::{cholesky, cholesky_solve, singular_values, spd_inverse, symmetric_eigen, Matrix};
use crate::math::{ln, log2, median, sqrt, LOG2_E};
use crate::rng;

/// Average of score outer products over `samples` independent draws of a
/// single observation at `θ` (for Markov chains, one transition after the
/// uniform start).
pub fn empirical_fim(family: &ModelFamily, theta: &[f64], samples: usize, seed: u64) -> Result<Matrix> {
    let d = family.dimension();
    if samples < d || samples == 0 {
        return Err(Error::InvalidArgument("need at least as many samples as parameters"));
    }
    family.check_param(theta)?;
    let len = family.order() + 1;
    let mut r = rng::stream(seed, 0);
    let mut m = Matrix::zeros(d, d);
    for _ in 0..samples {
        let data = family.sample_with(theta, len, &mut r)?;
        let g = family.grad_log_likelihood(theta, &data)?;
        m.add_outer(&g, 1.0);
    }
    m.scale(1.0 / samples as f64);
    Ok(m)
}

/// Per-example scores of a supervised dataset (or of each symbol's
/// conditional for a memoryless sequence family).
pub fn example_scores(family: &ModelFamily, theta: &[f64], data: &Dataset) -> Result<Vec<Vec<f64>>> {
    (0..data.len()).map(|i| family.grad_log_likelihood(theta, &data.select(&[i]))).collect()
}

/// Empirical Fisher of observed data: mean of per-example score outer
/// products.
pub fn dataset_fim(family: &ModelFamily, theta: &[f64], data: &Dataset) -> Result<Matrix> {
    if data.is_empty() {
        return Err(Error::InvalidArgument("empty dataset"));
    }
    let d = family.dimension();
    let mut m = Matrix::zeros(d, d);
    for g in example_scores(family, theta, data)? {
        m.add_outer(&g, 1.0);
    }
    m.scale(1.0 / data.len() as f64);
    Ok(m)
}

/// Descending eigenvalues of a symmetric matrix.
pub fn eigen_spectrum(m: &Matrix) -> Result<Vec<f64>> {
    Ok(symmetric_eigen(m)?.values)
}

/// Largest `k` with `λ_k ≥ 2nε²/R²` (`ε²` in nats); 0 when none.
pub fn effective_k(eigenvalues: &[f64], n: usize, epsilon_sq_nats: f64, radius: f64) -> usize {
    let threshold = 2.0 * n as f64 * epsilon_sq_nats / (radius * radius);
    eigenvalues.iter().rposition(|&l| l >= threshold).map_or(0, |i| i + 1)
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Theorem1Bound {
    pub bound_bits: f64,
    /// `k / (2n log₂e)` in bits.
    pub epsilon_sq: f64,
    pub k: usize,
    /// Bound for every admissible `k`.
    pub candidates: Vec<(usize, f64)>,
}

/// `(1/2n)[k/log₂e + k log₂(log₂e/k) + Σ_{i≤k} log₂(R²λ_i)]` bits, for
/// eigenvalues of the `n`-sample Fisher matrix, minimized over every `k`
/// with `λ_{k+1} ≤ k/(R² log₂e)`.
pub fn theorem1_bound(eigenvalues: &[f64], n: usize, radius: f64) -> Result<Theorem1Bound> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be at least 1"));
    }
    let r2 = radius * radius;
    let d = eigenvalues.len();
    let mut candidates = Vec::new();
    let mut log_sum = 0.0;
    for k in 1..=d {
        log_sum += log2(r2 * eigenvalues[k - 1]);
        let next = if k < d { eigenvalues[k] } else { 0.0 };
        let kf = k as f64;
        if next <= kf / (r2 * LOG2_E) && eigenvalues[k - 1] > 0.0 {
            let b = (kf / LOG2_E + kf * log2(LOG2_E / kf) + log_sum) / (2.0 * n as f64);
            candidates.push((k, b));
        }
    }
    let &(k, bound_bits) = candidates
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or(Error::NotApplicable("no k satisfies the eigenvalue precondition"))?;
    Ok(Theorem1Bound { bound_bits, epsilon_sq: k as f64 / (2.0 * n as f64 * LOG2_E), k, candidates })
}

/// `(√(2n)ε)^k / (R^k Π_{i≤k} √λ_i)` with `k = effective_k`, capped to
/// `[0, 1]`.
pub fn ellipsoid_weight(eigenvalues: &[f64], n: usize, epsilon_sq_nats: f64, radius: f64) -> f64 {
    let k = effective_k(eigenvalues, n, epsilon_sq_nats, radius);
    let axis = sqrt(2.0 * n as f64 * epsilon_sq_nats);
    let mut log_w = 0.0;
    for &l in &eigenvalues[..k] {
        log_w += ln(axis) - ln(radius) - 0.5 * ln(l);
    }
    libm::exp(log_w).clamp(0.0, 1.0)
}

/// `½ Σ_{i>k} λ_i (2R)²`, the divergence left in the discarded directions.
pub fn tail_delta(eigenvalues: &[f64], k: usize, radius: f64) -> f64 {
    let s: f64 = eigenvalues.iter().skip(k).map(|l| l.max(0.0)).sum();
    0.5 * s * 4.0 * radius * radius
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpectrumReport {
    pub eigenvalues: Vec<f64>,
    pub n: usize,
    pub radius: f64,
    pub effective_k: usize,
    pub bound_bits: Option<f64>,
}

/// Spectrum summary of an `n`-sample Fisher matrix at radius `ε²` (nats).
pub fn spectrum_report(fim_n: &Matrix, n: usize, epsilon_sq_nats: f64, radius: f64) -> Result<SpectrumReport> {
    let eigenvalues = eigen_spectrum(fim_n)?;
    let k = effective_k(&eigenvalues, n, epsilon_sq_nats, radius);
    let bound_bits = theorem1_bound(&eigenvalues, n, radius).ok().map(|b| b.bound_bits);
    Ok(SpectrumReport { eigenvalues, n, radius, effective_k: k, bound_bits })
}

/// Gaussian `N(θ̂, I(θ̂)⁻¹/n)`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LaplacePosterior {
    pub mean: ParamVector,
    pub covariance: Matrix,
    pub n: usize,
    chol: Matrix,
}

impl LaplacePosterior {
    /// `L z` for the Cholesky factor `L` of the covariance.
    pub fn scale_draw(&self, z: &[f64]) -> Vec<f64> {
        self.chol.mat_vec(z)
    }

    pub fn sample<R: Rng + ?Sized>(&self, r: &mut R) -> ParamVector {
        let z: Vec<f64> = (0..self.mean.len()).map(|_| rng::normal(r)).collect();
        let s = self.scale_draw(&z);
        ParamVector::new(self.mean.iter().zip(&s).map(|(m, v)| m + v).collect())
    }

    pub fn log_density(&self, theta: &[f64]) -> f64 {
        let d = self.mean.len();
        let diff: Vec<f64> = theta.iter().zip(self.mean.iter()).map(|(a, b)| a - b).collect();
        let sol = cholesky_solve(&self.chol, &diff);
        let quad: f64 = diff.iter().zip(&sol).map(|(a, b)| a * b).sum();
        let log_det: f64 = 2.0 * self.chol.diagonal().iter().map(|&v| ln(v)).sum::<f64>();
        -0.5 * (d as f64 * ln(2.0 * core::f64::consts::PI) + log_det + quad)
    }
}

/// Maximum-likelihood estimate for families with a closed form.
pub fn maximum_likelihood(family: &ModelFamily, data: &Dataset) -> Result<ParamVector> {
    if data.is_empty() {
        return Err(Error::InvalidArgument("empty dataset"));
    }
    match (family, data) {
        (_, Dataset::Symbols(xs)) if family.is_memoryless() => {
            let a = family.alphabet().expect("sequence family");
            let mut counts = vec![0.0; a];
            for &x in xs {
                if x >= a {
                    return Err(Error::Symbol { symbol: x, alphabet: a });
                }
                counts[x] += 1.0;
            }
            let mut theta = vec![0.0; a - 1];
            for (x, c) in counts.iter().enumerate() {
                if let Some(i) = family.free_coordinate(x) {
                    theta[i] = c / xs.len() as f64;
                }
            }
            Ok(ParamVector::new(theta))
        }
        (ModelFamily::LinearGaussian { .. }, Dataset::Regression { inputs, targets }) => {
            let d = family.dimension();
            let mut xtx = Matrix::zeros(d, d);
            let mut xty = vec![0.0; d];
            for (x, &y) in inputs.iter().zip(targets) {
                if x.len() != d {
                    return Err(Error::DataShape("feature vector length"));
                }
                xtx.add_outer(x, 1.0);
                for (v, &xi) in xty.iter_mut().zip(x) {
                    *v += xi * y;
                }
            }
            let l = cholesky(&xtx).map_err(|_| Error::DataShape("features do not span the parameter space"))?;
            Ok(ParamVector::new(cholesky_solve(&l, &xty)))
        }
        _ => Err(Error::NotAvailable("closed-form maximum likelihood")),
    }
}

/// Laplace approximation around the maximum-likelihood estimate.
pub fn laplace_posterior(family: &ModelFamily, data: &Dataset) -> Result<LaplacePosterior> {
    let mean = maximum_likelihood(family, data)?;
    if family.is_sequence() {
        // any empty cell puts the estimate on the boundary
        let p = family.symbol_probs(&mean)?;
        if p.iter().any(|&v| v <= 0.0) {
            return Err(Error::Boundary);
        }
    }
    let n = data.len();
    let info = family.analytic_fisher(&mean, 1)?;
    let covariance = spd_inverse(&info)?.scaled(1.0 / n as f64);
    let chol = cholesky(&covariance)?;
    Ok(LaplacePosterior { mean, covariance, n, chol })
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DeepLinearRow {
    pub layers: usize,
    pub dim: usize,
    pub median_condition: f64,
    /// Condition number per seed.
    pub conditions: Vec<f64>,
    /// Singular values of the first seed's product.
    pub singular_values: Vec<f64>,
}

/// Condition numbers of products of `l` IID standard-normal `dim × dim`
/// matrices, for each `l` in `layers`; seed `s` uses stream `s`.
pub fn deep_linear_spectrum(layers: &[usize], dim: usize, n_seeds: usize, seed: u64) -> Result<Vec<DeepLinearRow>> {
    if dim < 2 || n_seeds == 0 {
        return Err(Error::InvalidArgument("deep-linear spectrum needs dim >= 2 and at least one seed"));
    }
    layers
        .iter()
        .map(|&l| {
            let mut conditions = Vec::with_capacity(n_seeds);
            let mut first = Vec::new();
            for s in 0..n_seeds as u64 {
                let mut r = rng::stream(seed ^ (l as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15), s);
                let mut prod = Matrix::identity(dim);
                for _ in 0..l {
                    let data = (0..dim * dim).map(|_| rng::normal(&mut r)).collect();
                    let a = Matrix::from_row_major(dim, dim, data)?;
                    prod = a.matmul(&prod)?;
                }
                let sv = singular_values(&prod);
                conditions.push(sv[0] / sv[dim - 1]);
                if s == 0 {
                    first = sv;
                }
            }
            Ok(DeepLinearRow { layers: l, dim, median_condition: median(&conditions), conditions, singular_values: first })
        })
        .collect()
}
