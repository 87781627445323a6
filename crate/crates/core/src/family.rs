//! Parametric hypothesis classes: evaluation, sampling, score functions and
//! closed-form Fisher information.
//!
//! Sequence families (Bernoulli, categorical, Markov) assign probabilities
//! to strings over a finite alphabet `{0, .., A-1}`. Supervised families
//! (linear-Gaussian regression, a one-hidden-layer softmax classifier)
//! assign conditional probabilities of labels given real feature vectors.
//!
//! Probability families use the first `A - 1` probabilities of each
//! conditional distribution as free parameters; the last is implied.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Deref;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::math::{exp, ln, log_sum_exp, sqrt, tanh};
use crate::mixture::PredictiveDistribution;
use crate::rng;

/// Tolerance on `Σ p_j ≤ 1` for simplex-constrained parameters.
const SIMPLEX_SLACK: f64 = 1e-12;

/// A point in a family's parameter space.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ParamVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl From<&[f64]> for ParamVector {
    fn from(v: &[f64]) -> Self {
        Self(v.to_vec())
    }
}

/// Observed data for a family.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Dataset {
    Symbols(Vec<usize>),
    Regression { inputs: Vec<Vec<f64>>, targets: Vec<f64> },
    Classification { inputs: Vec<Vec<f64>>, labels: Vec<usize> },
}

impl Dataset {
    pub fn len(&self) -> usize {
        match self {
            Dataset::Symbols(s) => s.len(),
            Dataset::Regression { targets, .. } => targets.len(),
            Dataset::Classification { labels, .. } => labels.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn symbols(&self) -> Option<&[usize]> {
        match self {
            Dataset::Symbols(s) => Some(s),
            _ => None,
        }
    }

    /// Rows `idx` of a supervised dataset, or symbols at `idx`.
    pub fn select(&self, idx: &[usize]) -> Dataset {
        match self {
            Dataset::Symbols(s) => Dataset::Symbols(idx.iter().map(|&i| s[i]).collect()),
            Dataset::Regression { inputs, targets } => Dataset::Regression {
                inputs: idx.iter().map(|&i| inputs[i].clone()).collect(),
                targets: idx.iter().map(|&i| targets[i]).collect(),
            },
            Dataset::Classification { inputs, labels } => Dataset::Classification {
                inputs: idx.iter().map(|&i| inputs[i].clone()).collect(),
                labels: idx.iter().map(|&i| labels[i]).collect(),
            },
        }
    }
}

/// What a prediction is conditioned on.
#[derive(Clone, Copy, Debug)]
pub enum Context<'a> {
    /// Past symbols, oldest first.
    Symbols(&'a [usize]),
    /// A query feature vector.
    Features(&'a [f64]),
}

/// One-hidden-layer `tanh` network with a softmax output.
///
/// Parameters are laid out as `W1 (hidden × inputs, row-major)`, `b1`,
/// `W2 (classes × hidden)`, `b2`, each coordinate boxed in
/// `[-half_width, half_width]`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SoftmaxNet {
    pub inputs: usize,
    pub hidden: usize,
    pub classes: usize,
    pub half_width: f64,
}

impl SoftmaxNet {
    pub fn dimension(&self) -> usize {
        self.hidden * self.inputs + self.hidden + self.classes * self.hidden + self.classes
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let w1 = self.hidden * self.inputs;
        let b1 = w1 + self.hidden;
        let w2 = b1 + self.classes * self.hidden;
        (w1, b1, w2)
    }

    /// Hidden activations and label log-probabilities at `x`.
    pub fn forward(&self, theta: &[f64], x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (o_b1, o_w2, o_b2) = self.offsets();
        let mut h = vec![0.0; self.hidden];
        for (j, hj) in h.iter_mut().enumerate() {
            let row = &theta[j * self.inputs..(j + 1) * self.inputs];
            let a: f64 = row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + theta[o_b1 + j];
            *hj = tanh(a);
        }
        let mut z = vec![0.0; self.classes];
        for (c, zc) in z.iter_mut().enumerate() {
            let row = &theta[o_w2 + c * self.hidden..o_w2 + (c + 1) * self.hidden];
            *zc = row.iter().zip(&h).map(|(w, v)| w * v).sum::<f64>() + theta[o_b2 + c];
        }
        let lse = log_sum_exp(&z);
        z.iter_mut().for_each(|v| *v -= lse);
        (h, z)
    }

    /// Adds `∇_θ ln P_θ(y | x)` to `grad` by backpropagation.
    pub fn accumulate_grad(&self, theta: &[f64], x: &[f64], y: usize, grad: &mut [f64]) {
        let (o_b1, o_w2, o_b2) = self.offsets();
        let (h, logp) = self.forward(theta, x);
        let dz: Vec<f64> = logp
            .iter()
            .enumerate()
            .map(|(c, &lp)| if c == y { 1.0 } else { 0.0 } - exp(lp))
            .collect();
        let mut dh = vec![0.0; self.hidden];
        for (c, &dzc) in dz.iter().enumerate() {
            grad[o_b2 + c] += dzc;
            let base = o_w2 + c * self.hidden;
            for j in 0..self.hidden {
                grad[base + j] += dzc * h[j];
                dh[j] += dzc * theta[base + j];
            }
        }
        for j in 0..self.hidden {
            let da = dh[j] * (1.0 - h[j] * h[j]);
            grad[o_b1 + j] += da;
            let base = j * self.inputs;
            for (i, &xi) in x.iter().enumerate() {
                grad[base + i] += da * xi;
            }
        }
    }
}

/// A parametric family `{P_θ}`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ModelFamily {
    /// IID coin flips, `θ = P(1)`.
    Bernoulli,
    /// IID draws from `{0, .., alphabet-1}`.
    Categorical { alphabet: usize },
    /// Markov chain of the given order; the first `order` symbols are
    /// uniform, and each of the `alphabet^order` contexts has its own row.
    Markov { alphabet: usize, order: usize },
    /// `y = θ·x + N(0, noise_var)`, features `x ~ N(0, diag(feature_std²))`.
    LinearGaussian { feature_std: Vec<f64>, noise_var: f64, half_width: f64 },
    SoftmaxNet(SoftmaxNet),
}

/// Conditional probability tables of a sequence family at a fixed `θ`.
#[derive(Clone, Debug)]
pub struct SequenceTable {
    alphabet: usize,
    order: usize,
    probs: Vec<f64>,
    log_probs: Vec<f64>,
    uniform: Vec<f64>,
}

impl SequenceTable {
    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Row index for the context formed by the last `order` symbols.
    #[inline]
    pub fn context_index(&self, history: &[usize]) -> Option<usize> {
        if history.len() < self.order {
            return None;
        }
        let mut idx = 0;
        for &s in &history[history.len() - self.order..] {
            idx = idx * self.alphabet + s;
        }
        Some(idx)
    }

    /// `P_θ(· | history)`, uniform while fewer than `order` symbols are known.
    #[inline]
    pub fn probs_after(&self, history: &[usize]) -> &[f64] {
        match self.context_index(history) {
            Some(r) => &self.probs[r * self.alphabet..(r + 1) * self.alphabet],
            None => &self.uniform,
        }
    }

    #[inline]
    pub fn log_prob(&self, history: &[usize], symbol: usize) -> f64 {
        match self.context_index(history) {
            Some(r) => self.log_probs[r * self.alphabet + symbol],
            None => -ln(self.alphabet as f64),
        }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.probs[r * self.alphabet..(r + 1) * self.alphabet]
    }

    pub fn rows(&self) -> usize {
        self.probs.len() / self.alphabet
    }

    pub fn log_likelihood(&self, symbols: &[usize]) -> f64 {
        let mut acc = 0.0;
        for t in 0..symbols.len() {
            acc += self.log_prob(&symbols[..t], symbols[t]);
        }
        acc
    }
}

impl ModelFamily {
    pub fn bernoulli() -> Self {
        ModelFamily::Bernoulli
    }

    pub fn categorical(alphabet: usize) -> Result<Self> {
        if alphabet < 2 {
            return Err(Error::InvalidArgument("categorical alphabet needs at least 2 symbols"));
        }
        Ok(ModelFamily::Categorical { alphabet })
    }

    pub fn markov(alphabet: usize, order: usize) -> Result<Self> {
        if alphabet < 2 || order < 1 {
            return Err(Error::InvalidArgument("Markov family needs alphabet >= 2 and order >= 1"));
        }
        if alphabet.checked_pow(order as u32).is_none_or(|r| r > 1 << 16) {
            return Err(Error::InvalidArgument("Markov context table too large"));
        }
        Ok(ModelFamily::Markov { alphabet, order })
    }

    pub fn linear_gaussian(feature_std: Vec<f64>, noise_var: f64, half_width: f64) -> Result<Self> {
        if feature_std.is_empty() || feature_std.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::InvalidArgument("feature standard deviations must be positive"));
        }
        if !(noise_var > 0.0) || !(half_width > 0.0) {
            return Err(Error::InvalidArgument("noise variance and half-width must be positive"));
        }
        Ok(ModelFamily::LinearGaussian { feature_std, noise_var, half_width })
    }

    pub fn softmax_net(inputs: usize, hidden: usize, classes: usize, half_width: f64) -> Result<Self> {
        if inputs == 0 || hidden == 0 || classes < 2 || !(half_width > 0.0) {
            return Err(Error::InvalidArgument(
                "softmax net needs inputs >= 1, hidden >= 1, classes >= 2, half_width > 0",
            ));
        }
        Ok(ModelFamily::SoftmaxNet(SoftmaxNet { inputs, hidden, classes, half_width }))
    }

    pub fn dimension(&self) -> usize {
        match self {
            ModelFamily::Bernoulli => 1,
            ModelFamily::Categorical { alphabet } => alphabet - 1,
            ModelFamily::Markov { alphabet, order } => alphabet.pow(*order as u32) * (alphabet - 1),
            ModelFamily::LinearGaussian { feature_std, .. } => feature_std.len(),
            ModelFamily::SoftmaxNet(net) => net.dimension(),
        }
    }

    /// Per-coordinate closed intervals of the parameter box.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        let d = self.dimension();
        match self {
            ModelFamily::Bernoulli | ModelFamily::Categorical { .. } | ModelFamily::Markov { .. } => {
                vec![(0.0, 1.0); d]
            }
            ModelFamily::LinearGaussian { half_width, .. } => vec![(-half_width, *half_width); d],
            ModelFamily::SoftmaxNet(net) => vec![(-net.half_width, net.half_width); d],
        }
    }

    /// Largest half-width of the parameter box.
    pub fn half_width(&self) -> f64 {
        self.bounds().iter().map(|(lo, hi)| 0.5 * (hi - lo)).fold(0.0, f64::max)
    }

    /// Alphabet of a sequence family.
    pub fn alphabet(&self) -> Option<usize> {
        match self {
            ModelFamily::Bernoulli => Some(2),
            ModelFamily::Categorical { alphabet } | ModelFamily::Markov { alphabet, .. } => Some(*alphabet),
            _ => None,
        }
    }

    /// Memory order of a sequence family (0 for IID).
    pub fn order(&self) -> usize {
        match self {
            ModelFamily::Markov { order, .. } => *order,
            _ => 0,
        }
    }

    /// Label classes of a classification family.
    pub fn classes(&self) -> Option<usize> {
        match self {
            ModelFamily::SoftmaxNet(net) => Some(net.classes),
            _ => None,
        }
    }

    pub fn is_sequence(&self) -> bool {
        self.alphabet().is_some()
    }

    pub fn is_supervised(&self) -> bool {
        !self.is_sequence()
    }

    /// IID sequence families, whose likelihood depends on symbol counts only.
    pub fn is_exchangeable(&self) -> bool {
        matches!(self, ModelFamily::Bernoulli | ModelFamily::Categorical { .. })
    }

    pub fn is_memoryless(&self) -> bool {
        !matches!(self, ModelFamily::Markov { .. })
    }

    /// Length of a feature vector for supervised families.
    pub fn feature_dim(&self) -> Option<usize> {
        match self {
            ModelFamily::LinearGaussian { feature_std, .. } => Some(feature_std.len()),
            ModelFamily::SoftmaxNet(net) => Some(net.inputs),
            _ => None,
        }
    }

    /// Number of free parameters per conditional row (probability families).
    pub(crate) fn row_width(&self) -> usize {
        self.alphabet().map_or(0, |a| a - 1)
    }

    /// A central interior point of the domain.
    pub fn default_point(&self) -> ParamVector {
        match self.alphabet() {
            Some(a) => ParamVector(vec![1.0 / a as f64; self.dimension()]),
            None => ParamVector(vec![0.0; self.dimension()]),
        }
    }

    /// Whether `theta` lies in the (closed) parameter domain.
    pub fn contains(&self, theta: &[f64]) -> bool {
        self.check_param(theta).is_ok()
    }

    pub fn check_param(&self, theta: &[f64]) -> Result<()> {
        let d = self.dimension();
        if theta.len() != d {
            return Err(Error::Dimension { expected: d, found: theta.len() });
        }
        for (index, (&value, (lo, hi))) in theta.iter().zip(self.bounds()).enumerate() {
            if !(value >= lo && value <= hi) {
                return Err(Error::OutOfDomain { index, value });
            }
        }
        let w = self.row_width();
        if w > 1 {
            for (r, row) in theta.chunks(w).enumerate() {
                let s: f64 = row.iter().sum();
                if s > 1.0 + SIMPLEX_SLACK {
                    return Err(Error::OutOfDomain { index: r * w, value: s });
                }
            }
        }
        Ok(())
    }

    /// Coordinate within a row that holds the probability of `symbol`;
    /// `None` for the implied symbol (0 for Bernoulli, the last otherwise).
    pub fn free_coordinate(&self, symbol: usize) -> Option<usize> {
        match self {
            ModelFamily::Bernoulli => (symbol == 1).then_some(0),
            _ => (symbol < self.row_width()).then_some(symbol),
        }
    }

    /// Full probability rows for a probability family.
    pub(crate) fn rows(&self, theta: &[f64]) -> Vec<f64> {
        let a = self.alphabet().expect("probability family");
        let w = a - 1;
        if *self == ModelFamily::Bernoulli {
            return vec![(1.0 - theta[0]).max(0.0), theta[0]];
        }
        let mut out = Vec::with_capacity(theta.len() / w * a);
        for row in theta.chunks(w) {
            out.extend_from_slice(row);
            let s: f64 = row.iter().sum();
            out.push((1.0 - s).max(0.0));
        }
        out
    }

    /// Conditional probability tables of a sequence family.
    pub fn sequence_table(&self, theta: &[f64]) -> Result<SequenceTable> {
        let alphabet = self.alphabet().ok_or(Error::NotAvailable("sequence table"))?;
        self.check_param(theta)?;
        let probs = self.rows(theta);
        let log_probs = probs.iter().map(|&p| ln(p)).collect();
        Ok(SequenceTable {
            alphabet,
            order: self.order(),
            probs,
            log_probs,
            uniform: vec![1.0 / alphabet as f64; alphabet],
        })
    }

    /// Single-symbol distribution of an IID sequence family.
    pub fn symbol_probs(&self, theta: &[f64]) -> Result<Vec<f64>> {
        if !self.is_exchangeable() {
            return Err(Error::NotAvailable("marginal symbol distribution"));
        }
        self.check_param(theta)?;
        Ok(self.rows(theta))
    }

    /// `ln P_θ(y | x)` for every label of a classification family.
    pub fn label_log_probs(&self, theta: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        match self {
            ModelFamily::SoftmaxNet(net) => {
                if x.len() != net.inputs {
                    return Err(Error::DataShape("feature vector length"));
                }
                Ok(net.forward(theta, x).1)
            }
            _ => Err(Error::NotAvailable("label distribution")),
        }
    }

    /// `ln N(y; θ·x, σ²)` for the regression family.
    pub fn regression_log_density(&self, theta: &[f64], x: &[f64], y: f64) -> Result<f64> {
        match self {
            ModelFamily::LinearGaussian { noise_var, .. } => {
                if x.len() != theta.len() {
                    return Err(Error::DataShape("feature vector length"));
                }
                let r = y - dot(theta, x);
                Ok(gaussian_log_density(r, *noise_var))
            }
            _ => Err(Error::NotAvailable("regression density")),
        }
    }

    pub(crate) fn check_symbols(&self, symbols: &[usize]) -> Result<()> {
        let alphabet = self.alphabet().ok_or(Error::DataShape("symbol data for a supervised family"))?;
        match symbols.iter().find(|&&s| s >= alphabet) {
            Some(&symbol) => Err(Error::Symbol { symbol, alphabet }),
            None => Ok(()),
        }
    }

    fn check_features(&self, inputs: &[Vec<f64>], n: usize) -> Result<()> {
        let f = self.feature_dim().ok_or(Error::DataShape("feature data for a sequence family"))?;
        if inputs.len() != n {
            return Err(Error::DataShape("inputs and outputs differ in length"));
        }
        if inputs.iter().any(|x| x.len() != f) {
            return Err(Error::DataShape("feature vector length"));
        }
        Ok(())
    }

    /// `ln P_θ(data)` in nats (`ln P_θ(y^n | x^n)` for supervised families).
    /// Zero-probability data gives `-inf`.
    pub fn log_likelihood(&self, theta: &[f64], data: &Dataset) -> Result<f64> {
        self.check_param(theta)?;
        match (self, data) {
            (_, Dataset::Symbols(xs)) if self.is_sequence() => {
                self.check_symbols(xs)?;
                Ok(self.sequence_table(theta)?.log_likelihood(xs))
            }
            (ModelFamily::LinearGaussian { noise_var, .. }, Dataset::Regression { inputs, targets }) => {
                self.check_features(inputs, targets.len())?;
                let mut acc = 0.0;
                for (x, &y) in inputs.iter().zip(targets) {
                    acc += gaussian_log_density(y - dot(theta, x), *noise_var);
                }
                Ok(acc)
            }
            (ModelFamily::SoftmaxNet(net), Dataset::Classification { inputs, labels }) => {
                self.check_features(inputs, labels.len())?;
                let mut acc = 0.0;
                for (x, &y) in inputs.iter().zip(labels) {
                    if y >= net.classes {
                        return Err(Error::Symbol { symbol: y, alphabet: net.classes });
                    }
                    acc += net.forward(theta, x).1[y];
                }
                Ok(acc)
            }
            _ => Err(Error::DataShape("dataset kind does not match family")),
        }
    }

    /// Score `∇_θ ln P_θ(data)`.
    pub fn grad_log_likelihood(&self, theta: &[f64], data: &Dataset) -> Result<Vec<f64>> {
        self.check_param(theta)?;
        let d = self.dimension();
        let mut grad = vec![0.0; d];
        match (self, data) {
            (_, Dataset::Symbols(xs)) if self.is_sequence() => {
                self.check_symbols(xs)?;
                let table = self.sequence_table(theta)?;
                if table.probs.iter().any(|&p| p <= 0.0) {
                    return Err(Error::Boundary);
                }
                let a = table.alphabet;
                let w = a - 1;
                for t in 0..xs.len() {
                    let Some(r) = table.context_index(&xs[..t]) else { continue };
                    let x = xs[t];
                    let p = table.probs[r * a + x];
                    if let Some(c) = self.free_coordinate(x) {
                        grad[r * w + c] += 1.0 / p;
                    } else {
                        for g in &mut grad[r * w..(r + 1) * w] {
                            *g -= 1.0 / p;
                        }
                    }
                }
            }
            (ModelFamily::LinearGaussian { noise_var, .. }, Dataset::Regression { inputs, targets }) => {
                self.check_features(inputs, targets.len())?;
                for (x, &y) in inputs.iter().zip(targets) {
                    let r = (y - dot(theta, x)) / noise_var;
                    for (g, &xi) in grad.iter_mut().zip(x) {
                        *g += r * xi;
                    }
                }
            }
            (ModelFamily::SoftmaxNet(net), Dataset::Classification { inputs, labels }) => {
                self.check_features(inputs, labels.len())?;
                for (x, &y) in inputs.iter().zip(labels) {
                    if y >= net.classes {
                        return Err(Error::Symbol { symbol: y, alphabet: net.classes });
                    }
                    net.accumulate_grad(theta, x, y, &mut grad);
                }
            }
            _ => return Err(Error::DataShape("dataset kind does not match family")),
        }
        Ok(grad)
    }

    /// Default feature distribution of a supervised family.
    pub fn sample_features<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            ModelFamily::LinearGaussian { feature_std, .. } => {
                feature_std.iter().map(|s| s * rng::normal(rng)).collect()
            }
            ModelFamily::SoftmaxNet(net) => (0..net.inputs).map(|_| rng::normal(rng)).collect(),
            _ => Vec::new(),
        }
    }

    /// Draws `n` outcomes under `P_θ` from a generator.
    pub fn sample_with<R: Rng + ?Sized>(&self, theta: &[f64], n: usize, rng: &mut R) -> Result<Dataset> {
        self.check_param(theta)?;
        match self {
            ModelFamily::LinearGaussian { noise_var, .. } => {
                let sd = sqrt(*noise_var);
                let mut inputs = Vec::with_capacity(n);
                let mut targets = Vec::with_capacity(n);
                for _ in 0..n {
                    let x = self.sample_features(rng);
                    targets.push(dot(theta, &x) + sd * rng::normal(rng));
                    inputs.push(x);
                }
                Ok(Dataset::Regression { inputs, targets })
            }
            ModelFamily::SoftmaxNet(net) => {
                let mut inputs = Vec::with_capacity(n);
                let mut labels = Vec::with_capacity(n);
                for _ in 0..n {
                    let x = self.sample_features(rng);
                    let p: Vec<f64> = net.forward(theta, &x).1.iter().map(|&l| exp(l)).collect();
                    labels.push(rng::categorical(rng, &p));
                    inputs.push(x);
                }
                Ok(Dataset::Classification { inputs, labels })
            }
            _ => {
                let table = self.sequence_table(theta)?;
                let mut xs = Vec::with_capacity(n);
                for _ in 0..n {
                    let s = rng::categorical(rng, table.probs_after(&xs));
                    xs.push(s);
                }
                Ok(Dataset::Symbols(xs))
            }
        }
    }

    /// Draws `n ≥ 1` outcomes under `P_θ`; deterministic in `seed`.
    pub fn sample(&self, theta: &[f64], n: usize, seed: u64) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::InvalidArgument("sample size must be at least 1"));
        }
        self.sample_with(theta, n, &mut rng::stream(seed, 0))
    }

    /// Closed-form Fisher information of `n` observations, in nats.
    pub fn analytic_fisher(&self, theta: &[f64], n: usize) -> Result<Matrix> {
        self.check_param(theta)?;
        let scale = n as f64;
        match self {
            ModelFamily::Bernoulli | ModelFamily::Categorical { .. } => {
                let p = self.rows(theta);
                if p.iter().any(|&v| v <= 0.0) {
                    return Err(Error::Boundary);
                }
                let w = p.len() - 1;
                let last = 1.0 / p[w];
                let mut m = Matrix::zeros(w, w);
                for i in 0..w {
                    for j in 0..w {
                        m[(i, j)] = scale * (last + if i == j { 1.0 / p[i] } else { 0.0 });
                    }
                }
                Ok(m)
            }
            ModelFamily::LinearGaussian { feature_std, noise_var, .. } => {
                let diag: Vec<f64> = feature_std.iter().map(|s| scale * s * s / noise_var).collect();
                Ok(Matrix::from_diagonal(&diag))
            }
            _ => Err(Error::NotAvailable("closed-form Fisher information")),
        }
    }

    /// `P_θ(· | context)`.
    pub fn predictive(&self, theta: &[f64], context: Context<'_>) -> Result<PredictiveDistribution> {
        self.check_param(theta)?;
        match (self, context) {
            (_, Context::Symbols(history)) if self.is_sequence() => {
                self.check_symbols(history)?;
                let order = self.order();
                if history.len() < order {
                    return Err(Error::Context { found: history.len(), order });
                }
                let table = self.sequence_table(theta)?;
                Ok(PredictiveDistribution::Discrete { probs: table.probs_after(history).to_vec() })
            }
            (ModelFamily::LinearGaussian { noise_var, .. }, Context::Features(x)) => {
                if x.len() != theta.len() {
                    return Err(Error::DataShape("feature vector length"));
                }
                Ok(PredictiveDistribution::GaussianMixture {
                    weights: vec![1.0],
                    means: vec![dot(theta, x)],
                    variance: *noise_var,
                })
            }
            (ModelFamily::SoftmaxNet(_), Context::Features(x)) => {
                let probs = self.label_log_probs(theta, x)?.iter().map(|&l| exp(l)).collect();
                Ok(PredictiveDistribution::Discrete { probs })
            }
            _ => Err(Error::DataShape("context kind does not match family")),
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn gaussian_log_density(residual: f64, var: f64) -> f64 {
    -0.5 * ln(2.0 * core::f64::consts::PI * var) - residual * residual / (2.0 * var)
}
