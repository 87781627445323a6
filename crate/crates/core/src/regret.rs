//! Expected regret of the mixture learners, exact and Monte Carlo, plus the
//! batch/online identity and the dominance-mass experiment.
//!
//! Divergences are accumulated in nats and reported in bits. The online
//! value is normalized per symbol, `(1/n) D(P^n || Q^n)`; batch and
//! supervised values are single-step conditional divergences.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::family::{Context, Dataset, ModelFamily, SequenceTable};
use crate::math::{
    compositions, composition_count, exp, kl_discrete, ln, ln_multinomial, log_sum_exp, mean_and_std_error,
    nats_to_bits, binomial_half_width,
};
use crate::mixture::PosteriorGrid;
use crate::prior::PriorSpec;
use crate::rng;

/// Largest number of sequences enumerated by the exact paths.
pub const MAX_ENUMERATION: u128 = 1 << 20;
/// Largest number of count vectors summed by the sufficient-statistic path.
pub const MAX_COMPOSITIONS: u128 = 20_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum SettingKind {
    Online,
    Batch,
    Supervised,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Method {
    ExactEnum,
    ExactSufficientStat,
    MonteCarlo,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RegretReport {
    pub setting: SettingKind,
    /// Regret in bits.
    pub value: f64,
    pub method: Method,
    /// Standard error of `value`; present only for Monte Carlo estimates.
    pub std_error: Option<f64>,
    pub n: usize,
    pub seed: Option<u64>,
}

/// Finite feature alphabet with its distribution `P_X`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SupervisedSetting {
    pub features: Vec<Vec<f64>>,
    pub probs: Vec<f64>,
}

impl SupervisedSetting {
    pub fn new(features: Vec<Vec<f64>>, probs: Vec<f64>) -> Result<Self> {
        let s = Self { features, probs };
        s.validate()?;
        Ok(s)
    }

    /// Uniform distribution over the given feature vectors.
    pub fn uniform(features: Vec<Vec<f64>>) -> Result<Self> {
        let p = vec![1.0 / features.len().max(1) as f64; features.len()];
        Self::new(features, p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.is_empty() || self.features.len() != self.probs.len() {
            return Err(Error::InvalidArgument("feature alphabet needs one probability per feature"));
        }
        if self.probs.iter().any(|p| !(*p >= 0.0)) || (self.probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument("feature distribution must be a probability vector"));
        }
        Ok(())
    }
}

/// Which expected regret to evaluate.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Setting {
    Online,
    Batch,
    /// Features come from the finite setting when given, otherwise from
    /// the family's default feature distribution.
    Supervised(Option<SupervisedSetting>),
}

impl Setting {
    pub fn kind(&self) -> SettingKind {
        match self {
            Setting::Online => SettingKind::Online,
            Setting::Batch => SettingKind::Batch,
            Setting::Supervised(_) => SettingKind::Supervised,
        }
    }
}

/// Online and batch regret from one exact pass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactRegrets {
    /// `(1/n) D(P^n || Q^n)` in bits.
    pub online: f64,
    /// `D(P(X_n | X^{n-1}) || Q(X_n | X^{n-1}) | X^{n-1})` in bits.
    pub batch: f64,
    pub method: Method,
}

/// `c ln p`, with `0 ln 0 = 0`.
#[inline]
fn count_term(c: usize, lp: f64) -> f64 {
    if c == 0 {
        0.0
    } else {
        c as f64 * lp
    }
}

fn count_loglik(counts: &[usize], log_probs: &[f64]) -> f64 {
    counts.iter().zip(log_probs).map(|(&c, &l)| count_term(c, l)).sum()
}

fn check_sequence_args(family: &ModelFamily, theta0: &[f64], n: usize) -> Result<()> {
    if !family.is_sequence() {
        return Err(Error::DataShape("online and batch regret need a sequence family"));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be at least 1"));
    }
    family.check_param(theta0)
}

/// Exact online and batch regret on a discretized mixture.
///
/// Exchangeable families sum over count vectors unless `force_enumeration`
/// is set; everything else enumerates the `A^n` sequences.
pub fn exact_regrets(
    family: &ModelFamily,
    theta0: &[f64],
    grid: &PosteriorGrid,
    n: usize,
    force_enumeration: bool,
) -> Result<ExactRegrets> {
    check_sequence_args(family, theta0, n)?;
    if family.is_exchangeable() && !force_enumeration {
        sufficient_stat_regrets(family, theta0, grid, n)
    } else {
        enumerated_regrets(family, theta0, grid, n)
    }
}

fn sufficient_stat_regrets(family: &ModelFamily, theta0: &[f64], grid: &PosteriorGrid, n: usize) -> Result<ExactRegrets> {
    let a = family.alphabet().expect("sequence family");
    if composition_count(n, a) > MAX_COMPOSITIONS {
        return Err(Error::TooLarge("too many count vectors"));
    }
    let p0 = family.symbol_probs(theta0)?;
    let lp0: Vec<f64> = p0.iter().map(|&p| ln(p)).collect();
    let lw = grid.log_weights();
    let node_lp: Vec<Vec<f64>> = grid
        .nodes()
        .iter()
        .map(|t| family.symbol_probs(t).map(|p| p.iter().map(|&v| ln(v)).collect()))
        .collect::<Result<_>>()?;
    let mut scratch = vec![0.0; lw.len()];

    let mut online = 0.0;
    for c in compositions(n, a) {
        let l0 = count_loglik(&c, &lp0);
        if l0 == f64::NEG_INFINITY {
            continue;
        }
        for (s, (w, lp)) in scratch.iter_mut().zip(lw.iter().zip(&node_lp)) {
            *s = w + count_loglik(&c, lp);
        }
        let lq = log_sum_exp(&scratch);
        online += exp(ln_multinomial(&c) + l0) * (l0 - lq);
    }

    let mut batch = 0.0;
    let mut q = vec![0.0; a];
    for c in compositions(n - 1, a) {
        let l0 = count_loglik(&c, &lp0);
        if l0 == f64::NEG_INFINITY {
            continue;
        }
        for (s, (w, lp)) in scratch.iter_mut().zip(lw.iter().zip(&node_lp)) {
            *s = w + count_loglik(&c, lp);
        }
        let lz = log_sum_exp(&scratch);
        // posterior predictive, accumulated in probability space
        q.iter_mut().for_each(|v| *v = 0.0);
        for (s, lp) in scratch.iter().zip(&node_lp) {
            let post = exp(s - lz);
            if post == 0.0 {
                continue;
            }
            for (qv, &l) in q.iter_mut().zip(lp) {
                *qv += post * exp(l);
            }
        }
        batch += exp(ln_multinomial(&c) + l0) * kl_discrete(&p0, &q);
    }

    Ok(ExactRegrets {
        online: nats_to_bits(online) / n as f64,
        batch: nats_to_bits(batch),
        method: Method::ExactSufficientStat,
    })
}

struct Enumerator<'a> {
    n: usize,
    a: usize,
    lw: &'a [f64],
    table0: SequenceTable,
    tables: Vec<SequenceTable>,
    online: f64,
    batch: f64,
    seq: Vec<usize>,
    scratch: Vec<f64>,
}

impl Enumerator<'_> {
    /// Visits every prefix of length `seq.len()`, with `ll` the node
    /// log-likelihoods of the prefix and `l0` its log-probability under θ₀.
    fn visit(&mut self, l0: f64, ll: &[f64]) {
        let m = self.lw.len();
        if self.seq.len() + 1 == self.n {
            for (s, (w, l)) in self.scratch.iter_mut().zip(self.lw.iter().zip(ll)) {
                *s = w + l;
            }
            let lz = log_sum_exp(&self.scratch);
            let p0 = self.table0.probs_after(&self.seq).to_vec();
            let mut q = vec![0.0; self.a];
            for x in 0..self.a {
                for j in 0..m {
                    self.scratch[j] = self.lw[j] + ll[j] + self.tables[j].log_prob(&self.seq, x);
                }
                let lqx = log_sum_exp(&self.scratch);
                q[x] = exp(lqx - lz);
                if p0[x] > 0.0 {
                    let lx = l0 + ln(p0[x]);
                    self.online += exp(lx) * (lx - lqx);
                }
            }
            let total: f64 = q.iter().sum();
            q.iter_mut().for_each(|v| *v /= total);
            self.batch += exp(l0) * kl_discrete(&p0, &q);
            return;
        }
        let mut next = vec![0.0; m];
        for x in 0..self.a {
            let lp0 = self.table0.log_prob(&self.seq, x);
            if lp0 == f64::NEG_INFINITY {
                continue;
            }
            for j in 0..m {
                next[j] = ll[j] + self.tables[j].log_prob(&self.seq, x);
            }
            self.seq.push(x);
            self.visit(l0 + lp0, &next);
            self.seq.pop();
        }
    }
}

fn enumerated_regrets(family: &ModelFamily, theta0: &[f64], grid: &PosteriorGrid, n: usize) -> Result<ExactRegrets> {
    let a = family.alphabet().expect("sequence family");
    if (a as u128).checked_pow(n as u32).is_none_or(|s| s > MAX_ENUMERATION) {
        return Err(Error::TooLarge("alphabet^n exceeds the enumeration limit"));
    }
    let tables = grid.nodes().iter().map(|t| family.sequence_table(t)).collect::<Result<Vec<_>>>()?;
    let mut e = Enumerator {
        n,
        a,
        lw: grid.log_weights(),
        table0: family.sequence_table(theta0)?,
        tables,
        online: 0.0,
        batch: 0.0,
        seq: Vec::with_capacity(n),
        scratch: vec![0.0; grid.len()],
    };
    let zeros = vec![0.0; grid.len()];
    e.visit(0.0, &zeros);
    Ok(ExactRegrets {
        online: nats_to_bits(e.online) / n as f64,
        batch: nats_to_bits(e.batch),
        method: Method::ExactEnum,
    })
}

fn exact_report(setting: SettingKind, value: f64, method: Method, n: usize) -> RegretReport {
    RegretReport { setting, value, method, std_error: None, n, seed: None }
}

/// `(1/n) D(P_{θ₀}(X^n) || Q(X^n))` in bits.
pub fn exact_regret_online(family: &ModelFamily, theta0: &[f64], prior: &PriorSpec, n: usize) -> Result<RegretReport> {
    let r = exact_regrets(family, theta0, &prior.discretize(family)?, n, false)?;
    Ok(exact_report(SettingKind::Online, r.online, r.method, n))
}

/// Expected single-step batch regret in bits.
pub fn exact_regret_batch(family: &ModelFamily, theta0: &[f64], prior: &PriorSpec, n: usize) -> Result<RegretReport> {
    let r = exact_regrets(family, theta0, &prior.discretize(family)?, n, false)?;
    Ok(exact_report(SettingKind::Batch, r.batch, r.method, n))
}

/// Label log-probabilities `L[x][y]` of one parameter over a finite
/// feature alphabet.
fn label_table(family: &ModelFamily, theta: &[f64], setting: &SupervisedSetting) -> Result<Vec<Vec<f64>>> {
    setting.features.iter().map(|x| family.label_log_probs(theta, x)).collect()
}

/// `E_S E_x D(P_{θ₀}(Y|x) || Q(Y|x; S))` in bits over training sets of
/// `n` pairs, summed over the counts of each (feature, label) cell.
pub fn exact_regret_supervised(
    family: &ModelFamily,
    theta0: &[f64],
    prior: &PriorSpec,
    setting: &SupervisedSetting,
    n: usize,
) -> Result<RegretReport> {
    setting.validate()?;
    let classes = family.classes().ok_or(Error::NotAvailable("finite-label supervised regret"))?;
    family.check_param(theta0)?;
    let grid = prior.discretize(family)?;
    let nx = setting.features.len();
    let cells = nx * classes;
    if composition_count(n, cells) > MAX_COMPOSITIONS {
        return Err(Error::TooLarge("too many training-set count vectors"));
    }
    let t0 = label_table(family, theta0, setting)?;
    let p0: Vec<Vec<f64>> = t0.iter().map(|r| r.iter().map(|&l| exp(l)).collect()).collect();
    // log P(x, y) under θ₀ per cell
    let cell0: Vec<f64> = (0..cells).map(|c| ln(setting.probs[c / classes]) + t0[c / classes][c % classes]).collect();
    let node_tables: Vec<Vec<Vec<f64>>> =
        grid.nodes().iter().map(|t| label_table(family, t, setting)).collect::<Result<_>>()?;
    let node_cells: Vec<Vec<f64>> =
        node_tables.iter().map(|t| (0..cells).map(|c| t[c / classes][c % classes]).collect()).collect();
    let lw = grid.log_weights();
    let mut scratch = vec![0.0; lw.len()];
    let mut total = 0.0;
    for c in compositions(n, cells) {
        let l0 = count_loglik(&c, &cell0);
        if l0 == f64::NEG_INFINITY {
            continue;
        }
        for (s, (w, lc)) in scratch.iter_mut().zip(lw.iter().zip(&node_cells)) {
            *s = w + count_loglik(&c, lc);
        }
        let lz = log_sum_exp(&scratch);
        let mut inner = 0.0;
        for x in 0..nx {
            if setting.probs[x] == 0.0 {
                continue;
            }
            let mut q = vec![0.0; classes];
            for (s, t) in scratch.iter().zip(&node_tables) {
                let post = exp(s - lz);
                for (qv, &l) in q.iter_mut().zip(&t[x]) {
                    *qv += post * exp(l);
                }
            }
            let z: f64 = q.iter().sum();
            q.iter_mut().for_each(|v| *v /= z);
            inner += setting.probs[x] * kl_discrete(&p0[x], &q);
        }
        total += exp(ln_multinomial(&c) + l0) * inner;
    }
    Ok(exact_report(SettingKind::Supervised, nats_to_bits(total), Method::ExactSufficientStat, n))
}

fn sample_supervised<R: rand::Rng + ?Sized>(
    family: &ModelFamily,
    theta0: &[f64],
    setting: Option<&SupervisedSetting>,
    n: usize,
    r: &mut R,
) -> Result<Dataset> {
    match setting {
        None => {
            if n == 0 {
                return Ok(match family {
                    ModelFamily::LinearGaussian { .. } => Dataset::Regression { inputs: vec![], targets: vec![] },
                    _ => Dataset::Classification { inputs: vec![], labels: vec![] },
                });
            }
            family.sample_with(theta0, n, r)
        }
        Some(s) => {
            let mut inputs = Vec::with_capacity(n);
            let mut labels = Vec::with_capacity(n);
            for _ in 0..n {
                let x = s.features[rng::categorical(r, &s.probs)].clone();
                let p: Vec<f64> = family.label_log_probs(theta0, &x)?.iter().map(|&l| exp(l)).collect();
                labels.push(rng::categorical(r, &p));
                inputs.push(x);
            }
            Ok(Dataset::Classification { inputs, labels })
        }
    }
}

/// One draw of the pointwise log-ratio (nats) whose expectation is the
/// regret of `setting`; the online value is not yet divided by `n`.
pub fn mc_regret_draw(
    family: &ModelFamily,
    theta0: &[f64],
    grid: &PosteriorGrid,
    n: usize,
    setting: &Setting,
    seed: u64,
    index: u64,
) -> Result<f64> {
    let mut r = rng::stream(seed, index);
    match setting {
        Setting::Online => {
            let data = family.sample_with(theta0, n, &mut r)?;
            Ok(family.log_likelihood(theta0, &data)? - grid.log_evidence(family, &data)?)
        }
        Setting::Batch => {
            let data = family.sample_with(theta0, n, &mut r)?;
            let xs = data.symbols().expect("sequence family");
            let (hist, last) = (&xs[..n - 1], xs[n - 1]);
            let post = grid.update(family, &Dataset::Symbols(hist.to_vec()))?;
            let q = post.predictive(family, Context::Symbols(hist))?;
            let p0 = family.sequence_table(theta0)?.log_prob(hist, last);
            Ok(p0 - q.log_prob_symbol(last))
        }
        Setting::Supervised(fin) => {
            let train = sample_supervised(family, theta0, fin.as_ref(), n, &mut r)?;
            let post = grid.update(family, &train)?;
            let test = sample_supervised(family, theta0, fin.as_ref(), 1, &mut r)?;
            match test {
                Dataset::Classification { inputs, labels } => {
                    let q = post.predictive(family, Context::Features(&inputs[0]))?;
                    Ok(family.label_log_probs(theta0, &inputs[0])?[labels[0]] - q.log_prob_symbol(labels[0]))
                }
                Dataset::Regression { inputs, targets } => {
                    let q = post.predictive(family, Context::Features(&inputs[0]))?;
                    Ok(family.regression_log_density(theta0, &inputs[0], targets[0])? - q.log_density(targets[0]))
                }
                Dataset::Symbols(_) => Err(Error::DataShape("supervised regret needs a supervised family")),
            }
        }
    }
}

/// Monte Carlo regret estimate in bits with its standard error; draw `i`
/// uses stream `i` of `seed`.
pub fn mc_regret(
    family: &ModelFamily,
    theta0: &[f64],
    prior: &PriorSpec,
    n: usize,
    setting: &Setting,
    n_mc: usize,
    seed: u64,
) -> Result<RegretReport> {
    if n_mc < 2 {
        return Err(Error::InvalidArgument("Monte Carlo needs at least 2 draws"));
    }
    match setting {
        Setting::Supervised(_) => {
            if !family.is_supervised() {
                return Err(Error::DataShape("supervised regret needs a supervised family"));
            }
            family.check_param(theta0)?;
        }
        _ => check_sequence_args(family, theta0, n)?,
    }
    if let Setting::Supervised(Some(s)) = setting {
        s.validate()?;
    }
    let grid = prior.discretize(family)?;
    let scale = match setting {
        Setting::Online => 1.0 / n as f64,
        _ => 1.0,
    };
    let draws = (0..n_mc as u64)
        .map(|i| mc_regret_draw(family, theta0, &grid, n, setting, seed, i).map(|v| nats_to_bits(v) * scale))
        .collect::<Result<Vec<f64>>>()?;
    Ok(summarize_mc(setting.kind(), &draws, n, seed))
}

/// Report from per-draw values already in bits.
pub fn summarize_mc(setting: SettingKind, draws: &[f64], n: usize, seed: u64) -> RegretReport {
    let (value, se) = mean_and_std_error(draws);
    RegretReport { setting, value, method: Method::MonteCarlo, std_error: Some(se), n, seed: Some(seed) }
}

/// `R^b(n) − [n R^o(n) − (n−1) R^o(n−1)]`, all exact.
pub fn batch_online_identity(family: &ModelFamily, theta0: &[f64], prior: &PriorSpec, n: usize) -> Result<f64> {
    let grid = prior.discretize(family)?;
    let now = exact_regrets(family, theta0, &grid, n, false)?;
    let before = if n > 1 { exact_regrets(family, theta0, &grid, n - 1, false)?.online } else { 0.0 };
    Ok(now.batch - (n as f64 * now.online - (n - 1) as f64 * before))
}

/// Competitor in the dominance experiment.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum AltLearner {
    /// The mixture itself.
    Mixture,
    /// Sequential maximum-likelihood plug-in, each conditional mixed with
    /// `floor` mass per symbol (0 gives raw ML). Unseen contexts predict
    /// uniformly.
    ErmPlugIn { floor: f64 },
    /// One fixed model `P_θ*`.
    FixedModel(Vec<f64>),
}

impl AltLearner {
    /// `ln Q̃(x^n)` for every sequence in lexicographic order.
    fn log_probs(&self, family: &ModelFamily, sequences: &[Vec<usize>], grid: &PosteriorGrid) -> Result<Vec<f64>> {
        match self {
            AltLearner::Mixture => sequences
                .iter()
                .map(|s| grid.log_evidence(family, &Dataset::Symbols(s.clone())))
                .collect(),
            AltLearner::FixedModel(theta) => {
                let t = family.sequence_table(theta)?;
                Ok(sequences.iter().map(|s| t.log_likelihood(s)).collect())
            }
            AltLearner::ErmPlugIn { floor } => {
                let a = family.alphabet().expect("sequence family");
                if !(*floor >= 0.0 && *floor * a as f64 <= 1.0) {
                    return Err(Error::InvalidArgument("plug-in floor must lie in [0, 1/alphabet]"));
                }
                let m = family.order();
                Ok(sequences.iter().map(|s| plug_in_log_prob(s, a, m, *floor)).collect())
            }
        }
    }
}

fn plug_in_log_prob(seq: &[usize], a: usize, order: usize, floor: f64) -> f64 {
    let contexts = a.pow(order as u32);
    let mut counts = vec![0usize; contexts * a];
    let mut acc = 0.0;
    for t in 0..seq.len() {
        let x = seq[t];
        if t < order {
            acc -= ln(a as f64);
            continue;
        }
        let ctx = seq[t - order..t].iter().fold(0, |i, &s| i * a + s);
        let row = &mut counts[ctx * a..(ctx + 1) * a];
        let seen: usize = row.iter().sum();
        let ml = if seen == 0 { 1.0 / a as f64 } else { row[x] as f64 / seen as f64 };
        acc += ln(floor + (1.0 - a as f64 * floor) * ml);
        row[x] += 1;
    }
    acc
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DominanceReport {
    pub gamma: f64,
    /// Estimated prior mass of `{θ : D(P_θ||Q) − D(P_θ||Q̃) > γ}` (bits).
    pub mass: f64,
    pub ci_halfwidth: f64,
    pub draws: usize,
    pub seed: u64,
}

impl DominanceReport {
    /// Whether the estimate respects the `2^{-γ}` ceiling up to three
    /// half-widths.
    pub fn within_ceiling(&self) -> bool {
        self.mass <= libm::exp2(-self.gamma) + 3.0 * self.ci_halfwidth
    }
}

/// Monte Carlo over `θ ~ prior` of the mass where `alt` beats the mixture
/// by more than each `gamma` (bits), with exact divergences over `X^n`.
pub fn dominance_mass(
    family: &ModelFamily,
    prior: &PriorSpec,
    n: usize,
    alt: &AltLearner,
    gammas: &[f64],
    draws: usize,
    seed: u64,
) -> Result<Vec<DominanceReport>> {
    if !family.is_sequence() || n == 0 {
        return Err(Error::InvalidArgument("dominance mass needs a sequence family and n >= 1"));
    }
    if draws == 0 || gammas.iter().any(|g| !(*g > 0.0)) {
        return Err(Error::InvalidArgument("dominance mass needs draws >= 1 and gamma > 0"));
    }
    let a = family.alphabet().expect("sequence family");
    if (a as u128).checked_pow(n as u32).is_none_or(|s| s > MAX_ENUMERATION) {
        return Err(Error::TooLarge("alphabet^n exceeds the enumeration limit"));
    }
    let sequences = all_sequences(a, n);
    let grid = prior.discretize(family)?;
    let lq = AltLearner::Mixture.log_probs(family, &sequences, &grid)?;
    let lqt = if *alt == AltLearner::Mixture { lq.clone() } else { alt.log_probs(family, &sequences, &grid)? };
    let mut r = rng::stream(seed, 0);
    let mut diffs = Vec::with_capacity(draws);
    for _ in 0..draws {
        let theta = prior.sample(family, &mut r);
        let t = family.sequence_table(&theta)?;
        let mut d = 0.0;
        for ((s, &q), &qt) in sequences.iter().zip(&lq).zip(&lqt) {
            let lp = t.log_likelihood(s);
            if lp == f64::NEG_INFINITY || q == qt {
                continue;
            }
            d += exp(lp) * (qt - q);
        }
        diffs.push(nats_to_bits(d));
    }
    Ok(gammas
        .iter()
        .map(|&gamma| {
            let hits = diffs.iter().filter(|&&d| d > gamma).count();
            let mass = hits as f64 / draws as f64;
            DominanceReport { gamma, mass, ci_halfwidth: binomial_half_width(mass, draws), draws, seed }
        })
        .collect())
}

/// Every sequence over `{0..a}` of length `n`, lexicographic.
pub fn all_sequences(a: usize, n: usize) -> Vec<Vec<usize>> {
    let total = a.pow(n as u32);
    (0..total)
        .map(|mut i| {
            let mut s = vec![0; n];
            for k in (0..n).rev() {
                s[k] = i % a;
                i /= a;
            }
            s
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::ParamVector;
    use crate::math::log2;

    fn bern() -> ModelFamily {
        ModelFamily::Bernoulli
    }

    #[test]
    fn bernoulli_n2_matches_hand_enumeration() {
        let prior = PriorSpec::uniform(20_001);
        let r = exact_regret_online(&bern(), &[0.5], &prior, 2).unwrap();
        let oracle = 0.25 * log2(9.0 / 8.0);
        assert!((r.value - oracle).abs() < 1e-7, "{} vs {oracle}", r.value);
        assert_eq!(r.method, Method::ExactSufficientStat);
        assert!(r.std_error.is_none());
    }

    #[test]
    fn enumeration_and_counts_agree() {
        let fam = ModelFamily::categorical(3).unwrap();
        let grid = PriorSpec::uniform(31).discretize(&fam).unwrap();
        for n in 1..=5 {
            let a = exact_regrets(&fam, &[0.2, 0.3], &grid, n, false).unwrap();
            let b = exact_regrets(&fam, &[0.2, 0.3], &grid, n, true).unwrap();
            assert!((a.online - b.online).abs() < 1e-12 && (a.batch - b.batch).abs() < 1e-12);
        }
    }

    #[test]
    fn point_mass_prior_has_zero_regret() {
        let prior = PriorSpec::point_mass(ParamVector::new(vec![0.3]));
        for n in [1, 3, 10] {
            assert!(exact_regret_online(&bern(), &[0.3], &prior, n).unwrap().value.abs() < 1e-12);
            assert!(exact_regret_batch(&bern(), &[0.3], &prior, n).unwrap().value.abs() < 1e-12);
            assert!(batch_online_identity(&bern(), &[0.3], &prior, n).unwrap().abs() < 1e-12);
        }
        let mc = mc_regret(&bern(), &[0.3], &prior, 5, &Setting::Online, 50, 1).unwrap();
        assert!(mc.value.abs() < 1e-12 && mc.std_error.unwrap() < 1e-12);
    }

    #[test]
    fn finite_class_ceiling() {
        let prior = PriorSpec::finite_class(vec![vec![0.3].into(), vec![0.7].into()]);
        for n in 1..=12 {
            let r = exact_regret_online(&bern(), &[0.3], &prior, n).unwrap().value;
            assert!(r <= 1.0 / n as f64 + 1e-12 && r >= -1e-12);
        }
    }

    #[test]
    fn batch_at_one_equals_online() {
        let prior = PriorSpec::uniform(101);
        let b = exact_regret_batch(&bern(), &[0.3], &prior, 1).unwrap().value;
        let o = exact_regret_online(&bern(), &[0.3], &prior, 1).unwrap().value;
        assert!((b - o).abs() < 1e-15);
    }

    #[test]
    fn identity_on_markov_chain() {
        let fam = ModelFamily::markov(2, 1).unwrap();
        let prior = PriorSpec::uniform(15);
        for n in 1..=6 {
            let res = batch_online_identity(&fam, &[0.2, 0.6], &prior, n).unwrap();
            assert!(res.abs() < 1e-12, "n={n} residual {res}");
        }
    }

    #[test]
    fn oversized_enumeration_rejected() {
        let fam = ModelFamily::markov(2, 1).unwrap();
        let prior = PriorSpec::uniform(3);
        assert!(matches!(exact_regret_online(&fam, &[0.5, 0.5], &prior, 30), Err(Error::TooLarge(_))));
    }

    #[test]
    fn plug_in_probabilities() {
        // 0 then 0: uniform, then ML 1
        assert!((plug_in_log_prob(&[0, 0], 2, 0, 0.0) - ln(0.5)).abs() < 1e-15);
        assert_eq!(plug_in_log_prob(&[0, 1], 2, 0, 0.0), f64::NEG_INFINITY);
        let f = plug_in_log_prob(&[0, 1], 2, 0, 0.1);
        assert!((f - (ln(0.5) + ln(0.1))).abs() < 1e-15);
    }

    #[test]
    fn mixture_never_dominates_itself() {
        let prior = PriorSpec::uniform(101);
        let rep = dominance_mass(&bern(), &prior, 4, &AltLearner::Mixture, &[0.5, 1.0], 200, 3).unwrap();
        assert!(rep.iter().all(|r| r.mass == 0.0));
    }
}
