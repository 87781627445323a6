//! The acceptance suite: twelve criteria, each checked against an
//! independent oracle at fixed tolerances.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use mixlab_core::fim_experiment::{fim_spectrum_experiment, DatasetKind, TrainingConfig};
use mixlab_core::fisher::{deep_linear_spectrum, empirical_fim, theorem1_bound};
use mixlab_core::linalg::{symmetric_eigen, Matrix};
use mixlab_core::math::{log2, LOG2_E};
use mixlab_core::mixture::predict_batch;
use mixlab_core::regret::{all_sequences, dominance_mass, exact_regrets, AltLearner};
use mixlab_core::sgld::{ensemble_predict, sgld_chain, SgldConfig};
use mixlab_core::weight::{chi2_weight_check, default_epsilon_grid, regret_bound, BoundSetting};
use mixlab_core::{rng, Context, Dataset, ModelFamily, PredictiveDistribution, PriorSpec, Result, SoftmaxNet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Level {
    Fast,
    Full,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
    pub budget_seconds: f64,
    pub seed: u64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "{} {:>2} {:<28} {:>7.2}s  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.seconds,
            self.detail
        )
    }
}

pub const CRITERIA: [(u8, &str, f64); 12] = [
    (1, "bound-sandwich", 120.0),
    (2, "laplace-rule", 5.0),
    (3, "batch-online-identity", 10.0),
    (4, "classical-scaling", 30.0),
    (5, "theorem1-consistency", 30.0),
    (6, "batch-rate", 60.0),
    (7, "dominance-mass", 60.0),
    (8, "fisher-agreement", 60.0),
    (9, "sgld-fidelity", 120.0),
    (10, "spectrum-experiment", 300.0),
    (11, "deep-linear-conditioning", 60.0),
    (12, "chi2-weight", 60.0),
];

/// Runs every criterion in order; `on_result` sees each as it finishes.
pub fn run_suite(level: Level, seed: u64, mut on_result: impl FnMut(&CriterionResult)) -> Vec<CriterionResult> {
    CRITERIA
        .iter()
        .map(|&(id, _, _)| {
            let r = run_criterion(id, level, seed);
            on_result(&r);
            r
        })
        .collect()
}

pub fn run_criterion(id: u8, level: Level, seed: u64) -> CriterionResult {
    let &(_, name, budget) = CRITERIA.iter().find(|c| c.0 == id).expect("known criterion");
    let seed = seed.wrapping_add(id as u64);
    let start = Instant::now();
    let outcome = match id {
        1 => bound_sandwich(level, seed),
        2 => laplace_rule(),
        3 => batch_online_identity(),
        4 => classical_scaling(level),
        5 => theorem1_consistency(),
        6 => batch_rate(),
        7 => dominance(level, seed),
        8 => fisher_agreement(level, seed),
        9 => sgld_fidelity(level, seed),
        10 => spectrum_experiment(level, seed),
        11 => deep_linear(seed),
        12 => chi2_weight(level, seed),
        _ => unreachable!(),
    };
    let seconds = start.elapsed().as_secs_f64();
    let (mut passed, mut detail) = match outcome {
        Ok(c) => c,
        Err(e) => (false, format!("error: {e}")),
    };
    if level == Level::Full && seconds > budget {
        passed = false;
        detail.push_str(&format!("; over the {budget}s budget"));
    }
    CriterionResult { id, name: name.to_string(), passed, detail, seconds, budget_seconds: budget, seed }
}

type Check = Result<(bool, String)>;

fn bound_sandwich(level: Level, seed: u64) -> Check {
    let n_mc = match level {
        Level::Fast => 20_000,
        Level::Full => 100_000,
    };
    let cases: Vec<(ModelFamily, Vec<f64>, PriorSpec)> = vec![
        (ModelFamily::Bernoulli, vec![0.3], PriorSpec::uniform(2001)),
        (ModelFamily::Bernoulli, vec![0.5], PriorSpec::uniform(2001)),
        (ModelFamily::Bernoulli, vec![0.7], PriorSpec::uniform(2001)),
        (ModelFamily::Categorical { alphabet: 3 }, vec![1.0 / 3.0, 1.0 / 3.0], PriorSpec::uniform(61)),
        (ModelFamily::Categorical { alphabet: 3 }, vec![0.3, 0.5], PriorSpec::uniform(61)),
    ];
    let mut worst = f64::INFINITY;
    let mut checked = 0;
    for (family, theta0, prior) in &cases {
        let grid = prior.discretize(family)?;
        for n in [2usize, 8, 32, 128] {
            let exact = exact_regrets(family, theta0, &grid, n, false)?;
            let eps = default_epsilon_grid(n, 60);
            for (setting, value) in [(BoundSetting::Online, exact.online), (BoundSetting::Batch, exact.batch)] {
                let b = regret_bound(family, theta0, prior, n, &setting, &eps, n_mc, seed)?;
                worst = worst.min(b.bound_bits - value);
                checked += 1;
            }
        }
    }
    Ok((worst >= -1e-6, format!("{checked} cases, min(bound - exact) = {worst:.3e} bits")))
}

/// Residual of the chain rule `Π_t Q(x_t | x^{t-1}) = Q(x^n)` over every
/// binary sequence of length `n`, plus the deviation of `Σ Q(x^n)` from 1.
pub fn chain_rule_residual(
    family: &ModelFamily,
    prior: &PriorSpec,
    n: usize,
    predict: &dyn Fn(&[usize]) -> Result<PredictiveDistribution>,
) -> Result<f64> {
    let a = family.alphabet().expect("sequence family");
    let mut worst: f64 = 0.0;
    let mut total = 0.0;
    let grid = prior.discretize(family)?;
    for s in all_sequences(a, n) {
        let mut acc = 0.0;
        for t in 0..n {
            acc += predict(&s[..t])?.log_prob_symbol(s[t]);
        }
        let joint = grid.log_evidence(family, &Dataset::Symbols(s.clone()))?;
        worst = worst.max((acc - joint).abs());
        total += acc.exp();
    }
    Ok(worst.max((total - 1.0).abs()))
}

fn laplace_rule() -> Check {
    let family = ModelFamily::Bernoulli;
    let prior = PriorSpec::uniform(10_000);
    let grid = prior.discretize(&family)?;
    let predict = |c: &[usize]| grid.update(&family, &Dataset::Symbols(c.to_vec()))?.predictive(&family, Context::Symbols(c));
    let mut worst: f64 = 0.0;
    for t in 0..=20usize {
        for s in 0..=t {
            let mut ctx = vec![1usize; s];
            ctx.extend(std::iter::repeat_n(0, t - s));
            let q = predict(&ctx)?;
            let oracle = (s as f64 + 1.0) / (t as f64 + 2.0);
            worst = worst.max((q.probs().expect("discrete")[1] - oracle).abs());
        }
    }
    let small = PriorSpec::uniform(501);
    let small_grid = small.discretize(&family)?;
    let chain = chain_rule_residual(&family, &small, 8, &|c| {
        small_grid.update(&family, &Dataset::Symbols(c.to_vec()))?.predictive(&family, Context::Symbols(c))
    })?;
    Ok((worst <= 1e-4 && chain <= 1e-9, format!("max |Q - (s+1)/(t+2)| = {worst:.2e}, chain rule residual {chain:.2e}")))
}

fn batch_online_identity() -> Check {
    let cases = [
        (ModelFamily::Bernoulli, vec![0.3], PriorSpec::uniform(501)),
        (ModelFamily::Categorical { alphabet: 3 }, vec![0.2, 0.3], PriorSpec::uniform(41)),
    ];
    let mut worst: f64 = 0.0;
    for (family, theta0, prior) in &cases {
        let grid = prior.discretize(family)?;
        let mut prev = 0.0;
        for n in 1..=8usize {
            // online from count vectors, batch from the sequence tree
            let online = exact_regrets(family, theta0, &grid, n, false)?.online;
            let batch = exact_regrets(family, theta0, &grid, n, true)?.batch;
            if n >= 2 {
                worst = worst.max((batch - (n as f64 * online - (n - 1) as f64 * prev)).abs());
            }
            prev = online;
        }
    }
    Ok((worst <= 1e-9, format!("max residual {worst:.2e} bits")))
}

fn classical_scaling(level: Level) -> Check {
    let family = ModelFamily::Bernoulli;
    let grid = PriorSpec::uniform(4001).discretize(&family)?;
    let top = match level {
        Level::Fast => 10,
        Level::Full => 12,
    };
    let mut vals = Vec::new();
    for e in 6..=top {
        let n = 1usize << e;
        let r = exact_regrets(&family, &[0.5], &grid, n, false)?.online;
        vals.push(n as f64 * r - 0.5 * log2(n as f64));
    }
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok((hi - lo <= 2.0, format!("n R - log2(n)/2 in [{lo:.4}, {hi:.4}] over n = 64..{}", 1 << top)))
}

fn theorem1_consistency() -> Check {
    let family = ModelFamily::Bernoulli;
    let grid = PriorSpec::uniform(4001).discretize(&family)?;
    let radius = 0.5;
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [64usize, 256, 1024] {
        let fim = family.analytic_fisher(&[0.5], n)?;
        let eig = symmetric_eigen(&fim)?.values;
        let b = theorem1_bound(&eig, n, radius)?;
        let exact = exact_regrets(&family, &[0.5], &grid, n, false)?.online;
        let eps_oracle = b.k as f64 / (2.0 * n as f64 * LOG2_E);
        ok &= b.bound_bits >= exact && (b.epsilon_sq - eps_oracle).abs() <= 1e-12;
        parts.push(format!("n={n}: {:.5} >= {exact:.5}", b.bound_bits));
    }
    Ok((ok, parts.join(", ")))
}

fn batch_rate() -> Check {
    let family = ModelFamily::Bernoulli;
    let grid = PriorSpec::uniform(4001).discretize(&family)?;
    let n = 2000;
    let r = exact_regrets(&family, &[0.5], &grid, n, false)?.batch;
    let scaled = n as f64 * r / LOG2_E;
    Ok(((0.35..=0.65).contains(&scaled), format!("n R^b = {scaled:.4} nats, k = 1")))
}

fn dominance(level: Level, seed: u64) -> Check {
    let draws = match level {
        Level::Fast => 2_000,
        Level::Full => 10_000,
    };
    let reports = dominance_mass(
        &ModelFamily::Bernoulli,
        &PriorSpec::uniform(2001),
        4,
        &AltLearner::ErmPlugIn { floor: 0.0 },
        &[1.0, 2.0, 3.0],
        draws,
        seed,
    )?;
    let ok = reports.iter().all(|r| r.within_ceiling());
    let detail = reports
        .iter()
        .map(|r| format!("gamma={}: {:.4} (ceiling {:.4})", r.gamma, r.mass, (-r.gamma).exp2()))
        .collect::<Vec<_>>()
        .join(", ");
    Ok((ok, detail))
}

fn fisher_agreement(level: Level, seed: u64) -> Check {
    let samples = match level {
        Level::Fast => 20_000,
        Level::Full => 100_000,
    };
    let b = empirical_fim(&ModelFamily::Bernoulli, &[0.5], samples, seed)?;
    let b_err = (b[(0, 0)] - 4.0).abs() / 4.0;
    let lg = ModelFamily::linear_gaussian(vec![1.0; 3], 1.0, 2.0)?;
    let f = empirical_fim(&lg, &[0.2, -0.4, 0.6], samples, seed)?;
    let lg_err = f.sub(&Matrix::identity(3))?.frobenius_norm() / 3f64.sqrt();
    let mut r = rng::stream(seed, 99);
    let d = 50;
    let mut m = Matrix::zeros(d, d);
    for i in 0..d {
        for j in 0..=i {
            let v = rng::normal(&mut r);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    let recon = symmetric_eigen(&m)?.reconstruct().sub(&m)?.frobenius_norm() / m.frobenius_norm();
    Ok((
        b_err <= 0.05 && lg_err <= 0.05 && recon <= 1e-9,
        format!("Bernoulli rel err {b_err:.4}, linear-Gaussian rel err {lg_err:.4}, eigen reconstruction {recon:.2e}"),
    ))
}

/// Kolmogorov–Smirnov distance between `samples` and a continuous CDF.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let m = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (((i + 1) as f64 / m) - f).max(f - i as f64 / m)
        })
        .fold(0.0, f64::max)
}

fn sgld_fidelity(level: Level, seed: u64) -> Check {
    let family = ModelFamily::Bernoulli;
    let mut xs = vec![1usize; 30];
    xs.extend([0usize; 20]);
    let data = Dataset::Symbols(xs.clone());
    let prior = PriorSpec::uniform(2001);
    let kept = match level {
        Level::Fast => 2_000,
        Level::Full => 10_000,
    };
    let thinning = 20;
    let burn_in = 5_000;
    let config = SgldConfig { step_size: 1e-4, steps: burn_in + kept * thinning, burn_in, thinning, ..Default::default() };
    let chain = sgld_chain(&family, &data, &prior, &config, seed)?;
    let beta = Beta::new(31.0, 21.0).expect("valid shape");
    let samples: Vec<f64> = chain.thetas.iter().map(|t| t[0]).collect();
    let ks = ks_distance(&samples, |x| beta.cdf(x));
    let ens = ensemble_predict(&chain, &family, Context::Symbols(&xs))?;
    let grid = predict_batch(&prior, &family, &xs)?;
    let tv = ens.total_variation(&grid).expect("discrete predictives");
    Ok((ks <= 0.1 && tv <= 0.05, format!("{} samples, KS {ks:.4}, TV {tv:.4}", samples.len())))
}

fn spectrum_experiment(level: Level, seed: u64) -> Check {
    let net = SoftmaxNet { inputs: 5, hidden: 8, classes: 3, half_width: 10.0 };
    let config = TrainingConfig {
        max_steps: match level {
            Level::Fast => 3_000,
            Level::Full => 20_000,
        },
        ..Default::default()
    };
    let n_train = 300;
    let mut wins = 0;
    let mut parts = Vec::new();
    for s in 0..5 {
        let st = fim_spectrum_experiment(DatasetKind::Structured, &net, n_train, seed + s, &config)?;
        let rl = fim_spectrum_experiment(DatasetKind::RandomLabels, &net, n_train, seed + s, &config)?;
        let win = st.tail_mass_ratio < rl.tail_mass_ratio && rl.mean_grad_norm > st.mean_grad_norm;
        wins += win as usize;
        parts.push(format!(
            "tail {:.2e}/{:.2e} grad {:.3}/{:.3}",
            st.tail_mass_ratio, rl.tail_mass_ratio, st.mean_grad_norm, rl.mean_grad_norm
        ));
    }
    Ok((wins >= 4, format!("{wins}/5 seeds ordered (structured/random labels: {})", parts.join("; "))))
}

fn deep_linear(seed: u64) -> Check {
    let rows = deep_linear_spectrum(&[1, 2, 4, 8], 16, 50, seed)?;
    let med: Vec<f64> = rows.iter().map(|r| r.median_condition).collect();
    let ok = med.windows(2).all(|w| w[1] > w[0]);
    Ok((ok, format!("median condition {}", med.iter().map(|m| format!("{m:.3e}")).collect::<Vec<_>>().join(" < "))))
}

fn chi2_weight(level: Level, seed: u64) -> Check {
    let n_mc = match level {
        Level::Fast => 500,
        Level::Full => 4_000,
    };
    let r = chi2_weight_check(&ModelFamily::Bernoulli, &[0.5], 400, 1.5, n_mc, seed)?;
    Ok((
        r.passes,
        format!(
            "deficit {:.2e} +- {:.1e} vs n^-alpha = {:.2e} (centred {:.2e})",
            r.deficit, r.deficit_std_error, r.threshold, r.centered_deficit
        ),
    ))
}
