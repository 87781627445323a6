//! Worked examples for each operation, checked against closed forms or
//! brute-force enumeration written out here.

use approx::assert_abs_diff_eq;

use mixlab_core::fisher::{
    deep_linear_spectrum, effective_k, eigen_spectrum, ellipsoid_weight, empirical_fim, laplace_posterior,
    maximum_likelihood, theorem1_bound,
};
use mixlab_core::linalg::{symmetric_eigen, Matrix};
use mixlab_core::math::{kl_discrete, nats_to_bits};
use mixlab_core::mixture::{marginal_likelihood, posterior_weights, predict_batch, predict_online, predict_supervised};
use mixlab_core::regret::{
    batch_online_identity, dominance_mass, exact_regret_batch, exact_regret_online, exact_regret_supervised,
    mc_regret, AltLearner, Setting, SettingKind, SupervisedSetting,
};
use mixlab_core::weight::{
    ball_membership, chi2_weight_check, estimate_weight, kl_to, regret_bound, BallContext, BoundSetting, KlBallSpec,
    MeasureSource,
};
use mixlab_core::{rng, Context, Dataset, ModelFamily, ParamVector, PriorSpec};

fn bern() -> ModelFamily {
    ModelFamily::Bernoulli
}

fn syms(xs: &[usize]) -> Dataset {
    Dataset::Symbols(xs.to_vec())
}

fn pv(v: &[f64]) -> ParamVector {
    ParamVector::new(v.to_vec())
}

fn binary_kl_bits(p: f64, q: f64) -> f64 {
    let t = |a: f64, b: f64| if a == 0.0 { 0.0 } else { a * (a / b).log2() };
    t(p, q) + t(1.0 - p, 1.0 - q)
}

// ---- families -------------------------------------------------------------

#[test]
fn log_likelihood_examples() {
    assert_abs_diff_eq!(bern().log_likelihood(&[0.5], &syms(&[1, 0, 1])).unwrap(), 3.0 * 0.5f64.ln(), epsilon = 1e-12);
    assert_eq!(bern().log_likelihood(&[1.0], &syms(&[1, 1])).unwrap(), 0.0);
    // the third symbol carries the implied mass 1 - 0.2 - 0.3
    let cat = ModelFamily::categorical(3).unwrap();
    assert_abs_diff_eq!(cat.log_likelihood(&[0.2, 0.3], &syms(&[2])).unwrap(), 0.5f64.ln(), epsilon = 1e-12);
}

#[test]
fn score_examples() {
    assert_abs_diff_eq!(bern().grad_log_likelihood(&[0.5], &syms(&[1])).unwrap()[0], 2.0, epsilon = 1e-12);
    let lg = ModelFamily::linear_gaussian(vec![1.0, 1.0], 1.0, 3.0).unwrap();
    let data = Dataset::Regression { inputs: vec![vec![1.0, 0.0]], targets: vec![1.0] };
    let g = lg.grad_log_likelihood(&[0.0, 0.0], &data).unwrap();
    assert_abs_diff_eq!(g[0], 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(g[1], 0.0, epsilon = 1e-12);
}

#[test]
fn sampling_examples() {
    let ones = bern().sample(&[1.0], 50, 3).unwrap();
    assert!(ones.symbols().unwrap().iter().all(|&x| x == 1));
    let zeros = bern().sample(&[0.0], 50, 3).unwrap();
    assert!(zeros.symbols().unwrap().iter().all(|&x| x == 0));
    let n = 10_000;
    let d = bern().sample(&[0.3], n, 11).unwrap();
    let mean = d.symbols().unwrap().iter().sum::<usize>() as f64 / n as f64;
    assert!((mean - 0.3).abs() <= 3.0 * (0.21f64 / n as f64).sqrt(), "{mean}");
}

#[test]
fn analytic_fisher_examples() {
    assert_abs_diff_eq!(bern().analytic_fisher(&[0.5], 1).unwrap()[(0, 0)], 4.0, epsilon = 1e-12);
    assert_abs_diff_eq!(bern().analytic_fisher(&[0.5], 100).unwrap()[(0, 0)], 400.0, epsilon = 1e-9);
    let lg = ModelFamily::linear_gaussian(vec![1.0; 3], 1.0, 2.0).unwrap();
    assert_eq!(lg.analytic_fisher(&[0.0; 3], 1).unwrap(), Matrix::identity(3));
}

#[test]
fn predictive_examples() {
    let p = bern().predictive(&[0.7], Context::Symbols(&[0, 1, 1])).unwrap();
    assert_abs_diff_eq!(p.probs().unwrap()[1], 0.7, epsilon = 1e-15);
    let mk = ModelFamily::markov(3, 1).unwrap();
    let uniform = vec![1.0 / 3.0; 6];
    let p = mk.predictive(&uniform, Context::Symbols(&[2])).unwrap();
    for &v in p.probs().unwrap() {
        assert_abs_diff_eq!(v, 1.0 / 3.0, epsilon = 1e-15);
    }
    // binary chain: one free coordinate per context, the probability of symbol 0
    let mk2 = ModelFamily::markov(2, 1).unwrap();
    let p = mk2.predictive(&[0.9, 0.4], Context::Symbols(&[1, 0])).unwrap();
    assert_abs_diff_eq!(p.probs().unwrap()[0], 0.9, epsilon = 1e-15);
}

// ---- mixtures -------------------------------------------------------------

#[test]
fn marginal_likelihood_examples() {
    let prior = PriorSpec::uniform(2001);
    assert_abs_diff_eq!(marginal_likelihood(&prior, &bern(), &syms(&[1])).unwrap().exp(), 0.5, epsilon = 1e-7);
    assert_abs_diff_eq!(marginal_likelihood(&prior, &bern(), &syms(&[1, 1])).unwrap().exp(), 1.0 / 3.0, epsilon = 1e-6);
    let two = PriorSpec::finite_class(vec![pv(&[0.2]), pv(&[0.9])]);
    let x = [1, 0, 1];
    let oracle = 0.5 * (0.2 * 0.8 * 0.2) + 0.5 * (0.9 * 0.1 * 0.9);
    assert_abs_diff_eq!(marginal_likelihood(&two, &bern(), &syms(&x)).unwrap().exp(), oracle, epsilon = 1e-15);
}

#[test]
fn posterior_examples() {
    let prior = PriorSpec::uniform(10_001);
    let g0 = prior.discretize(&bern()).unwrap();
    let g = posterior_weights(&prior, &bern(), &syms(&[])).unwrap();
    assert_eq!(g.log_weights(), g0.log_weights());

    // Beta(4, 1) density 4θ³ after three ones
    let g = posterior_weights(&prior, &bern(), &syms(&[1, 1, 1])).unwrap();
    let h = 1.0 / 10_000.0;
    for (node, w) in g.nodes().iter().zip(g.weights()).skip(1).take(9_999) {
        assert!((w / h - 4.0 * node[0].powi(3)).abs() <= 1e-3, "{} {}", node[0], w / h);
    }

    let two = PriorSpec::finite_class(vec![pv(&[1.0]), pv(&[0.5])]);
    let g = posterior_weights(&two, &bern(), &syms(&[0])).unwrap();
    assert_eq!(g.weights()[0], 0.0);
    assert_abs_diff_eq!(g.weights()[1], 1.0, epsilon = 1e-15);
}

#[test]
fn online_prediction_examples() {
    let prior = PriorSpec::uniform(10_000);
    let p = predict_online(&prior, &bern(), &[]).unwrap();
    assert_abs_diff_eq!(p.probs().unwrap()[1], 0.5, epsilon = 1e-12);
    let q1 = predict_online(&prior, &bern(), &[]).unwrap().probs().unwrap()[1];
    let q2 = predict_online(&prior, &bern(), &[1]).unwrap().probs().unwrap()[0];
    assert_abs_diff_eq!(q1 * q2, 1.0 / 6.0, epsilon = 1e-6);
    let joint = marginal_likelihood(&prior, &bern(), &syms(&[1, 0])).unwrap().exp();
    assert_abs_diff_eq!(q1 * q2, joint, epsilon = 1e-12);
    for (s, t) in [(0usize, 0usize), (3, 5), (7, 19)] {
        let mut ctx = vec![1; s];
        ctx.resize(t, 0);
        let p = predict_online(&prior, &bern(), &ctx).unwrap().probs().unwrap()[1];
        assert_abs_diff_eq!(p, (s as f64 + 1.0) / (t as f64 + 2.0), epsilon = 1e-4);
    }
}

#[test]
fn batch_prediction_examples() {
    let prior = PriorSpec::uniform(10_000);
    let x = [1, 0, 0, 1, 1];
    assert_eq!(predict_batch(&prior, &bern(), &x).unwrap(), predict_online(&prior, &bern(), &x).unwrap());
    let p = predict_batch(&prior, &bern(), &[1, 1]).unwrap().probs().unwrap()[1];
    assert_abs_diff_eq!(p, 0.75, epsilon = 1e-6);
    let cat = ModelFamily::categorical(3).unwrap();
    let cp = PriorSpec::uniform(41);
    let a = predict_batch(&cp, &cat, &[0, 2, 1, 2]).unwrap();
    let b = predict_batch(&cp, &cat, &[2, 2, 0, 1]).unwrap();
    for (u, v) in a.probs().unwrap().iter().zip(b.probs().unwrap()) {
        assert_abs_diff_eq!(u, v, epsilon = 1e-14);
    }
}

#[test]
fn supervised_prediction_examples() {
    let lg = ModelFamily::linear_gaussian(vec![1.0], 1.0, 2.0).unwrap();
    let prior = PriorSpec::uniform(4001);
    let empty = Dataset::Regression { inputs: vec![], targets: vec![] };
    let p0 = predict_supervised(&prior, &lg, &empty, &[1.0]).unwrap();
    assert_abs_diff_eq!(p0.mean(), 0.0, epsilon = 1e-9);

    let data = lg.sample(&[0.5], 50, 5).unwrap();
    let Dataset::Regression { inputs, targets } = &data else { unreachable!() };
    let sxx: f64 = inputs.iter().map(|x| x[0] * x[0]).sum();
    let sxy: f64 = inputs.iter().zip(targets).map(|(x, y)| x[0] * y).sum();
    let (mean, sd) = (sxy / sxx, (1.0 / sxx).sqrt());
    let p = predict_supervised(&prior, &lg, &data, &[1.0]).unwrap();
    assert!((p.mean() - mean).abs() <= 3.0 * sd, "{} vs {mean}", p.mean());

    // two nets that disagree sharply; the data only fits the first
    let net = ModelFamily::softmax_net(1, 1, 2, 40.0).unwrap();
    let m1 = [10.0, 0.0, -30.0, 30.0, 0.0, 0.0];
    let m2 = [10.0, 0.0, 30.0, -30.0, 0.0, 0.0];
    let two = PriorSpec::finite_class(vec![pv(&m1), pv(&m2)]);
    let data = Dataset::Classification { inputs: vec![vec![1.0]; 5], labels: vec![1; 5] };
    let p = predict_supervised(&two, &net, &data, &[0.3]).unwrap();
    let p1: Vec<f64> = net.label_log_probs(&m1, &[0.3]).unwrap().iter().map(|l| l.exp()).collect();
    for (a, b) in p.probs().unwrap().iter().zip(&p1) {
        assert_abs_diff_eq!(a, b, epsilon = 1e-12);
    }
}

// ---- regret ---------------------------------------------------------------

#[test]
fn online_regret_examples() {
    let point = PriorSpec::point_mass(pv(&[0.3]));
    assert!(exact_regret_online(&bern(), &[0.3], &point, 4).unwrap().value.abs() < 1e-12);

    // brute force over the four sequences
    let q: [f64; 4] = [1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 3.0];
    let oracle: f64 = q.iter().map(|qi: &f64| 0.25 * (0.25 / qi).log2()).sum::<f64>() / 2.0;
    assert_abs_diff_eq!(oracle, 0.25 * (9.0f64 / 8.0).log2(), epsilon = 1e-15);
    let r = exact_regret_online(&bern(), &[0.5], &PriorSpec::uniform(20_001), 2).unwrap();
    assert_abs_diff_eq!(r.value, oracle, epsilon = 1e-7);

    let two = PriorSpec::finite_class(vec![pv(&[0.3]), pv(&[0.7])]);
    for n in 1..=10 {
        let r = exact_regret_online(&bern(), &[0.3], &two, n).unwrap();
        assert!(r.value <= 1.0 / n as f64 + 1e-12, "n={n}: {}", r.value);
    }
}

#[test]
fn batch_regret_examples() {
    let prior = PriorSpec::uniform(501);
    let b = exact_regret_batch(&bern(), &[0.3], &prior, 1).unwrap().value;
    let o = exact_regret_online(&bern(), &[0.3], &prior, 1).unwrap().value;
    assert_abs_diff_eq!(b, o, epsilon = 1e-14);
    let point = PriorSpec::point_mass(pv(&[0.3]));
    assert!(exact_regret_batch(&bern(), &[0.3], &point, 5).unwrap().value.abs() < 1e-12);
    let n = 3;
    let online = |k| exact_regret_online(&bern(), &[0.5], &prior, k).unwrap().value;
    let b3 = exact_regret_batch(&bern(), &[0.5], &prior, n).unwrap().value;
    assert_abs_diff_eq!(b3, 3.0 * online(3) - 2.0 * online(2), epsilon = 1e-9);
}

fn label_probs(net: &ModelFamily, theta: &[f64], x: &[f64]) -> Vec<f64> {
    net.label_log_probs(theta, x).unwrap().iter().map(|l| l.exp()).collect()
}

#[test]
fn supervised_regret_examples() {
    let net = ModelFamily::softmax_net(1, 1, 2, 5.0).unwrap();
    let ma = [1.0, 0.2, 1.5, -0.5, 0.1, -0.3];
    let mb = [-0.7, 0.0, -1.0, 0.8, 0.0, 0.4];
    let features = vec![vec![-1.0], vec![1.0]];
    let setting = SupervisedSetting::uniform(features.clone()).unwrap();
    let prior = PriorSpec::finite_class(vec![pv(&ma), pv(&mb)]);
    let point = PriorSpec::point_mass(pv(&ma));
    assert!(exact_regret_supervised(&net, &ma, &point, &setting, 2).unwrap().value.abs() < 1e-12);

    let p0: Vec<Vec<f64>> = features.iter().map(|x| label_probs(&net, &ma, x)).collect();
    let pb: Vec<Vec<f64>> = features.iter().map(|x| label_probs(&net, &mb, x)).collect();
    // Q(y|x) under posterior weights (wa, wb)
    let risk = |wa: f64, wb: f64| -> f64 {
        (0..2)
            .map(|x| {
                let q: Vec<f64> = (0..2).map(|y| (wa * p0[x][y] + wb * pb[x][y]) / (wa + wb)).collect();
                0.5 * nats_to_bits(kl_discrete(&p0[x], &q))
            })
            .sum()
    };
    assert_abs_diff_eq!(
        exact_regret_supervised(&net, &ma, &prior, &setting, 0).unwrap().value,
        risk(0.5, 0.5),
        epsilon = 1e-12
    );
    // all 16 training sets of two (x, y) pairs
    let mut oracle = 0.0;
    for code in 0..16usize {
        let pairs = [(code & 1, (code >> 1) & 1), ((code >> 2) & 1, (code >> 3) & 1)];
        let prob: f64 = pairs.iter().map(|&(x, y)| 0.5 * p0[x][y]).product();
        let la: f64 = pairs.iter().map(|&(x, y)| p0[x][y]).product();
        let lb: f64 = pairs.iter().map(|&(x, y)| pb[x][y]).product();
        oracle += prob * risk(la, lb);
    }
    let r = exact_regret_supervised(&net, &ma, &prior, &setting, 2).unwrap();
    assert_abs_diff_eq!(r.value, oracle, epsilon = 1e-12);
}

#[test]
fn monte_carlo_regret_examples() {
    let point = PriorSpec::point_mass(pv(&[0.3]));
    let r = mc_regret(&bern(), &[0.3], &point, 4, &Setting::Online, 100, 1).unwrap();
    assert!(r.value.abs() < 1e-12 && r.std_error.unwrap() < 1e-12);

    let prior = PriorSpec::uniform(2001);
    let exact = exact_regret_online(&bern(), &[0.3], &prior, 4).unwrap().value;
    let mc = mc_regret(&bern(), &[0.3], &prior, 4, &Setting::Online, 10_000, 7).unwrap();
    assert!((mc.value - exact).abs() <= 3.0 * mc.std_error.unwrap(), "{} vs {exact}", mc.value);

    let ratios: Vec<f64> = (0..20)
        .map(|s| {
            let a = mc_regret(&bern(), &[0.3], &prior, 4, &Setting::Batch, 500, s).unwrap();
            let b = mc_regret(&bern(), &[0.3], &prior, 4, &Setting::Batch, 2000, s + 100).unwrap();
            b.std_error.unwrap() / a.std_error.unwrap()
        })
        .collect();
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    assert!((0.4..=0.6).contains(&mean), "{mean}");
}

#[test]
fn identity_examples() {
    assert!(batch_online_identity(&bern(), &[0.5], &PriorSpec::uniform(1001), 3).unwrap().abs() <= 1e-9);
    let point = PriorSpec::point_mass(pv(&[0.5]));
    assert!(batch_online_identity(&bern(), &[0.5], &point, 3).unwrap().abs() <= 1e-12);
    let cat = ModelFamily::categorical(3).unwrap();
    let r = batch_online_identity(&cat, &[1.0 / 3.0, 1.0 / 3.0], &PriorSpec::uniform(41), 4).unwrap();
    assert!(r.abs() <= 1e-9, "{r}");
}

#[test]
fn dominance_examples() {
    let prior = PriorSpec::uniform(1001);
    let same = dominance_mass(&bern(), &prior, 4, &AltLearner::Mixture, &[0.1, 1.0], 500, 3).unwrap();
    assert!(same.iter().all(|r| r.mass == 0.0));
    let erm = dominance_mass(&bern(), &prior, 4, &AltLearner::ErmPlugIn { floor: 0.0 }, &[1.0, 2.0, 3.0], 10_000, 4)
        .unwrap();
    assert!(erm.iter().all(|r| r.within_ceiling()), "{erm:?}");
    let fixed = dominance_mass(&bern(), &prior, 4, &AltLearner::FixedModel(vec![0.5]), &[2.0], 10_000, 5).unwrap();
    assert!(fixed[0].mass <= 0.25 + 3.0 * fixed[0].ci_halfwidth);
    // a smoothed plug-in does beat the mixture somewhere
    let smooth =
        dominance_mass(&bern(), &prior, 4, &AltLearner::ErmPlugIn { floor: 0.05 }, &[0.01], 10_000, 6).unwrap();
    assert!(smooth[0].within_ceiling());
}

// ---- weights and bounds ----------------------------------------------------

#[test]
fn kl_examples() {
    let none = BallContext::None;
    assert_eq!(kl_to(&[0.4], &[0.4], &bern(), 1, SettingKind::Online, &none).unwrap(), 0.0);
    let d = kl_to(&[0.5], &[0.25], &bern(), 1, SettingKind::Online, &none).unwrap();
    assert_abs_diff_eq!(d, 0.5 + 0.5 * (2.0f64 / 3.0).log2(), epsilon = 1e-12);
    assert_abs_diff_eq!(d, 0.20752, epsilon = 1e-5);
    let d5 = kl_to(&[0.5], &[0.25], &bern(), 5, SettingKind::Online, &none).unwrap();
    assert_abs_diff_eq!(d5, d, epsilon = 1e-12);
}

#[test]
fn membership_examples() {
    let spec = |eps| KlBallSpec { setting: SettingKind::Online, theta0: pv(&[0.5]), epsilon_sq: eps, context: BallContext::None };
    assert!(ball_membership(&spec(0.0), &[0.5], &bern(), 1).unwrap());
    assert!(ball_membership(&spec(0.20752), &[0.25], &bern(), 1).unwrap());
    assert!(!ball_membership(&spec(0.20752), &[0.1], &bern(), 1).unwrap());
    assert_abs_diff_eq!(binary_kl_bits(0.5, 0.1), 0.737, epsilon = 1e-3);
}

#[test]
fn weight_examples() {
    let prior = PriorSpec::uniform(2001);
    let spec = |eps| KlBallSpec { setting: SettingKind::Online, theta0: pv(&[0.5]), epsilon_sq: eps, context: BallContext::None };
    let w = |eps| estimate_weight(&spec(eps), &bern(), 1, MeasureSource::Prior(&prior), 100_000, 9).unwrap();
    assert_abs_diff_eq!(w(f64::INFINITY).value, 1.0, epsilon = 1e-9);
    assert_eq!(w(0.0).value, 0.0);
    let e = w(0.20752);
    assert!((e.value - 0.5).abs() <= e.ci_halfwidth, "{e:?}");
}

#[test]
fn bound_examples() {
    let eps = [1e-4, 1e-3, 0.01, 0.1, 0.5, 1.0];
    let covering = PriorSpec::finite_class(vec![pv(&[0.4]), pv(&[0.6])]);
    let top = binary_kl_bits(0.5, 0.4);
    let grid = [top / 2.0, top * 1.0001, 1.0];
    let b = regret_bound(&bern(), &[0.5], &covering, 3, &BoundSetting::Online, &grid, 1, 0).unwrap();
    assert!(b.bound_bits <= top * 1.0001 + 1e-12);

    let prior = PriorSpec::uniform(2001);
    let b = regret_bound(&bern(), &[0.5], &prior, 2, &BoundSetting::Online, &eps, 100_000, 1).unwrap();
    assert!(b.bound_bits >= 0.04248);

    let two = PriorSpec::finite_class(vec![pv(&[0.3]), pv(&[0.7])]);
    let n = 5;
    let b = regret_bound(&bern(), &[0.3], &two, n, &BoundSetting::Online, &eps, 1, 0).unwrap();
    assert!(b.bound_bits <= eps[0] + 1.0 / n as f64 + 1e-12, "{}", b.bound_bits);
}

#[test]
fn chi2_examples() {
    let r = chi2_weight_check(&bern(), &[0.5], 100, 10.0, 300, 1).unwrap();
    assert!(r.deficit < 1e-3, "{r:?}");
    let r = chi2_weight_check(&bern(), &[0.5], 1, 1.5, 10, 1).unwrap();
    assert!(r.skipped);

    // With the posterior centred at the estimate the deficit is the tail
    // P(chi2_1 > alpha ln n); centred at the truth it is P(chi2_1 > 2 alpha ln n).
    let (n, alpha) = (400usize, 1.5);
    let r = chi2_weight_check(&bern(), &[0.5], n, alpha, 2000, 2).unwrap();
    let c = alpha * (n as f64).ln();
    let tail = libm::erfc((c / 2.0).sqrt());
    assert!((r.deficit - tail).abs() <= 4.0 * r.deficit_std_error + 2e-4, "{} vs {tail}", r.deficit);
    assert!(r.centered_deficit <= libm::erfc(c.sqrt()) * 3.0 + 1e-4);
    assert!(tail > r.threshold);
}

// ---- Fisher geometry -------------------------------------------------------

#[test]
fn empirical_fisher_examples() {
    let f = empirical_fim(&bern(), &[0.5], 100_000, 1).unwrap();
    assert!((f[(0, 0)] - 4.0).abs() <= 0.2);
    let lg = ModelFamily::linear_gaussian(vec![1.0; 3], 1.0, 2.0).unwrap();
    let f = empirical_fim(&lg, &[0.1, 0.2, -0.3], 100_000, 2).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let target = if i == j { 1.0 } else { 0.0 };
            assert!((f[(i, j)] - target).abs() <= 0.05, "{i},{j}: {}", f[(i, j)]);
        }
    }
    assert!(eigen_spectrum(&f).unwrap().iter().all(|&l| l >= -1e-9));
}

/// Roots of the characteristic cubic of a symmetric 3×3 matrix,
/// descending.
fn cubic_eigenvalues(m: &Matrix) -> [f64; 3] {
    let a = |i, j| m[(i, j)];
    let p1 = a(0, 1).powi(2) + a(0, 2).powi(2) + a(1, 2).powi(2);
    let q = (a(0, 0) + a(1, 1) + a(2, 2)) / 3.0;
    let p2 = (a(0, 0) - q).powi(2) + (a(1, 1) - q).powi(2) + (a(2, 2) - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let b = |i, j| (a(i, j) - if i == j { q } else { 0.0 }) / p;
    let det = b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1)) - b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0))
        + b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0));
    let phi = (det / 2.0).clamp(-1.0, 1.0).acos() / 3.0;
    let e1 = q + 2.0 * p * phi.cos();
    let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    [e1, 3.0 * q - e1 - e3, e3]
}

#[test]
fn eigen_examples() {
    assert_eq!(eigen_spectrum(&Matrix::identity(5)).unwrap(), vec![1.0; 5]);
    let e = eigen_spectrum(&Matrix::from_diagonal(&[1.0, 3.0])).unwrap();
    assert_eq!(e, vec![3.0, 1.0]);
    let mut r = rng::stream(5, 0);
    for _ in 0..20 {
        let mut m = Matrix::zeros(3, 3);
        for i in 0..3 {
            for j in 0..=i {
                let v = rng::normal(&mut r);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        let got = symmetric_eigen(&m).unwrap().values;
        for (g, o) in got.iter().zip(cubic_eigenvalues(&m)) {
            assert_abs_diff_eq!(*g, o, epsilon = 1e-8);
        }
    }
}

#[test]
fn effective_dimension_examples() {
    assert_eq!(effective_k(&[1e9, 1e9, 1e9], 100, 0.01, 1.0), 3);
    assert_eq!(effective_k(&[0.0, 0.0], 100, 0.01, 1.0), 0);
    assert_eq!(effective_k(&[100.0, 1.0], 100, 0.01, 1.0), 1);
}

#[test]
fn theorem1_examples() {
    let b = theorem1_bound(&[400.0, 300.0], 100, 1.0).unwrap();
    assert_eq!(b.k, 2);
    assert_abs_diff_eq!(b.epsilon_sq, 2.0 / (200.0 * std::f64::consts::LOG2_E), epsilon = 1e-15);
    let b = theorem1_bound(&[400.0], 100, 1.0).unwrap();
    let oracle = (2.0f64.ln() + std::f64::consts::LOG2_E.log2() + 400.0f64.log2()) / 200.0;
    assert_abs_diff_eq!(b.bound_bits, oracle, epsilon = 1e-12);
    assert_abs_diff_eq!(b.bound_bits, 0.04933, epsilon = 1e-5);

    let n = 100;
    let eig = eigen_spectrum(&bern().analytic_fisher(&[0.5], n).unwrap()).unwrap();
    let b = theorem1_bound(&eig, n, 0.5).unwrap();
    let exact = exact_regret_online(&bern(), &[0.5], &PriorSpec::uniform(4001), n).unwrap().value;
    assert!(b.bound_bits >= exact, "{} < {exact}", b.bound_bits);
}

#[test]
fn ellipsoid_examples() {
    assert_eq!(ellipsoid_weight(&[0.0, 0.0], 10, 0.01, 1.0), 1.0);
    let eig = [400.0, 300.0];
    let w1 = ellipsoid_weight(&eig, 100, 1e-4, 1.0);
    let w2 = ellipsoid_weight(&eig, 100, 4e-4, 1.0);
    assert_eq!(effective_k(&eig, 100, 4e-4, 1.0), 2);
    assert_abs_diff_eq!(w2 / w1, 4.0, epsilon = 1e-12);

    // the worst case over many unit directions gives |θ - θ₀|²/2, a disk in the square [-1, 1]²
    let lg = ModelFamily::linear_gaussian(vec![1.0, 1.0], 1.0, 1.0).unwrap();
    let n = 50;
    let eps_nats = 0.01;
    let eig = eigen_spectrum(&lg.analytic_fisher(&[0.0, 0.0], n).unwrap()).unwrap();
    let approx = ellipsoid_weight(&eig, n, eps_nats, PriorSpec::ball_radius(&lg));
    let spec = KlBallSpec {
        setting: SettingKind::Supervised,
        theta0: pv(&[0.0, 0.0]),
        epsilon_sq: nats_to_bits(eps_nats),
        context: BallContext::Features(
            (0..64).map(|i| (i as f64 * std::f64::consts::PI / 64.0).sin_cos()).map(|(s, c)| vec![c, s]).collect(),
        ),
    };
    let mc = estimate_weight(&spec, &lg, n, MeasureSource::Prior(&PriorSpec::uniform(41)), 100_000, 3).unwrap();
    let ratio = approx / mc.value;
    assert!((0.5..=2.0).contains(&ratio), "{approx} vs {}", mc.value);
}

fn ln_beta(a: f64, b: f64) -> f64 {
    libm::lgamma(a) + libm::lgamma(b) - libm::lgamma(a + b)
}

#[test]
fn laplace_examples() {
    let mut xs = vec![1usize; 7];
    xs.resize(20, 0);
    assert_abs_diff_eq!(maximum_likelihood(&bern(), &syms(&xs)).unwrap()[0], 7.0 / 20.0, epsilon = 1e-15);
    let mut half = vec![1usize; 10];
    half.resize(20, 0);
    assert_abs_diff_eq!(laplace_posterior(&bern(), &syms(&half)).unwrap().mean[0], 0.5, epsilon = 1e-15);

    let mut xs = vec![1usize; 120];
    xs.resize(200, 0);
    let lap = laplace_posterior(&bern(), &syms(&xs)).unwrap();
    let m = 1000;
    let h = 1.0 / m as f64;
    let lb = ln_beta(121.0, 81.0);
    let tv: f64 = (0..m)
        .map(|i| {
            let t = (i as f64 + 0.5) * h;
            let beta = (120.0 * t.ln() + 80.0 * (1.0 - t).ln() - lb).exp();
            (lap.log_density(&[t]).exp() - beta).abs() * h
        })
        .sum::<f64>()
        / 2.0;
    assert!(tv <= 0.05, "{tv}");
}

#[test]
fn deep_linear_examples() {
    let rows = deep_linear_spectrum(&[0, 1, 3], 6, 5, 1).unwrap();
    assert!(rows[0].singular_values.iter().all(|&s| (s - 1.0).abs() < 1e-12));
    assert!(rows.iter().all(|r| r.singular_values.len() == 6));
    let rows = deep_linear_spectrum(&[1, 2, 4, 8], 16, 50, 17).unwrap();
    assert!(rows.windows(2).all(|w| w[1].median_condition > w[0].median_condition));
}
