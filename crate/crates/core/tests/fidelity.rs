//! How closely the approximations track their targets as effort grows.

use mixlab_core::math::{bits_to_nats, median};
use mixlab_core::mixture::{marginal_likelihood, predict_batch};
use mixlab_core::regret::SettingKind;
use mixlab_core::sgld::{ensemble_predict, sgld_chain, EnsembleSample, SgldConfig};
use mixlab_core::weight::{kl_to, BallContext};
use mixlab_core::{Context, Dataset, ModelFamily, PriorSpec};

const ONES: usize = 30;
const N: usize = 50;

fn coin_data() -> Dataset {
    let mut xs = vec![1usize; ONES];
    xs.resize(N, 0);
    Dataset::Symbols(xs)
}

/// CDF of Beta(a, b) by cumulative trapezoid on a fine grid.
struct BetaCdf {
    cum: Vec<f64>,
}

impl BetaCdf {
    fn new(a: f64, b: f64) -> Self {
        let m = 200_000;
        let dens: Vec<f64> = (0..=m)
            .map(|i| {
                let t = i as f64 / m as f64;
                if t == 0.0 || t == 1.0 {
                    0.0
                } else {
                    ((a - 1.0) * t.ln() + (b - 1.0) * (1.0 - t).ln()).exp()
                }
            })
            .collect();
        let mut cum = vec![0.0; m + 1];
        for i in 1..=m {
            cum[i] = cum[i - 1] + 0.5 * (dens[i] + dens[i - 1]);
        }
        let total = cum[m];
        cum.iter_mut().for_each(|c| *c /= total);
        Self { cum }
    }

    fn at(&self, x: f64) -> f64 {
        let m = self.cum.len() - 1;
        let u = x.clamp(0.0, 1.0) * m as f64;
        let i = (u.floor() as usize).min(m - 1);
        let f = u - i as f64;
        self.cum[i] * (1.0 - f) + self.cum[i + 1] * f
    }
}

fn ks(samples: &EnsembleSample, cdf: &BetaCdf) -> f64 {
    let mut xs: Vec<f64> = samples.thetas.iter().map(|t| t[0]).collect();
    xs.sort_by(f64::total_cmp);
    let m = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf.at(x);
            (f - i as f64 / m).abs().max((f - (i + 1) as f64 / m).abs())
        })
        .fold(0.0, f64::max)
}

fn chain(kept: usize, seed: u64) -> EnsembleSample {
    let config = SgldConfig { step_size: 1e-4, burn_in: 5000, thinning: 20, steps: 5000 + 20 * kept, ..Default::default() };
    let s = sgld_chain(&ModelFamily::Bernoulli, &coin_data(), &PriorSpec::uniform(2001), &config, seed).unwrap();
    assert_eq!(s.thetas.len(), kept);
    s
}

#[test]
fn langevin_samples_approach_the_posterior() {
    let cdf = BetaCdf::new(ONES as f64 + 1.0, (N - ONES) as f64 + 1.0);
    let target = predict_batch(&PriorSpec::uniform(2001), &ModelFamily::Bernoulli, &coin_data().symbols().unwrap()[..])
        .unwrap();
    let (mut ks_small, mut ks_large, mut tv_small, mut tv_large) = (vec![], vec![], vec![], vec![]);
    for seed in 0..10 {
        let small = chain(100, seed);
        let large = chain(10_000, seed + 1000);
        ks_small.push(ks(&small, &cdf));
        ks_large.push(ks(&large, &cdf));
        let tv = |s: &EnsembleSample| {
            let p = ensemble_predict(s, &ModelFamily::Bernoulli, Context::Symbols(&[])).unwrap();
            p.total_variation(&target).unwrap()
        };
        tv_small.push(tv(&small));
        tv_large.push(tv(&large));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!(mean(&ks_large) <= mean(&ks_small), "{ks_large:?} vs {ks_small:?}");
    assert!(mean(&ks_large) <= 0.1);
    assert!(median(&tv_large) < median(&tv_small), "{tv_large:?} vs {tv_small:?}");
}

#[test]
fn chains_are_reproducible() {
    assert_eq!(chain(200, 42), chain(200, 42));
    assert_ne!(chain(200, 42), chain(200, 43));
}

#[test]
fn quadrature_error_at_least_halves_per_doubling() {
    // evidence of 7 ones in 20 under a uniform prior is B(8, 14)
    let mut xs = vec![1usize; 7];
    xs.resize(20, 0);
    let data = Dataset::Symbols(xs);
    let exact = libm::lgamma(8.0) + libm::lgamma(14.0) - libm::lgamma(22.0);
    let errors: Vec<f64> = (4..=7)
        .map(|k| {
            let prior = PriorSpec::uniform((1 << k) + 1);
            (marginal_likelihood(&prior, &ModelFamily::Bernoulli, &data).unwrap() - exact).abs()
        })
        .collect();
    for w in errors.windows(2) {
        assert!(w[1] <= 0.5 * w[0], "{errors:?}");
    }
}

#[test]
fn divergence_is_quadratic_up_to_a_cubic_remainder() {
    let none = BallContext::None;
    let cases: [(ModelFamily, Vec<f64>, Vec<f64>); 2] = [
        (ModelFamily::Bernoulli, vec![0.3], vec![1.0]),
        (ModelFamily::categorical(3).unwrap(), vec![0.2, 0.5], vec![0.6, -0.8]),
    ];
    for (family, theta0, dir) in &cases {
        let fisher = family.analytic_fisher(theta0, 1).unwrap();
        let quad = |h: f64| {
            let v: Vec<f64> = dir.iter().map(|d| d * h).collect();
            let iv = fisher.mat_vec(&v);
            0.5 * v.iter().zip(&iv).map(|(a, b)| a * b).sum::<f64>()
        };
        let ratio = |h: f64| {
            let theta: Vec<f64> = theta0.iter().zip(dir).map(|(t, d)| t + d * h).collect();
            let kl = bits_to_nats(kl_to(theta0, &theta, family, 1, SettingKind::Online, &none).unwrap());
            (kl - quad(h)).abs() / h.powi(3)
        };
        let coarse = ratio(0.05);
        for h in [0.02, 0.01, 0.005, 0.002] {
            let r = ratio(h);
            assert!(r <= 2.0 * coarse + 1e-3, "{family:?} h={h}: {r} vs {coarse}");
        }
    }
}
