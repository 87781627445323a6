use proptest::prelude::*;

use mixlab_core::linalg::{symmetric_eigen, Matrix};
use mixlab_core::math::kl_discrete;
use mixlab_core::mixture::{marginal_likelihood, predict_online};
use mixlab_core::regret::SettingKind;
use mixlab_core::weight::{ball_membership, estimate_weight, kl_to, BallContext, KlBallSpec, MeasureSource};
use mixlab_core::{Context, Dataset, ModelFamily, ParamVector, PriorSpec};

/// A family together with an interior parameter and a symbol sequence.
fn sequence_case() -> impl Strategy<Value = (ModelFamily, Vec<f64>, Vec<usize>)> {
    prop_oneof![
        (0.01..0.99f64, prop::collection::vec(0..2usize, 0..10))
            .prop_map(|(p, xs)| (ModelFamily::Bernoulli, vec![p], xs)),
        (0.05..1.0f64, 0.05..1.0f64, 0.05..1.0f64, prop::collection::vec(0..3usize, 0..8)).prop_map(
            |(a, b, c, xs)| {
                let s = a + b + c;
                (ModelFamily::categorical(3).unwrap(), vec![a / s, b / s], xs)
            }
        ),
        (0.01..0.99f64, 0.01..0.99f64, prop::collection::vec(0..2usize, 0..10))
            .prop_map(|(a, b, xs)| (ModelFamily::markov(2, 1).unwrap(), vec![a, b], xs)),
    ]
}

fn simplex3() -> impl Strategy<Value = Vec<f64>> {
    (0.01..1.0f64, 0.01..1.0f64, 0.01..1.0f64).prop_map(|(a, b, c)| {
        let s = a + b + c;
        vec![a / s, b / s, c / s]
    })
}

fn symmetric(d: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-10.0..10.0f64, d * d).prop_map(move |v| {
        let mut m = Matrix::zeros(d, d);
        for i in 0..d {
            for j in 0..=i {
                m[(i, j)] = v[i * d + j];
                m[(j, i)] = v[i * d + j];
            }
        }
        m
    })
}

proptest! {
    #[test]
    fn model_predictives_are_normalized((family, theta, xs) in sequence_case()) {
        prop_assume!(xs.len() >= family.order());
        let p = family.predictive(&theta, Context::Symbols(&xs)).unwrap();
        let total: f64 = p.probs().unwrap().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mixture_predictives_are_normalized((family, _theta, xs) in sequence_case()) {
        let p = predict_online(&PriorSpec::uniform(31), &family, &xs).unwrap();
        let total: f64 = p.probs().unwrap().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(p.probs().unwrap().iter().all(|&q| q > 0.0));
    }

    #[test]
    fn sequential_predictions_multiply_to_the_evidence((family, _theta, xs) in sequence_case()) {
        let prior = PriorSpec::uniform(31);
        let mut total = 0.0;
        for t in 0..xs.len() {
            let q = predict_online(&prior, &family, &xs[..t]).unwrap();
            total += q.probs().unwrap()[xs[t]].ln();
        }
        let evidence = marginal_likelihood(&prior, &family, &Dataset::Symbols(xs.clone())).unwrap();
        prop_assert!((total - evidence).abs() < 1e-9, "{} vs {}", total, evidence);
    }

    #[test]
    fn scores_match_finite_differences((family, theta, xs) in sequence_case()) {
        let data = Dataset::Symbols(xs);
        let g = family.grad_log_likelihood(&theta, &data).unwrap();
        let h = 1e-6;
        for i in 0..theta.len() {
            let (mut up, mut down) = (theta.clone(), theta.clone());
            up[i] += h;
            down[i] -= h;
            if !family.contains(&up) || !family.contains(&down) {
                continue;
            }
            let fd = (family.log_likelihood(&up, &data).unwrap() - family.log_likelihood(&down, &data).unwrap()) / (2.0 * h);
            prop_assert!((fd - g[i]).abs() <= 1e-4 * (1.0 + g[i].abs()), "{} vs {}", fd, g[i]);
        }
    }

    #[test]
    fn regression_scores_match_finite_differences(
        theta in prop::collection::vec(-1.0..1.0f64, 3),
        seed in 0u64..1000,
    ) {
        let family = ModelFamily::linear_gaussian(vec![1.0, 0.5, 2.0], 0.7, 2.0).unwrap();
        let data = family.sample(&[0.3, -0.2, 0.1], 20, seed).unwrap();
        let g = family.grad_log_likelihood(&theta, &data).unwrap();
        let h = 1e-6;
        for i in 0..3 {
            let (mut up, mut down) = (theta.clone(), theta.clone());
            up[i] += h;
            down[i] -= h;
            let fd = (family.log_likelihood(&up, &data).unwrap() - family.log_likelihood(&down, &data).unwrap()) / (2.0 * h);
            prop_assert!((fd - g[i]).abs() <= 1e-4 * (1.0 + g[i].abs()));
        }
    }

    #[test]
    fn eigen_reconstructs(m in (1usize..=50).prop_flat_map(symmetric)) {
        let e = symmetric_eigen(&m).unwrap();
        let err = e.reconstruct().sub(&m).unwrap().frobenius_norm();
        prop_assert!(err <= 1e-9 * (1.0 + m.frobenius_norm()), "{}", err);
        prop_assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn bernoulli_balls_about_one_half_are_symmetric(theta in 0.0..=1.0f64, eps in 0.0..1.5f64) {
        let family = ModelFamily::Bernoulli;
        let spec = KlBallSpec {
            setting: SettingKind::Online,
            theta0: ParamVector::new(vec![0.5]),
            epsilon_sq: eps,
            context: BallContext::None,
        };
        let d = kl_to(&[0.5], &[theta], &family, 1, SettingKind::Online, &BallContext::None).unwrap();
        prop_assume!((d - eps).abs() > 1e-12);
        prop_assert_eq!(
            ball_membership(&spec, &[theta], &family, 1).unwrap(),
            ball_membership(&spec, &[1.0 - theta], &family, 1).unwrap()
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn kl_is_convex_in_its_second_argument(
        p in simplex3(),
        a in simplex3(),
        b in simplex3(),
        lambda in 0.0..=1.0f64,
    ) {
        let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| lambda * x + (1.0 - lambda) * y).collect();
        let lhs = kl_discrete(&p, &mix);
        let rhs = lambda * kl_discrete(&p, &a) + (1.0 - lambda) * kl_discrete(&p, &b);
        prop_assert!(lhs <= rhs + 1e-12, "{} > {}", lhs, rhs);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn weights_grow_with_the_radius(
        theta0 in 0.05..0.95f64,
        radii in prop::collection::vec(0.0..2.0f64, 2..6),
        seed in 0u64..100,
    ) {
        let family = ModelFamily::categorical(3).unwrap();
        let prior = PriorSpec::uniform(21);
        let t0 = ParamVector::new(vec![theta0 / 2.0, theta0 / 2.0]);
        let mut radii = radii;
        radii.sort_by(f64::total_cmp);
        let weights: Vec<f64> = radii
            .iter()
            .map(|&eps| {
                let spec = KlBallSpec {
                    setting: SettingKind::Online,
                    theta0: t0.clone(),
                    epsilon_sq: eps,
                    context: BallContext::None,
                };
                estimate_weight(&spec, &family, 1, MeasureSource::Prior(&prior), 2000, seed).unwrap().value
            })
            .collect();
        prop_assert!(weights.windows(2).all(|w| w[0] <= w[1]), "{:?}", weights);
    }
}
