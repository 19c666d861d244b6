mod support;

use berrri_core::math::ln_gamma;
use berrri_core::model::{log_joint, Model, PointEstimate};
use berrri_core::rng::{child, Stream};
use berrri_core::{Dataset, Genotypes, Hyperparameters, Matrix};
use proptest::prelude::*;
use support::*;

fn two_by_two() -> (Dataset, PointEstimate) {
    let g = Genotypes::new(2, 2, vec![0, 2, 1, 1]).unwrap();
    let y = Matrix::from_vec(2, 2, vec![0.4, -1.2, 2.5, 0.3]).unwrap();
    let point = PointEstimate {
        z: Matrix::from_vec(2, 2, vec![1.0, 0.0, 1.0, 1.0]).unwrap(),
        a: Matrix::from_vec(2, 2, vec![0.5, -0.25, 1.5, 0.75]).unwrap(),
        pi: vec![0.3, 0.8],
        delta: Matrix::from_vec(2, 2, vec![0.5, 2.0, 1.25, 0.8]).unwrap(),
    };
    (Dataset::unlabeled(g, y).unwrap(), point)
}

/// Every entry of every density written out separately.
fn hand_log_joint(data: &Dataset, pt: &PointEstimate, hp: &Hyperparameters) -> f64 {
    let r = raw(data, hp.center);
    let (n, q, p, k) = (data.n_samples(), data.n_snps(), data.n_traits(), pt.pi.len());
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..p {
            let mut mean = 0.0;
            for s in 0..q {
                for f in 0..k {
                    mean += r.x[i][s] * pt.z[(s, f)] * pt.a[(f, j)];
                }
            }
            let e = r.y[i][j] - mean;
            total += -0.5 * (2.0 * std::f64::consts::PI * hp.sigma2).ln() - e * e / (2.0 * hp.sigma2);
        }
    }
    let a0 = hp.alpha / k as f64;
    for f in 0..k {
        let pi = pt.pi[f];
        // Beta(a0, 1) density is a0 * pi^(a0 - 1)
        total += (a0 * pi.powf(a0 - 1.0)).ln();
        for s in 0..q {
            total += if pt.z[(s, f)] == 1.0 { pi.ln() } else { (1.0 - pi).ln() };
        }
        for j in 0..p {
            let (a, delta) = (pt.a[(f, j)], pt.delta[(f, j)]);
            total += (-(a * a) / (2.0 * delta)).exp().ln() - (2.0 * std::f64::consts::PI * delta).sqrt().ln();
            let (c, d) = (hp.c, hp.d);
            total += (d.powf(c) / ln_gamma(c).exp() * delta.powf(-c - 1.0) * (-d / delta).exp()).ln();
        }
    }
    total
}

#[test]
fn log_joint_matches_hand_sum() {
    let (data, pt) = two_by_two();
    for center in [false, true] {
        let hp = Hyperparameters {
            alpha: 1.7,
            sigma2: 0.6,
            c: 2.0,
            d: 0.5,
            center,
            ..Default::default()
        };
        let got = log_joint(&pt, &data, &hp).unwrap().total();
        let want = hand_log_joint(&data, &pt, &hp);
        assert!((got - want).abs() < 1e-10, "center={center}: {got} vs {want}");
    }
}

#[test]
fn log_joint_is_additive_over_traits() {
    // Traits decouple given Z and pi, so splitting P columns splits every
    // trait-indexed term and leaves the rest alone.
    let (data, pt) = two_by_two();
    let hp = Hyperparameters::default();
    let full = log_joint(&pt, &data, &hp).unwrap();
    let column = |j: usize| {
        let d = Dataset::unlabeled(
            data.genotypes.clone(),
            Matrix::from_fn(2, 1, |r, _| data.traits[(r, j)]),
        )
        .unwrap();
        let p = PointEstimate {
            a: Matrix::from_fn(2, 1, |r, _| pt.a[(r, j)]),
            delta: Matrix::from_fn(2, 1, |r, _| pt.delta[(r, j)]),
            ..pt.clone()
        };
        log_joint(&p, &d, &hp).unwrap()
    };
    let (a, b) = (column(0), column(1));
    assert!((full.likelihood - a.likelihood - b.likelihood).abs() < 1e-12);
    assert!((full.effects - a.effects - b.effects).abs() < 1e-12);
    assert!((full.ard - a.ard - b.ard).abs() < 1e-12);
    assert_eq!(full.inclusions, a.inclusions);
    assert_eq!(full.sticks, a.sticks);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn elbo_matches_entrywise_expectation(seed in 0u64..10_000) {
        let (data, hp, state) = micro_instance(seed);
        let got = Model::new(&data, &hp).unwrap().elbo(&state).unwrap();
        let want = brute_elbo(&state, &data, &hp);
        prop_assert!(close(got, want, 1e-10), "{} vs {}", got, want);
    }

    #[test]
    fn elbo_ignores_factor_labels(seed in 0u64..10_000) {
        let (data, hp, state) = micro_instance(seed);
        let model = Model::new(&data, &hp).unwrap();
        let swapped = state.permute_factors(&[1, 0]);
        let (a, b) = (model.elbo(&state).unwrap(), model.elbo(&swapped).unwrap());
        prop_assert!(close(a, b, 1e-12), "{} vs {}", a, b);
    }
}

/// Exact log evidence of a one-factor, one-trait model: sum over inclusion
/// patterns with the Beta-Bernoulli marginal, and the effect integrated
/// against its Student-t marginal on a fine grid.
fn log_evidence(data: &Dataset, hp: &Hyperparameters) -> f64 {
    let r = raw(data, hp.center);
    let (n, q) = (data.n_samples(), data.n_snps());
    let a0 = hp.alpha;
    let ln_beta = |a: f64, b: f64| ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b);
    let (c, d) = (hp.c, hp.d);
    let student = |a: f64| {
        (ln_gamma(c + 0.5)
            - ln_gamma(c)
            - 0.5 * (2.0 * std::f64::consts::PI * d).ln()
            - (c + 0.5) * (1.0 + a * a / (2.0 * d)).ln())
        .exp()
    };
    let lik = |u: &[f64], a: f64| {
        (0..n)
            .map(|i| {
                let e = r.y[i][0] - u[i] * a;
                -0.5 * (2.0 * std::f64::consts::PI * hp.sigma2).ln() - e * e / (2.0 * hp.sigma2)
            })
            .sum::<f64>()
    };
    let mut evidence = 0.0;
    for mask in 0u32..(1 << q) {
        let m = mask.count_ones() as f64;
        let prior_z = (ln_beta(a0 + m, 1.0 + q as f64 - m) - ln_beta(a0, 1.0)).exp();
        let u: Vec<f64> = (0..n)
            .map(|i| (0..q).filter(|&s| mask >> s & 1 == 1).map(|s| r.x[i][s]).sum())
            .collect();
        let integral = if u.iter().all(|&v| v == 0.0) {
            lik(&u, 0.0).exp()
        } else {
            let (lo, hi, steps) = (-40.0, 40.0, 400_000);
            let h = (hi - lo) / steps as f64;
            let mut acc = 0.0;
            for s in 0..=steps {
                let a = lo + h * s as f64;
                let w = if s == 0 || s == steps { 0.5 } else { 1.0 };
                acc += w * (lik(&u, a).exp() * student(a));
            }
            acc * h
        };
        evidence += prior_z * integral;
    }
    evidence.ln()
}

#[test]
fn elbo_never_exceeds_log_evidence() {
    let g = Genotypes::new(2, 2, vec![1, 0, 2, 1]).unwrap();
    let y = Matrix::from_vec(2, 1, vec![0.7, 1.9]).unwrap();
    let data = Dataset::unlabeled(g, y).unwrap();
    let hp = Hyperparameters {
        k_max: Some(1),
        center: false,
        sigma2: 0.8,
        ..Default::default()
    };
    let bound = log_evidence(&data, &hp);
    let model = Model::new(&data, &hp).unwrap();
    for seed in 0..20 {
        let mut state = model.initial_state(&mut child(seed, Stream::Init, 0)).unwrap();
        for _ in 0..200 {
            let e = model.elbo(&state).unwrap();
            assert!(e <= bound + 1e-9, "seed {seed}: elbo {e} above log evidence {bound}");
            model.sweep(&mut state).unwrap();
        }
    }
}

#[test]
fn elbo_rejects_mismatched_state() {
    let (data, hp, state) = micro_instance(3);
    let bigger = Hyperparameters { k_max: Some(3), ..hp };
    assert!(Model::new(&data, &bigger).unwrap().elbo(&state).is_err());
}
