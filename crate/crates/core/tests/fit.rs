mod support;

use berrri_core::eval::rss;
use berrri_core::model::Model;
use berrri_core::rng::{child, Stream};
use berrri_core::simgen::{simulate, SimConfig};
use berrri_core::vb::{fit, fit_from, geweke, FitReport};
use berrri_core::{Hyperparameters, Matrix, VariationalState};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

#[test]
fn truth_is_a_fixed_point_on_noiseless_data() {
    let cfg = SimConfig {
        n: 100,
        q: 30,
        p: 5,
        k_true: 3,
        noise_sd: 0.0,
        seed: 4,
        ..Default::default()
    };
    let (data, truth) = simulate(&cfg).unwrap();
    let hp = Hyperparameters {
        sigma2: 1e-6,
        k_max: Some(3),
        ..Default::default()
    };
    let model = Model::new(&data, &hp).unwrap();
    let k = 3;
    let mut state = VariationalState {
        lambda: Matrix::filled(k, 2, 1.0),
        eta: truth.z.clone(),
        phi: truth.a.clone(),
        varphi: Matrix::filled(k, cfg.p, 1e-6),
        kappa_shape: Matrix::filled(k, cfg.p, hp.c + 0.5),
        kappa_scale: Matrix::from_fn(k, cfg.p, |r, c| hp.d + 0.5 * truth.a[(r, c)].powi(2)),
        iteration: 0,
    };
    for f in 0..k {
        model.update_lambda(&mut state, f);
    }
    let (state, report) = fit_from(&model, state).unwrap();
    assert!(report.converged, "{:?}", report.checks);
    assert!(report.iterations <= hp.burn_in + 2 * hp.check_interval);
    let fitted = model.predict(&state, &data.genotypes).unwrap();
    let err = rss(&data.traits, &fitted).unwrap();
    assert!(err < 1e-3, "rss {err}");
}

fn comparable(r: &FitReport) -> FitReport {
    FitReport {
        wall_seconds: 0.0,
        ..r.clone()
    }
}

#[test]
fn same_seed_gives_identical_fit() {
    let cfg = SimConfig {
        n: 60,
        q: 20,
        p: 6,
        k_true: 2,
        seed: 2,
        ..Default::default()
    };
    let (data, _) = simulate(&cfg).unwrap();
    let hp = Hyperparameters {
        seed: 17,
        k_max: Some(5),
        max_iter: 400,
        ..Default::default()
    };
    let (s1, r1) = fit(&data, &hp).unwrap();
    let (s2, r2) = fit(&data, &hp).unwrap();
    assert_eq!(s1, s2);
    assert_eq!(comparable(&r1), comparable(&r2));
    let (s3, _) = fit(&data, &Hyperparameters { seed: 18, ..hp }).unwrap();
    assert_ne!(s1.eta, s3.eta);
}

#[test]
fn checks_follow_the_schedule_and_exhaustion_is_not_an_error() {
    let cfg = SimConfig {
        n: 40,
        q: 10,
        p: 3,
        k_true: 2,
        seed: 1,
        ..Default::default()
    };
    let (data, _) = simulate(&cfg).unwrap();
    let hp = Hyperparameters {
        k_max: Some(3),
        burn_in: 100,
        check_interval: 100,
        max_iter: 150,
        ..Default::default()
    };
    let (_, report) = fit(&data, &hp).unwrap();
    assert!(!report.converged);
    assert_eq!(report.iterations, 150);
    assert!(report.checks.is_empty());
    assert_eq!(report.elbo_trace.len(), 150);

    let hp = Hyperparameters {
        burn_in: 20,
        check_interval: 30,
        max_iter: 1000,
        ..hp
    };
    let (_, report) = fit(&data, &hp).unwrap();
    for (i, c) in report.checks.iter().enumerate() {
        assert_eq!(c.iteration, 20 + 30 * (i + 1));
    }
    assert_eq!(report.converged, report.checks.last().is_some_and(|c| c.converged));
}

#[test]
fn geweke_on_white_noise_mostly_passes() {
    let passes = (0..100)
        .filter(|&seed| {
            let mut rng = child(seed, Stream::Noise, 0);
            let trace: Vec<f64> = (0..1000).map(|_| StandardNormal.sample(&mut rng)).collect();
            geweke(&trace).unwrap().p > 0.05
        })
        .count();
    assert!(passes >= 90, "{passes}/100");
}

#[test]
fn geweke_flags_drift() {
    let flagged = (0..100)
        .filter(|&seed| {
            let mut rng = child(seed, Stream::Noise, 1);
            let trace: Vec<f64> = (0..1000)
                .map(|i| 0.01 * i as f64 + rng.random_range(-1.0..1.0))
                .collect();
            geweke(&trace).unwrap().p < 0.05
        })
        .count();
    assert!(flagged >= 95, "{flagged}/100");
}
