//! Independent reference computations for the integration tests.
//!
//! Everything here works on plain nested `Vec`s straight from the dataset and
//! re-derives each quantity from the model definition, sharing no code with
//! the library beyond the digamma / log-gamma special functions.

#![allow(dead_code)]

use berrri_core::math::{digamma, ln_gamma};
use berrri_core::rng::{child, Stream};
use berrri_core::{Dataset, Genotypes, Hyperparameters, Matrix, VariationalState};
use rand::Rng as _;

pub const LN_2PI: f64 = 1.8378770664093453;

/// Design matrices as the likelihood sees them.
pub struct Raw {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
}

pub fn raw(data: &Dataset, center: bool) -> Raw {
    let n = data.n_samples();
    let mut x: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..data.n_snps()).map(|q| data.genotypes.get(i, q) as f64).collect())
        .collect();
    let mut y: Vec<Vec<f64>> = (0..n).map(|i| data.traits.row(i).to_vec()).collect();
    if center {
        for m in [&mut x, &mut y] {
            let cols = m[0].len();
            for c in 0..cols {
                let mean = m.iter().map(|r| r[c]).sum::<f64>() / n as f64;
                for r in m.iter_mut() {
                    r[c] -= mean;
                }
            }
        }
    }
    Raw { x, y }
}

/// Mean-field ELBO, summed entry by entry.
pub fn brute_elbo(s: &VariationalState, data: &Dataset, hp: &Hyperparameters) -> f64 {
    let r = raw(data, hp.center);
    let (n, q, p, k) = (data.n_samples(), data.n_snps(), data.n_traits(), s.eta.cols());

    // E[(y - sum_k u_k a_k)^2] with u_k = sum_q x_q z_qk, all factors independent.
    let mut lik = 0.0;
    for i in 0..n {
        let mut eu = vec![0.0; k];
        let mut eu2 = vec![0.0; k];
        for kk in 0..k {
            let mut var = 0.0;
            for qq in 0..q {
                let x = r.x[i][qq];
                let e = s.eta[(qq, kk)];
                eu[kk] += x * e;
                var += x * x * e * (1.0 - e);
            }
            eu2[kk] = eu[kk] * eu[kk] + var;
        }
        for pp in 0..p {
            let y = r.y[i][pp];
            let mut mean = 0.0;
            let mut second = 0.0;
            for kk in 0..k {
                let ea = s.phi[(kk, pp)];
                let ea2 = ea * ea + s.varphi[(kk, pp)];
                mean += eu[kk] * ea;
                second += eu2[kk] * ea2;
                for jj in 0..k {
                    if jj != kk {
                        second += eu[kk] * ea * eu[jj] * s.phi[(jj, pp)];
                    }
                }
            }
            let sq = y * y - 2.0 * y * mean + second;
            lik += -0.5 * (LN_2PI + hp.sigma2.ln()) - 0.5 * sq / hp.sigma2;
        }
    }

    let a0 = hp.alpha / k as f64;
    let mut rest = 0.0;
    for kk in 0..k {
        let (l1, l2) = (s.lambda[(kk, 0)], s.lambda[(kk, 1)]);
        let e_ln_pi = digamma(l1) - digamma(l1 + l2);
        let e_ln_rest = digamma(l2) - digamma(l1 + l2);
        // log Beta(pi; a0, 1) = ln a0 + (a0 - 1) ln pi
        rest += a0.ln() + (a0 - 1.0) * e_ln_pi;
        // Beta entropy
        let ln_b = ln_gamma(l1) + ln_gamma(l2) - ln_gamma(l1 + l2);
        rest += ln_b - (l1 - 1.0) * digamma(l1) - (l2 - 1.0) * digamma(l2) + (l1 + l2 - 2.0) * digamma(l1 + l2);
        for qq in 0..q {
            let e = s.eta[(qq, kk)];
            rest += e * e_ln_pi + (1.0 - e) * e_ln_rest;
            for v in [e, 1.0 - e] {
                if v > 0.0 {
                    rest -= v * v.ln();
                }
            }
        }
        for pp in 0..p {
            let (shape, scale) = (s.kappa_shape[(kk, pp)], s.kappa_scale[(kk, pp)]);
            let e_inv = shape / scale;
            let e_ln = scale.ln() - digamma(shape);
            let (m, v) = (s.phi[(kk, pp)], s.varphi[(kk, pp)]);
            // log N(a; 0, delta)
            rest += -0.5 * LN_2PI - 0.5 * e_ln - 0.5 * e_inv * (m * m + v);
            // log InvGamma(delta; c, d)
            rest += hp.c * hp.d.ln() - ln_gamma(hp.c) - (hp.c + 1.0) * e_ln - hp.d * e_inv;
            // Gaussian entropy
            rest += 0.5 * (1.0 + LN_2PI + v.ln());
            // Inverse-gamma entropy
            rest += shape + scale.ln() + ln_gamma(shape) - (1.0 + shape) * digamma(shape);
        }
    }
    lik + rest
}

/// Weighted sum over all 2^Q inclusion patterns of one factor.
pub fn enumerate_patterns(eta_col: &[f64], mut f: impl FnMut(&[f64], f64)) {
    let q = eta_col.len();
    let mut z = vec![0.0; q];
    for mask in 0u32..(1 << q) {
        let mut w = 1.0;
        for (i, zi) in z.iter_mut().enumerate() {
            let on = mask >> i & 1 == 1;
            *zi = on as u8 as f64;
            w *= if on { eta_col[i] } else { 1.0 - eta_col[i] };
        }
        f(&z, w);
    }
}

/// Conditional Gaussian posterior of `A[k, .]` given everything else,
/// building `E|u_k|^2` by enumerating inclusion patterns.
pub fn a_oracle(s: &VariationalState, data: &Dataset, hp: &Hyperparameters, k: usize) -> (Vec<f64>, Vec<f64>) {
    let r = raw(data, hp.center);
    let (n, q, p, kk) = (data.n_samples(), data.n_snps(), data.n_traits(), s.eta.cols());
    let col: Vec<f64> = (0..q).map(|i| s.eta[(i, k)]).collect();
    let mut e_norm2 = 0.0;
    enumerate_patterns(&col, |z, w| {
        for i in 0..n {
            let u: f64 = (0..q).map(|j| r.x[i][j] * z[j]).sum();
            e_norm2 += w * u * u;
        }
    });
    let eu = |i: usize, f: usize| -> f64 { (0..q).map(|j| r.x[i][j] * s.eta[(j, f)]).sum() };
    let mut mean = vec![0.0; p];
    let mut var = vec![0.0; p];
    for pp in 0..p {
        let precision = e_norm2 / hp.sigma2 + s.kappa_shape[(k, pp)] / s.kappa_scale[(k, pp)];
        let mut lin = 0.0;
        for i in 0..n {
            let mut resid = r.y[i][pp];
            for f in 0..kk {
                if f != k {
                    resid -= eu(i, f) * s.phi[(f, pp)];
                }
            }
            lin += eu(i, k) * resid;
        }
        var[pp] = 1.0 / precision;
        mean[pp] = lin / hp.sigma2 / precision;
    }
    (mean, var)
}

/// Maximise `f` on [0, 1] by successively refined grids.
pub fn grid_argmax(f: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut best = 0.5;
    for _ in 0..4 {
        let steps = 400;
        let h = (hi - lo) / steps as f64;
        let mut best_val = f64::NEG_INFINITY;
        for i in 0..=steps {
            let x = lo + h * i as f64;
            let v = f(x);
            if v > best_val {
                best_val = v;
                best = x;
            }
        }
        lo = (best - 2.0 * h).max(0.0);
        hi = (best + 2.0 * h).min(1.0);
    }
    best
}

/// Central finite difference.
pub fn derivative(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Random micro instance: N <= 5, Q <= 4, P <= 3, K = 2, with a random
/// valid variational state.
pub fn micro_instance(seed: u64) -> (Dataset, Hyperparameters, VariationalState) {
    let mut rng = child(seed, Stream::Genotypes, 1000);
    let n = rng.random_range(3..=5);
    let q = rng.random_range(1..=4);
    let p = rng.random_range(1..=3);
    let g = Genotypes::from_fn(n, q, |_, _| rng.random_range(0..3u8)).unwrap();
    let y = Matrix::from_fn(n, p, |_, _| rng.random_range(-2.0..2.0));
    let data = Dataset::unlabeled(g, y).unwrap();
    let hp = Hyperparameters {
        alpha: rng.random_range(0.5..2.0),
        sigma2: rng.random_range(0.5..2.0),
        c: rng.random_range(0.5..2.0),
        d: rng.random_range(0.5..2.0),
        k_max: Some(2),
        center: rng.random_bool(0.5),
        seed,
        ..Default::default()
    };
    let k = 2;
    let state = VariationalState {
        lambda: Matrix::from_fn(k, 2, |_, _| rng.random_range(0.3..3.0)),
        eta: Matrix::from_fn(q, k, |_, _| rng.random_range(0.05..0.95)),
        phi: Matrix::from_fn(k, p, |_, _| rng.random_range(-1.5..1.5)),
        varphi: Matrix::from_fn(k, p, |_, _| rng.random_range(0.1..2.0)),
        kappa_shape: Matrix::from_fn(k, p, |_, _| rng.random_range(0.5..3.0)),
        kappa_scale: Matrix::from_fn(k, p, |_, _| rng.random_range(0.5..3.0)),
        iteration: 0,
    };
    (data, hp, state)
}

/// Relative-or-absolute closeness.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// Compare every closed-form update on micro instance `seed` against its
/// independent maximiser. Returns one message per mismatch.
pub fn update_oracle_failures(seed: u64) -> Vec<String> {
    use berrri_core::model::Model;
    let (data, hp, state) = micro_instance(seed);
    let model = Model::new(&data, &hp).unwrap();
    let (q, k, p) = state.dims();
    let mut failures = Vec::new();

    for f in 0..k {
        let mut s = state.clone();
        model.update_lambda(&mut s, f);
        let included: f64 = (0..q).map(|i| state.eta[(i, f)]).sum();
        let want = [hp.alpha / k as f64 + included, 1.0 + q as f64 - included];
        for (col, w) in want.into_iter().enumerate() {
            if !close(s.lambda[(f, col)], w, 1e-8) {
                failures.push(format!("seed {seed}: lambda[{f},{col}] {} vs {w}", s.lambda[(f, col)]));
            }
            let slope = derivative(
                |v| {
                    let mut t = s.clone();
                    t.lambda[(f, col)] = v;
                    brute_elbo(&t, &data, &hp)
                },
                s.lambda[(f, col)],
                1e-5,
            );
            if slope.abs() > 1e-5 {
                failures.push(format!("seed {seed}: lambda[{f},{col}] gradient {slope}"));
            }
        }
    }

    for f in 0..k {
        for i in 0..q {
            let mut s = state.clone();
            model.update_eta(&mut s, f, i).unwrap();
            let best = grid_argmax(|v| {
                let mut t = state.clone();
                t.eta[(i, f)] = v;
                brute_elbo(&t, &data, &hp)
            });
            if (s.eta[(i, f)] - best).abs() > 1e-4 {
                failures.push(format!("seed {seed}: eta[{i},{f}] {} vs grid {best}", s.eta[(i, f)]));
            }
        }
    }

    for f in 0..k {
        let mut s = state.clone();
        model.update_a(&mut s, f).unwrap();
        let (mean, var) = a_oracle(&state, &data, &hp, f);
        for j in 0..p {
            if !close(s.phi[(f, j)], mean[j], 1e-8) || !close(s.varphi[(f, j)], var[j], 1e-8) {
                failures.push(format!(
                    "seed {seed}: A[{f},{j}] ({}, {}) vs ({}, {})",
                    s.phi[(f, j)],
                    s.varphi[(f, j)],
                    mean[j],
                    var[j]
                ));
            }
        }
    }

    for f in 0..k {
        for j in 0..p {
            let mut s = state.clone();
            model.update_kappa(&mut s, f, j);
            let m = state.phi[(f, j)];
            let want = (hp.c + 0.5, hp.d + 0.5 * (m * m + state.varphi[(f, j)]));
            let got = (s.kappa_shape[(f, j)], s.kappa_scale[(f, j)]);
            if !close(got.0, want.0, 1e-8) || !close(got.1, want.1, 1e-8) {
                failures.push(format!("seed {seed}: kappa[{f},{j}] {got:?} vs {want:?}"));
            }
            for which in 0..2 {
                let at = if which == 0 { got.0 } else { got.1 };
                let slope = derivative(
                    |v| {
                        let mut t = s.clone();
                        if which == 0 {
                            t.kappa_shape[(f, j)] = v;
                        } else {
                            t.kappa_scale[(f, j)] = v;
                        }
                        brute_elbo(&t, &data, &hp)
                    },
                    at,
                    1e-5,
                );
                if slope.abs() > 1e-5 {
                    failures.push(format!("seed {seed}: kappa[{f},{j}] gradient {slope}"));
                }
            }
        }
    }
    failures
}

/// Run one sweep block by block, recording the ELBO after every single
/// coordinate update. Returns the updated state and any drop larger than
/// `rel_tol * |ELBO|`.
pub fn sweep_with_elbo_checks(
    model: &berrri_core::model::Model,
    state: &VariationalState,
    rel_tol: f64,
) -> (VariationalState, Vec<String>) {
    let (q, k, p) = state.dims();
    let mut s = state.clone();
    let mut last = model.elbo(&s).unwrap();
    let mut drops = Vec::new();
    let mut step = |s: &VariationalState, what: String, drops: &mut Vec<String>| {
        let now = model.elbo(s).unwrap();
        if now - last < -rel_tol * last.abs() {
            drops.push(format!("{what}: {last} -> {now}"));
        }
        last = now;
    };
    for f in 0..k {
        model.update_lambda(&mut s, f);
        step(&s, format!("lambda {f}"), &mut drops);
    }
    for f in 0..k {
        for i in 0..q {
            model.update_eta(&mut s, f, i).unwrap();
            step(&s, format!("eta {i},{f}"), &mut drops);
        }
    }
    for f in 0..k {
        model.update_a(&mut s, f).unwrap();
        step(&s, format!("A {f}"), &mut drops);
    }
    for f in 0..k {
        for j in 0..p {
            model.update_kappa(&mut s, f, j);
            step(&s, format!("kappa {f},{j}"), &mut drops);
        }
    }
    s.iteration += 1;
    (s, drops)
}
