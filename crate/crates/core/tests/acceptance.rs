//! End-to-end acceptance run: one `[PASS]`/`[FAIL]` line per criterion, non-zero
//! exit status if any fails. Run with `cargo test --release --test acceptance`.

mod common;

use std::time::Instant;

use common::*;
use nls_core::autodiff::{forward_with_input_jacobian, loss_gradient, mlp_specs, Mode, Objective};
use nls_core::data::{gen_quadratic, gen_sin, make_split, Dataset, SplitPlan};
use nls_core::experiments::{compare, mse, sweep_lambda, CompareOptions, GridSpec, ModelKind, Protocol, SweepOptions};
use nls_core::interpret::{avg_squared_gradient, explain};
use nls_core::linalg::Matrix;
use nls_core::lls::{LlsModel, DEFAULT_RIDGE, SIGMA_GRID};
use nls_core::nls::{local_linear, NlsClassifier, NlsConfig, NlsModel};
use nls_core::seed::derive_seed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn holdout(data: &Dataset, train_fraction: f64, seed: u64) -> (Dataset, Dataset) {
    let s = make_split(data.len(), &SplitPlan::holdout(train_fraction, seed)).unwrap();
    (data.subset(&s.indices(0)), data.subset(&s.indices(1)))
}

/// Optimizer budget for penalties large enough to force constant coefficients.
fn long_budget(base: &NlsConfig) -> NlsConfig {
    NlsConfig {
        learning_rate: 1e-2,
        patience: 500,
        lr_patience: 250,
        max_epochs: 20_000,
        ..base.clone()
    }
}

/// Largest adjacent increase of `values` as a fraction of the earlier value.
fn increases(values: &[f64]) -> Vec<f64> {
    values
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| (w[1] - w[0]) / w[0].abs().max(1e-300))
        .collect()
}

fn fmt_list(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:.4e}")).collect::<Vec<_>>().join(", ")
}

fn gradient_exactness() -> Outcome {
    let d = 3;
    let w = random_net(&mlp_specs(d, &[8, 6], d, false, 0.0), 101);
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let x = random_matrix(&mut rng, 12, d, 2.0);
    let m = random_matrix(&mut rng, 12, d, 2.0);
    let y: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
    let obj = Objective::LocalLinear {
        multipliers: &m,
        targets: &y,
        intercept: 0.2,
    };
    let lambda = 0.8;
    let g = loss_gradient(&w, &x, &obj, lambda, Mode::Eval).unwrap();
    let h = 1e-6;
    let mut worst_weight = 0.0f64;
    for _ in 0..20 {
        let dir = random_direction(&w, &mut rng);
        let lp = loss_gradient(&perturbed(&w, &dir, h), &x, &obj, lambda, Mode::Eval)
            .unwrap()
            .parts
            .total;
        let lm = loss_gradient(&perturbed(&w, &dir, -h), &x, &obj, lambda, Mode::Eval)
            .unwrap()
            .parts
            .total;
        worst_weight = worst_weight.max(rel_err(directional(&g.weights, &dir), (lp - lm) / (2.0 * h)));
    }

    let mut worst_jac = 0.0f64;
    for (case, hidden) in [vec![5], vec![7, 4], vec![6, 6, 3]].iter().enumerate() {
        for dim in 1..=3 {
            let net = random_net(
                &mlp_specs(dim, hidden, dim, false, 0.0),
                200 + 10 * case as u64 + dim as u64,
            );
            let inputs = random_matrix(&mut rng, 5, dim, 10.0);
            let (_, dual) = forward_with_input_jacobian(&net, &inputs).unwrap();
            for i in 0..inputs.rows() {
                let fd = fd_jacobian(&net, inputs.row(i), 1e-5);
                worst_jac = worst_jac.max(jacobian_rel_err(&dual.jacobian(i), &fd));
            }
        }
    }
    outcome(
        worst_weight < 1e-4 && worst_jac < 1e-6,
        format!("weight-gradient rel err {worst_weight:.2e} (< 1e-4), input-Jacobian rel err {worst_jac:.2e} (< 1e-6)"),
    )
}

fn lls_oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.random_range(8..=50);
        let d = rng.random_range(1..=3);
        let sigma = rng.random_range(0.5..20.0);
        let x = random_matrix(&mut rng, n, d, 4.0);
        let y: Vec<f64> = (0..n)
            .map(|i| x.row(i).iter().map(|v| v.sin()).sum::<f64>() + rng.random_range(-0.1..0.1))
            .collect();
        let query: Vec<f64> = (0..d).map(|_| rng.random_range(-4.0..4.0)).collect();
        let model = LlsModel::new(&Dataset::unnamed(x.clone(), y.clone()).unwrap(), sigma, DEFAULT_RIDGE).unwrap();
        let fit = model.fit_predict(&query).unwrap();
        let (theta, pred) = lls_oracle(&x, &y, sigma, DEFAULT_RIDGE, &query);
        for (a, b) in fit
            .theta
            .iter()
            .chain([&fit.prediction])
            .zip(theta.iter().chain([&pred]))
        {
            worst = worst.max((a - b).abs() / (1.0 + a.abs().max(b.abs())));
        }
    }
    outcome(
        worst <= 1e-10,
        format!("200 triples, worst scaled difference {worst:.2e} (<= 1e-10)"),
    )
}

fn ols_reductions(trained: &mut Vec<NlsModel>) -> Outcome {
    let data = linear_data(60, 0.5, 3);
    let ols = ols_oracle(&data.features, &data.target);
    let lls = LlsModel::new(&data, 1e9, DEFAULT_RIDGE).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut worst_lls = 0.0f64;
    for _ in 0..50 {
        let q = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
        let fit = lls.fit_predict(&q).unwrap();
        for (a, b) in fit.theta.iter().zip(&ols) {
            worst_lls = worst_lls.max((a - b).abs());
        }
        worst_lls = worst_lls.max((fit.prediction - linear_predict(&ols, &q)).abs());
    }

    // An explicit early-stopping set keeps NLS and OLS on the same training
    // rows. At λ = 1e8 the validation objective is dominated by penalty noise,
    // so a large step size lets an early, lucky epoch win; a moderate rate with
    // frequent decay settles on the least-squares optimum instead.
    let data = linear_data(1000, 0.5, 5);
    let valid = linear_data(300, 0.5, 6);
    let ols = ols_oracle(&data.features, &data.target);
    let cfg = NlsConfig {
        learning_rate: 1e-3,
        patience: 1000,
        lr_patience: 100,
        ..long_budget(&NlsConfig::default().with_hidden(vec![20]))
    }
    .with_lambda(1e8);
    let (model, _) = NlsModel::fit_with_validation(&cfg, &data, &valid).unwrap();
    let probe: Vec<[f64; 2]> = (0..10)
        .flat_map(|i| (0..10).map(move |j| [-3.0 + 6.0 * i as f64 / 9.0, -3.0 + 6.0 * j as f64 / 9.0]))
        .collect();
    let probe = Matrix::from_rows(&probe).unwrap();
    let theta = model.theta_batch(&probe).unwrap();
    let variation = (0..theta.cols())
        .map(|k| {
            let col = theta.column(k);
            col.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - col.iter().cloned().fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    let pred = model.predict_batch(&probe).unwrap();
    let rmse = ((0..probe.rows())
        .map(|i| (pred[i] - linear_predict(&ols, probe.row(i))).powi(2))
        .sum::<f64>()
        / probe.rows() as f64)
        .sqrt();
    trained.push(model);
    outcome(
        worst_lls < 1e-6 && variation < 1e-3 && rmse < 1e-2,
        format!(
            "LLS(σ=1e9) vs OLS max diff {worst_lls:.2e} (< 1e-6); NLS(λ=1e8) coefficient variation {variation:.2e} (< 1e-3), RMSE vs OLS {rmse:.2e} (< 1e-2)"
        ),
    )
}

fn sin_trade_off(trained: &mut Vec<NlsModel>) -> Outcome {
    let (train, test) = holdout(&gen_sin(2000, 0), 0.8, 1);
    let mut test_mse = Vec::new();
    let mut grad = Vec::new();
    for lambda in [0.0, 1.0] {
        let (model, _) = NlsModel::fit(&NlsConfig::default().with_lambda(lambda), &train).unwrap();
        test_mse.push(mse(&model.predict_batch(&test.features).unwrap(), &test.target).unwrap());
        grad.push(avg_squared_gradient(&model, &test).unwrap());
        trained.push(model);
    }
    outcome(
        test_mse[0] < 0.01 && grad[1] < 0.5 * grad[0] && test_mse[1] >= test_mse[0],
        format!(
            "test MSE λ=0 {:.3e} (< 0.01), λ=1 {:.3e} (>= λ=0); avg squared gradient λ=0 {:.4}, λ=1 {:.4} (ratio {:.3} < 0.5)",
            test_mse[0],
            test_mse[1],
            grad[0],
            grad[1],
            grad[1] / grad[0]
        ),
    )
}

fn quadratic_robustness() -> Outcome {
    let mut nls = Vec::new();
    let mut lls = Vec::new();
    for k in [0, 5, 50] {
        let data = gen_quadratic(2000, k, 42);
        let options = CompareOptions {
            grid: GridSpec {
                layer_counts: vec![1],
                widths: vec![100],
                sigmas: SIGMA_GRID.to_vec(),
                lambdas: vec![0.0],
            },
            protocol: Protocol::Holdout { test_fraction: 0.2 },
            base: NlsConfig::default(),
            seed: 0,
            models: vec![ModelKind::Nls, ModelKind::Lls],
        };
        let report = compare(&data, "quadratic", &options).unwrap();
        nls.push(report.row(ModelKind::Nls).unwrap().test.mse);
        lls.push(report.row(ModelKind::Lls).unwrap().test.mse);
    }
    let in_range = |v: f64| (6.0..=13.0).contains(&v);
    let a = in_range(nls[0]) && in_range(lls[0]);
    let b = lls[1] >= 10.0 * lls[0];
    let c = nls[1] <= 3.0 * nls[0];
    let directional = lls[2] > nls[2];
    outcome(
        a && b && c && directional,
        format!(
            "NLS {} | LLS {} (0/5/50 irrelevant); (a) {} (b) LLS ratio {:.2} >= 10: {} (c) NLS ratio {:.2} <= 3: {} (50: LLS > NLS) {}",
            fmt_list(&nls),
            fmt_list(&lls),
            a,
            lls[1] / lls[0],
            b,
            nls[1] / nls[0],
            c,
            directional
        ),
    )
}

fn boston_reproduction() -> Outcome {
    let options = CompareOptions {
        grid: GridSpec::reduced(),
        protocol: Protocol::KFold { folds: 5 },
        base: NlsConfig::default(),
        seed: 0,
        models: vec![ModelKind::Nls],
    };
    let report = compare(&boston(), "boston", &options).unwrap();
    let row = report.row(ModelKind::Nls).unwrap();
    outcome(
        (6.0..=15.0).contains(&row.test.mse),
        format!(
            "5-fold pooled test MSE {:.3} ± {:.3} (in [6, 15])",
            row.test.mse, row.test.mse_se
        ),
    )
}

fn boston_sweep(trained: &mut Vec<NlsModel>) -> (Outcome, Outcome) {
    let data = boston();
    let folds = Protocol::KFold { folds: 5 }
        .folds(data.len(), derive_seed(0, 0))
        .unwrap();
    let (train, test) = (data.subset(&folds[0].0), data.subset(&folds[0].1));
    let base = NlsConfig::default();
    let lambdas = vec![0.0, 2.0, 5.0, 10.0, 50.0, 1e8];
    let mut step_configs = vec![base.clone(); lambdas.len() - 1];
    step_configs.push(long_budget(&base));
    let options = SweepOptions {
        base,
        lambdas,
        warm_start: true,
        extension_seed: Some(derive_seed(0, 2000)),
        step_configs,
    };
    let sweep = sweep_lambda(&train, &test, &options).unwrap();
    let rows = &sweep.report.rows;

    let grads: Vec<f64> = rows[..5].iter().map(|r| r.train_avg_squared_gradient).collect();
    let tests: Vec<f64> = rows[..5].iter().map(|r| r.test_mse).collect();
    let grad_ok = increases(&grads).iter().all(|&r| r <= 0.1);
    let best = tests.iter().cloned().fold(f64::INFINITY, f64::min);
    let seven = outcome(
        grad_ok && best <= tests[0],
        format!(
            "train avg squared gradient [{}] (adjacent increases <= 10%: {grad_ok}); test MSE [{}], min {best:.3} <= λ=0 {:.3}",
            fmt_list(&grads),
            fmt_list(&tests),
            tests[0]
        ),
    );

    let gaps: Vec<f64> = rows[1..].iter().map(|r| r.extension_gap.unwrap()).collect();
    let ups = increases(&gaps);
    let (_, sd) = test.target_moments();
    let last = *gaps.last().unwrap();
    let eight = outcome(
        ups.len() <= 1 && ups.iter().all(|&r| r <= 0.1) && last < 1e-3 * sd,
        format!(
            "extension gaps λ=2,5,10,50,1e8 [{}]; {} adjacent increase(s) {}; gap at 1e8 {last:.2e} < {:.2e}",
            fmt_list(&gaps),
            ups.len(),
            fmt_list(&ups),
            1e-3 * sd
        ),
    );
    trained.extend(sweep.models);
    (seven, eight)
}

fn classifier_sanity() -> Outcome {
    let (train, test) = holdout(&blobs(2000, 1), 0.8, 2);
    let cfg = NlsConfig {
        max_epochs: 100,
        ..NlsConfig::default().with_hidden(vec![16])
    };
    let (model, _) = NlsClassifier::fit(&cfg, &train).unwrap();
    let correct = (0..test.len())
        .filter(|&i| model.classify(test.row(i)).unwrap() as f64 == test.target[i])
        .count();
    let accuracy = correct as f64 / test.len() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst_sum = 0.0f64;
    for _ in 0..1000 {
        let x = [rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0)];
        let p = model.classify_proba(&x).unwrap();
        worst_sum = worst_sum.max((p.iter().sum::<f64>() - 1.0).abs());
    }

    let n = 400;
    let xs: Vec<f64> = (0..n).map(|i| -3.0 + 6.0 * i as f64 / (n - 1) as f64).collect();
    let ys: Vec<f64> = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            if x + 0.7 * ((i * 37 % 11) as f64 / 5.0 - 1.0) > 0.3 {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let data = Dataset::unnamed(Matrix::from_vec(n, 1, xs.clone()).unwrap(), ys.clone()).unwrap();
    let cfg = NlsConfig {
        lambda: 1e6,
        max_epochs: 400,
        ..NlsConfig::default().with_hidden(vec![8])
    };
    let (constant, _) = NlsClassifier::fit(&cfg, &data).unwrap();
    let (b, w) = logistic_oracle(&xs, &ys);
    let boundary = -b / w;
    let mut sign_ok = true;
    for x in [-2.5, -1.0, 0.0, 1.0, 2.5] {
        let theta = constant.theta(&[x]).unwrap();
        let slope = theta[(1, 1)] - theta[(0, 1)];
        sign_ok &= slope.signum() == w.signum();
        let side = if x > boundary { 1 } else { 0 };
        if (x - boundary).abs() > 0.5 {
            sign_ok &= constant.classify(&[x]).unwrap() == side;
        }
    }
    outcome(
        worst_sum <= 1e-12 && accuracy >= 0.97 && sign_ok,
        format!(
            "probability sum error {worst_sum:.1e} (<= 1e-12); blobs accuracy {accuracy:.4} (>= 0.97); slope sign and boundary side agree with logistic oracle: {sign_ok}"
        ),
    )
}

fn local_linearity(trained: &[NlsModel]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = 0.0f64;
    let mut exact = true;
    let count = 1000;
    for i in 0..count {
        let model = &trained[i % trained.len()];
        let stats = model.input_stats();
        let x: Vec<f64> = (0..model.dim())
            .map(|k| stats.means[k] + stats.stds[k] * rng.random_range(-3.0..3.0))
            .collect();
        let prediction = model.predict(&x).unwrap();
        let theta = model.theta(&x).unwrap();
        let linear = theta[0] + theta[1..].iter().zip(&x).map(|(t, v)| t * v).sum::<f64>();
        worst = worst.max((prediction - linear).abs());
        let e = explain(model, &x).unwrap();
        exact &= e.total() == prediction && e.prediction == prediction && local_linear(&theta, &x) == prediction;
    }
    outcome(
        worst <= 1e-10 && exact,
        format!("{count} instances over {} models, max |predict − θ·x| {worst:.2e} (<= 1e-10); explain totals exact: {exact}", trained.len()),
    )
}

fn main() {
    let mut trained = Vec::new();
    let mut failed = 0;
    let mut report = |id: &str, name: &str, started: Instant, o: Outcome| {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        if !o.pass {
            failed += 1;
        }
        println!(
            "[{tag}] {id} {name}: {} ({:.1}s)",
            o.detail,
            started.elapsed().as_secs_f64()
        );
    };

    let t = Instant::now();
    report("1", "gradient exactness", t, gradient_exactness());
    let t = Instant::now();
    report("2", "LLS oracle equivalence", t, lls_oracle_equivalence());
    let t = Instant::now();
    report("3", "OLS reductions", t, ols_reductions(&mut trained));
    let t = Instant::now();
    report("4", "sine trade-off", t, sin_trade_off(&mut trained));
    let t = Instant::now();
    report("5", "quadratic robustness", t, quadratic_robustness());
    let t = Instant::now();
    report("6", "Boston 5-fold", t, boston_reproduction());
    let t = Instant::now();
    let (seven, eight) = boston_sweep(&mut trained);
    report("7", "Boston λ sweep", t, seven);
    report("8", "Boston extension error", t, eight);
    let t = Instant::now();
    report("9", "classifier sanity", t, classifier_sanity());
    let t = Instant::now();
    report("10", "local-linearity identity", t, local_linearity(&trained));

    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}
