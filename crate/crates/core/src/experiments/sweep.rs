use std::io::Write;

use serde::{Deserialize, Serialize};

use super::metrics::mse;
use crate::data::{make_split, Dataset, SplitPlan};
use crate::error::{Error, Result};
use crate::interpret::{avg_squared_gradient, extend_predictions};
use crate::nls::{NlsConfig, NlsModel, TrainTrace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub base: NlsConfig,
    /// Penalty strengths, in ascending order.
    pub lambdas: Vec<f64>,
    /// Start each fit from the previous λ's weights.
    pub warm_start: bool,
    /// When set, the test set is split 3/4 prediction / 1/4 extension with this
    /// seed and the mean extension gap is reported for every λ.
    pub extension_seed: Option<u64>,
    /// Optional training configuration per λ (its own λ is ignored), e.g. a
    /// longer optimizer budget for very large penalties. Empty means `base`
    /// for every step.
    #[serde(default)]
    pub step_configs: Vec<NlsConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub train_mse: f64,
    pub test_mse: f64,
    pub train_avg_squared_gradient: f64,
    pub test_avg_squared_gradient: f64,
    pub epochs: usize,
    pub best_epoch: usize,
    pub extension_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub warm_start: bool,
    pub rows: Vec<SweepRow>,
}

/// Result of a sweep: the report plus every fitted model and its trace.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub report: SweepReport,
    pub models: Vec<NlsModel>,
    pub traces: Vec<TrainTrace>,
}

/// Fits one model per λ and records train/test error and smoothness.
pub fn sweep_lambda(train: &Dataset, test: &Dataset, options: &SweepOptions) -> Result<Sweep> {
    if options.lambdas.is_empty() {
        return Err(Error::config("lambdas", "must not be empty"));
    }
    if options.lambdas.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::config("lambdas", "must be strictly ascending"));
    }
    if !options.step_configs.is_empty() && options.step_configs.len() != options.lambdas.len() {
        return Err(Error::config("step_configs", "need one configuration per lambda"));
    }
    let extension = match options.extension_seed {
        Some(seed) => {
            let split = make_split(test.len(), &SplitPlan::holdout(0.75, seed))?;
            Some((
                test.subset(&split.indices(0)).features,
                test.subset(&split.indices(1)).features,
            ))
        }
        None => None,
    };

    let mut rows = Vec::with_capacity(options.lambdas.len());
    let mut models: Vec<NlsModel> = Vec::with_capacity(options.lambdas.len());
    let mut traces = Vec::with_capacity(options.lambdas.len());
    for (step, &lambda) in options.lambdas.iter().enumerate() {
        let config = options
            .step_configs
            .get(step)
            .unwrap_or(&options.base)
            .clone()
            .with_lambda(lambda);
        let (model, trace) = match models.last() {
            Some(prev) if options.warm_start => prev.warm_fit_config(&config, train)?,
            _ => NlsModel::fit(&config, train)?,
        };
        let extension_gap = match &extension {
            Some((pred, ext)) => Some(extend_predictions(&model, pred, ext)?.mean_gap),
            None => None,
        };
        rows.push(SweepRow {
            lambda,
            train_mse: mse(&model.predict_batch(&train.features)?, &train.target)?,
            test_mse: mse(&model.predict_batch(&test.features)?, &test.target)?,
            train_avg_squared_gradient: avg_squared_gradient(&model, train)?,
            test_avg_squared_gradient: avg_squared_gradient(&model, test)?,
            epochs: trace.epochs(),
            best_epoch: trace.best_epoch,
            extension_gap,
        });
        models.push(model);
        traces.push(trace);
    }
    Ok(Sweep {
        report: SweepReport {
            warm_start: options.warm_start,
            rows,
        },
        models,
        traces,
    })
}

impl SweepReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "lambda",
            "train_mse",
            "test_mse",
            "train_avg_squared_gradient",
            "test_avg_squared_gradient",
            "epochs",
            "best_epoch",
            "extension_gap",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.lambda.to_string(),
                r.train_mse.to_string(),
                r.test_mse.to_string(),
                r.train_avg_squared_gradient.to_string(),
                r.test_avg_squared_gradient.to_string(),
                r.epochs.to_string(),
                r.best_epoch.to_string(),
                r.extension_gap.map(|g| g.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Writes `x, θ_0, θ_1, prediction` on an even grid over `[lo, hi]` for a
/// one-feature model.
pub fn write_theta_profile<W: Write>(model: &NlsModel, lo: f64, hi: f64, points: usize, writer: W) -> Result<()> {
    if model.dim() != 1 {
        return Err(Error::input(format!(
            "theta profile needs a 1-feature model, got {}",
            model.dim()
        )));
    }
    if points < 2 || !(lo < hi) {
        return Err(Error::config("profile", "need at least 2 points and lo < hi"));
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["x", "theta0", "theta1", "prediction"])?;
    for i in 0..points {
        let x = lo + (hi - lo) * i as f64 / (points - 1) as f64;
        let theta = model.theta(&[x])?;
        let pred = model.predict(&[x])?;
        w.write_record([
            x.to_string(),
            theta[0].to_string(),
            theta[1].to_string(),
            pred.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
