use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::grid::GridSpec;
use super::metrics::{mse, residuals, Metrics, STANDARD_ERROR_DEFINITION};
use crate::data::{make_split, Dataset, SplitPlan};
use crate::error::{Error, Result};
use crate::interpret::avg_squared_gradient;
use crate::lls::{select_sigma, LlsModel, OlsModel, DEFAULT_RIDGE};
use crate::nls::{NlsConfig, NlsModel, NnModel};
use crate::seed::derive_seed;

/// Models a comparison can include.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Neural local smoother.
    Nls,
    /// Plain network predicting the target directly.
    Nn,
    /// Gaussian-kernel local linear smoother.
    Lls,
    /// Ordinary least squares.
    Ols,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Nls, ModelKind::Nn, ModelKind::Lls, ModelKind::Ols];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Nls => "nls",
            ModelKind::Nn => "nn",
            ModelKind::Lls => "lls",
            ModelKind::Ols => "ols",
        }
    }

    fn tag(self) -> u64 {
        self as u64 + 1
    }
}

/// Outer evaluation protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Protocol {
    Holdout { test_fraction: f64 },
    KFold { folds: usize },
}

impl Protocol {
    /// `(train rows, test rows)` for every outer fold.
    pub fn folds(&self, n: usize, seed: u64) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
        match *self {
            Protocol::Holdout { test_fraction } => {
                let split = make_split(n, &SplitPlan::holdout(1.0 - test_fraction, seed))?;
                Ok(vec![(split.indices(0), split.indices(1))])
            }
            Protocol::KFold { folds } => {
                let split = make_split(n, &SplitPlan::k_fold(folds, seed))?;
                Ok((0..folds).map(|k| (split.complement(k), split.indices(k))).collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareOptions {
    pub grid: GridSpec,
    pub protocol: Protocol,
    /// Training settings shared by the network models; the grid overrides the
    /// architecture and λ.
    pub base: NlsConfig,
    pub seed: u64,
    pub models: Vec<ModelKind>,
}

/// Validation score of one grid cell in one outer fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellScore {
    pub model: String,
    pub fold: usize,
    pub config: String,
    pub validation_mse: f64,
    pub selected: bool,
}

/// Pooled test performance of one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRow {
    pub model: String,
    /// Configuration chosen on validation data, per outer fold.
    pub selected: Vec<String>,
    pub test: Metrics,
    /// Mean over folds of the test-set average squared gradient (smoother network only).
    pub avg_squared_gradient: Option<f64>,
    /// Wall-clock seconds including the grid search. Kept out of the JSON report
    /// so that it stays byte-reproducible; see [`ExperimentReport::timings`].
    #[serde(skip)]
    pub fit_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub dataset: String,
    pub protocol: Protocol,
    pub seed: u64,
    pub standard_error_definition: String,
    pub rows: Vec<ModelRow>,
    pub cells: Vec<CellScore>,
}

struct Candidate<M> {
    config: String,
    validation_mse: f64,
    model: M,
}

/// Fits every candidate and keeps the first one with the smallest validation MSE.
fn select<M>(
    candidates: impl Iterator<Item = Result<Candidate<M>>>,
    model: ModelKind,
    fold: usize,
    cells: &mut Vec<CellScore>,
) -> Result<Candidate<M>> {
    let start = cells.len();
    let mut best: Option<(usize, Candidate<M>)> = None;
    for c in candidates {
        let c = c?;
        cells.push(CellScore {
            model: model.name().to_string(),
            fold,
            config: c.config.clone(),
            validation_mse: c.validation_mse,
            selected: false,
        });
        let better = best.as_ref().is_none_or(|(_, b)| c.validation_mse < b.validation_mse);
        if better {
            best = Some((cells.len() - 1, c));
        }
    }
    let (idx, best) = best.ok_or_else(|| Error::config("grid", "no candidates"))?;
    cells[idx].selected = true;
    debug_assert!(idx >= start);
    Ok(best)
}

fn cell_seed(base: u64, model: ModelKind, fold: usize, cell: usize) -> u64 {
    derive_seed(base, (model.tag() << 40) | ((fold as u64) << 20) | cell as u64)
}

fn arch_label(hidden: &[usize], lambda: Option<f64>) -> String {
    let widths: Vec<String> = hidden.iter().map(|w| w.to_string()).collect();
    match lambda {
        Some(l) => format!("hidden=[{}] lambda={l}", widths.join(",")),
        None => format!("hidden=[{}]", widths.join(",")),
    }
}

/// Grid-searched comparison of the requested models on `data`.
pub fn compare(data: &Dataset, dataset_name: &str, options: &CompareOptions) -> Result<ExperimentReport> {
    options.grid.validate()?;
    options.base.validate()?;
    if options.models.is_empty() {
        return Err(Error::config("models", "must name at least one model"));
    }
    let folds = options.protocol.folds(data.len(), derive_seed(options.seed, 0))?;
    let archs = options.grid.architectures();
    let mut cells = Vec::new();
    let mut rows = Vec::new();

    for &kind in &options.models {
        let started = Instant::now();
        let mut pooled = Vec::new();
        let mut selected = Vec::new();
        let mut gradients = Vec::new();
        for (f, (train_idx, test_idx)) in folds.iter().enumerate() {
            let outer = data.subset(train_idx);
            let test = data.subset(test_idx);
            let inner = make_split(
                outer.len(),
                &SplitPlan::holdout(
                    1.0 - options.base.validation_fraction,
                    derive_seed(options.seed, 1000 + f as u64),
                ),
            )?;
            let (fit_part, valid) = (outer.subset(&inner.indices(0)), outer.subset(&inner.indices(1)));

            let (label, predictions) = match kind {
                ModelKind::Nls => {
                    let grid = archs
                        .iter()
                        .flat_map(|a| options.grid.lambdas.iter().map(move |&l| (a.clone(), l)))
                        .enumerate()
                        .map(|(ci, (hidden, lambda))| {
                            let cfg = options
                                .base
                                .clone()
                                .with_hidden(hidden.clone())
                                .with_lambda(lambda)
                                .with_seed(cell_seed(options.seed, kind, f, ci));
                            let (model, _) = NlsModel::fit_with_validation(&cfg, &fit_part, &valid)?;
                            Ok(Candidate {
                                config: arch_label(&hidden, Some(lambda)),
                                validation_mse: mse(&model.predict_batch(&valid.features)?, &valid.target)?,
                                model,
                            })
                        });
                    let best = select(grid, kind, f, &mut cells)?;
                    gradients.push(avg_squared_gradient(&best.model, &test)?);
                    (best.config, best.model.predict_batch(&test.features)?)
                }
                ModelKind::Nn => {
                    let grid = archs.iter().enumerate().map(|(ci, hidden)| {
                        let cfg = options.base.clone().with_hidden(hidden.clone()).with_seed(cell_seed(
                            options.seed,
                            kind,
                            f,
                            ci,
                        ));
                        let (model, _) = NnModel::fit_with_validation(&cfg, &fit_part, &valid)?;
                        Ok(Candidate {
                            config: arch_label(hidden, None),
                            validation_mse: mse(&model.predict_batch(&valid.features)?, &valid.target)?,
                            model,
                        })
                    });
                    let best = select(grid, kind, f, &mut cells)?;
                    (best.config, best.model.predict_batch(&test.features)?)
                }
                ModelKind::Lls => {
                    let selection = select_sigma(&fit_part, &options.grid.sigmas, &valid, DEFAULT_RIDGE)?;
                    let grid = selection.scores.iter().map(|&(sigma, score)| {
                        Ok(Candidate {
                            config: format!("sigma={sigma}"),
                            validation_mse: score,
                            model: sigma,
                        })
                    });
                    let best = select(grid, kind, f, &mut cells)?;
                    debug_assert_eq!(best.model, selection.sigma);
                    let model = LlsModel::new(&outer, selection.sigma, DEFAULT_RIDGE)?;
                    (best.config, model.predict_batch(&test.features)?)
                }
                ModelKind::Ols => {
                    let model = OlsModel::fit(&outer)?;
                    (String::from("ols"), model.predict_batch(&test.features)?)
                }
            };
            selected.push(label);
            pooled.extend(residuals(&predictions, &test.target)?);
        }
        rows.push(ModelRow {
            model: kind.name().to_string(),
            selected,
            test: Metrics::from_residuals(&pooled)?,
            avg_squared_gradient: (!gradients.is_empty())
                .then(|| gradients.iter().sum::<f64>() / gradients.len() as f64),
            fit_seconds: started.elapsed().as_secs_f64(),
        });
    }

    Ok(ExperimentReport {
        dataset: dataset_name.to_string(),
        protocol: options.protocol,
        seed: options.seed,
        standard_error_definition: STANDARD_ERROR_DEFINITION.to_string(),
        rows,
        cells,
    })
}

impl ExperimentReport {
    pub fn row(&self, model: ModelKind) -> Option<&ModelRow> {
        self.rows.iter().find(|r| r.model == model.name())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Fit wall times per model, as JSON.
    pub fn timings(&self) -> Result<String> {
        let map: serde_json::Map<String, serde_json::Value> = self
            .rows
            .iter()
            .map(|r| (r.model.clone(), serde_json::Value::from(r.fit_seconds)))
            .collect();
        Ok(serde_json::to_string_pretty(&map)?)
    }

    /// One line per model.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "model",
            "selected",
            "n",
            "mse",
            "mse_se",
            "mae",
            "mae_se",
            "avg_squared_gradient",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.model.clone(),
                r.selected.join(";"),
                r.test.n.to_string(),
                r.test.mse.to_string(),
                r.test.mse_se.to_string(),
                r.test.mae.to_string(),
                r.test.mae_se.to_string(),
                r.avg_squared_gradient.map(|g| g.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// One line per evaluated grid cell.
    pub fn write_cells_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["model", "fold", "config", "validation_mse", "selected"])?;
        for c in &self.cells {
            w.write_record([
                c.model.clone(),
                c.fold.to_string(),
                c.config.clone(),
                c.validation_mse.to_string(),
                c.selected.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
