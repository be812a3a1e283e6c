use std::fs;
use std::io::Write;
use std::path::Path;

use nls_core::data::{make_split, Dataset, SplitPlan};
use nls_core::experiments::{compare, sweep_lambda, write_theta_profile, CompareOptions, Metrics, SweepOptions};
use nls_core::interpret::{explain, explain_lls, extend_predictions, Explanation};
use nls_core::lls::{LlsModel, DEFAULT_RIDGE};
use nls_core::nls::{NlsClassifier, NlsModel, TrainTrace};
use nls_core::seed::derive_seed;
use serde::Serialize;

use crate::config::RunConfig;
use crate::{source, CliError, Command, DataArgs};

/// Seed tag of the outer train/test split; shared by `compare` and `sweep-lambda`
/// so that fold `k` is the same rows in both.
const OUTER_SPLIT_TAG: u64 = 0;
const EXTENSION_TAG: u64 = 2000;
const PROFILE_POINTS: usize = 200;

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Train { data, run, classifier } => {
            let cfg = RunConfig::load(run.config.as_deref())?.finish(run.seed)?;
            let (dataset, _) = load(&data)?;
            fs::create_dir_all(&run.out)?;
            let trace = if classifier {
                let (model, trace) = NlsClassifier::fit(&cfg.model, &dataset)?;
                model.save(run.out.join("model.json"))?;
                trace
            } else {
                let (model, trace) = NlsModel::fit(&cfg.model, &dataset)?;
                model.save(run.out.join("model.json"))?;
                trace
            };
            write_json(&run.out.join("trace.json"), &trace)?;
            write_trace_csv(&run.out.join("trace.csv"), &trace)?;
            eprintln!(
                "trained {} epochs, best epoch {}, validation loss {:.6e}",
                trace.epochs(),
                trace.best_epoch,
                trace.best_validation_loss()
            );
            Ok(())
        }
        Command::Eval { model, data, out } => {
            let (dataset, _) = load(&data)?;
            let text = fs::read_to_string(&model)?;
            let report = match model_kind(&text)?.as_str() {
                "nls_regressor" => {
                    let m = NlsModel::from_json(&text)?;
                    EvalReport::Regression(Metrics::evaluate(
                        &m.predict_batch(&dataset.features)?,
                        &dataset.target,
                    )?)
                }
                "nls_classifier" => {
                    EvalReport::Classification(classification_metrics(&NlsClassifier::from_json(&text)?, &dataset)?)
                }
                other => return Err(CliError::Config(format!("model: unknown kind `{other}`"))),
            };
            let json = serde_json::to_string_pretty(&report)?;
            println!("{json}");
            if let Some(dir) = out {
                fs::create_dir_all(&dir)?;
                fs::write(dir.join("metrics.json"), json + "\n")?;
            }
            Ok(())
        }
        Command::SweepLambda { data, run, extend } => {
            let cfg = RunConfig::load(run.config.as_deref())?.finish(run.seed)?;
            let (dataset, _) = load(&data)?;
            let seed = cfg.model.seed;
            let folds = cfg
                .sweep
                .protocol
                .folds(dataset.len(), derive_seed(seed, OUTER_SPLIT_TAG))?;
            let (train_idx, test_idx) = folds.get(cfg.sweep.fold).ok_or_else(|| {
                CliError::Config(format!(
                    "sweep.fold: {} out of range for {} folds",
                    cfg.sweep.fold,
                    folds.len()
                ))
            })?;
            let (train, test) = (dataset.subset(train_idx), dataset.subset(test_idx));
            let options = SweepOptions {
                base: cfg.model.clone(),
                lambdas: cfg.sweep.lambdas.clone(),
                warm_start: cfg.sweep.warm_start,
                extension_seed: extend.then(|| derive_seed(seed, EXTENSION_TAG)),
                step_configs: vec![],
            };
            let sweep = sweep_lambda(&train, &test, &options)?;
            fs::create_dir_all(&run.out)?;
            fs::write(run.out.join("sweep.json"), sweep.report.to_json()? + "\n")?;
            sweep.report.write_csv(fs::File::create(run.out.join("sweep.csv"))?)?;
            for (i, model) in sweep.models.iter().enumerate() {
                model.save(run.out.join(format!("model_{i}.json")))?;
                if dataset.dim() == 1 {
                    let column = (0..dataset.len()).map(|r| dataset.row(r)[0]);
                    let lo = column.clone().fold(f64::INFINITY, f64::min);
                    let hi = column.fold(f64::NEG_INFINITY, f64::max);
                    let file = fs::File::create(run.out.join(format!("theta_{i}.csv")))?;
                    write_theta_profile(model, lo, hi, PROFILE_POINTS, file)?;
                }
            }
            let mut stdout = std::io::stdout().lock();
            sweep.report.write_csv(&mut stdout)?;
            Ok(())
        }
        Command::Compare { data, run } => {
            let cfg = RunConfig::load(run.config.as_deref())?.finish(run.seed)?;
            let (dataset, name) = load(&data)?;
            let options = CompareOptions {
                grid: cfg.compare.grid.clone(),
                protocol: cfg.compare.protocol,
                base: cfg.model.clone(),
                seed: cfg.model.seed,
                models: cfg.compare.models.clone(),
            };
            let report = compare(&dataset, &name, &options)?;
            fs::create_dir_all(&run.out)?;
            fs::write(run.out.join("report.json"), report.to_json()? + "\n")?;
            report.write_csv(fs::File::create(run.out.join("report.csv"))?)?;
            report.write_cells_csv(fs::File::create(run.out.join("cells.csv"))?)?;
            fs::write(run.out.join("timings.json"), report.timings()? + "\n")?;
            let mut stdout = std::io::stdout().lock();
            report.write_csv(&mut stdout)?;
            Ok(())
        }
        Command::Explain {
            model,
            data,
            out,
            extend,
            seed,
            lls_train,
            sigma,
        } => {
            let (instances, _) = load(&data)?;
            fs::create_dir_all(&out)?;
            let explanations: Vec<Explanation> = if let Some(train_spec) = lls_train {
                if extend {
                    return Err(CliError::Config(
                        "extend: only supported for smoother network models".into(),
                    ));
                }
                let (train, _) = source::load(&train_spec, data.target.as_deref())?;
                let lls = LlsModel::new(&train, sigma, DEFAULT_RIDGE)?;
                (0..instances.len())
                    .map(|i| explain_lls(&lls, instances.row(i), train.feature_names.clone()))
                    .collect::<Result<_, _>>()?
            } else {
                let path = model.expect("clap requires --model without --lls-train");
                let text = fs::read_to_string(&path)?;
                let kind = model_kind(&text)?;
                if kind != "nls_regressor" {
                    return Err(CliError::Config(format!(
                        "model: explanations need an nls_regressor model, got `{kind}`"
                    )));
                }
                let nls = NlsModel::from_json(&text)?;
                if extend {
                    let split = make_split(instances.len(), &SplitPlan::holdout(0.75, seed))?;
                    let prediction = instances.subset(&split.indices(0)).features;
                    let extension = instances.subset(&split.indices(1)).features;
                    let report = extend_predictions(&nls, &prediction, &extension)?;
                    write_json(&out.join("extension.json"), &report)?;
                    fs::write(out.join("extension.txt"), report.to_text())?;
                    eprintln!("mean extension gap {:.6e}", report.mean_gap);
                }
                (0..instances.len())
                    .map(|i| explain(&nls, instances.row(i)))
                    .collect::<Result<_, _>>()?
            };
            write_json(&out.join("explanations.json"), &explanations)?;
            let mut text = String::new();
            for (i, e) in explanations.iter().enumerate() {
                text.push_str(&format!("instance {i}\n{}\n", e.to_text()));
            }
            fs::write(out.join("explanations.txt"), text)?;
            Ok(())
        }
    }
}

fn load(data: &DataArgs) -> Result<(Dataset, String), CliError> {
    source::load(&data.data, data.target.as_deref())
}

fn model_kind(text: &str) -> Result<String, CliError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("model: not valid JSON: {e}")))?;
    value
        .get("kind")
        .and_then(|k| k.as_str())
        .map(str::to_string)
        .ok_or_else(|| CliError::Config("model: document has no `kind`".into()))
}

#[derive(Serialize)]
#[serde(tag = "task", rename_all = "snake_case")]
enum EvalReport {
    Regression(Metrics),
    Classification(ClassificationMetrics),
}

#[derive(Serialize)]
struct ClassificationMetrics {
    n: usize,
    accuracy: f64,
    log_loss: f64,
}

fn classification_metrics(model: &NlsClassifier, data: &Dataset) -> Result<ClassificationMetrics, CliError> {
    if data.is_empty() {
        return Err(CliError::Runtime("no instances to evaluate".into()));
    }
    let mut correct = 0usize;
    let mut log_loss = 0.0;
    for i in 0..data.len() {
        let label = data.target[i];
        let proba = model.classify_proba(data.row(i))?;
        let class = model.classes().iter().position(|&c| c as f64 == label);
        if model.classify(data.row(i))? as f64 == label {
            correct += 1;
        }
        log_loss -= class.map(|c| proba[c].ln()).unwrap_or(f64::NEG_INFINITY);
    }
    let n = data.len() as f64;
    Ok(ClassificationMetrics {
        n: data.len(),
        accuracy: correct as f64 / n,
        log_loss: log_loss / n,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn write_trace_csv(path: &Path, trace: &TrainTrace) -> Result<(), CliError> {
    let mut file = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(file, "epoch,train_loss,validation_loss,penalty,learning_rate")?;
    for e in 0..trace.validation_loss.len() {
        writeln!(
            file,
            "{e},{},{},{},{}",
            trace.train_loss[e], trace.validation_loss[e], trace.penalty[e], trace.learning_rate[e]
        )?;
    }
    file.flush()?;
    Ok(())
}
