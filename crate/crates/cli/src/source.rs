//! `--data` argument: a CSV path or a synthetic generator spec.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use nls_core::data::{gen_quadratic, gen_sin, load_csv, Dataset};

use crate::CliError;

/// Loads `spec`, which is one of
///
/// * `sin:N[:SEED]` — `y = sin x`, `x ~ U[0, 2π]`;
/// * `quadratic:N[:IRRELEVANT[:SEED]]` — the noisy two-feature quadratic with
///   extra irrelevant uniform features;
/// * a path to a CSV file with a header row. The target is `target`, or the
///   last column when none is given.
pub fn load(spec: &str, target: Option<&str>) -> Result<(Dataset, String), CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let number = |i: usize, what: &str, default: Option<u64>| -> Result<u64, CliError> {
        match (parts.get(i), default) {
            (Some(s), _) => s
                .parse()
                .map_err(|_| CliError::Config(format!("data: {what} `{s}` in `{spec}` is not a non-negative integer"))),
            (None, Some(d)) => Ok(d),
            (None, None) => Err(CliError::Config(format!("data: `{spec}` is missing {what}"))),
        }
    };
    match parts[0] {
        "sin" if parts.len() <= 3 => {
            let n = number(1, "N", None)? as usize;
            let seed = number(2, "SEED", Some(0))?;
            Ok((gen_sin(n, seed), spec.to_string()))
        }
        "quadratic" if parts.len() <= 4 => {
            let n = number(1, "N", None)? as usize;
            let irrelevant = number(2, "IRRELEVANT", Some(0))? as usize;
            let seed = number(3, "SEED", Some(0))?;
            Ok((gen_quadratic(n, irrelevant, seed), spec.to_string()))
        }
        _ => {
            let path = Path::new(spec);
            let target = match target {
                Some(t) => t.to_string(),
                None => last_header(path)?,
            };
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| spec.to_string());
            Ok((load_csv(path, &target)?, name))
        }
    }
}

fn last_header(path: &Path) -> Result<String, CliError> {
    let file = File::open(path).map_err(|e| CliError::Runtime(format!("cannot open {}: {e}", path.display())))?;
    let mut first = String::new();
    BufReader::new(file)
        .read_line(&mut first)
        .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
    let mut reader = csv_header(&first);
    reader
        .pop()
        .filter(|h| !h.is_empty())
        .ok_or_else(|| CliError::Runtime(format!("{} has no header row", path.display())))
}

fn csv_header(line: &str) -> Vec<String> {
    line.trim_end()
        .split(',')
        .map(|h| h.trim().trim_matches('"').to_string())
        .collect()
}
