//! Subcommand implementations. Each takes already-parsed options and
//! returns a [`CliError`] carrying the exit code on failure.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use gbn_core::learn::{self, LearnedGbn, LearnerConfig, Param};
use gbn_core::{regression, synth, Matrix, Stage};
use serde::Serialize;

use crate::config::{read_json, ExperimentSpec, GenerateConfig, LearnConfigFile};
use crate::error::{CliError, Result};
use crate::formats::{self, ModelFile};
use crate::sweep;

/// Paths written by [`generate`].
pub fn generate_paths(prefix: &Path) -> (PathBuf, PathBuf) {
    let mut data = prefix.as_os_str().to_owned();
    data.push(".csv");
    let mut model = prefix.as_os_str().to_owned();
    model.push(".model");
    (data.into(), model.into())
}

/// Draws a screened network and `n` samples, writing `<prefix>.model` and
/// `<prefix>.csv`.
pub fn generate(config: &Path, seed: Option<u64>, prefix: &Path) -> Result<(PathBuf, PathBuf)> {
    let mut cfg: GenerateConfig = read_json(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let mut g = synth::generate_gbn(&cfg.generator())?;
    if let Some(gamma) = cfg.gamma {
        g = synth::perturb_variances(&g, gamma, &mut synth::stream(cfg.seed, synth::Purpose::Variances))?;
    }
    let data = synth::sample_data(&g, cfg.n, sweep::data_seed(cfg.seed));
    let (data_path, model_path) = generate_paths(prefix);
    if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    formats::write_data(&data_path, &data.x)?;
    ModelFile::from_gbn(&g).write(&model_path)?;
    Ok((data_path, model_path))
}

/// Command-line overrides applied on top of a learn config file.
#[derive(Debug, Clone, Default)]
pub struct LearnOverrides {
    pub lambda: Option<f64>,
    pub threshold: Option<f64>,
    pub center: bool,
    pub strict_recompute: bool,
}

pub fn learner_config(config: Option<&Path>, o: &LearnOverrides) -> Result<LearnerConfig> {
    let mut file: LearnConfigFile = match config {
        Some(path) => read_json(path)?,
        None => LearnConfigFile::default(),
    };
    if o.lambda.is_some() {
        file.lambda = o.lambda;
    }
    if o.threshold.is_some() {
        file.threshold = o.threshold;
    }
    file.center |= o.center;
    file.strict_recompute |= o.strict_recompute;
    file.learner()
}

/// The full pipeline with CLIME columns solved in parallel.
pub fn fit(x: &Matrix, cfg: &LearnerConfig) -> Result<LearnedGbn> {
    cfg.validate()?;
    if x.rows() < 2 || x.cols() < 1 {
        return Err(CliError::Config(format!(
            "data: need at least 2 rows and 1 column, found {}x{}",
            x.rows(),
            x.cols()
        )));
    }
    let cov = if cfg.center {
        regression::empirical_covariance_centered(x)
    } else {
        regression::empirical_covariance(x)
    }
    .map_err(|e| e.at(Stage::Covariance))?;
    let lambda = match cfg.lambda {
        Param::Fixed(l) => l,
        Param::Auto => cfg.resolve_lambda(cov.n, cov.p()),
    };
    let estimate =
        sweep::parallel_clime(&cov.sigma_n, lambda, cfg.tol).map_err(|e| e.at(Stage::Precision))?;
    Ok(learn::learn_from_estimate(&cov, &estimate, cfg)?)
}

pub fn learn(data: &Path, cfg: &LearnerConfig, out: &Path) -> Result<LearnedGbn> {
    let x = formats::read_data(data)?;
    let learned = fit(&x, cfg)?;
    ModelFile::from_learned(&learned).write(out)?;
    Ok(learned)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub exact: bool,
    /// Over true edges; `null` unless the edge sets match.
    pub max_weight_error: Option<f64>,
}

/// Compares two model files. Neither needs to be acyclic.
pub fn evaluate(truth: &ModelFile, learned: &ModelFile) -> Result<EvalReport> {
    if truth.p != learned.p {
        return Err(CliError::Config(format!(
            "p: truth has {} nodes, learned model has {}",
            truth.p, learned.p
        )));
    }
    let edges = |m: &ModelFile| -> Result<BTreeSet<(usize, usize)>> {
        m.edges
            .iter()
            .map(|&(c, q, _)| {
                if c >= m.p || q >= m.p {
                    Err(CliError::Config(format!(
                        "edge ({c},{q}) has a label outside 0..{}",
                        m.p
                    )))
                } else {
                    Ok((c, q))
                }
            })
            .collect()
    };
    let (t, l) = (edges(truth)?, edges(learned)?);
    let (precision, recall) = learn::edge_metrics(&t, &l);
    let exact = t == l;
    let max_weight_error = exact.then(|| {
        let (bt, bl) = (truth.weights(), learned.weights());
        t.iter()
            .map(|&(c, q)| (bt[(c, q)] - bl[(c, q)]).abs())
            .fold(0.0, f64::max)
    });
    Ok(EvalReport {
        precision,
        recall,
        exact,
        max_weight_error,
    })
}

/// Writes the JSON report to `out`, or returns it for printing.
pub fn eval(truth: &Path, learned: &Path, out: Option<&Path>) -> Result<String> {
    let report = evaluate(&ModelFile::read(truth)?, &ModelFile::read(learned)?)?;
    let json = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    if let Some(path) = out {
        std::fs::write(path, &json).map_err(|e| CliError::io(path, e))?;
    }
    Ok(json)
}

pub fn run_sweep(spec: &Path, seed: Option<u64>, out: &Path) -> Result<sweep::SweepOutput> {
    let mut spec: ExperimentSpec = read_json(spec)?;
    if let Some(s) = seed {
        spec.master_seed = s;
    }
    let result = sweep::run_sweep(&spec)?;
    sweep::write_outputs(&result, out)?;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(p: usize, edges: &[(usize, usize, f64)]) -> ModelFile {
        ModelFile {
            p,
            sigma2: vec![1.0],
            edges: edges.to_vec(),
            extras: Default::default(),
        }
    }

    #[test]
    fn identical_models_are_perfect() {
        let m = model(3, &[(1, 0, 0.5), (2, 1, -0.5)]);
        let r = evaluate(&m, &m).unwrap();
        assert_eq!((r.precision, r.recall, r.exact), (1.0, 1.0, true));
        assert_eq!(r.max_weight_error, Some(0.0));
    }

    #[test]
    fn reversed_and_disjoint_edges() {
        let t = model(3, &[(1, 0, 0.5), (2, 1, 0.5)]);
        let r = evaluate(&t, &model(3, &[(0, 1, 0.5), (2, 1, 0.5)])).unwrap();
        assert_eq!((r.precision, r.recall, r.exact), (0.5, 0.5, false));
        assert_eq!(r.max_weight_error, None);
        let r = evaluate(&t, &model(3, &[(2, 0, 0.5)])).unwrap();
        assert_eq!((r.precision, r.recall), (0.0, 0.0));
    }

    #[test]
    fn mismatched_sizes_are_rejected() {
        let e = evaluate(&model(3, &[]), &model(4, &[])).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn generate_paths_append_extensions() {
        let (d, m) = generate_paths(Path::new("out/run.1"));
        assert_eq!(d, Path::new("out/run.1.csv"));
        assert_eq!(m, Path::new("out/run.1.model"));
    }
}
