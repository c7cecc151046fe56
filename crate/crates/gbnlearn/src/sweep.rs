//! Seeded experiment sweeps over `(p, q, C, trial)` cells.
//!
//! The network of a trial depends only on `(master_seed, p, q, trial)` and
//! its data stream on the network seed, so every `C` (and every γ) reuses
//! the same network and a prefix of the same sample sequence. Adding `C` or
//! γ values never changes any other cell.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use gbn_core::learn::{self, LearnerConfig, Param};
use gbn_core::regression;
use gbn_core::synth::{self, GeneratorConfig, Purpose};
use gbn_core::{clime, Gbn};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentSpec, LambdaRule};
use crate::error::{CliError, Result};

/// Environment variable holding the worker-thread count for sweeps.
pub const THREADS_ENV: &str = "GBNLEARN_THREADS";

const DATA_TAG: u64 = 0x6461_7461;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub p: usize,
    pub q: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub gamma: Option<f64>,
    pub trial: usize,
    pub seed: u64,
    pub k: usize,
    pub n: usize,
    pub lambda: f64,
    pub exact: bool,
    pub precision: f64,
    pub recall: f64,
    /// Over true edges; only on exact recovery.
    pub max_weight_error: Option<f64>,
    /// `max |B̂ − B*|` over all entries.
    pub weight_matrix_error: Option<f64>,
    pub baseline_exact: Option<bool>,
    pub error: String,
    pub wall_ms: f64,
}

impl TrialRecord {
    fn failed(&self) -> bool {
        !self.error.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub p: usize,
    pub q: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub gamma: Option<f64>,
    pub trials: usize,
    pub failures: usize,
    pub recovery_probability: f64,
    pub mean_precision: f64,
    pub mean_recall: f64,
    pub mean_max_weight_error: f64,
    pub baseline_recovery_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepOutput {
    pub trials: Vec<TrialRecord>,
    pub gamma_trials: Vec<TrialRecord>,
}

/// `⌈C k² ln p⌉`, at least 2.
pub fn sample_size(c: f64, k: usize, p: usize) -> usize {
    let k = k as f64;
    ((c * k * k * (p as f64).ln()).ceil() as usize).max(2)
}

pub fn graph_seed(master: u64, p: usize, q: f64, trial: usize) -> u64 {
    synth::derive_seed(master, &[p as u64, q.to_bits(), trial as u64])
}

pub fn data_seed(graph_seed: u64) -> u64 {
    synth::derive_seed(graph_seed, &[DATA_TAG])
}

/// Solves CLIME columns in parallel; identical to the sequential estimator.
pub fn parallel_clime(
    sigma_n: &gbn_core::Matrix,
    lambda: f64,
    tol: f64,
) -> gbn_core::Result<clime::PrecisionEstimate> {
    let columns = (0..sigma_n.rows())
        .into_par_iter()
        .map(|i| {
            clime::clime_column(sigma_n, i, lambda, tol).map_err(|e| gbn_core::Error::Column {
                column: i,
                source: Box::new(e),
            })
        })
        .collect::<gbn_core::Result<Vec<_>>>()?;
    Ok(clime::assemble(sigma_n, lambda, &columns))
}

fn learner(spec: &ExperimentSpec, lambda: f64) -> LearnerConfig {
    LearnerConfig {
        lambda: Param::Fixed(lambda),
        support_threshold: spec.threshold.map_or(Param::Auto, Param::Fixed),
        strict_recompute: spec.strict_recompute,
        ..LearnerConfig::default()
    }
}

/// The screened network for one trial, with `k` (floored at 1).
pub fn trial_network(
    spec: &ExperimentSpec,
    p: usize,
    q: f64,
    trial: usize,
) -> gbn_core::Result<(Gbn, usize, u64)> {
    let seed = graph_seed(spec.master_seed, p, q, trial);
    let cfg = GeneratorConfig {
        p,
        q,
        weight_magnitude: spec.weight_magnitude,
        sigma2: spec.sigma2,
        min_precision_eig: spec.min_precision_eig,
        max_rejections: spec.max_rejections,
        seed,
    };
    let g = synth::generate_gbn(&cfg)?;
    let k = synth::max_markov_blanket_size(&g).max(1);
    Ok((g, k, seed))
}

pub fn run_trial(
    spec: &ExperimentSpec,
    p: usize,
    q: f64,
    c: f64,
    gamma: Option<f64>,
    trial: usize,
) -> TrialRecord {
    let start = Instant::now();
    let mut rec = TrialRecord {
        p,
        q,
        c,
        gamma,
        trial,
        seed: graph_seed(spec.master_seed, p, q, trial),
        k: 0,
        n: 0,
        lambda: f64::NAN,
        exact: false,
        precision: f64::NAN,
        recall: f64::NAN,
        max_weight_error: None,
        weight_matrix_error: None,
        baseline_exact: None,
        error: String::new(),
        wall_ms: 0.0,
    };
    if let Err(e) = fill_trial(spec, &mut rec) {
        rec.error = e.to_string();
    }
    rec.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    rec
}

fn fill_trial(spec: &ExperimentSpec, rec: &mut TrialRecord) -> gbn_core::Result<()> {
    let (g, k, seed) = trial_network(spec, rec.p, rec.q, rec.trial)?;
    let g = match rec.gamma {
        Some(gamma) => synth::perturb_variances(&g, gamma, &mut synth::stream(seed, Purpose::Variances))?,
        None => g,
    };
    rec.k = k;
    rec.n = sample_size(rec.c, k, rec.p);
    rec.lambda = match spec.lambda_rule {
        LambdaRule::Auto => clime::default_lambda(rec.n, rec.p, k),
        LambdaRule::Fixed => spec.lambda.unwrap_or(0.0),
    };
    let data = synth::sample_data(&g, rec.n, data_seed(seed));
    let cfg = learner(spec, rec.lambda);
    let cov = regression::empirical_covariance(&data.x)?;
    let estimate = clime::clime(&cov.sigma_n, rec.lambda, cfg.tol)?;
    let learned = learn::learn_from_estimate(&cov, &estimate, &cfg)?;
    let m = learn::structure_metrics(&g, &learned)?;
    rec.exact = m.exact;
    rec.precision = m.precision;
    rec.recall = m.recall;
    rec.max_weight_error = m.max_weight_error;
    rec.weight_matrix_error = Some(learned.b_hat.max_abs_diff(g.weights()));

    let baseline_order = learn::marginal_variance_order(&cov);
    let baseline = learn::learn_structure_from_order(
        &cov,
        &estimate.omega_hat,
        &baseline_order,
        learned.threshold,
        &cfg,
    )?;
    rec.baseline_exact = Some(baseline.edges == *g.dag().edges());
    Ok(())
}

/// Runs every cell; records come back sorted by `(p, q, C, γ, trial)`.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<SweepOutput> {
    spec.validate()?;
    let mut cells = Vec::new();
    for (&p, &q) in spec.p.iter().zip(&spec.q) {
        for &c in &spec.c {
            for t in 0..spec.trials {
                cells.push((p, q, c, None, t));
            }
        }
    }
    let mut gamma_cells = Vec::new();
    let gc = spec.gamma_c();
    for (&p, &q) in spec.p.iter().zip(&spec.q) {
        for &g in &spec.gamma {
            for t in 0..spec.trials {
                gamma_cells.push((p, q, gc, Some(g), t));
            }
        }
    }
    let run = |cells: Vec<(usize, f64, f64, Option<f64>, usize)>| {
        let mut out: Vec<TrialRecord> = cells
            .into_par_iter()
            .map(|(p, q, c, g, t)| run_trial(spec, p, q, c, g, t))
            .collect();
        out.sort_by(|a, b| {
            (a.p, a.q, a.c, a.gamma.unwrap_or(0.0), a.trial)
                .partial_cmp(&(b.p, b.q, b.c, b.gamma.unwrap_or(0.0), b.trial))
                .expect("finite keys")
        });
        out
    };
    let pool = thread_pool()?;
    Ok(pool.install(|| SweepOutput {
        trials: run(cells),
        gamma_trials: run(gamma_cells),
    }))
}

/// Pool sized by [`THREADS_ENV`] when set, otherwise rayon's default.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("{THREADS_ENV}: expected an integer, got {v:?}")))?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| CliError::Config(format!("{THREADS_ENV}: {e}")))
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

/// Aggregates records per `(p, q, C, γ)`. Failed trials count as
/// non-recoveries and are excluded from the means.
pub fn summarize(records: &[TrialRecord]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(usize, u64, u64, u64), Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        let key = (
            r.p,
            r.q.to_bits(),
            r.c.to_bits(),
            r.gamma.unwrap_or(0.0).to_bits(),
        );
        groups.entry(key).or_default().push(r);
    }
    let mut rows: Vec<SummaryRow> = groups
        .into_values()
        .map(|rs| {
            let ok: Vec<&&TrialRecord> = rs.iter().filter(|r| !r.failed()).collect();
            let total = rs.len() as f64;
            SummaryRow {
                p: rs[0].p,
                q: rs[0].q,
                c: rs[0].c,
                gamma: rs[0].gamma,
                trials: rs.len(),
                failures: rs.len() - ok.len(),
                recovery_probability: rs.iter().filter(|r| r.exact).count() as f64 / total,
                mean_precision: mean(ok.iter().map(|r| r.precision)),
                mean_recall: mean(ok.iter().map(|r| r.recall)),
                mean_max_weight_error: mean(ok.iter().filter_map(|r| r.weight_matrix_error)),
                baseline_recovery_probability: rs.iter().filter(|r| r.baseline_exact == Some(true)).count()
                    as f64
                    / total,
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        (a.p, a.q, a.c, a.gamma.unwrap_or(0.0))
            .partial_cmp(&(b.p, b.q, b.c, b.gamma.unwrap_or(0.0)))
            .expect("finite keys")
    });
    rows
}

pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Config(format!("csv buffer: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Writes `trials.csv` and `summary.csv`, plus `gamma_trials.csv` and
/// `gamma_summary.csv` when a γ sweep ran.
pub fn write_outputs(out: &SweepOutput, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let write = |name: &str, text: String| {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    };
    write("trials.csv", to_csv(&out.trials)?)?;
    write("summary.csv", to_csv(&summarize(&out.trials))?)?;
    if !out.gamma_trials.is_empty() {
        write("gamma_trials.csv", to_csv(&out.gamma_trials)?)?;
        write("gamma_summary.csv", to_csv(&summarize(&out.gamma_trials))?)?;
    }
    Ok(())
}
