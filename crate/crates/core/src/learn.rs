//! Order-based structure learning by terminal-vertex peeling.
//!
//! The learner estimates the precision matrix, reads Markov blankets from
//! its support, and repeatedly removes the node with the smallest ratio
//! `r_i = max_j |Ω̂_{i,j} / θ̂_{i,j}|` over its blanket. In an equal-variance
//! model a terminal vertex has `θ_{i,j} = −σ² Ω_{i,j}`, so its ratio is
//! `1/σ²` while every other node's ratio is `Ω_{i,i} > 1/σ²`. After each
//! removal the precision matrix is updated by a rank-1 Schur complement.
//! Finally each node is regressed on its blanket at the moment it was peeled,
//! which contains only nodes that precede it causally.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use crate::clime::{self, PrecisionEstimate};
use crate::error::{Error, Result, Stage};
use crate::linalg::Matrix;
use crate::model::{self, Dag, Gbn};
use crate::regression::{self, EmpiricalCovariance};

/// Floor of the automatic support threshold.
pub const MIN_SUPPORT_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Param {
    Auto,
    Fixed(f64),
}

/// Rule for the noise-variance estimate reported with a learned model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sigma2Rule {
    /// Mean over nodes of the residual variance of the final parent
    /// regressions (the marginal variance for roots).
    #[default]
    MeanResidual,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig {
    /// CLIME regularization; `Auto` uses `0.5 k √(ln p / n)`.
    pub lambda: Param,
    /// Magnitude above which precision entries and regression coefficients
    /// count as non-zero; `Auto` is `max(1e-8, 3λ)`.
    pub support_threshold: Param,
    /// Blanket-size hint for the automatic λ; `None` uses `⌈√p⌉`.
    pub k_hint: Option<usize>,
    pub ratio_epsilon: f64,
    /// Recompute every remaining ratio after each removal instead of only
    /// those in the removed node's blanket.
    pub strict_recompute: bool,
    /// Mean-center the data before forming the covariance.
    pub center: bool,
    pub sigma2_rule: Sigma2Rule,
    /// Simplex tolerance.
    pub tol: f64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            lambda: Param::Auto,
            support_threshold: Param::Auto,
            k_hint: None,
            ratio_epsilon: 1e-12,
            strict_recompute: false,
            center: false,
            sigma2_rule: Sigma2Rule::MeanResidual,
            tol: crate::lp::DEFAULT_TOL,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        if let Param::Fixed(l) = self.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::InvalidConfig("lambda must be non-negative"));
            }
        }
        if let Param::Fixed(t) = self.support_threshold {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::InvalidConfig("support threshold must be non-negative"));
            }
        }
        if self.k_hint == Some(0) {
            return Err(Error::InvalidConfig("k_hint must be at least 1"));
        }
        Ok(())
    }

    pub fn resolve_lambda(&self, n: usize, p: usize) -> f64 {
        match self.lambda {
            Param::Fixed(l) => l,
            Param::Auto => clime::default_lambda(
                n,
                p.max(2),
                self.k_hint.unwrap_or_else(|| clime::default_k_hint(p)),
            ),
        }
    }

    pub fn resolve_threshold(&self, lambda: f64) -> f64 {
        match self.support_threshold {
            Param::Fixed(t) => t,
            Param::Auto => MIN_SUPPORT_THRESHOLD.max(3.0 * lambda),
        }
    }
}

/// Nodes in the order they were peeled: the first entry was removed first
/// and is causally last.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalOrder(Vec<usize>);

impl CausalOrder {
    pub fn new(z: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; z.len()];
        for &v in &z {
            if v >= z.len() || seen[v] {
                return Err(Error::InvalidConfig("order is not a permutation"));
            }
            seen[v] = true;
        }
        Ok(CausalOrder(z))
    }

    pub fn peel_order(&self) -> &[usize] {
        &self.0
    }

    /// Reversed peel order: a topological order of the learned DAG.
    pub fn causal_sequence(&self) -> Vec<usize> {
        self.0.iter().rev().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioStep {
    pub node: usize,
    pub ratio: f64,
    /// Some `|θ̂|` in the ratio fell under `ratio_epsilon`.
    pub guard_hit: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnedGbn {
    /// `(child, parent)` pairs.
    pub edges: BTreeSet<(usize, usize)>,
    pub b_hat: Matrix,
    pub sigma2_hat: f64,
    pub order: CausalOrder,
    pub ratio_trace: Vec<RatioStep>,
    pub lambda: f64,
    pub threshold: f64,
}

impl LearnedGbn {
    pub fn p(&self) -> usize {
        self.b_hat.rows()
    }

    pub fn dag(&self) -> Dag {
        Dag::new(self.p(), self.edges.iter().copied()).expect("edges respect the learned order")
    }
}

/// `Ŝ_i = {j ≠ i : |Ω̂_{i,j}| > threshold}`.
pub fn estimate_markov_blankets(omega_hat: &Matrix, threshold: f64) -> Vec<Vec<usize>> {
    (0..omega_hat.rows())
        .map(|i| row_support(omega_hat, i, threshold))
        .collect()
}

fn row_support(om: &Matrix, i: usize, threshold: f64) -> Vec<usize> {
    (0..om.cols())
        .filter(|&j| j != i && om[(i, j)].abs() > threshold)
        .collect()
}

/// `max_{j ∈ s} |Ω̂_{i,j}| / max(|θ̂_{i,j}|, eps)`, zero for an empty `s`.
/// `omega_row` is indexed like `s`; the flag reports use of the guard.
pub fn node_ratio(omega_row: &[f64], theta: &[f64], eps: f64) -> (f64, bool) {
    let mut guard = false;
    let r = omega_row
        .iter()
        .zip(theta)
        .map(|(o, t)| {
            if t.abs() < eps {
                guard = true;
            }
            o.abs() / t.abs().max(eps)
        })
        .fold(0.0, f64::max);
    (r, guard)
}

/// Live precision matrix over the not-yet-removed nodes.
struct Peeler {
    omega: Matrix,
    /// Matrix coordinate -> original label.
    live: Vec<usize>,
}

impl Peeler {
    fn new(omega: &Matrix) -> Self {
        Peeler {
            omega: omega.clone(),
            live: (0..omega.rows()).collect(),
        }
    }

    fn pos(&self, node: usize) -> usize {
        self.live.iter().position(|&v| v == node).expect("node is live")
    }

    /// Blanket of `node` in original labels and the matching `Ω̂` entries.
    fn blanket(&self, node: usize, threshold: f64) -> (Vec<usize>, Vec<f64>) {
        let a = self.pos(node);
        let idx = row_support(&self.omega, a, threshold);
        let entries = idx.iter().map(|&b| self.omega[(a, b)]).collect();
        (idx.into_iter().map(|b| self.live[b]).collect(), entries)
    }

    fn remove(&mut self, node: usize, eps: f64) -> Result<()> {
        let a = self.pos(node);
        let d = self.omega[(a, a)];
        if !(d > eps) {
            return Err(Error::NonpositivePivot { node, value: d });
        }
        self.omega = model::marginalize_precision(&self.omega, a)?;
        self.live.remove(a);
        Ok(())
    }
}

/// Peels terminal vertices one at a time and returns the peel order with
/// the ratio that selected each removed node.
pub fn learn_order(
    cov: &EmpiricalCovariance,
    omega_hat: &Matrix,
    threshold: f64,
    cfg: &LearnerConfig,
) -> Result<(CausalOrder, Vec<RatioStep>)> {
    let p = omega_hat.rows();
    if cov.p() != p || !omega_hat.is_square() {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: cov.p(),
        });
    }
    let eps = cfg.ratio_epsilon;
    let mut peeler = Peeler::new(omega_hat);
    let mut blankets: Vec<Vec<usize>> = vec![Vec::new(); p];
    let mut ratio = vec![(0.0, false); p];
    let mut removed = vec![false; p];

    let update = |peeler: &Peeler, j: usize| -> Result<(Vec<usize>, (f64, bool))> {
        let (s, entries) = peeler.blanket(j, threshold);
        let theta = regression::ols_on_support(cov, j, &s)?;
        Ok((s, node_ratio(&entries, &theta, eps)))
    };

    for j in 0..p {
        let (s, r) = update(&peeler, j)?;
        blankets[j] = s;
        ratio[j] = r;
    }

    let mut z = Vec::with_capacity(p);
    let mut trace = Vec::with_capacity(p.saturating_sub(1));
    for _ in 1..p {
        let mut best: Option<usize> = None;
        for j in 0..p {
            if removed[j] {
                continue;
            }
            if best.is_none_or(|b| ratio[j].0 < ratio[b].0) {
                best = Some(j);
            }
        }
        let i = best.expect("at least two live nodes");
        trace.push(RatioStep {
            node: i,
            ratio: ratio[i].0,
            guard_hit: ratio[i].1,
        });
        z.push(i);
        removed[i] = true;
        peeler.remove(i, eps)?;

        let targets: Vec<usize> = if cfg.strict_recompute {
            peeler.live.clone()
        } else {
            blankets[i].iter().copied().filter(|&j| !removed[j]).collect()
        };
        for j in targets {
            let (s, r) = update(&peeler, j)?;
            blankets[j] = s;
            ratio[j] = r;
        }
    }
    z.extend(peeler.live.iter().copied());
    Ok((CausalOrder::new(z)?, trace))
}

/// Regresses every node on its estimated blanket at the moment it is peeled
/// (replaying the rank-1 updates of `omega_full` along `z`) and keeps
/// coefficients above `threshold` as parent weights.
pub fn learn_structure_from_order(
    cov: &EmpiricalCovariance,
    omega_full: &Matrix,
    z: &CausalOrder,
    threshold: f64,
    cfg: &LearnerConfig,
) -> Result<LearnedGbn> {
    let p = omega_full.rows();
    if z.len() != p || cov.p() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: z.len(),
        });
    }
    let mut peeler = Peeler::new(omega_full);
    let mut b_hat = Matrix::zeros(p, p);
    let mut edges = BTreeSet::new();
    let mut resid = 0.0;
    for (step, &i) in z.peel_order().iter().enumerate() {
        let (s, _) = peeler.blanket(i, threshold);
        let theta = regression::ols_on_support(cov, i, &s)?;
        resid += regression::residual_variance(cov, i, &s, &theta);
        for (&j, &t) in s.iter().zip(&theta) {
            if t.abs() > threshold {
                b_hat[(i, j)] = t;
                edges.insert((i, j));
            }
        }
        if step + 1 < p {
            peeler.remove(i, cfg.ratio_epsilon)?;
        }
    }
    let sigma2_hat = match cfg.sigma2_rule {
        Sigma2Rule::MeanResidual => resid / p.max(1) as f64,
    };
    Ok(LearnedGbn {
        edges,
        b_hat,
        sigma2_hat,
        order: z.clone(),
        ratio_trace: Vec::new(),
        lambda: 0.0,
        threshold,
    })
}

/// Order learning and parent regression on a given precision estimate.
pub fn learn_from_estimate(
    cov: &EmpiricalCovariance,
    estimate: &PrecisionEstimate,
    cfg: &LearnerConfig,
) -> Result<LearnedGbn> {
    let threshold = cfg.resolve_threshold(estimate.lambda);
    let (order, trace) =
        learn_order(cov, &estimate.omega_hat, threshold, cfg).map_err(|e| e.at(Stage::Order))?;
    let mut out = learn_structure_from_order(cov, &estimate.omega_hat, &order, threshold, cfg)
        .map_err(|e| e.at(Stage::Structure))?;
    out.ratio_trace = trace;
    out.lambda = estimate.lambda;
    Ok(out)
}

/// The full pipeline: covariance, CLIME, peeling, parent regressions.
pub fn learn_gbn(x: &Matrix, cfg: &LearnerConfig) -> Result<LearnedGbn> {
    cfg.validate()?;
    if x.rows() < 2 || x.cols() < 1 {
        return Err(Error::InvalidConfig("need at least 2 samples and 1 variable"));
    }
    let cov = if cfg.center {
        regression::empirical_covariance_centered(x)
    } else {
        regression::empirical_covariance(x)
    }
    .map_err(|e| e.at(Stage::Covariance))?;
    let lambda = cfg.resolve_lambda(cov.n, cov.p());
    let estimate = clime::clime(&cov.sigma_n, lambda, cfg.tol).map_err(|e| e.at(Stage::Precision))?;
    learn_from_estimate(&cov, &estimate, cfg)
}

/// Peel order that removes the largest marginal variance first (ties to
/// the lowest index).
pub fn marginal_variance_order(cov: &EmpiricalCovariance) -> CausalOrder {
    let mut z: Vec<usize> = (0..cov.p()).collect();
    z.sort_by(|&a, &b| {
        cov.sigma_n[(b, b)]
            .total_cmp(&cov.sigma_n[(a, a)])
            .then(a.cmp(&b))
    });
    CausalOrder(z)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureMetrics {
    pub precision: f64,
    pub recall: f64,
    pub exact: bool,
    /// `max |ŵ − w*|` over true edges, present only on exact recovery.
    pub max_weight_error: Option<f64>,
}

/// Directed-edge precision and recall; `0/0` counts as 1.
pub fn edge_metrics(truth: &BTreeSet<(usize, usize)>, predicted: &BTreeSet<(usize, usize)>) -> (f64, f64) {
    let hits = predicted.intersection(truth).count() as f64;
    let precision = if predicted.is_empty() {
        1.0
    } else {
        hits / predicted.len() as f64
    };
    let recall = if truth.is_empty() {
        1.0
    } else {
        hits / truth.len() as f64
    };
    (precision, recall)
}

pub fn structure_metrics(truth: &Gbn, learned: &LearnedGbn) -> Result<StructureMetrics> {
    if truth.p() != learned.p() {
        return Err(Error::DimensionMismatch {
            expected: truth.p(),
            found: learned.p(),
        });
    }
    let true_edges = truth.dag().edges();
    let (precision, recall) = edge_metrics(true_edges, &learned.edges);
    let exact = *true_edges == learned.edges;
    let max_weight_error = exact.then(|| {
        true_edges
            .iter()
            .map(|&(c, q)| (learned.b_hat[(c, q)] - truth.weights()[(c, q)]).abs())
            .fold(0.0, f64::max)
    });
    Ok(StructureMetrics {
        precision,
        recall,
        exact,
        max_weight_error,
    })
}
