//! Seeded generation of random networks and data sets.
//!
//! All randomness comes from ChaCha8 streams. A seed expands into independent
//! substreams per [`Purpose`], so changing the number of samples never
//! changes the graph drawn for the same seed. Gaussian noise uses the
//! ziggurat sampler of `rand_distr::StandardNormal`, scaled by `√σ²_i`.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::model::{self, Dag, Gbn};

/// Substream selector for [`stream`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Dag = 1,
    Weights = 2,
    Data = 3,
    Variances = 4,
    Orderings = 5,
}

pub fn stream(seed: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose as u64);
    rng
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic seed for a cell of an experiment, e.g.
/// `derive_seed(master, &[p, q_bits, trial])`.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(mix64(master), |h, &x| mix64(h ^ mix64(x)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub p: usize,
    /// Probability of an edge between each unordered pair of nodes.
    pub q: f64,
    pub weight_magnitude: f64,
    pub sigma2: f64,
    /// Screen: minimum eigenvalue of the precision matrix.
    pub min_precision_eig: f64,
    pub max_rejections: usize,
    pub seed: u64,
}

impl GeneratorConfig {
    pub fn new(p: usize, q: f64, seed: u64) -> Self {
        GeneratorConfig {
            p,
            q,
            weight_magnitude: 0.5,
            sigma2: 0.8,
            min_precision_eig: 0.05,
            max_rejections: 1000,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q > 0.0 && self.q <= 1.0) {
            return Err(Error::InvalidConfig("q must lie in (0, 1]"));
        }
        if !(self.weight_magnitude > 0.0 && self.weight_magnitude.is_finite()) {
            return Err(Error::InvalidConfig("weight_magnitude must be positive"));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::InvalidConfig("sigma2 must be positive"));
        }
        if self.p == 0 {
            return Err(Error::InvalidConfig("p must be at least 1"));
        }
        Ok(())
    }
}

/// A data matrix (one sample per row) with the network that generated it.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Matrix,
    pub gbn: Gbn,
    pub seed: u64,
}

/// Erdős–Rényi skeleton over unordered pairs, oriented along a random
/// permutation of the nodes.
pub fn sample_dag<R: Rng + ?Sized>(cfg: &GeneratorConfig, rng: &mut R) -> Dag {
    let p = cfg.p;
    let mut perm: Vec<usize> = (0..p).collect();
    perm.shuffle(rng);
    let mut edges = Vec::new();
    for a in 0..p {
        for b in (a + 1)..p {
            if rng.random_bool(cfg.q) {
                edges.push((perm[b], perm[a]));
            }
        }
    }
    Dag::new(p, edges).expect("edges follow a permutation")
}

/// Weights `±weight_magnitude` with equal probability, one draw per edge in
/// edge order.
pub fn sample_weights<R: Rng + ?Sized>(dag: &Dag, cfg: &GeneratorConfig, rng: &mut R) -> Gbn {
    let p = dag.p();
    let mut b = Matrix::zeros(p, p);
    for &(c, q) in dag.edges() {
        b[(c, q)] = if rng.random_bool(0.5) {
            cfg.weight_magnitude
        } else {
            -cfg.weight_magnitude
        };
    }
    Gbn::new(dag.clone(), b, vec![cfg.sigma2; p]).expect("support matches by construction")
}

/// Draws networks until one has `λ_min(Ω) ≥ cfg.min_precision_eig`.
pub fn sample_gbn_screened<R: Rng + ?Sized>(cfg: &GeneratorConfig, rng: &mut R) -> Result<Gbn> {
    cfg.validate()?;
    for _ in 0..cfg.max_rejections.max(1) {
        let dag = sample_dag(cfg, rng);
        let g = sample_weights(&dag, cfg, rng);
        let omega = model::precision_of(&g)?;
        if linalg::min_eigenvalue(&omega, 1e-9)? >= cfg.min_precision_eig {
            return Ok(g);
        }
    }
    Err(Error::ScreeningExhausted {
        attempts: cfg.max_rejections.max(1),
    })
}

/// Screened network drawn from the graph/weight substream of `cfg.seed`.
pub fn generate_gbn(cfg: &GeneratorConfig) -> Result<Gbn> {
    sample_gbn_screened(cfg, &mut stream(cfg.seed, Purpose::Dag))
}

/// Ancestral sampling of `n` rows from `g` using the data substream of `seed`.
///
/// Rows are produced one after another from a single stream, so the first
/// `m` rows for a given seed do not depend on `n`. Likewise the standard
/// normal draws do not depend on the variances.
pub fn sample_data(g: &Gbn, n: usize, seed: u64) -> Dataset {
    let p = g.p();
    let order = g.dag().topological_order().expect("valid DAG");
    let parents: Vec<Vec<usize>> = (0..p).map(|i| g.dag().parents(i)).collect();
    let sd: Vec<f64> = g.sigma2().iter().map(|&s| libm::sqrt(s)).collect();
    let b = g.weights();
    let mut rng = stream(seed, Purpose::Data);
    let mut x = Matrix::zeros(n, p);
    for r in 0..n {
        let row = x.row_mut(r);
        for &i in &order {
            let z: f64 = StandardNormal.sample(&mut rng);
            let mean: f64 = parents[i].iter().map(|&j| b[(i, j)] * row[j]).sum();
            row[i] = mean + sd[i] * z;
        }
    }
    Dataset {
        x,
        gbn: g.clone(),
        seed,
    }
}

/// Sets each node's noise variance to one of `{1, 1 − γ, 1 + γ}` with equal
/// probability.
pub fn perturb_variances<R: Rng + ?Sized>(g: &Gbn, gamma: f64, rng: &mut R) -> Result<Gbn> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::InvalidConfig("gamma must lie in [0, 1)"));
    }
    let choices = [1.0, 1.0 - gamma, 1.0 + gamma];
    let sigma2 = (0..g.p()).map(|_| choices[rng.random_range(0..3)]).collect();
    Gbn::new(g.dag().clone(), g.weights().clone(), sigma2)
}

pub fn max_markov_blanket_size(g: &Gbn) -> usize {
    (0..g.p())
        .map(|i| model::markov_blanket(g, i).len())
        .max()
        .unwrap_or(0)
}
