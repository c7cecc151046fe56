//! Population-level Gaussian Bayesian network machinery.
//!
//! A [`Gbn`] is the linear SEM `X = B X + N` with `N ~ Normal(0, diag(σ²))`.
//! Row `i` of `B` holds the weights of node `i`'s parents, so `B[(i, j)] != 0`
//! exactly when `j -> i` is an edge.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

/// Effective influences with magnitude at or below this are treated as zero.
pub const ZERO_TOL: f64 = 1e-12;

/// Directed acyclic graph on nodes `0..p`; an edge `(child, parent)` means
/// `parent -> child`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    p: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Dag {
    pub fn empty(p: usize) -> Self {
        Dag {
            p,
            edges: BTreeSet::new(),
        }
    }

    pub fn new(p: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let edges: BTreeSet<_> = edges.into_iter().collect();
        for &(c, q) in &edges {
            if c >= p || q >= p {
                return Err(Error::InvalidGraph("node label out of range"));
            }
            if c == q {
                return Err(Error::InvalidGraph("self-loop"));
            }
        }
        let dag = Dag { p, edges };
        dag.topological_order()?;
        Ok(dag)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn has_edge(&self, child: usize, parent: usize) -> bool {
        self.edges.contains(&(child, parent))
    }

    pub fn parents(&self, i: usize) -> Vec<usize> {
        self.edges.range((i, 0)..(i + 1, 0)).map(|&(_, q)| q).collect()
    }

    pub fn children(&self, i: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter(|&&(_, q)| q == i)
            .map(|&(c, _)| c)
            .collect()
    }

    pub fn is_terminal(&self, i: usize) -> bool {
        !self.edges.iter().any(|&(_, q)| q == i)
    }

    /// Kahn's algorithm, always taking the smallest available node.
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        let mut indeg = vec![0usize; self.p];
        let mut kids = vec![Vec::new(); self.p];
        for &(c, q) in &self.edges {
            indeg[c] += 1;
            kids[q].push(c);
        }
        let mut ready: BTreeSet<usize> = (0..self.p).filter(|&i| indeg[i] == 0).collect();
        let mut order = Vec::with_capacity(self.p);
        while let Some(i) = ready.pop_first() {
            order.push(i);
            for &c in &kids[i] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        if order.len() != self.p {
            return Err(Error::InvalidGraph("graph contains a cycle"));
        }
        Ok(order)
    }

    /// True when every edge points from an earlier to a later entry of
    /// `order` (a permutation of `0..p`).
    pub fn respects_order(&self, order: &[usize]) -> bool {
        if order.len() != self.p {
            return false;
        }
        let mut pos = vec![usize::MAX; self.p];
        for (k, &v) in order.iter().enumerate() {
            if v >= self.p || pos[v] != usize::MAX {
                return false;
            }
            pos[v] = k;
        }
        self.edges.iter().all(|&(c, q)| pos[q] < pos[c])
    }

    /// Graph-theoretic Markov blanket: parents, children and co-parents.
    pub fn structural_blanket(&self, i: usize) -> BTreeSet<usize> {
        let mut s: BTreeSet<usize> = self.parents(i).into_iter().collect();
        for c in self.children(i) {
            s.insert(c);
            s.extend(self.parents(c));
        }
        s.remove(&i);
        s
    }

    /// Induced subgraph on `keep` (sorted ascending), relabeled `0..keep.len()`.
    pub fn induced(&self, keep: &[usize]) -> Dag {
        let mut map = vec![usize::MAX; self.p];
        for (k, &v) in keep.iter().enumerate() {
            map[v] = k;
        }
        let edges = self
            .edges
            .iter()
            .filter(|&&(c, q)| map[c] != usize::MAX && map[q] != usize::MAX)
            .map(|&(c, q)| (map[c], map[q]))
            .collect();
        Dag { p: keep.len(), edges }
    }
}

/// A Gaussian Bayesian network: DAG, weight matrix `B`, and per-node noise
/// variances.
#[derive(Debug, Clone, PartialEq)]
pub struct Gbn {
    dag: Dag,
    b: Matrix,
    sigma2: Vec<f64>,
}

impl Gbn {
    /// Validates that the support of `b` is exactly the edge set and that
    /// every variance is positive.
    pub fn new(dag: Dag, b: Matrix, sigma2: Vec<f64>) -> Result<Self> {
        let p = dag.p();
        if b.rows() != p || b.cols() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: b.rows(),
            });
        }
        if sigma2.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: sigma2.len(),
            });
        }
        if sigma2.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidConfig("noise variances must be positive"));
        }
        for i in 0..p {
            for j in 0..p {
                if (b[(i, j)] != 0.0) != dag.has_edge(i, j) {
                    return Err(Error::InvalidGraph("weight support does not match the edge set"));
                }
            }
        }
        Ok(Gbn { dag, b, sigma2 })
    }

    /// Builds a network from `(child, parent, weight)` triples.
    pub fn from_weights(p: usize, weights: &[(usize, usize, f64)], sigma2: Vec<f64>) -> Result<Self> {
        let dag = Dag::new(p, weights.iter().map(|&(c, q, _)| (c, q)))?;
        let mut b = Matrix::zeros(p, p);
        for &(c, q, w) in weights {
            b[(c, q)] = w;
        }
        Gbn::new(dag, b, sigma2)
    }

    pub fn equal_variance(p: usize, weights: &[(usize, usize, f64)], sigma2: f64) -> Result<Self> {
        Self::from_weights(p, weights, vec![sigma2; p])
    }

    pub fn p(&self) -> usize {
        self.dag.p()
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn weights(&self) -> &Matrix {
        &self.b
    }

    pub fn sigma2(&self) -> &[f64] {
        &self.sigma2
    }

    pub fn is_equal_variance(&self) -> bool {
        self.sigma2.windows(2).all(|w| w[0] == w[1])
    }

    /// The shared noise variance, or [`Error::UnequalVariance`].
    pub fn common_variance(&self) -> Result<f64> {
        if self.is_equal_variance() {
            Ok(self.sigma2.first().copied().unwrap_or(1.0))
        } else {
            Err(Error::UnequalVariance)
        }
    }

    /// `(child, parent, weight)` for every edge, in edge order.
    pub fn weighted_edges(&self) -> Vec<(usize, usize, f64)> {
        self.dag
            .edges()
            .iter()
            .map(|&(c, q)| (c, q, self.b[(c, q)]))
            .collect()
    }
}

/// Population covariance `Σ` and precision `Ω` of a [`Gbn`].
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationMoments {
    pub sigma: Matrix,
    pub omega: Matrix,
}

/// `Σ = (I − B)⁻¹ D (I − B)⁻ᵀ` and `Ω = (I − B)ᵀ D⁻¹ (I − B)` with
/// `D = diag(σ²)`. `Ω` is formed directly rather than by inverting `Σ`.
pub fn covariance_of(g: &Gbn) -> Result<PopulationMoments> {
    let p = g.p();
    let mut a = Matrix::identity(p);
    for i in 0..p {
        for j in 0..p {
            a[(i, j)] -= g.b[(i, j)];
        }
    }
    let mut a_inv = Matrix::zeros(p, p);
    let mut e = vec![0.0; p];
    for j in 0..p {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[j] = 1.0;
        let col = linalg::solve_dense(&a, &e).map_err(|_| Error::SingularModel)?;
        for i in 0..p {
            a_inv[(i, j)] = col[i];
        }
    }
    let mut sigma = Matrix::zeros(p, p);
    let mut omega = Matrix::zeros(p, p);
    for i in 0..p {
        for j in i..p {
            let mut s = 0.0;
            let mut o = 0.0;
            for k in 0..p {
                s += a_inv[(i, k)] * g.sigma2[k] * a_inv[(j, k)];
                o += a[(k, i)] * a[(k, j)] / g.sigma2[k];
            }
            sigma[(i, j)] = s;
            sigma[(j, i)] = s;
            omega[(i, j)] = o;
            omega[(j, i)] = o;
        }
    }
    Ok(PopulationMoments { sigma, omega })
}

pub fn precision_of(g: &Gbn) -> Result<Matrix> {
    Ok(covariance_of(g)?.omega)
}

/// `w̃_{i,j} = B_{i,j} + B_{j,i} − B_{*,i}ᵀ B_{*,j}`.
pub fn effective_influence(b: &Matrix, i: usize, j: usize) -> f64 {
    let shared: f64 = (0..b.rows()).map(|k| b[(k, i)] * b[(k, j)]).sum();
    b[(i, j)] + b[(j, i)] - shared
}

/// Nodes with non-zero effective influence on `i`.
pub fn markov_blanket(g: &Gbn, i: usize) -> BTreeSet<usize> {
    (0..g.p())
        .filter(|&j| j != i && effective_influence(&g.b, i, j).abs() > ZERO_TOL)
        .collect()
}

pub fn others(p: usize, i: usize) -> Vec<usize> {
    (0..p).filter(|&j| j != i).collect()
}

/// Regression coefficients of `X_i` on `X_{−i}`: `θ_{ij} = −Ω_{i,j} / Ω_{i,i}`,
/// ordered by ascending `j`.
pub fn population_theta(moments: &PopulationMoments, i: usize) -> Vec<f64> {
    let om = &moments.omega;
    let d = om[(i, i)];
    others(om.rows(), i)
        .into_iter()
        .map(|j| -om[(i, j)] / d)
        .collect()
}

/// Terminal-vertex test `θ_{ij} = −σ² Ω_{i,j}` for all `j ≠ i`, to `1e-9`.
pub fn is_terminal_population(moments: &PopulationMoments, sigma2: f64, i: usize) -> bool {
    let om = &moments.omega;
    population_theta(moments, i)
        .into_iter()
        .zip(others(om.rows(), i))
        .all(|(t, j)| (t + sigma2 * om[(i, j)]).abs() <= 1e-9)
}

/// Precision of `X_{−i}`: the Schur complement
/// `Ω − Ω_{*,i} Ω_{i,*} / Ω_{i,i}` with row and column `i` dropped.
pub fn marginalize_precision(omega: &Matrix, i: usize) -> Result<Matrix> {
    let d = omega[(i, i)];
    if !(d > 0.0) {
        return Err(Error::NonpositivePivot { node: i, value: d });
    }
    let keep = others(omega.rows(), i);
    let mut out = omega.select(&keep, &keep);
    for (a, &r) in keep.iter().enumerate() {
        let f = omega[(r, i)] / d;
        if f == 0.0 {
            continue;
        }
        for (b, &c) in keep.iter().enumerate() {
            out[(a, b)] -= f * omega[(i, c)];
        }
    }
    Ok(out)
}

/// Removes terminal node `i`, relabeling the rest to `0..p−1`. The second
/// value maps old labels to new ones (`None` for `i`).
pub fn remove_terminal(g: &Gbn, i: usize) -> Result<(Gbn, Vec<Option<usize>>)> {
    if !g.dag.is_terminal(i) {
        return Err(Error::NotTerminal(i));
    }
    let keep = others(g.p(), i);
    let map: Vec<Option<usize>> = (0..g.p())
        .map(|v| match v.cmp(&i) {
            core::cmp::Ordering::Less => Some(v),
            core::cmp::Ordering::Equal => None,
            core::cmp::Ordering::Greater => Some(v - 1),
        })
        .collect();
    let reduced = Gbn {
        dag: g.dag.induced(&keep),
        b: g.b.select(&keep, &keep),
        sigma2: keep.iter().map(|&v| g.sigma2[v]).collect(),
    };
    Ok((reduced, map))
}

/// `λ_min(Σ) ≥ floor`.
pub fn check_nonsingular(moments: &PopulationMoments, floor: f64) -> Result<bool> {
    Ok(linalg::min_eigenvalue(&moments.sigma, 1e-9)? >= floor)
}

/// `Cov(R_i, X_{−i})` for the least-squares residual `R_i` of `X_i` on
/// `X_{−i}`. It is identically zero for every Gaussian `Σ`, so residual
/// independence cannot single out terminal vertices in this model class.
pub fn residual_covariance(sigma: &Matrix, i: usize) -> Result<Vec<f64>> {
    let rest = others(sigma.rows(), i);
    let a = sigma.select(&rest, &rest);
    let b: Vec<f64> = rest.iter().map(|&j| sigma[(j, i)]).collect();
    if rest.is_empty() {
        return Ok(Vec::new());
    }
    let beta = linalg::cholesky(&a)?.solve(&b)?;
    let fitted = a.matvec(&beta)?;
    Ok(b.iter().zip(fitted).map(|(x, y)| x - y).collect())
}
