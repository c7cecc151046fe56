//! Dense two-phase primal simplex with Bland's entering rule.
//!
//! Problems are given in standard form: minimize `cᵀx` subject to `A x = b`,
//! `x ≥ 0`. Rows that already carry a unit column (typically a slack) start
//! with it in the basis; every other row gets an artificial variable for
//! phase 1.
//!
//! Precision-estimation programs are highly degenerate, so the textbook
//! method is hardened in three ways: tiny entries are never used as
//! pivots, the tableau is periodically rebuilt from the original data by an
//! LU solve with the current basis (always before optimality is declared),
//! and the returned point is checked against the original constraints.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

/// Default tolerance on feasibility and reduced costs.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Entries smaller than this are never used as pivots.
const PIVOT_TOL: f64 = 1e-9;

/// Right-hand-side perturbations tried in turn, relative to `1 + max|b|`.
/// Degenerate vertices become non-degenerate under a small generic shift
/// of `b`; the final basis is then re-evaluated at the unperturbed `b`.
const PERTURBATIONS: [f64; 3] = [1e-6, 1e-9, 0.0];

/// Relative bound on `‖Ax − b‖∞` for a returned solution.
const ACCURACY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct LpStandardForm {
    pub objective: Vec<f64>,
    pub constraints: Matrix,
    pub rhs: Vec<f64>,
}

impl LpStandardForm {
    pub fn new(objective: Vec<f64>, constraints: Matrix, rhs: Vec<f64>) -> Result<Self> {
        if objective.len() != constraints.cols() {
            return Err(Error::DimensionMismatch {
                expected: constraints.cols(),
                found: objective.len(),
            });
        }
        if rhs.len() != constraints.rows() {
            return Err(Error::DimensionMismatch {
                expected: constraints.rows(),
                found: rhs.len(),
            });
        }
        if objective.iter().chain(&rhs).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(LpStandardForm {
            objective,
            constraints,
            rhs,
        })
    }

    /// `min cᵀx  s.t.  A x ≤ b, x ≥ 0`, with one slack appended per row.
    /// The first `c.len()` entries of a solution are the original variables.
    pub fn from_inequalities(c: &[f64], a: &Matrix, b: &[f64]) -> Result<Self> {
        let (m, n) = (a.rows(), a.cols());
        let mut full = Matrix::zeros(m, n + m);
        for i in 0..m {
            full.row_mut(i)[..n].copy_from_slice(a.row(i));
            full[(i, n + i)] = 1.0;
        }
        let mut obj = c.to_vec();
        obj.resize(n + m, 0.0);
        Self::new(obj, full, b.to_vec())
    }

    pub fn num_vars(&self) -> usize {
        self.constraints.cols()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.rows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

struct Tableau {
    m: usize,
    /// Structural plus artificial columns; the rhs is stored separately.
    width: usize,
    t: Vec<f64>,
    rhs: Vec<f64>,
    cost: Vec<f64>,
    cost_rhs: f64,
    basis: Vec<usize>,
    /// Sign-adjusted original rows (with artificial columns) and rhs, used to
    /// rebuild the tableau from the current basis.
    a0: Matrix,
    /// Non-zeros of each column of `a0`.
    a0_cols: Vec<Vec<(usize, f64)>>,
    b0: Vec<f64>,
    /// Cost vector of the current phase.
    c0: Vec<f64>,
    pivots_since_rebuild: usize,
}

impl Tableau {
    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.t[r * self.width + c]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let inv = 1.0 / self.at(r, c);
        for v in &mut self.t[r * w..(r + 1) * w] {
            *v *= inv;
        }
        self.rhs[r] *= inv;
        self.t[r * w + c] = 1.0;
        let (pivot_row, pivot_rhs) = (self.t[r * w..(r + 1) * w].to_vec(), self.rhs[r]);
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * w + c];
            if f == 0.0 {
                continue;
            }
            for (dst, src) in self.t[i * w..(i + 1) * w].iter_mut().zip(&pivot_row) {
                *dst -= f * src;
            }
            self.t[i * w + c] = 0.0;
            self.rhs[i] -= f * pivot_rhs;
        }
        let f = self.cost[c];
        if f != 0.0 {
            for (dst, src) in self.cost.iter_mut().zip(&pivot_row) {
                *dst -= f * src;
            }
            self.cost[c] = 0.0;
            self.cost_rhs -= f * pivot_rhs;
        }
        self.basis[r] = c;
        self.pivots_since_rebuild += 1;
    }

    /// Recomputes `B⁻¹A`, `B⁻¹b` and the reduced costs of `c0` from the
    /// original data. Keeps the current tableau if the basis matrix is
    /// numerically singular.
    fn rebuild(&mut self) {
        let (m, w) = (self.m, self.width);
        self.pivots_since_rebuild = 0;
        let Some(solver) = BasisSolver::new(&self.a0, &self.a0_cols, &self.basis) else {
            return;
        };
        let mut is_basic = vec![false; w];
        for (r, &j) in self.basis.iter().enumerate() {
            is_basic[j] = true;
            for i in 0..m {
                self.t[i * w + j] = if i == r { 1.0 } else { 0.0 };
            }
        }
        let mut y = vec![0.0; m];
        for j in (0..w).filter(|&j| !is_basic[j]) {
            y.iter_mut().for_each(|v| *v = 0.0);
            for &(i, v) in &self.a0_cols[j] {
                y[i] = v;
            }
            for (r, v) in solver.solve(&y).into_iter().enumerate() {
                self.t[r * w + j] = v;
            }
        }
        self.rhs = solver.solve(&self.b0);
        self.reprice();
    }

    /// Reduced costs `c0_j − c0_Bᵀ B⁻¹ a_j` from the current tableau.
    fn reprice(&mut self) {
        let w = self.width;
        self.cost.copy_from_slice(&self.c0);
        self.cost_rhs = 0.0;
        for r in 0..self.m {
            let f = self.c0[self.basis[r]];
            if f == 0.0 {
                continue;
            }
            for c in 0..w {
                self.cost[c] -= f * self.t[r * w + c];
            }
            self.cost_rhs -= f * self.rhs[r];
        }
        for &j in &self.basis {
            self.cost[j] = 0.0;
        }
    }

    /// Bland's ratio test: the minimum ratio, ties (to a relative `1e-12`)
    /// going to the lowest basic index. Entries at or below `PIVOT_TOL` are
    /// treated as round-off and never used as pivots.
    fn leaving_row(&self, enter: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.m {
            let a = self.at(i, enter);
            if a <= PIVOT_TOL {
                continue;
            }
            let ratio = self.rhs[i].max(0.0) / a;
            best = match best {
                Some((k, b)) => {
                    let slack = 1e-12 * b.max(1.0);
                    if ratio < b - slack || (ratio <= b + slack && self.basis[i] < self.basis[k]) {
                        Some((i, ratio))
                    } else {
                        Some((k, b))
                    }
                }
                None => Some((i, ratio)),
            };
        }
        best.map(|(i, _)| i)
    }

    /// Primal simplex over the first `allowed` columns with Bland's entering
    /// rule. Optimality is only declared on a freshly rebuilt tableau.
    fn optimize(&mut self, allowed: usize, tol: f64, iters: &mut usize, cap: usize) -> Result<()> {
        let rebuild_every = self.m.max(50);
        loop {
            if self.pivots_since_rebuild >= rebuild_every {
                self.rebuild();
            }
            let enter = (0..allowed).find(|&j| self.cost[j] < -tol);
            let Some(enter) = enter else {
                if self.pivots_since_rebuild == 0 {
                    return Ok(());
                }
                self.rebuild();
                continue;
            };
            let Some(r) = self.leaving_row(enter) else {
                return Err(Error::Unbounded);
            };
            *iters += 1;
            if *iters > cap {
                return Err(Error::IterationLimit(cap));
            }
            self.pivot(r, enter);
        }
    }

    fn set_phase_cost(&mut self, c0: Vec<f64>) {
        self.c0 = c0;
        self.reprice();
    }
}

/// Solves `B x = y` for a basis matrix whose columns are mostly single
/// non-zeros (slacks and artificials). Those columns are eliminated
/// directly; the remaining `k` columns need only a `k × k` LU factorization
/// on the rows the singletons do not cover. Falls back to a dense LU of `B`
/// when the singletons collide.
enum BasisSolver {
    Reduced {
        /// `(basis position, row, value)` for each singleton column.
        singles: Vec<(usize, usize, f64)>,
        /// Basis positions and rows of the reduced system.
        positions: Vec<usize>,
        rows: Vec<usize>,
        /// The reduced columns restricted to singleton rows, for
        /// back-substitution: `(basis position in positions, row, value)`.
        coupling: Vec<(usize, usize, f64)>,
        lu: Option<linalg::LuFactorization>,
    },
    Dense(linalg::LuFactorization),
}

impl BasisSolver {
    fn new(a0: &Matrix, cols: &[Vec<(usize, f64)>], basis: &[usize]) -> Option<Self> {
        let m = basis.len();
        let mut row_taken = vec![false; m];
        let mut singles = Vec::new();
        let mut positions = Vec::new();
        let mut collided = false;
        for (r, &j) in basis.iter().enumerate() {
            match *cols[j].as_slice() {
                [(i, v)] if !row_taken[i] => {
                    row_taken[i] = true;
                    singles.push((r, i, v));
                }
                [_] => collided = true,
                _ => positions.push(r),
            }
        }
        let rows: Vec<usize> = (0..m).filter(|&i| !row_taken[i]).collect();
        if collided || rows.len() != positions.len() {
            let all: Vec<usize> = (0..m).collect();
            return linalg::lu(&a0.select(&all, basis)).ok().map(BasisSolver::Dense);
        }
        let reduced_cols: Vec<usize> = positions.iter().map(|&r| basis[r]).collect();
        let lu = if rows.is_empty() {
            None
        } else {
            Some(linalg::lu(&a0.select(&rows, &reduced_cols)).ok()?)
        };
        let coupling = reduced_cols
            .iter()
            .enumerate()
            .flat_map(|(k, &j)| {
                cols[j]
                    .iter()
                    .filter(|&&(i, _)| row_taken[i])
                    .map(move |&(i, v)| (k, i, v))
            })
            .collect();
        Some(BasisSolver::Reduced {
            singles,
            positions,
            rows,
            coupling,
            lu,
        })
    }

    /// Coefficients indexed by basis position.
    fn solve(&self, y: &[f64]) -> Vec<f64> {
        match self {
            BasisSolver::Dense(f) => f.solve(y).expect("dimensions match"),
            BasisSolver::Reduced {
                singles,
                positions,
                rows,
                coupling,
                lu,
            } => {
                let mut x = vec![0.0; y.len()];
                let z = match lu {
                    Some(f) => {
                        let rhs: Vec<f64> = rows.iter().map(|&i| y[i]).collect();
                        f.solve(&rhs).expect("dimensions match")
                    }
                    None => Vec::new(),
                };
                let mut rest = y.to_vec();
                for &(k, i, v) in coupling {
                    rest[i] -= v * z[k];
                }
                for (&r, &zk) in positions.iter().zip(&z) {
                    x[r] = zk;
                }
                for &(r, i, v) in singles {
                    x[r] = rest[i] / v;
                }
                x
            }
        }
    }
}

/// Solves `min cᵀx s.t. Ax = b, x ≥ 0`. `tol` bounds reduced costs at
/// optimality and the phase-1 infeasibility accepted as zero.
pub fn solve_lp(lp: &LpStandardForm, tol: f64) -> Result<LpSolution> {
    let mut last = Error::Infeasible;
    for eps in PERTURBATIONS {
        match solve_perturbed(lp, tol, eps) {
            Ok(sol) => return Ok(sol),
            Err(e) => last = e,
        }
    }
    Err(last)
}

/// Deterministic shift in `[0.5, 1)` for row `i`.
fn shift(i: usize) -> f64 {
    let h = (i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let h = (h ^ (h >> 31)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    0.5 + 0.5 * ((h >> 11) as f64 / (1u64 << 53) as f64)
}

/// One simplex solve with `b` shifted by `eps (1 + max|b|)` per row. The
/// optimal basis is re-evaluated at the original `b` and accepted only if
/// it stays primal feasible there.
fn solve_perturbed(lp: &LpStandardForm, tol: f64, eps: f64) -> Result<LpSolution> {
    let (m, n) = (lp.num_constraints(), lp.num_vars());
    let a = &lp.constraints;
    let scale = 1.0 + linalg::max_abs(&lp.rhs);
    let rhs: Vec<f64> = (0..m).map(|i| lp.rhs[i] + eps * scale * shift(i)).collect();

    // Flip rows so that b ≥ 0.
    let sign: Vec<f64> = rhs.iter().map(|&b| if b < 0.0 { -1.0 } else { 1.0 }).collect();

    // A column that is +1 in exactly one (sign-adjusted) row and zero
    // elsewhere can start in the basis for that row.
    let mut basis: Vec<Option<usize>> = vec![None; m];
    for j in 0..n {
        let mut hit = None;
        let mut ok = true;
        for i in 0..m {
            let v = sign[i] * a[(i, j)];
            if v == 0.0 {
                continue;
            }
            if v == 1.0 && hit.is_none() {
                hit = Some(i);
            } else {
                ok = false;
                break;
            }
        }
        if let (true, Some(i)) = (ok, hit) {
            if basis[i].is_none() {
                basis[i] = Some(j);
            }
        }
    }
    let artificial_rows: Vec<usize> = (0..m).filter(|&i| basis[i].is_none()).collect();
    let width = n + artificial_rows.len();

    let mut a0 = Matrix::zeros(m, width);
    for i in 0..m {
        for j in 0..n {
            a0[(i, j)] = sign[i] * a[(i, j)];
        }
    }
    let mut full_basis = vec![0usize; m];
    for (k, &i) in artificial_rows.iter().enumerate() {
        a0[(i, n + k)] = 1.0;
        full_basis[i] = n + k;
    }
    for i in 0..m {
        if let Some(j) = basis[i] {
            full_basis[i] = j;
        }
    }
    let b0: Vec<f64> = (0..m).map(|i| sign[i] * rhs[i]).collect();

    let a0_cols = (0..width)
        .map(|j| {
            (0..m)
                .map(|i| (i, a0[(i, j)]))
                .filter(|&(_, v)| v != 0.0)
                .collect()
        })
        .collect();
    let mut tab = Tableau {
        m,
        width,
        t: a0.as_slice().to_vec(),
        rhs: b0.clone(),
        cost: vec![0.0; width],
        cost_rhs: 0.0,
        basis: full_basis,
        a0,
        a0_cols,
        b0,
        c0: vec![0.0; width],
        pivots_since_rebuild: 0,
    };
    let cap = 50 * (n + m);
    let mut iters = 0;

    if !artificial_rows.is_empty() {
        // Phase 1: minimize the sum of artificials.
        let mut c1 = vec![0.0; width];
        c1[n..].iter_mut().for_each(|v| *v = 1.0);
        tab.set_phase_cost(c1);
        tab.optimize(width, tol, &mut iters, cap)?;
        if -tab.cost_rhs > tol.max(1e-12) * scale {
            return Err(Error::Infeasible);
        }
        // Drive zero-valued artificials out of the basis where a structural
        // column can replace them; rows where none can are redundant.
        for r in 0..m {
            if tab.basis[r] < n {
                continue;
            }
            let best = (0..n)
                .filter(|j| !tab.basis.contains(j))
                .max_by(|&x, &y| tab.at(r, x).abs().total_cmp(&tab.at(r, y).abs()));
            if let Some(j) = best.filter(|&j| tab.at(r, j).abs() > PIVOT_TOL) {
                tab.pivot(r, j);
            }
        }
        if tab.pivots_since_rebuild > 0 {
            tab.rebuild();
        }
    }

    // Phase 2 over the structural columns only.
    let mut c2 = vec![0.0; width];
    c2[..n].copy_from_slice(&lp.objective);
    tab.set_phase_cost(c2);
    tab.optimize(n, tol, &mut iters, cap)?;

    if eps > 0.0 {
        tab.b0 = (0..m).map(|i| sign[i] * lp.rhs[i]).collect();
        tab.rebuild();
    }
    let mut x = vec![0.0; n];
    for r in 0..m {
        if tab.basis[r] < n {
            x[tab.basis[r]] = tab.rhs[r].max(0.0);
        }
    }
    let residual = primal_residual(lp, &x);
    if residual > ACCURACY_TOL * scale {
        return Err(Error::Inaccurate(residual));
    }
    let objective = linalg::dot(&lp.objective, &x);
    Ok(LpSolution {
        x,
        objective,
        iterations: iters,
    })
}

/// `‖Ax − b‖∞`.
fn primal_residual(lp: &LpStandardForm, x: &[f64]) -> f64 {
    (0..lp.num_constraints())
        .map(|i| (linalg::dot(lp.constraints.row(i), x) - lp.rhs[i]).abs())
        .fold(0.0, f64::max)
}
