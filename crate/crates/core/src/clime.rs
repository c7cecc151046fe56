//! Constrained ℓ1-minimization precision estimation.
//!
//! Each column solves `min ‖ω‖₁ s.t. ‖Σⁿω − e_i‖∞ ≤ λ` as a linear program
//! over `ω = ω⁺ − ω⁻`. The column estimates are then symmetrized by keeping,
//! for each pair, the entry of smaller magnitude.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::lp::{self, LpStandardForm};

#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionEstimate {
    /// Symmetrized estimate.
    pub omega_hat: Matrix,
    /// Column solutions before symmetrization; column `i` is `ω̄_i`.
    pub columns: Matrix,
    pub lambda: f64,
    /// `max_i ‖Σⁿ ω̄_i − e_i‖∞`.
    pub feasibility_gap: f64,
}

/// The per-column program in inequality form:
/// `[Σ, −Σ; −Σ, Σ] [ω⁺; ω⁻] ≤ [λ + e_i; λ − e_i]`.
pub fn column_program(sigma_n: &Matrix, i: usize, lambda: f64) -> Result<LpStandardForm> {
    let p = sigma_n.rows();
    let mut a = Matrix::zeros(2 * p, 2 * p);
    for r in 0..p {
        for c in 0..p {
            let s = sigma_n[(r, c)];
            a[(r, c)] = s;
            a[(r, p + c)] = -s;
            a[(p + r, c)] = -s;
            a[(p + r, p + c)] = s;
        }
    }
    let mut b = vec![lambda; 2 * p];
    b[i] += 1.0;
    b[p + i] -= 1.0;
    LpStandardForm::from_inequalities(&vec![1.0; 2 * p], &a, &b)
}

pub fn clime_column(sigma_n: &Matrix, i: usize, lambda: f64, tol: f64) -> Result<Vec<f64>> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidConfig("lambda must be non-negative"));
    }
    if !sigma_n.is_square() {
        return Err(Error::DimensionMismatch {
            expected: sigma_n.rows(),
            found: sigma_n.cols(),
        });
    }
    if sigma_n.max_asymmetry() > linalg::SYMMETRY_TOL {
        return Err(Error::NotSymmetric(sigma_n.max_asymmetry()));
    }
    let p = sigma_n.rows();
    let sol = lp::solve_lp(&column_program(sigma_n, i, lambda)?, tol)?;
    Ok((0..p).map(|j| sol.x[j] - sol.x[p + j]).collect())
}

/// Smaller-magnitude symmetrization. On ties the `(j, i)` entry with `j > i`
/// wins, so the result is exactly symmetric.
pub fn symmetrize(columns: &Matrix) -> Matrix {
    let p = columns.rows();
    let mut out = columns.clone();
    for i in 0..p {
        for j in (i + 1)..p {
            let (a, b) = (columns[(i, j)], columns[(j, i)]);
            let v = if a.abs() < b.abs() { a } else { b };
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// `max_i ‖Σⁿ ω̄_i − e_i‖∞` over the columns of `columns`.
pub fn feasibility_gap(sigma_n: &Matrix, columns: &Matrix) -> f64 {
    let prod = sigma_n.matmul(columns).expect("square matrices of equal size");
    prod.max_abs_diff(&Matrix::identity(sigma_n.rows()))
}

/// Assembles an estimate from independently solved columns (`columns[i]` is
/// `ω̄_i`).
pub fn assemble(sigma_n: &Matrix, lambda: f64, columns: &[Vec<f64>]) -> PrecisionEstimate {
    let p = sigma_n.rows();
    let mut raw = Matrix::zeros(p, p);
    for (i, col) in columns.iter().enumerate() {
        for (r, &v) in col.iter().enumerate() {
            raw[(r, i)] = v;
        }
    }
    PrecisionEstimate {
        omega_hat: symmetrize(&raw),
        feasibility_gap: feasibility_gap(sigma_n, &raw),
        columns: raw,
        lambda,
    }
}

pub fn clime(sigma_n: &Matrix, lambda: f64, tol: f64) -> Result<PrecisionEstimate> {
    let columns = (0..sigma_n.rows())
        .map(|i| {
            clime_column(sigma_n, i, lambda, tol).map_err(|e| Error::Column {
                column: i,
                source: alloc::boxed::Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(sigma_n, lambda, &columns))
}

/// `0.5 · k · √(ln p / n)`.
pub fn default_lambda(n: usize, p: usize, k_hint: usize) -> f64 {
    0.5 * k_hint as f64 * libm::sqrt(libm::log(p as f64) / n as f64)
}

/// Heuristic blanket-size hint `⌈√p⌉` for data without a known generator.
pub fn default_k_hint(p: usize) -> usize {
    (libm::ceil(libm::sqrt(p as f64)) as usize).max(1)
}

/// Sufficient regularization level from the elementwise CLIME error bound:
/// `‖Ω*‖₁ √(C₁ / n · ln(4p² / δ))` with `C₁ = 3200 · max_i Σ*_{ii}²` and
/// `‖·‖₁` the induced (max column sum) norm. Needs the true moments, so it
/// serves as a diagnostic only.
pub fn theoretical_lambda(sigma_true: &Matrix, omega_true: &Matrix, n: usize, delta: f64) -> f64 {
    let p = omega_true.rows();
    let l1 = (0..p)
        .map(|j| (0..p).map(|i| omega_true[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let smax = sigma_true.diagonal().iter().fold(0.0f64, |m, v| m.max(v * v));
    let c1 = 3200.0 * smax;
    let pp = p as f64;
    l1 * libm::sqrt(c1 / n as f64 * libm::log(4.0 * pp * pp / delta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::DEFAULT_TOL;

    #[test]
    fn identity_lambda_zero() {
        let w = clime_column(&Matrix::identity(3), 1, 0.0, DEFAULT_TOL).unwrap();
        assert_eq!(w, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn identity_shrinks_to_boundary() {
        let w = clime_column(&Matrix::identity(3), 0, 0.3, DEFAULT_TOL).unwrap();
        assert!((w[0] - 0.7).abs() < 1e-12);
        assert_eq!(&w[1..], &[0.0, 0.0]);
    }

    #[test]
    fn chain_columns_are_exact() {
        let sigma = Matrix::from_rows(&[[1.0, 0.5], [0.5, 1.25]]).unwrap();
        for i in 0..2 {
            let w = clime_column(&sigma, i, 0.0, DEFAULT_TOL).unwrap();
            let mut e = vec![0.0; 2];
            e[i] = 1.0;
            let want = linalg::cholesky(&sigma).unwrap().solve(&e).unwrap();
            assert!(linalg::max_abs(&[w[0] - want[0], w[1] - want[1]]) < 1e-12);
        }
        let est = clime(&sigma, 0.0, DEFAULT_TOL).unwrap();
        let omega = Matrix::from_rows(&[[1.25, -0.5], [-0.5, 1.0]]).unwrap();
        assert!(est.omega_hat.max_abs_diff(&omega) < 1e-12);
        assert!(est.feasibility_gap < 1e-12);
    }

    #[test]
    fn symmetrization_rule() {
        // column 0 holds ω̄_{1,0}, column 1 holds ω̄_{0,1}
        let raw = Matrix::from_rows(&[[1.0, 0.4], [-0.3, 1.0]]).unwrap();
        let s = symmetrize(&raw);
        assert_eq!(s[(0, 1)], -0.3);
        assert_eq!(s[(1, 0)], -0.3);
        let tie = Matrix::from_rows(&[[1.0, 0.3], [-0.3, 1.0]]).unwrap();
        let s = symmetrize(&tie);
        assert_eq!(s[(0, 1)], -0.3);
        assert_eq!(s[(1, 0)], -0.3);
    }

    #[test]
    fn degenerate_programs_are_exact_at_lambda_zero() {
        for (idx, &(p, q)) in [(36, 0.1), (39, 0.05), (30, 0.2)].iter().enumerate() {
            let mut cfg = crate::synth::GeneratorConfig::new(p, q, 11 + idx as u64);
            cfg.max_rejections = 10_000;
            let g = crate::synth::generate_gbn(&cfg).unwrap();
            let m = crate::model::covariance_of(&g).unwrap();
            let est = clime(&m.sigma, 0.0, DEFAULT_TOL).unwrap();
            assert!(est.omega_hat.max_abs_diff(&m.omega) < 1e-10);
        }
    }

    #[test]
    fn rejects_negative_lambda() {
        assert!(clime_column(&Matrix::identity(2), 0, -0.1, DEFAULT_TOL).is_err());
    }

    #[test]
    fn lambda_rule() {
        assert!((default_lambda(3, 20, 4) - 0.5 * 4.0 * (20f64.ln() / 3.0).sqrt()).abs() < 1e-15);
        let n_real = 120.0 * 16.0 * 50f64.ln();
        let lam = 0.5 * 4.0 * (50f64.ln() / n_real).sqrt();
        assert!((lam - 2.0 / 1920f64.sqrt()).abs() < 1e-15);
        assert!((lam - 0.045644).abs() < 1e-6);
        let r = default_lambda(2000, 50, 3) / default_lambda(1000, 50, 3);
        assert!((r - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(default_k_hint(50), 8);
    }
}
