//! Empirical covariance and least squares restricted to a node set.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

/// `Σⁿ = XᵀX / n` together with the sample count.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCovariance {
    pub sigma_n: Matrix,
    pub n: usize,
}

impl EmpiricalCovariance {
    /// Wraps a known covariance (e.g. a population `Σ`) as if estimated
    /// from `n` samples.
    pub fn from_matrix(sigma_n: Matrix, n: usize) -> Self {
        EmpiricalCovariance { sigma_n, n }
    }

    pub fn p(&self) -> usize {
        self.sigma_n.rows()
    }

    /// `c² Σⁿ`: the covariance of the data scaled by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        EmpiricalCovariance {
            sigma_n: self.sigma_n.scale(c * c),
            n: self.n,
        }
    }
}

/// Uncentered second moments `XᵀX / n`; the model is zero-mean.
pub fn empirical_covariance(x: &Matrix) -> Result<EmpiricalCovariance> {
    second_moments(x, None)
}

/// Covariance after subtracting column means.
pub fn empirical_covariance_centered(x: &Matrix) -> Result<EmpiricalCovariance> {
    let n = x.rows();
    if n == 0 {
        return Err(Error::InvalidConfig("data matrix has no rows"));
    }
    let p = x.cols();
    let mut mean = alloc::vec![0.0; p];
    for r in 0..n {
        for (m, v) in mean.iter_mut().zip(x.row(r)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    second_moments(x, Some(&mean))
}

fn second_moments(x: &Matrix, mean: Option<&[f64]>) -> Result<EmpiricalCovariance> {
    let (n, p) = (x.rows(), x.cols());
    if n == 0 {
        return Err(Error::InvalidConfig("data matrix has no rows"));
    }
    let mut acc = Matrix::zeros(p, p);
    let mut row = alloc::vec![0.0; p];
    for r in 0..n {
        row.copy_from_slice(x.row(r));
        if let Some(m) = mean {
            row.iter_mut().zip(m).for_each(|(v, m)| *v -= m);
        }
        for i in 0..p {
            let xi = row[i];
            if xi == 0.0 {
                continue;
            }
            let dst = &mut acc.row_mut(i)[i..];
            for (d, xj) in dst.iter_mut().zip(&row[i..]) {
                *d += xi * xj;
            }
        }
    }
    let inv = 1.0 / n as f64;
    for i in 0..p {
        for j in i..p {
            let v = acc[(i, j)] * inv;
            acc[(i, j)] = v;
            acc[(j, i)] = v;
        }
    }
    Ok(EmpiricalCovariance { sigma_n: acc, n })
}

/// `θ̂ = (Σⁿ_{S,S})⁻¹ Σⁿ_{S,i}`, ordered as `s`.
pub fn ols_on_support(cov: &EmpiricalCovariance, i: usize, s: &[usize]) -> Result<Vec<f64>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    let sss = cov.sigma_n.select(s, s);
    let rhs: Vec<f64> = s.iter().map(|&j| cov.sigma_n[(j, i)]).collect();
    let f = linalg::cholesky(&sss).map_err(|e| match e {
        Error::NotPositiveDefinite { pivot, .. } => Error::SingularSupport { node: i, pivot },
        other => other,
    })?;
    f.solve(&rhs)
}

/// `Σⁿ_{i,i} − 2θᵀΣⁿ_{S,i} + θᵀΣⁿ_{S,S}θ`, clamped at zero.
pub fn residual_variance(cov: &EmpiricalCovariance, i: usize, s: &[usize], theta: &[f64]) -> f64 {
    let sig = &cov.sigma_n;
    let mut v = sig[(i, i)];
    for (a, &ja) in s.iter().enumerate() {
        v -= 2.0 * theta[a] * sig[(ja, i)];
        for (b, &jb) in s.iter().enumerate() {
            v += theta[a] * theta[b] * sig[(ja, jb)];
        }
    }
    v.max(0.0)
}

/// `‖Σⁿ_{S,i} − Σⁿ_{S,S} θ‖∞`: zero for an exact normal-equation solve.
pub fn normal_equation_residual(cov: &EmpiricalCovariance, i: usize, s: &[usize], theta: &[f64]) -> f64 {
    let sig = &cov.sigma_n;
    s.iter()
        .map(|&ja| {
            let fitted: f64 = s.iter().zip(theta).map(|(&jb, t)| sig[(ja, jb)] * t).sum();
            (sig[(ja, i)] - fitted).abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> EmpiricalCovariance {
        EmpiricalCovariance::from_matrix(Matrix::from_rows(&[[1.0, 0.5], [0.5, 1.25]]).unwrap(), 1)
    }

    #[test]
    fn covariance_examples() {
        let x = Matrix::from_rows(&[[1.0, 0.0], [-1.0, 0.0]]).unwrap();
        let c = empirical_covariance(&x).unwrap();
        assert_eq!(c.sigma_n, Matrix::from_rows(&[[1.0, 0.0], [0.0, 0.0]]).unwrap());
        assert_eq!(c.n, 2);
        let x = Matrix::from_rows(&[[2.0, 3.0]]).unwrap();
        let c = empirical_covariance(&x).unwrap();
        assert_eq!(c.sigma_n, Matrix::from_rows(&[[4.0, 6.0], [6.0, 9.0]]).unwrap());
        assert!(empirical_covariance(&Matrix::zeros(0, 3)).is_err());
    }

    #[test]
    fn centering() {
        let x = Matrix::from_rows(&[[1.0, 5.0], [3.0, 5.0]]).unwrap();
        let c = empirical_covariance_centered(&x).unwrap();
        assert_eq!(c.sigma_n, Matrix::from_rows(&[[1.0, 0.0], [0.0, 0.0]]).unwrap());
    }

    #[test]
    fn ols_examples() {
        let c = chain();
        assert!(ols_on_support(&c, 0, &[]).unwrap().is_empty());
        assert!((ols_on_support(&c, 1, &[0]).unwrap()[0] - 0.5).abs() < 1e-15);
        assert!((ols_on_support(&c, 0, &[1]).unwrap()[0] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn singular_support_reports_pivot() {
        let x = Matrix::from_rows(&[[1.0, 1.0, 2.0], [2.0, 2.0, 1.0]]).unwrap();
        let c = empirical_covariance(&x).unwrap();
        assert_eq!(
            ols_on_support(&c, 2, &[0, 1]),
            Err(Error::SingularSupport { node: 2, pivot: 1 })
        );
    }

    #[test]
    fn residual_variance_examples() {
        let c = chain();
        assert_eq!(residual_variance(&c, 0, &[], &[]), 1.0);
        assert!((residual_variance(&c, 1, &[0], &[0.5]) - 1.0).abs() < 1e-15);
        assert!((residual_variance(&c, 0, &[1], &[0.4]) - 0.8).abs() < 1e-15);
        assert!(normal_equation_residual(&c, 1, &[0], &[0.5]) < 1e-15);
    }
}
