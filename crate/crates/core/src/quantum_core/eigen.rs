//! Hermitian eigendecomposition, backed by faer's self-adjoint solver.

use faer::complex_native::c64;
use faer::{Mat, Side};
use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{CMatrix, HermitianOperator};
use crate::error::{Error, Result};

/// Columnwise residual `max_k |A v_k - λ_k v_k|` above which the result is
/// rejected, relative to `max(1, max |a_jk|)`.
const RESIDUAL_TOL: f64 = 1e-9;

/// Spectral decomposition `A = V diag(values) V†`, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

pub fn eigendecompose(a: &HermitianOperator) -> Result<Eigen> {
    if a.is_real() {
        let (values, vectors) = eigh_real(&a.matrix().map(|z| z.re))?;
        return Ok(Eigen {
            values,
            vectors: vectors.map(|x| Complex64::new(x, 0.0)),
        });
    }
    let m = a.matrix();
    let n = m.nrows();
    let fm = Mat::<c64>::from_fn(n, n, |j, k| {
        let z = m[(j, k)];
        c64::new(z.re, z.im)
    });
    let evd = fm.selfadjoint_eigendecomposition(Side::Lower);
    let s = evd.s().column_vector();
    let u = evd.u();

    let scale = m.iter().fold(1.0f64, |acc, z| acc.max(z.norm()));
    let av = &fm * u;
    let mut residual = 0.0f64;
    for k in 0..n {
        let lambda = s.read(k).re;
        let col: f64 = (0..n)
            .map(|j| {
                let r = av.read(j, k) - u.read(j, k) * c64::new(lambda, 0.0);
                r.re * r.re + r.im * r.im
            })
            .sum();
        residual = residual.max(col.sqrt());
    }
    if !residual.is_finite() || residual > RESIDUAL_TOL * scale {
        return Err(Error::EigenConvergence { residual });
    }

    let order = ascending_order(n, |k| s.read(k).re);
    let values = order.iter().map(|&k| s.read(k).re).collect();
    let vectors = CMatrix::from_fn(n, n, |j, col| {
        let z = u.read(j, order[col]);
        Complex64::new(z.re, z.im)
    });
    Ok(Eigen { values, vectors })
}

/// Real symmetric eigendecomposition; used directly by the grid engines,
/// whose Hamiltonians are real.
pub(crate) fn eigh_real(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    let fm = Mat::<f64>::from_fn(n, n, |j, k| m[(j, k)]);
    let evd = fm.selfadjoint_eigendecomposition(Side::Lower);
    let s = evd.s().column_vector();
    let u = evd.u();

    let scale = m.iter().fold(1.0f64, |acc, x| acc.max(x.abs()));
    let av = &fm * u;
    let mut residual = 0.0f64;
    for k in 0..n {
        let lambda = s.read(k);
        let col: f64 = (0..n)
            .map(|j| {
                let r = av.read(j, k) - u.read(j, k) * lambda;
                r * r
            })
            .sum();
        residual = residual.max(col.sqrt());
    }
    if !residual.is_finite() || residual > RESIDUAL_TOL * scale {
        return Err(Error::EigenConvergence { residual });
    }

    let order = ascending_order(n, |k| s.read(k));
    let values = order.iter().map(|&k| s.read(k)).collect();
    let vectors = DMatrix::from_fn(n, n, |j, col| u.read(j, order[col]));
    Ok((values, vectors))
}

fn ascending_order(n: usize, value: impl Fn(usize) -> f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| value(a).total_cmp(&value(b)));
    order
}
