use nalgebra::DVector;
use num_complex::Complex64;

use super::{
    eigendecompose, trace_product, CMatrix, DensityOperator, HermitianOperator, ProductSplit,
    PureState,
};
use crate::error::{invalid, Error, Result};

fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// `Tr(ρA)`.
pub fn q_expectation(rho: &DensityOperator, a: &HermitianOperator) -> Result<f64> {
    check_dims(rho.dim(), a.dim())?;
    let t = trace_product(rho.matrix(), a.matrix());
    debug_assert!(
        t.im.abs() < 1e-10 * (1.0 + t.re.abs()),
        "imaginary trace {t}"
    );
    Ok(t.re)
}

/// `sqrt(<A²> - <A>²)`, clamped at zero against round-off.
pub fn uncertainty(rho: &DensityOperator, a: &HermitianOperator) -> Result<f64> {
    check_dims(rho.dim(), a.dim())?;
    let mean = q_expectation(rho, a)?;
    let second = trace_product(rho.matrix(), &(a.matrix() * a.matrix())).re;
    Ok((second - mean * mean).max(0.0).sqrt())
}

/// Kronecker product with `a` on the outer (slow) index.
pub fn tensor(a: &HermitianOperator, b: &HermitianOperator) -> HermitianOperator {
    HermitianOperator::from_matrix_unchecked(a.matrix().kronecker(b.matrix()))
}

/// `Tr_E ρ`.
pub fn partial_trace_env(rho: &DensityOperator, split: ProductSplit) -> Result<DensityOperator> {
    split.check(rho.dim())?;
    let (ds, de) = (split.dim_system, split.dim_env);
    let m = rho.matrix();
    let reduced = CMatrix::from_fn(ds, ds, |j, k| {
        (0..de)
            .map(|l| m[(j * de + l, k * de + l)])
            .sum::<Complex64>()
    });
    Ok(DensityOperator::from_matrix_unchecked(reduced))
}

/// `exp(-i t H / ħ)` through the spectral decomposition of `H`.
pub fn unitary(h: &HermitianOperator, t: f64, hbar: f64) -> Result<CMatrix> {
    if !(hbar > 0.0) {
        return Err(invalid("hbar", "must be positive"));
    }
    let eig = eigendecompose(h)?;
    Ok(unitary_from(&eig.values, &eig.vectors, t, hbar))
}

pub(crate) fn unitary_from(values: &[f64], vectors: &CMatrix, t: f64, hbar: f64) -> CMatrix {
    let phases = DVector::from_iterator(
        values.len(),
        values
            .iter()
            .map(|&e| Complex64::from_polar(1.0, -e * t / hbar)),
    );
    let mut scaled = vectors.clone();
    for (k, mut col) in scaled.column_iter_mut().enumerate() {
        col *= phases[k];
    }
    scaled * vectors.adjoint()
}

/// `ρ(t) = U ρ U†` with `U = exp(-i t H / ħ)`.
pub fn evolve(
    rho: &DensityOperator,
    h: &HermitianOperator,
    t: f64,
    hbar: f64,
) -> Result<DensityOperator> {
    check_dims(rho.dim(), h.dim())?;
    if t == 0.0 {
        if !(hbar > 0.0) {
            return Err(invalid("hbar", "must be positive"));
        }
        return Ok(rho.clone());
    }
    let u = unitary(h, t, hbar)?;
    let evolved = &u * rho.matrix() * u.adjoint();
    Ok(DensityOperator::from_matrix_unchecked(evolved))
}

/// `ψ(t) = U ψ`.
pub fn evolve_pure(psi: &PureState, h: &HermitianOperator, t: f64, hbar: f64) -> Result<PureState> {
    check_dims(psi.dim(), h.dim())?;
    let u = unitary(h, t, hbar)?;
    Ok(PureState::from_vector_unchecked(u * psi.amplitudes()))
}
