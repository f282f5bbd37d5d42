use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{c, eigendecompose, CMatrix};
use crate::error::{Error, Result};

/// Validation thresholds shared by every constructor in the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Hermiticity, relative to `max(1, max |a_jk|)`.
    pub hermitian: f64,
    pub trace: f64,
    /// Most negative eigenvalue accepted for a density operator.
    pub psd: f64,
    pub norm: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        hermitian: 1e-12,
        trace: 1e-10,
        psd: 1e-10,
        norm: 1e-12,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}

fn check_square(m: &CMatrix) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(())
}

fn hermitian_deviation(m: &CMatrix) -> (f64, f64) {
    let n = m.nrows();
    let mut dev = 0.0f64;
    let mut scale = 1.0f64;
    for j in 0..n {
        for k in 0..n {
            scale = scale.max(m[(j, k)].norm());
            if k >= j {
                dev = dev.max((m[(j, k)] - m[(k, j)].conj()).norm());
            }
        }
    }
    (dev, scale)
}

fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5)
}

/// A complex square matrix equal to its adjoint.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: CMatrix,
}

impl HermitianOperator {
    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        Self::from_matrix_with(matrix, &Tolerances::DEFAULT)
    }

    /// Validates Hermiticity and then symmetrizes so the stored matrix is
    /// exactly Hermitian.
    pub fn from_matrix_with(matrix: CMatrix, tol: &Tolerances) -> Result<Self> {
        check_square(&matrix)?;
        let (dev, scale) = hermitian_deviation(&matrix);
        if dev > tol.hermitian * scale {
            return Err(Error::NotHermitian { deviation: dev });
        }
        Ok(Self {
            matrix: hermitize(&matrix),
        })
    }

    pub fn from_real(matrix: DMatrix<f64>) -> Result<Self> {
        Self::from_matrix(matrix.map(c))
    }

    /// Builds from row-major real and imaginary parts.
    pub fn from_rows(re: &[Vec<f64>], im: &[Vec<f64>]) -> Result<Self> {
        Self::from_matrix(rows_to_matrix(re, im)?)
    }

    pub(crate) fn from_matrix_unchecked(matrix: CMatrix) -> Self {
        debug_assert_eq!(matrix.nrows(), matrix.ncols());
        Self { matrix }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let d = DVector::from_iterator(values.len(), values.iter().map(|&v| c(v)));
        Self {
            matrix: CMatrix::from_diagonal(&d),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: CMatrix::identity(dim, dim),
        }
    }

    pub fn pauli_x() -> Self {
        Self::from_matrix_unchecked(CMatrix::from_row_slice(
            2,
            2,
            &[c(0.0), c(1.0), c(1.0), c(0.0)],
        ))
    }

    pub fn pauli_y() -> Self {
        let i = Complex64::i();
        Self::from_matrix_unchecked(CMatrix::from_row_slice(2, 2, &[c(0.0), -i, i, c(0.0)]))
    }

    pub fn pauli_z() -> Self {
        Self::diagonal(&[1.0, -1.0])
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn is_real(&self) -> bool {
        self.matrix.iter().all(|z| z.im == 0.0)
    }

    /// Real linear combination `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &HermitianOperator, b: f64) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(Self {
            matrix: &self.matrix * c(a) + &other.matrix * c(b),
        })
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            matrix: &self.matrix * c(s),
        }
    }

    /// `self²`, which is Hermitian again.
    pub fn square(&self) -> Self {
        Self {
            matrix: hermitize(&(&self.matrix * &self.matrix)),
        }
    }

    /// Applies a real function to the spectrum.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let eig = eigendecompose(self)?;
        let d = DVector::from_iterator(eig.values.len(), eig.values.iter().map(|&l| c(f(l))));
        let m = &eig.vectors * CMatrix::from_diagonal(&d) * eig.vectors.adjoint();
        Ok(Self {
            matrix: hermitize(&m),
        })
    }
}

pub(crate) fn rows_to_matrix(re: &[Vec<f64>], im: &[Vec<f64>]) -> Result<CMatrix> {
    let n = re.len();
    if n == 0 {
        return Err(Error::NotSquare { rows: 0, cols: 0 });
    }
    if !im.is_empty() && im.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: im.len(),
        });
    }
    let mut m = CMatrix::zeros(n, n);
    for (j, row) in re.iter().enumerate() {
        if row.len() != n {
            return Err(Error::NotSquare {
                rows: n,
                cols: row.len(),
            });
        }
        for (k, &v) in row.iter().enumerate() {
            m[(j, k)].re = v;
        }
    }
    for (j, row) in im.iter().enumerate() {
        if row.len() != n {
            return Err(Error::NotSquare {
                rows: n,
                cols: row.len(),
            });
        }
        for (k, &v) in row.iter().enumerate() {
            m[(j, k)].im = v;
        }
    }
    Ok(m)
}

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: CMatrix,
}

impl DensityOperator {
    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        Self::from_matrix_with(matrix, &Tolerances::DEFAULT)
    }

    pub fn from_matrix_with(matrix: CMatrix, tol: &Tolerances) -> Result<Self> {
        let herm = HermitianOperator::from_matrix_with(matrix, tol)?;
        let trace = herm.matrix.trace().re;
        if (trace - 1.0).abs() > tol.trace {
            return Err(Error::TraceNotOne { trace });
        }
        let eig = eigendecompose(&herm)?;
        let min = eig.values[0];
        if min < -tol.psd {
            return Err(Error::NotPositive {
                min_eigenvalue: min,
            });
        }
        Ok(Self {
            matrix: herm.matrix,
        })
    }

    pub fn from_rows(re: &[Vec<f64>], im: &[Vec<f64>]) -> Result<Self> {
        Self::from_matrix(rows_to_matrix(re, im)?)
    }

    /// Diagonal state with the given probabilities.
    pub fn diagonal(probabilities: &[f64]) -> Result<Self> {
        Self::from_matrix(HermitianOperator::diagonal(probabilities).matrix)
    }

    /// `|k><k|` in dimension `dim`.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut m = CMatrix::zeros(dim, dim);
        m[(k, k)] = c(1.0);
        Self { matrix: m }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: CMatrix::identity(dim, dim) * c(1.0 / dim as f64),
        }
    }

    pub fn from_pure(psi: &PureState) -> Self {
        let v = psi.amplitudes();
        Self {
            matrix: hermitize(&(v * v.adjoint())),
        }
    }

    /// Skips the eigenvalue check; the caller guarantees the invariants.
    pub(crate) fn from_matrix_unchecked(matrix: CMatrix) -> Self {
        Self {
            matrix: hermitize(&matrix),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn as_operator(&self) -> HermitianOperator {
        HermitianOperator::from_matrix_unchecked(self.matrix.clone())
    }

    /// Eigenvalues in ascending order.
    pub fn spectrum(&self) -> Result<Vec<f64>> {
        Ok(eigendecompose(&self.as_operator())?.values)
    }
}

/// Unit vector in `C^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: DVector<Complex64>,
}

impl PureState {
    pub fn new(amplitudes: DVector<Complex64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if amplitudes.is_empty() || (norm - 1.0).abs() > Tolerances::DEFAULT.norm {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { amplitudes })
    }

    /// Rescales a nonzero vector to unit norm.
    pub fn normalized(amplitudes: DVector<Complex64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if amplitudes.is_empty() || norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self {
            amplitudes: amplitudes.unscale(norm),
        })
    }

    pub fn from_slice(amplitudes: &[Complex64]) -> Result<Self> {
        Self::normalized(DVector::from_column_slice(amplitudes))
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        let mut v = DVector::zeros(dim);
        v[k] = c(1.0);
        Self { amplitudes: v }
    }

    pub(crate) fn from_vector_unchecked(amplitudes: DVector<Complex64>) -> Self {
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn density(&self) -> DensityOperator {
        DensityOperator::from_pure(self)
    }

    /// `<psi|A|psi>`.
    pub fn expectation(&self, a: &HermitianOperator) -> Result<f64> {
        if a.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: a.dim(),
            });
        }
        Ok(self.amplitudes.dotc(&(a.matrix() * &self.amplitudes)).re)
    }
}

/// Factorization `dim = dim_system * dim_env` of a composite space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProductSplit {
    pub dim_system: usize,
    pub dim_env: usize,
}

impl ProductSplit {
    pub fn new(dim_system: usize, dim_env: usize) -> Result<Self> {
        if dim_system == 0 || dim_env == 0 {
            return Err(crate::error::invalid(
                "split",
                "dimensions must be positive",
            ));
        }
        Ok(Self {
            dim_system,
            dim_env,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim_system * self.dim_env
    }

    pub(crate) fn check(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::NotFactorizable {
                dim,
                dim_system: self.dim_system,
                dim_env: self.dim_env,
            });
        }
        Ok(())
    }
}
