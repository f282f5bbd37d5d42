//! `{ "dim": n, "re": [[...]], "im": [[...]] }` document form.

use serde::{Deserialize, Serialize};

use super::operator::rows_to_matrix;
use super::{CMatrix, DensityOperator, HermitianOperator};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorDoc {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    /// Omitted means purely real.
    #[serde(default)]
    pub im: Vec<Vec<f64>>,
}

impl OperatorDoc {
    fn to_matrix(&self) -> Result<CMatrix> {
        let m = rows_to_matrix(&self.re, &self.im)?;
        if m.nrows() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: m.nrows(),
            });
        }
        Ok(m)
    }

    fn from_matrix(m: &CMatrix) -> Self {
        let n = m.nrows();
        let rows = |f: fn(&num_complex::Complex64) -> f64| {
            (0..n)
                .map(|j| (0..n).map(|k| f(&m[(j, k)])).collect())
                .collect()
        };
        OperatorDoc {
            dim: n,
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }
}

impl TryFrom<OperatorDoc> for HermitianOperator {
    type Error = Error;
    fn try_from(doc: OperatorDoc) -> Result<Self> {
        HermitianOperator::from_matrix(doc.to_matrix()?)
    }
}

impl From<HermitianOperator> for OperatorDoc {
    fn from(op: HermitianOperator) -> Self {
        OperatorDoc::from_matrix(op.matrix())
    }
}

impl TryFrom<OperatorDoc> for DensityOperator {
    type Error = Error;
    fn try_from(doc: OperatorDoc) -> Result<Self> {
        DensityOperator::from_matrix(doc.to_matrix()?)
    }
}

impl From<DensityOperator> for OperatorDoc {
    fn from(rho: DensityOperator) -> Self {
        OperatorDoc::from_matrix(rho.matrix())
    }
}

macro_rules! serde_via_doc {
    ($ty:ty) => {
        impl Serialize for $ty {
            fn serialize<S: serde::Serializer>(
                &self,
                s: S,
            ) -> std::result::Result<S::Ok, S::Error> {
                OperatorDoc::from_matrix(self.matrix()).serialize(s)
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: serde::Deserializer<'de>>(
                d: D,
            ) -> std::result::Result<Self, D::Error> {
                let doc = OperatorDoc::deserialize(d)?;
                <$ty>::try_from(doc).map_err(serde::de::Error::custom)
            }
        }
    };
}

serde_via_doc!(HermitianOperator);
serde_via_doc!(DensityOperator);
