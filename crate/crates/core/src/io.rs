//! JSON file formats for matrices and curves.
//!
//! A matrix is `{"dim": n, "re": [[...]], "im": [[...]]}` with row-major
//! nested arrays; `im` may be omitted for real matrices. A curve is either
//! sampled, `{"alphas": [...], "states": [matrix, ...]}`, or a built-in
//! family such as
//! `{"family": "rotating_qubit", "r": 0.5, "alpha_min": 0, "alpha_max": 1, "n": 101}`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::infogeo::{Family, StateCurve};
use crate::operator::{matrix_from_parts, DensityMatrix, HermitianOperator, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixFile {
    pub fn from_operator(op: &HermitianOperator) -> Self {
        let m = op.matrix();
        let n = op.dim();
        let re = (0..n)
            .map(|i| (0..n).map(|j| m[(i, j)].re).collect())
            .collect();
        let im: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| m[(i, j)].im).collect())
            .collect();
        let real = im.iter().flatten().all(|&x| x == 0.0);
        Self {
            dim: n,
            re,
            im: if real { None } else { Some(im) },
        }
    }

    fn check_shape(&self) -> Result<()> {
        let check = |name: &str, rows: &[Vec<f64>]| -> Result<()> {
            if rows.len() != self.dim {
                return Err(Error::Parse(format!(
                    "{name} has {} rows but dim is {}",
                    rows.len(),
                    self.dim
                )));
            }
            for (i, row) in rows.iter().enumerate() {
                if row.len() != self.dim {
                    return Err(Error::Parse(format!(
                        "{name}[{i}] has {} entries but dim is {}",
                        row.len(),
                        self.dim
                    )));
                }
            }
            Ok(())
        };
        if self.dim == 0 {
            return Err(Error::EmptyMatrix);
        }
        check("re", &self.re)?;
        if let Some(im) = &self.im {
            check("im", im)?;
        }
        Ok(())
    }

    /// Raw complex matrix after shape and finiteness checks, without the
    /// Hermiticity check.
    pub fn to_matrix(&self) -> Result<DMatrix<C64>> {
        self.check_shape()?;
        matrix_from_parts(&self.re, self.im.as_deref())
    }

    /// Validated Hermitian operator; errors name the offending entry.
    pub fn to_operator(&self) -> Result<HermitianOperator> {
        self.check_shape()?;
        HermitianOperator::from_parts(&self.re, self.im.as_deref())
    }

    pub fn to_density_matrix(&self) -> Result<DensityMatrix> {
        DensityMatrix::new(self.to_operator()?)
    }
}

pub fn parse_matrix(text: &str) -> Result<MatrixFile> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum CurveFile {
    Sampled {
        alphas: Vec<f64>,
        states: Vec<MatrixFile>,
    },
    Family(FamilyFile),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FamilyFile {
    Constant {
        #[serde(default)]
        state: Option<MatrixFile>,
        alpha_min: f64,
        alpha_max: f64,
        n: usize,
    },
    #[serde(alias = "diagonal")]
    ClassicalDiagonal {
        alpha_min: f64,
        alpha_max: f64,
        n: usize,
    },
    RotatingQubit {
        r: f64,
        alpha_min: f64,
        alpha_max: f64,
        n: usize,
    },
    Thermal {
        hamiltonian: MatrixFile,
        alpha_min: f64,
        alpha_max: f64,
        n: usize,
    },
}

impl CurveFile {
    pub fn to_curve(&self) -> Result<StateCurve> {
        match self {
            CurveFile::Sampled { alphas, states } => {
                let states = states
                    .iter()
                    .enumerate()
                    .map(|(i, s)| {
                        s.to_density_matrix()
                            .map_err(|e| Error::InvalidCurve(format!("state {i}: {e}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                StateCurve::new(alphas.clone(), states)
            }
            CurveFile::Family(f) => {
                let (family, lo, hi, n) = match f {
                    FamilyFile::Constant {
                        state,
                        alpha_min,
                        alpha_max,
                        n,
                    } => {
                        let rho = match state {
                            Some(s) => s.to_density_matrix()?,
                            None => DensityMatrix::maximally_mixed(2),
                        };
                        (Family::Constant(rho), alpha_min, alpha_max, n)
                    }
                    FamilyFile::ClassicalDiagonal {
                        alpha_min,
                        alpha_max,
                        n,
                    } => (Family::ClassicalDiagonal, alpha_min, alpha_max, n),
                    FamilyFile::RotatingQubit {
                        r,
                        alpha_min,
                        alpha_max,
                        n,
                    } => (Family::RotatingQubit { r: *r }, alpha_min, alpha_max, n),
                    FamilyFile::Thermal {
                        hamiltonian,
                        alpha_min,
                        alpha_max,
                        n,
                    } => (
                        Family::Thermal(hamiltonian.to_operator()?),
                        alpha_min,
                        alpha_max,
                        n,
                    ),
                };
                StateCurve::from_family(family, *lo, *hi, *n)
            }
        }
    }
}

pub fn parse_curve(text: &str) -> Result<CurveFile> {
    serde_json::from_str(text)
        .map_err(|e| Error::Parse(format!("not a sampled curve or known family: {e}")))
}
