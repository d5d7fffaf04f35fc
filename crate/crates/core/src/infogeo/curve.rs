use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::maxent::gibbs_state;
use crate::operator::{DensityMatrix, HermitianOperator, C64};

/// Relative tolerance on grid spacing uniformity.
const SPACING_TOL: f64 = 1e-9;

/// Built-in one-parameter families. Each isolates one part of the metric.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `ρ(α) = ρ₀`; both metric parts vanish.
    Constant(DensityMatrix),
    /// `diag(α, 1 - α)`; fixed eigenbasis, purely classical metric.
    ClassicalDiagonal,
    /// `(I + r(σ_z cos α + σ_x sin α))/2`; fixed spectrum, purely quantum
    /// metric.
    RotatingQubit { r: f64 },
    /// `exp(-αH)/Tr exp(-αH)`; commutes with `H`, classical metric `Var(H)`.
    Thermal(HermitianOperator),
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Constant(_) => "constant",
            Family::ClassicalDiagonal => "classical_diagonal",
            Family::RotatingQubit { .. } => "rotating_qubit",
            Family::Thermal(_) => "thermal",
        }
    }

    pub fn state_at(&self, alpha: f64) -> Result<DensityMatrix> {
        if !alpha.is_finite() {
            return Err(Error::Domain(format!("alpha must be finite, got {alpha}")));
        }
        match self {
            Family::Constant(rho) => Ok(rho.clone()),
            Family::ClassicalDiagonal => {
                if !(0.0..=1.0).contains(&alpha) {
                    return Err(Error::Domain(format!(
                        "diag(α, 1-α) needs α in [0, 1], got {alpha}"
                    )));
                }
                DensityMatrix::diagonal(&[alpha, 1.0 - alpha])
            }
            Family::RotatingQubit { r } => {
                let (s, c) = (0.5 * alpha).sin_cos();
                let basis = DMatrix::from_row_slice(
                    2,
                    2,
                    &[
                        C64::new(-s, 0.0),
                        C64::new(c, 0.0),
                        C64::new(c, 0.0),
                        C64::new(s, 0.0),
                    ],
                );
                DensityMatrix::from_spectrum(vec![0.5 * (1.0 - r), 0.5 * (1.0 + r)], basis)
            }
            Family::Thermal(h) => Ok(gibbs_state(h, alpha)?.rho_eq),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Family::RotatingQubit { r } if !(0.0..=1.0).contains(r) => Err(Error::Domain(format!(
                "rotating qubit needs purity r in [0, 1], got {r}"
            ))),
            _ => Ok(()),
        }
    }
}

/// One-parameter family sampled on a uniform, strictly increasing grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StateCurve {
    alphas: Vec<f64>,
    states: Vec<DensityMatrix>,
    family: Option<Family>,
}

impl StateCurve {
    pub fn new(alphas: Vec<f64>, states: Vec<DensityMatrix>) -> Result<Self> {
        validate_grid(&alphas)?;
        if states.len() != alphas.len() {
            return Err(Error::InvalidCurve(format!(
                "{} grid points but {} states",
                alphas.len(),
                states.len()
            )));
        }
        let dim = states[0].dim();
        if let Some((i, s)) = states.iter().enumerate().find(|(_, s)| s.dim() != dim) {
            return Err(Error::InvalidCurve(format!(
                "state {i} has dimension {} but state 0 has {dim}",
                s.dim()
            )));
        }
        Ok(Self {
            alphas,
            states,
            family: None,
        })
    }

    /// Samples `family` at `n` evenly spaced points of `[alpha_min, alpha_max]`.
    pub fn from_family(family: Family, alpha_min: f64, alpha_max: f64, n: usize) -> Result<Self> {
        family.validate()?;
        if n < 3 {
            return Err(Error::InvalidCurve(format!(
                "need at least 3 grid points, got {n}"
            )));
        }
        if !(alpha_max > alpha_min) {
            return Err(Error::InvalidCurve(format!(
                "alpha_max ({alpha_max}) must exceed alpha_min ({alpha_min})"
            )));
        }
        let h = (alpha_max - alpha_min) / (n - 1) as f64;
        let alphas: Vec<f64> = (0..n).map(|i| alpha_min + h * i as f64).collect();
        let states = alphas
            .iter()
            .map(|&a| family.state_at(a))
            .collect::<Result<Vec<_>>>()?;
        let mut curve = Self::new(alphas, states)?;
        curve.family = Some(family);
        Ok(curve)
    }

    /// `n` points centred on `alpha` with spacing `h`.
    pub fn centered(family: Family, alpha: f64, h: f64, n: usize) -> Result<Self> {
        let half = (n / 2) as f64;
        Self::from_family(family, alpha - half * h, alpha + half * h, 2 * (n / 2) + 1)
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn family(&self) -> Option<&Family> {
        self.family.as_ref()
    }

    pub fn spacing(&self) -> f64 {
        (self.alphas[self.len() - 1] - self.alphas[0]) / (self.len() - 1) as f64
    }

    /// Applies `U ρ U^†` to every raw matrix and re-decomposes. The family
    /// tag is dropped.
    pub fn conjugated(&self, unitary: &DMatrix<C64>) -> Result<Self> {
        let states = self
            .states
            .iter()
            .map(|s| DensityMatrix::new(s.operator().conjugate_by(unitary)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.alphas.clone(), states)
    }
}

fn validate_grid(alphas: &[f64]) -> Result<()> {
    if alphas.len() < 3 {
        return Err(Error::InvalidCurve(format!(
            "need at least 3 grid points, got {}",
            alphas.len()
        )));
    }
    if let Some(i) = alphas.iter().position(|a| !a.is_finite()) {
        return Err(Error::InvalidCurve(format!("alpha[{i}] is not finite")));
    }
    let h = (alphas[alphas.len() - 1] - alphas[0]) / (alphas.len() - 1) as f64;
    for (i, w) in alphas.windows(2).enumerate() {
        let step = w[1] - w[0];
        if !(step > 0.0) {
            return Err(Error::InvalidCurve(format!(
                "grid is not strictly increasing at index {}",
                i + 1
            )));
        }
        if (step - h).abs() > SPACING_TOL * h.abs().max(w[1].abs()) {
            return Err(Error::InvalidCurve(format!(
                "grid spacing is not uniform at index {} (step {step}, mean {h})",
                i + 1
            )));
        }
    }
    Ok(())
}
