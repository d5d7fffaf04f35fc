#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use nonext::entropy::EntropicIndex;
use nonext::infogeo::StateCurve;
use nonext::operator::{DensityMatrix, HermitianOperator, C64};
use nonext::random::{random_density_matrix, random_hermitian};
use rand::Rng;

pub fn qi(q: f64) -> EntropicIndex {
    EntropicIndex::new(q).unwrap()
}

/// `exp(-i t K)` through the spectral decomposition of `K`.
pub fn unitary_exp(k: &HermitianOperator, t: f64) -> DMatrix<C64> {
    let s = k.decompose();
    let v = s.eigenvectors();
    let phases = DVector::from_iterator(
        s.dim(),
        s.eigenvalues()
            .iter()
            .map(|&l| C64::from_polar(1.0, -t * l)),
    );
    v * DMatrix::from_diagonal(&phases) * v.adjoint()
}

/// Smooth full-rank curve mixing two random states while rotating the
/// result: both metric parts are generically nonzero.
pub struct RandomCurve {
    a: DensityMatrix,
    b: DensityMatrix,
    k: HermitianOperator,
}

impl RandomCurve {
    pub fn new(rng: &mut impl Rng, dim: usize) -> Self {
        Self {
            a: random_density_matrix(rng, dim),
            b: random_density_matrix(rng, dim),
            k: random_hermitian(rng, dim, 1.0),
        }
    }

    pub fn state(&self, alpha: f64) -> DensityMatrix {
        let mix = DensityMatrix::mixture(&self.a, &self.b, 0.5 + 0.4 * alpha.sin()).unwrap();
        DensityMatrix::new(mix.operator().conjugate_by(&unitary_exp(&self.k, alpha))).unwrap()
    }

    /// Sampled (untagged) curve of `n` points centred on `alpha`.
    pub fn sampled(&self, alpha: f64, h: f64, n: usize) -> StateCurve {
        let half = (n / 2) as f64;
        let alphas: Vec<f64> = (0..n).map(|j| alpha + (j as f64 - half) * h).collect();
        let states = alphas.iter().map(|&a| self.state(a)).collect();
        StateCurve::new(alphas, states).unwrap()
    }
}

/// Least-squares slope of `log dev` against `log h`.
pub fn order_fit(hs: &[f64], devs: &[f64]) -> f64 {
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = devs.iter().map(|d| d.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

/// Orthonormal columns spanning the support of `rho`.
pub fn support_basis(rho: &DensityMatrix) -> DMatrix<C64> {
    let spectrum = rho.spectrum();
    let cols: Vec<DVector<C64>> = spectrum
        .eigenvalues()
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(a, _)| spectrum.vector(a))
        .collect();
    DMatrix::from_columns(&cols)
}
