//! Dense Hermitian operators, density matrices and their spectral calculus.
//!
//! Every functional in this crate is evaluated spectrally, so a
//! [`DensityMatrix`] carries its canonical [`SpectralDecomposition`] next to
//! the raw matrix. Canonical means:
//!
//! - eigenvalues ascending;
//! - each eigenvector's first component with modulus above `1e-10` is real
//!   and positive;
//! - inside a degenerate cluster the eigenvectors are ordered
//!   lexicographically on their (re, im) entries.
//!
//! Values are immutable after construction.

use std::cmp::Ordering;

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Max elementwise |A_ij - conj(A_ji)| accepted for a Hermitian operator.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Max |Tr(rho) - 1| accepted for a density matrix.
pub const TRACE_TOL: f64 = 1e-12;
/// Eigenvalues in [-NEGATIVE_EIGEN_TOL, 0) are clamped to zero.
pub const NEGATIVE_EIGEN_TOL: f64 = 1e-12;
/// Eigenvalues with modulus at or below this are numerical zeros. Raised to
/// a small power q they would otherwise dominate the q-weights.
pub const ZERO_EIGEN_FLOOR: f64 = 1e-14;

const DEGENERACY_TOL: f64 = 1e-12;
const PHASE_EPS: f64 = 1e-10;
const UNITARY_TOL: f64 = 1e-10;

/// Dense complex self-adjoint matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: DMatrix<C64>,
}

impl HermitianOperator {
    /// Validates Hermiticity within [`HERMITIAN_TOL`] and stores the exactly
    /// symmetrized matrix `(A + A^†)/2`.
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        check_square(&matrix)?;
        let (deviation, row, col) = hermiticity_deviation(&matrix);
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian {
                row,
                col,
                deviation,
            });
        }
        Ok(Self::symmetrized(matrix))
    }

    /// Builds from row-major real and (optional) imaginary parts.
    pub fn from_parts(re: &[Vec<f64>], im: Option<&[Vec<f64>]>) -> Result<Self> {
        Self::new(matrix_from_parts(re, im)?)
    }

    pub fn from_real(matrix: DMatrix<f64>) -> Result<Self> {
        Self::new(matrix.map(|x| C64::new(x, 0.0)))
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let mut matrix = DMatrix::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            matrix[(i, i)] = C64::new(v, 0.0);
        }
        Self { matrix }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: DMatrix::identity(dim, dim),
        }
    }

    /// `Σ_a λ_a |a⟩⟨a|` for an orthonormal basis given as columns.
    pub fn from_spectral(eigenvalues: &[f64], basis: &DMatrix<C64>) -> Self {
        let scaled = DMatrix::from_fn(basis.nrows(), basis.ncols(), |i, j| {
            basis[(i, j)] * eigenvalues[j]
        });
        Self::symmetrized(&scaled * basis.adjoint())
    }

    pub(crate) fn symmetrized(matrix: DMatrix<C64>) -> Self {
        let n = matrix.nrows();
        let mut sym = (&matrix + matrix.adjoint()) * C64::new(0.5, 0.0);
        for i in 0..n {
            sym[(i, i)].im = 0.0;
        }
        Self { matrix: sym }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn decompose(&self) -> SpectralDecomposition {
        spectral_decompose(self)
    }

    /// Diagonal elements `⟨a|A|a⟩` in the basis given by the columns.
    pub fn diagonal_in(&self, basis: &DMatrix<C64>) -> Vec<f64> {
        let rotated = basis.adjoint() * &self.matrix * basis;
        (0..rotated.nrows()).map(|i| rotated[(i, i)].re).collect()
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            matrix: &self.matrix * C64::new(factor, 0.0),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_same_dim(self.dim(), other.dim())?;
        Ok(Self::symmetrized(&self.matrix + &other.matrix))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_same_dim(self.dim(), other.dim())?;
        Ok(Self::symmetrized(&self.matrix - &other.matrix))
    }

    /// Unitary similarity `U A U^†`.
    pub fn conjugate_by(&self, unitary: &DMatrix<C64>) -> Self {
        Self::symmetrized(unitary * &self.matrix * unitary.adjoint())
    }

    /// Max elementwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        max_abs_diff(&self.matrix, &other.matrix)
    }
}

/// Orthonormal eigenbasis with ascending eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<C64>,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Eigenvectors as columns, paired with [`Self::eigenvalues`].
    pub fn eigenvectors(&self) -> &DMatrix<C64> {
        &self.eigenvectors
    }

    pub fn vector(&self, index: usize) -> DVector<C64> {
        self.eigenvectors.column(index).into_owned()
    }

    /// `Σ_a f(λ_a) |a⟩⟨a|`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> HermitianOperator {
        let mapped: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        HermitianOperator::from_spectral(&mapped, &self.eigenvectors)
    }

    pub fn reconstruct(&self) -> HermitianOperator {
        self.apply(|l| l)
    }

    /// Max deviation of `V^† V` from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let gram = self.eigenvectors.adjoint() * &self.eigenvectors;
        max_abs_diff(&gram, &DMatrix::identity(self.dim(), self.dim()))
    }

    /// Sorts, fixes phases and orders degenerate clusters.
    pub(crate) fn canonical(eigenvalues: Vec<f64>, eigenvectors: DMatrix<C64>) -> Self {
        let n = eigenvalues.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eigenvalues[a].total_cmp(&eigenvalues[b]));

        let mut columns: Vec<DVector<C64>> = order
            .iter()
            .map(|&k| normalize_phase(eigenvectors.column(k).into_owned()))
            .collect();
        let sorted: Vec<f64> = order.iter().map(|&k| eigenvalues[k]).collect();

        let scale = sorted.iter().fold(1.0_f64, |m, l| m.max(l.abs()));
        let mut start = 0;
        while start < n {
            let mut end = start + 1;
            while end < n && sorted[end] - sorted[start] <= DEGENERACY_TOL * scale {
                end += 1;
            }
            if end - start > 1 {
                columns[start..end].sort_by(lexicographic);
            }
            start = end;
        }

        let eigenvectors = DMatrix::from_columns(&columns);
        Self {
            eigenvalues: sorted,
            eigenvectors,
        }
    }
}

/// Spectral decomposition with the canonical ordering and phase convention.
pub fn spectral_decompose(op: &HermitianOperator) -> SpectralDecomposition {
    let eig = SymmetricEigen::new(op.matrix.clone());
    SpectralDecomposition::canonical(eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

/// Positive semi-definite, unit-trace Hermitian operator with its cached
/// spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    operator: HermitianOperator,
    spectrum: SpectralDecomposition,
}

impl DensityMatrix {
    pub fn new(operator: HermitianOperator) -> Result<Self> {
        check_trace(&operator, TRACE_TOL)?;
        let spectrum = clamp_spectrum(operator.decompose())?;
        Ok(Self { operator, spectrum })
    }

    pub fn from_matrix(matrix: DMatrix<C64>) -> Result<Self> {
        Self::new(HermitianOperator::new(matrix)?)
    }

    /// Accepts traces within `trace_tol` of one and rescales them to one.
    /// Returns the state and the trace deviation that was removed.
    pub fn renormalized(operator: HermitianOperator, trace_tol: f64) -> Result<(Self, f64)> {
        let t = trace(&operator);
        let deviation = t - 1.0;
        if !(deviation.abs() <= trace_tol) || t <= 0.0 {
            return Err(Error::InvalidTrace {
                trace: t,
                deviation: deviation.abs(),
            });
        }
        let scaled = if deviation == 0.0 {
            operator
        } else {
            operator.scale(1.0 / t)
        };
        let spectrum = clamp_spectrum(scaled.decompose())?;
        Ok((
            Self {
                operator: scaled,
                spectrum,
            },
            deviation,
        ))
    }

    /// Builds `Σ_a p_a |a⟩⟨a|` keeping the given probabilities exactly.
    pub fn from_spectrum(probabilities: Vec<f64>, basis: DMatrix<C64>) -> Result<Self> {
        let n = probabilities.len();
        if basis.nrows() != n || basis.ncols() != n {
            return Err(Error::DimensionMismatch(n, basis.nrows()));
        }
        if n == 0 {
            return Err(Error::EmptyMatrix);
        }
        let gram = basis.adjoint() * &basis;
        let err = max_abs_diff(&gram, &DMatrix::identity(n, n));
        if err > UNITARY_TOL {
            return Err(Error::NotUnitary(err));
        }
        let spectrum = clamp_spectrum(SpectralDecomposition::canonical(probabilities, basis))?;
        let operator =
            HermitianOperator::from_spectral(spectrum.eigenvalues(), spectrum.eigenvectors());
        let total: f64 = spectrum.eigenvalues().iter().sum();
        if (total - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidTrace {
                trace: total,
                deviation: (total - 1.0).abs(),
            });
        }
        Ok(Self { operator, spectrum })
    }

    pub fn diagonal(probabilities: &[f64]) -> Result<Self> {
        let n = probabilities.len();
        Self::from_spectrum(probabilities.to_vec(), DMatrix::identity(n, n))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self::diagonal(&vec![1.0 / dim as f64; dim]).expect("uniform state is valid")
    }

    /// Projector onto the normalized `vector`.
    pub fn pure(vector: &DVector<C64>) -> Result<Self> {
        let norm = vector.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Domain(
                "pure state needs a nonzero finite vector".into(),
            ));
        }
        let v = vector / C64::new(norm, 0.0);
        let projector = &v * v.adjoint();
        let operator = HermitianOperator::symmetrized(projector);
        let n = v.len();
        // complete v to an orthonormal basis via the projector's complement
        let spectrum = clamp_spectrum(operator.decompose())?;
        let mut probs = vec![0.0; n];
        probs[n - 1] = 1.0;
        let spectrum = SpectralDecomposition::canonical(probs, spectrum.eigenvectors.clone());
        Ok(Self { operator, spectrum })
    }

    /// `λ ρ_1 + (1 - λ) ρ_2`.
    pub fn mixture(a: &Self, b: &Self, lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::Domain(format!(
                "mixing weight {lambda} outside [0, 1]"
            )));
        }
        let op = a
            .operator
            .scale(lambda)
            .add(&b.operator.scale(1.0 - lambda))?;
        Self::new(op)
    }

    /// Unitary similarity `U ρ U^†`; the spectrum is carried over exactly.
    pub fn conjugate_by(&self, unitary: &DMatrix<C64>) -> Result<Self> {
        Self::from_spectrum(
            self.spectrum.eigenvalues.clone(),
            unitary * &self.spectrum.eigenvectors,
        )
    }

    pub fn dim(&self) -> usize {
        self.operator.dim()
    }

    pub fn operator(&self) -> &HermitianOperator {
        &self.operator
    }

    pub fn spectrum(&self) -> &SpectralDecomposition {
        &self.spectrum
    }

    /// Eigenvalues `p_a`, ascending, clamped at zero.
    pub fn probabilities(&self) -> &[f64] {
        &self.spectrum.eigenvalues
    }

    /// Number of strictly positive eigenvalues.
    pub fn rank(&self) -> usize {
        self.probabilities().iter().filter(|&&p| p > 0.0).count()
    }

    /// `Σ_a p_a^s`.
    pub fn power_trace(&self, s: f64) -> f64 {
        self.probabilities()
            .iter()
            .map(|&p| if p > 0.0 { p.powf(s) } else { 0.0 })
            .sum()
    }
}

/// `ρ^s = Σ_a p_a^s |a⟩⟨a|` with `0^s = 0`.
pub fn matrix_power(rho: &DensityMatrix, s: f64) -> Result<HermitianOperator> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::Domain(format!(
            "matrix power needs a finite exponent s > 0, got {s}"
        )));
    }
    Ok(rho
        .spectrum
        .apply(|p| if p > 0.0 { p.powf(s) } else { 0.0 }))
}

/// Sum of the real parts of the diagonal.
pub fn trace(op: &HermitianOperator) -> f64 {
    let diag = op.matrix.diagonal();
    let residue: f64 = diag.iter().map(|z| z.im).sum();
    debug_assert!(residue.abs() < 1e-12, "imaginary trace residue {residue}");
    diag.iter().map(|z| z.re).sum()
}

/// Kronecker product `ρ_A ⊗ ρ_B`; the spectrum is the set of pairwise
/// products with Kronecker-product eigenvectors.
pub fn tensor_product(a: &DensityMatrix, b: &DensityMatrix) -> DensityMatrix {
    let operator = HermitianOperator::symmetrized(a.operator.matrix.kronecker(&b.operator.matrix));
    let mut probs = Vec::with_capacity(a.dim() * b.dim());
    for &pa in a.probabilities() {
        for &pb in b.probabilities() {
            probs.push(pa * pb);
        }
    }
    let basis = a.spectrum.eigenvectors.kronecker(&b.spectrum.eigenvectors);
    let spectrum = SpectralDecomposition::canonical(probs, basis);
    DensityMatrix { operator, spectrum }
}

/// `W_ab = |⟨a|b⟩|²` between two eigenbases.
pub fn overlap_weights(a: &SpectralDecomposition, b: &SpectralDecomposition) -> DMatrix<f64> {
    (a.eigenvectors.adjoint() * &b.eigenvectors).map(|z| z.norm_sqr())
}

/// `½ Σ |eig(ρ - σ)|`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    let diff = a.operator.sub(&b.operator)?;
    Ok(0.5
        * diff
            .decompose()
            .eigenvalues
            .iter()
            .map(|l| l.abs())
            .sum::<f64>())
}

/// Largest `|A_ij - conj(A_ji)|` and where it occurs.
pub fn hermiticity_deviation(matrix: &DMatrix<C64>) -> (f64, usize, usize) {
    let n = matrix.nrows();
    let mut worst = (0.0, 0, 0);
    for i in 0..n {
        for j in i..n {
            let d = (matrix[(i, j)] - matrix[(j, i)].conj()).norm();
            if d > worst.0 {
                worst = (d, i, j);
            }
        }
    }
    worst
}

pub fn matrix_from_parts(re: &[Vec<f64>], im: Option<&[Vec<f64>]>) -> Result<DMatrix<C64>> {
    let n = re.len();
    if n == 0 {
        return Err(Error::EmptyMatrix);
    }
    for row in re {
        if row.len() != n {
            return Err(Error::NotSquare {
                rows: n,
                cols: row.len(),
            });
        }
    }
    if let Some(im) = im {
        if im.len() != n {
            return Err(Error::DimensionMismatch(n, im.len()));
        }
        for row in im {
            if row.len() != n {
                return Err(Error::NotSquare {
                    rows: n,
                    cols: row.len(),
                });
            }
        }
    }
    let m = DMatrix::from_fn(n, n, |i, j| {
        C64::new(re[i][j], im.map_or(0.0, |im| im[i][j]))
    });
    check_square(&m)?;
    Ok(m)
}

pub(crate) fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub(crate) fn check_same_dim(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(a, b))
    }
}

fn check_square(m: &DMatrix<C64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.nrows() == 0 {
        return Err(Error::EmptyMatrix);
    }
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

fn check_trace(op: &HermitianOperator, tol: f64) -> Result<()> {
    let t = trace(op);
    let deviation = (t - 1.0).abs();
    if deviation > tol {
        return Err(Error::InvalidTrace {
            trace: t,
            deviation,
        });
    }
    Ok(())
}

fn clamp_spectrum(mut spectrum: SpectralDecomposition) -> Result<SpectralDecomposition> {
    for (index, p) in spectrum.eigenvalues.iter_mut().enumerate() {
        if *p < -NEGATIVE_EIGEN_TOL {
            return Err(Error::NotPositive { index, value: *p });
        }
        if *p <= ZERO_EIGEN_FLOOR {
            *p = 0.0;
        }
    }
    Ok(spectrum)
}

fn normalize_phase(mut v: DVector<C64>) -> DVector<C64> {
    if let Some(k) = v.iter().position(|z| z.norm() > PHASE_EPS) {
        let z = v[k];
        let phase = z.conj() / z.norm();
        v.iter_mut().for_each(|x| *x *= phase);
        v[k] = C64::new(v[k].norm(), 0.0);
    }
    v
}

fn lexicographic(a: &DVector<C64>, b: &DVector<C64>) -> Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        let ord = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
        if ord != Ordering::Equal {
            return ord;
        }
    }
    Ordering::Equal
}
