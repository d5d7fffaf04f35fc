//! Seeded random operators and states for experiments and property tests.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::operator::{DensityMatrix, HermitianOperator, C64};

pub type StateRng = ChaCha8Rng;

pub fn rng(seed: u64) -> StateRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_c64<R: Rng>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// Ginibre matrix with i.i.d. standard complex normal entries.
pub fn ginibre<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| gaussian_c64(rng))
}

/// GUE-like Hermitian matrix `scale·(G + G^†)/2`.
pub fn random_hermitian<R: Rng>(rng: &mut R, dim: usize, scale: f64) -> HermitianOperator {
    let g = ginibre(rng, dim, dim);
    HermitianOperator::new((&g + g.adjoint()) * C64::new(0.5 * scale, 0.0))
        .expect("symmetrized matrix is Hermitian")
}

/// Haar-distributed unitary from the QR factorization of a Ginibre matrix.
pub fn random_unitary<R: Rng>(rng: &mut R, dim: usize) -> DMatrix<C64> {
    let qr = ginibre(rng, dim, dim).qr();
    let (q, r) = qr.unpack();
    let mut q = q;
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Flat-Dirichlet probability vector; every entry is at least `floor`.
pub fn random_probabilities<R: Rng>(rng: &mut R, n: usize, floor: f64) -> Vec<f64> {
    assert!(floor * (n as f64) < 1.0);
    let raw: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = raw.iter().sum();
    let spare = 1.0 - floor * n as f64;
    let mut p: Vec<f64> = raw.iter().map(|x| floor + spare * x / total).collect();
    fix_sum(&mut p);
    p
}

/// Full-rank state with a Haar-random eigenbasis and eigenvalues `≥ 1e-3`.
pub fn random_density_matrix<R: Rng>(rng: &mut R, dim: usize) -> DensityMatrix {
    let p = random_probabilities(rng, dim, 1e-3 / dim as f64);
    let u = random_unitary(rng, dim);
    DensityMatrix::from_spectrum(p, u).expect("random state is valid")
}

/// State of the given rank with a Haar-random eigenbasis.
pub fn random_state_with_rank<R: Rng>(rng: &mut R, dim: usize, rank: usize) -> DensityMatrix {
    assert!(rank >= 1 && rank <= dim);
    let mut p = vec![0.0; dim];
    let head = random_probabilities(rng, rank, 1e-3 / rank as f64);
    p[..rank].copy_from_slice(&head);
    let u = random_unitary(rng, dim);
    DensityMatrix::from_spectrum(p, u).expect("random state is valid")
}

/// Diagonal (classical) full-support state.
pub fn random_diagonal_state<R: Rng>(rng: &mut R, dim: usize) -> DensityMatrix {
    let p = random_probabilities(rng, dim, 1e-3 / dim as f64);
    DensityMatrix::diagonal(&p).expect("random state is valid")
}

/// Full-rank state on the span of the given orthonormal columns, zero on
/// the complement. `basis` holds `dim` rows and `k ≤ dim` columns.
pub fn random_state_in_subspace<R: Rng>(rng: &mut R, basis: &DMatrix<C64>) -> DensityMatrix {
    let dim = basis.nrows();
    let k = basis.ncols();
    let p_sub = random_probabilities(rng, k, 1e-3 / k as f64);
    let inner = random_unitary(rng, k);
    let rotated = basis * inner;
    // complete to a full basis with the complement of the span
    let projector = &rotated * rotated.adjoint();
    let complement = HermitianOperator::new(DMatrix::identity(dim, dim) - projector)
        .expect("projector complement is Hermitian")
        .decompose();
    let mut columns: Vec<DVector<C64>> = (0..k).map(|j| rotated.column(j).into_owned()).collect();
    // complement eigenvalue 1 vectors are the top dim - k
    for j in k..dim {
        columns.push(complement.vector(j));
    }
    let mut p = p_sub;
    p.resize(dim, 0.0);
    DensityMatrix::from_spectrum(p, DMatrix::from_columns(&columns))
        .expect("subspace state is valid")
}

fn fix_sum(p: &mut [f64]) {
    let total: f64 = p.iter().sum();
    let (imax, _) = p.iter().enumerate().fold(
        (0, f64::MIN),
        |acc, (i, &x)| if x > acc.1 { (i, x) } else { acc },
    );
    p[imax] += 1.0 - total;
}
