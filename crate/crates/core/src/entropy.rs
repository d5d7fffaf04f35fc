//! q-logarithm, von Neumann and normalized Tsallis entropies, the KL and
//! q-KL divergences, escort expectations, and the algebraic identity checks
//! (pseudo-additivity, Jackson q-derivative, Jackson basic numbers).
//!
//! Every functional takes an [`EntropicIndex`]. When `|q - 1| < 1e-6` the
//! index is flagged `near_one` and the q = 1 forms are used throughout; the
//! only exception is [`ln_q`], which switches to its second-order series.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{check_same_dim, overlap_weights, DensityMatrix, HermitianOperator};

/// `|q - 1|` below which the q = 1 forms are used.
pub const NEAR_ONE_TOL: f64 = 1e-6;

/// Mass `⟨b|ρ|b⟩` on a null eigenvector `b` of the reference state above
/// which the support of `ρ` counts as not contained in the reference support.
pub const SUPPORT_TOL: f64 = 1e-12;

/// Nonextensivity parameter `q > 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct EntropicIndex(f64);

impl EntropicIndex {
    pub fn new(q: f64) -> Result<Self> {
        if q > 0.0 && q.is_finite() {
            Ok(Self(q))
        } else {
            Err(Error::Domain(format!(
                "entropic index must be finite and > 0, got {q}"
            )))
        }
    }

    pub const ONE: Self = Self(1.0);

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn near_one(self) -> bool {
        (self.0 - 1.0).abs() < NEAR_ONE_TOL
    }
}

impl TryFrom<f64> for EntropicIndex {
    type Error = Error;

    fn try_from(q: f64) -> Result<Self> {
        Self::new(q)
    }
}

impl From<EntropicIndex> for f64 {
    fn from(q: EntropicIndex) -> f64 {
        q.0
    }
}

/// Entropy in nats (`k_B = 1`).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct EntropyValue(pub f64);

impl EntropyValue {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// A relative entropy. Support violations produce [`Divergence::Infinite`]
/// rather than an error so that parameter sweeps can record them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Divergence {
    Finite(f64),
    Infinite,
}

impl Divergence {
    /// The numeric value, `f64::INFINITY` for the infinite signal.
    pub fn value(self) -> f64 {
        match self {
            Divergence::Finite(v) => v,
            Divergence::Infinite => f64::INFINITY,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Divergence::Finite(v) => Some(v),
            Divergence::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Divergence::Infinite)
    }
}

/// Deformed logarithm `(x^{q-1} - 1)/(q - 1)`.
///
/// Near `q = 1` the second-order series `ln x + (q-1) ln²x / 2` is returned
/// instead. `x = +∞` is accepted: the value is `1/(1-q)` for `q < 1`.
pub fn ln_q(x: f64, q: EntropicIndex) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("ln_q needs x > 0, got {x}")));
    }
    Ok(ln_q_unchecked(x, q))
}

fn ln_q_unchecked(x: f64, q: EntropicIndex) -> f64 {
    let qm1 = q.0 - 1.0;
    if q.near_one() {
        let l = x.ln();
        return l + qm1 * l * l / 2.0;
    }
    if x.is_infinite() {
        return if qm1 < 0.0 { -1.0 / qm1 } else { f64::INFINITY };
    }
    (x.powf(qm1) - 1.0) / qm1
}

/// `Ln_q(1/p)` for a probability, with `p = 0` mapped to the `x → ∞` limit.
pub fn ln_q_inv(p: f64, q: EntropicIndex) -> f64 {
    if p > 0.0 {
        ln_q_unchecked(1.0 / p, q)
    } else {
        ln_q_unchecked(f64::INFINITY, q)
    }
}

/// `-Σ_a p_a ln p_a` with `0 ln 0 = 0`.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> EntropyValue {
    EntropyValue(shannon(rho.probabilities()))
}

pub(crate) fn shannon(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum()
}

/// `c_q = Tr ρ^q`.
pub fn escort_normalization(rho: &DensityMatrix, q: EntropicIndex) -> f64 {
    if q.near_one() {
        1.0
    } else {
        rho.power_trace(q.0)
    }
}

/// `Tr(ρ^q Ln_q ρ^{-1}) / Tr(ρ^q)`, evaluated as a spectral sum.
pub fn tsallis_entropy_normalized(rho: &DensityMatrix, q: EntropicIndex) -> EntropyValue {
    if q.near_one() {
        return von_neumann_entropy(rho);
    }
    let p = rho.probabilities();
    let (value, c_q) = normalized_tsallis_sum(p, q);
    debug_assert!({
        let closed = tsallis_closed_form(c_q, q.0);
        let cancellation = 1.0_f64.max(1.0 / (q.0 - 1.0).abs());
        (value - closed).abs() <= 1e-12 * cancellation
    });
    EntropyValue(value)
}

/// Returns `(S_q, c_q)` for a probability vector.
pub(crate) fn normalized_tsallis_sum(p: &[f64], q: EntropicIndex) -> (f64, f64) {
    let mut num = 0.0;
    let mut c_q = 0.0;
    for &x in p.iter().filter(|&&x| x > 0.0) {
        let w = x.powf(q.0);
        num += w * ln_q_unchecked(1.0 / x, q);
        c_q += w;
    }
    (num / c_q, c_q)
}

/// `(1 - 1/c_q)/(1 - q)`.
pub fn tsallis_closed_form(c_q: f64, q: f64) -> f64 {
    (1.0 - 1.0 / c_q) / (1.0 - q)
}

/// Umegaki relative entropy `Tr ρ(ln ρ - ln σ)`.
pub fn kl_divergence(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<Divergence> {
    check_same_dim(rho.dim(), sigma.dim())?;
    let p = rho.probabilities();
    let r = sigma.probabilities();
    let w = overlap_weights(rho.spectrum(), sigma.spectrum());
    if violates_support(p, r, &w) {
        return Ok(Divergence::Infinite);
    }
    let mut cross = 0.0;
    for (a, &pa) in p.iter().enumerate() {
        if pa == 0.0 {
            continue;
        }
        for (b, &rb) in r.iter().enumerate() {
            if rb > 0.0 {
                cross += pa * w[(a, b)] * rb.ln();
            }
        }
    }
    Ok(Divergence::Finite(-shannon(p) - cross))
}

/// `Tr[ρ^q (Ln_q σ^{-1} - Ln_q ρ^{-1})] / Tr ρ^q`.
///
/// For `q < 1` null directions of `σ` contribute through `Ln_q(∞) = 1/(1-q)`
/// and the value stays finite; for `q ≥ 1` they produce the infinite signal.
pub fn q_kl_divergence(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    q: EntropicIndex,
) -> Result<Divergence> {
    if q.near_one() {
        return kl_divergence(rho, sigma);
    }
    let (value, c_q) = match q_kl_trace(rho, sigma, q)? {
        Some(v) => v,
        None => return Ok(Divergence::Infinite),
    };
    Ok(Divergence::Finite(value / c_q))
}

/// Unnormalized trace `Tr[ρ^q (Ln_q σ^{-1} - Ln_q ρ^{-1})]` and `c_q`.
/// `None` when the value is infinite.
fn q_kl_trace(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    q: EntropicIndex,
) -> Result<Option<(f64, f64)>> {
    check_same_dim(rho.dim(), sigma.dim())?;
    let p = rho.probabilities();
    let r = sigma.probabilities();
    let w = overlap_weights(rho.spectrum(), sigma.spectrum());
    if q.0 > 1.0 && violates_support(p, r, &w) {
        return Ok(None);
    }
    let ln_r: Vec<f64> = r.iter().map(|&x| ln_q_inv(x, q)).collect();
    let mut total = 0.0;
    let mut c_q = 0.0;
    for (a, &pa) in p.iter().enumerate() {
        if pa == 0.0 {
            continue;
        }
        let weight = pa.powf(q.0);
        let mut reference = 0.0;
        for (b, &lb) in ln_r.iter().enumerate() {
            // null directions of σ only matter below q = 1; above it the
            // support check has already bounded their mass
            if r[b] > 0.0 || q.0 < 1.0 {
                reference += w[(a, b)] * lb;
            }
        }
        total += weight * (reference - ln_q_inv(pa, q));
        c_q += weight;
    }
    Ok(Some((total, c_q)))
}

fn violates_support(p: &[f64], r: &[f64], w: &nalgebra::DMatrix<f64>) -> bool {
    r.iter().enumerate().any(|(b, &rb)| {
        rb == 0.0
            && p.iter()
                .enumerate()
                .map(|(a, &pa)| pa * w[(a, b)])
                .sum::<f64>()
                > SUPPORT_TOL
    })
}

/// Normalized q-expectation `Tr(ρ^q A) / Tr(ρ^q)`; `Tr(ρ A)` at `q = 1`.
pub fn escort_expectation(
    rho: &DensityMatrix,
    observable: &HermitianOperator,
    q: EntropicIndex,
) -> Result<f64> {
    check_same_dim(rho.dim(), observable.dim())?;
    let diag = observable.diagonal_in(rho.spectrum().eigenvectors());
    let p = rho.probabilities();
    if q.near_one() {
        return Ok(p.iter().zip(&diag).map(|(x, a)| x * a).sum());
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (&x, &a) in p.iter().zip(&diag) {
        if x > 0.0 {
            let w = x.powf(q.0);
            num += w * a;
            den += w;
        }
    }
    Ok(num / den)
}

/// `S[A⊗B] - S[A] - S[B] - (q-1) S[A] S[B]` for the normalized Tsallis
/// entropy. The cross term is dropped on the near-one branch, where all
/// three entropies are von Neumann entropies.
pub fn pseudo_additivity_defect(a: &DensityMatrix, b: &DensityMatrix, q: EntropicIndex) -> f64 {
    let joint = crate::operator::tensor_product(a, b);
    let s_ab = tsallis_entropy_normalized(&joint, q).0;
    let s_a = tsallis_entropy_normalized(a, q).0;
    let s_b = tsallis_entropy_normalized(b, q).0;
    let coupling = if q.near_one() { 0.0 } else { q.0 - 1.0 };
    s_ab - s_a - s_b - coupling * s_a * s_b
}

/// `f(x) = 1 / Tr ρ^x`.
pub fn inverse_power_trace(rho: &DensityMatrix, x: f64) -> f64 {
    1.0 / rho.power_trace(x)
}

/// Jackson q-derivative `[f(qx) - f(x)]/(qx - x)` of `f(x) = 1/Tr ρ^x` at
/// `x = 1`. On the near-one branch the ordinary derivative `f'(1)` is
/// returned.
pub fn jackson_q_derivative_entropy(rho: &DensityMatrix, q: EntropicIndex) -> f64 {
    if q.near_one() {
        // f'(x) = -Σ p^x ln p / (Σ p^x)²
        let p = rho.probabilities();
        let t: f64 = p.iter().filter(|&&x| x > 0.0).sum();
        let dt: f64 = p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum();
        return -dt / (t * t);
    }
    let f1 = inverse_power_trace(rho, 1.0);
    let fq = inverse_power_trace(rho, q.0);
    (fq - f1) / (q.0 - 1.0)
}

/// Jackson basic number `[A]_q = (q^A - 1)/(q - 1)`; `A` on the near-one
/// branch.
pub fn jackson_basic_number(a: f64, q: EntropicIndex) -> f64 {
    if q.near_one() {
        a
    } else {
        (q.0.powf(a) - 1.0) / (q.0 - 1.0)
    }
}

/// `[A+B]_q - [A]_q - [B]_q - (q-1)[A]_q[B]_q`.
pub fn basic_number_identity_defect(a: f64, b: f64, q: EntropicIndex) -> f64 {
    let coupling = if q.near_one() { 0.0 } else { q.0 - 1.0 };
    let ja = jackson_basic_number(a, q);
    let jb = jackson_basic_number(b, q);
    jackson_basic_number(a + b, q) - ja - jb - coupling * ja * jb
}

/// The original, unnormalized forms (no division by `c_q`). They are kept
/// for negative controls only: the maximum-entropy relation does not keep
/// its q = 1 form when they are substituted.
pub mod unnormalized {
    use super::*;

    /// `Tr(ρ^q Ln_q ρ^{-1}) = (1 - c_q)/(q - 1)`.
    pub fn tsallis_entropy(rho: &DensityMatrix, q: EntropicIndex) -> f64 {
        if q.near_one() {
            return von_neumann_entropy(rho).0;
        }
        rho.probabilities()
            .iter()
            .filter(|&&x| x > 0.0)
            .map(|&x| x.powf(q.0) * ln_q_unchecked(1.0 / x, q))
            .sum()
    }

    /// `Tr[ρ^q (Ln_q σ^{-1} - Ln_q ρ^{-1})]`.
    pub fn q_kl_divergence(
        rho: &DensityMatrix,
        sigma: &DensityMatrix,
        q: EntropicIndex,
    ) -> Result<Divergence> {
        if q.near_one() {
            return kl_divergence(rho, sigma);
        }
        Ok(match q_kl_trace(rho, sigma, q)? {
            Some((v, _)) => Divergence::Finite(v),
            None => Divergence::Infinite,
        })
    }

    /// `Tr(ρ^q A)`.
    pub fn q_expectation(
        rho: &DensityMatrix,
        observable: &HermitianOperator,
        q: EntropicIndex,
    ) -> Result<f64> {
        check_same_dim(rho.dim(), observable.dim())?;
        let diag = observable.diagonal_in(rho.spectrum().eigenvectors());
        let exponent = if q.near_one() { 1.0 } else { q.0 };
        Ok(rho
            .probabilities()
            .iter()
            .zip(&diag)
            .filter(|(&x, _)| x > 0.0)
            .map(|(&x, &a)| x.powf(exponent) * a)
            .sum())
    }
}
