use nalgebra::DMatrix;

use super::curve::StateCurve;
use super::tracking::{build_eigencurve, EigenCurve};
use crate::entropy::{ln_q_inv, q_kl_divergence, Divergence, EntropicIndex};
use crate::error::{Error, Result};
use crate::operator::{DensityMatrix, C64};

/// Branches below this probability make the classical part singular.
pub const P_FLOOR: f64 = 1e-12;

/// Metric coefficients at one grid point: `ds² = g_total (dα)²`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSample {
    pub index: usize,
    pub alpha: f64,
    pub q: EntropicIndex,
    pub g_cl: f64,
    pub g_qu: f64,
    pub g_total: f64,
    /// Symmetrized-divergence estimate, when the stencil fits the grid.
    pub oracle: Option<Divergence>,
    /// `|g_total - oracle|`.
    pub deviation: Option<f64>,
    pub degenerate: bool,
    pub ambiguous: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricOptions {
    /// Oracle step; `None` uses the grid spacing.
    pub h: Option<f64>,
    pub richardson: bool,
    pub strict_degeneracy: bool,
}

/// Result for one interior grid point of a profile.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricPoint {
    pub index: usize,
    pub alpha: f64,
    pub sample: Result<MetricSample>,
}

fn check_interior(len: usize, i: usize, half_width: usize) -> Result<()> {
    if i < half_width || i + half_width >= len {
        return Err(Error::GridIndex {
            index: i,
            half_width,
            len,
        });
    }
    Ok(())
}

/// Central difference of the tracked probabilities.
fn dp(ec: &EigenCurve, i: usize) -> Result<Vec<f64>> {
    check_interior(ec.len(), i, 1)?;
    let h2 = 2.0 * ec.spacing();
    let (lo, hi) = (&ec.probabilities()[i - 1], &ec.probabilities()[i + 1]);
    Ok(lo.iter().zip(hi).map(|(a, b)| (b - a) / h2).collect())
}

fn floored(ec: &EigenCurve, i: usize) -> Result<&[f64]> {
    let p = &ec.probabilities()[i];
    if let Some((branch, &probability)) = p.iter().enumerate().find(|(_, &x)| x < P_FLOOR) {
        return Err(Error::SingularMetric {
            branch,
            probability,
        });
    }
    Ok(p)
}

/// `q Σ_a (∂p_a)²/p_a / Σ_a p_a^q`.
pub fn classical_metric(ec: &EigenCurve, i: usize, q: EntropicIndex) -> Result<f64> {
    let d = dp(ec, i)?;
    let p = floored(ec, i)?;
    let q = if q.near_one() { 1.0 } else { q.value() };
    let fisher: f64 = p.iter().zip(&d).map(|(p, d)| d * d / p).sum();
    let c_q: f64 = p.iter().map(|p| p.powf(q)).sum();
    Ok(q * fisher / c_q)
}

/// `Σ_a (∂p_a)²/p_a`, the Fisher coefficient.
pub fn fisher_metric(ec: &EigenCurve, i: usize) -> Result<f64> {
    let d = dp(ec, i)?;
    let p = floored(ec, i)?;
    Ok(p.iter().zip(&d).map(|(p, d)| d * d / p).sum())
}

/// Classical part as `4q ⟨⟨(∂ Ln_q p_a^{-1/2})²⟩⟩_q`, differentiating the
/// deformed logarithm by the chain rule.
pub fn classical_metric_escort_form(ec: &EigenCurve, i: usize, q: EntropicIndex) -> Result<f64> {
    let d = dp(ec, i)?;
    let p = floored(ec, i)?;
    let q = if q.near_one() { 1.0 } else { q.value() };
    let mut num = 0.0;
    let mut c_q = 0.0;
    for (&pa, &da) in p.iter().zip(&d) {
        let x = pa.powf(-0.5);
        let dx = -0.5 * pa.powf(-1.5) * da;
        let dlog = x.powf(q - 2.0) * dx;
        let w = pa.powf(q);
        num += w * dlog * dlog;
        c_q += w;
    }
    Ok(4.0 * q * num / c_q)
}

/// Symmetrized `w_{a'a} = (|⟨a'|∂a⟩|² + |⟨a|∂a'⟩|²)/2` from central
/// differences of the gauge-aligned kets. Exact derivatives make the matrix
/// `⟨a'|∂a⟩` anti-Hermitian, so both halves agree to `O(h²)`.
fn rotation_weights(ec: &EigenCurve, i: usize) -> Result<DMatrix<f64>> {
    check_interior(ec.len(), i, 1)?;
    let h2 = C64::new(2.0 * ec.spacing(), 0.0);
    let deriv = (&ec.bases()[i + 1] - &ec.bases()[i - 1]) / h2;
    let t = ec.bases()[i].adjoint() * deriv;
    let n = t.nrows();
    Ok(DMatrix::from_fn(n, n, |a, b| {
        if a == b {
            0.0
        } else {
            0.5 * (t[(a, b)].norm_sqr() + t[(b, a)].norm_sqr())
        }
    }))
}

/// `2/Σp^q · Σ_{a≠a'} |⟨a'|∂a⟩|² p_a^q [Ln_q(1/p_{a'}) - Ln_q(1/p_a)]`.
pub fn quantum_metric(ec: &EigenCurve, i: usize, q: EntropicIndex) -> Result<f64> {
    let w = rotation_weights(ec, i)?;
    let p = &ec.probabilities()[i];
    let qv = if q.near_one() { 1.0 } else { q.value() };
    let pq: Vec<f64> = p.iter().map(|x| x.powf(qv)).collect();
    let ln: Vec<f64> = p.iter().map(|&x| ln_q_inv(x, q)).collect();
    let mut total = 0.0;
    for a in 0..p.len() {
        if pq[a] == 0.0 {
            continue;
        }
        for b in 0..p.len() {
            if w[(b, a)] == 0.0 || p[a] == p[b] {
                continue;
            }
            total += w[(b, a)] * pq[a] * (ln[b] - ln[a]);
        }
    }
    Ok(2.0 * total / pq.iter().sum::<f64>())
}

/// `2 Σ_{a≠a'} |⟨a'|∂a⟩|² p_a (ln p_a - ln p_{a'})`.
pub fn quantum_metric_q1(ec: &EigenCurve, i: usize) -> Result<f64> {
    let w = rotation_weights(ec, i)?;
    let p = &ec.probabilities()[i];
    let mut total = 0.0;
    for (a, &pa) in p.iter().enumerate() {
        if pa == 0.0 {
            continue;
        }
        for (b, &pb) in p.iter().enumerate() {
            if w[(b, a)] == 0.0 || pa == pb {
                continue;
            }
            total += w[(b, a)] * pa * (pa.ln() - pb.ln());
        }
    }
    Ok(2.0 * total)
}

/// Symmetrized divergence `K_q(ρ, σ) + K_q(σ, ρ)`.
fn symmetric(a: &DensityMatrix, b: &DensityMatrix, q: EntropicIndex) -> Result<Divergence> {
    match (q_kl_divergence(a, b, q)?, q_kl_divergence(b, a, q)?) {
        (Divergence::Finite(x), Divergence::Finite(y)) => Ok(Divergence::Finite(x + y)),
        _ => Ok(Divergence::Infinite),
    }
}

/// Second-order estimate of the metric from the symmetrized divergence:
/// `[J(ρ(α), ρ(α+h)) + J(ρ(α-h), ρ(α))] / (2h²)`.
///
/// Each quotient alone is centred at `α ± h/2` and carries an `O(h)` bias;
/// averaging the two removes it. `richardson` combines steps `h` and `h/2`
/// as `(4G(h/2) - G(h))/3`.
///
/// Built-in families are evaluated off-grid, so any `h` works. Sampled
/// curves need `h` to be a multiple of the spacing (an even multiple with
/// `richardson`); the default is the spacing, or twice it with
/// `richardson`.
pub fn metric_from_divergence(
    curve: &StateCurve,
    i: usize,
    q: EntropicIndex,
    h: Option<f64>,
    richardson: bool,
) -> Result<Divergence> {
    check_interior(curve.len(), i, 0)?;
    let spacing = curve.spacing();
    let alpha = curve.alphas()[i];
    let state_at = |offset: f64| -> Result<DensityMatrix> {
        if let Some(family) = curve.family() {
            return family.state_at(alpha + offset);
        }
        let k = (offset / spacing).round();
        if (k * spacing - offset).abs() > 1e-9 * spacing || k.abs() > curve.len() as f64 {
            return Err(Error::InvalidCurve(format!(
                "step {offset} is not a multiple of the grid spacing {spacing}"
            )));
        }
        let j = i as i64 + k as i64;
        if j < 0 || j >= curve.len() as i64 {
            return Err(Error::GridIndex {
                index: i,
                half_width: k.abs() as usize,
                len: curve.len(),
            });
        }
        Ok(curve.states()[j as usize].clone())
    };
    let h = match h {
        Some(h) if !(h > 0.0 && h.is_finite()) => {
            return Err(Error::Domain(format!("step h must be positive, got {h}")))
        }
        Some(h) => h,
        None if richardson && curve.family().is_none() => 2.0 * spacing,
        None => spacing,
    };
    let centre = &curve.states()[i];
    let g = |h: f64| -> Result<Divergence> {
        let ahead = symmetric(centre, &state_at(h)?, q)?;
        let behind = symmetric(&state_at(-h)?, centre, q)?;
        Ok(match (ahead, behind) {
            (Divergence::Finite(x), Divergence::Finite(y)) => {
                Divergence::Finite((x + y) / (2.0 * h * h))
            }
            _ => Divergence::Infinite,
        })
    };
    let coarse = g(h)?;
    if !richardson {
        return Ok(coarse);
    }
    Ok(match (coarse, g(0.5 * h)?) {
        (Divergence::Finite(c), Divergence::Finite(f)) => Divergence::Finite((4.0 * f - c) / 3.0),
        _ => Divergence::Infinite,
    })
}

/// Both metric parts plus the oracle at interior point `i`.
pub fn metric_at(
    curve: &StateCurve,
    ec: &EigenCurve,
    i: usize,
    q: EntropicIndex,
    options: &MetricOptions,
) -> Result<MetricSample> {
    let g_cl = classical_metric(ec, i, q)?;
    let g_qu = quantum_metric(ec, i, q)?;
    let g_total = g_cl + g_qu;
    let oracle = metric_from_divergence(curve, i, q, options.h, options.richardson).ok();
    let deviation = oracle.map(|o| match o {
        Divergence::Finite(v) => (g_total - v).abs(),
        Divergence::Infinite => f64::INFINITY,
    });
    let (degenerate, ambiguous) = ec.flagged_near(i);
    Ok(MetricSample {
        index: i,
        alpha: curve.alphas()[i],
        q,
        g_cl,
        g_qu,
        g_total,
        oracle,
        deviation,
        degenerate,
        ambiguous,
    })
}

/// Metric at every interior grid point. Per-point failures are kept in the
/// returned list; only tracking failures in strict mode abort.
pub fn metric_profile(
    curve: &StateCurve,
    q: EntropicIndex,
    options: &MetricOptions,
) -> Result<Vec<MetricPoint>> {
    let ec = build_eigencurve(curve, options.strict_degeneracy)?;
    Ok((1..curve.len() - 1)
        .map(|i| MetricPoint {
            index: i,
            alpha: curve.alphas()[i],
            sample: metric_at(curve, &ec, i, q, options),
        })
        .collect())
}
