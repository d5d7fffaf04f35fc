//! Maximum-entropy states: the q = 1 Gibbs state and the self-consistent
//! nonextensive equilibrium
//!
//! ```text
//! ρ' = [1 - (1-q) β c_q (H - U_q)]_+^{1/(1-q)} / Z_q,
//! Z_q = Tr [1 - (1-q) β c_q (H - U_q)]_+^{1/(1-q)},
//! ```
//!
//! with `U_q = Tr(ρ'^q H)/c_q` and `c_q = Tr ρ'^q` evaluated at the solution
//! itself. The pair `(U_q, c_q)` is the fixed-point variable; at the fixed
//! point `c_q = Z_q^{1-q}` holds identically. Negative eigenvalues of the
//! bracket are clamped to zero (Tsallis cutoff).
//!
//! Everything commutes with `H`, so the solver works on populations in the
//! Hamiltonian eigenbasis.

use crate::entropy::{
    escort_expectation, q_kl_divergence, tsallis_entropy_normalized, unnormalized, Divergence,
    EntropicIndex, SUPPORT_TOL,
};
use crate::error::{Error, Result};
use crate::operator::{check_same_dim, DensityMatrix, HermitianOperator};

/// Largest `ln Z_1` accepted before reporting overflow.
const LN_OVERFLOW: f64 = 709.0;

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    MaximallyMixed,
    GibbsQ1,
    Custom(DensityMatrix),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// Fraction of the map's update taken per step; 1 is plain substitution.
    pub damping: f64,
    pub init: Init,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 10_000,
            damping: 0.5,
            init: Init::GibbsQ1,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(Error::Domain(format!("tol must be > 0, got {}", self.tol)));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Domain(format!(
                "damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::Domain("max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// Solved maximum-entropy state and its thermodynamic bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumState {
    pub rho_eq: DensityMatrix,
    pub hamiltonian: HermitianOperator,
    pub beta: f64,
    pub q: EntropicIndex,
    pub z_q: f64,
    pub c_q: f64,
    pub u_q: f64,
    pub iterations: usize,
    pub residual: f64,
    /// Eigenvalues of `H`, ascending.
    pub energies: Vec<f64>,
    /// Equilibrium populations paired with `energies`.
    pub populations: Vec<f64>,
}

impl EquilibriumState {
    /// Number of levels with nonzero population.
    pub fn support_size(&self) -> usize {
        self.populations.iter().filter(|&&p| p > 0.0).count()
    }

    /// `|c_q - Z_q^{1-q}| / c_q`.
    pub fn partition_identity_error(&self) -> f64 {
        let z_pow = if self.q.near_one() {
            1.0
        } else {
            self.z_q.powf(1.0 - self.q.value())
        };
        (self.c_q - z_pow).abs() / self.c_q
    }
}

/// `exp(-βH)/Tr exp(-βH)` built spectrally. `Z_q` carries
/// `Tr exp[-β(H - U_1)]`, `c_q = 1`, `U_q = Tr(ρH)`.
pub fn gibbs_state(hamiltonian: &HermitianOperator, beta: f64) -> Result<EquilibriumState> {
    if !beta.is_finite() {
        return Err(Error::Domain(format!("beta must be finite, got {beta}")));
    }
    let spectrum = hamiltonian.decompose();
    let energies = spectrum.eigenvalues().to_vec();
    let populations = gibbs_populations(&energies, beta);
    let u = dot(&populations, &energies);

    let shift = gibbs_shift(&energies, beta);
    let weight_sum: f64 = energies.iter().map(|e| (-beta * (e - shift)).exp()).sum();
    let ln_z = beta * (u - shift) + weight_sum.ln();
    if !(ln_z <= LN_OVERFLOW) {
        return Err(Error::Overflow(format!(
            "partition function exp({ln_z:.1}) overflows; reduce beta * spread(H)"
        )));
    }

    let rho_eq =
        DensityMatrix::from_spectrum(populations.clone(), spectrum.eigenvectors().clone())?;
    Ok(EquilibriumState {
        rho_eq,
        hamiltonian: hamiltonian.clone(),
        beta,
        q: EntropicIndex::ONE,
        z_q: ln_z.exp(),
        c_q: 1.0,
        u_q: u,
        iterations: 0,
        residual: 0.0,
        energies,
        populations,
    })
}

fn gibbs_shift(energies: &[f64], beta: f64) -> f64 {
    if beta >= 0.0 {
        energies.iter().copied().fold(f64::INFINITY, f64::min)
    } else {
        energies.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

fn gibbs_populations(energies: &[f64], beta: f64) -> Vec<f64> {
    let shift = gibbs_shift(energies, beta);
    let w: Vec<f64> = energies
        .iter()
        .map(|e| (-beta * (e - shift)).exp())
        .collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

/// Self-consistent nonextensive maximum-entropy state by damped fixed-point
/// iteration on `(U_q, c_q)`. `q` on the near-one branch is redirected to
/// [`gibbs_state`].
pub fn solve_equilibrium(
    hamiltonian: &HermitianOperator,
    beta: f64,
    q: EntropicIndex,
    cfg: &SolverConfig,
) -> Result<EquilibriumState> {
    if q.near_one() {
        return gibbs_state(hamiltonian, beta);
    }
    cfg.validate()?;
    if !beta.is_finite() {
        return Err(Error::Domain(format!("beta must be finite, got {beta}")));
    }
    let spectrum = hamiltonian.decompose();
    let energies = spectrum.eigenvalues().to_vec();
    let qv = q.value();

    let (mut u, mut c) = match &cfg.init {
        Init::MaximallyMixed => {
            let n = energies.len() as f64;
            (energies.iter().sum::<f64>() / n, n.powf(1.0 - qv))
        }
        Init::GibbsQ1 => escort_moments(&gibbs_populations(&energies, beta), &energies, qv),
        Init::Custom(rho) => {
            check_same_dim(rho.dim(), hamiltonian.dim())?;
            (
                escort_expectation(rho, hamiltonian, q)?,
                rho.power_trace(qv),
            )
        }
    };

    let mut previous: Option<Vec<f64>> = None;
    let mut residual = f64::INFINITY;
    for iteration in 1..=cfg.max_iter {
        let (populations, z) = bracket_populations(&energies, beta, qv, u, c)?;
        let (u_new, c_new) = escort_moments(&populations, &energies, qv);
        let moved = previous
            .as_ref()
            .map_or(f64::INFINITY, |prev| half_l1(prev, &populations));
        residual = (u_new - u).abs().max((c_new - c).abs()).max(moved);

        if residual < cfg.tol {
            let rho_eq =
                DensityMatrix::from_spectrum(populations.clone(), spectrum.eigenvectors().clone())?;
            return Ok(EquilibriumState {
                rho_eq,
                hamiltonian: hamiltonian.clone(),
                beta,
                q,
                z_q: z,
                c_q: c_new,
                u_q: u_new,
                iterations: iteration,
                residual,
                energies,
                populations,
            });
        }
        u += cfg.damping * (u_new - u);
        c += cfg.damping * (c_new - c);
        previous = Some(populations);
    }
    Err(Error::NonConvergence {
        iterations: cfg.max_iter,
        residual,
        last_probabilities: previous.unwrap_or_default(),
    })
}

/// Populations `b_+^{1/(1-q)} / Z` and `Z` for the current `(U, c)`.
fn bracket_populations(
    energies: &[f64],
    beta: f64,
    q: f64,
    u: f64,
    c: f64,
) -> Result<(Vec<f64>, f64)> {
    let exponent = 1.0 / (1.0 - q);
    let weights: Vec<f64> = energies
        .iter()
        .map(|e| {
            let b = 1.0 - (1.0 - q) * beta * c * (e - u);
            if b > 0.0 {
                b.powf(exponent)
            } else {
                0.0
            }
        })
        .collect();
    let z: f64 = weights.iter().sum();
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::Overflow(format!(
            "generalized partition function is {z} at U = {u}, c = {c}"
        )));
    }
    Ok((weights.iter().map(|w| w / z).collect(), z))
}

/// `(Σ p^q ε / Σ p^q, Σ p^q)`.
fn escort_moments(populations: &[f64], energies: &[f64], q: f64) -> (f64, f64) {
    let mut num = 0.0;
    let mut den = 0.0;
    for (&p, &e) in populations.iter().zip(energies) {
        if p > 0.0 {
            let w = p.powf(q);
            num += w * e;
            den += w;
        }
    }
    (num / den, den)
}

fn half_l1(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solution from the default initialization plus the trace distance to the
/// solution reached from the other standard initialization.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiStart {
    pub state: EquilibriumState,
    pub alternate: Option<EquilibriumState>,
    pub disagreement: f64,
}

impl MultiStart {
    pub const DISAGREEMENT_TOL: f64 = 1e-6;

    /// True when the two starts reached different fixed points.
    pub fn flagged(&self) -> bool {
        self.disagreement > Self::DISAGREEMENT_TOL
    }
}

/// Solves from `gibbs_q1` and `maximally_mixed` and compares the results.
/// Fails only if the primary start fails; a failing alternate start is
/// reported as `alternate = None` with infinite disagreement.
pub fn solve_equilibrium_multistart(
    hamiltonian: &HermitianOperator,
    beta: f64,
    q: EntropicIndex,
    cfg: &SolverConfig,
) -> Result<MultiStart> {
    let primary = SolverConfig {
        init: Init::GibbsQ1,
        ..cfg.clone()
    };
    let alternate = SolverConfig {
        init: Init::MaximallyMixed,
        ..cfg.clone()
    };
    let state = solve_equilibrium(hamiltonian, beta, q, &primary)?;
    let other = solve_equilibrium(hamiltonian, beta, q, &alternate).ok();
    let disagreement = match &other {
        Some(o) => half_l1(&state.populations, &o.populations),
        None => f64::INFINITY,
    };
    Ok(MultiStart {
        state,
        alternate: other,
        disagreement,
    })
}

/// Both sides of the maximum-entropy relation
/// `K_q[ρ, ρ'] = S_q[ρ'] - S_q[ρ] + β ⟨H - U_q⟩_q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxentRelation {
    /// `K_q[ρ, ρ']`; infinite when `ρ` leaves the equilibrium support.
    pub divergence: Divergence,
    /// Left side minus right side; `None` when the divergence is infinite.
    pub defect: Option<f64>,
}

/// Evaluates both sides of the relation independently and returns their
/// difference together with the divergence.
pub fn maxent_relation_defect(
    rho: &DensityMatrix,
    eq: &EquilibriumState,
) -> Result<MaxentRelation> {
    check_same_dim(rho.dim(), eq.rho_eq.dim())?;
    if leaves_support(rho, eq) {
        return Ok(MaxentRelation {
            divergence: Divergence::Infinite,
            defect: None,
        });
    }
    let q = eq.q;
    let k = q_kl_divergence(rho, &eq.rho_eq, q)?;
    let Some(k_value) = k.finite() else {
        return Ok(MaxentRelation {
            divergence: k,
            defect: None,
        });
    };
    let rhs = tsallis_entropy_normalized(&eq.rho_eq, q).value()
        - tsallis_entropy_normalized(rho, q).value()
        + eq.beta * (escort_expectation(rho, &eq.hamiltonian, q)? - eq.u_q);
    Ok(MaxentRelation {
        divergence: k,
        defect: Some(k_value - rhs),
    })
}

/// The same relation with the original, unnormalized entropy, divergence
/// and q-expectation. Used as a negative control: the relation does not
/// hold in this form.
pub fn maxent_relation_defect_unnormalized(
    rho: &DensityMatrix,
    eq: &EquilibriumState,
) -> Result<MaxentRelation> {
    check_same_dim(rho.dim(), eq.rho_eq.dim())?;
    if leaves_support(rho, eq) {
        return Ok(MaxentRelation {
            divergence: Divergence::Infinite,
            defect: None,
        });
    }
    let q = eq.q;
    let k = unnormalized::q_kl_divergence(rho, &eq.rho_eq, q)?;
    let Some(k_value) = k.finite() else {
        return Ok(MaxentRelation {
            divergence: k,
            defect: None,
        });
    };
    let c_rho = if q.near_one() {
        1.0
    } else {
        rho.power_trace(q.value())
    };
    let energy = unnormalized::q_expectation(rho, &eq.hamiltonian, q)? - eq.u_q * c_rho;
    let rhs = unnormalized::tsallis_entropy(&eq.rho_eq, q) - unnormalized::tsallis_entropy(rho, q)
        + eq.beta * energy;
    Ok(MaxentRelation {
        divergence: k,
        defect: Some(k_value - rhs),
    })
}

/// True when `ρ` puts more than [`SUPPORT_TOL`] weight on an unpopulated
/// Hamiltonian level.
fn leaves_support(rho: &DensityMatrix, eq: &EquilibriumState) -> bool {
    let basis = eq.rho_eq.spectrum();
    let diag = rho.operator().diagonal_in(basis.eigenvectors());
    basis
        .eigenvalues()
        .iter()
        .zip(&diag)
        .any(|(&p, &m)| p == 0.0 && m > SUPPORT_TOL)
}
