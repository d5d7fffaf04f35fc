use nalgebra::{DMatrix, DVector};

use super::curve::StateCurve;
use crate::error::{Error, Result};
use crate::operator::C64;

/// Eigenvalues closer than this (times `max(1, |λ|)`) share a cluster.
pub const CLUSTER_TOL: f64 = 1e-10;
/// Assignment is ambiguous when a branch's two best overlaps differ by less.
pub const AMBIGUITY_GAP: f64 = 0.1;
/// Minimal `|⟨a(α_i)|a(α_{i+1})⟩|` for a continuous branch.
pub const CONTINUITY_MIN: f64 = 0.9;

/// Eigenbranches followed along a [`StateCurve`].
///
/// Column `a` of `bases()[i]` is branch `a` at grid point `i`; its
/// probability is `probabilities()[i][a]`. Branch order is fixed by the first
/// grid point, so probabilities are not sorted after it.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenCurve {
    alphas: Vec<f64>,
    spacing: f64,
    probabilities: Vec<Vec<f64>>,
    bases: Vec<DMatrix<C64>>,
    degenerate: Vec<bool>,
    ambiguous: Vec<bool>,
}

impl EigenCurve {
    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn probabilities(&self) -> &[Vec<f64>] {
        &self.probabilities
    }

    pub fn bases(&self) -> &[DMatrix<C64>] {
        &self.bases
    }

    /// Point `i` has a degenerate eigenvalue cluster.
    pub fn is_degenerate(&self, i: usize) -> bool {
        self.degenerate[i]
    }

    /// The step from point `i` to `i + 1` was ambiguous or broke continuity.
    pub fn is_ambiguous_step(&self, i: usize) -> bool {
        self.ambiguous[i]
    }

    /// Any degeneracy or tracking ambiguity within the stencil around `i`.
    pub fn flagged_near(&self, i: usize) -> (bool, bool) {
        let lo = i.saturating_sub(1);
        let hi = (i + 1).min(self.len() - 1);
        let degenerate = self.degenerate[lo..=hi].iter().any(|&d| d);
        let ambiguous = self.ambiguous[lo..hi].iter().any(|&d| d);
        (degenerate, ambiguous)
    }
}

/// Tracks eigenbranches along the curve by greedy maximal overlap and fixes
/// the phase of each branch so that consecutive overlaps are real and
/// non-negative. With `strict` an ambiguous step is an error instead of a
/// flag.
pub fn build_eigencurve(curve: &StateCurve, strict: bool) -> Result<EigenCurve> {
    let n = curve.len();
    let mut probabilities = Vec::with_capacity(n);
    let mut bases = Vec::with_capacity(n);
    let mut degenerate = Vec::with_capacity(n);
    let mut ambiguous = vec![false; n];

    let first = curve.states()[0].spectrum();
    probabilities.push(first.eigenvalues().to_vec());
    bases.push(first.eigenvectors().clone());
    degenerate.push(!clusters(first.eigenvalues()).iter().all(|c| c.len() == 1));

    for i in 1..n {
        let spectrum = curve.states()[i].spectrum();
        let prev = &bases[i - 1];
        let p = spectrum.eigenvalues();
        let mut vecs = spectrum.eigenvectors().clone();

        let groups = clusters(p);
        let has_cluster = groups.iter().any(|c| c.len() > 1);
        for group in groups.iter().filter(|c| c.len() > 1) {
            align_cluster(prev, &mut vecs, group);
        }
        degenerate.push(has_cluster);

        let overlaps = (prev.adjoint() * &vecs).map(|z| z.norm_sqr());
        let assignment = greedy_assignment(&overlaps);
        let step_ambiguous = (0..overlaps.nrows()).any(|a| {
            let mut row: Vec<f64> = overlaps.row(a).iter().copied().collect();
            row.sort_by(|x, y| y.total_cmp(x));
            row.len() > 1 && row[0] - row[1] < AMBIGUITY_GAP
        });

        let mut next = DMatrix::<C64>::zeros(vecs.nrows(), vecs.ncols());
        let mut next_p = vec![0.0; p.len()];
        let mut continuous = true;
        for (a, &b) in assignment.iter().enumerate() {
            let prev_a = prev.column(a);
            let mut v: DVector<C64> = vecs.column(b).into_owned();
            let z = prev_a.dotc(&v);
            if z.norm() > 0.0 {
                v *= z.conj() / z.norm();
            }
            continuous &= z.norm() > CONTINUITY_MIN;
            next.set_column(a, &v);
            next_p[a] = p[b];
        }
        if step_ambiguous || !continuous {
            if strict {
                return Err(Error::AmbiguousTracking(i - 1, i));
            }
            ambiguous[i - 1] = true;
        }
        probabilities.push(next_p);
        bases.push(next);
    }

    Ok(EigenCurve {
        alphas: curve.alphas().to_vec(),
        spacing: curve.spacing(),
        probabilities,
        bases,
        degenerate,
        ambiguous,
    })
}

/// Index groups of (ascending) eigenvalues within [`CLUSTER_TOL`].
fn clusters(values: &[f64]) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    for (k, &v) in values.iter().enumerate() {
        match out.last_mut() {
            Some(group) if v - values[group[0]] <= CLUSTER_TOL * v.abs().max(1.0) => group.push(k),
            _ => out.push(vec![k]),
        }
    }
    out
}

/// Inside a degenerate cluster any orthonormal basis is valid. Replace it by
/// the projections of the previous branches that overlap the cluster most,
/// orthonormalized in order of decreasing overlap.
fn align_cluster(prev: &DMatrix<C64>, vecs: &mut DMatrix<C64>, group: &[usize]) {
    let cols: Vec<DVector<C64>> = group.iter().map(|&k| vecs.column(k).into_owned()).collect();
    let sub = DMatrix::from_columns(&cols);
    let proj = &sub * sub.adjoint();
    let mut weights: Vec<(usize, f64)> = (0..prev.ncols())
        .map(|a| (a, (sub.adjoint() * prev.column(a)).norm_squared()))
        .collect();
    weights.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));

    let mut built: Vec<DVector<C64>> = Vec::with_capacity(group.len());
    for &(a, _) in &weights {
        if built.len() == group.len() {
            break;
        }
        let mut v = &proj * prev.column(a);
        for u in &built {
            let c = u.dotc(&v);
            v -= u * c;
        }
        let norm = v.norm();
        if norm > 1e-8 {
            built.push(v / C64::new(norm, 0.0));
        }
    }
    // fall back to the original cluster vectors if projections were too thin
    for c in &cols {
        if built.len() == group.len() {
            break;
        }
        let mut v = c.clone();
        for u in &built {
            let coef = u.dotc(&v);
            v -= u * coef;
        }
        let norm = v.norm();
        if norm > 1e-8 {
            built.push(v / C64::new(norm, 0.0));
        }
    }
    for (&k, v) in group.iter().zip(&built) {
        vecs.set_column(k, v);
    }
}

/// `assignment[a] = b` pairing previous branch `a` with new vector `b`,
/// taking the largest remaining overlap first. Ties go to lower indices.
fn greedy_assignment(overlaps: &DMatrix<f64>) -> Vec<usize> {
    let n = overlaps.nrows();
    let mut pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).collect();
    pairs.sort_by(|&(a1, b1), &(a2, b2)| {
        overlaps[(a2, b2)]
            .total_cmp(&overlaps[(a1, b1)])
            .then(a1.cmp(&a2))
            .then(b1.cmp(&b2))
    });
    let mut assignment = vec![usize::MAX; n];
    let mut taken = vec![false; n];
    for (a, b) in pairs {
        if assignment[a] == usize::MAX && !taken[b] {
            assignment[a] = b;
            taken[b] = true;
        }
    }
    assignment
}
