//! Deciding when two parameter matrices give the same structure up to the
//! natural symmetries: permuting fiber slots, flipping slot signs, and an
//! orthogonal change of the acting directions.
//!
//! `θ₂ ≈ P S θ₁ A` with `P` a permutation, `S = diag(±1)`, `A ∈ O(k)`.
//! For fixed `(P, S)` the best `A` is the orthogonal Procrustes solution,
//! so the search is exact: enumerate `(P, S)` with norm pruning, solve for
//! `A`, accept on residual. Cheap necessary invariants come first.

use crate::error::HkError;
use crate::spec::GroupSpec;
use crate::Result;
use nalgebra::DMatrix;
use serde::Serialize;

/// Residual bound for accepting a witness.
pub const MONOMIAL_TOL: f64 = 1e-9;

/// Largest slot count the exhaustive search will take on.
pub const MAX_SEARCH_SLOTS: usize = 8;

/// Cheap necessary invariants of the symmetry class.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct EquivalenceInvariants {
    pub s: usize,
    pub k: usize,
    pub q: usize,
    /// Row norms of θ, ascending.
    pub row_norms: Vec<f64>,
    /// Eigenvalues of θᵗθ, ascending.
    pub gram_eigenvalues: Vec<f64>,
}

pub fn invariants(spec: &GroupSpec) -> EquivalenceInvariants {
    let theta = spec.theta();
    let mut row_norms: Vec<f64> = (0..spec.q()).map(|b| theta.row(b).norm()).collect();
    row_norms.sort_by(f64::total_cmp);
    let gram = theta.transpose() * theta;
    let mut gram_eigenvalues: Vec<f64> =
        gram.symmetric_eigen().eigenvalues.iter().copied().collect();
    gram_eigenvalues.sort_by(f64::total_cmp);
    EquivalenceInvariants {
        s: spec.s(),
        k: spec.k(),
        q: spec.q(),
        row_norms,
        gram_eigenvalues,
    }
}

impl EquivalenceInvariants {
    /// Whether the invariants are indistinguishable at tolerance `tol`.
    pub fn matches(&self, other: &Self, tol: f64) -> bool {
        self.s == other.s
            && self.k == other.k
            && self.q == other.q
            && pairwise_close(&self.row_norms, &other.row_norms, tol)
            && pairwise_close(&self.gram_eigenvalues, &other.gram_eigenvalues, tol)
    }
}

fn pairwise_close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(u, v)| (u - v).abs() <= tol)
}

/// Witness of a symmetry relating two parameter matrices:
/// `θ₂ = P S θ₁ A` where row β of `P S θ₁` is `sign[β] · θ₁[source[β]]`.
#[derive(Debug, Clone, Serialize)]
pub struct MonomialWitness {
    /// Source slot feeding each target row.
    pub source: Vec<usize>,
    pub signs: Vec<i8>,
    /// Orthogonal k×k change of the acting directions.
    pub rotation: DMatrix<f64>,
    /// Max-entry residual of the reconstruction.
    pub residual: f64,
}

impl MonomialWitness {
    /// Reconstruct the image of `theta` under the witness.
    pub fn apply(&self, theta: &DMatrix<f64>) -> DMatrix<f64> {
        let q = self.source.len();
        let k = theta.ncols();
        let mut permuted = DMatrix::zeros(q, k);
        for (beta, &src) in self.source.iter().enumerate() {
            for c in 0..k {
                permuted[(beta, c)] = f64::from(self.signs[beta]) * theta[(src, c)];
            }
        }
        permuted * &self.rotation
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    fn heap(k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(cur.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, cur, out);
            if k.is_multiple_of(2) {
                cur.swap(i, k - 1);
            } else {
                cur.swap(0, k - 1);
            }
        }
    }
    heap(n, &mut cur, &mut out);
    out
}

/// Search for a symmetry taking `a` to `b`. `None` means no witness exists
/// at [`MONOMIAL_TOL`]; shape disagreement is already a `None`.
pub fn equivalent_monomial(a: &GroupSpec, b: &GroupSpec) -> Result<Option<MonomialWitness>> {
    if a.mode() != b.mode() {
        return Err(HkError::SpecInvalid(
            "cannot compare different fiber modes".into(),
        ));
    }
    let q = a.q();
    if q > MAX_SEARCH_SLOTS {
        return Err(HkError::ProblemTooLarge(format!(
            "monomial search over {q}! permutations (limit {MAX_SEARCH_SLOTS} slots)"
        )));
    }
    if (a.s(), a.k(), a.q()) != (b.s(), b.k(), b.q()) {
        return Ok(None);
    }
    let inv_a = invariants(a);
    let inv_b = invariants(b);
    if !inv_a.matches(&inv_b, 1e-6) {
        return Ok(None);
    }

    let ta = a.theta().clone();
    let tb = b.theta().clone();
    let k = a.k();
    let norms_a: Vec<f64> = (0..q).map(|r| ta.row(r).norm()).collect();
    let norms_b: Vec<f64> = (0..q).map(|r| tb.row(r).norm()).collect();

    let perms: Vec<Vec<usize>> = permutations(q)
        .into_iter()
        .filter(|p| (0..q).all(|beta| (norms_b[beta] - norms_a[p[beta]]).abs() <= 1e-6))
        .collect();
    // a global sign flip of (S, A) cancels, so the first sign is pinned
    let sign_words: usize = 1 << (q - 1);

    let found = crate::parallel::find_map_indexed(perms.len(), |pi| {
        let perm = &perms[pi];
        for word in 0..sign_words {
            let signs: Vec<i8> = (0..q)
                .map(|beta| {
                    if beta > 0 && (word >> (beta - 1)) & 1 == 1 {
                        -1
                    } else {
                        1
                    }
                })
                .collect();
            let mut permuted = DMatrix::zeros(q, k);
            for beta in 0..q {
                for c in 0..k {
                    permuted[(beta, c)] = f64::from(signs[beta]) * ta[(perm[beta], c)];
                }
            }
            // orthogonal Procrustes: argmin_A ‖permuted·A − θ₂‖_F over O(k)
            let m = permuted.transpose() * &tb;
            let svd = m.svd(true, true);
            let rotation = svd.u.as_ref().unwrap() * svd.v_t.as_ref().unwrap();
            let residual = (&permuted * &rotation - &tb).amax();
            if residual <= MONOMIAL_TOL {
                debug_assert!(
                    (rotation.transpose() * &rotation - DMatrix::<f64>::identity(k, k)).amax()
                        < 1e-12
                );
                return Some(MonomialWitness {
                    source: perm.clone(),
                    signs,
                    rotation,
                    residual,
                });
            }
        }
        None
    });
    Ok(found)
}
