//! Group data: dimensions, the twist matrix θ, and the serialized form.
//!
//! A spec describes `ℝ^s × (ℝ^k ⋉ fiber)` where the fiber is ℍ^q in
//! hyper-Kähler mode or ℝ^{2m} in flat-pair mode. θ has one row per fiber
//! slot and k columns; row β couples the β-th slot to the acting directions.

use crate::error::HkError;
use crate::quat::{Axis, Quaternion};
use crate::Result;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Fiber type of the semidirect product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpecMode {
    /// Fiber ℍ^q; base dimension s + k must be divisible by 4.
    Hyperkahler,
    /// Fiber ℝ^{2m} with one rotation pair per θ-row.
    Flat2m,
}

/// Validated group data.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSpec {
    s: usize,
    k: usize,
    fiber: usize,
    theta: DMatrix<f64>,
    mode: SpecMode,
}

/// Relative singular-value cutoff for the rank-k requirement on θ.
const RANK_TOL: f64 = 1e-10;
/// Rows of θ must be nonzero for the twist to act on every slot.
const ROW_TOL: f64 = 1e-12;

impl GroupSpec {
    /// Hyper-Kähler spec: fiber ℍ^q, `s + k = 4p`.
    pub fn hyperkahler(s: usize, k: usize, q: usize, theta: DMatrix<f64>) -> Result<Self> {
        GroupSpec::validated(s, k, q, theta, SpecMode::Hyperkahler)
    }

    /// Flat-pair spec: fiber ℝ^{2m} with m = number of θ-rows.
    pub fn flat2m(s: usize, k: usize, m: usize, theta: DMatrix<f64>) -> Result<Self> {
        GroupSpec::validated(s, k, m, theta, SpecMode::Flat2m)
    }

    fn validated(
        s: usize,
        k: usize,
        fiber: usize,
        theta: DMatrix<f64>,
        mode: SpecMode,
    ) -> Result<Self> {
        if k == 0 {
            return Err(HkError::SpecInvalid("k must be positive".into()));
        }
        if fiber == 0 {
            return Err(HkError::SpecInvalid("fiber count must be positive".into()));
        }
        if theta.nrows() != fiber || theta.ncols() != k {
            return Err(HkError::SpecInvalid(format!(
                "θ must be {}×{}, got {}×{}",
                fiber,
                k,
                theta.nrows(),
                theta.ncols()
            )));
        }
        if k > fiber {
            return Err(HkError::SpecInvalid(format!(
                "k = {} exceeds fiber count {}; θ cannot have rank k",
                k, fiber
            )));
        }
        for beta in 0..fiber {
            if theta.row(beta).norm() <= ROW_TOL {
                return Err(HkError::SpecInvalid(format!("θ row {} is zero", beta + 1)));
            }
        }
        let sv = theta.clone().singular_values();
        let smax = sv.max();
        let smin = sv.min();
        // NaN singular values (bad input data) must count as rank deficient.
        if smin.is_nan() || smin <= RANK_TOL * smax.max(1.0) {
            return Err(HkError::SpecInvalid(format!(
                "θ is rank deficient: σ_min = {:.3e}",
                smin
            )));
        }
        if mode == SpecMode::Hyperkahler && !(s + k).is_multiple_of(4) {
            return Err(HkError::SpecInvalid(format!(
                "s + k = {} is not a multiple of 4",
                s + k
            )));
        }
        Ok(GroupSpec {
            s,
            k,
            fiber,
            theta,
            mode,
        })
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Fiber slot count: q in hyper-Kähler mode, m in flat-pair mode.
    pub fn q(&self) -> usize {
        self.fiber
    }

    pub fn mode(&self) -> SpecMode {
        self.mode
    }

    pub fn theta(&self) -> &DMatrix<f64> {
        &self.theta
    }

    /// Number of quaternionic base slots, `(s + k) / 4`.
    pub fn p(&self) -> usize {
        debug_assert!(self.mode == SpecMode::Hyperkahler);
        (self.s + self.k) / 4
    }

    /// Base dimension s + k.
    pub fn base_dim(&self) -> usize {
        self.s + self.k
    }

    /// Real dimension of the fiber.
    pub fn fiber_dim(&self) -> usize {
        match self.mode {
            SpecMode::Hyperkahler => 4 * self.fiber,
            SpecMode::Flat2m => 2 * self.fiber,
        }
    }

    /// Total algebra dimension.
    pub fn dim(&self) -> usize {
        self.base_dim() + self.fiber_dim()
    }

    /// `⟨T, θ_β⟩` over the acting coordinates (the first k entries of `t`).
    pub fn twist_angle(&self, t: &[f64], beta: usize) -> f64 {
        (0..self.k).map(|a| t[a] * self.theta[(beta, a)]).sum()
    }

    /// View the base ℝ^{s+k} ≅ ℍ^p. Slot α collects the stored entries
    /// `(t[α], t[p+α], t[2p+α], t[3p+α])`, so `e_a` is the real axis of the
    /// a-th quaternion for a ≤ p and the acting directions come first.
    pub fn base_quats(&self, t: &[f64]) -> Vec<Quaternion> {
        let p = self.p();
        debug_assert_eq!(t.len(), 4 * p);
        (0..p)
            .map(|al| Quaternion::new(t[al], t[p + al], t[2 * p + al], t[3 * p + al]))
            .collect()
    }

    /// Inverse of [`GroupSpec::base_quats`].
    pub fn base_from_quats(&self, quats: &[Quaternion]) -> Vec<f64> {
        let p = self.p();
        debug_assert_eq!(quats.len(), p);
        let mut t = vec![0.0; 4 * p];
        for (al, x) in quats.iter().enumerate() {
            t[al] = x.re;
            t[p + al] = x.i;
            t[2 * p + al] = x.j;
            t[3 * p + al] = x.k;
        }
        t
    }

    /// Apply the right-multiplication structure `J_axis` to a base vector.
    pub fn base_structure(&self, axis: Axis, t: &[f64]) -> Vec<f64> {
        let quats: Vec<Quaternion> = self
            .base_quats(t)
            .into_iter()
            .map(|x| x.right_structure(axis))
            .collect();
        self.base_from_quats(&quats)
    }
}

/// Generators of the isotropic subalgebra 𝔩 ⊆ ℝ^k, as 1-based indices
/// among e₁…e_k. The default choice is the first l directions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LSpec {
    indices: Vec<usize>,
}

impl LSpec {
    /// The standard choice e₁…e_l.
    pub fn first(l: usize) -> Self {
        LSpec {
            indices: (1..=l).collect(),
        }
    }

    pub fn from_indices(indices: Vec<usize>) -> Self {
        LSpec { indices }
    }

    pub fn l(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Structural validation against a spec: indices distinct, inside 1..=k,
    /// and no more of them than base quaternion slots. The tri-isotropy
    /// check itself lives with the moment map.
    pub fn validate_shape(&self, spec: &GroupSpec) -> Result<()> {
        let mut seen = vec![false; spec.k() + 1];
        for &a in &self.indices {
            if a == 0 || a > spec.k() {
                return Err(HkError::SpecInvalid(format!(
                    "generator index {} outside 1..={}",
                    a,
                    spec.k()
                )));
            }
            if seen[a] {
                return Err(HkError::SpecInvalid(format!(
                    "duplicate generator index {}",
                    a
                )));
            }
            seen[a] = true;
        }
        if spec.mode() == SpecMode::Hyperkahler && self.l() > spec.p() {
            return Err(HkError::SpecInvalid(format!(
                "l = {} exceeds p = {}",
                self.l(),
                spec.p()
            )));
        }
        Ok(())
    }
}

/// On-disk form of a spec; `l` is optional and carries the subgroup choice.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SpecFile {
    pub s: usize,
    pub k: usize,
    pub q: usize,
    pub theta: Vec<Vec<f64>>,
    pub mode: SpecMode,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub l: Option<usize>,
}

impl SpecFile {
    pub fn from_spec(spec: &GroupSpec, l: Option<usize>) -> Self {
        let theta = (0..spec.q())
            .map(|b| (0..spec.k()).map(|a| spec.theta()[(b, a)]).collect())
            .collect();
        SpecFile {
            s: spec.s(),
            k: spec.k(),
            q: spec.q(),
            theta,
            mode: spec.mode(),
            l,
        }
    }

    pub fn to_spec(&self) -> Result<GroupSpec> {
        if self.theta.len() != self.q || self.theta.iter().any(|r| r.len() != self.k) {
            return Err(HkError::SpecInvalid(format!(
                "θ must be {}×{} rows×cols",
                self.q, self.k
            )));
        }
        let theta = DMatrix::from_fn(self.q, self.k, |b, a| self.theta[b][a]);
        GroupSpec::validated(self.s, self.k, self.q, theta, self.mode)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serialization cannot fail")
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| HkError::SpecInvalid(format!("bad spec JSON: {e}")))
    }
}

/// Draw a random valid hyper-Kähler spec with q ≤ max_q. Entries of θ are
/// resampled until the rows are safely nonzero and θ has full rank.
pub fn random_hyperkahler(rng: &mut impl rand::Rng, max_q: usize) -> GroupSpec {
    loop {
        let q = rng.random_range(1..=max_q);
        let k = rng.random_range(1..=q.min(4));
        let p = rng.random_range(k.div_ceil(4).max(1)..=2);
        let s = 4 * p - k;
        let theta = DMatrix::from_fn(q, k, |_, _| rng.random_range(-2.0..2.0));
        if let Ok(spec) = GroupSpec::hyperkahler(s, k, q, theta) {
            let sv = spec.theta().clone().singular_values();
            if sv.min() > 0.1 && (0..q).all(|b| spec.theta().row(b).norm() > 0.1) {
                return spec;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn validates_taub_nut_shape() {
        let spec = GroupSpec::hyperkahler(3, 1, 1, dmatrix![1.0]).unwrap();
        assert_eq!(spec.p(), 1);
        assert_eq!(spec.dim(), 8);
        assert_eq!(spec.fiber_dim(), 4);
    }

    #[test]
    fn rejects_zero_row() {
        let err = GroupSpec::hyperkahler(3, 1, 2, dmatrix![1.0; 0.0]).unwrap_err();
        assert!(matches!(err, HkError::SpecInvalid(_)));
    }

    #[test]
    fn rejects_rank_deficient() {
        let err = GroupSpec::hyperkahler(2, 2, 2, dmatrix![1.0, 2.0; 2.0, 4.0]).unwrap_err();
        assert!(matches!(err, HkError::SpecInvalid(_)));
    }

    #[test]
    fn rejects_bad_mod_four() {
        let err = GroupSpec::hyperkahler(3, 2, 2, dmatrix![1.0, 0.0; 0.0, 1.0]).unwrap_err();
        assert!(matches!(err, HkError::SpecInvalid(_)));
    }

    #[test]
    fn base_slot_layout_puts_acting_directions_on_real_axes() {
        // s = 6, k = 2 → p = 2; e₁, e₂ are the real axes.
        let spec = GroupSpec::hyperkahler(6, 2, 2, dmatrix![1.0, 0.0; 0.0, 1.0]).unwrap();
        let mut t = vec![0.0; 8];
        t[0] = 1.0;
        let quats = spec.base_quats(&t);
        assert_eq!(quats[0], Quaternion::ONE);
        assert_eq!(quats[1], Quaternion::ZERO);
        let mut t = vec![0.0; 8];
        t[1] = 1.0;
        let quats = spec.base_quats(&t);
        assert_eq!(quats[0], Quaternion::ZERO);
        assert_eq!(quats[1], Quaternion::ONE);
        // centre coordinates fill the imaginary axes slot-major
        let t: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let quats = spec.base_quats(&t);
        assert_eq!(quats[0], Quaternion::new(0.0, 2.0, 4.0, 6.0));
        assert_eq!(quats[1], Quaternion::new(1.0, 3.0, 5.0, 7.0));
        assert_eq!(spec.base_from_quats(&quats), t);
    }

    #[test]
    fn base_structure_squares_to_minus_one() {
        let spec = GroupSpec::hyperkahler(3, 1, 1, dmatrix![2.0]).unwrap();
        let t = vec![0.3, -1.0, 2.0, 0.5];
        for ax in Axis::ALL {
            let twice = spec.base_structure(ax, &spec.base_structure(ax, &t));
            for (a, b) in twice.iter().zip(&t) {
                assert!((a + b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn spec_file_round_trip() {
        let spec =
            GroupSpec::hyperkahler(6, 2, 3, dmatrix![1.0, 0.5; -1.0, 2.0; 0.0, 1.0]).unwrap();
        let file = SpecFile::from_spec(&spec, Some(2));
        let text = file.to_json();
        let parsed = SpecFile::parse(&text).unwrap();
        assert_eq!(parsed, file);
        assert_eq!(parsed.to_spec().unwrap(), spec);
    }

    #[test]
    fn lspec_shape_checks() {
        let spec = GroupSpec::hyperkahler(6, 2, 2, dmatrix![1.0, 0.0; 0.0, 1.0]).unwrap();
        assert!(LSpec::first(2).validate_shape(&spec).is_ok());
        assert!(LSpec::from_indices(vec![3]).validate_shape(&spec).is_err());
        assert!(LSpec::from_indices(vec![1, 1])
            .validate_shape(&spec)
            .is_err());
    }

    #[test]
    fn random_specs_are_valid() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let spec = random_hyperkahler(&mut rng, 4);
            assert_eq!(spec.mode(), SpecMode::Hyperkahler);
            assert_eq!((spec.s() + spec.k()) % 4, 0);
            assert!(spec.k() <= spec.q());
        }
    }
}
