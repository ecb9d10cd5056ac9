//! Group operations for `ℝ^s × (ℝ^k ⋉ ℍ^q)` in global coordinates.
//!
//! The product twists the fiber of the right factor by unit complex
//! scalars: `(X, W)·(X', W') = (X + X', W + e^{i⟨X,θ⟩}W')`, slotwise with
//! angle `⟨X, θ_β⟩`. Left translations are affine with orthogonal linear
//! part, so the left-invariant metric is the Euclidean one.

use crate::quat::{QVector, Quaternion};
use crate::spec::GroupSpec;

/// Group element: base coordinates (acting directions first, center last)
/// and the ℍ^q fiber.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    pub x: Vec<f64>,
    pub w: QVector,
}

impl GroupElement {
    pub fn new(x: Vec<f64>, w: QVector) -> Self {
        GroupElement { x, w }
    }

    pub fn identity(spec: &GroupSpec) -> Self {
        GroupElement {
            x: vec![0.0; spec.base_dim()],
            w: QVector::zeros(spec.q()),
        }
    }

    pub fn from_base(spec: &GroupSpec, x: Vec<f64>) -> Self {
        assert_eq!(x.len(), spec.base_dim());
        GroupElement {
            x,
            w: QVector::zeros(spec.q()),
        }
    }

    pub fn from_fiber(spec: &GroupSpec, w: QVector) -> Self {
        GroupElement {
            x: vec![0.0; spec.base_dim()],
            w,
        }
    }

    /// Flat coordinates `[x | fiber reals]`; the ambient metric is the
    /// Euclidean one in this chart.
    pub fn to_ambient(&self) -> Vec<f64> {
        let mut v = self.x.clone();
        v.extend(self.w.to_reals());
        v
    }

    pub fn from_ambient(spec: &GroupSpec, v: &[f64]) -> Self {
        let b = spec.base_dim();
        GroupElement {
            x: v[..b].to_vec(),
            w: QVector::from_reals(&v[b..]),
        }
    }
}

/// Slotwise twist `W_β ↦ e^{i⟨t,θ_β⟩} W_β`.
pub fn twist_fiber(spec: &GroupSpec, t: &[f64], w: &QVector) -> QVector {
    QVector(
        w.0.iter()
            .enumerate()
            .map(|(beta, wb)| Quaternion::exp_i(spec.twist_angle(t, beta)) * *wb)
            .collect(),
    )
}

pub fn multiply(spec: &GroupSpec, a: &GroupElement, b: &GroupElement) -> GroupElement {
    let x = a.x.iter().zip(&b.x).map(|(u, v)| u + v).collect();
    let w = a.w.add(&twist_fiber(spec, &a.x, &b.w));
    GroupElement::new(x, w)
}

pub fn inverse(spec: &GroupSpec, g: &GroupElement) -> GroupElement {
    let x: Vec<f64> = g.x.iter().map(|v| -v).collect();
    let w = twist_fiber(spec, &x, &g.w).scale(-1.0);
    GroupElement::new(x, w)
}

/// `a b a⁻¹ b⁻¹`.
pub fn commutator(spec: &GroupSpec, a: &GroupElement, b: &GroupElement) -> GroupElement {
    let ab = multiply(spec, a, b);
    let ai = inverse(spec, a);
    let bi = inverse(spec, b);
    multiply(spec, &multiply(spec, &ab, &ai), &bi)
}

/// Adjoint action on the algebra:
/// `Ad(X,W)(T,U) = (T, e^{i⟨X,θ⟩}U − ρ(T)W)`.
pub fn adjoint(
    spec: &GroupSpec,
    g: &GroupElement,
    xi: &crate::liealg::AlgebraElement,
) -> crate::liealg::AlgebraElement {
    let twisted = twist_fiber(spec, &g.x, &xi.w);
    let w = QVector(
        twisted
            .0
            .iter()
            .enumerate()
            .map(|(beta, u)| {
                let ang = spec.twist_angle(&xi.t, beta);
                *u - (Quaternion::I * g.w.0[beta]).scale(ang)
            })
            .collect(),
    );
    crate::liealg::AlgebraElement::new(xi.t.clone(), w)
}

/// The torus action fixing the quotient construction: slotwise left
/// multiplication by unit complex phases.
pub fn act_torus(phases: &[f64], g: &GroupElement) -> GroupElement {
    assert_eq!(phases.len(), g.w.len());
    let w = QVector(
        g.w.0
            .iter()
            .zip(phases)
            .map(|(wb, phi)| Quaternion::exp_i(*phi) * *wb)
            .collect(),
    );
    GroupElement::new(g.x.clone(), w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liealg::AlgebraElement;
    use nalgebra::dmatrix;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn spec_tn(theta: f64) -> GroupSpec {
        GroupSpec::hyperkahler(3, 1, 1, dmatrix![theta]).unwrap()
    }

    fn dist(a: &GroupElement, b: &GroupElement) -> f64 {
        a.to_ambient()
            .iter()
            .zip(b.to_ambient())
            .map(|(u, v)| (u - v) * (u - v))
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn quarter_turn_twist() {
        let spec = spec_tn(2.0);
        let g = GroupElement::from_base(&spec, vec![PI / 4.0, 0.0, 0.0, 0.0]);
        let h = GroupElement::from_fiber(&spec, QVector(vec![Quaternion::ONE]));
        let gh = multiply(&spec, &g, &h);
        assert!((gh.w.0[0] - Quaternion::I).norm() < 1e-15);
        // multiplying on the other side leaves the fiber untwisted
        let hg = multiply(&spec, &h, &g);
        assert!((hg.w.0[0] - Quaternion::ONE).norm() < 1e-15);
    }

    #[test]
    fn inverse_round_trip() {
        let spec = spec_tn(1.7);
        let g = GroupElement::new(
            vec![0.3, -1.0, 2.0, 0.5],
            QVector(vec![Quaternion::new(1.0, -2.0, 0.5, 0.25)]),
        );
        let e = GroupElement::identity(&spec);
        assert!(dist(&multiply(&spec, &g, &inverse(&spec, &g)), &e) < 1e-14);
        assert!(dist(&multiply(&spec, &inverse(&spec, &g), &g), &e) < 1e-14);
    }

    #[test]
    fn base_commutator_twists_fiber() {
        let spec = spec_tn(2.0);
        let v = GroupElement::from_base(&spec, vec![PI / 2.0, 0.0, 0.0, 0.0]);
        let g = GroupElement::new(
            vec![0.4, 1.0, 0.0, -1.0],
            QVector(vec![Quaternion::new(0.7, 0.1, -0.3, 0.9)]),
        );
        let c = commutator(&spec, &v, &g);
        assert!(c.x.iter().all(|u| u.abs() < 1e-14));
        // θ(V)W − W with angle π: −2W
        let expect = g.w.0[0].scale(-2.0);
        assert!((c.w.0[0] - expect).norm() < 1e-14);
    }

    #[test]
    fn torus_half_turn_negates_fiber() {
        let g = GroupElement::new(
            vec![1.0, 0.0, 2.0, 0.0],
            QVector(vec![Quaternion::new(0.5, -1.0, 2.0, 0.1)]),
        );
        let out = act_torus(&[PI], &g);
        assert_eq!(out.x, g.x);
        assert!((out.w.0[0] + g.w.0[0]).norm() < 1e-14);
    }

    #[test]
    fn adjoint_is_bracket_compatible_automorphism() {
        let spec = GroupSpec::hyperkahler(3, 1, 2, dmatrix![1.0; 2.0]).unwrap();
        let g = GroupElement::new(
            vec![0.8, -0.2, 1.0, 3.0],
            QVector(vec![
                Quaternion::new(1.0, 0.5, -0.5, 2.0),
                Quaternion::new(0.0, 1.0, 1.0, 0.0),
            ]),
        );
        let xi = AlgebraElement::new(
            vec![1.3, 0.0, -1.0, 0.4],
            QVector(vec![
                Quaternion::new(0.2, 0.0, 1.0, -1.0),
                Quaternion::new(0.5, 0.5, 0.0, 0.0),
            ]),
        );
        let eta = AlgebraElement::new(
            vec![-0.6, 2.0, 0.0, 0.0],
            QVector(vec![
                Quaternion::new(0.0, 0.3, 0.0, 0.7),
                Quaternion::new(1.0, 0.0, -0.2, 0.0),
            ]),
        );
        let lhs = adjoint(&spec, &g, &crate::liealg::bracket(&spec, &xi, &eta));
        let rhs =
            crate::liealg::bracket(&spec, &adjoint(&spec, &g, &xi), &adjoint(&spec, &g, &eta));
        assert!((lhs.to_raw() - rhs.to_raw()).amax() < 1e-13);
        // Ad(identity) = id
        let e = GroupElement::identity(&spec);
        assert!((adjoint(&spec, &e, &xi).to_raw() - xi.to_raw()).amax() < 1e-15);
        // Ad(gh) = Ad(g)Ad(h)
        let h = GroupElement::new(
            vec![-0.1, 0.9, 0.0, 1.0],
            QVector(vec![Quaternion::new(0.3, 0.3, 0.3, 0.3), Quaternion::ONE]),
        );
        let lhs2 = adjoint(&spec, &multiply(&spec, &g, &h), &xi);
        let rhs2 = adjoint(&spec, &g, &adjoint(&spec, &h, &xi));
        assert!((lhs2.to_raw() - rhs2.to_raw()).amax() < 1e-13);
    }

    proptest! {
        #[test]
        fn multiplication_is_associative(
            coords in proptest::collection::vec(-3.0f64..3.0, 24)
        ) {
            let spec = GroupSpec::hyperkahler(3, 1, 1, dmatrix![1.5]).unwrap();
            let g = GroupElement::from_ambient(&spec, &coords[0..8]);
            let h = GroupElement::from_ambient(&spec, &coords[8..16]);
            let k = GroupElement::from_ambient(&spec, &coords[16..24]);
            let lhs = multiply(&spec, &multiply(&spec, &g, &h), &k);
            let rhs = multiply(&spec, &g, &multiply(&spec, &h, &k));
            prop_assert!(dist(&lhs, &rhs) < 1e-12);
        }

        #[test]
        fn left_translations_are_isometries(
            coords in proptest::collection::vec(-3.0f64..3.0, 24)
        ) {
            let spec = GroupSpec::hyperkahler(3, 1, 1, dmatrix![2.0]).unwrap();
            let g = GroupElement::from_ambient(&spec, &coords[0..8]);
            let h1 = GroupElement::from_ambient(&spec, &coords[8..16]);
            let h2 = GroupElement::from_ambient(&spec, &coords[16..24]);
            let moved = dist(&multiply(&spec, &g, &h1), &multiply(&spec, &g, &h2));
            prop_assert!((moved - dist(&h1, &h2)).abs() < 1e-12);
        }
    }
}
