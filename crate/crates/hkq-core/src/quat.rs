//! Quaternion arithmetic, right-multiplication complex structures, and
//! monopole coordinates on ℍ \ {0}.
//!
//! Conventions: `i² = j² = k² = ijk = −1`, the Euclidean metric is
//! `⟨a, b⟩ = Re(a b̄)`, and the three complex structures act by *right*
//! multiplication `J₁ = R₋ᵢ`, `J₂ = R₋ⱼ`, `J₃ = R₋ₖ`, so that
//! `J₁J₂ = J₃` under composition.

use crate::error::HkError;
use crate::Result;
use serde::{Deserialize, Serialize};

/// A quaternion `re + i·i_ + j·j_ + k·k_` over f64.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Quaternion {
    pub re: f64,
    pub i: f64,
    pub j: f64,
    pub k: f64,
}

/// One of the three complex structures on ℍ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    I,
    J,
    K,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::I, Axis::J, Axis::K];

    /// Zero-based index used when storing per-axis results.
    pub fn index(self) -> usize {
        match self {
            Axis::I => 0,
            Axis::J => 1,
            Axis::K => 2,
        }
    }
}

impl Quaternion {
    pub const ZERO: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 0.0);
    pub const ONE: Quaternion = Quaternion::new(1.0, 0.0, 0.0, 0.0);
    pub const I: Quaternion = Quaternion::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Quaternion = Quaternion::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 1.0);

    pub const fn new(re: f64, i: f64, j: f64, k: f64) -> Self {
        Quaternion { re, i, j, k }
    }

    /// Pure-imaginary quaternion from a 3-vector of (i, j, k) parts.
    pub fn from_imag(v: [f64; 3]) -> Self {
        Quaternion::new(0.0, v[0], v[1], v[2])
    }

    /// `e^{iφ} = cos φ + i sin φ`, the twist circle inside ℍ.
    pub fn exp_i(phi: f64) -> Self {
        Quaternion::new(phi.cos(), phi.sin(), 0.0, 0.0)
    }

    pub fn conj(self) -> Self {
        Quaternion::new(self.re, -self.i, -self.j, -self.k)
    }

    pub fn imag(self) -> [f64; 3] {
        [self.i, self.j, self.k]
    }

    pub fn norm_sq(self) -> f64 {
        self.re * self.re + self.i * self.i + self.j * self.j + self.k * self.k
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scale(self, t: f64) -> Self {
        Quaternion::new(t * self.re, t * self.i, t * self.j, t * self.k)
    }

    /// Euclidean inner product `Re(a b̄)` of ℍ ≅ ℝ⁴.
    pub fn dot(self, o: Quaternion) -> f64 {
        self.re * o.re + self.i * o.i + self.j * o.j + self.k * o.k
    }

    pub fn is_zero(self, tol: f64) -> bool {
        self.norm() <= tol
    }

    /// Right multiplication by `−i`, `−j`, or `−k`.
    pub fn right_structure(self, axis: Axis) -> Self {
        let Quaternion {
            re: a,
            i: b,
            j: c,
            k: d,
        } = self;
        match axis {
            Axis::I => Quaternion::new(b, -a, -d, c),
            Axis::J => Quaternion::new(c, d, -a, -b),
            Axis::K => Quaternion::new(d, -c, b, -a),
        }
    }
}

impl std::ops::Add for Quaternion {
    type Output = Quaternion;
    fn add(self, o: Quaternion) -> Quaternion {
        Quaternion::new(self.re + o.re, self.i + o.i, self.j + o.j, self.k + o.k)
    }
}

impl std::ops::Sub for Quaternion {
    type Output = Quaternion;
    fn sub(self, o: Quaternion) -> Quaternion {
        Quaternion::new(self.re - o.re, self.i - o.i, self.j - o.j, self.k - o.k)
    }
}

impl std::ops::Neg for Quaternion {
    type Output = Quaternion;
    fn neg(self) -> Quaternion {
        self.scale(-1.0)
    }
}

impl std::ops::Mul for Quaternion {
    type Output = Quaternion;
    fn mul(self, o: Quaternion) -> Quaternion {
        let Quaternion {
            re: a0,
            i: a1,
            j: a2,
            k: a3,
        } = self;
        let Quaternion {
            re: b0,
            i: b1,
            j: b2,
            k: b3,
        } = o;
        Quaternion::new(
            a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
            a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
            a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
            a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
        )
    }
}

/// Element of ℍ^q, stored componentwise.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct QVector(pub Vec<Quaternion>);

impl QVector {
    pub fn zeros(q: usize) -> Self {
        QVector(vec![Quaternion::ZERO; q])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Euclidean inner product of ℍ^q ≅ ℝ^{4q}.
    pub fn dot(&self, o: &QVector) -> f64 {
        self.0.iter().zip(&o.0).map(|(a, b)| a.dot(*b)).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn add(&self, o: &QVector) -> QVector {
        QVector(self.0.iter().zip(&o.0).map(|(a, b)| *a + *b).collect())
    }

    pub fn sub(&self, o: &QVector) -> QVector {
        QVector(self.0.iter().zip(&o.0).map(|(a, b)| *a - *b).collect())
    }

    pub fn scale(&self, t: f64) -> QVector {
        QVector(self.0.iter().map(|a| a.scale(t)).collect())
    }

    /// Flatten to ℝ^{4q} in (re, i, j, k) component order per slot.
    pub fn to_reals(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(4 * self.len());
        for a in &self.0 {
            out.extend_from_slice(&[a.re, a.i, a.j, a.k]);
        }
        out
    }

    pub fn from_reals(v: &[f64]) -> QVector {
        assert!(
            v.len().is_multiple_of(4),
            "real vector length must be a multiple of 4"
        );
        QVector(
            v.chunks_exact(4)
                .map(|c| Quaternion::new(c[0], c[1], c[2], c[3]))
                .collect(),
        )
    }
}

/// `W̄ i W` as a 3-vector of (i, j, k) parts; the real part vanishes.
///
/// Expanded: `(u² + y² − z² − w², 2(zy − uw), 2(uz + wy))` for
/// `W = u + yi + zj + wk`. Invariant under `W ↦ e^{it}W`, and
/// `|r_vector(W)| = |W|²`.
pub fn r_vector(w: Quaternion) -> [f64; 3] {
    let Quaternion {
        re: u,
        i: y,
        j: z,
        k: wk,
    } = w;
    [
        u * u + y * y - z * z - wk * wk,
        2.0 * (z * y - u * wk),
        2.0 * (u * z + wk * y),
    ]
}

/// Monopole coordinates of a nonzero quaternion: `W = e^{iψ/2} a` with `a`
/// pure imaginary and `r = W̄ i W = ā i a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonopoleCoords {
    /// Fiber angle in `(0, 4π]`; ψ and ψ+2π differ by the sign of `a`.
    pub psi: f64,
    /// Image under `W ↦ W̄ i W`; `|r| = |W|²`.
    pub r: [f64; 3],
}

/// Which sign of the pure-imaginary part to reconstruct.
///
/// `Principal` matches the branch chosen by [`monopole_coords`]; `Antipodal`
/// flips `a ↦ −a`, i.e. shifts ψ by 2π.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Branch {
    #[default]
    Principal,
    Antipodal,
}

pub(crate) const RADIUS_FLOOR: f64 = 1e-15;
// Relative distance to the string below which the section is numerically
// meaningless.
pub(crate) const STRING_GUARD: f64 = 1e-12;

/// Decompose `W ≠ 0` as `e^{iψ/2} a` with `a` pure imaginary.
///
/// The branch is pinned by requiring the i-component of `a` to be positive,
/// which makes ψ unique in `(0, 4π]`. Points with `W.re = W.i = 0` sit over
/// the string locus `r = −|W|²·ê₁`, where every ψ works; there ψ is taken
/// as `4π` (so `a = W`), which is the branch-cut convention.
pub fn monopole_coords(w: Quaternion) -> Result<MonopoleCoords> {
    if w.norm() <= RADIUS_FLOOR {
        return Err(HkError::ZeroQuaternion);
    }
    // a = e^{−iψ/2}W is pure imaginary iff cos(ψ/2)·W.re + sin(ψ/2)·W.i = 0;
    // choosing (cos, sin) ∝ (W.i, −W.re) also makes a.i = √(re²+i²) ≥ 0.
    let half = f64::atan2(-w.re, w.i);
    let mut psi = 2.0 * half;
    if psi <= 0.0 {
        psi += 4.0 * std::f64::consts::PI;
    }
    Ok(MonopoleCoords {
        psi,
        r: r_vector(w),
    })
}

/// Rebuild `W = e^{iψ/2} a(r)` from monopole coordinates.
///
/// `a(r)` is the section with positive i-component, defined away from the
/// string locus `r ∝ −ê₁`. ψ is interpreted mod 4π.
pub fn from_monopole(psi: f64, r: [f64; 3], branch: Branch) -> Result<Quaternion> {
    let rho = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
    if rho <= RADIUS_FLOOR {
        return Err(HkError::ZeroRadius(rho));
    }
    let y2 = 0.5 * (rho + r[0]);
    if y2 <= STRING_GUARD * rho {
        return Err(HkError::StringLocus);
    }
    let y = y2.sqrt();
    let a = Quaternion::new(0.0, y, 0.5 * r[1] / y, 0.5 * r[2] / y);
    let w = Quaternion::exp_i(0.5 * psi) * a;
    Ok(match branch {
        Branch::Principal => w,
        Branch::Antipodal => -w,
    })
}
