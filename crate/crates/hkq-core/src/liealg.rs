//! The metric Lie algebra of `ℝ^s × (ℝ^k ⋉_ρ fiber)` and its numeric
//! axiom checks.
//!
//! The fiber decomposes into rotation pairs: four real coordinates per
//! quaternion slot (two pairs sharing a θ-row) in hyper-Kähler mode, two per
//! slot in flat-pair mode. ρ(T) spins pair j by the angle rate `⟨T, θ_row⟩`,
//! the bracket is `[(X,U),(Y,V)] = (0, ρ(X)V − ρ(Y)U)`, and the metric is
//! Euclidean in the stored coordinates. The Levi-Civita connection comes
//! from the Koszul formula evaluated against the orthonormal basis.

use crate::error::HkError;
use crate::quat::{Axis, QVector};
use crate::spec::{GroupSpec, SpecMode};
use crate::Result;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

/// Algebra element of a hyper-Kähler spec: base coefficients (acting
/// directions first, center last) plus a fiber vector in ℍ^q.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement {
    pub t: Vec<f64>,
    pub w: QVector,
}

impl AlgebraElement {
    pub fn new(t: Vec<f64>, w: QVector) -> Self {
        AlgebraElement { t, w }
    }

    pub fn zero(spec: &GroupSpec) -> Self {
        AlgebraElement {
            t: vec![0.0; spec.base_dim()],
            w: QVector::zeros(spec.q()),
        }
    }

    /// Flatten to the raw layout `[t | fiber reals]`.
    pub fn to_raw(&self) -> DVector<f64> {
        let mut v = self.t.clone();
        v.extend(self.w.to_reals());
        DVector::from_vec(v)
    }

    pub fn from_raw(spec: &GroupSpec, v: &DVector<f64>) -> Self {
        let b = spec.base_dim();
        AlgebraElement {
            t: v.as_slice()[..b].to_vec(),
            w: QVector::from_reals(&v.as_slice()[b..]),
        }
    }

    pub fn norm(&self) -> f64 {
        self.to_raw().norm()
    }
}

/// Precomputed tables for one spec: pair layout, brackets, and the
/// Levi-Civita connection on the orthonormal basis.
pub struct AlgebraEngine {
    dim: usize,
    base_dim: usize,
    /// (first coordinate offset, θ-row) per rotation pair.
    pairs: Vec<(usize, usize)>,
    theta: DMatrix<f64>,
    k: usize,
    /// ∇_{e_i} e_j flattened row-major; filled lazily by `connection`.
    conn: std::cell::OnceCell<Vec<DVector<f64>>>,
}

impl AlgebraEngine {
    pub fn new(spec: &GroupSpec) -> Self {
        let base_dim = spec.base_dim();
        let mut pairs = Vec::new();
        match spec.mode() {
            SpecMode::Hyperkahler => {
                for beta in 0..spec.q() {
                    pairs.push((base_dim + 4 * beta, beta));
                    pairs.push((base_dim + 4 * beta + 2, beta));
                }
            }
            SpecMode::Flat2m => {
                for j in 0..spec.q() {
                    pairs.push((base_dim + 2 * j, j));
                }
            }
        }
        AlgebraEngine {
            dim: spec.dim(),
            base_dim,
            pairs,
            theta: spec.theta().clone(),
            k: spec.k(),
            conn: std::cell::OnceCell::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    fn angle(&self, t: &[f64], row: usize) -> f64 {
        (0..self.k).map(|a| t[a] * self.theta[(row, a)]).sum()
    }

    /// ρ(x_base) applied to the fiber part of `y`, accumulated into `out`
    /// with weight `sign`.
    fn rho_into(&self, x: &DVector<f64>, y: &DVector<f64>, sign: f64, out: &mut DVector<f64>) {
        for &(off, row) in &self.pairs {
            let ang = self.angle(&x.as_slice()[..self.k], row);
            if ang != 0.0 {
                out[off] += sign * ang * -y[off + 1];
                out[off + 1] += sign * ang * y[off];
            }
        }
    }

    /// `[x, y] = (0, ρ(x)y_w − ρ(y)x_w)` on raw vectors.
    pub fn bracket(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim);
        self.rho_into(x, y, 1.0, &mut out);
        self.rho_into(y, x, -1.0, &mut out);
        out
    }

    /// Koszul formula against the orthonormal basis:
    /// `2⟨∇_x y, e⟩ = ⟨[x,y],e⟩ − ⟨[y,e],x⟩ + ⟨[e,x],y⟩`.
    pub fn nabla_koszul(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let bxy = self.bracket(x, y);
        let mut out = DVector::zeros(self.dim);
        let mut e = DVector::zeros(self.dim);
        for m in 0..self.dim {
            e[m] = 1.0;
            let bye = self.bracket(y, &e);
            let bex = self.bracket(&e, x);
            out[m] = 0.5 * (bxy[m] - bye.dot(x) + bex.dot(y));
            e[m] = 0.0;
        }
        out
    }

    fn connection(&self) -> &Vec<DVector<f64>> {
        self.conn.get_or_init(|| {
            let mut tbl = Vec::with_capacity(self.dim * self.dim);
            let mut ei = DVector::zeros(self.dim);
            let mut ej = DVector::zeros(self.dim);
            for i in 0..self.dim {
                ei[i] = 1.0;
                for j in 0..self.dim {
                    ej[j] = 1.0;
                    tbl.push(self.nabla_koszul(&ei, &ej));
                    ej[j] = 0.0;
                }
                ei[i] = 0.0;
            }
            tbl
        })
    }

    /// Bilinear extension of the basis connection table.
    pub fn nabla(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let tbl = self.connection();
        let mut out = DVector::zeros(self.dim);
        for i in 0..self.dim {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            for j in 0..self.dim {
                let c = xi * y[j];
                if c != 0.0 {
                    out.axpy(c, &tbl[i * self.dim + j], 1.0);
                }
            }
        }
        out
    }

    /// `R(x,y)z = ∇_x∇_y z − ∇_y∇_x z − ∇_{[x,y]} z` on left-invariant fields.
    pub fn curvature(&self, x: &DVector<f64>, y: &DVector<f64>, z: &DVector<f64>) -> DVector<f64> {
        let a = self.nabla(x, &self.nabla(y, z));
        let b = self.nabla(y, &self.nabla(x, z));
        let c = self.nabla(&self.bracket(x, y), z);
        a - b - c
    }
}

/// ρ_θ(T) as a dense matrix on the fiber.
pub fn rho(spec: &GroupSpec, t: &[f64]) -> DMatrix<f64> {
    let engine = AlgebraEngine::new(spec);
    let n = spec.fiber_dim();
    let base = spec.base_dim();
    let mut m = DMatrix::zeros(n, n);
    for &(off, row) in &engine.pairs {
        let ang = spec.twist_angle(t, row);
        m[(off - base, off + 1 - base)] = -ang;
        m[(off + 1 - base, off - base)] = ang;
    }
    m
}

/// Lie bracket on algebra elements of a hyper-Kähler spec.
pub fn bracket(spec: &GroupSpec, x: &AlgebraElement, y: &AlgebraElement) -> AlgebraElement {
    let engine = AlgebraEngine::new(spec);
    AlgebraElement::from_raw(spec, &engine.bracket(&x.to_raw(), &y.to_raw()))
}

/// Levi-Civita connection of the flat left-invariant metric.
pub fn levi_civita(spec: &GroupSpec, x: &AlgebraElement, y: &AlgebraElement) -> AlgebraElement {
    let engine = AlgebraEngine::new(spec);
    AlgebraElement::from_raw(spec, &engine.nabla_koszul(&x.to_raw(), &y.to_raw()))
}

/// Curvature of left-invariant fields; identically zero for valid specs.
pub fn curvature_alg(
    spec: &GroupSpec,
    x: &AlgebraElement,
    y: &AlgebraElement,
    z: &AlgebraElement,
) -> AlgebraElement {
    let engine = AlgebraEngine::new(spec);
    AlgebraElement::from_raw(
        spec,
        &engine.curvature(&x.to_raw(), &y.to_raw(), &z.to_raw()),
    )
}

/// The complex structure `J_axis` on the whole algebra (hyper-Kähler mode):
/// right multiplication on the base viewed as ℍ^p and on each fiber slot.
pub fn structure_matrix(spec: &GroupSpec, axis: Axis) -> Result<DMatrix<f64>> {
    if spec.mode() != SpecMode::Hyperkahler {
        return Err(HkError::SpecInvalid(
            "hypercomplex structures need a hyper-Kähler spec".into(),
        ));
    }
    let dim = spec.dim();
    let base = spec.base_dim();
    let mut m = DMatrix::zeros(dim, dim);
    let mut t = vec![0.0; base];
    for col in 0..base {
        t[col] = 1.0;
        let jt = spec.base_structure(axis, &t);
        for (rowi, v) in jt.iter().enumerate() {
            m[(rowi, col)] = *v;
        }
        t[col] = 0.0;
    }
    for beta in 0..spec.q() {
        // columns of right multiplication on one ℍ slot
        for (c, unit) in [
            crate::quat::Quaternion::ONE,
            crate::quat::Quaternion::I,
            crate::quat::Quaternion::J,
            crate::quat::Quaternion::K,
        ]
        .iter()
        .enumerate()
        {
            let ju = unit.right_structure(axis);
            let col = base + 4 * beta + c;
            m[(base + 4 * beta, col)] = ju.re;
            m[(base + 4 * beta + 1, col)] = ju.i;
            m[(base + 4 * beta + 2, col)] = ju.j;
            m[(base + 4 * beta + 3, col)] = ju.k;
        }
    }
    Ok(m)
}

/// The orthogonal complex structure used in the flat-pair case: consecutive
/// coordinate pairs rotate by π/2 on the base and on the fiber.
pub fn flat_structure_matrix(spec: &GroupSpec) -> Result<DMatrix<f64>> {
    let base = spec.base_dim();
    if !base.is_multiple_of(2) {
        return Err(HkError::OddDimension(base));
    }
    let dim = spec.dim();
    let mut m = DMatrix::zeros(dim, dim);
    let mut fill = |lo: usize, hi: usize| {
        let mut at = lo;
        while at < hi {
            m[(at + 1, at)] = 1.0;
            m[(at, at + 1)] = -1.0;
            at += 2;
        }
    };
    fill(0, base);
    fill(base, dim);
    Ok(m)
}

/// Nijenhuis tensor
/// `N(x,y) = J([x,y] − [Jx,Jy]) − ([Jx,y] + [x,Jy])` for a structure matrix.
fn nijenhuis_raw(
    engine: &AlgebraEngine,
    j: &DMatrix<f64>,
    x: &DVector<f64>,
    y: &DVector<f64>,
) -> DVector<f64> {
    let jx = j * x;
    let jy = j * y;
    let inner = engine.bracket(x, y) - engine.bracket(&jx, &jy);
    j * inner - engine.bracket(&jx, y) - engine.bracket(x, &jy)
}

/// Kähler form `ω(x,y) = ⟨Jx, y⟩`.
fn kahler_form_raw(j: &DMatrix<f64>, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    (j * x).dot(y)
}

/// Chevalley-Eilenberg differential of a left-invariant 2-form:
/// `dω(x,y,z) = −ω([x,y],z) − ω([y,z],x) − ω([z,x],y)`.
fn d_omega_raw(
    engine: &AlgebraEngine,
    j: &DMatrix<f64>,
    x: &DVector<f64>,
    y: &DVector<f64>,
    z: &DVector<f64>,
) -> f64 {
    -kahler_form_raw(j, &engine.bracket(x, y), z)
        - kahler_form_raw(j, &engine.bracket(y, z), x)
        - kahler_form_raw(j, &engine.bracket(z, x), y)
}

/// Nijenhuis tensor of `J_axis` on a hyper-Kähler spec.
pub fn nijenhuis(
    spec: &GroupSpec,
    axis: Axis,
    x: &AlgebraElement,
    y: &AlgebraElement,
) -> Result<AlgebraElement> {
    let engine = AlgebraEngine::new(spec);
    let j = structure_matrix(spec, axis)?;
    Ok(AlgebraElement::from_raw(
        spec,
        &nijenhuis_raw(&engine, &j, &x.to_raw(), &y.to_raw()),
    ))
}

/// `ω_axis(x, y) = ⟨J_axis x, y⟩`.
pub fn kahler_form(
    spec: &GroupSpec,
    axis: Axis,
    x: &AlgebraElement,
    y: &AlgebraElement,
) -> Result<f64> {
    let j = structure_matrix(spec, axis)?;
    Ok(kahler_form_raw(&j, &x.to_raw(), &y.to_raw()))
}

/// `dω_axis(x, y, z)`; vanishes on valid specs.
pub fn d_omega(
    spec: &GroupSpec,
    axis: Axis,
    x: &AlgebraElement,
    y: &AlgebraElement,
    z: &AlgebraElement,
) -> Result<f64> {
    let engine = AlgebraEngine::new(spec);
    let j = structure_matrix(spec, axis)?;
    Ok(d_omega_raw(
        &engine,
        &j,
        &x.to_raw(),
        &y.to_raw(),
        &z.to_raw(),
    ))
}

/// One named residual from an axiom scan.
#[derive(Debug, Clone, Serialize)]
pub struct AxiomCheck {
    pub name: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Outcome of a full axiom scan over the basis.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<AxiomCheck>,
    pub passed: bool,
}

impl VerificationReport {
    fn from_checks(checks: Vec<AxiomCheck>) -> Self {
        let passed = checks.iter().all(|c| c.pass);
        VerificationReport { checks, passed }
    }

    pub fn max_residual(&self) -> f64 {
        self.checks
            .iter()
            .map(|c| c.max_residual)
            .fold(0.0, f64::max)
    }
}

fn basis(dim: usize) -> Vec<DVector<f64>> {
    (0..dim)
        .map(|i| {
            let mut e = DVector::zeros(dim);
            e[i] = 1.0;
            e
        })
        .collect()
}

struct Scan {
    checks: Vec<AxiomCheck>,
    tol: f64,
}

impl Scan {
    fn push(&mut self, name: &str, max_residual: f64) {
        self.checks.push(AxiomCheck {
            name: name.into(),
            max_residual,
            tolerance: self.tol,
            pass: max_residual <= self.tol,
        });
    }
}

/// Residual scale: bracket terms are quadratic in θ.
fn residual_scale(spec: &GroupSpec) -> f64 {
    let tmax = spec.theta().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    (1.0 + tmax) * (1.0 + tmax)
}

fn jacobi_residual(engine: &AlgebraEngine, es: &[DVector<f64>]) -> f64 {
    let dim = engine.dim();
    let mut worst = 0.0f64;
    // brackets land in the fiber and vanish unless one slot is a base vector
    for x in 0..dim {
        for y in (x + 1)..dim {
            let bxy = engine.bracket(&es[x], &es[y]);
            for z in (y + 1)..dim {
                let r = engine.bracket(&bxy, &es[z])
                    + engine.bracket(&engine.bracket(&es[y], &es[z]), &es[x])
                    + engine.bracket(&engine.bracket(&es[z], &es[x]), &es[y]);
                worst = worst.max(r.amax());
            }
        }
    }
    worst
}

fn curvature_residual(engine: &AlgebraEngine, es: &[DVector<f64>]) -> f64 {
    let dim = engine.dim();
    let mut worst = 0.0f64;
    for x in 0..dim {
        for y in (x + 1)..dim {
            for z in 0..dim {
                worst = worst.max(engine.curvature(&es[x], &es[y], &es[z]).amax());
            }
        }
    }
    worst
}

fn torsion_residual(engine: &AlgebraEngine, es: &[DVector<f64>]) -> f64 {
    let dim = engine.dim();
    let mut worst = 0.0f64;
    for x in 0..dim {
        for y in (x + 1)..dim {
            let r = engine.nabla(&es[x], &es[y])
                - engine.nabla(&es[y], &es[x])
                - engine.bracket(&es[x], &es[y]);
            worst = worst.max(r.amax());
        }
    }
    worst
}

fn metricity_residual(engine: &AlgebraEngine, es: &[DVector<f64>]) -> f64 {
    // left-invariant inner products are constant, so ⟨∇_xy,z⟩ + ⟨y,∇_xz⟩ = 0
    let dim = engine.dim();
    let mut worst = 0.0f64;
    for x in 0..dim {
        for y in 0..dim {
            let ny = engine.nabla(&es[x], &es[y]);
            for z in y..dim {
                let r = ny.dot(&es[z]) + engine.nabla(&es[x], &es[z]).dot(&es[y]);
                worst = worst.max(r.abs());
            }
        }
    }
    worst
}

fn structure_scan(
    engine: &AlgebraEngine,
    js: &[DMatrix<f64>],
    es: &[DVector<f64>],
    scan: &mut Scan,
) {
    let dim = engine.dim();
    let eye = DMatrix::<f64>::identity(dim, dim);

    let mut alg = 0.0f64;
    for j in js {
        alg = alg.max((j * j + &eye).amax());
        alg = alg.max((j.transpose() * j - &eye).amax());
    }
    if js.len() == 3 {
        alg = alg.max((&js[0] * &js[1] - &js[2]).amax());
    }
    scan.push("structure algebra (J² = −1, orthogonality, J₁J₂ = J₃)", alg);

    let mut nij = 0.0f64;
    let mut dom = 0.0f64;
    let mut par = 0.0f64;
    for j in js {
        for x in 0..dim {
            for y in 0..dim {
                if y > x {
                    nij = nij.max(nijenhuis_raw(engine, j, &es[x], &es[y]).amax());
                    for z in (y + 1)..dim {
                        dom = dom.max(d_omega_raw(engine, j, &es[x], &es[y], &es[z]).abs());
                    }
                }
                // (∇_x J)y = ∇_x(Jy) − J ∇_x y; not symmetric in (x, y)
                let r = engine.nabla(&es[x], &(j * &es[y])) - j * engine.nabla(&es[x], &es[y]);
                par = par.max(r.amax());
            }
        }
    }
    scan.push("Nijenhuis tensors vanish", nij);
    scan.push("Kähler forms closed (dω = 0)", dom);
    scan.push("structures parallel (∇J = 0)", par);
}

/// Full axiom scan for a hyper-Kähler spec: Jacobi, zero curvature,
/// torsion-freeness, metric compatibility, and the three Kähler structures.
/// Residuals are compared against `tol` scaled by the θ magnitude.
pub fn verify_hyperkahler(spec: &GroupSpec, tol: f64) -> Result<VerificationReport> {
    if spec.mode() != SpecMode::Hyperkahler {
        return Err(HkError::SpecInvalid(
            "verify_hyperkahler needs hyperkahler mode".into(),
        ));
    }
    let engine = AlgebraEngine::new(spec);
    let es = basis(engine.dim());
    let mut scan = Scan {
        checks: Vec::new(),
        tol: tol * residual_scale(spec),
    };

    scan.push("Jacobi identity", jacobi_residual(&engine, &es));
    scan.push(
        "flat left-invariant curvature",
        curvature_residual(&engine, &es),
    );
    scan.push("torsion-free connection", torsion_residual(&engine, &es));
    scan.push("metric compatibility", metricity_residual(&engine, &es));

    let js: Vec<DMatrix<f64>> = Axis::ALL
        .iter()
        .map(|&ax| structure_matrix(spec, ax))
        .collect::<Result<_>>()?;
    structure_scan(&engine, &js, &es, &mut scan);

    Ok(VerificationReport::from_checks(scan.checks))
}

/// Kähler check for the flat-pair case: a single parallel integrable
/// structure compatible with the metric. Needs an even base dimension.
pub fn kahler_structure_flat(spec: &GroupSpec, tol: f64) -> Result<VerificationReport> {
    let engine = AlgebraEngine::new(spec);
    let es = basis(engine.dim());
    let j = flat_structure_matrix(spec)?;
    let mut scan = Scan {
        checks: Vec::new(),
        tol: tol * residual_scale(spec),
    };

    scan.push("Jacobi identity", jacobi_residual(&engine, &es));
    scan.push(
        "flat left-invariant curvature",
        curvature_residual(&engine, &es),
    );
    structure_scan(&engine, std::slice::from_ref(&j), &es, &mut scan);

    Ok(VerificationReport::from_checks(scan.checks))
}
