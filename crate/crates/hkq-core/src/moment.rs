//! The tri-Hamiltonian moment map of the chosen abelian subgroup and the
//! zero level set.
//!
//! For generators e_a of 𝔩 the value is an l×3 matrix, one ℝ³ row per
//! generator: `row_a = −Im X_a + ½ Σ_β θ_β^a · r(W_β)` with
//! `r(W) = Im(W̄ i W)`. Three implementations are kept deliberately
//! separate so they can cross-check each other: quaternion products, the
//! closed polynomial form, and the coordinate-free contraction
//! `μ_α(V) = ω_α(V, X) + ½ ω_α(ρ(V)W, W)`.

use crate::error::HkError;
use crate::group::GroupElement;
use crate::liealg::structure_matrix;
use crate::quat::{r_vector, Axis, QVector, Quaternion};
use crate::spec::{GroupSpec, LSpec, SpecMode};
use crate::Result;
use nalgebra::{DMatrix, DVector};

/// Indices into the base layout of the three imaginary coordinates of
/// quaternion slot `a` (1-based).
fn imag_coords(spec: &GroupSpec, a: usize) -> [usize; 3] {
    let p = spec.p();
    [p + (a - 1), 2 * p + (a - 1), 3 * p + (a - 1)]
}

fn check_display_indices(spec: &GroupSpec, lspec: &LSpec) -> Result<()> {
    for &a in lspec.indices() {
        if a > spec.p() {
            return Err(HkError::SpecInvalid(format!(
                "generator index {} has no base quaternion slot (p = {})",
                a,
                spec.p()
            )));
        }
    }
    Ok(())
}

/// Moment value via quaternion products: `Im(W̄ i W)` computed literally.
pub fn moment_quaternionic(
    spec: &GroupSpec,
    lspec: &LSpec,
    g: &GroupElement,
) -> Result<DMatrix<f64>> {
    lspec.validate_shape(spec)?;
    check_display_indices(spec, lspec)?;
    let quats = spec.base_quats(&g.x);
    let mut out = DMatrix::zeros(lspec.l(), 3);
    for (row, &a) in lspec.indices().iter().enumerate() {
        let im = quats[a - 1].imag();
        let mut acc = [-im[0], -im[1], -im[2]];
        for (beta, wb) in g.w.0.iter().enumerate() {
            let rim = ((wb.conj() * Quaternion::I) * *wb).imag();
            let coef = 0.5 * spec.theta()[(beta, a - 1)];
            for m in 0..3 {
                acc[m] += coef * rim[m];
            }
        }
        for m in 0..3 {
            out[(row, m)] = acc[m];
        }
    }
    Ok(out)
}

/// Moment value via the closed polynomial components of `r`.
pub fn moment_real(spec: &GroupSpec, lspec: &LSpec, g: &GroupElement) -> Result<DMatrix<f64>> {
    lspec.validate_shape(spec)?;
    check_display_indices(spec, lspec)?;
    let mut out = DMatrix::zeros(lspec.l(), 3);
    for (row, &a) in lspec.indices().iter().enumerate() {
        let im = imag_coords(spec, a);
        for m in 0..3 {
            out[(row, m)] = -g.x[im[m]];
        }
        for (beta, wb) in g.w.0.iter().enumerate() {
            let r = r_vector(*wb);
            let coef = 0.5 * spec.theta()[(beta, a - 1)];
            for m in 0..3 {
                out[(row, m)] += coef * r[m];
            }
        }
    }
    Ok(out)
}

/// Moment value via the coordinate-free contraction with the Kähler forms:
/// `μ_α(V) = ω_α(V, X) + ½ ω_α(ρ(V)W, W)` for each generator direction V.
pub fn moment_contraction(
    spec: &GroupSpec,
    lspec: &LSpec,
    g: &GroupElement,
) -> Result<DMatrix<f64>> {
    lspec.validate_shape(spec)?;
    let base = spec.base_dim();
    let dim = spec.dim();
    let x_raw = {
        let mut v = DVector::zeros(dim);
        for (i, c) in g.x.iter().enumerate() {
            v[i] = *c;
        }
        v
    };
    let w_raw = {
        let mut v = DVector::zeros(dim);
        for (i, c) in g.w.to_reals().iter().enumerate() {
            v[base + i] = *c;
        }
        v
    };
    let mut out = DMatrix::zeros(lspec.l(), 3);
    for (m, &axis) in Axis::ALL.iter().enumerate() {
        let j = structure_matrix(spec, axis)?;
        for (row, &a) in lspec.indices().iter().enumerate() {
            let mut v = DVector::zeros(dim);
            v[a - 1] = 1.0;
            // ρ(V)W lives in the fiber block
            let mut rv = DVector::zeros(dim);
            for (beta, wb) in g.w.0.iter().enumerate() {
                let iw = (Quaternion::I * *wb).scale(spec.theta()[(beta, a - 1)]);
                rv[base + 4 * beta] = iw.re;
                rv[base + 4 * beta + 1] = iw.i;
                rv[base + 4 * beta + 2] = iw.j;
                rv[base + 4 * beta + 3] = iw.k;
            }
            out[(row, m)] = (&j * &v).dot(&x_raw) + 0.5 * (&j * &rv).dot(&w_raw);
        }
    }
    Ok(out)
}

/// Default moment evaluation (the closed polynomial form).
pub fn moment(spec: &GroupSpec, lspec: &LSpec, g: &GroupElement) -> Result<DMatrix<f64>> {
    moment_real(spec, lspec, g)
}

/// Free coordinates on the zero level set: every base coordinate except
/// the 3l imaginaries of the chosen slots, in storage order, plus the
/// whole fiber.
#[derive(Debug, Clone)]
pub struct LevelSetFreeCoords {
    pub base_free: Vec<f64>,
    pub w: QVector,
}

impl LevelSetFreeCoords {
    pub fn dim(spec: &GroupSpec, lspec: &LSpec) -> usize {
        spec.base_dim() - 3 * lspec.l() + spec.fiber_dim()
    }
}

/// Solve `μ = 0` for the determined coordinates:
/// `Im X_a = ½ Σ_β θ_β^a r(W_β)` for each chosen slot.
pub fn level_set_lift(
    spec: &GroupSpec,
    lspec: &LSpec,
    free: &LevelSetFreeCoords,
) -> Result<GroupElement> {
    lspec.validate_shape(spec)?;
    check_display_indices(spec, lspec)?;
    if free.w.len() != spec.q() {
        return Err(HkError::ShapeMismatch(format!(
            "fiber has {} slots, expected {}",
            free.w.len(),
            spec.q()
        )));
    }
    let expected = spec.base_dim() - 3 * lspec.l();
    if free.base_free.len() != expected {
        return Err(HkError::ShapeMismatch(format!(
            "free base block has {} coordinates, expected {}",
            free.base_free.len(),
            expected
        )));
    }
    let mut determined = vec![false; spec.base_dim()];
    for &a in lspec.indices() {
        for idx in imag_coords(spec, a) {
            determined[idx] = true;
        }
    }
    let mut x = vec![0.0; spec.base_dim()];
    let mut feed = free.base_free.iter();
    for (i, slot) in x.iter_mut().enumerate() {
        if !determined[i] {
            *slot = *feed.next().expect("length checked above");
        }
    }
    for &a in lspec.indices() {
        let im = imag_coords(spec, a);
        for (m, idx) in im.into_iter().enumerate() {
            let mut v = 0.0;
            for (beta, wb) in free.w.0.iter().enumerate() {
                v += 0.5 * spec.theta()[(beta, a - 1)] * r_vector(*wb)[m];
            }
            x[idx] = v;
        }
    }
    Ok(GroupElement::new(x, free.w.clone()))
}

/// Analytic Jacobian of the stacked moment components, rows ordered
/// (generator, axis), columns in ambient order `[base | fiber reals]`.
pub fn moment_jacobian(spec: &GroupSpec, lspec: &LSpec, g: &GroupElement) -> Result<DMatrix<f64>> {
    lspec.validate_shape(spec)?;
    check_display_indices(spec, lspec)?;
    let base = spec.base_dim();
    let mut jac = DMatrix::zeros(3 * lspec.l(), spec.dim());
    for (row, &a) in lspec.indices().iter().enumerate() {
        let im = imag_coords(spec, a);
        for m in 0..3 {
            jac[(3 * row + m, im[m])] = -1.0;
        }
        for (beta, wb) in g.w.0.iter().enumerate() {
            let (u, y, z, w) = (wb.re, wb.i, wb.j, wb.k);
            let dr = [
                [2.0 * u, 2.0 * y, -2.0 * z, -2.0 * w],
                [-2.0 * w, 2.0 * z, 2.0 * y, -2.0 * u],
                [2.0 * z, 2.0 * w, 2.0 * u, 2.0 * y],
            ];
            let coef = 0.5 * spec.theta()[(beta, a - 1)];
            for m in 0..3 {
                for c in 0..4 {
                    jac[(3 * row + m, base + 4 * beta + c)] = coef * dr[m][c];
                }
            }
        }
    }
    Ok(jac)
}

/// Max change of the moment under random subgroup translations and torus
/// phases; exact invariance means this stays at rounding level.
pub fn check_invariance(
    spec: &GroupSpec,
    lspec: &LSpec,
    g: &GroupElement,
    trials: usize,
    rng: &mut impl rand::Rng,
) -> Result<f64> {
    let mu = moment(spec, lspec, g)?;
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let mut v = vec![0.0; spec.base_dim()];
        for &a in lspec.indices() {
            v[a - 1] = rng.random_range(-10.0..10.0);
        }
        let moved = crate::group::multiply(spec, &GroupElement::from_base(spec, v), g);
        worst = worst.max((moment(spec, lspec, &moved)? - &mu).amax());

        let phases: Vec<f64> = (0..spec.q())
            .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
            .collect();
        let turned = crate::group::act_torus(&phases, g);
        worst = worst.max((moment(spec, lspec, &turned)? - &mu).amax());
    }
    Ok(worst)
}

/// Full validation of a subgroup choice: shape plus numeric tri-isotropy
/// of the generator span under all three Kähler forms.
pub fn validate_lspec(spec: &GroupSpec, lspec: &LSpec) -> Result<()> {
    lspec.validate_shape(spec)?;
    if spec.mode() != SpecMode::Hyperkahler {
        return Err(HkError::SpecInvalid(
            "subgroup validation needs hyperkahler mode".into(),
        ));
    }
    let dim = spec.dim();
    for axis in Axis::ALL {
        let j = structure_matrix(spec, axis)?;
        for &a in lspec.indices() {
            for &b in lspec.indices() {
                let mut va = DVector::zeros(dim);
                va[a - 1] = 1.0;
                let mut vb = DVector::zeros(dim);
                vb[b - 1] = 1.0;
                let val = (&j * &va).dot(&vb);
                if val.abs() > 1e-12 {
                    return Err(HkError::IsotropyViolation(format!(
                        "ω_{:?}(e_{}, e_{}) = {val:.3e} ≠ 0",
                        axis, a, b
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Random point with every fiber slot bounded away from zero; handy for
/// sampling where the quotient construction is regular.
pub fn random_regular_point(spec: &GroupSpec, rng: &mut impl rand::Rng) -> GroupElement {
    let x: Vec<f64> = (0..spec.base_dim())
        .map(|_| rng.random_range(-2.0..2.0))
        .collect();
    let w = QVector(
        (0..spec.q())
            .map(|_| loop {
                let w = Quaternion::new(
                    rng.random_range(-2.0..2.0),
                    rng.random_range(-2.0..2.0),
                    rng.random_range(-2.0..2.0),
                    rng.random_range(-2.0..2.0),
                );
                if w.norm() > 0.3 {
                    break w;
                }
            })
            .collect(),
    );
    GroupElement::new(x, w)
}
