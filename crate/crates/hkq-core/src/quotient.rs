//! The reduced metric on the zero level set modulo the subgroup, in
//! monopole chart coordinates, plus an independent numeric oracle.
//!
//! Chart for a spec with p base slots, q fiber slots, and l chosen
//! generators (all fiber slots away from zero):
//!
//! * one block of four coordinates per unchosen base slot γ
//!   (`x_γ, Im_i, Im_j, Im_k` in that order),
//! * the invariant fiber angles `τ_β = ψ_β − 2 Σ_a θ_β^a x_a`,
//! * the images `r_β = W̄_β i W_β`, three components each.
//!
//! With `H = θ̃ θ̃ᵗ + diag(1/|r_β|)` (θ̃ the chosen columns of θ) the
//! reduced metric is block diagonal: Euclidean on the unchosen slots and
//!
//! `¼ [ H_{βγ} dr_β·dr_γ + (H⁻¹)_{βγ} (dτ_β + A_β·dr_β)(dτ_γ + A_γ·dr_γ) ]`
//!
//! on the rest, where `A` is the monopole potential of the section used by
//! `from_monopole`. The oracle recomputes the same matrix from nothing but
//! the flat ambient metric: lift the chart to the level set, differentiate
//! the embedding numerically, and project out the subgroup directions.

use crate::error::HkError;
use crate::group::GroupElement;
use crate::moment::level_set_lift;
use crate::quat::{from_monopole, Branch, QVector, Quaternion, RADIUS_FLOOR, STRING_GUARD};
use crate::spec::{GroupSpec, LSpec};
use crate::Result;
use nalgebra::DMatrix;

/// Monopole potential of the fixed section: `A·dr = (−r₃ dr₂ + r₂ dr₃) /
/// (ρ(ρ + r₁))`, singular on the negative first axis, with
/// `curl A = r/ρ³`.
pub fn dirac_potential(r: [f64; 3]) -> Result<[f64; 3]> {
    let rho = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
    if rho <= RADIUS_FLOOR {
        return Err(HkError::ZeroRadius(rho));
    }
    if rho + r[0] <= STRING_GUARD * rho {
        return Err(HkError::StringLocus);
    }
    let denom = rho * (rho + r[0]);
    Ok([0.0, -r[2] / denom, r[1] / denom])
}

/// Chosen columns of θ as a q×l matrix.
fn theta_chosen(spec: &GroupSpec, lspec: &LSpec) -> DMatrix<f64> {
    let q = spec.q();
    let mut m = DMatrix::zeros(q, lspec.l());
    for (col, &a) in lspec.indices().iter().enumerate() {
        for beta in 0..q {
            m[(beta, col)] = spec.theta()[(beta, a - 1)];
        }
    }
    m
}

/// `H = θ̃ θ̃ᵗ + diag(1/|r_β|)`; symmetric positive definite away from the
/// degenerate loci.
pub fn h_matrix(spec: &GroupSpec, lspec: &LSpec, r: &[[f64; 3]]) -> Result<DMatrix<f64>> {
    if r.len() != spec.q() {
        return Err(HkError::ShapeMismatch(format!(
            "{} radius vectors for {} fiber slots",
            r.len(),
            spec.q()
        )));
    }
    let tc = theta_chosen(spec, lspec);
    let mut h = &tc * tc.transpose();
    for (beta, rb) in r.iter().enumerate() {
        let rho = (rb[0] * rb[0] + rb[1] * rb[1] + rb[2] * rb[2]).sqrt();
        if rho <= RADIUS_FLOOR {
            return Err(HkError::ZeroRadius(rho));
        }
        h[(beta, beta)] += 1.0 / rho;
    }
    Ok(h)
}

/// Point of the quotient chart described in the module docs.
#[derive(Debug, Clone, PartialEq)]
pub struct QuotientChartPoint {
    /// Four coordinates per unchosen base slot, slot-ascending.
    pub base_free: Vec<f64>,
    pub tau: Vec<f64>,
    pub r: Vec<[f64; 3]>,
}

/// 1-based base slots not named by the subgroup choice.
fn free_slots(spec: &GroupSpec, lspec: &LSpec) -> Vec<usize> {
    (1..=spec.p())
        .filter(|g| !lspec.indices().contains(g))
        .collect()
}

/// Dimension of the reduced space: `4(p − l) + 4q`.
pub fn quotient_dimension(spec: &GroupSpec, lspec: &LSpec) -> usize {
    4 * (spec.p() - lspec.l()) + 4 * spec.q()
}

impl QuotientChartPoint {
    pub fn dim(&self) -> usize {
        self.base_free.len() + self.tau.len() + 3 * self.r.len()
    }

    /// Flatten as `[base_free | τ | r components]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.base_free.clone();
        v.extend_from_slice(&self.tau);
        for rb in &self.r {
            v.extend_from_slice(rb);
        }
        v
    }

    pub fn from_vec(spec: &GroupSpec, lspec: &LSpec, v: &[f64]) -> Result<Self> {
        let q = spec.q();
        let nb = 4 * (spec.p() - lspec.l());
        if v.len() != nb + 4 * q {
            return Err(HkError::ShapeMismatch(format!(
                "chart vector has {} coordinates, expected {}",
                v.len(),
                nb + 4 * q
            )));
        }
        let base_free = v[..nb].to_vec();
        let tau = v[nb..nb + q].to_vec();
        let r = (0..q)
            .map(|b| {
                let at = nb + q + 3 * b;
                [v[at], v[at + 1], v[at + 2]]
            })
            .collect();
        Ok(QuotientChartPoint { base_free, tau, r })
    }
}

fn validate_chart(spec: &GroupSpec, lspec: &LSpec, pt: &QuotientChartPoint) -> Result<()> {
    crate::moment::validate_lspec(spec, lspec)?;
    if pt.base_free.len() != 4 * (spec.p() - lspec.l())
        || pt.tau.len() != spec.q()
        || pt.r.len() != spec.q()
    {
        return Err(HkError::ShapeMismatch(format!(
            "chart blocks ({}, {}, {}) do not fit p = {}, q = {}, l = {}",
            pt.base_free.len(),
            pt.tau.len(),
            pt.r.len(),
            spec.p(),
            spec.q(),
            lspec.l()
        )));
    }
    Ok(())
}

/// Reduced metric in chart coordinates, assembled from the closed form.
pub fn pp_metric(spec: &GroupSpec, lspec: &LSpec, pt: &QuotientChartPoint) -> Result<DMatrix<f64>> {
    validate_chart(spec, lspec, pt)?;
    let q = spec.q();
    let nb = pt.base_free.len();
    let n = nb + 4 * q;

    let h = h_matrix(spec, lspec, &pt.r)?;
    let hinv = h
        .clone()
        .cholesky()
        .ok_or_else(|| HkError::SpecInvalid("H matrix not positive definite".into()))?
        .inverse();
    let pots: Vec<[f64; 3]> =
        pt.r.iter()
            .map(|&rb| dirac_potential(rb))
            .collect::<Result<_>>()?;

    let mut g = DMatrix::zeros(n, n);
    for i in 0..nb {
        g[(i, i)] = 1.0;
    }
    let t_of = |beta: usize| nb + beta;
    let r_of = |beta: usize, m: usize| nb + q + 3 * beta + m;
    for beta in 0..q {
        for gamma in 0..q {
            g[(t_of(beta), t_of(gamma))] = 0.25 * hinv[(beta, gamma)];
            for m in 0..3 {
                let tr = 0.25 * hinv[(beta, gamma)] * pots[gamma][m];
                g[(t_of(beta), r_of(gamma, m))] = tr;
                g[(r_of(gamma, m), t_of(beta))] = tr;
                for nn in 0..3 {
                    let mut v = 0.25 * pots[beta][m] * hinv[(beta, gamma)] * pots[gamma][nn];
                    if m == nn {
                        v += 0.25 * h[(beta, gamma)];
                    }
                    g[(r_of(beta, m), r_of(gamma, nn))] = v;
                }
            }
        }
    }
    Ok(g)
}

/// Lift a chart point to the zero level set, in the gauge where the chosen
/// acting coordinates vanish (there τ_β = ψ_β).
pub fn chart_to_ambient(
    spec: &GroupSpec,
    lspec: &LSpec,
    pt: &QuotientChartPoint,
) -> Result<GroupElement> {
    validate_chart(spec, lspec, pt)?;
    let w = QVector(
        pt.tau
            .iter()
            .zip(&pt.r)
            .map(|(&tau, &rb)| from_monopole(tau, rb, Branch::Principal))
            .collect::<Result<_>>()?,
    );
    // level_set_lift wants the free base coordinates in storage order with
    // only the 3l determined imaginaries removed; chosen acting coords are 0
    let p = spec.p();
    let mut full = vec![0.0; spec.base_dim()];
    for (i, &slot) in free_slots(spec, lspec).iter().enumerate() {
        full[slot - 1] = pt.base_free[4 * i];
        full[p + slot - 1] = pt.base_free[4 * i + 1];
        full[2 * p + slot - 1] = pt.base_free[4 * i + 2];
        full[3 * p + slot - 1] = pt.base_free[4 * i + 3];
    }
    let mut determined = vec![false; spec.base_dim()];
    for &a in lspec.indices() {
        for off in [p, 2 * p, 3 * p] {
            determined[off + a - 1] = true;
        }
    }
    let base_free: Vec<f64> = full
        .iter()
        .zip(&determined)
        .filter_map(|(v, d)| (!d).then_some(*v))
        .collect();
    level_set_lift(
        spec,
        lspec,
        &crate::moment::LevelSetFreeCoords { base_free, w },
    )
}

/// Chart coordinates of a level-set point (inverts `chart_to_ambient` up to
/// the subgroup gauge).
pub fn ambient_to_chart(
    spec: &GroupSpec,
    lspec: &LSpec,
    g: &GroupElement,
) -> Result<QuotientChartPoint> {
    let rep = canonical_representative(spec, lspec, g);
    let p = spec.p();
    let mut base_free = Vec::with_capacity(4 * (p - lspec.l()));
    for &slot in &free_slots(spec, lspec) {
        base_free.push(rep.x[slot - 1]);
        base_free.push(rep.x[p + slot - 1]);
        base_free.push(rep.x[2 * p + slot - 1]);
        base_free.push(rep.x[3 * p + slot - 1]);
    }
    let mut tau = Vec::with_capacity(spec.q());
    let mut r = Vec::with_capacity(spec.q());
    for wb in &rep.w.0 {
        let mc = crate::quat::monopole_coords(*wb)?;
        tau.push(mc.psi);
        r.push(mc.r);
    }
    Ok(QuotientChartPoint { base_free, tau, r })
}

/// Exact generators of the subgroup action at a point:
/// `K_a = (e_a, i θ_β^a W_β)` in ambient coordinates, one column per
/// generator.
pub fn killing_columns(spec: &GroupSpec, lspec: &LSpec, g: &GroupElement) -> DMatrix<f64> {
    let dim = spec.dim();
    let base = spec.base_dim();
    let mut k = DMatrix::zeros(dim, lspec.l());
    for (col, &a) in lspec.indices().iter().enumerate() {
        k[(a - 1, col)] = 1.0;
        for (beta, wb) in g.w.0.iter().enumerate() {
            let iw = (Quaternion::I * *wb).scale(spec.theta()[(beta, a - 1)]);
            k[(base + 4 * beta, col)] = iw.re;
            k[(base + 4 * beta + 1, col)] = iw.i;
            k[(base + 4 * beta + 2, col)] = iw.j;
            k[(base + 4 * beta + 3, col)] = iw.k;
        }
    }
    k
}

const EMBED_STEP: f64 = 1e-6;

/// Independent numeric reduction: finite-difference the level-set embedding
/// and project the subgroup directions out of the flat ambient metric.
pub fn reduction_oracle(
    spec: &GroupSpec,
    lspec: &LSpec,
    pt: &QuotientChartPoint,
) -> Result<DMatrix<f64>> {
    validate_chart(spec, lspec, pt)?;
    let n = pt.dim();
    let dim = spec.dim();
    let base_vec = pt.to_vec();
    let mut jac = DMatrix::zeros(dim, n);
    for col in 0..n {
        let mut plus = base_vec.clone();
        plus[col] += EMBED_STEP;
        let mut minus = base_vec.clone();
        minus[col] -= EMBED_STEP;
        let fp = chart_to_ambient(
            spec,
            lspec,
            &QuotientChartPoint::from_vec(spec, lspec, &plus)?,
        )?
        .to_ambient();
        let fm = chart_to_ambient(
            spec,
            lspec,
            &QuotientChartPoint::from_vec(spec, lspec, &minus)?,
        )?
        .to_ambient();
        for row in 0..dim {
            jac[(row, col)] = (fp[row] - fm[row]) / (2.0 * EMBED_STEP);
        }
    }
    let out = if lspec.l() == 0 {
        jac.transpose() * &jac
    } else {
        let g0 = chart_to_ambient(spec, lspec, pt)?;
        let k = killing_columns(spec, lspec, &g0);
        let gram = k.transpose() * &k;
        let m = k.transpose() * &jac;
        let solved = gram
            .lu()
            .solve(&m)
            .ok_or_else(|| HkError::SpecInvalid("degenerate subgroup directions".into()))?;
        jac.transpose() * &jac - m.transpose() * solved
    };
    Ok(0.5 * (&out + out.transpose()))
}

/// Flat 4-metric of one fiber slot in monopole coordinates `(ψ, r)`:
/// `¼[(1/ρ)dr² + ρ(dψ + A·dr)²]`.
pub fn flat_chart_metric(r: [f64; 3]) -> Result<DMatrix<f64>> {
    let rho = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
    if rho <= RADIUS_FLOOR {
        return Err(HkError::ZeroRadius(rho));
    }
    let a = dirac_potential(r)?;
    let mut g = DMatrix::zeros(4, 4);
    g[(0, 0)] = 0.25 * rho;
    for m in 0..3 {
        g[(0, m + 1)] = 0.25 * rho * a[m];
        g[(m + 1, 0)] = g[(0, m + 1)];
        for n in 0..3 {
            g[(m + 1, n + 1)] = 0.25 * rho * a[m] * a[n];
        }
        g[(m + 1, m + 1)] += 0.25 / rho;
    }
    Ok(g)
}

/// Representative of the subgroup orbit with the chosen acting coordinates
/// translated to zero.
pub fn canonical_representative(spec: &GroupSpec, lspec: &LSpec, g: &GroupElement) -> GroupElement {
    let mut t = vec![0.0; spec.base_dim()];
    for &a in lspec.indices() {
        t[a - 1] = -g.x[a - 1];
    }
    crate::group::multiply(spec, &GroupElement::from_base(spec, t), g)
}

/// Whether the orbit of `g` is fixed by the whole residual torus. Matching
/// the base parts forces the trivial subgroup translation, so the orbit is
/// fixed exactly when every fiber slot of the canonical representative is
/// annihilated by phase rotation, i.e. vanishes.
pub fn is_torus_fixed(spec: &GroupSpec, lspec: &LSpec, g: &GroupElement, tol: f64) -> bool {
    let rep = canonical_representative(spec, lspec, g);
    let mut fixed = true;
    for beta in 0..spec.q() {
        let mut phases = vec![0.0; spec.q()];
        phases[beta] = std::f64::consts::FRAC_PI_2;
        let moved = canonical_representative(spec, lspec, &crate::group::act_torus(&phases, &rep));
        let d: f64 = moved
            .to_ambient()
            .iter()
            .zip(rep.to_ambient())
            .map(|(u, v)| (u - v) * (u - v))
            .sum::<f64>()
            .sqrt();
        fixed &= d <= tol;
    }
    fixed
}

/// 4-dimensional single-slot example: `s = 3, k = q = 1`, slope `theta`.
pub fn taub_nut(theta: f64) -> Result<(GroupSpec, LSpec)> {
    let spec = GroupSpec::hyperkahler(3, 1, 1, DMatrix::from_element(1, 1, theta))?;
    Ok((spec, LSpec::first(1)))
}

/// 4m-dimensional one-generator example: `s = 3, k = 1, q = m`, all slopes 1.
pub fn taubian_calabi(m: usize) -> Result<(GroupSpec, LSpec)> {
    let spec = GroupSpec::hyperkahler(3, 1, m, DMatrix::from_element(m, 1, 1.0))?;
    Ok((spec, LSpec::first(1)))
}

/// 4m-dimensional full-rank example: `s = 3m, k = q = m` with an invertible
/// square θ; every generator direction is used.
pub fn lwy(theta: DMatrix<f64>) -> Result<(GroupSpec, LSpec)> {
    let m = theta.nrows();
    if m == 0 || theta.ncols() != m {
        return Err(HkError::ShapeMismatch(format!(
            "nonempty square matrix required, got {}×{}",
            theta.nrows(),
            theta.ncols()
        )));
    }
    let svd = theta.clone().svd(false, false);
    let smax = svd.singular_values.iter().fold(0.0f64, |a, b| a.max(*b));
    let smin = svd
        .singular_values
        .iter()
        .fold(f64::INFINITY, |a, b| a.min(*b));
    if smin <= 1e-10 * smax.max(1.0) {
        return Err(HkError::SingularTheta(format!(
            "smallest singular value {smin:.3e} of the square parameter matrix"
        )));
    }
    let spec = GroupSpec::hyperkahler(3 * m, m, m, theta)?;
    Ok((spec, LSpec::first(m)))
}

/// Draw a chart point with unit-scale free coordinates, τ in (0, 4π), and
/// radii log-uniform in `[rho_lo, rho_hi]` kept at least 0.1 rad away from
/// the string direction.
pub fn random_chart_point(
    spec: &GroupSpec,
    lspec: &LSpec,
    rng: &mut impl rand::Rng,
    rho_lo: f64,
    rho_hi: f64,
) -> QuotientChartPoint {
    let base_free = (0..4 * (spec.p() - lspec.l()))
        .map(|_| rng.random_range(-2.0..2.0))
        .collect();
    let tau = (0..spec.q())
        .map(|_| rng.random_range(1e-3..4.0 * std::f64::consts::PI))
        .collect();
    let r = (0..spec.q())
        .map(|_| {
            let u = loop {
                let v: [f64; 3] = [
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                ];
                let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                if n > 0.1 && n <= 1.0 {
                    let u = [v[0] / n, v[1] / n, v[2] / n];
                    // keep clear of the string on the negative first axis
                    if u[0] > -(0.1f64.cos()) {
                        break u;
                    }
                }
            };
            let rho = (rng.random_range(rho_lo.ln()..rho_hi.ln())).exp();
            [rho * u[0], rho * u[1], rho * u[2]]
        })
        .collect();
    QuotientChartPoint { base_free, tau, r }
}

/// No-subgroup chart point for the same sampler (`l = 0` oracle checks).
pub fn empty_lspec() -> LSpec {
    LSpec::from_indices(Vec::new())
}

/// Chart dimension of the subgroup quotient of the whole group (no moment
/// map): every ambient coordinate except the chosen acting ones.
pub fn slice_dim(spec: &GroupSpec, lspec: &LSpec) -> usize {
    spec.dim() - lspec.l()
}

/// Ambient indices kept by the slice chart, in storage order.
fn slice_kept(spec: &GroupSpec, lspec: &LSpec) -> Vec<usize> {
    (0..spec.dim())
        .filter(|i| !lspec.indices().iter().any(|&a| a - 1 == *i))
        .collect()
}

pub fn slice_chart_to_ambient(spec: &GroupSpec, lspec: &LSpec, chart: &[f64]) -> GroupElement {
    let mut amb = vec![0.0; spec.dim()];
    for (c, &i) in slice_kept(spec, lspec).iter().enumerate() {
        amb[i] = chart[c];
    }
    GroupElement::from_ambient(spec, &amb)
}

/// Metric of the subgroup quotient of the whole group in the gauge slice
/// where the chosen acting coordinates vanish.
///
/// The slice embeds linearly, so the reduced metric is the horizontal
/// projector `I − K(KᵗK)⁻¹Kᵗ` of the generator columns, restricted to the
/// kept coordinates. Exact (no differencing), hence safe to feed into
/// finite-difference curvature.
pub fn slice_metric(spec: &GroupSpec, lspec: &LSpec, chart: &[f64]) -> Result<DMatrix<f64>> {
    lspec.validate_shape(spec)?;
    let kept = slice_kept(spec, lspec);
    if chart.len() != kept.len() {
        return Err(HkError::ShapeMismatch(format!(
            "slice chart has {} coordinates, expected {}",
            chart.len(),
            kept.len()
        )));
    }
    let n = kept.len();
    if lspec.l() == 0 {
        return Ok(DMatrix::identity(n, n));
    }
    let g0 = slice_chart_to_ambient(spec, lspec, chart);
    let k = killing_columns(spec, lspec, &g0);
    let gram = k.transpose() * &k;
    // K restricted to kept rows
    let mut kt = DMatrix::zeros(n, lspec.l());
    for (row, &i) in kept.iter().enumerate() {
        for col in 0..lspec.l() {
            kt[(row, col)] = k[(i, col)];
        }
    }
    let solved = gram
        .lu()
        .solve(&kt.transpose())
        .ok_or_else(|| HkError::SpecInvalid("degenerate subgroup directions".into()))?;
    let out = DMatrix::identity(n, n) - &kt * solved;
    Ok(0.5 * (&out + out.transpose()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;
    use rand::SeedableRng;

    #[test]
    fn potential_curl_points_outward() {
        let pts: [[f64; 3]; 3] = [[0.3, -0.7, 0.4], [1.0, 0.2, -0.5], [-0.2, 1.5, 2.0]];
        let h = 1e-5;
        for r in pts {
            let rho = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
            let mut curl = [0.0; 3];
            let d = |m: usize, n: usize| -> f64 {
                // ∂_m A_n by central difference
                let mut plus = r;
                plus[m] += h;
                let mut minus = r;
                minus[m] -= h;
                (dirac_potential(plus).unwrap()[n] - dirac_potential(minus).unwrap()[n]) / (2.0 * h)
            };
            curl[0] = d(1, 2) - d(2, 1);
            curl[1] = d(2, 0) - d(0, 2);
            curl[2] = d(0, 1) - d(1, 0);
            for m in 0..3 {
                assert!(
                    (curl[m] - r[m] / rho.powi(3)).abs() < 1e-8,
                    "component {m} at {r:?}"
                );
            }
        }
    }

    #[test]
    fn potential_string_and_origin_guards() {
        assert!(matches!(
            dirac_potential([-1.0, 1e-14, 0.0]),
            Err(HkError::StringLocus)
        ));
        assert!(matches!(
            dirac_potential([0.0, 0.0, 0.0]),
            Err(HkError::ZeroRadius(_))
        ));
    }

    #[test]
    fn h_matrix_single_slot_values() {
        for theta in [1.0, 2.0, 3.0] {
            let (spec, lspec) = taub_nut(theta).unwrap();
            for rho in [0.1, 1.0, 10.0] {
                let h = h_matrix(&spec, &lspec, &[[0.0, 0.0, rho]]).unwrap();
                assert!((h[(0, 0)] - (theta * theta + 1.0 / rho)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn single_slot_hand_metric() {
        let (spec, lspec) = taub_nut(1.0).unwrap();
        let pt = QuotientChartPoint {
            base_free: vec![],
            tau: vec![1.0],
            r: vec![[0.0, 0.0, 1.0]],
        };
        let g = pp_metric(&spec, &lspec, &pt).unwrap();
        // H = 2, A = (0, −1, 0)
        assert!((g[(0, 0)] - 0.125).abs() < 1e-15);
        assert!((g[(0, 1)] - 0.0).abs() < 1e-15);
        assert!((g[(0, 2)] + 0.125).abs() < 1e-15);
        assert!((g[(0, 3)] - 0.0).abs() < 1e-15);
        assert!((g[(1, 1)] - 0.5).abs() < 1e-15);
        assert!((g[(2, 2)] - 0.625).abs() < 1e-15);
        assert!((g[(3, 3)] - 0.5).abs() < 1e-15);
        assert!((g[(1, 2)]).abs() < 1e-15);
        assert!((g[(1, 3)]).abs() < 1e-15);
        assert!((g[(2, 3)]).abs() < 1e-15);
    }

    #[test]
    fn single_slot_general_radius() {
        let (spec, lspec) = taub_nut(1.0).unwrap();
        for rho in [0.1, 1.0, 10.0] {
            let h = 1.0 + 1.0 / rho;
            let pt = QuotientChartPoint {
                base_free: vec![],
                tau: vec![2.0],
                r: vec![[0.0, 0.0, rho]],
            };
            let g = pp_metric(&spec, &lspec, &pt).unwrap();
            assert!((g[(0, 0)] - 0.25 / h).abs() < 1e-14);
            assert!((g[(0, 2)] + 0.25 / (h * rho)).abs() < 1e-14);
            assert!((g[(1, 1)] - 0.25 * h).abs() < 1e-14);
            assert!((g[(2, 2)] - (0.25 * h + 0.25 / (h * rho * rho))).abs() < 1e-14);
            assert!((g[(3, 3)] - 0.25 * h).abs() < 1e-14);
        }
    }

    #[test]
    fn flat_chart_matches_euclidean_pullback() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        use rand::Rng;
        for _ in 0..20 {
            let psi = rng.random_range(0.3..12.0);
            let r: [f64; 3] = [
                rng.random_range(-1.0..2.0f64).max(-0.5),
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
            ];
            let rho = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
            if rho < 0.3 || rho + r[0] < 0.2 {
                continue;
            }
            let g = flat_chart_metric(r).unwrap();
            // numeric Jacobian of (ψ, r) ↦ W
            let h = 1e-6;
            let mut jac = DMatrix::zeros(4, 4);
            for col in 0..4 {
                let perturb = |sign: f64| {
                    let mut psi2 = psi;
                    let mut r2 = r;
                    if col == 0 {
                        psi2 += sign * h;
                    } else {
                        r2[col - 1] += sign * h;
                    }
                    let w = from_monopole(psi2, r2, Branch::Principal).unwrap();
                    [w.re, w.i, w.j, w.k]
                };
                let fp = perturb(1.0);
                let fm = perturb(-1.0);
                for row in 0..4 {
                    jac[(row, col)] = (fp[row] - fm[row]) / (2.0 * h);
                }
            }
            let pullback = jac.transpose() * &jac;
            assert!(
                (&pullback - &g).amax() < 1e-7,
                "mismatch {:.2e} at r = {r:?}",
                (&pullback - &g).amax()
            );
        }
    }

    #[test]
    fn chart_round_trip() {
        let (spec, lspec) = taubian_calabi(2).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let pt = random_chart_point(&spec, &lspec, &mut rng, 0.5, 5.0);
            let g = chart_to_ambient(&spec, &lspec, &pt).unwrap();
            assert!(crate::moment::moment(&spec, &lspec, &g).unwrap().amax() < 1e-12);
            let back = ambient_to_chart(&spec, &lspec, &g).unwrap();
            let (a, b) = (pt.to_vec(), back.to_vec());
            for (u, v) in a.iter().zip(&b) {
                assert!((u - v).abs() < 1e-10, "{a:?} vs {b:?}");
            }
        }
    }

    #[test]
    fn oracle_matches_closed_form() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let cases: Vec<(GroupSpec, LSpec)> = vec![
            taub_nut(1.0).unwrap(),
            taub_nut(2.5).unwrap(),
            taubian_calabi(2).unwrap(),
            lwy(dmatrix![1.0, 0.0; 1.0, 2.0]).unwrap(),
        ];
        for (spec, lspec) in cases {
            for _ in 0..4 {
                let pt = random_chart_point(&spec, &lspec, &mut rng, 0.5, 5.0);
                let closed = pp_metric(&spec, &lspec, &pt).unwrap();
                let oracle = reduction_oracle(&spec, &lspec, &pt).unwrap();
                let diff = (&closed - &oracle).amax();
                assert!(
                    diff < 1e-7,
                    "diff {diff:.2e} for p={} q={}",
                    spec.p(),
                    spec.q()
                );
            }
        }
    }

    #[test]
    fn no_subgroup_oracle_is_flat_product() {
        // l = 0: the "reduction" is just the flat metric in chart coordinates
        let spec = GroupSpec::hyperkahler(3, 1, 1, dmatrix![1.0]).unwrap();
        let lspec = empty_lspec();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(29);
        for _ in 0..5 {
            let pt = random_chart_point(&spec, &lspec, &mut rng, 0.5, 5.0);
            let closed = pp_metric(&spec, &lspec, &pt).unwrap();
            let oracle = reduction_oracle(&spec, &lspec, &pt).unwrap();
            assert!((&closed - &oracle).amax() < 1e-7);
            // base block Euclidean, fiber block the one-slot flat chart
            let flat = flat_chart_metric(pt.r[0]).unwrap();
            for i in 0..4 {
                assert!((closed[(i, i)] - 1.0).abs() < 1e-14);
                for j in 0..4 {
                    assert!((closed[(4 + i, 4 + j)] - flat[(i, j)]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn metric_is_positive_definite() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        let (spec, lspec) = lwy(dmatrix![2.0, 1.0; 0.0, 1.0]).unwrap();
        for _ in 0..10 {
            let pt = random_chart_point(&spec, &lspec, &mut rng, 0.1, 50.0);
            let g = pp_metric(&spec, &lspec, &pt).unwrap();
            assert!(g.cholesky().is_some(), "not PD at {pt:?}");
        }
    }

    #[test]
    fn preset_shapes_and_dimensions() {
        let (spec, lspec) = taub_nut(1.0).unwrap();
        assert_eq!(quotient_dimension(&spec, &lspec), 4);
        let (spec, lspec) = taubian_calabi(3).unwrap();
        assert_eq!(quotient_dimension(&spec, &lspec), 12);
        assert_eq!(spec.s(), 3);
        let (spec, lspec) = lwy(DMatrix::identity(2, 2)).unwrap();
        assert_eq!(spec.s(), 6);
        assert_eq!(spec.base_dim(), 8);
        assert_eq!(quotient_dimension(&spec, &lspec), 8);
        assert!(matches!(
            lwy(dmatrix![1.0, 1.0; 1.0, 1.0]),
            Err(HkError::SingularTheta(_))
        ));
        assert!(matches!(
            lwy(DMatrix::zeros(0, 0)),
            Err(HkError::ShapeMismatch(_))
        ));
        assert!(matches!(
            lwy(DMatrix::zeros(2, 3)),
            Err(HkError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn slice_metric_shape_and_limits() {
        let (spec, lspec) = taub_nut(2.0).unwrap();
        let n = slice_dim(&spec, &lspec);
        assert_eq!(n, 7);
        // with the fiber at zero the generators are the coordinate axes we
        // removed, so the quotient chart is Euclidean
        let g = slice_metric(&spec, &lspec, &vec![0.0; n]).unwrap();
        assert!((&g - DMatrix::<f64>::identity(n, n)).amax() < 1e-14);
        // generic point: symmetric positive definite, fiber directions
        // shortened by the projection
        let mut chart = vec![0.0; n];
        chart[3] = 1.0; // fiber real part
        let g = slice_metric(&spec, &lspec, &chart).unwrap();
        assert!(g.clone().cholesky().is_some());
        let scale = 1.0 / (1.0 + 4.0); // 1/(1 + θ²|W|²)
                                       // horizontal part of the i-axis direction: 1 − θ²|W_i-col|²/(1+θ²|W|²)
        assert!((g[(4, 4)] - (1.0 - 4.0 * scale)).abs() < 1e-12);
    }

    #[test]
    fn torus_fixes_only_the_origin_orbit() {
        let (spec, lspec) = lwy(DMatrix::identity(2, 2)).unwrap();
        let origin = GroupElement::identity(&spec);
        assert!(is_torus_fixed(&spec, &lspec, &origin, 1e-12));
        // translations along the quotiented directions stay in the class
        let shifted = GroupElement::from_base(&spec, vec![1.0, -2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(is_torus_fixed(&spec, &lspec, &shifted, 1e-12));
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(53);
        for _ in 0..20 {
            let g = crate::moment::random_regular_point(&spec, &mut rng);
            assert!(!is_torus_fixed(&spec, &lspec, &g, 1e-9));
        }
    }
}
