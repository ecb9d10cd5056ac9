//! Finite-difference curvature of metric fields given as closures.
//!
//! Everything here treats the metric as a black box `x ↦ g(x)`, so the
//! same code verifies closed-form metrics, numeric reductions, and test
//! fixtures. Derivatives are central differences with an optional
//! Richardson pass; a failed stencil evaluation (for example a point
//! pushed onto the potential string) surfaces as `DomainBoundary`.

use crate::error::HkError;
use crate::spec::{GroupSpec, LSpec};
use crate::Result;
use nalgebra::{DMatrix, DVector};

/// Boxed metric evaluator: chart coordinates in, matrix out.
type MetricFn = Box<dyn Fn(&[f64]) -> Result<DMatrix<f64>> + Send + Sync>;

/// A metric as a function of chart coordinates. The closure must return a
/// symmetric positive definite matrix of the stated dimension.
pub struct MetricField {
    dim: usize,
    f: MetricFn,
}

impl MetricField {
    pub fn from_fn(
        dim: usize,
        f: impl Fn(&[f64]) -> Result<DMatrix<f64>> + Send + Sync + 'static,
    ) -> Self {
        MetricField {
            dim,
            f: Box::new(f),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        if x.len() != self.dim {
            return Err(HkError::ShapeMismatch(format!(
                "point has {} coordinates, metric field expects {}",
                x.len(),
                self.dim
            )));
        }
        (self.f)(x)
    }

    /// Euclidean space, mostly for calibration.
    pub fn euclidean(dim: usize) -> Self {
        MetricField::from_fn(dim, move |_| Ok(DMatrix::identity(dim, dim)))
    }

    /// Unit 3-sphere in polar coordinates `(χ, θ, φ)`; constant sectional
    /// curvature +1, Ricci = 2g.
    pub fn round_sphere3() -> Self {
        MetricField::from_fn(3, |x| {
            let (chi, theta) = (x[0], x[1]);
            let mut g = DMatrix::zeros(3, 3);
            g[(0, 0)] = 1.0;
            g[(1, 1)] = chi.sin().powi(2);
            g[(2, 2)] = (chi.sin() * theta.sin()).powi(2);
            if g[(1, 1)] < 1e-12 || g[(2, 2)] < 1e-12 {
                return Err(HkError::DomainBoundary(
                    "polar coordinate degeneracy".into(),
                ));
            }
            Ok(g)
        })
    }

    /// The reduced metric of a spec in its monopole chart.
    pub fn reduced(spec: GroupSpec, lspec: LSpec) -> Self {
        let dim = crate::quotient::quotient_dimension(&spec, &lspec);
        MetricField::from_fn(dim, move |x| {
            let pt = crate::quotient::QuotientChartPoint::from_vec(&spec, &lspec, x)?;
            crate::quotient::pp_metric(&spec, &lspec, &pt)
        })
    }

    /// The independently reduced metric (finite-difference oracle) on the
    /// same chart as [`MetricField::reduced`].
    pub fn reduced_oracle(spec: GroupSpec, lspec: LSpec) -> Self {
        let dim = crate::quotient::quotient_dimension(&spec, &lspec);
        MetricField::from_fn(dim, move |x| {
            let pt = crate::quotient::QuotientChartPoint::from_vec(&spec, &lspec, x)?;
            crate::quotient::reduction_oracle(&spec, &lspec, &pt)
        })
    }

    /// The subgroup quotient of the whole group on its linear gauge slice.
    pub fn subgroup_slice(spec: GroupSpec, lspec: LSpec) -> Self {
        let dim = crate::quotient::slice_dim(&spec, &lspec);
        MetricField::from_fn(dim, move |x| {
            crate::quotient::slice_metric(&spec, &lspec, x)
        })
    }
}

/// Step control for the differencing.
#[derive(Debug, Clone, Copy)]
pub struct FdScheme {
    pub step: f64,
    pub richardson: bool,
}

impl Default for FdScheme {
    fn default() -> Self {
        FdScheme {
            step: 1e-3,
            richardson: false,
        }
    }
}

impl FdScheme {
    pub fn with_step(step: f64) -> Self {
        FdScheme {
            step,
            richardson: false,
        }
    }

    pub fn refined(step: f64) -> Self {
        FdScheme {
            step,
            richardson: true,
        }
    }
}

fn boundary(e: HkError) -> HkError {
    match e {
        HkError::DomainBoundary(_) => e,
        other => HkError::DomainBoundary(format!(
            "finite-difference stencil left the chart domain: {other}"
        )),
    }
}

/// Central difference of a matrix-valued map along coordinate `k`.
fn central<F>(f: &F, x: &[f64], k: usize, h: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<DMatrix<f64>>,
{
    let mut xp = x.to_vec();
    xp[k] += h;
    let mut xm = x.to_vec();
    xm[k] -= h;
    let fp = f(&xp).map_err(boundary)?;
    let fm = f(&xm).map_err(boundary)?;
    Ok((fp - fm) / (2.0 * h))
}

fn derivative<F>(f: &F, x: &[f64], k: usize, scheme: FdScheme) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<DMatrix<f64>>,
{
    if scheme.richardson {
        let coarse = central(f, x, k, scheme.step)?;
        let fine = central(f, x, k, 0.5 * scheme.step)?;
        Ok((fine * 4.0 - coarse) / 3.0)
    } else {
        central(f, x, k, scheme.step)
    }
}

/// Christoffel symbols `Γ^i_{jk}`, one matrix `(j, k)` per upper index.
pub fn christoffel(field: &MetricField, x: &[f64], scheme: FdScheme) -> Result<Vec<DMatrix<f64>>> {
    let n = field.dim();
    let g = field.eval(x)?;
    let ginv = g
        .clone()
        .cholesky()
        .ok_or_else(|| HkError::SpecInvalid("metric not positive definite".into()))?
        .inverse();
    let dg: Vec<DMatrix<f64>> = (0..n)
        .map(|k| derivative(&|y: &[f64]| field.eval(y), x, k, scheme))
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut gi = DMatrix::zeros(n, n);
        for j in 0..n {
            for k in 0..n {
                let mut acc = 0.0;
                for l in 0..n {
                    acc += ginv[(i, l)] * (dg[j][(l, k)] + dg[k][(j, l)] - dg[l][(j, k)]);
                }
                gi[(j, k)] = 0.5 * acc;
            }
        }
        out.push(gi);
    }
    Ok(out)
}

/// `R^i_{jkl}` stored flat with stride n; `R(∂_k, ∂_l)∂_j = R^i_{jkl} ∂_i`.
pub struct RiemannTensor {
    n: usize,
    data: Vec<f64>,
}

impl RiemannTensor {
    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.data[((i * self.n + j) * self.n + k) * self.n + l]
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// `Ric_{jl} = R^k_{jkl}`.
    pub fn ricci(&self) -> DMatrix<f64> {
        let n = self.n;
        let mut ric = DMatrix::zeros(n, n);
        for j in 0..n {
            for l in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += self.get(k, j, k, l);
                }
                ric[(j, l)] = acc;
            }
        }
        ric
    }

    /// Fully lowered `R_{ijkl} = g_{im} R^m_{jkl}`.
    pub fn lowered(&self, g: &DMatrix<f64>) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut acc = 0.0;
                        for m in 0..n {
                            acc += g[(i, m)] * self.get(m, j, k, l);
                        }
                        out[((i * n + j) * n + k) * n + l] = acc;
                    }
                }
            }
        }
        out
    }
}

/// Curvature tensor at `x` by differencing the Christoffel symbols.
pub fn riemann(field: &MetricField, x: &[f64], scheme: FdScheme) -> Result<RiemannTensor> {
    let n = field.dim();
    let gamma = christoffel(field, x, scheme)?;
    // pack Γ at offset points into a single matrix-valued map for `derivative`
    let gamma_flat = |y: &[f64]| -> Result<DMatrix<f64>> {
        let gs = christoffel(field, y, scheme)?;
        let mut m = DMatrix::zeros(n * n, n);
        for (i, gi) in gs.iter().enumerate() {
            for j in 0..n {
                for k in 0..n {
                    m[(i * n + j, k)] = gi[(j, k)];
                }
            }
        }
        Ok(m)
    };
    let dgamma: Vec<DMatrix<f64>> = (0..n)
        .map(|k| derivative(&gamma_flat, x, k, scheme))
        .collect::<Result<_>>()?;
    let gam = |i: usize, j: usize, k: usize| gamma[i][(j, k)];
    let dgam = |kdir: usize, i: usize, j: usize, k: usize| dgamma[kdir][(i * n + j, k)];
    let mut data = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut v = dgam(k, i, l, j) - dgam(l, i, k, j);
                    for m in 0..n {
                        v += gam(i, k, m) * gam(m, l, j) - gam(i, l, m) * gam(m, k, j);
                    }
                    data[((i * n + j) * n + k) * n + l] = v;
                }
            }
        }
    }
    Ok(RiemannTensor { n, data })
}

/// Ricci tensor at `x`.
pub fn ricci(field: &MetricField, x: &[f64], scheme: FdScheme) -> Result<DMatrix<f64>> {
    Ok(riemann(field, x, scheme)?.ricci())
}

/// Sectional curvature of the plane spanned by `u`, `v` from a tensor and
/// metric already in hand: `⟨R(u,v)v, u⟩ / (|u|²|v|² − ⟨u,v⟩²)`.
pub fn sectional_of(
    r: &RiemannTensor,
    g: &DMatrix<f64>,
    u: &DVector<f64>,
    v: &DVector<f64>,
) -> Result<f64> {
    let n = r.n();
    // (R(u,v)v)^i = R^i_{jkl} v^j u^k v^l
    let mut ruvv = DVector::zeros(n);
    for i in 0..n {
        let mut acc = 0.0;
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    acc += r.get(i, j, k, l) * v[j] * u[k] * v[l];
                }
            }
        }
        ruvv[i] = acc;
    }
    let num = (g * &ruvv).dot(u);
    let uu = (g * u).dot(u);
    let vv = (g * v).dot(v);
    let uv = (g * u).dot(v);
    let denom = uu * vv - uv * uv;
    if denom <= 1e-12 {
        return Err(HkError::ShapeMismatch(
            "degenerate plane for sectional curvature".into(),
        ));
    }
    Ok(num / denom)
}

/// Sectional curvature of the plane spanned by `u`, `v` at `x`.
pub fn sectional(
    field: &MetricField,
    x: &[f64],
    u: &DVector<f64>,
    v: &DVector<f64>,
    scheme: FdScheme,
) -> Result<f64> {
    let g = field.eval(x)?;
    let r = riemann(field, x, scheme)?;
    sectional_of(&r, &g, u, v)
}

/// Largest |Ricci| entry over a batch of points, computed with the
/// configured map strategy (data-parallel when the `parallel` feature is
/// active). Errors surface per point.
pub fn ricci_sweep(field: &MetricField, points: &[Vec<f64>], scheme: FdScheme) -> Vec<Result<f64>> {
    crate::parallel::map_indexed(points.len(), |i| {
        ricci(field, &points[i], scheme).map(|m| m.amax())
    })
}

/// Sequential twin of [`ricci_sweep`] for comparison benchmarks.
pub fn ricci_sweep_seq(
    field: &MetricField,
    points: &[Vec<f64>],
    scheme: FdScheme,
) -> Vec<Result<f64>> {
    crate::parallel::map_indexed_seq(points.len(), |i| {
        ricci(field, &points[i], scheme).map(|m| m.amax())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn euclidean_is_flat() {
        let field = MetricField::euclidean(3);
        let x = [0.3, -1.0, 2.0];
        let gamma = christoffel(&field, &x, FdScheme::default()).unwrap();
        for gi in &gamma {
            assert!(gi.amax() < 1e-12);
        }
        assert!(riemann(&field, &x, FdScheme::default()).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn polar_plane_is_flat_with_nonzero_symbols() {
        // g = dr² + r² dφ²
        let field = MetricField::from_fn(2, |x| {
            let mut g = DMatrix::zeros(2, 2);
            g[(0, 0)] = 1.0;
            g[(1, 1)] = x[0] * x[0];
            Ok(g)
        });
        let x = [1.3, 0.4];
        let scheme = FdScheme::refined(1e-3);
        let gamma = christoffel(&field, &x, scheme).unwrap();
        // Γ^r_{φφ} = −r, Γ^φ_{rφ} = 1/r
        assert!((gamma[0][(1, 1)] + x[0]).abs() < 1e-9);
        assert!((gamma[1][(0, 1)] - 1.0 / x[0]).abs() < 1e-9);
        let r = riemann(&field, &x, scheme).unwrap();
        assert!(r.max_abs() < 1e-8, "flat but got {:.2e}", r.max_abs());
        assert!(ricci(&field, &x, scheme).unwrap().amax() < 1e-8);
    }

    #[test]
    fn sphere_has_unit_sectional() {
        let field = MetricField::round_sphere3();
        let x = [1.1, 0.9, 0.4];
        let scheme = FdScheme::refined(1e-3);
        let planes = [
            (dmatrix![1.0; 0.0; 0.0], dmatrix![0.0; 1.0; 0.0]),
            (dmatrix![1.0; 0.0; 0.0], dmatrix![0.0; 0.0; 1.0]),
            (dmatrix![0.0; 1.0; 0.0], dmatrix![0.0; 0.3; 1.0]),
            (dmatrix![1.0; 0.5; 0.0], dmatrix![0.2; 0.0; 1.0]),
        ];
        for (u, v) in planes {
            let u = DVector::from_column_slice(u.as_slice());
            let v = DVector::from_column_slice(v.as_slice());
            let k = sectional(&field, &x, &u, &v, scheme).unwrap();
            assert!((k - 1.0).abs() < 1e-4, "sectional {k}");
        }
        // Ricci = 2g on the unit 3-sphere
        let ric = ricci(&field, &x, scheme).unwrap();
        let g = field.eval(&x).unwrap();
        assert!((ric - 2.0 * g).amax() < 1e-4);
    }

    #[test]
    fn riemann_symmetries_on_sphere() {
        let field = MetricField::round_sphere3();
        let x = [0.8, 1.2, -0.3];
        let scheme = FdScheme::refined(1e-3);
        let r = riemann(&field, &x, scheme).unwrap();
        let g = field.eval(&x).unwrap();
        let low = r.lowered(&g);
        let n = 3;
        let idx = |i: usize, j: usize, k: usize, l: usize| ((i * n + j) * n + k) * n + l;
        let tol = 1e-3;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let v = low[idx(i, j, k, l)];
                        assert!((v + low[idx(j, i, k, l)]).abs() < tol);
                        assert!((v + low[idx(i, j, l, k)]).abs() < tol);
                        assert!((v - low[idx(k, l, i, j)]).abs() < tol);
                    }
                }
            }
        }
    }

    #[test]
    fn reduced_single_slot_is_ricci_flat() {
        let (spec, lspec) = crate::quotient::taub_nut(1.0).unwrap();
        let field = MetricField::reduced(spec, lspec);
        for r3 in [[0.0, 0.0, 1.0], [0.7, -0.5, 0.4], [2.0, 1.0, -1.0]] {
            let x = vec![1.0, r3[0], r3[1], r3[2]];
            let coarse = ricci(&field, &x, FdScheme::with_step(1e-3)).unwrap().amax();
            assert!(coarse < 5e-4, "|Ric| = {coarse:.2e} at {r3:?}");
            let fine = ricci(&field, &x, FdScheme::with_step(5e-4)).unwrap().amax();
            assert!(fine < coarse, "halving failed: {coarse:.2e} → {fine:.2e}");
        }
    }

    #[test]
    fn boundary_errors_are_typed() {
        // chart edge at x₀ = 1: the point itself is fine, the stencil is not
        let field = MetricField::from_fn(2, |x| {
            if x[0] <= 1.0 {
                return Err(HkError::ZeroRadius(x[0]));
            }
            let mut g = DMatrix::identity(2, 2);
            g[(1, 1)] = x[0];
            Ok(g)
        });
        let x = [1.0005, 0.0];
        match ricci(&field, &x, FdScheme::default()) {
            Err(HkError::DomainBoundary(msg)) => {
                assert!(msg.contains("stencil"), "unexpected message: {msg}")
            }
            other => panic!("expected boundary error, got {other:?}"),
        }
        // evaluating the metric on the string itself reports the locus
        let (spec, lspec) = crate::quotient::taub_nut(1.0).unwrap();
        let reduced = MetricField::reduced(spec, lspec);
        assert!(matches!(
            reduced.eval(&[1.0, -1.0, 0.0, 0.0]),
            Err(HkError::StringLocus)
        ));
    }

    #[test]
    fn sweep_matches_sequential() {
        let (spec, lspec) = crate::quotient::taub_nut(2.0).unwrap();
        let field = MetricField::reduced(spec, lspec);
        let points: Vec<Vec<f64>> = (0..6)
            .map(|i| vec![0.5, 1.0 + 0.3 * i as f64, 0.2, -0.4])
            .collect();
        let par = ricci_sweep(&field, &points, FdScheme::default());
        let seq = ricci_sweep_seq(&field, &points, FdScheme::default());
        for (a, b) in par.iter().zip(&seq) {
            let (a, b) = (a.as_ref().unwrap(), b.as_ref().unwrap());
            assert!((a - b).abs() < 1e-15);
        }
    }
}
