//! Nyström discretisation of the second-kind double-layer equation
//! `eta - 2 D eta = f` on one smooth closed curve, off-boundary evaluation of
//! the double-layer potential, and the Mie series for a circle.
//!
//! The doubled kernel `2 dG/dnu(y) = (ik/2) H1(k|x-y|) (x-y).nu(y)/|x-y|`
//! has a logarithmic singularity that is split off as
//! `K1 ln(4 sin^2((t-tau)/2)) + K2` and integrated with trigonometric
//! weights; the smooth remainder uses the trapezoid rule.

use crate::error::{Error, Result};
use crate::geometry::{Curve, Vec2, PERIOD};
use crate::specfun::{bessel_j_seq, hankel1_1, hankel1_seq};
use faer::linalg::solvers::Solve;
use faer::{c64, Mat};
use log::debug;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

/// Default discretisation density.
pub const DEFAULT_PPW: f64 = 10.0;
/// Smallest admissible grid.
pub const MIN_NODES: usize = 32;
/// Condition estimates above this are treated as an interior resonance.
pub const RESONANCE_COND: f64 = 1e12;
/// Relative residual demanded of every solve.
pub const SOLVE_TOL: f64 = 1e-12;
/// Largest `k a` accepted by the Mie series.
pub const MIE_MAX_KA: f64 = 500.0;

/// Uniform periodic grid on one curve with cached geometry.
#[derive(Debug, Clone)]
pub struct BoundaryGrid {
    curve: Curve,
    obstacle: usize,
    pub params: Vec<f64>,
    pub points: Vec<Vec2>,
    pub normals: Vec<Vec2>,
    /// `|gamma'(t_j)|`
    pub speeds: Vec<f64>,
    pub curvatures: Vec<f64>,
}

/// Node count for `ppw` points per wavelength, rounded up to even.
pub fn required_nodes(curve: &Curve, k: f64, ppw: f64) -> usize {
    let n = (ppw * k * curve.length() / (2.0 * PI)).ceil() as usize;
    let n = n.max(MIN_NODES);
    n + n % 2
}

impl BoundaryGrid {
    pub fn new(curve: &Curve, obstacle: usize, n: usize) -> Result<Self> {
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::Domain(format!("grid size must be even and at least 4, got {n}")));
        }
        let params: Vec<f64> = (0..n).map(|j| PERIOD * j as f64 / n as f64).collect();
        let evals: Vec<_> = params.iter().map(|&t| curve.eval(t)).collect();
        Ok(Self {
            curve: curve.clone(),
            obstacle,
            points: evals.iter().map(|e| e.point).collect(),
            normals: evals.iter().map(|e| e.normal).collect(),
            speeds: evals.iter().map(|e| e.speed).collect(),
            curvatures: evals.iter().map(|e| e.curvature).collect(),
            params,
        })
    }

    /// Grid resolving wavenumber `k` at `ppw` points per wavelength, never
    /// smaller than `min_n`.
    pub fn for_wavenumber(curve: &Curve, obstacle: usize, k: f64, ppw: f64, min_n: usize) -> Result<Self> {
        let n = required_nodes(curve, k, ppw).max(min_n);
        Self::new(curve, obstacle, n + n % 2)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn curve(&self) -> &Curve {
        &self.curve
    }

    pub fn obstacle(&self) -> usize {
        self.obstacle
    }

    /// Trapezoid weight `2 pi / N`.
    pub fn weight(&self) -> f64 {
        PERIOD / self.len() as f64
    }
}

/// What a [`DensityField`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Content {
    /// boundary trace of the total field, `eta_m`
    TotalField,
    /// demodulated envelope `eta_m^slow`
    Envelope,
    /// real phase values stored in the real part
    Phase,
    /// any other boundary data (incident traces, right-hand sides, derivatives)
    Trace,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    pub m: usize,
    pub obstacle: usize,
    pub k: f64,
    pub content: Content,
}

/// Complex samples on a [`BoundaryGrid`].
#[derive(Debug, Clone)]
pub struct DensityField {
    pub grid: Arc<BoundaryGrid>,
    pub values: Vec<Complex64>,
    pub meta: FieldMeta,
}

impl DensityField {
    pub fn new(grid: Arc<BoundaryGrid>, values: Vec<Complex64>, meta: FieldMeta) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Domain(format!("{} values for a grid of {}", values.len(), grid.len())));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite("density has non-finite entries".into()));
        }
        Ok(Self { grid, values, meta })
    }

    pub fn with_values(&self, values: Vec<Complex64>, content: Content) -> Result<Self> {
        Self::new(self.grid.clone(), values, FieldMeta { content, ..self.meta })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// `e^{ik alpha . x_j}` at the grid nodes.
pub fn incident_trace(grid: &Arc<BoundaryGrid>, alpha: Vec2, k: f64) -> DensityField {
    let values = grid.points.iter().map(|p| Complex64::from_polar(1.0, k * alpha.dot(*p))).collect();
    DensityField {
        grid: grid.clone(),
        values,
        meta: FieldMeta { m: 0, obstacle: grid.obstacle(), k, content: Content::Trace },
    }
}

/// Trigonometric weights `R_j(t_i)` for `ln(4 sin^2((t-tau)/2))`, indexed by `|i - j|`.
fn log_weights(n_nodes: usize) -> Vec<f64> {
    let n = n_nodes / 2;
    let nf = n as f64;
    (0..n_nodes)
        .into_par_iter()
        .map(|d| {
            let x = PI * d as f64 / nf;
            let s: f64 = (1..n).map(|m| (m as f64 * x).cos() / m as f64).sum();
            -2.0 * PI / nf * s - PI / (nf * nf) * (nf * x).cos()
        })
        .collect()
}

/// Dense Nyström matrix `I - 2 D_N` with its LU factorisation.
pub struct NystromSystem {
    grid: Arc<BoundaryGrid>,
    k: f64,
    matrix: Mat<c64>,
    lu: faer::linalg::solvers::PartialPivLu<c64>,
    cond: f64,
}

impl std::fmt::Debug for NystromSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NystromSystem")
            .field("n", &self.grid.len())
            .field("k", &self.k)
            .field("cond", &self.cond)
            .finish()
    }
}

/// Assemble and factor at the default density floor.
pub fn assemble(grid: &Arc<BoundaryGrid>, k: f64) -> Result<NystromSystem> {
    assemble_with(grid, k, DEFAULT_PPW)
}

/// Assemble and factor, refusing grids coarser than `ppw` points per wavelength.
pub fn assemble_with(grid: &Arc<BoundaryGrid>, k: f64, ppw: f64) -> Result<NystromSystem> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::Domain(format!("wavenumber must be positive, got {k}")));
    }
    let required = required_nodes(grid.curve(), k, ppw);
    if grid.len() < required {
        return Err(Error::Resolution { n: grid.len(), required });
    }
    let n = grid.len();
    let start = std::time::Instant::now();
    let weights = log_weights(n);
    let h = grid.weight();
    // column-major fill, one source column per task
    let mut data = vec![c64::new(0.0, 0.0); n * n];
    data.par_chunks_mut(n).enumerate().for_each(|(j, col)| {
        let y = grid.points[j];
        let nu = grid.normals[j];
        let sp = grid.speeds[j];
        for (i, entry) in col.iter_mut().enumerate() {
            let m_ij = if i == j {
                Complex64::new(h * (-grid.curvatures[j] * sp / (2.0 * PI)), 0.0)
            } else {
                let d = grid.points[i] - y;
                let r = d.norm();
                let geo = d.dot(nu) / r * sp;
                let hk = hankel1_1(k * r);
                let kern = Complex64::new(0.0, 0.5 * k) * hk * geo;
                let k1 = -k / (2.0 * PI) * hk.re * geo;
                let dt = grid.params[i] - grid.params[j];
                let lg = (4.0 * (0.5 * dt).sin().powi(2)).ln();
                let k2 = kern - k1 * lg;
                weights[i.abs_diff(j)] * k1 + h * k2
            };
            *entry = if i == j { Complex64::new(1.0, 0.0) - m_ij } else { -m_ij };
        }
    });
    if data.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::NonFinite("Nyström matrix has non-finite entries".into()));
    }
    let matrix = faer::MatRef::from_column_major_slice(&data, n, n).to_owned();
    drop(data);
    let lu = matrix.partial_piv_lu();
    let mut sys = NystromSystem { grid: grid.clone(), k, matrix, lu, cond: f64::NAN };
    sys.cond = sys.estimate_condition();
    debug!("assembled N = {n}, k = {k}, cond ~ {:.3e} in {:?}", sys.cond, start.elapsed());
    if !(sys.cond <= RESONANCE_COND) {
        return Err(Error::NearResonance { cond: sys.cond });
    }
    Ok(sys)
}

fn col_from(v: &[Complex64]) -> Mat<c64> {
    Mat::from_fn(v.len(), 1, |i, _| v[i])
}

impl NystromSystem {
    pub fn grid(&self) -> &Arc<BoundaryGrid> {
        &self.grid
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// 1-norm condition estimate `||A||_1 ||A^-1||_1` (Hager-Higham).
    pub fn condition_estimate(&self) -> f64 {
        self.cond
    }

    pub fn matrix(&self) -> &Mat<c64> {
        &self.matrix
    }

    fn norm1(&self) -> f64 {
        let n = self.matrix.ncols();
        (0..n).map(|j| (0..n).map(|i| self.matrix[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max)
    }

    fn estimate_condition(&self) -> f64 {
        let n = self.matrix.nrows();
        let mut x = Mat::from_fn(n, 1, |_, _| c64::new(1.0 / n as f64, 0.0));
        let mut est: f64 = 0.0;
        let mut last_j = usize::MAX;
        for iter in 0..5 {
            let mut y = x.clone();
            self.lu.solve_in_place(&mut y);
            let norm_y: f64 = (0..n).map(|i| y[(i, 0)].norm()).sum();
            if iter > 0 && norm_y <= est {
                est = est.max(norm_y);
                break;
            }
            est = norm_y;
            let mut z = Mat::from_fn(n, 1, |i, _| {
                let v = y[(i, 0)];
                if v.norm() > 0.0 {
                    v / v.norm()
                } else {
                    c64::new(1.0, 0.0)
                }
            });
            self.lu.solve_adjoint_in_place(&mut z);
            let (j, zmax) = (0..n).map(|i| (i, z[(i, 0)].norm())).fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
            let zx: f64 = (0..n).map(|i| (z[(i, 0)].conj() * x[(i, 0)]).re).sum();
            if iter > 0 && (zmax <= zx || j == last_j) {
                break;
            }
            last_j = j;
            x = Mat::from_fn(n, 1, |i, _| if i == j { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) });
        }
        // alternating test vector guards against the power method stalling
        let mut alt = Mat::from_fn(n, 1, |i, _| {
            let s = if i % 2 == 0 { 1.0 } else { -1.0 };
            c64::new(s * (1.0 + i as f64 / (n.max(2) - 1) as f64), 0.0)
        });
        self.lu.solve_in_place(&mut alt);
        let alt_est = 2.0 * (0..n).map(|i| alt[(i, 0)].norm()).sum::<f64>() / (3.0 * n as f64);
        self.norm1() * est.max(alt_est)
    }

    fn residual(&self, x: &Mat<c64>, b: &Mat<c64>) -> Mat<c64> {
        b - &self.matrix * x
    }

    /// Solve `(I - 2 D_N) eta = rhs` with iterative refinement; the returned
    /// density always satisfies the residual bound.
    pub fn solve(&self, rhs: &DensityField) -> Result<DensityField> {
        let values = self.solve_values(&rhs.values, rhs.grid.len())?;
        DensityField::new(
            self.grid.clone(),
            values,
            FieldMeta { content: Content::TotalField, obstacle: self.grid.obstacle(), k: self.k, ..rhs.meta },
        )
    }

    pub fn solve_values(&self, rhs: &[Complex64], n_rhs: usize) -> Result<Vec<Complex64>> {
        let n = self.grid.len();
        if n_rhs != n || rhs.len() != n {
            return Err(Error::Domain(format!("right-hand side has {} entries, system has {n}", rhs.len())));
        }
        let b = col_from(rhs);
        let bnorm = rhs.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let mut x = b.clone();
        self.lu.solve_in_place(&mut x);
        let inf = |m: &Mat<c64>| (0..m.nrows()).map(|i| m[(i, 0)].norm()).fold(0.0, f64::max);
        let mut r = self.residual(&x, &b);
        let mut rn = inf(&r);
        for _ in 0..3 {
            if rn < SOLVE_TOL * bnorm {
                break;
            }
            let mut dx = r.clone();
            self.lu.solve_in_place(&mut dx);
            let cand = &x + &dx;
            let rc = self.residual(&cand, &b);
            let rcn = inf(&rc);
            if rcn >= rn {
                break;
            }
            x = cand;
            r = rc;
            rn = rcn;
        }
        if bnorm > 0.0 && !(rn < SOLVE_TOL * bnorm) {
            return Err(Error::Residual { residual: rn / bnorm, tolerance: SOLVE_TOL });
        }
        Ok((0..n).map(|i| x[(i, 0)]).collect())
    }
}

/// Minimum target distance for off-boundary evaluation: 5 wavelengths or
/// 0.1, whichever is smaller.
pub fn d_min(k: f64) -> f64 {
    (5.0 * 2.0 * PI / k).min(0.1)
}

/// Double-layer potential `u(x) = int dG/dnu(y) eta(y) ds(y)` at exterior
/// targets by the trapezoid rule.
pub fn eval_dlp(density: &DensityField, k: f64, targets: &[Vec2]) -> Result<Vec<Complex64>> {
    let grid = &density.grid;
    let dmin = d_min(k);
    for &x in targets {
        let (_, d) = grid.curve().signed_distance(x);
        if d < dmin {
            return Err(Error::NearBoundary { distance: d, d_min: dmin });
        }
    }
    Ok(eval_dlp_unchecked(density, k, targets))
}

/// As [`eval_dlp`] without the distance check.
pub fn eval_dlp_unchecked(density: &DensityField, k: f64, targets: &[Vec2]) -> Vec<Complex64> {
    let grid = &density.grid;
    let pref = Complex64::new(0.0, 0.25 * k) * grid.weight();
    // fold the source geometry into the density once
    let src: Vec<Complex64> = density.values.iter().zip(&grid.speeds).map(|(v, s)| v * *s).collect();
    targets
        .par_iter()
        .map(|&x| {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..grid.len() {
                let d = x - grid.points[j];
                let r = d.norm();
                acc += hankel1_1(k * r) * (d.dot(grid.normals[j]) / r) * src[j];
            }
            pref * acc
        })
        .collect()
}

fn mie_order(ka: f64) -> usize {
    (ka + 8.0 * ka.cbrt() + 40.0).ceil() as usize
}

fn check_ka(radius: f64, k: f64) -> Result<f64> {
    if !(radius > 0.0) || !(k > 0.0) {
        return Err(Error::Domain(format!("Mie series needs positive radius and k, got a = {radius}, k = {k}")));
    }
    let ka = k * radius;
    if ka > MIE_MAX_KA {
        return Err(Error::OutOfRange(format!("k a = {ka} exceeds {MIE_MAX_KA}")));
    }
    Ok(ka)
}

/// `i^n`
fn i_pow(n: usize) -> Complex64 {
    match n % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Total-field boundary trace on a sound-hard circle of radius `a` lit by
/// `e^{ik alpha.x}`, at polar angles `thetas`:
/// `eta(theta) = 2i/(pi k a) sum_n i^n e^{in theta'} / H_n'(ka)`.
pub fn mie_total_field(radius: f64, k: f64, alpha: Vec2, thetas: &[f64]) -> Result<Vec<Complex64>> {
    let ka = check_ka(radius, k)?;
    let nmax = mie_order(ka);
    let h = hankel1_seq(nmax + 1, ka)?;
    let dh = |n: usize| if n == 0 { -h[1] } else { 0.5 * (h[n - 1] - h[n + 1]) };
    let coef: Vec<Complex64> = (0..=nmax).map(|n| i_pow(n) / dh(n)).collect();
    let phi = alpha.y.atan2(alpha.x);
    let pref = Complex64::new(0.0, 2.0 / (PI * ka));
    thetas
        .iter()
        .map(|&th| {
            let tp = th - phi;
            let mut sum = coef[0];
            for (n, c) in coef.iter().enumerate().skip(1) {
                sum += c * (2.0 * (n as f64 * tp).cos());
            }
            let tail = 2.0 * coef[nmax].norm();
            if tail > 1e-14 * sum.norm() {
                return Err(Error::Truncation(format!("Mie series tail {tail:.3e} at order {nmax}")));
            }
            Ok(pref * sum)
        })
        .collect()
}

/// Scattered field of the same problem at exterior points.
pub fn mie_scattered_field(radius: f64, k: f64, alpha: Vec2, center: Vec2, points: &[Vec2]) -> Result<Vec<Complex64>> {
    let ka = check_ka(radius, k)?;
    let nmax = mie_order(ka);
    let j = bessel_j_seq(nmax + 1, ka)?;
    let h = hankel1_seq(nmax + 1, ka)?;
    let dj = |n: usize| if n == 0 { -j[1] } else { 0.5 * (j[n - 1] - j[n + 1]) };
    let dh = |n: usize| if n == 0 { -h[1] } else { 0.5 * (h[n - 1] - h[n + 1]) };
    let coef: Vec<Complex64> = (0..=nmax).map(|n| -i_pow(n) * dj(n) / dh(n)).collect();
    let phi = alpha.y.atan2(alpha.x);
    points
        .iter()
        .map(|&p| {
            let d = p - center;
            let r = d.norm();
            if r <= radius {
                return Err(Error::Domain("Mie scattered field needs exterior points".into()));
            }
            let hr = hankel1_seq(nmax, k * r)?;
            let tp = d.y.atan2(d.x) - phi;
            let mut sum = coef[0] * hr[0];
            for n in 1..=nmax {
                sum += coef[n] * hr[n] * (2.0 * (n as f64 * tp).cos());
            }
            Ok(sum)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle_grid(n: usize) -> Arc<BoundaryGrid> {
        let c = Curve::circle(Vec2::ZERO, 0.5).unwrap();
        Arc::new(BoundaryGrid::new(&c, 0, n).unwrap())
    }

    #[test]
    fn log_weights_integrate_log_kernel() {
        // int_0^{2pi} ln(4 sin^2(t/2)) cos(t) dt = -2 pi
        let n = 64;
        let w = log_weights(n);
        let s: f64 = (0..n).map(|j| w[j] * (PERIOD * j as f64 / n as f64).cos()).sum();
        assert!((s + 2.0 * PI).abs() < 1e-12, "{s}");
        let s0: f64 = w.iter().sum();
        assert!(s0.abs() < 1e-12);
    }

    #[test]
    fn grid_size_rule() {
        let c = Curve::circle(Vec2::ZERO, 0.5).unwrap();
        assert_eq!(required_nodes(&c, 800.0, 10.0), 4000);
        assert_eq!(required_nodes(&c, 1.0, 10.0), MIN_NODES);
        assert!(BoundaryGrid::new(&c, 0, 33).is_err());
    }

    #[test]
    fn incident_trace_unit_modulus() {
        let g = circle_grid(64);
        let f = incident_trace(&g, Vec2::new(1.0, 0.0), 37.0);
        assert!(f.values.iter().all(|v| (v.norm() - 1.0).abs() < 1e-15));
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let g = circle_grid(128);
        let sys = assemble(&g, 10.0).unwrap();
        let z = vec![Complex64::new(0.0, 0.0); 128];
        let x = sys.solve_values(&z, 128).unwrap();
        assert!(x.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn matches_mie_at_moderate_k() {
        let g = circle_grid(256);
        let k = 20.0;
        let sys = assemble(&g, k).unwrap();
        let inc = incident_trace(&g, Vec2::new(1.0, 0.0), k);
        let rhs = inc.with_values(inc.values.iter().map(|v| v * 2.0).collect(), Content::Trace).unwrap();
        let eta = sys.solve(&rhs).unwrap();
        let mie = mie_total_field(0.5, k, Vec2::new(1.0, 0.0), &g.params).unwrap();
        let err = eta.values.iter().zip(&mie).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn mie_symmetry() {
        let th: Vec<f64> = (1..20).map(|i| 0.15 * i as f64).collect();
        let neg: Vec<f64> = th.iter().map(|t| -t).collect();
        let a = mie_total_field(0.5, 30.0, Vec2::new(1.0, 0.0), &th).unwrap();
        let b = mie_total_field(0.5, 30.0, Vec2::new(1.0, 0.0), &neg).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = circle_grid(64);
        assert!(matches!(assemble(&g, 0.0), Err(Error::Domain(_))));
        assert!(matches!(assemble(&g, 100.0), Err(Error::Resolution { .. })));
        assert!(mie_total_field(0.5, 1200.0, Vec2::new(1.0, 0.0), &[0.0]).is_err());
    }
}
