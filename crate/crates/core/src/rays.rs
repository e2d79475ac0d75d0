//! Broken rays through the obstacle sequence, multiple-scattering phases,
//! reflected directions and the illuminated/shadow partition of a boundary.
//!
//! Backward problems (which chain of reflections ends at a given boundary
//! point) are solved as Fermat problems: the launch and intermediate
//! parameters are the stationary point of `alpha . X_0 + sum |X_{j+1} - X_j|`
//! with the last vertex held fixed. This is well conditioned for long chains,
//! unlike shooting from the first obstacle whose sensitivity grows
//! geometrically with every bounce.

use crate::error::{Error, Result};
use crate::geometry::{wrap_param, Curve, Scene, Vec2, PERIOD};
use serde::Serialize;

/// Reflection-law residual accepted on returned rays.
pub const REFLECTION_TOL: f64 = 1e-10;
/// Parameter tolerance for shadow-boundary roots.
pub const ROOT_TOL: f64 = 1e-10;
/// Nodes closer than this (in parameter) to a root are labelled near-boundary.
pub const NEAR_BOUNDARY: f64 = 1e-6;

/// Mirror `d` in the line with unit normal `n`.
pub fn reflect(d: Vec2, n: Vec2) -> Vec2 {
    d - n * (2.0 * d.dot(n))
}

/// First intersection of the half-ray `origin + s d`, `s > 0`, with `c`, as
/// (curve parameter, distance). `origin` must lie outside the curve.
pub fn ray_intersect(origin: Vec2, d: Vec2, c: &Curve) -> Option<(f64, f64)> {
    let samples = c.samples();
    let n = samples.len();
    let h = PERIOD / n as f64;
    let lateral = |p: Vec2| d.cross(p - origin);
    let mut best: Option<(f64, f64)> = None;
    for i in 0..n {
        let (a, b) = (lateral(samples[i]), lateral(samples[(i + 1) % n]));
        if a == 0.0 || a.signum() != b.signum() {
            let t =
                refine_root(|t| lateral(c.point(t)), |t| d.cross(c.derivative(t, 1)), i as f64 * h, (i + 1) as f64 * h);
            let s = d.dot(c.point(t) - origin);
            if s > 0.0 && best.is_none_or(|(_, sb)| s < sb) {
                best = Some((wrap_param(t), s));
            }
        }
    }
    best
}

/// Safeguarded Newton on a bracket [a, b] with f(a), f(b) of opposite sign.
fn refine_root<F: Fn(f64) -> f64, D: Fn(f64) -> f64>(f: F, df: D, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    if fa == 0.0 {
        return a;
    }
    let mut t = 0.5 * (a + b);
    for _ in 0..100 {
        let ft = f(t);
        if ft == 0.0 {
            return t;
        }
        if ft.signum() == fa.signum() {
            a = t;
            fa = ft;
        } else {
            b = t;
        }
        let d = df(t);
        let newton = t - ft / d;
        let next = if d != 0.0 && newton > a && newton < b { newton } else { 0.5 * (a + b) };
        if (next - t).abs() <= 1e-16 * (1.0 + t.abs()) || (b - a).abs() <= 1e-16 * (1.0 + a.abs()) {
            return next;
        }
        t = next;
    }
    t
}

/// One vertex of a broken ray.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RayVertex {
    pub obstacle: usize,
    pub t: f64,
    pub point: Vec2,
}

/// A reflection chain `X_0 .. X_m` ending on the boundary hit at iteration `m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BrokenRay {
    pub vertices: Vec<RayVertex>,
    pub segment_lengths: Vec<f64>,
    /// `alpha . X_0 + sum |X_{j+1} - X_j|`
    pub phase: f64,
    pub target_param: f64,
    /// The final segment arrives from the shadow side of the target obstacle.
    pub shadow_target: bool,
}

impl BrokenRay {
    fn build(scene: &Scene, params: &[f64]) -> Self {
        let vertices: Vec<RayVertex> = params
            .iter()
            .enumerate()
            .map(|(j, &t)| RayVertex {
                obstacle: scene.obstacle_index(j),
                t: wrap_param(t),
                point: scene.obstacle(j).point(t),
            })
            .collect();
        let segment_lengths: Vec<f64> = vertices.windows(2).map(|w| w[1].point.distance(w[0].point)).collect();
        let phase = scene.alpha.dot(vertices[0].point) + segment_lengths.iter().sum::<f64>();
        let m = vertices.len() - 1;
        let shadow_target = m >= 1 && {
            let e = (vertices[m].point - vertices[m - 1].point).normalized();
            e.dot(scene.obstacle(m).normal(vertices[m].t)) > 0.0
        };
        Self { target_param: vertices[m].t, vertices, segment_lengths, phase, shadow_target }
    }

    pub fn m(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn params(&self) -> Vec<f64> {
        self.vertices.iter().map(|v| v.t).collect()
    }

    /// Unit direction of segment `j` (from `X_j` to `X_{j+1}`).
    pub fn direction(&self, j: usize) -> Vec2 {
        (self.vertices[j + 1].point - self.vertices[j].point).normalized()
    }

    /// Direction arriving at `X_m` (`alpha` when m = 0).
    pub fn arriving(&self, alpha: Vec2) -> Vec2 {
        match self.m() {
            0 => alpha,
            m => self.direction(m - 1),
        }
    }

    /// `|reflect(d_in, nu) - d_out|` at `X_0 .. X_{m-1}`.
    pub fn reflection_residuals(&self, scene: &Scene) -> Vec<f64> {
        (0..self.m())
            .map(|j| {
                let d_in = if j == 0 { scene.alpha } else { self.direction(j - 1) };
                let nu = scene.obstacle(j).normal(self.vertices[j].t);
                (reflect(d_in, nu) - self.direction(j)).norm()
            })
            .collect()
    }

    /// Sign of the arriving direction against the exterior normal at the target:
    /// negative on the illuminated side.
    pub fn arrival_sign(&self, scene: &Scene) -> f64 {
        let m = self.m();
        self.arriving(scene.alpha).dot(scene.obstacle(m).normal(self.vertices[m].t))
    }
}

/// Trace the reflected ray launched from `gamma_{seq 0}(t0)` through `m`
/// obstacles. `Ok(None)` if an intermediate ray misses or is blocked.
pub fn trace_forward(scene: &Scene, t0: f64, m: usize) -> Result<Option<BrokenRay>> {
    let c0 = scene.obstacle(0);
    let p0 = c0.eval(t0);
    if scene.alpha.dot(p0.normal) >= 0.0 {
        return Err(Error::Precondition(format!("launch parameter {t0} is not illuminated")));
    }
    let mut params = vec![wrap_param(t0)];
    let mut origin = p0.point;
    let mut d = reflect(scene.alpha, p0.normal);
    for j in 1..=m {
        let target = scene.obstacle_index(j);
        let Some((t, dist)) = ray_intersect(origin, d, &scene.obstacles[target]) else {
            return Ok(None);
        };
        let blocked = scene.obstacles.iter().enumerate().any(|(i, c)| {
            i != target
                && i != scene.obstacle_index(j - 1)
                && ray_intersect(origin, d, c).is_some_and(|(_, s)| s < dist)
        });
        if blocked {
            return Ok(None);
        }
        params.push(t);
        let cp = scene.obstacles[target].eval(t);
        origin = cp.point;
        d = reflect(d, cp.normal);
    }
    Ok(Some(BrokenRay::build(scene, &params)))
}

/// Value, gradient and (dense) Hessian of the Fermat functional in the free
/// parameters `t_0 .. t_{m-1}`, with `t_m` fixed.
struct Fermat<'a> {
    scene: &'a Scene,
    m: usize,
    tx: f64,
}

struct FermatEval {
    value: f64,
    grad: Vec<f64>,
    hess: Vec<Vec<f64>>,
    /// `|gamma_j'|` for scaling the gradient into a residual
    speed: Vec<f64>,
}

impl Fermat<'_> {
    fn eval(&self, free: &[f64]) -> FermatEval {
        let m = self.m;
        let mut x = Vec::with_capacity(m + 1);
        let mut d1 = Vec::with_capacity(m + 1);
        let mut d2 = Vec::with_capacity(m + 1);
        for j in 0..=m {
            let t = if j < m { free[j] } else { self.tx };
            let c = self.scene.obstacle(j);
            x.push(c.point(t));
            d1.push(c.derivative(t, 1));
            d2.push(c.derivative(t, 2));
        }
        let len: Vec<f64> = (0..m).map(|j| x[j + 1].distance(x[j])).collect();
        let e: Vec<Vec2> = (0..m).map(|j| (x[j + 1] - x[j]) * (1.0 / len[j])).collect();
        let value = self.scene.alpha.dot(x[0]) + len.iter().sum::<f64>();
        let mut grad = vec![0.0; m];
        let mut hess = vec![vec![0.0; m]; m];
        for j in 0..m {
            let e_prev = if j == 0 { self.scene.alpha } else { e[j - 1] };
            grad[j] = d1[j].dot(e_prev - e[j]);
            let mut hjj = d2[j].dot(e_prev - e[j]);
            let s2 = d1[j].norm_sq();
            if j > 0 {
                hjj += (s2 - e[j - 1].dot(d1[j]).powi(2)) / len[j - 1];
            }
            hjj += (s2 - e[j].dot(d1[j]).powi(2)) / len[j];
            hess[j][j] = hjj;
            if j + 1 < m {
                let off = -(d1[j].dot(d1[j + 1]) - e[j].dot(d1[j]) * e[j].dot(d1[j + 1])) / len[j];
                hess[j][j + 1] = off;
                hess[j + 1][j] = off;
            }
        }
        FermatEval { value, grad, hess, speed: d1.iter().take(m).map(|v| v.norm()).collect() }
    }
}

/// Gaussian elimination with partial pivoting for the small Fermat systems.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col] == 0.0 || !a[piv][col].is_finite() {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

fn scaled_residual(ev: &FermatEval) -> f64 {
    ev.grad.iter().zip(&ev.speed).map(|(g, s)| (g / s).abs()).fold(0.0, f64::max)
}

/// Cholesky solve of `(a + shift I) x = b`; `None` unless positive definite.
fn cholesky_solve(a: &[Vec<f64>], shift: f64, b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i][j] + if i == j { shift } else { 0.0 };
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if !(sum > 0.0) {
                    return None;
                }
                l[i][i] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        y[i] = (b[i] - (0..i).map(|k| l[i][k] * y[k]).sum::<f64>()) / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        x[i] = (y[i] - (i + 1..n).map(|k| l[k][i] * x[k]).sum::<f64>()) / l[i][i];
    }
    Some(x)
}

/// Newton direction on the Hessian shifted just enough to be positive
/// definite, so every step is a descent direction.
fn descent_step(ev: &FermatEval) -> Option<Vec<f64>> {
    let rhs: Vec<f64> = ev.grad.iter().map(|g| -g).collect();
    let scale = ev.hess.iter().enumerate().map(|(i, r)| r[i].abs()).fold(1e-12, f64::max);
    let mut shift = 0.0;
    for _ in 0..60 {
        if let Some(x) = cholesky_solve(&ev.hess, shift, &rhs) {
            return Some(x);
        }
        shift = if shift == 0.0 { 1e-10 * scale } else { shift * 4.0 };
    }
    None
}

/// Minimise the Fermat functional: modified Newton with Armijo backtracking,
/// then plain Newton polish once the gradient is tiny.
fn fermat_newton(f: &Fermat, mut t: Vec<f64>) -> Option<Vec<f64>> {
    let mut ev = f.eval(&t);
    for _ in 0..100 {
        let res = scaled_residual(&ev);
        if res < 1e-14 {
            break;
        }
        let mut step = descent_step(&ev)?;
        let big = step.iter().fold(0.0f64, |a, s| a.max(s.abs()));
        if big > 0.5 {
            step.iter_mut().for_each(|s| *s *= 0.5 / big);
        }
        let slope: f64 = ev.grad.iter().zip(&step).map(|(g, s)| g * s).sum();
        let mut lam = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial: Vec<f64> = t.iter().zip(&step).map(|(a, s)| a + lam * s).collect();
            let tev = f.eval(&trial);
            let armijo = tev.value <= ev.value + 1e-4 * lam * slope;
            // near the minimum the value change drowns in rounding; judge by the gradient
            let polish = res < 1e-7 && scaled_residual(&tev) < res;
            if armijo || polish {
                accepted = Some((trial, tev));
                break;
            }
            lam *= 0.5;
        }
        match accepted {
            Some((trial, tev)) => {
                t = trial;
                ev = tev;
            }
            None => break,
        }
    }
    (scaled_residual(&ev) < 1e-11).then_some(t)
}

/// Parameter on `c` whose exterior normal is `n`.
pub fn gauss_map_inverse(c: &Curve, n: Vec2) -> f64 {
    let samples = 256;
    let mut t = (0..samples)
        .map(|i| PERIOD * i as f64 / samples as f64)
        .max_by(|&a, &b| c.normal(a).dot(n).total_cmp(&c.normal(b).dot(n)))
        .unwrap_or(0.0);
    for _ in 0..50 {
        let cp = c.eval(t);
        let ang = cp.normal.cross(n).atan2(cp.normal.dot(n));
        let step = ang / (cp.curvature * cp.speed);
        t += step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    wrap_param(t)
}

/// Each free vertex faces the bisector of the directions to its neighbours,
/// taken from obstacle centres (the incidence for the first vertex).
fn cold_seed(scene: &Scene, m: usize, tx: f64) -> Vec<f64> {
    let xm = scene.obstacle(m).point(tx);
    let centre = |j: usize| if j == m { xm } else { scene.obstacle(j).center() };
    (0..m)
        .map(|j| {
            let here = scene.obstacle(j).center();
            let u_prev = if j == 0 { -scene.alpha } else { (centre(j - 1) - here).normalized() };
            let u_next = (centre(j + 1) - here).normalized();
            gauss_map_inverse(scene.obstacle(j), (u_prev + u_next).normalized())
        })
        .collect()
}

/// Unwrap seed parameters so they lie within half a period of `reference`.
fn unwrap_near(seed: &[f64], reference: &[f64]) -> Vec<f64> {
    seed.iter().zip(reference).map(|(&s, &r)| s + PERIOD * ((r - s) / PERIOD).round()).collect()
}

fn validate_ray(scene: &Scene, ray: &BrokenRay) -> bool {
    let m = ray.m();
    if m == 0 {
        return true;
    }
    // the stationary point must reflect off the outside of every interior vertex
    let outward = (0..m).all(|j| {
        let d_in = if j == 0 { scene.alpha } else { ray.direction(j - 1) };
        let nu = scene.obstacle(j).normal(ray.vertices[j].t);
        nu.dot(ray.direction(j) - d_in) > 0.0 && d_in.dot(nu) < 0.0
    });
    outward && ray.reflection_residuals(scene).iter().all(|&r| r < REFLECTION_TOL)
}

/// Broken ray ending at `gamma_{seq m}(tx)`, optionally seeded with the free
/// parameters `t_0 .. t_{m-1}` of a nearby solution.
pub fn ray_for_target_seeded(scene: &Scene, m: usize, tx: f64, seed: Option<&[f64]>) -> Result<BrokenRay> {
    if m == 0 {
        return Ok(BrokenRay::build(scene, &[wrap_param(tx)]));
    }
    if !scene.is_multiple() {
        return Err(Error::Precondition("the sequence has a single obstacle; no broken rays exist".into()));
    }
    let f = Fermat { scene, m, tx };
    let mut attempts: Vec<Vec<f64>> = Vec::new();
    if let Some(s) = seed.filter(|s| s.len() >= m) {
        attempts.push(s[..m].to_vec());
    }
    let cold = cold_seed(scene, m, tx);
    attempts.push(cold);
    for start in attempts {
        if let Some(sol) = fermat_newton(&f, start) {
            let mut params: Vec<f64> = sol;
            params.push(tx);
            let ray = BrokenRay::build(scene, &params);
            if validate_ray(scene, &ray) {
                return Ok(ray);
            }
        }
    }
    Err(Error::NoBracket(format!("no broken ray of order {m} ends at parameter {tx}")))
}

pub fn ray_for_target(scene: &Scene, m: usize, tx: f64) -> Result<BrokenRay> {
    ray_for_target_seeded(scene, m, tx, None)
}

/// Broken rays for every parameter in `params` (ascending), solved by
/// continuation from the node that faces the previous obstacle most directly.
pub fn rays_on_grid(scene: &Scene, m: usize, params: &[f64]) -> Result<Vec<BrokenRay>> {
    let n = params.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if m == 0 {
        return params.iter().map(|&t| ray_for_target(scene, 0, t)).collect();
    }
    let curve = scene.obstacle(m);
    let toward = scene.obstacle(m - 1).center();
    let start = (0..n)
        .max_by(|&a, &b| {
            let score = |i: usize| curve.normal(params[i]).dot((toward - curve.point(params[i])).normalized());
            score(a).total_cmp(&score(b))
        })
        .expect("non-empty grid");
    let mut out: Vec<Option<BrokenRay>> = vec![None; n];
    let first = ray_for_target(scene, m, params[start])?;
    let first_params = first.params();
    out[start] = Some(first);
    for dir in [1isize, -1] {
        let mut prev = first_params.clone();
        for step in 1..n {
            let i = (start as isize + dir * step as isize).rem_euclid(n as isize) as usize;
            if out[i].is_some() {
                break;
            }
            let ray = ray_for_target_seeded(scene, m, params[i], Some(&prev[..m]))?;
            prev = unwrap_near(&ray.params(), &prev);
            out[i] = Some(ray);
        }
    }
    Ok(out.into_iter().map(|r| r.expect("every node solved")).collect())
}

/// `phi_m(gamma_{seq m}(tx))`.
pub fn phase_phi(scene: &Scene, m: usize, tx: f64) -> Result<f64> {
    if m == 0 {
        return Ok(scene.alpha.dot(scene.obstacle(0).point(tx)));
    }
    Ok(ray_for_target(scene, m, tx)?.phase)
}

/// First and second derivative of `phi_m` in the target parameter, from the
/// envelope theorem and the implicit-function theorem on the Fermat system.
pub fn phase_derivatives(scene: &Scene, ray: &BrokenRay) -> (f64, f64) {
    let m = ray.m();
    let c = scene.obstacle(m);
    let tx = ray.target_param;
    let d1 = c.derivative(tx, 1);
    let d2 = c.derivative(tx, 2);
    if m == 0 {
        return (scene.alpha.dot(d1), scene.alpha.dot(d2));
    }
    let e = ray.direction(m - 1);
    let len = ray.segment_lengths[m - 1];
    let first = e.dot(d1);
    let direct = e.dot(d2) + (d1.norm_sq() - e.dot(d1).powi(2)) / len;
    let f = Fermat { scene, m, tx };
    let free: Vec<f64> = ray.params()[..m].to_vec();
    let ev = f.eval(&free);
    let prev_d1 = scene.obstacle(m - 1).derivative(free[m - 1], 1);
    let cross = -(prev_d1.dot(d1) - e.dot(prev_d1) * e.dot(d1)) / len;
    let mut rhs = vec![0.0; m];
    rhs[m - 1] = cross;
    let second = match solve_dense(ev.hess, rhs) {
        Some(z) => direct - cross * z[m - 1],
        None => f64::NAN,
    };
    (first, second)
}

/// Reflected direction at `gamma_{seq m}(t)`.
pub fn alpha_ref(scene: &Scene, m: usize, t: f64) -> Result<Vec2> {
    let ray = ray_for_target(scene, m, t)?;
    alpha_ref_from(scene, &ray)
}

pub fn alpha_ref_from(scene: &Scene, ray: &BrokenRay) -> Result<Vec2> {
    let nu = scene.obstacle(ray.m()).normal(ray.target_param);
    let d = ray.arriving(scene.alpha);
    if d.dot(nu) >= 0.0 {
        return Err(Error::Precondition(format!(
            "parameter {} is not illuminated at iteration {}",
            ray.target_param,
            ray.m()
        )));
    }
    Ok(reflect(d, nu))
}

/// Result of [`psi_reflected`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectedPhase {
    /// `|x - y| + phi_m(y)`
    pub psi: f64,
    /// Launch parameter of `y(x)` on the obstacle hit at iteration `m`.
    pub t_launch: f64,
    pub distance: f64,
    pub ray: BrokenRay,
}

/// Reflected phase `psi_m(x)`: the launch point `y` on the illuminated arc
/// whose reflected ray passes through `x`.
pub fn psi_reflected(scene: &Scene, m: usize, x: Vec2) -> Result<ReflectedPhase> {
    let probe: Vec<f64> = (0..512).map(|i| PERIOD * i as f64 / 512.0).collect();
    let part = classify(scene, m, &probe)?;
    let samples = 256;
    let (lo, len) = (part.lit_start, part.lit_len);
    let ts: Vec<f64> = (1..samples).map(|i| lo + len * i as f64 / samples as f64).collect();
    let rays = rays_along(scene, m, &ts)?;
    let miss = |ray: &BrokenRay| -> Option<(f64, f64)> {
        let a = alpha_ref_from(scene, ray).ok()?;
        let y = scene.obstacle(m).point(ray.target_param);
        Some((a.cross(x - y), a.dot(x - y)))
    };
    let vals: Vec<Option<(f64, f64)>> = rays.iter().map(miss).collect();
    for i in 0..ts.len() - 1 {
        let (Some((ga, pa)), Some((gb, pb))) = (vals[i], vals[i + 1]) else { continue };
        if ga.signum() == gb.signum() || pa <= 0.0 || pb <= 0.0 {
            continue;
        }
        // bisection with continuation seeds, then secant polish
        let (mut a, mut b) = (ts[i], ts[i + 1]);
        let mut fa = ga;
        let mut seed = rays[i].params();
        let mut ray = rays[i].clone();
        for _ in 0..80 {
            let mid = 0.5 * (a + b);
            ray = ray_for_target_seeded(scene, m, mid, Some(&seed))?;
            seed = ray.params();
            let Some((g, _)) = miss(&ray) else {
                return Err(Error::NotIlluminated(format!("launch search left the illuminated arc at {mid}")));
            };
            if g == 0.0 {
                a = mid;
                b = mid;
                break;
            }
            if g.signum() == fa.signum() {
                a = mid;
                fa = g;
            } else {
                b = mid;
            }
            if b - a < 1e-15 {
                break;
            }
        }
        let t = 0.5 * (a + b);
        ray = ray_for_target_seeded(scene, m, t, Some(&seed)).unwrap_or(ray);
        let y = scene.obstacle(m).point(ray.target_param);
        let distance = x.distance(y);
        return Ok(ReflectedPhase { psi: distance + ray.phase, t_launch: ray.target_param, distance, ray });
    }
    Err(Error::NotIlluminated(format!("no reflected ray of order {m} reaches ({}, {})", x.x, x.y)))
}

/// Rays at increasing parameters (may exceed one period) by continuation.
fn rays_along(scene: &Scene, m: usize, ts: &[f64]) -> Result<Vec<BrokenRay>> {
    let mut out: Vec<BrokenRay> = Vec::with_capacity(ts.len());
    for &t in ts {
        let seed = out.last().map(|r| r.params());
        out.push(ray_for_target_seeded(scene, m, t, seed.as_deref())?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Illuminated,
    Shadow,
    NearBoundary,
}

impl Region {
    pub fn label(self) -> &'static str {
        match self {
            Region::Illuminated => "illuminated",
            Region::Shadow => "shadow",
            Region::NearBoundary => "near_boundary",
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Region::Illuminated => 0,
            Region::Shadow => 1,
            Region::NearBoundary => 2,
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        [Region::Illuminated, Region::Shadow, Region::NearBoundary].into_iter().find(|r| r.label() == s)
    }

    pub fn from_code(c: u8) -> Option<Self> {
        [Region::Illuminated, Region::Shadow, Region::NearBoundary].into_iter().find(|r| r.code() == c)
    }
}

/// Region labels at grid nodes and the two shadow-boundary parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhasePartition {
    pub labels: Vec<Region>,
    /// Shadow-boundary parameters in [0, 2pi), `t1 < t2`.
    pub t1: f64,
    pub t2: f64,
    /// Start of the illuminated arc (one of `t1`, `t2`).
    pub lit_start: f64,
    /// Parameter length of the illuminated arc.
    pub lit_len: f64,
}

impl PhasePartition {
    /// Offset of `t` from the start of the illuminated arc, in [0, 2pi).
    pub fn offset(&self, t: f64) -> f64 {
        wrap_param(t - self.lit_start)
    }

    pub fn is_lit(&self, t: f64) -> bool {
        let s = self.offset(t);
        s > 0.0 && s < self.lit_len
    }

    /// Parameter distance (cyclic) from `t` to the nearest root.
    pub fn root_distance(&self, t: f64) -> f64 {
        [self.t1, self.t2]
            .iter()
            .map(|&r| {
                let d = wrap_param(t - r);
                d.min(PERIOD - d)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Whether `t` lies in the middle `fraction` of the illuminated arc.
    pub fn in_lit_core(&self, t: f64, fraction: f64) -> bool {
        let s = self.offset(t);
        let margin = 0.5 * (1.0 - fraction) * self.lit_len;
        s >= margin && s <= self.lit_len - margin
    }

    /// Whether `t` lies in the middle `fraction` of the shadow arc.
    pub fn in_shadow_core(&self, t: f64, fraction: f64) -> bool {
        let shadow_len = PERIOD - self.lit_len;
        let s = wrap_param(t - (self.lit_start + self.lit_len));
        let margin = 0.5 * (1.0 - fraction) * shadow_len;
        s >= margin && s <= shadow_len - margin
    }

    /// Middle of the shadow arc (the deepest shadow point in parameter).
    pub fn shadow_center(&self) -> f64 {
        wrap_param(self.lit_start + self.lit_len + 0.5 * (PERIOD - self.lit_len))
    }

    pub fn lit_center(&self) -> f64 {
        wrap_param(self.lit_start + 0.5 * self.lit_len)
    }
}

/// Region labels for the grid `params` (ascending in [0, 2pi)).
pub fn classify(scene: &Scene, m: usize, params: &[f64]) -> Result<PhasePartition> {
    let rays = rays_on_grid(scene, m, params)?;
    classify_with_rays(scene, m, params, &rays)
}

/// As [`classify`], reusing rays already solved on the grid.
pub fn classify_with_rays(scene: &Scene, m: usize, params: &[f64], rays: &[BrokenRay]) -> Result<PhasePartition> {
    let n = params.len();
    if n < 4 || rays.len() != n {
        return Err(Error::Precondition("classification needs at least four nodes with rays".into()));
    }
    let signs: Vec<f64> = rays.iter().map(|r| r.arrival_sign(scene)).collect();
    let changes: Vec<usize> = (0..n).filter(|&i| (signs[i] < 0.0) != (signs[(i + 1) % n] < 0.0)).collect();
    if changes.len() != 2 {
        return Err(Error::RootCount { found: changes.len() });
    }
    let mut roots = Vec::with_capacity(2);
    let mut lit_start = 0.0;
    for &i in &changes {
        let j = (i + 1) % n;
        let a0 = params[i];
        let b0 = if j == 0 { params[0] + PERIOD } else { params[j] };
        let (mut a, mut b) = (a0, b0);
        let fa_neg = signs[i] < 0.0;
        let mut seed = rays[i].params();
        while b - a > ROOT_TOL * 0.5 {
            let mid = 0.5 * (a + b);
            let ray = ray_for_target_seeded(scene, m, mid, Some(&seed))?;
            let s = ray.arrival_sign(scene);
            seed = ray.params();
            if (s < 0.0) == fa_neg {
                a = mid;
            } else {
                b = mid;
            }
        }
        let root = wrap_param(0.5 * (a + b));
        if !fa_neg {
            // shadow -> lit transition starts the illuminated arc
            lit_start = root;
        }
        roots.push(root);
    }
    let (t1, t2) = if roots[0] < roots[1] { (roots[0], roots[1]) } else { (roots[1], roots[0]) };
    let lit_end = if lit_start == t1 { t2 } else { t1 };
    let lit_len = wrap_param(lit_end - lit_start);
    let mut part = PhasePartition { labels: Vec::with_capacity(n), t1, t2, lit_start, lit_len };
    for (i, &t) in params.iter().enumerate() {
        let label = if part.root_distance(t) < NEAR_BOUNDARY {
            Region::NearBoundary
        } else if signs[i] < 0.0 {
            Region::Illuminated
        } else {
            Region::Shadow
        };
        part.labels.push(label);
    }
    Ok(part)
}

/// Uniform grid `2 pi j / n`.
pub fn uniform_params(n: usize) -> Vec<f64> {
    (0..n).map(|j| PERIOD * j as f64 / n as f64).collect()
}
