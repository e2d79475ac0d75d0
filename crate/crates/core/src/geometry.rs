//! Smooth strictly convex closed curves, obstacle scenes and the sampled
//! certification of the no-occlusion and visibility conditions.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

/// Every curve is parametrised over [0, 2pi).
pub const PERIOD: f64 = TAU;

/// Samples per curve used by the convexity check.
pub const CONVEXITY_SAMPLES: usize = 1024;

/// Default samples per curve for certification and distance queries.
pub const CERT_SAMPLES: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_angle(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(c, s)
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn normalized(self) -> Vec2 {
        self * (1.0 / self.norm())
    }

    /// Counterclockwise rotation by `theta`.
    pub fn rotate(self, theta: f64) -> Vec2 {
        let (s, c) = theta.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    /// Counterclockwise quarter turn.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn distance(self, o: Vec2) -> f64 {
        (self - o).norm()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        v * self
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Reduce a parameter to [0, 2pi).
pub fn wrap_param(t: f64) -> f64 {
    let r = t.rem_euclid(PERIOD);
    if r >= PERIOD {
        0.0
    } else {
        r
    }
}

/// Curve family in local coordinates, before rotation and translation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    /// `r (cos t, sin t)`
    Circle { radius: f64 },
    /// `(a cos t, b sin t)`
    Ellipse { a: f64, b: f64 },
    /// `r(t) (cos t, sin t)` with `r(t) = r0 + sum_j cos[j] cos((j+1)t) + sin[j] sin((j+1)t)`
    TrigRadius { r0: f64, cos: Vec<f64>, sin: Vec<f64> },
}

/// Geometric data at one parameter value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub point: Vec2,
    /// `gamma'(t)`, not normalised
    pub tangent: Vec2,
    /// exterior unit normal
    pub normal: Vec2,
    pub curvature: f64,
    /// `|gamma'(t)|`
    pub speed: f64,
}

/// A smooth, regular, counterclockwise, strictly convex closed curve.
#[derive(Debug, Clone)]
pub struct Curve {
    shape: Shape,
    center: Vec2,
    rotation: f64,
    length: f64,
    kappa_min: f64,
    kappa_max: f64,
    samples: Vec<Vec2>,
}

fn quarter_turns(v: Vec2, n: usize) -> Vec2 {
    match n % 4 {
        0 => v,
        1 => v.perp(),
        2 => -v,
        _ => -v.perp(),
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl Curve {
    pub fn circle(center: Vec2, radius: f64) -> Result<Self> {
        Self::new(Shape::Circle { radius }, center, 0.0)
    }

    /// Ellipse with semi-axes `a` (local x) and `b` (local y), rotated
    /// counterclockwise by `rotation` radians about its centre.
    pub fn ellipse(center: Vec2, a: f64, b: f64, rotation: f64) -> Result<Self> {
        Self::new(Shape::Ellipse { a, b }, center, rotation)
    }

    pub fn new(shape: Shape, center: Vec2, rotation: f64) -> Result<Self> {
        let ok = match &shape {
            Shape::Circle { radius } => *radius > 0.0 && radius.is_finite(),
            Shape::Ellipse { a, b } => *a > 0.0 && *b > 0.0 && a.is_finite() && b.is_finite(),
            Shape::TrigRadius { r0, cos, sin } => *r0 > 0.0 && cos.iter().chain(sin).chain([r0]).all(|c| c.is_finite()),
        };
        if !ok || !center.x.is_finite() || !center.y.is_finite() || !rotation.is_finite() {
            return Err(Error::Geometry(format!("invalid curve parameters: {shape:?}")));
        }
        let mut c = Self { shape, center, rotation, length: 0.0, kappa_min: 0.0, kappa_max: 0.0, samples: Vec::new() };
        if let Shape::TrigRadius { .. } = c.shape {
            let rmin = (0..CONVEXITY_SAMPLES)
                .map(|i| c.radius_derivative(TAU * i as f64 / CONVEXITY_SAMPLES as f64, 0))
                .fold(f64::INFINITY, f64::min);
            if rmin <= 0.0 {
                return Err(Error::Geometry("trigonometric radius is not positive".into()));
            }
        }
        c.check_convexity()?;
        c.samples = c.sample(CERT_SAMPLES);
        c.length = c.compute_length();
        Ok(c)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn center(&self) -> Vec2 {
        self.center
    }

    pub fn rotation(&self) -> f64 {
        self.rotation
    }

    pub fn period(&self) -> f64 {
        PERIOD
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn kappa_min(&self) -> f64 {
        self.kappa_min
    }

    pub fn kappa_max(&self) -> f64 {
        self.kappa_max
    }

    /// The cached certification samples `gamma(2 pi i / CERT_SAMPLES)`.
    pub fn samples(&self) -> &[Vec2] {
        &self.samples
    }

    fn radius_derivative(&self, t: f64, n: usize) -> f64 {
        let Shape::TrigRadius { r0, cos, sin } = &self.shape else {
            unreachable!("radius function only exists for trigonometric curves")
        };
        let mut r = if n == 0 { *r0 } else { 0.0 };
        let terms = cos.len().max(sin.len());
        for j in 0..terms {
            let a = cos.get(j).copied().unwrap_or(0.0);
            let b = sin.get(j).copied().unwrap_or(0.0);
            let f = (j + 1) as f64;
            // d^n/dt^n (cos ft, sin ft) is the quarter-turned pair scaled by f^n
            let e = quarter_turns(Vec2::from_angle(f * t), n);
            r += f.powi(n as i32) * (a * e.x + b * e.y);
        }
        r
    }

    /// `d^n gamma / dt^n` at `t`.
    pub fn derivative(&self, t: f64, n: usize) -> Vec2 {
        let local = match &self.shape {
            Shape::Circle { radius } => quarter_turns(Vec2::from_angle(t), n) * *radius,
            Shape::Ellipse { a, b } => {
                let v = quarter_turns(Vec2::from_angle(t), n);
                Vec2::new(a * v.x, b * v.y)
            }
            Shape::TrigRadius { .. } => {
                let e = Vec2::from_angle(t);
                let mut acc = Vec2::ZERO;
                for k in 0..=n {
                    acc += quarter_turns(e, n - k) * (binomial(n, k) * self.radius_derivative(t, k));
                }
                acc
            }
        };
        let rotated = local.rotate(self.rotation);
        if n == 0 {
            self.center + rotated
        } else {
            rotated
        }
    }

    pub fn point(&self, t: f64) -> Vec2 {
        self.derivative(t, 0)
    }

    pub fn eval(&self, t: f64) -> CurvePoint {
        let point = self.point(t);
        let d1 = self.derivative(t, 1);
        let d2 = self.derivative(t, 2);
        let speed = d1.norm();
        CurvePoint {
            point,
            tangent: d1,
            normal: Vec2::new(d1.y, -d1.x) * (1.0 / speed),
            curvature: d1.cross(d2) / speed.powi(3),
            speed,
        }
    }

    pub fn normal(&self, t: f64) -> Vec2 {
        let d1 = self.derivative(t, 1);
        Vec2::new(d1.y, -d1.x) * (1.0 / d1.norm())
    }

    pub fn curvature(&self, t: f64) -> f64 {
        let d1 = self.derivative(t, 1);
        d1.cross(self.derivative(t, 2)) / d1.norm().powi(3)
    }

    pub fn sample(&self, n: usize) -> Vec<Vec2> {
        (0..n).map(|i| self.point(PERIOD * i as f64 / n as f64)).collect()
    }

    fn compute_length(&self) -> f64 {
        // trapezoid is spectrally accurate for periodic analytic integrands
        let n = 4096;
        let h = PERIOD / n as f64;
        (0..n).map(|i| self.derivative(i as f64 * h, 1).norm()).sum::<f64>() * h
    }

    fn check_convexity(&mut self) -> Result<()> {
        let n = CONVEXITY_SAMPLES;
        let h = PERIOD / n as f64;
        let mut kmin = f64::INFINITY;
        let mut kmax = f64::NEG_INFINITY;
        let mut imin = 0;
        let mut imax = 0;
        for i in 0..n {
            let t = i as f64 * h;
            if self.derivative(t, 1).norm() <= 0.0 {
                return Err(Error::Geometry(format!("curve is not regular at t = {t}")));
            }
            let k = self.curvature(t);
            if k < kmin {
                kmin = k;
                imin = i;
            }
            if k > kmax {
                kmax = k;
                imax = i;
            }
        }
        let refine =
            |i: usize, sign: f64| golden_min(|t| sign * self.curvature(t), (i as f64 - 1.0) * h, (i as f64 + 1.0) * h);
        kmin = kmin.min(refine(imin, 1.0));
        kmax = kmax.max(-refine(imax, -1.0));
        if !(kmin > 0.0) {
            return Err(Error::Geometry(format!(
                "curve is not strictly convex with counterclockwise orientation (min curvature {kmin})"
            )));
        }
        self.kappa_min = kmin;
        self.kappa_max = kmax;
        Ok(())
    }

    /// Closest boundary parameter and distance to `p`; the distance is
    /// negative when `p` is inside the curve.
    pub fn signed_distance(&self, p: Vec2) -> (f64, f64) {
        let n = self.samples.len();
        let (i0, _) = self
            .samples
            .iter()
            .enumerate()
            .map(|(i, s)| (i, s.distance(p)))
            .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        let h = PERIOD / n as f64;
        let mut t = i0 as f64 * h;
        // Newton on gamma'(t) . (gamma(t) - p) = 0, kept inside the bracketing cell
        let (lo, hi) = (t - h, t + h);
        for _ in 0..50 {
            let d = self.point(t) - p;
            let d1 = self.derivative(t, 1);
            let d2 = self.derivative(t, 2);
            let f = d1.dot(d);
            let fp = d1.norm_sq() + d2.dot(d);
            let step = if fp > 0.0 { f / fp } else { 0.0 };
            let next = (t - step).clamp(lo, hi);
            if (next - t).abs() < 1e-15 {
                t = next;
                break;
            }
            t = next;
        }
        let cp = self.eval(t);
        let d = p - cp.point;
        let dist = d.norm();
        let t = wrap_param(t);
        if d.dot(cp.normal) < 0.0 {
            (t, -dist)
        } else {
            (t, dist)
        }
    }

    /// True if `p` lies strictly inside the curve.
    pub fn contains(&self, p: Vec2) -> bool {
        self.signed_distance(p).1 < 0.0
    }

    /// Spacing bound between consecutive cached samples (arc length).
    fn sample_spacing(&self) -> f64 {
        let n = self.samples.len();
        (0..n).map(|i| self.samples[i].distance(self.samples[(i + 1) % n])).fold(0.0, f64::max) * 1.01
    }

    /// Outward deviation of the true curve from its sample polygon.
    fn sagitta(&self) -> f64 {
        let ds = self.sample_spacing();
        self.kappa_max * ds * ds / 8.0
    }
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    fc.min(fd)
}

/// Counterclockwise convex hull (Andrew's monotone chain). Collinear points
/// on edges are dropped; every returned vertex is an input point.
pub fn convex_hull(points: &[Vec2]) -> Result<Vec<Vec2>> {
    let mut pts: Vec<Vec2> = points.to_vec();
    if pts.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Err(Error::Degenerate("non-finite hull input".into()));
    }
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return Err(Error::Degenerate("fewer than three distinct points".into()));
    }
    let turn = |o: Vec2, a: Vec2, b: Vec2| (a - o).cross(b - o);
    let mut hull: Vec<Vec2> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && turn(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower && turn(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    if hull.len() < 3 {
        return Err(Error::Degenerate("input points are collinear".into()));
    }
    Ok(hull)
}

fn closest_on_segment(p: Vec2, a: Vec2, b: Vec2) -> Vec2 {
    let ab = b - a;
    let s = ((p - a).dot(ab) / ab.norm_sq()).clamp(0.0, 1.0);
    a + ab * s
}

/// Signed distance from `p` to a counterclockwise convex polygon (negative
/// inside) together with the closest boundary point.
pub fn polygon_signed_distance(p: Vec2, poly: &[Vec2]) -> (f64, Vec2) {
    let n = poly.len();
    let mut inside = true;
    let mut best = (f64::INFINITY, poly[0]);
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if (b - a).cross(p - a) < 0.0 {
            inside = false;
        }
        let q = closest_on_segment(p, a, b);
        let d = p.distance(q);
        if d < best.0 {
            best = (d, q);
        }
    }
    if inside {
        (-best.0, best.1)
    } else {
        best
    }
}

/// Obstacles, incidence and the reflection sequence. The sequence is
/// repeated cyclically, so iteration `m` hits `sequence[m % len]`.
#[derive(Debug, Clone)]
pub struct Scene {
    pub obstacles: Vec<Curve>,
    pub alpha: Vec2,
    pub k: f64,
    pub sequence: Vec<usize>,
}

impl Scene {
    pub fn new(obstacles: Vec<Curve>, alpha: Vec2, k: f64, sequence: Vec<usize>) -> Result<Self> {
        if !((alpha.norm() - 1.0).abs() < 1e-12) {
            return Err(Error::Geometry(format!("alpha must be a unit vector, |alpha| = {}", alpha.norm())));
        }
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::Domain(format!("wavenumber must be positive, got {k}")));
        }
        if obstacles.is_empty() || sequence.is_empty() {
            return Err(Error::Geometry("scene needs obstacles and a non-empty sequence".into()));
        }
        if let Some(&bad) = sequence.iter().find(|&&i| i >= obstacles.len()) {
            return Err(Error::Geometry(format!("sequence refers to missing obstacle {bad}")));
        }
        let n = sequence.len();
        if n > 1 {
            if let Some(m) = (0..n).find(|&m| sequence[m] == sequence[(m + 1) % n]) {
                return Err(Error::Geometry(format!(
                    "consecutive sequence entries must differ (position {m}, cyclically repeated)"
                )));
            }
        }
        for i in 0..obstacles.len() {
            for j in i + 1..obstacles.len() {
                let d = curve_clearance(&obstacles[i], &obstacles[j]);
                if !(d > 0.0) {
                    return Err(Error::Geometry(format!("obstacles {i} and {j} overlap or touch (clearance {d:.3e})")));
                }
            }
        }
        Ok(Self { obstacles, alpha, k, sequence })
    }

    /// Obstacle index hit at iteration `m`.
    pub fn obstacle_index(&self, m: usize) -> usize {
        self.sequence[m % self.sequence.len()]
    }

    pub fn obstacle(&self, m: usize) -> &Curve {
        &self.obstacles[self.obstacle_index(m)]
    }

    /// True when the sequence allows iterations beyond m = 0.
    pub fn is_multiple(&self) -> bool {
        self.sequence.len() > 1
    }

    pub fn with_k(&self, k: f64) -> Result<Self> {
        Self::new(self.obstacles.clone(), self.alpha, k, self.sequence.clone())
    }
}

/// Certified lower bound on the distance between two disjoint convex
/// curves (non-positive if they overlap).
pub fn curve_clearance(a: &Curve, b: &Curve) -> f64 {
    let one_way = |p: &Curve, q: &Curve| -> f64 {
        let poly = convex_hull(q.samples()).expect("curve samples span a polygon");
        let raw = p.samples().iter().map(|&s| polygon_signed_distance(s, &poly).0).fold(f64::INFINITY, f64::min);
        raw - 0.5 * p.sample_spacing() - q.sagitta()
    };
    one_way(a, b).min(one_way(b, a))
}

/// The scene used for the two-obstacle experiment: a circle of radius 1/2 at
/// the origin and the ellipse `(cos t / 4, sin t)` rotated 60 degrees
/// clockwise and shifted by (0.4, -1.3), lit from the left at k = 800.
pub fn two_obstacle_scene() -> Scene {
    let circle = Curve::circle(Vec2::ZERO, 0.5).expect("valid circle");
    let ellipse = Curve::ellipse(Vec2::new(0.4, -1.3), 0.25, 1.0, -PI / 3.0).expect("valid ellipse");
    Scene::new(vec![circle, ellipse], Vec2::new(1.0, 0.0), 800.0, vec![0, 1]).expect("valid scene")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Condition {
    NoOcclusion,
    Visibility,
}

#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub condition: Condition,
    /// Sample on the tested obstacle and the nearest point of the forbidden set.
    pub points: [[f64; 2]; 2],
    /// Position in the sequence where the check was made.
    pub position: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct VisibilityCertificate {
    pub no_occlusion_ok: bool,
    pub visibility_ok: bool,
    /// Smallest certified clearance over all checks.
    pub margin: f64,
    pub samples_used: usize,
    /// Worst offender when a condition fails.
    pub witness: Option<Witness>,
}

impl VisibilityCertificate {
    pub fn ok(&self) -> bool {
        self.no_occlusion_ok && self.visibility_ok && self.margin > 0.0
    }

    /// Convert a failed certificate into an error.
    pub fn require(&self) -> Result<()> {
        if self.ok() {
            return Ok(());
        }
        let (condition, witness) = match &self.witness {
            Some(w) => (format!("{:?}", w.condition), w.points),
            None => ("Unknown".to_string(), [[f64::NAN; 2]; 2]),
        };
        Err(Error::Certification { condition, witness, margin: self.margin })
    }
}

struct Check {
    clearance: f64,
    witness: [[f64; 2]; 2],
}

fn clearance_to_polygon(tested: &Curve, poly: &[Vec2], hull_sagitta: f64) -> Check {
    let mut best = (f64::INFINITY, Vec2::ZERO, Vec2::ZERO);
    for &s in tested.samples() {
        let (d, q) = polygon_signed_distance(s, poly);
        if d < best.0 {
            best = (d, s, q);
        }
    }
    Check {
        clearance: best.0 - 0.5 * tested.sample_spacing() - hull_sagitta,
        witness: [[best.1.x, best.1.y], [best.2.x, best.2.y]],
    }
}

/// Sample-based certification of the no-occlusion and visibility
/// conditions. Clearances are reduced by the sampling error of both sets so
/// a positive margin certifies the continuous conditions.
pub fn certify_conditions(s: &Scene) -> Result<VisibilityCertificate> {
    let samples_used = s.obstacles.iter().map(|c| c.samples().len()).sum();
    if !s.is_multiple() {
        // a single obstacle is never re-hit, so both conditions are vacuous
        return Ok(VisibilityCertificate {
            no_occlusion_ok: true,
            visibility_ok: true,
            margin: f64::INFINITY,
            samples_used,
            witness: None,
        });
    }
    let k0 = s.obstacle(0);
    let k1 = s.obstacle(1);

    // shadow cylinder of K0, truncated beyond the far side of K1
    let reach = k1.samples().iter().map(|p| s.alpha.dot(*p)).fold(f64::NEG_INFINITY, f64::max)
        - k0.samples().iter().map(|p| s.alpha.dot(*p)).fold(f64::INFINITY, f64::min);
    let shift = s.alpha * (reach.max(0.0) + 1.0);
    let mut pts: Vec<Vec2> = k0.samples().to_vec();
    pts.extend(k0.samples().iter().map(|&p| p + shift));
    let cylinder = convex_hull(&pts)?;
    let occl = clearance_to_polygon(k1, &cylinder, k0.sagitta());

    let mut vis: Option<(Check, usize)> = None;
    let n = s.sequence.len().max(1);
    for m in 0..n {
        let (a, b, c) = (s.obstacle(m), s.obstacle(m + 1), s.obstacle(m + 2));
        let mut pts: Vec<Vec2> = a.samples().to_vec();
        pts.extend_from_slice(c.samples());
        let hull = convex_hull(&pts)?;
        let check = clearance_to_polygon(b, &hull, a.sagitta().max(c.sagitta()));
        if vis.as_ref().is_none_or(|(v, _)| check.clearance < v.clearance) {
            vis = Some((check, m));
        }
    }
    let (vis, vis_pos) = vis.expect("at least one triple");
    let no_occlusion_ok = occl.clearance > 0.0;
    let visibility_ok = vis.clearance > 0.0;
    let witness = if !no_occlusion_ok && (occl.clearance <= vis.clearance || visibility_ok) {
        Some(Witness { condition: Condition::NoOcclusion, points: occl.witness, position: 0 })
    } else if !visibility_ok {
        Some(Witness { condition: Condition::Visibility, points: vis.witness, position: vis_pos })
    } else {
        None
    };
    Ok(VisibilityCertificate {
        no_occlusion_ok,
        visibility_ok,
        margin: occl.clearance.min(vis.clearance),
        samples_used,
        witness,
    })
}
