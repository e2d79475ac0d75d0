//! Stationary-phase evaluation and the leading geometrical-optics amplitude
//! of the iterated scattered fields.

use crate::error::{Error, Result};
use crate::geometry::{Scene, Vec2, PERIOD};
use crate::rays::{phase_derivatives, psi_reflected};
use crate::specfun::{gamma, hankel_c};
use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::Arc;

/// `|psi''(t0)|` below this is a degenerate stationary point.
pub const DEGENERATE_CURVATURE: f64 = 1e-10;
/// Tolerance on `psi'(t0)`.
pub const STATIONARY_TOL: f64 = 1e-12;
/// Samples of `psi'` used to check that the stationary point is unique.
pub const UNIQUENESS_SAMPLES: usize = 1024;

/// `(t, order) -> d^order psi / dt^order`, orders 0..=4.
pub type PhaseFn = Arc<dyn Fn(f64, usize) -> f64 + Send + Sync>;
/// `(t, order) -> d^order f / dt^order`, orders 0..=2.
pub type AmplitudeFn = Arc<dyn Fn(f64, usize) -> Complex64 + Send + Sync>;

/// Which power of `h` enters `S_q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// `h^{q + 1/2}`, as the lemma is usually quoted; wrong constant.
    Printed,
    /// `(2h)^{2q + 1}`, which reproduces the classical quadratic-phase law.
    Corrected,
}

/// `int_a^b e^{ik psi(t)} f(t) dt` with a single nondegenerate stationary point.
#[derive(Clone)]
pub struct StationaryPhaseProblem {
    pub a: f64,
    pub b: f64,
    pub t0: f64,
    pub sigma: f64,
    pub psi: PhaseFn,
    pub f: AmplitudeFn,
}

impl std::fmt::Debug for StationaryPhaseProblem {
    fn fmt(&self, fmt: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fmt.debug_struct("StationaryPhaseProblem")
            .field("a", &self.a)
            .field("b", &self.b)
            .field("t0", &self.t0)
            .field("sigma", &self.sigma)
            .finish()
    }
}

impl StationaryPhaseProblem {
    /// Locates `t0` by Newton from `guess` and checks it is the only zero of
    /// `psi'` on `(a, b)`.
    pub fn new(a: f64, b: f64, guess: f64, psi: PhaseFn, f: AmplitudeFn) -> Result<Self> {
        if !(a < b) || !(guess > a && guess < b) {
            return Err(Error::Domain(format!("need a < t0 < b, got [{a}, {b}] and {guess}")));
        }
        let mut t0 = guess;
        for _ in 0..50 {
            let d2 = psi(t0, 2);
            if d2.abs() < DEGENERATE_CURVATURE {
                return Err(Error::Degenerate(format!("psi'' = {d2:.3e} near {t0}")));
            }
            let step = psi(t0, 1) / d2;
            t0 -= step;
            if step.abs() < 1e-15 * (1.0 + t0.abs()) {
                break;
            }
        }
        if !(t0 > a && t0 < b) || psi(t0, 1).abs() > STATIONARY_TOL * (1.0 + psi(t0, 2).abs()) {
            return Err(Error::Precondition(format!("no stationary point found near {guess}")));
        }
        let d2 = psi(t0, 2);
        if d2.abs() < DEGENERATE_CURVATURE {
            return Err(Error::Degenerate(format!("psi'' = {d2:.3e} at {t0}")));
        }
        let h = (b - a) / UNIQUENESS_SAMPLES as f64;
        let mut changes = 0;
        let mut prev = psi(a, 1);
        for i in 1..=UNIQUENESS_SAMPLES {
            let cur = psi(a + h * i as f64, 1);
            if (cur < 0.0) != (prev < 0.0) {
                changes += 1;
            }
            prev = cur;
        }
        if changes > 1 {
            return Err(Error::Precondition(format!("psi' changes sign {changes} times on [{a}, {b}]")));
        }
        Ok(Self { a, b, t0, sigma: d2.signum(), psi, f })
    }

    /// Smooth extension of `h(t) = |t - t0| [4 sigma (psi(t) - psi(t0))]^{-1/2}`.
    pub fn h(&self, t: f64) -> f64 {
        let d = t - self.t0;
        let p2 = (self.psi)(self.t0, 2).abs();
        if d.abs() < 1e-6 {
            let (a, b) = self.taylor_ratios();
            return (2.0 * p2).powf(-0.5) * (1.0 + a * d + b * d * d).powf(-0.5);
        }
        d.abs() / (4.0 * self.sigma * ((self.psi)(t, 0) - (self.psi)(self.t0, 0))).sqrt()
    }

    /// `sigma (psi - psi0) = |psi''|/2 d^2 (1 + a d + b d^2 + ...)`.
    fn taylor_ratios(&self) -> (f64, f64) {
        let p2 = (self.psi)(self.t0, 2);
        ((self.psi)(self.t0, 3) / (3.0 * p2), (self.psi)(self.t0, 4) / (12.0 * p2))
    }

    /// `S_q[f, psi](t0)` for q in {0, 1}.
    pub fn s_q(&self, q: u32, norm: Normalization) -> Result<Complex64> {
        if q > 1 {
            return Err(Error::Domain(format!("stationary-phase term q = {q} not available (q <= 1)")));
        }
        let p2 = (self.psi)(self.t0, 2).abs();
        let (a, b) = self.taylor_ratios();
        // h(t)^e = H0^e (1 + a d + b d^2)^{-e/2}, with H0 = (2|psi''|)^{-1/2}
        let (scale, expo) = match norm {
            Normalization::Printed => ((2.0 * p2).powf(-0.5), q as f64 + 0.5),
            Normalization::Corrected => (2.0 * (2.0 * p2).powf(-0.5), 2.0 * q as f64 + 1.0),
        };
        let p = expo / 2.0;
        let g0 = 1.0;
        let g1 = -p * a;
        let g2 = -2.0 * p * b + p * (p + 1.0) * a * a;
        let f = |n| (self.f)(self.t0, n);
        let deriv = match q {
            0 => f(0) * g0,
            _ => f(0) * g2 + f(1) * (2.0 * g1) + f(2) * g0,
        };
        let fact = if q == 0 { 1.0 } else { 2.0 };
        let phase = Complex64::from_polar(1.0, PI * self.sigma * (2.0 * q as f64 + 1.0) / 4.0);
        Ok(phase * (gamma(q as f64 + 0.5) / fact * scale.powf(expo)) * deriv)
    }
}

/// `e^{ik psi(t0)} k^{-1/2} S_0`, normalised so quadratic phases reproduce
/// `e^{i sigma pi/4} sqrt(2 pi / (k |psi''|)) f(t0)`.
pub fn sp_leading(problem: &StationaryPhaseProblem, k: f64) -> Result<Complex64> {
    sp_correction(problem, k, 0)
}

/// The q-th term `e^{ik psi(t0)} k^{-(q + 1/2)} S_q`.
pub fn sp_correction(problem: &StationaryPhaseProblem, k: f64, q: u32) -> Result<Complex64> {
    sp_term(problem, k, q, Normalization::Corrected)
}

pub fn sp_term(problem: &StationaryPhaseProblem, k: f64, q: u32, norm: Normalization) -> Result<Complex64> {
    if !(k > 1.0) {
        return Err(Error::Domain(format!("stationary phase needs k > 1, got {k}")));
    }
    let s = problem.s_q(q, norm)?;
    Ok(Complex64::from_polar(1.0, k * (problem.psi)(problem.t0, 0)) * k.powf(-(q as f64 + 0.5)) * s)
}

/// Sum of the first `terms` stationary-phase terms.
pub fn sp_sum(problem: &StationaryPhaseProblem, k: f64, terms: u32) -> Result<Complex64> {
    (0..terms).map(|q| sp_correction(problem, k, q)).sum()
}

/// Leading geometrical-optics amplitude at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct GoAmplitude {
    pub x: Vec2,
    /// `A_{m,0}(x)`
    pub amplitude: Complex64,
    /// launch parameter on the obstacle hit at iteration `m`
    pub t_x: f64,
    /// second derivative of `phi_m(y(t)) + |x - y(t)|` at `t_x`
    pub phase_second_derivative: f64,
    /// combined phase at `t_x`, equal to `psi_m(x)`
    pub phase: f64,
    /// `|d/dt (phi_m(y(t)) + |x - y(t)|)|` at `t_x`
    pub stationarity_residual: f64,
}

/// Physical-optics boundary value `a_{0,0}` on the illuminated arc of the
/// first obstacle.
pub fn kirchhoff_a00(scene: &Scene, t: f64) -> Result<Complex64> {
    let nu = scene.obstacle(0).normal(t);
    if scene.alpha.dot(nu) >= 0.0 {
        return Err(Error::Precondition(format!("parameter {t} is in the shadow of the incident wave")));
    }
    Ok(Complex64::new(2.0, 0.0))
}

/// `A_{m,0}(x)`: the stationary-phase leading term of the scattered field
/// envelope `u_m^slow`, built from `a_{m,0}` (2 at m = 0, and `2 A_{m-1,0}`
/// at the launch point for m >= 1).
pub fn go_leading(scene: &Scene, m: usize, x: Vec2) -> Result<GoAmplitude> {
    let curve = scene.obstacle(m);
    let refl = psi_reflected(scene, m, x)?;
    let t = refl.t_launch;
    let y = curve.point(t);
    let (d1, d2) = (curve.derivative(t, 1), curve.derivative(t, 2));
    let r = x - y;
    let dist = r.norm();
    let a_m0 = if m == 0 { kirchhoff_a00(scene, t)? } else { go_leading(scene, m - 1, y)?.amplitude * 2.0 };
    let (phi1, phi2) = phase_derivatives(scene, &refl.ray);
    let dist1 = -r.dot(d1) / dist;
    let dist2 = (d1.norm_sq() - r.dot(d2)) / dist - r.dot(d1).powi(2) / dist.powi(3);
    let second = phi2 + dist2;
    if second.abs() < DEGENERATE_CURVATURE {
        return Err(Error::Degenerate(format!("combined phase has vanishing curvature at {t}")));
    }
    let nu = curve.normal(t);
    // amplitude in the native parameter carries the speed |gamma'|
    let f0 = a_m0 * (r.dot(nu) / dist * d1.norm() / dist.sqrt());
    let sigma = second.signum();
    let s0 = Complex64::from_polar(1.0, sigma * PI / 4.0) * (2.0 * PI / second.abs()).sqrt() * f0;
    let amplitude = Complex64::new(0.0, 0.25) * hankel_c(1, 0) * s0;
    let phase = refl.ray.phase + dist;
    Ok(GoAmplitude {
        x,
        amplitude,
        t_x: wrap(t),
        phase_second_derivative: second,
        phase,
        stationarity_residual: (phi1 + dist1).abs(),
    })
}

fn wrap(t: f64) -> f64 {
    t.rem_euclid(PERIOD)
}
