//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use num_complex::Complex64;
use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton on the Legendre
/// recurrence (kept separate from the library's rule on purpose).
pub fn gl(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        loop {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                let (mut q0, mut q1) = (1.0, z);
                for j in 2..=n {
                    let q2 = ((2 * j - 1) as f64 * z * q1 - (j - 1) as f64 * q0) / j as f64;
                    q0 = q1;
                    q1 = q2;
                }
                let dq = n as f64 * (z * q1 - q0) / (z * z - 1.0);
                x[i] = -z;
                w[i] = 2.0 / ((1.0 - z * z) * dq * dq);
                break;
            }
        }
    }
    (x, w)
}

/// Composite Gauss rule on [a, b].
pub fn integrate<T>(a: f64, b: f64, panels: usize, order: usize, f: impl Fn(f64) -> T) -> T
where
    T: std::iter::Sum<T> + std::ops::Mul<f64, Output = T>,
{
    let (x, w) = gl(order);
    let h = (b - a) / panels as f64;
    (0..panels)
        .flat_map(|p| {
            let lo = a + h * p as f64;
            x.iter().zip(&w).map(move |(&xi, &wi)| (lo + 0.5 * h * (xi + 1.0), 0.5 * h * wi)).collect::<Vec<_>>()
        })
        .map(|(t, wt)| f(t) * wt)
        .sum()
}

/// `J_n(z) = (1/pi) int_0^pi cos(n tau - z sin tau) dtau`
pub fn bessel_j_integral(n: u32, z: f64) -> f64 {
    let panels = 8 + ((z + n as f64) / 2.0) as usize;
    integrate(0.0, PI, panels, 24, |t| (n as f64 * t - z * t.sin()).cos()) / PI
}

/// `Y_n(z) = (1/pi) int_0^pi sin(z sin tau - n tau) dtau
///          - (1/pi) int_0^inf (e^{nt} + (-1)^n e^{-nt}) e^{-z sinh t} dt`
pub fn bessel_y_integral(n: u32, z: f64) -> f64 {
    let panels = 8 + ((z + n as f64) / 2.0) as usize;
    let first = integrate(0.0, PI, panels, 24, |t| (z * t.sin() - n as f64 * t).sin()) / PI;
    let mut upper: f64 = 1.0;
    while z * upper.sinh() - n as f64 * upper < 60.0 {
        upper += 0.5;
    }
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let second = integrate(0.0, upper, 200, 24, |t| {
        ((n as f64 * t - z * t.sinh()).exp()) + sign * ((-(n as f64) * t - z * t.sinh()).exp())
    }) / PI;
    first - second
}

fn binom_half(j: u32) -> f64 {
    (0..j).fold(1.0, |acc, i| acc * (0.5 - i as f64) / (i as f64 + 1.0))
}

/// `H_1(z) - sum_{j <= s1}` (first s1+1 terms of the large-argument
/// series), from `H_1(z) = sqrt(2/(pi z)) e^{i(z - 3pi/4)} / Gamma(3/2)
/// int_0^inf e^{-u} u^{1/2} (1 + iu/(2z))^{1/2} du` with the Taylor
/// remainder of `(1 + w)^{1/2}` in integral form. No cancellation occurs.
pub fn hankel1_tail(s1: u32, z: f64) -> Complex64 {
    let n = s1;
    let coef = (n + 1) as f64 * binom_half(n + 1);
    let pre = Complex64::from_polar((2.0 / (PI * z)).sqrt(), z - 0.75 * PI) / (0.5 * PI.sqrt());
    // u = v^2, du = 2 v dv
    let outer = integrate(0.0, 9.5, 48, 20, |v| {
        let u = v * v;
        let w = Complex64::new(0.0, u / (2.0 * z));
        let inner: Complex64 =
            integrate(0.0, 1.0, 2, 24, |tau| (1.0 + w * tau).powf(0.5 - n as f64 - 1.0) * (1.0 - tau).powi(n as i32));
        w.powu(n + 1) * inner * ((-u).exp() * v * 2.0 * v)
    });
    pre * outer * coef
}

/// `int_R e^{ik t^2/2} e^{-t^2/2} dt = sqrt(2 pi / (1 - ik))`
pub fn gaussian_oscillatory(k: f64) -> Complex64 {
    (Complex64::new(2.0 * PI, 0.0) / Complex64::new(1.0, -k)).sqrt()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
