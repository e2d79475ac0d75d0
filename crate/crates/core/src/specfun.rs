//! Bessel and Hankel functions of integer order and real positive argument,
//! the Gamma function, and the large-argument tip/tail split of `H^(1)_s`.
//!
//! `J_n` comes from Miller's downward recurrence normalised by
//! `J_0 + 2 sum J_2m = 1`. `Y_0` and `Y_1` use the Neumann series in the
//! Miller values for `z <= 25` and the Hankel asymptotic expansion above;
//! `Y_n` follows by upward recurrence.

use crate::error::{Error, Result};
use crate::quad::CompositeRule;
use num_complex::Complex64;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::OnceLock;

/// Orders beyond `z + MAX_ORDER_EXCESS` are refused.
pub const MAX_ORDER_EXCESS: f64 = 400.0;

/// Smallest argument accepted by [`hankel_tip`].
pub const TIP_Z_MIN: f64 = 10.0;

const ASYMPTOTIC_SWITCH: f64 = 25.0;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const RESCALE: f64 = 1e250;

fn check_argument(n: usize, z: f64) -> Result<()> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::Domain(format!("Bessel argument must be positive and finite, got {z}")));
    }
    if n as f64 > z + MAX_ORDER_EXCESS {
        return Err(Error::OutOfRange(format!("order {n} exceeds z + {MAX_ORDER_EXCESS} at z = {z}")));
    }
    Ok(())
}

fn miller_start(nmax: usize, z: f64) -> usize {
    let m = nmax.max(z.ceil() as usize);
    let start = m + 30 + (10.0 * (m as f64).cbrt()).ceil() as usize;
    start + start % 2
}

/// `J_0 .. J_nmax` by Miller's algorithm. No range checks.
fn miller_j(nmax: usize, z: f64) -> Vec<f64> {
    let start = miller_start(nmax, z);
    let mut vals = vec![0.0; nmax + 1];
    let mut next = 0.0;
    let mut cur = 1e-280;
    let mut norm = 2.0 * cur;
    if start <= nmax {
        vals[start] = cur;
    }
    for n in (1..=start).rev() {
        let prev = (2.0 * n as f64 / z) * cur - next;
        next = cur;
        cur = prev;
        let idx = n - 1;
        if idx <= nmax {
            vals[idx] = cur;
        }
        if idx % 2 == 0 {
            norm += if idx == 0 { cur } else { 2.0 * cur };
        }
        if cur.abs() > RESCALE {
            cur /= RESCALE;
            next /= RESCALE;
            norm /= RESCALE;
            for v in vals.iter_mut().skip(idx) {
                *v /= RESCALE;
            }
        }
    }
    let scale = 1.0 / norm;
    for v in &mut vals {
        *v *= scale;
    }
    vals
}

/// Hankel's large-argument expansion: returns (P, Q) for integer order `nu`.
fn hankel_pq(nu: u32, z: f64) -> (f64, f64) {
    let mu = 4.0 * (nu as f64).powi(2);
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (k as f64 * 8.0 * z);
        let mag = term.abs();
        if mag > last {
            break;
        }
        last = mag;
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * term;
        } else {
            q += sign * term;
        }
        if mag < 1e-17 * (p.abs() + q.abs()) {
            break;
        }
    }
    (p, q)
}

/// (J_nu, Y_nu) for nu in {0, 1} from the asymptotic expansion (z > 25).
fn jy_asymptotic(nu: u32, z: f64) -> (f64, f64) {
    let (p, q) = hankel_pq(nu, z);
    let (s, c) = z.sin_cos();
    // chi = z - pi/4 - nu*pi/2, reduced through sin z / cos z for accuracy
    let (cos_chi, sin_chi) = match nu {
        0 => ((c + s) * FRAC_1_SQRT_2, (s - c) * FRAC_1_SQRT_2),
        _ => ((s - c) * FRAC_1_SQRT_2, (-s - c) * FRAC_1_SQRT_2),
    };
    let amp = (2.0 / (PI * z)).sqrt();
    (amp * (p * cos_chi - q * sin_chi), amp * (p * sin_chi + q * cos_chi))
}

/// (Y_0, Y_1) from the Neumann series in the Miller values `j` (needs j up to ~ z + 40).
fn y01_neumann(j: &[f64], z: f64) -> (f64, f64) {
    let log_term = (0.5 * z).ln() + EULER_GAMMA;
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let mut k = 1;
    while 2 * k + 1 < j.len() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        s0 += sign * j[2 * k] / k as f64;
        s1 += sign * (j[2 * k - 1] - j[2 * k + 1]) / k as f64;
        k += 1;
    }
    let y0 = (2.0 / PI) * (log_term * j[0] - 2.0 * s0);
    let y1 = (2.0 / PI) * (-j[0] / z + log_term * j[1] + s1);
    (y0, y1)
}

fn neumann_len(z: f64) -> usize {
    z.ceil() as usize + 60
}

/// J_0, J_1, Y_0, Y_1 at z > 0.
fn jy01(z: f64) -> (f64, f64, f64, f64) {
    if z > ASYMPTOTIC_SWITCH {
        let (j0, y0) = jy_asymptotic(0, z);
        let (j1, y1) = jy_asymptotic(1, z);
        (j0, j1, y0, y1)
    } else {
        let j = miller_j(neumann_len(z), z);
        let (y0, y1) = y01_neumann(&j, z);
        (j[0], j[1], y0, y1)
    }
}

/// `H^(1)_0(z)` and `H^(1)_1(z)` for kernel evaluation. Requires `z > 0`;
/// no order policy applies.
pub fn hankel1_01(z: f64) -> (Complex64, Complex64) {
    debug_assert!(z > 0.0);
    let (j0, j1, y0, y1) = jy01(z);
    (Complex64::new(j0, y0), Complex64::new(j1, y1))
}

/// `H^(1)_1(z)` for kernel evaluation. Requires `z > 0`.
pub fn hankel1_1(z: f64) -> Complex64 {
    debug_assert!(z > 0.0);
    if z > ASYMPTOTIC_SWITCH {
        let (j1, y1) = jy_asymptotic(1, z);
        Complex64::new(j1, y1)
    } else {
        hankel1_01(z).1
    }
}

fn finite_or_range(v: f64, what: &str, n: usize, z: f64) -> Result<f64> {
    if v.is_finite() && v.abs() < 1e300 {
        Ok(v)
    } else {
        Err(Error::OutOfRange(format!("{what}_{n}({z}) overflows")))
    }
}

/// `J_0(z) .. J_nmax(z)`.
pub fn bessel_j_seq(nmax: usize, z: f64) -> Result<Vec<f64>> {
    check_argument(nmax, z)?;
    Ok(miller_j(nmax, z))
}

/// `Y_0(z) .. Y_nmax(z)` by upward recurrence.
pub fn bessel_y_seq(nmax: usize, z: f64) -> Result<Vec<f64>> {
    check_argument(nmax, z)?;
    let (_, _, y0, y1) = jy01(z);
    let mut out = Vec::with_capacity(nmax + 1);
    out.push(y0);
    if nmax >= 1 {
        out.push(y1);
    }
    for n in 1..nmax {
        let next = (2.0 * n as f64 / z) * out[n] - out[n - 1];
        out.push(finite_or_range(next, "Y", n + 1, z)?);
    }
    Ok(out)
}

/// `H^(1)_0(z) .. H^(1)_nmax(z)`.
pub fn hankel1_seq(nmax: usize, z: f64) -> Result<Vec<Complex64>> {
    let j = bessel_j_seq(nmax, z)?;
    let y = bessel_y_seq(nmax, z)?;
    Ok(j.into_iter().zip(y).map(|(a, b)| Complex64::new(a, b)).collect())
}

/// Bessel function of the first kind `J_n(z)`.
pub fn bessel_j(n: u32, z: f64) -> Result<f64> {
    let n = n as usize;
    check_argument(n, z)?;
    let v = if n <= 1 && z > ASYMPTOTIC_SWITCH { jy_asymptotic(n as u32, z).0 } else { miller_j(n, z)[n] };
    if v.abs() < f64::MIN_POSITIVE {
        return Err(Error::OutOfRange(format!("J_{n}({z}) underflows")));
    }
    Ok(v)
}

/// Bessel function of the second kind `Y_n(z)`.
pub fn bessel_y(n: u32, z: f64) -> Result<f64> {
    let seq = bessel_y_seq(n as usize, z)?;
    Ok(seq[n as usize])
}

/// `H^(1)_n(z) = J_n(z) + i Y_n(z)`.
pub fn hankel1(n: u32, z: f64) -> Result<Complex64> {
    Ok(Complex64::new(bessel_j(n, z)?, bessel_y(n, z)?))
}

/// `H^(1)_n(z)` for any integer order, using `H_{-n} = e^{i pi n} H_n`.
pub fn hankel1_signed(n: i64, z: f64) -> Result<Complex64> {
    let h = hankel1(n.unsigned_abs() as u32, z)?;
    Ok(if n < 0 && n % 2 != 0 { -h } else { h })
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `d^n/dz^n H^(1)_order(z) = 2^-n sum_j C(n,j) (-1)^j H_{order-n+2j}(z)`.
pub fn hankel1_derivative(order: i64, n: u32, z: f64) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..=n {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let h = hankel1_signed(order - n as i64 + 2 * j as i64, z)?;
        acc += h * (sign * binomial(n, j));
    }
    Ok(acc / 2f64.powi(n as i32))
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function (Lanczos, with reflection below 1/2).
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
}

/// `Gamma(s + s2 + 1/2) / Gamma(s - s2 + 1/2)` as an exact product of half-integers.
fn half_integer_gamma_ratio(s: u32, s2: u32) -> f64 {
    let lo = s as i64 - s2 as i64;
    let hi = s as i64 + s2 as i64;
    (lo..hi).map(|j| j as f64 + 0.5).product()
}

/// Coefficient `c_{s,s2}` of the large-argument expansion of `H^(1)_s`.
pub fn hankel_c(s: u32, s2: u32) -> Complex64 {
    let ratio = half_integer_gamma_ratio(s, s2);
    let factorial: f64 = (1..=s2).map(f64::from).product();
    let modulus = (2.0 / PI).sqrt() * ratio / (2f64.powi(s2 as i32) * factorial);
    let phase = Complex64::from_polar(1.0, -PI * (2 * s + 1) as f64 / 4.0);
    let i_pow = match s2 % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    };
    i_pow * phase * modulus
}

/// Truncated large-argument expansion of `H^(1)_s(z)` and the modulus bound
/// of what was dropped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HankelTipTail {
    pub tip: Complex64,
    pub tail_bound: f64,
}

fn check_tip_args(s: u32, s1: u32, z: f64) -> Result<()> {
    if s1 + 1 < s {
        return Err(Error::Domain(format!("tip needs s1 >= s - 1, got s = {s}, s1 = {s1}")));
    }
    if !(z >= TIP_Z_MIN) || !z.is_finite() {
        return Err(Error::Domain(format!("tip needs z >= {TIP_Z_MIN}, got {z}")));
    }
    Ok(())
}

/// `sum_{s2 <= s1} e^{iz} c_{s,s2} z^-(s2+1/2)` with tail bound `|c_{s,s1+1}| z^-(s1+3/2)`.
pub fn hankel_tip(s: u32, s1: u32, z: f64) -> Result<HankelTipTail> {
    check_tip_args(s, s1, z)?;
    let carrier = Complex64::from_polar(1.0, z);
    let tip = (0..=s1).map(|s2| carrier * hankel_c(s, s2) * z.powf(-(s2 as f64 + 0.5))).sum();
    let tail_bound = hankel_c(s, s1 + 1).norm() * z.powf(-(s1 as f64 + 1.5));
    Ok(HankelTipTail { tip, tail_bound })
}

fn remainder_rule() -> &'static CompositeRule {
    static RULE: OnceLock<CompositeRule> = OnceLock::new();
    RULE.get_or_init(|| CompositeRule::new(0.0, 9.0, 72, 16))
}

/// Binomial-series remainder `(1+w)^a - sum_{j<=s1} C(a,j) w^j`.
fn binomial_remainder(a: f64, s1: u32, w: Complex64) -> Complex64 {
    let mut coeff = 1.0;
    let mut power = Complex64::new(1.0, 0.0);
    let mut head = Complex64::new(0.0, 0.0);
    for j in 0..=s1 {
        if j > 0 {
            coeff *= (a - (j - 1) as f64) / j as f64;
            power *= w;
        }
        head += power * coeff;
    }
    if w.norm() >= 0.5 {
        return (Complex64::new(1.0, 0.0) + w).powf(a) - head;
    }
    let mut tail = Complex64::new(0.0, 0.0);
    let mut j = s1 + 1;
    loop {
        coeff *= (a - (j - 1) as f64) / j as f64;
        power *= w;
        let term = power * coeff;
        tail += term;
        if term.norm() <= 1e-18 * tail.norm() || coeff == 0.0 || j > 400 {
            break;
        }
        j += 1;
    }
    tail
}

/// `H^(1)_s(z) - tip` computed without cancellation from the integral
/// representation `H_s(z) = sqrt(2/(pi z)) e^{i chi} / Gamma(s+1/2)
/// * int_0^inf e^-u u^(s-1/2) (1 + iu/(2z))^(s-1/2) du`.
pub fn hankel_remainder(s: u32, s1: u32, z: f64) -> Result<Complex64> {
    check_tip_args(s, s1, z)?;
    let a = s as f64 - 0.5;
    // u = v^2 removes the u^(s-1/2) endpoint singularity
    let integral: Complex64 = remainder_rule().integrate(|v| {
        let u = v * v;
        let w = Complex64::new(0.0, u / (2.0 * z));
        binomial_remainder(a, s1, w) * (2.0 * v.powi(2 * s as i32) * (-u).exp())
    });
    let chi = z - PI * (2 * s + 1) as f64 / 4.0;
    let pref = (2.0 / (PI * z)).sqrt() / gamma(s as f64 + 0.5);
    Ok(Complex64::from_polar(pref, chi) * integral)
}
