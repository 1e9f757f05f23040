//! Airy function `Ai` and its derivative on the real line.
//!
//! `|x| ≤ 1`: Maclaurin series. `|x| > 10`: asymptotic expansions.
//! In between: Taylor steps of `y″ = x·y` from a table of anchors. Negative
//! anchors are stepped out from the origin; positive anchors are stepped
//! back from `x = 10`, the direction in which `Ai` dominates.

use std::f64::consts::{FRAC_PI_4, PI};
use std::sync::OnceLock;

/// `Ai(0) = 3^(−2/3) / Γ(2/3)`.
pub const AI_0: f64 = 0.355_028_053_887_817_24;
/// `Ai′(0) = −3^(−1/3) / Γ(1/3)`.
pub const AI_PRIME_0: f64 = -0.258_819_403_792_806_8;

const SERIES_LIMIT: f64 = 1.0;
const ASYMPTOTIC_LIMIT: f64 = 10.0;
const ANCHOR_STEP: f64 = 0.25;
const ANCHORS_PER_SIDE: usize = 40;

/// `(Ai(x), Ai′(x))`.
pub fn airy_ai_pair(x: f64) -> (f64, f64) {
    if x.is_nan() {
        return (f64::NAN, f64::NAN);
    }
    if x.abs() <= SERIES_LIMIT {
        return taylor_step(0.0, AI_0, AI_PRIME_0, x);
    }
    if x.abs() > ASYMPTOTIC_LIMIT {
        return if x > 0.0 { asymptotic_positive(x) } else { asymptotic_negative(-x) };
    }
    let table = anchors();
    let k = ((x.abs() / ANCHOR_STEP).round() as usize).min(ANCHORS_PER_SIDE);
    let (x0, y, yp) = if x > 0.0 { table.positive[k] } else { table.negative[k] };
    taylor_step(x0, y, yp, x - x0)
}

pub fn airy_ai(x: f64) -> f64 {
    airy_ai_pair(x).0
}

pub fn airy_ai_prime(x: f64) -> f64 {
    airy_ai_pair(x).1
}

/// First (least negative) zero of `Ai′`, by bisection.
pub fn airy_ai_prime_first_zero() -> f64 {
    let (mut lo, mut hi) = (-1.5_f64, -0.5_f64);
    // Ai′ < 0 on (a′₁, ∞) and > 0 just left of a′₁
    while hi - lo > 4.0 * f64::EPSILON {
        let mid = 0.5 * (lo + hi);
        if airy_ai_prime(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Advances `(y, y′)` of `y″ = x·y` from `x0` to `x0 + h` with the local
/// power series.
fn taylor_step(x0: f64, y: f64, yp: f64, h: f64) -> (f64, f64) {
    // n(n−1) a_n = x0 a_{n−2} + a_{n−3}
    let (mut a3, mut a2, mut a1) = (0.0_f64, y, yp);
    let mut value = y + yp * h;
    let mut deriv = yp;
    let mut hp = h; // h^(n−1) for the term being added
    let mut small = 0;
    for n in 2..200 {
        let a_n = (x0 * a2 + a3) / (n * (n - 1)) as f64;
        (a3, a2, a1) = (a2, a1, a_n);
        let dterm = n as f64 * a_n * hp;
        hp *= h;
        let vterm = a_n * hp;
        value += vterm;
        deriv += dterm;
        if vterm.abs() <= 1e-18 * value.abs() && dterm.abs() <= 1e-18 * deriv.abs() {
            small += 1;
            // one coefficient in three can vanish by accident
            if small == 3 {
                break;
            }
        } else {
            small = 0;
        }
    }
    (value, deriv)
}

fn u_coefficients() -> &'static [f64] {
    static U: OnceLock<Vec<f64>> = OnceLock::new();
    U.get_or_init(|| {
        let mut u = vec![1.0];
        for k in 1..60 {
            let k_f = k as f64;
            let next = u[k - 1] * (6.0 * k_f - 5.0) * (6.0 * k_f - 3.0) * (6.0 * k_f - 1.0) / ((2.0 * k_f - 1.0) * 216.0 * k_f);
            u.push(next);
        }
        u
    })
}

fn v_coefficient(k: usize) -> f64 {
    let k_f = k as f64;
    -(6.0 * k_f + 1.0) / (6.0 * k_f - 1.0) * u_coefficients()[k]
}

/// Sums `Σ sign(k)·c_k/ζ^k` over the selected `k`, stopping at the smallest
/// term.
fn asymptotic_sum(zeta: f64, ks: impl Iterator<Item = usize>, coeff: impl Fn(usize) -> f64, alternate: bool) -> f64 {
    let mut sum = 0.0_f64;
    let mut last = f64::INFINITY;
    for (j, k) in ks.enumerate() {
        let term = coeff(k) / zeta.powi(k as i32);
        if term.abs() > last || term.abs() < 1e-18 * sum.abs() {
            break;
        }
        last = term.abs();
        sum += if alternate && j % 2 == 1 { -term } else { term };
    }
    sum
}

fn asymptotic_positive(x: f64) -> (f64, f64) {
    let zeta = 2.0 / 3.0 * x.powf(1.5);
    let e = (-zeta).exp() / (2.0 * PI.sqrt());
    let q = x.powf(0.25);
    let u = |k: usize| if k % 2 == 0 { u_coefficients()[k] } else { -u_coefficients()[k] };
    let v = |k: usize| if k % 2 == 0 { v_coefficient(k) } else { -v_coefficient(k) };
    let su = asymptotic_sum(zeta, 0..60, u, false);
    let sv = asymptotic_sum(zeta, 0..60, v, false);
    (e / q * su, -e * q * sv)
}

fn asymptotic_negative(z: f64) -> (f64, f64) {
    let zeta = 2.0 / 3.0 * z.powf(1.5);
    let (s, c) = (zeta + FRAC_PI_4).sin_cos();
    let q = z.powf(0.25);
    let u = |k| u_coefficients()[k];
    let u_even = asymptotic_sum(zeta, (0..60).step_by(2), u, true);
    let u_odd = asymptotic_sum(zeta, (1..60).step_by(2), u, true);
    let v_even = asymptotic_sum(zeta, (0..60).step_by(2), v_coefficient, true);
    let v_odd = asymptotic_sum(zeta, (1..60).step_by(2), v_coefficient, true);
    let ai = (s * u_even - c * u_odd) / (PI.sqrt() * q);
    let aip = -q / PI.sqrt() * (c * v_even + s * v_odd);
    (ai, aip)
}

struct Anchors {
    /// `(x, Ai, Ai′)` at `x = k·step`.
    positive: Vec<(f64, f64, f64)>,
    /// `(x, Ai, Ai′)` at `x = −k·step`.
    negative: Vec<(f64, f64, f64)>,
}

fn anchors() -> &'static Anchors {
    static TABLE: OnceLock<Anchors> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut negative = vec![(0.0, AI_0, AI_PRIME_0)];
        for k in 1..=ANCHORS_PER_SIDE {
            let (_, y, yp) = negative[k - 1];
            let (y, yp) = taylor_step(-((k - 1) as f64) * ANCHOR_STEP, y, yp, -ANCHOR_STEP);
            negative.push((-(k as f64) * ANCHOR_STEP, y, yp));
        }
        let mut positive = vec![(0.0, 0.0, 0.0); ANCHORS_PER_SIDE + 1];
        let (y, yp) = asymptotic_positive(ASYMPTOTIC_LIMIT);
        positive[ANCHORS_PER_SIDE] = (ASYMPTOTIC_LIMIT, y, yp);
        for k in (0..ANCHORS_PER_SIDE).rev() {
            let (x1, y, yp) = positive[k + 1];
            let (y, yp) = taylor_step(x1, y, yp, -ANCHOR_STEP);
            positive[k] = (k as f64 * ANCHOR_STEP, y, yp);
        }
        Anchors { positive, negative }
    })
}
