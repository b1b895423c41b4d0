//! Reference implementations used only by the integration tests. Nothing
//! here calls into the library's special functions or quadrature.

#![allow(dead_code)]

use std::f64::consts::PI;

pub fn phi(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    m: f64,
    fm: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson on `[a, b]` with absolute tolerance `tol`, applied on
/// 64 equal panels so that narrow features are not missed.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let panels = 64;
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let (lo, hi) = (a + i as f64 * h, a + (i + 1) as f64 * h);
            let m = 0.5 * (lo + hi);
            let (flo, fhi, fm) = (f(lo), f(hi), f(m));
            let whole = (hi - lo) / 6.0 * (flo + 4.0 * fm + fhi);
            simpson_step(&f, lo, flo, hi, fhi, m, fm, whole, tol / panels as f64, 20)
        })
        .sum()
}

/// Integrate a sub-Gaussian integrand over `[a, a + 12 + |shift|]`.
pub fn upper_tail<F: Fn(f64) -> f64>(f: F, a: f64, shift: f64) -> f64 {
    let b = a.max(shift) + 12.0;
    let scale = simpson(&f, a, b, 1e-6).abs().max(1e-300);
    simpson(f, a, b, 1e-13 * scale)
}

pub fn lower_tail<F: Fn(f64) -> f64>(f: F, b: f64, shift: f64) -> f64 {
    upper_tail(|t| f(-t), -b, -shift)
}

pub fn finite<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let scale = simpson(&f, a, b, 1e-6).abs().max(1e-300);
    simpson(f, a, b, 1e-13 * scale)
}

/// `E[Z - x | Z >= x]`.
pub fn delta1_oracle(x: f64) -> f64 {
    upper_tail(|t| (t - x) * phi(t), x, 0.0) / upper_tail(phi, x, 0.0)
}

/// `E[Z - x | Z <= x]` (negative).
pub fn lower_excess_oracle(x: f64) -> f64 {
    lower_tail(|t| (t - x) * phi(t), x, 0.0) / lower_tail(phi, x, 0.0)
}

/// `E[W^2 - x^2 | |W| >= x]`, `W ~ N(theta, 1)`.
pub fn j_oracle(x: f64, theta: f64) -> f64 {
    let f = |w: f64| (w * w - x * x) * phi(w - theta);
    let g = |w: f64| phi(w - theta);
    (upper_tail(f, x, theta) + lower_tail(f, -x, theta))
        / (upper_tail(g, x, theta) + lower_tail(g, -x, theta))
}

/// `E[W^2 - x^2 | |W| <= x]`, `W ~ N(theta, 1)`.
pub fn g2_oracle(x: f64, theta: f64) -> f64 {
    finite(|w| (w * w - x * x) * phi(w - theta), -x, x) / finite(|w| phi(w - theta), -x, x)
}

/// `h >= 0` with `e^h - h - 1 = y`, by bisection.
pub fn h_bisect(y: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi.exp() - hi - 1.0 < y {
        hi *= 2.0;
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mid.exp() - mid - 1.0 < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `G(y) = ln x - 1 + 1/x` where `x > 1` solves `x - 1 - ln x = y`, by bisection.
pub fn g_oracle(y: f64) -> f64 {
    let (mut lo, mut hi) = (1.0f64, 2.0f64);
    while hi - 1.0 - hi.ln() < y {
        hi *= 2.0;
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mid - 1.0 - mid.ln() < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x = 0.5 * (lo + hi);
    x.ln() - 1.0 + 1.0 / x
}

/// Worker count for heavy simulations.
pub fn workers() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}
