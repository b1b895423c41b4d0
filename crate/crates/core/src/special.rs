//! Real special functions: the error function family, both real branches of
//! the Lambert W function, and the scalar mapping `G(y)` that governs the
//! detection delay in the critical regime.
//!
//! The error function is a port of the classic fdlibm rational
//! approximations (accurate to about one ulp). `erfcx` reuses the same
//! rationals so the Gaussian tail ratios in [`crate::overshoot`] never form
//! `0/0` for large arguments.

use std::f64::consts::{E, PI};

use crate::error::{Error, Result};

const EFX: f64 = 1.283_791_670_955_125_863_16e-01;

const PP: [f64; 5] = [
    1.283_791_670_955_125_585_61e-01,
    -3.250_421_072_470_014_993_70e-01,
    -2.848_174_957_559_851_047_66e-02,
    -5.770_270_296_489_441_591_57e-03,
    -2.376_301_665_665_016_260_84e-05,
];
const QQ: [f64; 5] = [
    3.979_172_239_591_553_528_19e-01,
    6.502_224_998_876_729_444_85e-02,
    5.081_306_281_875_765_627_76e-03,
    1.324_947_380_043_216_445_26e-04,
    -3.960_228_278_775_368_123_20e-06,
];

const ERX: f64 = 8.450_629_115_104_675_292_97e-01;
const PA: [f64; 7] = [
    -2.362_118_560_752_659_440_77e-03,
    4.148_561_186_837_483_316_66e-01,
    -3.722_078_760_357_013_238_47e-01,
    3.183_466_199_011_617_536_74e-01,
    -1.108_946_942_823_966_774_76e-01,
    3.547_830_432_561_823_593_71e-02,
    -2.166_375_594_868_790_843_00e-03,
];
const QA: [f64; 6] = [
    1.064_208_804_008_442_282_86e-01,
    5.403_979_177_021_710_489_37e-01,
    7.182_865_441_419_626_628_68e-02,
    1.261_712_198_087_616_421_12e-01,
    1.363_708_391_202_905_073_62e-02,
    1.198_449_984_679_910_741_70e-02,
];

const RA: [f64; 8] = [
    -9.864_944_034_847_148_227_05e-03,
    -6.938_585_727_071_817_643_72e-01,
    -1.055_862_622_532_329_098_14e+01,
    -6.237_533_245_032_600_603_96e+01,
    -1.623_966_694_625_734_703_55e+02,
    -1.846_050_929_067_110_359_94e+02,
    -8.128_743_550_630_659_342_46e+01,
    -9.814_329_344_169_145_485_92e+00,
];
const SA: [f64; 8] = [
    1.965_127_166_743_925_712_92e+01,
    1.376_577_541_435_190_426_00e+02,
    4.345_658_774_752_292_288_21e+02,
    6.453_872_717_332_678_803_36e+02,
    4.290_081_400_275_678_333_86e+02,
    1.086_350_055_417_794_351_34e+02,
    6.570_249_770_319_281_701_35e+00,
    -6.042_441_521_485_809_874_38e-02,
];

const RB: [f64; 7] = [
    -9.864_942_924_700_099_285_97e-03,
    -7.992_832_376_805_230_065_74e-01,
    -1.775_795_491_775_475_198_89e+01,
    -1.606_363_848_558_219_160_62e+02,
    -6.375_664_433_683_896_277_22e+02,
    -1.025_095_131_611_077_249_54e+03,
    -4.835_191_916_086_513_970_19e+02,
];
const SB: [f64; 7] = [
    3.033_806_074_348_245_829_24e+01,
    3.257_925_129_965_739_188_26e+02,
    1.536_729_586_084_436_959_94e+03,
    3.199_858_219_508_595_539_08e+03,
    2.553_050_406_433_164_425_83e+03,
    4.745_285_412_069_553_672_15e+02,
    -2.244_095_244_658_581_833_62e+01,
];

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// `1 + x*(q[0] + x*(q[1] + ...))`
fn horner1(coeffs: &[f64], x: f64) -> f64 {
    1.0 + x * horner(coeffs, x)
}

/// Small-argument kernel shared by erf and erfc: erf(x) = x + x*y.
fn small_kernel(x: f64) -> f64 {
    let z = x * x;
    horner(&PP, z) / horner1(&QQ, z)
}

/// erf(x) - erx on [0.84375, 1.25), as a function of s = |x| - 1.
fn mid_kernel(s: f64) -> f64 {
    horner(&PA, s) / horner1(&QA, s)
}

/// log(x * erfc(x) * exp(x^2)) + 0.5625 for x >= 1.25.
fn tail_exponent(x: f64) -> f64 {
    let s = 1.0 / (x * x);
    if x < 1.0 / 0.35 {
        horner(&RA, s) / horner1(&SA, s)
    } else {
        horner(&RB, s) / horner1(&SB, s)
    }
}

/// erfc(x) for x >= 1.25, splitting x^2 to keep the exponent exact.
fn tail_erfc(x: f64) -> f64 {
    let z = f64::from_bits(x.to_bits() & 0xffff_ffff_0000_0000);
    let r = (-z * z - 0.5625).exp() * ((z - x) * (z + x) + tail_exponent(x)).exp();
    r / x
}

/// The error function `2/sqrt(pi) * int_0^x exp(-t^2) dt`.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let ax = x.abs();
    let magnitude = if ax < 0.84375 {
        if ax < 3.725_290_298_461_914e-9 {
            return x + EFX * x;
        }
        return x + x * small_kernel(x);
    } else if ax < 1.25 {
        ERX + mid_kernel(ax - 1.0)
    } else if ax < 6.0 {
        1.0 - tail_erfc(ax)
    } else {
        1.0
    };
    magnitude.copysign(x)
}

/// The complementary error function `1 - erf(x)`, accurate in the upper tail.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let ax = x.abs();
    if ax < 0.84375 {
        if ax < 1.387_778_780_781_445_7e-17 {
            return 1.0 - x;
        }
        let y = small_kernel(x);
        if x < 0.25 {
            return 1.0 - (x + x * y);
        }
        return 0.5 - (x * y + (x - 0.5));
    }
    if ax < 1.25 {
        let pq = mid_kernel(ax - 1.0);
        return if x >= 0.0 {
            1.0 - ERX - pq
        } else {
            1.0 + ERX + pq
        };
    }
    if ax < 28.0 {
        if x < -6.0 {
            return 2.0;
        }
        let r = tail_erfc(ax);
        return if x > 0.0 { r } else { 2.0 - r };
    }
    if x > 0.0 {
        0.0
    } else {
        2.0
    }
}

/// Scaled complementary error function `exp(x^2) * erfc(x)`.
///
/// Finite for all positive `x` (decays like `1/(x*sqrt(pi))`); overflows for
/// large negative `x` just like `exp(x^2)` would.
pub fn erfcx(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return 2.0 * (x * x).exp() - erfcx(-x);
    }
    if x < 1.25 {
        return erfc(x) * (x * x).exp();
    }
    if x > 1e150 {
        return 1.0 / (x * PI.sqrt());
    }
    (tail_exponent(x) - 0.5625).exp() / x
}

/// Branch selector for the real Lambert W function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum LambertBranch {
    /// `W_0`, defined on `[-1/e, inf)`, values `>= -1`.
    Principal,
    /// `W_{-1}`, defined on `[-1/e, 0)`, values `<= -1`.
    NegativeBranch,
}

// 1/e split into a double-double so that z + 1/e keeps its low bits near
// the branch point.
const INV_E_HI: f64 = 0.367_879_441_171_442_33;
const INV_E_LO: f64 = -1.242_875_367_278_836_3e-17;

/// Distance `z + 1/e` evaluated in extra precision.
fn offset_from_branch_point(z: f64) -> f64 {
    (z + INV_E_HI) + INV_E_LO
}

/// `-1 + p - p^2/3 + 11 p^3/72 - 43 p^4/540 + 769 p^5/17280`, the expansion of
/// W around the branch point in `p = ±sqrt(2(e z + 1))`.
fn branch_point_series(p: f64) -> f64 {
    -1.0 + p
        * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0 + p * (-43.0 / 540.0 + p * 769.0 / 17280.0))))
}

const LAMBERT_MAX_ITER: usize = 64;

/// One Halley step for `w e^w = z`.
fn halley_direct(w: f64, z: f64) -> f64 {
    let ew = w.exp();
    let f = w * ew - z;
    let wp1 = w + 1.0;
    let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
    w - f / denom
}

/// One Halley step for `w + ln|w| = ln|z|`, valid when `w` and `z` share a sign.
fn halley_log(w: f64, log_abs_z: f64) -> f64 {
    let f = w + w.abs().ln() - log_abs_z;
    let fp = 1.0 + 1.0 / w;
    let fpp = -1.0 / (w * w);
    w - 2.0 * f * fp / (2.0 * fp * fp - f * fpp)
}

fn converged(old: f64, new: f64) -> bool {
    (new - old).abs() <= 4.0 * f64::EPSILON * new.abs().max(f64::MIN_POSITIVE)
}

/// Bisection on the monotone residual; the fallback if Halley misbehaves.
fn bisect_lambert(z: f64, mut lo: f64, mut hi: f64, increasing: bool) -> f64 {
    let residual = |w: f64| w * w.exp() - z;
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let r = residual(mid);
        if (r < 0.0) == increasing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Real Lambert W: the solution `w` of `w e^w = z` on the requested branch.
pub fn lambert_w(branch: LambertBranch, z: f64) -> Result<f64> {
    let expected = match branch {
        LambertBranch::Principal => "z >= -1/e",
        LambertBranch::NegativeBranch => "-1/e <= z < 0",
    };
    if !z.is_finite() && !(branch == LambertBranch::Principal && z == f64::INFINITY) {
        return Err(Error::domain("lambert_w", z, expected));
    }
    let offset = offset_from_branch_point(z);
    // Allow the rounding of -1/e itself.
    if offset < 0.0 {
        if offset > -4.0 * f64::EPSILON * INV_E_HI {
            return Ok(-1.0);
        }
        return Err(Error::domain("lambert_w", z, expected));
    }
    if branch == LambertBranch::NegativeBranch && z >= 0.0 {
        return Err(Error::domain("lambert_w", z, expected));
    }
    if z == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    if z == 0.0 {
        return Ok(0.0);
    }

    let p = (2.0 * E * offset).sqrt();
    if offset < 1e-10 {
        return Ok(match branch {
            LambertBranch::Principal => branch_point_series(p),
            LambertBranch::NegativeBranch => branch_point_series(-p),
        });
    }

    let w = match branch {
        LambertBranch::Principal => principal(z, p),
        LambertBranch::NegativeBranch => negative(z, p),
    };
    Ok(w)
}

fn principal(z: f64, p: f64) -> f64 {
    if z.abs() < 1e-9 {
        return z * (1.0 + z * (-1.0 + 1.5 * z));
    }
    let mut w = if z < -0.25 {
        branch_point_series(p)
    } else if z < 3.0 {
        // Rational seed, exact at 0 and close on [-0.25, 3).
        z * (1.0 + 1.2 * z) / (1.0 + z * (2.2 + 0.4 * z))
    } else {
        let l1 = z.ln();
        l1 - l1.ln() + l1.ln() / l1
    };
    let use_log = z > 3.0;
    let log_z = if use_log { z.ln() } else { 0.0 };
    for _ in 0..LAMBERT_MAX_ITER {
        let next = if use_log {
            halley_log(w, log_z)
        } else {
            halley_direct(w, z)
        };
        if !next.is_finite() {
            break;
        }
        let done = converged(w, next);
        w = next;
        if done {
            return w;
        }
    }
    let hi = if z > 1.0 { z.ln() + 1.0 } else { 1.0 };
    bisect_lambert(z, -1.0, hi, true)
}

fn negative(z: f64, p: f64) -> f64 {
    let log_neg_z = (-z).ln();
    let near_branch = z < -0.25;
    let mut w = if near_branch {
        branch_point_series(-p)
    } else {
        lambert_w_minus1_seed(log_neg_z)
    };
    for _ in 0..LAMBERT_MAX_ITER {
        let next = if near_branch {
            halley_direct(w, z)
        } else {
            halley_log(w, log_neg_z)
        };
        if !next.is_finite() || next > -1.0 {
            break;
        }
        let done = converged(w, next);
        w = next;
        if done {
            return w;
        }
    }
    let lo = 2.0 * log_neg_z - 2.0;
    bisect_lambert(z, lo, -1.0, false)
}

/// `L1 - L2 + L2/L1` with `L1 = ln(-z)`, `L2 = ln(-L1)`.
fn lambert_w_minus1_seed(log_neg_z: f64) -> f64 {
    let l2 = (-log_neg_z).ln();
    log_neg_z - l2 + l2 / log_neg_z
}

/// Leading-order asymptote `log(-x) - log(-log(-x))` of `W_{-1}(x)` as `x -> 0-`.
///
/// Only a cross-check and a seed; its error decays like `log log / log`.
pub fn lambert_w_minus1_small_asymptote(x: f64) -> Result<f64> {
    if !(x < 0.0 && offset_from_branch_point(x) > 0.0) {
        return Err(Error::domain(
            "lambert_w_minus1_small_asymptote",
            x,
            "-1/e < x < 0",
        ));
    }
    let l1 = (-x).ln();
    Ok(l1 - (-l1).ln())
}

/// `ε - ln(1 + ε)` without cancellation near zero.
pub(crate) fn excess_over_log1p(eps: f64) -> f64 {
    if eps.abs() < 1e-2 {
        // sum_{k>=2} (-1)^k eps^k / k
        let mut term = eps * eps;
        let mut sum = 0.0;
        for k in 2..=12 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * term / k as f64;
            term *= eps;
        }
        sum
    } else {
        eps - eps.ln_1p()
    }
}

/// `ln(1 + ε) - ε/(1 + ε)`, i.e. `ln x - 1 + 1/x` at `x = 1 + ε`.
pub(crate) fn log_minus_reciprocal_gap(eps: f64) -> f64 {
    if eps.abs() < 1e-2 {
        // sum_{k>=2} (-1)^k (k-1)/k eps^k
        let mut term = eps * eps;
        let mut sum = 0.0;
        for k in 2..=12 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * (k - 1) as f64 / k as f64 * term;
            term *= eps;
        }
        sum
    } else {
        eps.ln_1p() - eps / (1.0 + eps)
    }
}

/// The root `x >= 1` of `x - 1 - ln x = y`, returned as `ε = x - 1`.
///
/// Equivalently `x = -W_{-1}(-e^{-1-y})`. Solved directly in `y` so that
/// neither the branch-point cancellation of `-e^{-1-y}` near `-1/e` nor its
/// underflow for `y > ~708` ever enters.
pub(crate) fn negative_branch_excess(y: f64) -> f64 {
    if y == 0.0 {
        return 0.0;
    }
    if y == f64::INFINITY {
        return f64::INFINITY;
    }
    // Seeds: branch-point expansion for small y, the log asymptote otherwise.
    let mut eps = if y < 2.0 {
        let s = (2.0 * y).sqrt();
        s * (1.0 + s * (1.0 / 3.0 + s / 36.0))
    } else {
        let x = (1.0 + y) + (1.0 + y).ln();
        x - 1.0
    };
    for _ in 0..LAMBERT_MAX_ITER {
        // f(ε) = ε - ln(1+ε) - y; f' = ε/(1+ε); f'' = 1/(1+ε)^2
        let f = excess_over_log1p(eps) - y;
        let fp = eps / (1.0 + eps);
        let fpp = 1.0 / ((1.0 + eps) * (1.0 + eps));
        let next = eps - 2.0 * f * fp / (2.0 * fp * fp - f * fpp);
        if !next.is_finite() || next <= 0.0 {
            break;
        }
        let done = converged(eps, next);
        eps = next;
        if done {
            return eps;
        }
    }
    // Bisection fallback on (0, hi].
    let mut lo = 0.0;
    let mut hi = eps.max(1.0);
    while excess_over_log1p(hi) < y {
        hi *= 2.0;
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if excess_over_log1p(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `h` with `e^h - h - 1 = y`, `h >= 0`; equal to `ln(-W_{-1}(-e^{-1-y}))`.
pub(crate) fn positive_root_exp_excess(y: f64) -> f64 {
    negative_branch_excess(y).ln_1p()
}

/// The mapping `G(y) = e^{1+y+W} - W - y - 2` with `W = W_{-1}(-e^{-1-y})`.
///
/// Evaluated through `x = -W`, which turns it into `ln x - 1 + 1/x` where
/// `x - 1 - ln x = y`. This keeps full relative accuracy as `y -> 0` and never
/// underflows for large `y`.
pub fn g_mapping(y: f64) -> Result<f64> {
    if !(y >= 0.0) || y.is_infinite() {
        return Err(Error::domain("g_mapping", y, "finite y >= 0"));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    Ok(log_minus_reciprocal_gap(negative_branch_excess(y)))
}
