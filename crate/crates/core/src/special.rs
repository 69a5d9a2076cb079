//! Special functions behind the Gaussian-driven gamma variables of the
//! Dirichlet-mixture priors.

use core::f64::consts::SQRT_2;

/// Normal drivers beyond this magnitude are clamped before the CDF transform.
pub const DRIVER_CLAMP: f64 = 8.0;

const EPS: f64 = 1e-16;
const FPMIN: f64 = 1e-300;
const MAX_ITER: usize = 10_000;

/// Standard normal CDF `Φ(x)`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

pub fn ln_gamma(a: f64) -> f64 {
    libm::lgamma(a)
}

/// `ln[x^a e^{-x} / Γ(a)]` given `ln x`.
fn ln_prefactor(a: f64, ln_x: f64) -> f64 {
    a * ln_x - libm::exp(ln_x) - ln_gamma(a)
}

/// Series for `P(a, x)`, valid for `x < a + 1`. Returns `ln P`.
fn ln_p_series(a: f64, ln_x: f64) -> f64 {
    let x = libm::exp(ln_x);
    let mut ap = a;
    let mut del = 1.0 / a;
    let mut sum = del;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * EPS {
            break;
        }
    }
    ln_prefactor(a, ln_x) + libm::log(sum)
}

/// Lentz continued fraction for `Q(a, x)`, valid for `x ≥ a + 1`. Returns `ln Q`.
fn ln_q_fraction(a: f64, ln_x: f64) -> f64 {
    let x = libm::exp(ln_x);
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    ln_prefactor(a, ln_x) + libm::log(h)
}

/// `(ln P(a, x), ln Q(a, x))` for the regularized incomplete gamma functions,
/// evaluated from `ln x` so that arguments far below `f64::MIN_POSITIVE` work.
pub fn ln_gamma_pq(a: f64, ln_x: f64) -> (f64, f64) {
    if ln_x == f64::NEG_INFINITY {
        return (f64::NEG_INFINITY, 0.0);
    }
    let x = libm::exp(ln_x);
    if x < a + 1.0 {
        let lp = ln_p_series(a, ln_x);
        (lp, libm::log1p(-libm::exp(lp)))
    } else {
        let lq = ln_q_fraction(a, ln_x);
        (libm::log1p(-libm::exp(lq)), lq)
    }
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    libm::exp(ln_gamma_pq(a, libm::log(x)).0)
}

/// Maps a standard-normal driver `v` to `ln y` where `y ~ Gamma(shape, 1)`,
/// i.e. solves `P(shape, y) = Φ(v)`.
///
/// The transform is monotone in `v`. Drivers are clamped to
/// `±DRIVER_CLAMP`; the lower tail is solved against `P` and the upper tail
/// against `Q` so both keep full relative precision. Returns `-∞` for a zero
/// shape. The root is found by safeguarded Newton iteration in `ln y`, with
/// bisection fallback, to a relative tolerance of `1e-12` on `y`.
pub fn ln_gamma_quantile_normal(shape: f64, v: f64) -> f64 {
    if shape <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let v = if v.is_nan() { 0.0 } else { v.clamp(-DRIVER_CLAMP, DRIVER_CLAMP) };
    let lower = v <= 0.0;
    // target tail probability, always ≤ 1/2
    let ln_target = libm::log(normal_cdf(-v.abs()));

    // residual is increasing in t = ln y
    let residual = |t: f64| -> (f64, f64) {
        let (lp, lq) = ln_gamma_pq(shape, t);
        let ln_dens = ln_prefactor(shape, t); // ln(y · pdf(y))
        if lower {
            (lp - ln_target, libm::exp(ln_dens - lp))
        } else {
            (ln_target - lq, libm::exp(ln_dens - lq))
        }
    };

    let mut t = initial_guess(shape, v, ln_target);
    let (mut f, mut df) = residual(t);
    if f == 0.0 {
        return t;
    }
    // bracket [lo, hi] with f(lo) < 0 < f(hi)
    let (mut lo, mut hi);
    let mut step = 1.0;
    if f < 0.0 {
        lo = t;
        hi = t + step;
        while residual(hi).0 < 0.0 {
            lo = hi;
            step *= 2.0;
            hi += step;
        }
    } else {
        hi = t;
        lo = t - step;
        while residual(lo).0 > 0.0 {
            hi = lo;
            step *= 2.0;
            lo -= step;
        }
    }

    for _ in 0..400 {
        let newton = if df.is_finite() && df > 0.0 { t - f / df } else { f64::NAN };
        let next = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let delta = (next - t).abs();
        t = next;
        (f, df) = residual(t);
        if f == 0.0 || delta < 1e-12 || (hi - lo) < 1e-12 {
            break;
        }
        if f < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
    }
    t
}

fn initial_guess(shape: f64, v: f64, ln_target: f64) -> f64 {
    // Wilson–Hilferty, with the small-y power law for the lower tail
    let wh = 1.0 - 1.0 / (9.0 * shape) + v / (3.0 * libm::sqrt(shape));
    let small = (ln_target + ln_gamma(shape + 1.0)) / shape;
    if wh > 0.0 {
        let t = libm::log(shape) + 3.0 * libm::log(wh);
        if v <= 0.0 {
            t.min(0.0).max(small)
        } else {
            t
        }
    } else {
        small
    }
}
