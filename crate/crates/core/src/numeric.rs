//! Small numerical helpers shared by the geometry and measure code.

use quadrature::double_exponential;

/// Solves `f(x) = y` for increasing `f` on `[0, inf)` with `f(0) = 0`.
///
/// Brackets by doubling, then bisects until the bracket is below `1e-15` relative
/// width (or the floating-point spacing).
pub(crate) fn invert_increasing<F: Fn(f64) -> f64>(f: F, y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    if !y.is_finite() {
        return f64::INFINITY;
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while f(hi) < y {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return f64::INFINITY;
        }
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || (hi - lo) <= 1e-16 * hi {
            break;
        }
        if f(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Integral of `f` over `[a, b]` with `a > 0`, using the substitution `x = e^u`,
/// which keeps power-law integrands well conditioned over many decades.
pub(crate) fn integrate_log(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let (la, lb) = (a.ln(), b.ln());
    let g = |u: f64| {
        let x = u.exp();
        f(x) * x
    };
    // Split into unit pieces in log-space so the double-exponential rule sees smooth,
    // moderately varying integrands.
    let pieces = ((lb - la).ceil() as usize).clamp(1, 4096);
    let h = (lb - la) / pieces as f64;
    let mut total = 0.0;
    let mut parts = Vec::with_capacity(pieces);
    for i in 0..pieces {
        let u0 = la + h * i as f64;
        let u1 = if i + 1 == pieces { lb } else { u0 + h };
        parts.push(double_exponential::integrate(g, u0, u1, 1e-14).integral);
    }
    // Sum small contributions first.
    parts.sort_by(|x, y| x.abs().partial_cmp(&y.abs()).unwrap_or(std::cmp::Ordering::Equal));
    for p in parts {
        total += p;
    }
    total
}

/// `expm1(c x) / c`, continuous at `c = 0`.
pub(crate) fn expm1_over(c: f64, x: f64) -> f64 {
    if c.abs() < 1e-12 {
        x
    } else {
        (c * x).exp_m1() / c
    }
}

/// Kahan-compensated sum.
pub(crate) fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}
