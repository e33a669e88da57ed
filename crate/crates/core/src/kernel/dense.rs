//! Convolution of dense windows on `Z`.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// Products of lengths up to this are convolved directly, which is exact whenever the
/// operands are dyadic with short enough denominators.
const DIRECT_LIMIT: usize = 1 << 24;

/// Full linear convolution of `a` and `b`, plus the mass removed to keep the result a
/// pointwise lower bound of the exact convolution.
pub(super) fn convolve_lines(a: &[f64], b: &[f64], same: bool) -> (Vec<f64>, f64) {
    if a.is_empty() || b.is_empty() {
        return (Vec::new(), 0.0);
    }
    if a.len().saturating_mul(b.len()) <= DIRECT_LIMIT || a.len().min(b.len()) <= 32 {
        return (direct(a, b), 0.0);
    }
    fft(a, b, same)
}

fn direct(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &p) in a.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        for (o, &q) in out[i..].iter_mut().zip(b) {
            *o += p * q;
        }
    }
    out
}

/// Bound on the sup-norm rounding error of an FFT convolution of length `len`.
///
/// Each transform perturbs its output by at most `c eps log2(len)` in relative l2 norm;
/// the pointwise product and the inverse transform then give an l_inf error of at most
/// `c eps log2(len) (|a|_2 |b|_1 + |a|_1 |b|_2 + |a|_2 |b|_2)` after normalization.
/// We take `c = 5` and double the whole bound.
pub(super) fn fft_error_bound(a: &[f64], b: &[f64], len: usize) -> f64 {
    let l1 = |v: &[f64]| v.iter().map(|x| x.abs()).sum::<f64>();
    let l2 = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let (a1, a2, b1, b2) = (l1(a), l2(a), l1(b), l2(b));
    let log_n = (len as f64).log2().max(1.0);
    2.0 * 5.0 * f64::EPSILON * log_n * (a2 * b1 + a1 * b2 + a2 * b2)
}

fn fft(a: &[f64], b: &[f64], same: bool) -> (Vec<f64>, f64) {
    let out_len = a.len() + b.len() - 1;
    let len = out_len.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(len);
    let inverse = planner.plan_fft_inverse(len);

    let load = |v: &[f64]| {
        let mut buf = vec![Complex::new(0.0, 0.0); len];
        for (z, &x) in buf.iter_mut().zip(v) {
            z.re = x;
        }
        buf
    };
    let mut fa = load(a);
    forward.process(&mut fa);
    if same {
        for z in fa.iter_mut() {
            *z = *z * *z;
        }
    } else {
        let mut fb = load(b);
        forward.process(&mut fb);
        for (z, w) in fa.iter_mut().zip(&fb) {
            *z *= *w;
        }
    }
    inverse.process(&mut fa);

    let bound = fft_error_bound(a, b, len);
    let scale = 1.0 / len as f64;
    // the exact value lies within `bound` of the computed one; keep the lower end
    let out: Vec<f64> = fa[..out_len]
        .iter()
        .map(|z| (z.re * scale - bound).max(0.0))
        .collect();
    // each position now sits at most `2 bound` below the exact value
    let removed = 2.0 * bound * out_len as f64;
    (out, removed)
}
