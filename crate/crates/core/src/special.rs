//! Special functions and quadrature rules shared by the estimators and samplers.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// Generalized Laguerre polynomial `L_n^{(a)}(x)` by three-term recurrence.
pub fn laguerre(n: usize, a: f64, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = 1.0 + a - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + a - x) * cur - (kf + a) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// `sqrt(lo! / hi!)` for `lo <= hi`.
pub fn sqrt_factorial_ratio(lo: usize, hi: usize) -> f64 {
    debug_assert!(lo <= hi);
    (lo + 1..=hi).fold(1.0, |acc, j| acc / (j as f64).sqrt())
}

/// Untruncated Fock matrix element `<m|D(alpha)|n>` of the displacement
/// operator `D(alpha) = exp(alpha a^dag - conj(alpha) a)`.
pub fn displacement_element(m: usize, n: usize, alpha: C64) -> C64 {
    let r2 = alpha.norm_sqr();
    let gauss = (-0.5 * r2).exp();
    if m >= n {
        let d = m - n;
        alpha.powu(d as u32) * (sqrt_factorial_ratio(n, m) * gauss * laguerre(n, d as f64, r2))
    } else {
        let d = n - m;
        (-alpha.conj()).powu(d as u32)
            * (sqrt_factorial_ratio(m, n) * gauss * laguerre(m, d as f64, r2))
    }
}

/// The `dim x dim` block of the untruncated displacement operator.
///
/// Unlike the exponential of the truncated generator this block carries no
/// truncation error; it is simply not unitary.
pub fn displacement_block(alpha: C64, dim: usize) -> DMatrix<C64> {
    DMatrix::from_fn(dim, dim, |m, n| displacement_element(m, n, alpha))
}

/// Oscillator eigenfunctions `<n|q>` of the quadrature `(a + a^dag)/2`,
/// for `n = 0..count`. Normalized so that `int |<n|q>|^2 dq = 1`.
///
/// Upward recurrence on the Hermite functions with a running log-scale, so
/// that neither the polynomial part nor the Gaussian envelope overflows.
pub fn quadrature_wavefunctions(q: f64, count: usize) -> Vec<f64> {
    let mut out = vec![0.0; count];
    if count == 0 {
        return out;
    }
    let x = std::f64::consts::SQRT_2 * q;
    let norm = 2f64.powf(0.25) * PI.powf(-0.25);
    let mut log_scale = -0.5 * x * x;
    let mut prev = 0.0;
    let mut cur = 1.0;
    out[0] = cur * log_scale.exp() * norm;
    for n in 1..count {
        let nf = n as f64;
        let next = (2.0 / nf).sqrt() * x * cur - ((nf - 1.0) / nf).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > 1e150 {
            prev /= 1e150;
            cur /= 1e150;
            log_scale += 150.0 * std::f64::consts::LN_10;
        }
        out[n] = cur * log_scale.exp() * norm;
    }
    out
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order > 0, "quadrature order must be positive");
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let n = order as f64;
    for i in 0..order.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(order, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(order, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, dp)
}

/// Composite Gauss-Legendre rule on `[a, b]` with `panels` equal panels.
pub fn composite_gauss_legendre(a: f64, b: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(mid + 0.5 * h * xi);
            weights.push(0.5 * h * wi);
        }
    }
    (nodes, weights)
}

/// Cubic Hermite interpolation on `[0, 1]` given endpoint values and
/// derivatives (derivatives already scaled by the cell width).
#[inline]
pub fn hermite_cubic<T>(t: f64, y0: T, y1: T, d0: T, d1: T) -> T
where
    T: std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T> + Copy,
{
    let t2 = t * t;
    let t3 = t2 * t;
    y0 * (2.0 * t3 - 3.0 * t2 + 1.0)
        + d0 * (t3 - 2.0 * t2 + t)
        + y1 * (-2.0 * t3 + 3.0 * t2)
        + d1 * (t3 - t2)
}
