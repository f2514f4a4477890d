//! Inverse-CDF sampling of rotated quadratures.
//!
//! `p(q; phi) = sum_k e^{-ik phi} G_k(q)` with `G_k = sum_{n-m=k} rho_nm h_n h_m`.
//! The cumulative integrals `I_k` of each harmonic are tabulated once, so a
//! shot at any phase costs a binary search over a handful of nodes.

use crate::error::{Error, Result};
use crate::oscore::DensityMatrix;
use crate::special::{composite_gauss_legendre, gauss_legendre, hermite_cubic, quadrature_wavefunctions};
use num_complex::Complex64 as C64;

/// Largest interpolation error of the CDF, summed over cells.
pub(crate) const CDF_TOL: f64 = 1e-6;
/// Probability mass allowed outside the tabulated range.
pub(crate) const TAIL_MASS: f64 = 1e-8;
const MIN_STEP: f64 = 1e-4;

pub(crate) struct QuadratureSampler {
    q0: f64,
    step: f64,
    /// `cum[j][k] = I_k(q_j)`, `dens[j][k] = G_k(q_j)` for `k = 0..dim`.
    cum: Vec<Vec<C64>>,
    dens: Vec<Vec<C64>>,
}

fn harmonics(rho: &DensityMatrix, q: f64) -> Vec<C64> {
    let d = rho.dim();
    let h = quadrature_wavefunctions(q, d);
    (0..d)
        .map(|k| (0..d - k).map(|m| rho.get(m + k, m) * (h[m + k] * h[m])).sum())
        .collect()
}

fn add_scaled(acc: &mut [C64], x: &[C64], s: f64) {
    for (a, b) in acc.iter_mut().zip(x) {
        *a += b * s;
    }
}

/// `int_a^b G_k dq` for every `k` with a 4-point Gauss rule.
fn cell_integral(rho: &DensityMatrix, a: f64, b: f64, rule: &(Vec<f64>, Vec<f64>)) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); rho.dim()];
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    for (x, w) in rule.0.iter().zip(&rule.1) {
        add_scaled(&mut out, &harmonics(rho, mid + half * x), w * half);
    }
    out
}

impl QuadratureSampler {
    pub(crate) fn new(rho: &DensityMatrix) -> Result<Self> {
        let d = rho.dim();
        // range: extend until the phase-averaged density G_0 leaves less than TAIL_MASS outside
        let mut half = ((d - 1) as f64).sqrt() + 2.0;
        loop {
            let panels = (2.0 * half / 0.25).ceil() as usize;
            let (qs, ws) = composite_gauss_legendre(-half, half, panels, 12);
            let inside: f64 = qs.iter().zip(&ws).map(|(q, w)| harmonics(rho, *q)[0].re * w).sum();
            if 1.0 - inside < TAIL_MASS {
                break;
            }
            half += 0.5;
            if half > 100.0 {
                return Err(Error::Truncation("quadrature distribution does not fit any finite range".into()));
            }
        }
        let rule = gauss_legendre(4);
        let mut step = 0.05;
        loop {
            let s = Self::tabulate(rho, half, step, &rule);
            if s.midpoint_error(rho, &rule) < CDF_TOL || step / 2.0 < MIN_STEP {
                return Ok(s);
            }
            step /= 2.0;
        }
    }

    fn tabulate(rho: &DensityMatrix, half: f64, step: f64, rule: &(Vec<f64>, Vec<f64>)) -> Self {
        let cells = (2.0 * half / step).ceil() as usize;
        let q0 = -0.5 * cells as f64 * step;
        let mut cum = Vec::with_capacity(cells + 1);
        let mut dens = Vec::with_capacity(cells + 1);
        let mut running = vec![C64::new(0.0, 0.0); rho.dim()];
        for j in 0..=cells {
            let q = q0 + j as f64 * step;
            if j > 0 {
                let inc = cell_integral(rho, q - step, q, rule);
                add_scaled(&mut running, &inc, 1.0);
            }
            cum.push(running.clone());
            dens.push(harmonics(rho, q));
        }
        Self { q0, step, cum, dens }
    }

    /// Summed difference between the Hermite interpolant of `I_k` at cell
    /// midpoints and the integral computed there, over all harmonics.
    fn midpoint_error(&self, rho: &DensityMatrix, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
        let mut err = 0.0;
        for j in 0..self.cum.len() - 1 {
            let a = self.q0 + j as f64 * self.step;
            let exact = cell_integral(rho, a, a + 0.5 * self.step, rule);
            for k in 0..rho.dim() {
                let interp = hermite_cubic(
                    0.5,
                    self.cum[j][k],
                    self.cum[j + 1][k],
                    self.dens[j][k] * self.step,
                    self.dens[j + 1][k] * self.step,
                );
                let w = if k == 0 { 1.0 } else { 2.0 };
                err += w * (interp - self.cum[j][k] - exact[k]).norm();
            }
        }
        err
    }

    fn combine(row: &[C64], phases: &[C64]) -> f64 {
        // G_{-k} = conj(G_k)
        let mut v = row[0].re;
        for k in 1..row.len() {
            v += 2.0 * (row[k] * phases[k]).re;
        }
        v
    }

    /// Draws `q` at phase `phi` from a uniform variate `u`.
    pub(crate) fn draw(&self, phi: f64, u: f64) -> f64 {
        let d = self.cum[0].len();
        let phases: Vec<C64> = (0..d).map(|k| C64::from_polar(1.0, -(k as f64) * phi)).collect();
        let last = self.cum.len() - 1;
        let total = Self::combine(&self.cum[last], &phases);
        let target = u * total;
        // largest node with CDF <= target
        let (mut lo, mut hi) = (0usize, last);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if Self::combine(&self.cum[mid], &phases) <= target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let c0 = Self::combine(&self.cum[lo], &phases);
        let c1 = Self::combine(&self.cum[hi], &phases);
        let d0 = Self::combine(&self.dens[lo], &phases) * self.step;
        let d1 = Self::combine(&self.dens[hi], &phases) * self.step;
        let f = |t: f64| hermite_cubic(t, c0, c1, d0, d1) - target;
        // safeguarded Newton on [0, 1]
        let (mut a, mut b) = (0.0, 1.0);
        let mut t = if c1 > c0 { ((target - c0) / (c1 - c0)).clamp(0.0, 1.0) } else { 0.5 };
        for _ in 0..60 {
            let ft = f(t);
            if ft.abs() < 1e-15 {
                break;
            }
            if ft < 0.0 {
                a = t;
            } else {
                b = t;
            }
            let t2 = t * t;
            let slope = c0 * (6.0 * t2 - 6.0 * t)
                + d0 * (3.0 * t2 - 4.0 * t + 1.0)
                + c1 * (-6.0 * t2 + 6.0 * t)
                + d1 * (3.0 * t2 - 2.0 * t);
            let next = if slope > 0.0 { t - ft / slope } else { f64::NAN };
            t = if next > a && next < b { next } else { 0.5 * (a + b) };
            if b - a < 1e-14 {
                break;
            }
        }
        self.q0 + (lo as f64 + t) * self.step
    }

    /// `CDF(q; phi) / CDF(Q; phi)` by table interpolation; for tests.
    #[cfg(test)]
    pub(crate) fn cdf(&self, q: f64, phi: f64) -> f64 {
        let d = self.cum[0].len();
        let phases: Vec<C64> = (0..d).map(|k| C64::from_polar(1.0, -(k as f64) * phi)).collect();
        let last = self.cum.len() - 1;
        let total = Self::combine(&self.cum[last], &phases);
        let x = ((q - self.q0) / self.step).clamp(0.0, last as f64);
        let j = (x.floor() as usize).min(last - 1);
        let t = x - j as f64;
        let v = hermite_cubic(
            t,
            Self::combine(&self.cum[j], &phases),
            Self::combine(&self.cum[j + 1], &phases),
            Self::combine(&self.dens[j], &phases) * self.step,
            Self::combine(&self.dens[j + 1], &phases) * self.step,
        );
        v / total
    }
}
