//! Kerr-phase tomography: a Kerr shift `V(psi) = exp(i (a^dag a)^2 psi)`
//! followed by an ideal phase measurement.
//!
//! The outcome density is `p(phi | psi) = Tr[rho B(psi, phi)] / 2pi` with the
//! self-dual operators `<m|B(psi, phi)|l> = e^{-i psi (m^2 - l^2)} e^{i phi (m - l)}`.
//! Off-diagonal elements are recovered exactly; the diagonal is degenerate.

use super::{check_dim, EstimatorConfig};
use crate::error::{Error, Result};
use crate::oscore::{DensityMatrix, Operator};
use crate::par::map_indices;
use crate::recon::{estimate, EstimationResult};
use crate::sampler::{require_quorum, MeasurementRecord, QuorumId};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::Serialize;
use std::f64::consts::PI;

/// Kernel for `A = |n><n+d|`, `d != 0`: `exp[-i psi (d^2 + 2nd) + i phi d]`.
/// Its average over `p(phi, psi)` is `<n+d|rho|n>`.
pub fn kerr_kernel(n: usize, d: i64, phi: f64, psi: f64) -> Result<C64> {
    if d == 0 {
        return Err(Error::Precondition("the Kerr kernel is degenerate for d = 0; use the regularized kernel".into()));
    }
    if n as i64 + d < 0 {
        return Err(Error::InvalidSpec(format!("index n + d = {} is negative", n as i64 + d)));
    }
    let d = d as f64;
    let n = n as f64;
    Ok(C64::from_polar(1.0, -psi * (d * d + 2.0 * n * d) + phi * d))
}

/// `exp[i 2 psi n eps + i phi eps]`, the regularized diagonal kernel.
pub fn kerr_kernel_regularized(n: usize, eps: f64, phi: f64, psi: f64) -> Result<C64> {
    if !(eps > 0.0) {
        return Err(Error::Precondition(format!("regularization eps must be positive, got {eps}")));
    }
    Ok(C64::from_polar(1.0, 2.0 * psi * n as f64 * eps + phi * eps))
}

/// `B(psi, phi)` as a matrix.
fn kerr_operator(dim: usize, phi: f64, psi: f64) -> DMatrix<C64> {
    DMatrix::from_fn(dim, dim, |m, l| {
        let (m, l) = (m as f64, l as f64);
        C64::from_polar(1.0, -psi * (m * m - l * l) + phi * (m - l))
    })
}

/// `Tr[A B(psi, phi)]`.
pub fn kerr_operator_kernel(a: &Operator, phi: f64, psi: f64) -> C64 {
    let dim = a.dim();
    let mut acc = C64::new(0.0, 0.0);
    for p in 0..dim {
        for q in 0..dim {
            let (pf, qf) = (p as f64, q as f64);
            acc += a.get(p, q) * C64::from_polar(1.0, -psi * (qf * qf - pf * pf) + phi * (qf - pf));
        }
    }
    acc
}

/// The common value of the diagonal of `A`, if it is constant.
fn constant_diagonal(a: &Operator) -> Option<C64> {
    let c = a.get(0, 0);
    let scale = a.matrix().iter().map(|z| z.norm()).fold(0.0, f64::max);
    (0..a.dim()).all(|k| (a.get(k, k) - c).norm() <= 1e-14 * scale).then_some(c)
}

/// Mean of `Tr[A B(psi, phi)]` over Kerr records.
///
/// Only the off-diagonal part of `A` is estimated from the records. A diagonal
/// `c I` contributes `c Tr[rho] = c` exactly; any other diagonal is refused,
/// since the diagonal kernel is degenerate.
pub fn kerr_estimate(a: &Operator, records: &[MeasurementRecord]) -> Result<EstimationResult> {
    require_quorum(records, QuorumId::Kerr)?;
    let c = constant_diagonal(a).ok_or_else(|| {
        Error::Precondition("Kerr estimation covers off-diagonal elements and multiples of the identity only".into())
    })?;
    let off = Operator::from_fn(a.dim(), |i, j| if i == j { C64::new(0.0, 0.0) } else { a.get(i, j) });
    let mut r = estimate(records, |r| kerr_operator_kernel(&off, r.outcome, r.settings[0]))?;
    r.mean += c;
    Ok(r)
}

fn grid_sizes(cfg: &EstimatorConfig) -> (usize, usize) {
    let n = cfg.dim;
    let p = if cfg.phi_points == 0 { 2 * n + 1 } else { cfg.phi_points };
    let q = if cfg.psi_points == 0 { 2 * n * n + 1 } else { cfg.psi_points };
    (p, q)
}

fn grid_average(rho: &DensityMatrix, cfg: &EstimatorConfig, kernel: impl Fn(f64, f64) -> C64 + Sync + Send) -> C64 {
    let (p, q) = grid_sizes(cfg);
    let rows = map_indices(q, |j| {
        let psi = 2.0 * PI * j as f64 / q as f64;
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..p {
            let phi = 2.0 * PI * i as f64 / p as f64;
            let b = kerr_operator(rho.dim(), phi, psi);
            let tr: C64 = rho.op().matrix().iter().zip(b.transpose().iter()).map(|(x, y)| x * y).sum();
            acc += tr * kernel(phi, psi);
        }
        acc
    });
    rows.into_iter().sum::<C64>() / (p * q) as f64
}

/// `(1/PQ) sum_{phi, psi} Tr[rho B] Tr[A B]` on uniform grids, exact for
/// off-diagonal `A` once `P >= 2 dim + 1` and `Q >= 2 dim^2 + 1`.
pub fn kerr_exact_average(a: &Operator, rho: &DensityMatrix, cfg: &EstimatorConfig) -> Result<C64> {
    check_dim(cfg.dim, a.dim())?;
    check_dim(cfg.dim, rho.dim())?;
    Ok(grid_average(rho, cfg, |phi, psi| kerr_operator_kernel(a, phi, psi)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpsilonSweep {
    pub n: usize,
    pub eps: Vec<f64>,
    /// Grid average of the regularized kernel at each `eps`.
    pub values: Vec<C64>,
    /// `<n|rho|n>`, for comparison only.
    pub reference: f64,
}

/// Averages the regularized diagonal kernel over the exact outcome density
/// for each `eps`. No limit is taken.
pub fn kerr_epsilon_sweep(rho: &DensityMatrix, n: usize, eps: &[f64], cfg: &EstimatorConfig) -> Result<EpsilonSweep> {
    check_dim(cfg.dim, rho.dim())?;
    if n >= rho.dim() {
        return Err(Error::InvalidSpec(format!("level {n} outside dimension {}", rho.dim())));
    }
    let mut values = Vec::with_capacity(eps.len());
    for &e in eps {
        kerr_kernel_regularized(n, e, 0.0, 0.0)?;
        values.push(grid_average(rho, cfg, |phi, psi| kerr_kernel_regularized(n, e, phi, psi).expect("eps checked")));
    }
    Ok(EpsilonSweep { n, eps: eps.to_vec(), values, reference: rho.get(n, n).re })
}

/// Largest deviation of
/// `(1/PQ) sum <m|B|l> conj(<p|B|q>)` from `delta(m^2 - l^2, p^2 - q^2) delta(m - l, p - q)`
/// over all indices below `n`.
pub fn kerr_biorthogonality_defect(n: usize, phi_points: usize, psi_points: usize) -> f64 {
    let phis: Vec<f64> = (0..phi_points).map(|i| 2.0 * PI * i as f64 / phi_points as f64).collect();
    let psis: Vec<f64> = (0..psi_points).map(|j| 2.0 * PI * j as f64 / psi_points as f64).collect();
    let elem = |m: usize, l: usize, phi: f64, psi: f64| {
        let (m, l) = (m as f64, l as f64);
        C64::from_polar(1.0, -psi * (m * m - l * l) + phi * (m - l))
    };
    let worst = map_indices(n * n, |ml| {
        let (m, l) = (ml / n, ml % n);
        let mut worst: f64 = 0.0;
        for p in 0..n {
            for q in 0..n {
                let mut acc = C64::new(0.0, 0.0);
                for &psi in &psis {
                    for &phi in &phis {
                        acc += elem(m, l, phi, psi) * elem(p, q, phi, psi).conj();
                    }
                }
                acc /= (phi_points * psi_points) as f64;
                let (mi, li, pi, qi) = (m as i64, l as i64, p as i64, q as i64);
                let target = if mi * mi - li * li == pi * pi - qi * qi && mi - li == pi - qi { 1.0 } else { 0.0 };
                worst = worst.max((acc - C64::new(target, 0.0)).norm());
            }
        }
        worst
    });
    worst.into_iter().fold(0.0, f64::max)
}
