//! Displaced-parity tomography and the generalized Glauber formula.
//!
//! `<A> = int d^2 beta / pi Tr[A W(beta)] Tr[D(beta) rho D^dag(beta) Pi]` with
//! `W(beta) = 4 D^dag(beta) Pi D(beta) = 4 Pi D(2 beta)`. Records draw `beta`
//! uniformly from a disk of radius `R`, so each record contributes
//! `R^2 Tr[A W(beta)] s` with the parity outcome `s = +-1`.

use super::{check_dim, EstimatorConfig};
use crate::error::{Error, Result};
use crate::oscore::{DensityMatrix, Operator};
use crate::par::map_indices;
use crate::recon::{estimate, EstimationResult};
use crate::sampler::{require_quorum, MeasurementRecord, QuorumId};
use crate::special::{composite_gauss_legendre, displacement_block, laguerre, sqrt_factorial_ratio};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

/// Kernel magnitude on the proposal boundary above which a bias warning is logged.
pub const BOUNDARY_MASS_TOL: f64 = 1e-3;

/// `<n+d| 4 D^dag(alpha) Pi D(alpha) |n>`
/// `= 4 (-1)^(n+d) e^{-2|alpha|^2} sqrt(n!/(n+d)!) (2 alpha)^d L_n^d(4|alpha|^2)`.
pub fn displaced_parity_kernel(n: usize, d: usize, alpha: C64) -> C64 {
    let x = alpha.norm_sqr();
    let sign = if (n + d) % 2 == 0 { 1.0 } else { -1.0 };
    let mag = 4.0 * sign * (-2.0 * x).exp() * sqrt_factorial_ratio(n, n + d) * laguerre(n, d as f64, 4.0 * x);
    (alpha * 2.0).powu(d as u32) * mag
}

/// The `dim x dim` block of `W(beta) = 4 Pi D(2 beta)`, from untruncated elements.
pub fn displaced_parity_kernel_matrix(beta: C64, dim: usize) -> DMatrix<C64> {
    let mut w = displacement_block(beta * 2.0, dim);
    for n in 0..dim {
        let s = if n % 2 == 0 { 4.0 } else { -4.0 };
        w.row_mut(n).scale_mut(s);
    }
    w
}

/// `Tr[A W(beta)]`
pub fn parity_operator_kernel(a: &Operator, beta: C64) -> C64 {
    trace_product(a.matrix(), &displaced_parity_kernel_matrix(beta, a.dim()))
}

fn trace_product(a: &DMatrix<C64>, b: &DMatrix<C64>) -> C64 {
    // Tr[A B] = sum_mn A_mn B_nm
    a.iter().zip(b.transpose().iter()).map(|(x, y)| x * y).sum()
}

/// Largest `|Tr[A W(beta)]|` on the circle `|beta| = radius`, relative to the
/// largest matrix element of `A`.
pub fn parity_boundary_mass(a: &Operator, radius: f64) -> f64 {
    let scale = a.matrix().iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    (0..64)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / 64.0;
            parity_operator_kernel(a, C64::from_polar(radius, theta)).norm()
        })
        .fold(0.0, f64::max)
        / scale
}

fn record_beta(r: &MeasurementRecord) -> (C64, f64) {
    (C64::new(r.settings[0], r.settings[1]), r.settings[2])
}

fn warn_boundary(a: &Operator, records: &[MeasurementRecord]) -> f64 {
    let radius = records.iter().map(|r| r.settings[2]).fold(f64::INFINITY, f64::min);
    let mass = parity_boundary_mass(a, radius);
    if mass > BOUNDARY_MASS_TOL {
        log::warn!(
            "parity kernel reaches {mass:.2e} on the proposal boundary |beta| = {radius}; the estimate is biased, use a larger disk"
        );
    }
    mass
}

/// Importance-weighted mean of `R^2 Tr[A W(beta)] s` over parity records.
pub fn parity_estimate(a: &Operator, records: &[MeasurementRecord], cfg: &EstimatorConfig) -> Result<EstimationResult> {
    require_quorum(records, QuorumId::Parity)?;
    check_dim(cfg.dim, a.dim())?;
    if records.is_empty() {
        return Err(Error::NotEnoughSamples { needed: 2, got: 0 });
    }
    if records.iter().any(|r| !(r.settings[2] > 0.0)) {
        return Err(Error::InvalidSpec("parity records need a positive disk radius in s3".into()));
    }
    warn_boundary(a, records);
    estimate(records, |r| {
        let (beta, radius) = record_beta(r);
        parity_operator_kernel(a, beta) * (radius * radius * r.outcome)
    })
}

/// The parity resolution integrated exactly against `rho` with a polar
/// Gauss-Legendre x uniform-angle rule on the disk.
pub fn parity_exact_average(a: &Operator, rho: &DensityMatrix, cfg: &EstimatorConfig) -> Result<C64> {
    cfg.validate()?;
    check_dim(cfg.dim, a.dim())?;
    check_dim(cfg.dim, rho.dim())?;
    let radius = cfg.disk_radius();
    let panels = cfg.alpha_radial.div_ceil(16);
    let (rs, rw) = composite_gauss_legendre(0.0, radius, panels, 16);
    let angles = if cfg.alpha_angular == 0 { 4 * cfg.dim + 8 } else { cfg.alpha_angular };
    let dtheta = 2.0 * std::f64::consts::PI / angles as f64;
    let rows = map_indices(rs.len(), |i| {
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..angles {
            let beta = C64::from_polar(rs[i], k as f64 * dtheta);
            let w = displaced_parity_kernel_matrix(beta, cfg.dim);
            // Tr[rho D^dag Pi D] = Tr[rho W] / 4
            acc += trace_product(a.matrix(), &w) * trace_product(rho.op().matrix(), &w) / 4.0;
        }
        acc * (rw[i] * rs[i] * dtheta / std::f64::consts::PI)
    });
    Ok(rows.into_iter().sum())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GlauberReport {
    /// Largest entry error of the reconstructed test operators.
    pub max_error: f64,
    pub f1_condition: f64,
    pub f2_condition: f64,
    pub grid_points: usize,
    pub test_operators: usize,
}

const SINGULAR_CONDITION: f64 = 1e12;

fn inverse_with_condition(f: &Operator) -> Result<(DMatrix<C64>, f64)> {
    let sv = f.matrix().clone().singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if condition > SINGULAR_CONDITION {
        return Err(Error::Singular { condition });
    }
    let inv = f.matrix().clone().try_inverse().ok_or(Error::Singular { condition })?;
    Ok((inv, condition))
}

/// Verifies `A = int d^2 alpha / pi Tr[A F1 D(alpha) F2] F2^{-1} D^dag(alpha) F1^{-1}`
/// on a square `points x points` grid of half-width `half_width` for ten
/// random operators supported on the first `cfg.dim` levels with entries
/// suppressed like `e^{-2(m+n)}` and scaled to a largest entry of 1.
///
/// `F1` and `F2` act on a working space of dimension `>= cfg.dim`; the
/// displacements are the untruncated blocks of that size.
pub fn generalized_glauber_check(
    f1: &Operator,
    f2: &Operator,
    cfg: &EstimatorConfig,
    points: usize,
    half_width: f64,
) -> Result<GlauberReport> {
    let work = f1.dim();
    check_dim(work, f2.dim())?;
    if work < cfg.dim {
        return Err(Error::InvalidSpec(format!("working dimension {work} is below dim {}", cfg.dim)));
    }
    if points < 2 || !(half_width > 0.0) {
        return Err(Error::InvalidSpec("grid needs at least 2 points and positive width".into()));
    }
    let (f1_inv, f1_condition) = inverse_with_condition(f1)?;
    let (f2_inv, f2_condition) = inverse_with_condition(f2)?;

    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(0x61a0_be11);
    let tests: Vec<DMatrix<C64>> = (0..10)
        .map(|_| {
            let a = DMatrix::from_fn(work, work, |m, n| {
                if m < cfg.dim && n < cfg.dim {
                    let g = C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
                    g * (-2.0 * (m + n) as f64).exp()
                } else {
                    C64::new(0.0, 0.0)
                }
            });
            let top = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
            a / C64::new(top, 0.0)
        })
        .collect();
    // Tr[A F1 D F2] = Tr[(F2 A F1) D]
    let xs: Vec<DMatrix<C64>> = tests.iter().map(|a| f2.matrix() * a * f1.matrix()).collect();

    let h = 2.0 * half_width / (points - 1) as f64;
    let weight = h * h / std::f64::consts::PI;
    let partial = map_indices(points, |i| {
        let mut sums = vec![DMatrix::<C64>::zeros(work, work); xs.len()];
        for j in 0..points {
            let alpha = C64::new(-half_width + i as f64 * h, -half_width + j as f64 * h);
            let d = displacement_block(alpha, work);
            let d_dag = d.adjoint();
            for (s, x) in sums.iter_mut().zip(&xs) {
                *s += &d_dag * (trace_product(x, &d) * weight);
            }
        }
        sums
    });
    let mut max_error: f64 = 0.0;
    for (t, a) in tests.iter().enumerate() {
        let mut m = DMatrix::<C64>::zeros(work, work);
        for row in &partial {
            m += &row[t];
        }
        let rec = &f2_inv * m * &f1_inv;
        max_error = max_error.max((rec - a).iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    Ok(GlauberReport { max_error, f1_condition, f2_condition, grid_points: points * points, test_operators: tests.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oscore::{build_operator, make_state, parity, OperatorKind, OperatorSpec, StateKind, StateSpec};
    use approx::assert_abs_diff_eq;

    #[test]
    fn kernel_values() {
        assert_abs_diff_eq!((displaced_parity_kernel(0, 0, C64::new(0.0, 0.0)) - 4.0).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((displaced_parity_kernel(1, 0, C64::new(0.0, 0.0)) + 4.0).norm(), 0.0, epsilon = 1e-15);
        // (0, 1, 0.5): 4 (-1) e^{-0.5} * 1 * 1 * L_0^1 = -4 e^{-0.5}
        let v = displaced_parity_kernel(0, 1, C64::new(0.5, 0.0));
        assert_abs_diff_eq!((v - C64::new(-4.0 * (-0.5f64).exp(), 0.0)).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn closed_form_matches_truncated_matrix_product() {
        let dim = 24;
        let par = parity(dim);
        for alpha in [C64::new(0.5, 0.0), C64::new(-0.3, 0.8), C64::new(0.0, -1.0), C64::from_polar(1.0, 2.2)] {
            let d = build_operator(&OperatorSpec::new(OperatorKind::Displacement { alpha }, dim)).unwrap();
            let w = (&(&d.adjoint() * &par) * &d).scale_real(4.0);
            for n in 0..=6 {
                for dd in 0..=(6 - n) {
                    let matrix = w.get(n + dd, n);
                    let closed = displaced_parity_kernel(n, dd, alpha);
                    assert!((matrix - closed).norm() <= 1e-8, "{n} {dd} {alpha}: {matrix} vs {closed}");
                }
            }
        }
    }

    #[test]
    fn kernel_matrix_matches_closed_form() {
        let beta = C64::new(0.3, -0.4);
        let w = displaced_parity_kernel_matrix(beta, 8);
        for n in 0..5 {
            for d in 0..3 {
                assert_abs_diff_eq!((w[(n + d, n)] - displaced_parity_kernel(n, d, beta)).norm(), 0.0, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn exact_average_recovers_coherent_elements() {
        let beta = C64::new(0.5, 0.0);
        let dim = 8;
        let rho = make_state(&StateSpec::new(StateKind::Coherent { beta }, dim)).unwrap();
        let cfg = EstimatorConfig::with_dim(dim);
        for (k, n) in [(0, 0), (1, 0), (0, 1), (2, 3)] {
            let v = parity_exact_average(&Operator::matrix_unit(dim, n, k), &rho, &cfg).unwrap();
            assert!((v - rho.get(k, n)).norm() < 1e-3, "{k} {n}: {v} vs {}", rho.get(k, n));
        }
        let one = parity_exact_average(&Operator::identity(dim), &rho, &cfg).unwrap();
        assert!((one - C64::new(1.0, 0.0)).norm() < 1e-3);
    }

    #[test]
    fn glauber_identity_on_grid() {
        let cfg = EstimatorConfig::with_dim(6);
        let id = Operator::identity(6);
        let r = generalized_glauber_check(&id, &id, &cfg, 41, 4.0).unwrap();
        assert!(r.max_error <= 1e-4, "{}", r.max_error);
        let p = parity(6);
        let r = generalized_glauber_check(&id, &p, &cfg, 41, 4.0).unwrap();
        assert!(r.max_error <= 1e-4, "{}", r.max_error);
        let s = crate::estimators::squeeze_block(C64::new(0.1, 0.0), 6).unwrap();
        let r = generalized_glauber_check(&s, &s, &cfg, 41, 4.0).unwrap();
        assert!(r.max_error <= 1e-4, "{}", r.max_error);
        assert!(r.f1_condition > 1.0);
        assert!(generalized_glauber_check(&id, &Operator::zeros(6), &cfg, 41, 4.0).is_err());
    }

    #[test]
    fn parity_glauber_kernel_is_the_displaced_parity_kernel() {
        // Tr[A D(alpha) Pi] at alpha = -2 beta equals Tr[A W(beta)] / 4
        let dim = 6;
        let a = Operator::from_fn(dim, |m, n| C64::new(m as f64 - 0.5 * n as f64, 0.3 * (m * n) as f64));
        let p = parity(dim);
        for beta in [C64::new(0.2, 0.1), C64::new(-0.7, 0.4)] {
            let d = Operator::new(displacement_block(-beta * 2.0, dim)).unwrap();
            let glauber = (&(&a * &d) * &p).trace();
            let kernel = parity_operator_kernel(&a, beta) / 4.0;
            assert!((glauber - kernel).norm() < 1e-12);
        }
    }
}
