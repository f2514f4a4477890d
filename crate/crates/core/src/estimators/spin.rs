//! Spin tomography from Stern-Gerlach records along random directions, and
//! the spin-1/2 Pauli estimator.
//!
//! The kernel is `R[A](m, n) = (2s+1)/pi int_0^{2pi} dpsi sin^2(psi/2) Tr[A e^{-i psi (S.n - m)}]`,
//! which in the eigenbasis of `S.n` collapses to
//! `(2s+1) [A'_mm - (A'_{m+1,m+1} + A'_{m-1,m-1}) / 2]`.

use super::check_dim;
use crate::error::{Error, Result};
use crate::oscore::{
    build_operator, check_unit, eigh_sorted, hermitian_evolution, spin_along, Axis, DensityMatrix, Operator,
    OperatorKind, OperatorSpec, TwiceSpin,
};
use crate::recon::{estimate, Accumulator, EstimationResult};
use crate::sampler::{require_quorum, MeasurementRecord, QuorumId};
use crate::special::gauss_legendre;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// Diagonal of `V^dag A V` for the eigenvectors of `S.n` ordered by
/// ascending eigenvalue, so entry `j` belongs to `m = j - s`.
fn rotated_diagonal(a: &DMatrix<C64>, vectors: &DMatrix<C64>) -> Vec<C64> {
    let av = a * vectors;
    (0..vectors.ncols()).map(|j| vectors.column(j).dotc(&av.column(j))).collect()
}

fn kernel_from_diagonal(diag: &[C64], j: usize) -> C64 {
    let dim = diag.len();
    let mut r = diag[j];
    if j + 1 < dim {
        r -= diag[j + 1] * 0.5;
    }
    if j > 0 {
        r -= diag[j - 1] * 0.5;
    }
    r * dim as f64
}

fn m_index(twice_s: TwiceSpin, m: f64) -> Result<usize> {
    // ascending order: index j holds m = j - s
    twice_s
        .index_of_m(-m)
        .ok_or_else(|| Error::Format(format!("{m} is not a magnetic quantum number of spin {}", twice_s.spin())))
}

/// `R[A](m, n)` for a spin-`s` operator `A`.
pub fn spin_kernel(a: &Operator, m: f64, n: [f64; 3]) -> Result<C64> {
    check_unit(n)?;
    let twice_s = TwiceSpin((a.dim() - 1) as u32);
    let j = m_index(twice_s, m)?;
    let (_, vectors) = eigh_sorted(spin_along(twice_s, n).matrix());
    Ok(kernel_from_diagonal(&rotated_diagonal(a.matrix(), &vectors), j))
}

/// The operator `K(m, n)` with `R[A](m, n) = Tr[A K(m, n)]`:
/// `(2s+1) [P_m - (P_{m+1} + P_{m-1}) / 2]` with `P_m` the eigenprojectors of `S.n`.
pub fn spin_kernel_matrix(twice_s: TwiceSpin, m: f64, n: [f64; 3]) -> Result<Operator> {
    check_unit(n)?;
    let j = m_index(twice_s, m)?;
    let dim = twice_s.dim();
    let (_, v) = eigh_sorted(spin_along(twice_s, n).matrix());
    let proj = |k: usize| {
        let col = v.column(k);
        &col * col.adjoint()
    };
    let mut k = proj(j);
    if j + 1 < dim {
        k -= proj(j + 1) * C64::new(0.5, 0.0);
    }
    if j > 0 {
        k -= proj(j - 1) * C64::new(0.5, 0.0);
    }
    Operator::new(k * C64::new(dim as f64, 0.0))
}

/// The defining `psi` integral evaluated with a `points`-node trapezoid rule
/// and explicit matrix exponentials. Slow; for cross-checks.
pub fn spin_kernel_quadrature(a: &Operator, m: f64, n: [f64; 3], points: usize) -> Result<C64> {
    check_unit(n)?;
    let twice_s = TwiceSpin((a.dim() - 1) as u32);
    m_index(twice_s, m)?;
    let sn = spin_along(twice_s, n);
    let h = 2.0 * PI / points as f64;
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..points {
        let psi = k as f64 * h;
        let u = hermitian_evolution(&sn, -psi)?;
        let tr = (a * &u).trace() * C64::from_polar(1.0, psi * m);
        acc += tr * (psi / 2.0).sin().powi(2);
    }
    Ok(acc * (h * a.dim() as f64 / PI))
}

/// Product rule on the unit sphere normalized to total weight 1:
/// Gauss-Legendre in `cos theta` times a uniform grid in `phi`.
#[derive(Clone, Debug)]
pub struct SphereRule {
    pub directions: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    pub fn new(polar_order: usize, azimuths: usize) -> Self {
        let (z, wz) = gauss_legendre(polar_order);
        let mut directions = Vec::with_capacity(polar_order * azimuths);
        let mut weights = Vec::with_capacity(polar_order * azimuths);
        for (zi, wi) in z.iter().zip(&wz) {
            let rho = (1.0 - zi * zi).max(0.0).sqrt();
            for k in 0..azimuths {
                let phi = 2.0 * PI * k as f64 / azimuths as f64;
                directions.push([rho * phi.cos(), rho * phi.sin(), *zi]);
                weights.push(wi / 2.0 / azimuths as f64);
            }
        }
        Self { directions, weights }
    }

    /// Smallest rule that integrates the spin-`s` resolution exactly:
    /// the integrand is a polynomial of degree `4s` in the direction.
    pub fn for_spin(twice_s: TwiceSpin, polar_order: usize) -> Self {
        let order = polar_order.max(twice_s.0 as usize + 1);
        Self::new(order, 2 * twice_s.0 as usize + 1)
    }
}

/// `int dn / 4pi sum_m <m_n|rho|m_n> R[A](m, n)` on a sphere rule; equal to
/// `Tr[A rho]` when the rule is exact.
pub fn spin_quadrature_average(a: &Operator, rho: &DensityMatrix, rule: &SphereRule) -> Result<C64> {
    check_dim(a.dim(), rho.dim())?;
    let twice_s = TwiceSpin((a.dim() - 1) as u32);
    let mut total = C64::new(0.0, 0.0);
    for (n, w) in rule.directions.iter().zip(&rule.weights) {
        let (_, v) = eigh_sorted(spin_along(twice_s, *n).matrix());
        let da = rotated_diagonal(a.matrix(), &v);
        let dr = rotated_diagonal(rho.op().matrix(), &v);
        for j in 0..a.dim() {
            total += kernel_from_diagonal(&da, j) * dr[j].re * *w;
        }
    }
    Ok(total)
}

/// Mean of `R[A](m, n)` over spin records.
pub fn spin_estimate(a: &Operator, records: &[MeasurementRecord]) -> Result<EstimationResult> {
    require_quorum(records, QuorumId::Spin)?;
    if a.dim() < 2 {
        return Err(Error::InvalidSpec("spin operators need dimension >= 2".into()));
    }
    let twice_s = TwiceSpin((a.dim() - 1) as u32);
    for r in records {
        check_unit(r.settings)?;
        m_index(twice_s, r.outcome)?;
    }
    estimate(records, |r| {
        let (_, v) = eigh_sorted(spin_along(twice_s, r.settings).matrix());
        let j = twice_s.index_of_m(-r.outcome).expect("validated above");
        kernel_from_diagonal(&rotated_diagonal(a.matrix(), &v), j)
    })
}

/// Spin-1/2 estimate from per-axis records with outcomes `m = +-1/2`:
/// `<A> = Tr[A]/2 + sum_alpha Tr[A sigma_alpha] mean_alpha(m)`, with the
/// standard error combined over the three independent axes.
pub fn pauli_estimate(a: &Operator, records: &[MeasurementRecord]) -> Result<EstimationResult> {
    require_quorum(records, QuorumId::Pauli)?;
    check_dim(2, a.dim())?;
    let mut accs = [Accumulator::new(); 3];
    for r in records {
        let axis = Axis::from_vector(r.settings)
            .ok_or_else(|| Error::Format(format!("pauli record axis {:?} is not x, y or z", r.settings)))?;
        if (r.outcome.abs() - 0.5).abs() > 1e-12 {
            return Err(Error::Format(format!("pauli outcome {} is not +-1/2", r.outcome)));
        }
        accs[axis as usize].push(C64::new(r.outcome, 0.0));
    }
    let mut mean = a.trace() * 0.5;
    let mut var = 0.0;
    for (axis, acc) in Axis::ALL.into_iter().zip(&accs) {
        if acc.count() < 2 {
            return Err(Error::NotEnoughSamples { needed: 2, got: acc.count() as usize });
        }
        let sigma = build_operator(&OperatorSpec::new(OperatorKind::Pauli { axis }, 2))?;
        let c = (a * &sigma).trace();
        let r = acc.result()?;
        mean += c * r.mean.re;
        var += c.norm_sqr() * acc.variance() / acc.count() as f64;
    }
    Ok(EstimationResult { mean, std_error: var.sqrt(), n_samples: records.len() as u64 })
}
