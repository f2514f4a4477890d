//! Reconstruction from the nonunitary shift operators
//! `R_q(psi) = e_+^q e^{i N psi}` for `q >= 0` and `e_-^{|q|} e^{i N psi}` for `q < 0`,
//! where `e_+ = sum_n |n+1><n|` and `e_- = e_+^dag`.
//!
//! `Tr[rho R_q(psi)] = sum_n e^{i n psi} <n|rho|n+q>` for `q >= 0`, and the
//! family `{R_n(phi_j)}` on a uniform phase grid with weights `1/G` is a
//! self-dual frame of the truncated space.

use super::{check_dim, EstimatorConfig};
use crate::error::{Error, Result};
use crate::frames::{check_biorthogonality, Family, FrameElement, SettingLabel, SpanningSet};
use crate::oscore::{DensityMatrix, Operator};
use num_complex::Complex64 as C64;
use serde::Serialize;
use std::f64::consts::PI;

fn check_shift(dim: usize, q: i64) -> Result<()> {
    if q.unsigned_abs() as usize >= dim {
        return Err(Error::InvalidSpec(format!("shift {q} needs |q| < dim = {dim}")));
    }
    Ok(())
}

/// `R_q(psi)` as a truncated matrix.
pub fn nonunitary_operator(dim: usize, q: i64, psi: f64) -> Result<Operator> {
    check_shift(dim, q)?;
    let p = q.unsigned_abs() as usize;
    Ok(Operator::from_fn(dim, |r, c| {
        if q >= 0 && r == c + p {
            // e_+^q |c> = |c + q>
            C64::from_polar(1.0, c as f64 * psi)
        } else if q < 0 && c == r + p {
            // e_-^p |c> = |c - p>
            C64::from_polar(1.0, c as f64 * psi)
        } else {
            C64::new(0.0, 0.0)
        }
    }))
}

fn direct_trace(rho: &DensityMatrix, q: i64, psi: f64) -> Result<C64> {
    Ok((rho.op() * &nonunitary_operator(rho.dim(), q, psi)?).trace())
}

/// `Tr[rho R_q(psi)]` through the phase representation
/// `(1/G) sum_j e^{-i q phi_j} <e^{i(phi_j - psi)}|rho|e^{i phi_j}>`,
/// with `|e^{i phi}> = sum_n e^{i n phi} |n>`. Exact for `G >= 4 dim`.
pub fn nonunitary_phase_trace_grid(rho: &DensityMatrix, q: i64, psi: f64, points: usize) -> Result<C64> {
    let dim = rho.dim();
    check_shift(dim, q)?;
    if points < 4 * dim {
        return Err(Error::InvalidSpec(format!("phase grid of {points} points is below 4 dim = {}", 4 * dim)));
    }
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..points {
        let phi = 2.0 * PI * j as f64 / points as f64;
        let mut amp = C64::new(0.0, 0.0);
        for m in 0..dim {
            for l in 0..dim {
                amp += C64::from_polar(1.0, -(m as f64) * (phi - psi) + l as f64 * phi) * rho.get(m, l);
            }
        }
        acc += amp * C64::from_polar(1.0, -(q as f64) * phi);
    }
    Ok(acc / points as f64)
}

/// Tolerance within which the matrix trace and the phase route must agree.
const ROUTE_TOL: f64 = 1e-8;

/// `Tr[rho R_q(psi)]` by direct matrix trace, cross-checked against the phase
/// representation on a `4 dim` grid.
pub fn nonunitary_phase_trace(rho: &DensityMatrix, q: i64, psi: f64) -> Result<C64> {
    let direct = direct_trace(rho, q, psi)?;
    let phase = nonunitary_phase_trace_grid(rho, q, psi, 4 * rho.dim())?;
    if (direct - phase).norm() > ROUTE_TOL {
        return Err(Error::Precondition(format!(
            "matrix trace {direct} and phase representation {phase} disagree"
        )));
    }
    Ok(direct)
}

fn shift_cutoff(cfg: &EstimatorConfig) -> usize {
    cfg.shift_cutoff.unwrap_or(cfg.dim - 1).min(cfg.dim - 1)
}

/// `sum_{|n| <= cutoff} (1/G) sum_j Tr[A R_n^dag(phi_j)] Tr[rho R_n(phi_j)]`.
pub fn nonunitary_reconstruct(a: &Operator, rho: &DensityMatrix, cfg: &EstimatorConfig) -> Result<C64> {
    cfg.validate()?;
    check_dim(cfg.dim, a.dim())?;
    check_dim(cfg.dim, rho.dim())?;
    let cutoff = shift_cutoff(cfg);
    let dim = cfg.dim;
    for r in 0..dim {
        for c in 0..dim {
            if r.abs_diff(c) > cutoff && a.get(r, c) != C64::new(0.0, 0.0) {
                return Err(Error::Precondition(format!(
                    "A has element ({r}, {c}) outside the shift band |n| <= {cutoff}"
                )));
            }
        }
    }
    let g = cfg.phi_grid();
    if g < 4 * dim {
        return Err(Error::InvalidSpec(format!("phase grid of {g} points is below 4 dim = {}", 4 * dim)));
    }
    let mut total = C64::new(0.0, 0.0);
    for n in -(cutoff as i64)..=(cutoff as i64) {
        for j in 0..g {
            let phi = 2.0 * PI * j as f64 / g as f64;
            let r = nonunitary_operator(dim, n, phi)?;
            let ta = (a * &r.adjoint()).trace();
            let tr = (rho.op() * &r).trace();
            total += ta * tr;
        }
    }
    Ok(total / g as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrthogonalityReport {
    /// Deviation of `sum_{n,j} (1/G) |R_n(phi_j)>><<R_n(phi_j)|` from the identity.
    pub frame_defect: f64,
    /// Deviation of `Tr[R_k^dag(phi_i) R_n(phi_j)]` from
    /// `delta_nk sum_p e^{i p (phi_j - phi_i)}`, the sum running over the
    /// levels `p` that `R_n` maps into the truncated space.
    pub trace_defect: f64,
    pub max_shift: usize,
    pub grid_points: usize,
}

/// Frame and trace orthogonality of the shift family in dimension `dim`,
/// the trace relation checked for `|n|, |k| <= max_shift`.
pub fn nonunitary_orthogonality(dim: usize, points: usize, max_shift: usize) -> Result<OrthogonalityReport> {
    if points < 4 * dim {
        return Err(Error::InvalidSpec(format!("phase grid of {points} points is below 4 dim = {}", 4 * dim)));
    }
    let phis: Vec<f64> = (0..points).map(|j| 2.0 * PI * j as f64 / points as f64).collect();
    let top = (dim - 1) as i64;
    let mut elements = Vec::new();
    for n in -top..=top {
        for &phi in &phis {
            elements.push(FrameElement {
                label: SettingLabel::new("nonunitary", vec![n as f64, phi]),
                weight: 1.0 / points as f64,
                operator: nonunitary_operator(dim, n, phi)?,
            });
        }
    }
    let frame = SpanningSet::new(Family::new(dim, elements)?);
    let frame_defect = check_biorthogonality(&frame, &frame.self_dual(), 0.0)?.max_violation;

    let shift = max_shift.min(dim - 1) as i64;
    let mut trace_defect: f64 = 0.0;
    for k in -shift..=shift {
        for n in -shift..=shift {
            for &pi in &phis {
                let rk = nonunitary_operator(dim, k, pi)?.adjoint();
                for &pj in &phis {
                    let got = (&rk * &nonunitary_operator(dim, n, pj)?).trace();
                    let want = if k == n {
                        // R_n maps level c to c + n; c runs over the levels kept in range
                        let levels = if n >= 0 { 0..dim - n as usize } else { n.unsigned_abs() as usize..dim };
                        levels.map(|c| C64::from_polar(1.0, c as f64 * (pj - pi))).sum()
                    } else {
                        C64::new(0.0, 0.0)
                    };
                    trace_defect = trace_defect.max((got - want).norm());
                }
            }
        }
    }
    Ok(OrthogonalityReport { frame_defect, trace_defect, max_shift: shift as usize, grid_points: points })
}
