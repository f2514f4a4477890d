//! Homodyne tomography through pattern functions.
//!
//! With `q_phi = (a e^{-i phi} + a^dag e^{i phi})/2` the kernel is
//! `R[A](q, phi) = Tr[A K(q - q_phi)]`, `K(z) = int dk |k|/4 e^{ikz}`. In the
//! Fock basis `<n|K|m> = e^{i(n-m)phi} f_nm(q)` with
//!
//! `f_nm(q) = int dk |k|/4 e^{-eps k^2} e^{ikq} <n|D(-ik/2)|m>`.
//!
//! The displacement elements are the untruncated Laguerre expressions, which
//! decay like `exp(-k^2/8)`, so the integral converges without relying on the
//! regularizer. `E_nm(-k) = (-1)^(n-m) E_nm(k)` folds it onto `k > 0`.

use super::{check_dim, EstimatorConfig};
use crate::error::{Error, Result};
use crate::oscore::{build_operator, DensityMatrix, Operator, OperatorKind, OperatorSpec};
use crate::par::map_indices;
use crate::recon::{estimate, EstimationResult};
use crate::sampler::{require_quorum, MeasurementRecord, QuorumId};
use crate::special::{composite_gauss_legendre, displacement_element, hermite_cubic, quadrature_wavefunctions};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

/// `k` nodes and weights `w_j k_j / 4 e^{-eps k_j^2}` on `[0, k_max]`.
#[derive(Clone, Debug)]
struct KRule {
    k: Vec<f64>,
    w: Vec<f64>,
}

impl KRule {
    fn new(cfg: &EstimatorConfig) -> Self {
        let (k, w) = composite_gauss_legendre(0.0, cfg.k_max, cfg.k_panels, cfg.k_order);
        let w = k.iter().zip(&w).map(|(k, w)| w * k / 4.0 * (-cfg.reg_eps * k * k).exp()).collect();
        Self { k, w }
    }

    /// `E_nm(k_j) = <n|D(-i k_j / 2)|m>` times the rule weight.
    fn weighted_elements(&self, n: usize, m: usize) -> Vec<C64> {
        self.k
            .iter()
            .zip(&self.w)
            .map(|(&k, &w)| displacement_element(n, m, C64::new(0.0, -0.5 * k)) * w)
            .collect()
    }
}

#[derive(Clone, Debug)]
struct PatternFn {
    /// `(-1)^delta`
    sign: f64,
    h: Vec<C64>,
}

/// A family of functions `g(q) = sum_j h_j [e^{i k_j q} + s e^{-i k_j q}]`,
/// tabulated with derivatives and interpolated by cubic Hermite cells.
#[derive(Clone, Debug)]
pub struct PatternTable {
    rule: KRule,
    funcs: Vec<PatternFn>,
    q0: f64,
    step: f64,
    points: usize,
    values: Vec<C64>,
    derivs: Vec<C64>,
}

impl PatternTable {
    fn new(rule: KRule, funcs: Vec<PatternFn>, half_width: f64, step: f64) -> Self {
        let cells = (2.0 * half_width / step).ceil() as usize;
        let points = cells + 1;
        let q0 = -half_width;
        let nf = funcs.len();
        let mut table = Self { rule, funcs, q0, step, points, values: Vec::new(), derivs: Vec::new() };
        let rows = map_indices(points, |i| {
            let mut v = vec![C64::new(0.0, 0.0); nf];
            let mut d = vec![C64::new(0.0, 0.0); nf];
            table.direct(q0 + i as f64 * step, &mut v, Some(&mut d));
            (v, d)
        });
        table.values.reserve(points * nf);
        table.derivs.reserve(points * nf);
        for (v, d) in rows {
            table.values.extend(v);
            table.derivs.extend(d);
        }
        table
    }

    pub fn len(&self) -> usize {
        self.funcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.funcs.is_empty()
    }

    /// Evaluates all functions at `q` by the `k` quadrature.
    fn direct(&self, q: f64, out: &mut [C64], mut deriv: Option<&mut [C64]>) {
        out.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
        if let Some(d) = deriv.as_deref_mut() {
            d.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
        }
        for (j, &k) in self.rule.k.iter().enumerate() {
            let (s, c) = (k * q).sin_cos();
            for (f, o) in self.funcs.iter().zip(out.iter_mut()) {
                // e^{ikq} + s e^{-ikq}
                let phase = C64::new(c * (1.0 + f.sign), s * (1.0 - f.sign));
                *o += f.h[j] * phase;
            }
            if let Some(d) = deriv.as_deref_mut() {
                for (f, o) in self.funcs.iter().zip(d.iter_mut()) {
                    // ik (e^{ikq} - s e^{-ikq})
                    let phase = C64::new(-s * k * (1.0 + f.sign), c * k * (1.0 - f.sign));
                    *o += f.h[j] * phase;
                }
            }
        }
    }

    /// All function values at `q`; interpolated inside the table, direct outside.
    pub fn eval_into(&self, q: f64, out: &mut [C64]) {
        let x = (q - self.q0) / self.step;
        if !(x >= 0.0 && x < (self.points - 1) as f64) {
            self.direct(q, out, None);
            return;
        }
        let i = x.floor() as usize;
        let t = x - i as f64;
        let nf = self.funcs.len();
        let (v0, v1) = (&self.values[i * nf..(i + 1) * nf], &self.values[(i + 1) * nf..(i + 2) * nf]);
        let (d0, d1) = (&self.derivs[i * nf..(i + 1) * nf], &self.derivs[(i + 1) * nf..(i + 2) * nf]);
        for j in 0..nf {
            out[j] = hermite_cubic(t, v0[j], v1[j], d0[j] * self.step, d1[j] * self.step);
        }
    }

    pub fn eval_direct(&self, q: f64, out: &mut [C64]) {
        self.direct(q, out, None)
    }
}

fn table_half_width(dim: usize) -> f64 {
    (dim as f64).sqrt() + 2.5
}

/// Pattern-function kernel of a fixed operator `A`:
/// `R[A](q, phi) = sum_delta e^{i delta phi} g_delta(q)` with
/// `g_delta` built from `H_delta(k) = sum_{n-m=delta} A_mn E_nm(k)`.
#[derive(Clone, Debug)]
pub struct HomodyneKernel {
    deltas: Vec<i64>,
    table: PatternTable,
}

impl HomodyneKernel {
    pub fn new(a: &Operator, cfg: &EstimatorConfig) -> Result<Self> {
        cfg.validate()?;
        check_dim(cfg.dim, a.dim())?;
        let d = cfg.dim as i64;
        let rule = KRule::new(cfg);
        let mut deltas = Vec::new();
        let mut funcs = Vec::new();
        for delta in -(d - 1)..d {
            let mut h = vec![C64::new(0.0, 0.0); rule.k.len()];
            let mut any = false;
            for m in 0..cfg.dim {
                let n = m as i64 + delta;
                if n < 0 || n >= d {
                    continue;
                }
                let amn = a.get(m, n as usize);
                if amn == C64::new(0.0, 0.0) {
                    continue;
                }
                any = true;
                for (hj, e) in h.iter_mut().zip(rule.weighted_elements(n as usize, m)) {
                    *hj += amn * e;
                }
            }
            if any {
                deltas.push(delta);
                funcs.push(PatternFn { sign: if delta % 2 == 0 { 1.0 } else { -1.0 }, h });
            }
        }
        let table = PatternTable::new(rule, funcs, table_half_width(cfg.dim), cfg.q_step);
        Ok(Self { deltas, table })
    }

    fn combine(&self, phi: f64, g: &[C64]) -> C64 {
        self.deltas.iter().zip(g).map(|(&d, gd)| C64::from_polar(1.0, d as f64 * phi) * gd).sum()
    }

    pub fn eval(&self, q: f64, phi: f64) -> C64 {
        let mut g = vec![C64::new(0.0, 0.0); self.deltas.len()];
        self.table.eval_into(q, &mut g);
        self.combine(phi, &g)
    }

    /// Evaluation bypassing the interpolation table.
    pub fn eval_direct(&self, q: f64, phi: f64) -> C64 {
        let mut g = vec![C64::new(0.0, 0.0); self.deltas.len()];
        self.table.eval_direct(q, &mut g);
        self.combine(phi, &g)
    }

    /// `(delta, g_delta(q))` pairs at `q`, direct evaluation.
    fn components(&self, q: f64) -> Vec<(i64, C64)> {
        let mut g = vec![C64::new(0.0, 0.0); self.deltas.len()];
        self.table.eval_direct(q, &mut g);
        self.deltas.iter().copied().zip(g).collect()
    }
}

/// Fock matrix of `K(q - q_phi)`, evaluated directly.
pub fn homodyne_kernel_matrix(q: f64, phi: f64, cfg: &EstimatorConfig) -> Result<Operator> {
    cfg.validate()?;
    let d = cfg.dim;
    let rule = KRule::new(cfg);
    let mut funcs = Vec::with_capacity(d * d);
    for n in 0..d {
        for m in 0..d {
            let delta = n as i64 - m as i64;
            funcs.push(PatternFn { sign: if delta % 2 == 0 { 1.0 } else { -1.0 }, h: rule.weighted_elements(n, m) });
        }
    }
    let table = PatternTable { rule, funcs, q0: 0.0, step: 1.0, points: 0, values: vec![], derivs: vec![] };
    let mut f = vec![C64::new(0.0, 0.0); d * d];
    table.eval_direct(q, &mut f);
    let k = DMatrix::from_fn(d, d, |n, m| C64::from_polar(1.0, (n as f64 - m as f64) * phi) * f[n * d + m]);
    Operator::new(k)
}

/// Tabulated `f_nm` for every Fock pair, for estimating whole matrices.
/// `f_nm = conj(f_mn)`, so only `n >= m` is stored.
pub(crate) struct FockPatterns {
    dim: usize,
    table: PatternTable,
}

impl FockPatterns {
    pub(crate) fn new(cfg: &EstimatorConfig) -> Result<Self> {
        cfg.validate()?;
        let d = cfg.dim;
        let rule = KRule::new(cfg);
        let mut funcs = Vec::with_capacity(d * (d + 1) / 2);
        for n in 0..d {
            for m in 0..=n {
                let delta = n - m;
                funcs.push(PatternFn { sign: if delta % 2 == 0 { 1.0 } else { -1.0 }, h: rule.weighted_elements(n, m) });
            }
        }
        let table = PatternTable::new(rule, funcs, table_half_width(d), cfg.q_step);
        Ok(Self { dim: d, table })
    }

    /// `out[k * dim + n] = <k|K(q - q_phi)|n>`; `buf` holds `dim (dim + 1) / 2` values.
    pub(crate) fn matrix_into(&self, q: f64, phi: f64, buf: &mut [C64], out: &mut [C64]) {
        let d = self.dim;
        self.table.eval_into(q, buf);
        let mut idx = 0;
        for n in 0..d {
            for m in 0..=n {
                let v = C64::from_polar(1.0, (n - m) as f64 * phi) * buf[idx];
                out[n * d + m] = v;
                out[m * d + n] = v.conj();
                idx += 1;
            }
        }
    }
}

/// Sample mean of `R[A](q_i, phi_i)` over homodyne records `(phi, q)`.
pub fn homodyne_estimate(a: &Operator, records: &[MeasurementRecord], cfg: &EstimatorConfig) -> Result<EstimationResult> {
    require_quorum(records, QuorumId::Homodyne)?;
    if records.is_empty() {
        return Err(Error::NotEnoughSamples { needed: 2, got: 0 });
    }
    let kernel = HomodyneKernel::new(a, cfg)?;
    estimate(records, |r| kernel.eval(r.outcome, r.settings[0]))
}

/// The estimator averaged against the exact quadrature distribution:
/// `<A> = sum_delta int dq G_delta(q) g_delta(q)` with
/// `p(q; phi) = sum_k e^{-ik phi} G_k(q)`, `G_k = sum_{n-m=k} rho_nm h_n h_m`.
pub fn homodyne_exact_average(a: &Operator, rho: &DensityMatrix, cfg: &EstimatorConfig) -> Result<C64> {
    check_dim(cfg.dim, rho.dim())?;
    let kernel = HomodyneKernel::new(a, cfg)?;
    let d = cfg.dim;
    let half = (d as f64).sqrt() + 7.0;
    let panels = (2.0 * half / 0.25).ceil() as usize;
    let (qs, ws) = composite_gauss_legendre(-half, half, panels, 12);
    let terms = map_indices(qs.len(), |i| {
        let h = quadrature_wavefunctions(qs[i], d);
        let mut acc = C64::new(0.0, 0.0);
        for (delta, g) in kernel.components(qs[i]) {
            let mut gk = C64::new(0.0, 0.0);
            for m in 0..d {
                let n = m as i64 + delta;
                if n >= 0 && (n as usize) < d {
                    gk += rho.get(n as usize, m) * h[n as usize] * h[m];
                }
            }
            acc += gk * g;
        }
        acc * ws[i]
    });
    Ok(terms.into_iter().sum())
}

/// `zeta` with `mu = cosh|zeta|`, `nu = sinh|zeta| e^{2i arg zeta}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SqueezeParams {
    pub zeta: C64,
    pub mu: f64,
    pub nu: C64,
}

impl SqueezeParams {
    pub fn new(zeta: C64) -> Self {
        let r = zeta.norm();
        let nu = if r == 0.0 { C64::new(0.0, 0.0) } else { C64::from_polar(r.sinh(), 2.0 * zeta.arg()) };
        Self { zeta, mu: r.cosh(), nu }
    }

    pub fn is_identity(&self) -> bool {
        self.zeta == C64::new(0.0, 0.0)
    }
}

/// Extra Fock levels needed to hold `S A S^dag` for `A` supported on `dim`.
pub fn squeezed_padding(zeta: C64) -> usize {
    if zeta == C64::new(0.0, 0.0) {
        0
    } else {
        8 + (24.0 * zeta.norm()).ceil() as usize
    }
}

/// `dim x dim` block of the squeeze operator, from a larger truncation.
pub(crate) fn squeeze_block(zeta: C64, dim: usize) -> Result<Operator> {
    let big = build_operator(&OperatorSpec::new(OperatorKind::Squeeze { zeta }, dim + 32))?;
    Operator::new(big.matrix().view((0, 0), (dim, dim)).into_owned())
}

pub(crate) fn embed(a: &Operator, dim: usize) -> Operator {
    Operator::from_fn(dim, |i, j| if i < a.dim() && j < a.dim() { a.get(i, j) } else { C64::new(0.0, 0.0) })
}

/// `S A S^dag` in the padded space, with the padded configuration.
fn squeezed_observable(a: &Operator, sq: &SqueezeParams, cfg: &EstimatorConfig) -> Result<(Operator, EstimatorConfig)> {
    check_dim(cfg.dim, a.dim())?;
    let big = cfg.dim + squeezed_padding(sq.zeta);
    let s = squeeze_block(sq.zeta, big)?;
    let a_big = embed(a, big);
    let conj = &(&s * &a_big) * &s.adjoint();
    Ok((conj, EstimatorConfig { dim: big, ..cfg.clone() }))
}

/// Estimator for records of the squeezed quadrature `S^dag q_phi S`.
///
/// Measuring `S^dag q_phi S` on `rho` is measuring `q_phi` on `S rho S^dag`,
/// so the kernel is the homodyne kernel of `S A S^dag`.
pub fn squeezed_homodyne_estimate(
    a: &Operator,
    records: &[MeasurementRecord],
    sq: &SqueezeParams,
    cfg: &EstimatorConfig,
) -> Result<EstimationResult> {
    require_quorum(records, QuorumId::SqueezedHomodyne)?;
    if records.is_empty() {
        return Err(Error::NotEnoughSamples { needed: 2, got: 0 });
    }
    if let Some(r) = records.iter().find(|r| C64::new(r.settings[1], r.settings[2]) != sq.zeta) {
        return Err(Error::InvalidSpec(format!(
            "record squeezing {}+{}i differs from the estimator's {}",
            r.settings[1], r.settings[2], sq.zeta
        )));
    }
    let kernel = squeezed_homodyne_kernel(a, sq, cfg)?;
    estimate(records, |r| kernel.eval(r.outcome, r.settings[0]))
}

/// Kernel of squeezed-quadrature records: the homodyne kernel of `S A S^dag`.
pub fn squeezed_homodyne_kernel(a: &Operator, sq: &SqueezeParams, cfg: &EstimatorConfig) -> Result<HomodyneKernel> {
    let (conj, big) = squeezed_observable(a, sq, cfg)?;
    HomodyneKernel::new(&conj, &big)
}

pub fn squeezed_homodyne_exact_average(
    a: &Operator,
    rho: &DensityMatrix,
    sq: &SqueezeParams,
    cfg: &EstimatorConfig,
) -> Result<C64> {
    let (conj, big) = squeezed_observable(a, sq, cfg)?;
    let s = squeeze_block(sq.zeta, big.dim)?;
    let rho_big = DensityMatrix::from_unnormalized(embed(rho.op(), big.dim))?;
    let squeezed = rho_big.conjugate_by(&s)?;
    homodyne_exact_average(&conj, &squeezed, &big)
}
