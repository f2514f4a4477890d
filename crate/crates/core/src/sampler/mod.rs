//! Simulated measurement records from known states.
//!
//! Shots are split into fixed partitions of [`SHOT_PARTITION`]; partition `p`
//! draws from the ChaCha20 stream `p` of the seed, so the records depend only
//! on the seed and never on the number of worker threads.

mod quadrature;
mod records;

pub use records::{read_csv, require_quorum, write_csv, MeasurementRecord, QuorumId, CSV_HEADER};

use crate::error::{Error, Result};
use crate::estimators::{squeezed_padding, SqueezeParams};
use crate::oscore::{build_operator, check_unit, eigh_sorted, spin_along, Axis, DensityMatrix, OperatorKind, OperatorSpec, TwiceSpin};
use crate::par::map_indices;
use crate::special::displacement_block;
use num_complex::Complex64 as C64;
use quadrature::QuadratureSampler;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Shots per partition.
pub const SHOT_PARTITION: usize = 4096;

/// A reproducible random stream: ChaCha20 keyed by `seed`, stream number `substream`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RngStream {
    pub seed: u64,
    pub substream: u64,
}

impl RngStream {
    pub fn new(seed: u64, substream: u64) -> Self {
        Self { seed, substream }
    }

    pub fn rng(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(self.substream);
        rng
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub seed: u64,
    /// Largest population of the top Fock level tolerated for oscillator states.
    pub leakage_tol: f64,
    /// Radius of the uniform displacement disk; `None` means `2 + sqrt(n_max)`.
    pub disk_radius: Option<f64>,
    /// Fixed settings, replacing the random draw.
    pub fixed_phi: Option<f64>,
    pub fixed_beta: Option<C64>,
    pub fixed_direction: Option<[f64; 3]>,
    pub fixed_psi: Option<f64>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            leakage_tol: 1e-6,
            disk_radius: None,
            fixed_phi: None,
            fixed_beta: None,
            fixed_direction: None,
            fixed_psi: None,
        }
    }
}

impl SamplerConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }
}

fn check_shots(shots: usize) -> Result<()> {
    if shots == 0 {
        return Err(Error::InvalidSpec("shots must be at least 1".into()));
    }
    Ok(())
}

fn check_leakage(rho: &DensityMatrix, cfg: &SamplerConfig) -> Result<()> {
    let top = rho.population(rho.dim() - 1);
    if top > cfg.leakage_tol {
        return Err(Error::Truncation(format!(
            "population {top:.3e} of the top Fock level exceeds {:.1e}; increase dim",
            cfg.leakage_tol
        )));
    }
    Ok(())
}

/// Runs `draw` for every shot, partition by partition.
fn run_partitions<F>(shots: usize, seed: u64, draw: F) -> Vec<MeasurementRecord>
where
    F: Fn(usize, &mut ChaCha20Rng) -> MeasurementRecord + Sync + Send,
{
    let parts = shots.div_ceil(SHOT_PARTITION);
    let chunks = map_indices(parts, |p| {
        let mut rng = RngStream::new(seed, p as u64).rng();
        let end = ((p + 1) * SHOT_PARTITION).min(shots);
        (p * SHOT_PARTITION..end).map(|i| draw(i, &mut rng)).collect::<Vec<_>>()
    });
    chunks.into_iter().flatten().collect()
}

/// Homodyne records `(phi, q)` with `phi` uniform on `[0, pi)`.
pub fn sample_homodyne(rho: &DensityMatrix, shots: usize, cfg: &SamplerConfig) -> Result<Vec<MeasurementRecord>> {
    check_shots(shots)?;
    check_leakage(rho, cfg)?;
    let table = QuadratureSampler::new(rho)?;
    let fixed = cfg.fixed_phi;
    Ok(run_partitions(shots, cfg.seed, |_, rng| {
        let phi = fixed.unwrap_or_else(|| PI * rng.random::<f64>());
        let q = table.draw(phi, rng.random::<f64>());
        MeasurementRecord::new(QuorumId::Homodyne, [phi, 0.0, 0.0], q)
    }))
}

/// Records of the squeezed quadrature `S^dag(zeta) q_phi S(zeta)`, drawn as
/// homodyne outcomes of `S rho S^dag` in a padded space.
pub fn sample_squeezed_homodyne(
    rho: &DensityMatrix,
    zeta: C64,
    shots: usize,
    cfg: &SamplerConfig,
) -> Result<Vec<MeasurementRecord>> {
    check_shots(shots)?;
    check_leakage(rho, cfg)?;
    let sq = SqueezeParams::new(zeta);
    let big = rho.dim() + squeezed_padding(sq.zeta);
    let s = crate::estimators::squeeze_block(sq.zeta, big)?;
    let padded = DensityMatrix::from_unnormalized(crate::estimators::embed(rho.op(), big))?;
    let squeezed = padded.conjugate_by(&s)?;
    check_leakage(&squeezed, cfg)?;
    let table = QuadratureSampler::new(&squeezed)?;
    let fixed = cfg.fixed_phi;
    Ok(run_partitions(shots, cfg.seed, |_, rng| {
        let phi = fixed.unwrap_or_else(|| PI * rng.random::<f64>());
        let q = table.draw(phi, rng.random::<f64>());
        MeasurementRecord::new(QuorumId::SqueezedHomodyne, [phi, zeta.re, zeta.im], q)
    }))
}

/// Uniform direction on the unit sphere.
fn random_direction(rng: &mut ChaCha20Rng) -> [f64; 3] {
    let z = 2.0 * rng.random::<f64>() - 1.0;
    let phi = 2.0 * PI * rng.random::<f64>();
    let r = (1.0 - z * z).max(0.0).sqrt();
    [r * phi.cos(), r * phi.sin(), z]
}

/// Picks index `j` with probability `probs[j]` (assumed to sum to about 1).
fn pick(probs: &[f64], u: f64) -> usize {
    let total: f64 = probs.iter().sum();
    let mut acc = 0.0;
    for (j, p) in probs.iter().enumerate() {
        acc += p;
        if u * total < acc {
            return j;
        }
    }
    probs.len() - 1
}

/// Stern-Gerlach records `(n, m)` with `n` uniform on the sphere.
pub fn sample_spin(rho: &DensityMatrix, shots: usize, cfg: &SamplerConfig) -> Result<Vec<MeasurementRecord>> {
    check_shots(shots)?;
    if rho.dim() < 2 {
        return Err(Error::InvalidSpec("spin states need dimension >= 2".into()));
    }
    if let Some(n) = cfg.fixed_direction {
        check_unit(n)?;
    }
    let twice_s = TwiceSpin((rho.dim() - 1) as u32);
    let s = twice_s.spin();
    let fixed = cfg.fixed_direction;
    Ok(run_partitions(shots, cfg.seed, |_, rng| {
        let n = fixed.unwrap_or_else(|| random_direction(rng));
        let (_, v) = eigh_sorted(spin_along(twice_s, n).matrix());
        let av = rho.op().matrix() * &v;
        let probs: Vec<f64> = (0..v.ncols()).map(|j| v.column(j).dotc(&av.column(j)).re.max(0.0)).collect();
        let j = pick(&probs, rng.random::<f64>());
        MeasurementRecord::new(QuorumId::Spin, n, j as f64 - s)
    }))
}

/// Spin-1/2 records along `x`, `y` and `z`, `shots_per_axis` each, outcomes `+-1/2`.
pub fn sample_pauli(rho: &DensityMatrix, shots_per_axis: usize, cfg: &SamplerConfig) -> Result<Vec<MeasurementRecord>> {
    check_shots(shots_per_axis)?;
    if rho.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: rho.dim() });
    }
    let mut p_up = [0.0; 3];
    for axis in Axis::ALL {
        let sigma = build_operator(&OperatorSpec::new(OperatorKind::Pauli { axis }, 2))?;
        p_up[axis as usize] = 0.5 * (1.0 + rho.expectation(&sigma)?.re);
    }
    Ok(run_partitions(3 * shots_per_axis, cfg.seed, |i, rng| {
        let axis = Axis::ALL[i / shots_per_axis];
        let m = if rng.random::<f64>() < p_up[axis as usize] { 0.5 } else { -0.5 };
        MeasurementRecord::new(QuorumId::Pauli, axis.unit_vector(), m)
    }))
}

/// `Tr[rho Pi D(2 beta)]`, the parity of the displaced state, from exact elements.
fn displaced_parity(rho: &DensityMatrix, beta: C64) -> f64 {
    let d = displacement_block(beta * 2.0, rho.dim());
    let mut acc = C64::new(0.0, 0.0);
    for n in 0..rho.dim() {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        for m in 0..rho.dim() {
            acc += rho.get(m, n) * d[(n, m)] * sign;
        }
    }
    acc.re
}

/// Parity records `(beta, R, s)` with `beta` uniform on the disk `|beta| <= R`.
pub fn sample_displaced_parity(rho: &DensityMatrix, shots: usize, cfg: &SamplerConfig) -> Result<Vec<MeasurementRecord>> {
    check_shots(shots)?;
    check_leakage(rho, cfg)?;
    let radius = cfg.disk_radius.unwrap_or_else(|| 2.0 + ((rho.dim() - 1) as f64).sqrt());
    if !(radius > 0.0) {
        return Err(Error::InvalidSpec("disk radius must be positive".into()));
    }
    let fixed = cfg.fixed_beta;
    Ok(run_partitions(shots, cfg.seed, |_, rng| {
        let beta = fixed.unwrap_or_else(|| {
            let r = radius * rng.random::<f64>().sqrt();
            C64::from_polar(r, 2.0 * PI * rng.random::<f64>())
        });
        let p_plus = (0.5 * (1.0 + displaced_parity(rho, beta))).clamp(0.0, 1.0);
        let s = if rng.random::<f64>() < p_plus { 1.0 } else { -1.0 };
        MeasurementRecord::new(QuorumId::Parity, [beta.re, beta.im, radius], s)
    }))
}

/// Phase distribution of `sigma = V(psi) rho V^dag(psi)` with its closed-form CDF
/// `F(phi) = (1/2pi) [Tr(sigma) phi + sum_{m != l} sigma_ml (e^{i(l-m)phi} - 1) / (i(l-m))]`.
struct PhaseDensity {
    sigma: Vec<(i64, C64)>,
    trace: f64,
}

impl PhaseDensity {
    fn new(rho: &DensityMatrix, psi: f64) -> Self {
        let d = rho.dim();
        let mut sigma = Vec::with_capacity(d * d);
        let mut trace = 0.0;
        for m in 0..d {
            for l in 0..d {
                let s = rho.get(m, l) * C64::from_polar(1.0, psi * ((m * m) as f64 - (l * l) as f64));
                if m == l {
                    trace += s.re;
                } else {
                    sigma.push((l as i64 - m as i64, s));
                }
            }
        }
        Self { sigma, trace }
    }

    fn density(&self, phi: f64) -> f64 {
        let osc: C64 = self.sigma.iter().map(|(k, s)| s * C64::from_polar(1.0, *k as f64 * phi)).sum();
        (self.trace + osc.re) / (2.0 * PI)
    }

    fn cdf(&self, phi: f64) -> f64 {
        let osc: C64 = self
            .sigma
            .iter()
            .map(|(k, s)| {
                let kf = *k as f64;
                s * (C64::from_polar(1.0, kf * phi) - 1.0) / C64::new(0.0, kf)
            })
            .sum();
        (self.trace * phi + osc.re) / (2.0 * PI)
    }

    /// Inverse CDF: bracket on a uniform grid, then safeguarded Newton.
    fn invert(&self, u: f64, grid: usize) -> f64 {
        let target = u * self.cdf(2.0 * PI);
        let h = 2.0 * PI / grid as f64;
        let mut j = 0;
        while j + 1 < grid && self.cdf((j + 1) as f64 * h) <= target {
            j += 1;
        }
        let (mut a, mut b) = (j as f64 * h, (j + 1) as f64 * h);
        let mut x = 0.5 * (a + b);
        for _ in 0..100 {
            let f = self.cdf(x) - target;
            if f.abs() < 1e-15 {
                break;
            }
            if f < 0.0 {
                a = x;
            } else {
                b = x;
            }
            let p = self.density(x);
            let next = if p > 0.0 { x - f / p } else { f64::NAN };
            x = if next > a && next < b { next } else { 0.5 * (a + b) };
            if b - a < 1e-14 {
                break;
            }
        }
        x
    }
}

/// Kerr-phase records `(psi, phi)`: `psi` uniform on `[0, 2pi)`, `phi` from the
/// ideal phase distribution of `V(psi) rho V^dag(psi)`.
pub fn sample_kerr_phase(rho: &DensityMatrix, shots: usize, cfg: &SamplerConfig) -> Result<Vec<MeasurementRecord>> {
    check_shots(shots)?;
    let grid = 4 * rho.dim();
    let fixed = cfg.fixed_psi;
    Ok(run_partitions(shots, cfg.seed, |_, rng| {
        let psi = fixed.unwrap_or_else(|| 2.0 * PI * rng.random::<f64>());
        let phi = PhaseDensity::new(rho, psi).invert(rng.random::<f64>(), grid);
        MeasurementRecord::new(QuorumId::Kerr, [psi, 0.0, 0.0], phi)
    }))
}
