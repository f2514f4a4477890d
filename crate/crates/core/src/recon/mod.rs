//! Averaging of kernels over records into expectation values and whole
//! density matrices with per-element standard errors.

mod stats;

pub use stats::{estimate, Accumulator, EstimationResult, PARTITION};
pub(crate) use stats::accumulate_many;

use crate::error::{Error, Result};
use crate::estimators::{
    displaced_parity_kernel_matrix, nonunitary_reconstruct, pauli_estimate, spin_kernel_matrix, squeeze_block,
    squeezed_padding, EstimatorConfig, FockPatterns,
};
use crate::oscore::{eigh_sorted, hermitian_function, DensityMatrix, Operator, TwiceSpin};
use crate::sampler::{require_quorum, MeasurementRecord, QuorumId};
use crate::FORMAT_VERSION;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Estimator family used for a reconstruction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Homodyne,
    SqueezedHomodyne,
    Parity,
    Spin,
    Pauli,
    Kerr,
    Nonunitary,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Self::Homodyne,
        Self::SqueezedHomodyne,
        Self::Parity,
        Self::Spin,
        Self::Pauli,
        Self::Kerr,
        Self::Nonunitary,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Homodyne => "homodyne",
            Self::SqueezedHomodyne => "squeezed_homodyne",
            Self::Parity => "parity",
            Self::Spin => "spin",
            Self::Pauli => "pauli",
            Self::Kerr => "kerr",
            Self::Nonunitary => "nonunitary",
        }
    }

    /// The quorum whose records the method consumes; `None` for the
    /// nonunitary method, which is evaluated from a state.
    pub fn quorum(self) -> Option<QuorumId> {
        match self {
            Self::Homodyne => Some(QuorumId::Homodyne),
            Self::SqueezedHomodyne => Some(QuorumId::SqueezedHomodyne),
            Self::Parity => Some(QuorumId::Parity),
            Self::Spin => Some(QuorumId::Spin),
            Self::Pauli => Some(QuorumId::Pauli),
            Self::Kerr => Some(QuorumId::Kerr),
            Self::Nonunitary => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = if s == "squeezed" { "squeezed_homodyne" } else { s };
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown method {s:?}")))
    }
}

/// Estimate of `<k|rho|n>`. `mean` and `std_error` are `None` for elements the
/// method cannot estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElementEstimate {
    pub k: usize,
    pub n: usize,
    pub mean: Option<[f64; 2]>,
    pub std_error: Option<f64>,
    pub n_samples: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub fidelity: f64,
    pub trace_distance: f64,
    pub max_element_error: f64,
    /// Smallest eigenvalue of the estimate; negative values mean it is not a state.
    pub min_eigenvalue: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub method: String,
    /// Largest `|M_kn - conj(M_nk)|` before Hermitization.
    pub hermiticity_defect: f64,
    pub trace: [f64; 2],
    pub min_eigenvalue: Option<f64>,
    pub not_estimated: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_kernel_mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparison: Option<Comparison>,
    /// Row-major `[re, im]` entries of the nearest density matrix in Frobenius norm.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nearest_physical: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Hermitized element estimates of a density matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructedMatrix {
    pub version: u32,
    pub dim: usize,
    pub elements: Vec<ElementEstimate>,
    pub diagnostics: Diagnostics,
}

impl ReconstructedMatrix {
    fn from_raw(
        method: Method,
        dim: usize,
        raw: Vec<Option<EstimationResult>>,
        warnings: Vec<String>,
    ) -> Self {
        let mut defect: f64 = 0.0;
        let mut elements = Vec::with_capacity(dim * dim);
        for k in 0..dim {
            for n in 0..dim {
                let (a, b) = (&raw[k * dim + n], &raw[n * dim + k]);
                let e = match (a, b) {
                    (Some(a), Some(b)) => {
                        defect = defect.max((a.mean - b.mean.conj()).norm());
                        let mean = (a.mean + b.mean.conj()) * 0.5;
                        ElementEstimate {
                            k,
                            n,
                            mean: Some([mean.re, mean.im]),
                            std_error: Some(a.std_error.max(b.std_error)),
                            n_samples: a.n_samples,
                        }
                    }
                    _ => ElementEstimate { k, n, mean: None, std_error: None, n_samples: 0 },
                };
                elements.push(e);
            }
        }
        let not_estimated = elements.iter().filter(|e| e.mean.is_none()).count();
        let mut out = Self {
            version: FORMAT_VERSION,
            dim,
            elements,
            diagnostics: Diagnostics {
                method: method.as_str().to_string(),
                hermiticity_defect: defect,
                not_estimated,
                warnings,
                ..Diagnostics::default()
            },
        };
        let m = out.matrix();
        let tr = m.trace();
        out.diagnostics.trace = [tr.re, tr.im];
        if not_estimated == 0 {
            out.diagnostics.min_eigenvalue = Some(min_eigenvalue(&m));
        }
        out
    }

    /// Hermitized estimate; elements that were not estimated are zero.
    pub fn matrix(&self) -> Operator {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for e in &self.elements {
            if let Some([re, im]) = e.mean {
                m[(e.k, e.n)] = C64::new(re, im);
            }
        }
        Operator::new(m).expect("square by construction")
    }

    pub fn element(&self, k: usize, n: usize) -> &ElementEstimate {
        &self.elements[k * self.dim + n]
    }

    /// Adds fidelity and trace distance against a known state.
    pub fn compare_to(&mut self, reference: &DensityMatrix) -> Result<&Comparison> {
        let c = compare_states(&self.matrix(), reference)?;
        Ok(self.diagnostics.comparison.insert(c))
    }

    /// Adds the nearest density matrix to the diagnostics. The estimate itself is unchanged.
    pub fn add_nearest_physical(&mut self) -> Result<()> {
        if self.diagnostics.not_estimated > 0 {
            return Err(Error::Precondition("the estimate is partial; no physical projection".into()));
        }
        let p = nearest_physical(&self.matrix())?;
        self.diagnostics.nearest_physical = Some(p.op().matrix().transpose().iter().map(|z| [z.re, z.im]).collect());
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn min_eigenvalue(m: &Operator) -> f64 {
    let (values, _) = eigh_sorted(m.hermitian_part().matrix());
    values.first().copied().unwrap_or(0.0)
}

fn finish(accs: Vec<Accumulator>, keep: impl Fn(usize) -> bool) -> Result<Vec<Option<EstimationResult>>> {
    accs.into_iter()
        .enumerate()
        .map(|(i, a)| if keep(i) { a.result().map(Some) } else { Ok(None) })
        .collect()
}

fn squeezing_of(records: &[MeasurementRecord]) -> Result<C64> {
    let zeta = C64::new(records[0].settings[1], records[0].settings[2]);
    if records.iter().any(|r| C64::new(r.settings[1], r.settings[2]) != zeta) {
        return Err(Error::InvalidSpec("squeezed records mix different squeezing parameters".into()));
    }
    Ok(zeta)
}

/// Estimates every `<k|rho|n>`, `k, n < cfg.dim`, from records of the method's quorum.
pub fn reconstruct_matrix(
    records: &[MeasurementRecord],
    method: Method,
    cfg: &EstimatorConfig,
) -> Result<ReconstructedMatrix> {
    cfg.validate()?;
    let quorum = method.quorum().ok_or_else(|| {
        Error::InvalidSpec("the nonunitary method works from a state, not from records".into())
    })?;
    require_quorum(records, quorum)?;
    if records.len() < 2 {
        return Err(Error::NotEnoughSamples { needed: 2, got: records.len() });
    }
    let d = cfg.dim;
    let width = d * d;
    let mut warnings = Vec::new();
    let raw = match method {
        Method::Homodyne => {
            let pat = FockPatterns::new(cfg)?;
            let stored = d * (d + 1) / 2;
            let accs = accumulate_many(records, width, |r, out| {
                let mut buf = vec![C64::new(0.0, 0.0); stored];
                pat.matrix_into(r.outcome, r.settings[0], &mut buf, out);
            });
            finish(accs, |_| true)?
        }
        Method::SqueezedHomodyne => {
            let zeta = squeezing_of(records)?;
            let big = d + squeezed_padding(zeta);
            let big_cfg = EstimatorConfig { dim: big, ..cfg.clone() };
            let pat = FockPatterns::new(&big_cfg)?;
            let s = squeeze_block(zeta, big)?.into_matrix();
            let s_top = s.columns(0, d).into_owned();
            let s_top_adj = s_top.adjoint();
            let stored = big * (big + 1) / 2;
            let accs = accumulate_many(records, width, |r, out| {
                let mut buf = vec![C64::new(0.0, 0.0); stored];
                let mut k = vec![C64::new(0.0, 0.0); big * big];
                pat.matrix_into(r.outcome, r.settings[0], &mut buf, &mut k);
                // <k|S^dag K S|n> with K row-major
                let kk = DMatrix::from_row_slice(big, big, &k);
                let m = &s_top_adj * kk * &s_top;
                for a in 0..d {
                    for b in 0..d {
                        out[a * d + b] = m[(a, b)];
                    }
                }
            });
            finish(accs, |_| true)?
        }
        Method::Parity => {
            let radius = records.iter().map(|r| r.settings[2]).fold(f64::INFINITY, f64::min);
            if !(radius > 0.0) {
                return Err(Error::InvalidSpec("parity records need a positive disk radius in s3".into()));
            }
            let mass = (0..64)
                .map(|j| {
                    let beta = C64::from_polar(radius, 2.0 * std::f64::consts::PI * j as f64 / 64.0);
                    displaced_parity_kernel_matrix(beta, d).iter().map(|z| z.norm()).fold(0.0, f64::max)
                })
                .fold(0.0, f64::max);
            if mass > crate::estimators::BOUNDARY_MASS_TOL {
                let msg = format!("parity kernel reaches {mass:.2e} on the proposal boundary; estimates are biased");
                log::warn!("{msg}");
                warnings.push(msg);
            }
            let accs = accumulate_many(records, width, |r, out| {
                let beta = C64::new(r.settings[0], r.settings[1]);
                let scale = r.settings[2] * r.settings[2] * r.outcome;
                let w = displaced_parity_kernel_matrix(beta, d);
                for a in 0..d {
                    for b in 0..d {
                        out[a * d + b] = w[(a, b)] * scale;
                    }
                }
            });
            let mut raw = finish(accs, |_| true)?;
            for e in raw.iter_mut().flatten() {
                e.n_samples = records.len() as u64;
            }
            raw
        }
        Method::Spin => {
            if d < 2 {
                return Err(Error::InvalidSpec("spin reconstruction needs dim >= 2".into()));
            }
            let twice_s = TwiceSpin((d - 1) as u32);
            for r in records {
                crate::oscore::check_unit(r.settings)?;
                if twice_s.index_of_m(r.outcome).is_none() {
                    return Err(Error::Format(format!("{} is not a magnetic quantum number of spin {}", r.outcome, twice_s.spin())));
                }
            }
            let accs = accumulate_many(records, width, |r, out| {
                let k = spin_kernel_matrix(twice_s, r.outcome, r.settings).expect("validated above");
                for a in 0..d {
                    for b in 0..d {
                        out[a * d + b] = k.get(a, b);
                    }
                }
            });
            finish(accs, |_| true)?
        }
        Method::Pauli => {
            if d != 2 {
                return Err(Error::DimensionMismatch { expected: 2, found: d });
            }
            let mut raw = Vec::with_capacity(4);
            for k in 0..2 {
                for n in 0..2 {
                    raw.push(Some(pauli_estimate(&Operator::matrix_unit(2, n, k), records)?));
                }
            }
            raw
        }
        Method::Kerr => {
            let accs = accumulate_many(records, width, |r, out| {
                let (psi, phi) = (r.settings[0], r.outcome);
                for a in 0..d {
                    for b in 0..d {
                        let (af, bf) = (a as f64, b as f64);
                        // <a|B(psi, phi)|b>
                        out[a * d + b] = C64::from_polar(1.0, -psi * (af * af - bf * bf) + phi * (af - bf));
                    }
                }
            });
            finish(accs, |i| i / d != i % d)?
        }
        Method::Nonunitary => unreachable!("rejected above"),
    };
    Ok(ReconstructedMatrix::from_raw(method, d, raw, warnings))
}

/// Every element of `rho` through the nonunitary shift resolution, evaluated
/// exactly on the phase grid.
pub fn nonunitary_matrix(rho: &DensityMatrix, cfg: &EstimatorConfig) -> Result<ReconstructedMatrix> {
    let d = cfg.dim;
    let mut raw = Vec::with_capacity(d * d);
    for k in 0..d {
        for n in 0..d {
            let v = nonunitary_reconstruct(&Operator::matrix_unit(d, n, k), rho, cfg)?;
            raw.push(Some(EstimationResult::exact(v, 0)));
        }
    }
    Ok(ReconstructedMatrix::from_raw(Method::Nonunitary, d, raw, Vec::new()))
}

/// Fidelity `(Tr sqrt(sqrt(r) E sqrt(r)))^2`, trace distance `||E - r||_1 / 2`
/// and the largest element error of an estimate `E` against a state `r`.
///
/// A sampled estimate need not be a state, and the Uhlmann formula applied to
/// it directly can exceed 1. The fidelity is therefore taken against the
/// positive part of `E` normalized to unit trace, which keeps it in `[0, 1]`;
/// `min_eigenvalue` reports how far `E` is from being a state.
pub fn compare_states(estimate: &Operator, reference: &DensityMatrix) -> Result<Comparison> {
    if estimate.dim() != reference.dim() {
        return Err(Error::DimensionMismatch { expected: reference.dim(), found: estimate.dim() });
    }
    let e = estimate.hermitian_part();
    let positive = hermitian_function(&e, |x| C64::new(x.max(0.0), 0.0))?;
    let mass = positive.trace().re;
    let sqrt_r = hermitian_function(reference.op(), |x| C64::new(x.max(0.0).sqrt(), 0.0))?;
    let m = &(&sqrt_r * &positive) * &sqrt_r;
    let (lm, _) = eigh_sorted(m.hermitian_part().matrix());
    let root: f64 = if mass > 0.0 { lm.iter().map(|x| (x.max(0.0) / mass).sqrt()).sum() } else { 0.0 };
    let diff = &e - reference.op();
    let (ld, _) = eigh_sorted(diff.matrix());
    Ok(Comparison {
        fidelity: root * root,
        trace_distance: 0.5 * ld.iter().map(|x| x.abs()).sum::<f64>(),
        max_element_error: estimate.max_abs_diff(reference.op()),
        min_eigenvalue: min_eigenvalue(&e),
    })
}

/// Euclidean projection of `v` onto the probability simplex.
fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, x) in u.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (j + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// The density matrix closest to the Hermitian part of `m` in Frobenius norm.
pub fn nearest_physical(m: &Operator) -> Result<DensityMatrix> {
    let (values, vectors) = eigh_sorted(m.hermitian_part().matrix());
    let p = project_simplex(&values);
    let d = m.dim();
    let scaled = DMatrix::from_fn(d, d, |i, j| vectors[(i, j)] * p[j]);
    DensityMatrix::new(Operator::new(scaled * vectors.adjoint())?.hermitian_part())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(values: &[f64]) -> DensityMatrix {
        DensityMatrix::new(Operator::diagonal(&values.iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>())).unwrap()
    }

    #[test]
    fn comparison_examples() {
        let a = diag(&[1.0, 0.0]);
        let b = diag(&[0.0, 1.0]);
        let c = compare_states(a.op(), &a).unwrap();
        assert!((c.fidelity - 1.0).abs() < 1e-12 && c.trace_distance < 1e-12);
        let c = compare_states(a.op(), &b).unwrap();
        assert!(c.fidelity.abs() < 1e-12 && (c.trace_distance - 1.0).abs() < 1e-12);
        let c = compare_states(diag(&[0.75, 0.25]).op(), &diag(&[0.25, 0.75])).unwrap();
        assert!((c.trace_distance - 0.5).abs() < 1e-12);
        assert!(compare_states(&Operator::identity(3), &a).is_err());
    }

    #[test]
    fn fidelity_of_non_physical_estimates_stays_bounded() {
        let up = diag(&[1.0, 0.0]);
        let e = Operator::diagonal(&[C64::new(1.1, 0.0), C64::new(-0.1, 0.0)]);
        let c = compare_states(&e, &up).unwrap();
        assert!((c.fidelity - 1.0).abs() < 1e-12);
        assert!((c.min_eigenvalue + 0.1).abs() < 1e-12);
        let rho = crate::oscore::make_state(&crate::oscore::StateSpec::new(
            crate::oscore::StateKind::RandomMixed { seed: 4 },
            4,
        ))
        .unwrap();
        for k in 0..50u32 {
            let t = 0.05 * f64::from(k % 7);
            let noise = Operator::from_fn(4, |i, j| C64::new(((i * 7 + j * 3 + k as usize) % 5) as f64 - 2.0, (i as f64 - j as f64) * 0.3));
            let e = &rho.op().clone() + &noise.hermitian_part().scale_real(t);
            let f = compare_states(&e, &rho).unwrap().fidelity;
            assert!((0.0..=1.0 + 1e-9).contains(&f), "{f}");
        }
    }

    #[test]
    fn simplex_projection() {
        assert_eq!(project_simplex(&[0.5, 0.5]), vec![0.5, 0.5]);
        let p = project_simplex(&[1.2, -0.1, -0.1]);
        assert!((p[0] - 1.0).abs() < 1e-15 && p[1] == 0.0 && p[2] == 0.0);
        let p = nearest_physical(&Operator::diagonal(&[C64::new(0.7, 0.0), C64::new(0.4, 0.0), C64::new(-0.1, 0.0)])).unwrap();
        assert!((p.op().trace().re - 1.0).abs() < 1e-12);
        assert!(p.get(2, 2).re.abs() < 1e-12);
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!("wigner".parse::<Method>().is_err());
    }

    #[test]
    fn rejects_mismatched_records() {
        let recs = vec![MeasurementRecord::new(QuorumId::Spin, [0.0, 0.0, 1.0], 0.5); 4];
        let cfg = EstimatorConfig::with_dim(2);
        assert!(reconstruct_matrix(&recs, Method::Homodyne, &cfg).is_err());
        assert!(reconstruct_matrix(&[], Method::Spin, &cfg).is_err());
        assert!(reconstruct_matrix(&recs, Method::Spin, &cfg).is_ok());
    }
}
