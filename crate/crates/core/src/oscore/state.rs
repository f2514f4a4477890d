use super::builders::{check_unit, spin_along, squeeze_coefficient, TwiceSpin};
use super::{eigh_sorted, Operator};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// A validated density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    op: Operator,
}

impl DensityMatrix {
    pub const HERMITIAN_TOL: f64 = 1e-12;
    pub const TRACE_TOL: f64 = 1e-12;
    pub const EIGEN_TOL: f64 = 1e-10;

    pub fn new(op: Operator) -> Result<Self> {
        let defect = op.hermiticity_defect();
        if defect > Self::HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation: defect });
        }
        let tr = op.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > Self::TRACE_TOL {
            return Err(Error::InvalidSpec(format!("density matrix has trace {tr}")));
        }
        let (values, _) = eigh_sorted(op.hermitian_part().matrix());
        if values[0] < -Self::EIGEN_TOL {
            return Err(Error::InvalidSpec(format!(
                "density matrix has negative eigenvalue {:.3e}",
                values[0]
            )));
        }
        Ok(Self { op: op.hermitian_part() })
    }

    /// Normalizes a positive semidefinite operator to unit trace.
    pub fn from_unnormalized(op: Operator) -> Result<Self> {
        let tr = op.trace().re;
        if tr <= 0.0 {
            return Err(Error::InvalidSpec("operator has non-positive trace".into()));
        }
        Self::new(op.hermitian_part().scale_real(1.0 / tr))
    }

    /// Projector onto a (not necessarily normalized) state vector.
    pub fn from_pure(amplitudes: &[C64]) -> Result<Self> {
        let norm2: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if norm2 <= 0.0 {
            return Err(Error::InvalidSpec("zero state vector".into()));
        }
        let dim = amplitudes.len();
        let op = Operator::from_fn(dim, |i, j| amplitudes[i] * amplitudes[j].conj() / norm2);
        Self::new(op)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self { op: Operator::identity(dim).scale_real(1.0 / dim as f64) }
    }

    pub fn op(&self) -> &Operator {
        &self.op
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.op.get(row, col)
    }

    /// `Tr[A rho]`
    pub fn expectation(&self, a: &Operator) -> Result<C64> {
        Ok(a.checked_mul(&self.op)?.trace())
    }

    pub fn purity(&self) -> f64 {
        self.op.matrix().iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn population(&self, n: usize) -> f64 {
        self.op.get(n, n).re
    }

    /// `U rho U^dag`; `U` is assumed unitary.
    pub fn conjugate_by(&self, u: &Operator) -> Result<Self> {
        let out = &u.checked_mul(&self.op)? * &u.adjoint();
        Self::from_unnormalized(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateKind {
    Fock { n: usize },
    Coherent { beta: C64 },
    SqueezedVacuum { zeta: C64 },
    Thermal { mean_n: f64 },
    RandomMixed { seed: u64 },
    SpinPure { twice_s: TwiceSpin, n: [f64; 3] },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateSpec {
    #[serde(flatten)]
    pub kind: StateKind,
    pub dim: usize,
}

impl StateSpec {
    pub fn new(kind: StateKind, dim: usize) -> Self {
        Self { kind, dim }
    }
}

/// Photon-number mean plus four standard deviations must fit below `n_max = dim - 1`.
fn check_fits(what: &str, mean: f64, std: f64, dim: usize) -> Result<()> {
    let n_max = (dim - 1) as f64;
    if mean + 4.0 * std > n_max {
        return Err(Error::Truncation(format!(
            "{what} needs mean + 4 std = {:.3} <= n_max = {n_max}; increase dim",
            mean + 4.0 * std
        )));
    }
    Ok(())
}

pub fn make_state(spec: &StateSpec) -> Result<DensityMatrix> {
    let dim = spec.dim;
    if dim == 0 {
        return Err(Error::InvalidSpec("dimension must be at least 1".into()));
    }
    match &spec.kind {
        StateKind::Fock { n } => {
            if *n >= dim {
                return Err(Error::Truncation(format!("Fock state |{n}> needs dim > {n}")));
            }
            let mut amp = vec![C64::new(0.0, 0.0); dim];
            amp[*n] = C64::new(1.0, 0.0);
            DensityMatrix::from_pure(&amp)
        }
        StateKind::Coherent { beta } => {
            let r = beta.norm();
            // |beta|^2 + 4|beta| <= n_max
            check_fits("coherent state", r * r, r, dim)?;
            let mut amp = Vec::with_capacity(dim);
            let mut term = C64::new((-0.5 * r * r).exp(), 0.0);
            for n in 0..dim {
                if n > 0 {
                    term = term * beta / (n as f64).sqrt();
                }
                amp.push(term);
            }
            DensityMatrix::from_pure(&amp)
        }
        StateKind::SqueezedVacuum { zeta } => {
            let r = zeta.norm();
            check_fits("squeezed vacuum", r.sinh().powi(2), 2f64.sqrt() * r.sinh() * r.cosh(), dim)?;
            let xi = squeeze_coefficient(*zeta);
            let ratio = if r == 0.0 { C64::new(0.0, 0.0) } else { xi / r * r.tanh() };
            let mut amp = vec![C64::new(0.0, 0.0); dim];
            let mut coef = 1.0 / r.cosh().sqrt();
            let mut power = C64::new(1.0, 0.0);
            for k in 0..dim.div_ceil(2) {
                if k > 0 {
                    let kf = k as f64;
                    coef *= ((2.0 * kf) * (2.0 * kf - 1.0)).sqrt() / (2.0 * kf);
                    power *= ratio;
                }
                amp[2 * k] = power * coef;
            }
            DensityMatrix::from_pure(&amp)
        }
        StateKind::Thermal { mean_n } => {
            if *mean_n < 0.0 {
                return Err(Error::InvalidSpec("thermal mean photon number must be >= 0".into()));
            }
            check_fits("thermal state", *mean_n, (mean_n * (mean_n + 1.0)).sqrt(), dim)?;
            let x = mean_n / (mean_n + 1.0);
            let diag: Vec<C64> = (0..dim).map(|n| C64::new(x.powi(n as i32), 0.0)).collect();
            DensityMatrix::from_unnormalized(Operator::diagonal(&diag))
        }
        StateKind::RandomMixed { seed } => {
            let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(*seed);
            let g = DMatrix::from_fn(dim, dim, |_, _| {
                C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
            });
            let gg = &g * g.adjoint();
            DensityMatrix::from_unnormalized(Operator::from_matrix_unchecked(gg))
        }
        StateKind::SpinPure { twice_s, n } => {
            check_unit(*n)?;
            if twice_s.dim() != dim {
                return Err(Error::InvalidSpec(format!(
                    "spin {} needs dimension {}, got {dim}",
                    twice_s.spin(),
                    twice_s.dim()
                )));
            }
            let top = spin_coherent_vector(*twice_s, *n);
            DensityMatrix::from_pure(top.as_slice())
        }
    }
}

/// Eigenvector of `S . n` with the maximal eigenvalue `s`.
pub fn spin_coherent_vector(twice_s: TwiceSpin, n: [f64; 3]) -> DVector<C64> {
    let (_, vectors) = eigh_sorted(spin_along(twice_s, n).matrix());
    vectors.column(twice_s.dim() - 1).into_owned()
}
