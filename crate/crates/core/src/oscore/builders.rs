use super::{hermitian_evolution, Operator};
use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// A spin quantum number stored as `2s` so half-integers stay exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TwiceSpin(pub u32);

impl TwiceSpin {
    /// Parses `0.5`, `1`, `1.5`, ... into `2s`.
    pub fn from_spin(s: f64) -> Result<Self> {
        let twice = 2.0 * s;
        if s <= 0.0 || (twice - twice.round()).abs() > 1e-9 {
            return Err(Error::InvalidSpec(format!("spin {s} is not a positive half-integer")));
        }
        Ok(Self(twice.round() as u32))
    }

    pub fn spin(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub fn dim(self) -> usize {
        self.0 as usize + 1
    }

    /// Magnetic quantum number of basis index `k` (index 0 is `m = s`).
    pub fn m_of_index(self, k: usize) -> f64 {
        self.spin() - k as f64
    }

    /// Basis index of `m`, if `m` is one of `s, s-1, ..., -s`.
    pub fn index_of_m(self, m: f64) -> Option<usize> {
        let k = self.spin() - m;
        let kr = k.round();
        if (k - kr).abs() > 1e-9 || kr < 0.0 || kr as usize >= self.dim() {
            None
        } else {
            Some(kr as usize)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn unit_vector(self) -> [f64; 3] {
        match self {
            Axis::X => [1.0, 0.0, 0.0],
            Axis::Y => [0.0, 1.0, 0.0],
            Axis::Z => [0.0, 0.0, 1.0],
        }
    }

    /// Recovers the axis from a unit vector along a coordinate direction.
    pub fn from_vector(v: [f64; 3]) -> Option<Axis> {
        Axis::ALL.into_iter().find(|a| {
            let u = a.unit_vector();
            (0..3).all(|i| (u[i] - v[i]).abs() < 1e-9)
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperatorKind {
    Identity,
    Annihilation,
    Number,
    Parity,
    Displacement { alpha: C64 },
    Squeeze { zeta: C64 },
    Quadrature { phi: f64 },
    SpinComponent { twice_s: TwiceSpin, n: [f64; 3] },
    Pauli { axis: Axis },
    /// `e_- = sum_n |n><n+1|`
    LoweringEMinus,
    /// `e_+ = sum_n |n+1><n|`
    RaisingEPlus,
    /// `V(psi) = exp(i (a^dag a)^2 psi)`
    KerrShift { psi: f64 },
    /// `|n><m|`
    FockMatrixUnit { n: usize, m: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    #[serde(flatten)]
    pub kind: OperatorKind,
    pub dim: usize,
}

impl OperatorSpec {
    pub fn new(kind: OperatorKind, dim: usize) -> Self {
        Self { kind, dim }
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Truncated annihilation operator `a`.
pub fn annihilation(dim: usize) -> Operator {
    Operator::from_fn(dim, |i, j| if j == i + 1 { c((j as f64).sqrt(), 0.0) } else { c(0.0, 0.0) })
}

pub fn number(dim: usize) -> Operator {
    Operator::diagonal(&(0..dim).map(|n| c(n as f64, 0.0)).collect::<Vec<_>>())
}

pub fn parity(dim: usize) -> Operator {
    Operator::diagonal(
        &(0..dim).map(|n| c(if n % 2 == 0 { 1.0 } else { -1.0 }, 0.0)).collect::<Vec<_>>(),
    )
}

/// Quadrature `q_phi = (a e^{-i phi} + a^dag e^{i phi}) / 2`.
pub fn quadrature(dim: usize, phi: f64) -> Operator {
    let a = annihilation(dim);
    let term = a.scale(C64::from_polar(0.5, -phi));
    &term + &term.adjoint()
}

/// Spin matrices `(S_x, S_y, S_z)` in the basis `m = s, ..., -s`.
pub fn spin_matrices(twice_s: TwiceSpin) -> (Operator, Operator, Operator) {
    let dim = twice_s.dim();
    let s = twice_s.spin();
    // <m+1|S_+|m> = sqrt(s(s+1) - m(m+1)); index k holds m = s - k.
    let splus = Operator::from_fn(dim, |i, j| {
        if j == i + 1 {
            let m = twice_s.m_of_index(j);
            c((s * (s + 1.0) - m * (m + 1.0)).sqrt(), 0.0)
        } else {
            c(0.0, 0.0)
        }
    });
    let sminus = splus.adjoint();
    let sx = (&splus + &sminus).scale_real(0.5);
    let sy = (&splus - &sminus).scale(c(0.0, -0.5));
    let sz = Operator::diagonal(
        &(0..dim).map(|k| c(twice_s.m_of_index(k), 0.0)).collect::<Vec<_>>(),
    );
    (sx, sy, sz)
}

/// `S . n` for a unit vector `n`.
pub fn spin_along(twice_s: TwiceSpin, n: [f64; 3]) -> Operator {
    let (sx, sy, sz) = spin_matrices(twice_s);
    let t = &(&sx.scale_real(n[0]) + &sy.scale_real(n[1])) + &sz.scale_real(n[2]);
    t.hermitian_part()
}

/// Rejects directions whose norm differs from 1 by more than `1e-12`.
pub fn check_unit(n: [f64; 3]) -> Result<()> {
    let norm = n.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidSpec(format!("direction has norm {norm}, expected 1")));
    }
    Ok(())
}

/// Coefficient `xi` of the squeeze generator `(xi a^dag^2 - conj(xi) a^2)/2`
/// for which `S^dag a S = mu a + nu a^dag` with `mu = cosh|zeta|` and
/// `nu = sinh|zeta| e^{2i arg zeta}`.
pub(crate) fn squeeze_coefficient(zeta: C64) -> C64 {
    if zeta.norm() == 0.0 {
        c(0.0, 0.0)
    } else {
        C64::from_polar(zeta.norm(), 2.0 * zeta.arg())
    }
}

/// Builds the truncated matrix for an operator description.
pub fn build_operator(spec: &OperatorSpec) -> Result<Operator> {
    let dim = spec.dim;
    if dim == 0 {
        return Err(Error::InvalidSpec("dimension must be at least 1".into()));
    }
    let op = match &spec.kind {
        OperatorKind::Identity => Operator::identity(dim),
        OperatorKind::Annihilation => annihilation(dim),
        OperatorKind::Number => number(dim),
        OperatorKind::Parity => parity(dim),
        OperatorKind::Quadrature { phi } => quadrature(dim, *phi),
        OperatorKind::Displacement { alpha } => {
            // D = exp(G), G = alpha a^dag - conj(alpha) a anti-Hermitian; G = iH
            let a = annihilation(dim);
            let g = &a.adjoint().scale(*alpha) - &a.scale(alpha.conj());
            hermitian_evolution(&g.scale(c(0.0, -1.0)).hermitian_part(), 1.0)?
        }
        OperatorKind::Squeeze { zeta } => {
            let xi = squeeze_coefficient(*zeta);
            let a = annihilation(dim);
            let a2 = &a * &a;
            let g = (&a2.adjoint().scale(xi) - &a2.scale(xi.conj())).scale_real(0.5);
            hermitian_evolution(&g.scale(c(0.0, -1.0)).hermitian_part(), 1.0)?
        }
        OperatorKind::SpinComponent { twice_s, n } => {
            check_unit(*n)?;
            check_spin_dim(*twice_s, dim)?;
            spin_along(*twice_s, *n)
        }
        OperatorKind::Pauli { axis } => {
            check_spin_dim(TwiceSpin(1), dim)?;
            spin_along(TwiceSpin(1), axis.unit_vector()).scale_real(2.0)
        }
        OperatorKind::LoweringEMinus => {
            Operator::from_fn(dim, |i, j| if j == i + 1 { c(1.0, 0.0) } else { c(0.0, 0.0) })
        }
        OperatorKind::RaisingEPlus => {
            Operator::from_fn(dim, |i, j| if i == j + 1 { c(1.0, 0.0) } else { c(0.0, 0.0) })
        }
        OperatorKind::KerrShift { psi } => Operator::diagonal(
            &(0..dim).map(|n| C64::from_polar(1.0, (n * n) as f64 * psi)).collect::<Vec<_>>(),
        ),
        OperatorKind::FockMatrixUnit { n, m } => {
            if *n >= dim || *m >= dim {
                return Err(Error::InvalidSpec(format!(
                    "matrix unit |{n}><{m}| outside dimension {dim}"
                )));
            }
            Operator::matrix_unit(dim, *n, *m)
        }
    };
    Ok(op)
}

fn check_spin_dim(twice_s: TwiceSpin, dim: usize) -> Result<()> {
    if twice_s.dim() != dim {
        return Err(Error::InvalidSpec(format!(
            "spin {} needs dimension {}, got {dim}",
            twice_s.spin(),
            twice_s.dim()
        )));
    }
    Ok(())
}
