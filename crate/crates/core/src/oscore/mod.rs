//! Finite-dimensional complex operator algebra.
//!
//! Oscillator operators live in the truncated Fock space `span{|0>, ..., |dim-1>}`;
//! spin operators in the `2s+1` dimensional irrep with basis ordered
//! `m = s, s-1, ..., -s`.

mod builders;
mod json;
mod state;

pub use builders::{
    annihilation, build_operator, number, parity, quadrature, spin_along, spin_matrices, Axis,
    OperatorKind, OperatorSpec, TwiceSpin,
};
pub use builders::check_unit;
pub use json::OperatorJson;
pub use state::{make_state, spin_coherent_vector, DensityMatrix, StateKind, StateSpec};

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use std::ops::{Add, Mul, Sub};

/// Tolerance used to decide whether an input is Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Dense complex square matrix acting on a `dim`-dimensional Hilbert space.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    m: DMatrix<C64>,
}

impl Operator {
    /// Wraps a square matrix with finite entries.
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidSpec("operator dimension must be at least 1".into()));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidSpec("operator has non-finite entries".into()));
        }
        Ok(Self { m })
    }

    pub(crate) fn from_matrix_unchecked(m: DMatrix<C64>) -> Self {
        debug_assert_eq!(m.nrows(), m.ncols());
        Self { m }
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self::from_matrix_unchecked(DMatrix::from_fn(dim, dim, f))
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_matrix_unchecked(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_matrix_unchecked(DMatrix::zeros(dim, dim))
    }

    /// `|row><col|`
    pub fn matrix_unit(dim: usize, row: usize, col: usize) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        m[(row, col)] = C64::new(1.0, 0.0);
        Self::from_matrix_unchecked(m)
    }

    pub fn diagonal(values: &[C64]) -> Self {
        Self::from_fn(values.len(), |i, j| if i == j { values[i] } else { C64::new(0.0, 0.0) })
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.m
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.m[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_matrix_unchecked(self.m.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::from_matrix_unchecked(&self.m * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    /// Hilbert-Schmidt norm `sqrt(Tr[A^dag A])`.
    pub fn hs_norm(&self) -> f64 {
        self.m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry modulus of `A - A^dag`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.m[(i, j)] - self.m[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// `(A + A^dag) / 2`
    pub fn hermitian_part(&self) -> Self {
        Self::from_matrix_unchecked((&self.m + self.m.adjoint()) * C64::new(0.5, 0.0))
    }

    /// Largest entry modulus of `A - B`.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        self.m.iter().zip(other.m.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Row-major vectorization `|A>>` used for the Liouville-space picture.
    pub fn vectorize(&self) -> nalgebra::DVector<C64> {
        let d = self.dim();
        nalgebra::DVector::from_fn(d * d, |k, _| self.m[(k / d, k % d)])
    }

    pub fn from_vector(dim: usize, v: &nalgebra::DVector<C64>) -> Self {
        debug_assert_eq!(v.len(), dim * dim);
        Self::from_fn(dim, |i, j| v[i * dim + j])
    }

    /// Hermitian eigendecomposition; eigenvalues ascending, eigenvectors as columns.
    pub fn eigh(&self) -> Result<(Vec<f64>, DMatrix<C64>)> {
        let defect = self.hermiticity_defect();
        if defect > HERMITIAN_TOL * self.hs_norm().max(1.0) {
            return Err(Error::NotHermitian { deviation: defect });
        }
        Ok(eigh_sorted(&self.hermitian_part().m))
    }

    fn check_same_dim(&self, other: &Operator) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(())
    }

    pub fn checked_mul(&self, other: &Operator) -> Result<Operator> {
        self.check_same_dim(other)?;
        Ok(self * other)
    }
}

/// Eigen-decomposition of a Hermitian matrix with ascending eigenvalues.
pub(crate) fn eigh_sorted(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator::from_matrix_unchecked(&self.m * &rhs.m)
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator::from_matrix_unchecked(&self.m + &rhs.m)
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator::from_matrix_unchecked(&self.m - &rhs.m)
    }
}

/// Hilbert-Schmidt inner product `Tr[A^dag B]`.
pub fn hs_inner(a: &Operator, b: &Operator) -> Result<C64> {
    a.check_same_dim(b)?;
    Ok(a.m.iter().zip(b.m.iter()).map(|(x, y)| x.conj() * y).sum())
}

/// `exp(i t H)` for Hermitian `H`, computed in the eigenbasis of `H`.
pub fn hermitian_evolution(h: &Operator, t: f64) -> Result<Operator> {
    let (values, vectors) = h.eigh()?;
    let phases: Vec<C64> = values.iter().map(|v| C64::from_polar(1.0, t * v)).collect();
    let scaled = DMatrix::from_fn(h.dim(), h.dim(), |i, j| vectors[(i, j)] * phases[j]);
    Ok(Operator::from_matrix_unchecked(scaled * vectors.adjoint()))
}

/// `f(H)` for Hermitian `H` and a real spectral function.
pub fn hermitian_function(h: &Operator, f: impl Fn(f64) -> C64) -> Result<Operator> {
    let (values, vectors) = h.eigh()?;
    let fv: Vec<C64> = values.iter().map(|&v| f(v)).collect();
    let scaled = DMatrix::from_fn(h.dim(), h.dim(), |i, j| vectors[(i, j)] * fv[j]);
    Ok(Operator::from_matrix_unchecked(scaled * vectors.adjoint()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_operator(dim: usize, seed: u64) -> Operator {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        Operator::from_fn(dim, |_, _| {
            c(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
        })
    }

    fn paulis() -> [Operator; 3] {
        let (sx, sy, sz) = spin_matrices(TwiceSpin(1));
        [sx.scale_real(2.0), sy.scale_real(2.0), sz.scale_real(2.0)]
    }

    #[test]
    fn hs_inner_examples() {
        for d in 1..5 {
            let id = Operator::identity(d);
            assert_abs_diff_eq!(hs_inner(&id, &id).unwrap().re, d as f64);
        }
        let [sx, sy, _] = paulis();
        assert_abs_diff_eq!(hs_inner(&sx, &sy).unwrap().norm(), 0.0);
        let a = annihilation(4);
        // sum_{n=0}^{2} (n + 1)
        assert_abs_diff_eq!(hs_inner(&a, &a).unwrap().re, 6.0, epsilon = 1e-14);
    }

    #[test]
    fn hs_inner_rejects_mismatched_dims() {
        let err = hs_inner(&Operator::identity(2), &Operator::identity(3)).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn evolution_examples() {
        let [sx, _, sz] = paulis();
        let u = hermitian_evolution(&sz, std::f64::consts::PI).unwrap();
        assert!(u.max_abs_diff(&Operator::identity(2).scale_real(-1.0)) < 1e-14);
        let u = hermitian_evolution(&sx, std::f64::consts::FRAC_PI_2).unwrap();
        assert!(u.max_abs_diff(&sx.scale(c(0.0, 1.0))) < 1e-14);
        let h = random_operator(5, 3).hermitian_part();
        let u = hermitian_evolution(&h, 0.0).unwrap();
        assert!(u.max_abs_diff(&Operator::identity(5)) < 1e-13);
    }

    #[test]
    fn evolution_rejects_non_hermitian() {
        let err = hermitian_evolution(&annihilation(3), 1.0).unwrap_err();
        assert!(matches!(err, Error::NotHermitian { .. }));
    }

    #[test]
    fn evolution_is_unitary() {
        let h = random_operator(7, 9).hermitian_part();
        let u = hermitian_evolution(&h, 0.77).unwrap();
        let uu = &u.adjoint() * &u;
        assert!(uu.max_abs_diff(&Operator::identity(7)) < 1e-10);
    }

    #[test]
    fn rejects_non_square_and_non_finite() {
        assert!(Operator::new(DMatrix::zeros(2, 3)).is_err());
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = c(f64::NAN, 0.0);
        assert!(Operator::new(m).is_err());
    }

    proptest! {
        #[test]
        fn hs_inner_is_conjugate_symmetric_and_positive(seed in any::<u64>(), dim in 1usize..6) {
            let a = random_operator(dim, seed);
            let b = random_operator(dim, seed.wrapping_add(1));
            let ab = hs_inner(&a, &b).unwrap();
            let ba = hs_inner(&b, &a).unwrap();
            prop_assert!((ab - ba.conj()).norm() < 1e-12 * (1.0 + ab.norm()));
            let aa = hs_inner(&a, &a).unwrap();
            prop_assert!(aa.im.abs() < 1e-12 && aa.re >= 0.0);
        }

        #[test]
        fn trace_is_cyclic_and_adjoint_involutive(seed in any::<u64>(), dim in 1usize..9) {
            let a = random_operator(dim, seed);
            let b = random_operator(dim, seed ^ 0x5555);
            let tab = (&a * &b).trace();
            let tba = (&b * &a).trace();
            prop_assert!((tab - tba).norm() < 1e-12 * (1.0 + tab.norm()));
            prop_assert_eq!(a.adjoint().adjoint(), a);
        }
    }
}
