//! Spanning sets, dual sets and the two quorum conditions in Liouville space.
//!
//! Operators are vectorized row-major (`|A>> = vec(A)`, index `i*d + j`), so
//! `<<A|B>> = Tr[A^dag B]`. A continuous setting manifold is represented by a
//! discrete rule: every element carries the weight `w_x` standing in for `dx`.

use crate::error::{Error, Result};
use crate::oscore::{hs_inner, Operator};
use crate::FORMAT_VERSION;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// Tolerance for identities that hold in exact arithmetic.
pub const EXACT_TOL: f64 = 1e-10;
/// Tolerance for identities that hold only up to quadrature error.
pub const GRID_TOL: f64 = 1e-6;
/// Relative singular-value cutoff for numerical rank.
pub const RANK_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SettingLabel {
    pub quorum: String,
    pub coords: Vec<f64>,
}

impl SettingLabel {
    pub fn new(quorum: impl Into<String>, coords: Vec<f64>) -> Self {
        Self { quorum: quorum.into(), coords }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameElement {
    pub label: SettingLabel,
    pub weight: f64,
    pub operator: Operator,
}

/// A weighted, labeled operator family. Shared shape of spanning and dual sets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FamilyJson", into = "FamilyJson")]
pub struct Family {
    dim: usize,
    elements: Vec<FrameElement>,
}

#[derive(Serialize, Deserialize)]
struct FamilyJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    version: Option<u32>,
    dim: usize,
    elements: Vec<FrameElement>,
}

impl TryFrom<FamilyJson> for Family {
    type Error = Error;
    fn try_from(js: FamilyJson) -> Result<Self> {
        Family::new(js.dim, js.elements)
    }
}

impl From<Family> for FamilyJson {
    fn from(f: Family) -> Self {
        FamilyJson { version: Some(FORMAT_VERSION), dim: f.dim, elements: f.elements }
    }
}

impl Family {
    pub fn new(dim: usize, elements: Vec<FrameElement>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidSpec("operator family must have at least one element".into()));
        }
        for (k, e) in elements.iter().enumerate() {
            if e.operator.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: e.operator.dim() });
            }
            if !(e.weight > 0.0 && e.weight.is_finite()) {
                return Err(Error::InvalidSpec(format!(
                    "element {k} has non-positive weight {}",
                    e.weight
                )));
            }
        }
        Ok(Self { dim, elements })
    }

    /// Family with unit weights and labels `(quorum, [k])`.
    pub fn from_operators(quorum: &str, ops: Vec<Operator>) -> Result<Self> {
        let dim = ops.first().map(Operator::dim).unwrap_or(0);
        let elements = ops
            .into_iter()
            .enumerate()
            .map(|(k, operator)| FrameElement {
                label: SettingLabel::new(quorum, vec![k as f64]),
                weight: 1.0,
                operator,
            })
            .collect();
        Self::new(dim, elements)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[FrameElement] {
        &self.elements
    }

    pub fn operators(&self) -> impl Iterator<Item = &Operator> {
        self.elements.iter().map(|e| &e.operator)
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.elements.iter().map(|e| e.weight)
    }

    /// `d^2 x N` matrix whose columns are the vectorized elements.
    pub fn synthesis_matrix(&self) -> DMatrix<C64> {
        let d2 = self.dim * self.dim;
        let mut m = DMatrix::zeros(d2, self.len());
        for (k, op) in self.operators().enumerate() {
            m.set_column(k, &op.vectorize());
        }
        m
    }

    /// `sum_x w_x coef_x X_x`
    pub fn combine(&self, coefficients: &[C64]) -> Operator {
        let mut acc = DMatrix::zeros(self.dim, self.dim);
        for (e, c) in self.elements.iter().zip(coefficients) {
            acc += e.operator.matrix() * (*c * e.weight);
        }
        Operator::from_fn(self.dim, |i, j| acc[(i, j)])
    }

    fn with_operators(&self, ops: Vec<Operator>) -> Result<Self> {
        if ops.len() != self.len() {
            return Err(Error::InvalidSpec(format!(
                "expected {} operators, got {}",
                self.len(),
                ops.len()
            )));
        }
        let elements = self
            .elements
            .iter()
            .zip(ops)
            .map(|(e, operator)| FrameElement { label: e.label.clone(), weight: e.weight, operator })
            .collect();
        Family::new(self.dim, elements)
    }
}

/// The operators `C(x)` whose measurement statistics are available.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpanningSet(Family);

/// The partner family `B(x)`; same labels, order and weights as its spanning set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DualSet(Family);

impl SpanningSet {
    pub fn new(family: Family) -> Self {
        Self(family)
    }

    pub fn from_operators(quorum: &str, ops: Vec<Operator>) -> Result<Self> {
        Family::from_operators(quorum, ops).map(Self)
    }

    pub fn family(&self) -> &Family {
        &self.0
    }

    /// Same labels and weights, operators transformed elementwise.
    pub fn map_operators(&self, f: impl FnMut(&Operator) -> Operator) -> Result<SpanningSet> {
        let ops = self.0.operators().map(f).collect();
        self.0.with_operators(ops).map(SpanningSet)
    }

    /// The set used as its own dual.
    pub fn self_dual(&self) -> DualSet {
        DualSet(self.0.clone())
    }
}

impl DualSet {
    /// Pairs dual operators with the labels and weights of `partner`.
    pub fn for_spanning(partner: &SpanningSet, ops: Vec<Operator>) -> Result<Self> {
        partner.0.with_operators(ops).map(DualSet)
    }

    pub fn family(&self) -> &Family {
        &self.0
    }
}

impl std::ops::Deref for SpanningSet {
    type Target = Family;
    fn deref(&self) -> &Family {
        &self.0
    }
}

impl std::ops::Deref for DualSet {
    type Target = Family;
    fn deref(&self) -> &Family {
        &self.0
    }
}

fn check_paired(s: &SpanningSet, b: &DualSet) -> Result<()> {
    if s.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: s.dim(), found: b.dim() });
    }
    if s.len() != b.len() {
        return Err(Error::InvalidSpec(format!(
            "spanning set has {} elements, dual set {}",
            s.len(),
            b.len()
        )));
    }
    for (k, (x, y)) in s.elements().iter().zip(b.elements()).enumerate() {
        if x.label != y.label || (x.weight - y.weight).abs() > 1e-14 * x.weight.abs() {
            return Err(Error::InvalidSpec(format!("element {k}: labels or weights differ")));
        }
    }
    Ok(())
}

/// `sum_x w_x |C_x>><<B_x|` as a `d^2 x d^2` matrix.
pub fn resolution_superoperator(s: &SpanningSet, b: &DualSet) -> Result<DMatrix<C64>> {
    check_paired(s, b)?;
    let c = s.synthesis_matrix();
    let mut bw = b.synthesis_matrix();
    for (k, w) in s.weights().enumerate() {
        bw.column_mut(k).scale_mut(w);
    }
    Ok(c * bw.adjoint())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BiorthogonalityReport {
    pub max_violation: f64,
    pub pass: bool,
}

/// Checks the identity resolution `sum_x w_x |C_x>><<B_x| = 1`, which is the
/// Liouville form of the bi-orthogonality condition.
pub fn check_biorthogonality(s: &SpanningSet, b: &DualSet, tol: f64) -> Result<BiorthogonalityReport> {
    let r = resolution_superoperator(s, b)?;
    let n = r.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((r[(i, j)] - C64::new(target, 0.0)).norm());
        }
    }
    Ok(BiorthogonalityReport { max_violation: worst, pass: worst <= tol })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankReport {
    pub rank: usize,
    pub required: usize,
    pub irreducible: bool,
}

/// Rank of the span of the family in Liouville space; the set is irreducible
/// iff it spans all `d^2` dimensions.
///
/// Columns are normalized before the SVD, so the rank does not depend on how
/// individual elements are scaled.
pub fn irreducibility_rank(family: &Family) -> RankReport {
    let mut m = family.synthesis_matrix();
    for mut col in m.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col.unscale_mut(norm);
        }
    }
    let rank = numerical_rank(&m);
    let required = family.dim() * family.dim();
    RankReport { rank, required, irreducible: rank == required }
}

pub(crate) fn numerical_rank(m: &DMatrix<C64>) -> usize {
    // The Gram matrix in the smaller dimension has the same nonzero spectrum.
    let gram = if m.nrows() <= m.ncols() { m * m.adjoint() } else { m.adjoint() * m };
    let (values, _) = crate::oscore::eigh_sorted(&gram);
    let top = values.last().copied().unwrap_or(0.0).max(0.0);
    if top == 0.0 {
        return 0;
    }
    // singular values are sqrt of Gram eigenvalues
    values.iter().filter(|&&v| v.max(0.0).sqrt() > RANK_TOL * top.sqrt()).count()
}

/// Kernel `K_xy` standing in for `delta(x, y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReproducingKernelMatrix {
    pub k: DMatrix<C64>,
}

impl ReproducingKernelMatrix {
    /// `K_xy = delta_xy / w_x`, the kernel of a discrete biorthogonal family.
    pub fn diagonal(family: &Family) -> Self {
        let n = family.len();
        let w: Vec<f64> = family.weights().collect();
        Self { k: DMatrix::from_fn(n, n, |i, j| if i == j { C64::new(1.0 / w[i], 0.0) } else { C64::new(0.0, 0.0) }) }
    }

    /// `K_xy = Tr[B_x^dag C_y]` as measured from a pair of families.
    pub fn from_traces(s: &SpanningSet, b: &DualSet) -> Result<Self> {
        check_paired(s, b)?;
        Ok(Self { k: b.synthesis_matrix().adjoint() * s.synthesis_matrix() })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceVerdict {
    /// Trace condition holds on an irreducible set: the pair is a quorum resolution.
    Holds,
    /// Trace condition holds, but the set does not span the operator space, so
    /// it does not imply the resolution of the identity.
    HoldsButReducible,
    Fails,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceConditionReport {
    /// `max |Tr[B_x^dag C_y] - K_xy|`
    pub max_kernel_violation: f64,
    /// Worst violation of `sum_x w_x K_xy C_x = C_y` and of the dual identity for `B`.
    pub max_reproducing_violation: f64,
    pub rank: RankReport,
    pub verdict: TraceVerdict,
}

impl TraceConditionReport {
    pub fn max_violation(&self) -> f64 {
        self.max_kernel_violation.max(self.max_reproducing_violation)
    }
}

/// Verifies `Tr[B_x^dag C_y] = K_xy` and that `K` reproduces both families.
pub fn check_trace_condition(
    s: &SpanningSet,
    b: &DualSet,
    kernel: &ReproducingKernelMatrix,
    tol: f64,
) -> Result<TraceConditionReport> {
    check_paired(s, b)?;
    let n = s.len();
    if kernel.k.nrows() != n || kernel.k.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: kernel.k.nrows() });
    }
    let measured = ReproducingKernelMatrix::from_traces(s, b)?;
    let max_kernel_violation =
        measured.k.iter().zip(kernel.k.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);

    let w = DMatrix::from_diagonal(&DVector::from_iterator(n, s.weights().map(|w| C64::new(w, 0.0))));
    let c = s.synthesis_matrix();
    let bm = b.synthesis_matrix();
    // sum_x w_x K_xy C_x = C_y
    let c_rep = &c * &w * &kernel.k - &c;
    // sum_x w_x conj(K_yx) B_x = B_y
    let b_rep = &bm * &w * kernel.k.adjoint() - &bm;
    let max_reproducing_violation =
        c_rep.iter().chain(b_rep.iter()).map(|z| z.norm()).fold(0.0, f64::max);

    let rank = irreducibility_rank(s);
    let holds = max_kernel_violation.max(max_reproducing_violation) <= tol;
    let verdict = match (holds, rank.irreducible) {
        (true, true) => TraceVerdict::Holds,
        (true, false) => TraceVerdict::HoldsButReducible,
        (false, _) => TraceVerdict::Fails,
    };
    Ok(TraceConditionReport { max_kernel_violation, max_reproducing_violation, rank, verdict })
}

/// Least-squares decomposition of `o` against `span{C_x}`: returns the norm of
/// the residual `o - P o`, the component orthogonal to every element.
pub fn orthogonal_residual(family: &Family, o: &Operator) -> Result<f64> {
    if o.dim() != family.dim() {
        return Err(Error::DimensionMismatch { expected: family.dim(), found: o.dim() });
    }
    let m = family.synthesis_matrix();
    let v = o.vectorize();
    // Orthonormal basis of the span from the Gram eigenvectors.
    let gram = &m * m.adjoint();
    let (values, vectors) = crate::oscore::eigh_sorted(&gram);
    let top = values.last().copied().unwrap_or(0.0).max(0.0);
    let mut proj = DVector::zeros(v.len());
    for (k, &lam) in values.iter().enumerate() {
        if lam.max(0.0).sqrt() > RANK_TOL * top.sqrt() && top > 0.0 {
            let u = vectors.column(k);
            let coef = u.dotc(&v);
            proj += u * coef;
        }
    }
    Ok((v - proj).norm())
}

/// Null-operator test: `o` refutes the quorum property iff it has a nonzero
/// component orthogonal to every `C_x`. Returns `true` when `o` does not refute it.
pub fn null_operator_test(family: &Family, o: &Operator, tol: f64) -> Result<bool> {
    Ok(orthogonal_residual(family, o)? <= tol)
}

/// Builds a superoperator matrix `L` with `vec(L[A]) = L vec(A)`.
pub fn superoperator_from_fn(dim: usize, f: impl Fn(&Operator) -> Operator) -> DMatrix<C64> {
    let d2 = dim * dim;
    let mut l = DMatrix::zeros(d2, d2);
    for k in 0..d2 {
        let unit = Operator::matrix_unit(dim, k / dim, k % dim);
        l.set_column(k, &f(&unit).vectorize());
    }
    l
}

/// Coefficients `<<B_x| L |C_y>>`.
pub fn superop_matrix_elements(l: &DMatrix<C64>, s: &SpanningSet, b: &DualSet) -> Result<DMatrix<C64>> {
    check_paired(s, b)?;
    let d2 = s.dim() * s.dim();
    if l.nrows() != d2 || l.ncols() != d2 {
        return Err(Error::DimensionMismatch { expected: d2, found: l.nrows() });
    }
    Ok(b.synthesis_matrix().adjoint() * l * s.synthesis_matrix())
}

/// `L = sum_{x,y} w_x w_y |C_x>> <<B_x|L|C_y>> <<B_y|`.
pub fn reassemble_superoperator(coefficients: &DMatrix<C64>, s: &SpanningSet, b: &DualSet) -> Result<DMatrix<C64>> {
    check_paired(s, b)?;
    let n = s.len();
    if coefficients.nrows() != n || coefficients.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: coefficients.nrows() });
    }
    let w = DMatrix::from_diagonal(&DVector::from_iterator(n, s.weights().map(|w| C64::new(w, 0.0))));
    Ok(s.synthesis_matrix() * &w * coefficients * &w * b.synthesis_matrix().adjoint())
}

/// Fock-basis element `<k| L[|m><l|] |p>` of a superoperator assembled from
/// its frame coefficients.
pub fn superop_fock_element(
    coefficients: &DMatrix<C64>,
    s: &SpanningSet,
    b: &DualSet,
    (k, l, m, p): (usize, usize, usize, usize),
) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for (x, ex) in s.elements().iter().enumerate() {
        let cx = ex.operator.get(k, p) * ex.weight;
        if cx == C64::new(0.0, 0.0) {
            continue;
        }
        for (y, ey) in b.elements().iter().enumerate() {
            // <<B_y | m><l| >> = conj(<m|B_y|l>)
            acc += cx * coefficients[(x, y)] * ey.weight * ey.operator.get(m, l).conj();
        }
    }
    acc
}

/// Reconstructs `A` from the pair: `sum_x w_x Tr[B_x^dag A] C_x`.
pub fn reconstruct(s: &SpanningSet, b: &DualSet, a: &Operator) -> Result<Operator> {
    check_paired(s, b)?;
    let coefs = b.operators().map(|bx| hs_inner(bx, a)).collect::<Result<Vec<_>>>()?;
    Ok(s.combine(&coefs))
}
