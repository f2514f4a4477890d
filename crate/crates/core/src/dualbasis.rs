//! Dual sets for finite spanning sets.
//!
//! [`gram_schmidt_dual`] handles bases (exactly `d^2` elements) through an
//! orthonormalization with a triangular change of basis. [`pseudoinverse_dual`]
//! inverts the frame operator and also accepts overcomplete sets; the two
//! agree on bases and serve as each other's check.

use crate::error::{Error, Result};
use crate::frames::{irreducibility_rank, DualSet, Family, FrameElement, SettingLabel, SpanningSet};
use crate::oscore::{check_unit, spin_coherent_vector, DensityMatrix, Operator, TwiceSpin};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

/// Relative normalizer below which an element counts as dependent on its predecessors.
pub const INDEPENDENCE_TOL: f64 = 1e-10;
const REORTHOGONALIZE_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct GramSchmidtTrace {
    /// `N_k`, the norm of element `k` after projecting out `y_0 .. y_{k-1}`.
    pub normalizers: Vec<f64>,
    /// The orthonormal operators `y_k`.
    pub orthonormal: Vec<Operator>,
    /// Elements that needed a second orthogonalization pass.
    pub reorthogonalized: Vec<usize>,
}

/// Dual of a basis by Gram-Schmidt.
///
/// Writing the vectorized elements as `C = Y R` with `Y` orthonormal and `R`
/// upper triangular, the dual satisfying `sum_x w_x |C_x>><<B_x| = 1` is
/// `B = Y R^{-dag} W^{-1}`, obtained by forward substitution.
pub fn gram_schmidt_dual(s: &SpanningSet) -> Result<(DualSet, GramSchmidtTrace)> {
    let d = s.dim();
    let d2 = d * d;
    if s.len() != d2 {
        return Err(Error::InvalidSpec(format!(
            "Gram-Schmidt dual needs a basis of exactly {d2} elements, got {}",
            s.len()
        )));
    }
    let mut y: Vec<DVector<C64>> = Vec::with_capacity(d2);
    let mut r = DMatrix::<C64>::zeros(d2, d2);
    let mut normalizers = Vec::with_capacity(d2);
    let mut reorthogonalized = Vec::new();

    for (k, op) in s.operators().enumerate() {
        let c = op.vectorize();
        let c_norm = c.norm();
        if c_norm == 0.0 {
            return Err(Error::RankDeficient { rank: k, required: d2, element: Some(k) });
        }
        let mut v = c.clone();
        for (j, yj) in y.iter().enumerate() {
            let overlap = yj.dotc(&v);
            r[(j, k)] += overlap;
            v.axpy(-overlap, yj, C64::new(1.0, 0.0));
        }
        let norm = v.norm();
        let worst = y.iter().map(|yj| yj.dotc(&v).norm()).fold(0.0, f64::max);
        if norm > 0.0 && worst > REORTHOGONALIZE_TOL * norm {
            reorthogonalized.push(k);
            for (j, yj) in y.iter().enumerate() {
                let overlap = yj.dotc(&v);
                r[(j, k)] += overlap;
                v.axpy(-overlap, yj, C64::new(1.0, 0.0));
            }
        }
        let n_k = v.norm();
        if n_k < INDEPENDENCE_TOL * c_norm {
            return Err(Error::RankDeficient { rank: k, required: d2, element: Some(k) });
        }
        r[(k, k)] = C64::new(n_k, 0.0);
        normalizers.push(n_k);
        y.push(v.unscale(n_k));
    }

    // X = R^{-dag}: solve R^dag X = I, lower triangular.
    let identity = DMatrix::<C64>::identity(d2, d2);
    let x = r
        .adjoint()
        .solve_lower_triangular(&identity)
        .ok_or(Error::Singular { condition: f64::INFINITY })?;
    let ymat = DMatrix::from_columns(&y);
    let bmat = ymat * x;
    let ops = s
        .weights()
        .enumerate()
        .map(|(m, w)| Operator::from_vector(d, &bmat.column(m).unscale(w)))
        .collect();
    let dual = DualSet::for_spanning(s, ops)?;
    let orthonormal = y.iter().map(|v| Operator::from_vector(d, v)).collect();
    Ok((dual, GramSchmidtTrace { normalizers, orthonormal, reorthogonalized }))
}

/// Canonical dual `B_x = F^{-1} C_x` with the frame operator
/// `F = sum_x w_x |C_x>><<C_x|`.
pub fn pseudoinverse_dual(s: &SpanningSet) -> Result<DualSet> {
    let rank = irreducibility_rank(s);
    if !rank.irreducible {
        return Err(Error::RankDeficient { rank: rank.rank, required: rank.required, element: None });
    }
    let c = s.synthesis_matrix();
    let mut cw = c.clone();
    for (k, w) in s.weights().enumerate() {
        cw.column_mut(k).scale_mut(w);
    }
    let frame = &cw * c.adjoint();
    let chol = frame.cholesky().ok_or(Error::Singular { condition: f64::INFINITY })?;
    let b = chol.solve(&c);
    let d = s.dim();
    let ops = (0..s.len()).map(|k| Operator::from_vector(d, &b.column(k).into_owned())).collect();
    DualSet::for_spanning(s, ops)
}

/// Dual on the span of a possibly reducible set: `B_x = F^+ C_x` with the
/// Moore-Penrose inverse of the frame operator. Equals [`pseudoinverse_dual`]
/// on irreducible sets; on reducible ones it resolves only the projector onto
/// `span{C_x}`.
pub fn span_dual(s: &SpanningSet) -> Result<DualSet> {
    let c = s.synthesis_matrix();
    let mut cw = c.clone();
    for (k, w) in s.weights().enumerate() {
        cw.column_mut(k).scale_mut(w);
    }
    let frame = &cw * c.adjoint();
    let (values, vectors) = crate::oscore::eigh_sorted(&frame);
    let top = values.last().copied().unwrap_or(0.0).max(0.0);
    let mut pinv = DMatrix::<C64>::zeros(frame.nrows(), frame.ncols());
    for (k, &lam) in values.iter().enumerate() {
        // singular values of C are sqrt of frame eigenvalues
        if top > 0.0 && lam.max(0.0).sqrt() > crate::frames::RANK_TOL * top.sqrt() {
            let u = vectors.column(k);
            pinv += u * u.adjoint() * C64::new(1.0 / lam, 0.0);
        }
    }
    let b = pinv * c;
    let d = s.dim();
    let ops = (0..s.len()).map(|k| Operator::from_vector(d, &b.column(k).into_owned())).collect();
    DualSet::for_spanning(s, ops)
}

/// Projectors onto the spin-coherent states `|s, n_j>` with unit weights.
pub fn weigert_spin_quorum(twice_s: TwiceSpin, directions: &[[f64; 3]]) -> Result<SpanningSet> {
    let dim = twice_s.dim();
    if directions.len() != dim * dim {
        return Err(Error::InvalidSpec(format!(
            "spin {} quorum needs {} directions, got {}",
            twice_s.spin(),
            dim * dim,
            directions.len()
        )));
    }
    let elements = directions
        .iter()
        .map(|n| {
            check_unit(*n)?;
            let v = spin_coherent_vector(twice_s, *n);
            let rho = DensityMatrix::from_pure(v.as_slice())?;
            Ok(FrameElement {
                label: SettingLabel::new("weigert", n.to_vec()),
                weight: 1.0,
                operator: rho.op().clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Family::new(dim, elements).map(SpanningSet::new)
}

/// Fibonacci spiral point set: `count` nearly uniform unit vectors.
pub fn spiral_directions(count: usize) -> Vec<[f64; 3]> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|k| {
            let z = 1.0 - (2.0 * k as f64 + 1.0) / count as f64;
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * k as f64;
            [rho * phi.cos(), rho * phi.sin(), z]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{check_biorthogonality, reconstruct, EXACT_TOL};
    use crate::oscore::{hs_inner, spin_matrices};
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn pauli_over_root2() -> Vec<Operator> {
        let (sx, sy, sz) = spin_matrices(TwiceSpin(1));
        let r = 2f64.sqrt();
        vec![sx.scale_real(r), sy.scale_real(r), sz.scale_real(r), Operator::identity(2).scale_real(1.0 / r)]
    }

    fn max_dual_diff(a: &DualSet, b: &DualSet) -> f64 {
        a.operators().zip(b.operators()).map(|(x, y)| x.max_abs_diff(y)).fold(0.0, f64::max)
    }

    #[test]
    fn orthonormal_input_is_self_dual() {
        let s = SpanningSet::from_operators("pauli", pauli_over_root2()).unwrap();
        let (b, trace) = gram_schmidt_dual(&s).unwrap();
        assert!(max_dual_diff(&b, &s.self_dual()) < 1e-14);
        assert!((trace.normalizers[0] - s.operators().next().unwrap().hs_norm()).abs() < 1e-15);
    }

    #[test]
    fn skewed_qubit_basis_matches_pseudoinverse() {
        let (sx, sy, sz) = spin_matrices(TwiceSpin(1));
        let r = 2f64.sqrt();
        let id = Operator::identity(2);
        let ops = vec![
            id.scale_real(1.0 / r),
            (&id + &sx.scale_real(2.0)).scale_real(1.0 / r),
            sy.scale_real(r),
            sz.scale_real(r),
        ];
        let s = SpanningSet::from_operators("skew", ops).unwrap();
        let (gs, _) = gram_schmidt_dual(&s).unwrap();
        let pi = pseudoinverse_dual(&s).unwrap();
        assert!(max_dual_diff(&gs, &pi) < 1e-10);
        for (m, bm) in gs.operators().enumerate() {
            for (n, cn) in s.operators().enumerate() {
                let expect = if m == n { 1.0 } else { 0.0 };
                assert!((hs_inner(bm, cn).unwrap() - c(expect, 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn repeated_element_reports_the_culprit() {
        let mut ops = pauli_over_root2();
        ops[3] = ops[1].clone();
        let s = SpanningSet::from_operators("dup", ops).unwrap();
        match gram_schmidt_dual(&s) {
            Err(Error::RankDeficient { element: Some(3), .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(pseudoinverse_dual(&s).is_err());
    }

    #[test]
    fn overcomplete_set_with_split_weights() {
        let ops = pauli_over_root2();
        let mut elements: Vec<FrameElement> = ops
            .iter()
            .enumerate()
            .map(|(k, o)| FrameElement {
                label: SettingLabel::new("pauli", vec![k as f64]),
                weight: if k == 0 { 0.5 } else { 1.0 },
                operator: o.clone(),
            })
            .collect();
        elements.push(FrameElement {
            label: SettingLabel::new("pauli", vec![4.0]),
            weight: 0.5,
            operator: ops[0].clone(),
        });
        let s = SpanningSet::new(Family::new(2, elements).unwrap());
        let b = pseudoinverse_dual(&s).unwrap();
        assert!(check_biorthogonality(&s, &b, 1e-8).unwrap().pass);
        assert!(gram_schmidt_dual(&s).is_err());
    }

    #[test]
    fn weights_are_divided_out() {
        let ops = pauli_over_root2();
        let elements = ops
            .into_iter()
            .enumerate()
            .map(|(k, o)| FrameElement {
                label: SettingLabel::new("w", vec![k as f64]),
                weight: 0.5 + k as f64,
                operator: o,
            })
            .collect();
        let s = SpanningSet::new(Family::new(2, elements).unwrap());
        let (gs, _) = gram_schmidt_dual(&s).unwrap();
        let pi = pseudoinverse_dual(&s).unwrap();
        assert!(check_biorthogonality(&s, &gs, EXACT_TOL).unwrap().pass);
        assert!(max_dual_diff(&gs, &pi) < 1e-10);
    }

    #[test]
    fn permutation_keeps_reconstruction() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let mut gauss = || c(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
        let ops: Vec<Operator> = (0..9).map(|_| Operator::from_fn(3, |_, _| gauss())).collect();
        let a = Operator::from_fn(3, |_, _| gauss());
        let mut reversed = ops.clone();
        reversed.reverse();
        for set in [ops, reversed] {
            let s = SpanningSet::from_operators("r", set).unwrap();
            let (b, _) = gram_schmidt_dual(&s).unwrap();
            let back = reconstruct(&s, &b, &a).unwrap();
            assert!(back.max_abs_diff(&a) < 1e-9);
        }
    }

    #[test]
    fn weigert_ranks() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let dirs: Vec<[f64; 3]> = (0..4)
            .map(|_| {
                let v: [f64; 3] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
                let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                [v[0] / n, v[1] / n, v[2] / n]
            })
            .collect();
        let s = weigert_spin_quorum(TwiceSpin(1), &dirs).unwrap();
        assert_eq!(irreducibility_rank(&s).rank, 4);

        let same = weigert_spin_quorum(TwiceSpin(1), &[[0.0, 0.0, 1.0]; 4]).unwrap();
        assert_eq!(irreducibility_rank(&same).rank, 1);

        let spin1 = weigert_spin_quorum(TwiceSpin(2), &spiral_directions(9)).unwrap();
        assert_eq!(irreducibility_rank(&spin1).rank, 9);
        let b = pseudoinverse_dual(&spin1).unwrap();
        assert!(check_biorthogonality(&spin1, &b, 1e-8).unwrap().pass);

        assert!(weigert_spin_quorum(TwiceSpin(2), &spiral_directions(8)).is_err());
    }

    #[test]
    fn spiral_points_are_unit() {
        for n in spiral_directions(25) {
            assert!((n[0] * n[0] + n[1] * n[1] + n[2] * n[2] - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn span_dual_of_projectors_is_self_dual() {
        let s = SpanningSet::new(
            Family::from_operators("proj", (0..3).map(|k| Operator::matrix_unit(3, k, k)).collect()).unwrap(),
        );
        let b = span_dual(&s).unwrap();
        assert!(max_dual_diff(&b, &s.self_dual()) < 1e-12);
        let skew = SpanningSet::from_operators("skew", {
            let mut ops = pauli_over_root2();
            ops[1] = &ops[1] + &ops[0];
            ops
        })
        .unwrap();
        assert!(max_dual_diff(&span_dual(&skew).unwrap(), &pseudoinverse_dual(&skew).unwrap()) < 1e-10);
    }
}
