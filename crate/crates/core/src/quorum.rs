//! Built-in finite quorums, described declaratively and expanded to spanning sets.

use crate::dualbasis::{spiral_directions, weigert_spin_quorum};
use crate::error::{Error, Result};
use crate::frames::{Family, FrameElement, SettingLabel, SpanningSet};
use crate::oscore::{spin_matrices, Operator, TwiceSpin};
use crate::special::displacement_block;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum QuorumDescriptor {
    /// `{sigma_x, sigma_y, sigma_z, I} / sqrt 2`, orthonormal and self-dual.
    Pauli,
    /// Clock-shift unitaries `X^a Z^b / sqrt d`, orthonormal.
    WeylClockShift { dim: usize },
    /// Eigenprojectors of the number operator: satisfies the trace condition
    /// but spans only the diagonal.
    ObservableProjectors { dim: usize },
    /// Spin-coherent projectors along given directions, or a spiral set.
    Weigert {
        twice_s: TwiceSpin,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        directions: Option<Vec<[f64; 3]>>,
    },
    /// Displacements `D(alpha)` on a `points x points` square grid of
    /// half-width `radius`, weights `cell area / pi`.
    ///
    /// Elements are the compressions `P D(alpha) P` of the exact operator.
    /// Exponentials of the truncated generator span only the Weyl-symmetrized
    /// polynomials in `a`, `a^dag`, which miss part of the operator space.
    DisplacementGrid { dim: usize, radius: f64, points: usize },
    /// Matrix units `|n><m|`.
    FockUnits { dim: usize },
}

impl QuorumDescriptor {
    pub fn id(&self) -> &'static str {
        match self {
            Self::Pauli => "pauli",
            Self::WeylClockShift { .. } => "weyl_clock_shift",
            Self::ObservableProjectors { .. } => "observable_projectors",
            Self::Weigert { .. } => "weigert",
            Self::DisplacementGrid { .. } => "displacement_grid",
            Self::FockUnits { .. } => "fock_units",
        }
    }

    pub fn build(&self) -> Result<SpanningSet> {
        match self {
            Self::Pauli => {
                let (sx, sy, sz) = spin_matrices(TwiceSpin(1));
                let r = 2f64.sqrt();
                let ops = vec![
                    sx.scale_real(r),
                    sy.scale_real(r),
                    sz.scale_real(r),
                    Operator::identity(2).scale_real(1.0 / r),
                ];
                // coordinate 0..3 = x, y, z, identity
                let elements = ops
                    .into_iter()
                    .enumerate()
                    .map(|(k, operator)| FrameElement {
                        label: SettingLabel::new(self.id(), vec![k as f64]),
                        weight: 1.0,
                        operator,
                    })
                    .collect();
                Family::new(2, elements).map(SpanningSet::new)
            }
            Self::WeylClockShift { dim } => {
                let d = positive(*dim)?;
                let omega = 2.0 * std::f64::consts::PI / d as f64;
                let norm = 1.0 / (d as f64).sqrt();
                let mut elements = Vec::with_capacity(d * d);
                for a in 0..d {
                    for b in 0..d {
                        // X^a Z^b |j> = w^{bj} |j + a>
                        let operator = Operator::from_fn(d, |i, j| {
                            if i == (j + a) % d {
                                C64::from_polar(norm, omega * (b * j) as f64)
                            } else {
                                C64::new(0.0, 0.0)
                            }
                        });
                        elements.push(FrameElement {
                            label: SettingLabel::new(self.id(), vec![a as f64, b as f64]),
                            weight: 1.0,
                            operator,
                        });
                    }
                }
                Family::new(d, elements).map(SpanningSet::new)
            }
            Self::ObservableProjectors { dim } => {
                let d = positive(*dim)?;
                let elements = (0..d)
                    .map(|k| FrameElement {
                        label: SettingLabel::new(self.id(), vec![k as f64]),
                        weight: 1.0,
                        operator: Operator::matrix_unit(d, k, k),
                    })
                    .collect();
                Family::new(d, elements).map(SpanningSet::new)
            }
            Self::Weigert { twice_s, directions } => {
                let dirs = match directions {
                    Some(d) => d.clone(),
                    None => spiral_directions(twice_s.dim() * twice_s.dim()),
                };
                weigert_spin_quorum(*twice_s, &dirs)
            }
            Self::DisplacementGrid { dim, radius, points } => {
                let d = positive(*dim)?;
                if *points < 2 || !(*radius > 0.0) {
                    return Err(Error::InvalidSpec("displacement grid needs points >= 2 and radius > 0".into()));
                }
                let h = 2.0 * radius / (*points - 1) as f64;
                let weight = h * h / std::f64::consts::PI;
                let mut elements = Vec::with_capacity(points * points);
                for i in 0..*points {
                    for j in 0..*points {
                        let alpha = C64::new(-radius + i as f64 * h, -radius + j as f64 * h);
                        let operator = Operator::new(displacement_block(alpha, d))?;
                        elements.push(FrameElement {
                            label: SettingLabel::new(self.id(), vec![alpha.re, alpha.im]),
                            weight,
                            operator,
                        });
                    }
                }
                Family::new(d, elements).map(SpanningSet::new)
            }
            Self::FockUnits { dim } => {
                let d = positive(*dim)?;
                let mut elements = Vec::with_capacity(d * d);
                for n in 0..d {
                    for m in 0..d {
                        elements.push(FrameElement {
                            label: SettingLabel::new(self.id(), vec![n as f64, m as f64]),
                            weight: 1.0,
                            operator: Operator::matrix_unit(d, n, m),
                        });
                    }
                }
                Family::new(d, elements).map(SpanningSet::new)
            }
        }
    }
}

fn positive(dim: usize) -> Result<usize> {
    if dim == 0 {
        Err(Error::InvalidSpec("dimension must be at least 1".into()))
    } else {
        Ok(dim)
    }
}
