//! Interior trace identities and the closed-manifold integrand.
//!
//! The trace expansions are recomputed from first principles (blade products
//! for the curvature term, perfect matchings for the rest) and compared with
//! the transcribed right-hand sides; the integrand of the closed-manifold
//! theorem is then assembled from `tr(s/6 + E)` with the curvature endomorphism
//! supplied as a built-in formal expression.

use crate::clifford::{abstract_trace, tr_id, CliffordElem};
use crate::error::PipelineError;
use crate::formal::{gpair, rcurv, FormalPoly, Gen, VecLabel};
use crate::scalar::Scalar;

/// One verified trace identity: left side computed from first principles,
/// right side transcribed.
pub struct TraceIdentity {
    pub id: &'static str,
    pub lhs: FormalPoly,
    pub rhs: FormalPoly,
}

fn coordinate_trace(n: u8, idx: &[u8]) -> Scalar {
    let mut prod = CliffordElem::<Scalar>::scalar(n, Scalar::one());
    for &i in idx {
        prod = prod.mul(&CliffordElem::gamma(n, i, Scalar::one()));
    }
    prod.trace()
}

/// `Σ tr[R(J e_i, J e_j, e_k, e_l) c_i c_j c_k c_l]` against
/// `2 Σ R(J e_i, J e_j, e_j, e_i) · tr[id]`.
fn identity_curvature(n: u8) -> TraceIdentity {
    let mut lhs = FormalPoly::zero();
    for i in 1..=n {
        for j in 1..=n {
            for k in 1..=n {
                for l in 1..=n {
                    let t = coordinate_trace(n, &[i, j, k, l]);
                    if t.is_zero() {
                        continue;
                    }
                    lhs = lhs.add(
                        &FormalPoly::from_canon(
                            n,
                            rcurv(VecLabel::J(i), VecLabel::J(j), VecLabel::E(k), VecLabel::E(l)),
                        )
                        .scale(&t),
                    );
                }
            }
        }
    }
    let mut rhs = FormalPoly::zero();
    for i in 1..=n {
        for j in 1..=n {
            rhs = rhs.add(&FormalPoly::from_canon(
                n,
                rcurv(VecLabel::J(i), VecLabel::J(j), VecLabel::E(j), VecLabel::E(i)),
            ));
        }
    }
    let rhs = rhs.scale(&Scalar::from_i64(2 * tr_id(n) as i64));
    TraceIdentity { id: "curvature-trace", lhs, rhs }
}

/// `Σ tr[c((∇_j J)e_ν) c((∇_ν J)e_j)]` against the pairing sum.
fn identity_gradient_cross(n: u8) -> TraceIdentity {
    let mut lhs = FormalPoly::zero();
    let mut rhs = FormalPoly::zero();
    for v in 1..=n {
        for j in 1..=n {
            lhs = lhs.add(&abstract_trace(n, &[VecLabel::NablaJ(j, v), VecLabel::NablaJ(v, j)]));
            rhs = rhs.sub(
                &FormalPoly::from_canon(n, gpair(VecLabel::NablaJ(j, v), VecLabel::NablaJ(v, j)))
                    .scale(&Scalar::from_i64(tr_id(n) as i64)),
            );
        }
    }
    TraceIdentity { id: "gradient-cross-trace", lhs, rhs }
}

/// `Σ tr[c(J e_ν) c(W_{ν j})]` with the second-derivative combination kept
/// as a single label.
fn identity_hessian(n: u8) -> TraceIdentity {
    let mut lhs = FormalPoly::zero();
    let mut rhs = FormalPoly::zero();
    for v in 1..=n {
        for j in 1..=n {
            lhs = lhs.add(&abstract_trace(n, &[VecLabel::J(v), VecLabel::Hess(v, j)]));
            rhs = rhs.sub(
                &FormalPoly::from_canon(n, gpair(VecLabel::J(v), VecLabel::Hess(v, j)))
                    .scale(&Scalar::from_i64(tr_id(n) as i64)),
            );
        }
    }
    TraceIdentity { id: "hessian-trace", lhs, rhs }
}

/// Four-factor identity: the matching expansion against the three-pairing
/// combination, with the isometry pairing collapsing the middle term.
fn identity_quartic(n: u8) -> TraceIdentity {
    let mut lhs = FormalPoly::zero();
    for al in 1..=n {
        for v in 1..=n {
            for j in 1..=n {
                lhs = lhs.add(&abstract_trace(
                    n,
                    &[
                        VecLabel::J(al),
                        VecLabel::NablaJ(al, j),
                        VecLabel::J(v),
                        VecLabel::NablaJ(v, j),
                    ],
                ));
            }
        }
    }
    let rhs = quartic_rhs(n);
    TraceIdentity { id: "quartic-trace", lhs, rhs }
}

fn quartic_rhs(n: u8) -> FormalPoly {
    let gp = |u, v| FormalPoly::from_canon(n, gpair(u, v));
    let mut rhs = FormalPoly::zero();
    for al in 1..=n {
        for v in 1..=n {
            for j in 1..=n {
                rhs = rhs.add(
                    &gp(VecLabel::J(al), VecLabel::NablaJ(v, j))
                        .mul(&gp(VecLabel::NablaJ(al, j), VecLabel::J(v))),
                );
                rhs = rhs.add(
                    &gp(VecLabel::J(al), VecLabel::NablaJ(al, j))
                        .mul(&gp(VecLabel::J(v), VecLabel::NablaJ(v, j))),
                );
            }
        }
    }
    for v in 1..=n {
        for j in 1..=n {
            rhs = rhs.sub(&gp(VecLabel::NablaJ(v, j), VecLabel::NablaJ(v, j)));
        }
    }
    rhs.scale(&Scalar::from_i64(tr_id(n) as i64))
}

/// The four trace identities used by the interior assembly, left sides from
/// first principles, right sides transcribed.
pub fn interior_trace_identities(n: u8) -> Vec<TraceIdentity> {
    vec![
        identity_curvature(n),
        identity_gradient_cross(n),
        identity_hessian(n),
        identity_quartic(n),
    ]
}

/// A named term class of the interior integrand with its coefficient
/// (per spinor-trace unit `2^{n/2}`).
pub struct InteriorClass {
    pub id: &'static str,
    pub coefficient: Scalar,
    pub class: FormalPoly,
}

/// The interior integrand assembled two ways: from the endomorphism trace
/// computed by first principles, and from the transcribed coefficient table.
pub struct InteriorAssembly {
    pub n: u8,
    /// Global prefactor `(n−2)(4π)^{n/2}/((n/2−1)!)`.
    pub prefactor: Scalar,
    /// `tr(s/6 + E)` computed from the trace machinery.
    pub from_traces: FormalPoly,
    /// `2^{n/2} Σ c_k · class_k` from the transcribed table.
    pub from_table: FormalPoly,
    pub classes: Vec<InteriorClass>,
}

/// Interior classes with their transcribed coefficients.
pub fn interior_classes(n: u8) -> Vec<InteriorClass> {
    let gp = |u, v| FormalPoly::from_canon(n, gpair(u, v));
    let mut curvature = FormalPoly::zero();
    let mut grad_cross = FormalPoly::zero();
    let mut hessian = FormalPoly::zero();
    let mut mixed = FormalPoly::zero();
    let mut aligned = FormalPoly::zero();
    let mut grad_norm = FormalPoly::zero();
    for i in 1..=n {
        for j in 1..=n {
            curvature = curvature.add(&FormalPoly::from_canon(
                n,
                rcurv(VecLabel::J(i), VecLabel::J(j), VecLabel::E(j), VecLabel::E(i)),
            ));
            grad_cross =
                grad_cross.add(&gp(VecLabel::NablaJ(j, i), VecLabel::NablaJ(i, j)));
            hessian = hessian.add(&gp(VecLabel::J(i), VecLabel::Hess(i, j)));
            grad_norm = grad_norm.add(&gp(VecLabel::NablaJ(i, j), VecLabel::NablaJ(i, j)));
            for al in 1..=n {
                mixed = mixed.add(
                    &gp(VecLabel::J(al), VecLabel::NablaJ(i, j))
                        .mul(&gp(VecLabel::NablaJ(al, j), VecLabel::J(i))),
                );
                aligned = aligned.add(
                    &gp(VecLabel::J(al), VecLabel::NablaJ(al, j))
                        .mul(&gp(VecLabel::J(i), VecLabel::NablaJ(i, j))),
                );
            }
        }
    }
    vec![
        InteriorClass { id: "curvature", coefficient: Scalar::ratio(1, 4), class: curvature },
        InteriorClass { id: "gradient-cross", coefficient: Scalar::ratio(-1, 2), class: grad_cross },
        InteriorClass { id: "hessian", coefficient: Scalar::ratio(-1, 2), class: hessian },
        InteriorClass { id: "mixed-product", coefficient: Scalar::ratio(-1, 4), class: mixed },
        InteriorClass { id: "aligned-product", coefficient: Scalar::ratio(-1, 4), class: aligned },
        InteriorClass { id: "gradient-norm", coefficient: Scalar::ratio(1, 4), class: grad_norm },
        InteriorClass {
            id: "scalar-curvature",
            coefficient: Scalar::ratio(-1, 12),
            class: FormalPoly::gen(n, Gen::S),
        },
    ]
}

/// Assembles `tr(s/6 + E)` from the built-in endomorphism expression and
/// checks it against the transcribed coefficient table.
pub fn interior_assembly(n: u8) -> Result<InteriorAssembly, PipelineError> {
    if n != 4 {
        return Err(PipelineError::UnsupportedDim(n));
    }
    let trid = Scalar::from_i64(tr_id(n) as i64);

    // tr E, term by term from the built-in expression of the endomorphism:
    //   E = 1/8 Σ R(Je_i, Je_j, e_k, e_l) c_i c_j c_k c_l
    //     + 1/2 Σ c((∇_j J)e_ν) c((∇_ν J)e_j)
    //     + 1/2 Σ c(J e_ν) c(W_{ν j})
    //     − 1/4 Σ c(J e_α) c((∇_α J)e_j) c(J e_ν) c((∇_ν J)e_j)
    //     − s/4.
    let curv = identity_curvature(n);
    let grad = identity_gradient_cross(n);
    let hess = identity_hessian(n);
    let quart = identity_quartic(n);
    let s_poly = FormalPoly::gen(n, Gen::S);
    let mut from_traces = curv.lhs.scale(&Scalar::ratio(1, 8));
    from_traces = from_traces.add(&grad.lhs.scale(&Scalar::ratio(1, 2)));
    from_traces = from_traces.add(&hess.lhs.scale(&Scalar::ratio(1, 2)));
    from_traces = from_traces.add(&quart.lhs.scale(&Scalar::ratio(-1, 4)));
    from_traces = from_traces.add(&s_poly.scale(&Scalar::ratio(-1, 4).mul(&trid)));
    // + tr(s/6)
    from_traces = from_traces.add(&s_poly.scale(&Scalar::ratio(1, 6).mul(&trid)));

    let classes = interior_classes(n);
    let mut from_table = FormalPoly::zero();
    for c in &classes {
        from_table = from_table.add(&c.class.scale(&c.coefficient));
    }
    let from_table = from_table.scale(&trid);

    // (n−2)(4π)^{n/2} / ((n/2 − 1)!) = 32π² in dimension four.
    let prefactor = Scalar::pi_pow(2).mul(&Scalar::from_i64(32));
    Ok(InteriorAssembly { n, prefactor, from_traces, from_table, classes })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_identities_hold_exactly() {
        for id in interior_trace_identities(4) {
            assert_eq!(id.lhs, id.rhs, "{}", id.id);
        }
        for id in interior_trace_identities(3) {
            assert_eq!(id.lhs, id.rhs, "{} (n=3)", id.id);
        }
    }

    #[test]
    fn integrand_matches_coefficient_table() {
        let asm = interior_assembly(4).unwrap();
        assert_eq!(asm.from_traces, asm.from_table);
        assert_eq!(asm.prefactor, Scalar::pi_pow(2).mul(&Scalar::from_i64(32)));
    }

    #[test]
    fn fixed_coefficients() {
        let asm = interior_assembly(4).unwrap();
        let expected: Vec<(&str, Scalar)> = vec![
            ("curvature", Scalar::ratio(1, 4)),
            ("gradient-cross", Scalar::ratio(-1, 2)),
            ("hessian", Scalar::ratio(-1, 2)),
            ("mixed-product", Scalar::ratio(-1, 4)),
            ("aligned-product", Scalar::ratio(-1, 4)),
            ("gradient-norm", Scalar::ratio(1, 4)),
            ("scalar-curvature", Scalar::ratio(-1, 12)),
        ];
        for (cls, (id, c)) in asm.classes.iter().zip(expected) {
            assert_eq!(cls.id, id);
            assert_eq!(cls.coefficient, c, "{id}");
        }
    }

    #[test]
    fn interior_restricted_to_dimension_four() {
        assert!(interior_assembly(3).is_err());
    }
}
