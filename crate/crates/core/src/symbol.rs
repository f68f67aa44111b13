//! Symbols of the twisted Dirac operator and its parametrix, the graded
//! composition formula, and the boundary-point evaluation rules.
//!
//! On the general track a symbol component is a Clifford element whose
//! coefficients are `num / |ξ|^{2m}` with `num` a formal polynomial in the
//! full cotangent variable (the tangential norm square is kept atomic).
//! Restriction to the boundary sphere `|ξ'| = 1` turns each coefficient into
//! a rational function of the normal variable alone, with `|ξ|² ↦ 1 + ξ_n²`.
//!
//! The x-derivatives implement the boundary rules at the base point: only the
//! normal derivative survives on the metric data, contributing `h'(0)|ξ'|²`
//! on `|ξ|²` and `½h'(0)` per tangential Clifford generator.

use std::fmt;

use crate::clifford::{CliffordElem, CoeffRing};
use crate::error::{PolyError, SymbolError, XiError};
use crate::formal::{FormalPoly, Gen};
use crate::scalar::Scalar;
use crate::xi::{RatXi, XiPoly};

/// Coefficient `num / |ξ|^{2·pow}` on the general (unrestricted) track.
#[derive(Clone, PartialEq, Debug)]
pub struct GenRat {
    pub num: FormalPoly,
    pub pow: u32,
}

impl GenRat {
    pub fn poly(num: FormalPoly) -> Self {
        GenRat { num, pow: 0 }
    }

    fn lift(&self, target: u32, n: u8) -> FormalPoly {
        let mut num = self.num.clone();
        for _ in self.pow..target {
            num = num.mul(&xi_norm_sq(n));
        }
        num
    }
}

/// `|ξ|² = |ξ'|² + ξ_n²` with the tangential part atomic.
pub fn xi_norm_sq(n: u8) -> FormalPoly {
    FormalPoly::gen(n, Gen::XiPrimeSq)
        .add(&FormalPoly::gen(n, Gen::XiN).mul_gen(Gen::XiN))
}

// The ring operations need the dimension to lift denominators; it is read
// off the numerators, which always carry a dimension tag in pipeline use.
fn dim_of(a: &GenRat, b: &GenRat) -> u8 {
    a.num.dim.or(b.num.dim).unwrap_or(0)
}

impl CoeffRing for GenRat {
    fn zero() -> Self {
        GenRat { num: FormalPoly::zero(), pow: 0 }
    }
    fn is_zero(&self) -> bool {
        self.num.is_zero()
    }
    fn add(&self, rhs: &Self) -> Self {
        let n = dim_of(self, rhs);
        let pow = self.pow.max(rhs.pow);
        GenRat { num: self.lift(pow, n).add(&rhs.lift(pow, n)), pow }
    }
    fn neg(&self) -> Self {
        GenRat { num: self.num.neg(), pow: self.pow }
    }
    fn mul(&self, rhs: &Self) -> Self {
        GenRat { num: self.num.mul(&rhs.num), pow: self.pow + rhs.pow }
    }
}

impl fmt::Display for GenRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pow == 0 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({}) / |xi|^{}", self.num, 2 * self.pow)
        }
    }
}

/// Symbol component on the general track.
pub type GeneralSymbol = CliffordElem<GenRat>;

/// Symbol component restricted to the base point and `|ξ'| = 1`.
pub type BoundarySymbol = CliffordElem<RatXi>;

/// A graded symbol component with its homogeneity order and evaluation tag.
#[derive(Clone, PartialEq, Debug)]
pub struct SymbolTerm {
    pub order: i32,
    /// Whether x-dependent data has already been evaluated at the base point.
    pub at_base_point: bool,
    pub value: GeneralSymbol,
}

fn xi_component(n: u8, p: u8) -> FormalPoly {
    if p == n {
        FormalPoly::gen(n, Gen::XiN)
    } else {
        FormalPoly::gen(n, Gen::XiT(p))
    }
}

/// `c[J(dx_p)] = Σ_h a_h^p c(dx_h)` (subscript is the component index).
pub fn j_covector(n: u8, p: u8) -> CliffordElem<FormalPoly> {
    CliffordElem::linear(n, (1..=n).map(|h| (h, FormalPoly::gen(n, Gen::A(h, p)))))
}

/// `c[J(e_v)] = Σ_μ a_v^μ c(dx_μ)` (subscript is the frame index).
pub fn j_frame_vector(n: u8, v: u8) -> CliffordElem<FormalPoly> {
    CliffordElem::linear(n, (1..=n).map(|mu| (mu, FormalPoly::gen(n, Gen::A(v, mu)))))
}

/// `c[J(ξ)] = Σ_p ξ_p c[J(dx_p)]`.
pub fn j_xi(n: u8) -> CliffordElem<FormalPoly> {
    let mut out = CliffordElem::zero(n);
    for p in 1..=n {
        let xi_p = xi_component(n, p);
        for (mask, c) in j_covector(n, p).terms() {
            out.insert(*mask, c.mul(&xi_p));
        }
    }
    out
}

fn promote(e: &CliffordElem<FormalPoly>) -> GeneralSymbol {
    e.map_coeffs(|c| GenRat::poly(c.clone()))
}

/// Leading symbol of the twisted operator: `i·c[J(ξ)]`, order 1.
pub fn leading_symbol(n: u8) -> SymbolTerm {
    let value = promote(&j_xi(n)).scale_scalar(&Scalar::i());
    SymbolTerm { order: 1, at_base_point: false, value }
}

/// Order-zero symbol evaluated at the base point:
/// `−¼ h'(0) Σ_{i<n} c[J(e_i)] c(e_n) c(e_i)`.
pub fn subleading_symbol_x0(n: u8) -> SymbolTerm {
    let mut acc: CliffordElem<FormalPoly> = CliffordElem::zero(n);
    for i in 1..n {
        let cn = CliffordElem::gamma(n, n, FormalPoly::one());
        let ci = CliffordElem::gamma(n, i, FormalPoly::one());
        acc = acc.add(&j_frame_vector(n, i).mul(&cn).mul(&ci));
    }
    let hp = FormalPoly::gen(n, Gen::HP).scale(&Scalar::ratio(-1, 4));
    let value = promote(&acc.map_coeffs(|c| c.mul(&hp)));
    SymbolTerm { order: 0, at_base_point: true, value }
}

impl GeneralSymbol {
    pub fn scale_scalar(&self, s: &Scalar) -> GeneralSymbol {
        self.map_coeffs(|c| GenRat { num: c.num.scale(s), pow: c.pow })
    }

    /// ξ-derivative in direction `j` (1-based; `j = n` is the normal one).
    pub fn dxi(&self, n: u8, j: u8) -> GeneralSymbol {
        let mut out = CliffordElem::zero(self.n);
        let xi_j = xi_component(n, j);
        for (mask, c) in self.terms() {
            let dnum = if j == n { c.num.diff_xi_n() } else { c.num.diff_xi_t(j) };
            out.insert(*mask, GenRat { num: dnum, pow: c.pow });
            if c.pow > 0 {
                let extra = c
                    .num
                    .mul(&xi_j)
                    .scale(&Scalar::from_i64(-2 * c.pow as i64));
                out.insert(*mask, GenRat { num: extra, pow: c.pow + 1 });
            }
        }
        out
    }

    /// x-derivative in direction `j` evaluated at the base point.
    ///
    /// Structure entries map to derivative symbols in every direction; the
    /// normal direction additionally differentiates the metric data:
    /// `∂_n |ξ|² = h'(0)|ξ'|²` and `∂_n c(dx_h) = ½h'(0) c(dx_h)` for
    /// tangential `h`.
    pub fn dx_boundary(&self, n: u8, j: u8) -> Result<GeneralSymbol, PolyError> {
        let mut out = CliffordElem::zero(self.n);
        let tangential_mask: u8 = (1u8 << (n - 1)) - 1;
        for (mask, c) in self.terms() {
            out.insert(*mask, GenRat { num: c.num.diff_x(j)?, pow: c.pow });
            if j == n {
                if c.pow > 0 {
                    let extra = c
                        .num
                        .mul_gen(Gen::HP)
                        .mul_gen(Gen::XiPrimeSq)
                        .scale(&Scalar::from_i64(-(c.pow as i64)));
                    out.insert(*mask, GenRat { num: extra, pow: c.pow + 1 });
                }
                let t = (mask & tangential_mask).count_ones() as i64;
                if t > 0 {
                    let extra = c
                        .num
                        .mul_gen(Gen::HP)
                        .scale(&Scalar::ratio(t, 2));
                    out.insert(*mask, GenRat { num: extra, pow: c.pow });
                }
            }
        }
        Ok(out)
    }

    /// Restriction to the base point sphere `|ξ'| = 1`: `|ξ|² ↦ 1 + ξ_n²`,
    /// the atomic tangential norm square goes to one, and the normal-variable
    /// powers move into the numerator polynomial.
    pub fn restrict_to_sphere(&self) -> Result<BoundarySymbol, XiError> {
        let mut out = CliffordElem::zero(self.n);
        for (mask, c) in self.terms() {
            let flat = c.num.restrict_xi_prime();
            let mut coeffs: Vec<FormalPoly> = Vec::new();
            for (deg, rest, scal) in flat.split_xin() {
                let deg = deg as usize;
                if coeffs.len() <= deg {
                    coeffs.resize(deg + 1, FormalPoly::zero());
                }
                let piece = FormalPoly::from_terms(flat.dim, [(rest, scal)]);
                coeffs[deg] = coeffs[deg].add(&piece);
            }
            let rat = RatXi::new(XiPoly::from_coeffs(coeffs), c.pow, c.pow);
            rat.validate()?;
            out.insert(*mask, rat);
        }
        Ok(out)
    }

    /// Zero test modulo the structure relations via the directed rewriter,
    /// with the tangential norm square expanded so both spellings of `|ξ'|²`
    /// unify.  Suitable for coefficients in which the relations appear as
    /// clean contracted patterns.
    pub fn is_zero_mod_relations(&self, n: u8) -> bool {
        self.terms().all(|(_, c)| {
            c.num.expand_xi_prime(n).substitute_j_relations().is_zero()
        })
    }

    /// Zero test modulo the structure relations by randomized exact
    /// evaluation on the constraint variety; handles the large composition
    /// residuals where pattern rewriting is not practical.
    pub fn is_zero_on_variety(&self, n: u8) -> bool {
        self.terms().all(|(_, c)| c.num.is_zero_on_structure_variety(n))
    }

    /// Exact substitution of the identity structure: `a_β^p ↦ δ_βp`, all
    /// derivative entries to zero.
    pub fn with_identity_structure(&self) -> GeneralSymbol {
        self.map_coeffs(|c| GenRat {
            num: c.num.subst_structure(
                &|b, p| if b == p { Scalar::one() } else { Scalar::zero() },
                &|_, _, _| Scalar::zero(),
            ),
            pow: c.pow,
        })
    }
}

impl BoundarySymbol {
    pub fn dxi_n(&self) -> BoundarySymbol {
        self.map_coeffs(|c| c.dxi())
    }

    pub fn pi_plus(&self) -> Result<BoundarySymbol, XiError> {
        self.try_map_coeffs(|c| c.pi_plus())
    }
}

impl CoeffRing for RatXi {
    fn zero() -> Self {
        RatXi::zero()
    }
    fn is_zero(&self) -> bool {
        RatXi::is_zero(self)
    }
    fn add(&self, rhs: &Self) -> Self {
        RatXi::add(self, rhs)
    }
    fn neg(&self) -> Self {
        RatXi::neg(self)
    }
    fn mul(&self, rhs: &Self) -> Self {
        RatXi::mul(self, rhs)
    }
}

/// Parametrix components of orders −1 and −2.
///
/// The leading inversion uses the Clifford identity `p₁² = |ξ|²` (checked
/// against the structure relations), so `q₋₁ = p₁ / |ξ|²`; the next order
/// comes from the composition formula,
/// `q₋₂ = −q₋₁·(p₀ q₋₁ + Σ_j ∂_{ξ_j} p₁ · D_{x_j} q₋₁)` with `D_x = −i ∂_x`.
pub fn parametrix(n: u8) -> Result<(SymbolTerm, SymbolTerm), SymbolError> {
    let p1 = leading_symbol(n);
    let id = CliffordElem::scalar(n, GenRat { num: xi_norm_sq(n), pow: 0 });
    let defect = p1.value.mul(&p1.value).sub(&id);
    if !defect.is_zero_on_variety(n) {
        return Err(SymbolError::LeadingIdentity);
    }
    let q1_value = p1.value.map_coeffs(|c| GenRat { num: c.num.clone(), pow: c.pow + 1 });
    let q1 = SymbolTerm { order: -1, at_base_point: false, value: q1_value };

    let p0 = subleading_symbol_x0(n);
    let mut bracket = p0.value.mul(&q1.value);
    for j in 1..=n {
        let dxi_p1 = p1.value.dxi(n, j);
        let dx_q1 = q1.value.dx_boundary(n, j)?.scale_scalar(&Scalar::i().neg());
        bracket = bracket.add(&dxi_p1.mul(&dx_q1));
    }
    let q2_value = q1.value.mul(&bracket).neg();
    let q2 = SymbolTerm { order: -2, at_base_point: true, value: q2_value };
    Ok((q1, q2))
}

/// Graded composition `σ(A∘B) = Σ_α (1/α!) ∂_ξ^α σ(A) · D_x^α σ(B)`,
/// collecting the requested output orders.  Errors when a needed component
/// of `B` lies below the available truncation.
pub fn compose_symbols(
    n: u8,
    a: &[SymbolTerm],
    b: &[SymbolTerm],
    want: &[i32],
) -> Result<Vec<SymbolTerm>, SymbolError> {
    let b_min = b.iter().map(|t| t.order).min().unwrap_or(0);
    let mut out: Vec<SymbolTerm> = want
        .iter()
        .map(|&o| SymbolTerm {
            order: o,
            at_base_point: true,
            value: CliffordElem::zero(n),
        })
        .collect();
    // Multi-indices up to |α| = 2 cover every symbol polynomial in ξ of
    // degree ≤ 2; the twisted symbols are at most linear.
    let mut alphas: Vec<(Vec<u8>, u32)> = vec![(vec![], 1)];
    for j in 1..=n {
        alphas.push((vec![j], 1));
        for k in j..=n {
            alphas.push((vec![j, k], if j == k { 2 } else { 1 }));
        }
    }
    for &o in want {
        for ta in a {
            for (alpha, fact) in &alphas {
                let need_b = o - ta.order + alpha.len() as i32;
                if need_b > -1 {
                    continue;
                }
                match b.iter().find(|t| t.order == need_b) {
                    Some(tb) => {
                        let mut da = ta.value.clone();
                        for &j in alpha {
                            da = da.dxi(n, j);
                        }
                        if da.is_zero() {
                            continue;
                        }
                        let mut db = tb.value.clone();
                        for &j in alpha {
                            db = db.dx_boundary(n, j)?.scale_scalar(&Scalar::i().neg());
                        }
                        let term = da
                            .mul(&db)
                            .scale_scalar(&Scalar::ratio(1, *fact as i64));
                        let slot = out.iter_mut().find(|t| t.order == o).unwrap();
                        slot.value = slot.value.add(&term);
                    }
                    None if need_b >= b_min => continue,
                    None => {
                        // A genuinely deeper component would contribute.
                        let mut da = ta.value.clone();
                        for &j in alpha {
                            da = da.dxi(n, j);
                        }
                        if da.is_zero() {
                            continue;
                        }
                        return Err(SymbolError::TruncationTooShallow(need_b));
                    }
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::tr_id;

    #[test]
    fn leading_symbol_with_identity_structure_is_clifford_xi() {
        let n = 4;
        let p1 = leading_symbol(n).value.with_identity_structure();
        let mut expect: GeneralSymbol = CliffordElem::zero(n);
        for p in 1..=n {
            expect.insert(
                1 << (p - 1),
                GenRat::poly(xi_component(n, p).scale(&Scalar::i())),
            );
        }
        assert!(p1.sub(&expect).is_zero());
    }

    #[test]
    fn leading_square_is_norm_after_relations() {
        let n = 4;
        let p1 = leading_symbol(n).value;
        let sq = p1.mul(&p1);
        let id = CliffordElem::scalar(n, GenRat { num: xi_norm_sq(n), pow: 0 });
        assert!(sq.sub(&id).is_zero_mod_relations(n));
        // Not structurally zero: the identity genuinely needs the relations.
        assert!(!sq.sub(&id).is_zero());
    }

    #[test]
    fn parametrix_inverts_leading_order() {
        let n = 4;
        let (q1, _) = parametrix(n).unwrap();
        let p1 = leading_symbol(n);
        let prod = p1.value.mul(&q1.value);
        let one = CliffordElem::scalar(n, GenRat::poly(FormalPoly::one()));
        assert!(prod.sub(&one).is_zero_mod_relations(n));
    }

    #[test]
    fn parametrix_defect_vanishes_to_order_minus_one() {
        let n = 4;
        let (q1, q2) = parametrix(n).unwrap();
        let p1 = leading_symbol(n);
        let p0 = subleading_symbol_x0(n);
        let out = compose_symbols(n, &[p1, p0], &[q1, q2], &[0, -1]).unwrap();
        let one = CliffordElem::scalar(n, GenRat::poly(FormalPoly::one()));
        for t in &out {
            match t.order {
                0 => assert!(t.value.sub(&one).is_zero_on_variety(n), "order 0"),
                -1 => assert!(t.value.is_zero_on_variety(n), "order -1"),
                _ => unreachable!(),
            }
        }
    }

    #[test]
    fn composition_deeper_order_errors() {
        let n = 4;
        let (q1, q2) = parametrix(n).unwrap();
        let p1 = leading_symbol(n);
        let err = compose_symbols(n, &[p1], &[q1, q2], &[-2]);
        assert!(matches!(err, Err(SymbolError::TruncationTooShallow(-3))));
    }

    #[test]
    fn untwisted_parametrix_leading_term() {
        let n = 4;
        let (q1, _) = parametrix(n).unwrap();
        let got = q1.value.with_identity_structure();
        let mut expect: GeneralSymbol = CliffordElem::zero(n);
        for p in 1..=n {
            expect.insert(
                1 << (p - 1),
                GenRat { num: xi_component(n, p).scale(&Scalar::i()), pow: 1 },
            );
        }
        assert!(got.sub(&expect).is_zero());
    }

    #[test]
    fn boundary_x_derivative_of_leading_inverse() {
        // Tangential direction: only structure-derivative terms; sphere
        // restriction leaves |ξ|² ↦ 1 + ξ_n² in place.
        let n = 4;
        let (q1, _) = parametrix(n).unwrap();
        let d = q1.value.dx_boundary(n, 1).unwrap();
        let restricted = d.restrict_to_sphere().unwrap();
        // Coefficient of c(dx_2): i Σ_p ξ_p ∂_1(a_2^p) / (1+ξ_n²).
        let c = restricted.coeff(1 << 1);
        let mut tang = FormalPoly::zero();
        for p in 1..n {
            tang = tang.add(
                &FormalPoly::gen(n, Gen::XiT(p))
                    .mul_gen(Gen::DA(1, 2, p))
                    .scale(&Scalar::i()),
            );
        }
        let expect = RatXi::new(
            XiPoly::from_coeffs(vec![
                tang,
                FormalPoly::gen(n, Gen::DA(1, 2, n)).scale(&Scalar::i()),
            ]),
            1,
            1,
        );
        assert_eq!(c, expect);
    }

    #[test]
    fn normal_x_derivative_produces_metric_terms() {
        let n = 4;
        let (q1, _) = parametrix(n).unwrap();
        let d = q1.value.dx_boundary(n, n).unwrap();
        // The |ξ|⁻⁴-part must carry −h'(0)|ξ'|²·(i c[J(ξ)]).
        let coeff = d.coeff(1); // c(dx_1) component
        assert_eq!(coeff.pow, 2);
        let mut expect = FormalPoly::zero();
        // From d/dx_n of the numerator: i Σ_p ξ_p ∂_n(a_1^p), lifted by |ξ|².
        let mut da_part = FormalPoly::zero();
        for p in 1..=n {
            da_part = da_part.add(
                &xi_component(n, p)
                    .mul_gen(Gen::DA(n, 1, p))
                    .scale(&Scalar::i()),
            );
        }
        expect = expect.add(&da_part.mul(&xi_norm_sq(n)));
        // Tangential Clifford rule: +½h'(0)·(i Σ_p ξ_p a_1^p), lifted.
        let mut half = FormalPoly::zero();
        for p in 1..=n {
            half = half.add(
                &xi_component(n, p)
                    .mul_gen(Gen::A(1, p))
                    .mul_gen(Gen::HP)
                    .scale(&Scalar::i().mul(&Scalar::ratio(1, 2))),
            );
        }
        expect = expect.add(&half.mul(&xi_norm_sq(n)));
        // Metric derivative of the denominator: −h'(0)|ξ'|²·(i Σ ξ_p a_1^p).
        let mut met = FormalPoly::zero();
        for p in 1..=n {
            met = met.add(
                &xi_component(n, p)
                    .mul_gen(Gen::A(1, p))
                    .mul_gen(Gen::HP)
                    .mul_gen(Gen::XiPrimeSq)
                    .scale(&Scalar::i().neg()),
            );
        }
        expect = expect.add(&met);
        assert_eq!(coeff.num, expect);
    }

    #[test]
    fn subleading_symbol_grade_structure() {
        // −¼h'(0) Σ_{μ,ν<n} a_ν^μ c_μ c_n c_ν has grades 1 and 3 only.
        let n = 4;
        let p0 = subleading_symbol_x0(n);
        for (mask, _) in p0.value.terms() {
            let grade = mask.count_ones();
            assert!(grade == 1 || grade == 3, "unexpected grade {grade}");
        }
        assert_eq!(tr_id(n), 4);
    }
}
