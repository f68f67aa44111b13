//! Clifford algebra over a commutative coefficient ring.
//!
//! Basis monomials are strictly increasing products of the generators
//! `c(dx_1) … c(dx_n)` encoded as bitmasks, with the relation
//! `c_i c_j + c_j c_i = −2δ_ij` applied on the fly during multiplication.
//! The trace functional keeps the scalar component only: every non-scalar
//! basis monomial is traceless, and `tr[id] = 2^{⌊n/2⌋}`.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::PolyError;
use crate::formal::{gpair, FormalPoly, VecLabel};
use crate::scalar::Scalar;

/// Minimal commutative-ring interface for Clifford coefficients.
pub trait CoeffRing: Clone + PartialEq {
    fn zero() -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
}

impl CoeffRing for Scalar {
    fn zero() -> Self {
        Scalar::zero()
    }
    fn is_zero(&self) -> bool {
        Scalar::is_zero(self)
    }
    fn add(&self, rhs: &Self) -> Self {
        Scalar::add(self, rhs)
    }
    fn neg(&self) -> Self {
        Scalar::neg(self)
    }
    fn mul(&self, rhs: &Self) -> Self {
        Scalar::mul(self, rhs)
    }
}

impl CoeffRing for FormalPoly {
    fn zero() -> Self {
        FormalPoly::zero()
    }
    fn is_zero(&self) -> bool {
        FormalPoly::is_zero(self)
    }
    fn add(&self, rhs: &Self) -> Self {
        FormalPoly::add(self, rhs)
    }
    fn neg(&self) -> Self {
        FormalPoly::neg(self)
    }
    fn mul(&self, rhs: &Self) -> Self {
        FormalPoly::mul(self, rhs)
    }
}

/// Product of two basis blades under `c_i c_j + c_j c_i = −2δ_ij`:
/// returns the resulting blade mask and the accumulated sign.
pub fn blade_mul(a: u8, b: u8) -> (u8, i8) {
    let mut acc = a;
    let mut sign = 1i8;
    for t in 0..8u8 {
        if b & (1 << t) == 0 {
            continue;
        }
        // Move c_t from the right of acc into sorted position: one flip per
        // acc-generator with a larger index.
        let greater = (acc >> (t + 1)).count_ones();
        if greater % 2 == 1 {
            sign = -sign;
        }
        if acc & (1 << t) != 0 {
            sign = -sign; // c_t c_t = -1
            acc &= !(1 << t);
        } else {
            acc |= 1 << t;
        }
    }
    (acc, sign)
}

/// Element of the Clifford algebra in dimension `n` with coefficients in `R`.
#[derive(Clone, PartialEq, Debug)]
pub struct CliffordElem<R: CoeffRing> {
    pub n: u8,
    terms: BTreeMap<u8, R>,
}

impl<R: CoeffRing> CliffordElem<R> {
    pub fn zero(n: u8) -> Self {
        CliffordElem { n, terms: BTreeMap::new() }
    }

    pub fn scalar(n: u8, c: R) -> Self {
        let mut e = CliffordElem::zero(n);
        e.insert(0, c);
        e
    }

    /// The generator `c(dx_i)`, `i` one-based.
    pub fn gamma(n: u8, i: u8, c: R) -> Self {
        debug_assert!(i >= 1 && i <= n);
        let mut e = CliffordElem::zero(n);
        e.insert(1 << (i - 1), c);
        e
    }

    /// Degree-one element from `(index, coefficient)` pairs.
    pub fn linear(n: u8, coeffs: impl IntoIterator<Item = (u8, R)>) -> Self {
        let mut e = CliffordElem::zero(n);
        for (i, c) in coeffs {
            debug_assert!(i >= 1 && i <= n);
            e.insert(1 << (i - 1), c);
        }
        e
    }

    pub fn insert(&mut self, mask: u8, c: R) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(mask) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let s = e.get().add(&c);
                if s.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&u8, &R)> {
        self.terms.iter()
    }

    pub fn coeff(&self, mask: u8) -> R {
        self.terms.get(&mask).cloned().unwrap_or_else(R::zero)
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.n, rhs.n, "dim-mismatch in Clifford addition");
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.insert(*m, c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        CliffordElem {
            n: self.n,
            terms: self.terms.iter().map(|(m, c)| (*m, c.neg())).collect(),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.neg())
    }

    pub fn try_mul(&self, rhs: &Self) -> Result<Self, PolyError> {
        if self.n != rhs.n {
            return Err(PolyError::DimMismatch(self.n, rhs.n));
        }
        let mut out = CliffordElem::zero(self.n);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                let (mask, sign) = blade_mul(*m1, *m2);
                let c = c1.mul(c2);
                out.insert(mask, if sign < 0 { c.neg() } else { c });
            }
        }
        Ok(out)
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        self.try_mul(rhs).expect("dim-mismatch in Clifford multiplication")
    }

    pub fn scale(&self, s: &R) -> Self {
        let mut out = CliffordElem::zero(self.n);
        for (m, c) in &self.terms {
            out.insert(*m, c.mul(s));
        }
        out
    }

    pub fn map_coeffs<S: CoeffRing, F: Fn(&R) -> S>(&self, f: F) -> CliffordElem<S> {
        let mut out = CliffordElem::zero(self.n);
        for (m, c) in &self.terms {
            out.insert(*m, f(c));
        }
        out
    }

    pub fn try_map_coeffs<S: CoeffRing, E, F: Fn(&R) -> Result<S, E>>(
        &self,
        f: F,
    ) -> Result<CliffordElem<S>, E> {
        let mut out = CliffordElem::zero(self.n);
        for (m, c) in &self.terms {
            out.insert(*m, f(c)?);
        }
        Ok(out)
    }

    /// Scalar component of the element (coefficient of the empty blade).
    pub fn scalar_part(&self) -> R {
        self.coeff(0)
    }

    /// Trace: scalar component times `tr[id] = 2^{⌊n/2⌋}`; all other blades
    /// are traceless.
    pub fn trace(&self) -> R {
        let mut acc = R::zero();
        let part = self.scalar_part();
        for _ in 0..tr_id(self.n) {
            acc = acc.add(&part);
        }
        acc
    }
}

/// Dimension of the spinor space: 4 in dimension 4, 2 in dimension 3.
pub fn tr_id(n: u8) -> u32 {
    1 << (n / 2)
}

impl<R: CoeffRing + fmt::Display> fmt::Display for CliffordElem<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(m, c)| {
                if *m == 0 {
                    format!("[{c}]")
                } else {
                    let blades: Vec<String> =
                        (0..8).filter(|i| m & (1 << i) != 0).map(|i| format!("c{}", i + 1)).collect();
                    format!("[{c}]*{}", blades.join(""))
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Trace of a product of Clifford actions of abstract vectors, expanded over
/// perfect matchings: each pairing contributes its crossing sign times the
/// product of `−g(u, v)` factors, all times `tr[id]`.  Odd-length products
/// are traceless.
pub fn abstract_trace(n: u8, labels: &[VecLabel]) -> FormalPoly {
    if labels.len() % 2 == 1 {
        return FormalPoly::zero();
    }
    let body = matching_sum(n, labels);
    let mut acc = FormalPoly::zero();
    for _ in 0..tr_id(n) {
        acc = acc.add(&body);
    }
    acc
}

fn matching_sum(n: u8, labels: &[VecLabel]) -> FormalPoly {
    if labels.is_empty() {
        return FormalPoly::one();
    }
    let mut acc = FormalPoly::zero();
    let first = labels[0];
    for j in 1..labels.len() {
        // Pairing position 0 with position j costs j−1 transpositions plus
        // the −1 of tr[c(u)c(v)] = −g(u,v)·tr[id], so the net sign is (−1)^j.
        let mut rest: Vec<VecLabel> = Vec::with_capacity(labels.len() - 2);
        rest.extend_from_slice(&labels[1..j]);
        rest.extend_from_slice(&labels[j + 1..]);
        let sub = matching_sum(n, &rest);
        let paired = sub.mul_canon(gpair(first, labels[j]));
        let signed = if j % 2 == 1 { paired.neg() } else { paired };
        acc = acc.add(&signed);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formal::Gen;

    type ClS = CliffordElem<Scalar>;

    fn g(n: u8, i: u8) -> ClS {
        ClS::gamma(n, i, Scalar::one())
    }

    #[test]
    fn generator_squares_to_minus_one() {
        let n = 4;
        let e = g(n, 1).mul(&g(n, 1));
        assert_eq!(e, ClS::scalar(n, Scalar::from_i64(-1)));
    }

    #[test]
    fn generators_anticommute() {
        let n = 4;
        let ab = g(n, 2).mul(&g(n, 1));
        let ba = g(n, 1).mul(&g(n, 2)).neg();
        assert_eq!(ab, ba);
    }

    #[test]
    fn double_contraction() {
        let n = 4;
        // c1 c2 · c2 c1 = 1
        let lhs = g(n, 1).mul(&g(n, 2)).mul(&g(n, 2)).mul(&g(n, 1));
        assert_eq!(lhs, ClS::scalar(n, Scalar::one()));
    }

    #[test]
    fn trace_values() {
        assert_eq!(ClS::scalar(4, Scalar::one()).trace(), Scalar::from_i64(4));
        assert_eq!(ClS::scalar(3, Scalar::one()).trace(), Scalar::from_i64(2));
        let n = 4;
        assert!(g(n, 1).mul(&g(n, 2)).trace().is_zero());
        // c1 c1 in dimension 3 -> trace -2
        let e = g(3, 1).mul(&g(3, 1));
        assert_eq!(e.trace(), Scalar::from_i64(-2));
    }

    #[test]
    fn trace_cyclicity_sample() {
        let n = 4;
        let a = g(n, 1).mul(&g(n, 3)).add(&ClS::gamma(n, 2, Scalar::i()));
        let b = g(n, 2).mul(&g(n, 4)).add(&ClS::scalar(n, Scalar::ratio(1, 3)));
        assert_eq!(a.mul(&b).trace(), b.mul(&a).trace());
    }

    #[test]
    fn linear_builder_empty_is_zero() {
        let e = ClS::linear(4, std::iter::empty());
        assert!(e.is_zero());
    }

    #[test]
    fn abstract_trace_two_factors() {
        let n = 4;
        let x = VecLabel::Free(1);
        let y = VecLabel::Free(2);
        let got = abstract_trace(n, &[x, y]);
        let expect = FormalPoly::from_canon(n, gpair(x, y)).neg().scale(&Scalar::from_i64(4));
        assert_eq!(got, expect);
    }

    #[test]
    fn abstract_trace_four_factors() {
        let n = 4;
        let [x, y, z, w] =
            [VecLabel::Free(1), VecLabel::Free(2), VecLabel::Free(3), VecLabel::Free(4)];
        let got = abstract_trace(n, &[x, y, z, w]);
        let gp = |u, v| FormalPoly::from_canon(n, gpair(u, v));
        let expect = gp(x, w)
            .mul(&gp(y, z))
            .sub(&gp(x, z).mul(&gp(y, w)))
            .add(&gp(x, y).mul(&gp(z, w)))
            .scale(&Scalar::from_i64(4));
        assert_eq!(got, expect);
    }

    #[test]
    fn abstract_trace_odd_vanishes() {
        assert!(abstract_trace(4, &[VecLabel::Free(1)]).is_zero());
        assert!(abstract_trace(4, &[VecLabel::Free(1), VecLabel::Free(2), VecLabel::Free(3)])
            .is_zero());
    }

    #[test]
    fn abstract_trace_matches_coordinate_trace() {
        // Specialized to frame vectors the matching expansion must agree with
        // the blade computation, for products of length 2 and 4.
        let n = 4;
        for idx in [[1u8, 1], [1, 2], [3, 3]] {
            let labels: Vec<VecLabel> = idx.iter().map(|&i| VecLabel::E(i)).collect();
            let via_matchings = abstract_trace(n, &labels);
            let mut prod = ClS::scalar(n, Scalar::one());
            for &i in &idx {
                prod = prod.mul(&g(n, i));
            }
            assert_eq!(via_matchings, FormalPoly::scalar(prod.trace()), "idx {idx:?}");
        }
        for idx in [[1u8, 2, 2, 1], [1, 2, 1, 2], [1, 1, 3, 3], [1, 2, 3, 4], [2, 3, 3, 2]] {
            let labels: Vec<VecLabel> = idx.iter().map(|&i| VecLabel::E(i)).collect();
            let via_matchings = abstract_trace(n, &labels);
            let mut prod = ClS::scalar(n, Scalar::one());
            for &i in &idx {
                prod = prod.mul(&g(n, i));
            }
            assert_eq!(via_matchings, FormalPoly::scalar(prod.trace()), "idx {idx:?}");
        }
    }

    #[test]
    fn clifford_with_poly_coefficients() {
        // c[J(dx_p)] = Σ_h A(h,p) c_h squares to -Σ_h A(h,p)^2 + 0·(blades).
        let n = 4;
        let p = 2u8;
        let elem = CliffordElem::<FormalPoly>::linear(
            n,
            (1..=n).map(|h| (h, FormalPoly::gen(n, Gen::A(h, p)))),
        );
        let sq = elem.mul(&elem);
        let mut expect = FormalPoly::zero();
        for h in 1..=n {
            let a = FormalPoly::gen(n, Gen::A(h, p));
            expect = expect.sub(&a.mul(&a));
        }
        assert_eq!(sq, CliffordElem::scalar(n, expect));
    }
}
