//! Rational functions of the normal cotangent variable with poles only at
//! ±i, the upper-half-plane projection, residue-based line integration, and
//! moments of tangential monomials over the unit sphere.
//!
//! After restriction to `|ξ'| = 1` every denominator occurring in the
//! boundary computation is a power of `1 + ξ_n² = (ξ_n − i)(ξ_n + i)`, so
//! reduction and residues are exact synthetic-division arithmetic; no root
//! finding is ever needed.

use std::fmt;

use num_traits::Zero;

use crate::error::XiError;
use crate::formal::{FormalPoly, Gen};
use crate::scalar::{rat, GaussianRational, Rational, Scalar};

/// Polynomial in the normal variable with [`FormalPoly`] coefficients
/// (dense by degree; the coefficients themselves may carry tangential
/// variables but never the normal one).
#[derive(Clone, PartialEq, Debug, Default)]
pub struct XiPoly {
    coeffs: Vec<FormalPoly>,
}

impl XiPoly {
    pub fn zero() -> Self {
        XiPoly { coeffs: Vec::new() }
    }

    pub fn constant(c: FormalPoly) -> Self {
        let mut p = XiPoly { coeffs: vec![c] };
        p.trim();
        p
    }

    pub fn from_coeffs(coeffs: Vec<FormalPoly>) -> Self {
        let mut p = XiPoly { coeffs };
        p.trim();
        p
    }

    /// Monomial `c · ξ_n^k`.
    pub fn monomial(k: usize, c: FormalPoly) -> Self {
        if c.is_zero() {
            return XiPoly::zero();
        }
        let mut coeffs = vec![FormalPoly::zero(); k + 1];
        coeffs[k] = c;
        XiPoly { coeffs }
    }

    fn trim(&mut self) {
        while matches!(self.coeffs.last(), Some(c) if c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn coeff(&self, k: usize) -> FormalPoly {
        self.coeffs.get(k).cloned().unwrap_or_else(FormalPoly::zero)
    }

    pub fn coeffs(&self) -> &[FormalPoly] {
        &self.coeffs
    }

    pub fn add(&self, rhs: &XiPoly) -> XiPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            out.push(self.coeff(k).add(&rhs.coeff(k)));
        }
        XiPoly::from_coeffs(out)
    }

    pub fn neg(&self) -> XiPoly {
        XiPoly { coeffs: self.coeffs.iter().map(|c| c.neg()).collect() }
    }

    pub fn sub(&self, rhs: &XiPoly) -> XiPoly {
        self.add(&rhs.neg())
    }

    pub fn mul(&self, rhs: &XiPoly) -> XiPoly {
        if self.is_zero() || rhs.is_zero() {
            return XiPoly::zero();
        }
        let mut out = vec![FormalPoly::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].add(&a.mul(b));
            }
        }
        XiPoly::from_coeffs(out)
    }

    pub fn scale(&self, s: &Scalar) -> XiPoly {
        XiPoly::from_coeffs(self.coeffs.iter().map(|c| c.scale(s)).collect())
    }

    pub fn scale_poly(&self, p: &FormalPoly) -> XiPoly {
        XiPoly::from_coeffs(self.coeffs.iter().map(|c| c.mul(p)).collect())
    }

    /// d/dξ_n.
    pub fn derivative(&self) -> XiPoly {
        if self.coeffs.len() <= 1 {
            return XiPoly::zero();
        }
        let mut out = Vec::with_capacity(self.coeffs.len() - 1);
        for k in 1..self.coeffs.len() {
            out.push(self.coeffs[k].scale(&Scalar::from_i64(k as i64)));
        }
        XiPoly::from_coeffs(out)
    }

    /// Evaluation at a scalar point (used at ±i).
    pub fn eval(&self, point: &Scalar) -> FormalPoly {
        let mut acc = FormalPoly::zero();
        let mut p = Scalar::one();
        for c in &self.coeffs {
            acc = acc.add(&c.scale(&p));
            p = p.mul(point);
        }
        acc
    }

    /// Division by `(ξ_n − root)`: returns `(quotient, remainder)` with the
    /// remainder equal to the evaluation at the root.
    pub fn div_linear(&self, root: &Scalar) -> (XiPoly, FormalPoly) {
        if self.is_zero() {
            return (XiPoly::zero(), FormalPoly::zero());
        }
        let deg = self.coeffs.len() - 1;
        let mut q = vec![FormalPoly::zero(); deg];
        let mut carry = FormalPoly::zero();
        for k in (0..=deg).rev() {
            let cur = self.coeffs[k].add(&carry);
            if k == 0 {
                return (XiPoly::from_coeffs(q), cur);
            }
            q[k - 1] = cur.clone();
            carry = cur.scale(root);
        }
        unreachable!()
    }

    /// `(ξ_n − i·sign)^k` with Gaussian-rational coefficients.
    pub fn linear_power(sign: i64, k: u32) -> XiPoly {
        let root = Scalar::i().mul(&Scalar::from_i64(sign));
        let mut acc = XiPoly::constant(FormalPoly::one());
        let factor = XiPoly::from_coeffs(vec![
            FormalPoly::scalar(root.neg()),
            FormalPoly::one(),
        ]);
        for _ in 0..k {
            acc = acc.mul(&factor);
        }
        acc
    }
}

impl fmt::Display for XiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut parts = Vec::new();
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let var = match k {
                0 => String::new(),
                1 => "*xn".to_string(),
                _ => format!("*xn^{k}"),
            };
            parts.push(format!("{c}{var}"));
        }
        write!(f, "{}", parts.join(" + "))
    }
}

/// Rational function `num / ((ξ_n − i)^a (ξ_n + i)^b)`, stored reduced.
#[derive(Clone, PartialEq, Debug)]
pub struct RatXi {
    pub num: XiPoly,
    /// Pole order at `+i`.
    pub a: u32,
    /// Pole order at `−i`.
    pub b: u32,
}

impl RatXi {
    pub fn zero() -> Self {
        RatXi { num: XiPoly::zero(), a: 0, b: 0 }
    }

    pub fn one() -> Self {
        RatXi::from_poly(XiPoly::constant(FormalPoly::one()))
    }

    pub fn from_poly(num: XiPoly) -> Self {
        RatXi { num, a: 0, b: 0 }
    }

    pub fn new(num: XiPoly, a: u32, b: u32) -> Self {
        let mut r = RatXi { num, a, b };
        r.reduce();
        r
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    fn reduce(&mut self) {
        if self.num.is_zero() {
            self.a = 0;
            self.b = 0;
            return;
        }
        let plus_i = Scalar::i();
        while self.a > 0 {
            let (q, r) = self.num.div_linear(&plus_i);
            if r.is_zero() {
                self.num = q;
                self.a -= 1;
            } else {
                break;
            }
        }
        let minus_i = Scalar::i().neg();
        while self.b > 0 {
            let (q, r) = self.num.div_linear(&minus_i);
            if r.is_zero() {
                self.num = q;
                self.b -= 1;
            } else {
                break;
            }
        }
    }

    pub fn add(&self, rhs: &RatXi) -> RatXi {
        let a = self.a.max(rhs.a);
        let b = self.b.max(rhs.b);
        let lift = |r: &RatXi| {
            r.num
                .mul(&XiPoly::linear_power(1, a - r.a))
                .mul(&XiPoly::linear_power(-1, b - r.b))
        };
        RatXi::new(lift(self).add(&lift(rhs)), a, b)
    }

    pub fn neg(&self) -> RatXi {
        RatXi { num: self.num.neg(), a: self.a, b: self.b }
    }

    pub fn sub(&self, rhs: &RatXi) -> RatXi {
        self.add(&rhs.neg())
    }

    pub fn mul(&self, rhs: &RatXi) -> RatXi {
        RatXi::new(self.num.mul(&rhs.num), self.a + rhs.a, self.b + rhs.b)
    }

    pub fn scale(&self, s: &Scalar) -> RatXi {
        RatXi::new(self.num.scale(s), self.a, self.b)
    }

    pub fn scale_poly(&self, p: &FormalPoly) -> RatXi {
        RatXi::new(self.num.scale_poly(p), self.a, self.b)
    }

    /// Exact d/dξ_n by the quotient rule, reduced.
    pub fn dxi(&self) -> RatXi {
        if self.num.is_zero() {
            return RatXi::zero();
        }
        let minus = XiPoly::linear_power(1, 1);
        let plus = XiPoly::linear_power(-1, 1);
        let mut num = self.num.derivative().mul(&minus).mul(&plus);
        if self.a > 0 {
            num = num.sub(&self.num.scale(&Scalar::from_i64(self.a as i64)).mul(&plus));
        }
        if self.b > 0 {
            num = num.sub(&self.num.scale(&Scalar::from_i64(self.b as i64)).mul(&minus));
        }
        RatXi::new(num, self.a + 1, self.b + 1)
    }

    /// Numerator degree minus total pole order; decay at infinity means this
    /// is negative.
    pub fn decay_balance(&self) -> i64 {
        match self.num.degree() {
            None => i64::MIN,
            Some(d) => d as i64 - (self.a + self.b) as i64,
        }
    }

    /// Principal part at `+i`: the projection onto functions with poles in
    /// the upper half-plane.  Requires decay at infinity.
    pub fn pi_plus(&self) -> Result<RatXi, XiError> {
        if self.is_zero() {
            return Ok(RatXi::zero());
        }
        if self.decay_balance() >= 0 {
            return Err(XiError::PiPlusDomain);
        }
        if self.a == 0 {
            return Ok(RatXi::zero());
        }
        // g(ξ) = num/(ξ+i)^b; coefficient of (ξ−i)^{−j} is g^{(a−j)}(i)/(a−j)!.
        let mut num = XiPoly::zero();
        for j in 1..=self.a {
            let c = self.upper_deriv_at_i(self.a - j);
            num = num.add(&XiPoly::linear_power(1, self.a - j).scale_poly(&c));
        }
        Ok(RatXi::new(num, self.a, 0))
    }

    /// Complement `π⁻ = id − π⁺`; has poles only at `−i`.
    pub fn pi_minus(&self) -> Result<RatXi, XiError> {
        Ok(self.sub(&self.pi_plus()?))
    }

    /// `(1/2π)·∮ = i · Res_{+i}`; vanishes on functions with no pole at `+i`.
    pub fn pi_prime(&self) -> Result<FormalPoly, XiError> {
        if self.is_zero() {
            return Ok(FormalPoly::zero());
        }
        if self.decay_balance() >= 0 {
            return Err(XiError::PiPrimeDomain);
        }
        Ok(self.residue_at_i().scale(&Scalar::i()))
    }

    /// `∫_{−∞}^{∞} dξ_n` by closing the contour upward: `2πi · Res_{+i}`.
    /// Requires absolute integrability (decay of order ≥ 2).
    pub fn integrate_line(&self) -> Result<FormalPoly, XiError> {
        if self.is_zero() {
            return Ok(FormalPoly::zero());
        }
        if self.decay_balance() > -2 {
            return Err(XiError::NotIntegrable {
                deg: self.num.degree().map(|d| d as i64).unwrap_or(-1),
                a: self.a,
                b: self.b,
            });
        }
        let two_pi_i = Scalar::pi().mul(&Scalar::i()).mul(&Scalar::from_i64(2));
        Ok(self.residue_at_i().scale(&two_pi_i))
    }

    /// Residue at `+i` via the derivative formula
    /// `Res = (1/(a−1)!) d^{a−1}/dξ^{a−1}[ num/(ξ+i)^b ]` at `ξ = i`.
    pub fn residue_at_i(&self) -> FormalPoly {
        if self.a == 0 {
            return FormalPoly::zero();
        }
        let k = self.a - 1;
        self.upper_deriv_at_i(k)
    }

    // (1/k!)·g^{(k)}(i) for g = num/(ξ+i)^b.
    fn upper_deriv_at_i(&self, k: u32) -> FormalPoly {
        let mut form = UpperForm { num: self.num.clone(), b: self.b };
        for _ in 0..k {
            form = form.derivative();
        }
        form.eval_at_i().scale(&Scalar::inv_factorial(k))
    }

    /// Evaluation at a Gaussian-rational point away from ±i (oracle bridge).
    pub fn eval_scalar_point(&self, point: &Scalar) -> Option<FormalPoly> {
        let num = self.num.eval(point);
        let plus_i = Scalar::i();
        let minus_i = plus_i.neg();
        let dm = point.sub(&plus_i);
        let dp = point.sub(&minus_i);
        let den = dm.pow(self.a).mul(&dp.pow(self.b));
        let inv = den.inv_monomial().ok()?;
        Some(num.scale(&inv))
    }

    /// The numerators must stay free of the normal variable.
    pub fn validate(&self) -> Result<(), XiError> {
        for c in self.num.coeffs() {
            if c.contains_gen(|g| matches!(g, Gen::XiN)) {
                return Err(XiError::ResidualNormalVariable);
            }
        }
        Ok(())
    }
}

impl fmt::Display for RatXi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        if self.a == 0 && self.b == 0 {
            return write!(f, "{}", self.num);
        }
        let mut den = Vec::new();
        match self.a {
            0 => {}
            1 => den.push("(xn-i)".to_string()),
            k => den.push(format!("(xn-i)^{k}")),
        }
        match self.b {
            0 => {}
            1 => den.push("(xn+i)".to_string()),
            k => den.push(format!("(xn+i)^{k}")),
        }
        write!(f, "[{}] / {}", self.num, den.join("*"))
    }
}

// Helper form num/(ξ+i)^b used by the residue derivative formula.
struct UpperForm {
    num: XiPoly,
    b: u32,
}

impl UpperForm {
    fn derivative(&self) -> UpperForm {
        let plus = XiPoly::linear_power(-1, 1);
        let mut num = self.num.derivative().mul(&plus);
        if self.b > 0 {
            num = num.sub(&self.num.scale(&Scalar::from_i64(self.b as i64)));
        }
        UpperForm { num, b: self.b + 1 }
    }

    fn eval_at_i(&self) -> FormalPoly {
        let val = self.num.eval(&Scalar::i());
        // (2i)^{-b}
        let two_i = GaussianRational::new(Rational::zero(), rat(2, 1));
        let mut inv = GaussianRational::one();
        for _ in 0..self.b {
            inv = &inv * &two_i.inv().expect("2i invertible");
        }
        val.scale(&Scalar::from_gaussian(inv))
    }
}

/// `(1/k!)·f^{(k)}` evaluated at `ξ_n = i` for a pre-factored bracket
/// `f = num/(ξ_n+i)^b` with no pole at `+i`.  This is the derivative-formula
/// route used to cross-check assembled residues.
pub fn residue_prefactored(num: &XiPoly, b: u32, k: u32) -> FormalPoly {
    let mut form = UpperForm { num: num.clone(), b };
    for _ in 0..k {
        form = form.derivative();
    }
    form.eval_at_i().scale(&Scalar::inv_factorial(k))
}

// Γ(j/2) written as q·√π^s with q rational and s ∈ {0, 1}.
fn gamma_half(j: u32) -> (Rational, u32) {
    assert!(j >= 1);
    if j == 1 {
        return (rat(1, 1), 1); // Γ(1/2) = √π
    }
    if j == 2 {
        return (rat(1, 1), 0); // Γ(1) = 1
    }
    let (q, s) = gamma_half(j - 2);
    (q * rat((j - 2) as i64, 2), s)
}

/// Exact integral of the monomial `Π ξ_k^{e_k}` over the unit sphere in
/// ℝ^m (m = 2 or 3): zero for odd exponents, otherwise
/// `2·Π Γ((e_k+1)/2) / Γ(Σ(e_k+1)/2)`.
pub fn sphere_moment(exponents: &[u32], m: u8) -> Result<Scalar, XiError> {
    if !(m == 2 || m == 3) {
        return Err(XiError::SphereDim(m));
    }
    if exponents.len() != m as usize {
        return Err(XiError::SphereDim(m));
    }
    if exponents.iter().any(|e| e % 2 == 1) {
        return Ok(Scalar::zero());
    }
    let mut q = rat(2, 1);
    let mut sqrt_pi: i64 = 0;
    let mut total = 0u32;
    for &e in exponents {
        let (num, s) = gamma_half(e + 1);
        q *= num;
        sqrt_pi += s as i64;
        total += e + 1;
    }
    let (den, s_den) = gamma_half(total);
    q /= den;
    sqrt_pi -= s_den as i64;
    assert!(sqrt_pi >= 0 && sqrt_pi % 2 == 0, "sphere moment must be a pi-power");
    Ok(Scalar::pi_pow((sqrt_pi / 2) as u32).mul(&Scalar::from_rational(q)))
}

/// Weight assigned to a tangential monomial by the sphere integration step.
///
/// `PaperOmega` is the bookkeeping used by the source computation: the
/// measure is normalized to a symbolic sphere factor carried outside, with
/// degree-two moments contributing the literal `4π/3·δ`.  `TrueMeasure` is
/// honest integration over the unit sphere, used by the numeric oracle.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum MomentRule {
    PaperOmega,
    TrueMeasure,
}

impl MomentRule {
    pub fn weight(&self, exponents: &[u32], m: u8) -> Result<Scalar, XiError> {
        if exponents.iter().any(|e| e % 2 == 1) {
            return Ok(Scalar::zero());
        }
        match self {
            MomentRule::TrueMeasure => sphere_moment(exponents, m),
            MomentRule::PaperOmega => {
                let total: u32 = exponents.iter().sum();
                match total {
                    0 => Ok(Scalar::one()),
                    2 if exponents.iter().any(|&e| e == 2) => {
                        Ok(Scalar::pi().mul(&Scalar::ratio(4, 3)))
                    }
                    d => Err(XiError::MomentDegree(d)),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_over_1_plus_sq() -> RatXi {
        RatXi::new(XiPoly::constant(FormalPoly::one()), 1, 1)
    }

    #[test]
    fn addition_doubles() {
        let p = one_over_1_plus_sq();
        let s = p.add(&p);
        assert_eq!(s, p.scale(&Scalar::from_i64(2)));
    }

    #[test]
    fn cancellation_on_construction() {
        // (ξ−i)/(1+ξ²) = 1/(ξ+i)
        let num = XiPoly::linear_power(1, 1);
        let r = RatXi::new(num, 1, 1);
        assert_eq!(r, RatXi::new(XiPoly::constant(FormalPoly::one()), 0, 1));
    }

    #[test]
    fn product_of_simple_poles() {
        let pm = RatXi::new(XiPoly::constant(FormalPoly::one()), 1, 0);
        let pp = RatXi::new(XiPoly::constant(FormalPoly::one()), 0, 1);
        assert_eq!(pm.mul(&pp), one_over_1_plus_sq());
    }

    #[test]
    fn derivative_examples() {
        // d/dξ 1/(1+ξ²) = −2ξ/(1+ξ²)²
        let d = one_over_1_plus_sq().dxi();
        let expect = RatXi::new(
            XiPoly::monomial(1, FormalPoly::scalar(Scalar::from_i64(-2))),
            2,
            2,
        );
        assert_eq!(d, expect);

        // d/dξ ξ/(1+ξ²) = (1−ξ²)/(1+ξ²)²
        let p = RatXi::new(XiPoly::monomial(1, FormalPoly::one()), 1, 1);
        let d = p.dxi();
        let expect = RatXi::new(
            XiPoly::from_coeffs(vec![
                FormalPoly::one(),
                FormalPoly::zero(),
                FormalPoly::scalar(Scalar::from_i64(-1)),
            ]),
            2,
            2,
        );
        assert_eq!(d, expect);

        assert!(RatXi::one().dxi().is_zero());
    }

    #[test]
    fn pi_plus_unit_vectors() {
        // π⁺(1/(1+ξ²)) = 1/(2i(ξ−i)) = (−i/2)/(ξ−i)
        let got = one_over_1_plus_sq().pi_plus().unwrap();
        let expect = RatXi::new(
            XiPoly::constant(FormalPoly::scalar(Scalar::i().neg().mul(&Scalar::ratio(1, 2)))),
            1,
            0,
        );
        assert_eq!(got, expect);

        // π⁺(1/(1+ξ²)²) = −(iξ+2)/(4(ξ−i)²)
        let p = one_over_1_plus_sq().mul(&one_over_1_plus_sq());
        let got = p.pi_plus().unwrap();
        let expect = RatXi::new(
            XiPoly::from_coeffs(vec![
                FormalPoly::scalar(Scalar::ratio(-1, 2)),
                FormalPoly::scalar(Scalar::i().mul(&Scalar::ratio(-1, 4))),
            ]),
            2,
            0,
        );
        assert_eq!(got, expect);

        // π⁺(ξ/(1+ξ²)²) = −i/(4(ξ−i)²)
        let p = RatXi::new(XiPoly::monomial(1, FormalPoly::one()), 2, 2);
        let got = p.pi_plus().unwrap();
        let expect = RatXi::new(
            XiPoly::constant(FormalPoly::scalar(Scalar::i().mul(&Scalar::ratio(-1, 4)))),
            2,
            0,
        );
        assert_eq!(got, expect);

        // Pole only at −i projects to zero.
        let p = RatXi::new(XiPoly::constant(FormalPoly::one()), 0, 1);
        assert!(p.pi_plus().unwrap().is_zero());

        // Non-decaying input is rejected.
        assert!(RatXi::one().pi_plus().is_err());
    }

    #[test]
    fn pi_plus_pi_minus_decompose() {
        let p = RatXi::new(
            XiPoly::from_coeffs(vec![FormalPoly::one(), FormalPoly::scalar(Scalar::i())]),
            2,
            1,
        );
        let plus = p.pi_plus().unwrap();
        let minus = p.pi_minus().unwrap();
        assert_eq!(plus.add(&minus), p);
        assert_eq!(minus.a, 0, "complement must have poles only at −i");
        assert_eq!(plus.pi_plus().unwrap(), plus, "projection is idempotent");
    }

    #[test]
    fn pi_prime_values() {
        let half = one_over_1_plus_sq().pi_prime().unwrap();
        assert_eq!(half, FormalPoly::scalar(Scalar::ratio(1, 2)));

        let p = RatXi::new(XiPoly::constant(FormalPoly::one()), 0, 1);
        assert!(p.pi_prime().unwrap().is_zero());

        let p = RatXi::new(XiPoly::constant(FormalPoly::one()), 2, 0);
        assert!(p.pi_prime().unwrap().is_zero());
    }

    #[test]
    fn arctangent_integral() {
        let v = one_over_1_plus_sq().integrate_line().unwrap();
        assert_eq!(v, FormalPoly::scalar(Scalar::pi()));
    }

    #[test]
    fn bracket_residues_match_assembled_integrals() {
        // (2πi/2!)[i(1−ξ²)/(2(ξ+i)²)]'' at ξ=i equals −π/8, and the assembled
        // integrand i(1−ξ²)/(2(ξ−i)³(ξ+i)²) integrates to the same value.
        let num = XiPoly::from_coeffs(vec![
            FormalPoly::scalar(Scalar::i().mul(&Scalar::ratio(1, 2))),
            FormalPoly::zero(),
            FormalPoly::scalar(Scalar::i().mul(&Scalar::ratio(-1, 2))),
        ]);
        let bracket = residue_prefactored(&num, 2, 2);
        let two_pi_i = Scalar::pi().mul(&Scalar::i()).mul(&Scalar::from_i64(2));
        let via_bracket = bracket.scale(&two_pi_i);
        let expect = FormalPoly::scalar(Scalar::pi().mul(&Scalar::ratio(-1, 8)));
        assert_eq!(via_bracket, expect);

        let assembled = RatXi::new(num.clone(), 3, 2);
        assert_eq!(assembled.integrate_line().unwrap(), expect);

        // (2πi/3!)[i(2i−ξ)(1−ξ²)/(2(ξ+i)²)]''' at ξ=i equals π/4; weighted by
        // the degree-two moment 4π/3 this is the π²/3 companion value.
        let factor = XiPoly::from_coeffs(vec![
            FormalPoly::scalar(Scalar::i().mul(&Scalar::from_i64(2))),
            FormalPoly::scalar(Scalar::from_i64(-1)),
        ]);
        let num2 = num.mul(&factor);
        let bracket = residue_prefactored(&num2, 2, 3);
        let via_bracket = bracket.scale(&two_pi_i);
        assert_eq!(via_bracket, FormalPoly::scalar(Scalar::pi().mul(&Scalar::ratio(1, 4))));
        let weighted = via_bracket.scale(&Scalar::pi().mul(&Scalar::ratio(4, 3)));
        assert_eq!(
            weighted,
            FormalPoly::scalar(Scalar::pi_pow(2).mul(&Scalar::ratio(1, 3)))
        );
    }

    #[test]
    fn total_derivative_integrates_to_zero() {
        let p = RatXi::new(
            XiPoly::from_coeffs(vec![
                FormalPoly::scalar(Scalar::ratio(2, 3)),
                FormalPoly::scalar(Scalar::i()),
            ]),
            2,
            1,
        );
        let d = p.dxi();
        assert!(d.integrate_line().unwrap().is_zero());
    }

    #[test]
    fn non_integrable_rejected() {
        // ξ/(1+ξ²) decays like 1/ξ only.
        let p = RatXi::new(XiPoly::monomial(1, FormalPoly::one()), 1, 1);
        assert!(matches!(p.integrate_line(), Err(XiError::NotIntegrable { .. })));
    }

    #[test]
    fn sphere_moments() {
        let pi = Scalar::pi();
        assert!(sphere_moment(&[1, 0, 0], 3).unwrap().is_zero());
        assert_eq!(sphere_moment(&[2, 0, 0], 3).unwrap(), pi.mul(&Scalar::ratio(4, 3)));
        assert_eq!(sphere_moment(&[0, 0, 0], 3).unwrap(), pi.mul(&Scalar::from_i64(4)));
        assert_eq!(sphere_moment(&[0, 0], 2).unwrap(), pi.mul(&Scalar::from_i64(2)));
        assert_eq!(sphere_moment(&[2, 0], 2).unwrap(), pi.clone());
        assert_eq!(sphere_moment(&[2, 2, 0], 3).unwrap(), pi.mul(&Scalar::ratio(4, 15)));
        assert_eq!(sphere_moment(&[4, 0, 0], 3).unwrap(), pi.mul(&Scalar::ratio(4, 5)));
    }

    #[test]
    fn moment_rules() {
        assert_eq!(
            MomentRule::PaperOmega.weight(&[0, 0, 0], 3).unwrap(),
            Scalar::one()
        );
        assert_eq!(
            MomentRule::PaperOmega.weight(&[0, 2, 0], 3).unwrap(),
            Scalar::pi().mul(&Scalar::ratio(4, 3))
        );
        assert!(MomentRule::PaperOmega.weight(&[1, 0, 0], 3).unwrap().is_zero());
        assert!(MomentRule::PaperOmega.weight(&[2, 2, 0], 3).is_err());
        assert_eq!(
            MomentRule::TrueMeasure.weight(&[0, 0], 2).unwrap(),
            Scalar::pi().mul(&Scalar::from_i64(2))
        );
    }
}
