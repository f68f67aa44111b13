//! Exact arithmetic foundation: arbitrary-precision rationals, Gaussian
//! rationals and polynomials in the formal constants `pi` and `Om3`.
//!
//! Every coefficient produced by the engine lives in ℚ(i)[π, Ω₃].  π is a
//! formal indeterminate, never a float; Ω₃ (the symbolic sphere-volume factor
//! carried by the four-dimensional boundary terms) is a second opaque
//! generator that must factor out of all exact comparisons.  Equality of
//! scalars is coefficient-wise equality of canonical forms.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::ScalarError;

/// Exact rational number with arbitrary-precision numerator and positive
/// denominator, always stored in lowest terms.
pub type Rational = BigRational;

/// Builds a rational from a signed numerator/denominator pair.
pub fn rat(num: i64, den: i64) -> Rational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Element of ℚ(i): a Gaussian rational `re + im·i`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GaussianRational {
    pub re: Rational,
    pub im: Rational,
}

impl GaussianRational {
    pub fn new(re: Rational, im: Rational) -> Self {
        GaussianRational { re, im }
    }

    pub fn from_rational(re: Rational) -> Self {
        GaussianRational { re, im: Rational::zero() }
    }

    pub fn from_i64(v: i64) -> Self {
        Self::from_rational(rat(v, 1))
    }

    pub fn zero() -> Self {
        Self::from_i64(0)
    }

    pub fn one() -> Self {
        Self::from_i64(1)
    }

    /// The imaginary unit.
    pub fn i() -> Self {
        GaussianRational { re: Rational::zero(), im: Rational::one() }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        GaussianRational { re: self.re.clone(), im: -self.im.clone() }
    }

    /// Squared norm `re² + im²`; zero iff the element is zero.
    pub fn norm_sq(&self) -> Rational {
        &self.re * &self.re + &self.im * &self.im
    }

    /// Exact multiplicative inverse.
    pub fn inv(&self) -> Result<Self, ScalarError> {
        if self.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        let n = self.norm_sq();
        Ok(GaussianRational { re: &self.re / &n, im: -(&self.im / &n) })
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }
}

impl Add for &GaussianRational {
    type Output = GaussianRational;
    fn add(self, rhs: &GaussianRational) -> GaussianRational {
        GaussianRational { re: &self.re + &rhs.re, im: &self.im + &rhs.im }
    }
}

impl Sub for &GaussianRational {
    type Output = GaussianRational;
    fn sub(self, rhs: &GaussianRational) -> GaussianRational {
        GaussianRational { re: &self.re - &rhs.re, im: &self.im - &rhs.im }
    }
}

impl Mul for &GaussianRational {
    type Output = GaussianRational;
    fn mul(self, rhs: &GaussianRational) -> GaussianRational {
        GaussianRational {
            re: &self.re * &rhs.re - &self.im * &rhs.im,
            im: &self.re * &rhs.im + &self.im * &rhs.re,
        }
    }
}

impl Neg for &GaussianRational {
    type Output = GaussianRational;
    fn neg(self) -> GaussianRational {
        GaussianRational { re: -self.re.clone(), im: -self.im.clone() }
    }
}

fn rational_str(r: &Rational) -> String {
    if r.denom().is_one() {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for GaussianRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        if self.im.is_zero() {
            return write!(f, "{}", rational_str(&self.re));
        }
        let im_part = if self.im.is_one() {
            "i".to_string()
        } else if (-self.im.clone()).is_one() {
            "-i".to_string()
        } else {
            format!("{}*i", rational_str(&self.im))
        };
        if self.re.is_zero() {
            return write!(f, "{im_part}");
        }
        if self.im.is_negative() {
            let pos = -self.im.clone();
            let im_abs = if pos.is_one() { "i".to_string() } else { format!("{}*i", rational_str(&pos)) };
            write!(f, "{}-{}", rational_str(&self.re), im_abs)
        } else {
            write!(f, "{}+{}", rational_str(&self.re), im_part)
        }
    }
}

/// Exponent key of one scalar term: `(power of pi, power of Om3)`.
type Exps = (u32, u32);

/// Polynomial in the formal constants π and Ω₃ over ℚ(i).
///
/// Canonical form stores no zero coefficients, so structural equality equals
/// mathematical equality.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Scalar {
    terms: BTreeMap<Exps, GaussianRational>,
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar { terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Scalar::from_i64(1)
    }

    pub fn from_i64(v: i64) -> Self {
        Scalar::from_gaussian(GaussianRational::from_i64(v))
    }

    pub fn from_rational(r: Rational) -> Self {
        Scalar::from_gaussian(GaussianRational::from_rational(r))
    }

    pub fn from_gaussian(g: GaussianRational) -> Self {
        let mut terms = BTreeMap::new();
        if !g.is_zero() {
            terms.insert((0, 0), g);
        }
        Scalar { terms }
    }

    /// Rational scalar `num/den`.
    pub fn ratio(num: i64, den: i64) -> Self {
        Scalar::from_rational(rat(num, den))
    }

    /// The imaginary unit.
    pub fn i() -> Self {
        Scalar::from_gaussian(GaussianRational::i())
    }

    /// The formal constant π.
    pub fn pi() -> Self {
        Scalar::pi_pow(1)
    }

    pub fn pi_pow(k: u32) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert((k, 0), GaussianRational::one());
        Scalar { terms }
    }

    /// The opaque sphere-volume generator Ω₃.
    pub fn omega3() -> Self {
        let mut terms = BTreeMap::new();
        terms.insert((0, 1), GaussianRational::one());
        Scalar { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// True when no term carries a power of Ω₃.
    pub fn is_omega3_free(&self) -> bool {
        self.terms.keys().all(|&(_, m)| m == 0)
    }

    pub fn insert_term(&mut self, exps: Exps, coeff: GaussianRational) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.entry(exps) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let s = e.get() + &coeff;
                if s.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exps, &GaussianRational)> {
        self.terms.iter()
    }

    pub fn neg(&self) -> Self {
        Scalar { terms: self.terms.iter().map(|(k, v)| (*k, -v)).collect() }
    }

    pub fn add(&self, rhs: &Scalar) -> Self {
        let mut out = self.clone();
        for (k, v) in &rhs.terms {
            out.insert_term(*k, v.clone());
        }
        out
    }

    pub fn sub(&self, rhs: &Scalar) -> Self {
        self.add(&rhs.neg())
    }

    pub fn mul(&self, rhs: &Scalar) -> Self {
        let mut out = Scalar::zero();
        for ((p1, m1), c1) in &self.terms {
            for ((p2, m2), c2) in &rhs.terms {
                out.insert_term((p1 + p2, m1 + m2), c1 * c2);
            }
        }
        out
    }

    pub fn scale_gaussian(&self, g: &GaussianRational) -> Self {
        if g.is_zero() {
            return Scalar::zero();
        }
        let mut out = Scalar::zero();
        for (k, v) in &self.terms {
            out.insert_term(*k, v * g);
        }
        out
    }

    pub fn pow(&self, mut e: u32) -> Self {
        let mut acc = Scalar::one();
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    /// `(-i)^m`, the phase prefactor of the boundary-case expansion.
    pub fn neg_i_pow(m: u32) -> Self {
        Scalar::i().neg().pow(m)
    }

    /// `1/k!` as an exact scalar.
    pub fn inv_factorial(k: u32) -> Self {
        let mut d = BigInt::one();
        for j in 2..=k as u64 {
            d *= BigInt::from(j);
        }
        Scalar::from_rational(BigRational::new(BigInt::one(), d))
    }

    /// Multiplicative inverse for scalars that are a single nonzero term.
    ///
    /// Used when dividing an exact result by a known monomial prefactor; the
    /// general quotient of π-polynomials is out of scope.
    pub fn inv_monomial(&self) -> Result<Scalar, ScalarError> {
        if self.terms.len() != 1 {
            return Err(ScalarError::NotAMonomial(self.to_string()));
        }
        let ((p, m), c) = self.terms.iter().next().unwrap();
        if *p != 0 || *m != 0 {
            return Err(ScalarError::NotAMonomial(self.to_string()));
        }
        Ok(Scalar::from_gaussian(c.inv()?))
    }

    /// Evaluates the π-polynomial at a numeric value of π.
    ///
    /// Errors when a symbolic Ω₃ factor is present: Ω₃ is never expanded
    /// numerically by the engine.
    pub fn eval(&self, pi_value: f64) -> Result<Complex64, ScalarError> {
        if !self.is_omega3_free() {
            return Err(ScalarError::SymbolicOmega(self.to_string()));
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for ((p, _), c) in &self.terms {
            acc += c.to_complex() * pi_value.powi(*p as i32);
        }
        Ok(acc)
    }
}

/// Sphere-area constant Ω_n = 2π^{n/2}/Γ(n/2).
///
/// Even n gives an exact π-power (Ω₂ = 2π, Ω₄ = 2π²); Ω₃ is returned as the
/// distinguished opaque generator and is never evaluated to a number.
pub fn omega(n: u32) -> Result<Scalar, ScalarError> {
    match n {
        2 => Ok(Scalar::pi().mul(&Scalar::from_i64(2))),
        3 => Ok(Scalar::omega3()),
        4 => Ok(Scalar::pi_pow(2).mul(&Scalar::from_i64(2))),
        other => Err(ScalarError::OmegaUnsupported(other)),
    }
}

fn coeff_prefix(g: &GaussianRational) -> String {
    // Coefficient as it appears in front of a pi/Om3 factor.
    if g.im.is_zero() && g.re.denom().is_one() && !g.re.is_negative() {
        format!("{}", g.re.numer())
    } else if g.im.is_zero() && g.re.is_one() {
        "1".to_string()
    } else {
        format!("({g})")
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut parts = Vec::new();
        for ((p, m), c) in &self.terms {
            let mut factors = Vec::new();
            match p {
                0 => {}
                1 => factors.push("pi".to_string()),
                k => factors.push(format!("pi^{k}")),
            }
            match m {
                0 => {}
                1 => factors.push("Om3".to_string()),
                k => factors.push(format!("Om3^{k}")),
            }
            if factors.is_empty() {
                parts.push(format!("{c}"));
            } else {
                let tail = factors.join("*");
                let is_one = c.im.is_zero() && c.re.is_one();
                let is_neg_one = c.im.is_zero() && (-c.re.clone()).is_one();
                if is_one {
                    parts.push(tail);
                } else if is_neg_one {
                    parts.push(format!("-{tail}"));
                } else {
                    parts.push(format!("{}*{}", coeff_prefix(c), tail));
                }
            }
        }
        write!(f, "{}", parts.join(" + "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pi2_over(n: i64, d: i64) -> Scalar {
        Scalar::pi_pow(2).mul(&Scalar::ratio(n, d))
    }

    #[test]
    fn addition_combines_theorem_coefficient() {
        // (-pi/8 + pi^2/3) + pi^2/6 = -pi/8 + pi^2/2
        let a = Scalar::pi().mul(&Scalar::ratio(-1, 8)).add(&pi2_over(1, 3));
        let b = pi2_over(1, 6);
        let expect = Scalar::pi().mul(&Scalar::ratio(-1, 8)).add(&pi2_over(1, 2));
        assert_eq!(a.add(&b), expect);
    }

    #[test]
    fn additive_identity_and_inverse() {
        let x = Scalar::pi().mul(&Scalar::i());
        assert_eq!(x.add(&Scalar::zero()), x);
        assert!(x.add(&x.neg()).is_zero());
    }

    #[test]
    fn multiplication_reaches_boundary_coefficient() {
        // 4 * (-pi/8 + pi^2/2) = -pi/2 + 2 pi^2
        let v = Scalar::pi().mul(&Scalar::ratio(-1, 8)).add(&pi2_over(1, 2));
        let got = v.mul(&Scalar::from_i64(4));
        let expect = Scalar::pi().mul(&Scalar::ratio(-1, 2)).add(&pi2_over(2, 1));
        assert_eq!(got, expect);
    }

    #[test]
    fn multiplication_reaches_odd_dim_coefficient() {
        // (i pi^2/6) * 2 * (2 pi) = 2 i pi^3 / 3
        let v = Scalar::pi_pow(2).mul(&Scalar::i()).mul(&Scalar::ratio(1, 6));
        let got = v.mul(&Scalar::from_i64(2)).mul(&omega(2).unwrap());
        let expect = Scalar::pi_pow(3).mul(&Scalar::i()).mul(&Scalar::ratio(2, 3));
        assert_eq!(got, expect);
    }

    #[test]
    fn imaginary_unit_squares_to_minus_one() {
        assert_eq!(Scalar::i().mul(&Scalar::i()), Scalar::from_i64(-1));
    }

    #[test]
    fn omega_values() {
        assert_eq!(omega(2).unwrap(), Scalar::pi().mul(&Scalar::from_i64(2)));
        assert_eq!(omega(4).unwrap(), Scalar::pi_pow(2).mul(&Scalar::from_i64(2)));
        assert_eq!(omega(3).unwrap(), Scalar::omega3());
        assert!(matches!(omega(5), Err(ScalarError::OmegaUnsupported(5))));
    }

    #[test]
    fn eval_theorem_coefficient() {
        let v = Scalar::pi().mul(&Scalar::ratio(-1, 2)).add(&pi2_over(2, 1));
        let x = v.eval(std::f64::consts::PI).unwrap();
        assert!((x.re - 18.168412475383818).abs() < 1e-9, "got {x}");
        assert!(x.im.abs() < 1e-12);
    }

    #[test]
    fn eval_trivia() {
        assert_eq!(Scalar::zero().eval(3.14).unwrap(), Complex64::new(0.0, 0.0));
        let i = Scalar::i().eval(2.0).unwrap();
        assert_eq!(i, Complex64::new(0.0, 1.0));
        assert!(Scalar::omega3().eval(3.14).is_err());
    }

    #[test]
    fn canonical_display() {
        let v = Scalar::pi().mul(&Scalar::ratio(-1, 2)).add(&pi2_over(2, 1));
        assert_eq!(v.to_string(), "(-1/2)*pi + 2*pi^2");
        let w = Scalar::pi_pow(3).mul(&Scalar::i()).mul(&Scalar::ratio(2, 3));
        assert_eq!(w.to_string(), "(2/3*i)*pi^3");
        assert_eq!(Scalar::zero().to_string(), "0");
    }

    #[test]
    fn gaussian_inverse() {
        let g = GaussianRational::new(rat(3, 2), rat(-5, 7));
        let inv = g.inv().unwrap();
        assert_eq!(&g * &inv, GaussianRational::one());
        assert!(GaussianRational::zero().inv().is_err());
    }
}
