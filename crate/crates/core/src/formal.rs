//! Sparse multivariate polynomials over [`Scalar`] in the formal generators
//! of the boundary computation: entries `a_β^p` of the product structure,
//! their first x-derivatives, the collar-metric derivative `h'(0)`, tangential
//! cotangent variables, and the abstract curvature/pairing symbols of the
//! interior term.
//!
//! Generators commute.  Canonicalization is eager: curvature symbols carry
//! their two antisymmetries, metric pairings are sorted, orthonormal-frame and
//! isometry pairings evaluate to Kronecker deltas, and zero coefficients are
//! never stored, so structural equality equals mathematical equality.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::error::{OracleError, PolyError};
use crate::scalar::Scalar;

/// Opaque vector label used by metric pairings and curvature symbols.
///
/// `E(a)` is the orthonormal frame vector, `J(a)` its image under the product
/// structure, `NablaJ(a, b)` the derivative `(∇_{e_a}J)e_b`, and `Hess(a, b)`
/// the second-derivative combination `(∇_{e_b}(∇_{e_a}J))e_b − (∇_{∇_{e_b}e_a}J)e_b`
/// that the interior term treats as a single symbol.  `Free` labels are for
/// generic test vectors.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Hash)]
pub enum VecLabel {
    E(u8),
    J(u8),
    NablaJ(u8, u8),
    Hess(u8, u8),
    Free(u8),
}

impl fmt::Display for VecLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VecLabel::E(a) => write!(f, "E({a})"),
            VecLabel::J(a) => write!(f, "J({a})"),
            VecLabel::NablaJ(a, b) => write!(f, "NJ({a},{b})"),
            VecLabel::Hess(a, b) => write!(f, "H({a},{b})"),
            VecLabel::Free(a) => write!(f, "X{a}"),
        }
    }
}

/// Commuting formal generator.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Hash)]
pub enum Gen {
    /// Matrix entry `a_β^p` of the product structure at the base point;
    /// first field is the subscript.
    A(u8, u8),
    /// First derivative `∂_{x_i}(a_β^p)`; fields `(i, β, p)`.
    DA(u8, u8, u8),
    /// Collar-metric normal derivative `h'(0)`.
    HP,
    /// Scalar curvature.
    S,
    /// Tangential cotangent variable `ξ_k`, `k < n`.
    XiT(u8),
    /// Normal cotangent variable `ξ_n` (only on the general, unrestricted track).
    XiN,
    /// The tangential norm square `|ξ'|²`, kept atomic until sphere restriction.
    XiPrimeSq,
    /// Metric pairing `g(u, v)`, stored with sorted arguments.
    GPair(VecLabel, VecLabel),
    /// Curvature scalar `R(u, v, w, z)`, antisymmetric in `(u,v)` and `(w,z)`.
    RCurv(VecLabel, VecLabel, VecLabel, VecLabel),
}

impl fmt::Display for Gen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gen::A(b, p) => write!(f, "A({b},{p})"),
            Gen::DA(i, b, p) => write!(f, "DA({i},{b},{p})"),
            Gen::HP => write!(f, "HP"),
            Gen::S => write!(f, "S"),
            Gen::XiT(k) => write!(f, "xi({k})"),
            Gen::XiN => write!(f, "xn"),
            Gen::XiPrimeSq => write!(f, "XiPrimeSq"),
            Gen::GPair(u, v) => write!(f, "G({u},{v})"),
            Gen::RCurv(u, v, w, z) => write!(f, "R({u},{v},{w},{z})"),
        }
    }
}

/// Result of canonicalizing a generator: a sign and an optional surviving
/// generator (deltas evaluate away, antisymmetric collisions vanish).
pub enum Canon {
    Zero,
    One,
    Neg(Gen),
    Pos(Gen),
}

/// Canonical metric pairing.  Frame-frame and isometry pairings reduce to
/// Kronecker deltas; everything else is sorted.
pub fn gpair(u: VecLabel, v: VecLabel) -> Canon {
    match (u, v) {
        (VecLabel::E(a), VecLabel::E(b)) | (VecLabel::J(a), VecLabel::J(b)) => {
            if a == b {
                Canon::One
            } else {
                Canon::Zero
            }
        }
        _ => {
            let (x, y) = if u <= v { (u, v) } else { (v, u) };
            Canon::Pos(Gen::GPair(x, y))
        }
    }
}

/// Canonical curvature symbol with the two antisymmetries.
pub fn rcurv(u: VecLabel, v: VecLabel, w: VecLabel, z: VecLabel) -> Canon {
    if u == v || w == z {
        return Canon::Zero;
    }
    let mut sign = 1i8;
    let (u, v) = if u <= v { (u, v) } else { (sign = -sign, (v, u)).1 };
    let (w, z) = if w <= z { (w, z) } else { (sign = -sign, (z, w)).1 };
    if sign > 0 {
        Canon::Pos(Gen::RCurv(u, v, w, z))
    } else {
        Canon::Neg(Gen::RCurv(u, v, w, z))
    }
}

/// The symmetric matrix entry in canonical index order.
pub fn a_sym(b: u8, p: u8) -> Gen {
    if b <= p {
        Gen::A(b, p)
    } else {
        Gen::A(p, b)
    }
}

/// Monomial: multiset of generators, stored sorted with positive exponents.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Default, Hash)]
pub struct Monomial(pub Vec<(Gen, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn single(g: Gen) -> Self {
        Monomial(vec![(g, 1)])
    }

    pub fn from_factors(mut factors: Vec<(Gen, u32)>) -> Self {
        factors.sort_by(|a, b| a.0.cmp(&b.0));
        let mut out: Vec<(Gen, u32)> = Vec::with_capacity(factors.len());
        for (g, e) in factors {
            if e == 0 {
                continue;
            }
            match out.last_mut() {
                Some((lg, le)) if *lg == g => *le += e,
                _ => out.push((g, e)),
            }
        }
        Monomial(out)
    }

    pub fn mul(&self, rhs: &Monomial) -> Monomial {
        let mut v = self.0.clone();
        v.extend(rhs.0.iter().cloned());
        Monomial::from_factors(v)
    }

    pub fn mul_gen(&self, g: Gen) -> Monomial {
        self.mul(&Monomial::single(g))
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    pub fn exponent(&self, g: &Gen) -> u32 {
        self.0
            .iter()
            .find_map(|(h, e)| if h == g { Some(*e) } else { None })
            .unwrap_or(0)
    }

    /// Divides by `divisor` if possible, returning the cofactor.
    pub fn divide(&self, divisor: &Monomial) -> Option<Monomial> {
        let mut out = Vec::new();
        let mut it = self.0.iter().cloned().peekable();
        for (g, e) in &divisor.0 {
            loop {
                let (hg, he) = it.next()?;
                if hg < *g {
                    out.push((hg, he));
                } else if hg == *g {
                    if he < *e {
                        return None;
                    }
                    if he > *e {
                        out.push((hg, he - e));
                    }
                    break;
                } else {
                    return None;
                }
            }
        }
        out.extend(it);
        Some(Monomial(out))
    }

    /// Splits factors into (matching, rest) by a generator predicate,
    /// preserving exponents.
    pub fn partition<F: Fn(&Gen) -> bool>(&self, pred: F) -> (Monomial, Monomial) {
        let mut yes = Vec::new();
        let mut no = Vec::new();
        for (g, e) in &self.0 {
            if pred(g) {
                yes.push((*g, *e));
            } else {
                no.push((*g, *e));
            }
        }
        (Monomial(yes), Monomial(no))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|(g, e)| if *e == 1 { format!("{g}") } else { format!("{g}^{e}") })
            .collect();
        write!(f, "{}", parts.join("*"))
    }
}

/// Sparse polynomial in commuting generators over [`Scalar`].
///
/// The optional `dim` records which ambient dimension the indices refer to;
/// dimensionless values (scalars) unify with anything.  Equality compares
/// terms only — the dimension tag is bookkeeping, not content.
#[derive(Clone, Eq, Debug, Default)]
pub struct FormalPoly {
    pub dim: Option<u8>,
    terms: BTreeMap<Monomial, Scalar>,
}

impl PartialEq for FormalPoly {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms
    }
}

fn unify(a: Option<u8>, b: Option<u8>) -> Result<Option<u8>, PolyError> {
    match (a, b) {
        (Some(x), Some(y)) if x != y => Err(PolyError::DimMismatch(x, y)),
        (Some(x), _) => Ok(Some(x)),
        (_, y) => Ok(y),
    }
}

impl FormalPoly {
    pub fn zero() -> Self {
        FormalPoly { dim: None, terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        FormalPoly::scalar(Scalar::one())
    }

    pub fn scalar(s: Scalar) -> Self {
        let mut terms = BTreeMap::new();
        if !s.is_zero() {
            terms.insert(Monomial::one(), s);
        }
        FormalPoly { dim: None, terms }
    }

    pub fn gen(n: u8, g: Gen) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(Monomial::single(g), Scalar::one());
        FormalPoly { dim: Some(n), terms }
    }

    pub fn from_canon(n: u8, c: Canon) -> Self {
        match c {
            Canon::Zero => FormalPoly::zero(),
            Canon::One => FormalPoly::one(),
            Canon::Pos(g) => FormalPoly::gen(n, g),
            Canon::Neg(g) => FormalPoly::gen(n, g).neg(),
        }
    }

    pub fn from_terms(
        dim: Option<u8>,
        it: impl IntoIterator<Item = (Monomial, Scalar)>,
    ) -> Self {
        let mut out = FormalPoly { dim, terms: BTreeMap::new() };
        for (m, c) in it {
            out.insert(m, c);
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Scalar)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> Scalar {
        self.terms.get(m).cloned().unwrap_or_else(Scalar::zero)
    }

    pub fn insert(&mut self, m: Monomial, c: Scalar) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
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

    pub fn try_add(&self, rhs: &FormalPoly) -> Result<FormalPoly, PolyError> {
        let dim = unify(self.dim, rhs.dim)?;
        let mut out = FormalPoly { dim, terms: self.terms.clone() };
        for (m, c) in &rhs.terms {
            out.insert(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn add(&self, rhs: &FormalPoly) -> FormalPoly {
        self.try_add(rhs).expect("dimension mismatch in polynomial addition")
    }

    pub fn neg(&self) -> FormalPoly {
        FormalPoly {
            dim: self.dim,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c.neg())).collect(),
        }
    }

    pub fn sub(&self, rhs: &FormalPoly) -> FormalPoly {
        self.add(&rhs.neg())
    }

    pub fn try_mul(&self, rhs: &FormalPoly) -> Result<FormalPoly, PolyError> {
        let dim = unify(self.dim, rhs.dim)?;
        let mut out = FormalPoly { dim, terms: BTreeMap::new() };
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                out.insert(m1.mul(m2), c1.mul(c2));
            }
        }
        Ok(out)
    }

    pub fn mul(&self, rhs: &FormalPoly) -> FormalPoly {
        self.try_mul(rhs).expect("dimension mismatch in polynomial multiplication")
    }

    pub fn scale(&self, s: &Scalar) -> FormalPoly {
        if s.is_zero() {
            return FormalPoly::zero();
        }
        let mut out = FormalPoly { dim: self.dim, terms: BTreeMap::new() };
        for (m, c) in &self.terms {
            out.insert(m.clone(), c.mul(s));
        }
        out
    }

    pub fn mul_canon(&self, c: Canon) -> FormalPoly {
        match c {
            Canon::Zero => FormalPoly::zero(),
            Canon::One => self.clone(),
            Canon::Pos(g) => self.mul_gen(g),
            Canon::Neg(g) => self.mul_gen(g).neg(),
        }
    }

    pub fn mul_gen(&self, g: Gen) -> FormalPoly {
        let mut out = FormalPoly { dim: self.dim, terms: BTreeMap::new() };
        for (m, c) in &self.terms {
            out.insert(m.mul_gen(g), c.clone());
        }
        out
    }

    /// Formal x-derivative in direction `i`: product rule with
    /// `A(β,p) ↦ DA(i,β,p)`; all other generators are x-constants at the
    /// evaluation point.  Differentiating a derivative symbol is unsupported.
    pub fn diff_x(&self, i: u8) -> Result<FormalPoly, PolyError> {
        let mut out = FormalPoly { dim: self.dim, terms: BTreeMap::new() };
        for (m, c) in &self.terms {
            for (pos, (g, e)) in m.0.iter().enumerate() {
                match g {
                    Gen::A(b, p) => {
                        // d/dx (A^e · rest) = e A^{e-1} DA · rest
                        let mut factors = m.0.clone();
                        factors[pos].1 -= 1;
                        factors.push((Gen::DA(i, *b, *p), 1));
                        let mono = Monomial::from_factors(factors);
                        out.insert(mono, c.mul(&Scalar::from_i64(*e as i64)));
                    }
                    Gen::DA(..) => return Err(PolyError::SecondDerivative),
                    _ => {}
                }
            }
        }
        Ok(out)
    }

    /// Formal derivative in the tangential cotangent variable `ξ_k`;
    /// `|ξ'|²` differentiates to `2ξ_k`.
    pub fn diff_xi_t(&self, k: u8) -> FormalPoly {
        let mut out = FormalPoly { dim: self.dim, terms: BTreeMap::new() };
        for (m, c) in &self.terms {
            for (pos, (g, e)) in m.0.iter().enumerate() {
                match g {
                    Gen::XiT(t) if *t == k => {
                        let mut factors = m.0.clone();
                        factors[pos].1 -= 1;
                        out.insert(
                            Monomial::from_factors(factors),
                            c.mul(&Scalar::from_i64(*e as i64)),
                        );
                    }
                    Gen::XiPrimeSq => {
                        let mut factors = m.0.clone();
                        factors[pos].1 -= 1;
                        factors.push((Gen::XiT(k), 1));
                        out.insert(
                            Monomial::from_factors(factors),
                            c.mul(&Scalar::from_i64(2 * *e as i64)),
                        );
                    }
                    _ => {}
                }
            }
        }
        out
    }

    /// Formal derivative in the normal cotangent variable.
    pub fn diff_xi_n(&self) -> FormalPoly {
        let mut out = FormalPoly { dim: self.dim, terms: BTreeMap::new() };
        for (m, c) in &self.terms {
            for (pos, (g, e)) in m.0.iter().enumerate() {
                if matches!(g, Gen::XiN) {
                    let mut factors = m.0.clone();
                    factors[pos].1 -= 1;
                    out.insert(
                        Monomial::from_factors(factors),
                        c.mul(&Scalar::from_i64(*e as i64)),
                    );
                }
            }
        }
        out
    }

    /// Replaces the structure entries and their derivatives by exact scalar
    /// values, keeping all other generators formal.
    pub fn subst_structure(
        &self,
        a_val: &dyn Fn(u8, u8) -> Scalar,
        da_val: &dyn Fn(u8, u8, u8) -> Scalar,
    ) -> FormalPoly {
        let mut out = FormalPoly { dim: self.dim, terms: BTreeMap::new() };
        for (m, c) in &self.terms {
            let mut coeff = c.clone();
            let mut factors = Vec::new();
            for (g, e) in &m.0 {
                match g {
                    Gen::A(b, p) => coeff = coeff.mul(&a_val(*b, *p).pow(*e)),
                    Gen::DA(i, b, p) => coeff = coeff.mul(&da_val(*i, *b, *p).pow(*e)),
                    other => factors.push((*other, *e)),
                }
            }
            out.insert(Monomial::from_factors(factors), coeff);
        }
        out
    }

    /// Substitutes `|ξ'|² ↦ 1` (restriction to the unit tangential sphere).
    pub fn restrict_xi_prime(&self) -> FormalPoly {
        let mut out = FormalPoly { dim: self.dim, terms: BTreeMap::new() };
        for (m, c) in &self.terms {
            let (_, rest) = m.partition(|g| matches!(g, Gen::XiPrimeSq));
            out.insert(rest, c.clone());
        }
        out
    }

    /// Expands `|ξ'|² = Σ_k ξ_k²` for structural comparisons on the general
    /// track, where both spellings may occur.
    pub fn expand_xi_prime(&self, n: u8) -> FormalPoly {
        let mut expansion = FormalPoly::zero();
        for k in 1..n {
            expansion = expansion.add(&FormalPoly::gen(n, Gen::XiT(k)).mul_gen(Gen::XiT(k)));
        }
        let mut out = FormalPoly { dim: unify(self.dim, Some(n)).expect("dim"), terms: BTreeMap::new() };
        for (m, c) in &self.terms {
            let (prime, rest) = m.partition(|g| matches!(g, Gen::XiPrimeSq));
            let mut piece = FormalPoly::from_terms(self.dim, [(rest, c.clone())]);
            for _ in 0..prime.exponent(&Gen::XiPrimeSq) {
                piece = piece.mul(&expansion);
            }
            out = out.add(&piece);
        }
        out
    }

    /// Numeric evaluation: generators through `val`, π through `pi_value`.
    pub fn eval_complex(
        &self,
        pi_value: f64,
        val: &dyn Fn(&Gen) -> Option<Complex64>,
    ) -> Result<Complex64, OracleError> {
        let mut acc = Complex64::new(0.0, 0.0);
        for (m, c) in &self.terms {
            let mut term = c.eval(pi_value)?;
            for (g, e) in &m.0 {
                let v = val(g).ok_or_else(|| OracleError::CannotInstantiate(g.to_string()))?;
                term *= v.powu(*e);
            }
            acc += term;
        }
        Ok(acc)
    }

    /// Rewrites with the product-structure relations: index symmetry of the
    /// matrix entries, the full contraction `Σ_h a_h^p a_h^q = δ_pq`, and the
    /// contracted derivative relation `Σ_β ∂(a_β^p) a_β^q + a_β^p ∂(a_β^q) = 0`,
    /// applied to fixed point.  Requires a configured dimension.
    pub fn substitute_j_relations(&self) -> FormalPoly {
        let n = match self.dim {
            Some(n) => n,
            None => return self.clone(),
        };
        let mut p = self.symmetrize_a();
        let mut guard = 0usize;
        loop {
            guard += 1;
            debug_assert!(guard < 10_000, "relation rewriting did not reach a fixed point");
            if guard >= 10_000 {
                return p;
            }
            if let Some(next) = p.apply_contraction(n) {
                p = next;
                continue;
            }
            if let Some(next) = p.apply_derivative_relation(n) {
                p = next;
                continue;
            }
            return p;
        }
    }

    /// Sorts the indices of every structure entry (the symmetry relation
    /// alone, without contractions).
    pub fn symmetrize_entries(&self) -> FormalPoly {
        self.symmetrize_a()
    }

    fn symmetrize_a(&self) -> FormalPoly {
        let mut out = FormalPoly { dim: self.dim, terms: BTreeMap::new() };
        for (m, c) in &self.terms {
            let factors = m
                .0
                .iter()
                .map(|(g, e)| match g {
                    Gen::A(b, p) => (a_sym(*b, *p), *e),
                    other => (*other, *e),
                })
                .collect();
            out.insert(Monomial::from_factors(factors), c.clone());
        }
        out
    }

    /// One application of `Σ_h a_h^p a_h^q → δ_pq` (h over either slot; the
    /// entries are already index-sorted).  Returns `None` when no full
    /// contraction with a uniform coefficient is present.
    fn apply_contraction(&self, n: u8) -> Option<FormalPoly> {
        for (m, c) in &self.terms {
            let a_factors: Vec<(u8, u8)> = m
                .0
                .iter()
                .filter_map(|(g, _)| match g {
                    Gen::A(b, p) => Some((*b, *p)),
                    _ => None,
                })
                .collect();
            // Candidate (h, p) choices from each A-factor: h may sit in
            // either slot because the entries are symmetric.
            for &(b1, p1) in &a_factors {
                for &(b2, p2) in &a_factors {
                    for (h1, q1) in [(b1, p1), (p1, b1)] {
                        for (h2, q2) in [(b2, p2), (p2, b2)] {
                            if h1 != h2 {
                                continue;
                            }
                            let pair =
                                Monomial::from_factors(vec![(a_sym(h1, q1), 1), (a_sym(h2, q2), 1)]);
                            let cof = match m.divide(&pair) {
                                Some(cof) => cof,
                                None => continue,
                            };
                            if let Some(next) = self.try_contract(n, &cof, q1, q2, c) {
                                return Some(next);
                            }
                        }
                    }
                }
            }
        }
        None
    }

    fn try_contract(
        &self,
        n: u8,
        cof: &Monomial,
        p: u8,
        q: u8,
        coeff: &Scalar,
    ) -> Option<FormalPoly> {
        // All n monomials cof·a_h^p·a_h^q must be present with the same coefficient.
        let mut pattern = Vec::with_capacity(n as usize);
        for h in 1..=n {
            let mono = cof.mul(&Monomial::from_factors(vec![(a_sym(h, p), 1), (a_sym(h, q), 1)]));
            if &self.coeff(&mono) != coeff {
                return None;
            }
            pattern.push(mono);
        }
        let mut out = self.clone();
        for mono in pattern {
            out.insert(mono, coeff.neg());
        }
        if p == q {
            out.insert(cof.clone(), coeff.clone());
        }
        Some(out)
    }

    /// One application of the contracted derivative relation, oriented so the
    /// derivative symbol ends up on the larger of the two free indices:
    /// `Σ_β ∂_k(a_β^p) a_β^q ↦ −Σ_β a_β^p ∂_k(a_β^q)` for `p < q`, and the
    /// self-paired sum `Σ_β ∂_k(a_β^p) a_β^p ↦ 0`.
    ///
    /// Only tangential derivative directions `k < n` qualify: along the
    /// collar direction the metric varies and the contraction identity is
    /// not differentiable to zero.
    fn apply_derivative_relation(&self, n: u8) -> Option<FormalPoly> {
        for (m, c) in &self.terms {
            let da_factors: Vec<(u8, u8, u8)> = m
                .0
                .iter()
                .filter_map(|(g, _)| match g {
                    Gen::DA(k, b, p) if *k < n => Some((*k, *b, *p)),
                    _ => None,
                })
                .collect();
            let a_factors: Vec<(u8, u8)> = m
                .0
                .iter()
                .filter_map(|(g, _)| match g {
                    Gen::A(b, p) => Some((*b, *p)),
                    _ => None,
                })
                .collect();
            for &(k, beta, p) in &da_factors {
                for &(b2, p2) in &a_factors {
                    for (bb, q) in [(b2, p2), (p2, b2)] {
                        if bb != beta || p > q {
                            continue;
                        }
                        let pair = Monomial::from_factors(vec![
                            (Gen::DA(k, beta, p), 1),
                            (a_sym(beta, q), 1),
                        ]);
                        let cof = match m.divide(&pair) {
                            Some(cof) => cof,
                            None => continue,
                        };
                        if let Some(next) = self.try_derivative(n, &cof, k, p, q, c) {
                            return Some(next);
                        }
                    }
                }
            }
        }
        None
    }

    fn try_derivative(
        &self,
        n: u8,
        cof: &Monomial,
        k: u8,
        p: u8,
        q: u8,
        coeff: &Scalar,
    ) -> Option<FormalPoly> {
        let mut pattern = Vec::with_capacity(n as usize);
        for b in 1..=n {
            let mono =
                cof.mul(&Monomial::from_factors(vec![(Gen::DA(k, b, p), 1), (a_sym(b, q), 1)]));
            if &self.coeff(&mono) != coeff {
                return None;
            }
            pattern.push(mono);
        }
        let mut out = self.clone();
        for mono in pattern {
            out.insert(mono, coeff.neg());
        }
        if p < q {
            for b in 1..=n {
                let mono =
                    cof.mul(&Monomial::from_factors(vec![(a_sym(b, p), 1), (Gen::DA(k, b, q), 1)]));
                out.insert(mono, coeff.neg());
            }
        }
        Some(out)
    }

    /// Exact substitution of a structure-variety point: entries and
    /// derivative entries become rationals, everything else stays formal.
    pub fn eval_structure_point(&self, pt: &StructurePoint) -> FormalPoly {
        self.subst_structure(
            &|b, p| Scalar::from_rational(pt.j0[(b - 1) as usize][(p - 1) as usize].clone()),
            &|i, b, p| {
                Scalar::from_rational(
                    pt.dj[(i - 1) as usize][(b - 1) as usize][(p - 1) as usize].clone(),
                )
            },
        )
    }

    /// Modular evaluation at a point of the constraint variety with all
    /// cotangent and metric generators sampled; accumulates one residue per
    /// (π-power, Ω-power) pair.  `None` when a generator has no numeric
    /// meaning on this track (pairing/curvature symbols).
    fn eval_mod_p(&self, ctx: &modp::ModCtx) -> Option<Vec<u64>> {
        let mut acc: BTreeMap<(u32, u32), u64> = BTreeMap::new();
        for (m, c) in &self.terms {
            let mut factor = 1u64;
            for (g, e) in &m.0 {
                let v = ctx.gen_value(g)?;
                factor = modp::mulmod(factor, modp::powmod(v, *e as u64));
            }
            for ((pi, om), gauss) in c.terms() {
                let gv = ctx.gauss_value(gauss);
                let entry = acc.entry((*pi, *om)).or_insert(0);
                *entry = modp::addmod(*entry, modp::mulmod(factor, gv));
            }
        }
        Some(acc.into_values().collect())
    }

    /// Zero test modulo the structure relations: randomized exact evaluation
    /// at rational points of the constraint variety (all involution
    /// signatures), carried out over a large prime field.  π and the sphere
    /// factor stay formal; everything else is sampled.
    pub fn is_zero_on_structure_variety(&self, n: u8) -> bool {
        for seed in 1..=2u64 {
            for signature in 0..=n {
                let pt = StructurePoint::sample(n, signature, seed * 7919 + signature as u64);
                let ctx = modp::ModCtx::new(&pt, seed * 65537 + signature as u64);
                match self.eval_mod_p(&ctx) {
                    Some(values) => {
                        if values.iter().any(|&v| v != 0) {
                            return false;
                        }
                    }
                    None => return false,
                }
            }
        }
        true
    }

    /// Maximal exponent of the normal variable across all monomials.
    pub fn xin_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.exponent(&Gen::XiN)).max().unwrap_or(0)
    }

    /// Splits off the normal-variable exponent of each monomial.
    pub fn split_xin(&self) -> Vec<(u32, Monomial, Scalar)> {
        self.terms
            .iter()
            .map(|(m, c)| {
                let (xin, rest) = m.partition(|g| matches!(g, Gen::XiN));
                (xin.exponent(&Gen::XiN), rest, c.clone())
            })
            .collect()
    }

    pub fn contains_gen<F: Fn(&Gen) -> bool>(&self, pred: F) -> bool {
        self.terms.keys().any(|m| m.0.iter().any(|(g, _)| pred(g)))
    }
}

/// Prime-field helpers for the randomized variety zero test.
pub mod modp {
    use super::{Gen, StructurePoint};
    use crate::scalar::GaussianRational;
    use num_bigint::BigInt;
    use num_traits::ToPrimitive;

    /// A prime with `p ≡ 1 (mod 4)` so the Gaussian unit exists in the field.
    pub const P: u64 = 1_000_000_009;

    pub fn addmod(a: u64, b: u64) -> u64 {
        (a + b) % P
    }

    pub fn mulmod(a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % P as u128) as u64
    }

    pub fn powmod(mut base: u64, mut e: u64) -> u64 {
        let mut acc = 1u64;
        base %= P;
        while e > 0 {
            if e & 1 == 1 {
                acc = mulmod(acc, base);
            }
            base = mulmod(base, base);
            e >>= 1;
        }
        acc
    }

    pub fn invmod(a: u64) -> u64 {
        powmod(a, P - 2)
    }

    /// A square root of −1 in the field.
    pub fn imag_unit() -> u64 {
        for a in 2u64.. {
            if powmod(a, (P - 1) / 2) == P - 1 {
                return powmod(a, (P - 1) / 4);
            }
        }
        unreachable!()
    }

    fn bigint_mod(v: &BigInt) -> u64 {
        let p = BigInt::from(P);
        let r = ((v % &p) + &p) % &p;
        r.to_u64().expect("reduced residue fits u64")
    }

    fn rational_mod(r: &crate::scalar::Rational) -> u64 {
        mulmod(bigint_mod(r.numer()), invmod(bigint_mod(r.denom())))
    }

    /// Sampled evaluation context: structure entries from a variety point,
    /// cotangent and metric generators random.
    pub struct ModCtx {
        n: usize,
        a: Vec<Vec<u64>>,
        da: Vec<Vec<Vec<u64>>>,
        hp: u64,
        s: u64,
        xit: Vec<u64>,
        xin: u64,
        xi_prime_sq: u64,
        i_unit: u64,
    }

    impl ModCtx {
        pub fn new(pt: &StructurePoint, seed: u64) -> ModCtx {
            let n = pt.n as usize;
            let mut state = seed.wrapping_mul(0x2545f4914f6cdd1d).wrapping_add(99);
            let mut next = move || {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                state % P
            };
            let a = pt.j0.iter().map(|r| r.iter().map(rational_mod).collect()).collect();
            let da = pt
                .dj
                .iter()
                .map(|m| m.iter().map(|r| r.iter().map(rational_mod).collect()).collect())
                .collect();
            let xit: Vec<u64> = (1..n).map(|_| next()).collect();
            let xi_prime_sq = xit.iter().fold(0, |acc, &x| addmod(acc, mulmod(x, x)));
            ModCtx {
                n,
                a,
                da,
                hp: next(),
                s: next(),
                xit,
                xin: next(),
                xi_prime_sq,
                i_unit: imag_unit(),
            }
        }

        pub fn gen_value(&self, g: &Gen) -> Option<u64> {
            match g {
                Gen::A(b, p) => Some(self.a[(*b - 1) as usize][(*p - 1) as usize]),
                Gen::DA(i, b, p) => {
                    Some(self.da[(*i - 1) as usize][(*b - 1) as usize][(*p - 1) as usize])
                }
                Gen::HP => Some(self.hp),
                Gen::S => Some(self.s),
                Gen::XiT(k) => {
                    debug_assert!((*k as usize) < self.n);
                    self.xit.get((*k - 1) as usize).copied()
                }
                Gen::XiN => Some(self.xin),
                Gen::XiPrimeSq => Some(self.xi_prime_sq),
                Gen::GPair(..) | Gen::RCurv(..) => None,
            }
        }

        pub fn gauss_value(&self, g: &GaussianRational) -> u64 {
            addmod(rational_mod(&g.re), mulmod(self.i_unit, rational_mod(&g.im)))
        }
    }
}

/// Exact rational point of the constraint variety: a symmetric orthogonal
/// involution `J₀` together with symmetric derivative matrices `dJ_i`
/// anticommuting with it.
///
/// `J₀` is built from reflections along exactly orthogonalized rational
/// vectors (`signature` counts the −1 eigenvalues) and each `dJ_i` is the
/// commutator of a rational antisymmetric matrix with `J₀`, so all the
/// relations hold exactly in ℚ.
#[derive(Clone, Debug)]
pub struct StructurePoint {
    pub n: u8,
    pub j0: Vec<Vec<crate::scalar::Rational>>,
    pub dj: Vec<Vec<Vec<crate::scalar::Rational>>>,
}

impl StructurePoint {
    pub fn sample(n: u8, signature: u8, seed: u64) -> StructurePoint {
        use crate::scalar::{rat, Rational};
        use num_traits::Zero;
        let n = n as usize;
        let k = (signature as usize).min(n);
        let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            rat((state % 9) as i64 - 4, 1)
        };
        // Orthogonalize k random rational vectors (Gram–Schmidt in ℚ).
        let mut basis: Vec<Vec<Rational>> = Vec::new();
        while basis.len() < k {
            let mut v: Vec<Rational> = (0..n).map(|_| next()).collect();
            for b in &basis {
                let num: Rational = (0..n).map(|t| &v[t] * &b[t]).sum();
                let den: Rational = (0..n).map(|t| &b[t] * &b[t]).sum();
                let c = num / den;
                for t in 0..n {
                    let d = &c * &b[t];
                    v[t] = &v[t] - &d;
                }
            }
            if v.iter().any(|x| !x.is_zero()) {
                basis.push(v);
            }
        }
        // J₀ = I − 2 Σ v vᵀ/|v|².
        let mut j0 = vec![vec![Rational::zero(); n]; n];
        for (d, row) in j0.iter_mut().enumerate() {
            row[d] = rat(1, 1);
        }
        for v in &basis {
            let norm: Rational = (0..n).map(|t| &v[t] * &v[t]).sum();
            for r in 0..n {
                for c in 0..n {
                    let upd = rat(2, 1) * &v[r] * &v[c] / norm.clone();
                    j0[r][c] = &j0[r][c] - &upd;
                }
            }
        }
        // dJ_i = Ω_i J₀ − J₀ Ω_i with Ω antisymmetric.
        let mut dj = Vec::with_capacity(n);
        for _ in 0..n {
            let mut omega = vec![vec![Rational::zero(); n]; n];
            for r in 0..n {
                for c in (r + 1)..n {
                    let x = next();
                    omega[r][c] = x.clone();
                    omega[c][r] = -x;
                }
            }
            let mut s = vec![vec![Rational::zero(); n]; n];
            for r in 0..n {
                for c in 0..n {
                    let mut acc = Rational::zero();
                    for t in 0..n {
                        acc += &omega[r][t] * &j0[t][c];
                        acc -= &j0[r][t] * &omega[t][c];
                    }
                    s[r][c] = acc;
                }
            }
            dj.push(s);
        }
        StructurePoint { n: n as u8, j0, dj }
    }
}

impl fmt::Display for FormalPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(m, c)| {
                if m.0.is_empty() {
                    format!("({c})")
                } else {
                    format!("({c})*{m}")
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Scalar;

    fn a(n: u8, b: u8, p: u8) -> FormalPoly {
        FormalPoly::gen(n, Gen::A(b, p))
    }

    #[test]
    fn rcurv_antisymmetry_cancels() {
        let n = 4;
        let u = VecLabel::J(1);
        let v = VecLabel::J(2);
        let w = VecLabel::E(3);
        let z = VecLabel::E(4);
        let s = FormalPoly::from_canon(n, rcurv(u, v, w, z))
            .add(&FormalPoly::from_canon(n, rcurv(v, u, w, z)));
        assert!(s.is_zero());
        assert!(matches!(rcurv(u, u, w, z), Canon::Zero));
    }

    #[test]
    fn generators_commute() {
        let n = 4;
        let lhs = a(n, 1, 2).mul(&a(n, 2, 1));
        let rhs = a(n, 2, 1).mul(&a(n, 1, 2));
        assert!(lhs.sub(&rhs).is_zero());
    }

    #[test]
    fn gpair_deltas() {
        assert!(matches!(gpair(VecLabel::E(2), VecLabel::E(2)), Canon::One));
        assert!(matches!(gpair(VecLabel::E(1), VecLabel::E(2)), Canon::Zero));
        assert!(matches!(gpair(VecLabel::J(3), VecLabel::J(3)), Canon::One));
        // Mixed pairings stay formal, sorted.
        match gpair(VecLabel::NablaJ(1, 2), VecLabel::J(1)) {
            Canon::Pos(Gen::GPair(VecLabel::J(1), VecLabel::NablaJ(1, 2))) => {}
            _ => panic!("expected sorted formal pairing"),
        }
    }

    #[test]
    fn contraction_gives_delta() {
        let n = 4;
        // sum_b A(b,3)^2 -> 1
        let mut s = FormalPoly::zero();
        for b in 1..=n {
            s = s.add(&a(n, b, 3).mul(&a(n, b, 3)));
        }
        assert_eq!(s.substitute_j_relations(), FormalPoly::one());

        // sum_b A(b,1)*A(b,2) -> 0
        let mut t = FormalPoly::zero();
        for b in 1..=n {
            t = t.add(&a(n, b, 1).mul(&a(n, b, 2)));
        }
        assert!(t.substitute_j_relations().is_zero());
    }

    #[test]
    fn symmetry_canonicalizes() {
        let n = 4;
        assert_eq!(a(n, 2, 1).substitute_j_relations(), a(n, 1, 2));
    }

    #[test]
    fn derivative_relation_cancels_summed_pattern() {
        let n = 4;
        // sum_{b<=n, i<n} A(b,i)·DA(i,b,n) + A(b,n)·DA(i,b,i) -> 0
        let mut s = FormalPoly::zero();
        for i in 1..n {
            for b in 1..=n {
                s = s.add(&a(n, b, i).mul(&FormalPoly::gen(n, Gen::DA(i, b, n))));
                s = s.add(&a(n, b, n).mul(&FormalPoly::gen(n, Gen::DA(i, b, i))));
            }
        }
        assert!(s.substitute_j_relations().is_zero());
    }

    #[test]
    fn substitution_is_idempotent() {
        let n = 4;
        let mut s = FormalPoly::gen(n, Gen::HP).mul(&a(n, 2, 1));
        for b in 1..=n {
            s = s.add(&a(n, b, 1).mul(&a(n, b, 1)).mul(&a(n, 3, 2)));
        }
        for i in 1..n {
            for b in 1..=n {
                s = s.add(&a(n, b, i).mul(&FormalPoly::gen(n, Gen::DA(i, b, n))).scale(&Scalar::pi()));
            }
        }
        let once = s.substitute_j_relations();
        let twice = once.substitute_j_relations();
        assert_eq!(once, twice);
    }

    #[test]
    fn diff_x_definition_and_product_rule() {
        let n = 4;
        let d = a(n, 2, 3).diff_x(1).unwrap();
        assert_eq!(d, FormalPoly::gen(n, Gen::DA(1, 2, 3)));

        let prod = a(n, 1, 1).mul(&a(n, 2, 2));
        let d = prod.diff_x(3).unwrap();
        let expect = FormalPoly::gen(n, Gen::DA(3, 1, 1))
            .mul(&a(n, 2, 2))
            .add(&a(n, 1, 1).mul(&FormalPoly::gen(n, Gen::DA(3, 2, 2))));
        assert_eq!(d, expect);

        let c = FormalPoly::scalar(Scalar::from_i64(5));
        assert!(c.diff_x(1).unwrap().is_zero());

        let da = FormalPoly::gen(n, Gen::DA(1, 1, 1));
        assert_eq!(da.diff_x(2), Err(PolyError::SecondDerivative));
    }

    #[test]
    fn dim_mismatch_detected() {
        let p = a(4, 1, 2);
        let q = a(3, 1, 2);
        assert!(p.try_add(&q).is_err());
        assert!(p.try_mul(&q).is_err());
        assert!(p.try_add(&FormalPoly::one()).is_ok());
    }

    #[test]
    fn structure_points_satisfy_constraints_exactly() {
        use crate::scalar::Rational;
        use num_traits::{One, Zero};
        for n in [3u8, 4] {
            for signature in 0..=n {
                let pt = StructurePoint::sample(n, signature, 42 + signature as u64);
                let nn = n as usize;
                for r in 0..nn {
                    for c in 0..nn {
                        assert_eq!(pt.j0[r][c], pt.j0[c][r], "J symmetric");
                        let mut sq = Rational::zero();
                        for t in 0..nn {
                            sq += &pt.j0[r][t] * &pt.j0[t][c];
                        }
                        if r == c {
                            assert!(sq.is_one(), "J^2 = id");
                        } else {
                            assert!(sq.is_zero(), "J^2 = id off-diagonal");
                        }
                        for i in 0..nn {
                            assert_eq!(pt.dj[i][r][c], pt.dj[i][c][r], "dJ symmetric");
                            let mut anti = Rational::zero();
                            for t in 0..nn {
                                anti += &pt.dj[i][r][t] * &pt.j0[t][c];
                                anti += &pt.j0[r][t] * &pt.dj[i][t][c];
                            }
                            assert!(anti.is_zero(), "dJ anticommutes with J");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn variety_check_accepts_contraction_and_rejects_noise() {
        let n = 4;
        let mut s = FormalPoly::one().neg();
        for b in 1..=n {
            s = s.add(&a(n, b, 2).mul(&a(n, b, 2)));
        }
        assert!(s.is_zero_on_structure_variety(n));
        assert!(!a(n, 1, 2).is_zero_on_structure_variety(n));
    }

    #[test]
    fn canonical_form_difference_is_structural_zero() {
        let n = 4;
        let p = a(n, 1, 2)
            .mul(&a(n, 3, 4))
            .scale(&Scalar::pi())
            .add(&FormalPoly::gen(n, Gen::XiT(2)).scale(&Scalar::i()));
        assert!(p.sub(&p).is_zero());
    }
}
