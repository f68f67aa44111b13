//! End-to-end boundary computations: the case enumeration over the
//! homogeneity constraint, the per-case differentiate/project/trace/integrate
//! chain, cancellation of the case sums, and the final assemblies in
//! dimensions four and three.
//!
//! Every case is computed twice from the same integrand: once under the
//! bookkeeping of the source computation (coefficients per `tr[id]·Ω`, with
//! tangential moments `1` and `4π/3·δ`), once under honest sphere measure
//! (used by the numeric oracle).

use crate::clifford::tr_id;
use crate::error::PipelineError;
use crate::formal::{FormalPoly, Gen, Monomial};
use crate::scalar::{omega, Scalar};
use crate::symbol::{parametrix, SymbolTerm};
use crate::xi::{MomentRule, RatXi, XiPoly};

/// Multi-index data selecting one term class of the boundary sum.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CaseSpec {
    pub id: &'static str,
    pub r: i32,
    pub l: i32,
    pub k: u32,
    pub j: u32,
    pub alpha: u32,
}

impl CaseSpec {
    /// The homogeneity bookkeeping `r + l − k − |α| − j − 1 = −n`.
    pub fn homogeneity_holds(&self, n: u8) -> bool {
        self.r + self.l - self.k as i32 - self.alpha as i32 - self.j as i32 - 1 == -(n as i32)
    }
}

/// All integer solutions of the homogeneity constraint with both orders in
/// the range covered by the parametrix.
pub fn boundary_cases(n: u8) -> Result<Vec<CaseSpec>, PipelineError> {
    match n {
        4 => Ok(vec![
            CaseSpec { id: "psi1", r: -1, l: -1, k: 0, j: 0, alpha: 1 },
            CaseSpec { id: "psi2", r: -1, l: -1, k: 0, j: 1, alpha: 0 },
            CaseSpec { id: "psi3", r: -1, l: -1, k: 1, j: 0, alpha: 0 },
            CaseSpec { id: "psi4", r: -2, l: -1, k: 0, j: 0, alpha: 0 },
            CaseSpec { id: "psi5", r: -1, l: -2, k: 0, j: 0, alpha: 0 },
        ]),
        3 => Ok(vec![CaseSpec { id: "phi", r: -1, l: -1, k: 0, j: 0, alpha: 0 }]),
        other => Err(PipelineError::UnsupportedDim(other)),
    }
}

/// Outcome of one boundary case.
#[derive(Clone, Debug)]
pub struct CaseOutcome {
    pub spec: CaseSpec,
    /// Exact coefficients per unit `tr[id]·Ω_{n−1}` (source bookkeeping).
    pub per_unit: FormalPoly,
    /// Honest value of the double integral including `tr[id]`.
    pub honest: FormalPoly,
}

/// Shared parametrix data for a fixed dimension.
pub struct BoundaryPipeline {
    pub n: u8,
    q1: SymbolTerm,
    q2: SymbolTerm,
}

impl BoundaryPipeline {
    pub fn new(n: u8) -> Result<Self, PipelineError> {
        if !(n == 3 || n == 4) {
            return Err(PipelineError::UnsupportedDim(n));
        }
        let (q1, q2) = parametrix(n)?;
        Ok(BoundaryPipeline { n, q1, q2 })
    }

    fn symbol(&self, order: i32, l: i32) -> Result<&SymbolTerm, PipelineError> {
        match order {
            -1 => Ok(&self.q1),
            -2 => Ok(&self.q2),
            _ => Err(PipelineError::CaseOutOfRange { r: order, l }),
        }
    }

    /// Executes the full chain for one case: differentiate, project,
    /// multiply, trace, integrate over the normal line by residues and over
    /// the tangential sphere by moments.
    pub fn case_term(&self, spec: &CaseSpec) -> Result<CaseOutcome, PipelineError> {
        let n = self.n;
        if !spec.homogeneity_holds(n) {
            return Err(PipelineError::CaseOutOfRange { r: spec.r, l: spec.l });
        }
        let directions: Vec<Option<u8>> = if spec.alpha == 0 {
            vec![None]
        } else {
            (1..n).map(Some).collect()
        };
        let mut per_unit = FormalPoly::zero();
        let mut honest = FormalPoly::zero();
        for dir in directions {
            // Left factor: ∂_{x_n}^j ∂_{ξ'}^α σ_r, restricted, projected,
            // then ∂_{ξ_n}^k.
            let mut left = self.symbol(spec.r, spec.l)?.value.clone();
            if let Some(i) = dir {
                left = left.dxi(n, i);
            }
            for _ in 0..spec.j {
                left = left.dx_boundary(n, n)?;
            }
            let mut lb = left.restrict_to_sphere()?.pi_plus()?;
            for _ in 0..spec.k {
                lb = lb.dxi_n();
            }
            // Right factor: ∂_{x'}^α ∂_{x_n}^k σ_l, restricted, then
            // ∂_{ξ_n}^{j+1}.
            let mut right = self.symbol(spec.l, spec.r)?.value.clone();
            if let Some(i) = dir {
                right = right.dx_boundary(n, i)?;
            }
            for _ in 0..spec.k {
                right = right.dx_boundary(n, n)?;
            }
            let mut rb = right.restrict_to_sphere()?;
            for _ in 0..=spec.j {
                rb = rb.dxi_n();
            }

            let integrand: RatXi = lb.mul(&rb).scalar_part();
            per_unit = per_unit.add(&integrate_moments(&integrand, n, MomentRule::PaperOmega)?);
            honest = honest.add(&integrate_moments(&integrand, n, MomentRule::TrueMeasure)?);
        }
        let pref = case_prefactor(n, spec);
        Ok(CaseOutcome {
            spec: spec.clone(),
            per_unit: per_unit.scale(&pref),
            honest: honest.scale(&pref.mul(&Scalar::from_i64(tr_id(n) as i64))),
        })
    }

    pub fn all_cases(&self) -> Result<Vec<CaseOutcome>, PipelineError> {
        boundary_cases(self.n)?.iter().map(|s| self.case_term(s)).collect()
    }
}

/// Phase and combinatorial prefactor of one case.
///
/// In dimension four this is `(−i)^{|α|+j+k+1}/(α!·(j+k+1)!)`; the
/// three-dimensional boundary formula carries no phase.
fn case_prefactor(n: u8, spec: &CaseSpec) -> Scalar {
    let comb = Scalar::inv_factorial(spec.j + spec.k + 1);
    if n == 3 {
        comb
    } else {
        Scalar::neg_i_pow(spec.alpha + spec.j + spec.k + 1).mul(&comb)
    }
}

/// Integrates `∫_{sphere}∫_line integrand`: tangential monomials are grouped
/// by exponent pattern and weighted by the moment rule, then each group is
/// line-integrated by residues.
pub fn integrate_moments(
    integrand: &RatXi,
    n: u8,
    rule: MomentRule,
) -> Result<FormalPoly, PipelineError> {
    use std::collections::BTreeMap;
    let m = n - 1;
    let mut groups: BTreeMap<Vec<u32>, Vec<FormalPoly>> = BTreeMap::new();
    for (deg, coeff) in integrand.num.coeffs().iter().enumerate() {
        for (mono, scal) in coeff.terms() {
            let (xit, rest) = mono.partition(|g| matches!(g, Gen::XiT(_)));
            let mut exps = vec![0u32; m as usize];
            for (g, e) in &xit.0 {
                if let Gen::XiT(k) = g {
                    exps[(*k - 1) as usize] = *e;
                }
            }
            let slots = groups.entry(exps).or_insert_with(Vec::new);
            if slots.len() <= deg {
                slots.resize(deg + 1, FormalPoly::zero());
            }
            let piece = FormalPoly::from_terms(Some(n), [(rest, scal.clone())]);
            slots[deg] = slots[deg].add(&piece);
        }
    }
    let mut out = FormalPoly::zero();
    for (exps, slots) in groups {
        let weight = rule.weight(&exps, m)?;
        if weight.is_zero() {
            continue;
        }
        let group = RatXi::new(XiPoly::from_coeffs(slots), integrand.a, integrand.b);
        out = out.add(&group.integrate_line()?.scale(&weight));
    }
    Ok(out)
}

/// Exact sum of the four-dimensional cases together with the pairwise
/// cancellations.
pub struct BoundaryTotal {
    pub cases: Vec<CaseOutcome>,
    pub total_per_unit: FormalPoly,
    pub total_honest: FormalPoly,
}

pub fn psi_total(pipeline: &BoundaryPipeline) -> Result<BoundaryTotal, PipelineError> {
    let cases = pipeline.all_cases()?;
    let mut total_per_unit = FormalPoly::zero();
    let mut total_honest = FormalPoly::zero();
    for c in &cases {
        total_per_unit = total_per_unit.add(&c.per_unit);
        total_honest = total_honest.add(&c.honest);
    }
    Ok(BoundaryTotal { cases, total_per_unit, total_honest })
}

/// The single derivative structure surviving in the four-dimensional
/// boundary term: `Σ_{β≤n, i<n} a_β^i ∂_{x_i}(a_β^n)`.
pub fn surviving_structure(n: u8) -> FormalPoly {
    let mut s = FormalPoly::zero();
    for b in 1..=n {
        for i in 1..n {
            s = s.add(
                &FormalPoly::gen(n, Gen::A(b, i)).mul(&FormalPoly::gen(n, Gen::DA(i, b, n))),
            );
        }
    }
    s
}

/// Companion structure with the derivative on the other factor:
/// `Σ_{β≤n, i<n} a_β^n ∂_{x_i}(a_β^i)`.
pub fn companion_structure(n: u8) -> FormalPoly {
    let mut s = FormalPoly::zero();
    for b in 1..=n {
        for i in 1..n {
            s = s.add(
                &FormalPoly::gen(n, Gen::A(b, n)).mul(&FormalPoly::gen(n, Gen::DA(i, b, i))),
            );
        }
    }
    s
}

/// Final four-dimensional assembly: the derivative relation collapses the
/// boundary total onto a single structure with one exact coefficient.
pub struct Assembly4d {
    pub total: BoundaryTotal,
    pub reduced: FormalPoly,
    pub structure: FormalPoly,
    /// Coefficient on the structure per `tr[id]·Ω₃`.
    pub coefficient_per_unit: Scalar,
    /// Assembled boundary coefficient including `tr[id]` and the symbolic
    /// sphere factor.
    pub assembled: Scalar,
}

pub fn assemble_4d(pipeline: &BoundaryPipeline) -> Result<Assembly4d, PipelineError> {
    let n = 4;
    let total = psi_total(pipeline)?;
    let reduced = total.total_per_unit.substitute_j_relations();
    let structure = surviving_structure(n).symmetrize_entries();
    let first = structure
        .terms()
        .next()
        .map(|(m, _)| m.clone())
        .unwrap_or_else(Monomial::one);
    let coefficient_per_unit = reduced.coeff(&first);
    if reduced != structure.scale(&coefficient_per_unit) {
        return Err(PipelineError::NotProportional);
    }
    let assembled = coefficient_per_unit
        .mul(&Scalar::from_i64(tr_id(n) as i64))
        .mul(&omega(3)?);
    Ok(Assembly4d { total, reduced, structure, coefficient_per_unit, assembled })
}

/// Term classes of the three-dimensional boundary term.
pub struct Assembly3d {
    pub case: CaseOutcome,
    pub tangential_class: FormalPoly,
    pub normal_class: FormalPoly,
    /// Coefficients per `tr[id]·Ω₂`.
    pub tangential_per_unit: Scalar,
    pub normal_per_unit: Scalar,
    /// Assembled with `tr[id] = 2` and `Ω₂ = 2π`.
    pub tangential_assembled: Scalar,
    pub normal_assembled: Scalar,
}

/// `Σ_{β≤3, i<3} (a_β^i)²` and `Σ_{β≤3} (a_β^3)²`.
pub fn classes_3d() -> (FormalPoly, FormalPoly) {
    let n = 3;
    let mut tang = FormalPoly::zero();
    for b in 1..=n {
        for i in 1..n {
            let a = FormalPoly::gen(n, Gen::A(b, i));
            tang = tang.add(&a.mul(&a));
        }
    }
    let mut norm = FormalPoly::zero();
    for b in 1..=n {
        let a = FormalPoly::gen(n, Gen::A(b, n));
        norm = norm.add(&a.mul(&a));
    }
    (tang, norm)
}

pub fn assemble_3d(pipeline: &BoundaryPipeline) -> Result<Assembly3d, PipelineError> {
    let spec = boundary_cases(3)?.remove(0);
    let case = pipeline.case_term(&spec)?;
    let (tangential_class, normal_class) = classes_3d();
    let t_mono = tangential_class.terms().next().unwrap().0.clone();
    let n_mono = normal_class.terms().next().unwrap().0.clone();
    let tangential_per_unit = case.per_unit.coeff(&t_mono);
    let normal_per_unit = case.per_unit.coeff(&n_mono);
    let recomposed = tangential_class
        .scale(&tangential_per_unit)
        .add(&normal_class.scale(&normal_per_unit));
    if recomposed != case.per_unit {
        return Err(PipelineError::NotProportional);
    }
    let factor = Scalar::from_i64(tr_id(3) as i64).mul(&omega(2)?);
    Ok(Assembly3d {
        case,
        tangential_class,
        normal_class,
        tangential_assembled: tangential_per_unit.mul(&factor),
        normal_assembled: normal_per_unit.mul(&factor),
        tangential_per_unit,
        normal_per_unit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case_enumeration() {
        let four = boundary_cases(4).unwrap();
        assert_eq!(four.len(), 5);
        let tuples: Vec<(i32, i32, u32, u32, u32)> =
            four.iter().map(|c| (c.r, c.l, c.k, c.j, c.alpha)).collect();
        assert_eq!(
            tuples,
            vec![
                (-1, -1, 0, 0, 1),
                (-1, -1, 0, 1, 0),
                (-1, -1, 1, 0, 0),
                (-2, -1, 0, 0, 0),
                (-1, -2, 0, 0, 0),
            ]
        );
        for c in &four {
            assert!(c.homogeneity_holds(4), "{}", c.id);
        }
        let three = boundary_cases(3).unwrap();
        assert_eq!(three.len(), 1);
        assert!(three[0].homogeneity_holds(3));
        assert!(boundary_cases(5).is_err());
    }

    #[test]
    fn first_case_reproduces_reference_coefficients() {
        let pipeline = BoundaryPipeline::new(4).unwrap();
        let spec = &boundary_cases(4).unwrap()[0];
        let got = pipeline.case_term(spec).unwrap();
        // Ω₃(−π/8 + π²/3) on Σ a_β^i ∂_i(a_β^n), Ω₃(−π²/6) on the companion.
        let c1 = Scalar::pi()
            .mul(&Scalar::ratio(-1, 8))
            .add(&Scalar::pi_pow(2).mul(&Scalar::ratio(1, 3)));
        let c2 = Scalar::pi_pow(2).mul(&Scalar::ratio(-1, 6));
        let expect = surviving_structure(4)
            .scale(&c1)
            .add(&companion_structure(4).scale(&c2));
        assert_eq!(got.per_unit, expect);
    }

    #[test]
    fn three_dim_case_reproduces_reference_coefficients() {
        let pipeline = BoundaryPipeline::new(3).unwrap();
        let a = assemble_3d(&pipeline).unwrap();
        assert_eq!(
            a.tangential_per_unit,
            Scalar::i().mul(&Scalar::pi_pow(2)).mul(&Scalar::ratio(1, 6))
        );
        assert_eq!(a.normal_per_unit, Scalar::i().mul(&Scalar::pi()).mul(&Scalar::ratio(1, 8)));
        assert_eq!(
            a.tangential_assembled,
            Scalar::i().mul(&Scalar::pi_pow(3)).mul(&Scalar::ratio(2, 3))
        );
        assert_eq!(
            a.normal_assembled,
            Scalar::i().mul(&Scalar::pi_pow(2)).mul(&Scalar::ratio(1, 2))
        );
    }
}
