//! Explicit gamma-matrix representations of the Clifford relation
//! `γ_i γ_j + γ_j γ_i = −2δ_ij`.

use num_complex::Complex64;

use crate::clifford::{CliffordElem, CoeffRing};
use crate::error::OracleError;
use crate::oracle::smallmat::SmallMat;

pub type CMat = SmallMat;

/// Gamma matrices in dimension `n` acting on a spinor space of dimension
/// `2^{⌊n/2⌋}`.
pub struct GammaRep {
    pub n: u8,
    pub mats: Vec<CMat>,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn pauli() -> [CMat; 3] {
    [
        CMat::from_rows(2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]),
        CMat::from_rows(2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]),
        CMat::from_rows(2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]),
    ]
}

/// Builds the representation: `γ_j = i σ_j` in dimension three, the tensor
/// construction `γ_k = i σ_1 ⊗ σ_k`, `γ_4 = i σ_3 ⊗ 1` in dimension four.
pub fn make_gamma(n: u8) -> Result<GammaRep, OracleError> {
    let [s1, s2, s3] = pauli();
    let i = c(0., 1.);
    let mats = match n {
        3 => vec![&s1 * i, &s2 * i, &s3 * i],
        4 => {
            let id2 = CMat::identity(2);
            vec![
                &s1.kron(&s1) * i,
                &s1.kron(&s2) * i,
                &s1.kron(&s3) * i,
                &s3.kron(&id2) * i,
            ]
        }
        other => return Err(OracleError::GammaDim(other)),
    };
    Ok(GammaRep { n, mats })
}

impl GammaRep {
    pub fn dim(&self) -> usize {
        self.mats[0].dim
    }

    pub fn identity(&self) -> CMat {
        CMat::identity(self.dim())
    }

    /// Worst anticommutator residual `max |γ_iγ_j + γ_jγ_i + 2δ_ij|`.
    pub fn anticommutator_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, gi) in self.mats.iter().enumerate() {
            for (j, gj) in self.mats.iter().enumerate() {
                let mut anti = &(gi * gj) + &(gj * gi);
                if i == j {
                    anti = &anti + &(&self.identity() * c(2.0, 0.0));
                }
                worst = worst.max(anti.max_abs());
            }
        }
        worst
    }

    /// Matrix of the basis blade with the given index mask.
    pub fn blade(&self, mask: u8) -> CMat {
        let mut acc = self.identity();
        for i in 0..self.n {
            if mask & (1 << i) != 0 {
                acc = &acc * &self.mats[i as usize];
            }
        }
        acc
    }

    /// Matrix realization of a Clifford element whose coefficients are
    /// already numeric.
    pub fn realize<R: CoeffRing, F: Fn(&R) -> Complex64>(
        &self,
        elem: &CliffordElem<R>,
        eval: F,
    ) -> CMat {
        let mut acc = CMat::zeros(self.dim());
        for (mask, coeff) in elem.terms() {
            acc = &acc + &(&self.blade(*mask) * eval(coeff));
        }
        acc
    }

    /// Clifford action of a numeric vector, `c(v) = Σ v_i γ_i`.
    pub fn vector(&self, v: &[f64]) -> CMat {
        let mut acc = CMat::zeros(self.dim());
        for (i, &x) in v.iter().enumerate() {
            acc = &acc + &(&self.mats[i] * c(x, 0.));
        }
        acc
    }
}

/// Normalized trace used to compare with the symbolic trace functional.
///
/// In even dimensions the irreducible representation already kills every
/// non-scalar blade.  In odd dimensions the top blade has a nonzero matrix
/// trace in a single irreducible, so the graded trace is realized as the
/// average over the pair of inequivalent representations `γ` and `−γ`.
pub fn graded_trace(rep: &GammaRep, realize: impl Fn(&[CMat]) -> CMat) -> Complex64 {
    let plus = realize(&rep.mats).trace();
    if rep.n % 2 == 0 {
        plus
    } else {
        let neg: Vec<CMat> = rep.mats.iter().map(|m| -m).collect();
        let minus = realize(&neg).trace();
        (plus + minus) / c(2.0, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn representations_satisfy_relation() {
        for n in [3u8, 4] {
            let rep = make_gamma(n).unwrap();
            assert!(rep.anticommutator_residual() < 1e-12, "n = {n}");
            let expected_tr = if n == 4 { 4.0 } else { 2.0 };
            assert!((rep.identity().trace().re - expected_tr).abs() < 1e-14);
        }
        assert!(make_gamma(5).is_err());
    }

    #[test]
    fn graded_trace_kills_odd_top_blade() {
        let rep = make_gamma(3).unwrap();
        let top = graded_trace(&rep, |g| &(&g[0] * &g[1]) * &g[2]);
        assert!(top.norm() < 1e-14, "graded trace of the top blade must vanish");
        // The single-representation trace does not.
        let single = (&(&rep.mats[0] * &rep.mats[1]) * &rep.mats[2]).trace();
        assert!(single.norm() > 1.0);
    }
}
