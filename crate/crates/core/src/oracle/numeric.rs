//! Fully numeric recomputation of the boundary cases: matrix-valued symbols,
//! finite-difference derivatives, contour projection and quadrature.  No
//! exact-engine code is reused beyond the case bookkeeping itself.

use num_complex::Complex64;

use crate::boundary::CaseSpec;
use crate::error::OracleError;
use crate::oracle::gamma::{CMat, GammaRep};
use crate::oracle::jfield::JInstance;
use crate::oracle::quad::{quad_line, quad_sphere, PiPlusContour};

fn cx(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Numeric symbol data for one instance.
pub struct NumericSymbols<'a> {
    pub rep: &'a GammaRep,
    pub inst: &'a JInstance,
}

impl<'a> NumericSymbols<'a> {
    pub fn new(rep: &'a GammaRep, inst: &'a JInstance) -> Self {
        assert_eq!(rep.n, inst.n);
        NumericSymbols { rep, inst }
    }

    fn n(&self) -> usize {
        self.rep.n as usize
    }

    fn h(&self, xn: f64) -> f64 {
        1.0 + self.inst.hp * xn
    }

    /// `c(dx_h)(x)`: tangential generators pick up the collar factor
    /// `√h(x_n)`, the normal one is constant.
    fn c_dx(&self, h: usize, x: &[f64]) -> CMat {
        let n = self.n();
        if h < n {
            &self.rep.mats[h - 1] * cx(self.h(x[n - 1]).sqrt())
        } else {
            self.rep.mats[n - 1].clone()
        }
    }

    /// `c[J(ξ)](x)` with a possibly complex normal covariable.
    fn cj_xi(&self, x: &[f64], xip: &[f64], xin: Complex64) -> CMat {
        let n = self.n();
        let a = self.inst.a_at(x);
        let mut acc = CMat::zeros(self.rep.dim());
        for p in 1..=n {
            let xi_p = if p < n { cx(xip[p - 1]) } else { xin };
            for h in 1..=n {
                acc = &acc + &(&self.c_dx(h, x) * (xi_p * cx(a[(h - 1, p - 1)])));
            }
        }
        acc
    }

    /// Leading symbol `p₁ = i c[J(ξ)]`.
    pub fn p1(&self, x: &[f64], xip: &[f64], xin: Complex64) -> CMat {
        &self.cj_xi(x, xip, xin) * I
    }

    /// Leading parametrix component via matrix inversion.
    pub fn sigma_m1(&self, x: &[f64], xip: &[f64], xin: Complex64) -> CMat {
        self.p1(x, xip, xin).try_inverse().expect("leading symbol invertible")
    }

    /// Order-zero symbol at the base point:
    /// `−¼ h'(0) Σ_{i<n} c[J(e_i)] c(e_n) c(e_i)`.
    pub fn p0(&self) -> CMat {
        let n = self.n();
        let mut acc = CMat::zeros(self.rep.dim());
        for i in 1..n {
            let mut cj = CMat::zeros(self.rep.dim());
            for mu in 1..=n {
                cj += &self.rep.mats[mu - 1] * cx(self.inst.j0[(i - 1, mu - 1)]);
            }
            acc += cj * &self.rep.mats[n - 1] * &self.rep.mats[i - 1];
        }
        acc * cx(-0.25 * self.inst.hp)
    }

    /// Second parametrix component at the base point from the composition
    /// formula, with all derivatives taken by finite differences.
    pub fn sigma_m2(&self, xip: &[f64], xin: Complex64) -> CMat {
        let n = self.n();
        let x0 = vec![0.0; n];
        let q1 = self.sigma_m1(&x0, xip, xin);
        let mut bracket = &self.p0() * &q1;
        let h = 5e-3;
        for j in 1..=n {
            // ∂_{ξ_j} p1 by central differences.
            let dxi_p1 = if j < n {
                fd1(h, |t| {
                    let mut xs = xip.to_vec();
                    xs[j - 1] += t;
                    self.p1(&x0, &xs, xin)
                })
            } else {
                fd1(h, |t| self.p1(&x0, xip, xin + cx(t)))
            };
            // D_{x_j} q1 = −i ∂_{x_j} p1⁻¹.
            let dx_q1 = fd1(h, |t| {
                let mut xs = x0.clone();
                xs[j - 1] += t;
                self.sigma_m1(&xs, xip, xin)
            }) * (-I);
            bracket = &bracket + &(&dxi_p1 * &dx_q1);
        }
        -(&q1 * &bracket)
    }

    pub fn sigma(&self, order: i32, x: &[f64], xip: &[f64], xin: Complex64) -> CMat {
        match order {
            -1 => self.sigma_m1(x, xip, xin),
            -2 => {
                debug_assert!(x.iter().all(|&v| v == 0.0));
                self.sigma_m2(xip, xin)
            }
            _ => panic!("no numeric symbol of order {order}"),
        }
    }
}

/// Fourth-order central first derivative of a matrix-valued function.
pub fn fd1(h: f64, f: impl Fn(f64) -> CMat) -> CMat {
    let m2 = f(-2.0 * h);
    let m1 = f(-h);
    let p1 = f(h);
    let p2 = f(2.0 * h);
    (m2 - m1 * cx(8.0) + p1 * cx(8.0) - p2) / cx(12.0 * h)
}

/// Fourth-order central second derivative.
pub fn fd2(h: f64, f: impl Fn(f64) -> CMat) -> CMat {
    let m2 = f(-2.0 * h);
    let m1 = f(-h);
    let z = f(0.0);
    let p1 = f(h);
    let p2 = f(2.0 * h);
    (-m2 + m1 * cx(16.0) - z * cx(30.0) + p1 * cx(16.0) - p2) / cx(12.0 * h * h)
}

fn numeric_prefactor(n: u8, spec: &CaseSpec) -> Complex64 {
    let mut fact = 1.0;
    for k in 2..=(spec.j + spec.k + 1) {
        fact *= k as f64;
    }
    let comb = cx(1.0 / fact);
    if n == 3 {
        comb
    } else {
        let mut phase = cx(1.0);
        for _ in 0..(spec.alpha + spec.j + spec.k + 1) {
            phase *= -I;
        }
        phase * comb
    }
}

/// Numeric value of one boundary case: the double integral of the spinor
/// trace, including the case prefactor and honest sphere measure.
pub fn numeric_case(
    rep: &GammaRep,
    inst: &JInstance,
    spec: &CaseSpec,
    tol: f64,
) -> Result<Complex64, OracleError> {
    let sym = NumericSymbols::new(rep, inst);
    let n = rep.n as usize;
    let m = (rep.n - 1) as u8;
    let contour = PiPlusContour::new(48);
    let h = 5e-3;
    let x0 = vec![0.0; n];

    let directions: Vec<Option<usize>> =
        if spec.alpha == 0 { vec![None] } else { (1..n).map(Some).collect() };

    let mut total = Complex64::new(0.0, 0.0);
    for dir in &directions {
        let mut sphere_fn = |xip: &[f64]| -> Complex64 {
            // Left factor values on the contour: ∂^j_{x_n} ∂^α_{ξ'} σ_r.
            let lpre: Vec<CMat> = contour
                .nodes
                .iter()
                .map(|&eta| {
                    let base = |x: &[f64], xs: &[f64]| sym.sigma(spec.r, x, xs, eta);
                    match (spec.j, dir) {
                        (0, None) => base(&x0, xip),
                        (0, Some(i)) => fd1(h, |t| {
                            let mut xs = xip.to_vec();
                            xs[i - 1] += t;
                            base(&x0, &xs)
                        }),
                        (1, None) => fd1(h, |t| {
                            let mut xs = x0.clone();
                            xs[n - 1] = t;
                            base(&xs, xip)
                        }),
                        _ => unreachable!("configured cases have j ≤ 1, |α| ≤ 1"),
                    }
                })
                .collect();
            let dim = rep.dim();
            let project = |xin: Complex64| -> CMat {
                let mut acc = CMat::zeros(dim);
                for (idx, lv) in lpre.iter().enumerate() {
                    acc = &acc + &(lv * contour.weight(idx, xin));
                }
                acc
            };
            let left_at = |xin: f64| -> CMat {
                let xin_c = cx(xin);
                if spec.k == 0 {
                    project(xin_c)
                } else {
                    fd1(h, |t| project(xin_c + cx(t)))
                }
            };
            let right_at = |xin: f64| -> CMat {
                let xin_c = cx(xin);
                let sig = |x: &[f64], xin: Complex64| sym.sigma(spec.l, x, xip, xin);
                match (dir, spec.j, spec.k) {
                    // ∂^α_{x'} ∂_{ξ_n} σ_l
                    (Some(i), 0, 0) => fd1(h, |s| {
                        let mut xs = x0.clone();
                        xs[i - 1] = s;
                        fd1(h, |t| sig(&xs, xin_c + cx(t)))
                    }),
                    // ∂²_{ξ_n} σ_l
                    (None, 1, 0) => fd2(h, |t| sig(&x0, xin_c + cx(t))),
                    // ∂_{ξ_n} ∂_{x_n} σ_l
                    (None, 0, 1) => fd1(h, |t| {
                        fd1(h, |s| {
                            let mut xs = x0.clone();
                            xs[n - 1] = s;
                            sig(&xs, xin_c + cx(t))
                        })
                    }),
                    // ∂_{ξ_n} σ_l
                    (None, 0, 0) => fd1(h, |t| sig(&x0, xin_c + cx(t))),
                    _ => unreachable!(),
                }
            };
            let mut line_fn =
                |xin: f64| -> Complex64 { (&left_at(xin) * &right_at(xin)).trace() };
            match quad_line(&mut line_fn, tol) {
                Ok(r) => r.value,
                Err(_) => Complex64::new(f64::NAN, f64::NAN),
            }
        };
        let r = quad_sphere(&mut sphere_fn, m)?;
        if !r.value.re.is_finite() || !r.value.im.is_finite() {
            return Err(OracleError::QuadNoConverge { est: f64::NAN, tol });
        }
        total += r.value;
    }
    Ok(numeric_prefactor(rep.n, spec) * total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::gamma::make_gamma;
    use crate::oracle::jfield::sample_j;

    #[test]
    fn numeric_leading_symbol_squares_to_norm() {
        let rep = make_gamma(4).unwrap();
        let inst = sample_j(3, 4);
        let sym = NumericSymbols::new(&rep, &inst);
        let x0 = vec![0.0; 4];
        let xip = [0.3, -0.5, 0.81];
        let xin = Complex64::new(0.7, 0.0);
        let p1 = sym.p1(&x0, &xip, xin);
        let sq = &p1 * &p1;
        let norm: f64 = xip.iter().map(|v| v * v).sum::<f64>() + 0.49;
        let expect = &rep.identity() * cx(norm);
        let err = (&sq - &expect).max_abs();
        assert!(err < 1e-12, "p1^2 = |xi|^2 failed: {err}");
    }

    #[test]
    fn numeric_parametrix_inverts() {
        let rep = make_gamma(4).unwrap();
        let inst = sample_j(5, 4);
        let sym = NumericSymbols::new(&rep, &inst);
        let x = vec![0.01, -0.02, 0.005, 0.015];
        let xip = [0.2, 0.4, -0.3];
        let xin = Complex64::new(-1.3, 0.2);
        let prod = &sym.p1(&x, &xip, xin) * &sym.sigma_m1(&x, &xip, xin);
        let err = (&prod - &rep.identity()).max_abs();
        assert!(err < 1e-12);
    }
}
