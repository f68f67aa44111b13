//! Quadrature: adaptive Simpson on the compactified real line, product rules
//! on the unit circle and two-sphere, and the contour realization of the
//! upper-half-plane projection.

use num_complex::Complex64;

use crate::error::OracleError;

/// Result of a quadrature with its error estimate.
#[derive(Clone, Copy, Debug)]
pub struct QuadratureResult {
    pub value: Complex64,
    pub error_estimate: f64,
}

fn simpson(f: &mut dyn FnMut(f64) -> Complex64, a: f64, b: f64) -> (Complex64, Complex64) {
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let whole = (fa + fm * 4.0 + fb) * ((b - a) / 6.0);
    (whole, fm)
}

fn adaptive(
    f: &mut dyn FnMut(f64) -> Complex64,
    a: f64,
    b: f64,
    fa: Complex64,
    fm: Complex64,
    fb: Complex64,
    whole: Complex64,
    tol: f64,
    depth: u32,
) -> (Complex64, f64) {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (fa + flm * 4.0 + fm) * ((m - a) / 6.0);
    let right = (fm + frm * 4.0 + fb) * ((b - m) / 6.0);
    let delta = (left + right - whole).norm();
    if depth == 0 || delta < 15.0 * tol {
        (left + right + (left + right - whole) / 15.0, delta / 15.0)
    } else {
        let (lv, le) = adaptive(f, a, m, fa, flm, fm, left, tol * 0.5, depth - 1);
        let (rv, re) = adaptive(f, m, b, fm, frm, fb, right, tol * 0.5, depth - 1);
        (lv + rv, le + re)
    }
}

/// Adaptive integral over a finite interval.
pub fn quad_interval(
    f: &mut dyn FnMut(f64) -> Complex64,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<QuadratureResult, OracleError> {
    // Seed the adaptive pass on a few panels so narrow features are not
    // missed by the first Simpson estimate.
    let panels = 8;
    let mut value = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    for k in 0..panels {
        let x0 = a + (b - a) * k as f64 / panels as f64;
        let x1 = a + (b - a) * (k + 1) as f64 / panels as f64;
        let fa = f(x0);
        let fb = f(x1);
        let (whole, fm) = simpson(f, x0, x1);
        let (v, e) = adaptive(f, x0, x1, fa, fm, fb, whole, tol / panels as f64, 28);
        value += v;
        err += e;
    }
    if err > tol.max(1e-14) * 40.0 {
        return Err(OracleError::QuadNoConverge { est: err, tol });
    }
    Ok(QuadratureResult { value, error_estimate: err })
}

/// `∫_{−∞}^{∞} f(t) dt` for integrands decaying at least quadratically,
/// via the tangent compactification `t = tan θ` (no tail truncation).
pub fn quad_line(
    f: &mut dyn FnMut(f64) -> Complex64,
    tol: f64,
) -> Result<QuadratureResult, OracleError> {
    let mut g = |theta: f64| {
        // Clamp the endpoint evaluations slightly inside; the transformed
        // integrand is continuous up to the boundary for quadratic decay.
        let lim = std::f64::consts::FRAC_PI_2 - 1e-9;
        let th = theta.clamp(-lim, lim);
        let c = th.cos();
        let t = th.tan();
        f(t) / (c * c)
    };
    quad_interval(&mut g, -std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2, tol)
}

/// Integral of `g(ξ')` over the unit sphere in ℝ^m (m = 2 or 3) by product
/// quadrature: trapezoid in the angle(s) and Gauss–Legendre in the polar
/// cosine; exact for the low-degree polynomial integrands that occur here.
pub fn quad_sphere(
    g: &mut dyn FnMut(&[f64]) -> Complex64,
    m: u8,
) -> Result<QuadratureResult, OracleError> {
    match m {
        2 => {
            let nn = 16;
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..nn {
                let th = 2.0 * std::f64::consts::PI * k as f64 / nn as f64;
                acc += g(&[th.cos(), th.sin()]);
            }
            Ok(QuadratureResult {
                value: acc * (2.0 * std::f64::consts::PI / nn as f64),
                error_estimate: 1e-13,
            })
        }
        3 => {
            // 6-point Gauss–Legendre in cos φ, 12-point trapezoid in θ:
            // exact for the polynomial integrands of degree ≤ 11 that occur.
            let (nodes, weights) = gauss_legendre_6();
            let nth = 12;
            let mut acc = Complex64::new(0.0, 0.0);
            for (c, w) in nodes.iter().zip(weights.iter()) {
                let sphi = (1.0 - c * c).sqrt();
                for k in 0..nth {
                    let th = 2.0 * std::f64::consts::PI * k as f64 / nth as f64;
                    acc += g(&[sphi * th.cos(), sphi * th.sin(), *c])
                        * (*w * 2.0 * std::f64::consts::PI / nth as f64);
                }
            }
            Ok(QuadratureResult { value: acc, error_estimate: 1e-12 })
        }
        other => Err(OracleError::GammaDim(other)),
    }
}

fn gauss_legendre_6() -> ([f64; 6], [f64; 6]) {
    // Nodes/weights on [−1, 1].
    let n = [
        -0.9324695142031521,
        -0.6612093864662645,
        -0.2386191860831969,
        0.2386191860831969,
        0.6612093864662645,
        0.9324695142031521,
    ];
    let w = [
        0.1713244923791704,
        0.3607615730481386,
        0.4679139345726910,
        0.4679139345726910,
        0.3607615730481386,
        0.1713244923791704,
    ];
    (n, w)
}

/// Contour nodes and weights realizing the upper-half-plane projection:
/// `π⁺f(ξ₀) = (1/2πi) ∮ f(η)/(ξ₀ − η) dη` over a circle around `+i`.
pub struct PiPlusContour {
    pub nodes: Vec<Complex64>,
    factors: Vec<Complex64>,
}

impl PiPlusContour {
    pub fn new(points: usize) -> Self {
        let rho = 0.5;
        let center = Complex64::new(0.0, 1.0);
        let mut nodes = Vec::with_capacity(points);
        let mut factors = Vec::with_capacity(points);
        for m in 0..points {
            let th = 2.0 * std::f64::consts::PI * m as f64 / points as f64;
            let e = Complex64::from_polar(1.0, th);
            nodes.push(center + e * rho);
            factors.push(e * (rho / points as f64));
        }
        PiPlusContour { nodes, factors }
    }

    /// Weight of node `idx` in the projection evaluated at `xi0`.
    pub fn weight(&self, idx: usize, xi0: Complex64) -> Complex64 {
        self.factors[idx] / (xi0 - self.nodes[idx])
    }

    /// Applies the projection given the integrand values at the contour
    /// nodes: `π⁺f(ξ₀) = Σ_m factors_m · f(η_m)/(ξ₀ − η_m)`.
    pub fn project(&self, values: &[Complex64], xi0: Complex64) -> Complex64 {
        values
            .iter()
            .enumerate()
            .map(|(idx, v)| v * self.weight(idx, xi0))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arctangent_line_integral() {
        let mut f = |t: f64| Complex64::new(1.0 / (1.0 + t * t), 0.0);
        let r = quad_line(&mut f, 1e-12).unwrap();
        assert!((r.value.re - std::f64::consts::PI).abs() < 1e-10, "{}", r.value);
    }

    #[test]
    fn decaying_rational_with_phase() {
        // ∫ 1/(1+ξ²)² = π/2.
        let mut f = |t: f64| {
            let d = 1.0 + t * t;
            Complex64::new(1.0 / (d * d), 0.0)
        };
        let r = quad_line(&mut f, 1e-12).unwrap();
        assert!((r.value.re - std::f64::consts::PI / 2.0).abs() < 1e-10);
    }

    #[test]
    fn sphere_moments_match() {
        let mut one = |_: &[f64]| Complex64::new(1.0, 0.0);
        let r = quad_sphere(&mut one, 3).unwrap();
        assert!((r.value.re - 4.0 * std::f64::consts::PI).abs() < 1e-10);
        let mut xi1sq = |x: &[f64]| Complex64::new(x[0] * x[0], 0.0);
        let r = quad_sphere(&mut xi1sq, 3).unwrap();
        assert!((r.value.re - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-10);
        let mut odd = |x: &[f64]| Complex64::new(x[0] * x[1] * x[2], 0.0);
        let r = quad_sphere(&mut odd, 3).unwrap();
        assert!(r.value.norm() < 1e-12);
        let mut circle = |_: &[f64]| Complex64::new(1.0, 0.0);
        let r = quad_sphere(&mut circle, 2).unwrap();
        assert!((r.value.re - 2.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn contour_projection_matches_known_values() {
        let contour = PiPlusContour::new(48);
        // f = 1/(1+η²): π⁺f(ξ) = 1/(2i(ξ−i)).
        let values: Vec<Complex64> = contour
            .nodes
            .iter()
            .map(|&e| Complex64::new(1.0, 0.0) / (Complex64::new(1.0, 0.0) + e * e))
            .collect();
        for xi0 in [-1.7, -0.3, 0.0, 0.4, 2.2] {
            let xi = Complex64::new(xi0, 0.0);
            let got = contour.project(&values, xi);
            let expect = Complex64::new(1.0, 0.0)
                / (Complex64::new(0.0, 2.0) * (xi - Complex64::new(0.0, 1.0)));
            assert!((got - expect).norm() < 1e-12, "xi0={xi0}: {got} vs {expect}");
        }
    }
}
