//! The oracle check battery: every exact-engine identity that has a numeric
//! counterpart is recomputed here in floating point and compared at the
//! tolerance matching its dominant error source.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::boundary::CaseOutcome;
use crate::clifford::{abstract_trace, CliffordElem};
use crate::error::OracleError;
use crate::formal::{FormalPoly, Gen, VecLabel};
use crate::oracle::gamma::{graded_trace, make_gamma, CMat, GammaRep};
use crate::oracle::jfield::{sample_j, JInstance};
use crate::oracle::numeric::{numeric_case, NumericSymbols};
use crate::oracle::quad::{quad_line, quad_sphere, PiPlusContour};
use crate::oracle::{TOL_FD, TOL_LINALG, TOL_QUAD};
use crate::scalar::Scalar;
use crate::symbol::{parametrix, GeneralSymbol};
use crate::xi::{sphere_moment, RatXi, XiPoly};

const PI: f64 = std::f64::consts::PI;

/// One numeric verification with its tolerance and observed worst error.
#[derive(Clone, Debug)]
pub struct OracleCheck {
    pub id: String,
    pub tolerance: f64,
    pub max_error: f64,
    pub pass: bool,
}

impl OracleCheck {
    fn new(id: impl Into<String>, tolerance: f64, max_error: f64) -> Self {
        let id = id.into();
        OracleCheck { id, tolerance, max_error, pass: max_error <= tolerance }
    }
}

/// Configuration of an oracle run.
#[derive(Clone, Copy, Debug)]
pub struct OracleConfig {
    pub dim: u8,
    pub seed: u64,
    pub samples: u32,
}

fn max_mat(m: &CMat) -> f64 {
    m.max_abs()
}

fn valuation<'a>(
    inst: &'a JInstance,
    xip: &'a [f64],
    xin: f64,
) -> impl Fn(&Gen) -> Option<Complex64> + 'a {
    let prime_sq: f64 = xip.iter().map(|v| v * v).sum();
    move |g: &Gen| -> Option<Complex64> {
        let re = |v: f64| Some(Complex64::new(v, 0.0));
        match g {
            Gen::A(b, p) => re(inst.j0[((*b - 1) as usize, (*p - 1) as usize)]),
            Gen::DA(i, b, p) => {
                re(inst.dj[(*i - 1) as usize][((*b - 1) as usize, (*p - 1) as usize)])
            }
            Gen::HP => re(inst.hp),
            Gen::S => re(inst.s),
            Gen::XiT(k) => xip.get((*k - 1) as usize).copied().and_then(re),
            Gen::XiN => re(xin),
            Gen::XiPrimeSq => re(prime_sq),
            Gen::GPair(..) | Gen::RCurv(..) => None,
        }
    }
}

/// Matrix realization of a general-track symbol at a numeric point.
fn realize_symbol(
    sym: &GeneralSymbol,
    rep: &GammaRep,
    inst: &JInstance,
    xip: &[f64],
    xin: f64,
) -> Result<CMat, OracleError> {
    let prime_sq: f64 = xip.iter().map(|v| v * v).sum();
    let norm = prime_sq + xin * xin;
    let val = valuation(inst, xip, xin);
    let mut acc = CMat::zeros(rep.dim());
    for (mask, c) in sym.terms() {
        let num = c.num.eval_complex(PI, &val)?;
        acc = &acc + &(&rep.blade(*mask) * (num / Complex64::new(norm.powi(c.pow as i32), 0.0)));
    }
    Ok(acc)
}

fn random_scalar(rng: &mut ChaCha8Rng) -> Scalar {
    let re = Scalar::ratio(rng.gen_range(-6i64..=6), rng.gen_range(1i64..=4));
    let im = Scalar::ratio(rng.gen_range(-6i64..=6), rng.gen_range(1i64..=4));
    re.add(&im.mul(&Scalar::i()))
}

fn random_clifford(rng: &mut ChaCha8Rng, n: u8) -> CliffordElem<Scalar> {
    let mut e = CliffordElem::zero(n);
    for _ in 0..4 {
        let mask = rng.gen_range(0u8..(1 << n));
        e.insert(mask, random_scalar(rng));
    }
    e
}

fn check_clifford_vs_matrices(
    rep: &GammaRep,
    seed: u64,
    samples: u32,
) -> Result<OracleCheck, OracleError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc11f);
    let mut worst: f64 = 0.0;
    for _ in 0..samples.max(8) {
        let a = random_clifford(&mut rng, rep.n);
        let b = random_clifford(&mut rng, rep.n);
        let prod = a.mul(&b);
        let eval = |s: &Scalar| s.eval(PI).expect("plain scalars");
        let ma = rep.realize(&a, eval);
        let mb = rep.realize(&b, eval);
        let mprod = rep.realize(&prod, eval);
        worst = worst.max(max_mat(&(&(&ma * &mb) - &mprod)));
        // Graded trace against the symbolic trace functional.
        let sym_tr = prod.trace().eval(PI)?;
        let mat_tr = graded_trace(rep, |mats| {
            let stand_in = GammaRep { n: rep.n, mats: mats.to_vec() };
            stand_in.realize(&prod, eval)
        });
        worst = worst.max((sym_tr - mat_tr).norm());
        // Cyclicity on the matrix side mirrors the symbolic property.
        let ab = a.mul(&b).trace().eval(PI)?;
        let ba = b.mul(&a).trace().eval(PI)?;
        worst = worst.max((ab - ba).norm());
    }
    Ok(OracleCheck::new(format!("clifford-matrix-trace-n{}", rep.n), TOL_LINALG, worst))
}

fn check_pairing_traces(rep: &GammaRep, seed: u64, samples: u32) -> OracleCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
    let n = rep.n as usize;
    let mut worst: f64 = 0.0;
    let dot = |x: &[f64], y: &[f64]| -> f64 { x.iter().zip(y).map(|(a, b)| a * b).sum() };
    for _ in 0..samples.max(10) {
        let vecs: Vec<Vec<f64>> =
            (0..4).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let trid = rep.dim() as f64;
        // Two factors.
        let two = graded_trace(rep, |mats| {
            let r = GammaRep { n: rep.n, mats: mats.to_vec() };
            &r.vector(&vecs[0]) * &r.vector(&vecs[1])
        });
        let expect2 = Complex64::new(-dot(&vecs[0], &vecs[1]) * trid, 0.0);
        worst = worst.max((two - expect2).norm());
        // Four factors.
        let four = graded_trace(rep, |mats| {
            let r = GammaRep { n: rep.n, mats: mats.to_vec() };
            &(&(&r.vector(&vecs[0]) * &r.vector(&vecs[1])) * &r.vector(&vecs[2]))
                * &r.vector(&vecs[3])
        });
        let g = |i: usize, j: usize| dot(&vecs[i], &vecs[j]);
        let expect4 = Complex64::new(
            (g(0, 3) * g(1, 2) - g(0, 2) * g(1, 3) + g(0, 1) * g(2, 3)) * trid,
            0.0,
        );
        worst = worst.max((four - expect4).norm());
    }
    OracleCheck::new(format!("pairing-trace-n{}", rep.n), TOL_LINALG, worst)
}

fn check_abstract_trace_instantiated(rep: &GammaRep, seed: u64) -> OracleCheck {
    // The perfect-matching expansion instantiated with frame vectors must
    // reproduce matrix traces of degree-six products as well.
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6ac3);
    let n = rep.n;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let idx: Vec<u8> = (0..6).map(|_| rng.gen_range(1..=n)).collect();
        let labels: Vec<VecLabel> = idx.iter().map(|&i| VecLabel::E(i)).collect();
        let sym = abstract_trace(n, &labels);
        let sym_val = sym
            .eval_complex(PI, &|_g| None)
            .unwrap_or_else(|_| Complex64::new(f64::NAN, 0.0));
        let mat = graded_trace(rep, |mats| {
            let mut acc = CMat::identity(rep.dim());
            for &i in &idx {
                acc = &acc * &mats[(i - 1) as usize];
            }
            acc
        });
        worst = worst.max((sym_val - mat).norm());
    }
    OracleCheck::new(format!("abstract-trace-six-n{}", rep.n), TOL_LINALG, worst)
}

fn check_j_instances(n: u8, seed: u64, samples: u32) -> (OracleCheck, OracleCheck, OracleCheck) {
    let mut exact: f64 = 0.0;
    let mut fd: f64 = 0.0;
    let mut rel: f64 = 0.0;
    for s in 0..samples as u64 {
        let inst = sample_j(seed.wrapping_add(s), n);
        exact = exact
            .max(inst.involution_residual())
            .max(inst.symmetry_residual())
            .max(inst.tangency_residual());
        fd = fd.max(inst.path_derivative_residual(1e-4));
        // Contracted derivative relations along tangential directions:
        // Σ_β ∂_i(a_β^p) a_β^q + a_β^p ∂_i(a_β^q) = 0 for i < n.  (Along the
        // collar direction the contraction identity is metric-dependent and
        // its derivative does not vanish.)
        let nn = n as usize;
        for i in 0..nn - 1 {
            for p in 0..nn {
                for q in 0..nn {
                    let mut acc = 0.0;
                    for b in 0..nn {
                        acc += inst.dj[i][(b, p)] * inst.j0[(b, q)]
                            + inst.j0[(b, p)] * inst.dj[i][(b, q)];
                    }
                    rel = rel.max(acc.abs());
                }
            }
        }
    }
    (
        OracleCheck::new(format!("structure-constraints-n{n}"), TOL_LINALG, exact),
        OracleCheck::new(format!("structure-path-fd-n{n}"), TOL_FD, fd),
        OracleCheck::new(format!("derivative-relations-n{n}"), TOL_LINALG, rel),
    )
}

fn check_rewrite_soundness(n: u8, seed: u64, samples: u32) -> Result<OracleCheck, OracleError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5e1f);
    let mut worst: f64 = 0.0;
    for s in 0..samples.max(6) as u64 {
        let inst = sample_j(seed.wrapping_add(1000 + s), n);
        // Random polynomial plus a planted contraction pattern so the
        // rewriter genuinely fires.
        let mut p = FormalPoly::zero();
        for _ in 0..5 {
            let b = rng.gen_range(1..=n);
            let q = rng.gen_range(1..=n);
            let i = rng.gen_range(1..=n);
            let term = FormalPoly::gen(n, Gen::A(b, q))
                .mul(&FormalPoly::gen(n, Gen::DA(i, q, b)))
                .scale(&random_scalar(&mut rng));
            p = p.add(&term);
        }
        let pq = (rng.gen_range(1..=n), rng.gen_range(1..=n));
        let mut contraction = FormalPoly::zero();
        for h in 1..=n {
            contraction = contraction.add(
                &FormalPoly::gen(n, Gen::A(h, pq.0)).mul(&FormalPoly::gen(n, Gen::A(h, pq.1))),
            );
        }
        p = p.add(&contraction.scale(&random_scalar(&mut rng)).mul_gen(Gen::HP));
        for i in 1..n {
            let half = crate::boundary::surviving_structure(n)
                .add(&crate::boundary::companion_structure(n));
            let _ = i;
            p = p.add(&half.scale(&random_scalar(&mut rng)));
            break;
        }
        let rewritten = p.substitute_j_relations();
        let val = valuation(&inst, &[0.0; 3][..(n - 1) as usize], 0.0);
        let before = p.eval_complex(PI, &val)?;
        let after = rewritten.eval_complex(PI, &val)?;
        worst = worst.max((before - after).norm() / before.norm().max(1.0));
    }
    Ok(OracleCheck::new(format!("rewrite-soundness-n{n}"), TOL_LINALG, worst))
}

fn eval_ratxi_f64(r: &RatXi, t: Complex64) -> Complex64 {
    let mut num = Complex64::new(0.0, 0.0);
    let mut pw = Complex64::new(1.0, 0.0);
    for c in r.num.coeffs() {
        let v = c.eval_complex(PI, &|_| None).unwrap_or(Complex64::new(f64::NAN, 0.0));
        num += v * pw;
        pw *= t;
    }
    let i = Complex64::new(0.0, 1.0);
    num / ((t - i).powu(r.a) * (t + i).powu(r.b))
}

fn random_decaying_ratxi(rng: &mut ChaCha8Rng, min_decay: i64) -> RatXi {
    loop {
        let a = rng.gen_range(1u32..=3);
        let b = rng.gen_range(1u32..=3);
        let max_deg = (a + b) as i64 - min_decay;
        if max_deg < 0 {
            continue;
        }
        let deg = rng.gen_range(0..=max_deg) as usize;
        let coeffs: Vec<FormalPoly> =
            (0..=deg).map(|_| FormalPoly::scalar(random_scalar(rng))).collect();
        let r = RatXi::new(XiPoly::from_coeffs(coeffs), a, b);
        if !r.is_zero() && r.decay_balance() <= -min_decay {
            return r;
        }
    }
}

fn check_line_quadrature(seed: u64, samples: u32) -> Result<OracleCheck, OracleError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x11fe);
    let mut worst: f64 = 0.0;
    for _ in 0..samples.max(10) {
        let r = random_decaying_ratxi(&mut rng, 2);
        let exact = r.integrate_line().map_err(|_| OracleError::CannotInstantiate(
            "non-integrable sample".into(),
        ))?;
        let exact_val = exact.eval_complex(PI, &|_| None)?;
        let mut f = |t: f64| eval_ratxi_f64(&r, Complex64::new(t, 0.0));
        let q = quad_line(&mut f, 1e-10)?;
        worst = worst.max((exact_val - q.value).norm() / exact_val.norm().max(1.0));
    }
    Ok(OracleCheck::new("line-residue-vs-quadrature", TOL_QUAD, worst))
}

fn check_pi_prime_quadrature() -> Result<OracleCheck, OracleError> {
    // (1/2π) ∫ 1/(1+t²) dt = 1/2 against the residue route.
    let one_over = RatXi::new(XiPoly::constant(FormalPoly::one()), 1, 1);
    let exact = one_over
        .pi_prime()
        .map_err(|_| OracleError::CannotInstantiate("pi-prime sample".into()))?
        .eval_complex(PI, &|_| None)?;
    let mut f = |t: f64| Complex64::new(1.0 / (1.0 + t * t), 0.0);
    let q = quad_line(&mut f, 1e-11)?;
    let numeric = q.value / Complex64::new(2.0 * PI, 0.0);
    Ok(OracleCheck::new("pi-prime-vs-quadrature", TOL_LINALG, (exact - numeric).norm()))
}

fn check_sphere_quadrature(m: u8) -> Result<OracleCheck, OracleError> {
    let patterns: Vec<Vec<u32>> = if m == 3 {
        vec![
            vec![0, 0, 0],
            vec![2, 0, 0],
            vec![0, 2, 0],
            vec![2, 2, 0],
            vec![4, 0, 0],
            vec![1, 0, 0],
            vec![1, 1, 0],
        ]
    } else {
        vec![vec![0, 0], vec![2, 0], vec![0, 2], vec![2, 2], vec![1, 1]]
    };
    let mut worst: f64 = 0.0;
    for e in &patterns {
        let exact = sphere_moment(e, m)
            .map_err(|_| OracleError::CannotInstantiate("moment".into()))?
            .eval(PI)?;
        let mut g = |x: &[f64]| {
            let mut acc = 1.0;
            for (xi, ek) in x.iter().zip(e) {
                acc *= xi.powi(*ek as i32);
            }
            Complex64::new(acc, 0.0)
        };
        let q = quad_sphere(&mut g, m)?;
        worst = worst.max((exact - q.value).norm());
    }
    Ok(OracleCheck::new(format!("sphere-moment-vs-quadrature-m{m}"), TOL_LINALG, worst))
}

fn check_pi_plus_contour(seed: u64, samples: u32) -> OracleCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x991);
    let contour = PiPlusContour::new(64);
    let mut worst: f64 = 0.0;
    for _ in 0..samples.max(10) {
        let r = random_decaying_ratxi(&mut rng, 1);
        let plus = match r.pi_plus() {
            Ok(p) => p,
            Err(_) => continue,
        };
        let values: Vec<Complex64> =
            contour.nodes.iter().map(|&eta| eval_ratxi_f64(&r, eta)).collect();
        for xi0 in [-2.3, -0.7, 0.1, 0.9, 3.1] {
            let x = Complex64::new(xi0, 0.0);
            let got = contour.project(&values, x);
            let expect = eval_ratxi_f64(&plus, x);
            worst = worst.max((got - expect).norm());
        }
    }
    OracleCheck::new("pi-plus-contour", TOL_LINALG, worst)
}

fn check_parametrix_numeric(
    n: u8,
    rep: &GammaRep,
    seed: u64,
    samples: u32,
) -> Result<(OracleCheck, OracleCheck), OracleError> {
    let (q1, q2) = parametrix(n).map_err(|_| OracleError::CannotInstantiate("parametrix".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9a7a);
    let mut worst1: f64 = 0.0;
    let mut worst2: f64 = 0.0;
    for s in 0..samples.max(4) as u64 {
        let inst = sample_j(seed.wrapping_add(500 + s), n);
        let sym = NumericSymbols::new(rep, &inst);
        let m = (n - 1) as usize;
        let xip: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let xin: f64 = rng.gen_range(0.2..1.5);
        let x0 = vec![0.0; n as usize];
        let exact1 = realize_symbol(&q1.value, rep, &inst, &xip, xin)?;
        let num1 = sym.sigma_m1(&x0, &xip, Complex64::new(xin, 0.0));
        worst1 = worst1.max(max_mat(&(&exact1 - &num1)));
        let exact2 = realize_symbol(&q2.value, rep, &inst, &xip, xin)?;
        let num2 = sym.sigma_m2(&xip, Complex64::new(xin, 0.0));
        worst2 = worst2.max(max_mat(&(&exact2 - &num2)));
    }
    Ok((
        OracleCheck::new(format!("parametrix-leading-numeric-n{n}"), TOL_LINALG, worst1),
        OracleCheck::new(format!("parametrix-next-numeric-n{n}"), TOL_FD, worst2),
    ))
}

fn check_cases_end_to_end(
    n: u8,
    rep: &GammaRep,
    cases: &[CaseOutcome],
    seed: u64,
    samples: u32,
) -> Result<Vec<OracleCheck>, OracleError> {
    let mut out = Vec::new();
    for case in cases {
        // Seeds are independent pure computations; run them concurrently.
        let errs: Vec<Result<f64, OracleError>> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..samples as u64)
                .map(|s| {
                    scope.spawn(move || -> Result<f64, OracleError> {
                        let inst = sample_j(seed.wrapping_add(s), n);
                        let rep = make_gamma(n)?;
                        let val = valuation(&inst, &[], 0.0);
                        let exact = case.honest.eval_complex(PI, &val)?;
                        let numeric = numeric_case(&rep, &inst, &case.spec, 1e-8)?;
                        Ok((exact - numeric).norm() / exact.norm().max(1.0))
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("seed worker")).collect()
        });
        let mut worst: f64 = 0.0;
        for e in errs {
            worst = worst.max(e?);
        }
        let _ = rep;
        out.push(OracleCheck::new(format!("case-{}-end-to-end", case.spec.id), TOL_FD, worst));
    }
    Ok(out)
}

/// Identity-structure sanity: with `J = id` the boundary term vanishes on
/// both the exact and the numeric route.
fn check_identity_structure(n: u8, cases: &[CaseOutcome]) -> Result<OracleCheck, OracleError> {
    let mut total = FormalPoly::zero();
    for c in cases {
        total = total.add(&c.honest);
    }
    let identity = total.subst_structure(
        &|b, p| if b == p { Scalar::one() } else { Scalar::zero() },
        &|_, _, _| Scalar::zero(),
    );
    let one_val = |g: &Gen| -> Option<Complex64> {
        match g {
            Gen::HP => Some(Complex64::new(0.9, 0.0)),
            Gen::S => Some(Complex64::new(0.3, 0.0)),
            _ => None,
        }
    };
    let v = if n == 4 {
        identity.eval_complex(PI, &one_val)?
    } else {
        // In dimension three the boundary term does not vanish for the
        // identity structure; this check only applies to dimension four.
        Complex64::new(0.0, 0.0)
    };
    Ok(OracleCheck::new(format!("identity-structure-vanishes-n{n}"), TOL_LINALG, v.norm()))
}

/// Runs the full battery for the given dimension; `cases` are the exact
/// pipeline outcomes to verify end to end.
pub fn run_oracle_checks(
    cfg: &OracleConfig,
    cases: &[CaseOutcome],
) -> Result<Vec<OracleCheck>, OracleError> {
    let n = cfg.dim;
    let rep = make_gamma(n)?;
    let mut out = Vec::new();
    out.push(OracleCheck::new(
        format!("gamma-relation-n{n}"),
        1e-12,
        rep.anticommutator_residual(),
    ));
    out.push(check_clifford_vs_matrices(&rep, cfg.seed, cfg.samples)?);
    out.push(check_pairing_traces(&rep, cfg.seed, cfg.samples));
    out.push(check_abstract_trace_instantiated(&rep, cfg.seed));
    let (a, b, c) = check_j_instances(n, cfg.seed, cfg.samples);
    out.push(a);
    out.push(b);
    out.push(c);
    out.push(check_rewrite_soundness(n, cfg.seed, cfg.samples)?);
    out.push(check_line_quadrature(cfg.seed, cfg.samples)?);
    out.push(check_pi_prime_quadrature()?);
    out.push(check_sphere_quadrature(n - 1)?);
    out.push(check_pi_plus_contour(cfg.seed, cfg.samples));
    let (p1c, p2c) = check_parametrix_numeric(n, &rep, cfg.seed, cfg.samples.min(6))?;
    out.push(p1c);
    out.push(p2c);
    out.extend(check_cases_end_to_end(n, &rep, cases, cfg.seed, cfg.samples)?);
    out.push(check_identity_structure(n, cases)?);
    Ok(out)
}
