//! Seeded random product structures: a symmetric orthogonal involution with
//! derivative data sampled directly in the tangent space of the constraint
//! manifold, plus an independent finite-difference path for cross-checking.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type RMat = DMatrix<f64>;

/// Random instance of the product structure at a boundary point.
#[derive(Clone, Debug)]
pub struct JInstance {
    pub n: u8,
    pub seed: u64,
    /// Symmetric orthogonal involution.
    pub j0: RMat,
    /// Signature data: number of −1 eigenvalues.
    pub minus_count: usize,
    /// Symmetric derivative matrices anticommuting with `j0`, one per
    /// coordinate direction.
    pub dj: Vec<RMat>,
    /// Sampled collar-metric derivative h'(0).
    pub hp: f64,
    /// Sampled scalar curvature value.
    pub s: f64,
    // Eigenbasis and generators retained for the path cross-check.
    q: RMat,
    d_signs: Vec<f64>,
    omegas: Vec<RMat>,
}

fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> RMat {
    let g = RMat::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0) + 1e-3);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..n {
        if r[(k, k)] < 0.0 {
            for row in 0..n {
                q[(row, k)] = -q[(row, k)];
            }
        }
    }
    q
}

/// Samples a reproducible instance.  The involution is `Q D Qᵀ` with random
/// orthogonal `Q` and a mixed-sign diagonal; the derivatives live in the
/// off-diagonal block between the eigenspaces, which is exactly the tangent
/// space cut out by `dJ·J + J·dJ = 0` with `dJ` symmetric.
pub fn sample_j(seed: u64, n: u8) -> JInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nn = n as usize;
    let q = random_orthogonal(&mut rng, nn);
    // Signature between 1 and n−1 so the tangent space is nontrivial.
    let minus_count = 1 + (rng.gen_range(0u32..u32::MAX) as usize) % (nn - 1);
    let mut d_signs = vec![1.0; nn];
    for s in d_signs.iter_mut().take(minus_count) {
        *s = -1.0;
    }
    let d = RMat::from_diagonal(&nalgebra::DVector::from_vec(d_signs.clone()));
    let j0 = &q * &d * q.transpose();

    let p = nn - minus_count;
    let hp = rng.gen_range(0.4..1.6);
    let mut dj = Vec::with_capacity(nn);
    let mut omegas = Vec::with_capacity(nn);
    for dir in 0..nn {
        // Cross block B between the +1 (first p columns after reordering:
        // signs are −1 first) and −1 eigenspaces.
        let b = RMat::from_fn(minus_count, p, |_, _| rng.gen_range(-1.0..1.0));
        let mut s_tilde = RMat::zeros(nn, nn);
        for r in 0..minus_count {
            for c in 0..p {
                s_tilde[(r, minus_count + c)] = b[(r, c)];
                s_tilde[(minus_count + c, r)] = b[(r, c)];
            }
        }
        let mut s_dir = &q * &s_tilde * q.transpose();
        if dir == nn - 1 {
            // First-order isometry along the collar direction: the metric
            // derivative pins the antisymmetric part of the normal
            // derivative to h'(0)(J P' − P' J)/2 with P' the tangential
            // projector; only the symmetric part is free.
            s_dir += normal_affine_part(&j0, hp);
        }
        dj.push(s_dir);
        // Generator with [Ω, D] = S̃: cross block C = B/(d_plus − d_minus)·…
        // here d_first = −1, d_second = +1 so Ω_{rc} = B_{rc}/2.
        let mut omega = RMat::zeros(nn, nn);
        for r in 0..minus_count {
            for c in 0..p {
                omega[(r, minus_count + c)] = b[(r, c)] / 2.0;
                omega[(minus_count + c, r)] = -b[(r, c)] / 2.0;
            }
        }
        omegas.push(omega);
    }
    let s = rng.gen_range(-2.0..2.0);
    JInstance { n, seed, j0, minus_count, dj, hp, s, q, d_signs, omegas }
}

/// `h'(0)(J P' − P' J)/2`: the metric-forced antisymmetric part of the
/// normal derivative of the structure matrix.
pub fn normal_affine_part(j0: &RMat, hp: f64) -> RMat {
    let nn = j0.nrows();
    let mut p_t = RMat::identity(nn, nn);
    p_t[(nn - 1, nn - 1)] = 0.0;
    (j0 * &p_t - &p_t * j0) * (hp / 2.0)
}

fn mat_exp_taylor(m: &RMat, order: usize) -> RMat {
    let n = m.nrows();
    let mut acc = RMat::identity(n, n);
    let mut term = RMat::identity(n, n);
    for k in 1..=order {
        term = &term * m / (k as f64);
        acc += &term;
    }
    acc
}

impl JInstance {
    pub fn max_abs(m: &RMat) -> f64 {
        m.iter().fold(0.0f64, |a, &x| a.max(x.abs()))
    }

    /// `|J² − 1|` residual.
    pub fn involution_residual(&self) -> f64 {
        let nn = self.n as usize;
        Self::max_abs(&(&self.j0 * &self.j0 - RMat::identity(nn, nn)))
    }

    /// `|Jᵀ − J|` residual.
    pub fn symmetry_residual(&self) -> f64 {
        Self::max_abs(&(self.j0.transpose() - &self.j0))
    }

    /// Worst of `|dJ·J + J·dJ|` over all directions and `|dJᵀ − dJ|` over
    /// tangential ones; the normal derivative is symmetric only after
    /// removing the metric-forced affine part.
    pub fn tangency_residual(&self) -> f64 {
        let nn = self.n as usize;
        let affine = normal_affine_part(&self.j0, self.hp);
        let mut worst: f64 = 0.0;
        for (dir, s) in self.dj.iter().enumerate() {
            worst = worst.max(Self::max_abs(&(s * &self.j0 + &self.j0 * s)));
            let sym_part = if dir == nn - 1 { s - &affine } else { s.clone() };
            worst = worst.max(Self::max_abs(&(sym_part.transpose() - sym_part)));
        }
        worst
    }

    /// Independent path check: `J(t) = Q e^{tΩ} D e^{−tΩ} Qᵀ` differentiated
    /// by central differences against the stored tangent data (the free,
    /// conjugation-generated part of each derivative).
    pub fn path_derivative_residual(&self, step: f64) -> f64 {
        let nn = self.n as usize;
        let d = RMat::from_diagonal(&nalgebra::DVector::from_vec(self.d_signs.clone()));
        let affine = normal_affine_part(&self.j0, self.hp);
        let mut worst: f64 = 0.0;
        for (dir, (omega, s)) in self.omegas.iter().zip(&self.dj).enumerate() {
            let j_at = |t: f64| -> RMat {
                let e = mat_exp_taylor(&(omega * t), 6);
                let em = mat_exp_taylor(&(omega * (-t)), 6);
                &self.q * &e * &d * &em * self.q.transpose()
            };
            let fd = (j_at(step) - j_at(-step)) / (2.0 * step);
            let target = if dir == nn - 1 { s - &affine } else { s.clone() };
            worst = worst.max(Self::max_abs(&(fd - target)));
        }
        worst
    }

    /// The structure matrix at a displaced point, `J₀ + Σ x_i dJ_i`.
    pub fn a_at(&self, x: &[f64]) -> RMat {
        let mut a = self.j0.clone();
        for (i, s) in self.dj.iter().enumerate() {
            a += s * x[i];
        }
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampled_instances_satisfy_constraints() {
        for n in [3u8, 4] {
            for seed in 0..6u64 {
                let inst = sample_j(seed, n);
                assert!(inst.involution_residual() < 1e-12, "J^2, n={n} seed={seed}");
                assert!(inst.symmetry_residual() < 1e-12);
                assert!(inst.tangency_residual() < 1e-10);
                assert!(inst.path_derivative_residual(1e-4) < 1e-6);
                assert!(inst.dj.iter().any(|s| JInstance::max_abs(s) > 1e-3));
            }
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let a = sample_j(7, 4);
        let b = sample_j(7, 4);
        assert_eq!(a.j0, b.j0);
        assert_eq!(a.hp, b.hp);
        assert_eq!(a.dj, b.dj);
    }
}
