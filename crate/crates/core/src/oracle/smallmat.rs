//! Stack-allocated complex matrices up to 4×4 for the hot numeric paths.

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;

const MAX: usize = 4;

/// Dense complex matrix of dimension ≤ 4 backed by a fixed buffer.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct SmallMat {
    pub dim: usize,
    d: [Complex64; MAX * MAX],
}

impl SmallMat {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim <= MAX);
        SmallMat { dim, d: [Complex64::new(0.0, 0.0); MAX * MAX] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for k in 0..dim {
            m.d[k * MAX + k] = Complex64::new(1.0, 0.0);
        }
        m
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.d[r * MAX + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.d[r * MAX + c] = v;
    }

    pub fn from_rows(dim: usize, rows: &[Complex64]) -> Self {
        let mut m = Self::zeros(dim);
        for r in 0..dim {
            for c in 0..dim {
                m.set(r, c, rows[r * dim + c]);
            }
        }
        m
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|k| self.get(k, k)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.dim {
            for c in 0..self.dim {
                worst = worst.max(self.get(r, c).norm());
            }
        }
        worst
    }

    pub fn kron(&self, other: &SmallMat) -> SmallMat {
        let n = self.dim * other.dim;
        assert!(n <= MAX);
        let mut out = SmallMat::zeros(n);
        for r1 in 0..self.dim {
            for c1 in 0..self.dim {
                for r2 in 0..other.dim {
                    for c2 in 0..other.dim {
                        out.set(
                            r1 * other.dim + r2,
                            c1 * other.dim + c2,
                            self.get(r1, c1) * other.get(r2, c2),
                        );
                    }
                }
            }
        }
        out
    }

    /// Gauss–Jordan inverse with partial pivoting.
    pub fn try_inverse(&self) -> Option<SmallMat> {
        let n = self.dim;
        let mut a = *self;
        let mut inv = SmallMat::identity(n);
        for col in 0..n {
            let mut pivot = col;
            let mut best = a.get(col, col).norm();
            for r in (col + 1)..n {
                let v = a.get(r, col).norm();
                if v > best {
                    best = v;
                    pivot = r;
                }
            }
            if best < 1e-300 {
                return None;
            }
            if pivot != col {
                for c in 0..n {
                    let (x, y) = (a.get(col, c), a.get(pivot, c));
                    a.set(col, c, y);
                    a.set(pivot, c, x);
                    let (x, y) = (inv.get(col, c), inv.get(pivot, c));
                    inv.set(col, c, y);
                    inv.set(pivot, c, x);
                }
            }
            let scale = Complex64::new(1.0, 0.0) / a.get(col, col);
            for c in 0..n {
                a.set(col, c, a.get(col, c) * scale);
                inv.set(col, c, inv.get(col, c) * scale);
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a.get(r, col);
                if f.norm() == 0.0 {
                    continue;
                }
                for c in 0..n {
                    let v = a.get(r, c) - f * a.get(col, c);
                    a.set(r, c, v);
                    let v = inv.get(r, c) - f * inv.get(col, c);
                    inv.set(r, c, v);
                }
            }
        }
        Some(inv)
    }
}

impl Add for &SmallMat {
    type Output = SmallMat;
    fn add(self, rhs: &SmallMat) -> SmallMat {
        debug_assert_eq!(self.dim, rhs.dim);
        let mut out = *self;
        for k in 0..MAX * MAX {
            out.d[k] += rhs.d[k];
        }
        out
    }
}

impl Sub for &SmallMat {
    type Output = SmallMat;
    fn sub(self, rhs: &SmallMat) -> SmallMat {
        debug_assert_eq!(self.dim, rhs.dim);
        let mut out = *self;
        for k in 0..MAX * MAX {
            out.d[k] -= rhs.d[k];
        }
        out
    }
}

impl Neg for &SmallMat {
    type Output = SmallMat;
    fn neg(self) -> SmallMat {
        let mut out = *self;
        for k in 0..MAX * MAX {
            out.d[k] = -out.d[k];
        }
        out
    }
}

impl Mul for &SmallMat {
    type Output = SmallMat;
    fn mul(self, rhs: &SmallMat) -> SmallMat {
        debug_assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        let mut out = SmallMat::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self.get(r, k);
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for c in 0..n {
                    let v = out.get(r, c) + a * rhs.get(k, c);
                    out.set(r, c, v);
                }
            }
        }
        out
    }
}

impl Mul<Complex64> for &SmallMat {
    type Output = SmallMat;
    fn mul(self, rhs: Complex64) -> SmallMat {
        let mut out = *self;
        for k in 0..MAX * MAX {
            out.d[k] *= rhs;
        }
        out
    }
}

impl Div<Complex64> for &SmallMat {
    type Output = SmallMat;
    fn div(self, rhs: Complex64) -> SmallMat {
        let mut out = *self;
        for k in 0..MAX * MAX {
            out.d[k] /= rhs;
        }
        out
    }
}

impl Add<SmallMat> for SmallMat {
    type Output = SmallMat;
    fn add(self, rhs: SmallMat) -> SmallMat {
        &self + &rhs
    }
}

impl std::ops::AddAssign<SmallMat> for SmallMat {
    fn add_assign(&mut self, rhs: SmallMat) {
        *self = &*self + &rhs;
    }
}

impl Mul<&SmallMat> for SmallMat {
    type Output = SmallMat;
    fn mul(self, rhs: &SmallMat) -> SmallMat {
        &self * rhs
    }
}

impl Sub<SmallMat> for SmallMat {
    type Output = SmallMat;
    fn sub(self, rhs: SmallMat) -> SmallMat {
        &self - &rhs
    }
}

impl Neg for SmallMat {
    type Output = SmallMat;
    fn neg(self) -> SmallMat {
        -&self
    }
}

impl Mul<SmallMat> for SmallMat {
    type Output = SmallMat;
    fn mul(self, rhs: SmallMat) -> SmallMat {
        &self * &rhs
    }
}

impl Mul<Complex64> for SmallMat {
    type Output = SmallMat;
    fn mul(self, rhs: Complex64) -> SmallMat {
        &self * rhs
    }
}

impl Div<Complex64> for SmallMat {
    type Output = SmallMat;
    fn div(self, rhs: Complex64) -> SmallMat {
        &self / rhs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_round_trip() {
        let i = Complex64::new(0.0, 1.0);
        let m = SmallMat::from_rows(
            3,
            &[
                Complex64::new(2.0, 0.0),
                i,
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, -1.0),
                Complex64::new(3.0, 0.5),
                Complex64::new(0.2, 0.0),
                Complex64::new(0.0, 0.3),
                Complex64::new(-1.0, 0.0),
                Complex64::new(1.5, 0.0),
            ],
        );
        let inv = m.try_inverse().unwrap();
        let prod = &m * &inv;
        assert!((&prod - &SmallMat::identity(3)).max_abs() < 1e-13);
    }

    #[test]
    fn kron_dimensions() {
        let a = SmallMat::identity(2);
        let b = SmallMat::identity(2);
        assert_eq!(a.kron(&b), SmallMat::identity(4));
    }
}
