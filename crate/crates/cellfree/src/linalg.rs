//! Thin complex linear-algebra helpers shared by the allocators.
//!
//! Only what the allocators need: Hermitian positive-definite solves,
//! quadratic forms, and vertical concatenation. Dense storage via nalgebra.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;

use crate::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const C_ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn cx(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// true when max |a - a^H| entrywise <= tol.
pub fn is_hermitian(a: &CMat, tol: f64) -> bool {
    if a.nrows() != a.ncols() {
        return false;
    }
    for i in 0..a.nrows() {
        for j in 0..=i {
            if (a[(i, j)] - a[(j, i)].conj()).norm() > tol {
                return false;
            }
        }
    }
    true
}

/// Cholesky factorization of a Hermitian positive-definite matrix.
///
/// On failure a jitter of 1e-12 * mean diagonal is added once before giving
/// up; the matrices produced by the allocators always carry a sigma^2 I term
/// so this path is not expected in practice.
pub struct HermFactor {
    chol: Cholesky<Complex64, Dyn>,
}

impl HermFactor {
    pub fn new(a: CMat) -> Result<Self> {
        let dim = a.nrows();
        match Cholesky::new(a.clone()) {
            Some(chol) => Ok(HermFactor { chol }),
            None => {
                let trace: f64 = (0..dim).map(|i| a[(i, i)].re).sum();
                let jitter = 1e-12 * (trace / dim.max(1) as f64).max(1.0);
                let mut b = a;
                for i in 0..dim {
                    b[(i, i)] += cx(jitter);
                }
                Cholesky::new(b)
                    .map(|chol| HermFactor { chol })
                    .ok_or_else(|| {
                        Error::Numerics("Cholesky failed on jittered matrix".into())
                    })
            }
        }
    }

    pub fn solve(&self, b: &CVec) -> CVec {
        self.chol.solve(b)
    }

    /// Re(x^H A^{-1} x); real and non-negative for Hermitian PD A.
    pub fn quad_form_inv(&self, x: &CVec) -> f64 {
        x.dotc(&self.chol.solve(x)).re
    }
}

/// Vertical concatenation of equally wide blocks.
pub fn vstack(blocks: &[&CMat]) -> CMat {
    assert!(!blocks.is_empty(), "vstack of zero blocks");
    let cols = blocks[0].ncols();
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        assert_eq!(b.ncols(), cols);
        out.view_mut((at, 0), (b.nrows(), cols)).copy_from(*b);
        at += b.nrows();
    }
    out
}

/// out += alpha * x * y^H (rank-1 Hermitian-style update).
pub fn add_outer(out: &mut CMat, alpha: f64, x: &CVec, y: &CVec) {
    out.gerc(cx(alpha), x, y, C_ONE);
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_vec(dim: usize, rng: &mut ChaCha8Rng) -> CVec {
        CVec::from_fn(dim, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    fn random_hpd(dim: usize, rng: &mut ChaCha8Rng) -> CMat {
        let mut a = CMat::zeros(dim, dim);
        for _ in 0..2 * dim {
            let x = random_vec(dim, rng);
            add_outer(&mut a, 1.0, &x, &x);
        }
        for i in 0..dim {
            a[(i, i)] += cx(0.1);
        }
        a
    }

    #[test]
    fn hermitian_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_hpd(5, &mut rng);
        assert!(is_hermitian(&a, 1e-10));
        let mut b = a.clone();
        b[(0, 1)] += Complex64::new(1e-3, 0.0);
        assert!(!is_hermitian(&b, 1e-10));
    }

    #[test]
    fn solve_recovers_rhs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_hpd(6, &mut rng);
        let x = random_vec(6, &mut rng);
        let b = &a * &x;
        let f = HermFactor::new(a).unwrap();
        let x2 = f.solve(&b);
        assert!((&x2 - &x).norm() < 1e-9 * x.norm().max(1.0));
    }

    #[test]
    fn quad_form_matches_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_hpd(4, &mut rng);
        let x = random_vec(4, &mut rng);
        let f = HermFactor::new(a).unwrap();
        let q = f.quad_form_inv(&x);
        let direct = x.dotc(&f.solve(&x));
        assert!(q >= 0.0);
        assert!((q - direct.re).abs() < 1e-12 * q.abs().max(1.0));
        assert!(direct.im.abs() < 1e-10 * q.abs().max(1.0));
    }

    #[test]
    fn vstack_shapes_and_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = CMat::from_fn(2, 3, |_, _| Complex64::new(rng.random(), rng.random()));
        let b = CMat::from_fn(4, 3, |_, _| Complex64::new(rng.random(), rng.random()));
        let s = vstack(&[&a, &b]);
        assert_eq!(s.nrows(), 6);
        assert_eq!(s.ncols(), 3);
        let n2 = s.norm_squared();
        assert!((n2 - a.norm_squared() - b.norm_squared()).abs() < 1e-12 * n2);
        assert_eq!(s.view((0, 0), (2, 3)), a.view((0, 0), (2, 3)));
    }
}
