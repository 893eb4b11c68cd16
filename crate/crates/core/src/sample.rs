//! Seeded random matrices and vectors for tests, property checks and the suite.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::matrix_core::{c, op_norm, CMatrix, CVector};

/// Standard complex Gaussian: real and imaginary parts N(0, 1/2).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> num_complex::Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| complex_gaussian(rng))
}

/// Haar-distributed unitary via QR with the phase correction on R's diagonal.
pub fn unitary_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let qr = gaussian_matrix(rng, n, n).qr();
    let (q, r) = (qr.q(), qr.r());
    let mut u = q;
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
        for i in 0..n {
            u[(i, j)] *= phase;
        }
    }
    u
}

/// Random PSD matrix of the given rank with eigenvalues in (0.1, 2).
pub fn psd_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> CMatrix {
    let u = unitary_matrix(rng, n);
    let mut d = CMatrix::zeros(n, n);
    for i in 0..rank.min(n) {
        d[(i, i)] = c(rng.random_range(0.1..2.0), 0.0);
    }
    &u * d * u.adjoint()
}

/// Random selfadjoint matrix of the given rank, eigenvalues of either sign.
pub fn selfadjoint_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> CMatrix {
    let u = unitary_matrix(rng, n);
    let mut d = CMatrix::zeros(n, n);
    for i in 0..rank.min(n) {
        let mag: f64 = rng.random_range(0.1..2.0);
        d[(i, i)] = c(if rng.random_bool(0.5) { mag } else { -mag }, 0.0);
    }
    &u * d * u.adjoint()
}

pub fn low_rank_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> CMatrix {
    gaussian_matrix(rng, n, rank) * gaussian_matrix(rng, rank, n)
}

/// U diag(z) U* with complex Gaussian z.
pub fn normal_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let u = unitary_matrix(rng, n);
    let z = gaussian_vector(rng, n);
    &u * CMatrix::from_diagonal(&z) * u.adjoint()
}

/// Gaussian matrix rescaled to the given operator norm.
pub fn matrix_with_norm<R: Rng + ?Sized>(rng: &mut R, n: usize, norm: f64) -> CMatrix {
    let a = gaussian_matrix(rng, n, n);
    let s = op_norm(&a);
    if s == 0.0 {
        a
    } else {
        a * c(norm / s, 0.0)
    }
}

/// Vector rescaled to the given Euclidean norm.
pub fn vector_with_norm<R: Rng + ?Sized>(rng: &mut R, n: usize, norm: f64) -> CVector {
    let v = gaussian_vector(rng, n);
    let s = v.norm();
    if s == 0.0 {
        v
    } else {
        v * c(norm / s, 0.0)
    }
}
