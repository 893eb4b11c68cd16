use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{BoundKind, OracleEstimate};
use crate::engine::snap_unit;
use crate::error::{Error, Result};
use crate::fock_basis::{kernel_gram, rkhs_lower_bound};
use crate::matrix_core::{
    c, hermitian_eigen, identity, op_norm, range_membership, svd, CMatrix, CVector, RangeExponent, Tolerances,
};
use crate::phi_model::PhiSeries;
use crate::sample;

/// Lower bounds for ||1||, from interpolating the constant 1 on shrinking
/// random point sets in C^1; step j uses j + 1 points of modulus about 2^-j.
pub fn rkhs_constant_norm_probe(phi: &PhiSeries, point_budget: usize, seed: u64) -> Result<OracleEstimate> {
    if phi.at_zero() == 0.0 {
        return Err(Error::PhiZeroAtOrigin);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    let mut values = Vec::with_capacity(point_budget);
    for j in 0..point_budget {
        let radius = 0.5f64.powi(j as i32);
        let points: Vec<CVector> =
            (0..=j).map(|_| sample::gaussian_vector(&mut rng, 1) * c(radius, 0.0)).collect();
        let ones = vec![c(1.0, 0.0); points.len()];
        let lb = rkhs_lower_bound(phi, &points, &ones)?;
        if lb.is_finite() {
            best = best.max(lb.sqrt());
        }
        values.push(best);
    }
    Ok(OracleEstimate::new((1..=point_budget).collect(), values, BoundKind::Lower))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Dominance {
    /// Smallest eigenvalue of the difference of the two Gram matrices.
    pub min_eig: f64,
    /// Largest entry modulus of the Gram matrices.
    pub scale: f64,
    pub holds: bool,
}

fn dominance(lower: &CMatrix, upper: &CMatrix, rtol: f64) -> Dominance {
    let diff = upper - lower;
    let diff = (&diff + diff.adjoint()) * c(0.5, 0.0);
    let min_eig = hermitian_eigen(&diff).0.first().copied().unwrap_or(0.0);
    let scale = lower.iter().chain(upper.iter()).map(|z| z.norm()).fold(1.0, f64::max);
    Dominance { min_eig, scale, holds: min_eig >= -rtol * scale }
}

/// ||C_A f|| <= ||C_B f|| on the span of the kernels at `points`. Since
/// C_X K_xi = K_{X* xi}, this says the Gram matrix with entries
/// Phi(<B* xi_j, B* xi_i>) dominates the one for A.
pub fn adjoint_gram_dominance(
    phi: &PhiSeries,
    a: &CMatrix,
    b: &CMatrix,
    points: &[CVector],
    rtol: f64,
) -> Result<Dominance> {
    let gram = |x: &CMatrix| {
        let xh = x.adjoint();
        kernel_gram(phi, &points.iter().map(|p| &xh * p).collect::<Vec<_>>())
    };
    Ok(dominance(&gram(a)?, &gram(b)?, rtol))
}

/// <C_A f, f> <= <C_B f, f> on the span of the kernels at `points`, for
/// selfadjoint A, B: entries Phi(<xi_i, X xi_j>).
pub fn form_dominance(
    phi: &PhiSeries,
    a: &CMatrix,
    b: &CMatrix,
    points: &[CVector],
    rtol: f64,
) -> Result<Dominance> {
    let form = |x: &CMatrix| -> Result<CMatrix> {
        let n = points.len();
        let mut h = CMatrix::zeros(n, n);
        for j in 0..n {
            let xj = x * &points[j];
            for i in 0..n {
                h[(i, j)] = phi.eval_complex(xj.dotc(&points[i]))?;
            }
        }
        Ok(h)
    };
    Ok(dominance(&form(a)?, &form(b)?, rtol))
}

/// `count` random points plus the top eigenvector of the Hermitian matrix
/// `diff` at a few radii, where a violation of the matrix order shows first.
pub fn bridge_points<R: Rng + ?Sized>(rng: &mut R, diff: &CMatrix, count: usize) -> Vec<CVector> {
    let d = diff.nrows();
    let mut pts: Vec<CVector> = (0..count).map(|_| sample::gaussian_vector(rng, d) * c(0.7, 0.0)).collect();
    let (_, vecs) = hermitian_eigen(diff);
    let top = vecs.column(d - 1).into_owned();
    pts.extend([0.5, 1.0, 1.5].iter().map(|&r| &top * c(r, 0.0)));
    pts
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct NaszeqConditions {
    /// <A xi, b> = 0 whenever ||A xi|| = ||xi||.
    pub orthogonal_on_isometric_part: bool,
    /// A* b in ran(I - A*A).
    pub adjoint_image_in_range: bool,
    /// b in ran(I - AA*).
    pub in_range: bool,
}

impl NaszeqConditions {
    pub fn agree(&self) -> bool {
        self.orthogonal_on_isometric_part == self.adjoint_image_in_range && self.adjoint_image_in_range == self.in_range
    }
}

/// The three conditions for a contraction, each decided on its own.
pub fn naszeq_conditions(a: &CMatrix, b: &CVector, tol: &Tolerances) -> Result<NaszeqConditions> {
    let norm = snap_unit(op_norm(a));
    if norm > 1.0 {
        return Err(Error::ContractionViolated { norm });
    }
    let dec = svd(a)?;
    let scale = b.norm().max(1.0);
    let orthogonal_on_isometric_part = dec
        .s
        .iter()
        .enumerate()
        .filter(|(_, &s)| (s - 1.0).abs() <= tol.residual)
        .all(|(k, _)| (a * dec.v.column(k)).dotc(b).norm() <= tol.residual * scale);
    let id = identity(a.nrows());
    let ah = a.adjoint();
    let adjoint_image_in_range = range_membership(&(&id - &ah * a), &(&ah * b), RangeExponent::One, tol)?.member;
    let in_range = range_membership(&(&id - a * &ah), b, RangeExponent::One, tol)?.member;
    Ok(NaszeqConditions { orthogonal_on_isometric_part, adjoint_image_in_range, in_range })
}
