//! Brute-force checks that never use the closed forms: norms of compressions
//! to the invariant polynomial spaces, operator identities assembled block by
//! block, Gaussian Gram matrices, and explicit sequence models standing in for
//! infinite-dimensional examples.

mod gaussian_l2;
mod gram;
mod models;

pub use gaussian_l2::{l2_gram_norm, L2Mode, McConfig};
pub use gram::{
    adjoint_gram_dominance, bridge_points, form_dominance, naszeq_conditions, rkhs_constant_norm_probe, Dominance,
    NaszeqConditions,
};
pub use models::{
    diagonal_model_run, shift_model_run, DiagonalClass, DiagonalModel, DiagonalReport, ShiftModel, ShiftReport, ShiftRow,
};

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock_basis::{compose_matrix, count_of_degree, AffineSymbol, CompOpMatrix};
use crate::matrix_core::{
    aluthge, eigenvalues, kron, op_norm, polar_decompose, psd_power, singular_values, CMatrix, Tolerances,
};
use crate::phi_model::PhiSeries;

/// Relative change below which a curve counts as settled.
pub const CONVERGENCE_RTOL: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BoundKind {
    Lower,
    Upper,
    TwoSided,
}

impl BoundKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundKind::Lower => "LOWER",
            BoundKind::Upper => "UPPER",
            BoundKind::TwoSided => "TWO_SIDED",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleEstimate {
    /// Truncation level or step of each value.
    pub index: Vec<usize>,
    pub values: Vec<f64>,
    pub bound_kind: BoundKind,
    pub converged: bool,
    #[serde(rename = "final")]
    pub final_value: f64,
    /// Batch-means standard error of `final_value`, for sampled estimates.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
}

impl OracleEstimate {
    pub fn new(index: Vec<usize>, values: Vec<f64>, bound_kind: BoundKind) -> Self {
        let final_value = values.last().copied().unwrap_or(0.0);
        let converged = settled(&values);
        OracleEstimate { index, values, bound_kind, converged, final_value, std_error: None }
    }

    pub fn is_nondecreasing(&self, rtol: f64) -> bool {
        self.values.windows(2).all(|w| w[1] >= w[0] - rtol * w[0].abs().max(1.0))
    }

    /// Columns N_or_n,value,bound_kind,converged; `converged` is the state of
    /// the curve up to that row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("N_or_n,value,bound_kind,converged\n");
        for (k, (n, v)) in self.index.iter().zip(&self.values).enumerate() {
            let conv = settled(&self.values[..=k]);
            writeln!(out, "{n},{v:.15e},{},{conv}", self.bound_kind.as_str()).expect("writing to a String");
        }
        out
    }
}

/// Two consecutive relative changes below CONVERGENCE_RTOL.
fn settled(values: &[f64]) -> bool {
    let n = values.len();
    if n < 3 {
        return false;
    }
    let small = |x: f64, y: f64| (x - y).abs() <= CONVERGENCE_RTOL * x.abs().max(y.abs());
    small(values[n - 1], values[n - 2]) && small(values[n - 2], values[n - 3])
}

/// ||C_phi restricted to polynomials of degree <= N|| for N = 0..=n_max, a
/// nondecreasing lower bound of ||C_phi||.
pub fn compression_norm_curve(phi: &PhiSeries, symbol: &AffineSymbol, n_max: usize) -> Result<OracleEstimate> {
    let op = compose_matrix(phi, symbol, n_max)?;
    Ok(curve_from(&op, n_max))
}

fn curve_from(op: &CompOpMatrix, n_max: usize) -> OracleEstimate {
    let mut values = Vec::with_capacity(n_max + 1);
    let mut last_len = usize::MAX;
    for n in 0..=n_max {
        let len = op.basis.prefix_len(n);
        let v = if len == last_len { *values.last().expect("a previous level") } else { op_norm(&op.leading(n)) };
        last_len = len;
        values.push(v);
    }
    OracleEstimate::new((0..=n_max).collect(), values, BoundKind::Lower)
}

/// Largest eigenvalue modulus of C_A on polynomials of degree <= N.
pub fn compression_spectral_radius(phi: &PhiSeries, a: &CMatrix, n_max: usize) -> Result<f64> {
    let op = compose_matrix(phi, &AffineSymbol::linear(a.clone()), n_max)?;
    let mut r = 0.0f64;
    for n in 0..=n_max {
        let blk = op.block(n);
        if blk.nrows() > 0 {
            r = eigenvalues(&blk)?.iter().map(|z| z.norm()).fold(r, f64::max);
        }
    }
    Ok(r)
}

/// Operator identity checked block by block on the degree <= N truncation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BlockCheck {
    /// M_A* = M_{A*}.
    Adjoint,
    /// |M_A| = M_{|A*|} and M_A = M_U M_{|A*|}.
    Polar,
    /// M_A^t = M_{A^t} for PSD A.
    Power { t: f64 },
    /// Delta_{s,t}(M_A) = (M_{Delta_{s,t}(A*)})*.
    Aluthge { s: f64, t: f64 },
    /// Singular values of the degree-n block against those of the n-th
    /// symmetric tensor power of A.
    FockEquiv,
}

/// Largest operator-norm residual over the degree blocks. Polynomials of
/// degree <= N are invariant whether or not C_A is bounded, so the check runs
/// for unbounded symbols too.
pub fn block_identity_check(
    check: BlockCheck,
    phi: &PhiSeries,
    a: &CMatrix,
    n_max: usize,
    tol: &Tolerances,
) -> Result<f64> {
    let m = compose_matrix(phi, &AffineSymbol::linear(a.clone()), n_max)?;
    let other = |x: CMatrix| compose_matrix(phi, &AffineSymbol::linear(x), n_max);
    let degrees: Vec<usize> = (0..=n_max).filter(|&n| !m.basis.block_range(n).is_empty()).collect();
    let mut worst = 0.0f64;
    match check {
        BlockCheck::Adjoint => {
            let r = other(a.adjoint())?;
            for &n in &degrees {
                worst = worst.max(op_norm(&(m.block(n).adjoint() - r.block(n))));
            }
        }
        BlockCheck::Polar => {
            let (u, _) = polar_decompose(a, tol)?;
            let (_, abs_star) = polar_decompose(&a.adjoint(), tol)?;
            let mu = other(u)?;
            let mp = other(abs_star)?;
            for &n in &degrees {
                let blk = m.block(n);
                let (_, abs_blk) = polar_decompose(&blk, tol)?;
                worst = worst.max(op_norm(&(abs_blk - mp.block(n))));
                worst = worst.max(op_norm(&(blk - mu.block(n) * mp.block(n))));
            }
        }
        BlockCheck::Power { t } => {
            let r = other(psd_power(a, t, tol)?)?;
            for &n in &degrees {
                worst = worst.max(op_norm(&(psd_power(&m.block(n), t, tol)? - r.block(n))));
            }
        }
        BlockCheck::Aluthge { s, t } => {
            let r = other(aluthge(&a.adjoint(), s, t, tol)?)?;
            for &n in &degrees {
                worst = worst.max(op_norm(&(aluthge(&m.block(n), s, t, tol)? - r.block(n).adjoint())));
            }
        }
        BlockCheck::FockEquiv => {
            for &n in &degrees {
                let lhs = singular_values(&m.block(n))?;
                let rhs = symmetric_tensor_singular_values(a, n)?;
                let scale = lhs.first().copied().unwrap_or(0.0).max(1.0);
                let diff = lhs.iter().zip(&rhs).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                worst = worst.max(diff / scale);
            }
        }
    }
    Ok(worst)
}

/// Largest dimension of the full tensor power the Kronecker oracle builds.
const MAX_TENSOR_DIM: usize = 1024;

/// Singular values of A^{(.)n} computed as the nonzero part of A^{(x)n} P_sym
/// on (C^d)^{(x)n}; descending, one per symmetric basis vector.
pub fn symmetric_tensor_singular_values(a: &CMatrix, n: usize) -> Result<Vec<f64>> {
    let d = a.nrows();
    let full = d.checked_pow(n as u32).filter(|&k| k <= MAX_TENSOR_DIM);
    let Some(full) = full else {
        return Err(Error::Overflow(format!("tensor power of dimension {d}^{n}")));
    };
    let mut t = CMatrix::identity(1, 1);
    for _ in 0..n {
        t = kron(&t, a);
    }
    let p = symmetrizer(d, n, full);
    let mut s = singular_values(&(t * p))?;
    s.truncate(count_of_degree(d, n));
    Ok(s)
}

/// (1/n!) sum over permutations of the tensor factors.
fn symmetrizer(d: usize, n: usize, full: usize) -> CMatrix {
    let perms = permutations(n);
    let w = 1.0 / perms.len() as f64;
    let mut p = CMatrix::zeros(full, full);
    let mut digits = vec![0usize; n];
    for idx in 0..full {
        let mut r = idx;
        for k in (0..n).rev() {
            digits[k] = r % d;
            r /= d;
        }
        for perm in &perms {
            let target = perm.iter().fold(0, |acc, &k| acc * d + digits[k]);
            p[(target, idx)] += crate::matrix_core::c(w, 0.0);
        }
    }
    p
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for rest in permutations(n - 1) {
        for pos in 0..=rest.len() {
            let mut p = rest.clone();
            p.insert(pos, n - 1);
            out.push(p);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::verdict;
    use crate::matrix_core::{c, diag_real, identity, jordan_block, vector_real};
    use crate::phi_model::{q_value, Degree};
    use crate::sample;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn compression_of_the_square_settles_at_degree_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(70);
        let a = sample::gaussian_matrix(&mut rng, 2, 2);
        let phi = PhiSeries::monomial(2).unwrap();
        let e = compression_norm_curve(&phi, &AffineSymbol::linear(a.clone()), 5).unwrap();
        let target = op_norm(&a).powi(2);
        assert_eq!(e.values[..2], [0.0, 0.0]);
        assert!(e.values[2..].iter().all(|v| (v - target).abs() < 1e-10 * target));
        assert!(e.converged && e.is_nondecreasing(1e-12));
        assert_eq!(e.bound_kind, BoundKind::Lower);
    }

    #[test]
    fn affine_compression_approaches_the_formula() {
        let s = AffineSymbol::new(diag_real(&[0.5]), vector_real(&[0.5])).unwrap();
        let e = compression_norm_curve(&PhiSeries::exp(), &s, 25).unwrap();
        let target = (1.0f64 / 6.0).exp();
        assert!((e.final_value - target).abs() < 1e-3 * target);
        assert!(e.final_value <= target * (1.0 + 1e-12));
        assert!(e.is_nondecreasing(1e-12));
        let v = verdict(&PhiSeries::exp(), &s, &tol()).unwrap();
        assert!((v.norm.value() - target).abs() < 1e-12);
    }

    #[test]
    fn identity_compression_is_one() {
        let e = compression_norm_curve(&PhiSeries::exp(), &AffineSymbol::linear(identity(2)), 6).unwrap();
        assert!(e.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn csv_rows() {
        let e = OracleEstimate::new(vec![0, 1, 2], vec![1.0, 1.0, 1.0], BoundKind::Lower);
        let csv = e.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "N_or_n,value,bound_kind,converged");
        assert!(lines[1].ends_with(",LOWER,false"));
        assert!(lines[3].ends_with(",LOWER,true"));
    }

    #[test]
    fn eigenvalue_maximum_matches_q_of_spectral_radius() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let a = sample::gaussian_matrix(&mut rng, 3, 3);
        let phi = PhiSeries::taylor(vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        let r = crate::matrix_core::spectral_radius(&a).unwrap();
        let got = compression_spectral_radius(&phi, &a, 3).unwrap();
        let want = q_value(1, Degree::Finite(3), r).unwrap().value();
        assert!((got - want).abs() < 1e-8 * want.max(1.0));
    }

    #[test]
    fn block_identity_examples() {
        let t = tol();
        let mut rng = ChaCha8Rng::seed_from_u64(72);
        let a = sample::gaussian_matrix(&mut rng, 2, 2);
        for phi in [PhiSeries::monomial(3).unwrap(), PhiSeries::taylor(vec![1.0, 2.0, 0.5]).unwrap()] {
            assert!(block_identity_check(BlockCheck::Adjoint, &phi, &a, 8, &t).unwrap() <= 1e-10);
        }
        let sq = PhiSeries::monomial(2).unwrap();
        assert!(block_identity_check(BlockCheck::Polar, &sq, &jordan_block(), 4, &t).unwrap() <= 1e-9);
        let p = block_identity_check(BlockCheck::Power { t: 0.5 }, &PhiSeries::exp(), &diag_real(&[4.0, 1.0]), 6, &t);
        assert!(p.unwrap() <= 1e-9);
        let contraction = sample::matrix_with_norm(&mut rng, 2, 0.9);
        let q = sample::psd_matrix(&mut rng, 2, 2);
        let q = &q * c(0.8 / op_norm(&q), 0.0);
        assert!(block_identity_check(BlockCheck::Polar, &PhiSeries::exp(), &contraction, 6, &t).unwrap() <= 1e-9);
        assert!(block_identity_check(BlockCheck::Power { t: 0.3 }, &PhiSeries::exp(), &q, 6, &t).unwrap() <= 1e-9);
        let al = BlockCheck::Aluthge { s: 0.5, t: 0.5 };
        assert!(block_identity_check(al, &sq, &jordan_block(), 4, &t).unwrap() <= 1e-9);
        assert!(block_identity_check(al, &PhiSeries::exp(), &contraction, 5, &t).unwrap() <= 1e-9);
    }

    #[test]
    fn fock_equivalence_against_tensor_powers() {
        let t = tol();
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        let a = sample::gaussian_matrix(&mut rng, 3, 3);
        let a = &a * c(0.9 / op_norm(&a), 0.0);
        assert!(block_identity_check(BlockCheck::FockEquiv, &PhiSeries::exp(), &a, 4, &t).unwrap() <= 1e-10);
        for n in 0..=4 {
            let sym = singular_values(&crate::fock_basis::sym_power_matrix(&a, n).unwrap()).unwrap();
            let ten = symmetric_tensor_singular_values(&a, n).unwrap();
            assert_eq!(sym.len(), ten.len());
            assert!(sym.iter().zip(&ten).all(|(x, y)| (x - y).abs() < 1e-12));
            assert!((ten[0] - op_norm(&a).powi(n as i32)).abs() < 1e-12);
        }
        assert!(symmetric_tensor_singular_values(&CMatrix::zeros(5, 5), 5).is_err());
    }
}
