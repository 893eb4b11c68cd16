//! Compression of f -> f o (A + b) on L2 of the standard Gaussian measure to
//! polynomials in the coordinates and their conjugates of bidegree <= (N, N).
//! That space is invariant, so its compression norm is a lower bound.

use std::collections::HashMap;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{BoundKind, OracleEstimate};
use crate::combinatorics::factorial_f64;
use crate::error::{Error, Result};
use crate::fock_basis::{substitution_polys, MultiIndex};
use crate::matrix_core::{c, hermitian_eigen, op_norm, singular_values, CMatrix, CVector, Tolerances};
use crate::sample;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub samples: usize,
    pub batches: usize,
    pub seed: u64,
    /// Largest accepted standard error relative to the estimate.
    pub max_rel_se: f64,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig { samples: 100_000, batches: 20, seed: 0, max_rel_se: 0.05 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum L2Mode {
    /// Exact Gram matrix from the moments of the Gaussian measure.
    Analytic,
    /// Gram matrices estimated from complex-Gaussian samples.
    MonteCarlo(McConfig),
}

/// Monomial z^p conj(z)^q, stored as the 2d-variable index (p, q).
struct Basis {
    d: usize,
    indices: Vec<MultiIndex>,
    /// Number of basis elements with max(|p|, |q|) <= n.
    level_len: Vec<usize>,
}

impl Basis {
    fn new(d: usize, n_max: usize, table: &[MultiIndex]) -> Self {
        let level = |m: &MultiIndex| {
            let p: u32 = m.0[..d].iter().sum();
            let q: u32 = m.0[d..].iter().sum();
            p.max(q) as usize
        };
        let mut indices: Vec<MultiIndex> = table.iter().filter(|m| level(m) <= n_max).cloned().collect();
        // Stable, so the graded table order survives inside a level.
        indices.sort_by_key(level);
        let level_len = (0..=n_max).map(|n| indices.iter().filter(|m| level(m) <= n).count()).collect();
        Basis { d, indices, level_len }
    }

    fn len(&self) -> usize {
        self.indices.len()
    }

    fn eval(&self, z: &CVector) -> Vec<Complex64> {
        self.indices
            .iter()
            .map(|m| {
                (0..self.d).fold(c(1.0, 0.0), |acc, i| acc * z[i].powu(m.0[i]) * z[i].conj().powu(m.0[self.d + i]))
            })
            .collect()
    }
}

/// int z^p conj(z)^q conj(z^p' conj(z)^q') dmu = prod_i [p_i + q'_i = q_i + p'_i] (p_i + q'_i)!.
fn moment(d: usize, x: &MultiIndex, y: &MultiIndex) -> f64 {
    let mut out = 1.0;
    for i in 0..d {
        let (p, q, pp, qq) = (x.0[i], x.0[d + i], y.0[i], y.0[d + i]);
        if p + qq != q + pp {
            return 0.0;
        }
        out *= factorial_f64((p + qq) as usize);
    }
    out
}

fn check_nonsingular(a: &CMatrix, tol: &Tolerances) -> Result<()> {
    let s = singular_values(a)?;
    let smax = s.first().copied().unwrap_or(0.0);
    let smin = s.last().copied().unwrap_or(0.0);
    if s.is_empty() || smin <= tol.rank_cutoff * smax.max(1.0) {
        return Err(Error::NotWellDefined);
    }
    Ok(())
}

/// Lower-bound curve of ||C~_{A+b}|| over bidegree levels 0..=n_max.
pub fn l2_gram_norm(a: &CMatrix, b: &CVector, n_max: usize, mode: L2Mode, tol: &Tolerances) -> Result<OracleEstimate> {
    crate::fock_basis::AffineSymbol::new(a.clone(), b.clone())?;
    check_nonsingular(a, tol)?;
    let d = a.nrows();
    match mode {
        L2Mode::Analytic => analytic(a, b, d, n_max),
        L2Mode::MonteCarlo(cfg) => monte_carlo(a, b, d, n_max, cfg),
    }
}

fn analytic(a: &CMatrix, b: &CVector, d: usize, n_max: usize) -> Result<OracleEstimate> {
    // x -> A x + b on the coordinates, y -> conj(A) y + conj(b) on their conjugates.
    let mut big = CMatrix::zeros(2 * d, 2 * d);
    big.view_mut((0, 0), (d, d)).copy_from(a);
    big.view_mut((d, d), (d, d)).copy_from(&a.map(|z| z.conj()));
    let shift = CVector::from_iterator(2 * d, b.iter().copied().chain(b.iter().map(|z| z.conj())));
    let (table, polys) = substitution_polys(&big, &shift, 2 * n_max)?;
    let basis = Basis::new(d, n_max, &table);
    let pos: HashMap<&MultiIndex, usize> = table.iter().enumerate().map(|(i, m)| (m, i)).collect();
    let k = basis.len();
    let scale: Vec<f64> = basis.indices.iter().map(|m| moment(d, m, m).sqrt()).collect();
    // Jacobi-scaled Gram matrix and matrix of the operator.
    let g = CMatrix::from_fn(k, k, |i, j| c(moment(d, &basis.indices[i], &basis.indices[j]) / (scale[i] * scale[j]), 0.0));
    let t = CMatrix::from_fn(k, k, |i, j| polys[pos[&basis.indices[j]]][pos[&basis.indices[i]]] * (scale[i] / scale[j]));
    let values = compressed_norms(&g, &t, &basis.level_len)?;
    Ok(OracleEstimate::new((0..=n_max).collect(), values, BoundKind::Lower))
}

/// Largest condition number of the scaled moment matrix that still gives a
/// trustworthy lower bound; it grows roughly tenfold per level in one variable.
const MAX_MOMENT_CONDITION: f64 = 1e13;

/// sigma_max(L* T L^{-*}) on each leading block, G = L L*. The basis is
/// ordered by level and every level is invariant, so leading blocks of the
/// full product are the products for the smaller spaces.
fn compressed_norms(g: &CMatrix, t: &CMatrix, level_len: &[usize]) -> Result<Vec<f64>> {
    let (eig, _) = hermitian_eigen(g);
    let (lo, hi) = (eig[0], eig[eig.len() - 1]);
    if lo <= 0.0 || hi / lo > MAX_MOMENT_CONDITION {
        return Err(Error::Overflow(format!("Gaussian moment matrix condition {:.1e} exceeds {MAX_MOMENT_CONDITION:.0e}", hi / lo)));
    }
    let chol = nalgebra::Cholesky::new(g.clone()).ok_or(Error::NotPsd { min_eig: lo })?;
    let l = chol.l();
    let y = l.adjoint() * t;
    let x_adj = l.solve_lower_triangular(&y.adjoint()).ok_or(Error::NoConvergence("triangular solve"))?;
    let x = x_adj.adjoint();
    Ok(level_len.iter().map(|&n| op_norm(&x.view((0, 0), (n, n)).into_owned())).collect())
}

fn generalized_top(g: &CMatrix, h: &CMatrix) -> Result<f64> {
    let s: Vec<f64> = (0..g.nrows()).map(|i| g[(i, i)].re.sqrt()).collect();
    let gs = CMatrix::from_fn(g.nrows(), g.ncols(), |i, j| g[(i, j)] / (s[i] * s[j]));
    let hs = CMatrix::from_fn(h.nrows(), h.ncols(), |i, j| h[(i, j)] / (s[i] * s[j]));
    let chol = nalgebra::Cholesky::new(gs).ok_or(Error::NotPsd { min_eig: f64::NAN })?;
    let l = chol.l();
    let z = l.solve_lower_triangular(&hs).ok_or(Error::NoConvergence("triangular solve"))?;
    let w = l.solve_lower_triangular(&z.adjoint()).ok_or(Error::NoConvergence("triangular solve"))?;
    let (vals, _) = hermitian_eigen(&w);
    Ok(vals.last().copied().unwrap_or(0.0).max(0.0).sqrt())
}

fn monte_carlo(a: &CMatrix, b: &CVector, d: usize, n_max: usize, cfg: McConfig) -> Result<OracleEstimate> {
    let table = crate::fock_basis::indices_up_to(2 * d, 2 * n_max);
    let basis = Basis::new(d, n_max, &table);
    let k = basis.len();
    let batches = cfg.batches.max(2);
    let per = (cfg.samples / batches).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut g_all = CMatrix::zeros(k, k);
    let mut h_all = CMatrix::zeros(k, k);
    let mut estimates = Vec::with_capacity(batches);
    for _ in 0..batches {
        let mut g = CMatrix::zeros(k, k);
        let mut h = CMatrix::zeros(k, k);
        for _ in 0..per {
            let z = sample::gaussian_vector(&mut rng, d);
            // Gram entries <f_j, f_i> = E[conj(f_i) f_j].
            let f = CVector::from_vec(basis.eval(&z)).conjugate();
            let fphi = CVector::from_vec(basis.eval(&(a * &z + b))).conjugate();
            g.gerc(c(1.0, 0.0), &f, &f, c(1.0, 0.0));
            h.gerc(c(1.0, 0.0), &fphi, &fphi, c(1.0, 0.0));
        }
        // Hermitian sums of outer products; enforce exact symmetry before factoring.
        let g = (&g + g.adjoint()) * c(0.5 / per as f64, 0.0);
        let h = (&h + h.adjoint()) * c(0.5 / per as f64, 0.0);
        estimates.push(generalized_top(&g, &h)?);
        g_all += g;
        h_all += h;
    }
    let value = generalized_top(&g_all, &h_all)?;
    let mean = estimates.iter().sum::<f64>() / batches as f64;
    let var = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
    let se = (var / batches as f64).sqrt();
    if se > cfg.max_rel_se * value {
        return Err(Error::McVarianceTooHigh { rel_se: se / value, limit: cfg.max_rel_se });
    }
    let mut est = OracleEstimate::new(vec![n_max], vec![value], BoundKind::Lower);
    est.std_error = Some(se);
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::verdict_l2_gaussian;
    use crate::matrix_core::{diag_real, vector_real};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn moments_of_one_variable() {
        let m = |v: &[u32]| MultiIndex(v.to_vec());
        assert_eq!(moment(1, &m(&[2, 0]), &m(&[2, 0])), 2.0);
        assert_eq!(moment(1, &m(&[1, 1]), &m(&[0, 0])), 1.0);
        assert_eq!(moment(1, &m(&[1, 0]), &m(&[0, 0])), 0.0);
        assert_eq!(moment(1, &m(&[2, 1]), &m(&[1, 0])), 2.0);
    }

    #[test]
    fn unitary_symbol_gives_one() {
        let u = CMatrix::from_row_slice(2, 2, &[c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
        let e = l2_gram_norm(&u, &CVector::zeros(2), 3, L2Mode::Analytic, &tol()).unwrap();
        assert!(e.values.iter().all(|v| (v - 1.0).abs() < 1e-10));
    }

    #[test]
    fn contraction_curve_is_monotone_and_below_formula() {
        let a = diag_real(&[0.5]);
        let b = vector_real(&[0.0]);
        let e = l2_gram_norm(&a, &b, 8, L2Mode::Analytic, &tol()).unwrap();
        assert!(e.is_nondecreasing(1e-12));
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        let formula = verdict_l2_gaussian(&a, &b, &tol()).unwrap().norm.value();
        assert!(e.final_value <= formula * (1.0 + 1e-12));
        assert_eq!(l2_gram_norm(&diag_real(&[0.0]), &b, 2, L2Mode::Analytic, &tol()).unwrap_err().code(), "NOT_WELL_DEFINED");
        // Beyond the conditioning limit the oracle refuses instead of
        // returning values above the true norm.
        assert_eq!(l2_gram_norm(&a, &b, 20, L2Mode::Analytic, &tol()).unwrap_err().code(), "OVERFLOW");
    }

    #[test]
    fn monte_carlo_agrees_with_analytic() {
        let a = diag_real(&[0.5]);
        let b = vector_real(&[0.2]);
        let exact = l2_gram_norm(&a, &b, 1, L2Mode::Analytic, &tol()).unwrap();
        let cfg = McConfig { samples: 100_000, batches: 20, seed: 5, max_rel_se: 0.05 };
        let mc = l2_gram_norm(&a, &b, 1, L2Mode::MonteCarlo(cfg), &tol()).unwrap();
        let se = mc.std_error.unwrap();
        assert!((mc.final_value - exact.final_value).abs() <= 3.0 * se, "{} vs {} (se {se})", mc.final_value, exact.final_value);
        let tight = McConfig { samples: 200, batches: 10, seed: 5, max_rel_se: 1e-6 };
        assert_eq!(
            l2_gram_norm(&a, &b, 1, L2Mode::MonteCarlo(tight), &tol()).unwrap_err().code(),
            "MC_VARIANCE_TOO_HIGH"
        );
    }
}
