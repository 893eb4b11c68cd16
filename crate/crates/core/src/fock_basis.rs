//! Monomial orthonormal bases of polynomial truncations, kernel Gram
//! matrices, and the matrix of an affine composition operator on the
//! invariant space of polynomials of degree at most N.
//!
//! With `K_xi(eta) = Phi(<eta, xi>)` the monomials `e_alpha = c_alpha xi^alpha`,
//! `c_alpha^2 = a_|alpha| |alpha|! / alpha!`, form an orthonormal basis.
//! Basis order is graded: degree ascending, lexicographically descending
//! inside a degree, so `(1,0)` precedes `(0,1)`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::ops::Range;

use num_complex::Complex64;
use serde::Serialize;

use crate::combinatorics::{ln_factorial, ln_multinomial};
use crate::error::{Error, Result};
use crate::matrix_core::{c, json, range_membership, CMatrix, CVector, RangeExponent, Tolerances};
use crate::phi_model::PhiSeries;

/// Largest basis the dense assembly accepts.
pub const MAX_BASIS_DIM: usize = 2500;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn degree(&self) -> usize {
        self.0.iter().map(|&a| a as usize).sum()
    }

    pub fn ln_factorial(&self) -> f64 {
        self.0.iter().map(|&a| ln_factorial(a as usize)).sum()
    }

    pub fn factorial(&self) -> f64 {
        self.ln_factorial().exp()
    }

    /// xi^alpha.
    pub fn monomial(&self, xi: &CVector) -> Complex64 {
        self.0.iter().zip(xi.iter()).fold(c(1.0, 0.0), |acc, (&a, &x)| acc * x.powu(a))
    }
}

/// All multi-indices of length d and degree n, lexicographically descending.
pub fn indices_of_degree(d: usize, n: usize) -> Vec<MultiIndex> {
    fn rec(d: usize, n: usize, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if d == 1 {
            prefix.push(n as u32);
            out.push(MultiIndex(prefix.clone()));
            prefix.pop();
            return;
        }
        for first in (0..=n).rev() {
            prefix.push(first as u32);
            rec(d - 1, n - first, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(d, n, &mut Vec::with_capacity(d), &mut out);
    out
}

/// All multi-indices of degree <= n, in basis order.
pub fn indices_up_to(d: usize, n: usize) -> Vec<MultiIndex> {
    (0..=n).flat_map(|k| indices_of_degree(d, k)).collect()
}

/// C(n + d - 1, d - 1) without overflow for the sizes used here.
pub fn count_of_degree(d: usize, n: usize) -> usize {
    crate::combinatorics::binomial((n + d - 1) as u64, (d - 1) as u64).map_or(usize::MAX, |v| v as usize)
}

#[derive(Clone, Debug, Serialize)]
pub struct BasisSlice {
    pub d: usize,
    pub n_max: usize,
    /// Supported degrees present, ascending.
    pub degrees: Vec<usize>,
    pub indices: Vec<MultiIndex>,
    /// w_alpha = 1 / c_alpha.
    pub weights: Vec<f64>,
    #[serde(skip)]
    blocks: Vec<Range<usize>>,
}

impl BasisSlice {
    pub fn dim(&self) -> usize {
        self.indices.len()
    }

    /// c_alpha for position i.
    pub fn norm_const(&self, i: usize) -> f64 {
        1.0 / self.weights[i]
    }

    /// Positions of the degree-n block, empty when n is not a supported degree.
    pub fn block_range(&self, n: usize) -> Range<usize> {
        self.degrees.iter().position(|&k| k == n).map_or(0..0, |i| self.blocks[i].clone())
    }

    /// Number of leading basis elements of degree at most n.
    pub fn prefix_len(&self, n: usize) -> usize {
        self.degrees.iter().zip(&self.blocks).filter(|(k, _)| **k <= n).map(|(_, r)| r.end).max().unwrap_or(0)
    }

    /// Orthonormal basis functions evaluated at xi.
    pub fn eval(&self, xi: &CVector) -> CVector {
        CVector::from_iterator(self.dim(), self.indices.iter().enumerate().map(|(i, a)| a.monomial(xi) * self.norm_const(i)))
    }

    /// Coordinates of the projection of K_xi onto the span: conj(e_beta(xi)).
    pub fn kernel_coords(&self, xi: &CVector) -> CVector {
        self.eval(xi).map(|z| z.conj())
    }
}

/// Orthonormal monomial basis of the degree <= N part of Phi(C^d).
pub fn enumerate_basis(phi: &PhiSeries, d: usize, n_max: usize) -> Result<BasisSlice> {
    if d == 0 {
        return Err(Error::DimensionMismatch("dimension must be at least 1".into()));
    }
    let degrees = phi.support_up_to(n_max)?;
    let total: usize = degrees.iter().map(|&n| count_of_degree(d, n)).fold(0usize, |a, b| a.saturating_add(b));
    if total > MAX_BASIS_DIM {
        return Err(Error::Overflow(format!("basis dimension {total} exceeds {MAX_BASIS_DIM}")));
    }
    let mut indices = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    let mut blocks = Vec::with_capacity(degrees.len());
    for &n in &degrees {
        let a_n = phi.coeff(n)?;
        let start = indices.len();
        for alpha in indices_of_degree(d, n) {
            let ln_c2 = a_n.ln() + ln_multinomial(&alpha.0);
            weights.push((-0.5 * ln_c2).exp());
            indices.push(alpha);
        }
        blocks.push(start..indices.len());
    }
    if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::Overflow("basis weight out of floating range".into()));
    }
    Ok(BasisSlice { d, n_max, degrees, indices, weights, blocks })
}

/// G_ij = Phi(<xi_i, xi_j>).
pub fn kernel_gram(phi: &PhiSeries, points: &[CVector]) -> Result<CMatrix> {
    let n = points.len();
    let mut g = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let ip = points[j].dotc(&points[i]);
            let v = phi.eval_complex(ip)?;
            g[(i, j)] = v;
            g[(j, i)] = v.conj();
        }
    }
    Ok(g)
}

/// Relative size of the component of the data outside ran(G) that is still
/// treated as numerical noise.
const INTERPOLATION_SLACK: f64 = 1e-6;

/// v* G^- v: the least squared norm of a function in the space taking the given
/// values at the points, or infinity when no such function exists.
pub fn rkhs_lower_bound(phi: &PhiSeries, points: &[CVector], values: &[Complex64]) -> Result<f64> {
    if points.len() != values.len() {
        return Err(Error::SizeMismatch(format!("{} points vs {} values", points.len(), values.len())));
    }
    if values.iter().all(|v| *v == c(0.0, 0.0)) {
        return Ok(0.0);
    }
    let g = kernel_gram(phi, points)?;
    let v = CVector::from_column_slice(values);
    let tol = Tolerances { residual: INTERPOLATION_SLACK, ..Tolerances::default() };
    let m = range_membership(&g, &v, RangeExponent::One, &tol)?;
    Ok(match m.preimage {
        Some(w) => v.dotc(&w).re.max(0.0),
        None => f64::INFINITY,
    })
}

/// Dense polynomial in d variables of degree <= N, indexed by the full graded table.
struct MonomialTable {
    indices: Vec<MultiIndex>,
    /// successor[pos * d + j] = position of index + e_j, if its degree stays <= N.
    successor: Vec<Option<usize>>,
    degree_start: Vec<usize>,
    d: usize,
}

impl MonomialTable {
    fn new(d: usize, n_max: usize) -> Result<Self> {
        let total: usize = (0..=n_max).map(|n| count_of_degree(d, n)).fold(0usize, |a, b| a.saturating_add(b));
        if total > MAX_BASIS_DIM {
            return Err(Error::Overflow(format!("monomial table of size {total} exceeds {MAX_BASIS_DIM}")));
        }
        let mut indices = Vec::with_capacity(total);
        let mut degree_start = Vec::with_capacity(n_max + 2);
        for n in 0..=n_max {
            degree_start.push(indices.len());
            indices.extend(indices_of_degree(d, n));
        }
        degree_start.push(indices.len());
        let position: HashMap<&MultiIndex, usize> = indices.iter().enumerate().map(|(i, a)| (a, i)).collect();
        let mut successor = vec![None; total * d];
        for (pos, alpha) in indices.iter().enumerate() {
            if alpha.degree() == n_max {
                continue;
            }
            for j in 0..d {
                let mut next = alpha.clone();
                next.0[j] += 1;
                successor[pos * d + j] = Some(position[&next]);
            }
        }
        Ok(MonomialTable { indices, successor, degree_start, d })
    }

    fn len(&self) -> usize {
        self.indices.len()
    }

    /// p * (sum_j row_j xi_j + shift), p of degree < N.
    fn times_affine(&self, p: &[Complex64], row: &[Complex64], shift: Complex64) -> Vec<Complex64> {
        let mut out = vec![c(0.0, 0.0); self.len()];
        for (pos, &coef) in p.iter().enumerate() {
            if coef == c(0.0, 0.0) {
                continue;
            }
            out[pos] += coef * shift;
            for (j, &r) in row.iter().enumerate().take(self.d) {
                if r != c(0.0, 0.0) {
                    let next = self.successor[pos * self.d + j].expect("degree stays within the table");
                    out[next] += coef * r;
                }
            }
        }
        out
    }

    /// Coefficients of (A xi + b)^alpha for every alpha of degree <= N.
    fn substitution_powers(&self, a: &CMatrix, b: &CVector) -> Vec<Vec<Complex64>> {
        let rows: Vec<Vec<Complex64>> = (0..self.d).map(|i| a.row(i).iter().copied().collect()).collect();
        let mut polys: Vec<Vec<Complex64>> = Vec::with_capacity(self.len());
        let mut one = vec![c(0.0, 0.0); self.len()];
        one[0] = c(1.0, 0.0);
        polys.push(one);
        let position: HashMap<&MultiIndex, usize> = self.indices.iter().enumerate().map(|(i, a)| (a, i)).collect();
        for pos in 1..self.len() {
            let alpha = &self.indices[pos];
            let i = alpha.0.iter().position(|&k| k > 0).expect("nonzero index");
            let mut prev = alpha.clone();
            prev.0[i] -= 1;
            let p = &polys[position[&prev]];
            let next = self.times_affine(p, &rows[i], b[i]);
            polys.push(next);
        }
        polys
    }
}

/// Every multi-index of degree <= N in graded order, with the coefficients of
/// (A xi + b)^alpha in that same list.
pub(crate) fn substitution_polys(
    a: &CMatrix,
    b: &CVector,
    n_max: usize,
) -> Result<(Vec<MultiIndex>, Vec<Vec<Complex64>>)> {
    let table = MonomialTable::new(a.nrows(), n_max)?;
    let polys = table.substitution_powers(a, b);
    Ok((table.indices, polys))
}

/// A = linear part, b = translation; phi(xi) = A xi + b.
#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct AffineSymbol {
    #[serde(with = "json::matrix")]
    pub a: CMatrix,
    #[serde(with = "json::vector")]
    pub b: CVector,
}

impl AffineSymbol {
    pub fn new(a: CMatrix, b: CVector) -> Result<Self> {
        let s = AffineSymbol { a, b };
        s.validate()?;
        Ok(s)
    }

    pub fn linear(a: CMatrix) -> Self {
        let d = a.nrows();
        AffineSymbol { a, b: CVector::zeros(d) }
    }

    pub fn validate(&self) -> Result<()> {
        let (r, k) = self.a.shape();
        if r != k || self.b.len() != r {
            return Err(Error::DimensionMismatch(format!("A is {r}x{k}, b has length {}", self.b.len())));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn is_linear(&self) -> bool {
        self.b.iter().all(|z| *z == c(0.0, 0.0))
    }

    pub fn apply(&self, xi: &CVector) -> CVector {
        &self.a * xi + &self.b
    }
}

/// Matrix of C_phi on the degree <= N truncation, in the orthonormal basis.
#[derive(Clone, Debug)]
pub struct CompOpMatrix {
    pub basis: BasisSlice,
    pub matrix: CMatrix,
}

impl CompOpMatrix {
    /// Diagonal block of degree n.
    pub fn block(&self, n: usize) -> CMatrix {
        let r = self.basis.block_range(n);
        self.matrix.view((r.start, r.start), (r.len(), r.len())).into_owned()
    }

    /// Restriction to polynomials of degree <= n (a leading principal block).
    pub fn leading(&self, n: usize) -> CMatrix {
        let k = self.basis.prefix_len(n);
        self.matrix.view((0, 0), (k, k)).into_owned()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "basis": self.basis.indices.iter().map(|a| a.0.clone()).collect::<Vec<_>>(),
            "weights": self.basis.weights,
            "matrix": json::matrix_to_rows(&self.matrix),
        })
    }

    /// Flat listing with columns row,col,re,im.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("row,col,re,im\n");
        for i in 0..self.matrix.nrows() {
            for j in 0..self.matrix.ncols() {
                let z = self.matrix[(i, j)];
                writeln!(out, "{i},{j},{:e},{:e}", z.re, z.im).expect("writing to a String");
            }
        }
        out
    }
}

/// M_{beta alpha} = <e_alpha o (A + b), e_beta>, by exact expansion of (A xi + b)^alpha.
/// Translations are accepted only for the exponential series.
pub fn compose_matrix(phi: &PhiSeries, symbol: &AffineSymbol, n_max: usize) -> Result<CompOpMatrix> {
    symbol.validate()?;
    if !symbol.is_linear() && !phi.is_exp() {
        return Err(Error::AffineUnsupportedForPhi);
    }
    let d = symbol.dim();
    let basis = enumerate_basis(phi, d, n_max)?;
    let table = MonomialTable::new(d, n_max)?;
    let polys = table.substitution_powers(&symbol.a, &symbol.b);
    // Position of each basis element in the full table.
    let full: Vec<usize> = basis
        .indices
        .iter()
        .map(|a| {
            let n = a.degree();
            let start = table.degree_start[n];
            start + table.indices[start..table.degree_start[n + 1]].iter().position(|x| x == a).expect("in table")
        })
        .collect();
    let dim = basis.dim();
    let mut m = CMatrix::zeros(dim, dim);
    for col in 0..dim {
        let p = &polys[full[col]];
        let c_alpha = basis.norm_const(col);
        for row in 0..dim {
            let coef = p[full[row]];
            if coef != c(0.0, 0.0) {
                m[(row, col)] = coef * (c_alpha * basis.weights[row]);
            }
        }
    }
    Ok(CompOpMatrix { basis, matrix: m })
}

/// Degree-n block of C over z^n with symbol A^T: a unitary copy of the n-th
/// symmetric tensor power of A in the orthonormal homogeneous basis.
pub fn sym_power_matrix(a: &CMatrix, n: usize) -> Result<CMatrix> {
    if n == 0 {
        return Ok(CMatrix::identity(1, 1));
    }
    let phi = PhiSeries::monomial(n)?;
    Ok(compose_matrix(&phi, &AffineSymbol::linear(a.transpose()), n)?.block(n))
}

/// Largest coordinate deviation between M applied to the projected kernel at xi
/// and the projected closed form e^{<b, xi>} K_{A* xi}.
pub fn kernel_image_check(phi: &PhiSeries, symbol: &AffineSymbol, points: &[CVector], n_max: usize) -> Result<f64> {
    let op = compose_matrix(phi, symbol, n_max)?;
    let a_adj = symbol.a.adjoint();
    let mut worst = 0.0f64;
    for xi in points {
        let lhs = &op.matrix * op.basis.kernel_coords(xi);
        let factor = xi.dotc(&symbol.b).exp();
        let rhs = op.basis.kernel_coords(&(&a_adj * xi)) * factor;
        worst = worst.max((lhs - rhs).camax());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix_core::{diag_real, eigenvalues, hausdorff, min_eigenvalue, op_norm, singular_values};
    use crate::sample;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn basis_examples() {
        let b = enumerate_basis(&PhiSeries::exp(), 2, 1).unwrap();
        let idx: Vec<Vec<u32>> = b.indices.iter().map(|a| a.0.clone()).collect();
        assert_eq!(idx, vec![vec![0, 0], vec![1, 0], vec![0, 1]]);
        let b = enumerate_basis(&PhiSeries::monomial(2).unwrap(), 2, 3).unwrap();
        assert_eq!(b.dim(), 3);
        assert!(b.indices.iter().all(|a| a.degree() == 2));
        assert_eq!(enumerate_basis(&PhiSeries::exp(), 3, 4).unwrap().dim(), 35);
    }

    #[test]
    fn exp_weights_in_one_variable_are_factorials() {
        let b = enumerate_basis(&PhiSeries::exp(), 1, 10).unwrap();
        for (k, w) in b.weights.iter().enumerate() {
            assert!((w * w / crate::combinatorics::factorial_f64(k) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn reproducing_property_on_truncation() {
        // sum_alpha e_alpha(eta) conj(e_alpha(xi)) -> Phi(<eta, xi>).
        let phi = PhiSeries::exp();
        let b = enumerate_basis(&phi, 2, 30).unwrap();
        let xi = CVector::from_vec(vec![c(0.3, 0.1), c(-0.2, 0.4)]);
        let eta = CVector::from_vec(vec![c(0.5, -0.3), c(0.1, 0.2)]);
        let s = b.eval(&eta).dotc(&b.eval(&xi)).conj();
        let direct = phi.eval_complex(xi.dotc(&eta)).unwrap();
        assert!((s - direct).norm() < 1e-13);
    }

    #[test]
    fn gram_examples() {
        let exp = PhiSeries::exp();
        let g = kernel_gram(&exp, &[CVector::zeros(2)]).unwrap();
        assert_eq!(g[(0, 0)], c(1.0, 0.0));
        let e1 = crate::matrix_core::vector_real(&[1.0, 0.0]);
        let e2 = crate::matrix_core::vector_real(&[0.0, 1.0]);
        let g = kernel_gram(&exp, &[e1, e2]).unwrap();
        let e = std::f64::consts::E;
        assert!((g[(0, 0)].re - e).abs() < 1e-14 && (g[(0, 1)] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn gram_is_psd_for_builtin_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let phis = [PhiSeries::exp(), PhiSeries::monomial(2).unwrap(), PhiSeries::cosh(), PhiSeries::z_exp()];
        for k in 0..100 {
            let phi = &phis[k % phis.len()];
            let d = 1 + k % 3;
            let pts: Vec<CVector> = (0..6).map(|_| sample::gaussian_vector(&mut rng, d)).collect();
            let g = kernel_gram(phi, &pts).unwrap();
            let scale = crate::matrix_core::op_norm(&g).max(1.0);
            assert!(min_eigenvalue(&g) >= -1e-9 * scale);
            if phi.label() == "z^2" {
                for i in 0..pts.len() {
                    for j in 0..pts.len() {
                        let ip = pts[j].dotc(&pts[i]);
                        assert!((g[(i, j)] - ip * ip).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn rkhs_bound_examples() {
        let exp = PhiSeries::exp();
        let pts = vec![crate::matrix_core::vector_real(&[0.3]), crate::matrix_core::vector_real(&[-0.6])];
        assert_eq!(rkhs_lower_bound(&exp, &pts, &[c(0.0, 0.0); 2]).unwrap(), 0.0);
        // f = K_eta sampled at eta alone: v^2 / Phi(|eta|^2) = Phi(|eta|^2).
        let eta = CVector::from_vec(vec![c(0.4, 0.2), c(-0.1, 0.3)]);
        let k = exp.eval(eta.norm_squared()).unwrap().value;
        let lb = rkhs_lower_bound(&exp, std::slice::from_ref(&eta), &[c(k, 0.0)]).unwrap();
        assert!((lb - k).abs() < 1e-12);
        // More points never exceed the true norm.
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut pts: Vec<CVector> = (0..5).map(|_| sample::gaussian_vector(&mut rng, 2)).collect();
        pts.push(eta.clone());
        let vals: Vec<Complex64> = pts.iter().map(|p| exp.eval_complex(eta.dotc(p)).unwrap()).collect();
        let lb = rkhs_lower_bound(&exp, &pts, &vals).unwrap();
        assert!(lb <= k * (1.0 + 1e-9) && lb >= k * (1.0 - 1e-9));
        // Contradictory values at a repeated point admit no interpolant.
        let p = crate::matrix_core::vector_real(&[0.5]);
        assert!(rkhs_lower_bound(&exp, &[p.clone(), p], &[c(1.0, 0.0), c(2.0, 0.0)]).unwrap().is_infinite());
    }

    #[test]
    fn compose_examples() {
        let exp = PhiSeries::exp();
        let id = compose_matrix(&exp, &AffineSymbol::linear(CMatrix::identity(2, 2)), 4).unwrap();
        assert!(op_norm(&(&id.matrix - CMatrix::identity(id.basis.dim(), id.basis.dim()))) < 1e-14);
        let half = compose_matrix(&exp, &AffineSymbol::linear(diag_real(&[0.5])), 3).unwrap();
        assert!((half.block(1)[(0, 0)] - c(0.5, 0.0)).norm() < 1e-15);
        let z2 = PhiSeries::monomial(2).unwrap();
        let sym = AffineSymbol::new(diag_real(&[0.5]), crate::matrix_core::vector_real(&[0.1])).unwrap();
        assert_eq!(compose_matrix(&z2, &sym, 3).unwrap_err().code(), "AFFINE_UNSUPPORTED_FOR_PHI");
    }

    #[test]
    fn translation_column_of_constant_tends_to_shifted_norm() {
        // A = 0, b = a: C 1 = 1 and C e_k = e_k(a) 1; the norm of the column of e_0
        // under the adjoint picture is the row norm sum_k |e_k(a)|^2 -> e^{|a|^2}.
        let a = 0.7;
        let sym = AffineSymbol::new(diag_real(&[0.0]), crate::matrix_core::vector_real(&[a])).unwrap();
        let m = compose_matrix(&PhiSeries::exp(), &sym, 40).unwrap();
        let norm = op_norm(&m.matrix);
        assert!((norm - (a * a / 2.0).exp()).abs() < 1e-12);
    }

    #[test]
    fn affine_block_structure() {
        let exp = PhiSeries::exp();
        let sym = AffineSymbol::new(diag_real(&[0.5, 0.2]), crate::matrix_core::vector_real(&[0.3, -0.1])).unwrap();
        let m = compose_matrix(&exp, &sym, 4).unwrap();
        for (col, a) in m.basis.indices.iter().enumerate() {
            for (row, b) in m.basis.indices.iter().enumerate() {
                if b.degree() > a.degree() {
                    assert_eq!(m.matrix[(row, col)], c(0.0, 0.0));
                }
            }
        }
        let lin = compose_matrix(&exp, &AffineSymbol::linear(sym.a.clone()), 4).unwrap();
        for (col, a) in lin.basis.indices.iter().enumerate() {
            for (row, b) in lin.basis.indices.iter().enumerate() {
                if b.degree() != a.degree() {
                    assert_eq!(lin.matrix[(row, col)], c(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn sym_power_examples() {
        assert_eq!(sym_power_matrix(&diag_real(&[2.0, 3.0]), 0).unwrap(), CMatrix::identity(1, 1));
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let a = sample::gaussian_matrix(&mut rng, 3, 3);
        let s1 = sym_power_matrix(&a, 1).unwrap();
        assert!(op_norm(&(&s1 - &a)) < 1e-13);
        let s2 = sym_power_matrix(&diag_real(&[2.0, 3.0]), 2).unwrap();
        let mut d: Vec<f64> = (0..3).map(|i| s2[(i, i)].re).collect();
        d.sort_by(f64::total_cmp);
        assert_eq!(d, vec![4.0, 6.0, 9.0]);
        assert!(op_norm(&(s2.clone() - CMatrix::from_diagonal(&s2.diagonal()))) < 1e-14);
    }

    #[test]
    fn sym_power_norm_and_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for k in 0..30 {
            let d = 1 + k % 3;
            let n = 1 + k % 5;
            let a = sample::gaussian_matrix(&mut rng, d, d);
            let s = sym_power_matrix(&a, n).unwrap();
            assert!((op_norm(&s) / op_norm(&a).powi(n as i32) - 1.0).abs() < 1e-8);
            let ev = eigenvalues(&a).unwrap();
            let products: Vec<Complex64> = indices_of_degree(d, n)
                .iter()
                .map(|alpha| alpha.0.iter().zip(&ev).fold(c(1.0, 0.0), |acc, (&p, &z)| acc * z.powu(p)))
                .collect();
            assert!(hausdorff(&eigenvalues(&s).unwrap(), &products) < 1e-7);
        }
    }

    #[test]
    fn adjoint_symbol_gives_adjoint_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for phi in [PhiSeries::exp(), PhiSeries::cosh(), PhiSeries::monomial(3).unwrap()] {
            let a = sample::gaussian_matrix(&mut rng, 2, 2);
            let m = compose_matrix(&phi, &AffineSymbol::linear(a.clone()), 6).unwrap();
            let ma = compose_matrix(&phi, &AffineSymbol::linear(a.adjoint()), 6).unwrap();
            assert!((m.matrix.adjoint() - ma.matrix).camax() < 1e-10);
        }
    }

    #[test]
    fn composition_reverses_products() {
        // C_X C_Y = C_{YX}.
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let x = sample::gaussian_matrix(&mut rng, 2, 2);
        let y = sample::gaussian_matrix(&mut rng, 2, 2);
        let phi = PhiSeries::exp();
        let mx = compose_matrix(&phi, &AffineSymbol::linear(x.clone()), 5).unwrap().matrix;
        let my = compose_matrix(&phi, &AffineSymbol::linear(y.clone()), 5).unwrap().matrix;
        let myx = compose_matrix(&phi, &AffineSymbol::linear(&y * &x), 5).unwrap().matrix;
        assert!((mx * my - myx).camax() < 1e-10);
    }

    #[test]
    fn fock_block_singular_values_match_sym_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let a = sample::gaussian_matrix(&mut rng, 3, 3);
        let m = compose_matrix(&PhiSeries::exp(), &AffineSymbol::linear(a.clone()), 4).unwrap();
        for n in 0..=4 {
            let s1 = singular_values(&m.block(n)).unwrap();
            let s2 = singular_values(&sym_power_matrix(&a, n).unwrap()).unwrap();
            for (x, y) in s1.iter().zip(&s2) {
                assert!((x - y).abs() < 1e-8 * y.max(1.0));
            }
        }
    }

    #[test]
    fn kernel_image_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let pts: Vec<CVector> = (0..6).map(|_| sample::vector_with_norm(&mut rng, 1, 1.0)).collect();
        let exp = PhiSeries::exp();
        assert!(kernel_image_check(&exp, &AffineSymbol::linear(CMatrix::identity(1, 1)), &pts, 6).unwrap() < 1e-14);
        let sym = AffineSymbol::new(diag_real(&[0.5]), crate::matrix_core::vector_real(&[0.5])).unwrap();
        assert!(kernel_image_check(&exp, &sym, &pts, 20).unwrap() <= 1e-8);
        let z2 = PhiSeries::monomial(2).unwrap();
        let pts2: Vec<CVector> = (0..6).map(|_| sample::gaussian_vector(&mut rng, 2)).collect();
        let a = sample::gaussian_matrix(&mut rng, 2, 2);
        assert!(kernel_image_check(&z2, &AffineSymbol::linear(a), &pts2, 2).unwrap() <= 1e-12);
    }

    #[test]
    fn export_formats() {
        let m = compose_matrix(&PhiSeries::exp(), &AffineSymbol::linear(diag_real(&[0.5])), 2).unwrap();
        let j = m.to_json();
        assert_eq!(j["basis"].as_array().unwrap().len(), 3);
        let csv = m.to_csv();
        assert!(csv.starts_with("row,col,re,im\n"));
        assert_eq!(csv.lines().count(), 1 + 9);
    }
}
