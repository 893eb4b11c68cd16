//! Dense complex linear algebra on nalgebra matrices: spectra, SVD, polar
//! decomposition, PSD calculus, generalized inverses, Loewner order and
//! operator-class predicates.
//!
//! Every rank decision goes through one relative singular-value cutoff
//! ([`Tolerances::rank_cutoff`]), so kernels and ranges are consistent across
//! the helpers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phi_model::ExtReal;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;


#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Relative singular-value cutoff for rank decisions.
    pub rank_cutoff: f64,
    /// Absolute operator-norm residual for identity-type predicates.
    pub residual: f64,
    /// Smallest eigenvalue still accepted as nonnegative.
    pub loewner: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rank_cutoff: 1e-10, residual: 1e-9, loewner: 1e-9 }
    }
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> CMatrix {
    CMatrix::from_row_iterator(rows, cols, data.iter().map(|&x| c(x, 0.0)))
}

pub fn diag_real(d: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(d.len(), d.iter().map(|&x| c(x, 0.0))))
}

pub fn vector_real(v: &[f64]) -> CVector {
    CVector::from_iterator(v.len(), v.iter().map(|&x| c(x, 0.0)))
}

/// 2x2 nilpotent Jordan block.
pub fn jordan_block() -> CMatrix {
    from_real(2, 2, &[0.0, 1.0, 0.0, 0.0])
}

pub fn is_square(a: &CMatrix) -> bool {
    a.nrows() == a.ncols()
}

fn require_square(a: &CMatrix, what: &str) -> Result<()> {
    if is_square(a) {
        Ok(())
    } else {
        Err(Error::SizeMismatch(format!("{what} must be square, got {}x{}", a.nrows(), a.ncols())))
    }
}

fn require_same_size(a: &CMatrix, b: &CMatrix) -> Result<()> {
    if a.shape() == b.shape() {
        Ok(())
    } else {
        Err(Error::SizeMismatch(format!("{:?} vs {:?}", a.shape(), b.shape())))
    }
}

#[derive(Clone, Debug)]
pub struct Svd {
    pub u: CMatrix,
    /// Descending; ties keep the original index order.
    pub s: Vec<f64>,
    pub v: CMatrix,
}

impl Svd {
    pub fn rank(&self, tol: &Tolerances) -> usize {
        let cut = tol.rank_cutoff * self.s.first().copied().unwrap_or(0.0);
        self.s.iter().filter(|&&x| x > cut && x > 0.0).count()
    }
}

fn to_faer(a: &CMatrix) -> faer::Mat<faer::c64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| {
        let z = a[(i, j)];
        faer::c64::new(z.re, z.im)
    })
}

fn from_faer(m: faer::MatRef<'_, faer::c64>) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        let z = m[(i, j)];
        c(z.re, z.im)
    })
}

/// A = U diag(s) V*, thin. nalgebra's complex SVD returns wrong singular
/// vectors when a singular value is exactly zero, so this goes through faer.
pub fn svd(a: &CMatrix) -> Result<Svd> {
    let (r, k) = (a.nrows(), a.ncols());
    if r == 0 || k == 0 {
        return Ok(Svd { u: CMatrix::zeros(r, 0), s: vec![], v: CMatrix::zeros(k, 0) });
    }
    let dec = to_faer(a).thin_svd().map_err(|_| Error::NoConvergence("singular value decomposition"))?;
    let s = dec.S().column_vector().iter().map(|z| z.re).collect();
    Ok(Svd { u: from_faer(dec.U()), s, v: from_faer(dec.V()) })
}

pub fn singular_values(a: &CMatrix) -> Result<Vec<f64>> {
    if a.is_empty() {
        return Ok(vec![]);
    }
    to_faer(a).singular_values().map_err(|_| Error::NoConvergence("singular values"))
}

/// Spectral norm (largest singular value).
pub fn op_norm(a: &CMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    singular_values(a).map_or(f64::NAN, |s| s[0])
}

pub fn selfadjoint_residual(a: &CMatrix) -> f64 {
    op_norm(&(a - a.adjoint()))
}

/// Eigen-decomposition of the Hermitian part; eigenvalues ascending with matching columns.
pub fn hermitian_eigen(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = a.nrows();
    if n == 0 {
        return (vec![], CMatrix::zeros(0, 0));
    }
    let h = (a + a.adjoint()) * c(0.5, 0.0);
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]).then(i.cmp(&j)));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMatrix::from_fn(n, n, |r, col| eig.eigenvectors[(r, order[col])]);
    (vals, vecs)
}

pub fn min_eigenvalue(a: &CMatrix) -> f64 {
    hermitian_eigen(a).0.first().copied().unwrap_or(0.0)
}

/// f applied to the eigenvalues of a Hermitian matrix.
pub fn hermitian_apply(vals: &[f64], vecs: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let n = vals.len();
    let scaled = CMatrix::from_fn(n, n, |r, col| vecs[(r, col)] * f(vals[col]));
    scaled * vecs.adjoint()
}

fn check_psd(a: &CMatrix, tol: &Tolerances) -> Result<(Vec<f64>, CMatrix)> {
    require_square(a, "PSD input")?;
    let scale = op_norm(a).max(1.0);
    let residual = selfadjoint_residual(a);
    if residual > tol.residual * scale {
        return Err(Error::NotPsd { min_eig: f64::NAN });
    }
    let (vals, vecs) = hermitian_eigen(a);
    if let Some(&lo) = vals.first() {
        if lo < -tol.loewner * scale {
            return Err(Error::NotPsd { min_eig: lo });
        }
    }
    Ok((vals, vecs))
}

fn eig_cutoff(vals: &[f64], tol: &Tolerances) -> f64 {
    tol.rank_cutoff * vals.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// A^t for PSD A and t > 0 by spectral calculus.
pub fn psd_power(a: &CMatrix, t: f64, tol: &Tolerances) -> Result<CMatrix> {
    assert!(t > 0.0, "psd_power needs t > 0");
    let (vals, vecs) = check_psd(a, tol)?;
    let cut = eig_cutoff(&vals, tol);
    Ok(hermitian_apply(&vals, &vecs, |l| if l > cut { l.powf(t) } else { 0.0 }))
}

/// (A^t)^-1 in the generalized sense: inverse on ran A, zero on ker A.
pub fn psd_inverse_power(a: &CMatrix, t: f64, tol: &Tolerances) -> Result<CMatrix> {
    let (vals, vecs) = check_psd(a, tol)?;
    let cut = eig_cutoff(&vals, tol);
    Ok(hermitian_apply(&vals, &vecs, |l| if l > cut { l.powf(-t) } else { 0.0 }))
}

/// Generalized inverse of a selfadjoint matrix.
pub fn pseudo_inverse(a: &CMatrix, tol: &Tolerances) -> Result<CMatrix> {
    require_square(a, "pseudo-inverse input")?;
    let residual = selfadjoint_residual(a);
    if residual > tol.residual * op_norm(a).max(1.0) {
        return Err(Error::NotSelfadjoint { residual });
    }
    let (vals, vecs) = hermitian_eigen(a);
    let cut = eig_cutoff(&vals, tol);
    Ok(hermitian_apply(&vals, &vecs, |l| if l.abs() > cut { 1.0 / l } else { 0.0 }))
}

/// Moore-Penrose inverse of an arbitrary matrix.
pub fn pinv(a: &CMatrix, tol: &Tolerances) -> Result<CMatrix> {
    let d = svd(a)?;
    let r = d.rank(tol);
    let mut out = CMatrix::zeros(a.ncols(), a.nrows());
    for i in 0..r {
        out += d.v.column(i) * d.u.column(i).adjoint() * c(1.0 / d.s[i], 0.0);
    }
    Ok(out)
}

/// Orthogonal projection onto ran(A) for a selfadjoint A.
pub fn range_projector(a: &CMatrix, tol: &Tolerances) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(a);
    let cut = eig_cutoff(&vals, tol);
    hermitian_apply(&vals, &vecs, |l| if l.abs() > cut { 1.0 } else { 0.0 })
}

/// Orthonormal basis of ran(A) for a selfadjoint A, as columns.
pub fn range_basis(a: &CMatrix, tol: &Tolerances) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(a);
    let cut = eig_cutoff(&vals, tol);
    let cols: Vec<usize> = (0..vals.len()).filter(|&i| vals[i].abs() > cut).collect();
    CMatrix::from_fn(a.nrows(), cols.len(), |r, j| vecs[(r, cols[j])])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RangeExponent {
    One,
    Half,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Membership {
    pub member: bool,
    /// Relative residual within a factor 10 of the tolerance, either side.
    pub borderline: bool,
    pub residual: f64,
    pub preimage: Option<CVector>,
}

/// Is e in ran(B) or ran(B^{1/2}) for PSD B? The preimage is the minimal-norm one.
pub fn range_membership(b: &CMatrix, e: &CVector, exponent: RangeExponent, tol: &Tolerances) -> Result<Membership> {
    if b.nrows() != e.len() {
        return Err(Error::SizeMismatch(format!("matrix {} vs vector {}", b.nrows(), e.len())));
    }
    let (vals, vecs) = check_psd(b, tol)?;
    let lifted: Vec<f64> = match exponent {
        RangeExponent::One => vals.iter().map(|&l| l.max(0.0)).collect(),
        RangeExponent::Half => vals.iter().map(|&l| l.max(0.0).sqrt()).collect(),
    };
    // The rank decision is made on B itself, so both exponents see the same range.
    let cut = eig_cutoff(&vals, tol);
    let coords = vecs.adjoint() * e;
    let mut outside = 0.0;
    let mut pre = CVector::zeros(e.len());
    for (i, &l) in lifted.iter().enumerate() {
        if vals[i] > cut {
            pre += vecs.column(i) * (coords[i] / l);
        } else {
            outside += coords[i].norm_sqr();
        }
    }
    let scale = e.norm();
    let residual = if scale == 0.0 { 0.0 } else { outside.sqrt() / scale };
    let member = residual <= tol.residual;
    let borderline = residual >= tol.residual / 10.0 && residual <= tol.residual * 10.0;
    Ok(Membership { member, borderline, residual, preimage: member.then_some(pre) })
}

/// Least c with <B xi, xi> - 2 Re<xi, e> + c >= 0 for all xi: ||B^{-1/2} e||^2, or
/// infinity when B is not PSD or e is outside ran(B^{1/2}).
pub fn least_c(b: &CMatrix, e: &CVector, tol: &Tolerances) -> ExtReal {
    match range_membership(b, e, RangeExponent::Half, tol) {
        Ok(Membership { member: true, preimage: Some(w), .. }) => ExtReal::new(w.norm_squared()),
        _ => ExtReal::INFINITY,
    }
}

/// Whether <B xi, xi> - 2 Re<xi, e> + c >= 0 for every xi.
pub fn quad_form_bound(b: &CMatrix, e: &CVector, cst: f64, tol: &Tolerances) -> bool {
    let lc = least_c(b, e, tol);
    lc.is_finite() && cst >= lc.value() - tol.residual * (1.0 + lc.value())
}

/// A <= B in the Loewner order.
pub fn loewner_leq(a: &CMatrix, b: &CMatrix, tol: &Tolerances) -> Result<bool> {
    require_same_size(a, b)?;
    require_square(a, "Loewner operand")?;
    Ok(min_eigenvalue(&(b - a)) >= -tol.loewner)
}

/// (A <= B, B^- below A^- in the extended order) for PSD A, B.
///
/// The right-hand side asks ran(A^{1/2}) to sit inside ran(B^{1/2}) and the
/// quadratic form of A^- - B^- to be nonnegative on ran(A).
pub fn geninv_order_check(a: &CMatrix, b: &CMatrix, tol: &Tolerances) -> Result<(bool, bool)> {
    require_same_size(a, b)?;
    check_psd(a, tol)?;
    check_psd(b, tol)?;
    let lhs = loewner_leq(a, b, tol)?;
    let w = range_basis(a, tol);
    if w.ncols() == 0 {
        return Ok((lhs, true));
    }
    let pb = range_projector(b, tol);
    let leak = op_norm(&(&w - &pb * &w));
    let contained = leak <= tol.residual.sqrt();
    let ai = pseudo_inverse(a, tol)?;
    let bi = pseudo_inverse(b, tol)?;
    let form = w.adjoint() * (&ai - &bi) * &w;
    let scale = op_norm(&(w.adjoint() * &ai * &w)).max(1.0);
    let rhs = contained && min_eigenvalue(&form) >= -tol.loewner * scale;
    Ok((lhs, rhs))
}

/// Eigenvalues from a complex Schur form.
pub fn eigenvalues(a: &CMatrix) -> Result<Vec<Complex64>> {
    require_square(a, "eigenvalue input")?;
    let n = a.nrows();
    if n == 0 {
        return Ok(vec![]);
    }
    if n == 1 {
        return Ok(vec![a[(0, 0)]]);
    }
    let schur = nalgebra::Schur::try_new(a.clone(), f64::EPSILON, 100_000 * n)
        .ok_or(Error::NoConvergence("Schur iteration"))?;
    let (_, t) = schur.unpack();
    Ok((0..n).map(|i| t[(i, i)]).collect())
}

pub fn spectral_radius(a: &CMatrix) -> Result<f64> {
    Ok(eigenvalues(a)?.iter().fold(0.0f64, |m, z| m.max(z.norm())))
}

/// ||A^(2^k)||^(1/2^k) by repeated squaring with rescaling.
pub fn gelfand_radius(a: &CMatrix, squarings: u32) -> f64 {
    let mut m = a.clone();
    let mut log_scale = 0.0f64;
    for _ in 0..squarings {
        let nrm = op_norm(&m);
        if nrm == 0.0 {
            return 0.0;
        }
        m /= c(nrm, 0.0);
        log_scale = 2.0 * (log_scale + nrm.ln());
        m = &m * &m;
    }
    let nrm = op_norm(&m);
    if nrm == 0.0 {
        return 0.0;
    }
    ((log_scale + nrm.ln()) / 2f64.powi(squarings as i32)).exp()
}

/// A = U P with P = (A*A)^{1/2} and U a partial isometry with ker U = ker A.
pub fn polar_decompose(a: &CMatrix, tol: &Tolerances) -> Result<(CMatrix, CMatrix)> {
    require_square(a, "polar input")?;
    let d = svd(a)?;
    let n = a.nrows();
    let r = d.rank(tol);
    let mut u = CMatrix::zeros(n, n);
    let mut p = CMatrix::zeros(n, n);
    for i in 0..d.s.len() {
        let vi = d.v.column(i);
        p += vi * vi.adjoint() * c(d.s[i], 0.0);
        if i < r {
            u += d.u.column(i) * vi.adjoint();
        }
    }
    Ok((u, p))
}

/// |A| = (A*A)^{1/2}.
pub fn abs(a: &CMatrix, tol: &Tolerances) -> Result<CMatrix> {
    Ok(polar_decompose(a, tol)?.1)
}

/// |A^*| = (AA*)^{1/2}.
pub fn abs_adjoint(a: &CMatrix, tol: &Tolerances) -> Result<CMatrix> {
    Ok(polar_decompose(&a.adjoint(), tol)?.1)
}

/// (s,t)-Aluthge transform |A|^s U |A|^t.
pub fn aluthge(a: &CMatrix, s: f64, t: f64, tol: &Tolerances) -> Result<CMatrix> {
    let (u, p) = polar_decompose(a, tol)?;
    let ps = psd_power(&p, s, tol)?;
    let pt = psd_power(&p, t, tol)?;
    Ok(ps * u * pt)
}

/// Entrywise conjugate: the conjugation fixing the standard basis applied on both sides.
pub fn conjugate_reflect(a: &CMatrix) -> CMatrix {
    a.map(|z| z.conj())
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Flag {
    pub holds: bool,
    /// Signed margin: nonnegative (up to tolerance) when the property holds.
    pub margin: f64,
}

impl Flag {
    fn from_residual(residual: f64, tol: f64) -> Flag {
        Flag { holds: residual <= tol, margin: -residual }
    }

    fn from_min_eig(min_eig: f64, tol: f64) -> Flag {
        Flag { holds: min_eig >= -tol, margin: min_eig }
    }

    fn and(self, other: Flag) -> Flag {
        Flag { holds: self.holds && other.holds, margin: self.margin.min(other.margin) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassFlags {
    pub positive: Flag,
    pub selfadjoint: Flag,
    pub normal: Flag,
    pub hyponormal: Flag,
    pub cohyponormal: Flag,
    pub isometry: Flag,
    pub coisometry: Flag,
    pub unitary: Flag,
    pub partial_isometry: Flag,
    pub orthogonal_projection: Flag,
    pub normaloid: Flag,
    pub paranormal: Flag,
}

/// Operator-class predicates by residual norms and eigenvalue margins.
/// Tolerances are scaled by the natural power of ||A|| for each expression;
/// predicates that are invariant under A -> tA get no absolute floor.
pub fn classify_matrix(a: &CMatrix, tol: &Tolerances) -> Result<ClassFlags> {
    require_square(a, "classified matrix")?;
    let n = a.nrows();
    let ah = a.adjoint();
    let nrm = op_norm(a);
    let h1 = tol.residual * nrm;
    let h2 = tol.residual * nrm * nrm;
    let s2 = tol.residual * nrm.powi(2).max(1.0);
    let s3 = tol.residual * nrm.powi(3).max(1.0);
    let id = identity(n);
    let ata = &ah * a;
    let aat = a * &ah;

    let selfadjoint = Flag::from_residual(op_norm(&(a - &ah)), h1);
    let positive = selfadjoint.and(Flag::from_min_eig(min_eigenvalue(a), tol.loewner * nrm));
    let hyponormal = Flag::from_min_eig(min_eigenvalue(&(&ata - &aat)), h2);
    let cohyponormal = Flag::from_min_eig(min_eigenvalue(&(&aat - &ata)), h2);
    let normal = hyponormal.and(cohyponormal);
    let isometry = Flag::from_residual(op_norm(&(&ata - &id)), s2);
    let coisometry = Flag::from_residual(op_norm(&(&aat - &id)), s2);
    let unitary = isometry.and(coisometry);
    let partial_isometry = Flag::from_residual(op_norm(&(&aat * a - a)), s3);
    let orthogonal_projection = selfadjoint.and(Flag::from_residual(op_norm(&(a * a - a)), s2));
    let r = spectral_radius(a)?;
    let normaloid = Flag::from_residual((r - nrm).abs(), tol.residual.sqrt() * nrm);
    let paranormal = paranormal_flag(a, tol)?;
    Ok(ClassFlags {
        positive,
        selfadjoint,
        normal,
        hyponormal,
        cohyponormal,
        isometry,
        coisometry,
        unitary,
        partial_isometry,
        orthogonal_projection,
        normaloid,
        paranormal,
    })
}

fn paranormal_form(a2h_a2: &CMatrix, ata: &CMatrix, lambda: f64) -> f64 {
    let n = ata.nrows();
    let m = a2h_a2 - ata * c(2.0 * lambda, 0.0) + identity(n) * c(lambda * lambda, 0.0);
    min_eigenvalue(&m)
}

/// Minimum over lambda > 0 of the smallest eigenvalue of A*^2 A^2 - 2 lambda A*A + lambda^2 I.
///
/// A vector f is violated only at lambda = ||Af||^2/||f||^2, so the scan covers
/// [sigma_min^2, sigma_max^2] on a log grid and refines the best cell by
/// golden-section search.
pub fn paranormal_margin(a: &CMatrix) -> Result<f64> {
    let s = singular_values(a)?;
    let smax = s.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return Ok(0.0);
    }
    let smin = s.last().copied().unwrap_or(0.0);
    let hi = smax * smax;
    let lo = (smin * smin).max(hi * 1e-8);
    let a2 = a * a;
    let a2h_a2 = a2.adjoint() * &a2;
    let ata = a.adjoint() * a;
    let f = |l: f64| paranormal_form(&a2h_a2, &ata, l);
    const GRID: usize = 64;
    let grid: Vec<f64> = if hi > lo {
        (0..=GRID).map(|i| lo * (hi / lo).powf(i as f64 / GRID as f64)).collect()
    } else {
        vec![lo]
    };
    let vals: Vec<f64> = grid.iter().map(|&l| f(l)).collect();
    let (best, &best_val) = vals.iter().enumerate().min_by(|x, y| x.1.total_cmp(y.1)).unwrap();
    if grid.len() == 1 {
        return Ok(best_val);
    }
    let (mut x0, mut x1) = (grid[best.saturating_sub(1)].ln(), grid[(best + 1).min(GRID)].ln());
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut xa = x1 - g * (x1 - x0);
    let mut xb = x0 + g * (x1 - x0);
    let (mut fa, mut fb) = (f(xa.exp()), f(xb.exp()));
    for _ in 0..60 {
        if fa < fb {
            x1 = xb;
            xb = xa;
            fb = fa;
            xa = x1 - g * (x1 - x0);
            fa = f(xa.exp());
        } else {
            x0 = xa;
            xa = xb;
            fa = fb;
            xb = x0 + g * (x1 - x0);
            fb = f(xb.exp());
        }
    }
    Ok(best_val.min(fa).min(fb))
}

fn paranormal_flag(a: &CMatrix, tol: &Tolerances) -> Result<Flag> {
    let margin = paranormal_margin(a)?;
    Ok(Flag::from_min_eig(margin, tol.residual * op_norm(a).powi(4)))
}

pub fn is_paranormal(a: &CMatrix, tol: &Tolerances) -> Result<bool> {
    Ok(paranormal_flag(a, tol)?.holds)
}

/// Hausdorff distance between two finite subsets of the plane.
pub fn hausdorff(xs: &[Complex64], ys: &[Complex64]) -> f64 {
    let one_side = |p: &[Complex64], q: &[Complex64]| {
        p.iter().map(|x| q.iter().map(|y| (x - y).norm()).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
    };
    one_side(xs, ys).max(one_side(ys, xs))
}

/// Matrices and vectors in JSON as nested `[re, im]` pairs, row-major.
pub mod json {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn matrix_to_rows(a: &CMatrix) -> Vec<Vec<[f64; 2]>> {
        (0..a.nrows()).map(|i| (0..a.ncols()).map(|j| [a[(i, j)].re, a[(i, j)].im]).collect()).collect()
    }

    pub fn matrix_from_rows(rows: &[Vec<[f64; 2]>]) -> std::result::Result<CMatrix, String> {
        let r = rows.len();
        let k = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != k) {
            return Err("ragged matrix rows".into());
        }
        if rows.iter().flatten().flatten().any(|x| !x.is_finite()) {
            return Err("non-finite matrix entry".into());
        }
        Ok(CMatrix::from_fn(r, k, |i, j| c(rows[i][j][0], rows[i][j][1])))
    }

    pub fn vector_to_pairs(v: &CVector) -> Vec<[f64; 2]> {
        v.iter().map(|z| [z.re, z.im]).collect()
    }

    pub fn vector_from_pairs(p: &[[f64; 2]]) -> std::result::Result<CVector, String> {
        if p.iter().flatten().any(|x| !x.is_finite()) {
            return Err("non-finite vector entry".into());
        }
        Ok(CVector::from_iterator(p.len(), p.iter().map(|x| c(x[0], x[1]))))
    }

    pub mod matrix {
        use super::*;
        pub fn serialize<S: Serializer>(a: &CMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
            matrix_to_rows(a).serialize(s)
        }
        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMatrix, D::Error> {
            let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
            matrix_from_rows(&rows).map_err(serde::de::Error::custom)
        }
    }

    pub mod vector {
        use super::*;
        pub fn serialize<S: Serializer>(v: &CVector, s: S) -> std::result::Result<S::Ok, S::Error> {
            vector_to_pairs(v).serialize(s)
        }
        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CVector, D::Error> {
            let p = Vec::<[f64; 2]>::deserialize(d)?;
            vector_from_pairs(&p).map_err(serde::de::Error::custom)
        }
    }

    pub mod opt_vector {
        use super::*;
        pub fn serialize<S: Serializer>(v: &Option<CVector>, s: S) -> std::result::Result<S::Ok, S::Error> {
            v.as_ref().map(vector_to_pairs).serialize(s)
        }
        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<CVector>, D::Error> {
            match Option::<Vec<[f64; 2]>>::deserialize(d)? {
                Some(p) => vector_from_pairs(&p).map(Some).map_err(serde::de::Error::custom),
                None => Ok(None),
            }
        }
    }
}
