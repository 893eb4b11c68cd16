use num_complex::Complex64;
use serde::Serialize;

use super::{roots_of_unity, verdict_affine_exp, verdict_linear};
use crate::error::{Error, Result};
use crate::matrix_core::{
    classify_matrix, identity, min_eigenvalue, op_norm, range_membership, CMatrix, CVector, RangeExponent, Tolerances,
};
use crate::phi_model::PhiSeries;

/// One operator-class answer. `holds = None` means the available criteria do
/// not decide the question.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClassEntry {
    pub holds: Option<bool>,
    /// Root of unity alpha witnessing the criterion, when one is needed.
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "ser_alpha")]
    pub alpha: Option<Complex64>,
    /// Only a necessary condition was tested.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub necessary_only: bool,
}

fn ser_alpha<S: serde::Serializer>(a: &Option<Complex64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    a.map(|z| [z.re, z.im]).serialize(s)
}

impl ClassEntry {
    fn yes_no(holds: bool) -> Self {
        ClassEntry { holds: Some(holds), alpha: None, necessary_only: false }
    }

    fn witnessed(alpha: Option<Complex64>) -> Self {
        ClassEntry { holds: Some(alpha.is_some()), alpha, necessary_only: false }
    }

    fn undetermined() -> Self {
        ClassEntry { holds: None, alpha: None, necessary_only: false }
    }

    pub fn is_true(&self) -> bool {
        self.holds == Some(true)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClassReport {
    pub selfadjoint: ClassEntry,
    pub positive: ClassEntry,
    pub isometry: ClassEntry,
    pub coisometry: ClassEntry,
    pub unitary: ClassEntry,
    pub partial_isometry: ClassEntry,
    pub orthogonal_projection: ClassEntry,
    pub hyponormal: ClassEntry,
    pub cohyponormal: ClassEntry,
    pub normal: ClassEntry,
    pub normaloid: ClassEntry,
}

/// First root of unity of order g (in the order e^{2 pi i k/g}, k = 0..) that satisfies `pred`.
fn scan_roots(g: u64, mut pred: impl FnMut(Complex64) -> bool) -> Option<Complex64> {
    roots_of_unity(g).into_iter().find(|&alpha| pred(alpha))
}

/// Classes of C_A on Phi(C^d), read off from A and the root-of-unity group of Phi.
pub fn classify_compop(phi: &PhiSeries, a: &CMatrix, tol: &Tolerances) -> Result<ClassReport> {
    let v = verdict_linear(phi, a)?;
    if !v.bounded {
        return Err(Error::UnboundedOperator);
    }
    let g = phi.gcd_order();
    let f = classify_matrix(a, tol)?;
    let scale = tol.residual * op_norm(a).max(1.0);
    let ah = a.adjoint();

    let selfadjoint = scan_roots(g, |alpha| op_norm(&(&ah - a * alpha)) <= scale);
    let positive = scan_roots(g, |alpha| {
        let x = a * alpha;
        op_norm(&(&x - x.adjoint())) <= scale && min_eigenvalue(&x) >= -tol.loewner * op_norm(a).max(1.0)
    });
    let projection = scan_roots(g, |alpha| {
        let x = a * alpha;
        op_norm(&(&x - x.adjoint())) <= scale && op_norm(&(&x * &x - &x)) <= scale * op_norm(a).max(1.0)
    });
    let normaloid = if phi.at_zero() != 0.0 && super::snap_unit(op_norm(a)) <= 1.0 {
        true
    } else {
        f.normaloid.holds
    };
    Ok(ClassReport {
        selfadjoint: ClassEntry::witnessed(selfadjoint),
        positive: ClassEntry::witnessed(positive),
        isometry: ClassEntry::yes_no(f.coisometry.holds),
        coisometry: ClassEntry::yes_no(f.isometry.holds),
        unitary: ClassEntry::yes_no(f.unitary.holds),
        partial_isometry: ClassEntry::yes_no(f.partial_isometry.holds),
        orthogonal_projection: ClassEntry::witnessed(projection),
        hyponormal: ClassEntry::yes_no(f.cohyponormal.holds),
        cohyponormal: ClassEntry::yes_no(f.hyponormal.holds),
        normal: ClassEntry::yes_no(f.normal.holds),
        normaloid: ClassEntry::yes_no(normaloid),
    })
}

/// Classes of C_{A+b} over exp. With b != 0 the operator is never hyponormal,
/// normal, isometric, coisometric, selfadjoint or normaloid; cohyponormality is
/// tested only through necessary conditions and partial isometry is left open.
pub fn classify_affine_exp(a: &CMatrix, b: &CVector, tol: &Tolerances) -> Result<ClassReport> {
    let v = verdict_affine_exp(a, b, tol)?;
    if !v.bounded {
        return Err(Error::UnboundedOperator);
    }
    if b.norm() <= tol.residual {
        return classify_compop(&PhiSeries::exp(), a, tol);
    }
    let no = ClassEntry::yes_no(false);
    Ok(ClassReport {
        selfadjoint: no,
        positive: no,
        isometry: no,
        coisometry: no,
        unitary: no,
        partial_isometry: ClassEntry::undetermined(),
        orthogonal_projection: no,
        hyponormal: no,
        cohyponormal: cohyponormal_necessary(a, b, tol)?,
        normal: no,
        normaloid: no,
    })
}

/// A hyponormal, (I - A*) b in ran([A*, A]^{1/2}) and ||[A*, A]^{-1/2}(I - A*) b|| <= ||b||.
fn cohyponormal_necessary(a: &CMatrix, b: &CVector, tol: &Tolerances) -> Result<ClassEntry> {
    let ah = a.adjoint();
    let comm = &ah * a - a * &ah;
    let fail = ClassEntry { holds: Some(false), alpha: None, necessary_only: true };
    if min_eigenvalue(&comm) < -tol.loewner * op_norm(a).powi(2).max(1.0) {
        return Ok(fail);
    }
    let target = (identity(a.nrows()) - &ah) * b;
    let m = range_membership(&comm, &target, RangeExponent::Half, tol)?;
    match m.preimage {
        Some(w) if w.norm() <= b.norm() * (1.0 + tol.residual) => {
            Ok(ClassEntry { holds: None, alpha: None, necessary_only: true })
        }
        _ => Ok(fail),
    }
}
