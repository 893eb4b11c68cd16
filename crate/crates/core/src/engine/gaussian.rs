use serde::Serialize;

use super::{snap_unit, verdict_affine_exp, Radius, Verdict};
use crate::error::{Error, Result};
use crate::fock_basis::AffineSymbol;
use crate::matrix_core::{identity, range_membership, singular_values, CMatrix, CVector, RangeExponent, Tolerances};
use crate::phi_model::ExtReal;

/// C_{A+b} on L2 of the standard Gaussian measure on C^d.
///
/// Well defined iff A is nonsingular; bounded iff moreover ||A|| <= 1 and
/// b in ran(I - AA*). Then ||C||^2 = exp(<(I - AA*)^- b, b>) / |det A|^2 and
/// r(C) = 1 / |det A|.
pub fn verdict_l2_gaussian(a: &CMatrix, b: &CVector, tol: &Tolerances) -> Result<Verdict> {
    AffineSymbol::new(a.clone(), b.clone())?;
    let s = singular_values(a)?;
    let smax = s.first().copied().unwrap_or(0.0);
    let smin = s.last().copied().unwrap_or(0.0);
    if smin <= tol.rank_cutoff * smax.max(1.0) {
        return Err(Error::NotWellDefined);
    }
    let abs_det: f64 = s.iter().product();
    let nrm = snap_unit(smax);
    let norm_formula = "exp(<(I-AA*)^- b, b> / 2) / |det A|";
    let unbounded = |borderline| Verdict {
        bounded: false,
        norm: ExtReal::INFINITY,
        spectral_radius: Radius::Unknown,
        witness: None,
        s_ab: None,
        borderline,
        norm_formula,
        radius_formula: "undefined for an unbounded operator",
    };
    if nrm > 1.0 {
        return Ok(unbounded(false));
    }
    let defect = identity(a.nrows()) - a * a.adjoint();
    let m = range_membership(&defect, b, RangeExponent::One, tol)?;
    if !m.member {
        return Ok(unbounded(m.borderline));
    }
    let w = range_membership(&defect, b, RangeExponent::Half, tol)?.preimage.expect("ran X lies in ran X^{1/2}");
    let s_ab = w.norm_squared();
    Ok(Verdict {
        bounded: true,
        norm: ExtReal::new((s_ab / 2.0).exp() / abs_det),
        spectral_radius: Radius::Value(ExtReal::new(1.0 / abs_det)),
        witness: Some(w),
        s_ab: Some(s_ab),
        borderline: m.borderline,
        norm_formula,
        radius_formula: "1 / |det A|",
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IteratePoint {
    pub n: usize,
    /// ||(I - A^n A*^n)^{1/2 -} b_n||^2, absent when b_n leaves the range.
    pub w_norm_sq: Option<f64>,
    /// ||C^n||^{1/n} = exp(w_norm_sq / (2n)).
    pub value: Option<f64>,
}

/// ||C_phi^n||^{1/n} for n = 1..n_max, where phi^n = A^n + b_n with
/// b_n = (I + A + ... + A^{n-1}) b.
pub fn iterate_norm_curve(a: &CMatrix, b: &CVector, n_max: usize, tol: &Tolerances) -> Result<Vec<IteratePoint>> {
    if !verdict_affine_exp(a, b, tol)?.bounded {
        return Err(Error::UnboundedOperator);
    }
    let d = a.nrows();
    let id = identity(d);
    let mut a_pow = id.clone();
    let mut b_n = CVector::zeros(d);
    let mut out = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        b_n += &a_pow * b;
        a_pow = &a_pow * a;
        let defect = &id - &a_pow * a_pow.adjoint();
        let m = range_membership(&defect, &b_n, RangeExponent::Half, tol)?;
        let w_norm_sq = m.preimage.map(|w| w.norm_squared());
        out.push(IteratePoint { n, w_norm_sq, value: w_norm_sq.map(|s| (s / (2.0 * n as f64)).exp()) });
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GrowthFit {
    /// Smallest M with ||w_n||^2 <= M^2 n on the fitting half.
    pub m: f64,
    /// The bound also holds on the held-out half.
    pub holds: bool,
}

/// Fits ||w_n||^2 <= M^2 n on n <= n_max/2 and checks it on the rest.
pub fn fit_linear_growth(curve: &[IteratePoint]) -> GrowthFit {
    let half = curve.len().div_ceil(2);
    let ratio = |p: &IteratePoint| p.w_norm_sq.map_or(f64::INFINITY, |s| s / p.n as f64);
    let m2 = curve[..half].iter().map(ratio).fold(0.0, f64::max);
    let holds = m2.is_finite() && curve[half..].iter().all(|p| ratio(p) <= m2 * (1.0 + 1e-9) + 1e-12);
    GrowthFit { m: m2.sqrt(), holds }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix_core::{diag_real, vector_real};
    use crate::sample;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn l2_examples() {
        let v = verdict_l2_gaussian(&diag_real(&[0.5]), &vector_real(&[0.0]), &tol()).unwrap();
        assert!((v.norm.value().powi(2) - 4.0).abs() < 1e-14);
        assert!((v.spectral_radius.value().unwrap().value() - 2.0).abs() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(60);
        let u = sample::unitary_matrix(&mut rng, 3);
        let v = verdict_l2_gaussian(&u, &CVector::zeros(3), &tol()).unwrap();
        assert!((v.norm.value() - 1.0).abs() < 1e-12 && (v.spectral_radius.value().unwrap().value() - 1.0).abs() < 1e-12);
        let err = verdict_l2_gaussian(&diag_real(&[1.0, 0.0]), &CVector::zeros(2), &tol()).unwrap_err();
        assert_eq!(err.code(), "NOT_WELL_DEFINED");
    }

    #[test]
    fn l2_norm_over_segal_bargmann_norm_is_inverse_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for _ in 0..10 {
            let a = sample::matrix_with_norm(&mut rng, 2, 0.7);
            let b = sample::vector_with_norm(&mut rng, 2, 0.3);
            let l2 = verdict_l2_gaussian(&a, &b, &tol()).unwrap();
            let sb = verdict_affine_exp(&a, &b, &tol()).unwrap();
            let det = a.determinant().norm();
            assert!((l2.norm.value() / sb.norm.value() - 1.0 / det).abs() < 1e-10 / det);
        }
    }

    #[test]
    fn iterate_examples() {
        let t = tol();
        let ones = iterate_norm_curve(&diag_real(&[0.5]), &vector_real(&[0.0]), 10, &t).unwrap();
        assert!(ones.iter().all(|p| p.value == Some(1.0)));
        let curve = iterate_norm_curve(&diag_real(&[0.5]), &vector_real(&[0.5]), 20, &t).unwrap();
        // Closed form in one variable: b_n = (1 - a^n)/(1 - a) b.
        for p in &curve {
            let an = 0.5f64.powi(p.n as i32);
            let bn = (1.0 - an) / 0.5 * 0.5;
            let expected = bn * bn / (1.0 - an * an);
            assert!((p.w_norm_sq.unwrap() - expected).abs() < 1e-12);
        }
        // ||w_n||^2 -> 1, so the value at n = 20 is close to e^{1/40} and the
        // distance to 1 drops below 0.02 only from n = 26 on.
        assert!((curve[19].value.unwrap() - (1.0f64 / 40.0).exp()).abs() < 1e-6);
        let long = iterate_norm_curve(&diag_real(&[0.5]), &vector_real(&[0.5]), 26, &t).unwrap();
        assert!((long[25].value.unwrap() - 1.0).abs() < 0.02);
        assert!(curve.windows(2).all(|w| w[1].value <= w[0].value));
        assert!(fit_linear_growth(&curve).holds);
        let err = iterate_norm_curve(&diag_real(&[2.0]), &vector_real(&[0.0]), 3, &t).unwrap_err();
        assert_eq!(err.code(), "UNBOUNDED_OPERATOR");
    }
}
