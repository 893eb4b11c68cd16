use serde::Serialize;

use super::snap_unit;
use crate::error::{Error, Result};
use crate::matrix_core::{
    abs_adjoint, diag_real, identity, loewner_leq, op_norm, range_membership, CMatrix, CVector,
    RangeExponent, Tolerances,
};
use crate::phi_model::ExtReal;

/// Increasing orthogonal projections P_1 <= P_2 <= ...
#[derive(Clone, Debug)]
pub struct ProjectionChain {
    projections: Vec<CMatrix>,
}

impl ProjectionChain {
    pub fn new(projections: Vec<CMatrix>, tol: &Tolerances) -> Result<Self> {
        for (k, p) in projections.iter().enumerate() {
            if p.nrows() != p.ncols() {
                return Err(Error::SizeMismatch(format!("projection {k} is not square")));
            }
            let idem = op_norm(&(p * p - p));
            let sa = op_norm(&(p - p.adjoint()));
            if idem > tol.residual || sa > tol.residual {
                return Err(Error::NotSelfadjoint { residual: idem.max(sa) });
            }
        }
        for w in projections.windows(2) {
            if !loewner_leq(&w[0], &w[1], tol)? {
                return Err(Error::SizeMismatch("projection ranges are not nested".into()));
            }
        }
        Ok(ProjectionChain { projections })
    }

    /// diag(1,..,1,0,..,0) with k ones, k = 1..d.
    pub fn coordinate(d: usize) -> Self {
        let projections = (1..=d)
            .map(|k| diag_real(&(0..d).map(|i| if i < k { 1.0 } else { 0.0 }).collect::<Vec<_>>()))
            .collect();
        ProjectionChain { projections }
    }

    /// Projections onto the spans of the first k columns of an orthonormal frame.
    pub fn from_frame(q: &CMatrix) -> Self {
        let mut acc = CMatrix::zeros(q.nrows(), q.nrows());
        let mut projections = Vec::with_capacity(q.ncols());
        for j in 0..q.ncols() {
            acc += q.column(j) * q.column(j).adjoint();
            projections.push(acc.clone());
        }
        ProjectionChain { projections }
    }

    pub fn len(&self) -> usize {
        self.projections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projections.is_empty()
    }

    pub fn projections(&self) -> &[CMatrix] {
        &self.projections
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SabResult {
    /// <(I - |A*| P_k |A*|)^- b, b>, infinite when b leaves the range.
    pub values: Vec<ExtReal>,
    /// <(I - A P_k A)^- b, b> for PSD A, where both forms apply.
    pub psd_form: Option<Vec<ExtReal>>,
    pub monotone: bool,
    /// ||(I - AA*)^{1/2 -} b||^2, infinite outside the range.
    pub limit: ExtReal,
    /// The last value agrees with `limit` (both finite) or both diverge.
    pub limit_matches: bool,
}

fn form_value(x: &CMatrix, b: &CVector, tol: &Tolerances) -> Result<ExtReal> {
    let m = range_membership(x, b, RangeExponent::One, tol)?;
    Ok(match m.preimage {
        Some(w) => ExtReal::new(b.dotc(&w).re.max(0.0)),
        None => ExtReal::INFINITY,
    })
}

fn nondecreasing(v: &[ExtReal], tol: f64) -> bool {
    v.windows(2).all(|w| w[1].value() >= w[0].value() - tol * (1.0 + w[0].value().min(1e300)))
}

/// Values of S(A, b) along a projection chain, with both the |A*| form and,
/// for PSD A, the A P A form.
pub fn sab_chain(a: &CMatrix, b: &CVector, chain: &ProjectionChain, tol: &Tolerances) -> Result<SabResult> {
    let d = a.nrows();
    if a.ncols() != d || b.len() != d || chain.projections().iter().any(|p| p.nrows() != d) {
        return Err(Error::DimensionMismatch("symbol and chain dimensions differ".into()));
    }
    let norm = snap_unit(op_norm(a));
    if norm > 1.0 {
        return Err(Error::ContractionViolated { norm });
    }
    let id = identity(d);
    let abs_star = abs_adjoint(a, tol)?;
    let values = chain
        .projections()
        .iter()
        .map(|p| form_value(&(&id - &abs_star * p * &abs_star), b, tol))
        .collect::<Result<Vec<_>>>()?;
    let is_psd = op_norm(&(a - a.adjoint())) <= tol.residual && crate::matrix_core::min_eigenvalue(a) >= -tol.loewner;
    let psd_form = if is_psd {
        Some(chain.projections().iter().map(|p| form_value(&(&id - a * p * a), b, tol)).collect::<Result<Vec<_>>>()?)
    } else {
        None
    };
    let defect = &id - a * a.adjoint();
    let limit = match range_membership(&defect, b, RangeExponent::Half, tol)?.preimage {
        Some(w) => ExtReal::new(w.norm_squared()),
        None => ExtReal::INFINITY,
    };
    let monotone = nondecreasing(&values, 1e-9);
    let limit_matches = match values.last() {
        Some(last) if last.is_finite() && limit.is_finite() => {
            (last.value() - limit.value()).abs() <= 1e-8 * (1.0 + limit.value())
        }
        Some(last) => !last.is_finite() && !limit.is_finite(),
        None => false,
    };
    Ok(SabResult { values, psd_form, monotone, limit, limit_matches })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix_core::{c, vector_real};
    use crate::sample;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn terminates_at_the_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        for _ in 0..20 {
            let a = sample::matrix_with_norm(&mut rng, 3, 0.8);
            let b = sample::vector_with_norm(&mut rng, 3, 0.5);
            let r = sab_chain(&a, &b, &ProjectionChain::coordinate(3), &tol()).unwrap();
            assert!(r.monotone && r.limit_matches);
            assert!(r.psd_form.is_none());
            let q = sample::unitary_matrix(&mut rng, 3);
            let r = sab_chain(&a, &b, &ProjectionChain::from_frame(&q), &tol()).unwrap();
            assert!(r.monotone && r.limit_matches);
        }
    }

    #[test]
    fn both_forms_agree_for_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let a = sample::psd_matrix(&mut rng, 3, 3);
        let a = &a * c(0.9 / op_norm(&a), 0.0);
        let b = sample::gaussian_vector(&mut rng, 3);
        let r = sab_chain(&a, &b, &ProjectionChain::coordinate(3), &tol()).unwrap();
        let psd = r.psd_form.unwrap();
        for (x, y) in r.values.iter().zip(&psd) {
            assert!((x.value() - y.value()).abs() < 1e-10 * (1.0 + x.value()));
        }
    }

    #[test]
    fn divergence_is_flagged() {
        let a = diag_real(&[1.0, 0.5]);
        let b = vector_real(&[0.3, 0.1]);
        let r = sab_chain(&a, &b, &ProjectionChain::coordinate(2), &tol()).unwrap();
        assert!(!r.limit.is_finite());
        assert!(!r.values.last().unwrap().is_finite());
        assert!(r.limit_matches);
    }

    #[test]
    fn rejects_non_contractions_and_bad_chains() {
        let err = sab_chain(&diag_real(&[1.5]), &vector_real(&[0.1]), &ProjectionChain::coordinate(1), &tol()).unwrap_err();
        assert_eq!(err.code(), "CONTRACTION_VIOLATED");
        let p = diag_real(&[0.0, 1.0]);
        let q = diag_real(&[1.0, 0.0]);
        assert!(ProjectionChain::new(vec![p.clone(), q], &tol()).is_err());
        assert!(ProjectionChain::new(vec![diag_real(&[0.5, 1.0])], &tol()).is_err());
        assert_eq!(ProjectionChain::new(vec![p, identity(2)], &tol()).unwrap().len(), 2);
    }
}
