//! Closed-form answers about C_{A+b}: boundedness, norm and spectral radius,
//! operator classes, symbol calculus, projection-chain suprema and the
//! Gaussian L2 counterpart.

mod calculus;
mod chain;
mod classify;
mod gaussian;

pub use calculus::{aluthge_symbol, polar_of_compop, power_symbol, reduce_to_positive, symbols_equal, AluthgeSymbol};
pub use chain::{sab_chain, ProjectionChain, SabResult};
pub use classify::{classify_affine_exp, classify_compop, ClassEntry, ClassReport};
pub use gaussian::{fit_linear_growth, iterate_norm_curve, verdict_l2_gaussian, GrowthFit, IteratePoint};

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::fock_basis::AffineSymbol;
use crate::matrix_core::{
    identity, json, op_norm, range_membership, spectral_radius, CMatrix, CVector, RangeExponent, Tolerances,
};
use crate::phi_model::{q_value, ExtReal, PhiSeries};

/// Spectral radius, possibly left open.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Radius {
    Value(ExtReal),
    Unknown,
}

impl Radius {
    pub fn value(self) -> Option<ExtReal> {
        match self {
            Radius::Value(v) => Some(v),
            Radius::Unknown => None,
        }
    }
}

impl Serialize for Radius {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Radius::Value(v) => v.serialize(s),
            Radius::Unknown => s.serialize_str("unknown"),
        }
    }
}

/// Which infinite-dimensional picture a finite affine symbol stands for.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ambient {
    /// The symbol acts on C^d itself.
    #[default]
    Finite,
    /// A finite section of an operator on an infinite-dimensional space.
    TruncatedInfinite,
    /// The unilateral shift with b in ker V*.
    ShiftModel,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub bounded: bool,
    pub norm: ExtReal,
    pub spectral_radius: Radius,
    /// (I - AA*)^{1/2 -} b when it exists.
    #[serde(with = "json::opt_vector")]
    pub witness: Option<CVector>,
    /// ||witness||^2, the supremum S(A, b) over projection chains.
    pub s_ab: Option<f64>,
    /// The range-membership residual sat within a factor 10 of its tolerance.
    pub borderline: bool,
    pub norm_formula: &'static str,
    pub radius_formula: &'static str,
}

/// Norms within this relative distance of 1 are treated as exactly 1, so
/// rounding in an SVD cannot flip a contraction into an unbounded verdict.
const UNIT_SNAP: f64 = 1e-10;

pub(crate) fn snap_unit(x: f64) -> f64 {
    if (x - 1.0).abs() <= UNIT_SNAP {
        1.0
    } else {
        x
    }
}

fn require_square(a: &CMatrix) -> Result<()> {
    if a.nrows() == a.ncols() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!("symbol matrix is {}x{}", a.nrows(), a.ncols())))
    }
}

/// Boundedness, norm q_{m,n}(||A||) and spectral radius q_{m,n}(r(A)) of C_A.
pub fn verdict_linear(phi: &PhiSeries, a: &CMatrix) -> Result<Verdict> {
    require_square(a)?;
    let m = phi.zero_order() as u64;
    let n = phi.pole_order();
    let nrm = snap_unit(op_norm(a));
    let bounded = n.is_finite() || nrm <= 1.0;
    let norm = q_value(m, n, nrm)?;
    let (spectral_radius, radius_formula) = if bounded {
        let r = snap_unit(spectral_radius(a)?);
        (Radius::Value(q_value(m, n, r)?), "q_{m,n}(r(A))")
    } else {
        (Radius::Unknown, "undefined for an unbounded operator")
    };
    Ok(Verdict {
        bounded,
        norm: if bounded { norm } else { ExtReal::INFINITY },
        spectral_radius,
        witness: None,
        s_ab: None,
        borderline: false,
        norm_formula: "q_{m,n}(||A||)",
        radius_formula,
    })
}

/// Verdict for C_{A+b} over exp on the finite space C^d.
pub fn verdict_affine_exp(a: &CMatrix, b: &CVector, tol: &Tolerances) -> Result<Verdict> {
    verdict_affine_exp_in(a, b, Ambient::Finite, tol)
}

/// Bounded iff ||A|| <= 1 and b in ran((I - AA*)^{1/2}); then
/// ||C||^2 = exp(||(I - AA*)^{-1/2} b||^2).
pub fn verdict_affine_exp_in(a: &CMatrix, b: &CVector, ambient: Ambient, tol: &Tolerances) -> Result<Verdict> {
    AffineSymbol::new(a.clone(), b.clone())?;
    let nrm = snap_unit(op_norm(a));
    let unbounded = |borderline| Verdict {
        bounded: false,
        norm: ExtReal::INFINITY,
        spectral_radius: Radius::Unknown,
        witness: None,
        s_ab: None,
        borderline,
        norm_formula: "exp(||(I-AA*)^{-1/2} b||^2 / 2)",
        radius_formula: "undefined for an unbounded operator",
    };
    if nrm > 1.0 {
        return Ok(unbounded(false));
    }
    let d = a.nrows();
    let defect = identity(d) - a * a.adjoint();
    let m = range_membership(&defect, b, RangeExponent::Half, tol)?;
    let Some(w) = m.preimage else {
        return Ok(unbounded(m.borderline));
    };
    let s = w.norm_squared();
    let b_zero = b.norm() == 0.0;
    let (spectral_radius, radius_formula) = match ambient {
        Ambient::Finite => (Radius::Value(ExtReal::new(1.0)), "1 (finite dimension)"),
        _ if b_zero => (Radius::Value(ExtReal::new(1.0)), "1 (linear contraction)"),
        Ambient::TruncatedInfinite if nrm < 1.0 => (Radius::Value(ExtReal::new(1.0)), "1 (strict contraction)"),
        Ambient::TruncatedInfinite => (Radius::Unknown, "not determined for ||A|| = 1, b != 0"),
        Ambient::ShiftModel => {
            (Radius::Value(ExtReal::new((b.norm_squared() / 2.0).exp())), "e^{||b||^2/2} (shift model)")
        }
    };
    Ok(Verdict {
        bounded: true,
        norm: ExtReal::new((s / 2.0).exp()),
        spectral_radius,
        witness: Some(w),
        s_ab: Some(s),
        borderline: m.borderline,
        norm_formula: "exp(||(I-AA*)^{-1/2} b||^2 / 2)",
        radius_formula,
    })
}

/// Verdict dispatch for a general symbol: linear for any series, affine only over exp.
pub fn verdict(phi: &PhiSeries, symbol: &AffineSymbol, tol: &Tolerances) -> Result<Verdict> {
    symbol.validate()?;
    if symbol.is_linear() {
        verdict_linear(phi, &symbol.a)
    } else if phi.is_exp() {
        verdict_affine_exp(&symbol.a, &symbol.b, tol)
    } else {
        Err(Error::AffineUnsupportedForPhi)
    }
}

/// Roots of unity e^{2 pi i k / g}, k = 0..g-1.
pub fn roots_of_unity(g: u64) -> Vec<num_complex::Complex64> {
    (0..g).map(|k| num_complex::Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / g as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix_core::{c, diag_real, vector_real};
    use crate::sample;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn linear_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let a = sample::gaussian_matrix(&mut rng, 3, 3);
        let v = verdict_linear(&PhiSeries::monomial(2).unwrap(), &a).unwrap();
        assert!(v.bounded);
        assert!((v.norm.value() - op_norm(&a).powi(2)).abs() < 1e-12);
        let r = spectral_radius(&a).unwrap();
        assert!((v.spectral_radius.value().unwrap().value() - r * r).abs() < 1e-12);
        let v = verdict_linear(&PhiSeries::exp(), &diag_real(&[1.5, 0.2])).unwrap();
        assert!(!v.bounded && !v.norm.is_finite());
        let u = sample::unitary_matrix(&mut rng, 3);
        let v = verdict_linear(&PhiSeries::exp(), &u).unwrap();
        assert_eq!(v.norm.value(), 1.0);
        assert_eq!(v.spectral_radius.value().unwrap().value(), 1.0);
    }

    #[test]
    fn affine_examples() {
        let v = verdict_affine_exp(&diag_real(&[0.5]), &vector_real(&[0.5]), &tol()).unwrap();
        assert!(v.bounded);
        assert!((v.norm.value().powi(2) - (1.0f64 / 3.0).exp()).abs() < 1e-14);
        assert_eq!(v.spectral_radius.value().unwrap().value(), 1.0);
        let a = CVector::from_vec(vec![c(0.3, -0.2), c(0.1, 0.5)]);
        let v = verdict_affine_exp(&CMatrix::zeros(2, 2), &a, &tol()).unwrap();
        assert!((v.norm.value() - (a.norm_squared() / 2.0).exp()).abs() < 1e-14);
        // b in ker A* with ||A|| = 1.
        let a = diag_real(&[1.0, 0.0]);
        let v = verdict_affine_exp(&a, &vector_real(&[0.0, 0.7]), &tol()).unwrap();
        assert!(v.bounded);
        // Unitary part with b outside the defect range.
        let v = verdict_affine_exp(&a, &vector_real(&[0.7, 0.0]), &tol()).unwrap();
        assert!(!v.bounded);
        assert!(!verdict_affine_exp(&diag_real(&[1.2]), &vector_real(&[0.0]), &tol()).unwrap().bounded);
    }

    #[test]
    fn semi_lid_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let a = sample::matrix_with_norm(&mut rng, 3, 0.8);
            let b = sample::vector_with_norm(&mut rng, 3, 0.4);
            let v = verdict_affine_exp(&a, &b, &tol()).unwrap();
            assert!(v.norm.value() > 1.0);
            assert_eq!(v.spectral_radius.value().unwrap().value(), 1.0);
            let v0 = verdict_affine_exp(&a, &CVector::zeros(3), &tol()).unwrap();
            assert_eq!(v0.norm.value(), 1.0);
        }
    }

    #[test]
    fn ambient_radius_cases() {
        let a = diag_real(&[1.0, 0.0]);
        let b = vector_real(&[0.0, 0.5]);
        let v = verdict_affine_exp_in(&a, &b, Ambient::TruncatedInfinite, &tol()).unwrap();
        assert_eq!(v.spectral_radius, Radius::Unknown);
        let v = verdict_affine_exp_in(&diag_real(&[0.5, 0.0]), &b, Ambient::TruncatedInfinite, &tol()).unwrap();
        assert_eq!(v.spectral_radius.value().unwrap().value(), 1.0);
        let v = verdict_affine_exp_in(&a, &b, Ambient::ShiftModel, &tol()).unwrap();
        assert!((v.spectral_radius.value().unwrap().value() - (0.125f64).exp()).abs() < 1e-15);
        assert_eq!(serde_json::to_string(&Radius::Unknown).unwrap(), "\"unknown\"");
    }

    #[test]
    fn dispatch_rejects_affine_over_other_series() {
        let s = AffineSymbol::new(diag_real(&[0.5]), vector_real(&[0.5])).unwrap();
        let err = verdict(&PhiSeries::cosh(), &s, &tol()).unwrap_err();
        assert_eq!(err.code(), "AFFINE_UNSUPPORTED_FOR_PHI");
        assert!(verdict(&PhiSeries::exp(), &s, &tol()).unwrap().bounded);
    }

    #[test]
    fn roots() {
        let r = roots_of_unity(4);
        assert!((r[2] - c(-1.0, 0.0)).norm() < 1e-15);
        assert_eq!(r[0], c(1.0, 0.0));
    }
}
