use num_complex::Complex64;
use serde::Serialize;

use super::{roots_of_unity, verdict_linear};
use crate::error::{Error, Result};
use crate::fock_basis::AffineSymbol;
use crate::matrix_core::{abs_adjoint, aluthge, json, op_norm, polar_decompose, psd_power, CMatrix, Tolerances};
use crate::phi_model::PhiSeries;

/// (|A*|, b): same boundedness and norm as (A, b).
pub fn reduce_to_positive(symbol: &AffineSymbol, tol: &Tolerances) -> Result<AffineSymbol> {
    symbol.validate()?;
    Ok(AffineSymbol { a: abs_adjoint(&symbol.a, tol)?, b: symbol.b.clone() })
}

/// Symbols (U, |A*|) of the polar decomposition C_A = C_U C_{|A*|}, where A = U|A|.
pub fn polar_of_compop(a: &CMatrix, tol: &Tolerances) -> Result<(CMatrix, CMatrix)> {
    let (u, _) = polar_decompose(a, tol)?;
    Ok((u, abs_adjoint(a, tol)?))
}

/// Symbol of the t-th power of the positive operator C_A: A^t.
pub fn power_symbol(a: &CMatrix, t: f64, tol: &Tolerances) -> Result<CMatrix> {
    psd_power(a, t, tol)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AluthgeSymbol {
    #[serde(with = "json::matrix")]
    pub symbol: CMatrix,
    /// The transform is the adjoint of the composition operator with `symbol`.
    pub adjoint: bool,
}

/// Delta_{s,t}(C_A) = (C_{Delta_{s,t}(A*)})*.
pub fn aluthge_symbol(phi: &PhiSeries, a: &CMatrix, s: f64, t: f64, tol: &Tolerances) -> Result<AluthgeSymbol> {
    if !verdict_linear(phi, a)?.bounded {
        return Err(Error::UnboundedOperator);
    }
    Ok(AluthgeSymbol { symbol: aluthge(&a.adjoint(), s, t, tol)?, adjoint: true })
}

/// C_{s1} = C_{s2} iff s1 = alpha s2 for a root of unity alpha of order gcd(Z_Phi).
pub fn symbols_equal(
    phi: &PhiSeries,
    s1: &AffineSymbol,
    s2: &AffineSymbol,
    tol: &Tolerances,
) -> Result<(bool, Option<Complex64>)> {
    s1.validate()?;
    s2.validate()?;
    if s1.dim() != s2.dim() {
        return Err(Error::DimensionMismatch(format!("symbols of dimension {} and {}", s1.dim(), s2.dim())));
    }
    let scale = tol.residual * op_norm(&s1.a).max(op_norm(&s2.a)).max(s1.b.norm()).max(s2.b.norm()).max(1.0);
    let hit = roots_of_unity(phi.gcd_order()).into_iter().find(|&alpha| {
        op_norm(&(&s1.a - &s2.a * alpha)) <= scale && (&s1.b - &s2.b * alpha).norm() <= scale
    });
    Ok((hit.is_some(), hit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix_core::{c, diag_real, identity, jordan_block, vector_real};
    use crate::sample;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn reduce_examples() {
        let p = diag_real(&[0.5, 0.2]);
        let s = AffineSymbol::linear(p.clone());
        assert!(op_norm(&(reduce_to_positive(&s, &tol()).unwrap().a - p)) < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let a = sample::gaussian_matrix(&mut rng, 3, 3);
        let d = crate::matrix_core::svd(&a).unwrap();
        let expected = &d.u * diag_real(&d.s) * d.u.adjoint();
        let r = reduce_to_positive(&AffineSymbol::linear(a), &tol()).unwrap();
        assert!(op_norm(&(r.a - expected)) < 1e-12);
    }

    #[test]
    fn polar_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let u = sample::unitary_matrix(&mut rng, 3);
        let (uu, p) = polar_of_compop(&u, &tol()).unwrap();
        assert!(op_norm(&(uu - &u)) < 1e-12 && op_norm(&(p - identity(3))) < 1e-12);
        let (_, p) = polar_of_compop(&jordan_block(), &tol()).unwrap();
        assert!(op_norm(&(p - diag_real(&[1.0, 0.0]))) < 1e-14);
        let q = sample::psd_matrix(&mut rng, 3, 2);
        let (_, p) = polar_of_compop(&q, &tol()).unwrap();
        assert!(op_norm(&(p - q)) < 1e-12);
    }

    #[test]
    fn power_examples() {
        assert!(op_norm(&(power_symbol(&diag_real(&[4.0]), 0.5, &tol()).unwrap() - diag_real(&[2.0]))) < 1e-15);
        let p = diag_real(&[0.3, 0.7]);
        assert!(op_norm(&(power_symbol(&p, 1.0, &tol()).unwrap() - p)) < 1e-15);
    }

    #[test]
    fn aluthge_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let a = sample::normal_matrix(&mut rng, 3);
        let r = aluthge_symbol(&PhiSeries::monomial(2).unwrap(), &a, 0.4, 0.6, &tol()).unwrap();
        assert!(op_norm(&(r.symbol - a.adjoint())) < 1e-10);
        let z = aluthge_symbol(&PhiSeries::exp(), &CMatrix::zeros(2, 2), 0.5, 0.5, &tol()).unwrap();
        assert_eq!(op_norm(&z.symbol), 0.0);
        assert_eq!(aluthge_symbol(&PhiSeries::exp(), &diag_real(&[3.0]), 0.5, 0.5, &tol()).unwrap_err().code(), "UNBOUNDED_OPERATOR");
    }

    #[test]
    fn equality_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let a = sample::gaussian_matrix(&mut rng, 2, 2);
        let b = vector_real(&[0.1, -0.2]);
        let s = AffineSymbol::new(a.clone(), b.clone()).unwrap();
        let (eq, alpha) = symbols_equal(&PhiSeries::exp(), &s, &s, &tol()).unwrap();
        assert!(eq && alpha == Some(c(1.0, 0.0)));
        let neg = AffineSymbol::new(-a.clone(), -b).unwrap();
        let (eq, alpha) = symbols_equal(&PhiSeries::monomial(2).unwrap(), &neg, &s, &tol()).unwrap();
        assert!(eq && (alpha.unwrap() - c(-1.0, 0.0)).norm() < 1e-15);
        let (eq, alpha) =
            symbols_equal(&PhiSeries::exp(), &AffineSymbol::linear(-a.clone()), &AffineSymbol::linear(a), &tol()).unwrap();
        assert!(!eq && alpha.is_none());
    }
}
