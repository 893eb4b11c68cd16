use compop::engine::{reduce_to_positive, symbols_equal, verdict, verdict_linear};
use compop::fock_basis::AffineSymbol;
use compop::matrix_core::{c, op_norm, CMatrix, Tolerances};
use compop::phi_model::PhiSeries;
use compop::sample;
use compop::verify_oracle::compression_norm_curve;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn monomial_norm_is_a_power(seed in any::<u64>(), d in 1usize..4, k in 1usize..5, s in 0.1f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = sample::matrix_with_norm(&mut rng, d, s);
        let v = verdict_linear(&PhiSeries::monomial(k).unwrap(), &a).unwrap();
        prop_assert!(v.bounded);
        let expect = s.powi(k as i32);
        prop_assert!((v.norm.value() - expect).abs() <= 1e-9 * expect);
        // The space is the degree-k block, so the truncation at k is the whole operator.
        let curve = compression_norm_curve(&PhiSeries::monomial(k).unwrap(), &AffineSymbol::linear(a), k).unwrap();
        prop_assert!((curve.final_value - expect).abs() <= 1e-9 * expect);
    }

    #[test]
    fn exp_boundedness_is_the_contraction_test(seed in any::<u64>(), d in 1usize..4, s in 0.1f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = sample::matrix_with_norm(&mut rng, d, s);
        let b = sample::vector_with_norm(&mut rng, d, 0.2);
        let v = verdict(&PhiSeries::exp(), &AffineSymbol::new(a, b).unwrap(), &Tolerances::default()).unwrap();
        prop_assert_eq!(v.bounded, s < 1.0);
    }

    #[test]
    fn reduction_to_positive_keeps_the_norm(seed in any::<u64>(), d in 1usize..4, s in 0.1f64..0.95, t in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = sample::matrix_with_norm(&mut rng, d, s);
        let b = sample::vector_with_norm(&mut rng, d, t);
        let tol = Tolerances::default();
        let sym = AffineSymbol::new(a, b).unwrap();
        let red = reduce_to_positive(&sym, &tol).unwrap();
        let phi = PhiSeries::exp();
        let (n1, n2) = (verdict(&phi, &sym, &tol).unwrap().norm.value(), verdict(&phi, &red, &tol).unwrap().norm.value());
        prop_assert!((n1 - n2).abs() <= 1e-8 * n1);
    }
}

#[test]
fn symbols_agree_up_to_the_root_of_unity_group() {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = sample::gaussian_matrix(&mut rng, 2, 2);
    let s = AffineSymbol::linear(a.clone());
    let i_a = AffineSymbol::linear(&a * c(0.0, 1.0));
    let neg = AffineSymbol::linear(-a.clone());
    // z^2 identifies A and -A but not iA; z^4 identifies all three; exp none.
    let z2 = PhiSeries::monomial(2).unwrap();
    let z4 = PhiSeries::monomial(4).unwrap();
    assert!(symbols_equal(&z2, &s, &neg, &tol).unwrap().0);
    assert!(!symbols_equal(&z2, &s, &i_a, &tol).unwrap().0);
    assert!(symbols_equal(&z4, &s, &i_a, &tol).unwrap().0);
    assert!(!symbols_equal(&PhiSeries::exp(), &s, &neg, &tol).unwrap().0);
    let (_, alpha) = symbols_equal(&z2, &neg, &s, &tol).unwrap();
    assert!((alpha.unwrap() - c(-1.0, 0.0)).norm() <= 1e-12);
}

#[test]
fn non_square_symbols_are_rejected() {
    let a = CMatrix::zeros(2, 3);
    assert_eq!(verdict_linear(&PhiSeries::exp(), &a).unwrap_err().code(), "DIMENSION_MISMATCH");
    assert!(op_norm(&CMatrix::zeros(0, 0)) == 0.0);
}
