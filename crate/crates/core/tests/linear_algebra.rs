use compop::matrix_core::{
    c, hermitian_eigen, op_norm, pinv, polar_decompose, range_membership, singular_values, svd, CMatrix,
    CVector, RangeExponent, Tolerances,
};
use compop::sample;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn matrix(seed: u64, d: usize, rank: usize, scale: f64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample::low_rank_matrix(&mut rng, d, rank.min(d)) * c(scale, 0.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn svd_reconstructs(seed in any::<u64>(), d in 1usize..6, rank in 0usize..6, scale in 1e-3f64..1e3) {
        let a = matrix(seed, d, rank, scale);
        let dec = svd(&a).unwrap();
        prop_assert!(dec.s.windows(2).all(|w| w[0] >= w[1]));
        let s = CMatrix::from_diagonal(&CVector::from_iterator(dec.s.len(), dec.s.iter().map(|&x| c(x, 0.0))));
        let rebuilt = &dec.u * s * dec.v.adjoint();
        prop_assert!(op_norm(&(rebuilt - &a)) <= 1e-12 * op_norm(&a).max(1e-300) + 1e-300);
        let sv = singular_values(&a).unwrap();
        prop_assert!(sv.iter().zip(&dec.s).all(|(x, y)| (x - y).abs() <= 1e-12 * sv[0].max(1e-300)));
    }

    #[test]
    fn pinv_satisfies_penrose(seed in any::<u64>(), d in 1usize..6, rank in 0usize..6) {
        let a = matrix(seed, d, rank, 1.0);
        let x = pinv(&a, &Tolerances::default()).unwrap();
        let n = op_norm(&a).max(1.0);
        prop_assert!(op_norm(&(&a * &x * &a - &a)) <= 1e-9 * n);
        prop_assert!(op_norm(&(&x * &a * &x - &x)) <= 1e-9 * op_norm(&x).max(1.0));
        let ax = &a * &x;
        prop_assert!(op_norm(&(&ax - ax.adjoint())) <= 1e-9);
    }

    #[test]
    fn images_are_in_the_range(seed in any::<u64>(), d in 1usize..6, rank in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = sample::psd_matrix(&mut rng, d, rank.min(d));
        let g = sample::gaussian_vector(&mut rng, d);
        let e = &b * &g;
        let tol = Tolerances::default();
        let m = range_membership(&b, &e, RangeExponent::One, &tol).unwrap();
        prop_assert!(m.member);
        let w = m.preimage.unwrap();
        prop_assert!((&b * &w - &e).norm() <= 1e-8 * e.norm().max(1.0));
        // Anything in ran B is in ran B^{1/2}.
        prop_assert!(range_membership(&b, &e, RangeExponent::Half, &tol).unwrap().member);
    }

    #[test]
    fn kernel_directions_leave_the_range(seed in any::<u64>(), d in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = sample::psd_matrix(&mut rng, d, d - 1);
        let (vals, vecs) = hermitian_eigen(&b);
        prop_assert!(vals[0].abs() <= 1e-10 * vals[d - 1]);
        let e = &b * sample::gaussian_vector(&mut rng, d) + vecs.column(0) * c(0.5, 0.0);
        for exp in [RangeExponent::One, RangeExponent::Half] {
            prop_assert!(!range_membership(&b, &e, exp, &Tolerances::default()).unwrap().member);
        }
    }

    #[test]
    fn polar_factors_multiply_back(seed in any::<u64>(), d in 1usize..5, rank in 0usize..5) {
        let a = matrix(seed, d, rank, 1.0);
        let (u, p) = polar_decompose(&a, &Tolerances::default()).unwrap();
        prop_assert!(op_norm(&(&u * &p - &a)) <= 1e-10);
        prop_assert!(op_norm(&(&p * &p - a.adjoint() * &a)) <= 1e-10);
        // U is a partial isometry: U*U is a projection.
        let q = u.adjoint() * &u;
        prop_assert!(op_norm(&(&q * &q - &q)) <= 1e-10);
        prop_assert!(op_norm(&(&a * &q - &a)) <= 1e-10);
    }
}
