//! Finite realizations of two infinite-dimensional examples: the unilateral
//! shift with a translation in ker V*, and a positive diagonal contraction.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{BoundKind, OracleEstimate};
use crate::engine::{iterate_norm_curve, verdict_affine_exp_in, Ambient};
use crate::error::{Error, Result};
use crate::fock_basis::kernel_gram;
use crate::matrix_core::{
    c, hermitian_eigen, identity, psd_inverse_power, range_membership, CMatrix, CVector, RangeExponent, Tolerances,
};
use crate::sample;

/// Truncated shift V e_k = e_{k+1} on C^T with b = scale (b0.re + i b0.im) e_0.
///
/// Inside the truncation V acts isometrically on span(e_0, .., e_{T-2}), so
/// any computation touching at most T - 1 steps sees the true shift.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftModel {
    pub size: usize,
    /// Gaussian-integer direction of b, kept integral for exact arithmetic.
    pub b0: [i64; 2],
    pub scale: f64,
}

impl ShiftModel {
    pub fn new(size: usize, b0: [i64; 2], scale: f64) -> Self {
        ShiftModel { size, b0, scale }
    }

    pub fn shift(&self) -> CMatrix {
        CMatrix::from_fn(self.size, self.size, |i, j| if i == j + 1 { c(1.0, 0.0) } else { c(0.0, 0.0) })
    }

    pub fn b(&self) -> CVector {
        let mut b = CVector::zeros(self.size);
        b[0] = c(self.b0[0] as f64, self.b0[1] as f64) * self.scale;
        b
    }

    fn lattice_norm_sq(&self) -> i64 {
        self.b0[0] * self.b0[0] + self.b0[1] * self.b0[1]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShiftRow {
    pub n: usize,
    /// ||b_n||^2 in Gaussian-integer arithmetic, before scaling.
    pub lattice_norm_sq: i64,
    /// lattice_norm_sq == n ||b0||^2.
    pub lattice_exact: bool,
    /// ||(I - V^n V*^n)^{-1/2} b_n||^2 computed inside the truncation.
    pub range_norm_sq: Option<f64>,
    /// n ||b||^2.
    pub formula: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShiftReport {
    pub rows: Vec<ShiftRow>,
    /// Relative deviation of <C C* K_xi, K_eta> from e^{||b||^2} <K_xi, K_eta>.
    pub gram_residual: f64,
    /// Norm of C* on the span of the sampled kernels.
    pub norm_estimate: f64,
    /// e^{||b||^2 / 2}.
    pub norm_target: f64,
    /// ||C^n||^{1/n} for n = 1..=n_max.
    pub iterate: Vec<f64>,
    pub verdict_norm: f64,
}

impl ShiftReport {
    pub fn estimate(&self) -> OracleEstimate {
        let index = self.rows.iter().map(|r| r.n).collect();
        let values = self.rows.iter().map(|r| r.range_norm_sq.unwrap_or(f64::INFINITY)).collect();
        OracleEstimate::new(index, values, BoundKind::TwoSided)
    }
}

/// Runs the shift model for n = 1..=n_max, with `points` random kernels
/// supported on the first T - 1 coordinates.
pub fn shift_model_run(
    model: &ShiftModel,
    n_max: usize,
    points: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<ShiftReport> {
    let t = model.size;
    if t <= n_max || t < 2 {
        return Err(Error::TruncationTooSmall { size: t, steps: n_max });
    }
    let v = model.shift();
    let b = model.b();
    let b_sq = b.norm_squared();
    let id = identity(t);

    let mut rows = Vec::with_capacity(n_max);
    let mut lattice = vec![[0i64; 2]; t];
    let mut b_n = CVector::zeros(t);
    let mut v_pow = id.clone();
    for n in 1..=n_max {
        // b_n = b_{n-1} + V^{n-1} b; in coordinates V^{n-1} b0 e_0 = b0 e_{n-1}.
        lattice[n - 1][0] += model.b0[0];
        lattice[n - 1][1] += model.b0[1];
        let lattice_norm_sq: i64 = lattice.iter().map(|z| z[0] * z[0] + z[1] * z[1]).sum();
        b_n += &v_pow * &b;
        v_pow = &v_pow * &v;
        let defect = &id - &v_pow * v_pow.adjoint();
        let m = range_membership(&defect, &b_n, RangeExponent::Half, tol)?;
        rows.push(ShiftRow {
            n,
            lattice_norm_sq,
            lattice_exact: lattice_norm_sq == n as i64 * model.lattice_norm_sq(),
            range_norm_sq: m.preimage.map(|w| w.norm_squared()),
            formula: n as f64 * b_sq,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<CVector> = (0..points)
        .map(|_| {
            let mut x = sample::gaussian_vector(&mut rng, t) * c(0.5 / (t as f64).sqrt(), 0.0);
            x[t - 1] = c(0.0, 0.0);
            x
        })
        .collect();
    let images: Vec<CVector> = xs.iter().map(|x| &v * x + &b).collect();
    let g = kernel_gram(&crate::phi_model::PhiSeries::exp(), &xs)?;
    let mut worst = 0.0f64;
    let mut size = 0.0f64;
    let v_adj = v.adjoint();
    for i in 0..points {
        for j in 0..points {
            // C C* K_xj = e^{<b, phi(xj)>} K_{V* phi(xj)}, evaluated at xi.
            let pulled = &v_adj * &images[j];
            let lhs = (images[j].dotc(&b) + pulled.dotc(&xs[i])).exp();
            let rhs = g[(i, j)] * b_sq.exp();
            worst = worst.max((lhs - rhs).norm());
            size = size.max(rhs.norm());
        }
    }
    let gram_residual = if size > 0.0 { worst / size } else { 0.0 };

    let g_phi = kernel_gram(&crate::phi_model::PhiSeries::exp(), &images)?;
    let w = psd_inverse_power(&g, 0.5, tol)?;
    let (vals, _) = hermitian_eigen(&(&w * g_phi * &w));
    let norm_estimate = vals.last().copied().unwrap_or(0.0).max(0.0).sqrt();

    let iterate = iterate_norm_curve(&v, &b, n_max, tol)?.into_iter().map(|p| p.value.unwrap_or(f64::INFINITY)).collect();
    let verdict_norm = verdict_affine_exp_in(&v, &b, Ambient::ShiftModel, tol)?.norm.value();
    Ok(ShiftReport { rows, gram_residual, norm_estimate, norm_target: (b_sq / 2.0).exp(), iterate, verdict_norm })
}

/// A e_n = alpha_n e_n with alpha_n in [0, 1] and |<b, e_n>|^2 given, n < count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagonalModel {
    /// 1 - alpha_n, kept directly to avoid cancellation near alpha_n = 1.
    pub deltas: Vec<f64>,
    /// |<b, e_n>|^2.
    pub coeff_sq: Vec<f64>,
    /// (x, y) when built from alpha_n = 1 - (n+1)^{-y}, |<b, e_n>|^2 = (n+1)^{-x}.
    pub params: Option<(f64, f64)>,
}

impl DiagonalModel {
    pub fn from_xy(x: f64, y: f64, count: usize) -> Result<Self> {
        if !(x > 1.0 && y > 0.0 && count >= 4) {
            return Err(Error::Parse(format!("diagonal model needs x > 1, y > 0, count >= 4 (got {x}, {y}, {count})")));
        }
        let deltas = (0..count).map(|n| ((n + 1) as f64).powf(-y)).collect();
        let coeff_sq = (0..count).map(|n| ((n + 1) as f64).powf(-x)).collect();
        Ok(DiagonalModel { deltas, coeff_sq, params: Some((x, y)) })
    }

    pub fn from_lists(alphas: &[f64], coeff_sq: &[f64]) -> Result<Self> {
        if alphas.len() != coeff_sq.len() || alphas.len() < 4 {
            return Err(Error::SizeMismatch(format!("{} diagonal entries vs {} coefficients", alphas.len(), coeff_sq.len())));
        }
        if alphas.iter().any(|a| !(0.0..=1.0).contains(a)) || coeff_sq.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Parse("diagonal entries must lie in [0, 1], coefficients must be finite and >= 0".into()));
        }
        Ok(DiagonalModel { deltas: alphas.iter().map(|a| 1.0 - a).collect(), coeff_sq: coeff_sq.to_vec(), params: None })
    }

    pub fn count(&self) -> usize {
        self.deltas.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagonalClass {
    NotInRange,
    InRangePsiDivergent,
    InRangePsiConvergent,
}

impl DiagonalClass {
    fn from_flags(in_range: bool, psi_divergent: bool) -> Self {
        match (in_range, psi_divergent) {
            (false, _) => DiagonalClass::NotInRange,
            (true, true) => DiagonalClass::InRangePsiDivergent,
            (true, false) => DiagonalClass::InRangePsiConvergent,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagonalReport {
    pub k: Vec<usize>,
    /// ||(I - A^{2k})^{-1/2} b_k||^2 over the truncation, k = 1..=k_max.
    pub partial_sums: Vec<f64>,
    pub monotone: bool,
    /// sum |b_n|^2 / (1 - alpha_n^2) over the truncation.
    pub range_sum: f64,
    /// Psi_b truncated: sum |b_n|^2 / (1 - alpha_n)^2.
    pub psi_sum: f64,
    /// Log-log slopes of the tails of the two series.
    pub range_slope: f64,
    pub psi_slope: f64,
    /// Numerical classification from the tail slopes.
    pub class: DiagonalClass,
    /// Classification read off from (x, y) when the model has parameters.
    pub region: Option<DiagonalClass>,
}

impl DiagonalReport {
    pub fn estimate(&self) -> OracleEstimate {
        OracleEstimate::new(self.k.clone(), self.partial_sums.clone(), BoundKind::Lower)
    }
}

/// Tail slopes at least this far below -1 count as summable.
const SLOPE_MARGIN: f64 = 1e-3;

/// Least-squares slope of ln t_n against ln(n+1) over the upper half of the terms.
fn tail_slope(terms: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = (terms.len() / 2..terms.len())
        .filter(|&n| terms[n] > 0.0)
        .map(|n| (((n + 1) as f64).ln(), terms[n].ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NEG_INFINITY;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Series with power-law tails: divergent iff the tail exponent is >= -1.
fn divergent(terms: &[f64]) -> (bool, f64) {
    if terms.iter().any(|t| t.is_infinite()) {
        return (true, f64::INFINITY);
    }
    let s = tail_slope(terms);
    (s >= -1.0 - SLOPE_MARGIN, s)
}

pub fn diagonal_model_run(model: &DiagonalModel, k_max: usize) -> DiagonalReport {
    let terms_for = |f: &dyn Fn(f64) -> f64| -> Vec<f64> {
        model
            .deltas
            .iter()
            .zip(&model.coeff_sq)
            .map(|(&d, &b2)| if b2 == 0.0 { 0.0 } else if d == 0.0 { f64::INFINITY } else { b2 * f(d) })
            .collect()
    };
    let range_terms = terms_for(&|d| 1.0 / (d * (2.0 - d)));
    let psi_terms = terms_for(&|d| 1.0 / (d * d));
    let (range_div, range_slope) = divergent(&range_terms);
    let (psi_div, psi_slope) = divergent(&psi_terms);

    let mut partial_sums = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let kf = k as f64;
        let s: f64 = model
            .deltas
            .iter()
            .zip(&model.coeff_sq)
            .filter(|(&d, _)| d > 0.0)
            .map(|(&d, &b2)| {
                let ln_alpha = (-d).ln_1p();
                let one_minus = -(kf * ln_alpha).exp_m1();
                let alpha_k = (kf * ln_alpha).exp();
                b2 * one_minus / (d * d * (1.0 + alpha_k))
            })
            .sum();
        partial_sums.push(s);
    }
    let monotone = partial_sums.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12));
    let region = model.params.map(|(x, y)| DiagonalClass::from_flags(x - y > 1.0, x - 2.0 * y <= 1.0));
    DiagonalReport {
        k: (1..=k_max).collect(),
        partial_sums,
        monotone,
        range_sum: range_terms.iter().sum(),
        psi_sum: psi_terms.iter().sum(),
        range_slope,
        psi_slope,
        class: DiagonalClass::from_flags(!range_div, psi_div),
        region,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{sab_chain, ProjectionChain};
    use crate::matrix_core::{diag_real, vector_real};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn shift_examples() {
        let model = ShiftModel::new(12, [1, 0], 1.0);
        let r = shift_model_run(&model, 10, 10, 3, &tol()).unwrap();
        assert_eq!(r.rows[0].lattice_norm_sq, 1);
        assert_eq!(r.rows[4].lattice_norm_sq, 5);
        assert!(r.rows.iter().all(|row| row.lattice_exact));
        for row in &r.rows {
            assert!((row.range_norm_sq.unwrap() - row.formula).abs() < 1e-10 * row.formula);
        }
        assert!(r.gram_residual <= 1e-9, "{}", r.gram_residual);
        assert!((r.norm_estimate / r.norm_target - 1.0).abs() < 0.02);
        assert!(r.iterate.iter().all(|v| (v - r.norm_target).abs() < 1e-10));
        assert!((r.verdict_norm - r.norm_target).abs() < 1e-12);
    }

    #[test]
    fn shift_with_gaussian_integer_and_scale() {
        let model = ShiftModel::new(14, [1, -2], 0.3);
        let r = shift_model_run(&model, 10, 8, 4, &tol()).unwrap();
        assert_eq!(r.rows[9].lattice_norm_sq, 50);
        assert!(r.rows.iter().all(|row| row.lattice_exact));
        assert!((r.norm_estimate / r.norm_target - 1.0).abs() < 1e-6);
    }

    #[test]
    fn shift_needs_room() {
        let err = shift_model_run(&ShiftModel::new(10, [1, 0], 1.0), 10, 4, 0, &tol()).unwrap_err();
        assert_eq!(err.code(), "TRUNCATION_TOO_SMALL");
    }

    #[test]
    fn diagonal_regions() {
        for (x, y, want) in [
            (1.5, 1.0, DiagonalClass::NotInRange),
            (2.5, 1.0, DiagonalClass::InRangePsiDivergent),
            (3.0, 1.0, DiagonalClass::InRangePsiDivergent),
            (4.0, 1.0, DiagonalClass::InRangePsiConvergent),
        ] {
            let r = diagonal_model_run(&DiagonalModel::from_xy(x, y, 100_000).unwrap(), 30);
            assert_eq!(r.class, want, "({x}, {y}) slopes {} {}", r.range_slope, r.psi_slope);
            assert_eq!(r.region, Some(want));
            assert!(r.monotone);
            assert!(*r.partial_sums.last().unwrap() <= r.psi_sum);
        }
    }

    #[test]
    fn partial_sums_match_direct_range_norms() {
        let model = DiagonalModel::from_xy(3.0, 1.0, 12).unwrap();
        let r = diagonal_model_run(&model, 6);
        let alphas: Vec<f64> = model.deltas.iter().map(|d| 1.0 - d).collect();
        let b = vector_real(&model.coeff_sq.iter().map(|v| v.sqrt()).collect::<Vec<_>>());
        let a = diag_real(&alphas);
        let id = identity(12);
        let mut a_pow = id.clone();
        let mut b_k = CVector::zeros(12);
        for k in 1..=6 {
            b_k += &a_pow * &b;
            a_pow = &a_pow * &a;
            let defect = &id - &a_pow * &a_pow;
            let w = range_membership(&defect, &b_k, RangeExponent::Half, &tol()).unwrap().preimage.unwrap();
            assert!((w.norm_squared() - r.partial_sums[k - 1]).abs() < 1e-10 * r.partial_sums[k - 1]);
        }
        // The projection-chain supremum on the same truncation converges.
        let s = sab_chain(&a, &b, &ProjectionChain::coordinate(12), &tol()).unwrap();
        assert!(s.monotone && s.limit_matches && s.limit.is_finite());
    }

    #[test]
    fn explicit_lists() {
        assert!(DiagonalModel::from_lists(&[0.5, 1.2, 0.0, 0.0], &[1.0; 4]).is_err());
        let m = DiagonalModel::from_lists(&[0.0, 0.5, 1.0, 0.5], &[1.0, 1.0, 1.0, 1.0]).unwrap();
        let r = diagonal_model_run(&m, 3);
        assert_eq!(r.class, DiagonalClass::NotInRange);
        assert!(DiagonalModel::from_xy(0.5, 1.0, 10).is_err());
    }
}
