//! Admissible entire functions with nonnegative Taylor coefficients.
//!
//! A [`PhiSeries`] stores a finite head `a_0..a_M` together with a tail
//! descriptor. Three tails exist: none (a polynomial), the exponential tail
//! `a_k = 1/k!` for `k > M`, and a geometric bound `a_k <= a_M rho^(k-M)`.
//! Everything downstream (support, zero order, pole order, the order of the
//! root-of-unity group) is derived once at construction.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::combinatorics::{factorial_f64, gcd, ln_factorial};
use crate::error::{Error, Result};

/// Nonnegative extended real: a finite value or `+inf`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct ExtReal(f64);

impl ExtReal {
    pub const INFINITY: ExtReal = ExtReal(f64::INFINITY);
    pub const ZERO: ExtReal = ExtReal(0.0);

    /// Panics on negative or NaN input.
    pub fn new(v: f64) -> Self {
        assert!(v >= 0.0, "extended real must be nonnegative, got {v}");
        ExtReal(v)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    pub fn finite(self) -> Option<f64> {
        self.0.is_finite().then_some(self.0)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_finite() {
            write!(f, "{}", self.0)
        } else {
            f.write_str("inf")
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str("inf")
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) if v >= 0.0 => Ok(ExtReal(v)),
            Raw::Str(s) if s == "inf" => Ok(ExtReal::INFINITY),
            _ => Err(serde::de::Error::custom("expected nonnegative number or \"inf\"")),
        }
    }
}

/// Supremum of the support: a finite degree or infinity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Degree {
    Finite(u64),
    Infinite,
}

impl Degree {
    pub fn is_finite(self) -> bool {
        matches!(self, Degree::Finite(_))
    }
}

impl fmt::Display for Degree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Degree::Finite(n) => write!(f, "{n}"),
            Degree::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum Tail {
    /// Polynomial: all coefficients past the head vanish.
    None,
    /// `a_k = 1/k!` for every `k` past the head.
    Exp,
    /// `a_k <= a_M * ratio^(k - M)` past the head; the actual values are unknown.
    GeometricBound { ratio: f64 },
}

/// JSON descriptor of a series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhiDescriptor {
    Exp,
    Monomial { degree: usize },
    ZExp,
    Cosh,
    Taylor {
        coeffs: Vec<f64>,
        #[serde(default)]
        tail: Option<Tail>,
    },
    Moments { moments: Vec<f64> },
}

/// Head length used for the built-in transcendental series with a geometric tail.
pub const DEFAULT_HEAD: usize = 64;

/// Relative accuracy requested from [`PhiSeries::eval`] unless overridden.
pub const DEFAULT_EVAL_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhiSeries {
    label: String,
    head: Vec<f64>,
    tail: Tail,
    support: Vec<usize>,
    m: usize,
    n_sup: Degree,
    gcd_order: u64,
}

/// A real evaluation with a certified absolute error bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhiValue {
    pub value: f64,
    pub error_bound: f64,
}

impl PhiSeries {
    /// Validates a head + tail and derives the combinatorial data.
    pub fn from_parts(label: impl Into<String>, head: Vec<f64>, tail: Tail) -> Result<Self> {
        if head.is_empty() && tail != Tail::Exp {
            return Err(Error::NotInF("empty coefficient list".into()));
        }
        if let Some((k, v)) = head.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::NotInF(format!("coefficient a_{k} = {v} is not a nonnegative real")));
        }
        if let Tail::GeometricBound { ratio } = tail {
            if !(ratio.is_finite() && ratio > 0.0) {
                return Err(Error::NotInF(format!("geometric tail ratio {ratio} must be positive")));
            }
        }
        let mut support: Vec<usize> = head.iter().enumerate().filter(|(_, v)| **v > 0.0).map(|(k, _)| k).collect();
        let tail_has_mass = matches!(tail, Tail::Exp);
        let has_positive_degree = support.iter().any(|&k| k >= 1) || tail_has_mass;
        if !has_positive_degree {
            return Err(Error::NotInF("every coefficient of positive degree vanishes".into()));
        }
        let big_m = head.len();
        // The exponential tail makes every index past the head present.
        if tail_has_mass {
            support.push(big_m);
        }
        let m = support[0];
        let n_sup = match tail {
            Tail::None => Degree::Finite(*support.last().unwrap() as u64),
            Tail::Exp | Tail::GeometricBound { .. } => Degree::Infinite,
        };
        let mut g = support.iter().filter(|&&k| k > 0).fold(0u64, |acc, &k| gcd(acc, k as u64));
        if tail_has_mass {
            g = gcd(g, big_m as u64 + 1);
        }
        if tail_has_mass {
            support.pop();
        }
        Ok(PhiSeries { label: label.into(), head, tail, support, m, n_sup, gcd_order: g })
    }

    /// exp(z): a_k = 1/k!.
    pub fn exp() -> Self {
        Self::from_parts("exp", vec![1.0], Tail::Exp).expect("exp is admissible")
    }

    /// z^n, n >= 1.
    pub fn monomial(n: usize) -> Result<Self> {
        let mut head = vec![0.0; n + 1];
        head[n] = 1.0;
        Self::from_parts(format!("z^{n}"), head, Tail::None)
    }

    /// z e^z: a_k = 1/(k-1)! for k >= 1, stored to [`DEFAULT_HEAD`] with a geometric tail.
    pub fn z_exp() -> Self {
        let m = DEFAULT_HEAD;
        let head: Vec<f64> = (0..=m).map(|k| if k == 0 { 0.0 } else { 1.0 / factorial_f64(k - 1) }).collect();
        Self::from_parts("z_exp", head, Tail::GeometricBound { ratio: 1.0 / m as f64 }).expect("z e^z is admissible")
    }

    /// cosh(z): a_{2k} = 1/(2k)!, stored to [`DEFAULT_HEAD`] with a geometric tail.
    pub fn cosh() -> Self {
        let m = DEFAULT_HEAD;
        let head: Vec<f64> = (0..=m).map(|k| if k % 2 == 0 { 1.0 / factorial_f64(k) } else { 0.0 }).collect();
        Self::from_parts("cosh", head, Tail::GeometricBound { ratio: 1.0 / (m as f64 + 1.0) })
            .expect("cosh is admissible")
    }

    pub fn taylor(coeffs: Vec<f64>) -> Result<Self> {
        Self::from_parts("taylor", coeffs, Tail::None)
    }

    /// a_n = 1 / moment_n with moment_n the 2n-th moment of a measure on the line.
    pub fn moments(moments: &[f64]) -> Result<Self> {
        if moments.is_empty() {
            return Err(Error::NotInF("empty moment list".into()));
        }
        for (index, &value) in moments.iter().enumerate() {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::NonpositiveMoment { index, value });
            }
        }
        Self::from_parts("moments", moments.iter().map(|m| 1.0 / m).collect(), Tail::None)
    }

    pub fn from_descriptor(desc: &PhiDescriptor) -> Result<Self> {
        match desc {
            PhiDescriptor::Exp => Ok(Self::exp()),
            PhiDescriptor::Monomial { degree } => Self::monomial(*degree),
            PhiDescriptor::ZExp => Ok(Self::z_exp()),
            PhiDescriptor::Cosh => Ok(Self::cosh()),
            PhiDescriptor::Taylor { coeffs, tail } => {
                Self::from_parts("taylor", coeffs.clone(), tail.unwrap_or(Tail::None))
            }
            PhiDescriptor::Moments { moments } => Self::moments(moments),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn tail(&self) -> Tail {
        self.tail
    }

    /// Stored coefficients a_0..a_M.
    pub fn head(&self) -> &[f64] {
        &self.head
    }

    /// Listed support indices (the infinite part of an exponential tail is implicit).
    pub fn listed_support(&self) -> &[usize] {
        &self.support
    }

    pub fn zero_order(&self) -> usize {
        self.m
    }

    pub fn pole_order(&self) -> Degree {
        self.n_sup
    }

    /// Order of the group of roots of unity shared by every positive supported degree.
    pub fn gcd_order(&self) -> u64 {
        self.gcd_order
    }

    pub fn is_exp(&self) -> bool {
        self.tail == Tail::Exp
            && self.head.iter().enumerate().all(|(k, &a)| (a - 1.0 / factorial_f64(k)).abs() <= 1e-15 * a.max(1e-300))
    }

    pub fn at_zero(&self) -> f64 {
        self.head.first().copied().unwrap_or(1.0)
    }

    /// a_k, or an error if k lies in a tail known only through a bound.
    pub fn coeff(&self, k: usize) -> Result<f64> {
        if k < self.head.len() {
            return Ok(self.head[k]);
        }
        match self.tail {
            Tail::None => Ok(0.0),
            Tail::Exp => Ok((-ln_factorial(k)).exp()),
            Tail::GeometricBound { .. } => Err(Error::TailNotBounded { at: f64::NAN }),
        }
    }

    /// k is in the support.
    pub fn in_support(&self, k: usize) -> bool {
        if k < self.head.len() {
            self.head[k] > 0.0
        } else {
            matches!(self.tail, Tail::Exp)
        }
    }

    /// Degrees of the support in [0, n].
    pub fn support_up_to(&self, n: usize) -> Result<Vec<usize>> {
        if n >= self.head.len() {
            if let Tail::GeometricBound { .. } = self.tail {
                return Err(Error::TailNotBounded { at: f64::NAN });
            }
        }
        Ok((0..=n).filter(|&k| self.in_support(k)).collect())
    }

    /// Phi(x) for x >= 0 with relative accuracy [`DEFAULT_EVAL_TOL`].
    pub fn eval(&self, x: f64) -> Result<PhiValue> {
        self.eval_with_tol(x, DEFAULT_EVAL_TOL)
    }

    pub fn eval_with_tol(&self, x: f64, rel_tol: f64) -> Result<PhiValue> {
        assert!(x >= 0.0, "real evaluation requires x >= 0");
        let head_sum = self.head.iter().rev().fold(0.0, |acc, &a| acc * x + a);
        let head_err = f64::EPSILON * self.head.len() as f64 * head_sum;
        let big_m = self.head.len();
        let (value, tail_err) = match self.tail {
            Tail::None => (head_sum, 0.0),
            Tail::Exp => {
                let (t, e) = exp_tail_real(x, big_m);
                (head_sum + t, e)
            }
            Tail::GeometricBound { ratio } => {
                let q = ratio * x;
                if q >= 1.0 {
                    return Err(Error::TailNotBounded { at: x });
                }
                let last = self.head[big_m - 1] * x.powi(big_m as i32 - 1);
                (head_sum, last * q / (1.0 - q))
            }
        };
        let error_bound = head_err + tail_err;
        if error_bound > rel_tol * value.abs().max(f64::MIN_POSITIVE) {
            return Err(Error::TailNotBounded { at: x });
        }
        Ok(PhiValue { value, error_bound })
    }

    /// Phi(z) for complex z by power-series summation. The absolute error is
    /// controlled relative to Phi(|z|), which bounds every partial sum.
    pub fn eval_complex(&self, z: Complex64) -> Result<Complex64> {
        let r = z.norm();
        let head_sum = self.head.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a);
        let big_m = self.head.len();
        match self.tail {
            Tail::None => Ok(head_sum),
            Tail::Exp => Ok(head_sum + exp_tail_complex(z, big_m)),
            Tail::GeometricBound { ratio } => {
                let q = ratio * r;
                if q >= 1.0 {
                    return Err(Error::TailNotBounded { at: r });
                }
                let scale = self.eval_with_tol(r, f64::INFINITY)?.value;
                let last = self.head[big_m - 1] * r.powi(big_m as i32 - 1);
                if last * q / (1.0 - q) > DEFAULT_EVAL_TOL * scale.max(1.0) {
                    return Err(Error::TailNotBounded { at: r });
                }
                Ok(head_sum)
            }
        }
    }
}

/// sum_{k >= start} x^k / k! with a certified remainder bound.
fn exp_tail_real(x: f64, start: usize) -> (f64, f64) {
    if x == 0.0 {
        return (if start == 0 { 1.0 } else { 0.0 }, 0.0);
    }
    let mut k = start;
    let mut term = (k as f64 * x.ln() - ln_factorial(k)).exp();
    let mut sum = 0.0;
    loop {
        sum += term;
        let ratio = x / (k as f64 + 1.0);
        let next = term * ratio;
        if ratio < 0.5 && next <= f64::EPSILON * sum {
            // Remaining terms decay at least geometrically with `ratio`.
            return (sum, next / (1.0 - ratio) + f64::EPSILON * sum * (k - start + 1) as f64);
        }
        term = next;
        k += 1;
    }
}

fn exp_tail_complex(z: Complex64, start: usize) -> Complex64 {
    let r = z.norm();
    if r == 0.0 {
        return if start == 0 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
    }
    if start == 0 {
        return z.exp();
    }
    let mut k = start;
    let mut term = Complex64::from_polar((k as f64 * r.ln() - ln_factorial(k)).exp(), k as f64 * z.arg());
    let mut sum = Complex64::new(0.0, 0.0);
    let mut abs_sum = 0.0;
    loop {
        sum += term;
        abs_sum += term.norm();
        let ratio = r / (k as f64 + 1.0);
        let next = term * z / (k as f64 + 1.0);
        if ratio < 0.5 && next.norm() <= f64::EPSILON * abs_sum {
            return sum;
        }
        term = next;
        k += 1;
    }
}

/// q_{m,n}(theta) = theta^m max{1, theta^(n-m)} with theta^inf = inf on (1, inf),
/// 0 on [0, 1), and 1^inf = 1.
pub fn q_value(m: u64, n: Degree, theta: f64) -> Result<ExtReal> {
    assert!(theta >= 0.0, "q_value needs theta >= 0");
    let lead = if m == 0 { 1.0 } else { theta.powf(m as f64) };
    let tail_power = match n {
        Degree::Finite(n) => {
            if m > n {
                return Err(Error::MGreaterThanN { m, n });
            }
            if n == m {
                1.0
            } else {
                theta.powf((n - m) as f64)
            }
        }
        Degree::Infinite => {
            if theta > 1.0 {
                f64::INFINITY
            } else if theta < 1.0 {
                0.0
            } else {
                1.0
            }
        }
    };
    let v = lead * tail_power.max(1.0);
    Ok(ExtReal::new(if v.is_nan() { f64::INFINITY } else { v }))
}

/// Order of the group of common roots of unity for the support.
pub fn gcd_group_order(phi: &PhiSeries) -> u64 {
    phi.gcd_order()
}
