//! Integer and log-space combinatorics shared by the series model and the
//! multi-index machinery.

use std::sync::OnceLock;

const LN_TABLE_LEN: usize = 1024;

fn ln_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(LN_TABLE_LEN);
        let mut acc = 0.0f64;
        t.push(0.0);
        for k in 1..LN_TABLE_LEN {
            acc += (k as f64).ln();
            t.push(acc);
        }
        t
    })
}

/// ln(k!)
pub fn ln_factorial(k: usize) -> f64 {
    if k < LN_TABLE_LEN {
        ln_table()[k]
    } else {
        // Stirling series; far beyond any degree used here.
        let x = k as f64 + 1.0;
        (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * x)
    }
}

/// Exact k! when it fits in 128 bits (k <= 34).
pub fn factorial_u128(k: u32) -> Option<u128> {
    (1..=k as u128).try_fold(1u128, |acc, i| acc.checked_mul(i))
}

/// k! as a double; exact integer products up to 170, `inf` beyond.
pub fn factorial_f64(k: usize) -> f64 {
    if k > 170 {
        return f64::INFINITY;
    }
    (1..=k).fold(1.0f64, |acc, i| acc * i as f64)
}

/// Exact binomial coefficient, `None` on 64-bit overflow.
pub fn binomial(n: u64, k: u64) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

/// Exact multinomial coefficient |alpha|! / alpha!, `None` on 128-bit overflow.
///
/// Built as a product of binomials so intermediate values stay small.
pub fn multinomial(alpha: &[u32]) -> Option<u128> {
    let mut acc: u128 = 1;
    let mut running: u64 = 0;
    for &a in alpha {
        running += a as u64;
        let b = binomial(running, a as u64)? as u128;
        acc = acc.checked_mul(b)?;
    }
    Some(acc)
}

/// ln(|alpha|! / alpha!)
pub fn ln_multinomial(alpha: &[u32]) -> f64 {
    let n: usize = alpha.iter().map(|&a| a as usize).sum();
    ln_factorial(n) - alpha.iter().map(|&a| ln_factorial(a as usize)).sum::<f64>()
}

/// Multinomial coefficient as a double: the integer path when it fits, logs otherwise.
/// The two paths are cross-checked in debug builds.
pub fn multinomial_f64(alpha: &[u32]) -> f64 {
    match multinomial(alpha) {
        Some(v) => {
            let exact = v as f64;
            debug_assert!(
                (exact.ln() - ln_multinomial(alpha)).abs() <= 1e-9 * exact.ln().abs().max(1.0),
                "multinomial integer/log mismatch for {alpha:?}"
            );
            exact
        }
        None => ln_multinomial(alpha).exp(),
    }
}

pub fn gcd(a: u64, b: u64) -> u64 {
    let (mut a, mut b) = (a, b);
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}
