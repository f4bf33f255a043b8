//! Security calculators: the hypergeometric committee-failure tail, its
//! exponential bound, the partial-set failure term and a Monte-Carlo
//! cross-check.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::factorial::ln_binomial;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DomainError {
    #[error("need 0 <= t <= n and 1 <= c <= n, got n={n} t={t} c={c}")]
    Parameters { n: u64, t: u64, c: u64 },
    #[error("at least one trial is required")]
    NoTrials,
    #[error("fraction must lie in [0, 1] and lambda must be at least 1")]
    PartialSet,
}

fn check(n: u64, t: u64, c: u64) -> Result<(), DomainError> {
    if t > n || c == 0 || c > n {
        return Err(DomainError::Parameters { n, t, c });
    }
    Ok(())
}

/// Smallest corrupted count that breaks a committee of size c: ⌈c/2⌉.
pub fn failure_threshold(c: u64) -> u64 {
    c.div_ceil(2)
}

/// Pr[X ≥ ⌈c/2⌉] for X ~ Hypergeometric(n, t, c), in floating point.
///
/// The first non-zero term is evaluated with log-binomials and the remaining
/// terms by the ratio recurrence, so no factorial is ever formed.
pub fn hypergeom_tail(n: u64, t: u64, c: u64) -> Result<f64, DomainError> {
    check(n, t, c)?;
    let lo = failure_threshold(c).max(c.saturating_sub(n - t));
    let hi = c.min(t);
    if lo > hi {
        return Ok(0.0);
    }
    let ln_term = ln_binomial(t, lo) + ln_binomial(n - t, c - lo) - ln_binomial(n, c);
    let mut term = ln_term.exp();
    let mut sum = term;
    for x in lo..hi {
        let (xf, tf, cf, nf) = (x as f64, t as f64, c as f64, n as f64);
        term *= (tf - xf) * (cf - xf) / ((xf + 1.0) * (nf - tf - cf + xf + 1.0));
        sum += term;
    }
    Ok(sum.min(1.0))
}

fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Exact rational value of the tail as (numerator, denominator).
pub fn hypergeom_tail_exact(n: u64, t: u64, c: u64) -> Result<(BigUint, BigUint), DomainError> {
    check(n, t, c)?;
    let mut num = BigUint::zero();
    for x in failure_threshold(c)..=c.min(t) {
        num += binomial(t, x) * binomial(n - t, c - x);
    }
    Ok((num, binomial(n, c)))
}

/// num / den as the nearest double, for values far outside the f64 range of
/// the operands themselves.
pub fn ratio_to_f64(num: &BigUint, den: &BigUint) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    let shift = (den.bits() as i64 - num.bits() as i64 + 64).max(0) as u32;
    let q = (num << shift) / den;
    let mantissa = q.to_f64().unwrap_or(f64::INFINITY);
    mantissa * 2f64.powi(-(shift as i32))
}

/// True iff num / den < a / b, decided in integers.
pub fn ratio_less_than(num: &BigUint, den: &BigUint, a: &BigUint, b: &BigUint) -> bool {
    num * b < den * a
}

/// e^{−c/12}.
pub fn chernoff_bound(c: f64) -> f64 {
    (-c / 12.0).exp()
}

/// f^λ: every partial-set member corrupted.
pub fn partial_set_failure(f: f64, lambda: u32) -> Result<f64, DomainError> {
    if !(0.0..=1.0).contains(&f) || lambda == 0 {
        return Err(DomainError::PartialSet);
    }
    Ok(f.powi(lambda as i32))
}

/// (p/q)^λ as an exact fraction.
pub fn partial_set_failure_exact(p: u64, q: u64, lambda: u32) -> Result<(BigUint, BigUint), DomainError> {
    if q == 0 || p > q || lambda == 0 {
        return Err(DomainError::PartialSet);
    }
    Ok((BigUint::from(p).pow(lambda), BigUint::from(q).pow(lambda)))
}

/// Union bound over m committees: m(e^{−c/12} + (1/3)^λ).
pub fn round_failure(m: u32, c: f64, lambda: u32) -> f64 {
    m as f64 * (chernoff_bound(c) + (1.0f64 / 3.0).powi(lambda as i32))
}

/// Fraction of `trials` random committees (drawn without replacement) that
/// contain at least ⌈c/2⌉ of the t corrupted nodes.
pub fn monte_carlo_committee(n: u64, t: u64, c: u64, trials: u64, seed: u64) -> Result<f64, DomainError> {
    check(n, t, c)?;
    if trials == 0 {
        return Err(DomainError::NoTrials);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let need = failure_threshold(c);
    let mut failures = 0u64;
    for _ in 0..trials {
        let (mut left_n, mut left_t, mut bad) = (n, t, 0u64);
        for _ in 0..c {
            if rng.gen_range(0..left_n) < left_t {
                bad += 1;
                left_t -= 1;
            }
            left_n -= 1;
        }
        if bad >= need {
            failures += 1;
        }
    }
    Ok(failures as f64 / trials as f64)
}

/// Committee sizes of the failure-probability figure: 30, 60, ..., 300.
pub fn figure_sizes() -> Vec<u64> {
    (1..=10).map(|i| 30 * i).collect()
}

/// CSV with header `c,exact_tail,chernoff_bound` for each committee size.
pub fn failure_sweep_csv(n: u64, t: u64, sizes: &[u64]) -> Result<String, DomainError> {
    let mut out = String::from("c,exact_tail,chernoff_bound\n");
    for &c in sizes {
        let exact = hypergeom_tail(n, t, c)?;
        out.push_str(&format!("{c},{exact:.6e},{:.6e}\n", chernoff_bound(c as f64)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_case_matches_enumeration() {
        // All 20 three-subsets of six nodes, two of them corrupted: the four
        // subsets holding both corrupted nodes fail.
        let p = hypergeom_tail(6, 2, 3).unwrap();
        assert!((p - 0.2).abs() < 1e-15);
        let (num, den) = hypergeom_tail_exact(6, 2, 3).unwrap();
        assert_eq!(num * 5u32, den);
    }

    #[test]
    fn boundaries() {
        assert_eq!(hypergeom_tail(100, 0, 10).unwrap(), 0.0);
        assert_eq!(hypergeom_tail(100, 100, 10).unwrap(), 1.0);
        assert!(hypergeom_tail(10, 11, 3).is_err());
        assert!(hypergeom_tail(10, 3, 0).is_err());
        assert!(monte_carlo_committee(60, 20, 10, 0, 1).is_err());
        assert_eq!(monte_carlo_committee(60, 0, 10, 1000, 1).unwrap(), 0.0);
    }

    #[test]
    fn float_and_exact_modes_agree() {
        for &(n, t, c) in &[(2000, 666, 240), (600, 199, 90), (60, 20, 10), (2000, 665, 30)] {
            let f = hypergeom_tail(n, t, c).unwrap();
            let (num, den) = hypergeom_tail_exact(n, t, c).unwrap();
            let e = ratio_to_f64(&num, &den);
            assert!(((f - e) / e).abs() < 1e-9, "n={n} t={t} c={c}: {f} vs {e}");
        }
    }

    #[test]
    fn known_tail_value() {
        // Independent exact-fraction evaluation.
        let p = hypergeom_tail(2000, 666, 240).unwrap();
        assert!((p / 8.531_120_557_374_039e-9 - 1.0).abs() < 1e-9, "{p}");
        let p = hypergeom_tail(60, 20, 10).unwrap();
        assert!((p / 0.193_849_436_882_861_02 - 1.0).abs() < 1e-12, "{p}");
    }

    #[test]
    fn chernoff_values() {
        assert!((chernoff_bound(240.0) - 2.061_153_622_438_558e-9).abs() < 1e-20);
        assert!((chernoff_bound(12.0) - 0.367_879_441_171_442_3).abs() < 1e-15);
    }

    #[test]
    fn partial_set_terms() {
        let (num, den) = partial_set_failure_exact(1, 3, 40).unwrap();
        let ten20 = BigUint::from(10u32).pow(20);
        // 3^-40 = 8.2253e-20 sits between 8e-20 and 9e-20.
        assert!(!ratio_less_than(&num, &den, &BigUint::from(8u32), &ten20));
        assert!(ratio_less_than(&num, &den, &BigUint::from(9u32), &ten20));
        assert!((ratio_to_f64(&num, &den) / 8.225_263_339_969_959e-20 - 1.0).abs() < 1e-12);
        assert_eq!(partial_set_failure(1.0 / 3.0, 1).unwrap(), 1.0 / 3.0);
        assert!(partial_set_failure(1.5, 2).is_err());
        let union = 20.0 * partial_set_failure(1.0 / 3.0, 40).unwrap();
        assert!(union <= 2e-18);
        let r = round_failure(20, 240.0, 40);
        assert!((r - 20.0 * (chernoff_bound(240.0) + union / 20.0)).abs() < 1e-24);
        // Below 20 committees of 240 the bound-based union stays under 5e-8.
        assert!(r <= 5e-8);
    }

    #[test]
    fn sweep_csv_shape() {
        let csv = failure_sweep_csv(2000, 666, &figure_sizes()).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "c,exact_tail,chernoff_bound");
        assert_eq!(lines.len(), 11);
    }

    #[test]
    fn monte_carlo_is_close_on_a_small_case() {
        let exact = hypergeom_tail(60, 20, 10).unwrap();
        let trials = 100_000;
        let mc = monte_carlo_committee(60, 20, 10, trials, 5).unwrap();
        let sd = (exact * (1.0 - exact) / trials as f64).sqrt();
        assert!((mc - exact).abs() < 4.0 * sd, "mc {mc} exact {exact}");
    }
}
