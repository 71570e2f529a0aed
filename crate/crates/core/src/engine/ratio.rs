//! Threshold and competitive-ratio formulas.
//!
//! The float versions serve reporting; the exact versions feed decisions and
//! exact invariant checks.

use num::{BigInt, BigRational, One, Signed, Zero};

use crate::error::{BuybackError, Result};

/// Ratio-minimizing threshold `r = (1+f)(1 + sqrt(1 - 1/(k(1+f))))`.
pub fn optimal_r(k: usize, f: f64) -> f64 {
    let a = k as f64 * (1.0 + f);
    (1.0 + f) * (1.0 + (1.0 - 1.0 / a).max(0.0).sqrt())
}

/// `c = (k r - 1) r / (r - 1 - f)`, defined for `r > 1 + f`.
pub fn competitive_ratio(k: usize, f: f64, r: f64) -> Result<f64> {
    if r <= 1.0 + f || r.is_nan() {
        return Err(BuybackError::Domain(format!("need r > 1 + f, got r = {r}, f = {f}")));
    }
    Ok((k as f64 * r - 1.0) * r / (r - 1.0 - f))
}

/// Closed form of the ratio at the optimal threshold: `k(1+f)(1 + sqrt(1 - 1/(k(1+f))))^2`.
pub fn optimal_competitive_ratio(k: usize, f: f64) -> f64 {
    let a = k as f64 * (1.0 + f);
    let s = 1.0 + (1.0 - 1.0 / a).max(0.0).sqrt();
    a * s * s
}

/// Single-element ratio `1 + 2f + 2 sqrt(f(1+f))`.
pub fn single_item_ratio(f: f64) -> f64 {
    1.0 + 2.0 * f + 2.0 * (f * (1.0 + f)).sqrt()
}

fn ceil_sqrt(n: &BigInt) -> BigInt {
    let s = n.sqrt();
    if &(&s * &s) < n {
        s + 1
    } else {
        s
    }
}

/// Rational upper approximation of [`optimal_r`], at most `1e-12` above the true value.
///
/// Rounding up can only make the acceptance test stricter.
pub fn optimal_r_rational(k: usize, f: &BigRational) -> BigRational {
    let one_plus_f = BigRational::one() + f;
    let a = BigRational::from_integer(BigInt::from(k)) * &one_plus_f;
    if a <= BigRational::one() {
        return one_plus_f;
    }
    let inner = BigRational::one() - a.recip();
    // D = 10^15 * ceil(1 + f) keeps the absolute error of (1+f) * m / D below 1e-12.
    let scale = BigInt::from(10u64).pow(15) * one_plus_f.ceil().to_integer();
    let target = inner * BigRational::from_integer(&scale * &scale);
    let m = ceil_sqrt(&target.ceil().to_integer());
    one_plus_f * (BigRational::one() + BigRational::new(m, scale))
}

/// Exact `(k r - 1) r / (r - 1 - f)`.
pub fn competitive_ratio_exact(k: usize, f: &BigRational, r: &BigRational) -> Result<BigRational> {
    let denom = r - BigRational::one() - f;
    if !denom.is_positive() {
        return Err(BuybackError::Domain(format!("need r > 1 + f, got r = {r}, f = {f}")));
    }
    let k = BigRational::from_integer(BigInt::from(k));
    Ok((k * r - BigRational::one()) * r / denom)
}

/// Exact weight bound factor `(k r - 1) r / (r - 1)` relating `w(S(n))` to `w(OPT)`.
pub fn final_weight_factor(k: usize, r: &BigRational) -> Result<BigRational> {
    competitive_ratio_exact(k, &BigRational::zero(), r)
}

/// Exact `(k - 1) r^2 / (r - 1)`, the charge cap for deleted elements.
pub fn deleted_charge_factor(k: usize, r: &BigRational) -> Result<BigRational> {
    let denom = r - BigRational::one();
    if !denom.is_positive() {
        return Err(BuybackError::Domain(format!("need r > 1, got r = {r}")));
    }
    let k1 = BigRational::from_integer(BigInt::from(k) - 1);
    Ok(k1 * r * r / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weight::{parse_ratio, ratio_to_f64};

    #[test]
    fn optimal_threshold_values() {
        assert!((optimal_r(2, 0.0) - (1.0 + 0.5f64.sqrt())).abs() < 1e-15);
        assert!((optimal_r(2, 0.0) - 1.70711).abs() < 1e-5);
        assert_eq!(optimal_r(1, 0.0), 1.0);
        assert!((optimal_r(1, 1.0) - 2.0 * (1.0 + 0.5f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn ratio_values() {
        let c = competitive_ratio(2, 0.0, optimal_r(2, 0.0)).unwrap();
        assert!((c - (3.0 + 2.0 * 2f64.sqrt())).abs() < 1e-12);
        assert!((c - 5.82843).abs() < 1e-5);
        assert_eq!(competitive_ratio(1, 0.0, 2.0).unwrap(), 2.0);
        for f in [0.1, 0.5, 1.0, 2.0] {
            let c = competitive_ratio(1, f, optimal_r(1, f)).unwrap();
            assert!((c - single_item_ratio(f)).abs() < 1e-9, "f = {f}");
        }
    }

    #[test]
    fn closed_form_matches_formula_at_optimum() {
        for k in 1..=4 {
            for f in [0.1, 0.5, 1.0, 3.0] {
                let c = competitive_ratio(k, f, optimal_r(k, f)).unwrap();
                assert!((c - optimal_competitive_ratio(k, f)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn domain_error_at_or_below_one_plus_f() {
        assert!(competitive_ratio(2, 0.5, 1.5).is_err());
        assert!(competitive_ratio_exact(2, &parse_ratio("1/2").unwrap(), &parse_ratio("3/2").unwrap()).is_err());
    }

    #[test]
    fn rational_threshold_rounds_up_tightly() {
        for (k, f) in [(2usize, "0"), (1, "1"), (3, "1/2"), (2, "2"), (5, "0")] {
            let f = parse_ratio(f).unwrap();
            let exact = optimal_r_rational(k, &f);
            let float = optimal_r(k, ratio_to_f64(&f));
            let diff = ratio_to_f64(&exact) - float;
            assert!(diff > -1e-15 && diff < 1e-12, "k={k} f={f} diff={diff}");
            // r_up^2 bound: (r/(1+f) - 1)^2 >= 1 - 1/(k(1+f))
            let one = BigRational::one();
            let opf = &one + &f;
            let s = &exact / &opf - &one;
            let a = BigRational::from_integer(BigInt::from(k)) * &opf;
            assert!(&s * &s >= one - a.recip());
        }
        assert_eq!(optimal_r_rational(1, &BigRational::zero()), BigRational::one());
    }

    #[test]
    fn exact_ratio_matches_float() {
        let r = parse_ratio("17/10").unwrap();
        let c = competitive_ratio_exact(2, &BigRational::zero(), &r).unwrap();
        // (2*1.7 - 1) * 1.7 / 0.7 = 4.08 / 0.7
        assert_eq!(c, parse_ratio("408/70").unwrap());
        assert!((ratio_to_f64(&c) - 5.8286).abs() < 1e-4);
        assert_eq!(deleted_charge_factor(1, &r).unwrap(), BigRational::zero());
    }
}
