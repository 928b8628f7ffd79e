//! Exact rational arithmetic helpers.
//!
//! All model probabilities and feasibility decisions run on arbitrary
//! precision rationals; floating point only enters in the value-iteration
//! loop, after every structural decision has been made exactly.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

/// Builds a rational from an integer numerator/denominator pair.
///
/// Panics if `den` is zero.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_int(num: i64) -> Rational {
    Rational::from(BigInt::from(num))
}

/// Renders `r` as `n` or `n/d`, the same shape the model grammar accepts.
pub fn rat_to_string(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `n` or `n/d` (optionally negative) into a rational.
pub fn rat_from_str(s: &str) -> Option<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                None
            } else {
                Some(Rational::new(n, d))
            }
        }
        None => {
            let n: BigInt = s.parse().ok()?;
            Some(Rational::from(n))
        }
    }
}

/// Nearest-f64 conversion, saturating at the f64 range instead of
/// returning infinities (huge exact bounds must stay usable as iteration
/// start values).
pub fn rat_to_f64_saturating(r: &Rational) -> f64 {
    match r.to_f64() {
        Some(f) if f.is_finite() => f,
        _ => {
            if r.is_negative() {
                f64::MIN
            } else {
                f64::MAX
            }
        }
    }
}

/// Exact rational with the same value as the (finite) float.
pub fn rat_from_f64(f: f64) -> Rational {
    Rational::from_float(f).expect("finite float")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn string_round_trip() {
        for s in ["0", "1", "17/20", "-3/4", "9/10"] {
            let r = rat_from_str(s).unwrap();
            assert_eq!(rat_to_string(&r), s);
        }
    }

    #[test]
    fn reduces_on_parse() {
        assert_eq!(rat_from_str("2/4"), Some(rat(1, 2)));
        assert_eq!(rat_from_str("4/2"), Some(rat_int(2)));
    }

    #[test]
    fn rejects_zero_denominator() {
        assert_eq!(rat_from_str("1/0"), None);
    }

    #[test]
    fn saturating_conversion() {
        let huge = rat_int(10).pow(400);
        assert_eq!(rat_to_f64_saturating(&huge), f64::MAX);
        assert_eq!(rat_to_f64_saturating(&rat(1, 2)), 0.5);
    }
}
