//! Exact rational scalars used throughout the crate.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::{One, Signed, Zero};

/// Arbitrary-precision rational number.
pub type Rat = BigRational;

/// Rational from an integer.
pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Rational `n / d`.
pub fn ratio(n: i64, d: i64) -> Rat {
    assert!(d != 0, "zero denominator");
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// `n!` as a rational.
pub fn factorial(n: usize) -> Rat {
    let mut acc = BigInt::one();
    for k in 2..=n {
        acc *= BigInt::from(k);
    }
    Rat::from_integer(acc)
}

/// Parses a rational from its decimal string form, e.g. `"-2"` or `"1/2"`.
pub fn parse_rat(s: &str) -> Result<Rat, String> {
    let s = s.trim();
    let mk = |t: &str| -> Result<BigInt, String> {
        t.parse::<BigInt>().map_err(|_| format!("bad integer `{t}`"))
    };
    match s.split_once('/') {
        Some((n, d)) => {
            let den = mk(d.trim())?;
            if den.is_zero() {
                return Err(format!("zero denominator in `{s}`"));
            }
            Ok(Rat::new(mk(n.trim())?, den))
        }
        None => Ok(Rat::from_integer(mk(s)?)),
    }
}

/// Nearest f64 to an exact rational. Good enough for the numeric oracles and
/// the Monte-Carlo comparisons, which all work at tolerances far above 1e-15.
pub fn to_f64(x: &Rat) -> f64 {
    let num = x.numer();
    let den = x.denom();
    // Scale down big operands so the conversion cannot overflow.
    let digits = num.abs().to_string().len().max(den.to_string().len());
    if digits <= 15 {
        let n: f64 = num.to_string().parse().unwrap();
        let d: f64 = den.to_string().parse().unwrap();
        n / d
    } else {
        let shift = BigInt::from(10u32).pow((digits - 15) as u32);
        let n: f64 = (num / &shift).to_string().parse().unwrap();
        let d: f64 = (den / &shift).to_string().parse().unwrap();
        n / d
    }
}
