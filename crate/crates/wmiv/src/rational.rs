//! Exact rational scalars used everywhere outside data generation and the
//! Monte Carlo oracle.

use num::{BigInt, BigRational, FromPrimitive, ToPrimitive};

use crate::Error;

/// Arbitrary-precision rational number.
pub type Rat = BigRational;

/// `p / q` as a rational. Panics if `q == 0`.
pub fn rat(p: i64, q: i64) -> Rat {
    Rat::new(BigInt::from(p), BigInt::from(q))
}

/// Integer as a rational.
pub fn int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Exact conversion of a finite float (its binary expansion), no rounding.
pub fn from_f64(x: f64) -> Option<Rat> {
    Rat::from_f64(x)
}

/// Nearest-double approximation, for reporting and the oracle only.
pub fn to_f64(x: &Rat) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Parses `p`, `p/q` or a plain decimal such as `-0.25` into an exact value.
pub fn parse_rat(s: &str) -> Result<Rat, Error> {
    let s = s.trim();
    if let Ok(r) = s.parse::<Rat>() {
        return Ok(r);
    }
    if let Some((head, tail)) = s.split_once('.') {
        if !tail.is_empty() && tail.bytes().all(|b| b.is_ascii_digit()) {
            let negative = head.starts_with('-');
            let whole = if head == "-" || head.is_empty() {
                BigInt::from(0)
            } else {
                head.parse::<BigInt>()
                    .map_err(|_| Error::Parse(format!("invalid rational literal `{s}`")))?
            };
            let frac_num = tail
                .parse::<BigInt>()
                .map_err(|_| Error::Parse(format!("invalid rational literal `{s}`")))?;
            let frac_den = BigInt::from(10u32).pow(tail.len() as u32);
            let magnitude = Rat::from_integer(whole.magnitude().clone().into())
                + Rat::new(frac_num, frac_den);
            return Ok(if negative { -magnitude } else { magnitude });
        }
    }
    Err(Error::Parse(format!("invalid rational literal `{s}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_integer_fraction_and_decimal() {
        assert_eq!(parse_rat("3").unwrap(), int(3));
        assert_eq!(parse_rat("-7/2").unwrap(), rat(-7, 2));
        assert_eq!(parse_rat("0.25").unwrap(), rat(1, 4));
        assert_eq!(parse_rat("-0.5").unwrap(), rat(-1, 2));
        assert_eq!(parse_rat(" 13/24 ").unwrap(), rat(13, 24));
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("x").is_err());
    }

    #[test]
    fn float_conversion_is_exact() {
        let r = from_f64(0.1).unwrap();
        // 0.1 is not representable in binary; the exact expansion is kept.
        assert_ne!(r, rat(1, 10));
        assert_eq!(to_f64(&r), 0.1);
    }

    #[test]
    fn display_uses_slash_form() {
        assert_eq!(rat(13, 24).to_string(), "13/24");
        assert_eq!(int(5).to_string(), "5");
        assert_eq!(rat(4, 2).to_string(), "2");
    }
}
