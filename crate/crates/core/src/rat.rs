//! Exact rational scalars and conversions.
//!
//! Every coefficient that participates in symbolic cancellation is a
//! [`Rat`] (`num_rational::BigRational`): arbitrary-precision and exact, so
//! the second-order remainder cancels algebraically instead of merely
//! numerically. This module adds the pieces `num` does not ship:
//!
//! * exact parsing of decimal, scientific, hexadecimal-float and fraction
//!   literals (`0.1` becomes 1/10, never a binary approximation),
//! * directed conversion to `f64` (round up / down / nearest), used whenever
//!   an exact quantity leaves rational arithmetic and must stay on the sound
//!   side of the true value.

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rat = BigRational;

/// Rounding direction for rational → binary64 conversion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dir {
    /// Toward −∞.
    Down,
    /// Toward +∞.
    Up,
    /// Round to nearest, ties to even (IEEE default).
    Nearest,
}

/// Builds the exact rational 2^e (e may be negative).
pub fn pow2(e: i64) -> Rat {
    let one = BigInt::one();
    if e >= 0 {
        Rat::from_integer(one << e as usize)
    } else {
        Rat::new(one.clone(), one << (-e) as usize)
    }
}

/// Exact value of a finite `f64` as a rational.
pub fn rat_from_f64(x: f64) -> Rat {
    BigRational::from_float(x).expect("finite float")
}

/// Converts a rational to `f64` with the requested rounding direction.
///
/// Subnormals are handled exactly: any positive value below 2^-1074
/// converted with `Dir::Up` becomes the smallest positive subnormal, which
/// realizes the conservative clamp used by the deterministic bounds.
/// Magnitudes beyond the `f64` range saturate to ±∞ (`Up`/`Nearest`) or the
/// largest finite value (`Down` from above), keeping directedness intact.
pub fn rat_to_f64(r: &Rat, dir: Dir) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    if r.is_negative() {
        let flipped = match dir {
            Dir::Down => Dir::Up,
            Dir::Up => Dir::Down,
            Dir::Nearest => Dir::Nearest,
        };
        return -rat_to_f64(&-r.clone(), flipped);
    }

    // r > 0. Find s with 2^(s-1) <= r < 2^s via bit lengths, then refine.
    let num = r.numer();
    let den = r.denom();
    let mut s = num.bits() as i64 - den.bits() as i64;
    // num/den in [2^(s-1), 2^(s+1)); settle the exponent exactly.
    while pow2(s) <= *r {
        s += 1;
    }
    while pow2(s - 1) > *r {
        s -= 1;
    }
    // Now 2^(s-1) <= r < 2^s: the normal significand needs bits s-53..s-1.
    // Subnormal cutoff: values below 2^-1022 get fixed scale 2^-1074.
    let lsb_exp: i64 = if s - 53 < -1074 { -1074 } else { s - 53 };
    if lsb_exp > 971 {
        // r >= 2^1024: out of range.
        return match dir {
            Dir::Down => f64::MAX,
            _ => f64::INFINITY,
        };
    }

    // q = floor(r / 2^lsb_exp), exact flag from the remainder.
    let scaled = r / pow2(lsb_exp);
    let (q, rem) = (scaled.numer() / scaled.denom(), scaled.numer() % scaled.denom());
    let exact = rem.is_zero();

    let q_up = |q: &BigInt| -> f64 {
        let v = q.to_f64().unwrap_or(f64::INFINITY);
        v * pow2_f64(lsb_exp)
    };

    let lo = q_up(&q);
    if exact {
        return lo;
    }
    match dir {
        Dir::Down => lo,
        Dir::Up => q_up(&(q + 1i32)),
        Dir::Nearest => {
            // Compare the remainder against half an ulp: r - lo vs 2^(lsb_exp-1).
            let half = pow2(lsb_exp - 1);
            let frac = r - rat_from_f64(lo);
            if frac > half || (frac == half && (&q % 2i32) == BigInt::one()) {
                q_up(&(q + 1i32))
            } else {
                lo
            }
        }
    }
}

/// 2^e as f64, exact for e in the representable range (incl. subnormal scales).
fn pow2_f64(e: i64) -> f64 {
    if (-1074..=1023).contains(&e) {
        if e >= -1022 {
            f64::from_bits(((e + 1023) as u64) << 52)
        } else {
            // subnormal power of two
            f64::from_bits(1u64 << (e + 1074) as u64)
        }
    } else if e > 1023 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Error produced when a numeric literal cannot be parsed exactly.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid numeric literal `{0}`")]
pub struct LiteralError(pub String);

/// Parses a numeric literal into an exact rational.
///
/// Accepted forms (all exact, no rounding):
/// * integers: `42`, `-3`
/// * decimals with optional exponent: `0.1` (= 1/10), `1.5e-3`, `2E6`
/// * hexadecimal floats: `0x1.8p-1` (= 3/4), `0x1p-24`
/// * fractions of two of the above: `1/3`, `0x1p-24/3`
pub fn parse_rational(text: &str) -> Result<Rat, LiteralError> {
    let s = text.trim();
    if let Some(idx) = top_level_slash(s) {
        let num = parse_simple(&s[..idx])?;
        let den = parse_simple(&s[idx + 1..])?;
        if den.is_zero() {
            return Err(LiteralError(text.to_string()));
        }
        return Ok(num / den);
    }
    parse_simple(s)
}

/// Finds a '/' separating two literals (there are no nested forms).
fn top_level_slash(s: &str) -> Option<usize> {
    s.find('/')
}

fn parse_simple(text: &str) -> Result<Rat, LiteralError> {
    let s = text.trim();
    if s.is_empty() {
        return Err(LiteralError(text.to_string()));
    }
    let (neg, body) = match s.as_bytes()[0] {
        b'-' => (true, &s[1..]),
        b'+' => (false, &s[1..]),
        _ => (false, s),
    };
    let v = if body.starts_with("0x") || body.starts_with("0X") {
        parse_hex_float(&body[2..]).ok_or_else(|| LiteralError(text.to_string()))?
    } else {
        parse_decimal(body).ok_or_else(|| LiteralError(text.to_string()))?
    };
    Ok(if neg { -v } else { v })
}

fn parse_decimal(body: &str) -> Option<Rat> {
    // [digits][.digits][ (e|E) [sign] digits ]
    let (mantissa, exp10) = match body.find(['e', 'E']) {
        Some(i) => (&body[..i], body[i + 1..].parse::<i64>().ok()?),
        None => (body, 0i64),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(i) => (&mantissa[..i], &mantissa[i + 1..]),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let n: BigInt = digits.parse().ok()?;
    let shift = exp10 - frac_part.len() as i64;
    let ten = BigInt::from(10u32);
    Some(if shift >= 0 {
        Rat::from_integer(n * ten.pow(shift as u32))
    } else {
        Rat::new(n, ten.pow((-shift) as u32))
    })
}

fn parse_hex_float(body: &str) -> Option<Rat> {
    // hexdigits[.hexdigits][ (p|P) [sign] decimal-digits ]
    let (mantissa, exp2) = match body.find(['p', 'P']) {
        Some(i) => (&body[..i], body[i + 1..].parse::<i64>().ok()?),
        None => (body, 0i64),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(i) => (&mantissa[..i], &mantissa[i + 1..]),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let is_hex = |b: u8| b.is_ascii_hexdigit();
    if !int_part.bytes().all(is_hex) || !frac_part.bytes().all(is_hex) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let n = BigInt::from_bytes_be(Sign::Plus, &[]) + BigInt::parse_bytes(digits.as_bytes(), 16)?;
    let shift = exp2 - 4 * frac_part.len() as i64;
    Some(Rat::from_integer(n) * pow2(shift))
}

/// Next `f64` strictly greater than `x` (x finite, the "one ulp up" nudge).
pub fn next_up_f64(x: f64) -> f64 {
    x.next_up()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> Rat {
        Rat::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn parses_decimals_exactly() {
        assert_eq!(parse_rational("0.1").unwrap(), rat(1, 10));
        assert_eq!(parse_rational("-3").unwrap(), rat(-3, 1));
        assert_eq!(parse_rational("1.5e-3").unwrap(), rat(3, 2000));
        assert_eq!(parse_rational("2E6").unwrap(), rat(2_000_000, 1));
        assert_eq!(parse_rational("5.").unwrap(), rat(5, 1));
        assert_eq!(parse_rational(".25").unwrap(), rat(1, 4));
    }

    #[test]
    fn parses_hex_floats_exactly() {
        assert_eq!(parse_rational("0x1.8p-1").unwrap(), rat(3, 4));
        assert_eq!(parse_rational("0x1p-24").unwrap(), pow2(-24));
        assert_eq!(parse_rational("-0xAp0").unwrap(), rat(-10, 1));
    }

    #[test]
    fn parses_fractions() {
        assert_eq!(parse_rational("1/3").unwrap(), rat(1, 3));
        assert_eq!(parse_rational("-2/8").unwrap(), rat(-1, 4));
        assert_eq!(parse_rational("0x1p-24/3").unwrap(), pow2(-24) / rat(3, 1));
        assert!(parse_rational("1/0").is_err());
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["", "abc", "1.2.3", "0x", "1e", "--2"] {
            assert!(parse_rational(bad).is_err(), "{bad} should fail");
        }
    }

    #[test]
    fn directed_conversion_brackets_the_value() {
        let third = rat(1, 3);
        let down = rat_to_f64(&third, Dir::Down);
        let up = rat_to_f64(&third, Dir::Up);
        assert!(down < up);
        assert_eq!(up, next_up_f64(down));
        assert!(rat_from_f64(down) < third && third < rat_from_f64(up));
        // Exact values convert exactly in every direction.
        for v in [0.0, 1.0, -2.5, 0.1_f64, f64::MIN_POSITIVE, 5e-324] {
            let r = rat_from_f64(v);
            assert_eq!(rat_to_f64(&r, Dir::Down), v);
            assert_eq!(rat_to_f64(&r, Dir::Up), v);
            assert_eq!(rat_to_f64(&r, Dir::Nearest), v);
        }
    }

    #[test]
    fn conversion_handles_extremes() {
        // Below the subnormal floor: Up clamps to the smallest positive subnormal.
        let tiny = pow2(-1100);
        assert_eq!(rat_to_f64(&tiny, Dir::Up), 5e-324);
        assert_eq!(rat_to_f64(&tiny, Dir::Down), 0.0);
        // Powers of two across the subnormal boundary are exact.
        for e in [-1074i64, -1073, -1023, -1022, -1021, 0, 1023] {
            let r = pow2(e);
            let f = rat_to_f64(&r, Dir::Nearest);
            assert_eq!(rat_from_f64(f), r, "2^{e}");
        }
        // Overflow saturates directedly.
        let huge = pow2(1100);
        assert_eq!(rat_to_f64(&huge, Dir::Up), f64::INFINITY);
        assert_eq!(rat_to_f64(&huge, Dir::Down), f64::MAX);
        // Negative mirror.
        assert_eq!(rat_to_f64(&-huge.clone(), Dir::Down), f64::NEG_INFINITY);
        assert_eq!(rat_to_f64(&-huge, Dir::Up), -f64::MAX);
    }

    #[test]
    fn nearest_ties_to_even() {
        // 1 + 2^-53 is exactly halfway between 1 and 1+2^-52: ties-to-even -> 1.
        let half_ulp = Rat::one() + pow2(-53);
        assert_eq!(rat_to_f64(&half_ulp, Dir::Nearest), 1.0);
        // 1 + 3*2^-53 is halfway between 1+2^-52 and 1+2^-51... not a tie case;
        // just check bracketing holds.
        let v = Rat::one() + pow2(-53) * rat(3, 1);
        let f = rat_to_f64(&v, Dir::Nearest);
        assert!((rat_from_f64(f) - &v).abs() <= pow2(-53));
    }
}
