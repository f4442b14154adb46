//! 128-bit fixed-point arithmetic for USD amounts, fractions, and per-second
//! interest rates.
//!
//! All rounding is round-half-even, which keeps every market-state transition
//! bit-exact across runs and platforms. USD amounts carry 8 fractional digits
//! (`1 == 1e8` raw units); fractions share the same scale; per-second rates
//! use an 18-digit scale so rates as small as 1e-18/s stay representable.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Raw units per 1.0 for [`Usd`] and [`Fraction`].
pub const SCALE_8: i128 = 100_000_000;
/// Raw units per 1.0 for [`Rate`].
pub const SCALE_18: i128 = 1_000_000_000_000_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FixedError {
    #[error("malformed decimal literal `{0}`")]
    Malformed(String),
    #[error("decimal literal `{0}` has more than {1} fractional digits")]
    TooPrecise(String, u32),
    #[error("decimal literal `{0}` is out of range")]
    OutOfRange(String),
}

/// `n / d` rounded half to even. `d > 0`.
fn div_rhe_u128(n: u128, d: u128) -> u128 {
    debug_assert!(d > 0);
    let q = n / d;
    let r = n % d;
    // Compare r against d - r instead of 2r vs d: no overflow for huge d.
    let up = d - r;
    if r > up || (r == up && q & 1 == 1) {
        q + 1
    } else {
        q
    }
}

/// `a * b / d` with round-half-even, computed on magnitudes so the rounding is
/// symmetric around zero. Panics on 128-bit overflow: amounts that large are
/// outside the engine's invariants and indicate corrupted state.
pub fn mul_div_rhe(a: i128, b: i128, d: i128) -> i128 {
    debug_assert!(d > 0);
    let neg = (a < 0) != (b < 0);
    let n = a
        .unsigned_abs()
        .checked_mul(b.unsigned_abs())
        .expect("fixed-point overflow in mul_div_rhe");
    let q = div_rhe_u128(n, d as u128);
    let q = i128::try_from(q).expect("fixed-point overflow in mul_div_rhe");
    if neg {
        -q
    } else {
        q
    }
}

/// Unsigned `a * b / d` with round-half-even.
pub fn mul_div_rhe_u128(a: u128, b: u128, d: u128) -> u128 {
    let n = a
        .checked_mul(b)
        .expect("fixed-point overflow in mul_div_rhe_u128");
    div_rhe_u128(n, d)
}

/// Powers of ten for token decimal conversions (decimals capped at 18).
pub fn pow10(decimals: u8) -> u128 {
    debug_assert!(decimals <= 38);
    10u128.pow(decimals as u32)
}

fn parse_decimal(s: &str, frac_digits: u32) -> Result<i128, FixedError> {
    let t = s.trim();
    let (neg, t) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t),
    };
    if t.is_empty() {
        return Err(FixedError::Malformed(s.to_string()));
    }
    let (int_part, frac_part) = match t.split_once('.') {
        Some((i, f)) => (i, f),
        None => (t, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(FixedError::Malformed(s.to_string()));
    }
    if !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return Err(FixedError::Malformed(s.to_string()));
    }
    if frac_part.len() as u32 > frac_digits {
        // Trailing zeros beyond the scale are harmless.
        let (keep, rest) = frac_part.split_at(frac_digits as usize);
        if rest.bytes().any(|b| b != b'0') {
            return Err(FixedError::TooPrecise(s.to_string(), frac_digits));
        }
        return parse_decimal(
            &format!("{}{}.{}", if neg { "-" } else { "" }, int_part, keep),
            frac_digits,
        );
    }
    let scale = 10i128.pow(frac_digits);
    let int_val: i128 = if int_part.is_empty() {
        0
    } else {
        int_part
            .parse()
            .map_err(|_| FixedError::OutOfRange(s.to_string()))?
    };
    let mut frac_val: i128 = if frac_part.is_empty() {
        0
    } else {
        frac_part
            .parse()
            .map_err(|_| FixedError::OutOfRange(s.to_string()))?
    };
    frac_val *= 10i128.pow(frac_digits - frac_part.len() as u32);
    let raw = int_val
        .checked_mul(scale)
        .and_then(|v| v.checked_add(frac_val))
        .ok_or_else(|| FixedError::OutOfRange(s.to_string()))?;
    Ok(if neg { -raw } else { raw })
}

fn format_decimal(raw: i128, frac_digits: u32, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let scale = 10i128.pow(frac_digits);
    let neg = raw < 0;
    let mag = raw.unsigned_abs();
    let int = mag / scale as u128;
    let frac = mag % scale as u128;
    if neg {
        write!(f, "-")?;
    }
    if frac == 0 {
        write!(f, "{int}")
    } else {
        let digits = format!("{frac:0width$}", width = frac_digits as usize);
        write!(f, "{}.{}", int, digits.trim_end_matches('0'))
    }
}

/// USD amount, 8 fractional digits, signed (reserves may run a deficit).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Usd(i128);

impl Usd {
    pub const ZERO: Usd = Usd(0);

    pub const fn from_raw(raw: i128) -> Self {
        Usd(raw)
    }

    pub const fn raw(self) -> i128 {
        self.0
    }

    pub const fn from_dollars(d: i64) -> Self {
        Usd(d as i128 * SCALE_8)
    }

    /// Nearest representable amount, ties to even. Used where float-domain
    /// prices cross into the fixed-point ledger.
    pub fn from_f64(x: f64) -> Self {
        Usd((x * SCALE_8 as f64).round_ties_even() as i128)
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / SCALE_8 as f64
    }

    pub fn is_negative(self) -> bool {
        self.0 < 0
    }

    pub fn mul_fraction(self, f: Fraction) -> Usd {
        Usd(mul_div_rhe(self.0, f.raw(), SCALE_8))
    }

    pub fn min(self, other: Usd) -> Usd {
        Usd(self.0.min(other.0))
    }

    pub fn max(self, other: Usd) -> Usd {
        Usd(self.0.max(other.0))
    }

    pub fn saturating_nonneg(self) -> Usd {
        Usd(self.0.max(0))
    }
}

impl std::ops::Add for Usd {
    type Output = Usd;
    fn add(self, rhs: Usd) -> Usd {
        Usd(self.0.checked_add(rhs.0).expect("Usd overflow"))
    }
}

impl std::ops::Sub for Usd {
    type Output = Usd;
    fn sub(self, rhs: Usd) -> Usd {
        Usd(self.0.checked_sub(rhs.0).expect("Usd overflow"))
    }
}

impl std::ops::AddAssign for Usd {
    fn add_assign(&mut self, rhs: Usd) {
        *self = *self + rhs;
    }
}

impl std::ops::SubAssign for Usd {
    fn sub_assign(&mut self, rhs: Usd) {
        *self = *self - rhs;
    }
}

impl std::iter::Sum for Usd {
    fn sum<I: Iterator<Item = Usd>>(iter: I) -> Usd {
        iter.fold(Usd::ZERO, |a, b| a + b)
    }
}

impl fmt::Display for Usd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        format_decimal(self.0, 8, f)
    }
}

impl fmt::Debug for Usd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Usd({self})")
    }
}

impl FromStr for Usd {
    type Err = FixedError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_decimal(s, 8).map(Usd)
    }
}

impl Serialize for Usd {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Usd {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Dimensionless fraction on the same 1e8 scale as [`Usd`]. Used for
/// collateral factors, the storefront price factor, utilization, and fees.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Fraction(i128);

impl Fraction {
    pub const ZERO: Fraction = Fraction(0);
    pub const ONE: Fraction = Fraction(SCALE_8);

    pub const fn from_raw(raw: i128) -> Self {
        Fraction(raw)
    }

    pub const fn raw(self) -> i128 {
        self.0
    }

    pub fn from_f64(x: f64) -> Self {
        Fraction((x * SCALE_8 as f64).round_ties_even() as i128)
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / SCALE_8 as f64
    }

    /// `n / d` as a fraction, round-half-even.
    pub fn ratio(n: u128, d: u128) -> Fraction {
        Fraction(mul_div_rhe_u128(n, SCALE_8 as u128, d) as i128)
    }

    pub fn complement(self) -> Fraction {
        Fraction(SCALE_8 - self.0)
    }

    pub fn clamp_unit(self) -> Fraction {
        Fraction(self.0.clamp(0, SCALE_8))
    }

    pub fn in_unit_interval(self) -> bool {
        (0..=SCALE_8).contains(&self.0)
    }
}

impl std::ops::Add for Fraction {
    type Output = Fraction;
    fn add(self, rhs: Fraction) -> Fraction {
        Fraction(self.0.checked_add(rhs.0).expect("Fraction overflow"))
    }
}

impl std::ops::Mul for Fraction {
    type Output = Fraction;
    fn mul(self, rhs: Fraction) -> Fraction {
        Fraction(mul_div_rhe(self.0, rhs.0, SCALE_8))
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        format_decimal(self.0, 8, f)
    }
}

impl fmt::Debug for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fraction({self})")
    }
}

impl Serialize for Fraction {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.to_f64())
    }
}

impl<'de> Deserialize<'de> for Fraction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(Fraction::from_f64(f64::deserialize(d)?))
    }
}

/// Per-second interest rate, 18 fractional digits.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rate(i128);

impl Rate {
    pub const ZERO: Rate = Rate(0);

    pub const fn from_raw(raw: i128) -> Self {
        Rate(raw)
    }

    pub const fn raw(self) -> i128 {
        self.0
    }

    pub fn from_f64(x: f64) -> Self {
        Rate((x * SCALE_18 as f64).round_ties_even() as i128)
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / SCALE_18 as f64
    }

    /// Rate scaled by a 1e8 fraction (e.g. slope × utilization).
    pub fn mul_fraction(self, f: Fraction) -> Rate {
        Rate(mul_div_rhe(self.0, f.raw(), SCALE_8))
    }
}

impl std::ops::Add for Rate {
    type Output = Rate;
    fn add(self, rhs: Rate) -> Rate {
        Rate(self.0.checked_add(rhs.0).expect("Rate overflow"))
    }
}

impl fmt::Debug for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Rate(")?;
        format_decimal(self.0, 18, f)?;
        write!(f, "/s)")
    }
}

impl Serialize for Rate {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.to_f64())
    }
}

impl<'de> Deserialize<'de> for Rate {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(Rate::from_f64(f64::deserialize(d)?))
    }
}

/// Token quantity in integer base units (10^decimals units per whole token).
/// Serializes as the raw base-unit integer.
#[derive(
    Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Debug, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct TokenAmount(pub u128);

impl TokenAmount {
    pub const ZERO: TokenAmount = TokenAmount(0);

    /// Parses a nonnegative decimal token quantity into base units, exactly.
    pub fn parse(s: &str, decimals: u8) -> Result<Self, FixedError> {
        let raw = parse_decimal(s, decimals as u32)?;
        if raw < 0 {
            return Err(FixedError::OutOfRange(s.to_string()));
        }
        Ok(TokenAmount(raw as u128))
    }

    pub fn display(self, decimals: u8) -> String {
        let scale = pow10(decimals);
        let int = self.0 / scale;
        let frac = self.0 % scale;
        if frac == 0 {
            format!("{int}")
        } else {
            let digits = format!("{frac:0width$}", width = decimals as usize);
            format!("{}.{}", int, digits.trim_end_matches('0'))
        }
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

/// Market value of `qty` base units priced at `price` USD per whole token.
pub fn token_value_usd(qty: TokenAmount, price: Usd, decimals: u8) -> Usd {
    debug_assert!(price.raw() >= 0);
    let raw = mul_div_rhe_u128(qty.0, price.raw() as u128, pow10(decimals));
    Usd::from_raw(i128::try_from(raw).expect("token value overflow"))
}

/// Base units whose market value does not exceed `value` at `price`
/// (floor division; `price` must be positive).
pub fn usd_to_token_floor(value: Usd, price: Usd, decimals: u8) -> TokenAmount {
    debug_assert!(price.raw() > 0);
    if value.raw() <= 0 {
        return TokenAmount::ZERO;
    }
    let qty = (value.raw() as u128)
        .checked_mul(pow10(decimals))
        .expect("token conversion overflow")
        / price.raw() as u128;
    TokenAmount(qty)
}

/// Simple interest on `amount` base units: `amount × rate × dt`, rounded
/// half to even.
pub fn interest_units(amount: u128, rate: Rate, dt_seconds: u64) -> u128 {
    debug_assert!(rate.raw() >= 0);
    let rate_dt = (rate.raw() as u128)
        .checked_mul(dt_seconds as u128)
        .expect("rate × dt overflow");
    mul_div_rhe_u128(amount, rate_dt, SCALE_18 as u128)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_half_even_ties() {
        // 2.5 -> 2, 3.5 -> 4, both at the tie point.
        assert_eq!(div_rhe_u128(25, 10), 2);
        assert_eq!(div_rhe_u128(35, 10), 4);
        assert_eq!(div_rhe_u128(24, 10), 2);
        assert_eq!(div_rhe_u128(26, 10), 3);
    }

    #[test]
    fn signed_rounding_is_symmetric() {
        assert_eq!(mul_div_rhe(25, 1, 10), 2);
        assert_eq!(mul_div_rhe(-25, 1, 10), -2);
        assert_eq!(mul_div_rhe(35, 1, 10), 4);
        assert_eq!(mul_div_rhe(-35, 1, 10), -4);
    }

    #[test]
    fn usd_parse_format_round_trip() {
        for s in ["0", "1", "103.14", "2461.86", "-565.00000001", "0.0864"] {
            let v: Usd = s.parse().unwrap();
            let back: Usd = v.to_string().parse().unwrap();
            assert_eq!(v, back, "{s}");
        }
        assert_eq!("103.14".parse::<Usd>().unwrap().raw(), 10_314_000_000);
        assert_eq!("103.140000000".parse::<Usd>().unwrap().raw(), 10_314_000_000);
        assert!("1.123456789".parse::<Usd>().is_err());
        assert!("abc".parse::<Usd>().is_err());
        assert!("".parse::<Usd>().is_err());
        assert!("1.2.3".parse::<Usd>().is_err());
    }

    #[test]
    fn token_parse_respects_decimals() {
        assert_eq!(
            TokenAmount::parse("1.5", 18).unwrap().0,
            1_500_000_000_000_000_000
        );
        assert_eq!(TokenAmount::parse("2400", 6).unwrap().0, 2_400_000_000);
        assert!(TokenAmount::parse("0.1234567", 6).is_err());
        assert!(TokenAmount::parse("-1", 6).is_err());
        assert_eq!(TokenAmount::parse("1.5", 18).unwrap().display(18), "1.5");
    }

    #[test]
    fn token_value_examples() {
        // 3 ETH @ $3000 = $9000.
        let qty = TokenAmount::parse("3", 18).unwrap();
        let v = token_value_usd(qty, Usd::from_dollars(3000), 18);
        assert_eq!(v, Usd::from_dollars(9000));
    }

    #[test]
    fn fraction_times_usd() {
        let v = Usd::from_dollars(9000).mul_fraction(Fraction::from_f64(0.75));
        assert_eq!(v, Usd::from_dollars(6750));
    }

    #[test]
    fn interest_example() {
        // 1000 USDC (6 decimals) at 1e-9/s over one day = 0.0864 USDC.
        let units = interest_units(1_000_000_000, Rate::from_f64(1e-9), 86_400);
        assert_eq!(units, 86_400);
    }

    #[test]
    fn usd_to_token_floor_inverts_value() {
        let price = Usd::from_dollars(2700);
        let qty = usd_to_token_floor(Usd::from_dollars(1000), price, 18);
        let v = token_value_usd(qty, price, 18);
        assert!(v <= Usd::from_dollars(1000));
        // One more base unit would exceed the target.
        let v2 = token_value_usd(TokenAmount(qty.0 + 1), price, 18);
        assert!(v2 > Usd::from_dollars(1000) - Usd::from_raw(100));
    }
}
