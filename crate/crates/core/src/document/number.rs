//! Exact decimal numbers with an integer flag.
//!
//! A [`Number`] is kept as its canonical JSON text. Integer-flagged numbers
//! are written as plain digits; every other number always contains a `.` or an
//! exponent, so the flag survives a serialize/parse round trip (`2.0` stays a
//! decimal, `2` stays an integer). Arithmetic goes through an exact
//! `(mantissa, exponent)` form built on `num-bigint`.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};

/// Largest decimal exponent accepted when parsing.
pub const MAX_EXPONENT: i64 = 100_000;

/// Significant digits kept by division.
pub const DIVISION_DIGITS: usize = 34;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NumberError {
    #[error("invalid number literal `{0}`")]
    Invalid(String),
    #[error("number `{0}` is outside the supported exponent range")]
    OutOfRange(String),
    #[error("division by zero")]
    DivisionByZero,
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Number {
    text: Box<str>,
}

/// Exact decimal `mantissa * 10^exponent`, with trailing zeros stripped
/// from the mantissa (zero is `0 * 10^0`).
#[derive(Debug, Clone, PartialEq, Eq)]
struct Decimal {
    mantissa: BigInt,
    exponent: i64,
}

impl Decimal {
    fn new(mantissa: BigInt, exponent: i64) -> Self {
        let mut d = Decimal { mantissa, exponent };
        d.normalize();
        d
    }

    fn normalize(&mut self) {
        if self.mantissa.is_zero() {
            self.exponent = 0;
            return;
        }
        let ten = BigInt::from(10);
        loop {
            let (q, r) = self.mantissa.div_rem(&ten);
            if !r.is_zero() {
                break;
            }
            self.mantissa = q;
            self.exponent += 1;
        }
    }

    fn aligned(&self, other: &Decimal) -> (BigInt, BigInt, i64) {
        let exp = self.exponent.min(other.exponent);
        let a = &self.mantissa * pow10((self.exponent - exp) as u64);
        let b = &other.mantissa * pow10((other.exponent - exp) as u64);
        (a, b, exp)
    }
}

fn pow10(n: u64) -> BigInt {
    num_traits::pow(BigInt::from(10), n as usize)
}

fn digit_count(n: &BigInt) -> usize {
    if n.is_zero() {
        1
    } else {
        n.abs().to_string().len()
    }
}

impl Number {
    /// Parses a JSON number lexeme (RFC 8259 grammar). A lexeme without
    /// fraction or exponent is integer-flagged.
    pub fn parse(lexeme: &str) -> Result<Number, NumberError> {
        let (decimal, integer) = parse_lexeme(lexeme)?;
        Ok(Number::from_decimal(&decimal, integer))
    }

    /// Lenient parse used for CSV cells and `$number`: accepts a leading `+`
    /// and forms such as `.5` or `5.`.
    pub fn parse_lenient(text: &str) -> Result<Number, NumberError> {
        let t = text.strip_prefix('+').unwrap_or(text);
        let (neg, body) = match t.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, t),
        };
        let (mant, exp_part) = match body.find(['e', 'E']) {
            Some(i) => (&body[..i], Some(&body[i + 1..])),
            None => (body, None),
        };
        let (int_part, frac_part) = match mant.find('.') {
            Some(i) => (&mant[..i], Some(&mant[i + 1..])),
            None => (mant, None),
        };
        let int_part = if int_part.is_empty() && frac_part.is_some_and(|f| !f.is_empty()) {
            "0"
        } else {
            int_part
        };
        let frac = frac_part.map(|f| if f.is_empty() { "0" } else { f });
        let mut canon = String::new();
        if neg {
            canon.push('-');
        }
        let trimmed = int_part.trim_start_matches('0');
        canon.push_str(if trimmed.is_empty() { "0" } else { trimmed });
        if let Some(f) = frac {
            canon.push('.');
            canon.push_str(f);
        }
        if let Some(e) = exp_part {
            canon.push('e');
            canon.push_str(e);
        }
        if int_part.is_empty() {
            return Err(NumberError::Invalid(text.to_string()));
        }
        Number::parse(&canon).map_err(|e| match e {
            NumberError::Invalid(_) => NumberError::Invalid(text.to_string()),
            other => other,
        })
    }

    pub fn from_i64(v: i64) -> Number {
        Number {
            text: v.to_string().into_boxed_str(),
        }
    }

    pub fn from_u64(v: u64) -> Number {
        Number {
            text: v.to_string().into_boxed_str(),
        }
    }

    pub fn zero() -> Number {
        Number::from_i64(0)
    }

    /// Canonical JSON text.
    pub fn as_str(&self) -> &str {
        &self.text
    }

    /// Whether the number carries the integer flag.
    pub fn is_integer(&self) -> bool {
        !self.text.contains(['.', 'e'])
    }

    /// Whether the value is mathematically integral, regardless of the flag.
    pub fn is_integral(&self) -> bool {
        self.decimal().exponent >= 0
    }

    pub fn is_zero(&self) -> bool {
        self.decimal().mantissa.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.text.starts_with('-')
    }

    /// Same value with the integer flag set or cleared.
    pub fn with_integer_flag(&self, integer: bool) -> Number {
        let d = self.decimal();
        if integer && d.exponent < 0 {
            return self.clone();
        }
        Number::from_decimal(&d, integer)
    }

    /// Text without a forced `.0`, used when numbers are cast to strings.
    pub fn to_plain_string(&self) -> String {
        match self.text.strip_suffix(".0") {
            Some(s) => s.to_string(),
            None => self.text.to_string(),
        }
    }

    pub fn to_i64(&self) -> Option<i64> {
        let d = self.decimal();
        if d.exponent < 0 {
            return None;
        }
        if d.exponent > 19 {
            return None;
        }
        (d.mantissa * pow10(d.exponent as u64)).to_i64()
    }

    pub fn to_f64(&self) -> f64 {
        self.text.parse().unwrap_or(f64::NAN)
    }

    /// Converts a finite float through its shortest round-trip text.
    pub fn from_f64(v: f64) -> Option<Number> {
        if !v.is_finite() {
            return None;
        }
        let s = format!("{v:?}");
        let n = Number::parse_lenient(&s).ok()?;
        Some(n.with_integer_flag(false))
    }

    /// False when arithmetic has pushed the value past the exponent limit
    /// accepted by [`Number::parse`].
    pub fn in_range(&self) -> bool {
        parse_lexeme(&self.text).is_ok()
    }

    pub fn numeric_eq(&self, other: &Number) -> bool {
        self.numeric_cmp(other) == Ordering::Equal
    }

    pub fn numeric_cmp(&self, other: &Number) -> Ordering {
        let a = self.decimal();
        let b = other.decimal();
        let sa = a.mantissa.sign();
        let sb = b.mantissa.sign();
        if sa != sb {
            return sign_rank(sa).cmp(&sign_rank(sb));
        }
        if sa == Sign::NoSign {
            return Ordering::Equal;
        }
        // Same nonzero sign: compare magnitudes by adjusted exponent first.
        let adj_a = a.exponent + digit_count(&a.mantissa) as i64;
        let adj_b = b.exponent + digit_count(&b.mantissa) as i64;
        let mag = if adj_a != adj_b {
            adj_a.cmp(&adj_b)
        } else {
            let (x, y, _) = a.aligned(&b);
            x.abs().cmp(&y.abs())
        };
        if sa == Sign::Minus {
            mag.reverse()
        } else {
            mag
        }
    }

    pub fn add(&self, other: &Number) -> Number {
        let (a, b, exp) = self.decimal().aligned(&other.decimal());
        Number::from_decimal(
            &Decimal::new(a + b, exp),
            self.is_integer() && other.is_integer(),
        )
    }

    pub fn sub(&self, other: &Number) -> Number {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Number) -> Number {
        let a = self.decimal();
        let b = other.decimal();
        Number::from_decimal(
            &Decimal::new(a.mantissa * b.mantissa, a.exponent + b.exponent),
            self.is_integer() && other.is_integer(),
        )
    }

    /// Division rounded half-to-even at [`DIVISION_DIGITS`] significant
    /// digits. The result never carries the integer flag.
    pub fn div(&self, other: &Number) -> Result<Number, NumberError> {
        let a = self.decimal();
        let b = other.decimal();
        if b.mantissa.is_zero() {
            return Err(NumberError::DivisionByZero);
        }
        if a.mantissa.is_zero() {
            return Ok(Number::from_decimal(&Decimal::new(BigInt::zero(), 0), false));
        }
        // Scale the dividend so the integer quotient has enough digits.
        let need = DIVISION_DIGITS as i64 + 2 + digit_count(&b.mantissa) as i64
            - digit_count(&a.mantissa) as i64;
        let shift = need.max(0) as u64;
        let scaled = &a.mantissa * pow10(shift);
        let (q, r) = scaled.div_rem(&b.mantissa);
        let mut exp = a.exponent - b.exponent - shift as i64;
        let inexact = !r.is_zero();
        let q = round_to_digits(q, &mut exp, DIVISION_DIGITS, inexact);
        Ok(Number::from_decimal(&Decimal::new(q, exp), false))
    }

    /// Remainder with the sign of the dividend.
    pub fn rem(&self, other: &Number) -> Result<Number, NumberError> {
        let (a, b, exp) = self.decimal().aligned(&other.decimal());
        if b.is_zero() {
            return Err(NumberError::DivisionByZero);
        }
        let r = a % b;
        Ok(Number::from_decimal(
            &Decimal::new(r, exp),
            self.is_integer() && other.is_integer(),
        ))
    }

    pub fn neg(&self) -> Number {
        if self.is_zero() {
            return self.clone();
        }
        let text = match self.text.strip_prefix('-') {
            Some(rest) => rest.to_string(),
            None => format!("-{}", self.text),
        };
        Number {
            text: text.into_boxed_str(),
        }
    }

    pub fn abs(&self) -> Number {
        if self.is_negative() {
            self.neg()
        } else {
            self.clone()
        }
    }

    /// Rounds toward negative infinity, keeping the integer flag unchanged.
    pub fn floor(&self) -> Number {
        let d = self.decimal();
        if d.exponent >= 0 {
            return self.clone();
        }
        let q = d.mantissa.div_floor(&pow10((-d.exponent) as u64));
        Number::from_decimal(&Decimal::new(q, 0), self.is_integer())
    }

    fn decimal(&self) -> Decimal {
        parse_lexeme(&self.text)
            .map(|(d, _)| d)
            .expect("canonical number text always parses")
    }

    fn from_decimal(d: &Decimal, integer: bool) -> Number {
        Number {
            text: format_decimal(d, integer && d.exponent >= 0).into_boxed_str(),
        }
    }
}

fn sign_rank(s: Sign) -> i8 {
    match s {
        Sign::Minus => -1,
        Sign::NoSign => 0,
        Sign::Plus => 1,
    }
}

fn round_to_digits(q: BigInt, exp: &mut i64, digits: usize, inexact: bool) -> BigInt {
    let n = digit_count(&q);
    if n <= digits {
        return q;
    }
    let drop = (n - digits) as u64;
    let div = pow10(drop);
    let (mut kept, rest) = q.div_rem(&div);
    let half = &div / 2;
    let rest_abs = rest.abs();
    let round_up = match rest_abs.cmp(&half) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => inexact || kept.is_odd(),
    };
    if round_up {
        if q.is_negative() {
            kept -= 1;
        } else {
            kept += 1;
        }
    }
    *exp += drop as i64;
    kept
}

fn parse_lexeme(lexeme: &str) -> Result<(Decimal, bool), NumberError> {
    let invalid = || NumberError::Invalid(lexeme.to_string());
    let bytes = lexeme.as_bytes();
    let mut i = 0;
    let negative = bytes.first() == Some(&b'-');
    if negative {
        i += 1;
    }
    let int_start = i;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    let int_digits = &lexeme[int_start..i];
    if int_digits.is_empty() || (int_digits.len() > 1 && int_digits.starts_with('0')) {
        return Err(invalid());
    }
    let mut frac_digits = "";
    let mut integer = true;
    if i < bytes.len() && bytes[i] == b'.' {
        integer = false;
        i += 1;
        let s = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        frac_digits = &lexeme[s..i];
        if frac_digits.is_empty() {
            return Err(invalid());
        }
    }
    let mut exp: i64 = 0;
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        integer = false;
        i += 1;
        let mut exp_neg = false;
        if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
            exp_neg = bytes[i] == b'-';
            i += 1;
        }
        let s = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        let digits = &lexeme[s..i];
        if digits.is_empty() {
            return Err(invalid());
        }
        let trimmed = digits.trim_start_matches('0');
        if trimmed.len() > 12 {
            return Err(NumberError::OutOfRange(lexeme.to_string()));
        }
        exp = trimmed.parse::<i64>().unwrap_or(0);
        if exp_neg {
            exp = -exp;
        }
    }
    if i != bytes.len() {
        return Err(invalid());
    }
    let mut all = String::with_capacity(int_digits.len() + frac_digits.len());
    all.push_str(int_digits);
    all.push_str(frac_digits);
    let exponent = exp - frac_digits.len() as i64;
    let mut mantissa: BigInt = all.parse().map_err(|_| invalid())?;
    if negative {
        mantissa = -mantissa;
    }
    let d = Decimal::new(mantissa, exponent);
    let adjusted = d.exponent + digit_count(&d.mantissa) as i64;
    if !d.mantissa.is_zero() && adjusted.abs() > MAX_EXPONENT {
        return Err(NumberError::OutOfRange(lexeme.to_string()));
    }
    Ok((d, integer))
}

/// Plain notation while the decimal point stays within this many places of
/// the digits; scientific notation beyond.
const PLAIN_LIMIT: i64 = 21;

fn format_decimal(d: &Decimal, integer: bool) -> String {
    let negative = d.mantissa.is_negative();
    let digits = d.mantissa.abs().to_string();
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    if d.mantissa.is_zero() {
        out.push_str(if integer { "0" } else { "0.0" });
        return out;
    }
    let n = digits.len() as i64;
    let point = n + d.exponent; // position of the decimal point from the left
    if integer {
        out.push_str(&digits);
        out.extend(std::iter::repeat_n('0', d.exponent as usize));
        return out;
    }
    if d.exponent >= 0 && point <= PLAIN_LIMIT {
        out.push_str(&digits);
        out.extend(std::iter::repeat_n('0', d.exponent as usize));
        out.push_str(".0");
    } else if d.exponent < 0 && point > 0 {
        out.push_str(&digits[..point as usize]);
        out.push('.');
        out.push_str(&digits[point as usize..]);
    } else if d.exponent < 0 && point > -6 {
        out.push_str("0.");
        out.extend(std::iter::repeat_n('0', (-point) as usize));
        out.push_str(&digits);
    } else {
        out.push_str(&digits[..1]);
        if digits.len() > 1 {
            out.push('.');
            out.push_str(&digits[1..]);
        }
        let e = point - 1;
        out.push('e');
        out.push(if e < 0 { '-' } else { '+' });
        out.push_str(&e.abs().to_string());
    }
    out
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl fmt::Debug for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Number({})", self.text)
    }
}

impl From<i64> for Number {
    fn from(v: i64) -> Self {
        Number::from_i64(v)
    }
}
