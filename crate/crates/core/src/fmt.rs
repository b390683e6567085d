//! Deterministic float formatting at 10 significant digits.

/// Formats `x` with 10 significant digits, trailing zeros trimmed.
///
/// Uses positional notation for exponents in `-5..15` and `1.234e-7` style
/// otherwise. Infinities print as `inf` / `-inf`.
pub fn sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.9e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..15).contains(&exp) {
        let decimals = (9 - exp).max(0) as usize;
        let rounded: f64 = sci.parse().expect("round trip");
        trim(format!("{:.*}", decimals, rounded))
    } else {
        format!("{}e{}", trim(mantissa.to_string()), exp)
    }
}

fn trim(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    t.to_string()
}

#[cfg(test)]
mod tests {
    use super::sig;

    #[test]
    fn formats() {
        assert_eq!(sig(1.0), "1");
        assert_eq!(sig(2f64.sqrt()), "1.414213562");
        assert_eq!(sig(-0.125), "-0.125");
        assert_eq!(sig(123456.789), "123456.789");
        assert_eq!(sig(1e-7), "1e-7");
        assert_eq!(sig(2.5e20), "2.5e20");
        assert_eq!(sig(f64::INFINITY), "inf");
        assert_eq!(sig(0.0), "0");
        assert_eq!(sig(5.0 / 3.0), "1.666666667");
        assert_eq!(sig(9.9999999999), "10");
    }
}
