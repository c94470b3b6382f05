//! Locale-free float formatting for CSV/JSON emission: fixed significant
//! digits, '.' decimal separator, trailing zeros trimmed.

/// Format with `sig` significant digits (printf %g style).
pub fn fmt_sig(x: f64, sig: usize) -> String {
    assert!(sig >= 1);
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", sig - 1, x);
    let (mant, exp_str) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp_str.parse().expect("exponent parses");
    let neg = mant.starts_with('-');
    let digits: String = mant.chars().filter(|c| c.is_ascii_digit()).collect();
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    if exp >= -4 && (exp as i64) < sig as i64 {
        if exp >= 0 {
            let e = exp as usize;
            out.push_str(&digits[..=e]);
            let frac = digits[e + 1..].trim_end_matches('0');
            if !frac.is_empty() {
                out.push('.');
                out.push_str(frac);
            }
        } else {
            out.push_str("0.");
            for _ in 0..(-exp - 1) {
                out.push('0');
            }
            out.push_str(digits.trim_end_matches('0'));
        }
    } else {
        out.push(digits.as_bytes()[0] as char);
        let frac = digits[1..].trim_end_matches('0');
        if !frac.is_empty() {
            out.push('.');
            out.push_str(frac);
        }
        out.push('e');
        out.push_str(&exp.to_string());
    }
    out
}

/// The sweep/CSV default: 12 significant digits.
pub fn fmt_g12(x: f64) -> String {
    fmt_sig(x, 12)
}
