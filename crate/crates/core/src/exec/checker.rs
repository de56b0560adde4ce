//! Built-in output comparison.

/// Splits on ASCII whitespace, dropping empty tokens.
fn tokens(bytes: &[u8]) -> impl Iterator<Item = &[u8]> {
    bytes
        .split(|b| b.is_ascii_whitespace())
        .filter(|t| !t.is_empty())
}

/// Token checker: both outputs must have the same whitespace-separated tokens.
pub fn tokens_match(actual: &[u8], expected: &[u8]) -> bool {
    tokens(actual).eq(tokens(expected))
}

fn as_number(token: &[u8]) -> Option<f64> {
    std::str::from_utf8(token)
        .ok()?
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
}

/// Float checker: tokens that parse as finite numbers on both sides match when
/// `|a - b| <= epsilon * max(1, |b|)`; all other tokens must be identical.
pub fn floats_match(actual: &[u8], expected: &[u8], epsilon: f64) -> bool {
    let mut a = tokens(actual);
    let mut e = tokens(expected);
    loop {
        match (a.next(), e.next()) {
            (None, None) => return true,
            (Some(x), Some(y)) => {
                let ok = match (as_number(x), as_number(y)) {
                    (Some(xv), Some(yv)) => (xv - yv).abs() <= epsilon * yv.abs().max(1.0),
                    _ => x == y,
                };
                if !ok {
                    return false;
                }
            }
            _ => return false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn whitespace_is_normalized() {
        assert!(tokens_match(b"1 2\n", b"1  2"));
        assert!(tokens_match(b"\t1\r\n2  ", b"1 2"));
        assert!(tokens_match(b"", b"  \n"));
    }

    #[test]
    fn length_mismatch_rejected() {
        assert!(!tokens_match(b"1 2 3", b"1 2"));
        assert!(!tokens_match(b"1 2", b"1 2 3"));
    }

    #[test]
    fn float_tolerance() {
        // |a - b| = 1e-8 <= 1e-6 * max(1, 0.3)
        assert!(floats_match(b"0.30000001", b"0.3", 1e-6));
        assert!(!floats_match(b"0.31", b"0.3", 1e-6));
        // relative for large magnitudes: 1e-6 * 1e6 = 1
        assert!(floats_match(b"1000000.5", b"1000000", 1e-6));
        assert!(floats_match(b"YES 1.0", b"YES 1", 1e-9));
        assert!(!floats_match(b"yes 1.0", b"YES 1", 1e-9));
    }

    proptest! {
        #[test]
        fn token_checker_ignores_spacing(words in prop::collection::vec("[a-z0-9]{1,5}", 0..8), sep in "[ \t\n]{1,3}") {
            let a = words.join(" ");
            let b = words.join(&sep);
            prop_assert!(tokens_match(a.as_bytes(), b.as_bytes()));
        }
    }
}
