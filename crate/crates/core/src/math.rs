//! Small numeric helpers shared across modules.
//!
//! Rounding is half-away-from-zero everywhere, which is what `libm::round` does.

#[inline]
pub fn round(x: f64) -> f64 {
    libm::round(x)
}

/// Rounds and saturates into the byte range.
#[inline]
pub fn round_to_u8(x: f64) -> u8 {
    if (0.0..255.0).contains(&x) {
        // Truncation is exact here, and so is the fractional part.
        let t = x as u8;
        return t + u8::from(x - f64::from(t) >= 0.5);
    }
    let r = libm::round(x);
    if r <= 0.0 {
        0
    } else if r >= 255.0 {
        255
    } else {
        r as u8
    }
}

#[inline]
pub fn round_to_i64(x: f64) -> i64 {
    libm::round(x) as i64
}

/// Root mean square of a slice; 0 for an empty slice.
pub fn rms(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let ss: f64 = values.iter().map(|v| v * v).sum();
    libm::sqrt(ss / values.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_away_from_zero() {
        assert_eq!(round(0.5), 1.0);
        assert_eq!(round(1.5), 2.0);
        assert_eq!(round(2.5), 3.0);
        assert_eq!(round(-0.5), -1.0);
        assert_eq!(round_to_u8(127.5), 128);
        assert_eq!(round_to_u8(-3.0), 0);
        assert_eq!(round_to_u8(300.0), 255);
    }

    #[test]
    fn rms_basic() {
        assert_eq!(rms(&[]), 0.0);
        assert!((rms(&[3.0, 4.0]) - libm::sqrt(12.5)).abs() < 1e-15);
    }
}
