//! Number formatting shared by the prompt templates.

/// Two fixed decimals, e.g. `808.33`, `0.10`.
pub fn fixed2(x: f64) -> String {
    format!("{x:.2}")
}

/// Rounds to two decimals and prints the shortest form with at least one
/// fractional digit, e.g. `4744.9`, `0.0`, `11.26`.
pub fn short2(x: f64) -> String {
    let rounded = (x * 100.0).round() / 100.0;
    let rounded = if rounded == 0.0 { 0.0 } else { rounded };
    let s = format!("{rounded}");
    if s.contains(['.', 'e', 'E']) || !rounded.is_finite() {
        s
    } else {
        format!("{s}.0")
    }
}

/// `[a, b, c]` with each element rendered by `f`.
pub fn list<F: Fn(f64) -> String>(values: &[f64], f: F) -> String {
    let items: Vec<String> = values.iter().map(|&v| f(v)).collect();
    format!("[{}]", items.join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_form() {
        assert_eq!(short2(4744.9), "4744.9");
        assert_eq!(short2(0.0), "0.0");
        assert_eq!(short2(-0.0), "0.0");
        assert_eq!(short2(11.256), "11.26");
        assert_eq!(short2(80016.97), "80016.97");
        assert_eq!(short2(0.1), "0.1");
        assert_eq!(short2(294174.67), "294174.67");
    }

    #[test]
    fn fixed_lists() {
        assert_eq!(list(&[0.0, 808.33], fixed2), "[0.00, 808.33]");
        assert_eq!(list(&[0.1, 0.12], short2), "[0.1, 0.12]");
    }
}
