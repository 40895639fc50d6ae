//! Quantization of fractions onto fixed decimal grids.

/// Steps per unit for the household propensity grid (0.02).
pub const PROPENSITY_STEPS: u32 = 50;

/// Steps per unit for the tax rate grid (0.01).
pub const RATE_STEPS: u32 = 100;

// Absorbs binary representation error so that e.g. 0.83 / 0.02 counts as a tie.
const TIE_SLACK: f64 = 1e-9;

/// Clamps `x` to `[0, 1]` and rounds it half-up onto a grid of `steps`
/// divisions per unit. Non-finite input maps to 0.
pub fn quantize_unit(x: f64, steps: u32) -> f64 {
    if !x.is_finite() {
        return 0.0;
    }
    let steps_f = f64::from(steps);
    let k = (x.clamp(0.0, 1.0) * steps_f + 0.5 + TIE_SLACK).floor();
    k.min(steps_f) / steps_f
}

/// Rounds onto the 0.02 propensity grid.
pub fn round02(x: f64) -> f64 {
    quantize_unit(x, PROPENSITY_STEPS)
}

/// Rounds onto the 0.01 rate grid.
pub fn round01(x: f64) -> f64 {
    quantize_unit(x, RATE_STEPS)
}

/// True when `x` is in `[0, 1]` and an exact grid point.
pub fn on_grid(x: f64, steps: u32) -> bool {
    (0.0..=1.0).contains(&x) && quantize_unit(x, steps) == x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_up_on_propensity_grid() {
        assert_eq!(round02(0.83), 0.84);
        assert_eq!(round02(0.81), 0.82);
        assert_eq!(round02(0.829), 0.82);
        assert_eq!(round02(0.0), 0.0);
        assert_eq!(round02(1.0), 1.0);
    }

    #[test]
    fn clamps_out_of_range() {
        assert_eq!(round02(1.5), 1.0);
        assert_eq!(round02(-0.3), 0.0);
        assert_eq!(round01(f64::NAN), 0.0);
        assert_eq!(round01(f64::INFINITY), 0.0);
    }

    #[test]
    fn rate_grid() {
        assert_eq!(round01(0.125), 0.13);
        assert_eq!(round01(0.37), 0.37);
        assert!(on_grid(0.37, RATE_STEPS));
        assert!(!on_grid(0.375, RATE_STEPS));
        assert!(on_grid(0.84, PROPENSITY_STEPS));
        assert!(!on_grid(0.83, PROPENSITY_STEPS));
    }
}
