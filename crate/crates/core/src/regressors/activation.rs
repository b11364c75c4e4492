//! Target activations for least squares with a nonlinear output.
//!
//! The linear solver is fitted against `f⁻¹(y)` and predictions are
//! `f(x̃·w)`, so any monotone `f` with a closed-form inverse turns ordinary
//! least squares into a model with a curved (and still extrapolating)
//! response.

use serde::{Deserialize, Serialize};

use crate::math;

/// Lower clamp applied to targets before `ln` / logit.
pub const TARGET_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Identity,
    /// `(x + 1)^0.5`
    PowHalf,
    /// `(x + 1)^0.25`
    PowQuarter,
    /// `(x + 1)^2`
    PowTwo,
    /// `e^x`
    Exp,
    /// `ln x`
    Log,
    /// `1 / (1 + e^-x)`
    Sigmoid,
}

impl Activation {
    pub const ALL: [Activation; 7] = [
        Self::Identity,
        Self::PowHalf,
        Self::PowQuarter,
        Self::PowTwo,
        Self::Exp,
        Self::Log,
        Self::Sigmoid,
    ];

    /// The six nonlinear variants.
    pub const NONLINEAR: [Activation; 6] = [
        Self::PowHalf,
        Self::PowQuarter,
        Self::PowTwo,
        Self::Exp,
        Self::Log,
        Self::Sigmoid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Identity => "identity",
            Self::PowHalf => "pow_half",
            Self::PowQuarter => "pow_quarter",
            Self::PowTwo => "pow_two",
            Self::Exp => "exp",
            Self::Log => "log",
            Self::Sigmoid => "sigmoid",
        }
    }

    /// Suffix used in report labels, e.g. `"D=0.25"` or `"Exp"`.
    pub fn label(self) -> Option<&'static str> {
        match self {
            Self::Identity => None,
            Self::PowHalf => Some("D=0.5"),
            Self::PowQuarter => Some("D=0.25"),
            Self::PowTwo => Some("D=2"),
            Self::Exp => Some("Exp"),
            Self::Log => Some("Log"),
            Self::Sigmoid => Some("Sigmoid"),
        }
    }

    fn exponent(self) -> Option<f64> {
        match self {
            Self::PowHalf => Some(0.5),
            Self::PowQuarter => Some(0.25),
            Self::PowTwo => Some(2.0),
            _ => None,
        }
    }

    /// `f(x)`. Fractional powers clamp their base at zero and `ln` clamps
    /// its argument at the smallest positive float, so the output is always
    /// finite for finite input.
    pub fn forward(self, x: f64) -> f64 {
        match self {
            Self::Identity => x,
            Self::PowTwo => (x + 1.0) * (x + 1.0),
            Self::PowHalf | Self::PowQuarter => {
                math::powf((x + 1.0).max(0.0), self.exponent().unwrap_or(1.0))
            }
            Self::Exp => math::exp(x),
            Self::Log => math::ln(x.max(f64::MIN_POSITIVE)),
            Self::Sigmoid => 1.0 / (1.0 + math::exp(-x)),
        }
    }

    /// `f⁻¹(y)` after clamping, or `None` when `y` is outside the
    /// activation's domain.
    ///
    /// Power activations need `y ≥ 0`; `exp` needs `y ≥ 0` and clamps to
    /// `[ε, ∞)`; `sigmoid` needs `y ∈ [0, 1]` and clamps to `[ε, 1 − ε]`.
    pub fn inverse(self, y: f64) -> Option<f64> {
        if !y.is_finite() {
            return None;
        }
        match self {
            Self::Identity => Some(y),
            Self::PowHalf | Self::PowQuarter | Self::PowTwo => {
                let d = self.exponent().unwrap_or(1.0);
                (y >= 0.0).then(|| math::powf(y, 1.0 / d) - 1.0)
            }
            Self::Exp => (y >= 0.0).then(|| math::ln(y.max(TARGET_EPSILON))),
            Self::Log => Some(math::exp(y)),
            Self::Sigmoid => (0.0..=1.0).contains(&y).then(|| {
                let p = y.clamp(TARGET_EPSILON, 1.0 - TARGET_EPSILON);
                math::ln(p / (1.0 - p))
            }),
        }
    }
}

impl core::str::FromStr for Activation {
    type Err = &'static str;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or("expected one of identity, pow_half, pow_quarter, pow_two, exp, log, sigmoid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fixed_points() {
        assert_eq!(Activation::Sigmoid.inverse(0.5).unwrap(), 0.0);
        assert_eq!(Activation::PowQuarter.inverse(1.0).unwrap(), 0.0);
        assert!((Activation::Exp.inverse(core::f64::consts::E).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(Activation::Identity.inverse(0.3), Some(0.3));
    }

    #[test]
    fn domains_and_clamps() {
        assert_eq!(Activation::PowHalf.inverse(-0.1), None);
        assert_eq!(Activation::Sigmoid.inverse(1.2), None);
        assert_eq!(Activation::Exp.inverse(0.0), Some(math::ln(TARGET_EPSILON)));
        let hi = Activation::Sigmoid.inverse(1.0).unwrap();
        assert!((Activation::Sigmoid.forward(hi) - (1.0 - TARGET_EPSILON)).abs() < 1e-15);
        assert!(Activation::Log.forward(-3.0).is_finite());
        assert_eq!(Activation::PowQuarter.forward(-5.0), 0.0);
        assert_eq!(Activation::Identity.inverse(f64::NAN), None);
    }

    #[test]
    fn sigmoid_range() {
        for x in [-30.0, -1.0, 0.0, 2.0, 30.0] {
            let v = Activation::Sigmoid.forward(x);
            assert!(v > 0.0 && v < 1.0 || x.abs() >= 30.0);
        }
    }

    proptest! {
        #[test]
        fn round_trip(y in 0.05..(1.0 - TARGET_EPSILON)) {
            for a in Activation::ALL {
                let back = a.forward(a.inverse(y).unwrap());
                // y^(1/d) - 1 cancels catastrophically as y -> 0, hence the lower bound
                prop_assert!((back - y).abs() <= 1e-9, "{} {} {}", a.name(), y, back);
            }
        }
    }
}
