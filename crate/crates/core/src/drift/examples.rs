//! Closed-form improvement volatilities with known drifts, used as oracles.
//!
//! Each case fixes `b̂`; then `σ̂ = −Q[b̂]` and the drifts follow from the
//! Lévy forms with `P[b̂]` and `D[b̂] = −P[σ̂]` integrated symbolically. All
//! branch on the sign of the current age `y` through the lower limit `−y∨0`.
//!
//! For the damped case `b̂ = (s+y)(1−e^{−s})` the antiderivatives are
//!
//! ```text
//! ∫ (u+y)(1−e^{−u}) du      = (u+y)²/2 + (u+y+1)e^{−u}
//! ∫ (u+y)(e^{−u}+u−1) du    = −(u+y+1)e^{−u} + u³/3 + (y−1)u²/2 − yu
//! ```
//!
//! evaluated between `−y∨0` and `s`.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::levy::LevyDriverSpec;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosedFormExample {
    /// `b̂ ≡ 1`, `σ̂ = −s`.
    ConstantImprovementVol,
    /// `b̂ = s + y`, `σ̂ = −s(s+y)`.
    TerminalAgeVol,
    /// `b̂ = (s+y)(1 − e^{−s})`, `σ̂ = −(s+y)(e^{−s} + s − 1)`.
    DampedTerminalAgeVol,
}

impl ClosedFormExample {
    pub const ALL: [Self; 3] = [
        Self::ConstantImprovementVol,
        Self::TerminalAgeVol,
        Self::DampedTerminalAgeVol,
    ];

    /// Selector `1`, `2` or `3`.
    pub fn from_index(which: u32) -> Result<Self> {
        match which {
            1 => Ok(Self::ConstantImprovementVol),
            2 => Ok(Self::TerminalAgeVol),
            3 => Ok(Self::DampedTerminalAgeVol),
            _ => Err(Error::invalid(
                "example",
                format!("selector {which} is not 1, 2 or 3"),
            )),
        }
    }

    pub fn index(self) -> u32 {
        match self {
            Self::ConstantImprovementVol => 1,
            Self::TerminalAgeVol => 2,
            Self::DampedTerminalAgeVol => 3,
        }
    }

    /// `b̂(s, y)`.
    pub fn b<T: Scalar>(self, s: T, y: T) -> T {
        match self {
            Self::ConstantImprovementVol => T::one(),
            Self::TerminalAgeVol => s + y,
            Self::DampedTerminalAgeVol => -(s + y) * (-s).exp_m1(),
        }
    }

    /// `σ̂(s, y) = −∫₀^s b̂(u, s+y−u) du`.
    pub fn sigma<T: Scalar>(self, s: T, y: T) -> T {
        -self.q(s, y)
    }

    /// `Q[b̂](s, y)`.
    fn q<T: Scalar>(self, s: T, y: T) -> T {
        match self {
            Self::ConstantImprovementVol => s,
            Self::TerminalAgeVol => s * (s + y),
            Self::DampedTerminalAgeVol => (s + y) * ((-s).exp_m1() + s),
        }
    }

    /// `P[b̂](s, y) = ∫_{−y∨0}^s b̂(u, y) du`.
    fn p<T: Scalar>(self, s: T, y: T) -> T {
        let neg = y < T::zero();
        let half = T::half();
        match self {
            Self::ConstantImprovementVol => {
                if neg {
                    s + y
                } else {
                    s
                }
            }
            Self::TerminalAgeVol => {
                let base = half * s * s + s * y;
                if neg {
                    base + half * y * y
                } else {
                    base
                }
            }
            Self::DampedTerminalAgeVol => {
                let anti = |u: T| half * (u + y) * (u + y) + (u + y + T::one()) * (-u).exp();
                anti(s) - anti((-y).max(T::zero()))
            }
        }
    }

    /// `D[b̂](s, y) = ∫_{−y∨0}^s ∫₀^u b̂(v, u+y−v) dv du`.
    fn d<T: Scalar>(self, s: T, y: T) -> T {
        let neg = y < T::zero();
        let half = T::half();
        let six = T::lit(6.0);
        match self {
            Self::ConstantImprovementVol => {
                if neg {
                    half * (s * s - y * y)
                } else {
                    half * s * s
                }
            }
            Self::TerminalAgeVol => {
                let base = (T::lit(3.0) * s * s * y + T::lit(2.0) * s * s * s) / six;
                if neg {
                    base - y * y * y / six
                } else {
                    base
                }
            }
            Self::DampedTerminalAgeVol => {
                let anti = |u: T| {
                    -(u + y + T::one()) * (-u).exp()
                        + u * u * u / T::lit(3.0)
                        + (y - T::one()) * u * u * half
                        - y * u
                };
                anti(s) - anti((-y).max(T::zero()))
            }
        }
    }

    /// `α̂(s, y) = −σ̂ Ψ'(D)`.
    pub fn alpha<T: Scalar>(self, s: T, y: T, driver: &LevyDriverSpec<T>) -> Result<T> {
        Ok(-self.sigma(s, y) * driver.cumulant_d1(self.d(s, y))?)
    }

    /// `â(s, y) = −Q P Ψ''(D) − b̂ Ψ'(D)`.
    pub fn a<T: Scalar>(self, s: T, y: T, driver: &LevyDriverSpec<T>) -> Result<T> {
        let d = self.d(s, y);
        Ok(-self.q(s, y) * self.p(s, y) * driver.cumulant_d2(d)?
            - self.b(s, y) * driver.cumulant_d1(d)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExampleField {
    A,
    B,
    Alpha,
    Sigma,
}

impl FromStr for ExampleField {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a" => Ok(Self::A),
            "b" => Ok(Self::B),
            "alpha" => Ok(Self::Alpha),
            "sigma" => Ok(Self::Sigma),
            _ => Err(Error::invalid(
                "field",
                format!("`{s}` is not one of a, b, alpha, sigma"),
            )),
        }
    }
}

/// Closed-form value of `field` for example `which ∈ {1, 2, 3}` at `(s, y)`.
pub fn example_closed_form<T: Scalar>(
    which: u32,
    field: ExampleField,
    s: T,
    y: T,
    driver: &LevyDriverSpec<T>,
) -> Result<T> {
    let ex = ClosedFormExample::from_index(which)?;
    match field {
        ExampleField::A => ex.a(s, y, driver),
        ExampleField::B => Ok(ex.b(s, y)),
        ExampleField::Alpha => ex.alpha(s, y, driver),
        ExampleField::Sigma => Ok(ex.sigma(s, y)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::MomentWindow;

    fn jd() -> LevyDriverSpec<f64> {
        LevyDriverSpec::jump_diffusion(MomentWindow::new(1.0, 0.1).unwrap())
            .unwrap()
            .with_half_line_extension()
            .unwrap()
    }

    #[test]
    fn printed_volatilities() {
        let d = jd();
        assert_eq!(
            example_closed_form(1, ExampleField::Sigma, 2.0, 5.0, &d).unwrap(),
            -2.0
        );
        assert_eq!(
            example_closed_form(2, ExampleField::Sigma, 2.0, 5.0, &d).unwrap(),
            -14.0
        );
        let b3 = example_closed_form(3, ExampleField::B, 1.0, 1.0, &d).unwrap();
        assert!((b3 - 1.264_241_117_657_115).abs() < 1e-12);
        assert!(example_closed_form(4, ExampleField::B, 1.0, 1.0, &d).is_err());
        assert!(example_closed_form(0, ExampleField::B, 1.0, 1.0, &d).is_err());
    }

    #[test]
    fn constant_vol_drift_values() {
        let d = jd();
        let alpha = example_closed_form(1, ExampleField::Alpha, 1.0, 0.25, &d).unwrap();
        assert!((alpha - 2.148_721_270_700_128).abs() < 1e-12);
        let alpha_neg = example_closed_form(1, ExampleField::Alpha, 1.0, -0.5, &d).unwrap();
        assert!((alpha_neg - (0.375 + 0.375f64.exp())).abs() < 1e-12);
        let a = example_closed_form(1, ExampleField::A, 1.0, 0.25, &d).unwrap();
        assert!((a - (-1.5 - 2.0 * 0.5f64.exp())).abs() < 1e-12);
    }

    // Reference values from exact symbolic integration.
    #[test]
    fn damped_vol_integrals() {
        let ex = ClosedFormExample::DampedTerminalAgeVol;
        let cases = [
            (
                1.0_f64,
                0.5_f64,
                0.419_698_602_928_605_84,
                0.163_634_730_404_727_42,
            ),
            (2.0, 1.5, 3.109_008_774_564_757_4, 2.557_657_892_101_909_5),
            (1.5, -0.5, 0.339_729_660_584_226_16, 0.243_603_672_749_107_1),
            (2.5, -1.0, 0.962_333_055_388_304_7, 1.287_666_944_611_695),
        ];
        for (s, y, p, d) in cases {
            assert!((ex.p(s, y) - p).abs() < 1e-13, "P({s},{y})");
            assert!((ex.d(s, y) - d).abs() < 1e-13, "D({s},{y})");
        }
    }

    #[test]
    fn field_parsing() {
        assert_eq!(
            "alpha".parse::<ExampleField>().unwrap(),
            ExampleField::Alpha
        );
        assert!("gamma".parse::<ExampleField>().is_err());
    }
}
