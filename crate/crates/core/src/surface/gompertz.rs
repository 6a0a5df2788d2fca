//! Gompertz-Makeham initial surfaces.
//!
//! The spot curve `γ₀(z) = (θ₁+1)(θ₃e^{θ₄z}+θ₅)` is extended to a forward
//! surface with improvements `j₀(s,y) = θ₂e^{−θ₂s}(θ₃e^{θ₄(s+y)}+θ₅)`,
//! giving `μ₀(s,y) = (θ₁+e^{−θ₂s})(θ₃e^{θ₄(s+y)}+θ₅)`. Along a fixed
//! terminal age the rates decay to the Gompertz-Makeham law scaled by `θ₁`.

use super::{AgeCurve, Surface, SurfaceGrid};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GompertzParams<T> {
    pub theta1: T,
    pub theta2: T,
    pub theta3: T,
    pub theta4: T,
    pub theta5: T,
}

impl<T: Scalar> GompertzParams<T> {
    pub fn new(theta1: T, theta2: T, theta3: T, theta4: T, theta5: T) -> Result<Self> {
        let p = Self {
            theta1,
            theta2,
            theta3,
            theta4,
            theta5,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn from_array(t: [T; 5]) -> Result<Self> {
        Self::new(t[0], t[1], t[2], t[3], t[4])
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.theta1,
            self.theta2,
            self.theta3,
            self.theta4,
            self.theta5,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("theta", "must be finite"));
        }
        if !(self.theta1 > T::one()) {
            return Err(Error::invalid("theta1", "must exceed 1"));
        }
        for (name, v) in [
            ("theta2", self.theta2),
            ("theta3", self.theta3),
            ("theta4", self.theta4),
            ("theta5", self.theta5),
        ] {
            if !(v > T::zero()) {
                return Err(Error::invalid(name, "must be positive"));
            }
        }
        Ok(())
    }

    /// Gompertz-Makeham law `θ₃e^{θ₄z}+θ₅`.
    fn law(&self, z: T) -> T {
        self.theta3 * (self.theta4 * z).exp() + self.theta5
    }

    pub fn gamma0(&self, z: T) -> T {
        (self.theta1 + T::one()) * self.law(z)
    }

    pub fn mu0(&self, s: T, y: T) -> T {
        (self.theta1 + (-self.theta2 * s).exp()) * self.law(s + y)
    }

    pub fn j0(&self, s: T, y: T) -> T {
        self.theta2 * (-self.theta2 * s).exp() * self.law(s + y)
    }

    /// Antiderivative in `u` of `μ₀(u, x)` (the cohort aged `x` at time 0
    /// followed along its own diagonal).
    fn cohort_antiderivative(&self, u: T, x: T) -> T {
        let (t1, t2, t3, t4, t5) = (
            self.theta1,
            self.theta2,
            self.theta3,
            self.theta4,
            self.theta5,
        );
        let ex = (t4 * x).exp();
        let d = t4 - t2;
        let cross = if d.abs() > T::lit(1e-12) {
            (d * u).exp_m1() / d
        } else {
            u
        };
        t1 * t3 * ex * (t4 * u).exp_m1() / t4 + t1 * t5 * u + t3 * ex * cross
            - t5 * (-t2 * u).exp_m1() / t2
    }

    /// `∫_a^b μ₀(u, x) du` in closed form.
    pub fn integrated_rate(&self, a: T, b: T, x: T) -> T {
        self.cohort_antiderivative(b, x) - self.cohort_antiderivative(a, x)
    }

    /// Time-0 survival `exp(−∫_{−x∨0}^T μ₀(u, x) du)`, equal to 1 when the
    /// cohort is unborn until `T`.
    pub fn survival0(&self, maturity: T, x: T) -> T {
        let lo = (-x).max(T::zero());
        if maturity <= lo {
            return T::one();
        }
        (-self.integrated_rate(lo, maturity, x)).exp()
    }
}

/// Samples `(j₀, μ₀, γ₀)` on `grid`.
pub fn gompertz_makeham_surfaces<T: Scalar>(
    p: &GompertzParams<T>,
    grid: SurfaceGrid<T>,
) -> Result<(Surface<T>, Surface<T>, AgeCurve<T>)> {
    p.validate()?;
    let j0 = Surface::from_fn(grid, |s, y| p.j0(s, y))?;
    let mu0 = Surface::from_fn(grid, |s, y| p.mu0(s, y))?;
    let gamma0 = AgeCurve::from_fn(&grid, |z| p.gamma0(z))?;
    Ok((j0, mu0, gamma0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> GompertzParams<f64> {
        GompertzParams::new(2.0, 0.1, 1e-4, 0.1, 1e-3).unwrap()
    }

    #[test]
    fn rejects_bad_params() {
        assert!(GompertzParams::new(1.0, 0.1, 1e-4, 0.1, 1e-3).is_err());
        assert!(GompertzParams::new(2.0, 0.0, 1e-4, 0.1, 1e-3).is_err());
        assert!(GompertzParams::new(2.0, 0.1, 1e-4, 0.1, -1e-3).is_err());
    }

    #[test]
    fn closed_form_value() {
        let p = params();
        let v = p.mu0(10.0, 30.0);
        let expected = (2.0 + (-1.0f64).exp()) * (1e-4 * 4.0f64.exp() + 1e-3);
        assert!((v - expected).abs() < 1e-15);
        assert!((v - 1.529606e-2).abs() < 1e-7);
    }

    #[test]
    fn spot_row_and_long_horizon_limit() {
        let p = params();
        for y in [0.0, 10.0, 55.5] {
            assert!((p.mu0(0.0, y) - p.gamma0(y)).abs() < 1e-15);
        }
        let z = 40.0;
        let limit = p.theta1 * (p.theta3 * (p.theta4 * z).exp() + p.theta5);
        let far = p.mu0(400.0, z - 400.0);
        assert!((far - limit).abs() < 1e-12 * limit);
    }

    #[test]
    fn integrated_rate_matches_quadrature() {
        let p = params();
        let (a, b, x) = (0.0, 7.0, 35.0);
        let n = 20_000;
        let dx = (b - a) / n as f64;
        let mut acc = 0.5 * (p.mu0(a, x) + p.mu0(b, x));
        for k in 1..n {
            acc += p.mu0(a + k as f64 * dx, x);
        }
        acc *= dx;
        assert!((acc - p.integrated_rate(a, b, x)).abs() < 1e-9);
    }

    #[test]
    fn unborn_cohort_survives() {
        let p = params();
        assert_eq!(p.survival0(1.0, -2.0), 1.0);
        assert!(p.survival0(3.0, -2.0) < 1.0);
    }

    #[test]
    fn surfaces_on_grid() {
        let g = SurfaceGrid::new(0.5, 3, 4).unwrap();
        let (j0, mu0, gamma0) = gompertz_makeham_surfaces(&params(), g).unwrap();
        assert_eq!(mu0.get(0, 3), gamma0.values()[3]);
        assert!(j0.values().iter().all(|&v| v > 0.0));
    }
}
