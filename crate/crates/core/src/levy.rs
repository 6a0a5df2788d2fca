//! Driving noise: a finite-factor Wiener process plus a finite-activity
//! compound Poisson part, with the cumulant function of the associated
//! one-dimensional Lévy process.
//!
//! The Lévy measure is a finite list of marks `ξ_i` with intensities `w_i`,
//! so every integral against it becomes a finite sum:
//!
//! ```text
//! Ψ(z)   = B z + (C/2) z² + Σ_i w_i (e^{z ξ_i} − 1 − z ξ_i)
//! Ψ'(z)  = B + C z + Σ_i w_i ξ_i (e^{z ξ_i} − 1)
//! Ψ''(z) = C + Σ_i w_i ξ_i² e^{z ξ_i}
//! ```
//!
//! `B` is the mean drift of the compensated process, so the jump-diffusion
//! `X = W + N` (standard Wiener plus unit-rate Poisson) has `C = 1`, one
//! mark `ξ = 1` with `w = 1`, and `B = 1`: then
//! `Bz + z²/2 + (e^z − 1 − z) = z²/2 + e^z − 1`, and `B = Ψ'(0) = E[X_1] = 1`.
//! See [`LevyDriverSpec::jump_diffusion`].
//!
//! Cumulants are only evaluated inside the exponential-moment window
//! `[−(1+ε)M, (1+ε)M]`. A driver may be extended to the whole half line
//! `[−(1+ε)M, ∞)` with [`LevyDriverSpec::with_half_line_extension`], which is
//! what improvement-volatility drifts need because their cumulant arguments
//! are nonnegative double integrals of unbounded size.

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One atom of the finite Lévy measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpMark<T> {
    /// Jump size `ξ`.
    pub xi: T,
    /// Arrival intensity `w` per unit time.
    pub intensity: T,
}

/// Exponential-moment window `|z| ≤ (1+ε)M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentWindow<T> {
    pub bound: T,
    pub eps: T,
}

impl<T: Scalar> MomentWindow<T> {
    pub fn new(bound: T, eps: T) -> Result<Self> {
        if !(bound > T::zero()) || !bound.is_finite() {
            return Err(Error::invalid("window.M", "must be positive and finite"));
        }
        if !(eps > T::zero()) || !eps.is_finite() {
            return Err(Error::invalid("window.eps", "must be positive and finite"));
        }
        Ok(Self { bound, eps })
    }

    /// Half-width `(1+ε)M`.
    pub fn radius(&self) -> T {
        (T::one() + self.eps) * self.bound
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevyDriverSpec<T> {
    drift_b: T,
    gaussian_c: T,
    jump_marks: Vec<JumpMark<T>>,
    wiener_factors: usize,
    window: MomentWindow<T>,
    half_line: bool,
}

impl<T: Scalar> LevyDriverSpec<T> {
    pub fn new(
        drift_b: T,
        gaussian_c: T,
        jump_marks: Vec<JumpMark<T>>,
        wiener_factors: usize,
        window: MomentWindow<T>,
    ) -> Result<Self> {
        if !drift_b.is_finite() {
            return Err(Error::invalid("drift_b", "must be finite"));
        }
        if !(gaussian_c >= T::zero()) || !gaussian_c.is_finite() {
            return Err(Error::invalid(
                "gaussian_c",
                "must be finite and nonnegative",
            ));
        }
        if gaussian_c > T::zero() && wiener_factors == 0 {
            return Err(Error::invalid(
                "wiener_factors",
                "a positive Gaussian part needs at least one Wiener factor",
            ));
        }
        for m in &jump_marks {
            if !m.xi.is_finite() {
                return Err(Error::invalid("jump_marks.xi", "must be finite"));
            }
            if !(m.intensity >= T::zero()) || !m.intensity.is_finite() {
                return Err(Error::invalid(
                    "jump_marks.w",
                    "must be finite and nonnegative",
                ));
            }
        }
        let spec = Self {
            drift_b,
            gaussian_c,
            jump_marks,
            wiener_factors,
            window,
            half_line: false,
        };
        let bound = spec.exponential_moment_bound();
        if !bound.is_finite() {
            return Err(Error::invalid(
                "window",
                format!("Σ w·exp((1+ε)M|ξ|) = {bound} is not finite"),
            ));
        }
        Ok(spec)
    }

    /// `X = W + N` with `Ψ(z) = z²/2 + e^z − 1` and one Wiener factor.
    pub fn jump_diffusion(window: MomentWindow<T>) -> Result<Self> {
        Self::new(
            T::one(),
            T::one(),
            vec![JumpMark {
                xi: T::one(),
                intensity: T::one(),
            }],
            1,
            window,
        )
    }

    /// Allows cumulant evaluation on `[−(1+ε)M, ∞)`.
    ///
    /// A finite mark list has exponential moments of every order, so the
    /// extension is always admissible; the check is kept so that a future
    /// infinite-activity representation has a place to refuse.
    pub fn with_half_line_extension(mut self) -> Result<Self> {
        if self.jump_marks.iter().any(|m| !m.xi.is_finite()) {
            return Err(Error::invalid(
                "jump_marks",
                "half-line extension needs finite marks",
            ));
        }
        self.half_line = true;
        Ok(self)
    }

    pub fn drift_b(&self) -> T {
        self.drift_b
    }

    pub fn gaussian_c(&self) -> T {
        self.gaussian_c
    }

    pub fn jump_marks(&self) -> &[JumpMark<T>] {
        &self.jump_marks
    }

    pub fn wiener_factors(&self) -> usize {
        self.wiener_factors
    }

    pub fn window(&self) -> MomentWindow<T> {
        self.window
    }

    pub fn is_half_line_extended(&self) -> bool {
        self.half_line
    }

    /// `Σ_i w_i e^{(1+ε)M|ξ_i|}`, the finite-sum form of the exponential
    /// moment condition.
    pub fn exponential_moment_bound(&self) -> T {
        let r = self.window.radius();
        self.jump_marks
            .iter()
            .map(|m| m.intensity * (r * m.xi.abs()).exp())
            .sum()
    }

    /// Closed interval on which cumulants may be evaluated. The upper end is
    /// `+∞` after [`with_half_line_extension`](Self::with_half_line_extension).
    pub fn window_bounds(&self) -> (T, T) {
        let r = self.window.radius();
        let hi = if self.half_line { T::infinity() } else { r };
        (-r, hi)
    }

    fn check(&self, z: T) -> Result<()> {
        let (lo, hi) = self.window_bounds();
        if z.is_nan() || z < lo || z > hi {
            return Err(Error::CumulantWindow {
                z: z.as_f64(),
                lo: lo.as_f64(),
                hi: hi.as_f64(),
            });
        }
        Ok(())
    }

    pub fn cumulant(&self, z: T) -> Result<T> {
        self.check(z)?;
        let jumps: T = self
            .jump_marks
            .iter()
            .map(|m| m.intensity * ((z * m.xi).exp_m1() - z * m.xi))
            .sum();
        Ok(self.drift_b * z + T::half() * self.gaussian_c * z * z + jumps)
    }

    pub fn cumulant_d1(&self, z: T) -> Result<T> {
        self.check(z)?;
        let jumps: T = self
            .jump_marks
            .iter()
            .map(|m| m.intensity * m.xi * (z * m.xi).exp_m1())
            .sum();
        Ok(self.drift_b + self.gaussian_c * z + jumps)
    }

    pub fn cumulant_d2(&self, z: T) -> Result<T> {
        self.check(z)?;
        let jumps: T = self
            .jump_marks
            .iter()
            .map(|m| m.intensity * m.xi * m.xi * (z * m.xi).exp())
            .sum();
        Ok(self.gaussian_c + jumps)
    }

    /// `Σ_i w_i ξ_i`: mean jump contribution per unit time of the raw
    /// (uncompensated) jump part.
    pub fn jump_mean_rate(&self) -> T {
        self.jump_marks.iter().map(|m| m.intensity * m.xi).sum()
    }
}

/// One time increment of the driving noise.
#[derive(Debug, Clone, PartialEq)]
pub struct Increment<T> {
    /// Independent `N(0, dt)` draws, one per Wiener factor.
    pub wiener: Vec<T>,
    /// Raw Poisson occurrence counts, one per jump mark.
    pub jump_counts: Vec<u32>,
}

impl<T: Scalar> Increment<T> {
    /// Occurrences as a flat list of mark values.
    pub fn jumps(&self, spec: &LevyDriverSpec<T>) -> Vec<T> {
        self.jump_counts
            .iter()
            .zip(spec.jump_marks())
            .flat_map(|(&n, m)| std::iter::repeat_n(m.xi, n as usize))
            .collect()
    }

    /// `B dt + √C W¹_dt + Σ ξ_i N_i`, minus `dt Σ w_i ξ_i` when
    /// `compensated`. The compensated value is the increment of the process
    /// whose cumulant is [`LevyDriverSpec::cumulant`].
    pub fn levy_value(&self, spec: &LevyDriverSpec<T>, dt: T, compensated: bool) -> T {
        let gauss = self
            .wiener
            .first()
            .map_or(T::zero(), |&w| spec.gaussian_c().sqrt() * w);
        let jumps: T = self
            .jump_counts
            .iter()
            .zip(spec.jump_marks())
            .map(|(&n, m)| T::from_u32(n).unwrap() * m.xi)
            .sum();
        let comp = if compensated {
            dt * spec.jump_mean_rate()
        } else {
            T::zero()
        };
        spec.drift_b() * dt + gauss + jumps - comp
    }
}

/// Increment sampler for a fixed step size.
#[derive(Debug, Clone)]
pub struct IncrementSampler {
    factors: usize,
    sqrt_dt: f64,
    poisson: Vec<Option<Poisson<f64>>>,
}

impl IncrementSampler {
    pub fn new<T: Scalar>(spec: &LevyDriverSpec<T>, dt: T) -> Self {
        assert!(dt > T::zero(), "increment step must be positive");
        let dt = dt.as_f64();
        let poisson = spec
            .jump_marks()
            .iter()
            .map(|m| {
                let lambda = m.intensity.as_f64() * dt;
                (lambda > 0.0).then(|| Poisson::new(lambda).expect("finite positive Poisson mean"))
            })
            .collect();
        Self {
            factors: spec.wiener_factors(),
            sqrt_dt: dt.sqrt(),
            poisson,
        }
    }

    pub fn sample_into<T: Scalar, R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Increment<T>) {
        out.wiener.clear();
        for _ in 0..self.factors {
            let z: f64 = rng.sample(StandardNormal);
            out.wiener.push(T::lit(z * self.sqrt_dt));
        }
        out.jump_counts.clear();
        for p in &self.poisson {
            let n = p.as_ref().map_or(0, |p| p.sample(rng) as u32);
            out.jump_counts.push(n);
        }
    }

    pub fn sample<T: Scalar, R: Rng + ?Sized>(&self, rng: &mut R) -> Increment<T> {
        let mut out = Increment {
            wiener: Vec::with_capacity(self.factors),
            jump_counts: Vec::with_capacity(self.poisson.len()),
        };
        self.sample_into(rng, &mut out);
        out
    }
}

/// Draws one increment over `dt`. Jumps are returned raw; compensation is
/// left to the consumer.
pub fn sample_increment<T: Scalar, R: Rng + ?Sized>(
    spec: &LevyDriverSpec<T>,
    dt: T,
    rng: &mut R,
) -> Increment<T> {
    IncrementSampler::new(spec, dt).sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn wide() -> MomentWindow<f64> {
        MomentWindow::new(10.0, 0.1).unwrap()
    }

    #[test]
    fn jump_diffusion_cumulant_values() {
        let spec = LevyDriverSpec::jump_diffusion(wide()).unwrap();
        assert_eq!(spec.cumulant(0.0).unwrap(), 0.0);
        let e = std::f64::consts::E;
        assert!((spec.cumulant(1.0).unwrap() - (0.5 + e - 1.0)).abs() < 1e-14);
        assert!((spec.cumulant_d1(0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((spec.cumulant_d1(0.5).unwrap() - (0.5 + 0.5_f64.exp())).abs() < 1e-14);
        assert!((spec.cumulant_d1(0.5).unwrap() - 2.148_721_270_700_128).abs() < 1e-12);
    }

    #[test]
    fn pure_gaussian_cumulant() {
        let spec = LevyDriverSpec::new(0.0, 1.0, vec![], 1, wide()).unwrap();
        assert_eq!(spec.cumulant(2.0).unwrap(), 2.0);
        assert_eq!(spec.cumulant_d2(-3.0).unwrap(), 1.0);
    }

    #[test]
    fn window_is_enforced() {
        let spec = LevyDriverSpec::jump_diffusion(MomentWindow::new(1.0, 0.5).unwrap()).unwrap();
        assert!(spec.cumulant(1.5).is_ok());
        assert!(matches!(
            spec.cumulant(1.6),
            Err(Error::CumulantWindow { .. })
        ));
        assert!(spec.cumulant_d2(-1.6).is_err());
        let ext = spec.with_half_line_extension().unwrap();
        assert!(ext.cumulant_d1(50.0).is_ok());
        assert!(ext.cumulant_d1(-1.6).is_err());
    }

    #[test]
    fn rejects_invalid_specs() {
        let w = wide();
        assert!(LevyDriverSpec::new(0.0, -1.0, vec![], 1, w).is_err());
        assert!(LevyDriverSpec::new(0.0, 1.0, vec![], 0, w).is_err());
        let bad = JumpMark {
            xi: 1.0,
            intensity: -0.1,
        };
        assert!(LevyDriverSpec::new(0.0, 0.0, vec![bad], 0, w).is_err());
        assert!(MomentWindow::new(0.0, 0.1).is_err());
        assert!(MomentWindow::new(1.0, 0.0).is_err());
        // exponential moment overflow is caught
        let huge = JumpMark {
            xi: 1e3,
            intensity: 1.0,
        };
        assert!(LevyDriverSpec::new(0.0, 0.0, vec![huge], 0, w).is_err());
    }

    #[test]
    fn second_derivative_nonnegative_on_grid() {
        let marks = vec![
            JumpMark {
                xi: -0.7,
                intensity: 2.0,
            },
            JumpMark {
                xi: 0.3,
                intensity: 0.5,
            },
        ];
        let spec = LevyDriverSpec::new(0.2, 0.0, marks, 0, wide()).unwrap();
        for k in 0..100 {
            let z = -10.0 + 20.0 * k as f64 / 99.0;
            assert!(spec.cumulant_d2(z).unwrap() >= 0.0);
        }
    }

    #[test]
    fn increment_structure() {
        let spec = LevyDriverSpec::new(0.0, 1.0, vec![], 2, wide()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let inc = sample_increment(&spec, 1.0, &mut rng);
        assert_eq!(inc.wiener.len(), 2);
        assert!(inc.jumps(&spec).is_empty());
    }

    #[test]
    fn poisson_counts_have_mean_w_dt() {
        let spec = LevyDriverSpec::new(
            0.0,
            0.0,
            vec![JumpMark {
                xi: 1.0,
                intensity: 3.0,
            }],
            0,
            wide(),
        )
        .unwrap();
        let sampler = IncrementSampler::new(&spec, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let total: u64 = (0..n)
            .map(|_| sampler.sample::<f64, _>(&mut rng).jump_counts[0] as u64)
            .sum();
        let mean = total as f64 / n as f64;
        let se = (3.0 / n as f64).sqrt();
        assert!((mean - 3.0).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn wiener_variance_is_dt() {
        let spec = LevyDriverSpec::new(0.0, 1.0, vec![], 1, wide()).unwrap();
        let sampler = IncrementSampler::new(&spec, 0.01);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| sampler.sample::<f64, _>(&mut rng).wiener[0])
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        // Var of the sample variance of a Gaussian: 2σ⁴/(n−1)
        let se = (2.0 * 0.01_f64.powi(2) / (n - 1) as f64).sqrt();
        assert!((var - 0.01).abs() < 3.0 * se, "var {var}");
    }

    #[test]
    fn raw_increment_mean_includes_jump_mean() {
        let spec = LevyDriverSpec::jump_diffusion(wide()).unwrap();
        let dt = 0.1;
        let sampler = IncrementSampler::new(&spec, dt);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| {
                sampler
                    .sample::<f64, _>(&mut rng)
                    .levy_value(&spec, dt, false)
            })
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let expected = dt * (spec.drift_b() + spec.jump_mean_rate());
        assert!((mean - expected).abs() < 3.0 * (var / n as f64).sqrt());
    }
}
