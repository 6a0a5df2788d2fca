//! Death times of a cohort driven by one simulated hazard path.
//!
//! Individuals are conditionally independent given the path: each draws a
//! unit exponential `ε` and dies at `τ = inf{t : Γ(t) > ε}` where `Γ` is the
//! cohort's cumulative hazard. Paths that never reach `ε` before the end of
//! the simulation are censored there.

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::scalar::{grid_index, mean_and_std_err, Scalar};
use crate::simulate::SpotPath;

/// Piecewise-linear, nondecreasing cumulative hazard `t ↦ Γ(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HazardPath<T> {
    times: Vec<T>,
    cumulative: Vec<T>,
    /// Number of negative spot values replaced by zero while accumulating.
    floored: usize,
}

impl<T: Scalar> HazardPath<T> {
    pub fn new(times: Vec<T>, cumulative: Vec<T>) -> Result<Self> {
        if times.len() != cumulative.len() || times.len() < 2 {
            return Err(Error::invalid(
                "hazard",
                "needs at least two knots with one value each",
            ));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("hazard", "knot times must increase"));
        }
        if cumulative.iter().any(|v| !v.is_finite()) || cumulative.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::invalid(
                "hazard",
                "cumulative hazard must be finite and nondecreasing",
            ));
        }
        Ok(Self {
            times,
            cumulative,
            floored: 0,
        })
    }

    /// `Γ(t) = m·(t + x)₊` on `n_knots` equally spaced knots over `[0, t_end]`,
    /// i.e. a constant hazard for a cohort aged `x` at time 0.
    pub fn constant(rate: T, x: T, t_end: T, n_knots: usize) -> Result<Self> {
        if !(rate >= T::zero()) {
            return Err(Error::invalid("rate", "must be nonnegative"));
        }
        let n = n_knots.max(2);
        let mut times: Vec<T> = (0..n)
            .map(|k| t_end * T::from_usize(k).unwrap() / T::from_usize(n - 1).unwrap())
            .collect();
        // put a knot at birth so the kink is represented exactly
        let birth = -x;
        if birth > T::zero() && birth < t_end && !times.contains(&birth) {
            let pos = times.partition_point(|&t| t < birth);
            times.insert(pos, birth);
        }
        let cumulative = times
            .iter()
            .map(|&t| rate * (t + x).max(T::zero()))
            .collect();
        Self::new(times, cumulative)
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn cumulative(&self) -> &[T] {
        &self.cumulative
    }

    pub fn floored(&self) -> usize {
        self.floored
    }

    pub fn t_end(&self) -> T {
        *self.times.last().unwrap()
    }

    /// `Γ(t)`, constant beyond the last knot.
    pub fn eval(&self, t: T) -> T {
        if t <= self.times[0] {
            return self.cumulative[0];
        }
        if t >= self.t_end() {
            return *self.cumulative.last().unwrap();
        }
        let k = self.times.partition_point(|&u| u <= t) - 1;
        let w = (t - self.times[k]) / (self.times[k + 1] - self.times[k]);
        self.cumulative[k] + w * (self.cumulative[k + 1] - self.cumulative[k])
    }

    /// First `t` with `Γ(t) > eps`, interpolating linearly on the crossing
    /// segment, or `None` when `Γ(t_end) ≤ eps`.
    pub fn invert(&self, eps: T) -> Option<T> {
        let k1 = self.cumulative.partition_point(|&g| g <= eps);
        if k1 == self.cumulative.len() {
            return None;
        }
        if k1 == 0 {
            return Some(self.times[0]);
        }
        let k = k1 - 1;
        let (g0, g1) = (self.cumulative[k], self.cumulative[k1]);
        let (t0, t1) = (self.times[k], self.times[k1]);
        Some(t0 + (eps - g0) / (g1 - g0) * (t1 - t0))
    }
}

/// `Γ(t) = ∫_{−x∨0}^t γ_u(x+u) du` by trapezoid over the checkpoints of
/// `path`, with negative spot values floored at zero.
pub fn accumulate_hazard<T: Scalar>(path: &SpotPath<T>, x: T) -> Result<HazardPath<T>> {
    let h = path.h;
    let kx = grid_index(x, h).ok_or(Error::NotAligned {
        what: "x",
        value: x.as_f64(),
        step: h.as_f64(),
    })?;
    let mut spots = Vec::with_capacity(path.times.len());
    let mut floored = 0;
    for (&t, row) in path.times.iter().zip(&path.spot) {
        let kt = grid_index(t, h).ok_or(Error::NotAligned {
            what: "checkpoint time",
            value: t.as_f64(),
            step: h.as_f64(),
        })?;
        let age = kx + kt;
        if age < 0 {
            spots.push(T::zero());
            continue;
        }
        let v = *row.get(age as usize).ok_or(Error::OutOfDomain {
            s: 0.0,
            y: (x + t).as_f64(),
        })?;
        if v < T::zero() {
            floored += 1;
        }
        spots.push(v.max(T::zero()));
    }
    let mut cumulative = vec![T::zero(); spots.len()];
    for k in 1..spots.len() {
        let dt = path.times[k] - path.times[k - 1];
        // the cohort is born inside this segment: integrate from birth only
        let born = path.times[k - 1] + x >= T::zero();
        let inc = if born {
            T::half() * dt * (spots[k - 1] + spots[k])
        } else {
            let live = (path.times[k] + x).max(T::zero());
            T::half() * live * spots[k]
        };
        cumulative[k] = cumulative[k - 1] + inc;
    }
    let mut hp = HazardPath::new(path.times.clone(), cumulative)?;
    hp.floored = floored;
    Ok(hp)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohortSample<T> {
    pub x: T,
    /// Death time, or `t_end` when censored.
    pub death_times: Vec<T>,
    pub censored: Vec<bool>,
    pub hazard: HazardPath<T>,
}

impl<T: Scalar> CohortSample<T> {
    pub fn len(&self) -> usize {
        self.death_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.death_times.is_empty()
    }

    /// `1{τ_n > t}` for each individual.
    fn alive_at(&self, n: usize, t: T) -> bool {
        self.censored[n] || self.death_times[n] > t
    }

    /// Fraction of individuals alive at `t`.
    pub fn survival_fraction(&self, t: T) -> T {
        let alive = (0..self.len()).filter(|&n| self.alive_at(n, t)).count();
        T::from_usize(alive).unwrap() / T::from_usize(self.len().max(1)).unwrap()
    }
}

/// Draws `n` death times by inverting `hazard` at unit exponentials.
pub fn sample_death_times<T: Scalar, R: Rng + ?Sized>(
    hazard: &HazardPath<T>,
    x: T,
    n: usize,
    rng: &mut R,
) -> CohortSample<T> {
    let mut death_times = Vec::with_capacity(n);
    let mut censored = Vec::with_capacity(n);
    for _ in 0..n {
        let eps: f64 = rng.sample(Exp1);
        match hazard.invert(T::lit(eps)) {
            Some(tau) => {
                death_times.push(tau);
                censored.push(false);
            }
            None => {
                death_times.push(hazard.t_end());
                censored.push(true);
            }
        }
    }
    CohortSample {
        x,
        death_times,
        censored,
        hazard: hazard.clone(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LlnReport<T> {
    pub t: T,
    pub empirical_fraction: T,
    pub model_g: T,
    pub abs_error: T,
    /// Binomial standard error `√(G(1−G)/N)`.
    pub std_err: T,
}

/// Empirical survival fraction at `t` against `exp(−Γ(t))`.
pub fn lln_diagnostic<T: Scalar>(sample: &CohortSample<T>, t: T) -> Result<LlnReport<T>> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if t > sample.hazard.t_end() + T::lit(1e-12) {
        return Err(Error::invalid("t", "beyond the end of the hazard path"));
    }
    let empirical = sample.survival_fraction(t);
    let g = (-sample.hazard.eval(t)).exp();
    let n = T::from_usize(sample.len()).unwrap();
    Ok(LlnReport {
        t,
        empirical_fraction: empirical,
        model_g: g,
        abs_error: (empirical - g).abs(),
        std_err: (g * (T::one() - g) / n).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualPoint<T> {
    pub t: T,
    pub mean: T,
    pub std_err: T,
}

/// Mean over individuals of `1{τ ≤ t} − Γ(t ∧ τ)` at each checkpoint.
pub fn compensator_residual<T: Scalar>(
    sample: &CohortSample<T>,
    checkpoints: &[T],
) -> Vec<ResidualPoint<T>> {
    compensator_residual_scaled(sample, checkpoints, T::one())
}

/// [`compensator_residual`] with the hazard multiplied by `scale`; any scale
/// other than 1 is a deliberately wrong compensator.
pub fn compensator_residual_scaled<T: Scalar>(
    sample: &CohortSample<T>,
    checkpoints: &[T],
    scale: T,
) -> Vec<ResidualPoint<T>> {
    let mut buf = vec![T::zero(); sample.len()];
    checkpoints
        .iter()
        .map(|&t| {
            for (n, r) in buf.iter_mut().enumerate() {
                let dead = !sample.alive_at(n, t);
                let stop = if dead { sample.death_times[n] } else { t };
                let jump = if dead { T::one() } else { T::zero() };
                *r = jump - scale * sample.hazard.eval(stop);
            }
            let (mean, se) = mean_and_std_err(&buf);
            let se = if se.is_nan() { T::zero() } else { se };
            ResidualPoint {
                t,
                mean,
                std_err: se,
            }
        })
        .collect()
}

/// Splits the cohort into two random halves and returns the difference of
/// their survival fractions at `t` in units of its standard error. Under
/// exchangeability this is approximately standard normal.
pub fn exchangeability_statistic<T: Scalar, R: Rng + ?Sized>(
    sample: &CohortSample<T>,
    t: T,
    rng: &mut R,
) -> Result<T> {
    let n = sample.len();
    if n < 4 {
        return Err(Error::EmptySample);
    }
    let mut idx: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        idx.swap(i, j);
    }
    let (a, b) = idx.split_at(n / 2);
    let frac = |part: &[usize]| {
        let alive = part.iter().filter(|&&k| sample.alive_at(k, t)).count();
        alive as f64 / part.len() as f64
    };
    let (pa, pb) = (frac(a), frac(b));
    let p = sample.survival_fraction(t).as_f64();
    let se = (p * (1.0 - p) * (1.0 / a.len() as f64 + 1.0 / b.len() as f64)).sqrt();
    Ok(if se > 0.0 {
        T::lit((pa - pb) / se)
    } else {
        T::zero()
    })
}
