//! Path simulation of forward mortality surfaces in the Musiela chart.
//!
//! One step over `dt = m·h` is a splitting scheme: Euler update of the
//! coefficients, then the exact grid shift,
//!
//! ```text
//! μ̄ ← S_dt( μ̄ + dt·ᾱ + Σ_k σ̄ᵏ ΔWᵏ + Σ_i δ̄_i (ΔN_i − w_i dt) )
//! ```
//!
//! and identically for `j̄` with `ā`, `b̄ᵏ`, `c̄_i` in improvements mode. In
//! that mode `μ̄` is driven by the rate loadings `σ̄ = −Q[b̄]` implied by the
//! improvement loadings, with the same noise, so the identity
//! `μ̄(s,y) = γ̄(s+y) − ∫₀^s j̄(u,s+y−u) du` can be monitored along the path.
//!
//! Survival probabilities need the hazard already realised by each cohort.
//! Before each update the current surface is integrated along the cohort's
//! diagonal over `[0, dt]` (trapezoid on the `m+1` nodes). With zero
//! volatility this reproduces the time-0 forward integral exactly, so
//! `G_t(T,x)` is constant in `t` up to rounding.

mod ensemble;

pub use ensemble::{
    identity_sup_by_checkpoint, martingale_diagnostic, negativity_diagnostic, simulate_ensemble,
    simulate_model, simulate_path, CheckpointStats, MartingaleStats, NegativityStats, PathEnsemble,
    PathRecord,
};

use rand::Rng;

use crate::drift::{
    drift_j_general, drift_mu_discrete, vol_j_to_vol_mu, LevyScalarVol, VolKind, VolatilityModel,
};
use crate::error::{Error, Result};
use crate::levy::{Increment, IncrementSampler, LevyDriverSpec};
use crate::scalar::Scalar;
use crate::surface::quadrature::diagonal_trapezoid;
use crate::surface::{
    const_z_prefix, improvements_to_rates, rates_to_improvements, AgeCurve, Surface, SurfaceGrid,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMode {
    /// Evolve `μ̄` with the rate drift.
    Rates,
    /// Evolve `j̄` with the improvement drift, and `μ̄` alongside it.
    Improvements,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriftMode {
    Consistent,
    /// Drop the drift entirely; an inconsistent model for power checks.
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub enum VolSpec<T> {
    General(VolatilityModel<T>),
    /// Scalar loading, read as `σ̂` in rates mode and `b̂` in improvements
    /// mode.
    Levy(LevyScalarVol<T>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition<T> {
    Improvements { j0: Surface<T>, gamma0: AgeCurve<T> },
    Rates { mu0: Surface<T> },
}

/// `G_t(T, x)` to be recorded at checkpoint `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvivalQuery<T> {
    pub t: T,
    pub maturity: T,
    pub x: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig<T> {
    pub grid: SurfaceGrid<T>,
    pub driver: LevyDriverSpec<T>,
    pub vol: VolSpec<T>,
    pub initial: InitialCondition<T>,
    pub dt: T,
    pub t_end: T,
    pub n_paths: usize,
    pub seed: u64,
    pub mode: SimMode,
    pub drift: DriftMode,
    /// Record diagnostics every this many steps (and at `t = 0`).
    pub checkpoint_every: usize,
    pub queries: Vec<SurvivalQuery<T>>,
    /// Keep the spot curve `γ̄_t` at each checkpoint (needed for cohorts).
    pub record_spot: bool,
    /// Keep full states at each checkpoint. Memory heavy.
    pub keep_states: bool,
}

impl<T: Scalar> ScenarioConfig<T> {
    /// Single-path configuration with consistent drift, checkpoints at every
    /// step and nothing recorded beyond the per-checkpoint statistics.
    pub fn new(
        grid: SurfaceGrid<T>,
        driver: LevyDriverSpec<T>,
        vol: VolSpec<T>,
        initial: InitialCondition<T>,
        dt: T,
        t_end: T,
        mode: SimMode,
    ) -> Self {
        Self {
            grid,
            driver,
            vol,
            initial,
            dt,
            t_end,
            n_paths: 1,
            seed: 0,
            mode,
            drift: DriftMode::Consistent,
            checkpoint_every: 1,
            queries: Vec::new(),
            record_spot: false,
            keep_states: false,
        }
    }
}

/// Drift and loadings of one evolving surface.
#[derive(Debug, Clone)]
struct Dynamics<T> {
    drift: Surface<T>,
    wiener: Vec<Surface<T>>,
    jumps: Vec<Surface<T>>,
}

impl<T: Scalar> Dynamics<T> {
    fn new(vol: &VolatilityModel<T>, drift: Surface<T>) -> Self {
        Self {
            drift,
            wiener: vol.wiener_loadings().to_vec(),
            jumps: vol.jump_loadings().to_vec(),
        }
    }

    /// `f += dt·drift + Σ ΔW_k·wiener_k + Σ (N_i − w_i dt)·jump_i`.
    fn apply(&self, f: &mut Surface<T>, dt: T, inc: &Increment<T>, driver: &LevyDriverSpec<T>) {
        let mut coeffs: Vec<(T, &Surface<T>)> =
            Vec::with_capacity(1 + self.wiener.len() + self.jumps.len());
        coeffs.push((dt, &self.drift));
        for (dw, w) in inc.wiener.iter().zip(&self.wiener) {
            coeffs.push((*dw, w));
        }
        for ((&n, mark), j) in inc
            .jump_counts
            .iter()
            .zip(driver.jump_marks())
            .zip(&self.jumps)
        {
            coeffs.push((T::from_u32(n).unwrap() - mark.intensity * dt, j));
        }
        let vals = f.values_mut();
        for (a, s) in coeffs {
            if a == T::zero() {
                continue;
            }
            for (v, &x) in vals.iter_mut().zip(s.values()) {
                *v = *v + a * x;
            }
        }
    }
}

/// A validated scenario with precomputed drifts, ready to step paths.
#[derive(Debug, Clone)]
pub struct SimulationModel<T> {
    config: ScenarioConfig<T>,
    m: usize,
    n_steps: usize,
    mu_dyn: Dynamics<T>,
    j_dyn: Option<Dynamics<T>>,
    mu0: Surface<T>,
    j0: Option<Surface<T>>,
    sampler: IncrementSampler,
    cohort_k_min: i64,
    alpha_sup: T,
}

impl<T: Scalar> SimulationModel<T> {
    pub fn new(config: ScenarioConfig<T>) -> Result<Self> {
        let grid = config.grid;
        if !(config.dt > T::zero()) {
            return Err(Error::invalid("dt", "must be positive"));
        }
        if !(config.t_end > T::zero()) {
            return Err(Error::invalid("t_end", "must be positive"));
        }
        let m = grid.steps("dt", config.dt)?;
        if m < 1 {
            return Err(Error::NotAligned {
                what: "dt",
                value: config.dt.as_f64(),
                step: grid.h().as_f64(),
            });
        }
        let n_steps = crate::scalar::grid_index(config.t_end, config.dt)
            .filter(|&n| n >= 1)
            .ok_or(Error::NotAligned {
                what: "t_end",
                value: config.t_end.as_f64(),
                step: config.dt.as_f64(),
            })?;
        if config.n_paths == 0 {
            return Err(Error::invalid("n_paths", "must be positive"));
        }
        if config.checkpoint_every == 0 {
            return Err(Error::invalid("checkpoint_every", "must be positive"));
        }

        let driver = &config.driver;
        let (rate_vol, imp_vol) = match (&config.vol, config.mode) {
            (VolSpec::Levy(l), SimMode::Rates) => (l.to_general(driver, VolKind::RateVol), None),
            (VolSpec::Levy(l), SimMode::Improvements) => {
                let v = l.to_general(driver, VolKind::ImprovementVol);
                (vol_j_to_vol_mu(&v)?, Some(v))
            }
            (VolSpec::General(v), SimMode::Rates) => match v.kind() {
                VolKind::RateVol => (v.clone(), None),
                VolKind::ImprovementVol => (vol_j_to_vol_mu(v)?, None),
            },
            (VolSpec::General(v), SimMode::Improvements) => {
                if v.kind() != VolKind::ImprovementVol {
                    return Err(Error::WrongMode {
                        expected: "improvement volatility in improvements mode",
                    });
                }
                (vol_j_to_vol_mu(v)?, Some(v.clone()))
            }
        };
        grid.ensure_compatible(rate_vol.grid())?;
        rate_vol.check_driver(driver)?;

        let zero = Surface::zeros(grid);
        let alpha = match config.drift {
            DriftMode::Consistent => drift_mu_discrete(&rate_vol, driver, m as usize)?,
            DriftMode::Zero => zero.clone(),
        };
        let alpha_sup = alpha.sup_norm();
        let mu_dyn = Dynamics::new(&rate_vol, alpha);
        let j_dyn = match &imp_vol {
            Some(v) => {
                let a = match config.drift {
                    DriftMode::Consistent => drift_j_general(v, driver)?,
                    DriftMode::Zero => zero.clone(),
                };
                Some(Dynamics::new(v, a))
            }
            None => None,
        };

        let (mu0, j0) = match &config.initial {
            InitialCondition::Improvements { j0, gamma0 } => {
                grid.ensure_compatible(j0.grid())?;
                let mu0 = improvements_to_rates(j0, gamma0)?;
                (mu0, j_dyn.as_ref().map(|_| j0.clone()))
            }
            InitialCondition::Rates { mu0 } => {
                grid.ensure_compatible(mu0.grid())?;
                let j0 = match j_dyn {
                    Some(_) => Some(rates_to_improvements(mu0)?),
                    None => None,
                };
                (mu0.clone(), j0)
            }
        };

        let sampler = IncrementSampler::new(driver, config.dt);
        let cohort_k_min = -((n_steps as usize * m as usize) as i64);
        Ok(Self {
            m: m as usize,
            n_steps: n_steps as usize,
            mu_dyn,
            j_dyn,
            mu0,
            j0,
            sampler,
            cohort_k_min,
            alpha_sup,
            config,
        })
    }

    pub fn config(&self) -> &ScenarioConfig<T> {
        &self.config
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Grid rows per time step.
    pub fn rows_per_step(&self) -> usize {
        self.m
    }

    /// Rate drift used for `μ̄`.
    pub fn rate_drift(&self) -> &Surface<T> {
        &self.mu_dyn.drift
    }

    /// Improvement drift used for `j̄`, in improvements mode.
    pub fn improvement_drift(&self) -> Option<&Surface<T>> {
        self.j_dyn.as_ref().map(|d| &d.drift)
    }

    /// Scale of the identity bound: `1 + t_end·‖ᾱ‖∞`.
    pub fn identity_scale(&self) -> T {
        T::one() + self.config.t_end * self.alpha_sup
    }

    pub fn sampler(&self) -> &IncrementSampler {
        &self.sampler
    }

    pub fn initial_state(&self) -> PathState<T> {
        let g = self.config.grid;
        let n_cohorts = (g.n_z() as i64 - self.cohort_k_min) as usize;
        PathState {
            t: T::zero(),
            step: 0,
            m: self.m,
            dt: self.config.dt,
            mu_bar: self.mu0.clone(),
            j_bar: self.j0.clone(),
            gamma_path: vec![Some(T::zero()); n_cohorts],
            cohort_k_min: self.cohort_k_min,
        }
    }

    /// Advances `state` by one step with fresh noise from `rng`.
    pub fn step<R: Rng + ?Sized>(&self, state: &mut PathState<T>, rng: &mut R) -> Result<()> {
        let inc = self.sampler.sample(rng);
        self.step_with(state, &inc)
    }

    /// Advances `state` by one step with the given noise increment.
    pub fn step_with(&self, state: &mut PathState<T>, inc: &Increment<T>) -> Result<()> {
        if state.step >= self.n_steps {
            return Err(Error::TimeOverflow {
                t: state.t.as_f64(),
                dt: self.config.dt.as_f64(),
                t_end: self.config.t_end.as_f64(),
            });
        }
        if inc.wiener.len() != self.config.driver.wiener_factors()
            || inc.jump_counts.len() != self.config.driver.jump_marks().len()
        {
            return Err(Error::GridMismatch(
                "increment does not match the driver".into(),
            ));
        }
        state.accumulate_hazard_step();
        let driver = &self.config.driver;
        self.mu_dyn
            .apply(&mut state.mu_bar, self.config.dt, inc, driver);
        state.mu_bar.shift_rows_in_place(self.m);
        if let (Some(dynamics), Some(j)) = (&self.j_dyn, state.j_bar.as_mut()) {
            dynamics.apply(j, self.config.dt, inc, driver);
            j.shift_rows_in_place(self.m);
        }
        state.step += 1;
        state.t = T::from_usize(state.step).unwrap() * self.config.dt;
        Ok(())
    }
}

/// Stepping as a free function over a compiled model.
pub fn step<T: Scalar, R: Rng + ?Sized>(
    state: &mut PathState<T>,
    model: &SimulationModel<T>,
    rng: &mut R,
) -> Result<()> {
    model.step(state, rng)
}

/// State of one path at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathState<T> {
    t: T,
    step: usize,
    m: usize,
    dt: T,
    mu_bar: Surface<T>,
    j_bar: Option<Surface<T>>,
    /// Realised hazard per cohort `x = k·h`, `k ≥ cohort_k_min`; `None` once
    /// the cohort's diagonal has left the grid.
    gamma_path: Vec<Option<T>>,
    cohort_k_min: i64,
}

impl<T: Scalar> PathState<T> {
    pub fn t(&self) -> T {
        self.t
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn mu_bar(&self) -> &Surface<T> {
        &self.mu_bar
    }

    pub fn j_bar(&self) -> Option<&Surface<T>> {
        self.j_bar.as_ref()
    }

    fn grid(&self) -> &SurfaceGrid<T> {
        self.mu_bar.grid()
    }

    fn current_steps(&self) -> i64 {
        (self.step * self.m) as i64
    }

    fn accumulate_hazard_step(&mut self) {
        let g = *self.grid();
        let (n_s, n_z) = (g.n_s() as i64, g.n_z() as i64);
        let b = self.m as i64;
        let valid = self.mu_bar.valid_rows() as i64;
        let now = self.current_steps();
        for (c, slot) in self.gamma_path.iter_mut().enumerate() {
            let Some(acc) = *slot else { continue };
            let y = self.cohort_k_min + c as i64 + now;
            let a = (-y).max(0);
            if a >= b {
                continue;
            }
            if b >= n_s || b >= valid || b + y >= n_z {
                *slot = None;
                continue;
            }
            *slot = Some(acc + diagonal_trapezoid(&self.mu_bar, y, a as usize, b as usize));
        }
    }

    /// Realised hazard `∫₀^t γ̄_u(x+u) du` of cohort `x`, if tracked.
    pub fn realised_hazard(&self, x: T) -> Result<T> {
        let k = self.grid().steps("x", x)?;
        let idx = k - self.cohort_k_min;
        if idx < 0 || idx as usize >= self.gamma_path.len() {
            return Err(Error::OutOfDomain {
                s: 0.0,
                y: x.as_f64(),
            });
        }
        self.gamma_path[idx as usize].ok_or(Error::OutOfDomain {
            s: 0.0,
            y: (x + self.t).as_f64(),
        })
    }

    /// `γ̄_t(y) = μ̄_t(0, y)`.
    pub fn spot_rate(&self, y: T) -> Result<T> {
        if y < T::zero() {
            return Err(Error::OutOfDomain {
                s: 0.0,
                y: y.as_f64(),
            });
        }
        self.mu_bar.eval(T::zero(), y)
    }

    /// Spot curve `γ̄_t` on the grid's `z` nodes.
    pub fn spot_curve(&self) -> &[T] {
        self.mu_bar.row(0)
    }

    /// `G_t(T, x)`, unclamped. `T` and `x` must be multiples of `h`.
    pub fn survival(&self, maturity: T, x: T) -> Result<T> {
        let g = *self.grid();
        let kx = g.steps("x", x)?;
        let kt_mat = g.steps("T", maturity)?;
        if kt_mat <= -kx {
            return Ok(T::one());
        }
        let now = self.current_steps();
        if kt_mat < now {
            return Err(Error::invalid("T", "maturity precedes the current time"));
        }
        let y = kx + now;
        let a = (-y).max(0);
        let b = kt_mat - now;
        if b as usize >= self.mu_bar.valid_rows() {
            return Err(Error::StaleRegion {
                horizon: (T::from_i64(b).unwrap() * g.h()).as_f64(),
                valid: self.mu_bar.valid_rows(),
            });
        }
        if b + y >= g.n_z() as i64 {
            return Err(Error::OutOfDomain {
                s: (T::from_i64(b).unwrap() * g.h()).as_f64(),
                y: (x + self.t).as_f64(),
            });
        }
        let realised = self.realised_hazard(x)?;
        let forward = diagonal_trapezoid(&self.mu_bar, y, a as usize, b as usize);
        Ok((-realised - forward).exp())
    }

    /// `sup |μ̄(s,y) − γ̄(s+y) + ∫₀^s j̄(u,s+y−u) du|` over unmasked nodes.
    pub fn identity_residual(&self) -> Result<T> {
        let j = self.j_bar.as_ref().ok_or(Error::WrongMode {
            expected: "improvements mode",
        })?;
        let q = const_z_prefix(j);
        let mu = &self.mu_bar;
        let rows = mu.valid_rows().min(j.valid_rows());
        let n_z = self.grid().n_z();
        let mut sup = T::zero();
        for i in 0..rows {
            for jj in 0..n_z {
                let r = mu.get(i, jj) - mu.get(0, jj) + q.get(i, jj);
                sup = sup.max(r.abs());
            }
        }
        Ok(sup)
    }

    /// Count of negative `μ̄` nodes, count of inspected nodes, and the
    /// minimum, over unmasked rows.
    pub fn negativity(&self) -> (usize, usize, T) {
        let n = self.mu_bar.valid_rows() * self.grid().n_z();
        let vals = &self.mu_bar.values()[..n];
        let neg = vals.iter().filter(|&&v| v < T::zero()).count();
        let min = vals.iter().fold(T::infinity(), |m, &v| m.min(v));
        (neg, n, min)
    }
}

/// `identity_residual` as a free function.
pub fn identity_diagnostic<T: Scalar>(state: &PathState<T>) -> Result<T> {
    state.identity_residual()
}

/// Spot curves along one path at its checkpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct SpotPath<T> {
    pub h: T,
    pub times: Vec<T>,
    /// `spot[k][j] = γ̄_{t_k}(z_j)`.
    pub spot: Vec<Vec<T>>,
}

impl<T: Scalar> SpotPath<T> {
    pub fn from_states(states: &[PathState<T>]) -> Result<Self> {
        let first = states.first().ok_or(Error::EmptySample)?;
        Ok(Self {
            h: first.grid().h(),
            times: states.iter().map(|s| s.t).collect(),
            spot: states.iter().map(|s| s.spot_curve().to_vec()).collect(),
        })
    }

    pub fn t_end(&self) -> T {
        *self.times.last().unwrap()
    }
}
