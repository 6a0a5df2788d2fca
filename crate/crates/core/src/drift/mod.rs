//! Consistency drifts for forward mortality rates `μ̄` and improvements `j̄`.
//!
//! General finite-factor forms (noise = standard Wiener factors plus
//! compensated Poisson marks):
//!
//! ```text
//! ᾱ = Σ_k σ̄ᵏ P[σ̄ᵏ] − Σ_i w_i δ̄_i (exp(−P[δ̄_i]) − 1)
//! ā = −Σ_k Q[b̄ᵏ] P[b̄ᵏ] − Σ_k b̄ᵏ D[b̄ᵏ]
//!     − Σ_i w_i Q[c̄_i] P[c̄_i] exp(D[c̄_i]) − Σ_i w_i c̄_i (exp(D[c̄_i]) − 1)
//! ```
//!
//! where `P[f](s,y) = ∫_{−y∨0}^s f(u,y) du` (constant age),
//! `Q[f](s,y) = ∫₀^s f(u,s+y−u) du` (constant terminal age) and
//! `D[f] = P[Q[f]]`.
//!
//! One-dimensional Lévy forms, with loading `σ̂` or `b̂` and cumulant `Ψ`:
//!
//! ```text
//! α̂ = −σ̂ Ψ'(−P[σ̂])
//! â = −Q[b̂] P[b̂] Ψ''(D[b̂]) − b̂ Ψ'(D[b̂])
//! ```
//!
//! The two agree up to the driver's mean: the Lévy process `X` carries drift
//! `B`, while the general forms use martingale noise, so feeding the general
//! form the loadings `σ̄ = √C σ̂`, `δ̄_i = ξ_i σ̂` yields `ᾱ = α̂ + B σ̂`
//! (likewise `ā = â + B b̂`). See [`LevyScalarVol::to_general`].

mod examples;

pub use examples::{example_closed_form, ClosedFormExample, ExampleField};

use crate::error::{Error, Result};
use crate::levy::LevyDriverSpec;
use crate::scalar::Scalar;
use crate::surface::{const_age_prefix, const_z_prefix, Surface, SurfaceGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VolKind {
    /// Loadings `σ̄ᵏ`, `δ̄_i` of forward rates.
    RateVol,
    /// Loadings `b̄ᵏ`, `c̄_i` of forward improvements.
    ImprovementVol,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolatilityModel<T> {
    grid: SurfaceGrid<T>,
    kind: VolKind,
    wiener_loadings: Vec<Surface<T>>,
    jump_loadings: Vec<Surface<T>>,
}

impl<T: Scalar> VolatilityModel<T> {
    pub fn new(
        grid: SurfaceGrid<T>,
        kind: VolKind,
        wiener_loadings: Vec<Surface<T>>,
        jump_loadings: Vec<Surface<T>>,
    ) -> Result<Self> {
        for f in wiener_loadings.iter().chain(&jump_loadings) {
            grid.ensure_compatible(f.grid())?;
        }
        Ok(Self {
            grid,
            kind,
            wiener_loadings,
            jump_loadings,
        })
    }

    /// All-zero loadings sized for `driver`.
    pub fn zero(grid: SurfaceGrid<T>, kind: VolKind, driver: &LevyDriverSpec<T>) -> Self {
        Self {
            grid,
            kind,
            wiener_loadings: vec![Surface::zeros(grid); driver.wiener_factors()],
            jump_loadings: vec![Surface::zeros(grid); driver.jump_marks().len()],
        }
    }

    pub fn grid(&self) -> &SurfaceGrid<T> {
        &self.grid
    }

    pub fn kind(&self) -> VolKind {
        self.kind
    }

    pub fn wiener_loadings(&self) -> &[Surface<T>] {
        &self.wiener_loadings
    }

    pub fn jump_loadings(&self) -> &[Surface<T>] {
        &self.jump_loadings
    }

    /// Multiplies every loading by `a`.
    pub fn scaled(&self, a: T) -> Self {
        Self {
            grid: self.grid,
            kind: self.kind,
            wiener_loadings: self.wiener_loadings.iter().map(|f| f.scaled(a)).collect(),
            jump_loadings: self.jump_loadings.iter().map(|f| f.scaled(a)).collect(),
        }
    }

    pub fn check_driver(&self, driver: &LevyDriverSpec<T>) -> Result<()> {
        if self.wiener_loadings.len() != driver.wiener_factors() {
            return Err(Error::GridMismatch(format!(
                "{} Wiener loadings for {} driver factors",
                self.wiener_loadings.len(),
                driver.wiener_factors()
            )));
        }
        if self.jump_loadings.len() != driver.jump_marks().len() {
            return Err(Error::GridMismatch(format!(
                "{} jump loadings for {} driver marks",
                self.jump_loadings.len(),
                driver.jump_marks().len()
            )));
        }
        Ok(())
    }

    fn expect(&self, kind: VolKind) -> Result<()> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(Error::WrongMode {
                expected: match kind {
                    VolKind::RateVol => "rate volatility",
                    VolKind::ImprovementVol => "improvement volatility",
                },
            })
        }
    }
}

/// Scalar loading `σ̂` or `b̂` of a one-dimensional Lévy-driven model.
#[derive(Debug, Clone, PartialEq)]
pub struct LevyScalarVol<T> {
    pub loading: Surface<T>,
}

impl<T: Scalar> LevyScalarVol<T> {
    pub fn new(loading: Surface<T>) -> Self {
        Self { loading }
    }

    /// General-form loadings: `√C·f` on the first Wiener factor (zero on any
    /// further factors) and `ξ_i·f` on jump mark `i`.
    pub fn to_general(&self, driver: &LevyDriverSpec<T>, kind: VolKind) -> VolatilityModel<T> {
        let grid = *self.loading.grid();
        let wiener = (0..driver.wiener_factors())
            .map(|k| {
                if k == 0 {
                    self.loading.scaled(driver.gaussian_c().sqrt())
                } else {
                    Surface::zeros(grid)
                }
            })
            .collect();
        let jumps = driver
            .jump_marks()
            .iter()
            .map(|m| self.loading.scaled(m.xi))
            .collect();
        VolatilityModel {
            grid,
            kind,
            wiener_loadings: wiener,
            jump_loadings: jumps,
        }
    }
}

fn finish<T: Scalar>(out: Surface<T>, what: &str) -> Result<Surface<T>> {
    if out.all_finite() {
        Ok(out)
    } else {
        Err(Error::invalid(
            "drift",
            format!("{what} overflowed; loadings too large for the grid extent"),
        ))
    }
}

/// Forward-rate drift `ᾱ` from rate loadings.
pub fn drift_mu_general<T: Scalar>(
    vol: &VolatilityModel<T>,
    driver: &LevyDriverSpec<T>,
) -> Result<Surface<T>> {
    vol.expect(VolKind::RateVol)?;
    vol.check_driver(driver)?;
    let g = vol.grid;
    let mut out = vec![T::zero(); g.len()];
    for sigma in &vol.wiener_loadings {
        let p = const_age_prefix(sigma);
        for ((o, &s), &pv) in out.iter_mut().zip(sigma.values()).zip(p.values()) {
            *o = *o + s * pv;
        }
    }
    for (delta, mark) in vol.jump_loadings.iter().zip(driver.jump_marks()) {
        let p = const_age_prefix(delta);
        for ((o, &d), &pv) in out.iter_mut().zip(delta.values()).zip(p.values()) {
            *o = *o - mark.intensity * d * (-pv).exp_m1();
        }
    }
    finish(Surface::from_raw(g, out, g.n_s()), "rate drift")
}

/// Rate drift under which one split step of `rows_per_step` rows keeps every
/// grid-aligned survival probability an exact martingale.
///
/// A step moves rows `0..m` into the realised hazard before the noise acts,
/// so along the diagonal `k` the noise reaches survival exponents only
/// through rows `a = max(m, −k)` onwards, weighted by the trapezoid rule.
/// With `P` the trapezoid prefix of each loading from row `a`, the
/// requirement is `h·Σ_trap α(a..b) = Φ(b)` for every `b`, where
/// `Φ = Σ_k P_k²/2 + Σ_i w_i (e^{−P_i} − 1 + P_i)`. Starting from
/// `α(a) = 0` this fixes `α` row by row. Rows before `a` are discarded by
/// the shift and keep the continuous drift. The result differs from
/// [`drift_mu_general`] by `O(h²)`.
pub fn drift_mu_discrete<T: Scalar>(
    vol: &VolatilityModel<T>,
    driver: &LevyDriverSpec<T>,
    rows_per_step: usize,
) -> Result<Surface<T>> {
    let mut out = drift_mu_general(vol, driver)?;
    let g = vol.grid;
    let (n_s, n_z) = (g.n_s() as i64, g.n_z() as i64);
    let h = g.h();
    let hh = h * T::half();
    let two_over_h = T::lit(2.0) / h;
    let n_w = vol.wiener_loadings.len();
    let mut p = vec![T::zero(); n_w + vol.jump_loadings.len()];
    let loading = |f: usize, i: usize, j: usize| {
        if f < n_w {
            vol.wiener_loadings[f].get(i, j)
        } else {
            vol.jump_loadings[f - n_w].get(i, j)
        }
    };
    for k in -(n_s - 1)..n_z {
        let a = (rows_per_step as i64).max(-k);
        if a >= n_s || a + k >= n_z {
            continue;
        }
        p.iter_mut().for_each(|v| *v = T::zero());
        let (mut phi_prev, mut alpha_prev) = (T::zero(), T::zero());
        out.set(a as usize, (a + k) as usize, T::zero());
        let mut i = a + 1;
        while i < n_s && i + k < n_z {
            let (iu, ju) = (i as usize, (i + k) as usize);
            for (f, pv) in p.iter_mut().enumerate() {
                *pv = *pv + hh * (loading(f, iu - 1, ju - 1) + loading(f, iu, ju));
            }
            let mut phi = T::zero();
            for &pv in &p[..n_w] {
                phi = phi + T::half() * pv * pv;
            }
            for (&pv, mark) in p[n_w..].iter().zip(driver.jump_marks()) {
                phi = phi + mark.intensity * ((-pv).exp_m1() + pv);
            }
            let alpha = two_over_h * (phi - phi_prev) - alpha_prev;
            out.set(iu, ju, alpha);
            phi_prev = phi;
            alpha_prev = alpha;
            i += 1;
        }
    }
    finish(out, "rate drift")
}

/// Forward-improvement drift `ā` from improvement loadings.
pub fn drift_j_general<T: Scalar>(
    vol: &VolatilityModel<T>,
    driver: &LevyDriverSpec<T>,
) -> Result<Surface<T>> {
    vol.expect(VolKind::ImprovementVol)?;
    vol.check_driver(driver)?;
    let g = vol.grid;
    let mut out = vec![T::zero(); g.len()];
    for b in &vol.wiener_loadings {
        let q = const_z_prefix(b);
        let p = const_age_prefix(b);
        let d = const_age_prefix(&q);
        for (k, o) in out.iter_mut().enumerate() {
            *o = *o - q.values()[k] * p.values()[k] - b.values()[k] * d.values()[k];
        }
    }
    for (c, mark) in vol.jump_loadings.iter().zip(driver.jump_marks()) {
        let q = const_z_prefix(c);
        let p = const_age_prefix(c);
        let d = const_age_prefix(&q);
        let w = mark.intensity;
        for (k, o) in out.iter_mut().enumerate() {
            let dv = d.values()[k];
            *o =
                *o - w * q.values()[k] * p.values()[k] * dv.exp() - w * c.values()[k] * dv.exp_m1();
        }
    }
    finish(Surface::from_raw(g, out, g.n_s()), "improvement drift")
}

/// `α̂ = −σ̂ Ψ'(−P[σ̂])`.
pub fn drift_mu_levy<T: Scalar>(
    vol: &LevyScalarVol<T>,
    driver: &LevyDriverSpec<T>,
) -> Result<Surface<T>> {
    let sigma = &vol.loading;
    let p = const_age_prefix(sigma);
    let mut out = Vec::with_capacity(sigma.values().len());
    for (&s, &pv) in sigma.values().iter().zip(p.values()) {
        out.push(-s * driver.cumulant_d1(-pv)?);
    }
    let g = *sigma.grid();
    finish(Surface::from_raw(g, out, g.n_s()), "rate drift")
}

/// `â = −Q[b̂] P[b̂] Ψ''(D[b̂]) − b̂ Ψ'(D[b̂])`.
pub fn drift_j_levy<T: Scalar>(
    vol: &LevyScalarVol<T>,
    driver: &LevyDriverSpec<T>,
) -> Result<Surface<T>> {
    let b = &vol.loading;
    let q = const_z_prefix(b);
    let p = const_age_prefix(b);
    let d = const_age_prefix(&q);
    let mut out = Vec::with_capacity(b.values().len());
    for k in 0..b.values().len() {
        let dv = d.values()[k];
        out.push(
            -q.values()[k] * p.values()[k] * driver.cumulant_d2(dv)?
                - b.values()[k] * driver.cumulant_d1(dv)?,
        );
    }
    let g = *b.grid();
    finish(Surface::from_raw(g, out, g.n_s()), "improvement drift")
}

/// `alpha − ᾱ[vol]`; identically zero exactly when `alpha` is the consistent
/// drift at grid resolution.
pub fn consistency_residual<T: Scalar>(
    alpha: &Surface<T>,
    vol: &VolatilityModel<T>,
    driver: &LevyDriverSpec<T>,
) -> Result<Surface<T>> {
    alpha.grid().ensure_compatible(vol.grid())?;
    alpha.sub(&drift_mu_general(vol, driver)?)
}

/// `σ̄ = −Q[b̄]` per Wiener factor and `δ̄_i = −Q[c̄_i]` per mark.
pub fn vol_j_to_vol_mu<T: Scalar>(vol_j: &VolatilityModel<T>) -> Result<VolatilityModel<T>> {
    vol_j.expect(VolKind::ImprovementVol)?;
    let conv = |f: &Surface<T>| const_z_prefix(f).map(|v| -v);
    Ok(VolatilityModel {
        grid: vol_j.grid,
        kind: VolKind::RateVol,
        wiener_loadings: vol_j.wiener_loadings.iter().map(conv).collect(),
        jump_loadings: vol_j.jump_loadings.iter().map(conv).collect(),
    })
}

/// `σ̂ = −Q[b̂]` for a scalar loading.
pub fn scalar_vol_j_to_vol_mu<T: Scalar>(vol_j: &LevyScalarVol<T>) -> LevyScalarVol<T> {
    LevyScalarVol::new(const_z_prefix(&vol_j.loading).map(|v| -v))
}
