//! Monte Carlo ensembles and their diagnostics.
//!
//! Path `p` draws from `ChaCha8Rng::seed_from_u64(seed)` on stream `p`, so an
//! ensemble is reproducible for a given seed regardless of how many worker
//! threads ran it. Reductions run over the path-ordered records with
//! compensated sums.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{PathState, ScenarioConfig, SimulationModel, SpotPath, SurvivalQuery};
use crate::error::{Error, Result};
use crate::scalar::{mean_and_std_err, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointStats<T> {
    pub t: T,
    pub negative_nodes: usize,
    pub nodes: usize,
    pub min_value: T,
    /// Identity residual, in improvements mode.
    pub identity: Option<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord<T> {
    pub checkpoints: Vec<CheckpointStats<T>>,
    /// `G_t(T, x)` for each configured query, in query order.
    pub query_values: Vec<T>,
    pub spot: Option<SpotPath<T>>,
    pub states: Option<Vec<PathState<T>>>,
}

#[derive(Debug, Clone)]
pub struct PathEnsemble<T> {
    pub checkpoint_times: Vec<T>,
    pub queries: Vec<SurvivalQuery<T>>,
    /// `G_0(T, x)` for each query.
    pub initial_values: Vec<T>,
    pub paths: Vec<PathRecord<T>>,
    pub identity_scale: T,
    pub h: T,
    pub dt: T,
}

impl<T: Scalar> PathEnsemble<T> {
    pub fn n_paths(&self) -> usize {
        self.paths.len()
    }

    fn checkpoint_index(&self, t: T) -> Option<usize> {
        self.checkpoint_times
            .iter()
            .position(|&c| (c - t).abs() <= T::lit(1e-9) * self.dt)
    }

    fn query_index(&self, t: T, maturity: T, x: T) -> Option<usize> {
        let close = |a: T, b: T| (a - b).abs() <= T::lit(1e-9) * self.h.max(T::one());
        self.queries
            .iter()
            .position(|q| close(q.t, t) && close(q.maturity, maturity) && close(q.x, x))
    }

    /// Per-path values of `G_t(T, x)`, from recorded queries or kept states.
    pub fn survival_values(&self, t: T, maturity: T, x: T) -> Result<Vec<T>> {
        if let Some(q) = self.query_index(t, maturity, x) {
            return Ok(self.paths.iter().map(|p| p.query_values[q]).collect());
        }
        let k = self.checkpoint_index(t);
        match (k, self.paths.first().and_then(|p| p.states.as_ref())) {
            (Some(k), Some(_)) => self
                .paths
                .iter()
                .map(|p| p.states.as_ref().unwrap()[k].survival(maturity, x))
                .collect(),
            _ => Err(Error::MissingQuery(format!(
                "G_t(T,x) at t={t}, T={maturity}, x={x} was not recorded"
            ))),
        }
    }

    /// Time-0 value of `G(T, x)`.
    pub fn initial_survival(&self, maturity: T, x: T) -> Result<T> {
        let close = |a: T, b: T| (a - b).abs() <= T::lit(1e-9) * self.h.max(T::one());
        if let Some(q) = self
            .queries
            .iter()
            .position(|q| close(q.maturity, maturity) && close(q.x, x))
        {
            return Ok(self.initial_values[q]);
        }
        match self.paths.first().and_then(|p| p.states.as_ref()) {
            Some(states) => states[0].survival(maturity, x),
            None => Err(Error::MissingQuery(format!(
                "G_0(T,x) at T={maturity}, x={x} was not recorded"
            ))),
        }
    }
}

fn path_rng(seed: u64, path: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

fn checkpoint_stats<T: Scalar>(
    state: &PathState<T>,
    improvements: bool,
) -> Result<CheckpointStats<T>> {
    let (negative_nodes, nodes, min_value) = state.negativity();
    Ok(CheckpointStats {
        t: state.t(),
        negative_nodes,
        nodes,
        min_value,
        identity: if improvements {
            Some(state.identity_residual()?)
        } else {
            None
        },
    })
}

fn run_path<T: Scalar>(model: &SimulationModel<T>, path: usize) -> Result<PathRecord<T>> {
    let cfg = model.config();
    let improvements = model.j_dyn.is_some();
    let mut rng = path_rng(cfg.seed, path);
    let mut state = model.initial_state();
    let mut checkpoints = Vec::new();
    let mut query_values = vec![T::nan(); cfg.queries.len()];
    let mut states = cfg.keep_states.then(Vec::new);
    let mut spot_times = Vec::new();
    let mut spot_rows = Vec::new();

    let mut record = |state: &PathState<T>, query_values: &mut Vec<T>| -> Result<()> {
        checkpoints.push(checkpoint_stats(state, improvements)?);
        for (q, v) in cfg.queries.iter().zip(query_values.iter_mut()) {
            if (q.t - state.t()).abs() <= T::lit(1e-9) * cfg.dt {
                *v = state.survival(q.maturity, q.x)?;
            }
        }
        if cfg.record_spot {
            spot_times.push(state.t());
            spot_rows.push(state.spot_curve().to_vec());
        }
        if let Some(s) = states.as_mut() {
            s.push(state.clone());
        }
        Ok(())
    };

    record(&state, &mut query_values)?;
    for k in 1..=model.n_steps() {
        model.step(&mut state, &mut rng)?;
        if k % cfg.checkpoint_every == 0 || k == model.n_steps() {
            record(&state, &mut query_values)?;
        }
    }
    let spot = cfg.record_spot.then(|| SpotPath {
        h: cfg.grid.h(),
        times: spot_times,
        spot: spot_rows,
    });
    Ok(PathRecord {
        checkpoints,
        query_values,
        spot,
        states,
    })
}

fn validate_queries<T: Scalar>(model: &SimulationModel<T>, times: &[T]) -> Result<()> {
    let cfg = model.config();
    for q in &cfg.queries {
        if !times
            .iter()
            .any(|&t| (t - q.t).abs() <= T::lit(1e-9) * cfg.dt)
        {
            return Err(Error::NotAligned {
                what: "query t",
                value: q.t.as_f64(),
                step: (cfg.dt * T::from_usize(cfg.checkpoint_every).unwrap()).as_f64(),
            });
        }
        if q.maturity < q.t {
            return Err(Error::invalid("query T", "maturity precedes query time"));
        }
    }
    Ok(())
}

fn checkpoint_times<T: Scalar>(model: &SimulationModel<T>) -> Vec<T> {
    let cfg = model.config();
    let n = model.n_steps();
    let mut times = vec![T::zero()];
    for k in 1..=n {
        if k % cfg.checkpoint_every == 0 || k == n {
            times.push(T::from_usize(k).unwrap() * cfg.dt);
        }
    }
    times
}

/// Path `path` of the ensemble that [`simulate_model`] would produce, run on
/// its own. Set `keep_states` or `record_spot` on the model's config to get
/// more than the checkpoint statistics back.
pub fn simulate_path<T: Scalar>(model: &SimulationModel<T>, path: usize) -> Result<PathRecord<T>> {
    validate_queries(model, &checkpoint_times(model))?;
    run_path(model, path)
}

/// Runs `config.n_paths` independent paths in parallel.
pub fn simulate_ensemble<T: Scalar>(config: &ScenarioConfig<T>) -> Result<PathEnsemble<T>> {
    let model = SimulationModel::new(config.clone())?;
    simulate_model(&model)
}

/// [`simulate_ensemble`] over an already compiled model.
pub fn simulate_model<T: Scalar>(model: &SimulationModel<T>) -> Result<PathEnsemble<T>> {
    let cfg = model.config();
    let times = checkpoint_times(model);
    validate_queries(model, &times)?;
    let init = model.initial_state();
    let initial_values = cfg
        .queries
        .iter()
        .map(|q| init.survival(q.maturity, q.x))
        .collect::<Result<Vec<_>>>()?;
    let paths = (0..cfg.n_paths)
        .into_par_iter()
        .map(|p| run_path(model, p))
        .collect::<Result<Vec<_>>>()?;
    Ok(PathEnsemble {
        checkpoint_times: times,
        queries: cfg.queries.clone(),
        initial_values,
        paths,
        identity_scale: model.identity_scale(),
        h: cfg.grid.h(),
        dt: cfg.dt,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MartingaleStats<T> {
    pub mean: T,
    pub std_err: T,
    pub initial: T,
    pub z_score: T,
    pub n: usize,
}

/// `z = (mean_p G_t(T,x) − G_0(T,x)) / SE`. When every path agrees (zero
/// standard error) the score is 0 if the mean matches `G_0` to within
/// rounding and infinite otherwise.
pub fn martingale_diagnostic<T: Scalar>(
    ensemble: &PathEnsemble<T>,
    t: T,
    maturity: T,
    x: T,
) -> Result<MartingaleStats<T>> {
    let values = ensemble.survival_values(t, maturity, x)?;
    if values.len() < 2 {
        return Err(Error::InsufficientPaths {
            needed: 2,
            have: values.len(),
        });
    }
    let initial = ensemble.initial_survival(maturity, x)?;
    Ok(martingale_stats(&values, initial))
}

pub(crate) fn martingale_stats<T: Scalar>(values: &[T], initial: T) -> MartingaleStats<T> {
    let (mean, se) = mean_and_std_err(values);
    let diff = mean - initial;
    let rounding = T::lit(1e-12).max(T::epsilon() * T::lit(1024.0)) * initial.abs().max(T::one());
    let z_score = if se > T::zero() {
        diff / se
    } else if diff.abs() <= rounding {
        T::zero()
    } else {
        diff.signum() * T::infinity()
    };
    MartingaleStats {
        mean,
        std_err: se,
        initial,
        z_score,
        n: values.len(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NegativityStats<T> {
    pub fraction_negative_nodes: T,
    pub negative_nodes: usize,
    pub total_nodes: usize,
    pub min_value: T,
}

/// Share of `(path, checkpoint, node)` triples with `μ̄ < 0`, over unmasked
/// rows, and the smallest value seen.
pub fn negativity_diagnostic<T: Scalar>(ensemble: &PathEnsemble<T>) -> NegativityStats<T> {
    let mut neg = 0usize;
    let mut total = 0usize;
    let mut min = T::infinity();
    for p in &ensemble.paths {
        for c in &p.checkpoints {
            neg += c.negative_nodes;
            total += c.nodes;
            min = min.min(c.min_value);
        }
    }
    let fraction = if total == 0 {
        T::zero()
    } else {
        T::from_usize(neg).unwrap() / T::from_usize(total).unwrap()
    };
    NegativityStats {
        fraction_negative_nodes: fraction,
        negative_nodes: neg,
        total_nodes: total,
        min_value: min,
    }
}

/// Largest identity residual over paths at each checkpoint, in improvements
/// mode.
pub fn identity_sup_by_checkpoint<T: Scalar>(ensemble: &PathEnsemble<T>) -> Option<Vec<T>> {
    let n = ensemble.checkpoint_times.len();
    let mut out = vec![T::zero(); n];
    for p in &ensemble.paths {
        for (o, c) in out.iter_mut().zip(&p.checkpoints) {
            *o = o.max(c.identity?);
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drift::LevyScalarVol;
    use crate::levy::{LevyDriverSpec, MomentWindow};
    use crate::simulate::{InitialCondition, SimMode, VolSpec};
    use crate::surface::{Surface, SurfaceGrid};

    fn config(vol: f64, n_paths: usize) -> ScenarioConfig<f64> {
        let grid = SurfaceGrid::new(0.1, 21, 41).unwrap();
        let mut c = ScenarioConfig::new(
            grid,
            LevyDriverSpec::jump_diffusion(MomentWindow::new(1.0, 0.1).unwrap()).unwrap(),
            VolSpec::Levy(LevyScalarVol::new(Surface::constant(grid, vol))),
            InitialCondition::Rates {
                mu0: Surface::from_fn(grid, |s, y| 0.01 + 0.01 * (s + y)).unwrap(),
            },
            0.1,
            1.0,
            SimMode::Rates,
        );
        c.n_paths = n_paths;
        c.seed = 9;
        c.queries = vec![SurvivalQuery {
            t: 0.5,
            maturity: 1.5,
            x: 0.3,
        }];
        c
    }

    #[test]
    fn zero_vol_scores_zero() {
        let e = simulate_ensemble(&config(0.0, 4)).unwrap();
        let m = martingale_diagnostic(&e, 0.5, 1.5, 0.3).unwrap();
        assert_eq!(m.z_score, 0.0);
        assert_eq!(m.std_err, 0.0);
        assert_eq!(negativity_diagnostic(&e).fraction_negative_nodes, 0.0);
    }

    #[test]
    fn reproducible_given_seed() {
        let a = simulate_ensemble(&config(0.01, 8)).unwrap();
        let b = simulate_ensemble(&config(0.01, 8)).unwrap();
        assert_eq!(a.paths, b.paths);
        let mut c = config(0.01, 8);
        c.seed = 10;
        let c = simulate_ensemble(&c).unwrap();
        assert_ne!(a.paths, c.paths);
    }

    #[test]
    fn single_path_matches_ensemble_member() {
        let cfg = config(0.01, 5);
        let e = simulate_ensemble(&cfg).unwrap();
        let model = SimulationModel::new(cfg).unwrap();
        assert_eq!(simulate_path(&model, 3).unwrap(), e.paths[3]);
    }

    #[test]
    fn insufficient_paths() {
        let e = simulate_ensemble(&config(0.01, 1)).unwrap();
        assert!(matches!(
            martingale_diagnostic(&e, 0.5, 1.5, 0.3),
            Err(Error::InsufficientPaths { .. })
        ));
        assert!(matches!(
            martingale_diagnostic(&e, 0.4, 1.5, 0.3),
            Err(Error::MissingQuery(_))
        ));
    }

    #[test]
    fn sign_flipped_surface_is_all_negative() {
        let mut c = config(0.0, 2);
        let grid = c.grid;
        c.initial = InitialCondition::Rates {
            mu0: Surface::constant(grid, -0.01),
        };
        c.queries.clear();
        let e = simulate_ensemble(&c).unwrap();
        assert_eq!(negativity_diagnostic(&e).fraction_negative_nodes, 1.0);
    }
}
