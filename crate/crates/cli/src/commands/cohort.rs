use fme_core::cohort::{
    accumulate_hazard, compensator_residual, compensator_residual_scaled,
    exchangeability_statistic, lln_diagnostic, sample_death_times, CohortSample, HazardPath,
};
use fme_core::config::CohortConfig;
use fme_core::simulate::{simulate_path, SimulationModel};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{Context, Finished};
use crate::error::{CliError, CliResult};
use crate::output::{Outputs, Table};

/// Stream reserved for cohort sampling; simulated paths use streams
/// `0..n_paths`.
const COHORT_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Serialize)]
pub struct LlnEntry {
    pub t: f64,
    pub empirical_fraction: f64,
    pub model_g: f64,
    pub abs_error: f64,
    pub std_err: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualEntry {
    pub t: f64,
    pub mean: f64,
    pub std_err: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CohortReport {
    pub x: f64,
    pub size: usize,
    /// `constant` or `path <index>`.
    pub hazard_source: String,
    pub t_end: f64,
    pub censored: usize,
    /// Checkpoints where a negative spot rate was floored at zero.
    pub floored_spot_values: usize,
    pub lln: Vec<LlnEntry>,
    pub compensator: Vec<ResidualEntry>,
    /// Largest `|mean| / SE` of the residual with the hazard doubled; a
    /// correct residual stays within a few units, this one should not.
    pub doubled_hazard_max_score: f64,
    pub exchangeability_z: Option<f64>,
}

fn within(err: f64, se: f64, sigmas: f64) -> bool {
    err.abs() <= sigmas * se + 1e-12
}

fn cohort_section(ctx: &Context) -> CliResult<&CohortConfig> {
    ctx.cfg
        .cohort
        .as_ref()
        .ok_or_else(|| CliError::config("the config has no `cohort` section"))
}

fn hazard(ctx: &Context, c: &CohortConfig) -> CliResult<(HazardPath<f64>, String)> {
    if let Some(rate) = c.constant_hazard {
        let t_end = c.t_end.unwrap_or(ctx.cfg.simulation.t_end);
        return Ok((
            HazardPath::constant(rate, c.x, t_end, c.knots)?,
            "constant".into(),
        ));
    }
    let mut scenario = ctx.cfg.scenario(&ctx.base)?;
    scenario.queries.clear();
    let model = SimulationModel::new(scenario)?;
    let rec = simulate_path(&model, c.path)?;
    let spot = rec
        .spot
        .as_ref()
        .expect("spot recorded for simulated cohorts");
    Ok((accumulate_hazard(spot, c.x)?, format!("path {}", c.path)))
}

/// Samples the configured cohort and evaluates its diagnostics.
pub fn run_cohort(ctx: &Context) -> CliResult<(CohortSample<f64>, CohortReport)> {
    let c = cohort_section(ctx)?;
    if c.size == 0 {
        return Err(CliError::config("cohort.size must be positive"));
    }
    let v = ctx.cfg.validation;
    let (hz, source) = hazard(ctx, c)?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.cfg.simulation.seed);
    rng.set_stream(COHORT_STREAM);
    let sample = sample_death_times(&hz, c.x, c.size, &mut rng);

    let mut lln = Vec::new();
    for &t in &c.lln_times {
        let r = lln_diagnostic(&sample, t)?;
        lln.push(LlnEntry {
            t,
            empirical_fraction: r.empirical_fraction,
            model_g: r.model_g,
            abs_error: r.abs_error,
            std_err: r.std_err,
            pass: within(r.abs_error, r.std_err, v.lln_sigmas),
        });
    }
    let times = c
        .compensator_times
        .clone()
        .unwrap_or_else(|| hz.times().to_vec());
    if let Some(&t) = times.iter().find(|&&t| t < 0.0 || t > hz.t_end() + 1e-12) {
        return Err(CliError::config(format!(
            "compensator time {t} lies outside [0, {}]",
            hz.t_end()
        )));
    }
    let compensator = compensator_residual(&sample, &times)
        .into_iter()
        .map(|p| ResidualEntry {
            t: p.t,
            mean: p.mean,
            std_err: p.std_err,
            pass: within(p.mean, p.std_err, v.compensator_sigmas),
        })
        .collect();
    let doubled_hazard_max_score = compensator_residual_scaled(&sample, &times, 2.0)
        .iter()
        .filter(|p| p.std_err > 0.0)
        .fold(0.0f64, |m, p| m.max((p.mean / p.std_err).abs()));
    let exchangeability_z = match c.lln_times.last() {
        Some(&t) if sample.len() >= 4 => Some(exchangeability_statistic(&sample, t, &mut rng)?),
        _ => None,
    };
    let report = CohortReport {
        x: c.x,
        size: c.size,
        hazard_source: source,
        t_end: hz.t_end(),
        censored: sample.censored.iter().filter(|&&c| c).count(),
        floored_spot_values: hz.floored(),
        lln,
        compensator,
        doubled_hazard_max_score,
        exchangeability_z,
    };
    Ok((sample, report))
}

pub fn run(ctx: &Context) -> CliResult<Finished> {
    let (sample, report) = run_cohort(ctx)?;
    let mut table = Table::new(&["index", "tau", "censored"])?;
    for (n, (&tau, &cens)) in sample.death_times.iter().zip(&sample.censored).enumerate() {
        table.row(vec![n.into(), tau.into(), usize::from(cens).into()])?;
    }
    let mut out = Outputs::default();
    out.add_csv("deaths.csv", table)?;
    out.add_json("cohort_report.json", &report)?;
    Ok(Finished::ok(out))
}
