use fme_core::scalar::mean_and_std_err;
use fme_core::simulate::{
    identity_sup_by_checkpoint, martingale_diagnostic, negativity_diagnostic, simulate_model,
    simulate_path, NegativityStats, PathEnsemble, SimulationModel,
};
use serde::Serialize;

use super::{Context, Finished};
use crate::error::CliResult;
use crate::output::{Outputs, Table};

#[derive(Debug, Clone, Serialize)]
pub struct QuerySummary {
    pub t: f64,
    #[serde(rename = "T")]
    pub maturity: f64,
    pub x: f64,
    pub initial: f64,
    pub mean: f64,
    /// Mean of the values clamped to `[0, 1]`; reporting only.
    pub mean_clamped: f64,
    pub std_err: f64,
    pub z: f64,
    pub below_zero: usize,
    pub above_one: usize,
}

/// Martingale statistics for every configured query. With a single path the
/// standard error and score are undefined and reported as NaN.
pub fn query_summaries(ens: &PathEnsemble<f64>) -> CliResult<Vec<QuerySummary>> {
    let mut out = Vec::new();
    for (k, q) in ens.queries.iter().enumerate() {
        let values = ens.survival_values(q.t, q.maturity, q.x)?;
        let (mean, std_err, z) = if values.len() >= 2 {
            let m = martingale_diagnostic(ens, q.t, q.maturity, q.x)?;
            (m.mean, m.std_err, m.z_score)
        } else {
            (mean_and_std_err(&values).0, f64::NAN, f64::NAN)
        };
        let clamped: Vec<f64> = values.iter().map(|v| v.clamp(0.0, 1.0)).collect();
        out.push(QuerySummary {
            t: q.t,
            maturity: q.maturity,
            x: q.x,
            initial: ens.initial_values[k],
            mean,
            mean_clamped: mean_and_std_err(&clamped).0,
            std_err,
            z,
            below_zero: values.iter().filter(|&&v| v < 0.0).count(),
            above_one: values.iter().filter(|&&v| v > 1.0).count(),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub scale: f64,
    pub sup_by_checkpoint: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct NegativityReport {
    pub fraction_negative_nodes: f64,
    pub negative_nodes: usize,
    pub total_nodes: usize,
    pub min_value: f64,
}

impl From<NegativityStats<f64>> for NegativityReport {
    fn from(n: NegativityStats<f64>) -> Self {
        Self {
            fraction_negative_nodes: n.fraction_negative_nodes,
            negative_nodes: n.negative_nodes,
            total_nodes: n.total_nodes,
            min_value: n.min_value,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub n_paths: usize,
    pub dt: f64,
    pub h: f64,
    pub checkpoint_times: Vec<f64>,
    pub identity: Option<IdentityReport>,
    pub negativity: NegativityReport,
    pub queries: Vec<QuerySummary>,
}

pub fn diagnostics(ens: &PathEnsemble<f64>) -> CliResult<Diagnostics> {
    Ok(Diagnostics {
        n_paths: ens.n_paths(),
        dt: ens.dt,
        h: ens.h,
        checkpoint_times: ens.checkpoint_times.clone(),
        identity: identity_sup_by_checkpoint(ens).map(|sup| IdentityReport {
            scale: ens.identity_scale,
            sup_by_checkpoint: sup,
        }),
        negativity: negativity_diagnostic(ens).into(),
        queries: query_summaries(ens)?,
    })
}

pub fn summary_table(queries: &[QuerySummary]) -> CliResult<Table> {
    let mut table = Table::new(&["t", "T", "x", "mean_G", "std_err", "z"])?;
    for q in queries {
        table.row(vec![
            q.t.into(),
            q.maturity.into(),
            q.x.into(),
            q.mean.into(),
            q.std_err.into(),
            q.z.into(),
        ])?;
    }
    Ok(table)
}

pub fn run(ctx: &Context, dump_paths: usize) -> CliResult<Finished> {
    let scenario = ctx.cfg.scenario(&ctx.base)?;
    let model = SimulationModel::new(scenario.clone())?;
    log::info!(
        "simulating {} paths over {} steps",
        scenario.n_paths,
        model.n_steps()
    );
    let ens = simulate_model(&model)?;
    let diag = diagnostics(&ens)?;

    let mut out = Outputs::default();
    out.add_csv("summary.csv", summary_table(&diag.queries)?)?;
    out.add_json("diagnostics.json", &diag)?;

    let n_dump = dump_paths.min(scenario.n_paths);
    if n_dump > 0 {
        let mut keep = scenario;
        keep.keep_states = true;
        keep.checkpoint_every = model.n_steps();
        keep.queries.clear();
        let keep_model = SimulationModel::new(keep)?;
        for p in 0..n_dump {
            let rec = simulate_path(&keep_model, p)?;
            let last = rec
                .states
                .as_ref()
                .and_then(|s| s.last())
                .expect("states kept");
            out.add_surface(&format!("path_{p:05}_mu_bar"), last.mu_bar())?;
            if let Some(j) = last.j_bar() {
                out.add_surface(&format!("path_{p:05}_j_bar"), j)?;
            }
        }
    }
    Ok(Finished::ok(out))
}
