use fme_core::config::ModeConfig;
use fme_core::simulate::{simulate_model, SimulationModel};
use serde::Serialize;
use serde_json::{json, Value};

use super::{cohort, drift_table, simulate, Context, Finished};
use crate::error::CliResult;
use crate::output::Outputs;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

impl Status {
    fn of(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub status: Status,
    pub detail: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub checks: Vec<Check>,
}

fn skipped(name: &'static str, why: &str) -> Check {
    Check {
        name,
        status: Status::Skipped,
        detail: json!({ "reason": why }),
    }
}

fn drift_check(ctx: &Context) -> CliResult<Check> {
    let surfaces = drift_table::drift_surfaces(ctx)?;
    Ok(match drift_table::oracle(ctx, &surfaces)? {
        None => skipped(
            "drift_oracle",
            "volatility is not an unscaled closed-form example",
        ),
        Some(r) => Check {
            name: "drift_oracle",
            status: Status::of(r.fields.iter().all(|f| f.pass)),
            detail: serde_json::to_value(&r)?,
        },
    })
}

fn simulation_checks(ctx: &Context) -> CliResult<Vec<Check>> {
    let v = ctx.cfg.validation;
    let scenario = ctx.cfg.scenario(&ctx.base)?;
    let model = SimulationModel::new(scenario)?;
    let ens = simulate_model(&model)?;
    let diag = simulate::diagnostics(&ens)?;
    let mut checks = Vec::new();

    if diag.queries.is_empty() || ens.n_paths() < 2 {
        checks.push(skipped(
            "martingale",
            "needs queries and at least two paths",
        ));
    } else {
        let inside = diag
            .queries
            .iter()
            .filter(|q| q.z.abs() <= v.martingale_z)
            .count();
        let fraction = inside as f64 / diag.queries.len() as f64;
        checks.push(Check {
            name: "martingale",
            status: Status::of(fraction >= v.martingale_pass_fraction),
            detail: json!({
                "band": v.martingale_z,
                "inside": inside,
                "total": diag.queries.len(),
                "required_fraction": v.martingale_pass_fraction,
                "max_abs_z": diag.queries.iter().fold(0.0f64, |m, q| m.max(q.z.abs())),
                "queries": diag.queries,
            }),
        });
    }

    match (&diag.identity, ctx.cfg.simulation.mode) {
        (Some(id), ModeConfig::Improvements) => {
            let bound = v.identity_factor * (ens.dt + ens.h * ens.h) * id.scale;
            let worst = id.sup_by_checkpoint.iter().fold(0.0f64, |m, &r| m.max(r));
            checks.push(Check {
                name: "identity",
                status: Status::of(id.sup_by_checkpoint.iter().all(|&r| r <= bound)),
                detail: json!({
                    "bound": bound,
                    "max_residual": worst,
                    "sup_by_checkpoint": id.sup_by_checkpoint,
                }),
            });
        }
        _ => checks.push(skipped("identity", "only defined in improvements mode")),
    }

    // reported, never failed: negative rates are allowed by the model
    checks.push(Check {
        name: "negativity",
        status: Status::Pass,
        detail: serde_json::to_value(&diag.negativity)?,
    });
    Ok(checks)
}

fn cohort_checks(ctx: &Context) -> CliResult<Vec<Check>> {
    if ctx.cfg.cohort.is_none() {
        return Ok(vec![
            skipped("lln", "no cohort section"),
            skipped("compensator", "no cohort section"),
        ]);
    }
    let (_, report) = cohort::run_cohort(ctx)?;
    Ok(vec![
        Check {
            name: "lln",
            status: Status::of(report.lln.iter().all(|e| e.pass)),
            detail: serde_json::to_value(&report.lln)?,
        },
        Check {
            name: "compensator",
            status: Status::of(report.compensator.iter().all(|e| e.pass)),
            detail: json!({
                "checkpoints": report.compensator.len(),
                "failing": report.compensator.iter().filter(|e| !e.pass).count(),
                "max_abs_score": report
                    .compensator
                    .iter()
                    .filter(|e| e.std_err > 0.0)
                    .fold(0.0f64, |m, e| m.max((e.mean / e.std_err).abs())),
                "doubled_hazard_max_score": report.doubled_hazard_max_score,
            }),
        },
    ])
}

pub fn run(ctx: &Context) -> CliResult<Finished> {
    let mut checks = vec![drift_check(ctx)?];
    checks.extend(simulation_checks(ctx)?);
    checks.extend(cohort_checks(ctx)?);
    for c in &checks {
        log::info!("{}: {:?}", c.name, c.status);
    }
    let passed = checks.iter().all(|c| c.status != Status::Fail);
    let mut out = Outputs::default();
    out.add_json("validation.json", &ValidationReport { passed, checks })?;
    Ok(Finished {
        outputs: out,
        passed,
    })
}
