use fme_core::config::InstrumentConfig;
use fme_core::pricing::{annuity_value, survivor_bond_price, DiscountCurve};
use fme_core::scalar::mean_and_std_err;
use fme_core::simulate::{simulate_path, PathState, SimulationModel};
use rayon::prelude::*;

use super::{Context, Finished};
use crate::error::{CliError, CliResult};
use crate::output::{Outputs, Table};

fn price(
    inst: &InstrumentConfig,
    state: &PathState<f64>,
    curve: &DiscountCurve<f64>,
) -> CliResult<f64> {
    Ok(match inst {
        InstrumentConfig::SurvivorBond { maturity, x } => {
            survivor_bond_price(state, curve, *maturity, *x)?
        }
        InstrumentConfig::Annuity { dates, x } => annuity_value(state, curve, dates, *x)?,
    })
}

fn describe(inst: &InstrumentConfig) -> (&'static str, f64, f64) {
    match inst {
        InstrumentConfig::SurvivorBond { maturity, x } => ("survivor_bond", *x, *maturity),
        InstrumentConfig::Annuity { dates, x } => (
            "annuity",
            *x,
            dates.iter().copied().fold(f64::NAN, f64::max),
        ),
    }
}

pub fn run(ctx: &Context) -> CliResult<Finished> {
    let p = ctx
        .cfg
        .pricing
        .as_ref()
        .ok_or_else(|| CliError::config("the config has no `pricing` section"))?;
    let curve = ctx
        .cfg
        .discount_curve(&ctx.base)?
        .expect("pricing section present");
    let mut scenario = ctx.cfg.scenario(&ctx.base)?;
    scenario.keep_states = true;
    scenario.record_spot = false;
    scenario.queries.clear();
    let model = SimulationModel::new(scenario)?;
    let cfg = model.config();

    // checkpoint index of each valuation time
    let every = cfg.checkpoint_every;
    let n = model.n_steps();
    let mut times = vec![0.0];
    times.extend(
        (1..=n)
            .filter(|k| k % every == 0 || *k == n)
            .map(|k| k as f64 * cfg.dt),
    );
    let slots = p
        .valuation_times
        .iter()
        .map(|&t| {
            times
                .iter()
                .position(|&c| (c - t).abs() <= 1e-9 * cfg.dt)
                .ok_or_else(|| {
                    CliError::config(format!("valuation time {t} is not a simulation checkpoint"))
                })
        })
        .collect::<CliResult<Vec<_>>>()?;

    let init = model.initial_state();
    let price0 = p
        .instruments
        .iter()
        .map(|inst| price(inst, &init, &curve))
        .collect::<CliResult<Vec<_>>>()?;

    let per_path = (0..cfg.n_paths)
        .into_par_iter()
        .map(|path| -> CliResult<Vec<f64>> {
            let rec = simulate_path(&model, path)?;
            let states = rec.states.as_ref().expect("states kept");
            let mut row = Vec::with_capacity(slots.len() * p.instruments.len());
            for &k in &slots {
                for inst in &p.instruments {
                    row.push(price(inst, &states[k], &curve)?);
                }
            }
            Ok(row)
        })
        .collect::<CliResult<Vec<_>>>()?;

    let mut table = Table::new(&[
        "t",
        "instrument",
        "type",
        "x",
        "last_date",
        "mean_price",
        "std_err",
        "discounted_mean",
        "price_0",
        "z",
    ])?;
    let mut column = vec![0.0; per_path.len()];
    for (vi, &t) in p.valuation_times.iter().enumerate() {
        let growth = curve.discount(0.0, t);
        for (ii, inst) in p.instruments.iter().enumerate() {
            let col = vi * p.instruments.len() + ii;
            for (c, row) in column.iter_mut().zip(&per_path) {
                *c = row[col];
            }
            let (mean, se) = mean_and_std_err(&column);
            // discounted prices are martingales under deterministic rates
            let (dmean, dse) = (growth * mean, growth * se);
            let diff = dmean - price0[ii];
            let z = if dse.is_nan() {
                f64::NAN
            } else if dse > 0.0 {
                diff / dse
            } else if diff.abs() <= 1e-12 * price0[ii].abs().max(1.0) {
                0.0
            } else {
                diff.signum() * f64::INFINITY
            };
            let (kind, x, last) = describe(inst);
            table.row(vec![
                t.into(),
                ii.into(),
                kind.into(),
                x.into(),
                last.into(),
                mean.into(),
                se.into(),
                dmean.into(),
                price0[ii].into(),
                z.into(),
            ])?;
        }
    }
    let mut out = Outputs::default();
    out.add_csv("prices.csv", table)?;
    Ok(Finished::ok(out))
}
