use fme_core::drift::{
    drift_j_general, drift_j_levy, drift_mu_general, drift_mu_levy, scalar_vol_j_to_vol_mu,
    vol_j_to_vol_mu, VolKind,
};
use fme_core::simulate::VolSpec;
use fme_core::surface::Surface;
use serde::Serialize;

use super::{relative_sup_error, Context, Finished};
use crate::error::CliResult;
use crate::output::Outputs;

/// Drift surfaces implied by the configured volatility: `alpha` for the
/// forward rates, and `a` for the improvements when the loadings are
/// improvement loadings.
pub fn drift_surfaces(ctx: &Context) -> CliResult<Vec<(&'static str, Surface<f64>)>> {
    let grid = ctx.cfg.grid()?;
    let driver = ctx.cfg.driver()?;
    let out = match ctx.cfg.vol_spec(grid, &ctx.base)? {
        VolSpec::Levy(v) => match VolKind::from(ctx.cfg.volatility.kind) {
            VolKind::RateVol => vec![("alpha", drift_mu_levy(&v, &driver)?)],
            VolKind::ImprovementVol => vec![
                (
                    "alpha",
                    drift_mu_levy(&scalar_vol_j_to_vol_mu(&v), &driver)?,
                ),
                ("a", drift_j_levy(&v, &driver)?),
            ],
        },
        VolSpec::General(v) => match v.kind() {
            VolKind::RateVol => vec![("alpha", drift_mu_general(&v, &driver)?)],
            VolKind::ImprovementVol => vec![
                ("alpha", drift_mu_general(&vol_j_to_vol_mu(&v)?, &driver)?),
                ("a", drift_j_general(&v, &driver)?),
            ],
        },
    };
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleField {
    pub field: &'static str,
    pub rel_sup_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub example: u32,
    pub fields: Vec<OracleField>,
}

/// Compares `surfaces` with the closed form of the configured example, when
/// the loading is an unscaled closed-form example.
pub fn oracle(
    ctx: &Context,
    surfaces: &[(&'static str, Surface<f64>)],
) -> CliResult<Option<OracleReport>> {
    let Some((ex, scale)) = ctx.cfg.example() else {
        return Ok(None);
    };
    if scale != 1.0 {
        log::info!("example loading is scaled by {scale}; no closed form to compare against");
        return Ok(None);
    }
    let driver = ctx.cfg.driver()?;
    let tol = ctx.cfg.validation.drift_oracle_rel_tol;
    let mut fields = Vec::new();
    for (name, got) in surfaces {
        let g = *got.grid();
        let mut want = Vec::with_capacity(g.len());
        for i in 0..g.n_s() {
            for j in 0..g.n_z() {
                let (s, y) = (g.s(i), g.y(i, j));
                want.push(match *name {
                    "alpha" => ex.alpha(s, y, &driver)?,
                    _ => ex.a(s, y, &driver)?,
                });
            }
        }
        let err = relative_sup_error(got.values(), &want);
        fields.push(OracleField {
            field: name,
            rel_sup_error: err,
            tolerance: tol,
            pass: err <= tol,
        });
    }
    Ok(Some(OracleReport {
        example: ex.index(),
        fields,
    }))
}

#[derive(Serialize)]
struct SurfaceSummary {
    name: &'static str,
    file: String,
    sup_norm: f64,
}

#[derive(Serialize)]
struct Report {
    kind: &'static str,
    surfaces: Vec<SurfaceSummary>,
    oracle: Option<OracleReport>,
}

pub fn run(ctx: &Context) -> CliResult<Finished> {
    let surfaces = drift_surfaces(ctx)?;
    let oracle = oracle(ctx, &surfaces)?;
    let mut out = Outputs::default();
    let mut summaries = Vec::new();
    for (name, f) in &surfaces {
        let stem = format!("drift_{name}");
        out.add_surface(&stem, f)?;
        summaries.push(SurfaceSummary {
            name,
            file: format!("{stem}.csv"),
            sup_norm: f.sup_norm(),
        });
    }
    let kind = match VolKind::from(ctx.cfg.volatility.kind) {
        VolKind::RateVol => "rate_vol",
        VolKind::ImprovementVol => "improvement_vol",
    };
    out.add_json(
        "drift_report.json",
        &Report {
            kind,
            surfaces: summaries,
            oracle,
        },
    )?;
    Ok(Finished::ok(out))
}
