pub mod cohort;
pub mod drift_table;
pub mod price;
pub mod simulate;
pub mod validate;

use std::path::PathBuf;

use fme_core::config::ConfigFile;

use crate::output::Outputs;

/// Parsed config plus the directory its relative paths resolve against.
pub struct Context {
    pub cfg: ConfigFile,
    pub base: PathBuf,
}

pub struct Finished {
    pub outputs: Outputs,
    /// False when a diagnostic battery ran to completion but did not pass.
    pub passed: bool,
}

impl Finished {
    pub fn ok(outputs: Outputs) -> Self {
        Self {
            outputs,
            passed: true,
        }
    }
}

/// Relative sup-norm error `max|got − want| / max|want|`, absolute when
/// `want` vanishes.
pub fn relative_sup_error(got: &[f64], want: &[f64]) -> f64 {
    let (mut diff, mut scale) = (0.0f64, 0.0f64);
    for (g, w) in got.iter().zip(want) {
        diff = diff.max((g - w).abs());
        scale = scale.max(w.abs());
    }
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}
