//! CSV output for estimates and sweeps.

use std::io::Write;

use crate::charge::ChargeDistribution;
use crate::error::Result;
use crate::estimator::{EstimateResult, SweepRow};

pub const ESTIMATE_HEADER: [&str; 8] = [
    "dist",
    "ell",
    "n",
    "c_hat",
    "stderr",
    "mean_tstar_sq",
    "mean_variates",
    "seed",
];

pub const SWEEP_HEADER: [&str; 9] = [
    "param",
    "value",
    "c_hat",
    "stderr",
    "mean_tstar_sq",
    "tstar_sq_stderr",
    "n",
    "seed",
    "status",
];

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x == 0.0 {
        // keep the sign of -0.0 out of the files
        format!("{:.16e}", 0.0)
    } else {
        format!("{x:.16e}")
    }
}

pub fn write_estimate_csv<W: Write>(
    dist: &ChargeDistribution,
    result: &EstimateResult,
    out: W,
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(ESTIMATE_HEADER)?;
    wtr.write_record([
        dist.to_json(),
        result.ell.map(fmt_float).unwrap_or_default(),
        result.n_samples.to_string(),
        fmt_float(result.c_hat),
        fmt_float(result.stderr),
        fmt_float(result.mean_tstar_sq),
        fmt_float(result.mean_variates),
        result.seed.to_string(),
    ])?;
    wtr.flush()?;
    Ok(())
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(SWEEP_HEADER)?;
    for r in rows {
        wtr.write_record([
            r.param.as_str().to_string(),
            fmt_float(r.value),
            fmt_float(r.c_hat),
            fmt_float(r.stderr),
            fmt_float(r.mean_tstar_sq),
            fmt_float(r.tstar_sq_stderr),
            r.n_samples.to_string(),
            r.seed.to_string(),
            r.failure.clone().unwrap_or_else(|| "ok".to_string()),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// One-line human summary of an estimate.
pub fn summary_line(result: &EstimateResult) -> String {
    if result.degenerate {
        return "c_hat = 0 (essential supremum <= 0, no simulation needed)".to_string();
    }
    format!(
        "c_hat = {:.6} ± {:.6} (95%), stderr = {:.6}, n = {}, ell = {}, E[T*^2] ≈ {:.3}, mean variates = {:.1}, seed = {}",
        result.c_hat,
        result.half_width_95(),
        result.stderr,
        result.n_samples,
        result.ell.map_or_else(|| "-".to_string(), |l| l.to_string()),
        result.mean_tstar_sq,
        result.mean_variates,
        result.seed,
    )
}
