use super::{check_dims, Family, PropensityDesign, PropensityModel, DEFAULT_PI_MIN};
use crate::error::{Error, Result};
use crate::frame::AnalysisFrame;
use crate::regression::{fit_logistic, fit_wls, DesignMatrix, FitResult};

fn fit_family(family: Family, g: &DesignMatrix, y: &[f64], w: &[f64]) -> Result<FitResult> {
    match family {
        Family::Linear => fit_wls(g, y, w),
        Family::Logistic => fit_logistic(g, y, w),
    }
}

/// Fits on the observed rows only, with per-row weights `w` (length n).
fn complete_case_fit(frame: &AnalysisFrame, w: &[f64], tag: &str) -> Result<FitResult> {
    let g = check_dims(frame)?;
    let rows = frame.observed_indices();
    let required = g.ncols() + 1;
    if rows.len() < required {
        return Err(Error::EmptyCompleteCase {
            observed: rows.len(),
            required,
        });
    }
    let gs = g.select_rows(&rows);
    let y: Vec<f64> = rows.iter().map(|&i| frame.y[i].expect("observed row")).collect();
    let ws: Vec<f64> = rows.iter().map(|&i| w[i]).collect();
    Ok(fit_family(Family::of(frame), &gs, &y, &ws)?.tagged(tag))
}

/// Fit on every row; all outcomes must be observed.
pub fn estimate_full(frame: &AnalysisFrame) -> Result<FitResult> {
    let g = check_dims(frame)?;
    let y: Vec<f64> = frame
        .y
        .iter()
        .map(|v| v.ok_or(Error::MissingOutcome))
        .collect::<Result<_>>()?;
    Ok(fit_family(Family::of(frame), &g, &y, &frame.base_weights())?.tagged("full"))
}

/// Complete-case analysis.
pub fn estimate_cca(frame: &AnalysisFrame) -> Result<FitResult> {
    complete_case_fit(frame, &frame.base_weights(), "cca")
}

/// Complete cases weighted by `1 / π̂` from a logistic model of `R` on
/// `(1, X, Z)` with `π̂` trimmed at 0.01.
pub fn estimate_wcca(frame: &AnalysisFrame) -> Result<FitResult> {
    let prop = PropensityModel::fit(frame, PropensityDesign::Full, DEFAULT_PI_MIN)?;
    estimate_wcca_with(frame, &prop)
}

/// Weighted complete-case fit with a precomputed propensity model. The
/// weights are treated as fixed in the covariance.
pub fn estimate_wcca_with(frame: &AnalysisFrame, prop: &PropensityModel) -> Result<FitResult> {
    if prop.n() != frame.n() {
        return Err(Error::DimensionMismatch("propensity length".into()));
    }
    let w: Vec<f64> = frame
        .base_weights()
        .iter()
        .zip(prop.observed_weights())
        .map(|(b, ipw)| b * ipw)
        .collect();
    complete_case_fit(frame, &w, "wcca")
}

/// Missing outcomes replaced by `Ŷ`, then an unweighted fit on all rows.
pub fn estimate_naive(frame: &AnalysisFrame) -> Result<FitResult> {
    let g = check_dims(frame)?;
    let yhat = frame.yhat_required()?;
    let y: Vec<f64> = frame.y.iter().zip(yhat).map(|(v, h)| v.unwrap_or(*h)).collect();
    Ok(fit_family(Family::of(frame), &g, &y, &frame.base_weights())?.tagged("naive"))
}
