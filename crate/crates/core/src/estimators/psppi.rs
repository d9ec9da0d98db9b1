//! Estimator-level correction `β̂ = β̂_CC − Θ (γ̂₁ − γ̂₂)`.
//!
//! `β̂_CC` and `γ̂₁` are fitted on the labeled rows (to `Y` and `Ŷ`), `γ̂₂`
//! on the unlabeled rows (to `Ŷ`). In the weighted form labeled rows carry
//! `1/π̂` and unlabeled rows `1/(1 − π̂)`, so that both `Ŷ` regressions
//! target the full-sample coefficients.

use nalgebra::DMatrix;

use super::{
    check_dims, filled_outcome, m_estimate, Family, PbTuning, PropensityDesign, PropensityModel, Theta, DEFAULT_PI_MIN,
};
use crate::error::{Error, Result};
use crate::frame::AnalysisFrame;
use crate::regression::{reciprocal_condition, FitOptions, FitResult};

/// `weighted = true` fits a propensity model of `R` on `(1, X, Z)`;
/// `false` uses unit weights.
pub fn estimate_psppi(frame: &AnalysisFrame, tuning: &PbTuning, weighted: bool) -> Result<FitResult> {
    if weighted {
        let prop = PropensityModel::fit(frame, PropensityDesign::Full, DEFAULT_PI_MIN)?;
        estimate_psppi_with(frame, tuning, Some(&prop))
    } else {
        estimate_psppi_with(frame, tuning, None)
    }
}

/// As [`estimate_psppi`] with a precomputed propensity model (`None` for the
/// unweighted form). Weights are treated as fixed in the covariance.
pub fn estimate_psppi_with(
    frame: &AnalysisFrame,
    tuning: &PbTuning,
    propensity: Option<&PropensityModel>,
) -> Result<FitResult> {
    let g = check_dims(frame)?;
    let gm = g.matrix();
    let d = g.ncols();
    tuning.validate(d)?;
    let yhat = frame.yhat_required()?;
    let labeled = frame.observed();
    let m = labeled.iter().filter(|l| **l).count();
    let big_m = labeled.len() - m;
    if m < d + 1 || big_m < d + 1 {
        return Err(Error::SubsetTooSmall(format!(
            "{m} labeled and {big_m} unlabeled rows; need at least {} of each",
            d + 1
        )));
    }
    let b = frame.base_weights();
    let (w_lab, w_unl): (Vec<f64>, Vec<f64>) = match propensity {
        Some(p) => {
            if p.n() != frame.n() {
                return Err(Error::DimensionMismatch("propensity length".into()));
            }
            let ow = p.observed_weights();
            let uw = p.unobserved_weights();
            (0..frame.n())
                .map(|i| {
                    if labeled[i] {
                        (b[i] * ow[i], 0.0)
                    } else {
                        (0.0, b[i] * uw[i])
                    }
                })
                .unzip()
        }
        None => (0..frame.n())
            .map(|i| if labeled[i] { (b[i], 0.0) } else { (0.0, b[i]) })
            .unzip(),
    };

    let family = Family::of(frame);
    let y = filled_outcome(frame, 0.0);
    let cc = m_estimate(family, gm, &y, &w_lab)?;
    let gamma1 = m_estimate(family, gm, yhat, &w_lab)?;
    let gamma2 = m_estimate(family, gm, yhat, &w_unl)?;
    let if_delta = &gamma1.influence - &gamma2.influence;

    let mut warnings = Vec::new();
    let theta = match tuning {
        PbTuning::Identity => Theta::Scalar(1.0),
        PbTuning::Scalar(t) => Theta::Scalar(*t),
        PbTuning::Matrix(mat) => Theta::Matrix(mat.clone()),
        PbTuning::AutoScalar { target } => {
            let j = *target;
            let c = cc.influence.column(j).dot(&if_delta.column(j));
            let v = if_delta.column(j).norm_squared();
            Theta::Scalar(if v > 0.0 { c / v } else { 0.0 })
        }
        PbTuning::Optimal => optimal_theta(&cc.influence, &if_delta, &mut warnings),
    };

    let delta = &gamma1.beta - &gamma2.beta;
    let beta = &cc.beta - theta.apply_vec(&delta);
    let influence = &cc.influence - theta.apply_rows(&if_delta);
    let cov = influence.tr_mul(&influence);
    let tag = if propensity.is_some() { "ps_ppi" } else { "ps_ppi_cca" };
    let mut fit = FitResult::from_estimate(beta, cov, None, frame.n(), tag);
    fit.warnings = warnings;
    Ok(fit)
}

const NEGLIGIBLE_RATIO: f64 = 1e-20;

/// `Θ* = Cov(IF_CC, IF_Δ) Var(IF_Δ)⁻¹`; falls back to the scalar
/// `tr(C) / tr(V)` when `Var(IF_Δ)` is ill-conditioned.
fn optimal_theta(if_cc: &DMatrix<f64>, if_delta: &DMatrix<f64>, warnings: &mut Vec<String>) -> Theta {
    let c = if_cc.tr_mul(if_delta);
    let v = if_delta.tr_mul(if_delta);
    let tv = v.trace();
    // IF_Δ at rounding level (e.g. identical Ŷ fits in both subsets): any
    // Θ would only amplify noise.
    if tv <= NEGLIGIBLE_RATIO * if_cc.norm_squared() {
        warnings.push(format!(
            "{}; correction term is negligible, using theta 0",
            Error::IllConditionedTheta
        ));
        return Theta::Scalar(0.0);
    }
    let rcond = reciprocal_condition(&v);
    if rcond >= FitOptions::default().rcond_min {
        // Θ = C V⁻¹  ⇔  V Θᵀ = Cᵀ (V symmetric)
        if let Some(theta_t) = v.clone().lu().solve(&c.transpose()) {
            if theta_t.iter().all(|x| x.is_finite()) {
                return Theta::Matrix(theta_t.transpose());
            }
        }
    }
    let scalar = if tv > 0.0 { c.trace() / tv } else { 0.0 };
    warnings.push(format!(
        "{} (reciprocal condition {rcond:.3e}); using scalar theta {scalar}",
        Error::IllConditionedTheta
    ));
    Theta::Scalar(scalar)
}
