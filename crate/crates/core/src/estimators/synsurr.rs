//! Synthetic-surrogate composition `β̂ = γ̂ + δ̂ α̂`: `α̂` regresses `Ŷ` on
//! `G` over all rows and `(δ̂, γ̂)` regresses `Y` on `(Ŷ, G)` over the
//! labeled rows.

use super::{check_dims, filled_outcome, m_estimate, Family};
use crate::error::{Error, Result};
use crate::frame::AnalysisFrame;
use crate::regression::FitResult;

pub fn estimate_synsurr(frame: &AnalysisFrame) -> Result<FitResult> {
    if Family::of(frame) != Family::Linear {
        return Err(Error::NotLinearFamily);
    }
    let g = check_dims(frame)?;
    let d = g.ncols();
    let yhat = frame.yhat_required()?;
    let labeled = frame.observed();
    let m = labeled.iter().filter(|l| **l).count();
    if m < d + 2 {
        return Err(Error::SubsetTooSmall(format!(
            "{m} labeled rows; need at least {}",
            d + 2
        )));
    }
    let b = frame.base_weights();
    let alpha = m_estimate(Family::Linear, g.matrix(), yhat, &b)?;

    let joint = g.with_leading_column(yhat)?;
    let w_lab: Vec<f64> = b.iter().zip(&labeled).map(|(w, l)| if *l { *w } else { 0.0 }).collect();
    let y = filled_outcome(frame, 0.0);
    let second = m_estimate(Family::Linear, joint.matrix(), &y, &w_lab).map_err(|e| match e {
        Error::SingularDesign { rcond } => Error::SurrogateCollinear { rcond },
        other => other,
    })?;
    let delta = second.beta[0];
    let gamma = second.beta.rows(1, d).into_owned();
    let beta = &gamma + &alpha.beta * delta;

    let if_delta = second.influence.column(0).into_owned();
    let if_gamma = second.influence.columns(1, d).into_owned();
    // IF_β = IF_γ + α̂ IF_δ + δ̂ IF_α
    let influence = if_gamma + &if_delta * alpha.beta.transpose() + &alpha.influence * delta;
    let cov = influence.tr_mul(&influence);
    Ok(FitResult::from_estimate(beta, cov, None, frame.n(), "synsurr"))
}
