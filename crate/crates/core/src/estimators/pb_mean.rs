use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PbMeanTheta {
    Fixed(f64),
    /// `θ̂ = M / (M + m)`.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PbMean {
    pub mu: f64,
    /// Plug-in variance of `mu`.
    pub var: f64,
    pub theta: f64,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sample_var(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = v.clone().count() as f64;
    let m = v.clone().sum::<f64>() / n;
    v.map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)
}

/// Prediction-based mean `mean(Ŷ_unlab) − θ (mean(Ŷ_lab) − mean(Y_lab))`
/// with variance `Var(Ŷ_unlab)/M + θ² Var(Ŷ_lab − Y_lab)/m`.
pub fn pb_mean(y_lab: &[f64], yhat_lab: &[f64], yhat_unlab: &[f64], theta: PbMeanTheta) -> Result<PbMean> {
    let m = y_lab.len();
    let big_m = yhat_unlab.len();
    if yhat_lab.len() != m {
        return Err(Error::DimensionMismatch(
            "labeled outcome and prediction lengths differ".into(),
        ));
    }
    if m < 2 || big_m < 2 {
        return Err(Error::SubsetTooSmall(format!(
            "need at least 2 labeled and 2 unlabeled values, got {m} and {big_m}"
        )));
    }
    if y_lab.iter().chain(yhat_lab).chain(yhat_unlab).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("pb_mean input".into()));
    }
    let theta = match theta {
        PbMeanTheta::Fixed(t) if t.is_finite() => t,
        PbMeanTheta::Fixed(_) => return Err(Error::InvalidInput("theta must be finite".into())),
        PbMeanTheta::Auto => big_m as f64 / (big_m + m) as f64,
    };
    let rectifier = mean(yhat_lab) - mean(y_lab);
    let mu = mean(yhat_unlab) - theta * rectifier;
    let var_unlab = sample_var(yhat_unlab.iter().copied());
    let var_resid = sample_var(yhat_lab.iter().zip(y_lab).map(|(h, y)| h - y));
    let var = var_unlab / big_m as f64 + theta * theta * var_resid / m as f64;
    Ok(PbMean { mu, var, theta })
}
