use nalgebra::{DMatrix, DVector};

use crate::dist::expit;
use crate::error::{Error, Result};
use crate::frame::AnalysisFrame;
use crate::regression::{fit_logistic, DesignMatrix};

pub const DEFAULT_PI_MIN: f64 = 0.01;

/// Regressors of the observation-indicator model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PropensityDesign {
    /// `(1, X, Z)`.
    #[default]
    Full,
    /// `(1, Z)`; used when `X` changes per fit, as in a variant scan.
    ConfoundersOnly,
    /// Constant probability.
    InterceptOnly,
}

/// Logistic model of `R` given the chosen regressors, fitted over all rows.
#[derive(Debug, Clone, PartialEq)]
pub struct PropensityModel {
    /// `None` when every outcome is observed and no model was needed.
    pub coefficients: Option<DVector<f64>>,
    /// `π̂_i`, clipped below at `pi_min`.
    pub fitted_pi: Vec<f64>,
    pub pi_min: f64,
    pub design: PropensityDesign,
}

impl PropensityModel {
    pub fn fit(frame: &AnalysisFrame, design: PropensityDesign, pi_min: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&pi_min) {
            return Err(Error::InvalidInput("pi_min must lie in [0, 1)".into()));
        }
        let n = frame.n();
        let n_obs = frame.n_observed();
        if n_obs == 0 {
            return Err(Error::EmptyCompleteCase {
                observed: 0,
                required: 1,
            });
        }
        if n_obs == n {
            return Ok(Self {
                coefficients: None,
                fitted_pi: vec![1.0; n],
                pi_min,
                design,
            });
        }
        let g = match design {
            PropensityDesign::Full => frame.design()?,
            PropensityDesign::ConfoundersOnly => DesignMatrix::build(&DMatrix::zeros(n, 0), &frame.z)?,
            PropensityDesign::InterceptOnly => DesignMatrix::from_matrix(DMatrix::from_element(n, 1, 1.0), 0, 0)?,
        };
        let r: Vec<f64> = frame.y.iter().map(|v| f64::from(u8::from(v.is_some()))).collect();
        let fit = fit_logistic(&g, &r, &frame.base_weights())?;
        let eta = g.matrix() * &fit.beta;
        let fitted_pi = eta.iter().map(|e| expit(*e).max(pi_min)).collect();
        Ok(Self {
            coefficients: Some(fit.beta),
            fitted_pi,
            pi_min,
            design,
        })
    }

    pub fn n(&self) -> usize {
        self.fitted_pi.len()
    }

    /// `1 / π̂_i`, the weight of an observed row.
    pub fn observed_weights(&self) -> Vec<f64> {
        self.fitted_pi.iter().map(|p| 1.0 / p).collect()
    }

    /// `1 / (1 − π̂_i)` with the same trimming, the weight of an unobserved
    /// row when reweighting the unlabeled subset to the full sample.
    pub fn unobserved_weights(&self) -> Vec<f64> {
        self.fitted_pi
            .iter()
            .map(|p| 1.0 / (1.0 - p).max(self.pi_min))
            .collect()
    }
}
