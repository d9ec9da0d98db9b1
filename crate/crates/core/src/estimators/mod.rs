//! Point estimators and their sandwich covariances for partially observed
//! outcomes.
//!
//! Every estimator takes an [`AnalysisFrame`] and returns a [`FitResult`](crate::regression::FitResult)
//! over the design `[1 | X | Z]`. Optional case weights on the frame scale
//! every row's contribution.

mod basic;
mod pb_mean;
mod ppi;
mod propensity;
mod psppi;
mod synsurr;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dist::expit;
use crate::error::{Error, Result};
use crate::frame::{AnalysisFrame, OutcomeKind};
use crate::regression::{inverse_gram, weighted_ls, DesignMatrix, FitOptions};

pub use basic::{estimate_cca, estimate_full, estimate_naive, estimate_wcca, estimate_wcca_with};
pub use pb_mean::{pb_mean, PbMean, PbMeanTheta};
pub use ppi::estimate_ppi;
pub use propensity::{PropensityDesign, PropensityModel, DEFAULT_PI_MIN};
pub use psppi::{estimate_psppi, estimate_psppi_with};
pub use synsurr::estimate_synsurr;

/// Regression family implied by the outcome kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Linear,
    Logistic,
}

impl Family {
    pub fn of(frame: &AnalysisFrame) -> Self {
        match frame.kind {
            OutcomeKind::Continuous => Family::Linear,
            OutcomeKind::Binary => Family::Logistic,
        }
    }
}

/// Tuning of the prediction-based correction term.
#[derive(Debug, Clone, PartialEq)]
pub enum PbTuning {
    /// `Θ = I`.
    Identity,
    /// `Θ = θ I`.
    Scalar(f64),
    /// Arbitrary `d × d` matrix.
    Matrix(DMatrix<f64>),
    /// Scalar θ minimising the estimated variance of one coefficient.
    AutoScalar { target: usize },
    /// Variance-minimising matrix (estimator-level form only).
    Optimal,
}

impl PbTuning {
    fn validate(&self, d: usize) -> Result<()> {
        match self {
            PbTuning::Scalar(t) if !t.is_finite() => Err(Error::InvalidInput("theta must be finite".into())),
            PbTuning::Matrix(m) if m.nrows() != d || m.ncols() != d => Err(Error::DimensionMismatch(format!(
                "theta is {}x{}, design has {d} columns",
                m.nrows(),
                m.ncols()
            ))),
            PbTuning::Matrix(m) if m.iter().any(|v| !v.is_finite()) => Err(Error::NonFinite("theta".into())),
            PbTuning::AutoScalar { target } if *target >= d => {
                Err(Error::InvalidInput(format!("target coefficient {target} out of range")))
            }
            _ => Ok(()),
        }
    }
}

/// A resolved tuning value. The scalar and matrix forms are applied by
/// separate code paths.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Theta {
    Scalar(f64),
    Matrix(DMatrix<f64>),
}

impl Theta {
    pub fn apply_vec(&self, v: &DVector<f64>) -> DVector<f64> {
        match self {
            Theta::Scalar(t) => v * *t,
            Theta::Matrix(m) => m * v,
        }
    }

    pub fn apply_mat(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            Theta::Scalar(t) => a * *t,
            Theta::Matrix(m) => m * a,
        }
    }

    /// `rows · Θᵀ`, i.e. `Θ` applied to every row vector.
    pub fn apply_rows(&self, rows: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            Theta::Scalar(t) => rows * *t,
            Theta::Matrix(m) => rows * m.transpose(),
        }
    }
}

/// Method identifiers accepted by the harness, the CLI and configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "full")]
    Full,
    #[serde(rename = "cca")]
    Cca,
    #[serde(rename = "wcca")]
    Wcca,
    #[serde(rename = "naive")]
    Naive,
    #[serde(rename = "ppi")]
    Ppi,
    #[serde(rename = "ppi_pp")]
    PpiPp,
    #[serde(rename = "ps_ppi")]
    PsPpi,
    #[serde(rename = "ps_ppi_cca")]
    PsPpiCca,
    #[serde(rename = "synsurr")]
    SynSurr,
    #[serde(rename = "mi_pmm")]
    MiPmm,
    #[serde(rename = "mi_rf")]
    MiRf,
}

impl Method {
    pub const ALL: [Method; 11] = [
        Method::Full,
        Method::Cca,
        Method::Wcca,
        Method::Naive,
        Method::Ppi,
        Method::PpiPp,
        Method::PsPpi,
        Method::PsPpiCca,
        Method::SynSurr,
        Method::MiPmm,
        Method::MiRf,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Full => "full",
            Method::Cca => "cca",
            Method::Wcca => "wcca",
            Method::Naive => "naive",
            Method::Ppi => "ppi",
            Method::PpiPp => "ppi_pp",
            Method::PsPpi => "ps_ppi",
            Method::PsPpiCca => "ps_ppi_cca",
            Method::SynSurr => "synsurr",
            Method::MiPmm => "mi_pmm",
            Method::MiRf => "mi_rf",
        }
    }

    pub fn uses_surrogate(&self) -> bool {
        matches!(
            self,
            Method::Naive | Method::Ppi | Method::PpiPp | Method::PsPpi | Method::PsPpiCca | Method::SynSurr
        )
    }

    pub fn is_multiple_imputation(&self) -> bool {
        matches!(self, Method::MiPmm | Method::MiRf)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.as_str() == s.trim())
            .ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

/// A weighted M-estimate with its per-row influence contributions
/// `A⁻¹ w_i ψ_i`, so that the sandwich covariance is `IFᵀ IF`.
pub(crate) struct MEstimate {
    pub beta: DVector<f64>,
    /// `n × d`; zero on rows with zero weight.
    pub influence: DMatrix<f64>,
}

#[cfg(test)]
impl MEstimate {
    pub fn covariance(&self) -> DMatrix<f64> {
        self.influence.tr_mul(&self.influence)
    }
}

/// Solves `Σ w_i ψ(G_i, y_i; β) = 0` for the family's score. Rows with
/// `w_i = 0` may carry any finite placeholder in `y`.
pub(crate) fn m_estimate(family: Family, g: &DMatrix<f64>, y: &[f64], w: &[f64]) -> Result<MEstimate> {
    let opts = FitOptions::default();
    let n_effective = w.iter().filter(|v| **v > 0.0).count();
    if n_effective < g.ncols() {
        return Err(Error::SingularDesign { rcond: 0.0 });
    }
    let (beta, bread, resid) = match family {
        Family::Linear => {
            let (beta, factor) = weighted_ls(g, y, w, opts.rcond_min)?;
            let fitted = g * &beta;
            let resid: Vec<f64> = y.iter().zip(fitted.iter()).map(|(a, b)| a - b).collect();
            (beta, factor.bread_inverse(), resid)
        }
        Family::Logistic => {
            let design = DesignMatrix::from_matrix(g.clone(), 0, 0)?;
            let fit = crate::regression::fit_logistic_with(&design, y, w, &opts)?;
            let eta = g * &fit.beta;
            let mu: Vec<f64> = eta.iter().map(|e| expit(*e)).collect();
            let v: Vec<f64> = mu.iter().zip(w).map(|(m, wi)| wi * m * (1.0 - m)).collect();
            let bread = inverse_gram(g, &v, opts.rcond_min)?;
            let resid: Vec<f64> = y.iter().zip(&mu).map(|(a, m)| a - m).collect();
            (fit.beta, bread, resid)
        }
    };
    let mut scaled = g.clone();
    for (i, (wi, e)) in w.iter().zip(&resid).enumerate() {
        scaled.row_mut(i).scale_mut(wi * e);
    }
    let influence = scaled * bread;
    Ok(MEstimate { beta, influence })
}

/// Outcome vector with missing entries replaced by `fill`.
pub(crate) fn filled_outcome(frame: &AnalysisFrame, fill: f64) -> Vec<f64> {
    frame.y.iter().map(|v| v.unwrap_or(fill)).collect()
}

pub(crate) fn check_dims(frame: &AnalysisFrame) -> Result<DesignMatrix> {
    if let Some(w) = &frame.case_weights {
        if w.len() != frame.n() {
            return Err(Error::DimensionMismatch("case weight length".into()));
        }
    }
    frame.design()
}

/// Solves `a x = b` for a small square system after a conditioning check.
pub(crate) fn solve_small(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let rcond = crate::regression::reciprocal_condition(a);
    if !(rcond >= FitOptions::default().rcond_min) {
        return Err(Error::SingularDesign { rcond });
    }
    a.clone().lu().solve(b).ok_or(Error::SingularDesign { rcond })
}
