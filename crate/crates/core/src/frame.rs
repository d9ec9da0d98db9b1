//! The analytic dataset shared by every estimator.

use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dgp::Setting;
use crate::error::{Error, Result};
use crate::regression::DesignMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeKind {
    Continuous,
    Binary,
}

/// Complete outcome vector kept alongside a masked frame. Estimators never
/// read it; it exists for oracle checks (the infeasible full-data fit and
/// error-against-truth metrics).
#[derive(Debug, Clone, PartialEq)]
pub struct ShadowTruth(Vec<f64>);

impl ShadowTruth {
    pub fn reveal(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisFrame {
    pub kind: OutcomeKind,
    /// Simulation family that produced the frame, if any.
    pub setting: Option<Setting>,
    pub x: DMatrix<f64>,
    pub z: DMatrix<f64>,
    /// `(Z1, Z2)` before any dummy coding; only surrogates look at it.
    pub latent_z: Option<DMatrix<f64>>,
    /// `None` where the outcome is unobserved.
    pub y: Vec<Option<f64>>,
    pub yhat: Option<Vec<f64>>,
    pub case_weights: Option<Vec<f64>>,
    pub x_names: Vec<String>,
    pub z_names: Vec<String>,
    shadow: Option<ShadowTruth>,
}

impl AnalysisFrame {
    pub fn new(kind: OutcomeKind, x: DMatrix<f64>, z: DMatrix<f64>, y: Vec<Option<f64>>) -> Result<Self> {
        let n = y.len();
        if x.nrows() != n || z.nrows() != n {
            return Err(Error::DimensionMismatch(format!(
                "x: {} rows, z: {} rows, y: {n}",
                x.nrows(),
                z.nrows()
            )));
        }
        if y.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("y".into()));
        }
        if kind == OutcomeKind::Binary && y.iter().flatten().any(|v| *v != 0.0 && *v != 1.0) {
            return Err(Error::InvalidInput("binary outcome must be 0/1".into()));
        }
        let x_names = (1..=x.ncols()).map(|j| format!("x{j}")).collect();
        let z_names = (1..=z.ncols()).map(|j| format!("z{j}")).collect();
        Ok(Self {
            kind,
            setting: None,
            x,
            z,
            latent_z: None,
            y,
            yhat: None,
            case_weights: None,
            x_names,
            z_names,
            shadow: None,
        })
    }

    pub fn with_yhat(mut self, yhat: Vec<f64>) -> Result<Self> {
        if yhat.len() != self.n() {
            return Err(Error::DimensionMismatch("yhat length".into()));
        }
        if yhat.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("yhat".into()));
        }
        self.yhat = Some(yhat);
        Ok(self)
    }

    pub fn with_case_weights(mut self, w: Vec<f64>) -> Result<Self> {
        if w.len() != self.n() {
            return Err(Error::DimensionMismatch("case weight length".into()));
        }
        if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidInput(
                "case weights must be finite and non-negative".into(),
            ));
        }
        self.case_weights = Some(w);
        Ok(self)
    }

    pub(crate) fn set_shadow(&mut self, truth: Vec<f64>) {
        self.shadow = Some(ShadowTruth(truth));
    }

    pub fn shadow(&self) -> Option<&ShadowTruth> {
        self.shadow.as_ref()
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn observed(&self) -> Vec<bool> {
        self.y.iter().map(Option::is_some).collect()
    }

    pub fn observed_indices(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.y[i].is_some()).collect()
    }

    pub fn missing_indices(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.y[i].is_none()).collect()
    }

    pub fn n_observed(&self) -> usize {
        self.y.iter().filter(|v| v.is_some()).count()
    }

    pub fn design(&self) -> Result<DesignMatrix> {
        DesignMatrix::build(&self.x, &self.z)
    }

    /// Case weights, or ones.
    pub fn base_weights(&self) -> Vec<f64> {
        self.case_weights.clone().unwrap_or_else(|| vec![1.0; self.n()])
    }

    pub fn yhat_required(&self) -> Result<&[f64]> {
        self.yhat.as_deref().ok_or(Error::MissingSurrogate)
    }

    /// Copy of the frame with every outcome revealed from the shadow truth.
    /// This is the infeasible full-data view used by the `full` method.
    pub fn oracle_full_view(&self) -> Result<Self> {
        let truth = self.shadow.as_ref().ok_or(Error::MissingOutcome)?;
        let mut out = self.clone();
        out.y = truth.0.iter().map(|v| Some(*v)).collect();
        Ok(out)
    }

    /// Writes the frame as CSV: `id, y, r, <x cols>, <z cols>, yhat` and,
    /// only when `unsafe_truth` is set, `y_true_shadow`.
    pub fn write_csv<W: Write>(&self, out: W, unsafe_truth: bool) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let mut header = vec!["id".to_string(), "y".to_string(), "r".to_string()];
        header.extend(self.x_names.iter().cloned());
        header.extend(self.z_names.iter().cloned());
        header.push("yhat".into());
        let truth = if unsafe_truth { self.shadow.as_ref() } else { None };
        if truth.is_some() {
            header.push("y_true_shadow".into());
        }
        wtr.write_record(&header)?;
        for i in 0..self.n() {
            let mut rec = vec![
                i.to_string(),
                self.y[i].map(|v| v.to_string()).unwrap_or_default(),
                if self.y[i].is_some() { "1" } else { "0" }.to_string(),
            ];
            rec.extend(self.x.row(i).iter().map(|v| v.to_string()));
            rec.extend(self.z.row(i).iter().map(|v| v.to_string()));
            rec.push(self.yhat.as_ref().map(|v| v[i].to_string()).unwrap_or_default());
            if let Some(t) = truth {
                rec.push(t.0[i].to_string());
            }
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> AnalysisFrame {
        let x = DMatrix::from_column_slice(3, 1, &[0.1, 0.2, 0.3]);
        let z = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 1.0]);
        let mut f = AnalysisFrame::new(OutcomeKind::Continuous, x, z, vec![Some(1.0), None, Some(3.0)]).unwrap();
        f.set_shadow(vec![1.0, 2.0, 3.0]);
        f
    }

    #[test]
    fn indices_partition_rows() {
        let f = toy();
        assert_eq!(f.observed_indices(), vec![0, 2]);
        assert_eq!(f.missing_indices(), vec![1]);
        assert_eq!(f.n_observed(), 2);
    }

    #[test]
    fn oracle_view_reveals_everything() {
        let f = toy().oracle_full_view().unwrap();
        assert_eq!(f.y, vec![Some(1.0), Some(2.0), Some(3.0)]);
    }

    #[test]
    fn csv_hides_truth_unless_asked() {
        let f = toy().with_yhat(vec![0.0; 3]).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf, false).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("id,y,r,x1,z1,yhat\n"));
        assert!(s.contains("1,,0,"));
        let mut buf = Vec::new();
        f.write_csv(&mut buf, true).unwrap();
        assert!(String::from_utf8(buf).unwrap().contains("y_true_shadow"));
    }

    #[test]
    fn binary_frame_rejects_non_binary() {
        let x = DMatrix::zeros(2, 1);
        let z = DMatrix::zeros(2, 1);
        assert!(AnalysisFrame::new(OutcomeKind::Binary, x, z, vec![Some(0.5), None]).is_err());
    }
}
