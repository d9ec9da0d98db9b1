//! Estimating-equation-level correction:
//!
//! ```text
//! ψ̄_lab(Y; β) − Θ (ψ̄_lab(Ŷ; β) − ψ̄_unlab(Ŷ; β)) = 0
//! ```
//!
//! where `ψ̄` are (case-weighted) averages over the labeled and unlabeled
//! rows.

use nalgebra::{DMatrix, DVector};

use super::{check_dims, filled_outcome, solve_small, Family, PbTuning, Theta};
use crate::dist::expit;
use crate::error::{Error, Result};
use crate::frame::AnalysisFrame;
use crate::regression::{outer_sum, FitOptions, FitResult};

struct Problem {
    family: Family,
    g: DMatrix<f64>,
    y: Vec<f64>,
    yhat: Vec<f64>,
    b: Vec<f64>,
    labeled: Vec<bool>,
    /// Per-row averaging multipliers: `b_i / Σ_lab b` on labeled rows and
    /// `b_i / Σ_unlab b` on unlabeled rows (zero elsewhere).
    c_lab: Vec<f64>,
    c_unl: Vec<f64>,
    m: usize,
    big_m: usize,
}

fn gram(g: &DMatrix<f64>, c: &[f64]) -> DMatrix<f64> {
    let s: Vec<f64> = c.iter().map(|v| v.sqrt()).collect();
    outer_sum(g, &s)
}

fn weighted_sum(g: &DMatrix<f64>, c: &[f64], r: &[f64]) -> DVector<f64> {
    let v = DVector::from_fn(c.len(), |i, _| c[i] * r[i]);
    g.tr_mul(&v)
}

impl Problem {
    fn new(frame: &AnalysisFrame) -> Result<Self> {
        let g = check_dims(frame)?.matrix().clone();
        let d = g.ncols();
        let yhat = frame.yhat_required()?.to_vec();
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
        let sum_lab: f64 = b.iter().zip(&labeled).filter(|(_, l)| **l).map(|(w, _)| w).sum();
        let sum_unl: f64 = b.iter().zip(&labeled).filter(|(_, l)| !**l).map(|(w, _)| w).sum();
        if !(sum_lab > 0.0 && sum_unl > 0.0) {
            return Err(Error::SubsetTooSmall("zero total weight in a subset".into()));
        }
        let c_lab = b
            .iter()
            .zip(&labeled)
            .map(|(w, l)| if *l { w / sum_lab } else { 0.0 })
            .collect();
        let c_unl = b
            .iter()
            .zip(&labeled)
            .map(|(w, l)| if *l { 0.0 } else { w / sum_unl })
            .collect();
        Ok(Self {
            family: Family::of(frame),
            g,
            y: filled_outcome(frame, 0.0),
            yhat,
            b,
            labeled,
            c_lab,
            c_unl,
            m,
            big_m,
        })
    }

    fn mean_fn(&self, beta: &DVector<f64>) -> Vec<f64> {
        let eta = &self.g * beta;
        match self.family {
            Family::Linear => eta.iter().copied().collect(),
            Family::Logistic => eta.iter().map(|e| expit(*e)).collect(),
        }
    }

    fn residuals(&self, mean: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let ry = self.y.iter().zip(mean).map(|(y, m)| y - m).collect();
        let rh = self.yhat.iter().zip(mean).map(|(y, m)| y - m).collect();
        (ry, rh)
    }

    fn score(&self, theta: &Theta, beta: &DVector<f64>) -> DVector<f64> {
        let (ry, rh) = self.residuals(&self.mean_fn(beta));
        let s_y = weighted_sum(&self.g, &self.c_lab, &ry);
        let s_lab = weighted_sum(&self.g, &self.c_lab, &rh);
        let s_unl = weighted_sum(&self.g, &self.c_unl, &rh);
        s_y - theta.apply_vec(&(s_lab - s_unl))
    }

    /// Negative Jacobian of the combined score, `A_l − Θ (A_l − A_u)`.
    fn jacobian(&self, theta: &Theta, beta: &DVector<f64>) -> DMatrix<f64> {
        let (a_lab, a_unl) = match self.family {
            Family::Linear => (gram(&self.g, &self.c_lab), gram(&self.g, &self.c_unl)),
            Family::Logistic => {
                let mu = self.mean_fn(beta);
                let v: Vec<f64> = mu.iter().map(|m| m * (1.0 - m)).collect();
                let cl: Vec<f64> = self.c_lab.iter().zip(&v).map(|(c, v)| c * v).collect();
                let cu: Vec<f64> = self.c_unl.iter().zip(&v).map(|(c, v)| c * v).collect();
                (gram(&self.g, &cl), gram(&self.g, &cu))
            }
        };
        &a_lab - theta.apply_mat(&(&a_lab - a_unl))
    }

    fn solve(&self, theta: &Theta) -> Result<(DVector<f64>, usize)> {
        match self.family {
            Family::Linear => {
                let jac = self.jacobian(theta, &DVector::zeros(self.g.ncols()));
                let b_lab = weighted_sum(&self.g, &self.c_lab, &self.y);
                let c_lab = weighted_sum(&self.g, &self.c_lab, &self.yhat);
                let c_unl = weighted_sum(&self.g, &self.c_unl, &self.yhat);
                let rhs = b_lab - theta.apply_vec(&(c_lab - c_unl));
                let beta = solve_small(&jac, &DMatrix::from_column_slice(rhs.len(), 1, rhs.as_slice()))?;
                Ok((beta.column(0).into_owned(), 1))
            }
            Family::Logistic => self.newton(theta),
        }
    }

    fn newton(&self, theta: &Theta) -> Result<(DVector<f64>, usize)> {
        let opts = FitOptions::default();
        let d = self.g.ncols();
        let mut beta = DVector::zeros(d);
        let mut score = self.score(theta, &beta);
        for iter in 1..=opts.max_iter {
            if score.amax() <= opts.score_tol {
                return Ok((beta, iter));
            }
            let jac = self.jacobian(theta, &beta);
            let step = solve_small(&jac, &DMatrix::from_column_slice(d, 1, score.as_slice()))?
                .column(0)
                .into_owned();
            let mut scale = 1.0;
            let mut candidate = &beta + &step;
            let mut cand_score = self.score(theta, &candidate);
            let mut halvings = 0;
            while !(cand_score.amax() < score.amax()) && halvings < opts.max_halvings {
                scale *= 0.5;
                candidate = &beta + &step * scale;
                cand_score = self.score(theta, &candidate);
                halvings += 1;
            }
            let change = (&candidate - &beta).amax();
            beta = candidate;
            score = cand_score;
            if beta.amax() > opts.separation_cap {
                return Err(Error::PerfectSeparation {
                    max_abs_beta: beta.amax(),
                });
            }
            if change <= opts.beta_rel_tol * (1.0 + beta.amax()) && score.amax() <= opts.score_tol.sqrt() {
                return Ok((beta, iter));
            }
        }
        Err(Error::NotConverged {
            iterations: opts.max_iter,
        })
    }

    /// `J⁻¹ V J⁻ᵀ` with `V` from group-centred per-row contributions.
    fn covariance(&self, theta: &Theta, beta: &DVector<f64>) -> Result<DMatrix<f64>> {
        let (ry, rh) = self.residuals(&self.mean_fn(beta));
        let n = self.g.nrows();
        let d = self.g.ncols();
        let mut py = self.g.clone();
        let mut ph = self.g.clone();
        for i in 0..n {
            py.row_mut(i).scale_mut(ry[i]);
            ph.row_mut(i).scale_mut(rh[i]);
        }
        let th = theta.apply_rows(&ph);
        let u = py - &th;
        let mut phi = DMatrix::zeros(n, d);
        for (group, c) in [(true, &self.c_lab), (false, &self.c_unl)] {
            let rows: Vec<usize> = (0..n).filter(|&i| self.labeled[i] == group).collect();
            let src = if group { &u } else { &th };
            let wsum: f64 = rows.iter().map(|&i| self.b[i]).sum();
            let mut centre = DVector::zeros(d);
            for &i in &rows {
                centre += src.row(i).transpose() * (self.b[i] / wsum);
            }
            for &i in &rows {
                let row = (src.row(i).transpose() - &centre) * c[i];
                phi.row_mut(i).copy_from(&row.transpose());
            }
        }
        let v = phi.tr_mul(&phi);
        let jac = self.jacobian(theta, beta);
        let j_inv = solve_small(&jac, &DMatrix::identity(d, d))?;
        Ok(&j_inv * v * j_inv.transpose())
    }

    /// Scalar θ minimising the plug-in variance of coefficient `target`,
    /// computed at the θ = 1 solution and clipped to [0, 1].
    fn auto_theta(&self, target: usize) -> Result<f64> {
        let (beta1, _) = self.solve(&Theta::Scalar(1.0))?;
        let mean = self.mean_fn(&beta1);
        let v: Vec<f64> = match self.family {
            Family::Linear => vec![1.0; mean.len()],
            Family::Logistic => mean.iter().map(|m| m * (1.0 - m)).collect(),
        };
        let d = self.g.ncols();
        let total: f64 = self.b.iter().sum();
        let cv: Vec<f64> = self.b.iter().zip(&v).map(|(b, v)| b * v / total).collect();
        let h_mat = gram(&self.g, &cv);
        let mut e = DMatrix::zeros(d, 1);
        e[(target, 0)] = 1.0;
        let h = solve_small(&h_mat, &e)?.column(0).into_owned();
        let gh = &self.g * h;
        let (ry, rh) = self.residuals(&mean);
        let a: Vec<f64> = (0..ry.len()).map(|i| ry[i] * gh[i]).collect();
        let f: Vec<f64> = (0..rh.len()).map(|i| rh[i] * gh[i]).collect();

        let moments = |group: bool| {
            let idx: Vec<usize> = (0..a.len()).filter(|&i| self.labeled[i] == group).collect();
            let wsum: f64 = idx.iter().map(|&i| self.b[i]).sum();
            let ma = idx.iter().map(|&i| self.b[i] * a[i]).sum::<f64>() / wsum;
            let mf = idx.iter().map(|&i| self.b[i] * f[i]).sum::<f64>() / wsum;
            let cov = idx.iter().map(|&i| self.b[i] * (a[i] - ma) * (f[i] - mf)).sum::<f64>() / wsum;
            let var = idx.iter().map(|&i| self.b[i] * (f[i] - mf).powi(2)).sum::<f64>() / wsum;
            (cov, var)
        };
        let (cov_lab, var_lab) = moments(true);
        let (_, var_unl) = moments(false);
        let (m, big_m) = (self.m as f64, self.big_m as f64);
        let denom = var_lab / m + var_unl / big_m;
        let theta = if denom > 0.0 { (cov_lab / m) / denom } else { 0.0 };
        Ok(theta.clamp(0.0, 1.0))
    }
}

/// Solves the corrected estimating equation. `PbTuning::AutoScalar`
/// selects θ for one coefficient (the tuned variant); `Optimal` is not
/// defined for this form.
pub fn estimate_ppi(frame: &AnalysisFrame, tuning: &PbTuning) -> Result<FitResult> {
    let problem = Problem::new(frame)?;
    let d = problem.g.ncols();
    tuning.validate(d)?;
    let (theta, tag) = match tuning {
        PbTuning::Identity => (Theta::Scalar(1.0), "ppi"),
        PbTuning::Scalar(t) => (Theta::Scalar(*t), "ppi"),
        PbTuning::Matrix(m) => (Theta::Matrix(m.clone()), "ppi"),
        PbTuning::AutoScalar { target } => (Theta::Scalar(problem.auto_theta(*target)?), "ppi_pp"),
        PbTuning::Optimal => {
            return Err(Error::InvalidInput(
                "optimal matrix tuning is only available for the estimator-level form".into(),
            ))
        }
    };
    let (beta, iterations) = problem.solve(&theta)?;
    let cov = problem.covariance(&theta, &beta)?;
    let mut fit = FitResult::from_estimate(beta, cov, None, frame.n(), tag);
    fit.iterations = iterations;
    Ok(fit)
}
