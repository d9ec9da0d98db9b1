//! Weighted linear and logistic estimating equations with sandwich inference.
//!
//! Both solvers go through a Householder QR of the row-scaled design, so the
//! normal equations are never formed. A reciprocal condition number below
//! [`FitOptions::rcond_min`] on the triangular factor is reported as
//! [`Error::SingularDesign`].

use nalgebra::{DMatrix, DVector};

use crate::dist::{expit, two_sided_p};
use crate::error::{Error, Result};

/// Design matrix `[1 | X | Z]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    data: DMatrix<f64>,
    p: usize,
    q: usize,
}

impl DesignMatrix {
    /// Builds `[1 | x | z]`. Both blocks must have the same number of rows
    /// and contain only finite values.
    pub fn build(x: &DMatrix<f64>, z: &DMatrix<f64>) -> Result<Self> {
        if x.nrows() != z.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "x has {} rows, z has {}",
                x.nrows(),
                z.nrows()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("x".into()));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("z".into()));
        }
        let n = x.nrows();
        let (p, q) = (x.ncols(), z.ncols());
        let mut data = DMatrix::zeros(n, 1 + p + q);
        data.column_mut(0).fill(1.0);
        data.columns_mut(1, p).copy_from(x);
        data.columns_mut(1 + p, q).copy_from(z);
        Ok(Self { data, p, q })
    }

    /// Wraps an arbitrary matrix. The caller is responsible for any intercept
    /// column; `p` and `q` are only used for labelling.
    pub fn from_matrix(data: DMatrix<f64>, p: usize, q: usize) -> Result<Self> {
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("design".into()));
        }
        Ok(Self { data, p, q })
    }

    pub fn nrows(&self) -> usize {
        self.data.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.data.ncols()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn labels(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.ncols());
        let extra = self.ncols().saturating_sub(1 + self.p + self.q);
        for j in 0..extra {
            out.push(format!("aux{}", j + 1));
        }
        out.push("intercept".to_string());
        out.extend((1..=self.p).map(|j| format!("x{j}")));
        out.extend((1..=self.q).map(|j| format!("z{j}")));
        out.truncate(self.ncols());
        out
    }

    /// Rows selected by index, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            data: self.data.select_rows(rows),
            p: self.p,
            q: self.q,
        }
    }

    /// Prepends a column, e.g. the surrogate in a joint regression.
    pub fn with_leading_column(&self, col: &[f64]) -> Result<Self> {
        if col.len() != self.nrows() {
            return Err(Error::DimensionMismatch("leading column length".into()));
        }
        if col.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("leading column".into()));
        }
        let n = self.nrows();
        let d = self.ncols();
        let mut data = DMatrix::zeros(n, d + 1);
        data.column_mut(0).copy_from_slice(col);
        data.columns_mut(1, d).copy_from(&self.data);
        Ok(Self {
            data,
            p: self.p,
            q: self.q,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CovarianceKind {
    /// Robust `A⁻¹ B A⁻¹`.
    #[default]
    Sandwich,
    /// Model-based `σ̂² (GᵀWG)⁻¹` (linear) or `A⁻¹` (logistic).
    ModelBased,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub covariance: CovarianceKind,
    pub max_iter: usize,
    pub separation_cap: f64,
    pub rcond_min: f64,
    pub score_tol: f64,
    pub beta_rel_tol: f64,
    pub max_halvings: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            covariance: CovarianceKind::Sandwich,
            max_iter: 100,
            separation_cap: 30.0,
            rcond_min: 1e-12,
            score_tol: 1e-8,
            beta_rel_tol: 1e-10,
            max_halvings: 20,
        }
    }
}

/// Coefficients with their covariance and Wald summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub beta: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub se: DVector<f64>,
    /// Wald statistics against zero.
    pub stat: DVector<f64>,
    pub p_values: DVector<f64>,
    /// Per-coefficient reference df; `None` means standard normal.
    pub df: Option<DVector<f64>>,
    pub n_effective: usize,
    pub converged: bool,
    pub iterations: usize,
    pub method_tag: String,
    pub warnings: Vec<String>,
}

impl FitResult {
    /// Assembles a result from a point estimate and covariance. The
    /// covariance is symmetrised and the Wald summaries derived from it.
    pub fn from_estimate(
        beta: DVector<f64>,
        cov: DMatrix<f64>,
        df: Option<DVector<f64>>,
        n_effective: usize,
        method_tag: &str,
    ) -> Self {
        let cov = (&cov + cov.transpose()) * 0.5;
        let d = beta.len();
        let se = DVector::from_fn(d, |j, _| cov[(j, j)].max(0.0).sqrt());
        let stat = DVector::from_fn(d, |j, _| beta[j] / se[j]);
        let p_values = DVector::from_fn(d, |j, _| two_sided_p(stat[j], df.as_ref().map(|v| v[j])));
        Self {
            beta,
            cov,
            se,
            stat,
            p_values,
            df,
            n_effective,
            converged: true,
            iterations: 0,
            method_tag: method_tag.to_string(),
            warnings: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.beta.len()
    }

    pub(crate) fn tagged(mut self, tag: &str) -> Self {
        self.method_tag = tag.to_string();
        self
    }
}

/// Inverse of the triangular factor of `diag(√w) G`.
pub(crate) struct Factor {
    pub r_inv: DMatrix<f64>,
}

impl Factor {
    /// `(Gᵀ W G)⁻¹ = R⁻¹ R⁻ᵀ`.
    pub fn bread_inverse(&self) -> DMatrix<f64> {
        &self.r_inv * self.r_inv.transpose()
    }
}

pub(crate) fn reciprocal_condition(m: &DMatrix<f64>) -> f64 {
    let sv = m.singular_values();
    let max = sv.max();
    let min = sv.min();
    if !(max > 0.0) || !min.is_finite() {
        0.0
    } else {
        min / max
    }
}

/// Householder QR of the row-scaled design. `scale[i]` multiplies row `i`.
fn factor_scaled(g: &DMatrix<f64>, scale: &[f64]) -> nalgebra::QR<f64, nalgebra::Dyn, nalgebra::Dyn> {
    let mut a = g.clone();
    for (i, s) in scale.iter().enumerate() {
        a.row_mut(i).scale_mut(*s);
    }
    a.qr()
}

/// Weighted least squares of `y` on `g` with weights `w` (all finite, ≥ 0).
/// Returns the coefficients and the triangular factor.
pub(crate) fn weighted_ls(g: &DMatrix<f64>, y: &[f64], w: &[f64], rcond_min: f64) -> Result<(DVector<f64>, Factor)> {
    let d = g.ncols();
    let sw: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
    let qr = factor_scaled(g, &sw);
    let r = qr.r();
    if r.nrows() < d {
        return Err(Error::SingularDesign { rcond: 0.0 });
    }
    let rcond = reciprocal_condition(&r);
    if !(rcond >= rcond_min) {
        return Err(Error::SingularDesign { rcond });
    }
    let mut qty = DVector::from_iterator(y.len(), y.iter().zip(&sw).map(|(a, b)| a * b));
    qr.q_tr_mul(&mut qty);
    let beta = r
        .solve_upper_triangular(&qty.rows(0, d).into_owned())
        .ok_or(Error::SingularDesign { rcond })?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(d, d))
        .ok_or(Error::SingularDesign { rcond })?;
    Ok((beta, Factor { r_inv }))
}

/// `(Gᵀ diag(v) G)⁻¹` for non-negative `v`, through the QR of
/// `diag(√v) G`.
pub(crate) fn inverse_gram(g: &DMatrix<f64>, v: &[f64], rcond_min: f64) -> Result<DMatrix<f64>> {
    let d = g.ncols();
    let sv: Vec<f64> = v.iter().map(|x| x.max(0.0).sqrt()).collect();
    let qr = factor_scaled(g, &sv);
    let r = qr.r();
    if r.nrows() < d {
        return Err(Error::SingularDesign { rcond: 0.0 });
    }
    let rcond = reciprocal_condition(&r);
    if !(rcond >= rcond_min) {
        return Err(Error::SingularDesign { rcond });
    }
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(d, d))
        .ok_or(Error::SingularDesign { rcond })?;
    Ok(&r_inv * r_inv.transpose())
}

/// `Σ c_i² G_iᵀ G_i` for per-row multipliers `c`.
pub(crate) fn outer_sum(g: &DMatrix<f64>, c: &[f64]) -> DMatrix<f64> {
    let mut m = g.clone();
    for (i, v) in c.iter().enumerate() {
        m.row_mut(i).scale_mut(*v);
    }
    m.transpose() * m
}

fn validate_common(g: &DesignMatrix, y: &[f64], w: &[f64]) -> Result<usize> {
    let n = g.nrows();
    if y.len() != n || w.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "design has {n} rows, y has {}, w has {}",
            y.len(),
            w.len()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("y".into()));
    }
    if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidInput("weights must be finite and non-negative".into()));
    }
    let positive = w.iter().filter(|v| **v > 0.0).count();
    if positive < g.ncols() {
        return Err(Error::SingularDesign { rcond: 0.0 });
    }
    Ok(positive)
}

/// Solves `Σ w_i G_iᵀ (y_i − G_i β) = 0`.
pub fn fit_wls(g: &DesignMatrix, y: &[f64], w: &[f64]) -> Result<FitResult> {
    fit_wls_with(g, y, w, &FitOptions::default())
}

pub fn fit_wls_with(g: &DesignMatrix, y: &[f64], w: &[f64], opts: &FitOptions) -> Result<FitResult> {
    let n_eff = validate_common(g, y, w)?;
    let gm = g.matrix();
    let (beta, factor) = weighted_ls(gm, y, w, opts.rcond_min)?;
    let resid = DVector::from_column_slice(y) - gm * &beta;
    let bread = factor.bread_inverse();
    let cov = match opts.covariance {
        CovarianceKind::Sandwich => {
            let c: Vec<f64> = resid.iter().zip(w).map(|(e, wi)| wi * e).collect();
            let meat = outer_sum(gm, &c);
            &bread * meat * &bread
        }
        CovarianceKind::ModelBased => {
            let d = g.ncols();
            let rss: f64 = resid.iter().zip(w).map(|(e, wi)| wi * e * e).sum();
            let dof = (n_eff as f64 - d as f64).max(1.0);
            bread * (rss / dof)
        }
    };
    Ok(FitResult::from_estimate(beta, cov, None, n_eff, "wls"))
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn weighted_deviance(eta: &DVector<f64>, y: &[f64], w: &[f64]) -> f64 {
    let mut dev = 0.0;
    for i in 0..y.len() {
        if w[i] == 0.0 {
            continue;
        }
        // −log p(y | η) = softplus(η) − y η
        dev += w[i] * (softplus(eta[i]) - y[i] * eta[i]);
    }
    2.0 * dev
}

fn logistic_score(gm: &DMatrix<f64>, eta: &DVector<f64>, y: &[f64], w: &[f64]) -> DVector<f64> {
    let r = DVector::from_fn(y.len(), |i, _| w[i] * (y[i] - expit(eta[i])));
    gm.tr_mul(&r)
}

/// Solves `Σ w_i G_iᵀ (y_i − expit(G_i β)) = 0` by IRLS from `β = 0` with
/// step halving on the weighted deviance.
pub fn fit_logistic(g: &DesignMatrix, y: &[f64], w: &[f64]) -> Result<FitResult> {
    fit_logistic_with(g, y, w, &FitOptions::default())
}

pub fn fit_logistic_with(g: &DesignMatrix, y: &[f64], w: &[f64], opts: &FitOptions) -> Result<FitResult> {
    let n_eff = validate_common(g, y, w)?;
    if y.iter().any(|v| *v != 0.0 && *v != 1.0) {
        return Err(Error::InvalidInput("logistic outcome must be 0/1".into()));
    }
    let (mut ones, mut zeros) = (0usize, 0usize);
    for (yi, wi) in y.iter().zip(w) {
        if *wi > 0.0 {
            if *yi == 1.0 {
                ones += 1;
            } else {
                zeros += 1;
            }
        }
    }
    if ones == 0 || zeros == 0 {
        return Err(Error::PerfectSeparation {
            max_abs_beta: f64::INFINITY,
        });
    }

    let gm = g.matrix();
    let d = g.ncols();
    let mut beta = DVector::zeros(d);
    let mut eta = gm * &beta;
    let mut dev = weighted_deviance(&eta, y, w);
    let mut converged = false;
    let mut iterations = 0;

    for iter in 1..=opts.max_iter {
        iterations = iter;
        let score = logistic_score(gm, &eta, y, w);
        if score.amax() <= opts.score_tol {
            converged = true;
            break;
        }
        let mu: Vec<f64> = eta.iter().map(|e| expit(*e)).collect();
        let v: Vec<f64> = mu.iter().zip(w).map(|(m, wi)| wi * m * (1.0 - m)).collect();
        let sv: Vec<f64> = v.iter().map(|x| x.sqrt()).collect();
        let qr = factor_scaled(gm, &sv);
        let r = qr.r();
        let rcond = reciprocal_condition(&r);
        if !(rcond >= opts.rcond_min) {
            if beta.amax() > 0.5 * opts.separation_cap {
                return Err(Error::PerfectSeparation {
                    max_abs_beta: beta.amax(),
                });
            }
            return Err(Error::SingularDesign { rcond });
        }
        // Newton step: (GᵀVG) δ = score
        let rt_inv_score = r
            .transpose()
            .solve_lower_triangular(&score)
            .ok_or(Error::SingularDesign { rcond })?;
        let step = r
            .solve_upper_triangular(&rt_inv_score)
            .ok_or(Error::SingularDesign { rcond })?;

        let mut scale = 1.0;
        let mut candidate = &beta + &step;
        let mut cand_eta = gm * &candidate;
        let mut cand_dev = weighted_deviance(&cand_eta, y, w);
        let mut halvings = 0;
        while !(cand_dev <= dev) && halvings < opts.max_halvings {
            scale *= 0.5;
            candidate = &beta + &step * scale;
            cand_eta = gm * &candidate;
            cand_dev = weighted_deviance(&cand_eta, y, w);
            halvings += 1;
        }
        let change = (&candidate - &beta).amax();
        beta = candidate;
        eta = cand_eta;
        dev = cand_dev;

        if beta.amax() > opts.separation_cap {
            return Err(Error::PerfectSeparation {
                max_abs_beta: beta.amax(),
            });
        }
        if change <= opts.beta_rel_tol * (1.0 + beta.amax()) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NotConverged { iterations });
    }

    let mu: Vec<f64> = eta.iter().map(|e| expit(*e)).collect();
    let sv: Vec<f64> = mu.iter().zip(w).map(|(m, wi)| (wi * m * (1.0 - m)).sqrt()).collect();
    let qr = factor_scaled(gm, &sv);
    let r = qr.r();
    let rcond = reciprocal_condition(&r);
    if !(rcond >= opts.rcond_min) {
        return Err(Error::SingularDesign { rcond });
    }
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(d, d))
        .ok_or(Error::SingularDesign { rcond })?;
    let bread = &r_inv * r_inv.transpose();
    let cov = match opts.covariance {
        CovarianceKind::Sandwich => {
            let c: Vec<f64> = (0..y.len()).map(|i| w[i] * (y[i] - mu[i])).collect();
            let meat = outer_sum(gm, &c);
            &bread * meat * &bread
        }
        CovarianceKind::ModelBased => bread,
    };
    let mut fit = FitResult::from_estimate(beta, cov, None, n_eff, "logistic");
    fit.iterations = iterations;
    fit.converged = true;
    Ok(fit)
}

/// Wald test of `β_j = null_value`. Uses the fit's df for coefficient `j`
/// when present, otherwise the standard normal.
pub fn wald_test(fit: &FitResult, j: usize, null_value: f64) -> Result<(f64, f64)> {
    if j >= fit.dim() {
        return Err(Error::InvalidInput(format!(
            "coefficient index {j} out of range for dimension {}",
            fit.dim()
        )));
    }
    let se = fit.se[j];
    if !(se > 0.0) {
        return Err(Error::DegenerateVariance { index: j });
    }
    let stat = (fit.beta[j] - null_value) / se;
    let df = fit.df.as_ref().map(|v| v[j]);
    Ok((stat, two_sided_p(stat, df)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design_from_rows(rows: &[&[f64]]) -> DesignMatrix {
        let n = rows.len();
        let d = rows[0].len();
        DesignMatrix::from_matrix(DMatrix::from_fn(n, d, |i, j| rows[i][j]), 0, 0).unwrap()
    }

    #[test]
    fn build_design_prepends_intercept() {
        let x = DMatrix::zeros(3, 1);
        let z = DMatrix::zeros(3, 1);
        let g = DesignMatrix::build(&x, &z).unwrap();
        assert_eq!(g.ncols(), 3);
        assert!(g.matrix().column(0).iter().all(|v| *v == 1.0));
        assert_eq!(g.labels(), vec!["intercept", "x1", "z1"]);
    }

    #[test]
    fn build_design_with_empty_x_block() {
        let x = DMatrix::zeros(4, 0);
        let z = DMatrix::from_element(4, 1, 2.0);
        let g = DesignMatrix::build(&x, &z).unwrap();
        assert_eq!(g.ncols(), 2);
        assert_eq!(g.labels(), vec!["intercept", "z1"]);
    }

    #[test]
    fn build_design_rejects_nan_and_mismatch() {
        let mut x = DMatrix::zeros(3, 1);
        x[(1, 0)] = f64::NAN;
        let z = DMatrix::zeros(3, 1);
        assert!(matches!(DesignMatrix::build(&x, &z), Err(Error::NonFinite(_))));
        let z2 = DMatrix::zeros(2, 1);
        assert!(matches!(
            DesignMatrix::build(&DMatrix::zeros(3, 1), &z2),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn constant_fit() {
        let g = design_from_rows(&[&[1.0], &[1.0], &[1.0]]);
        let fit = fit_wls(&g, &[2.0, 2.0, 2.0], &[1.0; 3]).unwrap();
        assert!((fit.beta[0] - 2.0).abs() < 1e-14);
        assert!(fit.cov[(0, 0)].abs() < 1e-28);
    }

    #[test]
    fn noiseless_line() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.5];
        let rows: Vec<Vec<f64>> = xs.iter().map(|x| vec![1.0, *x]).collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let g = design_from_rows(&refs);
        let y: Vec<f64> = xs.iter().map(|x| 3.0 * x).collect();
        let fit = fit_wls(&g, &y, &[1.0; 5]).unwrap();
        assert!(fit.beta[0].abs() < 1e-12);
        assert!((fit.beta[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn collinear_design_is_singular() {
        let g = design_from_rows(&[&[1.0, 2.0], &[1.0, 2.0], &[1.0, 2.0]]);
        let err = fit_wls(&g, &[1.0, 2.0, 3.0], &[1.0; 3]).unwrap_err();
        assert!(matches!(err, Error::SingularDesign { .. }));
    }

    #[test]
    fn too_few_positive_weights() {
        let g = design_from_rows(&[&[1.0, 0.0], &[1.0, 1.0], &[1.0, 2.0]]);
        let err = fit_wls(&g, &[1.0, 2.0, 3.0], &[1.0, 0.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::SingularDesign { .. }));
    }

    #[test]
    fn intercept_only_logistic_half() {
        let g = DesignMatrix::from_matrix(DMatrix::from_element(10, 1, 1.0), 0, 0).unwrap();
        let y: Vec<f64> = (0..10).map(|i| if i < 5 { 1.0 } else { 0.0 }).collect();
        let fit = fit_logistic(&g, &y, &[1.0; 10]).unwrap();
        assert!(fit.beta[0].abs() < 1e-12);
    }

    #[test]
    fn intercept_only_logistic_fifth() {
        let g = DesignMatrix::from_matrix(DMatrix::from_element(10, 1, 1.0), 0, 0).unwrap();
        let y: Vec<f64> = (0..10).map(|i| if i < 2 { 1.0 } else { 0.0 }).collect();
        let fit = fit_logistic(&g, &y, &[1.0; 10]).unwrap();
        // logit(0.2) = ln(0.25)
        assert!((fit.beta[0] - (-1.386294)).abs() < 1e-6);
    }

    #[test]
    fn all_ones_is_separation() {
        let g = DesignMatrix::from_matrix(DMatrix::from_element(6, 1, 1.0), 0, 0).unwrap();
        let err = fit_logistic(&g, &[1.0; 6], &[1.0; 6]).unwrap_err();
        assert!(matches!(err, Error::PerfectSeparation { .. }));
    }

    #[test]
    fn separable_covariate_is_separation() {
        let rows: Vec<Vec<f64>> = (0..8).map(|i| vec![1.0, i as f64]).collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let g = design_from_rows(&refs);
        let y: Vec<f64> = (0..8).map(|i| if i >= 4 { 1.0 } else { 0.0 }).collect();
        let err = fit_logistic(&g, &y, &[1.0; 8]).unwrap_err();
        assert!(matches!(err, Error::PerfectSeparation { .. }), "{err:?}");
    }

    #[test]
    fn logistic_rejects_non_binary() {
        let g = DesignMatrix::from_matrix(DMatrix::from_element(3, 1, 1.0), 0, 0).unwrap();
        assert!(matches!(
            fit_logistic(&g, &[0.0, 0.5, 1.0], &[1.0; 3]),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn wald_at_null_has_unit_p() {
        let fit = FitResult::from_estimate(
            DVector::from_vec(vec![0.3]),
            DMatrix::from_element(1, 1, 0.04),
            None,
            10,
            "t",
        );
        let (stat, p) = wald_test(&fit, 0, 0.3).unwrap();
        assert_eq!(stat, 0.0);
        assert_eq!(p, 1.0);
    }

    #[test]
    fn wald_zero_se_is_degenerate() {
        let fit = FitResult::from_estimate(DVector::from_vec(vec![0.3]), DMatrix::zeros(1, 1), None, 10, "t");
        assert!(matches!(
            wald_test(&fit, 0, 0.0),
            Err(Error::DegenerateVariance { index: 0 })
        ));
        assert!(wald_test(&fit, 3, 0.0).is_err());
    }

    #[test]
    fn model_based_linear_covariance() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![1.0, i as f64]).collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let g = design_from_rows(&refs);
        let y = [0.1, 1.2, 1.9, 3.2, 3.9, 5.1];
        let opts = FitOptions {
            covariance: CovarianceKind::ModelBased,
            ..FitOptions::default()
        };
        let fit = fit_wls_with(&g, &y, &[1.0; 6], &opts).unwrap();
        // classical OLS: var(slope) = s² / Sxx
        let resid: Vec<f64> = (0..6).map(|i| y[i] - fit.beta[0] - fit.beta[1] * i as f64).collect();
        let s2: f64 = resid.iter().map(|e| e * e).sum::<f64>() / 4.0;
        let sxx: f64 = (0..6).map(|i| (i as f64 - 2.5).powi(2)).sum();
        assert!((fit.cov[(1, 1)] - s2 / sxx).abs() < 1e-12);
    }
}
