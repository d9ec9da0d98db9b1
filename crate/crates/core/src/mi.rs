//! Multiple imputation of missing outcomes (predictive mean matching or a
//! small regression forest) and Rubin's-rules pooling.
//!
//! Imputation models use `(X, Z)` only; the surrogate column is never read.

use nalgebra::{DMatrix, DVector};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::Family;
use crate::frame::AnalysisFrame;
use crate::regression::{fit_logistic, fit_wls, FitResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Imputer {
    Pmm,
    Rf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Features tried per split; `None` means `max(1, F / 3)`.
    pub mtry: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            trees: 10,
            max_depth: 10,
            min_leaf: 5,
            mtry: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MiParams {
    /// Number of imputations `K`.
    pub k: usize,
    pub donor_k: usize,
    pub forest: ForestParams,
}

impl Default for MiParams {
    fn default() -> Self {
        Self {
            k: 5,
            donor_k: 5,
            forest: ForestParams::default(),
        }
    }
}

impl MiParams {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::Config("mi.k must be at least 2".into()));
        }
        if self.donor_k < 1 {
            return Err(Error::Config("mi.donor_k must be at least 1".into()));
        }
        let f = &self.forest;
        if f.trees < 1 || f.min_leaf < 1 || f.mtry == Some(0) {
            return Err(Error::Config(
                "forest needs trees, min_leaf and mtry of at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// `K` completed outcome vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ImputationSet {
    pub imputer: Imputer,
    pub completed: Vec<Vec<f64>>,
}

impl ImputationSet {
    pub fn k(&self) -> usize {
        self.completed.len()
    }
}

fn observed_parts(frame: &AnalysisFrame) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
    let obs = frame.observed_indices();
    let mis = frame.missing_indices();
    let y_obs = obs.iter().map(|&i| frame.y[i].expect("observed")).collect();
    (obs, mis, y_obs)
}

fn completed_template(frame: &AnalysisFrame) -> Vec<f64> {
    frame.y.iter().map(|v| v.unwrap_or(f64::NAN)).collect()
}

/// Indices (into `sorted`) of the `k` values nearest to `target`, ties
/// resolved towards lower positions.
fn nearest_k(sorted: &[f64], target: f64, k: usize) -> Vec<usize> {
    let n = sorted.len();
    let k = k.min(n);
    let split = sorted.partition_point(|v| *v < target);
    let (mut lo, mut hi) = (split, split);
    let mut out = Vec::with_capacity(k);
    while out.len() < k {
        let take_left = match (lo > 0, hi < n) {
            (true, true) => target - sorted[lo - 1] <= sorted[hi] - target,
            (true, false) => true,
            (false, true) => false,
            (false, false) => break,
        };
        if take_left {
            lo -= 1;
            out.push(lo);
        } else {
            out.push(hi);
            hi += 1;
        }
    }
    out
}

/// Predictive mean matching with Bayesian-bootstrap parameter draws.
pub fn pmm_impute<R: Rng + ?Sized>(
    frame: &AnalysisFrame,
    k: usize,
    donor_k: usize,
    rng: &mut R,
) -> Result<ImputationSet> {
    if k < 2 {
        return Err(Error::InvalidInput("K must be at least 2".into()));
    }
    if donor_k < 1 {
        return Err(Error::InvalidInput("donor_k must be at least 1".into()));
    }
    let g = frame.design()?;
    let (obs, mis, y_obs) = observed_parts(frame);
    let required = donor_k + g.ncols();
    if obs.len() < required {
        return Err(Error::TooFewDonors {
            available: obs.len(),
            required,
        });
    }
    let g_obs = g.select_rows(&obs);
    let base = frame.base_weights();
    let template = completed_template(frame);
    let mut completed = Vec::with_capacity(k);
    for _ in 0..k {
        let mut out = template.clone();
        if !mis.is_empty() {
            let w: Vec<f64> = obs
                .iter()
                .map(|&i| {
                    let e: f64 = Exp1.sample(rng);
                    e * base[i]
                })
                .collect();
            let beta = fit_wls(&g_obs, &y_obs, &w)?.beta;
            let pred = g.matrix() * &beta;
            let mut order: Vec<usize> = (0..obs.len()).collect();
            order.sort_by(|&a, &b| pred[obs[a]].total_cmp(&pred[obs[b]]).then(a.cmp(&b)));
            let sorted: Vec<f64> = order.iter().map(|&j| pred[obs[j]]).collect();
            for &i in &mis {
                let near = nearest_k(&sorted, pred[i], donor_k);
                let pick = near[rng.random_range(0..near.len())];
                out[i] = y_obs[order[pick]];
            }
        }
        completed.push(out);
    }
    Ok(ImputationSet {
        imputer: Imputer::Pmm,
        completed,
    })
}

#[derive(Debug, Clone)]
enum Node {
    Leaf(Vec<f64>),
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    fn leaf_for(&self, row: &[f64]) -> &[f64] {
        match self {
            Node::Leaf(v) => v,
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if row[*feature] <= *threshold {
                    left.leaf_for(row)
                } else {
                    right.leaf_for(row)
                }
            }
        }
    }
}

struct TreeBuilder<'a> {
    features: &'a DMatrix<f64>,
    y: &'a [f64],
    params: ForestParams,
    mtry: usize,
}

impl TreeBuilder<'_> {
    fn grow<R: Rng + ?Sized>(&self, idx: Vec<usize>, depth: usize, rng: &mut R) -> Node {
        let min_leaf = self.params.min_leaf;
        let first = self.y[idx[0]];
        let constant = idx.iter().all(|&i| self.y[i] == first);
        if depth >= self.params.max_depth || idx.len() < 2 * min_leaf || constant {
            return Node::Leaf(idx.iter().map(|&i| self.y[i]).collect());
        }
        let n_feat = self.features.ncols();
        let mut feats: Vec<usize> = (0..n_feat).collect();
        let (chosen, _) = feats.partial_shuffle(rng, self.mtry);
        let chosen = chosen.to_vec();

        let total: f64 = idx.iter().map(|&i| self.y[i]).sum();
        let total_sq: f64 = idx.iter().map(|&i| self.y[i] * self.y[i]).sum();
        let n = idx.len() as f64;
        let parent_sse = total_sq - total * total / n;
        let mut best: Option<(f64, usize, f64)> = None;
        for &f in &chosen {
            let mut order = idx.clone();
            order.sort_by(|&a, &b| self.features[(a, f)].total_cmp(&self.features[(b, f)]).then(a.cmp(&b)));
            let (mut s, mut sq) = (0.0, 0.0);
            for (pos, &i) in order.iter().enumerate().take(order.len() - 1) {
                s += self.y[i];
                sq += self.y[i] * self.y[i];
                let nl = (pos + 1) as f64;
                if pos + 1 < min_leaf || order.len() - pos - 1 < min_leaf {
                    continue;
                }
                let xv = self.features[(i, f)];
                let xn = self.features[(order[pos + 1], f)];
                if xv == xn {
                    continue;
                }
                let nr = n - nl;
                let sse = (sq - s * s / nl) + ((total_sq - sq) - (total - s).powi(2) / nr);
                let gain = parent_sse - sse;
                if best.is_none_or(|(g, _, _)| gain > g) {
                    best = Some((gain, f, 0.5 * (xv + xn)));
                }
            }
        }
        match best {
            Some((gain, feature, threshold)) if gain > 0.0 => {
                let (l, r): (Vec<usize>, Vec<usize>) =
                    idx.iter().partition(|&&i| self.features[(i, feature)] <= threshold);
                Node::Split {
                    feature,
                    threshold,
                    left: Box::new(self.grow(l, depth + 1, rng)),
                    right: Box::new(self.grow(r, depth + 1, rng)),
                }
            }
            _ => Node::Leaf(idx.iter().map(|&i| self.y[i]).collect()),
        }
    }
}

fn covariate_features(frame: &AnalysisFrame) -> DMatrix<f64> {
    let n = frame.n();
    let (p, q) = (frame.x.ncols(), frame.z.ncols());
    let mut f = DMatrix::zeros(n, p + q);
    f.columns_mut(0, p).copy_from(&frame.x);
    f.columns_mut(p, q).copy_from(&frame.z);
    f
}

/// Forest imputation: each missing outcome is a donor drawn from the leaf
/// of a randomly chosen bootstrap tree.
pub fn rf_impute<R: Rng + ?Sized>(
    frame: &AnalysisFrame,
    k: usize,
    params: &ForestParams,
    rng: &mut R,
) -> Result<ImputationSet> {
    if k < 2 {
        return Err(Error::InvalidInput("K must be at least 2".into()));
    }
    let (obs, mis, _) = observed_parts(frame);
    let required = 2 * params.min_leaf.max(1);
    if obs.len() < required {
        return Err(Error::TooFewDonors {
            available: obs.len(),
            required,
        });
    }
    let features = covariate_features(frame);
    if features.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("covariates".into()));
    }
    let y_all = completed_template(frame);
    let n_feat = features.ncols();
    let mtry = params.mtry.unwrap_or((n_feat / 3).max(1)).min(n_feat.max(1));
    let builder = TreeBuilder {
        features: &features,
        y: &y_all,
        params: *params,
        mtry,
    };
    let mut completed = Vec::with_capacity(k);
    for _ in 0..k {
        let mut out = y_all.clone();
        if !mis.is_empty() {
            let trees: Vec<Node> = (0..params.trees)
                .map(|_| {
                    let boot: Vec<usize> = (0..obs.len()).map(|_| obs[rng.random_range(0..obs.len())]).collect();
                    if n_feat == 0 {
                        Node::Leaf(boot.iter().map(|&i| y_all[i]).collect())
                    } else {
                        builder.grow(boot, 0, rng)
                    }
                })
                .collect();
            for &i in &mis {
                let row: Vec<f64> = features.row(i).iter().copied().collect();
                let tree = &trees[rng.random_range(0..trees.len())];
                let leaf = tree.leaf_for(&row);
                out[i] = *leaf.choose(rng).expect("leaves are non-empty");
            }
        }
        completed.push(out);
    }
    Ok(ImputationSet {
        imputer: Imputer::Rf,
        completed,
    })
}

/// Per-coefficient Rubin pooling.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledResult {
    pub beta: Vec<f64>,
    /// Mean within-imputation variance `Ū`.
    pub ubar: Vec<f64>,
    /// Between-imputation variance `B` (divisor `K − 1`).
    pub b: Vec<f64>,
    /// `Ū + (1 + 1/K) B`.
    pub total: Vec<f64>,
    /// `(K − 1)(1 + Ū / ((1 + 1/K) B))²`; infinite when `B = 0`.
    pub df: Vec<f64>,
}

pub fn rubin_pool(estimates: &[Vec<f64>], variances: &[Vec<f64>]) -> Result<PooledResult> {
    let k = estimates.len();
    if k < 2 {
        return Err(Error::InvalidInput("Rubin pooling needs K >= 2".into()));
    }
    if variances.len() != k {
        return Err(Error::DimensionMismatch("estimates and variances differ in K".into()));
    }
    let d = estimates[0].len();
    if estimates.iter().chain(variances).any(|v| v.len() != d) {
        return Err(Error::DimensionMismatch("ragged pooling input".into()));
    }
    if estimates.iter().chain(variances).flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("pooling input".into()));
    }
    let kf = k as f64;
    let mut out = PooledResult {
        beta: vec![0.0; d],
        ubar: vec![0.0; d],
        b: vec![0.0; d],
        total: vec![0.0; d],
        df: vec![0.0; d],
    };
    for j in 0..d {
        let mean = estimates.iter().map(|e| e[j]).sum::<f64>() / kf;
        let ubar = variances.iter().map(|v| v[j]).sum::<f64>() / kf;
        let b = estimates.iter().map(|e| (e[j] - mean).powi(2)).sum::<f64>() / (kf - 1.0);
        let inflated = (1.0 + 1.0 / kf) * b;
        out.beta[j] = mean;
        out.ubar[j] = ubar;
        out.b[j] = b;
        out.total[j] = ubar + inflated;
        out.df[j] = if b > 0.0 {
            (kf - 1.0) * (1.0 + ubar / inflated).powi(2)
        } else {
            f64::INFINITY
        };
    }
    Ok(out)
}

/// Fits the analysis model on every completed copy and pools. The pooled
/// covariance is `Ū + (1 + 1/K) B` in matrix form, whose diagonal equals
/// the per-coefficient rule; df are per coefficient.
pub fn fit_imputed(frame: &AnalysisFrame, set: &ImputationSet, tag: &str) -> Result<FitResult> {
    let g = frame.design()?;
    let w = frame.base_weights();
    let fits = set
        .completed
        .iter()
        .map(|y| match Family::of(frame) {
            Family::Linear => fit_wls(&g, y, &w),
            Family::Logistic => fit_logistic(&g, y, &w),
        })
        .collect::<Result<Vec<_>>>()?;
    let k = fits.len();
    let kf = k as f64;
    let estimates: Vec<Vec<f64>> = fits.iter().map(|f| f.beta.iter().copied().collect()).collect();
    let variances: Vec<Vec<f64>> = fits
        .iter()
        .map(|f| f.cov.diagonal().iter().copied().collect())
        .collect();
    let pooled = rubin_pool(&estimates, &variances)?;

    let d = g.ncols();
    let beta = DVector::from_vec(pooled.beta.clone());
    let ubar = fits.iter().fold(DMatrix::zeros(d, d), |acc, f| acc + &f.cov) / kf;
    let mut between = DMatrix::zeros(d, d);
    for f in &fits {
        let dev = &f.beta - &beta;
        between += &dev * dev.transpose();
    }
    between /= kf - 1.0;
    let cov = ubar + between * (1.0 + 1.0 / kf);
    let mut fit = FitResult::from_estimate(beta, cov, Some(DVector::from_vec(pooled.df)), frame.n(), tag);
    fit.iterations = k;
    Ok(fit)
}

/// Imputes with the chosen method and returns the pooled fit.
pub fn estimate_mi<R: Rng + ?Sized>(
    frame: &AnalysisFrame,
    imputer: Imputer,
    params: &MiParams,
    rng: &mut R,
) -> Result<FitResult> {
    params.validate()?;
    let (set, tag) = match imputer {
        Imputer::Pmm => (pmm_impute(frame, params.k, params.donor_k, rng)?, "mi_pmm"),
        Imputer::Rf => (rf_impute(frame, params.k, &params.forest, rng)?, "mi_rf"),
    };
    fit_imputed(frame, &set, tag)
}
