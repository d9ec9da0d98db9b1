//! Per-variant association scans comparing complete-case and
//! prediction-based estimators on a shared phenotype frame.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dgp::{make_surrogate, DgpParams, ObservationModelSpec, Setting, SurrogateSpec};
use crate::dist::normal_quantile;
use crate::error::{Error, Result};
use crate::estimators::{
    estimate_cca, estimate_psppi_with, estimate_synsurr, estimate_wcca_with, Method, PbTuning, PropensityDesign,
    PropensityModel, DEFAULT_PI_MIN,
};
use crate::frame::{AnalysisFrame, OutcomeKind};
use crate::regression::{wald_test, FitResult};

/// Genome-wide significance level.
pub const GENOME_WIDE: f64 = 5e-8;

/// Methods a scan can run, in output column order.
pub const SCAN_METHODS: [Method; 4] = [Method::Cca, Method::Wcca, Method::PsPpi, Method::SynSurr];

/// Rank-based inverse normal transform with the Blom offset,
/// `Φ⁻¹((r − 3/8) / (n + 1/4))`, over the observed entries. Ties share
/// their average rank; missing entries stay missing.
pub fn inverse_normal_transform(values: &[Option<f64>]) -> Result<Vec<Option<f64>>> {
    let obs: Vec<(usize, f64)> = values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|x| (i, x)))
        .collect();
    let n = obs.len();
    if n < 2 {
        return Err(Error::InvalidInput(
            "inverse normal transform needs at least 2 values".into(),
        ));
    }
    if obs.iter().any(|(_, x)| !x.is_finite()) {
        return Err(Error::NonFinite("phenotype".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| obs[a].1.total_cmp(&obs[b].1));
    if obs[order[0]].1 == obs[order[n - 1]].1 {
        return Err(Error::DegenerateRanks);
    }
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start;
        while end + 1 < n && obs[order[end + 1]].1 == obs[order[start]].1 {
            end += 1;
        }
        // 1-based positions start+1 ..= end+1
        let avg = (start + end) as f64 / 2.0 + 1.0;
        for &k in &order[start..=end] {
            ranks[k] = avg;
        }
        start = end + 1;
    }
    let mut out = vec![None; values.len()];
    let nf = n as f64;
    for (k, (i, _)) in obs.iter().enumerate() {
        out[*i] = Some(normal_quantile((ranks[k] - 0.375) / (nf + 0.25)));
    }
    Ok(out)
}

/// Dosages in `[0, 2]`, one column per variant.
#[derive(Debug, Clone, PartialEq)]
pub struct GenotypeMatrix {
    pub ids: Vec<String>,
    pub variant_ids: Vec<String>,
    pub dosages: DMatrix<f64>,
}

impl GenotypeMatrix {
    pub fn new(ids: Vec<String>, variant_ids: Vec<String>, dosages: DMatrix<f64>) -> Result<Self> {
        if dosages.nrows() != ids.len() || dosages.ncols() != variant_ids.len() {
            return Err(Error::DimensionMismatch(format!(
                "dosages {}x{}, {} ids, {} variants",
                dosages.nrows(),
                dosages.ncols(),
                ids.len(),
                variant_ids.len()
            )));
        }
        if dosages.iter().any(|d| !(0.0..=2.0).contains(d)) {
            return Err(Error::InvalidInput("dosages must lie in [0, 2]".into()));
        }
        Ok(Self {
            ids,
            variant_ids,
            dosages,
        })
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn n_variants(&self) -> usize {
        self.variant_ids.len()
    }

    /// `min(f, 1 − f)` with `f = mean dosage / 2`.
    pub fn maf(&self, v: usize) -> f64 {
        let f = self.dosages.column(v).mean() / 2.0;
        f.min(1.0 - f)
    }

    pub fn mafs(&self) -> Vec<f64> {
        (0..self.n_variants()).map(|v| self.maf(v)).collect()
    }
}

/// Keeps variants with MAF at or above `threshold`, in their original order.
pub fn maf_filter(geno: &GenotypeMatrix, threshold: f64) -> Result<GenotypeMatrix> {
    if !(0.0..0.5).contains(&threshold) {
        return Err(Error::InvalidInput("MAF threshold must lie in [0, 0.5)".into()));
    }
    let keep: Vec<usize> = (0..geno.n_variants()).filter(|&v| geno.maf(v) >= threshold).collect();
    Ok(GenotypeMatrix {
        ids: geno.ids.clone(),
        variant_ids: keep.iter().map(|&v| geno.variant_ids[v].clone()).collect(),
        dosages: geno.dosages.select_columns(&keep),
    })
}

/// Phenotype table: outcome (possibly missing), surrogate, confounders.
#[derive(Debug, Clone, PartialEq)]
pub struct Phenotypes {
    pub ids: Vec<String>,
    pub y: Vec<Option<f64>>,
    pub yhat: Vec<f64>,
    pub z: DMatrix<f64>,
    pub z_names: Vec<String>,
}

impl Phenotypes {
    pub fn n(&self) -> usize {
        self.ids.len()
    }

    fn check(&self) -> Result<()> {
        let n = self.n();
        if self.y.len() != n || self.yhat.len() != n || self.z.nrows() != n || self.z.ncols() != self.z_names.len() {
            return Err(Error::DimensionMismatch("phenotype columns differ in length".into()));
        }
        if self
            .yhat
            .iter()
            .chain(self.z.iter())
            .chain(self.y.iter().flatten())
            .any(|v| !v.is_finite())
        {
            return Err(Error::NonFinite("phenotype table".into()));
        }
        Ok(())
    }
}

fn parse_number(field: &str, what: &str, line: usize) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: bad {what} `{field}`")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("line {line}: non-finite {what}")));
    }
    Ok(v)
}

/// Reads `id, y, yhat, <confounders...>`; an empty `y` is missing.
pub fn read_pheno_csv<R: Read>(input: R) -> Result<Phenotypes> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(|s| s.trim().to_string()).collect();
    if header.len() < 3 || header[0] != "id" || header[1] != "y" || header[2] != "yhat" {
        return Err(Error::Parse("phenotype header must start with id,y,yhat".into()));
    }
    let z_names = header[3..].to_vec();
    let q = z_names.len();
    let (mut ids, mut y, mut yhat, mut zs) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (k, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = k + 2;
        if rec.len() != header.len() {
            return Err(Error::Parse(format!("line {line}: expected {} fields", header.len())));
        }
        ids.push(rec[0].trim().to_string());
        y.push(if rec[1].trim().is_empty() {
            None
        } else {
            Some(parse_number(&rec[1], "y", line)?)
        });
        yhat.push(parse_number(&rec[2], "yhat", line)?);
        for j in 0..q {
            zs.push(parse_number(&rec[3 + j], &z_names[j], line)?);
        }
    }
    let n = ids.len();
    let p = Phenotypes {
        ids,
        y,
        yhat,
        z: DMatrix::from_row_slice(n, q, &zs),
        z_names,
    };
    p.check()?;
    Ok(p)
}

pub fn write_pheno_csv<W: Write>(p: &Phenotypes, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["id".to_string(), "y".into(), "yhat".into()];
    header.extend(p.z_names.iter().cloned());
    w.write_record(&header)?;
    for i in 0..p.n() {
        let mut row = vec![
            p.ids[i].clone(),
            p.y[i].map(|v| v.to_string()).unwrap_or_default(),
            p.yhat[i].to_string(),
        ];
        row.extend(p.z.row(i).iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `id, <variant...>` with one dosage per cell.
pub fn read_geno_csv<R: Read>(input: R) -> Result<GenotypeMatrix> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(|s| s.trim().to_string()).collect();
    if header.is_empty() || header[0] != "id" {
        return Err(Error::Parse("genotype header must start with id".into()));
    }
    let variant_ids = header[1..].to_vec();
    let v = variant_ids.len();
    let (mut ids, mut d) = (Vec::new(), Vec::new());
    for (k, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = k + 2;
        if rec.len() != header.len() {
            return Err(Error::Parse(format!("line {line}: expected {} fields", header.len())));
        }
        ids.push(rec[0].trim().to_string());
        for j in 0..v {
            d.push(parse_number(&rec[1 + j], "dosage", line)?);
        }
    }
    let n = ids.len();
    GenotypeMatrix::new(ids, variant_ids, DMatrix::from_row_slice(n, v, &d))
}

pub fn write_geno_csv<W: Write>(g: &GenotypeMatrix, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["id".to_string()];
    header.extend(g.variant_ids.iter().cloned());
    w.write_record(&header)?;
    for i in 0..g.n() {
        let mut row = vec![g.ids[i].clone()];
        row.extend(g.dosages.row(i).iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanOptions {
    pub methods: Vec<Method>,
    pub maf: f64,
    pub significance: f64,
    /// Inverse-normal-transform `y` (observed entries) and `yhat`.
    pub transform: bool,
    /// Refit the propensity model per variant with `(1, X, Z)`.
    pub per_variant_propensity: bool,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            methods: SCAN_METHODS.to_vec(),
            maf: 0.01,
            significance: GENOME_WIDE,
            transform: true,
            per_variant_propensity: false,
        }
    }
}

/// Effect estimate of one method for one variant.
#[derive(Debug, Clone, PartialEq)]
pub struct VariantFit {
    pub method: Method,
    pub beta: Option<f64>,
    pub se: Option<f64>,
    pub p: Option<f64>,
    pub error: Option<String>,
}

impl VariantFit {
    pub fn significant(&self, level: f64) -> bool {
        self.p.is_some_and(|p| p < level)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub variant: String,
    pub maf: f64,
    /// One entry per requested method, in [`SCAN_METHODS`] order.
    pub fits: Vec<VariantFit>,
    pub beta_diff_synsurr_cca: Option<f64>,
    pub beta_diff_ps_ppi_wcca: Option<f64>,
    pub se_ratio_synsurr_cca: Option<f64>,
    pub se_ratio_ps_ppi_wcca: Option<f64>,
    pub significance: f64,
}

impl ScanRow {
    pub fn fit(&self, m: Method) -> Option<&VariantFit> {
        self.fits.iter().find(|f| f.method == m)
    }

    fn pair(&self, a: Method, b: Method) -> (Option<f64>, Option<f64>) {
        match (self.fit(a), self.fit(b)) {
            (Some(fa), Some(fb)) => contrast(fa, fb),
            _ => (None, None),
        }
    }
}

/// `(beta_a − beta_b, se_a / se_b)`, `None` where either fit failed.
pub fn contrast(a: &VariantFit, b: &VariantFit) -> (Option<f64>, Option<f64>) {
    let diff = a.beta.zip(b.beta).map(|(x, y)| x - y);
    let ratio = a.se.zip(b.se).map(|(x, y)| x / y);
    (diff, ratio)
}

fn check_methods(methods: &[Method]) -> Result<Vec<Method>> {
    if methods.is_empty() {
        return Err(Error::Config("scan needs at least one method".into()));
    }
    if let Some(m) = methods.iter().find(|m| !SCAN_METHODS.contains(m)) {
        return Err(Error::Config(format!("method {m} is not available in a variant scan")));
    }
    Ok(SCAN_METHODS.iter().copied().filter(|m| methods.contains(m)).collect())
}

fn fit_variant(
    frame: &AnalysisFrame,
    method: Method,
    shared: Option<&PropensityModel>,
    per_variant: bool,
) -> Result<FitResult> {
    let owned;
    let prop = match shared {
        Some(p) if !per_variant => p,
        _ => {
            owned = PropensityModel::fit(frame, PropensityDesign::Full, DEFAULT_PI_MIN)?;
            &owned
        }
    };
    match method {
        Method::Cca => estimate_cca(frame),
        Method::Wcca => estimate_wcca_with(frame, prop),
        Method::PsPpi => estimate_psppi_with(frame, &PbTuning::Optimal, Some(prop)),
        Method::SynSurr => estimate_synsurr(frame),
        other => Err(Error::UnknownMethod(other.to_string())),
    }
}

/// Fits every requested method per retained variant with the variant's
/// dosage as the single covariate of interest. The propensity model uses
/// the confounders only and is fitted once per scan unless
/// `per_variant_propensity` is set. Rows are sorted by variant id.
pub fn run_variant_scan(pheno: &Phenotypes, geno: &GenotypeMatrix, opts: &ScanOptions) -> Result<Vec<ScanRow>> {
    pheno.check()?;
    let methods = check_methods(&opts.methods)?;
    if pheno.ids != geno.ids {
        return Err(Error::InvalidInput("phenotype and genotype ids are not aligned".into()));
    }
    let geno = maf_filter(geno, opts.maf)?;
    if geno.n_variants() == 0 {
        return Err(Error::InvalidInput("no variants left after MAF filtering".into()));
    }
    let (y, yhat) = if opts.transform {
        let yhat: Vec<Option<f64>> = pheno.yhat.iter().map(|v| Some(*v)).collect();
        let yhat = inverse_normal_transform(&yhat)?
            .into_iter()
            .map(|v| v.expect("all present"))
            .collect();
        (inverse_normal_transform(&pheno.y)?, yhat)
    } else {
        (pheno.y.clone(), pheno.yhat.clone())
    };
    let n = pheno.n();
    let base = AnalysisFrame::new(
        OutcomeKind::Continuous,
        DMatrix::zeros(n, 0),
        pheno.z.clone(),
        y.clone(),
    )?;
    let needs_prop = methods.iter().any(|m| matches!(m, Method::Wcca | Method::PsPpi));
    let shared = if needs_prop && !opts.per_variant_propensity {
        Some(PropensityModel::fit(
            &base,
            PropensityDesign::ConfoundersOnly,
            DEFAULT_PI_MIN,
        )?)
    } else {
        None
    };

    let mafs = geno.mafs();
    let mut rows: Vec<ScanRow> = (0..geno.n_variants())
        .into_par_iter()
        .map(|v| {
            let x = DMatrix::from_column_slice(n, 1, geno.dosages.column(v).as_slice());
            let frame = AnalysisFrame::new(OutcomeKind::Continuous, x, pheno.z.clone(), y.clone())
                .and_then(|f| f.with_yhat(yhat.clone()));
            let fits = methods
                .iter()
                .map(|&m| {
                    let res = frame.as_ref().map_err(Clone::clone).and_then(|f| {
                        let fit = fit_variant(f, m, shared.as_ref(), opts.per_variant_propensity)?;
                        let (_, p) = wald_test(&fit, 1, 0.0)?;
                        Ok((fit.beta[1], fit.se[1], p))
                    });
                    match res {
                        Ok((b, s, p)) => VariantFit {
                            method: m,
                            beta: Some(b),
                            se: Some(s),
                            p: Some(p),
                            error: None,
                        },
                        Err(e) => VariantFit {
                            method: m,
                            beta: None,
                            se: None,
                            p: None,
                            error: Some(e.to_string()),
                        },
                    }
                })
                .collect();
            let mut row = ScanRow {
                variant: geno.variant_ids[v].clone(),
                maf: mafs[v],
                fits,
                beta_diff_synsurr_cca: None,
                beta_diff_ps_ppi_wcca: None,
                se_ratio_synsurr_cca: None,
                se_ratio_ps_ppi_wcca: None,
                significance: opts.significance,
            };
            (row.beta_diff_synsurr_cca, row.se_ratio_synsurr_cca) = row.pair(Method::SynSurr, Method::Cca);
            (row.beta_diff_ps_ppi_wcca, row.se_ratio_ps_ppi_wcca) = row.pair(Method::PsPpi, Method::Wcca);
            row
        })
        .collect();
    rows.sort_by(|a, b| a.variant.cmp(&b.variant));
    Ok(rows)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes `scan.csv`: variant, maf, then beta/se/p/sig/error for each of
/// cca, wcca, ps_ppi, synsurr (blank when not run), then the pairwise
/// comparisons.
pub fn write_scan_csv<W: Write>(rows: &[ScanRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["variant".to_string(), "maf".into()];
    for m in SCAN_METHODS {
        for col in ["beta", "se", "p", "sig", "error"] {
            header.push(format!("{col}_{m}"));
        }
    }
    header.extend(
        [
            "beta_diff_synsurr_cca",
            "beta_diff_ps_ppi_wcca",
            "se_ratio_synsurr_cca",
            "se_ratio_ps_ppi_wcca",
        ]
        .map(String::from),
    );
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.variant.clone(), r.maf.to_string()];
        for m in SCAN_METHODS {
            match r.fit(m) {
                Some(f) => rec.extend([
                    opt(f.beta),
                    opt(f.se),
                    opt(f.p),
                    u8::from(f.significant(r.significance)).to_string(),
                    f.error.clone().unwrap_or_default(),
                ]),
                None => rec.extend(std::iter::repeat_n(String::new(), 5)),
            }
        }
        rec.extend([
            opt(r.beta_diff_synsurr_cca),
            opt(r.beta_diff_ps_ppi_wcca),
            opt(r.se_ratio_synsurr_cca),
            opt(r.se_ratio_ps_ppi_wcca),
        ]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Synthetic cohort for desk-scale scans.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohortSpec {
    pub n: usize,
    pub variants: usize,
    /// `(variant index, effect per standard deviation of dosage)`.
    #[serde(default)]
    pub causal: Vec<(usize, f64)>,
    /// Number of standard-normal confounders.
    pub confounders: usize,
    pub confounder_effect: f64,
    pub noise_sd: f64,
    /// Evaluated with the phenotype as outcome, the last confounder as the
    /// model's confounder term and the covariate-of-interest terms at 0.
    pub missingness: ObservationModelSpec,
    /// Bias-noise surrogate built from the phenotype.
    pub surrogate: SurrogateSpec,
    /// Fix every allele frequency instead of drawing from `[0.05, 0.5]`.
    #[serde(default)]
    pub allele_freq: Option<f64>,
}

impl CohortSpec {
    pub fn new(n: usize, variants: usize) -> Self {
        Self {
            n,
            variants,
            causal: Vec::new(),
            confounders: 2,
            confounder_effect: 0.3,
            noise_sd: 1.0,
            missingness: ObservationModelSpec::mcar(Setting::LinearContinuous, 0.5),
            surrogate: SurrogateSpec::BiasNoise {
                lambda_pred: 2.0,
                sigma_pred: 0.5,
            },
            allele_freq: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.variants == 0 {
            return Err(Error::Config("cohort needs n >= 2 and at least one variant".into()));
        }
        if self.causal.iter().any(|(v, b)| *v >= self.variants || !b.is_finite()) {
            return Err(Error::Config("causal variant index out of range".into()));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) || !self.confounder_effect.is_finite() {
            return Err(Error::Config(
                "noise_sd and confounder_effect must be finite, noise_sd >= 0".into(),
            ));
        }
        if let Some(f) = self.allele_freq {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::Config("allele_freq must lie in [0, 1]".into()));
            }
        }
        self.missingness.validate()?;
        if !matches!(self.surrogate, SurrogateSpec::BiasNoise { .. }) {
            return Err(Error::Config("cohort surrogates must be bias_noise".into()));
        }
        self.surrogate.validate()
    }
}

/// Draws dosages `~ Binomial(2, f_v)`, a linear phenotype in the causal
/// dosages (standardised by their expected SD) and the confounders, a
/// surrogate and a missingness pattern.
pub fn simulate_cohort(spec: &CohortSpec, seed: u64) -> Result<(Phenotypes, GenotypeMatrix)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, nv, q) = (spec.n, spec.variants, spec.confounders);
    let freqs: Vec<f64> = (0..nv)
        .map(|_| spec.allele_freq.unwrap_or_else(|| rng.random_range(0.05..=0.5)))
        .collect();
    let mut dos = DMatrix::zeros(n, nv);
    for (v, f) in freqs.iter().enumerate() {
        let b = Binomial::new(2, *f).map_err(|e| Error::Config(e.to_string()))?;
        for i in 0..n {
            dos[(i, v)] = b.sample(&mut rng) as f64;
        }
    }
    let z = DMatrix::from_fn(n, q, |_, _| StandardNormal.sample(&mut rng));
    let noise = Normal::new(0.0, spec.noise_sd).map_err(|e| Error::Config(e.to_string()))?;
    let truth: Vec<f64> = (0..n)
        .map(|i| {
            let g: f64 = spec
                .causal
                .iter()
                .map(|(v, b)| {
                    let f = freqs[*v];
                    let sd = (2.0 * f * (1.0 - f)).sqrt();
                    if sd > 0.0 {
                        b * (dos[(i, *v)] - 2.0 * f) / sd
                    } else {
                        0.0
                    }
                })
                .sum();
            let c: f64 = z.row(i).iter().sum::<f64>() * spec.confounder_effect;
            g + c + noise.sample(&mut rng)
        })
        .collect();

    let mut frame = AnalysisFrame::new(
        OutcomeKind::Continuous,
        DMatrix::zeros(n, 0),
        z.clone(),
        truth.iter().map(|v| Some(*v)).collect(),
    )?;
    frame.set_shadow(truth.clone());
    let frame = make_surrogate(
        frame,
        &spec.surrogate,
        &DgpParams::new(Setting::LinearContinuous),
        &mut rng,
    )?;
    let c_col = q.checked_sub(1);
    let y: Vec<Option<f64>> = (0..n)
        .map(|i| {
            let c = c_col.map(|j| z[(i, j)]).unwrap_or(0.0);
            let p = spec.missingness.probability(0.0, 0.0, c, truth[i]);
            (rng.random::<f64>() < p).then_some(truth[i])
        })
        .collect();
    let ids: Vec<String> = (0..n).map(|i| format!("s{i:06}")).collect();
    let pheno = Phenotypes {
        ids: ids.clone(),
        y,
        yhat: frame.yhat.expect("surrogate attached"),
        z,
        z_names: (1..=q).map(|j| format!("c{j}")).collect(),
    };
    let geno = GenotypeMatrix::new(ids, (0..nv).map(|v| format!("v{v:05}")).collect(), dos)?;
    Ok((pheno, geno))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blom_three_values() {
        let out = inverse_normal_transform(&[Some(3.0), Some(1.0), Some(2.0)]).unwrap();
        let v: Vec<f64> = out.into_iter().map(Option::unwrap).collect();
        assert!((v[0] - 0.8694).abs() < 1e-4);
        assert!((v[1] + 0.8694).abs() < 1e-4);
        assert!(v[2].abs() < 1e-12);
    }

    #[test]
    fn ties_share_a_value_and_missing_passes_through() {
        let out = inverse_normal_transform(&[Some(1.0), None, Some(5.0), Some(5.0), Some(0.0)]).unwrap();
        assert_eq!(out[1], None);
        assert_eq!(out[2], out[3]);
        assert!(out[0].unwrap() < out[2].unwrap());
    }

    #[test]
    fn symmetric_input_has_zero_mean() {
        let v: Vec<Option<f64>> = [-3.0, -1.0, -0.5, 0.0, 0.5, 1.0, 3.0]
            .iter()
            .map(|x| Some(*x))
            .collect();
        let out: Vec<f64> = inverse_normal_transform(&v).unwrap().into_iter().flatten().collect();
        assert!((out.iter().sum::<f64>() / 7.0).abs() < 1e-12);
    }

    #[test]
    fn constant_input_is_degenerate() {
        assert_eq!(
            inverse_normal_transform(&[Some(2.0), Some(2.0)]),
            Err(Error::DegenerateRanks)
        );
    }

    #[test]
    fn maf_arithmetic() {
        let d = DMatrix::from_row_slice(2, 3, &[0.0, 1.0, 2.0, 0.02, 0.0, 0.0]);
        let g = GenotypeMatrix::new(
            vec!["a".into(), "b".into()],
            vec!["v1".into(), "v2".into(), "v3".into()],
            d,
        )
        .unwrap();
        let m = g.mafs();
        assert!((m[0] - 0.005).abs() < 1e-15);
        assert!((m[1] - 0.25).abs() < 1e-15);
        assert!((m[2] - 0.5).abs() < 1e-15);
        let kept = maf_filter(&g, 0.01).unwrap();
        assert_eq!(kept.variant_ids, vec!["v2".to_string(), "v3".into()]);
        assert_eq!(maf_filter(&g, 0.0).unwrap(), g);
    }
}
