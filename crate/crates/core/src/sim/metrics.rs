//! Bias, MSE, rejection rates and null-calibrated power.

use serde::{Deserialize, Serialize};

use super::{Arm, Record, SimScenario};
use crate::dgp::{Mechanism, Setting};
use crate::error::{Error, Result};
use crate::estimators::Method;

/// Nominal test level.
pub const ALPHA: f64 = 0.05;

/// One (method, coefficient) line of a scenario summary. The `*0` block
/// comes from the null arm, the unsuffixed block from the alternative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub mechanism: Mechanism,
    pub method: Method,
    pub coefficient: String,
    pub bias0: Option<f64>,
    pub mse0: Option<f64>,
    pub type_i: Option<f64>,
    pub bias: Option<f64>,
    pub mse: Option<f64>,
    pub power: Option<f64>,
    pub failures: usize,
    pub type_i_se: Option<f64>,
    /// Unadjusted rejection rate at [`ALPHA`] in the alternative arm.
    pub rejection: Option<f64>,
    pub rejection_se: Option<f64>,
    pub power_se: Option<f64>,
    /// Null-calibrated threshold used for `power`.
    pub p05: Option<f64>,
    pub replicates0: usize,
    pub replicates: usize,
    pub setting: Setting,
    pub surrogate: String,
    pub scenario: String,
}

impl SummaryRow {
    pub(crate) fn describe(mut self, sc: &SimScenario) -> Self {
        self.mechanism = sc.obs.mechanism;
        self.setting = sc.dgp.family;
        self.surrogate = sc.surrogate.kind_str().to_string();
        self.scenario = sc.name.clone();
        self
    }
}

pub fn rejection_rate(p: &[f64], alpha: f64) -> Option<f64> {
    if p.is_empty() {
        return None;
    }
    Some(p.iter().filter(|v| **v < alpha).count() as f64 / p.len() as f64)
}

/// `⌈0.05 L⌉`-th order statistic of the null p-values.
pub fn null_threshold(null_p: &[f64]) -> Option<f64> {
    if null_p.is_empty() {
        return None;
    }
    let mut s = null_p.to_vec();
    s.sort_by(f64::total_cmp);
    let k = (s.len() * 5).div_ceil(100).max(1);
    Some(s[k - 1])
}

pub fn adjusted_power(alt_p: &[f64], null_p: &[f64]) -> Option<f64> {
    rejection_rate(alt_p, null_threshold(null_p)?)
}

fn rate_se(r: Option<f64>, l: usize) -> Option<f64> {
    r.map(|r| (r * (1.0 - r) / l as f64).sqrt())
}

struct ArmStats {
    estimates: Vec<f64>,
    p: Vec<f64>,
    truth: f64,
    failures: usize,
}

impl ArmStats {
    fn collect<'a>(recs: impl Iterator<Item = &'a Record>) -> Self {
        let mut s = ArmStats {
            estimates: Vec::new(),
            p: Vec::new(),
            truth: 0.0,
            failures: 0,
        };
        for r in recs {
            s.truth = r.truth;
            match (r.estimate, r.p_value) {
                (Some(e), Some(p)) if !r.failed() => {
                    s.estimates.push(e);
                    s.p.push(p);
                }
                _ => s.failures += 1,
            }
        }
        s
    }

    fn bias(&self) -> Option<f64> {
        if self.estimates.is_empty() {
            return None;
        }
        let mean = self.estimates.iter().sum::<f64>() / self.estimates.len() as f64;
        Some((mean - self.truth).abs())
    }

    fn mse(&self) -> Option<f64> {
        if self.estimates.is_empty() {
            return None;
        }
        Some(self.estimates.iter().map(|e| (e - self.truth).powi(2)).sum::<f64>() / self.estimates.len() as f64)
    }
}

/// Aggregates replicate records per (method, coefficient), in order of
/// first appearance. `records` may be a null arm on its own; an alternative
/// arm needs its null twin for the power threshold and the null block.
pub fn compute_metrics(records: &[Record], null_records: Option<&[Record]>) -> Result<Vec<SummaryRow>> {
    let has_alt = records.iter().any(|r| r.arm == Arm::Alt);
    if has_alt && null_records.is_none() {
        return Err(Error::MissingNullTwin);
    }
    let mut keys: Vec<(Method, String)> = Vec::new();
    for r in records {
        if !keys.iter().any(|(m, c)| *m == r.method && *c == r.coefficient) {
            keys.push((r.method, r.coefficient.clone()));
        }
    }
    let select = |recs: &'_ [Record], m: Method, c: &str, arm: Arm| -> ArmStats {
        ArmStats::collect(
            recs.iter()
                .filter(|r| r.method == m && r.coefficient == c && r.arm == arm),
        )
    };
    let mut rows = Vec::with_capacity(keys.len());
    for (method, coef) in keys {
        let (null, alt) = if has_alt {
            let null = select(null_records.unwrap_or(&[]), method, &coef, Arm::Null);
            (null, Some(select(records, method, &coef, Arm::Alt)))
        } else {
            (select(records, method, &coef, Arm::Null), None)
        };
        let type_i = rejection_rate(&null.p, ALPHA);
        let mut row = SummaryRow {
            mechanism: Mechanism::Mcar,
            method,
            coefficient: coef,
            bias0: null.bias(),
            mse0: null.mse(),
            type_i,
            bias: None,
            mse: None,
            power: None,
            failures: null.failures,
            type_i_se: rate_se(type_i, null.p.len()),
            rejection: None,
            rejection_se: None,
            power_se: None,
            p05: None,
            replicates0: null.p.len(),
            replicates: 0,
            setting: Setting::LinearContinuous,
            surrogate: String::new(),
            scenario: String::new(),
        };
        if let Some(alt) = alt {
            let rejection = rejection_rate(&alt.p, ALPHA);
            let power = adjusted_power(&alt.p, &null.p);
            row.bias = alt.bias();
            row.mse = alt.mse();
            row.power = power;
            row.power_se = rate_se(power, alt.p.len());
            row.rejection = rejection;
            row.rejection_se = rate_se(rejection, alt.p.len());
            row.p05 = null_threshold(&null.p);
            row.replicates = alt.p.len();
            row.failures += alt.failures;
        }
        rows.push(row);
    }
    Ok(rows)
}
