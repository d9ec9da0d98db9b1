//! Monte Carlo driver: replicate generation, per-method fitting, metric
//! aggregation and table output.
//!
//! Replicate `j` (1-based) draws from `ChaCha8Rng::seed_from_u64(s_j)` with
//! `s_j = mix64(base_seed ^ (GOLDEN · j))`, where `mix64` is the SplitMix64
//! finaliser. Each method fitted on that replicate gets its own stream
//! `mix64(s_j ^ (GOLDEN · (100 + method_index)))`, so adding or removing a
//! method never changes the draws seen by another.

mod grids;
mod metrics;
mod table;

use std::cell::OnceCell;
use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dgp::{
    apply_observation_model, gen_dataset, make_surrogate, DgpParams, Mechanism, ObservationModelSpec, Setting,
    SurrogateSpec,
};
use crate::error::{Error, Result};
use crate::estimators::{
    estimate_cca, estimate_full, estimate_naive, estimate_ppi, estimate_psppi_with, estimate_synsurr,
    estimate_wcca_with, Method, PbTuning, PropensityDesign, PropensityModel, DEFAULT_PI_MIN,
};
use crate::frame::AnalysisFrame;
use crate::mi::{estimate_mi, Imputer, MiParams};
use crate::regression::{wald_test, FitResult};

pub use grids::{builtin_grids, GRID_NAMES};
pub use metrics::{adjusted_power, compute_metrics, null_threshold, rejection_rate, SummaryRow, ALPHA};
pub use table::{emit_table, parse_summary_csv, read_records_csv, write_outputs, write_records_csv, TableFormat};

/// 64-bit golden-ratio increment.
pub const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn replicate_seed(base_seed: u64, j: u64) -> u64 {
    mix64(base_seed ^ GOLDEN.wrapping_mul(j))
}

fn method_seed(replicate_seed: u64, method: Method) -> u64 {
    let idx = Method::ALL.iter().position(|m| *m == method).unwrap_or(0) as u64;
    mix64(replicate_seed ^ GOLDEN.wrapping_mul(100 + idx))
}

/// Coefficients tested in every scenario: `β1` (column 1) and `β2`
/// (column 2) of `[1 | X1 X2 | Z]`.
pub const TESTED: [(usize, &str); 2] = [(1, "beta1"), (2, "beta2")];

fn default_replicates() -> usize {
    500
}

fn default_true() -> bool {
    true
}

fn default_name() -> String {
    "scenario".into()
}

/// One simulation cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimScenario {
    #[serde(default = "default_name")]
    pub name: String,
    pub dgp: DgpParams,
    pub obs: ObservationModelSpec,
    pub surrogate: SurrogateSpec,
    pub n: usize,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    pub methods: Vec<Method>,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub mi: MiParams,
    /// Run the matched `β1 = β2 = 0` scenario for power calibration. Always
    /// done when a tested coefficient is non-zero.
    #[serde(default = "default_true")]
    pub null_twin: bool,
}

impl SimScenario {
    /// Scenario with the standard observation model for `mechanism`.
    pub fn standard(
        name: impl Into<String>,
        dgp: DgpParams,
        mechanism: Mechanism,
        surrogate: SurrogateSpec,
        n: usize,
        methods: Vec<Method>,
    ) -> Self {
        let obs = ObservationModelSpec::standard(mechanism, dgp.family);
        Self {
            name: name.into(),
            dgp,
            obs,
            surrogate,
            n,
            replicates: default_replicates(),
            methods,
            base_seed: 0,
            mi: MiParams::default(),
            null_twin: true,
        }
    }

    pub fn setting(&self) -> Setting {
        self.dgp.family
    }

    pub fn is_null(&self) -> bool {
        TESTED.iter().all(|(j, _)| self.dgp.beta_truth[*j] == 0.0)
    }

    pub fn needs_twin(&self) -> bool {
        !self.is_null()
    }

    /// The same scenario with `β1 = β2 = 0`.
    pub fn twin(&self) -> SimScenario {
        let mut t = self.clone();
        for (j, _) in TESTED {
            t.dgp.beta_truth[j] = 0.0;
        }
        t
    }

    /// Identity of the null arm, ignoring the name.
    fn null_key(&self) -> String {
        let mut t = self.twin();
        t.name.clear();
        serde_json::to_string(&t).expect("scenario serialises")
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Config(format!("{}: replicates must be >= 1", self.name)));
        }
        if self.n == 0 {
            return Err(Error::Config(format!("{}: n must be >= 1", self.name)));
        }
        if self.methods.is_empty() {
            return Err(Error::Config(format!("{}: methods must be non-empty", self.name)));
        }
        self.dgp.validate()?;
        self.obs.validate()?;
        self.surrogate.validate()?;
        self.mi.validate()?;
        if self.obs.setting != self.dgp.family {
            return Err(Error::SettingMismatch {
                spec: self.obs.setting.as_str().into(),
                frame: self.dgp.family.as_str().into(),
            });
        }
        let kind = self.dgp.family.outcome_kind();
        if !self.surrogate.compatible_with(kind) {
            return Err(Error::IncompatibleSurrogate {
                kind: self.surrogate.kind_str().into(),
                family: self.dgp.family.as_str().into(),
            });
        }
        if self.dgp.family == Setting::Logistic && self.methods.contains(&Method::SynSurr) {
            return Err(Error::Config(format!("{}: synsurr needs a linear family", self.name)));
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Vec<SimScenario>> {
        let v: serde_json::Value = serde_json::from_str(s)?;
        let list: Vec<SimScenario> = if v.is_array() {
            serde_json::from_value(v)?
        } else {
            vec![serde_json::from_value(v)?]
        };
        for sc in &list {
            sc.validate()?;
        }
        Ok(list)
    }
}

/// Which truth a record was generated under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    Null,
    Alt,
}

/// One method's result for one tested coefficient in one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub scenario: String,
    pub arm: Arm,
    pub replicate: u64,
    pub method: Method,
    pub coefficient: String,
    pub truth: f64,
    pub estimate: Option<f64>,
    pub se: Option<f64>,
    pub p_value: Option<f64>,
    pub error: Option<String>,
}

impl Record {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioOutput {
    pub scenario: SimScenario,
    /// Records of the scenario, followed by those of its null twin if one
    /// was run.
    pub records: Vec<Record>,
    pub summary: Vec<SummaryRow>,
}

/// Fits `method` on one masked frame. `full` reads the shadow truth.
pub fn fit_method(
    frame: &AnalysisFrame,
    method: Method,
    mi: &MiParams,
    propensity: &dyn Fn() -> Result<PropensityModel>,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(f64, f64, f64)>> {
    let wald = |fit: &FitResult, j: usize| -> Result<(f64, f64, f64)> {
        let (_, p) = wald_test(fit, j, 0.0)?;
        Ok((fit.beta[j], fit.se[j], p))
    };
    let single = |fit: Result<FitResult>| -> Result<Vec<(f64, f64, f64)>> {
        let fit = fit?;
        TESTED.iter().map(|(j, _)| wald(&fit, *j)).collect()
    };
    match method {
        Method::Full => single(frame.oracle_full_view().and_then(|f| estimate_full(&f))),
        Method::Cca => single(estimate_cca(frame)),
        Method::Wcca => single(propensity().and_then(|p| estimate_wcca_with(frame, &p))),
        Method::Naive => single(estimate_naive(frame)),
        Method::Ppi => single(estimate_ppi(frame, &PbTuning::Identity)),
        Method::PpiPp => TESTED
            .iter()
            .map(|(j, _)| wald(&estimate_ppi(frame, &PbTuning::AutoScalar { target: *j })?, *j))
            .collect(),
        Method::PsPpi => single(propensity().and_then(|p| estimate_psppi_with(frame, &PbTuning::Optimal, Some(&p)))),
        Method::PsPpiCca => single(estimate_psppi_with(frame, &PbTuning::Optimal, None)),
        Method::SynSurr => single(estimate_synsurr(frame)),
        Method::MiPmm => single(estimate_mi(frame, Imputer::Pmm, mi, rng)),
        Method::MiRf => single(estimate_mi(frame, Imputer::Rf, mi, rng)),
    }
}

/// Generates replicate `j` of `sc`: data, surrogate, then masking.
pub fn replicate_frame(sc: &SimScenario, j: u64) -> Result<AnalysisFrame> {
    let mut rng = ChaCha8Rng::seed_from_u64(replicate_seed(sc.base_seed, j));
    let frame = gen_dataset(&sc.dgp, sc.n, &mut rng)?;
    let frame = make_surrogate(frame, &sc.surrogate, &sc.dgp, &mut rng)?;
    apply_observation_model(frame, &sc.obs, &mut rng)
}

fn run_replicate(sc: &SimScenario, arm: Arm, j: u64) -> Vec<Record> {
    let seed = replicate_seed(sc.base_seed, j);
    let frame = replicate_frame(sc, j);
    let cell: OnceCell<Result<PropensityModel>> = OnceCell::new();
    let mut out = Vec::with_capacity(sc.methods.len() * TESTED.len());
    for &method in &sc.methods {
        let result = frame.as_ref().map_err(Clone::clone).and_then(|f| {
            let prop = || {
                cell.get_or_init(|| PropensityModel::fit(f, PropensityDesign::Full, DEFAULT_PI_MIN))
                    .clone()
            };
            let mut rng = ChaCha8Rng::seed_from_u64(method_seed(seed, method));
            fit_method(f, method, &sc.mi, &prop, &mut rng)
        });
        for (k, (col, coef)) in TESTED.iter().enumerate() {
            let base = Record {
                scenario: sc.name.clone(),
                arm,
                replicate: j,
                method,
                coefficient: (*coef).to_string(),
                truth: sc.dgp.beta_truth[*col],
                estimate: None,
                se: None,
                p_value: None,
                error: None,
            };
            out.push(match &result {
                Ok(v) => {
                    let (est, se, p) = v[k];
                    Record {
                        estimate: Some(est),
                        se: Some(se),
                        p_value: Some(p),
                        ..base
                    }
                }
                Err(e) => Record {
                    error: Some(e.to_string()),
                    ..base
                },
            });
        }
    }
    out
}

/// All replicates of one arm, in replicate order regardless of how rayon
/// schedules them.
pub fn run_arm(sc: &SimScenario, arm: Arm) -> Vec<Record> {
    let per: Vec<Vec<Record>> = (1..=sc.replicates as u64)
        .into_par_iter()
        .map(|j| run_replicate(sc, arm, j))
        .collect();
    per.into_iter().flatten().collect()
}

/// Forced-serial counterpart of [`run_arm`].
pub fn run_arm_serial(sc: &SimScenario, arm: Arm) -> Vec<Record> {
    (1..=sc.replicates as u64)
        .flat_map(|j| run_replicate(sc, arm, j))
        .collect()
}

fn relabel(records: &[Record], name: &str) -> Vec<Record> {
    records
        .iter()
        .map(|r| Record {
            scenario: name.to_string(),
            ..r.clone()
        })
        .collect()
}

fn run_with_cache(sc: &SimScenario, cache: &mut HashMap<String, Vec<Record>>) -> Result<ScenarioOutput> {
    sc.validate()?;
    let key = sc.null_key();
    let null_records = |cache: &mut HashMap<String, Vec<Record>>| -> Vec<Record> {
        let twin = sc.twin();
        let recs = cache.entry(key.clone()).or_insert_with(|| run_arm(&twin, Arm::Null));
        relabel(recs, &sc.name)
    };
    let (records, summary) = if sc.is_null() {
        let recs = null_records(cache);
        let summary = compute_metrics(&recs, None)?;
        (recs, summary)
    } else {
        let alt = run_arm(sc, Arm::Alt);
        let twin = null_records(cache);
        let summary = compute_metrics(&alt, Some(&twin))?;
        (alt.into_iter().chain(twin).collect(), summary)
    };
    let summary = summary.into_iter().map(|row| row.describe(sc)).collect();
    Ok(ScenarioOutput {
        scenario: sc.clone(),
        records,
        summary,
    })
}

/// Runs one scenario, plus its null twin when a tested coefficient is
/// non-zero. Estimator failures are recorded, never fatal.
pub fn run_scenario(sc: &SimScenario) -> Result<ScenarioOutput> {
    run_with_cache(sc, &mut HashMap::new())
}

/// Runs a list of scenarios, sharing null arms between scenarios that have
/// the same null twin.
pub fn run_grid(scenarios: &[SimScenario]) -> Result<Vec<ScenarioOutput>> {
    for sc in scenarios {
        sc.validate()?;
    }
    let mut cache = HashMap::new();
    scenarios.iter().map(|sc| run_with_cache(sc, &mut cache)).collect()
}

/// Summary rows for a table: null scenarios whose arm already appears as
/// the twin of an alternative scenario are folded into that scenario's row.
pub fn table_rows(outputs: &[ScenarioOutput]) -> Vec<SummaryRow> {
    let alt_keys: Vec<String> = outputs
        .iter()
        .filter(|o| !o.scenario.is_null())
        .map(|o| o.scenario.null_key())
        .collect();
    outputs
        .iter()
        .filter(|o| !o.scenario.is_null() || !alt_keys.contains(&o.scenario.null_key()))
        .flat_map(|o| o.summary.iter().cloned())
        .collect()
}
