//! Synthetic data: the three regression families, the ten outcome
//! observation models and the surrogate prediction designs.
//!
//! Covariates follow
//!
//! ```text
//! (Z1, Z2) ~ N(0, σ_z² [[1, ρ], [ρ, 1]])
//! X1 = cos(Z1) + τ,  τ ~ N(0, σ_τ²)
//! X2 = sin(Z2) + ν,  ν ~ Exponential(rate λ)
//! ```
//!
//! and the outcome is linear in `(X1, X2, Z1, Z2)`, linear in
//! `(X1, X2, Z3, Z4)` with quadrant dummies `Z3 = I(Z1<0)I(Z2<0)`,
//! `Z4 = I(Z1>0)I(Z2>0)`, or logistic in `(X1, X2, Z1, Z2)`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Exp, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dist::expit;
use crate::error::{Error, Result};
use crate::frame::{AnalysisFrame, OutcomeKind};
use crate::regression::{fit_logistic, DesignMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    LinearContinuous,
    LinearDummy,
    Logistic,
}

impl Setting {
    pub fn as_str(&self) -> &'static str {
        match self {
            Setting::LinearContinuous => "linear_continuous",
            Setting::LinearDummy => "linear_dummy",
            Setting::Logistic => "logistic",
        }
    }

    pub fn outcome_kind(&self) -> OutcomeKind {
        match self {
            Setting::Logistic => OutcomeKind::Binary,
            _ => OutcomeKind::Continuous,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DgpParams {
    /// Marginal SD of `Z1` and `Z2`.
    pub sigma_z: f64,
    pub rho: f64,
    /// SD of the linear-model error.
    pub sigma: f64,
    pub sigma_tau: f64,
    /// Rate of the exponential `ν`.
    pub lambda_nu: f64,
    /// `(β0, β1, β2, β3, β4)`.
    pub beta_truth: [f64; 5],
    pub family: Setting,
}

impl DgpParams {
    /// Unit-scale defaults with `β1 = β2 = 0`.
    pub fn new(family: Setting) -> Self {
        Self {
            sigma_z: 1.0,
            rho: 0.5,
            sigma: 1.0,
            sigma_tau: 1.0,
            lambda_nu: 1.0,
            beta_truth: [0.0, 0.0, 0.0, 0.5, 0.5],
            family,
        }
    }

    pub fn with_effects(mut self, beta1: f64, beta2: f64) -> Self {
        self.beta_truth[1] = beta1;
        self.beta_truth[2] = beta2;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("dgp: {m}")));
        if !(self.sigma_z > 0.0 && self.sigma_z.is_finite()) {
            return bad("sigma_z must be > 0");
        }
        if !(self.rho > -1.0 && self.rho < 1.0) {
            return bad("rho must lie in (-1, 1)");
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad("sigma must be >= 0");
        }
        if !(self.sigma_tau >= 0.0 && self.sigma_tau.is_finite()) {
            return bad("sigma_tau must be >= 0");
        }
        if !(self.lambda_nu > 0.0 && self.lambda_nu.is_finite()) {
            return bad("lambda_nu must be > 0");
        }
        if self.beta_truth.iter().any(|b| !b.is_finite()) {
            return bad("beta_truth must be finite");
        }
        Ok(())
    }
}

/// Draws `n` rows from the family in `params`. The returned frame has every
/// outcome observed and keeps a copy in its shadow truth.
pub fn gen_dataset<R: Rng + ?Sized>(params: &DgpParams, n: usize, rng: &mut R) -> Result<AnalysisFrame> {
    params.validate()?;
    if n == 0 {
        return Err(Error::InvalidInput("n must be >= 1".into()));
    }
    let tau = Normal::new(0.0, params.sigma_tau).map_err(|e| Error::Config(e.to_string()))?;
    let nu = Exp::new(params.lambda_nu).map_err(|e| Error::Config(e.to_string()))?;
    let eps = Normal::new(0.0, params.sigma).map_err(|e| Error::Config(e.to_string()))?;
    let b = params.beta_truth;
    let shrink = (1.0 - params.rho * params.rho).sqrt();

    let mut x = DMatrix::zeros(n, 2);
    let mut z = DMatrix::zeros(n, 2);
    let mut latent = DMatrix::zeros(n, 2);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let u1: f64 = StandardNormal.sample(rng);
        let u2: f64 = StandardNormal.sample(rng);
        let z1 = params.sigma_z * u1;
        let z2 = params.sigma_z * (params.rho * u1 + shrink * u2);
        let x1 = z1.cos() + tau.sample(rng);
        let x2 = z2.sin() + nu.sample(rng);
        let (c1, c2) = match params.family {
            Setting::LinearDummy => (
                f64::from(u8::from(z1 < 0.0 && z2 < 0.0)),
                f64::from(u8::from(z1 > 0.0 && z2 > 0.0)),
            ),
            _ => (z1, z2),
        };
        let eta = b[0] + b[1] * x1 + b[2] * x2 + b[3] * c1 + b[4] * c2;
        let yi = match params.family {
            Setting::Logistic => f64::from(u8::from(rng.random::<f64>() < expit(eta))),
            _ => eta + eps.sample(rng),
        };
        x[(i, 0)] = x1;
        x[(i, 1)] = x2;
        z[(i, 0)] = c1;
        z[(i, 1)] = c2;
        latent[(i, 0)] = z1;
        latent[(i, 1)] = z2;
        y.push(yi);
    }
    let mut frame = AnalysisFrame::new(params.family.outcome_kind(), x, z, y.iter().map(|v| Some(*v)).collect())?;
    if params.family == Setting::LinearDummy {
        frame.z_names = vec!["z3".into(), "z4".into()];
    }
    frame.setting = Some(params.family);
    frame.latent_z = Some(latent);
    frame.set_shadow(y);
    Ok(frame)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mechanism {
    #[serde(rename = "MCAR")]
    Mcar,
    #[serde(rename = "MAR1")]
    Mar1,
    #[serde(rename = "MAR2")]
    Mar2,
    #[serde(rename = "MNAR1")]
    Mnar1,
    #[serde(rename = "MNAR2")]
    Mnar2,
    #[serde(rename = "MNAR3")]
    Mnar3,
    #[serde(rename = "MNAR4")]
    Mnar4,
    #[serde(rename = "MNAR5")]
    Mnar5,
    #[serde(rename = "MNAR6")]
    Mnar6,
    #[serde(rename = "MNAR7")]
    Mnar7,
}

impl Mechanism {
    pub const ALL: [Mechanism; 10] = [
        Mechanism::Mcar,
        Mechanism::Mar1,
        Mechanism::Mar2,
        Mechanism::Mnar1,
        Mechanism::Mnar2,
        Mechanism::Mnar3,
        Mechanism::Mnar4,
        Mechanism::Mnar5,
        Mechanism::Mnar6,
        Mechanism::Mnar7,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Mechanism::Mcar => "MCAR",
            Mechanism::Mar1 => "MAR1",
            Mechanism::Mar2 => "MAR2",
            Mechanism::Mnar1 => "MNAR1",
            Mechanism::Mnar2 => "MNAR2",
            Mechanism::Mnar3 => "MNAR3",
            Mechanism::Mnar4 => "MNAR4",
            Mechanism::Mnar5 => "MNAR5",
            Mechanism::Mnar6 => "MNAR6",
            Mechanism::Mnar7 => "MNAR7",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|m| m.as_str().eq_ignore_ascii_case(s))
    }

    /// Terms entering the logit, in coefficient order.
    pub fn terms(&self) -> &'static [Term] {
        use Term::*;
        match self {
            Mechanism::Mcar => &[],
            Mechanism::Mar1 => &[Intercept, Confounder],
            Mechanism::Mar2 => &[Intercept, X1, Confounder],
            Mechanism::Mnar1 => &[Intercept, Confounder, Outcome],
            Mechanism::Mnar2 => &[Intercept, X1, Confounder, Outcome],
            Mechanism::Mnar3 => &[Intercept, X2, Confounder, Outcome],
            Mechanism::Mnar4 => &[Intercept, X1, X2, Confounder, Outcome],
            Mechanism::Mnar5 => &[Intercept, X1, X2, Confounder, Outcome, X1TimesOutcome],
            Mechanism::Mnar6 => &[Intercept, X1, X2, Confounder, Outcome, X2TimesOutcome],
            Mechanism::Mnar7 => &[Intercept, X1, X2, Confounder, Outcome, ConfounderTimesOutcome],
        }
    }

    pub fn depends_on_x1(&self) -> bool {
        self.terms()
            .iter()
            .any(|t| matches!(t, Term::X1 | Term::X1TimesOutcome))
    }

    pub fn depends_on_x2(&self) -> bool {
        self.terms()
            .iter()
            .any(|t| matches!(t, Term::X2 | Term::X2TimesOutcome))
    }

    pub fn depends_on_outcome(&self) -> bool {
        self.terms().iter().any(|t| {
            matches!(
                t,
                Term::Outcome | Term::X1TimesOutcome | Term::X2TimesOutcome | Term::ConfounderTimesOutcome
            )
        })
    }
}

/// One term of a logistic observation model. `Confounder` is `Z2` in the
/// continuous-confounder and logistic settings and `Z4` in the dummy setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Term {
    Intercept,
    X1,
    X2,
    Confounder,
    Outcome,
    X1TimesOutcome,
    X2TimesOutcome,
    ConfounderTimesOutcome,
}

/// Transform of `Y` that enters the observation logit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeTerm {
    Identity,
    IndicatorGeOne,
    IndicatorEqOne,
}

impl OutcomeTerm {
    pub fn apply(&self, y: f64) -> f64 {
        match self {
            OutcomeTerm::Identity => y,
            OutcomeTerm::IndicatorGeOne => f64::from(u8::from(y >= 1.0)),
            OutcomeTerm::IndicatorEqOne => f64::from(u8::from(y == 1.0)),
        }
    }

    pub fn default_for(setting: Setting) -> Self {
        match setting {
            Setting::Logistic => OutcomeTerm::Identity,
            _ => OutcomeTerm::IndicatorGeOne,
        }
    }
}

/// Default observation-model coefficients, per setting and mechanism.
pub fn standard_omega(mechanism: Mechanism, setting: Setting) -> Vec<f64> {
    use Mechanism::*;
    let v: &[f64] = match (setting, mechanism) {
        (_, Mcar) => &[0.2],
        (Setting::LinearContinuous, m) => match m {
            Mar1 => &[-1.7, 0.5],
            Mar2 => &[-2.0, 1.0, 0.5],
            Mnar1 => &[-2.8, 0.5, 2.0],
            Mnar2 => &[-3.0, 1.0, 0.5, 2.0],
            Mnar3 => &[-3.0, 1.0, 0.5, 2.0],
            Mnar4 => &[-3.2, 1.0, 1.0, 0.5, 2.0],
            Mnar5 => &[-3.5, 1.0, 1.0, 0.5, 2.0, 1.0],
            Mnar6 => &[-3.2, 1.0, 1.0, 0.5, 2.0, 1.0],
            Mnar7 => &[-3.2, 1.0, 1.0, 0.5, 2.0, 0.5],
            Mcar => unreachable!(),
        },
        (Setting::LinearDummy, m) => match m {
            Mar1 => &[-1.7, 1.0],
            Mar2 => &[-2.0, 1.0, 1.0],
            Mnar1 => &[-2.0, 1.0, 1.0],
            Mnar2 => &[-2.4, 1.0, 1.0, 1.0],
            Mnar3 => &[-2.2, 1.0, 1.0, 1.0],
            Mnar4 => &[-2.5, 1.0, 1.0, 1.0, 1.0],
            Mnar5 => &[-2.5, 1.0, 1.0, 1.0, 1.0, -1.0],
            Mnar6 => &[-2.5, 1.0, 1.0, 1.0, 1.0, -1.0],
            Mnar7 => &[-2.5, 1.0, 1.0, 1.0, 1.0, 1.0],
            Mcar => unreachable!(),
        },
        (Setting::Logistic, m) => match m {
            Mar1 => &[-1.7, 0.5],
            Mar2 => &[-2.0, 1.0, 0.5],
            Mnar1 => &[-3.3, 0.5, 2.0],
            Mnar2 => &[-3.5, 1.0, 0.5, 2.0],
            Mnar3 => &[-3.5, 1.0, 0.5, 2.0],
            Mnar4 => &[-3.9, 1.0, 1.0, 0.5, 2.0],
            Mnar5 => &[-4.2, 1.0, 1.0, 0.5, 2.0, 1.0],
            Mnar6 => &[-4.2, 1.0, 1.0, 0.5, 2.0, 1.0],
            Mnar7 => &[-4.5, 1.0, 1.0, 0.5, 2.0, 0.5],
            Mcar => unreachable!(),
        },
    };
    v.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservationModelSpec {
    pub mechanism: Mechanism,
    pub setting: Setting,
    /// Logit coefficients in [`Mechanism::terms`] order; for MCAR a single
    /// observation probability.
    pub omega: Vec<f64>,
    pub outcome_term: OutcomeTerm,
}

impl ObservationModelSpec {
    pub fn standard(mechanism: Mechanism, setting: Setting) -> Self {
        Self {
            mechanism,
            setting,
            omega: standard_omega(mechanism, setting),
            outcome_term: OutcomeTerm::default_for(setting),
        }
    }

    pub fn mcar(setting: Setting, prob: f64) -> Self {
        Self {
            mechanism: Mechanism::Mcar,
            setting,
            omega: vec![prob],
            outcome_term: OutcomeTerm::default_for(setting),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mechanism == Mechanism::Mcar {
            if self.omega.len() != 1 || !(0.0..=1.0).contains(&self.omega[0]) {
                return Err(Error::Config(
                    "MCAR omega must be a single probability in [0, 1]".into(),
                ));
            }
        } else if self.omega.len() != self.mechanism.terms().len() {
            return Err(Error::Config(format!(
                "{} expects {} coefficients, got {}",
                self.mechanism.as_str(),
                self.mechanism.terms().len(),
                self.omega.len()
            )));
        }
        if self.omega.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("omega must be finite".into()));
        }
        Ok(())
    }

    /// `π(R = 1 | x1, x2, c, y)` where `c` is the mechanism's confounder.
    pub fn probability(&self, x1: f64, x2: f64, c: f64, y: f64) -> f64 {
        if self.mechanism == Mechanism::Mcar {
            return self.omega[0];
        }
        let t = self.outcome_term.apply(y);
        let eta: f64 = self
            .mechanism
            .terms()
            .iter()
            .zip(&self.omega)
            .map(|(term, w)| {
                w * match term {
                    Term::Intercept => 1.0,
                    Term::X1 => x1,
                    Term::X2 => x2,
                    Term::Confounder => c,
                    Term::Outcome => t,
                    Term::X1TimesOutcome => x1 * t,
                    Term::X2TimesOutcome => x2 * t,
                    Term::ConfounderTimesOutcome => c * t,
                }
            })
            .sum();
        expit(eta)
    }
}

fn check_setting(frame: &AnalysisFrame, setting: Setting) -> Result<()> {
    match frame.setting {
        Some(s) if s == setting => Ok(()),
        other => Err(Error::SettingMismatch {
            spec: setting.as_str().into(),
            frame: other.map(|s| s.as_str()).unwrap_or("unspecified").into(),
        }),
    }
}

/// Per-row observation probabilities under `spec`, evaluated on the shadow
/// truth.
pub fn observation_probabilities(frame: &AnalysisFrame, spec: &ObservationModelSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    check_setting(frame, spec.setting)?;
    let truth = frame.shadow().ok_or(Error::MissingOutcome)?.reveal();
    Ok((0..frame.n())
        .map(|i| spec.probability(frame.x[(i, 0)], frame.x[(i, 1)], frame.z[(i, 1)], truth[i]))
        .collect())
}

/// Draws `R_i ~ Bernoulli(π_i)` and masks the outcome where `R_i = 0`.
/// Covariates and surrogates are left untouched.
pub fn apply_observation_model<R: Rng + ?Sized>(
    mut frame: AnalysisFrame,
    spec: &ObservationModelSpec,
    rng: &mut R,
) -> Result<AnalysisFrame> {
    let probs = observation_probabilities(&frame, spec)?;
    let truth = frame.shadow().ok_or(Error::MissingOutcome)?.reveal().to_vec();
    for (i, p) in probs.iter().enumerate() {
        let observed = rng.random::<f64>() < *p;
        frame.y[i] = observed.then_some(truth[i]);
    }
    Ok(frame)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SurrogateSpec {
    /// `Ŷ = Y + 2 sin(X1² + X2³ + Z1² + Z2²)`.
    DeterministicSin,
    /// `Ŷ = Y + b + e`, `b ~ Exponential(rate λ_pred)`, `e ~ N(0, σ_pred²)`.
    BiasNoise { lambda_pred: f64, sigma_pred: f64 },
    /// Each binary outcome flipped independently with probability `flip_p`.
    LabelFlip { flip_p: f64 },
    /// Logistic model fitted on an independent sample of size `train_n`;
    /// `Ŷ ~ Bernoulli(expit(G β_train))`.
    HeldOutLogistic { train_n: usize },
}

impl SurrogateSpec {
    pub fn kind_str(&self) -> &'static str {
        match self {
            SurrogateSpec::DeterministicSin => "deterministic_sin",
            SurrogateSpec::BiasNoise { .. } => "bias_noise",
            SurrogateSpec::LabelFlip { .. } => "label_flip",
            SurrogateSpec::HeldOutLogistic { .. } => "held_out_logistic",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SurrogateSpec::DeterministicSin => Ok(()),
            SurrogateSpec::BiasNoise {
                lambda_pred,
                sigma_pred,
            } => {
                if !(lambda_pred > 0.0 && lambda_pred.is_finite()) || !(sigma_pred >= 0.0 && sigma_pred.is_finite()) {
                    Err(Error::Config(
                        "bias_noise needs lambda_pred > 0 and sigma_pred >= 0".into(),
                    ))
                } else {
                    Ok(())
                }
            }
            SurrogateSpec::LabelFlip { flip_p } => {
                if (0.0..=1.0).contains(&flip_p) {
                    Ok(())
                } else {
                    Err(Error::Config("flip_p must lie in [0, 1]".into()))
                }
            }
            SurrogateSpec::HeldOutLogistic { train_n } => {
                if train_n < 10 {
                    Err(Error::Config("train_n must be at least 10".into()))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn compatible_with(&self, kind: OutcomeKind) -> bool {
        match self {
            SurrogateSpec::DeterministicSin | SurrogateSpec::BiasNoise { .. } => kind == OutcomeKind::Continuous,
            SurrogateSpec::LabelFlip { .. } | SurrogateSpec::HeldOutLogistic { .. } => kind == OutcomeKind::Binary,
        }
    }
}

/// Attaches `Ŷ` to every row, built from the shadow truth. `params` supplies
/// the generating family for the held-out design.
pub fn make_surrogate<R: Rng + ?Sized>(
    frame: AnalysisFrame,
    spec: &SurrogateSpec,
    params: &DgpParams,
    rng: &mut R,
) -> Result<AnalysisFrame> {
    spec.validate()?;
    if !spec.compatible_with(frame.kind) {
        return Err(Error::IncompatibleSurrogate {
            kind: spec.kind_str().into(),
            family: format!("{:?}", frame.kind).to_lowercase(),
        });
    }
    let truth = frame.shadow().ok_or(Error::MissingOutcome)?.reveal().to_vec();
    let n = frame.n();
    let yhat: Vec<f64> = match *spec {
        SurrogateSpec::DeterministicSin => {
            let latent = frame
                .latent_z
                .as_ref()
                .ok_or_else(|| Error::InvalidInput("deterministic_sin needs latent (Z1, Z2)".into()))?;
            (0..n)
                .map(|i| {
                    let (x1, x2) = (frame.x[(i, 0)], frame.x[(i, 1)]);
                    let (z1, z2) = (latent[(i, 0)], latent[(i, 1)]);
                    truth[i] + 2.0 * (x1 * x1 + x2 * x2 * x2 + z1 * z1 + z2 * z2).sin()
                })
                .collect()
        }
        SurrogateSpec::BiasNoise {
            lambda_pred,
            sigma_pred,
        } => {
            let b = Exp::new(lambda_pred).map_err(|e| Error::Config(e.to_string()))?;
            let e = Normal::new(0.0, sigma_pred).map_err(|e| Error::Config(e.to_string()))?;
            (0..n).map(|i| truth[i] + b.sample(rng) + e.sample(rng)).collect()
        }
        SurrogateSpec::LabelFlip { flip_p } => (0..n)
            .map(|i| {
                if rng.random::<f64>() < flip_p {
                    1.0 - truth[i]
                } else {
                    truth[i]
                }
            })
            .collect(),
        SurrogateSpec::HeldOutLogistic { train_n } => {
            let train = gen_dataset(params, train_n, rng)?;
            let g_train = train.design()?;
            let y_train = train.shadow().ok_or(Error::MissingOutcome)?.reveal().to_vec();
            let fit = fit_logistic(&g_train, &y_train, &vec![1.0; train_n])?;
            let g = DesignMatrix::build(&frame.x, &frame.z)?;
            let eta = g.matrix() * &fit.beta;
            eta.iter()
                .map(|e| f64::from(u8::from(rng.random::<f64>() < expit(*e))))
                .collect()
        }
    };
    frame.with_yhat(yhat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn noiseless_null_is_constant() {
        let mut p = DgpParams::new(Setting::LinearContinuous);
        p.sigma = 0.0;
        p.beta_truth = [1.7, 0.0, 0.0, 0.0, 0.0];
        let f = gen_dataset(&p, 50, &mut rng(1)).unwrap();
        assert!(f.y.iter().all(|v| *v == Some(1.7)));
    }

    #[test]
    fn dummy_confounders_are_quadrant_indicators() {
        let p = DgpParams::new(Setting::LinearDummy);
        let f = gen_dataset(&p, 500, &mut rng(2)).unwrap();
        let latent = f.latent_z.as_ref().unwrap();
        for i in 0..f.n() {
            let (z1, z2) = (latent[(i, 0)], latent[(i, 1)]);
            assert_eq!(f.z[(i, 0)], f64::from(u8::from(z1 < 0.0 && z2 < 0.0)));
            assert_eq!(f.z[(i, 1)], f64::from(u8::from(z1 > 0.0 && z2 > 0.0)));
            assert!(f.z[(i, 0)] * f.z[(i, 1)] == 0.0);
        }
    }

    #[test]
    fn logistic_null_mean_is_half() {
        let mut p = DgpParams::new(Setting::Logistic);
        p.beta_truth = [0.0; 5];
        let f = gen_dataset(&p, 100_000, &mut rng(3)).unwrap();
        let mean = f.y.iter().flatten().sum::<f64>() / 100_000.0;
        assert!((mean - 0.5).abs() < 0.01, "{mean}");
    }

    #[test]
    fn invalid_params_rejected() {
        let mut p = DgpParams::new(Setting::Logistic);
        p.rho = 1.0;
        assert!(gen_dataset(&p, 10, &mut rng(0)).is_err());
        let mut p = DgpParams::new(Setting::Logistic);
        p.lambda_nu = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let p = DgpParams::new(Setting::LinearContinuous).with_effects(0.1, 0.1);
        let a = gen_dataset(&p, 200, &mut rng(9)).unwrap();
        let b = gen_dataset(&p, 200, &mut rng(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mar_probabilities_match_logistic_evaluation() {
        let mar1 = ObservationModelSpec::standard(Mechanism::Mar1, Setting::LinearContinuous);
        assert!((mar1.probability(0.3, 0.7, 0.0, 5.0) - 0.15447).abs() < 1e-5);
        let mar2 = ObservationModelSpec::standard(Mechanism::Mar2, Setting::LinearContinuous);
        assert!((mar2.probability(0.0, 0.7, 0.0, 5.0) - 0.11920).abs() < 1e-5);
    }

    #[test]
    fn omega_lengths_match_terms() {
        for s in [Setting::LinearContinuous, Setting::LinearDummy, Setting::Logistic] {
            for m in Mechanism::ALL {
                ObservationModelSpec::standard(m, s).validate().unwrap();
            }
        }
    }

    #[test]
    fn interaction_only_acts_where_term_nonzero() {
        for m in [Mechanism::Mnar5, Mechanism::Mnar6, Mechanism::Mnar7] {
            let spec = ObservationModelSpec::standard(m, Setting::LinearContinuous);
            let mut no_inter = spec.clone();
            *no_inter.omega.last_mut().unwrap() = 0.0;
            // outcome term zero: interaction cannot matter
            assert_eq!(
                spec.probability(0.4, -0.3, 0.8, 0.2),
                no_inter.probability(0.4, -0.3, 0.8, 0.2)
            );
            // interacting covariate zero
            let (x1, x2, c) = match m {
                Mechanism::Mnar5 => (0.0, 0.5, 0.5),
                Mechanism::Mnar6 => (0.5, 0.0, 0.5),
                _ => (0.5, 0.5, 0.0),
            };
            assert_eq!(spec.probability(x1, x2, c, 2.0), no_inter.probability(x1, x2, c, 2.0));
            assert_ne!(
                spec.probability(0.5, 0.5, 0.5, 2.0),
                no_inter.probability(0.5, 0.5, 0.5, 2.0)
            );
        }
    }

    #[test]
    fn mcar_fraction_near_a_fifth() {
        let p = DgpParams::new(Setting::LinearContinuous);
        let mut r = rng(4);
        let f = gen_dataset(&p, 10_000, &mut r).unwrap();
        let spec = ObservationModelSpec::standard(Mechanism::Mcar, Setting::LinearContinuous);
        let f = apply_observation_model(f, &spec, &mut r).unwrap();
        let frac = f.n_observed() as f64 / 10_000.0;
        assert!((frac - 0.2).abs() < 0.02, "{frac}");
    }

    #[test]
    fn setting_mismatch_is_an_error() {
        let p = DgpParams::new(Setting::LinearDummy);
        let mut r = rng(5);
        let f = gen_dataset(&p, 10, &mut r).unwrap();
        let spec = ObservationModelSpec::standard(Mechanism::Mar1, Setting::LinearContinuous);
        assert!(matches!(
            apply_observation_model(f, &spec, &mut r),
            Err(Error::SettingMismatch { .. })
        ));
    }

    #[test]
    fn masking_preserves_covariates_and_surrogate() {
        let p = DgpParams::new(Setting::LinearContinuous);
        let mut r = rng(6);
        let f = gen_dataset(&p, 300, &mut r).unwrap();
        let f = make_surrogate(f, &SurrogateSpec::DeterministicSin, &p, &mut r).unwrap();
        let before = f.clone();
        let spec = ObservationModelSpec::standard(Mechanism::Mnar4, Setting::LinearContinuous);
        let after = apply_observation_model(f, &spec, &mut r).unwrap();
        assert_eq!(before.x, after.x);
        assert_eq!(before.z, after.z);
        assert_eq!(before.yhat, after.yhat);
        assert!(after.n_observed() < 300);
        for i in 0..300 {
            if let Some(v) = after.y[i] {
                assert_eq!(Some(v), before.y[i]);
            }
        }
    }

    #[test]
    fn sin_surrogate_at_origin() {
        let x = DMatrix::zeros(1, 2);
        let z = DMatrix::zeros(1, 2);
        let mut f = AnalysisFrame::new(OutcomeKind::Continuous, x, z, vec![Some(1.0)]).unwrap();
        f.latent_z = Some(DMatrix::zeros(1, 2));
        f.set_shadow(vec![1.0]);
        let p = DgpParams::new(Setting::LinearContinuous);
        let f = make_surrogate(f, &SurrogateSpec::DeterministicSin, &p, &mut rng(0)).unwrap();
        assert_eq!(f.yhat.unwrap()[0], 1.0);
    }

    #[test]
    fn zero_flip_is_identity() {
        let p = DgpParams::new(Setting::Logistic);
        let mut r = rng(7);
        let f = gen_dataset(&p, 400, &mut r).unwrap();
        let f = make_surrogate(f, &SurrogateSpec::LabelFlip { flip_p: 0.0 }, &p, &mut r).unwrap();
        let truth = f.shadow().unwrap().reveal();
        assert_eq!(f.yhat.as_deref().unwrap(), truth);
    }

    #[test]
    fn bias_noise_mean_is_inverse_rate() {
        let p = DgpParams::new(Setting::LinearContinuous);
        let mut r = rng(8);
        let f = gen_dataset(&p, 100_000, &mut r).unwrap();
        let spec = SurrogateSpec::BiasNoise {
            lambda_pred: 2.0,
            sigma_pred: 0.0,
        };
        let f = make_surrogate(f, &spec, &p, &mut r).unwrap();
        let truth = f.shadow().unwrap().reveal();
        let d: f64 = f
            .yhat
            .as_ref()
            .unwrap()
            .iter()
            .zip(truth)
            .map(|(a, b)| a - b)
            .sum::<f64>()
            / 100_000.0;
        assert!((d - 0.5).abs() < 0.01, "{d}");
    }

    #[test]
    fn incompatible_surrogates_rejected() {
        let pl = DgpParams::new(Setting::LinearContinuous);
        let mut r = rng(9);
        let f = gen_dataset(&pl, 20, &mut r).unwrap();
        assert!(matches!(
            make_surrogate(f, &SurrogateSpec::LabelFlip { flip_p: 0.1 }, &pl, &mut r),
            Err(Error::IncompatibleSurrogate { .. })
        ));
        let pb = DgpParams::new(Setting::Logistic);
        let f = gen_dataset(&pb, 20, &mut r).unwrap();
        let spec = SurrogateSpec::BiasNoise {
            lambda_pred: 1.0,
            sigma_pred: 1.0,
        };
        assert!(matches!(
            make_surrogate(f, &spec, &pb, &mut r),
            Err(Error::IncompatibleSurrogate { .. })
        ));
    }

    #[test]
    fn held_out_logistic_is_binary() {
        let p = DgpParams::new(Setting::Logistic).with_effects(0.5, 0.5);
        let mut r = rng(10);
        let f = gen_dataset(&p, 500, &mut r).unwrap();
        let f = make_surrogate(f, &SurrogateSpec::HeldOutLogistic { train_n: 2000 }, &p, &mut r).unwrap();
        assert!(f.yhat.unwrap().iter().all(|v| *v == 0.0 || *v == 1.0));
    }
}
