//! Predefined scenario grids.

use super::SimScenario;
use crate::dgp::{DgpParams, Mechanism, Setting, SurrogateSpec};
use crate::error::{Error, Result};
use crate::estimators::Method;

pub const GRID_NAMES: [&str; 9] = [
    "table_s1",
    "table_s2",
    "table_s3",
    "quality_grid_linear",
    "quality_grid_logistic",
    "thm1_suite",
    "thm1_violations",
    "thm2_suite",
    "thm3_suite",
];

const N: usize = 10_000;
const EFFECT: f64 = 0.1;

fn all_mechanisms() -> [Mechanism; 10] {
    Mechanism::ALL
}

fn linear_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

fn logistic_methods() -> Vec<Method> {
    Method::ALL.iter().copied().filter(|m| *m != Method::SynSurr).collect()
}

fn held_out() -> SurrogateSpec {
    SurrogateSpec::HeldOutLogistic { train_n: N }
}

fn scenario(
    grid: &str,
    setting: Setting,
    mechanism: Mechanism,
    effect: f64,
    surrogate: SurrogateSpec,
    methods: Vec<Method>,
    tag: &str,
) -> SimScenario {
    let arm = if effect == 0.0 { "null" } else { "alt" };
    let name = if tag.is_empty() {
        format!("{grid}/{}/{arm}", mechanism.as_str())
    } else {
        format!("{grid}/{}/{tag}/{arm}", mechanism.as_str())
    };
    let dgp = DgpParams::new(setting).with_effects(effect, effect);
    SimScenario::standard(name, dgp, mechanism, surrogate, N, methods)
}

/// Null and alternative cells for every mechanism.
fn table(grid: &str, setting: Setting, surrogate: SurrogateSpec, methods: Vec<Method>) -> Vec<SimScenario> {
    all_mechanisms()
        .into_iter()
        .flat_map(|m| [0.0, EFFECT].map(|e| scenario(grid, setting, m, e, surrogate.clone(), methods.clone(), "")))
        .collect()
}

/// Scenarios of a named grid. Alternative cells carry a null twin, so the
/// quality grids emit one scenario per (surrogate, mechanism).
pub fn builtin_grids(name: &str) -> Result<Vec<SimScenario>> {
    use Mechanism::*;
    let pb = vec![
        Method::Ppi,
        Method::PpiPp,
        Method::PsPpi,
        Method::PsPpiCca,
        Method::SynSurr,
    ];
    let pb_logistic = vec![Method::Ppi, Method::PpiPp, Method::PsPpi, Method::PsPpiCca];
    let cc = vec![Method::Cca, Method::Wcca, Method::PsPpi, Method::PsPpiCca];
    let out = match name {
        "table_s1" => table(
            name,
            Setting::LinearContinuous,
            SurrogateSpec::DeterministicSin,
            linear_methods(),
        ),
        "table_s2" => table(
            name,
            Setting::LinearDummy,
            SurrogateSpec::DeterministicSin,
            linear_methods(),
        ),
        "table_s3" => table(name, Setting::Logistic, held_out(), logistic_methods()),
        "quality_grid_linear" => {
            let mut v = Vec::new();
            for lambda_pred in [0.2, 2.0] {
                for sigma_pred in [0.2, 2.0] {
                    let s = SurrogateSpec::BiasNoise {
                        lambda_pred,
                        sigma_pred,
                    };
                    let tag = format!("lambda{lambda_pred}_sigma{sigma_pred}");
                    for m in all_mechanisms() {
                        v.push(scenario(
                            name,
                            Setting::LinearContinuous,
                            m,
                            EFFECT,
                            s.clone(),
                            pb.clone(),
                            &tag,
                        ));
                    }
                }
            }
            v
        }
        "quality_grid_logistic" => {
            let mut v = Vec::new();
            for flip_p in [0.05, 0.1, 0.2, 0.5] {
                let s = SurrogateSpec::LabelFlip { flip_p };
                let tag = format!("flip{flip_p}");
                for m in all_mechanisms() {
                    v.push(scenario(
                        name,
                        Setting::Logistic,
                        m,
                        EFFECT,
                        s.clone(),
                        pb_logistic.clone(),
                        &tag,
                    ));
                }
            }
            v
        }
        // β_X = 0 and an observation model free of X.
        "thm1_suite" => [Mcar, Mar1, Mnar1]
            .into_iter()
            .map(|m| {
                scenario(
                    name,
                    Setting::LinearDummy,
                    m,
                    0.0,
                    SurrogateSpec::DeterministicSin,
                    cc.clone(),
                    "",
                )
            })
            .collect(),
        // Same setting with X entering the observation model.
        "thm1_violations" => [Mar2, Mnar2, Mnar4]
            .into_iter()
            .map(|m| {
                scenario(
                    name,
                    Setting::LinearDummy,
                    m,
                    0.0,
                    SurrogateSpec::DeterministicSin,
                    cc.clone(),
                    "",
                )
            })
            .collect(),
        // X1 absent from the model (MNAR1, MNAR3) versus present (MNAR2).
        "thm2_suite" => [Mnar1, Mnar3, Mnar2]
            .into_iter()
            .map(|m| {
                scenario(
                    name,
                    Setting::Logistic,
                    m,
                    0.0,
                    held_out(),
                    vec![Method::Cca, Method::Wcca],
                    "",
                )
            })
            .collect(),
        // Surrogate error independent of R versus dependent on it.
        "thm3_suite" => [
            (
                SurrogateSpec::BiasNoise {
                    lambda_pred: 2.0,
                    sigma_pred: 0.2,
                },
                "bias_noise",
            ),
            (SurrogateSpec::DeterministicSin, "deterministic_sin"),
        ]
        .into_iter()
        .map(|(s, tag)| scenario(name, Setting::LinearDummy, Mnar1, 0.0, s, cc.clone(), tag))
        .collect(),
        other => return Err(Error::UnknownGrid(other.to_string())),
    };
    Ok(out)
}
