//! Prior specifications and log-prior densities for all parameter blocks.
//!
//! Normal priors for regression coefficients are parameterized by precision
//! by default: `NormalPrecision(0, 0.001)` means variance 1000. A variance
//! parameterization is available for configurations that want the other
//! reading; the choice is surfaced in the CLI config as
//! `parameterization = precision|variance`.
//!
//! Piecewise-level priors come in three flavors: independent Gamma per level,
//! interval-width-scaled Gamma (level r gets
//! Gamma(ω₀·η₀·(a_r − a_{r−1}), ω₀·(a_r − a_{r−1}))), and a first-order
//! autoregressive chain γ_r | γ_{r−1} ~ Gamma(η₀, η₀/γ_{r−1}). The open last
//! interval reuses the width of the preceding finite interval.

use crate::hazard::{Baseline, ParameterVector};
use crate::model::{BaselineFamily, ModelSpec};
use rand::Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// A univariate prior for one scalar parameter block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ScalarPrior {
    NormalPrecision { mean: f64, precision: f64 },
    NormalVariance { mean: f64, variance: f64 },
    GammaShapeRate { shape: f64, rate: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl ScalarPrior {
    pub fn log_density(&self, x: f64) -> f64 {
        match *self {
            ScalarPrior::NormalPrecision { mean, precision } => {
                0.5 * (precision.ln() - LN_2PI) - 0.5 * precision * (x - mean) * (x - mean)
            }
            ScalarPrior::NormalVariance { mean, variance } => {
                -0.5 * (LN_2PI + variance.ln()) - (x - mean) * (x - mean) / (2.0 * variance)
            }
            ScalarPrior::GammaShapeRate { shape, rate } => {
                if x <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
                }
            }
            ScalarPrior::Uniform { lo, hi } => {
                if x < lo || x > hi {
                    f64::NEG_INFINITY
                } else {
                    -(hi - lo).ln()
                }
            }
        }
    }

    /// Density of U = ln X: log f(e^u) + u, evaluated without forming e^u
    /// where that would underflow. Heavy-left-tailed gammas (e.g.
    /// Gamma(0.01, 0.01)) carry visible mass below the smallest positive
    /// f64, so log-scale quadrature must use this form.
    pub fn log_density_at_log(&self, u: f64) -> f64 {
        match *self {
            ScalarPrior::GammaShapeRate { shape, rate } => {
                shape * rate.ln() - ln_gamma(shape) + shape * u - rate * u.exp()
            }
            _ => self.log_density(u.exp()) + u,
        }
    }

    /// Hard support bounds (used by proposal transforms and initialization).
    pub fn support(&self) -> (f64, f64) {
        match *self {
            ScalarPrior::NormalPrecision { .. } | ScalarPrior::NormalVariance { .. } => {
                (f64::NEG_INFINITY, f64::INFINITY)
            }
            ScalarPrior::GammaShapeRate { .. } => (0.0, f64::INFINITY),
            ScalarPrior::Uniform { lo, hi } => (lo, hi),
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            ScalarPrior::NormalPrecision { mean, precision } => {
                rand_distr::Normal::new(mean, (1.0 / precision).sqrt())
                    .expect("valid normal")
                    .sample(rng)
            }
            ScalarPrior::NormalVariance { mean, variance } => {
                rand_distr::Normal::new(mean, variance.sqrt())
                    .expect("valid normal")
                    .sample(rng)
            }
            ScalarPrior::GammaShapeRate { shape, rate } => {
                rand_distr::Gamma::new(shape, 1.0 / rate)
                    .expect("valid gamma")
                    .sample(rng)
            }
            ScalarPrior::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match *self {
            ScalarPrior::NormalPrecision { precision, .. } if !(precision > 0.0) => {
                Err(format!("normal precision must be positive, got {precision}"))
            }
            ScalarPrior::NormalVariance { variance, .. } if !(variance > 0.0) => {
                Err(format!("normal variance must be positive, got {variance}"))
            }
            ScalarPrior::GammaShapeRate { shape, rate } if !(shape > 0.0 && rate > 0.0) => {
                Err(format!("gamma shape/rate must be positive, got ({shape}, {rate})"))
            }
            ScalarPrior::Uniform { lo, hi } if !(lo < hi) => {
                Err(format!("uniform bounds must satisfy lo < hi, got ({lo}, {hi})"))
            }
            _ => Ok(()),
        }
    }
}

/// Joint prior over the levels of one piecewise baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LevelsPrior {
    /// Independent `prior` per level.
    Independent { prior: ScalarPrior },
    /// Level r ~ Gamma(ω₀·η₀·w_r, ω₀·w_r) with w_r the interval width.
    IntervalScaled { omega0: f64, eta0: f64 },
    /// γ₁ ~ `first`; γ_r | γ_{r−1} ~ Gamma(η₀, η₀/γ_{r−1}).
    Autoregressive { eta0: f64, first: ScalarPrior },
}

impl LevelsPrior {
    /// Interval-scaled prior with ω₀ = 0.01 and η₀ = ln(2)/median-survival,
    /// so the prior mean hazard matches the given median survival time.
    pub fn interval_scaled_for_median(median_survival: f64) -> Self {
        LevelsPrior::IntervalScaled { omega0: 0.01, eta0: 0.693_15 / median_survival }
    }

    /// Autoregressive prior with η₀ = 0.01 and a Gamma(0.01, 0.01) first level.
    pub fn autoregressive_default() -> Self {
        LevelsPrior::Autoregressive {
            eta0: 0.01,
            first: ScalarPrior::GammaShapeRate { shape: 0.01, rate: 0.01 },
        }
    }

    /// Interval widths used by the width-scaled prior; the open last interval
    /// reuses the preceding finite width (1.0 when there is a single level).
    pub fn widths(knots: &[f64]) -> Vec<f64> {
        let r = knots.len();
        let mut w: Vec<f64> = knots.windows(2).map(|k| k[1] - k[0]).collect();
        let last = w.last().copied().unwrap_or(1.0);
        w.push(last);
        debug_assert_eq!(w.len(), r);
        w
    }

    pub fn log_density(&self, knots: &[f64], levels: &[f64]) -> f64 {
        match self {
            LevelsPrior::Independent { prior } => {
                levels.iter().map(|&g| prior.log_density(g)).sum()
            }
            LevelsPrior::IntervalScaled { omega0, eta0 } => {
                let widths = Self::widths(knots);
                levels
                    .iter()
                    .zip(widths)
                    .map(|(&g, w)| {
                        ScalarPrior::GammaShapeRate {
                            shape: omega0 * eta0 * w,
                            rate: omega0 * w,
                        }
                        .log_density(g)
                    })
                    .sum()
            }
            LevelsPrior::Autoregressive { eta0, first } => {
                let mut acc = first.log_density(levels[0]);
                for r in 1..levels.len() {
                    acc += ScalarPrior::GammaShapeRate {
                        shape: *eta0,
                        rate: eta0 / levels[r - 1],
                    }
                    .log_density(levels[r]);
                }
                acc
            }
        }
    }

    pub fn sample<R: Rng>(&self, knots: &[f64], rng: &mut R) -> Vec<f64> {
        match self {
            LevelsPrior::Independent { prior } => {
                (0..knots.len()).map(|_| prior.sample(rng)).collect()
            }
            LevelsPrior::IntervalScaled { omega0, eta0 } => Self::widths(knots)
                .into_iter()
                .map(|w| {
                    ScalarPrior::GammaShapeRate { shape: omega0 * eta0 * w, rate: omega0 * w }
                        .sample(rng)
                })
                .collect(),
            LevelsPrior::Autoregressive { eta0, first } => {
                let mut out = Vec::with_capacity(knots.len());
                out.push(first.sample(rng));
                for r in 1..knots.len() {
                    let prev = out[r - 1];
                    out.push(
                        ScalarPrior::GammaShapeRate { shape: *eta0, rate: eta0 / prev }
                            .sample(rng),
                    );
                }
                out
            }
        }
    }
}

/// Prior over one cause's baseline parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "baseline", rename_all = "snake_case")]
pub enum BaselinePrior {
    Weibull { shape: ScalarPrior, rate: ScalarPrior },
    Piecewise { levels: LevelsPrior },
}

/// Priors for one cause: baseline block plus an iid prior over that cause's
/// regression coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausePrior {
    pub baseline: BaselinePrior,
    pub coefficient: ScalarPrior,
}

/// Full prior specification; independent across causes and blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub per_cause: Vec<CausePrior>,
}

/// The default noninformative priors: β ~ NormalPrecision(0, 0.001)
/// (variance 1000), Weibull rate ~ Gamma(0.01, 0.01), Weibull shape
/// ~ Uniform(0, 10), piecewise levels ~ iid Gamma(0.01, 0.01).
pub fn default_priors(spec: &ModelSpec) -> PriorSpec {
    let per_cause = spec
        .baselines
        .iter()
        .map(|fam| CausePrior {
            baseline: match fam {
                BaselineFamily::Weibull { .. } => BaselinePrior::Weibull {
                    shape: ScalarPrior::Uniform { lo: 0.0, hi: 10.0 },
                    rate: ScalarPrior::GammaShapeRate { shape: 0.01, rate: 0.01 },
                },
                BaselineFamily::Piecewise { .. } => BaselinePrior::Piecewise {
                    levels: LevelsPrior::Independent {
                        prior: ScalarPrior::GammaShapeRate { shape: 0.01, rate: 0.01 },
                    },
                },
            },
            coefficient: ScalarPrior::NormalPrecision { mean: 0.0, precision: 0.001 },
        })
        .collect();
    PriorSpec { per_cause }
}

/// Joint log-prior density of a parameter vector; −∞ outside support.
pub fn log_prior_density(priors: &PriorSpec, theta: &ParameterVector) -> f64 {
    debug_assert_eq!(priors.per_cause.len(), theta.causes.len());
    let mut acc = 0.0;
    for (cp, cm) in priors.per_cause.iter().zip(&theta.causes) {
        match (&cp.baseline, &cm.baseline) {
            (BaselinePrior::Weibull { shape, rate }, Baseline::Weibull(w)) => {
                acc += shape.log_density(w.shape) + rate.log_density(w.rate);
            }
            (BaselinePrior::Piecewise { levels }, Baseline::Piecewise(p)) => {
                acc += levels.log_density(&p.knots, &p.levels);
            }
            _ => return f64::NEG_INFINITY,
        }
        for &b in &cm.coefficients {
            acc += cp.coefficient.log_density(b);
        }
        if acc == f64::NEG_INFINITY {
            return acc;
        }
    }
    acc
}
