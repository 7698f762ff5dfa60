//! Model structure: baseline-family choices and covariate subsets per cause,
//! plus the flat parameter layout that maps a [`ParameterVector`] onto the
//! scalar blocks used by the sampler and the draw archive.

use crate::hazard::{
    Baseline, CauseModel, HazardError, ParameterVector, PiecewiseConstantBaseline, WeibullBaseline,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model must have at least one cause")]
    NoCauses,
    #[error("cause {cause}: {source}")]
    Baseline { cause: usize, source: HazardError },
    #[error("flat parameter vector has length {got}, layout expects {expected}")]
    LengthMismatch { expected: usize, got: usize },
}

/// Baseline-hazard family choice for one cause.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum BaselineFamily {
    /// Weibull; `fixed_shape` pins α (e.g. 1.0 for an exponential baseline)
    /// so the sampler treats only the rate as free.
    Weibull {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        fixed_shape: Option<f64>,
    },
    Piecewise { knots: Vec<f64> },
}

impl BaselineFamily {
    pub fn weibull() -> Self {
        BaselineFamily::Weibull { fixed_shape: None }
    }

    /// Constant-hazard (exponential) baseline: Weibull with α fixed at 1.
    pub fn exponential() -> Self {
        BaselineFamily::Weibull { fixed_shape: Some(1.0) }
    }

    pub fn piecewise(knots: Vec<f64>) -> Self {
        BaselineFamily::Piecewise { knots }
    }
}

/// Structural model specification: K causes, a baseline family per cause and
/// the encoded-covariate subset entering each cause's linear predictor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub baselines: Vec<BaselineFamily>,
    /// Per cause: indices into the encoded covariate columns.
    pub covariates: Vec<Vec<usize>>,
}

impl ModelSpec {
    pub fn new(baselines: Vec<BaselineFamily>, covariates: Vec<Vec<usize>>) -> Result<Self, ModelError> {
        if baselines.is_empty() || baselines.len() != covariates.len() {
            return Err(ModelError::NoCauses);
        }
        Ok(Self { baselines, covariates })
    }

    pub fn n_causes(&self) -> usize {
        self.baselines.len()
    }

    /// A valid parameter vector with neutral values: β = 0, Weibull α = 1,
    /// all rates/levels = 1.
    pub fn template(&self) -> Result<ParameterVector, ModelError> {
        let causes = self
            .baselines
            .iter()
            .zip(&self.covariates)
            .enumerate()
            .map(|(cause, (fam, cov))| {
                let baseline = match fam {
                    BaselineFamily::Weibull { fixed_shape } => Baseline::Weibull(
                        WeibullBaseline::new(fixed_shape.unwrap_or(1.0), 1.0)
                            .map_err(|source| ModelError::Baseline { cause, source })?,
                    ),
                    BaselineFamily::Piecewise { knots } => Baseline::Piecewise(
                        PiecewiseConstantBaseline::new(knots.clone(), vec![1.0; knots.len()])
                            .map_err(|source| ModelError::Baseline { cause, source })?,
                    ),
                };
                Ok(CauseModel {
                    baseline,
                    coefficients: vec![0.0; cov.len()],
                    covariate_subset: cov.clone(),
                })
            })
            .collect::<Result<Vec<_>, ModelError>>()?;
        Ok(ParameterVector { causes })
    }

    pub fn layout(&self) -> ParameterLayout {
        let mut params = Vec::new();
        for (cause, (fam, cov)) in self.baselines.iter().zip(&self.covariates).enumerate() {
            match fam {
                BaselineFamily::Weibull { fixed_shape } => {
                    if fixed_shape.is_none() {
                        params.push(ParamId { cause, kind: ParamKind::WeibullShape });
                    }
                    params.push(ParamId { cause, kind: ParamKind::WeibullRate });
                }
                BaselineFamily::Piecewise { knots } => {
                    for r in 0..knots.len() {
                        params.push(ParamId { cause, kind: ParamKind::PiecewiseLevel(r) });
                    }
                }
            }
            for j in 0..cov.len() {
                params.push(ParamId { cause, kind: ParamKind::Coefficient(j) });
            }
        }
        ParameterLayout { params }
    }
}

/// Identity of one scalar parameter within a [`ParameterVector`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamId {
    pub cause: usize,
    pub kind: ParamKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParamKind {
    WeibullShape,
    WeibullRate,
    /// 0-based interval index.
    PiecewiseLevel(usize),
    /// 0-based position within the cause's covariate subset.
    Coefficient(usize),
}

impl ParamKind {
    /// Positivity-constrained parameters are sampled on the log scale and
    /// averaged geometrically for plug-in estimates.
    pub fn is_positive(&self) -> bool {
        matches!(
            self,
            ParamKind::WeibullShape | ParamKind::WeibullRate | ParamKind::PiecewiseLevel(_)
        )
    }
}

/// Flat ordering of the free scalar parameters of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterLayout {
    pub params: Vec<ParamId>,
}

impl ParameterLayout {
    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn get(&self, theta: &ParameterVector, idx: usize) -> f64 {
        let id = self.params[idx];
        let cm = &theta.causes[id.cause];
        match id.kind {
            ParamKind::WeibullShape => match &cm.baseline {
                Baseline::Weibull(w) => w.shape,
                Baseline::Piecewise(_) => unreachable!("layout/parameter mismatch"),
            },
            ParamKind::WeibullRate => match &cm.baseline {
                Baseline::Weibull(w) => w.rate,
                Baseline::Piecewise(_) => unreachable!("layout/parameter mismatch"),
            },
            ParamKind::PiecewiseLevel(r) => match &cm.baseline {
                Baseline::Piecewise(p) => p.levels[r],
                Baseline::Weibull(_) => unreachable!("layout/parameter mismatch"),
            },
            ParamKind::Coefficient(j) => cm.coefficients[j],
        }
    }

    pub fn set(&self, theta: &mut ParameterVector, idx: usize, value: f64) {
        let id = self.params[idx];
        let cm = &mut theta.causes[id.cause];
        match id.kind {
            ParamKind::WeibullShape => match &mut cm.baseline {
                Baseline::Weibull(w) => w.shape = value,
                Baseline::Piecewise(_) => unreachable!("layout/parameter mismatch"),
            },
            ParamKind::WeibullRate => match &mut cm.baseline {
                Baseline::Weibull(w) => w.rate = value,
                Baseline::Piecewise(_) => unreachable!("layout/parameter mismatch"),
            },
            ParamKind::PiecewiseLevel(r) => match &mut cm.baseline {
                Baseline::Piecewise(p) => p.levels[r] = value,
                Baseline::Weibull(_) => unreachable!("layout/parameter mismatch"),
            },
            ParamKind::Coefficient(j) => cm.coefficients[j] = value,
        }
    }

    pub fn flatten(&self, theta: &ParameterVector) -> Vec<f64> {
        (0..self.len()).map(|i| self.get(theta, i)).collect()
    }

    /// Rebuild a parameter vector from flat values, using `template` for the
    /// structure and any fixed parameters.
    pub fn unflatten(
        &self,
        template: &ParameterVector,
        values: &[f64],
    ) -> Result<ParameterVector, ModelError> {
        if values.len() != self.len() {
            return Err(ModelError::LengthMismatch { expected: self.len(), got: values.len() });
        }
        let mut theta = template.clone();
        for (i, &v) in values.iter().enumerate() {
            self.set(&mut theta, i, v);
        }
        Ok(theta)
    }

    /// Human-readable parameter names, e.g. `cv.shape`, `cv.level3`,
    /// `cv.beta.age`. `cause_labels` and `column_names` come from the dataset.
    pub fn names(&self, spec: &ModelSpec, cause_labels: &[String], column_names: &[String]) -> Vec<String> {
        self.params
            .iter()
            .map(|id| {
                let label = cause_labels
                    .get(id.cause)
                    .cloned()
                    .unwrap_or_else(|| format!("cause{}", id.cause + 1));
                match id.kind {
                    ParamKind::WeibullShape => format!("{label}.shape"),
                    ParamKind::WeibullRate => format!("{label}.rate"),
                    ParamKind::PiecewiseLevel(r) => format!("{label}.level{}", r + 1),
                    ParamKind::Coefficient(j) => {
                        let col = spec.covariates[id.cause][j];
                        let name = column_names
                            .get(col)
                            .cloned()
                            .unwrap_or_else(|| format!("x{col}"));
                        format!("{label}.beta.{name}")
                    }
                }
            })
            .collect()
    }
}
