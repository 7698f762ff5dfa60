//! Synthetic competing-risks data generation and brute-force oracles.
//!
//! Event times are drawn by inverting the total cumulative hazard at an
//! Exp(1) deviate (closed form when all baselines are Weibull with a common
//! shape or all piecewise; bisection to 1e-10 otherwise), then the cause is
//! assigned categorically with probabilities h_k(T|x)/Σ_j h_j(T|x). Censoring
//! is the earlier of an administrative cutoff and an independent uniform
//! censoring time, when configured.

use crate::data::{
    CovariateKind, CovariateSchema, Dataset, DataError, EventStatus, SchemaEntry, SubjectRecord,
};
use crate::hazard::{Baseline, HazardError, ParameterVector};
use crate::model::ModelSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimulateError {
    #[error("invalid censoring: {0}")]
    BadCensoring(String),
    #[error("truth does not match model: {0}")]
    TruthMismatch(String),
    #[error("total hazard does not reach the target (improper hazard with no censoring bound)")]
    ImproperHazard,
    #[error("tail integration did not converge")]
    NonConvergentTail,
    #[error(transparent)]
    Hazard(#[from] HazardError),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Covariate generator for one encoded column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CovariateGenerator {
    StandardNormal { name: String },
    Bernoulli { name: String, p: f64 },
}

impl CovariateGenerator {
    fn schema_entry(&self) -> SchemaEntry {
        match self {
            CovariateGenerator::StandardNormal { name } => SchemaEntry {
                name: name.clone(),
                kind: CovariateKind::Continuous { standardization: None },
            },
            CovariateGenerator::Bernoulli { name, .. } => {
                SchemaEntry { name: name.clone(), kind: CovariateKind::Binary }
            }
        }
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            CovariateGenerator::StandardNormal { .. } => StandardNormal.sample(rng),
            CovariateGenerator::Bernoulli { p, .. } => {
                if rng.random::<f64>() < *p {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Censoring mechanism: administrative cutoff and/or independent
/// Uniform(0, max) censoring; the earlier time wins.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Censoring {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub administrative: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniform_max: Option<f64>,
}

impl Censoring {
    fn validate(&self) -> Result<(), SimulateError> {
        if let Some(a) = self.administrative {
            if !(a > 0.0) {
                return Err(SimulateError::BadCensoring(format!(
                    "administrative censoring time must be > 0, got {a}"
                )));
            }
        }
        if let Some(u) = self.uniform_max {
            if !(u > 0.0) {
                return Err(SimulateError::BadCensoring(format!(
                    "uniform censoring bound must be > 0, got {u}"
                )));
            }
        }
        Ok(())
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> Option<f64> {
        let uniform = self.uniform_max.map(|m| m * rng.random::<f64>());
        match (self.administrative, uniform) {
            (Some(a), Some(u)) => Some(a.min(u)),
            (Some(a), None) => Some(a),
            (None, Some(u)) => Some(u),
            (None, None) => None,
        }
    }
}

/// Ground truth for a simulation: model structure, true parameters, covariate
/// generators (one per encoded column) and the censoring mechanism.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthSpec {
    pub model: ModelSpec,
    pub truth: ParameterVector,
    pub covariates: Vec<CovariateGenerator>,
    #[serde(default)]
    pub censoring: Censoring,
}

impl TruthSpec {
    fn validate(&self) -> Result<(), SimulateError> {
        if self.truth.causes.len() != self.model.n_causes() {
            return Err(SimulateError::TruthMismatch(format!(
                "{} causes in truth, {} in model",
                self.truth.causes.len(),
                self.model.n_causes()
            )));
        }
        let p = self.covariates.len();
        for (k, cm) in self.truth.causes.iter().enumerate() {
            cm.validate_covariates(p)
                .map_err(|e| SimulateError::TruthMismatch(format!("cause {k}: {e}")))?;
        }
        self.censoring.validate()
    }

    fn schema(&self) -> Result<CovariateSchema, DataError> {
        CovariateSchema::new(self.covariates.iter().map(|g| g.schema_entry()).collect())
    }
}

/// Total cumulative hazard H(t|x) = Σ_k H_k(t|x).
fn total_cumulative_hazard(theta: &ParameterVector, x: &[f64], t: f64) -> f64 {
    theta
        .causes
        .iter()
        .map(|c| c.baseline.cumulative_hazard_unchecked(t) * c.linear_predictor(x).exp())
        .sum()
}

/// Invert H(·|x) at `target`, using closed forms where the baseline mix
/// allows and bisection to 1e-10 otherwise.
pub fn invert_total_cumulative_hazard(
    theta: &ParameterVector,
    x: &[f64],
    target: f64,
) -> Result<f64, SimulateError> {
    debug_assert!(target > 0.0);

    // All Weibull with a common shape: H(t) = Λ t^α.
    let shapes: Vec<f64> = theta
        .causes
        .iter()
        .filter_map(|c| match &c.baseline {
            Baseline::Weibull(w) => Some(w.shape),
            Baseline::Piecewise(_) => None,
        })
        .collect();
    if shapes.len() == theta.causes.len() && shapes.windows(2).all(|w| w[0] == w[1]) {
        let alpha = shapes[0];
        let scale: f64 = theta
            .causes
            .iter()
            .map(|c| match &c.baseline {
                Baseline::Weibull(w) => w.rate * c.linear_predictor(x).exp(),
                Baseline::Piecewise(_) => unreachable!(),
            })
            .sum();
        return Ok((target / scale).powf(1.0 / alpha));
    }

    // All piecewise: H is piecewise linear; walk the segments.
    let all_piecewise = theta
        .causes
        .iter()
        .all(|c| matches!(c.baseline, Baseline::Piecewise(_)));
    if all_piecewise {
        let mut breaks: Vec<f64> = theta
            .causes
            .iter()
            .flat_map(|c| match &c.baseline {
                Baseline::Piecewise(p) => p.knots.clone(),
                Baseline::Weibull(_) => unreachable!(),
            })
            .collect();
        breaks.sort_by(|a, b| a.total_cmp(b));
        breaks.dedup();
        let slope_at = |t_probe: f64| -> f64 {
            theta
                .causes
                .iter()
                .map(|c| match &c.baseline {
                    Baseline::Piecewise(p) => p.hazard(t_probe) * c.linear_predictor(x).exp(),
                    Baseline::Weibull(_) => unreachable!(),
                })
                .sum()
        };
        let mut acc = 0.0;
        for w in breaks.windows(2) {
            let slope = slope_at(0.5 * (w[0] + w[1]));
            let seg = slope * (w[1] - w[0]);
            if acc + seg >= target {
                return Ok(w[0] + (target - acc) / slope);
            }
            acc += seg;
        }
        let last = *breaks.last().unwrap();
        let slope = slope_at(last + 1.0);
        return Ok(last + (target - acc) / slope);
    }

    // Mixed families: bracket then bisect.
    let mut hi = 1.0;
    while total_cumulative_hazard(theta, x, hi) < target {
        hi *= 2.0;
        if hi > 1e30 {
            return Err(SimulateError::ImproperHazard);
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-10 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if total_cumulative_hazard(theta, x, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Simulate `n` subjects. Deterministic for a given seed: one RNG stream,
/// subjects drawn sequentially.
pub fn simulate_dataset(ts: &TruthSpec, n: usize, seed: u64) -> Result<Dataset, SimulateError> {
    ts.validate()?;
    let schema = ts.schema()?;
    let k = ts.model.n_causes();
    let labels: Vec<String> = (1..=k).map(|i| format!("cause{i}")).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(n);
    for i in 0..n {
        let x: Vec<f64> = ts.covariates.iter().map(|g| g.draw(&mut rng)).collect();
        let target = -(1.0 - rng.random::<f64>()).ln();
        let target = target.max(1e-12);
        let event_time = invert_total_cumulative_hazard(&ts.truth, &x, target)?;
        let event_time = event_time.max(1e-12);

        let hazards: Vec<f64> = ts
            .truth
            .causes
            .iter()
            .map(|c| c.baseline.hazard_unchecked(event_time) * c.linear_predictor(&x).exp())
            .collect();
        let total: f64 = hazards.iter().sum();
        let mut u = rng.random::<f64>() * total;
        let mut cause = k - 1;
        for (j, h) in hazards.iter().enumerate() {
            if u < *h {
                cause = j;
                break;
            }
            u -= h;
        }

        let censor = ts.censoring.draw(&mut rng);
        let (time, status) = match censor {
            Some(c) if c < event_time => (c, EventStatus::Censored),
            _ => (event_time, EventStatus::Event(cause)),
        };
        records.push(SubjectRecord { id: format!("s{}", i + 1), time, status, covariates: x });
    }
    Ok(Dataset::new(records, schema, labels)?)
}

/// Event probabilities P(δ = k | x) = lim_{t→∞} F_k(t|x) by quadrature: the
/// horizon is pushed out until the total cumulative hazard exceeds 40, which
/// bounds the missed tail mass by e⁻⁴⁰.
pub fn brute_force_event_probs(ts: &TruthSpec, x: &[f64]) -> Result<Vec<f64>, SimulateError> {
    ts.validate()?;
    let theta = &ts.truth;
    let mut horizon = 1.0;
    while total_cumulative_hazard(theta, x, horizon) < 40.0 {
        horizon *= 2.0;
        if horizon > 1e30 {
            return Err(SimulateError::NonConvergentTail);
        }
    }
    (0..theta.n_causes())
        .map(|k| Ok(theta.cumulative_incidence(x, k, horizon)?))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hazard::{CauseModel, PiecewiseConstantBaseline, WeibullBaseline};
    use crate::model::BaselineFamily;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn constant_truth(rates: &[f64], censoring: Censoring) -> TruthSpec {
        let k = rates.len();
        TruthSpec {
            model: ModelSpec::new(
                vec![BaselineFamily::exponential(); k],
                vec![Vec::new(); k],
            )
            .unwrap(),
            truth: ParameterVector::new(
                rates
                    .iter()
                    .map(|&r| {
                        CauseModel::without_covariates(Baseline::Weibull(
                            WeibullBaseline::new(1.0, r).unwrap(),
                        ))
                    })
                    .collect(),
            )
            .unwrap(),
            covariates: vec![],
            censoring,
        }
    }

    #[test]
    fn cause_fractions_match_hazard_ratio() {
        let ts = constant_truth(&[1.0, 3.0], Censoring::default());
        let d = simulate_dataset(&ts, 10_000, 11).unwrap();
        let c1 = d.events_of(0) as f64 / 10_000.0;
        assert_abs_diff_eq!(c1, 0.25, epsilon = 0.02);
        assert_eq!(d.records.len(), 10_000);
        assert_eq!(
            d.records.iter().filter(|r| r.status == EventStatus::Censored).count(),
            0
        );
    }

    #[test]
    fn administrative_censoring_at_zero_is_rejected() {
        let ts = constant_truth(&[1.0], Censoring { administrative: Some(0.0), uniform_max: None });
        assert!(matches!(
            simulate_dataset(&ts, 10, 1),
            Err(SimulateError::BadCensoring(_))
        ));
    }

    #[test]
    fn weibull_survival_within_dkw_band() {
        // 99% DKW band for n = 10,000: sqrt(ln(2/0.01) / (2n)) ≈ 0.0163
        let n = 10_000;
        let eps = (2.0f64 / 0.01).ln() / (2.0 * n as f64);
        let eps = eps.sqrt();
        let ts = TruthSpec {
            model: ModelSpec::new(vec![BaselineFamily::weibull()], vec![vec![]]).unwrap(),
            truth: ParameterVector::new(vec![CauseModel::without_covariates(Baseline::Weibull(
                WeibullBaseline::new(0.78, 0.012).unwrap(),
            ))])
            .unwrap(),
            covariates: vec![],
            censoring: Censoring::default(),
        };
        for seed in [1u64, 2, 3, 4, 5] {
            let d = simulate_dataset(&ts, n, seed).unwrap();
            let times: Vec<f64> = d.records.iter().map(|r| r.time).collect();
            let dist = crate::stats::ks_distance(&times, |t| {
                1.0 - (-0.012 * t.powf(0.78)).exp()
            });
            assert!(dist < eps, "seed {seed}: KS distance {dist} exceeds DKW band {eps}");
        }
    }

    #[test]
    fn brute_force_probs_closed_forms() {
        let even = constant_truth(&[0.5, 0.5], Censoring::default());
        let p = brute_force_event_probs(&even, &[]).unwrap();
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-7);
        assert_abs_diff_eq!(p[1], 0.5, epsilon = 1e-7);

        let skew = constant_truth(&[1.0, 3.0], Censoring::default());
        let p = brute_force_event_probs(&skew, &[]).unwrap();
        assert_abs_diff_eq!(p[0], 0.25, epsilon = 1e-7);
        assert_abs_diff_eq!(p[1], 0.75, epsilon = 1e-7);
        assert_abs_diff_eq!(p[0] + p[1], 1.0, epsilon = 1e-7);
    }

    #[test]
    fn empirical_frequencies_agree_with_brute_force() {
        let ts = TruthSpec {
            model: ModelSpec::new(
                vec![BaselineFamily::weibull(), BaselineFamily::piecewise(vec![0.0, 1.0])],
                vec![vec![], vec![]],
            )
            .unwrap(),
            truth: ParameterVector::new(vec![
                CauseModel::without_covariates(Baseline::Weibull(
                    WeibullBaseline::new(1.4, 0.6).unwrap(),
                )),
                CauseModel::without_covariates(Baseline::Piecewise(
                    PiecewiseConstantBaseline::new(vec![0.0, 1.0], vec![0.4, 0.8]).unwrap(),
                )),
            ])
            .unwrap(),
            covariates: vec![],
            censoring: Censoring::default(),
        };
        let probs = brute_force_event_probs(&ts, &[]).unwrap();
        let n = 100_000;
        let d = simulate_dataset(&ts, n, 42).unwrap();
        for k in 0..2 {
            let freq = d.events_of(k) as f64 / n as f64;
            assert_abs_diff_eq!(freq, probs[k], epsilon = 0.01);
        }
    }

    #[test]
    fn conditional_cause_frequencies_match_hazard_share() {
        // Different shapes make the hazard share time-dependent.
        let ts = TruthSpec {
            model: ModelSpec::new(
                vec![BaselineFamily::weibull(), BaselineFamily::weibull()],
                vec![vec![], vec![]],
            )
            .unwrap(),
            truth: ParameterVector::new(vec![
                CauseModel::without_covariates(Baseline::Weibull(
                    WeibullBaseline::new(0.8, 0.7).unwrap(),
                )),
                CauseModel::without_covariates(Baseline::Weibull(
                    WeibullBaseline::new(1.6, 0.5).unwrap(),
                )),
            ])
            .unwrap(),
            covariates: vec![],
            censoring: Censoring::default(),
        };
        let d = simulate_dataset(&ts, 50_000, 7).unwrap();
        let share = |t: f64| {
            let h1 = 0.7 * 0.8 * t.powf(-0.2);
            let h2 = 0.5 * 1.6 * t.powf(0.6);
            h1 / (h1 + h2)
        };
        for (lo, hi) in [(0.2, 0.4), (0.5, 0.8), (1.0, 1.5)] {
            let in_bin: Vec<&SubjectRecord> = d
                .records
                .iter()
                .filter(|r| r.time >= lo && r.time < hi)
                .collect();
            assert!(in_bin.len() > 500, "bin [{lo},{hi}) too thin");
            let c1 = in_bin.iter().filter(|r| r.status.is_event_of(0)).count() as f64
                / in_bin.len() as f64;
            assert_abs_diff_eq!(c1, share(0.5 * (lo + hi)), epsilon = 0.05);
        }
    }

    #[test]
    fn inversion_solves_the_total_hazard_equation() {
        // Mixed families exercise the bisection path.
        let theta = ParameterVector::new(vec![
            CauseModel::new(
                Baseline::Weibull(WeibullBaseline::new(1.3, 0.5).unwrap()),
                vec![0.4],
                vec![0],
            )
            .unwrap(),
            CauseModel::without_covariates(Baseline::Piecewise(
                PiecewiseConstantBaseline::new(vec![0.0, 2.0], vec![0.2, 0.6]).unwrap(),
            )),
        ])
        .unwrap();
        let x = [0.5];
        for target in [0.1, 0.7, 2.3, 9.0] {
            let t = invert_total_cumulative_hazard(&theta, &x, target).unwrap();
            assert_relative_eq!(
                total_cumulative_hazard(&theta, &x, t),
                target,
                max_relative = 1e-8
            );
        }
        // All-piecewise closed form.
        let pw = ParameterVector::new(vec![
            CauseModel::without_covariates(Baseline::Piecewise(
                PiecewiseConstantBaseline::new(vec![0.0, 1.0], vec![0.3, 0.9]).unwrap(),
            )),
            CauseModel::without_covariates(Baseline::Piecewise(
                PiecewiseConstantBaseline::new(vec![0.0, 0.5, 1.5], vec![0.1, 0.2, 0.4]).unwrap(),
            )),
        ])
        .unwrap();
        for target in [0.05, 0.3, 1.1, 4.0] {
            let t = invert_total_cumulative_hazard(&pw, &[], target).unwrap();
            assert_relative_eq!(
                total_cumulative_hazard(&pw, &[], t),
                target,
                max_relative = 1e-10
            );
        }
    }

    #[test]
    fn simulated_csv_round_trips_through_ingest() {
        let ts = TruthSpec {
            model: ModelSpec::new(vec![BaselineFamily::weibull()], vec![vec![0, 1]]).unwrap(),
            truth: ParameterVector::new(vec![CauseModel::new(
                Baseline::Weibull(WeibullBaseline::new(1.1, 0.4).unwrap()),
                vec![0.5, -0.3],
                vec![0, 1],
            )
            .unwrap()])
            .unwrap(),
            covariates: vec![
                CovariateGenerator::StandardNormal { name: "age".into() },
                CovariateGenerator::Bernoulli { name: "sex".into(), p: 0.4 },
            ],
            censoring: Censoring { administrative: Some(3.0), uniform_max: None },
        };
        let d = simulate_dataset(&ts, 200, 9).unwrap();
        assert!(d.records.iter().any(|r| r.status == EventStatus::Censored));
        let csv = crate::data::write_csv(&d);
        let doc = crate::data::encoded_document(&d);
        let d2 = crate::data::ingest(&csv, &doc).unwrap();
        assert_eq!(d.records, d2.records);
    }

    #[test]
    fn seed_determinism() {
        let ts = constant_truth(&[0.5, 1.5], Censoring { administrative: Some(2.0), uniform_max: Some(5.0) });
        let a = simulate_dataset(&ts, 100, 77).unwrap();
        let b = simulate_dataset(&ts, 100, 77).unwrap();
        assert_eq!(a.records, b.records);
        let c = simulate_dataset(&ts, 100, 78).unwrap();
        assert_ne!(a.records, c.records);
    }
}
