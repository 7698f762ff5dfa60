//! Posterior outputs: parameter summaries, profile-based transition
//! probability curves with credible bands, and the nonparametric
//! cumulative-incidence (Aalen–Johansen) estimator.

use crate::data::{CovariateKind, CovariateSchema, Dataset, DataError, EventStatus, ProfileValue};
use crate::hazard::{HazardError, LOG_UNDERFLOW};
use crate::par;
use crate::sampler::PosteriorSample;
use crate::stats;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("posterior sample has no retained draws")]
    EmptySample,
    #[error("invalid grid: {0}")]
    BadGrid(String),
    #[error("profile is incomplete: {0}")]
    Profile(#[from] DataError),
    #[error("{excluded} of {total} draws have zero survival at the conditioning time (> 1%)")]
    ExcludedDraws { excluded: usize, total: usize },
    #[error(transparent)]
    Hazard(#[from] HazardError),
}

/// One row of a posterior summary table.
#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub median: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Posterior summary: mean, sd, median, and central 95% credible interval
/// (empirical 2.5/97.5 percentiles with linear interpolation) per parameter.
#[derive(Debug, Clone, Serialize)]
pub struct SummaryTable {
    pub rows: Vec<SummaryRow>,
}

pub fn posterior_summary(s: &PosteriorSample) -> Result<SummaryTable, OutputError> {
    if s.chains.iter().all(|c| c.draws.is_empty()) {
        return Err(OutputError::EmptySample);
    }
    let rows = (0..s.n_params())
        .map(|j| {
            let mut v = s.pooled(j);
            v.sort_by(|a, b| a.total_cmp(b));
            SummaryRow {
                name: s.names[j].clone(),
                mean: stats::mean(&v),
                sd: stats::sample_sd(&v),
                median: stats::quantile_sorted(&v, 0.5),
                lo: stats::quantile_sorted(&v, 0.025),
                hi: stats::quantile_sorted(&v, 0.975),
            }
        })
        .collect();
    Ok(SummaryTable { rows })
}

impl fmt::Display for SummaryTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(9).max(9);
        writeln!(
            f,
            "{:width$}  {:>9}  {:>9}  {:>9}  {:>20}",
            "parameter", "mean", "sd", "median", "CI 95%"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:width$}  {:>9.3}  {:>9.3}  {:>9.3}  [{:.3}, {:.3}]",
                r.name, r.mean, r.sd, r.median, r.lo, r.hi
            )?;
        }
        Ok(())
    }
}

/// A patient profile on the natural covariate scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub name: String,
    pub values: BTreeMap<String, ProfileValue>,
}

/// Posterior transition-probability curves for one profile and one
/// conditioning time: pointwise mean and central 95% band for staying alive
/// and for each absorbing cause.
#[derive(Debug, Clone, Serialize)]
pub struct CurveSet {
    pub profile: String,
    pub s0: f64,
    pub grid: Vec<f64>,
    /// target 0 is "alive", target k ≥ 1 is cause k.
    pub targets: Vec<CurveBand>,
    /// Draws excluded by the survival-underflow rule at s0.
    pub excluded_draws: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CurveBand {
    pub label: String,
    pub mean: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl CurveSet {
    /// Long-format rows (time, target, mean, lo, hi) for plotting tools.
    pub fn long_rows(&self) -> Vec<(f64, String, f64, f64, f64)> {
        let mut out = Vec::new();
        for band in &self.targets {
            for (j, &t) in self.grid.iter().enumerate() {
                out.push((t, band.label.clone(), band.mean[j], band.lo[j], band.hi[j]));
            }
        }
        out
    }
}

/// Default prediction grid: `points` equally spaced values from s0 to the
/// horizon.
pub fn default_grid(s0: f64, horizon: f64, points: usize) -> Vec<f64> {
    let n = points.max(2);
    (0..n)
        .map(|i| s0 + (horizon - s0) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Encode a profile against the schema, requiring a value for every
/// covariate whose encoded columns the fitted model uses; unused covariates
/// default to the reference/zero.
fn encode_profile_for(
    schema: &CovariateSchema,
    used_columns: &[bool],
    values: &BTreeMap<String, ProfileValue>,
) -> Result<Vec<f64>, DataError> {
    let mut complete = values.clone();
    let mut col = 0usize;
    for e in &schema.entries {
        let width = match &e.kind {
            CovariateKind::Continuous { .. } | CovariateKind::Binary => 1,
            CovariateKind::Categorical { levels, .. } => levels.len() - 1,
        };
        let used = used_columns[col..col + width].iter().any(|&u| u);
        if !used && !complete.contains_key(&e.name) {
            let filler = match &e.kind {
                CovariateKind::Continuous { .. } | CovariateKind::Binary => {
                    ProfileValue::Number(0.0)
                }
                CovariateKind::Categorical { reference, .. } => {
                    ProfileValue::Level(reference.clone())
                }
            };
            complete.insert(e.name.clone(), filler);
        }
        col += width;
    }
    schema.encode_profile(&complete)
}

/// Transition-probability curves for a profile from conditioning time `s0`
/// over `grid`, summarizing every retained draw. With s0 = 0 the curves are
/// the unconditional S(t) and F_k(t).
pub fn predict_profile(
    s: &PosteriorSample,
    schema: &CovariateSchema,
    profile: &Profile,
    grid: &[f64],
    s0: f64,
) -> Result<CurveSet, OutputError> {
    if grid.is_empty() {
        return Err(OutputError::BadGrid("grid is empty".into()));
    }
    if s0 < 0.0 {
        return Err(OutputError::BadGrid(format!("s0 must be nonnegative, got {s0}")));
    }
    let mut prev = s0;
    for &t in grid {
        if t < prev {
            return Err(OutputError::BadGrid(format!(
                "grid must be sorted and start at or after s0 = {s0}"
            )));
        }
        prev = t;
    }

    let mut used = vec![false; schema.encoded_len()];
    for cov in &s.spec.covariates {
        for &j in cov {
            if j < used.len() {
                used[j] = true;
            }
        }
    }
    let x = encode_profile_for(schema, &used, &profile.values)?;

    let draws = s.all_draws();
    if draws.is_empty() {
        return Err(OutputError::EmptySample);
    }
    let k = s.spec.n_causes();

    // Per draw: alive curve + per-cause increments, or None when S(s0)
    // underflows.
    type DrawCurves = Option<Vec<Vec<f64>>>;
    let per_draw: Vec<Result<DrawCurves, HazardError>> = par::map_values(&draws, |theta| {
        let log_s0 = theta.log_survival(&x, s0)?;
        if log_s0 <= LOG_UNDERFLOW {
            return Ok(None);
        }
        let mut curves = Vec::with_capacity(k + 1);
        let alive: Vec<f64> = grid
            .iter()
            .map(|&t| {
                let lr = theta.log_survival_unchecked(&x, t) - log_s0;
                if lr <= LOG_UNDERFLOW {
                    0.0
                } else {
                    lr.exp()
                }
            })
            .collect();
        curves.push(alive);
        let s0_prob = log_s0.exp();
        for cause in 0..k {
            let inc = theta.cif_grid(&x, cause, s0, grid)?;
            curves.push(inc.into_iter().map(|v| v / s0_prob).collect());
        }
        Ok(Some(curves))
    });

    let mut kept: Vec<Vec<Vec<f64>>> = Vec::with_capacity(draws.len());
    let mut excluded = 0usize;
    for r in per_draw {
        match r? {
            Some(c) => kept.push(c),
            None => excluded += 1,
        }
    }
    let total = draws.len();
    if excluded as f64 > 0.01 * total as f64 {
        return Err(OutputError::ExcludedDraws { excluded, total });
    }
    if kept.is_empty() {
        return Err(OutputError::EmptySample);
    }

    let labels: Vec<String> = std::iter::once("alive".to_string())
        .chain(s.cause_labels.iter().cloned())
        .collect();
    let targets = labels
        .iter()
        .enumerate()
        .map(|(target, label)| {
            let mut mean = Vec::with_capacity(grid.len());
            let mut lo = Vec::with_capacity(grid.len());
            let mut hi = Vec::with_capacity(grid.len());
            for j in 0..grid.len() {
                let mut values: Vec<f64> = kept.iter().map(|c| c[target][j]).collect();
                values.sort_by(|a, b| a.total_cmp(b));
                mean.push(stats::mean(&values));
                lo.push(stats::quantile_sorted(&values, 0.025));
                hi.push(stats::quantile_sorted(&values, 0.975));
            }
            CurveBand { label: label.clone(), mean, lo, hi }
        })
        .collect();

    Ok(CurveSet {
        profile: profile.name.clone(),
        s0,
        grid: grid.to_vec(),
        targets,
        excluded_draws: excluded,
    })
}

/// Nonparametric Aalen–Johansen estimate: overall Kaplan–Meier survival and
/// per-cause cumulative incidence step functions. Ties at a time point are
/// resolved events-before-censorings.
#[derive(Debug, Clone, Serialize)]
pub struct NonparametricCif {
    /// Distinct observed times, ascending.
    pub times: Vec<f64>,
    /// Ŝ(t) just after each time.
    pub survival: Vec<f64>,
    /// F̂_k(t) just after each time, one vector per cause.
    pub cif: Vec<Vec<f64>>,
}

impl NonparametricCif {
    /// Step-function value of F̂_k at time t.
    pub fn cif_at(&self, cause: usize, t: f64) -> f64 {
        match self.times.partition_point(|&u| u <= t) {
            0 => 0.0,
            idx => self.cif[cause][idx - 1],
        }
    }

    /// Step-function value of Ŝ at time t.
    pub fn survival_at(&self, t: f64) -> f64 {
        match self.times.partition_point(|&u| u <= t) {
            0 => 1.0,
            idx => self.survival[idx - 1],
        }
    }
}

pub fn nonparametric_cif(d: &Dataset) -> NonparametricCif {
    let k = d.n_causes();
    let mut order: Vec<usize> = (0..d.records.len()).collect();
    order.sort_by(|&a, &b| d.records[a].time.total_cmp(&d.records[b].time));

    let mut times = Vec::new();
    let mut survival = Vec::new();
    let mut cif = vec![Vec::new(); k];

    let mut at_risk = d.records.len();
    let mut surv = 1.0f64;
    let mut incidence = vec![0.0f64; k];

    let mut i = 0;
    while i < order.len() {
        let t = d.records[order[i]].time;
        let mut deaths = vec![0usize; k];
        let mut censored = 0usize;
        let mut j = i;
        while j < order.len() && d.records[order[j]].time == t {
            match d.records[order[j]].status {
                EventStatus::Censored => censored += 1,
                EventStatus::Event(c) => deaths[c] += 1,
            }
            j += 1;
        }
        let n_j = at_risk as f64;
        let total_deaths: usize = deaths.iter().sum();
        if total_deaths > 0 && n_j > 0.0 {
            for (cause, &d_kj) in deaths.iter().enumerate() {
                incidence[cause] += surv * d_kj as f64 / n_j;
            }
            surv *= 1.0 - total_deaths as f64 / n_j;
        }
        times.push(t);
        survival.push(surv);
        for (cause, inc) in incidence.iter().enumerate() {
            cif[cause].push(*inc);
        }
        at_risk -= total_deaths + censored;
        i = j;
    }

    NonparametricCif { times, survival, cif }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{CovariateSchema, SchemaEntry, Standardization, SubjectRecord};
    use crate::hazard::{Baseline, CauseModel, ParameterVector, TransitionTarget, WeibullBaseline};
    use crate::model::{BaselineFamily, ModelSpec};
    use crate::sampler::{ChainDraws, SamplerConfig};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::SeedableRng;
    use rand_distr::Distribution;

    fn sample_from(
        spec: ModelSpec,
        labels: Vec<String>,
        column_names: Vec<String>,
        chains: Vec<Vec<Vec<f64>>>,
    ) -> PosteriorSample {
        let layout = spec.layout();
        let template = spec.template().unwrap();
        let names = layout.names(&spec, &labels, &column_names);
        PosteriorSample {
            spec,
            layout,
            template,
            names,
            cause_labels: labels,
            config: SamplerConfig::default(),
            chains: chains
                .into_iter()
                .map(|draws| ChainDraws { iterations: (1..=draws.len()).collect(), draws })
                .collect(),
            acceptance: vec![],
            checkpoints: vec![],
            warnings: vec![],
        }
    }

    #[test]
    fn summary_of_constant_draws_is_degenerate() {
        let spec = ModelSpec::new(vec![BaselineFamily::exponential()], vec![vec![]]).unwrap();
        let s = sample_from(spec, vec!["c".into()], vec![], vec![vec![vec![2.5]; 40]]);
        let table = posterior_summary(&s).unwrap();
        let r = &table.rows[0];
        assert_eq!(r.name, "c.rate");
        assert_abs_diff_eq!(r.mean, 2.5);
        assert_abs_diff_eq!(r.median, 2.5);
        assert_abs_diff_eq!(r.sd, 0.0);
        assert_abs_diff_eq!(r.lo, 2.5);
        assert_abs_diff_eq!(r.hi, 2.5);
    }

    #[test]
    fn summary_interval_matches_standard_normal() {
        let spec =
            ModelSpec::new(vec![BaselineFamily::exponential()], vec![vec![0]]).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let normal = rand_distr::Normal::new(0.0, 1.0).unwrap();
        let draws: Vec<Vec<f64>> =
            (0..10_000).map(|_| vec![1.0, normal.sample(&mut rng)]).collect();
        let s = sample_from(spec, vec!["c".into()], vec!["x".into()], vec![draws]);
        let table = posterior_summary(&s).unwrap();
        let beta = &table.rows[1];
        assert!(beta.name.ends_with("beta.x"));
        assert!((beta.lo - (-1.96)).abs() < 0.07, "lo {}", beta.lo);
        assert!((beta.hi - 1.96).abs() < 0.07, "hi {}", beta.hi);
    }

    #[test]
    fn summary_renders_aligned_rows() {
        let table = SummaryTable {
            rows: vec![SummaryRow {
                name: "cv.shape".into(),
                mean: 0.780,
                sd: 0.090,
                median: 0.777,
                lo: 0.611,
                hi: 0.965,
            }],
        };
        let text = table.to_string();
        assert!(text.contains("0.780"));
        assert!(text.contains("0.090"));
        assert!(text.contains("0.777"));
        assert!(text.contains("[0.611, 0.965]"));
    }

    fn constant_two_cause_sample(r1: f64, r2: f64, m: usize) -> PosteriorSample {
        let spec = ModelSpec::new(
            vec![BaselineFamily::exponential(), BaselineFamily::exponential()],
            vec![vec![], vec![]],
        )
        .unwrap();
        sample_from(
            spec,
            vec!["cv".into(), "ncv".into()],
            vec![],
            vec![vec![vec![r1, r2]; m]],
        )
    }

    fn empty_schema() -> CovariateSchema {
        CovariateSchema::new(vec![]).unwrap()
    }

    #[test]
    fn prediction_at_s0_is_certainly_alive() {
        let s = constant_two_cause_sample(1.0, 1.0, 20);
        let profile = Profile { name: "p".into(), values: BTreeMap::new() };
        let grid = vec![2.0, 2.5, 3.0];
        let curves = predict_profile(&s, &empty_schema(), &profile, &grid, 2.0).unwrap();
        assert_abs_diff_eq!(curves.targets[0].mean[0], 1.0);
        assert_abs_diff_eq!(curves.targets[0].lo[0], 1.0);
        assert_abs_diff_eq!(curves.targets[0].hi[0], 1.0);
        assert_abs_diff_eq!(curves.targets[1].mean[0], 0.0);
        assert_abs_diff_eq!(curves.targets[2].mean[0], 0.0);
        // degenerate posterior, constant total hazard 2: alive at Δt = 0.5
        assert_relative_eq!(curves.targets[0].mean[1], (-1.0f64).exp(), max_relative = 1e-8);
        assert_abs_diff_eq!(
            curves.targets[0].hi[1] - curves.targets[0].lo[1],
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn curves_partition_probability_and_are_monotone() {
        let s = constant_two_cause_sample(0.6, 1.1, 10);
        let profile = Profile { name: "p".into(), values: BTreeMap::new() };
        let grid = default_grid(0.0, 4.0, 30);
        let curves = predict_profile(&s, &empty_schema(), &profile, &grid, 0.0).unwrap();
        for j in 0..grid.len() {
            let total: f64 = curves.targets.iter().map(|b| b.mean[j]).sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-6);
            for band in &curves.targets {
                assert!(band.lo[j] <= band.mean[j] + 1e-12);
                assert!(band.hi[j] >= band.mean[j] - 1e-12);
            }
        }
        assert!(curves.targets[0].mean.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        for cause in 1..=2 {
            assert!(curves.targets[cause].mean.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        }
    }

    #[test]
    fn conditional_and_unconditional_transitions_are_consistent() {
        let theta = ParameterVector::new(vec![
            CauseModel::without_covariates(Baseline::Weibull(
                WeibullBaseline::new(0.9, 0.5).unwrap(),
            )),
            CauseModel::without_covariates(Baseline::Weibull(
                WeibullBaseline::new(1.4, 0.3).unwrap(),
            )),
        ])
        .unwrap();
        for (s0, t) in [(0.5, 1.5), (1.0, 4.0), (2.0, 2.0)] {
            let p_full = theta
                .transition_probability(&[], 0.0, t, TransitionTarget::Alive)
                .unwrap();
            let p_first = theta
                .transition_probability(&[], 0.0, s0, TransitionTarget::Alive)
                .unwrap();
            let p_cond = theta
                .transition_probability(&[], s0, t, TransitionTarget::Alive)
                .unwrap();
            assert_relative_eq!(p_full, p_first * p_cond, max_relative = 1e-10);
        }
    }

    #[test]
    fn profile_values_pass_through_standardization() {
        let schema = CovariateSchema::new(vec![SchemaEntry {
            name: "age".into(),
            kind: CovariateKind::Continuous {
                standardization: Some(Standardization { mean: 70.0, sd: 10.0 }),
            },
        }])
        .unwrap();
        let spec = ModelSpec::new(vec![BaselineFamily::exponential()], vec![vec![0]]).unwrap();
        // rate 1, β = ln 2 on standardized age; age 80 → x = 1 → hazard 2
        let s = sample_from(
            spec,
            vec!["c".into()],
            vec!["age".into()],
            vec![vec![vec![1.0, 2.0f64.ln()]; 10]],
        );
        let mut values = BTreeMap::new();
        values.insert("age".to_string(), ProfileValue::Number(80.0));
        let profile = Profile { name: "p".into(), values };
        let curves = predict_profile(&s, &schema, &profile, &[0.5], 0.0).unwrap();
        assert_relative_eq!(curves.targets[0].mean[0], (-1.0f64).exp(), max_relative = 1e-10);

        // missing required covariate is an error
        let empty = Profile { name: "q".into(), values: BTreeMap::new() };
        assert!(matches!(
            predict_profile(&s, &schema, &empty, &[0.5], 0.0),
            Err(OutputError::Profile(_))
        ));
    }

    #[test]
    fn underflowing_draws_are_excluded_or_fatal() {
        // half of the draws have absurd hazard: exclusion rate 50% > 1%
        let spec = ModelSpec::new(vec![BaselineFamily::exponential()], vec![vec![]]).unwrap();
        let mut draws = vec![vec![1.0]; 5];
        draws.extend(vec![vec![1e5]; 5]);
        let s = sample_from(spec, vec!["c".into()], vec![], vec![draws]);
        let profile = Profile { name: "p".into(), values: BTreeMap::new() };
        match predict_profile(&s, &empty_schema(), &profile, &[1.0, 2.0], 1.0) {
            Err(OutputError::ExcludedDraws { excluded, total }) => {
                assert_eq!(excluded, 5);
                assert_eq!(total, 10);
            }
            other => panic!("expected exclusion error, got {other:?}"),
        }
    }

    fn record(time: f64, status: EventStatus) -> SubjectRecord {
        SubjectRecord { id: format!("{time}"), time, status, covariates: vec![] }
    }

    #[test]
    fn aalen_johansen_reduces_to_ecdf_without_censoring() {
        let d = Dataset::new(
            (1..=5).map(|i| record(i as f64, EventStatus::Event(0))).collect(),
            CovariateSchema::new(vec![]).unwrap(),
            vec!["only".into()],
        )
        .unwrap();
        let aj = nonparametric_cif(&d);
        for (j, &t) in aj.times.iter().enumerate() {
            assert_abs_diff_eq!(aj.cif[0][j], t / 5.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(aj.survival_at(10.0), 0.0);
        assert_abs_diff_eq!(aj.cif_at(0, 0.5), 0.0);
        assert_abs_diff_eq!(aj.cif_at(0, 3.2), 0.6, epsilon = 1e-12);
    }

    #[test]
    fn six_subject_hand_worked_example() {
        // times 1..6 with causes 1, 2, censored, 1, 2, 1
        let d = Dataset::new(
            vec![
                record(1.0, EventStatus::Event(0)),
                record(2.0, EventStatus::Event(1)),
                record(3.0, EventStatus::Censored),
                record(4.0, EventStatus::Event(0)),
                record(5.0, EventStatus::Event(1)),
                record(6.0, EventStatus::Event(0)),
            ],
            CovariateSchema::new(vec![]).unwrap(),
            vec!["c1".into(), "c2".into()],
        )
        .unwrap();
        let aj = nonparametric_cif(&d);
        // hand-computed: F1 jumps 1/6 at t=1, 2/9 at t=4 (S(3+)=2/3, n=3),
        // 2/9 at t=6 (S(5+)=2/9, n=1); F2 jumps 1/6 at t=2, 2/9 at t=5.
        let sixth = 1.0 / 6.0;
        assert_relative_eq!(aj.cif_at(0, 1.0), sixth, max_relative = 1e-12);
        assert_relative_eq!(aj.cif_at(1, 2.0), sixth, max_relative = 1e-12);
        assert_relative_eq!(aj.survival_at(2.0), 2.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(aj.survival_at(3.5), 2.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(aj.cif_at(0, 4.0), 7.0 / 18.0, max_relative = 1e-12);
        assert_relative_eq!(aj.survival_at(4.0), 4.0 / 9.0, max_relative = 1e-12);
        assert_relative_eq!(aj.cif_at(1, 5.0), 7.0 / 18.0, max_relative = 1e-12);
        assert_relative_eq!(aj.cif_at(0, 6.0), 11.0 / 18.0, max_relative = 1e-12);
        // largest time is an event: Ŝ + ΣF̂ = 1
        let total = aj.survival_at(6.0) + aj.cif_at(0, 6.0) + aj.cif_at(1, 6.0);
        assert_relative_eq!(total, 1.0, max_relative = 1e-12);
        assert_abs_diff_eq!(aj.survival_at(6.0), 0.0);
    }
}
