//! Exact log-likelihood of a competing-risks sample.
//!
//! A censored subject contributes log S(t|x); a subject failing from cause k
//! contributes the log subdensity log h_k(t|x) + log S(t|x). Because the
//! overall survival factorizes over causes, the total likelihood splits into
//! per-cause blocks where events of other causes act as censoring; the
//! sampler exploits this via [`CauseData`], which caches everything that does
//! not change when a single cause's parameters move.

use crate::data::{Dataset, EventStatus};
use crate::hazard::{Baseline, CauseModel, HazardError, ParameterVector};
use crate::model::{ParamKind, ParameterLayout};
use crate::par;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LikelihoodError {
    #[error("nonfinite log-likelihood contribution for subject `{id}`")]
    NonFinite { id: String },
    #[error(transparent)]
    Hazard(#[from] HazardError),
}

/// Total log-likelihood plus the per-subject contributions it sums.
#[derive(Debug, Clone)]
pub struct LogLikValue {
    pub total: f64,
    pub per_subject: Vec<f64>,
}

/// Log-likelihood contribution of a single record: log S(t|x) when censored,
/// log f_k(t|x) for an event of cause k.
pub fn subject_log_contribution(
    r: &crate::data::SubjectRecord,
    theta: &ParameterVector,
) -> Result<f64, LikelihoodError> {
    let log_surv = theta.log_survival(&r.covariates, r.time)?;
    match r.status {
        EventStatus::Censored => Ok(log_surv),
        EventStatus::Event(k) => {
            if k >= theta.n_causes() {
                return Err(HazardError::CauseOutOfRange {
                    cause: k,
                    n_causes: theta.n_causes(),
                }
                .into());
            }
            let cm = &theta.causes[k];
            let log_h = cm.baseline.log_hazard_unchecked(r.time) + cm.linear_predictor(&r.covariates);
            Ok(log_h + log_surv)
        }
    }
}

/// Log-likelihood of the full dataset. Per-subject terms are computed in
/// parallel and summed with a fixed pairwise tree, so the value is
/// independent of thread count.
pub fn log_likelihood(d: &Dataset, theta: &ParameterVector) -> Result<LogLikValue, LikelihoodError> {
    for cm in &theta.causes {
        cm.validate_covariates(d.schema.encoded_len())?;
    }
    let per_subject: Vec<Result<f64, LikelihoodError>> =
        par::map_values(&d.records, |r| subject_log_contribution(r, theta));
    let mut values = Vec::with_capacity(per_subject.len());
    for (r, v) in d.records.iter().zip(per_subject) {
        let v = v?;
        if !v.is_finite() {
            return Err(LikelihoodError::NonFinite { id: r.id.clone() });
        }
        values.push(v);
    }
    Ok(LogLikValue { total: par::pairwise_sum(&values), per_subject: values })
}

/// Gradient of the total log-likelihood with respect to the free parameters
/// in `layout` order.
pub fn log_likelihood_gradient(
    d: &Dataset,
    layout: &ParameterLayout,
    theta: &ParameterVector,
) -> Result<Vec<f64>, LikelihoodError> {
    for cm in &theta.causes {
        cm.validate_covariates(d.schema.encoded_len())?;
    }
    let mut grad = vec![0.0; layout.len()];
    for (slot, id) in layout.params.iter().enumerate() {
        let cm = &theta.causes[id.cause];
        let mut acc = Vec::with_capacity(d.records.len());
        for r in &d.records {
            let t = r.time;
            let lp = cm.linear_predictor(&r.covariates);
            let elp = lp.exp();
            let d_ik = if r.status.is_event_of(id.cause) { 1.0 } else { 0.0 };
            let g = match (id.kind, &cm.baseline) {
                (ParamKind::WeibullRate, Baseline::Weibull(w)) => {
                    d_ik / w.rate - t.powf(w.shape) * elp
                }
                (ParamKind::WeibullShape, Baseline::Weibull(w)) => {
                    d_ik * (1.0 / w.shape + t.ln()) - w.rate * t.powf(w.shape) * t.ln() * elp
                }
                (ParamKind::PiecewiseLevel(r_idx), Baseline::Piecewise(p)) => {
                    let in_interval = if t > 0.0 && p.interval_index(t) == r_idx { 1.0 } else { 0.0 };
                    let exposure = p.exposures(t)[r_idx];
                    d_ik * in_interval / p.levels[r_idx] - exposure * elp
                }
                (ParamKind::Coefficient(j), baseline) => {
                    let x = r.covariates[cm.covariate_subset[j]];
                    let h0_cum = baseline.cumulative_hazard_unchecked(t);
                    x * (d_ik - h0_cum * elp)
                }
                _ => unreachable!("layout/parameter mismatch"),
            };
            acc.push(g);
        }
        grad[slot] = par::pairwise_sum(&acc);
    }
    Ok(grad)
}

/// Per-cause cached data view for fast repeated likelihood evaluation while
/// only that cause's parameters change.
#[derive(Debug, Clone)]
pub struct CauseData {
    pub n: usize,
    /// Event indicator for this cause (events of other causes are censoring).
    pub event: Vec<f64>,
    pub time: Vec<f64>,
    pub log_time: Vec<f64>,
    /// Subset covariate matrix, n × q row-major, in `covariate_subset` order.
    pub x: Vec<f64>,
    pub q: usize,
    piecewise: Option<PiecewiseCache>,
}

#[derive(Debug, Clone)]
struct PiecewiseCache {
    interval: Vec<usize>,
    /// n × R row-major per-interval exposures.
    exposures: Vec<f64>,
    r: usize,
}

impl CauseData {
    pub fn new(d: &Dataset, cm: &CauseModel, cause: usize) -> Self {
        let n = d.records.len();
        let q = cm.covariate_subset.len();
        let mut event = Vec::with_capacity(n);
        let mut time = Vec::with_capacity(n);
        let mut log_time = Vec::with_capacity(n);
        let mut x = Vec::with_capacity(n * q);
        for rec in &d.records {
            event.push(if rec.status.is_event_of(cause) { 1.0 } else { 0.0 });
            time.push(rec.time);
            log_time.push(rec.time.ln());
            for &j in &cm.covariate_subset {
                x.push(rec.covariates[j]);
            }
        }
        let piecewise = match &cm.baseline {
            Baseline::Piecewise(p) => {
                let r = p.levels.len();
                let mut interval = Vec::with_capacity(n);
                let mut exposures = Vec::with_capacity(n * r);
                for rec in &d.records {
                    interval.push(p.interval_index(rec.time));
                    exposures.extend(p.exposures(rec.time));
                }
                Some(PiecewiseCache { interval, exposures, r })
            }
            Baseline::Weibull(_) => None,
        };
        CauseData { n, event, time, log_time, x, q, piecewise }
    }

    /// Fill `out` with this cause's per-subject contributions
    /// d_i·(log h₀(t_i) + xᵢᵀβ) − H₀(t_i)·exp(xᵢᵀβ) under `coefficients`.
    pub fn contributions_into(&self, baseline: &Baseline, coefficients: &[f64], out: &mut Vec<f64>) {
        debug_assert_eq!(coefficients.len(), self.q);
        out.clear();
        out.reserve(self.n);
        match baseline {
            Baseline::Weibull(w) => {
                let ln_rate = w.rate.ln();
                let ln_shape = w.shape.ln();
                for i in 0..self.n {
                    let lp = self.lp(i, coefficients);
                    let log_h0 = ln_rate + ln_shape + (w.shape - 1.0) * self.log_time[i];
                    let h0_cum = w.rate * (w.shape * self.log_time[i]).exp();
                    out.push(self.event[i] * (log_h0 + lp) - h0_cum * lp.exp());
                }
            }
            Baseline::Piecewise(p) => {
                let cache = self.piecewise.as_ref().expect("piecewise cache present");
                for i in 0..self.n {
                    let lp = self.lp(i, coefficients);
                    let log_h0 = p.levels[cache.interval[i]].ln();
                    let row = &cache.exposures[i * cache.r..(i + 1) * cache.r];
                    let h0_cum: f64 = row.iter().zip(&p.levels).map(|(e, g)| e * g).sum();
                    out.push(self.event[i] * (log_h0 + lp) - h0_cum * lp.exp());
                }
            }
        }
    }

    #[inline]
    fn lp(&self, i: usize, coefficients: &[f64]) -> f64 {
        let row = &self.x[i * self.q..(i + 1) * self.q];
        row.iter().zip(coefficients).map(|(x, b)| x * b).sum()
    }

    /// Cause-block log-likelihood ℓ_k.
    pub fn log_lik(&self, baseline: &Baseline, coefficients: &[f64]) -> f64 {
        let mut buf = Vec::new();
        self.contributions_into(baseline, coefficients, &mut buf);
        par::pairwise_sum(&buf)
    }
}
