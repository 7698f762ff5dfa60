//! Variable selection: Bayes-factor Gibbs search over the model space with
//! Rao-Blackwellized inclusion probabilities, and spike-and-slab indicator
//! sampling.
//!
//! The Bayes-factor route works per cause on the cause-specific parametric
//! likelihood with the baseline profiled at its null-model maximum. A model
//! γ gets the Laplace-approximated marginal ∫ L_k(β_γ) N(β_γ; 0, Σ_γ) dβ_γ
//! with Σ_γ = c·n·(I₀,γ)⁻¹, where I₀ is the observed information at β = 0
//! under the profiled baseline. The Gibbs scan flips one indicator at a time
//! using exact conditional inclusion probabilities under a uniform prior over
//! the 2^p model space, and the reported inclusion probability of a covariate
//! is the average of those conditionals over retained sweeps.
//!
//! The spike-and-slab route augments the full MCMC state with per-cause
//! indicator vectors: the linear predictor uses γ_j·β_j while every β_j keeps
//! its slab prior unconditionally, which yields exact Bernoulli full
//! conditionals for γ_j and an exact Beta update for the inclusion weight η.

use crate::data::Dataset;
use crate::hazard::{Baseline, ParameterVector};
use crate::likelihood::CauseData;
use crate::linalg;
use crate::model::{BaselineFamily, ModelSpec, ParamKind};
use crate::par;
use crate::priors::{log_prior_density, PriorSpec, ScalarPrior};
use crate::sampler::{
    initialize, walk_for, ChainDraws, InitStrategy, PosteriorSample, SamplerConfig, SamplerError,
    Walk,
};
use crate::stats;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SelectionError {
    #[error("{p} candidate covariates exceed the supported maximum {max}")]
    TooManyCovariates { p: usize, max: usize },
    #[error("covariates `{a}` and `{b}` are collinear (|corr| > {limit})")]
    Collinear { a: String, b: String, limit: f64 },
    #[error("information matrix is singular for columns {columns:?}")]
    SingularInformation { columns: Vec<String> },
    #[error("no events for this cause; cannot fit a null baseline")]
    NoEvents,
    #[error("invalid selection config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
}

const COLLINEARITY_LIMIT: f64 = 0.999;
const MAX_CANDIDATES: usize = 30;

/// Cause-specific data view for selection: times, an event indicator that
/// treats other causes' events as censoring, and the candidate covariate
/// columns.
#[derive(Debug, Clone)]
pub struct CauseView {
    pub time: Vec<f64>,
    pub event: Vec<f64>,
    /// n × p row-major candidate matrix.
    pub x: Vec<f64>,
    pub p: usize,
    pub names: Vec<String>,
    /// Encoded column indices the candidates came from.
    pub columns: Vec<usize>,
}

impl CauseView {
    pub fn n(&self) -> usize {
        self.time.len()
    }

    fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n()).map(|i| self.x[i * self.p + j]).collect()
    }
}

/// Build the cause-k view over the given encoded columns, rejecting
/// near-collinear candidate pairs.
pub fn cause_view(d: &Dataset, cause: usize, candidates: &[usize]) -> Result<CauseView, SelectionError> {
    if candidates.len() > MAX_CANDIDATES {
        return Err(SelectionError::TooManyCovariates { p: candidates.len(), max: MAX_CANDIDATES });
    }
    let encoded = d.schema.encoded_names();
    let names: Vec<String> = candidates
        .iter()
        .map(|&j| encoded.get(j).cloned().unwrap_or_else(|| format!("x{j}")))
        .collect();
    let n = d.records.len();
    let p = candidates.len();
    let mut x = Vec::with_capacity(n * p);
    let mut event = Vec::with_capacity(n);
    let mut time = Vec::with_capacity(n);
    for r in &d.records {
        time.push(r.time);
        event.push(if r.status.is_event_of(cause) { 1.0 } else { 0.0 });
        for &j in candidates {
            x.push(r.covariates[j]);
        }
    }
    let view = CauseView { time, event, x, p, names, columns: candidates.to_vec() };

    for a in 0..p {
        let ca = view.column(a);
        for b in (a + 1)..p {
            let cb = view.column(b);
            if correlation(&ca, &cb).abs() > COLLINEARITY_LIMIT {
                return Err(SelectionError::Collinear {
                    a: view.names[a].clone(),
                    b: view.names[b].clone(),
                    limit: COLLINEARITY_LIMIT,
                });
            }
        }
    }
    Ok(view)
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let ma = stats::mean(a);
    let mb = stats::mean(b);
    let mut num = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        num += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return 0.0;
    }
    num / (va * vb).sqrt()
}

/// Maximum-likelihood baseline under β = 0 for the cause view.
pub fn fit_null_baseline(view: &CauseView, family: &BaselineFamily) -> Result<Baseline, SelectionError> {
    let events: f64 = view.event.iter().sum();
    if events == 0.0 {
        return Err(SelectionError::NoEvents);
    }
    match family {
        BaselineFamily::Weibull { fixed_shape } => {
            let sum_log_t_events: f64 = view
                .time
                .iter()
                .zip(&view.event)
                .filter(|(_, &d)| d > 0.0)
                .map(|(t, _)| t.ln())
                .sum();
            let profile = |log_alpha: f64| -> f64 {
                let alpha = log_alpha.exp();
                let sum_t_alpha: f64 = view.time.iter().map(|t| t.powf(alpha)).sum();
                let rate = events / sum_t_alpha;
                events * rate.ln() + events * alpha.ln() + (alpha - 1.0) * sum_log_t_events - events
            };
            let alpha = match fixed_shape {
                Some(s) => *s,
                None => golden_max(&profile, 0.02f64.ln(), 50.0f64.ln()).exp(),
            };
            let sum_t_alpha: f64 = view.time.iter().map(|t| t.powf(alpha)).sum();
            let rate = events / sum_t_alpha;
            Ok(Baseline::Weibull(crate::hazard::WeibullBaseline::new(alpha, rate).unwrap()))
        }
        BaselineFamily::Piecewise { knots } => {
            let template =
                crate::hazard::PiecewiseConstantBaseline::new(knots.clone(), vec![1.0; knots.len()])
                    .map_err(|e| SelectionError::BadConfig(e.to_string()))?;
            let r = knots.len();
            let mut occur = vec![0.0; r];
            let mut exposure = vec![0.0; r];
            for (t, d) in view.time.iter().zip(&view.event) {
                if *d > 0.0 {
                    occur[template.interval_index(*t)] += 1.0;
                }
                for (e, v) in exposure.iter_mut().zip(template.exposures(*t)) {
                    *e += v;
                }
            }
            let levels: Vec<f64> = occur
                .iter()
                .zip(&exposure)
                .map(|(o, e)| if *e > 0.0 && *o > 0.0 { o / e } else { 1e-10 })
                .collect();
            Ok(Baseline::Piecewise(
                crate::hazard::PiecewiseConstantBaseline::new(knots.clone(), levels).unwrap(),
            ))
        }
    }
}

fn golden_max(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..120 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Laplace machinery for one cause view: the profiled null baseline, the
/// per-subject cumulative hazards it implies, and the observed information
/// at β = 0 that scales the conventional prior.
#[derive(Debug, Clone)]
pub struct BfMarginal {
    view: CauseView,
    baseline: Baseline,
    /// H₀(tᵢ) under the profiled baseline.
    h0_cum: Vec<f64>,
    /// Σ over events of log h₀(tᵢ), constant across β.
    log_h0_events: f64,
    /// Null log-likelihood Σ dᵢ·log h₀(tᵢ) − H₀(tᵢ).
    null_log_lik: f64,
    /// p×p observed information at β = 0.
    info0: Vec<f64>,
    prior_scale: f64,
}

impl BfMarginal {
    pub fn new(view: CauseView, family: &BaselineFamily, prior_scale: f64) -> Result<Self, SelectionError> {
        if !(prior_scale > 0.0) {
            return Err(SelectionError::BadConfig("prior scale must be positive".into()));
        }
        let baseline = fit_null_baseline(&view, family)?;
        let n = view.n();
        let p = view.p;
        let mut h0_cum = Vec::with_capacity(n);
        let mut log_h0_events = 0.0;
        let mut null_log_lik = 0.0;
        for i in 0..n {
            let t = view.time[i];
            let cum = baseline.cumulative_hazard_unchecked(t);
            if view.event[i] > 0.0 {
                log_h0_events += baseline.log_hazard_unchecked(t);
            }
            null_log_lik -= cum;
            h0_cum.push(cum);
        }
        null_log_lik += log_h0_events;
        let mut info0 = vec![0.0; p * p];
        for i in 0..n {
            let row = &view.x[i * p..(i + 1) * p];
            for a in 0..p {
                for b in 0..p {
                    info0[a * p + b] += h0_cum[i] * row[a] * row[b];
                }
            }
        }
        Ok(BfMarginal { view, baseline, h0_cum, log_h0_events, null_log_lik, info0, prior_scale })
    }

    pub fn null_baseline(&self) -> &Baseline {
        &self.baseline
    }

    pub fn null_log_lik(&self) -> f64 {
        self.null_log_lik
    }

    /// Prior precision Σ_γ⁻¹ = I₀,γ / (c·n) on the included columns.
    fn prior_precision(&self, included: &[usize]) -> Vec<f64> {
        let q = included.len();
        let scale = 1.0 / (self.prior_scale * self.view.n() as f64);
        let mut out = vec![0.0; q * q];
        for (a, &ia) in included.iter().enumerate() {
            for (b, &ib) in included.iter().enumerate() {
                out[a * q + b] = self.info0[ia * self.view.p + ib] * scale;
            }
        }
        out
    }

    /// Log marginal likelihood of the model selecting `gamma`'s columns.
    /// The null model returns the profiled maximum directly (no integral).
    pub fn log_marginal(&self, gamma: &[bool]) -> Result<f64, SelectionError> {
        debug_assert_eq!(gamma.len(), self.view.p);
        let included: Vec<usize> = (0..self.view.p).filter(|&j| gamma[j]).collect();
        let q = included.len();
        if q == 0 {
            return Ok(self.null_log_lik);
        }
        let names = || included.iter().map(|&j| self.view.names[j].clone()).collect();

        let prior_prec = self.prior_precision(&included);
        let prec_chol = linalg::cholesky(&prior_prec, q)
            .ok_or_else(|| SelectionError::SingularInformation { columns: names() })?;
        let log_det_sigma = -linalg::cholesky_log_det(&prec_chol, q);

        let n = self.view.n();
        let xg = |i: usize, a: usize| self.view.x[i * self.view.p + included[a]];

        // Newton ascent of g(β) = ℓ(β) − ½ βᵀ Σ⁻¹ β from β = 0; the events'
        // Σ d·log h₀ constant is added back at the end.
        let objective = |beta: &[f64]| -> f64 {
            let mut val = 0.0;
            for i in 0..n {
                let mut lp = 0.0;
                for (a, beta_a) in beta.iter().enumerate() {
                    lp += xg(i, a) * beta_a;
                }
                val += self.view.event[i] * lp - self.h0_cum[i] * lp.exp();
            }
            let mut quad = 0.0;
            for a in 0..q {
                for b in 0..q {
                    quad += beta[a] * prior_prec[a * q + b] * beta[b];
                }
            }
            val - 0.5 * quad
        };

        let mut beta = vec![0.0; q];
        let mut obj = objective(&beta);
        let mut hess = vec![0.0; q * q];
        for _ in 0..100 {
            let mut grad = vec![0.0; q];
            hess.copy_from_slice(&prior_prec);
            for i in 0..n {
                let mut lp = 0.0;
                for (a, beta_a) in beta.iter().enumerate() {
                    lp += xg(i, a) * beta_a;
                }
                let w = self.h0_cum[i] * lp.exp();
                for a in 0..q {
                    grad[a] += xg(i, a) * (self.view.event[i] - w);
                    for b in 0..q {
                        hess[a * q + b] += w * xg(i, a) * xg(i, b);
                    }
                }
            }
            for a in 0..q {
                for b in 0..q {
                    grad[a] -= prior_prec[a * q + b] * beta[b];
                }
            }
            let chol = linalg::cholesky(&hess, q)
                .ok_or_else(|| SelectionError::SingularInformation { columns: names() })?;
            let delta = linalg::cholesky_solve(&chol, q, &grad);
            // backtrack in case Newton overshoots into overflow
            let mut step = 1.0;
            let mut improved = false;
            for _ in 0..40 {
                let cand: Vec<f64> = beta.iter().zip(&delta).map(|(b, d)| b + step * d).collect();
                let cand_obj = objective(&cand);
                if cand_obj.is_finite() && cand_obj >= obj - 1e-12 {
                    beta = cand;
                    obj = cand_obj;
                    improved = true;
                    break;
                }
                step *= 0.5;
            }
            let max_delta = delta.iter().fold(0.0f64, |m, d| m.max((step * d).abs()));
            if !improved || max_delta < 1e-10 {
                break;
            }
        }

        // Hessian of −g at the mode.
        hess.copy_from_slice(&prior_prec);
        for i in 0..n {
            let mut lp = 0.0;
            for (a, beta_a) in beta.iter().enumerate() {
                lp += xg(i, a) * beta_a;
            }
            let w = self.h0_cum[i] * lp.exp();
            for a in 0..q {
                for b in 0..q {
                    hess[a * q + b] += w * xg(i, a) * xg(i, b);
                }
            }
        }
        let chol = linalg::cholesky(&hess, q)
            .ok_or_else(|| SelectionError::SingularInformation { columns: names() })?;
        let log_det_h = linalg::cholesky_log_det(&chol, q);

        Ok(obj + self.log_h0_events - 0.5 * (log_det_sigma + log_det_h))
    }
}

/// Gibbs model-search settings; defaults follow the reference analysis
/// (1000 sweeps, burn-in 300, initial model dimension 5).
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct BfSearchConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub initial_dimension: usize,
    pub seed: u64,
    pub prior_scale: f64,
}

impl Default for BfSearchConfig {
    fn default() -> Self {
        BfSearchConfig { iterations: 1_000, burn_in: 300, initial_dimension: 5, seed: 1, prior_scale: 1.0 }
    }
}

/// A visited model with its estimated posterior probability.
#[derive(Debug, Clone, PartialEq)]
pub struct VisitedModel {
    /// Positions within the candidate list.
    pub members: Vec<usize>,
    pub probability: f64,
}

/// Result of a model-space search: inclusion probabilities, top visited
/// models, and the running inclusion estimate per sweep.
#[derive(Debug, Clone)]
pub struct ModelPosterior {
    pub names: Vec<String>,
    pub inclusion: Vec<f64>,
    pub top_models: Vec<VisitedModel>,
    /// Running Rao-Blackwellized estimate after each sweep (burn-in included),
    /// for stability diagnostics.
    pub inclusion_trace: Vec<Vec<f64>>,
}

/// Bayes-factor Gibbs search over the 2^p model space with a uniform model
/// prior and Rao-Blackwellized inclusion estimates.
pub fn bf_gibbs_search(
    view: CauseView,
    family: &BaselineFamily,
    config: &BfSearchConfig,
) -> Result<ModelPosterior, SelectionError> {
    let p = view.p;
    if p > MAX_CANDIDATES {
        return Err(SelectionError::TooManyCovariates { p, max: MAX_CANDIDATES });
    }
    if config.iterations <= config.burn_in {
        return Err(SelectionError::BadConfig(format!(
            "iterations ({}) must exceed burn_in ({})",
            config.iterations, config.burn_in
        )));
    }
    let names = view.names.clone();
    let marginal = BfMarginal::new(view, family, config.prior_scale)?;
    let mut cache: HashMap<u32, f64> = HashMap::new();
    let cached_log_m = |gamma: &[bool], cache: &mut HashMap<u32, f64>| -> Result<f64, SelectionError> {
        let key = mask_of(gamma);
        if let Some(&v) = cache.get(&key) {
            return Ok(v);
        }
        let v = marginal.log_marginal(gamma)?;
        cache.insert(key, v);
        Ok(v)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut gamma: Vec<bool> = (0..p).map(|j| j < config.initial_dimension).collect();

    let mut running_sum = vec![0.0; p];
    let mut retained_sum = vec![0.0; p];
    let mut trace = Vec::with_capacity(config.iterations);
    let mut visits: HashMap<u32, usize> = HashMap::new();
    let retained_sweeps = config.iterations - config.burn_in;

    for sweep in 1..=config.iterations {
        let mut conditionals = vec![0.0; p];
        for j in 0..p {
            gamma[j] = false;
            let m0 = cached_log_m(&gamma, &mut cache)?;
            gamma[j] = true;
            let m1 = cached_log_m(&gamma, &mut cache)?;
            // uniform model prior cancels
            let q_j = 1.0 / (1.0 + (m0 - m1).exp());
            conditionals[j] = q_j;
            gamma[j] = rng.random::<f64>() < q_j;
        }
        for (s, c) in running_sum.iter_mut().zip(&conditionals) {
            *s += c;
        }
        trace.push(running_sum.iter().map(|s| s / sweep as f64).collect());
        if sweep > config.burn_in {
            for (s, c) in retained_sum.iter_mut().zip(&conditionals) {
                *s += c;
            }
            *visits.entry(mask_of(&gamma)).or_insert(0) += 1;
        }
    }

    let inclusion: Vec<f64> = retained_sum.iter().map(|s| s / retained_sweeps as f64).collect();
    let mut top: Vec<(u32, usize)> = visits.into_iter().collect();
    top.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let top_models = top
        .into_iter()
        .map(|(mask, count)| VisitedModel {
            members: members_of(mask, p),
            probability: count as f64 / retained_sweeps as f64,
        })
        .collect();

    Ok(ModelPosterior { names, inclusion, top_models, inclusion_trace: trace })
}

fn mask_of(gamma: &[bool]) -> u32 {
    gamma.iter().enumerate().fold(0u32, |m, (j, &g)| if g { m | (1 << j) } else { m })
}

fn members_of(mask: u32, p: usize) -> Vec<usize> {
    (0..p).filter(|j| mask & (1 << j) != 0).collect()
}

/// Exact enumeration over the 2^p model space (p ≤ 20): posterior model
/// probabilities and the implied inclusion probabilities.
pub fn enumerate_inclusion(
    view: CauseView,
    family: &BaselineFamily,
    prior_scale: f64,
) -> Result<ModelPosterior, SelectionError> {
    let p = view.p;
    if p > 20 {
        return Err(SelectionError::TooManyCovariates { p, max: 20 });
    }
    let names = view.names.clone();
    let marginal = BfMarginal::new(view, family, prior_scale)?;
    let n_models = 1usize << p;
    let mut log_ms = Vec::with_capacity(n_models);
    for mask in 0..n_models as u32 {
        let gamma: Vec<bool> = (0..p).map(|j| mask & (1 << j) != 0).collect();
        log_ms.push(marginal.log_marginal(&gamma)?);
    }
    let norm = stats::log_sum_exp(&log_ms);
    let probs: Vec<f64> = log_ms.iter().map(|m| (m - norm).exp()).collect();
    let mut inclusion = vec![0.0; p];
    for (mask, prob) in probs.iter().enumerate() {
        for (j, inc) in inclusion.iter_mut().enumerate() {
            if mask & (1 << j) != 0 {
                *inc += prob;
            }
        }
    }
    let mut order: Vec<usize> = (0..n_models).collect();
    order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]));
    let top_models = order
        .into_iter()
        .map(|mask| VisitedModel { members: members_of(mask as u32, p), probability: probs[mask] })
        .collect();
    Ok(ModelPosterior { names, inclusion, top_models, inclusion_trace: Vec::new() })
}

/// Spike-and-slab configuration: the slab density on coefficients, the Beta
/// hyperprior on the inclusion weight η, and an option to pin every indicator
/// at 1 (for reduction checks).
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SpikeSlabConfig {
    pub slab: ScalarPrior,
    pub eta_prior: (f64, f64),
    #[serde(default)]
    pub fix_included: bool,
}

impl Default for SpikeSlabConfig {
    fn default() -> Self {
        SpikeSlabConfig {
            slab: ScalarPrior::NormalPrecision { mean: 0.0, precision: 0.001 },
            eta_prior: (1.0, 1.0),
            fix_included: false,
        }
    }
}

/// Per-cause inclusion summary from a spike-and-slab run.
#[derive(Debug, Clone)]
pub struct CauseInclusion {
    pub label: String,
    pub covariate_names: Vec<String>,
    pub inclusion: Vec<f64>,
    /// Positions (within the cause's candidate list) with inclusion ≥ 0.5.
    pub median_model: Vec<usize>,
    pub eta_mean: f64,
}

/// Spike-and-slab fit: inclusion report plus the underlying posterior sample
/// of (β, baseline) draws and the η draws per cause and chain.
#[derive(Debug, Clone)]
pub struct InclusionReport {
    pub causes: Vec<CauseInclusion>,
    pub sample: PosteriorSample,
    /// η draws indexed [cause][chain][retained draw].
    pub eta_draws: Vec<Vec<Vec<f64>>>,
}

struct SsChainResult {
    draws: ChainDraws,
    gamma_sum: Vec<Vec<f64>>,
    eta_draws: Vec<Vec<f64>>,
    acceptance: Vec<f64>,
}

/// Run the spike-and-slab sampler over the full candidate model.
///
/// `priors` supplies the baseline priors; coefficient priors are replaced by
/// the slab. Indicators start at 1 and β at the null start.
pub fn spike_slab_fit(
    spec: &ModelSpec,
    d: &Dataset,
    priors: &PriorSpec,
    ss: &SpikeSlabConfig,
    config: &SamplerConfig,
) -> Result<InclusionReport, SelectionError> {
    config.validate()?;
    ss.slab.validate().map_err(SelectionError::BadConfig)?;
    let (a1, a2) = ss.eta_prior;
    if !(a1 > 0.0 && a2 > 0.0) {
        return Err(SelectionError::BadConfig(format!(
            "Beta hyperprior parameters must be positive, got ({a1}, {a2})"
        )));
    }

    // The slab replaces the coefficient prior everywhere.
    let mut ss_priors = priors.clone();
    for cp in &mut ss_priors.per_cause {
        cp.coefficient = ss.slab;
    }

    let layout = spec.layout();
    let template = spec.template().map_err(SamplerError::from)?;
    let names = layout.names(spec, &d.cause_labels, &d.schema.encoded_names());
    let cause_data: Vec<CauseData> = template
        .causes
        .iter()
        .enumerate()
        .map(|(k, cm)| CauseData::new(d, cm, k))
        .collect();

    let mut init_rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x9E37_79B9));
    let (theta0, _warnings) = initialize(spec, d, &ss_priors, &InitStrategy::NullStart, &mut init_rng)?;

    let results: Vec<Result<SsChainResult, SelectionError>> = par::map_indices(config.chains, |c| {
        run_ss_chain(spec, &layout, &ss_priors, &cause_data, ss, config, theta0.clone(), c)
    });

    let k = spec.n_causes();
    let mut chains = Vec::new();
    let mut acceptance = Vec::new();
    let mut eta_by_cause: Vec<Vec<Vec<f64>>> = vec![Vec::new(); k];
    let mut gamma_sums: Vec<Vec<f64>> = spec.covariates.iter().map(|c| vec![0.0; c.len()]).collect();
    let mut total_retained = 0usize;
    for r in results {
        let r = r?;
        total_retained += r.draws.draws.len();
        for cause in 0..k {
            for (s, g) in gamma_sums[cause].iter_mut().zip(&r.gamma_sum[cause]) {
                *s += g;
            }
            eta_by_cause[cause].push(r.eta_draws[cause].clone());
        }
        chains.push(r.draws);
        acceptance.push(r.acceptance);
    }

    let sample = PosteriorSample {
        spec: spec.clone(),
        layout,
        template,
        names,
        cause_labels: d.cause_labels.clone(),
        config: config.clone(),
        chains,
        acceptance,
        checkpoints: Vec::new(),
        warnings: Vec::new(),
    };

    let encoded = d.schema.encoded_names();
    let causes = (0..k)
        .map(|cause| {
            let inclusion: Vec<f64> =
                gamma_sums[cause].iter().map(|s| s / total_retained as f64).collect();
            let median_model = (0..inclusion.len()).filter(|&j| inclusion[j] >= 0.5).collect();
            let eta_all: Vec<f64> = eta_by_cause[cause].iter().flatten().copied().collect();
            CauseInclusion {
                label: d.cause_labels[cause].clone(),
                covariate_names: spec.covariates[cause]
                    .iter()
                    .map(|&j| encoded.get(j).cloned().unwrap_or_else(|| format!("x{j}")))
                    .collect(),
                inclusion,
                median_model,
                eta_mean: stats::mean(&eta_all),
            }
        })
        .collect();

    Ok(InclusionReport { causes, sample, eta_draws: eta_by_cause })
}

#[allow(clippy::too_many_arguments)]
fn run_ss_chain(
    spec: &ModelSpec,
    layout: &crate::model::ParameterLayout,
    priors: &PriorSpec,
    cause_data: &[CauseData],
    ss: &SpikeSlabConfig,
    config: &SamplerConfig,
    mut theta: ParameterVector,
    chain_index: usize,
) -> Result<SsChainResult, SelectionError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(chain_index as u64));
    let k = spec.n_causes();
    let (a1, a2) = ss.eta_prior;

    // Indicators start fully included; η at its prior mean.
    let mut gamma: Vec<Vec<bool>> = spec.covariates.iter().map(|c| vec![true; c.len()]).collect();
    let mut eta: Vec<f64> = vec![a1 / (a1 + a2); k];

    // Effective coefficients γ_j·β_j drive the likelihood.
    let eff = |cm: &crate::hazard::CauseModel, g: &[bool]| -> Vec<f64> {
        cm.coefficients.iter().zip(g).map(|(b, &on)| if on { *b } else { 0.0 }).collect()
    };

    let mut contrib: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut cause_ll = Vec::with_capacity(k);
    for cause in 0..k {
        let mut buf = Vec::new();
        let e = eff(&theta.causes[cause], &gamma[cause]);
        cause_data[cause].contributions_into(&theta.causes[cause].baseline, &e, &mut buf);
        let ll = par::pairwise_sum(&buf);
        contrib.push(buf);
        cause_ll.push(ll);
    }
    let mut log_prior = log_prior_density(priors, &theta);
    if !(cause_ll.iter().sum::<f64>() + log_prior).is_finite() {
        return Err(SamplerError::InitFailure("spike-and-slab start".into()).into());
    }

    // Baseline blocks only; β blocks are handled inline per covariate.
    let baseline_blocks: Vec<(usize, usize, Walk)> = layout
        .params
        .iter()
        .enumerate()
        .filter(|(_, id)| !matches!(id.kind, ParamKind::Coefficient(_)))
        .map(|(slot, id)| (slot, id.cause, walk_for(id.kind, id.cause, priors)))
        .collect();
    let n_base = baseline_blocks.len();
    let mut base_sigma: Vec<f64> = baseline_blocks
        .iter()
        .map(|(_, _, w)| match w {
            Walk::Plain => 0.3f64.ln(),
            _ => 0.4f64.ln(),
        })
        .collect();
    let mut beta_sigma: Vec<Vec<f64>> =
        spec.covariates.iter().map(|c| vec![0.3f64.ln(); c.len()]).collect();

    let mut scratch: Vec<f64> = Vec::new();
    let retained_len = config.retained();
    let mut draws = ChainDraws {
        iterations: Vec::with_capacity(retained_len),
        draws: Vec::with_capacity(retained_len),
    };
    let mut gamma_sum: Vec<Vec<f64>> = spec.covariates.iter().map(|c| vec![0.0; c.len()]).collect();
    let mut eta_draws: Vec<Vec<f64>> = vec![Vec::with_capacity(retained_len); k];

    let mut base_accepts = vec![0usize; n_base];
    let mut base_accept_total = vec![0usize; n_base];
    let mut beta_accepts: Vec<Vec<usize>> = spec.covariates.iter().map(|c| vec![0; c.len()]).collect();
    let mut beta_proposals: Vec<Vec<usize>> = spec.covariates.iter().map(|c| vec![0; c.len()]).collect();
    let mut batch = 0usize;

    for i in 1..=config.iterations {
        let adapting = i <= config.burn_in;

        for (b, &(slot, cause, walk)) in baseline_blocks.iter().enumerate() {
            let current = layout.get(&theta, slot);
            let sigma = base_sigma[b].exp();
            let (proposal, corr) = walk.propose(current, sigma, &mut rng);
            layout.set(&mut theta, slot, proposal);
            let e = eff(&theta.causes[cause], &gamma[cause]);
            cause_data[cause].contributions_into(&theta.causes[cause].baseline, &e, &mut scratch);
            let ll_new = par::pairwise_sum(&scratch);
            let prior_new = log_prior_density(priors, &theta);
            let log_alpha = ll_new - cause_ll[cause] + prior_new - log_prior + corr;
            if !log_alpha.is_nan() && rng.random::<f64>().ln() < log_alpha {
                std::mem::swap(&mut contrib[cause], &mut scratch);
                cause_ll[cause] = ll_new;
                log_prior = prior_new;
                base_accepts[b] += 1;
                if !adapting {
                    base_accept_total[b] += 1;
                }
            } else {
                layout.set(&mut theta, slot, current);
            }
        }

        for cause in 0..k {
            let p = gamma[cause].len();

            // β updates: random walk when included, slab refresh when not
            for j in 0..p {
                if gamma[cause][j] {
                    beta_proposals[cause][j] += 1;
                    let current = theta.causes[cause].coefficients[j];
                    let sigma = beta_sigma[cause][j].exp();
                    let (proposal, _) = Walk::Plain.propose(current, sigma, &mut rng);
                    theta.causes[cause].coefficients[j] = proposal;
                    let e = eff(&theta.causes[cause], &gamma[cause]);
                    cause_data[cause].contributions_into(&theta.causes[cause].baseline, &e, &mut scratch);
                    let ll_new = par::pairwise_sum(&scratch);
                    let log_alpha = ll_new - cause_ll[cause] + ss.slab.log_density(proposal)
                        - ss.slab.log_density(current);
                    if !log_alpha.is_nan() && rng.random::<f64>().ln() < log_alpha {
                        std::mem::swap(&mut contrib[cause], &mut scratch);
                        cause_ll[cause] = ll_new;
                        log_prior += ss.slab.log_density(proposal) - ss.slab.log_density(current);
                        beta_accepts[cause][j] += 1;
                    } else {
                        theta.causes[cause].coefficients[j] = current;
                    }
                } else {
                    // excluded column: likelihood-free Gibbs refresh from the slab
                    let fresh = ss.slab.sample(&mut rng);
                    let old = theta.causes[cause].coefficients[j];
                    theta.causes[cause].coefficients[j] = fresh;
                    log_prior += ss.slab.log_density(fresh) - ss.slab.log_density(old);
                }
            }

            // γ updates: exact Bernoulli conditional
            if !ss.fix_included {
                for j in 0..p {
                    let current = gamma[cause][j];
                    gamma[cause][j] = !current;
                    let e = eff(&theta.causes[cause], &gamma[cause]);
                    cause_data[cause].contributions_into(&theta.causes[cause].baseline, &e, &mut scratch);
                    let ll_flipped = par::pairwise_sum(&scratch);
                    gamma[cause][j] = current;
                    let (ll_on, ll_off) = if current {
                        (cause_ll[cause], ll_flipped)
                    } else {
                        (ll_flipped, cause_ll[cause])
                    };
                    let logit = ll_on - ll_off + eta[cause].ln() - (1.0 - eta[cause]).ln();
                    let include = rng.random::<f64>() < 1.0 / (1.0 + (-logit).exp());
                    if include != current {
                        gamma[cause][j] = include;
                        std::mem::swap(&mut contrib[cause], &mut scratch);
                        cause_ll[cause] = ll_flipped;
                    }
                }
            }

            // η | γ ~ Beta(a1 + Σγ, a2 + p − Σγ)
            let s: f64 = gamma[cause].iter().map(|&g| g as usize as f64).sum();
            eta[cause] = rand_distr::Beta::new(a1 + s, a2 + p as f64 - s)
                .expect("valid beta parameters")
                .sample(&mut rng);
        }

        if adapting && i % config.adaptation_window == 0 {
            batch += 1;
            let step = 1.0 / (batch as f64).sqrt();
            for b in 0..n_base {
                let rate = base_accepts[b] as f64 / config.adaptation_window as f64;
                base_sigma[b] += step * (rate - config.target_acceptance);
                base_accepts[b] = 0;
            }
            for cause in 0..k {
                for j in 0..gamma[cause].len() {
                    if beta_proposals[cause][j] > 0 {
                        let rate = beta_accepts[cause][j] as f64 / beta_proposals[cause][j] as f64;
                        beta_sigma[cause][j] += step * (rate - config.target_acceptance);
                    }
                    beta_accepts[cause][j] = 0;
                    beta_proposals[cause][j] = 0;
                }
            }
        }

        if i > config.burn_in && (i - config.burn_in) % config.thin == 0 {
            draws.iterations.push(i);
            draws.draws.push(layout.flatten(&theta));
            for cause in 0..k {
                for (s, &g) in gamma_sum[cause].iter_mut().zip(&gamma[cause]) {
                    *s += g as usize as f64;
                }
                eta_draws[cause].push(eta[cause]);
            }
        }
    }

    let total = (config.iterations - config.burn_in) as f64;
    let acceptance = base_accept_total.iter().map(|&a| a as f64 / total).collect();
    Ok(SsChainResult { draws, gamma_sum, eta_draws, acceptance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hazard::{CauseModel, WeibullBaseline};
    use crate::model::BaselineFamily;
    use crate::priors::default_priors;
    use crate::quad;
    use crate::simulate::{simulate_dataset, Censoring, CovariateGenerator, TruthSpec};
    use approx::assert_relative_eq;
    use statrs::function::gamma::ln_gamma;

    fn simulated_view(
        beta: &[f64],
        n: usize,
        seed: u64,
        extra_noise_cols: usize,
    ) -> (Dataset, CauseView) {
        let p = beta.len();
        let total = p + extra_noise_cols;
        let ts = TruthSpec {
            model: ModelSpec::new(vec![BaselineFamily::weibull()], vec![(0..p).collect()]).unwrap(),
            truth: ParameterVector::new(vec![CauseModel::new(
                Baseline::Weibull(WeibullBaseline::new(1.1, 0.4).unwrap()),
                beta.to_vec(),
                (0..p).collect(),
            )
            .unwrap()])
            .unwrap(),
            covariates: (0..total)
                .map(|j| CovariateGenerator::StandardNormal { name: format!("x{j}") })
                .collect(),
            censoring: Censoring { administrative: Some(4.0), uniform_max: None },
        };
        let d = simulate_dataset(&ts, n, seed).unwrap();
        let view = cause_view(&d, 0, &(0..total).collect::<Vec<_>>()).unwrap();
        (d, view)
    }

    #[test]
    fn collinear_columns_are_rejected_by_name() {
        let (d, _) = simulated_view(&[0.5], 100, 3, 0);
        let mut d2 = d.clone();
        d2.schema.entries.push(crate::data::SchemaEntry {
            name: "x0_copy".into(),
            kind: crate::data::CovariateKind::Continuous { standardization: None },
        });
        for r in &mut d2.records {
            let v = r.covariates[0];
            r.covariates.push(v);
        }
        match cause_view(&d2, 0, &[0, 1]) {
            Err(SelectionError::Collinear { a, b, .. }) => {
                assert_eq!(a, "x0");
                assert_eq!(b, "x0_copy");
            }
            other => panic!("expected collinearity error, got {other:?}"),
        }
    }

    #[test]
    fn null_marginal_is_profiled_null_log_likelihood() {
        let (_, view) = simulated_view(&[0.4], 120, 5, 0);
        let bf = BfMarginal::new(view.clone(), &BaselineFamily::weibull(), 1.0).unwrap();
        let baseline = bf.null_baseline().clone();
        let mut expect = 0.0;
        for i in 0..view.n() {
            if view.event[i] > 0.0 {
                expect += baseline.hazard(view.time[i]).unwrap().ln();
            }
            expect -= baseline.cumulative_hazard(view.time[i]).unwrap();
        }
        let got = bf.log_marginal(&[false]).unwrap();
        assert_relative_eq!(got, expect, max_relative = 1e-10);
        assert_relative_eq!(bf.null_log_lik(), expect, max_relative = 1e-10);
    }

    #[test]
    fn laplace_matches_one_dimensional_quadrature() {
        let (_, view) = simulated_view(&[0.5], 150, 7, 0);
        let bf = BfMarginal::new(view.clone(), &BaselineFamily::weibull(), 1.0).unwrap();
        let laplace = bf.log_marginal(&[true]).unwrap();

        // quadrature oracle with σ² = c·n / I₀, I₀ = Σ H₀(tᵢ)xᵢ²
        let baseline = bf.null_baseline().clone();
        let h0: Vec<f64> =
            view.time.iter().map(|&t| baseline.cumulative_hazard(t).unwrap()).collect();
        let info0: f64 = (0..view.n()).map(|i| h0[i] * view.x[i] * view.x[i]).sum();
        let sigma2 = view.n() as f64 / info0;
        let log_integrand = |b: f64| -> f64 {
            let mut ll = 0.0;
            for i in 0..view.n() {
                let lp = view.x[i] * b;
                if view.event[i] > 0.0 {
                    ll += baseline.hazard(view.time[i]).unwrap().ln() + lp;
                }
                ll -= h0[i] * lp.exp();
            }
            ll - 0.5 * (2.0 * std::f64::consts::PI * sigma2).ln() - 0.5 * b * b / sigma2
        };
        let shift = log_integrand(0.0);
        let val =
            quad::adaptive(&|b: f64| (log_integrand(b) - shift).exp(), -4.0, 4.0, 1e-12).unwrap();
        let exact = shift + val.ln();
        assert_relative_eq!(laplace, exact, max_relative = 1e-4);
    }

    #[test]
    fn noise_column_rarely_moves_the_marginal() {
        // |log m(noise) − log m(null)| < ln 3 in ≥ 18 of 20 replicates
        let mut ok = 0;
        for rep in 0..20 {
            let (_, view) = simulated_view(&[0.0], 500, 100 + rep, 0);
            let bf = BfMarginal::new(view, &BaselineFamily::weibull(), 1.0).unwrap();
            let m0 = bf.log_marginal(&[false]).unwrap();
            let m1 = bf.log_marginal(&[true]).unwrap();
            if (m1 - m0).abs() < 3.0f64.ln() {
                ok += 1;
            }
        }
        assert!(ok >= 18, "only {ok}/20 replicates stayed under the ln 3 threshold");
    }

    #[test]
    fn gibbs_matches_enumeration_at_p3() {
        let (_, view) = simulated_view(&[0.9, 0.0, 0.5], 300, 11, 0);
        let exact = enumerate_inclusion(view.clone(), &BaselineFamily::weibull(), 1.0).unwrap();
        let config =
            BfSearchConfig { iterations: 1_500, burn_in: 300, seed: 4, ..Default::default() };
        let gibbs = bf_gibbs_search(view, &BaselineFamily::weibull(), &config).unwrap();
        for (g, e) in gibbs.inclusion.iter().zip(&exact.inclusion) {
            assert!((g - e).abs() < 0.02, "gibbs {g} vs exact {e}");
        }
        let total: f64 = exact.top_models.iter().map(|m| m.probability).sum();
        assert_relative_eq!(total, 1.0, max_relative = 1e-10);
    }

    #[test]
    fn inclusion_equals_mass_of_models_containing_the_covariate() {
        let (_, view) = simulated_view(&[0.7, -0.4], 200, 13, 1);
        let exact = enumerate_inclusion(view, &BaselineFamily::weibull(), 1.0).unwrap();
        for j in 0..3 {
            let mass: f64 = exact
                .top_models
                .iter()
                .filter(|m| m.members.contains(&j))
                .map(|m| m.probability)
                .sum();
            assert_relative_eq!(exact.inclusion[j], mass, max_relative = 1e-10);
        }
    }

    #[test]
    fn enumeration_is_invariant_to_column_order() {
        let (d, _) = simulated_view(&[0.8, 0.0], 250, 17, 1);
        let fwd = enumerate_inclusion(
            cause_view(&d, 0, &[0, 1, 2]).unwrap(),
            &BaselineFamily::weibull(),
            1.0,
        )
        .unwrap();
        let rev = enumerate_inclusion(
            cause_view(&d, 0, &[2, 1, 0]).unwrap(),
            &BaselineFamily::weibull(),
            1.0,
        )
        .unwrap();
        for j in 0..3 {
            assert_relative_eq!(fwd.inclusion[j], rev.inclusion[2 - j], max_relative = 1e-10);
        }
    }

    #[test]
    fn rb_trace_stabilizes_within_the_burn_in() {
        let (_, view) = simulated_view(&[1.0, 0.0, 0.0, 0.6], 400, 19, 2);
        let config =
            BfSearchConfig { iterations: 1_000, burn_in: 300, seed: 9, ..Default::default() };
        let result = bf_gibbs_search(view, &BaselineFamily::weibull(), &config).unwrap();
        let last = result.inclusion_trace.last().unwrap();
        for trace_at in result.inclusion_trace.iter().rev().take(200) {
            for (a, b) in trace_at.iter().zip(last) {
                assert!((a - b).abs() < 0.05, "trace moved by {}", (a - b).abs());
            }
        }
    }

    fn exponential_select_dataset(beta: &[f64], n: usize, seed: u64) -> Dataset {
        let p = beta.len();
        let ts = TruthSpec {
            model: ModelSpec::new(vec![BaselineFamily::exponential()], vec![(0..p).collect()])
                .unwrap(),
            truth: ParameterVector::new(vec![CauseModel::new(
                Baseline::Weibull(WeibullBaseline::new(1.0, 0.5).unwrap()),
                beta.to_vec(),
                (0..p).collect(),
            )
            .unwrap()])
            .unwrap(),
            covariates: (0..p)
                .map(|j| CovariateGenerator::StandardNormal { name: format!("x{j}") })
                .collect(),
            censoring: Censoring { administrative: Some(3.0), uniform_max: None },
        };
        simulate_dataset(&ts, n, seed).unwrap()
    }

    #[test]
    fn eta_conditional_is_exact_beta_under_forced_inclusion() {
        // all γ pinned at 1 with Beta(1,1) prior and p = 10 → η ~ Beta(11, 1)
        let d = exponential_select_dataset(&[0.0; 10], 150, 23);
        let spec =
            ModelSpec::new(vec![BaselineFamily::exponential()], vec![(0..10).collect()]).unwrap();
        let priors = default_priors(&spec);
        let ss = SpikeSlabConfig { fix_included: true, ..Default::default() };
        let config = SamplerConfig {
            chains: 2,
            iterations: 3_000,
            burn_in: 500,
            thin: 1,
            seed: 3,
            ..Default::default()
        };
        let report = spike_slab_fit(&spec, &d, &priors, &ss, &config).unwrap();
        let eta: Vec<f64> = report.eta_draws[0].iter().flatten().copied().collect();
        assert_eq!(eta.len(), 5_000);
        // exact Beta(11, 1): cdf x^11
        let ks = stats::ks_distance(&eta, |x| x.clamp(0.0, 1.0).powi(11));
        assert!(ks < 0.03, "KS distance {ks}");
        assert!((stats::mean(&eta) - 11.0 / 12.0).abs() < 0.01);
        for c in &report.causes {
            assert!(c.inclusion.iter().all(|&g| g == 1.0));
            assert_eq!(c.median_model.len(), 10);
        }
    }

    #[test]
    fn forced_inclusion_reduces_to_the_plain_sampler() {
        let d = exponential_select_dataset(&[0.8, -0.5], 300, 29);
        let spec = ModelSpec::new(vec![BaselineFamily::exponential()], vec![vec![0, 1]]).unwrap();
        let priors = default_priors(&spec);
        let config = SamplerConfig {
            chains: 2,
            iterations: 11_000,
            burn_in: 1_000,
            thin: 5,
            seed: 37,
            ..Default::default()
        };
        let plain = crate::sampler::run_chains(&spec, &d, &priors, &config).unwrap();
        let ss = SpikeSlabConfig { fix_included: true, ..Default::default() };
        let report = spike_slab_fit(&spec, &d, &priors, &ss, &config).unwrap();
        for j in 0..plain.n_params() {
            let a = plain.pooled(j);
            let b = report.sample.pooled(j);
            let mcse = (stats::mcse_mean(&plain.per_chain(j)).powi(2)
                + stats::mcse_mean(&report.sample.per_chain(j)).powi(2))
            .sqrt();
            assert!(
                (stats::mean(&a) - stats::mean(&b)).abs() < 3.0 * mcse,
                "param {j}: {} vs {} (mcse {mcse})",
                stats::mean(&a),
                stats::mean(&b)
            );
        }
    }

    #[test]
    fn spike_slab_separates_active_from_null() {
        let d = exponential_select_dataset(&[1.0, 0.0, 0.0, 0.8, 0.0, 0.0], 500, 41);
        let spec =
            ModelSpec::new(vec![BaselineFamily::exponential()], vec![(0..6).collect()]).unwrap();
        let priors = default_priors(&spec);
        let config = SamplerConfig {
            chains: 2,
            iterations: 4_000,
            burn_in: 1_000,
            thin: 2,
            seed: 5,
            ..Default::default()
        };
        let report =
            spike_slab_fit(&spec, &d, &priors, &SpikeSlabConfig::default(), &config).unwrap();
        let inc = &report.causes[0].inclusion;
        assert!(inc[0] > 0.8, "active x0 inclusion {}", inc[0]);
        assert!(inc[3] > 0.8, "active x3 inclusion {}", inc[3]);
        for j in [1, 2, 4, 5] {
            assert!(inc[j] < 0.3, "null x{j} inclusion {}", inc[j]);
        }
        assert_eq!(report.causes[0].median_model, vec![0, 3]);
    }

    /// Exact inclusion probabilities for a K=1 exponential model with a
    /// conjugate Gamma prior on the rate: λ integrates in closed form and the
    /// remaining β_γ integral is low-dimensional, done by nested adaptive
    /// quadrature. η ~ Beta gives a closed Beta-Binomial model prior.
    fn exact_ss_inclusion(
        d: &Dataset,
        slab_sd: f64,
        gamma_prior: (f64, f64),
        eta_prior: (f64, f64),
        p: usize,
    ) -> Vec<f64> {
        let (a0, b0) = gamma_prior;
        let n = d.records.len();
        let events: f64 = d.records.iter().filter(|r| r.status.is_event_of(0)).count() as f64;
        let x: Vec<Vec<f64>> = d.records.iter().map(|r| r.covariates.clone()).collect();
        let t: Vec<f64> = d.records.iter().map(|r| r.time).collect();
        let dvec: Vec<f64> = d
            .records
            .iter()
            .map(|r| if r.status.is_event_of(0) { 1.0 } else { 0.0 })
            .collect();

        let log_ml_given_beta = |included: &[usize], beta: &[f64]| -> f64 {
            let mut lin = 0.0;
            let mut denom = 0.0;
            for i in 0..n {
                let mut lp = 0.0;
                for (pos, &j) in included.iter().enumerate() {
                    lp += x[i][j] * beta[pos];
                }
                lin += dvec[i] * lp;
                denom += t[i] * lp.exp();
            }
            ln_gamma(a0 + events) - ln_gamma(a0) + a0 * b0.ln() + lin
                - (a0 + events) * (b0 + denom).ln()
        };

        fn tensor_quad(q: usize, f: &dyn Fn(&[f64]) -> f64, lo: f64, hi: f64) -> f64 {
            fn go(idx: usize, q: usize, point: &mut Vec<f64>, f: &dyn Fn(&[f64]) -> f64, lo: f64, hi: f64) -> f64 {
                if idx == q {
                    return f(point);
                }
                let g = |b: f64| {
                    let mut p2 = point.clone();
                    p2[idx] = b;
                    go(idx + 1, q, &mut p2, f, lo, hi)
                };
                quad::adaptive(&g, lo, hi, 1e-9).unwrap()
            }
            let mut point = vec![0.0; q];
            go(0, q, &mut point, f, lo, hi)
        }

        let slab_var = slab_sd * slab_sd;
        let log_norm = -0.5 * (2.0 * std::f64::consts::PI * slab_var).ln();
        let mut log_m = Vec::with_capacity(1 << p);
        for mask in 0..(1u32 << p) {
            let included: Vec<usize> = (0..p).filter(|j| mask & (1 << j) != 0).collect();
            let q = included.len();
            if q == 0 {
                log_m.push(log_ml_given_beta(&included, &[]));
                continue;
            }
            let shift = log_ml_given_beta(&included, &vec![0.0; q]);
            let f = |beta: &[f64]| -> f64 {
                let mut v = log_ml_given_beta(&included, beta) - shift;
                for b in beta {
                    v += log_norm - 0.5 * b * b / slab_var;
                }
                v.exp()
            };
            let integral = tensor_quad(q, &f, -3.5, 3.5);
            log_m.push(shift + integral.ln());
        }

        let (e1, e2) = eta_prior;
        let log_beta_fn = |a: f64, b: f64| ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b);
        let log_post: Vec<f64> = (0..(1usize << p))
            .map(|mask| {
                let s = (mask as u32).count_ones() as f64;
                log_m[mask] + log_beta_fn(e1 + s, e2 + p as f64 - s) - log_beta_fn(e1, e2)
            })
            .collect();
        let norm = stats::log_sum_exp(&log_post);
        let mut inclusion = vec![0.0; p];
        for mask in 0..(1usize << p) {
            let w = (log_post[mask] - norm).exp();
            for (j, inc) in inclusion.iter_mut().enumerate() {
                if mask & (1 << j) != 0 {
                    *inc += w;
                }
            }
        }
        inclusion
    }

    #[test]
    fn spike_slab_matches_exact_enumeration_at_p3() {
        let d = exponential_select_dataset(&[0.6, 0.0, 0.35], 150, 47);
        let spec =
            ModelSpec::new(vec![BaselineFamily::exponential()], vec![vec![0, 1, 2]]).unwrap();
        let mut priors = default_priors(&spec);
        // conjugate Gamma prior on the rate so the oracle can integrate λ
        priors.per_cause[0].baseline = crate::priors::BaselinePrior::Weibull {
            shape: ScalarPrior::Uniform { lo: 0.0, hi: 10.0 },
            rate: ScalarPrior::GammaShapeRate { shape: 1.0, rate: 1.0 },
        };
        let slab_sd = 10.0;
        let ss = SpikeSlabConfig {
            slab: ScalarPrior::NormalPrecision { mean: 0.0, precision: 1.0 / (slab_sd * slab_sd) },
            eta_prior: (1.0, 1.0),
            fix_included: false,
        };
        let config = SamplerConfig {
            chains: 3,
            iterations: 12_000,
            burn_in: 2_000,
            thin: 2,
            seed: 21,
            ..Default::default()
        };
        let report = spike_slab_fit(&spec, &d, &priors, &ss, &config).unwrap();
        let exact = exact_ss_inclusion(&d, slab_sd, (1.0, 1.0), (1.0, 1.0), 3);
        for (got, want) in report.causes[0].inclusion.iter().zip(&exact) {
            assert!((got - want).abs() < 0.05, "spike-slab inclusion {got} vs exact {want}");
        }
    }
}
