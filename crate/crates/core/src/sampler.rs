//! Posterior simulation by adaptive Metropolis-within-Gibbs.
//!
//! Each free scalar parameter is its own update block: positive parameters
//! (Weibull rate, piecewise levels) take log-scale random walks, a Weibull
//! shape under a Uniform(lo, hi) prior takes a logit-scaled walk over that
//! interval, and coefficients take plain Gaussian walks. Proposal scales
//! adapt by Robbins–Monro toward a target acceptance rate during burn-in
//! only and are frozen afterwards, so the retained-phase kernel is a fixed
//! Markov kernel; a saved [`ChainCheckpoint`] replays it draw for draw.
//!
//! Chains run in parallel (one independent RNG stream per chain, seeded
//! `seed + chain_index`), while draws within a chain are strictly sequential,
//! making the whole run deterministic for a given seed.

use crate::data::Dataset;
use crate::hazard::{Baseline, ParameterVector};
use crate::likelihood::CauseData;
use crate::model::{ModelError, ModelSpec, ParamKind, ParameterLayout};
use crate::par;
use crate::priors::{log_prior_density, BaselinePrior, PriorSpec, ScalarPrior};
use crate::stats;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("invalid sampler config: {0}")]
    BadConfig(String),
    #[error("model/data/prior mismatch: {0}")]
    Incompatible(String),
    #[error("nonfinite log-posterior at initialization: {0}")]
    InitFailure(String),
    #[error("block `{name}` had zero acceptance over {windows} consecutive adaptation windows")]
    StuckBlock { name: String, windows: usize },
    #[error("Gelman-Rubin needs at least two chains")]
    SingleChain,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// MCMC driver settings. Defaults mirror the reference analysis: 3 chains,
/// 100,000 iterations, 1,000 burn-in, thinning interval 10.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub chains: usize,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub adaptation_window: usize,
    pub target_acceptance: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            chains: 3,
            iterations: 100_000,
            burn_in: 1_000,
            thin: 10,
            seed: 1,
            adaptation_window: 50,
            target_acceptance: 0.44,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<(), SamplerError> {
        if self.chains < 1 {
            return Err(SamplerError::BadConfig("chains must be >= 1".into()));
        }
        if self.burn_in >= self.iterations {
            return Err(SamplerError::BadConfig(format!(
                "burn_in ({}) must be smaller than iterations ({})",
                self.burn_in, self.iterations
            )));
        }
        if self.thin < 1 {
            return Err(SamplerError::BadConfig("thin must be >= 1".into()));
        }
        if self.adaptation_window < 1 {
            return Err(SamplerError::BadConfig("adaptation_window must be >= 1".into()));
        }
        if !(self.target_acceptance > 0.0 && self.target_acceptance < 1.0) {
            return Err(SamplerError::BadConfig("target_acceptance must lie in (0, 1)".into()));
        }
        Ok(())
    }

    /// Retained draws per chain.
    pub fn retained(&self) -> usize {
        (self.iterations - self.burn_in) / self.thin
    }
}

/// Initialization strategy for a chain's starting point.
#[derive(Debug, Clone)]
pub enum InitStrategy {
    /// β = 0, Weibull α = 1 (or its fixed value), rates/levels from crude
    /// occurrence/exposure estimates.
    NullStart,
    /// Independent draws from the prior.
    PriorDraw,
    User(ParameterVector),
}

/// Random-walk transform for one scalar block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Walk {
    Plain,
    Log,
    Logit { lo: f64, hi: f64 },
}

impl Walk {
    /// Propose a new value; returns (proposal, log proposal-ratio correction).
    pub(crate) fn propose<R: Rng>(&self, current: f64, sigma: f64, rng: &mut R) -> (f64, f64) {
        let z: f64 = StandardNormal.sample(rng);
        match *self {
            Walk::Plain => (current + sigma * z, 0.0),
            Walk::Log => {
                let proposal = current * (sigma * z).exp();
                (proposal, sigma * z)
            }
            Walk::Logit { lo, hi } => {
                let u = (current - lo) / (hi - lo);
                let logit = (u / (1.0 - u)).ln() + sigma * z;
                let u_new = 1.0 / (1.0 + (-logit).exp());
                let proposal = lo + (hi - lo) * u_new;
                let corr = ((proposal - lo) * (hi - proposal)).ln()
                    - ((current - lo) * (hi - current)).ln();
                (proposal, corr)
            }
        }
    }
}

pub(crate) fn walk_for(kind: ParamKind, cause: usize, priors: &PriorSpec) -> Walk {
    match kind {
        ParamKind::Coefficient(_) => Walk::Plain,
        ParamKind::WeibullRate | ParamKind::PiecewiseLevel(_) => Walk::Log,
        ParamKind::WeibullShape => match &priors.per_cause[cause].baseline {
            BaselinePrior::Weibull { shape: ScalarPrior::Uniform { lo, hi }, .. } => {
                Walk::Logit { lo: *lo, hi: *hi }
            }
            _ => Walk::Log,
        },
    }
}

/// Retained draws of one chain: the original iteration index and the flat
/// parameter values of every kept draw.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainDraws {
    pub iterations: Vec<usize>,
    pub draws: Vec<Vec<f64>>,
}

/// Everything needed to resume the frozen retained-phase kernel.
#[derive(Debug, Clone)]
pub struct ChainCheckpoint {
    pub values: Vec<f64>,
    pub log_sigma: Vec<f64>,
    pub rng: ChaCha8Rng,
}

/// Posterior sample: per-chain retained draws plus provenance.
#[derive(Debug, Clone)]
pub struct PosteriorSample {
    pub spec: ModelSpec,
    pub layout: ParameterLayout,
    pub template: ParameterVector,
    pub names: Vec<String>,
    pub cause_labels: Vec<String>,
    pub config: SamplerConfig,
    pub chains: Vec<ChainDraws>,
    /// Retained-phase acceptance rate per chain per block.
    pub acceptance: Vec<Vec<f64>>,
    pub checkpoints: Vec<ChainCheckpoint>,
    pub warnings: Vec<String>,
}

impl PosteriorSample {
    pub fn n_chains(&self) -> usize {
        self.chains.len()
    }

    pub fn n_params(&self) -> usize {
        self.layout.len()
    }

    /// All retained values of one parameter, pooled chain-major.
    pub fn pooled(&self, param: usize) -> Vec<f64> {
        self.chains
            .iter()
            .flat_map(|c| c.draws.iter().map(move |d| d[param]))
            .collect()
    }

    /// Per-chain values of one parameter.
    pub fn per_chain(&self, param: usize) -> Vec<Vec<f64>> {
        self.chains
            .iter()
            .map(|c| c.draws.iter().map(|d| d[param]).collect())
            .collect()
    }

    /// Rebuild the parameter vector of one retained draw.
    pub fn draw(&self, chain: usize, idx: usize) -> ParameterVector {
        self.layout
            .unflatten(&self.template, &self.chains[chain].draws[idx])
            .expect("stored draw matches layout")
    }

    /// All retained draws as parameter vectors, pooled chain-major.
    pub fn all_draws(&self) -> Vec<ParameterVector> {
        let mut out = Vec::new();
        for c in 0..self.chains.len() {
            for i in 0..self.chains[c].draws.len() {
                out.push(self.draw(c, i));
            }
        }
        out
    }
}

fn validate_inputs(spec: &ModelSpec, d: &Dataset, priors: &PriorSpec) -> Result<(), SamplerError> {
    if spec.n_causes() != d.n_causes() {
        return Err(SamplerError::Incompatible(format!(
            "model has {} causes, dataset has {}",
            spec.n_causes(),
            d.n_causes()
        )));
    }
    if priors.per_cause.len() != spec.n_causes() {
        return Err(SamplerError::Incompatible(format!(
            "prior covers {} causes, model has {}",
            priors.per_cause.len(),
            spec.n_causes()
        )));
    }
    let width = d.schema.encoded_len();
    for (k, (cov, cp)) in spec.covariates.iter().zip(&priors.per_cause).enumerate() {
        if let Some(&bad) = cov.iter().find(|&&j| j >= width) {
            return Err(SamplerError::Incompatible(format!(
                "cause {k} selects covariate column {bad}, dataset has {width}"
            )));
        }
        let family_ok = matches!(
            (&spec.baselines[k], &cp.baseline),
            (crate::model::BaselineFamily::Weibull { .. }, BaselinePrior::Weibull { .. })
                | (crate::model::BaselineFamily::Piecewise { .. }, BaselinePrior::Piecewise { .. })
        );
        if !family_ok {
            return Err(SamplerError::Incompatible(format!(
                "cause {k}: prior family does not match baseline family"
            )));
        }
    }
    Ok(())
}

/// Starting values for a chain; see [`InitStrategy`]. Reports (rather than
/// fails on) degenerate shapes like an all-censored cause.
pub fn initialize(
    spec: &ModelSpec,
    d: &Dataset,
    priors: &PriorSpec,
    strategy: &InitStrategy,
    rng: &mut ChaCha8Rng,
) -> Result<(ParameterVector, Vec<String>), SamplerError> {
    const FLOOR: f64 = 1e-6;
    let mut warnings = Vec::new();
    let theta = match strategy {
        InitStrategy::NullStart => {
            let mut theta = spec.template()?;
            let total_time: f64 = d.records.iter().map(|r| r.time).sum();
            for (k, cm) in theta.causes.iter_mut().enumerate() {
                let events = d.events_of(k) as f64;
                if events == 0.0 {
                    warnings.push(format!(
                        "cause {k} has no events; baseline initialized at floor {FLOOR}"
                    ));
                }
                match &mut cm.baseline {
                    Baseline::Weibull(w) => {
                        let crude = if total_time > 0.0 { events / total_time } else { 0.0 };
                        w.rate = crude.max(FLOOR);
                    }
                    Baseline::Piecewise(p) => {
                        let r = p.levels.len();
                        let mut occur = vec![0.0; r];
                        let mut exposure = vec![0.0; r];
                        for rec in &d.records {
                            if rec.status.is_event_of(k) {
                                occur[p.interval_index(rec.time)] += 1.0;
                            }
                            for (e, x) in exposure.iter_mut().zip(p.exposures(rec.time)) {
                                *e += x;
                            }
                        }
                        for (level, (o, e)) in p.levels.iter_mut().zip(occur.iter().zip(&exposure)) {
                            *level = if *e > 0.0 { (o / e).max(FLOOR) } else { FLOOR };
                        }
                    }
                }
            }
            theta
        }
        InitStrategy::PriorDraw => {
            let mut theta = spec.template()?;
            for (k, cm) in theta.causes.iter_mut().enumerate() {
                let cp = &priors.per_cause[k];
                match (&mut cm.baseline, &cp.baseline) {
                    (Baseline::Weibull(w), BaselinePrior::Weibull { shape, rate }) => {
                        if let crate::model::BaselineFamily::Weibull { fixed_shape: Some(s) } =
                            spec.baselines[k]
                        {
                            w.shape = s;
                        } else {
                            w.shape = shape.sample(rng).max(1e-8);
                        }
                        w.rate = rate.sample(rng).max(1e-300);
                    }
                    (Baseline::Piecewise(p), BaselinePrior::Piecewise { levels }) => {
                        p.levels = levels
                            .sample(&p.knots, rng)
                            .into_iter()
                            .map(|g| g.max(1e-300))
                            .collect();
                    }
                    _ => {
                        return Err(SamplerError::Incompatible(format!(
                            "cause {k}: prior family does not match baseline family"
                        )))
                    }
                }
                for b in cm.coefficients.iter_mut() {
                    *b = cp.coefficient.sample(rng);
                }
            }
            theta
        }
        InitStrategy::User(user) => {
            if user.causes.len() != spec.n_causes() {
                return Err(SamplerError::InitFailure(format!(
                    "user init has {} causes, model has {}",
                    user.causes.len(),
                    spec.n_causes()
                )));
            }
            if !log_prior_density(priors, user).is_finite() {
                return Err(SamplerError::InitFailure(
                    "user init lies outside the prior support".into(),
                ));
            }
            user.clone()
        }
    };
    Ok((theta, warnings))
}

struct BlockSpec {
    slot: usize,
    cause: usize,
    walk: Walk,
}

fn build_blocks(layout: &ParameterLayout, priors: &PriorSpec) -> Vec<BlockSpec> {
    layout
        .params
        .iter()
        .enumerate()
        .map(|(slot, id)| BlockSpec { slot, cause: id.cause, walk: walk_for(id.kind, id.cause, priors) })
        .collect()
}

/// Mutable per-chain state shared by the burn-in and retained phases.
struct ChainState<'a> {
    layout: &'a ParameterLayout,
    priors: &'a PriorSpec,
    blocks: &'a [BlockSpec],
    cause_data: &'a [CauseData],
    theta: ParameterVector,
    cause_ll: Vec<f64>,
    contrib: Vec<Vec<f64>>,
    scratch: Vec<f64>,
    log_prior: f64,
    log_sigma: Vec<f64>,
    rng: ChaCha8Rng,
}

impl<'a> ChainState<'a> {
    fn new(
        layout: &'a ParameterLayout,
        priors: &'a PriorSpec,
        blocks: &'a [BlockSpec],
        cause_data: &'a [CauseData],
        theta: ParameterVector,
        log_sigma: Vec<f64>,
        rng: ChaCha8Rng,
    ) -> Result<Self, SamplerError> {
        let mut contrib = Vec::with_capacity(cause_data.len());
        let mut cause_ll = Vec::with_capacity(cause_data.len());
        for (k, cd) in cause_data.iter().enumerate() {
            let mut buf = Vec::new();
            cd.contributions_into(&theta.causes[k].baseline, &theta.causes[k].coefficients, &mut buf);
            let ll = par::pairwise_sum(&buf);
            contrib.push(buf);
            cause_ll.push(ll);
        }
        let log_prior = log_prior_density(priors, &theta);
        let total: f64 = cause_ll.iter().sum::<f64>() + log_prior;
        if !total.is_finite() {
            return Err(SamplerError::InitFailure(format!(
                "log-likelihood {} + log-prior {log_prior}",
                cause_ll.iter().sum::<f64>()
            )));
        }
        Ok(ChainState {
            layout,
            priors,
            blocks,
            cause_data,
            theta,
            cause_ll,
            contrib,
            scratch: Vec::new(),
            log_prior,
            log_sigma,
            rng,
        })
    }

    /// One full sweep over all blocks, writing per-block acceptance flags.
    fn sweep(&mut self, accepted: &mut [bool]) {
        for (b, block) in self.blocks.iter().enumerate() {
            let current = self.layout.get(&self.theta, block.slot);
            let sigma = self.log_sigma[b].exp();
            let (proposal, corr) = block.walk.propose(current, sigma, &mut self.rng);
            self.layout.set(&mut self.theta, block.slot, proposal);

            let k = block.cause;
            let cm = &self.theta.causes[k];
            self.cause_data[k].contributions_into(&cm.baseline, &cm.coefficients, &mut self.scratch);
            let ll_new = par::pairwise_sum(&self.scratch);
            let prior_new = log_prior_density(self.priors, &self.theta);

            let log_alpha = ll_new - self.cause_ll[k] + prior_new - self.log_prior + corr;
            let accept =
                !log_alpha.is_nan() && self.rng.random::<f64>().ln() < log_alpha;
            if accept {
                std::mem::swap(&mut self.contrib[k], &mut self.scratch);
                self.cause_ll[k] = ll_new;
                self.log_prior = prior_new;
            } else {
                self.layout.set(&mut self.theta, block.slot, current);
            }
            accepted[b] = accept;
        }
    }

    fn checkpoint(&self) -> ChainCheckpoint {
        ChainCheckpoint {
            values: self.layout.flatten(&self.theta),
            log_sigma: self.log_sigma.clone(),
            rng: self.rng.clone(),
        }
    }
}

/// Consecutive zero-acceptance adaptation windows tolerated before a block is
/// declared stuck; the shrinking proposal scale makes acceptance certain long
/// before this unless the posterior is pathological.
const STUCK_WINDOWS: usize = 5;

#[allow(clippy::too_many_arguments)]
fn run_one_chain(
    layout: &ParameterLayout,
    priors: &PriorSpec,
    blocks: &[BlockSpec],
    cause_data: &[CauseData],
    names: &[String],
    config: &SamplerConfig,
    init: ParameterVector,
    chain_index: usize,
) -> Result<(ChainDraws, Vec<f64>, ChainCheckpoint), SamplerError> {
    let rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(chain_index as u64));
    let n_blocks = blocks.len();
    let init_sigma: Vec<f64> = blocks
        .iter()
        .map(|b| match b.walk {
            Walk::Plain => 0.3f64.ln(),
            Walk::Log | Walk::Logit { .. } => 0.4f64.ln(),
        })
        .collect();
    let mut state = ChainState::new(layout, priors, blocks, cause_data, init, init_sigma, rng)?;

    // Burn-in with Robbins-Monro adaptation toward the target acceptance.
    let mut accepted = vec![false; n_blocks];
    let mut window_accepts = vec![0usize; n_blocks];
    let mut zero_streak = vec![0usize; n_blocks];
    let mut batch = 0usize;
    for i in 1..=config.burn_in {
        state.sweep(&mut accepted);
        for (w, a) in window_accepts.iter_mut().zip(&accepted) {
            *w += *a as usize;
        }
        if i % config.adaptation_window == 0 {
            batch += 1;
            let step = 1.0 / (batch as f64).sqrt();
            for b in 0..n_blocks {
                let rate = window_accepts[b] as f64 / config.adaptation_window as f64;
                state.log_sigma[b] += step * (rate - config.target_acceptance);
                if window_accepts[b] == 0 {
                    zero_streak[b] += 1;
                    if zero_streak[b] >= STUCK_WINDOWS {
                        return Err(SamplerError::StuckBlock {
                            name: names[blocks[b].slot].clone(),
                            windows: STUCK_WINDOWS,
                        });
                    }
                } else {
                    zero_streak[b] = 0;
                }
                window_accepts[b] = 0;
            }
        }
    }

    let checkpoint = state.checkpoint();
    let (draws, acceptance) = retained_phase_over(&mut state, config);
    Ok((draws, acceptance, checkpoint))
}

fn retained_phase_over(state: &mut ChainState, config: &SamplerConfig) -> (ChainDraws, Vec<f64>) {
    let n_blocks = state.blocks.len();
    let mut accepted = vec![false; n_blocks];
    let mut accept_totals = vec![0usize; n_blocks];
    let mut draws = ChainDraws {
        iterations: Vec::with_capacity(config.retained()),
        draws: Vec::with_capacity(config.retained()),
    };
    for i in (config.burn_in + 1)..=config.iterations {
        state.sweep(&mut accepted);
        for (t, a) in accept_totals.iter_mut().zip(&accepted) {
            *t += *a as usize;
        }
        if (i - config.burn_in) % config.thin == 0 {
            draws.iterations.push(i);
            draws.draws.push(state.layout.flatten(&state.theta));
        }
    }
    let total = (config.iterations - config.burn_in) as f64;
    let acceptance = accept_totals.iter().map(|&a| a as f64 / total).collect();
    (draws, acceptance)
}

/// Replay the retained phase from a checkpoint. Proposal scales are frozen,
/// so the kernel is Markov and the replay reproduces the original retained
/// draws exactly.
pub fn run_retained_phase(
    spec: &ModelSpec,
    d: &Dataset,
    priors: &PriorSpec,
    config: &SamplerConfig,
    checkpoint: ChainCheckpoint,
) -> Result<ChainDraws, SamplerError> {
    config.validate()?;
    validate_inputs(spec, d, priors)?;
    let layout = spec.layout();
    let template = spec.template()?;
    let blocks = build_blocks(&layout, priors);
    let cause_data: Vec<CauseData> = template
        .causes
        .iter()
        .enumerate()
        .map(|(k, cm)| CauseData::new(d, cm, k))
        .collect();
    let theta = layout.unflatten(&template, &checkpoint.values)?;
    let mut state = ChainState::new(
        &layout,
        priors,
        &blocks,
        &cause_data,
        theta,
        checkpoint.log_sigma,
        checkpoint.rng,
    )?;
    let (draws, _) = retained_phase_over(&mut state, config);
    Ok(draws)
}

/// Run the full multi-chain sampler with null-start initialization.
pub fn run_chains(
    spec: &ModelSpec,
    d: &Dataset,
    priors: &PriorSpec,
    config: &SamplerConfig,
) -> Result<PosteriorSample, SamplerError> {
    run_chains_from(spec, d, priors, config, &InitStrategy::NullStart)
}

/// Run the full multi-chain sampler with an explicit initialization strategy.
pub fn run_chains_from(
    spec: &ModelSpec,
    d: &Dataset,
    priors: &PriorSpec,
    config: &SamplerConfig,
    init: &InitStrategy,
) -> Result<PosteriorSample, SamplerError> {
    config.validate()?;
    validate_inputs(spec, d, priors)?;
    let layout = spec.layout();
    let template = spec.template()?;
    let names = layout.names(spec, &d.cause_labels, &d.schema.encoded_names());
    let blocks = build_blocks(&layout, priors);
    let cause_data: Vec<CauseData> = template
        .causes
        .iter()
        .enumerate()
        .map(|(k, cm)| CauseData::new(d, cm, k))
        .collect();

    // Initialization is seeded separately from the chain streams so every
    // chain starts from the same point.
    let mut init_rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x9E37_79B9));
    let (theta0, warnings) = initialize(spec, d, priors, init, &mut init_rng)?;

    let results: Vec<Result<(ChainDraws, Vec<f64>, ChainCheckpoint), SamplerError>> =
        par::map_indices(config.chains, |c| {
            run_one_chain(&layout, priors, &blocks, &cause_data, &names, config, theta0.clone(), c)
        });

    let mut chains = Vec::with_capacity(config.chains);
    let mut acceptance = Vec::with_capacity(config.chains);
    let mut checkpoints = Vec::with_capacity(config.chains);
    for r in results {
        let (draws, acc, ckpt) = r?;
        chains.push(draws);
        acceptance.push(acc);
        checkpoints.push(ckpt);
    }

    Ok(PosteriorSample {
        spec: spec.clone(),
        layout,
        template,
        names,
        cause_labels: d.cause_labels.clone(),
        config: config.clone(),
        chains,
        acceptance,
        checkpoints,
        warnings,
    })
}

/// Potential scale reduction factor for one parameter: between/within
/// variance form with the (M−1)/M correction.
pub fn gelman_rubin(s: &PosteriorSample, param: usize) -> Result<f64, SamplerError> {
    psrf(&s.per_chain(param))
}

/// PSRF over raw per-chain draws.
pub fn psrf(chains: &[Vec<f64>]) -> Result<f64, SamplerError> {
    if chains.len() < 2 {
        return Err(SamplerError::SingleChain);
    }
    let m = chains.iter().map(|c| c.len()).min().unwrap_or(0);
    if m < 2 {
        return Err(SamplerError::BadConfig("chains too short for PSRF".into()));
    }
    let trimmed: Vec<&[f64]> = chains.iter().map(|c| &c[..m]).collect();
    let means: Vec<f64> = trimmed.iter().map(|c| stats::mean(c)).collect();
    let within: f64 =
        trimmed.iter().map(|c| stats::sample_variance(c)).sum::<f64>() / trimmed.len() as f64;
    let between = m as f64 * stats::sample_variance(&means);
    if within == 0.0 {
        return Ok(if between == 0.0 { 1.0 } else { f64::INFINITY });
    }
    let mf = m as f64;
    Ok(((mf - 1.0) / mf + between / (mf * within)).sqrt())
}

/// Sensitivity harness: fit under a base prior and alternatives, returning
/// for each alternative the maximum over parameters of
/// |Δ posterior mean| / posterior sd(base).
pub fn prior_shift_in_sd(
    spec: &ModelSpec,
    d: &Dataset,
    base: &PriorSpec,
    alternatives: &[PriorSpec],
    config: &SamplerConfig,
) -> Result<Vec<f64>, SamplerError> {
    let reference = run_chains(spec, d, base, config)?;
    let p = reference.n_params();
    let ref_stats: Vec<(f64, f64)> = (0..p)
        .map(|j| {
            let v = reference.pooled(j);
            (stats::mean(&v), stats::sample_sd(&v))
        })
        .collect();
    let mut shifts = Vec::with_capacity(alternatives.len());
    for alt in alternatives {
        let fit = run_chains(spec, d, alt, config)?;
        let mut max_shift: f64 = 0.0;
        for j in 0..p {
            let v = fit.pooled(j);
            let shift = (stats::mean(&v) - ref_stats[j].0).abs() / ref_stats[j].1.max(1e-12);
            max_shift = max_shift.max(shift);
        }
        shifts.push(max_shift);
    }
    Ok(shifts)
}
