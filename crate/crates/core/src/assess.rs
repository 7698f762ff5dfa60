//! Model assessment: competing-risks CPO, LPML, DIC and WAIC.
//!
//! The CPO of a censored subject is the leave-one-out predictive survival
//! probability at the observed time; the CPO of a cause-k event uses the
//! predictive subdensity. Both are estimated from MCMC output with the
//! harmonic-mean estimator CPOᵢ = [ (1/M) Σ_m 1/Lᵢ(θ⁽ᵐ⁾) ]⁻¹, computed in
//! log space. The estimator is known to be heavy-tailed, so each subject
//! carries an instability flag (set when the top 1% of inverse-likelihood
//! terms hold more than half of the sum) together with a truncated variant
//! that drops the largest 0.1% of terms.

use crate::data::Dataset;
use crate::hazard::ParameterVector;
use crate::likelihood::{subject_log_contribution, LikelihoodError};
use crate::model::ParamKind;
use crate::par;
use crate::sampler::PosteriorSample;
use crate::stats;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AssessError {
    #[error("posterior sample has no retained draws")]
    EmptySample,
    #[error("subject `{id}` has CPO = 0; LPML is undefined")]
    ZeroCpo { id: String },
    #[error("plug-in posterior mean for `{name}` lies outside the parameter support")]
    PlugInOutsideSupport { name: String },
    #[error(transparent)]
    Likelihood(#[from] LikelihoodError),
}

/// Per-subject CPO estimate with stability diagnostics.
#[derive(Debug, Clone)]
pub struct CpoEntry {
    pub id: String,
    /// Harmonic-mean estimate; 0.0 when some draw had exactly zero likelihood.
    pub cpo: f64,
    /// Fallback estimate dropping the largest 0.1% of inverse-likelihood terms.
    pub cpo_truncated: f64,
    /// Top 1% of inverse-likelihood terms carry more than 50% of the sum.
    pub unstable: bool,
}

/// Full assessment of one fitted model on one dataset.
#[derive(Debug, Clone)]
pub struct AssessmentReport {
    pub cpo: Vec<CpoEntry>,
    pub lpml: f64,
    pub dic: f64,
    pub p_d: f64,
    pub waic: f64,
    pub p_waic: f64,
}

/// Per-subject log-likelihood values across all pooled draws: out[i][m].
fn log_lik_matrix(s: &PosteriorSample, d: &Dataset) -> Result<Vec<Vec<f64>>, AssessError> {
    let draws = s.all_draws();
    if draws.is_empty() {
        return Err(AssessError::EmptySample);
    }
    let rows: Vec<Result<Vec<f64>, LikelihoodError>> = par::map_values(&d.records, |r| {
        draws.iter().map(|theta| subject_log_contribution(r, theta)).collect()
    });
    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        out.push(row?);
    }
    Ok(out)
}

fn cpo_from_row(row: &[f64]) -> (f64, f64, bool) {
    let m = row.len();
    // inverse-likelihood terms in log space
    let inv: Vec<f64> = row.iter().map(|ll| -ll).collect();
    if inv.iter().any(|w| w.is_infinite() && *w > 0.0) {
        // some draw had exactly zero likelihood
        return (0.0, 0.0, true);
    }
    let lse_all = stats::log_sum_exp(&inv);
    let log_cpo = (m as f64).ln() - lse_all;

    let mut sorted = inv.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let top = ((m as f64) * 0.01).ceil().max(1.0) as usize;
    let lse_top = stats::log_sum_exp(&sorted[..top.min(m)]);
    let unstable = lse_top - lse_all > 0.5f64.ln();

    let drop = ((m as f64) * 0.001).ceil().max(1.0) as usize;
    let kept = &sorted[drop.min(m - 1)..];
    let log_cpo_trunc = (kept.len() as f64).ln() - stats::log_sum_exp(kept);

    (log_cpo.exp(), log_cpo_trunc.exp(), unstable)
}

/// Harmonic-mean CPO estimates for every subject.
pub fn cpo(s: &PosteriorSample, d: &Dataset) -> Result<Vec<CpoEntry>, AssessError> {
    let matrix = log_lik_matrix(s, d)?;
    Ok(matrix
        .iter()
        .zip(&d.records)
        .map(|(row, r)| {
            let (cpo, cpo_truncated, unstable) = cpo_from_row(row);
            CpoEntry { id: r.id.clone(), cpo, cpo_truncated, unstable }
        })
        .collect())
}

/// LPML = Σ log CPOᵢ; fails when any CPO is exactly zero.
pub fn lpml(cpos: &[CpoEntry]) -> Result<f64, AssessError> {
    let mut logs = Vec::with_capacity(cpos.len());
    for c in cpos {
        if c.cpo <= 0.0 {
            return Err(AssessError::ZeroCpo { id: c.id.clone() });
        }
        logs.push(c.cpo.ln());
    }
    Ok(par::pairwise_sum(&logs))
}

/// Plug-in posterior mean: positivity-constrained parameters are averaged on
/// the log scale so the plug-in stays inside the support.
fn plug_in_mean(s: &PosteriorSample) -> Result<ParameterVector, AssessError> {
    let p = s.n_params();
    let mut values = Vec::with_capacity(p);
    for j in 0..p {
        let pooled = s.pooled(j);
        let v = if s.layout.params[j].kind.is_positive() {
            let logs: Vec<f64> = pooled.iter().map(|x| x.ln()).collect();
            stats::mean(&logs).exp()
        } else {
            stats::mean(&pooled)
        };
        let bad = !v.is_finite()
            || (s.layout.params[j].kind.is_positive() && v <= 0.0)
            || (matches!(s.layout.params[j].kind, ParamKind::WeibullShape) && v <= 0.0);
        if bad {
            return Err(AssessError::PlugInOutsideSupport { name: s.names[j].clone() });
        }
        values.push(v);
    }
    Ok(s.layout
        .unflatten(&s.template, &values)
        .expect("plug-in values match layout"))
}

/// Deviance information criterion: (DIC, p_D) with D(θ) = −2·loglik and
/// p_D = D̄ − D(θ̄).
pub fn dic(s: &PosteriorSample, d: &Dataset) -> Result<(f64, f64), AssessError> {
    let matrix = log_lik_matrix(s, d)?;
    let m = matrix.first().map(|r| r.len()).unwrap_or(0).max(1);
    // mean deviance over draws
    let mut dev_sum = 0.0;
    for draw in 0..m {
        let col: Vec<f64> = matrix.iter().map(|row| row[draw]).collect();
        dev_sum += -2.0 * par::pairwise_sum(&col);
    }
    let mean_dev = dev_sum / m as f64;

    let theta_bar = plug_in_mean(s)?;
    let ll = crate::likelihood::log_likelihood(d, &theta_bar)?;
    let dev_at_mean = -2.0 * ll.total;
    let p_d = mean_dev - dev_at_mean;
    Ok((mean_dev + p_d, p_d))
}

/// Watanabe-Akaike information criterion: (WAIC, p_WAIC) with pointwise
/// lppd and the sample-variance complexity term.
pub fn waic(s: &PosteriorSample, d: &Dataset) -> Result<(f64, f64), AssessError> {
    let matrix = log_lik_matrix(s, d)?;
    let m = matrix.first().map(|r| r.len()).unwrap_or(0).max(1) as f64;
    let mut lppd = Vec::with_capacity(matrix.len());
    let mut p_terms = Vec::with_capacity(matrix.len());
    for row in &matrix {
        lppd.push(stats::log_sum_exp(row) - m.ln());
        p_terms.push(stats::sample_variance(row));
    }
    let p_waic = par::pairwise_sum(&p_terms);
    let waic = -2.0 * (par::pairwise_sum(&lppd) - p_waic);
    Ok((waic, p_waic))
}

/// Compute every criterion from one shared pass over the sample.
pub fn assess(s: &PosteriorSample, d: &Dataset) -> Result<AssessmentReport, AssessError> {
    let cpos = cpo(s, d)?;
    let lpml_value = lpml(&cpos)?;
    let (dic_value, p_d) = dic(s, d)?;
    let (waic_value, p_waic) = waic(s, d)?;
    Ok(AssessmentReport { cpo: cpos, lpml: lpml_value, dic: dic_value, p_d, waic: waic_value, p_waic })
}
