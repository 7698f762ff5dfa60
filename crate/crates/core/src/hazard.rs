//! Baseline hazard families and derived survival quantities.
//!
//! Two parametric baselines are supported: Weibull (shape α, rate-scale λ,
//! hazard λαt^{α−1}) and piecewise constant on a knot partition of the time
//! axis with the last interval open to ∞. On top of them sit the
//! cause-specific proportional-hazards model h_k(t|x) = h_{0,k}(t)·exp(xᵀβ_k)
//! and every quantity the rest of the crate consumes: overall survival,
//! subdensities, cumulative incidence (adaptive quadrature), and multi-state
//! transition probabilities.
//!
//! Survival is always accumulated in log space. Probabilities that fall below
//! `exp(LOG_UNDERFLOW)` are reported as exact zeros; callers that must
//! distinguish underflow (conditioning, draw exclusion) test the log value
//! against [`LOG_UNDERFLOW`].

use crate::quad::{self, QuadError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Log-survival values at or below this threshold are treated as probability
/// zero (exp(−745) is the edge of f64 subnormal range).
pub const LOG_UNDERFLOW: f64 = -745.0;

/// Absolute tolerance for cumulative-incidence quadrature.
pub const CIF_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum HazardError {
    #[error("time must be positive, got {0}")]
    NonPositiveTime(f64),
    #[error("time must be nonnegative, got {0}")]
    NegativeTime(f64),
    #[error("cause index {cause} out of range for {n_causes} causes")]
    CauseOutOfRange { cause: usize, n_causes: usize },
    #[error("covariate dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid baseline: {0}")]
    InvalidBaseline(String),
    #[error("interval start {s} exceeds end {t}")]
    BadInterval { s: f64, t: f64 },
    #[error("conditioning event has zero probability (survival underflow at s = {s})")]
    ConditioningUnderflow { s: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// Weibull baseline hazard h₀(t) = λ·α·t^{α−1}, cumulative H₀(t) = λ·t^α.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeibullBaseline {
    /// Shape α > 0.
    pub shape: f64,
    /// Rate-scale λ > 0.
    pub rate: f64,
}

impl WeibullBaseline {
    pub fn new(shape: f64, rate: f64) -> Result<Self, HazardError> {
        if !(shape > 0.0) || !shape.is_finite() {
            return Err(HazardError::InvalidBaseline(format!(
                "Weibull shape must be positive and finite, got {shape}"
            )));
        }
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(HazardError::InvalidBaseline(format!(
                "Weibull rate must be positive and finite, got {rate}"
            )));
        }
        Ok(Self { shape, rate })
    }

    #[inline]
    pub fn hazard(&self, t: f64) -> f64 {
        self.rate * self.shape * t.powf(self.shape - 1.0)
    }

    #[inline]
    pub fn cumulative(&self, t: f64) -> f64 {
        self.rate * t.powf(self.shape)
    }

    #[inline]
    pub fn log_hazard(&self, t: f64) -> f64 {
        self.rate.ln() + self.shape.ln() + (self.shape - 1.0) * t.ln()
    }
}

/// Piecewise-constant baseline hazard. `knots` is the partition
/// a₀=0 < a₁ < … < a_{R−1}; level r applies on (a_{r−1}, a_r] and the last
/// level extends over (a_{R−1}, ∞). Intervals are left-open/right-closed,
/// so the hazard at a knot is the level of the interval ending there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseConstantBaseline {
    pub knots: Vec<f64>,
    pub levels: Vec<f64>,
}

impl PiecewiseConstantBaseline {
    pub fn new(knots: Vec<f64>, levels: Vec<f64>) -> Result<Self, HazardError> {
        if knots.is_empty() || knots[0] != 0.0 {
            return Err(HazardError::InvalidBaseline(
                "piecewise knots must start at 0".into(),
            ));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(HazardError::InvalidBaseline(
                "piecewise knots must be strictly increasing and finite".into(),
            ));
        }
        if levels.len() != knots.len() {
            return Err(HazardError::InvalidBaseline(format!(
                "expected {} levels (one per interval), got {}",
                knots.len(),
                levels.len()
            )));
        }
        if levels.iter().any(|&g| !(g > 0.0) || !g.is_finite()) {
            return Err(HazardError::InvalidBaseline(
                "piecewise levels must be positive and finite".into(),
            ));
        }
        Ok(Self { knots, levels })
    }

    /// 0-based interval index containing `t > 0` under the (a_{r−1}, a_r]
    /// convention.
    #[inline]
    pub fn interval_index(&self, t: f64) -> usize {
        // knots[0] = 0 < t; interval i covers (knots[i], knots[i+1]].
        let r = self.knots.len();
        for i in 1..r {
            if t <= self.knots[i] {
                return i - 1;
            }
        }
        r - 1
    }

    #[inline]
    pub fn hazard(&self, t: f64) -> f64 {
        self.levels[self.interval_index(t)]
    }

    #[inline]
    pub fn cumulative(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        let r = self.knots.len();
        for i in 0..r {
            let lo = self.knots[i];
            if t <= lo {
                break;
            }
            let hi = if i + 1 < r { self.knots[i + 1].min(t) } else { t };
            acc += self.levels[i] * (hi - lo);
        }
        acc
    }

    /// Per-interval exposure contributions: overlap of (a_{r−1}, a_r] with
    /// [0, t]. The cumulative hazard is the dot product with `levels`.
    pub fn exposures(&self, t: f64) -> Vec<f64> {
        let r = self.knots.len();
        let mut out = vec![0.0; r];
        for i in 0..r {
            let lo = self.knots[i];
            if t <= lo {
                break;
            }
            let hi = if i + 1 < r { self.knots[i + 1].min(t) } else { t };
            out[i] = hi - lo;
        }
        out
    }
}

/// Baseline hazard of one cause.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Baseline {
    Weibull(WeibullBaseline),
    Piecewise(PiecewiseConstantBaseline),
}

impl Baseline {
    /// h₀(t) for t > 0.
    pub fn hazard(&self, t: f64) -> Result<f64, HazardError> {
        if !(t > 0.0) {
            return Err(HazardError::NonPositiveTime(t));
        }
        Ok(self.hazard_unchecked(t))
    }

    #[inline]
    pub(crate) fn hazard_unchecked(&self, t: f64) -> f64 {
        match self {
            Baseline::Weibull(w) => w.hazard(t),
            Baseline::Piecewise(p) => p.hazard(t),
        }
    }

    #[inline]
    pub(crate) fn log_hazard_unchecked(&self, t: f64) -> f64 {
        match self {
            Baseline::Weibull(w) => w.log_hazard(t),
            Baseline::Piecewise(p) => p.hazard(t).ln(),
        }
    }

    /// H₀(t) = ∫₀ᵗ h₀(u) du in closed form, for t ≥ 0.
    pub fn cumulative_hazard(&self, t: f64) -> Result<f64, HazardError> {
        if t < 0.0 {
            return Err(HazardError::NegativeTime(t));
        }
        Ok(self.cumulative_hazard_unchecked(t))
    }

    #[inline]
    pub(crate) fn cumulative_hazard_unchecked(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        match self {
            Baseline::Weibull(w) => w.cumulative(t),
            Baseline::Piecewise(p) => p.cumulative(t),
        }
    }
}

/// One cause's parameters: a baseline plus regression coefficients over a
/// subset of the encoded covariate columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauseModel {
    pub baseline: Baseline,
    pub coefficients: Vec<f64>,
    /// Indices into the full encoded covariate vector, one per coefficient.
    pub covariate_subset: Vec<usize>,
}

impl CauseModel {
    pub fn new(
        baseline: Baseline,
        coefficients: Vec<f64>,
        covariate_subset: Vec<usize>,
    ) -> Result<Self, HazardError> {
        if coefficients.len() != covariate_subset.len() {
            return Err(HazardError::DimensionMismatch(format!(
                "{} coefficients for {} selected covariates",
                coefficients.len(),
                covariate_subset.len()
            )));
        }
        Ok(Self { baseline, coefficients, covariate_subset })
    }

    /// Baseline-free cause model.
    pub fn without_covariates(baseline: Baseline) -> Self {
        Self { baseline, coefficients: Vec::new(), covariate_subset: Vec::new() }
    }

    pub fn validate_covariates(&self, x_len: usize) -> Result<(), HazardError> {
        if self.coefficients.len() != self.covariate_subset.len() {
            return Err(HazardError::DimensionMismatch(format!(
                "{} coefficients for {} selected covariates",
                self.coefficients.len(),
                self.covariate_subset.len()
            )));
        }
        if let Some(&bad) = self.covariate_subset.iter().find(|&&j| j >= x_len) {
            return Err(HazardError::DimensionMismatch(format!(
                "covariate index {bad} out of range for vector of length {x_len}"
            )));
        }
        Ok(())
    }

    /// xᵀβ over the selected columns of the full encoded vector.
    #[inline]
    pub fn linear_predictor(&self, x_full: &[f64]) -> f64 {
        self.covariate_subset
            .iter()
            .zip(&self.coefficients)
            .map(|(&j, &b)| x_full[j] * b)
            .sum()
    }

    /// Cause-specific hazard h(t|x) = h₀(t)·exp(xᵀβ).
    pub fn hazard(&self, x_full: &[f64], t: f64) -> Result<f64, HazardError> {
        self.validate_covariates(x_full.len())?;
        Ok(self.baseline.hazard(t)? * self.linear_predictor(x_full).exp())
    }

    /// Cause-specific cumulative hazard H(t|x) = H₀(t)·exp(xᵀβ).
    pub fn cumulative_hazard(&self, x_full: &[f64], t: f64) -> Result<f64, HazardError> {
        self.validate_covariates(x_full.len())?;
        Ok(self.baseline.cumulative_hazard(t)? * self.linear_predictor(x_full).exp())
    }
}

/// Full parameter vector θ = (θ₁, …, θ_K), one [`CauseModel`] per cause.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector {
    pub causes: Vec<CauseModel>,
}

/// Target state of a multi-state transition from "alive".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransitionTarget {
    Alive,
    /// Absorbing death state for the cause with this 0-based index.
    Cause(usize),
}

impl ParameterVector {
    pub fn new(causes: Vec<CauseModel>) -> Result<Self, HazardError> {
        if causes.is_empty() {
            return Err(HazardError::InvalidBaseline("need at least one cause".into()));
        }
        Ok(Self { causes })
    }

    pub fn n_causes(&self) -> usize {
        self.causes.len()
    }

    fn check_cause(&self, k: usize) -> Result<(), HazardError> {
        if k >= self.causes.len() {
            return Err(HazardError::CauseOutOfRange { cause: k, n_causes: self.causes.len() });
        }
        Ok(())
    }

    fn validate_covariates(&self, x_len: usize) -> Result<(), HazardError> {
        for c in &self.causes {
            c.validate_covariates(x_len)?;
        }
        Ok(())
    }

    /// log S(t|x) = −Σ_k H_k(t|x), for t ≥ 0.
    pub fn log_survival(&self, x_full: &[f64], t: f64) -> Result<f64, HazardError> {
        if t < 0.0 {
            return Err(HazardError::NegativeTime(t));
        }
        self.validate_covariates(x_full.len())?;
        Ok(self.log_survival_unchecked(x_full, t))
    }

    #[inline]
    pub(crate) fn log_survival_unchecked(&self, x_full: &[f64], t: f64) -> f64 {
        -self
            .causes
            .iter()
            .map(|c| c.baseline.cumulative_hazard_unchecked(t) * c.linear_predictor(x_full).exp())
            .sum::<f64>()
    }

    /// Overall survival S(t|x); underflows to exactly 0 below `exp(LOG_UNDERFLOW)`.
    pub fn survival(&self, x_full: &[f64], t: f64) -> Result<f64, HazardError> {
        let ls = self.log_survival(x_full, t)?;
        Ok(if ls <= LOG_UNDERFLOW { 0.0 } else { ls.exp() })
    }

    /// Subdensity f_k(t|x) = h_k(t|x)·S(t|x) for cause index `k`, t > 0.
    pub fn subdensity(&self, x_full: &[f64], k: usize, t: f64) -> Result<f64, HazardError> {
        self.check_cause(k)?;
        if !(t > 0.0) {
            return Err(HazardError::NonPositiveTime(t));
        }
        self.validate_covariates(x_full.len())?;
        Ok(self.subdensity_unchecked(x_full, k, t))
    }

    #[inline]
    pub(crate) fn subdensity_unchecked(&self, x_full: &[f64], k: usize, t: f64) -> f64 {
        let cm = &self.causes[k];
        let h = cm.baseline.hazard_unchecked(t) * cm.linear_predictor(x_full).exp();
        let ls = self.log_survival_unchecked(x_full, t);
        if ls <= LOG_UNDERFLOW {
            0.0
        } else {
            h * ls.exp()
        }
    }

    /// Cumulative incidence F_k(t|x) = ∫₀ᵗ h_k(u|x) S(u|x) du by adaptive
    /// Gauss–Legendre quadrature to absolute tolerance [`CIF_TOL`].
    pub fn cumulative_incidence(&self, x_full: &[f64], k: usize, t: f64) -> Result<f64, HazardError> {
        Ok(self.cif_grid(x_full, k, 0.0, &[t])?[0])
    }

    /// ∫_{s0}^{t_j} h_k(u|x) S(u|x) du for each grid point, computed
    /// cumulatively over the (sorted, ≥ s0) grid.
    pub fn cif_grid(
        &self,
        x_full: &[f64],
        k: usize,
        s0: f64,
        grid: &[f64],
    ) -> Result<Vec<f64>, HazardError> {
        self.check_cause(k)?;
        if s0 < 0.0 {
            return Err(HazardError::NegativeTime(s0));
        }
        self.validate_covariates(x_full.len())?;
        let mut prev = s0;
        for &t in grid {
            if t < prev {
                return Err(HazardError::BadInterval { s: prev, t });
            }
            prev = t;
        }
        let n_segments: usize = grid.len().max(1);
        let seg_tol = (CIF_TOL / n_segments as f64).max(1e-14);
        let f = |u: f64| self.subdensity_unchecked(x_full, k, u);
        let mut out = Vec::with_capacity(grid.len());
        let mut acc = 0.0;
        let mut lo = s0;
        for &t in grid {
            if t > lo {
                let breaks = self.integration_breaks(lo, t);
                acc += quad::adaptive_segments(&f, &breaks, seg_tol)?;
            }
            out.push(acc);
            lo = t;
        }
        Ok(out)
    }

    /// Segment boundaries for subdensity quadrature on [lo, hi]: piecewise
    /// knots are kinks; a Weibull shape ≠ 1 makes the integrand non-smooth at
    /// 0, handled by 64 geometrically shrinking subsegments at the left edge.
    fn integration_breaks(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut breaks = vec![lo];
        for c in &self.causes {
            if let Baseline::Piecewise(p) = &c.baseline {
                for &a in &p.knots {
                    if a > lo && a < hi {
                        breaks.push(a);
                    }
                }
            }
        }
        breaks.push(hi);
        breaks.sort_by(|a, b| a.total_cmp(b));
        breaks.dedup();

        let singular_origin = lo == 0.0
            && self.causes.iter().any(|c| match &c.baseline {
                Baseline::Weibull(w) => w.shape != 1.0,
                Baseline::Piecewise(_) => false,
            });
        if singular_origin {
            let first = breaks[1];
            let ratio = 1e-10f64.powf(1.0 / 64.0);
            let mut geo: Vec<f64> = (1..64).map(|i| first * ratio.powi(i)).collect();
            geo.retain(|&g| g > 0.0 && g < first);
            breaks.splice(1..1, geo.into_iter().rev());
        }
        breaks
    }

    /// Multi-state transition probability from "alive at s" to the target
    /// state at t ≥ s: S(t)/S(s) for staying alive, (F_k(t)−F_k(s))/S(s) for
    /// death from cause k. With s = 0 these reduce to S(t) and F_k(t).
    pub fn transition_probability(
        &self,
        x_full: &[f64],
        s: f64,
        t: f64,
        target: TransitionTarget,
    ) -> Result<f64, HazardError> {
        if s < 0.0 {
            return Err(HazardError::NegativeTime(s));
        }
        if t < s {
            return Err(HazardError::BadInterval { s, t });
        }
        let log_s_at_s = self.log_survival(x_full, s)?;
        if log_s_at_s <= LOG_UNDERFLOW {
            return Err(HazardError::ConditioningUnderflow { s });
        }
        match target {
            TransitionTarget::Alive => {
                let log_ratio = self.log_survival(x_full, t)? - log_s_at_s;
                Ok(if log_ratio <= LOG_UNDERFLOW { 0.0 } else { log_ratio.exp() })
            }
            TransitionTarget::Cause(k) => {
                let inc = self.cif_grid(x_full, k, s, &[t])?[0];
                Ok(inc / log_s_at_s.exp())
            }
        }
    }
}

/// Default fine knot grid (years) for a cause with an early-changing hazard.
pub fn default_fine_knots() -> Vec<f64> {
    vec![0.0, 0.25, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0]
}

/// Default coarse knot grid (years).
pub fn default_coarse_knots() -> Vec<f64> {
    vec![0.0, 2.0, 4.0]
}
