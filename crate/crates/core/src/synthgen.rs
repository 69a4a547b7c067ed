//! Deterministic synthetic scored datasets with known ground-truth hazards,
//! plus an independent grid maximizer of the partial likelihood, used to
//! validate the estimators end to end.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::dataset::{Label, RecordSet, ScoredRecord};
use crate::error::{Error, Result};

/// Marginal distribution of one synthetic covariate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CovariateSpec {
    Bernoulli { p: f64 },
    Uniform { low: f64, high: f64 },
}

impl CovariateSpec {
    /// Parses `bernoulli:p` or `uniform:low:high`.
    pub fn parse(text: &str) -> Option<CovariateSpec> {
        let parts: Vec<&str> = text.split(':').collect();
        match parts.as_slice() {
            ["bernoulli", p] => p.parse().ok().map(|p| CovariateSpec::Bernoulli { p }),
            ["uniform", low, high] => match (low.parse().ok(), high.parse().ok()) {
                (Some(low), Some(high)) => Some(CovariateSpec::Uniform { low, high }),
                _ => None,
            },
            _ => None,
        }
    }
}

/// Generator configuration. The seed fully determines the output: draws
/// come from ChaCha20, a published counter-based stream, in a fixed
/// per-observation order (covariates, event draw, censor draw, censored
/// score draw).
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n: usize,
    pub true_beta: Vec<f64>,
    /// Exponential baseline hazard over score.
    pub baseline_rate: f64,
    /// Share of observations relabeled `unlabeled` at a uniform earlier
    /// score.
    pub censor_fraction: f64,
    pub covariates: Vec<CovariateSpec>,
    pub seed: u64,
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        if self.true_beta.len() != self.covariates.len() {
            return Err(Error::Validation(format!(
                "true_beta has {} entries for {} covariates",
                self.true_beta.len(),
                self.covariates.len()
            )));
        }
        if !self.baseline_rate.is_finite() || self.baseline_rate <= 0.0 {
            return Err(Error::Validation("baseline_rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.censor_fraction) {
            return Err(Error::Validation(
                "censor_fraction must be in [0, 1)".into(),
            ));
        }
        for spec in &self.covariates {
            match spec {
                CovariateSpec::Bernoulli { p } if !(0.0..=1.0).contains(p) => {
                    return Err(Error::Validation(format!(
                        "bernoulli probability {p} must be in [0, 1]"
                    )));
                }
                CovariateSpec::Uniform { low, high }
                    if !low.is_finite() || !high.is_finite() || low >= high =>
                {
                    return Err(Error::Validation(format!(
                        "uniform bounds ({low}, {high}) must satisfy low < high"
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Draws a scored dataset whose event scores follow the hazard
/// `baseline_rate * exp(beta . Z)` (exponential over score, sampled by
/// inverse transform). Censored observations are relabeled `unlabeled` and
/// assigned a uniform score below their event score, exercising the same
/// censoring semantics the episode builder applies.
pub fn generate(config: &SynthConfig) -> Result<RecordSet> {
    config.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let covariate_names: Vec<String> = (1..=config.covariates.len())
        .map(|q| format!("x{q}"))
        .collect();

    let mut records = Vec::with_capacity(config.n);
    for i in 0..config.n {
        let covariates: Vec<f64> = config
            .covariates
            .iter()
            .map(|spec| match spec {
                CovariateSpec::Bernoulli { p } => {
                    if rng.gen_bool(*p) {
                        1.0
                    } else {
                        0.0
                    }
                }
                CovariateSpec::Uniform { low, high } => rng.gen_range(*low..*high),
            })
            .collect();
        let eta: f64 = config
            .true_beta
            .iter()
            .zip(&covariates)
            .map(|(b, z)| b * z)
            .sum();
        let rate = config.baseline_rate * eta.exp();
        let uniform: f64 = rng.gen();
        let event_score = -(1.0 - uniform).ln() / rate;

        let censored = config.censor_fraction > 0.0 && rng.gen::<f64>() < config.censor_fraction;
        let (score, label, terminal) = if censored {
            (event_score * rng.gen::<f64>(), Label::Unlabeled, false)
        } else {
            (event_score, Label::Responder, true)
        };
        records.push(ScoredRecord {
            observation_id: format!("obs_{:05}", i + 1),
            score,
            label,
            is_terminal: terminal,
            covariates: covariates.clone(),
        });
    }
    RecordSet::new(covariate_names, records)
}

/// Result of a grid search over the single-covariate partial likelihood.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSearch {
    pub argmax: f64,
    /// True when the argmax landed on the first or last grid point, so the
    /// optimum may lie outside the searched range. A flat likelihood also
    /// reports the first grid point (the documented tie-break).
    pub at_boundary: bool,
}

/// Direct evaluation of the Breslow partial log likelihood for a single
/// covariate, written independently of the fitting code: one explicit
/// risk-set sum per distinct event score.
fn direct_loglik(
    event_scores: &[f64],
    scores: &[f64],
    events: &[bool],
    covariates: &[f64],
    beta: f64,
) -> f64 {
    let mut value = 0.0;
    for &event_score in event_scores {
        let mut tied_events = 0.0;
        let mut event_terms = 0.0;
        let mut risk_sum = 0.0;
        for ((&score, &event), &z) in scores.iter().zip(events).zip(covariates) {
            if score >= event_score {
                risk_sum += (beta * z).exp();
            }
            if event && score == event_score {
                tied_events += 1.0;
                event_terms += beta * z;
            }
        }
        value += event_terms - tied_events * risk_sum.ln();
    }
    value
}

/// Argmax of the single-covariate partial log likelihood over the grid
/// `lo, lo+step, ..., <= hi`.
pub fn grid_oracle(episodes: &crate::dataset::EpisodeSet, lo: f64, hi: f64, step: f64) -> Result<GridSearch> {
    if episodes.covariate_names().len() != 1 {
        return Err(Error::Unsupported(
            "grid search handles exactly one covariate".into(),
        ));
    }
    if !step.is_finite() || step <= 0.0 || !lo.is_finite() || !hi.is_finite() || lo >= hi {
        return Err(Error::Validation(
            "grid requires step > 0 and lo < hi".into(),
        ));
    }
    if episodes.n_events() == 0 {
        return Err(Error::NoEvents);
    }

    let scores: Vec<f64> = episodes.episodes().iter().map(|e| e.score).collect();
    let events: Vec<bool> = episodes.episodes().iter().map(|e| e.event).collect();
    let covariates: Vec<f64> = episodes
        .episodes()
        .iter()
        .map(|e| e.covariates[0])
        .collect();
    // A covariate with no variation makes the likelihood exactly flat; the
    // tie-break is the lower grid bound, flagged as a boundary result.
    if covariates.windows(2).all(|w| w[0] == w[1]) {
        return Ok(GridSearch {
            argmax: lo,
            at_boundary: true,
        });
    }
    let mut event_scores: Vec<f64> = scores
        .iter()
        .zip(&events)
        .filter(|(_, &e)| e)
        .map(|(&s, _)| s)
        .collect();
    event_scores.sort_by(f64::total_cmp);
    event_scores.dedup();

    let steps = ((hi - lo) / step).floor() as usize;
    let mut best_index = 0;
    let mut best_value = f64::NEG_INFINITY;
    for j in 0..=steps {
        let beta = lo + j as f64 * step;
        let value = direct_loglik(&event_scores, &scores, &events, &covariates, beta);
        if value > best_value {
            best_value = value;
            best_index = j;
        }
    }
    Ok(GridSearch {
        argmax: lo + best_index as f64 * step,
        at_boundary: best_index == 0 || best_index == steps,
    })
}
