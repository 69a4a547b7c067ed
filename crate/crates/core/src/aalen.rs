//! Additive hazards model: least-squares estimation of cumulative
//! regression functions B_q(s), giving score-dependent covariate effects.
//!
//! At each distinct event score the 0/1 event vector of the at-risk
//! episodes is regressed on their covariates (with an intercept column),
//! and the per-score solutions are accumulated into step curves.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::dataset::EpisodeSet;
use crate::error::{Error, Result};
use crate::estimators::fmt_float;

/// Relative singular-value cutoff: the design is singular when the smallest
/// singular value of X^T X drops below this fraction of the largest.
const SINGULARITY_RTOL: f64 = 1e-10;

/// Name used for the intercept column (index 0 of every fit).
pub const INTERCEPT: &str = "intercept";

/// One step of a cumulative regression curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AalenPoint {
    pub score: f64,
    pub cumulative: f64,
    pub variance: f64,
}

/// Fitted additive hazards model: one cumulative coefficient curve per
/// covariate (index 0 is the intercept), estimable up to the first event
/// score where the at-risk design loses rank.
#[derive(Debug, Clone, PartialEq)]
pub struct AalenFit {
    covariate_names: Vec<String>,
    curves: Vec<Vec<AalenPoint>>,
    last_estimable_score: f64,
}

impl AalenFit {
    /// Covariate names, intercept first.
    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn last_estimable_score(&self) -> f64 {
        self.last_estimable_score
    }

    pub fn curve(&self, covariate: &str) -> Result<&[AalenPoint]> {
        let idx = self
            .covariate_names
            .iter()
            .position(|n| n == covariate)
            .ok_or_else(|| Error::UnknownCovariate(covariate.to_string()))?;
        Ok(&self.curves[idx])
    }

    /// CSV serialization: `covariate,score,cumulative,variance`, curves in
    /// covariate order.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["covariate", "score", "cumulative", "variance"])?;
        for (name, curve) in self.covariate_names.iter().zip(&self.curves) {
            for p in curve {
                out.write_record([
                    name.clone(),
                    fmt_float(p.score),
                    fmt_float(p.cumulative),
                    fmt_float(p.variance),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

struct EventScoreSums {
    score: f64,
    /// X^T X over the at-risk episodes.
    gram: DMatrix<f64>,
    /// X^T dD: column sums over the episodes with an event at this score.
    moment: DVector<f64>,
    /// X^T diag(dD) X over the event episodes.
    event_gram: DMatrix<f64>,
}

/// Fits the additive model. Accumulation stops at the first event score
/// with a rank-deficient at-risk design; a deficient design at the very
/// first event score is an error.
pub fn aalen_fit(episodes: &EpisodeSet) -> Result<AalenFit> {
    let p = episodes.covariate_names().len();
    let width = p + 1;
    if episodes.n_events() == 0 {
        return Err(Error::NoEvents);
    }

    let eps = episodes.episodes();
    let n = eps.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eps[b].score.total_cmp(&eps[a].score));

    // Walk scores descending so the at-risk design grows by accumulation;
    // snapshot the sums at each distinct event score.
    let mut gram = DMatrix::<f64>::zeros(width, width);
    let mut sums: Vec<EventScoreSums> = Vec::new();
    let mut row = DVector::<f64>::zeros(width);
    let mut i = 0;
    while i < n {
        let score = eps[order[i]].score;
        let mut j = i;
        let mut moment = DVector::<f64>::zeros(width);
        let mut event_gram = DMatrix::<f64>::zeros(width, width);
        let mut events = 0usize;
        while j < n && eps[order[j]].score == score {
            let idx = order[j];
            row[0] = 1.0;
            for (k, v) in eps[idx].covariates.iter().enumerate() {
                row[k + 1] = *v;
            }
            for k in 0..width {
                for l in k..width {
                    let contribution = row[k] * row[l];
                    gram[(k, l)] += contribution;
                    if l != k {
                        gram[(l, k)] += contribution;
                    }
                }
            }
            if eps[idx].event {
                events += 1;
                for k in 0..width {
                    moment[k] += row[k];
                    for l in k..width {
                        let contribution = row[k] * row[l];
                        event_gram[(k, l)] += contribution;
                        if l != k {
                            event_gram[(l, k)] += contribution;
                        }
                    }
                }
            }
            j += 1;
        }
        if events > 0 {
            sums.push(EventScoreSums {
                score,
                gram: gram.clone(),
                moment,
                event_gram,
            });
        }
        i = j;
    }
    sums.reverse(); // ascending event scores

    // The first at-risk set must strictly outnumber the covariates.
    let first_at_risk = sums[0].gram[(0, 0)] as usize;
    if first_at_risk <= p {
        return Err(Error::Dimensionality(format!(
            "additive fit needs more at-risk episodes than covariates at the first \
             event score: {first_at_risk} at risk for {p} covariates"
        )));
    }

    let names: Vec<String> = std::iter::once(INTERCEPT.to_string())
        .chain(episodes.covariate_names().iter().cloned())
        .collect();
    let mut curves: Vec<Vec<AalenPoint>> = vec![Vec::new(); width];
    let mut cumulative = DVector::<f64>::zeros(width);
    let mut variance = DVector::<f64>::zeros(width);
    let mut last_estimable_score = f64::NAN;

    for (k, sums_k) in sums.iter().enumerate() {
        let svd = sums_k.gram.clone().svd(true, true);
        let max_sv = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        let min_sv = svd
            .singular_values
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min_sv < SINGULARITY_RTOL * max_sv {
            if k == 0 {
                return Err(Error::Estimability(format!(
                    "at-risk design is rank deficient at the first event score {}",
                    sums_k.score
                )));
            }
            break;
        }
        let inverse = svd
            .pseudo_inverse(0.0)
            .map_err(|msg| Error::Numeric(msg.to_string()))?;
        let increment = &inverse * &sums_k.moment;
        let increment_var = &inverse * &sums_k.event_gram * &inverse;
        cumulative += &increment;
        for q in 0..width {
            variance[q] += increment_var[(q, q)];
            curves[q].push(AalenPoint {
                score: sums_k.score,
                cumulative: cumulative[q],
                variance: variance[q],
            });
        }
        last_estimable_score = sums_k.score;
    }

    Ok(AalenFit {
        covariate_names: names,
        curves,
        last_estimable_score,
    })
}

/// One plotted point of a cumulative coefficient curve with its pointwise
/// 95% band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandPoint {
    pub score: f64,
    pub cumulative: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Cumulative coefficient curve for one covariate with pointwise
/// `cumulative +- 1.96 sqrt(variance)` bands.
pub fn coefficient_curve(fit: &AalenFit, covariate: &str) -> Result<Vec<BandPoint>> {
    Ok(fit
        .curve(covariate)?
        .iter()
        .map(|p| {
            let half_width = 1.96 * p.variance.sqrt();
            BandPoint {
                score: p.score,
                cumulative: p.cumulative,
                lower: p.cumulative - half_width,
                upper: p.cumulative + half_width,
            }
        })
        .collect())
}
