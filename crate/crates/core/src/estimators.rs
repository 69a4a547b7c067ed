//! Nonparametric estimation of the inclusion curve (survival over score)
//! and the cumulative hazard, with pointwise variances and confidence
//! bounds.

use std::io::Write;

use statrs::distribution::{ContinuousCDF, Normal};

use crate::dataset::RiskTable;
use crate::error::{Error, Result};

/// Variance estimator for the product-limit curve.
///
/// `Greenwood` is the default: I^2 * sum d/(Y(Y-d)). `Tau` is the plain
/// large-sample form I^2 * sum 1/Y^2 used when building the confidence
/// interval from the martingale limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarianceMode {
    Greenwood,
    Tau,
}

impl VarianceMode {
    pub fn parse(text: &str) -> Option<VarianceMode> {
        match text {
            "greenwood" => Some(VarianceMode::Greenwood),
            "tau" => Some(VarianceMode::Tau),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            VarianceMode::Greenwood => "greenwood",
            VarianceMode::Tau => "tau",
        }
    }
}

/// One step of the inclusion curve. `variance` (and with it the interval
/// bounds) is `None` from the first at-risk-exhausting event onward, where
/// Greenwood's sum divides by zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub score: f64,
    pub estimate: f64,
    pub variance: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
}

/// Product-limit estimate of the inclusion function I(s) = P(S > s) for
/// responders, as a right-continuous step function over score.
#[derive(Debug, Clone, PartialEq)]
pub struct InclusionCurve {
    points: Vec<CurvePoint>,
    domain: (f64, f64),
    confidence_level: f64,
}

impl InclusionCurve {
    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }

    /// Observed score range; the estimator is undefined outside it.
    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn confidence_level(&self) -> f64 {
        self.confidence_level
    }

    /// Step-function evaluation. `None` outside the observed score range;
    /// exactly 1 left of the first event score.
    pub fn eval(&self, s: f64) -> Option<f64> {
        if s < self.domain.0 || s > self.domain.1 {
            return None;
        }
        let mut value = 1.0;
        for point in &self.points {
            if point.score <= s {
                value = point.estimate;
            } else {
                break;
            }
        }
        Some(value)
    }

    /// CSV serialization: `score,estimate,variance,ci_low,ci_high` with
    /// empty cells where the variance is undefined.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["score", "estimate", "variance", "ci_low", "ci_high"])?;
        for p in &self.points {
            out.write_record([
                fmt_float(p.score),
                fmt_float(p.estimate),
                p.variance.map(fmt_float).unwrap_or_default(),
                p.ci_low.map(fmt_float).unwrap_or_default(),
                p.ci_high.map(fmt_float).unwrap_or_default(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// One step of the cumulative hazard curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HazardPoint {
    pub score: f64,
    pub estimate: f64,
    pub variance: f64,
}

/// Nelson-Aalen estimate of the cumulative hazard A(s), a non-decreasing
/// step function that is 0 left of the first event score.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeHazardCurve {
    points: Vec<HazardPoint>,
    domain: (f64, f64),
}

impl CumulativeHazardCurve {
    pub fn points(&self) -> &[HazardPoint] {
        &self.points
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn eval(&self, s: f64) -> Option<f64> {
        if s < self.domain.0 || s > self.domain.1 {
            return None;
        }
        let mut value = 0.0;
        for point in &self.points {
            if point.score <= s {
                value = point.estimate;
            } else {
                break;
            }
        }
        Some(value)
    }

    /// Per-step increments d_i/Y_i, for product-integral checks and
    /// plotting.
    pub fn increments(&self) -> Vec<(f64, f64)> {
        let mut previous = 0.0;
        self.points
            .iter()
            .map(|p| {
                let delta = p.estimate - previous;
                previous = p.estimate;
                (p.score, delta)
            })
            .collect()
    }

    /// Same column layout as the inclusion curve; interval cells are left
    /// empty (no interval is defined for this curve).
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["score", "estimate", "variance", "ci_low", "ci_high"])?;
        for p in &self.points {
            out.write_record([
                fmt_float(p.score),
                fmt_float(p.estimate),
                fmt_float(p.variance),
                String::new(),
                String::new(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

pub(crate) fn fmt_float(v: f64) -> String {
    format!("{v}")
}

/// Standard normal quantile at probability `p`.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// Standard normal upper tail 1 - Phi(x).
pub fn normal_sf(x: f64) -> f64 {
    Normal::standard().sf(x)
}

/// Product-limit (Kaplan-Meier) estimator over the risk table:
/// I(s_k) = prod_{i<=k} (1 - d_i/Y_i), with the chosen variance estimator
/// and a plain normal interval clipped to [0, 1].
pub fn product_limit(
    table: &RiskTable,
    confidence_level: f64,
    mode: VarianceMode,
) -> Result<InclusionCurve> {
    if !(0.0 < confidence_level && confidence_level < 1.0) {
        return Err(Error::Validation(format!(
            "confidence level {confidence_level} must be in (0, 1)"
        )));
    }
    let z = normal_quantile(1.0 - (1.0 - confidence_level) / 2.0);

    let mut points = Vec::with_capacity(table.rows().len());
    let mut survival = 1.0;
    let mut greenwood_sum = 0.0;
    let mut tau_sum = 0.0;
    let mut variance_defined = true;
    for row in table.rows() {
        let events = row.events as f64;
        let at_risk = row.at_risk as f64;
        survival *= 1.0 - events / at_risk;
        tau_sum += 1.0 / (at_risk * at_risk);
        if row.at_risk == row.events {
            // Greenwood's term divides by zero; the curve continues but the
            // variance is undefined from here on.
            variance_defined = false;
        } else {
            greenwood_sum += events / (at_risk * (at_risk - events));
        }
        let variance = match mode {
            VarianceMode::Greenwood if !variance_defined => None,
            VarianceMode::Greenwood => Some(survival * survival * greenwood_sum),
            VarianceMode::Tau => Some(survival * survival * tau_sum),
        };
        let half_width = variance.map(|v| z * v.sqrt());
        points.push(CurvePoint {
            score: row.score,
            estimate: survival,
            variance,
            ci_low: half_width.map(|h| (survival - h).max(0.0)),
            ci_high: half_width.map(|h| (survival + h).min(1.0)),
        });
    }

    Ok(InclusionCurve {
        points,
        domain: table.score_range(),
        confidence_level,
    })
}

/// Nelson-Aalen estimator: A(s_k) = sum_{i<=k} d_i/Y_i with variance
/// sum_{i<=k} d_i/Y_i^2.
pub fn nelson_aalen(table: &RiskTable) -> CumulativeHazardCurve {
    let mut points = Vec::with_capacity(table.rows().len());
    let mut hazard = 0.0;
    let mut variance = 0.0;
    for row in table.rows() {
        let events = row.events as f64;
        let at_risk = row.at_risk as f64;
        hazard += events / at_risk;
        variance += events / (at_risk * at_risk);
        points.push(HazardPoint {
            score: row.score,
            estimate: hazard,
            variance,
        });
    }
    CumulativeHazardCurve {
        points,
        domain: table.score_range(),
    }
}
