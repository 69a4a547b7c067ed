//! Multiplicative hazards model over classifier score: Breslow-form
//! partial likelihood, Newton-Raphson fitting, Wald statistics, stepwise
//! covariate selection, and the baseline cumulative hazard.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::dataset::{EpisodeSet, RecordSet};
use crate::error::{Error, Result};
use crate::estimators::{fmt_float, normal_sf};

/// Coefficients beyond this magnitude are treated as a monotone/divergent
/// likelihood rather than a usable estimate.
const BETA_BOUND: f64 = 20.0;
/// Gradient sup-norm below which a stalled iteration counts as flat
/// (returned unconverged) instead of divergent (an error).
const GRADIENT_TOL: f64 = 1e-3;
const MAX_HALVINGS: usize = 10;
/// Relative singular-value cutoff for declaring the information matrix
/// rank deficient.
const SINGULARITY_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy)]
pub struct CoxOptions {
    /// Convergence threshold on the absolute change in log likelihood.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CoxOptions {
    fn default() -> Self {
        CoxOptions {
            tol: 1e-9,
            max_iter: 50,
        }
    }
}

/// Fitted proportional-hazards model.
#[derive(Debug, Clone)]
pub struct CoxFit {
    pub covariate_names: Vec<String>,
    pub beta: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub se: DVector<f64>,
    pub z: DVector<f64>,
    pub p_value: DVector<f64>,
    pub hazard_ratio: DVector<f64>,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Wald summary derived from one coefficient and its standard error:
/// `(hazard_ratio, z, p)` with `p` two-sided under the standard normal.
pub fn wald_statistics(beta: f64, se: f64) -> (f64, f64, f64) {
    let z = beta / se;
    (beta.exp(), z, 2.0 * normal_sf(z.abs()))
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    covariate: &'a str,
    coeff: f64,
    exp_coeff: f64,
    se: f64,
    z: f64,
    p: f64,
}

#[derive(Serialize)]
struct SummaryDocument<'a> {
    covariates: Vec<SummaryRow<'a>>,
    log_likelihood: f64,
    iterations: usize,
    converged: bool,
}

impl CoxFit {
    fn summary_rows(&self) -> Vec<SummaryRow<'_>> {
        (0..self.beta.len())
            .map(|k| SummaryRow {
                covariate: &self.covariate_names[k],
                coeff: self.beta[k],
                exp_coeff: self.hazard_ratio[k],
                se: self.se[k],
                z: self.z[k],
                p: self.p_value[k],
            })
            .collect()
    }

    /// JSON summary with one row per covariate
    /// (`covariate, coeff, exp_coeff, se, z, p`).
    pub fn write_json<W: Write>(&self, writer: W) -> Result<()> {
        let document = SummaryDocument {
            covariates: self.summary_rows(),
            log_likelihood: self.log_likelihood,
            iterations: self.iterations,
            converged: self.converged,
        };
        serde_json::to_writer_pretty(writer, &document)?;
        Ok(())
    }

    /// Tab-separated summary table with the same columns as the JSON form.
    pub fn write_table<W: Write>(&self, mut writer: W) -> Result<()> {
        writeln!(writer, "covariate\tcoeff\texp_coeff\tse\tz\tp")?;
        for row in self.summary_rows() {
            let p = if row.p < 1e-4 {
                format!("{:.3e}", row.p)
            } else {
                format!("{:.6}", row.p)
            };
            writeln!(
                writer,
                "{}\t{:.6}\t{:.6}\t{:.6}\t{:.4}\t{}",
                row.covariate, row.coeff, row.exp_coeff, row.se, row.z, p
            )?;
        }
        Ok(())
    }
}

fn linear_predictor(beta: &DVector<f64>, covariates: &[f64]) -> f64 {
    beta
        .iter()
        .zip(covariates)
        .map(|(b, z)| b * z)
        .sum()
}

/// Breslow-form partial log likelihood with its analytic gradient and
/// Hessian:
///
/// value = sum_events eta_i - sum_k d_k * log( sum_{j in R_k} exp(eta_j) )
///
/// Risk-set sums are accumulated over scores in descending order and every
/// exponential is centered on the running risk-set maximum, so large linear
/// predictors cannot overflow.
pub fn partial_loglik(
    episodes: &EpisodeSet,
    beta: &DVector<f64>,
) -> Result<(f64, DVector<f64>, DMatrix<f64>)> {
    let p = episodes.covariate_names().len();
    if beta.len() != p {
        return Err(Error::Validation(format!(
            "beta has length {}, expected {}",
            beta.len(),
            p
        )));
    }
    if episodes.n_events() == 0 {
        return Err(Error::NoEvents);
    }

    let eps = episodes.episodes();
    let n = eps.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eps[b].score.total_cmp(&eps[a].score));
    let eta: Vec<f64> = eps
        .iter()
        .map(|e| linear_predictor(beta, &e.covariates))
        .collect();

    let mut value = 0.0;
    let mut gradient = DVector::zeros(p);
    let mut hessian = DMatrix::zeros(p, p);

    // Running risk-set sums of exp(eta - max), z*exp, z z^T*exp.
    let mut s0 = 0.0;
    let mut s1 = DVector::zeros(p);
    let mut s2 = DMatrix::zeros(p, p);
    let mut max_eta = f64::NEG_INFINITY;

    let mut i = 0;
    while i < n {
        let score = eps[order[i]].score;
        let mut j = i;
        while j < n && eps[order[j]].score == score {
            let idx = order[j];
            let e = eta[idx];
            if e > max_eta {
                if s0 > 0.0 {
                    let rescale = (max_eta - e).exp();
                    s0 *= rescale;
                    s1 *= rescale;
                    s2 *= rescale;
                }
                max_eta = e;
            }
            let w = (e - max_eta).exp();
            let z = &eps[idx].covariates;
            s0 += w;
            for k in 0..p {
                s1[k] += w * z[k];
                for l in k..p {
                    let contribution = w * z[k] * z[l];
                    s2[(k, l)] += contribution;
                    if l != k {
                        s2[(l, k)] += contribution;
                    }
                }
            }
            j += 1;
        }

        let mut events = 0usize;
        for &idx in &order[i..j] {
            if eps[idx].event {
                events += 1;
                value += eta[idx];
                for k in 0..p {
                    gradient[k] += eps[idx].covariates[k];
                }
            }
        }
        if events > 0 {
            let d = events as f64;
            value -= d * (max_eta + s0.ln());
            for k in 0..p {
                let mu_k = s1[k] / s0;
                gradient[k] -= d * mu_k;
                for l in k..p {
                    let mu_l = s1[l] / s0;
                    let curvature = d * (s2[(k, l)] / s0 - mu_k * mu_l);
                    hessian[(k, l)] -= curvature;
                    if l != k {
                        hessian[(l, k)] -= curvature;
                    }
                }
            }
        }
        i = j;
    }

    if !value.is_finite()
        || gradient.iter().any(|g: &f64| !g.is_finite())
        || hessian.iter().any(|h: &f64| !h.is_finite())
    {
        return Err(Error::Numeric(
            "partial likelihood evaluation produced a non-finite result".into(),
        ));
    }
    Ok((value, gradient, hessian))
}

/// Names the covariates spanning the (near) null space of the information
/// matrix.
fn rank_deficient_covariates(information: &DMatrix<f64>, names: &[String]) -> Vec<String> {
    let svd = information.clone().svd(true, true);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let mut offenders = Vec::new();
    if let Some(v_t) = &svd.v_t {
        for (row, &sv) in svd.singular_values.iter().enumerate() {
            if sv <= SINGULARITY_RTOL * max_sv.max(1.0) {
                let null_vector = v_t.row(row);
                let mut worst = 0usize;
                for k in 0..null_vector.len() {
                    if null_vector[k].abs() > null_vector[worst].abs() {
                        worst = k;
                    }
                }
                if !offenders.contains(&names[worst]) {
                    offenders.push(names[worst].clone());
                }
            }
        }
    }
    if offenders.is_empty() {
        offenders = names.to_vec();
    }
    offenders
}

/// Maximizes the Breslow partial likelihood by Newton-Raphson with step
/// halving, starting from beta = 0.
///
/// Requires at least as many responder events as covariates. A coefficient
/// escaping past +-20, or a stall with a non-vanishing gradient, is
/// reported as nonconvergence; a singular information matrix is reported
/// as collinearity, naming the offending covariates.
pub fn cox_fit(episodes: &EpisodeSet, options: &CoxOptions) -> Result<CoxFit> {
    let p = episodes.covariate_names().len();
    let n_events = episodes.n_events();
    if n_events == 0 {
        return Err(Error::NoEvents);
    }
    if n_events < p {
        return Err(Error::Dimensionality(format!(
            "{p} covariates require at least {p} responder events, found {n_events}"
        )));
    }

    let mut beta = DVector::zeros(p);
    let (mut value, mut gradient, mut hessian) = partial_loglik(episodes, &beta)?;
    let mut converged = p == 0;
    let mut iterations = 0;

    while !converged && iterations < options.max_iter {
        iterations += 1;
        let information = -&hessian;
        let chol = nalgebra::linalg::Cholesky::new(information.clone()).ok_or_else(|| {
            Error::Collinearity(rank_deficient_covariates(
                &information,
                episodes.covariate_names(),
            ))
        })?;
        let direction = chol.solve(&gradient);

        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let candidate = &beta + &direction * step;
            match partial_loglik(episodes, &candidate) {
                Ok((v, g, h)) if v >= value => {
                    let improvement = v - value;
                    beta = candidate;
                    value = v;
                    gradient = g;
                    hessian = h;
                    accepted = true;
                    if beta.amax() > BETA_BOUND {
                        return Err(Error::NonConvergence(format!(
                            "coefficient magnitude exceeded {BETA_BOUND}; the partial \
                             likelihood is monotone or divergent"
                        )));
                    }
                    if improvement < options.tol {
                        converged = true;
                    }
                    break;
                }
                _ => step *= 0.5,
            }
        }
        if !accepted {
            if gradient.amax() <= GRADIENT_TOL {
                converged = true;
            } else {
                return Err(Error::NonConvergence(
                    "no ascent step found with a non-vanishing gradient".into(),
                ));
            }
        }
    }

    if !converged && gradient.amax() > GRADIENT_TOL {
        return Err(Error::NonConvergence(format!(
            "gradient sup-norm {:.3e} after {} iterations",
            gradient.amax(),
            iterations
        )));
    }

    // The improvement-based stop can trigger a step before the score
    // equation is solved to machine precision; one guarded full Newton
    // polish keeps the returned point invariant under episode replication
    // and covariate rescaling.
    if converged && p > 0 {
        if let Some(chol) = nalgebra::linalg::Cholesky::new(-&hessian) {
            let candidate = &beta + chol.solve(&gradient);
            if candidate.amax() <= BETA_BOUND {
                if let Ok((v, g, h)) = partial_loglik(episodes, &candidate) {
                    if g.amax() < gradient.amax() {
                        beta = candidate;
                        value = v;
                        hessian = h;
                    }
                }
            }
        }
    }

    let covariance = if p == 0 {
        DMatrix::zeros(0, 0)
    } else {
        let information = -&hessian;
        nalgebra::linalg::Cholesky::new(information.clone())
            .ok_or_else(|| {
                Error::Collinearity(rank_deficient_covariates(
                    &information,
                    episodes.covariate_names(),
                ))
            })?
            .inverse()
    };

    let se = DVector::from_fn(p, |k, _| covariance[(k, k)].sqrt());
    let mut z = DVector::zeros(p);
    let mut p_value = DVector::zeros(p);
    let mut hazard_ratio = DVector::zeros(p);
    for k in 0..p {
        let (hr, zk, pk) = wald_statistics(beta[k], se[k]);
        hazard_ratio[k] = hr;
        z[k] = zk;
        p_value[k] = pk;
    }

    Ok(CoxFit {
        covariate_names: episodes.covariate_names().to_vec(),
        beta,
        covariance,
        se,
        z,
        p_value,
        hazard_ratio,
        log_likelihood: value,
        iterations,
        converged,
    })
}

/// Score-independent hazard ratio between two covariate profiles:
/// exp(beta . (z_a - z_b)).
pub fn hazard_ratio(fit: &CoxFit, z_a: &[f64], z_b: &[f64]) -> Result<f64> {
    if z_a.len() != fit.beta.len() || z_b.len() != fit.beta.len() {
        return Err(Error::Validation(format!(
            "covariate profiles must have length {}",
            fit.beta.len()
        )));
    }
    let exponent: f64 = fit
        .beta
        .iter()
        .zip(z_a.iter().zip(z_b))
        .map(|(b, (a, c))| b * (a - c))
        .sum();
    Ok(exponent.exp())
}

/// Why a covariate was removed by [`collinearity_filter`].
#[derive(Debug, Clone, PartialEq)]
pub enum DropReason {
    ZeroVariance,
    Correlated { with: String, r: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DroppedCovariate {
    pub name: String,
    pub reason: DropReason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollinearityReport {
    pub kept: Vec<String>,
    pub dropped: Vec<DroppedCovariate>,
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (x, y) in a.iter().zip(b) {
        let da = x - mean_a;
        let db = y - mean_b;
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    (cov / (var_a * var_b).sqrt()).clamp(-1.0, 1.0)
}

/// Greedy scan in covariate order: a covariate is dropped when its absolute
/// Pearson correlation with an already-kept covariate exceeds `threshold`;
/// zero-variance covariates are always dropped.
pub fn collinearity_filter(records: &RecordSet, threshold: f64) -> Result<CollinearityReport> {
    if !(0.0 < threshold && threshold <= 1.0) {
        return Err(Error::Validation(format!(
            "collinearity threshold {threshold} must be in (0, 1]"
        )));
    }
    if records.len() < 2 {
        return Err(Error::Validation(
            "collinearity filtering needs at least 2 records".into(),
        ));
    }

    let names = records.covariate_names();
    let columns: Vec<Vec<f64>> = names
        .iter()
        .map(|n| records.covariate_column(n))
        .collect::<Result<_>>()?;

    let mut kept: Vec<usize> = Vec::new();
    let mut dropped: Vec<DroppedCovariate> = Vec::new();
    'candidates: for q in 0..names.len() {
        let column = &columns[q];
        let lo = column.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = column.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if lo == hi {
            dropped.push(DroppedCovariate {
                name: names[q].clone(),
                reason: DropReason::ZeroVariance,
            });
            continue;
        }
        for &k in &kept {
            let r = pearson(column, &columns[k]);
            if r.abs() > threshold {
                dropped.push(DroppedCovariate {
                    name: names[q].clone(),
                    reason: DropReason::Correlated {
                        with: names[k].clone(),
                        r,
                    },
                });
                continue 'candidates;
            }
        }
        kept.push(q);
    }

    Ok(CollinearityReport {
        kept: kept.into_iter().map(|q| names[q].clone()).collect(),
        dropped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepAction {
    Added,
    Removed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepEvent {
    pub action: StepAction,
    pub covariate: String,
    pub p_value: f64,
}

#[derive(Debug)]
pub struct StepwiseOutcome {
    pub fit: CoxFit,
    pub trace: Vec<StepEvent>,
    /// Candidates whose trial fit failed, with the failure message; they are
    /// skipped rather than aborting the selection.
    pub skipped: Vec<(String, String)>,
}

/// Alternating forward/backward Wald selection: the forward pass adds the
/// candidate with the smallest p-value when it is below `alpha_in`, the
/// backward pass removes the included covariate with the largest p-value
/// when it is above `alpha_out`, until a fixed point. Zero surviving
/// candidates yield an intercept-only (empty) fit, not an error.
pub fn stepwise_select(
    episodes: &EpisodeSet,
    alpha_in: f64,
    alpha_out: f64,
) -> Result<StepwiseOutcome> {
    let candidates = episodes.covariate_names().to_vec();
    if candidates.is_empty() {
        return Err(Error::Validation(
            "stepwise selection needs at least one candidate covariate".into(),
        ));
    }
    for (alpha, what) in [(alpha_in, "alpha_in"), (alpha_out, "alpha_out")] {
        if !(0.0 < alpha && alpha <= 1.0) {
            return Err(Error::Validation(format!(
                "{what} = {alpha} must be in (0, 1]"
            )));
        }
    }

    let options = CoxOptions::default();
    let mut included: Vec<String> = Vec::new();
    let mut trace: Vec<StepEvent> = Vec::new();
    let mut skipped: Vec<(String, String)> = Vec::new();

    let max_passes = 2 * candidates.len() + 4;
    for _ in 0..max_passes {
        let mut changed = false;

        // Forward pass: try each remaining candidate appended to the model.
        let mut best: Option<(String, f64)> = None;
        for candidate in candidates.iter().filter(|c| !included.contains(c)) {
            let mut model = included.clone();
            model.push(candidate.clone());
            match cox_fit(&episodes.select_covariates(&model)?, &options) {
                Ok(fit) => {
                    let p = fit.p_value[model.len() - 1];
                    if best.as_ref().is_none_or(|(_, bp)| p < *bp) {
                        best = Some((candidate.clone(), p));
                    }
                }
                Err(err) => {
                    log::warn!("stepwise: skipping candidate `{candidate}`: {err}");
                    skipped.push((candidate.clone(), err.to_string()));
                }
            }
        }
        if let Some((name, p)) = best {
            if p < alpha_in {
                included.push(name.clone());
                trace.push(StepEvent {
                    action: StepAction::Added,
                    covariate: name,
                    p_value: p,
                });
                changed = true;
            }
        }

        // Backward pass: drop the worst included covariate if insignificant.
        if !included.is_empty() {
            let fit = cox_fit(&episodes.select_covariates(&included)?, &options)?;
            let mut worst = 0usize;
            for k in 1..included.len() {
                if fit.p_value[k] > fit.p_value[worst] {
                    worst = k;
                }
            }
            if fit.p_value[worst] > alpha_out {
                let name = included.remove(worst);
                trace.push(StepEvent {
                    action: StepAction::Removed,
                    covariate: name.clone(),
                    p_value: fit.p_value[worst],
                });
                changed = true;
            }
        }

        if !changed {
            break;
        }
    }

    let fit = cox_fit(&episodes.select_covariates(&included)?, &options)?;
    Ok(StepwiseOutcome {
        fit,
        trace,
        skipped,
    })
}

/// One step of the Breslow baseline cumulative hazard.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselinePoint {
    pub score: f64,
    pub increment: f64,
    pub cumulative: f64,
}

/// Baseline cumulative hazard A0(s) under the fitted coefficients: the
/// hazard of a profile with every covariate equal to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineHazard {
    points: Vec<BaselinePoint>,
}

impl BaselineHazard {
    pub fn points(&self) -> &[BaselinePoint] {
        &self.points
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["score", "increment", "cumulative"])?;
        for p in &self.points {
            out.write_record([
                fmt_float(p.score),
                fmt_float(p.increment),
                fmt_float(p.cumulative),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Breslow estimator dA0(s_k) = d_k / sum_{j in R_k} exp(eta_j), cumulated
/// over event scores. With beta = 0 this reduces to the Nelson-Aalen curve.
pub fn baseline_hazard(fit: &CoxFit, episodes: &EpisodeSet) -> Result<BaselineHazard> {
    if fit.covariate_names != episodes.covariate_names() {
        return Err(Error::Validation(
            "fit and episode covariates do not match".into(),
        ));
    }
    if !fit.converged {
        return Err(Error::Validation(
            "baseline hazard requires a converged fit".into(),
        ));
    }
    if episodes.n_events() == 0 {
        return Err(Error::NoEvents);
    }

    let eps = episodes.episodes();
    let n = eps.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eps[b].score.total_cmp(&eps[a].score));
    let eta: Vec<f64> = eps
        .iter()
        .map(|e| linear_predictor(&fit.beta, &e.covariates))
        .collect();
    let max_eta = eta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    // Walk scores descending, accumulating the centered risk-set sum, and
    // record one increment per distinct event score.
    let mut denominator = 0.0;
    let mut descending: Vec<BaselinePoint> = Vec::new();
    let mut i = 0;
    while i < n {
        let score = eps[order[i]].score;
        let mut j = i;
        let mut events = 0usize;
        while j < n && eps[order[j]].score == score {
            denominator += (eta[order[j]] - max_eta).exp();
            if eps[order[j]].event {
                events += 1;
            }
            j += 1;
        }
        if events > 0 {
            let increment = events as f64 / (denominator * max_eta.exp());
            descending.push(BaselinePoint {
                score,
                increment,
                cumulative: 0.0,
            });
        }
        i = j;
    }

    descending.reverse();
    let mut cumulative = 0.0;
    for point in &mut descending {
        cumulative += point.increment;
        point.cumulative = cumulative;
    }
    Ok(BaselineHazard { points: descending })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{risk_table, Episode, EpisodeSet};
    use crate::estimators::nelson_aalen;

    fn ep(score: f64, event: bool, covariates: Vec<f64>) -> Episode {
        Episode {
            score,
            event,
            covariates,
        }
    }

    /// Three all-event episodes with a single binary covariate; the
    /// stationary point of the partial likelihood is -ln(2)/2.
    fn closed_form_episodes() -> EpisodeSet {
        EpisodeSet::new(
            vec!["z".into()],
            vec![
                ep(0.3, true, vec![1.0]),
                ep(0.5, true, vec![0.0]),
                ep(0.9, true, vec![1.0]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn loglik_at_zero_matches_hand_value() {
        let episodes = closed_form_episodes();
        let (value, gradient, _) =
            partial_loglik(&episodes, &DVector::zeros(1)).unwrap();
        let want = (1.0f64 / 3.0).ln() + (1.0f64 / 2.0).ln();
        assert!((value - want).abs() <= 1e-12);
        assert!((gradient[0] - (1.0 / 3.0 - 1.0 / 2.0)).abs() <= 1e-12);
    }

    #[test]
    fn loglik_survives_large_linear_predictors() {
        // eta around 600 would overflow a naive exp; the risk-set-max
        // centering keeps every intermediate finite.
        let episodes = EpisodeSet::new(
            vec!["z".into()],
            vec![
                ep(0.1, true, vec![40.0]),
                ep(0.4, false, vec![38.0]),
                ep(0.7, true, vec![0.0]),
                ep(0.9, true, vec![41.0]),
            ],
        )
        .unwrap();
        let beta = DVector::from_vec(vec![15.0]);
        let (value, gradient, hessian) = partial_loglik(&episodes, &beta).unwrap();
        assert!(value.is_finite());
        assert!(gradient[0].is_finite());
        assert!(hessian[(0, 0)].is_finite());
    }

    #[test]
    fn loglik_with_zero_covariates_counts_risk_sets() {
        let episodes = EpisodeSet::new(
            vec![],
            vec![
                ep(0.1, true, vec![]),
                ep(0.2, false, vec![]),
                ep(0.4, true, vec![]),
                ep(0.7, true, vec![]),
                ep(0.9, false, vec![]),
            ],
        )
        .unwrap();
        let (value, _, _) = partial_loglik(&episodes, &DVector::zeros(0)).unwrap();
        let want = -(5.0f64.ln() + 3.0f64.ln() + 2.0f64.ln());
        assert!((value - want).abs() <= 1e-12);

        // Same value with a covariate column that is identically zero.
        let zeroed = EpisodeSet::new(
            vec!["z".into()],
            episodes
                .episodes()
                .iter()
                .map(|e| ep(e.score, e.event, vec![0.0]))
                .collect(),
        )
        .unwrap();
        let (value, gradient, _) = partial_loglik(&zeroed, &DVector::zeros(1)).unwrap();
        assert!((value - want).abs() <= 1e-12);
        assert_eq!(gradient[0], 0.0);
    }

    #[test]
    fn cox_fit_recovers_closed_form_coefficient() {
        let fit = cox_fit(&closed_form_episodes(), &CoxOptions::default()).unwrap();
        let want = -(2.0f64.ln()) / 2.0;
        assert!((fit.beta[0] - want).abs() <= 1e-8);
        assert!(fit.converged);
        // Field relations hold.
        assert!((fit.hazard_ratio[0] - fit.beta[0].exp()).abs() <= 1e-12);
        assert!((fit.z[0] - fit.beta[0] / fit.se[0]).abs() <= 1e-12);
        assert!((fit.se[0] - fit.covariance[(0, 0)].sqrt()).abs() <= 1e-12);
        assert!((fit.p_value[0] - 2.0 * normal_sf(fit.z[0].abs())).abs() <= 1e-12);
    }

    #[test]
    fn wald_statistics_match_published_magnitudes() {
        let (hr, z, p) = wald_statistics(0.4998, 0.1634);
        assert!((hr - 1.6484).abs() <= 5e-5);
        assert!((z - 3.059).abs() <= 5e-4);
        assert!((p - 0.00222).abs() <= 5e-5);
    }

    #[test]
    fn constant_covariate_is_a_collinearity_error() {
        let episodes = EpisodeSet::new(
            vec!["c".into()],
            vec![
                ep(0.1, true, vec![2.0]),
                ep(0.4, true, vec![2.0]),
                ep(0.9, true, vec![2.0]),
            ],
        )
        .unwrap();
        match cox_fit(&episodes, &CoxOptions::default()) {
            Err(Error::Collinearity(names)) => assert_eq!(names, vec!["c".to_string()]),
            other => panic!("expected collinearity error, got {other:?}"),
        }
    }

    #[test]
    fn monotone_likelihood_is_nonconvergence() {
        // The only Z=1 episode has the earliest event, so the score equation
        // has no finite root.
        let episodes = EpisodeSet::new(
            vec!["z".into()],
            vec![
                ep(0.1, true, vec![1.0]),
                ep(0.5, true, vec![0.0]),
                ep(0.9, true, vec![0.0]),
            ],
        )
        .unwrap();
        assert!(matches!(
            cox_fit(&episodes, &CoxOptions::default()),
            Err(Error::NonConvergence(_))
        ));
    }

    #[test]
    fn more_covariates_than_events_is_rejected() {
        let episodes = EpisodeSet::new(
            vec!["a".into(), "b".into()],
            vec![
                ep(0.1, true, vec![1.0, 0.0]),
                ep(0.5, false, vec![0.0, 1.0]),
                ep(0.9, false, vec![1.0, 1.0]),
            ],
        )
        .unwrap();
        assert!(matches!(
            cox_fit(&episodes, &CoxOptions::default()),
            Err(Error::Dimensionality(_))
        ));
    }

    #[test]
    fn hazard_ratio_between_profiles() {
        let fit = cox_fit(&closed_form_episodes(), &CoxOptions::default()).unwrap();
        assert_eq!(hazard_ratio(&fit, &[1.0], &[1.0]).unwrap(), 1.0);
        let want = fit.beta[0].exp();
        assert!((hazard_ratio(&fit, &[1.0], &[0.0]).unwrap() - want).abs() <= 1e-12);
        assert!(hazard_ratio(&fit, &[1.0, 2.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn published_hazard_ratios_follow_from_coefficients() {
        let mut fit = cox_fit(&closed_form_episodes(), &CoxOptions::default()).unwrap();
        fit.beta[0] = 0.4998;
        assert!((hazard_ratio(&fit, &[1.0], &[0.0]).unwrap() - 1.6484).abs() <= 5e-5);
        fit.beta[0] = 1.3477;
        assert!((hazard_ratio(&fit, &[1.0], &[0.0]).unwrap() - 3.8486).abs() <= 5e-5);
    }

    #[test]
    fn collinearity_filter_drops_duplicates_and_constants() {
        let text = "id,score,label,terminal,x1,x2,x3,c\n\
                    a,0.1,responder,1,1.0,1.0,0.3,7.0\n\
                    b,0.2,unlabeled,0,2.0,2.0,0.1,7.0\n\
                    c,0.3,unlabeled,0,3.0,3.0,0.9,7.0\n";
        let records =
            crate::dataset::load_records(text.as_bytes(), &crate::dataset::Schema::default())
                .unwrap();
        let report = collinearity_filter(&records, 0.95).unwrap();
        assert_eq!(report.kept, vec!["x1".to_string(), "x3".to_string()]);
        assert_eq!(report.dropped.len(), 2);
        match &report.dropped[0].reason {
            DropReason::Correlated { with, r } => {
                assert_eq!(with, "x1");
                assert!((r - 1.0).abs() <= 1e-12);
            }
            other => panic!("expected correlation drop, got {other:?}"),
        }
        assert_eq!(report.dropped[1].reason, DropReason::ZeroVariance);
    }

    #[test]
    fn collinearity_filter_keeps_independent_columns() {
        let config = crate::synthgen::SynthConfig {
            n: 200,
            true_beta: vec![0.0, 0.0, 0.0],
            baseline_rate: 1.0,
            censor_fraction: 0.0,
            covariates: vec![
                crate::synthgen::CovariateSpec::Uniform {
                    low: 0.0,
                    high: 1.0,
                },
                crate::synthgen::CovariateSpec::Uniform {
                    low: -1.0,
                    high: 1.0,
                },
                crate::synthgen::CovariateSpec::Bernoulli { p: 0.5 },
            ],
            seed: 11,
        };
        let records = crate::synthgen::generate(&config).unwrap();
        // Independent draws: verify every pairwise correlation is small
        // before asserting the filter keeps everything.
        let columns: Vec<Vec<f64>> = records
            .covariate_names()
            .iter()
            .map(|n| records.covariate_column(n).unwrap())
            .collect();
        for i in 0..columns.len() {
            for j in (i + 1)..columns.len() {
                assert!(pearson(&columns[i], &columns[j]).abs() < 0.95);
            }
        }
        let report = collinearity_filter(&records, 0.95).unwrap();
        assert_eq!(report.kept.len(), 3);
        assert!(report.dropped.is_empty());
    }

    #[test]
    fn stepwise_with_disabled_thresholds_keeps_all() {
        // Two informative covariates; alpha 1.0/1.0 admits everything.
        let episodes = EpisodeSet::new(
            vec!["a".into(), "b".into()],
            vec![
                ep(0.1, true, vec![1.0, 0.2]),
                ep(0.2, true, vec![0.0, 0.9]),
                ep(0.4, true, vec![1.0, 0.4]),
                ep(0.5, false, vec![0.0, 0.8]),
                ep(0.7, true, vec![0.0, 0.1]),
                ep(0.9, true, vec![1.0, 0.6]),
            ],
        )
        .unwrap();
        let outcome = stepwise_select(&episodes, 1.0, 1.0).unwrap();
        assert_eq!(outcome.fit.beta.len(), 2);
        assert!(outcome
            .trace
            .iter()
            .all(|e| e.action == StepAction::Added));
    }

    #[test]
    fn stepwise_with_nothing_significant_returns_empty_fit() {
        let episodes = EpisodeSet::new(
            vec!["noise".into()],
            vec![
                ep(0.1, true, vec![0.3]),
                ep(0.2, true, vec![0.4]),
                ep(0.4, true, vec![0.3]),
                ep(0.9, true, vec![0.4]),
            ],
        )
        .unwrap();
        let outcome = stepwise_select(&episodes, 1e-9, 1e-8).unwrap();
        assert_eq!(outcome.fit.beta.len(), 0);
        assert!(outcome.trace.is_empty());
    }

    #[test]
    fn baseline_hazard_at_zero_beta_equals_nelson_aalen() {
        let episodes = EpisodeSet::new(
            vec![],
            vec![
                ep(0.1, true, vec![]),
                ep(0.2, false, vec![]),
                ep(0.4, true, vec![]),
                ep(0.7, true, vec![]),
                ep(0.9, false, vec![]),
            ],
        )
        .unwrap();
        let fit = cox_fit(&episodes, &CoxOptions::default()).unwrap();
        let baseline = baseline_hazard(&fit, &episodes).unwrap();
        let na = nelson_aalen(&risk_table(&episodes).unwrap());
        assert_eq!(baseline.points().len(), na.points().len());
        for (b, h) in baseline.points().iter().zip(na.points()) {
            assert_eq!(b.score, h.score);
            assert_eq!(b.cumulative, h.estimate);
        }
    }

    #[test]
    fn baseline_hazard_first_increment_matches_closed_form() {
        let episodes = closed_form_episodes();
        let fit = cox_fit(&episodes, &CoxOptions::default()).unwrap();
        let baseline = baseline_hazard(&fit, &episodes).unwrap();
        // dA0(0.3) = 1/(2 e^beta + 1) with e^beta = 1/sqrt(2).
        let want = 1.0 / (2.0 / 2.0f64.sqrt() + 1.0);
        assert!((baseline.points()[0].increment - want).abs() <= 1e-6);
        assert!((baseline.points()[0].increment - 0.414214).abs() <= 1e-6);
    }

    #[test]
    fn baseline_hazard_is_invariant_to_covariate_scaling() {
        let episodes = EpisodeSet::new(
            vec!["z".into()],
            vec![
                ep(0.1, true, vec![1.0]),
                ep(0.3, false, vec![0.0]),
                ep(0.5, true, vec![0.0]),
                ep(0.7, true, vec![1.0]),
                ep(0.9, false, vec![1.0]),
            ],
        )
        .unwrap();
        let scaled = EpisodeSet::new(
            vec!["z".into()],
            episodes
                .episodes()
                .iter()
                .map(|e| ep(e.score, e.event, vec![e.covariates[0] * 4.0]))
                .collect(),
        )
        .unwrap();
        let fit = cox_fit(&episodes, &CoxOptions::default()).unwrap();
        let fit_scaled = cox_fit(&scaled, &CoxOptions::default()).unwrap();
        assert!((fit_scaled.beta[0] - fit.beta[0] / 4.0).abs() <= 1e-8);
        let b1 = baseline_hazard(&fit, &episodes).unwrap();
        let b2 = baseline_hazard(&fit_scaled, &scaled).unwrap();
        for (p1, p2) in b1.points().iter().zip(b2.points()) {
            assert!((p1.cumulative - p2.cumulative).abs() <= 1e-9);
        }
    }
}
