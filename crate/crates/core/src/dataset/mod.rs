//! Ingestion and preparation of scored observation data.
//!
//! Raw rows come in as delimiter-separated text, are validated into a
//! [`RecordSet`], reduced to analysis-ready censored/event episodes with
//! [`build_episodes`], and finally counted into the ordered [`RiskTable`]
//! that the estimators consume.

pub mod backblaze;

use std::collections::HashMap;
use std::io::Read;

use crate::error::{Error, Result};

/// Response state of a scored observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    /// In the modeled class.
    Responder,
    /// Out of the modeled class; absorbing state, truncated from analysis.
    NonResponder,
    /// Response unknown; contributes as a censored observation.
    Unlabeled,
}

impl Label {
    pub fn parse(text: &str) -> Option<Label> {
        match text {
            "responder" => Some(Label::Responder),
            "non_responder" => Some(Label::NonResponder),
            "unlabeled" => Some(Label::Unlabeled),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Label::Responder => "responder",
            Label::NonResponder => "non_responder",
            Label::Unlabeled => "unlabeled",
        }
    }
}

/// One scored observation row.
///
/// Covariate values are positional; the owning [`RecordSet`] holds the
/// covariate names, so every record in a set shares the identical name set
/// by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredRecord {
    pub observation_id: String,
    pub score: f64,
    pub label: Label,
    pub is_terminal: bool,
    pub covariates: Vec<f64>,
}

/// Validated flat collection of scored observations.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordSet {
    covariate_names: Vec<String>,
    records: Vec<ScoredRecord>,
}

impl RecordSet {
    /// Validates scores, covariate arity, and the one-terminal-per-id rule.
    pub fn new(covariate_names: Vec<String>, records: Vec<ScoredRecord>) -> Result<RecordSet> {
        let mut terminal_seen: HashMap<&str, ()> = HashMap::new();
        for (idx, record) in records.iter().enumerate() {
            if !record.score.is_finite() {
                return Err(Error::Parse {
                    row: idx + 1,
                    message: format!(
                        "score must be finite for observation `{}`",
                        record.observation_id
                    ),
                });
            }
            if record.covariates.len() != covariate_names.len() {
                return Err(Error::Validation(format!(
                    "observation `{}` has {} covariate values, expected {}",
                    record.observation_id,
                    record.covariates.len(),
                    covariate_names.len()
                )));
            }
            for (value, name) in record.covariates.iter().zip(&covariate_names) {
                if !value.is_finite() {
                    return Err(Error::Parse {
                        row: idx + 1,
                        message: format!("covariate `{name}` must be finite"),
                    });
                }
            }
            if record.is_terminal
                && terminal_seen
                    .insert(record.observation_id.as_str(), ())
                    .is_some()
            {
                return Err(Error::Validation(format!(
                    "observation `{}` has more than one terminal row",
                    record.observation_id
                )));
            }
        }
        Ok(RecordSet {
            covariate_names,
            records,
        })
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn records(&self) -> &[ScoredRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Column values for one covariate across all records.
    pub fn covariate_column(&self, name: &str) -> Result<Vec<f64>> {
        let idx = self
            .covariate_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownCovariate(name.to_string()))?;
        Ok(self.records.iter().map(|r| r.covariates[idx]).collect())
    }
}

/// Column-mapping configuration for [`load_records`].
#[derive(Debug, Clone)]
pub struct Schema {
    pub delimiter: u8,
    pub id_column: String,
    pub score_column: String,
    pub label_column: String,
    pub terminal_column: String,
    /// Explicit covariate columns in order; `None` means every remaining
    /// column is a covariate, in header order.
    pub covariate_columns: Option<Vec<String>>,
}

impl Default for Schema {
    fn default() -> Self {
        Schema {
            delimiter: b',',
            id_column: "id".to_string(),
            score_column: "score".to_string(),
            label_column: "label".to_string(),
            terminal_column: "terminal".to_string(),
            covariate_columns: None,
        }
    }
}

/// Parses delimiter-separated text with a header row into a [`RecordSet`].
pub fn load_records<R: Read>(source: R, schema: &Schema) -> Result<RecordSet> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter)
        .has_headers(true)
        .flexible(false)
        .from_reader(source);

    let headers: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();

    let column_index = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("missing column `{name}`")))
    };

    let id_idx = column_index(&schema.id_column)?;
    let score_idx = column_index(&schema.score_column)?;
    let label_idx = column_index(&schema.label_column)?;
    let terminal_idx = column_index(&schema.terminal_column)?;

    let covariate_indices: Vec<(String, usize)> = match &schema.covariate_columns {
        Some(names) => names
            .iter()
            .map(|n| Ok((n.clone(), column_index(n)?)))
            .collect::<Result<_>>()?,
        None => {
            let reserved = [id_idx, score_idx, label_idx, terminal_idx];
            headers
                .iter()
                .enumerate()
                .filter(|(i, _)| !reserved.contains(i))
                .map(|(i, h)| (h.clone(), i))
                .collect()
        }
    };

    let covariate_names: Vec<String> =
        covariate_indices.iter().map(|(n, _)| n.clone()).collect();

    let mut records = Vec::new();
    for (row_number, row) in reader.records().enumerate() {
        let row = row?;
        let data_row = row_number + 1;

        let parse_value = |idx: usize, what: &str| -> Result<f64> {
            let raw = row.get(idx).unwrap_or("").trim();
            let value: f64 = raw.parse().map_err(|_| Error::Parse {
                row: data_row,
                message: format!("{what} `{raw}` is not numeric"),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    row: data_row,
                    message: format!("{what} `{raw}` is not finite"),
                });
            }
            Ok(value)
        };

        let score = parse_value(score_idx, "score")?;
        let label_raw = row.get(label_idx).unwrap_or("").trim();
        let label = Label::parse(label_raw).ok_or_else(|| Error::Parse {
            row: data_row,
            message: format!(
                "label `{label_raw}` must be one of responder, non_responder, unlabeled"
            ),
        })?;
        let terminal_raw = row.get(terminal_idx).unwrap_or("").trim();
        let is_terminal = match terminal_raw {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::Parse {
                    row: data_row,
                    message: format!("terminal `{other}` must be 0 or 1"),
                })
            }
        };

        let mut covariates = Vec::with_capacity(covariate_indices.len());
        for (name, idx) in &covariate_indices {
            covariates.push(parse_value(*idx, &format!("covariate `{name}`"))?);
        }

        records.push(ScoredRecord {
            observation_id: row.get(id_idx).unwrap_or("").trim().to_string(),
            score,
            label,
            is_terminal,
            covariates,
        });
    }

    RecordSet::new(covariate_names, records)
}

/// One analysis-ready episode: a score with an event indicator and the
/// covariate vector observed at that score.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub score: f64,
    pub event: bool,
    pub covariates: Vec<f64>,
}

/// Analysis-ready episodes after the truncation/censoring policy.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSet {
    covariate_names: Vec<String>,
    episodes: Vec<Episode>,
}

impl EpisodeSet {
    pub fn new(covariate_names: Vec<String>, episodes: Vec<Episode>) -> Result<EpisodeSet> {
        for episode in &episodes {
            if !episode.score.is_finite() {
                return Err(Error::Validation("episode score must be finite".into()));
            }
            if episode.covariates.len() != covariate_names.len() {
                return Err(Error::Validation(format!(
                    "episode has {} covariate values, expected {}",
                    episode.covariates.len(),
                    covariate_names.len()
                )));
            }
        }
        Ok(EpisodeSet {
            covariate_names,
            episodes,
        })
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn episodes(&self) -> &[Episode] {
        &self.episodes
    }

    pub fn len(&self) -> usize {
        self.episodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }

    pub fn n_events(&self) -> usize {
        self.episodes.iter().filter(|e| e.event).count()
    }

    /// Projection onto a subset of covariates, preserving the given order.
    pub fn select_covariates(&self, names: &[String]) -> Result<EpisodeSet> {
        let indices: Vec<usize> = names
            .iter()
            .map(|n| {
                self.covariate_names
                    .iter()
                    .position(|c| c == n)
                    .ok_or_else(|| Error::UnknownCovariate(n.clone()))
            })
            .collect::<Result<_>>()?;
        let episodes = self
            .episodes
            .iter()
            .map(|e| Episode {
                score: e.score,
                event: e.event,
                covariates: indices.iter().map(|&i| e.covariates[i]).collect(),
            })
            .collect();
        EpisodeSet::new(names.to_vec(), episodes)
    }
}

/// Applies the episode policy to a validated [`RecordSet`]:
/// responder terminal rows become events, responder lookback rows and
/// unlabeled rows become censored episodes, non-responder rows are dropped.
pub fn build_episodes(records: &RecordSet) -> Result<EpisodeSet> {
    // Every observation with at least one responder row must have a terminal row.
    let mut responder_ids: HashMap<&str, bool> = HashMap::new();
    for record in records.records() {
        if record.label == Label::Responder {
            let has_terminal = responder_ids
                .entry(record.observation_id.as_str())
                .or_insert(false);
            *has_terminal |= record.is_terminal;
        }
    }
    if let Some((id, _)) = responder_ids.iter().find(|(_, has)| !**has) {
        return Err(Error::Validation(format!(
            "responder observation `{id}` has no terminal row"
        )));
    }

    let episodes = records
        .records()
        .iter()
        .filter(|r| r.label != Label::NonResponder)
        .map(|r| Episode {
            score: r.score,
            event: r.label == Label::Responder && r.is_terminal,
            covariates: r.covariates.clone(),
        })
        .collect();

    EpisodeSet::new(records.covariate_names().to_vec(), episodes)
}

/// One row of the risk table: a distinct event score with its event count,
/// at-risk count, and the number of censored episodes falling in
/// `[score, next_event_score)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskRow {
    pub score: f64,
    pub events: usize,
    pub at_risk: usize,
    pub censored_after: usize,
}

/// Ordered distinct event scores with event and at-risk counts — the
/// cumulative-gains structure over classifier score.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskTable {
    rows: Vec<RiskRow>,
    n_total: usize,
    score_range: (f64, f64),
}

impl RiskTable {
    pub fn rows(&self) -> &[RiskRow] {
        &self.rows
    }

    pub fn n_total(&self) -> usize {
        self.n_total
    }

    /// Minimum and maximum observed episode score (events and censored).
    pub fn score_range(&self) -> (f64, f64) {
        self.score_range
    }
}

/// Counts episodes into a [`RiskTable`].
///
/// The at-risk set at an event score `s` is every episode with score >= s,
/// so a censored episode tied with an event score is at risk at that score.
pub fn risk_table(episodes: &EpisodeSet) -> Result<RiskTable> {
    if episodes.n_events() == 0 {
        return Err(Error::NoEvents);
    }

    let mut all_scores: Vec<f64> = episodes.episodes().iter().map(|e| e.score).collect();
    all_scores.sort_by(f64::total_cmp);
    let n_total = all_scores.len();
    let score_range = (all_scores[0], all_scores[n_total - 1]);

    let mut event_scores: Vec<f64> = episodes
        .episodes()
        .iter()
        .filter(|e| e.event)
        .map(|e| e.score)
        .collect();
    event_scores.sort_by(f64::total_cmp);
    event_scores.dedup();

    let mut censored_scores: Vec<f64> = episodes
        .episodes()
        .iter()
        .filter(|e| !e.event)
        .map(|e| e.score)
        .collect();
    censored_scores.sort_by(f64::total_cmp);

    let mut rows = Vec::with_capacity(event_scores.len());
    for (k, &score) in event_scores.iter().enumerate() {
        let events = episodes
            .episodes()
            .iter()
            .filter(|e| e.event && e.score == score)
            .count();
        // Episodes with score >= s: binary search on the sorted score list.
        let below = all_scores.partition_point(|&s| s < score);
        let at_risk = n_total - below;
        // Censored episodes in [s_k, s_{k+1}), open-ended for the last row.
        let lo = censored_scores.partition_point(|&s| s < score);
        let hi = match event_scores.get(k + 1) {
            Some(&next) => censored_scores.partition_point(|&s| s < next),
            None => censored_scores.len(),
        };
        rows.push(RiskRow {
            score,
            events,
            at_risk,
            censored_after: hi - lo,
        });
    }

    Ok(RiskTable {
        rows,
        n_total,
        score_range,
    })
}
