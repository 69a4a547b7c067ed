//! Adapter for the public Backblaze daily drive-snapshot CSV layout.
//!
//! Turns raw daily rows (serial_number, model, failure flag, raw SMART
//! columns) into the canonical scored-record layout: power-on hours become
//! years, the remaining SMART statistics are min-max normalized over the
//! ingested rows, and each SMART feature gains a greater-than-zero
//! indicator companion. Devices that ever fail become responders with a
//! terminal row; the rows inside the lookback window before the terminal
//! row are retained as censored (non-terminal) responder rows.

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::{Label, RecordSet, ScoredRecord};
use crate::error::{Error, Result};

/// Hours in a (non-leap) year; divisor for the power-on-hours statistic.
pub const HOURS_PER_YEAR: f64 = 8760.0;

/// SMART attribute number of the power-on-hours counter.
const POWER_ON_HOURS: u32 = 9;

#[derive(Debug, Clone)]
pub struct BackblazeOptions {
    /// Number of daily rows before the terminal row to retain as censored
    /// responder rows.
    pub lookback_days: usize,
    /// Column carrying an externally produced classifier score. When the
    /// column is absent, scores are written as 0.0 placeholders and the
    /// metadata sidecar records that no scorer output was present.
    pub score_column: String,
    pub delimiter: u8,
}

impl Default for BackblazeOptions {
    fn default() -> Self {
        BackblazeOptions {
            lookback_days: 5,
            score_column: "score".to_string(),
            delimiter: b',',
        }
    }
}

/// Min/max observed for one raw SMART column, as applied during
/// normalization. Emitted to the metadata sidecar so a run can be redone
/// bit-for-bit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationRange {
    pub min: f64,
    pub max: f64,
}

/// Reproducibility sidecar for one adapter run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdaptMetadata {
    pub lookback_days: usize,
    /// `"column:<name>"` when a score column was consumed, else `"placeholder_zero"`.
    pub score_source: String,
    pub hours_per_year: f64,
    /// Keyed by raw column name; power-on hours is excluded (fixed divisor).
    pub normalization: BTreeMap<String, NormalizationRange>,
}

struct RawRow {
    serial: String,
    failure: bool,
    score: Option<f64>,
    smart: Vec<f64>,
    order_key: String,
}

fn smart_number(column: &str) -> Option<u32> {
    let rest = column.strip_prefix("smart_")?;
    let digits = rest.strip_suffix("_raw")?;
    digits.parse().ok()
}

/// Reads raw Backblaze daily rows and emits the canonical record layout
/// plus the normalization metadata used.
pub fn backblaze_adapt<R: Read>(
    source: R,
    options: &BackblazeOptions,
) -> Result<(RecordSet, AdaptMetadata)> {
    if options.lookback_days == 0 {
        return Err(Error::Validation("lookback_days must be positive".into()));
    }

    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(true)
        .from_reader(source);
    let headers: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();

    let serial_idx = headers
        .iter()
        .position(|h| h == "serial_number")
        .ok_or_else(|| Error::Schema("missing column `serial_number`".into()))?;
    let failure_idx = headers
        .iter()
        .position(|h| h == "failure")
        .ok_or_else(|| Error::Schema("missing column `failure`".into()))?;
    let date_idx = headers.iter().position(|h| h == "date");
    let score_idx = headers.iter().position(|h| h == &options.score_column);

    // Raw SMART columns in header order.
    let smart_columns: Vec<(usize, u32, String)> = headers
        .iter()
        .enumerate()
        .filter_map(|(i, h)| smart_number(h).map(|n| (i, n, h.clone())))
        .collect();
    if smart_columns.is_empty() {
        return Err(Error::Schema(
            "no smart_<n>_raw columns found; not a recognizable drive-snapshot layout".into(),
        ));
    }

    let mut rows: Vec<RawRow> = Vec::new();
    for (row_number, row) in reader.records().enumerate() {
        let row = row?;
        let data_row = row_number + 1;
        let failure_raw = row.get(failure_idx).unwrap_or("").trim();
        let failure = match failure_raw {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::Parse {
                    row: data_row,
                    message: format!("failure flag `{other}` must be 0 or 1"),
                })
            }
        };
        let mut smart = Vec::with_capacity(smart_columns.len());
        for (idx, _, name) in &smart_columns {
            let raw = row.get(*idx).unwrap_or("").trim();
            let value: f64 = raw.parse().map_err(|_| Error::Parse {
                row: data_row,
                message: format!("column `{name}` value `{raw}` is not numeric"),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    row: data_row,
                    message: format!("column `{name}` value `{raw}` is not finite"),
                });
            }
            smart.push(value);
        }
        let score = match score_idx {
            Some(idx) => {
                let raw = row.get(idx).unwrap_or("").trim();
                Some(raw.parse::<f64>().map_err(|_| Error::Parse {
                    row: data_row,
                    message: format!("score `{raw}` is not numeric"),
                })?)
            }
            None => None,
        };
        rows.push(RawRow {
            serial: row.get(serial_idx).unwrap_or("").trim().to_string(),
            failure,
            score,
            smart,
            order_key: date_idx
                .map(|i| row.get(i).unwrap_or("").trim().to_string())
                .unwrap_or_default(),
        });
    }

    // Normalization constants over the ingested rows.
    let mut normalization: BTreeMap<String, NormalizationRange> = BTreeMap::new();
    for (col, (_, number, name)) in smart_columns.iter().enumerate() {
        if *number == POWER_ON_HOURS {
            continue;
        }
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for row in &rows {
            min = min.min(row.smart[col]);
            max = max.max(row.smart[col]);
        }
        if rows.is_empty() {
            min = 0.0;
            max = 0.0;
        }
        normalization.insert(name.clone(), NormalizationRange { min, max });
    }

    // Group rows per device, preserving snapshot order (by date column when
    // present, else file order; sort is stable so equal keys keep file order).
    let mut device_order: Vec<String> = Vec::new();
    let mut by_device: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, row) in rows.iter().enumerate() {
        if !by_device.contains_key(&row.serial) {
            device_order.push(row.serial.clone());
        }
        by_device.entry(row.serial.clone()).or_default().push(i);
    }
    for indices in by_device.values_mut() {
        indices.sort_by(|&a, &b| rows[a].order_key.cmp(&rows[b].order_key));
    }

    // Output covariate names: for each SMART column, the value covariate
    // then its indicator companion.
    let mut covariate_names = Vec::with_capacity(2 * smart_columns.len());
    for (_, number, _) in &smart_columns {
        if *number == POWER_ON_HOURS {
            covariate_names.push(format!("smart_{number}_years"));
        } else {
            covariate_names.push(format!("smart_{number}"));
        }
        covariate_names.push(format!("smart_{number}_i"));
    }

    let transform = |row: &RawRow| -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * smart_columns.len());
        for (col, (_, number, name)) in smart_columns.iter().enumerate() {
            let raw = row.smart[col];
            let value = if *number == POWER_ON_HOURS {
                raw / HOURS_PER_YEAR
            } else {
                let range = &normalization[name];
                if range.max > range.min {
                    (raw - range.min) / (range.max - range.min)
                } else {
                    0.0
                }
            };
            out.push(value);
            out.push(if raw > 0.0 { 1.0 } else { 0.0 });
        }
        out
    };

    let mut records = Vec::new();
    for serial in &device_order {
        let indices = &by_device[serial];
        let failed = indices.iter().any(|&i| rows[i].failure);
        if failed {
            // Terminal on the last row; lookback_days rows before it retained
            // as censored responder rows, anything earlier dropped.
            let terminal_pos = indices.len() - 1;
            let available = terminal_pos;
            let lookback = if options.lookback_days > available {
                log::warn!(
                    "device `{serial}`: lookback {} exceeds available history {}; truncating",
                    options.lookback_days,
                    available
                );
                available
            } else {
                options.lookback_days
            };
            for (pos, &i) in indices.iter().enumerate() {
                if pos + lookback < terminal_pos {
                    continue;
                }
                let row = &rows[i];
                records.push(ScoredRecord {
                    observation_id: serial.clone(),
                    score: row.score.unwrap_or(0.0),
                    label: Label::Responder,
                    is_terminal: pos == terminal_pos,
                    covariates: transform(row),
                });
            }
        } else {
            for &i in indices {
                let row = &rows[i];
                records.push(ScoredRecord {
                    observation_id: serial.clone(),
                    score: row.score.unwrap_or(0.0),
                    label: Label::NonResponder,
                    is_terminal: false,
                    covariates: transform(row),
                });
            }
        }
    }

    let metadata = AdaptMetadata {
        lookback_days: options.lookback_days,
        score_source: match score_idx {
            Some(_) => format!("column:{}", options.score_column),
            None => "placeholder_zero".to_string(),
        },
        hours_per_year: HOURS_PER_YEAR,
        normalization,
    };

    Ok((RecordSet::new(covariate_names, records)?, metadata))
}
