//! End-to-end orchestration behind the command-line surface: runs the
//! estimation pipeline in order (episodes, risk table, inclusion and
//! hazard curves, collinearity filter, stepwise multiplicative fit,
//! baseline hazard, additive fit) and writes every artifact plus a
//! manifest with content hashes.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::aalen::{aalen_fit, coefficient_curve, AalenFit};
use crate::coxph::{
    baseline_hazard, collinearity_filter, cox_fit, stepwise_select, CoxOptions, StepwiseOutcome,
};
use crate::dataset::backblaze::{backblaze_adapt, BackblazeOptions};
use crate::dataset::{build_episodes, load_records, risk_table, RecordSet, Schema};
use crate::error::{Error, Result};
use crate::estimators::{fmt_float, nelson_aalen, product_limit, InclusionCurve, VarianceMode};
use crate::plot::{render, StepPlot};
use crate::synthgen::{generate, SynthConfig};

pub const TOOL_NAME: &str = "score-explain";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Resolved options for the full `explain` pipeline.
#[derive(Debug, Clone)]
pub struct ExplainOptions {
    pub confidence_level: f64,
    pub variance_mode: VarianceMode,
    pub collinearity_threshold: f64,
    pub alpha_in: f64,
    pub alpha_out: f64,
    pub cox: CoxOptions,
    pub delimiter: u8,
}

impl Default for ExplainOptions {
    fn default() -> Self {
        ExplainOptions {
            confidence_level: 0.95,
            variance_mode: VarianceMode::Greenwood,
            collinearity_threshold: 0.95,
            alpha_in: 0.05,
            alpha_out: 0.10,
            cox: CoxOptions::default(),
            delimiter: b',',
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct InputEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct OutputEntry {
    pub path: String,
    /// `None` only for the manifest itself, which cannot carry its own hash.
    pub sha256: Option<String>,
}

/// Run manifest listing every emitted file with its content hash; reruns
/// with identical inputs and options produce identical manifests.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub inputs: Vec<InputEntry>,
    pub options: BTreeMap<String, String>,
    pub output_dir: String,
    pub status: String,
    pub failed_stage: Option<String>,
    pub outputs: Vec<OutputEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

/// Collects artifacts under one output directory and finishes with a
/// manifest that lists them all.
struct ArtifactWriter {
    dir: PathBuf,
    outputs: Vec<OutputEntry>,
}

impl ArtifactWriter {
    fn new(dir: &Path) -> Result<ArtifactWriter> {
        fs::create_dir_all(dir)?;
        Ok(ArtifactWriter {
            dir: dir.to_path_buf(),
            outputs: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        fs::write(self.dir.join(name), bytes)?;
        self.outputs.push(OutputEntry {
            path: name.to_string(),
            sha256: Some(sha256_hex(bytes)),
        });
        Ok(())
    }

    fn finish(
        mut self,
        subcommand: &str,
        inputs: Vec<InputEntry>,
        options: BTreeMap<String, String>,
        failed_stage: Option<&str>,
    ) -> Result<RunManifest> {
        self.outputs.push(OutputEntry {
            path: "manifest.json".to_string(),
            sha256: None,
        });
        self.outputs.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = RunManifest {
            tool: TOOL_NAME.to_string(),
            version: TOOL_VERSION.to_string(),
            subcommand: subcommand.to_string(),
            inputs,
            options,
            output_dir: self.dir.display().to_string(),
            status: if failed_stage.is_some() {
                "failed".to_string()
            } else {
                "success".to_string()
            },
            failed_stage: failed_stage.map(str::to_string),
            outputs: self.outputs,
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        fs::write(self.dir.join("manifest.json"), bytes)?;
        Ok(manifest)
    }
}

fn read_input(path: &Path) -> Result<(Vec<u8>, InputEntry)> {
    let bytes = fs::read(path)?;
    let entry = InputEntry {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
    };
    Ok((bytes, entry))
}

fn inclusion_curve_svg(curve: &InclusionCurve) -> String {
    let (lo, hi) = curve.domain();
    let mut points = vec![(lo, 1.0)];
    let mut band = vec![(lo, 1.0, 1.0)];
    for p in curve.points() {
        points.push((p.score, p.estimate));
        if let (Some(low), Some(high)) = (p.ci_low, p.ci_high) {
            band.push((p.score, low, high));
        }
    }
    let last_value = points.last().map(|p| p.1).unwrap_or(1.0);
    if points.last().map(|p| p.0) != Some(hi) {
        points.push((hi, last_value));
    }
    if let Some(&(bx, blo, bhi)) = band.last() {
        if bx != hi && band.len() == curve.points().len() + 1 {
            band.push((hi, blo, bhi));
        }
    }
    render(&StepPlot {
        title: "Inclusion curve",
        x_label: "score",
        y_label: "inclusion probability",
        points: &points,
        band: Some(&band),
    })
}

fn aalen_curve_svg(fit: &AalenFit, covariate: &str, domain_lo: f64) -> Result<String> {
    let bands = coefficient_curve(fit, covariate)?;
    let mut points = vec![(domain_lo, 0.0)];
    let mut band = vec![(domain_lo, 0.0, 0.0)];
    for b in &bands {
        points.push((b.score, b.cumulative));
        band.push((b.score, b.lower, b.upper));
    }
    Ok(render(&StepPlot {
        title: &format!("Cumulative coefficient: {covariate}"),
        x_label: "score",
        y_label: "cumulative coefficient",
        points: &points,
        band: Some(&band),
    }))
}

fn csv_bytes<F>(write: F) -> Result<Vec<u8>>
where
    F: FnOnce(&mut Vec<u8>) -> Result<()>,
{
    let mut bytes = Vec::new();
    write(&mut bytes)?;
    Ok(bytes)
}

fn sanitize_filename(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn explain_options_map(options: &ExplainOptions) -> BTreeMap<String, String> {
    let mut map = BTreeMap::new();
    map.insert(
        "confidence_level".into(),
        fmt_float(options.confidence_level),
    );
    map.insert("variance_mode".into(), options.variance_mode.as_str().into());
    map.insert(
        "collinearity_threshold".into(),
        fmt_float(options.collinearity_threshold),
    );
    map.insert("alpha_in".into(), fmt_float(options.alpha_in));
    map.insert("alpha_out".into(), fmt_float(options.alpha_out));
    map.insert("tol".into(), fmt_float(options.cox.tol));
    map.insert("max_iter".into(), options.cox.max_iter.to_string());
    map.insert(
        "delimiter".into(),
        (options.delimiter as char).to_string(),
    );
    map
}

/// Runs the full score-dependent explanation pipeline and writes all
/// artifacts into `out_dir`.
///
/// Validation problems surface before any artifact is written. A fitting
/// failure after the nonparametric stage keeps the partial artifacts and
/// writes a manifest whose `failed_stage` names the stage that failed,
/// then returns the error.
pub fn run_explain(input: &Path, out_dir: &Path, options: &ExplainOptions) -> Result<RunManifest> {
    let (bytes, input_entry) = read_input(input)?;
    let schema = Schema {
        delimiter: options.delimiter,
        ..Schema::default()
    };
    let records = load_records(&bytes[..], &schema)?;
    let episodes = build_episodes(&records)?;
    let table = risk_table(&episodes)?;
    let inclusion = product_limit(&table, options.confidence_level, options.variance_mode)?;
    let hazard = nelson_aalen(&table);

    let options_map = explain_options_map(options);
    let mut writer = ArtifactWriter::new(out_dir)?;
    writer.write(
        "inclusion_curve.csv",
        &csv_bytes(|b| inclusion.write_csv(b))?,
    )?;
    writer.write("inclusion_curve.svg", inclusion_curve_svg(&inclusion).as_bytes())?;
    writer.write(
        "cumulative_hazard.csv",
        &csv_bytes(|b| hazard.write_csv(b))?,
    )?;

    let fail = |writer: ArtifactWriter, stage: &str, err: Error, inputs: Vec<InputEntry>, map: BTreeMap<String, String>| -> Result<RunManifest> {
        writer.finish("explain", inputs, map, Some(stage))?;
        Err(err)
    };

    // Multiplicative stage: collinearity filter, then stepwise selection.
    let report = match collinearity_filter(&records, options.collinearity_threshold) {
        Ok(report) => report,
        Err(err) => {
            return fail(writer, "collinearity", err, vec![input_entry], options_map);
        }
    };
    for dropped in &report.dropped {
        log::info!("collinearity filter dropped `{}`: {:?}", dropped.name, dropped.reason);
    }
    let outcome = if report.kept.is_empty() {
        let empty = episodes.select_covariates(&[])?;
        match cox_fit(&empty, &options.cox) {
            Ok(fit) => StepwiseOutcome {
                fit,
                trace: vec![],
                skipped: vec![],
            },
            Err(err) => {
                return fail(writer, "cox", err, vec![input_entry], options_map);
            }
        }
    } else {
        match stepwise_select(
            &episodes.select_covariates(&report.kept)?,
            options.alpha_in,
            options.alpha_out,
        ) {
            Ok(outcome) => outcome,
            Err(err) => {
                return fail(writer, "cox", err, vec![input_entry], options_map);
            }
        }
    };
    for event in &outcome.trace {
        log::info!(
            "stepwise: {:?} `{}` (p = {:.6})",
            event.action,
            event.covariate,
            event.p_value
        );
    }
    // An empty model caused by fit failures (not by insignificance) is a
    // fitting failure for the pipeline as a whole.
    if outcome.fit.beta.is_empty() && !outcome.skipped.is_empty() {
        let failures: Vec<String> = outcome
            .skipped
            .iter()
            .map(|(name, why)| format!("{name}: {why}"))
            .collect();
        return fail(
            writer,
            "cox",
            Error::NonConvergence(format!(
                "no covariate could be fitted ({})",
                failures.join("; ")
            )),
            vec![input_entry],
            options_map,
        );
    }

    writer.write(
        "cox_summary.json",
        &csv_bytes(|b| outcome.fit.write_json(b))?,
    )?;
    writer.write(
        "cox_summary.txt",
        &csv_bytes(|b| outcome.fit.write_table(b))?,
    )?;

    let selected = outcome.fit.covariate_names.clone();
    let selected_episodes = episodes.select_covariates(&selected)?;
    let baseline = match baseline_hazard(&outcome.fit, &selected_episodes) {
        Ok(baseline) => baseline,
        Err(err) => {
            return fail(writer, "baseline_hazard", err, vec![input_entry], options_map);
        }
    };
    writer.write(
        "baseline_hazard.csv",
        &csv_bytes(|b| baseline.write_csv(b))?,
    )?;

    // Additive stage on the selected covariates (intercept-only when none
    // were selected).
    let fit = match aalen_fit(&selected_episodes) {
        Ok(fit) => fit,
        Err(err) => {
            return fail(writer, "aalen", err, vec![input_entry], options_map);
        }
    };
    writer.write("aalen_curves.csv", &csv_bytes(|b| fit.write_csv(b))?)?;
    let domain_lo = table.score_range().0;
    for name in fit.covariate_names().to_vec() {
        let svg = aalen_curve_svg(&fit, &name, domain_lo)?;
        writer.write(
            &format!("aalen_{}.svg", sanitize_filename(&name)),
            svg.as_bytes(),
        )?;
    }

    writer.finish("explain", vec![input_entry], options_map, None)
}

/// `km` subcommand: inclusion curve artifacts only.
pub fn run_km(
    input: &Path,
    out_dir: &Path,
    confidence_level: f64,
    variance_mode: VarianceMode,
    delimiter: u8,
) -> Result<RunManifest> {
    let (bytes, input_entry) = read_input(input)?;
    let schema = Schema {
        delimiter,
        ..Schema::default()
    };
    let records = load_records(&bytes[..], &schema)?;
    let episodes = build_episodes(&records)?;
    let table = risk_table(&episodes)?;
    let inclusion = product_limit(&table, confidence_level, variance_mode)?;

    let mut writer = ArtifactWriter::new(out_dir)?;
    writer.write(
        "inclusion_curve.csv",
        &csv_bytes(|b| inclusion.write_csv(b))?,
    )?;
    writer.write("inclusion_curve.svg", inclusion_curve_svg(&inclusion).as_bytes())?;
    let mut map = BTreeMap::new();
    map.insert("confidence_level".into(), fmt_float(confidence_level));
    map.insert("variance_mode".into(), variance_mode.as_str().into());
    map.insert("delimiter".into(), (delimiter as char).to_string());
    writer.finish("km", vec![input_entry], map, None)
}

/// `cox` subcommand: proportional-hazards fit on every covariate.
pub fn run_cox(
    input: &Path,
    out_dir: &Path,
    cox_options: &CoxOptions,
    delimiter: u8,
) -> Result<RunManifest> {
    let (bytes, input_entry) = read_input(input)?;
    let schema = Schema {
        delimiter,
        ..Schema::default()
    };
    let records = load_records(&bytes[..], &schema)?;
    let episodes = build_episodes(&records)?;
    let fit = cox_fit(&episodes, cox_options)?;
    let baseline = baseline_hazard(&fit, &episodes)?;

    let mut writer = ArtifactWriter::new(out_dir)?;
    writer.write("cox_summary.json", &csv_bytes(|b| fit.write_json(b))?)?;
    writer.write("cox_summary.txt", &csv_bytes(|b| fit.write_table(b))?)?;
    writer.write(
        "baseline_hazard.csv",
        &csv_bytes(|b| baseline.write_csv(b))?,
    )?;
    let mut map = BTreeMap::new();
    map.insert("tol".into(), fmt_float(cox_options.tol));
    map.insert("max_iter".into(), cox_options.max_iter.to_string());
    map.insert("delimiter".into(), (delimiter as char).to_string());
    writer.finish("cox", vec![input_entry], map, None)
}

/// `aalen` subcommand: additive-model curves on every covariate.
pub fn run_aalen(input: &Path, out_dir: &Path, delimiter: u8) -> Result<RunManifest> {
    let (bytes, input_entry) = read_input(input)?;
    let schema = Schema {
        delimiter,
        ..Schema::default()
    };
    let records = load_records(&bytes[..], &schema)?;
    let episodes = build_episodes(&records)?;
    let table = risk_table(&episodes)?;
    let fit = aalen_fit(&episodes)?;

    let mut writer = ArtifactWriter::new(out_dir)?;
    writer.write("aalen_curves.csv", &csv_bytes(|b| fit.write_csv(b))?)?;
    let domain_lo = table.score_range().0;
    for name in fit.covariate_names().to_vec() {
        let svg = aalen_curve_svg(&fit, &name, domain_lo)?;
        writer.write(
            &format!("aalen_{}.svg", sanitize_filename(&name)),
            svg.as_bytes(),
        )?;
    }
    let mut map = BTreeMap::new();
    map.insert("delimiter".into(), (delimiter as char).to_string());
    writer.finish("aalen", vec![input_entry], map, None)
}

/// Writes a record set in the canonical column layout.
pub fn write_canonical_csv(records: &RecordSet) -> Result<Vec<u8>> {
    let mut out = csv::Writer::from_writer(Vec::new());
    let mut header = vec![
        "id".to_string(),
        "score".to_string(),
        "label".to_string(),
        "terminal".to_string(),
    ];
    header.extend(records.covariate_names().iter().cloned());
    out.write_record(&header)?;
    for record in records.records() {
        let mut row = vec![
            record.observation_id.clone(),
            fmt_float(record.score),
            record.label.as_str().to_string(),
            if record.is_terminal { "1" } else { "0" }.to_string(),
        ];
        row.extend(record.covariates.iter().map(|v| fmt_float(*v)));
        out.write_record(&row)?;
    }
    out.flush()?;
    out.into_inner().map_err(|e| Error::Numeric(e.to_string()))
}

/// `synth` subcommand: deterministic dataset written to a single file.
pub fn run_synth(config: &SynthConfig, out_file: &Path) -> Result<()> {
    let records = generate(config)?;
    if let Some(parent) = out_file.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(out_file, write_canonical_csv(&records)?)?;
    Ok(())
}

/// `adapt-backblaze` subcommand: canonical CSV plus a metadata sidecar
/// (`<out>.meta.json`) holding the normalization constants and lookback.
pub fn run_adapt_backblaze(
    input: &Path,
    out_file: &Path,
    options: &BackblazeOptions,
) -> Result<PathBuf> {
    let (bytes, _) = read_input(input)?;
    let (records, metadata) = backblaze_adapt(&bytes[..], options)?;
    if let Some(parent) = out_file.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(out_file, write_canonical_csv(&records)?)?;
    let sidecar = out_file.with_extension("meta.json");
    let mut sidecar_bytes = serde_json::to_vec_pretty(&metadata)?;
    sidecar_bytes.push(b'\n');
    fs::write(&sidecar, sidecar_bytes)?;
    Ok(sidecar)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::CovariateSpec;

    fn synth_file(dir: &Path) -> PathBuf {
        let config = SynthConfig {
            n: 300,
            true_beta: vec![0.8, 0.0],
            baseline_rate: 1.0,
            censor_fraction: 0.25,
            covariates: vec![
                CovariateSpec::Bernoulli { p: 0.5 },
                CovariateSpec::Uniform {
                    low: 0.0,
                    high: 1.0,
                },
            ],
            seed: 42,
        };
        let path = dir.join("synth.csv");
        run_synth(&config, &path).unwrap();
        path
    }

    #[test]
    fn explain_emits_full_artifact_set() {
        let dir = tempfile::tempdir().unwrap();
        let input = synth_file(dir.path());
        let out = dir.path().join("run");
        let manifest = run_explain(&input, &out, &ExplainOptions::default()).unwrap();
        assert_eq!(manifest.status, "success");
        assert!(manifest.outputs.len() >= 8);
        // Every file in the directory appears in the manifest.
        let mut listed: Vec<String> = manifest.outputs.iter().map(|o| o.path.clone()).collect();
        listed.sort();
        let mut actual: Vec<String> = fs::read_dir(&out)
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .collect();
        actual.sort();
        assert_eq!(listed, actual);
    }

    #[test]
    fn explain_is_byte_identical_on_rerun() {
        let dir = tempfile::tempdir().unwrap();
        let input = synth_file(dir.path());
        let out = dir.path().join("run");
        run_explain(&input, &out, &ExplainOptions::default()).unwrap();
        let snapshot: BTreeMap<String, Vec<u8>> = fs::read_dir(&out)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (
                    e.file_name().to_string_lossy().into_owned(),
                    fs::read(e.path()).unwrap(),
                )
            })
            .collect();
        fs::remove_dir_all(&out).unwrap();
        run_explain(&input, &out, &ExplainOptions::default()).unwrap();
        for (name, bytes) in &snapshot {
            assert_eq!(&fs::read(out.join(name)).unwrap(), bytes, "file {name} differs");
        }
    }

    #[test]
    fn explain_with_zero_events_is_an_input_error() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("noevents.csv");
        fs::write(
            &input,
            "id,score,label,terminal,x1\na,0.1,unlabeled,0,1.0\nb,0.5,unlabeled,0,0.0\n",
        )
        .unwrap();
        let err = run_explain(&input, &dir.path().join("out"), &ExplainOptions::default())
            .unwrap_err();
        assert!(matches!(err, Error::NoEvents));
        assert_eq!(err.exit_class(), 2);
    }

    #[test]
    fn explain_keeps_km_artifacts_on_fit_failure() {
        // Monotone likelihood: the only Z=1 episode has the earliest event.
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("monotone.csv");
        fs::write(
            &input,
            "id,score,label,terminal,z\n\
             a,0.1,responder,1,1\n\
             b,0.5,responder,1,0\n\
             c,0.9,responder,1,0\n",
        )
        .unwrap();
        let out = dir.path().join("out");
        let err = run_explain(&input, &out, &ExplainOptions::default()).unwrap_err();
        assert_eq!(err.exit_class(), 3);
        assert!(out.join("inclusion_curve.csv").exists());
        assert!(out.join("manifest.json").exists());
        let manifest: serde_json::Value =
            serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest["status"], "failed");
        assert_eq!(manifest["failed_stage"], "cox");
        assert!(!out.join("cox_summary.json").exists());
    }

    #[test]
    fn explain_succeeds_with_no_significant_covariates() {
        // A pure-noise covariate: stepwise legitimately selects nothing, so
        // the run ends with an empty multiplicative model, a baseline that
        // is the plain hazard curve, and an intercept-only additive fit.
        let config = SynthConfig {
            n: 200,
            true_beta: vec![0.0],
            baseline_rate: 1.0,
            censor_fraction: 0.2,
            covariates: vec![CovariateSpec::Uniform {
                low: 0.0,
                high: 1.0,
            }],
            seed: 123,
        };
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("noise.csv");
        run_synth(&config, &input).unwrap();
        let out = dir.path().join("run");
        let manifest = run_explain(&input, &out, &ExplainOptions::default()).unwrap();
        assert_eq!(manifest.status, "success");
        let summary: serde_json::Value =
            serde_json::from_slice(&fs::read(out.join("cox_summary.json")).unwrap()).unwrap();
        assert_eq!(summary["covariates"].as_array().unwrap().len(), 0);
        assert!(out.join("aalen_intercept.svg").exists());
    }

    #[test]
    fn synth_output_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let a = synth_file(dir.path());
        let first = fs::read(&a).unwrap();
        fs::remove_file(&a).unwrap();
        let b = synth_file(dir.path());
        assert_eq!(first, fs::read(b).unwrap());
    }

    #[test]
    fn km_subcommand_writes_inclusion_curve() {
        let dir = tempfile::tempdir().unwrap();
        let input = synth_file(dir.path());
        let out = dir.path().join("km");
        let manifest = run_km(&input, &out, 0.95, VarianceMode::Greenwood, b',').unwrap();
        assert!(out.join("inclusion_curve.csv").exists());
        assert_eq!(manifest.subcommand, "km");
    }

    #[test]
    fn cox_subcommand_writes_summary_and_baseline() {
        let dir = tempfile::tempdir().unwrap();
        let input = synth_file(dir.path());
        let out = dir.path().join("cox");
        let manifest = run_cox(&input, &out, &CoxOptions::default(), b',').unwrap();
        assert!(out.join("cox_summary.json").exists());
        assert!(out.join("cox_summary.txt").exists());
        assert!(out.join("baseline_hazard.csv").exists());
        assert_eq!(manifest.subcommand, "cox");
        let summary: serde_json::Value =
            serde_json::from_slice(&fs::read(out.join("cox_summary.json")).unwrap()).unwrap();
        assert_eq!(summary["covariates"].as_array().unwrap().len(), 2);
        assert_eq!(summary["converged"], true);
    }

    #[test]
    fn aalen_subcommand_writes_curves_and_plots() {
        let dir = tempfile::tempdir().unwrap();
        let input = synth_file(dir.path());
        let out = dir.path().join("aalen");
        let manifest = run_aalen(&input, &out, b',').unwrap();
        assert!(out.join("aalen_curves.csv").exists());
        assert!(out.join("aalen_intercept.svg").exists());
        assert!(out.join("aalen_x1.svg").exists());
        assert!(out.join("aalen_x2.svg").exists());
        assert_eq!(manifest.subcommand, "aalen");
    }

    #[test]
    fn adapt_backblaze_emits_canonical_csv_and_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("raw.csv");
        fs::write(
            &input,
            "date,serial_number,model,failure,smart_9_raw,smart_197_raw\n\
             2020-01-01,A,M,0,8760,0\n\
             2020-01-02,A,M,1,8784,5\n\
             2020-01-01,B,M,0,100,0\n\
             2020-01-02,B,M,0,124,0\n",
        )
        .unwrap();
        let out = dir.path().join("canonical.csv");
        let sidecar = run_adapt_backblaze(&input, &out, &BackblazeOptions::default()).unwrap();
        assert!(out.exists());
        assert!(sidecar.exists());
        let records = load_records(&fs::read(&out).unwrap()[..], &Schema::default()).unwrap();
        assert!(records
            .covariate_names()
            .contains(&"smart_9_years".to_string()));
        let meta: serde_json::Value =
            serde_json::from_slice(&fs::read(&sidecar).unwrap()).unwrap();
        assert_eq!(meta["lookback_days"], 5);
        assert_eq!(meta["score_source"], "placeholder_zero");
    }
}
