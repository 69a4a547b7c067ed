use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use score_explain::coxph::CoxOptions;
use score_explain::dataset::backblaze::BackblazeOptions;
use score_explain::estimators::VarianceMode;
use score_explain::pipeline::{
    run_aalen, run_adapt_backblaze, run_cox, run_explain, run_km, run_synth, ExplainOptions,
};
use score_explain::synthgen::{CovariateSpec, SynthConfig};

/// Explain binary classifier scores with survival-analysis estimators.
#[derive(Parser)]
#[command(name = "score-explain", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct InputArgs {
    /// Canonical dataset file (columns id, score, label, terminal, covariates).
    #[arg(long)]
    input: PathBuf,
    /// Output directory.
    #[arg(long, env = "SCORE_EXPLAIN_OUT")]
    out: PathBuf,
    /// Field delimiter for the input file.
    #[arg(long, default_value = ",", value_parser = parse_delimiter)]
    delimiter: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Run the complete pipeline and emit every artifact.
    Explain {
        #[command(flatten)]
        io: InputArgs,
        /// Confidence level for interval bounds.
        #[arg(long, default_value_t = 0.95)]
        conf: f64,
        /// Variance estimator for the inclusion curve: greenwood or tau.
        #[arg(long, default_value = "greenwood", value_parser = parse_variance)]
        variance: VarianceMode,
        /// Absolute-correlation threshold for dropping covariates.
        #[arg(long, default_value_t = 0.95)]
        collinearity: f64,
        /// Forward-selection entry threshold on the Wald p-value.
        #[arg(long, default_value_t = 0.05)]
        alpha_in: f64,
        /// Backward-elimination exit threshold on the Wald p-value.
        #[arg(long, default_value_t = 0.10)]
        alpha_out: f64,
        /// Convergence tolerance on the partial log likelihood.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 50)]
        max_iter: usize,
    },
    /// Inclusion (product-limit) curve only.
    Km {
        #[command(flatten)]
        io: InputArgs,
        #[arg(long, default_value_t = 0.95)]
        conf: f64,
        #[arg(long, default_value = "greenwood", value_parser = parse_variance)]
        variance: VarianceMode,
    },
    /// Proportional-hazards fit on all covariates.
    Cox {
        #[command(flatten)]
        io: InputArgs,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 50)]
        max_iter: usize,
    },
    /// Additive-hazards coefficient curves on all covariates.
    Aalen {
        #[command(flatten)]
        io: InputArgs,
    },
    /// Generate a deterministic synthetic dataset.
    Synth {
        /// Number of observations.
        #[arg(long)]
        n: usize,
        /// Comma-separated true coefficients, one per covariate.
        #[arg(long, value_delimiter = ',')]
        beta: Vec<f64>,
        /// Covariate distributions (`bernoulli:p` or `uniform:lo:hi`),
        /// one per coefficient; defaults to bernoulli:0.5 for each.
        #[arg(long = "covariate", value_parser = parse_covariate)]
        covariates: Vec<CovariateSpec>,
        #[arg(long, default_value_t = 1.0)]
        baseline_rate: f64,
        #[arg(long, default_value_t = 0.0)]
        censor: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Output CSV file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Convert raw drive-snapshot CSV to the canonical layout.
    AdaptBackblaze {
        /// Raw daily snapshot CSV.
        #[arg(long)]
        input: PathBuf,
        /// Output canonical CSV (a `<out>.meta.json` sidecar is written too).
        #[arg(long)]
        out: PathBuf,
        /// Days before the terminal row retained as censored rows.
        #[arg(long, default_value_t = 5)]
        lookback: usize,
        /// Column with externally produced scores, if present.
        #[arg(long, default_value = "score")]
        score_column: String,
        #[arg(long, default_value = ",", value_parser = parse_delimiter)]
        delimiter: u8,
    },
}

fn parse_delimiter(text: &str) -> Result<u8, String> {
    let bytes = text.as_bytes();
    match bytes.len() {
        1 => Ok(bytes[0]),
        _ if text == "\\t" || text == "tab" => Ok(b'\t'),
        _ => Err(format!("delimiter `{text}` must be a single character")),
    }
}

fn parse_variance(text: &str) -> Result<VarianceMode, String> {
    VarianceMode::parse(text).ok_or_else(|| format!("variance `{text}` must be greenwood or tau"))
}

fn parse_covariate(text: &str) -> Result<CovariateSpec, String> {
    CovariateSpec::parse(text)
        .ok_or_else(|| format!("covariate `{text}` must be bernoulli:p or uniform:lo:hi"))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();

    let result = match cli.command {
        Command::Explain {
            io,
            conf,
            variance,
            collinearity,
            alpha_in,
            alpha_out,
            tol,
            max_iter,
        } => {
            let options = ExplainOptions {
                confidence_level: conf,
                variance_mode: variance,
                collinearity_threshold: collinearity,
                alpha_in,
                alpha_out,
                cox: CoxOptions { tol, max_iter },
                delimiter: io.delimiter,
            };
            run_explain(&io.input, &io.out, &options).map(|manifest| {
                println!(
                    "wrote {} artifacts to {}",
                    manifest.outputs.len(),
                    manifest.output_dir
                );
            })
        }
        Command::Km { io, conf, variance } => {
            run_km(&io.input, &io.out, conf, variance, io.delimiter).map(|manifest| {
                println!("wrote inclusion curve to {}", manifest.output_dir);
            })
        }
        Command::Cox { io, tol, max_iter } => {
            run_cox(&io.input, &io.out, &CoxOptions { tol, max_iter }, io.delimiter).map(
                |manifest| {
                    println!("wrote fit summary to {}", manifest.output_dir);
                },
            )
        }
        Command::Aalen { io } => run_aalen(&io.input, &io.out, io.delimiter).map(|manifest| {
            println!("wrote coefficient curves to {}", manifest.output_dir);
        }),
        Command::Synth {
            n,
            beta,
            covariates,
            baseline_rate,
            censor,
            seed,
            out,
        } => {
            let covariates = if covariates.is_empty() {
                vec![CovariateSpec::Bernoulli { p: 0.5 }; beta.len()]
            } else {
                covariates
            };
            let config = SynthConfig {
                n,
                true_beta: beta,
                baseline_rate,
                censor_fraction: censor,
                covariates,
                seed,
            };
            run_synth(&config, &out).map(|_| {
                println!("wrote {}", out.display());
            })
        }
        Command::AdaptBackblaze {
            input,
            out,
            lookback,
            score_column,
            delimiter,
        } => {
            let options = BackblazeOptions {
                lookback_days: lookback,
                score_column,
                delimiter,
            };
            run_adapt_backblaze(&input, &out, &options).map(|sidecar| {
                println!("wrote {} and {}", out.display(), sidecar.display());
            })
        }
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_class())
        }
    }
}
