//! `gbc train | predict | trace`.
//!
//! Exit codes: 0 ok, 2 usage, 3 data, 4 I/O, 5 model version.
//! Diagnostics go to standard error; standard output carries only data.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::booster::{self, ForcedSplit, Model, TrainConfig, TrainingTrace};
use crate::data::{self, Dataset};
use crate::error::{DataError, Error, Result};
use crate::model_file;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_IO: i32 = 4;
pub const EXIT_VERSION: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "gbc", version, about = "Binary gradient boosting classifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a model on a labelled CSV file.
    Train(TrainArgs),
    /// Score a CSV file with a saved model.
    Predict(PredictArgs),
    /// Recompute the per-iteration tables of a saved model on its data.
    Trace(TraceArgs),
}

#[derive(Debug, clap::Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    trees: u64,
    #[arg(long, default_value_t = 0.1)]
    learning_rate: f64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    max_depth: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    min_leaf: u64,
    /// Where to write the model file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where to write the training trace.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// One "feature:threshold" split per tree, joined by ';'.
    #[arg(long)]
    force_splits: Option<String>,
}

#[derive(Debug, clap::Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct TraceArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::InvalidArgument(_) => EXIT_USAGE,
        Error::Data(_) | Error::ModelFormat { .. } => EXIT_DATA,
        Error::Io { .. } => EXIT_IO,
        Error::UnsupportedVersion { .. } => EXIT_VERSION,
    }
}

/// Parses and runs a command line, returning the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    return EXIT_OK;
                }
                _ => EXIT_USAGE,
            };
            let _ = write!(stderr, "{}", e.render());
            return code;
        }
    };

    let result = match cli.command {
        Command::Train(args) => cmd_train(&args, stdout),
        Command::Predict(args) => cmd_predict(&args, stdout),
        Command::Trace(args) => cmd_trace(&args, stdout),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Parses `"f:t;f:t;..."`.
pub fn parse_force_splits(spec: &str) -> Result<Vec<ForcedSplit>> {
    spec.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|pair| {
            let bad = || {
                Error::Config(format!(
                    "bad forced split {pair:?}, expected feature:threshold"
                ))
            };
            let (f, t) = pair.split_once(':').ok_or_else(bad)?;
            let feature_index = f.trim().parse::<usize>().map_err(|_| bad())?;
            let threshold = t.trim().parse::<f64>().map_err(|_| bad())?;
            if !threshold.is_finite() {
                return Err(bad());
            }
            Ok(ForcedSplit {
                feature_index,
                threshold,
            })
        })
        .collect()
}

fn to_usize(v: u64) -> usize {
    usize::try_from(v).unwrap_or(usize::MAX)
}

fn cmd_train(args: &TrainArgs, stdout: &mut dyn Write) -> Result<()> {
    let config = TrainConfig {
        n_trees: to_usize(args.trees),
        learning_rate: args.learning_rate,
        max_depth: to_usize(args.max_depth),
        min_leaf: to_usize(args.min_leaf),
        forced_splits: args
            .force_splits
            .as_deref()
            .map(parse_force_splits)
            .transpose()?,
        ..TrainConfig::default()
    };
    config.validate()?;

    let dataset = data::load_csv(&args.data, true)?;
    let (model, trace) = booster::train(&dataset, &config)?;

    if let Some(path) = &args.out {
        model_file::write_model(path, &model)?;
    }
    if let Some(path) = &args.trace {
        with_output(Some(path), stdout, |w| write_trace(w, &trace, &dataset))?;
    }
    let loss = trace.final_loss().unwrap_or_default();
    writeln!(stdout, "{loss:.6}").map_err(|e| Error::io("<stdout>", e))
}

fn cmd_predict(args: &PredictArgs, stdout: &mut dyn Write) -> Result<()> {
    let model = model_file::read_model(&args.model)?;
    let table = data::load_table(&args.data, false)?;
    check_width(&model, table.feature_names.len())?;
    let features = data::Matrix::from_rows(&table.rows, table.feature_names.len())?;
    let predictions = model.predict_batch(&features, args.threshold)?;

    with_output(args.out.as_deref(), stdout, |w| {
        writeln!(w, "index,raw_score,probability,label")?;
        for (i, p) in predictions.iter().enumerate() {
            writeln!(
                w,
                "{},{:.6},{:.6},{}",
                i + 1,
                p.raw_score,
                p.probability,
                p.label
            )?;
        }
        Ok(())
    })
}

fn cmd_trace(args: &TraceArgs, stdout: &mut dyn Write) -> Result<()> {
    let model = model_file::read_model(&args.model)?;
    let dataset = data::load_csv(&args.data, true)?;
    check_width(&model, dataset.n_features())?;
    let trace = booster::replay(&model, &dataset)?;
    with_output(args.out.as_deref(), stdout, |w| {
        write_trace(w, &trace, &dataset)
    })
}

fn check_width(model: &Model, found: usize) -> Result<()> {
    if found != model.n_features() {
        return Err(DataError::DimensionMismatch {
            expected: model.n_features(),
            found,
        }
        .into());
    }
    Ok(())
}

/// Runs `f` against the file at `path`, or against `stdout` when no path
/// is given.
fn with_output(
    path: Option<&Path>,
    stdout: &mut dyn Write,
    f: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> Result<()> {
    match path {
        Some(path) => {
            let file = File::create(path).map_err(|e| Error::io(path, e))?;
            let mut w = BufWriter::new(file);
            f(&mut w)
                .and_then(|()| w.flush())
                .map_err(|e| Error::io(path, e))
        }
        None => f(stdout).map_err(|e| Error::io("<stdout>", e)),
    }
}

/// Writes one residual table and one leaf table per iteration. Instance
/// indices are 1-based.
///
/// ```text
/// # iteration 1 residuals
/// index,x,y,p_prev,r,leaf_id,score,prob
/// 1,1.300000,1,0.500000,0.500000,1,0.066667,0.516660
/// ...
///
/// # iteration 1 leaves
/// iteration,leaf_id,members,numerator,denominator,gamma
/// 1,1,1 2 3,0.500000,0.750000,0.666667
/// ...
///
/// # iteration 1 total_loss 3.962549
/// ```
pub fn write_trace(w: &mut dyn Write, trace: &TrainingTrace, dataset: &Dataset) -> io::Result<()> {
    let labels = dataset.labels().unwrap_or(&[]);
    let x = dataset.features();
    for (n, it) in trace.iterations.iter().enumerate() {
        if n > 0 {
            writeln!(w)?;
        }
        let m = it.iteration;
        writeln!(w, "# iteration {m} residuals")?;
        writeln!(
            w,
            "index,{},y,p_prev,r,leaf_id,score,prob",
            dataset.feature_names().join(",")
        )?;
        for (i, rec) in it.instances.iter().enumerate() {
            let xs: Vec<String> = x.row(i).iter().map(|v| format!("{v:.6}")).collect();
            writeln!(
                w,
                "{},{},{},{:.6},{:.6},{},{:.6},{:.6}",
                i + 1,
                xs.join(","),
                labels.get(i).copied().unwrap_or_default(),
                rec.prev_prob,
                rec.residual,
                rec.leaf_id,
                rec.score,
                rec.prob
            )?;
        }
        writeln!(w)?;
        writeln!(w, "# iteration {m} leaves")?;
        writeln!(w, "iteration,leaf_id,members,numerator,denominator,gamma")?;
        for leaf in &it.leaves {
            let members: Vec<String> = leaf.members.iter().map(|k| (k + 1).to_string()).collect();
            writeln!(
                w,
                "{m},{},{},{:.6},{:.6},{:.6}",
                leaf.leaf_id,
                members.join(" "),
                leaf.numerator,
                leaf.denominator,
                leaf.gamma
            )?;
        }
        writeln!(w)?;
        writeln!(w, "# iteration {m} total_loss {:.6}", it.total_loss)?;
    }
    Ok(())
}
