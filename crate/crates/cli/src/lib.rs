//! `gridpe` command-line front end.
//!
//! [`run`] parses arguments, dispatches to a subcommand and maps the outcome
//! to an exit status: 0 on success, 1 on usage or validation errors, 2 when
//! `verify` finds a failing check.

pub mod io;
pub mod verify;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use gridpe::attention::{EncoderSpec, Method, ShiftExperiment};
use gridpe::embedding::{build_bank, feature_map, GridPEConfig};
use gridpe::kernel::{kernel_curve, raster, VcoParams};
use gridpe::scales::{bases_per_scale, default_base, make_schedule, max_base, optimal_ratio};
use gridpe::simplex::{oriented_directions, DirectionMode, SimplexFrame};
use serde::Serialize;
use thiserror::Error;

use crate::io::{csv_bytes, emit, fmt_f64, json_bytes, parse_list, read_matrix, read_text};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] gridpe::Error),
    #[error("{0}")]
    Usage(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("verification failed")]
    VerifyFailed,
}

#[derive(Debug, Parser)]
#[command(name = "gridpe", version, about = "Grid-cell positional encodings for n-dimensional attention")]
struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Emit JSON instead of plain text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Unit wave-vector directions of the simplex frame, as CSV.
    Simplex(SimplexArgs),
    /// Geometric scale schedule and its base bound.
    Scales(ScalesArgs),
    /// Feature maps or encoded contents for a list of positions, as CSV.
    Embed(EmbedArgs),
    /// Grid activation raster as 16-bit PGM.
    Pattern(PatternArgs),
    /// Shift kernel along one direction, as CSV.
    Kernel(KernelArgs),
    /// Translation experiment on the attention harness.
    BenchAttn(BenchArgs),
    /// Runs the invariant suite and prints a JSON report.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct SimplexArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long, default_value = "fixed")]
    mode: DirectionMode,
}

#[derive(Debug, Args)]
struct ScalesArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    head_dim: usize,
    /// Defaults to min(10000, max_base).
    #[arg(long)]
    base: Option<f64>,
}

#[derive(Debug, Args)]
struct EmbedArgs {
    /// Bank config JSON.
    #[arg(long)]
    config: PathBuf,
    /// CSV with one position per row.
    #[arg(long)]
    positions: PathBuf,
    #[arg(long, default_value = "gridpe")]
    method: Method,
    /// CSV with one content vector per row; switches output to encoded contents.
    #[arg(long)]
    contents: Option<PathBuf>,
}

/// Comma-separated list; the alias keeps clap from splitting it into repeated flags.
type Numbers = Vec<f64>;

#[derive(Debug, Args)]
struct PatternArgs {
    #[arg(long)]
    params: PathBuf,
    /// x0,x1,y0,y1
    #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
    extent: Numbers,
    #[arg(long, default_value_t = 256)]
    res: usize,
}

#[derive(Debug, Args)]
struct KernelArgs {
    #[arg(long)]
    params: PathBuf,
    #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
    dir: Numbers,
    #[arg(long)]
    dmax: f64,
    #[arg(long, default_value_t = 256)]
    samples: usize,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long)]
    method: Method,
    #[arg(long)]
    dim: usize,
    #[arg(long, default_value_t = 64)]
    head_dim: usize,
    #[arg(long, default_value_t = 16)]
    tokens: usize,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 100.0)]
    shift_range: f64,
    #[arg(long, default_value_t = 8)]
    grid_size: usize,
    #[arg(long)]
    base: Option<f64>,
    #[arg(long)]
    temperature: Option<f64>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long, default_value_t = 64)]
    head_dim: usize,
}

/// Runs the CLI on `args` (including the program name).
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind::{DisplayHelp, DisplayVersion};
            let rendered = e.render().to_string();
            return if matches!(e.kind(), DisplayHelp | DisplayVersion) {
                let _ = out.write_all(rendered.as_bytes());
                0
            } else {
                let _ = err.write_all(rendered.as_bytes());
                1
            };
        }
    };
    match dispatch(&cli, out) {
        Ok(()) => 0,
        Err(CliError::VerifyFailed) => 2,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Simplex(a) => simplex(a, cli.seed, out, stdout),
        Command::Scales(a) => scales(a, cli.json, out, stdout),
        Command::Embed(a) => embed(a, out, stdout),
        Command::Pattern(a) => pattern(a, out, stdout),
        Command::Kernel(a) => kernel(a, out, stdout),
        Command::BenchAttn(a) => bench(a, cli.seed, cli.json, out, stdout),
        Command::Verify(a) => {
            let report = verify::run(a.dim, a.head_dim, cli.seed)?;
            emit(out, &json_bytes(&report)?, stdout)?;
            verdict(&report)
        }
    }
}

fn verdict(report: &verify::VerifyReport) -> Result<(), CliError> {
    if report.overall {
        Ok(())
    } else {
        Err(CliError::VerifyFailed)
    }
}

fn numbered(prefix: &str, count: usize) -> Vec<String> {
    (0..count).map(|i| format!("{prefix}{i}")).collect()
}

fn simplex(a: &SimplexArgs, seed: u64, out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    let frame = SimplexFrame::new(a.dim)?;
    let dirs = oriented_directions(&frame, a.mode, seed)?;
    let mut header = vec!["scale_index".to_string(), "dir_index".to_string()];
    header.extend(numbered("c", a.dim));
    let rows = dirs.row_iter().enumerate().map(|(i, r)| {
        let mut row = vec!["0".to_string(), i.to_string()];
        row.extend(r.iter().map(|v| fmt_f64(*v)));
        row
    });
    emit(out, &csv_bytes(&header, rows)?, stdout)
}

#[derive(Serialize)]
struct ScalesReport {
    base: f64,
    max_base: f64,
    optimal_ratio: f64,
    ratio: f64,
    within_bound: bool,
    bases_per_scale: usize,
    num_scales: usize,
    magnitudes: Vec<f64>,
}

fn scales(a: &ScalesArgs, json: bool, out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    let m = bases_per_scale(a.dim)?;
    let bound = max_base(a.head_dim, m, a.dim)?;
    let base = match a.base {
        Some(b) => b,
        None => default_base(a.head_dim, m, a.dim)?,
    };
    let schedule = make_schedule(base, a.head_dim, m)?;
    let report = ScalesReport {
        base,
        max_base: bound,
        optimal_ratio: optimal_ratio(a.dim)?,
        ratio: schedule.ratio(),
        within_bound: base <= bound,
        bases_per_scale: m,
        num_scales: schedule.num_scales,
        magnitudes: schedule.magnitudes,
    };
    let bytes = if json {
        json_bytes(&report)?
    } else {
        let mut text = format!(
            "base {}\nmax_base {}\noptimal_ratio {}\nratio {}\nwithin_bound {}\nbases_per_scale {}\nnum_scales {}\n",
            fmt_f64(report.base),
            fmt_f64(report.max_base),
            fmt_f64(report.optimal_ratio),
            fmt_f64(report.ratio),
            report.within_bound,
            report.bases_per_scale,
            report.num_scales
        );
        for (s, v) in report.magnitudes.iter().enumerate() {
            text.push_str(&format!("magnitude {s} {}\n", fmt_f64(*v)));
        }
        text.into_bytes()
    };
    emit(out, &bytes, stdout)
}

fn embed(a: &EmbedArgs, out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    let config = GridPEConfig::from_json(&read_text(&a.config)?)?;
    let positions = read_matrix(&a.positions, config.n)?;
    let spec = EncoderSpec {
        method: a.method,
        n: config.n,
        head_dim: config.head_dim,
        base: Some(config.resolved_base()?),
        direction_mode: config.direction_mode,
        seed: config.seed,
        table_grid: EncoderSpec::new(a.method, config.n, config.head_dim).table_grid,
    };

    let rows: Vec<Vec<f64>> = match &a.contents {
        Some(path) => {
            let contents = read_matrix(path, config.head_dim)?;
            if contents.len() != positions.len() {
                return Err(CliError::Usage(format!(
                    "{} contents for {} positions",
                    contents.len(),
                    positions.len()
                )));
            }
            let encoder = spec.build()?;
            contents
                .iter()
                .zip(&positions)
                .map(|(v, x)| encoder.encode(v, x))
                .collect::<Result<_, _>>()?
        }
        None if a.method == Method::Gridpe => {
            let bank = build_bank(&config)?;
            positions
                .iter()
                .map(|x| feature_map(x, &bank).map(|z| z.values))
                .collect::<Result<_, _>>()?
        }
        None => {
            let zeros = vec![0.0; config.head_dim];
            match spec.build()? {
                gridpe::attention::Encoder::Rotary(r) => positions
                    .iter()
                    .map(|x| r.pair_features(x))
                    .collect::<Result<_, _>>()?,
                encoder => positions
                    .iter()
                    .map(|x| encoder.encode(&zeros, x))
                    .collect::<Result<_, _>>()?,
            }
        }
    };
    let width = rows.first().map_or(0, Vec::len);
    let header = numbered("z", width);
    let body = rows.iter().map(|r| r.iter().map(|v| fmt_f64(*v)).collect());
    emit(out, &csv_bytes(&header, body)?, stdout)
}

fn load_params(path: &Path) -> Result<VcoParams, CliError> {
    Ok(VcoParams::from_json(&read_text(path)?)?)
}

fn pattern(a: &PatternArgs, out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    let extent: [f64; 4] = a
        .extent
        .as_slice()
        .try_into()
        .map_err(|_| CliError::Usage(format!("--extent needs 4 values, got {}", a.extent.len())))?;
    let grid = raster(extent, a.res, &load_params(&a.params)?)?;
    emit(out, &grid.to_pgm(), stdout)
}

fn kernel(a: &KernelArgs, out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    let curve = kernel_curve(&load_params(&a.params)?, &a.dir, a.dmax, a.samples)?;
    let header = ["distance".to_string(), "h".to_string()];
    let rows = curve
        .distances
        .iter()
        .zip(&curve.values)
        .map(|(d, h)| vec![fmt_f64(*d), fmt_f64(*h)]);
    emit(out, &csv_bytes(&header, rows)?, stdout)
}

fn bench(a: &BenchArgs, seed: u64, json: bool, out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mut encoder = EncoderSpec::new(a.method, a.dim, a.head_dim);
    encoder.base = a.base;
    encoder.seed = seed;
    let report = ShiftExperiment {
        encoder,
        tokens: a.tokens,
        grid_size: a.grid_size,
        trials: a.trials,
        shift_range: a.shift_range,
        seed,
        temperature: a.temperature,
    }
    .run()?;
    let bytes = if json {
        json_bytes(&report)?
    } else {
        format!(
            "method {}\npreservation_rate {}\nmean_distance {}\nmean_entropy {}\ntrials {}\n",
            report.method,
            fmt_f64(report.preservation_rate),
            fmt_f64(report.mean_distance),
            fmt_f64(report.mean_entropy),
            report.trials
        )
        .into_bytes()
    };
    emit(out, &bytes, stdout)
}
