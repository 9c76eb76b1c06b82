//! The `cnforecast` command-line interface.
//!
//! Every command reads its inputs, computes all results, and only then
//! writes artifacts atomically. Summaries go to stdout as `key=value` lines,
//! diagnostics to stderr.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::data_io::{self, format_matrix, load_matrix, load_model, ModelFile};
use crate::encoder::{self, EncodeConfig, EncodeMode};
use crate::error::Error;
use crate::forecast::{self, EvalMode, PipelineSettings, SearchSpec};
use crate::som::{self, InitMode, TrainConfig};
use crate::types::{ContextualNumber, Dataset, NormMode};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Triples sampled by `ordering-score` on maps too large to enumerate.
const ORDERING_SAMPLES: usize = 200_000;

#[derive(Debug, Parser)]
#[command(
    name = "cnforecast",
    version,
    about = "Contextual-number forecasting with one-dimensional self-organizing maps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum InitArg {
    Linear,
    RandomSample,
}

impl From<InitArg> for InitMode {
    fn from(a: InitArg) -> Self {
        match a {
            InitArg::Linear => InitMode::Linear,
            InitArg::RandomSample => InitMode::RandomSample,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Argmax,
    Weighted,
}

impl From<ModeArg> for EncodeMode {
    fn from(a: ModeArg) -> Self {
        match a {
            ModeArg::Argmax => EncodeMode::Argmax,
            ModeArg::Weighted => EncodeMode::Weighted,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum NormArg {
    None,
    Zscore,
}

impl From<NormArg> for NormMode {
    fn from(a: NormArg) -> Self {
        match a {
            NormArg::None => NormMode::None,
            NormArg::Zscore => NormMode::ZScore,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EvalModeArg {
    TeacherForcing,
    FreeRunning,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BaselineArg {
    Persistence,
    None,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EmitArg {
    Weights,
    PairwiseDistances,
    OrderingScore,
    PmaxSeries,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SynthKind {
    Uniform1d,
    Wave,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a one-dimensional map and save it.
    TrainSom {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        nodes: usize,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        radius_start: Option<f64>,
        #[arg(long)]
        radius_end: Option<f64>,
        #[arg(long, value_enum, default_value = "linear")]
        init: InitArg,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write `cn,p_max` for every data row.
    Encode {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Defaults to the pipeline's mode, or argmax for a bare map.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long)]
        g: Option<usize>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reconstruct one vector per contextual number (one per line).
    Decode {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        cn: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Forecast `horizon` rows from exactly `d` recent rows.
    Forecast {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        recent: PathBuf,
        #[arg(long, default_value_t = 1)]
        horizon: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a pipeline on test rows against a baseline.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// Rows preceding the test set; without it the first `d` test rows
        /// serve as warmup and are not scored.
        #[arg(long)]
        warmup: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "persistence")]
        baseline: BaselineArg,
        #[arg(long = "eval-mode", value_enum, default_value = "teacher-forcing")]
        eval_mode: EvalModeArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Random search over map size and lag.
    Search {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 25)]
        draws: usize,
        #[arg(long, default_value_t = 30)]
        k_min: usize,
        #[arg(long, default_value_t = 200)]
        k_max: usize,
        #[arg(long, default_value_t = 2)]
        d_min: usize,
        #[arg(long, default_value_t = 20)]
        d_max: usize,
        #[arg(long, default_value_t = 0.2)]
        validation_fraction: f64,
        #[arg(long, value_enum, default_value = "argmax")]
        mode: ModeArg,
        #[arg(long, default_value_t = EncodeConfig::DEFAULT_G)]
        g: usize,
        #[arg(long, value_enum, default_value = "none")]
        norm: NormArg,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Per-trial CSV.
        #[arg(long)]
        out: PathBuf,
        /// Where to save the winning pipeline.
        #[arg(long)]
        model_out: PathBuf,
    },
    /// Emit model data as CSV.
    Inspect {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum)]
        emit: EmitArg,
        /// Rows to score; required by `pmax-series`.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Required except for `ordering-score`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic dataset.
    Synth {
        #[arg(long, value_enum)]
        kind: SynthKind,
        #[arg(long, default_value_t = 500)]
        count: usize,
        #[arg(long, default_value_t = 0.0)]
        low: f64,
        #[arg(long, default_value_t = 1000.0)]
        high: f64,
        #[arg(long, default_value_t = 5)]
        rows: usize,
        #[arg(long, default_value_t = 6)]
        cols: usize,
        #[arg(long, default_value_t = 2000)]
        steps: usize,
        #[arg(long, default_value_t = 0.01)]
        speed: f64,
        #[arg(long, default_value_t = 0.02)]
        noise_sd: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// A failed command: its exit code and message.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn data(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_DATA,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

/// The exit code a library error maps to.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Contract(_) => EXIT_USAGE,
        Error::AllTrialsFailed(_) => EXIT_NUMERIC,
        Error::DimensionMismatch { .. }
        | Error::InsufficientData { .. }
        | Error::DegenerateReference
        | Error::OutOfRange { .. }
        | Error::Parse { .. }
        | Error::Integrity { .. }
        | Error::UnsupportedVersion(_)
        | Error::Io { .. } => EXIT_DATA,
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// its exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(lines) => {
            for line in lines {
                println!("{line}");
            }
            EXIT_OK
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

type Outcome = Result<Vec<String>, Failure>;

fn dispatch(cmd: Command) -> Outcome {
    match cmd {
        Command::TrainSom {
            data,
            nodes,
            epochs,
            radius_start,
            radius_end,
            init,
            seed,
            out,
        } => train_som(
            &data,
            nodes,
            epochs,
            radius_start,
            radius_end,
            init.into(),
            seed,
            &out,
        ),
        Command::Encode {
            model,
            data,
            mode,
            g,
            beta,
            out,
        } => encode(&model, &data, mode.map(Into::into), g, beta, &out),
        Command::Decode { model, cn, out } => decode(&model, &cn, &out),
        Command::Forecast {
            model,
            recent,
            horizon,
            out,
        } => forecast_cmd(&model, &recent, horizon, &out),
        Command::Evaluate {
            model,
            test,
            warmup,
            baseline,
            eval_mode,
            out,
        } => evaluate(&model, &test, warmup.as_deref(), baseline, eval_mode, &out),
        Command::Search {
            data,
            draws,
            k_min,
            k_max,
            d_min,
            d_max,
            validation_fraction,
            mode,
            g,
            norm,
            beta,
            seed,
            out,
            model_out,
        } => {
            let spec = SearchSpec {
                n_draws: draws,
                nodes_range: (k_min, k_max),
                lag_range: (d_min, d_max),
                seed,
                validation_fraction,
            };
            let settings = PipelineSettings {
                norm: norm.into(),
                mode: mode.into(),
                g,
                beta,
                init: InitMode::Linear,
                seed,
            };
            search(&data, &spec, &settings, &out, &model_out)
        }
        Command::Inspect {
            model,
            emit,
            data,
            seed,
            out,
        } => inspect(&model, emit, data.as_deref(), seed, out.as_deref()),
        Command::Synth {
            kind,
            count,
            low,
            high,
            rows,
            cols,
            steps,
            speed,
            noise_sd,
            seed,
            out,
        } => {
            let data = match kind {
                SynthKind::Uniform1d => data_io::synth_uniform_1d(count, low, high, seed)?,
                SynthKind::Wave => {
                    data_io::synth_traveling_wave(rows, cols, steps, speed, noise_sd, seed)?
                }
            };
            data_io::save_matrix(&data, &out)?;
            Ok(vec![
                format!("rows={}", data.len()),
                format!("cols={}", data.dim()),
            ])
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn train_som(
    data: &Path,
    nodes: usize,
    epochs: Option<usize>,
    radius_start: Option<f64>,
    radius_end: Option<f64>,
    init: InitMode,
    seed: u64,
    out: &Path,
) -> Outcome {
    let data = load_matrix(data)?;
    let mut cfg = TrainConfig::with_defaults(nodes, data.len(), seed);
    cfg.init = init;
    if let Some(e) = epochs {
        cfg.epochs = e;
    }
    if let Some(r) = radius_start {
        cfg.radius_start = r;
    }
    if let Some(r) = radius_end {
        cfg.radius_end = r;
    }
    let model = som::train(&data, &cfg)?;
    let mut lines = vec![
        format!("nodes={}", model.nodes()),
        format!("dim={}", model.dim()),
        format!("epochs={}", model.meta().epochs),
        format!(
            "final_quantization_error={:?}",
            model.meta().final_quantization_error
        ),
    ];
    if model.nodes() >= 3 {
        lines.push(format!(
            "ordering_score={:?}",
            som::ordering_score(&model, ORDERING_SAMPLES, seed)?
        ));
    }
    data_io::save_model(&ModelFile::Som(model), out)?;
    Ok(lines)
}

fn encode(
    model: &Path,
    data: &Path,
    mode: Option<EncodeMode>,
    g: Option<usize>,
    beta: Option<f64>,
    out: &Path,
) -> Outcome {
    let file = load_model(model)?;
    let data = load_matrix(data)?;
    let (som, base, normed) = match &file {
        ModelFile::Som(m) => (m, EncodeConfig::argmax(encoder::model_beta(m)), data),
        ModelFile::Pipeline(p) => (&p.som, p.encode, data_io::normalize_apply(&p.norm, &data)?),
    };
    let mode = mode.unwrap_or(base.mode);
    let cfg = EncodeConfig {
        mode,
        g: match (mode, g) {
            (EncodeMode::Argmax, _) => 1,
            (EncodeMode::Weighted, Some(g)) => g,
            (EncodeMode::Weighted, None) if base.mode == EncodeMode::Weighted => base.g,
            (EncodeMode::Weighted, None) => EncodeConfig::DEFAULT_G.min(som.nodes()),
        },
        beta: beta.unwrap_or(base.beta),
    };
    cfg.validate(som.nodes())?;
    let encodings: Vec<encoder::Encoding> = normed
        .rows()
        .map(|x| encoder::encode(som, x, &cfg))
        .collect::<crate::Result<_>>()?;
    let non_contiguous = encodings.iter().filter(|e| !e.contiguous).count();
    if non_contiguous > 0 {
        eprintln!("warning: {non_contiguous} rows averaged non-adjacent nodes");
    }
    let rows: Vec<[f64; 2]> = encodings.iter().map(|e| [e.cn.value(), e.p_max]).collect();
    let text = format_matrix(rows.iter().map(|r| r.as_slice()), Some("cn,p_max"));
    data_io::write_atomic(out, text.as_bytes())?;
    Ok(vec![
        format!("rows={}", rows.len()),
        format!("mode={}", cfg.mode.as_str()),
        format!("g={}", cfg.g),
        format!("beta={:?}", cfg.beta),
    ])
}

/// Reads one contextual number per line; blank lines and `#` lines are skipped.
fn read_cn_list(path: &Path, nodes: usize) -> Result<Vec<f64>, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::from(Error::io(path, e)))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let v: f64 = t.parse().map_err(|_| {
            Failure::data(format!(
                "{}:{}: `{t}` is not a number",
                path.display(),
                i + 1
            ))
        })?;
        ContextualNumber::new(v, nodes)
            .map_err(|e| Failure::data(format!("{}:{}: {e}", path.display(), i + 1)))?;
        out.push(v);
    }
    Ok(out)
}

fn decode(model: &Path, cn: &Path, out: &Path) -> Outcome {
    let file = load_model(model)?;
    let cns = read_cn_list(cn, file.som().nodes())?;
    let rows: Vec<Vec<f64>> = cns
        .iter()
        .map(|&c| match &file {
            ModelFile::Som(m) => encoder::decode(m, c),
            ModelFile::Pipeline(p) => p.decode(c),
        })
        .collect::<crate::Result<_>>()?;
    data_io::write_atomic(
        out,
        format_matrix(rows.iter().map(Vec::as_slice), None).as_bytes(),
    )?;
    Ok(vec![format!("rows={}", rows.len())])
}

fn load_pipeline(path: &Path) -> Result<forecast::CnPipeline, Failure> {
    match load_model(path)? {
        ModelFile::Pipeline(p) => Ok(p),
        ModelFile::Som(_) => Err(Failure::usage(format!(
            "{} holds a bare map; this command needs a pipeline",
            path.display()
        ))),
    }
}

fn forecast_cmd(model: &Path, recent: &Path, horizon: usize, out: &Path) -> Outcome {
    let p = load_pipeline(model)?;
    let recent = load_matrix(recent)?;
    if recent.len() != p.lag() {
        return Err(Failure::usage(format!(
            "expected exactly {} recent rows, got {}",
            p.lag(),
            recent.len()
        )));
    }
    let f = forecast::pipeline_forecast(&p, &recent, horizon)?;
    for (h, s) in f.steps.iter().enumerate().filter(|(_, s)| s.clamped) {
        eprintln!(
            "warning: step {} predicted {:?}, clamped to {:?}",
            h + 1,
            s.raw,
            s.cn
        );
    }
    data_io::write_atomic(out, format_matrix(f.rows.rows(), None).as_bytes())?;
    Ok(vec![
        format!("horizon={horizon}"),
        format!("clamped_steps={}", f.clamped_steps()),
    ])
}

fn evaluate(
    model: &Path,
    test: &Path,
    warmup: Option<&Path>,
    baseline: BaselineArg,
    mode: EvalModeArg,
    out: &Path,
) -> Outcome {
    let p = load_pipeline(model)?;
    let test = load_matrix(test)?;
    let (warm, scored, offset) = match warmup {
        Some(w) => (load_matrix(w)?, test, 0),
        None => {
            let d = p.lag();
            if test.len() <= d {
                return Err(Error::InsufficientData {
                    needed: d,
                    available: test.len(),
                }
                .into());
            }
            (test.slice(0, d)?, test.slice(d, test.len())?, d)
        }
    };
    let mode = match mode {
        EvalModeArg::TeacherForcing => EvalMode::TeacherForcing,
        EvalModeArg::FreeRunning => EvalMode::FreeRunning,
    };
    let report = forecast::evaluate(&p, &scored, &warm, mode)?;
    let base = match baseline {
        BaselineArg::Persistence => {
            let last = warm.row(warm.len() - 1);
            Some(forecast::persistence_baseline(&scored, last)?)
        }
        BaselineArg::None => None,
    };
    let rows: Vec<[f64; 4]> = report
        .steps
        .iter()
        .zip(&report.per_step_errors)
        .enumerate()
        .map(|(i, (&t, &e))| {
            let b = base.as_ref().map_or(f64::NAN, |b| b.per_step_errors[i]);
            [(t + offset) as f64, e, report.p_max_series[t], b]
        })
        .collect();
    if !report.excluded.is_empty() {
        eprintln!(
            "warning: {} test rows have zero-norm references and were not scored",
            report.excluded.len()
        );
    }
    let text = format_matrix(
        rows.iter().map(|r| r.as_slice()),
        Some("t,e_t,p_max,baseline_e_t"),
    );
    data_io::write_atomic(out, text.as_bytes())?;
    let mut lines = vec![
        format!("rows={}", rows.len()),
        format!("excluded={}", report.excluded.len()),
        format!("mean_error={:?}", report.mean_error),
    ];
    if let Some(b) = &base {
        lines.push(format!("baseline_mean_error={:?}", b.mean_error));
    }
    lines.push(format!("clamped_steps={}", report.clamped_steps));
    Ok(lines)
}

fn search(
    data: &Path,
    spec: &SearchSpec,
    settings: &PipelineSettings,
    out: &Path,
    model_out: &Path,
) -> Outcome {
    let data = load_matrix(data)?;
    let outcome = forecast::random_search(&data, spec, settings)?;
    for t in &outcome.trials {
        if let Err(msg) = &t.outcome {
            eprintln!(
                "trial {} (K={}, d={}) failed: {msg}",
                t.draw, t.nodes, t.lag
            );
        }
    }
    let best = forecast::refit_best(&data, &outcome, settings)?;
    let rows: Vec<[f64; 5]> = outcome
        .trials
        .iter()
        .map(|t| {
            let (err, ok) = t.validation_error().map_or((-1.0, 0.0), |e| (e, 1.0));
            [t.draw as f64, t.nodes as f64, t.lag as f64, err, ok]
        })
        .collect();
    let text = format_matrix(
        rows.iter().map(|r| r.as_slice()),
        Some("draw,nodes,lag,validation_error,ok"),
    );
    let model_text = ModelFile::Pipeline(best).to_text();
    data_io::write_atomic(out, text.as_bytes())?;
    data_io::write_atomic(model_out, model_text.as_bytes())?;
    let best_err = outcome.trials[outcome.best_draw]
        .validation_error()
        .unwrap_or(f64::NAN);
    Ok(vec![
        format!("draws={}", outcome.trials.len()),
        format!(
            "failed={}",
            outcome.trials.iter().filter(|t| t.outcome.is_err()).count()
        ),
        format!("best_draw={}", outcome.best_draw),
        format!("best_nodes={}", outcome.best_nodes),
        format!("best_lag={}", outcome.best_lag),
        format!("best_validation_error={best_err:?}"),
    ])
}

fn inspect(
    model: &Path,
    emit: EmitArg,
    data: Option<&Path>,
    seed: u64,
    out: Option<&Path>,
) -> Outcome {
    let file = load_model(model)?;
    let som = file.som();
    let require_out =
        || out.ok_or_else(|| Failure::usage("--out is required for this emit target"));
    match emit {
        EmitArg::Weights => {
            let out = require_out()?;
            let text = format_matrix(som.weights().chunks_exact(som.dim()), None);
            data_io::write_atomic(out, text.as_bytes())?;
            Ok(vec![
                format!("rows={}", som.nodes()),
                format!("cols={}", som.dim()),
            ])
        }
        EmitArg::PairwiseDistances => {
            let out = require_out()?;
            let d = som::pairwise_weight_distances(som);
            data_io::write_atomic(
                out,
                format_matrix(d.iter().map(Vec::as_slice), None).as_bytes(),
            )?;
            Ok(vec![
                format!("rows={}", som.nodes()),
                format!("neighbor_banding={:?}", som::neighbor_banding(som)),
            ])
        }
        EmitArg::OrderingScore => {
            let score = som::ordering_score(som, ORDERING_SAMPLES, seed)?;
            let banding = som::neighbor_banding(som);
            if let Some(out) = out {
                data_io::write_atomic(
                    out,
                    format_matrix(
                        [[score, banding].as_slice()],
                        Some("ordering_score,neighbor_banding"),
                    )
                    .as_bytes(),
                )?;
            }
            Ok(vec![
                format!("ordering_score={score:?}"),
                format!("neighbor_banding={banding:?}"),
            ])
        }
        EmitArg::PmaxSeries => {
            let out = require_out()?;
            let path = data.ok_or_else(|| Failure::usage("pmax-series needs --data"))?;
            let data = load_matrix(path)?;
            let (normed, beta): (Dataset, f64) = match &file {
                ModelFile::Som(m) => (data, encoder::model_beta(m)),
                ModelFile::Pipeline(p) => {
                    (data_io::normalize_apply(&p.norm, &data)?, p.encode.beta)
                }
            };
            let series: Vec<f64> = normed
                .rows()
                .map(|x| encoder::p_max(som, x, beta))
                .collect::<crate::Result<_>>()?;
            let text = format_matrix(series.chunks(1), Some("p_max"));
            data_io::write_atomic(out, text.as_bytes())?;
            let mean = series.iter().sum::<f64>() / series.len() as f64;
            let mut lines = vec![
                format!("rows={}", series.len()),
                format!("mean_p_max={mean:?}"),
            ];
            if let ModelFile::Pipeline(p) = &file {
                lines.push(format!("baseline_p_max={:?}", p.baseline_p_max));
            }
            Ok(lines)
        }
    }
}
