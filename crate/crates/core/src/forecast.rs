//! Forecasting high-dimensional series through their contextual numbers.
//!
//! Training normalizes the data, fits a one-dimensional map, encodes every
//! row to a contextual number and fits a linear autoregression of order `d`
//! on that scalar series. Forecasting runs the recursion in contextual-number
//! space and decodes each prediction back to an observation vector.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data_io::normalize::{invert_row, normalize_apply, normalize_fit};
use crate::encoder::{self, EncodeConfig, EncodeMode};
use crate::error::{check_dims, Error, Result};
use crate::metrics::relative_error;
use crate::som::{self, InitMode, SomModel, TrainConfig};
use crate::types::{ContextualNumber, Dataset, ForecastModel, NormMode, NormalizationParams};

/// Ridge penalty used when the lagged regressors are rank deficient.
pub const RIDGE_LAMBDA: f64 = 1e-8;

/// Relative pivot size below which the regressors count as rank deficient.
const RANK_TOL: f64 = 1e-10;

/// Lag-embedded regression pairs. Row `t` holds `[cn_{t+d-1}, …, cn_t]`
/// (most recent first) and predicts `cn_{t+d}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LagMatrix {
    lag: usize,
    regressors: Vec<f64>,
    targets: Vec<f64>,
}

impl LagMatrix {
    pub fn lag(&self) -> usize {
        self.lag
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn regressors(&self, row: usize) -> &[f64] {
        &self.regressors[row * self.lag..(row + 1) * self.lag]
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }
}

pub fn lag_embed(series: &[f64], lag: usize) -> Result<LagMatrix> {
    if lag == 0 {
        return Err(Error::config("lag must be at least 1"));
    }
    if series.len() <= lag {
        return Err(Error::InsufficientData {
            needed: lag,
            available: series.len(),
        });
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::contract("series must be finite"));
    }
    let rows = series.len() - lag;
    let mut regressors = Vec::with_capacity(rows * lag);
    let mut targets = Vec::with_capacity(rows);
    for t in 0..rows {
        regressors.extend(series[t..t + lag].iter().rev());
        targets.push(series[t + lag]);
    }
    Ok(LagMatrix {
        lag,
        regressors,
        targets,
    })
}

/// Least-squares fit of `cn_t = c + Σ a_i cn_{t-i}` for `i = 1..=d`.
///
/// Solved by Householder QR on mean-centered regressors, so the intercept is
/// never penalized. When the centered regressors are rank deficient the
/// coefficients come from ridge regression with `λ = 1e-8` and the model is
/// flagged via [`ForecastModel::used_ridge`].
pub fn fit_ar(series: &[f64], lag: usize) -> Result<ForecastModel> {
    if series.len() <= lag + 1 {
        return Err(Error::InsufficientData {
            needed: lag + 1,
            available: series.len(),
        });
    }
    let lm = lag_embed(series, lag)?;
    let m = lm.len();
    let d = lag;

    let mut col_mean = vec![0.0; d];
    for t in 0..m {
        for (acc, v) in col_mean.iter_mut().zip(lm.regressors(t)) {
            *acc += v;
        }
    }
    col_mean.iter_mut().for_each(|v| *v /= m as f64);
    let y_mean = lm.targets.iter().sum::<f64>() / m as f64;

    // Column-major centered design.
    let mut a = vec![0.0; m * d];
    for t in 0..m {
        for (k, v) in lm.regressors(t).iter().enumerate() {
            a[k * m + t] = v - col_mean[k];
        }
    }
    let b: Vec<f64> = lm.targets.iter().map(|y| y - y_mean).collect();

    let (coefficients, ridge) = match householder_solve(&a, &b, m, d) {
        Some(x) => (x, false),
        None => (ridge_solve(&a, &b, m, d, RIDGE_LAMBDA)?, true),
    };
    let intercept = y_mean
        - coefficients
            .iter()
            .zip(&col_mean)
            .map(|(c, mu)| c * mu)
            .sum::<f64>();
    ForecastModel::new(intercept, coefficients, ridge)
}

/// Least squares via Householder QR; `None` when a pivot is negligible.
fn householder_solve(a: &[f64], b: &[f64], m: usize, d: usize) -> Option<Vec<f64>> {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    let scale = (0..d)
        .map(|k| {
            a[k * m..(k + 1) * m]
                .iter()
                .map(|v| v * v)
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max);
    if scale == 0.0 || m < d {
        return None;
    }
    let mut diag = vec![0.0; d];
    for k in 0..d {
        let col = &a[k * m..(k + 1) * m];
        let alpha_norm = col[k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if alpha_norm <= RANK_TOL * scale {
            return None;
        }
        let alpha = if col[k] > 0.0 {
            -alpha_norm
        } else {
            alpha_norm
        };
        let mut v: Vec<f64> = col[k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        diag[k] = alpha;
        if vnorm2 == 0.0 {
            continue;
        }
        for j in k..d {
            let cj = &mut a[j * m + k..(j + 1) * m];
            let dot: f64 = v.iter().zip(cj.iter()).map(|(x, y)| x * y).sum();
            let f = 2.0 * dot / vnorm2;
            for (c, vi) in cj.iter_mut().zip(&v) {
                *c -= f * vi;
            }
        }
        let dot: f64 = v.iter().zip(&b[k..]).map(|(x, y)| x * y).sum();
        let f = 2.0 * dot / vnorm2;
        for (c, vi) in b[k..].iter_mut().zip(&v) {
            *c -= f * vi;
        }
    }
    let mut x = vec![0.0; d];
    for k in (0..d).rev() {
        let mut s = b[k];
        for j in (k + 1)..d {
            s -= a[j * m + k] * x[j];
        }
        x[k] = s / diag[k];
    }
    Some(x)
}

/// Solves `(AᵀA + λI) x = Aᵀb` by Cholesky factorization.
fn ridge_solve(a: &[f64], b: &[f64], m: usize, d: usize, lambda: f64) -> Result<Vec<f64>> {
    let col = |k: usize| &a[k * m..(k + 1) * m];
    let mut g = vec![0.0; d * d];
    let mut rhs = vec![0.0; d];
    for i in 0..d {
        rhs[i] = col(i).iter().zip(b).map(|(x, y)| x * y).sum();
        for j in 0..=i {
            let v: f64 = col(i).iter().zip(col(j)).map(|(x, y)| x * y).sum();
            g[i * d + j] = v;
            g[j * d + i] = v;
        }
        g[i * d + i] += lambda;
    }
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut s = g[i * d + j];
            for k in 0..j {
                s -= l[i * d + k] * l[j * d + k];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::contract("ridge system is not positive definite"));
                }
                l[i * d + i] = s.sqrt();
            } else {
                l[i * d + j] = s / l[j * d + j];
            }
        }
    }
    let mut z = vec![0.0; d];
    for i in 0..d {
        let s: f64 = (0..i).map(|k| l[i * d + k] * z[k]).sum();
        z[i] = (rhs[i] - s) / l[i * d + i];
    }
    let mut x = vec![0.0; d];
    for i in (0..d).rev() {
        let s: f64 = ((i + 1)..d).map(|k| l[k * d + i] * x[k]).sum();
        x[i] = (z[i] - s) / l[i * d + i];
    }
    Ok(x)
}

/// `intercept + Σ coefficients[i] · recent[i]`, with `recent` most recent first.
/// The value is not clamped; see [`ContextualNumber::clamped`].
pub fn predict_next(model: &ForecastModel, recent: &[f64]) -> Result<f64> {
    check_dims(model.lag(), recent.len())?;
    Ok(model.intercept()
        + model
            .coefficients()
            .iter()
            .zip(recent)
            .map(|(c, v)| c * v)
            .sum::<f64>())
}

/// Everything a pipeline needs besides `K` and `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineSettings {
    pub norm: NormMode,
    pub mode: EncodeMode,
    pub g: usize,
    /// Fixed sharpness; `None` derives it from the trained map.
    pub beta: Option<f64>,
    pub init: InitMode,
    pub seed: u64,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        Self {
            norm: NormMode::None,
            mode: EncodeMode::Argmax,
            g: EncodeConfig::DEFAULT_G,
            beta: None,
            init: InitMode::Linear,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub lag: usize,
    pub norm: NormMode,
    pub mode: EncodeMode,
    pub g: usize,
    pub beta: Option<f64>,
    pub som: TrainConfig,
}

impl PipelineConfig {
    /// Default map schedule for `nodes` nodes trained on `rows` observations.
    pub fn from_settings(
        settings: &PipelineSettings,
        nodes: usize,
        lag: usize,
        rows: usize,
    ) -> Self {
        let som = TrainConfig {
            init: settings.init,
            ..TrainConfig::with_defaults(nodes, rows, settings.seed)
        };
        Self {
            lag,
            norm: settings.norm,
            mode: settings.mode,
            g: settings.g,
            beta: settings.beta,
            som,
        }
    }
}

/// A trained map, its autoregression and normalization bound together.
#[derive(Debug, Clone, PartialEq)]
pub struct CnPipeline {
    pub som: SomModel,
    pub forecaster: ForecastModel,
    pub norm: NormalizationParams,
    pub encode: EncodeConfig,
    /// Mean `p_max` over the training rows.
    pub baseline_p_max: f64,
    /// Number of observations the pipeline was trained on.
    pub train_rows: usize,
}

/// One predicted step in contextual-number space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CnStep {
    /// Raw autoregressive output.
    pub raw: f64,
    /// The value after clamping into `[1, K]`.
    pub cn: f64,
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forecast {
    /// `horizon × n` predicted observations in original units.
    pub rows: Dataset,
    pub steps: Vec<CnStep>,
}

impl Forecast {
    pub fn clamped_steps(&self) -> usize {
        self.steps.iter().filter(|s| s.clamped).count()
    }
}

impl CnPipeline {
    pub fn validate(&self) -> Result<()> {
        let k = self.som.nodes();
        self.encode.validate(k)?;
        check_dims(self.som.dim(), self.norm.dim())?;
        if self.forecaster.lag() >= self.train_rows {
            return Err(Error::contract(format!(
                "lag {} must be below the {} training rows",
                self.forecaster.lag(),
                self.train_rows
            )));
        }
        Ok(())
    }

    pub fn lag(&self) -> usize {
        self.forecaster.lag()
    }

    pub fn nodes(&self) -> usize {
        self.som.nodes()
    }

    pub fn dim(&self) -> usize {
        self.som.dim()
    }

    /// Encodes rows given in original units.
    pub fn encode_rows(&self, data: &Dataset) -> Result<Vec<encoder::Encoding>> {
        check_dims(self.dim(), data.dim())?;
        let normed = normalize_apply(&self.norm, data)?;
        normed
            .rows()
            .map(|x| encoder::encode(&self.som, x, &self.encode))
            .collect()
    }

    /// Decodes a contextual number to original units.
    pub fn decode(&self, cn: f64) -> Result<Vec<f64>> {
        let v = encoder::decode(&self.som, cn)?;
        invert_row(&self.norm, &v)
    }

    /// One clamped autoregressive step from a chronological history.
    fn step(&self, history: &[f64]) -> Result<CnStep> {
        let d = self.lag();
        let recent: Vec<f64> = history[history.len() - d..].iter().rev().copied().collect();
        let raw = predict_next(&self.forecaster, &recent)?;
        let (cn, clamped) = ContextualNumber::clamped(raw, self.nodes());
        Ok(CnStep {
            raw,
            cn: cn.value(),
            clamped,
        })
    }

    /// Iterates the autoregression `horizon` times from a chronological
    /// history of at least `d` contextual numbers, feeding clamped
    /// predictions back as lags.
    pub fn forecast_cn(&self, history: &[f64], horizon: usize) -> Result<Vec<CnStep>> {
        if history.len() < self.lag() {
            return Err(Error::InsufficientData {
                needed: self.lag().saturating_sub(1),
                available: history.len(),
            });
        }
        let mut buf = history.to_vec();
        let mut out = Vec::with_capacity(horizon);
        for _ in 0..horizon {
            let s = self.step(&buf)?;
            buf.push(s.cn);
            out.push(s);
        }
        Ok(out)
    }
}

/// Trains the full pipeline on `data` (original units).
pub fn pipeline_train(data: &Dataset, cfg: &PipelineConfig) -> Result<CnPipeline> {
    if data.len() <= cfg.lag + 1 {
        return Err(Error::InsufficientData {
            needed: cfg.lag + 1,
            available: data.len(),
        });
    }
    let norm = normalize_fit(data, cfg.norm)?;
    let normed = normalize_apply(&norm, data)?;
    let map = som::train(&normed, &cfg.som)?;
    let beta = cfg.beta.unwrap_or_else(|| encoder::model_beta(&map));
    let encode = EncodeConfig {
        mode: cfg.mode,
        g: if cfg.mode == EncodeMode::Argmax {
            1
        } else {
            cfg.g
        },
        beta,
    };
    encode.validate(map.nodes())?;
    let encodings: Vec<encoder::Encoding> = normed
        .values()
        .par_chunks(normed.dim())
        .map(|x| encoder::encode(&map, x, &encode))
        .collect::<Result<_>>()?;
    let series: Vec<f64> = encodings.iter().map(|e| e.cn.value()).collect();
    let baseline_p_max = encodings.iter().map(|e| e.p_max).sum::<f64>() / encodings.len() as f64;
    let forecaster = fit_ar(&series, cfg.lag)?;
    let pipeline = CnPipeline {
        som: map,
        forecaster,
        norm,
        encode,
        baseline_p_max,
        train_rows: data.len(),
    };
    pipeline.validate()?;
    Ok(pipeline)
}

/// Forecasts `horizon` observations from exactly `d` recent observations
/// given in chronological order.
pub fn pipeline_forecast(p: &CnPipeline, recent: &Dataset, horizon: usize) -> Result<Forecast> {
    if recent.len() != p.lag() {
        return Err(Error::contract(format!(
            "expected exactly {} recent observations, got {}",
            p.lag(),
            recent.len()
        )));
    }
    if horizon == 0 {
        return Err(Error::contract("horizon must be at least 1"));
    }
    let history: Vec<f64> = p
        .encode_rows(recent)?
        .iter()
        .map(|e| e.cn.value())
        .collect();
    let steps = p.forecast_cn(&history, horizon)?;
    let mut values = Vec::with_capacity(horizon * p.dim());
    for s in &steps {
        values.extend(p.decode(s.cn)?);
    }
    Ok(Forecast {
        rows: Dataset::new(values, p.dim())?,
        steps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    /// Each step conditions on the true previous observations.
    TeacherForcing,
    /// Predictions are fed back; only the warmup is observed.
    FreeRunning,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportConfig {
    pub nodes: usize,
    pub lag: usize,
    pub g: usize,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// `e_t` for every step with a nonzero reference.
    pub per_step_errors: Vec<f64>,
    /// Test-row index of each entry of `per_step_errors`.
    pub steps: Vec<usize>,
    /// Test rows whose reference vector had zero norm.
    pub excluded: Vec<usize>,
    pub mean_error: f64,
    /// `p_max` of every test row; empty for baselines.
    pub p_max_series: Vec<f64>,
    pub clamped_steps: usize,
    pub config: Option<ReportConfig>,
}

impl EvalReport {
    fn from_predictions<'a>(
        predictions: impl Iterator<Item = Vec<f64>>,
        truth: impl Iterator<Item = &'a [f64]>,
    ) -> Result<Self> {
        let mut per_step_errors = Vec::new();
        let mut steps = Vec::new();
        let mut excluded = Vec::new();
        for (t, (est, real)) in predictions.zip(truth).enumerate() {
            match relative_error(&est, real) {
                Ok(e) => {
                    per_step_errors.push(e);
                    steps.push(t);
                }
                Err(Error::DegenerateReference) => excluded.push(t),
                Err(e) => return Err(e),
            }
        }
        if per_step_errors.is_empty() {
            return Err(Error::DegenerateReference);
        }
        let mean_error = per_step_errors.iter().sum::<f64>() / per_step_errors.len() as f64;
        Ok(Self {
            per_step_errors,
            steps,
            excluded,
            mean_error,
            p_max_series: Vec::new(),
            clamped_steps: 0,
            config: None,
        })
    }
}

/// Scores `p` on `test`, using the last `d` rows of `warmup` as the
/// observations preceding the first test row.
pub fn evaluate(
    p: &CnPipeline,
    test: &Dataset,
    warmup: &Dataset,
    mode: EvalMode,
) -> Result<EvalReport> {
    check_dims(p.dim(), test.dim())?;
    check_dims(p.dim(), warmup.dim())?;
    let d = p.lag();
    let warm = warmup.tail(d)?;
    let warm_cns: Vec<f64> = p.encode_rows(&warm)?.iter().map(|e| e.cn.value()).collect();
    let test_enc = p.encode_rows(test)?;
    let p_max_series: Vec<f64> = test_enc.iter().map(|e| e.p_max).collect();

    let steps: Vec<CnStep> = match mode {
        EvalMode::TeacherForcing => {
            let mut history = warm_cns;
            history.extend(test_enc.iter().map(|e| e.cn.value()));
            (0..test.len())
                .map(|t| p.step(&history[t..t + d]))
                .collect::<Result<_>>()?
        }
        EvalMode::FreeRunning => p.forecast_cn(&warm_cns, test.len())?,
    };
    let predictions: Vec<Vec<f64>> = steps
        .iter()
        .map(|s| p.decode(s.cn))
        .collect::<Result<_>>()?;
    let mut report = EvalReport::from_predictions(predictions.into_iter(), test.rows())?;
    report.p_max_series = p_max_series;
    report.clamped_steps = steps.iter().filter(|s| s.clamped).count();
    report.config = Some(ReportConfig {
        nodes: p.nodes(),
        lag: d,
        g: p.encode.g,
        beta: p.encode.beta,
    });
    Ok(report)
}

/// Predicts each test row by the true row before it.
pub fn persistence_baseline(test: &Dataset, last_train_row: &[f64]) -> Result<EvalReport> {
    check_dims(test.dim(), last_train_row.len())?;
    let previous = std::iter::once(last_train_row.to_vec())
        .chain(test.rows().take(test.len() - 1).map(<[f64]>::to_vec));
    EvalReport::from_predictions(previous, test.rows())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpec {
    pub n_draws: usize,
    /// Inclusive node-count range.
    pub nodes_range: (usize, usize),
    /// Inclusive lag range.
    pub lag_range: (usize, usize),
    pub seed: u64,
    /// Trailing share of the training data held out for scoring.
    pub validation_fraction: f64,
}

impl Default for SearchSpec {
    fn default() -> Self {
        Self {
            n_draws: 25,
            nodes_range: (30, 200),
            lag_range: (2, 20),
            seed: 42,
            validation_fraction: 0.2,
        }
    }
}

impl SearchSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_draws == 0 {
            return Err(Error::config("n_draws must be at least 1"));
        }
        let (k0, k1) = self.nodes_range;
        let (d0, d1) = self.lag_range;
        if k0 < 2 || k0 > k1 {
            return Err(Error::config(format!("invalid node range [{k0}, {k1}]")));
        }
        if d0 < 1 || d0 > d1 {
            return Err(Error::config(format!("invalid lag range [{d0}, {d1}]")));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::config("validation_fraction must lie in (0, 1)"));
        }
        Ok(())
    }

    /// The `(K, d)` pairs in draw order.
    pub fn draws(&self) -> Vec<(usize, usize)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.n_draws)
            .map(|_| {
                let k = rng.random_range(self.nodes_range.0..=self.nodes_range.1);
                let d = rng.random_range(self.lag_range.0..=self.lag_range.1);
                (k, d)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub draw: usize,
    pub nodes: usize,
    pub lag: usize,
    /// Validation report, or the reason the trial failed.
    pub outcome: std::result::Result<EvalReport, String>,
}

impl Trial {
    pub fn validation_error(&self) -> Option<f64> {
        self.outcome.as_ref().ok().map(|r| r.mean_error)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub best_nodes: usize,
    pub best_lag: usize,
    /// Position of the winner in `trials`.
    pub best_draw: usize,
    pub trials: Vec<Trial>,
}

/// Chronological `(fit, validation)` split by the trailing fraction.
pub fn validation_split(train: &Dataset, fraction: f64) -> Result<(Dataset, Dataset)> {
    let n = train.len();
    let fit_len = ((n as f64) * (1.0 - fraction)).round() as usize;
    if fit_len == 0 || fit_len >= n {
        return Err(Error::InsufficientData {
            needed: 1,
            available: n,
        });
    }
    Ok((train.slice(0, fit_len)?, train.slice(fit_len, n)?))
}

/// Random search over `(K, d)`, scored by one-step validation error on the
/// trailing `validation_fraction` of `train`. Ties go to the earliest draw.
pub fn random_search(
    train: &Dataset,
    spec: &SearchSpec,
    settings: &PipelineSettings,
) -> Result<SearchOutcome> {
    spec.validate()?;
    let (fit, val) = validation_split(train, spec.validation_fraction)?;
    let trials: Vec<Trial> = spec
        .draws()
        .into_par_iter()
        .enumerate()
        .map(|(draw, (nodes, lag))| {
            let outcome = run_trial(&fit, &val, settings, nodes, lag).map_err(|e| e.to_string());
            Trial {
                draw,
                nodes,
                lag,
                outcome,
            }
        })
        .collect();

    let mut best: Option<(usize, f64)> = None;
    for (i, t) in trials.iter().enumerate() {
        if let Some(err) = t.validation_error() {
            if best.is_none_or(|(_, b)| err < b) {
                best = Some((i, err));
            }
        }
    }
    let (best_draw, _) = best.ok_or(Error::AllTrialsFailed(trials.len()))?;
    Ok(SearchOutcome {
        best_nodes: trials[best_draw].nodes,
        best_lag: trials[best_draw].lag,
        best_draw,
        trials,
    })
}

/// Retrains the winning `(K, d)` of a search on all of `train`.
pub fn refit_best(
    train: &Dataset,
    outcome: &SearchOutcome,
    settings: &PipelineSettings,
) -> Result<CnPipeline> {
    let cfg =
        PipelineConfig::from_settings(settings, outcome.best_nodes, outcome.best_lag, train.len());
    pipeline_train(train, &cfg)
}

fn run_trial(
    fit: &Dataset,
    val: &Dataset,
    settings: &PipelineSettings,
    nodes: usize,
    lag: usize,
) -> Result<EvalReport> {
    let cfg = PipelineConfig::from_settings(settings, nodes, lag, fit.len());
    let p = pipeline_train(fit, &cfg)?;
    evaluate(&p, val, fit, EvalMode::TeacherForcing)
}
