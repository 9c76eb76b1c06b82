//! Self-organizing maps as scalar encoders for high-dimensional time series.
//!
//! A one-dimensional map with `K` nodes turns every observation into a
//! *contextual number* in `[1, K]`: nearby numbers point at similar states.
//! The crate trains such maps, encodes and decodes through them, and
//! forecasts high-dimensional series by running a linear autoregression on
//! the scalar contextual-number series and decoding its predictions.
//!
//! ```no_run
//! use cnforecast::data_io::{split_prefix, synth_traveling_wave, SplitSpec};
//! use cnforecast::forecast::{evaluate, pipeline_train, EvalMode, PipelineConfig, PipelineSettings};
//!
//! let data = synth_traveling_wave(5, 6, 2000, 0.01, 0.02, 42)?;
//! let (train, test) = split_prefix(&data, SplitSpec { train_count: 1800 })?;
//! let cfg = PipelineConfig::from_settings(&PipelineSettings::default(), 120, 4, train.len());
//! let pipeline = pipeline_train(&train, &cfg)?;
//! let report = evaluate(&pipeline, &test, &train, EvalMode::TeacherForcing)?;
//! println!("mean e_t = {}", report.mean_error);
//! # Ok::<(), cnforecast::Error>(())
//! ```

pub mod cli;
pub mod data_io;
pub mod encoder;
pub mod error;
pub mod forecast;
pub mod metrics;
pub mod som;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    ContextualNumber, Dataset, ForecastModel, NormMode, NormalizationParams, Posterior,
};
