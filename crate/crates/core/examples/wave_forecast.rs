//! Train a pipeline on the first 1800 steps of a traveling wave, forecast
//! ahead, and score one-step predictions on the remaining 200 against
//! persistence.

use cnforecast::data_io::{split_prefix, synth_traveling_wave, SplitSpec};
use cnforecast::forecast::{
    evaluate, persistence_baseline, pipeline_forecast, pipeline_train, EvalMode, PipelineConfig,
    PipelineSettings,
};

fn main() -> cnforecast::Result<()> {
    let data = synth_traveling_wave(5, 6, 2000, 0.01, 0.02, 42)?;
    let (train, test) = split_prefix(&data, SplitSpec { train_count: 1800 })?;
    let cfg = PipelineConfig::from_settings(&PipelineSettings::default(), 156, 7, train.len());
    let pipeline = pipeline_train(&train, &cfg)?;
    println!(
        "nodes={} lag={} coefficients={:?}",
        pipeline.nodes(),
        pipeline.lag(),
        pipeline.forecaster.coefficients()
    );

    let forecast = pipeline_forecast(&pipeline, &train.tail(pipeline.lag())?, 5)?;
    for (h, step) in forecast.steps.iter().enumerate() {
        println!("h={} cn={:.3} clamped={}", h + 1, step.cn, step.clamped);
    }

    for mode in [EvalMode::TeacherForcing, EvalMode::FreeRunning] {
        let report = evaluate(&pipeline, &test, &train, mode)?;
        println!("{mode:?} mean_error={:.5}", report.mean_error);
    }
    let base = persistence_baseline(&test, train.row(train.len() - 1))?;
    println!("persistence mean_error={:.5}", base.mean_error);
    Ok(())
}
