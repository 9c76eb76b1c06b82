//! Posterior confidence drops on inputs unlike the training data. Noise
//! spliced after the test rows trips the drift monitor.

use cnforecast::data_io::{split_prefix, synth_traveling_wave, SplitSpec};
use cnforecast::encoder::{drift_monitor, DriftBaseline};
use cnforecast::forecast::{pipeline_train, PipelineConfig, PipelineSettings};
use cnforecast::Dataset;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> cnforecast::Result<()> {
    let data = synth_traveling_wave(5, 6, 2000, 0.01, 0.02, 42)?;
    let (train, test) = split_prefix(&data, SplitSpec { train_count: 1800 })?;
    let cfg = PipelineConfig::from_settings(&PipelineSettings::default(), 50, 4, train.len());
    let pipeline = pipeline_train(&train, &cfg)?;

    // Noise with the same per-column mean and spread as the training data.
    let n = train.dim();
    let rows = train.len() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let columns: Vec<Normal<f64>> = (0..n)
        .map(|c| {
            let mean = train.rows().map(|r| r[c]).sum::<f64>() / rows;
            let var = train.rows().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / rows;
            Normal::new(mean, var.sqrt()).unwrap()
        })
        .collect();
    let noise: Vec<f64> = (0..100)
        .flat_map(|_| {
            columns
                .iter()
                .map(|d| d.sample(&mut rng))
                .collect::<Vec<_>>()
        })
        .collect();
    let noise = Dataset::new(noise, n)?;

    let mut series: Vec<f64> = pipeline
        .encode_rows(&test)?
        .iter()
        .map(|e| e.p_max)
        .collect();
    let splice = series.len();
    series.extend(pipeline.encode_rows(&noise)?.iter().map(|e| e.p_max));

    let flags = drift_monitor(
        &series,
        0.9,
        20,
        DriftBaseline::Value(pipeline.baseline_p_max),
    )?;
    println!("baseline_p_max={:.5}", pipeline.baseline_p_max);
    println!(
        "test mean p_max={:.5}",
        series[..splice].iter().sum::<f64>() / splice as f64
    );
    println!(
        "noise mean p_max={:.5}",
        series[splice..].iter().sum::<f64>() / (series.len() - splice) as f64
    );
    match flags.iter().position(|&f| f) {
        Some(t) => println!("first flag at t={t} (noise starts at t={splice})"),
        None => println!("no drift flagged"),
    }
    Ok(())
}
