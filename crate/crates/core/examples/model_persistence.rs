//! Saving and reloading a pipeline reproduces its forecasts bit for bit.

use cnforecast::data_io::{load_model, save_model, synth_traveling_wave, ModelFile};
use cnforecast::forecast::{pipeline_forecast, pipeline_train, PipelineConfig, PipelineSettings};

fn main() -> cnforecast::Result<()> {
    let data = synth_traveling_wave(2, 3, 400, 0.02, 0.05, 3)?;
    let cfg = PipelineConfig::from_settings(&PipelineSettings::default(), 25, 3, data.len());
    let pipeline = pipeline_train(&data, &cfg)?;

    let dir = std::env::temp_dir().join(format!("cnforecast-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| cnforecast::Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    let path = dir.join("pipeline.model");
    save_model(&ModelFile::Pipeline(pipeline.clone()), &path)?;
    let text = std::fs::read_to_string(&path).unwrap_or_default();
    println!("{}", text.lines().take(14).collect::<Vec<_>>().join("\n"));

    let ModelFile::Pipeline(loaded) = load_model(&path)? else {
        unreachable!("saved a pipeline");
    };
    let recent = data.tail(3)?;
    let a = pipeline_forecast(&pipeline, &recent, 4)?;
    let b = pipeline_forecast(&loaded, &recent, 4)?;
    let identical = a
        .rows
        .values()
        .iter()
        .zip(b.rows.values())
        .all(|(x, y)| x.to_bits() == y.to_bits());
    println!("identical_forecasts={identical}");
    let _ = std::fs::remove_dir_all(&dir);
    Ok(())
}
