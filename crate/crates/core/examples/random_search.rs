//! Random search over map size and lag, then a refit of the winner on the
//! full training segment.

use cnforecast::data_io::{split_prefix, synth_traveling_wave, SplitSpec};
use cnforecast::forecast::{
    evaluate, random_search, refit_best, EvalMode, PipelineSettings, SearchSpec,
};

fn main() -> cnforecast::Result<()> {
    let data = synth_traveling_wave(5, 6, 2000, 0.01, 0.02, 42)?;
    let (train, test) = split_prefix(&data, SplitSpec { train_count: 1800 })?;
    let settings = PipelineSettings::default();
    let outcome = random_search(&train, &SearchSpec::default(), &settings)?;

    for t in &outcome.trials {
        match &t.outcome {
            Ok(r) => println!(
                "draw={:2} K={:3} d={:2} validation_error={:.5}",
                t.draw, t.nodes, t.lag, r.mean_error
            ),
            Err(e) => println!(
                "draw={:2} K={:3} d={:2} failed: {e}",
                t.draw, t.nodes, t.lag
            ),
        }
    }
    println!("best K={} d={}", outcome.best_nodes, outcome.best_lag);

    let best = refit_best(&train, &outcome, &settings)?;
    let report = evaluate(&best, &test, &train, EvalMode::TeacherForcing)?;
    println!("test mean_error={:.5}", report.mean_error);
    Ok(())
}
