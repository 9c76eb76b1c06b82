//! A 400-node map trained on 500 uniform scalars: node weights come out
//! sorted along the index.

use cnforecast::data_io::synth_uniform_1d;
use cnforecast::metrics::spearman;
use cnforecast::som::{self, TrainConfig};

fn main() -> cnforecast::Result<()> {
    let data = synth_uniform_1d(500, 0.0, 1000.0, 42)?;
    let cfg = TrainConfig::with_defaults(400, data.len(), 42);
    let model = som::train(&data, &cfg)?;

    let index: Vec<f64> = (1..=model.nodes()).map(|j| j as f64).collect();
    println!("epochs={}", cfg.epochs);
    println!("spearman={:.6}", spearman(&index, model.weights())?);
    println!(
        "ordering_score={:.4}",
        som::ordering_score(&model, 200_000, 42)?
    );
    println!(
        "quantization_error={:.4}",
        model.meta().final_quantization_error
    );
    for j in [1, 100, 200, 300, 400] {
        println!("w[{j}]={:.2}", model.weight(j)[0]);
    }
    Ok(())
}
