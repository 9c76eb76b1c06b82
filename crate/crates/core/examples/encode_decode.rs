//! Encoding observations to contextual numbers and back.

use cnforecast::data_io::synth_traveling_wave;
use cnforecast::encoder::{self, EncodeConfig};
use cnforecast::metrics::relative_error;
use cnforecast::som::{self, TrainConfig};

fn main() -> cnforecast::Result<()> {
    let data = synth_traveling_wave(3, 4, 600, 0.01, 0.02, 7)?;
    let model = som::train(&data, &TrainConfig::with_defaults(40, data.len(), 7))?;
    let beta = encoder::model_beta(&model);
    println!("beta={beta:.5}");

    let argmax = EncodeConfig::argmax(beta);
    let weighted = EncodeConfig::weighted(beta);
    for t in [0, 25, 50, 75] {
        let x = data.row(t);
        let a = encoder::encode(&model, x, &argmax)?;
        let w = encoder::encode(&model, x, &weighted)?;
        let back = encoder::decode(&model, a.cn.value())?;
        println!(
            "t={t} argmax_cn={} weighted_cn={:.3} contiguous={} p_max={:.4} reconstruction_error={:.4}",
            a.cn.value(),
            w.cn.value(),
            w.contiguous,
            a.p_max,
            relative_error(&back, x)?
        );
    }

    // Halfway between two nodes decodes to the midpoint of their weights.
    let mid = encoder::decode(&model, 10.5)?;
    println!(
        "decode(10.5)[0]={:.4} (nodes 10, 11: {:.4}, {:.4})",
        mid[0],
        model.weight(10)[0],
        model.weight(11)[0]
    );
    Ok(())
}
