//! Pairwise weight distances of a 50-node map on a 30-dimensional
//! traveling wave. Neighboring nodes sit closest to each other, giving a
//! banded distance matrix. Pass a path to also write the matrix as CSV.

use cnforecast::data_io::{format_matrix, synth_traveling_wave, write_atomic};
use cnforecast::som::{self, TrainConfig};

fn main() -> cnforecast::Result<()> {
    let data = synth_traveling_wave(5, 6, 2000, 0.01, 0.02, 42)?;
    let model = som::train(&data, &TrainConfig::with_defaults(50, data.len(), 42))?;
    let dist = som::pairwise_weight_distances(&model);

    println!("neighbor_banding={:.3}", som::neighbor_banding(&model));
    // Mean distance as a function of index offset.
    for offset in [1, 2, 5, 10, 25] {
        let pairs: Vec<f64> = (0..50 - offset).map(|i| dist[i][i + offset]).collect();
        println!(
            "offset={offset} mean_distance={:.4}",
            pairs.iter().sum::<f64>() / pairs.len() as f64
        );
    }

    if let Some(path) = std::env::args().nth(1) {
        write_atomic(
            path.as_ref(),
            format_matrix(dist.iter().map(Vec::as_slice), None).as_bytes(),
        )?;
        println!("wrote {path}");
    }
    Ok(())
}
