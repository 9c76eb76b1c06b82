//! Training time against input dimension at fixed N=500, K=50.

use std::time::Instant;

use cnforecast::som::{self, TrainConfig};
use cnforecast::Dataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> cnforecast::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut points = Vec::new();
    for n in [20usize, 80, 320, 1280] {
        let data = Dataset::new(
            (0..500 * n).map(|_| rng.random_range(-1.0..1.0)).collect(),
            n,
        )?;
        let cfg = TrainConfig::with_defaults(50, 500, 42);
        let mut best = f64::INFINITY;
        for _ in 0..3 {
            let start = Instant::now();
            som::train(&data, &cfg)?;
            best = best.min(start.elapsed().as_secs_f64());
        }
        println!("dim={n:5} seconds={best:.4}");
        points.push(((n as f64).ln(), best.ln()));
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / points.len() as f64;
    let my = points.iter().map(|p| p.1).sum::<f64>() / points.len() as f64;
    let slope = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / points.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    println!("log-log slope={slope:.3}");
    Ok(())
}
