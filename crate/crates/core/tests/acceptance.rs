//! End-to-end acceptance checks. Runs every criterion, prints one
//! `PASS`/`FAIL` line each, and exits nonzero if any failed.

use std::time::{Duration, Instant};

use cnforecast::data_io::{
    load_model, save_model, split_prefix, synth_traveling_wave, synth_uniform_1d, ModelFile,
    SplitSpec,
};
use cnforecast::encoder::{self, drift_monitor, DriftBaseline};
use cnforecast::forecast::{
    self, evaluate, fit_ar, persistence_baseline, pipeline_forecast, pipeline_train, random_search,
    EvalMode, PipelineConfig, PipelineSettings, SearchSpec,
};
use cnforecast::metrics::spearman;
use cnforecast::som::{self, SomModel, TrainConfig};
use cnforecast::Dataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Maps trained along the way, reused by the encode/decode identity check.
#[derive(Default)]
struct Suite {
    trained: Vec<SomModel>,
}

fn wave() -> Dataset {
    synth_traveling_wave(5, 6, 2000, 0.01, 0.02, 42).unwrap()
}

fn uniform_ordering(suite: &mut Suite) -> Outcome {
    let start = Instant::now();
    let data = synth_uniform_1d(500, 0.0, 1000.0, 42).unwrap();
    let model = som::train(&data, &TrainConfig::with_defaults(400, data.len(), 42)).unwrap();
    let elapsed = start.elapsed();
    let index: Vec<f64> = (1..=400).map(|j| j as f64).collect();
    let rho = spearman(&index, model.weights()).unwrap();
    let score = som::ordering_score(&model, 200_000, 42).unwrap();
    suite.trained.push(model);
    outcome(
        rho.abs() >= 0.99 && score >= 0.99 && elapsed < Duration::from_secs(10),
        format!(
            "|rho|={:.6} ordering_score={score:.4} time={elapsed:.2?}",
            rho.abs()
        ),
    )
}

fn wave_banding(suite: &mut Suite) -> Outcome {
    let start = Instant::now();
    let data = wave();
    let model = som::train(&data, &TrainConfig::with_defaults(50, data.len(), 42)).unwrap();
    let elapsed = start.elapsed();
    let banding = som::neighbor_banding(&model);
    suite.trained.push(model);
    outcome(
        banding >= 0.9 && elapsed < Duration::from_secs(30),
        format!("neighbor_banding={banding:.3} time={elapsed:.2?}"),
    )
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    10f64.powf(rng.random_range(lo..hi))
}

fn posterior_fuzz() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    let mut nan = 0;
    for _ in 0..1000 {
        let k = rng.random_range(2..=60);
        let n = rng.random_range(1..=12);
        let scale = log_uniform(&mut rng, -6.0, 6.0);
        let w: Vec<f64> = (0..k * n)
            .map(|_| rng.random_range(-1.0..1.0) * scale)
            .collect();
        let model = SomModel::from_weights(w, n).unwrap();
        let qscale = log_uniform(&mut rng, -6.0, 6.0);
        let x: Vec<f64> = (0..n)
            .map(|_| rng.random_range(-1.0..1.0) * qscale)
            .collect();
        let beta = log_uniform(&mut rng, -6.0, 6.0);
        let p = encoder::posterior(&model, &x, beta).unwrap();
        if p.probs().iter().any(|v| v.is_nan()) {
            nan += 1;
        }
        worst = worst.max((p.probs().iter().sum::<f64>() - 1.0).abs());
    }
    outcome(
        worst <= 1e-9 && nan == 0,
        format!("max |sum-1|={worst:.3e} nan_cases={nan}"),
    )
}

fn argmax_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let models: Vec<SomModel> = (0..20)
        .map(|_| {
            let k = rng.random_range(2..=80);
            let n = rng.random_range(1..=8);
            let w = (0..k * n).map(|_| rng.random_range(-5.0..5.0)).collect();
            SomModel::from_weights(w, n).unwrap()
        })
        .collect();
    let mut agree = 0;
    for q in 0..1000 {
        let m = &models[q % models.len()];
        let x: Vec<f64> = (0..m.dim()).map(|_| rng.random_range(-6.0..6.0)).collect();
        let beta = log_uniform(&mut rng, -3.0, 3.0);
        let cn = encoder::encode_argmax(m, &x, beta).unwrap().value();
        if cn == som::best_matching_unit(m, &x).unwrap() as f64 {
            agree += 1;
        }
    }
    outcome(agree == 1000, format!("agreement={agree}/1000"))
}

fn distinct_weights(m: &SomModel) -> bool {
    let rows: Vec<&[f64]> = (1..=m.nodes()).map(|j| m.weight(j)).collect();
    (0..rows.len()).all(|i| (i + 1..rows.len()).all(|j| rows[i] != rows[j]))
}

fn encode_decode_identity(suite: &mut Suite) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for seed in 0..6 {
        let n = rng.random_range(1..=6);
        let rows = rng.random_range(40..=200);
        let values = (0..rows * n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let data = Dataset::new(values, n).unwrap();
        let k = rng.random_range(3..=30);
        suite
            .trained
            .push(som::train(&data, &TrainConfig::with_defaults(k, rows, seed)).unwrap());
    }
    let mut checked = 0;
    let mut failures = 0;
    let mut skipped = 0;
    for m in &suite.trained {
        if !distinct_weights(m) {
            skipped += 1;
            continue;
        }
        checked += 1;
        let beta = encoder::model_beta(m);
        for j in 1..=m.nodes() {
            let cn = encoder::encode_argmax(m, m.weight(j), beta)
                .unwrap()
                .value();
            let back = encoder::decode(m, j as f64).unwrap();
            if cn != j as f64 || back != m.weight(j) {
                failures += 1;
            }
        }
    }
    outcome(
        failures == 0 && checked > 0,
        format!("models={checked} skipped_nondistinct={skipped} mismatches={failures}"),
    )
}

/// One k-means step: nearest weight (lowest index on ties), then the mean
/// of each cluster; empty clusters keep their weight.
fn lloyd_step(w: &[f64], n: usize, data: &Dataset) -> Vec<f64> {
    let k = w.len() / n;
    let mut sums = vec![0.0; k * n];
    let mut counts = vec![0usize; k];
    for x in data.rows() {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for j in 0..k {
            let d: f64 = w[j * n..(j + 1) * n]
                .iter()
                .zip(x)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if d < best_d {
                best = j;
                best_d = d;
            }
        }
        counts[best] += 1;
        for (s, v) in sums[best * n..(best + 1) * n].iter_mut().zip(x) {
            *s += v;
        }
    }
    (0..k * n)
        .map(|i| {
            let c = counts[i / n];
            if c == 0 {
                w[i]
            } else {
                sums[i] / c as f64
            }
        })
        .collect()
}

/// Mean squared distance to the nearest weight.
fn mean_sq_error(w: &[f64], n: usize, data: &Dataset) -> f64 {
    data.rows()
        .map(|x| {
            w.chunks(n)
                .map(|wj| {
                    wj.iter()
                        .zip(x)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                })
                .fold(f64::INFINITY, f64::min)
        })
        .sum::<f64>()
        / data.len() as f64
}

fn lloyd_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    let mut increases = 0;
    let mut worst_increase = 0.0f64;
    let mut sq_increases = 0;
    for _ in 0..50 {
        let rows = rng.random_range(1..=20);
        let k = rng.random_range(1..=4);
        let n = rng.random_range(1..=4);
        let data = Dataset::new(
            (0..rows * n)
                .map(|_| rng.random_range(-10.0..10.0))
                .collect(),
            n,
        )
        .unwrap();
        let w: Vec<f64> = (0..k * n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let got = som::batch_epoch(&w, &data, 1e-6).unwrap();
        let want = lloyd_step(&w, n, &data);
        for (a, b) in got.iter().zip(&want) {
            worst = worst.max((a - b).abs());
        }
        let mut cur = w;
        let mut prev =
            som::quantization_error(&SomModel::from_weights(cur.clone(), n).unwrap(), &data)
                .unwrap();
        let mut prev_sq = mean_sq_error(&cur, n, &data);
        for _ in 0..20 {
            cur = som::batch_epoch(&cur, &data, 1e-6).unwrap();
            let qe =
                som::quantization_error(&SomModel::from_weights(cur.clone(), n).unwrap(), &data)
                    .unwrap();
            if qe > prev {
                increases += 1;
                worst_increase = worst_increase.max(qe - prev);
            }
            let sq = mean_sq_error(&cur, n, &data);
            if sq > prev_sq * (1.0 + 1e-12) {
                sq_increases += 1;
            }
            prev = qe;
            prev_sq = sq;
        }
    }
    outcome(
        worst <= 1e-9 && increases == 0,
        format!(
            "max |w - oracle|={worst:.3e} qe_increases={increases} (largest {worst_increase:.3e}) \
             squared_error_increases={sq_increases}"
        ),
    )
}

/// Least squares through the normal equations with an intercept column,
/// solved by Gaussian elimination with partial pivoting.
fn normal_equations(series: &[f64], d: usize) -> Vec<f64> {
    let p = d + 1;
    let mut a = vec![vec![0.0; p + 1]; p];
    for t in d..series.len() {
        let mut row = vec![1.0];
        row.extend((1..=d).map(|i| series[t - i]));
        for i in 0..p {
            for j in 0..p {
                a[i][j] += row[i] * row[j];
            }
            a[i][p] += row[i] * series[t];
        }
    }
    for c in 0..p {
        let piv = (c..p)
            .max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs()))
            .unwrap();
        a.swap(c, piv);
        for r in 0..p {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..=p {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
    }
    (0..p).map(|i| a[i][p] / a[i][i]).collect()
}

fn ar_recovery() -> Outcome {
    let mut series = vec![10.0];
    for _ in 1..200 {
        let last = *series.last().unwrap();
        series.push(0.5 * last + 2.0);
    }
    let m = fit_ar(&series, 1).unwrap();
    let exact_err = (m.coefficients()[0] - 0.5)
        .abs()
        .max((m.intercept() - 2.0).abs());

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..40 {
        let d = rng.random_range(1..=5);
        let len = rng.random_range(3 * d + 10..=120);
        let s: Vec<f64> = (0..len).map(|_| rng.random_range(1.0..50.0)).collect();
        let fit = fit_ar(&s, d).unwrap();
        let oracle = normal_equations(&s, d);
        worst = worst.max((fit.intercept() - oracle[0]).abs());
        for (c, o) in fit.coefficients().iter().zip(&oracle[1..]) {
            worst = worst.max((c - o).abs());
        }
    }
    outcome(
        exact_err <= 1e-6 && worst <= 1e-8,
        format!("recovery err={exact_err:.3e} max |coef - oracle|={worst:.3e}"),
    )
}

fn beats_persistence() -> Outcome {
    let start = Instant::now();
    let data = wave();
    let (train, test) = split_prefix(&data, SplitSpec { train_count: 1800 }).unwrap();
    let settings = PipelineSettings::default();
    let search = random_search(&train, &SearchSpec::default(), &settings).unwrap();
    let best = forecast::refit_best(&train, &search, &settings).unwrap();
    let report = evaluate(&best, &test, &train, EvalMode::TeacherForcing).unwrap();
    let base = persistence_baseline(&test, train.row(train.len() - 1)).unwrap();
    let elapsed = start.elapsed();
    outcome(
        report.mean_error < base.mean_error && elapsed < Duration::from_secs(300),
        format!(
            "K={} d={} pipeline={:.5} persistence={:.5} time={elapsed:.2?}",
            search.best_nodes, search.best_lag, report.mean_error, base.mean_error
        ),
    )
}

fn posterior_behavior() -> Outcome {
    let data = wave();
    let (train, test) = split_prefix(&data, SplitSpec { train_count: 1800 }).unwrap();
    let cfg = PipelineConfig::from_settings(&PipelineSettings::default(), 50, 4, train.len());
    let p = pipeline_train(&train, &cfg).unwrap();

    let n = train.dim();
    let len = train.len() as f64;
    let mean: Vec<f64> = (0..n)
        .map(|c| train.rows().map(|r| r[c]).sum::<f64>() / len)
        .collect();
    let sd: Vec<f64> = (0..n)
        .map(|c| (train.rows().map(|r| (r[c] - mean[c]).powi(2)).sum::<f64>() / len).sqrt())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let noise_rows = 500;
    let noise: Vec<f64> = (0..noise_rows)
        .flat_map(|_| {
            (0..n)
                .map(|c| Normal::new(mean[c], sd[c]).unwrap().sample(&mut rng))
                .collect::<Vec<_>>()
        })
        .collect();
    let noise = Dataset::new(noise, n).unwrap();
    let pmax =
        |d: &Dataset| -> Vec<f64> { p.encode_rows(d).unwrap().iter().map(|e| e.p_max).collect() };
    let train_mean = p.baseline_p_max;
    let noise_series = pmax(&noise);
    let noise_mean = noise_series.iter().sum::<f64>() / noise_series.len() as f64;
    let ratio = train_mean / noise_mean;

    let window = 20;
    let mut series = pmax(&test);
    let splice = series.len();
    series.extend_from_slice(&noise_series[..100]);
    let flags =
        drift_monitor(&series, 0.9, window, DriftBaseline::Value(p.baseline_p_max)).unwrap();
    let first = flags.iter().skip(splice).position(|&f| f);
    let false_alarms = flags[..splice].iter().filter(|&&f| f).count();
    outcome(
        ratio >= 1.1 && first.is_some_and(|t| t < window),
        format!(
            "train p_max={train_mean:.5} noise p_max={noise_mean:.5} ratio={ratio:.3} \
             detection_delay={first:?} false_alarms_before_splice={false_alarms}"
        ),
    )
}

fn scaling_shape() -> Outcome {
    let start = Instant::now();
    let dims = [20usize, 80, 320, 1280];
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut times = Vec::new();
    for &n in &dims {
        let data = Dataset::new(
            (0..500 * n).map(|_| rng.random_range(-1.0..1.0)).collect(),
            n,
        )
        .unwrap();
        let cfg = TrainConfig::with_defaults(50, 500, 42);
        let best = (0..3)
            .map(|_| {
                let t = Instant::now();
                som::train(&data, &cfg).unwrap();
                t.elapsed().as_secs_f64()
            })
            .fold(f64::INFINITY, f64::min);
        times.push(best);
    }
    let xs: Vec<f64> = dims.iter().map(|&d| (d as f64).ln()).collect();
    let ys: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let mx = xs.iter().sum::<f64>() / 4.0;
    let my = ys.iter().sum::<f64>() / 4.0;
    let slope = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    let elapsed = start.elapsed();
    let timings: Vec<String> = dims
        .iter()
        .zip(&times)
        .map(|(d, t)| format!("{d}:{:.1}ms", t * 1e3))
        .collect();
    outcome(
        slope <= 1.3 && elapsed < Duration::from_secs(120),
        format!(
            "slope={slope:.3} [{}] time={elapsed:.2?}",
            timings.join(" ")
        ),
    )
}

fn determinism_and_persistence() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let data = wave();
    let cfg = TrainConfig::with_defaults(40, data.len(), 7);
    let a = dir.path().join("a.model");
    let b = dir.path().join("b.model");
    save_model(&ModelFile::Som(som::train(&data, &cfg).unwrap()), &a).unwrap();
    save_model(&ModelFile::Som(som::train(&data, &cfg).unwrap()), &b).unwrap();
    let identical = std::fs::read(&a).unwrap() == std::fs::read(&b).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut mismatches = 0;
    for i in 0..20 {
        let seed = rng.random();
        let field =
            synth_traveling_wave(2, 3, 300, rng.random_range(0.005..0.05), 0.05, seed).unwrap();
        let settings = PipelineSettings {
            seed,
            ..PipelineSettings::default()
        };
        let k = rng.random_range(5..=40);
        let d = rng.random_range(1..=6);
        let p = pipeline_train(
            &field,
            &PipelineConfig::from_settings(&settings, k, d, field.len()),
        )
        .unwrap();
        let path = dir.path().join(format!("p{i}.model"));
        save_model(&ModelFile::Pipeline(p.clone()), &path).unwrap();
        let ModelFile::Pipeline(loaded) = load_model(&path).unwrap() else {
            panic!("expected a pipeline");
        };
        let recent = field.tail(d).unwrap();
        let horizon = rng.random_range(1..=5);
        let mem = pipeline_forecast(&p, &recent, horizon).unwrap();
        let disk = pipeline_forecast(&loaded, &recent, horizon).unwrap();
        let same = mem
            .rows
            .values()
            .iter()
            .zip(disk.rows.values())
            .all(|(x, y)| x.to_bits() == y.to_bits());
        if !same || loaded != p {
            mismatches += 1;
        }
    }
    outcome(
        identical && mismatches == 0,
        format!("byte_identical_models={identical} forecast_mismatches={mismatches}/20"),
    )
}

fn main() {
    let mut suite = Suite::default();
    let criteria: Vec<(&str, Box<dyn FnOnce(&mut Suite) -> Outcome>)> = vec![
        ("1 one-dimensional ordering", Box::new(uniform_ordering)),
        ("2 banded weight distances", Box::new(wave_banding)),
        (
            "3 posterior normalization fuzz",
            Box::new(|_| posterior_fuzz()),
        ),
        (
            "4 argmax equals best matching unit",
            Box::new(|_| argmax_consistency()),
        ),
        ("5 encode/decode identity", Box::new(encode_decode_identity)),
        ("6 Lloyd equivalence", Box::new(|_| lloyd_equivalence())),
        ("7 autoregression recovery", Box::new(|_| ar_recovery())),
        (
            "8 forecast beats persistence",
            Box::new(|_| beats_persistence()),
        ),
        (
            "9 posterior confidence and drift",
            Box::new(|_| posterior_behavior()),
        ),
        (
            "10 linear scaling in dimension",
            Box::new(|_| scaling_shape()),
        ),
        (
            "11 determinism and persistence",
            Box::new(|_| determinism_and_persistence()),
        ),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let o = check(&mut suite);
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} criterion {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", 11 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
