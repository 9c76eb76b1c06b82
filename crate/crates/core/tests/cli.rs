use std::path::{Path, PathBuf};
use std::process::Command;

use cnforecast::data_io::{
    load_matrix, load_model, save_matrix, save_model, split_prefix, synth_traveling_wave,
    ModelFile, SplitSpec,
};
use cnforecast::forecast::{pipeline_forecast, pipeline_train, PipelineConfig, PipelineSettings};
use cnforecast::Dataset;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_cnforecast"))
        .args(args)
        .output()
        .unwrap();
    Run {
        code: out.status.code().unwrap(),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn value(stdout: &str, key: &str) -> String {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no `{key}` in {stdout}"))
        .to_string()
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

fn wave_files(dir: &Path) -> (String, String) {
    let data = synth_traveling_wave(5, 6, 2000, 0.01, 0.02, 42).unwrap();
    let (train, test) = split_prefix(&data, SplitSpec { train_count: 1800 }).unwrap();
    let (tr, te) = (p(dir, "train.csv"), p(dir, "test.csv"));
    save_matrix(&train, &tr).unwrap();
    save_matrix(&test, &te).unwrap();
    (tr, te)
}

fn small_pipeline(dir: &Path) -> (PathBuf, cnforecast::forecast::CnPipeline, Dataset) {
    let data = synth_traveling_wave(2, 3, 300, 0.02, 0.05, 1).unwrap();
    let cfg = PipelineConfig::from_settings(&PipelineSettings::default(), 15, 3, data.len());
    let pipeline = pipeline_train(&data, &cfg).unwrap();
    let path = dir.join("pipeline.model");
    save_model(&ModelFile::Pipeline(pipeline.clone()), &path).unwrap();
    (path, pipeline, data)
}

#[test]
fn help_exits_zero() {
    let r = run(&["--help"]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.contains("train-som"));
}

#[test]
fn synth_is_deterministic_and_shaped() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (p(dir.path(), "a.csv"), p(dir.path(), "b.csv"));
    assert_eq!(run(&["synth", "--kind", "wave", "--out", &a]).code, 0);
    assert_eq!(run(&["synth", "--kind", "wave", "--out", &b]).code, 0);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let w = load_matrix(&a).unwrap();
    assert_eq!((w.len(), w.dim()), (2000, 30));

    let u = p(dir.path(), "u.csv");
    let r = run(&[
        "synth",
        "--kind",
        "uniform1d",
        "--count",
        "500",
        "--low",
        "0",
        "--high",
        "1000",
        "--out",
        &u,
    ]);
    assert_eq!(r.code, 0);
    assert_eq!(value(&r.stdout, "rows"), "500");
    let u = load_matrix(&u).unwrap();
    assert!(u.values().iter().all(|v| (0.0..1000.0).contains(v)));

    let bad = p(dir.path(), "bad.csv");
    assert_eq!(
        run(&[
            "synth",
            "--kind",
            "uniform1d",
            "--low",
            "5",
            "--high",
            "1",
            "--out",
            &bad
        ])
        .code,
        1
    );
    assert!(!Path::new(&bad).exists());
}

#[test]
fn train_som_orders_uniform_data() {
    let dir = tempfile::tempdir().unwrap();
    let data = p(dir.path(), "u.csv");
    run(&["synth", "--kind", "uniform1d", "--out", &data]);
    let (a, b) = (p(dir.path(), "a.model"), p(dir.path(), "b.model"));
    let r = run(&["train-som", "--data", &data, "--nodes", "400", "--out", &a]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(value(&r.stdout, "ordering_score").parse::<f64>().unwrap() >= 0.99);
    assert_eq!(
        run(&["train-som", "--data", &data, "--nodes", "400", "--out", &b]).code,
        0
    );
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let weights = p(dir.path(), "w.csv");
    assert_eq!(
        run(&["inspect", "--model", &a, "--emit", "weights", "--out", &weights]).code,
        0
    );
    assert_eq!(load_matrix(&weights).unwrap().len(), 400);
}

#[test]
fn train_som_flag_and_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let data = p(dir.path(), "d.csv");
    std::fs::write(&data, "1,2\n3,4\n5,6\n").unwrap();
    let out = p(dir.path(), "m.model");
    let r = run(&["train-som", "--data", &data, "--out", &out]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("Usage"));
    assert!(!Path::new(&out).exists());

    std::fs::write(&data, "1,2\n3\n").unwrap();
    let r = run(&["train-som", "--data", &data, "--nodes", "3", "--out", &out]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("line 2"));
    assert_eq!(
        run(&[
            "train-som",
            "--data",
            &p(dir.path(), "missing.csv"),
            "--nodes",
            "3",
            "--out",
            &out
        ])
        .code,
        2
    );
    assert!(!Path::new(&out).exists());
}

#[test]
fn encode_and_decode_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = p(dir.path(), "d.csv");
    std::fs::write(&data, "0,0\n1,0\n2,1\n3,3\n4,4\n5,6\n").unwrap();
    let model = p(dir.path(), "m.model");
    assert_eq!(
        run(&[
            "train-som",
            "--data",
            &data,
            "--nodes",
            "4",
            "--out",
            &model
        ])
        .code,
        0
    );

    let weights = p(dir.path(), "w.csv");
    run(&[
        "inspect", "--model", &model, "--emit", "weights", "--out", &weights,
    ]);
    let enc = p(dir.path(), "enc.csv");
    assert_eq!(
        run(&["encode", "--model", &model, "--data", &weights, "--out", &enc]).code,
        0
    );
    let cns: Vec<f64> = load_matrix(&enc).unwrap().rows().map(|r| r[0]).collect();
    assert_eq!(cns, vec![1.0, 2.0, 3.0, 4.0]);

    let cn = p(dir.path(), "cn.txt");
    std::fs::write(&cn, "# contextual numbers\n2.5\n1\n").unwrap();
    let dec = p(dir.path(), "dec.csv");
    assert_eq!(
        run(&["decode", "--model", &model, "--cn", &cn, "--out", &dec]).code,
        0
    );
    let w = load_matrix(&weights).unwrap();
    let d = load_matrix(&dec).unwrap();
    let mid: Vec<f64> = w
        .row(1)
        .iter()
        .zip(w.row(2))
        .map(|(a, b)| 0.5 * a + 0.5 * b)
        .collect();
    assert_eq!(d.row(0), mid.as_slice());
    assert_eq!(d.row(1), w.row(0));

    std::fs::write(&cn, "1\n2\n\n4.5\n").unwrap();
    let dec2 = p(dir.path(), "dec2.csv");
    let r = run(&["decode", "--model", &model, "--cn", &cn, "--out", &dec2]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains(":4:"), "{}", r.stderr);
    assert!(!Path::new(&dec2).exists());
}

#[test]
fn forecast_wraps_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let (model, pipeline, data) = small_pipeline(dir.path());
    let model = model.to_str().unwrap();
    let recent = data.tail(3).unwrap();
    let recent_path = p(dir.path(), "recent.csv");
    save_matrix(&recent, &recent_path).unwrap();

    let out = p(dir.path(), "f1.csv");
    assert_eq!(
        run(&[
            "forecast",
            "--model",
            model,
            "--recent",
            &recent_path,
            "--horizon",
            "1",
            "--out",
            &out
        ])
        .code,
        0
    );
    let want = pipeline_forecast(&pipeline, &recent, 1).unwrap();
    let got = load_matrix(&out).unwrap();
    assert!(got
        .values()
        .iter()
        .zip(want.rows.values())
        .all(|(a, b)| a.to_bits() == b.to_bits()));

    let out = p(dir.path(), "f7.csv");
    let r = run(&[
        "forecast",
        "--model",
        model,
        "--recent",
        &recent_path,
        "--horizon",
        "7",
        "--out",
        &out,
    ]);
    assert_eq!(r.code, 0);
    assert_eq!(load_matrix(&out).unwrap().len(), 7);

    let out = p(dir.path(), "f0.csv");
    assert_eq!(
        run(&[
            "forecast",
            "--model",
            model,
            "--recent",
            &recent_path,
            "--horizon",
            "0",
            "--out",
            &out
        ])
        .code,
        1
    );
    save_matrix(&data.tail(2).unwrap(), &recent_path).unwrap();
    assert_eq!(
        run(&[
            "forecast",
            "--model",
            model,
            "--recent",
            &recent_path,
            "--out",
            &out
        ])
        .code,
        1
    );
    assert!(!Path::new(&out).exists());
}

#[test]
fn evaluate_reports_per_step_errors() {
    let dir = tempfile::tempdir().unwrap();
    let (train, test) = wave_files(dir.path());
    let train_data = load_matrix(&train).unwrap();
    let cfg = PipelineConfig::from_settings(&PipelineSettings::default(), 60, 4, train_data.len());
    let model = p(dir.path(), "p.model");
    save_model(
        &ModelFile::Pipeline(pipeline_train(&train_data, &cfg).unwrap()),
        &model,
    )
    .unwrap();

    let report = p(dir.path(), "report.csv");
    let r = run(&[
        "evaluate", "--model", &model, "--test", &test, "--warmup", &train, "--out", &report,
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rows = load_matrix(&report).unwrap();
    assert_eq!((rows.len(), rows.dim()), (200, 4));
    let mean = rows.rows().map(|r| r[1]).sum::<f64>() / 200.0;
    let printed: f64 = value(&r.stdout, "mean_error").parse().unwrap();
    assert!((mean - printed).abs() <= 1e-12 * printed);
    let base = rows.rows().map(|r| r[3]).sum::<f64>() / 200.0;
    let printed: f64 = value(&r.stdout, "baseline_mean_error").parse().unwrap();
    assert!((base - printed).abs() <= 1e-12 * printed);
}

#[test]
fn evaluate_on_constant_data() {
    let dir = tempfile::tempdir().unwrap();
    let (model, _, _) = small_pipeline(dir.path());
    let test = p(dir.path(), "const.csv");
    save_matrix(&Dataset::from_rows(&vec![vec![0.3; 6]; 20]).unwrap(), &test).unwrap();
    let report = p(dir.path(), "r.csv");
    let r = run(&[
        "evaluate",
        "--model",
        model.to_str().unwrap(),
        "--test",
        &test,
        "--out",
        &report,
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(value(&r.stdout, "baseline_mean_error"), "0.0");
    assert_eq!(load_matrix(&report).unwrap().len(), 17);

    let zeros = p(dir.path(), "zeros.csv");
    let mut rows = vec![vec![0.3; 6]; 10];
    rows[6] = vec![0.0; 6];
    save_matrix(&Dataset::from_rows(&rows).unwrap(), &zeros).unwrap();
    let r = run(&[
        "evaluate",
        "--model",
        model.to_str().unwrap(),
        "--test",
        &zeros,
        "--out",
        &report,
    ]);
    assert_eq!(r.code, 0);
    assert_eq!(value(&r.stdout, "excluded"), "1");
    assert!(r.stderr.contains("1 test rows"));
}

#[test]
fn search_writes_trials_and_winner() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_traveling_wave(2, 3, 300, 0.02, 0.05, 6).unwrap();
    let path = p(dir.path(), "d.csv");
    save_matrix(&data, &path).unwrap();
    let (trials, model) = (p(dir.path(), "trials.csv"), p(dir.path(), "best.model"));
    let r = run(&[
        "search",
        "--data",
        &path,
        "--draws",
        "6",
        "--k-min",
        "5",
        "--k-max",
        "20",
        "--d-min",
        "2",
        "--d-max",
        "4",
        "--out",
        &trials,
        "--model-out",
        &model,
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let t = load_matrix(&trials).unwrap();
    assert_eq!((t.len(), t.dim()), (6, 5));
    let best = t
        .rows()
        .filter(|r| r[4] == 1.0)
        .map(|r| r[3])
        .fold(f64::INFINITY, f64::min);
    let winner = value(&r.stdout, "best_draw").parse::<usize>().unwrap();
    assert_eq!(t.row(winner)[3], best);
    let ModelFile::Pipeline(best_model) = load_model(&model).unwrap() else {
        panic!("expected a pipeline")
    };
    assert_eq!(best_model.nodes() as f64, t.row(winner)[1]);
    assert_eq!(best_model.train_rows, 300);

    let r = run(&[
        "search",
        "--data",
        &path,
        "--draws",
        "3",
        "--d-min",
        "250",
        "--d-max",
        "260",
        "--out",
        &p(dir.path(), "t2.csv"),
        "--model-out",
        &p(dir.path(), "m2.model"),
    ]);
    assert_eq!(r.code, 3);
    assert!(!dir.path().join("t2.csv").exists());
    assert!(!dir.path().join("m2.model").exists());
}

#[test]
fn inspect_emits_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (train, test) = wave_files(dir.path());
    let model = p(dir.path(), "m.model");
    assert_eq!(
        run(&[
            "train-som",
            "--data",
            &train,
            "--nodes",
            "50",
            "--out",
            &model
        ])
        .code,
        0
    );

    let pd = p(dir.path(), "pd.csv");
    let r = run(&[
        "inspect",
        "--model",
        &model,
        "--emit",
        "pairwise-distances",
        "--out",
        &pd,
    ]);
    assert_eq!(r.code, 0);
    let d = load_matrix(&pd).unwrap();
    assert_eq!((d.len(), d.dim()), (50, 50));
    for i in 0..50 {
        assert_eq!(d.row(i)[i], 0.0);
        for j in 0..50 {
            assert_eq!(d.row(i)[j], d.row(j)[i]);
        }
    }

    let pm = p(dir.path(), "pm.csv");
    let r = run(&[
        "inspect",
        "--model",
        &model,
        "--emit",
        "pmax-series",
        "--data",
        &test,
        "--out",
        &pm,
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(load_matrix(&pm).unwrap().len(), 200);

    let r = run(&["inspect", "--model", &model, "--emit", "ordering-score"]);
    assert_eq!(r.code, 0);
    assert!(value(&r.stdout, "neighbor_banding").parse::<f64>().unwrap() >= 0.9);

    assert_eq!(
        run(&["inspect", "--model", &model, "--emit", "nonsense"]).code,
        1
    );
    assert_eq!(
        run(&[
            "inspect",
            "--model",
            &model,
            "--emit",
            "pmax-series",
            "--out",
            &pm
        ])
        .code,
        1
    );
}
