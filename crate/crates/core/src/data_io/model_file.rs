//! Versioned text format for maps and pipelines.
//!
//! ```text
//! cnforecast-model v1
//! kind = pipeline
//! [META]
//! rng = chacha8
//! seed = 42
//! ...
//! [NORM]
//! [SOM]
//! nodes = 3
//! dim = 2
//! w = 0.5,1.0
//! ...
//! [AR]
//! [ENCODE]
//! ```
//!
//! Sections and keys appear in a fixed order, floats use the shortest
//! representation that round-trips, and a map-only file carries just the
//! META and SOM sections.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::encoder::{EncodeConfig, EncodeMode};
use crate::error::{Error, Result};
use crate::forecast::CnPipeline;
use crate::som::{InitMode, SomModel, TrainingMeta, RNG_ALGORITHM};
use crate::types::{ForecastModel, NormMode, NormalizationParams};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "cnforecast-model";

#[derive(Debug, Clone, PartialEq)]
pub enum ModelFile {
    Som(SomModel),
    Pipeline(CnPipeline),
}

impl ModelFile {
    pub fn kind(&self) -> &'static str {
        match self {
            ModelFile::Som(_) => "som",
            ModelFile::Pipeline(_) => "pipeline",
        }
    }

    pub fn som(&self) -> &SomModel {
        match self {
            ModelFile::Som(m) => m,
            ModelFile::Pipeline(p) => &p.som,
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC} v{FORMAT_VERSION}");
        let _ = writeln!(out, "kind = {}", self.kind());
        let som = self.som();
        let meta = som.meta();
        out.push_str("[META]\n");
        let _ = writeln!(out, "rng = {RNG_ALGORITHM}");
        let _ = writeln!(out, "seed = {}", meta.seed);
        let _ = writeln!(out, "epochs = {}", meta.epochs);
        out.push_str("radius_schedule = geometric\n");
        let _ = writeln!(out, "radius_start = {:?}", meta.radius_start);
        let _ = writeln!(out, "radius_end = {:?}", meta.radius_end);
        let _ = writeln!(out, "init = {}", meta.init.as_str());
        let _ = writeln!(
            out,
            "final_quantization_error = {:?}",
            meta.final_quantization_error
        );
        let _ = writeln!(out, "total_variance = {:?}", meta.total_variance);
        if let ModelFile::Pipeline(p) = self {
            let _ = writeln!(out, "train_rows = {}", p.train_rows);
            out.push_str("[NORM]\n");
            let _ = writeln!(out, "mode = {}", p.norm.mode.as_str());
            let _ = writeln!(out, "center = {}", join_floats(&p.norm.center));
            let _ = writeln!(out, "scale = {}", join_floats(&p.norm.scale));
            let cols: Vec<String> = p
                .norm
                .constant_columns
                .iter()
                .map(usize::to_string)
                .collect();
            let _ = writeln!(out, "constant_columns = {}", cols.join(","));
        }
        out.push_str("[SOM]\n");
        let _ = writeln!(out, "nodes = {}", som.nodes());
        let _ = writeln!(out, "dim = {}", som.dim());
        for w in som.weights().chunks_exact(som.dim()) {
            let _ = writeln!(out, "w = {}", join_floats(w));
        }
        if let ModelFile::Pipeline(p) = self {
            out.push_str("[AR]\n");
            let _ = writeln!(out, "lag = {}", p.forecaster.lag());
            let _ = writeln!(out, "intercept = {:?}", p.forecaster.intercept());
            let _ = writeln!(
                out,
                "coefficients = {}",
                join_floats(p.forecaster.coefficients())
            );
            let _ = writeln!(out, "ridge = {}", p.forecaster.used_ridge());
            out.push_str("[ENCODE]\n");
            let _ = writeln!(out, "mode = {}", p.encode.mode.as_str());
            let _ = writeln!(out, "g = {}", p.encode.g);
            let _ = writeln!(out, "beta = {:?}", p.encode.beta);
            let _ = writeln!(out, "baseline_p_max = {:?}", p.baseline_p_max);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut r = Reader::new(text);
        let header = r
            .next_line()
            .ok_or_else(|| integrity("header", "empty file"))?;
        let version = header
            .strip_prefix(MAGIC)
            .and_then(|rest| rest.strip_prefix(" v"))
            .ok_or_else(|| integrity("header", format!("expected `{MAGIC} v<version>`")))?;
        if version != FORMAT_VERSION.to_string() {
            return Err(Error::UnsupportedVersion(version.to_string()));
        }
        let kind = r.key("kind")?;
        let is_pipeline = match kind {
            "som" => false,
            "pipeline" => true,
            other => return Err(integrity("kind", format!("unknown kind `{other}`"))),
        };

        r.section("META")?;
        let rng = r.key("META.rng")?;
        if rng != RNG_ALGORITHM {
            return Err(integrity(
                "META.rng",
                format!("unsupported generator `{rng}`"),
            ));
        }
        let seed = r.parse("META.seed")?;
        let epochs = r.parse("META.epochs")?;
        let schedule = r.key("META.radius_schedule")?;
        if schedule != "geometric" {
            return Err(integrity(
                "META.radius_schedule",
                format!("unknown schedule `{schedule}`"),
            ));
        }
        let radius_start = r.float("META.radius_start")?;
        let radius_end = r.float("META.radius_end")?;
        let init: InitMode = r.parse("META.init")?;
        let final_quantization_error = r.float("META.final_quantization_error")?;
        let total_variance = r.float("META.total_variance")?;
        let meta = TrainingMeta {
            epochs,
            radius_start,
            radius_end,
            init,
            seed,
            final_quantization_error,
            total_variance,
        };

        let mut pipeline_parts = None;
        if is_pipeline {
            let train_rows: usize = r.parse("META.train_rows")?;
            r.section("NORM")?;
            let mode: NormMode = r.parse("NORM.mode")?;
            let center = r.floats("NORM.center")?;
            let scale = r.floats("NORM.scale")?;
            let cols_raw = r.key("NORM.constant_columns")?;
            let constant_columns = if cols_raw.is_empty() {
                Vec::new()
            } else {
                cols_raw
                    .split(',')
                    .map(|c| {
                        c.trim()
                            .parse()
                            .map_err(|_| integrity("NORM.constant_columns", "not an index"))
                    })
                    .collect::<Result<Vec<usize>>>()?
            };
            if center.len() != scale.len() {
                return Err(integrity("NORM.scale", "length differs from center"));
            }
            pipeline_parts = Some((
                train_rows,
                NormalizationParams {
                    mode,
                    center,
                    scale,
                    constant_columns,
                },
            ));
        }

        r.section("SOM")?;
        let nodes: usize = r.parse("SOM.nodes")?;
        let dim: usize = r.parse("SOM.dim")?;
        if nodes == 0 || dim == 0 {
            return Err(integrity("SOM.nodes", "map must be non-empty"));
        }
        let mut weights = Vec::with_capacity(nodes * dim);
        for j in 0..nodes {
            let field = format!("SOM.w[{}]", j + 1);
            let row = r.floats_as(&field, "w")?;
            if row.len() != dim {
                return Err(integrity(
                    &field,
                    format!("expected {dim} values, found {}", row.len()),
                ));
            }
            weights.extend(row);
        }
        let som = SomModel::with_meta(weights, dim, meta)
            .map_err(|e| integrity("SOM.w", e.to_string()))?;

        let Some((train_rows, norm)) = pipeline_parts else {
            r.finish()?;
            return Ok(ModelFile::Som(som));
        };
        if norm.dim() != dim {
            return Err(integrity("NORM.center", "dimension differs from the map"));
        }

        r.section("AR")?;
        let lag: usize = r.parse("AR.lag")?;
        let intercept = r.float("AR.intercept")?;
        let coefficients = r.floats("AR.coefficients")?;
        if coefficients.len() != lag {
            return Err(integrity(
                "AR.coefficients",
                format!("expected {lag} values"),
            ));
        }
        let ridge: bool = r.parse("AR.ridge")?;
        let forecaster = ForecastModel::new(intercept, coefficients, ridge)
            .map_err(|e| integrity("AR.coefficients", e.to_string()))?;

        r.section("ENCODE")?;
        let mode: EncodeMode = r.parse("ENCODE.mode")?;
        let g: usize = r.parse("ENCODE.g")?;
        let beta = r.float("ENCODE.beta")?;
        let baseline_p_max = r.float("ENCODE.baseline_p_max")?;
        r.finish()?;

        let pipeline = CnPipeline {
            som,
            forecaster,
            norm,
            encode: EncodeConfig { mode, g, beta },
            baseline_p_max,
            train_rows,
        };
        pipeline
            .validate()
            .map_err(|e| integrity("ENCODE", e.to_string()))?;
        Ok(ModelFile::Pipeline(pipeline))
    }
}

fn join_floats(values: &[f64]) -> String {
    let mut s = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        let _ = write!(s, "{v:?}");
    }
    s
}

fn integrity(field: &str, message: impl Into<String>) -> Error {
    Error::Integrity {
        field: field.to_string(),
        message: message.into(),
    }
}

struct Reader<'a> {
    lines: std::iter::Peekable<std::str::Lines<'a>>,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            lines: text.lines().peekable(),
        }
    }

    fn next_line(&mut self) -> Option<&'a str> {
        self.lines.next().map(|l| l.strip_suffix('\r').unwrap_or(l))
    }

    fn section(&mut self, name: &str) -> Result<()> {
        match self.next_line() {
            Some(l) if l.trim() == format!("[{name}]") => Ok(()),
            _ => Err(integrity(name, format!("missing section [{name}]"))),
        }
    }

    /// Reads `key = value`, where `key` is the last dotted part of `field`.
    fn key(&mut self, field: &str) -> Result<&'a str> {
        let key = field.rsplit('.').next().unwrap_or(field);
        self.key_as(field, key)
    }

    fn key_as(&mut self, field: &str, key: &str) -> Result<&'a str> {
        let line = self
            .next_line()
            .ok_or_else(|| integrity(field, "missing"))?;
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| integrity(field, format!("malformed line `{line}`")))?;
        if k.trim() != key {
            return Err(integrity(
                field,
                format!("expected key `{key}`, found `{}`", k.trim()),
            ));
        }
        Ok(v.trim())
    }

    fn parse<T: FromStr>(&mut self, field: &str) -> Result<T> {
        let raw = self.key(field)?;
        raw.parse()
            .map_err(|_| integrity(field, format!("cannot parse `{raw}`")))
    }

    fn float(&mut self, field: &str) -> Result<f64> {
        let v: f64 = self.parse(field)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(integrity(field, "non-finite value"))
        }
    }

    fn floats(&mut self, field: &str) -> Result<Vec<f64>> {
        let key = field.rsplit('.').next().unwrap_or(field).to_string();
        self.floats_as(field, &key)
    }

    fn floats_as(&mut self, field: &str, key: &str) -> Result<Vec<f64>> {
        let raw = self.key_as(field, key)?;
        raw.split(',')
            .enumerate()
            .map(|(i, cell)| {
                let v: f64 = cell.trim().parse().map_err(|_| {
                    integrity(
                        &format!("{field}[{i}]"),
                        format!("cannot parse `{}`", cell.trim()),
                    )
                })?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(integrity(&format!("{field}[{i}]"), "non-finite value"))
                }
            })
            .collect()
    }

    fn finish(&mut self) -> Result<()> {
        while let Some(l) = self.lines.peek() {
            if l.trim().is_empty() {
                self.lines.next();
            } else {
                return Err(integrity("trailer", format!("unexpected line `{l}`")));
            }
        }
        Ok(())
    }
}

pub fn save_model(model: &ModelFile, path: impl AsRef<Path>) -> Result<()> {
    super::write_atomic(path.as_ref(), model.to_text().as_bytes())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelFile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ModelFile::from_text(&text)
}
