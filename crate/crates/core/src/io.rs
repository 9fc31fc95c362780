//! JSON files for curves, velocity fields and paths.
//!
//! ```json
//! {"manifold": {"kind": "sphere", "dim": 2, "radius": 1.0},
//!  "domain": {"topology": "closed", "samples": 64},
//!  "points": [[1.0, 0.0, 0.0], ...]}
//! ```
//!
//! A velocity file is `{"vectors": [[...], ...]}` with one ambient vector per
//! node of the curve it belongs to. A path file is
//! `{"metric": {...}, "curves": [curve, ...], "times": [...]}`, where `times`
//! is optional (uniform on `[0, 1]` when absent) and extra top-level keys
//! (`header`, `summary`, ...) written by the command-line tool are ignored.
//!
//! Numbers are written in shortest round-trip form, so points re-load
//! bit-identically.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::curve::{DiscreteCurve, Domain, VectorField};
use crate::error::{Error, Result};
use crate::manifold::ManifoldSpec;
use crate::metric::{CurvePath, MetricSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveFile {
    pub manifold: ManifoldSpec,
    pub domain: Domain,
    pub points: Vec<Vec<f64>>,
}

impl CurveFile {
    pub fn of(c: &DiscreteCurve) -> Self {
        CurveFile { manifold: c.manifold().clone(), domain: *c.domain(), points: c.points().to_vec() }
    }

    /// Validates the curve, naming the offending field on failure.
    pub fn into_curve(self) -> Result<DiscreteCurve> {
        self.manifold.validate().map_err(|e| field_error("manifold", e))?;
        self.domain.validate().map_err(|e| field_error("domain", e))?;
        let d = self.manifold.ambient_dim();
        if let Some(i) = self.points.iter().position(|p| p.len() != d) {
            return Err(Error::Parse(format!("points[{i}]: expected {d} ambient coordinates, found {}", self.points[i].len())));
        }
        DiscreteCurve::new(self.manifold, self.domain, self.points).map_err(|e| field_error("points", e))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VelocityFile {
    pub vectors: Vec<Vec<f64>>,
}

impl VelocityFile {
    pub fn of(h: &VectorField) -> Self {
        VelocityFile { vectors: h.vectors().to_vec() }
    }

    pub fn into_field(self, c: &DiscreteCurve) -> Result<VectorField> {
        c.field(self.vectors).map_err(|e| field_error("vectors", e))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PathFile {
    pub metric: MetricSpec,
    pub curves: Vec<CurveFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
}

impl PathFile {
    pub fn of(metric: &MetricSpec, path: &CurvePath) -> Self {
        PathFile {
            metric: metric.clone(),
            curves: path.curves().iter().map(CurveFile::of).collect(),
            times: Some(path.times().to_vec()),
        }
    }

    pub fn into_path(self) -> Result<(MetricSpec, CurvePath)> {
        let curves = self
            .curves
            .into_iter()
            .enumerate()
            .map(|(j, c)| c.into_curve().map_err(|e| field_error(&format!("curves[{j}]"), e)))
            .collect::<Result<Vec<_>>>()?;
        let path = match self.times {
            Some(t) => CurvePath::with_times(curves, t),
            None => CurvePath::new(curves),
        }
        .map_err(|e| field_error("path", e))?;
        Ok((self.metric, path))
    }
}

fn field_error(field: &str, e: Error) -> Error {
    Error::Parse(format!("{field}: {e}"))
}

/// Parses JSON, reporting line and column of syntax or schema errors.
pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable value")
}

/// Reads and parses a JSON file; errors are prefixed with the path.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    from_json(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn read_curve(path: &Path) -> Result<DiscreteCurve> {
    read_json::<CurveFile>(path)?.into_curve().map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn read_metric(path: &Path) -> Result<MetricSpec> {
    read_json(path)
}

pub fn read_path(path: &Path) -> Result<(MetricSpec, CurvePath)> {
    read_json::<PathFile>(path)?.into_path().map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}
