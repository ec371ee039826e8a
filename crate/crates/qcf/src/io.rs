//! JSON documents for spaces, arcs and circles.
//!
//! Floats are written with 17 significant digits so every value reads back
//! to the same bits.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use qcf_core::arc::{DiscreteArc, DiscreteCircle};
use qcf_core::space::{Metric, MetricSpace, PointId, SpaceError};
use serde_json::{Map, Number, Value};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{path}: invalid JSON: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("schema: {0}")]
    Schema(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("curve: {0}")]
    Curve(#[from] qcf_core::arc::ArcError),
    #[error("curve belongs to space {found}, not {expected}")]
    SpaceRef { expected: String, found: String },
}

fn schema(msg: impl Into<String>) -> IoError {
    IoError::Schema(msg.into())
}

/// A JSON number with 17 significant digits; `null` when not finite.
pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    Value::Number(Number::from_str(&format!("{x:.16e}")).expect("formatted float is a JSON number"))
}

pub fn read_json(path: &Path) -> Result<Value, IoError> {
    let text = fs::read_to_string(path).map_err(|source| IoError::Read { path: path.to_owned(), source })?;
    serde_json::from_str(&text).map_err(|source| IoError::Json { path: path.to_owned(), source })
}

pub fn to_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s
}

pub fn write_json(path: &Path, v: &Value) -> Result<(), IoError> {
    fs::write(path, to_text(v)).map_err(|source| IoError::Write { path: path.to_owned(), source })
}

fn coords_json(space: &MetricSpace) -> Value {
    match space.coords() {
        Some(c) => Value::Array(c.iter().map(|p| Value::Array(vec![num(p[0]), num(p[1])])).collect()),
        None => Value::Null,
    }
}

/// The space document. Graph metrics keep their edge list; a table without
/// one is written in full; euclidean spaces store only coordinates.
pub fn space_to_json(space: &MetricSpace) -> Value {
    let mut m = Map::new();
    m.insert("n".into(), Value::from(space.len()));
    m.insert("mesh_h".into(), num(space.mesh_h()));
    let scale = space.scale();
    let euclidean = matches!(space.metric(), Metric::Euclidean);
    if euclidean && scale == 1.0 {
        m.insert("coords".into(), coords_json(space));
        m.insert("metric".into(), Value::from("euclidean"));
    } else if let Some(edges) = space.graph_edges() {
        m.insert("coords".into(), coords_json(space));
        m.insert("metric".into(), Value::from("graph"));
        let e = edges
            .iter()
            .map(|&(a, b, w)| Value::Array(vec![Value::from(a), Value::from(b), num(w * scale)]))
            .collect();
        m.insert("edges".into(), Value::Array(e));
    } else {
        m.insert("coords".into(), coords_json(space));
        m.insert("metric".into(), Value::from("explicit"));
        let n = space.len();
        let mut dist = Vec::with_capacity(n * n);
        for a in space.points() {
            for b in space.points() {
                dist.push(num(space.dist(a, b)));
            }
        }
        m.insert("dist".into(), Value::Array(dist));
    }
    Value::Object(m)
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value, IoError> {
    v.get(key).ok_or_else(|| schema(format!("missing field \"{key}\"")))
}

fn as_f64(v: &Value, what: &str) -> Result<f64, IoError> {
    v.as_f64().ok_or_else(|| schema(format!("{what} must be a number")))
}

fn as_usize(v: &Value, what: &str) -> Result<usize, IoError> {
    v.as_u64().map(|x| x as usize).ok_or_else(|| schema(format!("{what} must be a non-negative integer")))
}

fn as_array<'a>(v: &'a Value, what: &str) -> Result<&'a Vec<Value>, IoError> {
    v.as_array().ok_or_else(|| schema(format!("{what} must be an array")))
}

/// Reads and validates a space document (metric axioms, step graph).
pub fn space_from_json(v: &Value) -> Result<MetricSpace, IoError> {
    let n = as_usize(field(v, "n")?, "n")?;
    let mesh = as_f64(field(v, "mesh_h")?, "mesh_h")?;
    let coords = match v.get("coords") {
        None | Some(Value::Null) => None,
        Some(c) => {
            let mut out = Vec::new();
            for p in as_array(c, "coords")? {
                let p = as_array(p, "coordinate")?;
                if p.len() != 2 {
                    return Err(schema("coordinates must be [x, y] pairs"));
                }
                out.push([as_f64(&p[0], "x")?, as_f64(&p[1], "y")?]);
            }
            Some(out)
        }
    };
    let metric = field(v, "metric")?.as_str().ok_or_else(|| schema("metric must be a string"))?;
    let space = match metric {
        "euclidean" => {
            let c = coords.ok_or(SpaceError::MissingCoords)?;
            if c.len() != n {
                return Err(SpaceError::CoordsSize { expected: n, got: c.len() }.into());
            }
            MetricSpace::euclidean(c, mesh)?
        }
        "explicit" => {
            let d = as_array(field(v, "dist")?, "dist")?;
            let table = d.iter().map(|x| as_f64(x, "distance")).collect::<Result<Vec<_>, _>>()?;
            MetricSpace::from_table(n, mesh, coords, table)?
        }
        "graph" => {
            let mut edges = Vec::new();
            for e in as_array(field(v, "edges")?, "edges")? {
                let e = as_array(e, "edge")?;
                if e.len() != 3 {
                    return Err(schema("edges must be [a, b, w] triples"));
                }
                edges.push((as_usize(&e[0], "edge end")?, as_usize(&e[1], "edge end")?, as_f64(&e[2], "edge weight")?));
            }
            MetricSpace::from_graph(n, mesh, coords, &edges)?
        }
        other => return Err(schema(format!("unknown metric \"{other}\""))),
    };
    space.validate(0)?;
    Ok(space)
}

pub fn load_space(path: &Path) -> Result<MetricSpace, IoError> {
    space_from_json(&read_json(path)?)
}

/// Content fingerprint of a space document (FNV-1a, hex).
pub fn space_ref(space: &MetricSpace) -> String {
    let text = serde_json::to_string(&space_to_json(space)).expect("values serialize");
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    format!("{h:016x}")
}

/// An arc or circle as stored on disk.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveDoc {
    pub space_ref: String,
    pub points: Vec<PointId>,
    pub cyclic: bool,
}

impl CurveDoc {
    pub fn arc(space_ref: &str, arc: &DiscreteArc) -> Self {
        CurveDoc { space_ref: space_ref.to_owned(), points: arc.points().to_vec(), cyclic: false }
    }

    pub fn circle(space_ref: &str, c: &DiscreteCircle) -> Self {
        CurveDoc { space_ref: space_ref.to_owned(), points: c.points().to_vec(), cyclic: true }
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("space_ref".into(), Value::from(self.space_ref.clone()));
        m.insert("points".into(), Value::Array(self.points.iter().map(|p| Value::from(p.0)).collect()));
        m.insert("cyclic".into(), Value::from(self.cyclic));
        Value::Object(m)
    }

    pub fn from_json(v: &Value) -> Result<Self, IoError> {
        let space_ref = field(v, "space_ref")?.as_str().ok_or_else(|| schema("space_ref must be a string"))?.to_owned();
        let points = as_array(field(v, "points")?, "points")?
            .iter()
            .map(|p| as_usize(p, "point").map(PointId))
            .collect::<Result<Vec<_>, _>>()?;
        let cyclic = field(v, "cyclic")?.as_bool().ok_or_else(|| schema("cyclic must be a boolean"))?;
        Ok(CurveDoc { space_ref, points, cyclic })
    }

    /// Checks the space reference and that every point exists.
    pub fn check_space(&self, space: &MetricSpace) -> Result<(), IoError> {
        let expected = space_ref(space);
        if self.space_ref != expected {
            return Err(IoError::SpaceRef { expected, found: self.space_ref.clone() });
        }
        if let Some(p) = self.points.iter().find(|p| p.0 >= space.len()) {
            return Err(schema(format!("point {} outside the space", p.0)));
        }
        Ok(())
    }

    pub fn to_arc(&self, space: &MetricSpace) -> Result<DiscreteArc, IoError> {
        Ok(DiscreteArc::new(space, self.points.clone())?)
    }

    pub fn to_circle(&self, space: &MetricSpace) -> Result<DiscreteCircle, IoError> {
        Ok(DiscreteCircle::new(space, self.points.clone())?)
    }
}

/// Reads a file holding one curve or a `{"curves": [...]}` list.
pub fn load_curves(path: &Path) -> Result<Vec<CurveDoc>, IoError> {
    let v = read_json(path)?;
    match v.get("curves") {
        Some(list) => as_array(list, "curves")?.iter().map(CurveDoc::from_json).collect(),
        None => Ok(vec![CurveDoc::from_json(&v)?]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use qcf_core::space::{grid_square, sierpinski_carpet};

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, std::f64::consts::SQRT_2 / 64.0, 1e-300, 6.02e23] {
            let v = num(x);
            let back = serde_json::from_str::<Value>(&v.to_string()).unwrap().as_f64().unwrap();
            assert_eq!(back.to_bits(), x.to_bits());
        }
        assert_eq!(num(f64::INFINITY), Value::Null);
    }

    #[test]
    fn carpet_saves_as_graph_and_reloads() {
        let s = sierpinski_carpet(1).unwrap();
        let v = space_to_json(&s);
        assert_eq!(v["metric"], "graph");
        let t = space_from_json(&v).unwrap();
        for a in s.points() {
            for b in s.points() {
                assert_eq!(s.dist(a, b), t.dist(a, b));
            }
        }
        assert_eq!(space_ref(&s), space_ref(&t));
    }

    #[test]
    fn scaled_grid_saves_as_explicit() {
        let s = grid_square(3).unwrap().scaled(7.3).unwrap();
        let v = space_to_json(&s);
        assert_eq!(v["metric"], "explicit");
        let t = space_from_json(&v).unwrap();
        assert_eq!(t.mesh_h(), s.mesh_h());
        assert_eq!(t.dist(PointId(0), PointId(15)), s.dist(PointId(0), PointId(15)));
    }

    #[test]
    fn schema_errors_are_named() {
        let v: Value = serde_json::json!({"n": 2, "mesh_h": 1.0, "metric": "explicit", "dist": [0.0, 1.0, 2.0, 0.0]});
        assert!(matches!(space_from_json(&v), Err(IoError::Space(SpaceError::Asymmetric { a: 0, b: 1 }))));
        let v: Value = serde_json::json!({"n": 2, "metric": "explicit"});
        assert!(matches!(space_from_json(&v), Err(IoError::Schema(_))));
    }
}
