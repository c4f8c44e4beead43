//! Number formatting for machine-readable output.

use serde::Serialize;
use serde_json::{Map, Value};

use crate::oracles::BoundReport;
use crate::tightness::{ellipsoid_semiaxes, AlphaSolution};

pub const SCHEMA_VERSION: u32 = 1;
/// Significant digits in JSON reports.
pub const JSON_DIGITS: usize = 15;

/// Rounds to `digits` significant digits. Non-finite values pass through.
pub fn round_significant(x: f64, digits: usize) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", digits.saturating_sub(1), x).parse().unwrap_or(x)
}

/// Shortest decimal text of `x` rounded to `digits` significant digits.
/// Negative zero prints as `0`.
pub fn format_significant(x: f64, digits: usize) -> String {
    let r = round_significant(x, digits);
    if r == 0.0 {
        "0".to_string()
    } else {
        r.to_string()
    }
}

/// Rounds every float in a JSON tree in place.
pub fn round_json(v: &mut Value, digits: usize) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            let r = round_significant(x, digits);
            *v = serde_json::Number::from_f64(if r == 0.0 { 0.0 } else { r }).map_or(Value::Null, Value::Number);
        }
        Value::Array(items) => items.iter_mut().for_each(|i| round_json(i, digits)),
        Value::Object(map) => map.values_mut().for_each(|i| round_json(i, digits)),
        _ => {}
    }
}

/// Wraps a payload as `{"schema_version": 1, "command": .., ...payload}` with
/// floats rounded to [`JSON_DIGITS`].
pub fn envelope<T: Serialize>(command: &str, payload: &T) -> Value {
    let mut map = Map::new();
    map.insert("schema_version".into(), SCHEMA_VERSION.into());
    map.insert("command".into(), command.into());
    match serde_json::to_value(payload).expect("report serializes") {
        Value::Object(fields) => map.extend(fields),
        other => {
            map.insert("result".into(), other);
        }
    }
    let mut v = Value::Object(map);
    round_json(&mut v, JSON_DIGITS);
    v
}

fn rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Serializable view of an [`AlphaSolution`].
#[derive(Debug, Serialize)]
pub struct AlphaView {
    pub x_matrix: Vec<Vec<f64>>,
    pub alpha: Vec<Vec<f64>>,
    pub rank_dprime: usize,
    pub residual: f64,
    pub eigenvalues: Vec<f64>,
    pub ellipsoid_semi_axes: Vec<crate::tightness::SemiAxis>,
}

impl From<&AlphaSolution> for AlphaView {
    fn from(s: &AlphaSolution) -> Self {
        Self {
            x_matrix: rows(&s.x_matrix),
            alpha: rows(&s.alpha),
            rank_dprime: s.rank_dprime,
            residual: s.residual,
            eigenvalues: s.eigenvalues.clone(),
            ellipsoid_semi_axes: ellipsoid_semiaxes(s).semi_axes,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct BoundView {
    pub m1: usize,
    pub m2: usize,
    pub classical: f64,
    pub sv_bound: f64,
    pub seesaw_lower: f64,
    pub seesaw_dim: usize,
    pub gap: f64,
    pub degeneracy: usize,
    pub tight: bool,
    pub alpha: Option<AlphaView>,
}

impl BoundView {
    pub fn new(m1: usize, m2: usize, r: &BoundReport) -> Self {
        Self {
            m1,
            m2,
            classical: r.classical,
            sv_bound: r.sv_bound,
            seesaw_lower: r.seesaw_lower,
            seesaw_dim: r.seesaw_dim,
            gap: r.gap,
            degeneracy: r.degeneracy,
            tight: r.tight_certified,
            alpha: r.alpha.as_ref().map(AlphaView::from),
        }
    }
}
