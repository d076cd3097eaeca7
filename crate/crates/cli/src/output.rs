//! Report emission: JSON with fixed 17-significant-digit float formatting
//! (byte-identical output for identical inputs) and small CSV helpers.

use std::io::{self, Write};

use nalgebra::DMatrix;
use serde_json::ser::Formatter;
use serde_json::{Map, Value};

use crate::error::CliError;

/// Formatter printing every float with 17 significant digits in scientific
/// notation, independent of the value's shortest representation.
struct SigDigits;

impl Formatter for SigDigits {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Serializes a JSON value with the fixed float format and a trailing
/// newline.
pub fn to_json_string(value: &Value) -> Result<String, CliError> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigDigits);
    serde::Serialize::serialize(value, &mut ser)
        .map_err(|e| CliError::Io(format!("json serialization: {e}")))?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| CliError::Io(e.to_string()))
}

/// Finite-checked number value; reports are required to be finite.
pub fn num(value: f64) -> Value {
    assert!(value.is_finite(), "report values must be finite: {value}");
    Value::from(value)
}

pub fn opt_num(value: Option<f64>) -> Value {
    value.map(num).unwrap_or(Value::Null)
}

pub fn vec_f64(values: &[f64]) -> Value {
    Value::Array(values.iter().map(|v| num(*v)).collect())
}

pub fn matrix(m: &DMatrix<f64>) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| num(m[(i, j)])).collect()))
            .collect(),
    )
}

/// Rank-3 array `[k][i][j]` flattened with stride `dim`.
pub fn cube(values: &[f64], dim: usize) -> Value {
    Value::Array(
        (0..dim)
            .map(|k| {
                Value::Array(
                    (0..dim)
                        .map(|i| {
                            Value::Array(
                                (0..dim)
                                    .map(|j| num(values[(k * dim + i) * dim + j]))
                                    .collect(),
                            )
                        })
                        .collect(),
                )
            })
            .collect(),
    )
}

/// Top-level report envelope shared by every command.
pub fn envelope(command: &str, inputs: Value, results: Value, residuals: Value) -> Value {
    let mut map = Map::new();
    map.insert("command".into(), Value::from(command));
    map.insert("inputs".into(), inputs);
    map.insert("results".into(), results);
    map.insert("residuals".into(), residuals);
    map.insert("version".into(), Value::from(env!("CARGO_PKG_VERSION")));
    Value::Object(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn float_formatting_is_fixed_width() {
        let v = json!({"x": 0.15, "y": 6.0});
        let s = to_json_string(&v).unwrap();
        assert!(s.contains("1.4999999999999999e-1"), "{s}");
        assert!(s.contains("6.0000000000000000e0"), "{s}");
        // 17 significant digits round-trip exactly
        let parsed: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(parsed["x"].as_f64().unwrap(), 0.15);
        assert_eq!(parsed["y"].as_f64().unwrap(), 6.0);
    }

    #[test]
    fn output_is_deterministic() {
        let v = json!({"b": [1.0, 2.5], "a": {"k": 0.1}});
        assert_eq!(to_json_string(&v).unwrap(), to_json_string(&v).unwrap());
    }
}
