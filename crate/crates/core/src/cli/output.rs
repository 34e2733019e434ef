//! Machine-readable output: JSON objects and CSV tables with floats rounded
//! to 12 significant digits.

use clap::ValueEnum;
use serde::Serialize;
use serde_json::{Map, Number, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

/// Rounds to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn round_value(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            Number::from_f64(round_sig(x)).map(Value::Number).unwrap_or(Value::Null)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_value).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_value(v))).collect()),
        other => other,
    }
}

/// Serializes `value` into a rounded JSON tree.
pub fn to_rounded_json<T: Serialize>(value: &T) -> Value {
    round_value(serde_json::to_value(value).expect("report types serialize to JSON"))
}

pub fn json_document<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(&to_rounded_json(value)).expect("JSON tree prints");
    s.push('\n');
    s
}

/// Writes records as CSV with a header row. Records are rounded through
/// [`round_sig`] by the caller.
pub fn csv_table<T: Serialize>(records: &[T]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r).expect("flat records serialize to CSV");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("CSV is UTF-8")
}

fn flatten(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(o) => o.iter().for_each(|(k, v)| flatten(&key(k), v, rows)),
        Value::Array(a) if a.is_empty() => rows.push((prefix.to_string(), String::new())),
        Value::Array(a) => a.iter().enumerate().for_each(|(i, v)| flatten(&key(&i.to_string()), v, rows)),
        Value::Null => rows.push((prefix.to_string(), String::new())),
        Value::String(s) => rows.push((prefix.to_string(), s.clone())),
        other => rows.push((prefix.to_string(), other.to_string())),
    }
}

/// A nested report as a two-column `field,value` CSV table.
pub fn flat_csv<T: Serialize>(value: &T) -> String {
    let mut rows = Vec::new();
    flatten("", &to_rounded_json(value), &mut rows);
    #[derive(Serialize)]
    struct Row<'a> {
        field: &'a str,
        value: &'a str,
    }
    let rows: Vec<Row> = rows.iter().map(|(f, v)| Row { field: f, value: v }).collect();
    csv_table(&rows)
}

/// JSON object with a `rows` array, for tables emitted as JSON.
pub fn json_table<H: Serialize, T: Serialize>(header: &H, key: &str, rows: &[T]) -> String {
    let mut obj = match to_rounded_json(header) {
        Value::Object(o) => o,
        _ => Map::new(),
    };
    obj.insert(key.to_string(), to_rounded_json(&rows));
    json_document(&Value::Object(obj))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_keeps_twelve_digits() {
        assert_eq!(round_sig(4.0 / 7.0), 0.571428571429);
        assert_eq!(round_sig(0.0), 0.0);
        assert_eq!(round_sig(-1.0 / 3.0), -0.333333333333);
        assert_eq!(round_sig(123456789.0123456), 123456789.012);
        assert!(round_sig(f64::NAN).is_nan());
    }

    #[test]
    fn flat_csv_paths() {
        let v = serde_json::json!({"a": {"b": 1.0/3.0}, "c": [true, "x"], "d": null});
        let s = flat_csv(&v);
        assert_eq!(s, "field,value\na.b,0.333333333333\nc.0,true\nc.1,x\nd,\n");
    }
}
