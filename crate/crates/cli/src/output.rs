//! Human, CSV and JSON-lines rendering of flat records.

use clap::ValueEnum;
use serde_json::{Map, Value};

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Human,
    Csv,
    JsonLines,
}

pub type Record = Map<String, Value>;

fn cell(v: &Value) -> String {
    let s = match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Array(xs) => xs.iter().map(cell).collect::<Vec<_>>().join(" "),
        other => other.to_string(),
    };
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s
    }
}

/// CSV with the union of keys in first-seen order.
pub fn csv(records: &[Record]) -> String {
    let mut keys: Vec<&String> = Vec::new();
    for r in records {
        for k in r.keys() {
            if !keys.contains(&k) {
                keys.push(k);
            }
        }
    }
    let mut out = keys.iter().map(|k| k.as_str()).collect::<Vec<_>>().join(",");
    out.push('\n');
    for r in records {
        let row: Vec<String> = keys
            .iter()
            .map(|k| r.get(k.as_str()).map(cell).unwrap_or_default())
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn json_lines(records: &[Record]) -> String {
    records
        .iter()
        .map(|r| format!("{}\n", Value::Object(r.clone())))
        .collect()
}

/// Renders `human` or the records, depending on `format`.
pub fn render(format: Format, human: &str, records: &[Record]) -> String {
    match format {
        Format::Human => human.to_string(),
        Format::Csv => csv(records),
        Format::JsonLines => json_lines(records),
    }
}
