//! Canonical JSON reports: sorted keys, rationals as `p/q` strings, fixed array order.

use serde_json::{Map, Value};

use crate::check::CheckReport;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub config: Value,
    pub stages: Vec<Value>,
    pub checks: CheckReport,
    pub metrics: Map<String, Value>,
}

impl Report {
    pub fn new(config: Value) -> Self {
        Report { config, ..Default::default() }
    }

    pub fn passed(&self) -> bool {
        self.checks.all_passed()
    }

    pub fn to_value(&self) -> Value {
        let mut top = Map::new();
        top.insert("config".into(), self.config.clone());
        top.insert("stages".into(), Value::Array(self.stages.clone()));
        top.insert("checks".into(), serde_json::to_value(&self.checks).expect("checks serialize"));
        top.insert("metrics".into(), Value::Object(self.metrics.clone()));
        top.insert("tool_version".into(), Value::String(TOOL_VERSION.into()));
        Value::Object(top)
    }
}

/// Pretty-printed with a trailing newline. Object keys come out sorted because
/// `serde_json::Map` is ordered.
pub fn emit_report(report: &Report) -> String {
    canonical_json(&report.to_value())
}

pub fn canonical_json(value: &Value) -> String {
    // round-trip through Value so struct field order never leaks into the output
    let v: Value = serde_json::from_str(&value.to_string()).expect("valid json");
    let mut s = serde_json::to_string_pretty(&v).expect("serializable");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn empty_checks_is_valid_document() {
        let r = Report::new(json!({ "k": 2 }));
        let text = emit_report(&r);
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["checks"], json!([]));
        assert_eq!(v["tool_version"], json!(TOOL_VERSION));
        assert_eq!(v["config"], json!({ "k": 2 }));
    }

    #[test]
    fn keys_are_sorted() {
        let r = Report::new(json!({ "z": 1, "a": 2 }));
        let text = emit_report(&r);
        let keys: Vec<usize> = ["\"checks\"", "\"config\"", "\"metrics\"", "\"stages\"", "\"tool_version\""]
            .iter()
            .map(|k| text.find(k).unwrap())
            .collect();
        assert!(keys.windows(2).all(|w| w[0] < w[1]));
        assert!(text.find("\"a\"").unwrap() < text.find("\"z\"").unwrap());
        assert_eq!(text, emit_report(&r));
    }
}
