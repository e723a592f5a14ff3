//! Artifact writers: deterministic JSON (floats at 17 significant digits),
//! CSV ingestion of emitted profiles, and atomic file writes.

use ricciwarp_core::regularity::RegularityReport;
use ricciwarp_core::ricci_oracle::ResidualReport;
use ricciwarp_core::solution::ScalingSolution;
use ricciwarp_core::tensor::ValidationReport;
use serde_json::ser::Formatter;
use serde_json::Value;
use std::io;
use std::path::Path;

/// serde_json formatter writing every float with 17 significant digits so
/// identical runs produce byte-identical artifacts and values round-trip
/// exactly through the text form.
struct Fixed17;

impl Formatter for Fixed17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }
}

pub fn to_json_string(v: &Value) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Fixed17);
    serde::Serialize::serialize(v, &mut ser).expect("serializing report");
    out.push(b'\n');
    String::from_utf8(out).expect("json is utf8")
}

/// Writes via a temp file in the same directory plus rename, so concurrent
/// sweep workers never expose partial artifacts.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)
}

fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map(Value::Number).unwrap_or(Value::Null)
}

pub fn validation_json(rep: &ValidationReport) -> Value {
    let conditions: Vec<Value> = rep
        .checks
        .iter()
        .map(|c| {
            serde_json::json!({
                "name": c.name,
                "value": num(c.value),
                "pass": c.pass,
            })
        })
        .collect();
    serde_json::json!({ "pass": rep.pass, "conditions": conditions })
}

/// The residual block with the keys the wire format pins.
pub fn residual_json(rep: &ResidualReport) -> Value {
    serde_json::json!({
        "sup_r0": num(rep.sup_r0),
        "sup_r1": num(rep.sup_r1),
        "sup_r2": num(rep.sup_r2),
        "sigma_max_dev": num(rep.sigma_max_dev),
        "grid_n": rep.grid_n,
    })
}

/// One key per smoothness condition plus the z1 tail samples.
pub fn regularity_json(rep: &RegularityReport) -> Value {
    let mut obj = serde_json::Map::new();
    for c in &rep.conditions {
        obj.insert(
            c.name.to_string(),
            serde_json::json!({ "value": num(c.value), "pass": c.pass }),
        );
    }
    obj.insert("pass".into(), Value::Bool(rep.pass));
    let tail: Vec<Value> = rep
        .endpoint
        .z1_tail
        .iter()
        .map(|&(t, z)| Value::Array(vec![num(t), num(z)]))
        .collect();
    obj.insert("z1_tail".into(), Value::Array(tail));
    Value::Object(obj)
}

pub fn solution_json(sol: &ScalingSolution, residual_pass: bool) -> Value {
    serde_json::json!({
        "c1": num(sol.c1),
        "c2": num(sol.c2),
        "gamma": num(sol.gamma),
        "a": num(sol.a),
        "S": num(sol.s),
        "c1_hat": num(sol.c1_hat),
        "residuals": {
            "sup_r0": num(sol.residuals.sup_r0),
            "sup_r1": num(sol.residuals.sup_r1),
            "sup_r2": num(sol.residuals.sup_r2),
            "sigma_max_dev": num(sol.residuals.sigma_max_dev),
            "grid_n": sol.residuals.grid_n,
        },
        "residual_pass": residual_pass,
        "regularity_pass": sol.regularity.pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_through_seventeen_digits() {
        let x = std::f64::consts::PI * 2.0e-7;
        let v = serde_json::json!({ "x": num(x) });
        let s = to_json_string(&v);
        assert!(s.contains("e-7"));
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["x"].as_f64().unwrap().to_bits(), x.to_bits());
    }
}
