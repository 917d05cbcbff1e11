//! Measure-spec JSON.
//!
//! ```json
//! {"kind": "tilted_power", "c": 0.28209479177387814, "alpha": 1.5, "beta": 1}
//! {"kind": "tabulated", "points": [[0.001, 3.2], [0.01, 0.9]], "left_exponent": 1.5, "tilt_rate": 1}
//! ```
//!
//! Parsing is strict: unknown keys, missing keys and non-numeric values are
//! rejected with the offending key in the message.

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use strictjump_core::{LevyMeasureSpec, Measure};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpecError {
    #[error("malformed JSON: {0}")]
    Syntax(String),
    #[error("key `{key}`: {reason}")]
    Key { key: String, reason: String },
}

fn key_error(key: impl Into<String>, reason: impl Into<String>) -> SpecError {
    SpecError::Key {
        key: key.into(),
        reason: reason.into(),
    }
}

pub fn parse_spec(text: &str) -> Result<LevyMeasureSpec, SpecError> {
    let value: Value = serde_json::from_str(text).map_err(|e| SpecError::Syntax(e.to_string()))?;
    spec_from_value(&value)
}

/// Structural parse followed by the measure's own shape check, whose
/// parameter names match the JSON keys.
pub fn spec_from_value(value: &Value) -> Result<LevyMeasureSpec, SpecError> {
    let obj = value.as_object().ok_or_else(|| key_error("<root>", "expected a JSON object"))?;
    let kind = obj
        .get("kind")
        .ok_or_else(|| key_error("kind", "missing"))?
        .as_str()
        .ok_or_else(|| key_error("kind", "expected a string"))?;
    let spec = match kind {
        "tilted_power" => {
            only_keys(obj, &["kind", "c", "alpha", "beta"])?;
            LevyMeasureSpec::TiltedPower {
                c: number(obj, "c")?,
                alpha: number(obj, "alpha")?,
                beta: number(obj, "beta")?,
            }
        }
        "tabulated" => {
            only_keys(obj, &["kind", "points", "left_exponent", "tilt_rate"])?;
            LevyMeasureSpec::Tabulated {
                points: points(obj)?,
                left_exponent: number(obj, "left_exponent")?,
                tilt_rate: number(obj, "tilt_rate")?,
            }
        }
        other => return Err(key_error("kind", format!("unknown kind {other:?}"))),
    };
    match Measure::new(spec.clone()) {
        Ok(_) => Ok(spec),
        Err(strictjump_core::Error::InvalidParameter { name, reason }) => Err(key_error(name, reason)),
        Err(e) => Err(key_error("<spec>", e.to_string())),
    }
}

fn only_keys(obj: &Map<String, Value>, allowed: &[&str]) -> Result<(), SpecError> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(key_error(k.as_str(), "unknown key")),
        None => Ok(()),
    }
}

fn number(obj: &Map<String, Value>, key: &str) -> Result<f64, SpecError> {
    obj.get(key)
        .ok_or_else(|| key_error(key, "missing"))?
        .as_f64()
        .ok_or_else(|| key_error(key, "expected a number"))
}

fn points(obj: &Map<String, Value>) -> Result<Vec<(f64, f64)>, SpecError> {
    let arr = obj
        .get("points")
        .ok_or_else(|| key_error("points", "missing"))?
        .as_array()
        .ok_or_else(|| key_error("points", "expected an array of [xi, density] pairs"))?;
    arr.iter()
        .enumerate()
        .map(|(i, p)| {
            let pair = p
                .as_array()
                .filter(|a| a.len() == 2)
                .ok_or_else(|| key_error(format!("points[{i}]"), "expected a [xi, density] pair"))?;
            let get = |j: usize| pair[j].as_f64().ok_or_else(|| key_error(format!("points[{i}][{j}]"), "expected a number"));
            Ok((get(0)?, get(1)?))
        })
        .collect()
}

pub fn spec_to_value(spec: &LevyMeasureSpec) -> Value {
    match spec {
        LevyMeasureSpec::TiltedPower { c, alpha, beta } => json!({
            "kind": "tilted_power", "c": c, "alpha": alpha, "beta": beta,
        }),
        LevyMeasureSpec::Tabulated {
            points,
            left_exponent,
            tilt_rate,
        } => json!({
            "kind": "tabulated",
            "points": points.iter().map(|&(x, d)| json!([x, d])).collect::<Vec<_>>(),
            "left_exponent": left_exponent,
            "tilt_rate": tilt_rate,
        }),
    }
}

/// SHA-256 of the canonical (sorted-key, compact) JSON form.
pub fn spec_hash(spec: &LevyMeasureSpec) -> String {
    let canonical = spec_to_value(spec).to_string();
    format!("{:x}", Sha256::digest(canonical.as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let specs = [
            LevyMeasureSpec::tempered_stable_half(),
            LevyMeasureSpec::Tabulated {
                points: vec![(0.1, 2.0), (1.0, 0.5), (3.0, 0.01)],
                left_exponent: 0.5,
                tilt_rate: 2.0,
            },
        ];
        for spec in specs {
            let text = spec_to_value(&spec).to_string();
            assert_eq!(parse_spec(&text).unwrap(), spec);
        }
    }

    #[test]
    fn errors_name_the_key() {
        let cases = [
            (r#"{"c": 1, "alpha": 1.5, "beta": 1}"#, "kind"),
            (r#"{"kind": "tilted_power", "c": 1, "alpha": 1.5}"#, "beta"),
            (r#"{"kind": "tilted_power", "c": "x", "alpha": 1.5, "beta": 1}"#, "c"),
            (r#"{"kind": "tilted_power", "c": 1, "alpha": 1.5, "beta": 1, "gamma": 2}"#, "gamma"),
            (r#"{"kind": "tilted_power", "c": 1, "alpha": 2.5, "beta": 1}"#, "alpha"),
            (r#"{"kind": "tabulated", "points": [[1, 2], [3]], "left_exponent": 0, "tilt_rate": 2}"#, "points[1]"),
            (r#"{"kind": "tabulated", "points": [[1, 2], [3, null]], "left_exponent": 0, "tilt_rate": 2}"#, "points[1][1]"),
        ];
        for (text, key) in cases {
            match parse_spec(text) {
                Err(SpecError::Key { key: k, .. }) => assert_eq!(k, key, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
        assert!(matches!(parse_spec("{\"kind\": "), Err(SpecError::Syntax(_))));
    }

    #[test]
    fn hash_is_stable_and_discriminating() {
        let a = LevyMeasureSpec::tempered_stable_half();
        let b = LevyMeasureSpec::normalized(1.25).unwrap();
        assert_eq!(spec_hash(&a), spec_hash(&a.clone()));
        assert_ne!(spec_hash(&a), spec_hash(&b));
        assert_eq!(spec_hash(&a).len(), 64);
    }
}
