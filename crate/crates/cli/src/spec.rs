//! Loss specification files.
//!
//! ```json
//! {"name": "swapped_log", "n": 2, "kind": "dsl", "exprs": ["-ln(1-t1)", "-ln(t1)"]}
//! {"name": "brier3", "kind": "builtin", "params": {"loss": "brier", "n": 3}}
//! {"name": "half_log", "kind": "derived", "params": {"op": "scale", "of": "log", "a": 0.5}}
//! ```
//!
//! Operands of derived losses (`of`, `outer`, `inner`) are builtin names or
//! nested specs.

use std::collections::BTreeMap;
use std::path::Path;

use mixgeo::losses::{self, builtin, from_dsl, Loss};
use serde::Deserialize;
use serde_json::Value;

#[derive(Debug, thiserror::Error)]
pub enum SpecError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed spec: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid spec: {0}")]
    Invalid(String),
    #[error(transparent)]
    Loss(#[from] mixgeo::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Builtin,
    Dsl,
    Derived,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossSpec {
    pub name: String,
    #[serde(default)]
    pub n: Option<usize>,
    pub kind: Kind,
    #[serde(default)]
    pub exprs: Vec<String>,
    #[serde(default)]
    pub params: serde_json::Map<String, Value>,
}

pub fn load(path: &Path) -> Result<Loss, SpecError> {
    let text = std::fs::read_to_string(path).map_err(|source| SpecError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let spec: LossSpec = serde_json::from_str(&text)?;
    build(&spec)
}

pub fn build(spec: &LossSpec) -> Result<Loss, SpecError> {
    let loss = match spec.kind {
        Kind::Builtin => {
            let base = match spec.params.get("loss") {
                Some(Value::String(s)) => s.clone(),
                Some(other) => return Err(SpecError::Invalid(format!("params.loss must be a string, got {other}"))),
                None => spec.name.clone(),
            };
            let n = match (spec.n, spec.params.get("n")) {
                (_, Some(v)) => {
                    let k = v.as_f64().ok_or_else(|| SpecError::Invalid("params.n must be a number".into()))?;
                    if let Some(top) = spec.n {
                        if top as f64 != k {
                            return Err(SpecError::Invalid(format!("n = {top} but params.n = {k}")));
                        }
                    }
                    k
                }
                (Some(n), None) => n as f64,
                (None, None) => 2.0,
            };
            builtin(&base, &BTreeMap::from([("n".to_string(), n)]))?
        }
        Kind::Dsl => {
            let n = spec.n.unwrap_or(spec.exprs.len());
            from_dsl(&spec.exprs, n)?
        }
        Kind::Derived => derived(&spec.params, spec.n)?,
    };
    if let Some(n) = spec.n {
        if loss.n() != n {
            return Err(SpecError::Invalid(format!("spec declares n = {n}, loss has n = {}", loss.n())));
        }
    }
    Ok(loss.with_name(spec.name.clone()))
}

fn derived(params: &serde_json::Map<String, Value>, n: Option<usize>) -> Result<Loss, SpecError> {
    let op = params
        .get("op")
        .and_then(Value::as_str)
        .ok_or_else(|| SpecError::Invalid("derived spec needs params.op".into()))?;
    let operand_key = |key: &str| -> Result<Loss, SpecError> {
        match params.get(key) {
            Some(v) => operand(v, n),
            None => Err(SpecError::Invalid(format!("op '{op}' needs params.{key}"))),
        }
    };
    let number = |key: &str| -> Result<f64, SpecError> {
        params
            .get(key)
            .and_then(Value::as_f64)
            .ok_or_else(|| SpecError::Invalid(format!("op '{op}' needs numeric params.{key}")))
    };
    Ok(match op {
        "scale" => losses::scale(&operand_key("of")?, number("a")?)?,
        "translate" => {
            let c: Vec<f64> = serde_json::from_value(params.get("c").cloned().unwrap_or(Value::Null))
                .map_err(|_| SpecError::Invalid("op 'translate' needs params.c as a number array".into()))?;
            losses::translate(&operand_key("of")?, &c)?
        }
        "add" => {
            let terms = params
                .get("of")
                .and_then(Value::as_array)
                .filter(|a| a.len() >= 2)
                .ok_or_else(|| SpecError::Invalid("op 'add' needs params.of with at least two operands".into()))?;
            let mut acc = operand(&terms[0], n)?;
            for t in &terms[1..] {
                acc = losses::add(&acc, &operand(t, n)?)?;
            }
            acc
        }
        "residual" => losses::residual(&operand_key("outer")?, &operand_key("inner")?, number("eta")?)?,
        other => return Err(SpecError::Invalid(format!("unknown op '{other}'"))),
    })
}

fn operand(v: &Value, n: Option<usize>) -> Result<Loss, SpecError> {
    match v {
        Value::String(name) => Ok(losses::builtin_n(name, n.unwrap_or(2))?),
        Value::Object(_) => {
            let mut spec: LossSpec = serde_json::from_value(v.clone())?;
            if spec.n.is_none() {
                spec.n = n;
            }
            build(&spec)
        }
        other => Err(SpecError::Invalid(format!("operand must be a name or a spec, got {other}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<Loss, SpecError> {
        build(&serde_json::from_str(s).unwrap())
    }

    #[test]
    fn builtin_specs() {
        let l = parse(r#"{"name": "brier", "n": 3, "kind": "builtin"}"#).unwrap();
        assert_eq!((l.name(), l.n()), ("brier", 3));
        let l = parse(r#"{"name": "b", "kind": "builtin", "params": {"loss": "log", "n": 4}}"#).unwrap();
        assert_eq!((l.name(), l.n()), ("b", 4));
        assert!(parse(r#"{"name": "nope", "kind": "builtin"}"#).is_err());
        assert!(parse(r#"{"name": "log", "n": 3, "kind": "builtin", "params": {"n": 4}}"#).is_err());
    }

    #[test]
    fn dsl_and_derived_specs() {
        let l = parse(r#"{"name": "sw", "n": 2, "kind": "dsl", "exprs": ["-ln(1-t1)", "-ln(t1)"]}"#).unwrap();
        assert_eq!(l.values(&[0.25]).unwrap()[1], -(0.25f64).ln());
        let half = parse(r#"{"name": "h", "kind": "derived", "params": {"op": "scale", "of": "log", "a": 0.5}}"#).unwrap();
        assert!((half.values(&[0.5]).unwrap()[0] - 0.5 * 2f64.ln()).abs() < 1e-15);
        let sum = parse(
            r#"{"name": "s", "kind": "derived", "params": {"op": "add", "of": ["log", {"name": "brier", "kind": "builtin"}]}}"#,
        )
        .unwrap();
        assert!((sum.values(&[0.5]).unwrap()[0] - (2f64.ln() + 0.5)).abs() < 1e-14);
        let tr = parse(r#"{"name": "t", "kind": "derived", "params": {"op": "translate", "of": "log", "c": [1, 2]}}"#)
            .unwrap();
        assert!((tr.values(&[0.5]).unwrap()[1] - (2f64.ln() + 2.0)).abs() < 1e-14);
        assert!(parse(r#"{"name": "x", "kind": "derived", "params": {"op": "rotate"}}"#).is_err());
    }

    #[test]
    fn parse_errors_surface() {
        let e = parse(r#"{"name": "bad", "n": 2, "kind": "dsl", "exprs": ["ln(", "t1"]}"#).unwrap_err();
        assert!(matches!(e, SpecError::Loss(mixgeo::Error::Parse { .. })), "{e}");
        assert!(serde_json::from_str::<LossSpec>(r#"{"name": "x", "kind": "dsl", "extra": 1}"#).is_err());
    }
}
