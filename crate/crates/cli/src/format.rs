use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;

/// `printf("%.{prec}g")`: `prec` significant digits, trailing zeros dropped.
pub fn fmt_g(v: f64, prec: usize) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let prec = prec.max(1);
    let sci = format!("{:.*e}", prec - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= prec as i32 {
        format!("{}e{}", strip_zeros(mantissa), exp)
    } else {
        let decimals = (prec as i32 - 1 - exp).max(0) as usize;
        strip_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Round-trip representation used in every data file.
pub fn fmt17(v: f64) -> String {
    fmt_g(v, 17)
}

/// JSON value of a float; non-finite values become the strings
/// `"inf"`, `"-inf"` and `"nan"` since JSON has no literal for them.
pub fn num(v: f64) -> Value {
    if v.is_finite() {
        Value::from(v)
    } else {
        Value::String(fmt_g(v, 17))
    }
}

pub fn nums(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|x| num(*x)).collect())
}

/// Pretty printer that writes every float with 17 significant digits.
struct Digits17(PrettyFormatter<'static>);

impl Formatter for Digits17 {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        let s = fmt17(value);
        // keep floats recognisable as floats
        if s.bytes().all(|b| b.is_ascii_digit() || b == b'-') {
            write!(w, "{s}.0")
        } else {
            w.write_all(s.as_bytes())
        }
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Digits17(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("in-memory serialization");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

/// `path,value` lines for every leaf of a JSON document, in document order.
pub fn flatten_csv(v: &Value) -> String {
    let mut out = String::from("key,value\n");
    flatten_into(v, String::new(), &mut out);
    out
}

fn flatten_into(v: &Value, prefix: String, out: &mut String) {
    let join = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                flatten_into(x, join(k), out);
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten_into(x, join(&i.to_string()), out);
            }
        }
        Value::Number(n) => {
            let s = n.as_f64().filter(|_| n.is_f64()).map(fmt17).unwrap_or_else(|| n.to_string());
            out.push_str(&format!("{prefix},{s}\n"));
        }
        Value::String(s) => out.push_str(&format!("{prefix},{}\n", csv_field(s))),
        Value::Bool(b) => out.push_str(&format!("{prefix},{b}\n")),
        Value::Null => out.push_str(&format!("{prefix},\n")),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Writes `contents` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// `out.csv` -> `out.meta.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("meta.json")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_format_matches_printf() {
        assert_eq!(fmt_g(0.5, 17), "0.5");
        assert_eq!(fmt_g(0.1, 17), "0.10000000000000001");
        assert_eq!(fmt_g(4.0, 17), "4");
        assert_eq!(fmt_g(1e-7, 17), "9.9999999999999995e-8");
        assert_eq!(fmt_g(123456.0, 3), "1.23e5");
        assert_eq!(fmt_g(0.0001234, 3), "0.000123");
        assert_eq!(fmt_g(-2.5, 4), "-2.5");
        assert_eq!(fmt_g(f64::INFINITY, 17), "inf");
    }

    #[test]
    fn fmt17_round_trips() {
        for v in [std::f64::consts::PI, 1.0 / 3.0, 1e-300, 6.02e23, -0.7071067811865475] {
            assert_eq!(fmt17(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn json_uses_seventeen_digits() {
        let s = to_json(&serde_json::json!({"a": 0.1, "b": 2.0, "c": 3}));
        assert!(s.contains("\"a\": 0.10000000000000001"));
        assert!(s.contains("\"b\": 2.0"));
        assert!(s.contains("\"c\": 3"));
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["a"].as_f64(), Some(0.1));
    }

    #[test]
    fn flatten_lists_leaves() {
        let v = serde_json::json!({"x": {"y": [1.5, true]}, "s": "a,b"});
        assert_eq!(flatten_csv(&v), "key,value\nx.y.0,1.5\nx.y.1,true\ns,\"a,b\"\n");
    }
}
