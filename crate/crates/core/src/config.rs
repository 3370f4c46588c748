//! Run configuration files: flat key-value text with number lists and
//! quoted strings.
//!
//! ```text
//! model = "ising.ham"
//! n = [4, 5, 6]
//! beta = [0.5]
//! ell = [1]
//! bath = "exp-half"
//! seed_state = 2024
//! seed_mlsi = 17
//! out_dir = "out"
//! memory_guard = 4096
//! parallelism = 1
//! ```

use serde::Serialize;

use crate::davies::BathKind;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub model: String,
    pub n: Vec<usize>,
    pub beta: Vec<f64>,
    pub ell: Vec<usize>,
    pub bath: BathKind,
    pub seed_state: u64,
    pub seed_mlsi: u64,
    pub out_dir: String,
    pub memory_guard: usize,
    pub parallelism: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: String::new(),
            n: vec![],
            beta: vec![],
            ell: vec![1],
            bath: BathKind::ExpHalf,
            seed_state: 2024,
            seed_mlsi: 17,
            out_dir: "out".into(),
            memory_guard: crate::sites::DEFAULT_DIM_GUARD,
            parallelism: 1,
        }
    }
}

#[derive(Debug, PartialEq)]
enum Value {
    Number(f64),
    List(Vec<f64>),
    Text(String),
}

fn parse_value(raw: &str, line: usize) -> Result<Value> {
    let raw = raw.trim();
    let err = |msg: String| Error::Parse { line, msg };
    if raw.is_empty() {
        return Err(err("empty value".into()));
    }
    if let Some(stripped) = raw.strip_prefix('"') {
        let inner = stripped
            .strip_suffix('"')
            .ok_or_else(|| err("unterminated string".into()))?;
        if inner.contains('"') {
            return Err(err("nested quote".into()));
        }
        return Ok(Value::Text(inner.to_string()));
    }
    if let Some(stripped) = raw.strip_prefix('[') {
        let inner = stripped
            .strip_suffix(']')
            .ok_or_else(|| err("unterminated list".into()))?;
        let mut out = Vec::new();
        for part in inner.split(',') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let v: f64 = part.parse().map_err(|_| err(format!("bad number '{part}'")))?;
            if !v.is_finite() {
                return Err(err(format!("non-finite number '{part}'")));
            }
            out.push(v);
        }
        return Ok(Value::List(out));
    }
    let v: f64 = raw.parse().map_err(|_| err(format!("bad value '{raw}'")))?;
    if !v.is_finite() {
        return Err(err(format!("non-finite value '{raw}'")));
    }
    Ok(Value::Number(v))
}

fn as_usize_list(v: Value, line: usize, key: &str) -> Result<Vec<usize>> {
    let err = |msg: String| Error::Parse { line, msg };
    let items = match v {
        Value::List(xs) => xs,
        Value::Number(x) => vec![x],
        Value::Text(_) => return Err(err(format!("{key} expects numbers"))),
    };
    items
        .into_iter()
        .map(|x| {
            if x < 0.0 || x.fract() != 0.0 || x > 1e12 {
                Err(err(format!("{key} expects non-negative integers, found {x}")))
            } else {
                Ok(x as usize)
            }
        })
        .collect()
}

/// Parses a configuration document; unknown keys are rejected.
pub fn parse_config(src: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut seen_model = false;
    for (idx, raw_line) in src.lines().enumerate() {
        let line = idx + 1;
        let stripped = match raw_line.find('#') {
            Some(p) => &raw_line[..p],
            None => raw_line,
        };
        let stripped = stripped.trim();
        if stripped.is_empty() {
            continue;
        }
        let (key, value) = stripped
            .split_once('=')
            .ok_or(Error::Parse { line, msg: "expected key = value".into() })?;
        let key = key.trim();
        let value = parse_value(value, line)?;
        let err = |msg: String| Error::Parse { line, msg };
        match key {
            "model" => match value {
                Value::Text(s) => {
                    cfg.model = s;
                    seen_model = true;
                }
                _ => return Err(err("model expects a quoted path".into())),
            },
            "n" => cfg.n = as_usize_list(value, line, "n")?,
            "ell" => cfg.ell = as_usize_list(value, line, "ell")?,
            "beta" => {
                cfg.beta = match value {
                    Value::List(xs) => xs,
                    Value::Number(x) => vec![x],
                    _ => return Err(err("beta expects numbers".into())),
                };
                if cfg.beta.iter().any(|b| *b < 0.0) {
                    return Err(err("beta must be non-negative".into()));
                }
            }
            "bath" => match value {
                Value::Text(s) => cfg.bath = s.parse()?,
                _ => return Err(err("bath expects a quoted name".into())),
            },
            "seed_state" => cfg.seed_state = as_usize_list(value, line, "seed_state")?[0] as u64,
            "seed_mlsi" => cfg.seed_mlsi = as_usize_list(value, line, "seed_mlsi")?[0] as u64,
            "out_dir" => match value {
                Value::Text(s) => cfg.out_dir = s,
                _ => return Err(err("out_dir expects a quoted path".into())),
            },
            "memory_guard" => {
                cfg.memory_guard = as_usize_list(value, line, "memory_guard")?[0]
            }
            "parallelism" => {
                cfg.parallelism = as_usize_list(value, line, "parallelism")?[0].max(1)
            }
            other => return Err(err(format!("unknown key '{other}'"))),
        }
    }
    if !seen_model {
        return Err(Error::Parse { line: 0, msg: "missing model".into() });
    }
    if cfg.n.is_empty() || cfg.beta.is_empty() || cfg.ell.is_empty() {
        return Err(Error::Parse { line: 0, msg: "n, beta and ell must be nonempty".into() });
    }
    Ok(cfg)
}

/// Writes a configuration back out; floats carry 17 significant digits so
/// the round trip is byte-stable.
pub fn serialize_config(cfg: &RunConfig) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    let _ = writeln!(s, "model = \"{}\"", cfg.model);
    let _ = writeln!(
        s,
        "n = [{}]",
        cfg.n.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
    );
    let _ = writeln!(
        s,
        "beta = [{}]",
        cfg.beta.iter().map(|v| format!("{v:.17e}")).collect::<Vec<_>>().join(", ")
    );
    let _ = writeln!(
        s,
        "ell = [{}]",
        cfg.ell.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
    );
    let bath = match cfg.bath {
        BathKind::ExpHalf => "exp-half",
        BathKind::Glauber => "glauber",
    };
    let _ = writeln!(s, "bath = \"{bath}\"");
    let _ = writeln!(s, "seed_state = {}", cfg.seed_state);
    let _ = writeln!(s, "seed_mlsi = {}", cfg.seed_mlsi);
    let _ = writeln!(s, "out_dir = \"{}\"", cfg.out_dir);
    let _ = writeln!(s, "memory_guard = {}", cfg.memory_guard);
    let _ = writeln!(s, "parallelism = {}", cfg.parallelism);
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_document() {
        let src = r#"
# sweep over three sizes
model = "ising.ham"
n = [4, 5, 6]
beta = [0.5, 1.0]
ell = [1]
bath = "glauber"
seed_state = 7
out_dir = "results"
"#;
        let cfg = parse_config(src).unwrap();
        assert_eq!(cfg.model, "ising.ham");
        assert_eq!(cfg.n, vec![4, 5, 6]);
        assert_eq!(cfg.beta, vec![0.5, 1.0]);
        assert_eq!(cfg.bath, BathKind::Glauber);
        assert_eq!(cfg.seed_state, 7);
        assert_eq!(cfg.out_dir, "results");
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let src = "model = \"m.ham\"\nn = [3]\nbeta = [0.25]\nell = [1, 2]\n";
        let cfg = parse_config(src).unwrap();
        let text = serialize_config(&cfg);
        let cfg2 = parse_config(&text).unwrap();
        assert_eq!(cfg, cfg2);
        assert_eq!(text, serialize_config(&cfg2));
    }

    #[test]
    fn rejects_malformed() {
        for src in [
            "",
            "n = [3]",
            "model = \"x\"",
            "model = \"x\"\nn = [3]\nbeta = [-1]\nell = [1]",
            "model = \"x\"\nn = [3.5]\nbeta = [1]\nell = [1]",
            "model = \"x\"\nn = [3]\nbeta = [1]\nell = [1]\nwhat = 3",
            "model = \"x\"\nn = [3]\nbeta = [1]\nell = [1]\nbath = \"nope\"",
            "model = \"x\nn = [3]\nbeta = [1]\nell = [1]",
            "model == \"x\"",
        ] {
            assert!(parse_config(src).is_err(), "accepted {src:?}");
        }
    }
}
