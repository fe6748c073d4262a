//! Batch-run configuration: `key = value` lines, `#` comments, typed
//! values with unit suffixes, fail-closed (unknown keys are errors).
//!
//! Rates are written as frequency/2π with a mandatory unit suffix
//! (`hz`, `khz`, `mhz`, `ghz`) and held internally in rad/s; durations
//! take `s`, `ms`, `us`, or `ns`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Sweep,
    Scaling,
    Precision,
    Traces,
    Calibrate,
    Classical,
}

impl std::str::FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sweep" => Ok(Command::Sweep),
            "scaling" => Ok(Command::Scaling),
            "precision" => Ok(Command::Precision),
            "traces" => Ok(Command::Traces),
            "calibrate" => Ok(Command::Calibrate),
            "classical" => Ok(Command::Classical),
            other => Err(Error::InvalidParameter(format!("unknown command `{other}`"))),
        }
    }
}

impl std::fmt::Display for Command {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Command::Sweep => "sweep",
            Command::Scaling => "scaling",
            Command::Precision => "precision",
            Command::Traces => "traces",
            Command::Calibrate => "calibrate",
            Command::Classical => "classical",
        };
        write!(f, "{s}")
    }
}

/// Typed configuration value.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    /// Angular frequency (rad/s), parsed from an `hz`-family suffix.
    Angular(f64),
    /// Duration (s), parsed from an `s`-family suffix.
    Seconds(f64),
    Float(f64),
    Int(i64),
    Bool(bool),
    Text(String),
    FloatList(Vec<f64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Angular,
    Seconds,
    Float,
    Int,
    Bool,
    Text,
    FloatList,
}

const COMMON_KEYS: &[(&str, Kind)] = &[
    ("command", Kind::Text),
    ("seed", Kind::Int),
    ("threads", Kind::Int),
    ("output_dir", Kind::Text),
    ("plot", Kind::Bool),
];

const MODEL_KEYS: &[(&str, Kind)] = &[
    ("sigma2", Kind::Float),
    ("n_amp", Kind::Float),
    ("gain", Kind::Float),
    ("delta_t", Kind::Seconds),
    ("total_time", Kind::Seconds),
    ("jss_time", Kind::Seconds),
    ("m_traces", Kind::Int),
    ("err_epsilon", Kind::Angular),
];

const POINT_KEYS: &[(&str, Kind)] = &[
    ("preset", Kind::Text),
    ("g", Kind::Angular),
    ("u", Kind::Angular),
    ("kappa", Kind::Angular),
    ("kappa_ext", Kind::Angular),
];

const DIM_KEYS: &[(&str, Kind)] = &[("dim_floor", Kind::Int), ("dim_cap", Kind::Int)];

fn command_keys(command: Command) -> Vec<(&'static str, Kind)> {
    let mut keys: Vec<(&str, Kind)> = COMMON_KEYS.to_vec();
    match command {
        Command::Sweep => {
            keys.extend_from_slice(POINT_KEYS);
            keys.extend_from_slice(DIM_KEYS);
            keys.extend_from_slice(MODEL_KEYS);
            keys.extend_from_slice(&[
                ("delta_start", Kind::Angular),
                ("delta_stop", Kind::Angular),
                ("points", Kind::Int),
            ]);
        }
        Command::Scaling => {
            keys.extend_from_slice(DIM_KEYS);
            keys.extend_from_slice(MODEL_KEYS);
            keys.extend_from_slice(&[
                ("preset", Kind::Text),
                ("scaling", Kind::Text),
                ("g_tilde", Kind::Angular),
                ("u_tilde", Kind::Angular),
                ("kappa_tilde", Kind::Angular),
                ("kappa_ext", Kind::Angular),
                ("l_values", Kind::FloatList),
                ("delta_start", Kind::Angular),
                ("delta_stop", Kind::Angular),
                ("points", Kind::Int),
            ]);
        }
        Command::Precision => {
            keys.extend_from_slice(POINT_KEYS);
            keys.extend_from_slice(DIM_KEYS);
            keys.extend_from_slice(MODEL_KEYS);
            keys.extend_from_slice(&[
                ("delta", Kind::Angular),
                ("epsilon", Kind::Angular),
                ("pairs", Kind::Int),
            ]);
        }
        Command::Traces => {
            keys.extend_from_slice(POINT_KEYS);
            keys.extend_from_slice(DIM_KEYS);
            keys.extend_from_slice(MODEL_KEYS);
            keys.extend_from_slice(&[("input", Kind::Text), ("delta", Kind::Angular)]);
        }
        Command::Calibrate => {
            keys.extend_from_slice(&[
                ("gamma0", Kind::Float),
                ("omega_bare", Kind::Angular),
                ("l_cav", Kind::Float),
                ("c_cav", Kind::Float),
                ("c_j", Kind::Float),
                ("d_len", Kind::Float),
                ("flux_start", Kind::Float),
                ("flux_stop", Kind::Float),
                ("flux_points", Kind::Int),
                ("s21_fr", Kind::Angular),
                ("s21_ql", Kind::Float),
                ("s21_qc", Kind::Float),
                ("s21_phi", Kind::Float),
                ("s21_a", Kind::Float),
                ("s21_alpha", Kind::Float),
                ("s21_tau", Kind::Seconds),
                ("s21_snr", Kind::Float),
                ("s21_points", Kind::Int),
                ("s21_span", Kind::Float),
                ("gfit_g", Kind::Angular),
                ("gfit_kappa", Kind::Angular),
                ("gfit_u", Kind::Angular),
                ("gfit_points", Kind::Int),
            ]);
        }
        Command::Classical => {
            keys.extend_from_slice(&[
                ("kappa_ext", Kind::Angular),
                ("alpha2", Kind::Float),
                ("delta_p_start", Kind::Angular),
                ("delta_p_stop", Kind::Angular),
                ("points", Kind::Int),
                ("bandwidth", Kind::Angular),
                ("time", Kind::Seconds),
            ]);
        }
    }
    keys
}

/// Fully parsed run configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
    /// Worker threads; 0 picks the runtime default.
    pub threads: usize,
    /// Output directory; resolution order is CLI flag, config key,
    /// `KERRSENSE_OUT`, then `./kerrsense_out`.
    pub output_dir: Option<PathBuf>,
    pub plot: bool,
    params: BTreeMap<String, Value>,
}

impl RunConfig {
    pub fn get(&self, key: &str) -> Option<&Value> {
        self.params.get(key)
    }

    pub fn angular(&self, key: &str) -> Option<f64> {
        match self.params.get(key) {
            Some(Value::Angular(v)) => Some(*v),
            _ => None,
        }
    }

    pub fn seconds(&self, key: &str) -> Option<f64> {
        match self.params.get(key) {
            Some(Value::Seconds(v)) => Some(*v),
            _ => None,
        }
    }

    pub fn float(&self, key: &str) -> Option<f64> {
        match self.params.get(key) {
            Some(Value::Float(v)) => Some(*v),
            _ => None,
        }
    }

    pub fn int(&self, key: &str) -> Option<i64> {
        match self.params.get(key) {
            Some(Value::Int(v)) => Some(*v),
            _ => None,
        }
    }

    pub fn text(&self, key: &str) -> Option<&str> {
        match self.params.get(key) {
            Some(Value::Text(v)) => Some(v.as_str()),
            _ => None,
        }
    }

    pub fn list(&self, key: &str) -> Option<&[f64]> {
        match self.params.get(key) {
            Some(Value::FloatList(v)) => Some(v.as_slice()),
            _ => None,
        }
    }

    /// Every resolved key/value pair, for the run manifest.
    pub fn entries(&self) -> impl Iterator<Item = (&str, String)> {
        self.params.iter().map(|(k, v)| {
            let rendered = match v {
                Value::Angular(x) => format!("{}hz", crate::units::to_hz(*x)),
                Value::Seconds(x) => format!("{x}s"),
                Value::Float(x) => format!("{x}"),
                Value::Int(x) => format!("{x}"),
                Value::Bool(x) => format!("{x}"),
                Value::Text(x) => x.clone(),
                Value::FloatList(xs) => {
                    xs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
                }
            };
            (k.as_str(), rendered)
        })
    }
}

fn parse_suffixed(raw: &str, suffixes: &[(&str, f64)], line: usize, what: &str) -> Result<f64> {
    let lower = raw.trim().to_ascii_lowercase();
    for (suffix, mult) in suffixes {
        if let Some(num) = lower.strip_suffix(suffix) {
            let v: f64 = num.trim().parse().map_err(|_| Error::ParseError {
                line,
                message: format!("bad {what} value `{raw}`"),
            })?;
            return Ok(v * mult);
        }
    }
    Err(Error::ParseError {
        line,
        message: format!(
            "{what} value `{raw}` needs a unit suffix ({})",
            suffixes.iter().map(|(s, _)| *s).collect::<Vec<_>>().join(", ")
        ),
    })
}

fn parse_value(kind: Kind, raw: &str, line: usize) -> Result<Value> {
    let raw = raw.trim();
    match kind {
        Kind::Angular => {
            // longest suffix first so `khz` is not read as `hz`
            let v = parse_suffixed(
                raw,
                &[("ghz", 1e9), ("mhz", 1e6), ("khz", 1e3), ("hz", 1.0)],
                line,
                "rate",
            )?;
            Ok(Value::Angular(crate::units::hz(v)))
        }
        Kind::Seconds => {
            let v = parse_suffixed(raw, &[("ns", 1e-9), ("us", 1e-6), ("ms", 1e-3), ("s", 1.0)], line, "time")?;
            Ok(Value::Seconds(v))
        }
        Kind::Float => raw
            .parse()
            .map(Value::Float)
            .map_err(|_| Error::ParseError { line, message: format!("bad float `{raw}`") }),
        Kind::Int => raw
            .parse()
            .map(Value::Int)
            .map_err(|_| Error::ParseError { line, message: format!("bad integer `{raw}`") }),
        Kind::Bool => match raw {
            "true" => Ok(Value::Bool(true)),
            "false" => Ok(Value::Bool(false)),
            _ => Err(Error::ParseError { line, message: format!("bad bool `{raw}`") }),
        },
        Kind::Text => Ok(Value::Text(raw.to_string())),
        Kind::FloatList => {
            let vs: std::result::Result<Vec<f64>, _> =
                raw.split(',').map(|t| t.trim().parse::<f64>()).collect();
            vs.map(Value::FloatList)
                .map_err(|_| Error::ParseError { line, message: format!("bad number list `{raw}`") })
        }
    }
}

/// Parse `key = value` configuration text.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut raw: BTreeMap<String, (String, usize)> = BTreeMap::new();
    for (idx, full_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match full_line.find('#') {
            Some(p) => &full_line[..p],
            None => full_line,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::ParseError {
            line: line_no,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        let key = key.trim().to_ascii_lowercase();
        if key.is_empty() {
            return Err(Error::ParseError { line: line_no, message: "empty key".into() });
        }
        if raw.insert(key.clone(), (value.trim().to_string(), line_no)).is_some() {
            return Err(Error::ParseError { line: line_no, message: format!("duplicate key `{key}`") });
        }
    }

    let (command_raw, _) = raw.get("command").ok_or(Error::MissingKey("command".into()))?;
    let command: Command = command_raw.parse()?;
    let schema = command_keys(command);

    let mut params = BTreeMap::new();
    for (key, (value, line)) in &raw {
        let kind = schema
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, kind)| *kind)
            .ok_or_else(|| Error::UnknownKey(key.clone()))?;
        params.insert(key.clone(), parse_value(kind, value, *line)?);
    }
    params.remove("command");

    require_keys(command, &params)?;

    let seed = match params.remove("seed") {
        Some(Value::Int(v)) if v >= 0 => v as u64,
        Some(Value::Int(v)) => {
            return Err(Error::InvalidParameter(format!("seed must be non-negative, got {v}")))
        }
        _ => 0,
    };
    let threads = match params.remove("threads") {
        Some(Value::Int(v)) if v >= 0 => v as usize,
        Some(Value::Int(v)) => {
            return Err(Error::InvalidParameter(format!("threads must be non-negative, got {v}")))
        }
        _ => 0,
    };
    let output_dir = match params.remove("output_dir") {
        Some(Value::Text(t)) => Some(PathBuf::from(t)),
        _ => None,
    };
    let plot = matches!(params.remove("plot"), Some(Value::Bool(true)));

    Ok(RunConfig { command, seed, threads, output_dir, plot, params })
}

fn require_keys(command: Command, params: &BTreeMap<String, Value>) -> Result<()> {
    let has = |k: &str| params.contains_key(k);
    let need = |k: &'static str| -> Result<()> {
        if has(k) {
            Ok(())
        } else {
            Err(Error::MissingKey(k.into()))
        }
    };
    match command {
        Command::Sweep => {
            if !has("preset") {
                for k in ["g", "u", "kappa", "delta_start", "delta_stop"] {
                    if !has(k) {
                        return Err(Error::MissingKey(format!("{k} (or preset)")));
                    }
                }
            }
        }
        Command::Scaling => {
            if !has("preset") {
                for k in ["scaling", "g_tilde", "u_tilde", "kappa_tilde", "l_values", "delta_start", "delta_stop"]
                {
                    if !has(k) {
                        return Err(Error::MissingKey(format!("{k} (or preset)")));
                    }
                }
            }
        }
        Command::Precision => {
            need("delta")?;
            if !has("preset") {
                for k in ["g", "u", "kappa"] {
                    if !has(k) {
                        return Err(Error::MissingKey(format!("{k} (or preset)")));
                    }
                }
            }
        }
        Command::Traces => {
            if !has("input") {
                need("delta")?;
                if !has("preset") {
                    for k in ["g", "u", "kappa"] {
                        if !has(k) {
                            return Err(Error::MissingKey(format!("{k} (or preset)")));
                        }
                    }
                }
            }
        }
        Command::Calibrate | Command::Classical => {}
    }
    if has("sigma2") && has("n_amp") {
        return Err(Error::InvalidParameter("set either sigma2 or n_amp, not both".into()));
    }
    Ok(())
}
