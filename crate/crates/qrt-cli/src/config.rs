//! Flat `key = value` configuration with `[section]` headers.

use std::collections::BTreeMap;
use std::fmt;

use qrt::critical_theta;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub type Sections = BTreeMap<String, BTreeMap<String, String>>;

/// Keys accepted in each section.
const SCHEMA: &[(&str, &[&str])] = &[
    ("model", &["omega", "delta", "j", "theta", "g1"]),
    ("sweep", &["axis", "side", "spacing", "d_min", "d_max", "x_min", "x_max", "points", "critical"]),
    ("eval", &["derivative", "coherent", "random_starts", "branch", "phase_tol"]),
    ("fit", &["input", "columns", "d_min", "d_max", "verdict_tol"]),
    ("oracle", &["delta_ratios", "distances", "n_max", "fd_step", "max_dim", "displaced", "cutoff_tol"]),
    ("grid", &["theta_min", "theta_max", "theta_points", "g1_min", "g1_max", "g1_points", "boundary_points"]),
];

pub fn parse(text: &str) -> Result<Sections, ConfigError> {
    let mut out: Sections = BTreeMap::new();
    let mut section: Option<String> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let at = |msg: &str| ConfigError(format!("line {}: {msg}", lineno + 1));
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| at("unterminated section header"))?.trim();
            if !SCHEMA.iter().any(|(s, _)| *s == name) {
                return Err(at(&format!("unknown section [{name}]")));
            }
            out.entry(name.to_string()).or_default();
            section = Some(name.to_string());
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| at("expected key = value"))?;
        let (k, v) = (k.trim(), v.trim());
        let sec = section.as_deref().ok_or_else(|| at("key outside of any section"))?;
        let allowed = SCHEMA.iter().find(|(s, _)| *s == sec).map(|(_, keys)| *keys).unwrap_or(&[]);
        if !allowed.contains(&k) {
            return Err(at(&format!("unknown key '{k}' in [{sec}]")));
        }
        if out.get_mut(sec).unwrap().insert(k.to_string(), v.to_string()).is_some() {
            return Err(at(&format!("duplicate key '{k}'")));
        }
    }
    Ok(out)
}

/// Numbers with optional `pi` / `thc` factors: `-2pi/3`, `0.5thc`, `-thc`, `1e-4`, `2*pi/3`.
/// `thc` is evaluated at the given ω and J.
pub fn eval_number(s: &str, omega: f64, j_hop: f64) -> Result<f64, ConfigError> {
    let err = || ConfigError(format!("cannot parse number '{s}'"));
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let (num, den) = match t.split_once('/') {
        Some((a, b)) => (a.to_string(), b.parse::<f64>().map_err(|_| err())?),
        None => (t.clone(), 1.0),
    };
    let (body, unit) = if let Some(b) = num.strip_suffix("pi") {
        (b, std::f64::consts::PI)
    } else if let Some(b) = num.strip_suffix("thc") {
        (b, critical_theta(omega, j_hop))
    } else {
        (num.as_str(), 1.0)
    };
    let body = body.strip_suffix('*').unwrap_or(body);
    let coef = match body {
        "" | "+" => 1.0,
        "-" => -1.0,
        b => b.parse::<f64>().map_err(|_| err())?,
    };
    let v = coef * unit / den;
    if !v.is_finite() {
        return Err(err());
    }
    Ok(v)
}

/// Typed access that records every resolved value, defaults included.
pub struct Resolver<'a> {
    raw: &'a Sections,
    pub resolved: Sections,
    omega: f64,
    j_hop: f64,
}

impl<'a> Resolver<'a> {
    pub fn new(raw: &'a Sections) -> Self {
        Self { raw, resolved: BTreeMap::new(), omega: 1.0, j_hop: 0.1 }
    }

    pub fn set_units(&mut self, omega: f64, j_hop: f64) {
        self.omega = omega;
        self.j_hop = j_hop;
    }

    fn raw_value(&self, sec: &str, key: &str) -> Option<&'a String> {
        self.raw.get(sec).and_then(|m| m.get(key))
    }

    fn record(&mut self, sec: &str, key: &str, v: String) {
        self.resolved.entry(sec.to_string()).or_default().insert(key.to_string(), v);
    }

    pub fn has(&self, sec: &str, key: &str) -> bool {
        self.raw_value(sec, key).is_some()
    }

    pub fn f64(&mut self, sec: &str, key: &str, default: Option<f64>) -> Result<f64, ConfigError> {
        let v = match self.raw_value(sec, key) {
            Some(s) => eval_number(s, self.omega, self.j_hop).map_err(|e| ConfigError(format!("[{sec}] {key}: {e}")))?,
            None => default.ok_or_else(|| ConfigError(format!("missing [{sec}] {key}")))?,
        };
        self.record(sec, key, format!("{v:?}"));
        Ok(v)
    }

    pub fn usize(&mut self, sec: &str, key: &str, default: usize) -> Result<usize, ConfigError> {
        let v = match self.raw_value(sec, key) {
            Some(s) => s.parse::<usize>().map_err(|_| ConfigError(format!("[{sec}] {key}: expected a non-negative integer")))?,
            None => default,
        };
        self.record(sec, key, v.to_string());
        Ok(v)
    }

    pub fn string(&mut self, sec: &str, key: &str, default: Option<&str>) -> Result<String, ConfigError> {
        let v = match self.raw_value(sec, key) {
            Some(s) => s.clone(),
            None => default.ok_or_else(|| ConfigError(format!("missing [{sec}] {key}")))?.to_string(),
        };
        self.record(sec, key, v.clone());
        Ok(v)
    }

    pub fn choice(&mut self, sec: &str, key: &str, options: &[&str], default: &str) -> Result<String, ConfigError> {
        let v = self.string(sec, key, Some(default))?;
        if !options.contains(&v.as_str()) {
            return Err(ConfigError(format!("[{sec}] {key}: '{v}' is not one of {}", options.join(", "))));
        }
        Ok(v)
    }

    pub fn f64_list(&mut self, sec: &str, key: &str, default: &[f64]) -> Result<Vec<f64>, ConfigError> {
        let v = match self.raw_value(sec, key) {
            Some(s) => s
                .split(',')
                .map(|x| eval_number(x, self.omega, self.j_hop))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| ConfigError(format!("[{sec}] {key}: {e}")))?,
            None => default.to_vec(),
        };
        let text = v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",");
        self.record(sec, key, text);
        Ok(v)
    }

    pub fn bool(&mut self, sec: &str, key: &str, default: bool) -> Result<bool, ConfigError> {
        let v = match self.raw_value(sec, key).map(|s| s.as_str()) {
            Some("true" | "yes" | "1") => true,
            Some("false" | "no" | "0") => false,
            Some(other) => return Err(ConfigError(format!("[{sec}] {key}: expected true/false, got '{other}'"))),
            None => default,
        };
        self.record(sec, key, v.to_string());
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_expressions() {
        let pi = std::f64::consts::PI;
        assert_eq!(eval_number("-2pi/3", 1.0, 0.1).unwrap(), -2.0 * pi / 3.0);
        assert_eq!(eval_number("pi", 1.0, 0.1).unwrap(), pi);
        assert_eq!(eval_number("2*pi/3", 1.0, 0.1).unwrap(), 2.0 * pi / 3.0);
        assert_eq!(eval_number("-thc", 1.0, 0.1).unwrap(), -critical_theta(1.0, 0.1));
        assert_eq!(eval_number("0.5thc", 1.0, 0.1).unwrap(), 0.5 * critical_theta(1.0, 0.1));
        assert_eq!(eval_number("1e-4", 1.0, 0.1).unwrap(), 1e-4);
        assert!(eval_number("abc", 1.0, 0.1).is_err());
        assert!(eval_number("1/0", 1.0, 0.1).is_err());
    }

    #[test]
    fn rejects_unknown_keys_and_sections() {
        assert!(parse("[model]\nomga = 1\n").is_err());
        assert!(parse("[modle]\n").is_err());
        assert!(parse("g1 = 0.3\n").is_err());
        assert!(parse("[model]\ng1 = 0.3\ng1 = 0.4\n").is_err());
        let s = parse("# comment\n[model]\ng1 = 0.3 # trailing\n").unwrap();
        assert_eq!(s["model"]["g1"], "0.3");
    }
}
