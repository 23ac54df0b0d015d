//! Run configuration: problem selection plus typed overrides, merged from
//! (highest precedence first) command-line flags, a config file and the
//! catalog defaults.
//!
//! The file format is flat `key = value` lines under section headers:
//!
//! ```text
//! # production well, affine law
//! [run]
//! problem = regions
//! output = out/regions
//!
//! [model]
//! law = linear              # constant | linear | barus
//! beta = 0.25
//! alpha0 = 1:0.001,2:1.0    # per-region base drag
//!
//! [solver]
//! eps-tol = 1e-12
//! max-iters = 100
//! linear = direct           # direct | minres
//! quadrature-degree = 2
//!
//! [mesh]
//! resolution = 24
//! triangles = false
//! ```
//!
//! `#` starts a comment. Unknown sections or keys, duplicate keys and
//! values of the wrong type are all rejected with their line number.
//! [`RunConfig::to_text`] writes the canonical form, which parses back to
//! the same configuration.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use porodarcy_core::benchmarks::BuildOptions;
use porodarcy_core::drag::DragLaw;

use crate::error::{invalid, io_err, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearChoice {
    Direct,
    Minres,
}

impl LinearChoice {
    pub fn name(self) -> &'static str {
        match self {
            LinearChoice::Direct => "direct",
            LinearChoice::Minres => "minres",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "direct" => Some(LinearChoice::Direct),
            "minres" => Some(LinearChoice::Minres),
            _ => None,
        }
    }
}

/// Everything a run can override; `None` leaves the catalog default alone.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    pub problem: Option<String>,
    pub output: Option<String>,
    pub law: Option<DragLaw>,
    pub beta: Option<f64>,
    pub alpha0: Option<BTreeMap<u32, f64>>,
    pub eps_tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub linear: Option<LinearChoice>,
    pub quadrature_degree: Option<usize>,
    pub resolution: Option<usize>,
    pub triangles: Option<bool>,
}

/// `(section, key)` pairs the parser accepts, used to tell a misplaced key
/// from an unknown one.
const SCHEMA: [(&str, &str); 11] = [
    ("run", "problem"),
    ("run", "output"),
    ("model", "law"),
    ("model", "beta"),
    ("model", "alpha0"),
    ("solver", "eps-tol"),
    ("solver", "max-iters"),
    ("solver", "linear"),
    ("solver", "quadrature-degree"),
    ("mesh", "resolution"),
    ("mesh", "triangles"),
];

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        RunConfig::parse(&text)
    }

    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        let mut section: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            if let Some(name) = body.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| config_err(line, "unterminated section header"))?
                    .trim();
                if !SCHEMA.iter().any(|&(s, _)| s == name) {
                    return Err(config_err(line, format!("unknown section '[{name}]'")));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| config_err(line, "expected 'key = value'"))?;
            let (key, value) = (key.trim(), value.trim());
            let section = section
                .as_deref()
                .ok_or_else(|| config_err(line, "key before any section header"))?;
            if !SCHEMA.contains(&(section, key)) {
                let msg = match SCHEMA.iter().find(|&&(_, k)| k == key) {
                    Some((home, _)) => format!("key '{key}' belongs in section '[{home}]'"),
                    None => format!("unknown key '{key}' in section '[{section}]'"),
                };
                return Err(config_err(line, msg));
            }
            cfg.set(key, value, line)?;
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        match key {
            "problem" => assign(&mut self.problem, value.to_string(), key, line),
            "output" => assign(&mut self.output, value.to_string(), key, line),
            "law" => {
                let law = DragLaw::from_name(value).ok_or_else(|| {
                    config_err(line, format!("unknown law '{value}' (constant, linear, barus)"))
                })?;
                assign(&mut self.law, law, key, line)
            }
            "beta" => assign(&mut self.beta, float(value, key, line)?, key, line),
            "alpha0" => {
                let map = parse_alpha0(value).map_err(|m| config_err(line, m))?;
                assign(&mut self.alpha0, map, key, line)
            }
            "eps-tol" => assign(&mut self.eps_tol, float(value, key, line)?, key, line),
            "max-iters" => assign(&mut self.max_iters, integer(value, key, line)?, key, line),
            "linear" => {
                let choice = LinearChoice::from_name(value).ok_or_else(|| {
                    config_err(line, format!("unknown linear solver '{value}' (direct, minres)"))
                })?;
                assign(&mut self.linear, choice, key, line)
            }
            "quadrature-degree" => {
                assign(&mut self.quadrature_degree, integer(value, key, line)?, key, line)
            }
            "resolution" => assign(&mut self.resolution, integer(value, key, line)?, key, line),
            "triangles" => {
                let b = match value {
                    "true" => true,
                    "false" => false,
                    _ => {
                        return Err(config_err(
                            line,
                            format!("bad bool for '{key}': '{value}'"),
                        ))
                    }
                };
                assign(&mut self.triangles, b, key, line)
            }
            _ => unreachable!("schema admits no other key"),
        }
    }

    /// Canonical text form; [`RunConfig::parse`] of the result reproduces
    /// `self`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut section = |header: &str, lines: Vec<Option<String>>| {
            let set: Vec<String> = lines.into_iter().flatten().collect();
            if !set.is_empty() {
                s.push_str(header);
                s.push('\n');
                for l in set {
                    s.push_str(&l);
                    s.push('\n');
                }
            }
        };
        section(
            "[run]",
            vec![
                self.problem.as_ref().map(|v| format!("problem = {v}")),
                self.output.as_ref().map(|v| format!("output = {v}")),
            ],
        );
        section(
            "[model]",
            vec![
                self.law.map(|v| format!("law = {}", v.name())),
                self.beta.map(|v| format!("beta = {v}")),
                self.alpha0.as_ref().map(|m| {
                    let pairs: Vec<String> =
                        m.iter().map(|(t, a)| format!("{t}:{a}")).collect();
                    format!("alpha0 = {}", pairs.join(","))
                }),
            ],
        );
        section(
            "[solver]",
            vec![
                self.eps_tol.map(|v| format!("eps-tol = {v:e}")),
                self.max_iters.map(|v| format!("max-iters = {v}")),
                self.linear.map(|v| format!("linear = {}", v.name())),
                self.quadrature_degree
                    .map(|v| format!("quadrature-degree = {v}")),
            ],
        );
        section(
            "[mesh]",
            vec![
                self.resolution.map(|v| format!("resolution = {v}")),
                self.triangles.map(|v| format!("triangles = {v}")),
            ],
        );
        s
    }

    /// `over`'s set fields replace this configuration's.
    pub fn overlay(&self, over: &RunConfig) -> RunConfig {
        macro_rules! pick {
            ($field:ident) => {
                over.$field.clone().or_else(|| self.$field.clone())
            };
        }
        RunConfig {
            problem: pick!(problem),
            output: pick!(output),
            law: pick!(law),
            beta: pick!(beta),
            alpha0: pick!(alpha0),
            eps_tol: pick!(eps_tol),
            max_iters: pick!(max_iters),
            linear: pick!(linear),
            quadrature_degree: pick!(quadrature_degree),
            resolution: pick!(resolution),
            triangles: pick!(triangles),
        }
    }

    pub fn build_options(&self) -> BuildOptions {
        BuildOptions {
            law: self.law,
            beta: self.beta,
            alpha0: self.alpha0.clone(),
            eps_tol: self.eps_tol,
            max_iters: self.max_iters,
            resolution: self.resolution,
            triangles: self.triangles.unwrap_or(false),
            quadrature_degree: self.quadrature_degree,
        }
    }

    /// Rejects knobs that exist but mean nothing for the selected problem.
    pub fn check_applicability(&self, problem: &str) -> Result<()> {
        const GRID_2D: [&str; 4] = ["constant2d", "fivespot", "checkerboard", "mms"];
        if self.triangles == Some(true) && !GRID_2D.contains(&problem) {
            return Err(invalid(format!(
                "'triangles' only applies to the 2D grid problems ({}), not '{problem}'",
                GRID_2D.join(", ")
            )));
        }
        Ok(())
    }
}

fn config_err(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

fn assign<T>(slot: &mut Option<T>, value: T, key: &str, line: usize) -> Result<()> {
    if slot.is_some() {
        return Err(config_err(line, format!("duplicate key '{key}'")));
    }
    *slot = Some(value);
    Ok(())
}

fn float(value: &str, key: &str, line: usize) -> Result<f64> {
    let v: f64 = value
        .parse()
        .map_err(|_| config_err(line, format!("bad float for '{key}': '{value}'")))?;
    if !v.is_finite() {
        return Err(config_err(line, format!("'{key}' must be finite")));
    }
    Ok(v)
}

fn integer(value: &str, key: &str, line: usize) -> Result<usize> {
    value
        .parse()
        .map_err(|_| config_err(line, format!("bad integer for '{key}': '{value}'")))
}

/// `tag:value[,tag:value...]`, e.g. `1:0.001,2:1.0`.
pub fn parse_alpha0(text: &str) -> std::result::Result<BTreeMap<u32, f64>, String> {
    let mut map = BTreeMap::new();
    if text.trim().is_empty() {
        return Err("alpha0 map must not be empty".to_string());
    }
    for item in text.split(',') {
        let item = item.trim();
        let (tag, value) = item
            .split_once(':')
            .ok_or_else(|| format!("expected 'tag:value', got '{item}'"))?;
        let tag: u32 = tag
            .trim()
            .parse()
            .map_err(|_| format!("bad region tag '{}'", tag.trim()))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| format!("bad alpha0 value '{}'", value.trim()))?;
        if map.insert(tag, value).is_some() {
            return Err(format!("region tag {tag} given twice"));
        }
    }
    Ok(map)
}

/// Comma-separated floats; an empty list is an error.
pub fn parse_float_list(text: &str) -> std::result::Result<Vec<f64>, String> {
    let items: Vec<&str> = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    if items.is_empty() {
        return Err("the list is empty".to_string());
    }
    items
        .iter()
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| format!("bad float '{s}'"))
                .and_then(|v| {
                    if v.is_finite() {
                        Ok(v)
                    } else {
                        Err(format!("'{s}' is not finite"))
                    }
                })
        })
        .collect()
}

/// `start:stop:count` with inclusive endpoints, e.g. `0:1:5`.
pub fn parse_float_range(text: &str) -> std::result::Result<Vec<f64>, String> {
    let parts: Vec<&str> = text.split(':').collect();
    let [start, stop, count] = parts[..] else {
        return Err(format!("expected 'start:stop:count', got '{text}'"));
    };
    let start: f64 = start.parse().map_err(|_| format!("bad float '{start}'"))?;
    let stop: f64 = stop.parse().map_err(|_| format!("bad float '{stop}'"))?;
    let count: usize = count
        .parse()
        .map_err(|_| format!("bad count '{count}'"))?;
    if count < 2 {
        return Err("a range needs at least 2 points".to_string());
    }
    Ok((0..count)
        .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
        .collect())
}

/// Comma-separated positive integers; an empty list is an error.
pub fn parse_usize_list(text: &str) -> std::result::Result<Vec<usize>, String> {
    let items: Vec<&str> = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    if items.is_empty() {
        return Err("the list is empty".to_string());
    }
    items
        .iter()
        .map(|s| s.parse::<usize>().map_err(|_| format!("bad integer '{s}'")))
        .collect()
}
