//! Flat `key = value` experiment configuration.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use dynperc::dynamics::KernelFamily;
use dynperc::lattice::{CellId, Model, Side};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Arm,
    Correlate,
    Integrate,
    SpectralExact,
    SpectralMc,
    Duality,
    Scan,
    StructureCheck,
    JpCheck,
    Constants,
}

const COMMANDS: [(Command, &str); 10] = [
    (Command::Arm, "arm"),
    (Command::Correlate, "correlate"),
    (Command::Integrate, "integrate"),
    (Command::SpectralExact, "spectral-exact"),
    (Command::SpectralMc, "spectral-mc"),
    (Command::Duality, "duality"),
    (Command::Scan, "scan"),
    (Command::StructureCheck, "structure-check"),
    (Command::JpCheck, "jp-check"),
    (Command::Constants, "constants"),
];

impl Command {
    pub fn name(self) -> &'static str {
        COMMANDS.iter().find(|c| c.0 == self).map(|c| c.1).expect("every command is listed")
    }

    pub fn all() -> impl Iterator<Item = &'static str> {
        COMMANDS.iter().map(|c| c.1)
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        COMMANDS
            .iter()
            .find(|c| c.1 == s)
            .map(|c| c.0)
            .ok_or_else(|| format!("unknown command `{s}` (one of {})", Command::all().collect::<Vec<_>>().join(", ")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// The kernel key: an exclusion kernel family or i.i.d. resampling.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KernelChoice {
    Exclusion(KernelFamily),
    Iid,
}

impl fmt::Display for KernelChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelChoice::Exclusion(k) => write!(f, "{k}"),
            KernelChoice::Iid => write!(f, "iid"),
        }
    }
}

/// Arm geometry as configured: plane, half-plane or quarter-plane.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Geometry {
    Plane,
    Half,
    Quarter,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub model: Model,
    pub kernel: KernelChoice,
    /// Number of arms.
    pub k: u32,
    pub geometry: Geometry,
    pub side: Side,
    /// Colour of the first arm: true for open.
    pub first_open: bool,
    pub r: f64,
    pub big_r: Vec<f64>,
    pub r0: Vec<f64>,
    /// Torus side; 0 picks the smallest torus holding the window.
    pub l: u32,
    pub t: Vec<f64>,
    pub t_min: f64,
    pub t_max: f64,
    pub gamma: Vec<f64>,
    pub m: u64,
    pub function: String,
    pub quantity: String,
    pub cells: Vec<CellId>,
    pub samples: u64,
    pub instances: u64,
    pub seed: u64,
    pub threads: Option<usize>,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub input: Option<PathBuf>,
}

/// A configuration error pointing at a field (and a line of a config
/// file when there is one).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub field: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}, field `{}`: {}", self.field, self.message),
            None => write!(f, "field `{}`: {}", self.field, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError { field: field.to_string(), line: None, message: message.into() }
}

/// Keys in output order. Output-only keys (threads, format, out) are not
/// echoed, so results do not depend on them.
pub const KEYS: [&str; 25] = [
    "command", "model", "kernel", "k", "geometry", "side", "first", "r", "R", "r0", "L", "t", "t_min", "T", "gamma",
    "m", "function", "quantity", "cells", "samples", "instances", "seed", "input", "threads", "format",
];

const ECHOED: usize = 23;

fn list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn parse_num<T: FromStr>(field: &str, s: &str) -> Result<T, ConfigError> {
    s.trim().parse().map_err(|_| err(field, format!("`{s}` is not a valid number")))
}

fn parse_list(field: &str, s: &str) -> Result<Vec<f64>, ConfigError> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|x| {
            let v: f64 = parse_num(field, x)?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(err(field, format!("`{x}` is not finite")))
            }
        })
        .collect()
}

pub fn parse_model(s: &str) -> Result<Model, ConfigError> {
    match s {
        "triangular" | "site" => Ok(Model::TriangularSite),
        "bond" | "square" => Ok(Model::SquareBond),
        _ => Err(err("model", format!("unknown model `{s}` (triangular or bond)"))),
    }
}

fn model_name(m: Model) -> &'static str {
    match m {
        Model::TriangularSite => "triangular",
        Model::SquareBond => "bond",
    }
}

fn side_name(s: Side) -> &'static str {
    match s {
        Side::Lower => "lower",
        Side::Upper => "upper",
        Side::Left => "left",
        Side::Right => "right",
    }
}

fn parse_cells(s: &str) -> Result<Vec<CellId>, ConfigError> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|c| {
            let (a, b) = c.split_once(':').ok_or_else(|| err("cells", format!("`{c}` is not of the form a:b")))?;
            Ok(CellId::new(parse_num("cells", a)?, parse_num("cells", b)?))
        })
        .collect()
}

impl ExperimentConfig {
    /// Defaults for a command.
    pub fn new(command: Command) -> ExperimentConfig {
        ExperimentConfig {
            command,
            model: Model::TriangularSite,
            kernel: KernelChoice::Exclusion(KernelFamily::PowerLaw { alpha: 0.5 }),
            k: 1,
            geometry: Geometry::Plane,
            side: Side::Lower,
            first_open: true,
            r: 1.0,
            big_r: vec![16.0],
            r0: Vec::new(),
            l: 0,
            t: vec![0.5],
            t_min: 1.0 / 1024.0,
            t_max: 10.0,
            gamma: vec![0.0, 0.25, 0.5, 0.75],
            m: 10,
            function: "majority3".into(),
            quantity: "profile".into(),
            cells: vec![CellId::new(0, 0), CellId::new(1, 0)],
            samples: 10_000,
            instances: 100,
            seed: 1,
            threads: None,
            format: Format::Csv,
            out: None,
            input: None,
        }
    }

    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim();
        match key {
            "command" => self.command = v.parse().map_err(|e: String| err(key, e))?,
            "model" => self.model = parse_model(v)?,
            "kernel" => {
                self.kernel = if v == "iid" {
                    KernelChoice::Iid
                } else {
                    KernelChoice::Exclusion(v.parse().map_err(|e: dynperc::Error| err(key, e.to_string()))?)
                }
            }
            "k" => self.k = parse_num(key, v)?,
            "geometry" => {
                self.geometry = match v {
                    "plane" => Geometry::Plane,
                    "half" => Geometry::Half,
                    "quarter" => Geometry::Quarter,
                    _ => return Err(err(key, format!("`{v}` is not plane, half or quarter"))),
                }
            }
            "side" => {
                self.side = match v {
                    "lower" => Side::Lower,
                    "upper" => Side::Upper,
                    "left" => Side::Left,
                    "right" => Side::Right,
                    _ => return Err(err(key, format!("`{v}` is not lower, upper, left or right"))),
                }
            }
            "first" => {
                self.first_open = match v {
                    "open" => true,
                    "closed" => false,
                    _ => return Err(err(key, format!("`{v}` is not open or closed"))),
                }
            }
            "r" => self.r = parse_num(key, v)?,
            "R" => self.big_r = parse_list(key, v)?,
            "r0" => self.r0 = parse_list(key, v)?,
            "L" => self.l = parse_num(key, v)?,
            "t" => self.t = parse_list(key, v)?,
            "t_min" => self.t_min = parse_num(key, v)?,
            "T" => self.t_max = parse_num(key, v)?,
            "gamma" => self.gamma = parse_list(key, v)?,
            "m" => self.m = parse_num(key, v)?,
            "function" => self.function = v.to_string(),
            "quantity" => self.quantity = v.to_string(),
            "cells" => self.cells = parse_cells(v)?,
            "samples" => self.samples = parse_num(key, v)?,
            "instances" => self.instances = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "threads" => self.threads = if v.is_empty() { None } else { Some(parse_num(key, v)?) },
            "format" => {
                self.format = match v {
                    "csv" => Format::Csv,
                    "json" => Format::Json,
                    _ => return Err(err(key, format!("`{v}` is not csv or json"))),
                }
            }
            "out" => self.out = (!v.is_empty()).then(|| PathBuf::from(v)),
            "input" => self.input = (!v.is_empty()).then(|| PathBuf::from(v)),
            _ => return Err(err(key, "unknown key")),
        }
        Ok(())
    }

    /// Reads `key = value` lines; `#` starts a comment. The command key is
    /// optional when `command` is given.
    pub fn parse(text: &str, command: Option<Command>) -> Result<ExperimentConfig, ConfigError> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError {
                field: line.to_string(),
                line: Some(i + 1),
                message: "expected `key = value`".into(),
            })?;
            pairs.push((i + 1, k.trim().to_string(), v.trim().to_string()));
        }
        let from_file = pairs.iter().find(|p| p.1 == "command").map(|p| (p.0, p.2.clone()));
        let command = match (command, from_file) {
            (Some(c), _) => c,
            (None, Some((line, v))) => {
                v.parse().map_err(|e: String| ConfigError { field: "command".into(), line: Some(line), message: e })?
            }
            (None, None) => return Err(err("command", "missing")),
        };
        let mut cfg = ExperimentConfig::new(command);
        for (line, k, v) in &pairs {
            if k == "command" {
                continue;
            }
            cfg.set(k, v).map_err(|mut e| {
                e.line = Some(*line);
                e
            })?;
        }
        cfg.command = command;
        Ok(cfg)
    }

    /// The value of a key in text form.
    pub fn get(&self, key: &str) -> String {
        match key {
            "command" => self.command.name().into(),
            "model" => model_name(self.model).into(),
            "kernel" => self.kernel.to_string(),
            "k" => self.k.to_string(),
            "geometry" => match self.geometry {
                Geometry::Plane => "plane",
                Geometry::Half => "half",
                Geometry::Quarter => "quarter",
            }
            .into(),
            "side" => side_name(self.side).into(),
            "first" => if self.first_open { "open" } else { "closed" }.into(),
            "r" => self.r.to_string(),
            "R" => list(&self.big_r),
            "r0" => list(&self.r0),
            "L" => self.l.to_string(),
            "t" => list(&self.t),
            "t_min" => self.t_min.to_string(),
            "T" => self.t_max.to_string(),
            "gamma" => list(&self.gamma),
            "m" => self.m.to_string(),
            "function" => self.function.clone(),
            "quantity" => self.quantity.clone(),
            "cells" => self.cells.iter().map(|c| format!("{}:{}", c.a, c.b)).collect::<Vec<_>>().join(","),
            "samples" => self.samples.to_string(),
            "instances" => self.instances.to_string(),
            "seed" => self.seed.to_string(),
            "input" => self.input.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
            "threads" => self.threads.map(|t| t.to_string()).unwrap_or_default(),
            "format" => match self.format {
                Format::Csv => "csv",
                Format::Json => "json",
            }
            .into(),
            _ => String::new(),
        }
    }

    /// The echoed keys and values, in order.
    pub fn echo(&self) -> Vec<(&'static str, String)> {
        KEYS[..ECHOED].iter().map(|&k| (k, self.get(k))).collect()
    }

    /// Serialized form: every key, one `key = value` line each.
    pub fn to_text(&self) -> String {
        let mut s: String = KEYS.iter().map(|&k| format!("{k} = {}\n", self.get(k))).collect();
        if let Some(o) = &self.out {
            s.push_str(&format!("out = {}\n", o.display()));
        }
        s
    }

    /// Checks ranges that do not depend on the command's computation.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.samples == 0 {
            return Err(err("samples", "must be positive"));
        }
        if self.k == 0 {
            return Err(err("k", "must be positive"));
        }
        if !(self.r >= 0.0) {
            return Err(err("r", "must be nonnegative"));
        }
        if self.big_r.is_empty() || self.big_r.iter().any(|&x| x < 0.0) {
            return Err(err("R", "needs at least one nonnegative value"));
        }
        if self.r0.iter().any(|&x| x < 0.0) {
            return Err(err("r0", "values must be nonnegative"));
        }
        if self.t.is_empty() || self.t.iter().any(|&x| x < 0.0) {
            return Err(err("t", "needs at least one nonnegative time"));
        }
        if !(self.t_min > 0.0 && self.t_min <= 1.0) {
            return Err(err("t_min", "must lie in (0, 1]"));
        }
        if !(self.t_max >= 0.0 && self.t_max.is_finite()) {
            return Err(err("T", "must be finite and nonnegative"));
        }
        if self.m == 0 {
            return Err(err("m", "must be positive"));
        }
        if self.threads == Some(0) {
            return Err(err("threads", "must be positive"));
        }
        if self.command == Command::Integrate && self.input.is_none() {
            return Err(err("input", "integrate needs a curve file (from correlate)"));
        }
        Ok(())
    }
}
