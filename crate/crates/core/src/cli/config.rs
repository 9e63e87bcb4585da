use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geometry::{GeometryParams, SpectralGrid};
use crate::solvers::Mode;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Solve,
    Flow,
    Eigen,
    Sobolev,
    CheckExistence,
    CheckNonexistence,
    LambdaStar,
    MountainPass,
    Sweep,
}

impl Action {
    pub const ALL: [Action; 9] = [
        Action::Solve,
        Action::Flow,
        Action::Eigen,
        Action::Sobolev,
        Action::CheckExistence,
        Action::CheckNonexistence,
        Action::LambdaStar,
        Action::MountainPass,
        Action::Sweep,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Action::Solve => "solve",
            Action::Flow => "flow",
            Action::Eigen => "eigen",
            Action::Sobolev => "sobolev",
            Action::CheckExistence => "check-existence",
            Action::CheckNonexistence => "check-nonexistence",
            Action::LambdaStar => "lambda-star",
            Action::MountainPass => "mountain-pass",
            Action::Sweep => "sweep",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PsiSpec {
    Zero,
    /// `ψ = amplitude · cos(Σ 2π m_i x_i / L_i)`.
    Mode { amplitude: f64, wavevector: Vec<i64> },
    File(PathBuf),
}

/// A coefficient given either inline or as a field file.
#[derive(Debug, Clone, PartialEq)]
pub enum Coefficient {
    Constant(f64),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub action: Action,
    /// Up to two swept keys with their raw values; cells are the product.
    pub axes: Vec<(String, Vec<String>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    pub residual_tol: f64,
    pub max_iter: usize,
    pub flow_tau: f64,
    pub flow_t_max: f64,
    pub flow_u0: f64,
    pub continuation_schedule: Option<Vec<f64>>,
    pub eps_schedule: Vec<f64>,
    pub mp_nodes: usize,
    pub mp_max_sweeps: usize,
    pub mp_residual_tol: f64,
    pub require_cond: bool,
    pub eps_pert: Option<f64>,
    pub sobolev_starts: usize,
    pub sobolev_max_iter: usize,
    pub positivity_samples: usize,
    pub lambda_tol: f64,
    pub lambda_bisect: bool,
    pub max_evaluations: usize,
    pub write_fields: bool,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub n: i64,
    pub r: f64,
    pub sizes: Vec<usize>,
    pub lengths: Vec<f64>,
    pub psi: PsiSpec,
    pub a: Coefficient,
    pub b: Coefficient,
    pub p: f64,
    pub q: f64,
    pub mode: Mode,
    pub action: Action,
    pub solver: SolverSettings,
    pub sweep: Option<SweepSpec>,
    pub out: PathBuf,
    pub seed: u64,
    pub workers: usize,
    /// Directory that relative file references resolve against.
    pub base_dir: PathBuf,
    entries: BTreeMap<String, Entry>,
}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    /// 0 for defaults and overrides.
    line: usize,
}

enum Kind {
    Required,
    Optional,
    Default(&'static str),
}

const TWO_PI: &str = "6.283185307179586";

/// Every accepted key. Keys absent from the file take the listed default.
const KEYS: &[(&str, Kind)] = &[
    ("n", Kind::Required),
    ("R", Kind::Required),
    ("d", Kind::Default("1")),
    ("sizes", Kind::Default("32")),
    ("L", Kind::Default(TWO_PI)),
    ("psi", Kind::Default("zero")),
    ("psi_amplitude", Kind::Default("0.1")),
    ("psi_wavevector", Kind::Default("1")),
    ("psi_file", Kind::Optional),
    ("a", Kind::Default("1")),
    ("b", Kind::Default("1")),
    ("p", Kind::Default("3")),
    ("q", Kind::Default("2")),
    ("mode", Kind::Default("absorption")),
    ("action", Kind::Required),
    ("residual_tol", Kind::Default("1e-8")),
    ("max_iter", Kind::Default("100000")),
    ("flow_tau", Kind::Default("0.01")),
    ("flow_t_max", Kind::Default("10")),
    ("flow_u0", Kind::Default("1")),
    ("continuation_schedule", Kind::Optional),
    ("eps_schedule", Kind::Default("0.1,0.01,0.001,0.0001")),
    ("mp_nodes", Kind::Default("32")),
    ("mp_max_sweeps", Kind::Default("200")),
    ("mp_residual_tol", Kind::Default("1e-6")),
    ("require_cond", Kind::Default("true")),
    ("eps_pert", Kind::Optional),
    ("sobolev_starts", Kind::Default("4")),
    ("sobolev_max_iter", Kind::Default("4000")),
    ("positivity_samples", Kind::Default("8")),
    ("lambda_tol", Kind::Default("1e-3")),
    ("lambda_bisect", Kind::Default("true")),
    ("max_evaluations", Kind::Default("64")),
    ("write_fields", Kind::Default("true")),
    ("sweep_action", Kind::Optional),
    ("sweep_key", Kind::Optional),
    ("sweep_values", Kind::Optional),
    ("sweep_key2", Kind::Optional),
    ("sweep_values2", Kind::Optional),
    ("out", Kind::Default("out")),
    ("seed", Kind::Default("0")),
    ("workers", Kind::Default("1")),
];

/// Keys that cannot be swept: list-valued, run plumbing, or the sweep itself.
const NOT_SWEEPABLE: &[&str] = &[
    "action",
    "sizes",
    "L",
    "psi_wavevector",
    "eps_schedule",
    "continuation_schedule",
    "out",
    "workers",
    "sweep_action",
    "sweep_key",
    "sweep_values",
    "sweep_key2",
    "sweep_values2",
];

fn known(key: &str) -> bool {
    KEYS.iter().any(|(k, _)| *k == key)
}

fn cfg_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Config { line, msg: msg.into() }
}

/// Parses `key = value` lines; `#` starts a comment. Relative file
/// references resolve against the working directory.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    parse_config_in(text, Path::new("."))
}

/// Reads a config file; relative file references resolve against its
/// directory.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    let base = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    parse_config_in(&text, base)
}

pub fn parse_config_in(text: &str, base_dir: &Path) -> Result<ExperimentConfig> {
    let mut entries = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (k, v) = body
            .split_once('=')
            .ok_or_else(|| cfg_err(line, format!("expected `key = value`, got `{body}`")))?;
        let (k, v) = (k.trim(), v.trim());
        if !known(k) {
            return Err(cfg_err(line, format!("unknown key `{k}`")));
        }
        if v.is_empty() {
            return Err(cfg_err(line, format!("empty value for `{k}`")));
        }
        let e = Entry { value: v.to_string(), line };
        if let Some(prev) = entries.insert(k.to_string(), e) {
            return Err(cfg_err(line, format!("duplicate key `{k}` (first on line {})", prev.line)));
        }
    }
    ExperimentConfig::build(entries, base_dir.to_path_buf())
}

struct Reader<'a> {
    entries: &'a BTreeMap<String, Entry>,
    last_line: usize,
}

impl Reader<'_> {
    fn raw(&self, key: &str) -> Option<(&str, usize)> {
        self.entries.get(key).map(|e| (e.value.as_str(), e.line))
    }

    fn required(&self, key: &str) -> Result<(&str, usize)> {
        self.raw(key)
            .ok_or_else(|| cfg_err(self.last_line, format!("missing required key `{key}`")))
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let (v, line) = self.required(key)?;
        v.parse()
            .map_err(|_| cfg_err(line, format!("malformed value `{v}` for `{key}`")))
    }

    fn optional<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(_) => self.parsed(key).map(Some),
        }
    }

    fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Vec<T>> {
        let (v, line) = self.required(key)?;
        split_list(v)
            .iter()
            .map(|x| {
                x.parse()
                    .map_err(|_| cfg_err(line, format!("malformed entry `{x}` in `{key}`")))
            })
            .collect()
    }

    fn line(&self, key: &str) -> usize {
        self.raw(key).map_or(0, |(_, l)| l)
    }
}

fn split_list(v: &str) -> Vec<&str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
}

/// A constant if the value parses as a number, otherwise a file path.
fn coefficient(v: &str, base: &Path) -> Coefficient {
    match v.parse::<f64>() {
        Ok(c) => Coefficient::Constant(c),
        Err(_) => Coefficient::File(base.join(v)),
    }
}

/// `start:stop:count` expands to `count` evenly spaced values; anything else
/// is a comma list.
fn sweep_values(v: &str, key: &str, line: usize) -> Result<Vec<String>> {
    let parts: Vec<&str> = v.split(':').map(str::trim).collect();
    if parts.len() == 3 {
        let bad = || cfg_err(line, format!("malformed range `{v}` in `{key}`"));
        let a: f64 = parts[0].parse().map_err(|_| bad())?;
        let b: f64 = parts[1].parse().map_err(|_| bad())?;
        let k: usize = parts[2].parse().map_err(|_| bad())?;
        if k < 1 || !a.is_finite() || !b.is_finite() {
            return Err(bad());
        }
        return Ok((0..k)
            .map(|i| {
                let t = if k == 1 { 0.0 } else { i as f64 / (k - 1) as f64 };
                format!("{:?}", a + t * (b - a))
            })
            .collect());
    }
    let vals: Vec<String> = split_list(v).into_iter().map(String::from).collect();
    if vals.is_empty() {
        return Err(cfg_err(line, format!("`{key}` lists no values")));
    }
    Ok(vals)
}

impl ExperimentConfig {
    fn build(mut entries: BTreeMap<String, Entry>, base_dir: PathBuf) -> Result<Self> {
        let last_line = entries.values().map(|e| e.line).max().unwrap_or(0);
        for (k, kind) in KEYS {
            if let Kind::Default(d) = kind {
                entries.entry(k.to_string()).or_insert(Entry {
                    value: d.to_string(),
                    line: 0,
                });
            }
        }
        let rd = Reader {
            entries: &entries,
            last_line,
        };

        let n: i64 = rd.parsed("n")?;
        let r: f64 = rd.parsed("R")?;
        GeometryParams::derive(n, r).map_err(|e| cfg_err(rd.line("n"), e.to_string()))?;

        let d: usize = rd.parsed("d")?;
        if !(1..=3).contains(&d) {
            return Err(cfg_err(rd.line("d"), format!("d must be 1, 2 or 3, got {d}")));
        }
        let sizes = broadcast(rd.list::<usize>("sizes")?, d, "sizes", rd.line("sizes"))?;
        let lengths = broadcast(rd.list::<f64>("L")?, d, "L", rd.line("L"))?;
        SpectralGrid::new(&sizes, &lengths).map_err(|e| cfg_err(rd.line("sizes"), e.to_string()))?;

        let psi = match rd.required("psi")?.0 {
            "zero" => PsiSpec::Zero,
            "mode" => {
                let wavevector = rd.list::<i64>("psi_wavevector")?;
                if wavevector.len() > d {
                    return Err(cfg_err(
                        rd.line("psi_wavevector"),
                        format!("wavevector has {} entries for d = {d}", wavevector.len()),
                    ));
                }
                PsiSpec::Mode {
                    amplitude: rd.parsed("psi_amplitude")?,
                    wavevector,
                }
            }
            "file" => PsiSpec::File(base_dir.join(rd.required("psi_file")?.0)),
            other => {
                return Err(cfg_err(
                    rd.line("psi"),
                    format!("psi must be zero, mode or file, got `{other}`"),
                ))
            }
        };

        let a = coefficient(rd.required("a")?.0, &base_dir);
        let b = coefficient(rd.required("b")?.0, &base_dir);
        for (key, c) in [("a", &a), ("b", &b)] {
            match c {
                Coefficient::File(p) if !p.exists() => {
                    return Err(cfg_err(rd.line(key), format!("file `{}` not found", p.display())));
                }
                Coefficient::Constant(v) if !v.is_finite() => {
                    return Err(cfg_err(rd.line(key), format!("`{key}` must be finite")));
                }
                _ => {}
            }
        }
        if let PsiSpec::File(p) = &psi {
            if !p.exists() {
                return Err(cfg_err(rd.line("psi_file"), format!("file `{}` not found", p.display())));
            }
        }

        let p: f64 = rd.parsed("p")?;
        let q: f64 = rd.parsed("q")?;
        let mode = match rd.required("mode")?.0 {
            "absorption" => Mode::Absorption,
            "source" => Mode::Source,
            other => {
                return Err(cfg_err(
                    rd.line("mode"),
                    format!("mode must be absorption or source, got `{other}`"),
                ))
            }
        };
        let (act, act_line) = rd.required("action")?;
        let action = Action::parse(act).ok_or_else(|| cfg_err(act_line, format!("unknown action `{act}`")))?;

        let solver = SolverSettings {
            residual_tol: positive(&rd, "residual_tol")?,
            max_iter: rd.parsed("max_iter")?,
            flow_tau: positive(&rd, "flow_tau")?,
            flow_t_max: positive(&rd, "flow_t_max")?,
            flow_u0: positive(&rd, "flow_u0")?,
            continuation_schedule: match rd.raw("continuation_schedule") {
                Some(_) => Some(rd.list("continuation_schedule")?),
                None => None,
            },
            eps_schedule: rd.list("eps_schedule")?,
            mp_nodes: rd.parsed("mp_nodes")?,
            mp_max_sweeps: rd.parsed("mp_max_sweeps")?,
            mp_residual_tol: positive(&rd, "mp_residual_tol")?,
            require_cond: rd.parsed("require_cond")?,
            eps_pert: rd.optional("eps_pert")?,
            sobolev_starts: rd.parsed("sobolev_starts")?,
            sobolev_max_iter: rd.parsed("sobolev_max_iter")?,
            positivity_samples: rd.parsed("positivity_samples")?,
            lambda_tol: positive(&rd, "lambda_tol")?,
            lambda_bisect: rd.parsed("lambda_bisect")?,
            max_evaluations: rd.parsed("max_evaluations")?,
            write_fields: rd.parsed("write_fields")?,
        };
        if solver.mp_nodes < 3 {
            return Err(cfg_err(rd.line("mp_nodes"), "mp_nodes must be at least 3"));
        }

        let sweep = if action == Action::Sweep {
            Some(sweep_spec(&rd)?)
        } else {
            None
        };

        let workers: usize = rd.parsed("workers")?;
        if workers == 0 {
            return Err(cfg_err(rd.line("workers"), "workers must be at least 1"));
        }
        Ok(Self {
            n,
            r,
            sizes,
            lengths,
            psi,
            a,
            b,
            p,
            q,
            mode,
            action,
            solver,
            sweep,
            out: PathBuf::from(rd.required("out")?.0),
            seed: rd.parsed("seed")?,
            workers,
            base_dir,
            entries,
        })
    }

    /// Effective key/value pairs, defaults included.
    pub fn echo(&self) -> BTreeMap<String, String> {
        self.entries.iter().map(|(k, e)| (k.clone(), e.value.clone())).collect()
    }

    /// Re-validates with some keys replaced.
    pub fn with_values(&self, values: &[(&str, String)]) -> Result<Self> {
        let mut entries = self.entries.clone();
        for (k, v) in values {
            if !known(k) {
                return Err(cfg_err(0, format!("unknown key `{k}`")));
            }
            entries.insert(k.to_string(), Entry { value: v.clone(), line: 0 });
        }
        Self::build(entries, self.base_dir.clone())
    }

    /// Command-line and environment overrides.
    pub fn with_overrides(&self, out: Option<PathBuf>, workers: Option<usize>, seed: Option<u64>) -> Result<Self> {
        let mut values = Vec::new();
        if let Some(o) = out {
            values.push(("out", o.to_string_lossy().into_owned()));
        }
        if let Some(w) = workers {
            values.push(("workers", w.to_string()));
        }
        if let Some(s) = seed {
            values.push(("seed", s.to_string()));
        }
        self.with_values(&values)
    }
}

fn positive(rd: &Reader, key: &str) -> Result<f64> {
    let v: f64 = rd.parsed(key)?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(cfg_err(rd.line(key), format!("`{key}` must be positive, got {v}")));
    }
    Ok(v)
}

/// A single entry is repeated along every axis.
fn broadcast<T: Clone>(v: Vec<T>, d: usize, key: &str, line: usize) -> Result<Vec<T>> {
    match v.len() {
        1 => Ok(vec![v[0].clone(); d]),
        k if k == d => Ok(v),
        k => Err(cfg_err(line, format!("`{key}` has {k} entries for d = {d}"))),
    }
}

fn sweep_spec(rd: &Reader) -> Result<SweepSpec> {
    let (act, line) = rd.required("sweep_action")?;
    let action = match Action::parse(act) {
        Some(Action::Sweep) => return Err(cfg_err(line, "sweeps cannot nest")),
        Some(a) => a,
        None => return Err(cfg_err(line, format!("unknown action `{act}`"))),
    };
    let mut axes = Vec::new();
    for (kk, vk) in [("sweep_key", "sweep_values"), ("sweep_key2", "sweep_values2")] {
        let key = match rd.raw(kk) {
            Some((k, _)) => k,
            None if kk == "sweep_key" => return Err(rd.required(kk).unwrap_err()),
            None => {
                if let Some((_, l)) = rd.raw(vk) {
                    return Err(cfg_err(l, format!("`{vk}` given without `{kk}`")));
                }
                continue;
            }
        };
        let kline = rd.line(kk);
        if !known(key) || NOT_SWEEPABLE.contains(&key) {
            return Err(cfg_err(kline, format!("`{key}` cannot be swept")));
        }
        if axes.iter().any(|(k, _): &(String, Vec<String>)| k == key) {
            return Err(cfg_err(kline, format!("`{key}` swept twice")));
        }
        let (v, vline) = rd.required(vk)?;
        axes.push((key.to_string(), sweep_values(v, vk, vline)?));
    }
    Ok(SweepSpec { action, axes })
}
