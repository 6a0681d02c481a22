//! `key = value` run configurations.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use super::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Simulate,
    HeightProfile,
    ReturnTimes,
    Occupancy,
    Largedev,
    Correlations,
    Shadowing,
    RootsysDecompose,
    RootsysExpanding,
    RootsysOrthogonal,
    RootsysCartan,
}

const FLOW: [(&str, Option<&str>); 3] = [("a", Some("1")), ("b", Some("1")), ("epsilon", Some("0.5"))];

impl Experiment {
    pub const ALL: [Experiment; 11] = [
        Experiment::Simulate,
        Experiment::HeightProfile,
        Experiment::ReturnTimes,
        Experiment::Occupancy,
        Experiment::Largedev,
        Experiment::Correlations,
        Experiment::Shadowing,
        Experiment::RootsysDecompose,
        Experiment::RootsysExpanding,
        Experiment::RootsysOrthogonal,
        Experiment::RootsysCartan,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::HeightProfile => "height-profile",
            Experiment::ReturnTimes => "return-times",
            Experiment::Occupancy => "occupancy",
            Experiment::Largedev => "largedev",
            Experiment::Correlations => "correlations",
            Experiment::Shadowing => "shadowing",
            Experiment::RootsysDecompose => "rootsys-decompose",
            Experiment::RootsysExpanding => "rootsys-expanding",
            Experiment::RootsysOrthogonal => "rootsys-orthogonal",
            Experiment::RootsysCartan => "rootsys-cartan",
        }
    }

    /// Accepted keys in manifest order; `None` marks a required key.
    pub fn keys(&self) -> Vec<(&'static str, Option<&'static str>)> {
        let mut keys: Vec<(&str, Option<&str>)> = Vec::new();
        let stochastic = !matches!(
            self,
            Experiment::RootsysDecompose
                | Experiment::RootsysExpanding
                | Experiment::RootsysOrthogonal
                | Experiment::RootsysCartan
        );
        match self {
            Experiment::Simulate => {
                keys.extend(FLOW);
                keys.extend([
                    ("T", Some("10")),
                    ("dt", Some("0.01")),
                    ("w", Some("random")),
                    ("stride", Some("10")),
                    ("M", Some("10")),
                ]);
            }
            Experiment::HeightProfile => {
                keys.extend(FLOW);
                keys.extend([("t", Some("1")), ("grid", Some("64"))]);
            }
            Experiment::ReturnTimes => {
                keys.extend(FLOW);
                keys.extend([
                    ("t", Some("2")),
                    ("l0_factor", Some("2")),
                    ("N", Some("200")),
                    ("samples", Some("500")),
                    ("slack", Some("auto")),
                ]);
            }
            Experiment::Occupancy => {
                keys.extend(FLOW);
                keys.extend([
                    ("T", Some("5,10,20,40,80")),
                    ("dt", Some("0.01")),
                    ("samples", Some("200")),
                    ("M", Some("auto")),
                    ("quantile", Some("0.95")),
                    ("eps_prop", Some("0.2")),
                ]);
            }
            Experiment::Largedev => keys.extend([
                ("process", Some("geometric")),
                ("C0", Some("1")),
                ("theta0", Some("1")),
                ("eps", Some("0.5")),
                ("n_max", Some("50")),
                ("trials", Some("100000")),
                ("gap", Some("1")),
                ("switch", Some("3")),
            ]),
            Experiment::Correlations => keys.extend([
                ("a", Some("1")),
                ("b", Some("1")),
                ("s", Some("0.3")),
                ("axis", Some("1")),
                ("t", Some("2")),
                ("gaps", Some("1,2,3,4")),
                ("per_unit", Some("16")),
                ("center", Some("0.9")),
                ("width", Some("0.3")),
            ]),
            Experiment::Shadowing => keys.extend([
                ("a", Some("1")),
                ("b", Some("1")),
                ("t", Some("1")),
                ("instances", Some("50")),
                ("n_max", Some("4")),
                ("per_unit", Some("8")),
            ]),
            Experiment::RootsysDecompose => {
                keys.extend([("family", None), ("rank", None), ("alpha", None)])
            }
            Experiment::RootsysExpanding => keys.extend([("z", None), ("sort", Some("true"))]),
            Experiment::RootsysOrthogonal | Experiment::RootsysCartan => {
                keys.extend([("family", None), ("rank", None)])
            }
        }
        if stochastic {
            keys.push(("seed", None));
        }
        keys.push(("threads", Some("0")));
        keys
    }
}

impl FromStr for Experiment {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Experiment::ALL
            .iter()
            .copied()
            .find(|e| e.name() == s.trim())
            .ok_or_else(|| CliError::Usage(format!("unknown experiment {s:?}")))
    }
}

/// A fully resolved configuration: defaults, then file values, then flags.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    experiment: Experiment,
    values: BTreeMap<String, String>,
    out: Option<String>,
}

/// Parses `key = value` lines; `#` starts a comment line.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("line {}: expected key = value", no + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Parses `--key value`, `--key=value` and `key=value` arguments.
pub fn parse_args(args: &[String]) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < args.len() {
        let arg = &args[i];
        if let Some(flag) = arg.strip_prefix("--") {
            if let Some((k, v)) = flag.split_once('=') {
                out.push((k.to_string(), v.to_string()));
            } else {
                let v = args
                    .get(i + 1)
                    .ok_or_else(|| CliError::Usage(format!("missing value for --{flag}")))?;
                out.push((flag.to_string(), v.clone()));
                i += 1;
            }
        } else if let Some((k, v)) = arg.split_once('=') {
            out.push((k.to_string(), v.to_string()));
        } else {
            return Err(CliError::Usage(format!("unexpected argument {arg:?}")));
        }
        i += 1;
    }
    Ok(out)
}

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

impl RunConfig {
    /// Resolves an experiment from defaults, an optional config file and
    /// command-line pairs. The experiment comes from `experiment` when given,
    /// otherwise from the `experiment` key of the file.
    pub fn resolve(
        experiment: Option<Experiment>,
        file: Option<&Path>,
        flags: &[(String, String)],
    ) -> Result<Self, CliError> {
        let file_pairs = match file {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", p.display())))?;
                parse_pairs(&text)?
            }
            None => Vec::new(),
        };
        let mut named = experiment;
        let mut out = None;
        let mut given: BTreeMap<String, String> = BTreeMap::new();
        for (k, v) in file_pairs.iter().chain(flags) {
            match k.as_str() {
                "experiment" => {
                    let e: Experiment = v.parse()?;
                    match named {
                        Some(n) if n != e && experiment.is_some() => {
                            return Err(CliError::Usage(format!(
                                "config is for {}, not {}",
                                e.name(),
                                n.name()
                            )))
                        }
                        _ => named = Some(e),
                    }
                }
                "code_version" => {
                    if v != CODE_VERSION {
                        eprintln!("warning: config written by version {v}, running {CODE_VERSION}");
                    }
                }
                "out" => out = Some(v.clone()),
                _ => {
                    given.insert(k.clone(), v.clone());
                }
            }
        }
        let experiment = named.ok_or_else(|| CliError::Usage("no experiment given".into()))?;
        let keys = experiment.keys();
        if let Some(k) = given.keys().find(|k| !keys.iter().any(|(name, _)| name == k)) {
            return Err(CliError::Usage(format!("unknown key {k:?} for {}", experiment.name())));
        }
        let mut values = BTreeMap::new();
        for (k, default) in keys {
            let v = match (given.remove(k), default) {
                (Some(v), _) => v,
                (None, Some(d)) => d.to_string(),
                (None, None) => return Err(CliError::Usage(format!("missing required key {k:?}"))),
            };
            values.insert(k.to_string(), v);
        }
        Ok(Self { experiment, values, out })
    }

    pub fn experiment(&self) -> Experiment {
        self.experiment
    }

    /// Output directory named in the configuration, if any.
    pub fn out(&self) -> Option<&str> {
        self.out.as_deref()
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_else(|| panic!("key {key} is not declared"))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, CliError> {
        let raw = self.raw(key);
        raw.parse()
            .map_err(|_| CliError::Usage(format!("cannot parse {key} = {raw:?}")))
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>, CliError> {
        let raw = self.raw(key);
        if raw.trim().is_empty() {
            return Ok(Vec::new());
        }
        raw.split(',')
            .map(|s| s.trim().parse().map_err(|_| CliError::Usage(format!("cannot parse {key} = {raw:?}"))))
            .collect()
    }

    pub fn positive(&self, key: &str) -> Result<f64, CliError> {
        let v: f64 = self.get(key)?;
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(CliError::Usage(format!("{key} must be positive, got {v}")))
        }
    }

    pub fn count(&self, key: &str) -> Result<usize, CliError> {
        let v: usize = self.get(key)?;
        if v == 0 {
            return Err(CliError::Usage(format!("{key} must be at least 1")));
        }
        Ok(v)
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        self.get("seed")
    }

    /// The resolved configuration in `key = value` form, followed by the
    /// digests of the outputs as comments. Reads back through [`RunConfig::resolve`].
    pub fn manifest(&self, outputs: &[(String, String)]) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# homdyn run manifest");
        let _ = writeln!(s, "code_version = {CODE_VERSION}");
        let _ = writeln!(s, "experiment = {}", self.experiment.name());
        for (k, _) in self.experiment.keys() {
            let _ = writeln!(s, "{k} = {}", self.values[k]);
        }
        for (name, digest) in outputs {
            let _ = writeln!(s, "# sha256 {name} {digest}");
        }
        s
    }
}
