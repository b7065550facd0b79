//! Flat `key = value` configuration with `#` comments.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nhbath::disorder::DisorderKind;
use nhbath::{Boundary, Sublattice};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Experiment {
    Spectrum,
    Gbz,
    Bound,
    Dressed,
    Dynamics,
    Disorder,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    FigS3,
}

impl Experiment {
    pub const ALL: [Experiment; 11] = [
        Experiment::Spectrum,
        Experiment::Gbz,
        Experiment::Bound,
        Experiment::Dressed,
        Experiment::Dynamics,
        Experiment::Disorder,
        Experiment::Fig2,
        Experiment::Fig3,
        Experiment::Fig4,
        Experiment::Fig5,
        Experiment::FigS3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Spectrum => "spectrum",
            Experiment::Gbz => "gbz",
            Experiment::Bound => "bound",
            Experiment::Dressed => "dressed",
            Experiment::Dynamics => "dynamics",
            Experiment::Disorder => "disorder",
            Experiment::Fig2 => "fig2",
            Experiment::Fig3 => "fig3",
            Experiment::Fig4 => "fig4",
            Experiment::Fig5 => "fig5",
            Experiment::FigS3 => "figS3",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s)
    }

    /// Experiments that look at the periodic bath.
    pub fn uses_pbc(self) -> bool {
        matches!(self, Experiment::Spectrum | Experiment::Gbz | Experiment::Bound | Experiment::Fig2)
    }

    /// Experiments that rely on the Hermitian frame (needs `J1 > kappa/2`).
    pub fn uses_hermitian_frame(self) -> bool {
        matches!(
            self,
            Experiment::Dressed | Experiment::Dynamics | Experiment::Fig3 | Experiment::Fig5
        )
    }

    /// Preset values for the figure experiments and sensible defaults for
    /// the others, in units of `J2`.
    pub fn defaults(self) -> &'static [(&'static str, &'static str)] {
        match self {
            Experiment::Spectrum => &[("J1", "2.5"), ("kappa", "1.2"), ("L", "40"), ("boundary", "periodic"), ("nk", "512")],
            Experiment::Gbz => &[("J1", "1.6"), ("kappa", "1.2"), ("nk", "20")],
            Experiment::Bound => &[
                ("J1", "2.5"),
                ("kappa", "1.2"),
                ("gamma", "1.2"),
                ("delta0", "0"),
                ("g", "0.5"),
                ("L", "40"),
                ("j0", "20"),
                ("attach", "a"),
                ("seeds", "20"),
                ("search_re_min", "-4"),
                ("search_re_max", "4"),
                ("search_im_min", "-2"),
                ("search_im_max", "1"),
            ],
            Experiment::Dressed => &[
                ("J1", "1.6"),
                ("kappa", "1.2"),
                ("gamma", "1.2"),
                ("delta0", "0"),
                ("g", "0.5"),
                ("L", "20"),
                ("j0", "10"),
                ("attach", "a"),
            ],
            Experiment::Dynamics | Experiment::Fig5 => &[
                ("J1", "1.2"),
                ("kappa", "0.4"),
                ("gamma", "0.4"),
                ("delta0", "0"),
                ("g", "0.4"),
                ("L", "100"),
                ("j0", "40"),
                ("attach", "a"),
                ("j0_2", "50"),
                ("attach2", "a"),
                ("excite", "1"),
                ("t_max", "40"),
                ("n_times", "401"),
            ],
            Experiment::Disorder | Experiment::FigS3 => &[
                ("J1", "1.6"),
                ("kappa", "1.2"),
                ("gamma", "1.2"),
                ("delta0", "0"),
                ("g", "0.5"),
                ("L", "40"),
                ("j0", "10"),
                ("attach", "a"),
                ("disorder", "diagonal"),
                ("n_realizations", "1000"),
                ("seed", "1"),
                ("V_max", "2"),
                ("V_step", "0.25"),
            ],
            Experiment::Fig2 => &[("kappa", "1.2"), ("g", "0.5"), ("L", "40"), ("nk", "512")],
            Experiment::Fig3 => &[("J1", "1.6"), ("kappa", "1.2"), ("gamma", "1.2"), ("g", "0.5"), ("L", "20"), ("j0", "10")],
            Experiment::Fig4 => &[("J1", "1.6"), ("kappa", "1.2"), ("g", "0.5"), ("delta0", "0"), ("L", "40"), ("j0", "10")],
        }
    }
}

/// Every key the parser accepts.
pub const KNOWN_KEYS: &[&str] = &[
    "experiment",
    "J1",
    "J2",
    "kappa",
    "gamma",
    "g",
    "delta0",
    "L",
    "boundary",
    "attach",
    "j0",
    "attach2",
    "j0_2",
    "excite",
    "nk",
    "n_realizations",
    "seed",
    "t_max",
    "n_times",
    "disorder",
    "V_max",
    "V_step",
    "seeds",
    "search_re_min",
    "search_re_max",
    "search_im_min",
    "search_im_max",
    "output",
];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, &self.key) {
            (Some(l), Some(k)) => write!(f, "line {l}, key `{k}`: {}", self.message),
            (Some(l), None) => write!(f, "line {l}: {}", self.message),
            (None, Some(k)) => write!(f, "key `{k}`: {}", self.message),
            (None, None) => write!(f, "{}", self.message),
        }
    }
}

impl ConfigError {
    fn at(line: Option<usize>, key: &str, message: impl Into<String>) -> Self {
        Self {
            line,
            key: Some(key.to_string()),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    /// Source line; `None` for overrides and presets.
    line: Option<usize>,
}

/// Raw key/value pairs together with where they came from.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, Entry>,
}

impl RawConfig {
    /// Parses config text. Blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RawConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((k, v)) = body.split_once('=') else {
                return Err(ConfigError {
                    line: Some(line),
                    key: None,
                    message: format!("expected `key = value`, got `{body}`"),
                });
            };
            let (k, v) = (k.trim(), v.trim());
            if cfg.entries.get(k).is_some_and(|e| e.line.is_some()) {
                return Err(ConfigError::at(Some(line), k, "duplicate key"));
            }
            cfg.insert(k, v, Some(line))?;
        }
        Ok(cfg)
    }

    fn insert(&mut self, key: &str, value: &str, line: Option<usize>) -> Result<(), ConfigError> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(ConfigError::at(line, key, "unknown key"));
        }
        if value.is_empty() {
            return Err(ConfigError::at(line, key, "empty value"));
        }
        self.entries.insert(
            key.to_string(),
            Entry {
                value: value.to_string(),
                line,
            },
        );
        Ok(())
    }

    /// Command-line override; replaces any file value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        self.insert(key, value, None)
    }

    /// Fills keys not yet present.
    fn fill_defaults(&mut self, defaults: &[(&str, &str)]) {
        for (k, v) in defaults {
            self.entries.entry(k.to_string()).or_insert(Entry {
                value: v.to_string(),
                line: None,
            });
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    fn typed<T: FromStr>(&self, key: &str, what: &str) -> Result<Option<T>, ConfigError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse()
                .map(Some)
                .map_err(|_| ConfigError::at(e.line, key, format!("expected {what}, got `{}`", e.value))),
        }
    }
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub j1: f64,
    pub j2: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub g: f64,
    pub delta0: f64,
    pub cells: usize,
    pub boundary: Boundary,
    pub attach: Sublattice,
    pub j0: usize,
    pub attach2: Sublattice,
    pub j0_2: usize,
    /// Initially excited emitter (1 or 2).
    pub excite: usize,
    pub nk: usize,
    pub n_realizations: usize,
    pub seed: u64,
    pub t_max: f64,
    pub n_times: usize,
    pub disorder: DisorderKind,
    pub v_max: f64,
    pub v_step: f64,
    pub seeds: usize,
    pub search: [f64; 4],
    pub output: Option<String>,
    /// Every resolved key with its canonical string value.
    pub resolved: BTreeMap<String, String>,
}

fn parse_sublattice(s: &str) -> Option<Sublattice> {
    match s {
        "a" | "A" => Some(Sublattice::A),
        "b" | "B" => Some(Sublattice::B),
        _ => None,
    }
}

fn parse_boundary(s: &str) -> Option<Boundary> {
    match s {
        "open" | "obc" => Some(Boundary::Open),
        "periodic" | "pbc" => Some(Boundary::Periodic),
        _ => None,
    }
}

fn choice<T>(raw: &RawConfig, k: &str, f: fn(&str) -> Option<T>, what: &str) -> Result<T, ConfigError> {
    let e = &raw.entries[k];
    f(&e.value).ok_or_else(|| ConfigError::at(e.line, k, format!("expected {what}, got `{}`", e.value)))
}

impl ExperimentConfig {
    pub fn resolve(mut raw: RawConfig) -> Result<Self, ConfigError> {
        let Some(name) = raw.get("experiment").map(str::to_string) else {
            return Err(ConfigError {
                line: None,
                key: Some("experiment".into()),
                message: "missing required key `experiment`".into(),
            });
        };
        let line = raw.entries["experiment"].line;
        let experiment = Experiment::parse(&name).ok_or_else(|| {
            let names: Vec<&str> = Experiment::ALL.iter().map(|e| e.name()).collect();
            ConfigError::at(line, "experiment", format!("unknown experiment `{name}` (one of {})", names.join(", ")))
        })?;
        raw.fill_defaults(experiment.defaults());
        raw.fill_defaults(&[
            ("J1", "1.6"),
            ("J2", "1"),
            ("kappa", "1.2"),
            ("g", "0.5"),
            ("delta0", "0"),
            ("L", "40"),
            ("boundary", "open"),
            ("attach", "a"),
            ("j0", "1"),
            ("attach2", "a"),
            ("j0_2", "2"),
            ("excite", "1"),
            ("nk", "256"),
            ("n_realizations", "100"),
            ("seed", "1"),
            ("t_max", "40"),
            ("n_times", "401"),
            ("disorder", "diagonal"),
            ("V_max", "2"),
            ("V_step", "0.25"),
            ("seeds", "20"),
            ("search_re_min", "-4"),
            ("search_re_max", "4"),
            ("search_im_min", "-2"),
            ("search_im_max", "1"),
        ]);
        let kappa_default = raw.get("kappa").unwrap().to_string();
        raw.fill_defaults(&[("gamma", &kappa_default)]);

        let real = |k: &str| -> Result<f64, ConfigError> {
            let v: f64 = raw.typed(k, "a real number")?.unwrap();
            if !v.is_finite() {
                return Err(ConfigError::at(raw.entries[k].line, k, "must be finite"));
            }
            Ok(v)
        };
        let count = |k: &str| -> Result<usize, ConfigError> { Ok(raw.typed(k, "a non-negative integer")?.unwrap()) };
        let cfg = ExperimentConfig {
            experiment,
            j1: real("J1")?,
            j2: real("J2")?,
            kappa: real("kappa")?,
            gamma: real("gamma")?,
            g: real("g")?,
            delta0: real("delta0")?,
            cells: count("L")?,
            boundary: choice(&raw, "boundary", parse_boundary, "open or periodic")?,
            attach: choice(&raw, "attach", parse_sublattice, "a or b")?,
            j0: count("j0")?,
            attach2: choice(&raw, "attach2", parse_sublattice, "a or b")?,
            j0_2: count("j0_2")?,
            excite: count("excite")?,
            nk: count("nk")?,
            n_realizations: count("n_realizations")?,
            seed: raw.typed("seed", "a 64-bit unsigned integer")?.unwrap(),
            t_max: real("t_max")?,
            n_times: count("n_times")?,
            disorder: {
                let e = &raw.entries["disorder"];
                e.value
                    .parse()
                    .map_err(|_| ConfigError::at(e.line, "disorder", "expected diagonal, offdiagonal or intercell"))?
            },
            v_max: real("V_max")?,
            v_step: real("V_step")?,
            seeds: count("seeds")?,
            search: [
                real("search_re_min")?,
                real("search_re_max")?,
                real("search_im_min")?,
                real("search_im_max")?,
            ],
            output: raw.get("output").map(str::to_string),
            resolved: raw
                .entries
                .iter()
                .filter(|(k, _)| k.as_str() != "output")
                .map(|(k, e)| (k.clone(), e.value.clone()))
                .collect(),
        };
        cfg.check_ranges()?;
        Ok(cfg)
    }

    fn check_ranges(&self) -> Result<(), ConfigError> {
        let bad = |k: &str, m: &str| Err(ConfigError::at(None, k, m.to_string()));
        if self.kappa < 0.0 {
            return bad("kappa", "must be >= 0");
        }
        if self.gamma < 0.0 {
            return bad("gamma", "must be >= 0");
        }
        if self.cells < 2 {
            return bad("L", "need at least 2 unit cells");
        }
        if self.j0 < 1 || self.j0 > self.cells {
            return bad("j0", "must lie in 1..=L");
        }
        if matches!(self.experiment, Experiment::Dynamics) {
            if self.j0_2 < 1 || self.j0_2 > self.cells {
                return bad("j0_2", "must lie in 1..=L");
            }
            if self.excite != 1 && self.excite != 2 {
                return bad("excite", "must be 1 or 2");
            }
        }
        if self.n_times < 2 {
            return bad("n_times", "need at least 2 samples");
        }
        if self.n_realizations == 0 {
            return bad("n_realizations", "must be positive");
        }
        if !(self.v_step > 0.0) || self.v_max < 0.0 {
            return bad("V_step", "need V_step > 0 and V_max >= 0");
        }
        if self.nk < 4 {
            return bad("nk", "need at least 4 points");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_whitespace() {
        let raw = RawConfig::parse("# header\nexperiment = fig5  # trailing\n\n  J1=1.3\n").unwrap();
        assert_eq!(raw.get("experiment"), Some("fig5"));
        assert_eq!(raw.get("J1"), Some("1.3"));
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = RawConfig::parse("experiment = fig3\nkapa = 1\n").unwrap_err();
        assert_eq!(err.line, Some(2));
        assert_eq!(err.key.as_deref(), Some("kapa"));
    }

    #[test]
    fn missing_experiment() {
        let err = ExperimentConfig::resolve(RawConfig::parse("").unwrap()).unwrap_err();
        assert!(err.to_string().contains("experiment"));
    }

    #[test]
    fn presets_and_overrides() {
        let mut raw = RawConfig::parse("experiment = fig5\n").unwrap();
        raw.set("L", "60").unwrap();
        let cfg = ExperimentConfig::resolve(raw).unwrap();
        assert_eq!(cfg.cells, 60);
        assert_eq!(cfg.g, 0.4);
        assert_eq!(cfg.gamma, 0.4);
        assert_eq!(cfg.resolved["L"], "60");
    }

    #[test]
    fn bad_value_names_key() {
        let raw = RawConfig::parse("experiment = dressed\nJ1 = fast\n").unwrap();
        let err = ExperimentConfig::resolve(raw).unwrap_err();
        assert_eq!((err.line, err.key.as_deref()), (Some(2), Some("J1")));
    }
}
