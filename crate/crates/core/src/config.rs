//! Experiment configuration: a TOML file with one table per concern, command
//! line overrides, and resolution into a fully populated [`ExperimentConfig`]
//! with mode-specific defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lemmas::LemmaCheck;
use crate::local_entropy::{MeasureDescriptor, MIN_WINDOW_LEN};
use crate::systems::{make_system, SystemKind, SystemSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Dist,
    Cover,
    Pack,
    MdimB,
    MdimP,
    LocalEntropy,
    VpCheck,
    VerifyLemmas,
}

impl Mode {
    pub const ALL: [Mode; 8] = [
        Mode::Dist,
        Mode::Cover,
        Mode::Pack,
        Mode::MdimB,
        Mode::MdimP,
        Mode::LocalEntropy,
        Mode::VpCheck,
        Mode::VerifyLemmas,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Dist => "dist",
            Mode::Cover => "cover",
            Mode::Pack => "pack",
            Mode::MdimB => "mdim-b",
            Mode::MdimP => "mdim-p",
            Mode::LocalEntropy => "local-entropy",
            Mode::VpCheck => "vp-check",
            Mode::VerifyLemmas => "verify-lemmas",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::config("mode", format!("unknown mode `{s}`")))
    }
}

/// Which cover-side estimator a variational comparison uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Theorem {
    /// Cover counts against lower local entropies.
    Bowen,
    /// Packing counts against upper local entropies.
    Packing,
    Both,
}

impl Theorem {
    pub fn includes(self, side: Theorem) -> bool {
        self == Theorem::Both || self == side
    }
}

// ---------------------------------------------------------------------------
// File layer: every key optional, unknown keys rejected.

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub mode: Option<Mode>,
    pub seed: Option<u64>,
    pub output: Option<String>,
    pub system: Option<SystemFile>,
    #[serde(default)]
    pub sampling: SamplingFile,
    #[serde(default)]
    pub measures: MeasuresFile,
    #[serde(default)]
    pub vp: VpFile,
    #[serde(default)]
    pub dist: DistFile,
    #[serde(default)]
    pub lemmas: LemmasFile,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingFile {
    pub epsilons: Option<Vec<f64>>,
    pub n_min: Option<usize>,
    pub n_max: Option<usize>,
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasuresFile {
    pub list: Option<Vec<String>>,
    pub atoms: Option<usize>,
    pub eval_points: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VpFile {
    pub theorem: Option<Theorem>,
    pub slack: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistFile {
    pub x: Option<Vec<f64>>,
    pub y: Option<Vec<f64>>,
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmasFile {
    pub which: Option<Vec<String>>,
    pub trials: Option<usize>,
}

/// Values given on the command line; each one replaces the file's value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub seed: Option<u64>,
    pub output: Option<String>,
    pub system: Option<String>,
    /// Merged into the system parameters.
    pub params: BTreeMap<String, f64>,
    pub epsilons: Option<Vec<f64>>,
    pub n_min: Option<usize>,
    pub n_max: Option<usize>,
    pub samples: Option<usize>,
    pub measures: Option<Vec<String>>,
    pub atoms: Option<usize>,
    pub eval_points: Option<usize>,
    pub which: Option<Vec<String>>,
    pub trials: Option<usize>,
    pub x: Option<Vec<f64>>,
    pub y: Option<Vec<f64>>,
    pub n: Option<usize>,
}

impl ConfigFile {
    /// Parses TOML text; errors name the line and column.
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let location = match e.span() {
                Some(span) => {
                    let before = &text[..span.start.min(text.len())];
                    let line = before.matches('\n').count() + 1;
                    let col = before.len() - before.rfind('\n').map_or(0, |p| p + 1) + 1;
                    format!("line {line}, column {col}")
                }
                None => "config".to_string(),
            };
            Error::config(location, e.message().trim().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config { location, message } => {
                Error::config(format!("{}: {location}", path.display()), message)
            }
            other => other,
        })
    }

    pub fn apply(&mut self, o: &Overrides) {
        fn set<T: Clone>(slot: &mut Option<T>, v: &Option<T>) {
            if v.is_some() {
                slot.clone_from(v);
            }
        }
        set(&mut self.mode, &o.mode);
        set(&mut self.seed, &o.seed);
        set(&mut self.output, &o.output);
        if let Some(name) = &o.system {
            // a different system invalidates the file's parameters
            match &mut self.system {
                Some(s) if &s.name == name => {}
                slot => {
                    *slot = Some(SystemFile {
                        name: name.clone(),
                        params: BTreeMap::new(),
                    })
                }
            }
        }
        if !o.params.is_empty() {
            let sys = self.system.get_or_insert_with(|| SystemFile {
                name: "full-shift-2".into(),
                params: BTreeMap::new(),
            });
            sys.params.extend(o.params.iter().map(|(k, v)| (k.clone(), *v)));
        }
        set(&mut self.sampling.epsilons, &o.epsilons);
        set(&mut self.sampling.n_min, &o.n_min);
        set(&mut self.sampling.n_max, &o.n_max);
        set(&mut self.sampling.samples, &o.samples);
        set(&mut self.measures.list, &o.measures);
        set(&mut self.measures.atoms, &o.atoms);
        set(&mut self.measures.eval_points, &o.eval_points);
        set(&mut self.lemmas.which, &o.which);
        set(&mut self.lemmas.trials, &o.trials);
        set(&mut self.dist.x, &o.x);
        set(&mut self.dist.y, &o.y);
        set(&mut self.dist.n, &o.n);
    }

    /// Fills mode-specific defaults and validates every value.
    pub fn resolve(self) -> Result<ExperimentConfig> {
        let mode = self.mode.ok_or_else(|| Error::config("mode", "missing mode"))?;
        let seed = self
            .seed
            .ok_or_else(|| Error::config("seed", "a seed is required (no implicit entropy)"))?;
        let explicit_system = self.system.is_some();
        let mut system = self.system.unwrap_or_else(|| SystemFile {
            name: "full-shift-2".into(),
            params: BTreeMap::new(),
        });
        let probe = make_system(&system.name, &system.params).map_err(|e| Error::config("system", e.to_string()))?;
        if mode == Mode::VpCheck && probe.kind().is_shift() && !system.params.contains_key("L") {
            system.params.insert("L".into(), VP_SHIFT_TRUNCATION);
        }
        let built = make_system(&system.name, &system.params).map_err(|e| Error::config("system", e.to_string()))?;

        let d = ModeDefaults::of(mode, &built);
        let s = self.sampling;
        let sampling = Sampling {
            epsilons: s.epsilons.unwrap_or(d.epsilons),
            n_min: s.n_min.unwrap_or(d.n_min),
            n_max: s.n_max.unwrap_or(d.n_max),
            samples: s.samples.unwrap_or(d.samples),
        };
        if sampling.epsilons.is_empty() {
            return Err(Error::config("sampling.epsilons", "empty list"));
        }
        if let Some(bad) = sampling.epsilons.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return Err(Error::config("sampling.epsilons", format!("{bad} is outside (0,1)")));
        }
        if sampling.n_min == 0 || sampling.n_min > sampling.n_max {
            return Err(Error::config(
                "sampling.n_min",
                format!("need 1 <= n_min <= n_max, got {}..={}", sampling.n_min, sampling.n_max),
            ));
        }
        if sampling.n_max > built.max_orbit_len() {
            return Err(Error::config(
                "sampling.n_max",
                format!(
                    "{} exceeds the truncation budget {} of {} (raise L)",
                    sampling.n_max,
                    built.max_orbit_len(),
                    built.name()
                ),
            ));
        }
        if matches!(mode, Mode::LocalEntropy | Mode::VpCheck)
            && sampling.n_max - sampling.n_min + 1 < MIN_WINDOW_LEN
        {
            return Err(Error::config(
                "sampling.n_max",
                format!("entropy windows need at least {MIN_WINDOW_LEN} lengths"),
            ));
        }

        let m = self.measures;
        let list = m
            .list
            .unwrap_or(d.measures)
            .iter()
            .map(|t| t.parse::<MeasureDescriptor>())
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::config("measures.list", e.to_string()))?;
        let measures = Measures {
            list,
            atoms: m.atoms.unwrap_or(d.atoms),
            eval_points: m.eval_points.unwrap_or(d.eval_points),
        };
        if measures.atoms == 0 || measures.eval_points == 0 || measures.eval_points > measures.atoms {
            return Err(Error::config(
                "measures.eval_points",
                format!("need 1 <= eval_points <= atoms, got {} and {}", measures.eval_points, measures.atoms),
            ));
        }
        if matches!(mode, Mode::LocalEntropy | Mode::VpCheck) && measures.list.is_empty() {
            return Err(Error::config("measures.list", "at least one measure is required"));
        }

        let vp = Vp {
            theorem: self.vp.theorem.unwrap_or(Theorem::Both),
            slack: self.vp.slack.unwrap_or(DEFAULT_SLACK),
        };
        if !(vp.slack >= 0.0 && vp.slack.is_finite()) {
            return Err(Error::config("vp.slack", "must be a non-negative number"));
        }

        let dist = if mode == Mode::Dist {
            let x = self.dist.x.ok_or_else(|| Error::config("dist.x", "missing point"))?;
            let y = self.dist.y.ok_or_else(|| Error::config("dist.y", "missing point"))?;
            let n = self.dist.n.unwrap_or(8);
            if n == 0 || n > built.max_orbit_len() {
                return Err(Error::config(
                    "dist.n",
                    format!("need 1 <= n <= {}", built.max_orbit_len()),
                ));
            }
            for (key, p) in [("dist.x", &x), ("dist.y", &y)] {
                built.periodic_point(p).map_err(|e| Error::config(key, e.to_string()))?;
            }
            Some(Dist { x, y, n })
        } else {
            None
        };

        let which = match self.lemmas.which {
            None => LemmaCheck::ALL.to_vec(),
            Some(v) if v.iter().any(|w| w == "all") => LemmaCheck::ALL.to_vec(),
            Some(v) => v
                .iter()
                .map(|w| w.parse())
                .collect::<Result<Vec<_>>>()
                .map_err(|e| Error::config("lemmas.which", e.to_string()))?,
        };
        let systems = if explicit_system {
            vec![SystemConfig::from(&system)]
        } else {
            ["full-shift-2", "unit-cube-shift", "rotation-alpha", "doubling-map"]
                .iter()
                .map(|n| SystemConfig {
                    name: n.to_string(),
                    params: BTreeMap::new(),
                })
                .collect()
        };
        let lemmas = Lemmas {
            which,
            trials: self.lemmas.trials.unwrap_or(20),
            systems,
        };
        if lemmas.trials == 0 {
            return Err(Error::config("lemmas.trials", "need at least one trial"));
        }

        Ok(ExperimentConfig {
            mode,
            seed,
            output: self.output,
            system: SystemConfig::from(&system),
            sampling,
            measures,
            vp,
            dist,
            lemmas,
        })
    }
}

/// Truncation used for shift systems in variational comparisons, so that
/// windows up to `n = 64` stay inside the precision budget.
pub const VP_SHIFT_TRUNCATION: f64 = 84.0;
pub const DEFAULT_SLACK: f64 = 0.15;

struct ModeDefaults {
    epsilons: Vec<f64>,
    n_min: usize,
    n_max: usize,
    samples: usize,
    measures: Vec<String>,
    atoms: usize,
    eval_points: usize,
}

impl ModeDefaults {
    fn of(mode: Mode, sys: &SystemSpec) -> Self {
        let measure = match sys.kind() {
            SystemKind::FullShift { symbols: 2 } => "bernoulli:0.5",
            SystemKind::Rotation { .. } | SystemKind::Doubling => "orbit",
            _ => "uniform",
        };
        let mut d = ModeDefaults {
            epsilons: vec![0.2, 0.1, 0.05],
            n_min: 4,
            n_max: 12,
            samples: 200,
            measures: vec![measure.to_string()],
            atoms: 2000,
            eval_points: 200,
        };
        match mode {
            Mode::VpCheck => {
                d.n_min = 8;
                d.n_max = 64;
                d.samples = 500;
                d.eval_points = 100;
            }
            Mode::LocalEntropy => d.epsilons = vec![0.1],
            _ => {}
        }
        if matches!(sys.kind(), SystemKind::Rotation { .. }) && mode != Mode::Dist {
            // zero-entropy systems need long windows before log(count)/n settles
            d.n_min = 8;
            d.n_max = 64;
        }
        d.n_max = d.n_max.min(sys.max_orbit_len());
        d.n_min = d.n_min.min(d.n_max);
        d
    }
}

// ---------------------------------------------------------------------------
// Resolved layer: embedded verbatim in every report.

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemConfig {
    pub name: String,
    pub params: BTreeMap<String, f64>,
}

impl From<&SystemFile> for SystemConfig {
    fn from(s: &SystemFile) -> Self {
        SystemConfig {
            name: s.name.clone(),
            params: s.params.clone(),
        }
    }
}

impl SystemConfig {
    pub fn build(&self) -> Result<SystemSpec> {
        make_system(&self.name, &self.params)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sampling {
    pub epsilons: Vec<f64>,
    pub n_min: usize,
    pub n_max: usize,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Measures {
    pub list: Vec<MeasureDescriptor>,
    pub atoms: usize,
    pub eval_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Vp {
    pub theorem: Theorem,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dist {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemmas {
    pub which: Vec<LemmaCheck>,
    pub trials: usize,
    pub systems: Vec<SystemConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub seed: u64,
    /// Where artifacts go; not part of the rendered report.
    #[serde(skip)]
    pub output: Option<String>,
    pub system: SystemConfig,
    pub sampling: Sampling,
    pub measures: Measures,
    pub vp: Vp,
    pub dist: Option<Dist>,
    pub lemmas: Lemmas,
}

impl ExperimentConfig {
    /// Parses, overrides and resolves in one step.
    pub fn from_toml(text: &str, overrides: &Overrides) -> Result<Self> {
        let mut file = ConfigFile::parse(text)?;
        file.apply(overrides);
        file.resolve()
    }

    pub fn system_spec(&self) -> Result<SystemSpec> {
        self.system.build()
    }

    pub fn n_range(&self) -> std::ops::RangeInclusive<usize> {
        self.sampling.n_min..=self.sampling.n_max
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_resolves_with_defaults() {
        let c = ExperimentConfig::from_toml("mode = \"mdim-b\"\nseed = 3\n", &Overrides::default()).unwrap();
        assert_eq!(c.system.name, "full-shift-2");
        assert_eq!(c.sampling.epsilons, vec![0.2, 0.1, 0.05]);
        assert_eq!((c.sampling.n_min, c.sampling.n_max), (4, 12));
    }

    #[test]
    fn vp_defaults_raise_the_truncation() {
        let c = ExperimentConfig::from_toml("mode = \"vp-check\"\nseed = 3\n", &Overrides::default()).unwrap();
        assert_eq!(c.system.params.get("L"), Some(&84.0));
        assert_eq!((c.sampling.n_min, c.sampling.n_max), (8, 64));
        assert!(c.system_spec().unwrap().max_orbit_len() >= 64);
    }

    #[test]
    fn errors_carry_locations() {
        let e = ConfigFile::parse("mode = \"mdim-b\"\nseed = 1\n[sampling]\nbogus = 2\n").unwrap_err();
        match e {
            Error::Config { location, .. } => assert!(location.starts_with("line 4"), "{location}"),
            other => panic!("{other:?}"),
        }
        let e = ExperimentConfig::from_toml("mode = \"mdim-b\"\n", &Overrides::default()).unwrap_err();
        assert!(matches!(e, Error::Config { ref location, .. } if location == "seed"));
        let e = ExperimentConfig::from_toml(
            "mode = \"mdim-b\"\nseed = 1\n[sampling]\nepsilons = [1.5]\n",
            &Overrides::default(),
        )
        .unwrap_err();
        assert!(matches!(e, Error::Config { ref location, .. } if location == "sampling.epsilons"));
        assert!(ConfigFile::parse("mode = \"nope\"\nseed = 1\n").is_err());
    }

    #[test]
    fn overrides_win() {
        let o = Overrides {
            epsilons: Some(vec![0.3]),
            system: Some("doubling-map".into()),
            ..Default::default()
        };
        let text = "mode = \"cover\"\nseed = 1\n[system]\nname = \"full-shift-2\"\nparams = { L = 70 }\n";
        let c = ExperimentConfig::from_toml(text, &o).unwrap();
        assert_eq!(c.sampling.epsilons, vec![0.3]);
        assert_eq!(c.system.name, "doubling-map");
        assert!(c.system.params.is_empty());
    }

    #[test]
    fn budget_is_enforced() {
        let text = "mode = \"cover\"\nseed = 1\n[sampling]\nn_max = 500\n";
        let e = ExperimentConfig::from_toml(text, &Overrides::default()).unwrap_err();
        assert!(matches!(e, Error::Config { ref location, .. } if location == "sampling.n_max"));
    }
}
