//! Flat `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::observables::Base;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: invalid value for '{key}': {message}")]
    BadValue { line: usize, key: String, message: String },
    #[error("experiment missing")]
    MissingExperiment,
    #[error("unknown experiment '{0}'")]
    UnknownExperiment(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExperimentId {
    E1Parabolic,
    E2NaturalMeasure,
    E3ModelNonpredict,
    E4Counterexample,
    E5ErgodicPredict,
    E6Idim,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 6] = [
        ExperimentId::E1Parabolic,
        ExperimentId::E2NaturalMeasure,
        ExperimentId::E3ModelNonpredict,
        ExperimentId::E4Counterexample,
        ExperimentId::E5ErgodicPredict,
        ExperimentId::E6Idim,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::E1Parabolic => "E1_parabolic",
            ExperimentId::E2NaturalMeasure => "E2_natural_measure",
            ExperimentId::E3ModelNonpredict => "E3_model_nonpredict",
            ExperimentId::E4Counterexample => "E4_counterexample",
            ExperimentId::E5ErgodicPredict => "E5_ergodic_predict",
            ExperimentId::E6Idim => "E6_idim",
        }
    }

    pub fn short(self) -> &'static str {
        &self.name()[..2]
    }

    pub fn number(self) -> u64 {
        ExperimentId::ALL.iter().position(|&e| e == self).unwrap() as u64 + 1
    }

    pub fn description(self) -> &'static str {
        match self {
            ExperimentId::E1Parabolic => "spiral map: parabolic decay of 1 - r and visit times near p and q",
            ExperimentId::E2NaturalMeasure => "spiral map: occupation fractions of the neighbourhoods of p and q",
            ExperimentId::E3ModelNonpredict => "two-component model: k = 1 predictability against the two-atom oracle",
            ExperimentId::E4Counterexample => "skew product: k = 1 predictability near the circle and at the atom",
            ExperimentId::E5ErgodicPredict => "rotation and Henon map: decreasing prediction error along the ladder",
            ExperimentId::E6Idim => "information dimension of the model measure and calibration benchmarks",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentId {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        ExperimentId::ALL
            .into_iter()
            .find(|e| e.name().eq_ignore_ascii_case(s) || e.short().eq_ignore_ascii_case(s))
            .ok_or_else(|| ConfigError::UnknownExperiment(s.to_string()))
    }
}

/// Optional parameter overrides; `None` keeps the experiment default.
/// Keys that an experiment does not use are accepted and ignored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub kappa: Option<f64>,
    pub delta: Option<f64>,
    pub alpha: Option<f64>,
    pub n_orbit: Option<usize>,
    pub burn_in: Option<usize>,
    pub n_refs: Option<usize>,
    pub n_observables: Option<usize>,
    pub k: Option<usize>,
    pub degree: Option<u32>,
    pub scale: Option<f64>,
    pub min_count: Option<usize>,
    pub threshold: Option<f64>,
    pub ladder_top: Option<f64>,
    pub ladder_levels: Option<usize>,
    pub tail_start: Option<f64>,
    pub n_samples: Option<usize>,
    pub n_centers: Option<usize>,
    pub observable_base: Option<Base>,
}

pub const KEYS: [&str; 20] = [
    "experiment",
    "seed",
    "kappa",
    "delta",
    "alpha",
    "n_orbit",
    "burn_in",
    "n_refs",
    "n_observables",
    "k",
    "degree",
    "scale",
    "min_count",
    "threshold",
    "ladder_top",
    "ladder_levels",
    "tail_start",
    "n_samples",
    "n_centers",
    "observable_base",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    pub seed: u64,
    pub overrides: Overrides,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentId, seed: u64) -> ExperimentConfig {
        ExperimentConfig { experiment, seed, overrides: Overrides::default() }
    }

    /// The non-default settings as text, for the run summary.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("experiment".into(), self.experiment.to_string());
        m.insert("seed".into(), self.seed.to_string());
        let o = &self.overrides;
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                m.insert(k.to_string(), v);
            }
        };
        put("kappa", o.kappa.map(|v| v.to_string()));
        put("delta", o.delta.map(|v| v.to_string()));
        put("alpha", o.alpha.map(|v| v.to_string()));
        put("n_orbit", o.n_orbit.map(|v| v.to_string()));
        put("burn_in", o.burn_in.map(|v| v.to_string()));
        put("n_refs", o.n_refs.map(|v| v.to_string()));
        put("n_observables", o.n_observables.map(|v| v.to_string()));
        put("k", o.k.map(|v| v.to_string()));
        put("degree", o.degree.map(|v| v.to_string()));
        put("scale", o.scale.map(|v| v.to_string()));
        put("min_count", o.min_count.map(|v| v.to_string()));
        put("threshold", o.threshold.map(|v| v.to_string()));
        put("ladder_top", o.ladder_top.map(|v| v.to_string()));
        put("ladder_levels", o.ladder_levels.map(|v| v.to_string()));
        put("tail_start", o.tail_start.map(|v| v.to_string()));
        put("n_samples", o.n_samples.map(|v| v.to_string()));
        put("n_centers", o.n_centers.map(|v| v.to_string()));
        put("observable_base", o.observable_base.as_ref().map(|v| v.to_string()));
        m
    }
}

/// Settings parsed from text before the experiment is known.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PartialConfig {
    pub experiment: Option<ExperimentId>,
    pub seed: Option<u64>,
    pub overrides: Overrides,
}

fn parse_num<T: FromStr>(line: usize, key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse::<T>().map_err(|_| ConfigError::BadValue { line, key: key.into(), message: format!("cannot parse '{v}'") })
}

fn in_range<T: PartialOrd + fmt::Display + Copy>(line: usize, key: &str, v: T, ok: bool, range: &str) -> Result<T, ConfigError> {
    if ok {
        Ok(v)
    } else {
        Err(ConfigError::BadValue { line, key: key.into(), message: format!("{v} outside {range}") })
    }
}

/// Parses `key = value` lines; `#` starts a comment. The experiment may be
/// absent.
pub fn parse_partial(text: &str) -> Result<PartialConfig, ConfigError> {
    let mut cfg = PartialConfig::default();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| ConfigError::Malformed { line, message: format!("expected 'key = value', got '{content}'") })?;
        let (key, v) = (key.trim(), value.trim());
        if v.is_empty() {
            return Err(ConfigError::Malformed { line, message: format!("missing value for '{key}'") });
        }
        let o = &mut cfg.overrides;
        match key {
            "experiment" => {
                cfg.experiment = Some(v.parse().map_err(|e: ConfigError| ConfigError::BadValue {
                    line,
                    key: key.into(),
                    message: e.to_string(),
                })?)
            }
            "seed" => cfg.seed = Some(parse_num(line, key, v)?),
            "kappa" => {
                let x: f64 = parse_num(line, key, v)?;
                o.kappa = Some(in_range(line, key, x, x > 0.0 && x <= 0.1, "(0, 0.1]")?);
            }
            "delta" => {
                let x: f64 = parse_num(line, key, v)?;
                o.delta = Some(in_range(line, key, x, x > 0.0 && x <= 0.2, "(0, 0.2]")?);
            }
            "alpha" => {
                let x: f64 = parse_num(line, key, v)?;
                o.alpha = Some(in_range(line, key, x, x.is_finite(), "finite reals")?);
            }
            "n_orbit" | "n_refs" | "n_observables" | "k" | "n_samples" | "n_centers" | "min_count" | "ladder_levels" => {
                let x: usize = parse_num(line, key, v)?;
                let lo = match key {
                    "min_count" => 2,
                    "n_orbit" | "n_samples" => 2,
                    _ => 1,
                };
                let hi = if key == "ladder_levels" { 64 } else { usize::MAX };
                let x = in_range(line, key, x, x >= lo && x <= hi, &format!("[{lo}, {hi}]"))?;
                let slot = match key {
                    "n_orbit" => &mut o.n_orbit,
                    "n_refs" => &mut o.n_refs,
                    "n_observables" => &mut o.n_observables,
                    "k" => &mut o.k,
                    "n_samples" => &mut o.n_samples,
                    "n_centers" => &mut o.n_centers,
                    "min_count" => &mut o.min_count,
                    _ => &mut o.ladder_levels,
                };
                *slot = Some(x);
            }
            "burn_in" => o.burn_in = Some(parse_num(line, key, v)?),
            "degree" => {
                let x: u32 = parse_num(line, key, v)?;
                o.degree = Some(in_range(line, key, x, x <= 9, "[0, 9]")?);
            }
            "scale" => {
                let x: f64 = parse_num(line, key, v)?;
                o.scale = Some(in_range(line, key, x, x >= 0.0 && x.is_finite(), "[0, inf)")?);
            }
            "threshold" | "ladder_top" => {
                let x: f64 = parse_num(line, key, v)?;
                let x = in_range(line, key, x, x > 0.0 && x.is_finite(), "(0, inf)")?;
                if key == "threshold" {
                    o.threshold = Some(x);
                } else {
                    o.ladder_top = Some(x);
                }
            }
            "tail_start" => {
                let x: f64 = parse_num(line, key, v)?;
                o.tail_start = Some(in_range(line, key, x, (0.0..1.0).contains(&x), "[0, 1)")?);
            }
            "observable_base" => {
                o.observable_base = Some(v.parse().map_err(|e: crate::observables::ObservableError| {
                    ConfigError::BadValue { line, key: key.into(), message: e.to_string() }
                })?)
            }
            _ => return Err(ConfigError::UnknownKey { line, key: key.to_string() }),
        }
    }
    Ok(cfg)
}

/// Full configuration; the experiment is required and the seed defaults
/// to 0.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let p = parse_partial(text)?;
    Ok(ExperimentConfig {
        experiment: p.experiment.ok_or(ConfigError::MissingExperiment)?,
        seed: p.seed.unwrap_or(0),
        overrides: p.overrides,
    })
}
