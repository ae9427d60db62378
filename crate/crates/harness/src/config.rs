//! Experiment configuration and presets.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Categorical data, all categorical methods.
    Fig1,
    /// Without-replacement audit of a (600, 250, 150) population.
    Fig2,
    /// Dirichlet data, universal portfolio against coordinate baselines.
    Fig3,
    Custom,
}

impl FromStr for Preset {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig1" => Ok(Preset::Fig1),
            "fig2" => Ok(Preset::Fig2),
            "fig3" => Ok(Preset::Fig3),
            "custom" => Ok(Preset::Custom),
            other => Err(HarnessError::Config(format!("unknown preset `{other}`"))),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Fig1 => "fig1",
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
            Preset::Custom => "custom",
        })
    }
}

/// Everything a run depends on. Two runs with equal configs produce
/// byte-identical output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub preset: Preset,
    pub k: usize,
    /// Horizon `T`; unused in without-replacement mode.
    pub t: usize,
    /// Trials, or permutations in without-replacement mode.
    pub trials: usize,
    pub delta: f64,
    /// Categorical mean.
    pub mu: Option<Vec<f64>>,
    /// Dirichlet concentration.
    pub conc: Option<Vec<f64>>,
    /// Population counts; selects without-replacement mode.
    pub census: Option<Vec<u32>>,
    pub methods: Vec<String>,
    pub seed: u64,
    /// Lattice resolution; defaults by dimension.
    pub grid: Option<usize>,
}

/// Default lattice resolution: 100 up to three categories, 40 for four,
/// 20 beyond.
pub fn default_grid(k: usize) -> usize {
    match k {
        0..=3 => 100,
        4 => 40,
        _ => 20,
    }
}

fn strings(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

impl ExperimentConfig {
    pub fn preset(preset: Preset) -> Self {
        let base = ExperimentConfig {
            preset,
            k: 3,
            t: 100,
            trials: 100,
            delta: 0.05,
            mu: None,
            conc: None,
            census: None,
            methods: Vec::new(),
            seed: 0,
            grid: None,
        };
        match preset {
            Preset::Fig1 => ExperimentConfig {
                methods: strings(&[
                    "kt",
                    "kt2-mix",
                    "kt2-bonf",
                    "sanov",
                    "mardia",
                    "cp-bonf",
                    "sison-glaz",
                ]),
                ..base
            },
            Preset::Fig2 => ExperimentConfig {
                trials: 1000,
                census: Some(vec![600, 250, 150]),
                methods: strings(&["wor-kt", "ppr"]),
                ..base
            },
            Preset::Fig3 => ExperimentConfig {
                methods: strings(&["up", "up2-mix", "up2-bonf"]),
                ..base
            },
            Preset::Custom => ExperimentConfig {
                methods: strings(&["kt"]),
                ..base
            },
        }
    }

    pub fn grid(&self) -> usize {
        self.grid.unwrap_or_else(|| default_grid(self.k))
    }

    pub fn is_without_replacement(&self) -> bool {
        self.census.is_some()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(HarnessError::Config(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if self.trials == 0 {
            return Err(HarnessError::Config("trials must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(HarnessError::Config("no methods requested".into()));
        }
        if let Some(c) = &self.census {
            if c.len() < 2 {
                return Err(HarnessError::Config(
                    "census needs at least two categories".into(),
                ));
            }
            if c.iter().map(|&x| x as u64).sum::<u64>() < 2 {
                return Err(HarnessError::Config("census must sum to at least 2".into()));
            }
            return Ok(());
        }
        match (&self.mu, &self.conc) {
            (Some(_), Some(_)) => Err(HarnessError::Config(
                "give either mu or conc, not both".into(),
            )),
            (None, None) => Err(HarnessError::Config(format!(
                "preset {} needs a data law: --mu for categorical or --conc for Dirichlet data",
                self.preset
            ))),
            (Some(v), None) | (None, Some(v)) if v.len() != self.k => Err(HarnessError::Config(
                format!("data law has {} entries but k = {}", v.len(), self.k),
            )),
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_carry_their_defaults() {
        let f2 = ExperimentConfig::preset(Preset::Fig2);
        assert_eq!(f2.census, Some(vec![600, 250, 150]));
        assert_eq!(f2.delta, 0.05);
        f2.validate().unwrap();
        let f1 = ExperimentConfig::preset(Preset::Fig1);
        assert_eq!((f1.t, f1.trials, f1.delta), (100, 100, 0.05));
        // the mean is not part of the preset
        assert!(f1.validate().is_err());
    }

    #[test]
    fn config_round_trips_through_json() {
        let mut c = ExperimentConfig::preset(Preset::Fig1);
        c.mu = Some(vec![0.6, 0.25, 0.15]);
        let text = serde_json::to_string(&c).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn default_grid_by_dimension() {
        assert_eq!(default_grid(3), 100);
        assert_eq!(default_grid(4), 40);
        assert_eq!(default_grid(5), 20);
    }
}
