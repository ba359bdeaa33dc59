// Copyright 2026 lindsector Contributors
// SPDX-License-Identifier: Apache-2.0

//! TOML run configuration and the bundled figure presets.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{CutoffPolicy, Frame, ModelFamily, ModelParams, Rates, DEFAULT_SATURATION_WARNING};
use crate::spectra::TAIL_LIMIT;
use crate::sweeps::{step_grid, SweepSettings};

pub const PRESETS: [(&str, &str); 6] = [
    ("fig1", include_str!("../presets/fig1.toml")),
    ("fig2", include_str!("../presets/fig2.toml")),
    ("fig3", include_str!("../presets/fig3.toml")),
    ("fig3-below", include_str!("../presets/fig3-below.toml")),
    ("fig4", include_str!("../presets/fig4.toml")),
    ("fig5", include_str!("../presets/fig5.toml")),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Config(format!("unknown format '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationKind {
    C1,
    C2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub family: ModelFamily,
    #[serde(default = "one")]
    pub gamma: f64,
    pub xi: f64,
    pub eta: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default)]
    pub omega_c: f64,
    pub n_scale: u32,
    #[serde(default)]
    pub frame: Frame,
    /// Fixed cutoff; otherwise suggested from the mean-field photon number.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(default = "default_saturation")]
    pub saturation_warning: f64,
}

fn one() -> f64 {
    1.0
}

fn default_saturation() -> f64 {
    DEFAULT_SATURATION_WARNING
}

impl Default for ModelSection {
    fn default() -> Self {
        let r = Rates::default();
        Self {
            family: ModelFamily::Btc,
            gamma: r.gamma,
            xi: r.xi,
            eta: r.eta,
            beta: r.beta,
            omega_c: r.omega_c,
            n_scale: 20,
            frame: Frame::Lab,
            n_max: None,
            saturation_warning: DEFAULT_SATURATION_WARNING,
        }
    }
}

impl ModelSection {
    pub fn params(&self) -> ModelParams {
        let rates = Rates {
            gamma: self.gamma,
            xi: self.xi,
            eta: self.eta,
            beta: self.beta,
            omega_c: self.omega_c,
        };
        let mut p = ModelParams::new(self.family, rates, self.n_scale, self.frame);
        p.saturation_warning = self.saturation_warning;
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub xi: Vec<f64>,
    /// `[start, stop, step]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi_range: Option<[f64; 3]>,
    #[serde(default)]
    pub n_list: Vec<u32>,
    #[serde(default = "two")]
    pub k_cap: usize,
}

fn two() -> usize {
    2
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            xi: Vec::new(),
            xi_range: None,
            n_list: Vec::new(),
            k_cap: two(),
        }
    }
}

impl SweepSection {
    pub fn xi_grid(&self) -> Result<Vec<f64>> {
        match (self.xi.is_empty(), self.xi_range) {
            (false, Some(_)) => Err(Error::Config("give either sweep.xi or sweep.xi_range, not both".into())),
            (false, None) => Ok(self.xi.clone()),
            (true, Some([a, b, h])) => step_grid(a, b, h),
            (true, None) => Err(Error::Config("sweep needs sweep.xi or sweep.xi_range".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSection {
    pub m: usize,
    pub k_cap: usize,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self { m: 20, k_cap: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorrelateSection {
    /// `[start, stop, step]` in units of `1/Γ`.
    pub tau_range: [f64; 3],
    pub kinds: Vec<CorrelationKind>,
    /// Initial coherent amplitude `[re, im]` for field traces.
    pub alpha0: [f64; 2],
}

impl Default for CorrelateSection {
    fn default() -> Self {
        Self {
            tau_range: [0.0, 50.0, 0.05],
            kinds: vec![CorrelationKind::C1],
            alpha0: [2.0, 0.0],
        }
    }
}

impl CorrelateSection {
    /// Grid in model time units (`τ` values scale with `1/Γ`).
    pub fn taus(&self, gamma: f64) -> Result<Vec<f64>> {
        let [a, b, h] = self.tau_range;
        Ok(step_grid(a, b, h)?.into_iter().map(|t| t / gamma).collect())
    }

    pub fn alpha0(&self) -> Complex64 {
        Complex64::new(self.alpha0[0], self.alpha0[1])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub tail_limit: f64,
    pub cutoff_safety: f64,
    pub cutoff_floor: usize,
    pub cutoff_escalations: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        let p = CutoffPolicy::default();
        Self {
            tail_limit: TAIL_LIMIT,
            cutoff_safety: p.safety,
            cutoff_floor: p.floor,
            cutoff_escalations: 4,
        }
    }
}

/// Everything a run needs. Every computation is deterministic, so there is no seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "one_worker")]
    pub workers: usize,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub spectrum: SpectrumSection,
    #[serde(default)]
    pub correlate: CorrelateSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn one_worker() -> usize {
    1
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            workers: 1,
            model: ModelSection::default(),
            sweep: SweepSection::default(),
            spectrum: SpectrumSection::default(),
            correlate: CorrelateSection::default(),
            output: OutputSection::default(),
            tolerances: Tolerances::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn preset(name: &str) -> Result<Self> {
        let text = PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, t)| *t)
            .ok_or_else(|| {
                let names: Vec<&str> = PRESETS.iter().map(|p| p.0).collect();
                Error::Config(format!("unknown preset '{name}' (known: {})", names.join(", ")))
            })?;
        Self::from_toml(text)
    }

    /// Checks everything that can be checked without computing.
    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::Config("workers must be >= 1".into()));
        }
        let m = &self.model;
        // Building a tiny instance runs every rate check of the family.
        self.model.params().build(m.n_max.unwrap_or(2).max(2))?;
        let t = &self.tolerances;
        if !(t.tail_limit > 0.0 && t.tail_limit < 1.0) {
            return Err(Error::Config(format!("tail_limit must be in (0, 1), got {}", t.tail_limit)));
        }
        if !(t.cutoff_safety > 0.0 && t.cutoff_safety.is_finite()) {
            return Err(Error::Config(format!("cutoff_safety must be > 0, got {}", t.cutoff_safety)));
        }
        if self.spectrum.m == 0 {
            return Err(Error::Config("spectrum.m must be >= 1".into()));
        }
        if self.correlate.kinds.is_empty() {
            return Err(Error::Config("correlate.kinds is empty".into()));
        }
        Ok(())
    }

    pub fn sweep_settings(&self) -> SweepSettings {
        SweepSettings {
            k_cap: self.sweep.k_cap,
            n_max: self.model.n_max,
            policy: CutoffPolicy {
                safety: self.tolerances.cutoff_safety,
                floor: self.tolerances.cutoff_floor,
            },
            escalations: self.tolerances.cutoff_escalations,
            workers: self.workers,
            tail_limit: self.tolerances.tail_limit,
        }
    }
}
