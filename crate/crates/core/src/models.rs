// Copyright 2026 lindsector Contributors
// SPDX-License-Identifier: Apache-2.0

//! Model catalog: the driven two-photon-loss cavity and the saturable-gain
//! (Scully-Lamb) laser, with their thermodynamic-limit scaling.
//!
//! The scaling parameter `N` sends the photon number to `N n` while keeping
//! the photon lifetime fixed:
//!
//! ```text
//! two-photon-loss cavity: {Γ, ξ, η}    -> {Γ, ξ, η/N}
//! Scully-Lamb laser:      {Γ, ξ, η, β} -> {Γ, ξ, η/N, β/N²}
//! ```
//!
//! # Mean-field oracle
//!
//! Taking `d<a†a>/dt` from the adjoint master equation and factorizing
//! moments (`<a†²a²> -> <a†a>²`, `<(a†a)^3> -> <a†a>^3`):
//!
//! * two-photon-loss cavity, with `D[√ξ a†]`, `D[√Γ a]`, `D[√(η/N) a²]`:
//!   `ṅ = ξ(n+1) - Γn - 2(η/N)n²`. With `n = N m` and `N -> ∞`,
//!   `ṁ = (ξ-Γ)m - 2ηm²`, stable root `m* = max(0, (ξ-Γ)/(2η))`.
//!
//! * Scully-Lamb laser: the gain jump raises `n -> n+1` at rate
//!   `(n+1)(√ξ - √β(n+1))²`, the decoherence jump has weight zero and does
//!   not move `n`, so `ṅ = <(n+1)(√ξ - √β(n+1))²> - Γn`. With
//!   `β -> β/N²` and `n = N m`, the leading order is
//!   `ṁ = (ξ-Γ)m - 2√(ξβ)m² + βm³`, whose nonzero roots are
//!   `m = (√ξ ∓ √Γ)/√β`. The lower root `(√ξ - √Γ)/√β` is stable for
//!   `ξ > Γ` (slope `-2√Γ(√ξ-√Γ)`); below threshold `m* = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    make_annihilation, make_incoherent_drive, make_number_hamiltonian,
    make_scully_lamb_decoherence, make_scully_lamb_gain, make_two_photon_loss,
    DiagonalHamiltonian, LadderJump,
};

/// Operational meaning of `sqrt(beta/xi) << 1`.
pub const DEFAULT_SATURATION_WARNING: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    #[default]
    Lab,
    Rotating,
}

impl std::str::FromStr for Frame {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lab" => Ok(Frame::Lab),
            "rotating" => Ok(Frame::Rotating),
            other => Err(Error::param(format!("unknown frame '{other}'"))),
        }
    }
}

impl std::fmt::Display for Frame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Frame::Lab => "lab",
            Frame::Rotating => "rotating",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelFamily {
    /// Incoherently driven cavity with one- and two-photon loss.
    Btc,
    ScullyLamb,
    /// Hand-assembled jump list; no mean-field oracle.
    #[serde(skip)]
    Custom,
}

impl std::fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelFamily::Btc => "btc",
            ModelFamily::ScullyLamb => "scully-lamb",
            ModelFamily::Custom => "custom",
        })
    }
}

/// Unscaled physical rates (units of 1/time).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rates {
    pub gamma: f64,
    pub xi: f64,
    pub eta: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default)]
    pub omega_c: f64,
}

impl Default for Rates {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            xi: 1.25,
            eta: 0.1,
            beta: 0.0,
            omega_c: 1.0,
        }
    }
}

/// Everything that determines a model except the Fock cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub family: ModelFamily,
    pub rates: Rates,
    /// Thermodynamic-limit scaling parameter `N >= 1`.
    pub n_scale: u32,
    pub frame: Frame,
    pub saturation_warning: f64,
}

impl ModelParams {
    pub fn new(family: ModelFamily, rates: Rates, n_scale: u32, frame: Frame) -> Self {
        Self {
            family,
            rates,
            n_scale,
            frame,
            saturation_warning: DEFAULT_SATURATION_WARNING,
        }
    }

    pub fn with_frame(mut self, frame: Frame) -> Self {
        self.frame = frame;
        self
    }

    pub fn with_xi(mut self, xi: f64) -> Self {
        self.rates.xi = xi;
        self
    }

    pub fn with_n_scale(mut self, n_scale: u32) -> Self {
        self.n_scale = n_scale;
        self
    }

    pub fn build(&self, n_max: usize) -> Result<ModelSpec> {
        let mut spec = match self.family {
            ModelFamily::Btc => build_btc_model(&self.rates, self.n_scale, n_max, self.frame)?,
            ModelFamily::ScullyLamb => build_scully_lamb_with(
                &self.rates,
                self.n_scale,
                n_max,
                self.frame,
                self.saturation_warning,
            )?,
            ModelFamily::Custom => {
                return Err(Error::param("custom models are assembled with ModelSpec::new"))
            }
        };
        spec.params.saturation_warning = self.saturation_warning;
        Ok(spec)
    }

    /// `<n>/N` of the stable mean-field fixed point as `N -> ∞`.
    pub fn semiclassical_fixed_point(&self) -> Result<f64> {
        semiclassical_fixed_point(self)
    }
}

/// A fully tabulated model at a fixed cutoff.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub name: String,
    n_max: usize,
    hamiltonian: DiagonalHamiltonian,
    jumps: Vec<LadderJump>,
    pub params: ModelParams,
    warnings: Vec<String>,
}

impl ModelSpec {
    pub fn new(
        name: impl Into<String>,
        hamiltonian: DiagonalHamiltonian,
        jumps: Vec<LadderJump>,
        params: ModelParams,
    ) -> Result<Self> {
        let n_max = hamiltonian.n_max();
        if let Some(j) = jumps.iter().find(|j| j.n_max() != n_max) {
            return Err(Error::param(format!(
                "jump '{}' is sized for n_max={}, Hamiltonian for {n_max}",
                j.label(),
                j.n_max()
            )));
        }
        if params.frame == Frame::Rotating && !hamiltonian.is_zero() {
            return Err(Error::param("rotating-frame model must have h(n) = 0"));
        }
        if params.n_scale == 0 {
            return Err(Error::param("scaling parameter N must be >= 1"));
        }
        Ok(Self {
            name: name.into(),
            n_max,
            hamiltonian,
            jumps,
            params,
            warnings: Vec::new(),
        })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn hamiltonian(&self) -> &DiagonalHamiltonian {
        &self.hamiltonian
    }

    pub fn jumps(&self) -> &[LadderJump] {
        &self.jumps
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn frame(&self) -> Frame {
        self.params.frame
    }

    pub fn gamma(&self) -> f64 {
        self.params.rates.gamma
    }

    pub fn omega_c(&self) -> f64 {
        self.params.rates.omega_c
    }

    /// The same dissipators with the Hamiltonian removed.
    pub fn to_rotating(&self) -> Self {
        let mut out = self.clone();
        out.hamiltonian = DiagonalHamiltonian::zero(self.n_max);
        out.params.frame = Frame::Rotating;
        out
    }

    /// True when every jump table and the Hamiltonian are real.
    pub fn is_real(&self) -> bool {
        self.jumps
            .iter()
            .all(|j| j.amplitudes().iter().all(|a| a.im == 0.0))
    }

    fn warn(&mut self, msg: String) {
        log::warn!("{}: {msg}", self.name);
        self.warnings.push(msg);
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() || v <= 0.0 {
        return Err(Error::param(format!("{name} must be > 0, got {v}")));
    }
    Ok(())
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() || v < 0.0 {
        return Err(Error::param(format!("{name} must be >= 0, got {v}")));
    }
    Ok(())
}

fn hamiltonian_for(omega_c: f64, n_max: usize, frame: Frame) -> Result<DiagonalHamiltonian> {
    match frame {
        Frame::Lab => make_number_hamiltonian(omega_c, n_max),
        Frame::Rotating => {
            if n_max < 1 {
                return Err(Error::param("n_max must be >= 1"));
            }
            Ok(DiagonalHamiltonian::zero(n_max))
        }
    }
}

/// Incoherently driven cavity with one- and two-photon loss, `η -> η/N`.
pub fn build_btc_model(rates: &Rates, n_scale: u32, n_max: usize, frame: Frame) -> Result<ModelSpec> {
    check_positive("gamma", rates.gamma)?;
    check_nonneg("xi", rates.xi)?;
    check_nonneg("eta", rates.eta)?;
    if n_scale == 0 {
        return Err(Error::param("scaling parameter N must be >= 1"));
    }
    let n = n_scale as f64;
    let jumps = vec![
        make_annihilation(rates.gamma, n_max)?,
        make_two_photon_loss(rates.eta / n, n_max)?,
        make_incoherent_drive(rates.xi, n_max)?,
    ];
    let params = ModelParams::new(ModelFamily::Btc, *rates, n_scale, frame);
    let mut spec = ModelSpec::new(
        format!("btc(xi={}, N={n_scale})", rates.xi),
        hamiltonian_for(rates.omega_c, n_max, frame)?,
        jumps,
        params,
    )?;
    if rates.eta == 0.0 && rates.xi >= rates.gamma {
        spec.warn("eta = 0 with xi >= gamma: steady state is set by the cutoff".into());
    }
    Ok(spec)
}

/// Saturable-gain laser with `η -> η/N`, `β -> β/N²`.
pub fn build_scully_lamb(rates: &Rates, n_scale: u32, n_max: usize, frame: Frame) -> Result<ModelSpec> {
    build_scully_lamb_with(rates, n_scale, n_max, frame, DEFAULT_SATURATION_WARNING)
}

pub fn build_scully_lamb_with(
    rates: &Rates,
    n_scale: u32,
    n_max: usize,
    frame: Frame,
    saturation_warning: f64,
) -> Result<ModelSpec> {
    check_positive("gamma", rates.gamma)?;
    check_nonneg("xi", rates.xi)?;
    check_nonneg("eta", rates.eta)?;
    check_positive("beta", rates.beta)?;
    if n_scale == 0 {
        return Err(Error::param("scaling parameter N must be >= 1"));
    }
    let n = n_scale as f64;
    let beta_scaled = rates.beta / (n * n);
    let jumps = vec![
        make_scully_lamb_gain(rates.xi, beta_scaled, n_max)?,
        make_scully_lamb_decoherence(rates.eta / n, n_max)?,
        make_annihilation(rates.gamma, n_max)?,
    ];
    let mut params = ModelParams::new(ModelFamily::ScullyLamb, *rates, n_scale, frame);
    params.saturation_warning = saturation_warning;
    let mut spec = ModelSpec::new(
        format!("scully-lamb(xi={}, N={n_scale})", rates.xi),
        hamiltonian_for(rates.omega_c, n_max, frame)?,
        jumps,
        params,
    )?;
    let ratio = (beta_scaled / rates.xi).sqrt();
    if !(ratio <= saturation_warning) {
        spec.warn(format!(
            "sqrt(beta/xi) = {ratio:.3} exceeds {saturation_warning}: outside the weak-saturation regime"
        ));
    }
    Ok(spec)
}

/// Pure single-photon loss, optionally with a cavity frequency. Mostly a test fixture.
pub fn build_pure_loss(gamma: f64, omega_c: f64, n_max: usize, frame: Frame) -> Result<ModelSpec> {
    let rates = Rates {
        gamma,
        xi: 0.0,
        eta: 0.0,
        beta: 0.0,
        omega_c,
    };
    ModelSpec::new(
        "pure-loss",
        hamiltonian_for(omega_c, n_max, frame)?,
        vec![make_annihilation(gamma, n_max)?],
        ModelParams::new(ModelFamily::Custom, rates, 1, frame),
    )
}

/// Maps laser gain `A` and saturation `B` to `(ξ, β, η) = (A, B²/(4A), 3B/4)`.
pub fn sl_params_from_ab(a: f64, b: f64) -> Result<(f64, f64, f64)> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::param(format!("gain A must be > 0, got {a}")));
    }
    check_nonneg("B", b)?;
    Ok((a, b * b / (4.0 * a), 3.0 * b / 4.0))
}

/// Mean-field `<a†a>/N` in the thermodynamic limit (see module docs).
pub fn semiclassical_fixed_point(params: &ModelParams) -> Result<f64> {
    let r = &params.rates;
    match params.family {
        ModelFamily::Btc => {
            if r.xi <= r.gamma {
                Ok(0.0)
            } else if r.eta == 0.0 {
                Ok(f64::INFINITY)
            } else {
                Ok((r.xi - r.gamma) / (2.0 * r.eta))
            }
        }
        ModelFamily::ScullyLamb => {
            if r.xi <= r.gamma {
                Ok(0.0)
            } else {
                Ok((r.xi.sqrt() - r.gamma.sqrt()) / r.beta.sqrt())
            }
        }
        ModelFamily::Custom => Err(Error::param("no mean-field oracle for custom models")),
    }
}

/// Cutoff heuristic: `ceil(safety · N · m*) + floor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffPolicy {
    pub safety: f64,
    pub floor: usize,
}

impl Default for CutoffPolicy {
    fn default() -> Self {
        Self {
            safety: 4.0,
            floor: 20,
        }
    }
}

pub fn suggest_cutoff(params: &ModelParams, policy: CutoffPolicy) -> Result<usize> {
    let m = semiclassical_fixed_point(params)?;
    if !m.is_finite() {
        return Err(Error::param("mean-field photon number diverges; set n_max explicitly"));
    }
    Ok((policy.safety * params.n_scale as f64 * m).ceil() as usize + policy.floor)
}
