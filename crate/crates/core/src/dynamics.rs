// Copyright 2026 lindsector Contributors
// SPDX-License-Identifier: Apache-2.0

//! Sector-resolved time evolution and steady-state two-time correlations.
//!
//! A regression initial condition such as `ρ_ss a†` lives on a single
//! diagonal (`k = 1` for `C1`, `k = 2` for `C2`), so only that block is
//! propagated:
//!
//! ```text
//! C1(τ) = <a†(0) a(τ)> = Tr[a e^{Lτ}(ρ_ss a†)],  x_p(0) = x_ss(p) √p,          C1 = Σ_p √p x_p(τ)
//! C2(τ) = <a†²(0) a²(τ)> = Tr[a² e^{Lτ}(ρ_ss a†²)], x_p(0) = x_ss(p) √(p(p-1)), C2 = Σ_p √(p(p-1)) x_p(τ)
//! ```

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{Frame, ModelSpec};
use crate::sector::{build_sector_matrix, sector_support, SectorMatrix};
use crate::spectra::{eigendecompose, Eigendecomposition, SteadyState};

/// Above this eigenvector condition number the spectral path is abandoned.
pub const CONDITION_LIMIT: f64 = 1e8;
/// `|α0|² · FIELD_SAFETY` must fit below the cutoff.
pub const FIELD_SAFETY: f64 = 4.0;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Coefficients `c_p` of `Σ_p c_p |p><p-k|`.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorVector {
    pub k: i64,
    pub coeffs: Vec<Complex64>,
}

impl SectorVector {
    pub fn zeros(k: i64, n_max: usize) -> Result<Self> {
        let len = sector_support(k, n_max)?.count();
        Ok(Self {
            k,
            coeffs: vec![ZERO; len],
        })
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn sum(&self) -> Complex64 {
        self.coeffs.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PropagationPath {
    Spectral,
    Ode,
}

impl PropagationPath {
    fn name(self) -> &'static str {
        match self {
            PropagationPath::Spectral => "spectral",
            PropagationPath::Ode => "ode",
        }
    }
}

impl std::fmt::Display for PropagationPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Tolerances of the Dormand-Prince fallback.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeTolerances {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for OdeTolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-20,
            max_steps: 5_000_000,
        }
    }
}

/// Compressed-column copy of a block for the ODE right-hand side.
#[derive(Debug, Clone)]
struct SparseBlock {
    dim: usize,
    col_start: Vec<usize>,
    rows: Vec<usize>,
    vals: Vec<Complex64>,
}

impl SparseBlock {
    fn from_block(m: &SectorMatrix) -> Self {
        let dim = m.dim();
        let mut col_start = vec![0];
        let mut rows = Vec::new();
        let mut vals = Vec::new();
        for j in 0..dim {
            for i in 0..dim {
                let v = m.entries[(i, j)];
                if v != ZERO {
                    rows.push(i);
                    vals.push(v);
                }
            }
            col_start.push(rows.len());
        }
        Self {
            dim,
            col_start,
            rows,
            vals,
        }
    }

    fn apply_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        y.iter_mut().for_each(|v| *v = ZERO);
        for (j, xj) in x.iter().enumerate() {
            for idx in self.col_start[j]..self.col_start[j + 1] {
                y[self.rows[idx]] += self.vals[idx] * xj;
            }
        }
    }

    fn max_column_norm(&self) -> f64 {
        (0..self.dim)
            .map(|j| {
                (self.col_start[j]..self.col_start[j + 1])
                    .map(|i| self.vals[i].norm())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

// Dormand-Prince 5(4) tableau.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Adaptive integration of `ẋ = M x` through the (non-decreasing) output times.
fn integrate(
    block: &SparseBlock,
    x0: &[Complex64],
    times: &[f64],
    tol: OdeTolerances,
) -> Option<Vec<Vec<Complex64>>> {
    let n = block.dim;
    let mut y = x0.to_vec();
    let mut t = 0.0;
    let scale0 = y.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    let atol = tol.atol * scale0;
    let mut h = 0.5 / block.max_column_norm().max(1e-12);
    let mut k: Vec<Vec<Complex64>> = vec![vec![ZERO; n]; 7];
    let mut stage = vec![ZERO; n];
    let mut y5 = vec![ZERO; n];
    let mut out = Vec::with_capacity(times.len());
    let mut steps = 0usize;
    block.apply_into(&y, &mut k[0]);

    for &target in times {
        while t < target {
            steps += 1;
            if steps > tol.max_steps {
                return None;
            }
            let last = t + h >= target;
            let hh = if last { target - t } else { h };
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = y[i];
                    for (r, a) in A[s].iter().take(s).enumerate() {
                        if *a != 0.0 {
                            acc += k[r][i] * (hh * a);
                        }
                    }
                    stage[i] = acc;
                }
                block.apply_into(&stage, &mut k[s]);
            }
            let mut err_sq = 0.0;
            for i in 0..n {
                let mut v5 = y[i];
                let mut e = ZERO;
                for s in 0..7 {
                    v5 += k[s][i] * (hh * B5[s]);
                    e += k[s][i] * (hh * (B5[s] - B4[s]));
                }
                y5[i] = v5;
                let sc = atol + tol.rtol * y[i].norm().max(v5.norm());
                err_sq += (e.norm() / sc).powi(2);
            }
            let err = (err_sq / n as f64).sqrt();
            if !err.is_finite() {
                return None;
            }
            if err <= 1.0 {
                t = if last { target } else { t + hh };
                std::mem::swap(&mut y, &mut y5);
                // FSAL: the 7th stage is M y_{n+1}.
                let (first, rest) = k.split_at_mut(1);
                first[0].copy_from_slice(&rest[5]);
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if !(last && err <= 1.0) {
                h = hh * fac;
            }
        }
        out.push(y.clone());
    }
    Some(out)
}

/// Propagator `e^{Mτ}` for one sector block.
#[derive(Debug, Clone)]
pub struct SectorPropagator {
    block: SectorMatrix,
    path: PropagationPath,
    evd: Option<Eigendecomposition>,
    condition: f64,
    sparse: SparseBlock,
    pub ode: OdeTolerances,
}

impl SectorPropagator {
    /// Uses the spectral path unless the eigenvector condition number
    /// exceeds [`CONDITION_LIMIT`] or the decomposition fails.
    pub fn new(block: SectorMatrix) -> Result<Self> {
        let sparse = SparseBlock::from_block(&block);
        let (evd, condition) = match eigendecompose(&block) {
            Ok(e) => {
                let c = e.condition_number().unwrap_or(f64::INFINITY);
                (Some(e), c)
            }
            Err(err) => {
                log::info!("sector {}: falling back to ODE path ({err})", block.k);
                (None, f64::INFINITY)
            }
        };
        let path = if condition.is_finite() && condition <= CONDITION_LIMIT {
            PropagationPath::Spectral
        } else {
            PropagationPath::Ode
        };
        Ok(Self {
            block,
            path,
            evd,
            condition,
            sparse,
            ode: OdeTolerances::default(),
        })
    }

    /// Forces one path; the spectral path requires a successful decomposition.
    pub fn with_path(block: SectorMatrix, path: PropagationPath) -> Result<Self> {
        let mut p = Self::new(block)?;
        if path == PropagationPath::Spectral && p.evd.is_none() {
            return Err(Error::Propagation {
                path: "spectral",
                k: p.block.k,
            });
        }
        p.path = path;
        Ok(p)
    }

    pub fn path(&self) -> PropagationPath {
        self.path
    }

    pub fn condition_number(&self) -> f64 {
        self.condition
    }

    pub fn block(&self) -> &SectorMatrix {
        &self.block
    }

    fn check_input(&self, x0: &SectorVector) -> Result<()> {
        if x0.k != self.block.k || x0.coeffs.len() != self.block.dim() {
            return Err(Error::param(format!(
                "vector (k={}, len {}) does not match block (k={}, dim {})",
                x0.k,
                x0.coeffs.len(),
                self.block.k,
                self.block.dim()
            )));
        }
        Ok(())
    }

    pub fn evolve(&self, x0: &SectorVector, tau: f64) -> Result<SectorVector> {
        Ok(self.evolve_grid(x0, &[tau])?.pop().expect("one time requested"))
    }

    /// Evolves `x0` to every time in a non-decreasing grid of `τ >= 0`.
    pub fn evolve_grid(&self, x0: &SectorVector, taus: &[f64]) -> Result<Vec<SectorVector>> {
        self.check_input(x0)?;
        if taus.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || taus.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::param("time grid must be finite, non-negative and non-decreasing"));
        }
        let k = self.block.k;
        let out: Vec<Vec<Complex64>> = match self.path {
            PropagationPath::Spectral => {
                let evd = self.evd.as_ref().expect("spectral path has a decomposition");
                let w = evd.left.as_ref().expect("left vectors present");
                let n = evd.dim();
                let weights: Vec<Complex64> = (0..n)
                    .map(|i| (0..n).map(|r| w[(r, i)].conj() * x0.coeffs[r]).sum())
                    .collect();
                taus.par_iter()
                    .map(|&tau| {
                        if tau == 0.0 {
                            return x0.coeffs.clone();
                        }
                        let mut x = vec![ZERO; n];
                        for i in 0..n {
                            let c = (evd.values[i] * tau).exp() * weights[i];
                            if c == ZERO {
                                continue;
                            }
                            for (r, xr) in x.iter_mut().enumerate() {
                                *xr += c * evd.right[(r, i)];
                            }
                        }
                        x
                    })
                    .collect()
            }
            PropagationPath::Ode => integrate(&self.sparse, &x0.coeffs, taus, self.ode).ok_or(
                Error::Propagation {
                    path: self.path.name(),
                    k,
                },
            )?,
        };
        if out.iter().flatten().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Propagation {
                path: self.path.name(),
                k,
            });
        }
        Ok(out
            .into_iter()
            .map(|coeffs| SectorVector { k, coeffs })
            .collect())
    }
}

/// `x(τ) = e^{Mτ} x0` for a single time.
pub fn evolve_sector(m: &SectorMatrix, x0: &SectorVector, tau: f64) -> Result<SectorVector> {
    if tau == 0.0 {
        SectorPropagator::new(m.clone())?.check_input(x0)?;
        return Ok(x0.clone());
    }
    SectorPropagator::new(m.clone())?.evolve(x0, tau)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TraceKind {
    C1,
    C2,
    Field,
}

impl std::fmt::Display for TraceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TraceKind::C1 => "C1",
            TraceKind::C2 => "C2",
            TraceKind::Field => "field",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationTrace {
    pub kind: TraceKind,
    pub taus: Vec<f64>,
    pub values: Vec<Complex64>,
    pub model: String,
    pub frame: Frame,
    pub n_max: usize,
    pub path: PropagationPath,
}

impl CorrelationTrace {
    /// CSV with `#`-prefixed metadata lines, then `tau,re,im`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# kind={}", self.kind)?;
        writeln!(w, "# model={}", self.model)?;
        writeln!(w, "# frame={}", self.frame)?;
        writeln!(w, "# n_max={}", self.n_max)?;
        writeln!(w, "# path={}", self.path)?;
        let mut csv = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        csv.write_record(["tau", "re", "im"])?;
        for (t, v) in self.taus.iter().zip(&self.values) {
            csv.write_record([t.to_string(), v.re.to_string(), v.im.to_string()])?;
        }
        csv.flush()?;
        Ok(())
    }
}

fn check_grid(taus: &[f64]) -> Result<()> {
    if taus.is_empty() {
        return Err(Error::param("empty time grid"));
    }
    if taus.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || taus.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("time grid must be non-negative and strictly increasing"));
    }
    Ok(())
}

/// Evolves a weighted steady state `x_p = ss(p)·f(p)` in sector `k` and traces against `f`.
fn regression(
    model: &ModelSpec,
    ss: &SteadyState,
    taus: &[f64],
    k: i64,
    kind: TraceKind,
    weight: impl Fn(i64) -> f64,
) -> Result<CorrelationTrace> {
    check_grid(taus)?;
    if ss.n_max() != model.n_max() {
        return Err(Error::param(format!(
            "steady state has n_max={}, model {}",
            ss.n_max(),
            model.n_max()
        )));
    }
    let support = sector_support(k, model.n_max())?;
    let ws: Vec<f64> = support.clone().map(&weight).collect();
    let x0 = SectorVector {
        k,
        coeffs: support
            .clone()
            .zip(&ws)
            .map(|(p, w)| Complex64::new(ss.occupations[p as usize] * w, 0.0))
            .collect(),
    };
    let prop = SectorPropagator::new(build_sector_matrix(model, k)?)?;
    let states = prop.evolve_grid(&x0, taus)?;
    let values = states
        .iter()
        .map(|x| x.coeffs.iter().zip(&ws).map(|(c, w)| c * w).sum())
        .collect();
    Ok(CorrelationTrace {
        kind,
        taus: taus.to_vec(),
        values,
        model: model.name.clone(),
        frame: model.frame(),
        n_max: model.n_max(),
        path: prop.path(),
    })
}

/// `C1(τ) = <a†(0) a(τ)>_ss`.
pub fn correlation_c1(model: &ModelSpec, ss: &SteadyState, taus: &[f64]) -> Result<CorrelationTrace> {
    regression(model, ss, taus, 1, TraceKind::C1, |p| (p as f64).sqrt())
}

/// `C2(τ) = <a†²(0) a²(τ)>_ss`.
pub fn correlation_c2(model: &ModelSpec, ss: &SteadyState, taus: &[f64]) -> Result<CorrelationTrace> {
    regression(model, ss, taus, 2, TraceKind::C2, |p| ((p * (p - 1)) as f64).sqrt())
}

/// Truncated coherent state `|α>` on `0..=n_max`, normalized.
pub fn truncated_coherent_state(alpha: Complex64, n_max: usize) -> Vec<Complex64> {
    let mut psi = Vec::with_capacity(n_max + 1);
    let mut c = Complex64::new(1.0, 0.0);
    psi.push(c);
    for n in 1..=n_max {
        c = c * alpha / (n as f64).sqrt();
        psi.push(c);
    }
    let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    psi.iter_mut().for_each(|z| *z /= norm);
    psi
}

/// `<a>(τ)` from the `k = 1` part of `|α0><α0|`.
pub fn field_trace(model: &ModelSpec, alpha0: Complex64, taus: &[f64]) -> Result<CorrelationTrace> {
    check_grid(taus)?;
    let n_max = model.n_max();
    if alpha0.norm_sqr() * FIELD_SAFETY > n_max as f64 {
        return Err(Error::Cutoff {
            n_max,
            detail: format!("|α0|² = {:.3} needs n_max >= {:.0}", alpha0.norm_sqr(), alpha0.norm_sqr() * FIELD_SAFETY),
        });
    }
    let psi = truncated_coherent_state(alpha0, n_max);
    let support = sector_support(1, n_max)?;
    let x0 = SectorVector {
        k: 1,
        coeffs: support.clone().map(|p| psi[p as usize] * psi[p as usize - 1].conj()).collect(),
    };
    let ws: Vec<f64> = support.map(|p| (p as f64).sqrt()).collect();
    let prop = SectorPropagator::new(build_sector_matrix(model, 1)?)?;
    let values = prop
        .evolve_grid(&x0, taus)?
        .iter()
        .map(|x| x.coeffs.iter().zip(&ws).map(|(c, w)| c * w).sum())
        .collect();
    Ok(CorrelationTrace {
        kind: TraceKind::Field,
        taus: taus.to_vec(),
        values,
        model: model.name.clone(),
        frame: model.frame(),
        n_max,
        path: prop.path(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrequencyEstimate {
    /// Angular frequency.
    pub omega: f64,
    pub uncertainty: f64,
    pub crossings: usize,
}

/// Angular frequency from the mean zero-crossing spacing of `Re(trace) - mean`.
pub fn dominant_frequency(trace: &CorrelationTrace) -> Result<FrequencyEstimate> {
    let re: Vec<f64> = trace.values.iter().map(|z| z.re).collect();
    dominant_frequency_of(&trace.taus, &re)
}

pub fn dominant_frequency_of(taus: &[f64], signal: &[f64]) -> Result<FrequencyEstimate> {
    if signal.len() != taus.len() || signal.is_empty() {
        return Err(Error::UndefinedFrequency { crossings: 0 });
    }
    let mean = signal.iter().sum::<f64>() / signal.len() as f64;
    let y: Vec<f64> = signal.iter().map(|v| v - mean).collect();
    let mut crossings = Vec::new();
    for i in 1..y.len() {
        let (a, b) = (y[i - 1], y[i]);
        if (a < 0.0) != (b < 0.0) {
            let frac = if b == a { 0.0 } else { a / (a - b) };
            crossings.push(taus[i - 1] + frac * (taus[i] - taus[i - 1]));
        }
    }
    if crossings.len() < 4 {
        return Err(Error::UndefinedFrequency {
            crossings: crossings.len(),
        });
    }
    let spacings: Vec<f64> = crossings.windows(2).map(|w| w[1] - w[0]).collect();
    let n = spacings.len() as f64;
    let mean_spacing = spacings.iter().sum::<f64>() / n;
    let var = spacings.iter().map(|s| (s - mean_spacing).powi(2)).sum::<f64>() / (n - 1.0);
    let omega = std::f64::consts::PI / mean_spacing;
    Ok(FrequencyEstimate {
        omega,
        uncertainty: omega * var.sqrt() / mean_spacing / n.sqrt(),
        crossings: crossings.len(),
    })
}

/// Uniform grid `start, start+step, ..., <= stop`.
pub fn uniform_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(stop >= start) {
        return Err(Error::param("grid needs step > 0 and stop >= start"));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + step * i as f64).collect())
}
