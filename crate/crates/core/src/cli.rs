// Copyright 2026 lindsector Contributors
// SPDX-License-Identifier: Apache-2.0

//! Command-line front end.
//!
//! Exit codes: 0 success, 1 bad parameters or config (nothing written),
//! 2 truncation or cutoff failure, 3 a verification check failed.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;

use crate::config::{CorrelationKind, ModelSection, OutputFormat, RunConfig};
use crate::dynamics::{
    correlation_c1, correlation_c2, dominant_frequency, field_trace, CorrelationTrace, PropagationPath,
    SectorPropagator, SectorVector,
};
use crate::error::{Error, Result};
use crate::models::{Frame, ModelFamily};
use crate::sector::{build_all_sectors, build_full_superoperator, build_sector_matrix, compare_with_blocks};
use crate::spectra::{conjugation_pairing, expectation_number, frame_shift_check, steady_state_unchecked, ModelSpectrum};
use crate::sweeps::{resolve_cutoff, spectrum_snapshot, sweep_order_parameter, write_rows_csv, Resolved};

const VERIFY_ORACLE_NMAX: usize = 8;
const VERIFY_REGRESSION_NMAX: usize = 30;
/// Whole-spectrum comparisons need every eigenvalue resolved to ~1e-10;
/// beyond this cutoff the fast modes are too ill-conditioned for that.
pub const VERIFY_SPECTRAL_NMAX: usize = 60;

#[derive(Debug, Parser)]
#[command(name = "lindsector", version, about = "Symmetry-sector Liouvillian spectra, steady states and correlations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Bundled recipe: fig1, fig2, fig3, fig3-below, fig4, fig5.
    #[arg(long, global = true, conflicts_with = "config")]
    pub preset: Option<String>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_parser = ["csv", "json"])]
    pub format: Option<String>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true)]
    pub kcap: Option<usize>,
    /// Number of eigenvalues in a spectrum snapshot.
    #[arg(long, global = true)]
    pub m: Option<usize>,
    /// Fixed Fock cutoff.
    #[arg(long, global = true)]
    pub nmax: Option<usize>,
    #[arg(long, global = true, value_parser = ["lab", "rotating"])]
    pub frame: Option<String>,
    /// Model family; without a config this selects its default parameters.
    #[arg(long, global = true, value_parser = ["btc", "scully-lamb"])]
    pub family: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub xi: Option<f64>,
    /// Thermodynamic scaling parameter N.
    #[arg(long = "nscale", global = true)]
    pub n_scale: Option<u32>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Slowest eigenvalues with sector labels and kω_c line distances.
    Spectrum,
    /// <n>/N and the rotating-frame gap over a ξ × N grid.
    Sweep,
    /// Steady-state two-time correlations C1 and/or C2.
    Correlate {
        #[arg(long, value_parser = ["c1", "c2"])]
        kind: Vec<String>,
    },
    /// Runs the exactness and invariant checks.
    Verify {
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Steady-state photon distribution.
    Steady,
    /// Liouvillian gap in the configured frame.
    Gap,
    /// <a>(τ) from an initial coherent state.
    Fieldtrace {
        /// Real part of α0.
        #[arg(long, allow_hyphen_values = true)]
        alpha_re: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        alpha_im: Option<f64>,
    },
}

/// Parses arguments, runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Truncation { .. } | Error::Cutoff { .. } | Error::NegativeOccupation { .. } => 2,
        _ => 1,
    }
}

fn model_defaults(family: ModelFamily) -> ModelSection {
    match family {
        ModelFamily::ScullyLamb => ModelSection {
            family,
            xi: 1.5,
            eta: 0.1,
            beta: 0.005,
            ..ModelSection::default()
        },
        _ => ModelSection::default(),
    }
}

/// Config file or preset, then flag overrides.
pub fn resolve_config(c: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = match (&c.config, &c.preset) {
        (Some(p), _) => RunConfig::load(p)?,
        (None, Some(name)) => RunConfig::preset(name)?,
        (None, None) => RunConfig::default(),
    };
    if let Some(f) = &c.family {
        let family = match f.as_str() {
            "scully-lamb" => ModelFamily::ScullyLamb,
            _ => ModelFamily::Btc,
        };
        if c.config.is_none() && c.preset.is_none() {
            cfg.model = model_defaults(family);
        } else {
            cfg.model.family = family;
        }
    }
    if let Some(p) = &c.out {
        cfg.output.path = Some(p.clone());
    }
    if let Some(f) = &c.format {
        cfg.output.format = f.parse()?;
    }
    if let Some(w) = c.workers {
        cfg.workers = w;
    }
    if let Some(k) = c.kcap {
        cfg.spectrum.k_cap = k;
        cfg.sweep.k_cap = k;
    }
    if let Some(m) = c.m {
        cfg.spectrum.m = m;
    }
    if let Some(n) = c.nmax {
        cfg.model.n_max = Some(n);
    }
    if let Some(f) = &c.frame {
        cfg.model.frame = f.parse()?;
    }
    if let Some(x) = c.xi {
        cfg.model.xi = x;
    }
    if let Some(n) = c.n_scale {
        cfg.model.n_scale = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn dispatch(cli: &Cli) -> Result<i32> {
    let cfg = resolve_config(&cli.common)?;
    match &cli.command {
        Command::Spectrum => cmd_spectrum(&cfg),
        Command::Sweep => cmd_sweep(&cfg),
        Command::Correlate { kind } => {
            let mut cfg = cfg;
            if !kind.is_empty() {
                cfg.correlate.kinds = kind
                    .iter()
                    .map(|k| if k == "c2" { CorrelationKind::C2 } else { CorrelationKind::C1 })
                    .collect();
            }
            cmd_correlate(&cfg)
        }
        Command::Verify { inject_fault } => cmd_verify(&cfg, *inject_fault),
        Command::Steady => cmd_steady(&cfg),
        Command::Gap => cmd_gap(&cfg),
        Command::Fieldtrace { alpha_re, alpha_im } => {
            let mut cfg = cfg;
            if let Some(a) = alpha_re {
                cfg.correlate.alpha0[0] = *a;
            }
            if let Some(a) = alpha_im {
                cfg.correlate.alpha0[1] = *a;
            }
            cmd_fieldtrace(&cfg)
        }
    }
}

/// Writes the whole payload at once so failures never leave partial files.
fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes)?,
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn resolve_model(cfg: &RunConfig) -> Result<Resolved> {
    let r = resolve_cutoff(&cfg.model.params(), &cfg.sweep_settings())?;
    for w in r.model.warnings() {
        log::warn!("{w}");
    }
    Ok(r)
}

pub fn cmd_spectrum(cfg: &RunConfig) -> Result<i32> {
    let r = resolve_model(cfg)?;
    let snap = spectrum_snapshot(&r.model, cfg.spectrum.m, cfg.spectrum.k_cap)?;
    if snap.k_cap_limited {
        log::warn!(
            "sector {} has modes slower than the last listed entry; raise --kcap for a complete list",
            cfg.spectrum.k_cap + 1
        );
    }
    let bytes = match cfg.output.format {
        OutputFormat::Csv => {
            let mut buf = Vec::new();
            snap.write_csv(&mut buf)?;
            buf
        }
        OutputFormat::Json => json_bytes(&snap)?,
    };
    emit(cfg.output.path.as_deref(), &bytes)?;
    Ok(0)
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<i32> {
    let xis = cfg.sweep.xi_grid()?;
    let rows = sweep_order_parameter(&cfg.model.params(), &xis, &cfg.sweep.n_list, &cfg.sweep_settings())?;
    let bytes = match cfg.output.format {
        OutputFormat::Csv => {
            let mut buf = Vec::new();
            write_rows_csv(&rows, &mut buf)?;
            buf
        }
        OutputFormat::Json => json_bytes(&rows)?,
    };
    emit(cfg.output.path.as_deref(), &bytes)?;
    let flagged = rows.iter().filter(|r| !r.is_ok()).count();
    if flagged > 0 {
        eprintln!("{flagged} of {} sweep points flagged (see status column)", rows.len());
        return Ok(2);
    }
    Ok(0)
}

fn trace_path(base: Option<&Path>, kind: &str, many: bool) -> Option<PathBuf> {
    let base = base?;
    if !many {
        return Some(base.to_path_buf());
    }
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match base.extension() {
        Some(ext) => format!("{stem}_{kind}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{kind}"),
    };
    Some(base.with_file_name(name))
}

fn trace_bytes(trace: &CorrelationTrace, format: OutputFormat) -> Result<Vec<u8>> {
    match format {
        OutputFormat::Csv => {
            let mut buf = Vec::new();
            trace.write_csv(&mut buf)?;
            Ok(buf)
        }
        OutputFormat::Json => json_bytes(trace),
    }
}

/// Writes each trace, then reports its dominant frequency. An undefined
/// frequency is a parameter problem (grid too short) and gives exit 1.
fn finish_traces(cfg: &RunConfig, traces: &[CorrelationTrace]) -> Result<i32> {
    let many = traces.len() > 1;
    let mut payloads = Vec::new();
    for t in traces {
        let kind = t.kind.to_string().to_lowercase();
        payloads.push((trace_path(cfg.output.path.as_deref(), &kind, many), trace_bytes(t, cfg.output.format)?));
    }
    for (p, b) in &payloads {
        emit(p.as_deref(), b)?;
    }
    let mut code = 0;
    for t in traces {
        match dominant_frequency(t) {
            Ok(f) => eprintln!(
                "{}: dominant angular frequency {:.6} ± {:.1e} ({} crossings, {} path)",
                t.kind, f.omega, f.uncertainty, f.crossings, t.path
            ),
            Err(e) => {
                eprintln!("{}: {e}", t.kind);
                code = 1;
            }
        }
    }
    Ok(code)
}

pub fn cmd_correlate(cfg: &RunConfig) -> Result<i32> {
    let taus = cfg.correlate.taus(cfg.model.gamma)?;
    let r = resolve_model(cfg)?;
    let mut traces = Vec::new();
    for kind in &cfg.correlate.kinds {
        traces.push(match kind {
            CorrelationKind::C1 => correlation_c1(&r.model, &r.steady, &taus)?,
            CorrelationKind::C2 => correlation_c2(&r.model, &r.steady, &taus)?,
        });
    }
    finish_traces(cfg, &traces)
}

pub fn cmd_fieldtrace(cfg: &RunConfig) -> Result<i32> {
    let taus = cfg.correlate.taus(cfg.model.gamma)?;
    let r = resolve_model(cfg)?;
    let trace = field_trace(&r.model, cfg.correlate.alpha0(), &taus)?;
    finish_traces(cfg, &[trace])
}

#[derive(Debug, Serialize)]
struct OccupationRow {
    n: usize,
    probability: f64,
}

#[derive(Debug, Serialize)]
struct SteadyReport<'a> {
    model: &'a str,
    n_max: usize,
    mean_photons: f64,
    mean_photons_per_n: f64,
    tail_weight: f64,
    residual: f64,
    occupations: &'a [f64],
}

pub fn cmd_steady(cfg: &RunConfig) -> Result<i32> {
    let r = resolve_model(cfg)?;
    let mean = expectation_number(&r.steady);
    eprintln!(
        "n_max={} <n>={mean:.10} <n>/N={:.10} tail={:.3e}",
        r.model.n_max(),
        mean / cfg.model.n_scale as f64,
        r.steady.tail_weight
    );
    let bytes = match cfg.output.format {
        OutputFormat::Csv => csv_bytes(
            &r.steady
                .occupations
                .iter()
                .enumerate()
                .map(|(n, &probability)| OccupationRow { n, probability })
                .collect::<Vec<_>>(),
        )?,
        OutputFormat::Json => json_bytes(&SteadyReport {
            model: &r.model.name,
            n_max: r.model.n_max(),
            mean_photons: mean,
            mean_photons_per_n: mean / cfg.model.n_scale as f64,
            tail_weight: r.steady.tail_weight,
            residual: r.steady.residual,
            occupations: &r.steady.occupations,
        })?,
    };
    emit(cfg.output.path.as_deref(), &bytes)?;
    Ok(0)
}

#[derive(Debug, Serialize)]
struct GapRow {
    frame: Frame,
    n_max: usize,
    re: f64,
    im: f64,
    k: i64,
}

pub fn cmd_gap(cfg: &RunConfig) -> Result<i32> {
    let r = resolve_model(cfg)?;
    let spec = ModelSpectrum::compute(&r.model, cfg.spectrum.k_cap)?;
    let gap = spec
        .gap()
        .ok_or_else(|| Error::Parameter("spectrum has a single entry; no gap".into()))?;
    let g = r.model.gamma();
    let row = GapRow {
        frame: r.model.frame(),
        n_max: r.model.n_max(),
        re: gap.lambda.re / g,
        im: gap.lambda.im / g,
        k: gap.k,
    };
    let bytes = match cfg.output.format {
        OutputFormat::Csv => csv_bytes(&[row])?,
        OutputFormat::Json => json_bytes(&row)?,
    };
    emit(cfg.output.path.as_deref(), &bytes)?;
    Ok(0)
}

/// One row of the verification table.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub check: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckResult {
    fn new(check: &str, value: f64, tolerance: f64) -> Self {
        Self {
            check: check.to_string(),
            value,
            tolerance,
            pass: value.is_finite() && value < tolerance,
        }
    }
}

/// Runs the invariant bundle for the configured model.
pub fn verify_checks(cfg: &RunConfig, inject_fault: bool) -> Result<Vec<CheckResult>> {
    let params = cfg.model.params();
    let k_cap = cfg.spectrum.k_cap;
    let mut out = Vec::new();

    // Full superoperator against the direct sum of blocks.
    let small = params.build(VERIFY_ORACLE_NMAX)?;
    let full = build_full_superoperator(&small)?;
    let mut blocks = build_all_sectors(&small, VERIFY_ORACLE_NMAX)?;
    if inject_fault {
        blocks[VERIFY_ORACLE_NMAX].entries[(0, 0)] += Complex64::new(1e-6, 0.0);
    }
    out.push(CheckResult::new("block_equivalence", compare_with_blocks(&full, &blocks).deviation, 1e-12));

    let n_max = match cfg.model.n_max {
        Some(n) => n,
        None => crate::models::suggest_cutoff(&params, cfg.sweep_settings().policy)?,
    };
    let model = params.build(n_max)?;
    let spectral = params.build(n_max.min(VERIFY_SPECTRAL_NMAX))?;
    let shift = frame_shift_check(&spectral, k_cap.min(spectral.n_max()))?;
    if shift.linear {
        out.push(CheckResult::new("frame_shift", shift.max_deviation, shift.tolerance));
    }

    let m0 = build_sector_matrix(&model, 0)?;
    let col = m0.column_sums().iter().map(|s| s.norm()).fold(0.0, f64::max);
    out.push(CheckResult::new("trace_preservation", col, 1e-12 * m0.norm().max(1.0)));

    let scale = model.gamma().max(model.omega_c().abs());
    out.push(CheckResult::new(
        "conjugation_pairing",
        conjugation_pairing(&spectral, k_cap.min(spectral.n_max()))?,
        1e-10 * scale,
    ));

    let reg = params.build(n_max.min(VERIFY_REGRESSION_NMAX))?;
    let ss = steady_state_unchecked(&reg)?;
    let b1 = build_sector_matrix(&reg, 1)?;
    let x0 = SectorVector {
        k: 1,
        coeffs: b1.support().map(|p| Complex64::new(ss.occupations[p as usize] * (p as f64).sqrt(), 0.0)).collect(),
    };
    let taus = [0.5, 2.0, 10.0];
    let s = SectorPropagator::with_path(b1.clone(), PropagationPath::Spectral)?.evolve_grid(&x0, &taus)?;
    let o = SectorPropagator::with_path(b1, PropagationPath::Ode)?.evolve_grid(&x0, &taus)?;
    let rel = s
        .iter()
        .zip(&o)
        .map(|(a, b)| {
            let d: f64 = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
            d / b.norm().max(1e-300)
        })
        .fold(0.0, f64::max);
    out.push(CheckResult::new("regression_consistency", rel, 1e-6));
    Ok(out)
}

pub fn cmd_verify(cfg: &RunConfig, inject_fault: bool) -> Result<i32> {
    let checks = verify_checks(cfg, inject_fault)?;
    let mut table = String::new();
    for c in &checks {
        table.push_str(&format!(
            "{:<24} {:>12.3e} < {:<10.1e} {}\n",
            c.check,
            c.value,
            c.tolerance,
            if c.pass { "PASS" } else { "FAIL" }
        ));
    }
    print!("{table}");
    if let Some(p) = &cfg.output.path {
        let bytes = match cfg.output.format {
            OutputFormat::Csv => csv_bytes(&checks)?,
            OutputFormat::Json => json_bytes(&checks)?,
        };
        emit(Some(p), &bytes)?;
    }
    let failed: Vec<&CheckResult> = checks.iter().filter(|c| !c.pass).collect();
    if failed.is_empty() {
        return Ok(0);
    }
    for c in failed {
        eprintln!("verification failed: {} deviation {:.3e} (tolerance {:.1e})", c.check, c.value, c.tolerance);
    }
    Ok(3)
}
