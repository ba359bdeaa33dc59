// Copyright 2026 lindsector Contributors
// SPDX-License-Identifier: Apache-2.0

//! Parameter sweeps over `(ξ, N)` and eigenvalue snapshots.
//!
//! Sweep points run in the rotating frame, where every block is real.
//! Steady-state quantities are frame independent, and the rotating-frame
//! gap is what flows to zero at the transition.

use std::io::Write;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{suggest_cutoff, CutoffPolicy, Frame, ModelParams, ModelSpec};
use crate::sector::build_sector_matrix;
use crate::spectra::{
    eigendecompose_right, eigenvalues, expectation_number, spectrum_order, steady_state_from,
    ModelSpectrum, SpectrumEntry, SteadyState, TAIL_LIMIT,
};

/// Knobs shared by every point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSettings {
    /// Gap search covers sectors `0..=k_cap` (negative sectors are conjugates).
    pub k_cap: usize,
    /// Fixed cutoff for every point; disables escalation.
    pub n_max: Option<usize>,
    pub policy: CutoffPolicy,
    /// Times the cutoff may grow by half when the tail check trips.
    pub escalations: usize,
    /// Upper bound on concurrent point evaluations.
    pub workers: usize,
    pub tail_limit: f64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            k_cap: 2,
            n_max: None,
            policy: CutoffPolicy::default(),
            escalations: 4,
            workers: 1,
            tail_limit: TAIL_LIMIT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RowStatus {
    Ok,
    Truncation,
    Failed,
}

/// One `(ξ, N)` point. Numbers are in units of `Γ`; failed points keep
/// whatever was computed and say why in `message`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub model: String,
    pub xi_over_gamma: f64,
    pub n_scale: u32,
    pub n_max: usize,
    pub mean_photons_per_n: Option<f64>,
    pub gap_re: Option<f64>,
    pub gap_im: Option<f64>,
    /// `|k|` of the gap sector.
    pub gap_sector: Option<i64>,
    pub tail_weight: Option<f64>,
    pub wall_time_s: f64,
    pub status: RowStatus,
    pub message: String,
}

impl SweepRow {
    pub fn is_ok(&self) -> bool {
        self.status == RowStatus::Ok
    }
}

/// A model at a cutoff whose steady state passed the tail check.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub model: ModelSpec,
    pub steady: SteadyState,
    /// Sector-0 eigenvalues, reused for the gap.
    pub sector0: Vec<Complex64>,
}

/// Builds `params` at the configured or suggested cutoff, growing a
/// suggested cutoff by half while the steady-state tail is too heavy.
pub fn resolve_cutoff(params: &ModelParams, settings: &SweepSettings) -> Result<Resolved> {
    let (mut n_max, mut left) = match settings.n_max {
        Some(n) => (n, 0),
        None => (suggest_cutoff(params, settings.policy)?, settings.escalations),
    };
    loop {
        let model = params.build(n_max)?;
        let m0 = build_sector_matrix(&model, 0)?;
        let s0 = eigendecompose_right(&m0)?;
        let steady = steady_state_from(&m0, &s0, params.rates.gamma)?;
        if steady.tail_weight > settings.tail_limit && left > 0 {
            log::debug!(
                "{} xi={} N={}: tail {:.2e} at n_max={n_max}, growing cutoff",
                params.family,
                params.rates.xi,
                params.n_scale,
                steady.tail_weight
            );
            left -= 1;
            n_max += n_max.div_ceil(2);
            continue;
        }
        steady.check_tail(settings.tail_limit)?;
        return Ok(Resolved {
            model,
            steady,
            sector0: s0.values,
        });
    }
}

fn evaluate_point(params: &ModelParams, settings: &SweepSettings) -> SweepRow {
    let start = Instant::now();
    let gamma = params.rates.gamma;
    let mut row = SweepRow {
        model: params.family.to_string(),
        xi_over_gamma: params.rates.xi / gamma,
        n_scale: params.n_scale,
        n_max: settings.n_max.unwrap_or(0),
        mean_photons_per_n: None,
        gap_re: None,
        gap_im: None,
        gap_sector: None,
        tail_weight: None,
        wall_time_s: 0.0,
        status: RowStatus::Failed,
        message: String::new(),
    };
    let outcome = resolve_cutoff(params, settings).and_then(|r| {
        row.n_max = r.model.n_max();
        row.tail_weight = Some(r.steady.tail_weight);
        row.mean_photons_per_n = Some(expectation_number(&r.steady) / params.n_scale as f64);
        if let Some(gap) = rotating_gap(&r.model, &r.sector0, settings.k_cap)? {
            row.gap_re = Some(gap.lambda.re / gamma);
            row.gap_im = Some(gap.lambda.im / gamma);
            row.gap_sector = Some(gap.k);
        }
        Ok(())
    });
    match outcome {
        Ok(()) => row.status = RowStatus::Ok,
        Err(e) => {
            if let Error::Truncation { tail_weight, n_max, .. } = e {
                row.status = RowStatus::Truncation;
                row.n_max = n_max;
                row.tail_weight = Some(tail_weight);
            }
            row.message = e.to_string();
            log::warn!("sweep point xi={} N={} flagged: {e}", params.rates.xi, params.n_scale);
        }
    }
    row.wall_time_s = start.elapsed().as_secs_f64();
    row
}

/// Gap over sectors `0..=k_cap` given the sector-0 eigenvalues.
fn rotating_gap(model: &ModelSpec, sector0: &[Complex64], k_cap: usize) -> Result<Option<SpectrumEntry>> {
    let cap = k_cap.min(model.n_max()) as i64;
    let stationary = (0..sector0.len()).min_by(|&a, &b| sector0[a].norm().total_cmp(&sector0[b].norm()));
    let mut entries: Vec<SpectrumEntry> = sector0
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != stationary)
        .map(|(i, &lambda)| SpectrumEntry { lambda, k: 0, index_in_sector: i, residual: f64::NAN })
        .collect();
    for k in 1..=cap {
        let vals = eigenvalues(&build_sector_matrix(model, k)?)?;
        entries.extend(vals.into_iter().enumerate().map(|(i, lambda)| SpectrumEntry {
            lambda,
            k,
            index_in_sector: i,
            residual: f64::NAN,
        }));
    }
    entries.sort_by(spectrum_order);
    Ok(entries.into_iter().next())
}

fn check_grids(xis: &[f64], ns: &[u32]) -> Result<()> {
    if xis.is_empty() {
        return Err(Error::param("empty ξ grid"));
    }
    if ns.is_empty() {
        return Err(Error::param("empty N list"));
    }
    if let Some(n) = ns.iter().find(|&&n| n == 0) {
        return Err(Error::param(format!("N must be >= 1, got {n}")));
    }
    if let Some(x) = xis.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(Error::param(format!("ξ must be finite and >= 0, got {x}")));
    }
    Ok(())
}

fn run_points(base: &ModelParams, xis: &[f64], ns: &[u32], settings: &SweepSettings) -> Result<Vec<SweepRow>> {
    check_grids(xis, ns)?;
    // Validate the base rates once so a bad config fails before any work.
    base.with_xi(xis[0]).with_n_scale(ns[0]).build(2)?;
    let points: Vec<ModelParams> = xis
        .iter()
        .flat_map(|&xi| {
            ns.iter()
                .map(move |&n| base.with_xi(xi).with_n_scale(n).with_frame(Frame::Rotating))
        })
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.workers.max(1))
        .build()
        .map_err(|e| Error::param(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| points.par_iter().map(|p| evaluate_point(p, settings)).collect()))
}

/// `<n>/N` and the rotating-frame gap on the `ξ × N` grid, ξ-major.
pub fn sweep_order_parameter(
    base: &ModelParams,
    xis: &[f64],
    ns: &[u32],
    settings: &SweepSettings,
) -> Result<Vec<SweepRow>> {
    run_points(base, xis, ns, settings)
}

/// Same rows as [`sweep_order_parameter`], read for `λ1` versus `N`.
pub fn gap_flow(base: &ModelParams, xis: &[f64], ns: &[u32], settings: &SweepSettings) -> Result<Vec<SweepRow>> {
    run_points(base, xis, ns, settings)
}

/// `start, start + step, ...` up to `stop`, rounded to 12 decimals so
/// grid values print the way they were written.
pub fn step_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && stop >= start && start.is_finite() && stop.is_finite()) {
        return Err(Error::param(format!("bad grid {start}..{stop} step {step}")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n)
        .map(|i| ((start + step * i as f64) * 1e12).round() / 1e12)
        .collect())
}

/// Largest finite-difference slope of `<n>/N` versus `ξ/Γ` for one `N`.
pub fn max_slope(rows: &[SweepRow], n_scale: u32) -> Option<f64> {
    let mut pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.n_scale == n_scale && r.is_ok())
        .filter_map(|r| r.mean_photons_per_n.map(|m| (r.xi_over_gamma, m)))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.windows(2)
        .filter(|w| w[1].0 > w[0].0)
        .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
        .reduce(f64::max)
}

pub fn write_rows_csv<W: Write>(rows: &[SweepRow], w: W) -> Result<()> {
    let mut csv = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    for r in rows {
        csv.serialize(r)?;
    }
    if rows.is_empty() {
        csv.write_record(SWEEP_HEADER)?;
    }
    csv.flush()?;
    Ok(())
}

const SWEEP_HEADER: [&str; 12] = [
    "model",
    "xi_over_gamma",
    "n_scale",
    "n_max",
    "mean_photons_per_n",
    "gap_re",
    "gap_im",
    "gap_sector",
    "tail_weight",
    "wall_time_s",
    "status",
    "message",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SnapshotEntry {
    pub re: f64,
    pub im: f64,
    pub k: i64,
    /// `|Im λ - jω_c|/Γ` for the nearest integer `j`.
    pub line_distance: f64,
    /// `|Im λ + kω_c|/Γ`, the distance to the sector's own line in the lab frame.
    pub sector_line_distance: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumSnapshot {
    pub model: String,
    pub frame: Frame,
    pub xi_over_gamma: f64,
    pub n_scale: u32,
    pub n_max: usize,
    pub omega_c_over_gamma: f64,
    pub k_cap: usize,
    pub entries: Vec<SnapshotEntry>,
    /// The slowest mode of sector `k_cap + 1` is slower than the last
    /// entry, so a larger `k_cap` would change the list.
    pub k_cap_limited: bool,
}

impl SpectrumSnapshot {
    pub fn max_line_distance(&self) -> f64 {
        self.entries.iter().map(|e| e.line_distance).fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut csv = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        for e in &self.entries {
            csv.serialize(e)?;
        }
        csv.flush()?;
        Ok(())
    }
}

/// The `m` smallest-`|Re λ|` eigenvalues over `|k| <= k_cap`, in units of `Γ`.
pub fn spectrum_snapshot(model: &ModelSpec, m: usize, k_cap: usize) -> Result<SpectrumSnapshot> {
    let spectrum = ModelSpectrum::compute(model, k_cap)?;
    let all = spectrum.entries();
    if m == 0 || m > all.len() {
        return Err(Error::param(format!("m = {m} outside 1..={}", all.len())));
    }
    let gamma = model.gamma();
    let omega = model.omega_c();
    let line = |im: f64| -> f64 {
        if omega == 0.0 {
            im.abs()
        } else {
            (im - omega * (im / omega).round()).abs()
        }
    };
    let shift = |k: i64| -> f64 {
        match model.frame() {
            Frame::Lab => -omega * k as f64,
            Frame::Rotating => 0.0,
        }
    };
    let entries: Vec<SnapshotEntry> = all[..m]
        .iter()
        .map(|e| SnapshotEntry {
            re: e.lambda.re / gamma,
            im: e.lambda.im / gamma,
            k: e.k,
            line_distance: line(e.lambda.im) / gamma,
            sector_line_distance: (e.lambda.im - shift(e.k)).abs() / gamma,
            residual: e.residual,
        })
        .collect();
    let k_cap_limited = if k_cap < model.n_max() {
        let next = eigenvalues(&build_sector_matrix(model, k_cap as i64 + 1)?)?;
        let slowest = next.iter().map(|z| z.re.abs()).fold(f64::INFINITY, f64::min);
        slowest < all[m - 1].lambda.re.abs()
    } else {
        false
    };
    let p = &model.params;
    Ok(SpectrumSnapshot {
        model: model.name.clone(),
        frame: model.frame(),
        xi_over_gamma: p.rates.xi / gamma,
        n_scale: p.n_scale,
        n_max: model.n_max(),
        omega_c_over_gamma: omega / gamma,
        k_cap,
        entries,
        k_cap_limited,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ModelFamily, Rates};
    use crate::spectra::steady_state;

    fn btc(xi: f64, eta: f64) -> ModelParams {
        ModelParams::new(
            ModelFamily::Btc,
            Rates { gamma: 1.0, xi, eta, beta: 0.0, omega_c: 1.0 },
            1,
            Frame::Lab,
        )
    }

    #[test]
    fn rows_follow_grid_order() {
        let rows = sweep_order_parameter(&btc(1.0, 1.0), &[0.5, 1.25], &[5, 10], &SweepSettings::default()).unwrap();
        let keys: Vec<(f64, u32)> = rows.iter().map(|r| (r.xi_over_gamma, r.n_scale)).collect();
        assert_eq!(keys, vec![(0.5, 5), (0.5, 10), (1.25, 5), (1.25, 10)]);
        assert!(rows.iter().all(|r| r.is_ok()));
    }

    #[test]
    fn vacuum_rows() {
        let rows = sweep_order_parameter(&btc(0.0, 1.0), &[0.0], &[5, 10, 20, 40], &SweepSettings::default()).unwrap();
        for r in rows {
            assert!(r.is_ok());
            assert!(r.mean_photons_per_n.unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn pure_loss_gap_is_half_gamma() {
        let rows = gap_flow(&btc(0.0, 0.0), &[0.0], &[1, 7], &SweepSettings::default()).unwrap();
        for r in rows {
            assert!((r.gap_re.unwrap() + 0.5).abs() < 1e-12, "{:?}", r.gap_re);
            assert_eq!(r.gap_sector, Some(1));
        }
    }

    #[test]
    fn rotating_sweep_matches_lab_steady_state() {
        let base = btc(1.25, 1.0);
        let rows = sweep_order_parameter(&base, &[0.75, 1.25], &[10], &SweepSettings::default()).unwrap();
        for r in rows {
            let lab = base.with_xi(r.xi_over_gamma).with_n_scale(10).build(r.n_max).unwrap();
            let n = expectation_number(&steady_state(&lab).unwrap()) / 10.0;
            assert!((n - r.mean_photons_per_n.unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn sharpening_from_ten_photons_up() {
        let xis = step_grid(0.5, 1.5, 0.1).unwrap();
        let rows = sweep_order_parameter(&btc(1.0, 1.0), &xis, &[10, 20, 40], &SweepSettings::default()).unwrap();
        let s: Vec<f64> = [10, 20, 40].iter().map(|&n| max_slope(&rows, n).unwrap()).collect();
        assert!(s[0] <= s[1] && s[1] <= s[2], "{s:?}");
    }

    #[test]
    fn forced_small_cutoff_is_flagged_not_dropped() {
        let settings = SweepSettings { n_max: Some(5), ..Default::default() };
        let rows = sweep_order_parameter(&btc(1.75, 0.1), &[1.75], &[40], &settings).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].status, RowStatus::Truncation);
        assert!(rows[0].tail_weight.unwrap() > TAIL_LIMIT);
        assert!(rows[0].message.contains("n_max"));
    }

    #[test]
    fn cutoff_escalates_until_tail_passes() {
        // Below threshold the floor cutoff is too small for a weak nonlinearity.
        let rows = sweep_order_parameter(&btc(0.9, 0.1), &[0.9], &[10], &SweepSettings::default()).unwrap();
        assert!(rows[0].is_ok(), "{}", rows[0].message);
        assert!(rows[0].n_max > 20);
        assert!(rows[0].tail_weight.unwrap() <= TAIL_LIMIT);
    }

    #[test]
    fn grid_values_are_clean() {
        let g = step_grid(0.5, 1.5, 0.05).unwrap();
        assert_eq!(g.len(), 21);
        assert_eq!(g[7], 0.85);
        assert_eq!(g[20], 1.5);
        assert!(step_grid(1.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn empty_grids_rejected() {
        let s = SweepSettings::default();
        assert!(sweep_order_parameter(&btc(1.0, 1.0), &[1.0], &[], &s).is_err());
        assert!(sweep_order_parameter(&btc(1.0, 1.0), &[], &[5], &s).is_err());
        let mut bad = btc(1.0, 1.0);
        bad.rates.gamma = -1.0;
        assert!(sweep_order_parameter(&bad, &[1.0], &[5], &s).is_err());
    }

    #[test]
    fn csv_is_deterministic_apart_from_timing() {
        let run = |workers| {
            let s = SweepSettings { workers, ..Default::default() };
            let rows = sweep_order_parameter(&btc(1.0, 1.0), &[0.75, 1.25], &[5, 10], &s).unwrap();
            let mut buf = Vec::new();
            write_rows_csv(&rows, &mut buf).unwrap();
            String::from_utf8(buf)
                .unwrap()
                .lines()
                .map(|l| {
                    let mut f: Vec<&str> = l.split(',').collect();
                    f.remove(9);
                    f.join(",")
                })
                .collect::<Vec<_>>()
        };
        let a = run(1);
        assert_eq!(a[0], SWEEP_HEADER.iter().filter(|h| **h != "wall_time_s").cloned().collect::<Vec<_>>().join(","));
        assert_eq!(a, run(3));
    }

    #[test]
    fn snapshot_contains_steady_state_and_frame_shift() {
        let p = btc(1.25, 0.1).with_n_scale(3);
        let lab = p.build(40).unwrap();
        let snap = spectrum_snapshot(&lab, 12, 3).unwrap();
        let first = snap.entries[0];
        assert!(first.re.abs() < 1e-10 && first.im.abs() < 1e-10 && first.k == 0);

        let rot = spectrum_snapshot(&lab.to_rotating(), 40, 3).unwrap();
        for e in &snap.entries {
            let hit = rot.entries.iter().any(|r| {
                r.k == e.k && (r.re - e.re).abs() < 1e-10 && (r.im - (e.im + e.k as f64)).abs() < 1e-10
            });
            assert!(hit, "{e:?}");
        }
        assert!(spectrum_snapshot(&lab, 0, 3).is_err());
        assert!(spectrum_snapshot(&lab, 10_000, 3).is_err());
    }
}
