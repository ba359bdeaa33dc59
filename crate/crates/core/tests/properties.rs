// Copyright 2026 lindsector Contributors
// SPDX-License-Identifier: Apache-2.0

//! Structural invariants over randomly drawn models.

use lindsector::config::RunConfig;
use lindsector::dynamics::{correlation_c1, correlation_c2, field_trace, uniform_grid};
use lindsector::models::{build_pure_loss, semiclassical_fixed_point, Frame, ModelFamily, ModelParams, ModelSpec, Rates};
use lindsector::sector::{build_sector_matrix, verify_block_equivalence};
use lindsector::spectra::{conjugation_pairing, eigenvalues, expectation_number, sorted_spectrum, steady_state_unchecked};
use lindsector::sweeps::{max_slope, sweep_order_parameter};
use num_complex::Complex64;
use proptest::prelude::*;

fn family() -> impl Strategy<Value = ModelFamily> {
    prop_oneof![Just(ModelFamily::Btc), Just(ModelFamily::ScullyLamb)]
}

prop_compose! {
    fn params(frame: Frame)(
        fam in family(),
        xi in 0.0..2.5f64,
        eta in 0.01..1.0f64,
        beta in 0.001..0.05f64,
        omega_c in -2.0..2.0f64,
        n in 1u32..12,
    ) -> ModelParams {
        let beta = if fam == ModelFamily::Btc { 0.0 } else { beta };
        ModelParams::new(fam, Rates { gamma: 1.0, xi, eta, beta, omega_c }, n, frame)
    }
}

fn max_abs(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn blocks_match_full_superoperator(p in params(Frame::Lab), n_max in 2usize..=8) {
        let m = p.build(n_max).unwrap();
        prop_assert!(verify_block_equivalence(&m).unwrap().deviation < 1e-12);
    }

    #[test]
    fn populations_block_preserves_trace(p in params(Frame::Lab), n_max in 2usize..40) {
        let m0 = build_sector_matrix(&p.build(n_max).unwrap(), 0).unwrap();
        prop_assert!(max_abs(&m0.column_sums()) <= 1e-12 * m0.norm().max(1.0));
    }

    #[test]
    fn opposite_sectors_are_conjugate(p in params(Frame::Lab), n_max in 3usize..25, k in 1i64..4) {
        let m = p.build(n_max).unwrap();
        let (a, b) = (build_sector_matrix(&m, k).unwrap(), build_sector_matrix(&m, -k).unwrap());
        prop_assert_eq!(a.dim(), b.dim());
        for i in 0..a.dim() {
            for j in 0..a.dim() {
                prop_assert_eq!(b.get(i, j), a.get(i, j).conj());
            }
        }
        prop_assert!(conjugation_pairing(&m, 3).unwrap() < 1e-10);
    }

    #[test]
    fn cavity_frequency_shifts_each_block_by_a_scalar(p in params(Frame::Lab), n_max in 4usize..30, k in -4i64..=4) {
        let m = p.build(n_max).unwrap();
        let mut still = p.clone();
        still.rates.omega_c = 0.0;
        let m_still = still.build(n_max).unwrap();
        let (a, b) = (build_sector_matrix(&m, k).unwrap(), build_sector_matrix(&m_still, k).unwrap());
        let shift = Complex64::new(0.0, -p.rates.omega_c * k as f64);
        let tol = 1e-12 * (1.0 + (p.rates.omega_c * n_max as f64).abs());
        for i in 0..a.dim() {
            for j in 0..a.dim() {
                let expected = if i == j { shift } else { Complex64::new(0.0, 0.0) };
                prop_assert!((a.get(i, j) - b.get(i, j) - expected).norm() <= tol);
            }
        }
    }

    #[test]
    fn rotating_model_keeps_the_jumps(p in params(Frame::Lab), n_max in 3usize..30) {
        let lab = p.build(n_max).unwrap();
        let rot = p.clone().with_frame(Frame::Rotating).build(n_max).unwrap();
        prop_assert!(rot.hamiltonian().is_zero());
        prop_assert_eq!(lab.jumps().len(), rot.jumps().len());
        for (a, b) in lab.jumps().iter().zip(rot.jumps()) {
            prop_assert_eq!(a.amplitudes(), b.amplitudes());
        }
        for k in -3i64..=3 {
            prop_assert!(build_sector_matrix(&rot, k).unwrap().is_real());
        }
    }

    #[test]
    fn rotating_spectra_close_under_conjugation(p in params(Frame::Rotating), n_max in 2usize..25, k in 0i64..3) {
        let ev = eigenvalues(&build_sector_matrix(&p.build(n_max).unwrap(), k).unwrap()).unwrap();
        let scale = 1.0 + max_abs(&ev);
        for z in &ev {
            let d = ev.iter().map(|w| (w - z.conj()).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(d < 1e-9 * scale, "{} has no conjugate partner", z);
        }
    }

    #[test]
    fn doubling_n_rescales_only_the_nonlinear_rates(p in params(Frame::Lab), n_max in 3usize..30) {
        let a = p.build(n_max).unwrap();
        let b = p.clone().with_n_scale(p.n_scale * 2).build(n_max).unwrap();
        for (ja, jb) in a.jumps().iter().zip(b.jumps()) {
            for n in 0..=n_max as i64 {
                let (x, y) = (ja.amp(n).re, jb.amp(n).re);
                match ja.label() {
                    "two-photon loss" | "field decoherence" => prop_assert!((y * y - 0.5 * x * x).abs() <= 1e-12 * x * x),
                    "saturable gain" => {
                        // sqrt(m) (sqrt(xi) - sqrt(beta) m): quartering beta halves its square root.
                        let m = (n + 1) as f64;
                        let sb = (p.rates.beta / (p.n_scale as f64).powi(2)).sqrt();
                        let expected = m.sqrt() * (p.rates.xi.sqrt() - 0.5 * sb * m);
                        if n < n_max as i64 {
                            prop_assert!((y - expected).abs() <= 1e-12 * (1.0 + expected.abs()));
                        }
                    }
                    _ => prop_assert_eq!(x, y),
                }
            }
        }
    }

    #[test]
    fn steady_state_is_a_distribution(p in params(Frame::Lab), n_max in 4usize..40) {
        let m = p.build(n_max).unwrap();
        prop_assume!(m.warnings().is_empty());
        let ss = steady_state_unchecked(&m).unwrap();
        prop_assert!((ss.occupations.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(ss.occupations.iter().all(|&x| x >= 0.0));
        prop_assert!(ss.min_entry >= -1e-10);
    }

    #[test]
    fn accepted_eigenvalues_have_small_residuals(p in params(Frame::Lab), n_max in 3usize..30) {
        let m = p.build(n_max).unwrap();
        let norm = (-3i64..=3).map(|k| build_sector_matrix(&m, k).unwrap().norm()).fold(0.0, f64::max);
        let entries = sorted_spectrum(&m, 3).unwrap();
        prop_assert_eq!(entries[0].k, 0);
        prop_assert!(entries[0].lambda.re.abs() < 1e-10);
        prop_assert!(entries.iter().all(|e| e.residual <= 1e-8 * norm.max(1.0)));
    }

    #[test]
    fn fixed_point_vanishes_below_threshold(xi in 0.0..1.0f64, eta in 0.01..2.0f64, n in 1u32..50) {
        let p = ModelParams::new(ModelFamily::Btc, Rates { gamma: 1.0, xi, eta, beta: 0.0, omega_c: 1.0 }, n, Frame::Lab);
        prop_assert_eq!(semiclassical_fixed_point(&p).unwrap(), 0.0);
    }

    #[test]
    fn fixed_point_is_continuous(xi in 0.0..3.0f64, eta in 0.01..2.0f64) {
        let p = ModelParams::new(ModelFamily::Btc, Rates { gamma: 1.0, xi, eta, beta: 0.0, omega_c: 1.0 }, 10, Frame::Lab);
        let h = 1e-7;
        let (a, b) = (semiclassical_fixed_point(&p).unwrap(), semiclassical_fixed_point(&p.clone().with_xi(xi + h)).unwrap());
        prop_assert!((a - b).abs() <= 10.0 * h / eta);
    }

    #[test]
    fn config_round_trips(xi in 0.0..3.0f64, n in 1u32..100, k_cap in 0usize..10, workers in 1usize..8) {
        let mut cfg = RunConfig::preset("fig1").unwrap();
        cfg.model.xi = xi;
        cfg.model.n_scale = n;
        cfg.sweep.k_cap = k_cap;
        cfg.workers = workers;
        let back = RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn lab_correlation_is_rotating_times_phase(
        xi in 0.5..1.6f64, eta in 0.05..1.0f64, omega_c in 0.2..2.0f64, n in 1u32..6,
    ) {
        let p = ModelParams::new(ModelFamily::Btc, Rates { gamma: 1.0, xi, eta, beta: 0.0, omega_c }, n, Frame::Lab);
        let lab = p.build(30).unwrap();
        let rot = lab.to_rotating();
        let ss = steady_state_unchecked(&rot).unwrap();
        let taus = uniform_grid(0.0, 10.0, 0.5).unwrap();
        let a = correlation_c1(&lab, &ss, &taus).unwrap();
        let b = correlation_c1(&rot, &ss, &taus).unwrap();
        let scale = b.values[0].norm();
        for ((t, x), y) in taus.iter().zip(&a.values).zip(&b.values) {
            let expected = y * Complex64::from_polar(1.0, -omega_c * t);
            prop_assert!((x - expected).norm() <= 1e-8 * scale, "tau={} {} vs {}", t, x, expected);
        }
    }

    #[test]
    fn correlations_start_at_the_moments(p in params(Frame::Lab)) {
        let m = p.build(30).unwrap();
        prop_assume!(m.warnings().is_empty());
        let ss = steady_state_unchecked(&m).unwrap();
        let taus = [0.0, 1.0];
        let c1 = correlation_c1(&m, &ss, &taus).unwrap();
        let c2 = correlation_c2(&m, &ss, &taus).unwrap();
        let n = expectation_number(&ss);
        prop_assert!((c1.values[0] - n).norm() <= 1e-12 * n.max(1.0));
        let f2 = ss.factorial_moment2();
        prop_assert!((c2.values[0] - f2).norm() <= 1e-12 * f2.max(1.0));
    }
}

fn pure_loss(omega_c: f64, n_max: usize) -> ModelSpec {
    build_pure_loss(1.0, omega_c, n_max, Frame::Lab).unwrap()
}

#[test]
fn pure_loss_field_decays_exactly() {
    let alpha = Complex64::new(1.5, -0.5);
    let taus = uniform_grid(0.0, 20.0, 0.1).unwrap();
    let tr = field_trace(&pure_loss(1.3, 40), alpha, &taus).unwrap();
    let a0 = tr.values[0];
    let mut last = f64::INFINITY;
    for (t, v) in taus.iter().zip(&tr.values) {
        let exact = a0 * Complex64::new(-0.5 * t, -1.3 * t).exp();
        assert!((v - exact).norm() < 1e-9 * a0.norm(), "tau={t}");
        assert!(v.norm() <= last);
        last = v.norm();
    }
}

#[test]
fn coherences_decay_strictly_away_from_threshold() {
    for (fam, xi) in [(ModelFamily::Btc, 0.5), (ModelFamily::Btc, 2.0), (ModelFamily::ScullyLamb, 0.5)] {
        let beta = if fam == ModelFamily::Btc { 0.0 } else { 0.005 };
        let p = ModelParams::new(fam, Rates { gamma: 1.0, xi, eta: 0.5, beta, omega_c: 1.0 }, 4, Frame::Lab);
        let entries = sorted_spectrum(&p.build(40).unwrap(), 1).unwrap();
        let slowest = entries.iter().find(|e| e.k.abs() == 1).unwrap();
        assert!(slowest.lambda.re < -1e-12, "{fam:?} xi={xi}: {}", slowest.lambda);
    }
}

#[test]
fn order_parameter_slope_sharpens_with_n() {
    let cfg = RunConfig::preset("fig1").unwrap();
    let rows = sweep_order_parameter(&cfg.model.params(), &cfg.sweep.xi_grid().unwrap(), &cfg.sweep.n_list, &cfg.sweep_settings())
        .unwrap();
    let slopes: Vec<f64> = cfg.sweep.n_list.iter().map(|&n| max_slope(&rows, n).unwrap()).collect();
    assert!(
        slopes.windows(2).all(|w| w[1] >= w[0]),
        "max slope of <n>/N vs xi/gamma for N={:?}: {slopes:?}",
        cfg.sweep.n_list
    );
}
