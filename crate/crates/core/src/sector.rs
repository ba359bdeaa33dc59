// Copyright 2026 lindsector Contributors
// SPDX-License-Identifier: Apache-2.0

//! Symmetry-sector blocks of the Liouvillian.
//!
//! The generator commutes with `U_φ ρ = e^{-iφ a†a} ρ e^{iφ a†a}`, so it maps
//! every diagonal offset `k` (dyads `|p><p-k|`) into itself. Sector `k` has
//! basis `p = max(0,k) ..= min(n_max, n_max+k)` and dimension
//! `n_max + 1 - |k|`; each dissipator `D[L]` with `L|n> = A(n)|n+s>` acts as
//!
//! ```text
//! |p><p-k|  ->  A(p) A*(p-k) |p+s><p+s-k|  -  ½(|A(p)|² + |A(p-k)|²) |p><p-k|
//! ```
//!
//! and the Hamiltonian adds `-i(h(p) - h(p-k))` on the diagonal.
//!
//! [`FullSuperoperator`] is the brute-force `(n_max+1)² x (n_max+1)²`
//! generator built from dense operator products. It exists only to check
//! the blocks.

use std::ops::RangeInclusive;

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::models::ModelSpec;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Default size limit for [`build_full_superoperator`].
pub const ORACLE_LIMIT: usize = 12;

/// Fock indices `p` of the dyads `|p><p-k|` spanning sector `k`.
pub fn sector_support(k: i64, n_max: usize) -> Result<RangeInclusive<i64>> {
    let nm = n_max as i64;
    if k.abs() > nm {
        return Err(Error::EmptySector { k, n_max });
    }
    Ok(k.max(0)..=nm.min(nm + k))
}

/// Eigenvalue of the symmetry superoperator on sector `k`: `e^{-iφk}`.
pub fn apply_symmetry_phase(k: i64, phi: f64) -> Complex64 {
    Complex64::from_polar(1.0, -phi * k as f64)
}

/// Reduced Liouvillian on one diagonal offset.
#[derive(Debug, Clone)]
pub struct SectorMatrix {
    pub k: i64,
    pub n_max: usize,
    pub entries: Mat<Complex64>,
}

impl SectorMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// First Fock index of the basis; basis element `i` is `|lo+i><lo+i-k|`.
    pub fn offset(&self) -> i64 {
        self.k.max(0)
    }

    pub fn support(&self) -> RangeInclusive<i64> {
        let lo = self.offset();
        lo..=lo + self.dim() as i64 - 1
    }

    pub fn is_real(&self) -> bool {
        let m = &self.entries;
        (0..m.ncols()).all(|j| (0..m.nrows()).all(|i| m[(i, j)].im == 0.0))
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.entries.norm_l2()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[(i, j)]
    }

    /// Column sums; for `k = 0` these vanish for a trace-preserving generator.
    pub fn column_sums(&self) -> Vec<Complex64> {
        let m = &self.entries;
        (0..m.ncols())
            .map(|j| (0..m.nrows()).map(|i| m[(i, j)]).sum())
            .collect()
    }

    /// `y = M x`.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let m = &self.entries;
        let mut y = vec![ZERO; m.nrows()];
        for (j, xj) in x.iter().enumerate() {
            if *xj == ZERO {
                continue;
            }
            for (i, yi) in y.iter_mut().enumerate() {
                *yi += m[(i, j)] * xj;
            }
        }
        y
    }

    /// Nonzero pattern as `(row, col, value)`, column-major.
    pub fn triplets(&self) -> Vec<(usize, usize, Complex64)> {
        let m = &self.entries;
        let mut out = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let v = m[(i, j)];
                if v != ZERO {
                    out.push((i, j, v));
                }
            }
        }
        out
    }
}

/// Assembles the sector-`k` block of `-i[H,·] + Σ_j D[L_j]`.
pub fn build_sector_matrix(model: &ModelSpec, k: i64) -> Result<SectorMatrix> {
    let n_max = model.n_max();
    let support = sector_support(k, n_max)?;
    let (lo, hi) = (*support.start(), *support.end());
    let dim = (hi - lo + 1) as usize;
    let mut m = Mat::<Complex64>::zeros(dim, dim);
    let h = model.hamiltonian();

    for p in lo..=hi {
        let col = (p - lo) as usize;
        let q = p - k;
        for jump in model.jumps() {
            let (ap, aq) = (jump.amp(p), jump.amp(q));
            let target = p + jump.shift();
            if target >= lo && target <= hi {
                let gain = ap * aq.conj();
                if gain != ZERO {
                    m[((target - lo) as usize, col)] += gain;
                }
            }
            m[(col, col)] -= 0.5 * (ap.norm_sqr() + aq.norm_sqr());
        }
        let dh = match h.slope() {
            Some(w) => w * k as f64,
            None => h.energy(p as usize) - h.energy(q as usize),
        };
        if dh != 0.0 {
            m[(col, col)] -= Complex64::new(0.0, dh);
        }
    }
    Ok(SectorMatrix {
        k,
        n_max,
        entries: m,
    })
}

/// All sectors `-k_cap ..= k_cap`, in ascending `k`.
pub fn build_all_sectors(model: &ModelSpec, k_cap: usize) -> Result<Vec<SectorMatrix>> {
    let cap = k_cap.min(model.n_max()) as i64;
    (-cap..=cap).map(|k| build_sector_matrix(model, k)).collect()
}

/// Dense generator on all `(n_max+1)²` dyads, index of `|m><n|` is `m (n_max+1) + n`.
#[derive(Debug, Clone)]
pub struct FullSuperoperator {
    pub n_max: usize,
    pub entries: Mat<Complex64>,
}

impl FullSuperoperator {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn index(&self, m: usize, n: usize) -> usize {
        m * (self.n_max + 1) + n
    }
}

pub fn build_full_superoperator(model: &ModelSpec) -> Result<FullSuperoperator> {
    build_full_superoperator_with_limit(model, ORACLE_LIMIT)
}

pub fn build_full_superoperator_with_limit(model: &ModelSpec, limit: usize) -> Result<FullSuperoperator> {
    let n_max = model.n_max();
    if n_max > limit {
        return Err(Error::OracleGuard { n_max, limit });
    }
    let d = n_max + 1;
    let to_mat = |dense: Vec<Complex64>| Mat::from_fn(d, d, |i, j| dense[i * d + j]);

    let h = Mat::from_fn(d, d, |i, j| {
        if i == j {
            Complex64::new(model.hamiltonian().energy(i), 0.0)
        } else {
            ZERO
        }
    });
    let ops: Vec<Mat<Complex64>> = model.jumps().iter().map(|j| to_mat(j.to_dense())).collect();
    let daggers: Vec<Mat<Complex64>> = ops.iter().map(|l| l.adjoint().to_owned()).collect();
    let ldl: Vec<Mat<Complex64>> = ops.iter().zip(&daggers).map(|(l, ld)| ld * l).collect();
    let minus_i = Complex64::new(0.0, -1.0);

    let mut full = Mat::<Complex64>::zeros(d * d, d * d);
    for m in 0..d {
        for n in 0..d {
            let mut rho = Mat::<Complex64>::zeros(d, d);
            rho[(m, n)] = Complex64::new(1.0, 0.0);
            let mut out = (&h * &rho - &rho * &h) * faer::Scale(minus_i);
            for ((l, ld), lhl) in ops.iter().zip(&daggers).zip(&ldl) {
                out += l * &rho * ld;
                out -= (lhl * &rho + &rho * lhl) * faer::Scale(Complex64::new(0.5, 0.0));
            }
            let col = m * d + n;
            for i in 0..d {
                for j in 0..d {
                    full[(i * d + j, col)] = out[(i, j)];
                }
            }
        }
    }
    Ok(FullSuperoperator { n_max, entries: full })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockEquivalence {
    /// Max |full - ⊕ blocks| after reordering dyads by diagonal offset.
    pub deviation: f64,
    /// Max |entry| of the full generator outside the sector blocks.
    pub off_block: f64,
}

/// Dyads in diagonal-offset order: sectors `k = -n_max..=n_max`, ascending `p`.
pub fn sector_ordering(n_max: usize) -> Vec<(i64, usize)> {
    let nm = n_max as i64;
    let mut order = Vec::with_capacity((n_max + 1) * (n_max + 1));
    for k in -nm..=nm {
        for p in sector_support(k, n_max).expect("k in range") {
            order.push((k, (p * (nm + 1) + (p - k)) as usize));
        }
    }
    order
}

pub fn verify_block_equivalence(model: &ModelSpec) -> Result<BlockEquivalence> {
    let full = build_full_superoperator(model)?;
    let blocks = build_all_sectors(model, model.n_max())?;
    Ok(compare_with_blocks(&full, &blocks))
}

/// Compares a full generator against a set of sector blocks covering every `k`.
pub fn compare_with_blocks(full: &FullSuperoperator, blocks: &[SectorMatrix]) -> BlockEquivalence {
    let order = sector_ordering(full.n_max);
    let n = order.len();
    // Start offset of each sector in the permuted ordering.
    let nm = full.n_max as i64;
    let mut starts = Vec::with_capacity(2 * full.n_max + 1);
    let mut acc = 0usize;
    for k in -nm..=nm {
        starts.push(acc);
        acc += (full.n_max + 1) - k.unsigned_abs() as usize;
    }
    let block_of = |k: i64| blocks.iter().find(|b| b.k == k);

    let mut deviation = 0.0f64;
    let mut off_block = 0.0f64;
    for (col, &(kc, jc)) in order.iter().enumerate() {
        for (row, &(kr, ir)) in order.iter().enumerate() {
            let f = full.entries[(ir, jc)];
            if kr == kc {
                let s = starts[(kr + nm) as usize];
                let b = match block_of(kr) {
                    Some(b) => b.entries[(row - s, col - s)],
                    None => Complex64::new(f64::INFINITY, 0.0),
                };
                deviation = deviation.max((f - b).norm());
            } else {
                off_block = off_block.max(f.norm());
                deviation = deviation.max(f.norm());
            }
        }
    }
    debug_assert_eq!(n, full.dim());
    BlockEquivalence {
        deviation,
        off_block,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_btc_model, build_pure_loss, build_scully_lamb, Frame, Rates};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn btc(xi: f64, eta: f64, omega: f64, n: u32, n_max: usize, frame: Frame) -> ModelSpec {
        let rates = Rates { gamma: 1.0, xi, eta, beta: 0.0, omega_c: omega };
        build_btc_model(&rates, n, n_max, frame).unwrap()
    }

    #[test]
    fn support_ranges() {
        assert_eq!(sector_support(0, 10).unwrap(), 0..=10);
        assert_eq!(sector_support(3, 10).unwrap(), 3..=10);
        assert_eq!(sector_support(-2, 10).unwrap(), 0..=8);
        assert!(matches!(sector_support(11, 10), Err(Error::EmptySector { .. })));
        assert!(matches!(sector_support(-11, 10), Err(Error::EmptySector { .. })));
    }

    #[test]
    fn pure_loss_blocks_by_hand() {
        let g = 0.7;
        let m = build_pure_loss(g, 0.0, 1, Frame::Lab).unwrap();
        let b0 = build_sector_matrix(&m, 0).unwrap();
        assert_eq!(b0.dim(), 2);
        assert_eq!(b0.get(0, 0), c(0.0, 0.0));
        assert_relative_eq!(b0.get(0, 1).re, g, max_relative = 1e-15);
        assert_eq!(b0.get(1, 0), c(0.0, 0.0));
        assert_relative_eq!(b0.get(1, 1).re, -g, max_relative = 1e-15);

        let m = build_pure_loss(g, 1.3, 1, Frame::Lab).unwrap();
        let b1 = build_sector_matrix(&m, 1).unwrap();
        assert_eq!(b1.dim(), 1);
        assert_relative_eq!(b1.get(0, 0).re, -g / 2.0, max_relative = 1e-15);
        assert_relative_eq!(b1.get(0, 0).im, -1.3, max_relative = 1e-15);
    }

    #[test]
    fn rotating_blocks_are_real() {
        let m = btc(1.25, 0.3, 1.0, 3, 9, Frame::Rotating);
        for b in build_all_sectors(&m, 9).unwrap() {
            assert!(b.is_real());
        }
        let lab = btc(1.25, 0.3, 1.0, 3, 9, Frame::Lab);
        assert!(build_sector_matrix(&lab, 0).unwrap().is_real());
        assert!(!build_sector_matrix(&lab, 1).unwrap().is_real());
    }

    #[test]
    fn symmetry_phase_values() {
        assert_relative_eq!(apply_symmetry_phase(0, 1.3).re, 1.0);
        let z = apply_symmetry_phase(1, PI);
        assert_relative_eq!(z.re, -1.0);
        assert!(z.im.abs() < 1e-15);
        let z = apply_symmetry_phase(2, PI / 2.0);
        assert_relative_eq!(z.re, -1.0);
        assert!(z.im.abs() < 1e-15);
    }

    /// Applies U_φ to a sector-k dyad through the full operator algebra.
    #[test]
    fn symmetry_phase_labels_dyads() {
        let n_max = 4;
        let phi = 0.37;
        for k in -(n_max as i64)..=n_max as i64 {
            for p in sector_support(k, n_max).unwrap() {
                let (m, n) = (p as f64, (p - k) as f64);
                let u = Complex64::from_polar(1.0, -phi * m) * Complex64::from_polar(1.0, phi * n);
                let expected = apply_symmetry_phase(k, phi);
                assert!((u - expected).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn full_superoperator_small_cases() {
        let m = build_pure_loss(1.0, 0.0, 1, Frame::Lab).unwrap();
        let f = build_full_superoperator(&m).unwrap();
        assert_eq!(f.dim(), 4);
        let pops = [f.index(0, 0), f.index(1, 1)];
        let b0 = build_sector_matrix(&m, 0).unwrap();
        for (i, &r) in pops.iter().enumerate() {
            for (j, &cidx) in pops.iter().enumerate() {
                assert_eq!(f.entries[(r, cidx)], b0.get(i, j));
            }
        }

        let free = ModelSpec::new(
            "free",
            crate::fock::make_number_hamiltonian(1.7, 1).unwrap(),
            vec![],
            crate::models::ModelParams::new(
                crate::models::ModelFamily::Custom,
                Rates::default(),
                1,
                Frame::Lab,
            ),
        )
        .unwrap();
        let f = build_full_superoperator(&free).unwrap();
        for mm in 0..2 {
            for nn in 0..2 {
                let idx = f.index(mm, nn);
                let expect = c(0.0, -1.7 * (mm as f64 - nn as f64));
                assert!((f.entries[(idx, idx)] - expect).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn full_superoperator_preserves_trace() {
        let m = btc(1.4, 0.5, 1.0, 2, 7, Frame::Lab);
        let f = build_full_superoperator(&m).unwrap();
        let d = 8;
        for col in 0..f.dim() {
            let s: Complex64 = (0..d).map(|n| f.entries[(f.index(n, n), col)]).sum();
            assert!(s.norm() < 1e-12, "column {col} trace leak {s}");
        }
    }

    #[test]
    fn oracle_guard() {
        let m = btc(1.0, 1.0, 1.0, 1, 13, Frame::Lab);
        assert!(matches!(build_full_superoperator(&m), Err(Error::OracleGuard { .. })));
        assert!(build_full_superoperator_with_limit(&m, 13).is_ok());
    }

    #[test]
    fn block_equivalence_exact_for_pure_loss() {
        let m = build_pure_loss(1.0, 0.5, 1, Frame::Lab).unwrap();
        let eq = verify_block_equivalence(&m).unwrap();
        assert_eq!(eq.deviation, 0.0);
        assert_eq!(eq.off_block, 0.0);
    }

    #[test]
    fn block_equivalence_detects_corruption() {
        let m = btc(1.25, 0.1, 1.0, 10, 6, Frame::Lab);
        let full = build_full_superoperator(&m).unwrap();
        let mut blocks = build_all_sectors(&m, 6).unwrap();
        assert!(compare_with_blocks(&full, &blocks).deviation < 1e-12);
        blocks[7].entries[(0, 0)] += c(1e-6, 0.0);
        assert!(compare_with_blocks(&full, &blocks).deviation > 9e-7);
    }

    #[test]
    fn off_block_zero_with_and_without_hamiltonian() {
        let a = verify_block_equivalence(&btc(1.25, 0.1, 0.0, 3, 6, Frame::Lab)).unwrap();
        let b = verify_block_equivalence(&btc(1.25, 0.1, 1.0, 3, 6, Frame::Lab)).unwrap();
        assert_eq!(a.off_block, 0.0);
        assert_eq!(b.off_block, 0.0);
    }

    #[test]
    fn scully_lamb_equivalence() {
        let rates = Rates { gamma: 1.0, xi: 1.5, eta: 0.1, beta: 0.005, omega_c: 1.0 };
        let m = build_scully_lamb(&rates, 2, 8, Frame::Lab).unwrap();
        assert!(verify_block_equivalence(&m).unwrap().deviation < 1e-12);
    }

    #[test]
    fn scalar_shift_between_frames_is_exact() {
        let lab = btc(1.25, 0.1, 0.8, 10, 20, Frame::Lab);
        let rot = lab.to_rotating();
        for k in -5..=5 {
            let a = build_sector_matrix(&lab, k).unwrap();
            let b = build_sector_matrix(&rot, k).unwrap();
            for i in 0..a.dim() {
                for j in 0..a.dim() {
                    let diff = a.get(i, j) - b.get(i, j);
                    let expect = if i == j { c(0.0, -0.8 * k as f64) } else { c(0.0, 0.0) };
                    assert_eq!(diff, expect);
                }
            }
        }
    }
}
