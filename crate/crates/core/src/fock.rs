// Copyright 2026 lindsector Contributors
// SPDX-License-Identifier: Apache-2.0

//! Truncated-Fock-space operators with a definite U(1) weight.
//!
//! A [`LadderJump`] acts as `L|n> = A(n) |n + s>` on the Fock states
//! `n = 0..=n_max`. Rates are folded into the amplitude table, so the
//! dissipator is simply `D[L]`. Raising operators are cut at the top of the
//! space (`A(n_max) = 0`), which keeps every generator trace preserving.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Jump operator `L|n> = A(n)|n + shift>` on `n = 0..=n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderJump {
    shift: i64,
    amp: Vec<Complex64>,
    label: String,
}

impl LadderJump {
    /// Builds a jump from a raw amplitude table (one entry per Fock level).
    pub fn new(shift: i64, amp: Vec<Complex64>, label: impl Into<String>) -> Result<Self> {
        if amp.len() < 2 {
            return Err(Error::param("amplitude table needs n_max >= 1"));
        }
        let n_max = (amp.len() - 1) as i64;
        if shift.abs() > n_max {
            return Err(Error::param(format!(
                "|shift| = {} exceeds n_max = {n_max}",
                shift.abs()
            )));
        }
        for (n, a) in amp.iter().enumerate() {
            if !(a.re.is_finite() && a.im.is_finite()) {
                return Err(Error::param(format!("non-finite amplitude at n = {n}")));
            }
            let target = n as i64 + shift;
            if (target < 0 || target > n_max) && *a != Complex64::new(0.0, 0.0) {
                return Err(Error::param(format!(
                    "amplitude at n = {n} maps outside the truncated space"
                )));
            }
        }
        Ok(Self {
            shift,
            amp,
            label: label.into(),
        })
    }

    fn from_real(shift: i64, n_max: usize, label: &str, f: impl Fn(usize) -> f64) -> Result<Self> {
        let amp = (0..=n_max)
            .map(|n| {
                let target = n as i64 + shift;
                if target < 0 || target > n_max as i64 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(f(n), 0.0)
                }
            })
            .collect();
        Self::new(shift, amp, label)
    }

    pub fn shift(&self) -> i64 {
        self.shift
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn n_max(&self) -> usize {
        self.amp.len() - 1
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amp
    }

    /// `A(n)`; zero for levels outside `0..=n_max`.
    pub fn amp(&self, n: i64) -> Complex64 {
        if n < 0 || n as usize >= self.amp.len() {
            Complex64::new(0.0, 0.0)
        } else {
            self.amp[n as usize]
        }
    }

    /// Dense `(n_max+1) x (n_max+1)` operator matrix, `out[(n + s) * d + n] = A(n)`.
    pub fn to_dense(&self) -> Vec<Complex64> {
        let d = self.amp.len();
        let mut out = vec![Complex64::new(0.0, 0.0); d * d];
        for (n, a) in self.amp.iter().enumerate() {
            let target = n as i64 + self.shift;
            if target >= 0 && (target as usize) < d {
                out[target as usize * d + n] = *a;
            }
        }
        out
    }
}

/// Diagonal Hamiltonian `H|n> = h(n)|n>` (units of 1/time).
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalHamiltonian {
    h: Vec<f64>,
    is_linear: bool,
}

impl DiagonalHamiltonian {
    pub fn new(h: Vec<f64>) -> Result<Self> {
        if h.len() < 2 {
            return Err(Error::param("Hamiltonian table needs n_max >= 1"));
        }
        if h.iter().any(|x| !x.is_finite()) {
            return Err(Error::param("non-finite Hamiltonian entry"));
        }
        let slope = h[1] - h[0];
        let scale = h.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
        let is_linear = h[0] == 0.0
            && h.iter()
                .enumerate()
                .all(|(n, x)| (x - slope * n as f64).abs() <= 4.0 * f64::EPSILON * scale);
        Ok(Self { h, is_linear })
    }

    pub fn zero(n_max: usize) -> Self {
        Self {
            h: vec![0.0; n_max + 1],
            is_linear: true,
        }
    }

    pub fn energies(&self) -> &[f64] {
        &self.h
    }

    pub fn energy(&self, n: usize) -> f64 {
        self.h[n]
    }

    pub fn is_linear(&self) -> bool {
        self.is_linear
    }

    /// `ω` when `h(n) = ω n`.
    pub fn slope(&self) -> Option<f64> {
        self.is_linear.then(|| self.h[1] - self.h[0])
    }

    pub fn is_zero(&self) -> bool {
        self.h.iter().all(|&x| x == 0.0)
    }

    pub fn n_max(&self) -> usize {
        self.h.len() - 1
    }
}

fn check_rate(name: &str, value: f64) -> Result<()> {
    if !value.is_finite() || value < 0.0 {
        return Err(Error::param(format!("{name} must be a finite rate >= 0, got {value}")));
    }
    Ok(())
}

fn check_cutoff(n_max: usize) -> Result<()> {
    if n_max < 1 {
        return Err(Error::param("n_max must be >= 1"));
    }
    Ok(())
}

/// `sqrt(gamma) a`: single-photon loss.
pub fn make_annihilation(gamma: f64, n_max: usize) -> Result<LadderJump> {
    check_rate("gamma", gamma)?;
    check_cutoff(n_max)?;
    LadderJump::from_real(-1, n_max, "single-photon loss", |n| (gamma * n as f64).sqrt())
}

/// `sqrt(eta) a^2`: simultaneous loss of two photons.
pub fn make_two_photon_loss(eta: f64, n_max: usize) -> Result<LadderJump> {
    check_rate("eta", eta)?;
    check_cutoff(n_max)?;
    LadderJump::from_real(-2, n_max, "two-photon loss", |n| {
        (eta * n as f64 * (n as f64 - 1.0)).sqrt()
    })
}

/// `sqrt(xi) a^dagger`: incoherent gain, cut at `n_max`.
pub fn make_incoherent_drive(xi: f64, n_max: usize) -> Result<LadderJump> {
    check_rate("xi", xi)?;
    check_cutoff(n_max)?;
    LadderJump::from_real(1, n_max, "incoherent drive", |n| (xi * (n + 1) as f64).sqrt())
}

/// `a^dagger (sqrt(xi) - sqrt(beta) a a^dagger)`: saturable gain.
///
/// The amplitude turns negative once `sqrt(beta) (n+1) > sqrt(xi)`.
pub fn make_scully_lamb_gain(xi: f64, beta: f64, n_max: usize) -> Result<LadderJump> {
    check_rate("xi", xi)?;
    check_rate("beta", beta)?;
    check_cutoff(n_max)?;
    let (sx, sb) = (xi.sqrt(), beta.sqrt());
    LadderJump::from_real(1, n_max, "saturable gain", |n| {
        let m = (n + 1) as f64;
        m.sqrt() * (sx - sb * m)
    })
}

/// `sqrt(eta) a a^dagger`: weight-zero field decoherence.
pub fn make_scully_lamb_decoherence(eta: f64, n_max: usize) -> Result<LadderJump> {
    check_rate("eta", eta)?;
    check_cutoff(n_max)?;
    let se = eta.sqrt();
    LadderJump::from_real(0, n_max, "field decoherence", |n| se * (n + 1) as f64)
}

/// `omega_c a^dagger a`.
pub fn make_number_hamiltonian(omega_c: f64, n_max: usize) -> Result<DiagonalHamiltonian> {
    check_cutoff(n_max)?;
    if !omega_c.is_finite() {
        return Err(Error::param("omega_c must be finite"));
    }
    Ok(DiagonalHamiltonian {
        h: (0..=n_max).map(|n| omega_c * n as f64).collect(),
        is_linear: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn re(j: &LadderJump, n: i64) -> f64 {
        let a = j.amp(n);
        assert_eq!(a.im, 0.0);
        a.re
    }

    #[test]
    fn annihilation_table() {
        let j = make_annihilation(1.0, 6).unwrap();
        assert_eq!(j.shift(), -1);
        assert_eq!(re(&j, 0), 0.0);
        assert_eq!(re(&j, 4), 2.0);
        assert_relative_eq!(re(&make_annihilation(0.25, 3).unwrap(), 1), 0.5);
    }

    #[test]
    fn two_photon_loss_table() {
        let j = make_two_photon_loss(1.0, 5).unwrap();
        assert_eq!(j.shift(), -2);
        assert_eq!(re(&j, 0), 0.0);
        assert_eq!(re(&j, 1), 0.0);
        assert_relative_eq!(re(&j, 3), 6f64.sqrt());
        assert_relative_eq!(re(&make_two_photon_loss(0.1, 4).unwrap(), 2), 0.2f64.sqrt());
    }

    #[test]
    fn incoherent_drive_table() {
        let j = make_incoherent_drive(4.0, 5).unwrap();
        assert_eq!(j.shift(), 1);
        assert_eq!(re(&j, 0), 2.0);
        assert_eq!(re(&make_incoherent_drive(1.0, 5).unwrap(), 5), 0.0);
        assert_relative_eq!(re(&make_incoherent_drive(2.0, 5).unwrap(), 1), 2.0);
    }

    #[test]
    fn scully_lamb_tables() {
        assert_relative_eq!(re(&make_scully_lamb_gain(1.0, 0.01, 5).unwrap(), 0), 0.9, epsilon = 1e-15);
        assert_relative_eq!(re(&make_scully_lamb_gain(1.0, 0.0, 5).unwrap(), 3), 2.0);
        assert_eq!(re(&make_scully_lamb_gain(0.04, 0.04, 5).unwrap(), 0), 0.0);
        assert_eq!(re(&make_scully_lamb_gain(1.0, 0.0, 5).unwrap(), 5), 0.0);

        let d = make_scully_lamb_decoherence(1.0, 5).unwrap();
        assert_eq!(d.shift(), 0);
        assert_eq!(re(&d, 0), 1.0);
        assert_eq!(re(&d, 4), 5.0);
        assert_eq!(re(&make_scully_lamb_decoherence(0.0, 8).unwrap(), 7), 0.0);
    }

    #[test]
    fn saturable_gain_without_saturation_is_plain_drive() {
        let n_max = 12;
        let a = make_scully_lamb_gain(0.7, 0.0, n_max).unwrap();
        let b = make_incoherent_drive(0.7, n_max).unwrap();
        for n in 0..n_max as i64 {
            assert_relative_eq!(re(&a, n), re(&b, n), max_relative = 1e-14);
        }
    }

    #[test]
    fn number_hamiltonian() {
        let h = make_number_hamiltonian(1.0, 4).unwrap();
        assert_eq!(h.energy(3), 3.0);
        assert!(h.is_linear());
        assert!(make_number_hamiltonian(0.0, 4).unwrap().is_zero());
        assert_eq!(make_number_hamiltonian(2.5, 4).unwrap().energy(2), 5.0);
        assert!(!DiagonalHamiltonian::new(vec![0.0, 1.0, 4.0]).unwrap().is_linear());
        assert!(DiagonalHamiltonian::new(vec![0.0, 0.3, 0.6, 0.9]).unwrap().is_linear());
    }

    #[test]
    fn negative_rates_rejected() {
        assert!(matches!(make_annihilation(-1.0, 3), Err(Error::Parameter(_))));
        assert!(matches!(make_two_photon_loss(-0.1, 3), Err(Error::Parameter(_))));
        assert!(matches!(make_incoherent_drive(-2.0, 3), Err(Error::Parameter(_))));
        assert!(matches!(make_scully_lamb_gain(1.0, -1.0, 3), Err(Error::Parameter(_))));
        assert!(matches!(make_scully_lamb_decoherence(f64::NAN, 3), Err(Error::Parameter(_))));
        assert!(make_annihilation(1.0, 0).is_err());
    }

    #[test]
    fn raw_table_must_stay_inside_space() {
        let c = |x: f64| Complex64::new(x, 0.0);
        assert!(LadderJump::new(1, vec![c(1.0), c(1.0), c(1.0)], "bad").is_err());
        assert!(LadderJump::new(-1, vec![c(1.0), c(1.0)], "bad").is_err());
        assert!(LadderJump::new(3, vec![c(0.0), c(0.0)], "bad").is_err());
        assert!(LadderJump::new(1, vec![c(1.0), c(0.0)], "ok").is_ok());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn constructors_respect_boundary(rate in 0.0f64..5.0, beta in 0.0f64..0.2, n_max in 2usize..40) {
                let jumps = [
                    make_annihilation(rate, n_max).unwrap(),
                    make_two_photon_loss(rate, n_max).unwrap(),
                    make_incoherent_drive(rate, n_max).unwrap(),
                    make_scully_lamb_gain(rate, beta, n_max).unwrap(),
                    make_scully_lamb_decoherence(rate, n_max).unwrap(),
                ];
                for j in &jumps {
                    prop_assert_eq!(j.amplitudes().len(), n_max + 1);
                    for n in 0..=n_max as i64 {
                        let a = j.amp(n);
                        prop_assert!(a.re.is_finite() && a.im == 0.0);
                        let t = n + j.shift();
                        if t < 0 || t > n_max as i64 {
                            prop_assert_eq!(a.re, 0.0);
                        }
                        if j.label() != "saturable gain" {
                            prop_assert!(a.re >= 0.0);
                        }
                    }
                }
            }
        }
    }
}
