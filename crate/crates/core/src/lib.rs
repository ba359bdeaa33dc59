// Copyright 2026 lindsector Contributors
// SPDX-License-Identifier: Apache-2.0

//! Symmetry-sector Liouvillian analysis for single-mode bosonic open systems.

pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod fock;
pub mod models;
pub mod sector;
pub mod spectra;
pub mod sweeps;

pub use error::{Error, Result};
