use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::PathConfig;
use crate::codebook::GreedyOptions;
use crate::estimator::OmpConfig;
use crate::{Error, Result};

/// Which transmit codebook a run evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CodebookKind {
    /// Greedy ordering with the best pilot subset.
    Proposed,
    /// Uniformly random precoder column ordering.
    RandomPermutation,
    /// Random quantized phase shifters and random unit-modulus pilots, redrawn every trial.
    RandomConfiguration,
}

impl CodebookKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Proposed => "proposed",
            Self::RandomPermutation => "random_permutation",
            Self::RandomConfiguration => "random_configuration",
        }
    }
}

/// Pilot subset used by the random-permutation baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum PermutationPilots {
    /// The subset the proposed design selected.
    Proposed,
    /// A fresh subset (containing column 0) per draw.
    Random,
}

/// Every knob of an experiment. Loaded from TOML; absent keys take the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    pub n_t: usize,
    pub n_r: usize,
    pub l_t: usize,
    pub l_r: usize,
    pub grid_multiplier: f64,
    /// Explicit grid sizes; derived from `grid_multiplier` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_t: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_r: Option<usize>,
    pub m_x: usize,
    pub n_p: usize,
    /// SNR axis of the SNR sweep, dB.
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub master_seed: u64,
    pub phase_bits: u32,
    pub codebook_kind: CodebookKind,

    /// SNR used by the M_x and N_p sweeps, dB.
    pub fixed_snr_db: f64,
    /// Pilot counts of the M_x sweep; entries above `l_t` are skipped.
    pub m_x_values: Vec<usize>,
    pub n_p_values: Vec<usize>,
    pub gain_variance: f64,
    /// Draw ground-truth path angles on the dictionary grids.
    pub on_grid: bool,
    pub omp_residual_tol: f64,
    pub permutation_draws: usize,
    pub permutation_pilots: PermutationPilots,
    pub tie_tolerance: f64,
    /// Scale transmit vectors to unit average power so that `10^(snr_db/10)`
    /// is the average transmit power over the noise variance. When false the
    /// unit-modulus codebooks are used as is.
    pub normalize_transmit_power: bool,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            n_t: 64,
            n_r: 16,
            l_t: 8,
            l_r: 4,
            grid_multiplier: 1.5,
            g_t: None,
            g_r: None,
            m_x: 4,
            n_p: 4,
            snr_db: (-15..=20).step_by(5).map(f64::from).collect(),
            trials: 500,
            master_seed: 2019,
            phase_bits: 6,
            codebook_kind: CodebookKind::Proposed,
            fixed_snr_db: 15.0,
            m_x_values: (1..=8).collect(),
            n_p_values: (1..=6).collect(),
            gain_variance: 1.0,
            on_grid: false,
            omp_residual_tol: 0.0,
            permutation_draws: 20_000,
            permutation_pilots: PermutationPilots::Proposed,
            tie_tolerance: GreedyOptions::default().tie_tolerance,
            normalize_transmit_power: true,
        }
    }
}

/// `round(γ·n)` with halves rounded up.
fn grid_size(gamma: f64, n: usize) -> usize {
    (gamma * n as f64 + 0.5).floor() as usize
}

impl SystemConfig {
    /// Reads a TOML file. Errors name the path.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            message: format!("cannot read config: {e}"),
        })?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn g_t(&self) -> usize {
        self.g_t.unwrap_or_else(|| grid_size(self.grid_multiplier, self.n_t))
    }

    pub fn g_r(&self) -> usize {
        self.g_r.unwrap_or_else(|| grid_size(self.grid_multiplier, self.n_r))
    }

    /// Snapshot count `M = (N_t/L_t)(N_r/L_r)·M_x`.
    pub fn snapshots(&self, m_x: usize) -> usize {
        (self.n_t / self.l_t) * (self.n_r / self.l_r) * m_x
    }

    /// Factor applied to the nominal power: `1/(N_t·L_t)`, the inverse of
    /// `‖F_m x_m‖²` for unit-modulus precoders and pilots, or 1.
    pub fn power_scale(&self) -> f64 {
        if self.normalize_transmit_power {
            1.0 / (self.n_t * self.l_t) as f64
        } else {
            1.0
        }
    }

    pub fn greedy_options(&self) -> GreedyOptions {
        GreedyOptions {
            tie_tolerance: self.tie_tolerance,
            ..GreedyOptions::default()
        }
    }

    pub fn path_config(&self, n_p: usize) -> PathConfig {
        PathConfig {
            paths: n_p,
            gain_variance: self.gain_variance,
        }
    }

    pub fn omp_config(&self, n_p: usize) -> OmpConfig {
        OmpConfig {
            residual_tol: self.omp_residual_tol,
            ..OmpConfig::with_sparsity(n_p)
        }
    }

    /// Hex SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> String {
        super::output::sha256_hex(self.to_toml().as_bytes())
    }

    /// Checks the structural invariants.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        for (name, v) in [
            ("n_t", self.n_t),
            ("n_r", self.n_r),
            ("l_t", self.l_t),
            ("l_r", self.l_r),
        ] {
            if v == 0 {
                return bad(format!("{name} must be positive"));
            }
        }
        if !self.n_t.is_multiple_of(self.l_t) {
            return bad(format!("l_t = {} does not divide n_t = {}", self.l_t, self.n_t));
        }
        if !self.n_r.is_multiple_of(self.l_r) {
            return bad(format!("l_r = {} does not divide n_r = {}", self.l_r, self.n_r));
        }
        if !(self.grid_multiplier >= 1.0 && self.grid_multiplier.is_finite()) {
            return bad(format!("grid_multiplier must be >= 1, got {}", self.grid_multiplier));
        }
        if self.g_t() < self.n_t || self.g_r() < self.n_r {
            return bad(format!(
                "grids ({}, {}) must be at least the array sizes ({}, {})",
                self.g_t(),
                self.g_r(),
                self.n_t,
                self.n_r
            ));
        }
        if self.m_x == 0 || self.m_x > self.l_t {
            return bad(format!("m_x = {} must be in 1..={}", self.m_x, self.l_t));
        }
        if self.m_x_values.contains(&0) {
            return bad("m_x_values must be positive".into());
        }
        if !self.m_x_values.iter().any(|&m| m <= self.l_t) {
            return bad(format!("m_x_values has no entry in 1..={}", self.l_t));
        }
        for &p in std::iter::once(&self.n_p).chain(&self.n_p_values) {
            if p == 0 {
                return bad("n_p must be positive".into());
            }
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.permutation_draws == 0 {
            return bad("permutation_draws must be at least 1".into());
        }
        if !(1..=30).contains(&self.phase_bits) {
            return bad(format!("phase_bits must be in 1..=30, got {}", self.phase_bits));
        }
        if self.snr_db.iter().chain([&self.fixed_snr_db]).any(|x| !x.is_finite()) {
            return bad("SNR values must be finite".into());
        }
        if !(self.gain_variance > 0.0 && self.gain_variance.is_finite()) {
            return bad("gain_variance must be positive".into());
        }
        if !(self.tie_tolerance >= 0.0) || !(self.omp_residual_tol >= 0.0) {
            return bad("tolerances must be non-negative".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_the_reference_system() {
        let c = SystemConfig::default();
        c.validate().unwrap();
        assert_eq!((c.g_t(), c.g_r()), (96, 24));
        assert_eq!(c.snapshots(1), 32);
        assert_eq!(c.snr_db, vec![-15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0]);
    }

    #[test]
    fn half_rounds_up() {
        assert_eq!(grid_size(1.25, 2), 3);
        assert_eq!(grid_size(1.5, 3), 5);
        assert_eq!(grid_size(1.0, 7), 7);
    }

    #[test]
    fn toml_round_trip_and_partial_files() {
        let c = SystemConfig::default();
        assert_eq!(SystemConfig::from_toml(&c.to_toml()).unwrap(), c);
        let p = SystemConfig::from_toml("n_t = 16\nl_t = 4\ncodebook_kind = \"random_permutation\"\n").unwrap();
        assert_eq!(p.n_t, 16);
        assert_eq!(p.codebook_kind, CodebookKind::RandomPermutation);
        assert_eq!(p.n_r, 16);
        assert!(SystemConfig::from_toml("nt = 3").is_err());
    }

    #[test]
    fn invariant_violations_are_reported() {
        let mut c = SystemConfig {
            l_t: 5,
            ..SystemConfig::default()
        };
        assert!(c.validate().is_err());
        c.l_t = 8;
        c.grid_multiplier = 0.5;
        assert!(c.validate().is_err());
        c.grid_multiplier = 1.5;
        c.m_x = 9;
        assert!(c.validate().is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = SystemConfig::default();
        let b = SystemConfig {
            master_seed: 7,
            ..a.clone()
        };
        assert_eq!(a.hash(), a.clone().hash());
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
