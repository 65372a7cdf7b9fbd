//! Run configuration: one TOML document covering every pipeline stage, with
//! documented defaults, a desk-scale `--quick` profile, and a content hash
//! that stamps every artifact a campaign produces.

use crate::channel::{FiberParams, SSFMConfig, StepMode};
use crate::constellation::ShapingConfig;
use crate::noise::RxNoiseReference;
use crate::optimizer::PatternSearchConfig;
use crate::txdsp::PulseShapeConfig;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

/// Shell-shaping structure (mirrors [`ShapingConfig`] for serialization).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShapingSettings {
    /// Bits per 4D symbol (constellation size 2^m).
    pub m: u32,
    /// Number of energy shells.
    pub k: u32,
}

impl Default for ShapingSettings {
    fn default() -> Self {
        ShapingSettings { m: 8, k: 4 }
    }
}

/// Transmitter OSNR loading stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TxNoiseSettings {
    pub enabled: bool,
    /// OSNR floor in dB, 0.1 nm reference bandwidth.
    pub osnr_db: f64,
}

impl Default for TxNoiseSettings {
    fn default() -> Self {
        TxNoiseSettings {
            enabled: true,
            osnr_db: 34.0,
        }
    }
}

/// Receiver noise loading stage. The absolute noise floor is derived from
/// the sensitivity point: noise = `input_power_dbm` − SNR(`prefec_ber_target`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RxNoiseSettings {
    pub enabled: bool,
    /// Assumed receiver input power at the sensitivity point, dBm.
    pub input_power_dbm: f64,
    /// Pre-FEC BER threshold defining the required SNR.
    pub prefec_ber_target: f64,
    /// Bandwidth reference for the derived noise power.
    pub reference: RxNoiseReference,
}

impl Default for RxNoiseSettings {
    fn default() -> Self {
        RxNoiseSettings {
            enabled: true,
            input_power_dbm: -20.0,
            prefec_ber_target: 1.25e-2,
            reference: RxNoiseReference::FullBand,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSettings {
    pub tx: TxNoiseSettings,
    pub rx: RxNoiseSettings,
}

/// A constellation entry in the sweep campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ConstellationSpec {
    /// Uniform polarization-multiplexed 16QAM baseline.
    Pm16qam,
    /// PM-16QAM with the per-dimension amplitude prior optimized over the
    /// configured p3 grid at each operating point.
    PsPm16qam,
    /// Geometrically optimized shell-shaped constellation (structure from
    /// the `shaping` section).
    Gss,
    /// A fixed constellation loaded from the text interchange format.
    File { path: String },
}

impl ConstellationSpec {
    /// Stable identifier used in result records and file names.
    pub fn id(&self) -> String {
        match self {
            ConstellationSpec::Pm16qam => "pm-16qam".to_string(),
            ConstellationSpec::PsPm16qam => "ps-pm-16qam".to_string(),
            ConstellationSpec::Gss => "4d-gss".to_string(),
            ConstellationSpec::File { path } => Path::new(path)
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "file".to_string()),
        }
    }
}

/// Sweep grids and the constellation roster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    pub distances_km: Vec<f64>,
    pub powers_dbm: Vec<f64>,
    pub constellations: Vec<ConstellationSpec>,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings {
            distances_km: (10..=20).map(|d| 10.0 * d as f64).collect(),
            powers_dbm: (6..=18).map(f64::from).collect(),
            constellations: vec![ConstellationSpec::Pm16qam, ConstellationSpec::Gss],
        }
    }
}

/// Probabilistic-shaping settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsSettings {
    /// Candidate probabilities for the outer (±3) amplitude per dimension.
    pub p3_grid: Vec<f64>,
}

impl Default for PsSettings {
    fn default() -> Self {
        PsSettings {
            p3_grid: vec![0.3, 0.35, 0.4, 0.45, 0.5],
        }
    }
}

/// The complete run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; every random stream derives from it.
    pub master_seed: u64,
    /// Symbol rate in Hz (400ZR line rate).
    pub symbol_rate_hz: f64,
    /// Symbols per MI evaluation during optimization.
    pub n_symbols: usize,
    /// Symbols for final re-evaluations and sweep records.
    pub n_symbols_final: usize,
    pub shaping: ShapingSettings,
    pub pulse: PulseShapeConfig,
    /// Fiber coefficients; `length_km` here is only a default — sweeps and
    /// CLI points always set the distance explicitly.
    pub fiber: FiberParams,
    pub ssfm: SSFMConfig,
    pub noise: NoiseSettings,
    pub optimizer: PatternSearchConfig,
    pub sweep: SweepSettings,
    pub ps: PsSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            master_seed: 1,
            symbol_rate_hz: 59.84e9,
            n_symbols: 1 << 17,
            n_symbols_final: 1 << 20,
            shaping: ShapingSettings::default(),
            pulse: PulseShapeConfig::default(),
            fiber: FiberParams::default(),
            ssfm: SSFMConfig::default(),
            noise: NoiseSettings::default(),
            optimizer: PatternSearchConfig::default(),
            sweep: SweepSettings::default(),
            ps: PsSettings::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: RunConfig = toml::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = toml::to_string_pretty(self)
            .map_err(|e| Error::config(format!("cannot serialize config: {e}")))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    /// The desk-scale profile: smaller evaluations, a tighter optimizer
    /// budget, coarser sweep grids, and a coarser (validated) step control.
    pub fn apply_quick(&mut self) {
        self.n_symbols = 1 << 13;
        self.n_symbols_final = 1 << 16;
        self.optimizer.max_evals = 2_000;
        // At desk-scale budgets the ×2 mesh expansion thrashes against the
        // box bounds in 28 dimensions; keeping the mesh on success converges
        // within the budget. The full profile keeps the default expansion.
        self.optimizer.expand_factor = 1.0;
        self.sweep.distances_km = vec![120.0, 160.0];
        self.sweep.powers_dbm = (3..=9).map(|p| 2.0 * p as f64).collect();
        self.ssfm.max_nl_phase_rad = 0.05;
        self.ssfm.max_step_km = 2.0;
        if let StepMode::Fixed { step_km } = &mut self.ssfm.step_mode {
            *step_km = step_km.max(1.0);
        }
        self.ps.p3_grid = vec![0.35, 0.4, 0.45, 0.5];
    }

    pub fn shaping_config(&self) -> Result<ShapingConfig> {
        ShapingConfig::new(self.shaping.m, self.shaping.k)
    }

    /// SHA-256 over the canonical JSON serialization; two configs hash
    /// equal iff they are semantically equal.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(json.as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.shaping_config()?;
        self.pulse.validate()?;
        self.fiber.validate()?;
        self.ssfm.validate()?;
        self.optimizer.validate()?;
        if !(self.symbol_rate_hz > 0.0) {
            return Err(Error::config("symbol rate must be positive"));
        }
        let needed = 2 * self.pulse.span_symbols + 1_000;
        for (label, n) in [("n_symbols", self.n_symbols), ("n_symbols_final", self.n_symbols_final)]
        {
            if n < needed {
                return Err(Error::config(format!(
                    "{label} = {n} leaves fewer than 1000 symbols after the \
                     2×{} edge discard",
                    self.pulse.span_symbols
                )));
            }
        }
        if self.sweep.distances_km.is_empty() || self.sweep.powers_dbm.is_empty() {
            return Err(Error::config("sweep grids must be nonempty"));
        }
        if self.sweep.distances_km.iter().any(|&d| !(d >= 0.0)) {
            return Err(Error::config("distances must be ≥ 0 km"));
        }
        if self.sweep.constellations.is_empty() {
            return Err(Error::config("at least one constellation is required"));
        }
        for spec in &self.sweep.constellations {
            if let ConstellationSpec::File { path } = spec {
                if !Path::new(path).exists() {
                    return Err(Error::config(format!(
                        "constellation file {path} does not exist"
                    )));
                }
            }
        }
        if self.ps.p3_grid.is_empty()
            || self.ps.p3_grid.iter().any(|p| !(0.0..=1.0).contains(p))
        {
            return Err(Error::config("p3 grid must be nonempty within [0, 1]"));
        }
        if self.noise.tx.enabled && !(self.noise.tx.osnr_db > 0.0 && self.noise.tx.osnr_db <= 60.0)
        {
            return Err(Error::config(format!(
                "TX OSNR {} dB outside (0, 60]",
                self.noise.tx.osnr_db
            )));
        }
        if self.noise.rx.enabled
            && !(self.noise.rx.prefec_ber_target > 0.0 && self.noise.rx.prefec_ber_target < 0.5)
        {
            return Err(Error::config(format!(
                "pre-FEC BER target {} outside (0, 0.5)",
                self.noise.rx.prefec_ber_target
            )));
        }
        Ok(())
    }
}
