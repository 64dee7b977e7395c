//! Experiment configuration: strict TOML sections with human-facing units
//! (degrees, dBm, MHz, mph, MB) converted to SI/linear at this boundary.
//!
//! Every section has defaults mirroring the reference parameter table;
//! unknown keys are rejected so typos cannot silently revert a field to its
//! default. Dotted-path overrides support parameter sweeps on top of a base
//! document.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;
use std::str::FromStr;

use crate::association::PAUtilityParams;
use crate::channel::ChannelParams;
use crate::game::{LllOptions, TauSchedule, UtilityParams};
use crate::geometry::{Arena, SpeedRange, MPH_TO_MPS};
use crate::linkdyn::TimingBudget;
use crate::{Error, Real, Result};

/// Utilities are quoted in units of this many bits/s (Gb/s), keeping learning
/// temperatures of order one meaningful.
pub const RATE_UNIT: Real = 1e9;

/// dBm to watts.
pub fn dbm_to_watts(dbm: Real) -> Real {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// dB to linear ratio.
pub fn db_to_linear(db: Real) -> Real {
    10f64.powf(db / 10.0)
}

/// How a trial's topology is generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    /// Independent Poisson populations of transmitters and requesters.
    Uniform,
    /// One probe requester at the origin amid Poisson transmitters.
    TestRequester,
    /// Pre-paired links drawn directly (association skipped).
    Links,
}

/// Peer-association algorithm selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssocAlgorithm {
    Hpa,
    Daa,
    Mda,
    Rpa,
}

impl FromStr for AssocAlgorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "hpa" => Ok(AssocAlgorithm::Hpa),
            "daa" => Ok(AssocAlgorithm::Daa),
            "mda" => Ok(AssocAlgorithm::Mda),
            "rpa" => Ok(AssocAlgorithm::Rpa),
            other => Err(Error::Config(format!(
                "unknown association algorithm '{other}' (expected hpa, daa, mda, or rpa)"
            ))),
        }
    }
}

impl std::fmt::Display for AssocAlgorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AssocAlgorithm::Hpa => "hpa",
            AssocAlgorithm::Daa => "daa",
            AssocAlgorithm::Mda => "mda",
            AssocAlgorithm::Rpa => "rpa",
        })
    }
}

/// Beamwidth-selection strategy selector; `Cbws` carries radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BeamStrategy {
    Lll,
    Cbws(Real),
    Rbws,
    Exhaustive,
}

impl FromStr for BeamStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(deg) = s.strip_prefix("cbws:") {
            let deg: Real = deg
                .parse()
                .map_err(|_| Error::Config(format!("bad cbws beamwidth '{deg}'")))?;
            if !(deg > 0.0) {
                return Err(Error::Config("cbws beamwidth must be positive degrees".into()));
            }
            return Ok(BeamStrategy::Cbws(deg.to_radians()));
        }
        match s {
            "lll" => Ok(BeamStrategy::Lll),
            "rbws" => Ok(BeamStrategy::Rbws),
            "exhaustive" => Ok(BeamStrategy::Exhaustive),
            other => Err(Error::Config(format!(
                "unknown beamwidth strategy '{other}' (expected lll, cbws:<deg>, rbws, or exhaustive)"
            ))),
        }
    }
}

impl std::fmt::Display for BeamStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BeamStrategy::Lll => write!(f, "lll"),
            BeamStrategy::Cbws(rad) => {
                // Round off radian conversion noise so "cbws:15" survives a
                // parse/print round trip.
                let deg = (rad.to_degrees() * 1e9).round() / 1e9;
                write!(f, "cbws:{deg}")
            }
            BeamStrategy::Rbws => write!(f, "rbws"),
            BeamStrategy::Exhaustive => write!(f, "exhaustive"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub base_seed: u64,
    pub trials: u64,
    /// Worker threads; 0 uses one thread per core.
    pub workers: usize,
    /// Frames (association attempts) per trial.
    pub max_frames: u32,
    /// Consecutive failed frames before a requester switches to cellular (f).
    pub retry_limit: u32,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection { base_seed: 1, trials: 100, workers: 0, max_frames: 1, retry_limit: 3 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub kind: ScenarioKind,
    pub arena_side_m: Real,
    pub transmitter_density_per_km2: Real,
    pub requester_density_per_km2: Real,
    /// Links drawn per trial (links scenario).
    pub link_count: u64,
    /// Transmitter-receiver separation range, meters (links scenario).
    pub link_distance_m: [Real; 2],
    /// Requested segments per link, inclusive range (links scenario).
    pub demand_segments: [u64; 2],
    /// Fraction of links whose transmitters are packed into a central
    /// congested disc (links scenario). Zero keeps placement uniform.
    pub hotspot_fraction: Real,
    /// Radius of the congested disc, meters (links scenario).
    pub hotspot_radius_m: Real,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        ScenarioSection {
            kind: ScenarioKind::Uniform,
            arena_side_m: 2000.0,
            transmitter_density_per_km2: 40.0,
            requester_density_per_km2: 40.0,
            link_count: 0,
            link_distance_m: [10.0, 25.0],
            demand_segments: [1, 100],
            hotspot_fraction: 0.0,
            hotspot_radius_m: 50.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    /// Nominal carrier; documentation only (the model is band-agnostic).
    pub carrier_ghz: Real,
    pub bandwidth_mhz: Real,
    pub noise_dbm_per_hz: Real,
    pub tx_power_dbm: Real,
    pub pathloss_intercept_db: Real,
    pub pathloss_exponent: Real,
    pub nakagami_shape: Real,
    pub blockage_beta_per_m: Real,
}

impl Default for ChannelSection {
    fn default() -> Self {
        ChannelSection {
            carrier_ghz: 28.0,
            bandwidth_mhz: 100.0,
            noise_dbm_per_hz: -174.0,
            tx_power_dbm: 15.0,
            pathloss_intercept_db: -61.7,
            pathloss_exponent: 2.0,
            nakagami_shape: 3.0,
            blockage_beta_per_m: 0.0027,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AntennaSection {
    pub beamwidths_deg: Vec<Real>,
    /// Sector width ψ both endpoints pre-align within.
    pub sector_deg: Real,
    /// Tolerated main-lobe gain fraction α before realignment.
    pub misalignment_threshold: Real,
    pub pilot_time_us: Real,
}

impl Default for AntennaSection {
    fn default() -> Self {
        AntennaSection {
            beamwidths_deg: vec![15.0, 25.0, 35.0, 45.0],
            sector_deg: 90.0,
            misalignment_threshold: 0.5,
            pilot_time_us: 10.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MobilitySection {
    pub speed_mph: [Real; 2],
}

impl Default for MobilitySection {
    fn default() -> Self {
        MobilitySection { speed_mph: [1.0, 3.0] }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimingSection {
    pub reply_ms: Real,
    pub decide_ms: Real,
    pub ack_ms: Real,
}

impl Default for TimingSection {
    fn default() -> Self {
        TimingSection { reply_ms: 1.0, decide_ms: 1.0, ack_ms: 1.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContentSection {
    /// Catalog size N_c.
    pub catalog_size: u32,
    /// Segments per content item.
    pub segments: u32,
    /// Content size in megabytes; must split evenly into segments.
    pub size_mb: Real,
    /// Cache hit probability p_D per transmitter per content.
    pub cache_probability: Real,
}

impl Default for ContentSection {
    fn default() -> Self {
        ContentSection { catalog_size: 5, segments: 100, size_mb: 300.0, cache_probability: 0.5 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssociationSection {
    pub algorithm: AssocAlgorithm,
    /// D2D coverage radius d_T, meters.
    pub coverage_m: Real,
    /// Stability normalizer/cap in the association utility, seconds.
    pub stability_norm_s: Real,
}

impl Default for AssociationSection {
    fn default() -> Self {
        AssociationSection { algorithm: AssocAlgorithm::Hpa, coverage_m: 50.0, stability_norm_s: 60.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeamwidthSection {
    /// lll | cbws:<deg> | rbws | exhaustive.
    pub strategy: String,
    pub interference_threshold_dbm: Real,
    /// harmonic (τ = tau_scale/k) or fixed (τ = fixed_tau).
    pub tau_schedule: String,
    pub tau_scale: Real,
    pub fixed_tau: Real,
    pub max_iterations: u64,
    /// Maximum simultaneously updating links |L̃|.
    pub update_cap: usize,
    pub stagnation_window: u32,
    pub prob_threshold: Real,
    pub exhaustive_budget: u64,
}

impl Default for BeamwidthSection {
    fn default() -> Self {
        BeamwidthSection {
            strategy: "lll".into(),
            interference_threshold_dbm: -90.0,
            tau_schedule: "harmonic".into(),
            tau_scale: 1.0,
            fixed_tau: 0.5,
            max_iterations: 2000,
            update_cap: 8,
            stagnation_window: 50,
            prob_threshold: 0.99,
            exhaustive_budget: 10_000_000,
        }
    }
}

/// The full experiment document.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub run: RunSection,
    pub scenario: ScenarioSection,
    pub channel: ChannelSection,
    pub antenna: AntennaSection,
    pub mobility: MobilitySection,
    pub timing: TimingSection,
    pub content: ContentSection,
    pub association: AssociationSection,
    pub beamwidth: BeamwidthSection,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("config parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Physical channel in SI/linear units.
    pub fn channel(&self) -> ChannelParams {
        ChannelParams {
            tx_power: dbm_to_watts(self.channel.tx_power_dbm),
            bandwidth: self.channel.bandwidth_mhz * 1e6,
            noise_density: dbm_to_watts(self.channel.noise_dbm_per_hz),
            pathloss_intercept: db_to_linear(self.channel.pathloss_intercept_db),
            pathloss_exponent: self.channel.pathloss_exponent,
            nakagami_shape: self.channel.nakagami_shape,
            blockage_beta: self.channel.blockage_beta_per_m,
        }
    }

    pub fn timing(&self) -> TimingBudget {
        TimingBudget {
            t_pilot: self.antenna.pilot_time_us * 1e-6,
            t_reply: self.timing.reply_ms * 1e-3,
            t_decide: self.timing.decide_ms * 1e-3,
            t_ack: self.timing.ack_ms * 1e-3,
            misalignment_threshold: self.antenna.misalignment_threshold,
        }
    }

    /// Candidate beamwidths in radians, ascending.
    pub fn actions(&self) -> Vec<Real> {
        let mut a: Vec<Real> =
            self.antenna.beamwidths_deg.iter().map(|d| d.to_radians()).collect();
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        a.dedup();
        a
    }

    pub fn sector(&self) -> Real {
        self.antenna.sector_deg.to_radians()
    }

    pub fn arena(&self) -> Arena {
        Arena { side: self.scenario.arena_side_m }
    }

    pub fn speeds(&self) -> SpeedRange {
        SpeedRange {
            min: self.mobility.speed_mph[0] * MPH_TO_MPS,
            max: self.mobility.speed_mph[1] * MPH_TO_MPS,
        }
    }

    /// Exact bits per segment.
    pub fn segment_bits(&self) -> u64 {
        let total = (self.content.size_mb * 8e6).round() as u64;
        total / self.content.segments as u64
    }

    pub fn interference_threshold_watts(&self) -> Real {
        dbm_to_watts(self.beamwidth.interference_threshold_dbm)
    }

    pub fn utility_params(&self) -> UtilityParams {
        UtilityParams {
            interference_threshold: self.interference_threshold_watts(),
            penalty_scalar: None,
            rate_unit: RATE_UNIT,
        }
    }

    pub fn pa_params(&self) -> PAUtilityParams {
        PAUtilityParams {
            stability_norm: self.association.stability_norm_s,
            availability_norm: self.content.segments as Real,
        }
    }

    pub fn beam_strategy(&self) -> Result<BeamStrategy> {
        self.beamwidth.strategy.parse()
    }

    pub fn tau_schedule(&self) -> Result<TauSchedule> {
        match self.beamwidth.tau_schedule.as_str() {
            "harmonic" => Ok(TauSchedule::Harmonic { scale: self.beamwidth.tau_scale }),
            "fixed" => Ok(TauSchedule::Fixed { tau: self.beamwidth.fixed_tau }),
            other => Err(Error::Config(format!(
                "beamwidth.tau_schedule must be 'harmonic' or 'fixed', got '{other}'"
            ))),
        }
    }

    pub fn lll_options(&self) -> Result<LllOptions> {
        Ok(LllOptions {
            schedule: self.tau_schedule()?,
            max_iterations: self.beamwidth.max_iterations,
            stagnation_window: self.beamwidth.stagnation_window,
            prob_threshold: self.beamwidth.prob_threshold,
            update_cap: self.beamwidth.update_cap,
        })
    }

    /// SHA-256 of the canonical (parsed, re-serialized) document.
    pub fn canonical_hash(&self) -> String {
        let canonical = toml::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(v: Real, key: &str) -> Result<()> {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{key} must be positive and finite, got {v}")));
            }
            Ok(())
        }

        if self.run.trials == 0 {
            return Err(Error::Config("run.trials must be at least 1".into()));
        }
        if self.run.max_frames == 0 {
            return Err(Error::Config("run.max_frames must be at least 1".into()));
        }
        if self.run.retry_limit == 0 {
            return Err(Error::Config("run.retry_limit must be at least 1".into()));
        }

        positive(self.scenario.arena_side_m, "scenario.arena_side_m")?;
        match self.scenario.kind {
            ScenarioKind::Uniform => {
                for (v, key) in [
                    (self.scenario.transmitter_density_per_km2, "scenario.transmitter_density_per_km2"),
                    (self.scenario.requester_density_per_km2, "scenario.requester_density_per_km2"),
                ] {
                    if !(v >= 0.0) || !v.is_finite() {
                        return Err(Error::Config(format!("{key} must be non-negative, got {v}")));
                    }
                }
            }
            ScenarioKind::TestRequester => {
                positive(
                    self.scenario.transmitter_density_per_km2,
                    "scenario.transmitter_density_per_km2",
                )?;
            }
            ScenarioKind::Links => {
                if self.scenario.link_count == 0 {
                    return Err(Error::Config(
                        "scenario.link_count must be at least 1 for the links scenario".into(),
                    ));
                }
                let [lo, hi] = self.scenario.link_distance_m;
                positive(lo, "scenario.link_distance_m[0]")?;
                if hi < lo {
                    return Err(Error::Config(
                        "scenario.link_distance_m must be an ascending range".into(),
                    ));
                }
                let [slo, shi] = self.scenario.demand_segments;
                if slo == 0 || shi < slo {
                    return Err(Error::Config(
                        "scenario.demand_segments must be an ascending range starting at 1 or more"
                            .into(),
                    ));
                }
                if shi > self.content.segments as u64 {
                    return Err(Error::Config(format!(
                        "scenario.demand_segments[1] ({shi}) exceeds content.segments ({})",
                        self.content.segments
                    )));
                }
                let hf = self.scenario.hotspot_fraction;
                if !(0.0..=1.0).contains(&hf) {
                    return Err(Error::Config(format!(
                        "scenario.hotspot_fraction must lie in [0, 1], got {hf}"
                    )));
                }
                if hf > 0.0 {
                    positive(self.scenario.hotspot_radius_m, "scenario.hotspot_radius_m")?;
                    if self.scenario.hotspot_radius_m > self.scenario.arena_side_m / 2.0 {
                        return Err(Error::Config(
                            "scenario.hotspot_radius_m must not exceed half the arena side"
                                .into(),
                        ));
                    }
                }
            }
        }

        positive(self.channel.bandwidth_mhz, "channel.bandwidth_mhz")?;
        positive(self.channel.pathloss_exponent, "channel.pathloss_exponent")?;
        positive(self.channel.nakagami_shape, "channel.nakagami_shape")?;
        if !(self.channel.blockage_beta_per_m >= 0.0) {
            return Err(Error::Config(format!(
                "channel.blockage_beta_per_m must be non-negative, got {}",
                self.channel.blockage_beta_per_m
            )));
        }
        self.channel().validate()?;

        if self.antenna.beamwidths_deg.is_empty() {
            return Err(Error::Config("antenna.beamwidths_deg must not be empty".into()));
        }
        for &b in &self.antenna.beamwidths_deg {
            positive(b, "antenna.beamwidths_deg entries")?;
            if b > self.antenna.sector_deg {
                return Err(Error::Config(format!(
                    "antenna.beamwidths_deg entry {b} exceeds antenna.sector_deg {}",
                    self.antenna.sector_deg
                )));
            }
        }
        positive(self.antenna.sector_deg, "antenna.sector_deg")?;
        if self.antenna.sector_deg > 360.0 {
            return Err(Error::Config("antenna.sector_deg must not exceed 360".into()));
        }
        if !(self.antenna.misalignment_threshold > 0.0
            && self.antenna.misalignment_threshold <= 1.0)
        {
            return Err(Error::Config(format!(
                "antenna.misalignment_threshold must lie in (0, 1], got {}",
                self.antenna.misalignment_threshold
            )));
        }
        positive(self.antenna.pilot_time_us, "antenna.pilot_time_us")?;
        self.timing().validate()?;

        let [lo, hi] = self.mobility.speed_mph;
        if !(lo >= 0.0) || hi < lo {
            return Err(Error::Config(
                "mobility.speed_mph must be a non-negative ascending range".into(),
            ));
        }

        if self.content.catalog_size == 0 {
            return Err(Error::Config("content.catalog_size must be at least 1".into()));
        }
        if self.content.segments == 0 {
            return Err(Error::Config("content.segments must be at least 1".into()));
        }
        positive(self.content.size_mb, "content.size_mb")?;
        let bits = self.content.size_mb * 8e6;
        if bits.fract() != 0.0 {
            return Err(Error::Config(format!(
                "content.size_mb ({}) must describe a whole number of bits",
                self.content.size_mb
            )));
        }
        if (bits as u64) % self.content.segments as u64 != 0 {
            return Err(Error::Config(format!(
                "content.size_mb ({}) must split evenly into content.segments ({})",
                self.content.size_mb, self.content.segments
            )));
        }
        if !(self.content.cache_probability >= 0.0 && self.content.cache_probability <= 1.0) {
            return Err(Error::Config(format!(
                "content.cache_probability must lie in [0, 1], got {}",
                self.content.cache_probability
            )));
        }

        positive(self.association.coverage_m, "association.coverage_m")?;
        positive(self.association.stability_norm_s, "association.stability_norm_s")?;
        self.pa_params().validate()?;

        self.beam_strategy()?;
        if let BeamStrategy::Cbws(rad) = self.beam_strategy()? {
            let deg = rad.to_degrees();
            if deg > self.antenna.sector_deg {
                return Err(Error::Config(format!(
                    "beamwidth.strategy cbws:{deg} exceeds antenna.sector_deg"
                )));
            }
        }
        self.utility_params().validate()?;
        self.lll_options()?.validate()?;
        if self.beamwidth.exhaustive_budget == 0 {
            return Err(Error::Config("beamwidth.exhaustive_budget must be at least 1".into()));
        }
        Ok(())
    }
}

/// Parse a raw CLI scalar into a TOML value (integer, float, boolean, or
/// string, in that order of preference).
pub fn parse_scalar(raw: &str) -> toml::Value {
    let raw = raw.trim();
    if let Ok(i) = raw.parse::<i64>() {
        return toml::Value::Integer(i);
    }
    if let Ok(f) = raw.parse::<f64>() {
        return toml::Value::Float(f);
    }
    if let Ok(b) = raw.parse::<bool>() {
        return toml::Value::Boolean(b);
    }
    toml::Value::String(raw.to_string())
}

/// Parse a config document into a mutable TOML tree (for sweeps).
pub fn to_tree(text: &str) -> Result<toml::Value> {
    text.parse::<toml::Value>()
        .map_err(|e| Error::Config(format!("config parse error: {e}")))
}

/// Insert `value` at a dotted `path` in a TOML tree, creating intermediate
/// tables as needed.
pub fn set_in_tree(tree: &mut toml::Value, path: &str, value: toml::Value) -> Result<()> {
    let mut node = tree;
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad parameter path '{path}'")));
    }
    for part in &parts[..parts.len() - 1] {
        let table = node
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("path '{path}' descends into a non-table")))?;
        node = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    let table = node
        .as_table_mut()
        .ok_or_else(|| Error::Config(format!("path '{path}' descends into a non-table")))?;
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Apply `value` at a dotted `path` (creating intermediate tables) and
/// deserialize the result into a validated config.
pub fn with_override(base: &toml::Value, path: &str, value: toml::Value) -> Result<ExperimentConfig> {
    let mut tree = base.clone();
    set_in_tree(&mut tree, path, value)?;
    let text = toml::to_string(&tree).map_err(|e| Error::Config(format!("reserialize: {e}")))?;
    ExperimentConfig::from_toml_str(&text)
}
