//! Monte Carlo experiment driver and file formats.
//!
//! A sweep runs every configured strategy over the same seeded channel
//! draws (paired comparison), for each tone count in the sweep grid, and
//! aggregates the mean DC proxy per `(N, strategy)` cell. Experiments are
//! normalized at the receiver: the transmit budget is fixed at 1 W and the
//! power delay profile is scaled so the ensemble-average received power
//! equals the configured dBm target.
//!
//! Determinism contract: identical config and seed give bit-identical
//! results regardless of how many worker threads execute the realizations.
//! Per-realization RNG streams are keyed by realization index, and
//! aggregation always runs in realization order with compensated sums.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::accum::neumaier_sum;
use crate::channel::{ChannelResponse, MultipathChannel, PdpEntry, PowerDelayProfile, Tap};
use crate::designers::{
    design_mf, design_opt_numeric, design_smf, design_up, optimize_beta, BetaSearchOptions,
    OptSearchOptions,
};
use crate::error::{Error, Result};
use crate::metrics::{enumerate_quadruples, z_dc_with_quadruples, DiodeParams, QuadrupleSet};
use crate::signal::{FrequencyGrid, PowerBudget, Waveform};

/// `10^((dBm − 30)/10)` watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// A named waveform design strategy.
///
/// CLI spelling: `up`, `mf`, `smf:<beta>`, `smf-opt-beta`, `opt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Strategy {
    /// Uniform power, zero phases, channel-independent.
    Up,
    /// Matched filter (SMF with β = 1).
    Mf,
    /// Scaled matched filter with a fixed exponent.
    Smf(f64),
    /// Scaled matched filter with the exponent optimized per channel.
    SmfOptBeta,
    /// Numeric gradient-ascent optimum.
    Opt,
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "up" => Ok(Self::Up),
            "mf" => Ok(Self::Mf),
            "smf-opt-beta" => Ok(Self::SmfOptBeta),
            "opt" => Ok(Self::Opt),
            other => {
                let beta = other
                    .strip_prefix("smf:")
                    .and_then(|rest| rest.parse::<f64>().ok())
                    .ok_or_else(|| {
                        Error::InvalidConfig(format!(
                            "unknown strategy {other:?} (expected up, mf, smf:<beta>, smf-opt-beta or opt)"
                        ))
                    })?;
                if !beta.is_finite() || beta < 1.0 {
                    return Err(Error::InvalidConfig(format!(
                        "SMF exponent must be >= 1, got {beta}"
                    )));
                }
                Ok(Self::Smf(beta))
            }
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Up => f.write_str("up"),
            Self::Mf => f.write_str("mf"),
            Self::Smf(beta) => write!(f, "smf:{beta}"),
            Self::SmfOptBeta => f.write_str("smf-opt-beta"),
            Self::Opt => f.write_str("opt"),
        }
    }
}

impl Serialize for Strategy {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Strategy {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Power-delay-profile entry as written in config files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdpEntrySpec {
    pub delay_ns: f64,
    pub power: f64,
}

/// Channel tap as written in dump/replay files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TapSpec {
    pub delay_ns: f64,
    pub amplitude: f64,
    pub phase_rad: f64,
}

impl From<&Tap> for TapSpec {
    fn from(tap: &Tap) -> Self {
        Self {
            delay_ns: tap.delay_s * 1e9,
            amplitude: tap.amplitude,
            phase_rad: tap.phase_rad,
        }
    }
}

impl TapSpec {
    fn to_tap(self) -> Tap {
        Tap::new(self.delay_ns * 1e-9, self.amplitude, self.phase_rad)
    }
}

/// Diode constants as written in config files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiodeSpec {
    pub i_s_amps: f64,
    pub ideality: f64,
    pub v_t_volts: f64,
    pub r_ant_ohms: f64,
}

impl Default for DiodeSpec {
    fn default() -> Self {
        Self {
            i_s_amps: 5e-6,
            ideality: 1.05,
            v_t_volts: 25.86e-3,
            r_ant_ohms: 50.0,
        }
    }
}

impl DiodeSpec {
    pub fn to_params(self) -> Result<DiodeParams> {
        DiodeParams::new(self.i_s_amps, self.ideality, self.v_t_volts, self.r_ant_ohms)
    }
}

/// Full experiment description. Every field has a default, so `{}` is a
/// valid config file and reproduces the standard setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Tone grids are centered on this frequency.
    pub center_frequency_hz: f64,
    /// Total bandwidth; the per-N tone spacing is `bandwidth / N`.
    pub bandwidth_hz: f64,
    pub n_values: Vec<usize>,
    pub strategies: Vec<Strategy>,
    /// Ensemble-average received power the channel model is normalized to.
    pub received_power_dbm: f64,
    pub pdp: Vec<PdpEntrySpec>,
    /// Replay channel used for every realization instead of random draws.
    pub fixed_channel: Option<Vec<TapSpec>>,
    pub n_realizations: usize,
    pub seed: u64,
    pub diode: DiodeSpec,
    pub beta_search: BetaSearchOptions,
    pub opt_search: OptSearchOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            center_frequency_hz: 5.18e9,
            bandwidth_hz: 10e6,
            n_values: vec![1, 2, 4, 8, 16, 32],
            strategies: vec![
                Strategy::Up,
                Strategy::Mf,
                Strategy::Smf(3.0),
                Strategy::SmfOptBeta,
                Strategy::Opt,
            ],
            received_power_dbm: -20.0,
            pdp: default_pdp_spec(),
            fixed_channel: None,
            n_realizations: 500,
            seed: 1,
            diode: DiodeSpec::default(),
            beta_search: BetaSearchOptions::default(),
            opt_search: OptSearchOptions::default(),
        }
    }
}

fn default_pdp_spec() -> Vec<PdpEntrySpec> {
    (0..18)
        .map(|l| {
            let delay_ns = 10.0 * l as f64;
            PdpEntrySpec {
                delay_ns,
                power: (-delay_ns / 30.0).exp(),
            }
        })
        .collect()
}

/// Hard cap on sweep tone counts; the quadruple evaluation is O(N³).
pub const MAX_SWEEP_TONES: usize = 64;

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn power_delay_profile(&self) -> Result<PowerDelayProfile> {
        let entries: Vec<PdpEntry> = self
            .pdp
            .iter()
            .map(|e| PdpEntry {
                delay_s: e.delay_ns * 1e-9,
                mean_power: e.power,
            })
            .collect();
        PowerDelayProfile::new(entries, dbm_to_watts(self.received_power_dbm))
    }

    pub fn diode_params(&self) -> Result<DiodeParams> {
        self.diode.to_params()
    }

    fn resolve(&self) -> Result<ResolvedExperiment> {
        if !self.center_frequency_hz.is_finite() || self.center_frequency_hz <= 0.0 {
            return Err(Error::InvalidConfig("center frequency must be positive".into()));
        }
        if !self.bandwidth_hz.is_finite() || self.bandwidth_hz <= 0.0 {
            return Err(Error::InvalidConfig("bandwidth must be positive".into()));
        }
        if self.n_values.is_empty() {
            return Err(Error::InvalidConfig("n_values must not be empty".into()));
        }
        for &n in &self.n_values {
            if n == 0 || n > MAX_SWEEP_TONES {
                return Err(Error::InvalidConfig(format!(
                    "tone counts must be in 1..={MAX_SWEEP_TONES}, got {n}"
                )));
            }
        }
        if self.strategies.is_empty() {
            return Err(Error::InvalidConfig("strategies must not be empty".into()));
        }
        for st in &self.strategies {
            if let Strategy::Smf(beta) = st {
                if !beta.is_finite() || *beta < 1.0 {
                    return Err(Error::InvalidConfig(format!(
                        "SMF exponent must be >= 1, got {beta}"
                    )));
                }
            }
        }
        if self.n_realizations == 0 {
            return Err(Error::InvalidConfig("n_realizations must be at least 1".into()));
        }
        if !self.received_power_dbm.is_finite() {
            return Err(Error::InvalidConfig("received power must be finite".into()));
        }
        self.beta_search.validate()?;
        self.opt_search.validate()?;
        let fixed_channel = match &self.fixed_channel {
            Some(taps) => Some(MultipathChannel::new(
                taps.iter().map(|t| t.to_tap()).collect(),
            )?),
            None => None,
        };
        Ok(ResolvedExperiment {
            pdp: self.power_delay_profile()?,
            fixed_channel,
            diode: self.diode_params()?,
            budget: PowerBudget::new(1.0).expect("unit budget"),
        })
    }
}

struct ResolvedExperiment {
    pdp: PowerDelayProfile,
    fixed_channel: Option<MultipathChannel>,
    diode: DiodeParams,
    budget: PowerBudget,
}

/// Tone grid for one sweep point: `Δf = bandwidth/N`, tones centered on
/// `center_hz`.
pub fn centered_grid(center_hz: f64, bandwidth_hz: f64, n_tones: usize) -> Result<FrequencyGrid> {
    if n_tones == 0 {
        return Err(Error::InvalidParameter("grid needs at least one tone".into()));
    }
    let delta = bandwidth_hz / n_tones as f64;
    let f0 = center_hz - (n_tones as f64 - 1.0) / 2.0 * delta;
    FrequencyGrid::new(f0, delta, n_tones)
}

// RNG lanes per realization; channel draws and optimizer restarts must not
// share a stream.
const CHANNEL_LANE: u64 = 0;
const OPT_LANE: u64 = 1;

fn realization_rng(seed: u64, realization: u64, lane: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2 * realization + lane);
    rng
}

/// One aggregated `(N, strategy)` cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n_tones: usize,
    pub strategy: Strategy,
    pub mean_zdc: f64,
    pub stderr: f64,
    /// Mean SMF exponent, for the strategies that have one.
    pub mean_beta: Option<f64>,
    pub realizations: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

const CSV_HEADER: &str = "N,strategy,mean_zdc,stderr,mean_beta,realizations,seed";

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            let beta = row.mean_beta.map(|b| b.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                row.n_tones, row.strategy, row.mean_zdc, row.stderr, beta, row.realizations, row.seed
            ));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(header) if header == CSV_HEADER => {}
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unexpected sweep CSV header: {other:?}"
                )))
            }
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 7 {
                return Err(Error::InvalidConfig(format!(
                    "sweep CSV line {} has {} fields, expected 7",
                    i + 2,
                    fields.len()
                )));
            }
            let parse_f64 = |s: &str, what: &str| -> Result<f64> {
                s.parse().map_err(|_| {
                    Error::InvalidConfig(format!("bad {what} {s:?} on CSV line {}", i + 2))
                })
            };
            rows.push(SweepRow {
                n_tones: fields[0].parse().map_err(|_| {
                    Error::InvalidConfig(format!("bad tone count {:?}", fields[0]))
                })?,
                strategy: fields[1].parse()?,
                mean_zdc: parse_f64(fields[2], "mean_zdc")?,
                stderr: parse_f64(fields[3], "stderr")?,
                mean_beta: if fields[4].is_empty() {
                    None
                } else {
                    Some(parse_f64(fields[4], "mean_beta")?)
                },
                realizations: fields[5].parse().map_err(|_| {
                    Error::InvalidConfig(format!("bad realization count {:?}", fields[5]))
                })?,
                seed: fields[6]
                    .parse()
                    .map_err(|_| Error::InvalidConfig(format!("bad seed {:?}", fields[6])))?,
            });
        }
        Ok(Self { rows })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sweep result serializes")
    }
}

struct StrategyOutcome {
    z: f64,
    beta: Option<f64>,
}

/// Run the full sweep described by the config.
///
/// For every tone count and realization, one channel is drawn from the
/// realization-indexed RNG stream (or replayed from `fixed_channel`) and
/// every strategy is evaluated against that same response.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let rt = cfg.resolve()?;
    let mut rows = Vec::with_capacity(cfg.n_values.len() * cfg.strategies.len());
    for &n in &cfg.n_values {
        let grid = centered_grid(cfg.center_frequency_hz, cfg.bandwidth_hz, n)?;
        let quads = enumerate_quadruples(n);
        let outcomes: Vec<Vec<StrategyOutcome>> = (0..cfg.n_realizations)
            .into_par_iter()
            .map(|r| realization_outcomes(cfg, &rt, &grid, &quads, r as u64))
            .collect::<Result<_>>()?;
        for (si, strategy) in cfg.strategies.iter().enumerate() {
            let count = outcomes.len() as f64;
            let mean_zdc = neumaier_sum(outcomes.iter().map(|o| o[si].z)) / count;
            let stderr = standard_error(outcomes.iter().map(|o| o[si].z), mean_zdc, outcomes.len());
            let mean_beta = if outcomes.iter().all(|o| o[si].beta.is_some()) {
                Some(neumaier_sum(outcomes.iter().map(|o| o[si].beta.unwrap())) / count)
            } else {
                None
            };
            rows.push(SweepRow {
                n_tones: n,
                strategy: *strategy,
                mean_zdc,
                stderr,
                mean_beta,
                realizations: cfg.n_realizations,
                seed: cfg.seed,
            });
        }
    }
    Ok(SweepResult { rows })
}

fn realization_outcomes(
    cfg: &ExperimentConfig,
    rt: &ResolvedExperiment,
    grid: &FrequencyGrid,
    quads: &QuadrupleSet,
    realization: u64,
) -> Result<Vec<StrategyOutcome>> {
    let channel = match &rt.fixed_channel {
        Some(ch) => ch.clone(),
        None => rt
            .pdp
            .sample_channel(&mut realization_rng(cfg.seed, realization, CHANNEL_LANE)),
    };
    let resp = channel.frequency_response(grid);
    cfg.strategies
        .iter()
        .map(|strategy| {
            let (waveform, beta) = design_for_strategy(
                *strategy,
                grid,
                &resp,
                rt,
                &cfg.beta_search,
                &cfg.opt_search,
                cfg.seed,
                realization,
            )?;
            let z = z_dc_with_quadruples(&waveform, &resp, &rt.diode, quads)?;
            Ok(StrategyOutcome { z, beta })
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn design_for_strategy(
    strategy: Strategy,
    grid: &FrequencyGrid,
    resp: &ChannelResponse,
    rt: &ResolvedExperiment,
    beta_opts: &BetaSearchOptions,
    opt_opts: &OptSearchOptions,
    seed: u64,
    realization: u64,
) -> Result<(Waveform, Option<f64>)> {
    match strategy {
        Strategy::Up => Ok((design_up(grid, rt.budget), None)),
        Strategy::Mf => Ok((design_mf(resp, rt.budget)?, None)),
        Strategy::Smf(beta) => Ok((design_smf(resp, rt.budget, beta)?, Some(beta))),
        Strategy::SmfOptBeta => {
            let star = optimize_beta(resp, rt.budget, &rt.diode, beta_opts)?;
            Ok((design_smf(resp, rt.budget, star.beta)?, Some(star.beta)))
        }
        Strategy::Opt => {
            let mut rng = realization_rng(seed, realization, OPT_LANE);
            let w = design_opt_numeric(resp, rt.budget, &rt.diode, opt_opts, &mut rng)?;
            Ok((w, None))
        }
    }
}

fn standard_error(values: impl Iterator<Item = f64>, mean: f64, n: usize) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let ss = neumaier_sum(values.map(|v| (v - mean) * (v - mean)));
    (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt()
}

/// Per-tone channel gains and strategy amplitudes for one fixed channel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileTable {
    pub strategies: Vec<Strategy>,
    pub rows: Vec<ProfileRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileRow {
    pub tone: usize,
    pub frequency_hz: f64,
    pub gain: f64,
    /// One amplitude per strategy, in strategy order.
    pub amplitudes: Vec<f64>,
}

impl ProfileTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,f_hz,A_n");
        for s in &self.strategies {
            out.push_str(&format!(",s_{s}"));
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!("{},{},{}", row.tone, row.frequency_hz, row.gain));
            for a in &row.amplitudes {
                out.push_str(&format!(",{a}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Default strategy set for waveform profiles.
pub fn default_profile_strategies() -> Vec<Strategy> {
    vec![Strategy::Smf(1.0), Strategy::Smf(3.0), Strategy::Opt]
}

/// Design every strategy against one channel response and tabulate the
/// per-tone amplitudes next to the channel gains.
#[allow(clippy::too_many_arguments)]
pub fn waveform_profile<R: Rng + ?Sized>(
    grid: &FrequencyGrid,
    resp: &ChannelResponse,
    strategies: &[Strategy],
    budget: PowerBudget,
    diode: &DiodeParams,
    beta_opts: &BetaSearchOptions,
    opt_opts: &OptSearchOptions,
    rng: &mut R,
) -> Result<ProfileTable> {
    if resp.n_tones() != grid.n_tones() {
        return Err(Error::LengthMismatch {
            context: "waveform profile grid vs channel",
            expected: grid.n_tones(),
            actual: resp.n_tones(),
        });
    }
    let mut waveforms = Vec::with_capacity(strategies.len());
    for strategy in strategies {
        let w = match strategy {
            Strategy::Up => design_up(grid, budget),
            Strategy::Mf => design_mf(resp, budget)?,
            Strategy::Smf(beta) => design_smf(resp, budget, *beta)?,
            Strategy::SmfOptBeta => {
                let star = optimize_beta(resp, budget, diode, beta_opts)?;
                design_smf(resp, budget, star.beta)?
            }
            Strategy::Opt => design_opt_numeric(resp, budget, diode, opt_opts, rng)?,
        };
        waveforms.push(w);
    }
    let rows = (0..grid.n_tones())
        .map(|n| ProfileRow {
            tone: n,
            frequency_hz: grid.tone_hz(n),
            gain: resp.gains()[n],
            amplitudes: waveforms.iter().map(|w| w.amplitudes()[n]).collect(),
        })
        .collect();
    Ok(ProfileTable {
        strategies: strategies.to_vec(),
        rows,
    })
}

#[derive(Serialize, Deserialize)]
struct ChannelFile {
    taps: Vec<TapSpec>,
}

/// JSON dump of a channel realization, for replay.
pub fn channel_to_json(ch: &MultipathChannel) -> String {
    let file = ChannelFile {
        taps: ch.taps().iter().map(TapSpec::from).collect(),
    };
    serde_json::to_string_pretty(&file).expect("channel serializes")
}

pub fn channel_from_json(text: &str) -> Result<MultipathChannel> {
    let file: ChannelFile = serde_json::from_str(text)?;
    MultipathChannel::new(file.taps.iter().map(|t| t.to_tap()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dbm_conversions() {
        assert!((dbm_to_watts(0.0) - 1e-3).abs() < 1e-18);
        assert!((dbm_to_watts(-20.0) - 1e-5).abs() < 1e-19);
        assert!((dbm_to_watts(36.0) - 3.9810717055349722).abs() < 1e-12);
        assert!((watts_to_dbm(1e-5) + 20.0).abs() < 1e-12);
    }

    #[test]
    fn strategy_names_round_trip() {
        for name in ["up", "mf", "smf:3", "smf:2.5", "smf-opt-beta", "opt"] {
            let s: Strategy = name.parse().unwrap();
            assert_eq!(s.to_string(), name);
        }
    }

    #[test]
    fn bad_strategy_names_are_rejected()  {
        for name in ["", "smf", "smf:", "smf:0.5", "smf:abc", "OPT", "water-filling"] {
            assert!(name.parse::<Strategy>().is_err(), "{name:?} parsed");
        }
    }

    #[test]
    fn empty_config_reproduces_defaults() {
        let cfg: ExperimentConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.n_values, vec![1, 2, 4, 8, 16, 32]);
        assert_eq!(cfg.n_realizations, 500);
        assert_eq!(cfg.pdp.len(), 18);
    }

    #[test]
    fn unknown_config_fields_are_rejected() {
        let err = serde_json::from_str::<ExperimentConfig>(r#"{"n_vals": [1]}"#);
        assert!(err.is_err());
    }

    #[test]
    fn centered_grid_is_centered() {
        let grid = centered_grid(5.18e9, 10e6, 16).unwrap();
        assert!((grid.delta_f_hz() - 625e3).abs() < 1e-9);
        let mean: f64 = grid.frequencies().sum::<f64>() / 16.0;
        assert!((mean - 5.18e9).abs() < 1e-3);
        // Single tone sits exactly at the center.
        let g1 = centered_grid(5.18e9, 10e6, 1).unwrap();
        assert_eq!(g1.f0_hz(), 5.18e9);
    }

    #[test]
    fn config_validation_catches_bad_values() {
        let mut cfg = ExperimentConfig::default();
        cfg.n_values = vec![0];
        assert!(run_sweep(&cfg).is_err());

        let mut cfg = ExperimentConfig::default();
        cfg.n_values = vec![65];
        assert!(run_sweep(&cfg).is_err());

        let mut cfg = ExperimentConfig::default();
        cfg.n_realizations = 0;
        assert!(run_sweep(&cfg).is_err());

        let mut cfg = ExperimentConfig::default();
        cfg.strategies = vec![];
        assert!(run_sweep(&cfg).is_err());
    }

    /// Diode spec whose derived coefficients are exactly k2/k4.
    fn diode_spec_from_taylor(k2: f64, k4: f64, r_ant: f64) -> DiodeSpec {
        let nvt_sq = k2 / (12.0 * k4);
        DiodeSpec {
            i_s_amps: 2.0 * k2 * nvt_sq,
            ideality: 1.0,
            v_t_volts: nvt_sq.sqrt(),
            r_ant_ohms: r_ant,
        }
    }

    fn tiny_sweep_config() -> ExperimentConfig {
        ExperimentConfig {
            n_values: vec![1, 4],
            strategies: vec![Strategy::Up, Strategy::Mf, Strategy::Smf(3.0)],
            n_realizations: 20,
            seed: 99,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn sweep_on_replayed_unit_channel_reproduces_hand_value() {
        let cfg = ExperimentConfig {
            n_values: vec![1],
            strategies: vec![Strategy::Up],
            fixed_channel: Some(vec![TapSpec {
                delay_ns: 0.0,
                amplitude: 1.0,
                phase_rad: 0.0,
            }]),
            n_realizations: 1,
            diode: diode_spec_from_taylor(0.0034, 0.3829, 1.0),
            ..ExperimentConfig::default()
        };
        let result = run_sweep(&cfg).unwrap();
        assert_eq!(result.rows.len(), 1);
        assert!((result.rows[0].mean_zdc - 0.57775).abs() < 1e-9);
        assert_eq!(result.rows[0].stderr, 0.0);
    }

    #[test]
    fn sweep_is_deterministic_per_seed() {
        let cfg = tiny_sweep_config();
        let a = run_sweep(&cfg).unwrap();
        let b = run_sweep(&cfg).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());

        let different = ExperimentConfig {
            seed: 100,
            ..tiny_sweep_config()
        };
        assert_ne!(a.to_csv(), run_sweep(&different).unwrap().to_csv());
    }

    #[test]
    fn strategies_share_channel_draws() {
        // The "up" cell must not depend on which other strategies run.
        let solo = ExperimentConfig {
            strategies: vec![Strategy::Up],
            ..tiny_sweep_config()
        };
        let paired = ExperimentConfig {
            strategies: vec![Strategy::Mf, Strategy::Up],
            ..tiny_sweep_config()
        };
        let a = run_sweep(&solo).unwrap();
        let b = run_sweep(&paired).unwrap();
        let solo_up: Vec<&SweepRow> = a.rows.iter().filter(|r| r.strategy == Strategy::Up).collect();
        let paired_up: Vec<&SweepRow> =
            b.rows.iter().filter(|r| r.strategy == Strategy::Up).collect();
        assert_eq!(solo_up.len(), paired_up.len());
        for (x, y) in solo_up.iter().zip(&paired_up) {
            assert_eq!(x.mean_zdc, y.mean_zdc);
            assert_eq!(x.stderr, y.stderr);
        }
    }

    #[test]
    fn sweep_csv_round_trips() {
        let cfg = ExperimentConfig {
            n_values: vec![2, 4],
            strategies: vec![Strategy::Up, Strategy::Smf(3.0), Strategy::SmfOptBeta],
            n_realizations: 5,
            seed: 7,
            ..ExperimentConfig::default()
        };
        let result = run_sweep(&cfg).unwrap();
        let parsed = SweepResult::from_csv(&result.to_csv()).unwrap();
        assert_eq!(result, parsed);
    }

    #[test]
    fn mean_beta_present_only_for_smf_strategies() {
        let cfg = ExperimentConfig {
            n_values: vec![4],
            strategies: vec![Strategy::Up, Strategy::Mf, Strategy::Smf(3.0), Strategy::SmfOptBeta],
            n_realizations: 8,
            ..ExperimentConfig::default()
        };
        let result = run_sweep(&cfg).unwrap();
        let by_strategy = |s: Strategy| result.rows.iter().find(|r| r.strategy == s).unwrap();
        assert!(by_strategy(Strategy::Up).mean_beta.is_none());
        assert!(by_strategy(Strategy::Mf).mean_beta.is_none());
        assert_eq!(by_strategy(Strategy::Smf(3.0)).mean_beta, Some(3.0));
        let star = by_strategy(Strategy::SmfOptBeta).mean_beta.unwrap();
        assert!((1.0..=12.0).contains(&star));
    }

    #[test]
    fn channel_json_round_trips() {
        let ch = MultipathChannel::new(vec![
            Tap::new(0.0, 1.0, 0.5),
            Tap::new(2.5e-8, 0.3, -1.2),
        ])
        .unwrap();
        let parsed = channel_from_json(&channel_to_json(&ch)).unwrap();
        assert_eq!(ch.taps().len(), parsed.taps().len());
        for (a, b) in ch.taps().iter().zip(parsed.taps()) {
            assert!((a.delay_s - b.delay_s).abs() < 1e-20);
            assert_eq!(a.amplitude, b.amplitude);
            assert_eq!(a.phase_rad, b.phase_rad);
        }
    }

    mod profile {
        use super::*;
        use rand::SeedableRng;

        #[test]
        fn flat_channel_gives_equal_amplitudes_everywhere() {
            let n = 4;
            let grid = centered_grid(1e9, 1e6, n).unwrap();
            let resp = ChannelResponse::new(vec![0.9; n], vec![0.3; n]).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let table = waveform_profile(
                &grid,
                &resp,
                &default_profile_strategies(),
                PowerBudget::new(1.0).unwrap(),
                &DiodeParams::default(),
                &BetaSearchOptions::default(),
                &OptSearchOptions::default(),
                &mut rng,
            )
            .unwrap();
            let expected = (2.0 / n as f64).sqrt();
            for row in &table.rows {
                for a in &row.amplitudes {
                    assert!((a - expected).abs() < 1e-6, "amplitude {a}");
                }
            }
        }

        #[test]
        fn two_tone_channel_matches_smf_hand_values() {
            let grid = centered_grid(1e9, 1e6, 2).unwrap();
            let resp = ChannelResponse::new(vec![1.0, 2.0], vec![0.0, 0.0]).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let table = waveform_profile(
                &grid,
                &resp,
                &[Strategy::Smf(1.0)],
                PowerBudget::new(1.0).unwrap(),
                &DiodeParams::default(),
                &BetaSearchOptions::default(),
                &OptSearchOptions::default(),
                &mut rng,
            )
            .unwrap();
            assert!((table.rows[0].amplitudes[0] - 0.6324555320336759).abs() < 1e-12);
            assert!((table.rows[1].amplitudes[0] - 1.2649110640673518).abs() < 1e-12);
        }

        #[test]
        fn smf3_amplitudes_follow_gain_order() {
            let n = 6;
            let grid = centered_grid(1e9, 1e6, n).unwrap();
            let gains: Vec<f64> = (0..n).map(|i| 0.2 + 0.3 * i as f64).collect();
            let resp = ChannelResponse::new(gains, vec![0.0; n]).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let table = waveform_profile(
                &grid,
                &resp,
                &[Strategy::Smf(3.0)],
                PowerBudget::new(1.0).unwrap(),
                &DiodeParams::default(),
                &BetaSearchOptions::default(),
                &OptSearchOptions::default(),
                &mut rng,
            )
            .unwrap();
            for pair in table.rows.windows(2) {
                assert!(pair[1].amplitudes[0] > pair[0].amplitudes[0]);
            }
        }

        #[test]
        fn profile_csv_has_one_column_per_strategy() {
            let grid = centered_grid(1e9, 1e6, 2).unwrap();
            let resp = ChannelResponse::new(vec![1.0, 2.0], vec![0.0, 0.0]).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let table = waveform_profile(
                &grid,
                &resp,
                &[Strategy::Up, Strategy::Smf(3.0)],
                PowerBudget::new(1.0).unwrap(),
                &DiodeParams::default(),
                &BetaSearchOptions::default(),
                &OptSearchOptions::default(),
                &mut rng,
            )
            .unwrap();
            let csv = table.to_csv();
            let header = csv.lines().next().unwrap();
            assert_eq!(header, "n,f_hz,A_n,s_up,s_smf:3");
            assert_eq!(csv.lines().count(), 3);
        }
    }
}
