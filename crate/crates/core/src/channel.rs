//! Multipath channel model.
//!
//! A channel realization is a set of discrete paths (delay, amplitude,
//! phase). Its frequency response at tone `n` is
//! `h_n = Σ_l α_l·exp(j(−2π f_n τ_l + ξ_l))`, split into gain `A_n = |h_n|`
//! and phase `ψ̄_n = arg(h_n)`. Random realizations are drawn from a power
//! delay profile with circularly symmetric complex Gaussian path gains, so
//! path magnitudes are Rayleigh and path phases uniform.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::signal::FrequencyGrid;

/// One propagation path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap {
    /// Path delay in seconds.
    pub delay_s: f64,
    /// Path amplitude (linear, nonnegative).
    pub amplitude: f64,
    /// Path phase in radians.
    pub phase_rad: f64,
}

impl Tap {
    pub fn new(delay_s: f64, amplitude: f64, phase_rad: f64) -> Self {
        Self {
            delay_s,
            amplitude,
            phase_rad,
        }
    }
}

/// A block-fading multipath channel realization.
#[derive(Debug, Clone, PartialEq)]
pub struct MultipathChannel {
    taps: Vec<Tap>,
}

impl MultipathChannel {
    pub fn new(taps: Vec<Tap>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::InvalidParameter(
                "channel needs at least one tap".into(),
            ));
        }
        for tap in &taps {
            if !tap.delay_s.is_finite() || tap.delay_s < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "tap delay must be nonnegative, got {}",
                    tap.delay_s
                )));
            }
            if !tap.amplitude.is_finite() || tap.amplitude < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "tap amplitude must be nonnegative, got {}",
                    tap.amplitude
                )));
            }
            if !tap.phase_rad.is_finite() {
                return Err(Error::InvalidParameter("tap phase must be finite".into()));
            }
        }
        Ok(Self { taps })
    }

    pub fn taps(&self) -> &[Tap] {
        &self.taps
    }

    /// Per-tone gain and phase of `Σ_l α_l·exp(j(−2π f_n τ_l + ξ_l))`.
    pub fn frequency_response(&self, grid: &FrequencyGrid) -> ChannelResponse {
        let mut gains = Vec::with_capacity(grid.n_tones());
        let mut phases = Vec::with_capacity(grid.n_tones());
        for f_n in grid.frequencies() {
            let h: Complex64 = self
                .taps
                .iter()
                .map(|tap| {
                    Complex64::from_polar(
                        tap.amplitude,
                        -2.0 * PI * f_n * tap.delay_s + tap.phase_rad,
                    )
                })
                .sum();
            gains.push(h.norm());
            // arg lands in [-π, π]; fold the -π edge onto +π.
            let arg = h.arg();
            phases.push(if arg == -PI { PI } else { arg });
        }
        ChannelResponse { gains, phases }
    }
}

/// Per-tone channel frequency response: gains `A_n ≥ 0` and phases `ψ̄_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelResponse {
    gains: Vec<f64>,
    phases: Vec<f64>,
}

impl ChannelResponse {
    pub fn new(gains: Vec<f64>, phases: Vec<f64>) -> Result<Self> {
        if gains.len() != phases.len() {
            return Err(Error::LengthMismatch {
                context: "channel response gains vs phases",
                expected: gains.len(),
                actual: phases.len(),
            });
        }
        if let Some(bad) = gains.iter().find(|g| !g.is_finite() || **g < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "channel gains must be finite and nonnegative, got {bad}"
            )));
        }
        if let Some(bad) = phases.iter().find(|p| !p.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "channel phases must be finite, got {bad}"
            )));
        }
        Ok(Self { gains, phases })
    }

    pub fn n_tones(&self) -> usize {
        self.gains.len()
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }
}

/// One power-delay-profile entry: mean path power at a given delay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdpEntry {
    pub delay_s: f64,
    /// Mean path power (dimensionless template value, nonnegative).
    pub mean_power: f64,
}

/// Statistical template from which channel realizations are drawn, plus the
/// average received power the ensemble is normalized to.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerDelayProfile {
    entries: Vec<PdpEntry>,
    target_received_power_watts: f64,
}

impl PowerDelayProfile {
    pub fn new(entries: Vec<PdpEntry>, target_received_power_watts: f64) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::DegenerateProfile);
        }
        for e in &entries {
            if !e.delay_s.is_finite() || e.delay_s < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "profile delay must be nonnegative, got {}",
                    e.delay_s
                )));
            }
            if !e.mean_power.is_finite() || e.mean_power < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "profile mean power must be nonnegative, got {}",
                    e.mean_power
                )));
            }
        }
        if !entries.iter().any(|e| e.mean_power > 0.0) {
            return Err(Error::DegenerateProfile);
        }
        if !target_received_power_watts.is_finite() || target_received_power_watts <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "target received power must be positive, got {target_received_power_watts}"
            )));
        }
        Ok(Self {
            entries,
            target_received_power_watts,
        })
    }

    /// Default NLOS-style template: 18 exponentially decaying taps at 10 ns
    /// spacing with a 30 ns decay constant. A stand-in with realistic
    /// frequency selectivity over ~10 MHz, fully overridable from config.
    pub fn default_exponential(target_received_power_watts: f64) -> Self {
        let entries = (0..18)
            .map(|l| {
                let delay_s = l as f64 * 10e-9;
                PdpEntry {
                    delay_s,
                    mean_power: (-(delay_s) / 30e-9).exp(),
                }
            })
            .collect();
        Self::new(entries, target_received_power_watts).expect("static profile is valid")
    }

    pub fn entries(&self) -> &[PdpEntry] {
        &self.entries
    }

    pub fn target_received_power_watts(&self) -> f64 {
        self.target_received_power_watts
    }

    /// Scale factor κ = target / Σ p_l, so that `E{Σ α_l²} = target` and the
    /// per-tone average `E{A_n²}` equals the target received power for a
    /// unit transmit power. Construction guarantees `Σ p_l > 0`.
    pub fn normalization_constant(&self) -> f64 {
        let total: f64 = self.entries.iter().map(|e| e.mean_power).sum();
        self.target_received_power_watts / total
    }

    /// Draw one channel realization. Each entry becomes a tap whose complex
    /// gain has i.i.d. real/imaginary parts `Normal(0, κ·p_l/2)`, i.e.
    /// `E{α_l²} = κ·p_l`. Deterministic for a given RNG state.
    pub fn sample_channel<R: Rng + ?Sized>(&self, rng: &mut R) -> MultipathChannel {
        let kappa = self.normalization_constant();
        let taps = self
            .entries
            .iter()
            .map(|e| {
                let std = (kappa * e.mean_power / 2.0).sqrt();
                let re: f64 = rng.sample::<f64, _>(StandardNormal) * std;
                let im: f64 = rng.sample::<f64, _>(StandardNormal) * std;
                let g = Complex64::new(re, im);
                Tap::new(e.delay_s, g.norm(), g.arg())
            })
            .collect();
        MultipathChannel::new(taps).expect("sampled taps are valid")
    }
}
