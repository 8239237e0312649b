//! Multisine signal model: frequency grid, per-tone waveform, power
//! accounting and time-domain synthesis.
//!
//! A multisine transmit signal is `x(t) = Σ_n s_n cos(2π f_n t + φ_n)` over
//! `N` evenly spaced tones. Amplitudes are stored linearly, in units such
//! that the average transmit power is `½ Σ s_n²` watts. Phases are radians
//! and are kept unwrapped; every consumer only feeds them to `cos`, so no
//! normalisation to `(-π, π]` is performed.

use std::f64::consts::PI;

use serde::Serialize;

use crate::channel::ChannelResponse;
use crate::error::{Error, Result};

/// Evenly spaced tone grid: tone `n` sits at `f0 + n·Δf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    f0_hz: f64,
    delta_f_hz: f64,
    n_tones: usize,
}

impl FrequencyGrid {
    pub fn new(f0_hz: f64, delta_f_hz: f64, n_tones: usize) -> Result<Self> {
        if !f0_hz.is_finite() || f0_hz <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "grid base frequency must be positive, got {f0_hz}"
            )));
        }
        if !delta_f_hz.is_finite() || delta_f_hz <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "grid tone spacing must be positive, got {delta_f_hz}"
            )));
        }
        if n_tones == 0 {
            return Err(Error::InvalidParameter(
                "grid needs at least one tone".into(),
            ));
        }
        Ok(Self {
            f0_hz,
            delta_f_hz,
            n_tones,
        })
    }

    /// Frequency of tone 0 in Hz.
    pub fn f0_hz(&self) -> f64 {
        self.f0_hz
    }

    /// Tone spacing Δf in Hz.
    pub fn delta_f_hz(&self) -> f64 {
        self.delta_f_hz
    }

    pub fn n_tones(&self) -> usize {
        self.n_tones
    }

    /// Frequency of tone `n` in Hz.
    pub fn tone_hz(&self, n: usize) -> f64 {
        self.f0_hz + n as f64 * self.delta_f_hz
    }

    pub fn frequencies(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_tones).map(|n| self.tone_hz(n))
    }
}

/// Transmit power constraint in watts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerBudget {
    watts: f64,
}

impl PowerBudget {
    pub fn new(watts: f64) -> Result<Self> {
        if !watts.is_finite() || watts <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "power budget must be positive, got {watts}"
            )));
        }
        Ok(Self { watts })
    }

    pub fn watts(&self) -> f64 {
        self.watts
    }
}

/// Per-tone amplitudes and phases of a multisine signal.
///
/// Serialises to `{"amplitudes": [...], "phases": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Waveform {
    amplitudes: Vec<f64>,
    phases: Vec<f64>,
}

impl Waveform {
    pub fn new(amplitudes: Vec<f64>, phases: Vec<f64>) -> Result<Self> {
        if amplitudes.len() != phases.len() {
            return Err(Error::LengthMismatch {
                context: "waveform amplitudes vs phases",
                expected: amplitudes.len(),
                actual: phases.len(),
            });
        }
        if let Some(bad) = amplitudes.iter().find(|a| !a.is_finite() || **a < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "waveform amplitudes must be finite and nonnegative, got {bad}"
            )));
        }
        if let Some(bad) = phases.iter().find(|p| !p.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "waveform phases must be finite, got {bad}"
            )));
        }
        Ok(Self { amplitudes, phases })
    }

    /// All-zero-phase waveform.
    pub fn with_zero_phases(amplitudes: Vec<f64>) -> Result<Self> {
        let phases = vec![0.0; amplitudes.len()];
        Self::new(amplitudes, phases)
    }

    pub fn n_tones(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// Average transmit power `½ Σ s_n²` in watts.
    pub fn transmit_power(&self) -> f64 {
        0.5 * self.amplitudes.iter().map(|s| s * s).sum::<f64>()
    }

    /// Rescale all amplitudes by one common positive factor so the transmit
    /// power meets the budget with equality. Phases are untouched.
    pub fn scaled_to_power(&self, budget: PowerBudget) -> Result<Waveform> {
        let current = self.transmit_power();
        if current == 0.0 {
            return Err(Error::DegenerateWaveform);
        }
        let factor = (budget.watts() / current).sqrt();
        let amplitudes = self.amplitudes.iter().map(|s| s * factor).collect();
        Ok(Waveform {
            amplitudes,
            phases: self.phases.clone(),
        })
    }
}

/// Received-signal sample `y(t) = Σ_n s_n A_n cos(2π f_n t + φ_n + ψ̄_n)`.
///
/// The per-tone received phase is the transmit phase plus the channel phase.
pub fn synthesize_received(
    w: &Waveform,
    ch: &ChannelResponse,
    grid: &FrequencyGrid,
    t: f64,
) -> Result<f64> {
    check_tone_count("synthesize_received waveform", w.n_tones(), grid)?;
    check_tone_count("synthesize_received channel", ch.n_tones(), grid)?;
    let mut y = 0.0;
    for n in 0..grid.n_tones() {
        let amp = w.amplitudes[n] * ch.gains()[n];
        let angle = 2.0 * PI * grid.tone_hz(n) * t + w.phases[n] + ch.phases()[n];
        y += amp * angle.cos();
    }
    Ok(y)
}

/// Transmit-signal sample `x(t) = Σ_n s_n cos(2π f_n t + φ_n)`; the received
/// signal through an identity channel.
pub fn synthesize_transmit(w: &Waveform, grid: &FrequencyGrid, t: f64) -> Result<f64> {
    check_tone_count("synthesize_transmit waveform", w.n_tones(), grid)?;
    let mut x = 0.0;
    for n in 0..grid.n_tones() {
        let angle = 2.0 * PI * grid.tone_hz(n) * t + w.phases[n];
        x += w.amplitudes[n] * angle.cos();
    }
    Ok(x)
}

fn check_tone_count(context: &'static str, len: usize, grid: &FrequencyGrid) -> Result<()> {
    if len != grid.n_tones() {
        return Err(Error::LengthMismatch {
            context,
            expected: grid.n_tones(),
            actual: len,
        });
    }
    Ok(())
}
