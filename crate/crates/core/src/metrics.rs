//! Rectifier DC-output proxy.
//!
//! The figure of merit is `z_DC = k2·R_ant·E{y(t)²} + k4·R_ant²·E{y(t)⁴}`,
//! the second- and fourth-order moments of the received signal weighted by
//! the diode Taylor coefficients. Expanding the moments of a multisine over
//! one period turns this into a closed form over index quadruples with
//! balanced sums (`n0+n1 = n2+n3`):
//!
//! `z_DC = (k2/2)·R·Σ s_n²A_n²
//!        + (3k4/8)·R²·Σ_{n0+n1=n2+n3} Π_j s_{n_j}A_{n_j} · cos(ψ_{n0}+ψ_{n1}−ψ_{n2}−ψ_{n3})`
//!
//! with received phases `ψ_n = φ_n + ψ̄_n`. This module evaluates that
//! closed form by exhaustive quadruple enumeration, the scaled-matched-filter
//! specialization of it, and — as an independent cross-check — the raw
//! time-domain moments on a sampled period.

use crate::accum::NeumaierSum;
use crate::channel::ChannelResponse;
use crate::error::{Error, Result};
use crate::signal::{synthesize_received, FrequencyGrid, PowerBudget, Waveform};

/// Diode constants and the antenna resistance they act through.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiodeParams {
    i_s_amps: f64,
    ideality: f64,
    v_t_volts: f64,
    r_ant_ohms: f64,
}

impl DiodeParams {
    pub fn new(i_s_amps: f64, ideality: f64, v_t_volts: f64, r_ant_ohms: f64) -> Result<Self> {
        for (name, v) in [
            ("saturation current", i_s_amps),
            ("ideality factor", ideality),
            ("thermal voltage", v_t_volts),
            ("antenna resistance", r_ant_ohms),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "diode {name} must be positive, got {v}"
                )));
            }
        }
        Ok(Self {
            i_s_amps,
            ideality,
            v_t_volts,
            r_ant_ohms,
        })
    }

    pub fn i_s_amps(&self) -> f64 {
        self.i_s_amps
    }

    pub fn ideality(&self) -> f64 {
        self.ideality
    }

    pub fn v_t_volts(&self) -> f64 {
        self.v_t_volts
    }

    pub fn r_ant_ohms(&self) -> f64 {
        self.r_ant_ohms
    }

    /// Second-order Taylor coefficient `i_s / (2!·(n·v_t)²)`.
    pub fn k2(&self) -> f64 {
        diode_k(2, self).expect("order 2 is supported")
    }

    /// Fourth-order Taylor coefficient `i_s / (4!·(n·v_t)⁴)`.
    pub fn k4(&self) -> f64 {
        diode_k(4, self).expect("order 4 is supported")
    }
}

impl Default for DiodeParams {
    /// Typical Schottky constants (i_s = 5 µA, n = 1.05, v_t = 25.86 mV)
    /// with a 50 Ω antenna.
    fn default() -> Self {
        Self::new(5e-6, 1.05, 25.86e-3, 50.0).expect("defaults are valid")
    }
}

/// Taylor coefficient `k_i = i_s / (i!·(n·v_t)^i)` of the diode current.
pub fn diode_k(order: u32, p: &DiodeParams) -> Result<f64> {
    let factorial = match order {
        2 => 2.0,
        4 => 24.0,
        other => return Err(Error::UnsupportedDiodeOrder(other)),
    };
    let nvt = p.ideality * p.v_t_volts;
    Ok(p.i_s_amps / (factorial * nvt.powi(order as i32)))
}

/// All index quadruples `(n0, n1, n2, n3)` in `[0, N)⁴` with
/// `n0 + n1 = n2 + n3`. There are `(2N³ + N)/3` of them.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadrupleSet {
    n_tones: usize,
    tuples: Vec<[usize; 4]>,
}

impl QuadrupleSet {
    pub fn n_tones(&self) -> usize {
        self.n_tones
    }

    pub fn tuples(&self) -> &[[usize; 4]] {
        &self.tuples
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }
}

/// Exhaustively enumerate the balanced quadruples for `n_tones` tones,
/// grouped by the common pair sum.
pub fn enumerate_quadruples(n_tones: usize) -> QuadrupleSet {
    let mut tuples = Vec::new();
    if n_tones == 0 {
        return QuadrupleSet { n_tones, tuples };
    }
    tuples.reserve((2 * n_tones.pow(3) + n_tones) / 3);
    for sum in 0..=(2 * (n_tones - 1)) {
        let lo = sum.saturating_sub(n_tones - 1);
        let hi = sum.min(n_tones - 1);
        for n0 in lo..=hi {
            let n1 = sum - n0;
            for n2 in lo..=hi {
                let n3 = sum - n2;
                tuples.push([n0, n1, n2, n3]);
            }
        }
    }
    QuadrupleSet { n_tones, tuples }
}

/// DC proxy of a waveform through a channel, by full quadruple enumeration.
pub fn z_dc(w: &Waveform, ch: &ChannelResponse, p: &DiodeParams) -> Result<f64> {
    let quads = enumerate_quadruples(w.n_tones());
    z_dc_with_quadruples(w, ch, p, &quads)
}

/// Same as [`z_dc`] with a caller-provided quadruple set, so sweeps can
/// enumerate once per tone count and share the set across threads.
pub fn z_dc_with_quadruples(
    w: &Waveform,
    ch: &ChannelResponse,
    p: &DiodeParams,
    quads: &QuadrupleSet,
) -> Result<f64> {
    let n = w.n_tones();
    if ch.n_tones() != n {
        return Err(Error::LengthMismatch {
            context: "z_dc waveform vs channel",
            expected: n,
            actual: ch.n_tones(),
        });
    }
    if quads.n_tones() != n {
        return Err(Error::LengthMismatch {
            context: "z_dc waveform vs quadruple set",
            expected: n,
            actual: quads.n_tones(),
        });
    }

    let r = p.r_ant_ohms;
    // Received per-tone amplitude u_n = s_n·A_n and phase ψ_n = φ_n + ψ̄_n.
    let u: Vec<f64> = w
        .amplitudes()
        .iter()
        .zip(ch.gains())
        .map(|(s, a)| s * a)
        .collect();
    let psi: Vec<f64> = w
        .phases()
        .iter()
        .zip(ch.phases())
        .map(|(phi, pb)| phi + pb)
        .collect();

    let second: f64 = u.iter().map(|x| x * x).sum();

    let mut fourth = NeumaierSum::new();
    for &[a, b, c, d] in quads.tuples() {
        let prod = u[a] * u[b] * u[c] * u[d];
        if prod == 0.0 {
            continue;
        }
        let angle = psi[a] + psi[b] - psi[c] - psi[d];
        fourth.add(prod * angle.cos());
    }

    Ok(0.5 * p.k2() * r * second + 0.375 * p.k4() * r * r * fourth.total())
}

/// DC proxy of the scaled-matched-filter design with exponent `beta`,
/// directly from the channel gains:
///
/// `k2·R·P·(Σ A^{2(β+1)} / Σ A^{2β})
///  + (3k4/2)·R²·P²·(Σ_quad Π A^{β+1}) / (Σ A^{2β})²`
pub fn z_dc_smf_closed_form(
    beta: f64,
    ch: &ChannelResponse,
    budget: PowerBudget,
    p: &DiodeParams,
) -> Result<f64> {
    if !beta.is_finite() || beta < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "SMF exponent must satisfy beta >= 1, got {beta}"
        )));
    }
    let quads = enumerate_quadruples(ch.n_tones());
    smf_closed_form(beta, ch.gains(), budget, p, &quads)
}

/// Shared evaluator behind [`z_dc_smf_closed_form`]; also used by the beta
/// search, whose finite differences probe slightly outside `beta >= 1`.
/// Gains are normalized by their maximum so large exponents cannot
/// underflow the denominators.
pub(crate) fn smf_closed_form(
    beta: f64,
    gains: &[f64],
    budget: PowerBudget,
    p: &DiodeParams,
    quads: &QuadrupleSet,
) -> Result<f64> {
    if gains.len() != quads.n_tones() {
        return Err(Error::LengthMismatch {
            context: "smf closed form gains vs quadruple set",
            expected: quads.n_tones(),
            actual: gains.len(),
        });
    }
    let max_gain = gains.iter().cloned().fold(0.0f64, f64::max);
    if max_gain == 0.0 {
        return Err(Error::DegenerateChannel);
    }
    let g: Vec<f64> = gains.iter().map(|a| a / max_gain).collect();

    let sum_2b: f64 = g.iter().map(|x| x.powf(2.0 * beta)).sum();
    let sum_2b2: f64 = g.iter().map(|x| x.powf(2.0 * (beta + 1.0))).sum();
    let b: Vec<f64> = g.iter().map(|x| x.powf(beta + 1.0)).collect();

    let mut quad = NeumaierSum::new();
    for &[i, j, k, l] in quads.tuples() {
        quad.add(b[i] * b[j] * b[k] * b[l]);
    }

    let r = p.r_ant_ohms;
    let pw = budget.watts();
    let m2 = max_gain * max_gain;
    let term1 = p.k2() * r * pw * m2 * (sum_2b2 / sum_2b);
    let term2 = 1.5 * p.k4() * r * r * pw * pw * m2 * m2 * (quad.total() / (sum_2b * sum_2b));
    Ok(term1 + term2)
}

/// DC proxy from the raw time-domain moments: averages
/// `k2·R·y(t)² + k4·R²·y(t)⁴` over one period `1/Δf` on a uniform grid.
///
/// This is a test fixture, not a general evaluator: it requires
/// `f0 = K·Δf` with integer `K ≥ 2N` (so no intermodulation product aliases
/// onto DC and the signal is periodic) and `samples ≥ 16·(K+N)`.
pub fn z_dc_time_domain_oracle(
    w: &Waveform,
    ch: &ChannelResponse,
    grid: &FrequencyGrid,
    p: &DiodeParams,
    samples: usize,
) -> Result<f64> {
    let n = grid.n_tones();
    let ratio = grid.f0_hz() / grid.delta_f_hz();
    let rounded = ratio.round();
    if (ratio - rounded).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::OraclePrecondition(format!(
            "f0/delta_f = {ratio} is not an integer"
        )));
    }
    let k = rounded as usize;
    if k < 2 * n {
        return Err(Error::OraclePrecondition(format!(
            "f0/delta_f = {k} must be at least 2N = {}",
            2 * n
        )));
    }
    let min_samples = 16 * (k + n);
    if samples < min_samples {
        return Err(Error::OraclePrecondition(format!(
            "need at least {min_samples} samples, got {samples}"
        )));
    }

    let r = p.r_ant_ohms;
    let k2 = p.k2();
    let k4 = p.k4();
    let period = 1.0 / grid.delta_f_hz();
    let mut acc = NeumaierSum::new();
    for i in 0..samples {
        let t = period * (i as f64) / (samples as f64);
        let y = synthesize_received(w, ch, grid, t)?;
        let y2 = y * y;
        acc.add(k2 * r * y2 + k4 * r * r * y2 * y2);
    }
    Ok(acc.total() / samples as f64)
}
