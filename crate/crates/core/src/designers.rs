//! Transmit waveform designers.
//!
//! All designers return waveforms that meet the power budget with equality:
//!
//! * `design_up` — channel-independent baseline, uniform power, zero phases.
//! * `design_smf` — scaled matched filter `s_n ∝ A_n^β` with phase-matched
//!   tones (`φ_n = −ψ̄_n`); `β = 1` is the plain matched filter.
//! * `optimize_beta` — per-channel exponent search (safeguarded Newton with
//!   a golden-section fallback).
//! * `design_opt_numeric` — projected gradient ascent of the DC proxy over
//!   the amplitudes, multi-start, used as the optimal-waveform baseline.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel::ChannelResponse;
use crate::error::{Error, Result};
use crate::metrics::{enumerate_quadruples, smf_closed_form, z_dc_with_quadruples, DiodeParams};
use crate::signal::{FrequencyGrid, PowerBudget, Waveform};

/// Phases that zero out every received tone phase: `φ_n = −ψ̄_n`.
pub fn optimal_phases(ch: &ChannelResponse) -> Vec<f64> {
    ch.phases().iter().map(|psi| -psi).collect()
}

/// Uniform-power, zero-phase baseline: `s_n = √(2P/N)`.
pub fn design_up(grid: &FrequencyGrid, budget: PowerBudget) -> Waveform {
    let n = grid.n_tones();
    let amp = (2.0 * budget.watts() / n as f64).sqrt();
    Waveform::with_zero_phases(vec![amp; n]).expect("uniform amplitudes are valid")
}

/// Matched filter: the `β = 1` scaled matched filter.
pub fn design_mf(ch: &ChannelResponse, budget: PowerBudget) -> Result<Waveform> {
    design_smf(ch, budget, 1.0)
}

/// Scaled matched filter: `s_n = A_n^β·√(2P / Σ_m A_m^{2β})` with matched
/// phases. Gains are normalized by their maximum first, which leaves the
/// design unchanged but keeps large exponents well inside f64 range.
pub fn design_smf(ch: &ChannelResponse, budget: PowerBudget, beta: f64) -> Result<Waveform> {
    if !beta.is_finite() || beta < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "SMF exponent must satisfy beta >= 1, got {beta}"
        )));
    }
    let max_gain = ch.gains().iter().cloned().fold(0.0f64, f64::max);
    if max_gain == 0.0 {
        return Err(Error::DegenerateChannel);
    }
    let weights: Vec<f64> = ch
        .gains()
        .iter()
        .map(|a| (a / max_gain).powf(beta))
        .collect();
    let sum_sq: f64 = weights.iter().map(|w| w * w).sum();
    let c = (2.0 * budget.watts() / sum_sq).sqrt();
    let amplitudes = weights.iter().map(|w| w * c).collect();
    Waveform::new(amplitudes, optimal_phases(ch))
}

/// Bracket and stopping rule for the per-channel exponent search.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct BetaSearchOptions {
    pub beta_min: f64,
    pub beta_max: f64,
    /// Convergence tolerance on β itself.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for BetaSearchOptions {
    fn default() -> Self {
        Self {
            beta_min: 1.0,
            beta_max: 12.0,
            tolerance: 1e-6,
            max_iterations: 50,
        }
    }
}

impl BetaSearchOptions {
    pub fn validate(&self) -> Result<()> {
        if !self.beta_min.is_finite() || self.beta_min < 1.0 {
            return Err(Error::InvalidParameter(format!(
                "beta_min must be >= 1, got {}",
                self.beta_min
            )));
        }
        if !self.beta_max.is_finite() || self.beta_max <= self.beta_min {
            return Err(Error::InvalidParameter(format!(
                "beta_max must exceed beta_min, got {}",
                self.beta_max
            )));
        }
        if !self.tolerance.is_finite() || self.tolerance <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "beta tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter(
                "beta search needs at least one iteration".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of the per-channel exponent search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaStar {
    pub beta: f64,
    /// Closed-form DC proxy at the returned exponent.
    pub z_dc_value: f64,
    /// Set when the closed form is constant in β (flat or single-tone
    /// channel), in which case `beta` is just the lower bracket edge.
    pub beta_irrelevant: bool,
}

/// Maximize the SMF closed form over β in `[beta_min, beta_max]`.
///
/// Newton iterations on the first derivative (central finite differences,
/// step 1e-4) run from β = 3; if the local curvature has the wrong sign or
/// an iterate leaves the bracket, the search falls back to golden-section.
/// The returned exponent is the best of the search result and the fixed
/// candidates {beta_min, beta_max, 3}.
pub fn optimize_beta(
    ch: &ChannelResponse,
    budget: PowerBudget,
    p: &DiodeParams,
    opts: &BetaSearchOptions,
) -> Result<BetaStar> {
    opts.validate()?;
    let gains = ch.gains();
    let nonzero: Vec<f64> = gains.iter().cloned().filter(|a| *a > 0.0).collect();
    if nonzero.is_empty() {
        return Err(Error::DegenerateChannel);
    }
    let quads = enumerate_quadruples(ch.n_tones());
    let objective = |beta: f64| {
        smf_closed_form(beta, gains, budget, p, &quads).expect("gains checked nonzero")
    };

    let max_nz = nonzero.iter().cloned().fold(0.0f64, f64::max);
    let min_nz = nonzero.iter().cloned().fold(f64::INFINITY, f64::min);
    if nonzero.len() < 2 || (max_nz - min_nz) <= 1e-12 * max_nz {
        return Ok(BetaStar {
            beta: opts.beta_min,
            z_dc_value: objective(opts.beta_min),
            beta_irrelevant: true,
        });
    }

    const FD_STEP: f64 = 1e-4;
    let mut beta = 3.0f64.clamp(opts.beta_min, opts.beta_max);
    let mut converged = false;
    for _ in 0..opts.max_iterations {
        let f_minus = objective(beta - FD_STEP);
        let f_mid = objective(beta);
        let f_plus = objective(beta + FD_STEP);
        let d1 = (f_plus - f_minus) / (2.0 * FD_STEP);
        let d2 = (f_plus - 2.0 * f_mid + f_minus) / (FD_STEP * FD_STEP);
        if d1 == 0.0 {
            converged = true;
            break;
        }
        if !(d2 < 0.0) {
            break; // not locally concave, Newton would step toward a minimum
        }
        let next = beta - d1 / d2;
        if !next.is_finite() || next < opts.beta_min || next > opts.beta_max {
            break;
        }
        let step = (next - beta).abs();
        beta = next;
        if step < opts.tolerance {
            converged = true;
            break;
        }
    }
    if !converged {
        beta = golden_section_max(&objective, opts.beta_min, opts.beta_max, opts.tolerance);
    }

    let mut candidates = vec![beta, opts.beta_min, opts.beta_max];
    if (opts.beta_min..=opts.beta_max).contains(&3.0) {
        candidates.push(3.0);
    }
    let mut best_beta = candidates[0];
    let mut best_value = objective(best_beta);
    for &cand in &candidates[1..] {
        let value = objective(cand);
        if value > best_value {
            best_beta = cand;
            best_value = value;
        }
    }
    Ok(BetaStar {
        beta: best_beta,
        z_dc_value: best_value,
        beta_irrelevant: false,
    })
}

fn golden_section_max(objective: &impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    const INV_PHI: f64 = 0.6180339887498949;
    const INV_PHI2: f64 = 1.0 - INV_PHI;
    let (mut lo, mut hi) = (lo, hi);
    let mut x1 = lo + INV_PHI2 * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = objective(x1);
    let mut f2 = objective(x2);
    let mut iterations = 0;
    while hi - lo > tol && iterations < 200 {
        if f1 > f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = lo + INV_PHI2 * (hi - lo);
            f1 = objective(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = objective(x2);
        }
        iterations += 1;
    }
    0.5 * (lo + hi)
}

/// Knobs for the numeric amplitude optimization.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct OptSearchOptions {
    /// Initial step as a fraction of ‖s‖ along the normalized gradient.
    pub step_init: f64,
    pub max_iterations: usize,
    /// Random restarts run in addition to the SMF(β*) start.
    pub restarts: usize,
    /// Relative objective improvement below which an iterate counts as stalled.
    pub convergence_tol: f64,
}

impl Default for OptSearchOptions {
    fn default() -> Self {
        Self {
            step_init: 0.25,
            max_iterations: 500,
            restarts: 2,
            convergence_tol: 1e-10,
        }
    }
}

impl OptSearchOptions {
    pub fn validate(&self) -> Result<()> {
        if !self.step_init.is_finite() || self.step_init <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "step_init must be positive, got {}",
                self.step_init
            )));
        }
        if self.max_iterations == 0 || self.restarts == 0 {
            return Err(Error::InvalidParameter(
                "max_iterations and restarts must be positive".into(),
            ));
        }
        if !self.convergence_tol.is_finite() || self.convergence_tol <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "convergence_tol must be positive, got {}",
                self.convergence_tol
            )));
        }
        Ok(())
    }
}

/// Numeric surrogate for the optimal waveform: phases are matched, and the
/// amplitudes climb the (posynomial) DC proxy by projected gradient ascent
/// on the power sphere `½‖s‖² = P`, amplitudes clamped nonnegative.
///
/// Starts from the SMF(β*) design plus `opts.restarts` random starts; the
/// SMF start itself stays in the candidate pool, so the result never scores
/// below it. Ties within 1e-12 relative keep the earliest candidate.
pub fn design_opt_numeric<R: Rng + ?Sized>(
    ch: &ChannelResponse,
    budget: PowerBudget,
    p: &DiodeParams,
    opts: &OptSearchOptions,
    rng: &mut R,
) -> Result<Waveform> {
    opts.validate()?;
    let gains = ch.gains();
    if gains.iter().all(|a| *a == 0.0) {
        return Err(Error::DegenerateChannel);
    }
    let n = ch.n_tones();
    let phases = optimal_phases(ch);
    let quads = enumerate_quadruples(n);
    let objective = MatchedObjective::new(gains, p);

    let beta_star = optimize_beta(ch, budget, p, &BetaSearchOptions::default())?;
    let smf_amps = design_smf(ch, budget, beta_star.beta)?.amplitudes().to_vec();

    // Draw every random start up front so the RNG stream does not depend on
    // how the ascents unfold.
    let mut starts = vec![smf_amps.clone()];
    for _ in 0..opts.restarts {
        let mut amps: Vec<f64> = (0..n)
            .map(|_| rng.sample::<f64, _>(StandardNormal).abs())
            .collect();
        for (a, g) in amps.iter_mut().zip(gains) {
            if *g == 0.0 {
                *a = 0.0;
            }
        }
        starts.push(amps);
    }

    let mut candidates = vec![smf_amps];
    for start in starts {
        candidates.push(ascend(&objective, start, budget, opts));
    }

    let mut best: Option<(Waveform, f64)> = None;
    for amps in candidates {
        let w = Waveform::new(amps, phases.clone())?;
        let z = z_dc_with_quadruples(&w, ch, p, &quads)?;
        best = match best {
            None => Some((w, z)),
            Some((bw, bz)) => {
                if z > bz + 1e-12 * bz.abs() {
                    Some((w, z))
                } else {
                    Some((bw, bz))
                }
            }
        };
    }
    Ok(best.expect("at least one candidate").0)
}

/// DC proxy restricted to matched phases, where every quadruple cosine is 1.
/// The quadruple sum collapses to `Σ_σ p_σ²` over the pair sums
/// `p_σ = Σ_{a+b=σ} u_a u_b`, which keeps each ascent step at O(N²).
struct MatchedObjective {
    gains: Vec<f64>,
    k2_r: f64,
    quad_coeff: f64,
}

impl MatchedObjective {
    fn new(gains: &[f64], p: &DiodeParams) -> Self {
        let r = p.r_ant_ohms();
        Self {
            gains: gains.to_vec(),
            k2_r: p.k2() * r,
            quad_coeff: 0.375 * p.k4() * r * r,
        }
    }

    fn received_amps(&self, s: &[f64]) -> Vec<f64> {
        s.iter().zip(&self.gains).map(|(s, a)| s * a).collect()
    }

    fn pair_sums(u: &[f64]) -> Vec<f64> {
        let n = u.len();
        let mut p = vec![0.0; 2 * n - 1];
        for a in 0..n {
            for b in 0..n {
                p[a + b] += u[a] * u[b];
            }
        }
        p
    }

    fn value(&self, s: &[f64]) -> f64 {
        let u = self.received_amps(s);
        let second: f64 = u.iter().map(|x| x * x).sum();
        let quad: f64 = Self::pair_sums(&u).iter().map(|x| x * x).sum();
        0.5 * self.k2_r * second + self.quad_coeff * quad
    }

    fn gradient(&self, s: &[f64]) -> Vec<f64> {
        let n = s.len();
        let u = self.received_amps(s);
        let pairs = Self::pair_sums(&u);
        (0..n)
            .map(|m| {
                let mut conv = 0.0;
                for (k, uk) in u.iter().enumerate() {
                    conv += pairs[m + k] * uk;
                }
                (self.k2_r * u[m] + 4.0 * self.quad_coeff * conv) * self.gains[m]
            })
            .collect()
    }
}

fn project_to_sphere(mut s: Vec<f64>, budget: PowerBudget) -> Vec<f64> {
    let rescale = |s: &mut Vec<f64>| {
        let power: f64 = 0.5 * s.iter().map(|x| x * x).sum::<f64>();
        if power > 0.0 {
            let factor = (budget.watts() / power).sqrt();
            for x in s.iter_mut() {
                *x *= factor;
            }
        }
    };
    rescale(&mut s);
    for x in s.iter_mut() {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    rescale(&mut s);
    s
}

fn ascend(
    objective: &MatchedObjective,
    start: Vec<f64>,
    budget: PowerBudget,
    opts: &OptSearchOptions,
) -> Vec<f64> {
    let mut s = project_to_sphere(start, budget);
    let mut value = objective.value(&s);
    let mut stalled = 0;
    for _ in 0..opts.max_iterations {
        let grad = objective.gradient(&s);
        let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if grad_norm == 0.0 {
            break;
        }
        let s_norm = s.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut step = opts.step_init * s_norm / grad_norm;
        let mut moved = false;
        for _ in 0..60 {
            let candidate: Vec<f64> = s
                .iter()
                .zip(&grad)
                .map(|(x, g)| x + step * g)
                .collect();
            let candidate = project_to_sphere(candidate, budget);
            let cand_value = objective.value(&candidate);
            if cand_value >= value {
                let improvement = cand_value - value;
                s = candidate;
                value = cand_value;
                moved = true;
                if improvement <= opts.convergence_tol * value.abs().max(f64::MIN_POSITIVE) {
                    stalled += 1;
                } else {
                    stalled = 0;
                }
                break;
            }
            step *= 0.5;
        }
        if !moved || stalled >= 3 {
            break;
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::PowerDelayProfile;
    use crate::metrics::{z_dc, z_dc_smf_closed_form};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn budget(p: f64) -> PowerBudget {
        PowerBudget::new(p).unwrap()
    }

    fn response(gains: Vec<f64>, phases: Vec<f64>) -> ChannelResponse {
        ChannelResponse::new(gains, phases).unwrap()
    }

    fn random_response(n_tones: usize, seed: u64) -> ChannelResponse {
        let pdp = PowerDelayProfile::default_exponential(1e-5);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = FrequencyGrid::new(5.18e9, 10e6 / n_tones as f64, n_tones).unwrap();
        pdp.sample_channel(&mut rng).frequency_response(&grid)
    }

    #[test]
    fn optimal_phases_negates_channel_phases() {
        let ch = response(vec![1.0, 1.0], vec![0.0, 0.0]);
        assert_eq!(optimal_phases(&ch), vec![0.0, 0.0]);
        let ch = response(vec![1.0, 1.0], vec![PI / 4.0, -PI / 2.0]);
        assert_eq!(optimal_phases(&ch), vec![-PI / 4.0, PI / 2.0]);
    }

    #[test]
    fn optimal_phases_beat_random_phases() {
        let p = DiodeParams::default();
        let ch = random_response(4, 11);
        let amps = design_up(&FrequencyGrid::new(1e9, 1e6, 4).unwrap(), budget(1.0))
            .amplitudes()
            .to_vec();
        let matched = Waveform::new(amps.clone(), optimal_phases(&ch)).unwrap();
        let z_star = z_dc(&matched, &ch, &p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let phases: Vec<f64> = (0..4).map(|_| rng.random_range(-PI..PI)).collect();
            let w = Waveform::new(amps.clone(), phases).unwrap();
            let z = z_dc(&w, &ch, &p).unwrap();
            assert!(z <= z_star * (1.0 + 1e-12), "random phases beat matched");
        }
    }

    #[test]
    fn design_up_examples() {
        let w = design_up(&FrequencyGrid::new(1.0, 1.0, 1).unwrap(), budget(1.0));
        assert!((w.amplitudes()[0] - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(w.phases(), &[0.0]);

        let w = design_up(&FrequencyGrid::new(1.0, 1.0, 4).unwrap(), budget(2.0));
        for s in w.amplitudes() {
            assert!((s - 1.0).abs() < 1e-15);
        }
        assert!((w.transmit_power() - 2.0).abs() < 1e-12 * 2.0);
    }

    #[test]
    fn design_smf_two_tone_hand_values() {
        let ch = response(vec![1.0, 2.0], vec![0.0, 0.0]);
        let w = design_smf(&ch, budget(1.0), 1.0).unwrap();
        // c = sqrt(2/5)
        assert!((w.amplitudes()[0] - 0.6324555320336759).abs() < 1e-12);
        assert!((w.amplitudes()[1] - 1.2649110640673518).abs() < 1e-12);
    }

    #[test]
    fn design_smf_flat_channel_equals_up() {
        let grid = FrequencyGrid::new(1e9, 1e6, 5).unwrap();
        let up = design_up(&grid, budget(3.0));
        let ch = response(vec![0.42; 5], vec![0.0; 5]);
        for beta in [1.0, 3.0, 9.0] {
            let w = design_smf(&ch, budget(3.0), beta).unwrap();
            assert_eq!(w.amplitudes(), up.amplitudes(), "beta {beta}");
        }
    }

    #[test]
    fn design_smf_concentrates_power_at_large_beta() {
        let ch = response(vec![1.0, 2.0], vec![0.0, 0.0]);
        let w = design_smf(&ch, budget(1.0), 50.0).unwrap();
        assert!(w.amplitudes()[0] < 1e-10);
        assert!((w.amplitudes()[1] - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn design_smf_rejects_bad_inputs() {
        let ch = response(vec![0.0, 0.0], vec![0.0, 0.0]);
        assert!(matches!(
            design_smf(&ch, budget(1.0), 2.0),
            Err(Error::DegenerateChannel)
        ));
        let ch = response(vec![1.0, 2.0], vec![0.0, 0.0]);
        assert!(design_smf(&ch, budget(1.0), 0.5).is_err());
    }

    #[test]
    fn design_mf_is_smf_with_unit_exponent() {
        let ch = random_response(6, 3);
        let mf = design_mf(&ch, budget(1.0)).unwrap();
        let smf = design_smf(&ch, budget(1.0), 1.0).unwrap();
        assert_eq!(mf, smf);
    }

    #[test]
    fn smf_is_invariant_to_channel_scale() {
        let ch = random_response(8, 21);
        let scaled = response(
            ch.gains().iter().map(|a| 7.3 * a).collect(),
            ch.phases().to_vec(),
        );
        for beta in [1.0, 3.0, 8.0] {
            let a = design_smf(&ch, budget(1.0), beta).unwrap();
            let b = design_smf(&scaled, budget(1.0), beta).unwrap();
            for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
                assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-300), "beta {beta}");
            }
            assert_eq!(a.phases(), b.phases());
        }
    }

    #[test]
    fn optimize_beta_flags_flat_channels() {
        let ch = response(vec![0.9; 4], vec![0.1; 4]);
        let res = optimize_beta(
            &ch,
            budget(1.0),
            &DiodeParams::default(),
            &BetaSearchOptions::default(),
        )
        .unwrap();
        assert!(res.beta_irrelevant);
        assert_eq!(res.beta, 1.0);
    }

    #[test]
    fn optimize_beta_flags_single_live_tone() {
        let ch = response(vec![0.0, 1.3, 0.0], vec![0.0; 3]);
        let res = optimize_beta(
            &ch,
            budget(1.0),
            &DiodeParams::default(),
            &BetaSearchOptions::default(),
        )
        .unwrap();
        assert!(res.beta_irrelevant);
    }

    #[test]
    fn optimize_beta_dominates_a_beta_grid() {
        let p = DiodeParams::default();
        let ch = response(vec![1.0, 2.0], vec![0.0, 0.0]);
        let b = budget(1e-5);
        let res = optimize_beta(&ch, b, &p, &BetaSearchOptions::default()).unwrap();
        let mut beta = 1.0;
        while beta <= 12.0 {
            let z = z_dc_smf_closed_form(beta, &ch, b, &p).unwrap();
            assert!(
                res.z_dc_value >= z - 1e-9 * z.abs(),
                "beta {beta}: {z} beats {res:?}"
            );
            beta += 0.5;
        }
    }

    #[test]
    fn optimize_beta_beats_fixed_candidates_on_random_channels() {
        let p = DiodeParams::default();
        let b = budget(1.0);
        for seed in 0..20 {
            let ch = random_response(8, 100 + seed);
            let res = optimize_beta(&ch, b, &p, &BetaSearchOptions::default()).unwrap();
            for beta in [1.0, 3.0] {
                let z = z_dc_smf_closed_form(beta, &ch, b, &p).unwrap();
                assert!(
                    res.z_dc_value >= z - 1e-9 * z.abs(),
                    "seed {seed} beta {beta}"
                );
            }
        }
    }

    #[test]
    fn opt_single_tone_uses_full_budget() {
        let ch = response(vec![0.8], vec![0.4]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = design_opt_numeric(
            &ch,
            budget(2.0),
            &DiodeParams::default(),
            &OptSearchOptions::default(),
            &mut rng,
        )
        .unwrap();
        assert!((w.amplitudes()[0] - 2.0).abs() < 1e-12);
        assert!((w.phases()[0] + 0.4).abs() < 1e-15);
    }

    #[test]
    fn opt_matches_uniform_on_flat_channels() {
        let p = DiodeParams::default();
        let n = 4;
        let ch = response(vec![1.1; n], vec![0.7; n]);
        let grid = FrequencyGrid::new(1e9, 1e6, n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let opt = design_opt_numeric(
            &ch,
            budget(1.0),
            &p,
            &OptSearchOptions::default(),
            &mut rng,
        )
        .unwrap();
        let uniform = Waveform::new(
            design_up(&grid, budget(1.0)).amplitudes().to_vec(),
            optimal_phases(&ch),
        )
        .unwrap();
        let z_opt = z_dc(&opt, &ch, &p).unwrap();
        let z_uniform = z_dc(&uniform, &ch, &p).unwrap();
        assert!(z_opt >= z_uniform - 1e-9 * z_uniform);
        assert!((z_opt / z_uniform - 1.0).abs() < 1e-6);
    }

    #[test]
    fn opt_dominates_smf_grid_on_random_channel() {
        let p = DiodeParams::default();
        let ch = random_response(4, 77);
        let b = budget(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let opt = design_opt_numeric(&ch, b, &p, &OptSearchOptions::default(), &mut rng).unwrap();
        let z_opt = z_dc(&opt, &ch, &p).unwrap();
        for beta in 1..=12 {
            let smf = design_smf(&ch, b, beta as f64).unwrap();
            let z = z_dc(&smf, &ch, &p).unwrap();
            assert!(z_opt >= z - 1e-9 * z.abs(), "beta {beta}");
        }
    }

    #[test]
    fn ordering_chain_holds_per_realization() {
        let p = DiodeParams::default();
        let b = budget(1.0);
        for seed in 0..30 {
            let ch = random_response(8, 5000 + seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let beta_opts = BetaSearchOptions::default();
            let star = optimize_beta(&ch, b, &p, &beta_opts).unwrap();
            let z_star = z_dc(&design_smf(&ch, b, star.beta).unwrap(), &ch, &p).unwrap();
            let z_smf3 = z_dc(&design_smf(&ch, b, 3.0).unwrap(), &ch, &p).unwrap();
            let z_mf = z_dc(&design_mf(&ch, b).unwrap(), &ch, &p).unwrap();
            let opt = design_opt_numeric(&ch, b, &p, &OptSearchOptions::default(), &mut rng)
                .unwrap();
            let z_opt = z_dc(&opt, &ch, &p).unwrap();
            assert!(z_opt >= z_star - 1e-9 * z_star, "seed {seed}");
            assert!(z_star >= z_smf3 - 1e-9 * z_smf3, "seed {seed}");
            assert!(z_star >= z_mf - 1e-9 * z_mf, "seed {seed}");
        }
    }

    #[test]
    fn matched_designs_beat_uniform_on_average() {
        let p = DiodeParams::default();
        let b = budget(1.0);
        let grid = FrequencyGrid::new(5.18e9, 10e6 / 8.0, 8).unwrap();
        let pdp = PowerDelayProfile::default_exponential(1e-5);
        let mut rng = ChaCha8Rng::seed_from_u64(12345);
        let mut mean_mf = 0.0;
        let mut mean_up = 0.0;
        let n = 100;
        for _ in 0..n {
            let ch = pdp.sample_channel(&mut rng).frequency_response(&grid);
            mean_mf += z_dc(&design_mf(&ch, b).unwrap(), &ch, &p).unwrap();
            mean_up += z_dc(&design_up(&grid, b), &ch, &p).unwrap();
        }
        assert!(
            mean_mf / n as f64 >= mean_up / n as f64,
            "matched filter should not lose on average"
        );
    }

    #[test]
    fn zero_gain_tones_stay_silent() {
        let ch = response(vec![1.0, 0.0, 0.5], vec![0.0; 3]);
        let w = design_smf(&ch, budget(1.0), 2.0).unwrap();
        assert_eq!(w.amplitudes()[1], 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let opt = design_opt_numeric(
            &ch,
            budget(1.0),
            &DiodeParams::default(),
            &OptSearchOptions::default(),
            &mut rng,
        )
        .unwrap();
        assert_eq!(opt.amplitudes()[1], 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn designers_meet_the_power_budget(
            gains in proptest::collection::vec(0.0f64..3.0, 1..10),
            beta in 1.0f64..12.0,
            power in 1e-6f64..10.0,
        ) {
            prop_assume!(gains.iter().any(|a| *a > 0.0));
            let n = gains.len();
            let ch = ChannelResponse::new(gains, vec![0.25; n]).unwrap();
            let b = PowerBudget::new(power).unwrap();
            let grid = FrequencyGrid::new(1e9, 1e6, n).unwrap();

            let up = design_up(&grid, b);
            prop_assert!((up.transmit_power() - power).abs() <= 1e-12 * power);

            let smf = design_smf(&ch, b, beta).unwrap();
            prop_assert!((smf.transmit_power() - power).abs() <= 1e-12 * power);
        }
    }
}
