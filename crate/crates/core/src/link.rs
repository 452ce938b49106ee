//! Multi-span link description: WDM grid, fiber spans, amplifiers and the
//! per-span channel profiles that the link function consumes.
//!
//! Loss, gain, phase and `ρ` are per-channel constants; any frequency inside a
//! channel band resolves to that channel.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::raman::{solve_power_evolution, PowerProfileSet, RamanGainProfile, SpectralComponent};

#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub center_hz: f64,
    pub symbol_rate_baud: f64,
    pub launch_power_w: f64,
}

impl Channel {
    pub fn new(center_hz: f64, symbol_rate_baud: f64, launch_power_w: f64) -> Self {
        Self {
            center_hz,
            symbol_rate_baud,
            launch_power_w,
        }
    }

    /// Closed band `[f_c − R/2, f_c + R/2]` of a rectangular spectrum.
    pub fn band(&self) -> (f64, f64) {
        let half = 0.5 * self.symbol_rate_baud;
        (self.center_hz - half, self.center_hz + half)
    }

    /// Flat power spectral density in W/Hz.
    pub fn psd(&self) -> f64 {
        self.launch_power_w / self.symbol_rate_baud
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WdmGrid {
    channels: Vec<Channel>,
}

impl WdmGrid {
    pub fn new(channels: Vec<Channel>) -> Result<Self> {
        let problems = Self::diagnostics(&channels);
        if problems.is_empty() {
            Ok(Self { channels })
        } else {
            Err(Error::Config(problems))
        }
    }

    /// Evenly spaced grid of identical channels.
    pub fn uniform(
        first_center_hz: f64,
        spacing_hz: f64,
        count: usize,
        symbol_rate_baud: f64,
        launch_power_w: f64,
    ) -> Result<Self> {
        Self::new(
            (0..count)
                .map(|k| {
                    Channel::new(
                        first_center_hz + k as f64 * spacing_hz,
                        symbol_rate_baud,
                        launch_power_w,
                    )
                })
                .collect(),
        )
    }

    /// Every problem with a channel list; empty when the grid is valid.
    pub fn diagnostics(channels: &[Channel]) -> Vec<String> {
        let mut out = Vec::new();
        if channels.is_empty() {
            out.push("WDM grid has no channels".to_string());
        }
        for (k, c) in channels.iter().enumerate() {
            if !(c.center_hz.is_finite() && c.center_hz > 0.0) {
                out.push(format!("channel {k}: center frequency must be positive"));
            }
            if !(c.symbol_rate_baud.is_finite() && c.symbol_rate_baud > 0.0) {
                out.push(format!("channel {k}: symbol rate must be positive"));
            }
            if !(c.launch_power_w.is_finite() && c.launch_power_w >= 0.0) {
                out.push(format!("channel {k}: launch power must be non-negative"));
            }
        }
        for (k, w) in channels.windows(2).enumerate() {
            if w[1].center_hz <= w[0].center_hz {
                out.push(format!(
                    "channels {k} and {}: center frequencies must be strictly increasing",
                    k + 1
                ));
                continue;
            }
            let overlap = w[0].band().1 - w[1].band().0;
            let slack = 1e-9 * w[0].symbol_rate_baud.min(w[1].symbol_rate_baud);
            if overlap > slack {
                out.push(format!(
                    "channels {k} and {}: bands overlap by {overlap:.6e} Hz",
                    k + 1
                ));
            }
        }
        out
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn band(&self, k: usize) -> (f64, f64) {
        self.channels[k].band()
    }

    /// Index of the channel whose closed band holds `f`. On a shared edge the
    /// upper channel wins.
    pub fn channel_at(&self, f_hz: f64) -> Option<usize> {
        let idx = self.channels.partition_point(|c| c.band().0 <= f_hz);
        let k = idx.checked_sub(1)?;
        (f_hz <= self.channels[k].band().1).then_some(k)
    }

    pub fn lookup(&self, f_hz: f64) -> Result<usize> {
        self.channel_at(f_hz)
            .ok_or(Error::FrequencyLookup { frequency_hz: f_hz })
    }

    /// Same grid with every launch power multiplied by `factor`.
    pub fn scaled_power(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.channels
                .iter()
                .map(|c| Channel::new(c.center_hz, c.symbol_rate_baud, c.launch_power_w * factor))
                .collect(),
        )
    }
}

/// One fiber span. Per-channel quantities are indexed like the WDM grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberSpan {
    pub length_m: f64,
    pub gamma_per_w_per_m: f64,
    /// Field loss per channel, 1/m.
    pub alpha_per_m: Vec<f64>,
    /// Carried for completeness; `β₀` and `β₁` cancel from the link function.
    pub beta0_per_m: f64,
    pub beta1_s_per_m: f64,
    pub beta2_s2_per_m: f64,
    pub beta3_s3_per_m: f64,
    /// Center of the dispersion Taylor expansion.
    pub dispersion_ref_hz: f64,
    pub raman: RamanGainProfile,
    pub pumps: Vec<SpectralComponent>,
}

impl FiberSpan {
    /// A Raman-free span with flat loss and no third-order dispersion.
    pub fn standard(
        length_m: f64,
        gamma: f64,
        alpha_per_m: f64,
        beta2: f64,
        dispersion_ref_hz: f64,
        channels: usize,
    ) -> Self {
        Self {
            length_m,
            gamma_per_w_per_m: gamma,
            alpha_per_m: vec![alpha_per_m; channels],
            beta0_per_m: 0.0,
            beta1_s_per_m: 0.0,
            beta2_s2_per_m: beta2,
            beta3_s3_per_m: 0.0,
            dispersion_ref_hz,
            raman: RamanGainProfile::zero(),
            pumps: Vec::new(),
        }
    }

    /// `C_R ≡ 0`: channels follow pure exponential decay.
    pub fn is_raman_free(&self) -> bool {
        self.raman.is_zero()
    }

    /// `4π²(f1−f3)(f2−f3)[β₂ + πβ₃(f1+f2−2f_c)]`, the z-rate of the FWM phase mismatch.
    pub fn phase_mismatch_rate(&self, f1: f64, f2: f64, f3: f64) -> f64 {
        // (f1−f3)(f2−f3) first so swapping f1 and f2 is bit-exact
        let cross = (f1 - f3) * (f2 - f3);
        4.0 * PI * PI
            * cross
            * (self.beta2_s2_per_m
                + PI * self.beta3_s3_per_m * (f1 + f2 - 2.0 * self.dispersion_ref_hz))
    }

    pub fn diagnostics(&self, channels: usize) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.length_m.is_finite() && self.length_m > 0.0) {
            out.push(format!("span length must be positive, got {}", self.length_m));
        }
        if !(self.gamma_per_w_per_m.is_finite() && self.gamma_per_w_per_m >= 0.0) {
            out.push("nonlinearity gamma must be non-negative".to_string());
        }
        if self.alpha_per_m.len() != channels {
            out.push(format!(
                "loss given for {} channels, grid has {channels}",
                self.alpha_per_m.len()
            ));
        }
        if self.alpha_per_m.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            out.push("channel loss must be non-negative".to_string());
        }
        if !(self.dispersion_ref_hz.is_finite() && self.dispersion_ref_hz > 0.0) {
            out.push("dispersion reference frequency must be positive".to_string());
        }
        let betas = [
            self.beta0_per_m,
            self.beta1_s_per_m,
            self.beta2_s2_per_m,
            self.beta3_s3_per_m,
        ];
        if betas.iter().any(|b| !b.is_finite()) {
            out.push("dispersion coefficients must be finite".to_string());
        }
        out
    }
}

/// Lumped amplifier closing a span.
#[derive(Debug, Clone, PartialEq)]
pub struct Amplifier {
    /// Linear power gain per channel.
    pub gain: Vec<f64>,
    /// Per-channel phase (rad).
    pub phase_rad: Vec<f64>,
    pub beta_dcu_s2: f64,
}

impl Amplifier {
    pub fn new(gain: Vec<f64>) -> Self {
        let n = gain.len();
        Self {
            gain,
            phase_rad: vec![0.0; n],
            beta_dcu_s2: 0.0,
        }
    }

    pub fn diagnostics(&self, channels: usize) -> Vec<String> {
        let mut out = Vec::new();
        if self.gain.len() != channels || self.phase_rad.len() != channels {
            out.push(format!(
                "amplifier gain/phase must cover all {channels} channels"
            ));
        }
        if self.gain.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
            out.push("amplifier gain must be positive".to_string());
        }
        if self.phase_rad.iter().any(|t| !t.is_finite()) || !self.beta_dcu_s2.is_finite() {
            out.push("amplifier phase and DCU dispersion must be finite".to_string());
        }
        out
    }
}

/// How an amplifier's gain is specified before profiles are known.
#[derive(Debug, Clone, PartialEq)]
pub enum AmpGain {
    PerChannel(Vec<f64>),
    /// `Γ = 1/ρ(L)` per channel, restoring the span's input power.
    Transparent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmplifierSpec {
    pub gain: AmpGain,
    /// Empty means zero phase on every channel.
    pub phase_rad: Vec<f64>,
    pub beta_dcu_s2: f64,
}

impl AmplifierSpec {
    pub fn transparent() -> Self {
        Self {
            gain: AmpGain::Transparent,
            phase_rad: Vec::new(),
            beta_dcu_s2: 0.0,
        }
    }
}

/// A link whose span profiles are filled in. Immutable after construction.
#[derive(Debug, Clone)]
pub struct Link {
    grid: WdmGrid,
    spans: Vec<FiberSpan>,
    amps: Vec<Amplifier>,
    profiles: Vec<PowerProfileSet>,
}

impl Link {
    /// Assembles a link from precomputed profiles.
    pub fn from_profiles(
        grid: WdmGrid,
        stages: Vec<(FiberSpan, Amplifier)>,
        profiles: Vec<PowerProfileSet>,
    ) -> Result<Self> {
        let n = grid.len();
        if stages.is_empty() {
            return Err(Error::Contract("a link needs at least one span".into()));
        }
        if profiles.len() != stages.len() {
            return Err(Error::Contract(format!(
                "{} profile sets for {} spans",
                profiles.len(),
                stages.len()
            )));
        }
        let mut problems = Vec::new();
        for (s, ((span, amp), prof)) in stages.iter().zip(&profiles).enumerate() {
            problems.extend(span.diagnostics(n).into_iter().map(|p| format!("span {s}: {p}")));
            problems.extend(amp.diagnostics(n).into_iter().map(|p| format!("amplifier {s}: {p}")));
            if prof.channel_count() != n {
                problems.push(format!("span {s}: profiles cover {} channels", prof.channel_count()));
            }
            if (prof.length_m() - span.length_m).abs() > 1e-9 * span.length_m {
                problems.push(format!("span {s}: profile grid does not cover [0, L]"));
            }
        }
        if !problems.is_empty() {
            return Err(Error::Config(problems));
        }
        let (spans, amps) = stages.into_iter().unzip();
        Ok(Self {
            grid,
            spans,
            amps,
            profiles,
        })
    }

    /// Solves the Raman profiles span by span. Each span is launched with the
    /// previous span's output times its amplifier gain.
    pub fn solve(grid: WdmGrid, stages: Vec<(FiberSpan, AmplifierSpec)>, dz_m: f64) -> Result<Self> {
        let n = grid.len();
        let mut input: Vec<f64> = grid.channels().iter().map(|c| c.launch_power_w).collect();
        let mut built = Vec::with_capacity(stages.len());
        let mut profiles = Vec::with_capacity(stages.len());
        for (s, (span, spec)) in stages.into_iter().enumerate() {
            let problems = span.diagnostics(n);
            if !problems.is_empty() {
                return Err(Error::Config(
                    problems.into_iter().map(|p| format!("span {s}: {p}")).collect(),
                ));
            }
            let launch: Vec<SpectralComponent> = grid
                .channels()
                .iter()
                .zip(&input)
                .zip(&span.alpha_per_m)
                .map(|((c, p), a)| SpectralComponent::channel(c.center_hz, *p, *a))
                .collect();
            let prof = solve_power_evolution(&span, &launch, dz_m)
                .map_err(|e| e.context(format!("span {s}")))?;
            let gain = match spec.gain {
                AmpGain::PerChannel(g) => g,
                AmpGain::Transparent => (0..n).map(|k| 1.0 / prof.rho_end(k)).collect(),
            };
            let phase = if spec.phase_rad.is_empty() {
                vec![0.0; n]
            } else {
                spec.phase_rad
            };
            let amp = Amplifier {
                gain,
                phase_rad: phase,
                beta_dcu_s2: spec.beta_dcu_s2,
            };
            let problems = amp.diagnostics(n);
            if !problems.is_empty() {
                return Err(Error::Config(
                    problems.into_iter().map(|p| format!("amplifier {s}: {p}")).collect(),
                ));
            }
            for (k, p) in input.iter_mut().enumerate() {
                *p *= prof.rho_end(k) * amp.gain[k];
            }
            built.push((span, amp));
            profiles.push(prof);
        }
        Self::from_profiles(grid, built, profiles)
    }

    pub fn grid(&self) -> &WdmGrid {
        &self.grid
    }

    pub fn span_count(&self) -> usize {
        self.spans.len()
    }

    pub fn span(&self, s: usize) -> &FiberSpan {
        &self.spans[s]
    }

    pub fn amplifier(&self, s: usize) -> &Amplifier {
        &self.amps[s]
    }

    pub fn profiles(&self, s: usize) -> &PowerProfileSet {
        &self.profiles[s]
    }

    pub fn is_raman_free(&self) -> bool {
        self.spans.iter().all(FiberSpan::is_raman_free)
    }

    /// Same spans and profiles on a grid with every launch power scaled.
    ///
    /// Profiles are reused as-is, so this is only physical for Raman-free links.
    pub fn with_scaled_launch(&self, factor: f64) -> Result<Self> {
        Ok(Self {
            grid: self.grid.scaled_power(factor)?,
            ..self.clone()
        })
    }

    fn check_span(&self, s: usize) -> Result<()> {
        if s >= self.spans.len() {
            return Err(Error::Contract(format!(
                "span index {s} out of range (link has {} spans)",
                self.spans.len()
            )));
        }
        Ok(())
    }

    /// Channel indices of `(f1, f2, f3, f1+f2−f3)`.
    pub fn resolve(&self, f1: f64, f2: f64, f3: f64) -> Result<[usize; 4]> {
        Ok([
            self.grid.lookup(f1)?,
            self.grid.lookup(f2)?,
            self.grid.lookup(f3)?,
            self.grid.lookup(f1 + f2 - f3)?,
        ])
    }

    /// Product of both amplifier/loss chains for span `s` (0-based), on channel indices
    /// `[i, j, k, l]` of `f1, f2, f3, f1+f2−f3`.
    pub fn end_factors_for_channels(&self, s: usize, ch: [usize; 4]) -> f64 {
        let [i, j, k, l] = ch;
        // fixed order keeps f1 <-> f2 swaps bit-identical
        let (i, j) = (i.min(j), i.max(j));
        let mut prod = 1.0;
        for p in s..self.spans.len() {
            prod *= (self.amps[p].gain[l] * self.profiles[p].rho_end(l)).sqrt();
        }
        for p in 0..s {
            let g = &self.amps[p].gain;
            let r = &self.profiles[p];
            prod *= (g[i] * g[j] * g[k] * r.rho_end(i) * r.rho_end(j) * r.rho_end(k)).sqrt();
        }
        prod
    }
}

/// `ρ` of the channel containing `f` in span `s`, linear in `z` between samples.
pub fn rho_at(link: &Link, s: usize, z_m: f64, f_hz: f64) -> Result<f64> {
    link.check_span(s)?;
    let prof = &link.profiles[s];
    let slack = 1e-9 * prof.length_m();
    if !(z_m >= -slack && z_m <= prof.length_m() + slack) {
        return Err(Error::Domain(format!(
            "z = {z_m} m outside span {s} of length {} m",
            prof.length_m()
        )));
    }
    let k = link.grid.lookup(f_hz)?;
    Ok(prof.rho_at(k, z_m))
}

/// The real gain/loss product multiplying span `s`'s contribution to the link function.
pub fn end_of_span_factors(link: &Link, s: usize, f1: f64, f2: f64, f3: f64) -> Result<f64> {
    link.check_span(s)?;
    Ok(link.end_factors_for_channels(s, link.resolve(f1, f2, f3)?))
}
