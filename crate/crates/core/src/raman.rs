//! Raman power evolution along one fiber span.
//!
//! Every channel and pump obeys
//!
//! ```text
//! ϱ_l dP_l/dz = [ Σ_i ζ(f_l/f_i) C_R(f_i − f_l) P_i ] P_l − 2 α_l P_l
//! ```
//!
//! Forward components are integrated in normalized form (`ρ = P/P(0)`) so a
//! channel launched with zero power still gets a well-defined profile: the
//! equation is linear in `P_l`, so `ρ_l` does not depend on `P_l(0)`.
//! Backward pumps are integrated in absolute power and their unknown `z = 0`
//! values are found by shooting on the `z = L` boundary condition.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::link::FiberSpan;

/// Raman gain coefficient `C_R(u)` in 1/(W·m), tabulated for `u ≥ 0`.
///
/// Values between samples are interpolated linearly; the negative half is the
/// odd extension `C_R(−u) = −C_R(u)`. Past the last tabulated offset the gain
/// is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct RamanGainProfile {
    offsets_hz: Vec<f64>,
    gain: Vec<f64>,
}

impl RamanGainProfile {
    pub fn new(offsets_hz: Vec<f64>, gain_per_w_per_m: Vec<f64>) -> Result<Self> {
        if offsets_hz.len() != gain_per_w_per_m.len() {
            return Err(Error::Contract(format!(
                "Raman table has {} offsets but {} gain values",
                offsets_hz.len(),
                gain_per_w_per_m.len()
            )));
        }
        if offsets_hz.is_empty() {
            return Ok(Self::zero());
        }
        if offsets_hz.iter().chain(&gain_per_w_per_m).any(|v| !v.is_finite()) {
            return Err(Error::Domain("Raman table contains non-finite values".into()));
        }
        if offsets_hz[0] < 0.0 {
            return Err(Error::Domain(
                "Raman table offsets must be non-negative (the odd extension is implicit)".into(),
            ));
        }
        if offsets_hz.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("Raman table offsets must be strictly increasing".into()));
        }
        if gain_per_w_per_m.iter().any(|&g| g < 0.0) {
            return Err(Error::Domain("Raman gain must be non-negative for u > 0".into()));
        }
        let mut offsets = offsets_hz;
        let mut gain = gain_per_w_per_m;
        if offsets[0] == 0.0 {
            if gain[0] != 0.0 {
                return Err(Error::Domain("Raman gain must vanish at zero offset".into()));
            }
        } else {
            offsets.insert(0, 0.0);
            gain.insert(0, 0.0);
        }
        Ok(Self { offsets_hz: offsets, gain })
    }

    /// The Raman-free profile, `C_R ≡ 0`.
    pub fn zero() -> Self {
        Self {
            offsets_hz: vec![0.0],
            gain: vec![0.0],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.gain.iter().all(|&g| g == 0.0)
    }

    pub fn offsets_hz(&self) -> &[f64] {
        &self.offsets_hz
    }

    pub fn gain_values(&self) -> &[f64] {
        &self.gain
    }

    /// `C_R(u)` for a signed frequency offset `u = f_i − f_l`.
    pub fn gain(&self, u_hz: f64) -> f64 {
        let a = u_hz.abs();
        let v = self.interpolate(a);
        if u_hz < 0.0 {
            -v
        } else {
            v
        }
    }

    fn interpolate(&self, a: f64) -> f64 {
        let n = self.offsets_hz.len();
        let last = self.offsets_hz[n - 1];
        if a > last {
            return 0.0;
        }
        if a == last {
            return self.gain[n - 1];
        }
        // first index with offset > a; a < last so idx in 1..n
        let idx = self.offsets_hz.partition_point(|&x| x <= a);
        let (x0, x1) = (self.offsets_hz[idx - 1], self.offsets_hz[idx]);
        let (g0, g1) = (self.gain[idx - 1], self.gain[idx]);
        g0 + (g1 - g0) * (a - x0) / (x1 - x0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    /// The propagation sign ϱ.
    pub fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComponentKind {
    Channel,
    Pump,
}

/// A channel or pump taking part in the Raman interaction.
///
/// `power_w` is the launch power at `z = 0` for forward components and the
/// boundary power at `z = L` for backward pumps.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralComponent {
    pub frequency_hz: f64,
    pub power_w: f64,
    pub direction: Direction,
    /// Field loss coefficient; power decays as `exp(−2αz)`.
    pub alpha_per_m: f64,
    pub kind: ComponentKind,
}

impl SpectralComponent {
    pub fn channel(frequency_hz: f64, power_w: f64, alpha_per_m: f64) -> Self {
        Self {
            frequency_hz,
            power_w,
            direction: Direction::Forward,
            alpha_per_m,
            kind: ComponentKind::Channel,
        }
    }

    pub fn pump(frequency_hz: f64, power_w: f64, alpha_per_m: f64, direction: Direction) -> Self {
        Self {
            frequency_hz,
            power_w,
            direction,
            alpha_per_m,
            kind: ComponentKind::Pump,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.frequency_hz.is_finite() && self.frequency_hz > 0.0) {
            return Err(Error::Domain(format!(
                "component frequency must be positive, got {}",
                self.frequency_hz
            )));
        }
        if !(self.power_w.is_finite() && self.power_w >= 0.0) {
            return Err(Error::Domain(format!(
                "component power must be non-negative, got {}",
                self.power_w
            )));
        }
        if !(self.alpha_per_m.is_finite() && self.alpha_per_m >= 0.0) {
            return Err(Error::Domain(format!(
                "component loss must be non-negative, got {}",
                self.alpha_per_m
            )));
        }
        if self.kind == ComponentKind::Channel && self.direction == Direction::Backward {
            return Err(Error::Domain("WDM channels always propagate forward".into()));
        }
        Ok(())
    }
}

/// `ζ(x)`: `x` above one, `0` at exactly one, `1` below one.
pub fn zeta(x: f64) -> Result<f64> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::Domain(format!("zeta needs a positive finite ratio, got {x}")));
    }
    Ok(zeta_unchecked(x))
}

fn zeta_unchecked(x: f64) -> f64 {
    if x > 1.0 {
        x
    } else if x == 1.0 {
        0.0
    } else {
        1.0
    }
}

/// `dP_l/dz` for every component at the given absolute powers.
pub fn raman_rhs(
    powers_w: &[f64],
    components: &[SpectralComponent],
    gain: &RamanGainProfile,
) -> Result<Vec<f64>> {
    if powers_w.len() != components.len() {
        return Err(Error::Contract(format!(
            "{} powers for {} components",
            powers_w.len(),
            components.len()
        )));
    }
    if powers_w.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::Domain("powers must be finite and non-negative".into()));
    }
    for c in components {
        c.validate()?;
    }
    let system = RamanSystem::new(components, gain, vec![1.0; components.len()]);
    let mut out = vec![0.0; components.len()];
    system.rhs(powers_w, &mut out);
    Ok(out)
}

/// Precomputed right-hand side. State `y_l` relates to power by `P_l = scale_l · y_l`.
struct RamanSystem {
    n: usize,
    coupling: Vec<f64>,
    scale: Vec<f64>,
    loss: Vec<f64>,
    inv_dir: Vec<f64>,
}

impl RamanSystem {
    fn new(components: &[SpectralComponent], gain: &RamanGainProfile, scale: Vec<f64>) -> Self {
        let n = components.len();
        let mut coupling = vec![0.0; n * n];
        for (l, cl) in components.iter().enumerate() {
            for (i, ci) in components.iter().enumerate() {
                let z = zeta_unchecked(cl.frequency_hz / ci.frequency_hz);
                coupling[l * n + i] = z * gain.gain(ci.frequency_hz - cl.frequency_hz);
            }
        }
        Self {
            n,
            coupling,
            scale,
            loss: components.iter().map(|c| 2.0 * c.alpha_per_m).collect(),
            inv_dir: components.iter().map(|c| 1.0 / c.direction.sign()).collect(),
        }
    }

    fn rhs(&self, y: &[f64], out: &mut [f64]) {
        let n = self.n;
        for l in 0..n {
            let row = &self.coupling[l * n..(l + 1) * n];
            let mut g = 0.0;
            for i in 0..n {
                g += row[i] * self.scale[i] * y[i];
            }
            out[l] = self.inv_dir[l] * (g - self.loss[l]) * y[l];
        }
    }

    /// Classic fixed-step RK4 from `z = 0`. `observe` sees every grid state,
    /// starting with `y0`.
    fn integrate(
        &self,
        y0: &[f64],
        steps: usize,
        h: f64,
        mut observe: impl FnMut(&[f64]),
    ) -> Result<Vec<f64>> {
        let n = self.n;
        let mut y = y0.to_vec();
        let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
            (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        observe(&y);
        for step in 0..steps {
            self.rhs(&y, &mut k1);
            for i in 0..n {
                tmp[i] = y[i] + 0.5 * h * k1[i];
            }
            self.rhs(&tmp, &mut k2);
            for i in 0..n {
                tmp[i] = y[i] + 0.5 * h * k2[i];
            }
            self.rhs(&tmp, &mut k3);
            for i in 0..n {
                tmp[i] = y[i] + h * k3[i];
            }
            self.rhs(&tmp, &mut k4);
            for i in 0..n {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            if y.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::StepSize {
                    z_m: (step + 1) as f64 * h,
                    dz_m: h,
                });
            }
            observe(&y);
        }
        Ok(y)
    }
}

/// Power per component per grid point.
type Trajectory = Vec<Vec<f64>>;

/// Iteration count and final residual of the backward-pump shooting loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingReport {
    pub iterations: usize,
    /// Max over backward pumps of `|P(L)/P_target − 1|`.
    pub residual: f64,
}

pub const SHOOTING_TOLERANCE: f64 = 1e-8;
pub const SHOOTING_MAX_ITERATIONS: usize = 50;

/// Sampled powers of every component (channels and pumps) along one span.
#[derive(Debug, Clone)]
pub struct ComponentProfiles {
    pub components: Vec<SpectralComponent>,
    pub length_m: f64,
    pub step_m: f64,
    /// `power_w[c][i]`: power of component `c` at grid point `i`.
    pub power_w: Vec<Vec<f64>>,
    /// Normalized profiles `P(z)/P(0)` for forward components; empty for backward pumps.
    pub rho: Vec<Vec<f64>>,
    pub shooting: Option<ShootingReport>,
}

impl ComponentProfiles {
    pub fn grid_len(&self) -> usize {
        self.power_w.first().map_or(0, Vec::len)
    }

    pub fn z_at(&self, i: usize) -> f64 {
        if i + 1 == self.grid_len() {
            self.length_m
        } else {
            i as f64 * self.step_m
        }
    }

    /// Drops the pumps and keeps the channel profiles.
    pub fn into_channel_profiles(self) -> PowerProfileSet {
        let mut launch = Vec::new();
        let mut rho = Vec::new();
        for (c, r) in self.components.iter().zip(self.rho) {
            if c.kind == ComponentKind::Channel {
                launch.push(c.power_w);
                rho.push(r);
            }
        }
        PowerProfileSet {
            length_m: self.length_m,
            step_m: self.step_m,
            launch_w: launch,
            rho,
        }
    }
}

fn grid_steps(length_m: f64, dz_m: f64) -> Result<(usize, f64)> {
    if !(length_m.is_finite() && length_m > 0.0) {
        return Err(Error::Domain(format!("span length must be positive, got {length_m}")));
    }
    if !(dz_m.is_finite() && dz_m > 0.0 && dz_m <= length_m) {
        return Err(Error::Domain(format!("dz must lie in (0, L], got {dz_m}")));
    }
    let steps = (length_m / dz_m - 1e-9).ceil().max(1.0) as usize;
    Ok((steps, length_m / steps as f64))
}

/// Solves every component on `[0, L]` with RK4, shooting on backward pumps.
///
/// `dz` is rounded down so the grid lands exactly on `L`.
pub fn solve_components(
    length_m: f64,
    components: &[SpectralComponent],
    gain: &RamanGainProfile,
    dz_m: f64,
) -> Result<ComponentProfiles> {
    let (steps, h) = grid_steps(length_m, dz_m)?;
    for c in components {
        c.validate()?;
    }
    let n = components.len();
    let backward: Vec<usize> = (0..n)
        .filter(|&c| components[c].direction == Direction::Backward)
        .collect();
    let scale: Vec<f64> = components
        .iter()
        .map(|c| match c.direction {
            Direction::Forward => c.power_w,
            Direction::Backward => 1.0,
        })
        .collect();
    let system = RamanSystem::new(components, gain, scale.clone());

    let run = |y0: &[f64]| -> Result<Vec<Vec<f64>>> {
        let mut states: Vec<Vec<f64>> = vec![Vec::with_capacity(steps + 1); n];
        system.integrate(y0, steps, h, |y| {
            for (s, v) in states.iter_mut().zip(y) {
                s.push(*v);
            }
        })?;
        Ok(states)
    };

    let mut y0: Vec<f64> = components
        .iter()
        .map(|c| match c.direction {
            Direction::Forward => 1.0,
            Direction::Backward => c.power_w * (-2.0 * c.alpha_per_m * length_m).exp(),
        })
        .collect();

    let (states, shooting) = if backward.is_empty() {
        (run(&y0)?, None)
    } else {
        let (states, report) = shoot(&system, &mut y0, &backward, components, steps, h, &run)?;
        (states, Some(report))
    };

    let mut power_w = Vec::with_capacity(n);
    let mut rho = Vec::with_capacity(n);
    for (c, s) in components.iter().zip(states) {
        match c.direction {
            Direction::Forward => {
                power_w.push(s.iter().map(|y| c.power_w * y).collect());
                rho.push(s);
            }
            Direction::Backward => {
                power_w.push(s);
                rho.push(Vec::new());
            }
        }
    }
    Ok(ComponentProfiles {
        components: components.to_vec(),
        length_m,
        step_m: h,
        power_w,
        rho,
        shooting,
    })
}

/// Damped Newton on `ln P_b(0)` so that `P_b(L)` hits each backward pump's target.
fn shoot(
    system: &RamanSystem,
    y0: &mut [f64],
    backward: &[usize],
    components: &[SpectralComponent],
    steps: usize,
    h: f64,
    run: &dyn Fn(&[f64]) -> Result<Trajectory>,
) -> Result<(Trajectory, ShootingReport)> {
    // Zero-power backward pumps stay identically zero.
    let active: Vec<usize> = backward
        .iter()
        .copied()
        .filter(|&c| components[c].power_w > 0.0)
        .collect();
    for &c in backward {
        if components[c].power_w == 0.0 {
            y0[c] = 0.0;
        }
    }
    let m = active.len();
    let targets: Vec<f64> = active.iter().map(|&c| components[c].power_w).collect();

    let end_state = |y: &[f64]| -> Result<Vec<f64>> { system.integrate(y, steps, h, |_| {}) };
    let log_residual = |end: &[f64]| -> DVector<f64> {
        DVector::from_iterator(m, active.iter().zip(&targets).map(|(&c, t)| (end[c] / t).ln()))
    };
    let rel_residual = |end: &[f64]| -> f64 {
        active
            .iter()
            .zip(&targets)
            .map(|(&c, t)| (end[c] / t - 1.0).abs())
            .fold(0.0, f64::max)
    };
    let with_logs = |base: &[f64], s: &DVector<f64>| -> Vec<f64> {
        let mut y = base.to_vec();
        for (k, &c) in active.iter().enumerate() {
            y[c] = s[k].exp();
        }
        y
    };

    let mut s = DVector::from_iterator(m, active.iter().map(|&c| y0[c].ln()));
    let mut end = end_state(&with_logs(y0, &s))?;
    let mut residual = rel_residual(&end);
    let mut iterations = 0;

    while residual >= SHOOTING_TOLERANCE || !residual.is_finite() {
        if iterations == SHOOTING_MAX_ITERATIONS {
            return Err(Error::Shooting {
                iterations,
                residual,
            });
        }
        iterations += 1;
        let r = log_residual(&end);
        let fd = 1e-6;
        let mut jac = DMatrix::zeros(m, m);
        for k in 0..m {
            let mut sp = s.clone();
            sp[k] += fd;
            let rp = log_residual(&end_state(&with_logs(y0, &sp))?);
            jac.set_column(k, &((rp - &r) / fd));
        }
        let Some(mut delta) = jac.lu().solve(&(-&r)) else {
            return Err(Error::Shooting {
                iterations,
                residual,
            });
        };
        let max_step = delta.amax();
        if max_step > 5.0 {
            delta *= 5.0 / max_step;
        }
        let r_norm = r.amax();
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..12 {
            let trial = &s + &delta * lambda;
            if let Ok(e) = end_state(&with_logs(y0, &trial)) {
                let rn = log_residual(&e).amax();
                if rn.is_finite() && rn < r_norm {
                    accepted = Some((trial, e));
                    break;
                }
            }
            lambda *= 0.5;
        }
        let Some((trial, e)) = accepted else {
            return Err(Error::Shooting {
                iterations,
                residual,
            });
        };
        s = trial;
        end = e;
        residual = rel_residual(&end);
    }

    let y_final = with_logs(y0, &s);
    y0.copy_from_slice(&y_final);
    let states = run(&y_final)?;
    Ok((
        states,
        ShootingReport {
            iterations,
            residual,
        },
    ))
}

/// Channel profiles for one span: forward pumps and backward pumps from the span,
/// channels from `launch`. Pumps are dropped from the result.
pub fn solve_power_evolution(
    span: &FiberSpan,
    launch: &[SpectralComponent],
    dz_m: f64,
) -> Result<PowerProfileSet> {
    if launch.iter().any(|c| c.kind != ComponentKind::Channel) {
        return Err(Error::Contract(
            "launch list must hold channels only; pumps belong to the span".into(),
        ));
    }
    let mut components = launch.to_vec();
    components.extend(span.pumps.iter().cloned());
    Ok(solve_components(span.length_m, &components, &span.raman, dz_m)?.into_channel_profiles())
}

/// Normalized channel profiles `ρ(z_i, f_k)` on a uniform grid covering `[0, L]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerProfileSet {
    length_m: f64,
    step_m: f64,
    launch_w: Vec<f64>,
    rho: Vec<Vec<f64>>,
}

impl PowerProfileSet {
    /// Builds a profile set from sampled `ρ` (channel-major) on `rho[k].len()` uniform points.
    pub fn from_rho(length_m: f64, launch_w: Vec<f64>, rho: Vec<Vec<f64>>) -> Result<Self> {
        if !(length_m.is_finite() && length_m > 0.0) {
            return Err(Error::Domain(format!("span length must be positive, got {length_m}")));
        }
        if rho.len() != launch_w.len() {
            return Err(Error::Contract(format!(
                "{} profiles for {} launch powers",
                rho.len(),
                launch_w.len()
            )));
        }
        let points = rho.first().map_or(0, Vec::len);
        if points < 2 || rho.iter().any(|r| r.len() != points) {
            return Err(Error::Contract(
                "every profile needs the same number (≥ 2) of grid samples".into(),
            ));
        }
        for r in &rho {
            if (r[0] - 1.0).abs() > 1e-12 {
                return Err(Error::Domain(format!("ρ(0) must be 1, got {}", r[0])));
            }
            if r.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(Error::Domain("ρ samples must be finite and positive".into()));
            }
        }
        if launch_w.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::Domain("launch powers must be non-negative".into()));
        }
        Ok(Self {
            length_m,
            step_m: length_m / (points - 1) as f64,
            launch_w,
            rho,
        })
    }

    pub fn length_m(&self) -> f64 {
        self.length_m
    }

    pub fn step_m(&self) -> f64 {
        self.step_m
    }

    pub fn channel_count(&self) -> usize {
        self.rho.len()
    }

    pub fn grid_len(&self) -> usize {
        self.rho.first().map_or(0, Vec::len)
    }

    pub fn z_at(&self, i: usize) -> f64 {
        if i + 1 == self.grid_len() {
            self.length_m
        } else {
            i as f64 * self.step_m
        }
    }

    pub fn launch_w(&self) -> &[f64] {
        &self.launch_w
    }

    pub fn rho(&self, channel: usize) -> &[f64] {
        &self.rho[channel]
    }

    pub fn power_w(&self, channel: usize, i: usize) -> f64 {
        self.launch_w[channel] * self.rho[channel][i]
    }

    pub fn rho_end(&self, channel: usize) -> f64 {
        *self.rho[channel].last().expect("non-empty profile")
    }

    /// `ρ` of `channel` at `z`, linear between grid samples. `z` is clamped to `[0, L]`.
    pub fn rho_at(&self, channel: usize, z_m: f64) -> f64 {
        let r = &self.rho[channel];
        let last = r.len() - 1;
        let x = (z_m / self.step_m).clamp(0.0, last as f64);
        let i = (x.floor() as usize).min(last - 1);
        let t = x - i as f64;
        r[i] + (r[i + 1] - r[i]) * t
    }

    /// CSV with header `z_m,ch_<k>_P_W...,ch_<k>_rho...`, one row per grid point.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let n = self.channel_count();
        let mut header = vec!["z_m".to_string()];
        header.extend((0..n).map(|k| format!("ch_{k}_P_W")));
        header.extend((0..n).map(|k| format!("ch_{k}_rho")));
        w.write_record(&header)?;
        for i in 0..self.grid_len() {
            let mut row = vec![fmt_f64(self.z_at(i))];
            row.extend((0..n).map(|k| fmt_f64(self.power_w(k, i))));
            row.extend((0..n).map(|k| fmt_f64(self.rho[k][i])));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Shortest string that round-trips the value.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}
