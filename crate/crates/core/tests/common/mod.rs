#![allow(dead_code)]

use std::collections::HashMap;

use lf_core::link::{AmpGain, AmplifierSpec, FiberSpan, Link, WdmGrid};
use lf_core::poly::{canonical, fit_all_spans, FitConfig, PsiFit};
use lf_core::raman::{Direction, RamanGainProfile, SpectralComponent};

pub const ALPHA: f64 = 2.303e-5; // 0.2 dB/km
pub const ALPHA_PUMP: f64 = 2.88e-5;
pub const GAMMA: f64 = 1.3e-3;
pub const BETA2: f64 = -2.17e-26;
pub const BETA3: f64 = 1.4e-40;
pub const PUMP_OFFSET_HZ: f64 = 13.2e12;

/// Silica-like gain curve, peak ≈ 0.42 /(W·km) at 13.2 THz.
pub fn silica_gain() -> RamanGainProfile {
    let table: [(f64, f64); 20] = [
        (0.0, 0.0),
        (1.0, 0.02),
        (3.0, 0.08),
        (5.0, 0.15),
        (7.0, 0.2),
        (9.0, 0.25),
        (11.0, 0.33),
        (12.0, 0.38),
        (13.2, 0.42),
        (14.0, 0.37),
        (15.0, 0.3),
        (16.0, 0.12),
        (17.0, 0.08),
        (18.0, 0.07),
        (20.0, 0.05),
        (22.0, 0.06),
        (24.0, 0.045),
        (26.0, 0.02),
        (30.0, 0.01),
        (35.0, 0.0),
    ];
    RamanGainProfile::new(
        table.iter().map(|(thz, _)| thz * 1e12).collect(),
        table.iter().map(|(_, g)| g * 1e-3).collect(),
    )
    .unwrap()
}

/// `n` channels of 32 GBd on a 50 GHz grid starting at 192.9 THz.
pub fn c_band(n: usize, power_w: f64) -> WdmGrid {
    WdmGrid::uniform(192.9e12, 50e9, n, 32e9, power_w).unwrap()
}

pub fn center_of(grid: &WdmGrid) -> f64 {
    let ch = grid.channels();
    0.5 * (ch[0].center_hz + ch[ch.len() - 1].center_hz)
}

pub fn plain_span(grid: &WdmGrid, length_m: f64, alpha: f64) -> FiberSpan {
    let mut span = FiberSpan::standard(length_m, GAMMA, alpha, BETA2, center_of(grid), grid.len());
    span.beta3_s3_per_m = BETA3;
    span
}

/// Raman-free multi-span link with amplifier phases and DCUs, so every
/// inter-span factor is exercised.
pub fn raman_free_link(grid: WdmGrid, spans: usize, length_m: f64, dz: f64) -> Link {
    let n = grid.len();
    let stages = (0..spans)
        .map(|s| {
            let span = plain_span(&grid, length_m, ALPHA);
            let amp = AmplifierSpec {
                gain: AmpGain::Transparent,
                phase_rad: (0..n).map(|k| 0.1 * (k + s) as f64).collect(),
                beta_dcu_s2: 2e-23 * s as f64,
            };
            (span, amp)
        })
        .collect();
    Link::solve(grid, stages, dz).unwrap()
}

pub fn forward_pump(grid: &WdmGrid, power_w: f64) -> SpectralComponent {
    SpectralComponent::pump(center_of(grid) + PUMP_OFFSET_HZ, power_w, ALPHA_PUMP, Direction::Forward)
}

/// One 80 km span with a forward pump 13.2 THz above the comb.
pub fn pumped_link(grid: WdmGrid, channel_alpha: f64, pump_w: f64, dz: f64) -> Link {
    let mut span = plain_span(&grid, 80e3, channel_alpha);
    span.raman = silica_gain();
    span.pumps = vec![forward_pump(&grid, pump_w)];
    Link::solve(grid, vec![(span, AmplifierSpec::transparent())], dz).unwrap()
}

/// Memoized per-span fits keyed by channel quadruple.
pub struct FitCache<'a> {
    link: &'a Link,
    cfg: FitConfig,
    fits: HashMap<[usize; 4], Vec<PsiFit>>,
}

impl<'a> FitCache<'a> {
    pub fn new(link: &'a Link, cfg: FitConfig) -> Self {
        Self {
            link,
            cfg,
            fits: HashMap::new(),
        }
    }

    pub fn get(&mut self, ch: [usize; 4]) -> &[PsiFit] {
        let key = canonical(ch);
        let (link, cfg) = (self.link, self.cfg);
        self.fits
            .entry(key)
            .or_insert_with(|| fit_all_spans(link, key, &cfg).unwrap())
    }
}

pub fn rel_err(a: num_complex::Complex64, b: num_complex::Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

/// Trapezoid weights on a uniform grid of `n` points with step `h`.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    h * (values[1..n - 1].iter().sum::<f64>() + 0.5 * (values[0] + values[n - 1]))
}
