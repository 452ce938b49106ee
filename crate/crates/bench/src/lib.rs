//! Shared fixtures for the benchmarks.

use lf_core::poly::fit_all_spans;
use lf_core::{
    enumerate_islands, AmplifierSpec, Direction, FiberSpan, FitConfig, Island, Link, PsiFit, RamanGainProfile,
    SpectralComponent, WdmGrid,
};

pub const ALPHA: f64 = 2.303e-5;

/// Triangular silica-like gain, peak 0.42 /(W·km) at 13.2 THz.
pub fn gain() -> RamanGainProfile {
    RamanGainProfile::new(vec![0.0, 13.2e12, 30e12], vec![0.0, 4.2e-4, 0.0]).unwrap()
}

pub fn grid(channels: usize) -> WdmGrid {
    WdmGrid::uniform(192.9e12, 50e9, channels, 32e9, 1e-3).unwrap()
}

/// `spans` identical 80 km spans, each with a 300 mW forward pump.
pub fn pumped_link(channels: usize, spans: usize, dz: f64) -> Link {
    let g = grid(channels);
    let mid = 0.5 * (g.channels()[0].center_hz + g.channels()[channels - 1].center_hz);
    let stages = (0..spans)
        .map(|_| {
            let mut span = FiberSpan::standard(80e3, 1.3e-3, ALPHA, -2.17e-26, mid, channels);
            span.raman = gain();
            span.pumps = vec![SpectralComponent::pump(mid + 13.2e12, 0.3, 2.88e-5, Direction::Forward)];
            (span, AmplifierSpec::transparent())
        })
        .collect();
    Link::solve(g, stages, dz).unwrap()
}

/// Islands of `cut` with their per-span fits.
pub fn fitted_islands(link: &Link, cut: usize) -> (Vec<Island>, Vec<Vec<PsiFit>>) {
    let islands = enumerate_islands(link.grid(), cut).unwrap();
    let fits = islands
        .iter()
        .map(|i| fit_all_spans(link, i.all_channels(), &FitConfig::default()).unwrap())
        .collect();
    (islands, fits)
}
