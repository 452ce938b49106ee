//! GN-model NLI PSD and power of a channel under test.
//!
//! `G_NLI(f) = (16/27) Σ_islands ∬ G(f1) G(f2) G(f1+f2−f) |LK(f1, f2, f1+f2−f)|² df1 df2`
//! for dual-polarization channels with rectangular spectra.
//!
//! Islands are integrated in parallel; their contributions are stored in
//! island order and summed sequentially, so results do not depend on the
//! thread count.
//!
//! An island stops refining once its level-to-level change is below
//! `rel_tol` relative to its own value, or relative to its even share of a
//! single-panel estimate of the total PSD. Negligible, strongly oscillating
//! islands therefore settle at an absolute accuracy instead of failing.

pub mod quadrature;

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::islands::Island;
use crate::link::Link;
use crate::poly::link_function::check_fits;
use crate::poly::{link_function_channels, link_function_no_raman, ExpKernel, PsiFit};
use crate::raman::fmt_f64;

pub use quadrature::{coarse_estimate, integrate_polygon, integrate_polygon_floor, Polygon, QuadConfig, Refinement};

pub const GN_PREFACTOR: f64 = 16.0 / 27.0;

/// One island's share of `G_NLI(f)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IslandContribution {
    pub channels: [usize; 3],
    /// W/Hz.
    pub psd: f64,
    pub evaluations: usize,
    pub levels: usize,
    pub rel_change: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsdResult {
    pub frequency_hz: f64,
    pub psd: f64,
    pub islands: Vec<IslandContribution>,
}

impl PsdResult {
    pub fn evaluations(&self) -> usize {
        self.islands.iter().map(|c| c.evaluations).sum()
    }

    pub fn max_rel_change(&self) -> f64 {
        self.islands.iter().map(|c| c.rel_change).fold(0.0, f64::max)
    }
}

fn check_islands(link: &Link, f: f64, islands: &[Island]) -> Result<()> {
    let Some(first) = islands.first() else {
        return Ok(());
    };
    let cut = first.cut;
    if islands.iter().any(|x| x.cut != cut) {
        return Err(Error::Contract("islands belong to different CUTs".into()));
    }
    let (a, b) = link.grid().band(cut);
    if !(f >= a && f <= b) {
        return Err(Error::Contract(format!(
            "frequency {f:e} Hz is outside CUT {cut} band [{a:e}, {b:e}]"
        )));
    }
    Ok(())
}

/// `G_NLI(f)` with an arbitrary link-function source.
///
/// `lk(island_index, [i, j, k, cut], f1, f2, f3)` must return `LK(f1, f2, f3)`.
pub fn gn_nli_psd_with<F>(
    link: &Link,
    f: f64,
    islands: &[Island],
    quad: &QuadConfig,
    lk: F,
) -> Result<PsdResult>
where
    F: Fn(usize, [usize; 4], f64, f64, f64) -> Result<Complex64> + Sync,
{
    let problems = quad.diagnostics();
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }
    check_islands(link, f, islands)?;
    let grid = link.grid();
    let weight = |island: &Island| {
        let [i, j, k] = island.channels;
        let ch = grid.channels();
        ch[i].psd() * ch[j].psd() * ch[k].psd()
    };
    let polygon = |island: &Island| {
        let (ak, bk) = grid.band(island.channels[2]);
        Polygon::new(grid.band(island.channels[0]), grid.band(island.channels[1]), (f + ak, f + bk))
    };
    // Single-panel total; each island must resolve its share of it.
    let coarse: Vec<f64> = islands
        .par_iter()
        .enumerate()
        .map(|(n, island)| {
            let g = weight(island);
            if g == 0.0 {
                return Ok(0.0);
            }
            let all = island.all_channels();
            let v = coarse_estimate(&polygon(island), quad, |f1, f2| {
                Ok(lk(n, all, f1, f2, f1 + f2 - f)?.norm_sqr())
            })
            .map_err(|e| e.context(format!("island {}", island.label())))?;
            Ok(GN_PREFACTOR * g * v)
        })
        .collect::<Result<_>>()?;
    let share = coarse.iter().sum::<f64>() / islands.len().max(1) as f64;
    let contributions: Vec<IslandContribution> = islands
        .par_iter()
        .enumerate()
        .map(|(n, island)| {
            let g = weight(island);
            if g == 0.0 {
                return Ok(IslandContribution {
                    channels: island.channels,
                    psd: 0.0,
                    evaluations: 0,
                    levels: 0,
                    rel_change: 0.0,
                });
            }
            let all = island.all_channels();
            let floor = share / (GN_PREFACTOR * g);
            let r = integrate_polygon_floor(&polygon(island), quad, floor, |f1, f2| {
                Ok(lk(n, all, f1, f2, f1 + f2 - f)?.norm_sqr())
            })
            .map_err(|e| e.context(format!("island {}", island.label())))?;
            if !r.converged {
                return Err(Error::Quadrature {
                    island: island.label(),
                    tolerance: quad.rel_tol,
                    levels: r.levels,
                    rel_change: r.rel_change,
                });
            }
            Ok(IslandContribution {
                channels: island.channels,
                psd: GN_PREFACTOR * g * r.value,
                evaluations: r.evaluations,
                levels: r.levels,
                rel_change: r.rel_change,
            })
        })
        .collect::<Result<_>>()?;
    let psd = contributions.iter().map(|c| c.psd).sum();
    Ok(PsdResult {
        frequency_hz: f,
        psd,
        islands: contributions,
    })
}

/// `G_NLI(f)` from polynomial fits, `fits[n]` holding one fit per span for `islands[n]`.
pub fn gn_nli_psd(
    link: &Link,
    f: f64,
    islands: &[Island],
    fits: &[Vec<PsiFit>],
    quad: &QuadConfig,
    kernel: &ExpKernel,
) -> Result<PsdResult> {
    if fits.len() != islands.len() {
        return Err(Error::Contract(format!(
            "{} fit sets for {} islands",
            fits.len(),
            islands.len()
        )));
    }
    for (island, set) in islands.iter().zip(fits) {
        check_fits(link, island.all_channels(), set).map_err(|e| e.context(format!("island {}", island.label())))?;
    }
    gn_nli_psd_with(link, f, islands, quad, |n, ch, f1, f2, f3| {
        Ok(link_function_channels(link, ch, f1, f2, f3, &fits[n], kernel))
    })
}

/// `G_NLI(f)` through the closed-form Raman-free link function.
pub fn gn_nli_psd_no_raman(link: &Link, f: f64, islands: &[Island], quad: &QuadConfig) -> Result<PsdResult> {
    gn_nli_psd_with(link, f, islands, quad, |_, _, f1, f2, f3| {
        link_function_no_raman(link, f1, f2, f3)
    })
}

/// NLI of one channel under test.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelNli {
    pub cut: usize,
    pub center_hz: f64,
    pub symbol_rate_baud: f64,
    /// `G_NLI` at the channel center, W/Hz.
    pub psd_center: f64,
    pub power_w: f64,
    /// PSD samples used by the power estimate.
    pub samples: Vec<PsdResult>,
}

impl ChannelNli {
    /// The middle PSD sample (the center itself for odd `band_points`).
    pub fn center(&self) -> &PsdResult {
        &self.samples[self.samples.len() / 2]
    }

    pub fn evaluations(&self) -> usize {
        self.samples.iter().map(PsdResult::evaluations).sum()
    }

    pub fn max_rel_change(&self) -> f64 {
        self.samples.iter().map(PsdResult::max_rel_change).fold(0.0, f64::max)
    }
}

/// NLI power in the CUT band from PSD samples produced by `psd_at`.
///
/// One band point gives center PSD times symbol rate; more give a trapezoid
/// across the band (an odd count keeps the center among the samples).
pub fn gn_nli_power_with<P>(link: &Link, cut: usize, quad: &QuadConfig, psd_at: P) -> Result<ChannelNli>
where
    P: Fn(f64) -> Result<PsdResult>,
{
    if cut >= link.grid().len() {
        return Err(Error::Contract(format!("CUT index {cut} out of range")));
    }
    let ch = &link.grid().channels()[cut];
    let (a, b) = link.grid().band(cut);
    let samples: Vec<PsdResult> = if quad.band_points <= 1 {
        vec![psd_at(ch.center_hz)?]
    } else {
        let n = quad.band_points;
        (0..n)
            .map(|p| psd_at(a + (b - a) * p as f64 / (n - 1) as f64))
            .collect::<Result<_>>()?
    };
    let power_w = if samples.len() == 1 {
        samples[0].psd * ch.symbol_rate_baud
    } else {
        let h = (b - a) / (samples.len() - 1) as f64;
        let inner: f64 = samples[1..samples.len() - 1].iter().map(|s| s.psd).sum();
        h * (inner + 0.5 * (samples[0].psd + samples[samples.len() - 1].psd))
    };
    let psd_center = if samples.len() % 2 == 1 {
        samples[samples.len() / 2].psd
    } else {
        psd_at(ch.center_hz)?.psd
    };
    Ok(ChannelNli {
        cut,
        center_hz: ch.center_hz,
        symbol_rate_baud: ch.symbol_rate_baud,
        psd_center,
        power_w,
        samples,
    })
}

/// NLI power of `cut` from polynomial fits.
pub fn gn_nli_power(
    link: &Link,
    cut: usize,
    islands: &[Island],
    fits: &[Vec<PsiFit>],
    quad: &QuadConfig,
    kernel: &ExpKernel,
) -> Result<ChannelNli> {
    gn_nli_power_with(link, cut, quad, |f| gn_nli_psd(link, f, islands, fits, quad, kernel))
}

/// Per-channel NLI results of one run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NliReport {
    pub channels: Vec<ChannelNli>,
}

impl NliReport {
    /// CSV: one row per CUT.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "cut",
            "center_hz",
            "symbol_rate_baud",
            "psd_center_w_per_hz",
            "nli_power_w",
            "islands",
            "evaluations",
            "max_rel_change",
        ])?;
        for c in &self.channels {
            w.write_record([
                c.cut.to_string(),
                fmt_f64(c.center_hz),
                fmt_f64(c.symbol_rate_baud),
                fmt_f64(c.psd_center),
                fmt_f64(c.power_w),
                c.center().islands.len().to_string(),
                c.evaluations().to_string(),
                fmt_f64(c.max_rel_change()),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Human-readable summary with the top island contributions per CUT.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for c in &self.channels {
            let db = |p: f64| if p > 0.0 { format!("{:.3} dBm", 10.0 * (p * 1e3).log10()) } else { "-inf dBm".into() };
            s.push_str(&format!(
                "CUT {} @ {:.6} THz: P_NLI = {:.6e} W ({}), G_NLI(center) = {:.6e} W/Hz\n",
                c.cut,
                c.center_hz * 1e-12,
                c.power_w,
                db(c.power_w),
                c.psd_center
            ));
            let center = c.center();
            let mut order: Vec<&IslandContribution> = center.islands.iter().collect();
            order.sort_by(|a, b| b.psd.total_cmp(&a.psd));
            for isl in order.iter().take(5) {
                let [i, j, k] = isl.channels;
                let share = if center.psd > 0.0 { 100.0 * isl.psd / center.psd } else { 0.0 };
                s.push_str(&format!(
                    "    island ({i},{j},{k}): {:.4e} W/Hz ({share:.2}%), {} evaluations, {} levels\n",
                    isl.psd, isl.evaluations, isl.levels
                ));
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::islands::enumerate_islands;
    use crate::link::{AmplifierSpec, FiberSpan, WdmGrid};
    use crate::poly::{fit_all_spans, FitConfig};

    fn link(power: f64) -> Link {
        let grid = WdmGrid::uniform(193e12, 50e9, 3, 32e9, power).unwrap();
        let span = FiberSpan::standard(80e3, 1.3e-3, 2.303e-5, -2.17e-26, 193.05e12, 3);
        Link::solve(grid, vec![(span, AmplifierSpec::transparent())], 100.0).unwrap()
    }

    fn fits_for(link: &Link, islands: &[Island]) -> Vec<Vec<PsiFit>> {
        islands
            .iter()
            .map(|isl| fit_all_spans(link, isl.all_channels(), &FitConfig::default()).unwrap())
            .collect()
    }

    #[test]
    fn zero_power_gives_zero() {
        let l = link(0.0);
        let islands = enumerate_islands(l.grid(), 1).unwrap();
        let fits = fits_for(&l, &islands);
        let r = gn_nli_power(&l, 1, &islands, &fits, &QuadConfig::default(), &ExpKernel::default()).unwrap();
        assert_eq!(r.power_w, 0.0);
        assert_eq!(r.psd_center, 0.0);
    }

    #[test]
    fn total_is_sum_of_islands_and_non_negative() {
        let l = link(1e-3);
        let islands = enumerate_islands(l.grid(), 1).unwrap();
        let fits = fits_for(&l, &islands);
        let r = gn_nli_psd(&l, 193.05e12, &islands, &fits, &QuadConfig::default(), &ExpKernel::default()).unwrap();
        let sum: f64 = r.islands.iter().map(|c| c.psd).sum();
        assert_eq!(sum, r.psd);
        assert!(r.islands.iter().all(|c| c.psd >= 0.0));
        assert!(r.psd > 0.0);
    }

    #[test]
    fn fit_and_closed_form_paths_agree() {
        let l = link(1e-3);
        let islands = enumerate_islands(l.grid(), 0).unwrap();
        let fits = fits_for(&l, &islands);
        let q = QuadConfig::default();
        let a = gn_nli_psd(&l, 193.0e12, &islands, &fits, &q, &ExpKernel::default()).unwrap();
        let b = gn_nli_psd_no_raman(&l, 193.0e12, &islands, &q).unwrap();
        assert!((a.psd - b.psd).abs() < 1e-6 * b.psd);
    }

    #[test]
    fn band_trapezoid_is_close_to_center_estimate() {
        let l = link(1e-3);
        let islands = enumerate_islands(l.grid(), 1).unwrap();
        let fits = fits_for(&l, &islands);
        let k = ExpKernel::default();
        let center = gn_nli_power(&l, 1, &islands, &fits, &QuadConfig::default(), &k).unwrap();
        let q = QuadConfig {
            band_points: 5,
            ..QuadConfig::default()
        };
        let band = gn_nli_power(&l, 1, &islands, &fits, &q, &k).unwrap();
        assert_eq!(band.samples.len(), 5);
        assert!((band.power_w / center.power_w - 1.0).abs() < 0.2);
        assert!((band.psd_center / center.psd_center - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_frequency_outside_cut() {
        let l = link(1e-3);
        let islands = enumerate_islands(l.grid(), 1).unwrap();
        let err = gn_nli_psd_no_raman(&l, 193.0e12, &islands, &QuadConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn csv_and_summary() {
        let l = link(1e-3);
        let islands = enumerate_islands(l.grid(), 1).unwrap();
        let q = QuadConfig::default();
        let r = gn_nli_power_with(&l, 1, &q, |f| gn_nli_psd_no_raman(&l, f, &islands, &q)).unwrap();
        let report = NliReport { channels: vec![r] };
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("cut,center_hz,symbol_rate_baud,psd_center_w_per_hz,nli_power_w"));
        assert_eq!(text.lines().count(), 2);
        assert!(report.summary().contains("CUT 1"));
    }
}
