//! Integration islands in the `f1–f2` plane for one channel under test (CUT).
//!
//! Triple `(i, j, k)` is an island when some `f1 ∈ B_i`, `f2 ∈ B_j`,
//! `f3 ∈ B_k` put `f1 + f2 − f3` inside the CUT band with positive measure:
//! `[a_i + a_j − b_k, b_i + b_j − a_k] ∩ B_cut` has non-zero length.

use std::io::Write;

use crate::error::{Error, Result};
use crate::link::WdmGrid;
use crate::raman::fmt_f64;

#[derive(Debug, Clone, PartialEq)]
pub struct Island {
    /// Channels holding `f1`, `f2`, `f3`.
    pub channels: [usize; 3],
    pub cut: usize,
    /// Bounding interval of `f1` over the island.
    pub f1_range: (f64, f64),
    pub f2_range: (f64, f64),
    /// An interior point `(f1, f2, f3)` of the island; `f1 + f2 − f3` lies in the CUT band.
    pub representative: [f64; 3],
}

impl Island {
    /// `[i, j, k, cut]`, the channels of `f1, f2, f3, f1+f2−f3`.
    pub fn all_channels(&self) -> [usize; 4] {
        let [i, j, k] = self.channels;
        [i, j, k, self.cut]
    }

    pub fn label(&self) -> String {
        let [i, j, k] = self.channels;
        format!("({i},{j},{k})->{}", self.cut)
    }
}

/// Overlaps shorter than this fraction of the CUT bandwidth count as touching.
const TOUCH_TOLERANCE: f64 = 1e-9;

/// All islands for `cut`, ordered lexicographically in `(i, j, k)`.
pub fn enumerate_islands(grid: &WdmGrid, cut: usize) -> Result<Vec<Island>> {
    let n = grid.len();
    if cut >= n {
        return Err(Error::Contract(format!(
            "CUT index {cut} out of range for {n} channels"
        )));
    }
    let (ac, bc) = grid.band(cut);
    let tol = TOUCH_TOLERANCE * (bc - ac);
    let mut out = Vec::new();
    for i in 0..n {
        let (ai, bi) = grid.band(i);
        for j in 0..n {
            let (aj, bj) = grid.band(j);
            for k in 0..n {
                let (ak, bk) = grid.band(k);
                let lo = ai + aj - bk;
                let hi = bi + bj - ak;
                if hi.min(bc) - lo.max(ac) <= tol {
                    continue;
                }
                // f1 + f2 ranges over [ac + ak, bc + bk] on the island.
                let (slo, shi) = (ac + ak, bc + bk);
                let f1_range = (ai.max(slo - bj), bi.min(shi - aj));
                let f2_range = (aj.max(slo - bi), bj.min(shi - ai));
                // Sum level halfway through the feasible range, split
                // proportionally across the bands on either side.
                let (sa, sb) = ((ai + aj).max(slo), (bi + bj).min(shi));
                let sum = 0.5 * (sa + sb);
                let t = (sum - ai - aj) / ((bi - ai) + (bj - aj));
                let u = (sum - ak - ac) / ((bk - ak) + (bc - ac));
                let representative = [ai + t * (bi - ai), aj + t * (bj - aj), ak + u * (bk - ak)];
                out.push(Island {
                    channels: [i, j, k],
                    cut,
                    f1_range,
                    f2_range,
                    representative,
                });
            }
        }
    }
    Ok(out)
}

/// Diagnostic dump: `cut,i,j,k,f1_lo_hz,f1_hi_hz,f2_lo_hz,f2_hi_hz`.
pub fn write_islands_csv<W: Write>(islands: &[Island], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["cut", "i", "j", "k", "f1_lo_hz", "f1_hi_hz", "f2_lo_hz", "f2_hi_hz"])?;
    for isl in islands {
        let [i, j, k] = isl.channels;
        w.write_record([
            isl.cut.to_string(),
            i.to_string(),
            j.to_string(),
            k.to_string(),
            fmt_f64(isl.f1_range.0),
            fmt_f64(isl.f1_range.1),
            fmt_f64(isl.f2_range.0),
            fmt_f64(isl.f2_range.1),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::Channel;

    #[test]
    fn single_channel_has_only_sci() {
        let g = WdmGrid::uniform(193e12, 50e9, 1, 32e9, 1e-3).unwrap();
        let isl = enumerate_islands(&g, 0).unwrap();
        assert_eq!(isl.len(), 1);
        assert_eq!(isl[0].channels, [0, 0, 0]);
        assert_eq!(isl[0].f1_range, g.band(0));
    }

    #[test]
    fn disjoint_mixing_is_excluded() {
        // widely spaced narrow channels: (0,0,2) lands far below channel 1.
        let g = WdmGrid::uniform(193e12, 100e9, 3, 10e9, 1e-3).unwrap();
        let isl = enumerate_islands(&g, 1).unwrap();
        assert!(isl.iter().all(|x| x.channels != [0, 0, 2]));
        // with a frequency-exact grid only i + j − k = 1 survives
        for x in &isl {
            let [i, j, k] = x.channels;
            assert_eq!(i + j, k + 1, "{:?}", x.channels);
        }
    }

    #[test]
    fn touching_triples_are_excluded() {
        // contiguous 50 GHz channels: (0,0,1) mixes onto [a0 − 100 GHz, a1], touching the
        // CUT band only at its lower edge.
        let g = WdmGrid::uniform(193e12, 50e9, 3, 50e9, 1e-3).unwrap();
        let isl = enumerate_islands(&g, 1).unwrap();
        assert!(isl.iter().all(|x| x.channels != [0, 0, 1]));
        assert!(isl.iter().any(|x| x.channels == [0, 1, 1]));
    }

    #[test]
    fn rejects_bad_cut() {
        let g = WdmGrid::uniform(193e12, 50e9, 2, 32e9, 1e-3).unwrap();
        assert!(matches!(enumerate_islands(&g, 2), Err(Error::Contract(_))));
    }

    #[test]
    fn rectangle_bounds_stay_inside_bands() {
        let g = WdmGrid::new(vec![
            Channel::new(193.0e12, 32e9, 1e-3),
            Channel::new(193.06e12, 64e9, 1e-3),
            Channel::new(193.12e12, 32e9, 1e-3),
        ])
        .unwrap();
        for cut in 0..3 {
            for isl in enumerate_islands(&g, cut).unwrap() {
                let [i, j, _] = isl.channels;
                let (ai, bi) = g.band(i);
                let (aj, bj) = g.band(j);
                assert!(isl.f1_range.0 >= ai && isl.f1_range.1 <= bi);
                assert!(isl.f2_range.0 >= aj && isl.f2_range.1 <= bj);
                assert!(isl.f1_range.1 > isl.f1_range.0);
            }
        }
    }

    #[test]
    fn islands_are_symmetric_in_f1_f2() {
        let g = WdmGrid::new(vec![
            Channel::new(193.0e12, 32e9, 1e-3),
            Channel::new(193.07e12, 64e9, 1e-3),
            Channel::new(193.2e12, 40e9, 1e-3),
        ])
        .unwrap();
        let isl = enumerate_islands(&g, 1).unwrap();
        for x in &isl {
            let [i, j, k] = x.channels;
            assert!(isl.iter().any(|y| y.channels == [j, i, k]));
        }
    }

    #[test]
    fn representative_maps_into_every_band() {
        let g = WdmGrid::new(vec![
            Channel::new(192.9e12, 32e9, 1e-3),
            Channel::new(192.95e12, 32e9, 1e-3),
            Channel::new(193.03e12, 64e9, 1e-3),
        ])
        .unwrap();
        for cut in 0..3 {
            for isl in enumerate_islands(&g, cut).unwrap() {
                let [f1, f2, f3] = isl.representative;
                let [i, j, k] = isl.channels;
                assert_eq!(g.channel_at(f1), Some(i));
                assert_eq!(g.channel_at(f2), Some(j));
                assert_eq!(g.channel_at(f3), Some(k));
                assert_eq!(g.channel_at(f1 + f2 - f3), Some(cut), "{}", isl.label());
            }
        }
    }
}
