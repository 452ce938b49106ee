//! Composite tensor Gauss–Legendre over one island's integration polygon.
//!
//! At a fixed output frequency `f` the island support is
//! `{f1 ∈ B_i, f2 ∈ B_j, f1 + f2 ∈ [f + a_k, f + b_k]}`. Splitting `f1` where the
//! diagonal constraints cross the `B_j` edges leaves pieces on which both inner
//! limits are linear in `f1`, so the rule sees no kinks.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    /// Gauss–Legendre nodes per panel and dimension.
    pub order: usize,
    /// Stop when successive levels differ by less than this, relatively.
    pub rel_tol: f64,
    /// Panels per dimension double each level, starting from one.
    pub max_levels: usize,
    /// PSD samples across the CUT band for the power estimate; `1` means
    /// center PSD times symbol rate.
    pub band_points: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            order: 8,
            rel_tol: 1e-3,
            max_levels: 8,
            band_points: 1,
        }
    }
}

impl QuadConfig {
    pub fn diagnostics(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.order == 0 {
            out.push("quadrature order must be at least 1".into());
        }
        if !(self.rel_tol.is_finite() && self.rel_tol > 0.0) {
            out.push("quadrature tolerance must be positive".into());
        }
        if self.max_levels < 2 {
            out.push("quadrature needs at least 2 refinement levels".into());
        }
        if self.band_points == 0 {
            out.push("band_points must be at least 1".into());
        }
        out
    }

    /// Nodes and weights on `[-1, 1]`.
    pub(crate) fn rule(&self) -> Vec<(f64, f64)> {
        let n = NonZeroUsize::new(self.order.max(1)).expect("positive order");
        GaussLegendre::new(n).as_node_weight_pairs().to_vec()
    }
}

/// Island support at one output frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    /// `f1` sub-intervals with linear inner limits.
    pieces: Vec<(f64, f64)>,
    f2_band: (f64, f64),
    sum_range: (f64, f64),
}

impl Polygon {
    pub fn new(f1_band: (f64, f64), f2_band: (f64, f64), sum_range: (f64, f64)) -> Self {
        let (a1, b1) = f1_band;
        let (a2, b2) = f2_band;
        let (slo, shi) = sum_range;
        let mut cuts = vec![a1, b1];
        for c in [slo - a2, slo - b2, shi - a2, shi - b2] {
            if c > a1 && c < b1 {
                cuts.push(c);
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut poly = Self {
            pieces: Vec::new(),
            f2_band,
            sum_range,
        };
        poly.pieces = cuts
            .windows(2)
            .map(|w| (w[0], w[1]))
            .filter(|&(s, t)| {
                let (lo, hi) = poly.inner(0.5 * (s + t));
                t > s && hi > lo
            })
            .collect();
        poly
    }

    /// `f2` limits at `f1`.
    pub fn inner(&self, f1: f64) -> (f64, f64) {
        (
            self.f2_band.0.max(self.sum_range.0 - f1),
            self.f2_band.1.min(self.sum_range.1 - f1),
        )
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn pieces(&self) -> &[(f64, f64)] {
        &self.pieces
    }
}

/// Outcome of one adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Refinement {
    pub value: f64,
    pub levels: usize,
    pub evaluations: usize,
    /// Relative change between the last two levels.
    pub rel_change: f64,
    pub converged: bool,
}

fn composite_level<F>(poly: &Polygon, rule: &[(f64, f64)], panels: usize, g: &mut F) -> Result<(f64, usize)>
where
    F: FnMut(f64, f64) -> Result<f64>,
{
    let mut total = 0.0;
    let mut count = 0;
    for &(s, t) in poly.pieces() {
        let hx = (t - s) / panels as f64;
        for px in 0..panels {
            let x0 = s + px as f64 * hx;
            for &(nx, wx) in rule {
                let f1 = x0 + 0.5 * hx * (nx + 1.0);
                let (lo, hi) = poly.inner(f1);
                if hi <= lo {
                    continue;
                }
                let hy = (hi - lo) / panels as f64;
                let mut inner = 0.0;
                for py in 0..panels {
                    let y0 = lo + py as f64 * hy;
                    for &(ny, wy) in rule {
                        inner += wy * g(f1, y0 + 0.5 * hy * (ny + 1.0))?;
                        count += 1;
                    }
                }
                total += wx * 0.5 * hx * inner * 0.5 * hy;
            }
        }
    }
    Ok((total, count))
}

/// Doubles the panel count until two successive levels agree to `cfg.rel_tol`.
pub fn integrate_polygon<F>(poly: &Polygon, cfg: &QuadConfig, g: F) -> Result<Refinement>
where
    F: FnMut(f64, f64) -> Result<f64>,
{
    integrate_polygon_floor(poly, cfg, 0.0, g)
}

/// Single-panel estimate, the starting level of [`integrate_polygon`].
pub fn coarse_estimate<F>(poly: &Polygon, cfg: &QuadConfig, mut g: F) -> Result<f64>
where
    F: FnMut(f64, f64) -> Result<f64>,
{
    if poly.is_empty() {
        return Ok(0.0);
    }
    Ok(composite_level(poly, &cfg.rule(), 1, &mut g)?.0)
}

/// As [`integrate_polygon`], but a level change below `cfg.rel_tol · floor` also
/// counts as converged, so near-zero integrals stop at an absolute accuracy.
pub fn integrate_polygon_floor<F>(poly: &Polygon, cfg: &QuadConfig, floor: f64, mut g: F) -> Result<Refinement>
where
    F: FnMut(f64, f64) -> Result<f64>,
{
    let rule = cfg.rule();
    let mut out = Refinement {
        value: 0.0,
        levels: 0,
        evaluations: 0,
        rel_change: f64::INFINITY,
        converged: poly.is_empty(),
    };
    if poly.is_empty() {
        out.rel_change = 0.0;
        return Ok(out);
    }
    let mut prev = f64::NAN;
    for level in 0..cfg.max_levels {
        let (value, count) = composite_level(poly, &rule, 1 << level, &mut g)?;
        out.evaluations += count;
        out.levels = level + 1;
        out.value = value;
        if level > 0 {
            let diff = (value - prev).abs();
            out.rel_change = if value != 0.0 { diff / value.abs() } else if diff == 0.0 { 0.0 } else { f64::INFINITY };
            if out.rel_change <= cfg.rel_tol || diff <= cfg.rel_tol * floor {
                out.converged = true;
                break;
            }
        }
        prev = value;
    }
    Ok(out)
}
