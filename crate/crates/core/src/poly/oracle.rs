//! Reference span integral by brute-force quadrature of `ϑ(z) e^{jΔβ z}`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::link::Link;

use super::{canonical, check_span};

/// Upper bound on trapezoid points before giving up.
pub const ORACLE_MAX_POINTS: usize = 1 << 24;

const ORACLE_REL_TOL: f64 = 1e-8;
/// Initial resolution in radians of phase per interval.
const PHASE_PER_INTERVAL: f64 = 0.05;

/// `∫₀ᴸ ϑ(z) e^{jΔβ z} dz` on span `s`, which equals `∫₀ᴸ Ψ e^{θz} dz`.
///
/// Trapezoid rule with interval halving until successive estimates agree to
/// `1e-8` relative; `ρ` is interpolated linearly between profile samples.
pub fn span_integral_oracle(link: &Link, s: usize, f1: f64, f2: f64, f3: f64) -> Result<Complex64> {
    check_span(link, s)?;
    let [i, j, k, l] = canonical(link.resolve(f1, f2, f3)?);
    let prof = link.profiles(s);
    let len = prof.length_m();
    let xi = link.span(s).phase_mismatch_rate(f1, f2, f3);
    let integrand = |z: f64| {
        let v = (prof.rho_at(i, z) * prof.rho_at(j, z) * prof.rho_at(k, z) / prof.rho_at(l, z)).sqrt();
        Complex64::from_polar(v, xi * z)
    };

    let by_phase = (xi.abs() * len / PHASE_PER_INTERVAL).ceil() as usize;
    let mut n = (prof.grid_len() - 1).max(by_phase).max(1);
    if n + 1 > ORACLE_MAX_POINTS {
        return Err(Error::OracleResolution {
            max_points: ORACLE_MAX_POINTS,
        });
    }
    let mut h = len / n as f64;
    let mut sum = (integrand(0.0) + integrand(len)) * 0.5;
    for p in 1..n {
        sum += integrand(p as f64 * h);
    }
    let mut estimate = sum * h;
    loop {
        if 2 * n + 1 > ORACLE_MAX_POINTS {
            return Err(Error::OracleResolution {
                max_points: ORACLE_MAX_POINTS,
            });
        }
        for p in 0..n {
            sum += integrand((2 * p + 1) as f64 * 0.5 * h);
        }
        n *= 2;
        h = len / n as f64;
        let next = sum * h;
        let change = (next - estimate).norm();
        estimate = next;
        if change <= ORACLE_REL_TOL * next.norm() {
            return Ok(next);
        }
    }
}
