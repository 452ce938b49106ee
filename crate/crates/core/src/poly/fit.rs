//! Weighted least-squares polynomial fit of the span integrand `Ψ(z)`.
//!
//! The fit runs in `u = z/L ∈ [0, 1]` on the profile grid with trapezoid
//! quadrature weights. The design matrix is built in the shifted Legendre basis
//! and solved by QR, and the result is converted to monomial coefficients
//! afterwards. The condition estimate is that of the triangular factor.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::islands::Island;
use crate::link::Link;

use super::kernel::ExpKernel;
use super::{canonical, sample_integrand};

/// Fits whose triangular factor is worse conditioned than this are rejected.
pub const MAX_FIT_CONDITION: f64 = 1e12;
/// Largest supported polynomial degree.
pub const MAX_FIT_DEGREE: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    /// Polynomial degree `N_Ψ`.
    pub degree: usize,
    /// Exponent `m` of the weight `ϑ^m / Ψ²`.
    pub weight_exponent: f64,
    pub kernel: ExpKernel,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            degree: 10,
            weight_exponent: 2.0,
            kernel: ExpKernel::default(),
        }
    }
}

impl FitConfig {
    pub fn diagnostics(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.degree > MAX_FIT_DEGREE {
            out.push(format!(
                "fit degree {} exceeds the supported maximum {MAX_FIT_DEGREE}",
                self.degree
            ));
        }
        if !self.weight_exponent.is_finite() {
            out.push("fit weight exponent must be finite".into());
        }
        if !(self.kernel.eps_theta.is_finite() && self.kernel.eps_theta > 0.0) {
            out.push("series switch threshold must be positive".into());
        }
        if self.kernel.series_terms == 0 {
            out.push("series term count must be at least 1".into());
        }
        out
    }
}

/// Polynomial model of `Ψ` on one span for one channel quadruple.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiFit {
    pub span: usize,
    /// `[i, j, k, l]` with `i ≤ j`.
    pub channels: [usize; 4],
    pub length_m: f64,
    /// Monomial coefficients in `u = z/L`: `Ψ ≈ Σ h_k u^k`.
    pub h: Vec<f64>,
    /// `τ_m = Σ_{k≥m} (−1)^m h_k k!/(k−m)!`, also in `u`.
    pub tau: Vec<f64>,
    /// Weighted RMS misfit over the grid.
    pub residual: f64,
    pub condition: f64,
}

impl PsiFit {
    pub fn degree(&self) -> usize {
        self.h.len() - 1
    }

    /// Fitted `Ψ(z)`.
    pub fn eval(&self, z_m: f64) -> f64 {
        let u = z_m / self.length_m;
        self.h.iter().rev().fold(0.0, |acc, c| acc * u + c)
    }
}

/// Result of [`weighted_poly_fit`].
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedFit {
    /// Monomial coefficients, constant term first.
    pub coefficients: Vec<f64>,
    pub residual: f64,
    pub condition: f64,
}

/// `P_m(2u − 1)` for `m = 0..=degree`.
fn shifted_legendre(u: f64, degree: usize, out: &mut [f64]) {
    let t = 2.0 * u - 1.0;
    out[0] = 1.0;
    if degree >= 1 {
        out[1] = t;
    }
    for m in 1..degree {
        out[m + 1] = ((2 * m + 1) as f64 * t * out[m] - m as f64 * out[m - 1]) / (m + 1) as f64;
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Monomial coefficients of `Σ c_m P_m(2u − 1)`.
fn legendre_to_monomial(c: &[f64]) -> Vec<f64> {
    let mut h = vec![0.0; c.len()];
    for (m, cm) in c.iter().enumerate() {
        for (k, hk) in h.iter_mut().enumerate().take(m + 1) {
            let sign = if (m + k) % 2 == 0 { 1.0 } else { -1.0 };
            *hk += cm * sign * binomial(m, k) * binomial(m + k, k);
        }
    }
    h
}

/// Trapezoid weights for a sorted abscissa.
fn trapezoid_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            let left = if i > 0 { x[i] - x[i - 1] } else { 0.0 };
            let right = if i + 1 < n { x[i + 1] - x[i] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}

/// Minimizes `Σ c_n w_n (y_n − p(u_n))²` over polynomials `p` of `degree`,
/// `c_n` being trapezoid weights on `u`.
pub fn weighted_poly_fit(u: &[f64], y: &[f64], w: &[f64], degree: usize) -> Result<WeightedFit> {
    if u.len() != y.len() || u.len() != w.len() {
        return Err(Error::Contract("fit samples and weights differ in length".into()));
    }
    let n = u.len();
    let cols = degree + 1;
    if n < cols {
        return Err(Error::FitDegenerate {
            degree,
            condition: f64::INFINITY,
        });
    }
    let c = trapezoid_weights(u);
    let cw: Vec<f64> = c.iter().zip(w).map(|(a, b)| a * b).collect();
    if cw.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::Domain("fit weights must be finite and non-negative".into()));
    }
    let mut basis = vec![0.0; cols];
    let mut a = DMatrix::<f64>::zeros(n, cols);
    let mut b = DVector::<f64>::zeros(n);
    for r in 0..n {
        let s = cw[r].sqrt();
        shifted_legendre(u[r], degree, &mut basis);
        for m in 0..cols {
            a[(r, m)] = s * basis[m];
        }
        b[r] = s * y[r];
    }
    let (q, rf) = a.qr().unpack();
    let sv = rf.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= MAX_FIT_CONDITION) {
        return Err(Error::FitDegenerate { degree, condition });
    }
    let rhs = q.transpose() * b;
    let legendre = rf
        .solve_upper_triangular(&rhs)
        .ok_or(Error::FitDegenerate { degree, condition })?;

    let mut num = 0.0;
    let mut den = 0.0;
    for r in 0..n {
        shifted_legendre(u[r], degree, &mut basis);
        let p: f64 = basis.iter().zip(legendre.iter()).map(|(x, c)| x * c).sum();
        num += cw[r] * (y[r] - p).powi(2);
        den += cw[r];
    }
    let residual = if den > 0.0 { (num / den).sqrt() } else { 0.0 };
    Ok(WeightedFit {
        coefficients: legendre_to_monomial(legendre.as_slice()),
        residual,
        condition,
    })
}

/// `τ_m` from monomial coefficients on the unit interval.
pub fn tau_coefficients(h: &[f64]) -> Vec<f64> {
    (0..h.len())
        .map(|m| {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            let mut acc = 0.0;
            for (k, hk) in h.iter().enumerate().skip(m) {
                // k!/(k−m)!
                let falling = ((k - m + 1)..=k).fold(1.0, |a, t| a * t as f64);
                acc += hk * falling;
            }
            sign * acc
        })
        .collect()
}

/// Fits `Ψ` on span `s` for channel quadruple `[i, j, k, l]`.
pub fn fit_channels(link: &Link, s: usize, channels: [usize; 4], cfg: &FitConfig) -> Result<PsiFit> {
    let problems = cfg.diagnostics();
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }
    if s >= link.span_count() {
        return Err(Error::Contract(format!("span index {s} out of range")));
    }
    let channels = canonical(channels);
    let samples = sample_integrand(link, s, channels);
    let weight: Vec<f64> = samples
        .vartheta
        .iter()
        .zip(&samples.psi)
        .map(|(v, p)| v.powf(cfg.weight_exponent) / (p * p))
        .collect();
    let fit = weighted_poly_fit(&samples.u, &samples.psi, &weight, cfg.degree)?;
    Ok(PsiFit {
        span: s,
        channels,
        length_m: link.span(s).length_m,
        tau: tau_coefficients(&fit.coefficients),
        h: fit.coefficients,
        residual: fit.residual,
        condition: fit.condition,
    })
}

/// Fit for the island's channel quadruple.
pub fn fit_psi(link: &Link, s: usize, island: &Island, cfg: &FitConfig) -> Result<PsiFit> {
    fit_channels(link, s, island.all_channels(), cfg)
}

/// Fit for the channels holding `(f1, f2, f3)`.
pub fn fit_psi_at(link: &Link, s: usize, f1: f64, f2: f64, f3: f64, cfg: &FitConfig) -> Result<PsiFit> {
    fit_channels(link, s, link.resolve(f1, f2, f3)?, cfg)
}

/// One fit per span.
pub fn fit_all_spans(link: &Link, channels: [usize; 4], cfg: &FitConfig) -> Result<Vec<PsiFit>> {
    (0..link.span_count())
        .map(|s| fit_channels(link, s, channels, cfg).map_err(|e| e.context(format!("span {s}"))))
        .collect()
}
