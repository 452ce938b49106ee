//! Link function through polynomial reduction of the span integrand.
//!
//! Per span, `∫₀ᴸ Ψ(z) e^{θz} dz` with `Ψ = ϑ e^{z(αi+αj+αk−αl)}` and
//! `ϑ = √(ρi ρj ρk / ρl)`. Replacing `Ψ` by a polynomial turns the integral
//! into a sum of monomial–exponential integrals with closed forms.

pub mod fit;
pub mod kernel;
pub(crate) mod link_function;
mod oracle;

use num_complex::Complex64;

use crate::error::Result;
use crate::link::{FiberSpan, Link};

pub use fit::{
    fit_all_spans, fit_channels, fit_psi, fit_psi_at, tau_coefficients, weighted_poly_fit,
    FitConfig, PsiFit, WeightedFit, MAX_FIT_CONDITION, MAX_FIT_DEGREE,
};
pub use kernel::{monomial_exp_integral, ExpKernel};
pub use link_function::{
    link_function, link_function_channels, link_function_no_raman, span_integral_poly,
    span_integral_tau_form,
};
pub use oracle::{span_integral_oracle, ORACLE_MAX_POINTS};

/// `[i, j, k, l]` with `i ≤ j`. `f1` and `f2` enter symmetrically, so every
/// quantity is computed in this order to make the swap bit-exact.
pub fn canonical(ch: [usize; 4]) -> [usize; 4] {
    let [i, j, k, l] = ch;
    [i.min(j), i.max(j), k, l]
}

/// `αi + αj + αk − αl`, the exponent that turns `ϑ` into `Ψ`.
fn loss_exponent(span: &FiberSpan, ch: [usize; 4]) -> f64 {
    let [i, j, k, l] = canonical(ch);
    let a = &span.alpha_per_m;
    a[i] + a[j] + a[k] - a[l]
}

/// The complex z-exponent `θ` of the span integrand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaExponent {
    pub value: Complex64,
}

impl ThetaExponent {
    /// `θ = −αi − αj − αk + αl + j·Δβ(f1, f2, f3)`.
    pub fn for_channels(span: &FiberSpan, ch: [usize; 4], f1: f64, f2: f64, f3: f64) -> Self {
        Self {
            value: Complex64::new(-loss_exponent(span, ch), span.phase_mismatch_rate(f1, f2, f3)),
        }
    }

    /// Phase-mismatch rate, the imaginary part.
    pub fn delta(&self) -> f64 {
        self.value.im
    }
}

/// `θ` on span `s` at `(f1, f2, f3)`.
pub fn theta_exponent(link: &Link, s: usize, f1: f64, f2: f64, f3: f64) -> Result<ThetaExponent> {
    check_span(link, s)?;
    let ch = link.resolve(f1, f2, f3)?;
    Ok(ThetaExponent::for_channels(link.span(s), ch, f1, f2, f3))
}

pub(crate) fn check_span(link: &Link, s: usize) -> Result<()> {
    if s >= link.span_count() {
        return Err(crate::error::Error::Contract(format!(
            "span index {s} out of range (link has {} spans)",
            link.span_count()
        )));
    }
    Ok(())
}

/// `ϑ(z)` on span `s` at `(f1, f2, f3)`, from interpolated profiles.
pub fn vartheta(link: &Link, s: usize, z_m: f64, f1: f64, f2: f64, f3: f64) -> Result<f64> {
    let r = |f| crate::link::rho_at(link, s, z_m, f);
    Ok((r(f1)? * r(f2)? * r(f3)? / r(f1 + f2 - f3)?).sqrt())
}

/// `Ψ(z) = ϑ(z) e^{z(αi+αj+αk−αl)}`.
pub fn psi(link: &Link, s: usize, z_m: f64, f1: f64, f2: f64, f3: f64) -> Result<f64> {
    let ch = link.resolve(f1, f2, f3)?;
    Ok(vartheta(link, s, z_m, f1, f2, f3)? * (z_m * loss_exponent(link.span(s), ch)).exp())
}

/// `ϑ` and `Ψ` on the profile grid of span `s`, with `u = z/L`.
pub(crate) struct IntegrandSamples {
    pub u: Vec<f64>,
    pub vartheta: Vec<f64>,
    pub psi: Vec<f64>,
}

pub(crate) fn sample_integrand(link: &Link, s: usize, ch: [usize; 4]) -> IntegrandSamples {
    let [i, j, k, l] = canonical(ch);
    let prof = link.profiles(s);
    let rate = loss_exponent(link.span(s), ch);
    let (ri, rj, rk, rl) = (prof.rho(i), prof.rho(j), prof.rho(k), prof.rho(l));
    let n = prof.grid_len();
    let len = prof.length_m();
    let mut out = IntegrandSamples {
        u: Vec::with_capacity(n),
        vartheta: Vec::with_capacity(n),
        psi: Vec::with_capacity(n),
    };
    for p in 0..n {
        let z = prof.z_at(p);
        let v = (ri[p] * rj[p] * rk[p] / rl[p]).sqrt();
        out.u.push(z / len);
        out.vartheta.push(v);
        out.psi.push(v * (z * rate).exp());
    }
    out
}
