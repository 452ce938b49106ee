use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::link::Link;

use super::fit::PsiFit;
use super::kernel::{expm1, ExpKernel};
use super::{canonical, ThetaExponent};

/// `∫₀ᴸ Ψ e^{θz} dz` with `Ψ` replaced by its fit: `L Σ h_k J_k(θL)`.
pub fn span_integral_poly(fit: &PsiFit, theta: Complex64, kernel: &ExpKernel) -> Complex64 {
    let l = fit.length_m;
    let j = kernel.unit_all(fit.degree(), theta * l);
    let sum: Complex64 = fit.h.iter().zip(&j).map(|(h, jk)| jk * *h).sum();
    sum * l
}

/// The same integral written with `τ`:
/// `L Σ_m [e^{θL} τ_m − (−1)^m m! h_m] / (θL)^{m+1}`.
///
/// Only usable well away from `θ = 0`.
pub fn span_integral_tau_form(fit: &PsiFit, theta: Complex64) -> Complex64 {
    let l = fit.length_m;
    let x = theta * l;
    let ex = x.exp();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut fact = 1.0;
    let mut xp = x;
    for (m, (tau, h)) in fit.tau.iter().zip(&fit.h).enumerate() {
        if m > 0 {
            fact *= m as f64;
            xp *= x;
        }
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        sum += (ex * *tau - sign * fact * h) / xp;
    }
    sum * l
}

/// Phase picked up before span `s`: amplifier phases plus the dispersion of
/// earlier fiber spans and DCUs.
fn accumulated_phase(link: &Link, s: usize, ch: [usize; 4], f1: f64, f2: f64, f3: f64) -> f64 {
    let [i, j, k, l] = canonical(ch);
    let cross = (f1 - f3) * (f2 - f3);
    let mut amp = 0.0;
    let mut disp = 0.0;
    for p in 0..s {
        let t = &link.amplifier(p).phase_rad;
        amp += t[i] + t[j] - t[k] - t[l];
        let span = link.span(p);
        disp += link.amplifier(p).beta_dcu_s2
            + span.length_m
                * (span.beta2_s2_per_m
                    + PI * span.beta3_s3_per_m * (f1 + f2 - 2.0 * span.dispersion_ref_hz));
    }
    amp + 4.0 * PI * PI * cross * disp
}

pub(crate) fn check_fits(link: &Link, ch: [usize; 4], fits: &[PsiFit]) -> Result<()> {
    if fits.len() != link.span_count() {
        return Err(Error::Contract(format!(
            "{} fits supplied for a {}-span link",
            fits.len(),
            link.span_count()
        )));
    }
    let want = canonical(ch);
    for (s, fit) in fits.iter().enumerate() {
        if fit.span != s || fit.channels != want {
            return Err(Error::Contract(format!(
                "fit {s} is for span {} channels {:?}, needed span {s} channels {:?}",
                fit.span, fit.channels, want
            )));
        }
    }
    Ok(())
}

/// Link function at `(f1, f2, f3)` given one fit per span.
///
/// The constant `−j` prefactor is dropped; only `|LK|²` is used downstream.
pub fn link_function(
    link: &Link,
    f1: f64,
    f2: f64,
    f3: f64,
    fits: &[PsiFit],
    kernel: &ExpKernel,
) -> Result<Complex64> {
    let ch = link.resolve(f1, f2, f3)?;
    check_fits(link, ch, fits)?;
    Ok(link_function_channels(link, ch, f1, f2, f3, fits, kernel))
}

/// [`link_function`] with channels already resolved and fits already checked.
pub fn link_function_channels(
    link: &Link,
    ch: [usize; 4],
    f1: f64,
    f2: f64,
    f3: f64,
    fits: &[PsiFit],
    kernel: &ExpKernel,
) -> Complex64 {
    let mut total = Complex64::new(0.0, 0.0);
    for (s, fit) in fits.iter().enumerate() {
        let span = link.span(s);
        let theta = ThetaExponent::for_channels(span, ch, f1, f2, f3);
        let integral = span_integral_poly(fit, theta.value, kernel);
        let scale = span.gamma_per_w_per_m * link.end_factors_for_channels(s, ch);
        let phase = Complex64::from_polar(1.0, accumulated_phase(link, s, ch, f1, f2, f3));
        total += integral * phase * scale;
    }
    total
}

/// Closed-form link function of a Raman-free link, with exact exponential
/// profiles `ρ = e^{−2αz}`.
pub fn link_function_no_raman(link: &Link, f1: f64, f2: f64, f3: f64) -> Result<Complex64> {
    if !link.is_raman_free() {
        return Err(Error::Contract(
            "closed-form link function needs a Raman-free link".into(),
        ));
    }
    let ch = link.resolve(f1, f2, f3)?;
    let [i, j, k, l] = canonical(ch);
    let ns = link.span_count();
    // ρ(L) and Γ straight from the loss, not from the sampled profiles
    let end = |p: usize, c: usize| {
        let span = link.span(p);
        link.amplifier(p).gain[c] * (-2.0 * span.alpha_per_m[c] * span.length_m).exp()
    };
    let mut total = Complex64::new(0.0, 0.0);
    for s in 0..ns {
        let span = link.span(s);
        let len = span.length_m;
        let theta = ThetaExponent::for_channels(span, ch, f1, f2, f3);
        let d = -theta.value;
        let integral = if d == Complex64::new(0.0, 0.0) {
            Complex64::new(len, 0.0)
        } else {
            -expm1(-d * len) / d
        };
        let mut factor = 1.0;
        for p in s..ns {
            factor *= end(p, l).sqrt();
        }
        for p in 0..s {
            factor *= (end(p, i) * end(p, j) * end(p, k)).sqrt();
        }
        let phase = Complex64::from_polar(1.0, accumulated_phase(link, s, ch, f1, f2, f3));
        total += integral * phase * (span.gamma_per_w_per_m * factor);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::{AmplifierSpec, FiberSpan, WdmGrid};
    use crate::poly::{fit_all_spans, FitConfig};

    fn link(spans: usize) -> Link {
        let grid = WdmGrid::uniform(193e12, 50e9, 3, 32e9, 1e-3).unwrap();
        let span = FiberSpan::standard(60e3, 1.3e-3, 2.303e-5, -2.17e-26, 193.05e12, 3);
        let stages = (0..spans).map(|_| (span.clone(), AmplifierSpec::transparent())).collect();
        Link::solve(grid, stages, 50.0).unwrap()
    }

    #[test]
    fn tau_form_agrees_with_kernel_form() {
        let l = link(1);
        let fits = fit_all_spans(&l, [0, 2, 1, 1], &FitConfig::default()).unwrap();
        let theta = ThetaExponent::for_channels(l.span(0), [0, 2, 1, 1], 193.0e12, 193.1e12, 193.05e12);
        let a = span_integral_poly(&fits[0], theta.value, &ExpKernel::default());
        let b = span_integral_tau_form(&fits[0], theta.value);
        assert!((a - b).norm() < 1e-9 * a.norm(), "{a} {b}");
    }

    #[test]
    fn poly_matches_closed_form_without_raman() {
        let l = link(3);
        let (f1, f2, f3) = (193.01e12, 193.09e12, 193.04e12);
        let ch = l.resolve(f1, f2, f3).unwrap();
        let fits = fit_all_spans(&l, ch, &FitConfig::default()).unwrap();
        let a = link_function(&l, f1, f2, f3, &fits, &ExpKernel::default()).unwrap();
        let b = link_function_no_raman(&l, f1, f2, f3).unwrap();
        assert!((a - b).norm() < 1e-8 * b.norm(), "{a} {b}");
    }

    #[test]
    fn swapping_f1_f2_is_exact() {
        let l = link(2);
        let (f1, f2, f3) = (193.01e12, 193.09e12, 193.04e12);
        let ch = l.resolve(f1, f2, f3).unwrap();
        let fits = fit_all_spans(&l, ch, &FitConfig::default()).unwrap();
        let k = ExpKernel::default();
        let a = link_function(&l, f1, f2, f3, &fits, &k).unwrap();
        let b = link_function(&l, f2, f1, f3, &fits, &k).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mismatched_fits_are_rejected() {
        let l = link(2);
        let fits = fit_all_spans(&l, [0, 0, 0, 0], &FitConfig::default()).unwrap();
        let err = link_function(&l, 193.05e12, 193.05e12, 193.05e12, &fits, &ExpKernel::default())
            .unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
        let err = link_function(&l, 193.0e12, 193.0e12, 193.0e12, &fits[..1], &ExpKernel::default())
            .unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn single_lossless_dispersionless_span_is_gamma_length() {
        let grid = WdmGrid::uniform(193e12, 50e9, 1, 32e9, 1e-3).unwrap();
        let span = FiberSpan::standard(1e3, 2.0e-3, 0.0, 0.0, 193e12, 1);
        let l = Link::solve(grid, vec![(span, AmplifierSpec::transparent())], 10.0).unwrap();
        let v = link_function_no_raman(&l, 193e12, 193e12, 193e12).unwrap();
        assert!((v - Complex64::new(2.0, 0.0)).norm() < 1e-12);
    }
}
