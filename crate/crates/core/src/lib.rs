//! Nonlinear interference in Raman-amplified multi-span links.
//!
//! Channel power profiles come from the Raman ODE system, the per-span link
//! function integrand is fitted by a weighted polynomial so its z-integral is
//! closed-form, and the NLI PSD follows from a GN-model double integral
//! restricted to the integration islands of each channel under test.

// `!(x >= 0.0)` style checks reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod gn;
pub mod islands;
pub mod link;
pub mod pipeline;
pub mod poly;
pub mod raman;

pub use config::{validate_config, RunConfig};
pub use error::{Error, Result};
pub use gn::{
    gn_nli_power, gn_nli_power_with, gn_nli_psd, gn_nli_psd_no_raman, gn_nli_psd_with, ChannelNli,
    IslandContribution, NliReport, PsdResult, QuadConfig,
};
pub use islands::{enumerate_islands, write_islands_csv, Island};
pub use link::{
    end_of_span_factors, rho_at, AmpGain, Amplifier, AmplifierSpec, Channel, FiberSpan, Link,
    WdmGrid,
};
pub use poly::{
    fit_psi, fit_psi_at, link_function, link_function_no_raman, monomial_exp_integral, psi,
    span_integral_oracle, span_integral_poly, theta_exponent, vartheta, ExpKernel, FitConfig,
    PsiFit, ThetaExponent,
};
pub use pipeline::{run_pipeline, FitRecord, RunOutcome};
pub use raman::{
    raman_rhs, solve_components, solve_power_evolution, zeta, ComponentKind, ComponentProfiles,
    Direction, PowerProfileSet, RamanGainProfile, ShootingReport, SpectralComponent,
};
