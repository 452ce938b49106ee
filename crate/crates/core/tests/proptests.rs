mod common;

use num_complex::Complex64;
use proptest::prelude::*;

use common::*;
use lf_core::islands::enumerate_islands;
use lf_core::link::{Channel, WdmGrid};
use lf_core::poly::{fit_all_spans, link_function, weighted_poly_fit, ExpKernel, FitConfig};
use lf_core::raman::{zeta, RamanGainProfile};

fn gain_table() -> impl Strategy<Value = RamanGainProfile> {
    prop::collection::vec((0.1e12..3e12f64, 0.0..1e-3f64), 2..12).prop_map(|steps| {
        let mut off = vec![0.0];
        let mut g = vec![0.0];
        for (d, v) in steps {
            off.push(off.last().unwrap() + d);
            g.push(v);
        }
        RamanGainProfile::new(off, g).unwrap()
    })
}

/// Contiguous-or-gapped grids with 1..6 channels.
fn grid() -> impl Strategy<Value = WdmGrid> {
    prop::collection::vec((0.0..30e9f64, 10e9..60e9f64), 1..6).prop_map(|spec| {
        let mut edge = 193e12;
        let channels = spec
            .into_iter()
            .map(|(gap, width)| {
                edge += gap;
                let c = Channel::new(edge + 0.5 * width, width, 1e-3);
                edge += width;
                c
            })
            .collect();
        WdmGrid::new(channels).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gain_is_odd_in_offset(table in gain_table(), u in -40e12..40e12f64) {
        prop_assert_eq!(table.gain(-u), -table.gain(u));
        if u == 0.0 {
            prop_assert_eq!(table.gain(u), 0.0);
        }
    }

    #[test]
    fn zeta_is_one_below_identity_above(x in 1e-3..1e3f64) {
        let z = zeta(x).unwrap();
        if x > 1.0 { prop_assert_eq!(z, x) } else if x < 1.0 { prop_assert_eq!(z, 1.0) } else { prop_assert_eq!(z, 0.0) }
    }

    #[test]
    fn islands_are_symmetric_and_inside_bands(g in grid(), pick in 0usize..6) {
        let cut = pick % g.len();
        let isl = enumerate_islands(&g, cut).unwrap();
        prop_assert!(isl.iter().any(|x| x.channels == [cut, cut, cut]));
        for x in &isl {
            let [i, j, k] = x.channels;
            prop_assert!(isl.iter().any(|y| y.channels == [j, i, k]));
            let [f1, f2, f3] = x.representative;
            prop_assert_eq!(g.channel_at(f1), Some(i));
            prop_assert_eq!(g.channel_at(f2), Some(j));
            prop_assert_eq!(g.channel_at(f3), Some(k));
            prop_assert_eq!(g.channel_at(f1 + f2 - f3), Some(cut));
        }
    }

    #[test]
    fn kernel_is_finite_and_bounded(k in 0usize..=20, re in -300.0..300.0f64, im in -2000.0..2000.0f64) {
        let x = Complex64::new(re, im);
        let j = ExpKernel::default().unit(k, x);
        prop_assert!(j.re.is_finite() && j.im.is_finite());
        // |∫u^k e^{xu}| ≤ ∫ e^{Re x · u}
        let bound = if re.abs() < 1e-12 { 1.0 } else { re.exp_m1() / re };
        prop_assert!(j.norm() <= bound * (1.0 + 1e-10), "{} > {}", j.norm(), bound);
    }

    #[test]
    fn kernel_is_continuous_across_series_switch(k in 0usize..=20, arg in 0.0..std::f64::consts::TAU) {
        let kern = ExpKernel::default();
        let dir = Complex64::from_polar(1.0, arg);
        let below = kern.unit(k, dir * kern.eps_theta * (1.0 - 1e-12));
        let above = kern.unit(k, dir * kern.eps_theta * (1.0 + 1e-12));
        prop_assert!((below - above).norm() <= 1e-12 * above.norm());
    }

    #[test]
    fn weighted_fit_recovers_polynomials(
        coef in prop::collection::vec(-1.0..1.0f64, 1..=11),
        wscale in prop::collection::vec(0.1..10.0f64, 1..=4),
    ) {
        let n = 401;
        let u: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let y: Vec<f64> = u.iter().map(|x| coef.iter().rev().fold(0.0, |a, c| a * x + c)).collect();
        let w: Vec<f64> = u.iter().map(|x| wscale.iter().enumerate().map(|(p, s)| s * x.powi(p as i32)).sum()).collect();
        let fit = weighted_poly_fit(&u, &y, &w, 10).unwrap();
        for (k, c) in fit.coefficients.iter().enumerate() {
            prop_assert!((c - coef.get(k).copied().unwrap_or(0.0)).abs() < 1e-8);
        }
    }

    #[test]
    fn residual_never_rises_with_degree(seed in prop::collection::vec(-1.0..1.0f64, 8)) {
        let n = 301;
        let u: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let y: Vec<f64> = u.iter().map(|x| seed.iter().enumerate().map(|(m, a)| a * (m as f64 * 3.0 * x).cos()).sum()).collect();
        let w = vec![1.0; n];
        let mut prev = f64::INFINITY;
        for d in 0..=12 {
            let r = weighted_poly_fit(&u, &y, &w, d).unwrap().residual;
            prop_assert!(r <= prev * (1.0 + 1e-12) + 1e-28, "degree {}: {} > {}", d, r, prev);
            prev = r;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn link_function_is_symmetric_in_f1_f2(a in 0.0..1.0f64, b in 0.0..1.0f64, c in 0.0..1.0f64, pick in 0usize..1000) {
        thread_local! {
            static LINK: lf_core::link::Link = pumped_link(c_band(4, 1e-3), ALPHA, 0.3, 25.0);
        }
        LINK.with(|link| {
            let g = link.grid();
            let isl: Vec<_> = (0..g.len()).flat_map(|cut| enumerate_islands(g, cut).unwrap()).collect();
            let x = &isl[pick % isl.len()];
            let f1 = x.f1_range.0 + a * (x.f1_range.1 - x.f1_range.0);
            let f2 = x.f2_range.0 + b * (x.f2_range.1 - x.f2_range.0);
            let (ac, bc) = g.band(x.cut);
            let f3 = f1 + f2 - (ac + c * (bc - ac));
            if g.channel_at(f3) != Some(x.channels[2]) {
                return Ok(());
            }
            let ch = link.resolve(f1, f2, f3).unwrap();
            let fits = fit_all_spans(link, ch, &FitConfig::default()).unwrap();
            let kern = ExpKernel::default();
            let fwd = link_function(link, f1, f2, f3, &fits, &kern).unwrap();
            let rev = link_function(link, f2, f1, f3, &fits, &kern).unwrap();
            prop_assert_eq!(fwd, rev);
            Ok(())
        })?;
    }

    #[test]
    fn transparent_amplifiers_restore_launch_power(spans in 1usize..4, n in 1usize..5) {
        let link = raman_free_link(c_band(n, 1e-3), spans, 60e3, 50.0);
        for s in 0..spans {
            for k in 0..n {
                let net = link.amplifier(s).gain[k] * link.profiles(s).rho_end(k);
                prop_assert!((net - 1.0).abs() < 1e-14);
            }
        }
    }
}
