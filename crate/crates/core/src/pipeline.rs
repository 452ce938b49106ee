//! End-to-end run: profiles, islands, fits, link function, GN integration, reports.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{validate_config, RunConfig};
use crate::error::{Error, Result};
use crate::gn::{gn_nli_power_with, gn_nli_psd, gn_nli_psd_no_raman, NliReport};
use crate::islands::{enumerate_islands, write_islands_csv, Island};
use crate::link::Link;
use crate::poly::{
    fit_channels, span_integral_oracle, span_integral_poly, FitConfig, PsiFit, ThetaExponent,
};
use crate::raman::fmt_f64;

/// One row of the fits dump: a span fit plus diagnostics at the island center.
#[derive(Debug, Clone, PartialEq)]
pub struct FitRecord {
    pub fit: PsiFit,
    /// `θ` at the representative frequencies.
    pub theta: Complex64,
    /// `|poly − oracle| / |oracle|`, in oracle mode.
    pub oracle_deviation: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub link: Link,
    pub islands: BTreeMap<usize, Vec<Island>>,
    pub fits: Vec<FitRecord>,
    pub report: NliReport,
    pub timings: Vec<(String, f64)>,
    pub files: Vec<PathBuf>,
}

/// Per-span fits keyed by canonical channel quadruple.
type FitTable = BTreeMap<[usize; 4], Vec<PsiFit>>;

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    status: &'a str,
    partial: bool,
    error: Option<String>,
    files: Vec<String>,
    knobs: Knobs,
    timings_s: BTreeMap<String, f64>,
    config: &'a RunConfig,
}

#[derive(Serialize)]
struct Knobs {
    dz_m: f64,
    n_psi: usize,
    m_w: f64,
    eps_theta: f64,
    series_terms: usize,
    quad_order: usize,
    quad_rel_tol: f64,
    quad_max_levels: usize,
    band_points: usize,
    threads: usize,
    oracle: bool,
    no_raman: bool,
}

struct Run<'a> {
    cfg: &'a RunConfig,
    out: &'a Path,
    files: Vec<PathBuf>,
    timings: Vec<(String, f64)>,
}

impl Run<'_> {
    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.out.join(name);
        let f = File::create(&path).map_err(|e| Error::from(e).context(format!("creating {}", path.display())))?;
        self.files.push(path);
        Ok(BufWriter::new(f))
    }

    fn timed<T>(&mut self, stage: &str, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        let t = Instant::now();
        let r = f(self);
        self.timings.push((stage.to_string(), t.elapsed().as_secs_f64()));
        r
    }

    fn write_manifest(&mut self, error: Option<&Error>) -> Result<()> {
        let cfg = self.cfg;
        let fit = cfg.fit_config();
        let quad = cfg.quad_config();
        let manifest = Manifest {
            tool: "lf-engine",
            version: env!("CARGO_PKG_VERSION"),
            status: if error.is_some() { "failed" } else { "ok" },
            partial: error.is_some(),
            error: error.map(ToString::to_string),
            files: self
                .files
                .iter()
                .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
                .collect(),
            knobs: Knobs {
                dz_m: cfg.solver.dz_m,
                n_psi: fit.degree,
                m_w: fit.weight_exponent,
                eps_theta: fit.kernel.eps_theta,
                series_terms: fit.kernel.series_terms,
                quad_order: quad.order,
                quad_rel_tol: quad.rel_tol,
                quad_max_levels: quad.max_levels,
                band_points: quad.band_points,
                threads: rayon::current_num_threads(),
                oracle: cfg.mode.oracle,
                no_raman: cfg.mode.no_raman,
            },
            timings_s: self.timings.iter().cloned().collect(),
            config: cfg,
        };
        let text = toml::to_string(&manifest).map_err(|e| Error::Contract(format!("manifest: {e}")))?;
        let path = self.out.join("manifest.toml");
        std::fs::write(&path, text).map_err(|e| Error::from(e).context(format!("writing {}", path.display())))?;
        Ok(())
    }
}

/// Runs the whole pipeline and writes every artifact into `out_dir`.
///
/// On failure a manifest flagged `partial = true` is still written next to
/// whatever files were produced.
pub fn run_pipeline(cfg: &RunConfig, out_dir: &Path) -> Result<RunOutcome> {
    let problems = validate_config(cfg);
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }
    std::fs::create_dir_all(out_dir)
        .map_err(|e| Error::from(e).context(format!("creating {}", out_dir.display())))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.mode.threads)
        .build()
        .map_err(|e| Error::Config(vec![format!("thread pool: {e}")]))?;
    pool.install(|| {
        let mut run = Run {
            cfg,
            out: out_dir,
            files: Vec::new(),
            timings: Vec::new(),
        };
        match execute(&mut run) {
            Ok((link, islands, fits, report)) => {
                run.write_manifest(None)?;
                Ok(RunOutcome {
                    link,
                    islands,
                    fits,
                    report,
                    timings: run.timings,
                    files: run.files,
                })
            }
            Err(e) => {
                // the manifest is best effort here; the run error is what matters
                let _ = run.write_manifest(Some(&e));
                Err(e)
            }
        }
    })
}

type Stages = (Link, BTreeMap<usize, Vec<Island>>, Vec<FitRecord>, NliReport);

fn execute(run: &mut Run) -> Result<Stages> {
    let cfg = run.cfg;
    let grid = cfg.build_grid()?;
    let cuts = cfg.cuts(grid.len())?;
    let stages = cfg.build_stages(grid.len())?;

    let link = run.timed("profiles", |_| Link::solve(grid, stages, cfg.solver.dz_m))?;
    for s in 0..link.span_count() {
        let w = run.create(&format!("profiles_span{s}.csv"))?;
        link.profiles(s).write_csv(w)?;
    }

    let islands: BTreeMap<usize, Vec<Island>> = run.timed("islands", |_| {
        cuts.iter()
            .map(|&c| Ok((c, enumerate_islands(link.grid(), c)?)))
            .collect::<Result<_>>()
    })?;
    let mut w = run.create("islands.csv")?;
    {
        let all: Vec<Island> = islands.values().flatten().cloned().collect();
        write_islands_csv(&all, &mut w)?;
    }
    drop(w);

    let fit_cfg = cfg.fit_config();
    let (fit_sets, records) = if cfg.mode.no_raman {
        (BTreeMap::new(), Vec::new())
    } else {
        run.timed("fits", |_| fit_islands(&link, &islands, &fit_cfg, cfg.mode.oracle))?
    };
    if !cfg.mode.no_raman {
        let w = run.create("fits.csv")?;
        write_fits_csv(&records, fit_cfg.degree, w)?;
    }

    let quad = cfg.quad_config();
    let report = run.timed("gn", |_| {
        let mut channels = Vec::new();
        for (&cut, isl) in &islands {
            let r = if cfg.mode.no_raman {
                gn_nli_power_with(&link, cut, &quad, |f| gn_nli_psd_no_raman(&link, f, isl, &quad))
            } else {
                let sets: Vec<Vec<PsiFit>> = isl
                    .iter()
                    .map(|i| fit_sets[&crate::poly::canonical(i.all_channels())].clone())
                    .collect();
                gn_nli_power_with(&link, cut, &quad, |f| {
                    gn_nli_psd(&link, f, isl, &sets, &quad, &fit_cfg.kernel)
                })
            };
            channels.push(r.map_err(|e| e.context(format!("CUT {cut}")))?);
        }
        Ok(NliReport { channels })
    })?;
    let w = run.create("nli.csv")?;
    report.write_csv(w)?;
    let summary = report.summary();
    let path = run.out.join("summary.txt");
    std::fs::write(&path, summary).map_err(|e| Error::from(e).context(format!("writing {}", path.display())))?;
    run.files.push(path);
    Ok((link, islands, records, report))
}

/// Fits every distinct channel quadruple once, in parallel, and reuses the
/// fits across islands and CUTs.
fn fit_islands(
    link: &Link,
    islands: &BTreeMap<usize, Vec<Island>>,
    cfg: &FitConfig,
    oracle: bool,
) -> Result<(FitTable, Vec<FitRecord>)> {
    let mut reps: BTreeMap<[usize; 4], &Island> = BTreeMap::new();
    for isl in islands.values().flatten() {
        reps.entry(crate::poly::canonical(isl.all_channels())).or_insert(isl);
    }
    let keys: Vec<([usize; 4], &Island)> = reps.into_iter().collect();
    let per_key: Vec<Vec<FitRecord>> = keys
        .par_iter()
        .map(|(key, isl)| {
            (0..link.span_count())
                .map(|s| fit_record(link, s, *key, isl, cfg, oracle).map_err(|e| {
                    e.context(format!("span {s}, island {}", isl.label()))
                }))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut sets = BTreeMap::new();
    let mut records = Vec::new();
    for ((key, _), recs) in keys.iter().zip(per_key) {
        sets.insert(*key, recs.iter().map(|r| r.fit.clone()).collect());
        records.extend(recs);
    }
    Ok((sets, records))
}

fn fit_record(link: &Link, s: usize, key: [usize; 4], isl: &Island, cfg: &FitConfig, oracle: bool) -> Result<FitRecord> {
    let fit = fit_channels(link, s, key, cfg)?;
    let [f1, f2, f3] = isl.representative;
    let theta = ThetaExponent::for_channels(link.span(s), key, f1, f2, f3).value;
    let oracle_deviation = if oracle {
        let poly = span_integral_poly(&fit, theta, &cfg.kernel);
        let reference = span_integral_oracle(link, s, f1, f2, f3)?;
        Some((poly - reference).norm() / reference.norm())
    } else {
        None
    };
    Ok(FitRecord {
        fit,
        theta,
        oracle_deviation,
    })
}

/// `i,j,k,l,span,residual,condition,theta_re,theta_im,h_0..,tau_0..,oracle_rel_dev`.
pub fn write_fits_csv<W: std::io::Write>(records: &[FitRecord], degree: usize, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["i", "j", "k", "l", "span", "residual", "condition", "theta_re", "theta_im"]
        .iter()
        .map(ToString::to_string)
        .collect();
    header.extend((0..=degree).map(|k| format!("h_{k}")));
    header.extend((0..=degree).map(|k| format!("tau_{k}")));
    header.push("oracle_rel_dev".into());
    w.write_record(&header)?;
    for r in records {
        let mut row: Vec<String> = r.fit.channels.iter().map(ToString::to_string).collect();
        row.push(r.fit.span.to_string());
        row.push(fmt_f64(r.fit.residual));
        row.push(fmt_f64(r.fit.condition));
        row.push(fmt_f64(r.theta.re));
        row.push(fmt_f64(r.theta.im));
        row.extend(r.fit.h.iter().map(|v| fmt_f64(*v)));
        row.extend(r.fit.tau.iter().map(|v| fmt_f64(*v)));
        row.push(r.oracle_deviation.map(fmt_f64).unwrap_or_default());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
