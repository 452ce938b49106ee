//! TOML run configuration. Every key carries its SI unit in the name.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gn::QuadConfig;
use crate::link::{AmpGain, AmplifierSpec, Channel, FiberSpan, WdmGrid};
use crate::poly::{ExpKernel, FitConfig};
use crate::raman::{Direction, RamanGainProfile, SpectralComponent};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub fit: FitSection,
    #[serde(default)]
    pub quadrature: QuadSection,
    pub wdm: WdmSection,
    /// Named gain tables referenced by spans.
    #[serde(default)]
    pub raman_tables: BTreeMap<String, GainTable>,
    pub spans: Vec<SpanSection>,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub mode: ModeSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub dz_m: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self { dz_m: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSection {
    pub n_psi: usize,
    pub m_w: f64,
    pub eps_theta: f64,
    pub series_terms: usize,
}

impl Default for FitSection {
    fn default() -> Self {
        let d = FitConfig::default();
        Self {
            n_psi: d.degree,
            m_w: d.weight_exponent,
            eps_theta: d.kernel.eps_theta,
            series_terms: d.kernel.series_terms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadSection {
    pub order: usize,
    pub rel_tol: f64,
    pub max_levels: usize,
    pub band_points: usize,
}

impl Default for QuadSection {
    fn default() -> Self {
        let d = QuadConfig::default();
        Self {
            order: d.order,
            rel_tol: d.rel_tol,
            max_levels: d.max_levels,
            band_points: d.band_points,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WdmSection {
    #[serde(default)]
    pub cut: CutSelection,
    #[serde(default)]
    pub channels: Vec<ChannelEntry>,
    pub uniform: Option<UniformGrid>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelEntry {
    pub center_hz: f64,
    pub symbol_rate_baud: f64,
    pub launch_power_w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniformGrid {
    pub first_center_hz: f64,
    pub spacing_hz: f64,
    pub count: usize,
    pub symbol_rate_baud: f64,
    pub launch_power_w: f64,
}

/// `"all"`, one index, or a list of indices (0-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CutSelection {
    Keyword(String),
    One(usize),
    Many(Vec<usize>),
}

impl Default for CutSelection {
    fn default() -> Self {
        CutSelection::Keyword("all".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainTable {
    pub offsets_hz: Vec<f64>,
    pub gain_per_w_per_m: Vec<f64>,
}

/// A scalar applied to every channel, or one value per channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerChannel {
    Flat(f64),
    List(Vec<f64>),
}

impl PerChannel {
    fn expand(&self, n: usize) -> Option<Vec<f64>> {
        match self {
            PerChannel::Flat(v) => Some(vec![*v; n]),
            PerChannel::List(v) if v.len() == n => Some(v.clone()),
            PerChannel::List(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GainSetting {
    /// `"transparent"`: gain restores each channel's span input power.
    Keyword(String),
    Value(PerChannel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpanSection {
    /// Number of identical consecutive copies of this span.
    #[serde(default = "one")]
    pub repeat: usize,
    pub length_m: f64,
    pub gamma_per_w_per_m: f64,
    pub alpha_per_m: PerChannel,
    #[serde(default)]
    pub beta0_per_m: f64,
    #[serde(default)]
    pub beta1_s_per_m: f64,
    pub beta2_s2_per_m: f64,
    #[serde(default)]
    pub beta3_s3_per_m: f64,
    pub dispersion_ref_hz: f64,
    /// Name of an entry in `raman_tables`; omitted means no Raman effect.
    pub raman_gain: Option<String>,
    #[serde(default)]
    pub pumps: Vec<PumpEntry>,
    #[serde(default)]
    pub amplifier: AmplifierSection,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpEntry {
    pub frequency_hz: f64,
    /// Launch power at z = 0 (forward) or boundary power at z = L (backward).
    pub power_w: Option<f64>,
    pub alpha_per_m: f64,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplifierSection {
    pub gain: GainSetting,
    #[serde(default)]
    pub phase_rad: Option<PerChannel>,
    #[serde(default)]
    pub beta_dcu_s2: f64,
}

impl Default for AmplifierSection {
    fn default() -> Self {
        Self {
            gain: GainSetting::Keyword("transparent".into()),
            phase_rad: None,
            beta_dcu_s2: 0.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModeSection {
    /// Compare every polynomial span integral against brute-force quadrature.
    pub oracle: bool,
    /// Use the closed-form Raman-free link function instead of fits.
    pub no_raman: bool,
    /// Worker threads; 0 means all hardware threads.
    pub threads: usize,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(vec![e.to_string()]))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::from(e).context(format!("reading {}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| e.context(format!("parsing {}", path.display())))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn fit_config(&self) -> FitConfig {
        FitConfig {
            degree: self.fit.n_psi,
            weight_exponent: self.fit.m_w,
            kernel: ExpKernel {
                eps_theta: self.fit.eps_theta,
                series_terms: self.fit.series_terms,
            },
        }
    }

    pub fn quad_config(&self) -> QuadConfig {
        QuadConfig {
            order: self.quadrature.order,
            rel_tol: self.quadrature.rel_tol,
            max_levels: self.quadrature.max_levels,
            band_points: self.quadrature.band_points,
        }
    }

    fn channel_list(&self) -> Vec<Channel> {
        let mut out: Vec<Channel> = self
            .wdm
            .channels
            .iter()
            .map(|c| Channel::new(c.center_hz, c.symbol_rate_baud, c.launch_power_w))
            .collect();
        if let Some(u) = &self.wdm.uniform {
            out.extend((0..u.count).map(|k| {
                Channel::new(
                    u.first_center_hz + k as f64 * u.spacing_hz,
                    u.symbol_rate_baud,
                    u.launch_power_w,
                )
            }));
        }
        out
    }

    pub fn build_grid(&self) -> Result<WdmGrid> {
        WdmGrid::new(self.channel_list())
    }

    /// Channels under test, in ascending order.
    pub fn cuts(&self, channels: usize) -> Result<Vec<usize>> {
        let list = match &self.wdm.cut {
            CutSelection::Keyword(k) if k == "all" => (0..channels).collect(),
            CutSelection::Keyword(k) => {
                return Err(Error::Config(vec![format!(
                    "wdm.cut must be \"all\", an index or a list of indices, got \"{k}\""
                )]))
            }
            CutSelection::One(k) => vec![*k],
            CutSelection::Many(v) => {
                let mut v = v.clone();
                v.sort_unstable();
                v.dedup();
                v
            }
        };
        if let Some(bad) = list.iter().find(|k| **k >= channels) {
            return Err(Error::Config(vec![format!(
                "wdm.cut index {bad} out of range for {channels} channels"
            )]));
        }
        Ok(list)
    }

    fn build_span(&self, sec: &SpanSection, n: usize, problems: &mut Vec<String>, tag: &str) -> Option<(FiberSpan, AmplifierSpec)> {
        let alpha = sec.alpha_per_m.expand(n);
        if alpha.is_none() {
            problems.push(format!("{tag}: alpha_per_m list must have one value per channel ({n})"));
        }
        let raman = match &sec.raman_gain {
            None => Some(RamanGainProfile::zero()),
            Some(name) => match self.raman_tables.get(name) {
                None => {
                    problems.push(format!("{tag}: unknown raman_gain table \"{name}\""));
                    None
                }
                Some(t) => match RamanGainProfile::new(t.offsets_hz.clone(), t.gain_per_w_per_m.clone()) {
                    Ok(p) => Some(p),
                    Err(e) => {
                        problems.push(format!("raman_tables.{name}: {e}"));
                        None
                    }
                },
            },
        };
        let mut pumps = Vec::new();
        for (p, pump) in sec.pumps.iter().enumerate() {
            match pump.power_w {
                None => {
                    let what = match pump.direction {
                        Direction::Backward => {
                            "backward pump needs power_w, its boundary power at z = L required by the shooting solver"
                        }
                        Direction::Forward => "forward pump needs power_w, its launch power at z = 0",
                    };
                    problems.push(format!("{tag} pump {p}: {what}"));
                }
                Some(w) => {
                    let c = SpectralComponent::pump(pump.frequency_hz, w, pump.alpha_per_m, pump.direction);
                    if !(c.frequency_hz.is_finite() && c.frequency_hz > 0.0) {
                        problems.push(format!("{tag} pump {p}: frequency must be positive"));
                    }
                    if !(w.is_finite() && w >= 0.0) {
                        problems.push(format!("{tag} pump {p}: power must be non-negative"));
                    }
                    if !(pump.alpha_per_m.is_finite() && pump.alpha_per_m >= 0.0) {
                        problems.push(format!("{tag} pump {p}: loss must be non-negative"));
                    }
                    pumps.push(c);
                }
            }
        }
        if !pumps.is_empty() && sec.raman_gain.is_none() {
            problems.push(format!("{tag}: pumps need a raman_gain table to have any effect"));
        }
        let gain = match &sec.amplifier.gain {
            GainSetting::Keyword(k) if k == "transparent" => Some(AmpGain::Transparent),
            GainSetting::Keyword(k) => {
                problems.push(format!("{tag}: amplifier gain must be \"transparent\", a number or a list, got \"{k}\""));
                None
            }
            GainSetting::Value(v) => match v.expand(n) {
                Some(g) => Some(AmpGain::PerChannel(g)),
                None => {
                    problems.push(format!("{tag}: amplifier gain list must have one value per channel ({n})"));
                    None
                }
            },
        };
        let phase = match &sec.amplifier.phase_rad {
            None => Some(Vec::new()),
            Some(p) => {
                let v = p.expand(n);
                if v.is_none() {
                    problems.push(format!("{tag}: amplifier phase_rad list must have one value per channel ({n})"));
                }
                v
            }
        };
        let span = FiberSpan {
            length_m: sec.length_m,
            gamma_per_w_per_m: sec.gamma_per_w_per_m,
            alpha_per_m: alpha?,
            beta0_per_m: sec.beta0_per_m,
            beta1_s_per_m: sec.beta1_s_per_m,
            beta2_s2_per_m: sec.beta2_s2_per_m,
            beta3_s3_per_m: sec.beta3_s3_per_m,
            dispersion_ref_hz: sec.dispersion_ref_hz,
            raman: raman?,
            pumps,
        };
        problems.extend(span.diagnostics(n).into_iter().map(|p| format!("{tag}: {p}")));
        if let Some(AmpGain::PerChannel(g)) = &gain {
            if g.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                problems.push(format!("{tag}: amplifier gain must be positive"));
            }
        }
        if !sec.amplifier.beta_dcu_s2.is_finite() {
            problems.push(format!("{tag}: beta_dcu_s2 must be finite"));
        }
        Some((
            span,
            AmplifierSpec {
                gain: gain?,
                phase_rad: phase?,
                beta_dcu_s2: sec.amplifier.beta_dcu_s2,
            },
        ))
    }

    /// Spans with `repeat` expanded, plus every problem found on the way.
    fn stages_and_problems(&self, n: usize) -> (Vec<(FiberSpan, AmplifierSpec)>, Vec<String>) {
        let mut problems = Vec::new();
        let mut out = Vec::new();
        if self.spans.is_empty() {
            problems.push("at least one [[spans]] entry is required".into());
        }
        for (e, sec) in self.spans.iter().enumerate() {
            let tag = format!("spans[{e}]");
            if sec.repeat == 0 {
                problems.push(format!("{tag}: repeat must be at least 1"));
            }
            if let Some(stage) = self.build_span(sec, n, &mut problems, &tag) {
                for _ in 0..sec.repeat {
                    out.push(stage.clone());
                }
            }
        }
        (out, problems)
    }

    pub fn build_stages(&self, channels: usize) -> Result<Vec<(FiberSpan, AmplifierSpec)>> {
        let (stages, problems) = self.stages_and_problems(channels);
        if problems.is_empty() {
            Ok(stages)
        } else {
            Err(Error::Config(problems))
        }
    }
}

/// Every problem with `cfg`; empty when it is runnable.
pub fn validate_config(cfg: &RunConfig) -> Vec<String> {
    let mut out = Vec::new();
    let channels = cfg.channel_list();
    if !cfg.wdm.channels.is_empty() && cfg.wdm.uniform.is_some() {
        out.push("wdm: give either [[wdm.channels]] or [wdm.uniform], not both".into());
    }
    out.extend(WdmGrid::diagnostics(&channels));
    let n = channels.len();
    if n > 0 {
        if let Err(Error::Config(p)) = cfg.cuts(n) {
            out.extend(p);
        }
    }
    out.extend(cfg.stages_and_problems(n).1);
    if !(cfg.solver.dz_m.is_finite() && cfg.solver.dz_m > 0.0) {
        out.push(format!("solver.dz_m must be positive, got {}", cfg.solver.dz_m));
    }
    for s in &cfg.spans {
        if cfg.solver.dz_m > s.length_m && s.length_m > 0.0 {
            out.push(format!(
                "solver.dz_m = {} exceeds span length {} m",
                cfg.solver.dz_m, s.length_m
            ));
            break;
        }
    }
    if !(cfg.fit.m_w >= 0.0) {
        out.push("fit.m_w must be non-negative".into());
    }
    out.extend(cfg.fit_config().diagnostics().into_iter().map(|p| format!("fit: {p}")));
    out.extend(cfg.quad_config().diagnostics().into_iter().map(|p| format!("quadrature: {p}")));
    if cfg.mode.no_raman {
        if cfg.spans.iter().any(|s| s.raman_gain.is_some()) {
            out.push("mode.no_raman needs every span without a raman_gain table".into());
        }
        if cfg.mode.oracle {
            out.push("mode.oracle checks polynomial fits, which mode.no_raman skips".into());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
[wdm]
cut = 1
[wdm.uniform]
first_center_hz = 193.0e12
spacing_hz = 50e9
count = 3
symbol_rate_baud = 32e9
launch_power_w = 1e-3

[raman_tables.smf]
offsets_hz = [0.0, 13.2e12, 30e12]
gain_per_w_per_m = [0.0, 4.2e-4, 0.0]

[[spans]]
repeat = 2
length_m = 80e3
gamma_per_w_per_m = 1.3e-3
alpha_per_m = 2.303e-5
beta2_s2_per_m = -2.17e-26
dispersion_ref_hz = 193.05e12
raman_gain = "smf"

[[spans.pumps]]
frequency_hz = 206.2e12
power_w = 0.3
alpha_per_m = 2.88e-5
direction = "backward"
"#;

    #[test]
    fn parses_and_expands() {
        let cfg = RunConfig::from_toml_str(BASE).unwrap();
        assert!(validate_config(&cfg).is_empty(), "{:?}", validate_config(&cfg));
        let grid = cfg.build_grid().unwrap();
        assert_eq!(grid.len(), 3);
        let stages = cfg.build_stages(3).unwrap();
        assert_eq!(stages.len(), 2);
        assert_eq!(stages[0].0.alpha_per_m, vec![2.303e-5; 3]);
        assert_eq!(stages[1].0.pumps[0].direction, Direction::Backward);
        assert_eq!(stages[0].1.gain, AmpGain::Transparent);
        assert_eq!(cfg.cuts(3).unwrap(), vec![1]);
        assert_eq!(cfg.fit_config(), FitConfig::default());
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = BASE.replace("repeat = 2", "repeat = 2\nlenght_m = 5.0");
        assert!(matches!(RunConfig::from_toml_str(&text), Err(Error::Config(_))));
    }

    #[test]
    fn overlapping_bands_name_both_channels() {
        let text = BASE.replace("spacing_hz = 50e9", "spacing_hz = 30e9");
        let d = validate_config(&RunConfig::from_toml_str(&text).unwrap());
        assert!(d.iter().any(|m| m.contains("channels 0 and 1")), "{d:?}");
    }

    #[test]
    fn negative_length_is_reported() {
        let text = BASE.replace("length_m = 80e3", "length_m = -80e3");
        let d = validate_config(&RunConfig::from_toml_str(&text).unwrap());
        assert!(d.iter().any(|m| m.contains("span length")), "{d:?}");
    }

    #[test]
    fn backward_pump_without_power_cites_shooting() {
        let text = BASE.replace("power_w = 0.3\n", "");
        let d = validate_config(&RunConfig::from_toml_str(&text).unwrap());
        assert!(d.iter().any(|m| m.contains("backward pump") && m.contains("shooting")), "{d:?}");
    }

    #[test]
    fn per_channel_lists_and_cut_forms() {
        let text = BASE
            .replace("alpha_per_m = 2.303e-5", "alpha_per_m = [2.3e-5, 2.31e-5]")
            .replace("cut = 1", "cut = [2, 0, 2]");
        let cfg = RunConfig::from_toml_str(&text).unwrap();
        assert!(validate_config(&cfg).iter().any(|m| m.contains("alpha_per_m list")));
        assert_eq!(cfg.cuts(3).unwrap(), vec![0, 2]);
        let bad = BASE.replace("cut = 1", "cut = \"some\"");
        let d = validate_config(&RunConfig::from_toml_str(&bad).unwrap());
        assert!(d.iter().any(|m| m.contains("wdm.cut")));
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = RunConfig::from_toml_str(BASE).unwrap();
        let again = RunConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(cfg, again);
    }
}
