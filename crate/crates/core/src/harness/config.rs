//! Experiment description and its TOML config file.
//!
//! ```toml
//! [link]                 # any LinkConfig field, e.g.
//! symbol_rate = 110.0
//! vpp_dac = 320.0
//! snr_db = 27.0
//!
//! [eml]                  # analytic (default) or lookup
//! model = "analytic"
//! v_infl = -3.1
//! slope = 0.8
//! p_max = 5.6
//! # model = "lookup"
//! # table = "eml_curve.csv"   (voltage_V,power_mW; relative to this file)
//!
//! [distribution]
//! kind = "cap"           # uniform | cap | cup
//! alpha = 2.0
//! ps_oh = 0.0817
//!
//! [[equalizer]]          # repeatable; defaults to FFE(31) + VNLE(31, 7, 9)
//! name = "FFE"
//! linear_taps = 31
//!
//! [sweep]
//! axis = "vpp_dac"       # vpp_dac | symbol_rate | alpha
//! values = [200, 230, 260]
//! # or start / stop / step
//!
//! [experiment]
//! trial_symbols = 200000
//! fec_oh = 0.07
//! ber_threshold = 4.6e-3
//! histogram_bins = 72
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::channel::{EmlCurve, LinkConfig, DEFAULT_P_MAX, DEFAULT_SLOPE, DEFAULT_V_INFL};
use crate::equalization::EqualizerConfig;
use crate::error::{Error, Result};
use crate::metrics::{HD_FEC_OVERHEAD, HD_FEC_THRESHOLD};
use crate::shaping::{self, Polarity, ShapedDistribution};

/// PS overhead used throughout the shaped experiments (entropy ≈ 2.7734 bits for PAM-8).
pub const DEFAULT_PS_OVERHEAD: f64 = 0.0817;

/// Transmit symbol distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistributionSpec {
    Uniform,
    Shaped {
        polarity: Polarity,
        alpha: f64,
        ps_oh: f64,
    },
}

impl DistributionSpec {
    pub fn cap(alpha: f64) -> Self {
        DistributionSpec::Shaped {
            polarity: Polarity::Cap,
            alpha,
            ps_oh: DEFAULT_PS_OVERHEAD,
        }
    }

    pub fn cup(alpha: f64) -> Self {
        DistributionSpec::Shaped {
            polarity: Polarity::Cup,
            alpha,
            ps_oh: DEFAULT_PS_OVERHEAD,
        }
    }

    pub fn build(&self, m: u32) -> Result<ShapedDistribution> {
        match *self {
            DistributionSpec::Uniform => ShapedDistribution::uniform(m),
            DistributionSpec::Shaped {
                polarity,
                alpha,
                ps_oh,
            } => shaping::design_for_overhead(ps_oh, alpha, m, polarity),
        }
    }

    /// Short label used in result tables, e.g. `uniform` or `cap-go2.0`.
    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistributionSpec::Uniform => f.write_str("uniform"),
            DistributionSpec::Shaped {
                polarity, alpha, ..
            } => write!(f, "{polarity}-go{alpha:.1}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    VppDac,
    SymbolRate,
    Alpha,
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepAxis::VppDac => "vpp_dac",
            SweepAxis::SymbolRate => "symbol_rate",
            SweepAxis::Alpha => "alpha",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

impl Sweep {
    pub fn new(axis: SweepAxis, values: Vec<f64>) -> Self {
        Self { axis, values }
    }

    /// `start, start + step, …` up to and including `stop` (within half a step).
    pub fn range(axis: SweepAxis, start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(stop >= start) {
            return Err(Error::Config(format!(
                "sweep range needs step > 0 and stop >= start (got {start}..{stop} step {step})"
            )));
        }
        let n = ((stop - start) / step + 0.5).floor() as usize;
        Ok(Self::new(
            axis,
            (0..=n).map(|i| start + step * i as f64).collect(),
        ))
    }

    /// Default drive sweep: 200–530 mV in 30 mV steps.
    pub fn default_vpp() -> Self {
        Self::range(SweepAxis::VppDac, 200.0, 530.0, 30.0).expect("static range")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub link: LinkConfig,
    pub distribution: DistributionSpec,
    pub equalizers: Vec<EqualizerConfig>,
    pub sweep: Sweep,
    pub trial_symbols: usize,
    pub fec_oh: f64,
    pub ber_threshold: f64,
    pub histogram_bins: usize,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            link: LinkConfig::default(),
            distribution: DistributionSpec::Uniform,
            equalizers: vec![EqualizerConfig::ffe(31), EqualizerConfig::vnle(31, 7, 9)],
            sweep: Sweep::default_vpp(),
            trial_symbols: 200_000,
            fec_oh: HD_FEC_OVERHEAD,
            ber_threshold: HD_FEC_THRESHOLD,
            histogram_bins: 72,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        self.link.validate()?;
        if self.equalizers.is_empty() {
            return Err(Error::Config("at least one equalizer is required".into()));
        }
        for eq in &self.equalizers {
            eq.validate()?;
            if self.trial_symbols < eq.training_len + 10_000 {
                return Err(Error::Config(format!(
                    "trial_symbols {} must exceed training_len {} of `{}` by at least 10000",
                    self.trial_symbols, eq.training_len, eq.name
                )));
            }
        }
        if self.sweep.values.is_empty() {
            return Err(Error::Config("sweep grid is empty".into()));
        }
        if self.sweep.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("sweep values must be finite".into()));
        }
        if !self.sweep.values.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::Config(
                "sweep grid must be strictly increasing".into(),
            ));
        }
        if self.sweep.axis == SweepAxis::Alpha && self.distribution == DistributionSpec::Uniform {
            return Err(Error::Config(
                "an alpha sweep needs a shaped distribution".into(),
            ));
        }
        if !(self.fec_oh >= 0.0) {
            return Err(Error::Config(format!(
                "fec_oh must be >= 0, got {}",
                self.fec_oh
            )));
        }
        if !(self.ber_threshold > 0.0) {
            return Err(Error::Config(format!(
                "ber_threshold must be positive, got {}",
                self.ber_threshold
            )));
        }
        if self.histogram_bins < 8 {
            return Err(Error::Config("histogram_bins must be >= 8".into()));
        }
        if let DistributionSpec::Shaped { alpha, ps_oh, .. } = self.distribution {
            if !(alpha > 0.0) || !(ps_oh >= 0.0) {
                return Err(Error::Config(format!(
                    "shaped distribution needs alpha > 0 and ps_oh >= 0 (got {alpha}, {ps_oh})"
                )));
            }
        }
        Ok(())
    }

    /// Reads a TOML experiment file. Relative table paths resolve against its directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, &base).map_err(|e| match e {
            Error::Parse { message, .. } => Error::Parse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }

    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Parse {
            path: PathBuf::from("<config>"),
            message: e.to_string(),
        })?;
        let mut spec = ExperimentSpec {
            link: file.link,
            ..ExperimentSpec::default()
        };
        if let Some(eml) = file.eml {
            spec.link.eml = eml.into_curve(base_dir)?;
        }
        if let Some(d) = file.distribution {
            spec.distribution = d.into_spec()?;
        }
        if let Some(eqs) = file.equalizer {
            spec.equalizers = eqs;
        }
        if let Some(s) = file.sweep {
            spec.sweep = s.into_sweep()?;
        }
        let e = file.experiment;
        spec.trial_symbols = e.trial_symbols;
        spec.fec_oh = e.fec_oh;
        spec.ber_threshold = e.ber_threshold;
        spec.histogram_bins = e.histogram_bins;
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    link: LinkConfig,
    eml: Option<EmlSection>,
    distribution: Option<DistributionSection>,
    equalizer: Option<Vec<EqualizerConfig>>,
    sweep: Option<SweepSection>,
    #[serde(default)]
    experiment: ExperimentSection,
}

#[derive(Deserialize)]
#[serde(tag = "model", rename_all = "lowercase", deny_unknown_fields)]
enum EmlSection {
    Analytic {
        #[serde(default = "default_v_infl")]
        v_infl: f64,
        #[serde(default = "default_slope")]
        slope: f64,
        #[serde(default = "default_p_max")]
        p_max: f64,
    },
    Lookup {
        table: PathBuf,
    },
}

fn default_v_infl() -> f64 {
    DEFAULT_V_INFL
}
fn default_slope() -> f64 {
    DEFAULT_SLOPE
}
fn default_p_max() -> f64 {
    DEFAULT_P_MAX
}

impl EmlSection {
    fn into_curve(self, base: &Path) -> Result<EmlCurve> {
        match self {
            EmlSection::Analytic {
                v_infl,
                slope,
                p_max,
            } => EmlCurve::analytic(v_infl, slope, p_max).map_err(|e| Error::Config(e.to_string())),
            EmlSection::Lookup { table } => {
                let path = if table.is_absolute() {
                    table
                } else {
                    base.join(table)
                };
                EmlCurve::from_csv(&path)
            }
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DistributionSection {
    kind: String,
    #[serde(default = "default_alpha")]
    alpha: f64,
    #[serde(default = "default_ps_oh")]
    ps_oh: f64,
}

fn default_alpha() -> f64 {
    2.0
}
fn default_ps_oh() -> f64 {
    DEFAULT_PS_OVERHEAD
}

impl DistributionSection {
    fn into_spec(self) -> Result<DistributionSpec> {
        if self.kind.eq_ignore_ascii_case("uniform") {
            return Ok(DistributionSpec::Uniform);
        }
        let polarity = self.kind.parse::<Polarity>().map_err(|_| {
            Error::Config(format!(
                "distribution kind `{}` is not uniform, cap or cup",
                self.kind
            ))
        })?;
        Ok(DistributionSpec::Shaped {
            polarity,
            alpha: self.alpha,
            ps_oh: self.ps_oh,
        })
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    axis: SweepAxis,
    values: Option<Vec<f64>>,
    start: Option<f64>,
    stop: Option<f64>,
    step: Option<f64>,
}

impl SweepSection {
    fn into_sweep(self) -> Result<Sweep> {
        match (self.values, self.start, self.stop, self.step) {
            (Some(values), None, None, None) => Ok(Sweep::new(self.axis, values)),
            (None, Some(start), Some(stop), Some(step)) => {
                Sweep::range(self.axis, start, stop, step)
            }
            _ => Err(Error::Config(
                "sweep needs either `values` or all of `start`, `stop`, `step`".into(),
            )),
        }
    }
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ExperimentSection {
    trial_symbols: usize,
    fec_oh: f64,
    ber_threshold: f64,
    histogram_bins: usize,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        let d = ExperimentSpec::default();
        Self {
            trial_symbols: d.trial_symbols,
            fec_oh: d.fec_oh,
            ber_threshold: d.ber_threshold,
            histogram_bins: d.histogram_bins,
        }
    }
}
