use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Physical unit carried by a [`Waveform`].
///
/// The link only composes in the order volts → milliwatts → normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    Volts,
    Milliwatts,
    Normalized,
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Unit::Volts => "V",
            Unit::Milliwatts => "mW",
            Unit::Normalized => "normalized",
        })
    }
}

impl FromStr for Unit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "V" => Ok(Unit::Volts),
            "mW" => Ok(Unit::Milliwatts),
            "normalized" => Ok(Unit::Normalized),
            other => Err(Error::InvalidParameter(format!("unknown unit `{other}`"))),
        }
    }
}

/// Uniformly sampled real signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    /// GSa/s
    sample_rate: f64,
    unit: Unit,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: f64, unit: Unit) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sample rate must be positive, got {sample_rate}"
            )));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidParameter(format!("sample {i} is not finite")));
        }
        Ok(Self {
            samples,
            sample_rate,
            unit,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn mean(&self) -> f64 {
        mean(&self.samples)
    }

    pub fn rms(&self) -> f64 {
        (self.samples.iter().map(|s| s * s).sum::<f64>() / self.samples.len().max(1) as f64).sqrt()
    }

    pub(crate) fn expect_unit(&self, unit: Unit, stage: &str) -> Result<()> {
        if self.unit == unit {
            Ok(())
        } else {
            Err(Error::Contract(format!(
                "{stage} expects a waveform in {unit}, got {}",
                self.unit
            )))
        }
    }

    /// Writes `# rate_GSaps=<r> unit=<u>` followed by `index,value` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# rate_GSaps={} unit={}", self.sample_rate, self.unit)?;
        writeln!(out, "index,value")?;
        for (i, v) in self.samples.iter().enumerate() {
            writeln!(out, "{i},{v:e}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R, origin: &Path) -> Result<Self> {
        let parse_err = |message: String| Error::Parse {
            path: origin.to_path_buf(),
            message,
        };
        let mut lines = input.lines();
        let header = lines
            .next()
            .transpose()
            .map_err(|e| Error::io(origin, e))?
            .ok_or_else(|| parse_err("empty waveform file".into()))?;
        let mut rate = None;
        let mut unit = None;
        for field in header.trim_start_matches('#').split_whitespace() {
            match field.split_once('=') {
                Some(("rate_GSaps", v)) => {
                    rate = Some(
                        v.parse::<f64>()
                            .map_err(|e| parse_err(format!("rate: {e}")))?,
                    )
                }
                Some(("unit", v)) => unit = Some(v.parse::<Unit>()?),
                _ => {}
            }
        }
        let rate = rate.ok_or_else(|| parse_err("missing rate_GSaps in header".into()))?;
        let unit = unit.ok_or_else(|| parse_err("missing unit in header".into()))?;

        let mut samples = Vec::new();
        for (n, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io(origin, e))?;
            if n == 0 && line.trim() == "index,value" {
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let (_, value) = line
                .split_once(',')
                .ok_or_else(|| parse_err(format!("line {}: expected `index,value`", n + 2)))?;
            samples.push(
                value
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| parse_err(format!("line {}: {e}", n + 2)))?,
            );
        }
        Waveform::new(samples, rate, unit)
    }
}

pub(crate) fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len().max(1) as f64
}
