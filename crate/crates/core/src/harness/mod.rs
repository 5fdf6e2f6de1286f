//! Experiment orchestration: single trials, parameter sweeps and their outputs.

mod config;

pub use config::{DistributionSpec, ExperimentSpec, Sweep, SweepAxis, DEFAULT_PS_OVERHEAD};

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::ops::Range;
use std::path::Path;

use rayon::prelude::*;

use crate::channel::{simulate_link, LinkConfig};
use crate::equalization::{self, EqualizerConfig};
use crate::error::{Error, Result};
use crate::metrics::{self, LevelHistograms};
use crate::shaping::{sample_symbols, ShapedDistribution};

/// Outcome of one equalizer on one simulated channel realization.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialReport {
    pub format: String,
    pub equalizer: String,
    pub vpp_dac: f64,
    pub symbol_rate: f64,
    pub ber: f64,
    pub bit_errors: u64,
    pub symbol_errors: u64,
    pub bits_compared: u64,
    pub entropy_bits: f64,
    pub air_gbps: f64,
    pub onbr_gbps: Option<f64>,
    pub extinction_ratio_db: f64,
    /// Mean squared error against the known levels over the evaluated symbols.
    pub mse: f64,
    pub level_histograms: LevelHistograms,
    /// Equalized values for the evaluated symbols.
    pub equalized: Vec<f64>,
    /// Symbol indices covered by `equalized`.
    pub evaluated: Range<usize>,
}

/// Link and distribution at one sweep point.
pub fn resolve_point(spec: &ExperimentSpec, value: f64) -> (LinkConfig, DistributionSpec) {
    let mut link = spec.link.clone();
    let mut dist = spec.distribution;
    match spec.sweep.axis {
        SweepAxis::VppDac => link.vpp_dac = value,
        SweepAxis::SymbolRate => link.symbol_rate = value,
        SweepAxis::Alpha => {
            if let DistributionSpec::Shaped { alpha, .. } = &mut dist {
                *alpha = value;
            }
        }
    }
    (link, dist)
}

/// Simulates one channel realization at sweep value `value` and runs every
/// configured equalizer on it. Training uses the leading symbols, evaluation
/// everything after them that has full equalizer context.
pub fn run_trial(spec: &ExperimentSpec, value: f64, seed: u64) -> Result<Vec<TrialReport>> {
    spec.validate()?;
    let (link, dist_spec) = resolve_point(spec, value);
    let dist = dist_spec.build(link.m).map_err(|e| e.in_stage("shaping"))?;
    let symbols = sample_symbols(&dist, spec.trial_symbols, seed);
    let rx = simulate_link(&symbols, &link, seed)?;
    let er = link.extinction_ratio_db();
    spec.equalizers
        .iter()
        .map(|eq| evaluate(spec, &link, &dist, dist_spec, eq, &symbols, &rx, er))
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn evaluate(
    spec: &ExperimentSpec,
    link: &LinkConfig,
    dist: &ShapedDistribution,
    dist_spec: DistributionSpec,
    eq: &EqualizerConfig,
    symbols: &[i32],
    rx: &crate::channel::Waveform,
    er: f64,
) -> Result<TrialReport> {
    let kernels =
        equalization::train(rx, symbols, eq).map_err(|e| e.in_stage("equalizer training"))?;
    let out = equalization::apply(&kernels, rx).map_err(|e| e.in_stage("equalizer"))?;
    let evaluated = out.valid.start.max(eq.training_len)..out.valid.end;
    if evaluated.is_empty() {
        return Err(Error::Config(format!(
            "no symbols left to evaluate `{}` after training",
            eq.name
        )));
    }
    let values = out.values[evaluated.clone()].to_vec();
    let tx = &symbols[evaluated.clone()];
    let decided = equalization::hard_decide(&values, dist.constellation());
    let errors = metrics::ber_count(tx, &decided, link.m).map_err(|e| e.in_stage("metrics"))?;
    let mse = values
        .iter()
        .zip(tx)
        .map(|(y, &s)| (y - f64::from(s)).powi(2))
        .sum::<f64>()
        / values.len() as f64;
    let entropy_bits = dist.entropy();
    let air_gbps = metrics::air_from_ber(link.symbol_rate, entropy_bits, link.m, errors.ber)?;
    let onbr_gbps = metrics::onbr(
        link.symbol_rate,
        entropy_bits,
        link.m,
        spec.fec_oh,
        errors.ber,
        spec.ber_threshold,
    )?;
    let level_histograms =
        metrics::level_histogram(&values, tx, dist.constellation(), spec.histogram_bins)?;
    Ok(TrialReport {
        format: dist_spec.label(),
        equalizer: eq.name.clone(),
        vpp_dac: link.vpp_dac,
        symbol_rate: link.symbol_rate,
        ber: errors.ber,
        bit_errors: errors.bit_errors,
        symbol_errors: errors.symbol_errors,
        bits_compared: errors.bits_compared,
        entropy_bits,
        air_gbps,
        onbr_gbps,
        extinction_ratio_db: er,
        mse,
        level_histograms,
        equalized: values,
        evaluated,
    })
}

/// SplitMix64 finalizer over the master seed and the grid index.
pub fn point_seed(master: u64, index: usize) -> u64 {
    let mut z = master
        ^ (index as u64)
            .wrapping_add(1)
            .wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub index: usize,
    pub value: f64,
    pub seed: u64,
    /// Per-equalizer reports, or the rendered error if this point failed.
    pub outcome: std::result::Result<Vec<TrialReport>, String>,
}

#[derive(Debug, Clone)]
pub struct SweepResults {
    pub axis: SweepAxis,
    pub points: Vec<SweepPoint>,
}

impl SweepResults {
    pub fn failures(&self) -> impl Iterator<Item = &SweepPoint> {
        self.points.iter().filter(|p| p.outcome.is_err())
    }

    /// Every successful report, in grid order then equalizer order.
    pub fn reports(&self) -> impl Iterator<Item = &TrialReport> {
        self.points
            .iter()
            .filter_map(|p| p.outcome.as_ref().ok())
            .flatten()
    }

    /// `(value, ber)` along the grid for one equalizer; failed points are skipped.
    pub fn ber_curve(&self, equalizer: &str) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .filter_map(|p| {
                let reports = p.outcome.as_ref().ok()?;
                let r = reports.iter().find(|r| r.equalizer == equalizer)?;
                Some((p.value, r.ber))
            })
            .collect()
    }

    /// Writes `results.csv`, `histograms/` and `pmfs/` under `dir`.
    pub fn write_outputs(&self, spec: &ExperimentSpec, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir.join("histograms")).map_err(|e| Error::io(dir, e))?;
        fs::create_dir_all(dir.join("pmfs")).map_err(|e| Error::io(dir, e))?;
        let results = dir.join("results.csv");
        write_results_csv(self.reports(), &results)?;
        for p in &self.points {
            for r in p.outcome.iter().flatten() {
                let name = format!(
                    "hist_{}_{}_{}{}.csv",
                    r.format,
                    sanitize(&r.equalizer),
                    self.axis,
                    p.value
                );
                let path = dir.join("histograms").join(name);
                let mut w = create(&path)?;
                r.level_histograms
                    .write_csv(&mut w)
                    .map_err(|e| Error::io(&path, e))?;
                w.flush().map_err(|e| Error::io(&path, e))?;
            }
        }
        let m = spec.link.m;
        for p in &self.points {
            let (_, dist_spec) = resolve_point(spec, p.value);
            let path = dir
                .join("pmfs")
                .join(format!("pmf_{}.csv", dist_spec.label()));
            if !path.exists() {
                dist_spec.build(m)?.save_csv(&path)?;
            }
        }
        Ok(())
    }
}

/// Runs every grid point in parallel. Each point has its own seed derived from
/// `spec.link.seed` and its grid index, so results do not depend on thread count.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<SweepResults> {
    spec.validate()?;
    let master = spec.link.seed;
    let points = spec
        .sweep
        .values
        .par_iter()
        .enumerate()
        .map(|(index, &value)| {
            let seed = point_seed(master, index);
            SweepPoint {
                index,
                value,
                seed,
                outcome: run_trial(spec, value, seed).map_err(|e| e.to_string()),
            }
        })
        .collect();
    Ok(SweepResults {
        axis: spec.sweep.axis,
        points,
    })
}

const RESULTS_HEADER: &str = "vpp_mV,symbol_rate_GBd,format,equalizer,ber,air_Gbps,onbr_Gbps,er_dB";

/// Writes one `results.csv` row per report; a missing ONBR is an empty field.
pub fn write_results_csv<'a>(
    reports: impl IntoIterator<Item = &'a TrialReport>,
    path: &Path,
) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "{RESULTS_HEADER}").map_err(io)?;
    for r in reports {
        let onbr = r.onbr_gbps.map(|v| format!("{v:.4}")).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{:.6e},{:.4},{},{:.4}",
            r.vpp_dac,
            r.symbol_rate,
            r.format,
            r.equalizer,
            r.ber,
            r.air_gbps,
            onbr,
            r.extinction_ratio_db
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Index of the smallest value (first one on ties).
pub fn argmin(values: &[f64]) -> Option<usize> {
    values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
}

/// True when the curve has an interior minimum, falls towards it and rises
/// after it, tolerating at most one step against that trend.
pub fn is_u_shaped(values: &[f64]) -> bool {
    let Some(k) = argmin(values) else {
        return false;
    };
    if k == 0 || k + 1 == values.len() {
        return false;
    }
    let rising_before = values[..=k].windows(2).filter(|w| w[1] > w[0]).count();
    let falling_after = values[k..].windows(2).filter(|w| w[1] < w[0]).count();
    rising_before + falling_after <= 1
}
