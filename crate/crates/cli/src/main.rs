use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pamshape::harness::{self, write_results_csv};
use pamshape::metrics::{self, HD_FEC_OVERHEAD, HD_FEC_THRESHOLD};
use pamshape::{
    design_for_entropy, design_for_overhead, DistributionSpec, Error, ExperimentSpec, Polarity,
    Result, Sweep, SweepAxis, TrialReport,
};

/// Probabilistically shaped PAM-8 IM/DD link simulator.
#[derive(Parser)]
#[command(name = "pamshape", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Design an MB-family PMF and print it as CSV.
    DesignDist(DesignArgs),
    /// Rate and overhead calculator.
    Rates(RatesArgs),
    /// Run a single trial.
    Simulate(TrialArgs),
    /// Sweep the DAC peak-to-peak voltage.
    SweepVpp(SweepArgs),
    /// Sweep the symbol rate.
    SweepBaud(SweepArgs),
    /// Run a single trial and export per-level histograms.
    Histogram(HistogramArgs),
}

#[derive(Args)]
struct DesignArgs {
    /// Shaping overhead m/H − 1.
    #[arg(long, default_value_t = harness::DEFAULT_PS_OVERHEAD, conflicts_with = "target_entropy")]
    ps_oh: f64,
    /// Target entropy in bits (instead of --ps-oh).
    #[arg(long)]
    target_entropy: Option<f64>,
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
    #[arg(long, default_value = "cap")]
    polarity: Polarity,
    /// Bits per symbol.
    #[arg(long, default_value_t = 3)]
    m: u32,
    /// Write the PMF to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RatesArgs {
    /// Source entropy in bits per symbol (defaults to m).
    #[arg(long = "H")]
    entropy: Option<f64>,
    #[arg(long, default_value_t = 3)]
    m: u32,
    #[arg(long, default_value_t = HD_FEC_OVERHEAD)]
    fec_oh: f64,
    /// Symbol rate in GBd.
    #[arg(long)]
    baud: f64,
    /// Measured pre-FEC BER; enables the AIR line and gates ONBR.
    #[arg(long)]
    ber: Option<f64>,
    #[arg(long, default_value_t = HD_FEC_THRESHOLD)]
    threshold: f64,
}

#[derive(Args)]
struct Common {
    /// TOML experiment file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PointArgs {
    /// DAC peak-to-peak voltage in mV.
    #[arg(long, allow_negative_numbers = true)]
    vpp: Option<f64>,
    /// Symbol rate in GBd.
    #[arg(long, allow_negative_numbers = true)]
    baud: Option<f64>,
    /// uniform, cap or cup.
    #[arg(long)]
    format: Option<String>,
    /// Gaussian order of a shaped format.
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Args)]
struct TrialArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    point: PointArgs,
}

#[derive(Args)]
struct HistogramArgs {
    #[command(flatten)]
    trial: TrialArgs,
    /// Equalizer whose output is binned (defaults to the first configured).
    #[arg(long)]
    equalizer: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// uniform, cap or cup.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, requires_all = ["stop", "step"], allow_negative_numbers = true)]
    start: Option<f64>,
    #[arg(long, requires_all = ["start", "step"], allow_negative_numbers = true)]
    stop: Option<f64>,
    #[arg(long, requires_all = ["start", "stop"], allow_negative_numbers = true)]
    step: Option<f64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::DesignDist(a) => design_dist(a),
        Command::Rates(a) => rates(a),
        Command::Simulate(a) => simulate(a),
        Command::SweepVpp(a) => sweep(a, SweepAxis::VppDac),
        Command::SweepBaud(a) => sweep(a, SweepAxis::SymbolRate),
        Command::Histogram(a) => histogram(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 1 } else { 2 })
        }
    }
}

fn design_dist(a: DesignArgs) -> Result<()> {
    let dist = match a.target_entropy {
        Some(h) => design_for_entropy(h, a.alpha, a.m, a.polarity)?,
        None => design_for_overhead(a.ps_oh, a.alpha, a.m, a.polarity)?,
    };
    eprintln!(
        "nu = {:.9e}  alpha = {}  entropy = {:.6} bits  PS OH = {:.4} %",
        dist.nu(),
        dist.alpha(),
        dist.entropy(),
        100.0 * metrics::ps_overhead(dist.entropy(), a.m)?
    );
    match a.out {
        Some(path) => dist.save_csv(&path),
        None => dist
            .write_csv(std::io::stdout().lock())
            .map_err(|e| Error::Config(format!("writing stdout: {e}"))),
    }
}

fn rates(a: RatesArgs) -> Result<()> {
    let h = a.entropy.unwrap_or(f64::from(a.m));
    if !metrics::fec_rate_is_admissible(a.m, a.fec_oh) {
        eprintln!(
            "warning: FEC overhead {} exceeds one parity bit per symbol for m = {}",
            a.fec_oh, a.m
        );
    }
    let se = metrics::se_pas(h, a.m, a.fec_oh)?;
    println!("entropy         {h:.4} bit/symbol");
    println!(
        "PS overhead     {:.2} %",
        100.0 * metrics::ps_overhead(h, a.m)?
    );
    println!("FEC overhead    {:.2} %", 100.0 * a.fec_oh);
    match metrics::total_overhead(h, a.m, a.fec_oh) {
        Ok(oh) => println!("total overhead  {:.2} %", 100.0 * oh),
        Err(_) => println!("total overhead  unbounded"),
    }
    println!("SE_PAS          {se:.4} bit/symbol");
    match a.ber {
        None => println!("ONBR            {:.2} Gb/s", a.baud * se),
        Some(ber) => {
            let se_hd = metrics::se_hd(h, a.m, ber)?;
            println!("H2(BER)         {:.6}", metrics::binary_entropy(ber)?);
            println!("SE_HD           {se_hd:.4} bit/symbol");
            println!("AIR             {:.2} Gb/s", metrics::air(a.baud, se_hd));
            match metrics::onbr(a.baud, h, a.m, a.fec_oh, ber, a.threshold)? {
                Some(v) => println!("ONBR            {v:.2} Gb/s"),
                None => println!("ONBR            n/a (BER above {:.2e})", a.threshold),
            }
        }
    }
    Ok(())
}

fn load_spec(common: &Common) -> Result<ExperimentSpec> {
    let mut spec = match &common.config {
        Some(path) => ExperimentSpec::from_file(path)?,
        None => ExperimentSpec::default(),
    };
    if let Some(seed) = common.seed {
        spec.link.seed = seed;
    }
    Ok(spec)
}

fn parse_format(
    name: &str,
    alpha: Option<f64>,
    current: DistributionSpec,
) -> Result<DistributionSpec> {
    if name.eq_ignore_ascii_case("uniform") {
        return Ok(DistributionSpec::Uniform);
    }
    let polarity: Polarity = name
        .parse()
        .map_err(|_| Error::Config(format!("format `{name}` is not uniform, cap or cup")))?;
    let (alpha0, ps_oh) = match current {
        DistributionSpec::Shaped { alpha, ps_oh, .. } => (alpha, ps_oh),
        DistributionSpec::Uniform => (2.0, harness::DEFAULT_PS_OVERHEAD),
    };
    Ok(DistributionSpec::Shaped {
        polarity,
        alpha: alpha.unwrap_or(alpha0),
        ps_oh,
    })
}

fn apply_format(spec: &mut ExperimentSpec, format: Option<&str>, alpha: Option<f64>) -> Result<()> {
    match (format, alpha) {
        (Some(f), _) => spec.distribution = parse_format(f, alpha, spec.distribution)?,
        (None, Some(a)) => match &mut spec.distribution {
            DistributionSpec::Shaped { alpha, .. } => *alpha = a,
            DistributionSpec::Uniform => {
                return Err(Error::Config("--alpha needs a shaped --format".into()));
            }
        },
        (None, None) => {}
    }
    Ok(())
}

/// Spec with the single point pinned: the sweep collapses to the link's own value.
fn trial_spec(a: &TrialArgs) -> Result<(ExperimentSpec, f64)> {
    let mut spec = load_spec(&a.common)?;
    if let Some(v) = a.point.vpp {
        spec.link.vpp_dac = v;
    }
    if let Some(b) = a.point.baud {
        spec.link.symbol_rate = b;
    }
    apply_format(&mut spec, a.point.format.as_deref(), a.point.alpha)?;
    spec.sweep = Sweep::new(SweepAxis::VppDac, vec![spec.link.vpp_dac]);
    spec.validate()?;
    let vpp = spec.link.vpp_dac;
    Ok((spec, vpp))
}

fn print_report(r: &TrialReport) {
    let onbr = r
        .onbr_gbps
        .map(|v| format!("{v:.2} Gb/s"))
        .unwrap_or_else(|| "n/a".into());
    println!(
        "{:<8} {:<12} Vpp {:>6.1} mV  {:>6.1} GBd  BER {:.3e}  AIR {:>7.2} Gb/s  ONBR {}  ER {:.2} dB",
        r.equalizer, r.format, r.vpp_dac, r.symbol_rate, r.ber, r.air_gbps, onbr, r.extinction_ratio_db
    );
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn simulate(a: TrialArgs) -> Result<()> {
    let (spec, vpp) = trial_spec(&a)?;
    let reports = harness::run_trial(&spec, vpp, spec.link.seed)?;
    for r in &reports {
        print_report(r);
    }
    if let Some(dir) = &a.common.out {
        ensure_dir(dir)?;
        write_results_csv(&reports, &dir.join("results.csv"))?;
    }
    Ok(())
}

fn histogram(a: HistogramArgs) -> Result<()> {
    let (spec, vpp) = trial_spec(&a.trial)?;
    let reports = harness::run_trial(&spec, vpp, spec.link.seed)?;
    let report = match &a.equalizer {
        Some(name) => reports
            .iter()
            .find(|r| &r.equalizer == name)
            .ok_or_else(|| Error::Config(format!("no equalizer named `{name}` in the config")))?,
        None => &reports[0],
    };
    eprintln!(
        "{} {}: BER {:.3e}, adjacent overlap {:.4}",
        report.equalizer,
        report.format,
        report.ber,
        report.level_histograms.adjacent_overlap()
    );
    match &a.trial.common.out {
        Some(dir) => {
            ensure_dir(dir)?;
            let path = dir.join(format!("hist_{}_{}.csv", report.format, report.equalizer));
            let mut file = std::fs::File::create(&path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            report
                .level_histograms
                .write_csv(&mut file)
                .and_then(|()| file.flush())
                .map_err(|e| Error::Io { path, source: e })
        }
        None => report
            .level_histograms
            .write_csv(std::io::stdout().lock())
            .map_err(|e| Error::Config(format!("writing stdout: {e}"))),
    }
}

fn sweep(a: SweepArgs, axis: SweepAxis) -> Result<()> {
    let mut spec = load_spec(&a.common)?;
    apply_format(&mut spec, a.format.as_deref(), a.alpha)?;
    spec.sweep = match (a.start, a.stop, a.step) {
        (Some(start), Some(stop), Some(step)) => Sweep::range(axis, start, stop, step)?,
        _ if spec.sweep.axis == axis => spec.sweep.clone(),
        _ => match axis {
            SweepAxis::SymbolRate => Sweep::range(axis, 100.0, 130.0, 5.0)?,
            _ => Sweep::default_vpp(),
        },
    };
    let results = harness::run_sweep(&spec)?;
    for r in results.reports() {
        print_report(r);
    }
    let mut failed = 0;
    for p in results.failures() {
        failed += 1;
        if let Err(msg) = &p.outcome {
            eprintln!("point {} ({} = {}) failed: {msg}", p.index, axis, p.value);
        }
    }
    if let Some(dir) = &a.common.out {
        results.write_outputs(&spec, dir)?;
        eprintln!("wrote {}", dir.join("results.csv").display());
    }
    if failed == results.points.len() {
        return Err(Error::Numerical("every sweep point failed".into()));
    }
    Ok(())
}
