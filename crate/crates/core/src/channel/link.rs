//! Transmit and receive stages of the IM/DD link.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Deserialize;

use super::eml::EmlCurve;
use super::filter::Fir;
use super::waveform::{mean, Unit, Waveform};
use crate::error::{Error, Result};

pub(crate) const NOISE_STREAM: u64 = 2;

/// Physical parameters of the simulated link.
///
/// Rates are in GBd / GSa/s, bandwidths in GHz. An infinite bandwidth
/// disables that stage's filter; an infinite `snr_db` disables noise.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkConfig {
    /// Bits per PAM symbol (3 for PAM-8).
    pub m: u32,
    pub symbol_rate: f64,
    /// Simulation samples per symbol; even so that 2 sps decimation is exact.
    pub oversample: usize,
    pub dac_bw_3db: f64,
    pub dac_bits: u32,
    /// DAC peak-to-peak swing in mV.
    pub vpp_dac: f64,
    pub ea_gain_db: f64,
    pub bias_v: f64,
    #[serde(skip)]
    pub eml: EmlCurve,
    pub eml_bw_3db: f64,
    /// Composite PD + receive amplifier + oscilloscope bandwidth.
    pub rx_bw_3db: f64,
    pub pd_responsivity: f64,
    /// Electrical SNR referenced to the photocurrent at the bias point.
    pub snr_db: f64,
    pub rx_lpf_order: usize,
    /// Receive low-pass cutoff as a fraction of the symbol rate.
    pub rx_lpf_cutoff: f64,
    pub seed: u64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            m: 3,
            symbol_rate: 100.0,
            oversample: 8,
            dac_bw_3db: 25.0,
            dac_bits: 8,
            vpp_dac: 290.0,
            ea_gain_db: 22.0,
            bias_v: super::eml::DEFAULT_V_INFL,
            eml: EmlCurve::default(),
            eml_bw_3db: 55.0,
            rx_bw_3db: 65.0,
            pd_responsivity: 1.0,
            snr_db: DEFAULT_SNR_DB,
            rx_lpf_order: 30,
            rx_lpf_cutoff: 0.6,
            seed: 1,
        }
    }
}

/// Calibrated so every format keeps an interior BER optimum on the 200–530 mV
/// drive grid at 100 GBd; uniform PAM-8 with FFE bottoms out near BER 7e-2.
pub const DEFAULT_SNR_DB: f64 = 27.0;

impl LinkConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && !v.is_nan() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        crate::shaping::PamConstellation::new(self.m).map_err(|e| Error::Config(e.to_string()))?;
        positive("symbol_rate", self.symbol_rate)?;
        if !self.symbol_rate.is_finite() {
            return Err(Error::Config("symbol_rate must be finite".into()));
        }
        positive("dac_bw_3db", self.dac_bw_3db)?;
        positive("eml_bw_3db", self.eml_bw_3db)?;
        positive("rx_bw_3db", self.rx_bw_3db)?;
        positive("pd_responsivity", self.pd_responsivity)?;
        positive("rx_lpf_cutoff", self.rx_lpf_cutoff)?;
        if self.oversample < 4 || !self.oversample.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "oversample must be an even integer >= 4, got {}",
                self.oversample
            )));
        }
        if !(1..=24).contains(&self.dac_bits) {
            return Err(Error::Config(format!(
                "dac_bits must be in [1, 24], got {}",
                self.dac_bits
            )));
        }
        if !(self.vpp_dac >= 0.0 && self.vpp_dac.is_finite()) {
            return Err(Error::Config(format!(
                "vpp_dac must be >= 0 mV, got {}",
                self.vpp_dac
            )));
        }
        if !self.ea_gain_db.is_finite() || !self.bias_v.is_finite() {
            return Err(Error::Config("ea_gain_db and bias_v must be finite".into()));
        }
        if self.snr_db.is_nan() {
            return Err(Error::Config("snr_db must not be NaN".into()));
        }
        if !self.rx_lpf_order.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "rx_lpf_order must be even, got {}",
                self.rx_lpf_order
            )));
        }
        Ok(())
    }

    /// Simulation sample rate in GSa/s.
    pub fn sample_rate(&self) -> f64 {
        self.symbol_rate * self.oversample as f64
    }

    /// Peak-to-peak drive swing after the amplifier, V_pp^{DAC+EA}, in volts.
    pub fn drive_swing(&self) -> f64 {
        self.vpp_dac / 1000.0 * 10f64.powf(self.ea_gain_db / 20.0)
    }

    /// Standard deviation of the receiver noise (photocurrent units).
    ///
    /// Absolute: fixed by the optical power at the bias point, independent of
    /// the modulation depth. Zero when `snr_db` is +∞.
    pub fn noise_sigma(&self) -> f64 {
        if self.snr_db == f64::INFINITY {
            return 0.0;
        }
        self.pd_responsivity * self.eml.power(self.bias_v) / 10f64.powf(self.snr_db / 20.0)
    }

    /// Static extinction ratio between the outermost levels, in dB.
    pub fn extinction_ratio_db(&self) -> f64 {
        let half = 0.5 * self.drive_swing();
        let hi = self.eml.power(self.bias_v + half);
        let lo = self.eml.power(self.bias_v - half);
        10.0 * (hi / lo).log10()
    }
}

/// Scales symbols to ±½, quantizes, holds for `oversample` samples and low-passes.
///
/// The hold is centered on the symbol, so sample `k · oversample` is the
/// center of symbol `k`.
pub fn dac_frontend(symbols: &[i32], cfg: &LinkConfig) -> Result<Waveform> {
    let max_level = f64::from((1i32 << cfg.m) - 1);
    let steps = f64::from((1u32 << cfg.dac_bits) - 1);
    let quantize = |x: f64| ((x + 0.5) * steps).round() / steps - 0.5;

    let values: Vec<f64> = symbols
        .iter()
        .map(|&s| {
            if s.abs() > max_level as i32 {
                Err(Error::Contract(format!(
                    "symbol {s} outside the PAM-{} alphabet",
                    1 << cfg.m
                )))
            } else {
                Ok(quantize(f64::from(s) / (2.0 * max_level)))
            }
        })
        .collect::<Result<_>>()?;

    let os = cfg.oversample;
    let n = values.len();
    let held: Vec<f64> = (0..n * os)
        .map(|j| values[((j + os / 2) / os) % n.max(1)])
        .collect();
    let fir = Fir::gaussian(cfg.dac_bw_3db, cfg.sample_rate())?;
    Waveform::new(fir.apply(&held), cfg.sample_rate(), Unit::Volts)
}

/// Applies DAC swing, amplifier gain and bias: `v = bias + V_pp · wf`.
pub fn drive_voltage(wf: &Waveform, cfg: &LinkConfig) -> Result<Waveform> {
    wf.expect_unit(Unit::Volts, "drive_voltage")?;
    let swing = cfg.drive_swing();
    let v = wf
        .samples()
        .iter()
        .map(|x| cfg.bias_v + swing * x)
        .collect();
    Waveform::new(v, wf.sample_rate(), Unit::Volts)
}

/// Pointwise transfer curve followed by the modulator bandwidth (`bw_3db`, GHz).
pub fn eml_transmit(wf: &Waveform, curve: &EmlCurve, bw_3db: f64) -> Result<Waveform> {
    wf.expect_unit(Unit::Volts, "eml_transmit")?;
    let p: Vec<f64> = wf.samples().iter().map(|&v| curve.power(v)).collect();
    let fir = Fir::gaussian(bw_3db, wf.sample_rate())?;
    Waveform::new(fir.apply(&p), wf.sample_rate(), Unit::Milliwatts)
}

/// Small-signal magnitude `|√(1+β²) cos(θ + arctan β)|` of a chirped modulator
/// after dispersion-induced phase `theta`.
pub fn fiber_smallsignal(theta: f64, beta: f64) -> f64 {
    ((1.0 + beta * beta).sqrt() * (theta + beta.atan()).cos()).abs()
}

/// Square-law detection: `i = R · P`, receiver bandwidth, then additive white Gaussian noise.
pub fn photodetect(wf: &Waveform, cfg: &LinkConfig, seed: u64) -> Result<Waveform> {
    wf.expect_unit(Unit::Milliwatts, "photodetect")?;
    if let Some((i, p)) = wf.samples().iter().enumerate().find(|(_, &p)| p < 0.0) {
        return Err(Error::Contract(format!(
            "negative optical power {p} mW at sample {i}"
        )));
    }
    let current: Vec<f64> = wf
        .samples()
        .iter()
        .map(|p| cfg.pd_responsivity * p)
        .collect();
    let mut current = Fir::gaussian(cfg.rx_bw_3db, wf.sample_rate())?.apply(&current);

    let sigma = cfg.noise_sigma();
    if sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(NOISE_STREAM);
        for c in &mut current {
            let z: f64 = StandardNormal.sample(&mut rng);
            *c += sigma * z;
        }
    }
    Waveform::new(current, wf.sample_rate(), Unit::Normalized)
}

/// DC removal, decimation to 2 samples/symbol, FIR low-pass, unit-RMS scaling.
///
/// Even output samples are symbol centers; odd ones sit half a symbol later.
pub fn rx_frontend(wf: &Waveform, cfg: &LinkConfig) -> Result<Waveform> {
    wf.expect_unit(Unit::Normalized, "rx_frontend")?;
    let os = cfg.oversample;
    if !os.is_multiple_of(2) || os == 0 {
        return Err(Error::Config(format!(
            "oversample {os} is not divisible by 2"
        )));
    }
    if !wf.len().is_multiple_of(os) {
        return Err(Error::Contract(format!(
            "waveform length {} is not a whole number of {os}-sample symbols",
            wf.len()
        )));
    }
    let dc = wf.mean();
    let x = wf.samples();
    let decimated: Vec<f64> = (0..wf.len() / os)
        .flat_map(|k| [x[k * os] - dc, x[k * os + os / 2] - dc])
        .collect();

    // cutoff relative to the 2 sps rate
    let fir = Fir::windowed_sinc(cfg.rx_lpf_order, 0.5 * cfg.rx_lpf_cutoff)?;
    let mut y = fir.apply(&decimated);

    let dc = mean(&y);
    y.iter_mut().for_each(|v| *v -= dc);
    let rms = (y.iter().map(|v| v * v).sum::<f64>() / y.len().max(1) as f64).sqrt();
    if rms > 0.0 {
        y.iter_mut().for_each(|v| *v /= rms);
    }
    Waveform::new(y, 2.0 * cfg.symbol_rate, Unit::Normalized)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet() -> LinkConfig {
        LinkConfig {
            snr_db: f64::INFINITY,
            ..LinkConfig::default()
        }
    }

    #[test]
    fn default_config_is_valid() {
        LinkConfig::default().validate().unwrap();
        let bad = LinkConfig {
            oversample: 5,
            ..LinkConfig::default()
        };
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        let bad = LinkConfig {
            rx_lpf_order: 31,
            ..LinkConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = LinkConfig {
            dac_bw_3db: 0.0,
            ..LinkConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn dac_constant_input_is_constant() {
        let cfg = quiet();
        let wf = dac_frontend(&[1; 64], &cfg).unwrap();
        let expected = ((1.0 / 14.0 + 0.5) * 255.0f64).round() / 255.0 - 0.5;
        assert_eq!(wf.len(), 64 * 8);
        for s in wf.samples() {
            assert!((s - expected).abs() < 1e-12);
        }
        assert!((expected - 1.0 / 14.0).abs() < 0.5 / 255.0);
    }

    #[test]
    fn dac_quantizer_cardinality() {
        let cfg = LinkConfig {
            dac_bw_3db: f64::INFINITY,
            ..quiet()
        };
        let symbols: Vec<i32> = (0..400).map(|i| 2 * (i % 8) - 7).collect();
        let wf = dac_frontend(&symbols, &cfg).unwrap();
        let mut distinct: Vec<f64> = wf.samples().to_vec();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        assert!(distinct.len() <= 256);
        for v in &distinct {
            let code = (v + 0.5) * 255.0;
            assert!((code - code.round()).abs() < 1e-9);
        }
        assert!(dac_frontend(&[9], &cfg).is_err());
    }

    #[test]
    fn drive_swing_examples() {
        let cfg = LinkConfig {
            vpp_dac: 290.0,
            ea_gain_db: 22.0,
            ..quiet()
        };
        assert!((cfg.drive_swing() - 3.6509).abs() < 1e-3);
        let wf = Waveform::new(vec![-0.5, 0.0, 0.5], 800.0, Unit::Volts).unwrap();
        let v = drive_voltage(&wf, &cfg).unwrap();
        assert!((v.samples()[1] + 3.1).abs() < 1e-12);
        assert!((v.samples()[2] - v.samples()[0] - cfg.drive_swing()).abs() < 1e-12);

        let zero = LinkConfig {
            vpp_dac: 0.0,
            ..cfg.clone()
        };
        assert!(drive_voltage(&wf, &zero)
            .unwrap()
            .samples()
            .iter()
            .all(|&x| x == -3.1));

        let unit = LinkConfig {
            vpp_dac: 1000.0,
            ea_gain_db: 0.0,
            ..cfg
        };
        let v = drive_voltage(&wf, &unit).unwrap();
        assert!((v.samples()[2] - v.samples()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eml_power_at_bias() {
        let wf = Waveform::new(vec![-3.1, 50.0, -50.0], 800.0, Unit::Volts).unwrap();
        let p = eml_transmit(&wf, &EmlCurve::default(), f64::INFINITY).unwrap();
        assert!((p.samples()[0] - 2.8).abs() < 1e-12);
        assert!((p.samples()[1] - 5.6).abs() < 1e-12);
        assert!(p.samples()[2].abs() < 1e-12);
        assert_eq!(p.unit(), Unit::Milliwatts);
    }

    #[test]
    fn unit_discipline() {
        let volts = Waveform::new(vec![0.0; 16], 800.0, Unit::Volts).unwrap();
        let mw = Waveform::new(vec![1.0; 16], 800.0, Unit::Milliwatts).unwrap();
        let cfg = quiet();
        assert!(matches!(
            photodetect(&volts, &cfg, 1),
            Err(Error::Contract(_))
        ));
        assert!(matches!(rx_frontend(&mw, &cfg), Err(Error::Contract(_))));
        assert!(matches!(
            eml_transmit(&mw, &cfg.eml, 55.0),
            Err(Error::Contract(_))
        ));
        assert!(matches!(drive_voltage(&mw, &cfg), Err(Error::Contract(_))));
        let negative = Waveform::new(vec![-1.0; 16], 800.0, Unit::Milliwatts).unwrap();
        assert!(matches!(
            photodetect(&negative, &cfg, 1),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn fiber_identities() {
        assert!((fiber_smallsignal(0.7, 0.0) - 0.7f64.cos().abs()).abs() < 1e-15);
        for beta in [-3.0, -0.5, 0.0, 0.4, 2.0] {
            assert!((fiber_smallsignal(0.0, beta) - 1.0).abs() < 1e-12);
        }
        assert!(fiber_smallsignal(std::f64::consts::FRAC_PI_4, 1.0) < 1e-15);
    }

    #[test]
    fn noiseless_detection_is_identity() {
        let cfg = LinkConfig {
            rx_bw_3db: f64::INFINITY,
            ..quiet()
        };
        let p = Waveform::new(vec![0.1, 2.0, 3.5, 0.0], 800.0, Unit::Milliwatts).unwrap();
        let i = photodetect(&p, &cfg, 9).unwrap();
        assert_eq!(i.samples(), p.samples());
        assert_eq!(i.unit(), Unit::Normalized);
    }

    #[test]
    fn noise_only_variance_and_determinism() {
        let cfg = LinkConfig {
            rx_bw_3db: f64::INFINITY,
            snr_db: 20.0,
            ..LinkConfig::default()
        };
        let sigma = cfg.noise_sigma();
        assert!((sigma - 0.28).abs() < 1e-12);
        let dark = Waveform::new(vec![0.0; 1_000_000], 800.0, Unit::Milliwatts).unwrap();
        let a = photodetect(&dark, &cfg, 5).unwrap();
        let var = a.samples().iter().map(|x| x * x).sum::<f64>() / a.len() as f64;
        assert!((var / (sigma * sigma) - 1.0).abs() < 0.01, "{var}");
        let b = photodetect(&dark, &cfg, 5).unwrap();
        assert_eq!(a, b);
        let c = photodetect(&dark, &cfg, 6).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rx_frontend_normalizes() {
        let cfg = LinkConfig::default();
        let x: Vec<f64> = (0..800)
            .map(|i| 3.0 + ((i * 7919) % 13) as f64 * 0.1)
            .collect();
        let wf = Waveform::new(x, cfg.sample_rate(), Unit::Normalized).unwrap();
        let y = rx_frontend(&wf, &cfg).unwrap();
        assert_eq!(y.len(), 200);
        assert!(y.mean().abs() < 1e-12);
        assert!((y.rms() - 1.0).abs() < 1e-12);
        assert_eq!(y.sample_rate(), 200.0);
        let ragged = Waveform::new(vec![0.0; 801], cfg.sample_rate(), Unit::Normalized).unwrap();
        assert!(rx_frontend(&ragged, &cfg).is_err());
    }

    #[test]
    fn extinction_ratio_grows_with_swing() {
        let ers: Vec<f64> = (0..=11)
            .map(|i| {
                LinkConfig {
                    vpp_dac: 200.0 + 30.0 * i as f64,
                    ..quiet()
                }
                .extinction_ratio_db()
            })
            .collect();
        assert!(ers.windows(2).all(|w| w[1] > w[0]), "{ers:?}");
    }
}
