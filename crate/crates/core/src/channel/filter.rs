//! Linear-phase FIR low-pass filters.
//!
//! All filters are odd-length, symmetric and applied zero-phase with
//! circular wrap-around: the transmitter replays its symbol memory
//! periodically, so the simulated waveforms are one period of a periodic
//! signal and have no start-up transient.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Symmetric FIR taps, centered on the middle coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct Fir {
    taps: Vec<f64>,
}

impl Fir {
    pub fn identity() -> Self {
        Self { taps: vec![1.0] }
    }

    /// Gaussian-magnitude low-pass with `|H(f_3dB)|² = ½` and unity DC gain.
    ///
    /// `bw_3db` and `sample_rate` share a unit (GHz and GSa/s). An infinite
    /// bandwidth yields the identity filter.
    pub fn gaussian(bw_3db: f64, sample_rate: f64) -> Result<Self> {
        if bw_3db.is_infinite() && bw_3db > 0.0 {
            return Ok(Self::identity());
        }
        if !(bw_3db > 0.0 && sample_rate > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gaussian filter needs positive bandwidth and rate, got {bw_3db} / {sample_rate}"
            )));
        }
        // |H(f)| = exp(-2π²σ²f²) reaches 1/√2 at f = f_3dB.
        let sigma = (2f64.ln()).sqrt() / (2.0 * PI * bw_3db / sample_rate);
        let half = (4.0 * sigma).ceil().max(1.0) as usize;
        let mut taps: Vec<f64> = (0..=2 * half)
            .map(|i| {
                let k = i as f64 - half as f64;
                (-k * k / (2.0 * sigma * sigma)).exp()
            })
            .collect();
        normalize_dc(&mut taps);
        Ok(Self { taps })
    }

    /// Hamming-windowed sinc low-pass of even `order` (`order + 1` taps).
    ///
    /// `cutoff` is the −6 dB frequency as a fraction of `sample_rate`;
    /// values at or beyond Nyquist give the identity filter.
    pub fn windowed_sinc(order: usize, cutoff: f64) -> Result<Self> {
        if !order.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "low-pass order must be even for an integer group delay, got {order}"
            )));
        }
        if !(cutoff > 0.0) {
            return Err(Error::Config(format!(
                "low-pass cutoff must be positive, got {cutoff}"
            )));
        }
        if cutoff >= 0.5 || order == 0 {
            return Ok(Self::identity());
        }
        let mid = (order / 2) as f64;
        let mut taps: Vec<f64> = (0..=order)
            .map(|n| {
                let t = n as f64 - mid;
                let sinc = if t == 0.0 {
                    2.0 * cutoff
                } else {
                    (2.0 * PI * cutoff * t).sin() / (PI * t)
                };
                let window = 0.54 - 0.46 * (2.0 * PI * n as f64 / order as f64).cos();
                sinc * window
            })
            .collect();
        normalize_dc(&mut taps);
        Ok(Self { taps })
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Magnitude response at `freq` (fraction of the sample rate).
    pub fn magnitude(&self, freq: f64) -> f64 {
        let half = (self.taps.len() / 2) as f64;
        let (re, im) = self
            .taps
            .iter()
            .enumerate()
            .fold((0.0, 0.0), |(re, im), (i, h)| {
                let phase = -2.0 * PI * freq * (i as f64 - half);
                (re + h * phase.cos(), im + h * phase.sin())
            });
        re.hypot(im)
    }

    /// Zero-phase circular convolution.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        if self.taps.len() == 1 || n == 0 {
            return x.iter().map(|v| v * self.taps[0]).collect();
        }
        let half = self.taps.len() / 2;
        // periodic extension by `half` samples on each side
        let padded: Vec<f64> = (0..n + 2 * half)
            .map(|i| x[(i + n * (1 + half / n) - half) % n])
            .collect();
        padded
            .windows(self.taps.len())
            .map(|w| w.iter().zip(&self.taps).map(|(a, h)| a * h).sum())
            .collect()
    }
}

fn normalize_dc(taps: &mut [f64]) {
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone_gain(fir: &Fir, freq: f64, n: usize) -> f64 {
        // Integer number of cycles so the circular filter sees a periodic tone.
        let x: Vec<f64> = (0..n).map(|i| (2.0 * PI * freq * i as f64).cos()).collect();
        let y = fir.apply(&x);
        let proj = |s: &[f64], f: fn(f64) -> f64| {
            s.iter()
                .enumerate()
                .map(|(i, v)| v * f(2.0 * PI * freq * i as f64))
                .sum::<f64>()
        };
        let amp = |s: &[f64]| (proj(s, f64::cos).powi(2) + proj(s, f64::sin).powi(2)).sqrt();
        amp(&y) / amp(&x)
    }

    #[test]
    fn gaussian_three_db_point() {
        for (bw, fs) in [(25.0, 800.0), (55.0, 880.0), (65.0, 800.0)] {
            let fir = Fir::gaussian(bw, fs).unwrap();
            let n = 4000;
            // snap the tone onto the DFT grid, then compare against the exact target gain there
            let cycles = (bw / fs * n as f64).round();
            let f = cycles / n as f64;
            let gain_db = 20.0 * tone_gain(&fir, f, n).log10();
            let expected_db = -3.0 * (f * fs / bw).powi(2);
            assert!(
                (gain_db - expected_db).abs() < 0.2,
                "{bw}: {gain_db} vs {expected_db}"
            );
            assert!((20.0 * fir.magnitude(bw / fs).log10() + 3.0).abs() < 0.2);
        }
    }

    #[test]
    fn unity_dc_gain() {
        let x = vec![0.3; 100];
        for fir in [
            Fir::gaussian(25.0, 800.0).unwrap(),
            Fir::windowed_sinc(30, 0.3).unwrap(),
        ] {
            for y in fir.apply(&x) {
                assert!((y - 0.3).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn infinite_bandwidth_is_identity() {
        assert_eq!(
            Fir::gaussian(f64::INFINITY, 800.0).unwrap(),
            Fir::identity()
        );
        assert!(Fir::gaussian(0.0, 800.0).is_err());
        assert!(Fir::windowed_sinc(31, 0.3).is_err());
        assert_eq!(Fir::windowed_sinc(30, 0.6).unwrap(), Fir::identity());
    }

    #[test]
    fn circular_convolution_is_zero_phase() {
        let fir = Fir::gaussian(100.0, 800.0).unwrap();
        let mut x = vec![0.0; 64];
        x[10] = 1.0;
        let y = fir.apply(&x);
        let peak = y
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(peak, 10);
        assert!((y[9] - y[11]).abs() < 1e-15);
        // wrap-around near the edge
        let mut z = vec![0.0; 64];
        z[0] = 1.0;
        let w = fir.apply(&z);
        assert!((w[63] - w[1]).abs() < 1e-15);
    }

    #[test]
    fn windowed_sinc_attenuates_stopband() {
        let fir = Fir::windowed_sinc(30, 0.3).unwrap();
        assert!(fir.magnitude(0.0) > 0.999);
        assert!(fir.magnitude(0.45) < 0.01);
    }
}
