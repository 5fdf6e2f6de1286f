//! Error counting, hard-decision rate accounting and level histograms.
//!
//! Rates are in Gb/s when the symbol rate is in GBd. The FEC is described by
//! its overhead `fec_oh`, with code rate `R = 1 / (1 + fec_oh)`.

use std::io::Write;

use crate::channel::label_of;
use crate::error::{Error, Result};
use crate::shaping::PamConstellation;

/// Pre-FEC BER threshold of the 7 % overhead hard-decision FEC.
pub const HD_FEC_THRESHOLD: f64 = 4.6e-3;
/// Overhead of that FEC.
pub const HD_FEC_OVERHEAD: f64 = 0.07;

/// Range covered by [`level_histogram`].
pub const HISTOGRAM_RANGE: (f64, f64) = (-9.0, 9.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BitErrors {
    pub bit_errors: u64,
    pub symbol_errors: u64,
    pub bits_compared: u64,
    pub ber: f64,
}

/// Gray-demaps both streams and counts differing bits.
pub fn ber_count(tx: &[i32], rx: &[i32], m: u32) -> Result<BitErrors> {
    if tx.len() != rx.len() {
        return Err(Error::Contract(format!(
            "symbol streams differ in length ({} vs {})",
            tx.len(),
            rx.len()
        )));
    }
    let c = PamConstellation::new(m)?;
    let label = |s: i32| {
        label_of(s, &c)
            .ok_or_else(|| Error::InvalidParameter(format!("{s} is not a PAM-{} level", c.len())))
    };
    let mut bit_errors = 0u64;
    let mut symbol_errors = 0u64;
    for (&a, &b) in tx.iter().zip(rx) {
        if a != b {
            symbol_errors += 1;
            bit_errors += u64::from((label(a)? ^ label(b)?).count_ones());
        }
    }
    let bits_compared = tx.len() as u64 * u64::from(m);
    Ok(BitErrors {
        bit_errors,
        symbol_errors,
        bits_compared,
        ber: if bits_compared == 0 {
            0.0
        } else {
            bit_errors as f64 / bits_compared as f64
        },
    })
}

/// `H₂(p) = −p log₂ p − (1−p) log₂(1−p)` with `0 · log 0 = 0`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!(
            "probability must lie in [0, 1], got {p}"
        )));
    }
    let xlnx = |x: f64| if x == 0.0 { 0.0 } else { x * x.ln() };
    Ok(-(xlnx(p) + xlnx(1.0 - p)) / std::f64::consts::LN_2)
}

/// Hard-decision achievable spectral efficiency `[H − m·H₂(BER)]⁺`.
pub fn se_hd(entropy_bits: f64, m: u32, ber: f64) -> Result<f64> {
    Ok((entropy_bits - f64::from(m) * binary_entropy(ber)?).max(0.0))
}

/// Achievable information rate `f_s · SE`.
pub fn air(symbol_rate: f64, se: f64) -> f64 {
    symbol_rate * se
}

/// Convenience: AIR straight from a measured BER.
pub fn air_from_ber(symbol_rate: f64, entropy_bits: f64, m: u32, ber: f64) -> Result<f64> {
    Ok(air(symbol_rate, se_hd(entropy_bits, m, ber)?))
}

fn fec_rate(fec_oh: f64) -> Result<f64> {
    if !(fec_oh >= 0.0 && fec_oh.is_finite()) {
        return Err(Error::Domain(format!(
            "FEC overhead must be >= 0, got {fec_oh}"
        )));
    }
    Ok(1.0 / (1.0 + fec_oh))
}

/// True when the FEC produces at most one parity bit per symbol (`R > (m−1)/m`).
pub fn fec_rate_is_admissible(m: u32, fec_oh: f64) -> bool {
    fec_rate(fec_oh).is_ok_and(|r| r > f64::from(m - 1) / f64::from(m))
}

/// PAS spectral efficiency with an ideal matcher, `[H − m(1 − R)]⁺`.
pub fn se_pas(entropy_bits: f64, m: u32, fec_oh: f64) -> Result<f64> {
    let r = fec_rate(fec_oh)?;
    Ok((entropy_bits - f64::from(m) * (1.0 - r)).max(0.0))
}

/// Shaping overhead `m/H − 1`.
pub fn ps_overhead(entropy_bits: f64, m: u32) -> Result<f64> {
    if !(entropy_bits > 0.0) {
        return Err(Error::Domain(format!(
            "entropy must be positive, got {entropy_bits}"
        )));
    }
    Ok(f64::from(m) / entropy_bits - 1.0)
}

/// Combined FEC and shaping overhead `1/(R + H/m − 1) − 1`.
pub fn total_overhead(entropy_bits: f64, m: u32, fec_oh: f64) -> Result<f64> {
    let r = fec_rate(fec_oh)?;
    let denom = r + entropy_bits / f64::from(m) - 1.0;
    if !(denom > 0.0) {
        return Err(Error::Domain("overheads leave no net rate".into()));
    }
    Ok(1.0 / denom - 1.0)
}

/// Operational net bit rate; `None` when the BER misses the FEC threshold.
pub fn onbr(
    symbol_rate: f64,
    entropy_bits: f64,
    m: u32,
    fec_oh: f64,
    ber: f64,
    threshold: f64,
) -> Result<Option<f64>> {
    if !(threshold > 0.0) {
        return Err(Error::Domain(format!(
            "BER threshold must be positive, got {threshold}"
        )));
    }
    if ber > threshold {
        return Ok(None);
    }
    Ok(Some(symbol_rate * se_pas(entropy_bits, m, fec_oh)?))
}

/// Per-transmitted-level histograms of equalized values on [−9, 9].
#[derive(Debug, Clone, PartialEq)]
pub struct LevelHistograms {
    pub levels: Vec<i32>,
    pub bin_centers: Vec<f64>,
    /// `counts[level_index][bin]`
    pub counts: Vec<Vec<u64>>,
    pub aggregate: Vec<u64>,
}

impl LevelHistograms {
    pub fn total(&self) -> u64 {
        self.aggregate.iter().sum()
    }

    /// Sum over adjacent level pairs of the shared probability mass
    /// `Σ_b min(p_i(b), p_{i+1}(b))` of their normalized histograms.
    pub fn adjacent_overlap(&self) -> f64 {
        let normalized: Vec<Option<Vec<f64>>> = self
            .counts
            .iter()
            .map(|c| {
                let n: u64 = c.iter().sum();
                (n > 0).then(|| c.iter().map(|&k| k as f64 / n as f64).collect())
            })
            .collect();
        normalized
            .windows(2)
            .filter_map(|w| match (&w[0], &w[1]) {
                (Some(a), Some(b)) => Some(a.iter().zip(b).map(|(x, y)| x.min(*y)).sum::<f64>()),
                _ => None,
            })
            .sum()
    }

    /// `level,bin_center,count`; aggregate rows use level `all`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "level,bin_center,count")?;
        for (level, counts) in self.levels.iter().zip(&self.counts) {
            for (c, k) in self.bin_centers.iter().zip(counts) {
                writeln!(out, "{level},{c},{k}")?;
            }
        }
        for (c, k) in self.bin_centers.iter().zip(&self.aggregate) {
            writeln!(out, "all,{c},{k}")?;
        }
        Ok(())
    }
}

/// Bins equalized values by their transmitted level. Out-of-range values fall in the edge bins.
pub fn level_histogram(
    equalized: &[f64],
    tx_symbols: &[i32],
    constellation: &PamConstellation,
    bins: usize,
) -> Result<LevelHistograms> {
    if bins < 8 {
        return Err(Error::Config(format!(
            "histogram needs at least 8 bins, got {bins}"
        )));
    }
    if equalized.len() != tx_symbols.len() {
        return Err(Error::Contract(format!(
            "{} equalized values for {} transmitted symbols",
            equalized.len(),
            tx_symbols.len()
        )));
    }
    let (lo, hi) = HISTOGRAM_RANGE;
    let width = (hi - lo) / bins as f64;
    let bin_centers = (0..bins).map(|b| lo + width * (b as f64 + 0.5)).collect();
    let mut counts = vec![vec![0u64; bins]; constellation.len()];
    let mut aggregate = vec![0u64; bins];
    for (&y, &s) in equalized.iter().zip(tx_symbols) {
        let li = constellation
            .index_of(s)
            .ok_or_else(|| Error::InvalidParameter(format!("{s} is not a constellation level")))?;
        let b = ((y - lo) / width).floor().clamp(0.0, (bins - 1) as f64) as usize;
        counts[li][b] += 1;
        aggregate[b] += 1;
    }
    Ok(LevelHistograms {
        levels: constellation.levels().to_vec(),
        bin_centers,
        counts,
        aggregate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ber_identical_and_adjacent() {
        let tx: Vec<i32> = (0..80).map(|i| 2 * (i % 8) - 7).collect();
        let r = ber_count(&tx, &tx, 3).unwrap();
        assert_eq!((r.bit_errors, r.ber), (0, 0.0));

        // shift every symbol to a neighbour: exactly one bit flips each time
        let shifted: Vec<i32> = tx.iter().map(|&s| if s == 7 { 5 } else { s + 2 }).collect();
        let r = ber_count(&tx, &shifted, 3).unwrap();
        assert_eq!(r.ber, 1.0 / 3.0);
        assert_eq!(r.symbol_errors, 80);

        let mut one = tx.clone();
        one[17] = if one[17] == 7 { 5 } else { one[17] + 2 };
        let r = ber_count(&tx, &one, 3).unwrap();
        assert_eq!(r.ber, 1.0 / (3.0 * 80.0));

        assert!(matches!(
            ber_count(&tx, &tx[1..], 3),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn binary_entropy_values() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!((binary_entropy(0.0103).unwrap() - 0.08278).abs() < 1e-5);
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.1).is_err());
    }

    #[test]
    fn rate_examples() {
        assert_eq!(se_hd(3.0, 3, 0.0).unwrap(), 3.0);
        assert_eq!(se_hd(3.0, 3, 0.5).unwrap(), 0.0);
        assert!((se_hd(2.7735, 3, 0.0046).unwrap() - 2.6465).abs() < 5e-4);
        assert!((air(100.0, 2.75167) - 275.17).abs() < 0.05);
        assert!((air(115.0, 2.76560) - 318.05).abs() < 0.05);
        assert_eq!(air(110.0, 0.0), 0.0);

        assert!((se_pas(3.0, 3, 0.07).unwrap() - 2.80374).abs() < 1e-5);
        assert!((se_pas(2.7735, 3, 0.07).unwrap() - 2.577238).abs() < 1e-6);
        assert_eq!(se_pas(2.5, 3, 0.0).unwrap(), 2.5);
        assert!(se_pas(3.0, 3, -0.1).is_err());

        assert_eq!(ps_overhead(3.0, 3).unwrap(), 0.0);
        assert!((ps_overhead(2.7735, 3).unwrap() - 0.0817).abs() < 2e-4);
        assert!((total_overhead(3.0, 3, 0.07).unwrap() - 0.07).abs() < 1e-12);
        assert!(fec_rate_is_admissible(3, 0.07));
        assert!(!fec_rate_is_admissible(3, 0.6));
    }

    #[test]
    fn onbr_examples() {
        let v = onbr(120.0, 2.7735, 3, 0.07, 0.00451, 0.0046)
            .unwrap()
            .unwrap();
        assert!((v - 309.26).abs() < 0.05);
        let v = onbr(105.0, 3.0, 3, 0.07, 0.0040, 0.0046).unwrap().unwrap();
        assert!((v - 294.39).abs() < 0.05);
        assert_eq!(onbr(110.0, 3.0, 3, 0.07, 0.0055, 0.0046).unwrap(), None);
        assert!(onbr(110.0, 3.0, 3, 0.07, 0.0055, 0.0).is_err());
    }

    #[test]
    fn histograms() {
        let c = PamConstellation::pam8();
        let tx: Vec<i32> = (0..800).map(|i| 2 * (i % 8) - 7).collect();
        let eq: Vec<f64> = tx.iter().map(|&s| f64::from(s)).collect();
        let h = level_histogram(&eq, &tx, &c, 36).unwrap();
        assert_eq!(h.total(), 800);
        for (li, counts) in h.counts.iter().enumerate() {
            let nonzero: Vec<usize> = (0..36).filter(|&b| counts[b] > 0).collect();
            assert_eq!(nonzero.len(), 1);
            let center = h.bin_centers[nonzero[0]];
            assert!((center - f64::from(h.levels[li])).abs() <= 0.25);
        }
        assert_eq!(h.adjacent_overlap(), 0.0);
        // outliers land in the edge bins
        let h = level_histogram(&[-50.0, 50.0], &[-7, 7], &c, 18).unwrap();
        assert_eq!(h.aggregate[0] + h.aggregate[17], 2);
        assert!(level_histogram(&eq, &tx, &c, 7).is_err());
    }
}
