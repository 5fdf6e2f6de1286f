//! Generalized Maxwell-Boltzmann shaping over PAM constellations.
//!
//! The family is `P(x) ∝ exp(-ν |x|^α)` on the odd-integer PAM alphabet.
//! Positive `ν` gives a cap (inner levels favored), negative `ν` a cup
//! (outer levels favored), and `α` is the Gaussian order (`α = 2` is the
//! classic MB distribution).

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt::sig_digits;

/// Smallest and largest supported bits per symbol.
pub const MIN_BITS: u32 = 2;
pub const MAX_BITS: u32 = 8;

/// Upper end of the |ν| bracket searched by [`solve_nu`].
pub const NU_BRACKET: f64 = 64.0;

const ENTROPY_TOL: f64 = 1e-9;
const MAX_BISECTIONS: usize = 400;

/// Stream id used by [`sample_symbols`] so symbol draws never share a
/// keystream with channel noise derived from the same seed.
pub(crate) const SYMBOL_STREAM: u64 = 1;

/// PAM alphabet `{±1, ±3, …, ±(2^m − 1)}` in ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PamConstellation {
    m: u32,
    levels: Vec<i32>,
}

impl PamConstellation {
    pub fn new(m: u32) -> Result<Self> {
        if !(MIN_BITS..=MAX_BITS).contains(&m) {
            return Err(Error::InvalidParameter(format!(
                "bits per symbol must be in [{MIN_BITS}, {MAX_BITS}], got {m}"
            )));
        }
        let max = (1i32 << m) - 1;
        let levels = (0..1i32 << m).map(|i| 2 * i - max).collect();
        Ok(Self { m, levels })
    }

    /// PAM-8.
    pub fn pam8() -> Self {
        Self::new(3).expect("m = 3 is valid")
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.m
    }

    pub fn levels(&self) -> &[i32] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn max_level(&self) -> i32 {
        (1 << self.m) - 1
    }

    /// Position of `level` in [`levels`](Self::levels), if it belongs to the alphabet.
    pub fn index_of(&self, level: i32) -> Option<usize> {
        let max = self.max_level();
        if level.rem_euclid(2) == 1 && (-max..=max).contains(&level) {
            Some(((level + max) / 2) as usize)
        } else {
            None
        }
    }
}

/// Shape of the MB distribution, fixed by the sign of ν.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Cap,
    Cup,
}

impl Polarity {
    fn sign(self) -> f64 {
        match self {
            Polarity::Cap => 1.0,
            Polarity::Cup => -1.0,
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarity::Cap => "cap",
            Polarity::Cup => "cup",
        })
    }
}

impl FromStr for Polarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cap" => Ok(Polarity::Cap),
            "cup" => Ok(Polarity::Cup),
            other => Err(Error::InvalidParameter(format!(
                "polarity must be `cap` or `cup`, got `{other}`"
            ))),
        }
    }
}

/// A symmetric probability mass function over a [`PamConstellation`].
#[derive(Debug, Clone, PartialEq)]
pub struct ShapedDistribution {
    constellation: PamConstellation,
    probabilities: Vec<f64>,
    nu: f64,
    alpha: f64,
    polarity: Polarity,
}

impl ShapedDistribution {
    /// Uniform distribution (ν = 0, reported as cap).
    pub fn uniform(m: u32) -> Result<Self> {
        mb_pmf(0.0, 2.0, m)
    }

    pub fn constellation(&self) -> &PamConstellation {
        &self.constellation
    }

    /// Probabilities aligned with `constellation().levels()`.
    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn polarity(&self) -> Polarity {
        self.polarity
    }

    pub fn is_uniform(&self) -> bool {
        self.nu == 0.0
    }

    pub fn probability(&self, level: i32) -> Option<f64> {
        self.constellation
            .index_of(level)
            .map(|i| self.probabilities[i])
    }

    /// Entropy in bits; shorthand for [`entropy`].
    pub fn entropy(&self) -> f64 {
        entropy(self)
    }

    /// Writes the PMF as `level,probability` rows, levels ascending.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "level,probability")?;
        for (level, p) in self.constellation.levels.iter().zip(&self.probabilities) {
            writeln!(out, "{level},{}", sig_digits(*p, 12))?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }
}

/// Builds `P(x) ∝ exp(-ν |x|^α)` over the 2^m-PAM alphabet.
pub fn mb_pmf(nu: f64, alpha: f64, m: u32) -> Result<ShapedDistribution> {
    if !nu.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "nu must be finite, got {nu}"
        )));
    }
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "alpha must be finite and positive, got {alpha}"
        )));
    }
    let constellation = PamConstellation::new(m)?;
    let half = constellation.len() / 2;

    // Magnitudes 1, 3, …, 2^m − 1; the negative half mirrors them.
    let log_weights: Vec<f64> = (0..half)
        .map(|k| -nu * ((2 * k + 1) as f64).powf(alpha))
        .collect();
    let peak = log_weights
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = log_weights.iter().map(|lw| (lw - peak).exp()).collect();
    let total = 2.0 * weights.iter().sum::<f64>();
    // Deep tails underflow; keep them at the smallest normal so every level stays drawable in principle.
    let magnitude_pmf: Vec<f64> = weights
        .iter()
        .map(|w| (w / total).max(f64::MIN_POSITIVE))
        .collect();

    let probabilities = magnitude_pmf
        .iter()
        .rev()
        .chain(magnitude_pmf.iter())
        .copied()
        .collect();

    Ok(ShapedDistribution {
        constellation,
        probabilities,
        nu,
        alpha,
        polarity: if nu >= 0.0 {
            Polarity::Cap
        } else {
            Polarity::Cup
        },
    })
}

/// Entropy `-Σ p log₂ p` in bits per symbol.
pub fn entropy(dist: &ShapedDistribution) -> f64 {
    dist.probabilities
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum()
}

/// Finds ν (sign fixed by `polarity`) such that the MB distribution of order
/// `alpha` has entropy `target_entropy` bits.
///
/// Entropy is strictly decreasing in |ν|, so plain bisection on
/// `[0, NU_BRACKET]` converges.
pub fn solve_nu(target_entropy: f64, alpha: f64, m: u32, polarity: Polarity) -> Result<f64> {
    PamConstellation::new(m)?;
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "alpha must be finite and positive, got {alpha}"
        )));
    }
    let m_bits = f64::from(m);
    if !target_entropy.is_finite() || target_entropy <= 0.0 || target_entropy > m_bits {
        return Err(Error::Domain(format!(
            "target entropy must lie in (0, {m_bits}], got {target_entropy}"
        )));
    }
    if target_entropy == m_bits {
        return Ok(0.0);
    }

    let sign = polarity.sign();
    let entropy_at = |mag: f64| -> Result<f64> { Ok(entropy(&mb_pmf(sign * mag, alpha, m)?)) };

    let (mut lo, mut hi) = (0.0_f64, NU_BRACKET);
    if entropy_at(hi)? > target_entropy {
        return Err(Error::Domain(format!(
            "target entropy {target_entropy} is below the {polarity} family's reach at |nu| = {NU_BRACKET}"
        )));
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let h = entropy_at(mid)?;
        if (h - target_entropy).abs() < 0.1 * ENTROPY_TOL {
            return Ok(sign * mid);
        }
        if h > target_entropy {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    let mid = 0.5 * (lo + hi);
    let h = entropy_at(mid)?;
    if (h - target_entropy).abs() < ENTROPY_TOL {
        Ok(sign * mid)
    } else {
        Err(Error::Numerical(format!(
            "nu bisection stalled at |nu| = {mid} with entropy {h} (target {target_entropy})"
        )))
    }
}

/// Solves for ν at `target_entropy` and returns the resulting distribution.
pub fn design_for_entropy(
    target_entropy: f64,
    alpha: f64,
    m: u32,
    polarity: Polarity,
) -> Result<ShapedDistribution> {
    let nu = solve_nu(target_entropy, alpha, m, polarity)?;
    mb_pmf(nu, alpha, m)
}

/// Distribution whose PS overhead `m/H − 1` equals `ps_overhead`.
pub fn design_for_overhead(
    ps_overhead: f64,
    alpha: f64,
    m: u32,
    polarity: Polarity,
) -> Result<ShapedDistribution> {
    if !ps_overhead.is_finite() || ps_overhead < 0.0 {
        return Err(Error::Domain(format!(
            "PS overhead must be a non-negative fraction, got {ps_overhead}"
        )));
    }
    design_for_entropy(f64::from(m) / (1.0 + ps_overhead), alpha, m, polarity)
}

/// Draws `n` i.i.d. symbols by inverse-CDF lookup. Deterministic in `seed`.
pub fn sample_symbols(dist: &ShapedDistribution, n: usize, seed: u64) -> Vec<i32> {
    let mut cdf = Vec::with_capacity(dist.probabilities.len());
    let mut acc = 0.0;
    for p in &dist.probabilities {
        acc += p;
        cdf.push(acc);
    }
    let levels = dist.constellation.levels();
    let last = levels.len() - 1;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SYMBOL_STREAM);
    (0..n)
        .map(|_| {
            let u: f64 = rng.gen();
            let idx = cdf.partition_point(|&c| c <= u).min(last);
            levels[idx]
        })
        .collect()
}
