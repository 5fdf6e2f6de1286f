//! T/2-spaced feed-forward and Volterra equalizers trained by ridge least squares.
//!
//! # Feature layout
//!
//! For symbol `n` on a 2 samples/symbol input `x` (even samples are symbol
//! centers) a feature row is the concatenation of
//!
//! 1. `linear_taps` samples `x[2n − L/2 ..= 2n + L/2]` (T/2-spaced, `L` odd);
//! 2. products `s_i s_j`, `i ≤ j`, over the symbol-spaced window
//!    `s_k = x[2(n + k − M₂/2)]`, `k = 0..M₂`, in lexicographic `(i, j)` order;
//! 3. products `s_i s_j s_k`, `i ≤ j ≤ k`, over the `M₃`-symbol window, lexicographic.
//!
//! The equalizer output is the dot product of that row with the concatenated
//! kernels `h1 ‖ h2 ‖ h3`. There is no bias term; receive waveforms are zero-mean.

use std::io::Write;
use std::ops::Range;
use std::path::Path;

use rayon::prelude::*;
use serde::Deserialize;

use crate::channel::Waveform;
use crate::error::{Error, Result};
use crate::shaping::PamConstellation;

/// Input samples per symbol expected by every equalizer.
pub const INPUT_SPS: usize = 2;

const ROW_CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EqualizerConfig {
    /// Label used in result tables ("FFE", "VNLE", ...).
    pub name: String,
    pub linear_taps: usize,
    /// Symbols in the 2nd-order window; 0 disables the 2nd-order kernel.
    pub v2_memory: usize,
    /// Symbols in the 3rd-order window; 0 disables the 3rd-order kernel.
    pub v3_memory: usize,
    pub ridge_lambda: f64,
    /// Leading symbols of each trial used for training.
    pub training_len: usize,
}

impl Default for EqualizerConfig {
    fn default() -> Self {
        Self::ffe(31)
    }
}

impl EqualizerConfig {
    pub fn ffe(linear_taps: usize) -> Self {
        Self {
            name: "FFE".into(),
            linear_taps,
            v2_memory: 0,
            v3_memory: 0,
            ridge_lambda: 1e-6,
            training_len: 20_000,
        }
    }

    pub fn vnle(linear_taps: usize, v2_memory: usize, v3_memory: usize) -> Self {
        Self {
            name: "VNLE".into(),
            v2_memory,
            v3_memory,
            ..Self::ffe(linear_taps)
        }
    }

    pub fn layout(&self) -> FeatureLayout {
        FeatureLayout {
            linear_taps: self.linear_taps,
            v2_memory: self.v2_memory,
            v3_memory: self.v3_memory,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.linear_taps == 0 || self.linear_taps.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "linear_taps must be odd and >= 1, got {}",
                self.linear_taps
            )));
        }
        if !(self.ridge_lambda >= 0.0 && self.ridge_lambda.is_finite()) {
            return Err(Error::Config(format!(
                "ridge_lambda must be >= 0, got {}",
                self.ridge_lambda
            )));
        }
        let needed = 4 * self.layout().len();
        if self.training_len < needed {
            return Err(Error::Config(format!(
                "training_len {} is below 4x the {} free coefficients",
                self.training_len,
                self.layout().len()
            )));
        }
        Ok(())
    }
}

/// Dimensions of a Volterra feature row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureLayout {
    pub linear_taps: usize,
    pub v2_memory: usize,
    pub v3_memory: usize,
}

fn pairs(m: usize) -> usize {
    m * (m + 1) / 2
}

fn triples(m: usize) -> usize {
    m * (m + 1) * (m + 2) / 6
}

impl FeatureLayout {
    pub fn second_order_len(&self) -> usize {
        pairs(self.v2_memory)
    }

    pub fn third_order_len(&self) -> usize {
        triples(self.v3_memory)
    }

    /// Total coefficient count.
    pub fn len(&self) -> usize {
        self.linear_taps + self.second_order_len() + self.third_order_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Symbol indices with full context in a block of `symbols` symbols.
    pub fn valid_range(&self, symbols: usize) -> Range<usize> {
        let half_lin = self.linear_taps / 2;
        let back = |m: usize| m / 2;
        let ahead = |m: usize| m.saturating_sub(1 + m / 2);
        let lo = half_lin
            .div_ceil(2)
            .max(back(self.v2_memory))
            .max(back(self.v3_memory));
        // 2n + L/2 must stay below 2·symbols
        let hi_margin = half_lin
            .saturating_sub(1)
            .div_ceil(2)
            .max(ahead(self.v2_memory))
            .max(ahead(self.v3_memory));
        lo..symbols.saturating_sub(hi_margin).max(lo)
    }

    /// Writes the row for symbol `n` into `row`; samples outside `x` read as zero.
    fn fill(&self, x: &[f64], n: usize, row: &mut [f64]) {
        let at = |i: isize| -> f64 {
            if i >= 0 && (i as usize) < x.len() {
                x[i as usize]
            } else {
                0.0
            }
        };
        let center = (INPUT_SPS * n) as isize;
        let half_lin = (self.linear_taps / 2) as isize;
        let mut pos = 0;
        for j in -half_lin..=half_lin {
            row[pos] = at(center + j);
            pos += 1;
        }
        let window = |m: usize| -> Vec<f64> {
            let start = n as isize - (m / 2) as isize;
            (0..m as isize)
                .map(|k| at(INPUT_SPS as isize * (start + k)))
                .collect()
        };
        if self.v2_memory > 0 {
            let s = window(self.v2_memory);
            for i in 0..s.len() {
                for j in i..s.len() {
                    row[pos] = s[i] * s[j];
                    pos += 1;
                }
            }
        }
        if self.v3_memory > 0 {
            let s = window(self.v3_memory);
            for i in 0..s.len() {
                for j in i..s.len() {
                    let sij = s[i] * s[j];
                    for sk in &s[j..] {
                        row[pos] = sij * sk;
                        pos += 1;
                    }
                }
            }
        }
        debug_assert_eq!(pos, self.len());
    }

    /// Lag labels per coefficient: `(order, lag1, lag2, lag3)`, unused lags −1.
    ///
    /// Linear lags are in T/2 samples relative to the center; nonlinear lags
    /// are symbol offsets relative to the decided symbol.
    pub fn lags(&self) -> Vec<(u8, i32, i32, i32)> {
        let mut out = Vec::with_capacity(self.len());
        let half = (self.linear_taps / 2) as i32;
        out.extend((-half..=half).map(|j| (1, j, -1, -1)));
        let offsets =
            |m: usize| -> Vec<i32> { (0..m as i32).map(|k| k - (m / 2) as i32).collect() };
        let o2 = offsets(self.v2_memory);
        for i in 0..o2.len() {
            for j in i..o2.len() {
                out.push((2, o2[i], o2[j], -1));
            }
        }
        let o3 = offsets(self.v3_memory);
        for i in 0..o3.len() {
            for j in i..o3.len() {
                for k in j..o3.len() {
                    out.push((3, o3[i], o3[j], o3[k]));
                }
            }
        }
        out
    }
}

/// Trained kernels; `h2`/`h3` follow the lexicographic order of [`FeatureLayout`].
#[derive(Debug, Clone, PartialEq)]
pub struct VolterraKernels {
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    pub h3: Vec<f64>,
    v2_memory: usize,
    v3_memory: usize,
}

impl VolterraKernels {
    pub fn new(
        h1: Vec<f64>,
        h2: Vec<f64>,
        h3: Vec<f64>,
        v2_memory: usize,
        v3_memory: usize,
    ) -> Result<Self> {
        if h1.is_empty() || h1.len().is_multiple_of(2) {
            return Err(Error::Shape(format!(
                "h1 must have odd length, got {}",
                h1.len()
            )));
        }
        if h2.len() != pairs(v2_memory) {
            return Err(Error::Shape(format!(
                "h2 has {} coefficients, memory {v2_memory} needs {}",
                h2.len(),
                pairs(v2_memory)
            )));
        }
        if h3.len() != triples(v3_memory) {
            return Err(Error::Shape(format!(
                "h3 has {} coefficients, memory {v3_memory} needs {}",
                h3.len(),
                triples(v3_memory)
            )));
        }
        if h1.iter().chain(&h2).chain(&h3).any(|c| !c.is_finite()) {
            return Err(Error::Shape("kernel coefficients must be finite".into()));
        }
        Ok(Self {
            h1,
            h2,
            h3,
            v2_memory,
            v3_memory,
        })
    }

    /// Unit center tap, no nonlinear terms.
    pub fn identity(linear_taps: usize) -> Result<Self> {
        let mut h1 = vec![0.0; linear_taps];
        if linear_taps > 0 {
            h1[linear_taps / 2] = 1.0;
        }
        Self::new(h1, Vec::new(), Vec::new(), 0, 0)
    }

    pub fn layout(&self) -> FeatureLayout {
        FeatureLayout {
            linear_taps: self.h1.len(),
            v2_memory: self.v2_memory,
            v3_memory: self.v3_memory,
        }
    }

    fn flat(&self) -> Vec<f64> {
        self.h1
            .iter()
            .chain(&self.h2)
            .chain(&self.h3)
            .copied()
            .collect()
    }

    fn from_flat(w: &[f64], layout: FeatureLayout) -> Result<Self> {
        let (h1, rest) = w.split_at(layout.linear_taps);
        let (h2, h3) = rest.split_at(layout.second_order_len());
        Self::new(
            h1.to_vec(),
            h2.to_vec(),
            h3.to_vec(),
            layout.v2_memory,
            layout.v3_memory,
        )
    }

    /// `order,lag1,lag2,lag3,value` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "order,lag1,lag2,lag3,value")?;
        for ((order, l1, l2, l3), v) in self.layout().lags().into_iter().zip(self.flat()) {
            writeln!(out, "{order},{l1},{l2},{l3},{v:e}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(input: R, origin: &Path) -> Result<Self> {
        let parse_err = |message: String| Error::Parse {
            path: origin.to_path_buf(),
            message,
        };
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(input);
        let mut rows: Vec<(u8, i32, i32, i32, f64)> = Vec::new();
        for rec in reader.deserialize() {
            rows.push(rec.map_err(|e: csv::Error| parse_err(e.to_string()))?);
        }
        let count = |o: u8| rows.iter().filter(|r| r.0 == o).count();
        let memory_for = |n: usize, f: fn(usize) -> usize| -> Result<usize> {
            (0..=64)
                .find(|&m| f(m) == n)
                .ok_or_else(|| Error::Shape(format!("{n} coefficients match no memory length")))
        };
        let layout = FeatureLayout {
            linear_taps: count(1),
            v2_memory: memory_for(count(2), pairs)?,
            v3_memory: memory_for(count(3), triples)?,
        };
        if rows.len() != layout.len() {
            return Err(parse_err("unknown kernel order present".into()));
        }
        for (got, want) in rows.iter().zip(layout.lags()) {
            if (got.0, got.1, got.2, got.3) != want {
                return Err(Error::Shape(format!(
                    "row {:?} does not follow the expected lag order (expected {want:?})",
                    (got.0, got.1, got.2, got.3)
                )));
            }
        }
        let w: Vec<f64> = rows.iter().map(|r| r.4).collect();
        Self::from_flat(&w, layout)
    }
}

/// Equalizer output: one value per symbol plus the range with full context.
#[derive(Debug, Clone, PartialEq)]
pub struct Equalized {
    pub values: Vec<f64>,
    pub valid: Range<usize>,
}

/// Feature row for symbol `n`.
pub fn build_feature_row(rx: &Waveform, n: usize, cfg: &EqualizerConfig) -> Result<Vec<f64>> {
    let layout = cfg.layout();
    let valid = layout.valid_range(rx.len() / INPUT_SPS);
    if !valid.contains(&n) {
        return Err(Error::Boundary {
            index: n,
            lo: valid.start,
            hi: valid.end,
        });
    }
    let mut row = vec![0.0; layout.len()];
    layout.fill(rx.samples(), n, &mut row);
    Ok(row)
}

/// Row-major feature matrix for symbols in `range`.
pub fn feature_matrix(x: &[f64], layout: FeatureLayout, range: Range<usize>) -> Vec<f64> {
    let p = layout.len();
    let mut out = vec![0.0; range.len() * p];
    out.par_chunks_mut(p)
        .zip(range.into_par_iter())
        .for_each(|(row, n)| layout.fill(x, n, row));
    out
}

/// Ridge least-squares fit of feature rows to the known symbol levels.
///
/// Uses the first `cfg.training_len` symbols that have full context.
pub fn train(
    rx: &Waveform,
    known_symbols: &[i32],
    cfg: &EqualizerConfig,
) -> Result<VolterraKernels> {
    let targets: Vec<f64> = known_symbols.iter().map(|&s| f64::from(s)).collect();
    train_to_targets(rx, &targets, cfg)
}

/// As [`train`] with arbitrary real targets (one per symbol).
pub fn train_to_targets(
    rx: &Waveform,
    targets: &[f64],
    cfg: &EqualizerConfig,
) -> Result<VolterraKernels> {
    if cfg.linear_taps == 0 || cfg.linear_taps.is_multiple_of(2) {
        return Err(Error::Config(format!(
            "linear_taps must be odd and >= 1, got {}",
            cfg.linear_taps
        )));
    }
    if !(cfg.ridge_lambda >= 0.0 && cfg.ridge_lambda.is_finite()) {
        return Err(Error::Config(format!(
            "ridge_lambda must be >= 0, got {}",
            cfg.ridge_lambda
        )));
    }
    if targets.len() < cfg.training_len {
        return Err(Error::Contract(format!(
            "{} known symbols cannot cover training_len {}",
            targets.len(),
            cfg.training_len
        )));
    }
    if rx.len() < INPUT_SPS * cfg.training_len {
        return Err(Error::Contract(format!(
            "receive waveform has {} samples, training needs {}",
            rx.len(),
            INPUT_SPS * cfg.training_len
        )));
    }
    let layout = cfg.layout();
    let p = layout.len();
    let valid = layout.valid_range(rx.len() / INPUT_SPS);
    let rows = valid.start..valid.end.min(cfg.training_len);
    if rows.len() < p && cfg.ridge_lambda == 0.0 {
        return Err(Error::Singular(format!(
            "{} training rows for {p} coefficients",
            rows.len()
        )));
    }

    let (gram, rhs) = normal_equations(rx.samples(), targets, layout, rows);
    let w = solve_ridge(gram, rhs, p, cfg.ridge_lambda)?;
    VolterraKernels::from_flat(&w, layout)
}

/// Upper triangle of `XᵀX` (row-major p×p) and `Xᵀt`, reduced in a fixed chunk order.
fn normal_equations(
    x: &[f64],
    targets: &[f64],
    layout: FeatureLayout,
    rows: Range<usize>,
) -> (Vec<f64>, Vec<f64>) {
    let p = layout.len();
    let starts: Vec<usize> = rows.clone().step_by(ROW_CHUNK).collect();
    let partials: Vec<(Vec<f64>, Vec<f64>)> = starts
        .par_iter()
        .map(|&start| {
            let end = (start + ROW_CHUNK).min(rows.end);
            let mut gram = vec![0.0; p * p];
            let mut rhs = vec![0.0; p];
            let mut row = vec![0.0; p];
            for (n, &t) in targets.iter().enumerate().take(end).skip(start) {
                layout.fill(x, n, &mut row);
                for i in 0..p {
                    let ri = row[i];
                    if ri == 0.0 {
                        continue;
                    }
                    rhs[i] += ri * t;
                    let g = &mut gram[i * p + i..(i + 1) * p];
                    for (gij, rj) in g.iter_mut().zip(&row[i..]) {
                        *gij += ri * rj;
                    }
                }
            }
            (gram, rhs)
        })
        .collect();

    let mut gram = vec![0.0; p * p];
    let mut rhs = vec![0.0; p];
    for (g, r) in partials {
        gram.iter_mut().zip(g).for_each(|(a, b)| *a += b);
        rhs.iter_mut().zip(r).for_each(|(a, b)| *a += b);
    }
    (gram, rhs)
}

/// Solves `(G + λI) w = b` by Cholesky; `gram` holds the upper triangle.
fn solve_ridge(mut gram: Vec<f64>, mut rhs: Vec<f64>, p: usize, lambda: f64) -> Result<Vec<f64>> {
    for i in 0..p {
        gram[i * p + i] += lambda;
    }
    let max_diag = (0..p).map(|i| gram[i * p + i]).fold(0.0, f64::max);
    let tol = if lambda == 0.0 { 1e-12 * max_diag } else { 0.0 };

    // In-place upper Cholesky: G = UᵀU, U stored in the upper triangle.
    for j in 0..p {
        let mut d = gram[j * p + j];
        for k in 0..j {
            d -= gram[k * p + j] * gram[k * p + j];
        }
        if !(d > tol) || !d.is_finite() {
            return Err(Error::Singular(format!(
                "normal equations are not positive definite at coefficient {j}"
            )));
        }
        let d = d.sqrt();
        gram[j * p + j] = d;
        for i in j + 1..p {
            let mut s = gram[j * p + i];
            for k in 0..j {
                s -= gram[k * p + j] * gram[k * p + i];
            }
            gram[j * p + i] = s / d;
        }
    }
    // Uᵀ y = b
    for i in 0..p {
        let mut s = rhs[i];
        for k in 0..i {
            s -= gram[k * p + i] * rhs[k];
        }
        rhs[i] = s / gram[i * p + i];
    }
    // U w = y
    for i in (0..p).rev() {
        let mut s = rhs[i];
        for k in i + 1..p {
            s -= gram[i * p + k] * rhs[k];
        }
        rhs[i] = s / gram[i * p + i];
    }
    Ok(rhs)
}

/// Applies the kernels to every symbol of a 2 samples/symbol waveform.
pub fn apply(kernels: &VolterraKernels, rx: &Waveform) -> Result<Equalized> {
    if !rx.len().is_multiple_of(INPUT_SPS) {
        return Err(Error::Shape(format!(
            "equalizer input has {} samples, not a whole number of {INPUT_SPS}-sample symbols",
            rx.len()
        )));
    }
    let layout = kernels.layout();
    let w = kernels.flat();
    let symbols = rx.len() / INPUT_SPS;
    let x = rx.samples();
    let values = (0..symbols)
        .into_par_iter()
        .map_init(
            || vec![0.0; layout.len()],
            |row, n| {
                layout.fill(x, n, row);
                dot(row, &w)
            },
        )
        .collect();
    Ok(Equalized {
        values,
        valid: layout.valid_range(symbols),
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Midpoint slicer onto the constellation.
///
/// Thresholds sit at the even integers between levels; exact ties round away
/// from zero (0.0 goes to +1) and values beyond the outer levels clamp.
pub fn hard_decide(equalized: &[f64], constellation: &PamConstellation) -> Vec<i32> {
    let max = constellation.max_level();
    let positive = |v: f64| -> i32 {
        let level = 2.0 * (v / 2.0).floor() + 1.0;
        if level >= f64::from(max) {
            max
        } else {
            level as i32
        }
    };
    equalized
        .iter()
        .map(|&v| {
            if v.is_nan() {
                1
            } else if v >= 0.0 {
                positive(v)
            } else {
                -positive(-v)
            }
        })
        .collect()
}
