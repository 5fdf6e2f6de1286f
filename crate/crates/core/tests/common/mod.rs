//! Planted-kernel channel shared by the equalizer tests. The received
//! waveform is built so that the known symbols are an exact Volterra function
//! of it, evaluated here from the lag labels alone rather than through the
//! crate's row builder.

#![allow(dead_code)]

use pamshape::equalization::EqualizerConfig;
use pamshape::shaping::{sample_symbols, ShapedDistribution};
use pamshape::{Unit, Waveform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SYMBOLS: usize = 50_000;
pub const TRAIN: usize = 20_000;

pub fn vnle_cfg() -> EqualizerConfig {
    EqualizerConfig {
        ridge_lambda: 0.0,
        training_len: TRAIN,
        ..EqualizerConfig::vnle(31, 7, 9)
    }
}

/// Only terms with no future symbol-center sample and at most a linear
/// dependence on the current one are planted, so the waveform can be solved
/// for sample by sample.
fn causal(order: u8, l1: i32, l2: i32, l3: i32) -> bool {
    match order {
        1 => l1 <= 0 || l1 % 2 != 0,
        2 => l2 < 0 || (l2 == 0 && l1 < 0),
        _ => l3 < 0 || (l3 == 0 && l2 < 0),
    }
}

fn sample(x: &[f64], i: i64) -> f64 {
    if i >= 0 && (i as usize) < x.len() {
        x[i as usize]
    } else {
        0.0
    }
}

fn term(x: &[f64], n: usize, (order, l1, l2, l3): (u8, i32, i32, i32)) -> f64 {
    let n = n as i64;
    match order {
        1 => sample(x, 2 * n + i64::from(l1)),
        2 => sample(x, 2 * (n + i64::from(l1))) * sample(x, 2 * (n + i64::from(l2))),
        _ => {
            sample(x, 2 * (n + i64::from(l1)))
                * sample(x, 2 * (n + i64::from(l2)))
                * sample(x, 2 * (n + i64::from(l3)))
        }
    }
}

fn volterra(x: &[f64], n: usize, lags: &[(u8, i32, i32, i32)], w: &[f64]) -> f64 {
    lags.iter().zip(w).map(|(&l, &c)| c * term(x, n, l)).sum()
}

pub struct Planted {
    pub symbols: Vec<i32>,
    pub rx: Waveform,
}

pub fn planted_channel(seed: u64) -> Planted {
    let cfg = vnle_cfg();
    let layout = cfg.layout();
    let lags = layout.lags();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<f64> = lags
        .iter()
        .map(|&(o, a, b, c)| {
            if (o, a) == (1, 0) {
                7.0
            } else if causal(o, a, b, c) {
                let scale = [0.0, 0.3, 0.2, 0.05][o as usize];
                rng.gen_range(-scale..scale)
            } else {
                0.0
            }
        })
        .collect();

    let symbols = sample_symbols(&ShapedDistribution::uniform(3).unwrap(), SYMBOLS, seed);
    let mut x = vec![0.0; 2 * SYMBOLS];
    for k in 0..SYMBOLS {
        x[2 * k + 1] = rng.gen_range(-0.5..0.5);
    }
    for n in 0..SYMBOLS {
        x[2 * n] = 0.0;
        let rest = volterra(&x, n, &lags, &w);
        x[2 * n] = 1.0;
        let gain = volterra(&x, n, &lags, &w) - rest;
        assert!(gain.abs() > 1.0, "planted channel is degenerate at {n}");
        x[2 * n] = (f64::from(symbols[n]) - rest) / gain;
        assert!(x[2 * n].abs() < 10.0, "planted channel diverged at {n}");
    }
    Planted {
        symbols,
        rx: Waveform::new(x, 200.0, Unit::Normalized).unwrap(),
    }
}
