mod common;

use common::{planted_channel, vnle_cfg, TRAIN};
use pamshape::equalization::{apply, hard_decide, train, EqualizerConfig, VolterraKernels};
use pamshape::metrics::ber_count;
use pamshape::shaping::PamConstellation;

#[test]
fn vnle_identifies_planted_channel_exactly() {
    let p = planted_channel(11);
    let cfg = vnle_cfg();
    let kernels = train(&p.rx, &p.symbols, &cfg).unwrap();
    let out = apply(&kernels, &p.rx).unwrap();

    let train_rows = out.valid.start..TRAIN;
    let mse = train_rows
        .clone()
        .map(|n| (out.values[n] - f64::from(p.symbols[n])).powi(2))
        .sum::<f64>()
        / train_rows.len() as f64;
    assert!(mse < 1e-10, "training MSE {mse}");

    let held_out = TRAIN..out.valid.end;
    let decided = hard_decide(&out.values[held_out.clone()], &PamConstellation::pam8());
    let errs = ber_count(&p.symbols[held_out], &decided, 3).unwrap();
    assert_eq!(errs.bit_errors, 0);
}

#[test]
fn linear_equalizer_cannot_match_planted_channel() {
    let p = planted_channel(11);
    let cfg = EqualizerConfig {
        training_len: TRAIN,
        ..EqualizerConfig::ffe(31)
    };
    let out = apply(&train(&p.rx, &p.symbols, &cfg).unwrap(), &p.rx).unwrap();
    let rows = out.valid.start..TRAIN;
    let mse = rows
        .clone()
        .map(|n| (out.values[n] - f64::from(p.symbols[n])).powi(2))
        .sum::<f64>()
        / rows.len() as f64;
    assert!(mse > 1e-4, "FFE MSE {mse}");
}

#[test]
fn vnle_without_memories_is_bit_identical_to_ffe() {
    let p = planted_channel(3);
    let ffe = EqualizerConfig {
        training_len: TRAIN,
        ..EqualizerConfig::ffe(31)
    };
    let vnle = EqualizerConfig {
        training_len: TRAIN,
        ..EqualizerConfig::vnle(31, 0, 0)
    };
    let a = apply(&train(&p.rx, &p.symbols, &ffe).unwrap(), &p.rx).unwrap();
    let b = apply(&train(&p.rx, &p.symbols, &vnle).unwrap(), &p.rx).unwrap();
    assert_eq!(a.valid, b.valid);
    assert!(a
        .values
        .iter()
        .zip(&b.values)
        .all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn training_is_deterministic() {
    let p = planted_channel(5);
    let cfg = vnle_cfg();
    let a: VolterraKernels = train(&p.rx, &p.symbols, &cfg).unwrap();
    let b = train(&p.rx, &p.symbols, &cfg).unwrap();
    assert_eq!(a, b);
}
