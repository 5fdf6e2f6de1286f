//! Sample-level model of the unamplified IM/DD link.
//!
//! Transmit: Gray mapping, DAC (quantizer, hold, bandwidth), driver amplifier
//! and EML transfer curve. Receive: photodetection with AWGN, DC removal,
//! decimation to 2 samples/symbol and a FIR low-pass.

mod eml;
mod filter;
mod gray;
mod link;
mod waveform;

pub use eml::{EmlCurve, LookupCurve, DEFAULT_P_MAX, DEFAULT_SLOPE, DEFAULT_V_INFL};
pub use filter::Fir;
pub use gray::{demap_gray_pam, label_of, map_gray_pam};
pub use link::{
    dac_frontend, drive_voltage, eml_transmit, fiber_smallsignal, photodetect, rx_frontend,
    LinkConfig, DEFAULT_SNR_DB,
};
pub use waveform::{Unit, Waveform};

use crate::error::Result;

/// Optical power waveform (mW) launched by the EML for `symbols`.
pub fn transmit(symbols: &[i32], cfg: &LinkConfig) -> Result<Waveform> {
    let dac = dac_frontend(symbols, cfg).map_err(|e| e.in_stage("dac"))?;
    let drive = drive_voltage(&dac, cfg).map_err(|e| e.in_stage("driver"))?;
    eml_transmit(&drive, &cfg.eml, cfg.eml_bw_3db).map_err(|e| e.in_stage("eml"))
}

/// Full link: symbols in, normalized 2 samples/symbol receive waveform out.
pub fn simulate_link(symbols: &[i32], cfg: &LinkConfig, noise_seed: u64) -> Result<Waveform> {
    cfg.validate()?;
    let optical = transmit(symbols, cfg)?;
    let detected =
        photodetect(&optical, cfg, noise_seed).map_err(|e| e.in_stage("photodetector"))?;
    rx_frontend(&detected, cfg).map_err(|e| e.in_stage("receiver"))
}
