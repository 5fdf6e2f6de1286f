//! Reflected-binary Gray labeling of PAM levels.
//!
//! Level index `i` (0 for the most negative level) carries the label
//! `i ^ (i >> 1)`, most significant bit first. For PAM-8 this gives
//! `000 → −7, 001 → −5, 011 → −3, 010 → −1, 110 → +1, 111 → +3, 101 → +5, 100 → +7`.

use crate::error::{Error, Result};
use crate::shaping::PamConstellation;

fn gray(i: u32) -> u32 {
    i ^ (i >> 1)
}

fn inverse_gray(mut g: u32) -> u32 {
    let mut i = g;
    while g > 0 {
        g >>= 1;
        i ^= g;
    }
    i
}

/// Gray label of `level`, or `None` if the level is not in the constellation.
pub fn label_of(level: i32, constellation: &PamConstellation) -> Option<u32> {
    constellation.index_of(level).map(|i| gray(i as u32))
}

/// Maps consecutive `m`-bit groups (MSB first, values 0/1) to PAM levels.
pub fn map_gray_pam(bits: &[u8], m: u32) -> Result<Vec<i32>> {
    let constellation = PamConstellation::new(m)?;
    let width = m as usize;
    if !bits.len().is_multiple_of(width) {
        return Err(Error::Framing {
            bits: bits.len(),
            m,
        });
    }
    bits.chunks_exact(width)
        .map(|group| {
            let mut label = 0u32;
            for &b in group {
                if b > 1 {
                    return Err(Error::InvalidParameter(format!(
                        "bit value {b} is not 0 or 1"
                    )));
                }
                label = (label << 1) | u32::from(b);
            }
            Ok(constellation.levels()[inverse_gray(label) as usize])
        })
        .collect()
}

/// Inverse of [`map_gray_pam`].
pub fn demap_gray_pam(symbols: &[i32], m: u32) -> Result<Vec<u8>> {
    let constellation = PamConstellation::new(m)?;
    let mut bits = Vec::with_capacity(symbols.len() * m as usize);
    for &s in symbols {
        let label = label_of(s, &constellation).ok_or_else(|| {
            Error::InvalidParameter(format!("{s} is not a PAM-{} level", constellation.len()))
        })?;
        for shift in (0..m).rev() {
            bits.push(((label >> shift) & 1) as u8);
        }
    }
    Ok(bits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pam8_table() {
        let table = [
            ([0, 0, 0], -7),
            ([0, 0, 1], -5),
            ([0, 1, 1], -3),
            ([0, 1, 0], -1),
            ([1, 1, 0], 1),
            ([1, 1, 1], 3),
            ([1, 0, 1], 5),
            ([1, 0, 0], 7),
        ];
        for (bits, level) in table {
            assert_eq!(map_gray_pam(&bits, 3).unwrap(), vec![level]);
            assert_eq!(demap_gray_pam(&[level], 3).unwrap(), bits.to_vec());
        }
    }

    #[test]
    fn framing_error() {
        assert!(matches!(
            map_gray_pam(&[0, 1, 1, 0], 3),
            Err(Error::Framing { bits: 4, m: 3 })
        ));
        assert!(map_gray_pam(&[0, 2, 1], 3).is_err());
        assert!(demap_gray_pam(&[2], 3).is_err());
    }

    #[test]
    fn adjacent_levels_differ_in_one_bit() {
        for m in 2..=8 {
            let c = PamConstellation::new(m).unwrap();
            for pair in c.levels().windows(2) {
                let a = label_of(pair[0], &c).unwrap();
                let b = label_of(pair[1], &c).unwrap();
                assert_eq!((a ^ b).count_ones(), 1, "m={m} {pair:?}");
            }
        }
    }
}
