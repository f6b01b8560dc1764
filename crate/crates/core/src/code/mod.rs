//! Polar code construction, encoding, and the CRC outer code.

mod crc;
mod parity;
mod reliability;
mod transform;

pub use crc::{Crc, CRC16_NR};
pub use parity::{build_crc_parity_matrix, CrcTannerGraph};
pub use reliability::{is_permutation, nr_reliability_order, parse_reliability_table, NR_MAX_LEN};
pub use transform::{polar_transform, polar_transform_in_place, stage_values};

use crate::{Error, Result};

/// Static description of a polar code `P(N, K)` with an outer CRC.
///
/// The `k_info + crc_len` non-frozen positions are the most reliable ones
/// under `reliability`; they hold the payload followed by the CRC bits in
/// increasing index order. Frozen positions carry 0.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarCodeSpec {
    len: usize,
    log_len: usize,
    k_info: usize,
    crc: Crc,
    info_set: Vec<usize>,
    frozen_set: Vec<usize>,
    frozen: Vec<bool>,
    reliability: Vec<usize>,
}

impl PolarCodeSpec {
    pub fn new(len: usize, k_info: usize, crc_len: usize, crc_poly: u64, reliability: Vec<usize>) -> Result<Self> {
        if !len.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(len));
        }
        if k_info + crc_len > len {
            return Err(Error::TooManyBits { info: k_info, crc: crc_len, len });
        }
        if !is_permutation(&reliability, len) {
            return Err(Error::BadReliabilityOrder(len));
        }
        let crc = Crc::new(crc_len, crc_poly)?;
        let mut frozen = vec![true; len];
        for &i in &reliability[len - k_info - crc_len..] {
            frozen[i] = false;
        }
        let info_set = (0..len).filter(|&i| !frozen[i]).collect();
        let frozen_set = (0..len).filter(|&i| frozen[i]).collect();
        Ok(Self { len, log_len: len.trailing_zeros() as usize, k_info, crc, info_set, frozen_set, frozen, reliability })
    }

    /// Frozen set taken from the bundled NR reliability sequence.
    pub fn nr(len: usize, k_info: usize, crc_len: usize, crc_poly: u64) -> Result<Self> {
        Self::new(len, k_info, crc_len, crc_poly, nr_reliability_order(len)?)
    }

    /// `P(128, 80)` with the 16-bit NR CRC.
    pub fn nr_128_80() -> Self {
        Self::nr(128, 80, 16, CRC16_NR).expect("bundled code parameters are valid")
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// `n = log2(N)`.
    pub fn log_len(&self) -> usize {
        self.log_len
    }

    pub fn k_info(&self) -> usize {
        self.k_info
    }

    pub fn crc(&self) -> &Crc {
        &self.crc
    }

    pub fn crc_len(&self) -> usize {
        self.crc.len()
    }

    /// Length of the CRC-appended word, `|A|`.
    pub fn word_len(&self) -> usize {
        self.info_set.len()
    }

    pub fn info_set(&self) -> &[usize] {
        &self.info_set
    }

    pub fn frozen_set(&self) -> &[usize] {
        &self.frozen_set
    }

    pub fn is_frozen(&self, t: usize) -> bool {
        self.frozen[t]
    }

    pub fn frozen_mask(&self) -> &[bool] {
        &self.frozen
    }

    pub fn reliability_order(&self) -> &[usize] {
        &self.reliability
    }

    pub fn attach_crc(&self, msg: &[u8]) -> Result<Vec<u8>> {
        expect_len(msg, self.k_info)?;
        check_bits(msg)?;
        Ok(self.crc.attach(msg))
    }

    pub fn check_crc(&self, word: &[u8]) -> Result<bool> {
        expect_len(word, self.word_len())?;
        Ok(self.crc.check(word))
    }

    /// Scatters a CRC-appended word onto `A`; frozen positions are 0.
    pub fn build_u(&self, word: &[u8]) -> Result<Vec<u8>> {
        expect_len(word, self.word_len())?;
        check_bits(word)?;
        let mut u = vec![0u8; self.len];
        for (&pos, &b) in self.info_set.iter().zip(word) {
            u[pos] = b;
        }
        Ok(u)
    }

    /// Gathers the CRC-appended word back out of `u`.
    pub fn extract_word(&self, u: &[u8]) -> Result<Vec<u8>> {
        expect_len(u, self.len)?;
        Ok(self.info_set.iter().map(|&p| u[p]).collect())
    }

    pub fn polar_transform(&self, u: &[u8]) -> Result<Vec<u8>> {
        expect_len(u, self.len)?;
        polar_transform(u)
    }

    /// Payload to codeword: CRC, scatter, transform.
    pub fn encode(&self, msg: &[u8]) -> Result<Vec<u8>> {
        let u = self.build_u(&self.attach_crc(msg)?)?;
        polar_transform(&u)
    }

    /// CRC Tanner graph bound to this code's info set.
    pub fn crc_graph(&self) -> Result<CrcTannerGraph> {
        build_crc_parity_matrix(self.k_info, self.crc.len(), self.crc.poly())?.with_positions(&self.info_set)
    }

    pub fn rate(&self) -> f64 {
        self.k_info as f64 / self.len as f64
    }
}

pub fn check_bits(bits: &[u8]) -> Result<()> {
    match bits.iter().find(|&&b| b > 1) {
        Some(&b) => Err(Error::NotABit(b)),
        None => Ok(()),
    }
}

pub(crate) fn expect_len<T>(v: &[T], expected: usize) -> Result<()> {
    if v.len() == expected {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, actual: v.len() })
    }
}
