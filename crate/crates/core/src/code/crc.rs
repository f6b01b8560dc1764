use crate::{Error, Result};

/// CRC D^16 + D^12 + D^5 + 1, leading term omitted.
pub const CRC16_NR: u64 = 0x1021;

/// A CRC defined by its length and generator polynomial.
///
/// `poly` excludes the leading `D^len` term. Bit `len - 1` of `poly` is the
/// coefficient of `D^(len-1)`. Words are read most significant coefficient
/// first: `word[0]` multiplies the highest power of `D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Crc {
    len: usize,
    poly: u64,
}

impl Crc {
    pub fn new(len: usize, poly: u64) -> Result<Self> {
        let fits = len < 64 && (len == 0 && poly == 0 || len > 0 && poly >> len == 0);
        // a generator without a constant term shares the factor D with
        // D^len and cannot detect errors in the CRC bits themselves
        if !fits || (len > 0 && poly & 1 == 0) {
            return Err(Error::BadCrcPoly { poly, len });
        }
        Ok(Self { len, poly })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn poly(&self) -> u64 {
        self.poly
    }

    /// Remainder of `bits(D) · D^len` modulo the generator, bit `len-1`
    /// holding the highest-degree coefficient.
    pub fn remainder(&self, bits: &[u8]) -> u64 {
        if self.len == 0 {
            return 0;
        }
        let top = self.len - 1;
        let mask = (1u64 << self.len) - 1;
        let mut reg = 0u64;
        for &b in bits {
            let feedback = ((reg >> top) & 1) ^ u64::from(b & 1);
            reg = (reg << 1) & mask;
            if feedback == 1 {
                reg ^= self.poly;
            }
        }
        reg
    }

    pub fn remainder_bits(&self, bits: &[u8]) -> Vec<u8> {
        let rem = self.remainder(bits);
        (0..self.len).rev().map(|k| ((rem >> k) & 1) as u8).collect()
    }

    /// `msg` followed by its CRC bits.
    pub fn attach(&self, msg: &[u8]) -> Vec<u8> {
        let mut out = Vec::with_capacity(msg.len() + self.len);
        out.extend_from_slice(msg);
        out.extend(self.remainder_bits(msg));
        out
    }

    /// True iff the CRC-appended word is divisible by the generator.
    pub fn check(&self, word: &[u8]) -> bool {
        self.remainder(word) == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Schoolbook GF(2) long division of `msg · D^len` by the full generator.
    fn long_division(msg: &[u8], len: usize, poly: u64) -> Vec<u8> {
        let mut gen = vec![1u8];
        gen.extend((0..len).rev().map(|k| ((poly >> k) & 1) as u8));
        let mut dividend: Vec<u8> = msg.to_vec();
        dividend.extend(std::iter::repeat_n(0, len));
        for i in 0..msg.len() {
            if dividend[i] == 1 {
                for (d, g) in dividend[i..].iter_mut().zip(&gen) {
                    *d ^= g;
                }
            }
        }
        dividend[msg.len()..].to_vec()
    }

    #[test]
    fn zero_message_has_zero_crc() {
        let crc = Crc::new(16, CRC16_NR).unwrap();
        assert_eq!(crc.attach(&[0; 80]), vec![0; 96]);
        assert!(crc.check(&[0; 96]));
    }

    #[test]
    fn unit_message_matches_long_division() {
        let crc = Crc::new(16, CRC16_NR).unwrap();
        let mut msg = vec![0u8; 80];
        msg[0] = 1;
        assert_eq!(crc.remainder_bits(&msg), long_division(&msg, 16, CRC16_NR));
    }

    #[test]
    fn pseudo_random_messages_match_long_division() {
        let crc = Crc::new(16, CRC16_NR).unwrap();
        let mut state = 0x2545_f491_u64;
        for _ in 0..200 {
            let msg: Vec<u8> = (0..80)
                .map(|_| {
                    state ^= state << 13;
                    state ^= state >> 7;
                    state ^= state << 17;
                    (state & 1) as u8
                })
                .collect();
            assert_eq!(crc.remainder_bits(&msg), long_division(&msg, 16, CRC16_NR));
            assert!(crc.check(&crc.attach(&msg)));
        }
    }

    #[test]
    fn every_single_flip_is_detected() {
        let crc = Crc::new(16, CRC16_NR).unwrap();
        let msg: Vec<u8> = (0..80).map(|i| ((i * 7 + 3) % 5 == 0) as u8).collect();
        let word = crc.attach(&msg);
        for pos in 0..word.len() {
            let mut bad = word.clone();
            bad[pos] ^= 1;
            assert!(!crc.check(&bad), "flip at {pos} undetected");
        }
    }

    #[test]
    fn rejects_degenerate_polynomials() {
        assert!(Crc::new(16, 0x11021).is_err());
        assert!(Crc::new(16, 0x1020).is_err());
        assert!(Crc::new(0, 1).is_err());
        assert!(Crc::new(0, 0).is_ok());
        assert!(Crc::new(2, 0b11).is_ok());
    }

    #[test]
    fn empty_crc_accepts_everything() {
        let crc = Crc::new(0, 0).unwrap();
        assert_eq!(crc.attach(&[1, 0]), vec![1, 0]);
        assert!(crc.check(&[1, 1]));
    }
}
