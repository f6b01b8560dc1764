use std::ops::Range;

use super::crc::Crc;
use crate::{Error, Result};

/// Tanner graph of the CRC constraints over the CRC-appended word.
///
/// `H = [Pᵀ | I]`: column `j < k_info` is the CRC of the unit message with
/// bit `j` set, the trailing identity covers the CRC bits themselves.
/// Variable `j` sits at code position `positions[j]`; by default this is
/// `j`, and [`CrcTannerGraph::with_positions`] binds it to an info set.
#[derive(Debug, Clone, PartialEq)]
pub struct CrcTannerGraph {
    checks: usize,
    vars: usize,
    h: Vec<Vec<u8>>,
    /// `(check, variable)` pairs sorted by check then variable.
    edges: Vec<(usize, usize)>,
    check_edges: Vec<Range<usize>>,
    /// Edge ids incident to each variable, in increasing check order.
    var_edges: Vec<Vec<usize>>,
    positions: Vec<usize>,
}

pub fn build_crc_parity_matrix(k_info: usize, crc_len: usize, poly: u64) -> Result<CrcTannerGraph> {
    let crc = Crc::new(crc_len, poly)?;
    let vars = k_info + crc_len;
    let mut h = vec![vec![0u8; vars]; crc_len];
    let mut unit = vec![0u8; k_info];
    for j in 0..k_info {
        unit[j] = 1;
        for (row, bit) in h.iter_mut().zip(crc.remainder_bits(&unit)) {
            row[j] = bit;
        }
        unit[j] = 0;
    }
    for (r, row) in h.iter_mut().enumerate() {
        row[k_info + r] = 1;
    }
    CrcTannerGraph::build(h, vars)
}

impl CrcTannerGraph {
    pub fn from_dense(h: Vec<Vec<u8>>) -> Result<Self> {
        let vars = h.first().map_or(0, Vec::len);
        Self::build(h, vars)
    }

    fn build(h: Vec<Vec<u8>>, vars: usize) -> Result<Self> {
        let checks = h.len();
        let mut edges = Vec::new();
        let mut check_edges = Vec::with_capacity(checks);
        let mut var_edges = vec![Vec::new(); vars];
        for (c, row) in h.iter().enumerate() {
            if row.len() != vars {
                return Err(Error::LengthMismatch { expected: vars, actual: row.len() });
            }
            let start = edges.len();
            for (v, &bit) in row.iter().enumerate() {
                match bit {
                    0 => {}
                    1 => {
                        var_edges[v].push(edges.len());
                        edges.push((c, v));
                    }
                    other => return Err(Error::NotABit(other)),
                }
            }
            if edges.len() - start < 2 {
                return Err(Error::Config(format!("parity check {c} has fewer than two variables")));
            }
            check_edges.push(start..edges.len());
        }
        Ok(Self { checks, vars, h, edges, check_edges, var_edges, positions: (0..vars).collect() })
    }

    pub fn with_positions(mut self, positions: &[usize]) -> Result<Self> {
        if positions.len() != self.vars {
            return Err(Error::LengthMismatch { expected: self.vars, actual: positions.len() });
        }
        self.positions = positions.to_vec();
        Ok(self)
    }

    pub fn num_checks(&self) -> usize {
        self.checks
    }

    pub fn num_vars(&self) -> usize {
        self.vars
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn matrix(&self) -> &[Vec<u8>] {
        &self.h
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn check_edges(&self, check: usize) -> Range<usize> {
        self.check_edges[check].clone()
    }

    pub fn var_edges(&self, var: usize) -> &[usize] {
        &self.var_edges[var]
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn syndrome(&self, word: &[u8]) -> Vec<u8> {
        self.h
            .iter()
            .map(|row| row.iter().zip(word).fold(0, |acc, (&h, &b)| acc ^ (h & b)))
            .collect()
    }

    pub fn is_codeword(&self, word: &[u8]) -> bool {
        word.len() == self.vars && self.syndrome(word).iter().all(|&s| s == 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::crc::CRC16_NR;

    #[test]
    fn toy_two_bit_crc_has_two_rows() {
        let g = build_crc_parity_matrix(1, 2, 0b11).unwrap();
        assert_eq!(g.num_checks(), 2);
        assert_eq!(g.num_vars(), 3);
        assert!(g.is_codeword(&[0, 0, 0]));
        let crc = Crc::new(2, 0b11).unwrap();
        assert!(g.is_codeword(&crc.attach(&[1])));
    }

    #[test]
    fn null_space_matches_crc_check_exhaustively() {
        let (k, l, poly) = (8usize, 4usize, 0b0011u64);
        let crc = Crc::new(l, poly).unwrap();
        let g = build_crc_parity_matrix(k, l, poly).unwrap();
        for w in 0u32..(1 << (k + l)) {
            let word: Vec<u8> = (0..k + l).map(|i| ((w >> i) & 1) as u8).collect();
            assert_eq!(g.is_codeword(&word), crc.check(&word));
        }
    }

    #[test]
    fn nr_rows_have_at_least_two_ones() {
        let g = build_crc_parity_matrix(80, 16, CRC16_NR).unwrap();
        assert_eq!(g.num_checks(), 16);
        for c in 0..16 {
            assert!(g.check_edges(c).len() >= 2);
        }
        let per_var: usize = (0..96).map(|v| g.var_edges(v).len()).sum();
        assert_eq!(per_var, g.num_edges());
    }

    #[test]
    fn degenerate_inputs_error() {
        assert!(build_crc_parity_matrix(80, 16, 0x1020).is_err());
        assert!(build_crc_parity_matrix(0, 2, 0b11).is_err());
        let empty = build_crc_parity_matrix(2, 0, 0).unwrap();
        assert_eq!(empty.num_checks(), 0);
        assert_eq!(empty.num_vars(), 2);
    }
}
