use crate::{Error, Result};

/// The 1024-entry polar reliability sequence of 3GPP TS 38.212
/// (Table 5.3.1.2-1), least reliable first.
const NR_SEQUENCE: &str = include_str!("../../data/reliability_5g.txt");

pub const NR_MAX_LEN: usize = 1024;

/// Parses a reliability table: one index per line, least reliable first.
/// Blank lines and `#` comments are ignored.
pub fn parse_reliability_table(text: &str) -> Result<Vec<usize>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.parse::<usize>().map_err(|e| Error::Parse(format!("reliability entry {l:?}: {e}"))))
        .collect()
}

/// The NR sequence restricted to indices below `len`.
pub fn nr_reliability_order(len: usize) -> Result<Vec<usize>> {
    if !len.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(len));
    }
    if len > NR_MAX_LEN {
        return Err(Error::Config(format!("the NR sequence covers lengths up to {NR_MAX_LEN}, got {len}")));
    }
    let full = parse_reliability_table(NR_SEQUENCE)?;
    Ok(full.into_iter().filter(|&i| i < len).collect())
}

pub fn is_permutation(order: &[usize], len: usize) -> bool {
    if order.len() != len {
        return false;
    }
    let mut seen = vec![false; len];
    for &i in order {
        if i >= len || seen[i] {
            return false;
        }
        seen[i] = true;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_table_is_a_permutation() {
        let full = parse_reliability_table(NR_SEQUENCE).unwrap();
        assert!(is_permutation(&full, NR_MAX_LEN));
        assert_eq!(&full[..8], &[0, 1, 2, 4, 8, 16, 32, 3]);
        assert_eq!(full[NR_MAX_LEN - 1], 1023);
    }

    #[test]
    fn restriction_respects_bit_inclusion_order() {
        // if the ones of i are a subset of the ones of j, j is at least as reliable
        let order = nr_reliability_order(128).unwrap();
        let mut rank = vec![0; 128];
        for (r, &i) in order.iter().enumerate() {
            rank[i] = r;
        }
        for i in 0..128 {
            for j in 0..128 {
                if i != j && i & j == i {
                    assert!(rank[j] > rank[i], "{i} vs {j}");
                }
            }
        }
    }

    #[test]
    fn rejects_bad_lengths() {
        assert!(nr_reliability_order(100).is_err());
        assert!(nr_reliability_order(2048).is_err());
        assert!(parse_reliability_table("1\nx\n").is_err());
    }
}
