use crate::{Error, Result};

/// `x = u G^{⊗n}` over GF(2) with `G = [[1, 0], [1, 1]]`, in place.
///
/// Stage `s` XORs bit `t + 2^s` into bit `t` for every `t` whose bit `s` is
/// clear. The transform is its own inverse.
pub fn polar_transform_in_place(bits: &mut [u8]) -> Result<()> {
    let len = bits.len();
    if !len.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(len));
    }
    let mut half = 1;
    while half < len {
        for block in bits.chunks_exact_mut(2 * half) {
            let (upper, lower) = block.split_at_mut(half);
            for (a, b) in upper.iter_mut().zip(lower.iter()) {
                *a ^= *b;
            }
        }
        half *= 2;
    }
    Ok(())
}

pub fn polar_transform(u: &[u8]) -> Result<Vec<u8>> {
    let mut x = u.to_vec();
    polar_transform_in_place(&mut x)?;
    Ok(x)
}

/// Bit values at every stage of the factor graph, `v[0] = u` through
/// `v[n] = x`. Used as per-stage training targets.
pub fn stage_values(u: &[u8]) -> Result<Vec<Vec<u8>>> {
    let len = u.len();
    if !len.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(len));
    }
    let n = len.trailing_zeros() as usize;
    let mut stages = Vec::with_capacity(n + 1);
    let mut cur = u.to_vec();
    stages.push(cur.clone());
    for s in 0..n {
        let half = 1 << s;
        for t in 0..len {
            if t & half == 0 {
                cur[t] ^= cur[t + half];
            }
        }
        stages.push(cur.clone());
    }
    Ok(stages)
}
