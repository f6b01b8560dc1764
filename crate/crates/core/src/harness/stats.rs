use statrs::distribution::{Beta, ContinuousCDF, Normal};

/// Clopper-Pearson interval for `k` successes in `n` trials.
pub fn binomial_interval(k: u64, n: u64, confidence: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let alpha = 1.0 - confidence;
    let (kf, nf) = (k as f64, n as f64);
    let lo = if k == 0 {
        0.0
    } else {
        Beta::new(kf, nf - kf + 1.0).expect("positive shape").inverse_cdf(alpha / 2.0)
    };
    let hi = if k == n {
        1.0
    } else {
        Beta::new(kf + 1.0, nf - kf).expect("positive shape").inverse_cdf(1.0 - alpha / 2.0)
    };
    (lo, hi)
}

pub fn intervals_overlap(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 <= b.1 && b.0 <= a.1
}

/// Paired comparison of two decoders on the same frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedComparison {
    /// Frames only the first decoder got wrong.
    pub only_first: u64,
    /// Frames only the second decoder got wrong.
    pub only_second: u64,
    /// One-sided p-value (normal approximation to McNemar's test) against
    /// the alternative that the first decoder errs more often than the
    /// second. Small values mean the first decoder is worse.
    pub p_first_worse: f64,
}

pub fn paired_comparison(first_errors: &[bool], second_errors: &[bool]) -> PairedComparison {
    let mut only_first = 0;
    let mut only_second = 0;
    for (&a, &b) in first_errors.iter().zip(second_errors) {
        match (a, b) {
            (true, false) => only_first += 1,
            (false, true) => only_second += 1,
            _ => {}
        }
    }
    let discordant = (only_first + only_second) as f64;
    let p_first_worse = if discordant == 0.0 {
        0.5
    } else {
        let z = (only_first as f64 - only_second as f64) / discordant.sqrt();
        1.0 - Normal::standard().cdf(z)
    };
    PairedComparison { only_first, only_second, p_first_worse }
}
