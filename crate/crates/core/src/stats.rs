//! Goodness-of-fit and fitting helpers used to validate simulated
//! frequencies.

/// Significance level used by the automated checks.
pub const DEFAULT_ALPHA: f64 = 0.001;

/// Bins with fewer expected counts than this are pooled.
pub const MIN_EXPECTED_COUNT: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("observed and expected have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("expected probabilities sum to {0}, not 1")]
    NotNormalized(f64),
    #[error("expected probability {0} is negative or not finite")]
    InvalidProbability(f64),
    #[error("no observations")]
    Empty,
    #[error("need at least two bins with positive expectation after pooling")]
    TooFewBins,
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("power-law fit needs positive values, got {0}")]
    NonPositive(f64),
}

/// Pearson chi-square result.
#[derive(Debug, Clone, PartialEq)]
pub struct GofReport {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
    pub alpha: f64,
    pub pass: bool,
}

impl GofReport {
    fn new(statistic: f64, degrees_of_freedom: usize, alpha: f64) -> Self {
        let p_value = chi_square_sf(statistic, degrees_of_freedom as f64);
        Self {
            statistic,
            degrees_of_freedom,
            p_value,
            alpha,
            pass: p_value > alpha,
        }
    }

    /// An observation landed in a bin with zero expected probability.
    fn impossible(degrees_of_freedom: usize, alpha: f64) -> Self {
        Self {
            statistic: f64::INFINITY,
            degrees_of_freedom,
            p_value: 0.0,
            alpha,
            pass: false,
        }
    }
}

/// Pearson goodness of fit of `observed` counts against `expected`
/// probabilities.
///
/// Bins whose expected count is below [`MIN_EXPECTED_COUNT`] are pooled.
/// Zero-probability bins must be empty; an observation in one yields a
/// failing report with an infinite statistic.
pub fn chi_square(observed: &[u64], expected: &[f64], alpha: f64) -> Result<GofReport, StatsError> {
    if observed.len() != expected.len() {
        return Err(StatsError::LengthMismatch(observed.len(), expected.len()));
    }
    if let Some(&bad) = expected.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
        return Err(StatsError::InvalidProbability(bad));
    }
    let psum: f64 = expected.iter().sum();
    if (psum - 1.0).abs() > 1e-9 {
        return Err(StatsError::NotNormalized(psum));
    }
    let total: u64 = observed.iter().sum();
    if total == 0 {
        return Err(StatsError::Empty);
    }
    let n = total as f64;

    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut pooled = (0.0, 0.0);
    let mut impossible = false;
    for (&o, &p) in observed.iter().zip(expected) {
        if p == 0.0 {
            impossible |= o > 0;
            continue;
        }
        let e = p * n;
        if e < MIN_EXPECTED_COUNT {
            pooled.0 += o as f64;
            pooled.1 += e;
        } else {
            bins.push((o as f64, e));
        }
    }
    if pooled.1 > 0.0 {
        if pooled.1 >= MIN_EXPECTED_COUNT || bins.is_empty() {
            bins.push(pooled);
        } else {
            // fold the leftover pool into the smallest regular bin
            let k = bins
                .iter()
                .enumerate()
                .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
                .map(|(k, _)| k)
                .unwrap_or(0);
            bins[k].0 += pooled.0;
            bins[k].1 += pooled.1;
        }
    }
    let dof = bins.len().saturating_sub(1);
    if impossible {
        return Ok(GofReport::impossible(dof.max(1), alpha));
    }
    if dof == 0 {
        return Err(StatsError::TooFewBins);
    }
    let statistic = bins.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    Ok(GofReport::new(statistic, dof, alpha))
}

/// Chi-square test that two count vectors over the same bins come from the
/// same distribution (2 x k contingency table). Bins empty in both samples
/// are dropped.
pub fn chi_square_homogeneity(a: &[u64], b: &[u64], alpha: f64) -> Result<GofReport, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(a.len(), b.len()));
    }
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    if na == 0 || nb == 0 {
        return Err(StatsError::Empty);
    }
    let n = (na + nb) as f64;
    let mut statistic = 0.0;
    let mut bins = 0;
    for (&x, &y) in a.iter().zip(b) {
        let col = (x + y) as f64;
        if col == 0.0 {
            continue;
        }
        bins += 1;
        for (obs, row) in [(x, na), (y, nb)] {
            let e = row as f64 * col / n;
            statistic += (obs as f64 - e) * (obs as f64 - e) / e;
        }
    }
    if bins < 2 {
        return Err(StatsError::TooFewBins);
    }
    Ok(GofReport::new(statistic, bins - 1, alpha))
}

/// Standard deviation of a binomial proportion.
pub fn binomial_sigma(p: f64, trials: u64) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// `|observed - expected| <= k * sigma`, with sigma from the expected
/// proportion.
pub fn within_sigma(observed: f64, expected: f64, trials: u64, k: f64) -> bool {
    (observed - expected).abs() <= k * binomial_sigma(expected, trials)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub exponent_stderr: f64,
    pub prefactor: f64,
}

/// Least-squares line through `(ln x, ln y)`.
pub fn power_law_fit(xs: &[f64], ys: &[f64]) -> Result<PowerLawFit, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 3 {
        return Err(StatsError::TooFewPoints { needed: 3, got: xs.len() });
    }
    if let Some(&bad) = xs.iter().chain(ys).find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(StatsError::NonPositive(bad));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let stderr = (rss / (n - 2.0) / sxx).sqrt();
    Ok(PowerLawFit {
        exponent: slope,
        exponent_stderr: stderr,
        prefactor: intercept.exp(),
    })
}

/// Upper tail `P(X > x)` of the chi-square distribution with `dof` degrees
/// of freedom.
pub fn chi_square_sf(x: f64, dof: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    regularized_gamma_q(dof / 2.0, x / 2.0)
}

/// `ln Gamma(x)` for `x > 0` (Lanczos, g = 7, n = 9).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + G + 0.5;
    for (i, c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn regularized_gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x < a + 1.0 {
        gamma_series(a, x)
    } else {
        1.0 - gamma_continued_fraction(a, x)
    }
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 - P(a, x)`.
pub fn regularized_gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x < a + 1.0 {
        1.0 - gamma_series(a, x)
    } else {
        gamma_continued_fraction(a, x)
    }
}

const GAMMA_EPS: f64 = 1e-16;
const GAMMA_MAX_ITER: usize = 10_000;

fn gamma_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..GAMMA_MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * GAMMA_EPS {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

// modified Lentz
fn gamma_continued_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..GAMMA_MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < GAMMA_EPS {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn exact_match_gives_zero() {
        let r = chi_square(&[80_000, 20_000], &[0.8, 0.2], DEFAULT_ALPHA).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.degrees_of_freedom, 1);
        assert!(r.pass);
        let r = chi_square(&[25, 25, 25, 25], &[0.25; 4], DEFAULT_ALPHA).unwrap();
        assert_eq!((r.statistic, r.p_value), (0.0, 1.0));
    }

    #[test]
    fn hand_computed_statistic() {
        let r = chi_square(&[79_500, 20_500], &[0.8, 0.2], DEFAULT_ALPHA).unwrap();
        // 500^2/80000 + 500^2/20000
        assert!((r.statistic - 15.625).abs() < 1e-9);
        let reference = 1.0 - ChiSquared::new(1.0).unwrap().cdf(15.625);
        assert!((r.p_value - reference).abs() < 1e-12);
        assert!(!r.pass);
    }

    #[test]
    fn impossible_bin_fails_hard() {
        let r = chi_square(&[10, 1], &[1.0, 0.0], DEFAULT_ALPHA).unwrap();
        assert!(r.statistic.is_infinite());
        assert_eq!(r.p_value, 0.0);
        assert!(!r.pass);
        // empty zero-probability bins are just dropped
        let r = chi_square(&[50, 50, 0], &[0.5, 0.5, 0.0], DEFAULT_ALPHA).unwrap();
        assert_eq!(r.degrees_of_freedom, 1);
        assert_eq!(r.statistic, 0.0);
    }

    #[test]
    fn small_bins_are_pooled() {
        // expected counts 90, 5.5, 2.5, 2 -> last two pooled to 4.5, then into the 5.5 bin
        let r = chi_square(&[90, 6, 2, 2], &[0.9, 0.055, 0.025, 0.02], DEFAULT_ALPHA).unwrap();
        assert_eq!(r.degrees_of_freedom, 1);
        let oracle = (90.0f64 - 90.0).powi(2) / 90.0 + (10.0f64 - 10.0).powi(2) / 10.0;
        assert!((r.statistic - oracle).abs() < 1e-12);
    }

    #[test]
    fn input_errors() {
        assert_eq!(chi_square(&[1], &[0.5, 0.5], 0.01), Err(StatsError::LengthMismatch(1, 2)));
        assert_eq!(chi_square(&[1, 1], &[0.5, 0.4], 0.01), Err(StatsError::NotNormalized(0.9)));
        assert_eq!(chi_square(&[0, 0], &[0.5, 0.5], 0.01), Err(StatsError::Empty));
        assert_eq!(chi_square(&[100], &[1.0], 0.01), Err(StatsError::TooFewBins));
    }

    #[test]
    fn homogeneity_identical_samples() {
        let r = chi_square_homogeneity(&[100, 200, 300], &[100, 200, 300], DEFAULT_ALPHA).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.degrees_of_freedom, 2);
        // hand-computed 2x2: [[10, 20], [20, 10]], expected 15 everywhere -> 4 * 25/15
        let r = chi_square_homogeneity(&[10, 20], &[20, 10], DEFAULT_ALPHA).unwrap();
        assert!((r.statistic - 100.0 / 15.0).abs() < 1e-12);
    }

    #[test]
    fn power_law_exact() {
        let xs = [1.0, 2.0, 3.0, 5.0];
        let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let f = power_law_fit(&xs, &sq).unwrap();
        assert!((f.exponent - 2.0).abs() < 1e-12);
        assert!(f.exponent_stderr < 1e-6);
        let f = power_law_fit(&xs, &xs).unwrap();
        assert!((f.exponent - 1.0).abs() < 1e-12);
        assert!((f.prefactor - 1.0).abs() < 1e-12);
    }

    #[test]
    fn power_law_errors() {
        assert!(matches!(power_law_fit(&[1.0, 2.0], &[1.0, 2.0]), Err(StatsError::TooFewPoints { .. })));
        assert_eq!(power_law_fit(&[1.0, 2.0, 0.0], &[1.0, 2.0, 3.0]), Err(StatsError::NonPositive(0.0)));
        assert_eq!(power_law_fit(&[1.0, 2.0, 3.0], &[1.0, -2.0, 3.0]), Err(StatsError::NonPositive(-2.0)));
    }

    #[test]
    fn ln_gamma_known_values() {
        assert!(ln_gamma(1.0).abs() < 1e-14);
        assert!(ln_gamma(2.0).abs() < 1e-14);
        assert!((ln_gamma(5.0) - 24f64.ln()).abs() < 1e-13);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-14);
    }

    #[test]
    fn tail_matches_reference_grid() {
        for dof in [1.0, 2.0, 3.0, 5.0, 10.0, 25.0, 99.0] {
            let dist = ChiSquared::new(dof).unwrap();
            for i in 1..200 {
                let x = i as f64 * 0.25;
                let reference = 1.0 - dist.cdf(x);
                let ours = chi_square_sf(x, dof);
                assert!(
                    (ours - reference).abs() < 1e-10,
                    "dof {dof} x {x}: {ours} vs {reference}"
                );
            }
        }
    }

    proptest! {
        #[test]
        fn p_value_decreasing_in_statistic(dof in 1usize..40, a in 0.0..200.0f64, b in 0.0..200.0f64) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(chi_square_sf(lo, dof as f64) >= chi_square_sf(hi, dof as f64));
        }

        #[test]
        fn relabeling_bins_is_invariant(counts in proptest::collection::vec(10u64..1000, 2..8), rot in 0usize..8) {
            let n = counts.len();
            let probs = vec![1.0 / n as f64; n];
            let a = chi_square(&counts, &probs, DEFAULT_ALPHA).unwrap();
            let mut c2 = counts.clone();
            c2.rotate_left(rot % n);
            let b = chi_square(&c2, &probs, DEFAULT_ALPHA).unwrap();
            prop_assert!((a.statistic - b.statistic).abs() <= 1e-9 * a.statistic.max(1.0));
        }
    }
}
