//! Goodness-of-fit machinery: chi-square tests against discrete laws,
//! one- and two-sample Kolmogorov–Smirnov tests, and the report type the
//! verification suites emit.

use serde::{Deserialize, Serialize};

use crate::special::{kolmogorov_sf, reg_upper_gamma};

/// Default pass threshold for p-values.
pub const P_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub test: String,
    pub statistic: f64,
    pub p_value: f64,
    pub sample_size: usize,
    pub pass: bool,
    /// Free-form context: parameters, window, grid point, etc.
    pub metadata: Vec<(String, String)>,
}

impl GofReport {
    pub fn new(test: impl Into<String>, statistic: f64, p_value: f64, sample_size: usize) -> Self {
        Self {
            test: test.into(),
            statistic,
            p_value,
            sample_size,
            pass: p_value >= P_THRESHOLD,
            metadata: Vec::new(),
        }
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.metadata.push((key.into(), value.to_string()));
        self
    }

    /// Re-evaluate the pass flag at a non-default p-value threshold.
    pub fn at_threshold(mut self, threshold: f64) -> Self {
        self.pass = self.p_value >= threshold;
        self
    }

    /// A deterministic or moment-based check expressed as pass/fail, with the
    /// discrepancy recorded as the statistic and p-value pinned to 0/1.
    pub fn from_bound(test: impl Into<String>, discrepancy: f64, bound: f64, n: usize) -> Self {
        let pass = discrepancy.abs() <= bound;
        Self {
            test: test.into(),
            statistic: discrepancy,
            p_value: if pass { 1.0 } else { 0.0 },
            sample_size: n,
            pass,
            metadata: vec![("bound".into(), bound.to_string())],
        }
    }
}

/// Chi-square upper tail: P{chi2_df >= x} = Q(df/2, x/2).
pub fn chi_square_sf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    reg_upper_gamma(df / 2.0, x / 2.0)
}

/// Chi-square test of observed counts against a discrete pmf over 0, 1, 2, ...
/// with an upper tail cell. Cells are pooled from the right until every
/// expected count is at least 5; degrees of freedom are pooled cells minus 1.
pub fn chi2_poisson(observed_counts: &[u64], mean: f64) -> GofReport {
    let pmf = |k: u64| -> f64 {
        let lnp = -mean + k as f64 * mean.ln() - crate::special::ln_gamma(k as f64 + 1.0);
        lnp.exp()
    };
    let n = observed_counts.len();
    let max_k = observed_counts.iter().copied().max().unwrap_or(0);
    let mut histogram = vec![0u64; max_k as usize + 1];
    for &c in observed_counts {
        histogram[c as usize] += 1;
    }
    let expected: Vec<f64> = (0..=max_k).map(|k| n as f64 * pmf(k)).collect();
    let tail = n as f64 - expected.iter().sum::<f64>();
    chi2_from_cells(&histogram, &expected, tail.max(0.0), n)
        .with_meta("mean", mean)
}

/// Chi-square test against an arbitrary pmf over 0..len-1 plus an explicit
/// tail mass for values >= len.
pub fn chi2_discrete(observed_counts: &[u64], pmf: &[f64], tail_mass: f64) -> GofReport {
    let n = observed_counts.len();
    let mut histogram = vec![0u64; pmf.len()];
    let mut tail_obs = 0u64;
    for &c in observed_counts {
        if (c as usize) < pmf.len() {
            histogram[c as usize] += 1;
        } else {
            tail_obs += 1;
        }
    }
    histogram.push(tail_obs);
    let mut expected: Vec<f64> = pmf.iter().map(|p| n as f64 * p).collect();
    expected.push(n as f64 * tail_mass);
    chi2_from_cells(&histogram, &expected, 0.0, n)
}

fn chi2_from_cells(histogram: &[u64], expected: &[f64], extra_tail: f64, n: usize) -> GofReport {
    // pool from the right so each cell's expectation is >= 5
    let mut cells: Vec<(f64, f64)> = Vec::new(); // (observed, expected)
    let mut acc_o = 0.0;
    let mut acc_e = extra_tail;
    for i in (0..histogram.len()).rev() {
        acc_o += histogram[i] as f64;
        acc_e += expected.get(i).copied().unwrap_or(0.0);
        if acc_e >= 5.0 {
            cells.push((acc_o, acc_e));
            acc_o = 0.0;
            acc_e = 0.0;
        }
    }
    if acc_e > 0.0 || acc_o > 0.0 {
        // fold any leftover into the last (lowest) pooled cell
        if let Some(last) = cells.last_mut() {
            last.0 += acc_o;
            last.1 += acc_e;
        } else {
            cells.push((acc_o, acc_e));
        }
    }
    if cells.len() < 2 {
        // everything pooled into one cell: the test is vacuous, report pass
        return GofReport::new("chi2", 0.0, 1.0, n).with_meta("cells", 1);
    }
    let statistic: f64 = cells
        .iter()
        .map(|&(o, e)| (o - e) * (o - e) / e)
        .sum();
    let df = (cells.len() - 1) as f64;
    let p = chi_square_sf(statistic, df);
    GofReport::new("chi2", statistic, p, n).with_meta("df", df)
}

/// One-sample KS test of data against a continuous CDF, with the asymptotic
/// p-value `Q((sqrt(n) + 0.12 + 0.11/sqrt(n)) D)`.
pub fn ks_continuous(data: &[f64], cdf: impl Fn(f64) -> f64) -> GofReport {
    let mut sorted = data.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let d = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0f64, f64::max);
    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    GofReport::new("ks", d, kolmogorov_sf(lambda), sorted.len())
}

/// Two-sample KS statistic; inputs must be sorted ascending.
pub fn two_sample_ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    debug_assert!(a.windows(2).all(|w| w[0] <= w[1]));
    debug_assert!(b.windows(2).all(|w| w[0] <= w[1]));
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        let diff = (i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs();
        d = d.max(diff);
    }
    d
}

/// Two-sample KS test with the asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> GofReport {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let d = two_sample_ks_statistic(&a, &b);
    let ne = (a.len() * b.len()) as f64 / (a.len() + b.len()) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    GofReport::new("ks2", d, kolmogorov_sf(lambda), a.len() + b.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_rng;
    use rand::Rng;
    use rand_distr::{Distribution, Poisson};

    #[test]
    fn chi2_null_calibration() {
        // data from its own null must pass at rate >= 99% over 1000 seeds
        let mean = 1.3;
        let mut failures = 0;
        for seed in 0..1000u64 {
            let mut rng = derive_rng(seed, &[100]);
            let pois = Poisson::new(mean).unwrap();
            let data: Vec<u64> = (0..800).map(|_| pois.sample(&mut rng) as u64).collect();
            if !chi2_poisson(&data, mean).pass {
                failures += 1;
            }
        }
        assert!(failures <= 10, "{failures} failures in 1000");
    }

    #[test]
    fn chi2_rejects_wrong_mean() {
        let mut rng = derive_rng(1, &[101]);
        let pois = Poisson::new(2.0).unwrap();
        let data: Vec<u64> = (0..5000).map(|_| pois.sample(&mut rng) as u64).collect();
        assert!(!chi2_poisson(&data, 1.0).pass);
    }

    #[test]
    fn ks_null_calibration() {
        let mut failures = 0;
        for seed in 0..1000u64 {
            let mut rng = derive_rng(seed, &[102]);
            let data: Vec<f64> = (0..500).map(|_| rng.random::<f64>()).collect();
            if !ks_continuous(&data, |x| x.clamp(0.0, 1.0)).pass {
                failures += 1;
            }
        }
        assert!(failures <= 10, "{failures} failures in 1000");
    }

    #[test]
    fn ks_rejects_wrong_law() {
        let mut rng = derive_rng(2, &[103]);
        let data: Vec<f64> = (0..2000).map(|_| rng.random::<f64>().powi(2)).collect();
        assert!(!ks_continuous(&data, |x| x.clamp(0.0, 1.0)).pass);
    }

    #[test]
    fn ks_two_sample_calibration_and_power() {
        let mut failures = 0;
        for seed in 0..300u64 {
            let mut rng = derive_rng(seed, &[104]);
            let a: Vec<f64> = (0..400).map(|_| rng.random::<f64>()).collect();
            let b: Vec<f64> = (0..400).map(|_| rng.random::<f64>()).collect();
            if !ks_two_sample(&a, &b).pass {
                failures += 1;
            }
        }
        assert!(failures <= 5, "{failures} failures in 300");
        let mut rng = derive_rng(3, &[105]);
        let a: Vec<f64> = (0..2000).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = (0..2000).map(|_| rng.random::<f64>().sqrt()).collect();
        assert!(!ks_two_sample(&a, &b).pass);
    }

    #[test]
    fn chi2_discrete_with_tail() {
        let mut rng = derive_rng(4, &[106]);
        // law: P{0}=0.5, P{1}=0.3, tail 0.2 realized as the value 2
        let data: Vec<u64> = (0..3000)
            .map(|_| {
                let u: f64 = rng.random();
                if u < 0.5 {
                    0
                } else if u < 0.8 {
                    1
                } else {
                    2
                }
            })
            .collect();
        assert!(chi2_discrete(&data, &[0.5, 0.3], 0.2).pass);
        assert!(!chi2_discrete(&data, &[0.8, 0.1], 0.1).pass);
    }

    #[test]
    fn report_serializes() {
        let r = GofReport::new("chi2", 1.0, 0.5, 10).with_meta("theta", 1.0);
        let json = serde_json::to_string(&r).unwrap();
        let back: GofReport = serde_json::from_str(&json).unwrap();
        assert_eq!(r, back);
    }
}
