//! Exact, sampling-free probabilities for the CRP.
//!
//! The central object is the probability that a family of disjoint tuples
//! `(k_1, ..., k_N, m)` all occur as block histories. Two independent routes
//! are provided: a closed form in terms of falling factorials and overlap
//! counts, and a stepwise product over the insertion sequence. They must
//! agree to 1e-10 relative on every valid family, which is the identity the
//! Monte Carlo suites lean on as ground truth.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crp::BlockAtom;
use crate::special::ln_gamma;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("tuple {0} is not strictly increasing")]
    NotIncreasing(usize),
    #[error("tuples share the integer {0}")]
    Overlapping(u64),
    #[error("tuple {0} has length {1}, expected {2}")]
    RaggedFamily(usize, usize, usize),
    #[error("family is empty")]
    Empty,
    #[error("falling factorial argument {0} not positive (malformed family)")]
    NonPositiveFalling(f64),
    #[error("domain violation: {0}")]
    Domain(String),
}

/// Disjoint block-history tuples sharing one `theta` and one `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TupleFamily {
    pub tuples: Vec<BlockAtom>,
    pub theta: f64,
    pub n: usize,
}

impl TupleFamily {
    pub fn new(tuples: Vec<BlockAtom>, theta: f64) -> Result<Self, OracleError> {
        if tuples.is_empty() {
            return Err(OracleError::Empty);
        }
        if !(theta > 0.0) {
            return Err(OracleError::Domain(format!("theta must be positive, got {theta}")));
        }
        let n = tuples[0].k.len();
        let mut seen = BTreeSet::new();
        for (s, t) in tuples.iter().enumerate() {
            if t.k.len() != n {
                return Err(OracleError::RaggedFamily(s, t.k.len(), n));
            }
            let increasing =
                t.k.windows(2).all(|w| w[0] < w[1]) && t.k.last().is_some_and(|&l| l < t.m);
            if t.k.is_empty() || !increasing || t.k[0] == 0 {
                return Err(OracleError::NotIncreasing(s));
            }
            for &v in t.k.iter().chain(std::iter::once(&t.m)) {
                if !seen.insert(v) {
                    return Err(OracleError::Overlapping(v));
                }
            }
        }
        Ok(Self { tuples, theta, n })
    }

    pub fn r(&self) -> usize {
        self.tuples.len()
    }
}

/// Probability with a log-space shadow for underflow-free large-m cases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactProbability {
    pub value: f64,
    pub ln_value: f64,
}

impl ExactProbability {
    fn from_ln(ln_value: f64) -> Self {
        Self { value: ln_value.exp(), ln_value }
    }

    pub fn relative_error(&self, other: &Self) -> f64 {
        // compare in log space so tiny probabilities are meaningful
        (self.ln_value - other.ln_value).abs()
    }
}

/// Rising factorial x(x+1)...(x+n-1); empty product for n = 0.
pub fn rising_factorial(x: f64, n: u64) -> f64 {
    if n <= 20 {
        (0..n).fold(1.0, |acc, i| acc * (x + i as f64))
    } else {
        ln_rising_factorial(x, n).exp()
    }
}

pub fn ln_rising_factorial(x: f64, n: u64) -> f64 {
    assert!(x > 0.0, "rising factorial needs x > 0 for the log route");
    ln_gamma(x + n as f64) - ln_gamma(x)
}

/// Falling factorial x(x-1)...(x-n+1); requires x - n + 1 > 0.
pub fn falling_factorial(x: f64, n: u64) -> Result<f64, OracleError> {
    if n >= 1 && x - n as f64 + 1.0 <= 0.0 {
        return Err(OracleError::NonPositiveFalling(x - n as f64 + 1.0));
    }
    if n <= 20 {
        Ok((0..n).fold(1.0, |acc, i| acc * (x - i as f64)))
    } else {
        Ok(ln_falling_factorial(x, n)?.exp())
    }
}

pub fn ln_falling_factorial(x: f64, n: u64) -> Result<f64, OracleError> {
    if n >= 1 && x - n as f64 + 1.0 <= 0.0 {
        return Err(OracleError::NonPositiveFalling(x - n as f64 + 1.0));
    }
    Ok(ln_gamma(x + 1.0) - ln_gamma(x - n as f64 + 1.0))
}

fn ln_factorial(n: u64) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

/// Overlap counts l^(s): the number of k-components of the family that are
/// below m^(s) while belonging to a tuple whose own m exceeds m^(s).
pub fn overlap_counts(family: &TupleFamily) -> Vec<u64> {
    family
        .tuples
        .iter()
        .map(|t| {
            family
                .tuples
                .iter()
                .filter(|other| other.m > t.m)
                .flat_map(|other| other.k.iter())
                .filter(|&&kp| kp < t.m)
                .count() as u64
        })
        .collect()
}

/// Closed-form joint probability of the family's block histories:
/// `theta^r * prod_s N! / (theta + m_s - l_s - 1)^{falling (N+1)}`.
pub fn joint_probability(family: &TupleFamily) -> Result<ExactProbability, OracleError> {
    let n = family.n as u64;
    let ls = overlap_counts(family);
    let mut ln_p = family.r() as f64 * family.theta.ln();
    for (t, &l) in family.tuples.iter().zip(&ls) {
        let x = family.theta + t.m as f64 - l as f64 - 1.0;
        ln_p += ln_factorial(n) - ln_falling_factorial(x, n + 1)?;
    }
    Ok(ExactProbability::from_ln(ln_p))
}

/// The step schedule behind the stepwise product: the sorted family values
/// `a_j` with their hit sets `K_j` and avoid sets `L_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepwiseSchedule {
    pub a: Vec<u64>,
    pub k_sets: Vec<Vec<u64>>,
    pub l_sets: Vec<Vec<u64>>,
}

pub fn stepwise_schedule(family: &TupleFamily) -> StepwiseSchedule {
    #[derive(Clone, Copy)]
    enum Kind {
        K { tuple: usize, pos: usize },
        M { tuple: usize },
    }
    let mut events: Vec<(u64, Kind)> = Vec::new();
    for (s, t) in family.tuples.iter().enumerate() {
        for (p, &k) in t.k.iter().enumerate() {
            events.push((k, Kind::K { tuple: s, pos: p }));
        }
        events.push((t.m, Kind::M { tuple: s }));
    }
    events.sort_by_key(|&(a, _)| a);

    let mut a = Vec::with_capacity(events.len());
    let mut k_sets = Vec::with_capacity(events.len());
    let mut l_sets = Vec::with_capacity(events.len());
    for &(aj, kind) in &events {
        a.push(aj);
        let k_set = match kind {
            Kind::K { tuple, pos } => {
                if pos == 0 {
                    vec![family.tuples[tuple].k[0]]
                } else {
                    family.tuples[tuple].k[..pos].to_vec()
                }
            }
            Kind::M { tuple } => family.tuples[tuple].k.clone(),
        };
        k_sets.push(k_set);
        let mut l_set: Vec<u64> = family
            .tuples
            .iter()
            .filter(|t| t.m > aj)
            .flat_map(|t| t.k.iter().copied())
            .filter(|&kp| kp <= aj)
            .collect();
        l_set.sort_unstable();
        l_sets.push(l_set);
    }
    StepwiseSchedule { a, k_sets, l_sets }
}

/// Stepwise-product route for the same probability: hit `K_j` at step `a_j`,
/// avoid `L_j` strictly between consecutive `a_j`. Independent of
/// [`joint_probability`] and used as its oracle.
pub fn stepwise_probability(family: &TupleFamily) -> Result<ExactProbability, OracleError> {
    let theta = family.theta;
    let schedule = stepwise_schedule(family);
    // positivity check mirrors the closed-form route's precondition
    for (t, &l) in family.tuples.iter().zip(&overlap_counts(family)) {
        let x = theta + t.m as f64 - l as f64 - 1.0;
        if x - family.n as f64 <= 0.0 {
            return Err(OracleError::NonPositiveFalling(x - family.n as f64));
        }
    }
    let mut ln_p = 0.0;
    for (j, &aj) in schedule.a.iter().enumerate() {
        // probability that the insertion at step a_j hits K_j: the first
        // element of a tuple opens a block (weight theta), later elements
        // join it (weight |K_j|)
        let weight = if schedule.k_sets[j].len() == 1 && schedule.k_sets[j][0] == aj {
            theta
        } else {
            schedule.k_sets[j].len() as f64
        };
        ln_p += weight.ln() - (theta + aj as f64 - 1.0).ln();
        // avoid L_j on every step strictly between a_j and a_{j+1}
        if j + 1 < schedule.a.len() {
            let l_size = schedule.l_sets[j].len() as f64;
            if l_size > 0.0 {
                for i in (aj + 1)..schedule.a[j + 1] {
                    ln_p += (1.0 - l_size / (theta + i as f64 - 1.0)).ln();
                }
            }
        }
    }
    Ok(ExactProbability::from_ln(ln_p))
}

/// Canonical set partition: blocks ascending internally, sorted by least
/// element.
pub type Partition = Vec<Vec<u64>>;

/// Exact distribution over partitions of [n] induced by the CRP, computed by
/// recursion over the insertion mechanism. n is capped at 10 (Bell(10) states).
pub fn exhaustive_partition_distribution(
    n: u64,
    theta: f64,
) -> Result<BTreeMap<Partition, f64>, OracleError> {
    if n == 0 || n > 10 {
        return Err(OracleError::Domain(format!("n must be in 1..=10, got {n}")));
    }
    if !(theta > 0.0) {
        return Err(OracleError::Domain("theta must be positive".into()));
    }
    let mut dist: BTreeMap<Partition, f64> = BTreeMap::new();
    dist.insert(vec![vec![1]], 1.0);
    for m in 2..=n {
        let denom = theta + m as f64 - 1.0;
        let mut next: BTreeMap<Partition, f64> = BTreeMap::new();
        for (partition, p) in &dist {
            let mut opened = partition.clone();
            opened.push(vec![m]);
            *next.entry(opened).or_insert(0.0) += p * theta / denom;
            for (b, block) in partition.iter().enumerate() {
                let mut joined = partition.clone();
                joined[b].push(m);
                *next.entry(joined).or_insert(0.0) += p * block.len() as f64 / denom;
            }
        }
        dist = next;
    }
    Ok(dist)
}

/// Ewens partition pmf: `theta^{#blocks} * prod (|B| - 1)! / theta^{rising n}`.
pub fn ewens_partition_pmf(partition: &[Vec<u64>], theta: f64) -> f64 {
    let n: u64 = partition.iter().map(|b| b.len() as u64).sum();
    let mut p = theta.powi(partition.len() as i32) / rising_factorial(theta, n);
    for block in partition {
        p *= factorial(block.len() as u64 - 1);
    }
    p
}

/// Ewens permutation pmf: `theta^{#cycles} / theta^{rising n}`.
pub fn ewens_permutation_pmf(num_cycles: u64, n: u64, theta: f64) -> f64 {
    theta.powi(num_cycles as i32) / rising_factorial(theta, n)
}

fn factorial(n: u64) -> f64 {
    (1..=n).map(|i| i as f64).product()
}
