//! Local-realistic bound, maximizer counting and facet certificates.
//!
//! A deterministic strategy fixes one outcome per observable,
//! `(k1, k2, l1, l2)`. Its Bell value is
//! `eps11(k1,l1) + eps12(k1,l2) + eps21(k2,l1) + eps22(k2,l2)`, and the
//! local-realistic bound is the maximum over all `d^4` strategies.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binning::{BinningSpec, CoefficientTensor, Setting};
use crate::error::{Error, Result};
use crate::exact_rank::ExactRank;

/// Largest `d` for which the `d^4` strategy space is enumerated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationLimit(pub usize);

impl Default for EnumerationLimit {
    fn default() -> Self {
        EnumerationLimit(32)
    }
}

impl EnumerationLimit {
    fn check(self, d: usize) -> Result<()> {
        if d > self.0 {
            Err(Error::DimensionLimit {
                what: "enumeration",
                d,
                limit: self.0,
            })
        } else {
            Ok(())
        }
    }
}

/// One deterministic outcome assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DeterministicConfig {
    pub k1: usize,
    pub k2: usize,
    pub l1: usize,
    pub l2: usize,
}

impl DeterministicConfig {
    pub fn new(d: usize, k1: usize, k2: usize, l1: usize, l2: usize) -> Result<Self> {
        for value in [k1, k2, l1, l2] {
            if value >= d {
                return Err(Error::OutcomeOutOfRange { value, d });
            }
        }
        Ok(Self { k1, k2, l1, l2 })
    }

    #[inline]
    pub fn alice(&self, a: Setting) -> usize {
        match a {
            Setting::First => self.k1,
            Setting::Second => self.k2,
        }
    }

    #[inline]
    pub fn bob(&self, b: Setting) -> usize {
        match b {
            Setting::First => self.l1,
            Setting::Second => self.l2,
        }
    }

    /// All `d^4` configurations in lexicographic `(k1, k2, l1, l2)` order.
    pub fn all(d: usize) -> impl Iterator<Item = DeterministicConfig> {
        (0..d).flat_map(move |k1| {
            (0..d).flat_map(move |k2| {
                (0..d).flat_map(move |l1| {
                    (0..d).map(move |l2| DeterministicConfig { k1, k2, l1, l2 })
                })
            })
        })
    }
}

/// The `4 d^2` component 0/1 vector of a deterministic strategy: four
/// `d^2` blocks for the setting pairs (1,1), (1,2), (2,1), (2,2), each with
/// a single one at `k_a * d + l_b`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ExtremalVector {
    d: usize,
    ones: [usize; 4],
}

impl ExtremalVector {
    pub fn from_config(d: usize, config: &DeterministicConfig) -> Self {
        let mut ones = [0; 4];
        for a in Setting::BOTH {
            for b in Setting::BOTH {
                let block = a.index() * 2 + b.index();
                ones[block] = block * d * d + config.alice(a) * d + config.bob(b);
            }
        }
        Self { d, ones }
    }

    pub fn len(&self) -> usize {
        4 * self.d * self.d
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Positions of the four nonzero components, one per block.
    pub fn support(&self) -> [usize; 4] {
        self.ones
    }

    pub fn components(&self) -> Vec<u8> {
        let mut v = vec![0; self.len()];
        for &i in &self.ones {
            v[i] = 1;
        }
        v
    }

    fn as_i64(&self) -> Vec<i64> {
        let mut v = vec![0; self.len()];
        for &i in &self.ones {
            v[i] = 1;
        }
        v
    }
}

fn check_config(coeffs: &CoefficientTensor, config: &DeterministicConfig) -> Result<()> {
    let d = coeffs.d();
    DeterministicConfig::new(d, config.k1, config.k2, config.l1, config.l2).map(|_| ())
}

#[inline]
fn value_unchecked(coeffs: &CoefficientTensor, c: &DeterministicConfig) -> f64 {
    use Setting::{First, Second};
    coeffs.get(First, First, c.k1, c.l1)
        + coeffs.get(First, Second, c.k1, c.l2)
        + coeffs.get(Second, First, c.k2, c.l1)
        + coeffs.get(Second, Second, c.k2, c.l2)
}

/// Bell value of one deterministic strategy.
pub fn deterministic_value(
    coeffs: &CoefficientTensor,
    config: &DeterministicConfig,
) -> Result<f64> {
    check_config(coeffs, config)?;
    Ok(value_unchecked(coeffs, config))
}

/// Maximum over all strategies and the number of strategies attaining it.
///
/// The search is split over `k1`; per-slice results are merged in `k1`
/// order so the outcome does not depend on the thread count.
fn max_and_count(coeffs: &CoefficientTensor, limit: EnumerationLimit) -> Result<(f64, usize)> {
    let d = coeffs.d();
    limit.check(d)?;
    let slices: Vec<(f64, usize)> = (0..d)
        .into_par_iter()
        .map(|k1| {
            let mut best = f64::NEG_INFINITY;
            let mut count = 0usize;
            for k2 in 0..d {
                for l1 in 0..d {
                    for l2 in 0..d {
                        let v = value_unchecked(coeffs, &DeterministicConfig { k1, k2, l1, l2 });
                        if v > best {
                            best = v;
                            count = 1;
                        } else if v == best {
                            count += 1;
                        }
                    }
                }
            }
            (best, count)
        })
        .collect();
    let mut best = f64::NEG_INFINITY;
    let mut count = 0;
    for (v, c) in slices {
        if v > best {
            best = v;
            count = c;
        } else if v == best {
            count += c;
        }
    }
    Ok((best, count))
}

/// Exact local-realistic bound by enumeration of all `d^4` strategies.
pub fn lr_max(coeffs: &CoefficientTensor, limit: EnumerationLimit) -> Result<f64> {
    max_and_count(coeffs, limit).map(|(v, _)| v)
}

/// Number of strategies attaining the local-realistic bound exactly.
pub fn count_max_configs(coeffs: &CoefficientTensor, limit: EnumerationLimit) -> Result<usize> {
    max_and_count(coeffs, limit).map(|(_, c)| c)
}

/// Lazily enumerates strategies whose value equals `target` exactly, in
/// lexicographic order.
pub fn configs_attaining(
    coeffs: &CoefficientTensor,
    target: f64,
) -> impl Iterator<Item = DeterministicConfig> + '_ {
    DeterministicConfig::all(coeffs.d()).filter(move |c| value_unchecked(coeffs, c) == target)
}

/// Closed-form count of maximizers from subset sizes:
/// `d^2 (d^2 - d(n1+m1) + n1(m1+m2) + n2(m1-m2))`.
pub fn m_formula(spec: &BinningSpec) -> u64 {
    let d = spec.d() as i128;
    let (n1, n2, m1, m2) = spec.sizes();
    let (n1, n2, m1, m2) = (n1 as i128, n2 as i128, m1 as i128, m2 as i128);
    let m = d * d * (d * d - d * (n1 + m1) + n1 * (m1 + m2) + n2 * (m1 - m2));
    u64::try_from(m).expect("maximizer count is nonnegative")
}

/// `4 d (d - 1)`, the number of independent maximizers a facet needs.
pub fn facet_threshold(d: usize) -> u64 {
    4 * d as u64 * (d as u64 - 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TightnessReport {
    pub lr_max: f64,
    pub m_counted: u64,
    pub m_formula: u64,
    pub threshold: u64,
    pub linear_rank: u64,
    pub affine_rank: u64,
    pub is_tight_by_count: bool,
}

/// Counts maximizers, evaluates the closed-form count, and computes the
/// exact linear and affine ranks of the maximizing extremal vectors.
///
/// Maximizers are streamed into the rank accumulators rather than stored.
/// The affine rank is the rank of differences from the first maximizer,
/// plus one.
pub fn tightness_certificate(
    spec: &BinningSpec,
    limit: EnumerationLimit,
) -> Result<TightnessReport> {
    let coeffs = crate::binning::build_coefficients(spec);
    let d = spec.d();
    let (best, counted) = max_and_count(&coeffs, limit)?;

    let ncols = 4 * d * d;
    let mut linear = ExactRank::new(ncols);
    let mut differences = ExactRank::new(ncols);
    let mut origin: Option<Vec<i64>> = None;
    for config in configs_attaining(&coeffs, best) {
        let v = ExtremalVector::from_config(d, &config).as_i64();
        linear.push(&v);
        match &origin {
            None => origin = Some(v),
            Some(o) => {
                let diff: Vec<i64> = v.iter().zip(o).map(|(x, y)| x - y).collect();
                differences.push(&diff);
            }
        }
        if linear.is_full() && differences.rank() + 1 >= linear.rank() {
            break;
        }
    }
    let affine_rank = if origin.is_some() {
        differences.rank() + 1
    } else {
        0
    };
    let threshold = facet_threshold(d);
    Ok(TightnessReport {
        lr_max: best,
        m_counted: counted as u64,
        m_formula: m_formula(spec),
        threshold,
        linear_rank: linear.rank() as u64,
        affine_rank: affine_rank as u64,
        is_tight_by_count: counted as u64 >= threshold,
    })
}
