//! Binning subsets and the product-form coefficient tensor they induce.
//!
//! Each party bins its `d` outcomes into `+1` (outcome in the subset) and
//! `-1` (outcome outside it). The Bell coefficients are products of the two
//! parties' binnings, with the sign of the `(2, 2)` term flipped.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Measurement setting index of one party.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Setting {
    First,
    Second,
}

impl Setting {
    pub const BOTH: [Setting; 2] = [Setting::First, Setting::Second];

    #[inline]
    pub fn index(self) -> usize {
        match self {
            Setting::First => 0,
            Setting::Second => 1,
        }
    }
}

/// Which of the four binning subsets an item refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SubsetRole {
    R1,
    R2,
    S1,
    S2,
}

impl fmt::Display for SubsetRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SubsetRole::R1 => "R1",
            SubsetRole::R2 => "R2",
            SubsetRole::S1 => "S1",
            SubsetRole::S2 => "S2",
        })
    }
}

/// Validated membership mask of one binning subset.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Subset {
    mask: Vec<bool>,
}

impl Subset {
    fn new(role: SubsetRole, d: usize, elements: &[usize]) -> Result<Self> {
        let mut mask = vec![false; d];
        for &element in elements {
            if element >= d {
                return Err(Error::ElementOutOfRange { role, element, d });
            }
            if mask[element] {
                return Err(Error::DuplicateElement { role, element });
            }
            mask[element] = true;
        }
        if mask.iter().all(|&m| m) {
            return Err(Error::FullSubset { role, d });
        }
        Ok(Self { mask })
    }

    #[inline]
    pub fn contains(&self, k: usize) -> bool {
        self.mask[k]
    }

    /// Binning function: `+1` inside the subset, `-1` outside.
    #[inline]
    pub fn zeta(&self, k: usize) -> i8 {
        if self.mask[k] {
            1
        } else {
            -1
        }
    }

    pub fn len(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn elements(&self) -> Vec<usize> {
        (0..self.mask.len()).filter(|&k| self.mask[k]).collect()
    }
}

/// The four binning subsets `R1, R2` (Alice) and `S1, S2` (Bob) of a
/// `d`-outcome scenario.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinningSpec {
    d: usize,
    r1: Subset,
    r2: Subset,
    s1: Subset,
    s2: Subset,
}

impl BinningSpec {
    /// Validates subsets: elements in `0..d`, no duplicates, and no subset
    /// equal to the full outcome set.
    pub fn new(d: usize, r1: &[usize], r2: &[usize], s1: &[usize], s2: &[usize]) -> Result<Self> {
        if d < 2 {
            return Err(Error::DimensionTooSmall(d));
        }
        Ok(Self {
            d,
            r1: Subset::new(SubsetRole::R1, d, r1)?,
            r2: Subset::new(SubsetRole::R2, d, r2)?,
            s1: Subset::new(SubsetRole::S1, d, s1)?,
            s2: Subset::new(SubsetRole::S2, d, s2)?,
        })
    }

    /// Same subset on all four observables.
    pub fn uniform(d: usize, subset: &[usize]) -> Result<Self> {
        Self::new(d, subset, subset, subset, subset)
    }

    pub fn preset(kind: PresetKind, d: usize) -> Result<Self> {
        Self::uniform(d, &kind.subset(d))
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn subset(&self, role: SubsetRole) -> &Subset {
        match role {
            SubsetRole::R1 => &self.r1,
            SubsetRole::R2 => &self.r2,
            SubsetRole::S1 => &self.s1,
            SubsetRole::S2 => &self.s2,
        }
    }

    /// Alice's subset for setting `a`.
    pub fn alice(&self, a: Setting) -> &Subset {
        match a {
            Setting::First => &self.r1,
            Setting::Second => &self.r2,
        }
    }

    /// Bob's subset for setting `b`.
    pub fn bob(&self, b: Setting) -> &Subset {
        match b {
            Setting::First => &self.s1,
            Setting::Second => &self.s2,
        }
    }

    /// Subset sizes `(n1, n2, m1, m2)`.
    pub fn sizes(&self) -> (usize, usize, usize, usize) {
        (self.r1.len(), self.r2.len(), self.s1.len(), self.s2.len())
    }

    pub fn has_empty_subset(&self) -> bool {
        [&self.r1, &self.r2, &self.s1, &self.s2]
            .iter()
            .any(|s| s.is_empty())
    }

    /// Applies an outcome relabeling `k -> perm[k]` to every subset.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self> {
        let map = |s: &Subset| s.elements().iter().map(|&k| perm[k]).collect::<Vec<_>>();
        Self::new(
            self.d,
            &map(&self.r1),
            &map(&self.r2),
            &map(&self.s1),
            &map(&self.s2),
        )
    }
}

/// The named binnings: sharp (alternating), unsharp (period-4 pairs), and
/// regional (lower half).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PresetKind {
    T1,
    T2,
    T3,
}

impl PresetKind {
    pub const ALL: [PresetKind; 3] = [PresetKind::T1, PresetKind::T2, PresetKind::T3];

    pub fn subset(self, d: usize) -> Vec<usize> {
        match self {
            PresetKind::T1 => (0..d).filter(|k| k % 2 == 0).collect(),
            PresetKind::T2 => (0..d).filter(|k| k % 4 < 2).collect(),
            PresetKind::T3 => (0..d / 2).collect(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PresetKind::T1 => "t1",
            PresetKind::T2 => "t2",
            PresetKind::T3 => "t3",
        }
    }
}

impl fmt::Display for PresetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PresetKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "t1" => Ok(PresetKind::T1),
            "t2" => Ok(PresetKind::T2),
            "t3" => Ok(PresetKind::T3),
            other => Err(format!(
                "unknown binning preset `{other}` (expected t1, t2 or t3)"
            )),
        }
    }
}

/// A preset binning at a fixed dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BinningPreset {
    pub kind: PresetKind,
    pub d: usize,
}

impl BinningPreset {
    pub fn new(kind: PresetKind, d: usize) -> Self {
        Self { kind, d }
    }

    pub fn spec(&self) -> Result<BinningSpec> {
        BinningSpec::preset(self.kind, self.d)
    }
}

/// Sign applied to the `(2, 2)` product term.
///
/// `Standard` is the only convention that yields the intended inequality;
/// `Unflipped` exists so checks can be run against a deliberately wrong
/// tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SignConvention {
    #[default]
    Standard,
    Unflipped,
}

/// Dense `2 x 2 x d x d` coefficient array `eps_ab(k, l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTensor {
    d: usize,
    eps: Vec<f64>,
}

impl CoefficientTensor {
    /// General constructor; `f(a, b, k, l)` may return any real weight.
    pub fn from_fn(d: usize, mut f: impl FnMut(Setting, Setting, usize, usize) -> f64) -> Self {
        let mut eps = Vec::with_capacity(4 * d * d);
        for a in Setting::BOTH {
            for b in Setting::BOTH {
                for k in 0..d {
                    for l in 0..d {
                        eps.push(f(a, b, k, l));
                    }
                }
            }
        }
        Self { d, eps }
    }

    pub fn from_binning(spec: &BinningSpec, convention: SignConvention) -> Self {
        Self::from_fn(spec.d(), |a, b, k, l| {
            let prod = f64::from(spec.alice(a).zeta(k) * spec.bob(b).zeta(l));
            if a == Setting::Second
                && b == Setting::Second
                && convention == SignConvention::Standard
            {
                -prod
            } else {
                prod
            }
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn get(&self, a: Setting, b: Setting, k: usize, l: usize) -> f64 {
        self.eps[self.offset(a, b) + k * self.d + l]
    }

    /// The `d x d` block for setting pair `(a, b)`, row-major in `(k, l)`.
    pub fn block(&self, a: Setting, b: Setting) -> &[f64] {
        let start = self.offset(a, b);
        &self.eps[start..start + self.d * self.d]
    }

    pub fn is_sign_valued(&self) -> bool {
        self.eps.iter().all(|&e| e == 1.0 || e == -1.0)
    }

    #[inline]
    fn offset(&self, a: Setting, b: Setting) -> usize {
        (a.index() * 2 + b.index()) * self.d * self.d
    }
}

/// Coefficient tensor of a binning, with the `(2, 2)` sign flip.
pub fn build_coefficients(spec: &BinningSpec) -> CoefficientTensor {
    CoefficientTensor::from_binning(spec, SignConvention::Standard)
}
