//! Exact rank of integer vectors by streaming fraction-free elimination.
//!
//! Rows are kept in reduced echelon form with primitive integer entries
//! (each row divided by the gcd of its entries), so reducing an incoming
//! vector touches only the basis rows whose pivots lie in its support.
//! Arithmetic runs in checked `i128` and moves to `BigInt` on overflow.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{CheckedMul, CheckedSub, Signed, Zero};

trait ExactInt: Clone + PartialEq + Zero + Integer + Signed + CheckedMul + CheckedSub {}

impl ExactInt for i128 {}
impl ExactInt for BigInt {}

struct Overflow;

struct Echelon<T> {
    ncols: usize,
    rows: Vec<Vec<T>>,
    pivot_row: Vec<Option<usize>>,
}

impl<T: ExactInt> Echelon<T> {
    fn new(ncols: usize) -> Self {
        Self {
            ncols,
            rows: Vec::new(),
            pivot_row: vec![None; ncols],
        }
    }

    fn rank(&self) -> usize {
        self.rows.len()
    }

    fn push(&mut self, mut w: Vec<T>) -> Result<bool, Overflow> {
        debug_assert_eq!(w.len(), self.ncols);
        let support: Vec<usize> = (0..self.ncols).filter(|&c| !w[c].is_zero()).collect();
        for c in support {
            let Some(r) = self.pivot_row[c] else { continue };
            if w[c].is_zero() {
                continue;
            }
            let row = &self.rows[r];
            let (p, q) = (row[c].clone(), w[c].clone());
            w = combine(&p, &w, &q, row)?;
            normalize(&mut w);
        }
        let Some(pivot) = w.iter().position(|x| !x.is_zero()) else {
            return Ok(false);
        };
        normalize(&mut w);

        // Clear the new pivot column from the existing rows. All updates are
        // computed before any is applied so an overflow leaves `self` intact.
        let mut updates = Vec::new();
        for (i, row) in self.rows.iter().enumerate() {
            if row[pivot].is_zero() {
                continue;
            }
            let (p, q) = (w[pivot].clone(), row[pivot].clone());
            let mut updated = combine(&p, row, &q, &w)?;
            normalize(&mut updated);
            updates.push((i, updated));
        }
        for (i, row) in updates {
            self.rows[i] = row;
        }
        self.pivot_row[pivot] = Some(self.rows.len());
        self.rows.push(w);
        Ok(true)
    }
}

/// `p * x - q * y`, entrywise.
fn combine<T: ExactInt>(p: &T, x: &[T], q: &T, y: &[T]) -> Result<Vec<T>, Overflow> {
    x.iter()
        .zip(y)
        .map(|(xi, yi)| {
            let a = p.checked_mul(xi).ok_or(Overflow)?;
            let b = q.checked_mul(yi).ok_or(Overflow)?;
            a.checked_sub(&b).ok_or(Overflow)
        })
        .collect()
}

fn normalize<T: ExactInt>(w: &mut [T]) {
    let mut g = T::zero();
    for x in w.iter() {
        if !x.is_zero() {
            g = g.gcd(x);
        }
    }
    if g.is_zero() {
        return;
    }
    let first_negative = w
        .iter()
        .find(|x| !x.is_zero())
        .is_some_and(|x| x.is_negative());
    if first_negative {
        g = -g;
    }
    if g != T::one() {
        for x in w.iter_mut() {
            *x = x.div_floor(&g);
        }
    }
}

enum Backend {
    Small(Echelon<i128>),
    Big(Echelon<BigInt>),
}

/// Incrementally computed exact rank of a stream of integer vectors.
pub struct ExactRank {
    ncols: usize,
    backend: Backend,
}

impl ExactRank {
    pub fn new(ncols: usize) -> Self {
        Self {
            ncols,
            backend: Backend::Small(Echelon::new(ncols)),
        }
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn rank(&self) -> usize {
        match &self.backend {
            Backend::Small(e) => e.rank(),
            Backend::Big(e) => e.rank(),
        }
    }

    pub fn is_full(&self) -> bool {
        self.rank() == self.ncols
    }

    /// Adds `v` and returns whether it increased the rank.
    pub fn push(&mut self, v: &[i64]) -> bool {
        assert_eq!(
            v.len(),
            self.ncols,
            "vector length does not match column count"
        );
        if let Backend::Small(e) = &mut self.backend {
            match e.push(v.iter().map(|&x| i128::from(x)).collect()) {
                Ok(grew) => return grew,
                Err(Overflow) => self.backend = Backend::Big(promote(e)),
            }
        }
        match &mut self.backend {
            Backend::Big(e) => match e.push(v.iter().map(|&x| BigInt::from(x)).collect()) {
                Ok(grew) => grew,
                Err(Overflow) => unreachable!("BigInt arithmetic does not overflow"),
            },
            Backend::Small(_) => unreachable!(),
        }
    }

    pub fn uses_big_integers(&self) -> bool {
        matches!(self.backend, Backend::Big(_))
    }
}

fn promote(e: &Echelon<i128>) -> Echelon<BigInt> {
    Echelon {
        ncols: e.ncols,
        rows: e
            .rows
            .iter()
            .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
            .collect(),
        pivot_row: e.pivot_row.clone(),
    }
}

/// Rank of a finite set of integer vectors of length `ncols`.
pub fn exact_rank<'a>(vectors: impl IntoIterator<Item = &'a [i64]>, ncols: usize) -> usize {
    let mut acc = ExactRank::new(ncols);
    for v in vectors {
        acc.push(v);
        if acc.is_full() {
            break;
        }
    }
    acc.rank()
}
