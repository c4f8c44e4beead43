//! Correlation Bell expressions and their local-realistic bound.
//!
//! A coefficient matrix `g` (rows: Alice's settings, columns: Bob's settings)
//! defines the expression `Σ g[x][y] E(x, y)`. The classical bound is the
//! maximum of that expression over deterministic ±1 assignments.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Tolerance for correlation entries outside `[-1, 1]` that are clamped
/// rather than rejected.
pub const CORRELATION_SLACK: f64 = 1e-9;

/// Largest enumerated side: `2^30` sign patterns.
pub const MAX_ENUMERATED_SETTINGS: usize = 30;

/// Real `m1 × m2` coefficient matrix of a correlation Bell inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct BellCoefficients {
    entries: DMatrix<f64>,
}

impl BellCoefficients {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(Error::Invalid(format!(
                "coefficient matrix must be at least 1x1, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if let Some(bad) = entries.iter().find(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("non-finite coefficient {bad}")));
        }
        if entries.iter().all(|&v| v == 0.0) {
            return Err(Error::Invalid("all coefficients are zero".into()));
        }
        Ok(Self { entries })
    }

    /// Builds from row vectors; rejects ragged input.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let m1 = rows.len();
        let m2 = rows.first().map_or(0, |r| r.as_ref().len());
        for (i, r) in rows.iter().enumerate() {
            if r.as_ref().len() != m2 {
                return Err(Error::shape(format!("{m2} entries in row {}", i + 1), r.as_ref().len()));
            }
        }
        Self::new(DMatrix::from_fn(m1, m2, |x, y| rows[x].as_ref()[y]))
    }

    /// The CHSH matrix `[[1, 1], [1, -1]]`.
    pub fn chsh() -> Self {
        Self::from_rows(&[[1.0, 1.0], [1.0, -1.0]]).expect("valid")
    }

    pub fn identity(n: usize) -> Self {
        Self::new(DMatrix::identity(n, n)).expect("valid")
    }

    /// The 8×4 Vértesi–Pál matrix: rows are all sign patterns of the first
    /// three columns, last column all ones, with the first column toggling
    /// fastest.
    pub fn vertesi_pal() -> Self {
        let entries = DMatrix::from_fn(8, 4, |x, y| match y {
            3 => 1.0,
            _ if (x >> y) & 1 == 1 => -1.0,
            _ => 1.0,
        });
        Self::new(entries).expect("valid")
    }

    pub fn m1(&self) -> usize {
        self.entries.nrows()
    }

    pub fn m2(&self) -> usize {
        self.entries.ncols()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Row-major copy of the entries.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    /// Swaps the roles of Alice and Bob.
    pub fn transpose(&self) -> Self {
        Self {
            entries: self.entries.transpose(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.amax()
    }
}

/// Table of joint expectation values `E(x, y)`, each in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(into = "Vec<Vec<f64>>")]
pub struct CorrelationTable {
    values: DMatrix<f64>,
}

impl From<CorrelationTable> for Vec<Vec<f64>> {
    fn from(t: CorrelationTable) -> Self {
        t.values.row_iter().map(|r| r.iter().copied().collect()).collect()
    }
}

impl CorrelationTable {
    /// Validates entries to `[-1, 1]` up to [`CORRELATION_SLACK`] and clamps.
    pub fn new(mut values: DMatrix<f64>) -> Result<Self> {
        for v in values.iter_mut() {
            if !v.is_finite() || v.abs() > 1.0 + CORRELATION_SLACK {
                return Err(Error::Invalid(format!(
                    "correlation {v} outside [-1, 1]; not a physical table"
                )));
            }
            *v = v.clamp(-1.0, 1.0);
        }
        Ok(Self { values })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let m2 = rows.first().map_or(0, |r| r.as_ref().len());
        if rows.iter().any(|r| r.as_ref().len() != m2) {
            return Err(Error::Invalid("ragged correlation rows".into()));
        }
        Self::new(DMatrix::from_fn(rows.len(), m2, |x, y| rows[x].as_ref()[y]))
    }

    pub fn zeros(m1: usize, m2: usize) -> Self {
        Self {
            values: DMatrix::zeros(m1, m2),
        }
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[(x, y)]
    }
}

/// Local deterministic outcomes `a(x)`, `b(y)` in `{-1, +1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeterministicAssignment {
    a: Vec<i8>,
    b: Vec<i8>,
}

impl DeterministicAssignment {
    pub fn new(a: Vec<i8>, b: Vec<i8>) -> Result<Self> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::Invalid("assignment needs at least one setting per party".into()));
        }
        if let Some(s) = a.iter().chain(&b).find(|s| s.abs() != 1) {
            return Err(Error::Invalid(format!("assignment entry {s} is not ±1")));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> &[i8] {
        &self.a
    }

    pub fn b(&self) -> &[i8] {
        &self.b
    }
}

/// `E(x, y) = a(x) b(y)`.
pub fn correlations_from_assignment(d: &DeterministicAssignment) -> CorrelationTable {
    CorrelationTable {
        values: DMatrix::from_fn(d.a.len(), d.b.len(), |x, y| f64::from(d.a[x]) * f64::from(d.b[y])),
    }
}

/// Left-hand side `Σ g[x][y] E(x, y)`.
pub fn evaluate_bell(g: &BellCoefficients, e: &CorrelationTable) -> Result<f64> {
    if g.entries.shape() != e.values.shape() {
        return Err(Error::shape(
            format!("{}x{} correlations", g.m1(), g.m2()),
            format!("{}x{}", e.values.nrows(), e.values.ncols()),
        ));
    }
    Ok(g.entries.component_mul(&e.values).sum())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassicalBound {
    pub value: f64,
    pub assignment: DeterministicAssignment,
}

const CHUNK: u64 = 1 << 12;

/// Exact local-realistic bound by enumeration over the smaller party.
///
/// For each sign vector on the enumerated side the other side responds with
/// `sign(row sum)` (zero maps to `+1`), contributing `Σ |row sum|`. The first
/// enumerated sign is fixed to `+1` because a global flip leaves the value
/// unchanged. Ties keep the lowest pattern index, so the result does not
/// depend on how the enumeration is split across threads.
pub fn classical_bound(g: &BellCoefficients) -> Result<ClassicalBound> {
    let transposed = g.m2() > g.m1();
    let h = if transposed {
        g.entries.transpose()
    } else {
        g.entries.clone()
    };
    let k = h.ncols();
    if k > MAX_ENUMERATED_SETTINGS {
        return Err(Error::Resource {
            what: "classical enumeration",
            required: 1u128 << k,
            allowed: 1u128 << MAX_ENUMERATED_SETTINGS,
        });
    }
    let patterns = 1u64 << (k - 1);
    // Row-major copy keeps the inner loop contiguous.
    let rows: Vec<Vec<f64>> = h.row_iter().map(|r| r.iter().copied().collect()).collect();

    let scan = |lo: u64, hi: u64| -> (f64, u64) {
        let mut best = (f64::NEG_INFINITY, lo);
        for idx in lo..hi {
            let v = pattern_value(&rows, idx);
            if v > best.0 {
                best = (v, idx);
            }
        }
        best
    };

    let (value, idx) = if patterns <= 4 * CHUNK {
        scan(0, patterns)
    } else {
        let chunks = patterns.div_ceil(CHUNK);
        let partial: Vec<(f64, u64)> = (0..chunks)
            .into_par_iter()
            .map(|c| scan(c * CHUNK, ((c + 1) * CHUNK).min(patterns)))
            .collect();
        partial
            .into_iter()
            .fold((f64::NEG_INFINITY, 0), |acc, p| if p.0 > acc.0 { p } else { acc })
    };

    let enumerated = pattern_signs(idx, k);
    let response: Vec<i8> = rows
        .iter()
        .map(|r| {
            let s: f64 = r.iter().zip(&enumerated).map(|(c, &b)| c * f64::from(b)).sum();
            if s >= 0.0 {
                1
            } else {
                -1
            }
        })
        .collect();
    let assignment = if transposed {
        DeterministicAssignment::new(enumerated, response)?
    } else {
        DeterministicAssignment::new(response, enumerated)?
    };
    Ok(ClassicalBound { value, assignment })
}

/// Bit `j` of `idx` set means sign `-1` at position `j + 1`; position 0 is `+1`.
fn pattern_signs(idx: u64, k: usize) -> Vec<i8> {
    (0..k)
        .map(|j| if j > 0 && (idx >> (j - 1)) & 1 == 1 { -1 } else { 1 })
        .collect()
}

fn pattern_value(rows: &[Vec<f64>], idx: u64) -> f64 {
    rows.iter()
        .map(|r| {
            let mut s = r[0];
            for (j, c) in r.iter().enumerate().skip(1) {
                if (idx >> (j - 1)) & 1 == 1 {
                    s -= c;
                } else {
                    s += c;
                }
            }
            s.abs()
        })
        .sum()
}
