//! Singular value decomposition, truncation to the maximal singular value,
//! and the singular-value bound `√(m1·m2)·‖g‖₂`.

use nalgebra::{DMatrix, DVector};

use crate::bell::BellCoefficients;
use crate::error::{Error, Result};

const ORTHOGONALITY_TOL: f64 = 1e-10;
const RECONSTRUCTION_TOL: f64 = 1e-9;
const SVD_EPS: f64 = 1e-15;
const SVD_MAX_ITERS: usize = 10_000;

/// Default relative degeneracy tolerance, multiplied by `s_max`.
pub const DEFAULT_RELATIVE_DEGENERACY_TOL: f64 = 1e-6;

/// Full decomposition `g = V·diag(s)·Wᵀ` with square orthogonal `V`, `W`.
#[derive(Debug, Clone)]
pub struct SingularDecomposition {
    pub v: DMatrix<f64>,
    pub s: DVector<f64>,
    pub w: DMatrix<f64>,
}

impl SingularDecomposition {
    pub fn s_max(&self) -> f64 {
        self.s[0]
    }

    /// `V·S·Wᵀ` with `S` the rectangular diagonal matrix of `s`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut s = DMatrix::zeros(self.v.nrows(), self.w.nrows());
        for (i, &si) in self.s.iter().enumerate() {
            s[(i, i)] = si;
        }
        &self.v * s * self.w.transpose()
    }
}

/// The block belonging to the maximal singular value.
#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    pub s_max: f64,
    pub degeneracy: usize,
    /// `m1 × d`; row `x` is `V⁽ᵈ⁾_{x*}`.
    pub v_d: DMatrix<f64>,
    /// `m2 × d`; row `y` is `W⁽ᵈ⁾_{y*}`.
    pub w_d: DMatrix<f64>,
    pub tol_used: f64,
}

impl TruncatedSvd {
    /// Assembles a truncation from known singular vector blocks, checking
    /// that both blocks have `d` orthonormal columns.
    pub fn from_parts(s_max: f64, v_d: DMatrix<f64>, w_d: DMatrix<f64>, tol_used: f64) -> Result<Self> {
        let d = v_d.ncols();
        if w_d.ncols() != d || d == 0 {
            return Err(Error::shape(format!("{d} columns in both blocks"), w_d.ncols()));
        }
        for block in [&v_d, &w_d] {
            let dev = (block.transpose() * block - DMatrix::identity(d, d)).amax();
            if dev > ORTHOGONALITY_TOL {
                return Err(Error::Invalid(format!(
                    "singular vector block not orthonormal (deviation {dev:.2e})"
                )));
            }
        }
        Ok(Self {
            s_max,
            degeneracy: d,
            v_d,
            w_d,
            tol_used,
        })
    }

    pub fn m1(&self) -> usize {
        self.v_d.nrows()
    }

    pub fn m2(&self) -> usize {
        self.w_d.nrows()
    }
}

/// How close to `s_max` a singular value must be to count as degenerate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DegeneracyTol {
    /// `tol = factor · s_max`.
    Relative(f64),
    Absolute(f64),
}

impl Default for DegeneracyTol {
    fn default() -> Self {
        DegeneracyTol::Relative(DEFAULT_RELATIVE_DEGENERACY_TOL)
    }
}

impl DegeneracyTol {
    pub fn absolute(self, s_max: f64) -> f64 {
        match self {
            DegeneracyTol::Relative(f) => f * s_max,
            DegeneracyTol::Absolute(t) => t,
        }
    }
}

pub fn compute_svd(g: &BellCoefficients) -> Result<SingularDecomposition> {
    let m = g.entries();
    let (m1, m2) = m.shape();
    let svd = nalgebra::SVD::try_new(m.clone(), true, true, SVD_EPS, SVD_MAX_ITERS)
        .ok_or_else(|| Error::Numerical("singular value decomposition did not converge".into()))?;
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::Numerical("singular vectors were not computed".into())),
    };

    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let s = DVector::from_iterator(order.len(), order.iter().map(|&i| svd.singular_values[i].max(0.0)));
    let left: Vec<DVector<f64>> = order.iter().map(|&i| u.column(i).into_owned()).collect();
    let right: Vec<DVector<f64>> = order.iter().map(|&i| v_t.row(i).transpose()).collect();

    let out = SingularDecomposition {
        v: complete_basis(left, m1),
        s,
        w: complete_basis(right, m2),
    };
    check_decomposition(&out, m)?;
    Ok(out)
}

/// Extends orthonormal columns to a square orthogonal matrix.
fn complete_basis(mut cols: Vec<DVector<f64>>, n: usize) -> DMatrix<f64> {
    let mut k = 0;
    while cols.len() < n && k < n {
        let mut e = DVector::zeros(n);
        e[k] = 1.0;
        // Two passes of Gram-Schmidt.
        for _ in 0..2 {
            for c in &cols {
                let p = c.dot(&e);
                e.axpy(-p, c, 1.0);
            }
        }
        let norm = e.norm();
        if norm > 1e-6 {
            cols.push(e / norm);
        }
        k += 1;
    }
    DMatrix::from_columns(&cols)
}

fn check_decomposition(d: &SingularDecomposition, g: &DMatrix<f64>) -> Result<()> {
    for (name, q) in [("V", &d.v), ("W", &d.w)] {
        let n = q.nrows();
        if q.ncols() != n {
            return Err(Error::Numerical(format!("{name} is not square")));
        }
        let dev = (q.transpose() * q - DMatrix::identity(n, n)).amax();
        if dev > ORTHOGONALITY_TOL {
            return Err(Error::Numerical(format!("{name} not orthogonal (deviation {dev:.2e})")));
        }
    }
    let dev = (d.reconstruct() - g).amax();
    if dev > RECONSTRUCTION_TOL * g.amax().max(1.0) {
        return Err(Error::Numerical(format!(
            "decomposition does not reconstruct g (deviation {dev:.2e})"
        )));
    }
    Ok(())
}

/// Keeps the singular vectors whose singular value is within `tol` (absolute)
/// of the maximum.
pub fn truncate_max(svd: &SingularDecomposition, tol: f64) -> TruncatedSvd {
    let s_max = svd.s_max();
    let d = svd.s.iter().take_while(|&&s| s >= s_max - tol).count().max(1);
    TruncatedSvd {
        s_max,
        degeneracy: d,
        v_d: svd.v.columns(0, d).into_owned(),
        w_d: svd.w.columns(0, d).into_owned(),
        tol_used: tol,
    }
}

/// `‖g‖₂`, the largest singular value.
pub fn operator_norm(g: &BellCoefficients) -> Result<f64> {
    Ok(compute_svd(g)?.s_max())
}

/// Upper bound on the quantum value: `√(m1·m2)·‖g‖₂`.
pub fn singular_value_bound(g: &BellCoefficients) -> Result<f64> {
    let scale = ((g.m1() * g.m2()) as f64).sqrt();
    Ok(scale * operator_norm(g)?)
}
