//! Attainability of the singular-value bound.
//!
//! The bound is reached when a `d × d'` matrix `α` normalizes every stacked
//! row `A_i` of `[V⁽ᵈ⁾; √(m2/m1)·W⁽ᵈ⁾]`, i.e. `A_i·X·A_iᵀ = 1` with
//! `X = ααᵀ`. The Gram ansatz looks for `X = Σ_j c_j A_jᵀA_j`, which turns
//! the quadratic system into the linear one `Q·c = 1` with
//! `Q_ij = (A_i·A_j)²`. A failed ansatz means "not certified", not "untight".

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::bell::BellCoefficients;
use crate::error::{Error, GramFailure, Result};
use crate::svd::{compute_svd, truncate_max, DegeneracyTol, TruncatedSvd};

pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-6;
/// Relative cutoff for the pseudoinverse of `Q`.
pub const PINV_CUTOFF: f64 = 1e-10;
/// Relative eigenvalue threshold for PSD clamping and rank.
pub const EIGEN_TOL: f64 = 1e-8;

/// The fixed data `A` of the normalization system.
#[derive(Debug, Clone)]
pub struct ConstraintRows {
    pub a: DMatrix<f64>,
    pub m1: usize,
    pub m2: usize,
}

impl ConstraintRows {
    pub fn degeneracy(&self) -> usize {
        self.a.ncols()
    }

    /// `max_i |A_i·X·A_iᵀ − 1|`.
    pub fn residual(&self, x: &DMatrix<f64>) -> f64 {
        let ax = &self.a * x;
        ax.row_iter()
            .zip(self.a.row_iter())
            .map(|(l, r)| (l.dot(&r) - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// A normalization matrix and the quantities derived from it.
#[derive(Debug, Clone)]
pub struct AlphaSolution {
    /// `X = ααᵀ`, `d × d`, symmetric PSD.
    pub x_matrix: DMatrix<f64>,
    /// Symmetric square root of `X`.
    pub alpha: DMatrix<f64>,
    pub rank_dprime: usize,
    pub residual: f64,
    /// Eigenvalues of `X`, descending, with roundoff negatives clamped to 0.
    pub eigenvalues: Vec<f64>,
    /// Matching unit eigenvectors as columns.
    pub eigenvectors: DMatrix<f64>,
}

impl AlphaSolution {
    /// Wraps a caller-supplied `α` (any `d × k`), scoring it against `rows`.
    /// Fails only when `α` has the wrong number of rows.
    pub fn from_alpha(rows: &ConstraintRows, alpha: &DMatrix<f64>) -> Result<Self> {
        if alpha.nrows() != rows.degeneracy() {
            return Err(Error::shape(
                format!("alpha with {} rows", rows.degeneracy()),
                alpha.nrows(),
            ));
        }
        let x = alpha * alpha.transpose();
        let residual = rows.residual(&x);
        Self::from_gram(x, residual)
    }

    /// Decomposes `X`; eigenvalues below `−1e−8·λ_max` reject it as not PSD.
    pub fn from_gram(x: DMatrix<f64>, residual: f64) -> Result<Self> {
        let x = (&x + x.transpose()) * 0.5;
        let eig = SymmetricEigen::try_new(x.clone(), 1e-15, 10_000)
            .ok_or_else(|| Error::Numerical("eigendecomposition of X did not converge".into()))?;
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let raw: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut vecs = DMatrix::from_columns(&order.iter().map(|&i| eig.eigenvectors.column(i)).collect::<Vec<_>>());
        // Sign convention: the largest-magnitude entry of each eigenvector is positive.
        for mut col in vecs.column_iter_mut() {
            let pivot = col
                .iter()
                .fold(0.0f64, |p, &v| if v.abs() > p.abs() + 1e-12 { v } else { p });
            if pivot < 0.0 {
                col.neg_mut();
            }
        }
        let scale = raw.iter().fold(0.0f64, |m, l| m.max(l.abs()));
        let min = raw.last().copied().unwrap_or(0.0);
        if min < -EIGEN_TOL * scale {
            return Err(Error::NoAlpha(GramFailure::NoRealSolution { min_eigenvalue: min }));
        }
        let eigenvalues: Vec<f64> = raw.iter().map(|l| l.max(0.0)).collect();
        let rank = eigenvalues.iter().filter(|&&l| l > EIGEN_TOL * scale).count();
        let sqrt_diag = DMatrix::from_diagonal(&DVector::from_iterator(
            eigenvalues.len(),
            eigenvalues.iter().map(|l| l.sqrt()),
        ));
        let alpha = &vecs * sqrt_diag * vecs.transpose();
        Ok(Self {
            x_matrix: x,
            alpha,
            rank_dprime: rank,
            residual,
            eigenvalues,
            eigenvectors: vecs,
        })
    }

    pub fn degeneracy(&self) -> usize {
        self.x_matrix.nrows()
    }

    /// Orthonormal basis of the support of `X` (the first `d'` eigenvectors).
    pub fn support(&self) -> DMatrix<f64> {
        self.eigenvectors.columns(0, self.rank_dprime).into_owned()
    }
}

/// Stacks `V⁽ᵈ⁾` over `√(m2/m1)·W⁽ᵈ⁾`.
pub fn build_constraint_rows(t: &TruncatedSvd) -> ConstraintRows {
    let (m1, m2, d) = (t.m1(), t.m2(), t.degeneracy);
    let weight = (m2 as f64 / m1 as f64).sqrt();
    let mut a = DMatrix::zeros(m1 + m2, d);
    a.rows_mut(0, m1).copy_from(&t.v_d);
    a.rows_mut(m1, m2).copy_from(&(&t.w_d * weight));
    ConstraintRows { a, m1, m2 }
}

/// Min-norm least squares solution of `M·x = b` with relative singular value cutoff.
pub(crate) fn pinv_solve(m: &DMatrix<f64>, b: &DVector<f64>, rel_cutoff: f64) -> Result<DVector<f64>> {
    let svd = nalgebra::SVD::try_new(m.clone(), true, true, 1e-15, 10_000)
        .ok_or_else(|| Error::Numerical("pseudoinverse decomposition did not converge".into()))?;
    let (u, v_t) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let s_max = svd.singular_values.max();
    let ub = u.transpose() * b;
    let mut y = DVector::zeros(svd.singular_values.len());
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > rel_cutoff * s_max {
            y[i] = ub[i] / s;
        }
    }
    Ok(v_t.transpose() * y)
}

/// Gram ansatz: `c = pinv(Q)·1`, `X = Aᵀ·diag(c)·A`, `α = X^{1/2}`.
pub fn solve_alpha_gram(rows: &ConstraintRows, residual_tol: f64) -> Result<AlphaSolution> {
    let a = &rows.a;
    let n = a.nrows();
    let q = (a * a.transpose()).map(|v| v * v);
    let ones = DVector::from_element(n, 1.0);
    let c = pinv_solve(&q, &ones, PINV_CUTOFF)?;
    if !c.iter().all(|v| v.is_finite()) {
        return Err(Error::Numerical("non-finite Gram weights".into()));
    }
    let x = a.transpose() * DMatrix::from_diagonal(&c) * a;
    let residual = rows.residual(&x);
    if residual > residual_tol {
        return Err(Error::NoAlpha(GramFailure::NoSolution { residual }));
    }
    AlphaSolution::from_gram(x, residual)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TightnessOptions {
    pub degeneracy_tol: DegeneracyTol,
    pub residual_tol: f64,
}

impl Default for TightnessOptions {
    fn default() -> Self {
        Self {
            degeneracy_tol: DegeneracyTol::default(),
            residual_tol: DEFAULT_RESIDUAL_TOL,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Tightness {
    Certified(AlphaSolution),
    NotCertified(GramFailure),
}

#[derive(Debug, Clone)]
pub struct TightnessCheck {
    pub truncation: TruncatedSvd,
    pub rows: ConstraintRows,
    pub outcome: Tightness,
}

impl TightnessCheck {
    pub fn is_tight(&self) -> bool {
        matches!(self.outcome, Tightness::Certified(_))
    }

    pub fn solution(&self) -> Option<&AlphaSolution> {
        match &self.outcome {
            Tightness::Certified(s) => Some(s),
            Tightness::NotCertified(_) => None,
        }
    }
}

/// SVD, truncation, constraint rows and Gram ansatz in one pass. A Gram
/// failure is an `Ok` outcome; numerical breakdowns are errors.
pub fn is_tight(g: &BellCoefficients, opts: TightnessOptions) -> Result<TightnessCheck> {
    let svd = compute_svd(g)?;
    let truncation = truncate_max(&svd, opts.degeneracy_tol.absolute(svd.s_max()));
    check_truncation(truncation, opts.residual_tol)
}

/// Tightness for an already truncated decomposition.
pub fn check_truncation(truncation: TruncatedSvd, residual_tol: f64) -> Result<TightnessCheck> {
    let rows = build_constraint_rows(&truncation);
    let outcome = match solve_alpha_gram(&rows, residual_tol) {
        Ok(sol) => Tightness::Certified(sol),
        Err(Error::NoAlpha(f)) => Tightness::NotCertified(f),
        Err(e) => return Err(e),
    };
    Ok(TightnessCheck {
        truncation,
        rows,
        outcome,
    })
}

/// A semi-axis length `1/√λ`, infinite for a vanishing eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SemiAxis {
    Finite(f64),
    Infinite,
}

impl Serialize for SemiAxis {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            SemiAxis::Finite(v) => s.serialize_f64(*v),
            SemiAxis::Infinite => s.serialize_str("INFINITE"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EllipsoidReport {
    pub semi_axes: Vec<SemiAxis>,
}

/// Semi-axes of `{r : rᵀXr = 1}` in order of decreasing eigenvalue.
pub fn ellipsoid_semiaxes(sol: &AlphaSolution) -> EllipsoidReport {
    EllipsoidReport {
        semi_axes: sol
            .eigenvalues
            .iter()
            .map(|&l| {
                if l > EIGEN_TOL {
                    SemiAxis::Finite(1.0 / l.sqrt())
                } else {
                    SemiAxis::Infinite
                }
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

    fn rows_of(g: &BellCoefficients) -> ConstraintRows {
        let svd = compute_svd(g).unwrap();
        build_constraint_rows(&truncate_max(&svd, 1e-6 * svd.s_max()))
    }

    /// Gram matrix `AAᵀ` is invariant under mixing inside the degenerate block.
    fn gram(r: &ConstraintRows) -> DMatrix<f64> {
        &r.a * r.a.transpose()
    }

    #[test]
    fn chsh_rows() {
        let h = FRAC_1_SQRT_2;
        let expected = DMatrix::from_row_slice(4, 2, &[h, h, h, -h, 1.0, 0.0, 0.0, 1.0]);
        let rows = rows_of(&BellCoefficients::chsh());
        assert_eq!(rows.a.shape(), (4, 2));
        assert!((gram(&rows) - &expected * expected.transpose()).amax() < 1e-12);
    }

    #[test]
    fn identity_rows() {
        let rows = rows_of(&BellCoefficients::identity(2));
        let mut expected = DMatrix::<f64>::zeros(4, 2);
        expected.rows_mut(0, 2).fill_with_identity();
        expected.rows_mut(2, 2).fill_with_identity();
        assert!((gram(&rows) - &expected * expected.transpose()).amax() < 1e-12);
    }

    #[test]
    fn vertesi_pal_rows() {
        let vp = BellCoefficients::vertesi_pal();
        let rows = rows_of(&vp);
        assert_eq!(rows.a.shape(), (12, 4));
        let mut expected = DMatrix::<f64>::zeros(12, 4);
        expected.rows_mut(0, 8).copy_from(&(vp.entries() / (2.0 * SQRT_2)));
        expected
            .rows_mut(8, 4)
            .copy_from(&(DMatrix::identity(4, 4) * FRAC_1_SQRT_2));
        assert!((gram(&rows) - &expected * expected.transpose()).amax() < 1e-12);
    }

    #[test]
    fn chsh_gram_solution_is_identity() {
        let sol = solve_alpha_gram(&rows_of(&BellCoefficients::chsh()), 1e-6).unwrap();
        assert!((&sol.x_matrix - DMatrix::<f64>::identity(2, 2)).amax() < 1e-10);
        assert!(sol.residual < 1e-12);
        assert_eq!(sol.rank_dprime, 2);
    }

    #[test]
    fn vertesi_pal_gram_solution() {
        let sol = solve_alpha_gram(&rows_of(&BellCoefficients::vertesi_pal()), 1e-6).unwrap();
        assert!((&sol.x_matrix - DMatrix::<f64>::identity(4, 4) * 2.0).amax() < 1e-10);
        assert!((&sol.alpha - DMatrix::<f64>::identity(4, 4) * SQRT_2).amax() < 1e-10);
        assert_eq!(sol.rank_dprime, 4);
    }

    #[test]
    fn identity_min_norm_weights() {
        // Hand-solved: Q = [[1,0,1,0],[0,1,0,1],[1,0,1,0],[0,1,0,1]] has min-norm
        // solution c = (1/2, 1/2, 1/2, 1/2) of Qc = 1.
        let q = DMatrix::from_row_slice(4, 4, &[1., 0., 1., 0., 0., 1., 0., 1., 1., 0., 1., 0., 0., 1., 0., 1.]);
        let c = pinv_solve(&q, &DVector::from_element(4, 1.0), PINV_CUTOFF).unwrap();
        assert!((c - DVector::from_element(4, 0.5)).amax() < 1e-12);

        let sol = solve_alpha_gram(&rows_of(&BellCoefficients::identity(2)), 1e-6).unwrap();
        assert!((&sol.x_matrix - DMatrix::<f64>::identity(2, 2)).amax() < 1e-10);
        assert_eq!(sol.rank_dprime, 2);
    }

    #[test]
    fn qc_identity() {
        let rows = rows_of(&BellCoefficients::vertesi_pal());
        let a = &rows.a;
        let q = (a * a.transpose()).map(|v| v * v);
        let c = DVector::from_fn(a.nrows(), |i, _| 0.1 + 0.03 * i as f64);
        let x = a.transpose() * DMatrix::from_diagonal(&c) * a;
        let qc = &q * &c;
        for i in 0..a.nrows() {
            let lhs = (a.row(i) * &x).dot(&a.row(i));
            assert!((lhs - qc[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn generic_matrix_is_not_certified() {
        let g = BellCoefficients::from_rows(&[[0.3, -0.7, 0.2], [0.9, 0.1, -0.4], [-0.5, 0.6, 0.8]]).unwrap();
        let check = is_tight(&g, TightnessOptions::default()).unwrap();
        assert!(!check.is_tight());
        assert!(matches!(
            check.outcome,
            Tightness::NotCertified(GramFailure::NoSolution { .. })
        ));
    }

    #[test]
    fn examples_are_tight() {
        for g in [
            BellCoefficients::chsh(),
            BellCoefficients::vertesi_pal(),
            BellCoefficients::identity(2),
        ] {
            assert!(is_tight(&g, TightnessOptions::default()).unwrap().is_tight());
        }
    }

    #[test]
    fn non_psd_gram_is_rejected() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -0.5]);
        assert!(matches!(
            AlphaSolution::from_gram(x, 0.0),
            Err(Error::NoAlpha(GramFailure::NoRealSolution { .. }))
        ));
        // Roundoff-sized negatives are clamped.
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1e-12]);
        let sol = AlphaSolution::from_gram(x, 0.0).unwrap();
        assert_eq!(sol.eigenvalues[1], 0.0);
        assert_eq!(sol.rank_dprime, 1);
    }

    #[test]
    fn semiaxes() {
        let chsh = solve_alpha_gram(&rows_of(&BellCoefficients::chsh()), 1e-6).unwrap();
        let axes = ellipsoid_semiaxes(&chsh).semi_axes;
        for a in &axes {
            match a {
                SemiAxis::Finite(v) => assert!((v - 1.0).abs() < 1e-10),
                SemiAxis::Infinite => panic!("circle expected"),
            }
        }

        let rows = rows_of(&BellCoefficients::identity(2));
        let rank_one = AlphaSolution::from_alpha(&rows, &DMatrix::from_column_slice(2, 1, &[1.0, 1.0])).unwrap();
        assert!((rank_one.eigenvalues[0] - 2.0).abs() < 1e-12);
        assert_eq!(rank_one.rank_dprime, 1);
        let axes = ellipsoid_semiaxes(&rank_one).semi_axes;
        assert!(matches!(axes[0], SemiAxis::Finite(v) if (v - FRAC_1_SQRT_2).abs() < 1e-12));
        assert_eq!(axes[1], SemiAxis::Infinite);

        let scaled = AlphaSolution::from_gram(DMatrix::identity(4, 4) * 2.0, 0.0).unwrap();
        for a in ellipsoid_semiaxes(&scaled).semi_axes {
            assert!(matches!(a, SemiAxis::Finite(v) if (v - FRAC_1_SQRT_2).abs() < 1e-12));
        }
        let json = serde_json::to_string(&ellipsoid_semiaxes(&rank_one)).unwrap();
        assert!(json.contains("\"INFINITE\""));
    }

    #[test]
    fn rank_one_alpha_solves_identity_system_when_blocks_are_canonical() {
        let t = TruncatedSvd::from_parts(1.0, DMatrix::identity(2, 2), DMatrix::identity(2, 2), 0.0).unwrap();
        let rows = build_constraint_rows(&t);
        let sol = AlphaSolution::from_alpha(&rows, &DMatrix::from_column_slice(2, 1, &[1.0, 1.0])).unwrap();
        assert!(sol.residual < 1e-12);
    }
}
