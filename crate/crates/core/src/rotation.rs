//! Inequalities for parties whose frames differ by an unknown rotation.
//!
//! Alice measures both CHSH direction sets (four settings), Bob keeps his two
//! settings, and Bob's side is rotated by `φ`: `g(φ) = base·R(φ)`. The quantum
//! value stays at 4 for every `φ` while the classical bound moves with `φ`.
//! The violation is reported as the ratio `T/B`; at `φ = kπ/4` it equals
//! `4/(2+√2) = 4 − 2√2`.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::bell::{classical_bound, BellCoefficients};
use crate::error::{Error, Result};
use crate::oracles::{certify, SeesawConfig};
use crate::report::format_significant;
use crate::tightness::TightnessOptions;

const ORTHOGONALITY_TOL: f64 = 1e-10;

/// Alice's local angles `γ` (degrees) optimal at `φ = 0`.
pub const ALICE_OPTIMAL_ANGLES_DEG: [f64; 4] = [45.0, -45.0, 0.0, 90.0];
/// Bob's local angles `δ` (degrees) optimal at `φ = 0`.
pub const BOB_OPTIMAL_ANGLES_DEG: [f64; 2] = [0.0, 90.0];

pub fn rotation_matrix(phi: f64) -> DMatrix<f64> {
    let (s, c) = phi.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

/// The stacked 4×2 direction matrix at `φ = 0`.
pub fn stacked_chsh_base() -> DMatrix<f64> {
    let h = FRAC_1_SQRT_2;
    DMatrix::from_row_slice(4, 2, &[h, h, h, -h, 1.0, 0.0, 0.0, 1.0])
}

#[derive(Debug, Clone)]
pub struct RotatedInequality {
    pub phi: f64,
    pub base: DMatrix<f64>,
    pub g_phi: BellCoefficients,
}

pub fn rotated_chsh(phi: f64) -> RotatedInequality {
    let base = stacked_chsh_base();
    let g_phi = BellCoefficients::new(&base * rotation_matrix(phi)).expect("rotation of a nonzero matrix");
    RotatedInequality { phi, base, g_phi }
}

/// `g·r` for an orthogonal `m2 × m2` matrix `r`.
pub fn rotate_bob(g: &BellCoefficients, r: &DMatrix<f64>) -> Result<BellCoefficients> {
    let m2 = g.m2();
    if r.shape() != (m2, m2) {
        return Err(Error::shape(
            format!("{m2}x{m2} rotation"),
            format!("{}x{}", r.nrows(), r.ncols()),
        ));
    }
    let dev = (r.transpose() * r - DMatrix::identity(m2, m2)).amax();
    if dev.is_nan() || dev > ORTHOGONALITY_TOL {
        return Err(Error::Invalid(format!(
            "matrix is not orthogonal (deviation {dev:.2e})"
        )));
    }
    BellCoefficients::new(g.entries() * r)
}

/// Unit directions in the measurement plane for angles in degrees.
pub fn directions_from_angles(angles_deg: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(angles_deg.len(), 2, |i, k| {
        let t = angles_deg[i].to_radians();
        if k == 0 {
            t.cos()
        } else {
            t.sin()
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ViolationSample {
    pub phi: f64,
    pub classical: f64,
    pub quantum: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolationCurve {
    pub samples: Vec<ViolationSample>,
}

/// `samples` points evenly spaced over `[min, max]`, both ends included.
pub fn uniform_grid(min: f64, max: f64, samples: usize) -> Vec<f64> {
    match samples {
        0 => Vec::new(),
        1 => vec![min],
        n => (0..n).map(|i| min + (max - min) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Default scan: 361 samples over `[0, 2π]`.
pub fn default_grid() -> Vec<f64> {
    uniform_grid(0.0, 2.0 * std::f64::consts::PI, 361)
}

/// Classical bound and quantum value of `g(φ)` at every grid point, in grid
/// order. The quantum value is the singular-value bound when the certificate
/// closes, otherwise the see-saw lower bound.
pub fn violation_curve(phi_grid: &[f64], cfg: &SeesawConfig) -> Result<ViolationCurve> {
    if phi_grid.is_empty() {
        return Err(Error::Invalid("empty angle grid".into()));
    }
    let samples = phi_grid
        .par_iter()
        .map(|&phi| {
            let g = rotated_chsh(phi).g_phi;
            let classical = classical_bound(&g)?.value;
            let report = certify(&g, cfg, TightnessOptions::default())?;
            let quantum = if report.tight_certified {
                report.sv_bound
            } else {
                report.seesaw_lower
            };
            Ok(ViolationSample {
                phi,
                classical,
                quantum,
                ratio: quantum / classical,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ViolationCurve { samples })
}

impl ViolationCurve {
    /// CSV with header `phi_rad,classical,quantum,ratio`, 12 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("phi_rad,classical,quantum,ratio\n");
        for s in &self.samples {
            let cols = [s.phi, s.classical, s.quantum, s.ratio].map(|v| format_significant(v, 12));
            out.push_str(&cols.join(","));
            out.push('\n');
        }
        out
    }

    pub fn max_ratio(&self) -> Option<&ViolationSample> {
        self.samples.iter().max_by(|a, b| a.ratio.total_cmp(&b.ratio))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategies::{strategy_value, VectorStrategy};
    use crate::svd::{compute_svd, singular_value_bound};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};

    #[test]
    fn zero_angle_is_exactly_the_base() {
        let r = rotated_chsh(0.0);
        assert_eq!(r.g_phi.entries(), &r.base);
    }

    #[test]
    fn quarter_turn_keeps_singular_values() {
        let svd = compute_svd(&rotated_chsh(FRAC_PI_2).g_phi).unwrap();
        assert!((svd.s[0] - SQRT_2).abs() < 1e-10 && (svd.s[1] - SQRT_2).abs() < 1e-10);
    }

    #[test]
    fn eighth_turn_by_hand() {
        let h = FRAC_1_SQRT_2;
        let want = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, -1.0, h, -h, h, h]);
        assert!((rotated_chsh(FRAC_PI_4).g_phi.entries() - want).amax() < 1e-12);
    }

    #[test]
    fn rotate_bob_examples() {
        let g = BellCoefficients::chsh();
        assert_eq!(rotate_bob(&g, &DMatrix::identity(2, 2)).unwrap(), g);

        let twisted = rotate_bob(&g, &rotation_matrix(FRAC_PI_4)).unwrap();
        // √2·(relabeled identity): one nonzero entry of magnitude √2 per row.
        for row in twisted.rows() {
            let big: Vec<_> = row.iter().filter(|v| v.abs() > 1e-12).collect();
            assert_eq!(big.len(), 1);
            assert!((big[0].abs() - SQRT_2).abs() < 1e-12);
        }
        let cb = classical_bound(&twisted).unwrap().value;
        assert!((cb - 2.0 * SQRT_2).abs() < 1e-12);
        assert!((singular_value_bound(&twisted).unwrap() - cb).abs() < 1e-12);

        for phi in [0.1, 1.0, 2.5] {
            let g = rotate_bob(
                &BellCoefficients::new(stacked_chsh_base()).unwrap(),
                &rotation_matrix(phi),
            )
            .unwrap();
            assert!((singular_value_bound(&g).unwrap() - 4.0).abs() < 1e-9);
        }

        let shear = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(matches!(rotate_bob(&g, &shear), Err(Error::Invalid(_))));
        assert!(rotate_bob(&g, &DMatrix::identity(3, 3)).is_err());
    }

    #[test]
    fn optimal_local_angles_reach_four() {
        let v = directions_from_angles(&ALICE_OPTIMAL_ANGLES_DEG);
        let w = directions_from_angles(&BOB_OPTIMAL_ANGLES_DEG);
        let s = VectorStrategy::new(v, w).unwrap();
        let value = strategy_value(&rotated_chsh(0.0).g_phi, &s).unwrap();
        assert!((value - 4.0).abs() < 1e-12);
    }

    #[test]
    fn small_curve() {
        let grid = [0.0, FRAC_PI_4, 0.3];
        let curve = violation_curve(&grid, &SeesawConfig::default()).unwrap();
        let phis: Vec<f64> = curve.samples.iter().map(|s| s.phi).collect();
        assert_eq!(phis, grid);
        let best = 4.0 - 2.0 * SQRT_2;
        assert!((curve.samples[0].ratio - best).abs() < 1e-6);
        assert!((curve.samples[0].classical - (2.0 + SQRT_2)).abs() < 1e-9);
        assert!((curve.samples[1].ratio - best).abs() < 1e-6);
        assert!(curve.samples[2].ratio > 1.0 && curve.samples[2].ratio < best);
        assert!(curve.samples.iter().all(|s| (s.quantum - 4.0).abs() < 1e-9));
        assert!(violation_curve(&[], &SeesawConfig::default()).is_err());
    }

    #[test]
    fn csv_layout() {
        let curve = ViolationCurve {
            samples: vec![ViolationSample {
                phi: 0.0,
                classical: 2.0 + SQRT_2,
                quantum: 4.0,
                ratio: 4.0 / (2.0 + SQRT_2),
            }],
        };
        let csv = curve.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "phi_rad,classical,quantum,ratio");
        assert_eq!(lines[1], "0,3.41421356237,4,1.17157287525");
    }

    #[test]
    fn grids() {
        let g = default_grid();
        assert_eq!(g.len(), 361);
        assert_eq!(g[0], 0.0);
        assert!((g[360] - 2.0 * std::f64::consts::PI).abs() < 1e-15);
        assert_eq!(uniform_grid(1.0, 2.0, 1), vec![1.0]);
    }
}
