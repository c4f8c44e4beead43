//! Fixed-dimension quantum maxima by see-saw ascent, and the certificates
//! built from them.
//!
//! For directions of dimension `d'` the see-saw alternates the exact best
//! responses `v_x ← normalize(Σ_y g_xy w_y)` and `w_y ← normalize(Σ_x g_xy v_x)`.
//! Each half-step can only increase the objective, so the result is a lower
//! bound on `T_{d'}`. Agreement with the singular-value bound (an upper bound)
//! certifies the quantum value.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::bell::{classical_bound, BellCoefficients};
use crate::error::{Error, Result};
use crate::strategies::VectorStrategy;
use crate::svd::singular_value_bound;
use crate::tightness::{is_tight, AlphaSolution, TightnessOptions};

/// `sv_bound − seesaw_lower` at or below this certifies tightness.
pub const CERTIFY_GAP: f64 = 1e-4;
/// Slack when comparing an observed value with a threshold.
pub const CLASSIFY_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeesawConfig {
    pub restarts: usize,
    pub max_iters: usize,
    pub value_tol: f64,
    pub seed: u64,
}

impl Default for SeesawConfig {
    fn default() -> Self {
        Self {
            restarts: 32,
            max_iters: 10_000,
            value_tol: 1e-10,
            seed: 42,
        }
    }
}

impl SeesawConfig {
    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.max_iters == 0 {
            return Err(Error::Invalid("restarts and max_iters must be at least 1".into()));
        }
        if self.value_tol.is_nan() || self.value_tol <= 0.0 {
            return Err(Error::Invalid(format!(
                "value_tol must be positive, got {}",
                self.value_tol
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SeesawResult {
    pub value: f64,
    pub strategy: VectorStrategy,
    /// Index of the winning restart; `None` when a warm start won.
    pub restart: Option<usize>,
    pub iterations: usize,
}

/// One ascent from the given unit directions, updated in place. Returns the
/// final value and the number of full iterations. When `trace` is given it
/// receives the objective after every half-step (starting value first).
pub fn ascend(
    g: &DMatrix<f64>,
    v: &mut DMatrix<f64>,
    w: &mut DMatrix<f64>,
    cfg: &SeesawConfig,
    mut trace: Option<&mut Vec<f64>>,
) -> (f64, usize) {
    let gt = g.transpose();
    let mut value = objective(g, v, w);
    if let Some(t) = trace.as_deref_mut() {
        t.push(value);
    }
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        iterations += 1;
        best_response(g, w, v);
        if let Some(t) = trace.as_deref_mut() {
            t.push(objective(g, v, w));
        }
        best_response(&gt, v, w);
        let next = objective(g, v, w);
        if let Some(t) = trace.as_deref_mut() {
            t.push(next);
        }
        let gain = next - value;
        value = next;
        if gain < cfg.value_tol {
            break;
        }
    }
    (value, iterations)
}

fn objective(g: &DMatrix<f64>, v: &DMatrix<f64>, w: &DMatrix<f64>) -> f64 {
    g.component_mul(&(v * w.transpose())).sum()
}

/// `target ← rows of normalize(coeffs · other)`; a zero row keeps its old value.
fn best_response(coeffs: &DMatrix<f64>, other: &DMatrix<f64>, target: &mut DMatrix<f64>) {
    let update = coeffs * other;
    for (mut t, u) in target.row_iter_mut().zip(update.row_iter()) {
        let n = u.norm();
        if n > f64::MIN_POSITIVE && n.is_finite() {
            t.copy_from(&(u / n));
        }
    }
}

fn random_unit_rows(rng: &mut ChaCha8Rng, rows: usize, dim: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, dim);
    for mut r in m.row_iter_mut() {
        loop {
            for x in r.iter_mut() {
                *x = rng.sample(StandardNormal);
            }
            let n = r.norm();
            if n > 1e-12 {
                r /= n;
                break;
            }
        }
    }
    m
}

/// Stream `restart` of the generator seeded with `seed`.
fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}

/// Best see-saw value over `cfg.restarts` random starts at dimension `dprime`.
pub fn seesaw_bound(g: &BellCoefficients, dprime: usize, cfg: &SeesawConfig) -> Result<SeesawResult> {
    seesaw_with_starts(g, dprime, cfg, &[])
}

type Run = (f64, usize, DMatrix<f64>, DMatrix<f64>);

/// As [`seesaw_bound`], with extra deterministic starting strategies that
/// compete after the random restarts.
pub fn seesaw_with_starts(
    g: &BellCoefficients,
    dprime: usize,
    cfg: &SeesawConfig,
    warm: &[VectorStrategy],
) -> Result<SeesawResult> {
    cfg.validate()?;
    if dprime == 0 {
        return Err(Error::Invalid("direction dimension must be at least 1".into()));
    }
    if let Some(s) = warm.iter().find(|s| s.dim() != dprime) {
        return Err(Error::shape(format!("warm start of dimension {dprime}"), s.dim()));
    }
    let m = g.entries();
    let (m1, m2) = m.shape();
    let mut runs: Vec<Run> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = restart_rng(cfg.seed, r);
            let mut w = random_unit_rows(&mut rng, m2, dprime);
            let mut v = random_unit_rows(&mut rng, m1, dprime);
            let (value, iters) = ascend(m, &mut v, &mut w, cfg, None);
            (value, iters, v, w)
        })
        .collect();
    runs.extend(warm.iter().map(|s| {
        let (mut v, mut w) = (s.v().clone(), s.w().clone());
        let (value, iters) = ascend(m, &mut v, &mut w, cfg, None);
        (value, iters, v, w)
    }));

    // Strictly greater wins, so ties go to the earliest run.
    let mut best = 0;
    for (idx, run) in runs.iter().enumerate() {
        if run.0 > runs[best].0 {
            best = idx;
        }
    }
    let restart = (best < cfg.restarts).then_some(best);
    let (value, iterations, v, w) = runs.swap_remove(best);
    Ok(SeesawResult {
        value,
        strategy: VectorStrategy::new(v, w)?,
        restart,
        iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Threshold {
    pub dimension: usize,
    pub value: f64,
}

/// `T_{d'}` for `d' = 1..=dmax`.
#[derive(Debug, Clone, Serialize)]
pub struct WitnessThresholds {
    pub thresholds: Vec<Threshold>,
    pub sv_bound: f64,
}

impl WitnessThresholds {
    pub fn get(&self, dimension: usize) -> Option<f64> {
        self.thresholds
            .iter()
            .find(|t| t.dimension == dimension)
            .map(|t| t.value)
    }

    pub fn dmax(&self) -> usize {
        self.thresholds.len()
    }
}

/// See-saw maxima for each dimension up to `dmax`. Dimension `d'+1` is also
/// started from the `d'` optimum padded with a zero coordinate, which keeps
/// the sequence non-decreasing.
pub fn witness_thresholds(g: &BellCoefficients, dmax: usize, cfg: &SeesawConfig) -> Result<WitnessThresholds> {
    if dmax == 0 {
        return Err(Error::Invalid("dmax must be at least 1".into()));
    }
    let sv_bound = singular_value_bound(g)?;
    let mut thresholds = Vec::with_capacity(dmax);
    let mut previous: Option<VectorStrategy> = None;
    for dimension in 1..=dmax {
        let warm: Vec<VectorStrategy> = previous.iter().map(|s| s.embed(dimension)).collect();
        let res = seesaw_with_starts(g, dimension, cfg, &warm)?;
        thresholds.push(Threshold {
            dimension,
            value: res.value,
        });
        previous = Some(res.strategy);
    }
    Ok(WitnessThresholds { thresholds, sv_bound })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DimensionClass {
    /// Smallest `d'` whose threshold reaches the observed value.
    pub dimension: usize,
    /// Set when the value exceeds every modeled threshold; `dimension` is then `dmax + 1`.
    pub exceeds_modeled: bool,
}

pub fn classify_dimension(q_observed: f64, t: &WitnessThresholds) -> Result<DimensionClass> {
    if !q_observed.is_finite() {
        return Err(Error::Invalid(format!("observed value {q_observed} is not finite")));
    }
    Ok(t.thresholds
        .iter()
        .find(|th| th.value >= q_observed - CLASSIFY_SLACK)
        .map(|th| DimensionClass {
            dimension: th.dimension,
            exceeds_modeled: false,
        })
        .unwrap_or(DimensionClass {
            dimension: t.dmax() + 1,
            exceeds_modeled: true,
        }))
}

/// Classical value, singular-value bound, see-saw lower bound and the
/// tightness certificate for one inequality.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub classical: f64,
    pub sv_bound: f64,
    pub seesaw_lower: f64,
    pub seesaw_dim: usize,
    pub tight_certified: bool,
    pub alpha: Option<AlphaSolution>,
    pub gap: f64,
    pub degeneracy: usize,
}

/// Sandwiches the quantum value between the see-saw and the singular-value
/// bound. The see-saw runs at `min(m1, m2)` dimensions, where the quantum
/// maximum is always attained, and additionally starts from the optimal
/// classical assignment so that `classical ≤ seesaw_lower` holds.
pub fn certify(g: &BellCoefficients, cfg: &SeesawConfig, opts: TightnessOptions) -> Result<BoundReport> {
    let classical = classical_bound(g)?;
    let sv_bound = singular_value_bound(g)?;
    let tight = is_tight(g, opts)?;
    let seesaw_dim = g.m1().min(g.m2());

    let a = DMatrix::from_fn(g.m1(), seesaw_dim, |x, k| {
        if k == 0 {
            f64::from(classical.assignment.a()[x])
        } else {
            0.0
        }
    });
    let b = DMatrix::from_fn(g.m2(), seesaw_dim, |y, k| {
        if k == 0 {
            f64::from(classical.assignment.b()[y])
        } else {
            0.0
        }
    });
    let classical_start = VectorStrategy::new(a, b)?;
    let seesaw = seesaw_with_starts(g, seesaw_dim, cfg, &[classical_start])?;
    let gap = sv_bound - seesaw.value;
    Ok(BoundReport {
        classical: classical.value,
        sv_bound,
        seesaw_lower: seesaw.value,
        seesaw_dim,
        tight_certified: tight.is_tight() && gap <= CERTIFY_GAP,
        alpha: tight.solution().cloned(),
        gap,
        degeneracy: tight.truncation.degeneracy,
    })
}
