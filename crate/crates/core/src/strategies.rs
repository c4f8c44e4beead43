//! Measurement directions and their quantum realization.
//!
//! Unit vectors `v_x`, `w_y` become observables `A_x = Σ_i v_{x,i} X_i` and
//! `B_y = Σ_i w_{y,i} X̄_i` on the maximally entangled state, where the `X_i`
//! are pairwise anticommuting Hermitian involutions. Bob uses the complex
//! conjugates so that `⟨φ₊|A⊗B|φ₊⟩ = tr(A·Bᵀ)/D = v·w`.

use nalgebra::{Complex, DMatrix, DVector};
use serde::Serialize;

use crate::bell::{BellCoefficients, CorrelationTable};
use crate::error::{Error, Result};
use crate::svd::TruncatedSvd;
use crate::tightness::{AlphaSolution, DEFAULT_RESIDUAL_TOL};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

pub const UNIT_TOL: f64 = 1e-8;
/// Largest supported direction dimension.
pub const MAX_GENERATORS: usize = 24;
const RENORMALIZE_TOL: f64 = 1e-6;
const EXPECTATION_TOL: f64 = 1e-9;

/// Unit direction vectors for both parties, stored as matrix rows.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorStrategy {
    v: DMatrix<f64>,
    w: DMatrix<f64>,
}

impl VectorStrategy {
    /// `v` is `m1 × d'`, `w` is `m2 × d'`; every row must be a unit vector.
    pub fn new(v: DMatrix<f64>, w: DMatrix<f64>) -> Result<Self> {
        if v.ncols() != w.ncols() || v.ncols() == 0 {
            return Err(Error::shape(
                format!("equal direction dimension, {} for Alice", v.ncols()),
                w.ncols(),
            ));
        }
        for (who, m) in [("Alice", &v), ("Bob", &w)] {
            for (i, r) in m.row_iter().enumerate() {
                let n = r.norm();
                if (n - 1.0).abs() > UNIT_TOL {
                    return Err(Error::Invalid(format!("{who}'s direction {} has norm {n}", i + 1)));
                }
            }
        }
        Ok(Self { v, w })
    }

    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn w(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn dim(&self) -> usize {
        self.v.ncols()
    }

    /// Scalar products `v_x·w_y`.
    pub fn correlations(&self) -> DMatrix<f64> {
        &self.v * self.w.transpose()
    }

    /// Appends zero coordinates up to `dim`.
    pub fn embed(&self, dim: usize) -> Self {
        assert!(dim >= self.dim());
        let pad = |m: &DMatrix<f64>| m.clone().resize_horizontally(dim, 0.0);
        Self {
            v: pad(&self.v),
            w: pad(&self.w),
        }
    }
}

impl Serialize for VectorStrategy {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> { m.row_iter().map(|r| r.iter().copied().collect()).collect() };
        let mut st = s.serialize_struct("VectorStrategy", 3)?;
        st.serialize_field("dimension", &self.dim())?;
        st.serialize_field("alice", &rows(&self.v))?;
        st.serialize_field("bob", &rows(&self.w))?;
        st.end()
    }
}

/// `v_x = αᵀV⁽ᵈ⁾_{x*}`, `w_y = √(m2/m1)·αᵀW⁽ᵈ⁾_{y*}`, expressed in the
/// `d'`-dimensional support of `X`.
pub fn directions_from_alpha(t: &TruncatedSvd, sol: &AlphaSolution) -> Result<VectorStrategy> {
    if sol.degeneracy() != t.degeneracy {
        return Err(Error::shape(
            format!("alpha for degeneracy {}", t.degeneracy),
            sol.degeneracy(),
        ));
    }
    if sol.residual > DEFAULT_RESIDUAL_TOL {
        return Err(Error::Invalid(format!(
            "alpha residual {:.3e} exceeds {DEFAULT_RESIDUAL_TOL:e}",
            sol.residual
        )));
    }
    let weight = (t.m2() as f64 / t.m1() as f64).sqrt();
    let to_support = &sol.alpha * sol.support();
    let v = &t.v_d * &to_support;
    let w = (&t.w_d * &to_support) * weight;
    Ok(VectorStrategy {
        v: renormalize(v, "Alice")?,
        w: renormalize(w, "Bob")?,
    })
}

fn renormalize(mut m: DMatrix<f64>, who: &str) -> Result<DMatrix<f64>> {
    for (i, mut r) in m.row_iter_mut().enumerate() {
        let n = r.norm();
        if (n - 1.0).abs() > RENORMALIZE_TOL {
            return Err(Error::Inconsistent(format!(
                "{who}'s direction {} has norm {n}; alpha does not normalize it",
                i + 1
            )));
        }
        r /= n;
    }
    Ok(m)
}

/// `Σ g[x][y] (v_x·w_y)`.
pub fn strategy_value(g: &BellCoefficients, s: &VectorStrategy) -> Result<f64> {
    if (g.m1(), g.m2()) != (s.v.nrows(), s.w.nrows()) {
        return Err(Error::shape(
            format!("{}x{} settings", g.m1(), g.m2()),
            format!("{}x{}", s.v.nrows(), s.w.nrows()),
        ));
    }
    Ok(g.entries().component_mul(&s.correlations()).sum())
}

/// Pairwise anticommuting Hermitian involutions on `C^D`.
#[derive(Debug, Clone)]
pub struct GeneratorSet {
    pub dim: usize,
    pub generators: Vec<CMatrix>,
}

fn pauli(which: char) -> CMatrix {
    let (z, o, i) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 1.0));
    match which {
        'x' => CMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        'y' => CMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        'z' => CMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
        _ => CMatrix::identity(2, 2),
    }
}

fn kron_all(factors: &[CMatrix]) -> CMatrix {
    factors.iter().fold(CMatrix::identity(1, 1), |acc, f| acc.kronecker(f))
}

/// Jordan–Wigner chain on `n = ⌊d'/2⌋` qubits:
/// `σ_z^{⊗(k−1)} ⊗ σ_x ⊗ 𝟙^{⊗(n−k)}` and the same with `σ_y`, followed by
/// `σ_z^{⊗n}` when `d'` is odd. `d' = 1` gives `σ_x` on one qubit.
pub fn anticommuting_generators(dprime: usize) -> Result<GeneratorSet> {
    if dprime == 0 || dprime > MAX_GENERATORS {
        return Err(Error::Resource {
            what: "anticommuting generator count",
            required: dprime as u128,
            allowed: MAX_GENERATORS as u128,
        });
    }
    if dprime == 1 {
        return Ok(GeneratorSet {
            dim: 2,
            generators: vec![pauli('x')],
        });
    }
    let n = dprime / 2;
    let mut generators = Vec::with_capacity(dprime);
    for k in 0..n {
        for p in ['x', 'y'] {
            let factors: Vec<CMatrix> = (0..n)
                .map(|j| match j.cmp(&k) {
                    std::cmp::Ordering::Less => pauli('z'),
                    std::cmp::Ordering::Equal => pauli(p),
                    std::cmp::Ordering::Greater => pauli('1'),
                })
                .collect();
            generators.push(kron_all(&factors));
        }
    }
    if dprime % 2 == 1 {
        generators.push(kron_all(&vec![pauli('z'); n]));
    }
    Ok(GeneratorSet {
        dim: 1 << n,
        generators,
    })
}

/// `(1/√D) Σ_i e_i ⊗ e_i`.
pub fn maximally_entangled_state(dim: usize) -> DVector<C64> {
    let mut s = DVector::from_element(dim * dim, C64::new(0.0, 0.0));
    let amp = 1.0 / (dim as f64).sqrt();
    for i in 0..dim {
        s[i * dim + i] = C64::new(amp, 0.0);
    }
    s
}

/// `ψ†(A⊗B)ψ` via the explicit Kronecker product.
pub fn expectation(state: &DVector<C64>, a: &CMatrix, b: &CMatrix) -> Result<C64> {
    let n = a.nrows() * b.nrows();
    if state.len() != n {
        return Err(Error::shape(format!("state of length {n}"), state.len()));
    }
    let ab = a.kronecker(b);
    Ok(state.dotc(&(ab * state)))
}

/// State, observables and the correlations they produce.
#[derive(Debug, Clone)]
pub struct QuantumRealization {
    pub dim: usize,
    pub state: DVector<C64>,
    pub alice_observables: Vec<CMatrix>,
    pub bob_observables: Vec<CMatrix>,
    pub expected: CorrelationTable,
}

fn combine(coeffs: nalgebra::DVectorView<'_, f64>, gens: &[CMatrix], conjugate: bool) -> CMatrix {
    let d = gens[0].nrows();
    let mut out = CMatrix::zeros(d, d);
    for (c, x) in coeffs.iter().zip(gens) {
        if conjugate {
            out += x.map(|z| z.conj()) * C64::new(*c, 0.0);
        } else {
            out += x * C64::new(*c, 0.0);
        }
    }
    out
}

/// Builds observables from directions and checks `E(x, y) = v_x·w_y`.
pub fn realize(s: &VectorStrategy) -> Result<QuantumRealization> {
    let gens = anticommuting_generators(s.dim())?;
    let alice: Vec<CMatrix> =
        s.v.row_iter()
            .map(|r| combine(r.transpose().as_view(), &gens.generators, false))
            .collect();
    let bob: Vec<CMatrix> =
        s.w.row_iter()
            .map(|r| combine(r.transpose().as_view(), &gens.generators, true))
            .collect();
    let dim = gens.dim;
    let target = s.correlations();
    let mut table = DMatrix::zeros(alice.len(), bob.len());
    for (x, a) in alice.iter().enumerate() {
        for (y, b) in bob.iter().enumerate() {
            // ⟨φ₊|A⊗B|φ₊⟩ = (1/D) Σ_ij A_ij B_ij
            let e: C64 = a.iter().zip(b.iter()).map(|(p, q)| p * q).sum::<C64>() / dim as f64;
            if e.im.abs() > EXPECTATION_TOL || (e.re - target[(x, y)]).abs() > EXPECTATION_TOL {
                return Err(Error::Inconsistent(format!(
                    "E({}, {}) = {e} but v·w = {}",
                    x + 1,
                    y + 1,
                    target[(x, y)]
                )));
            }
            table[(x, y)] = e.re;
        }
    }
    Ok(QuantumRealization {
        dim,
        state: maximally_entangled_state(dim),
        alice_observables: alice,
        bob_observables: bob,
        expected: CorrelationTable::new(table)?,
    })
}

type Pair = [f64; 2];

/// JSON export; complex numbers are `[re, im]` pairs.
#[derive(Debug, Serialize)]
pub struct RealizationExport {
    pub local_dimension: usize,
    pub state: Vec<Pair>,
    pub alice_observables: Vec<Vec<Vec<Pair>>>,
    pub bob_observables: Vec<Vec<Vec<Pair>>>,
    pub expected: CorrelationTable,
}

impl QuantumRealization {
    pub fn export(&self) -> RealizationExport {
        let pairs = |m: &CMatrix| -> Vec<Vec<Pair>> {
            m.row_iter().map(|r| r.iter().map(|z| [z.re, z.im]).collect()).collect()
        };
        RealizationExport {
            local_dimension: self.dim,
            state: self.state.iter().map(|z| [z.re, z.im]).collect(),
            alice_observables: self.alice_observables.iter().map(pairs).collect(),
            bob_observables: self.bob_observables.iter().map(pairs).collect(),
            expected: self.expected.clone(),
        }
    }
}

/// Polarizer at angle `θ` (degrees): `cos(2θ)σ_x + sin(2θ)σ_z`.
pub fn observable_from_polarizer_angle(theta_deg: f64) -> CMatrix {
    let t = 2.0 * theta_deg.to_radians();
    pauli('x') * C64::new(t.cos(), 0.0) + pauli('z') * C64::new(t.sin(), 0.0)
}
