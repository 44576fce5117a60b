//! The standard representation of the Weyl-Heisenberg group WH(n):
//! generalized Pauli matrices, displacement operators and the expansion of an
//! operator in the displacement-operator basis.
//!
//! Displacement matrices are assembled directly from exact integer phase
//! exponents applied to permutation structure rather than by repeated matrix
//! multiplication, so there is no rounding accumulation in `X^a Z^b`.

use crate::matrix::{Complex64, ComplexMatrix, C_ZERO};
use crate::modring::{reduce, RootOfUnity, TauPhase};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WeylHeisError {
    #[error("merging rule failed numerically at residual {residual:.3e} (implementation bug)")]
    MergeMismatch { residual: f64 },
}

/// Label (a, b) of a displacement operator `D_{a,b}` on an n-dimensional space.
///
/// Indices are stored unreduced: for even n the operators are anti-periodic
/// under index translation, so silent reduction would lose signs. Reduction
/// into `[0, n)²` is explicit via [`DisplacementIndex::reduced`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DisplacementIndex {
    pub a: i64,
    pub b: i64,
    pub dim: u64,
}

impl DisplacementIndex {
    pub fn new(a: i64, b: i64, dim: u64) -> Self {
        assert!(dim >= 1);
        Self { a, b, dim }
    }

    pub fn neg(&self) -> Self {
        Self {
            a: -self.a,
            b: -self.b,
            dim: self.dim,
        }
    }

    /// Canonical representative in `[0, n)²`.
    pub fn reduced(&self) -> (u64, u64) {
        (reduce(self.a, self.dim), reduce(self.b, self.dim))
    }
}

/// The cyclic shift `X_n = Σ |u+1⟩⟨u|`.
pub fn pauli_x(n: u64) -> ComplexMatrix {
    let n_us = n as usize;
    let mut m = ComplexMatrix::zeros(n_us, n_us);
    for u in 0..n_us {
        m[((u + 1) % n_us, u)] = Complex64::new(1.0, 0.0);
    }
    m
}

/// The clock matrix `Z_n = Σ ω_n^u |u⟩⟨u|`.
pub fn pauli_z(n: u64) -> ComplexMatrix {
    let n_us = n as usize;
    ComplexMatrix::from_fn(n_us, n_us, |r, c| {
        if r == c {
            RootOfUnity::new(n, r as i64).evaluate()
        } else {
            C_ZERO
        }
    })
}

/// Exact τ-phase exponent of the matrix entry `(row, col)` of `D_{a,b}`,
/// or None when the entry vanishes. The nonzero entries sit at
/// `row = col + a mod n` and carry `τ^{ab + 2b·col}`.
#[inline]
fn entry_tau_exponent(idx: &DisplacementIndex, row: u64, col: u64) -> Option<i128> {
    let n = idx.dim;
    if (col as i128 + idx.a as i128).rem_euclid(n as i128) as u64 != row {
        return None;
    }
    Some(idx.a as i128 * idx.b as i128 + 2 * idx.b as i128 * col as i128)
}

/// The displacement operator `D_{a,b} = τ_n^{ab} X^a Z^b`.
pub fn displacement(idx: &DisplacementIndex) -> ComplexMatrix {
    let n = idx.dim;
    let n_us = n as usize;
    let mut m = ComplexMatrix::zeros(n_us, n_us);
    for col in 0..n {
        let row = reduce(idx.a + col as i64, n);
        let e = entry_tau_exponent(idx, row, col).expect("row chosen to match");
        m[(row as usize, col as usize)] = TauPhase::from_wide(n, e).evaluate();
    }
    m
}

/// Apply `D_{a,b}` to a vector without materializing the matrix:
/// `(D ψ)_{v+a} = τ^{ab + 2bv} ψ_v`.
pub fn displacement_apply(idx: &DisplacementIndex, psi: &[Complex64], out: &mut [Complex64]) {
    let n = idx.dim;
    debug_assert_eq!(psi.len(), n as usize);
    debug_assert_eq!(out.len(), n as usize);
    for v in 0..n {
        let row = reduce(idx.a + v as i64, n) as usize;
        let e = idx.a as i128 * idx.b as i128 + 2 * idx.b as i128 * v as i128;
        out[row] = TauPhase::from_wide(n, e).evaluate() * psi[v as usize];
    }
}

/// `⟨φ|D_{a,b}|ψ⟩` computed entrywise in O(n).
pub fn displacement_sandwich(
    idx: &DisplacementIndex,
    phi: &[Complex64],
    psi: &[Complex64],
) -> Complex64 {
    let n = idx.dim;
    let mut acc = C_ZERO;
    for v in 0..n {
        let row = reduce(idx.a + v as i64, n) as usize;
        let e = idx.a as i128 * idx.b as i128 + 2 * idx.b as i128 * v as i128;
        acc += phi[row].conj() * TauPhase::from_wide(n, e).evaluate() * psi[v as usize];
    }
    acc
}

/// The vector `D_{a,b} |ψ⟩` (owned result).
pub fn displace_vector(idx: &DisplacementIndex, psi: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![C_ZERO; psi.len()];
    displacement_apply(idx, psi, &mut out);
    out
}

/// Precomputed phase tables for one dimension, for hot loops over many (a, b).
///
/// `tau[k]` is `τ_n^k` for `k ∈ [0, 2n)`; every displacement entry phase is a
/// table lookup instead of a `sin`/`cos` pair.
pub struct DisplacementTable {
    n: u64,
    tau: Vec<Complex64>,
}

impl DisplacementTable {
    pub fn new(n: u64) -> Self {
        let tau = (0..2 * n)
            .map(|k| TauPhase::new(n, k as i64).evaluate())
            .collect();
        Self { n, tau }
    }

    pub fn dim(&self) -> u64 {
        self.n
    }

    #[inline]
    fn tau_pow(&self, e: i128) -> Complex64 {
        self.tau[(e.rem_euclid(2 * self.n as i128)) as usize]
    }

    /// `(D_{a,b} ψ)` into `out`.
    pub fn apply(&self, a: i64, b: i64, psi: &[Complex64], out: &mut [Complex64]) {
        let n = self.n;
        for v in 0..n {
            let row = reduce(a + v as i64, n) as usize;
            let e = a as i128 * b as i128 + 2 * b as i128 * v as i128;
            out[row] = self.tau_pow(e) * psi[v as usize];
        }
    }

    /// `(D_{a,b}† ψ) = (D_{−a,−b} ψ)` into `out`.
    pub fn apply_adjoint(&self, a: i64, b: i64, psi: &[Complex64], out: &mut [Complex64]) {
        self.apply(-a, -b, psi, out);
    }

    /// `⟨ψ|D_{a,b}|ψ⟩`.
    pub fn overlap(&self, a: i64, b: i64, psi: &[Complex64]) -> Complex64 {
        let n = self.n;
        let mut acc = C_ZERO;
        for v in 0..n {
            let row = reduce(a + v as i64, n) as usize;
            let e = a as i128 * b as i128 + 2 * b as i128 * v as i128;
            acc += psi[row].conj() * self.tau_pow(e) * psi[v as usize];
        }
        acc
    }
}

/// Coefficients of an operator in the displacement basis,
/// `A = Σ coeffs[a][b] · D_{a,b}`.
#[derive(Debug, Clone)]
pub struct CoefficientTable {
    dim: u64,
    coeffs: Vec<Complex64>, // (a, b) at a·n + b
}

impl CoefficientTable {
    pub fn dim(&self) -> u64 {
        self.dim
    }

    pub fn coeff(&self, a: u64, b: u64) -> Complex64 {
        self.coeffs[(a * self.dim + b) as usize]
    }

    /// Reassemble `Σ coeffs[a][b] D_{a,b}`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.dim;
        let mut acc = ComplexMatrix::zeros(n as usize, n as usize);
        for a in 0..n {
            for b in 0..n {
                let c = self.coeff(a, b);
                if c == C_ZERO {
                    continue;
                }
                let d = displacement(&DisplacementIndex::new(a as i64, b as i64, n));
                acc = acc.add_mat(&d.scale(c));
            }
        }
        acc
    }
}

/// Expand `A = (1/n) Σ tr(D_{−a,−b} A) D_{a,b}`.
pub fn expand(a_mat: &ComplexMatrix) -> CoefficientTable {
    assert!(a_mat.is_square());
    let n = a_mat.rows() as u64;
    let mut coeffs = vec![C_ZERO; (n * n) as usize];
    for a in 0..n {
        for b in 0..n {
            let idx = DisplacementIndex::new(-(a as i64), -(b as i64), n);
            coeffs[(a * n + b) as usize] = displacement_trace_with(&idx, a_mat) / n as f64;
        }
    }
    CoefficientTable { dim: n, coeffs }
}

/// `tr(D_idx · A)` without forming the product: since D has a single nonzero
/// per column, `tr(D·A) = Σ_col D[row(col), col] · A[col, row(col)]`.
pub fn displacement_trace_with(idx: &DisplacementIndex, a_mat: &ComplexMatrix) -> Complex64 {
    let n = idx.dim;
    let mut tr = C_ZERO;
    for col in 0..n {
        let row = reduce(idx.a + col as i64, n);
        let e = entry_tau_exponent(idx, row, col).expect("row matches");
        tr += TauPhase::from_wide(n, e).evaluate() * a_mat[(col as usize, row as usize)];
    }
    tr
}

/// Merging rule `D_{a,b} D_{k,l} = τ^{bk−al} D_{a+k,b+l}`: returns the
/// τ-exponent `bk − al` after confirming the identity numerically.
pub fn merge_check(
    idx1: &DisplacementIndex,
    idx2: &DisplacementIndex,
) -> Result<i64, WeylHeisError> {
    assert_eq!(idx1.dim, idx2.dim, "dimensions must agree");
    let n = idx1.dim;
    let exponent = idx1.b * idx2.a - idx1.a * idx2.b;
    let lhs = displacement(idx1).mul_mat(&displacement(idx2));
    let merged = displacement(&DisplacementIndex::new(idx1.a + idx2.a, idx1.b + idx2.b, n));
    let rhs = merged.scale(TauPhase::new(n, exponent).evaluate());
    let residual = lhs.frobenius_distance(&rhs);
    if residual > 1e-13 * (n as f64).sqrt() {
        return Err(WeylHeisError::MergeMismatch { residual });
    }
    Ok(exponent)
}
