//! Symplectic matrices over `Z_{n̄}`, the projective representation `F → V_F`
//! in the Clifford group, parity operators and their classification, and the
//! order-2 symmetry matrix attached to aligned SICs.

use crate::matrix::{Complex64, ComplexMatrix};
use crate::modring::{bar, gcd, inv_mod, reduce, ModInt, TauPhase};
use crate::weylheis::{displacement, DisplacementIndex};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CliffordError {
    #[error("matrix is not symplectic: det = {det} ≠ 1 mod {modulus}")]
    NotSymplectic { det: u64, modulus: u64 },
    #[error("parity uniqueness audit failed: {reason}")]
    AuditFailure { reason: String },
}

/// A 2×2 matrix over `Z_{n̄}` with determinant 1, acting on displacement
/// indices of an n-dimensional representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymplecticMatrix {
    alpha: ModInt,
    beta: ModInt,
    gamma: ModInt,
    delta: ModInt,
    dim: u64,
}

impl SymplecticMatrix {
    /// Construct from raw integers, reducing mod `n̄` and checking the determinant.
    pub fn new(
        alpha: i64,
        beta: i64,
        gamma: i64,
        delta: i64,
        dim: u64,
    ) -> Result<Self, CliffordError> {
        let m = bar(dim);
        let f = Self {
            alpha: ModInt::new(alpha, m),
            beta: ModInt::new(beta, m),
            gamma: ModInt::new(gamma, m),
            delta: ModInt::new(delta, m),
            dim,
        };
        let det = f.alpha.mul(&f.delta).sub(&f.beta.mul(&f.gamma));
        if det.value() != 1 % m {
            return Err(CliffordError::NotSymplectic {
                det: det.value(),
                modulus: m,
            });
        }
        Ok(f)
    }

    pub fn identity(dim: u64) -> Self {
        Self::new(1, 0, 0, 1, dim).expect("identity is symplectic")
    }

    pub fn dim(&self) -> u64 {
        self.dim
    }

    pub fn modulus(&self) -> u64 {
        bar(self.dim)
    }

    /// Entries `(α, β, γ, δ)` as canonical representatives in `[0, n̄)`.
    pub fn entries(&self) -> (u64, u64, u64, u64) {
        (
            self.alpha.value(),
            self.beta.value(),
            self.gamma.value(),
            self.delta.value(),
        )
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let a = self
            .alpha
            .mul(&other.alpha)
            .add(&self.beta.mul(&other.gamma));
        let b = self
            .alpha
            .mul(&other.beta)
            .add(&self.beta.mul(&other.delta));
        let c = self
            .gamma
            .mul(&other.alpha)
            .add(&self.delta.mul(&other.gamma));
        let d = self
            .gamma
            .mul(&other.beta)
            .add(&self.delta.mul(&other.delta));
        Self {
            alpha: a,
            beta: b,
            gamma: c,
            delta: d,
            dim: self.dim,
        }
    }

    /// Inverse `[[δ, −β], [−γ, α]]` (determinant is 1).
    pub fn inverse(&self) -> Self {
        Self {
            alpha: self.delta,
            beta: self.beta.neg(),
            gamma: self.gamma.neg(),
            delta: self.alpha,
            dim: self.dim,
        }
    }

    /// Image of an index pair, `F(a,b) = (αa+βb, γa+δb)` over the integers,
    /// with entries lifted to their canonical representatives.
    pub fn apply(&self, a: i64, b: i64) -> (i64, i64) {
        let (al, be, ga, de) = self.entries();
        (al as i64 * a + be as i64 * b, ga as i64 * a + de as i64 * b)
    }

    /// Prime symplectic matrices have β invertible modulo `n̄`.
    pub fn is_prime(&self) -> bool {
        gcd(self.beta.value(), self.modulus()) == 1
    }
}

/// Result of factoring a symplectic matrix into prime factors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PrimeDecomposition {
    /// The matrix itself is prime; no factoring needed.
    Prime(SymplecticMatrix),
    /// `F = F1 · F2` with both factors prime.
    Product(SymplecticMatrix, SymplecticMatrix),
}

/// Canonical prime decomposition.
///
/// Prime input passes through. Otherwise take `G = [[s, −1], [1, 0]]` (always
/// prime) with the smallest `s ∈ [0, n̄)` making `α + βs` invertible mod `n̄`
/// — such an `s` exists because det F = 1 forces gcd(α, β, n̄) = 1 — and
/// return `(F·G⁻¹, G)`.
pub fn prime_decompose(f: &SymplecticMatrix) -> PrimeDecomposition {
    if f.is_prime() {
        return PrimeDecomposition::Prime(*f);
    }
    let m = f.modulus();
    let (al, be, _, _) = f.entries();
    let s = (0..m)
        .find(|&s| gcd(reduce(al as i64 + (be * s) as i64, m), m) == 1)
        .expect("det = 1 guarantees a prime shear exists");
    let g = SymplecticMatrix::new(s as i64, -1, 1, 0, f.dim).expect("shear is symplectic");
    let f1 = f.mul(&g.inverse());
    debug_assert!(f1.is_prime());
    debug_assert_eq!(f1.mul(&g), *f);
    PrimeDecomposition::Product(f1, g)
}

/// `V_F` for prime `F`: `(1/√n) Σ_{u,v} τ^{β⁻¹(αv² − 2uv + δu²)} |u⟩⟨v|`.
fn symplectic_unitary_prime(f: &SymplecticMatrix) -> ComplexMatrix {
    assert!(f.is_prime());
    let n = f.dim;
    let m = f.modulus();
    let (al, be, _, de) = f.entries();
    let binv = inv_mod(be as i64, m)
        .expect("prime means β invertible")
        .value() as i128;
    let scale = 1.0 / (n as f64).sqrt();
    ComplexMatrix::from_fn(n as usize, n as usize, |u, v| {
        let (u, v) = (u as i128, v as i128);
        let quad = al as i128 * v * v - 2 * u * v + de as i128 * u * u;
        TauPhase::from_wide(n, binv * quad).evaluate() * scale
    })
}

/// The symplectic unitary `V_F`, via the explicit formula when `F` is prime
/// and via the canonical prime decomposition otherwise. Defined up to a
/// global phase; this construction fixes one deterministically.
pub fn symplectic_unitary(f: &SymplecticMatrix) -> ComplexMatrix {
    match prime_decompose(f) {
        PrimeDecomposition::Prime(p) => symplectic_unitary_prime(&p),
        PrimeDecomposition::Product(f1, f2) => {
            symplectic_unitary_prime(&f1).mul_mat(&symplectic_unitary_prime(&f2))
        }
    }
}

/// Max deviation of `V D_{a,b} V†` from `D_{F(a,b)}` over `(a,b) ∈ [0,n)²`,
/// each comparison after optimal global-phase alignment.
pub fn covariance_check(v: &ComplexMatrix, f: &SymplecticMatrix) -> f64 {
    let n = f.dim;
    let vdag = v.adjoint();
    let mut worst: f64 = 0.0;
    for a in 0..n as i64 {
        for b in 0..n as i64 {
            let lhs = v
                .mul_mat(&displacement(&DisplacementIndex::new(a, b, n)))
                .mul_mat(&vdag);
            let (fa, fb) = f.apply(a, b);
            let rhs = displacement(&DisplacementIndex::new(fa, fb, n));
            worst = worst.max(rhs.phase_aligned_distance(&lhs));
        }
    }
    worst
}

/// The parity operator `P⁽ⁿ⁾ = Σ |−u⟩⟨u|`.
pub fn parity(n: u64) -> ComplexMatrix {
    let n_us = n as usize;
    let mut p = ComplexMatrix::zeros(n_us, n_us);
    for u in 0..n {
        p[(reduce(-(u as i64), n) as usize, u as usize)] = Complex64::new(1.0, 0.0);
    }
    p
}

/// Displaced parity operator `P_{a,b} = D_{a,b} P`.
pub fn displaced_parity(idx: &DisplacementIndex) -> ComplexMatrix {
    displacement(idx).mul_mat(&parity(idx.dim))
}

/// Trace of `P_{a,b}` from the closed form: 1 for odd n,
/// `1 − (−1)^{(a+1)(b+1)}` for even n.
pub fn parity_trace_formula(n: u64, a: i64, b: i64) -> i64 {
    if n % 2 == 1 {
        1
    } else {
        let e = (a + 1) * (b + 1);
        if e % 2 == 0 {
            0
        } else {
            2
        }
    }
}

/// Classification of one displaced parity operator: its (integer) trace and
/// the ±1 eigenvalue multiplicities.
#[derive(Debug, Clone, Serialize)]
pub struct ParityClass {
    pub a: i64,
    pub b: i64,
    pub dim: u64,
    pub trace_value: i64,
    /// Multiplicities of the eigenvalues (+1, −1).
    pub spectrum: (usize, usize),
}

/// Classify `P_{a,b}` numerically: trace by summation, multiplicities by a
/// Hermitian eigensolve of the involution (eigenvalues ±1, threshold 0.5).
pub fn classify_displaced_parity(idx: &DisplacementIndex) -> ParityClass {
    let p = displaced_parity(idx);
    let trace_value = p.trace().re.round() as i64;
    let (vals, _) = p.hermitian_eigen();
    let plus = vals.iter().filter(|&&l| l > 0.5).count();
    let minus = vals.iter().filter(|&&l| l < -0.5).count();
    ParityClass {
        a: idx.a,
        b: idx.b,
        dim: idx.dim,
        trace_value,
        spectrum: (plus, minus),
    }
}

/// Assemble the displacement-basis expansion of the parity operator and
/// return its Frobenius distance from `parity(n)`:
/// `(1/n) Σ D_{a,b}` for odd n, `(1/n) Σ (1−(−1)^{(a+1)(b+1)}) D_{a,b}` for even n.
pub fn parity_expansion_check(n: u64) -> f64 {
    let mut acc = ComplexMatrix::zeros(n as usize, n as usize);
    for a in 0..n as i64 {
        for b in 0..n as i64 {
            let w = if n % 2 == 1 {
                1
            } else {
                parity_trace_formula(n, a, b)
            };
            if w == 0 {
                continue;
            }
            let d = displacement(&DisplacementIndex::new(a, b, n));
            acc = acc.add_mat(&d.scale(Complex64::new(w as f64, 0.0)));
        }
    }
    acc.scale(Complex64::new(1.0 / n as f64, 0.0))
        .frobenius_distance(&parity(n))
}

/// One audited candidate `e^{iθ} D_{k,l} V_F` from the parity uniqueness proof.
#[derive(Debug, Clone, Serialize)]
pub struct AuditCase {
    pub case_id: usize,
    /// Entries (α, β, γ, δ) of F as representatives in `[0, n̄)`.
    pub f_entries: (u64, u64, u64, u64),
    pub k: u64,
    pub l: u64,
    /// `‖λ·D_{k,l}V_F − P‖_F` for the optimal unimodular λ.
    pub residual: f64,
    /// The aligning phase λ, stored as (re, im).
    pub phase: (f64, f64),
    pub passes: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub n: u64,
    pub expected_cases: usize,
    pub cases: Vec<AuditCase>,
}

impl AuditReport {
    pub fn all_pass(&self) -> bool {
        self.cases.len() == self.expected_cases && self.cases.iter().all(|c| c.passes)
    }

    /// Structured text record, one line per case.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "parity uniqueness audit, n = {} ({} case(s) expected)\n",
            self.n, self.expected_cases
        );
        for c in &self.cases {
            let (al, be, ga, de) = c.f_entries;
            out.push_str(&format!(
                "case {}: F = [[{}, {}], [{}, {}]], (k, l) = ({}, {}), residual = {:.3e}, {}\n",
                c.case_id,
                al,
                be,
                ga,
                de,
                c.k,
                c.l,
                c.residual,
                if c.passes { "ok" } else { "FAIL" }
            ));
        }
        out
    }
}

/// Exhaustively solve the two conjugation constraints of the parity
/// uniqueness argument over `SL(2, Z_n̄) × Z_n²` and verify each solution is
/// `±P⁽ⁿ⁾` up to the forced phase.
///
/// The constraints reduce exactly to integers: a Clifford element
/// `e^{iθ} D_{k,l} V_F` squares to 1 against both generators iff
/// `α ≡ −1`, `γ ≡ 0`, `β ≡ 0`, `δ ≡ −1 (mod n)`, `det F ≡ 1 (mod n̄)`, and
/// the τ-exponents `γ + 2lα − 2kγ` and `−β + 2lβ − 2kδ` vanish mod the order
/// of τ. For odd n this leaves a single case; for even n the eight known
/// ones. Any other candidate count, or a candidate that is not ±P up to the
/// forced phase, fails the audit.
pub fn parity_uniqueness_audit(n: u64) -> Result<AuditReport, CliffordError> {
    assert!(
        (2..=12).contains(&n),
        "audit enumeration is sized for 2 ≤ n ≤ 12"
    );
    let m = bar(n);
    let tau_order = if n % 2 == 1 { n } else { 2 * n } as i64;
    let n_i = n as i64;
    let expected_cases = if n % 2 == 1 { 1 } else { 8 };

    let p_ref = parity(n);
    let mut cases = Vec::new();
    let mut case_id = 0;

    for alpha in 0..m {
        if (alpha + 1) % n != 0 {
            continue;
        }
        for beta in 0..m {
            if beta % n != 0 {
                continue;
            }
            for gamma in 0..m {
                if gamma % n != 0 {
                    continue;
                }
                for delta in 0..m {
                    if (delta + 1) % n != 0 {
                        continue;
                    }
                    let det = reduce(
                        (alpha as i64) * (delta as i64) - (beta as i64) * (gamma as i64),
                        m,
                    );
                    if det != 1 % m {
                        continue;
                    }
                    let f = SymplecticMatrix::new(
                        alpha as i64,
                        beta as i64,
                        gamma as i64,
                        delta as i64,
                        n,
                    )
                    .expect("determinant already checked");
                    for k in 0..n_i {
                        for l in 0..n_i {
                            let ex = gamma as i64 + 2 * l * alpha as i64 - 2 * k * gamma as i64;
                            let ez = -(beta as i64) + 2 * l * beta as i64 - 2 * k * delta as i64;
                            if ex.rem_euclid(tau_order) != 0 || ez.rem_euclid(tau_order) != 0 {
                                continue;
                            }
                            case_id += 1;
                            let vf = symplectic_unitary(&f);
                            let cand = displacement(&DisplacementIndex::new(k, l, n)).mul_mat(&vf);
                            // Optimal unimodular λ with λ·cand ≈ P.
                            let mut best = 0.0;
                            let mut lambda = Complex64::new(1.0, 0.0);
                            for r in 0..n as usize {
                                for c in 0..n as usize {
                                    let w = p_ref[(r, c)].norm() * cand[(r, c)].norm();
                                    if w > best {
                                        best = w;
                                        lambda = p_ref[(r, c)] * cand[(r, c)].conj();
                                    }
                                }
                            }
                            if best > 0.0 {
                                lambda /= lambda.norm();
                            }
                            let residual = p_ref.frobenius_distance(&cand.scale(lambda));
                            cases.push(AuditCase {
                                case_id,
                                f_entries: (alpha, beta, gamma, delta),
                                k: k as u64,
                                l: l as u64,
                                residual,
                                phase: (lambda.re, lambda.im),
                                passes: residual < 1e-10,
                            });
                        }
                    }
                }
            }
        }
    }

    let report = AuditReport {
        n,
        expected_cases,
        cases,
    };
    if report.cases.len() != expected_cases {
        return Err(CliffordError::AuditFailure {
            reason: format!(
                "n = {n}: found {} candidate(s), expected {expected_cases}",
                report.cases.len()
            ),
        });
    }
    if let Some(bad) = report.cases.iter().find(|c| !c.passes) {
        return Err(CliffordError::AuditFailure {
            reason: format!(
                "n = {n}: case {} has residual {:.3e} against ±P",
                bad.case_id, bad.residual
            ),
        });
    }
    Ok(report)
}

/// The order-2 symmetry matrix of an aligned SIC in dimension `n = d(d−2)`:
/// `F_b = [[1−d, n], [n, 1−d+n]]` over `Z_{2n}`.
pub fn symmetry_matrix(d: u64) -> SymplecticMatrix {
    assert!(d >= 4 && d.is_multiple_of(2), "defined for even d ≥ 4");
    let n = d * (d - 2);
    SymplecticMatrix::new(1 - d as i64, n as i64, n as i64, 1 - d as i64 + n as i64, n)
        .expect("the symmetry matrix is symplectic for even d")
}
