//! Hilbert-space decompositions.
//!
//! Three related constructions live here:
//!
//! * the four-block representation of WH(n) for `4 | n`, in which
//!   displacement operators with even indices are block-diagonal, together
//!   with the explicit intertwiner back to the standard representation;
//! * the Chinese-remainder tensor splitting of a dimension with coprime
//!   factors, under which `D_{a,b}^{(n1·n2)} = D_{a,κ₂b}^{(n1)} ⊗ D_{a,κ₁b}^{(n2)}`;
//! * the twirl identities that average local displacements into partial
//!   traces.

use crate::matrix::{Complex64, ComplexMatrix, C_ONE};
use crate::modring::{crt_kappas, gcd, RootOfUnity};
use crate::weylheis::{displacement, pauli_x, pauli_z, DisplacementIndex};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecompError {
    #[error("dimension {n} is not divisible by 4")]
    DimensionError { n: u64 },
    #[error("{n1} and {n2} are not coprime")]
    NotCoprime { n1: u64, n2: u64 },
    #[error(
        "off-diagonal block mass {mass:.3e} exceeds tolerance in block structure of D_{{{a},{b}}}"
    )]
    BlockLeakage { a: i64, b: i64, mass: f64 },
}

/// The decomposition of an n-dimensional space (4 | n) into four
/// m-dimensional subspaces, m = n/4, in the lexicographic basis: subspace j
/// occupies rows/columns `[j·m, (j+1)·m)`.
#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    n: u64,
    m: u64,
}

impl BlockDecomposition {
    pub fn new(n: u64) -> Result<Self, DecompError> {
        if !n.is_multiple_of(4) {
            return Err(DecompError::DimensionError { n });
        }
        Ok(Self { n, m: n / 4 })
    }

    pub fn dim(&self) -> u64 {
        self.n
    }

    pub fn block_dim(&self) -> u64 {
        self.m
    }

    /// The orthogonal projector Λ_j onto the j-th subspace (j ∈ 0..4),
    /// an exact permutation-block projector.
    pub fn subspace_projector(&self, j: usize) -> ComplexMatrix {
        assert!(j < 4);
        let (n, m) = (self.n as usize, self.m as usize);
        let mut p = ComplexMatrix::zeros(n, n);
        for u in 0..m {
            p[(j * m + u, j * m + u)] = C_ONE;
        }
        p
    }

    /// The j-th diagonal m×m block of an n×n operator.
    pub fn extract_block(&self, op: &ComplexMatrix, j: usize) -> ComplexMatrix {
        assert!(j < 4);
        let m = self.m as usize;
        op.block(j * m, j * m, m)
    }

    /// Total Frobenius mass outside the four diagonal blocks.
    pub fn off_block_mass(&self, op: &ComplexMatrix) -> f64 {
        let m = self.m as usize;
        let mut mass = 0.0;
        for r in 0..self.n as usize {
            for c in 0..self.n as usize {
                if r / m != c / m {
                    mass += op[(r, c)].norm_sqr();
                }
            }
        }
        mass.sqrt()
    }
}

/// Generators of the four-block representation of WH(n), 4 | n, m = n/4:
///
/// ```text
///      | .    .    X_m  .         |        | .    1    .     .        |
/// X_n =| .    .    .    ω_2m X_m  |,  Z_n =| Z_m  .    .     .        |
///      | 1    .    .    .         |        | .    .    .     ω_4m 1   |
///      | .    1    .    .         |        | .    .    ω_4m Z_m  .    |
/// ```
pub fn unorthodox_generators(n: u64) -> Result<(ComplexMatrix, ComplexMatrix), DecompError> {
    let dec = BlockDecomposition::new(n)?;
    let m = dec.block_dim();
    let m_us = m as usize;
    let xm = pauli_x(m);
    let zm = pauli_z(m);
    let om_2m = RootOfUnity::new(2 * m, 1).evaluate();
    let om_4m = RootOfUnity::new(4 * m, 1).evaluate();

    let mut x = ComplexMatrix::zeros(4 * m_us, 4 * m_us);
    let mut z = ComplexMatrix::zeros(4 * m_us, 4 * m_us);
    let put =
        |target: &mut ComplexMatrix, jr: usize, jc: usize, block: &ComplexMatrix, w: Complex64| {
            for r in 0..m_us {
                for c in 0..m_us {
                    target[(jr * m_us + r, jc * m_us + c)] = w * block[(r, c)];
                }
            }
        };
    let id = ComplexMatrix::identity(m_us);
    put(&mut x, 0, 2, &xm, C_ONE);
    put(&mut x, 1, 3, &xm, om_2m);
    put(&mut x, 2, 0, &id, C_ONE);
    put(&mut x, 3, 1, &id, C_ONE);

    put(&mut z, 0, 1, &id, C_ONE);
    put(&mut z, 1, 0, &zm, C_ONE);
    put(&mut z, 2, 3, &id, om_4m);
    put(&mut z, 3, 2, &zm, om_4m);
    Ok((x, z))
}

/// Displacement operator of the four-block representation,
/// `τ^{ab} X_unorth^a Z_unorth^b` with indices reduced into `[0, n)`
/// (the translation signs are restored by the caller when needed).
fn unorthodox_displacement(
    x: &ComplexMatrix,
    z: &ComplexMatrix,
    idx: &DisplacementIndex,
) -> ComplexMatrix {
    let n = idx.dim;
    let (ar, br) = idx.reduced();
    let tau = crate::modring::TauPhase::from_wide(n, idx.a as i128 * idx.b as i128).evaluate();
    // τ^{ab} uses the raw indices; X^a Z^b only needs them mod n because the
    // generators have order n.
    x.pow(ar as u32).mul_mat(&z.pow(br as u32)).scale(tau)
}

/// The 2s×2s riffle permutation: top slot r ↦ basis vector 2r, bottom slot
/// s+r ↦ basis vector 2r+1. It satisfies
/// `V·[[0, X_s], [I, 0]]·V† = X_{2s}` and
/// `V·diag(Z_s, ω_{2s} Z_s)·V† = Z_{2s}`.
fn interleave_selector(s: usize) -> ComplexMatrix {
    let mut v = ComplexMatrix::zeros(2 * s, 2 * s);
    for r in 0..s {
        v[(2 * r, r)] = C_ONE;
        v[(2 * r + 1, s + r)] = C_ONE;
    }
    v
}

/// Normalized DFT, `F[j,k] = ω_s^{jk}/√s`.
fn fourier(s: u64) -> ComplexMatrix {
    let scale = 1.0 / (s as f64).sqrt();
    ComplexMatrix::from_fn(s as usize, s as usize, |j, k| {
        RootOfUnity::from_wide(s, j as i128 * k as i128).evaluate() * scale
    })
}

fn blockdiag2(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (sa, sb) = (a.rows(), b.rows());
    let mut out = ComplexMatrix::zeros(sa + sb, sa + sb);
    for r in 0..sa {
        for c in 0..sa {
            out[(r, c)] = a[(r, c)];
        }
    }
    for r in 0..sb {
        for c in 0..sb {
            out[(sa + r, sa + c)] = b[(r, c)];
        }
    }
    out
}

/// The unitary `U_n` conjugating the four-block generators to the
/// generalized Pauli matrices: `U·X_unorth·U† = X_n`, `U·Z_unorth·U† = Z_n`.
pub fn intertwiner(n: u64) -> Result<ComplexMatrix, DecompError> {
    let dec = BlockDecomposition::new(n)?;
    let m = dec.block_dim();
    let f2m = fourier(2 * m);
    let inner = f2m
        .adjoint()
        .mul_mat(&interleave_selector(m as usize))
        .mul_mat(&blockdiag2(&fourier(m), &fourier(m)));
    Ok(interleave_selector(2 * m as usize).mul_mat(&blockdiag2(&inner, &inner)))
}

/// Report of the even-index block structure check for one displacement.
#[derive(Debug, Clone)]
pub struct EvenBlockReport {
    /// The four diagonal m×m blocks of `D_{2a,2b}` in the four-block representation.
    pub blocks: Vec<ComplexMatrix>,
    /// Frobenius mass outside the diagonal blocks (must vanish).
    pub off_block_mass: f64,
    /// Max Frobenius deviation of the blocks from
    /// `(−1)^{ab} ω_{2m}^{0|a|b|a+b} D_{a,b}^{(m)}`.
    pub max_block_deviation: f64,
}

/// Verify that `D_{2a,2b}` in the four-block representation is block-diagonal
/// with blocks `(−1)^{ab}·{D_{a,b}, ω_{2m}^a D_{a,b}, ω_{2m}^b D_{a,b}, ω_{2m}^{a+b} D_{a,b}}`.
pub fn even_block_structure(n: u64, a: i64, b: i64) -> Result<EvenBlockReport, DecompError> {
    let dec = BlockDecomposition::new(n)?;
    let m = dec.block_dim();
    let (x, z) = unorthodox_generators(n)?;
    let big = unorthodox_displacement(&x, &z, &DisplacementIndex::new(2 * a, 2 * b, n));

    let off_block_mass = dec.off_block_mass(&big);
    if off_block_mass > 1e-13 * (n as f64) {
        return Err(DecompError::BlockLeakage {
            a,
            b,
            mass: off_block_mass,
        });
    }

    let small = displacement(&DisplacementIndex::new(a, b, m));
    let sign = if (a * b) % 2 == 0 { 1.0 } else { -1.0 };
    let exps = [0, a, b, a + b];
    let mut blocks = Vec::with_capacity(4);
    let mut max_dev: f64 = 0.0;
    for (j, &e) in exps.iter().enumerate() {
        let block = dec.extract_block(&big, j);
        let target = small.scale(RootOfUnity::new(2 * m, e).evaluate() * sign);
        max_dev = max_dev.max(block.frobenius_distance(&target));
        blocks.push(block);
    }
    Ok(EvenBlockReport {
        blocks,
        off_block_mass,
        max_block_deviation: max_dev,
    })
}

/// The Chinese-remainder isometry `|u⟩ ↦ |u mod n1⟩ ⊗ |u mod n2⟩`
/// (a permutation matrix) for coprime factors.
#[derive(Debug, Clone)]
pub struct TensorSplit {
    n1: u64,
    n2: u64,
    isometry: ComplexMatrix,
}

impl TensorSplit {
    pub fn new(n1: u64, n2: u64) -> Result<Self, DecompError> {
        if gcd(n1, n2) != 1 {
            return Err(DecompError::NotCoprime { n1, n2 });
        }
        let m = (n1 * n2) as usize;
        let mut s = ComplexMatrix::zeros(m, m);
        for u in 0..m as u64 {
            let row = (u % n1) * n2 + (u % n2);
            s[(row as usize, u as usize)] = C_ONE;
        }
        Ok(Self {
            n1,
            n2,
            isometry: s,
        })
    }

    pub fn factors(&self) -> (u64, u64) {
        (self.n1, self.n2)
    }

    pub fn isometry(&self) -> &ComplexMatrix {
        &self.isometry
    }

    /// Rotate an operator on `C^{n1·n2}` into the product ordering:
    /// `S·A·S†`.
    pub fn to_product_basis(&self, a: &ComplexMatrix) -> ComplexMatrix {
        a.conjugate_by(&self.isometry)
    }
}

/// Frobenius deviation of the splitting
/// `D_{a,b}^{(m)} = D_{a,κ₂b}^{(n1)} ⊗ D_{a,κ₁b}^{(n2)}` after the
/// Chinese-remainder change of basis.
pub fn split_displacement(n1: u64, n2: u64, a: i64, b: i64) -> Result<f64, DecompError> {
    let split = TensorSplit::new(n1, n2)?;
    let m = n1 * n2;
    let (k1, k2) = crt_kappas(n1, n2).map_err(|_| DecompError::NotCoprime { n1, n2 })?;
    let lhs = split.to_product_basis(&displacement(&DisplacementIndex::new(a, b, m)));
    let rhs = displacement(&DisplacementIndex::new(a, k2.value() as i64 * b, n1)).kron(
        &displacement(&DisplacementIndex::new(a, k1.value() as i64 * b, n2)),
    );
    Ok(lhs.frobenius_distance(&rhs))
}

/// Per-index deviations of the two block-splitting families for `n = d(d−2)`.
#[derive(Debug, Clone)]
pub struct SubspaceSplitReport {
    pub d: u64,
    /// Max deviation of the blocks of `D_{da,db}` from `1 ⊗ ω_{2n2}^• D_{a,b}^{(n2)}`,
    /// over `(a,b) ∈ [0, d−2)²`.
    pub first_family_max: f64,
    /// Max deviation of the blocks of `D_{(d−2)a,(d−2)b}` from
    /// `ω_{2n1}^• D_{−a,b}^{(n1)} ⊗ 1`, over `(a,b) ∈ [0, d)²`.
    pub second_family_max: f64,
    /// Largest off-diagonal block mass seen in either family.
    pub max_off_block_mass: f64,
}

/// Verify the block structures of `D_{da,db}` and `D_{(d−2)a,(d−2)b}` in the
/// four-block representation with each subspace split by Chinese remaindering
/// (factors `n1 = d/2`, `n2 = (d−2)/2`).
pub fn subspace_splitting_check(d: u64) -> Result<SubspaceSplitReport, DecompError> {
    assert!(d >= 4 && d.is_multiple_of(2), "requires even d ≥ 4");
    let n = d * (d - 2);
    let n1 = d / 2;
    let n2 = (d - 2) / 2;
    let dec = BlockDecomposition::new(n)?;
    let (x, z) = unorthodox_generators(n)?;
    let split = TensorSplit::new(n1, n2)?;
    let id1 = ComplexMatrix::identity(n1 as usize);
    let id2 = ComplexMatrix::identity(n2 as usize);

    let mut first_max: f64 = 0.0;
    let mut second_max: f64 = 0.0;
    let mut off_max: f64 = 0.0;

    // First family: D_{da,db} has blocks 1_{n1} ⊗ ω_{2n2}^{e_j} D_{a,b}^{(n2)}.
    for a in 0..(d - 2) as i64 {
        for b in 0..(d - 2) as i64 {
            let big = unorthodox_displacement(
                &x,
                &z,
                &DisplacementIndex::new(d as i64 * a, d as i64 * b, n),
            );
            let off = dec.off_block_mass(&big);
            off_max = off_max.max(off);
            if off > 1e-12 * n as f64 {
                return Err(DecompError::BlockLeakage { a, b, mass: off });
            }
            let small = displacement(&DisplacementIndex::new(a, b, n2));
            for (j, &e) in [0, a, b, a + b].iter().enumerate() {
                let block = split.to_product_basis(&dec.extract_block(&big, j));
                let target = id1.kron(&small.scale(RootOfUnity::new(2 * n2, e).evaluate()));
                first_max = first_max.max(block.frobenius_distance(&target));
            }
        }
    }

    // Second family: D_{(d−2)a,(d−2)b} has blocks ω_{2n1}^{e_j} D_{−a,b}^{(n1)} ⊗ 1_{n2}.
    for a in 0..d as i64 {
        for b in 0..d as i64 {
            let big = unorthodox_displacement(
                &x,
                &z,
                &DisplacementIndex::new((d as i64 - 2) * a, (d as i64 - 2) * b, n),
            );
            let off = dec.off_block_mass(&big);
            off_max = off_max.max(off);
            if off > 1e-12 * n as f64 {
                return Err(DecompError::BlockLeakage { a, b, mass: off });
            }
            let small = displacement(&DisplacementIndex::new(-a, b, n1));
            for (j, &e) in [0, a, b, a + b].iter().enumerate() {
                let block = split.to_product_basis(&dec.extract_block(&big, j));
                let target = small
                    .scale(RootOfUnity::new(2 * n1, e).evaluate())
                    .kron(&id2);
                second_max = second_max.max(block.frobenius_distance(&target));
            }
        }
    }

    Ok(SubspaceSplitReport {
        d,
        first_family_max: first_max,
        second_family_max: second_max,
        max_off_block_mass: off_max,
    })
}

/// Twirl over the first tensor factor:
/// `(1/n1) Σ_{a,b<n1} (D_{−a,b} ⊗ 1) A (D_{a,−b} ⊗ 1) = 1 ⊗ tr₁(A)`.
pub fn twirl_left(a_op: &ComplexMatrix, n1: u64, n2: u64) -> ComplexMatrix {
    let dim = (n1 * n2) as usize;
    assert_eq!(a_op.rows(), dim);
    let id2 = ComplexMatrix::identity(n2 as usize);
    let mut acc = ComplexMatrix::zeros(dim, dim);
    for a in 0..n1 as i64 {
        for b in 0..n1 as i64 {
            let left = displacement(&DisplacementIndex::new(-a, b, n1)).kron(&id2);
            let right = displacement(&DisplacementIndex::new(a, -b, n1)).kron(&id2);
            acc = acc.add_mat(&left.mul_mat(a_op).mul_mat(&right));
        }
    }
    acc.scale(Complex64::new(1.0 / n1 as f64, 0.0))
}

/// Twirl over the second tensor factor:
/// `(1/n2) Σ_{a,b<n2} (1 ⊗ D_{a,b}) A (1 ⊗ D_{−a,−b}) = tr₂(A) ⊗ 1`.
pub fn twirl_right(a_op: &ComplexMatrix, n1: u64, n2: u64) -> ComplexMatrix {
    let dim = (n1 * n2) as usize;
    assert_eq!(a_op.rows(), dim);
    let id1 = ComplexMatrix::identity(n1 as usize);
    let mut acc = ComplexMatrix::zeros(dim, dim);
    for a in 0..n2 as i64 {
        for b in 0..n2 as i64 {
            let left = id1.kron(&displacement(&DisplacementIndex::new(a, b, n2)));
            let right = id1.kron(&displacement(&DisplacementIndex::new(-a, -b, n2)));
            acc = acc.add_mat(&left.mul_mat(a_op).mul_mat(&right));
        }
    }
    acc.scale(Complex64::new(1.0 / n2 as f64, 0.0))
}

/// Rotate a standard-representation operator into the four-block
/// representation: `A ↦ U† A U`.
pub fn rotate_to_unorthodox(a_op: &ComplexMatrix, u: &ComplexMatrix) -> ComplexMatrix {
    a_op.conjugate_by(&u.adjoint())
}
