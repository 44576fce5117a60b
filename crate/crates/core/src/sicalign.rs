//! SIC orbits, overlap phases, alignment conditions, the projectors that
//! certify embedded equiangular tight frames, frame partitions, and the
//! order-2 symmetry of aligned SICs in dimensions `n = d(d−2)` with even d.

use crate::clifford::{parity, symmetry_matrix, symplectic_unitary};
use crate::decomp::{intertwiner, rotate_to_unorthodox, BlockDecomposition, TensorSplit};
use crate::matrix::{vec_inner, vec_norm, Complex64, ComplexMatrix, C_ZERO};
use crate::modring::reduce;
use crate::weylheis::{displace_vector, displacement, DisplacementIndex, DisplacementTable};
use serde::Serialize;
use thiserror::Error;

/// Default tolerance on alignment phase deviations. Numerically found
/// fiducials carry optimization error; ingested high-precision fiducials can
/// be checked tighter.
pub const DEFAULT_ALIGNMENT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SicAlignError {
    #[error("vector norm {norm} is too far from 1 to be a fiducial")]
    NotNormalized { norm: f64 },
    #[error("not a SIC fiducial: overlap deviation {overlap_deviation:.3e} at index {worst_index:?}, resolution residual {resolution_residual:.3e}")]
    NotASic {
        worst_index: (u64, u64),
        overlap_deviation: f64,
        resolution_residual: f64,
    },
    #[error("no witness matrix satisfies the second alignment condition (best residual {best_residual:.3e})")]
    SearchSpaceExhausted { best_residual: f64 },
    #[error("block {block} of Π₁ deviates from its parity form by {residual:.3e}")]
    BlockMismatch { block: usize, residual: f64 },
    #[error("frame partition failed at shift {shift:?}: {reason}")]
    PartitionFailure { shift: (u64, u64), reason: String },
    #[error("symmetry verification failed at clause {clause}: residual {residual:.3e}")]
    SymmetryFailure { clause: String, residual: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: u64, got: u64 },
}

/// A unit vector expected to generate a SIC under the displacement orbit.
#[derive(Debug, Clone)]
pub struct FiducialVector {
    dim: u64,
    amplitudes: Vec<Complex64>,
    label: String,
}

impl FiducialVector {
    /// Accepts vectors whose norm is within 1e-6 of 1 and renormalizes them
    /// exactly; anything further off is rejected.
    pub fn new(
        amplitudes: Vec<Complex64>,
        label: impl Into<String>,
    ) -> Result<Self, SicAlignError> {
        let norm = vec_norm(&amplitudes);
        if (norm - 1.0).abs() > 1e-6 || amplitudes.is_empty() {
            return Err(SicAlignError::NotNormalized { norm });
        }
        let amplitudes = amplitudes.into_iter().map(|z| z / norm).collect::<Vec<_>>();
        Ok(Self {
            dim: amplitudes.len() as u64,
            amplitudes,
            label: label.into(),
        })
    }

    pub fn dim(&self) -> u64 {
        self.dim
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// The orbit vector `|ψ_{a,b}⟩ = D_{a,b}|ψ⟩` for raw (unreduced) indices.
    pub fn displaced(&self, a: i64, b: i64) -> Vec<Complex64> {
        displace_vector(&DisplacementIndex::new(a, b, self.dim), &self.amplitudes)
    }
}

/// The full orbit `{D_{a,b}|ψ⟩ : (a,b) ∈ [0,n)²}`, indexed by `a·n + b`.
pub fn sic_orbit(fid: &FiducialVector) -> Vec<Vec<Complex64>> {
    let n = fid.dim();
    let mut orbit = Vec::with_capacity((n * n) as usize);
    for a in 0..n as i64 {
        for b in 0..n as i64 {
            orbit.push(fid.displaced(a, b));
        }
    }
    orbit
}

#[derive(Debug, Clone, Serialize)]
pub struct SicReport {
    pub dim: u64,
    /// Max of `| |⟨ψ|D_{a,b}|ψ⟩|² − 1/(n+1) |` over (a,b) ≠ (0,0).
    pub max_overlap_deviation: f64,
    /// `‖(1/n) Σ |ψ_{a,b}⟩⟨ψ_{a,b}| − I‖_F`.
    pub resolution_residual: f64,
    pub worst_index: (u64, u64),
    pub tolerance: f64,
    pub pass: bool,
}

/// Check the two defining SIC conditions at the given tolerance.
pub fn verify_sic(fid: &FiducialVector, tol: f64) -> SicReport {
    let n = fid.dim();
    let table = DisplacementTable::new(n);
    let target = 1.0 / (n as f64 + 1.0);
    let mut worst = 0.0;
    let mut worst_index = (0, 0);
    for a in 0..n {
        for b in 0..n {
            if a == 0 && b == 0 {
                continue;
            }
            let ov = table.overlap(a as i64, b as i64, fid.amplitudes());
            let dev = (ov.norm_sqr() - target).abs();
            if dev > worst {
                worst = dev;
                worst_index = (a, b);
            }
        }
    }
    // Resolution of the identity.
    let mut frame_op = ComplexMatrix::zeros(n as usize, n as usize);
    let mut displaced = vec![C_ZERO; n as usize];
    for a in 0..n as i64 {
        for b in 0..n as i64 {
            table.apply(a, b, fid.amplitudes(), &mut displaced);
            for r in 0..n as usize {
                for c in 0..n as usize {
                    frame_op[(r, c)] += displaced[r] * displaced[c].conj();
                }
            }
        }
    }
    let resolution_residual = frame_op
        .scale(Complex64::new(1.0 / n as f64, 0.0))
        .frobenius_distance(&ComplexMatrix::identity(n as usize));
    SicReport {
        dim: n,
        max_overlap_deviation: worst,
        resolution_residual,
        worst_index,
        tolerance: tol,
        pass: worst < tol && resolution_residual < tol,
    }
}

/// Like [`verify_sic`] but failure is an error carrying the worst index.
pub fn require_sic(fid: &FiducialVector, tol: f64) -> Result<SicReport, SicAlignError> {
    let report = verify_sic(fid, tol);
    if !report.pass {
        return Err(SicAlignError::NotASic {
            worst_index: report.worst_index,
            overlap_deviation: report.max_overlap_deviation,
            resolution_residual: report.resolution_residual,
        });
    }
    Ok(report)
}

/// The overlap phases `e^{iθ_{a,b}} = √(n+1)·⟨ψ_{0,0}|ψ_{a,b}⟩` on the
/// canonical grid, with the (0,0) entry fixed to 1. Entries are stored as
/// computed (unimodular only to the extent the fiducial is a SIC).
#[derive(Debug, Clone)]
pub struct OverlapPhaseTable {
    dim: u64,
    phases: Vec<Complex64>,
}

impl OverlapPhaseTable {
    pub fn dim(&self) -> u64 {
        self.dim
    }

    /// Entry at the canonical representative of (a, b).
    pub fn phase(&self, a: i64, b: i64) -> Complex64 {
        let ar = reduce(a, self.dim);
        let br = reduce(b, self.dim);
        self.phases[(ar * self.dim + br) as usize]
    }
}

/// Compute the overlap phase table, gated on the SIC check.
pub fn overlap_phases(fid: &FiducialVector, tol: f64) -> Result<OverlapPhaseTable, SicAlignError> {
    require_sic(fid, tol)?;
    Ok(overlap_phases_unchecked(fid))
}

/// The same table without the SIC gate (used internally by searches).
pub fn overlap_phases_unchecked(fid: &FiducialVector) -> OverlapPhaseTable {
    let n = fid.dim();
    let table = DisplacementTable::new(n);
    let scale = ((n + 1) as f64).sqrt();
    let mut phases = vec![C_ZERO; (n * n) as usize];
    for a in 0..n {
        for b in 0..n {
            phases[(a * n + b) as usize] = if a == 0 && b == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                table.overlap(a as i64, b as i64, fid.amplitudes()) * scale
            };
        }
    }
    OverlapPhaseTable { dim: n, phases }
}

/// The first alignment condition's target phase at (a, b) for even d:
/// `−(−1)^{(a+1)(b+1)}`; for odd d the target is 1.
pub fn alignment_c1_target(d: u64, a: i64, b: i64) -> f64 {
    if d % 2 == 1 {
        1.0
    } else if ((a + 1) * (b + 1)) % 2 == 0 {
        -1.0
    } else {
        1.0
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AlignmentReport {
    pub d: u64,
    pub dim: u64,
    pub condition1_pass: bool,
    pub condition1_max_residual: f64,
    pub tolerance: f64,
    /// Present only when a dimension-d fiducial was supplied.
    pub condition2_pass: Option<bool>,
    pub condition2_max_residual: Option<f64>,
    /// Witness (α, β, γ, δ) mod d for condition 2.
    pub witness_matrix: Option<(u64, u64, u64, u64)>,
}

/// Check the first alignment condition: for every (a, b) in `[0, d−2)²`
/// except the origin, `e^{iθ_{da,db}}` equals 1 (odd d) or
/// `−(−1)^{(a+1)(b+1)}` (even d).
pub fn check_alignment_c1(
    fid: &FiducialVector,
    d: u64,
    tol: f64,
) -> Result<AlignmentReport, SicAlignError> {
    let n = d * (d - 2);
    if fid.dim() != n {
        return Err(SicAlignError::DimensionMismatch {
            expected: n,
            got: fid.dim(),
        });
    }
    let phases = overlap_phases(fid, tol.max(DEFAULT_ALIGNMENT_TOL))?;
    let mut worst: f64 = 0.0;
    for a in 0..(d - 2) as i64 {
        for b in 0..(d - 2) as i64 {
            if a == 0 && b == 0 {
                continue;
            }
            let got = phases.phase(d as i64 * a, d as i64 * b);
            let target = Complex64::new(alignment_c1_target(d, a, b), 0.0);
            worst = worst.max((got - target).norm());
        }
    }
    Ok(AlignmentReport {
        d,
        dim: n,
        condition1_pass: worst < tol,
        condition1_max_residual: worst,
        tolerance: tol,
        condition2_pass: None,
        condition2_max_residual: None,
        witness_matrix: None,
    })
}

/// Check the second alignment condition by exhaustive search over witness
/// matrices (α, β, γ, δ) ∈ Z_d⁴ with αδ − βγ = ±1 mod d:
/// `e^{iθ_{(d−2)a,(d−2)b}^{(n)}}` must equal
/// `−e^{2iθ^{(d)}}` (odd d) or `(−1)^{(a+1)(b+1)} e^{2iθ^{(d)}}` (even d)
/// at the transformed index (αa+βb, γa+δb), for all (a,b) ≠ (0,0) in `[0,d)²`.
pub fn check_alignment_c2(
    fid_n: &FiducialVector,
    fid_d: &FiducialVector,
    d: u64,
    tol: f64,
) -> Result<AlignmentReport, SicAlignError> {
    let n = d * (d - 2);
    if fid_n.dim() != n {
        return Err(SicAlignError::DimensionMismatch {
            expected: n,
            got: fid_n.dim(),
        });
    }
    if fid_d.dim() != d {
        return Err(SicAlignError::DimensionMismatch {
            expected: d,
            got: fid_d.dim(),
        });
    }
    let gate = tol.max(DEFAULT_ALIGNMENT_TOL);
    let phases_n = overlap_phases(fid_n, gate)?;
    let phases_d = overlap_phases(fid_d, gate)?;
    let c1 = check_alignment_c1(fid_n, d, tol)?;

    let mut best_residual = f64::INFINITY;
    let mut witness = None;
    'witness: for alpha in 0..d {
        for beta in 0..d {
            for gamma in 0..d {
                for delta in 0..d {
                    let det = (alpha * delta) as i64 - (beta * gamma) as i64;
                    let det_mod = reduce(det, d);
                    if det_mod != 1 % d && det_mod != reduce(-1, d) {
                        continue;
                    }
                    let mut worst: f64 = 0.0;
                    for a in 0..d as i64 {
                        for b in 0..d as i64 {
                            if a == 0 && b == 0 {
                                continue;
                            }
                            let lhs = phases_n.phase((d as i64 - 2) * a, (d as i64 - 2) * b);
                            let td = phases_d.phase(
                                alpha as i64 * a + beta as i64 * b,
                                gamma as i64 * a + delta as i64 * b,
                            );
                            let sign = if d % 2 == 1 {
                                -1.0
                            } else if ((a + 1) * (b + 1)) % 2 == 0 {
                                1.0
                            } else {
                                -1.0
                            };
                            let rhs = td * td * sign;
                            worst = worst.max((lhs - rhs).norm());
                            if worst >= best_residual && witness.is_some() {
                                continue;
                            }
                        }
                    }
                    if worst < best_residual {
                        best_residual = worst;
                        if worst < tol {
                            witness = Some((alpha, beta, gamma, delta));
                            break 'witness;
                        }
                    }
                }
            }
        }
    }

    match witness {
        Some(w) => Ok(AlignmentReport {
            condition2_pass: Some(true),
            condition2_max_residual: Some(best_residual),
            witness_matrix: Some(w),
            ..c1
        }),
        None => Err(SicAlignError::SearchSpaceExhausted { best_residual }),
    }
}

/// Which embedded-frame projector to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PiKind {
    /// `Π₁ = ((d−1)/2d) Σ_{a,b<d} |ψ_{(d−2)a,(d−2)b}⟩⟨·|`, rank d(d−1)/2 when aligned.
    One,
    /// `Π₂ = ((d−1)/2(d−2)) Σ_{a,b<d−2} |ψ_{da,db}⟩⟨·|`, rank (d−1)(d−2)/2.
    Two,
}

#[derive(Debug, Clone)]
pub struct PiProjector {
    pub matrix: ComplexMatrix,
    pub kind: PiKind,
    pub trace: f64,
    /// Rank estimate from the trace (rounded, guarded to 1e-6).
    pub rank: usize,
    /// Rank estimate from the eigenvalue count above 0.5.
    pub rank_spectral: usize,
    /// `‖Π² − Π‖_F`.
    pub idempotency_residual: f64,
}

impl PiProjector {
    pub fn is_projector(&self, tol: f64) -> bool {
        self.idempotency_residual < tol && self.rank == self.rank_spectral
    }

    /// The theoretical rank for an aligned SIC: `d(d−1)/2` or `(d−1)(d−2)/2`.
    pub fn expected_rank(d: u64, kind: PiKind) -> usize {
        match kind {
            PiKind::One => (d * (d - 1) / 2) as usize,
            PiKind::Two => ((d - 1) * (d - 2) / 2) as usize,
        }
    }
}

/// Assemble Π₁ or Π₂ as an explicit sum of orbit projectors.
pub fn projector_pi(
    fid: &FiducialVector,
    d: u64,
    kind: PiKind,
) -> Result<PiProjector, SicAlignError> {
    let n = d * (d - 2);
    if fid.dim() != n {
        return Err(SicAlignError::DimensionMismatch {
            expected: n,
            got: fid.dim(),
        });
    }
    let (range, step, scale) = match kind {
        PiKind::One => (d, d - 2, (d as f64 - 1.0) / (2.0 * d as f64)),
        PiKind::Two => (d - 2, d, (d as f64 - 1.0) / (2.0 * (d as f64 - 2.0))),
    };
    let n_us = n as usize;
    let mut acc = ComplexMatrix::zeros(n_us, n_us);
    for a in 0..range as i64 {
        for b in 0..range as i64 {
            let v = fid.displaced(step as i64 * a, step as i64 * b);
            for r in 0..n_us {
                for c in 0..n_us {
                    acc[(r, c)] += v[r] * v[c].conj();
                }
            }
        }
    }
    let matrix = acc.scale(Complex64::new(scale, 0.0));
    let trace = matrix.trace().re;
    let rank = trace.round() as usize;
    debug_assert!(
        (trace - rank as f64).abs() < 1e-6,
        "trace far from integer: {trace}"
    );
    let rank_spectral = matrix.eigencount_above(0.5);
    let idempotency_residual = matrix.mul_mat(&matrix).frobenius_distance(&matrix);
    Ok(PiProjector {
        matrix,
        kind,
        trace,
        rank,
        rank_spectral,
        idempotency_residual,
    })
}

/// Assemble Π₁ through its displacement-operator expansion
/// `(d(d−1)/2n) Σ_{a,b<d−2} ⟨ψ|D_{da,db}|ψ⟩ D_{−da,−db}` and return the
/// Frobenius distance to the sum-of-projectors form.
pub fn pi_expansion_crosscheck(fid: &FiducialVector, d: u64) -> Result<f64, SicAlignError> {
    let n = d * (d - 2);
    if fid.dim() != n {
        return Err(SicAlignError::DimensionMismatch {
            expected: n,
            got: fid.dim(),
        });
    }
    let direct = projector_pi(fid, d, PiKind::One)?.matrix;
    let table = DisplacementTable::new(n);
    let mut acc = ComplexMatrix::zeros(n as usize, n as usize);
    for a in 0..(d - 2) as i64 {
        for b in 0..(d - 2) as i64 {
            let coeff = table.overlap(d as i64 * a, d as i64 * b, fid.amplitudes());
            let dm = displacement(&DisplacementIndex::new(-(d as i64) * a, -(d as i64) * b, n));
            acc = acc.add_mat(&dm.scale(coeff));
        }
    }
    let expansion = acc.scale(Complex64::new((d * (d - 1)) as f64 / (2.0 * n as f64), 0.0));
    Ok(expansion.frobenius_distance(&direct))
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockParityReport {
    pub d: u64,
    /// n₂ parity decides the sign pattern: upper signs for odd n₂.
    pub upper_signs: bool,
    /// Frobenius residual of each of the four blocks of Π₁ against
    /// `½·1⊗(1 ± P_{·,·})`.
    pub residuals: [f64; 4],
}

/// The parity indices and signs of the four blocks of Π₁:
/// `Π₁ʲ = ½ 1_{n1} ⊗ (1_{n2} s_j P^{(n2)}_{idx_j})` with
/// idx = (0,0), (0,1), (−1,0), (−1,1) and s = (∓, ±, ±, ±)
/// (upper signs for odd n₂).
fn block_parity_targets(n2: u64, upper: bool) -> Vec<ComplexMatrix> {
    let indices: [(i64, i64); 4] = [(0, 0), (0, 1), (-1, 0), (-1, 1)];
    let id2 = ComplexMatrix::identity(n2 as usize);
    indices
        .iter()
        .enumerate()
        .map(|(j, &(a, b))| {
            let pab = displacement(&DisplacementIndex::new(a, b, n2)).mul_mat(&parity(n2));
            let sign = if j == 0 {
                if upper {
                    -1.0
                } else {
                    1.0
                }
            } else if upper {
                1.0
            } else {
                -1.0
            };
            id2.add_mat(&pab.scale(Complex64::new(sign, 0.0)))
                .scale(Complex64::new(0.5, 0.0))
        })
        .collect()
}

/// Verify the block structure of Π₁ for an aligned fiducial: rotate into the
/// four-block representation, split each block by Chinese remaindering, and
/// compare with `½·1_{n1}⊗(1 ± P^{(n2)})` with the sign/index pattern decided
/// by the parity of n₂.
pub fn pi_block_parity_check(
    fid: &FiducialVector,
    d: u64,
    tol: f64,
) -> Result<BlockParityReport, SicAlignError> {
    let n = d * (d - 2);
    if fid.dim() != n {
        return Err(SicAlignError::DimensionMismatch {
            expected: n,
            got: fid.dim(),
        });
    }
    let n1 = d / 2;
    let n2 = (d - 2) / 2;
    let pi1 = projector_pi(fid, d, PiKind::One)?.matrix;
    let u = intertwiner(n).expect("4 divides d(d−2) for even d");
    let rotated = rotate_to_unorthodox(&pi1, &u);
    let dec = BlockDecomposition::new(n).expect("4 | n");
    let split = TensorSplit::new(n1, n2).expect("consecutive integers are coprime");
    let upper = n2 % 2 == 1;
    let targets = block_parity_targets(n2, upper);
    let id1 = ComplexMatrix::identity(n1 as usize);

    let mut residuals = [0.0f64; 4];
    for j in 0..4 {
        let block = split.to_product_basis(&dec.extract_block(&rotated, j));
        let target = id1.kron(&targets[j]);
        residuals[j] = block.frobenius_distance(&target);
        if residuals[j] > tol {
            return Err(SicAlignError::BlockMismatch {
                block: j + 1,
                residual: residuals[j],
            });
        }
    }
    Ok(BlockParityReport {
        d,
        upper_signs: upper,
        residuals,
    })
}

/// Per-block eigenvalue lists, sorted descending.
pub type BlockSpectra = Vec<Vec<f64>>;

/// Eigenvalues of the right marginals of the blocks of Π₁ and the left
/// marginals of the blocks of Π₂ (each sorted descending). The nonzero parts
/// must agree for a SIC fiducial.
pub fn pi_block_marginal_spectra(
    fid: &FiducialVector,
    d: u64,
) -> Result<(BlockSpectra, BlockSpectra), SicAlignError> {
    let n = d * (d - 2);
    let n1 = (d / 2) as usize;
    let n2 = ((d - 2) / 2) as usize;
    let u = intertwiner(n).expect("4 | n");
    let dec = BlockDecomposition::new(n).expect("4 | n");
    let split = TensorSplit::new(n1 as u64, n2 as u64).expect("coprime");

    let pi1 = rotate_to_unorthodox(&projector_pi(fid, d, PiKind::One)?.matrix, &u);
    let pi2 = rotate_to_unorthodox(&projector_pi(fid, d, PiKind::Two)?.matrix, &u);

    let mut right = Vec::with_capacity(4);
    let mut left = Vec::with_capacity(4);
    for j in 0..4 {
        let b1 = split.to_product_basis(&dec.extract_block(&pi1, j));
        // Π₁ʲ = 1 ⊗ R_j, so R_j = tr₁(Π₁ʲ)/n1.
        let r = b1
            .partial_trace_first(n1, n2)
            .scale(Complex64::new(1.0 / n1 as f64, 0.0));
        right.push(r.hermitian_eigen().0);
        let b2 = split.to_product_basis(&dec.extract_block(&pi2, j));
        // Π₂ʲ = L_j ⊗ 1, so L_j = tr₂(Π₂ʲ)/n2.
        let l = b2
            .partial_trace_second(n1, n2)
            .scale(Complex64::new(1.0 / n2 as f64, 0.0));
        left.push(l.hermitian_eigen().0);
    }
    Ok((right, left))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FrameMode {
    /// `(d−2)²` frames of `d²` vectors, rank `d(d−1)/2` each.
    Coarse,
    /// `d²` frames of `(d−2)²` vectors, rank `(d−1)(d−2)/2` each.
    Fine,
}

#[derive(Debug, Clone, Serialize)]
pub struct FrameCertificate {
    pub shift: (u64, u64),
    pub rank: usize,
    /// `‖(rank/m)·Σ|v⟩⟨v| − Π_span‖_F`.
    pub tightness_residual: f64,
    /// Max deviation of pairwise `|⟨v_i|v_j⟩|²` from `1/(n+1)`.
    pub equiangularity_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FramePartition {
    pub mode: FrameMode,
    pub dim: u64,
    pub d: u64,
    pub frame_count: usize,
    pub vectors_per_frame: usize,
    pub expected_rank: usize,
    pub frames: Vec<FrameCertificate>,
    pub max_tightness_residual: f64,
    pub max_equiangularity_residual: f64,
}

/// Partition the SIC orbit into shifted copies of the sublattice frame and
/// certify each coset: correct rank, tightness on its span, and
/// equiangularity at the SIC angle.
pub fn extract_frames(
    fid: &FiducialVector,
    d: u64,
    mode: FrameMode,
    tol: f64,
) -> Result<FramePartition, SicAlignError> {
    let n = d * (d - 2);
    if fid.dim() != n {
        return Err(SicAlignError::DimensionMismatch {
            expected: n,
            got: fid.dim(),
        });
    }
    let (step, range, shifts, expected_rank) = match mode {
        FrameMode::Coarse => (d - 2, d, d - 2, PiProjector::expected_rank(d, PiKind::One)),
        FrameMode::Fine => (d, d - 2, d, PiProjector::expected_rank(d, PiKind::Two)),
    };
    let m = (range * range) as usize; // vectors per frame
    let n_us = n as usize;
    let angle = 1.0 / (n as f64 + 1.0);

    let mut frames = Vec::with_capacity((shifts * shifts) as usize);
    let mut seen = vec![false; (n * n) as usize];
    let mut max_tight: f64 = 0.0;
    let mut max_equi: f64 = 0.0;

    for s in 0..shifts as i64 {
        for t in 0..shifts as i64 {
            let mut vectors = Vec::with_capacity(m);
            for a in 0..range as i64 {
                for b in 0..range as i64 {
                    let ia = step as i64 * a + s;
                    let ib = step as i64 * b + t;
                    let slot = (reduce(ia, n) * n + reduce(ib, n)) as usize;
                    if seen[slot] {
                        return Err(SicAlignError::PartitionFailure {
                            shift: (s as u64, t as u64),
                            reason: format!(
                                "index {:?} already covered",
                                (reduce(ia, n), reduce(ib, n))
                            ),
                        });
                    }
                    seen[slot] = true;
                    vectors.push(fid.displaced(ia, ib));
                }
            }

            // Frame operator and its span projector.
            let mut frame_op = ComplexMatrix::zeros(n_us, n_us);
            for v in &vectors {
                for r in 0..n_us {
                    for c in 0..n_us {
                        frame_op[(r, c)] += v[r] * v[c].conj();
                    }
                }
            }
            let (vals, vecs) = frame_op.hermitian_eigen();
            let frame_constant = m as f64 / expected_rank as f64;
            let rank = vals.iter().filter(|&&l| l > frame_constant / 2.0).count();
            if rank != expected_rank {
                return Err(SicAlignError::PartitionFailure {
                    shift: (s as u64, t as u64),
                    reason: format!("span rank {rank}, expected {expected_rank}"),
                });
            }
            let mut span = ComplexMatrix::zeros(n_us, n_us);
            for k in 0..rank {
                for r in 0..n_us {
                    for c in 0..n_us {
                        span[(r, c)] += vecs[(r, k)] * vecs[(c, k)].conj();
                    }
                }
            }
            let tightness = frame_op
                .scale(Complex64::new(expected_rank as f64 / m as f64, 0.0))
                .frobenius_distance(&span);

            let mut equi: f64 = 0.0;
            for i in 0..vectors.len() {
                for j in (i + 1)..vectors.len() {
                    let ov = vec_inner(&vectors[i], &vectors[j]).norm_sqr();
                    equi = equi.max((ov - angle).abs());
                }
            }

            if tightness > tol {
                return Err(SicAlignError::PartitionFailure {
                    shift: (s as u64, t as u64),
                    reason: format!("tightness residual {tightness:.3e} above {tol:.1e}"),
                });
            }
            max_tight = max_tight.max(tightness);
            max_equi = max_equi.max(equi);
            frames.push(FrameCertificate {
                shift: (s as u64, t as u64),
                rank,
                tightness_residual: tightness,
                equiangularity_residual: equi,
            });
        }
    }
    if seen.iter().any(|&s| !s) {
        return Err(SicAlignError::PartitionFailure {
            shift: (0, 0),
            reason: "cosets do not cover the full index grid".into(),
        });
    }
    Ok(FramePartition {
        mode,
        dim: n,
        d,
        frame_count: frames.len(),
        vectors_per_frame: m,
        expected_rank,
        frames,
        max_tightness_residual: max_tight,
        max_equiangularity_residual: max_equi,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SymmetryReport {
    pub d: u64,
    pub dim: u64,
    /// Clause (i): `‖V² − I‖` after phase alignment.
    pub involution_residual: f64,
    /// Clause (ii): `‖Vψ − e^{iφ}ψ‖` at the optimal phase.
    pub fiducial_fix_residual: f64,
    /// Clause (iii): worst `1 − |⟨ψ_{F(a,b)}|V ψ_{a,b}⟩|²` over the orbit.
    pub projector_permutation_residual: f64,
    /// Clause (iv): phase-aligned distance of V from the block form
    /// `diag(1⊗P_{0,0}, −1⊗P_{0,1}, −1⊗P_{−1,0}, −1⊗P_{−1,1})`.
    pub block_form_residual: f64,
    pub pass: bool,
}

/// The block form `U_b` of the symmetry unitary, assembled from parity
/// operators in the four-block/CRT basis and rotated back to the standard
/// representation.
pub fn symmetry_block_form(d: u64) -> ComplexMatrix {
    assert!(d >= 4 && d.is_multiple_of(2));
    let n = d * (d - 2);
    let n1 = d / 2;
    let n2 = (d - 2) / 2;
    let u = intertwiner(n).expect("4 | n");
    let split = TensorSplit::new(n1, n2).expect("coprime");
    let id1 = ComplexMatrix::identity(n1 as usize);
    let indices: [(i64, i64); 4] = [(0, 0), (0, 1), (-1, 0), (-1, 1)];
    let m = (n / 4) as usize;
    let mut ub = ComplexMatrix::zeros(n as usize, n as usize);
    for (j, &(a, b)) in indices.iter().enumerate() {
        let pab = displacement(&DisplacementIndex::new(a, b, n2)).mul_mat(&parity(n2));
        let sign = if j == 0 { 1.0 } else { -1.0 };
        let block_product = id1.kron(&pab.scale(Complex64::new(sign, 0.0)));
        // Back from the product ordering to the block's lexicographic basis.
        let block = split
            .isometry()
            .adjoint()
            .mul_mat(&block_product)
            .mul_mat(split.isometry());
        for r in 0..m {
            for c in 0..m {
                ub[(j * m + r, j * m + c)] = block[(r, c)];
            }
        }
    }
    // U_b lives in the four-block representation; rotate to the standard one.
    u.mul_mat(&ub).mul_mat(&u.adjoint())
}

/// Verify the four clauses of the order-2 symmetry of an aligned SIC:
/// the unitary squares to the identity up to phase, fixes the fiducial up to
/// phase, permutes the SIC projectors along `F_b`, and matches the explicit
/// parity block form.
pub fn verify_symmetry(
    fid: &FiducialVector,
    d: u64,
    fix_tol: f64,
) -> Result<SymmetryReport, SicAlignError> {
    let n = d * (d - 2);
    if fid.dim() != n {
        return Err(SicAlignError::DimensionMismatch {
            expected: n,
            got: fid.dim(),
        });
    }
    let fb = symmetry_matrix(d);
    let v = symplectic_unitary(&fb);

    // (i) V² = I up to a global phase.
    let v2 = v.mul_mat(&v);
    let involution_residual = ComplexMatrix::identity(n as usize).phase_aligned_distance(&v2);
    if involution_residual > 1e-10 {
        return Err(SicAlignError::SymmetryFailure {
            clause: "involution".into(),
            residual: involution_residual,
        });
    }

    // (ii) Vψ = ψ up to a global phase.
    let vpsi = v.mul_vec(fid.amplitudes());
    let ip = vec_inner(fid.amplitudes(), &vpsi);
    let phase = if ip.norm() > 0.0 {
        ip / ip.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let fiducial_fix_residual = vec_norm(
        &vpsi
            .iter()
            .zip(fid.amplitudes())
            .map(|(w, p)| w - phase * p)
            .collect::<Vec<_>>(),
    );
    if fiducial_fix_residual > fix_tol {
        return Err(SicAlignError::SymmetryFailure {
            clause: "fiducial fix".into(),
            residual: fiducial_fix_residual,
        });
    }

    // (iii) V permutes the SIC projectors along F_b.
    let mut permutation_residual: f64 = 0.0;
    for a in 0..n as i64 {
        for b in 0..n as i64 {
            let w = v.mul_vec(&fid.displaced(a, b));
            let (fa, fbv) = fb.apply(a, b);
            let target = fid.displaced(fa, fbv);
            permutation_residual =
                permutation_residual.max(1.0 - vec_inner(&target, &w).norm_sqr());
        }
    }
    if permutation_residual > fix_tol {
        return Err(SicAlignError::SymmetryFailure {
            clause: "projector permutation".into(),
            residual: permutation_residual,
        });
    }

    // (iv) V matches the parity block form up to a global phase.
    let ub = symmetry_block_form(d);
    let block_form_residual = ub.phase_aligned_distance(&v);
    if block_form_residual > 1e-9 {
        return Err(SicAlignError::SymmetryFailure {
            clause: "block form".into(),
            residual: block_form_residual,
        });
    }

    Ok(SymmetryReport {
        d,
        dim: n,
        involution_residual,
        fiducial_fix_residual,
        projector_permutation_residual: permutation_residual,
        block_form_residual,
        pass: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// An exact SIC fiducial in dimension 2: (cos η, e^{iπ/4} sin η) with
    /// cos 2η = 1/√3 gives overlaps |⟨ψ|D ψ⟩|² = 1/3 for all (a,b) ≠ 0.
    fn fiducial_dim2() -> FiducialVector {
        let eta = 0.5 * (1.0 / 3f64.sqrt()).acos();
        let amps = vec![
            c(eta.cos(), 0.0),
            Complex64::from_polar(eta.sin(), std::f64::consts::FRAC_PI_4),
        ];
        FiducialVector::new(amps, "exact dimension-2 fiducial").unwrap()
    }

    #[test]
    fn fiducial_constructor_normalizes_or_rejects() {
        let v = vec![c(1.0 + 5e-7, 0.0)];
        let f = FiducialVector::new(v, "near unit").unwrap();
        assert!((vec_norm(f.amplitudes()) - 1.0).abs() < 1e-15);
        let bad = FiducialVector::new(vec![c(0.5, 0.0)], "short");
        assert!(matches!(bad, Err(SicAlignError::NotNormalized { .. })));
    }

    #[test]
    fn dim2_fiducial_is_a_sic() {
        let fid = fiducial_dim2();
        let report = verify_sic(&fid, 1e-12);
        assert!(report.pass, "{report:?}");
        assert!(report.max_overlap_deviation < 1e-13);
        assert!(report.resolution_residual < 1e-13);
    }

    #[test]
    fn orbit_entries_and_overlaps() {
        let fid = fiducial_dim2();
        let orbit = sic_orbit(&fid);
        assert_eq!(orbit.len(), 4);
        // (0,0) entry is the fiducial itself.
        assert!(
            vec_norm(
                &orbit[0]
                    .iter()
                    .zip(fid.amplitudes())
                    .map(|(a, b)| a - b)
                    .collect::<Vec<_>>()
            ) < 1e-15
        );
        // Pairwise overlaps |⟨ψ_i|ψ_j⟩|² = 1/3 off the diagonal.
        for i in 0..4 {
            for j in 0..4 {
                if i == j {
                    continue;
                }
                let ov = vec_inner(&orbit[i], &orbit[j]).norm_sqr();
                assert!((ov - 1.0 / 3.0).abs() < 1e-13, "i={i} j={j}");
            }
        }
    }

    #[test]
    fn random_vector_fails_verify_sic() {
        let amps: Vec<Complex64> = (0..4)
            .map(|k| c((k as f64 + 1.0) * 0.1, (k as f64) * 0.2))
            .collect();
        let norm = vec_norm(&amps);
        let fid = FiducialVector::new(amps.iter().map(|z| z / norm).collect(), "random").unwrap();
        let report = verify_sic(&fid, 1e-8);
        assert!(!report.pass);
        assert!(require_sic(&fid, 1e-8).is_err());
    }

    #[test]
    fn overlap_phase_table_basics() {
        let fid = fiducial_dim2();
        let table = overlap_phases(&fid, 1e-10).unwrap();
        assert!((table.phase(0, 0) - c(1.0, 0.0)).norm() < 1e-15);
        // Unit modulus everywhere for a SIC.
        for a in 0..2 {
            for b in 0..2 {
                assert!((table.phase(a, b).norm() - 1.0).abs() < 1e-12);
            }
        }
        // θ_{−a,−b} is conjugate to θ_{a,b} up to translation signs: here
        // (−1,−1) ≡ (1,1) with sign (−1)^{(n+1)(a or b)}; n = 2 gives −θ ± π.
        let p11 = table.phase(1, 1);
        let pm = table.phase(-1, -1);
        assert!((p11.conj().norm() - pm.norm()).abs() < 1e-12);
    }

    #[test]
    fn c1_target_parities() {
        // Even d: −(−1)^{(a+1)(b+1)}.
        assert_eq!(alignment_c1_target(4, 1, 1), -1.0); // (2)(2) even → −1
        assert_eq!(alignment_c1_target(4, 0, 1), -1.0);
        assert_eq!(alignment_c1_target(4, 0, 0), 1.0); // (1)(1) odd → +1
        assert_eq!(alignment_c1_target(6, 2, 0), 1.0);
        // Odd d: always 1.
        assert_eq!(alignment_c1_target(5, 3, 2), 1.0);
    }

    #[test]
    fn alignment_dimension_guard() {
        let fid = fiducial_dim2();
        assert!(matches!(
            check_alignment_c1(&fid, 4, 1e-6),
            Err(SicAlignError::DimensionMismatch {
                expected: 8,
                got: 2
            })
        ));
    }

    #[test]
    fn expected_ranks() {
        assert_eq!(PiProjector::expected_rank(4, PiKind::One), 6);
        assert_eq!(PiProjector::expected_rank(4, PiKind::Two), 3);
        assert_eq!(PiProjector::expected_rank(6, PiKind::One), 15);
        assert_eq!(PiProjector::expected_rank(6, PiKind::Two), 10);
    }

    #[test]
    fn frame_angle_matches_sic_angle() {
        // (m − r)/(r(m − 1)) = 1/(n+1) for both frame shapes.
        for d in [4u64, 6, 8] {
            let n = d * (d - 2);
            let m1 = (d * d) as f64;
            let r1 = (d * (d - 1) / 2) as f64;
            assert!(((m1 - r1) / (r1 * (m1 - 1.0)) - 1.0 / (n as f64 + 1.0)).abs() < 1e-15);
            let m2 = ((d - 2) * (d - 2)) as f64;
            let r2 = ((d - 1) * (d - 2) / 2) as f64;
            assert!(((m2 - r2) / (r2 * (m2 - 1.0)) - 1.0 / (n as f64 + 1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn block_form_equals_symplectic_unitary() {
        // U_b = V_{F_b} up to a global phase; this is fiducial-independent.
        for d in [4u64, 6] {
            let ub = symmetry_block_form(d);
            let v = symplectic_unitary(&symmetry_matrix(d));
            assert!(ub.unitarity_defect() < 1e-12, "d={d}");
            let dist = ub.phase_aligned_distance(&v);
            assert!(dist < 1e-10, "d={d}: {dist:.3e}");
            // Both square to the identity up to phase.
            let v2 = v.mul_mat(&v);
            assert!(
                ComplexMatrix::identity(ub.rows()).phase_aligned_distance(&v2) < 1e-11,
                "d={d}"
            );
        }
    }

    #[test]
    fn block_parity_targets_are_projectors() {
        for n2 in [1u64, 2, 3] {
            for upper in [true, false] {
                for t in block_parity_targets(n2, upper) {
                    let t2 = t.mul_mat(&t);
                    assert!(t2.frobenius_distance(&t) < 1e-13, "n2={n2} upper={upper}");
                }
            }
        }
    }
}
