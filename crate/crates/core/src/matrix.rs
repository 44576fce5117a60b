//! Dense complex matrices and vectors.
//!
//! Everything downstream (displacement operators, symplectic unitaries,
//! projectors) is carried by [`ComplexMatrix`], a row-major dense matrix of
//! `Complex64`. Dimensions stay small (n ≤ 48), so the implementations favor
//! clarity and numerical robustness over asymptotics. Hermitian spectra are
//! computed with a cyclic Jacobi sweep, which is accurate to machine precision
//! at these sizes.

use num_complex::Complex;
use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

pub type Complex64 = Complex<f64>;

pub const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const C_ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Dense square-or-rectangular complex matrix, row major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C_ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C_ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    /// Diagonal matrix from the given entries.
    pub fn diag(entries: &[Complex64]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &z) in entries.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn conj(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |r, c| self[(r, c)].conj())
    }

    pub fn scale(&self, z: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * z).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square());
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_distance(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Max entry modulus of `U†U − I`; zero for an exactly unitary matrix.
    pub fn unitarity_defect(&self) -> f64 {
        assert!(self.is_square());
        let gram = self.adjoint().mul_mat(self);
        gram.sub_mat(&Self::identity(self.rows)).max_abs()
    }

    pub fn add_mat(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub_mat(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn mul_mat(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == C_ZERO {
                    continue;
                }
                for c in 0..other.cols {
                    out[(r, c)] += a * other[(k, c)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len());
        let mut out = vec![C_ZERO; self.rows];
        for r in 0..self.rows {
            let mut acc = C_ZERO;
            for c in 0..self.cols {
                acc += self[(r, c)] * v[c];
            }
            out[r] = acc;
        }
        out
    }

    /// `A*B*A†`.
    pub fn conjugate_by(&self, a: &Self) -> Self {
        a.mul_mat(self).mul_mat(&a.adjoint())
    }

    /// Kronecker product, `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.rows * other.rows, self.cols * other.cols);
        for r1 in 0..self.rows {
            for c1 in 0..self.cols {
                let a = self[(r1, c1)];
                if a == C_ZERO {
                    continue;
                }
                for r2 in 0..other.rows {
                    for c2 in 0..other.cols {
                        out[(r1 * other.rows + r2, c1 * other.cols + c2)] = a * other[(r2, c2)];
                    }
                }
            }
        }
        out
    }

    /// Matrix power by repeated multiplication (small exponents only).
    pub fn pow(&self, mut e: u32) -> Self {
        assert!(self.is_square());
        let mut acc = Self::identity(self.rows);
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_mat(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_mat(&base);
            }
        }
        acc
    }

    /// Outer product |v⟩⟨w|.
    pub fn outer(v: &[Complex64], w: &[Complex64]) -> Self {
        Self::from_fn(v.len(), w.len(), |r, c| v[r] * w[c].conj())
    }

    /// Partial trace over the first factor of `C^{n1} ⊗ C^{n2}`; result is n2×n2.
    pub fn partial_trace_first(&self, n1: usize, n2: usize) -> Self {
        assert_eq!(self.rows, n1 * n2);
        assert!(self.is_square());
        Self::from_fn(n2, n2, |l, lp| {
            (0..n1).map(|k| self[(k * n2 + l, k * n2 + lp)]).sum()
        })
    }

    /// Partial trace over the second factor of `C^{n1} ⊗ C^{n2}`; result is n1×n1.
    pub fn partial_trace_second(&self, n1: usize, n2: usize) -> Self {
        assert_eq!(self.rows, n1 * n2);
        assert!(self.is_square());
        Self::from_fn(n1, n1, |k, kp| {
            (0..n2).map(|l| self[(k * n2 + l, kp * n2 + l)]).sum()
        })
    }

    /// Extract the square sub-block with rows `[r0, r0+size)` and columns `[c0, c0+size)`.
    pub fn block(&self, r0: usize, c0: usize, size: usize) -> Self {
        Self::from_fn(size, size, |r, c| self[(r0 + r, c0 + c)])
    }

    /// Distance after aligning `other` to `self` by a global phase.
    ///
    /// The phase reference is the entry where the joint magnitude
    /// `|self| * |other|` is largest, which makes the alignment deterministic.
    pub fn phase_aligned_distance(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut best = 0.0;
        let mut phase = C_ONE;
        for (a, b) in self.data.iter().zip(&other.data) {
            let w = a.norm() * b.norm();
            if w > best {
                best = w;
                phase = a * b.conj();
            }
        }
        if best > 0.0 {
            phase /= phase.norm();
        }
        self.frobenius_distance(&other.scale(phase))
    }

    /// Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.
    ///
    /// Returns eigenvalues in descending order together with the matching
    /// orthonormal eigenvectors (columns of the returned matrix). The caller
    /// is responsible for `self` being Hermitian; the strictly lower triangle
    /// is ignored apart from symmetrization on entry.
    pub fn hermitian_eigen(&self) -> (Vec<f64>, ComplexMatrix) {
        assert!(self.is_square());
        let n = self.rows;
        // Symmetrize to wash out representation roundoff.
        let mut a = ComplexMatrix::from_fn(n, n, |r, c| (self[(r, c)] + self[(c, r)].conj()) * 0.5);
        let mut v = ComplexMatrix::identity(n);
        let scale = a.frobenius_norm().max(1.0);
        let tol = 1e-15 * scale;

        for _sweep in 0..60 {
            let mut off = 0.0f64;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += a[(p, q)].norm_sqr();
                }
            }
            if off.sqrt() <= tol {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    if apq.norm() <= tol * 1e-2 {
                        continue;
                    }
                    // Factor out the phase so the 2x2 problem is real symmetric.
                    let phi = apq / apq.norm();
                    let app = a[(p, p)].re;
                    let aqq = a[(q, q)].re;
                    let theta = 0.5 * (2.0 * apq.norm()).atan2(app - aqq);
                    let (s, c) = theta.sin_cos();
                    // Column rotation J: col_p' = c*phi*col_p + s*col_q ; col_q' = -s*phi*col_p + c*col_q
                    let cp = phi * c;
                    let sp = phi * s;
                    for r in 0..n {
                        let arp = a[(r, p)];
                        let arq = a[(r, q)];
                        a[(r, p)] = arp * cp + arq * s;
                        a[(r, q)] = arp * (-sp) + arq * c;
                        let vrp = v[(r, p)];
                        let vrq = v[(r, q)];
                        v[(r, p)] = vrp * cp + vrq * s;
                        v[(r, q)] = vrp * (-sp) + vrq * c;
                    }
                    let cpc = cp.conj();
                    let spc = sp.conj();
                    for col in 0..n {
                        let apc = a[(p, col)];
                        let aqc = a[(q, col)];
                        a[(p, col)] = apc * cpc + aqc * s;
                        a[(q, col)] = apc * (-spc) + aqc * c;
                    }
                }
            }
        }

        let mut pairs: Vec<(f64, usize)> = (0..n).map(|i| (a[(i, i)].re, i)).collect();
        pairs.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());
        let eigenvalues: Vec<f64> = pairs.iter().map(|&(l, _)| l).collect();
        let vectors = ComplexMatrix::from_fn(n, n, |r, c| v[(r, pairs[c].1)]);
        (eigenvalues, vectors)
    }

    /// Number of eigenvalues strictly above `threshold` (Hermitian input).
    pub fn eigencount_above(&self, threshold: f64) -> usize {
        self.hermitian_eigen()
            .0
            .iter()
            .filter(|&&l| l > threshold)
            .count()
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.add_mat(rhs)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.sub_mat(rhs)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.mul_mat(rhs)
    }
}

// Vector helpers, shared by the SIC modules.

pub fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// ⟨a|b⟩, conjugate-linear in the first argument.
pub fn vec_inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn vec_scale(v: &[Complex64], z: Complex64) -> Vec<Complex64> {
    v.iter().map(|&x| x * z).collect()
}

pub fn vec_sub(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Distance between unit vectors after optimal global-phase alignment:
/// `min_φ ‖a − e^{iφ} b‖ = sqrt(‖a‖² + ‖b‖² − 2|⟨a|b⟩|)`.
pub fn vec_phase_aligned_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    let na = vec_norm(a);
    let nb = vec_norm(b);
    let ip = vec_inner(a, b).norm();
    (na * na + nb * nb - 2.0 * ip).max(0.0).sqrt()
}
