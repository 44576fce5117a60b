//! Numerical fiducial search and fiducial file I/O.
//!
//! The search minimizes the frame potential `Σ_{a,b} |⟨ψ|D_{a,b}|ψ⟩|⁴` over
//! the unit sphere; a SIC fiducial attains the floor `2n/(n+1)`. Optimization
//! runs L-BFGS with a strong-Wolfe line search on the ambient real
//! parameters of a scale-invariant reformulation (`ψ = φ/‖φ‖`), so no
//! manifold machinery is needed. An optional penalty steers the search
//! towards fiducials satisfying the first alignment condition, with the
//! weight multiplied by 10 in each continuation stage. The iterates can be
//! restricted to an eigenspace of the order-3 Zauner unitary or, for aligned
//! searches, to the fixed space of the order-2 symmetry unitary; both are
//! heuristics that shrink the search space without excluding the targets.

use crate::clifford::{symplectic_unitary, SymplecticMatrix};
use crate::matrix::{vec_norm, Complex64, ComplexMatrix, C_ZERO};
use crate::modring::reduce;
use crate::sicalign::{alignment_c1_target, FiducialVector, SicAlignError};
use crate::weylheis::DisplacementTable;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FidFileError {
    #[error("io error: {0}")]
    Io(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("dimension mismatch: header says {expected}, found {got} amplitudes")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("vector norm {norm} deviates from 1 by more than 1e-6")]
    NotNormalized { norm: f64 },
}

/// Search configuration. `align_d = Some(d)` adds the alignment penalty for
/// the pair (d, d(d−2)) and enables the symmetry-subspace restriction.
#[derive(Debug, Clone, Serialize)]
pub struct SearchConfig {
    pub dim: u64,
    pub seed: u64,
    /// L-BFGS iteration budget per continuation stage.
    pub max_iterations: usize,
    pub restarts: usize,
    /// Starting weight of the alignment penalty (ignored without `align_d`).
    pub penalty_weight: f64,
    /// Restrict iterates to the largest eigenspace of the Zauner unitary.
    pub use_zauner_subspace: bool,
    /// `converged` requires the frame potential within this of `2n/(n+1)`.
    pub convergence_threshold: f64,
    /// Target dimension d of the alignment penalty; requires `dim = d(d−2)`.
    pub align_d: Option<u64>,
    /// Restrict aligned searches to the fixed space of the symmetry unitary.
    pub use_symmetry_subspace: bool,
    /// `converged` additionally requires the penalty below this (aligned searches).
    pub alignment_threshold: f64,
}

impl SearchConfig {
    pub fn new(dim: u64) -> Self {
        Self {
            dim,
            seed: 0,
            max_iterations: 3000,
            restarts: 12,
            penalty_weight: 1.0,
            use_zauner_subspace: false,
            convergence_threshold: 1e-12,
            align_d: None,
            use_symmetry_subspace: true,
            alignment_threshold: 1e-10,
        }
    }

    pub fn with_alignment(dim: u64, d: u64) -> Self {
        assert_eq!(dim, d * (d - 2), "alignment pairs d with dimension d(d−2)");
        Self {
            align_d: Some(d),
            ..Self::new(dim)
        }
    }
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub fiducial: FiducialVector,
    pub frame_potential: f64,
    /// Final alignment penalty value, present for aligned searches.
    pub alignment_residual: Option<f64>,
    pub iterations_used: usize,
    pub converged: bool,
}

/// The frame-potential floor `2n/(n+1)`, attained exactly by SIC fiducials.
pub fn frame_potential_floor(n: u64) -> f64 {
    2.0 * n as f64 / (n as f64 + 1.0)
}

/// `Σ_{(a,b) ∈ [0,n)²} |⟨ψ|D_{a,b}|ψ⟩|⁴`.
pub fn frame_potential(fid: &FiducialVector) -> f64 {
    let n = fid.dim();
    let table = DisplacementTable::new(n);
    let mut acc = 0.0;
    for a in 0..n as i64 {
        for b in 0..n as i64 {
            acc += table.overlap(a, b, fid.amplitudes()).norm_sqr().powi(2);
        }
    }
    acc
}

/// Indices `(a, b) ∈ [0, d−2)² \ {(0,0)}` and the target phases of the first
/// alignment condition.
fn penalty_terms(d: u64) -> Vec<(i64, i64, f64)> {
    let mut terms = Vec::new();
    for a in 0..(d - 2) as i64 {
        for b in 0..(d - 2) as i64 {
            if a == 0 && b == 0 {
                continue;
            }
            terms.push((a, b, alignment_c1_target(d, a, b)));
        }
    }
    terms
}

/// `Σ |√(n+1)·⟨ψ|D_{da,db}|ψ⟩ − target|²` over the indices of the first
/// alignment condition; zero exactly when the condition holds.
pub fn alignment_penalty(fid: &FiducialVector, d: u64) -> f64 {
    let n = fid.dim();
    assert_eq!(n, d * (d - 2), "penalty requires dim = d(d−2)");
    let table = DisplacementTable::new(n);
    let scale = ((n + 1) as f64).sqrt();
    penalty_terms(d)
        .iter()
        .map(|&(a, b, target)| {
            let q = table.overlap(d as i64 * a, d as i64 * b, fid.amplitudes()) * scale
                - Complex64::new(target, 0.0);
            q.norm_sqr()
        })
        .sum()
}

/// Frame potential plus weighted penalty of the normalized vector, with the
/// gradient with respect to the ambient real coordinates.
struct Objective {
    n: u64,
    table: DisplacementTable,
    /// Isometric basis of the search subspace (n×k); identity when absent.
    basis: Option<ComplexMatrix>,
    /// (a, b, target) triples of the penalty, at indices (d·a, d·b).
    penalty: Vec<(i64, i64, f64)>,
    penalty_scale_d: u64,
    weight: f64,
    // scratch
    phi: Vec<Complex64>,
    psi: Vec<Complex64>,
    dpsi: Vec<Complex64>,
    adjpsi: Vec<Complex64>,
    gpsi: Vec<Complex64>,
}

impl Objective {
    fn new(n: u64, basis: Option<ComplexMatrix>, align_d: Option<u64>) -> Self {
        let n_us = n as usize;
        let penalty = align_d.map(penalty_terms).unwrap_or_default();
        Self {
            n,
            table: DisplacementTable::new(n),
            basis,
            penalty,
            penalty_scale_d: align_d.unwrap_or(0),
            weight: 0.0,
            phi: vec![C_ZERO; n_us],
            psi: vec![C_ZERO; n_us],
            dpsi: vec![C_ZERO; n_us],
            adjpsi: vec![C_ZERO; n_us],
            gpsi: vec![C_ZERO; n_us],
        }
    }

    /// Complex dimension of the parameter space.
    fn param_dim(&self) -> usize {
        self.basis
            .as_ref()
            .map(|b| b.cols())
            .unwrap_or(self.n as usize)
    }

    fn value_and_gradient(&mut self, x: &[f64], grad: &mut [f64]) -> f64 {
        let k = self.param_dim();
        debug_assert_eq!(x.len(), 2 * k);
        let n_us = self.n as usize;

        // y ∈ C^k from interleaved reals; φ = B·y; ψ = φ/‖y‖.
        let y: Vec<Complex64> = (0..k)
            .map(|j| Complex64::new(x[2 * j], x[2 * j + 1]))
            .collect();
        let r = vec_norm(&y).max(1e-300);
        match &self.basis {
            Some(b) => {
                for i in 0..n_us {
                    let mut acc = C_ZERO;
                    for j in 0..k {
                        acc += b[(i, j)] * y[j];
                    }
                    self.phi[i] = acc;
                }
            }
            None => self.phi.copy_from_slice(&y),
        }
        for i in 0..n_us {
            self.psi[i] = self.phi[i] / r;
        }

        // Value and Wirtinger gradient g = ∂h/∂ψ* at ψ. The frame-potential
        // term is evaluated in its zero-floor form
        // Σ (|c_{ab}|² − t_{ab})² with t = 1/(n+1) off the origin (and 1 at
        // it), which equals Σ|c|⁴ − 2n/(n+1) exactly on unit vectors because
        // Σ|c|² = n; unlike the raw quartic it keeps full relative precision
        // near the minimum, so the line search does not stall on roundoff.
        let mut value = 0.0;
        let angle = 1.0 / (self.n as f64 + 1.0);
        self.gpsi.iter_mut().for_each(|z| *z = C_ZERO);
        for a in 0..self.n as i64 {
            for b in 0..self.n as i64 {
                let c = self.table.overlap(a, b, &self.psi);
                let t = if a == 0 && b == 0 { 1.0 } else { angle };
                let dev = c.norm_sqr() - t;
                value += dev * dev;
                let w1 = 2.0 * dev * c.conj();
                self.table.apply(a, b, &self.psi, &mut self.dpsi);
                self.table.apply_adjoint(a, b, &self.psi, &mut self.adjpsi);
                let w2 = 2.0 * dev * c;
                for i in 0..n_us {
                    self.gpsi[i] += w1 * self.dpsi[i] + w2 * self.adjpsi[i];
                }
            }
        }
        if self.weight > 0.0 && !self.penalty.is_empty() {
            let scale = ((self.n + 1) as f64).sqrt();
            let d = self.penalty_scale_d as i64;
            for &(a, b, target) in &self.penalty {
                let c = self.table.overlap(d * a, d * b, &self.psi);
                let q = c * scale - Complex64::new(target, 0.0);
                value += self.weight * q.norm_sqr();
                self.table.apply(d * a, d * b, &self.psi, &mut self.dpsi);
                self.table
                    .apply_adjoint(d * a, d * b, &self.psi, &mut self.adjpsi);
                let w1 = self.weight * scale * q.conj();
                let w2 = self.weight * scale * q;
                for i in 0..n_us {
                    self.gpsi[i] += w1 * self.dpsi[i] + w2 * self.adjpsi[i];
                }
            }
        }

        // Chain rule through ψ = B·y/‖y‖:
        // ∂h/∂y* = (1/r)·(B†g − Re⟨ψ, g⟩·y/r).
        let radial: f64 = self
            .psi
            .iter()
            .zip(&self.gpsi)
            .map(|(p, g)| (p.conj() * g).re)
            .sum();
        for j in 0..k {
            let bg = match &self.basis {
                Some(b) => {
                    let mut acc = C_ZERO;
                    for i in 0..n_us {
                        acc += b[(i, j)].conj() * self.gpsi[i];
                    }
                    acc
                }
                None => self.gpsi[j],
            };
            let gy = (bg - y[j] * (radial / r)) / r;
            grad[2 * j] = 2.0 * gy.re;
            grad[2 * j + 1] = 2.0 * gy.im;
        }
        value
    }

    /// The normalized vector for the current parameters.
    fn normalized_state(&self, x: &[f64]) -> Vec<Complex64> {
        let k = self.param_dim();
        let y: Vec<Complex64> = (0..k)
            .map(|j| Complex64::new(x[2 * j], x[2 * j + 1]))
            .collect();
        let r = vec_norm(&y).max(1e-300);
        match &self.basis {
            Some(b) => {
                let mut phi = vec![C_ZERO; self.n as usize];
                for (i, slot) in phi.iter_mut().enumerate() {
                    let mut acc = C_ZERO;
                    for j in 0..k {
                        acc += b[(i, j)] * y[j];
                    }
                    *slot = acc / r;
                }
                phi
            }
            None => y.iter().map(|z| z / r).collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// L-BFGS with a strong-Wolfe line search.

const WOLFE_C1: f64 = 1e-4;
const WOLFE_C2: f64 = 0.9;
const LBFGS_MEMORY: usize = 8;

struct LbfgsOutcome {
    x: Vec<f64>,
    value: f64,
    iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
}

fn lbfgs<F: FnMut(&[f64], &mut [f64]) -> f64>(
    mut eval: F,
    x0: Vec<f64>,
    max_iter: usize,
    gtol: f64,
    ftarget: f64,
) -> LbfgsOutcome {
    let dim = x0.len();
    let mut x = x0;
    let mut g = vec![0.0; dim];
    let mut f = eval(&x, &mut g);
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut rho_hist: Vec<f64> = Vec::new();
    let mut iterations = 0;

    for _ in 0..max_iter {
        if inf_norm(&g) <= gtol || f <= ftarget {
            break;
        }
        iterations += 1;

        // Two-loop recursion for d = −H·g.
        let mut q = g.clone();
        let mut alphas = vec![0.0; s_hist.len()];
        for i in (0..s_hist.len()).rev() {
            let a = rho_hist[i] * dot(&s_hist[i], &q);
            alphas[i] = a;
            for (qj, yj) in q.iter_mut().zip(&y_hist[i]) {
                *qj -= a * yj;
            }
        }
        if let (Some(s), Some(y)) = (s_hist.last(), y_hist.last()) {
            let gamma = dot(s, y) / dot(y, y).max(1e-300);
            q.iter_mut().for_each(|v| *v *= gamma);
        }
        for i in 0..s_hist.len() {
            let b = rho_hist[i] * dot(&y_hist[i], &q);
            for (qj, sj) in q.iter_mut().zip(&s_hist[i]) {
                *qj += (alphas[i] - b) * sj;
            }
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut dg = dot(&dir, &g);
        if dg >= 0.0 {
            // Not a descent direction; drop the memory and fall back to −g.
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            dir = g.iter().map(|v| -v).collect();
            dg = dot(&dir, &g);
            if dg >= 0.0 {
                break;
            }
        }

        let alpha0 = if s_hist.is_empty() {
            (1.0 / inf_norm(&g).max(1e-12)).min(1.0)
        } else {
            1.0
        };
        match wolfe_line_search(&mut eval, &x, f, &g, &dir, dg, alpha0) {
            Some((xn, fn_, gn)) => {
                let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
                let yv: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
                let sy = dot(&s, &yv);
                if sy > 1e-12 * vec_norm_r(&s) * vec_norm_r(&yv) {
                    if s_hist.len() == LBFGS_MEMORY {
                        s_hist.remove(0);
                        y_hist.remove(0);
                        rho_hist.remove(0);
                    }
                    rho_hist.push(1.0 / sy);
                    s_hist.push(s);
                    y_hist.push(yv);
                }
                x = xn;
                f = fn_;
                g = gn;
            }
            None => {
                if s_hist.is_empty() {
                    break;
                }
                // Retry the step from a clean quasi-Newton state.
                s_hist.clear();
                y_hist.clear();
                rho_hist.clear();
            }
        }
    }
    LbfgsOutcome {
        x,
        value: f,
        iterations,
    }
}

fn vec_norm_r(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

type ProbedPoint = (Vec<f64>, f64, Vec<f64>);

/// Strong-Wolfe line search (bracket + zoom).
fn wolfe_line_search<F: FnMut(&[f64], &mut [f64]) -> f64>(
    eval: &mut F,
    x0: &[f64],
    f0: f64,
    _g0: &[f64],
    dir: &[f64],
    dphi0: f64,
    alpha0: f64,
) -> Option<ProbedPoint> {
    let dim = x0.len();
    let probe = |eval: &mut F, alpha: f64, g: &mut Vec<f64>| -> (Vec<f64>, f64, f64) {
        let xt: Vec<f64> = x0.iter().zip(dir).map(|(x, d)| x + alpha * d).collect();
        let f = eval(&xt, g);
        let dphi = dot(g, dir);
        (xt, f, dphi)
    };

    let mut alpha_prev = 0.0;
    let mut f_prev = f0;
    let mut dphi_prev = dphi0;
    let mut alpha = alpha0.max(1e-16);
    let mut g = vec![0.0; dim];

    for i in 0..30 {
        let (xt, ft, dphit) = probe(eval, alpha, &mut g);
        if !ft.is_finite() {
            alpha *= 0.5;
            continue;
        }
        if ft > f0 + WOLFE_C1 * alpha * dphi0 || (i > 0 && ft >= f_prev) {
            return zoom(
                eval, x0, f0, dir, dphi0, alpha_prev, f_prev, dphi_prev, alpha, ft, dphit,
            );
        }
        if dphit.abs() <= -WOLFE_C2 * dphi0 {
            return Some((xt, ft, g));
        }
        if dphit >= 0.0 {
            return zoom(
                eval, x0, f0, dir, dphi0, alpha, ft, dphit, alpha_prev, f_prev, dphi_prev,
            );
        }
        alpha_prev = alpha;
        f_prev = ft;
        dphi_prev = dphit;
        alpha = (alpha * 2.0).min(1e12);
    }
    None
}

#[allow(clippy::too_many_arguments)]
fn zoom<F: FnMut(&[f64], &mut [f64]) -> f64>(
    eval: &mut F,
    x0: &[f64],
    f0: f64,
    dir: &[f64],
    dphi0: f64,
    mut alpha_lo: f64,
    mut f_lo: f64,
    mut dphi_lo: f64,
    mut alpha_hi: f64,
    mut f_hi: f64,
    mut _dphi_hi: f64,
) -> Option<ProbedPoint> {
    let dim = x0.len();
    let mut g = vec![0.0; dim];
    for _ in 0..40 {
        // Quadratic interpolation with a bisection safeguard.
        let span = alpha_hi - alpha_lo;
        let denom = 2.0 * (f_hi - f_lo - dphi_lo * span);
        let mut alpha = if denom.abs() > 1e-300 {
            alpha_lo - dphi_lo * span * span / denom
        } else {
            alpha_lo + 0.5 * span
        };
        let lo = alpha_lo.min(alpha_hi);
        let hi = alpha_lo.max(alpha_hi);
        if !(alpha.is_finite()) || alpha <= lo + 0.1 * (hi - lo) || alpha >= hi - 0.1 * (hi - lo) {
            alpha = alpha_lo + 0.5 * span;
        }
        let xt: Vec<f64> = x0.iter().zip(dir).map(|(x, d)| x + alpha * d).collect();
        let ft = eval(&xt, &mut g);
        let dphit = dot(&g, dir);
        if ft > f0 + WOLFE_C1 * alpha * dphi0 || ft >= f_lo {
            alpha_hi = alpha;
            f_hi = ft;
            _dphi_hi = dphit;
        } else {
            if dphit.abs() <= -WOLFE_C2 * dphi0 {
                return Some((xt, ft, g));
            }
            if dphit * (alpha_hi - alpha_lo) >= 0.0 {
                alpha_hi = alpha_lo;
                f_hi = f_lo;
                _dphi_hi = dphi_lo;
            }
            alpha_lo = alpha;
            f_lo = ft;
            dphi_lo = dphit;
        }
        if (alpha_hi - alpha_lo).abs() < 1e-16 * alpha_lo.abs().max(1.0) {
            // Interval collapsed; accept the best point if it at least
            // decreases the objective.
            if f_lo < f0 {
                let xl: Vec<f64> = x0.iter().zip(dir).map(|(x, d)| x + alpha_lo * d).collect();
                let fl = eval(&xl, &mut g);
                return Some((xl, fl, g));
            }
            return None;
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Subspace restrictions.

/// Orthonormal basis (columns) of the eigenspace of a Hermitian projector.
fn projector_basis(p: &ComplexMatrix) -> ComplexMatrix {
    let (vals, vecs) = p.hermitian_eigen();
    let k = vals.iter().filter(|&&l| l > 0.5).count();
    ComplexMatrix::from_fn(p.rows(), k, |r, c| vecs[(r, c)])
}

/// The symmetry unitary of aligned SICs in its explicit involutive form,
/// `Σ_u (−1)^u |u⟩⟨d·n₂ − (d−1)·u|` on `C^{d(d−2)}`.
pub fn symmetry_involution(d: u64) -> ComplexMatrix {
    assert!(d >= 4 && d.is_multiple_of(2));
    let n = d * (d - 2);
    let n2 = (d - 2) / 2;
    let mut v = ComplexMatrix::zeros(n as usize, n as usize);
    for u in 0..n as i64 {
        let col = reduce(d as i64 * n2 as i64 - (d as i64 - 1) * u, n);
        let sign = if u % 2 == 0 { 1.0 } else { -1.0 };
        v[(u as usize, col as usize)] = Complex64::new(sign, 0.0);
    }
    v
}

/// Basis of the eigenspace of the symmetry involution that contains aligned
/// fiducials: eigenvalue `(−1)^{n₂}`.
fn symmetry_fixed_basis(d: u64) -> ComplexMatrix {
    let n = d * (d - 2);
    let n2 = (d - 2) / 2;
    let v = symmetry_involution(d);
    debug_assert!(
        v.mul_mat(&v)
            .frobenius_distance(&ComplexMatrix::identity(n as usize))
            < 1e-12
    );
    let sign = if n2.is_multiple_of(2) { 1.0 } else { -1.0 };
    let p = ComplexMatrix::identity(n as usize)
        .add_mat(&v.scale(Complex64::new(sign, 0.0)))
        .scale(Complex64::new(0.5, 0.0));
    projector_basis(&p)
}

/// Basis of the largest eigenspace of the order-3 Zauner unitary
/// `V_Z`, `Z = [[0, −1], [1, −1]]`.
fn zauner_subspace_basis(n: u64) -> ComplexMatrix {
    let z = SymplecticMatrix::new(0, -1, 1, -1, n).expect("Zauner matrix is symplectic");
    let v = symplectic_unitary(&z);
    // V³ is a scalar; rescale to an exact order-3 unitary.
    let v3 = v.mul_mat(&v).mul_mat(&v);
    let c = v3.trace() / n as f64;
    let lambda = Complex64::from_polar(c.norm().powf(1.0 / 3.0), c.arg() / 3.0);
    let w = v.scale(1.0 / lambda);
    let w2 = w.mul_mat(&w);
    let id = ComplexMatrix::identity(n as usize);
    let mu = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
    let mut best: Option<(usize, ComplexMatrix)> = None;
    for k in 0..3u32 {
        let mk = mu.powu(k).conj();
        let p = id
            .add_mat(&w.scale(mk))
            .add_mat(&w2.scale(mk * mk))
            .scale(Complex64::new(1.0 / 3.0, 0.0));
        let rank = p.trace().re.round() as usize;
        if best.as_ref().is_none_or(|(r, _)| rank > *r) {
            best = Some((rank, p));
        }
    }
    projector_basis(&best.expect("three eigenprojectors").1)
}

// ---------------------------------------------------------------------------
// The search driver.

/// Minimize the frame potential (plus alignment penalty when configured)
/// with random restarts; restarts run in parallel on independent seeded
/// generators and the winner is the lowest final objective, ties broken by
/// restart order.
pub fn find_fiducial(cfg: &SearchConfig) -> SearchResult {
    let n = cfg.dim;
    let floor = frame_potential_floor(n);
    let basis = match cfg.align_d {
        Some(d) if cfg.use_symmetry_subspace => Some(symmetry_fixed_basis(d)),
        _ if cfg.use_zauner_subspace => Some(zauner_subspace_basis(n)),
        _ => None,
    };
    // Aligned searches warm up without the penalty (settling into a SIC
    // basin inside the subspace first), then continue with the weight
    // multiplied by 10 per stage.
    let stages: Vec<f64> = match cfg.align_d {
        Some(_) => std::iter::once(0.0)
            .chain((0..4).map(|s| cfg.penalty_weight * 10f64.powi(s)))
            .collect(),
        None => vec![0.0],
    };

    let candidates: Vec<(usize, Vec<Complex64>, f64, f64, usize)> = (0..cfg.restarts)
        .into_par_iter()
        .map(|restart| {
            let mut obj = Objective::new(n, basis.clone(), cfg.align_d);
            let k = obj.param_dim();
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(restart as u64));
            let mut x: Vec<f64> = (0..2 * k).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut iterations = 0;
            for &w in &stages {
                obj.weight = w;
                // Optimize to gradient tolerance: the overlap deviations
                // scale as the square root of the objective gap, so stopping
                // on an objective target would leave them far too large.
                let run = lbfgs(
                    |p, g| obj.value_and_gradient(p, g),
                    x,
                    cfg.max_iterations,
                    1e-12,
                    -f64::INFINITY,
                );
                x = run.x;
                iterations += run.iterations;
                if w > 0.0 {
                    // Later continuation stages are pointless once both
                    // terms sit at their numerical floors.
                    let fid = state_fiducial(obj.normalized_state(&x), n);
                    let pen = alignment_penalty(&fid, cfg.align_d.unwrap());
                    if run.value - w * pen < 1e-24 && pen < 1e-22 {
                        break;
                    }
                }
            }
            let psi = obj.normalized_state(&x);
            let fid = state_fiducial(psi.clone(), n);
            let fp = frame_potential(&fid);
            let pen = cfg
                .align_d
                .map(|d| alignment_penalty(&fid, d))
                .unwrap_or(0.0);
            (restart, psi, fp, pen, iterations)
        })
        .collect();

    let key = |fp: f64, pen: f64| (fp - floor).max(0.0) + pen;
    let best = candidates
        .iter()
        .min_by(|a, b| {
            key(a.2, a.3)
                .partial_cmp(&key(b.2, b.3))
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.0.cmp(&b.0))
        })
        .expect("at least one restart");

    let (_, psi, fp, pen, iterations) = best;
    let label = match cfg.align_d {
        Some(d) => format!("search n={n} seed={} aligned d={d}", cfg.seed),
        None => format!("search n={n} seed={}", cfg.seed),
    };
    let fiducial = FiducialVector::new(psi.clone(), label).expect("search output is normalized");
    let converged = (fp - floor) < cfg.convergence_threshold
        && cfg.align_d.is_none_or(|_| *pen < cfg.alignment_threshold);
    SearchResult {
        fiducial,
        frame_potential: *fp,
        alignment_residual: cfg.align_d.map(|_| *pen),
        iterations_used: *iterations,
        converged,
    }
}

fn state_fiducial(mut psi: Vec<Complex64>, n: u64) -> FiducialVector {
    let norm = vec_norm(&psi);
    psi.iter_mut().for_each(|z| *z /= norm);
    FiducialVector::new(psi, format!("candidate n={n}")).expect("normalized by construction")
}

// ---------------------------------------------------------------------------
// Fiducial files: line 1 is the dimension, then one "re im" pair per line
// with 17 significant digits.

pub fn save_fiducial(fid: &FiducialVector, path: impl AsRef<Path>) -> Result<(), FidFileError> {
    let mut out = format!("{}\n", fid.dim());
    for z in fid.amplitudes() {
        out.push_str(&format!("{:.16e} {:.16e}\n", z.re, z.im));
    }
    std::fs::write(path, out).map_err(|e| FidFileError::Io(e.to_string()))
}

/// Outcome of reading a fiducial file. `renormalized` flags inputs whose
/// norm deviated from 1 (within the accepted 1e-6).
#[derive(Debug, Clone)]
pub struct LoadedFiducial {
    pub fiducial: FiducialVector,
    pub renormalized: bool,
    pub norm_deviation: f64,
}

pub fn load_fiducial(path: impl AsRef<Path>) -> Result<LoadedFiducial, FidFileError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| FidFileError::Io(e.to_string()))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(FidFileError::Parse {
        line: 1,
        message: "empty file".into(),
    })?;
    let n: usize = header.trim().parse().map_err(|_| FidFileError::Parse {
        line: 1,
        message: format!("bad dimension {header:?}"),
    })?;
    let mut amps = Vec::with_capacity(n);
    for (idx, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let re: f64 = parts
            .next()
            .ok_or(FidFileError::Parse {
                line: idx + 1,
                message: "missing real part".into(),
            })?
            .parse()
            .map_err(|_| FidFileError::Parse {
                line: idx + 1,
                message: "bad real part".into(),
            })?;
        let im: f64 = parts
            .next()
            .ok_or(FidFileError::Parse {
                line: idx + 1,
                message: "missing imaginary part".into(),
            })?
            .parse()
            .map_err(|_| FidFileError::Parse {
                line: idx + 1,
                message: "bad imaginary part".into(),
            })?;
        if parts.next().is_some() {
            return Err(FidFileError::Parse {
                line: idx + 1,
                message: "trailing tokens".into(),
            });
        }
        amps.push(Complex64::new(re, im));
    }
    if amps.len() != n {
        return Err(FidFileError::DimensionMismatch {
            expected: n,
            got: amps.len(),
        });
    }
    let norm = vec_norm(&amps);
    let deviation = (norm - 1.0).abs();
    let fiducial = FiducialVector::new(amps, path.display().to_string()).map_err(|e| match e {
        SicAlignError::NotNormalized { norm } => FidFileError::NotNormalized { norm },
        other => FidFileError::Parse {
            line: 0,
            message: other.to_string(),
        },
    })?;
    Ok(LoadedFiducial {
        fiducial,
        renormalized: deviation > 1e-12,
        norm_deviation: deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sicalign::verify_sic;

    fn fiducial_dim2() -> FiducialVector {
        let eta = 0.5 * (1.0 / 3f64.sqrt()).acos();
        FiducialVector::new(
            vec![
                Complex64::new(eta.cos(), 0.0),
                Complex64::from_polar(eta.sin(), std::f64::consts::FRAC_PI_4),
            ],
            "exact dimension-2 fiducial",
        )
        .unwrap()
    }

    #[test]
    fn frame_potential_of_known_states() {
        // SIC fiducial in dimension 2 attains the floor 4/3.
        let fid = fiducial_dim2();
        assert!((frame_potential(&fid) - frame_potential_floor(2)).abs() < 1e-13);
        // Basis vector |0⟩ in n = 2: |⟨0|D_{a,b}|0⟩|⁴ is 1 at (0,0) and (0,1).
        let basis = FiducialVector::new(vec![Complex64::new(1.0, 0.0), C_ZERO], "e0").unwrap();
        assert!((frame_potential(&basis) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn frame_potential_respects_welch_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 2..=8u64 {
            let floor = frame_potential_floor(n);
            for _ in 0..100 {
                let amps: Vec<Complex64> = (0..n)
                    .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect();
                let norm = vec_norm(&amps);
                let fid =
                    FiducialVector::new(amps.iter().map(|z| z / norm).collect(), "random").unwrap();
                assert!(frame_potential(&fid) >= floor - 1e-10, "n={n}");
            }
        }
    }

    #[test]
    fn frame_potential_is_orbit_invariant() {
        let fid = fiducial_dim2();
        let value = frame_potential(&fid);
        for a in 0..2i64 {
            for b in 0..2i64 {
                let moved = FiducialVector::new(fid.displaced(a, b), "displaced").unwrap();
                assert!((frame_potential(&moved) - value).abs() < 1e-12);
            }
        }
        // Global phase invariance.
        let phased = FiducialVector::new(
            fid.amplitudes()
                .iter()
                .map(|z| z * Complex64::from_polar(1.0, 0.9))
                .collect(),
            "phased",
        )
        .unwrap();
        assert!((frame_potential(&phased) - value).abs() < 1e-12);
    }

    #[test]
    fn penalty_vanishes_iff_target_phases() {
        // Construct a table of targets and check the contribution arithmetic:
        // one flipped sign contributes |−1 − 1|² = 4.
        let d = 4u64;
        let terms = penalty_terms(d);
        assert_eq!(terms.len(), 3);
        for &(a, b, t) in &terms {
            assert_eq!(t, alignment_c1_target(d, a, b));
            assert_eq!(t, -1.0, "d=4 targets are all −1 at ({a},{b})");
        }
        let flipped = Complex64::new(1.0, 0.0);
        let target = Complex64::new(-1.0, 0.0);
        assert!(((flipped - target).norm_sqr() - 4.0).abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for n in 2..=8u64 {
            let mut obj = Objective::new(n, None, None);
            let k = obj.param_dim();
            let mut rng = ChaCha8Rng::seed_from_u64(n * 31 + 5);
            for _trial in 0..20 {
                let x: Vec<f64> = (0..2 * k).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let mut g = vec![0.0; 2 * k];
                let f0 = obj.value_and_gradient(&x, &mut g);
                assert!(f0.is_finite());
                let h = 1e-6;
                for j in 0..2 * k {
                    let mut xp = x.clone();
                    xp[j] += h;
                    let mut xm = x.clone();
                    xm[j] -= h;
                    let mut scratch = vec![0.0; 2 * k];
                    let fp = obj.value_and_gradient(&xp, &mut scratch);
                    let fm = obj.value_and_gradient(&xm, &mut scratch);
                    let fd = (fp - fm) / (2.0 * h);
                    let denom = g[j].abs().max(1.0);
                    assert!(
                        ((g[j] - fd) / denom).abs() < 1e-5,
                        "n={n} coord {j}: analytic {} vs fd {}",
                        g[j],
                        fd
                    );
                }
            }
        }
    }

    #[test]
    fn penalized_gradient_matches_finite_differences() {
        let mut obj = Objective::new(8, None, Some(4));
        obj.weight = 2.5;
        let k = obj.param_dim();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let x: Vec<f64> = (0..2 * k).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut g = vec![0.0; 2 * k];
        obj.value_and_gradient(&x, &mut g);
        let h = 1e-6;
        for j in 0..2 * k {
            let mut xp = x.clone();
            xp[j] += h;
            let mut xm = x.clone();
            xm[j] -= h;
            let mut scratch = vec![0.0; 2 * k];
            let fp = obj.value_and_gradient(&xp, &mut scratch);
            let fm = obj.value_and_gradient(&xm, &mut scratch);
            let fd = (fp - fm) / (2.0 * h);
            assert!(
                ((g[j] - fd) / g[j].abs().max(1.0)).abs() < 1e-5,
                "coord {j}"
            );
        }
    }

    #[test]
    fn subspace_gradient_matches_finite_differences() {
        let basis = symmetry_fixed_basis(4);
        let mut obj = Objective::new(8, Some(basis), Some(4));
        obj.weight = 1.0;
        let k = obj.param_dim();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..2 * k).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut g = vec![0.0; 2 * k];
        obj.value_and_gradient(&x, &mut g);
        let h = 1e-6;
        for j in 0..2 * k {
            let mut xp = x.clone();
            xp[j] += h;
            let mut xm = x.clone();
            xm[j] -= h;
            let mut scratch = vec![0.0; 2 * k];
            let fp = obj.value_and_gradient(&xp, &mut scratch);
            let fm = obj.value_and_gradient(&xm, &mut scratch);
            let fd = (fp - fm) / (2.0 * h);
            assert!(
                ((g[j] - fd) / g[j].abs().max(1.0)).abs() < 1e-5,
                "coord {j}"
            );
        }
    }

    #[test]
    fn lbfgs_minimizes_quadratic() {
        // f(x) = Σ i·(x_i − i)², minimum at x_i = i.
        let dim = 12;
        let outcome = lbfgs(
            |x, g| {
                let mut f = 0.0;
                for i in 0..dim {
                    let w = (i + 1) as f64;
                    let r = x[i] - i as f64;
                    f += w * r * r;
                    g[i] = 2.0 * w * r;
                }
                f
            },
            vec![0.0; dim],
            200,
            1e-12,
            -f64::INFINITY,
        );
        assert!(outcome.value < 1e-18, "value {}", outcome.value);
        for i in 0..dim {
            assert!((outcome.x[i] - i as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn lbfgs_rosenbrock() {
        let outcome = lbfgs(
            |x, g| {
                let (a, b) = (1.0, 100.0);
                let f = (a - x[0]).powi(2) + b * (x[1] - x[0] * x[0]).powi(2);
                g[0] = -2.0 * (a - x[0]) - 4.0 * b * (x[1] - x[0] * x[0]) * x[0];
                g[1] = 2.0 * b * (x[1] - x[0] * x[0]);
                f
            },
            vec![-1.2, 1.0],
            300,
            1e-12,
            -f64::INFINITY,
        );
        assert!((outcome.x[0] - 1.0).abs() < 1e-7, "{:?}", outcome.x);
        assert!((outcome.x[1] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn search_finds_sic_in_small_dimensions() {
        for n in 2..=5u64 {
            let mut cfg = SearchConfig::new(n);
            cfg.restarts = 6;
            let result = find_fiducial(&cfg);
            assert!(
                result.converged,
                "n={n}: fp = {:.15}",
                result.frame_potential
            );
            assert!(
                (result.frame_potential - frame_potential_floor(n)).abs() < 1e-10,
                "n={n}"
            );
            let report = verify_sic(&result.fiducial, 1e-8);
            assert!(report.pass, "n={n}: {report:?}");
        }
    }

    #[test]
    fn search_is_seed_reproducible() {
        let mut cfg = SearchConfig::new(3);
        cfg.restarts = 3;
        let a = find_fiducial(&cfg);
        let b = find_fiducial(&cfg);
        assert_eq!(a.frame_potential.to_bits(), b.frame_potential.to_bits());
        for (x, y) in a.fiducial.amplitudes().iter().zip(b.fiducial.amplitudes()) {
            assert_eq!(x.re.to_bits(), y.re.to_bits());
            assert_eq!(x.im.to_bits(), y.im.to_bits());
        }
    }

    #[test]
    fn zauner_subspace_accelerates_small_search() {
        let mut cfg = SearchConfig::new(5);
        cfg.use_zauner_subspace = true;
        cfg.restarts = 4;
        let result = find_fiducial(&cfg);
        assert!(result.converged, "fp = {:.15}", result.frame_potential);
        assert!(verify_sic(&result.fiducial, 1e-8).pass);
    }

    #[test]
    fn symmetry_involution_properties() {
        for d in [4u64, 6] {
            let n = d * (d - 2);
            let v = symmetry_involution(d);
            let id = ComplexMatrix::identity(n as usize);
            assert!(
                v.mul_mat(&v).frobenius_distance(&id) < 1e-14,
                "involution d={d}"
            );
            assert!(
                v.adjoint().frobenius_distance(&v) < 1e-14,
                "hermitian d={d}"
            );
            let n2 = (d - 2) / 2;
            let want_trace = d as f64 * if n2 % 2 == 0 { 1.0 } else { -1.0 };
            assert!((v.trace().re - want_trace).abs() < 1e-12, "trace d={d}");
        }
    }

    #[test]
    fn fiducial_file_round_trip() {
        let fid = fiducial_dim2();
        let dir = std::env::temp_dir().join("sicframes-test-roundtrip");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("f2.txt");
        save_fiducial(&fid, &path).unwrap();
        let loaded = load_fiducial(&path).unwrap();
        assert!(!loaded.renormalized);
        for (a, b) in loaded.fiducial.amplitudes().iter().zip(fid.amplitudes()) {
            assert!((a - b).norm() < 1e-15);
        }
        // Saving the loaded vector reproduces the text exactly.
        let path2 = dir.join("f2-again.txt");
        save_fiducial(&loaded.fiducial, &path2).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            std::fs::read_to_string(&path2).unwrap()
        );
    }

    #[test]
    fn fiducial_file_errors() {
        let dir = std::env::temp_dir().join("sicframes-test-errors");
        std::fs::create_dir_all(&dir).unwrap();
        let bad_line = dir.join("bad.txt");
        std::fs::write(&bad_line, "2\n0.5 0.0\nnot-a-number 0.1\n").unwrap();
        match load_fiducial(&bad_line) {
            Err(FidFileError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        let short = dir.join("short.txt");
        std::fs::write(&short, "3\n1.0 0.0\n").unwrap();
        assert!(matches!(
            load_fiducial(&short),
            Err(FidFileError::DimensionMismatch {
                expected: 3,
                got: 1
            })
        ));
        let unnormalized = dir.join("unnorm.txt");
        std::fs::write(&unnormalized, "2\n0.5 0.0\n0.5 0.0\n").unwrap();
        assert!(matches!(
            load_fiducial(&unnormalized),
            Err(FidFileError::NotNormalized { .. })
        ));
        // A slightly off-norm vector is accepted and flagged.
        let slightly = dir.join("slight.txt");
        let a = (0.5f64).sqrt() * (1.0 + 4e-7);
        std::fs::write(&slightly, format!("2\n{a:.16e} 0.0\n{a:.16e} 0.0\n")).unwrap();
        let loaded = load_fiducial(&slightly).unwrap();
        assert!(loaded.renormalized);
        assert!((vec_norm(loaded.fiducial.amplitudes()) - 1.0).abs() < 1e-15);
    }
}
