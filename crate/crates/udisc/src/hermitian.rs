//! Dense complex Hermitian linear algebra: eigendecomposition, numerical
//! kernels, subspace intersection and projector algebra.
//!
//! The eigensolver works through the real symmetric embedding
//! `[[Re H, -Im H], [Im H, Re H]]` so that a single real symmetric
//! eigensolver backs every complex operation. Each eigenvalue of H appears
//! twice in the embedding; a Gram-Schmidt sweep over the mapped eigenvectors
//! keeps one complex representative per pair.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Default tolerance for accepting a matrix as Hermitian at construction.
pub const HERMITIAN_TOL: f64 = 1e-9;
/// Default tolerance on negative eigenvalues when testing positive semidefiniteness.
pub const PSD_TOL: f64 = 1e-8;
/// Orthonormality tolerance for subspace bases and projectors.
pub const ORTHO_TOL: f64 = 1e-9;

/// Largest absolute entry of a complex matrix (max norm).
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Real part of Tr(A B), the Euclidean inner product on Hermitian matrices.
pub fn inner(a: &CMat, b: &CMat) -> f64 {
    let mut acc = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    acc
}

/// Real part of the trace.
pub fn trace_re(m: &CMat) -> f64 {
    (0..m.nrows()).map(|i| m[(i, i)].re).sum()
}

/// (M + M*)/2.
pub fn symmetrize(m: &CMat) -> CMat {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Numerical-rank convention: eigenvalues below `dim * eps * lambda_max`
/// count as zero unless the caller overrides the relative tolerance.
pub fn default_rank_tol(dim: usize) -> f64 {
    dim as f64 * f64::EPSILON
}

/// Hermitian operator, stored exactly symmetrized as (H + H*)/2.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    mat: CMat,
}

impl HermitianOperator {
    pub fn new(mat: CMat, hermitian_tol: f64) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::NotSquare {
                rows: mat.nrows(),
                cols: mat.ncols(),
            });
        }
        let deviation = max_abs(&(&mat - mat.adjoint()));
        if deviation > hermitian_tol {
            return Err(Error::NotHermitian {
                deviation,
                tol: hermitian_tol,
            });
        }
        Ok(Self {
            mat: symmetrize(&mat),
        })
    }

    /// Symmetrizes unconditionally; for matrices Hermitian by construction.
    pub fn from_trusted(mat: CMat) -> Self {
        Self {
            mat: symmetrize(&mat),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    /// Eigendecomposition with eigenvalues sorted ascending.
    pub fn eigh(&self) -> Result<Eigh> {
        eigh(&self.mat)
    }

    /// Orthonormal basis of the numerical kernel; eigenvalues at or below
    /// `rank_tol * lambda_max` count as zero. The zero operator returns the
    /// full standard basis.
    pub fn null_space(&self, rank_tol: f64) -> Result<SubspaceBasis> {
        let n = self.dim();
        let eig = self.eigh()?;
        let lam_max = eig
            .values
            .iter()
            .map(|v| v.abs())
            .fold(0.0_f64, f64::max);
        if lam_max == 0.0 {
            return Ok(SubspaceBasis::new_unchecked(identity(n)));
        }
        let thresh = rank_tol * lam_max;
        let keep: Vec<usize> = (0..n).filter(|&k| eig.values[k] <= thresh).collect();
        let mut cols = CMat::zeros(n, keep.len());
        for (c, &k) in keep.iter().enumerate() {
            cols.set_column(c, &eig.vectors.columns().column(k));
        }
        Ok(SubspaceBasis::new_unchecked(cols))
    }

    /// Range basis: eigenvectors with eigenvalue above `rank_tol * lambda_max`.
    pub fn range(&self, rank_tol: f64) -> Result<SubspaceBasis> {
        let n = self.dim();
        let eig = self.eigh()?;
        let lam_max = eig
            .values
            .iter()
            .map(|v| v.abs())
            .fold(0.0_f64, f64::max);
        let thresh = rank_tol * lam_max;
        let keep: Vec<usize> = (0..n)
            .filter(|&k| lam_max > 0.0 && eig.values[k] > thresh)
            .collect();
        let mut cols = CMat::zeros(n, keep.len());
        for (c, &k) in keep.iter().enumerate() {
            cols.set_column(c, &eig.vectors.columns().column(k));
        }
        Ok(SubspaceBasis::new_unchecked(cols))
    }

    /// Positive semidefiniteness test with a violating eigenpair as witness.
    pub fn is_psd(&self, tol: f64) -> Result<PsdCheck> {
        let eig = self.eigh()?;
        let lam_min = eig.values[0];
        let lam_max = *eig.values.last().unwrap();
        let ok = lam_min >= -tol * lam_max.max(1.0);
        let witness = if ok {
            None
        } else {
            Some((lam_min, eig.vectors.columns().column(0).into_owned()))
        };
        Ok(PsdCheck {
            ok,
            min_eigenvalue: lam_min,
            max_eigenvalue: lam_max,
            witness,
        })
    }
}

#[derive(Debug, Clone)]
pub struct PsdCheck {
    pub ok: bool,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub witness: Option<(f64, CVec)>,
}

/// Orthonormal basis of a subspace; `r` may be zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    cols: CMat,
}

impl SubspaceBasis {
    pub fn new(cols: CMat, ortho_tol: f64) -> Result<Self> {
        let gram = cols.adjoint() * &cols;
        let dev = max_abs(&(&gram - identity(cols.ncols())));
        if dev > ortho_tol {
            return Err(Error::NotHermitian {
                deviation: dev,
                tol: ortho_tol,
            });
        }
        Ok(Self { cols })
    }

    pub fn new_unchecked(cols: CMat) -> Self {
        Self { cols }
    }

    pub fn empty(ambient_dim: usize) -> Self {
        Self {
            cols: CMat::zeros(ambient_dim, 0),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.cols.nrows()
    }

    pub fn dim(&self) -> usize {
        self.cols.ncols()
    }

    pub fn columns(&self) -> &CMat {
        &self.cols
    }

    /// P = B B*, the orthogonal projector onto the spanned subspace.
    pub fn projector(&self) -> HermitianOperator {
        HermitianOperator::from_trusted(&self.cols * self.cols.adjoint())
    }
}

#[derive(Debug, Clone)]
pub struct Eigh {
    /// Eigenvalues, ascending.
    pub values: Vec<f64>,
    /// Matching orthonormal eigenvectors.
    pub vectors: SubspaceBasis,
}

/// Eigendecomposition of a Hermitian matrix (not necessarily wrapped in
/// [`HermitianOperator`]; the input is symmetrized internally).
pub fn eigh(h: &CMat) -> Result<Eigh> {
    let n = h.nrows();
    if n != h.ncols() {
        return Err(Error::NotSquare {
            rows: n,
            cols: h.ncols(),
        });
    }
    let h = symmetrize(h);

    // Real symmetric embedding [[Re, -Im], [Im, Re]].
    let mut emb = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = h[(i, j)];
            emb[(i, j)] = z.re;
            emb[(i, j + n)] = -z.im;
            emb[(i + n, j)] = z.im;
            emb[(i + n, j + n)] = z.re;
        }
    }
    let se = SymmetricEigen::try_new(emb, f64::EPSILON, 100_000).ok_or_else(|| {
        Error::EigenFailure {
            detail: format!(" on {}x{} real embedding", 2 * n, 2 * n),
        }
    })?;

    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));

    // Each eigenvalue of H appears exactly twice in the embedding. Group the
    // sorted eigenvalues into degenerate clusters and keep, per cluster of
    // size 2k, the k mapped complex vectors that stay linearly independent.
    // Greedy max-residual selection avoids picking a phase-rotated duplicate.
    let scale = max_abs(&h).max(1.0);
    let cluster_tol = 1e-10 * scale;
    let mut values: Vec<f64> = Vec::with_capacity(n);
    let mut accepted: Vec<CVec> = Vec::with_capacity(n);
    let mut start = 0;
    while start < 2 * n {
        let mut end = start + 1;
        while end < 2 * n
            && se.eigenvalues[order[end]] - se.eigenvalues[order[end - 1]] < cluster_tol
        {
            end += 1;
        }
        if (end - start) % 2 != 0 {
            return Err(Error::EigenFailure {
                detail: format!(
                    ": embedding eigenvalue cluster of odd size {} near {:.6e}",
                    end - start,
                    se.eigenvalues[order[start]]
                ),
            });
        }
        let keep = (end - start) / 2;
        let mut candidates: Vec<CVec> = order[start..end]
            .iter()
            .map(|&k| {
                let ev = se.eigenvectors.column(k);
                CVec::from_fn(n, |i, _| C64::new(ev[i], ev[i + n]))
            })
            .collect();
        for _ in 0..keep {
            // residual of each remaining candidate against everything accepted
            let mut best: Option<(usize, f64, CVec)> = None;
            for (ci, cand) in candidates.iter().enumerate() {
                let mut w = cand.clone();
                for c in &accepted {
                    let ip = c.dotc(&w);
                    w -= c * ip;
                }
                let nrm = w.norm();
                if best.as_ref().is_none_or(|(_, b, _)| nrm > *b) {
                    best = Some((ci, nrm, w));
                }
            }
            let (ci, nrm, mut w) = best.ok_or_else(|| Error::EigenFailure {
                detail: ": cluster exhausted".into(),
            })?;
            if nrm < 1e-6 {
                return Err(Error::EigenFailure {
                    detail: format!(": degenerate cluster residual {nrm:.3e}"),
                });
            }
            w /= C64::new(nrm, 0.0);
            // second orthogonalization pass
            for c in &accepted {
                let ip = c.dotc(&w);
                w -= c * ip;
            }
            let nrm2 = w.norm();
            w /= C64::new(nrm2, 0.0);
            // Rayleigh quotient pins the eigenvalue to this vector
            let rayleigh = w.dotc(&(&h * &w)).re;
            accepted.push(w);
            values.push(rayleigh);
            candidates.remove(ci);
        }
        start = end;
    }
    if accepted.len() != n {
        return Err(Error::EigenFailure {
            detail: format!(
                ": embedding de-duplication produced {} of {} eigenvectors",
                accepted.len(),
                n
            ),
        });
    }

    // The backing real solver can leave eigenpair residuals around 1e-9 on
    // isolated eigenvalues; polish by diagonalizing V*HV, which is already
    // nearly diagonal, with Jacobi rotations.
    let mut vectors_raw = CMat::zeros(n, n);
    for (c, w) in accepted.iter().enumerate() {
        vectors_raw.set_column(c, w);
    }
    jacobi_polish(&h, &mut vectors_raw, &mut values, scale);
    let accepted: Vec<CVec> = (0..n).map(|c| vectors_raw.column(c).into_owned()).collect();

    // Rayleigh quotients may reorder within a former cluster; restore
    // ascending order globally.
    let mut perm: Vec<usize> = (0..n).collect();
    perm.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let values: Vec<f64> = perm.iter().map(|&k| values[k]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (c, &k) in perm.iter().enumerate() {
        vectors.set_column(c, &accepted[k]);
    }
    let mut values = values;

    // Deterministic output: fix each column's phase so its largest-magnitude
    // entry is real positive, then order degenerate clusters by pivot index.
    fix_phases(&mut vectors);
    let lam_max = values.iter().map(|v| v.abs()).fold(0.0_f64, f64::max);
    let cluster_gap = default_rank_tol(n) * lam_max.max(1.0);
    reorder_clusters(&mut values, &mut vectors, cluster_gap);

    // Residual guard on the reconstruction.
    for (k, &lam) in values.iter().enumerate() {
        let v = vectors.column(k);
        let resid = (&h * v - v * C64::new(lam, 0.0)).norm();
        if resid > 1e-8 * scale {
            return Err(Error::EigenFailure {
                detail: format!(": eigenpair {k} residual {resid:.3e}"),
            });
        }
    }

    Ok(Eigh {
        values,
        vectors: SubspaceBasis::new_unchecked(vectors),
    })
}

/// Cyclic Jacobi sweeps on M = V* H V. M is nearly diagonal on entry, so a
/// couple of sweeps push every off-diagonal entry below machine precision;
/// each rotation is folded back into V.
fn jacobi_polish(h: &CMat, vectors: &mut CMat, values: &mut [f64], scale: f64) {
    let n = vectors.ncols();
    let mut m = vectors.adjoint() * h * &*vectors;
    let thresh = 0.5 * f64::EPSILON * scale;
    for _sweep in 0..30 {
        let mut off = 0.0_f64;
        for p in 0..n {
            for q in p + 1..n {
                off = off.max(m[(p, q)].norm());
            }
        }
        if off <= thresh {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let b = m[(p, q)];
                let beta = b.norm();
                if beta <= thresh {
                    continue;
                }
                let a = m[(p, p)].re;
                let d = m[(q, q)].re;
                let phase = b / C64::new(beta, 0.0);
                let tau = (a - d) / (2.0 * beta);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * cs;
                // unitary J: J_pp = cs, J_pq = -sn, J_qp = conj(phase) sn,
                // J_qq = conj(phase) cs; update M <- J* M J, V <- V J
                let jpp = C64::new(cs, 0.0);
                let jpq = C64::new(-sn, 0.0);
                let jqp = phase.conj() * sn;
                let jqq = phase.conj() * cs;
                for i in 0..n {
                    let mp = m[(i, p)];
                    let mq = m[(i, q)];
                    m[(i, p)] = mp * jpp + mq * jqp;
                    m[(i, q)] = mp * jpq + mq * jqq;
                }
                for j in 0..n {
                    let mp = m[(p, j)];
                    let mq = m[(q, j)];
                    m[(p, j)] = jpp.conj() * mp + jqp.conj() * mq;
                    m[(q, j)] = jpq.conj() * mp + jqq.conj() * mq;
                }
                m[(p, q)] = C64::new(0.0, 0.0);
                m[(q, p)] = C64::new(0.0, 0.0);
                for i in 0..vectors.nrows() {
                    let vp = vectors[(i, p)];
                    let vq = vectors[(i, q)];
                    vectors[(i, p)] = vp * jpp + vq * jqp;
                    vectors[(i, q)] = vp * jpq + vq * jqq;
                }
            }
        }
    }
    for k in 0..n {
        values[k] = m[(k, k)].re;
    }
}

fn pivot_index(col: &nalgebra::DVectorView<C64>) -> usize {
    let mut best = 0;
    let mut best_mag = 0.0;
    for (i, z) in col.iter().enumerate() {
        let m = z.norm();
        if m > best_mag * (1.0 + 1e-12) {
            best_mag = m;
            best = i;
        }
    }
    best
}

fn fix_phases(vectors: &mut CMat) {
    let n = vectors.nrows();
    for c in 0..vectors.ncols() {
        let p = pivot_index(&vectors.column(c).as_view());
        let z = vectors[(p, c)];
        let m = z.norm();
        if m > 0.0 {
            let phase = z.conj() / C64::new(m, 0.0);
            for i in 0..n {
                vectors[(i, c)] *= phase;
            }
        }
    }
}

fn reorder_clusters(values: &mut [f64], vectors: &mut CMat, gap: f64) {
    let n = values.len();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[end] - values[end - 1] < gap {
            end += 1;
        }
        if end - start > 1 {
            let mut idx: Vec<usize> = (start..end).collect();
            idx.sort_by_key(|&k| pivot_index(&vectors.column(k).as_view()));
            let old_vals: Vec<f64> = idx.iter().map(|&k| values[k]).collect();
            let old_cols: Vec<CVec> = idx.iter().map(|&k| vectors.column(k).into_owned()).collect();
            for (off, k) in (start..end).enumerate() {
                values[k] = old_vals[off];
                vectors.set_column(k, &old_cols[off]);
            }
        }
        start = end;
    }
}

/// Orthonormal basis of the intersection of the kernels of PSD operators,
/// computed as the kernel of their sum.
pub fn intersect_kernels(operators: &[HermitianOperator], rank_tol: f64) -> Result<SubspaceBasis> {
    let first = operators.first().ok_or(Error::EmptyEnsemble)?;
    let n = first.dim();
    let mut sum = CMat::zeros(n, n);
    for op in operators {
        if op.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: op.dim(),
            });
        }
        sum += op.matrix();
    }
    HermitianOperator::from_trusted(sum).null_space(rank_tol)
}
