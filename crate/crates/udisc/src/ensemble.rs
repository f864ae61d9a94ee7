//! State ensembles, signal spaces and feasibility of unambiguous detection.

use crate::error::{Error, Result};
use crate::hermitian::{
    default_rank_tol, identity, inner, max_abs, trace_re, CMat, HermitianOperator, SubspaceBasis,
    C64, HERMITIAN_TOL, PSD_TOL,
};

/// Tolerance for trace normalization of states and priors.
pub const TRACE_TOL: f64 = 1e-6;
/// Detectability threshold on Tr(rho_i P_i).
pub const FEAS_TOL: f64 = 1e-9;

/// Hermitian, PSD, unit-trace operator.
#[derive(Debug, Clone)]
pub struct DensityOperator {
    op: HermitianOperator,
}

impl DensityOperator {
    /// Validates Hermiticity and positivity, and trace-normalizes when the
    /// trace is within [`TRACE_TOL`] of one.
    pub fn new(mat: CMat) -> Result<Self> {
        let op = HermitianOperator::new(mat, HERMITIAN_TOL)?;
        let check = op.is_psd(PSD_TOL)?;
        if !check.ok {
            return Err(Error::NotPsd {
                min_eigenvalue: check.min_eigenvalue,
            });
        }
        let tr = trace_re(op.matrix());
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::BadTrace { trace: tr });
        }
        let normalized = op.matrix() / C64::new(tr, 0.0);
        Ok(Self {
            op: HermitianOperator::from_trusted(normalized),
        })
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn matrix(&self) -> &CMat {
        self.op.matrix()
    }

    pub fn operator(&self) -> &HermitianOperator {
        &self.op
    }
}

/// Ensemble of density operators with prior probabilities.
///
/// If the states do not collectively span the ambient space, the ensemble
/// deflates to the range of their sum and records the embedding isometry;
/// all solver work happens in the deflated coordinates and measurement
/// operators are expanded back afterwards.
#[derive(Debug, Clone)]
pub struct StateEnsemble {
    original_dim: usize,
    states: Vec<DensityOperator>,
    priors: Vec<f64>,
    /// Isometry E (original_dim x working_dim) when deflation occurred.
    embedding: Option<CMat>,
    /// States conjugated into working coordinates (clones when no deflation).
    working: Vec<CMat>,
}

impl StateEnsemble {
    pub fn new(matrices: Vec<CMat>, priors: Vec<f64>) -> Result<Self> {
        if matrices.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        if matrices.len() != priors.len() {
            return Err(Error::PriorCountMismatch {
                states: matrices.len(),
                priors: priors.len(),
            });
        }
        for (i, &p) in priors.iter().enumerate() {
            if p <= 0.0 || !p.is_finite() {
                return Err(Error::NonPositivePrior { index: i, value: p });
            }
        }
        let sum: f64 = priors.iter().sum();
        if (sum - 1.0).abs() > TRACE_TOL {
            return Err(Error::BadPriorSum { sum });
        }
        let priors: Vec<f64> = priors.iter().map(|p| p / sum).collect();

        let dim = matrices[0].nrows();
        let mut states = Vec::with_capacity(matrices.len());
        for m in matrices {
            if m.nrows() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: m.nrows(),
                });
            }
            states.push(DensityOperator::new(m)?);
        }

        // Span condition: deflate to range(sum rho_i) when the states do not
        // span the ambient space.
        let mut sum_mat = CMat::zeros(dim, dim);
        for s in &states {
            sum_mat += s.matrix();
        }
        let range = HermitianOperator::from_trusted(sum_mat).range(default_rank_tol(dim))?;
        let (embedding, working) = if range.dim() < dim {
            let e = range.columns().clone_owned();
            let working = states
                .iter()
                .map(|s| e.adjoint() * s.matrix() * &e)
                .collect();
            (Some(e), working)
        } else {
            (None, states.iter().map(|s| s.matrix().clone_owned()).collect())
        };

        Ok(Self {
            original_dim: dim,
            states,
            priors,
            embedding,
            working,
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Dimension the states were supplied in.
    pub fn original_dim(&self) -> usize {
        self.original_dim
    }

    /// Dimension solver work happens in (after deflation, if any).
    pub fn working_dim(&self) -> usize {
        self.embedding
            .as_ref()
            .map(|e| e.ncols())
            .unwrap_or(self.original_dim)
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn states(&self) -> &[DensityOperator] {
        &self.states
    }

    /// State matrices in working coordinates.
    pub fn working_states(&self) -> &[CMat] {
        &self.working
    }

    pub fn embedding(&self) -> Option<&CMat> {
        self.embedding.as_ref()
    }

    /// Lifts a working-dim operator back to the original dimension.
    pub fn expand(&self, op: &CMat) -> CMat {
        match &self.embedding {
            Some(e) => e * op * e.adjoint(),
            None => op.clone_owned(),
        }
    }

    /// Lifts a working-dim basis back to the original dimension.
    pub fn expand_basis(&self, b: &SubspaceBasis) -> SubspaceBasis {
        match &self.embedding {
            Some(e) => SubspaceBasis::new_unchecked(e * b.columns()),
            None => b.clone(),
        }
    }

    /// Restricts an original-dim operator to working coordinates.
    pub fn restrict(&self, op: &CMat) -> CMat {
        match &self.embedding {
            Some(e) => e.adjoint() * op * e,
            None => op.clone_owned(),
        }
    }
}

/// Per-state signal space S_i with projector and detectability data.
#[derive(Debug, Clone)]
pub struct SignalSpace {
    pub index: usize,
    /// Basis of S_i in working coordinates.
    pub theta: SubspaceBasis,
    pub projector: HermitianOperator,
    pub detectable: bool,
    pub max_eta: f64,
}

/// Computes S_i = intersection over j != i of ker(rho_j), in working
/// coordinates. A single-state ensemble gets the full space by the
/// empty-intersection convention.
pub fn signal_spaces(e: &StateEnsemble, rank_tol: f64) -> Result<Vec<SignalSpace>> {
    let d = e.working_dim();
    let m = e.len();
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        let theta = if m == 1 {
            SubspaceBasis::new_unchecked(identity(d))
        } else {
            let others: Vec<HermitianOperator> = (0..m)
                .filter(|&j| j != i)
                .map(|j| HermitianOperator::from_trusted(e.working_states()[j].clone_owned()))
                .collect();
            crate::hermitian::intersect_kernels(&others, rank_tol)?
        };
        let projector = theta.projector();
        let max_eta = inner(&e.working_states()[i], projector.matrix()).clamp(0.0, 1.0);
        out.push(SignalSpace {
            index: i,
            detectable: max_eta > FEAS_TOL,
            max_eta,
            projector,
            theta,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct StateFeasibility {
    pub signal_dim: usize,
    pub detectable: bool,
    pub max_eta: f64,
}

#[derive(Debug, Clone)]
pub struct FeasibilityReport {
    pub per_state: Vec<StateFeasibility>,
    pub overall: bool,
}

pub fn check_feasibility(e: &StateEnsemble) -> Result<FeasibilityReport> {
    let spaces = signal_spaces(e, default_rank_tol(e.working_dim()))?;
    let per_state: Vec<StateFeasibility> = spaces
        .iter()
        .map(|s| StateFeasibility {
            signal_dim: s.theta.dim(),
            detectable: s.detectable,
            max_eta: s.max_eta,
        })
        .collect();
    let overall = per_state.iter().any(|s| s.detectable);
    Ok(FeasibilityReport { per_state, overall })
}

/// Max-norm of P_i rho_j, used by the zero-error safety checks.
pub fn cross_residual(space: &SignalSpace, rho_j: &CMat) -> f64 {
    max_abs(&(space.projector.matrix() * rho_j))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn proj0(dim: usize) -> CMat {
        let mut m = CMat::zeros(dim, dim);
        m[(0, 0)] = c(1.0, 0.0);
        m
    }

    fn proj1(dim: usize) -> CMat {
        let mut m = CMat::zeros(dim, dim);
        m[(1, 1)] = c(1.0, 0.0);
        m
    }

    #[test]
    fn build_valid_qubit_pair() {
        let e = StateEnsemble::new(vec![proj0(2), proj1(2)], vec![0.5, 0.5]).unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e.working_dim(), 2);
        assert!(e.embedding().is_none());
    }

    #[test]
    fn build_single_maximally_mixed() {
        let m = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(0.5, 0.0),
            c(0.5, 0.0),
        ]));
        let e = StateEnsemble::new(vec![m], vec![1.0]).unwrap();
        assert_eq!(e.len(), 1);
        let spaces = signal_spaces(&e, default_rank_tol(2)).unwrap();
        assert_eq!(spaces[0].theta.dim(), 2);
        assert!((spaces[0].max_eta - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reject_negative_prior() {
        let err = StateEnsemble::new(vec![proj0(2)], vec![-0.2]).unwrap_err();
        assert!(matches!(err, Error::NonPositivePrior { .. }));
    }

    #[test]
    fn reject_non_hermitian() {
        let mut m = proj0(2);
        m[(0, 1)] = c(0.3, 0.0);
        let err = StateEnsemble::new(vec![m], vec![1.0]).unwrap_err();
        assert!(matches!(err, Error::NotHermitian { .. }));
    }

    #[test]
    fn orthogonal_pure_pair_spaces() {
        let e = StateEnsemble::new(vec![proj0(2), proj1(2)], vec![0.5, 0.5]).unwrap();
        let spaces = signal_spaces(&e, default_rank_tol(2)).unwrap();
        // S_1 = ker rho_2 = span{|0>}, S_2 = span{|1>}
        assert_eq!(spaces[0].theta.dim(), 1);
        assert_eq!(spaces[1].theta.dim(), 1);
        assert!((spaces[0].max_eta - 1.0).abs() < 1e-9);
        assert!((spaces[1].max_eta - 1.0).abs() < 1e-9);
    }

    #[test]
    fn mixed_dim3_example() {
        // rho1 = (P_e1 + P_e2)/2, rho2 = (P_e2 + P_e3)/2
        let mut r1 = CMat::zeros(3, 3);
        r1[(0, 0)] = c(0.5, 0.0);
        r1[(1, 1)] = c(0.5, 0.0);
        let mut r2 = CMat::zeros(3, 3);
        r2[(1, 1)] = c(0.5, 0.0);
        r2[(2, 2)] = c(0.5, 0.0);
        let e = StateEnsemble::new(vec![r1, r2], vec![0.5, 0.5]).unwrap();
        let spaces = signal_spaces(&e, default_rank_tol(3)).unwrap();
        // S_1 = ker rho_2 = span{e1}, S_2 = ker rho_1 = span{e3}
        assert_eq!(spaces[0].theta.dim(), 1);
        assert_eq!(spaces[1].theta.dim(), 1);
        assert!((spaces[0].theta.columns()[(0, 0)].re - 1.0).abs() < 1e-9);
        assert!((spaces[1].theta.columns()[(2, 0)].re - 1.0).abs() < 1e-9);
        assert!((spaces[0].max_eta - 0.5).abs() < 1e-9);
        assert!((spaces[1].max_eta - 0.5).abs() < 1e-9);

        let report = check_feasibility(&e).unwrap();
        assert!(report.overall);
        assert!(report.per_state.iter().all(|s| s.detectable));
    }

    #[test]
    fn identical_states_undetectable() {
        let m = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(0.5, 0.0),
            c(0.5, 0.0),
        ]));
        let e = StateEnsemble::new(vec![m.clone(), m], vec![0.5, 0.5]).unwrap();
        let report = check_feasibility(&e).unwrap();
        assert!(!report.overall);
        for s in &report.per_state {
            assert!(!s.detectable);
            assert!(s.max_eta.abs() < 1e-9);
        }
    }

    #[test]
    fn deflation_records_isometry() {
        // Two states supported on span{e1,e2} inside dim 4.
        let e = StateEnsemble::new(vec![proj0(4), proj1(4)], vec![0.5, 0.5]).unwrap();
        assert_eq!(e.working_dim(), 2);
        let emb = e.embedding().unwrap();
        assert_eq!(emb.ncols(), 2);
        let gram = emb.adjoint() * emb;
        assert!(max_abs(&(&gram - identity(2))) < 1e-10);
        // expanding a working identity gives the range projector
        let p = e.expand(&identity(2));
        assert!((trace_re(&p) - 2.0).abs() < 1e-10);
    }

    #[test]
    fn signal_spaces_annihilate_other_states() {
        let mut r1 = CMat::zeros(3, 3);
        r1[(0, 0)] = c(0.5, 0.0);
        r1[(1, 1)] = c(0.5, 0.0);
        let mut r2 = CMat::zeros(3, 3);
        r2[(1, 1)] = c(0.5, 0.0);
        r2[(2, 2)] = c(0.5, 0.0);
        let e = StateEnsemble::new(vec![r1, r2], vec![0.3, 0.7]).unwrap();
        let spaces = signal_spaces(&e, default_rank_tol(3)).unwrap();
        for s in &spaces {
            for (j, st) in e.working_states().iter().enumerate() {
                if j != s.index {
                    assert!(cross_residual(s, st) <= 1e-9);
                }
            }
        }
    }
}
