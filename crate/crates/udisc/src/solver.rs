//! End-to-end unambiguous discrimination: builds the block SDP for a state
//! ensemble, solves it, assembles the measurement operators, and verifies
//! the complementary-slackness optimality certificate.

use crate::ensemble::{signal_spaces, SignalSpace, StateEnsemble};
use crate::error::{Error, Result};
use crate::hermitian::{
    default_rank_tol, eigh, identity, inner, max_abs, symmetrize, trace_re, CMat, C64,
};
use crate::sdp::{self, BlockSdp, SdpBlock, SdpOptions, SdpStatus};

/// Complete measurement: `operators[0]` is the inconclusive outcome,
/// `operators[i]` detects state `i - 1`.
#[derive(Debug, Clone)]
pub struct Measurement {
    pub operators: Vec<CMat>,
    /// Detection probabilities eta_i = Tr(rho_i Pi_i).
    pub etas: Vec<f64>,
    pub p_detect: f64,
    pub p_inconclusive: f64,
}

impl Measurement {
    pub fn num_states(&self) -> usize {
        self.operators.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.operators[0].nrows()
    }
}

/// Dual matrix Z; Tr(Z) upper-bounds the detection probability whenever Z is
/// dual-feasible.
#[derive(Debug, Clone)]
pub struct DualCertificate {
    pub z: CMat,
    pub trace: f64,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub measurement: Measurement,
    pub certificate: DualCertificate,
    /// Duality gap reported by the solver (0 for analytic solutions).
    pub gap: f64,
    pub iterations: usize,
    pub log: Vec<sdp::IterationRecord>,
    pub note: Option<String>,
}

/// Primal program: one PSD block per detectable state with objective
/// `C_i = p_i Theta_i* rho_i Theta_i` and map `A_i = Theta_i`, bounded by the
/// identity.
pub fn build_primal(e: &StateEnsemble, spaces: &[SignalSpace]) -> BlockSdp {
    let d = e.working_dim();
    let blocks = spaces
        .iter()
        .filter(|s| s.detectable)
        .map(|s| {
            let th = s.theta.columns();
            let c = symmetrize(&(th.adjoint() * &e.working_states()[s.index] * th))
                * C64::new(e.priors()[s.index], 0.0);
            SdpBlock::single(c, th.clone_owned())
        })
        .collect();
    BlockSdp {
        ambient_dim: d,
        blocks,
        bound: identity(d),
    }
}

/// Dual program data: minimize Tr(Z) over Z >= 0 with
/// `Theta_i* (Z - p_i rho_i) Theta_i >= 0` for every state with a nonempty
/// signal space. Everything is in working coordinates.
#[derive(Debug, Clone)]
pub struct DualDescription {
    pub thetas: Vec<CMat>,
    /// p_i rho_i for the same states, in matching order.
    pub weighted_states: Vec<CMat>,
    pub state_indices: Vec<usize>,
}

pub fn build_dual(e: &StateEnsemble, spaces: &[SignalSpace]) -> DualDescription {
    let mut thetas = Vec::new();
    let mut weighted_states = Vec::new();
    let mut state_indices = Vec::new();
    for s in spaces {
        if s.theta.dim() == 0 {
            continue;
        }
        thetas.push(s.theta.columns().clone_owned());
        weighted_states.push(&e.working_states()[s.index] * C64::new(e.priors()[s.index], 0.0));
        state_indices.push(s.index);
    }
    DualDescription {
        thetas,
        weighted_states,
        state_indices,
    }
}

/// Assembles the full measurement from per-block primal solutions
/// (working coordinates), expanding back through the deflation isometry.
pub fn assemble_measurement(
    e: &StateEnsemble,
    spaces: &[SignalSpace],
    deltas: &[CMat],
) -> Measurement {
    let n = e.original_dim();
    let m = e.len();
    let mut operators = vec![CMat::zeros(n, n); m + 1];
    let mut di = 0;
    for s in spaces {
        if !s.detectable {
            continue;
        }
        let th = s.theta.columns();
        let pi_w = symmetrize(&(th * &deltas[di] * th.adjoint()));
        operators[s.index + 1] = e.expand(&pi_w);
        di += 1;
    }
    let mut pi0 = identity(n);
    for op in operators.iter().skip(1) {
        pi0 -= op;
    }
    operators[0] = symmetrize(&pi0);

    let mut etas = Vec::with_capacity(m);
    let mut p_detect = 0.0;
    let mut p_inconclusive = 0.0;
    for i in 0..m {
        let rho = e.states()[i].matrix();
        let eta = inner(rho, &operators[i + 1]);
        p_detect += e.priors()[i] * eta;
        p_inconclusive += e.priors()[i] * inner(rho, &operators[0]);
        etas.push(eta);
    }
    Measurement {
        operators,
        etas,
        p_detect,
        p_inconclusive,
    }
}

fn trivial_solution(e: &StateEnsemble, note: &str) -> Solution {
    let n = e.original_dim();
    let mut operators = vec![CMat::zeros(n, n); e.len() + 1];
    operators[0] = identity(n);
    Solution {
        measurement: Measurement {
            operators,
            etas: vec![0.0; e.len()],
            p_detect: 0.0,
            p_inconclusive: 1.0,
        },
        certificate: DualCertificate {
            z: CMat::zeros(n, n),
            trace: 0.0,
        },
        gap: 0.0,
        iterations: 0,
        log: vec![],
        note: Some(note.to_string()),
    }
}

/// Solves the discrimination SDP for the ensemble. Ensembles where no state
/// is detectable collapse to the always-inconclusive measurement.
pub fn solve(e: &StateEnsemble, opts: &SdpOptions) -> Result<Solution> {
    let spaces = signal_spaces(e, default_rank_tol(e.working_dim()))?;
    solve_with_spaces(e, &spaces, opts)
}

pub fn solve_with_spaces(
    e: &StateEnsemble,
    spaces: &[SignalSpace],
    opts: &SdpOptions,
) -> Result<Solution> {
    if !spaces.iter().any(|s| s.detectable) {
        return Ok(trivial_solution(
            e,
            "no state is unambiguously detectable; always-inconclusive measurement returned",
        ));
    }
    let p = build_primal(e, spaces);
    let s = sdp::solve(&p, opts)?;
    match s.status {
        SdpStatus::Optimal => {}
        SdpStatus::MaxIterations => {
            return Err(Error::NumericalFailure(format!(
                "iteration limit reached with gap {:.3e}",
                s.gap
            )))
        }
        SdpStatus::NumericalFailure => {
            return Err(Error::NumericalFailure(format!(
                "{} with gap {:.3e}",
                s.failure.as_deref().unwrap_or("search direction failed"),
                s.gap
            )))
        }
    }
    let measurement = assemble_measurement(e, spaces, &s.primal_blocks);
    let z = e.expand(&s.dual);
    let trace = trace_re(&z);
    Ok(Solution {
        measurement,
        certificate: DualCertificate { z, trace },
        gap: s.gap,
        iterations: s.iterations,
        log: s.log,
        note: None,
    })
}

/// Per-clause residuals of the optimality conditions.
#[derive(Debug, Clone)]
pub struct OptimalityReport {
    /// lambda_min of Z.
    pub z_psd: f64,
    /// lambda_min of Theta_i* (Z - p_i rho_i) Theta_i per state (empty signal
    /// spaces contribute 0).
    pub dual_feas: Vec<f64>,
    /// max-norm of Z Pi_0.
    pub slack_residual: f64,
    /// max-norm of Theta_i* (Z - p_i rho_i) Theta_i Delta_i per state.
    pub block_residuals: Vec<f64>,
    /// |Tr(Z) - P_D|.
    pub gap_residual: f64,
    /// max-norm of sum Pi_i - I.
    pub completeness_residual: f64,
    /// max over i != j of |Tr(rho_j Pi_i)|.
    pub cross_trace_residual: f64,
    pub pass: bool,
}

/// Checks the zero-gap optimality certificate: Z PSD, per-state dual
/// feasibility, Z Pi_0 = 0, per-state complementary slackness, and
/// Tr(Z) = P_D, all within `tol`.
pub fn verify_optimality(
    e: &StateEnsemble,
    m: &Measurement,
    c: &DualCertificate,
    tol: f64,
) -> Result<OptimalityReport> {
    let n = e.original_dim();
    if m.operators.len() != e.len() + 1 {
        return Err(Error::OperatorCountMismatch {
            expected: e.len(),
            got: m.operators.len(),
        });
    }
    if c.z.nrows() != n || m.operators[0].nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: c.z.nrows().max(m.operators[0].nrows()),
        });
    }

    let spaces = signal_spaces(e, default_rank_tol(e.working_dim()))?;
    let zw = e.restrict(&c.z);
    let z_psd = eigh(&zw)?.values[0];

    let mut dual_feas = Vec::with_capacity(e.len());
    let mut block_residuals = Vec::with_capacity(e.len());
    for s in &spaces {
        if s.theta.dim() == 0 {
            dual_feas.push(0.0);
            block_residuals.push(0.0);
            continue;
        }
        let th = s.theta.columns();
        let shifted = &zw - &e.working_states()[s.index] * C64::new(e.priors()[s.index], 0.0);
        let g = symmetrize(&(th.adjoint() * shifted * th));
        dual_feas.push(eigh(&g)?.values[0]);
        let pi_w = e.restrict(&m.operators[s.index + 1]);
        let delta = th.adjoint() * pi_w * th;
        block_residuals.push(max_abs(&(&g * delta)));
    }

    let slack_residual = max_abs(&(&c.z * &m.operators[0]));
    let gap_residual = (c.trace - m.p_detect).abs();

    let mut sum = CMat::zeros(n, n);
    for op in &m.operators {
        sum += op;
    }
    let completeness_residual = max_abs(&(&sum - identity(n)));

    let mut cross_trace_residual = 0.0_f64;
    for i in 0..e.len() {
        for j in 0..e.len() {
            if i != j {
                cross_trace_residual = cross_trace_residual
                    .max(inner(e.states()[j].matrix(), &m.operators[i + 1]).abs());
            }
        }
    }

    let pass = z_psd >= -tol
        && dual_feas.iter().all(|&l| l >= -tol)
        && slack_residual <= tol
        && block_residuals.iter().all(|&r| r <= tol)
        && gap_residual <= tol;

    Ok(OptimalityReport {
        z_psd,
        dual_feas,
        slack_residual,
        block_residuals,
        gap_residual,
        completeness_residual,
        cross_trace_residual,
        pass,
    })
}

/// If `z` (in original coordinates) is dual-feasible within `tol`, returns
/// Tr(Z) as a certified upper bound on the detection probability.
pub fn upper_bound(e: &StateEnsemble, z: &CMat, tol: f64) -> Result<f64> {
    let n = e.original_dim();
    if z.nrows() != n || z.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: z.nrows(),
        });
    }
    let zs = symmetrize(z);
    let lam = eigh(&zs)?.values[0];
    if lam < -tol {
        return Err(Error::DualInfeasible(format!(
            "Z has negative eigenvalue {lam:.3e}"
        )));
    }
    let spaces = signal_spaces(e, default_rank_tol(e.working_dim()))?;
    let zw = e.restrict(&zs);
    for s in &spaces {
        if s.theta.dim() == 0 {
            continue;
        }
        let th = s.theta.columns();
        let shifted = &zw - &e.working_states()[s.index] * C64::new(e.priors()[s.index], 0.0);
        let g = symmetrize(&(th.adjoint() * shifted * th));
        let lam = eigh(&g)?.values[0];
        if lam < -tol {
            return Err(Error::DualInfeasible(format!(
                "constraint for state {} violated (min eigenvalue {lam:.3e})",
                s.index
            )));
        }
    }
    Ok(trace_re(&zs))
}
