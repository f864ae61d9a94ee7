//! Symmetry reduction for ensembles generated by an abelian unitary group:
//! a single generator (geometrically uniform set) or several generators
//! (compound case). The solve happens over generator operators only; the
//! measurement is expanded by conjugation and certified against the full
//! ensemble.

use crate::ensemble::{signal_spaces, DensityOperator, StateEnsemble};
use crate::error::{Error, Result};
use crate::hermitian::{default_rank_tol, identity, inner, max_abs, symmetrize, trace_re, CMat, C64};
use crate::sdp::{self, BlockSdp, SdpBlock, SdpOptions, SdpStatus};
use crate::solver::{self, DualCertificate, Measurement, Solution};

/// Matching tolerance for closure/abelian checks on floating-point group
/// elements.
pub const GROUP_TOL: f64 = 1e-8;

/// Finite abelian group of unitaries, first element the identity, with the
/// index table `table[j][i] = k` such that `U_j* U_i = U_k`.
#[derive(Debug, Clone)]
pub struct UnitaryGroup {
    dim: usize,
    elements: Vec<CMat>,
    table: Vec<Vec<usize>>,
}

impl UnitaryGroup {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[CMat] {
        &self.elements
    }

    /// k with U_j* U_i = U_k.
    pub fn compose_index(&self, j: usize, i: usize) -> usize {
        self.table[j][i]
    }
}

/// Validates unitarity, closure and commutativity, and builds the index
/// table by nearest-match.
pub fn validate_group(elements: Vec<CMat>) -> Result<UnitaryGroup> {
    let first = elements.first().ok_or(Error::EmptyEnsemble)?;
    let n = first.nrows();
    if max_abs(&(first - identity(n))) > GROUP_TOL {
        return Err(Error::MissingIdentity);
    }
    for (index, u) in elements.iter().enumerate() {
        if u.nrows() != n || u.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: u.nrows(),
            });
        }
        let deviation = max_abs(&(u.adjoint() * u - identity(n)));
        if deviation > 1e-9 {
            return Err(Error::NotUnitary { index, deviation });
        }
    }
    let m = elements.len();
    for i in 0..m {
        for j in (i + 1)..m {
            let deviation = max_abs(&(&elements[i] * &elements[j] - &elements[j] * &elements[i]));
            if deviation > GROUP_TOL {
                return Err(Error::NotAbelian { i, j, deviation });
            }
        }
    }
    let mut table = vec![vec![0usize; m]; m];
    for j in 0..m {
        let uj_adj = elements[j].adjoint();
        for i in 0..m {
            let prod = &uj_adj * &elements[i];
            let k = (0..m)
                .min_by(|&a, &b| {
                    max_abs(&(&prod - &elements[a]))
                        .total_cmp(&max_abs(&(&prod - &elements[b])))
                })
                .unwrap();
            if max_abs(&(&prod - &elements[k])) > GROUP_TOL {
                return Err(Error::GroupNotClosed { j, i });
            }
            table[j][i] = k;
        }
    }
    Ok(UnitaryGroup {
        dim: n,
        elements,
        table,
    })
}

/// Ensemble of the orbit U_i rho U_i* under the group, with uniform priors.
#[derive(Debug, Clone)]
pub struct GUEnsemble {
    pub group: UnitaryGroup,
    pub generator: DensityOperator,
}

impl GUEnsemble {
    pub fn new(group: UnitaryGroup, generator: CMat) -> Result<Self> {
        let generator = DensityOperator::new(generator)?;
        if generator.dim() != group.dim() {
            return Err(Error::DimensionMismatch {
                expected: group.dim(),
                got: generator.dim(),
            });
        }
        Ok(Self { group, generator })
    }

    /// Full ensemble rho_i = U_i rho U_i*, priors 1/m.
    pub fn expand(&self) -> Result<StateEnsemble> {
        let m = self.group.order();
        let states = self
            .group
            .elements()
            .iter()
            .map(|u| symmetrize(&(u * self.generator.matrix() * u.adjoint())))
            .collect();
        StateEnsemble::new(states, vec![1.0 / m as f64; m])
    }
}

/// Orbit of several generators under one group, uniform priors; states are
/// ordered generator-fastest: flat index of (element i, generator k) is
/// i * r + k.
#[derive(Debug, Clone)]
pub struct CGUEnsemble {
    pub group: UnitaryGroup,
    pub generators: Vec<DensityOperator>,
}

impl CGUEnsemble {
    pub fn new(group: UnitaryGroup, generators: Vec<CMat>) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        let generators = generators
            .into_iter()
            .map(DensityOperator::new)
            .collect::<Result<Vec<_>>>()?;
        for g in &generators {
            if g.dim() != group.dim() {
                return Err(Error::DimensionMismatch {
                    expected: group.dim(),
                    got: g.dim(),
                });
            }
        }
        Ok(Self { group, generators })
    }

    pub fn expand(&self) -> Result<StateEnsemble> {
        let l = self.group.order();
        let r = self.generators.len();
        let mut states = Vec::with_capacity(l * r);
        for u in self.group.elements() {
            for g in &self.generators {
                states.push(symmetrize(&(u * g.matrix() * u.adjoint())));
            }
        }
        StateEnsemble::new(states, vec![1.0 / (l * r) as f64; l * r])
    }
}

/// Structural size comparison between the reduced and the full program.
#[derive(Debug, Clone, Copy)]
pub struct ReductionStats {
    pub reduced_blocks: usize,
    pub reduced_real_vars: usize,
    pub full_blocks: usize,
    pub full_real_vars: usize,
}

#[derive(Debug, Clone)]
pub struct GuSolution {
    pub solution: Solution,
    /// Generator operator Pi with Pi_i = U_i Pi U_i*, original coordinates.
    pub generator_pi: CMat,
    pub stats: ReductionStats,
}

#[derive(Debug, Clone)]
pub struct CguSolution {
    pub solution: Solution,
    pub generator_pis: Vec<CMat>,
    pub stats: ReductionStats,
}

fn run_reduced(p: &BlockSdp, opts: &SdpOptions) -> Result<sdp::SdpSolution> {
    let s = sdp::solve(p, opts)?;
    match s.status {
        SdpStatus::Optimal => Ok(s),
        SdpStatus::MaxIterations => Err(Error::NumericalFailure(format!(
            "iteration limit reached with gap {:.3e}",
            s.gap
        ))),
        SdpStatus::NumericalFailure => Err(Error::NumericalFailure(format!(
            "{} with gap {:.3e}",
            s.failure.as_deref().unwrap_or("search direction failed"),
            s.gap
        ))),
    }
}

fn finish_expanded(
    e: &StateEnsemble,
    working_ops: Vec<CMat>,
    zw: &CMat,
    gap: f64,
    iterations: usize,
    log: Vec<sdp::IterationRecord>,
) -> Solution {
    let n = e.original_dim();
    let mut operators = Vec::with_capacity(working_ops.len() + 1);
    operators.push(CMat::zeros(n, n));
    for op in &working_ops {
        operators.push(e.expand(op));
    }
    let mut pi0 = identity(n);
    for op in operators.iter().skip(1) {
        pi0 -= op;
    }
    operators[0] = symmetrize(&pi0);

    let mut etas = Vec::with_capacity(e.len());
    let mut p_detect = 0.0;
    let mut p_inconclusive = 0.0;
    for i in 0..e.len() {
        let rho = e.states()[i].matrix();
        let eta = inner(rho, &operators[i + 1]);
        p_detect += e.priors()[i] * eta;
        p_inconclusive += e.priors()[i] * inner(rho, &operators[0]);
        etas.push(eta);
    }
    let z = e.expand(zw);
    let trace = trace_re(&z);
    Solution {
        measurement: Measurement {
            operators,
            etas,
            p_detect,
            p_inconclusive,
        },
        certificate: DualCertificate { z, trace },
        gap,
        iterations,
        log,
        note: None,
    }
}

/// Solves the reduced program over one generator operator: maximize
/// Tr(rho Pi) over Pi restricted to the generator's signal space, with
/// sum_i U_i Pi U_i* <= I. The dual matrix is averaged over the group to
/// yield a certificate for the full ensemble.
pub fn solve_gu(g: &GUEnsemble, opts: &SdpOptions) -> Result<GuSolution> {
    let e = g.expand()?;
    let d = e.working_dim();
    let m = g.group.order();
    let spaces = signal_spaces(&e, default_rank_tol(d))?;
    let full_program = solver::build_primal(&e, &spaces);
    let stats_of = |reduced: &BlockSdp| ReductionStats {
        reduced_blocks: reduced.blocks.len(),
        reduced_real_vars: reduced.primal_real_variable_count(),
        full_blocks: full_program.blocks.len(),
        full_real_vars: full_program.primal_real_variable_count(),
    };

    if !spaces[0].detectable {
        // by symmetry every state is undetectable
        let solution = solver::solve_with_spaces(&e, &spaces, opts)?;
        let n = e.original_dim();
        let empty = BlockSdp {
            ambient_dim: d,
            blocks: vec![],
            bound: identity(d),
        };
        return Ok(GuSolution {
            solution,
            generator_pi: CMat::zeros(n, n),
            stats: stats_of(&empty),
        });
    }

    let us: Vec<CMat> = g.group.elements().iter().map(|u| e.restrict(u)).collect();
    let th1 = spaces[0].theta.columns();
    let objective = symmetrize(&(th1.adjoint() * &e.working_states()[0] * th1));
    let maps = us.iter().map(|u| u * th1).collect();
    let p = BlockSdp {
        ambient_dim: d,
        blocks: vec![SdpBlock { objective, maps }],
        bound: identity(d),
    };
    let stats = stats_of(&p);
    let s = run_reduced(&p, opts)?;

    let pi_gen = symmetrize(&(th1 * &s.primal_blocks[0] * th1.adjoint()));
    let working_ops: Vec<CMat> = us
        .iter()
        .map(|u| symmetrize(&(u * &pi_gen * u.adjoint())))
        .collect();
    let mut zw = CMat::zeros(d, d);
    for u in &us {
        zw += u.adjoint() * &s.dual * u;
    }
    zw = symmetrize(&zw) / C64::new(m as f64, 0.0);

    let generator_pi = e.expand(&pi_gen);
    let solution = finish_expanded(&e, working_ops, &zw, s.gap, s.iterations, s.log);
    Ok(GuSolution {
        solution,
        generator_pi,
        stats,
    })
}

/// Joint reduced program over r generator operators Pi_k with the shared
/// bound sum_i sum_k U_i Pi_k U_i* <= I.
pub fn solve_cgu(c: &CGUEnsemble, opts: &SdpOptions) -> Result<CguSolution> {
    let e = c.expand()?;
    let d = e.working_dim();
    let l = c.group.order();
    let r = c.generators.len();
    let spaces = signal_spaces(&e, default_rank_tol(d))?;
    let full_program = solver::build_primal(&e, &spaces);
    let stats_of = |reduced: &BlockSdp| ReductionStats {
        reduced_blocks: reduced.blocks.len(),
        reduced_real_vars: reduced.primal_real_variable_count(),
        full_blocks: full_program.blocks.len(),
        full_real_vars: full_program.primal_real_variable_count(),
    };
    let n = e.original_dim();

    let detectable: Vec<usize> = (0..r).filter(|&k| spaces[k].detectable).collect();
    if detectable.is_empty() {
        let solution = solver::solve_with_spaces(&e, &spaces, opts)?;
        let empty = BlockSdp {
            ambient_dim: d,
            blocks: vec![],
            bound: identity(d),
        };
        return Ok(CguSolution {
            solution,
            generator_pis: vec![CMat::zeros(n, n); r],
            stats: stats_of(&empty),
        });
    }

    let us: Vec<CMat> = c.group.elements().iter().map(|u| e.restrict(u)).collect();
    let blocks = detectable
        .iter()
        .map(|&k| {
            let th = spaces[k].theta.columns();
            let objective = symmetrize(&(th.adjoint() * &e.working_states()[k] * th))
                * C64::new(1.0 / r as f64, 0.0);
            let maps = us.iter().map(|u| u * th).collect();
            SdpBlock { objective, maps }
        })
        .collect();
    let p = BlockSdp {
        ambient_dim: d,
        blocks,
        bound: identity(d),
    };
    let stats = stats_of(&p);
    let s = run_reduced(&p, opts)?;

    let mut pi_gens_w = vec![CMat::zeros(d, d); r];
    for (bi, &k) in detectable.iter().enumerate() {
        let th = spaces[k].theta.columns();
        pi_gens_w[k] = symmetrize(&(th * &s.primal_blocks[bi] * th.adjoint()));
    }
    let mut working_ops = Vec::with_capacity(l * r);
    for u in &us {
        for pk in &pi_gens_w {
            working_ops.push(symmetrize(&(u * pk * u.adjoint())));
        }
    }
    let mut zw = CMat::zeros(d, d);
    for u in &us {
        zw += u.adjoint() * &s.dual * u;
    }
    zw = symmetrize(&zw) / C64::new(l as f64, 0.0);

    let generator_pis = pi_gens_w.iter().map(|p| e.expand(p)).collect();
    let solution = finish_expanded(&e, working_ops, &zw, s.gap, s.iterations, s.log);
    Ok(CguSolution {
        solution,
        generator_pis,
        stats,
    })
}

/// Group-averages a measurement for a single-generator orbit:
/// `Pi_bar_i = (1/m) sum_j U_j Pi_{r(j,i)} U_j*`. Preserves the detection
/// probability and makes the operators covariant.
pub fn symmetrize_measurement(g: &GUEnsemble, m_full: &Measurement) -> Result<Measurement> {
    let m = g.group.order();
    let n = g.group.dim();
    if m_full.operators.len() != m + 1 {
        return Err(Error::OperatorCountMismatch {
            expected: m,
            got: m_full.operators.len(),
        });
    }
    if m_full.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: m_full.dim(),
        });
    }
    let scale = C64::new(1.0 / m as f64, 0.0);
    let mut operators = vec![CMat::zeros(n, n); m + 1];
    for i in 0..m {
        let mut acc = CMat::zeros(n, n);
        for j in 0..m {
            let k = g.group.compose_index(j, i);
            let u = &g.group.elements()[j];
            acc += u * &m_full.operators[k + 1] * u.adjoint();
        }
        operators[i + 1] = symmetrize(&acc) * scale;
    }
    let mut pi0 = identity(n);
    for op in operators.iter().skip(1) {
        pi0 -= op;
    }
    operators[0] = symmetrize(&pi0);

    let e = g.expand()?;
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
    Ok(Measurement {
        operators,
        etas,
        p_detect,
        p_inconclusive,
    })
}
