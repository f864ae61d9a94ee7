//! Monte Carlo validation of a solved measurement: draws outcomes from the
//! Born distribution Tr(rho_j Pi_i) per true state and counts conclusive
//! hits, inconclusive results, and misidentifications.

use rand::distributions::WeightedIndex;
use rand::prelude::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ensemble::StateEnsemble;
use crate::error::{Error, Result};
use crate::hermitian::inner;
use crate::solver::Measurement;

/// Born probabilities in [-1e-8, 0) count as numerical dust and are
/// clipped to zero; anything below is a real constraint violation.
pub const CLIP_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct SimulationRun {
    pub shots: u64,
    pub seed: u64,
    /// counts[i][j]: outcome i (0 = inconclusive) when the true state is j.
    pub counts: Vec<Vec<u64>>,
    /// Per-state shot allocations round(shots * p_j).
    pub per_state_shots: Vec<u64>,
    /// Conclusive-hit frequency per state, counts[j+1][j] / N_j.
    pub empirical_etas: Vec<f64>,
    /// Events (outcome i, state j) with i != 0 and i != j + 1.
    pub wrong_detections: u64,
}

/// Clips numerical dust, renormalizes, and rejects genuinely negative
/// probabilities.
pub fn born_distribution(e: &StateEnsemble, m: &Measurement, state: usize) -> Result<Vec<f64>> {
    let rho = e.states()[state].matrix();
    let mut probs = Vec::with_capacity(m.operators.len());
    for (outcome, op) in m.operators.iter().enumerate() {
        let p = inner(rho, op);
        if p < -CLIP_TOL {
            return Err(Error::NegativeProbability {
                outcome,
                state,
                value: p,
            });
        }
        probs.push(p.max(0.0));
    }
    let total: f64 = probs.iter().sum();
    if total <= 0.0 {
        return Err(Error::NumericalFailure(format!(
            "outcome distribution for state {state} sums to {total:.3e}"
        )));
    }
    for p in &mut probs {
        *p /= total;
    }
    Ok(probs)
}

pub fn simulate(
    e: &StateEnsemble,
    m: &Measurement,
    shots: u64,
    seed: u64,
) -> Result<SimulationRun> {
    let n_states = e.len();
    if m.operators.len() != n_states + 1 {
        return Err(Error::OperatorCountMismatch {
            expected: n_states,
            got: m.operators.len(),
        });
    }
    let n_outcomes = n_states + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![vec![0u64; n_states]; n_outcomes];
    let mut per_state_shots = Vec::with_capacity(n_states);
    let mut empirical_etas = Vec::with_capacity(n_states);
    let mut wrong_detections = 0u64;
    for j in 0..n_states {
        let nj = (shots as f64 * e.priors()[j]).round() as u64;
        per_state_shots.push(nj);
        let probs = born_distribution(e, m, j)?;
        let dist = WeightedIndex::new(&probs)
            .map_err(|err| Error::NumericalFailure(format!("weighted sampling: {err}")))?;
        for _ in 0..nj {
            let outcome = dist.sample(&mut rng);
            counts[outcome][j] += 1;
            if outcome != 0 && outcome != j + 1 {
                wrong_detections += 1;
            }
        }
        let eta = if nj > 0 {
            counts[j + 1][j] as f64 / nj as f64
        } else {
            0.0
        };
        empirical_etas.push(eta);
    }
    Ok(SimulationRun {
        shots,
        seed,
        counts,
        per_state_shots,
        empirical_etas,
        wrong_detections,
    })
}
