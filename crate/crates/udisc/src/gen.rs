//! Seeded random instance generators. Every instance is feasible by
//! construction: each state is built with a prescribed kernel containing a
//! reserved direction unique to one state, so all signal spaces are nonzero.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::ensemble::StateEnsemble;
use crate::error::{Error, Result};
use crate::hermitian::{identity, symmetrize, trace_re, CMat, C64};
use crate::symmetry::{validate_group, CGUEnsemble, GUEnsemble, UnitaryGroup};

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_complex(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Haar-distributed unitary via QR of a complex Gaussian matrix with the
/// phase convention that makes the factorization unique.
pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    let g = gaussian_complex(rng, n, n);
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for k in 0..n {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 {
            d / C64::new(d.norm(), 0.0)
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..n {
            q[(i, k)] *= phase;
        }
    }
    q
}

fn random_priors(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..m).map(|_| rng.gen_range(0.2..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / sum).collect()
}

fn normalize_density(m: &CMat) -> CMat {
    let t = trace_re(m);
    symmetrize(m) / C64::new(t, 0.0)
}

/// States with prescribed ranks; state i's kernel contains one reserved
/// orthonormal direction per other state, so every signal space has
/// dimension at least one.
pub fn gen_random(dim: usize, states: usize, ranks: &[usize], seed: u64) -> Result<StateEnsemble> {
    if states < 1 || dim < 2 {
        return Err(Error::Generation(format!(
            "need dim >= 2 and states >= 1, got dim {dim}, states {states}"
        )));
    }
    if ranks.len() != states {
        return Err(Error::Generation(format!(
            "{} ranks given for {} states",
            ranks.len(),
            states
        )));
    }
    for (i, &r) in ranks.iter().enumerate() {
        if r < 1 || r + states - 1 > dim {
            return Err(Error::Generation(format!(
                "rank {r} for state {i} impossible: rank + (states - 1) = {} exceeds dim {dim}",
                r + states - 1
            )));
        }
    }
    let mut rng = rng_for(seed);
    let u = random_unitary(&mut rng, dim);
    let reserved: Vec<CMat> = (0..states).map(|i| u.columns(i, 1).into_owned()).collect();
    let mut ensemble_states = Vec::with_capacity(states);
    for (i, &rank) in ranks.iter().enumerate() {
        // project the other states' reserved directions out of the factor
        let mut proj = identity(dim);
        for (j, v) in reserved.iter().enumerate() {
            if j != i {
                proj -= v * v.adjoint();
            }
        }
        let g = &proj * gaussian_complex(&mut rng, dim, rank);
        ensemble_states.push(normalize_density(&(&g * g.adjoint())));
    }
    let priors = random_priors(&mut rng, states);
    StateEnsemble::new(ensemble_states, priors)
}

/// Two mixed states of rank dim-1 with one-dimensional signal spaces.
pub fn gen_pair(dim: usize, seed: u64) -> Result<StateEnsemble> {
    gen_random(dim, 2, &[dim - 1, dim - 1], seed)
}

/// States whose signal spaces are mutually orthogonal: each state occupies
/// a private block plus a block shared by all states, so its signal space
/// is exactly the private block.
pub fn gen_orthogonal(dim: usize, states: usize, seed: u64) -> Result<StateEnsemble> {
    if states < 1 || dim < states + 1 {
        return Err(Error::Generation(format!(
            "orthogonal construction needs dim >= states + 1, got dim {dim}, states {states}"
        )));
    }
    let mut rng = rng_for(seed);
    let u = random_unitary(&mut rng, dim);
    // private blocks of near-equal size filling dim minus one shared column
    let shared = dim - 1;
    let base = shared / states;
    let extra = shared % states;
    let mut start = 0usize;
    let mut ensemble_states = Vec::with_capacity(states);
    for i in 0..states {
        let b = base + usize::from(i < extra);
        let mut basis = CMat::zeros(dim, b + 1);
        for c in 0..b {
            basis.set_column(c, &u.column(start + c));
        }
        basis.set_column(b, &u.column(shared));
        start += b;
        let g = basis * gaussian_complex(&mut rng, b + 1, b + 1);
        ensemble_states.push(normalize_density(&(&g * g.adjoint())));
    }
    let priors = random_priors(&mut rng, states);
    StateEnsemble::new(ensemble_states, priors)
}

/// Cyclic group of order m generated by a diagonal phase unitary with
/// distinct per-coordinate exponents.
pub fn cyclic_phase_group(dim: usize, m: usize, seed: u64) -> Result<UnitaryGroup> {
    if m < 1 {
        return Err(Error::Generation("group order must be at least 1".into()));
    }
    if m > 1 && dim < 2 {
        return Err(Error::Generation(
            "cyclic phase group of order > 1 needs dim >= 2".into(),
        ));
    }
    let mut rng = rng_for(seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let w = random_unitary(&mut rng, dim);
    // exponent 1 at coordinate min(1, dim-1) guarantees the generator has
    // order exactly m
    let omega = 2.0 * std::f64::consts::PI / m as f64;
    let gen = CMat::from_fn(dim, dim, |i, j| {
        if i == j {
            C64::from_polar(1.0, omega * (i % m) as f64)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let gen = &w * gen * w.adjoint();
    let mut elements = Vec::with_capacity(m);
    let mut acc = identity(dim);
    for _ in 0..m {
        elements.push(acc.clone());
        acc *= &gen;
    }
    validate_group(elements)
}

fn random_pure_generator(rng: &mut ChaCha8Rng, dim: usize) -> CMat {
    let v = gaussian_complex(rng, dim, 1);
    let v = &v / C64::new(v.norm(), 0.0);
    &v * v.adjoint()
}

/// Geometrically uniform instance: cyclic phase group of order m (in a
/// random basis) acting on a random pure generator.
pub fn gen_gu(dim: usize, states: usize, seed: u64) -> Result<GUEnsemble> {
    if states > dim {
        return Err(Error::Generation(format!(
            "gu construction needs states <= dim, got states {states}, dim {dim}"
        )));
    }
    let group = cyclic_phase_group(dim, states, seed)?;
    let mut rng = rng_for(seed);
    let generator = random_pure_generator(&mut rng, dim);
    GUEnsemble::new(group, generator)
}

/// Compound instance: cyclic group of order l with r random pure
/// generators.
pub fn gen_cgu(dim: usize, l: usize, r: usize, seed: u64) -> Result<CGUEnsemble> {
    if l * r > dim {
        return Err(Error::Generation(format!(
            "cgu construction needs l * r <= dim, got {l} * {r} > {dim}"
        )));
    }
    let group = cyclic_phase_group(dim, l, seed)?;
    let mut rng = rng_for(seed);
    let generators = (0..r).map(|_| random_pure_generator(&mut rng, dim)).collect();
    CGUEnsemble::new(group, generators)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{check_feasibility, signal_spaces};
    use crate::hermitian::{default_rank_tol, max_abs};

    #[test]
    fn random_unitary_is_unitary_and_deterministic() {
        let mut rng = rng_for(3);
        let u = random_unitary(&mut rng, 5);
        assert!(max_abs(&(u.adjoint() * &u - identity(5))) < 1e-12);
        let mut rng2 = rng_for(3);
        let u2 = random_unitary(&mut rng2, 5);
        assert_eq!(u, u2);
    }

    #[test]
    fn random_instances_are_feasible() {
        for seed in 0..25 {
            let e = gen_random(5, 3, &[2, 1, 2], seed).unwrap();
            let rep = check_feasibility(&e).unwrap();
            assert!(rep.overall, "seed {seed}");
            let spaces = signal_spaces(&e, default_rank_tol(e.working_dim())).unwrap();
            for s in &spaces {
                assert!(s.theta.dim() >= 1, "seed {seed} state {}", s.index);
            }
        }
    }

    #[test]
    fn pair_instances_have_one_dim_signal_spaces() {
        for seed in 0..10 {
            let e = gen_pair(4, seed).unwrap();
            let spaces = signal_spaces(&e, default_rank_tol(e.working_dim())).unwrap();
            assert_eq!(spaces[0].theta.dim(), 1);
            assert_eq!(spaces[1].theta.dim(), 1);
            assert!(spaces[0].detectable && spaces[1].detectable);
        }
    }

    #[test]
    fn orthogonal_instances_pass_the_orthogonality_precondition() {
        for seed in 0..10 {
            let e = gen_orthogonal(5, 2, seed).unwrap();
            let spaces = signal_spaces(&e, default_rank_tol(e.working_dim())).unwrap();
            let overlap = max_abs(&(spaces[0].projector.matrix() * spaces[1].projector.matrix()));
            assert!(overlap <= 1e-10, "seed {seed}: overlap {overlap:.3e}");
        }
    }

    #[test]
    fn gu_instances_are_feasible() {
        for seed in 0..10 {
            let gu = gen_gu(4, 3, seed).unwrap();
            let e = gu.expand().unwrap();
            let rep = check_feasibility(&e).unwrap();
            assert!(rep.overall, "seed {seed}");
        }
    }

    #[test]
    fn cgu_instances_are_feasible() {
        for seed in 0..10 {
            let cgu = gen_cgu(6, 2, 2, seed).unwrap();
            let e = cgu.expand().unwrap();
            let rep = check_feasibility(&e).unwrap();
            assert!(rep.overall, "seed {seed}");
        }
    }

    #[test]
    fn impossible_rank_profile_is_rejected() {
        let err = gen_random(3, 3, &[2, 1, 1], 0).unwrap_err();
        assert!(matches!(err, Error::Generation(_)));
    }

    #[test]
    fn generation_is_deterministic() {
        let a = gen_random(4, 2, &[2, 2], 9).unwrap();
        let b = gen_random(4, 2, &[2, 2], 9).unwrap();
        for (x, y) in a.states().iter().zip(b.states()) {
            assert_eq!(x.matrix(), y.matrix());
        }
        assert_eq!(a.priors(), b.priors());
    }
}
