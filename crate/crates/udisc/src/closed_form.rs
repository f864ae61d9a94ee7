//! Analytic solvers for two special cases: mutually orthogonal signal spaces,
//! and a pair of states with one-dimensional signal spaces. Each returns the
//! measurement together with the exact dual matrix.

use crate::ensemble::{SignalSpace, StateEnsemble};
use crate::error::{Error, Result};
use crate::hermitian::{max_abs, symmetrize, trace_re, CMat, SubspaceBasis, C64, ORTHO_TOL};
use crate::solver::{assemble_measurement, DualCertificate, Solution};

/// Overlap below which a pair is treated as orthogonal and routed to the
/// projector solution (the interior formulas divide by |f|).
pub const PAIR_F_TOL: f64 = 1e-9;
/// |f| this close to 1 means the two signal spaces coincide.
pub const PAIR_DEGENERATE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchTag {
    /// d2 - d1 |f|^2 <= 0: only the first state is detected.
    FirstDominant,
    /// d1 - d2 |f|^2 <= 0: only the second state is detected.
    SecondDominant,
    Interior,
}

/// Scalar geometry of a detectable pair with one-dimensional signal spaces.
#[derive(Debug, Clone)]
pub struct PairGeometry {
    /// d_i = p_i Theta_i* rho_i Theta_i.
    pub d1: f64,
    pub d2: f64,
    /// f = Theta_2* Theta_1.
    pub f: C64,
    /// e = (Theta_2_perp)* Theta_1; real positive by construction.
    pub e: C64,
    /// Interior-branch dual parameter; zero on the boundary branches.
    pub s: C64,
    /// Unit vector in span{Theta_1, Theta_2} orthogonal to Theta_2.
    pub theta2_perp: SubspaceBasis,
    pub branch: BranchTag,
}

/// Measurement and dual for mutually orthogonal signal spaces:
/// Pi_i = P_i = Theta_i Theta_i*, Z = sum p_i P_i rho_i P_i.
pub fn solve_orthogonal(e: &StateEnsemble, spaces: &[SignalSpace]) -> Result<Solution> {
    for i in 0..spaces.len() {
        for j in (i + 1)..spaces.len() {
            let overlap = max_abs(&(spaces[i].projector.matrix() * spaces[j].projector.matrix()));
            if overlap > ORTHO_TOL {
                return Err(Error::NotOrthogonal { i, j, overlap });
            }
        }
    }

    let d = e.working_dim();
    let deltas: Vec<CMat> = spaces
        .iter()
        .filter(|s| s.detectable)
        .map(|s| CMat::identity(s.theta.dim(), s.theta.dim()))
        .collect();
    let measurement = assemble_measurement(e, spaces, &deltas);

    let mut zw = CMat::zeros(d, d);
    for s in spaces {
        if !s.detectable {
            continue;
        }
        let p = s.projector.matrix();
        zw += p * &e.working_states()[s.index] * p * C64::new(e.priors()[s.index], 0.0);
    }
    let z = e.expand(&symmetrize(&zw));
    let trace = trace_re(&z);
    Ok(Solution {
        measurement,
        certificate: DualCertificate { z, trace },
        gap: 0.0,
        iterations: 0,
        log: vec![],
        note: None,
    })
}

/// Scalar data of a two-state instance whose signal spaces are both lines.
pub fn pair_geometry(e: &StateEnsemble, spaces: &[SignalSpace]) -> Result<PairGeometry> {
    if e.len() != 2 || spaces.len() != 2 {
        return Err(Error::PairPrecondition(format!(
            "exactly two states (got {})",
            e.len()
        )));
    }
    for s in spaces {
        if s.theta.dim() != 1 {
            return Err(Error::PairPrecondition(format!(
                "one-dimensional signal spaces (state {} has dimension {})",
                s.index,
                s.theta.dim()
            )));
        }
        if !s.detectable {
            return Err(Error::PairPrecondition(format!(
                "both states detectable (state {} is not)",
                s.index
            )));
        }
    }
    let th1 = spaces[0].theta.columns();
    let th2 = spaces[1].theta.columns();
    let d1 = e.priors()[0] * (th1.adjoint() * &e.working_states()[0] * th1)[(0, 0)].re;
    let d2 = e.priors()[1] * (th2.adjoint() * &e.working_states()[1] * th2)[(0, 0)].re;
    let f = (th2.adjoint() * th1)[(0, 0)];

    // Theta_2_perp: Gram-Schmidt of Theta_1 against Theta_2, so e is real
    // positive and |e|^2 + |f|^2 = 1.
    let w = th1 - th2 * f;
    let wn = w.norm();
    if wn < PAIR_DEGENERATE_TOL || f.norm() > 1.0 - PAIR_DEGENERATE_TOL {
        return Err(Error::DegeneratePair);
    }
    let theta2_perp = SubspaceBasis::new_unchecked(&w / C64::new(wn, 0.0));
    let ev = (theta2_perp.columns().adjoint() * th1)[(0, 0)];

    let f2 = f.norm_sqr();
    let branch = if d2 - d1 * f2 <= 0.0 {
        BranchTag::FirstDominant
    } else if d1 - d2 * f2 <= 0.0 {
        BranchTag::SecondDominant
    } else {
        BranchTag::Interior
    };
    let s = if branch == BranchTag::Interior && f.norm() > PAIR_F_TOL {
        (f.conj() / ev.conj()) * C64::new((d1 / (d2 * f2)).sqrt() - 1.0, 0.0)
    } else {
        C64::new(0.0, 0.0)
    };

    Ok(PairGeometry {
        d1,
        d2,
        f,
        e: ev,
        s,
        theta2_perp,
        branch,
    })
}

/// Closed-form solution for a detectable pair with one-dimensional signal
/// spaces. Orthogonal pairs (f = 0) fall through to the projector solution.
pub fn solve_rank1_pair(e: &StateEnsemble, spaces: &[SignalSpace]) -> Result<Solution> {
    let g = pair_geometry(e, spaces)?;
    if g.f.norm() <= PAIR_F_TOL {
        return solve_orthogonal(e, spaces);
    }
    let th1 = spaces[0].theta.columns();
    let th2 = spaces[1].theta.columns();
    let one = CMat::from_element(1, 1, C64::new(1.0, 0.0));
    let zero = CMat::from_element(1, 1, C64::new(0.0, 0.0));

    let (deltas, zw) = match g.branch {
        BranchTag::FirstDominant => {
            let z = th1 * th1.adjoint() * C64::new(g.d1, 0.0);
            (vec![one, zero], z)
        }
        BranchTag::SecondDominant => {
            let z = th2 * th2.adjoint() * C64::new(g.d2, 0.0);
            (vec![zero, one], z)
        }
        BranchTag::Interior => {
            let f2 = g.f.norm_sqr();
            let a1 = (1.0 - (g.d2 * f2 / g.d1).sqrt()) / (1.0 - f2);
            let a2 = (1.0 - (g.d1 * f2 / g.d2).sqrt()) / (1.0 - f2);
            let v = th2 + g.theta2_perp.columns() * g.s;
            let z = &v * v.adjoint() * C64::new(g.d2, 0.0);
            (
                vec![
                    CMat::from_element(1, 1, C64::new(a1, 0.0)),
                    CMat::from_element(1, 1, C64::new(a2, 0.0)),
                ],
                z,
            )
        }
    };

    let measurement = assemble_measurement(e, spaces, &deltas);
    let z = e.expand(&symmetrize(&zw));
    let trace = trace_re(&z);
    Ok(Solution {
        measurement,
        certificate: DualCertificate { z, trace },
        gap: 0.0,
        iterations: 0,
        log: vec![],
        note: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::signal_spaces;
    use crate::hermitian::{default_rank_tol, identity, inner};
    use crate::sdp::SdpOptions;
    use crate::solver::{solve as sdp_solve, verify_optimality};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn pure(v: &[C64]) -> CMat {
        let n = v.len();
        let col = CMat::from_fn(n, 1, |i, _| v[i]);
        &col * col.adjoint()
    }

    fn spaces_of(e: &StateEnsemble) -> Vec<SignalSpace> {
        signal_spaces(e, default_rank_tol(e.working_dim())).unwrap()
    }

    fn overlapping_pair(p1: f64) -> StateEnsemble {
        let s = 1.0 / 2.0_f64.sqrt();
        StateEnsemble::new(
            vec![
                pure(&[c(1.0, 0.0), c(0.0, 0.0)]),
                pure(&[c(s, 0.0), c(s, 0.0)]),
            ],
            vec![p1, 1.0 - p1],
        )
        .unwrap()
    }

    #[test]
    fn orthogonal_pure_pair() {
        let e = StateEnsemble::new(
            vec![
                pure(&[c(1.0, 0.0), c(0.0, 0.0)]),
                pure(&[c(0.0, 0.0), c(1.0, 0.0)]),
            ],
            vec![0.5, 0.5],
        )
        .unwrap();
        let spaces = spaces_of(&e);
        let sol = solve_orthogonal(&e, &spaces).unwrap();
        assert!((sol.measurement.p_detect - 1.0).abs() < 1e-12);
        // Z = (rho_1 + rho_2)/2
        let expected = (e.states()[0].matrix() + e.states()[1].matrix()) * c(0.5, 0.0);
        assert!(max_abs(&(&sol.certificate.z - expected)) < 1e-12);
        let rep = verify_optimality(&e, &sol.measurement, &sol.certificate, 1e-8).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn orthogonal_mixed_dim3() {
        let mut r1 = CMat::zeros(3, 3);
        r1[(0, 0)] = c(0.5, 0.0);
        r1[(1, 1)] = c(0.5, 0.0);
        let mut r2 = CMat::zeros(3, 3);
        r2[(1, 1)] = c(0.5, 0.0);
        r2[(2, 2)] = c(0.5, 0.0);
        let e = StateEnsemble::new(vec![r1, r2], vec![0.5, 0.5]).unwrap();
        let spaces = spaces_of(&e);
        let sol = solve_orthogonal(&e, &spaces).unwrap();
        assert!((sol.measurement.p_detect - 0.5).abs() < 1e-12);
        assert!((sol.certificate.trace - 0.5).abs() < 1e-12);
        let rep = verify_optimality(&e, &sol.measurement, &sol.certificate, 1e-8).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn orthogonal_rejects_overlapping_spaces() {
        let e = overlapping_pair(0.5);
        let spaces = spaces_of(&e);
        let err = solve_orthogonal(&e, &spaces).unwrap_err();
        assert!(matches!(err, Error::NotOrthogonal { .. }));
    }

    #[test]
    fn pair_geometry_benchmark() {
        let e = overlapping_pair(0.5);
        let spaces = spaces_of(&e);
        let g = pair_geometry(&e, &spaces).unwrap();
        assert!((g.d1 - 0.25).abs() < 1e-12);
        assert!((g.d2 - 0.25).abs() < 1e-12);
        assert!((g.f.norm_sqr() - 0.5).abs() < 1e-12);
        assert!((g.e.norm_sqr() + g.f.norm_sqr() - 1.0).abs() < 1e-9);
        assert!(g.e.im.abs() < 1e-12 && g.e.re > 0.0);
        assert_eq!(g.branch, BranchTag::Interior);
    }

    #[test]
    fn pair_geometry_branch_by_priors() {
        let e = overlapping_pair(0.9);
        let g = pair_geometry(&e, &spaces_of(&e)).unwrap();
        assert!((g.d1 - 0.45).abs() < 1e-12);
        assert!((g.d2 - 0.05).abs() < 1e-12);
        assert_eq!(g.branch, BranchTag::FirstDominant);

        let e = overlapping_pair(0.1);
        let g = pair_geometry(&e, &spaces_of(&e)).unwrap();
        assert_eq!(g.branch, BranchTag::SecondDominant);
    }

    #[test]
    fn pair_rejects_identical_supports() {
        // same pure state twice: signal spaces are empty, not detectable
        let e = StateEnsemble::new(
            vec![
                pure(&[c(1.0, 0.0), c(0.0, 0.0)]),
                pure(&[c(1.0, 0.0), c(0.0, 0.0)]),
            ],
            vec![0.5, 0.5],
        )
        .unwrap();
        let err = pair_geometry(&e, &spaces_of(&e)).unwrap_err();
        assert!(matches!(err, Error::PairPrecondition(_)));
    }

    #[test]
    fn interior_branch_benchmark() {
        let e = overlapping_pair(0.5);
        let spaces = spaces_of(&e);
        let sol = solve_rank1_pair(&e, &spaces).unwrap();
        let alpha = 2.0 - 2.0_f64.sqrt();
        let expected = 1.0 - 1.0 / 2.0_f64.sqrt();
        assert!((sol.measurement.p_detect - expected).abs() < 1e-12);
        assert!((sol.measurement.etas[0] - alpha * 0.5).abs() < 1e-9);
        assert!((sol.certificate.trace - expected).abs() < 1e-9);
        let rep = verify_optimality(&e, &sol.measurement, &sol.certificate, 1e-8).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn first_dominant_branch() {
        let e = overlapping_pair(0.9);
        let spaces = spaces_of(&e);
        let sol = solve_rank1_pair(&e, &spaces).unwrap();
        assert!((sol.measurement.p_detect - 0.45).abs() < 1e-12);
        assert!((sol.certificate.trace - 0.45).abs() < 1e-12);
        assert!(max_abs(&sol.measurement.operators[2]) < 1e-12);
        let rep = verify_optimality(&e, &sol.measurement, &sol.certificate, 1e-8).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn orthogonal_pair_routes_through_projector_path() {
        let e = StateEnsemble::new(
            vec![
                pure(&[c(1.0, 0.0), c(0.0, 0.0)]),
                pure(&[c(0.0, 0.0), c(1.0, 0.0)]),
            ],
            vec![0.5, 0.5],
        )
        .unwrap();
        let spaces = spaces_of(&e);
        let sol = solve_rank1_pair(&e, &spaces).unwrap();
        assert!((sol.measurement.p_detect - 1.0).abs() < 1e-12);
    }

    fn random_pure_pair(seed: u64) -> StateEnsemble {
        let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(11);
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 33) as f64) / (1u64 << 31) as f64 - 1.0
        };
        loop {
            let mut u1 = CMat::from_fn(2, 1, |_, _| c(next(), next()));
            let mut u2 = CMat::from_fn(2, 1, |_, _| c(next(), next()));
            u1 /= c(u1.norm(), 0.0);
            u2 /= c(u2.norm(), 0.0);
            let overlap = (u1.adjoint() * &u2)[(0, 0)].norm();
            if overlap > 0.999 {
                continue;
            }
            let p1 = 0.05 + 0.9 * (next() + 1.0) / 2.0;
            return StateEnsemble::new(
                vec![&u1 * u1.adjoint(), &u2 * u2.adjoint()],
                vec![p1, 1.0 - p1],
            )
            .unwrap();
        }
    }

    #[test]
    fn closed_form_matches_sdp_on_random_pairs() {
        for seed in 0..20u64 {
            let e = random_pure_pair(seed);
            let spaces = spaces_of(&e);
            let cf = solve_rank1_pair(&e, &spaces).unwrap();
            let num = sdp_solve(&e, &SdpOptions::default()).unwrap();
            assert!(
                (cf.measurement.p_detect - num.measurement.p_detect).abs() <= 1e-6,
                "seed {seed}: {} vs {}",
                cf.measurement.p_detect,
                num.measurement.p_detect
            );
            let rep = verify_optimality(&e, &cf.measurement, &cf.certificate, 1e-8).unwrap();
            assert!(rep.pass, "seed {seed}: {rep:?}");
        }
    }

    #[test]
    fn interior_consistency_and_ordering() {
        for seed in 0..20u64 {
            let e = random_pure_pair(seed.wrapping_add(1000));
            let spaces = spaces_of(&e);
            let g = pair_geometry(&e, &spaces).unwrap();
            if g.branch != BranchTag::Interior {
                continue;
            }
            let sol = solve_rank1_pair(&e, &spaces).unwrap();
            let f2 = g.f.norm_sqr();
            let a1 = (1.0 - (g.d2 * f2 / g.d1).sqrt()) / (1.0 - f2);
            let a2 = (1.0 - (g.d1 * f2 / g.d2).sqrt()) / (1.0 - f2);
            assert!(a1 > 0.0 && a1 <= 1.0 + 1e-12);
            assert!(a2 > 0.0 && a2 <= 1.0 + 1e-12);
            let tz = g.d2 * (1.0 + g.s.norm_sqr());
            assert!((tz - sol.measurement.p_detect).abs() <= 1e-9);
            assert!(tz >= g.d1.max(g.d2) - 1e-9);
        }
    }

    #[test]
    fn branch_boundary_continuity() {
        // walk the prior across the FirstDominant/Interior boundary
        let mut prev: Option<f64> = None;
        let mut p1 = 0.60;
        while p1 <= 0.75 {
            let e = overlapping_pair(p1);
            let sol = solve_rank1_pair(&e, &spaces_of(&e)).unwrap();
            if let Some(last) = prev {
                assert!(
                    (sol.measurement.p_detect - last).abs() <= 1e-2 * 1e-3 + 1e-3,
                    "jump at p1 = {p1}"
                );
            }
            prev = Some(sol.measurement.p_detect);
            p1 += 1e-3;
        }
    }

    #[test]
    fn dual_phase_invariance() {
        // multiplying Theta_1 by a phase must not change Z
        let e = overlapping_pair(0.5);
        let spaces = spaces_of(&e);
        let sol = solve_rank1_pair(&e, &spaces).unwrap();

        let mut spaces2 = spaces.clone();
        let phase = C64::from_polar(1.0, 1.234);
        let th = spaces2[0].theta.columns() * phase;
        spaces2[0].theta = SubspaceBasis::new_unchecked(th);
        let sol2 = solve_rank1_pair(&e, &spaces2).unwrap();
        assert!(max_abs(&(&sol.certificate.z - &sol2.certificate.z)) < 1e-12);
        assert!((sol.measurement.p_detect - sol2.measurement.p_detect).abs() < 1e-12);
    }

    #[test]
    fn completeness_of_assembled_measurements() {
        for p1 in [0.1, 0.5, 0.9] {
            let e = overlapping_pair(p1);
            let sol = solve_rank1_pair(&e, &spaces_of(&e)).unwrap();
            let mut sum = CMat::zeros(2, 2);
            for op in &sol.measurement.operators {
                sum += op;
            }
            assert!(max_abs(&(&sum - identity(2))) < 1e-12);
            for (i, rho) in e.states().iter().enumerate() {
                for (j, op) in sol.measurement.operators.iter().enumerate().skip(1) {
                    if j - 1 != i {
                        assert!(inner(rho.matrix(), op).abs() < 1e-10);
                    }
                }
            }
        }
    }
}
