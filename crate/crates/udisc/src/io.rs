//! Canonical JSON serialization for instances, solution reports, and
//! simulation reports. Complex entries are encoded as [re, im] pairs, keys
//! are emitted in sorted order, and floats use a fixed 17-significant-digit
//! scientific format so that re-serialization is byte-identical.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ensemble::StateEnsemble;
use crate::error::{Error, Result};
use crate::hermitian::{max_abs, CMat, C64};
use crate::sim::SimulationRun;
use crate::solver::{DualCertificate, Measurement, OptimalityReport, Solution};
use crate::symmetry::{validate_group, CGUEnsemble, GUEnsemble};

/// dim x dim array of [re, im] pairs.
pub type MatrixData = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_data(m: &CMat) -> MatrixData {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn data_to_matrix(d: &MatrixData, context: &str) -> Result<CMat> {
    let rows = d.len();
    if rows == 0 {
        return Err(Error::InvalidInstance(format!("{context}: empty matrix")));
    }
    let cols = d[0].len();
    for (i, row) in d.iter().enumerate() {
        if row.len() != cols {
            return Err(Error::InvalidInstance(format!(
                "{context}: ragged matrix, row {i} has {} entries, row 0 has {cols}",
                row.len()
            )));
        }
    }
    Ok(CMat::from_fn(rows, cols, |i, j| {
        C64::new(d[i][j][0], d[i][j][1])
    }))
}

// fields declared alphabetically so struct serialization emits sorted keys

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct StateEntry {
    pub matrix: MatrixData,
    pub prior: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SymmetryBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generators: Option<Vec<MatrixData>>,
    pub kind: String,
    pub unitaries: Vec<MatrixData>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub dimension: usize,
    pub states: Vec<StateEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetry: Option<SymmetryBlock>,
}

/// Instance resolved into domain objects; the symmetry block, when present,
/// selects the reduced solvers.
#[derive(Debug, Clone)]
pub enum ParsedInstance {
    Plain(StateEnsemble),
    Gu(GUEnsemble),
    Cgu(CGUEnsemble),
}

impl ParsedInstance {
    pub fn ensemble(&self) -> Result<StateEnsemble> {
        match self {
            ParsedInstance::Plain(e) => Ok(e.clone()),
            ParsedInstance::Gu(g) => g.expand(),
            ParsedInstance::Cgu(c) => c.expand(),
        }
    }
}

/// Agreement tolerance between listed states and the group orbit of the
/// generator(s).
const ORBIT_TOL: f64 = 1e-8;

impl InstanceFile {
    pub fn from_ensemble(e: &StateEnsemble) -> Self {
        Self {
            dimension: e.original_dim(),
            states: e
                .states()
                .iter()
                .zip(e.priors())
                .map(|(s, &prior)| StateEntry {
                    matrix: matrix_to_data(s.matrix()),
                    prior,
                })
                .collect(),
            symmetry: None,
        }
    }

    pub fn from_gu(g: &GUEnsemble) -> Result<Self> {
        let e = g.expand()?;
        let mut f = Self::from_ensemble(&e);
        f.symmetry = Some(SymmetryBlock {
            generators: None,
            kind: "gu".into(),
            unitaries: g.group.elements().iter().map(matrix_to_data).collect(),
        });
        Ok(f)
    }

    pub fn from_cgu(c: &CGUEnsemble) -> Result<Self> {
        let e = c.expand()?;
        let mut f = Self::from_ensemble(&e);
        f.symmetry = Some(SymmetryBlock {
            generators: Some(
                c.generators
                    .iter()
                    .map(|g| matrix_to_data(g.matrix()))
                    .collect(),
            ),
            kind: "cgu".into(),
            unitaries: c.group.elements().iter().map(matrix_to_data).collect(),
        });
        Ok(f)
    }

    pub fn parse(&self) -> Result<ParsedInstance> {
        if self.states.is_empty() {
            return Err(Error::InvalidInstance("states: empty list".into()));
        }
        let n = self.dimension;
        let mut mats = Vec::with_capacity(self.states.len());
        let mut priors = Vec::with_capacity(self.states.len());
        for (i, s) in self.states.iter().enumerate() {
            let m = data_to_matrix(&s.matrix, &format!("states[{i}].matrix"))?;
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::InvalidInstance(format!(
                    "states[{i}].matrix: {}x{} does not match dimension {n}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            mats.push(m);
            priors.push(s.prior);
        }
        let e = StateEnsemble::new(mats, priors)?;
        let Some(sym) = &self.symmetry else {
            return Ok(ParsedInstance::Plain(e));
        };
        let elements = sym
            .unitaries
            .iter()
            .enumerate()
            .map(|(i, u)| data_to_matrix(u, &format!("symmetry.unitaries[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        let group = validate_group(elements)?;
        let uniform = 1.0 / e.len() as f64;
        for (index, &p) in e.priors().iter().enumerate() {
            if (p - uniform).abs() > 1e-9 {
                return Err(Error::NonUniformPriors { index, value: p });
            }
        }
        match sym.kind.as_str() {
            "gu" => {
                if group.order() != e.len() {
                    return Err(Error::InvalidInstance(format!(
                        "symmetry: group order {} does not match {} states",
                        group.order(),
                        e.len()
                    )));
                }
                let gu = GUEnsemble::new(group, e.states()[0].matrix().clone())?;
                check_orbit(&gu.expand()?, &e)?;
                Ok(ParsedInstance::Gu(gu))
            }
            "cgu" => {
                let gens = sym.generators.as_deref().ok_or_else(|| {
                    Error::InvalidInstance("symmetry: cgu requires generators".into())
                })?;
                let gens = gens
                    .iter()
                    .enumerate()
                    .map(|(i, g)| data_to_matrix(g, &format!("symmetry.generators[{i}]")))
                    .collect::<Result<Vec<_>>>()?;
                if group.order() * gens.len() != e.len() {
                    return Err(Error::InvalidInstance(format!(
                        "symmetry: group order {} times {} generators does not match {} states",
                        group.order(),
                        gens.len(),
                        e.len()
                    )));
                }
                let cgu = CGUEnsemble::new(group, gens)?;
                check_orbit(&cgu.expand()?, &e)?;
                Ok(ParsedInstance::Cgu(cgu))
            }
            other => Err(Error::InvalidInstance(format!(
                "symmetry.kind: expected \"gu\" or \"cgu\", got \"{other}\""
            ))),
        }
    }
}

fn check_orbit(orbit: &StateEnsemble, listed: &StateEnsemble) -> Result<()> {
    for i in 0..listed.len() {
        let dev = max_abs(&(orbit.states()[i].matrix() - listed.states()[i].matrix()));
        if dev > ORBIT_TOL {
            return Err(Error::InvalidInstance(format!(
                "states[{i}]: differs from the group orbit of the generator by {dev:.3e}"
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DualReport {
    pub trace: f64,
    pub z: MatrixData,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SolutionReport {
    pub dual: DualReport,
    pub etas: Vec<f64>,
    pub method: String,
    pub operators: Vec<MatrixData>,
    pub p_detect: f64,
    pub p_inconclusive: f64,
    pub residuals: BTreeMap<String, f64>,
    pub status: String,
}

impl SolutionReport {
    pub fn new(method: &str, sol: &Solution, rep: &OptimalityReport) -> Self {
        let mut residuals = BTreeMap::new();
        residuals.insert("z_min_eigenvalue".into(), rep.z_psd);
        residuals.insert(
            "dual_feasibility_min_eigenvalue".into(),
            rep.dual_feas.iter().copied().fold(0.0_f64, f64::min),
        );
        residuals.insert("inconclusive_slack".into(), rep.slack_residual);
        residuals.insert(
            "block_slackness".into(),
            rep.block_residuals.iter().copied().fold(0.0_f64, f64::max),
        );
        residuals.insert("trace_gap".into(), rep.gap_residual);
        residuals.insert("completeness".into(), rep.completeness_residual);
        residuals.insert("cross_trace".into(), rep.cross_trace_residual);
        residuals.insert("solver_gap".into(), sol.gap);
        Self {
            dual: DualReport {
                trace: sol.certificate.trace,
                z: matrix_to_data(&sol.certificate.z),
            },
            etas: sol.measurement.etas.clone(),
            method: method.into(),
            operators: sol.measurement.operators.iter().map(matrix_to_data).collect(),
            p_detect: sol.measurement.p_detect,
            p_inconclusive: sol.measurement.p_inconclusive,
            residuals,
            status: if rep.pass { "optimal".into() } else { "unverified".into() },
        }
    }

    pub fn to_measurement(&self) -> Result<(Measurement, DualCertificate)> {
        let operators = self
            .operators
            .iter()
            .enumerate()
            .map(|(i, d)| data_to_matrix(d, &format!("operators[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        let z = data_to_matrix(&self.dual.z, "dual.z")?;
        Ok((
            Measurement {
                operators,
                etas: self.etas.clone(),
                p_detect: self.p_detect,
                p_inconclusive: self.p_inconclusive,
            },
            DualCertificate {
                z,
                trace: self.dual.trace,
            },
        ))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SimulationReport {
    pub counts: Vec<Vec<u64>>,
    pub empirical_etas: Vec<f64>,
    pub seed: u64,
    pub shots: u64,
    pub wrong_detections: u64,
}

impl SimulationReport {
    pub fn new(run: &SimulationRun) -> Self {
        Self {
            counts: run.counts.clone(),
            empirical_etas: run.empirical_etas.clone(),
            seed: run.seed,
            shots: run.shots,
            wrong_detections: run.wrong_detections,
        }
    }
}

/// serde_json formatter writing every float as zero-normalized
/// 17-significant-digit scientific notation.
struct CanonicalFormatter;

impl serde_json::ser::Formatter for CanonicalFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        let value = if value == 0.0 { 0.0 } else { value };
        write!(writer, "{value:.16e}")
    }
}

pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, CanonicalFormatter);
    value.serialize(&mut ser)?;
    out.push(b'\n');
    String::from_utf8(out)
        .map_err(|e| Error::InvalidInstance(format!("non-utf8 serializer output: {e}")))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = to_canonical_json(value)?;
    let mut f = std::fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;
    use crate::sdp::SdpOptions;
    use crate::solver::{self, verify_optimality};

    #[test]
    fn instance_round_trip_is_byte_identical() {
        let e = gen::gen_random(4, 2, &[2, 2], 11).unwrap();
        let f = InstanceFile::from_ensemble(&e);
        let text = to_canonical_json(&f).unwrap();
        let parsed: InstanceFile = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed, f);
        let text2 = to_canonical_json(&parsed).unwrap();
        assert_eq!(text, text2);
    }

    #[test]
    fn parse_recovers_the_ensemble() {
        let e = gen::gen_pair(3, 5).unwrap();
        let f = InstanceFile::from_ensemble(&e);
        let ParsedInstance::Plain(back) = f.parse().unwrap() else {
            panic!("expected plain instance");
        };
        for (a, b) in back.states().iter().zip(e.states()) {
            assert!(max_abs(&(a.matrix() - b.matrix())) < 1e-14);
        }
        assert_eq!(back.priors(), e.priors());
    }

    #[test]
    fn gu_round_trip_preserves_the_symmetry_block() {
        let gu = gen::gen_gu(4, 3, 2).unwrap();
        let f = InstanceFile::from_gu(&gu).unwrap();
        let text = to_canonical_json(&f).unwrap();
        let parsed: InstanceFile = serde_json::from_str(&text).unwrap();
        let ParsedInstance::Gu(back) = parsed.parse().unwrap() else {
            panic!("expected gu instance");
        };
        assert_eq!(back.group.order(), 3);
        assert!(max_abs(&(back.generator.matrix() - gu.generator.matrix())) < 1e-12);
    }

    #[test]
    fn cgu_round_trip_preserves_generators() {
        let cgu = gen::gen_cgu(6, 2, 2, 3).unwrap();
        let f = InstanceFile::from_cgu(&cgu).unwrap();
        let text = to_canonical_json(&f).unwrap();
        let parsed: InstanceFile = serde_json::from_str(&text).unwrap();
        let ParsedInstance::Cgu(back) = parsed.parse().unwrap() else {
            panic!("expected cgu instance");
        };
        assert_eq!(back.generators.len(), 2);
    }

    #[test]
    fn ragged_matrix_is_rejected_with_field_path() {
        let mut f = InstanceFile::from_ensemble(&gen::gen_pair(3, 0).unwrap());
        f.states[1].matrix[2].pop();
        let err = f.parse().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("states[1].matrix"), "{msg}");
    }

    #[test]
    fn orbit_mismatch_is_rejected() {
        let gu = gen::gen_gu(4, 3, 7).unwrap();
        let mut f = InstanceFile::from_gu(&gu).unwrap();
        f.states.swap(1, 2);
        let err = f.parse().unwrap_err();
        assert!(matches!(err, Error::InvalidInstance(_)));
    }

    #[test]
    fn nonuniform_priors_with_symmetry_are_rejected() {
        let gu = gen::gen_gu(4, 3, 8).unwrap();
        let mut f = InstanceFile::from_gu(&gu).unwrap();
        f.states[0].prior = 0.5;
        f.states[1].prior = 0.25;
        f.states[2].prior = 0.25;
        let err = f.parse().unwrap_err();
        assert!(matches!(err, Error::NonUniformPriors { .. }));
    }

    #[test]
    fn solution_report_round_trip() {
        let e = gen::gen_pair(3, 9).unwrap();
        let sol = solver::solve(&e, &SdpOptions::default()).unwrap();
        let rep = verify_optimality(&e, &sol.measurement, &sol.certificate, 1e-6).unwrap();
        let report = SolutionReport::new("sdp", &sol, &rep);
        let text = to_canonical_json(&report).unwrap();
        let parsed: SolutionReport = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed, report);
        assert_eq!(to_canonical_json(&parsed).unwrap(), text);
        let (m, c) = parsed.to_measurement().unwrap();
        let rep2 = verify_optimality(&e, &m, &c, 1e-6).unwrap();
        assert!(rep2.pass);
    }

    #[test]
    fn negative_zero_is_normalized() {
        let text = to_canonical_json(&vec![-0.0_f64]).unwrap();
        assert_eq!(text, "[0.0000000000000000e0]\n");
    }

    #[test]
    fn canonical_floats_survive_parsing() {
        for &x in &[1.0, -1.0 / 3.0, 2.0_f64.sqrt(), 1e-300, -2.5e300] {
            let text = to_canonical_json(&vec![x]).unwrap();
            let back: Vec<f64> = serde_json::from_str(&text).unwrap();
            assert_eq!(back[0], x);
        }
    }
}
