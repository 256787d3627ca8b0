//! Problem generators, JSON input/output, analysis reports, and brute-force
//! oracles for desk-scale verification.

pub mod oracles;

use crate::certificate::{
    self, CertificateSearch, CheckFailure, Objective,
};
use crate::cone::{self, Violation};
use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::face::{Detection, FaceResult};
use crate::linalg;
use crate::operator::{GroundTruth, MeasurementSet};
use crate::regularize::{self, RegularizationLog, RegularizationStatus};
use crate::rng::{self, tags};
use crate::symmat::SymMat;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::time::Instant;

/// Construction recipe for a planted-face test instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedFaceSpec {
    pub n: usize,
    pub x0: Vec<f64>,
    /// Orthonormal directions orthogonal to `x0`; each contributes the
    /// measurement `<X, q q*> = 0`, planting the ray `q q*` into the face.
    pub rays: Vec<Vec<f64>>,
    /// Number of generic filler measurements.
    pub fillers: usize,
    pub seed: u64,
}

/// Where an instance came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Example1,
    PhaseLift { n: usize, m: usize, seed: u64 },
    SparsePhaseLift { n: usize, m: usize, k: usize, seed: u64 },
    PlantedFace { spec: PlantedFaceSpec },
    File { path: String },
}

/// A fully specified problem: measurements, ground truth, objective.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub ms: MeasurementSet,
    pub gt: GroundTruth,
    pub obj: Objective,
    pub provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
struct MeasurementJson {
    matrix: SymMat,
    value: f64,
}

#[derive(Serialize, Deserialize)]
struct InstanceJson {
    n: usize,
    x0: Vec<f64>,
    measurements: Vec<MeasurementJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    objective: Option<Objective>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<Provenance>,
}

impl ProblemInstance {
    pub fn new(
        ms: MeasurementSet,
        gt: GroundTruth,
        obj: Objective,
        provenance: Provenance,
    ) -> Result<Self> {
        ms.check_consistency(&gt, 1e-6)?;
        obj.validate(ms.n())?;
        Ok(ProblemInstance {
            ms,
            gt,
            obj,
            provenance,
        })
    }

    pub fn to_json_string(&self) -> Result<String> {
        let mats = self.ms.mats();
        let vals = self.ms.values();
        let json = InstanceJson {
            n: self.ms.n(),
            x0: self.gt.x0().to_vec(),
            measurements: mats
                .iter()
                .zip(vals)
                .map(|(m, v)| MeasurementJson {
                    matrix: m.clone(),
                    value: *v,
                })
                .collect(),
            objective: Some(self.obj.clone()),
            provenance: Some(self.provenance.clone()),
        };
        Ok(serde_json::to_string_pretty(&json)?)
    }

    pub fn from_json_str(s: &str, origin: Option<&str>) -> Result<Self> {
        let json: InstanceJson = serde_json::from_str(s)?;
        let gt = GroundTruth::new(json.x0)?;
        let (mats, values): (Vec<_>, Vec<_>) = json
            .measurements
            .into_iter()
            .map(|m| (m.matrix, m.value))
            .unzip();
        let ms = MeasurementSet::from_parts(json.n, mats, values)?;
        let obj = json.objective.unwrap_or(Objective::Trace);
        let provenance = json.provenance.unwrap_or_else(|| Provenance::File {
            path: origin.unwrap_or("<string>").to_string(),
        });
        ProblemInstance::new(ms, gt, obj, provenance)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json_string()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text, path.to_str())
    }
}

/// The two-measurement instance with a PSD measurement orthogonal to the
/// ground truth: `x0 = e1`, `A1 = diag(0,1)` with value 0, `A2` all-ones with
/// value 1, Frobenius objective. Its only feasible point is `X0` and no dual
/// certificate exists until the implied measurement is appended.
pub fn gen_example1() -> ProblemInstance {
    let a1 = SymMat::from_dense(&[vec![0.0, 0.0], vec![0.0, 1.0]]).expect("static");
    let a2 = SymMat::from_dense(&[vec![1.0, 1.0], vec![1.0, 1.0]]).expect("static");
    let ms = MeasurementSet::from_parts(2, vec![a1, a2], vec![0.0, 1.0]).expect("static");
    let gt = GroundTruth::new(vec![1.0, 0.0]).expect("static");
    ProblemInstance::new(ms, gt, Objective::HalfFroSq, Provenance::Example1).expect("static")
}

fn gaussian_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Rank-one sensing: `A_i = z_i z_i*` for i.i.d. Gaussian `z_i`, values
/// `b_i = (z_i . x0)^2`, trace objective.
pub fn gen_phaselift(n: usize, m: usize, seed: u64) -> Result<ProblemInstance> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidInput("n and m must be positive".into()));
    }
    let mut rng = rng::substream(seed, tags::GEN_PHASELIFT);
    let x0 = gaussian_vec(&mut rng, n);
    let gt = GroundTruth::new(x0)?;
    let mut ms = MeasurementSet::new(n)?;
    for _ in 0..m {
        let z = gaussian_vec(&mut rng, n);
        let b = linalg::dot(&z, gt.x0()).powi(2);
        ms.push(SymMat::outer(&z), b)?;
    }
    ProblemInstance::new(ms, gt, Objective::Trace, Provenance::PhaseLift { n, m, seed })
}

/// Sparse variant: `x0` supported on `k` coordinates, l1-plus-trace
/// objective.
pub fn gen_sparse_phaselift(n: usize, m: usize, k: usize, seed: u64) -> Result<ProblemInstance> {
    if n == 0 || m == 0 || k == 0 || k > n {
        return Err(Error::InvalidInput(
            "need n, m >= 1 and 1 <= k <= n".into(),
        ));
    }
    let mut rng = rng::substream(seed, tags::GEN_SPARSE);
    let mut support: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        support.swap(i, j);
    }
    support.truncate(k);
    let mut x0 = vec![0.0; n];
    for &i in &support {
        x0[i] = rng.sample::<f64, _>(StandardNormal) + 0.1;
    }
    let gt = GroundTruth::new(x0)?;
    let mut ms = MeasurementSet::new(n)?;
    for _ in 0..m {
        let z = gaussian_vec(&mut rng, n);
        let b = linalg::dot(&z, gt.x0()).powi(2);
        ms.push(SymMat::outer(&z), b)?;
    }
    ProblemInstance::new(
        ms,
        gt,
        Objective::L1PlusTrace { c: 1.0 },
        Provenance::SparsePhaseLift { n, m, k, seed },
    )
}

/// Instance whose face is exactly the cone over the planted rays.
pub fn gen_planted_face(spec: &PlantedFaceSpec) -> Result<ProblemInstance> {
    let n = spec.n;
    if spec.x0.len() != n {
        return Err(Error::InvalidInput("x0 has the wrong dimension".into()));
    }
    let gt = GroundTruth::new(spec.x0.clone())?;
    let x0n = linalg::norm2(gt.x0());
    for (a, q) in spec.rays.iter().enumerate() {
        if q.len() != n {
            return Err(Error::InvalidInput(format!("ray {a} has the wrong dimension")));
        }
        if (linalg::norm2(q) - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidInput(format!("ray {a} is not unit length")));
        }
        if linalg::dot(q, gt.x0()).abs() > 1e-8 * x0n {
            return Err(Error::InvalidInput(format!(
                "ray {a} is not orthogonal to x0"
            )));
        }
        for (b, p) in spec.rays.iter().enumerate().take(a) {
            if linalg::dot(q, p).abs() > 1e-8 {
                return Err(Error::InvalidInput(format!(
                    "rays {b} and {a} are not orthogonal"
                )));
            }
        }
    }
    let mut ms = MeasurementSet::new(n)?;
    for q in &spec.rays {
        ms.push(SymMat::outer(q), 0.0)?;
    }
    let mut rng = rng::substream(spec.seed, tags::GEN_PLANTED);
    for _ in 0..spec.fillers {
        let a = SymMat::from_fn(n, |_, _| rng.sample(StandardNormal));
        let b = a.hs_inner(gt.lifted())?;
        ms.push(a, b)?;
    }
    ProblemInstance::new(
        ms,
        gt,
        Objective::Trace,
        Provenance::PlantedFace { spec: spec.clone() },
    )
}

/// Face section of a report.
#[derive(Debug, Clone, Serialize)]
pub struct FaceSummary {
    pub lam: Vec<f64>,
    pub matrix: SymMat,
    pub eigenvalues: Vec<f64>,
    pub range_dim: usize,
}

impl FaceSummary {
    fn from_result(f: &FaceResult) -> Self {
        FaceSummary {
            lam: f.lam.clone(),
            matrix: f.a.clone(),
            eigenvalues: f.eigs.iter().map(|(c, _)| *c).collect(),
            range_dim: f.range.rank(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FaceStatus {
    Found,
    Empty,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompletenessSummary {
    pub complete: bool,
    pub inconclusive: bool,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CertificateReport {
    Found {
        lambda: Vec<f64>,
        #[serde(rename = "Q")]
        q: SymMat,
        #[serde(rename = "G")]
        g: SymMat,
        valid: bool,
        reasons: Vec<CheckFailure>,
    },
    Absent {
        residual: f64,
    },
    Inconclusive {
        residual: f64,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleSummary {
    pub attempts: usize,
    pub feasible: usize,
    pub best_value: f64,
    pub x0_value: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Timings {
    pub face_s: f64,
    pub completeness_s: f64,
    pub certificate_s: f64,
    pub oracle_s: f64,
}

/// Structured result of an `analyze` or `certify` run. Serialize with
/// [`AnalysisReport::canonical_json`] when byte-for-byte reproducibility
/// matters; wall-clock timings are zeroed there.
#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub provenance: Provenance,
    pub face_status: FaceStatus,
    pub face: Option<FaceSummary>,
    pub completeness: CompletenessSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSummary>,
    /// True when any stage reported an inconclusive outcome.
    pub inconclusive: bool,
    pub timings: Timings,
}

impl AnalysisReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// JSON with timing fields zeroed: identical inputs, seed and
    /// configuration produce identical bytes.
    pub fn canonical_json(&self) -> Result<String> {
        let mut clone = self.clone();
        clone.timings = Timings::default();
        Ok(serde_json::to_string_pretty(&clone)?)
    }
}

/// Face detection plus completeness check.
pub fn analyze(inst: &ProblemInstance, cfg: &SolverConfig) -> Result<AnalysisReport> {
    let t0 = Instant::now();
    let detection = crate::face::max_rank_face_element(&inst.ms, &inst.gt, cfg)?;
    let face_s = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let completeness = cone::completeness_check(&inst.ms, &inst.gt, cfg)?;
    let completeness_s = t1.elapsed().as_secs_f64();

    let (face_status, face) = match &detection {
        Detection::Found(f) => (FaceStatus::Found, Some(FaceSummary::from_result(f))),
        Detection::Empty => (FaceStatus::Empty, None),
        Detection::Inconclusive { .. } => (FaceStatus::Inconclusive, None),
    };
    let inconclusive = detection.is_inconclusive() || completeness.inconclusive;

    Ok(AnalysisReport {
        n: inst.ms.n(),
        m: inst.ms.len(),
        seed: cfg.seed,
        provenance: inst.provenance.clone(),
        face_status,
        face,
        completeness: CompletenessSummary {
            complete: completeness.complete,
            inconclusive: completeness.inconclusive,
            violations: completeness.violations.clone(),
        },
        certificate: None,
        oracle: None,
        inconclusive,
        timings: Timings {
            face_s,
            completeness_s,
            ..Timings::default()
        },
    })
}

/// Certificate search, verification and oracle cross-check on top of
/// [`analyze`].
pub fn certify(inst: &ProblemInstance, cfg: &SolverConfig) -> Result<AnalysisReport> {
    let mut report = analyze(inst, cfg)?;

    let t0 = Instant::now();
    let search = certificate::find_certificate(&inst.ms, &inst.gt, &inst.obj, cfg)?;
    report.timings.certificate_s = t0.elapsed().as_secs_f64();

    let cert_report = match &search {
        CertificateSearch::Found(cand) => {
            let check =
                certificate::verify_certificate(cand, &inst.ms, &inst.gt, &inst.obj, 100.0 * cfg.tol)?;
            CertificateReport::Found {
                lambda: cand.lam.clone(),
                q: cand.q.clone(),
                g: cand.g.clone(),
                valid: check.valid,
                reasons: check.failures,
            }
        }
        CertificateSearch::Absent { residual } => CertificateReport::Absent {
            residual: *residual,
        },
        CertificateSearch::Inconclusive { residual } => CertificateReport::Inconclusive {
            residual: *residual,
        },
    };
    report.inconclusive |= search.is_inconclusive();
    report.certificate = Some(cert_report);

    let t1 = Instant::now();
    let probe = oracles::oracle_feasible_probe(&inst.ms, &inst.gt, &inst.obj, cfg.samples, cfg.seed)?;
    report.timings.oracle_s = t1.elapsed().as_secs_f64();
    report.oracle = Some(OracleSummary {
        attempts: probe.attempts,
        feasible: probe.count_feasible,
        best_value: probe.best_value,
        x0_value: probe.x0_value,
    });

    Ok(report)
}

/// Completion wrapper that also audits its own output.
pub fn regularize_instance(
    inst: &ProblemInstance,
    cfg: &SolverConfig,
) -> Result<(ProblemInstance, RegularizationLog)> {
    let (ms, log) = regularize::complete_problem(&inst.ms, &inst.gt, cfg)?;
    let completed = ProblemInstance::new(
        ms,
        inst.gt.clone(),
        inst.obj.clone(),
        inst.provenance.clone(),
    )?;
    Ok((completed, log))
}

/// Serializable form of a regularization log.
#[derive(Debug, Clone, Serialize)]
pub struct RegularizationLogJson {
    pub status: RegularizationStatus,
    pub initial_span_dim: usize,
    pub final_span_dim: usize,
    pub iterations: Vec<RegularizationIterationJson>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularizationIterationJson {
    pub face: FaceSummary,
    pub appended: Vec<AppendedJson>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AppendedJson {
    pub j: usize,
    pub k: usize,
    pub matrix: SymMat,
}

impl RegularizationLogJson {
    pub fn from_log(log: &RegularizationLog) -> Self {
        RegularizationLogJson {
            status: log.status,
            initial_span_dim: log.initial_span_dim,
            final_span_dim: log.final_span_dim,
            iterations: log
                .iterations
                .iter()
                .map(|it| RegularizationIterationJson {
                    face: FaceSummary::from_result(&it.face),
                    appended: it
                        .appended
                        .iter()
                        .map(|a| AppendedJson {
                            j: a.j,
                            k: a.k,
                            matrix: a.matrix.clone(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}
