//! Objectives and their subdifferentials at the ground truth, KKT certificate
//! verification and search, the closed-form dual value for the Frobenius
//! objective, and the construction of a linear objective that admits no
//! certificate whenever completeness fails.
//!
//! A certificate at `X0` is a pair `(lam, Q)` with
//! `A*(lam) + Q = -G` for some subgradient `G` of the objective at `X0`,
//! `Q <= 0` and `Q x0 = 0`. Equivalently `-G` must lie in the cone `S`, so
//! certificate search reduces to cone membership for objectives with a
//! singleton subdifferential; the l1-plus-trace objective adds an entrywise
//! box over the subgradient and is handled by alternating the membership
//! optimizer with entrywise clipping.

use crate::cone::{self, ManifoldOpt, Membership};
use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::linalg;
use crate::operator::{GroundTruth, MeasurementSet};
use crate::symmat::{psd_tol, Subspace, SymMat};
use serde::{Deserialize, Serialize};

/// Supported objective functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Objective {
    /// `tr(X)`.
    Trace,
    /// `0.5 * ||X||_F^2`.
    HalfFroSq,
    /// Entrywise l1 norm plus `c * tr(X)`, `c >= 0`.
    L1PlusTrace { c: f64 },
    /// `<C, X>` for a fixed symmetric `C`.
    Linear { matrix: SymMat },
}

impl Objective {
    pub fn value(&self, x: &SymMat) -> Result<f64> {
        match self {
            Objective::Trace => Ok(x.trace()),
            Objective::HalfFroSq => Ok(0.5 * x.fro_norm().powi(2)),
            Objective::L1PlusTrace { c } => {
                let n = x.n();
                let mut l1 = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        l1 += x.get(i, j).abs();
                    }
                }
                Ok(l1 + c * x.trace())
            }
            Objective::Linear { matrix } => matrix.hs_inner(x),
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            Objective::L1PlusTrace { c } => {
                if !c.is_finite() || *c < 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "l1_plus_trace coefficient must be finite and nonnegative, got {c}"
                    )));
                }
            }
            Objective::Linear { matrix } if matrix.n() != n => {
                return Err(Error::dim(format!(
                    "linear objective has n={}, instance has n={}",
                    matrix.n(),
                    n
                )));
            }
            _ => {}
        }
        Ok(())
    }
}

/// Subdifferential of an objective at `X0`: either a single matrix or a
/// fixed part plus entrywise `[-1, 1]` freedom on the entries where `X0`
/// vanishes (the l1 case).
#[derive(Debug, Clone)]
pub enum SubdiffModel {
    Point(SymMat),
    BoxAffine {
        fixed: SymMat,
        /// Upper-triangle index pairs with interval freedom.
        free: Vec<(usize, usize)>,
    },
}

impl SubdiffModel {
    /// A canonical element (the point, or the center of the box).
    pub fn nominal(&self) -> &SymMat {
        match self {
            SubdiffModel::Point(g) => g,
            SubdiffModel::BoxAffine { fixed, .. } => fixed,
        }
    }

    /// Entrywise membership test at tolerance `tol`.
    pub fn contains(&self, g: &SymMat, tol: f64) -> bool {
        match self {
            SubdiffModel::Point(g0) => {
                g.n() == g0.n() && (g - g0).fro_norm() <= tol * (1.0 + g0.fro_norm())
            }
            SubdiffModel::BoxAffine { fixed, free } => {
                if g.n() != fixed.n() {
                    return false;
                }
                let n = g.n();
                for i in 0..n {
                    for j in i..n {
                        let dev = g.get(i, j) - fixed.get(i, j);
                        let allowed = if free.contains(&(i, j)) { 1.0 + tol } else { tol };
                        if dev.abs() > allowed {
                            return false;
                        }
                    }
                }
                true
            }
        }
    }

    /// Nearest element of the model (entrywise clipping for the box case).
    pub fn project(&self, g: &SymMat) -> SymMat {
        match self {
            SubdiffModel::Point(g0) => g0.clone(),
            SubdiffModel::BoxAffine { fixed, free } => {
                let mut out = fixed.clone();
                for &(i, j) in free {
                    let dev = (g.get(i, j) - fixed.get(i, j)).clamp(-1.0, 1.0);
                    out.set(i, j, fixed.get(i, j) + dev);
                }
                out
            }
        }
    }
}

/// Subdifferential of `obj` at the lifted ground truth.
pub fn subdiff_at(obj: &Objective, gt: &GroundTruth) -> Result<SubdiffModel> {
    let n = gt.n();
    obj.validate(n)?;
    match obj {
        Objective::Trace => Ok(SubdiffModel::Point(SymMat::identity(n))),
        Objective::HalfFroSq => Ok(SubdiffModel::Point(gt.lifted().clone())),
        Objective::Linear { matrix } => Ok(SubdiffModel::Point(matrix.clone())),
        Objective::L1PlusTrace { c } => {
            let x0m = gt.lifted();
            let zero_tol = 1e-12
                * (0..n)
                    .flat_map(|i| (i..n).map(move |j| (i, j)))
                    .map(|(i, j)| x0m.get(i, j).abs())
                    .fold(0.0f64, f64::max)
                    .max(1.0);
            let mut fixed = SymMat::identity(n).scale(*c);
            let mut free = Vec::new();
            for i in 0..n {
                for j in i..n {
                    let v = x0m.get(i, j);
                    if v.abs() > zero_tol {
                        fixed.set(i, j, fixed.get(i, j) + v.signum());
                    } else {
                        free.push((i, j));
                    }
                }
            }
            Ok(SubdiffModel::BoxAffine { fixed, free })
        }
    }
}

/// A candidate certificate: multipliers, slack matrix, chosen subgradient.
#[derive(Debug, Clone, Serialize)]
pub struct CertificateCandidate {
    pub lam: Vec<f64>,
    pub q: SymMat,
    pub g: SymMat,
}

/// One failed certificate condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum CheckFailure {
    /// `||A*(lam) + Q + G||_F` exceeded tolerance.
    Stationarity { residual: f64 },
    /// `G` is not a subgradient of the objective at `X0`.
    Subgradient,
    /// `Q` has a positive eigenvalue beyond tolerance.
    SlackNotNsd { max_eig: f64 },
    /// `||Q x0||` exceeded tolerance.
    SlackNotOrthogonal { residual: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateCheck {
    pub valid: bool,
    pub failures: Vec<CheckFailure>,
}

/// Check every KKT condition at tolerance `tol`, reporting all failures.
/// A valid result certifies that `X0` minimizes the problem.
pub fn verify_certificate(
    cand: &CertificateCandidate,
    ms: &MeasurementSet,
    gt: &GroundTruth,
    obj: &Objective,
    tol: f64,
) -> Result<CertificateCheck> {
    let mut failures = Vec::new();

    let mut stationarity = ms.adjoint(&cand.lam)?;
    stationarity.add_scaled(1.0, &cand.q);
    stationarity.add_scaled(1.0, &cand.g);
    let r = stationarity.fro_norm();
    if r > tol * (1.0 + cand.g.fro_norm()) {
        failures.push(CheckFailure::Stationarity { residual: r });
    }

    let model = subdiff_at(obj, gt)?;
    if !model.contains(&cand.g, tol * (1.0 + model.nominal().fro_norm())) {
        failures.push(CheckFailure::Subgradient);
    }

    let scale = 1.0 + cand.q.fro_norm();
    let top = cand.q.max_eig()?;
    if top > tol * scale {
        failures.push(CheckFailure::SlackNotNsd { max_eig: top });
    }

    let qx0 = linalg::norm2(&cand.q.mat_vec(gt.x0())?);
    if qx0 > tol * scale * (1.0 + linalg::norm2(gt.x0())) {
        failures.push(CheckFailure::SlackNotOrthogonal { residual: qx0 });
    }

    Ok(CertificateCheck {
        valid: failures.is_empty(),
        failures,
    })
}

/// Outcome of a certificate search.
#[derive(Debug, Clone)]
pub enum CertificateSearch {
    Found(CertificateCandidate),
    /// Definitively no certificate at the working tolerance.
    Absent { residual: f64 },
    Inconclusive { residual: f64 },
}

impl CertificateSearch {
    pub fn found(&self) -> Option<&CertificateCandidate> {
        match self {
            CertificateSearch::Found(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_absent(&self) -> bool {
        matches!(self, CertificateSearch::Absent { .. })
    }

    pub fn is_inconclusive(&self) -> bool {
        matches!(self, CertificateSearch::Inconclusive { .. })
    }
}

/// Search for a dual certificate at `X0`.
///
/// Objectives with a singleton subdifferential reduce exactly to the cone
/// membership `-G0 in S`. For the l1 box the subgradient is optimized jointly
/// by alternating membership steps with entrywise clipping; a failed box
/// search is only ever `Inconclusive` because the alternation cannot prove
/// that no admissible subgradient exists.
pub fn find_certificate(
    ms: &MeasurementSet,
    gt: &GroundTruth,
    obj: &Objective,
    cfg: &SolverConfig,
) -> Result<CertificateSearch> {
    ms.check_consistency(gt, 1e-6)?;
    let model = subdiff_at(obj, gt)?;
    match &model {
        SubdiffModel::Point(g0) => point_search(ms, gt, obj, g0, cfg),
        SubdiffModel::BoxAffine { free, .. } if free.is_empty() => {
            let g0 = model.nominal().clone();
            point_search(ms, gt, obj, &g0, cfg)
        }
        SubdiffModel::BoxAffine { .. } => box_search(ms, gt, obj, &model, cfg),
    }
}

fn point_search(
    ms: &MeasurementSet,
    gt: &GroundTruth,
    obj: &Objective,
    g0: &SymMat,
    cfg: &SolverConfig,
) -> Result<CertificateSearch> {
    let y = g0.scale(-1.0);
    match cone::in_s(&y, ms, gt, cfg)? {
        Membership::Member { lam, q, .. } => {
            let cand = CertificateCandidate {
                lam,
                q,
                g: g0.clone(),
            };
            let check = verify_certificate(&cand, ms, gt, obj, 100.0 * cfg.tol)?;
            if check.valid {
                Ok(CertificateSearch::Found(cand))
            } else {
                Ok(CertificateSearch::Inconclusive { residual: cfg.tol })
            }
        }
        Membership::NotMember { residual, .. } => Ok(CertificateSearch::Absent { residual }),
        Membership::Inconclusive { residual } => Ok(CertificateSearch::Inconclusive { residual }),
    }
}

fn box_search(
    ms: &MeasurementSet,
    gt: &GroundTruth,
    obj: &Objective,
    model: &SubdiffModel,
    cfg: &SolverConfig,
) -> Result<CertificateSearch> {
    const OUTER: usize = 5000;
    let x0_span = Subspace::from_spanning(ms.n(), &[gt.x0().to_vec()])?;

    let mut g = model.nominal().clone();
    let mut last_residual = f64::INFINITY;
    for _ in 0..OUTER {
        let y = g.scale(-1.0);
        let opt = cone::minimize_manifold_top_eig(&y, ms, gt, cfg, 600, 2)?;
        let lam = match &opt {
            ManifoldOpt::LinearInfeasible { lam, .. } => lam.clone(),
            ManifoldOpt::Optimized { lam, .. } => lam.clone(),
        };
        // project the slack onto {Q <= 0, Q x0 = 0} and pull the subgradient
        // back into the box
        let r = &y - &ms.adjoint(&lam)?;
        let q = x0_span.project_perp(&r)?.nsd_clip()?;
        let mut ideal = ms.adjoint(&lam)?;
        ideal.add_scaled(1.0, &q);
        let ideal_g = ideal.scale(-1.0);
        let g_new = model.project(&ideal_g);
        let step = (&g_new - &g).fro_norm();
        g = g_new;
        last_residual = match &opt {
            ManifoldOpt::LinearInfeasible { residual, .. } => *residual,
            ManifoldOpt::Optimized { value, .. } => *value,
        };
        if step < 1e-10 * (1.0 + g.fro_norm()) {
            break;
        }
    }

    // final full-budget membership decision for the settled subgradient
    let y = g.scale(-1.0);
    match cone::in_s(&y, ms, gt, cfg)? {
        Membership::Member { lam, q, .. } => {
            let cand = CertificateCandidate { lam, q, g };
            let check = verify_certificate(&cand, ms, gt, obj, 100.0 * cfg.tol)?;
            if check.valid {
                Ok(CertificateSearch::Found(cand))
            } else {
                Ok(CertificateSearch::Inconclusive { residual: cfg.tol })
            }
        }
        Membership::NotMember { residual, .. } | Membership::Inconclusive { residual } => {
            Ok(CertificateSearch::Inconclusive {
                residual: residual.min(last_residual),
            })
        }
    }
}

/// Lagrangian dual value for the Frobenius objective: the inner infimum is
/// attained at `X = -(A*(lam) + Q)`, giving
/// `g(lam, Q) = -0.5 ||A*(lam) + Q||_F^2 - lam . b`. Weak duality bounds it
/// by the primal value at any feasible point.
pub fn dual_value_frosq(ms: &MeasurementSet, lam: &[f64], q: &SymMat) -> Result<f64> {
    let top = q.max_eig()?;
    if top > psd_tol(q) {
        return Err(Error::InvalidInput(format!(
            "Q must be negative semidefinite (max eigenvalue {top:.3e})"
        )));
    }
    let mut m = ms.adjoint(lam)?;
    m.add_scaled(1.0, q);
    Ok(-0.5 * m.fro_norm().powi(2) - linalg::dot(lam, ms.values()))
}

/// Trace of a supergradient ascent on the Frobenius dual.
#[derive(Debug, Clone, Serialize)]
pub struct DualAscentTrace {
    pub best_value: f64,
    pub lam_at_best: Vec<f64>,
    /// Norm of the full dual pair `(lam, Q)` at the best iterate.
    pub dual_norm_at_best: f64,
    pub evaluations: usize,
}

/// Supergradient ascent on `g(lam) = -0.5 ||neg(A*(lam))||_F^2 - lam . b`
/// (the slack `Q` is eliminated in closed form as the negative part of
/// `A*(lam)`). Sign-adaptive per-coordinate steps let the iterates follow
/// the unbounded ridge that appears when the dual optimum is not attained.
pub fn dual_ascent_frosq(ms: &MeasurementSet, iters: usize) -> Result<DualAscentTrace> {
    let m = ms.len();
    let mut lam = vec![0.0_f64; m];
    let mut steps = vec![0.25_f64; m];
    let mut prev_grad = vec![0.0_f64; m];
    let mut best_value = f64::NEG_INFINITY;
    let mut lam_at_best = lam.clone();
    let mut q_norm_at_best = 0.0;
    let mut evaluations = 0;

    for _ in 0..iters {
        let a = ms.adjoint(&lam)?;
        let neg = a.nsd_clip()?;
        let value = -0.5 * neg.fro_norm().powi(2) - linalg::dot(&lam, ms.values());
        evaluations += 1;
        if value > best_value {
            best_value = value;
            lam_at_best = lam.clone();
            q_norm_at_best = (&neg - &a).fro_norm();
        }
        // gradient: -A(neg(A* lam)) - b
        let pulled = ms.apply(&neg)?;
        let grad: Vec<f64> = pulled
            .iter()
            .zip(ms.values())
            .map(|(p, b)| -p - b)
            .collect();
        for i in 0..m {
            let s = grad[i] * prev_grad[i];
            if s > 0.0 {
                steps[i] = (steps[i] * 1.2).min(1e6);
            } else if s < 0.0 {
                steps[i] *= 0.5;
            }
            if grad[i] != 0.0 {
                lam[i] += grad[i].signum() * steps[i];
            }
        }
        prev_grad = grad;
    }

    let dual_norm_at_best =
        (linalg::dot(&lam_at_best, &lam_at_best) + q_norm_at_best * q_norm_at_best).sqrt();
    Ok(DualAscentTrace {
        best_value,
        lam_at_best,
        dual_norm_at_best,
        evaluations,
    })
}

/// Outcome of the no-certificate objective construction.
#[derive(Debug, Clone)]
pub enum Counterexample {
    /// A linear objective minimized by `X0` that admits no certificate.
    Found {
        objective: Objective,
        /// The violating tensor data: basis index and face direction.
        j: usize,
        q: Vec<f64>,
    },
    /// The instance is complete; no such objective exists via this route.
    Complete,
    Inconclusive,
}

/// If the completeness check finds a violating tensor `sign (e_j (x) q)`,
/// return the linear objective `<-sign (e_j (x) q), X>`. The violating `q`
/// comes from the face, so `q q*` itself lies in `S` and the feasible set is
/// orthogonal to the tensor: `X0` minimizes the objective (its value is zero
/// on every feasible point) yet no certificate exists because the only
/// subgradient direction is outside `S`.
pub fn construct_counterexample_objective(
    ms: &MeasurementSet,
    gt: &GroundTruth,
    cfg: &SolverConfig,
) -> Result<Counterexample> {
    let report = cone::completeness_check(ms, gt, cfg)?;
    if report.complete {
        return Ok(Counterexample::Complete);
    }
    let face = match &report.face {
        Some(f) => f,
        None => return Ok(Counterexample::Inconclusive),
    };
    let violation = match report.violations.first() {
        Some(v) => v,
        None => return Ok(Counterexample::Inconclusive),
    };
    let q = face.eigs[violation.k].1.clone();

    // sanity: the squared face direction must itself be a cone member
    let qq = SymMat::outer(&q);
    if !cone::in_s(&qq, ms, gt, cfg)?.is_member() {
        return Ok(Counterexample::Inconclusive);
    }

    let mut ej = vec![0.0; ms.n()];
    ej[violation.j] = 1.0;
    let tensor = SymMat::sym_tensor(&ej, &q)?;
    let c = tensor.scale(-violation.sign.factor());
    Ok(Counterexample::Found {
        objective: Objective::Linear { matrix: c },
        j: violation.j,
        q,
    })
}
