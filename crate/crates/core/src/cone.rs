//! Membership in the cone of candidate dual certificates
//! `S = {A*(lam) + Q : Q <= 0, Q x0 = 0}` and the completeness condition
//! built on it.
//!
//! Membership of `Y` splits into a linear stage and an eigenvalue stage. Any
//! admissible `Q = Y - A*(lam)` must kill `x0`, so `lam` is confined to the
//! affine solution set of `(Y - A*(lam)) x0 = 0`; if that system is
//! infeasible the answer is a definite no. On the solution manifold the
//! largest eigenvalue of `Y - A*(lam)` is a convex function of the remaining
//! free coordinates and is nonnegative everywhere (x0 is always a null
//! vector), so membership is exactly the question of driving it to zero.
//! That structure makes Polyak subgradient steps with target value zero the
//! natural optimizer: they certify membership quickly and stall harmlessly
//! above zero otherwise.

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::face::{self, Detection, FaceResult};
use crate::linalg::{self, PivotedQr};
use crate::operator::{GroundTruth, MeasurementSet};
use crate::rng::{self, tags};
use crate::symmat::SymMat;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Membership tolerance for a query `y`.
pub fn member_tol(y: &SymMat, cfg: &SolverConfig) -> f64 {
    cfg.tol * (1.0 + y.fro_norm())
}

/// Outcome of minimizing the top eigenvalue of `y - A*(lam)` over the
/// manifold `(y - A*(lam)) x0 = 0`.
#[derive(Debug, Clone)]
pub(crate) enum ManifoldOpt {
    /// The linear system has no solution; `lam` is the least-squares best.
    LinearInfeasible { lam: Vec<f64>, residual: f64 },
    /// Best point found on the manifold.
    Optimized {
        lam: Vec<f64>,
        value: f64,
        /// True when the best value was still improving near the end of the
        /// budget (the floor is not trustworthy).
        improving: bool,
    },
}

/// Shared optimizer for membership-style queries.
pub(crate) fn minimize_manifold_top_eig(
    y: &SymMat,
    ms: &MeasurementSet,
    gt: &GroundTruth,
    cfg: &SolverConfig,
    iters: usize,
    restarts: usize,
) -> Result<ManifoldOpt> {
    let target = y.mat_vec(gt.x0())?;
    if ms.is_empty() {
        // no multipliers: y itself must kill x0, and its top eigenvalue is
        // the whole story
        let residual = linalg::norm2(&target);
        if residual > cfg.tol * (1.0 + residual) {
            return Ok(ManifoldOpt::LinearInfeasible {
                lam: Vec::new(),
                residual,
            });
        }
        return Ok(ManifoldOpt::Optimized {
            lam: Vec::new(),
            value: y.max_eig()?,
            improving: false,
        });
    }
    let k_cols = ms.image_columns(gt)?;
    let qr = PivotedQr::new(&k_cols, 1e-12);
    let (lam_p, lin_residual) = qr.solve(&target);
    let lin_tol = cfg.tol * (1.0 + linalg::norm2(&target));
    if lin_residual > lin_tol {
        return Ok(ManifoldOpt::LinearInfeasible {
            lam: lam_p,
            residual: lin_residual,
        });
    }

    let null = qr.null_basis();
    let base = &y.clone() - &ms.adjoint(&lam_p)?;

    if null.is_empty() {
        let val = base.max_eig()?;
        return Ok(ManifoldOpt::Optimized {
            lam: lam_p,
            value: val,
            improving: false,
        });
    }

    let dirs: Vec<SymMat> = null.iter().map(|d| ms.adjoint(d)).collect::<Result<_>>()?;
    let objective = |z: &[f64]| -> Result<(f64, Vec<f64>)> {
        let mut m = base.clone();
        for (zi, b) in z.iter().zip(&dirs) {
            m.add_scaled(-zi, b);
        }
        let e = m.eig()?;
        Ok((
            *e.values.last().unwrap(),
            e.vectors.last().unwrap().clone(),
        ))
    };

    let tol = member_tol(y, cfg);
    let d = null.len();
    let mut best_val = f64::INFINITY;
    let mut best_z = vec![0.0; d];
    let mut improving = false;

    'restarts: for restart in 0..restarts.max(1) {
        let mut z = if restart == 0 {
            vec![0.0; d]
        } else {
            let mut rng = rng::substream(cfg.seed, tags::MEMBER_RESTART + restart as u64);
            (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()
        };
        let mut stale = 0usize;
        let mut restart_best = f64::INFINITY;
        for it in 0..iters {
            let (val, u) = objective(&z)?;
            if val < best_val {
                best_val = val;
                best_z = z.clone();
                improving = it > iters * 8 / 10;
            }
            if val < restart_best * (1.0 - 1e-3) {
                restart_best = val;
                stale = 0;
            } else {
                stale += 1;
            }
            if best_val <= 0.5 * tol {
                break 'restarts;
            }
            // a long stretch without progress far above zero will not recover
            if stale > 500 && restart_best > 10.0 * tol {
                break;
            }
            // subgradient of the top eigenvalue pulled back through A*;
            // Polyak step with target value zero
            let g: Vec<f64> = dirs
                .iter()
                .map(|b| b.mat_vec(&u).map(|bu| -linalg::dot(&bu, &u)))
                .collect::<Result<_>>()?;
            let gn2 = linalg::dot(&g, &g);
            if gn2 < 1e-30 {
                break;
            }
            linalg::axpy(-val / gn2, &g, &mut z);
        }
    }

    let mut lam = lam_p;
    for (zi, dir) in best_z.iter().zip(&null) {
        linalg::axpy(*zi, dir, &mut lam);
    }
    Ok(ManifoldOpt::Optimized {
        lam,
        value: best_val,
        improving,
    })
}

/// Outcome of a membership query.
#[derive(Debug, Clone)]
pub enum Membership {
    /// `y = A*(lam) + q` with `q` validated NSD and `q x0 = 0`.
    Member {
        lam: Vec<f64>,
        q: SymMat,
        /// Achieved largest eigenvalue of `q` (at most the tolerance).
        residual: f64,
    },
    NotMember {
        /// Linear-stage infeasibility or the floor of the eigenvalue
        /// minimization, whichever decided the answer.
        residual: f64,
        /// True when already the system `(y - A*(lam)) x0 = 0` has no solution.
        linear_infeasible: bool,
    },
    Inconclusive { residual: f64 },
}

impl Membership {
    pub fn is_member(&self) -> bool {
        matches!(self, Membership::Member { .. })
    }

    pub fn is_inconclusive(&self) -> bool {
        matches!(self, Membership::Inconclusive { .. })
    }

    pub fn residual(&self) -> f64 {
        match self {
            Membership::Member { residual, .. }
            | Membership::NotMember { residual, .. }
            | Membership::Inconclusive { residual } => *residual,
        }
    }
}

/// Decide `y in S`.
pub fn in_s(
    y: &SymMat,
    ms: &MeasurementSet,
    gt: &GroundTruth,
    cfg: &SolverConfig,
) -> Result<Membership> {
    if y.n() != ms.n() || gt.n() != ms.n() {
        return Err(Error::dim(format!(
            "in_s: y has n={}, set n={}, ground truth n={}",
            y.n(),
            ms.n(),
            gt.n()
        )));
    }
    let tol = member_tol(y, cfg);
    let lin_tol = cfg.tol * (1.0 + linalg::norm2(&y.mat_vec(gt.x0())?));

    match minimize_manifold_top_eig(y, ms, gt, cfg, cfg.member_iters, cfg.member_restarts)? {
        ManifoldOpt::LinearInfeasible { residual, .. } => {
            if residual > 10.0 * lin_tol {
                Ok(Membership::NotMember {
                    residual,
                    linear_infeasible: true,
                })
            } else {
                Ok(Membership::Inconclusive { residual })
            }
        }
        ManifoldOpt::Optimized {
            lam,
            value,
            improving,
        } => {
            if value <= tol {
                let q = &y.clone() - &ms.adjoint(&lam)?;
                // revalidate before declaring membership
                let qx0 = linalg::norm2(&q.mat_vec(gt.x0())?);
                let top = q.max_eig()?;
                if top <= tol && qx0 <= 10.0 * lin_tol * (1.0 + linalg::norm2(gt.x0())) {
                    return Ok(Membership::Member {
                        lam,
                        q,
                        residual: top,
                    });
                }
                return Ok(Membership::Inconclusive { residual: top });
            }
            if value <= 10.0 * tol || improving {
                return Ok(Membership::Inconclusive { residual: value });
            }
            Ok(Membership::NotMember {
                residual: value,
                linear_infeasible: false,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// A basis tensor `sign * (e_j (x) q_k)` found to lie outside `S`.
#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    /// Standard basis index (0-based).
    pub j: usize,
    /// Index into the face eigenpairs.
    pub k: usize,
    pub sign: Sign,
}

/// Result of the completeness check.
#[derive(Debug, Clone)]
pub struct CompletenessReport {
    pub complete: bool,
    /// The maximum-rank face element the check quantified over, if any.
    pub face: Option<FaceResult>,
    pub violations: Vec<Violation>,
    /// True when face detection or any membership query was inconclusive.
    pub inconclusive: bool,
}

/// Evaluate the completeness condition: whenever a PSD combination of the
/// measurements is orthogonal to `X0`, every tensor `y (x) q` with `q` in its
/// range must lie in `S`. Testing `+-(e_j (x) q_k)` over a basis suffices
/// because `S` is a convex cone and any `y` splits into signed basis parts.
pub fn completeness_check(
    ms: &MeasurementSet,
    gt: &GroundTruth,
    cfg: &SolverConfig,
) -> Result<CompletenessReport> {
    match face::max_rank_face_element(ms, gt, cfg)? {
        Detection::Empty => Ok(CompletenessReport {
            complete: true,
            face: None,
            violations: Vec::new(),
            inconclusive: false,
        }),
        Detection::Inconclusive { .. } => Ok(CompletenessReport {
            complete: false,
            face: None,
            violations: Vec::new(),
            inconclusive: true,
        }),
        Detection::Found(f) => {
            let n = ms.n();
            let mut violations = Vec::new();
            let mut inconclusive = false;
            for (k, (_, qk)) in f.eigs.iter().enumerate() {
                for j in 0..n {
                    let mut ej = vec![0.0; n];
                    ej[j] = 1.0;
                    let tensor = SymMat::sym_tensor(&ej, qk)?;
                    for sign in [Sign::Plus, Sign::Minus] {
                        let y = tensor.scale(sign.factor());
                        match in_s(&y, ms, gt, cfg)? {
                            Membership::Member { .. } => {}
                            Membership::NotMember { .. } => {
                                violations.push(Violation { j, k, sign })
                            }
                            Membership::Inconclusive { .. } => inconclusive = true,
                        }
                    }
                }
            }
            Ok(CompletenessReport {
                complete: violations.is_empty() && !inconclusive,
                face: Some(f),
                violations,
                inconclusive,
            })
        }
    }
}
