//! Completion of a measurement set: append the measurements implied by
//! `X >= 0` and `A(X) = b` until the completeness condition holds.
//!
//! Each round finds a maximum-rank face element `A = sum_k c_k q_k q_k*`,
//! then appends `<X, e_j (x) q_k> = 0` for every basis tensor not already in
//! the span. Appended values are always zero: every feasible `X` satisfies
//! `X q_k = 0` because `<X, q_k q_k*> = 0` and `X >= 0`. The loop terminates
//! because the span dimension strictly grows on every appending round, and
//! the resulting problem has the same feasible set as the original.

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::face::{self, Detection, FaceResult};
use crate::operator::{span_tol, GroundTruth, MeasurementSet};
use crate::symmat::SymMat;
use serde::Serialize;

/// How a completion run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegularizationStatus {
    Completed,
    Inconclusive,
    BudgetExhausted,
}

/// One appended measurement: basis index, face eigenpair index, matrix.
#[derive(Debug, Clone, Serialize)]
pub struct AppendedMeasurement {
    pub j: usize,
    pub k: usize,
    pub matrix: SymMat,
}

/// One round of the completion loop.
#[derive(Debug, Clone)]
pub struct RegularizationIteration {
    pub face: FaceResult,
    pub appended: Vec<AppendedMeasurement>,
}

/// Full trace of a completion run.
#[derive(Debug, Clone)]
pub struct RegularizationLog {
    pub iterations: Vec<RegularizationIteration>,
    pub initial_span_dim: usize,
    pub final_span_dim: usize,
    pub status: RegularizationStatus,
}

impl RegularizationLog {
    pub fn total_appended(&self) -> usize {
        self.iterations.iter().map(|it| it.appended.len()).sum()
    }
}

/// Append implied measurements until no face eigvector produces a tensor
/// outside the span. Returns the completed set together with the log.
pub fn complete_problem(
    ms: &MeasurementSet,
    gt: &GroundTruth,
    cfg: &SolverConfig,
) -> Result<(MeasurementSet, RegularizationLog)> {
    ms.check_consistency(gt, 1e-6)?;
    let n = ms.n();
    let max_rounds = n * (n + 1) / 2;
    let initial_span_dim = ms.span_dim();

    let mut current = ms.clone();
    let mut iterations = Vec::new();
    let mut status = RegularizationStatus::BudgetExhausted;

    for _round in 0..=max_rounds {
        let detection = face::max_rank_face_element(&current, gt, cfg)?;
        let f = match detection {
            Detection::Empty => {
                status = RegularizationStatus::Completed;
                break;
            }
            Detection::Inconclusive { .. } => {
                status = RegularizationStatus::Inconclusive;
                break;
            }
            Detection::Found(f) => f,
        };

        let span_before = current.span_dim();
        let mut appended = Vec::new();
        for (k, (_, qk)) in f.eigs.iter().enumerate() {
            for j in 0..n {
                let mut ej = vec![0.0; n];
                ej[j] = 1.0;
                let tensor = SymMat::sym_tensor(&ej, qk)?;
                if current.in_span(&tensor, span_tol(&tensor))?.is_none() {
                    // every appended constraint must keep X0 feasible
                    let against_truth = tensor.hs_inner(gt.lifted())?.abs();
                    if against_truth > 1e-5 * (1.0 + gt.lifted().fro_norm()) {
                        return Err(Error::Invariant(format!(
                            "candidate append e_{j} (x) q_{k} is not orthogonal to X0 \
                             (inner product {against_truth:.3e}); face eigvector is unsound"
                        )));
                    }
                    current = current.append(tensor.clone(), 0.0, false)?.set;
                    appended.push(AppendedMeasurement {
                        j,
                        k,
                        matrix: tensor,
                    });
                }
            }
        }

        let no_appends = appended.is_empty();
        if !no_appends {
            let span_after = current.span_dim();
            if span_after <= span_before {
                return Err(Error::Invariant(format!(
                    "span dimension did not grow on an appending round ({span_before} -> {span_after})"
                )));
            }
        }
        iterations.push(RegularizationIteration { face: f, appended });
        if no_appends {
            status = RegularizationStatus::Completed;
            break;
        }
    }

    let log = RegularizationLog {
        final_span_dim: current.span_dim(),
        initial_span_dim,
        iterations,
        status,
    };
    Ok((current, log))
}

/// Empirical feasible-set equivalence of an extended problem. The reverse
/// direction is structural (constraints were only added), so the check
/// verifies the prefix property and then confirms that sampled feasible
/// points of the original problem satisfy the added constraints.
#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub equivalent: bool,
    pub samples_converged: usize,
    pub samples_failed: usize,
    pub max_violation: f64,
}

pub fn verify_equivalence(
    ms: &MeasurementSet,
    ms_completed: &MeasurementSet,
    gt: &GroundTruth,
    samples: usize,
    seed: u64,
) -> Result<EquivalenceReport> {
    if ms_completed.len() < ms.len() || ms_completed.n() != ms.n() {
        return Err(Error::InvalidInput(
            "completed set must extend the original".into(),
        ));
    }
    for i in 0..ms.len() {
        if ms_completed.mats()[i] != ms.mats()[i] || ms_completed.values()[i] != ms.values()[i] {
            return Err(Error::InvalidInput(format!(
                "completed set differs from the original at measurement {i}"
            )));
        }
    }

    let extra_mats = &ms_completed.mats()[ms.len()..];
    let extra_values = &ms_completed.values()[ms.len()..];
    let mut converged = 0usize;
    let mut failed = 0usize;
    let mut max_violation = 0.0f64;
    let mut equivalent = true;

    for s in 0..samples {
        match crate::harness::oracles::feasible_point(ms, seed, s as u64)? {
            Some(x) => {
                converged += 1;
                for (a, b) in extra_mats.iter().zip(extra_values) {
                    let viol = (a.hs_inner(&x)? - b).abs();
                    max_violation = max_violation.max(viol);
                    if viol > 1e-6 * (1.0 + b.abs()) * (1.0 + x.fro_norm()) {
                        equivalent = false;
                    }
                }
            }
            None => failed += 1,
        }
    }
    // the ground truth itself is always a witness
    for (a, b) in extra_mats.iter().zip(extra_values) {
        let viol = (a.hs_inner(gt.lifted())? - b).abs();
        max_violation = max_violation.max(viol);
        if viol > 1e-6 * (1.0 + b.abs()) {
            equivalent = false;
        }
    }

    Ok(EquivalenceReport {
        equivalent,
        samples_converged: converged,
        samples_failed: failed,
        max_violation,
    })
}

/// Convenience audit: a completed problem should pass the completeness check
/// and appending again should be a no-op.
pub fn is_idempotent(
    completed: &MeasurementSet,
    gt: &GroundTruth,
    cfg: &SolverConfig,
) -> Result<bool> {
    let (_, log) = complete_problem(completed, gt, cfg)?;
    Ok(log.total_appended() == 0)
}
