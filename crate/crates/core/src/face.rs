//! Detection of positive semidefinite elements of `span{A_i}` orthogonal to
//! the ground truth `X0`: the face of the PSD cone on which all feasible
//! points live, and the obstruction to Slater's condition.
//!
//! The search is a convex feasibility problem over the affine slice
//! `{A*(lam) : lam . b = 0, tr A*(lam) = 1}` intersected with the PSD cone,
//! solved by Dykstra's alternating projections. Orthogonality to `X0` is the
//! linear condition `lam . b = 0` because `<A*(lam), X0> = sum_i lam_i b_i`.
//! The trace normalization costs nothing: a PSD matrix with zero trace is
//! zero, so every nonzero face element scales onto the slice.
//!
//! "No face" is only declared when the projection gap stabilizes well above
//! tolerance; anything murkier is reported as `Inconclusive` rather than
//! being coerced to a negative answer.

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::linalg::{self, PivotedQr};
use crate::operator::{GroundTruth, MeasurementSet};
use crate::rng::{self, tags};
use crate::symmat::{Subspace, SymMat};
use rand::Rng;

/// Relative eigenvalue cutoff: face eigenpairs below this fraction of the top
/// eigenvalue are treated as numerically zero.
pub const FACE_EIG_CUTOFF: f64 = 1e-8;

/// Working cutoff for face eigenpairs. The relative threshold alone would sit
/// below the feasibility solver's convergence noise, so it is floored at a
/// multiple of the solver tolerance times the matrix scale.
pub(crate) fn face_eig_cutoff(top: f64, scale: f64, tol: f64) -> f64 {
    (FACE_EIG_CUTOFF * top).max(100.0 * tol * scale)
}

/// A validated nonzero PSD element of the span orthogonal to `X0`.
#[derive(Debug, Clone)]
pub struct FaceResult {
    /// Coefficients with `A = A*(lam)` after normalization.
    pub lam: Vec<f64>,
    /// The face element, normalized to unit Frobenius norm.
    pub a: SymMat,
    /// Strictly positive eigenpairs `(c_k, q_k)` of `a`, largest first.
    pub eigs: Vec<(f64, Vec<f64>)>,
    /// Span of the `q_k`: the range of the face element.
    pub range: Subspace,
}

/// Outcome of a face search. `Empty` is a definite negative; `Inconclusive`
/// means the budget ran out while the answer was still ambiguous.
#[derive(Debug, Clone)]
pub enum Detection {
    Found(FaceResult),
    Empty,
    Inconclusive { gap: f64, iterations: usize },
}

impl Detection {
    pub fn found(&self) -> Option<&FaceResult> {
        match self {
            Detection::Found(f) => Some(f),
            _ => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Detection::Empty)
    }

    pub fn is_inconclusive(&self) -> bool {
        matches!(self, Detection::Inconclusive { .. })
    }
}

/// The affine slice in svec coordinates, with the least-squares machinery for
/// projecting onto it prefactored.
struct AffineSlice {
    /// Particular solution of `lam . b = 0, lam . t = 1`.
    lam0: Vec<f64>,
    /// Null directions of those two constraints in lambda-space.
    null_dirs: Vec<Vec<f64>>,
    /// svec of `A*(lam0)`.
    base: Vec<f64>,
    /// svec images of the null directions.
    dir_cols: Vec<Vec<f64>>,
    qr: Option<PivotedQr>,
}

enum SliceBuild {
    Ok(AffineSlice),
    Infeasible,
}

impl AffineSlice {
    fn build(ms: &MeasurementSet) -> Result<SliceBuild> {
        let m = ms.len();
        if m == 0 {
            return Ok(SliceBuild::Infeasible);
        }
        let traces: Vec<f64> = ms.mats().iter().map(|a| a.trace()).collect();
        // columns of the 2 x m constraint matrix [b; t]
        let cons_cols: Vec<Vec<f64>> = (0..m)
            .map(|i| vec![ms.values()[i], traces[i]])
            .collect();
        let cons_qr = PivotedQr::new(&cons_cols, 1e-12);
        let (lam0, cres) = cons_qr.solve(&[0.0, 1.0]);
        if cres > 1e-10 {
            // no lambda reaches trace one while staying orthogonal to X0
            return Ok(SliceBuild::Infeasible);
        }
        let null_dirs = cons_qr.null_basis();
        let base = ms.adjoint(&lam0)?.svec();
        let dir_cols: Vec<Vec<f64>> = null_dirs
            .iter()
            .map(|d| ms.adjoint(d).map(|a| a.svec()))
            .collect::<Result<_>>()?;
        let qr = if dir_cols.is_empty() {
            None
        } else {
            Some(PivotedQr::new(&dir_cols, 1e-12))
        };
        Ok(SliceBuild::Ok(AffineSlice {
            lam0,
            null_dirs,
            base,
            dir_cols,
            qr,
        }))
    }

    /// Project `z` (svec) onto the slice; returns the lambda achieving the
    /// projection and the projected point.
    fn project(&self, z: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut lam = self.lam0.clone();
        let mut point = self.base.clone();
        if let Some(qr) = &self.qr {
            let rhs: Vec<f64> = z.iter().zip(&self.base).map(|(a, b)| a - b).collect();
            let (w, _) = qr.solve(&rhs);
            for (wi, dir) in w.iter().zip(&self.null_dirs) {
                linalg::axpy(*wi, dir, &mut lam);
            }
            for (wi, col) in w.iter().zip(&self.dir_cols) {
                linalg::axpy(*wi, col, &mut point);
            }
        }
        (lam, point)
    }
}

fn psd_project_svec(n: usize, z: &[f64]) -> Result<Vec<f64>> {
    Ok(SymMat::from_svec(n, z).psd_clip()?.svec())
}

/// One Dykstra run from `start`. Gap stagnation over several windows, well
/// above tolerance, is read as a certificate that the slice misses the cone.
fn dykstra_run(
    n: usize,
    slice: &AffineSlice,
    start: &SymMat,
    cfg: &SolverConfig,
) -> Result<RunOutcome> {
    const WINDOW: usize = 200;
    const STALL_WINDOWS: usize = 3;
    // once feasible at `tol`, keep refining: eigvectors of the face element
    // inherit the projection gap, and downstream consumers (implied
    // measurements, no-certificate objectives) need them well below `tol`
    const REFINE_FACTOR: f64 = 1e-4;
    const REFINE_BUDGET: usize = 20_000;
    let tol = cfg.tol;

    let mut lam;
    let mut x = slice.project(&start.svec()).1;
    let mut correction = vec![0.0; x.len()];
    let mut window_min = f64::INFINITY;
    let mut prev_window_min = f64::INFINITY;
    let mut stalled = 0usize;
    let mut last_gap = f64::INFINITY;

    let mut refining = false;
    let mut refine_left = REFINE_BUDGET;
    let mut best_gap = f64::INFINITY;
    let mut best_lam: Option<Vec<f64>> = None;
    let mut refine_window_best = f64::INFINITY;

    for it in 0..cfg.max_iter {
        // cone step with Dykstra correction
        let shifted: Vec<f64> = x.iter().zip(&correction).map(|(a, b)| a + b).collect();
        let y = psd_project_svec(n, &shifted)?;
        for ((c, s), yi) in correction.iter_mut().zip(&shifted).zip(&y) {
            *c = s - yi;
        }
        // affine step
        let (lam_new, x_new) = slice.project(&y);
        lam = lam_new;
        let gap = {
            let mut acc = 0.0;
            for (a, b) in x_new.iter().zip(&y) {
                acc += (a - b) * (a - b);
            }
            acc.sqrt()
        };
        x = x_new;
        last_gap = gap;

        let scale = 1.0 + linalg::norm2(&x);
        if gap <= tol * scale && !refining {
            refining = true;
            best_gap = gap;
            best_lam = Some(lam.clone());
        }
        if refining {
            if gap < best_gap {
                best_gap = gap;
                best_lam = Some(lam.clone());
            }
            refine_left -= 1;
            // stop once the gap is deep enough or a whole window brought
            // less than a percent of improvement
            if best_gap <= REFINE_FACTOR * tol * scale || refine_left == 0 {
                return Ok(RunOutcome::Converged {
                    lam: best_lam.expect("set when refinement began"),
                });
            }
            if (it + 1) % WINDOW == 0 {
                if refine_window_best.is_finite()
                    && best_gap > refine_window_best * (1.0 - 1e-2)
                {
                    return Ok(RunOutcome::Converged {
                        lam: best_lam.expect("set when refinement began"),
                    });
                }
                refine_window_best = best_gap;
            }
            continue;
        }

        window_min = window_min.min(gap);
        if (it + 1) % WINDOW == 0 {
            if window_min > 10.0 * tol * scale
                && window_min >= prev_window_min * (1.0 - 1e-4)
                && prev_window_min.is_finite()
            {
                stalled += 1;
                if stalled >= STALL_WINDOWS {
                    return Ok(RunOutcome::Separated);
                }
            } else {
                stalled = 0;
            }
            prev_window_min = window_min;
            window_min = f64::INFINITY;
        }
    }
    if let Some(lam) = best_lam {
        return Ok(RunOutcome::Converged { lam });
    }
    Ok(RunOutcome::BudgetExhausted { gap: last_gap })
}

enum RunOutcome {
    Converged { lam: Vec<f64> },
    Separated,
    BudgetExhausted { gap: f64 },
}

/// Validate a candidate lambda as a face element; normalize and decompose.
fn validate_face(
    ms: &MeasurementSet,
    gt: &GroundTruth,
    lam: &[f64],
    tol: f64,
) -> Result<Option<FaceResult>> {
    let a_raw = ms.adjoint(lam)?;
    let nrm = a_raw.fro_norm();
    if nrm <= tol {
        return Ok(None);
    }
    let a = a_raw.scale(1.0 / nrm);
    let lam: Vec<f64> = lam.iter().map(|c| c / nrm).collect();

    if a.min_eig()? < -10.0 * tol {
        return Ok(None);
    }
    let ortho = a.hs_inner(gt.lifted())?.abs();
    if ortho > 10.0 * tol * (1.0 + gt.lifted().fro_norm()) {
        return Ok(None);
    }
    let ax0 = linalg::norm2(&a.mat_vec(gt.x0())?);
    if ax0 > 1e-4 * (1.0 + linalg::norm2(gt.x0())) {
        return Ok(None);
    }

    let e = a.eig()?;
    let top = *e.values.last().unwrap();
    let cutoff = face_eig_cutoff(top, a.fro_norm(), tol);
    // Eigvectors of the face element are orthogonal to x0 up to solver
    // accuracy; polish them onto the exact complement so that everything
    // built from them (appended tensors, membership queries) keeps X0
    // feasible to machine precision.
    let x0n2 = linalg::dot(gt.x0(), gt.x0());
    let mut eigs: Vec<(f64, Vec<f64>)> = Vec::new();
    for (v, q) in e.values.iter().zip(&e.vectors).rev() {
        if *v <= cutoff {
            continue;
        }
        let mut q = q.clone();
        let c = linalg::dot(&q, gt.x0()) / x0n2;
        linalg::axpy(-c, gt.x0(), &mut q);
        let nrm = linalg::norm2(&q);
        if nrm < 0.5 {
            // an eigvector this close to x0 cannot come from a genuine face
            return Ok(None);
        }
        eigs.push((*v, linalg::scaled(1.0 / nrm, &q)));
    }
    if eigs.is_empty() {
        return Ok(None);
    }
    let range = Subspace::from_spanning(ms.n(), &eigs.iter().map(|(_, q)| q.clone()).collect::<Vec<_>>())?;
    Ok(Some(FaceResult {
        lam,
        a,
        eigs,
        range,
    }))
}

fn detect_from_start(
    ms: &MeasurementSet,
    gt: &GroundTruth,
    slice: &AffineSlice,
    start: &SymMat,
    cfg: &SolverConfig,
) -> Result<Detection> {
    // a slice with no free directions is a single point: check it directly
    if slice.qr.is_none() {
        let a = ms.adjoint(&slice.lam0)?;
        return Ok(
            if a.min_eig()? >= -cfg.tol * (1.0 + a.fro_norm()) {
                match validate_face(ms, gt, &slice.lam0, cfg.tol)? {
                    Some(f) => Detection::Found(f),
                    None => Detection::Inconclusive {
                        gap: cfg.tol,
                        iterations: 0,
                    },
                }
            } else {
                Detection::Empty
            },
        );
    }
    match dykstra_run(ms.n(), slice, start, cfg)? {
        RunOutcome::Converged { lam } => match validate_face(ms, gt, &lam, cfg.tol)? {
            Some(f) => Ok(Detection::Found(f)),
            None => Ok(Detection::Inconclusive {
                gap: cfg.tol,
                iterations: cfg.max_iter,
            }),
        },
        RunOutcome::Separated => Ok(Detection::Empty),
        RunOutcome::BudgetExhausted { gap } => Ok(Detection::Inconclusive {
            gap,
            iterations: cfg.max_iter,
        }),
    }
}

fn check_inputs(ms: &MeasurementSet, gt: &GroundTruth) -> Result<()> {
    if ms.n() != gt.n() {
        return Err(Error::dim(format!(
            "measurement set has n={}, ground truth n={}",
            ms.n(),
            gt.n()
        )));
    }
    ms.check_consistency(gt, 1e-6)
}

/// Search for a nonzero PSD element of the span orthogonal to `X0`.
pub fn find_psd_in_span(
    ms: &MeasurementSet,
    gt: &GroundTruth,
    cfg: &SolverConfig,
) -> Result<Detection> {
    check_inputs(ms, gt)?;
    let slice = match AffineSlice::build(ms)? {
        SliceBuild::Ok(s) => s,
        SliceBuild::Infeasible => return Ok(Detection::Empty),
    };
    detect_from_start(ms, gt, &slice, &SymMat::zeros(ms.n()), cfg)
}

/// Assemble a maximum-rank representative of the face: repeated detections
/// from restarts steered onto the orthocomplement of the range found so far,
/// summed (the face is a convex cone, so sums stay inside it). Stops when
/// `r_stall` consecutive restarts add no range dimension.
pub fn max_rank_face_element(
    ms: &MeasurementSet,
    gt: &GroundTruth,
    cfg: &SolverConfig,
) -> Result<Detection> {
    check_inputs(ms, gt)?;
    let slice = match AffineSlice::build(ms)? {
        SliceBuild::Ok(s) => s,
        SliceBuild::Infeasible => return Ok(Detection::Empty),
    };
    let n = ms.n();

    let mut acc_lam: Option<Vec<f64>> = None;
    let mut acc: Option<SymMat> = None;
    let mut range_dim = 0usize;
    let mut stall = 0usize;

    for restart in 0..cfg.restarts.max(1) {
        let start = if restart == 0 {
            SymMat::zeros(n)
        } else {
            // steer onto the orthocomplement of the accumulated range
            let mut rng = rng::substream(cfg.seed, tags::FACE_RESTART + restart as u64);
            let w = SymMat::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let steered = match &acc {
                Some(a) => {
                    let e = a.eig()?;
                    let top = *e.values.last().unwrap();
                    let cutoff = face_eig_cutoff(top, a.fro_norm(), cfg.tol);
                    let span: Vec<Vec<f64>> = e
                        .values
                        .iter()
                        .zip(&e.vectors)
                        .filter(|(v, _)| **v > cutoff)
                        .map(|(_, q)| q.clone())
                        .collect();
                    Subspace::from_spanning(n, &span)?.project_perp(&w)?
                }
                None => w,
            };
            let nrm = steered.fro_norm();
            if nrm > 0.0 {
                steered.scale(1.0 / nrm)
            } else {
                steered
            }
        };

        match detect_from_start(ms, gt, &slice, &start, cfg)? {
            Detection::Found(f) => {
                match (&mut acc, &mut acc_lam) {
                    (Some(a), Some(l)) => {
                        a.add_scaled(1.0, &f.a);
                        for (li, fi) in l.iter_mut().zip(&f.lam) {
                            *li += fi;
                        }
                    }
                    _ => {
                        acc = Some(f.a.clone());
                        acc_lam = Some(f.lam.clone());
                    }
                }
                let e = acc.as_ref().unwrap().eig()?;
                let top = *e.values.last().unwrap();
                let cutoff = face_eig_cutoff(top, acc.as_ref().unwrap().fro_norm(), cfg.tol);
                let dim = e.values.iter().filter(|v| **v > cutoff).count();
                // adding a PSD element can only grow the range
                debug_assert!(dim >= range_dim, "accumulated face range shrank");
                if dim > range_dim {
                    range_dim = dim;
                    stall = 0;
                } else {
                    stall += 1;
                }
            }
            Detection::Empty => {
                if acc.is_none() {
                    return Ok(Detection::Empty);
                }
                stall += 1;
            }
            Detection::Inconclusive { gap, iterations } => {
                if acc.is_none() {
                    return Ok(Detection::Inconclusive { gap, iterations });
                }
                stall += 1;
            }
        }
        if stall >= cfg.r_stall {
            break;
        }
    }

    match acc_lam {
        Some(lam) => match validate_face(ms, gt, &lam, cfg.tol)? {
            Some(f) => Ok(Detection::Found(f)),
            None => Ok(Detection::Inconclusive {
                gap: cfg.tol,
                iterations: cfg.max_iter,
            }),
        },
        None => Ok(Detection::Empty),
    }
}
