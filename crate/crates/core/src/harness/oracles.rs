//! Brute-force oracles: a feasible-point sampler for primal cross-checks, a
//! grid-search membership oracle for tiny instances, and a direct grid oracle
//! for the rank-one perturbation test. These are deliberately slow and share
//! no machinery with the solvers they audit.

use crate::certificate::Objective;
use crate::error::{Error, Result};
use crate::linalg::{self, cholesky_solve};
use crate::operator::{GroundTruth, MeasurementSet};
use crate::rng::{self, tags};
use crate::symmat::{self, SymMat};
use rand::Rng;
use rand_distr::StandardNormal;

/// Acceptance threshold on the measurement residual of a sampled point.
/// A residual eps on a constraint `<X, q q*> = 0` lets entries of `X`
/// coupled to `q` stray by sqrt(X_jj * eps), so the threshold shrinks with
/// the sample's norm; accepted points then violate implied tensor
/// measurements by less than `2 * sqrt(1e-13)` regardless of scale.
pub(crate) fn sample_accept_tol(x_norm: f64) -> f64 {
    1e-13 / (1.0 + x_norm)
}

/// Generate one candidate feasible point: a random PSD start is driven by
/// alternating projections between the measurement subspace and the PSD
/// cone, then polished on the factorized residuals `<A_i, L L*> - b_i` with
/// a damped Gauss-Newton loop (the factorization keeps the iterate exactly
/// PSD). Returns `None` when the sample fails to reach the acceptance
/// residual.
pub fn feasible_point(ms: &MeasurementSet, seed: u64, sample: u64) -> Result<Option<SymMat>> {
    let n = ms.n();
    let mut rng = rng::substream(seed, tags::PROBE_SAMPLE.wrapping_add(sample));

    // random PSD start with a random overall scale
    let g: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let scale: f64 = rng.gen_range(0.0..1.5f64).powi(2) / n as f64;
    let mut x = SymMat::zeros(n);
    for col in 0..n {
        let v: Vec<f64> = (0..n).map(|r| g[r][col]).collect();
        x.add_scaled(scale, &SymMat::outer(&v));
    }

    if ms.is_empty() {
        return Ok(Some(x));
    }

    // alternating projections between {A(X) = b} and the PSD cone
    let cols: Vec<Vec<f64>> = ms.mats().iter().map(|a| a.svec()).collect();
    let m = ms.len();
    let mut gram = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            gram[i * m + j] = linalg::dot(&cols[i], &cols[j]);
        }
    }
    let gram_scale: f64 = (0..m).map(|i| gram[i * m + i]).sum::<f64>().max(1.0);
    let damp = 1e-12 * gram_scale;

    for _ in 0..300 {
        // affine step
        let image = ms.apply(&x)?;
        let rhs: Vec<f64> = image.iter().zip(ms.values()).map(|(a, b)| a - b).collect();
        let u = match cholesky_solve(&gram, m, damp, &rhs) {
            Some(u) => u,
            None => return Ok(None),
        };
        let mut xs = x.svec();
        for (ui, col) in u.iter().zip(&cols) {
            linalg::axpy(-ui, col, &mut xs);
        }
        x = SymMat::from_svec(n, &xs);
        // cone step
        x = x.psd_clip()?;
        let res = linalg::norm2(
            &ms.apply(&x)?
                .iter()
                .zip(ms.values())
                .map(|(a, b)| a - b)
                .collect::<Vec<_>>(),
        );
        if res < 1e-9 {
            break;
        }
    }

    // factorized polish: X = L L* stays PSD while Gauss-Newton drives the
    // measurement residuals toward machine precision
    let e = x.eig()?;
    let mut l = vec![0.0; n * n];
    for (k, (val, vec)) in e.values.iter().zip(&e.vectors).enumerate() {
        if *val > 0.0 {
            let s = val.sqrt();
            for r in 0..n {
                l[r * n + k] = s * vec[r];
            }
        }
    }

    let rebuild = |l: &[f64]| -> SymMat {
        SymMat::from_fn(n, |i, j| (0..n).map(|k| l[i * n + k] * l[j * n + k]).sum())
    };
    let residuals = |l: &[f64]| -> Result<Vec<f64>> {
        Ok(ms
            .apply(&rebuild(l))?
            .iter()
            .zip(ms.values())
            .map(|(a, b)| a - b)
            .collect())
    };

    let mut r = residuals(&l)?;
    let mut rn = linalg::norm2(&r);
    let mut mu = 1e-6 * gram_scale;
    let dim = n * n;
    // polish well below the acceptance threshold; Gauss-Newton is quadratic
    // near a zero-residual solution so the extra iterations are few
    'outer: for _ in 0..60 {
        if rn <= 0.01 * sample_accept_tol(rebuild(&l).fro_norm()) {
            break;
        }
        // J[i][p*n+q] = 2 (A_i L)[p][q]
        let mut jac: Vec<Vec<f64>> = Vec::with_capacity(m);
        for a in ms.mats() {
            let mut row = vec![0.0; dim];
            for p in 0..n {
                for q in 0..n {
                    let mut s = 0.0;
                    for t in 0..n {
                        s += a.get(p, t) * l[t * n + q];
                    }
                    row[p * n + q] = 2.0 * s;
                }
            }
            jac.push(row);
        }
        let mut jtj = vec![0.0; dim * dim];
        let mut jtr = vec![0.0; dim];
        for (row, ri) in jac.iter().zip(&r) {
            for p in 0..dim {
                jtr[p] += row[p] * ri;
                for q in p..dim {
                    jtj[p * dim + q] += row[p] * row[q];
                }
            }
        }
        for p in 0..dim {
            for q in 0..p {
                jtj[p * dim + q] = jtj[q * dim + p];
            }
        }
        let neg_jtr: Vec<f64> = jtr.iter().map(|v| -v).collect();
        for _try in 0..10 {
            let delta = match cholesky_solve(&jtj, dim, mu, &neg_jtr) {
                Some(d) => d,
                None => {
                    mu *= 8.0;
                    continue;
                }
            };
            let trial: Vec<f64> = l.iter().zip(&delta).map(|(a, b)| a + b).collect();
            let tr = residuals(&trial)?;
            let trn = linalg::norm2(&tr);
            if trn < rn {
                l = trial;
                r = tr;
                rn = trn;
                mu = (mu * 0.25).max(1e-14);
                continue 'outer;
            }
            mu *= 8.0;
        }
        break; // no damping level improved the residual
    }

    let x = rebuild(&l);
    if rn <= sample_accept_tol(x.fro_norm()) {
        Ok(Some(x))
    } else {
        Ok(None)
    }
}

/// Result of the feasible-point probe.
#[derive(Debug, Clone)]
pub struct ProbeResult {
    pub best_value: f64,
    pub best_point: Option<SymMat>,
    /// Random samples that converged (canonical candidates not counted).
    pub count_feasible: usize,
    pub attempts: usize,
    pub x0_value: f64,
}

/// Sample feasible points and report the smallest objective value seen. The
/// ground truth is always included as a candidate, and so is the zero matrix
/// whenever it is feasible.
pub fn oracle_feasible_probe(
    ms: &MeasurementSet,
    gt: &GroundTruth,
    obj: &Objective,
    samples: usize,
    seed: u64,
) -> Result<ProbeResult> {
    let x0_value = obj.value(gt.lifted())?;
    let mut best_value = x0_value;
    let mut best_point = Some(gt.lifted().clone());

    let zero = SymMat::zeros(ms.n());
    if linalg::norm2(ms.values()) <= sample_accept_tol(0.0) {
        let v = obj.value(&zero)?;
        if v < best_value {
            best_value = v;
            best_point = Some(zero);
        }
    }

    let mut count_feasible = 0usize;
    for s in 0..samples {
        if let Some(x) = feasible_point(ms, seed, s as u64)? {
            count_feasible += 1;
            let v = obj.value(&x)?;
            if v < best_value {
                best_value = v;
                best_point = Some(x);
            }
        }
    }
    Ok(ProbeResult {
        best_value,
        best_point,
        count_feasible,
        attempts: samples,
        x0_value,
    })
}

const GRID_STEP: f64 = 0.01;
const GRID_RANGE: f64 = 10.0;
const GRID_TOL: f64 = 1e-4;

/// Exhaustive grid search for cone membership on tiny instances
/// (`m <= 2`, `n <= 3`): `y` counts as a member when some grid multiplier
/// leaves `y - A*(lam)` with top eigenvalue and `x0`-image below `1e-4`.
pub fn oracle_in_s_grid(y: &SymMat, ms: &MeasurementSet, gt: &GroundTruth) -> Result<bool> {
    if ms.len() > 2 || ms.n() > 3 {
        return Err(Error::InvalidInput(format!(
            "grid oracle supports m <= 2 and n <= 3, got m={}, n={}",
            ms.len(),
            ms.n()
        )));
    }
    let steps = (2.0 * GRID_RANGE / GRID_STEP).round() as i64 + 1;
    let lam_at = |i: i64| -> f64 { -GRID_RANGE + GRID_STEP * i as f64 };
    let passes = |lam: &[f64]| -> Result<bool> {
        let m = &y.clone() - &ms.adjoint(lam)?;
        Ok(linalg::norm2(&m.mat_vec(gt.x0())?) <= GRID_TOL && m.max_eig()? <= GRID_TOL)
    };

    match ms.len() {
        0 => passes(&[]),
        1 => {
            let c0 = y.mat_vec(gt.x0())?;
            let k1 = ms.mats()[0].mat_vec(gt.x0())?;
            let k11 = linalg::dot(&k1, &k1);
            for i in 0..steps {
                let a = lam_at(i);
                // cheap reject on the x0-image condition
                let r2 = linalg::dot(&c0, &c0) - 2.0 * a * linalg::dot(&c0, &k1) + a * a * k11;
                if r2 > GRID_TOL * GRID_TOL {
                    continue;
                }
                if passes(&[a])? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        _ => {
            let c0 = y.mat_vec(gt.x0())?;
            let k1 = ms.mats()[0].mat_vec(gt.x0())?;
            let k2 = ms.mats()[1].mat_vec(gt.x0())?;
            let k22 = linalg::dot(&k2, &k2);
            for i in 0..steps {
                let a = lam_at(i);
                let va: Vec<f64> = c0
                    .iter()
                    .zip(&k1)
                    .map(|(c, k)| c - a * k)
                    .collect();
                let va2 = linalg::dot(&va, &va);
                let vak2 = linalg::dot(&va, &k2);
                for jj in 0..steps {
                    let b = lam_at(jj);
                    let r2 = va2 - 2.0 * b * vak2 + b * b * k22;
                    if r2 > GRID_TOL * GRID_TOL {
                        continue;
                    }
                    if passes(&[a, b])? {
                        return Ok(true);
                    }
                }
            }
            Ok(false)
        }
    }
}

/// Direct grid oracle for the rank-one perturbation test: the largest
/// `delta = 2^-k` that validates, checked by eigenvalues alone.
pub fn oracle_perturbation_grid(x0: &[f64], l: &SymMat) -> Result<Option<f64>> {
    for k in 0..=symmat::PERTURBATION_GRID_KMAX {
        let delta = 0.5f64.powi(k as i32);
        if symmat::perturbation_valid_at(x0, l, delta)? {
            return Ok(Some(delta));
        }
    }
    Ok(None)
}
