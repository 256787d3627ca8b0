//! Cyclic Jacobi eigensolver for dense symmetric matrices.
//!
//! Plane rotations annihilate one off-diagonal entry at a time; sweeping all
//! pairs repeatedly drives the off-diagonal mass to zero. Robust for every
//! real symmetric matrix and entirely adequate at the matrix sizes this crate
//! targets.

const MAX_SWEEPS: usize = 100;

/// Eigenvalues (nondecreasing) paired with their orthonormal eigenvectors.
pub type EigenPairs = (Vec<f64>, Vec<Vec<f64>>);

/// Eigendecomposition of the dense row-major symmetric matrix `a` (size
/// `n x n`).
///
/// Fails with the sweep count and residual off-diagonal norm if the sweep
/// cap is exhausted, which in practice indicates non-finite input.
pub fn eigen_symmetric(a: &[f64], n: usize) -> Result<EigenPairs, (usize, f64)> {
    assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    // v starts as identity; accumulates rotations so that columns are eigenvectors
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let fro: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let off_tol = 1e-14 * fro.max(f64::MIN_POSITIVE);

    let mut sweeps = 0;
    loop {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[p * n + q] * m[p * n + q];
            }
        }
        let off = (2.0 * off).sqrt();
        if off <= off_tol {
            break;
        }
        if sweeps >= MAX_SWEEPS {
            return Err((sweeps, off));
        }
        sweeps += 1;

        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                // rotation angle from the stable half-angle formula
                let theta = 0.5 * (aqq - app) / apq;
                let t = if theta.abs() > 1e15 {
                    0.5 / theta
                } else {
                    let sgn = if theta >= 0.0 { 1.0 } else { -1.0 };
                    sgn / (theta.abs() + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                m[p * n + p] = app - t * apq;
                m[q * n + q] = aqq + t * apq;
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;

                for j in 0..n {
                    if j != p && j != q {
                        let ajp = m[j * n + p];
                        let ajq = m[j * n + q];
                        let new_p = ajp - s * (ajq + tau * ajp);
                        let new_q = ajq + s * (ajp - tau * ajq);
                        m[j * n + p] = new_p;
                        m[p * n + j] = new_p;
                        m[j * n + q] = new_q;
                        m[q * n + j] = new_q;
                    }
                }
                for j in 0..n {
                    let vjp = v[j * n + p];
                    let vjq = v[j * n + q];
                    v[j * n + p] = vjp - s * (vjq + tau * vjp);
                    v[j * n + q] = vjq + s * (vjp - tau * vjq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].partial_cmp(&m[j * n + j]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| m[i * n + i]).collect();
    let vectors: Vec<Vec<f64>> = order
        .iter()
        .map(|&c| (0..n).map(|r| v[r * n + c]).collect())
        .collect();
    Ok((values, vectors))
}
