//! Small dense linear-algebra kernels: vector helpers, Householder QR with
//! column pivoting (rank-revealing least squares and null spaces), and a
//! Cholesky solve for damped normal equations.
//!
//! Everything here works on plain `Vec<f64>` at desk scale; no attempt is made
//! to block or vectorize.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scaled(alpha: f64, x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| alpha * v).collect()
}

pub fn normalized(x: &[f64]) -> Option<Vec<f64>> {
    let n = norm2(x);
    if n > 0.0 {
        Some(scaled(1.0 / n, x))
    } else {
        None
    }
}

/// Modified Gram-Schmidt with re-orthogonalization. Returns an orthonormal
/// basis of the span of `vecs`; directions whose residual falls below
/// `rel_tol` times their original norm are discarded as dependent.
pub fn orthonormalize(vecs: &[Vec<f64>], rel_tol: f64) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vecs {
        let scale = norm2(v);
        if scale == 0.0 {
            continue;
        }
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&w, b);
                axpy(-c, b, &mut w);
            }
        }
        let r = norm2(&w);
        if r > rel_tol * scale {
            basis.push(scaled(1.0 / r, &w));
        }
    }
    basis
}

/// Householder QR factorization with column pivoting of a `rows x cols`
/// matrix, rank-revealing at a relative diagonal threshold.
pub struct PivotedQr {
    rows: usize,
    cols: usize,
    /// Column-major factored matrix: R on and above the diagonal, Householder
    /// vectors (with implicit unit leading entry) below.
    fact: Vec<f64>,
    betas: Vec<f64>,
    /// `perm[j]` = index of the original column sitting in factored slot `j`.
    perm: Vec<usize>,
    rank: usize,
}

impl PivotedQr {
    /// Factor the matrix whose columns are `cols_in`. `rel_tol` is the
    /// rank-decision threshold on |R_kk| relative to the first pivot.
    pub fn new(cols_in: &[Vec<f64>], rel_tol: f64) -> Self {
        let cols = cols_in.len();
        let rows = cols_in.first().map_or(0, |c| c.len());
        let mut fact = vec![0.0; rows * cols];
        for (j, c) in cols_in.iter().enumerate() {
            debug_assert_eq!(c.len(), rows);
            fact[j * rows..(j + 1) * rows].copy_from_slice(c);
        }
        let mut perm: Vec<usize> = (0..cols).collect();
        let mut betas = vec![0.0; cols.min(rows)];
        let steps = cols.min(rows);
        let mut rank = 0;
        let mut first_pivot = 0.0_f64;

        for k in 0..steps {
            // pivot: bring the trailing column with the largest remaining norm to slot k
            let mut best = k;
            let mut best_norm = 0.0;
            for j in k..cols {
                let col = &fact[j * rows + k..(j + 1) * rows];
                let nrm = norm2(col);
                if nrm > best_norm {
                    best_norm = nrm;
                    best = j;
                }
            }
            if best != k {
                for r in 0..rows {
                    fact.swap(k * rows + r, best * rows + r);
                }
                perm.swap(k, best);
            }
            if k == 0 {
                first_pivot = best_norm;
            }
            if best_norm <= rel_tol * first_pivot || best_norm == 0.0 {
                break;
            }
            rank = k + 1;

            // Householder vector for fact[k.., k]
            let (beta, tau) = {
                let col = &mut fact[k * rows..(k + 1) * rows];
                let alpha = col[k];
                let sigma = dot(&col[k + 1..], &col[k + 1..]);
                if sigma == 0.0 {
                    (0.0, alpha)
                } else {
                    let mu = (alpha * alpha + sigma).sqrt();
                    let v0 = if alpha <= 0.0 { alpha - mu } else { -sigma / (alpha + mu) };
                    let beta = 2.0 * v0 * v0 / (sigma + v0 * v0);
                    for r in k + 1..rows {
                        col[r] /= v0;
                    }
                    // this reflector maps the column segment to +mu * e1
                    (beta, mu)
                }
            };
            betas[k] = beta;
            // apply reflector to trailing columns
            if beta != 0.0 {
                for j in k + 1..cols {
                    let mut s = fact[j * rows + k];
                    for r in k + 1..rows {
                        s += fact[k * rows + r] * fact[j * rows + r];
                    }
                    s *= beta;
                    fact[j * rows + k] -= s;
                    for r in k + 1..rows {
                        fact[j * rows + r] -= s * fact[k * rows + r];
                    }
                }
            }
            fact[k * rows + k] = tau;
        }

        PivotedQr {
            rows,
            cols,
            fact,
            betas,
            perm,
            rank,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    fn apply_qt(&self, b: &mut [f64]) {
        for k in 0..self.rank {
            let beta = self.betas[k];
            if beta == 0.0 {
                continue;
            }
            let mut s = b[k];
            for r in k + 1..self.rows {
                s += self.fact[k * self.rows + r] * b[r];
            }
            s *= beta;
            b[k] -= s;
            for r in k + 1..self.rows {
                b[r] -= s * self.fact[k * self.rows + r];
            }
        }
    }

    /// Rank-truncated least squares `min ||A x - b||`. Coefficients of columns
    /// beyond the numerical rank are zero. Returns `(x, residual_norm)`.
    pub fn solve(&self, b: &[f64]) -> (Vec<f64>, f64) {
        assert_eq!(b.len(), self.rows);
        let mut y = b.to_vec();
        self.apply_qt(&mut y);
        let r = self.rank;
        let mut xr = vec![0.0; r];
        for i in (0..r).rev() {
            let mut s = y[i];
            for j in i + 1..r {
                s -= self.fact[j * self.rows + i] * xr[j];
            }
            xr[i] = s / self.fact[i * self.rows + i];
        }
        let mut x = vec![0.0; self.cols];
        for (slot, &xi) in xr.iter().enumerate() {
            x[self.perm[slot]] = xi;
        }
        let residual = norm2(&y[r..]);
        (x, residual)
    }

    /// Orthonormal basis of the numerical null space of A (vectors of length
    /// `cols`).
    pub fn null_basis(&self) -> Vec<Vec<f64>> {
        let r = self.rank;
        let mut raw = Vec::new();
        for f in r..self.cols {
            // solve R11 w = -R[0..r, f]
            let mut w = vec![0.0; r];
            for i in (0..r).rev() {
                let mut s = -self.fact[f * self.rows + i];
                for j in i + 1..r {
                    s -= self.fact[j * self.rows + i] * w[j];
                }
                w[i] = s / self.fact[i * self.rows + i];
            }
            let mut z = vec![0.0; self.cols];
            for (slot, &wi) in w.iter().enumerate() {
                z[self.perm[slot]] = wi;
            }
            z[self.perm[f]] = 1.0;
            raw.push(z);
        }
        orthonormalize(&raw, 1e-12)
    }
}

/// Solve `(A + damp*I) x = b` for symmetric positive semidefinite `A` (flat
/// row-major `dim x dim`) via Cholesky. Returns `None` if the damped matrix is
/// not numerically positive definite.
pub fn cholesky_solve(a: &[f64], dim: usize, damp: f64, b: &[f64]) -> Option<Vec<f64>> {
    assert_eq!(a.len(), dim * dim);
    assert_eq!(b.len(), dim);
    let mut l = a.to_vec();
    for i in 0..dim {
        l[i * dim + i] += damp;
    }
    for j in 0..dim {
        for k in 0..j {
            let ljk = l[j * dim + k];
            for i in j..dim {
                l[i * dim + j] -= l[i * dim + k] * ljk;
            }
        }
        let d = l[j * dim + j];
        if d <= 0.0 {
            return None;
        }
        let s = d.sqrt();
        for i in j..dim {
            l[i * dim + j] /= s;
        }
    }
    let mut x = b.to_vec();
    for i in 0..dim {
        let mut s = x[i];
        for k in 0..i {
            s -= l[i * dim + k] * x[k];
        }
        x[i] = s / l[i * dim + i];
    }
    for i in (0..dim).rev() {
        let mut s = x[i];
        for k in i + 1..dim {
            s -= l[k * dim + i] * x[k];
        }
        x[i] = s / l[i * dim + i];
    }
    Some(x)
}
