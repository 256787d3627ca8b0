//! Symmetric-matrix value types and the dense numerical kernels built on
//! them: Hilbert-Schmidt inner products, symmetric tensor products,
//! eigendecomposition, semidefiniteness tests, orthogonal-complement
//! projections, and the rank-one perturbation test.
//!
//! `SymMat` stores the packed upper triangle, so asymmetry is unrepresentable
//! by construction. All values are immutable in spirit: operations return new
//! matrices.

use crate::error::{Error, Result};
use crate::jacobi;
use crate::linalg;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Relative eigensolver accuracy target.
pub fn eig_tol(a: &SymMat) -> f64 {
    1e-12 * a.fro_norm().max(1.0)
}

/// Default tolerance for "is positive semidefinite", two orders above
/// eigensolver noise.
pub fn psd_tol(a: &SymMat) -> f64 {
    1e-9 * a.fro_norm().max(1.0)
}

/// A real symmetric `n x n` matrix, packed upper triangle in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMat {
    n: usize,
    data: Vec<f64>,
}

#[inline]
fn packed_len(n: usize) -> usize {
    n * (n + 1) / 2
}

impl SymMat {
    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        debug_assert!(j < self.n);
        i * self.n - i * (i + 1) / 2 + j
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "dimension must be positive");
        SymMat {
            n,
            data: vec![0.0; packed_len(n)],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = SymMat::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Build from a dense row-major square array, validating finiteness and
    /// symmetry. Mildly asymmetric input (below `1e-9` relative) is averaged.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput(
                "matrix must be square with positive dimension".into(),
            ));
        }
        let mut scale = 0.0f64;
        for r in rows {
            for &x in r {
                if !x.is_finite() {
                    return Err(Error::NonFinite("matrix entry"));
                }
                scale = scale.max(x.abs());
            }
        }
        let asym_tol = 1e-9 * scale.max(1.0);
        let mut m = SymMat::zeros(n);
        for i in 0..n {
            for j in i..n {
                if (rows[i][j] - rows[j][i]).abs() > asym_tol {
                    return Err(Error::InvalidInput(format!(
                        "matrix is not symmetric at ({i},{j})"
                    )));
                }
                m.set(i, j, 0.5 * (rows[i][j] + rows[j][i]));
            }
        }
        Ok(m)
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = SymMat::zeros(n);
        for i in 0..n {
            for j in i..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Rank-one outer product `x x*`.
    pub fn outer(x: &[f64]) -> Self {
        SymMat::from_fn(x.len(), |i, j| x[i] * x[j])
    }

    /// Symmetric tensor product `y q* + q y*`.
    pub fn sym_tensor(y: &[f64], q: &[f64]) -> Result<Self> {
        if y.len() != q.len() {
            return Err(Error::dim(format!(
                "sym_tensor: {} vs {}",
                y.len(),
                q.len()
            )));
        }
        Ok(SymMat::from_fn(y.len(), |i, j| {
            y[i] * q[j] + q[i] * y[j]
        }))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    /// Hilbert-Schmidt inner product `tr(B* A)`; symmetric in its arguments.
    pub fn hs_inner(&self, other: &SymMat) -> Result<f64> {
        if self.n != other.n {
            return Err(Error::dim(format!("hs_inner: {} vs {}", self.n, other.n)));
        }
        let mut acc = 0.0;
        let mut k = 0;
        for i in 0..self.n {
            // diagonal term once, off-diagonal terms twice
            acc += self.data[k] * other.data[k];
            k += 1;
            for _ in i + 1..self.n {
                acc += 2.0 * self.data[k] * other.data[k];
                k += 1;
            }
        }
        Ok(acc)
    }

    pub fn fro_norm(&self) -> f64 {
        self.hs_inner(self).expect("same matrix").sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn scale(&self, c: f64) -> SymMat {
        SymMat {
            n: self.n,
            data: self.data.iter().map(|x| c * x).collect(),
        }
    }

    pub fn add_scaled(&mut self, c: f64, other: &SymMat) {
        assert_eq!(self.n, other.n);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
    }

    pub fn lin_comb(n: usize, terms: &[(f64, &SymMat)]) -> Result<SymMat> {
        let mut out = SymMat::zeros(n);
        for (c, m) in terms {
            if m.n != n {
                return Err(Error::dim(format!("lin_comb: {} vs {}", m.n, n)));
            }
            out.add_scaled(*c, m);
        }
        Ok(out)
    }

    /// Matrix-vector product.
    pub fn mat_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.n {
            return Err(Error::dim(format!("mat_vec: {} vs {}", self.n, v.len())));
        }
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            let mut s = 0.0;
            for j in 0..self.n {
                s += self.get(i, j) * v[j];
            }
            out[i] = s;
        }
        Ok(out)
    }

    /// Scaled vectorization: packed upper triangle with off-diagonal entries
    /// multiplied by sqrt(2), so that Euclidean inner products of svec vectors
    /// equal Hilbert-Schmidt inner products of the matrices.
    pub fn svec(&self) -> Vec<f64> {
        let rt2 = std::f64::consts::SQRT_2;
        let mut out = Vec::with_capacity(self.data.len());
        let mut k = 0;
        for i in 0..self.n {
            out.push(self.data[k]);
            k += 1;
            for _ in i + 1..self.n {
                out.push(rt2 * self.data[k]);
                k += 1;
            }
        }
        out
    }

    pub fn from_svec(n: usize, v: &[f64]) -> SymMat {
        assert_eq!(v.len(), packed_len(n));
        let rt2 = std::f64::consts::SQRT_2;
        let mut m = SymMat::zeros(n);
        let mut k = 0;
        for i in 0..n {
            m.set(i, i, v[k]);
            k += 1;
            for j in i + 1..n {
                m.set(i, j, v[k] / rt2);
                k += 1;
            }
        }
        m
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    fn to_dense_flat(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            for j in 0..self.n {
                out[i * self.n + j] = self.get(i, j);
            }
        }
        out
    }

    /// Full eigendecomposition, eigenvalues nondecreasing.
    pub fn eig(&self) -> Result<EigDecomp> {
        if !self.is_finite() {
            return Err(Error::NonFinite("eig input"));
        }
        match jacobi::eigen_symmetric(&self.to_dense_flat(), self.n) {
            Ok((values, vectors)) => Ok(EigDecomp { values, vectors }),
            Err((sweeps, residual)) => Err(Error::EigNonConvergence { sweeps, residual }),
        }
    }

    pub fn min_eig(&self) -> Result<f64> {
        Ok(self.eig()?.values[0])
    }

    pub fn max_eig(&self) -> Result<f64> {
        Ok(*self.eig()?.values.last().unwrap())
    }

    pub fn is_psd(&self, tol: f64) -> Result<bool> {
        Ok(self.min_eig()? >= -tol)
    }

    /// Nearest PSD matrix in Frobenius norm: negative eigenvalues clipped.
    pub fn psd_clip(&self) -> Result<SymMat> {
        let e = self.eig()?;
        let mut out = SymMat::zeros(self.n);
        for (val, vec) in e.values.iter().zip(&e.vectors) {
            if *val > 0.0 {
                out.add_scaled(*val, &SymMat::outer(vec));
            }
        }
        Ok(out)
    }

    /// Nearest NSD matrix: positive eigenvalues clipped.
    pub fn nsd_clip(&self) -> Result<SymMat> {
        Ok(self.scale(-1.0).psd_clip()?.scale(-1.0))
    }
}

impl std::ops::Add for &SymMat {
    type Output = SymMat;
    fn add(self, rhs: &SymMat) -> SymMat {
        let mut out = self.clone();
        out.add_scaled(1.0, rhs);
        out
    }
}

impl std::ops::Sub for &SymMat {
    type Output = SymMat;
    fn sub(self, rhs: &SymMat) -> SymMat {
        let mut out = self.clone();
        out.add_scaled(-1.0, rhs);
        out
    }
}

impl Serialize for SymMat {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_dense().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SymMat {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(deserializer)?;
        SymMat::from_dense(&rows).map_err(D::Error::custom)
    }
}

/// Eigendecomposition: `values` nondecreasing, `vectors[k]` the matching
/// orthonormal eigenvector.
#[derive(Debug, Clone)]
pub struct EigDecomp {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

impl EigDecomp {
    pub fn reconstruct(&self) -> SymMat {
        let n = self.vectors[0].len();
        let mut out = SymMat::zeros(n);
        for (val, vec) in self.values.iter().zip(&self.vectors) {
            out.add_scaled(*val, &SymMat::outer(vec));
        }
        out
    }

    pub fn reconstruction_residual(&self, a: &SymMat) -> f64 {
        (&self.reconstruct() - a).fro_norm()
    }

    pub fn orthonormality_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, vi) in self.vectors.iter().enumerate() {
            for (j, vj) in self.vectors.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((linalg::dot(vi, vj) - target).abs());
            }
        }
        worst
    }
}

/// A subspace of R^n held as an orthonormal basis (possibly empty).
#[derive(Debug, Clone)]
pub struct Subspace {
    dim_ambient: usize,
    basis: Vec<Vec<f64>>,
}

impl Subspace {
    pub fn empty(dim_ambient: usize) -> Self {
        Subspace {
            dim_ambient,
            basis: Vec::new(),
        }
    }

    /// Orthonormalize a spanning set; near-dependent directions are dropped.
    pub fn from_spanning(dim_ambient: usize, vecs: &[Vec<f64>]) -> Result<Self> {
        for v in vecs {
            if v.len() != dim_ambient {
                return Err(Error::dim(format!(
                    "subspace vector has length {}, ambient {}",
                    v.len(),
                    dim_ambient
                )));
            }
        }
        Ok(Subspace {
            dim_ambient,
            basis: linalg::orthonormalize(vecs, 1e-10),
        })
    }

    pub fn dim_ambient(&self) -> usize {
        self.dim_ambient
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    /// Component of `v` inside the subspace.
    pub fn project_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim_ambient];
        for b in &self.basis {
            linalg::axpy(linalg::dot(v, b), b, &mut out);
        }
        out
    }

    /// Restriction of `x` to rows and columns in the orthogonal complement:
    /// `P x P` with `P` the projector onto the complement. Idempotent and
    /// self-adjoint in the Hilbert-Schmidt sense.
    pub fn project_perp(&self, x: &SymMat) -> Result<SymMat> {
        if x.n() != self.dim_ambient {
            return Err(Error::dim(format!(
                "project_perp: ambient {} vs matrix {}",
                self.dim_ambient,
                x.n()
            )));
        }
        if self.basis.is_empty() {
            return Ok(x.clone());
        }
        // columns of P X: apply X then subtract basis components on both sides
        let n = self.dim_ambient;
        let perp = |v: &[f64]| -> Vec<f64> {
            let mut w = v.to_vec();
            for b in &self.basis {
                let c = linalg::dot(v, b);
                linalg::axpy(-c, b, &mut w);
            }
            w
        };
        // build P X P column by column
        let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
        for j in 0..n {
            let mut ej = vec![0.0; n];
            ej[j] = 1.0;
            let pj = perp(&ej);
            let xpj = x.mat_vec(&pj)?;
            cols.push(perp(&xpj));
        }
        Ok(SymMat::from_fn(n, |i, j| {
            0.5 * (cols[j][i] + cols[i][j])
        }))
    }
}

/// Kernel test for a (nearly) PSD matrix: `q` counts as a null vector when
/// `||X q|| <= tol * ||X||_F * ||q||`. For PSD `X` this is equivalent to
/// `<X, q q*> = 0`, which in turn forces `<X, y (x) q> = 0` for every `y`.
pub fn psd_kernel(x: &SymMat, q: &[f64], tol: f64) -> Result<bool> {
    let xq = x.mat_vec(q)?;
    Ok(linalg::norm2(&xq) <= tol * x.fro_norm() * linalg::norm2(q))
}

/// Orthonormal basis of the orthogonal complement of `span{x0}`.
pub fn orthocomplement_basis(x0: &[f64]) -> Vec<Vec<f64>> {
    let n = x0.len();
    let mut gens = Vec::with_capacity(n + 1);
    gens.push(x0.to_vec());
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        gens.push(e);
    }
    let full = linalg::orthonormalize(&gens, 1e-12);
    full.into_iter().skip(1).collect()
}

/// Largest grid exponent for the perturbation search: delta ranges over
/// `2^-k` for `k = 0..=PERTURBATION_GRID_KMAX`.
pub const PERTURBATION_GRID_KMAX: u32 = 30;

/// Shared validation predicate for the perturbation search: `x0 x0* + delta L`
/// counts as PSD when its smallest eigenvalue clears a tolerance that scales
/// with `delta^2`, so that second-order violations in `delta` are never
/// mistaken for feasibility.
pub fn perturbation_valid_at(x0: &[f64], l: &SymMat, delta: f64) -> Result<bool> {
    let mut m = SymMat::outer(x0);
    m.add_scaled(delta, l);
    let tol = 1e-9 * (delta * l.fro_norm().max(1.0)).powi(2);
    Ok(m.min_eig()? >= -tol)
}

/// Decide whether `x0 x0* + delta L` is PSD for some `delta > 0`, and if so
/// return the largest validated grid value.
///
/// The decision is structural: writing `P` for the projector onto the
/// complement of `x0`, a positive `delta` exists iff (a) `P L P` is PSD and
/// (b) every null direction `q` of `P L P` inside the complement satisfies
/// `<L, x0 (x) q> = 0`. When both hold the returned `delta` is found by
/// halving from 1 down to `2^-30` and validating with `perturbation_valid_at`.
pub fn positive_perturbation(x0: &[f64], l: &SymMat) -> Result<Option<f64>> {
    if x0.len() != l.n() {
        return Err(Error::dim(format!(
            "positive_perturbation: {} vs {}",
            x0.len(),
            l.n()
        )));
    }
    if linalg::norm2(x0) == 0.0 {
        return Err(Error::InvalidInput("x0 must be nonzero".into()));
    }
    let basis = orthocomplement_basis(x0);
    if !basis.is_empty() {
        // restricted matrix B^T L B on the complement
        let r = basis.len();
        let lb: Vec<Vec<f64>> = basis.iter().map(|b| l.mat_vec(b).expect("dim")).collect();
        let restricted = SymMat::from_fn(r, |i, j| linalg::dot(&basis[i], &lb[j]));

        let e = restricted.eig()?;
        // (a) restriction must be PSD
        if e.values[0] < -psd_tol(&restricted) {
            return Ok(None);
        }
        // (b) null directions of the restriction must not couple to x0
        let zero_tol = 1e-8 * restricted.fro_norm().max(1.0);
        let couple_tol = 1e-8 * (1.0 + 2.0 * l.fro_norm() * linalg::norm2(x0));
        for (val, w) in e.values.iter().zip(&e.vectors) {
            if *val <= zero_tol {
                // map back to ambient coordinates
                let mut q = vec![0.0; x0.len()];
                for (wi, b) in w.iter().zip(&basis) {
                    linalg::axpy(*wi, b, &mut q);
                }
                let tensor = SymMat::sym_tensor(x0, &q)?;
                if l.hs_inner(&tensor)?.abs() > couple_tol {
                    return Ok(None);
                }
            }
        }
    }
    for k in 0..=PERTURBATION_GRID_KMAX {
        let delta = 0.5f64.powi(k as i32);
        if perturbation_valid_at(x0, l, delta)? {
            return Ok(Some(delta));
        }
    }
    Ok(None)
}
