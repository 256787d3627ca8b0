//! The linear measurement operator: an ordered list of symmetric matrices
//! `A_i` with values `b_i` representing `<X, A_i> = b_i`, plus the rank-one
//! ground truth it is consistent with.

use crate::error::{Error, Result};
use crate::linalg::{self, PivotedQr};
use crate::symmat::SymMat;

/// Relative rank/span threshold used for all span and independence tests.
pub const SPAN_RANK_TOL: f64 = 1e-8;

/// Default residual tolerance for span membership of `y`.
pub fn span_tol(y: &SymMat) -> f64 {
    1e-8 * (1.0 + y.fro_norm())
}

/// The ground truth `x0` with its rank-one lift `X0 = x0 x0*` cached.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    x0: Vec<f64>,
    x0_mat: SymMat,
}

impl GroundTruth {
    pub fn new(x0: Vec<f64>) -> Result<Self> {
        if x0.is_empty() {
            return Err(Error::InvalidInput("x0 must have positive dimension".into()));
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("x0"));
        }
        if linalg::norm2(&x0) == 0.0 {
            return Err(Error::InvalidInput("x0 must be nonzero".into()));
        }
        let x0_mat = SymMat::outer(&x0);
        Ok(GroundTruth { x0, x0_mat })
    }

    pub fn n(&self) -> usize {
        self.x0.len()
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    /// The lifted matrix `X0 = x0 x0*`.
    pub fn lifted(&self) -> &SymMat {
        &self.x0_mat
    }
}

/// An ordered measurement set: matrices `A_i` and right-hand sides `b_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    n: usize,
    mats: Vec<SymMat>,
    values: Vec<f64>,
}

/// Result of appending a measurement with `require_new` semantics.
#[derive(Debug, Clone)]
pub struct AppendOutcome {
    pub set: MeasurementSet,
    /// False when the candidate was already in the span and was skipped.
    pub appended: bool,
}

impl MeasurementSet {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("ambient dimension must be positive".into()));
        }
        Ok(MeasurementSet {
            n,
            mats: Vec::new(),
            values: Vec::new(),
        })
    }

    pub fn from_parts(n: usize, mats: Vec<SymMat>, values: Vec<f64>) -> Result<Self> {
        if mats.len() != values.len() {
            return Err(Error::InvalidInput(format!(
                "{} matrices but {} values",
                mats.len(),
                values.len()
            )));
        }
        for m in &mats {
            if m.n() != n {
                return Err(Error::dim(format!("measurement has n={}, set has n={}", m.n(), n)));
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("measurement value"));
        }
        Ok(MeasurementSet { n, mats, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.mats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mats.is_empty()
    }

    pub fn mats(&self) -> &[SymMat] {
        &self.mats
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Push a measurement unconditionally.
    pub fn push(&mut self, mat: SymMat, value: f64) -> Result<()> {
        if mat.n() != self.n {
            return Err(Error::dim(format!("push: n={} vs {}", mat.n(), self.n)));
        }
        if !value.is_finite() {
            return Err(Error::NonFinite("measurement value"));
        }
        self.mats.push(mat);
        self.values.push(value);
        Ok(())
    }

    /// `A(X)`: inner products against every measurement matrix.
    pub fn apply(&self, x: &SymMat) -> Result<Vec<f64>> {
        if x.n() != self.n {
            return Err(Error::dim(format!("apply: n={} vs {}", x.n(), self.n)));
        }
        self.mats.iter().map(|a| a.hs_inner(x)).collect()
    }

    /// Adjoint `A*(lam) = sum_i lam_i A_i`.
    pub fn adjoint(&self, lam: &[f64]) -> Result<SymMat> {
        if lam.len() != self.len() {
            return Err(Error::dim(format!(
                "adjoint: {} coefficients for {} measurements",
                lam.len(),
                self.len()
            )));
        }
        let mut out = SymMat::zeros(self.n);
        for (c, a) in lam.iter().zip(&self.mats) {
            out.add_scaled(*c, a);
        }
        Ok(out)
    }

    /// QR factorization of the svec'd measurement matrices; the basis for all
    /// span tests.
    pub(crate) fn span_qr(&self) -> PivotedQr {
        let cols: Vec<Vec<f64>> = self.mats.iter().map(|a| a.svec()).collect();
        PivotedQr::new(&cols, SPAN_RANK_TOL)
    }

    /// Dimension of `span{A_i}`.
    pub fn span_dim(&self) -> usize {
        if self.is_empty() {
            return 0;
        }
        self.span_qr().rank()
    }

    /// Least-squares span membership: coefficients `lam` with
    /// `||A*(lam) - y||_F <= tol * (1 + ||y||_F)`, or `None` when the residual
    /// stays above tolerance.
    pub fn in_span(&self, y: &SymMat, tol: f64) -> Result<Option<Vec<f64>>> {
        if y.n() != self.n {
            return Err(Error::dim(format!("in_span: n={} vs {}", y.n(), self.n)));
        }
        if self.is_empty() {
            return Ok(if y.fro_norm() <= tol * (1.0 + y.fro_norm()) {
                Some(Vec::new())
            } else {
                None
            });
        }
        let qr = self.span_qr();
        let (lam, residual) = qr.solve(&y.svec());
        if residual <= tol * (1.0 + y.fro_norm()) {
            Ok(Some(lam))
        } else {
            Ok(None)
        }
    }

    /// Matrix whose columns are `A_i x0`; rank decisions on it drive the
    /// independence test and the linear stage of cone membership.
    pub fn image_columns(&self, gt: &GroundTruth) -> Result<Vec<Vec<f64>>> {
        if gt.n() != self.n {
            return Err(Error::dim(format!("images: n={} vs {}", gt.n(), self.n)));
        }
        self.mats.iter().map(|a| a.mat_vec(gt.x0())).collect()
    }

    /// Are the vectors `{A_i x0}` linearly independent? Numerical rank is
    /// decided by column-pivoted QR at threshold `tol` relative to the
    /// largest pivot. More measurements than ambient dimensions can never be
    /// independent.
    pub fn independent_images(&self, gt: &GroundTruth, tol: f64) -> Result<bool> {
        if self.len() > self.n {
            return Ok(false);
        }
        if self.is_empty() {
            return Ok(true);
        }
        let cols = self.image_columns(gt)?;
        let qr = PivotedQr::new(&cols, tol);
        Ok(qr.rank() == self.len())
    }

    /// Append `(mat, value)`. With `require_new`, a matrix already inside
    /// `span{A_i}` leaves the set unchanged and flags the no-op.
    pub fn append(&self, mat: SymMat, value: f64, require_new: bool) -> Result<AppendOutcome> {
        if mat.n() != self.n {
            return Err(Error::dim(format!("append: n={} vs {}", mat.n(), self.n)));
        }
        if require_new && self.in_span(&mat, span_tol(&mat))?.is_some() {
            return Ok(AppendOutcome {
                set: self.clone(),
                appended: false,
            });
        }
        let mut set = self.clone();
        set.push(mat, value)?;
        Ok(AppendOutcome {
            set,
            appended: true,
        })
    }

    /// Verify `A(X0) = b` within `tol` per component.
    pub fn check_consistency(&self, gt: &GroundTruth, tol: f64) -> Result<()> {
        let image = self.apply(gt.lifted())?;
        for (i, (got, want)) in image.iter().zip(&self.values).enumerate() {
            if (got - want).abs() > tol * (1.0 + want.abs()) {
                return Err(Error::InvalidInput(format!(
                    "measurement {i} inconsistent with ground truth: <A_i, X0> = {got}, b_i = {want}"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn e(n: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v
    }

    /// The two-measurement instance with a PSD measurement orthogonal to X0:
    /// A1 = diag(0,1) with b1 = 0, A2 = all-ones with b2 = 1, x0 = e1.
    fn degenerate_pair() -> (MeasurementSet, GroundTruth) {
        let a1 = SymMat::from_dense(&[vec![0.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let a2 = SymMat::from_dense(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let ms = MeasurementSet::from_parts(2, vec![a1, a2], vec![0.0, 1.0]).unwrap();
        let gt = GroundTruth::new(e(2, 0)).unwrap();
        (ms, gt)
    }

    #[test]
    fn apply_on_ground_truth() {
        let (ms, gt) = degenerate_pair();
        assert_eq!(ms.apply(gt.lifted()).unwrap(), vec![0.0, 1.0]);
        ms.check_consistency(&gt, 1e-12).unwrap();
    }

    #[test]
    fn apply_zero_matrix() {
        let (ms, _) = degenerate_pair();
        assert_eq!(ms.apply(&SymMat::zeros(2)).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn apply_matches_brute_force() {
        let mut rng = crate::rng::substream(5, 1);
        let n = 4;
        let mats: Vec<SymMat> = (0..3)
            .map(|_| SymMat::from_fn(n, |_, _| rng.gen_range(-1.0..1.0)))
            .collect();
        let x = SymMat::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let gt = GroundTruth::new((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let values = mats
            .iter()
            .map(|a| a.hs_inner(gt.lifted()).unwrap())
            .collect();
        let ms = MeasurementSet::from_parts(n, mats.clone(), values).unwrap();
        let out = ms.apply(&x).unwrap();
        for (k, a) in mats.iter().enumerate() {
            let mut brute = 0.0;
            for i in 0..n {
                for j in 0..n {
                    brute += a.get(i, j) * x.get(i, j);
                }
            }
            assert!((out[k] - brute).abs() < 1e-12);
        }
    }

    #[test]
    fn adjoint_single_term_and_zero() {
        let (ms, _) = degenerate_pair();
        let a = ms.adjoint(&[1.0, 0.0]).unwrap();
        assert_eq!(a.to_dense(), vec![vec![0.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(ms.adjoint(&[0.0, 0.0]).unwrap(), SymMat::zeros(2));
    }

    #[test]
    fn adjointness_identity() {
        let mut rng = crate::rng::substream(5, 2);
        let n = 4;
        let mats: Vec<SymMat> = (0..5)
            .map(|_| SymMat::from_fn(n, |_, _| rng.gen_range(-1.0..1.0)))
            .collect();
        let ms = MeasurementSet::from_parts(n, mats, vec![0.0; 5]).unwrap();
        for _ in 0..100 {
            let lam: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let x = SymMat::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let lhs = ms.adjoint(&lam).unwrap().hs_inner(&x).unwrap();
            let rhs = linalg::dot(&lam, &ms.apply(&x).unwrap());
            assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn in_span_rejects_cross_tensor() {
        let (ms, _) = degenerate_pair();
        let y = SymMat::sym_tensor(&e(2, 0), &e(2, 1)).unwrap();
        assert!(ms.in_span(&y, span_tol(&y)).unwrap().is_none());
    }

    #[test]
    fn in_span_recovers_basis_element() {
        let (ms, _) = degenerate_pair();
        let y = ms.mats()[1].clone();
        let lam = ms.in_span(&y, span_tol(&y)).unwrap().unwrap();
        assert!((lam[0]).abs() < 1e-9 && (lam[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn in_span_round_trip() {
        let mut rng = crate::rng::substream(5, 3);
        let n = 4;
        let mats: Vec<SymMat> = (0..4)
            .map(|_| SymMat::from_fn(n, |_, _| rng.gen_range(-1.0..1.0)))
            .collect();
        let ms = MeasurementSet::from_parts(n, mats, vec![0.0; 4]).unwrap();
        for _ in 0..20 {
            let lam: Vec<f64> = (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let y = ms.adjoint(&lam).unwrap();
            let rec = ms.in_span(&y, span_tol(&y)).unwrap().expect("in span");
            let diff = (&ms.adjoint(&rec).unwrap() - &y).fro_norm();
            assert!(diff <= span_tol(&y));
        }
    }

    #[test]
    fn independence_examples() {
        let (ms, gt) = degenerate_pair();
        // A1 x0 = 0, so the images are dependent
        assert!(!ms.independent_images(&gt, SPAN_RANK_TOL).unwrap());

        let single =
            MeasurementSet::from_parts(3, vec![SymMat::identity(3)], vec![1.0]).unwrap();
        let gt3 = GroundTruth::new(e(3, 0)).unwrap();
        assert!(single.independent_images(&gt3, SPAN_RANK_TOL).unwrap());
    }

    #[test]
    fn gaussian_rank_one_measurements_independent() {
        let mut rng = crate::rng::substream(5, 4);
        for _ in 0..20 {
            let n = rng.gen_range(2..=6);
            let m = rng.gen_range(1..=n);
            let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0) + 0.1).collect();
            let gt = GroundTruth::new(x0).unwrap();
            let mats: Vec<SymMat> = (0..m)
                .map(|_| {
                    let z: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    SymMat::outer(&z)
                })
                .collect();
            let values = mats.iter().map(|a| a.hs_inner(gt.lifted()).unwrap()).collect();
            let ms = MeasurementSet::from_parts(n, mats, values).unwrap();
            assert!(ms.independent_images(&gt, SPAN_RANK_TOL).unwrap());
        }
    }

    #[test]
    fn too_many_measurements_never_independent() {
        let gt = GroundTruth::new(e(2, 0)).unwrap();
        let mats = vec![SymMat::identity(2), SymMat::outer(&e(2, 0)), SymMat::outer(&e(2, 1))];
        let values = mats.iter().map(|a| a.hs_inner(gt.lifted()).unwrap()).collect();
        let ms = MeasurementSet::from_parts(2, mats, values).unwrap();
        assert!(!ms.independent_images(&gt, SPAN_RANK_TOL).unwrap());
    }

    #[test]
    fn append_grows_span_or_is_noop() {
        let (ms, _) = degenerate_pair();
        let t = SymMat::sym_tensor(&e(2, 0), &e(2, 1)).unwrap();
        let out = ms.append(t.clone(), 0.0, true).unwrap();
        assert!(out.appended);
        assert_eq!(out.set.len(), 3);
        assert_eq!(out.set.span_dim(), 3);
        // the appended matrix is now recoverable from the span
        assert!(out.set.in_span(&t, span_tol(&t)).unwrap().is_some());

        let again = out.set.append(ms.mats()[1].clone(), 1.0, true).unwrap();
        assert!(!again.appended);
        assert_eq!(again.set, out.set);
    }
}
