//! Solver configuration shared by the face detector, cone membership and
//! certificate search.

/// Knobs for the iterative solvers. All defaults are sized for dense desk-scale
/// problems (n up to a few dozen).
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SolverConfig {
    /// Master seed; every random stream in the crate derives from it.
    pub seed: u64,
    /// Base feasibility/membership tolerance.
    pub tol: f64,
    /// Iteration budget for the alternating-projection feasibility solver.
    pub max_iter: usize,
    /// Randomized restarts when hunting for a maximum-rank face element.
    pub restarts: usize,
    /// Stop face exploration after this many consecutive restarts without
    /// range growth.
    pub r_stall: usize,
    /// Iteration budget for the eigenvalue-minimization step of membership.
    pub member_iters: usize,
    /// Restarts for the membership optimizer.
    pub member_restarts: usize,
    /// Sample budget for the feasible-point oracle.
    pub samples: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            seed: 0,
            tol: 1e-7,
            max_iter: 100_000,
            restarts: 16,
            r_stall: 4,
            member_iters: 5000,
            member_restarts: 8,
            samples: 200,
        }
    }
}

impl SolverConfig {
    pub fn with_seed(seed: u64) -> Self {
        SolverConfig {
            seed,
            ..Default::default()
        }
    }
}
