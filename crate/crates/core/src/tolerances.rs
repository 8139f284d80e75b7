//! Numerical tolerances shared across modules.
//!
//! Everything that decides "equal", "converged" or "admissible" lives here so
//! that reports can echo the exact thresholds they were produced with.

/// Slope non-decrease required of grid samples to count as convex.
pub const CONVEXITY: f64 = 1e-12;
/// Fenchel–Young equality `g(x) + g*(y) = y·x`.
pub const FENCHEL_YOUNG: f64 = 1e-9;
/// Interval endpoints closer than this make a singleton subdifferential.
pub const SINGLETON: f64 = 1e-12;
/// Probability vectors and mixture weights must sum to one within this.
pub const PROBABILITY_SUM: f64 = 1e-12;
/// Residual of `πQ = π` accepted for a stationary vector.
pub const STATIONARITY: f64 = 1e-10;
/// Relative convergence target of Perron-root iterations.
pub const PERRON: f64 = 1e-13;
/// Iteration cap of every eigen-iteration.
pub const PERRON_MAX_ITERS: usize = 100_000;
/// Growth certificates stop doubling after this many attempts.
pub const GROWTH_MAX_DOUBLINGS: usize = 40;
/// Default margin (log-pressure units) of a growth certificate.
pub const GROWTH_MARGIN: f64 = 1.0;
/// Largest supported potential memory.
pub const MAX_MEMORY: usize = 4;
/// Largest number of words enumerated by exact Birkhoff evaluation.
pub const MAX_ENUMERATION: u128 = 2_000_000;
/// Largest transport support on either side.
pub const MAX_TRANSPORT_SUPPORT: usize = 16;

/// Tolerances as a serializable record, echoed into reports.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    pub convexity: f64,
    pub fenchel_young: f64,
    pub singleton: f64,
    pub probability_sum: f64,
    pub stationarity: f64,
    pub perron: f64,
    pub growth_margin: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            convexity: CONVEXITY,
            fenchel_young: FENCHEL_YOUNG,
            singleton: SINGLETON,
            probability_sum: PROBABILITY_SUM,
            stationarity: STATIONARITY,
            perron: PERRON,
            growth_margin: GROWTH_MARGIN,
        }
    }
}
