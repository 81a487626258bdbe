//! Thresholds used by the verification experiments.

/// Standard-error multiplier for Monte Carlo mean checks.
pub const SE_MULTIPLIER: f64 = 3.0;

/// Minimum KS p-value accepted for a gap marginal.
pub const KS_P_MIN: f64 = 1e-3;

/// Relative band around the exact stationary gap mean, on top of `3 SE`.
pub const STATIONARY_MEAN_REL: f64 = 0.05;

/// Absolute allowance for Euler bias in displacement means, on top of `3 SE`.
pub const DRIFT_ALLOWANCE: f64 = 0.05;

/// Algebraic identities (rate formulas, reflection residuals).
pub const RATE_IDENTITY_TOL: f64 = 1e-10;
pub const DRIFT_BALANCE_TOL: f64 = 1e-12;
pub const RESIDUAL_TOL: f64 = 1e-12;

/// Growth: `log N(x)` slope must lie within `a (1 +- GROWTH_SLOPE_REL)` ...
pub const GROWTH_SLOPE_REL: f64 = 0.2;
/// ... in at least this fraction of seeded runs.
pub const GROWTH_PASS_FRACTION: f64 = 0.95;
/// Abscissae of the least-squares fit.
pub const GROWTH_FIT_POINTS: usize = 41;

/// Deviation from the mean configuration, in units of `sqrt(sum 1/lambda^2)` ...
pub const DEVIATION_MULTIPLIER: f64 = 6.0;
/// ... met in at least this fraction of seeded runs.
pub const DEVIATION_PASS_FRACTION: f64 = 0.99;

/// `|S_n + gamma|` under the law the statistic is centred on.
pub const SINGULARITY_SAME_TOL: f64 = 0.02;
/// `|S_n - limit|` under the other law.
pub const SINGULARITY_OTHER_TOL: f64 = 0.03;
/// Required separation in units of the combined standard error.
pub const SINGULARITY_SEPARATION: f64 = 10.0;

/// Local-time noise floor, in units of `sqrt(dt)`.
pub const LOCAL_TIME_NOISE: f64 = 10.0;
/// Gaps above this many `sqrt(dt)` count as separated.
pub const SEPARATION_GAP: f64 = 4.0;
/// Relative tolerance on per-path quadratic variation of `B_k`.
pub const QUADRATIC_VARIATION_REL: f64 = 0.05;
