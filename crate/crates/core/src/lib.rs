//! Nonparametric test of no-effect of a functional covariate on a functional
//! response.
//!
//! The response curves enter only through their Gram matrix `⟨U_i, U_j⟩`.
//! Covariate curves are projected on the first `p` elements of an orthonormal
//! basis, then on candidate unit directions γ; the projection scores are
//! replaced by their empirical d.f. values (ranks), which turns kernel
//! smoothing into nearest-neighbor smoothing. For each direction the
//! U-statistic
//!
//! ```text
//! Q_n(γ) = 1/(n(n−1)) Σ_{i≠j} ⟨U_i, U_j⟩ h⁻¹ K((F_n(⟨X_i,γ⟩) − F_n(⟨X_j,γ⟩))/h)
//! ```
//!
//! is standardized, a least favorable direction is chosen with a penalty
//! favoring a privileged direction γ₀, and the resulting `T_n` is calibrated
//! by a Mammen wild bootstrap or by standard normal quantiles.
//!
//! Modules:
//!
//! | module | contents |
//! |---|---|
//! | [`functional`] | grids, sampled curves, quadrature, bases, curve CSV files |
//! | [`statistic`] | ranks, kernel, `Q_n`, `v̂²`, standardized statistic |
//! | [`direction`] | half-sphere grids, penalized direction search |
//! | [`bootstrap`] | Mammen weights, wild bootstrap calibration |
//! | [`procedure`] | the full test on a pair of samples |
//! | [`simulation`] | Karhunen–Loève generators and power studies |

pub mod bootstrap;
pub mod direction;
pub mod error;
pub mod functional;
pub mod procedure;
pub mod simulation;
pub mod statistic;

pub use bootstrap::{
    bootstrap_gram, draw_mammen, substream, wild_bootstrap, wild_bootstrap_multi, BootstrapResult,
    CalibratedSelection, MammenWeights,
};
pub use direction::{
    privileged_direction, select_direction, select_directions, sphere_grid, Direction,
    DirectionGrid, PrivilegedChoice, SearchCache, SelectionResult,
};
pub use error::{Error, Result};
pub use functional::{
    center_sample, gram_matrix, inner_product, project_scores, Basis, BasisKind, CoefficientMatrix,
    FunctionalSample, GramMatrix, TimeGrid,
};
pub use procedure::{run_test, BandwidthOutcome, Calibration, TestConfig, TestOutcome};
pub use simulation::{power_curve, PowerReport, PowerRow, QuadraticMode, Scenario, ScenarioKind};
pub use statistic::{
    kernel_eval, q_n, rank_transform, standardized_stat, v_hat_sq, DirectionStatistics,
    KernelFamily, KernelKind, KernelSpec, RankVector,
};
