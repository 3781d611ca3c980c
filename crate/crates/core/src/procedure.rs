//! End-to-end test of no-effect on a pair of samples.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::bootstrap::wild_bootstrap_multi;
use crate::direction::{
    privileged_direction, select_directions, sphere_grid, DirectionEntry, PrivilegedChoice,
    SearchCache, SelectionResult,
};
use crate::error::{Error, Result};
use crate::functional::{
    center_sample, gram_matrix, max_components, BasisKind, CoefficientMatrix, FunctionalSample,
};
use crate::statistic::{KernelKind, KernelSpec};

/// Minimum sample size accepted by [`run_test`].
pub const MIN_CURVES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Calibration {
    #[default]
    Bootstrap,
    /// Standard normal critical values.
    Asymptotic,
}

/// Tuning of the test. Defaults follow the reference simulation design:
/// p = 3, α_n = 1, 1200 grid directions, B = 499, a = 0.05.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TestConfig {
    pub p: usize,
    /// `None` lets the caller pick (bridge sine for data, the scenario's own basis in simulations).
    pub basis: Option<BasisKind>,
    pub kernel: KernelKind,
    pub bandwidths: Vec<f64>,
    pub alpha_n: f64,
    pub gamma0: PrivilegedChoice,
    pub grid_size: usize,
    pub bootstrap: usize,
    pub level: f64,
    pub seed: u64,
    pub calibration: Calibration,
    pub center: bool,
    pub per_direction: bool,
}

impl Default for TestConfig {
    fn default() -> Self {
        Self {
            p: 3,
            basis: None,
            kernel: KernelKind::Epanechnikov,
            bandwidths: vec![0.2],
            alpha_n: 1.0,
            gamma0: PrivilegedChoice::Uninformative,
            grid_size: 1200,
            bootstrap: 499,
            level: 0.05,
            seed: 1,
            calibration: Calibration::Bootstrap,
            center: true,
            per_direction: false,
        }
    }
}

impl TestConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.p == 0 {
            return bad("p must be at least 1".into());
        }
        if self.bandwidths.is_empty() {
            return bad("at least one bandwidth is required".into());
        }
        if let Some(h) = self
            .bandwidths
            .iter()
            .find(|h| !(**h > 0.0 && h.is_finite()))
        {
            return Err(Error::InvalidBandwidth(*h));
        }
        if self.alpha_n.is_nan() || self.alpha_n < 0.0 {
            return bad(format!(
                "alpha_n must be non-negative, got {}",
                self.alpha_n
            ));
        }
        if self.grid_size == 0 {
            return bad("grid size must be at least 1".into());
        }
        if self.calibration == Calibration::Bootstrap && self.bootstrap == 0 {
            return bad("bootstrap replicate count must be at least 1".into());
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return bad(format!("level must lie in (0, 1), got {}", self.level));
        }
        privileged_direction(self.p, &self.gamma0)?;
        Ok(())
    }

    pub fn kernels(&self) -> Result<Vec<KernelSpec>> {
        self.bandwidths
            .iter()
            .map(|&h| KernelSpec::new(self.kernel.into(), h))
            .collect()
    }
}

/// Result of the test at one bandwidth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthOutcome {
    pub bandwidth: f64,
    pub t_n: f64,
    pub q_n: f64,
    pub v_hat_sq: f64,
    pub gamma_hat: Vec<f64>,
    pub gamma_hat_index: usize,
    pub selected_is_privileged: bool,
    /// `None` when the bootstrap order statistic does not exist (B too small for the level).
    pub critical_value: Option<f64>,
    pub p_value: f64,
    pub reject: bool,
    pub skipped_directions: usize,
    pub bootstrap_aborts: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_direction: Option<Vec<DirectionEntry>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub n: usize,
    pub basis: BasisKind,
    pub grid_directions: usize,
    pub results: Vec<BandwidthOutcome>,
    pub config: TestConfig,
}

fn outcome_from(
    sel: SelectionResult,
    bandwidth: f64,
    critical_value: Option<f64>,
    p_value: f64,
    reject: bool,
    aborts: usize,
) -> BandwidthOutcome {
    BandwidthOutcome {
        bandwidth,
        t_n: sel.t_n,
        q_n: sel.statistics.q_n,
        v_hat_sq: sel.statistics.v_hat_sq,
        gamma_hat: sel.gamma_hat.coords().to_vec(),
        gamma_hat_index: sel.gamma_hat_index,
        selected_is_privileged: sel.selected_is_privileged,
        critical_value,
        p_value,
        reject,
        skipped_directions: sel.skipped_directions,
        bootstrap_aborts: aborts,
        per_direction: sel.per_direction,
    }
}

/// Upper `a` quantile of the standard normal.
pub fn normal_critical_value(level: f64) -> f64 {
    Normal::standard().inverse_cdf(1.0 - level)
}

/// Tests `E(U | X) = 0` at every configured bandwidth.
///
/// Bandwidths are reported side by side without multiplicity adjustment;
/// picking the most favorable one after the fact inflates the size.
pub fn run_test(
    responses: &FunctionalSample,
    covariates: &FunctionalSample,
    config: &TestConfig,
) -> Result<TestOutcome> {
    config.validate()?;
    if responses.n() != covariates.n() {
        return Err(Error::RowCountMismatch {
            responses: responses.n(),
            covariates: covariates.n(),
        });
    }
    if responses.grid() != covariates.grid() {
        return Err(Error::GridMismatch);
    }
    let n = responses.n();
    if n < MIN_CURVES {
        return Err(Error::TooFewCurves {
            required: MIN_CURVES,
            found: n,
        });
    }
    if config.p > max_components(n) {
        return Err(Error::TooManyComponents {
            p: config.p,
            max: max_components(n),
        });
    }
    let basis_kind = config.basis.unwrap_or(BasisKind::BridgeSine);
    let centered;
    let u = if config.center {
        centered = center_sample(responses);
        &centered
    } else {
        responses
    };
    let gram = gram_matrix(u);
    let coeffs = CoefficientMatrix::new(covariates, basis_kind.into(), config.p)?;
    let gamma0 = privileged_direction(config.p, &config.gamma0)?;
    let grid = sphere_grid(config.p, config.grid_size, gamma0)?;
    let cache = SearchCache::new(&coeffs, &grid)?;
    let kernels = config.kernels()?;

    let results = match config.calibration {
        Calibration::Bootstrap => wild_bootstrap_multi(
            &gram,
            &cache,
            &kernels,
            config.alpha_n,
            config.bootstrap,
            config.level,
            config.seed,
            config.per_direction,
        )?
        .into_iter()
        .zip(&config.bandwidths)
        .map(|(c, &h)| {
            outcome_from(
                c.selection,
                h,
                c.bootstrap.critical_value,
                c.bootstrap.p_value,
                c.bootstrap.reject,
                c.aborts,
            )
        })
        .collect(),
        Calibration::Asymptotic => {
            let z = normal_critical_value(config.level);
            let normal = Normal::standard();
            select_directions(
                &gram,
                &cache,
                &kernels,
                config.alpha_n,
                config.per_direction,
            )?
            .into_iter()
            .zip(&config.bandwidths)
            .map(|(sel, &h)| {
                let sel = sel?;
                let p_value = normal.sf(sel.t_n);
                let reject = sel.t_n >= z;
                Ok(outcome_from(sel, h, Some(z), p_value, reject, 0))
            })
            .collect::<Result<Vec<_>>>()?
        }
    };
    Ok(TestOutcome {
        n,
        basis: basis_kind,
        grid_directions: grid.len(),
        results,
        config: TestConfig {
            basis: Some(basis_kind),
            ..config.clone()
        },
    })
}
