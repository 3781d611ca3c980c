//! Simulation designs built from truncated Karhunen–Loève expansions, and a
//! Monte Carlo harness estimating rejection rates over a bandwidth grid.
//!
//! Random streams are keyed by `(master seed, replication, role)` so every
//! replication can be generated independently and in any order.

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::substream;
use crate::error::{Error, Result};
use crate::functional::{BasisKind, FunctionalSample, TimeGrid};
use crate::procedure::{run_test, TestConfig};

/// Default number of Karhunen–Loève terms.
pub const DEFAULT_KL_TERMS: usize = 100;

/// Default bandwidth grid on the rank scale.
pub const DEFAULT_BANDWIDTHS: [f64; 7] = [0.05, 0.10, 0.15, 0.20, 0.30, 0.40, 0.50];

const ROLE_COVARIATE: u64 = 0;
const ROLE_NOISE: u64 = 1;
const ROLE_BOOTSTRAP: u64 = 2;
const ROLES: u64 = 4;

/// Gaussian process with a known sine eigen-decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KlProcess {
    /// Eigenfunctions √2 sin(jπt), eigenvalues 1/(jπ)².
    BrownianBridge,
    /// Eigenfunctions √2 sin((j − ½)πt), eigenvalues 1/((j − ½)π)².
    BrownianMotion,
}

impl KlProcess {
    fn frequency(self, j: usize) -> f64 {
        let j = j as f64;
        match self {
            KlProcess::BrownianBridge => j,
            KlProcess::BrownianMotion => j - 0.5,
        }
    }

    fn basis(self) -> crate::functional::Basis {
        match self {
            KlProcess::BrownianBridge => crate::functional::Basis::BridgeSine,
            KlProcess::BrownianMotion => crate::functional::Basis::MotionSine,
        }
    }

    /// `√λ_j ρ_j(t)` on the grid for `j = 1..=terms`.
    fn scaled_eigenfunctions(self, grid: &TimeGrid, terms: usize) -> Vec<Vec<f64>> {
        let basis = self.basis();
        (1..=terms)
            .map(|j| {
                let s = 1.0 / (self.frequency(j) * std::f64::consts::PI);
                basis.sample(j, grid).into_iter().map(|v| v * s).collect()
            })
            .collect()
    }

    /// Pointwise variance of the expansion truncated at `terms`.
    pub fn truncated_variance(self, t: f64, terms: usize) -> f64 {
        (1..=terms)
            .map(|j| {
                let w = self.frequency(j) * std::f64::consts::PI;
                self.basis().eval(j, t).powi(2) / (w * w)
            })
            .sum()
    }

    pub fn sample(
        self,
        n: usize,
        grid: &TimeGrid,
        terms: usize,
        rng: &mut impl Rng,
    ) -> Result<FunctionalSample> {
        if terms == 0 {
            return Err(Error::InvalidConfig(
                "need at least one Karhunen-Loeve term".into(),
            ));
        }
        let eig = self.scaled_eigenfunctions(grid, terms);
        let m = grid.len();
        let mut values = vec![0.0; n * m];
        let mut xi = vec![0.0; terms];
        for row in values.chunks_exact_mut(m) {
            for v in xi.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            for (x, phi) in xi.iter().zip(&eig) {
                for (r, p) in row.iter_mut().zip(phi) {
                    *r += x * p;
                }
            }
        }
        FunctionalSample::from_flat(grid.clone(), values)
    }
}

pub fn brownian_bridge(
    n: usize,
    grid: &TimeGrid,
    terms: usize,
    rng: &mut impl Rng,
) -> Result<FunctionalSample> {
    KlProcess::BrownianBridge.sample(n, grid, terms, rng)
}

pub fn brownian_motion(
    n: usize,
    grid: &TimeGrid,
    terms: usize,
    rng: &mut impl Rng,
) -> Result<FunctionalSample> {
    KlProcess::BrownianMotion.sample(n, grid, terms, rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Linear design with the effect switched off.
    NullLinear,
    /// `U(t) = ∫ ψ(s,t) X(s) ds + ε(t)`, `ψ(s,t) = c·exp(t² + s²)/2`, X and ε bridges.
    Linear,
    /// `U(t) = c·exp(−4(t − 0.3)²)·X(t) + ε(t)`, X and ε bridges.
    Concurrent,
    /// `U(t) = c·H(X(t)) + ε(t)`, X Brownian motion, ε bridge.
    Quadratic,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::NullLinear => "null_linear",
            ScenarioKind::Linear => "linear",
            ScenarioKind::Concurrent => "concurrent",
            ScenarioKind::Quadratic => "quadratic",
        }
    }

    pub fn covariate_process(self) -> KlProcess {
        match self {
            ScenarioKind::Quadratic => KlProcess::BrownianMotion,
            _ => KlProcess::BrownianBridge,
        }
    }

    /// Basis matching the covariate's covariance eigenfunctions.
    pub fn default_basis(self) -> BasisKind {
        match self {
            ScenarioKind::Quadratic => BasisKind::MotionSine,
            _ => BasisKind::BridgeSine,
        }
    }
}

/// How `H` is centered in the quadratic design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadraticMode {
    /// `H(x) = x² − 1`.
    #[default]
    PaperLiteral,
    /// `H(x) = x² − Var X(t)` under the truncated expansion; exactly mean zero.
    Centered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub kind: ScenarioKind,
    /// Effect size; ignored for `null_linear`. The quadratic design uses it as an on/off factor.
    pub c: f64,
    pub n: usize,
    pub kl_terms: usize,
    pub grid_points: usize,
    #[serde(default)]
    pub quadratic_mode: QuadraticMode,
}

impl Scenario {
    /// Effect sizes of the reference design: 0.3 (linear), 0.6 (concurrent), 1 (quadratic).
    pub fn reference(kind: ScenarioKind, n: usize) -> Self {
        let c = match kind {
            ScenarioKind::NullLinear => 0.0,
            ScenarioKind::Linear => 0.3,
            ScenarioKind::Concurrent => 0.6,
            ScenarioKind::Quadratic => 1.0,
        };
        Self {
            kind,
            c,
            n,
            kl_terms: DEFAULT_KL_TERMS,
            grid_points: 101,
            quadratic_mode: QuadraticMode::PaperLiteral,
        }
    }

    pub fn effective_c(&self) -> f64 {
        match self.kind {
            ScenarioKind::NullLinear => 0.0,
            _ => self.c,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidConfig(format!(
                "sample size must be at least 2, got {}",
                self.n
            )));
        }
        if self.kl_terms == 0 {
            return Err(Error::InvalidConfig("kl_terms must be at least 1".into()));
        }
        if self.grid_points < 2 {
            return Err(Error::InvalidConfig(
                "grid_points must be at least 2".into(),
            ));
        }
        if !self.c.is_finite() {
            return Err(Error::InvalidConfig("effect size must be finite".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::uniform(self.grid_points)
    }

    /// Deterministic part of the response, `U − ε`, for covariates `x`.
    pub fn effect(&self, x: &FunctionalSample) -> Result<FunctionalSample> {
        let c = self.effective_c();
        let grid = x.grid();
        let t = grid.points();
        let m = t.len();
        let mut values = Vec::with_capacity(x.n() * m);
        match self.kind {
            ScenarioKind::NullLinear | ScenarioKind::Linear => {
                // kernel[k][l] = ψ(s_l, t_k) · w_l
                let w = grid.weights();
                let kernel: Vec<f64> = t
                    .iter()
                    .flat_map(|&tk| {
                        t.iter()
                            .zip(w)
                            .map(move |(&sl, &wl)| c * (tk * tk + sl * sl).exp() / 2.0 * wl)
                    })
                    .collect();
                for row in x.rows() {
                    for k in 0..m {
                        let kr = &kernel[k * m..(k + 1) * m];
                        values.push(kr.iter().zip(row).map(|(a, b)| a * b).sum());
                    }
                }
            }
            ScenarioKind::Concurrent => {
                let beta: Vec<f64> = t
                    .iter()
                    .map(|&tk| c * (-4.0 * (tk - 0.3).powi(2)).exp())
                    .collect();
                for row in x.rows() {
                    values.extend(row.iter().zip(&beta).map(|(a, b)| a * b));
                }
            }
            ScenarioKind::Quadratic => {
                let shift: Vec<f64> = match self.quadratic_mode {
                    QuadraticMode::PaperLiteral => vec![1.0; m],
                    QuadraticMode::Centered => t
                        .iter()
                        .map(|&tk| KlProcess::BrownianMotion.truncated_variance(tk, self.kl_terms))
                        .collect(),
                };
                for row in x.rows() {
                    values.extend(row.iter().zip(&shift).map(|(v, s)| c * (v * v - s)));
                }
            }
        }
        FunctionalSample::from_flat(grid.clone(), values)
    }

    /// Draws `(U, X)` from explicit covariate and noise generators.
    pub fn generate_with(
        &self,
        covariate_rng: &mut impl Rng,
        noise_rng: &mut impl Rng,
    ) -> Result<(FunctionalSample, FunctionalSample)> {
        self.validate()?;
        let grid = self.grid()?;
        let x =
            self.kind
                .covariate_process()
                .sample(self.n, &grid, self.kl_terms, covariate_rng)?;
        let eps = brownian_bridge(self.n, &grid, self.kl_terms, noise_rng)?;
        if self.effective_c() == 0.0 {
            return Ok((eps, x));
        }
        let effect = self.effect(&x)?;
        let values = effect
            .values()
            .iter()
            .zip(eps.values())
            .map(|(a, b)| a + b)
            .collect();
        Ok((FunctionalSample::from_flat(grid, values)?, x))
    }

    /// Draws `(U, X)` for replication `replication` of `seed`.
    pub fn generate(
        &self,
        seed: u64,
        replication: u64,
    ) -> Result<(FunctionalSample, FunctionalSample)> {
        let mut xr = substream(seed, replication * ROLES + ROLE_COVARIATE);
        let mut er = substream(seed, replication * ROLES + ROLE_NOISE);
        self.generate_with(&mut xr, &mut er)
    }
}

/// Noise generator used by [`Scenario::generate`] for a replication.
pub fn noise_stream(seed: u64, replication: u64) -> rand_chacha::ChaCha8Rng {
    substream(seed, replication * ROLES + ROLE_NOISE)
}

/// Bootstrap seed used for replication `replication` of a power study.
pub fn bootstrap_seed(seed: u64, replication: u64) -> u64 {
    substream(seed, replication * ROLES + ROLE_BOOTSTRAP).next_u64()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub scenario: String,
    pub c: f64,
    pub h: f64,
    pub n: usize,
    pub n_reps: usize,
    #[serde(rename = "B")]
    pub b: usize,
    pub rejections: usize,
    pub rate: f64,
    pub mc_se: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerReport {
    pub rows: Vec<PowerRow>,
    pub seed: u64,
    pub requested_reps: usize,
    pub failed_reps: usize,
    pub scenario: Scenario,
    pub test: TestConfig,
}

pub const POWER_CSV_HEADER: [&str; 10] = [
    "scenario",
    "c",
    "h",
    "n",
    "n_reps",
    "B",
    "rejections",
    "rate",
    "mc_se",
    "seed",
];

impl PowerReport {
    pub fn row(&self, h: f64) -> Option<&PowerRow> {
        self.rows.iter().find(|r| r.h == h)
    }

    /// Row with the highest rejection rate (first on ties).
    pub fn best(&self) -> Option<&PowerRow> {
        self.rows
            .iter()
            .fold(None, |best: Option<&PowerRow>, r| match best {
                Some(b) if b.rate >= r.rate => Some(b),
                _ => Some(r),
            })
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        let to_err = |e: csv::Error| Error::Parse(e.to_string());
        wtr.write_record(POWER_CSV_HEADER).map_err(to_err)?;
        for r in &self.rows {
            wtr.write_record([
                r.scenario.clone(),
                r.c.to_string(),
                r.h.to_string(),
                r.n.to_string(),
                r.n_reps.to_string(),
                r.b.to_string(),
                r.rejections.to_string(),
                r.rate.to_string(),
                r.mc_se.to_string(),
                r.seed.to_string(),
            ])
            .map_err(to_err)?;
        }
        let bytes = wtr.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Monte Carlo rejection rates of the test for `scenario` at each bandwidth of
/// `config`. The covariate basis is the scenario's own unless `config.basis`
/// is set; responses are not re-centered.
pub fn power_curve(
    scenario: &Scenario,
    config: &TestConfig,
    reps: usize,
    seed: u64,
) -> Result<PowerReport> {
    scenario.validate()?;
    config.validate()?;
    if reps == 0 {
        return Err(Error::InvalidConfig("need at least one replication".into()));
    }
    let config = TestConfig {
        basis: Some(config.basis.unwrap_or(scenario.kind.default_basis())),
        center: false,
        per_direction: false,
        ..config.clone()
    };
    let outcomes: Vec<Result<Vec<bool>>> = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let (u, x) = scenario.generate(seed, r)?;
            let cfg = TestConfig {
                seed: bootstrap_seed(seed, r),
                ..config.clone()
            };
            let out = run_test(&u, &x, &cfg)?;
            Ok(out.results.iter().map(|b| b.reject).collect())
        })
        .collect();

    let nb = config.bandwidths.len();
    let mut rejections = vec![0usize; nb];
    let mut failures = 0;
    let mut first_error = None;
    for o in outcomes {
        match o {
            Ok(rej) => {
                for (acc, r) in rejections.iter_mut().zip(rej) {
                    *acc += r as usize;
                }
            }
            Err(e) => {
                failures += 1;
                first_error.get_or_insert_with(|| e.to_string());
            }
        }
    }
    if failures * 100 > reps {
        return Err(Error::SimulationFailed {
            failures,
            reps,
            first: first_error.unwrap_or_default(),
        });
    }
    let done = reps - failures;
    let rows = config
        .bandwidths
        .iter()
        .zip(rejections)
        .map(|(&h, k)| {
            let rate = k as f64 / done as f64;
            PowerRow {
                scenario: scenario.kind.name().to_string(),
                c: scenario.effective_c(),
                h,
                n: scenario.n,
                n_reps: done,
                b: config.bootstrap,
                rejections: k,
                rate,
                mc_se: (rate * (1.0 - rate) / done as f64).sqrt(),
                seed,
            }
        })
        .collect();
    Ok(PowerReport {
        rows,
        seed,
        requested_reps: reps,
        failed_reps: failures,
        scenario: scenario.clone(),
        test: config,
    })
}
