//! Candidate directions on the half unit sphere and the penalized search for
//! the least favorable direction.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::functional::CoefficientMatrix;
use crate::statistic::{
    canonicalize, sorted_order, DirectionStatistics, GramMatrix, KernelSpec, LagSums, LagWeights,
};

const UNIT_TOL: f64 = 1e-12;

/// Unit vector of basis coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Direction {
    coords: Vec<f64>,
}

impl Direction {
    /// Accepts `coords` only if it already has unit norm.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        let d = Self { coords };
        d.check_unit()?;
        Ok(d)
    }

    /// Scales `coords` to unit norm.
    pub fn normalized(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() || coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidDirection(
                "coordinates must be finite and non-empty".into(),
            ));
        }
        let norm = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidDirection("all coordinates are zero".into()));
        }
        Ok(Self {
            coords: coords.into_iter().map(|c| c / norm).collect(),
        })
    }

    pub(crate) fn unchecked(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    pub fn check_unit(&self) -> Result<()> {
        if self.coords.is_empty() {
            return Err(Error::InvalidDirection("empty direction".into()));
        }
        let norm = self.coords.iter().map(|c| c * c).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > UNIT_TOL || !norm.is_finite() {
            return Err(Error::InvalidDirection(format!(
                "norm is {norm}, expected 1"
            )));
        }
        Ok(())
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Flips the sign so that the first non-zero coordinate is positive.
    fn into_half_sphere(mut self) -> Self {
        if let Some(first) = self.coords.iter().find(|c| **c != 0.0) {
            if *first < 0.0 {
                self.coords.iter_mut().for_each(|c| *c = -*c);
            }
        }
        self
    }

    fn approx_eq(&self, other: &Direction) -> bool {
        self.coords.len() == other.coords.len()
            && self
                .coords
                .iter()
                .zip(&other.coords)
                .all(|(a, b)| (a - b).abs() <= UNIT_TOL)
    }
}

/// How the privileged direction γ₀ is chosen.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrivilegedChoice {
    /// Equal coefficients on every basis element.
    #[default]
    Uninformative,
    FirstAxis,
    Custom(Vec<f64>),
}

pub fn privileged_direction(p: usize, choice: &PrivilegedChoice) -> Result<Direction> {
    if p == 0 {
        return Err(Error::InvalidDirection("p must be at least 1".into()));
    }
    let coords = match choice {
        PrivilegedChoice::Uninformative => vec![1.0; p],
        PrivilegedChoice::FirstAxis => {
            let mut e = vec![0.0; p];
            e[0] = 1.0;
            e
        }
        PrivilegedChoice::Custom(c) => {
            if c.len() != p {
                return Err(Error::InvalidDirection(format!(
                    "custom direction has {} coefficients, expected {p}",
                    c.len()
                )));
            }
            c.clone()
        }
    };
    Ok(Direction::normalized(coords)?.into_half_sphere())
}

/// Search set on the half sphere `{γ : γ₁ ≥ 0}` with γ₀ stored first.
#[derive(Debug, Clone)]
pub struct DirectionGrid {
    directions: Vec<Direction>,
}

impl DirectionGrid {
    /// Uses `rest` as the non-privileged candidates. Entries equal to γ₀ are dropped.
    pub fn new(gamma0: Direction, rest: Vec<Direction>) -> Result<Self> {
        gamma0.check_unit()?;
        let p = gamma0.dim();
        let mut directions = Vec::with_capacity(rest.len() + 1);
        directions.push(gamma0);
        for d in rest {
            d.check_unit()?;
            if d.dim() != p {
                return Err(Error::DimensionMismatch(format!(
                    "grid direction has dimension {}, expected {p}",
                    d.dim()
                )));
            }
            if !d.approx_eq(&directions[0]) {
                directions.push(d);
            }
        }
        Ok(Self { directions })
    }

    pub fn privileged(&self) -> &Direction {
        &self.directions[0]
    }

    pub fn directions(&self) -> &[Direction] {
        &self.directions
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.directions[0].dim()
    }
}

const PRIMES: [u32; 20] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71,
];

fn radical_inverse(mut k: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut out = 0.0;
    while k > 0 {
        out += (k % b) as f64 * f;
        k /= b;
        f *= inv;
    }
    out
}

/// `m` deterministic, roughly uniform points on `{γ ∈ S^p : γ₁ ≥ 0}`.
///
/// * `p = 1`: the single point `(1)`.
/// * `p = 2`: angles `−π/2 + (k + ½)π/m` on the right half circle.
/// * `p = 3`: Fibonacci lattice with `γ₁ = (k + ½)/m` (equal-area bands).
/// * `p > 3`: Halton points mapped through the standard normal quantile, then
///   normalized and reflected into the half sphere.
pub fn half_sphere_points(p: usize, m: usize) -> Vec<Direction> {
    use std::f64::consts::PI;
    match p {
        0 => Vec::new(),
        1 => vec![Direction::unchecked(vec![1.0])],
        2 => (0..m)
            .map(|k| {
                let theta = -PI / 2.0 + (k as f64 + 0.5) * PI / m as f64;
                Direction::unchecked(vec![theta.cos(), theta.sin()])
            })
            .collect(),
        3 => {
            let golden = (1.0 + 5f64.sqrt()) / 2.0;
            (0..m)
                .map(|k| {
                    let g1 = (k as f64 + 0.5) / m as f64;
                    let r = (1.0 - g1 * g1).sqrt();
                    let phi = 2.0 * PI * (k as f64 / golden).fract();
                    Direction::unchecked(vec![g1, r * phi.cos(), r * phi.sin()])
                })
                .collect()
        }
        _ => {
            let normal = Normal::standard();
            (1..=m as u64)
                .map(|k| {
                    let z: Vec<f64> = (0..p)
                        .map(|d| normal.inverse_cdf(radical_inverse(k, PRIMES[d])))
                        .collect();
                    Direction::normalized(z)
                        .expect("Halton points are interior")
                        .into_half_sphere()
                })
                .collect()
        }
    }
}

/// γ₀ followed by `m` half-sphere lattice points (minus any copy of γ₀).
pub fn sphere_grid(p: usize, m: usize, gamma0: Direction) -> Result<DirectionGrid> {
    if gamma0.dim() != p {
        return Err(Error::DimensionMismatch(format!(
            "privileged direction has dimension {}, expected {p}",
            gamma0.dim()
        )));
    }
    if p > PRIMES.len() {
        return Err(Error::TooManyComponents {
            p,
            max: PRIMES.len(),
        });
    }
    DirectionGrid::new(gamma0, half_sphere_points(p, m))
}

/// Covariate-side structure of a search: the rank ordering of every grid
/// direction, deduplicated. Depends on `X` and the grid only, so it is built
/// once and shared by the original statistic and all bootstrap replicates.
#[derive(Debug, Clone)]
pub struct SearchCache {
    n: usize,
    grid: DirectionGrid,
    // canonical orderings, one per distinct ranking
    orders: Vec<Vec<u32>>,
    // grid index -> index into `orders`
    slot: Vec<usize>,
}

impl SearchCache {
    pub fn new(coeffs: &CoefficientMatrix, grid: &DirectionGrid) -> Result<Self> {
        if coeffs.p() != grid.dim() {
            return Err(Error::DimensionMismatch(format!(
                "grid directions have dimension {}, coefficients have p={}",
                grid.dim(),
                coeffs.p()
            )));
        }
        let mut index: HashMap<Vec<u32>, usize> = HashMap::new();
        let mut orders = Vec::new();
        let mut slot = Vec::with_capacity(grid.len());
        for d in grid.directions() {
            let scores = coeffs.scores(d)?;
            if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
                return Err(Error::NonFinite { row: i, col: 0 });
            }
            let mut order = sorted_order(&scores);
            canonicalize(&mut order);
            let next = orders.len();
            let s = *index.entry(order.clone()).or_insert(next);
            if s == next {
                orders.push(order);
            }
            slot.push(s);
        }
        Ok(Self {
            n: coeffs.n(),
            grid: grid.clone(),
            orders,
            slot,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> &DirectionGrid {
        &self.grid
    }

    /// Number of distinct rankings induced by the grid.
    pub fn distinct_orders(&self) -> usize {
        self.orders.len()
    }

    /// `(Q_n, v̂²)` for every distinct ordering and bandwidth, laid out as
    /// `[order][bandwidth]`.
    pub fn evaluate(&self, gram: &GramMatrix, weights: &[LagWeights]) -> Result<Evaluations> {
        if gram.n() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "Gram matrix is {0}x{0}, covariate sample has n={1}",
                gram.n(),
                self.n
            )));
        }
        let max_lag = weights.iter().map(LagWeights::max_lag).max().unwrap_or(0);
        let nb = weights.len();
        let mut values = Vec::with_capacity(self.orders.len() * nb);
        let mut sums = LagSums::with_capacity(max_lag);
        for order in &self.orders {
            sums.fill(gram, order, max_lag);
            values.extend(weights.iter().map(|w| w.combine(&sums)));
        }
        Ok(Evaluations {
            bandwidths: weights.iter().map(LagWeights::bandwidth).collect(),
            values,
        })
    }
}

/// Output of [`SearchCache::evaluate`].
#[derive(Debug, Clone)]
pub struct Evaluations {
    bandwidths: Vec<f64>,
    values: Vec<(f64, f64)>,
}

impl Evaluations {
    fn get(&self, order: usize, b: usize) -> (f64, f64) {
        self.values[order * self.bandwidths.len() + b]
    }
}

/// Standardized value of one grid direction; `None` when its variance vanished.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionEntry {
    pub index: usize,
    pub standardized: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub gamma_hat: Direction,
    pub gamma_hat_index: usize,
    /// Unpenalized standardized statistic at `gamma_hat`.
    pub t_n: f64,
    pub statistics: DirectionStatistics,
    pub selected_is_privileged: bool,
    /// Non-privileged directions left out because their variance estimate was zero.
    pub skipped_directions: usize,
    pub per_direction: Option<Vec<DirectionEntry>>,
}

fn check_alpha(alpha_n: f64) -> Result<()> {
    if alpha_n.is_nan() || alpha_n < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "penalty alpha_n must be non-negative, got {alpha_n}"
        )));
    }
    Ok(())
}

/// Penalized argmax for bandwidth slot `b` of `evals`. Ties go to the lowest
/// grid index, so γ₀ wins exact ties.
pub fn select_from(
    cache: &SearchCache,
    evals: &Evaluations,
    b: usize,
    alpha_n: f64,
    keep_table: bool,
) -> Result<SelectionResult> {
    check_alpha(alpha_n)?;
    let n = cache.n;
    let h = evals.bandwidths[b];
    let (q0, v0) = evals.get(cache.slot[0], b);
    let stat0 = DirectionStatistics::from_parts(q0, v0, n, h)?;

    let mut best = (stat0.standardized, 0usize, stat0);
    let mut skipped = 0;
    let mut table = keep_table.then(|| Vec::with_capacity(cache.slot.len()));
    if let Some(t) = table.as_mut() {
        t.push(DirectionEntry {
            index: 0,
            standardized: Some(stat0.standardized),
        });
    }
    for (d, &s) in cache.slot.iter().enumerate().skip(1) {
        let (q, v) = evals.get(s, b);
        let stat = match DirectionStatistics::from_parts(q, v, n, h) {
            Ok(stat) => stat,
            Err(_) => {
                skipped += 1;
                if let Some(t) = table.as_mut() {
                    t.push(DirectionEntry {
                        index: d,
                        standardized: None,
                    });
                }
                continue;
            }
        };
        if let Some(t) = table.as_mut() {
            t.push(DirectionEntry {
                index: d,
                standardized: Some(stat.standardized),
            });
        }
        if stat.standardized - alpha_n > best.0 {
            best = (stat.standardized - alpha_n, d, stat);
        }
    }
    let (_, idx, stat) = best;
    Ok(SelectionResult {
        gamma_hat: cache.grid.directions()[idx].clone(),
        gamma_hat_index: idx,
        t_n: stat.standardized,
        statistics: stat,
        selected_is_privileged: idx == 0,
        skipped_directions: skipped,
        per_direction: table,
    })
}

/// Runs the search for several bandwidths at once, sharing the lag sums.
pub fn select_directions(
    gram: &GramMatrix,
    cache: &SearchCache,
    kernels: &[KernelSpec],
    alpha_n: f64,
    keep_table: bool,
) -> Result<Vec<Result<SelectionResult>>> {
    check_alpha(alpha_n)?;
    let weights: Vec<LagWeights> = kernels
        .iter()
        .map(|k| LagWeights::new(k, cache.n))
        .collect();
    let evals = cache.evaluate(gram, &weights)?;
    Ok((0..kernels.len())
        .map(|b| select_from(cache, &evals, b, alpha_n, keep_table))
        .collect())
}

/// γ̂_n = argmax over the grid of `standardized(γ) − α_n·1{γ ≠ γ₀}`, and T_n.
pub fn select_direction(
    gram: &GramMatrix,
    coeffs: &CoefficientMatrix,
    grid: &DirectionGrid,
    kernel: &KernelSpec,
    alpha_n: f64,
) -> Result<SelectionResult> {
    let cache = SearchCache::new(coeffs, grid)?;
    select_directions(gram, &cache, std::slice::from_ref(kernel), alpha_n, false)?
        .pop()
        .expect("one bandwidth")
}
