//! Wild bootstrap with Mammen's two-point multipliers.
//!
//! A replicate multiplies each response curve by an independent weight
//! `Z_i`, so its Gram matrix is `z_i z_j G_ij` and no curve-level work is
//! repeated. The covariate side (rank orderings of every grid direction)
//! lives in a [`SearchCache`] built once per test.
//!
//! Replicate `b` draws from its own ChaCha stream `(seed, b)`, so results do
//! not depend on the order or thread in which replicates run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::direction::DirectionGrid;
use crate::direction::{select_from, SearchCache, SelectionResult};
use crate::error::{Error, Result};
use crate::functional::{CoefficientMatrix, GramMatrix};
use crate::statistic::{KernelSpec, LagWeights};

/// Lower support point `−(√5 − 1)/2`.
pub fn mammen_low() -> f64 {
    -(5f64.sqrt() - 1.0) / 2.0
}

/// Upper support point `(√5 + 1)/2`.
pub fn mammen_high() -> f64 {
    (5f64.sqrt() + 1.0) / 2.0
}

/// Probability of the lower point, `(√5 + 1)/(2√5)`.
pub fn mammen_low_prob() -> f64 {
    (5f64.sqrt() + 1.0) / (2.0 * 5f64.sqrt())
}

/// Deterministic generator for substream `stream` of `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct MammenWeights {
    z: Vec<f64>,
}

impl MammenWeights {
    pub fn as_slice(&self) -> &[f64] {
        &self.z
    }
}

pub fn draw_mammen(n: usize, rng: &mut impl Rng) -> MammenWeights {
    let (low, high, p_low) = (mammen_low(), mammen_high(), mammen_low_prob());
    let z = (0..n)
        .map(|_| if rng.gen::<f64>() < p_low { low } else { high })
        .collect();
    MammenWeights { z }
}

/// `G*_ij = z_i z_j G_ij`.
pub fn bootstrap_gram(gram: &GramMatrix, z: &[f64]) -> Result<GramMatrix> {
    let n = gram.n();
    if z.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for a {n}x{n} Gram matrix",
            z.len()
        )));
    }
    let g = gram.values();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = z[i] * z[j] * g[i * n + j];
            out[i * n + j] = v;
            out[j * n + i] = v;
        }
    }
    Ok(GramMatrix::from_rows_unchecked(n, out))
}

/// Rank of the critical order statistic, `⌈(1 − a)(B + 1)⌉`. May exceed `B`,
/// in which case no bootstrap value is large enough and the test never rejects.
pub fn critical_rank(replicates: usize, level: f64) -> usize {
    replicates + 1 - rejection_count(replicates, level)
}

// ⌊a(B + 1)⌋, guarded against representation error of `a`.
fn rejection_count(replicates: usize, level: f64) -> usize {
    (level * (replicates + 1) as f64 + 1e-9).floor() as usize
}

/// Bootstrap calibration of one bandwidth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub t_n: f64,
    pub t_star: Vec<f64>,
    /// `⌈(1 − a)(B + 1)⌉`-th smallest bootstrap statistic; `None` when that rank exceeds `B`.
    pub critical_value: Option<f64>,
    /// `(1 + #{b : T*_b ≥ T_n}) / (B + 1)`.
    pub p_value: f64,
    /// `p_value ≤ a`, equivalently `T_n` strictly above the critical value.
    pub reject: bool,
    pub replicates: usize,
    pub level: f64,
    pub seed: u64,
}

impl BootstrapResult {
    pub fn from_replicates(t_n: f64, t_star: Vec<f64>, level: f64, seed: u64) -> Result<Self> {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "level must lie in (0, 1), got {level}"
            )));
        }
        let b = t_star.len();
        if b == 0 {
            return Err(Error::InvalidConfig(
                "need at least one bootstrap replicate".into(),
            ));
        }
        let mut sorted = t_star.clone();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let k = critical_rank(b, level);
        let critical_value = (k <= b).then(|| sorted[k - 1]);
        let exceed = t_star.iter().filter(|&&t| t >= t_n).count();
        let p_value = (1 + exceed) as f64 / (b + 1) as f64;
        let reject = exceed < rejection_count(b, level);
        Ok(Self {
            t_n,
            t_star,
            critical_value,
            p_value,
            reject,
            replicates: b,
            level,
            seed,
        })
    }
}

/// Per-bandwidth outcome of a bootstrap run: the original selection and its calibration.
#[derive(Debug, Clone)]
pub struct CalibratedSelection {
    pub selection: SelectionResult,
    pub bootstrap: BootstrapResult,
    /// Replicate draws discarded because γ₀ had zero variance estimate.
    pub aborts: usize,
}

/// Wild bootstrap for several bandwidths sharing one set of weight draws.
///
/// Each replicate reruns the full penalized search on `z_i z_j G_ij`. A draw
/// whose privileged direction is degenerate at any bandwidth is discarded and
/// redrawn from the same stream; more than `10·B` discards in total is an error.
/// The original statistic must be defined at every bandwidth.
#[allow(clippy::too_many_arguments)]
pub fn wild_bootstrap_multi(
    gram: &GramMatrix,
    cache: &SearchCache,
    kernels: &[KernelSpec],
    alpha_n: f64,
    replicates: usize,
    level: f64,
    seed: u64,
    keep_table: bool,
) -> Result<Vec<CalibratedSelection>> {
    if replicates == 0 {
        return Err(Error::InvalidConfig(
            "need at least one bootstrap replicate".into(),
        ));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "level must lie in (0, 1), got {level}"
        )));
    }
    let n = cache.n();
    let weights: Vec<LagWeights> = kernels.iter().map(|k| LagWeights::new(k, n)).collect();
    let evals = cache.evaluate(gram, &weights)?;
    let original = (0..kernels.len())
        .map(|b| select_from(cache, &evals, b, alpha_n, keep_table))
        .collect::<Result<Vec<_>>>()?;

    let budget = 10 * replicates;
    let draws: Vec<Result<(Vec<f64>, usize)>> = (0..replicates)
        .into_par_iter()
        .map(|b| replicate(gram, cache, &weights, alpha_n, seed, b as u64, budget))
        .collect();
    let mut t_star = vec![Vec::with_capacity(replicates); kernels.len()];
    let mut aborts = 0;
    for draw in draws {
        let (stats, a) = draw?;
        aborts += a;
        for (slot, t) in t_star.iter_mut().zip(stats) {
            slot.push(t);
        }
    }
    if aborts > budget {
        return Err(Error::BootstrapFailed { aborts, budget });
    }
    original
        .into_iter()
        .zip(t_star)
        .map(|(selection, ts)| {
            let bootstrap = BootstrapResult::from_replicates(selection.t_n, ts, level, seed)?;
            Ok(CalibratedSelection {
                selection,
                bootstrap,
                aborts,
            })
        })
        .collect()
}

fn replicate(
    gram: &GramMatrix,
    cache: &SearchCache,
    weights: &[LagWeights],
    alpha_n: f64,
    seed: u64,
    index: u64,
    budget: usize,
) -> Result<(Vec<f64>, usize)> {
    let mut rng = substream(seed, index);
    let mut aborts = 0;
    loop {
        let z = draw_mammen(cache.n(), &mut rng);
        let star = bootstrap_gram(gram, z.as_slice())?;
        let evals = cache.evaluate(&star, weights)?;
        let stats: Result<Vec<f64>> = (0..weights.len())
            .map(|b| select_from(cache, &evals, b, alpha_n, false).map(|s| s.t_n))
            .collect();
        match stats {
            Ok(stats) => return Ok((stats, aborts)),
            Err(Error::DegenerateVariance { .. }) => {
                aborts += 1;
                if aborts > budget {
                    return Err(Error::BootstrapFailed { aborts, budget });
                }
            }
            Err(e) => return Err(e),
        }
    }
}

/// Single-bandwidth wild bootstrap of `T_n`.
#[allow(clippy::too_many_arguments)]
pub fn wild_bootstrap(
    gram: &GramMatrix,
    coeffs: &CoefficientMatrix,
    grid: &DirectionGrid,
    kernel: &KernelSpec,
    alpha_n: f64,
    replicates: usize,
    level: f64,
    seed: u64,
) -> Result<CalibratedSelection> {
    let cache = SearchCache::new(coeffs, grid)?;
    let mut out = wild_bootstrap_multi(
        gram,
        &cache,
        std::slice::from_ref(kernel),
        alpha_n,
        replicates,
        level,
        seed,
        false,
    )?;
    Ok(out.pop().expect("one bandwidth"))
}
