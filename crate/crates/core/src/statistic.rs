//! Rank-smoothed quadratic form Q_n(γ), its variance estimate and the
//! standardized ratio.
//!
//! The kernel weight of a pair depends only on the difference of the two
//! empirical d.f. values, i.e. on `|rank_i - rank_j| / n`. Walking the sample
//! in rank order therefore reduces both double sums to per-lag sums
//!
//! ```text
//! S1[k] = Σ_pos G[o(pos), o(pos + k)],   S2[k] = Σ_pos G[o(pos), o(pos + k)]²
//! ```
//!
//! which are shared by every bandwidth. Lags whose weight vanishes for all
//! requested bandwidths are never visited.

use serde::{Deserialize, Serialize};

pub use crate::functional::GramMatrix;

use crate::error::{Error, Result};

/// Empirical d.f. values of the projection scores, stored as integer ranks.
///
/// `ranks[i] = positions[i] / n`, and the positions are a permutation of `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankVector {
    positions: Vec<u32>,
}

impl RankVector {
    pub fn from_positions(positions: Vec<u32>) -> Result<Self> {
        let n = positions.len();
        let mut seen = vec![false; n];
        for &p in &positions {
            let p = p as usize;
            if p == 0 || p > n || std::mem::replace(&mut seen[p - 1], true) {
                return Err(Error::DimensionMismatch(
                    "rank positions must be a permutation of 1..=n".into(),
                ));
            }
        }
        Ok(Self { positions })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Integer ranks in `1..=n`.
    pub fn positions(&self) -> &[u32] {
        &self.positions
    }

    /// Empirical d.f. values `i / n`.
    pub fn values(&self) -> Vec<f64> {
        let n = self.positions.len() as f64;
        self.positions.iter().map(|&p| p as f64 / n).collect()
    }

    /// `(n + 1)/n - ranks[i]`: the ranks of the negated scores.
    pub fn reversed(&self) -> Self {
        let n = self.positions.len() as u32;
        Self {
            positions: self.positions.iter().map(|&p| n + 1 - p).collect(),
        }
    }

    /// Sample indices listed by increasing rank.
    pub fn order(&self) -> Vec<u32> {
        let mut order = vec![0u32; self.positions.len()];
        for (i, &p) in self.positions.iter().enumerate() {
            order[p as usize - 1] = i as u32;
        }
        order
    }
}

/// Empirical d.f. of the scores evaluated at each score; ties broken by index.
pub fn rank_transform(scores: &[f64]) -> Result<RankVector> {
    let n = scores.len();
    if n < 2 {
        return Err(Error::TooFewCurves {
            required: 2,
            found: n,
        });
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::NonFinite { row: i, col: 0 });
    }
    let order = sorted_order(scores);
    let mut positions = vec![0u32; n];
    for (pos, &i) in order.iter().enumerate() {
        positions[i as usize] = pos as u32 + 1;
    }
    Ok(RankVector { positions })
}

/// Indices sorted by `(score, index)`. Scores must be finite.
pub(crate) fn sorted_order(scores: &[f64]) -> Vec<u32> {
    let mut order: Vec<u32> = (0..scores.len() as u32).collect();
    order.sort_by(|&a, &b| {
        scores[a as usize]
            .partial_cmp(&scores[b as usize])
            .expect("finite scores")
            .then(a.cmp(&b))
    });
    order
}

/// Reverses `order` if needed so that its first index is smaller than its
/// last. An ordering and its reverse produce the same statistic; fixing one
/// representative makes the two evaluate bitwise identically.
pub(crate) fn canonicalize(order: &mut [u32]) {
    if let (Some(first), Some(last)) = (order.first(), order.last()) {
        if first > last {
            order.reverse();
        }
    }
}

/// Symmetric, non-negative kernel profile `K`.
#[derive(Clone, Copy)]
pub enum KernelFamily {
    /// `K(x) = (1 − x²)·1{|x| ≤ 1}`, left unnormalized.
    Epanechnikov,
    /// User-supplied kernel. `support` is the radius outside which `K` is zero,
    /// if any; it lets the evaluator skip far rank lags.
    Custom {
        name: &'static str,
        eval: fn(f64) -> f64,
        support: Option<f64>,
    },
}

impl KernelFamily {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            KernelFamily::Epanechnikov => {
                if x.abs() <= 1.0 {
                    1.0 - x * x
                } else {
                    0.0
                }
            }
            KernelFamily::Custom { eval, .. } => eval(x),
        }
    }

    pub fn support(&self) -> Option<f64> {
        match self {
            KernelFamily::Epanechnikov => Some(1.0),
            KernelFamily::Custom { support, .. } => *support,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelFamily::Epanechnikov => "epanechnikov",
            KernelFamily::Custom { name, .. } => name,
        }
    }
}

impl std::fmt::Debug for KernelFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Kernel families that can be named in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    #[default]
    Epanechnikov,
}

impl From<KernelKind> for KernelFamily {
    fn from(kind: KernelKind) -> Self {
        match kind {
            KernelKind::Epanechnikov => KernelFamily::Epanechnikov,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct KernelSpec {
    family: KernelFamily,
    bandwidth: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::InvalidBandwidth(bandwidth));
        }
        Ok(Self { family, bandwidth })
    }

    pub fn epanechnikov(bandwidth: f64) -> Result<Self> {
        Self::new(KernelFamily::Epanechnikov, bandwidth)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// `K_h(u) = K(u / h)`.
    #[inline]
    pub fn weight(&self, u: f64) -> f64 {
        self.family.eval(u / self.bandwidth)
    }
}

/// `K(u / h)`; fails on a non-positive bandwidth.
pub fn kernel_eval(family: KernelFamily, bandwidth: f64, u: f64) -> Result<f64> {
    Ok(KernelSpec::new(family, bandwidth)?.weight(u))
}

/// Kernel weights `K((k/n)/h)` for every rank lag `k = 1..n-1`.
#[derive(Debug, Clone)]
pub struct LagWeights {
    bandwidth: f64,
    n: usize,
    // weights[k - 1] is the weight of lag k; trailing zero lags are trimmed.
    weights: Vec<f64>,
}

impl LagWeights {
    pub fn new(spec: &KernelSpec, n: usize) -> Self {
        let nf = n as f64;
        let mut weights: Vec<f64> = (1..n).map(|k| spec.weight(k as f64 / nf)).collect();
        while weights.last() == Some(&0.0) {
            weights.pop();
        }
        Self {
            bandwidth: spec.bandwidth,
            n,
            weights,
        }
    }

    /// Largest lag with a non-zero weight (0 if every pair vanishes).
    pub fn max_lag(&self) -> usize {
        self.weights.len()
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Combines per-lag sums into `(Q_n, v̂²)`.
    pub fn combine(&self, sums: &LagSums) -> (f64, f64) {
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        for (k, w) in self.weights.iter().enumerate() {
            s1 += w * sums.first[k];
            s2 += w * w * sums.second[k];
        }
        let n = self.n as f64;
        let scale = 2.0 / (n * (n - 1.0) * self.bandwidth);
        // i≠j counts each unordered pair twice.
        (scale * s1, 2.0 * scale * s2)
    }
}

/// Per-lag sums of `G` and `G²` along a rank ordering.
#[derive(Debug, Clone, Default)]
pub struct LagSums {
    first: Vec<f64>,
    second: Vec<f64>,
}

impl LagSums {
    pub fn with_capacity(max_lag: usize) -> Self {
        Self {
            first: Vec::with_capacity(max_lag),
            second: Vec::with_capacity(max_lag),
        }
    }

    /// Fills the sums for lags `1..=max_lag` along `order`.
    pub fn fill(&mut self, gram: &GramMatrix, order: &[u32], max_lag: usize) {
        let n = gram.n();
        let g = gram.values();
        self.first.clear();
        self.second.clear();
        for k in 1..=max_lag.min(n - 1) {
            let mut a = 0.0;
            let mut b = 0.0;
            for (lo, hi) in order.iter().zip(&order[k..]) {
                let v = g[*lo as usize * n + *hi as usize];
                a += v;
                b += v * v;
            }
            self.first.push(a);
            self.second.push(b);
        }
        self.first.resize(max_lag, 0.0);
        self.second.resize(max_lag, 0.0);
    }
}

/// Q_n(γ), v̂²(γ) and `n·h^{1/2}·Q_n / v̂` for one direction and bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionStatistics {
    pub q_n: f64,
    pub v_hat_sq: f64,
    pub standardized: f64,
}

impl DirectionStatistics {
    pub fn from_parts(q_n: f64, v_hat_sq: f64, n: usize, bandwidth: f64) -> Result<Self> {
        if v_hat_sq.is_nan() || v_hat_sq <= 0.0 {
            return Err(Error::DegenerateVariance { bandwidth });
        }
        let standardized = n as f64 * bandwidth.sqrt() * q_n / v_hat_sq.sqrt();
        Ok(Self {
            q_n,
            v_hat_sq,
            standardized,
        })
    }
}

fn check_dims(gram: &GramMatrix, ranks: &RankVector) -> Result<()> {
    if gram.n() != ranks.len() {
        return Err(Error::DimensionMismatch(format!(
            "Gram matrix is {0}x{0} but there are {1} ranks",
            gram.n(),
            ranks.len()
        )));
    }
    Ok(())
}

fn evaluate(gram: &GramMatrix, ranks: &RankVector, spec: &KernelSpec) -> Result<(f64, f64)> {
    check_dims(gram, ranks)?;
    let weights = LagWeights::new(spec, gram.n());
    let mut order = ranks.order();
    canonicalize(&mut order);
    let mut sums = LagSums::with_capacity(weights.max_lag());
    sums.fill(gram, &order, weights.max_lag());
    Ok(weights.combine(&sums))
}

/// `1/(n(n−1)) Σ_{i≠j} G_ij · h⁻¹ K((r_i − r_j)/h)`.
pub fn q_n(gram: &GramMatrix, ranks: &RankVector, spec: &KernelSpec) -> Result<f64> {
    evaluate(gram, ranks, spec).map(|(q, _)| q)
}

/// `2/(n(n−1)h) Σ_{i≠j} G_ij² K²((r_i − r_j)/h)`; zero is an error.
pub fn v_hat_sq(gram: &GramMatrix, ranks: &RankVector, spec: &KernelSpec) -> Result<f64> {
    let (_, v) = evaluate(gram, ranks, spec)?;
    if v.is_nan() || v <= 0.0 {
        return Err(Error::DegenerateVariance {
            bandwidth: spec.bandwidth,
        });
    }
    Ok(v)
}

pub fn standardized_stat(
    gram: &GramMatrix,
    ranks: &RankVector,
    spec: &KernelSpec,
) -> Result<DirectionStatistics> {
    let (q, v) = evaluate(gram, ranks, spec)?;
    DirectionStatistics::from_parts(q, v, gram.n(), spec.bandwidth)
}

#[cfg(test)]
pub(crate) mod oracle {
    //! Naive double loops over i ≠ j, written straight from the definitions.
    use super::*;

    pub fn q_n(g: &GramMatrix, ranks: &[f64], spec: &KernelSpec) -> f64 {
        let n = g.n();
        let h = spec.bandwidth();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    acc += g.get(i, j) * spec.weight(ranks[i] - ranks[j]) / h;
                }
            }
        }
        acc / (n as f64 * (n as f64 - 1.0))
    }

    pub fn v_hat_sq(g: &GramMatrix, ranks: &[f64], spec: &KernelSpec) -> f64 {
        let n = g.n();
        let h = spec.bandwidth();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let k = spec.weight(ranks[i] - ranks[j]);
                    acc += g.get(i, j).powi(2) * k * k;
                }
            }
        }
        2.0 * acc / (n as f64 * (n as f64 - 1.0) * h)
    }

    pub fn standardized(g: &GramMatrix, ranks: &[f64], spec: &KernelSpec) -> f64 {
        let n = g.n() as f64;
        n * spec.bandwidth().sqrt() * q_n(g, ranks, spec) / v_hat_sq(g, ranks, spec).sqrt()
    }

    /// Empirical d.f. with index tie-breaking, by direct counting.
    pub fn ranks(scores: &[f64]) -> Vec<f64> {
        let n = scores.len();
        (0..n)
            .map(|i| {
                let below = scores.iter().filter(|&&s| s < scores[i]).count();
                let tied_before = (0..=i).filter(|&j| scores[j] == scores[i]).count();
                (below + tied_before) as f64 / n as f64
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_gram(n: usize, rng: &mut impl Rng) -> GramMatrix {
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let x = rng.gen_range(-1.0..1.0);
                v[i * n + j] = x;
                v[j * n + i] = x;
            }
        }
        GramMatrix::from_rows(n, v).unwrap()
    }

    fn two_by_two(g: f64) -> GramMatrix {
        GramMatrix::from_rows(2, vec![1.0, g, g, 1.0]).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn ranks_of_distinct_scores() {
        let r = rank_transform(&[0.3, 0.1, 0.2]).unwrap();
        assert_eq!(r.positions(), &[3, 1, 2]);
        assert_eq!(r.values(), vec![1.0, 1.0 / 3.0, 2.0 / 3.0]);
    }

    #[test]
    fn ties_broken_by_index() {
        let r = rank_transform(&[5.0, 5.0, 5.0]).unwrap();
        assert_eq!(r.positions(), &[1, 2, 3]);
        let r = rank_transform(&[2.0, 1.0, 2.0, 1.0]).unwrap();
        assert_eq!(r.positions(), &[3, 1, 4, 2]);
    }

    #[test]
    fn rank_transform_rejects_bad_input() {
        assert!(rank_transform(&[1.0]).is_err());
        assert!(matches!(
            rank_transform(&[1.0, f64::NAN]),
            Err(Error::NonFinite { row: 1, .. })
        ));
    }

    #[test]
    fn rank_transform_matches_counting_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let n = rng.gen_range(2..25);
            // coarse values to provoke ties
            let s: Vec<f64> = (0..n).map(|_| rng.gen_range(0..5) as f64).collect();
            assert_eq!(rank_transform(&s).unwrap().values(), oracle::ranks(&s));
        }
    }

    #[test]
    fn kernel_values() {
        let e = KernelFamily::Epanechnikov;
        assert_eq!(kernel_eval(e, 0.37, 0.0).unwrap(), 1.0);
        assert_eq!(kernel_eval(e, 1.0, 0.5).unwrap(), 0.75);
        assert_eq!(kernel_eval(e, 1.0, 2.0).unwrap(), 0.0);
        assert_eq!(kernel_eval(e, 1.0, -0.5).unwrap(), 0.75);
        assert!(matches!(
            kernel_eval(e, 0.0, 0.1),
            Err(Error::InvalidBandwidth(_))
        ));
        assert!(matches!(
            kernel_eval(e, -1.0, 0.1),
            Err(Error::InvalidBandwidth(_))
        ));
    }

    #[test]
    fn two_point_hand_values() {
        let g = 0.8;
        let ranks = RankVector::from_positions(vec![1, 2]).unwrap();
        let spec = KernelSpec::epanechnikov(1.0).unwrap();
        let q = q_n(&two_by_two(g), &ranks, &spec).unwrap();
        assert!((q - 0.75 * g).abs() < 1e-15);
        let v = v_hat_sq(&two_by_two(g), &ranks, &spec).unwrap();
        assert!((v - 1.125 * g * g).abs() < 1e-15);
    }

    #[test]
    fn zero_gram() {
        let g = GramMatrix::from_rows(3, vec![0.0; 9]).unwrap();
        let ranks = rank_transform(&[0.1, 0.3, 0.2]).unwrap();
        let spec = KernelSpec::epanechnikov(0.5).unwrap();
        assert_eq!(q_n(&g, &ranks, &spec).unwrap(), 0.0);
        assert!(matches!(
            v_hat_sq(&g, &ranks, &spec),
            Err(Error::DegenerateVariance { .. })
        ));
        assert!(matches!(
            standardized_stat(&g, &ranks, &spec),
            Err(Error::DegenerateVariance { .. })
        ));
    }

    #[test]
    fn tiny_bandwidth_is_degenerate() {
        // Every rank lag is at least 1/n = 0.25 > h.
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = random_gram(4, &mut rng);
        let ranks = rank_transform(&[0.4, 0.1, 0.3, 0.2]).unwrap();
        let spec = KernelSpec::epanechnikov(0.2).unwrap();
        assert!(matches!(
            standardized_stat(&g, &ranks, &spec),
            Err(Error::DegenerateVariance { .. })
        ));
    }

    #[test]
    fn dimension_mismatch() {
        let g = GramMatrix::from_rows(2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let ranks = rank_transform(&[0.1, 0.2, 0.3]).unwrap();
        let spec = KernelSpec::epanechnikov(0.5).unwrap();
        assert!(matches!(
            q_n(&g, &ranks, &spec),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn matches_naive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let n = rng.gen_range(2..=20);
            let g = random_gram(n, &mut rng);
            let scores: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            let ranks = rank_transform(&scores).unwrap();
            let rv = ranks.values();
            let spec = KernelSpec::epanechnikov(rng.gen_range(0.05..1.5)).unwrap();
            let q = q_n(&g, &ranks, &spec).unwrap();
            assert!(close(q, oracle::q_n(&g, &rv, &spec), 1e-12));
            let ov = oracle::v_hat_sq(&g, &rv, &spec);
            match standardized_stat(&g, &ranks, &spec) {
                Ok(stat) => {
                    assert!(close(stat.v_hat_sq, ov, 1e-12));
                    assert!(close(
                        stat.standardized,
                        oracle::standardized(&g, &rv, &spec),
                        1e-10
                    ));
                }
                Err(Error::DegenerateVariance { .. }) => assert_eq!(ov, 0.0),
                Err(e) => panic!("{e}"),
            }
        }
    }

    #[test]
    fn n10_fixed_instance() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let g = random_gram(10, &mut rng);
        let scores: Vec<f64> = (0..10).map(|_| rng.gen::<f64>()).collect();
        let ranks = rank_transform(&scores).unwrap();
        let spec = KernelSpec::epanechnikov(0.3).unwrap();
        let stat = standardized_stat(&g, &ranks, &spec).unwrap();
        let rv = ranks.values();
        assert!(close(stat.q_n, oracle::q_n(&g, &rv, &spec), 1e-12));
        assert!(close(
            stat.v_hat_sq,
            oracle::v_hat_sq(&g, &rv, &spec),
            1e-12
        ));
        let expected = 10.0 * 0.3f64.sqrt() * oracle::q_n(&g, &rv, &spec)
            / oracle::v_hat_sq(&g, &rv, &spec).sqrt();
        assert!(close(stat.standardized, expected, 1e-10));
    }

    #[test]
    fn saturated_bandwidth_weights_every_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 12;
        let g = random_gram(n, &mut rng);
        let spec = KernelSpec::epanechnikov(1.0).unwrap();
        let w = LagWeights::new(&spec, n);
        assert_eq!(w.max_lag(), n - 1);
        // With h ≥ 1 every off-diagonal pair has positive weight, so v̂² > 0
        // whenever some off-diagonal G entry is non-zero.
        let ranks = rank_transform(&(0..n).map(|i| i as f64).collect::<Vec<_>>()).unwrap();
        assert!(v_hat_sq(&g, &ranks, &spec).unwrap() > 0.0);
    }

    #[test]
    fn homogeneity() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = 9;
        let g = random_gram(n, &mut rng);
        let scaled =
            GramMatrix::from_rows(n, g.values().iter().map(|v| 4.0 * v).collect()).unwrap();
        let ranks = rank_transform(&(0..n).map(|_| rng.gen()).collect::<Vec<f64>>()).unwrap();
        let spec = KernelSpec::epanechnikov(0.4).unwrap();
        let a = standardized_stat(&g, &ranks, &spec).unwrap();
        let b = standardized_stat(&scaled, &ranks, &spec).unwrap();
        // U → 2U scales G by 4: powers of two keep this exact.
        assert_eq!(b.q_n, 4.0 * a.q_n);
        assert_eq!(b.v_hat_sq, 16.0 * a.v_hat_sq);
        assert_eq!(b.standardized, a.standardized);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use rand::Rng;

        proptest! {
            #[test]
            fn reversed_ranks_are_bitwise_equal(seed in 0u64..10_000, n in 2usize..30, h in 0.02f64..1.2) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let g = random_gram(n, &mut rng);
                let scores: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
                let ranks = rank_transform(&scores).unwrap();
                let spec = KernelSpec::epanechnikov(h).unwrap();
                let a = q_n(&g, &ranks, &spec).unwrap();
                let b = q_n(&g, &ranks.reversed(), &spec).unwrap();
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }

            #[test]
            fn monotone_transform_is_invisible(seed in 0u64..10_000, n in 3usize..30) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let g = random_gram(n, &mut rng);
                let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let warped: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() + s.powi(3)).collect();
                let spec = KernelSpec::epanechnikov(0.3).unwrap();
                let a = standardized_stat(&g, &rank_transform(&scores).unwrap(), &spec);
                let b = standardized_stat(&g, &rank_transform(&warped).unwrap(), &spec);
                match (a, b) {
                    (Ok(a), Ok(b)) => {
                        prop_assert_eq!(a.q_n.to_bits(), b.q_n.to_bits());
                        prop_assert_eq!(a.v_hat_sq.to_bits(), b.v_hat_sq.to_bits());
                        prop_assert_eq!(a.standardized.to_bits(), b.standardized.to_bits());
                    }
                    (Err(_), Err(_)) => {}
                    _ => prop_assert!(false, "mismatched outcomes"),
                }
            }

            #[test]
            fn rank_multiset(scores in prop::collection::vec(-1e6f64..1e6, 2..60)) {
                let r = rank_transform(&scores).unwrap();
                let n = scores.len();
                let mut p = r.positions().to_vec();
                p.sort_unstable();
                prop_assert!(p.iter().enumerate().all(|(i, &v)| v as usize == i + 1));
                let sum: f64 = r.values().iter().sum();
                prop_assert!((sum - (n as f64 + 1.0) / 2.0).abs() < 1e-9);
            }

            #[test]
            fn scale_invariance(seed in 0u64..10_000, c in 0.01f64..100.0) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let n = 10;
                let g = random_gram(n, &mut rng);
                let scaled = GramMatrix::from_rows(n, g.values().iter().map(|v| c * v).collect()).unwrap();
                let ranks = rank_transform(&(0..n).map(|_| rng.gen()).collect::<Vec<f64>>()).unwrap();
                let spec = KernelSpec::epanechnikov(0.35).unwrap();
                let a = standardized_stat(&g, &ranks, &spec).unwrap();
                let b = standardized_stat(&scaled, &ranks, &spec).unwrap();
                prop_assert!((a.standardized - b.standardized).abs() < 1e-12 * (1.0 + a.standardized.abs()));
            }
        }
    }
}
