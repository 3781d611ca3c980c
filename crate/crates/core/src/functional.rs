//! Sampled curves on a shared grid over [0, 1].
//!
//! Every curve in a computation lives on one [`TimeGrid`]. Inner products are
//! trapezoid-rule approximations of the L² pairing, and projections on a
//! [`Basis`] are formed once into a [`CoefficientMatrix`] and then reused for
//! every direction of the search.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::direction::Direction;
use crate::error::{Error, Result};

/// Hard cap on the number of basis components.
pub const MAX_COMPONENTS: usize = 20;

/// Largest admissible `p` for a sample of `n` curves: `min(20, n - 1)`.
pub fn max_components(n: usize) -> usize {
    MAX_COMPONENTS.min(n.saturating_sub(1))
}

/// Ordered sampling points in [0, 1] shared by all curves of a computation.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    points: Vec<f64>,
    weights: Vec<f64>,
    // Uniform grids integrate as `span * (sum of interior + half the ends) / (m - 1)`,
    // which reproduces constants exactly.
    uniform: bool,
}

impl TimeGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 points, got {}",
                points.len()
            )));
        }
        if points.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidGrid("non-finite grid point".into()));
        }
        if points[0] < 0.0 || points[points.len() - 1] > 1.0 {
            return Err(Error::InvalidGrid("grid points must lie in [0, 1]".into()));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(
                "grid must be strictly increasing".into(),
            ));
        }
        let m = points.len();
        let span = points[m - 1] - points[0];
        let step = span / (m - 1) as f64;
        let uniform = points
            .iter()
            .enumerate()
            .all(|(k, &t)| (t - (points[0] + k as f64 * step)).abs() <= 1e-12);
        let mut weights = vec![0.0; m];
        for k in 0..m - 1 {
            let half = 0.5 * (points[k + 1] - points[k]);
            weights[k] += half;
            weights[k + 1] += half;
        }
        Ok(Self {
            points,
            weights,
            uniform,
        })
    }

    /// `m` equispaced points from 0 to 1 inclusive.
    pub fn uniform(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 points, got {m}"
            )));
        }
        let denom = (m - 1) as f64;
        let points = (0..m).map(|k| k as f64 / denom).collect();
        Self::new(points)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Trapezoid quadrature weights.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Trapezoid approximation of ∫ f(t) dt over the grid's span.
    pub fn integrate(&self, f: impl Fn(usize) -> f64) -> f64 {
        let m = self.points.len();
        if self.uniform {
            let interior: f64 = (1..m - 1).map(&f).sum();
            let ends = 0.5 * (f(0) + f(m - 1));
            (self.points[m - 1] - self.points[0]) * (interior + ends) / (m - 1) as f64
        } else {
            (0..m).map(|k| self.weights[k] * f(k)).sum()
        }
    }
}

/// Trapezoid approximation of ⟨f, g⟩ = ∫ f(t) g(t) dt.
pub fn inner_product(f: &[f64], g: &[f64], grid: &TimeGrid) -> Result<f64> {
    if f.len() != grid.len() || g.len() != grid.len() {
        return Err(Error::GridMismatch);
    }
    Ok(grid.integrate(|k| f[k] * g[k]))
}

/// `n` curves sampled on a common grid, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalSample {
    grid: TimeGrid,
    values: Vec<f64>,
    n: usize,
}

impl FunctionalSample {
    pub fn new(grid: TimeGrid, rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = grid.len();
        let n = rows.len();
        let mut values = Vec::with_capacity(n * m);
        for row in rows {
            if row.len() != m {
                return Err(Error::LengthMismatch {
                    expected: m,
                    found: row.len(),
                });
            }
            values.extend(row);
        }
        Self::from_flat(grid, values)
    }

    /// Builds a sample from row-major values of length `n * grid.len()`.
    pub fn from_flat(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        let m = grid.len();
        if !values.len().is_multiple_of(m) {
            return Err(Error::LengthMismatch {
                expected: m,
                found: values.len() % m,
            });
        }
        let n = values.len() / m;
        if n < 2 {
            return Err(Error::TooFewCurves {
                required: 2,
                found: n,
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / m,
                col: pos % m,
            });
        }
        Ok(Self { grid, values, n })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.grid.len();
        &self.values[i * m..(i + 1) * m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.grid.len())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Subtracts the pointwise sample mean curve.
pub fn center_sample(sample: &FunctionalSample) -> FunctionalSample {
    let m = sample.grid.len();
    let n = sample.n as f64;
    let mut mean = vec![0.0; m];
    for row in sample.rows() {
        for (acc, v) in mean.iter_mut().zip(row) {
            *acc += v;
        }
    }
    for acc in &mut mean {
        *acc /= n;
    }
    let values = sample
        .rows()
        .flat_map(|row| row.iter().zip(&mean).map(|(v, mu)| v - mu))
        .collect();
    FunctionalSample {
        grid: sample.grid.clone(),
        values,
        n: sample.n,
    }
}

/// Symmetric matrix of pairwise inner products ⟨U_i, U_j⟩.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    n: usize,
    values: Vec<f64>,
}

impl GramMatrix {
    /// Builds from a full row-major matrix; symmetry is checked exactly.
    pub fn from_rows(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                values.len()
            )));
        }
        if n < 2 {
            return Err(Error::TooFewCurves {
                required: 2,
                found: n,
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / n,
                col: pos % n,
            });
        }
        for i in 0..n {
            for j in 0..i {
                if values[i * n + j] != values[j * n + i] {
                    return Err(Error::DimensionMismatch(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { n, values })
    }

    pub(crate) fn from_rows_unchecked(n: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), n * n);
        Self { n, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Pairwise inner products of the curves of `sample`.
pub fn gram_matrix(sample: &FunctionalSample) -> GramMatrix {
    let n = sample.n;
    let grid = &sample.grid;
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        let ri = sample.row(i);
        for j in i..n {
            let rj = sample.row(j);
            let v = grid.integrate(|k| ri[k] * rj[k]);
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    }
    GramMatrix::from_rows_unchecked(n, values)
}

/// `sin(πx)` with exact zeros at integers and exact ±1 at half-integers.
pub(crate) fn sin_pi(x: f64) -> f64 {
    let r = x.rem_euclid(2.0);
    if r == 0.0 || r == 1.0 {
        0.0
    } else if r == 0.5 {
        1.0
    } else if r == 1.5 {
        -1.0
    } else {
        (std::f64::consts::PI * r).sin()
    }
}

/// Orthonormal systems of L²[0, 1] indexed from `j = 1`.
#[derive(Clone, Copy)]
pub enum Basis {
    /// √2 sin(jπt), eigenfunctions of the Brownian bridge covariance.
    BridgeSine,
    /// √2 sin((j − ½)πt), eigenfunctions of the Brownian motion covariance.
    MotionSine,
    Custom {
        name: &'static str,
        eval: fn(usize, f64) -> f64,
    },
}

impl Basis {
    pub fn eval(&self, j: usize, t: f64) -> f64 {
        debug_assert!(j >= 1);
        match self {
            Basis::BridgeSine => std::f64::consts::SQRT_2 * sin_pi(j as f64 * t),
            Basis::MotionSine => std::f64::consts::SQRT_2 * sin_pi((j as f64 - 0.5) * t),
            Basis::Custom { eval, .. } => eval(j, t),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Basis::BridgeSine => "bridge_sine",
            Basis::MotionSine => "motion_sine",
            Basis::Custom { name, .. } => name,
        }
    }

    /// Samples ρ_j on the grid.
    pub fn sample(&self, j: usize, grid: &TimeGrid) -> Vec<f64> {
        grid.points().iter().map(|&t| self.eval(j, t)).collect()
    }
}

impl fmt::Debug for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Built-in basis families, as named in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    BridgeSine,
    MotionSine,
}

impl From<BasisKind> for Basis {
    fn from(kind: BasisKind) -> Self {
        match kind {
            BasisKind::BridgeSine => Basis::BridgeSine,
            BasisKind::MotionSine => Basis::MotionSine,
        }
    }
}

/// `n × p` matrix of basis coefficients x_ij = ⟨X_i, ρ_j⟩.
#[derive(Debug, Clone)]
pub struct CoefficientMatrix {
    n: usize,
    p: usize,
    values: Vec<f64>,
    basis: Basis,
}

impl CoefficientMatrix {
    pub fn new(sample: &FunctionalSample, basis: Basis, p: usize) -> Result<Self> {
        let max = max_components(sample.n);
        if p == 0 || p > max {
            return Err(Error::TooManyComponents { p, max });
        }
        let grid = sample.grid();
        let sampled: Vec<Vec<f64>> = (1..=p).map(|j| basis.sample(j, grid)).collect();
        let mut values = Vec::with_capacity(sample.n * p);
        for row in sample.rows() {
            for rho in &sampled {
                values.push(grid.integrate(|k| row[k] * rho[k]));
            }
        }
        Ok(Self {
            n: sample.n,
            p,
            values,
            basis,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.p..(i + 1) * self.p]
    }

    /// Σ_j x_ij c_j for an arbitrary coefficient vector (no norm check).
    pub fn combine(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        if coeffs.len() != self.p {
            return Err(Error::DimensionMismatch(format!(
                "direction has {} coordinates, basis expansion has p={}",
                coeffs.len(),
                self.p
            )));
        }
        Ok(self
            .values
            .chunks_exact(self.p)
            .map(|row| row.iter().zip(coeffs).map(|(x, c)| x * c).sum())
            .collect())
    }

    /// Projection scores ⟨X_i, γ⟩.
    pub fn scores(&self, gamma: &Direction) -> Result<Vec<f64>> {
        gamma.check_unit()?;
        self.combine(gamma.coords())
    }
}

/// Projection scores ⟨X_i, γ⟩ with γ expanded on the first `p` basis elements.
pub fn project_scores(x: &FunctionalSample, basis: Basis, gamma: &Direction) -> Result<Vec<f64>> {
    gamma.check_unit()?;
    CoefficientMatrix::new(x, basis, gamma.dim())?.scores(gamma)
}

/// Reads a curve CSV: first row is the time grid, every further row a curve.
pub fn read_curves_csv(path: impl AsRef<Path>) -> Result<FunctionalSample> {
    let file = std::fs::File::open(path)?;
    read_curves(file)
}

pub fn read_curves(reader: impl Read) -> Result<FunctionalSample> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(e.to_string()))?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(c, field)| {
                field.parse::<f64>().map_err(|_| {
                    Error::Parse(format!(
                        "row {}, column {}: cannot parse {field:?}",
                        r + 1,
                        c + 1
                    ))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let mut rows = rows.into_iter();
    let grid_row = rows
        .next()
        .ok_or_else(|| Error::Parse("empty file: missing grid row".into()))?;
    let grid = TimeGrid::new(grid_row)?;
    FunctionalSample::new(grid, rows.collect())
}

pub fn write_curves_csv(path: impl AsRef<Path>, sample: &FunctionalSample) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_curves(std::io::BufWriter::new(file), sample)
}

pub fn write_curves(writer: impl Write, sample: &FunctionalSample) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    let to_csv = |e: csv::Error| Error::Parse(e.to_string());
    wtr.write_record(sample.grid().points().iter().map(|t| t.to_string()))
        .map_err(to_csv)?;
    for row in sample.rows() {
        wtr.write_record(row.iter().map(|v| v.to_string()))
            .map_err(to_csv)?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sample(n: usize, m: usize, seed: u64) -> FunctionalSample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = TimeGrid::uniform(m).unwrap();
        let values = (0..n * m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        FunctionalSample::from_flat(grid, values).unwrap()
    }

    #[test]
    fn constant_one_integrates_to_one() {
        let grid = TimeGrid::uniform(101).unwrap();
        let ones = vec![1.0; 101];
        assert_eq!(inner_product(&ones, &ones, &grid).unwrap(), 1.0);
    }

    #[test]
    fn sine_basis_elements_are_orthogonal() {
        let grid = TimeGrid::uniform(201).unwrap();
        let f = Basis::BridgeSine.sample(1, &grid);
        let g = Basis::BridgeSine.sample(2, &grid);
        assert!(inner_product(&f, &g, &grid).unwrap().abs() < 1e-6);
    }

    #[test]
    fn identity_squared_is_close_to_one_third() {
        // Trapezoid error for t² on step 1/100 is (1/12)·h²·(f'(1) - f'(0)) = 2/(12·10⁴) ≈ 1.67e-5.
        let grid = TimeGrid::uniform(101).unwrap();
        let t = grid.points().to_vec();
        let v = inner_product(&t, &t, &grid).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-4);
        assert!((v - 1.0 / 3.0 - 2.0 / 12.0 * 1e-4).abs() < 1e-12);
    }

    #[test]
    fn inner_product_rejects_length_mismatch() {
        let grid = TimeGrid::uniform(11).unwrap();
        let err = inner_product(&[1.0; 10], &[1.0; 11], &grid).unwrap_err();
        assert!(matches!(err, Error::GridMismatch));
    }

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::new(vec![0.0]).is_err());
        assert!(TimeGrid::new(vec![0.0, 0.5, 0.5]).is_err());
        assert!(TimeGrid::new(vec![-0.1, 0.5]).is_err());
        assert!(TimeGrid::new(vec![0.0, 1.1]).is_err());
        assert!(TimeGrid::new(vec![0.0, 0.3, 1.0]).is_ok());
    }

    #[test]
    fn nonuniform_grid_uses_trapezoid_weights() {
        let grid = TimeGrid::new(vec![0.0, 0.2, 0.5, 1.0]).unwrap();
        let w = grid.weights();
        assert_eq!(w, &[0.1, 0.25, 0.4, 0.25]);
        let t = grid.points().to_vec();
        let ones = vec![1.0; 4];
        let v = inner_product(&t, &ones, &grid).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn identical_unit_curves_give_all_ones_gram() {
        let grid = TimeGrid::uniform(201).unwrap();
        let c = Basis::BridgeSine.sample(1, &grid);
        let s = FunctionalSample::new(grid, vec![c.clone(), c]).unwrap();
        let g = gram_matrix(&s);
        for v in g.values() {
            assert!((v - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn gram_matches_per_pair_loop() {
        let s = random_sample(3, 51, 11);
        let g = gram_matrix(&s);
        let w = s.grid().weights();
        for i in 0..3 {
            for j in 0..3 {
                let direct: f64 = (0..51).map(|k| w[k] * s.row(i)[k] * s.row(j)[k]).sum();
                assert!((g.get(i, j) - direct).abs() < 1e-12);
                assert_eq!(g.get(i, j).to_bits(), g.get(j, i).to_bits());
            }
        }
    }

    #[test]
    fn gram_is_positive_semidefinite() {
        for seed in 0..10 {
            let s = random_sample(12, 31, seed);
            let g = gram_matrix(&s);
            let mat = nalgebra::DMatrix::from_row_slice(12, 12, g.values());
            let eig = mat.symmetric_eigen();
            let trace: f64 = (0..12).map(|i| g.get(i, i)).sum();
            let min = eig
                .eigenvalues
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            assert!(min >= -1e-8 * trace, "min eigenvalue {min}");
        }
    }

    #[test]
    fn first_axis_scores_equal_first_coefficients() {
        let s = random_sample(6, 41, 3);
        let coeffs = CoefficientMatrix::new(&s, Basis::BridgeSine, 3).unwrap();
        let e1 = Direction::new(vec![1.0, 0.0, 0.0]).unwrap();
        let scores = coeffs.scores(&e1).unwrap();
        for (i, v) in scores.iter().enumerate() {
            assert_eq!(*v, coeffs.row(i)[0]);
        }
    }

    #[test]
    fn zero_curves_have_zero_scores() {
        let grid = TimeGrid::uniform(21).unwrap();
        let s = FunctionalSample::from_flat(grid, vec![0.0; 4 * 21]).unwrap();
        let gamma = Direction::new(vec![0.6, 0.8]).unwrap();
        let scores = project_scores(&s, Basis::BridgeSine, &gamma).unwrap();
        assert!(scores.iter().all(|v| *v == 0.0));
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn scores_match_term_by_term_quadrature() {
        let s = random_sample(3, 51, 5);
        let gamma = Direction::normalized(vec![0.3, -1.2]).unwrap();
        let scores = project_scores(&s, Basis::BridgeSine, &gamma).unwrap();
        let grid = s.grid();
        for i in 0..3 {
            let mut oracle = 0.0;
            for j in 1..=2 {
                let rho: Vec<f64> = grid
                    .points()
                    .iter()
                    .map(|&t| 2f64.sqrt() * (j as f64 * std::f64::consts::PI * t).sin())
                    .collect();
                let xij: f64 = (0..51)
                    .map(|k| grid.weights()[k] * s.row(i)[k] * rho[k])
                    .sum();
                oracle += xij * gamma.coords()[j - 1];
            }
            assert!((scores[i] - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn scores_reject_non_unit_direction() {
        let s = random_sample(4, 21, 1);
        let coeffs = CoefficientMatrix::new(&s, Basis::BridgeSine, 2).unwrap();
        let bad = Direction::unchecked(vec![1.0, 1.0]);
        assert!(matches!(
            coeffs.scores(&bad),
            Err(Error::InvalidDirection(_))
        ));
    }

    #[test]
    fn component_cap() {
        let s = random_sample(5, 21, 1);
        assert!(CoefficientMatrix::new(&s, Basis::BridgeSine, 4).is_ok());
        assert!(matches!(
            CoefficientMatrix::new(&s, Basis::BridgeSine, 5),
            Err(Error::TooManyComponents { p: 5, max: 4 })
        ));
        assert_eq!(max_components(100), 20);
    }

    #[test]
    fn centering() {
        let grid = TimeGrid::uniform(5).unwrap();
        let c = vec![1.0, -2.0, 0.5, 3.0, 0.0];
        let neg: Vec<f64> = c.iter().map(|v| -v).collect();
        let s = FunctionalSample::new(grid.clone(), vec![c.clone(), neg.clone()]).unwrap();
        let centered = center_sample(&s);
        assert_eq!(centered.row(0), c.as_slice());
        assert_eq!(centered.row(1), neg.as_slice());

        let same = FunctionalSample::new(grid, vec![c.clone(), c.clone(), c]).unwrap();
        assert!(center_sample(&same).values().iter().all(|v| *v == 0.0));

        let r = center_sample(&random_sample(5, 17, 9));
        for k in 0..17 {
            let col: f64 = r.rows().map(|row| row[k]).sum();
            assert!(col.abs() < 1e-10);
        }
    }

    #[test]
    fn endpoint_values_are_exact() {
        for j in 1..=50 {
            assert_eq!(Basis::BridgeSine.eval(j, 0.0), 0.0);
            assert_eq!(Basis::BridgeSine.eval(j, 1.0), 0.0);
            assert_eq!(Basis::MotionSine.eval(j, 0.0), 0.0);
            assert_eq!(Basis::MotionSine.eval(j, 1.0).abs(), 2f64.sqrt());
        }
    }

    #[test]
    fn basis_gram_is_near_identity() {
        let grid = TimeGrid::uniform(201).unwrap();
        for basis in [Basis::BridgeSine, Basis::MotionSine] {
            let sampled: Vec<Vec<f64>> = (1..=10).map(|j| basis.sample(j, &grid)).collect();
            for i in 0..10 {
                for j in 0..10 {
                    let v = inner_product(&sampled[i], &sampled[j], &grid).unwrap();
                    let target = if i == j { 1.0 } else { 0.0 };
                    assert!((v - target).abs() < 1e-4, "{basis:?} ({i},{j}) = {v}");
                }
            }
        }
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let s = random_sample(3, 7, 2);
        let mut buf = Vec::new();
        write_curves(&mut buf, &s).unwrap();
        let back = read_curves(buf.as_slice()).unwrap();
        assert_eq!(back, s);

        let ragged = "0,0.5,1\n1,2,3\n1,2\n";
        assert!(matches!(
            read_curves(ragged.as_bytes()),
            Err(Error::LengthMismatch {
                expected: 3,
                found: 2
            })
        ));
        let nan = "0,0.5,1\n1,NaN,3\n1,2,3\n";
        assert!(matches!(
            read_curves(nan.as_bytes()),
            Err(Error::NonFinite { row: 0, col: 1 })
        ));
        let junk = "0,0.5,1\n1,x,3\n";
        assert!(matches!(read_curves(junk.as_bytes()), Err(Error::Parse(_))));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn curve(m: usize) -> impl Strategy<Value = Vec<f64>> {
            prop::collection::vec(-10.0f64..10.0, m)
        }

        proptest! {
            #[test]
            fn bilinear_symmetric_cauchy_schwarz(f in curve(33), g in curve(33), h in curve(33), a in -3.0f64..3.0) {
                let grid = TimeGrid::uniform(33).unwrap();
                let fg = inner_product(&f, &g, &grid).unwrap();
                prop_assert_eq!(fg, inner_product(&g, &f, &grid).unwrap());
                let ff = inner_product(&f, &f, &grid).unwrap();
                let gg = inner_product(&g, &g, &grid).unwrap();
                prop_assert!(fg.abs() <= (ff * gg).sqrt() + 1e-10);
                let comb: Vec<f64> = f.iter().zip(&h).map(|(x, y)| a * x + y).collect();
                let lhs = inner_product(&comb, &g, &grid).unwrap();
                let rhs = a * fg + inner_product(&h, &g, &grid).unwrap();
                prop_assert!((lhs - rhs).abs() < 1e-9 * (1.0 + lhs.abs()));
            }

            #[test]
            fn scores_are_linear_in_direction(seed in 0u64..1000, g1 in prop::collection::vec(-2.0f64..2.0, 3),
                                              g2 in prop::collection::vec(-2.0f64..2.0, 3), a in -2.0f64..2.0, b in -2.0f64..2.0) {
                let s = random_sample(6, 25, seed);
                let coeffs = CoefficientMatrix::new(&s, Basis::MotionSine, 3).unwrap();
                let comb: Vec<f64> = g1.iter().zip(&g2).map(|(x, y)| a * x + b * y).collect();
                let lhs = coeffs.combine(&comb).unwrap();
                let s1 = coeffs.combine(&g1).unwrap();
                let s2 = coeffs.combine(&g2).unwrap();
                for i in 0..6 {
                    prop_assert!((lhs[i] - (a * s1[i] + b * s2[i])).abs() < 1e-12);
                }
            }
        }
    }
}
