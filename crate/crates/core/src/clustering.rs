//! Lloyd-style K-means over exact points and UK-means over uncertain points.
//!
//! Both algorithms share one loop; they differ only in the assignment cost
//! (squared distance vs. expected squared distance) and in the value averaged
//! during the update (the point vs. its expected position). That difference is
//! captured by the [`Clusterable`] trait.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Point2D, UncertainPoint};

#[derive(Debug, Error, PartialEq)]
pub enum ClusteringError {
    #[error("k = {k} exceeds the number of data points ({n})")]
    TooManyClusters { k: usize, n: usize },
    #[error("k must be at least 1")]
    ZeroClusters,
    #[error("max_iterations must be at least 1")]
    ZeroIterations,
    #[error("convergence epsilon must be finite and >= 0, got {0}")]
    InvalidEpsilon(f64),
    #[error("{given} initial centers supplied for k = {k}")]
    InitMismatch { given: usize, k: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitStrategy {
    RandomPoints,
    FarthestFirst,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringConfig {
    pub k: usize,
    pub max_iterations: usize,
    /// Squared meters; the loop stops once every center moves less than this.
    pub convergence_epsilon: f64,
    pub init_strategy: InitStrategy,
    pub seed: u64,
}

impl ClusteringConfig {
    pub fn new(k: usize) -> Self {
        Self { k, max_iterations: 100, convergence_epsilon: 1e-6, init_strategy: InitStrategy::FarthestFirst, seed: 0 }
    }

    pub fn validate(&self, n_points: usize) -> Result<(), ClusteringError> {
        if self.k == 0 {
            return Err(ClusteringError::ZeroClusters);
        }
        if self.k > n_points {
            return Err(ClusteringError::TooManyClusters { k: self.k, n: n_points });
        }
        if self.max_iterations == 0 {
            return Err(ClusteringError::ZeroIterations);
        }
        if !self.convergence_epsilon.is_finite() || self.convergence_epsilon < 0.0 {
            return Err(ClusteringError::InvalidEpsilon(self.convergence_epsilon));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringResult {
    pub labels: Vec<usize>,
    pub centers: Vec<Point2D>,
    /// Sum over points of the (expected) squared distance to the assigned center.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Something that can be clustered: exact points or uncertain points.
pub trait Clusterable {
    /// Assignment cost against a center.
    fn cost(&self, center: Point2D) -> f64;
    /// Value averaged by the center update.
    fn representative(&self) -> Point2D;
}

impl Clusterable for Point2D {
    fn cost(&self, center: Point2D) -> f64 {
        self.dist_sq(center)
    }
    fn representative(&self) -> Point2D {
        *self
    }
}

impl Clusterable for UncertainPoint {
    fn cost(&self, center: Point2D) -> f64 {
        self.expected_sq_distance(center)
    }
    fn representative(&self) -> Point2D {
        self.expected_position()
    }
}

/// Index of the cheapest center; ties go to the lowest index.
fn argmin_center<D: Clusterable>(p: &D, centers: &[Point2D]) -> usize {
    let mut best = 0;
    let mut best_cost = p.cost(centers[0]);
    for (j, c) in centers.iter().enumerate().skip(1) {
        let cost = p.cost(*c);
        if cost < best_cost {
            best = j;
            best_cost = cost;
        }
    }
    best
}

pub fn assign<D: Clusterable>(data: &[D], centers: &[Point2D]) -> Vec<usize> {
    data.iter().map(|p| argmin_center(p, centers)).collect()
}

/// Means of the representatives per cluster. An empty cluster is reseeded at
/// the point lying farthest from its current center (distinct points when
/// several clusters are empty).
pub fn update<D: Clusterable>(data: &[D], labels: &[usize], current: &[Point2D]) -> Vec<Point2D> {
    let k = current.len();
    let mut sums = vec![Point2D::ORIGIN; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in data.iter().zip(labels) {
        sums[l] = sums[l] + p.representative();
        counts[l] += 1;
    }
    let mut centers: Vec<Point2D> = sums
        .iter()
        .zip(&counts)
        .zip(current)
        .map(|((s, &n), old)| if n > 0 { *s * (1.0 / n as f64) } else { *old })
        .collect();

    if counts.contains(&0) {
        let mut taken = vec![false; data.len()];
        for j in (0..k).filter(|&j| counts[j] == 0) {
            let mut far: Option<(usize, f64)> = None;
            for (i, (p, &l)) in data.iter().zip(labels).enumerate() {
                if taken[i] {
                    continue;
                }
                let d = p.cost(current[l]);
                if far.is_none_or(|(_, best)| d > best) {
                    far = Some((i, d));
                }
            }
            if let Some((i, _)) = far {
                taken[i] = true;
                centers[j] = data[i].representative();
            }
        }
    }
    centers
}

pub fn objective<D: Clusterable>(data: &[D], labels: &[usize], centers: &[Point2D]) -> f64 {
    data.iter().zip(labels).map(|(p, &l)| p.cost(centers[l])).sum()
}

pub fn kmeans_assign(points: &[Point2D], centers: &[Point2D]) -> Vec<usize> {
    assign(points, centers)
}

pub fn kmeans_update(points: &[Point2D], labels: &[usize], current: &[Point2D]) -> Vec<Point2D> {
    update(points, labels, current)
}

pub fn ukmeans_assign(points: &[UncertainPoint], centers: &[Point2D]) -> Vec<usize> {
    assign(points, centers)
}

pub fn ukmeans_update(points: &[UncertainPoint], labels: &[usize], current: &[Point2D]) -> Vec<Point2D> {
    update(points, labels, current)
}

/// Initial centers. FarthestFirst starts from the representative farthest from
/// the data mean, then repeatedly adds the point farthest from all chosen
/// centers; it depends only on the data, so the seed matters for RandomPoints.
pub fn initial_centers<D: Clusterable>(data: &[D], cfg: &ClusteringConfig) -> Vec<Point2D> {
    let reps: Vec<Point2D> = data.iter().map(Clusterable::representative).collect();
    match cfg.init_strategy {
        InitStrategy::RandomPoints => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut idx = sample(&mut rng, reps.len(), cfg.k).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|i| reps[i]).collect()
        }
        InitStrategy::FarthestFirst => {
            let n = reps.len() as f64;
            let mean = reps.iter().fold(Point2D::ORIGIN, |a, p| a + *p) * (1.0 / n);
            let mut chosen = vec![false; reps.len()];
            let mut first = 0;
            for (i, p) in reps.iter().enumerate() {
                if p.dist_sq(mean) > reps[first].dist_sq(mean) {
                    first = i;
                }
            }
            chosen[first] = true;
            let mut centers = vec![reps[first]];
            let mut nearest: Vec<f64> = reps.iter().map(|p| p.dist_sq(reps[first])).collect();
            while centers.len() < cfg.k {
                let mut next: Option<usize> = None;
                for i in (0..reps.len()).filter(|&i| !chosen[i]) {
                    if next.is_none_or(|b| nearest[i] > nearest[b]) {
                        next = Some(i);
                    }
                }
                let i = next.expect("k <= n leaves an unchosen point");
                chosen[i] = true;
                centers.push(reps[i]);
                for (d, p) in nearest.iter_mut().zip(&reps) {
                    *d = d.min(p.dist_sq(reps[i]));
                }
            }
            centers
        }
    }
}

/// Per-iteration snapshot handed to observers of [`run_clustering_observed`].
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub labels: Vec<usize>,
    pub centers: Vec<Point2D>,
    pub objective: f64,
}

pub fn run_clustering<D: Clusterable>(data: &[D], cfg: &ClusteringConfig) -> Result<ClusteringResult, ClusteringError> {
    run_clustering_observed(data, cfg, None, |_| {})
}

/// Like [`run_clustering`] but starting from the given centers.
pub fn run_clustering_from<D: Clusterable>(
    data: &[D],
    cfg: &ClusteringConfig,
    initial: &[Point2D],
) -> Result<ClusteringResult, ClusteringError> {
    run_clustering_observed(data, cfg, Some(initial), |_| {})
}

/// The assign/update loop. `observe` sees every iteration after its update.
pub fn run_clustering_observed<D, F>(
    data: &[D],
    cfg: &ClusteringConfig,
    initial: Option<&[Point2D]>,
    mut observe: F,
) -> Result<ClusteringResult, ClusteringError>
where
    D: Clusterable,
    F: FnMut(&IterationRecord),
{
    cfg.validate(data.len())?;
    let mut centers = match initial {
        Some(c) if c.len() != cfg.k => return Err(ClusteringError::InitMismatch { given: c.len(), k: cfg.k }),
        Some(c) => c.to_vec(),
        None => initial_centers(data, cfg),
    };

    let mut labels = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut obj = f64::INFINITY;
    for it in 1..=cfg.max_iterations {
        iterations = it;
        labels = assign(data, &centers);
        let next = update(data, &labels, &centers);
        let shift = centers.iter().zip(&next).map(|(a, b)| a.dist_sq(*b)).fold(0.0, f64::max);
        centers = next;
        obj = objective(data, &labels, &centers);
        observe(&IterationRecord { iteration: it, labels: labels.clone(), centers: centers.clone(), objective: obj });
        if shift < cfg.convergence_epsilon {
            converged = true;
            break;
        }
    }

    Ok(ClusteringResult { labels, centers, objective: obj, iterations, converged })
}
