//! Planar positions with localization uncertainty.
//!
//! A reported UE position is an [`UncertainPoint`]: an identifier plus an
//! [`UncertaintyPdf`] describing where the UE may actually be. UK-means only
//! ever needs two expectations of that PDF, the expected position and the
//! expected squared distance to a candidate center, and both are provided
//! here in closed form.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("non-finite coordinate ({0}, {1})")]
    NonFinite(f64, f64),
    #[error("disk radius must be finite and >= 0, got {0}")]
    InvalidRadius(f64),
    #[error("sample-based pdf needs at least one sample")]
    NoSamples,
    #[error("{samples} samples but {weights} weights")]
    LengthMismatch { samples: usize, weights: usize },
    #[error("weights must be finite and non-negative")]
    NegativeWeight,
    #[error("weights sum to {0}, expected 1")]
    WeightSum(f64),
}

/// A position in meters on the cell plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub const ORIGIN: Point2D = Point2D { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_polar(radius: f64, angle: f64) -> Self {
        Self::new(radius * angle.cos(), radius * angle.sin())
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn norm_sq(&self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Squared Euclidean distance, the K-means assignment cost.
    pub fn dist_sq(&self, other: Point2D) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn dist(&self, other: Point2D) -> f64 {
        self.dist_sq(other).sqrt()
    }

    /// Bearing of `self` as seen from `origin`, in (-pi, pi].
    pub fn angle_from(&self, origin: Point2D) -> f64 {
        (self.y - origin.y).atan2(self.x - origin.x)
    }

    /// Rotates the point about `pivot` by `angle` radians.
    pub fn rotate_about(&self, pivot: Point2D, angle: f64) -> Point2D {
        let (s, c) = angle.sin_cos();
        let d = *self - pivot;
        pivot + Point2D::new(d.x * c - d.y * s, d.x * s + d.y * c)
    }
}

impl Add for Point2D {
    type Output = Point2D;
    fn add(self, rhs: Point2D) -> Point2D {
        Point2D::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2D {
    type Output = Point2D;
    fn sub(self, rhs: Point2D) -> Point2D {
        Point2D::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2D {
    type Output = Point2D;
    fn mul(self, rhs: f64) -> Point2D {
        Point2D::new(self.x * rhs, self.y * rhs)
    }
}

/// Distribution of a UE's actual position given its localization report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum UncertaintyPdf {
    /// Uniform over a disk. A zero radius is an exact point.
    UniformDisk { center: Point2D, radius: f64 },
    /// Discrete distribution over candidate positions.
    SampleBased { samples: Vec<Point2D>, weights: Vec<f64> },
}

impl UncertaintyPdf {
    pub fn uniform_disk(center: Point2D, radius: f64) -> Result<Self, GeometryError> {
        let pdf = UncertaintyPdf::UniformDisk { center, radius };
        pdf.validate()?;
        Ok(pdf)
    }

    pub fn exact(at: Point2D) -> Result<Self, GeometryError> {
        Self::uniform_disk(at, 0.0)
    }

    pub fn sample_based(samples: Vec<Point2D>, weights: Vec<f64>) -> Result<Self, GeometryError> {
        let pdf = UncertaintyPdf::SampleBased { samples, weights };
        pdf.validate()?;
        Ok(pdf)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        match self {
            UncertaintyPdf::UniformDisk { center, radius } => {
                check_finite(center)?;
                if !radius.is_finite() || *radius < 0.0 {
                    return Err(GeometryError::InvalidRadius(*radius));
                }
            }
            UncertaintyPdf::SampleBased { samples, weights } => {
                if samples.is_empty() {
                    return Err(GeometryError::NoSamples);
                }
                if samples.len() != weights.len() {
                    return Err(GeometryError::LengthMismatch { samples: samples.len(), weights: weights.len() });
                }
                samples.iter().try_for_each(check_finite)?;
                if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
                    return Err(GeometryError::NegativeWeight);
                }
                let sum: f64 = weights.iter().sum();
                if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
                    return Err(GeometryError::WeightSum(sum));
                }
            }
        }
        Ok(())
    }

    /// E[x] under the pdf.
    pub fn expected_position(&self) -> Point2D {
        match self {
            UncertaintyPdf::UniformDisk { center, .. } => *center,
            UncertaintyPdf::SampleBased { samples, weights } => {
                samples.iter().zip(weights).fold(Point2D::ORIGIN, |acc, (s, w)| acc + *s * *w)
            }
        }
    }

    /// E[|x - c|^2] under the pdf.
    ///
    /// For a uniform disk with center `mu` and radius `R` the angular cross
    /// terms vanish and the radial density `2r/R^2` gives `E[r^2] = R^2/2`,
    /// so the result is `|mu - c|^2 + R^2/2`.
    pub fn expected_sq_distance(&self, c: Point2D) -> f64 {
        match self {
            UncertaintyPdf::UniformDisk { center, radius } => center.dist_sq(c) + 0.5 * radius * radius,
            UncertaintyPdf::SampleBased { samples, weights } => {
                samples.iter().zip(weights).map(|(s, w)| w * s.dist_sq(c)).sum()
            }
        }
    }

    /// The localizer's single point estimate: the disk center, or the
    /// highest-weight sample (first one on ties).
    pub fn point_estimate(&self) -> Point2D {
        match self {
            UncertaintyPdf::UniformDisk { center, .. } => *center,
            UncertaintyPdf::SampleBased { samples, weights } => {
                let mut best = 0;
                for (i, w) in weights.iter().enumerate() {
                    if *w > weights[best] {
                        best = i;
                    }
                }
                samples[best]
            }
        }
    }

    /// Draws one position. Disk sampling is area-uniform (`r = R * sqrt(u)`).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point2D {
        match self {
            UncertaintyPdf::UniformDisk { center, radius } => {
                if *radius == 0.0 {
                    return *center;
                }
                let r = radius * rng.random::<f64>().sqrt();
                let theta = 2.0 * PI * rng.random::<f64>();
                *center + Point2D::from_polar(r, theta)
            }
            UncertaintyPdf::SampleBased { samples, weights } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (s, w) in samples.iter().zip(weights) {
                    acc += w;
                    if u < acc {
                        return *s;
                    }
                }
                // u landed in the rounding gap above the cumulative sum
                let last = weights.iter().rposition(|w| *w > 0.0).unwrap_or(0);
                samples[last]
            }
        }
    }

    pub fn translate(&self, v: Point2D) -> Self {
        match self {
            UncertaintyPdf::UniformDisk { center, radius } => {
                UncertaintyPdf::UniformDisk { center: *center + v, radius: *radius }
            }
            UncertaintyPdf::SampleBased { samples, weights } => UncertaintyPdf::SampleBased {
                samples: samples.iter().map(|s| *s + v).collect(),
                weights: weights.clone(),
            },
        }
    }
}

fn check_finite(p: &Point2D) -> Result<(), GeometryError> {
    if p.is_finite() {
        Ok(())
    } else {
        Err(GeometryError::NonFinite(p.x, p.y))
    }
}

/// A reported UE position together with its uncertainty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertainPoint {
    pub id: usize,
    pub pdf: UncertaintyPdf,
}

impl UncertainPoint {
    pub fn new(id: usize, pdf: UncertaintyPdf) -> Result<Self, GeometryError> {
        pdf.validate()?;
        Ok(Self { id, pdf })
    }

    pub fn exact(id: usize, at: Point2D) -> Result<Self, GeometryError> {
        Self::new(id, UncertaintyPdf::exact(at)?)
    }

    pub fn expected_position(&self) -> Point2D {
        self.pdf.expected_position()
    }

    pub fn expected_sq_distance(&self, c: Point2D) -> f64 {
        self.pdf.expected_sq_distance(c)
    }

    pub fn point_estimate(&self) -> Point2D {
        self.pdf.point_estimate()
    }

    pub fn sample_position<R: Rng + ?Sized>(&self, rng: &mut R) -> Point2D {
        self.pdf.sample(rng)
    }

    pub fn translate(&self, v: Point2D) -> Self {
        Self { id: self.id, pdf: self.pdf.translate(v) }
    }
}

/// Wraps an angle difference into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

/// Monte Carlo estimate of `E[|x - c|^2]`. Disk draws use rejection from the
/// bounding square, independent of [`UncertaintyPdf::sample`].
pub fn monte_carlo_sq_distance<R: Rng + ?Sized>(pdf: &UncertaintyPdf, c: Point2D, samples: usize, rng: &mut R) -> f64 {
    let mut sum = 0.0;
    for _ in 0..samples {
        let x = match pdf {
            UncertaintyPdf::UniformDisk { center, radius } => loop {
                let dx = radius * (2.0 * rng.random::<f64>() - 1.0);
                let dy = radius * (2.0 * rng.random::<f64>() - 1.0);
                if dx * dx + dy * dy <= radius * radius {
                    break *center + Point2D::new(dx, dy);
                }
            },
            sb => sb.sample(rng),
        };
        sum += x.dist_sq(c);
    }
    sum / samples as f64
}
