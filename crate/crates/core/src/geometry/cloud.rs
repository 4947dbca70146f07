use std::io::{BufRead, Write};

use super::rotation::Vec3;
use super::transform::RigidTransform;
use crate::error::{Error, Result};

/// A set of 3D points with optional per-point weights in `[0, 1]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
    pub weights: Option<Vec<f64>>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>) -> Self {
        Self {
            points,
            weights: None,
        }
    }

    pub fn with_weights(points: Vec<Vec3>, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != points.len() {
            return Err(Error::invalid(format!(
                "{} weights for {} points",
                weights.len(),
                points.len()
            )));
        }
        if weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(Error::invalid("weights must lie in [0, 1]"));
        }
        Ok(Self {
            points,
            weights: Some(weights),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn centroid(&self) -> Option<Vec3> {
        if self.points.is_empty() {
            return None;
        }
        let sum: Vec3 = self.points.iter().sum();
        Some(sum / self.points.len() as f64)
    }

    pub fn transformed(&self, t: &RigidTransform) -> PointCloud {
        PointCloud {
            points: self.points.iter().map(|p| t.apply(p)).collect(),
            weights: self.weights.clone(),
        }
    }

    /// Points selected by `mask`; weights are carried along.
    pub fn select(&self, mask: &[bool]) -> PointCloud {
        let points = self
            .points
            .iter()
            .zip(mask)
            .filter(|(_, m)| **m)
            .map(|(p, _)| *p)
            .collect();
        let weights = self.weights.as_ref().map(|w| {
            w.iter()
                .zip(mask)
                .filter(|(_, m)| **m)
                .map(|(w, _)| *w)
                .collect()
        });
        PointCloud { points, weights }
    }

    pub fn extend(&mut self, other: &PointCloud) {
        match (&mut self.weights, &other.weights) {
            (Some(a), Some(b)) => a.extend_from_slice(b),
            (Some(a), None) => a.extend(std::iter::repeat_n(1.0, other.len())),
            (None, Some(b)) if self.points.is_empty() => self.weights = Some(b.clone()),
            (None, Some(_)) => {}
            (None, None) => {}
        }
        self.points.extend_from_slice(&other.points);
    }

    /// ASCII XYZ: one point per line, whitespace separated, with an optional
    /// fourth column holding the weight.
    pub fn write_xyz<W: Write>(&self, mut out: W) -> Result<()> {
        for (i, p) in self.points.iter().enumerate() {
            match &self.weights {
                Some(w) => writeln!(out, "{} {} {} {}", p.x, p.y, p.z, w[i])?,
                None => writeln!(out, "{} {} {}", p.x, p.y, p.z)?,
            }
        }
        Ok(())
    }

    pub fn read_xyz<R: BufRead>(input: R) -> Result<Self> {
        let mut points = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        let mut weighted = None;
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let vals = line
                .split_whitespace()
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::parse(format!("line {}", lineno + 1), e.to_string()))?;
            let has_weight = match vals.len() {
                3 => false,
                4 => true,
                n => {
                    return Err(Error::parse(
                        format!("line {}", lineno + 1),
                        format!("expected 3 or 4 columns, found {n}"),
                    ))
                }
            };
            if *weighted.get_or_insert(has_weight) != has_weight {
                return Err(Error::parse(
                    format!("line {}", lineno + 1),
                    "mixed weighted and unweighted rows",
                ));
            }
            points.push(Vec3::new(vals[0], vals[1], vals[2]));
            if has_weight {
                weights.push(vals[3]);
            }
        }
        if weighted == Some(true) {
            PointCloud::with_weights(points, weights)
        } else {
            Ok(PointCloud::new(points))
        }
    }

    pub fn save_xyz(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_xyz(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load_xyz(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_xyz(std::io::BufReader::new(file))
    }
}

impl From<Vec<Vec3>> for PointCloud {
    fn from(points: Vec<Vec3>) -> Self {
        PointCloud::new(points)
    }
}
