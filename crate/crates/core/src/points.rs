use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Row-major set of points in `dim` dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet<S> {
    dim: usize,
    coords: Vec<S>,
}

impl<S: Scalar> PointSet<S> {
    pub fn new(dim: usize, coords: Vec<S>) -> Result<Self> {
        if dim == 0 || !coords.len().is_multiple_of(dim) {
            return Err(Error::usage(format!(
                "{} coordinates do not form points of dimension {dim}",
                coords.len()
            )));
        }
        Ok(Self { dim, coords })
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            coords: Vec::new(),
        }
    }

    pub fn from_points(dim: usize, points: &[Vec<S>]) -> Result<Self> {
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            if p.len() != dim {
                return Err(Error::usage(format!(
                    "point of dimension {} in a set of dimension {dim}",
                    p.len()
                )));
            }
            coords.extend_from_slice(p);
        }
        Ok(Self { dim, coords })
    }

    pub fn push(&mut self, point: &[S]) {
        assert_eq!(point.len(), self.dim);
        self.coords.extend_from_slice(point);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[S] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[S]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[S] {
        &self.coords
    }
}
