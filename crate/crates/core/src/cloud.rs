use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// An ordered set of points in R^D, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    coords: Vec<f64>,
    dim: usize,
    labels: Option<Vec<i64>>,
    source: String,
}

impl PointCloud {
    /// Wraps row-major coordinates. Every entry must be finite and
    /// `coords.len()` a multiple of `dim`.
    pub fn new(coords: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidCloud("dimension must be positive".into()));
        }
        if coords.len() % dim != 0 {
            return Err(Error::InvalidCloud(format!(
                "{} coordinates do not split into rows of {dim}",
                coords.len()
            )));
        }
        if let Some(pos) = coords.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidCloud(format!(
                "non-finite coordinate in row {}",
                pos / dim
            )));
        }
        Ok(Self {
            coords,
            dim,
            labels: None,
            source: String::new(),
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.as_ref().len());
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::InvalidCloud(format!(
                    "row {i} has {} coordinates, expected {dim}",
                    row.len()
                )));
            }
            coords.extend_from_slice(row);
        }
        Self::new(coords, dim)
    }

    pub fn with_labels(mut self, labels: Vec<i64>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::LabelError(format!(
                "{} labels for {} points",
                labels.len(),
                self.len()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = source.into();
        self
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn labels(&self) -> Option<&[i64]> {
        self.labels.as_deref()
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// New cloud with the rows at `indices`, labels carried along.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            coords.extend_from_slice(self.point(i));
        }
        Self {
            coords,
            dim: self.dim,
            labels: self
                .labels
                .as_ref()
                .map(|l| indices.iter().map(|&i| l[i]).collect()),
            source: self.source.clone(),
        }
    }

    /// Same rows with different coordinates; labels and source are kept.
    pub(crate) fn replace_coords(&self, coords: Vec<f64>, dim: usize) -> Result<Self> {
        let mut out = Self::new(coords, dim)?;
        if out.len() != self.len() {
            return Err(Error::ShapeMismatch {
                expected: (self.len(), dim),
                found: (out.len(), dim),
            });
        }
        out.labels = self.labels.clone();
        out.source = self.source.clone();
        Ok(out)
    }
}
