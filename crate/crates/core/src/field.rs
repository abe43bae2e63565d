//! Sampled space-time fields on uniform lattices.
//!
//! A [`Field`] stores `v(x, t)` for every point of a [`SpaceGrid`] and every
//! time of a [`TimeGrid`]. Values are laid out space-major / time-minor, so
//! the time series at one spatial point is a contiguous slice of length `n`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum number of spatial axes.
pub const MAX_NDIM: usize = 3;

/// Uniform time lattice `t_j = t0 + j * dt`, `0 <= j < n`, on the closed
/// interval `I = [t0, t0 + (n - 1) * dt]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub dt: f64,
    pub n: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, dt: f64, n: usize) -> Result<Self> {
        let grid = TimeGrid { t0, dt, n };
        grid.validate()?;
        Ok(grid)
    }

    /// Grid with `n` points covering `[start, end]`.
    pub fn spanning(start: f64, end: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGrid(format!("time grid needs n >= 2, got {n}")));
        }
        Self::new(start, (end - start) / (n - 1) as f64, n)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.t0.is_finite() {
            return Err(Error::InvalidGrid(format!("t0 must be finite, got {}", self.t0)));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidGrid(format!("dt must be finite and > 0, got {}", self.dt)));
        }
        if self.n < 2 {
            return Err(Error::InvalidGrid(format!("time grid needs n >= 2, got {}", self.n)));
        }
        Ok(())
    }

    #[inline]
    pub fn time(&self, j: usize) -> f64 {
        self.t0 + j as f64 * self.dt
    }

    pub fn start(&self) -> f64 {
        self.t0
    }

    pub fn end(&self) -> f64 {
        self.time(self.n - 1)
    }

    /// Length of `I` as seen by left-Riemann quadrature, `(n - 1) * dt`.
    pub fn length(&self) -> f64 {
        (self.n - 1) as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |j| self.time(j))
    }

    /// Index of the grid time nearest-below `t`, or `None` when `t` lies
    /// outside `I`. Times within a few ulps of a grid point snap to it.
    pub fn index_below(&self, t: f64) -> Option<usize> {
        if !t.is_finite() {
            return None;
        }
        let s = (t - self.t0) / self.dt;
        let nearest = s.round();
        let s = if (s - nearest).abs() <= 1e-9 * nearest.abs().max(1.0) {
            nearest
        } else {
            s
        };
        if s < 0.0 || s > (self.n - 1) as f64 {
            return None;
        }
        Some((s.floor() as usize).min(self.n - 1))
    }

    /// The same interval sampled `factor` times more finely.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::InvalidParameter("refinement factor must be >= 1".into()));
        }
        Self::new(self.t0, self.dt / factor as f64, (self.n - 1) * factor + 1)
    }
}

/// Uniform rectangular lattice on `E`, with `ndim = shape.len()` axes.
/// Points are ordered row-major: the last axis varies fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceGrid {
    shape: Vec<usize>,
    spacing: Vec<f64>,
    origin: Vec<f64>,
}

impl SpaceGrid {
    pub fn new(shape: Vec<usize>, spacing: Vec<f64>, origin: Vec<f64>) -> Result<Self> {
        let grid = SpaceGrid {
            shape,
            spacing,
            origin,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// One-dimensional grid of `points` samples covering `[start, end]`.
    pub fn line(start: f64, end: f64, points: usize) -> Result<Self> {
        if points < 2 {
            return Err(Error::InvalidGrid("a spanning line needs >= 2 points".into()));
        }
        Self::new(
            vec![points],
            vec![(end - start) / (points - 1) as f64],
            vec![start],
        )
    }

    /// Single-point grid with unit cell volume.
    pub fn point() -> Self {
        SpaceGrid {
            shape: vec![1],
            spacing: vec![1.0],
            origin: vec![0.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ndim = self.shape.len();
        if ndim == 0 || ndim > MAX_NDIM {
            return Err(Error::InvalidGrid(format!(
                "ndim must be in 1..={MAX_NDIM}, got {ndim}"
            )));
        }
        if self.spacing.len() != ndim || self.origin.len() != ndim {
            return Err(Error::InvalidGrid(format!(
                "shape, spacing and origin must all have {ndim} entries"
            )));
        }
        if let Some(axis) = self.shape.iter().position(|&s| s == 0) {
            return Err(Error::InvalidGrid(format!("shape[{axis}] must be >= 1")));
        }
        if let Some(axis) = self
            .spacing
            .iter()
            .position(|&h| !(h.is_finite() && h > 0.0))
        {
            return Err(Error::InvalidGrid(format!(
                "spacing[{axis}] must be finite and > 0, got {}",
                self.spacing[axis]
            )));
        }
        if let Some(axis) = self.origin.iter().position(|o| !o.is_finite()) {
            return Err(Error::InvalidGrid(format!("origin[{axis}] must be finite")));
        }
        Ok(())
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    /// Number of spatial points, `prod(shape)`.
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Quadrature weight of each spatial sample, `prod(spacing)`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Total measure `len() * cell_volume()`.
    pub fn measure(&self) -> f64 {
        self.len() as f64 * self.cell_volume()
    }

    /// Flat-index distance between neighbours along `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.shape[axis + 1..].iter().product()
    }

    pub fn unravel(&self, flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.ndim()];
        let mut rem = flat;
        for axis in (0..self.ndim()).rev() {
            idx[axis] = rem % self.shape[axis];
            rem /= self.shape[axis];
        }
        idx
    }

    pub fn coords(&self, flat: usize) -> Vec<f64> {
        self.unravel(flat)
            .into_iter()
            .enumerate()
            .map(|(axis, i)| self.origin[axis] + i as f64 * self.spacing[axis])
            .collect()
    }

    /// True when `flat` lies in the outermost layer of cells along any axis
    /// with more than one point.
    pub fn on_boundary(&self, flat: usize) -> bool {
        self.unravel(flat)
            .iter()
            .zip(&self.shape)
            .any(|(&i, &s)| s > 1 && (i == 0 || i == s - 1))
    }
}

fn check_finite(values: &[f64], n_time: usize) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        None => Ok(()),
        Some(pos) => Err(Error::NonFinite {
            spatial: pos / n_time,
            time: pos % n_time,
            value: values[pos],
        }),
    }
}

/// Sampled `v(x, t)` over `SpaceGrid x TimeGrid`.
///
/// Immutable after construction; every value is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    space: SpaceGrid,
    time: TimeGrid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(space: SpaceGrid, time: TimeGrid, values: Vec<f64>) -> Result<Self> {
        space.validate()?;
        time.validate()?;
        let expected = space.len() * time.n;
        if values.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                found: values.len(),
            });
        }
        check_finite(&values, time.n)?;
        Ok(Field {
            space,
            time,
            values,
        })
    }

    /// Samples `sampler(x, t)` at every grid point.
    pub fn from_fn<F>(space: SpaceGrid, time: TimeGrid, sampler: F) -> Result<Self>
    where
        F: Fn(&[f64], f64) -> f64,
    {
        space.validate()?;
        time.validate()?;
        let mut values = Vec::with_capacity(space.len() * time.n);
        for s in 0..space.len() {
            let x = space.coords(s);
            for j in 0..time.n {
                values.push(sampler(&x, time.time(j)));
            }
        }
        check_finite(&values, time.n)?;
        Ok(Field {
            space,
            time,
            values,
        })
    }

    pub fn zeros(space: SpaceGrid, time: TimeGrid) -> Result<Self> {
        let len = space.len() * time.n;
        Self::new(space, time, vec![0.0; len])
    }

    pub fn space(&self) -> &SpaceGrid {
        &self.space
    }

    pub fn time(&self) -> &TimeGrid {
        &self.time
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn n_space(&self) -> usize {
        self.space.len()
    }

    pub fn n_time(&self) -> usize {
        self.time.n
    }

    #[inline]
    pub fn value(&self, spatial: usize, j: usize) -> f64 {
        self.values[spatial * self.time.n + j]
    }

    /// The time series at one spatial point.
    #[inline]
    pub fn series(&self, spatial: usize) -> &[f64] {
        let n = self.time.n;
        &self.values[spatial * n..(spatial + 1) * n]
    }

    pub fn series_iter(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.time.n)
    }

    pub fn time_slice(&self, j: usize) -> Result<SpaceSlice> {
        if j >= self.time.n {
            return Err(Error::IndexOutOfRange {
                what: "time",
                index: j,
                len: self.time.n,
            });
        }
        Ok(SpaceSlice {
            space: self.space.clone(),
            values: self.series_iter().map(|s| s[j]).collect(),
        })
    }

    /// `v(x_s, t)` extended by zero outside `I`, with left-constant
    /// interpolation between grid times.
    pub fn sample_extended(&self, spatial: usize, t: f64) -> Result<f64> {
        if spatial >= self.n_space() {
            return Err(Error::IndexOutOfRange {
                what: "spatial",
                index: spatial,
                len: self.n_space(),
            });
        }
        Ok(match self.time.index_below(t) {
            Some(j) => self.value(spatial, j),
            None => 0.0,
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn same_grid(&self, other: &Field) -> bool {
        self.space == other.space && self.time == other.time
    }

    pub(crate) fn ensure_same_grid(&self, other: &Field) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch("fields live on different grids".into()))
        }
    }

    /// Pointwise `alpha * self + beta * other`.
    pub fn combine(&self, alpha: f64, other: &Field, beta: f64) -> Result<Field> {
        self.ensure_same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        Field::new(self.space.clone(), self.time, values)
    }

    pub fn scaled(&self, lambda: f64) -> Result<Field> {
        Field::new(
            self.space.clone(),
            self.time,
            self.values.iter().map(|v| lambda * v).collect(),
        )
    }

    /// The first `count` time samples, on a grid with the same `t0` and `dt`.
    pub fn truncate_time(&self, count: usize) -> Result<Field> {
        let n = self.time.n;
        if count < 2 || count > n {
            return Err(Error::InvalidParameter(format!(
                "cannot truncate {n} time samples to {count}"
            )));
        }
        let time = TimeGrid::new(self.time.t0, self.time.dt, count)?;
        let values = self
            .series_iter()
            .flat_map(|s| s[..count].iter().copied())
            .collect();
        Field::new(self.space.clone(), time, values)
    }

    /// Builds a field from per-spatial-point time series without the
    /// finiteness scan; used by operators whose outputs are finite by
    /// construction from finite inputs.
    pub(crate) fn from_parts_unchecked(space: SpaceGrid, time: TimeGrid, values: Vec<f64>) -> Field {
        debug_assert_eq!(values.len(), space.len() * time.n);
        Field {
            space,
            time,
            values,
        }
    }
}

/// A single element of `L^q(E)`: values on a spatial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceSlice {
    space: SpaceGrid,
    values: Vec<f64>,
}

impl SpaceSlice {
    pub fn new(space: SpaceGrid, values: Vec<f64>) -> Result<Self> {
        space.validate()?;
        if values.len() != space.len() {
            return Err(Error::LengthMismatch {
                expected: space.len(),
                found: values.len(),
            });
        }
        check_finite(&values, 1)?;
        Ok(SpaceSlice { space, values })
    }

    pub fn from_fn<F: Fn(&[f64]) -> f64>(space: SpaceGrid, f: F) -> Result<Self> {
        let values = (0..space.len()).map(|s| f(&space.coords(s))).collect();
        Self::new(space, values)
    }

    pub fn zeros(space: SpaceGrid) -> Self {
        let len = space.len();
        SpaceSlice {
            space,
            values: vec![0.0; len],
        }
    }

    pub fn space(&self) -> &SpaceGrid {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub(crate) fn from_parts_unchecked(space: SpaceGrid, values: Vec<f64>) -> SpaceSlice {
        SpaceSlice { space, values }
    }
}
