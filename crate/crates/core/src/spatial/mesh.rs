use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform rectangular partition of `[x0, x1] x [y0, y1]`.
///
/// Cells are numbered row-major with `x` running fastest: cell `(i, j)` has
/// flat index `j * nx + i`. With piecewise-constant elements each cell
/// carries exactly one degree of freedom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialMesh {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub nx: usize,
    pub ny: usize,
}

impl SpatialMesh {
    pub fn new(x_range: (f64, f64), y_range: (f64, f64), nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::Config(format!(
                "mesh needs at least one cell per direction, got {nx}x{ny}"
            )));
        }
        for (name, (lo, hi)) in [("x", x_range), ("y", y_range)] {
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(Error::Config(format!(
                    "degenerate {name} range [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self {
            x_range,
            y_range,
            nx,
            ny,
        })
    }

    pub fn dx(&self) -> f64 {
        (self.x_range.1 - self.x_range.0) / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_range.1 - self.y_range.0) / self.ny as f64
    }

    /// Smallest cell edge length.
    pub fn h(&self) -> f64 {
        self.dx().min(self.dy())
    }

    pub fn n_dof(&self) -> usize {
        self.nx * self.ny
    }

    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dy()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Inverse of [`SpatialMesh::index`].
    #[inline]
    pub fn cell_ij(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    pub fn cell_center(&self, k: usize) -> (f64, f64) {
        let (i, j) = self.cell_ij(k);
        (
            self.x_range.0 + (i as f64 + 0.5) * self.dx(),
            self.y_range.0 + (j as f64 + 0.5) * self.dy(),
        )
    }

    /// Samples `f` at every cell center.
    pub fn sample<F: Fn(f64, f64) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.n_dof())
            .map(|k| {
                let (x, y) = self.cell_center(k);
                f(x, y)
            })
            .collect()
    }
}
