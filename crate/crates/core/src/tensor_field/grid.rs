use serde::{Deserialize, Serialize};

use super::FieldError;

const MIN_RESOLUTION: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryMode {
    /// Flat torus: node `n` coincides with node `0`.
    Periodic,
    /// Bounded rectangle with nodes on both edges.
    Clamped,
}

/// Uniform tensor-product grid over a rectangle or a flat torus.
///
/// Nodes are stored row-major, index `j * nx + i` with `i` along the first axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridChart {
    origin: [f64; 2],
    extent: [f64; 2],
    resolution: [usize; 2],
    boundary: BoundaryMode,
}

impl GridChart {
    pub fn new(
        origin: [f64; 2],
        extent: [f64; 2],
        resolution: [usize; 2],
        boundary: BoundaryMode,
    ) -> Result<Self, FieldError> {
        if resolution.iter().any(|&n| n < MIN_RESOLUTION) {
            return Err(FieldError::Resolution(resolution));
        }
        if extent.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(FieldError::Extent(extent));
        }
        Ok(Self {
            origin,
            extent,
            resolution,
            boundary,
        })
    }

    /// `[0, side]^2` with `n` nodes per axis, edges included.
    pub fn square(side: f64, n: usize) -> Result<Self, FieldError> {
        Self::new([0.0; 2], [side; 2], [n; 2], BoundaryMode::Clamped)
    }

    /// Flat torus `R^2 / (period Z)^2` with `n` nodes per axis.
    pub fn torus(period: f64, n: usize) -> Result<Self, FieldError> {
        Self::new([0.0; 2], [period; 2], [n; 2], BoundaryMode::Periodic)
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn extent(&self) -> [f64; 2] {
        self.extent
    }

    pub fn resolution(&self) -> [usize; 2] {
        self.resolution
    }

    pub fn nx(&self) -> usize {
        self.resolution[0]
    }

    pub fn ny(&self) -> usize {
        self.resolution[1]
    }

    pub fn boundary(&self) -> BoundaryMode {
        self.boundary
    }

    pub fn is_periodic(&self) -> bool {
        self.boundary == BoundaryMode::Periodic
    }

    pub fn len(&self) -> usize {
        self.resolution[0] * self.resolution[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self) -> [f64; 2] {
        let cells = |n: usize| match self.boundary {
            BoundaryMode::Periodic => n as f64,
            BoundaryMode::Clamped => (n - 1) as f64,
        };
        [
            self.extent[0] / cells(self.resolution[0]),
            self.extent[1] / cells(self.resolution[1]),
        ]
    }

    pub fn max_spacing(&self) -> f64 {
        let h = self.spacing();
        h[0].max(h[1])
    }

    pub fn min_spacing(&self) -> f64 {
        let h = self.spacing();
        h[0].min(h[1])
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.resolution[0] + i
    }

    #[inline]
    pub fn ij(&self, idx: usize) -> (usize, usize) {
        (idx % self.resolution[0], idx / self.resolution[0])
    }

    #[inline]
    pub fn coords(&self, i: usize, j: usize) -> [f64; 2] {
        let h = self.spacing();
        [
            self.origin[0] + i as f64 * h[0],
            self.origin[1] + j as f64 * h[1],
        ]
    }

    pub fn node_coords(&self, idx: usize) -> [f64; 2] {
        let (i, j) = self.ij(idx);
        self.coords(i, j)
    }

    /// Displacement `x - y`, reduced to the minimum image on a torus.
    pub fn displacement(&self, x: [f64; 2], y: [f64; 2]) -> [f64; 2] {
        let mut d = [x[0] - y[0], x[1] - y[1]];
        if self.is_periodic() {
            for (k, dk) in d.iter_mut().enumerate() {
                let p = self.extent[k];
                *dk -= p * (*dk / p).round();
            }
        }
        d
    }

    /// Node-collar membership: true if the node is at least `collar` cells
    /// away from a clamped edge. Always true on a torus.
    pub fn in_interior(&self, idx: usize, collar: usize) -> bool {
        if self.is_periodic() {
            return true;
        }
        let (i, j) = self.ij(idx);
        i >= collar
            && j >= collar
            && i + collar < self.resolution[0]
            && j + collar < self.resolution[1]
    }

    pub fn same_shape(&self, other: &GridChart) -> bool {
        self == other
    }

    pub fn check_same(&self, other: &GridChart) -> Result<(), FieldError> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(FieldError::ChartMismatch)
        }
    }

    /// Chart with the same extent and `factor` times the cell count.
    pub fn refined(&self, factor: usize) -> Result<Self, FieldError> {
        let res = match self.boundary {
            BoundaryMode::Periodic => [self.resolution[0] * factor, self.resolution[1] * factor],
            BoundaryMode::Clamped => [
                (self.resolution[0] - 1) * factor + 1,
                (self.resolution[1] - 1) * factor + 1,
            ],
        };
        Self::new(self.origin, self.extent, res, self.boundary)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_by_mode() {
        let sq = GridChart::square(1.0, 11).unwrap();
        assert_eq!(sq.spacing(), [0.1, 0.1]);
        let t = GridChart::torus(1.0, 10).unwrap();
        assert_eq!(t.spacing(), [0.1, 0.1]);
    }

    #[test]
    fn rejects_coarse_grids() {
        assert!(GridChart::square(1.0, 4).is_err());
        assert!(GridChart::square(0.0, 16).is_err());
    }

    #[test]
    fn minimum_image() {
        let t = GridChart::torus(1.0, 16).unwrap();
        let d = t.displacement([0.95, 0.1], [0.05, 0.9]);
        assert!((d[0] + 0.1).abs() < 1e-12 && (d[1] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn refined_keeps_coarse_nodes() {
        let sq = GridChart::square(1.0, 9).unwrap();
        let f = sq.refined(2).unwrap();
        assert_eq!(f.nx(), 17);
        assert_eq!(f.coords(2, 4), [sq.coords(1, 2)[0], sq.coords(1, 2)[1]]);
    }
}
