//! Multilinear interpolation over rectilinear lookup grids.

use super::PlantError;

/// A rectilinear lookup table with row-major values.
///
/// Queries outside the grid are clamped to the nearest axis endpoint, so the
/// table never extrapolates.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearGrid {
    axes: Vec<Vec<f64>>,
    values: Vec<f64>,
    strides: Vec<usize>,
}

impl LinearGrid {
    pub fn new(axes: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self, PlantError> {
        if axes.is_empty() {
            return Err(PlantError::MalformedGrid("grid has no axes".into()));
        }
        for (k, axis) in axes.iter().enumerate() {
            if axis.len() < 2 {
                return Err(PlantError::MalformedGrid(format!(
                    "axis {k} needs at least two points, got {}",
                    axis.len()
                )));
            }
            if axis.iter().any(|x| !x.is_finite()) {
                return Err(PlantError::MalformedGrid(format!("axis {k} has a non-finite point")));
            }
            if axis.windows(2).any(|w| w[1] <= w[0]) {
                return Err(PlantError::MalformedGrid(format!(
                    "axis {k} is not strictly increasing: {axis:?}"
                )));
            }
        }
        let expected: usize = axes.iter().map(Vec::len).product();
        if values.len() != expected {
            return Err(PlantError::MalformedGrid(format!(
                "expected {expected} values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(PlantError::MalformedGrid("grid has a non-finite value".into()));
        }
        let mut strides = vec![1; axes.len()];
        for k in (0..axes.len() - 1).rev() {
            strides[k] = strides[k + 1] * axes[k + 1].len();
        }
        Ok(Self { axes, values, strides })
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    /// Value stored at a node, addressed by per-axis indices.
    pub fn node(&self, idx: &[usize]) -> f64 {
        self.values[self.flat_index(idx)]
    }

    fn flat_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.axes.len());
        idx.iter()
            .zip(&self.axes)
            .fold(0, |acc, (&i, axis)| acc * axis.len() + i)
    }

    /// Interpolates at `point`. Exact at every node.
    ///
    /// # Panics
    /// If `point` has a different dimension than the grid.
    pub fn interpolate(&self, point: &[f64]) -> f64 {
        assert_eq!(point.len(), self.axes.len(), "point dimension mismatch");
        // up to 4 axes is plenty for performance tables
        let n = self.axes.len();
        let mut lower = [0usize; 4];
        let mut frac = [0.0f64; 4];
        assert!(n <= 4, "grids above four dimensions are not supported");
        for (k, (axis, &x)) in self.axes.iter().zip(point).enumerate() {
            let (i, t) = locate(axis, x);
            lower[k] = i;
            frac[k] = t;
        }

        let base: usize = (0..n).map(|k| lower[k] * self.strides[k]).sum();
        let mut acc = 0.0;
        for corner in 0..(1usize << n) {
            let mut weight = 1.0;
            let mut offset = base;
            for k in 0..n {
                if corner >> k & 1 == 1 {
                    weight *= frac[k];
                    offset += self.strides[k];
                } else {
                    weight *= 1.0 - frac[k];
                }
            }
            if weight != 0.0 {
                acc += weight * self.values[offset];
            }
        }
        acc
    }
}

/// Segment index and fractional position of `x` on `axis`, clamped.
fn locate(axis: &[f64], x: f64) -> (usize, f64) {
    let last = axis.len() - 1;
    if !(x > axis[0]) {
        // also catches NaN
        return (0, 0.0);
    }
    if x >= axis[last] {
        return (last - 1, 1.0);
    }
    let i = axis.partition_point(|&a| a <= x) - 1;
    let t = (x - axis[i]) / (axis[i + 1] - axis[i]);
    (i, t)
}
