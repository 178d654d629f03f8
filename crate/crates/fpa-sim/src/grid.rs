//! Uniform grids over `[0, v̄)` used for both bids and values.
//!
//! A grid of size `n` has points `i * v̄ / n` for `i = 0..n-1`, so the
//! grid always starts at 0 and its top point is `(n-1)/n * v̄`. Indices
//! are 0-based internally; anything user-facing (logs, CSV) reports the
//! grid *value* instead of the index.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
    value_bound: f64,
}

impl Grid {
    /// Build the uniform grid `{ i * value_bound / size : i = 0..size-1 }`.
    pub fn uniform(size: usize, value_bound: f64) -> Result<Self> {
        if size == 0 {
            return Err(Error::Config("grid size must be >= 1".into()));
        }
        if !(value_bound > 0.0) || !value_bound.is_finite() {
            return Err(Error::Config(format!(
                "grid value_bound must be a positive finite real, got {value_bound}"
            )));
        }
        let points = (0..size)
            .map(|i| i as f64 * value_bound / size as f64)
            .collect();
        Ok(Grid { points, value_bound })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction requires size >= 1
    }

    pub fn value_bound(&self) -> f64 {
        self.value_bound
    }

    pub fn point(&self, index: usize) -> f64 {
        self.points[index]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Largest index `i` with `points[i] <= x`; saturates at the top
    /// point when `x >= value_bound`. Computed arithmetically with a
    /// one-step boundary correction instead of a search.
    pub fn floor_index(&self, x: f64) -> Result<usize> {
        if x.is_nan() || x < 0.0 {
            return Err(Error::Simulation(format!(
                "floor_index requires x >= 0, got {x}"
            )));
        }
        let n = self.points.len();
        let guess = (x / self.value_bound * n as f64).floor();
        let mut idx = if guess >= (n - 1) as f64 { n - 1 } else { guess as usize };
        // Float rounding can land one step off on either side.
        while idx > 0 && self.points[idx] > x {
            idx -= 1;
        }
        while idx + 1 < n && self.points[idx + 1] <= x {
            idx += 1;
        }
        Ok(idx)
    }

    /// Smallest index `i` with `points[i] >= x`, or `None` when `x`
    /// exceeds the top grid point.
    pub fn ceil_index(&self, x: f64) -> Option<usize> {
        if x <= 0.0 {
            return Some(0);
        }
        let floor = self.floor_index(x).ok()?;
        if self.points[floor] == x {
            Some(floor)
        } else if floor + 1 < self.points.len() {
            Some(floor + 1)
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hundred_point_unit_grid() {
        let g = Grid::uniform(100, 1.0).unwrap();
        assert_eq!(g.len(), 100);
        for i in 0..100 {
            assert_eq!(g.point(i), i as f64 / 100.0);
        }
        assert_eq!(g.point(0), 0.0);
        assert_eq!(g.point(99), 0.99);
    }

    #[test]
    fn single_point_grid_is_zero() {
        let g = Grid::uniform(1, 1.0).unwrap();
        assert_eq!(g.points(), &[0.0]);
    }

    #[test]
    fn four_point_grid_bound_two() {
        let g = Grid::uniform(4, 2.0).unwrap();
        assert_eq!(g.points(), &[0.0, 0.5, 1.0, 1.5]);
    }

    #[test]
    fn rejects_degenerate_arguments() {
        assert!(Grid::uniform(0, 1.0).is_err());
        assert!(Grid::uniform(10, 0.0).is_err());
        assert!(Grid::uniform(10, -1.0).is_err());
    }

    #[test]
    fn floor_index_examples() {
        let g = Grid::uniform(100, 1.0).unwrap();
        assert_eq!(g.floor_index(0.456).unwrap(), 45);
        assert_eq!(g.floor_index(0.0).unwrap(), 0);
        assert_eq!(g.floor_index(1.0).unwrap(), 99);
        assert_eq!(g.floor_index(7.3).unwrap(), 99);
        assert!(g.floor_index(-0.1).is_err());
    }

    #[test]
    fn ceil_index_boundaries() {
        let g = Grid::uniform(5, 1.0).unwrap(); // 0, 0.2, 0.4, 0.6, 0.8
        assert_eq!(g.ceil_index(0.0), Some(0));
        assert_eq!(g.ceil_index(0.2), Some(1));
        assert_eq!(g.ceil_index(0.21), Some(2));
        assert_eq!(g.ceil_index(0.8), Some(4));
        assert_eq!(g.ceil_index(0.81), None);
        assert_eq!(g.ceil_index(-3.0), Some(0));
    }

    proptest! {
        #[test]
        fn floor_index_is_monotone_and_sandwiches(
            size in 1usize..400,
            vbar in 0.1f64..10.0,
            x in 0.0f64..12.0,
            y in 0.0f64..12.0,
        ) {
            let g = Grid::uniform(size, vbar).unwrap();
            let ix = g.floor_index(x).unwrap();
            let iy = g.floor_index(y).unwrap();
            if x <= y {
                prop_assert!(ix <= iy);
            }
            prop_assert!(g.point(ix) <= x);
            if ix + 1 < size {
                prop_assert!(x < g.point(ix + 1));
            }
        }

        #[test]
        fn points_match_formula_to_one_ulp(size in 1usize..1000, vbar in 1e-3f64..100.0) {
            let g = Grid::uniform(size, vbar).unwrap();
            for i in 0..size {
                let exact = i as f64 * vbar / size as f64;
                // Same expression, so representation must be identical.
                prop_assert_eq!(g.point(i), exact);
            }
            for w in g.points().windows(2) {
                prop_assert!(w[0] < w[1]);
            }
        }
    }
}
