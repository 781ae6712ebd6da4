//! Uniform cell-centred grid on `(0, L)` and the fields sampled on it.
//!
//! Every field lives at cell centres `x_i = (i + 1/2) h`, and integrals use the
//! midpoint rule `h * sum(f_i)`. That is exactly the control-volume sum of the
//! finite-volume operators, so discrete conservation identities carry over to
//! integrals without extra quadrature error.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_CELLS: usize = 800;
pub const MIN_CELLS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid<T> {
    length: T,
    n_cells: usize,
    h: T,
    centers: Vec<T>,
}

impl<T: Scalar> SpatialGrid<T> {
    pub fn new(length: T, n_cells: usize) -> Result<Self> {
        if !(length.is_finite() && length > T::zero()) {
            return Err(Error::InvalidGrid(format!(
                "domain length must be positive and finite, got {length}"
            )));
        }
        if n_cells < MIN_CELLS {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_CELLS} cells, got {n_cells}"
            )));
        }
        let h = length / T::from_usize_lossy(n_cells);
        let half = T::lit(0.5);
        let centers = (0..n_cells)
            .map(|i| (T::from_usize_lossy(i) + half) * h)
            .collect();
        Ok(Self {
            length,
            n_cells,
            h,
            centers,
        })
    }

    pub fn length(&self) -> T {
        self.length
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    /// Cell width.
    pub fn h(&self) -> T {
        self.h
    }

    pub fn centers(&self) -> &[T] {
        &self.centers
    }

    pub fn check(&self, f: &Field<T>) -> Result<()> {
        if f.len() != self.n_cells {
            return Err(Error::LengthMismatch {
                expected: self.n_cells,
                found: f.len(),
            });
        }
        Ok(())
    }

    /// Midpoint quadrature `h * sum(f)`.
    pub fn integrate(&self, f: &Field<T>) -> Result<T> {
        self.check(f)?;
        Ok(self.h * f.sum())
    }

    pub fn average(&self, f: &Field<T>) -> Result<T> {
        Ok(self.integrate(f)? / self.length)
    }

    /// Field of constant value on this grid.
    pub fn constant(&self, value: T) -> Field<T> {
        Field::constant(self.n_cells, value)
    }

    /// Samples a closure at the cell centres.
    pub fn sample_fn(&self, f: impl Fn(T) -> T) -> Field<T> {
        Field::from(self.centers.iter().map(|&x| f(x)).collect::<Vec<_>>())
    }
}

/// Values at cell centres.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Field<T>(Vec<T>);

impl<T: Scalar> Field<T> {
    pub fn constant(n: usize, value: T) -> Self {
        Self(vec![value; n])
    }

    pub fn zeros(n: usize) -> Self {
        Self::constant(n, T::zero())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[T] {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<T> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.0.iter()
    }

    pub fn sum(&self) -> T {
        self.0.iter().copied().sum()
    }

    pub fn max(&self) -> T {
        self.0.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn min(&self) -> T {
        self.0.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn norm_inf(&self) -> T {
        self.0.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self(self.0.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination of two fields of equal length.
    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(Self(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn scaled(&self, c: T) -> Self {
        self.map(|v| v * c)
    }

    /// `max_i |self_i - other_i|`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        Ok(self.zip_map(other, |a, b| a - b)?.norm_inf())
    }

    pub fn all(&self, pred: impl Fn(T) -> bool) -> bool {
        self.0.iter().all(|&v| pred(v))
    }

    /// Converts to another scalar type.
    pub fn cast<U: Scalar>(&self) -> Field<U> {
        Field(
            self.0
                .iter()
                .map(|v| U::from_f64(v.as_f64()).unwrap_or_else(U::nan))
                .collect(),
        )
    }
}

impl<T> From<Vec<T>> for Field<T> {
    fn from(v: Vec<T>) -> Self {
        Self(v)
    }
}

impl<T> Index<usize> for Field<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

impl<T> IndexMut<usize> for Field<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.0[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn grid(n: usize) -> SpatialGrid<f64> {
        SpatialGrid::new(4.0, n).unwrap()
    }

    #[test]
    fn centers_are_cell_midpoints() {
        let g = grid(4);
        assert_eq!(g.h(), 1.0);
        assert_eq!(g.centers(), &[0.5, 1.5, 2.5, 3.5]);
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(SpatialGrid::new(4.0, 2).is_err());
        assert!(SpatialGrid::new(0.0, 10).is_err());
        assert!(SpatialGrid::new(f64::NAN, 10).is_err());
    }

    #[test]
    fn integrate_constant() {
        for n in [3, 7, 400] {
            let g = grid(n);
            assert_abs_diff_eq!(g.integrate(&g.constant(1.0)).unwrap(), 4.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn integrate_full_cosine_periods() {
        let g = grid(400);
        let f = g.sample_fn(|x| (PI * x).cos());
        assert_abs_diff_eq!(g.integrate(&f).unwrap(), 0.0, epsilon = 1e-10);
        let k = g.sample_fn(|x| 2.0 + (PI * x).cos());
        assert_abs_diff_eq!(g.integrate(&k).unwrap(), 8.0, epsilon = 1e-6);
        assert_abs_diff_eq!(g.average(&k).unwrap(), 2.0, epsilon = 1e-6);
    }

    #[test]
    fn average_of_constant() {
        let g = grid(800);
        assert_abs_diff_eq!(g.average(&g.constant(2.1)).unwrap(), 2.1, epsilon = 1e-12);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let g = grid(10);
        let f = Field::constant(9, 1.0);
        assert_eq!(
            g.integrate(&f),
            Err(Error::LengthMismatch {
                expected: 10,
                found: 9
            })
        );
    }

    #[test]
    fn refinement_error_is_second_order() {
        // Non-periodic profile so the midpoint rule is not exact.
        let exact = {
            // integral of exp(-(x-1.3)^2) over (0,4) via a fine Simpson rule
            let n = 200_000;
            let h = 4.0 / n as f64;
            let f = |x: f64| (-(x - 1.3) * (x - 1.3)).exp();
            let mut s = f(0.0) + f(4.0);
            for i in 1..n {
                s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            s * h / 3.0
        };
        let err = |n| {
            let g = grid(n);
            (g.integrate(&g.sample_fn(|x| (-(x - 1.3) * (x - 1.3)).exp()))
                .unwrap()
                - exact)
                .abs()
        };
        let ratio = err(100) / err(200);
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn works_in_single_precision() {
        let g = SpatialGrid::<f32>::new(4.0, 400).unwrap();
        let k = g.sample_fn(|x| 2.0 + (std::f32::consts::PI * x).cos());
        assert!((g.average(&k).unwrap() - 2.0).abs() < 1e-4);
    }

    proptest! {
        #[test]
        fn integrate_is_linear(
            f in prop::collection::vec(-10.0f64..10.0, 16),
            g2 in prop::collection::vec(-10.0f64..10.0, 16),
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
        ) {
            let g = grid(16);
            let f = Field::from(f);
            let h = Field::from(g2);
            let lhs = g.integrate(&f.zip_map(&h, |x, y| a * x + b * y).unwrap()).unwrap();
            let rhs = a * g.integrate(&f).unwrap() + b * g.integrate(&h).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }

        #[test]
        fn integrate_preserves_sign(f in prop::collection::vec(0.0f64..10.0, 3..50)) {
            let g = grid(f.len());
            prop_assert!(g.integrate(&Field::from(f)).unwrap() >= 0.0);
        }
    }
}
