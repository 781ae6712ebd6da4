//! Finite-volume discretisation of `div(a grad(w / P))` with zero flux at both
//! ends of the interval, plus the tridiagonal machinery used to invert it.
//!
//! With `z = w / P` the operator is
//!
//! ```text
//! (A w)_i = (F_{i+1/2} - F_{i-1/2}) / h,   F_{i+1/2} = a_{i+1/2} (z_{i+1} - z_i) / h
//! ```
//!
//! with `F = 0` on the two boundary faces and `a_{i+1/2}` the arithmetic mean of
//! the neighbouring cell values. Fluxes telescope, so `sum_i (A w)_i = 0`, and
//! `A P = 0`.

use crate::error::{Error, Result};
use crate::grid::{Field, SpatialGrid};
use crate::scalar::Scalar;

/// General tridiagonal matrix. `sub[0]` and `sup[n-1]` are unused.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal<T> {
    pub sub: Vec<T>,
    pub diag: Vec<T>,
    pub sup: Vec<T>,
}

impl<T: Scalar> Tridiagonal<T> {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn mul_into(&self, x: &[T], out: &mut [T]) {
        let n = self.len();
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.sub[i] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.sup[i] * x[i + 1];
            }
            out[i] = acc;
        }
    }

    /// LU factorisation without pivoting (Thomas algorithm). `shift` is only
    /// used to label the error if a pivot vanishes.
    pub fn factor(&self, shift: T) -> Result<TridiagonalFactor<T>> {
        let n = self.len();
        let mut inv_pivot = vec![T::zero(); n];
        let mut upper = vec![T::zero(); n];
        let mut prev = T::zero();
        let scale = self
            .diag
            .iter()
            .fold(T::zero(), |m, d| m.max(d.abs()))
            .max(T::min_positive_value());
        for i in 0..n {
            let pivot = if i == 0 {
                self.diag[0]
            } else {
                self.diag[i] - self.sub[i] * prev
            };
            if !(pivot.abs() > T::epsilon() * scale) {
                return Err(Error::Singular { s: shift.as_f64() });
            }
            inv_pivot[i] = T::one() / pivot;
            prev = if i + 1 < n {
                self.sup[i] * inv_pivot[i]
            } else {
                T::zero()
            };
            upper[i] = prev;
        }
        Ok(TridiagonalFactor {
            sub: self.sub.clone(),
            inv_pivot,
            upper,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalFactor<T> {
    sub: Vec<T>,
    inv_pivot: Vec<T>,
    upper: Vec<T>,
}

impl<T: Scalar> TridiagonalFactor<T> {
    /// Overwrites `x` (holding the right-hand side) with the solution.
    pub fn solve_in_place(&self, x: &mut [T]) {
        let n = x.len();
        x[0] *= self.inv_pivot[0];
        for i in 1..n {
            x[i] = (x[i] - self.sub[i] * x[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            x[i] -= self.upper[i] * x[i + 1];
        }
    }

    /// Solves two independent systems in one pass; the two recurrences are
    /// interleaved so their latencies overlap.
    pub fn solve_pair(f: &Self, x: &mut [T], g: &Self, y: &mut [T]) {
        let n = x.len();
        assert!(y.len() == n && f.inv_pivot.len() == n && g.inv_pivot.len() == n);
        x[0] *= f.inv_pivot[0];
        y[0] *= g.inv_pivot[0];
        for i in 1..n {
            x[i] = (x[i] - f.sub[i] * x[i - 1]) * f.inv_pivot[i];
            y[i] = (y[i] - g.sub[i] * y[i - 1]) * g.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            x[i] -= f.upper[i] * x[i + 1];
            y[i] -= g.upper[i] * y[i + 1];
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionOperator<T> {
    n_cells: usize,
    h: T,
    /// `a_{i+1/2} / h^2` for the `n - 1` interior faces.
    face: Vec<T>,
    /// Dispersal target `P`.
    target: Field<T>,
    diffusivity: Field<T>,
    bands: Tridiagonal<T>,
}

impl<T: Scalar> DiffusionOperator<T> {
    pub fn new(a: &Field<T>, p: &Field<T>, grid: &SpatialGrid<T>) -> Result<Self> {
        grid.check(a)?;
        grid.check(p)?;
        for (name, f) in [("a", a), ("P", p)] {
            if let Some((index, &value)) = f.iter().enumerate().find(|(_, v)| !(**v > T::zero())) {
                return Err(Error::Environment {
                    field: name,
                    constraint: "positive",
                    index,
                    value: value.as_f64(),
                });
            }
        }
        let n = grid.n_cells();
        let h = grid.h();
        let inv_h2 = T::one() / (h * h);
        let half = T::lit(0.5);
        let face: Vec<T> = (0..n - 1)
            .map(|i| half * (a[i] + a[i + 1]) * inv_h2)
            .collect();
        let mut sub = vec![T::zero(); n];
        let mut diag = vec![T::zero(); n];
        let mut sup = vec![T::zero(); n];
        for (j, &c) in face.iter().enumerate() {
            // face j sits between cells j and j + 1
            diag[j] -= c / p[j];
            sup[j] = c / p[j + 1];
            diag[j + 1] -= c / p[j + 1];
            sub[j + 1] = c / p[j];
        }
        Ok(Self {
            n_cells: n,
            h,
            face,
            target: p.clone(),
            diffusivity: a.clone(),
            bands: Tridiagonal { sub, diag, sup },
        })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn h(&self) -> T {
        self.h
    }

    pub fn target(&self) -> &Field<T> {
        &self.target
    }

    pub fn diffusivity(&self) -> &Field<T> {
        &self.diffusivity
    }

    pub fn bands(&self) -> &Tridiagonal<T> {
        &self.bands
    }

    fn check(&self, w: &Field<T>) -> Result<()> {
        if w.len() != self.n_cells {
            return Err(Error::LengthMismatch {
                expected: self.n_cells,
                found: w.len(),
            });
        }
        Ok(())
    }

    pub fn apply(&self, w: &Field<T>) -> Result<Field<T>> {
        self.check(w)?;
        let mut out = vec![T::zero(); self.n_cells];
        self.apply_into(w.values(), &mut out);
        Ok(out.into())
    }

    /// Flux-form product; `w` and `out` must have `n_cells` entries.
    pub fn apply_into(&self, w: &[T], out: &mut [T]) {
        let p = self.target.values();
        let mut z_left = w[0] / p[0];
        let mut flux_left = T::zero();
        for i in 0..self.n_cells - 1 {
            let z_right = w[i + 1] / p[i + 1];
            let flux = self.face[i] * (z_right - z_left);
            out[i] = flux - flux_left;
            flux_left = flux;
            z_left = z_right;
        }
        out[self.n_cells - 1] = -flux_left;
    }

    /// Gershgorin bound on the spectral radius.
    pub fn spectral_radius_bound(&self) -> T {
        let b = &self.bands;
        (0..self.n_cells).fold(T::zero(), |m, i| {
            m.max(b.diag[i].abs() + b.sub[i].abs() + b.sup[i].abs())
        })
    }

    /// Factorisation of `s I - A`, reusable across right-hand sides.
    pub fn shifted(&self, s: T) -> Result<TridiagonalFactor<T>> {
        if !(s.is_finite() && s > T::zero()) {
            return Err(Error::Singular { s: s.as_f64() });
        }
        let b = &self.bands;
        Tridiagonal {
            sub: b.sub.iter().map(|&v| -v).collect(),
            diag: b.diag.iter().map(|&v| s - v).collect(),
            sup: b.sup.iter().map(|&v| -v).collect(),
        }
        .factor(s)
    }

    /// Factorisation of `I - dt A`, the backward Euler diffusion step.
    pub fn implicit_euler(&self, dt: T) -> Result<TridiagonalFactor<T>> {
        if !(dt.is_finite() && dt > T::zero()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
        }
        let b = &self.bands;
        Tridiagonal {
            sub: b.sub.iter().map(|&v| -dt * v).collect(),
            diag: b.diag.iter().map(|&v| T::one() - dt * v).collect(),
            sup: b.sup.iter().map(|&v| -dt * v).collect(),
        }
        .factor(T::one() / dt)
    }

    /// Solves `s w - A w = rhs`.
    pub fn solve_shifted(&self, s: T, rhs: &Field<T>) -> Result<Field<T>> {
        self.check(rhs)?;
        let factor = self.shifted(s)?;
        let mut w = rhs.clone().into_vec();
        factor.solve_in_place(&mut w);
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular { s: s.as_f64() });
        }
        Ok(w.into())
    }

    /// `sum_i (A w)_i z_i / P_i`, the discrete weighted inner product `<A w, z>`.
    pub fn weighted_form(&self, w: &Field<T>, z: &Field<T>) -> Result<T> {
        self.check(z)?;
        let aw = self.apply(w)?;
        Ok(aw
            .iter()
            .zip(z.iter())
            .zip(self.target.iter())
            .map(|((&x, &y), &p)| x * y / p)
            .sum())
    }
}
