//! Principal eigenpair of `L psi = div(d grad(psi/R)) + V psi` with zero flux.
//!
//! `L` is self-adjoint for `<f, g> = sum f g / R`. With `phi = psi / sqrt(R)` it
//! becomes the symmetric tridiagonal matrix
//! `S = R^{-1/2} G R^{-1/2} + diag(V)`, where `G = A R` is the (symmetric)
//! stiffness matrix, so the principal eigenvalue is the largest eigenvalue of
//! `S` and the sup of the Rayleigh quotient over all trial fields.

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::operators::{DiffusionOperator, Tridiagonal};
use crate::scalar::Scalar;

/// `|sigma1|` below this counts as neutral.
pub const NEUTRAL_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITERATIONS: usize = 100_000;
pub const DEFAULT_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EigenMethod {
    /// Power iteration on `S + s I`, `s = max|V| + ` spectral radius bound of
    /// the diffusion stencil. Converges slowly on fine grids.
    Power,
    /// Power iteration on `(mu I - S)^{-1}` with `mu = max V + 1 > sigma1`.
    #[default]
    ShiftInvert,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    pub method: EigenMethod,
    pub max_iterations: usize,
    /// Stop once the Rayleigh quotient changes by less than
    /// `rel_tol * max(1, |sigma|)` between iterations.
    pub rel_tol: f64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            method: EigenMethod::default(),
            max_iterations: DEFAULT_MAX_ITERATIONS,
            rel_tol: DEFAULT_REL_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult<T> {
    pub sigma1: T,
    /// Positive, normalised so that `∫ psi^2 / R dx = 1`.
    pub psi: Field<T>,
    pub iterations: usize,
    /// `|S phi - sigma1 phi|_inf` for the unit symmetrised vector.
    pub residual: T,
}

impl<T: Scalar> EigenResult<T> {
    pub fn is_neutral(&self) -> bool {
        self.sigma1.abs() < T::lit(NEUTRAL_TOL)
    }
}

fn symmetrized<T: Scalar>(op: &DiffusionOperator<T>, potential: &Field<T>) -> Tridiagonal<T> {
    let b = op.bands();
    let r = op.target();
    let n = op.n_cells();
    let mut off = vec![T::zero(); n];
    for i in 0..n - 1 {
        off[i] = b.sup[i] * (r[i + 1] / r[i]).sqrt();
    }
    let mut sub = vec![T::zero(); n];
    sub[1..n].copy_from_slice(&off[..n - 1]);
    Tridiagonal {
        sub,
        diag: (0..n).map(|i| b.diag[i] + potential[i]).collect(),
        sup: off,
    }
}

fn normalize<T: Scalar>(x: &mut [T]) -> T {
    let norm = x.iter().map(|&v| v * v).sum::<T>().sqrt();
    for v in x.iter_mut() {
        *v /= norm;
    }
    norm
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn principal_eigen<T: Scalar>(
    op: &DiffusionOperator<T>,
    potential: &Field<T>,
) -> Result<EigenResult<T>> {
    principal_eigen_with(op, potential, &EigenOptions::default())
}

/// Largest eigenvalue of `A + diag(potential)` with its positive eigenfunction.
/// The weight `R` is the operator's dispersal target.
pub fn principal_eigen_with<T: Scalar>(
    op: &DiffusionOperator<T>,
    potential: &Field<T>,
    opts: &EigenOptions,
) -> Result<EigenResult<T>> {
    let n = op.n_cells();
    if potential.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            found: potential.len(),
        });
    }
    if !potential.all(|v| v.is_finite()) {
        return Err(Error::InvalidParameter("potential must be finite".into()));
    }
    let s = symmetrized(op, potential);
    let r = op.target();
    // Start from psi = R, i.e. phi = sqrt(R): positive and exact when V is constant.
    let mut phi: Vec<T> = r.iter().map(|v| v.sqrt()).collect();
    normalize(&mut phi);
    let mut sphi = vec![T::zero(); n];
    s.mul_into(&phi, &mut sphi);
    let mut sigma = dot(&phi, &sphi);
    let tol = T::lit(opts.rel_tol);

    let (shift, factor) = match opts.method {
        EigenMethod::Power => (
            potential.norm_inf() + op.spectral_radius_bound(),
            None,
        ),
        EigenMethod::ShiftInvert => {
            let mu = potential.max() + T::one();
            let m = Tridiagonal {
                sub: s.sub.iter().map(|&v| -v).collect(),
                diag: s.diag.iter().map(|&v| mu - v).collect(),
                sup: s.sup.iter().map(|&v| -v).collect(),
            };
            (mu, Some(m.factor(mu)?))
        }
    };

    let mut next = vec![T::zero(); n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iterations {
        iterations += 1;
        match &factor {
            None => {
                for i in 0..n {
                    next[i] = sphi[i] + shift * phi[i];
                }
            }
            Some(f) => {
                next.copy_from_slice(&phi);
                f.solve_in_place(&mut next);
            }
        }
        normalize(&mut next);
        std::mem::swap(&mut phi, &mut next);
        s.mul_into(&phi, &mut sphi);
        let updated = dot(&phi, &sphi);
        let change = (updated - sigma).abs();
        sigma = updated;
        if !sigma.is_finite() {
            break;
        }
        if change <= tol * sigma.abs().max(T::one()) {
            converged = true;
            break;
        }
    }
    let residual = (0..n).fold(T::zero(), |m, i| m.max((sphi[i] - sigma * phi[i]).abs()));
    if !converged {
        return Err(Error::NoConvergence {
            what: "principal eigenvalue iteration",
            iterations,
            residual: residual.as_f64(),
        });
    }

    // Back to psi = sqrt(R) phi, normalised by h * sum(phi^2) = 1.
    let sign = if phi.iter().copied().sum::<T>() < T::zero() {
        -T::one()
    } else {
        T::one()
    };
    let scale = sign / (op.h() * dot(&phi, &phi)).sqrt();
    let psi: Field<T> = (0..n).map(|i| phi[i] * r[i].sqrt() * scale).collect::<Vec<_>>().into();
    Ok(EigenResult {
        sigma1: sigma,
        psi,
        iterations,
        residual,
    })
}

/// Rayleigh quotient of `trial`; never exceeds the principal eigenvalue.
pub fn rayleigh_lower_bound<T: Scalar>(
    op: &DiffusionOperator<T>,
    potential: &Field<T>,
    trial: &Field<T>,
) -> Result<T> {
    if potential.len() != trial.len() {
        return Err(Error::LengthMismatch {
            expected: trial.len(),
            found: potential.len(),
        });
    }
    let r = op.target();
    let mass: T = trial.iter().zip(r.iter()).map(|(&w, &p)| w * w / p).sum();
    if !(mass > T::zero()) {
        return Err(Error::InvalidParameter("trial field must be nonzero".into()));
    }
    let stiffness = op.weighted_form(trial, trial)?;
    let reaction: T = (0..trial.len())
        .map(|i| potential[i] * trial[i] * trial[i] / r[i])
        .sum();
    Ok((stiffness + reaction) / mass)
}

/// Largest `x` in `[lo, hi]` with `f(x) > 0`, for `f` decreasing in `x`, by
/// bisection to width `tol`. `None` when `f(lo) <= 0`; `hi` when `f(hi) > 0`.
pub(crate) fn decreasing_root<T: Scalar>(
    mut lo: T,
    mut hi: T,
    tol: T,
    mut f: impl FnMut(T) -> Result<T>,
) -> Result<Option<T>> {
    if f(lo)? <= T::zero() {
        return Ok(None);
    }
    if f(hi)? > T::zero() {
        return Ok(Some(hi));
    }
    let two = T::lit(2.0);
    while hi - lo > tol {
        let mid = (lo + hi) / two;
        if f(mid)? > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some((lo + hi) / two))
}
