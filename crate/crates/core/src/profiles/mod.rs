//! Spatial profiles `K, r, P, Q, a, b`: expression sources, sampling and
//! positivity checks.

mod expr;

pub use expr::{BinOp, EvalError, Expression, Func, ParseError};

use crate::error::{Error, Result};
use crate::grid::{Field, SpatialGrid};
use crate::scalar::Scalar;

/// Samples an expression at the cell centres.
pub fn sample<T: Scalar>(e: &Expression, grid: &SpatialGrid<T>) -> Result<Field<T>> {
    grid.centers()
        .iter()
        .map(|&x| e.eval(x).map_err(Error::from))
        .collect::<Result<Vec<_>>>()
        .map(Field::from)
}

/// Expression sources for the six environment fields.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProfileSet {
    pub k: String,
    pub r: String,
    pub p: String,
    pub q: String,
    pub a: String,
    pub b: String,
}

impl ProfileSet {
    pub fn new(k: &str, r: &str, p: &str, q: &str, a: &str, b: &str) -> Self {
        Self {
            k: k.into(),
            r: r.into(),
            p: p.into(),
            q: q.into(),
            a: a.into(),
            b: b.into(),
        }
    }

    /// Parses, samples and validates all six profiles.
    pub fn build<T: Scalar>(&self, grid: &SpatialGrid<T>) -> Result<EnvironmentProfile<T>> {
        let f = |src: &str| sample(&Expression::parse(src)?, grid);
        EnvironmentProfile::new(
            grid.clone(),
            f(&self.k)?,
            f(&self.r)?,
            f(&self.p)?,
            f(&self.q)?,
            f(&self.a)?,
            f(&self.b)?,
        )
    }
}

/// Carrying capacity driven diffusion against a regularly diffusing
/// competitor: `P = K = 2 + cos(pi x)`, `Q = a = b = 1`, `r = 1.1`.
pub fn example_cosine() -> ProfileSet {
    ProfileSet::new("2+cos(pi*x)", "1.1", "2+cos(pi*x)", "1", "1", "1")
}

pub const GAUSSIAN_K: &str = "10*exp(-12.5*pi^2*(x-2)^2) - exp(-50*pi^2*(x-2)^2) + 1";

/// Same setting with a sharply peaked Gaussian carrying capacity.
pub fn example_gaussian() -> ProfileSet {
    ProfileSet::new(GAUSSIAN_K, "1.1", GAUSSIAN_K, "1", "1", "1")
}

/// Ideal free pair `P + Q = K = 2 + cos(pi x)`.
pub fn example_ideal_free_pair() -> ProfileSet {
    ProfileSet::new(
        "2+cos(pi*x)",
        "1.1",
        "1.1+0.5*cos(pi*x)",
        "0.9+0.5*cos(pi*x)",
        "1",
        "1",
    )
}

pub const PEAKED_K: &str = "10*exp(-12.5*pi^2*(x-2)^2) + exp(-50*pi^2*(x-2)^2) + 3";
pub const PEAKED_P: &str = "1 + 10*exp(-12.5*pi^2*(x-2)^2)";
pub const PEAKED_Q: &str = "exp(-50*pi^2*(x-2)^2) + 2";

/// Peaked ideal free pair `P + Q = K` used for the harvesting-rate heatmap.
pub fn example_peaked_pair() -> ProfileSet {
    ProfileSet::new(PEAKED_K, "1.1", PEAKED_P, PEAKED_Q, "1", "1")
}

/// Same `K` and `Q` as [`example_peaked_pair`] but `P = K`.
pub fn example_peaked_proportional() -> ProfileSet {
    ProfileSet::new(PEAKED_K, "1.1", PEAKED_K, PEAKED_Q, "1", "1")
}

/// Sampled and validated environment: every field positive except `r`,
/// which is nonnegative and positive somewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentProfile<T> {
    grid: SpatialGrid<T>,
    /// Carrying capacity.
    pub k: Field<T>,
    /// Intrinsic growth rate.
    pub r: Field<T>,
    /// Dispersal target of `u`.
    pub p: Field<T>,
    /// Dispersal target of `v`.
    pub q: Field<T>,
    /// Diffusivity of `u`.
    pub a: Field<T>,
    /// Diffusivity of `v`.
    pub b: Field<T>,
}

impl<T: Scalar> EnvironmentProfile<T> {
    pub fn new(
        grid: SpatialGrid<T>,
        k: Field<T>,
        r: Field<T>,
        p: Field<T>,
        q: Field<T>,
        a: Field<T>,
        b: Field<T>,
    ) -> Result<Self> {
        Self {
            grid,
            k,
            r,
            p,
            q,
            a,
            b,
        }
        .validate()
    }

    pub fn validate(self) -> Result<Self> {
        for f in [&self.k, &self.r, &self.p, &self.q, &self.a, &self.b] {
            self.grid.check(f)?;
        }
        let positive = [
            ("K", &self.k),
            ("P", &self.p),
            ("Q", &self.q),
            ("a", &self.a),
            ("b", &self.b),
        ];
        for (name, f) in positive {
            if let Some((index, &value)) = f
                .iter()
                .enumerate()
                .find(|(_, v)| !(v.is_finite() && **v > T::zero()))
            {
                return Err(Error::Environment {
                    field: name,
                    constraint: "positive",
                    index,
                    value: value.as_f64(),
                });
            }
        }
        if let Some((index, &value)) = self
            .r
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= T::zero()))
        {
            return Err(Error::Environment {
                field: "r",
                constraint: "nonnegative",
                index,
                value: value.as_f64(),
            });
        }
        if self.r.all(|v| v == T::zero()) {
            return Err(Error::GrowthRateVanishes);
        }
        Ok(self)
    }

    pub fn grid(&self) -> &SpatialGrid<T> {
        &self.grid
    }

    /// Exchanges the roles of the two species: `(P, a) <-> (Q, b)`.
    pub fn swapped(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            k: self.k.clone(),
            r: self.r.clone(),
            p: self.q.clone(),
            q: self.p.clone(),
            a: self.b.clone(),
            b: self.a.clone(),
        }
    }

    pub fn integrate(&self, f: &Field<T>) -> Result<T> {
        self.grid.integrate(f)
    }

    pub fn average(&self, f: &Field<T>) -> Result<T> {
        self.grid.average(f)
    }

    /// `MSY = ∫ r K / 4`.
    pub fn msy(&self) -> T {
        let rk = self.r.zip_map(&self.k, |r, k| r * k).expect("validated");
        T::lit(0.25) * self.grid.h() * rk.sum()
    }
}
