//! Time integration of the harvested competition system
//!
//! ```text
//! u_t = div(a grad(u/P)) + r u (1 - (u+v)/K) - alpha r u
//! v_t = div(b grad(v/Q)) + r v (1 - (u+v)/K) - beta r v
//! ```
//!
//! and the single-species stationary problems.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{Field, SpatialGrid};
use crate::operators::{DiffusionOperator, TridiagonalFactor};
use crate::profiles::EnvironmentProfile;
use crate::scalar::Scalar;

pub const DEFAULT_DT: f64 = 0.05;
pub const DEFAULT_T_FINAL: f64 = 2000.0;
pub const DEFAULT_STEADY_TOL: f64 = 1e-9;
pub const DEFAULT_EXTINCTION_FRACTION: f64 = 1e-2;
pub const DEFAULT_INITIAL_DENSITY: f64 = 2.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarvestRates<T> {
    pub alpha: T,
    pub beta: T,
}

impl<T: Scalar> HarvestRates<T> {
    /// Efforts must be finite and nonnegative; values `>= 1` are allowed.
    pub fn new(alpha: T, beta: T) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta", beta)] {
            if !(v.is_finite() && v >= T::zero()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        Ok(Self { alpha, beta })
    }

    pub fn swapped(self) -> Self {
        Self {
            alpha: self.beta,
            beta: self.alpha,
        }
    }
}

/// Harvesting folded into growth rates and carrying capacities: the system
/// without harvesting, `u` with capacity `c K2` and rate `r1`, `v` with
/// capacity `K2` and rate `r2`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedParams<T> {
    pub c: T,
    pub r1: T,
    pub r2: T,
    pub k1: Field<T>,
    pub k2: Field<T>,
}

pub fn transform<T: Scalar>(
    rates: HarvestRates<T>,
    env: &EnvironmentProfile<T>,
) -> Result<TransformedParams<T>> {
    if !(rates.beta < T::one()) {
        return Err(Error::TransformUndefined {
            beta: rates.beta.as_f64(),
        });
    }
    let r1 = T::one() - rates.alpha;
    let r2 = T::one() - rates.beta;
    Ok(TransformedParams {
        c: r1 / r2,
        r1,
        r2,
        k1: env.k.scaled(r1),
        k2: env.k.scaled(r2),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationState<T> {
    pub u: Field<T>,
    pub v: Field<T>,
    pub t: T,
}

impl<T: Scalar> PopulationState<T> {
    pub fn new(u: Field<T>, v: Field<T>) -> Result<Self> {
        if u.len() != v.len() {
            return Err(Error::LengthMismatch {
                expected: u.len(),
                found: v.len(),
            });
        }
        for (name, f) in [("u0", &u), ("v0", &v)] {
            if let Some((index, &value)) =
                f.iter().enumerate().find(|(_, x)| !(x.is_finite() && **x >= T::zero()))
            {
                return Err(Error::Environment {
                    field: name,
                    constraint: "nonnegative",
                    index,
                    value: value.as_f64(),
                });
            }
        }
        Ok(Self { u, v, t: T::zero() })
    }

    pub fn constant(grid: &SpatialGrid<T>, u0: T, v0: T) -> Result<Self> {
        Self::new(grid.constant(u0), grid.constant(v0))
    }

    pub fn swapped(&self) -> Self {
        Self {
            u: self.v.clone(),
            v: self.u.clone(),
            t: self.t,
        }
    }

    /// `max(|u - u'|_inf, |v - v'|_inf)`.
    pub fn distance(&self, other: &Self) -> Result<T> {
        Ok(self
            .u
            .max_abs_diff(&other.u)?
            .max(self.v.max_abs_diff(&other.v)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationConfig<T> {
    pub dt: T,
    /// Hard cap on simulated time.
    pub t_final: T,
    /// Steady state once `|state_{n+1} - state_n|_inf / dt` drops below this.
    pub steady_tol: T,
    /// A species is extinct when its average density falls below this
    /// fraction of the average carrying capacity.
    pub extinction_fraction: T,
    /// Step cap for the single-species stationary solver.
    pub max_semitrivial_steps: usize,
}

impl<T: Scalar> Default for SimulationConfig<T> {
    fn default() -> Self {
        Self {
            dt: T::lit(DEFAULT_DT),
            t_final: T::lit(DEFAULT_T_FINAL),
            steady_tol: T::lit(DEFAULT_STEADY_TOL),
            extinction_fraction: T::lit(DEFAULT_EXTINCTION_FRACTION),
            max_semitrivial_steps: 1_000_000,
        }
    }
}

impl<T: Scalar> SimulationConfig<T> {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("dt", self.dt),
            ("t_final", self.t_final),
            ("steady_tol", self.steady_tol),
            ("extinction_fraction", self.extinction_fraction),
        ] {
            if !(v.is_finite() && v > T::zero()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.max_semitrivial_steps == 0 {
            return Err(Error::InvalidParameter(
                "max_semitrivial_steps must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Environment together with the two dispersal operators built from it.
#[derive(Debug, Clone)]
pub struct CompetitionModel<T> {
    env: EnvironmentProfile<T>,
    du: DiffusionOperator<T>,
    dv: DiffusionOperator<T>,
}

impl<T: Scalar> CompetitionModel<T> {
    pub fn new(env: EnvironmentProfile<T>) -> Result<Self> {
        let du = DiffusionOperator::new(&env.a, &env.p, env.grid())?;
        let dv = DiffusionOperator::new(&env.b, &env.q, env.grid())?;
        Ok(Self { env, du, dv })
    }

    pub fn env(&self) -> &EnvironmentProfile<T> {
        &self.env
    }

    pub fn grid(&self) -> &SpatialGrid<T> {
        self.env.grid()
    }

    /// Operator `div(a grad(./P))` acting on `u`.
    pub fn du(&self) -> &DiffusionOperator<T> {
        &self.du
    }

    /// Operator `div(b grad(./Q))` acting on `v`.
    pub fn dv(&self) -> &DiffusionOperator<T> {
        &self.dv
    }

    pub fn operator(&self, branch: Branch) -> &DiffusionOperator<T> {
        match branch {
            Branch::U => &self.du,
            Branch::V => &self.dv,
        }
    }

    pub fn swapped(&self) -> Self {
        Self {
            env: self.env.swapped(),
            du: self.dv.clone(),
            dv: self.du.clone(),
        }
    }

    pub fn stepper(&self, rates: HarvestRates<T>, dt: T) -> Result<Stepper<T>> {
        Stepper::new(self, rates, dt)
    }

    /// One splitting step; see [`Stepper::step`].
    pub fn step(
        &self,
        state: &PopulationState<T>,
        rates: HarvestRates<T>,
        dt: T,
    ) -> Result<PopulationState<T>> {
        let mut next = state.clone();
        self.stepper(rates, dt)?.step(&mut next)?;
        Ok(next)
    }

    /// Integrates from `initial` until `cfg.t_final`, stopping early at a
    /// steady state.
    pub fn run_to_time(
        &self,
        initial: PopulationState<T>,
        rates: HarvestRates<T>,
        cfg: &SimulationConfig<T>,
    ) -> Result<SimulationRun<T>> {
        cfg.validate()?;
        self.grid().check(&initial.u)?;
        self.grid().check(&initial.v)?;
        let mut stepper = self.stepper(rates, cfg.dt)?;
        let mut state = initial;
        let mut steps = 0usize;
        let mut rate = T::infinity();
        let mut steady = false;
        // Half a step of slack so that t_final is reached despite rounding.
        let stop = cfg.t_final - T::lit(0.5) * cfg.dt;
        while state.t < stop {
            rate = stepper.step(&mut state)? / cfg.dt;
            steps += 1;
            if rate < cfg.steady_tol {
                steady = true;
                break;
            }
        }
        Ok(SimulationRun {
            state,
            steady,
            steps,
            rate_of_change: rate,
            clamped_mass: stepper.clamped_mass * self.grid().h(),
        })
    }
}

/// Result of [`CompetitionModel::run_to_time`].
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationRun<T> {
    pub state: PopulationState<T>,
    /// True if the steady-state criterion fired before `t_final`.
    pub steady: bool,
    pub steps: usize,
    /// `|Δstate|_inf / dt` of the last step.
    pub rate_of_change: T,
    /// Total density removed by clamping negative reaction updates (integrated).
    pub clamped_mass: T,
}

/// Splitting integrator with the implicit diffusion factorisations cached for
/// a fixed `dt`.
pub struct Stepper<T> {
    dt: T,
    factor_u: TridiagonalFactor<T>,
    factor_v: TridiagonalFactor<T>,
    /// `dt * r`.
    rdt: Vec<T>,
    inv_k: Vec<T>,
    rates: HarvestRates<T>,
    clamped_mass: T,
    prev_u: Vec<T>,
    prev_v: Vec<T>,
}

impl<T: Scalar> Stepper<T> {
    fn new(model: &CompetitionModel<T>, rates: HarvestRates<T>, dt: T) -> Result<Self> {
        if !(dt.is_finite() && dt > T::zero()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
        }
        let env = model.env();
        Ok(Self {
            dt,
            factor_u: model.du.implicit_euler(dt)?,
            factor_v: model.dv.implicit_euler(dt)?,
            rdt: env.r.iter().map(|&r| r * dt).collect(),
            inv_k: env.k.iter().map(|&k| T::one() / k).collect(),
            rates: HarvestRates::new(rates.alpha, rates.beta)?,
            clamped_mass: T::zero(),
            prev_u: vec![T::zero(); env.k.len()],
            prev_v: vec![T::zero(); env.k.len()],
        })
    }

    /// Advances `state` by `dt`: implicit diffusion `(I - dt A) w = u`, then
    /// the explicit reaction update `u <- u (1 + dt r (1 - (u+v)/K - alpha))`
    /// clamped at zero. Returns `|Δstate|_inf`.
    pub fn step(&mut self, state: &mut PopulationState<T>) -> Result<T> {
        let u = state.u.values_mut();
        let v = state.v.values_mut();
        self.prev_u.copy_from_slice(u);
        self.prev_v.copy_from_slice(v);
        TridiagonalFactor::solve_pair(&self.factor_u, u, &self.factor_v, v);
        let one = T::one();
        let (alpha, beta) = (self.rates.alpha, self.rates.beta);
        let mut change = T::zero();
        let mut clamped = T::zero();
        for i in 0..u.len() {
            let (ui, vi) = (u[i], v[i]);
            let free = one - (ui + vi) * self.inv_k[i];
            let mut un = ui * (one + self.rdt[i] * (free - alpha));
            let mut vn = vi * (one + self.rdt[i] * (free - beta));
            if !(un.is_finite() && vn.is_finite()) {
                return Err(Error::UnstableStep {
                    dt: self.dt.as_f64(),
                    t: state.t.as_f64(),
                });
            }
            if un < T::zero() {
                clamped -= un;
                un = T::zero();
            }
            if vn < T::zero() {
                clamped -= vn;
                vn = T::zero();
            }
            u[i] = un;
            v[i] = vn;
            change = change.max((un - self.prev_u[i]).abs().max((vn - self.prev_v[i]).abs()));
        }
        self.clamped_mass += clamped;
        state.t += self.dt;
        Ok(change)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    /// `(u*, 0)`: `u` alone, dispersing with `(a, P)`.
    U,
    /// `(0, v*)`: `v` alone, dispersing with `(b, Q)`.
    V,
}

impl Branch {
    pub fn dispersal_target<'a, T: Scalar>(&self, env: &'a EnvironmentProfile<T>) -> &'a Field<T> {
        match self {
            Branch::U => &env.p,
            Branch::V => &env.q,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemiTrivial<T> {
    pub field: Field<T>,
    /// `|A w + r_scale r w (1 - w / K_scale)|_inf` at the returned field.
    pub residual: T,
    pub steps: usize,
}

/// Stationary residual `A w + r_scale r w (1 - w / K_scale)`.
pub fn stationary_residual<T: Scalar>(
    op: &DiffusionOperator<T>,
    r: &Field<T>,
    r_scale: T,
    k_scale: &Field<T>,
    w: &Field<T>,
) -> Result<Field<T>> {
    let mut out = op.apply(w)?;
    for i in 0..out.len() {
        out[i] += r_scale * r[i] * w[i] * (T::one() - w[i] / k_scale[i]);
    }
    Ok(out)
}

/// Positive solution of `div(d grad(w/R)) + r_scale r w (1 - w/K_scale) = 0`
/// with zero flux, by time-marching from `w = K_scale`.
///
/// The march is implicit in diffusion and explicit in the reaction,
/// `(I - dt A) w_{n+1} = w_n + dt f(w_n)`, whose fixed points are exactly the
/// discrete stationary solutions. Stops when the stationary residual drops
/// below `cfg.steady_tol`.
pub fn solve_semitrivial<T: Scalar>(
    model: &CompetitionModel<T>,
    branch: Branch,
    r_scale: T,
    k_scale: &Field<T>,
    cfg: &SimulationConfig<T>,
) -> Result<SemiTrivial<T>> {
    cfg.validate()?;
    let env = model.env();
    env.grid().check(k_scale)?;
    if !(r_scale.is_finite() && r_scale > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "r_scale must be positive, got {r_scale}"
        )));
    }
    if let Some((index, &value)) = k_scale.iter().enumerate().find(|(_, k)| !(**k > T::zero())) {
        return Err(Error::Environment {
            field: "K_scale",
            constraint: "positive",
            index,
            value: value.as_f64(),
        });
    }
    let op = model.operator(branch);
    let dt = cfg.dt;
    let factor = op.shifted(T::one() / dt)?;
    let s = T::one() / dt;
    let growth: Vec<T> = env.r.iter().map(|&r| r_scale * r).collect();
    let mut w = k_scale.clone();
    let mut scratch = vec![T::zero(); w.len()];
    let check_every = 20;
    for step in 0..=cfg.max_semitrivial_steps {
        if step % check_every == 0 {
            op.apply_into(w.values(), &mut scratch);
            let mut residual = T::zero();
            for i in 0..w.len() {
                let res = scratch[i] + growth[i] * w[i] * (T::one() - w[i] / k_scale[i]);
                residual = residual.max(res.abs());
            }
            if !residual.is_finite() {
                return Err(Error::UnstableStep {
                    dt: dt.as_f64(),
                    t: (dt * T::from_usize_lossy(step)).as_f64(),
                });
            }
            if residual < cfg.steady_tol {
                return Ok(SemiTrivial {
                    field: w,
                    residual,
                    steps: step,
                });
            }
            if step == cfg.max_semitrivial_steps {
                return Err(Error::NoConvergence {
                    what: "semi-trivial solver",
                    iterations: step,
                    residual: residual.as_f64(),
                });
            }
        }
        // Right-hand side scaled by s = 1/dt to match the factor of (sI - A).
        let values = w.values_mut();
        for i in 0..values.len() {
            let x = values[i];
            values[i] = s * x + growth[i] * x * (T::one() - x / k_scale[i]);
        }
        factor.solve_in_place(values);
        for x in values.iter_mut() {
            if *x < T::zero() {
                *x = T::zero();
            }
        }
    }
    unreachable!("loop returns at the step cap")
}

/// Smooth, strictly positive random field: a constant level plus a few
/// cosine modes, with amplitudes bounded so the result stays above 10% of the
/// level.
pub fn random_profile<T: Scalar>(grid: &SpatialGrid<T>, rng: &mut impl Rng, level: f64) -> Field<T> {
    let modes: Vec<(f64, f64, f64)> = (1..=4)
        .map(|k| {
            (
                k as f64,
                rng.gen_range(-0.225..0.225) * level,
                rng.gen_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    let l = grid.length().as_f64();
    grid.sample_fn(|x| {
        let x = x.as_f64();
        let v = level
            + modes
                .iter()
                .map(|&(k, amp, phase)| amp * (k * std::f64::consts::PI * x / l + phase).cos())
                .sum::<f64>();
        T::lit(v)
    })
}

/// Randomised positive initial state. Level of each species drawn from
/// `[0.2, 2] * mean(K)`; deterministic in `seed`.
pub fn random_initial_state<T: Scalar>(env: &EnvironmentProfile<T>, seed: u64) -> PopulationState<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mean_k = env.average(&env.k).expect("validated").as_f64();
    let lu = rng.gen_range(0.2..2.0) * mean_k;
    let lv = rng.gen_range(0.2..2.0) * mean_k;
    let u = random_profile(env.grid(), &mut rng, lu);
    let v = random_profile(env.grid(), &mut rng, lv);
    PopulationState::new(u, v).expect("positive by construction")
}
